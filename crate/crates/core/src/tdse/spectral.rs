use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use super::grid::Grid2D;

const BLOCK: usize = 32;

/// Two-dimensional FFT on a [`Grid2D`] layout (z fastest), done as batched
/// row transforms around a cache-blocked transpose.
///
/// The spectrum produced by [`Spectral::forward`] is stored transposed, kx fastest:
/// `spectrum[iz * nx + ix]` holds the (kx[ix], kz[iz]) coefficient.
pub struct Spectral {
    nx: usize,
    nz: usize,
    fx: Arc<dyn Fft<f64>>,
    ix: Arc<dyn Fft<f64>>,
    fz: Arc<dyn Fft<f64>>,
    iz: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    pub kx: Vec<f64>,
    pub kz: Vec<f64>,
}

impl Clone for Spectral {
    fn clone(&self) -> Self {
        Self {
            nx: self.nx,
            nz: self.nz,
            fx: Arc::clone(&self.fx),
            ix: Arc::clone(&self.ix),
            fz: Arc::clone(&self.fz),
            iz: Arc::clone(&self.iz),
            scratch: self.scratch.clone(),
            kx: self.kx.clone(),
            kz: self.kz.clone(),
        }
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
    // src is rows x cols (cols fastest); dst becomes cols x rows.
    for r0 in (0..rows).step_by(BLOCK) {
        for c0 in (0..cols).step_by(BLOCK) {
            for r in r0..(r0 + BLOCK).min(rows) {
                let row = &src[r * cols..(r + 1) * cols];
                for c in c0..(c0 + BLOCK).min(cols) {
                    dst[c * rows + r] = row[c];
                }
            }
        }
    }
}

impl Spectral {
    pub fn new(grid: &Grid2D) -> Self {
        let mut planner = FftPlanner::new();
        let fx = planner.plan_fft_forward(grid.nx);
        let ix = planner.plan_fft_inverse(grid.nx);
        let fz = planner.plan_fft_forward(grid.nz);
        let iz = planner.plan_fft_inverse(grid.nz);
        let scratch_len = [&fx, &ix, &fz, &iz]
            .iter()
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            nx: grid.nx,
            nz: grid.nz,
            fx,
            ix,
            fz,
            iz,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            kx: grid.kx(),
            kz: grid.kz(),
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized forward transform of `field` (grid layout) into `spectrum` (transposed layout).
    /// `field` is used as workspace and left holding the z-transformed rows.
    pub fn forward(&mut self, field: &mut [Complex64], spectrum: &mut [Complex64]) {
        self.fz.process_with_scratch(field, &mut self.scratch);
        transpose(field, spectrum, self.nx, self.nz);
        self.fx.process_with_scratch(spectrum, &mut self.scratch);
    }

    /// Inverse of [`Spectral::forward`], including the 1/(nx nz) factor.
    /// `spectrum` is used as workspace.
    pub fn inverse(&mut self, spectrum: &mut [Complex64], field: &mut [Complex64]) {
        self.ix.process_with_scratch(spectrum, &mut self.scratch);
        transpose(spectrum, field, self.nz, self.nx);
        self.iz.process_with_scratch(field, &mut self.scratch);
        let s = 1.0 / self.len() as f64;
        field.iter_mut().for_each(|c| *c *= s);
    }

    /// Index into the transposed spectrum layout.
    #[inline]
    pub fn spectral_index(&self, ix: usize, iz: usize) -> usize {
        iz * self.nx + ix
    }

    /// Multiplier table in transposed layout, `f(kx, kz)`.
    pub fn table(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for &kz in &self.kz {
            for &kx in &self.kx {
                out.push(f(kx, kz));
            }
        }
        out
    }

    /// Replaces `field` by F⁻¹[m · F[field]]; `work` must have the grid length.
    pub fn apply_multiplier(&mut self, field: &mut [Complex64], multiplier: &[f64], work: &mut [Complex64]) {
        self.forward(field, work);
        work.iter_mut().zip(multiplier).for_each(|(c, m)| *c *= *m);
        self.inverse(work, field);
    }

    /// Spectral ∂/∂x and ∂/∂z. The Nyquist modes are dropped so that real
    /// and mirror-symmetric inputs keep their symmetry.
    pub fn gradient(&mut self, field: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut work = field.to_vec();
        let mut spec = vec![Complex64::new(0.0, 0.0); self.len()];
        self.forward(&mut work, &mut spec);
        let mut sx = spec.clone();
        let (nx, nz) = (self.nx, self.nz);
        for iz in 0..nz {
            for ix in 0..nx {
                let idx = iz * nx + ix;
                let kx = if 2 * ix == nx { 0.0 } else { self.kx[ix] };
                let kz = if 2 * iz == nz { 0.0 } else { self.kz[iz] };
                sx[idx] *= Complex64::new(0.0, kx);
                spec[idx] *= Complex64::new(0.0, kz);
            }
        }
        let mut gx = vec![Complex64::new(0.0, 0.0); self.len()];
        let mut gz = vec![Complex64::new(0.0, 0.0); self.len()];
        self.inverse(&mut sx, &mut gx);
        self.inverse(&mut spec, &mut gz);
        (gx, gz)
    }
}
