use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use super::grid::Grid2D;
use super::wavefield::WaveField;
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::spectrum::DiffractionSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SMatrixEntry {
    /// Reciprocal-lattice index of the cell.
    pub n: i64,
    pub k_dx: f64,
    pub k_dz: f64,
    pub delta_k: f64,
    pub amplitude: Complex64,
}

/// Flux-normalized amplitudes of the outgoing wave on the cell's reciprocal lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SMatrixRow {
    pub label: String,
    pub e_i: f64,
    pub theta_i: f64,
    pub k_ix: f64,
    pub cell: (f64, f64),
    pub cell_length: f64,
    pub z_analysis: f64,
    pub z_top: f64,
    pub t: f64,
    pub grid: Grid2D,
    pub entries: Vec<SMatrixEntry>,
    /// Amplitudes before plane-wave removal, when it was applied.
    pub raw: Option<Vec<Complex64>>,
    /// Upward-moving probability in the cell window over incident probability in the cell.
    pub window_probability: f64,
    /// Share of the window probability still moving toward the surface.
    pub downward_fraction: f64,
}

impl SMatrixRow {
    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.amplitude.norm_sqr()).collect()
    }

    pub fn total_probability(&self) -> f64 {
        self.probabilities().iter().sum()
    }

    pub fn specular(&self) -> Option<&SMatrixEntry> {
        self.entries.iter().find(|e| e.n == 0)
    }

    fn same_setup(&self, other: &Self) -> bool {
        self.grid == other.grid
            && self.cell == other.cell
            && self.z_analysis == other.z_analysis
            && self.z_top == other.z_top
            && self.e_i == other.e_i
            && self.theta_i == other.theta_i
            && (self.t - other.t).abs() < 1e-9
            && self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(a, b)| a.n == b.n)
    }
}

/// Incidence, analysis window and incident normalization shared by the runs of one study.
#[derive(Debug, Clone)]
pub struct SMatrixSetup {
    pub e_i: f64,
    pub theta_i: f64,
    pub cell: (f64, f64),
    pub z_analysis: f64,
    pub z_top: f64,
    /// Largest tolerated downward share of the window probability.
    pub max_downward_fraction: f64,
    /// Largest tolerated |ψ|² on the window's lower and upper rows, relative to the window maximum.
    pub max_boundary_density: f64,
    grid: Grid2D,
    k: f64,
    k_ix: f64,
    k_iz: f64,
    a_in: Complex64,
    p_in: f64,
}

/// Grid columns of the cell and, for every grid column, the cell column it folds onto.
/// The cell length must be a whole number of grid spacings.
fn cell_folding(grid: &Grid2D, cell: (f64, f64)) -> Result<(Vec<usize>, Vec<usize>)> {
    let dx = grid.dx();
    let n_c = ((cell.1 - cell.0) / dx).round() as usize;
    if n_c == 0 || ((cell.1 - cell.0) / dx - n_c as f64).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "cell length {} A is not a multiple of dx = {dx} A",
            cell.1 - cell.0
        )));
    }
    let first = ((cell.0 - grid.x_min) / dx).round() as i64;
    if ((cell.0 - grid.x_min) / dx - first as f64).abs() > 1e-6 {
        return Err(Error::InvalidParameter(format!("cell edge {} A is not on a grid column", cell.0)));
    }
    let cols = (0..n_c).map(|j| first as usize + j).collect();
    let fold = (0..grid.nx)
        .map(|ix| (ix as i64 - first).rem_euclid(n_c as i64) as usize)
        .collect();
    Ok((cols, fold))
}

/// Sums every column onto its image in the cell (supercell periodization).
fn fold_columns(columns: Vec<Vec<Complex64>>, fold: &[usize], n_c: usize) -> Vec<Vec<Complex64>> {
    let len = columns.first().map_or(0, |c| c.len());
    let mut out = vec![vec![Complex64::new(0.0, 0.0); len]; n_c];
    for (col, &j) in columns.iter().zip(fold) {
        for (o, v) in out[j].iter_mut().zip(col) {
            *o += *v;
        }
    }
    out
}

impl SMatrixSetup {
    /// `psi0` is the incident field used for normalization; `z_top` defaults to the grid top.
    pub fn new(
        psi0: &WaveField,
        e_i: f64,
        theta_i: f64,
        cell: (f64, f64),
        z_analysis: f64,
        z_top: Option<f64>,
        constants: &PhysicalConstants,
    ) -> Result<Self> {
        let grid = psi0.grid;
        let z_top = z_top.unwrap_or(grid.z_max);
        if !(cell.1 > cell.0) || cell.0 < grid.x_min || cell.1 > grid.x_max {
            return Err(Error::InvalidParameter(format!("cell {cell:?} outside the grid")));
        }
        if !(z_top > z_analysis) || z_analysis < grid.z_min || z_top > grid.z_max {
            return Err(Error::InvalidParameter(format!(
                "analysis window [{z_analysis}, {z_top}] outside the grid"
            )));
        }
        if !(e_i > 0.0) {
            return Err(Error::InvalidParameter("E_i must be positive".into()));
        }
        let k = constants.wavenumber(e_i);
        let (k_ix, k_iz) = (k * theta_i.sin(), k * theta_i.cos());
        let (cols, fold) = cell_folding(&grid, cell)?;
        let columns = (0..grid.nx)
            .map(|ix| psi0.amplitudes[ix * grid.nz..(ix + 1) * grid.nz].to_vec())
            .collect();
        let folded = fold_columns(columns, &fold, cols.len());
        let mut a_in = Complex64::new(0.0, 0.0);
        let mut p_in = 0.0;
        for (col, &ix) in folded.iter().zip(&cols) {
            let x = grid.x(ix);
            for (iz, v) in col.iter().enumerate() {
                a_in += v * Complex64::from_polar(1.0, -(k_ix * x - k_iz * grid.z(iz)));
                p_in += v.norm_sqr();
            }
        }
        let area = grid.cell_area();
        Ok(Self {
            e_i,
            theta_i,
            cell,
            z_analysis,
            z_top,
            max_downward_fraction: 1e-3,
            max_boundary_density: 1e-3,
            grid,
            k,
            k_ix,
            k_iz,
            a_in: a_in * area,
            p_in: p_in * area,
        })
    }

    /// Projects the upward-moving part of `psi` onto outgoing plane waves.
    pub fn extract(&self, psi: &WaveField) -> Result<SMatrixRow> {
        let grid = psi.grid;
        if grid != self.grid {
            return Err(Error::Mismatch("field and setup use different grids".into()));
        }
        let (cols, fold) = cell_folding(&grid, self.cell)?;
        let rows: Vec<usize> = (0..grid.nz)
            .filter(|&iz| {
                let z = grid.z(iz);
                z >= self.z_analysis && z < self.z_top
            })
            .collect();
        if rows.len() < 2 {
            return Err(Error::InvalidParameter("analysis window holds fewer than two rows".into()));
        }
        let (up, down_prob) = upward_part(psi, &fold, cols.len(), &rows);
        let area = grid.cell_area();
        let up_prob: f64 = up.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>() * area;
        let downward_fraction = down_prob / (up_prob + down_prob).max(f64::MIN_POSITIVE);
        if downward_fraction > self.max_downward_fraction {
            return Err(Error::StaleExtraction(format!(
                "{:.2e} of the window probability still moves toward the surface at t = {:.3} ps",
                downward_fraction, psi.t
            )));
        }
        let peak = up.iter().flatten().map(|c| c.norm_sqr()).fold(0.0, f64::max);
        let first = up.iter().map(|col| col[0].norm_sqr()).fold(0.0, f64::max);
        let last = up.iter().map(|col| col[col.len() - 1].norm_sqr()).fold(0.0, f64::max);
        if first > self.max_boundary_density * peak {
            return Err(Error::StaleExtraction(format!(
                "outgoing wave still crossing z = {} A at t = {:.3} ps (edge density {:.2e} of peak)",
                self.z_analysis,
                psi.t,
                first / peak
            )));
        }
        if last > self.max_boundary_density * peak {
            return Err(Error::StaleExtraction(format!(
                "outgoing wave already reaches the window top z = {} A at t = {:.3} ps (edge density {:.2e} of peak)",
                self.z_top,
                psi.t,
                last / peak
            )));
        }

        let cell_length = cols.len() as f64 * grid.dx();
        let g = 2.0 * std::f64::consts::PI / cell_length;
        let n_lo = ((-self.k - self.k_ix) / g).ceil() as i64;
        let n_hi = ((self.k - self.k_ix) / g).floor() as i64;
        let xs: Vec<f64> = cols.iter().map(|&ix| grid.x(ix)).collect();
        let zs: Vec<f64> = rows.iter().map(|&iz| grid.z(iz)).collect();
        let mut entries = Vec::new();
        for n in n_lo..=n_hi {
            let k_dx = self.k_ix + g * n as f64;
            let kz2 = self.k * self.k - k_dx * k_dx;
            if kz2 <= 0.0 {
                continue;
            }
            let k_dz = kz2.sqrt();
            let phase_z: Vec<Complex64> = zs.iter().map(|z| Complex64::from_polar(1.0, -k_dz * z)).collect();
            let mut a = Complex64::new(0.0, 0.0);
            for (col, x) in up.iter().zip(&xs) {
                let s: Complex64 = col.iter().zip(&phase_z).map(|(v, p)| v * p).sum();
                a += s * Complex64::from_polar(1.0, -k_dx * x);
            }
            let amplitude = a * area / self.a_in * (self.k_iz / k_dz).sqrt();
            entries.push(SMatrixEntry {
                n,
                k_dx,
                k_dz,
                delta_k: k_dx - self.k_ix,
                amplitude,
            });
        }
        Ok(SMatrixRow {
            label: "tdse".into(),
            e_i: self.e_i,
            theta_i: self.theta_i,
            k_ix: self.k_ix,
            cell: self.cell,
            cell_length,
            z_analysis: self.z_analysis,
            z_top: self.z_top,
            t: psi.t,
            grid,
            entries,
            raw: None,
            window_probability: up_prob / self.p_in,
            downward_fraction,
        })
    }
}

/// Upward-moving (k_z > 0) part of the field folded onto the cell and restricted to the
/// window rows, plus the downward-moving probability inside the window.
fn upward_part(psi: &WaveField, fold: &[usize], n_c: usize, rows: &[usize]) -> (Vec<Vec<Complex64>>, f64) {
    let grid = psi.grid;
    let nz = grid.nz;
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(nz);
    let inv = planner.plan_fft_inverse(nz);
    let scale = 1.0 / nz as f64;
    let columns = (0..grid.nx)
        .map(|ix| psi.amplitudes[ix * nz..(ix + 1) * nz].to_vec())
        .collect();
    let folded = fold_columns(columns, fold, n_c);
    let mut down_prob = 0.0;
    let mut out = Vec::with_capacity(n_c);
    for mut spec in folded {
        fwd.process(&mut spec);
        let mut up = spec.clone();
        let mut down = spec;
        for m in 0..nz {
            // Index 0 is k = 0 and nz/2 the Nyquist mode; neither counts as upward.
            if m >= 1 && m < nz / 2 {
                down[m] = Complex64::new(0.0, 0.0);
            } else {
                up[m] = Complex64::new(0.0, 0.0);
            }
        }
        inv.process(&mut up);
        inv.process(&mut down);
        down_prob += rows.iter().map(|&iz| (down[iz] * scale).norm_sqr()).sum::<f64>();
        out.push(rows.iter().map(|&iz| up[iz] * scale).collect());
    }
    (out, down_prob * grid.cell_area())
}

/// One-shot extraction with the normalization taken from `psi0`.
pub fn extract_smatrix(
    psi: &WaveField,
    psi0: &WaveField,
    e_i: f64,
    theta_i: f64,
    cell: (f64, f64),
    z_analysis: f64,
    constants: &PhysicalConstants,
) -> Result<SMatrixRow> {
    SMatrixSetup::new(psi0, e_i, theta_i, cell, z_analysis, None, constants)?.extract(psi)
}

/// S = S_full − S_flat entry by entry; the result keeps S_full as `raw`.
pub fn remove_plane_wave_contribution(full: &SMatrixRow, flat: &SMatrixRow) -> Result<SMatrixRow> {
    if !full.same_setup(flat) {
        return Err(Error::Mismatch(
            "rows differ in grid, cell, window, incidence or analysis time".into(),
        ));
    }
    let mut out = full.clone();
    out.raw = Some(full.entries.iter().map(|e| e.amplitude).collect());
    for (e, f) in out.entries.iter_mut().zip(&flat.entries) {
        e.amplitude -= f.amplitude;
    }
    Ok(out)
}

/// dR/dθ_d ∝ k_dz |S|², peak-normalized, against ΔK.
pub fn reflection_coefficient(s: &SMatrixRow, constants: &PhysicalConstants) -> DiffractionSpectrum {
    let k = constants.wavenumber(s.e_i);
    let weigh = |amps: &mut dyn Iterator<Item = (f64, Complex64)>| -> Vec<f64> {
        let v: Vec<f64> = amps.map(|(kz, a)| kz * a.norm_sqr()).collect();
        let peak = v.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 {
            v.iter().map(|x| x / peak).collect()
        } else {
            v
        }
    };
    let intensity = weigh(&mut s.entries.iter().map(|e| (e.k_dz, e.amplitude)));
    let intensity_raw = s
        .raw
        .as_ref()
        .map(|raw| weigh(&mut s.entries.iter().zip(raw).map(|(e, a)| (e.k_dz, *a))));
    DiffractionSpectrum {
        model: s.label.clone(),
        e_i: s.e_i,
        theta_i: s.theta_i,
        delta_k: s.entries.iter().map(|e| e.delta_k).collect(),
        theta_d: s.entries.iter().map(|e| (e.k_dx / k).clamp(-1.0, 1.0).asin()).collect(),
        intensity,
        intensity_raw,
    }
}
