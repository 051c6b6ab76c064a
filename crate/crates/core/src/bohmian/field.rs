use num_complex::Complex64;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::tdse::{Grid2D, Spectral, WaveField};

/// Default |ψ| below which (relative to the field maximum) a point counts as a node.
pub const NODE_THRESHOLD: f64 = 1e-8;

/// ψ with its spectral x and z derivatives, ready for interpolation.
#[derive(Debug, Clone)]
pub struct GuidanceField {
    pub grid: Grid2D,
    pub t: f64,
    pub psi: Vec<Complex64>,
    pub dpsi_dx: Vec<Complex64>,
    pub dpsi_dz: Vec<Complex64>,
    pub max_abs: f64,
}

/// Interpolated ψ, ∂ψ/∂x, ∂ψ/∂z at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalField {
    pub psi: Complex64,
    pub dx: Complex64,
    pub dz: Complex64,
}

impl LocalField {
    /// v = (ħ/m) Im(∇ψ/ψ).
    pub fn velocity(&self, hbar_over_m: f64) -> (f64, f64) {
        let inv = 1.0 / self.psi;
        (hbar_over_m * (self.dx * inv).im, hbar_over_m * (self.dz * inv).im)
    }

    fn scaled_add(self, a: Complex64, other: Self, b: Complex64) -> Self {
        Self {
            psi: self.psi * a + other.psi * b,
            dx: self.dx * a + other.dx * b,
            dz: self.dz * a + other.dz * b,
        }
    }
}

/// Lagrange weights for `order` nodes at integer offsets 0..order, evaluated at `t`.
fn lagrange_weights(order: usize, t: f64, out: &mut [f64]) {
    for j in 0..order {
        let mut w = 1.0;
        for m in 0..order {
            if m != j {
                w *= (t - m as f64) / (j as f64 - m as f64);
            }
        }
        out[j] = w;
    }
}

impl GuidanceField {
    pub fn new(psi: &WaveField, spectral: &mut Spectral) -> Self {
        let (dpsi_dx, dpsi_dz) = spectral.gradient(&psi.amplitudes);
        Self::from_parts(psi.grid, psi.t, psi.amplitudes.clone(), dpsi_dx, dpsi_dz)
    }

    pub fn from_parts(
        grid: Grid2D,
        t: f64,
        psi: Vec<Complex64>,
        dpsi_dx: Vec<Complex64>,
        dpsi_dz: Vec<Complex64>,
    ) -> Self {
        let max_abs = psi.iter().map(|c| c.norm()).fold(0.0, f64::max);
        Self {
            grid,
            t,
            psi,
            dpsi_dx,
            dpsi_dz,
            max_abs,
        }
    }

    pub fn from_wavefield(psi: &WaveField) -> Self {
        Self::new(psi, &mut Spectral::new(&psi.grid))
    }

    /// True when the `order`-point stencil around (x, z) lies inside the grid.
    pub fn contains(&self, x: f64, z: f64, order: usize) -> bool {
        let (fx, fz) = self.grid.fractional(x, z);
        let h = (order / 2) as f64;
        fx >= h - 1.0 && fz >= h - 1.0 && fx <= (self.grid.nx as f64 - h) && fz <= (self.grid.nz as f64 - h)
    }

    /// Tensor-product Lagrange interpolation with `order` points per axis (even, 2..=10).
    pub fn sample(&self, x: f64, z: f64, order: usize) -> Result<LocalField> {
        if order < 2 || order > 10 || order % 2 != 0 {
            return Err(Error::InvalidParameter(format!("interpolation order {order} not in 2, 4, .., 10")));
        }
        if !self.contains(x, z, order) {
            return Err(Error::Domain(format!("point ({x}, {z}) too close to the grid edge")));
        }
        let g = &self.grid;
        let (fx, fz) = g.fractional(x, z);
        let h = order / 2 - 1;
        let ix0 = (fx.floor() as usize).saturating_sub(h).min(g.nx - order);
        let iz0 = (fz.floor() as usize).saturating_sub(h).min(g.nz - order);
        let mut wx = [0.0; 10];
        let mut wz = [0.0; 10];
        lagrange_weights(order, fx - ix0 as f64, &mut wx);
        lagrange_weights(order, fz - iz0 as f64, &mut wz);
        let zero = Complex64::new(0.0, 0.0);
        let (mut p, mut dx, mut dz) = (zero, zero, zero);
        for (a, wxa) in wx.iter().enumerate().take(order) {
            let base = (ix0 + a) * g.nz + iz0;
            let (mut rp, mut rx, mut rz) = (zero, zero, zero);
            for (b, wzb) in wz.iter().enumerate().take(order) {
                let i = base + b;
                rp += self.psi[i] * *wzb;
                rx += self.dpsi_dx[i] * *wzb;
                rz += self.dpsi_dz[i] * *wzb;
            }
            p += rp * *wxa;
            dx += rx * *wxa;
            dz += rz * *wxa;
        }
        Ok(LocalField { psi: p, dx, dz })
    }

    /// Guidance velocity at (x, z); a [`Error::NearNode`] signals |ψ| below `threshold`·max.
    pub fn velocity(
        &self,
        x: f64,
        z: f64,
        order: usize,
        threshold: f64,
        constants: &PhysicalConstants,
    ) -> Result<(f64, f64)> {
        let f = self.sample(x, z, order)?;
        let ratio = f.psi.norm() / self.max_abs;
        if !(ratio > threshold) {
            return Err(Error::NearNode { x, z, ratio });
        }
        Ok(f.velocity(constants.hbar_over_m()))
    }
}

/// Two consecutive fields with linear-in-ψ interpolation in time. An optional carrier
/// energy is factored out first so that the interpolation acts on the slow envelope.
pub struct FramePair<'a> {
    pub a: &'a GuidanceField,
    pub b: &'a GuidanceField,
    /// exp(iωΔt) applied to the later frame, ω = E_carrier/ħ.
    carrier: Complex64,
}

impl<'a> FramePair<'a> {
    pub fn new(a: &'a GuidanceField, b: &'a GuidanceField, carrier_energy: f64, constants: &PhysicalConstants) -> Self {
        let carrier = Complex64::from_polar(1.0, carrier_energy * (b.t - a.t) / constants.hbar);
        Self { a, b, carrier }
    }

    pub fn duration(&self) -> f64 {
        self.b.t - self.a.t
    }

    /// Velocity at fraction `s` ∈ [0, 1] of the interval.
    pub fn velocity(
        &self,
        s: f64,
        x: f64,
        z: f64,
        order: usize,
        threshold: f64,
        constants: &PhysicalConstants,
    ) -> Result<((f64, f64), f64)> {
        let fa = self.a.sample(x, z, order)?;
        let fb = self.b.sample(x, z, order)?;
        let f = fa.scaled_add(Complex64::new(1.0 - s, 0.0), fb, self.carrier * s);
        let max = (1.0 - s) * self.a.max_abs + s * self.b.max_abs;
        let ratio = f.psi.norm() / max;
        if !(ratio > threshold) {
            return Err(Error::NearNode { x, z, ratio });
        }
        Ok((f.velocity(constants.hbar_over_m()), ratio))
    }
}

/// Guidance velocity of a single field at one point.
pub fn velocity_at(
    psi: &WaveField,
    x: f64,
    z: f64,
    interpolation_order: usize,
    constants: &PhysicalConstants,
) -> Result<(f64, f64)> {
    GuidanceField::from_wavefield(psi).velocity(x, z, interpolation_order, NODE_THRESHOLD, constants)
}

/// Velocity on the grid points; NaN where |ψ| is below the node threshold.
#[derive(Debug, Clone)]
pub struct VelocityField {
    pub grid: Grid2D,
    pub t: f64,
    pub vx: Vec<f64>,
    pub vz: Vec<f64>,
}

impl VelocityField {
    pub fn from_guidance(field: &GuidanceField, threshold: f64, constants: &PhysicalConstants) -> Self {
        let hm = constants.hbar_over_m();
        let floor = threshold * field.max_abs;
        let mut vx = Vec::with_capacity(field.psi.len());
        let mut vz = Vec::with_capacity(field.psi.len());
        for i in 0..field.psi.len() {
            let p = field.psi[i];
            if p.norm() > floor {
                let f = LocalField {
                    psi: p,
                    dx: field.dpsi_dx[i],
                    dz: field.dpsi_dz[i],
                };
                let (a, b) = f.velocity(hm);
                vx.push(a);
                vz.push(b);
            } else {
                vx.push(f64::NAN);
                vz.push(f64::NAN);
            }
        }
        Self {
            grid: field.grid,
            t: field.t,
            vx,
            vz,
        }
    }

    pub fn from_wavefield(psi: &WaveField, constants: &PhysicalConstants) -> Self {
        Self::from_guidance(&GuidanceField::from_wavefield(psi), NODE_THRESHOLD, constants)
    }
}
