use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::Grid2D;
use super::wavefield::WaveField;
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::fermatian::initial_conditions;

/// Edge amplitude (relative to the maximum) above which the comb counts as clipped.
pub const SUPPORT_TOLERANCE: f64 = 1e-8;

/// Row of identical Gaussians along x sharing one carrier wave vector.
///
/// Widths are standard deviations of the density of a single member, i.e. each
/// member is exp(−(x−x_j)²/4σ_x² − (z−z_c)²/4σ_z²).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialStateSpec {
    pub n_gaussians: usize,
    pub spacing: f64,
    pub sigma_x: f64,
    pub sigma_z: f64,
    pub center_x: f64,
    pub center_z: f64,
    pub e_i: f64,
    pub theta_i: f64,
}

impl Default for InitialStateSpec {
    fn default() -> Self {
        Self {
            n_gaussians: 250,
            spacing: 0.21,
            sigma_x: 0.84,
            sigma_z: 2.65,
            center_x: 0.0,
            center_z: 10.27,
            e_i: 10.0,
            theta_i: 0.0,
        }
    }
}

impl InitialStateSpec {
    pub fn new(e_i: f64, theta_i: f64) -> Self {
        Self {
            e_i,
            theta_i,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_gaussians == 0 {
            return Err(Error::InvalidParameter("n_gaussians must be positive".into()));
        }
        if !(self.sigma_x > 0.0 && self.sigma_z > 0.0 && self.spacing >= 0.0) {
            return Err(Error::InvalidParameter("Gaussian widths must be positive".into()));
        }
        if !(self.e_i > 0.0) {
            return Err(Error::InvalidParameter("E_i must be positive".into()));
        }
        Ok(())
    }

    /// Carrier wave vector (k_x, k_z) in Å⁻¹; k_z < 0 for an incoming beam.
    pub fn wave_vector(&self, constants: &PhysicalConstants) -> Result<(f64, f64)> {
        let (_, p) = initial_conditions(self.center_x, self.theta_i, self.e_i, self.center_z, constants)?;
        Ok((p.x / constants.hbar, p.z / constants.hbar))
    }

    /// Launch position of the comb centre; `center_x` is read as the impact parameter
    /// on the surface, so oblique beams start upstream.
    pub fn launch_x(&self) -> f64 {
        self.center_x - self.center_z * self.theta_i.tan()
    }

    pub fn centers(&self) -> Vec<f64> {
        let half = 0.5 * (self.n_gaussians as f64 - 1.0);
        let x0 = self.launch_x();
        (0..self.n_gaussians).map(|j| x0 + (j as f64 - half) * self.spacing).collect()
    }

    /// Unnormalized x envelope Σ_j exp(−(x−x_j)²/4σ_x²).
    pub fn x_envelope(&self, x: f64) -> f64 {
        let c = 1.0 / (4.0 * self.sigma_x * self.sigma_x);
        self.centers().iter().map(|xj| (-(x - xj).powi(2) * c).exp()).sum()
    }
}

pub fn build_initial_state(spec: &InitialStateSpec, grid: &Grid2D, constants: &PhysicalConstants) -> Result<WaveField> {
    spec.validate()?;
    grid.validate()?;
    let (kx, kz) = spec.wave_vector(constants)?;
    let cz = 1.0 / (4.0 * spec.sigma_z * spec.sigma_z);
    let cx = 1.0 / (4.0 * spec.sigma_x * spec.sigma_x);
    let centers = spec.centers();
    // Separable envelope: evaluate each factor once per row/column.
    let ex: Vec<f64> = (0..grid.nx)
        .map(|ix| {
            let x = grid.x(ix);
            centers.iter().map(|xj| (-(x - xj).powi(2) * cx).exp()).sum()
        })
        .collect();
    let ez: Vec<f64> = (0..grid.nz).map(|iz| (-(grid.z(iz) - spec.center_z).powi(2) * cz).exp()).collect();
    let px: Vec<Complex64> = (0..grid.nx).map(|ix| Complex64::from_polar(1.0, kx * grid.x(ix))).collect();
    let pz: Vec<Complex64> = (0..grid.nz).map(|iz| Complex64::from_polar(1.0, kz * grid.z(iz))).collect();
    let mut psi = WaveField::zeros(*grid);
    for ix in 0..grid.nx {
        let row = &mut psi.amplitudes[ix * grid.nz..(ix + 1) * grid.nz];
        let a = px[ix] * ex[ix];
        for iz in 0..grid.nz {
            row[iz] = a * pz[iz] * ez[iz];
        }
    }
    let edge = psi.edge_amplitude();
    if !(edge < SUPPORT_TOLERANCE) {
        return Err(Error::Support(format!(
            "initial state clipped by the grid: edge amplitude {edge:.3e} of maximum (limit {SUPPORT_TOLERANCE:e})"
        )));
    }
    psi.normalize();
    Ok(psi)
}
