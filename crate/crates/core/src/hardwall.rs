//! Asymptotic (ka → ∞) diffraction amplitudes of the hard-wall adsorbate.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::io::Write;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::potential::HardWallParams;
use crate::spectrum::DiffractionSpectrum;

/// ΔK = k_i(sinθ_d − sinθ_i) in Å⁻¹.
pub fn parallel_momentum_transfer(
    e_i: f64,
    theta_i: f64,
    theta_d: f64,
    constants: &PhysicalConstants,
) -> f64 {
    constants.wavenumber(e_i) * (theta_d.sin() - theta_i.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AmplitudeDecomposition {
    pub f_total: Complex64,
    pub f_illuminated: Complex64,
    pub f_fraunhofer: Complex64,
    pub theta_d: f64,
    pub delta_k: f64,
}

fn sinc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        1.0 - u * u / 6.0 * (1.0 - u * u / 20.0)
    } else {
        u.sin() / u
    }
}

/// Amplitude of a hard cylinder of radius `a` at scattering angle `theta`.
///
/// `theta_d` echoes `theta` and `delta_k` is k·sinθ, the transfer at normal incidence.
pub fn cylinder_amplitude(theta: f64, k: f64, a: f64) -> AmplitudeDecomposition {
    let half = (0.5 * theta).sin();
    let illum = -(0.5 * a * half).sqrt() * Complex64::from_polar(1.0, -2.0 * k * a * half);
    let s = theta.sin();
    // (1 + cosθ)/sinθ · sin(ka sinθ) = (1 + cosθ)·ka·sinc(ka sinθ), finite at θ = 0 and zero at θ = π.
    let shape = if theta.abs() < 1e-6 {
        2.0 * k * a * (1.0 - theta * theta * (0.25 + (k * a).powi(2) / 6.0))
    } else {
        (1.0 + theta.cos()) * k * a * sinc(k * a * s)
    };
    let fraun = Complex64::from_polar(1.0, -FRAC_PI_4) / (2.0 * PI * k).sqrt() * shape;
    AmplitudeDecomposition {
        f_total: illum + fraun,
        f_illuminated: illum,
        f_fraunhofer: fraun,
        theta_d: theta,
        delta_k: k * s,
    }
}

/// Reflection-symmetrized decomposition f(|θ_d − θ_i|) − f(π − |θ_d + θ_i|), term by term.
pub fn symmetrized_decomposition(theta_i: f64, theta_d: f64, k: f64, a: f64) -> AmplitudeDecomposition {
    let direct = cylinder_amplitude((theta_d - theta_i).abs(), k, a);
    let mirror = cylinder_amplitude(PI - (theta_d + theta_i).abs(), k, a);
    AmplitudeDecomposition {
        f_total: direct.f_total - mirror.f_total,
        f_illuminated: direct.f_illuminated - mirror.f_illuminated,
        f_fraunhofer: direct.f_fraunhofer - mirror.f_fraunhofer,
        theta_d,
        delta_k: k * (theta_d.sin() - theta_i.sin()),
    }
}

pub fn symmetrized_amplitude(theta_i: f64, theta_d: f64, k: f64, a: f64) -> Complex64 {
    symmetrized_decomposition(theta_i, theta_d, k, a).f_total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardWallScan {
    /// Total intensity, normalized to a maximum of 1.
    pub spectrum: DiffractionSpectrum,
    /// Illuminated-face term with its mirror image, same normalization.
    pub illuminated: Vec<f64>,
    /// Fraunhofer term with its mirror image, same normalization.
    pub fraunhofer: Vec<f64>,
}

impl HardWallScan {
    /// CSV with columns theta_d_deg, delta_k, I_total, I_illum, I_fraun.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta_d_deg", "delta_k", "I_total", "I_illum", "I_fraun"])?;
        let s = &self.spectrum;
        for i in 0..s.len() {
            w.write_record([
                format!("{:.10}", s.theta_d[i].to_degrees()),
                format!("{:.10}", s.delta_k[i]),
                format!("{:.12e}", s.intensity[i]),
                format!("{:.12e}", self.illuminated[i]),
                format!("{:.12e}", self.fraunhofer[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Intensities over `n_angles` deflection angles spread evenly inside (−π/2, π/2).
pub fn hardwall_intensity_scan(
    e_i: f64,
    theta_i: f64,
    n_angles: usize,
    wall: &HardWallParams,
    constants: &PhysicalConstants,
) -> Result<HardWallScan> {
    if n_angles < 2 {
        return Err(Error::InvalidParameter("n_angles must be at least 2".into()));
    }
    if !(e_i > 0.0) {
        return Err(Error::InvalidParameter(format!("E_i must be positive, got {e_i}")));
    }
    wall.validate()?;
    let k = constants.wavenumber(e_i);
    let rows: Vec<AmplitudeDecomposition> = (0..n_angles)
        .into_par_iter()
        .map(|j| {
            let theta_d = -FRAC_PI_2 + PI * (j + 1) as f64 / (n_angles + 1) as f64;
            symmetrized_decomposition(theta_i, theta_d, k, wall.a)
        })
        .collect();
    let total: Vec<f64> = rows.iter().map(|r| r.f_total.norm_sqr()).collect();
    let peak = total.iter().cloned().fold(0.0, f64::max);
    let scale = if peak > 0.0 { 1.0 / peak } else { 1.0 };
    Ok(HardWallScan {
        spectrum: DiffractionSpectrum {
            model: "hardwall".into(),
            e_i,
            theta_i,
            delta_k: rows.iter().map(|r| r.delta_k).collect(),
            theta_d: rows.iter().map(|r| r.theta_d).collect(),
            intensity: total.iter().map(|v| v * scale).collect(),
            intensity_raw: None,
        },
        illuminated: rows.iter().map(|r| r.f_illuminated.norm_sqr() * scale).collect(),
        fraunhofer: rows.iter().map(|r| r.f_fraunhofer.norm_sqr() * scale).collect(),
    })
}

/// Interference phase 2ka[cos(θ/2) − sin(θ/2)] between the direct and mirrored
/// illuminated-face terms at normal incidence.
pub fn reflection_symmetry_phase(theta: f64, k: f64, a: f64) -> f64 {
    let t = theta.abs();
    2.0 * k * a * ((0.5 * t).cos() - (0.5 * t).sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_limit_is_finite() {
        let (k, a) = (4.375, 2.86);
        let f0 = cylinder_amplitude(0.0, k, a);
        let expected = 2.0 * k * a / (2.0 * PI * k).sqrt();
        assert!((f0.f_fraunhofer.norm() - expected).abs() < 1e-12);
        let near = cylinder_amplitude(1e-7, k, a);
        let above = cylinder_amplitude(2e-6, k, a);
        assert!((near.f_fraunhofer.norm() - expected).abs() / expected < 1e-9);
        assert!((above.f_fraunhofer.norm() - near.f_fraunhofer.norm()).abs() / expected < 1e-8);
    }

    #[test]
    fn backward_fraunhofer_vanishes() {
        assert_eq!(cylinder_amplitude(PI, 4.375, 2.86).f_fraunhofer.norm(), 0.0);
    }

    #[test]
    fn specular_transfer_is_zero() {
        let c = PhysicalConstants::helium4();
        assert_eq!(parallel_momentum_transfer(10.0, 0.3, 0.3, &c), 0.0);
    }
}
