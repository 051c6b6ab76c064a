//! He–CO/Pt(111) interaction potentials and analytic Morse-well results.
//!
//! V(x, z) = D[(1 − e^{−α(z − z_m)})² − 1] + 4ε[(σ/r)¹² − (σ/r)⁶], r = √(x² + z²).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// σ obtained from [`calibrate_sigma`] with a 2.96 meV on-axis well.
pub const CALIBRATED_SIGMA: f64 = 3.130_656_160;
/// On-axis well depth that fixes σ.
pub const ON_AXIS_WELL_DEPTH: f64 = 2.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorseParams {
    /// Well depth (meV).
    pub d: f64,
    /// Inverse range (Å⁻¹).
    pub alpha: f64,
    /// Minimum position (Å).
    pub z_m: f64,
}

impl Default for MorseParams {
    fn default() -> Self {
        Self {
            d: 4.0,
            alpha: 1.13,
            z_m: 1.22,
        }
    }
}

impl MorseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.alpha > 0.0 && self.z_m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Morse parameters need D > 0 and alpha > 0, got {self:?}"
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        let e = (-self.alpha * (z - self.z_m)).exp();
        self.d * ((1.0 - e) * (1.0 - e) - 1.0)
    }

    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        let e = (-self.alpha * (z - self.z_m)).exp();
        2.0 * self.d * self.alpha * (1.0 - e) * e
    }

    /// Height at which the Morse term equals `energy` on the repulsive side.
    pub fn inner_crossing(&self, energy: f64) -> Result<f64> {
        if energy <= -self.d {
            return Err(Error::Domain(format!("energy {energy} is below the well bottom")));
        }
        let e = 1.0 + (1.0 + energy / self.d).sqrt();
        Ok(self.z_m - e.ln() / self.alpha)
    }

    /// Harmonic quantum ħΩ = 2α√(D·ħ²/2m) in meV.
    pub fn harmonic_quantum(&self, constants: &PhysicalConstants) -> f64 {
        2.0 * self.alpha * (self.d * constants.hbar2_over_2m).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LennardJonesParams {
    /// Well depth (meV).
    pub epsilon: f64,
    /// Zero-crossing radius (Å).
    pub sigma: f64,
}

impl Default for LennardJonesParams {
    fn default() -> Self {
        Self {
            epsilon: 2.37,
            sigma: CALIBRATED_SIGMA,
        }
    }
}

impl LennardJonesParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Lennard-Jones parameters need epsilon > 0 and sigma > 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardWallParams {
    /// Adsorbate radius (Å).
    pub a: f64,
    /// Flat-wall height above the adsorbate centre (Å).
    pub z_r: f64,
}

impl Default for HardWallParams {
    fn default() -> Self {
        Self { a: 2.86, z_r: 0.28 }
    }
}

impl HardWallParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.z_r >= 0.0 && self.z_r < self.a) {
            return Err(Error::InvalidParameter(format!(
                "hard wall needs a > 0 and 0 <= z_r < a, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelVariant {
    Full,
    RepulsiveAdsorbate,
    FlatSurfaceOnly,
    HardWall,
}

impl ModelVariant {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Full => "full",
            Self::RepulsiveAdsorbate => "repulsive",
            Self::FlatSurfaceOnly => "flat",
            Self::HardWall => "hardwall",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionModel {
    pub variant: ModelVariant,
    pub morse: MorseParams,
    pub lj: LennardJonesParams,
    pub hardwall: HardWallParams,
}

impl Default for InteractionModel {
    fn default() -> Self {
        Self::new(ModelVariant::Full)
    }
}

impl InteractionModel {
    pub fn new(variant: ModelVariant) -> Self {
        Self {
            variant,
            morse: MorseParams::default(),
            lj: LennardJonesParams::default(),
            hardwall: HardWallParams::default(),
        }
    }

    pub fn with_variant(&self, variant: ModelVariant) -> Self {
        Self { variant, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        self.morse.validate()?;
        self.lj.validate()?;
        self.hardwall.validate()
    }

    fn check_smooth(&self) -> Result<()> {
        if self.variant == ModelVariant::HardWall {
            return Err(Error::Domain(
                "the hard-wall model has no finite potential energy".into(),
            ));
        }
        Ok(())
    }

    /// Potential energy in meV.
    pub fn potential(&self, x: f64, z: f64) -> Result<f64> {
        self.check_smooth()?;
        let surface = self.morse.value(z);
        if self.variant == ModelVariant::FlatSurfaceOnly {
            return Ok(surface);
        }
        let r2 = x * x + z * z;
        if r2 == 0.0 {
            return Err(Error::SingularInput("r = 0 in the Lennard-Jones term".into()));
        }
        let s6 = (self.lj.sigma * self.lj.sigma / r2).powi(3);
        let four_eps = 4.0 * self.lj.epsilon;
        let adsorbate = match self.variant {
            ModelVariant::RepulsiveAdsorbate => four_eps * s6 * s6,
            _ => four_eps * (s6 * s6 - s6),
        };
        Ok(surface + adsorbate)
    }

    /// (∂V/∂x, ∂V/∂z) in meV/Å.
    pub fn gradient(&self, x: f64, z: f64) -> Result<(f64, f64)> {
        self.potential_and_gradient(x, z).map(|(_, g)| g)
    }

    pub fn potential_and_gradient(&self, x: f64, z: f64) -> Result<(f64, (f64, f64))> {
        self.check_smooth()?;
        let e = (-self.morse.alpha * (z - self.morse.z_m)).exp();
        let mut v = self.morse.d * ((1.0 - e) * (1.0 - e) - 1.0);
        let mut dvdz = 2.0 * self.morse.d * self.morse.alpha * (1.0 - e) * e;
        let mut dvdx = 0.0;
        if self.variant != ModelVariant::FlatSurfaceOnly {
            let r2 = x * x + z * z;
            if r2 == 0.0 {
                return Err(Error::SingularInput("r = 0 in the Lennard-Jones term".into()));
            }
            let s6 = (self.lj.sigma * self.lj.sigma / r2).powi(3);
            let four_eps = 4.0 * self.lj.epsilon;
            // dV/dr · 1/r, so that ∂V/∂x = x · radial.
            let (lj, radial) = match self.variant {
                ModelVariant::RepulsiveAdsorbate => {
                    (four_eps * s6 * s6, -12.0 * four_eps * s6 * s6 / r2)
                }
                _ => (
                    four_eps * (s6 * s6 - s6),
                    four_eps * (-12.0 * s6 * s6 + 6.0 * s6) / r2,
                ),
            };
            v += lj;
            dvdx = x * radial;
            dvdz += z * radial;
        }
        Ok((v, (dvdx, dvdz)))
    }
}

/// Classical turning points (z₋, z₊) of the Morse well at perpendicular energy `e_z`.
pub fn morse_turning_points(params: &MorseParams, e_z: f64) -> Result<(f64, f64)> {
    if !(e_z > -params.d && e_z < 0.0) {
        return Err(Error::Domain(format!(
            "turning points need -D < E_z < 0, got E_z = {e_z}"
        )));
    }
    let s = (1.0 - e_z.abs() / params.d).sqrt();
    let z_minus = params.z_m - (1.0 + s).ln() / params.alpha;
    let z_plus = params.z_m - (1.0 - s).ln() / params.alpha;
    Ok((z_minus, z_plus))
}

/// Angular frequency of bound Morse motion, ω = α√(2|E_z|/m), in ps⁻¹.
pub fn morse_frequency(params: &MorseParams, e_z: f64, constants: &PhysicalConstants) -> Result<f64> {
    if !(e_z >= -params.d && e_z < 0.0) {
        return Err(Error::Domain(format!(
            "bound motion needs -D <= E_z < 0, got E_z = {e_z}"
        )));
    }
    Ok(params.alpha * (2.0 * e_z.abs() / constants.mass()).sqrt())
}

/// Distance travelled along x during one z-oscillation of a trapped atom.
pub fn jump_length(params: &MorseParams, e_i: f64, e_z: f64) -> Result<f64> {
    if e_z >= 0.0 {
        return Err(Error::Domain(format!("no bound motion for E_z = {e_z} >= 0")));
    }
    if e_i <= 0.0 {
        return Err(Error::Domain(format!("incident energy must be positive, got {e_i}")));
    }
    Ok(2.0 * PI / params.alpha * ((e_i - e_z) / e_z.abs()).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStateSet {
    /// Energies relative to dissociation, ascending.
    pub energies: Vec<f64>,
    /// Harmonic quantum ħΩ (meV).
    pub hbar_omega: f64,
}

impl BoundStateSet {
    pub fn count(&self) -> usize {
        self.energies.len()
    }
}

/// Morse eigenvalues E_n = ħΩ(n+½)[1 − ħΩ(n+½)/4D] − D, kept while the level spacing stays non-negative.
pub fn morse_bound_states(params: &MorseParams, constants: &PhysicalConstants) -> Result<BoundStateSet> {
    params.validate()?;
    let hw = params.harmonic_quantum(constants);
    let level = |n: usize| {
        let v = hw * (n as f64 + 0.5);
        v * (1.0 - v / (4.0 * params.d)) - params.d
    };
    let mut energies = vec![level(0)];
    for n in 1.. {
        let e = level(n);
        if e - energies[n - 1] < 0.0 {
            break;
        }
        energies.push(e);
    }
    Ok(BoundStateSet {
        energies,
        hbar_omega: hw,
    })
}

/// Minimum of V(x_line, z) over z, returned as (z_min, V_min).
pub fn minimum_along_z(model: &InteractionModel, x_line: f64) -> Result<(f64, f64)> {
    const Z_LO: f64 = 0.2;
    const Z_HI: f64 = 20.0;
    const STEP: f64 = 0.005;
    let f = |z: f64| model.potential(x_line, z);
    let n = ((Z_HI - Z_LO) / STEP) as usize;
    let mut best = (Z_LO, f(Z_LO)?);
    for i in 1..=n {
        let z = Z_LO + i as f64 * STEP;
        let v = f(z)?;
        if v < best.1 {
            best = (z, v);
        }
    }
    let (mut lo, mut hi) = (best.0 - STEP, best.0 + STEP);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while hi - lo > 1e-10 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d)?;
        }
    }
    let z = 0.5 * (lo + hi);
    Ok((z, f(z)?))
}

/// Depth of the on-axis well of the full model for a given σ.
pub fn on_axis_well_depth(morse: &MorseParams, epsilon: f64, sigma: f64) -> Result<f64> {
    let model = InteractionModel {
        variant: ModelVariant::Full,
        morse: *morse,
        lj: LennardJonesParams { epsilon, sigma },
        hardwall: HardWallParams::default(),
    };
    Ok(-minimum_along_z(&model, 0.0)?.1)
}

/// Finds σ ∈ [1, 6] Å so that the on-axis minimum of the full potential is −`target_well_depth`.
pub fn calibrate_sigma(target_well_depth: f64, morse: &MorseParams, epsilon: f64) -> Result<f64> {
    const SIGMA_LO: f64 = 1.0;
    const SIGMA_HI: f64 = 6.0;
    morse.validate()?;
    let residual = |s: f64| on_axis_well_depth(morse, epsilon, s).map(|d| d - target_well_depth);
    let (mut lo, mut hi) = (SIGMA_LO, SIGMA_HI);
    let (r_lo, r_hi) = (residual(lo)?, residual(hi)?);
    let depth_scan = || -> Result<String> {
        let mut scan = String::from("sigma_A,well_depth_meV\n");
        for i in 0..=10 {
            let s = SIGMA_LO + (SIGMA_HI - SIGMA_LO) * i as f64 / 10.0;
            let d = on_axis_well_depth(morse, epsilon, s)?;
            scan.push_str(&format!("{s:.2},{d:.6}\n"));
        }
        Ok(scan)
    };
    if !(epsilon > 0.0) || r_lo.signum() == r_hi.signum() {
        return Err(Error::Calibration {
            message: format!(
                "target depth {target_well_depth} meV is not bracketed for sigma in [{SIGMA_LO}, {SIGMA_HI}] A"
            ),
            scan: depth_scan()?,
        });
    }
    let rising = r_hi > r_lo;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid)?;
        if (r > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let sigma = 0.5 * (lo + hi);
    // A vanishing adsorbate well leaves the depth flat in σ, so the root pins nothing down.
    let slope = (residual(sigma + 1e-3)? - residual(sigma - 1e-3)?) / 2e-3;
    if slope.abs() < 1e-3 {
        return Err(Error::Calibration {
            message: format!("well depth is insensitive to sigma near {sigma} A (slope {slope:e} meV/A)"),
            scan: depth_scan()?,
        });
    }
    Ok(sigma)
}

/// Largest |x| on the V = `level` contour around the adsorbate, above the flat-surface crossing.
pub fn equipotential_half_width(model: &InteractionModel, level: f64) -> Result<f64> {
    let z_wall = model.morse.inner_crossing(level.min(1e6))?;
    let mut widest: f64 = 0.0;
    let nz = 2000;
    for i in 1..=nz {
        let z = z_wall + 1e-6 + (8.0 - z_wall) * i as f64 / nz as f64;
        if model.potential(0.0, z)? < level {
            continue;
        }
        let (mut lo, mut hi) = (0.0, 0.0);
        let mut x = 0.0;
        while x < 12.0 {
            let next = x + 0.01;
            if model.potential(next, z)? < level {
                lo = x;
                hi = next;
                break;
            }
            x = next;
        }
        if hi == 0.0 {
            continue;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if model.potential(mid, z)? >= level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        widest = widest.max(0.5 * (lo + hi));
    }
    Ok(widest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn morse_minimum_is_minus_depth() {
        let m = InteractionModel::new(ModelVariant::FlatSurfaceOnly);
        assert!((m.potential(3.0, 1.22).unwrap() + 4.0).abs() < 1e-14);
        assert!(m.gradient(3.0, 1.22).unwrap().1.abs() < 1e-14);
    }

    #[test]
    fn origin_is_singular() {
        let m = InteractionModel::default();
        assert!(matches!(m.potential(0.0, 0.0), Err(Error::SingularInput(_))));
        assert!(m.gradient(0.0, 0.0).is_err());
    }

    #[test]
    fn hard_wall_has_no_energy() {
        let m = InteractionModel::new(ModelVariant::HardWall);
        assert!(m.potential(1.0, 1.0).is_err());
    }

    #[test]
    fn turning_points_domain() {
        let p = MorseParams::default();
        assert!(morse_turning_points(&p, 0.1).is_err());
        assert!(morse_turning_points(&p, -4.5).is_err());
        let (a, b) = morse_turning_points(&p, -4.0 + 1e-12).unwrap();
        assert!((a - 1.22).abs() < 1e-5 && (b - 1.22).abs() < 1e-5);
    }

    #[test]
    fn frequency_limits() {
        let p = MorseParams::default();
        let c = PhysicalConstants::helium4();
        let w = morse_frequency(&p, -p.d, &c).unwrap();
        assert!((c.hbar * w - p.harmonic_quantum(&c)).abs() < 1e-12);
        assert!(morse_frequency(&p, -1e-12, &c).unwrap() < 1e-4);
        assert!(morse_frequency(&p, 0.0, &c).is_err());
    }

    #[test]
    fn calibration_rejects_missing_adsorbate() {
        let p = MorseParams::default();
        assert!(matches!(
            calibrate_sigma(4.0, &p, 0.0),
            Err(Error::Calibration { .. })
        ));
    }
}
