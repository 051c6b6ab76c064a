//! Physical constants in the meV / Å / ps unit system.

use serde::{Deserialize, Serialize};

/// ħc in meV·Å.
pub const HBAR_C_MEV_ANGSTROM: f64 = 1.973_27e6;
/// ⁴He rest energy in meV.
pub const HELIUM4_REST_ENERGY_MEV: f64 = 3.727_379e12;
/// ħ in meV·ps.
pub const HBAR_MEV_PS: f64 = 0.658_211_956_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// ħ²/2m in meV·Å².
    pub hbar2_over_2m: f64,
    /// ħ in meV·ps.
    pub hbar: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::helium4()
    }
}

impl PhysicalConstants {
    pub fn helium4() -> Self {
        Self {
            hbar2_over_2m: HBAR_C_MEV_ANGSTROM * HBAR_C_MEV_ANGSTROM
                / (2.0 * HELIUM4_REST_ENERGY_MEV),
            hbar: HBAR_MEV_PS,
        }
    }

    pub fn hbar2_over_m(&self) -> f64 {
        2.0 * self.hbar2_over_2m
    }

    /// Mass in meV·ps²/Å².
    pub fn mass(&self) -> f64 {
        self.hbar * self.hbar / self.hbar2_over_m()
    }

    /// ħ/m in Å²/ps.
    pub fn hbar_over_m(&self) -> f64 {
        self.hbar2_over_m() / self.hbar
    }

    /// Wavenumber k = √(E / (ħ²/2m)) in Å⁻¹.
    pub fn wavenumber(&self, energy: f64) -> f64 {
        (energy / self.hbar2_over_2m).sqrt()
    }

    /// Momentum magnitude √(2mE) in meV·ps/Å.
    pub fn momentum(&self, energy: f64) -> f64 {
        (2.0 * self.mass() * energy).sqrt()
    }

    pub fn de_broglie_wavelength(&self, energy: f64) -> f64 {
        2.0 * std::f64::consts::PI / self.wavenumber(energy)
    }

    /// Kinetic energy ħ²k²/2m.
    pub fn kinetic_energy(&self, k: f64) -> f64 {
        self.hbar2_over_2m * k * k
    }

    pub fn speed(&self, energy: f64) -> f64 {
        self.momentum(energy) / self.mass()
    }
}
