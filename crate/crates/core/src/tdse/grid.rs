use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};

/// Periodic rectangular grid; x_max and z_max are excluded, so the point count
/// along each axis equals the number of cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid2D {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub nx: usize,
    pub nz: usize,
}

/// Region every production grid must cover (the 53 Å analysis cell and the scattering zone).
pub const MIN_EXTENT: (f64, f64, f64, f64) = (-26.5, 26.5, 0.5, 30.0);

impl Grid2D {
    pub fn new(x_min: f64, x_max: f64, z_min: f64, z_max: f64, nx: usize, nz: usize) -> Result<Self> {
        let g = Self {
            x_min,
            x_max,
            z_min,
            z_max,
            nx,
            nz,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_max > self.x_min && self.z_max > self.z_min) {
            return Err(Error::InvalidParameter(format!("empty grid extent: {self:?}")));
        }
        if !self.nx.is_power_of_two() || !self.nz.is_power_of_two() || self.nx < 4 || self.nz < 4 {
            return Err(Error::InvalidParameter(format!(
                "grid point counts must be powers of two >= 4, got {} x {}",
                self.nx, self.nz
            )));
        }
        Ok(())
    }

    /// Checks the λ_dB/8 spacing rule at `e_i` and coverage of [`MIN_EXTENT`].
    pub fn validate_for_run(&self, e_i: f64, constants: &PhysicalConstants) -> Result<()> {
        self.validate()?;
        let limit = constants.de_broglie_wavelength(e_i) / 8.0;
        let mut problems = Vec::new();
        if self.dx() > limit {
            problems.push(format!("dx = {:.4} A exceeds lambda/8 = {limit:.4} A", self.dx()));
        }
        if self.dz() > limit {
            problems.push(format!("dz = {:.4} A exceeds lambda/8 = {limit:.4} A", self.dz()));
        }
        let (x0, x1, z0, z1) = MIN_EXTENT;
        if self.x_min > x0 || self.x_max < x1 || self.z_min > z0 || self.z_max < z1 {
            problems.push(format!(
                "domain [{}, {}] x [{}, {}] does not contain [{x0}, {x1}] x [{z0}, {z1}]",
                self.x_min, self.x_max, self.z_min, self.z_max
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(problems.join("; ")))
        }
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / self.nz as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.dx()
    }

    pub fn z(&self, iz: usize) -> f64 {
        self.z_min + iz as f64 * self.dz()
    }

    /// Flat index, z fastest.
    #[inline]
    pub fn index(&self, ix: usize, iz: usize) -> usize {
        ix * self.nz + iz
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dz()
    }

    /// Angular wavenumbers in FFT order for `n` points spaced by `d`.
    pub fn wavenumbers(n: usize, d: f64) -> Vec<f64> {
        let l = n as f64 * d;
        (0..n)
            .map(|i| {
                let m = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
                2.0 * std::f64::consts::PI * m / l
            })
            .collect()
    }

    pub fn kx(&self) -> Vec<f64> {
        Self::wavenumbers(self.nx, self.dx())
    }

    pub fn kz(&self) -> Vec<f64> {
        Self::wavenumbers(self.nz, self.dz())
    }

    /// Largest kinetic energy representable on the grid (meV).
    pub fn max_kinetic_energy(&self, constants: &PhysicalConstants) -> f64 {
        let kx = std::f64::consts::PI / self.dx();
        let kz = std::f64::consts::PI / self.dz();
        constants.hbar2_over_2m * (kx * kx + kz * kz)
    }

    /// Index of the x-mirror image of column `ix` when the grid is symmetric about x = 0.
    pub fn mirror_x(&self, ix: usize) -> usize {
        (self.nx - ix) % self.nx
    }

    pub fn is_x_symmetric(&self) -> bool {
        (self.x_min + self.x_max).abs() < 1e-12 * (self.x_max - self.x_min)
    }

    /// Fractional grid coordinates of a point.
    pub fn fractional(&self, x: f64, z: f64) -> (f64, f64) {
        ((x - self.x_min) / self.dx(), (z - self.z_min) / self.dz())
    }

    pub fn same_discretization(&self, other: &Self) -> bool {
        self == other
    }
}
