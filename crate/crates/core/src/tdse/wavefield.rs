use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

use super::grid::Grid2D;
use crate::error::{Error, Result};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"WFLD";
pub const SNAPSHOT_VERSION: u32 = 1;
pub const SNAPSHOT_HEADER_LEN: usize = 128;

/// Complex amplitude on a [`Grid2D`] at time `t` (ps), stored with z fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: Grid2D,
    pub amplitudes: Vec<Complex64>,
    pub t: f64,
}

impl WaveField {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            amplitudes: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
            t: 0.0,
        }
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut amplitudes = Vec::with_capacity(grid.len());
        for ix in 0..grid.nx {
            let x = grid.x(ix);
            for iz in 0..grid.nz {
                amplitudes.push(f(x, grid.z(iz)));
            }
        }
        Self {
            grid,
            amplitudes,
            t: 0.0,
        }
    }

    #[inline]
    pub fn at(&self, ix: usize, iz: usize) -> Complex64 {
        self.amplitudes[self.grid.index(ix, iz)]
    }

    /// ∬|ψ|² dx dz.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn normalize(&mut self) {
        let n = self.norm().sqrt();
        if n > 0.0 {
            let s = 1.0 / n;
            self.amplitudes.iter_mut().for_each(|c| *c *= s);
        }
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Probability inside the rectangle [x0, x1) × [z0, z1).
    pub fn probability_in(&self, x0: f64, x1: f64, z0: f64, z1: f64) -> f64 {
        let g = &self.grid;
        let mut s = 0.0;
        for ix in 0..g.nx {
            let x = g.x(ix);
            if x < x0 || x >= x1 {
                continue;
            }
            for iz in 0..g.nz {
                let z = g.z(iz);
                if z >= z0 && z < z1 {
                    s += self.at(ix, iz).norm_sqr();
                }
            }
        }
        s * g.cell_area()
    }

    /// (⟨x⟩, ⟨z⟩, σ_x, σ_z) of the density.
    pub fn position_moments(&self) -> (f64, f64, f64, f64) {
        let g = &self.grid;
        let (mut n, mut sx, mut sz, mut sxx, mut szz) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for ix in 0..g.nx {
            let x = g.x(ix);
            for iz in 0..g.nz {
                let z = g.z(iz);
                let p = self.at(ix, iz).norm_sqr();
                n += p;
                sx += p * x;
                sz += p * z;
                sxx += p * x * x;
                szz += p * z * z;
            }
        }
        let (mx, mz) = (sx / n, sz / n);
        (mx, mz, (sxx / n - mx * mx).max(0.0).sqrt(), (szz / n - mz * mz).max(0.0).sqrt())
    }

    /// Largest |ψ| on the outermost rows and columns, relative to the global maximum.
    pub fn edge_amplitude(&self) -> f64 {
        let g = &self.grid;
        let max = self.amplitudes.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let mut edge: f64 = 0.0;
        for ix in 0..g.nx {
            edge = edge.max(self.at(ix, 0).norm()).max(self.at(ix, g.nz - 1).norm());
        }
        for iz in 0..g.nz {
            edge = edge.max(self.at(0, iz).norm()).max(self.at(g.nx - 1, iz).norm());
        }
        edge / max
    }

    /// Writes the binary snapshot: 128-byte little-endian header then interleaved (re, im) pairs.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<()> {
        let g = &self.grid;
        let mut header = [0u8; SNAPSHOT_HEADER_LEN];
        header[0..4].copy_from_slice(SNAPSHOT_MAGIC);
        header[4..8].copy_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
        header[8..12].copy_from_slice(&(g.nx as u32).to_le_bytes());
        header[12..16].copy_from_slice(&(g.nz as u32).to_le_bytes());
        for (i, v) in [g.x_min, g.x_max, g.z_min, g.z_max, self.t].iter().enumerate() {
            header[16 + 8 * i..24 + 8 * i].copy_from_slice(&v.to_le_bytes());
        }
        out.write_all(&header)?;
        let mut buf = Vec::with_capacity(16 * self.amplitudes.len());
        for c in &self.amplitudes {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        out.write_all(&buf)?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut input: R) -> Result<Self> {
        let mut header = [0u8; SNAPSHOT_HEADER_LEN];
        input.read_exact(&mut header)?;
        if &header[0..4] != SNAPSHOT_MAGIC {
            return Err(Error::Format("bad magic, expected WFLD".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != SNAPSHOT_VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let grid = Grid2D::new(
            f64_at(16),
            f64_at(24),
            f64_at(32),
            f64_at(40),
            u32_at(8) as usize,
            u32_at(12) as usize,
        )
        .map_err(|e| Error::Format(format!("bad grid in header: {e}")))?;
        let t = f64_at(48);
        let mut raw = Vec::new();
        input.read_to_end(&mut raw)?;
        if raw.len() != 16 * grid.len() {
            return Err(Error::Format(format!(
                "expected {} payload bytes, found {}",
                16 * grid.len(),
                raw.len()
            )));
        }
        let amplitudes = raw
            .chunks_exact(16)
            .map(|c| {
                Complex64::new(
                    f64::from_le_bytes(c[0..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..16].try_into().unwrap()),
                )
            })
            .collect();
        Ok(Self { grid, amplitudes, t })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_snapshot(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_snapshot(std::io::BufReader::new(f))
    }
}
