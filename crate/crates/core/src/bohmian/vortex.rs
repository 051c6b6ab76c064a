use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;

use super::field::GuidanceField;
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::tdse::{Grid2D, WaveField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl Region {
    pub fn whole(grid: &Grid2D) -> Self {
        Self {
            x_min: grid.x_min,
            x_max: grid.x_max,
            z_min: grid.z_min,
            z_max: grid.z_max,
        }
    }

    pub fn contains(&self, x: f64, z: f64) -> bool {
        x >= self.x_min && x < self.x_max && z >= self.z_min && z < self.z_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexOptions {
    /// Plaquettes whose corners all have |ψ| below this fraction of the maximum are skipped.
    pub density_floor: f64,
    pub interpolation_order: usize,
    /// Radius of the circulation loop as a fraction of min(dx, dz).
    pub loop_radius: f64,
    pub loop_points: usize,
    /// Edge subdivisions used when a plaquette edge has an ambiguous phase step.
    pub refine: usize,
}

impl Default for VortexOptions {
    fn default() -> Self {
        Self {
            density_floor: 1e-3,
            interpolation_order: 8,
            loop_radius: 0.5,
            loop_points: 64,
            refine: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VortexNode {
    pub x: f64,
    pub z: f64,
    pub t: f64,
    pub winding: i32,
    /// ∮ v·dl on a small circle around the node (Å²/ps).
    pub circulation: f64,
    /// Smallest corner |ψ| of the plaquette relative to the field maximum.
    pub min_abs: f64,
    pub indeterminate: bool,
}

impl VortexNode {
    /// |circulation − n·2πħ/m| / (2πħ/m·|n|).
    pub fn quantization_error(&self, constants: &PhysicalConstants) -> f64 {
        let q = 2.0 * PI * constants.hbar_over_m();
        if self.winding == 0 {
            return (self.circulation / q).abs();
        }
        (self.circulation - self.winding as f64 * q).abs() / (q * self.winding.abs() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VortexReport {
    pub t: f64,
    pub region: Region,
    pub nodes: Vec<VortexNode>,
}

impl VortexReport {
    /// CSV with columns t, x, z, n, circulation, indeterminate.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "z", "n", "circulation", "indeterminate"])?;
        for n in &self.nodes {
            w.write_record([
                format!("{:.6}", n.t),
                format!("{:.6}", n.x),
                format!("{:.6}", n.z),
                n.winding.to_string(),
                format!("{:.8e}", n.circulation),
                n.indeterminate.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn wrap(d: f64) -> f64 {
    let mut d = d % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d < -PI {
        d += 2.0 * PI;
    }
    d
}

/// Winding of the phase along a closed polygon of samples, with the largest single step.
fn loop_winding(samples: &[Complex64]) -> (f64, f64) {
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    for i in 0..samples.len() {
        let a = samples[i];
        let b = samples[(i + 1) % samples.len()];
        let d = wrap(b.arg() - a.arg());
        worst = worst.max(d.abs());
        total += d;
    }
    (total / (2.0 * PI), worst)
}

/// Circulation of the guidance velocity on a circle of radius r around (x, z).
pub fn circulation(
    field: &GuidanceField,
    x: f64,
    z: f64,
    r: f64,
    points: usize,
    order: usize,
    constants: &PhysicalConstants,
) -> Result<f64> {
    let hm = constants.hbar_over_m();
    let mut sum = 0.0;
    for j in 0..points {
        let phi = 2.0 * PI * j as f64 / points as f64;
        let (px, pz) = (x + r * phi.cos(), z + r * phi.sin());
        let f = field.sample(px, pz, order)?;
        let (vx, vz) = f.velocity(hm);
        // dl = r(−sinφ, cosφ) dφ
        sum += vx * (-phi.sin()) + vz * phi.cos();
    }
    Ok(sum * r * 2.0 * PI / points as f64)
}

/// Locates the zero of the interpolated ψ inside a plaquette by Newton iteration.
fn locate_zero(field: &GuidanceField, x0: f64, z0: f64, dx: f64, dz: f64, order: usize) -> (f64, f64) {
    let (mut x, mut z) = (x0 + 0.5 * dx, z0 + 0.5 * dz);
    for _ in 0..30 {
        let Ok(f) = field.sample(x, z, order) else { break };
        // Solve [∂xψ ∂zψ] δ = −ψ over the reals (two complex equations, two unknowns).
        let (a, b, c) = (f.dx, f.dz, -f.psi);
        let det = a.re * b.im - a.im * b.re;
        if det.abs() < 1e-300 {
            break;
        }
        let ddx = (c.re * b.im - c.im * b.re) / det;
        let ddz = (a.re * c.im - a.im * c.re) / det;
        x = (x + ddx).clamp(x0 - 0.5 * dx, x0 + 1.5 * dx);
        z = (z + ddz).clamp(z0 - 0.5 * dz, z0 + 1.5 * dz);
        if ddx.hypot(ddz) < 1e-10 {
            break;
        }
    }
    (x, z)
}

/// Nodes with nonzero phase winding inside `region`.
pub fn detect_vortices_in(
    field: &GuidanceField,
    region: Region,
    options: &VortexOptions,
    constants: &PhysicalConstants,
) -> Result<VortexReport> {
    let g = field.grid;
    if !(region.x_max > region.x_min && region.z_max > region.z_min) {
        return Err(Error::InvalidParameter("empty vortex region".into()));
    }
    if region.x_min < g.x_min || region.x_max > g.x_max || region.z_min < g.z_min || region.z_max > g.z_max {
        return Err(Error::InvalidParameter("vortex region extends beyond the grid".into()));
    }
    let (dx, dz) = (g.dx(), g.dz());
    let floor = options.density_floor * field.max_abs;
    let order = options.interpolation_order;
    let r = options.loop_radius * dx.min(dz);
    let mut nodes = Vec::new();
    for ix in 0..g.nx - 1 {
        let x0 = g.x(ix);
        if x0 < region.x_min || x0 + dx > region.x_max {
            continue;
        }
        for iz in 0..g.nz - 1 {
            let z0 = g.z(iz);
            if z0 < region.z_min || z0 + dz > region.z_max {
                continue;
            }
            let corners = [
                field.psi[g.index(ix, iz)],
                field.psi[g.index(ix + 1, iz)],
                field.psi[g.index(ix + 1, iz + 1)],
                field.psi[g.index(ix, iz + 1)],
            ];
            let max_corner = corners.iter().map(|c| c.norm()).fold(0.0, f64::max);
            if max_corner < floor {
                continue;
            }
            let (mut w, worst) = loop_winding(&corners);
            let mut indeterminate = false;
            if worst > 0.9 * PI {
                // Ambiguous step: walk the plaquette boundary on the interpolant.
                let n = options.refine.max(2);
                let mut samples = Vec::with_capacity(4 * n);
                let path = [(x0, z0), (x0 + dx, z0), (x0 + dx, z0 + dz), (x0, z0 + dz)];
                for k in 0..4 {
                    let (ax, az) = path[k];
                    let (bx, bz) = path[(k + 1) % 4];
                    for j in 0..n {
                        let s = j as f64 / n as f64;
                        match field.sample(ax + s * (bx - ax), az + s * (bz - az), order) {
                            Ok(f) => samples.push(f.psi),
                            Err(_) => indeterminate = true,
                        }
                    }
                }
                if !indeterminate {
                    let (w2, worst2) = loop_winding(&samples);
                    w = w2;
                    indeterminate = worst2 > 0.9 * PI;
                }
            }
            let winding = w.round() as i32;
            if winding == 0 && !indeterminate {
                continue;
            }
            let (x, z) = locate_zero(field, x0, z0, dx, dz, order);
            let circ = circulation(field, x, z, r, options.loop_points, order, constants).unwrap_or(f64::NAN);
            let min_abs = corners.iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min) / field.max_abs;
            nodes.push(VortexNode {
                x,
                z,
                t: field.t,
                winding,
                circulation: circ,
                min_abs,
                indeterminate,
            });
        }
    }
    Ok(VortexReport {
        t: field.t,
        region,
        nodes,
    })
}

pub fn detect_vortices(psi: &WaveField, region: Region, constants: &PhysicalConstants) -> Result<VortexReport> {
    detect_vortices_in(
        &GuidanceField::from_wavefield(psi),
        region,
        &VortexOptions::default(),
        constants,
    )
}
