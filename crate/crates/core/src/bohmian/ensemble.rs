use rand::Rng;
use serde::Serialize;

use super::trajectory::SeedPoint;
use super::vortex::Region;
use crate::error::{Error, Result};
use crate::tdse::WaveField;

/// Below this ensemble size the density check carries a statistics warning.
pub const MIN_ENSEMBLE: usize = 2000;

/// Cumulative sums with a leading zero.
fn cumulative(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out = vec![0.0];
    let mut s = 0.0;
    for w in weights {
        s += w;
        out.push(s);
    }
    out
}

/// Inverse of a piecewise-constant density on cells centred at `start + i·h`.
fn invert(cdf: &[f64], u: f64, start: f64, h: f64) -> f64 {
    let total = *cdf.last().unwrap();
    let target = u * total;
    let i = match cdf.binary_search_by(|v| v.partial_cmp(&target).unwrap()) {
        Ok(i) => i.min(cdf.len() - 2),
        Err(i) => i.saturating_sub(1).min(cdf.len() - 2),
    };
    let w = cdf[i + 1] - cdf[i];
    let frac = if w > 0.0 { (target - cdf[i]) / w } else { 0.5 };
    start + (i as f64 - 0.5 + frac) * h
}

fn seeds(points: Vec<(f64, f64)>) -> Vec<SeedPoint> {
    points.into_iter().map(|(x, z)| SeedPoint { x, z, line: None }).collect()
}

/// Stratified Born sampling: seed i takes the x quantile (i + ½)/n of the x marginal
/// and the z quantile {½ + i·φ⁻¹} of the conditional density on that column, a rank-1
/// lattice that keeps every seed on its own x and z level.
pub fn sample_born_quantiles(psi: &WaveField, n: usize) -> Result<Vec<SeedPoint>> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be positive".into()));
    }
    let g = psi.grid;
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let column_mass: Vec<f64> = (0..g.nx).map(|ix| (0..g.nz).map(|iz| psi.at(ix, iz).norm_sqr()).sum()).collect();
    let cdf_x = cumulative(column_mass.iter().cloned());
    let mut column_cdf: Vec<Option<Vec<f64>>> = vec![None; g.nx];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let x = invert(&cdf_x, (i as f64 + 0.5) / n as f64, g.x_min, g.dx());
        let ix = (((x - g.x_min) / g.dx()).round() as usize).min(g.nx - 1);
        let cdf_z = column_cdf[ix].get_or_insert_with(|| cumulative((0..g.nz).map(|iz| psi.at(ix, iz).norm_sqr())));
        let u = (0.5 + i as f64 * golden).fract();
        out.push((x, invert(cdf_z, u, g.z_min, g.dz())));
    }
    Ok(seeds(out))
}

/// Independent draws from |ψ|²: grid cell chosen by its probability, uniform within the cell.
pub fn sample_born_random<R: Rng>(psi: &WaveField, n: usize, rng: &mut R) -> Vec<SeedPoint> {
    let g = psi.grid;
    let cdf = cumulative(psi.amplitudes.iter().map(|c| c.norm_sqr()));
    let total = *cdf.last().unwrap();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng.gen::<f64>() * total;
        let k = match cdf.binary_search_by(|v| v.partial_cmp(&u).unwrap()) {
            Ok(i) => i.min(cdf.len() - 2),
            Err(i) => i.saturating_sub(1).min(cdf.len() - 2),
        };
        let (ix, iz) = (k / g.nz, k % g.nz);
        let x = g.x(ix) + (rng.gen::<f64>() - 0.5) * g.dx();
        let z = g.z(iz) + (rng.gen::<f64>() - 0.5) * g.dz();
        out.push((x, z));
    }
    seeds(out)
}

/// Uniform draws over a region (negative control for the Born-rule check).
pub fn sample_uniform<R: Rng>(region: Region, n: usize, rng: &mut R) -> Vec<SeedPoint> {
    let pts = (0..n)
        .map(|_| {
            (
                region.x_min + rng.gen::<f64>() * (region.x_max - region.x_min),
                region.z_min + rng.gen::<f64>() * (region.z_max - region.z_min),
            )
        })
        .collect();
    seeds(pts)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCheck {
    /// Σ |h_b − p_b| over bins, both normalized to unit mass inside the region.
    pub l1: f64,
    pub n: usize,
    /// Points outside the binning region.
    pub outside: usize,
    pub warning: Option<String>,
}

/// Compares a histogram of `points` with |ψ|² on `bins` = (nx, nz) bins over `region`
/// (the whole grid when None).
pub fn ensemble_density_check(
    points: &[(f64, f64)],
    psi: &WaveField,
    bins: (usize, usize),
    region: Option<Region>,
) -> Result<DensityCheck> {
    if points.is_empty() || bins.0 == 0 || bins.1 == 0 {
        return Err(Error::InvalidParameter("need points and a nonzero bin count".into()));
    }
    let g = psi.grid;
    let region = region.unwrap_or(Region::whole(&g));
    let (bx, bz) = bins;
    let bin_of = |x: f64, z: f64| -> Option<usize> {
        if !region.contains(x, z) {
            return None;
        }
        let i = (((x - region.x_min) / (region.x_max - region.x_min)) * bx as f64) as usize;
        let j = (((z - region.z_min) / (region.z_max - region.z_min)) * bz as f64) as usize;
        Some(i.min(bx - 1) * bz + j.min(bz - 1))
    };
    let mut hist = vec![0.0; bx * bz];
    let mut outside = 0;
    for &(x, z) in points {
        match bin_of(x, z) {
            Some(b) => hist[b] += 1.0,
            None => outside += 1,
        }
    }
    // |ψ|² is taken constant on the cell around each grid point, as the samplers do,
    // and spread over the bins in proportion to overlap.
    let overlaps = |lo: f64, width: f64, n_bins: usize, start: f64, h: f64, count: usize| -> Vec<Vec<(usize, f64)>> {
        let bw = width / n_bins as f64;
        (0..count)
            .map(|i| {
                let (a, b) = (start + (i as f64 - 0.5) * h, start + (i as f64 + 0.5) * h);
                let first = ((a - lo) / bw).floor().max(0.0) as usize;
                let last = (((b - lo) / bw).ceil().max(0.0) as usize).min(n_bins);
                (first..last)
                    .filter_map(|k| {
                        let (c, d) = (lo + k as f64 * bw, lo + (k + 1) as f64 * bw);
                        let w = (b.min(d) - a.max(c)) / h;
                        (w > 0.0).then_some((k, w))
                    })
                    .collect()
            })
            .collect()
    };
    let ox = overlaps(region.x_min, region.x_max - region.x_min, bx, g.x_min, g.dx(), g.nx);
    let oz = overlaps(region.z_min, region.z_max - region.z_min, bz, g.z_min, g.dz(), g.nz);
    let mut dens = vec![0.0; bx * bz];
    for ix in 0..g.nx {
        if ox[ix].is_empty() {
            continue;
        }
        for iz in 0..g.nz {
            let p = psi.at(ix, iz).norm_sqr();
            for &(i, wx) in &ox[ix] {
                for &(j, wz) in &oz[iz] {
                    dens[i * bz + j] += p * wx * wz;
                }
            }
        }
    }
    let hs: f64 = hist.iter().sum();
    let ds: f64 = dens.iter().sum();
    if hs == 0.0 || ds == 0.0 {
        return Err(Error::InvalidParameter("no mass inside the binning region".into()));
    }
    let l1 = hist.iter().zip(&dens).map(|(h, d)| (h / hs - d / ds).abs()).sum();
    let warning = (points.len() < MIN_ENSEMBLE).then(|| {
        format!(
            "only {} trajectories; at least {MIN_ENSEMBLE} are needed for a meaningful comparison",
            points.len()
        )
    });
    Ok(DensityCheck {
        l1,
        n: points.len(),
        outside,
        warning,
    })
}
