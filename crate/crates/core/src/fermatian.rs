//! Specular rays on the hard-wall model: a circle of radius `a` centred at the
//! origin, clipped by a flat wall at z = z_r.
//!
//! Angles are measured from the surface normal (+z); positive deflection points
//! along +x, the direction of the incident parallel momentum.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::potential::HardWallParams;

/// Height at which rays start and end.
pub const TRACE_HEIGHT: f64 = 10.27;
/// Discriminants below this are treated as tangent misses.
const TANGENT_TOL: f64 = 1e-12;
const HIT_EPS: f64 = 1e-11;
const ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Vec2 {
    pub x: f64,
    pub z: f64,
}

impl Vec2 {
    pub const fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }
    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.z * o.z
    }
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
    fn add_scaled(self, d: Self, t: f64) -> Self {
        Self::new(self.x + t * d.x, self.z + t * d.z)
    }
    fn reflect(self, n: Self) -> Self {
        let p = 2.0 * self.dot(n);
        Self::new(self.x - p * n.x, self.z - p * n.z)
    }
}

/// Position and momentum (meV·ps/Å) of an atom launched at height `z0`
/// whose undisturbed path would cross z = 0 at x = b.
pub fn initial_conditions(
    b: f64,
    theta_i: f64,
    e_i: f64,
    z0: f64,
    constants: &PhysicalConstants,
) -> Result<(Vec2, Vec2)> {
    if !(e_i > 0.0) {
        return Err(Error::InvalidParameter(format!("E_i must be positive, got {e_i}")));
    }
    if !(theta_i.abs() < FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!(
            "|theta_i| must be below pi/2, got {theta_i}"
        )));
    }
    if !b.is_finite() || !z0.is_finite() {
        return Err(Error::InvalidParameter("b and z0 must be finite".into()));
    }
    let p = constants.momentum(e_i);
    Ok((
        Vec2::new(b - z0 * theta_i.tan(), z0),
        Vec2::new(p * theta_i.sin(), -p * theta_i.cos()),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Surface {
    Adsorbate,
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BouncePattern {
    FlatOnly,
    AdsorbateOnly,
    FlatThenAdsorbate,
    AdsorbateThenFlat,
}

impl BouncePattern {
    pub fn name(&self) -> &'static str {
        match self {
            Self::FlatOnly => "flat",
            Self::AdsorbateOnly => "adsorbate",
            Self::FlatThenAdsorbate => "flat+adsorbate",
            Self::AdsorbateThenFlat => "adsorbate+flat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    Forward,
    Backward,
    Normal,
    Grazing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RayClass {
    pub bounce_pattern: BouncePattern,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ray {
    pub b: f64,
    pub theta_i: f64,
    pub segments: Vec<(Vec2, Vec2)>,
    pub bounce_points: Vec<(Vec2, Surface)>,
    pub theta_d: f64,
    pub class: RayClass,
}

impl Ray {
    /// Angle between incoming and outgoing directions.
    pub fn scattering_angle(&self) -> f64 {
        PI - (self.theta_d + self.theta_i).abs()
    }

    /// Polar angle (from +z) of the adsorbate impact point, if any.
    pub fn adsorbate_impact_angle(&self) -> Option<f64> {
        self.bounce_points
            .iter()
            .find(|(_, s)| *s == Surface::Adsorbate)
            .map(|(p, _)| p.x.atan2(p.z))
    }

    pub fn directions(&self) -> Vec<Vec2> {
        self.segments
            .iter()
            .map(|(a, b)| {
                let d = Vec2::new(b.x - a.x, b.z - a.z);
                let n = d.norm();
                Vec2::new(d.x / n, d.z / n)
            })
            .collect()
    }
}

fn classify_direction(theta_d: f64) -> Direction {
    if (theta_d.abs() - FRAC_PI_2).abs() < ANGLE_TOL {
        Direction::Grazing
    } else if theta_d.abs() < ANGLE_TOL {
        Direction::Normal
    } else if theta_d > 0.0 {
        Direction::Forward
    } else {
        Direction::Backward
    }
}

/// Distance along `d` to the visible adsorbate cap, if hit.
fn hit_adsorbate(p: Vec2, d: Vec2, wall: &HardWallParams) -> Option<f64> {
    let half_b = p.dot(d);
    let c = p.dot(p) - wall.a * wall.a;
    let disc = half_b * half_b - c;
    if disc < TANGENT_TOL {
        return None;
    }
    let s = disc.sqrt();
    // Only the entry root matters; a start point on the circle edge (the wall
    // corner) with an inward direction bounces immediately.
    let t = -half_b - s;
    if t < -1e-9 || -half_b + s <= HIT_EPS {
        return None;
    }
    let t = t.max(0.0);
    (p.add_scaled(d, t).z >= wall.z_r - 1e-12).then_some(t)
}

fn hit_flat(p: Vec2, d: Vec2, wall: &HardWallParams) -> Option<f64> {
    if d.z >= 0.0 {
        return None;
    }
    let t = (wall.z_r - p.z) / d.z;
    if t <= HIT_EPS {
        return None;
    }
    let q = p.add_scaled(d, t);
    let base = (wall.a * wall.a - wall.z_r * wall.z_r).sqrt();
    (q.x.abs() >= base).then_some(t)
}

/// Traces a ray with impact parameter `b` through the hard-wall geometry.
pub fn trace_ray(b: f64, theta_i: f64, wall: &HardWallParams) -> Result<Ray> {
    wall.validate()?;
    if !b.is_finite() || !(theta_i.abs() < FRAC_PI_2) {
        return Err(Error::InvalidParameter(format!(
            "need finite b and |theta_i| < pi/2, got b = {b}, theta_i = {theta_i}"
        )));
    }
    let mut p = Vec2::new(b - TRACE_HEIGHT * theta_i.tan(), TRACE_HEIGHT);
    let mut d = Vec2::new(theta_i.sin(), -theta_i.cos());
    let mut segments = Vec::new();
    let mut bounces = Vec::new();
    let mut last: Option<Surface> = None;
    loop {
        // Neither surface is concave, so a ray never strikes the one it just left.
        let ads = hit_adsorbate(p, d, wall).filter(|_| last != Some(Surface::Adsorbate));
        let flat = hit_flat(p, d, wall).filter(|_| last != Some(Surface::Flat));
        let next = match (ads, flat) {
            (Some(ta), Some(tf)) if tf <= ta => Some((tf, Surface::Flat)),
            (Some(ta), _) => Some((ta, Surface::Adsorbate)),
            (None, Some(tf)) => Some((tf, Surface::Flat)),
            (None, None) => None,
        };
        let Some((t, surface)) = next else { break };
        if bounces.len() == 2 {
            return Err(Error::Geometry(format!(
                "more than two bounces for b = {b}, theta_i = {theta_i}"
            )));
        }
        let q = p.add_scaled(d, t);
        let n = match surface {
            Surface::Flat => Vec2::new(0.0, 1.0),
            Surface::Adsorbate => Vec2::new(q.x / wall.a, q.z / wall.a),
        };
        segments.push((p, q));
        bounces.push((q, surface));
        last = Some(surface);
        d = d.reflect(n);
        p = q;
    }
    // Extend the outgoing leg back to the launch height, or a fixed length if it never rises.
    let len = if d.z > 1e-9 {
        ((TRACE_HEIGHT - p.z) / d.z).min(50.0)
    } else {
        TRACE_HEIGHT
    };
    segments.push((p, p.add_scaled(d, len)));
    let theta_d = d.x.atan2(d.z);
    let pattern = match bounces.as_slice() {
        [(_, Surface::Flat)] => BouncePattern::FlatOnly,
        [(_, Surface::Adsorbate)] => BouncePattern::AdsorbateOnly,
        [(_, Surface::Flat), (_, Surface::Adsorbate)] => BouncePattern::FlatThenAdsorbate,
        [(_, Surface::Adsorbate), (_, Surface::Flat)] => BouncePattern::AdsorbateThenFlat,
        _ => {
            return Err(Error::Geometry(format!(
                "unexpected bounce sequence {:?} for b = {b}",
                bounces.iter().map(|(_, s)| *s).collect::<Vec<_>>()
            )))
        }
    };
    Ok(Ray {
        b,
        theta_i,
        segments,
        bounce_points: bounces,
        theta_d,
        class: RayClass {
            bounce_pattern: pattern,
            direction: classify_direction(theta_d),
        },
    })
}

/// Shadow length ℓ = [(1 − cosθ_i)/cosθ_i]·[a − z_r tan(θ_i/2)].
pub fn shadow_length(theta_i: f64, wall: &HardWallParams) -> Result<f64> {
    if !(0.0..FRAC_PI_2 + 1e-15).contains(&theta_i) {
        return Err(Error::InvalidParameter(format!(
            "theta_i must lie in [0, pi/2), got {theta_i}"
        )));
    }
    let c = theta_i.cos();
    if c < 1e-12 {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 - c) / c * (wall.a - wall.z_r * (0.5 * theta_i).tan()))
}

/// Flat-wall interval on the lee side of the adsorbate that no ray reaches,
/// from the exact ray geometry: (x_start, x_end).
pub fn geometric_shadow_interval(theta_i: f64, wall: &HardWallParams) -> Result<(f64, f64)> {
    if !(0.0..FRAC_PI_2).contains(&theta_i) {
        return Err(Error::InvalidParameter(format!(
            "theta_i must lie in [0, pi/2), got {theta_i}"
        )));
    }
    let base = (wall.a * wall.a - wall.z_r * wall.z_r).sqrt();
    let reach = wall.a / theta_i.cos() - wall.z_r * theta_i.tan();
    Ok((base, reach.max(base)))
}

/// Largest backward deflection reachable by flat-then-adsorbate rays.
pub fn theta_d_max(theta_i: f64, wall: &HardWallParams) -> f64 {
    -theta_i + 2.0 * (wall.z_r / wall.a).asin()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparatrixSet {
    pub theta_i: f64,
    /// Flat-only → flat-then-adsorbate.
    pub f1: f64,
    /// θ_d = 0 on the flat-then-adsorbate branch.
    pub f_alpha: Option<f64>,
    /// Flat-then-adsorbate (or flat-only) → adsorbate-then-flat.
    pub f2: f64,
    /// End of the flat-then-adsorbate branch, where θ_d reaches `theta_d_max`.
    pub f2_prime: Option<f64>,
    /// θ_d = −π/2: adsorbate-then-flat → adsorbate-only.
    pub f3: f64,
    /// θ_d = −θ_i on the single-bounce branch.
    pub f4: f64,
    /// θ_d = 0 on the single-bounce branch.
    pub f_beta: f64,
    /// θ_d = θ_i on the single-bounce branch.
    pub f5: f64,
    /// θ_d = +π/2: adsorbate-only → adsorbate-then-flat.
    pub f6: f64,
    /// Tangent ray: adsorbate-then-flat → flat-only.
    pub f7: f64,
}

impl SeparatrixSet {
    /// Named values in ascending order of b (optional entries skipped).
    pub fn named(&self) -> Vec<(&'static str, f64)> {
        let mut v = vec![("F1", self.f1)];
        if let Some(b) = self.f_alpha {
            v.push(("Fa", b));
        }
        v.push(("F2", self.f2));
        if let Some(b) = self.f2_prime {
            v.push(("F2'", b));
        }
        v.extend([
            ("F3", self.f3),
            ("F4", self.f4),
            ("Fb", self.f_beta),
            ("F5", self.f5),
            ("F6", self.f6),
            ("F7", self.f7),
        ]);
        v
    }
}

fn pattern_at(b: f64, theta_i: f64, wall: &HardWallParams) -> Result<BouncePattern> {
    Ok(trace_ray(b, theta_i, wall)?.class.bounce_pattern)
}

fn bisect_pattern(
    mut lo: f64,
    mut hi: f64,
    theta_i: f64,
    wall: &HardWallParams,
) -> Result<f64> {
    let left = pattern_at(lo, theta_i, wall)?;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if pattern_at(mid, theta_i, wall)? == left {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Root of θ_d(b) = target inside [lo, hi] on a single branch.
fn bisect_deflection(
    mut lo: f64,
    mut hi: f64,
    target: f64,
    theta_i: f64,
    wall: &HardWallParams,
) -> Result<Option<f64>> {
    let pattern = pattern_at(lo, theta_i, wall)?;
    let f = |b: f64| -> Result<Option<f64>> {
        let r = trace_ray(b, theta_i, wall)?;
        Ok((r.class.bounce_pattern == pattern).then_some(r.theta_d - target))
    };
    let (Some(f_lo), Some(f_hi)) = (f(lo)?, f(hi)?) else {
        return Ok(None);
    };
    if f_lo == 0.0 {
        return Ok(Some(lo));
    }
    if f_lo.signum() == f_hi.signum() {
        return Ok(None);
    }
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        match f(mid)? {
            Some(v) if v.signum() == f_lo.signum() => lo = mid,
            Some(_) => hi = mid,
            None => {
                return Err(Error::Geometry(format!(
                    "branch pattern changes inside deflection bracket near b = {mid}"
                )))
            }
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Contiguous runs of one bounce pattern found by a dense scan.
#[derive(Debug, Clone)]
struct Branch {
    pattern: BouncePattern,
    lo: f64,
    hi: f64,
}

fn scan_branches(theta_i: f64, wall: &HardWallParams, n: usize) -> Result<Vec<(Branch, Vec<f64>)>> {
    let reach = (wall.a * (1.0 + 2.0 * theta_i.tan()) + wall.z_r) / theta_i.cos() + 1.0;
    let bs: Vec<f64> = (0..n)
        .map(|i| -reach + 2.0 * reach * i as f64 / (n - 1) as f64)
        .collect();
    let patterns = bs
        .par_iter()
        .map(|&b| pattern_at(b, theta_i, wall))
        .collect::<Result<Vec<_>>>()?;
    let mut out: Vec<(Branch, Vec<f64>)> = Vec::new();
    for (&b, &p) in bs.iter().zip(&patterns) {
        match out.last_mut() {
            Some((br, pts)) if br.pattern == p => {
                br.hi = b;
                pts.push(b);
            }
            _ => out.push((
                Branch {
                    pattern: p,
                    lo: b,
                    hi: b,
                },
                vec![b],
            )),
        }
    }
    // Pin the branch edges so roots between an edge and its first sample are bracketed too.
    for i in 1..out.len() {
        let edge = bisect_pattern(out[i - 1].0.hi, out[i].0.lo, theta_i, wall)?;
        let (before, after) = (edge - 1e-11, edge + 1e-11);
        if before > out[i - 1].0.hi && pattern_at(before, theta_i, wall)? == out[i - 1].0.pattern {
            out[i - 1].1.push(before);
            out[i - 1].0.hi = before;
        }
        if after < out[i].0.lo && pattern_at(after, theta_i, wall)? == out[i].0.pattern {
            out[i].1.insert(0, after);
            out[i].0.lo = after;
        }
    }
    Ok(out)
}

fn branch_root(
    pts: &[f64],
    target: f64,
    theta_i: f64,
    wall: &HardWallParams,
) -> Result<Option<f64>> {
    for w in pts.windows(2) {
        if let Some(b) = bisect_deflection(w[0], w[1], target, theta_i, wall)? {
            return Ok(Some(b));
        }
    }
    Ok(None)
}

/// Locates the separatrices of the ray classification at incidence `theta_i` (≥ 0).
pub fn find_separatrices(theta_i: f64, wall: &HardWallParams) -> Result<SeparatrixSet> {
    use BouncePattern::*;
    if !(0.0..FRAC_PI_2).contains(&theta_i) {
        return Err(Error::InvalidParameter(format!(
            "theta_i must lie in [0, pi/2), got {theta_i}"
        )));
    }
    let branches = scan_branches(theta_i, wall, 8001)?;
    let seq: Vec<BouncePattern> = branches.iter().map(|(b, _)| b.pattern).collect();
    let edge = |i: usize| bisect_pattern(branches[i].0.hi, branches[i + 1].0.lo, theta_i, wall);
    let single_root = |pts: &[f64], target: f64, name: &str| -> Result<f64> {
        branch_root(pts, target, theta_i, wall)?.ok_or_else(|| {
            Error::Geometry(format!("separatrix {name} not found at theta_i = {theta_i}"))
        })
    };
    match seq.as_slice() {
        [FlatOnly, FlatThenAdsorbate, AdsorbateThenFlat, AdsorbateOnly, AdsorbateThenFlat, FlatOnly] =>
        {
            let f1 = edge(0)?;
            let f2 = edge(1)?;
            let f3 = edge(2)?;
            let f6 = edge(3)?;
            let f7 = edge(4)?;
            let f_alpha = branch_root(&branches[1].1, 0.0, theta_i, wall)?;
            let ads = &branches[3].1;
            Ok(SeparatrixSet {
                theta_i,
                f1,
                f_alpha,
                f2,
                f2_prime: Some(f2),
                f3,
                f4: single_root(ads, -theta_i, "F4")?,
                f_beta: single_root(ads, 0.0, "Fb")?,
                f5: single_root(ads, theta_i, "F5")?,
                f6,
                f7,
            })
        }
        [FlatOnly, AdsorbateThenFlat, AdsorbateOnly, AdsorbateThenFlat, FlatOnly] => {
            let f1 = edge(0)?;
            let ads = &branches[2].1;
            Ok(SeparatrixSet {
                theta_i,
                f1,
                f_alpha: None,
                f2: f1,
                f2_prime: None,
                f3: edge(1)?,
                f4: single_root(ads, -theta_i, "F4")?,
                f_beta: single_root(ads, 0.0, "Fb")?,
                f5: single_root(ads, theta_i, "F5")?,
                f6: edge(2)?,
                f7: edge(3)?,
            })
        }
        other => Err(Error::Geometry(format!(
            "unexpected bounce-pattern sequence {other:?} at theta_i = {theta_i}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomologousPair {
    pub b_single: f64,
    pub b_double: f64,
    pub double_pattern: BouncePattern,
    /// Angular distance between the two adsorbate impact points.
    pub impact_arc: f64,
}

/// Single-bounce / double-bounce ray pairs leaving with the same deflection `theta_d`.
pub fn homologous_pairs(theta_d: f64, theta_i: f64, wall: &HardWallParams) -> Result<Vec<HomologousPair>> {
    let branches = scan_branches(theta_i, wall, 8001)?;
    let Some((_, single_pts)) = branches
        .iter()
        .find(|(b, _)| b.pattern == BouncePattern::AdsorbateOnly)
    else {
        return Ok(Vec::new());
    };
    let Some(b_single) = branch_root(single_pts, theta_d, theta_i, wall)? else {
        return Ok(Vec::new());
    };
    let phi_single = trace_ray(b_single, theta_i, wall)?
        .adsorbate_impact_angle()
        .expect("single-bounce ray hits the adsorbate");
    let mut out = Vec::new();
    for (br, pts) in &branches {
        if !matches!(
            br.pattern,
            BouncePattern::FlatThenAdsorbate | BouncePattern::AdsorbateThenFlat
        ) {
            continue;
        }
        if let Some(b_double) = branch_root(pts, theta_d, theta_i, wall)? {
            let phi = trace_ray(b_double, theta_i, wall)?
                .adsorbate_impact_angle()
                .expect("double-bounce ray hits the adsorbate");
            out.push(HomologousPair {
                b_single,
                b_double,
                double_pattern: br.pattern,
                impact_arc: (phi_single - phi).abs(),
            });
        }
    }
    Ok(out)
}

/// Deflection table over `n` impact parameters in [b_lo, b_hi], computed in parallel.
pub fn deflection_scan(
    theta_i: f64,
    wall: &HardWallParams,
    b_lo: f64,
    b_hi: f64,
    n: usize,
) -> Result<Vec<Ray>> {
    if n < 2 || !(b_hi > b_lo) {
        return Err(Error::InvalidParameter("need n >= 2 and b_hi > b_lo".into()));
    }
    (0..n)
        .into_par_iter()
        .map(|i| trace_ray(b_lo + (b_hi - b_lo) * i as f64 / (n - 1) as f64, theta_i, wall))
        .collect()
}

/// CSV with columns b, theta_d, n_bounces, pattern, surfaces.
pub fn write_deflection_csv<W: Write>(rays: &[Ray], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["b", "theta_d", "n_bounces", "pattern", "surfaces"])?;
    for r in rays {
        let surfaces: Vec<&str> = r
            .bounce_points
            .iter()
            .map(|(_, s)| match s {
                Surface::Adsorbate => "A",
                Surface::Flat => "F",
            })
            .collect();
        w.write_record([
            format!("{:.12}", r.b),
            format!("{:.12}", r.theta_d),
            r.bounce_points.len().to_string(),
            r.class.bounce_pattern.name().to_string(),
            surfaces.join(""),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// CSV polylines: one row per vertex with columns ray, b, vertex, x, z.
pub fn write_polylines_csv<W: Write>(rays: &[Ray], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ray", "b", "vertex", "x", "z"])?;
    for (i, r) in rays.iter().enumerate() {
        let mut pts: Vec<Vec2> = r.segments.iter().map(|s| s.0).collect();
        if let Some(last) = r.segments.last() {
            pts.push(last.1);
        }
        for (j, p) in pts.iter().enumerate() {
            w.write_record([
                i.to_string(),
                format!("{:.12}", r.b),
                j.to_string(),
                format!("{:.12}", p.x),
                format!("{:.12}", p.z),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
