use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use super::field::{FramePair, GuidanceField, NODE_THRESHOLD};
use super::vortex::{detect_vortices_in, Region, VortexOptions, VortexReport};
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::potential::{InteractionModel, MorseParams};
use crate::tdse::{PropagationConfig, Propagator, WaveField};

/// Vertical offsets (Å) of the seed lines around the packet centre.
pub const SEED_LINE_OFFSETS: [f64; 7] = [-3.18, -2.12, -1.06, 0.0, 1.06, 2.12, 3.18];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedPoint {
    pub x: f64,
    pub z: f64,
    /// Offset of the seed line from the packet centre, for line-seeded runs.
    pub line: Option<f64>,
}

/// `per_line` seeds evenly spaced over [x_lo, x_hi] on each line z_center + offset.
pub fn seed_lines(z_center: f64, offsets: &[f64], x_lo: f64, x_hi: f64, per_line: usize) -> Vec<SeedPoint> {
    let mut out = Vec::with_capacity(offsets.len() * per_line);
    for &off in offsets {
        for j in 0..per_line {
            let x = if per_line == 1 {
                0.5 * (x_lo + x_hi)
            } else {
                x_lo + (x_hi - x_lo) * j as f64 / (per_line - 1) as f64
            };
            out.push(SeedPoint {
                x,
                z: z_center + off,
                line: Some(off),
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BohmianConfig {
    /// Lagrange points per axis used to interpolate ψ and its derivatives.
    pub interpolation_order: usize,
    /// |ψ| (relative to the field maximum) treated as a node.
    pub node_threshold: f64,
    /// Wave-packet steps between stored guidance fields.
    pub wave_steps_per_update: usize,
    /// Largest number of halvings of the trajectory step near nodes.
    pub max_subdivision: u32,
    /// Largest displacement per substep as a fraction of min(dx, dz).
    pub max_displacement: f64,
    /// Store every n-th update in the path (the last point is always kept).
    pub record_every: usize,
    /// Energy (meV) whose phase is factored out before interpolating in time; 0 disables.
    pub carrier_energy: f64,
    /// Trapping test: final z below this height and |x| beyond `x_cut`.
    pub trap_height: f64,
    pub x_cut: f64,
}

/// Height (Å) where the Morse attraction has decayed to −0.01 meV.
pub fn default_trap_height(morse: &MorseParams) -> f64 {
    let u = 1.0 - (1.0 - 0.01 / morse.d).sqrt();
    morse.z_m - u.ln() / morse.alpha
}

impl Default for BohmianConfig {
    fn default() -> Self {
        Self {
            interpolation_order: 8,
            node_threshold: NODE_THRESHOLD,
            wave_steps_per_update: 5,
            max_subdivision: 10,
            max_displacement: 0.25,
            record_every: 1,
            carrier_energy: 0.0,
            trap_height: default_trap_height(&MorseParams::default()),
            x_cut: 10.6,
        }
    }
}

impl BohmianConfig {
    pub fn validate(&self) -> Result<()> {
        if self.interpolation_order < 2 || self.interpolation_order > 10 || self.interpolation_order % 2 != 0 {
            return Err(Error::InvalidParameter("interpolation_order must be even, 2..=10".into()));
        }
        if self.wave_steps_per_update == 0 || self.record_every == 0 {
            return Err(Error::InvalidParameter("wave_steps_per_update and record_every must be positive".into()));
        }
        if !(self.max_displacement > 0.0) || !(self.node_threshold >= 0.0) {
            return Err(Error::InvalidParameter("max_displacement must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventRecord {
    pub t: f64,
    pub x: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BohmianTrajectory {
    pub seed: SeedPoint,
    /// (t, x, z) samples.
    pub path: Vec<[f64; 3]>,
    /// Net turning of the velocity direction (rad).
    pub turning: f64,
    pub loops_completed: u32,
    /// Smallest |ψ| met along the path, relative to the field maximum.
    pub min_psi: f64,
    pub trapped: bool,
    /// Set when the trajectory left the interpolation domain.
    pub exit: Option<EventRecord>,
    /// Set when step control failed next to a node; integration stopped there.
    pub vortex_capture: Option<EventRecord>,
    #[serde(skip)]
    heading: Option<f64>,
    #[serde(skip)]
    current: [f64; 3],
}

impl BohmianTrajectory {
    fn new(seed: SeedPoint, t0: f64) -> Self {
        Self {
            seed,
            path: vec![[t0, seed.x, seed.z]],
            turning: 0.0,
            loops_completed: 0,
            min_psi: f64::INFINITY,
            trapped: false,
            exit: None,
            vortex_capture: None,
            heading: None,
            current: [t0, seed.x, seed.z],
        }
    }

    pub fn active(&self) -> bool {
        self.exit.is_none() && self.vortex_capture.is_none()
    }

    pub fn position(&self) -> (f64, f64) {
        (self.current[1], self.current[2])
    }

    pub fn time(&self) -> f64 {
        self.current[0]
    }

    /// CSV with columns t, x, z.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "z"])?;
        for p in &self.path {
            w.write_record([format!("{:.8}", p[0]), format!("{:.10}", p[1]), format!("{:.10}", p[2])])?;
        }
        w.flush()?;
        Ok(())
    }

    fn turn_to(&mut self, v: (f64, f64)) {
        if v.0 == 0.0 && v.1 == 0.0 {
            return;
        }
        let h = v.1.atan2(v.0);
        if let Some(prev) = self.heading {
            let mut d = h - prev;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            self.turning += d;
            self.loops_completed = (self.turning.abs() / (2.0 * std::f64::consts::PI)).floor() as u32;
        }
        self.heading = Some(h);
    }
}

enum StepOutcome {
    /// New position, largest stage speed and smallest |ψ| ratio met.
    Done((f64, f64), f64, f64),
    Node,
}

/// One RK4 step over fractions [s0, s0 + ds] of the frame interval.
fn rk4(
    pair: &FramePair,
    s0: f64,
    ds: f64,
    p: (f64, f64),
    cfg: &BohmianConfig,
    c: &PhysicalConstants,
) -> Result<StepOutcome> {
    let h = ds * pair.duration();
    let order = cfg.interpolation_order;
    let th = cfg.node_threshold;
    let mut min_ratio = f64::INFINITY;
    let mut eval = |s: f64, x: f64, z: f64| -> Result<Option<(f64, f64)>> {
        match pair.velocity(s, x, z, order, th, c) {
            Ok((v, r)) => {
                min_ratio = min_ratio.min(r);
                Ok(Some(v))
            }
            Err(Error::NearNode { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let Some(k1) = eval(s0, p.0, p.1)? else { return Ok(StepOutcome::Node) };
    let Some(k2) = eval(s0 + 0.5 * ds, p.0 + 0.5 * h * k1.0, p.1 + 0.5 * h * k1.1)? else {
        return Ok(StepOutcome::Node);
    };
    let Some(k3) = eval(s0 + 0.5 * ds, p.0 + 0.5 * h * k2.0, p.1 + 0.5 * h * k2.1)? else {
        return Ok(StepOutcome::Node);
    };
    let Some(k4) = eval(s0 + ds, p.0 + h * k3.0, p.1 + h * k3.1)? else { return Ok(StepOutcome::Node) };
    let q = (
        p.0 + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        p.1 + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    );
    // Velocity spread across stages doubles as the step-size indicator.
    let vmax = [k1, k2, k3, k4].iter().map(|v| v.0.hypot(v.1)).fold(0.0, f64::max);
    Ok(StepOutcome::Done(q, vmax, min_ratio))
}

/// Advances one trajectory across a frame interval, halving the step where the
/// field is close to a node or the displacement per step is too large.
fn advance(traj: &mut BohmianTrajectory, pair: &FramePair, cfg: &BohmianConfig, c: &PhysicalConstants, record: bool) -> Result<()> {
    if !traj.active() {
        return Ok(());
    }
    let grid = &pair.a.grid;
    let limit = cfg.max_displacement * grid.dx().min(grid.dz());
    let mut p = traj.position();
    let mut s = 0.0;
    let mut level = 0u32;
    let max_level = cfg.max_subdivision;
    while s < 1.0 - 1e-12 {
        let ds = (1.0f64 / (1u64 << level) as f64).min(1.0 - s);
        if !pair.a.contains(p.0, p.1, cfg.interpolation_order) {
            traj.exit = Some(EventRecord {
                t: pair.a.t + s * pair.duration(),
                x: p.0,
                z: p.1,
            });
            break;
        }
        let outcome = match rk4(pair, s, ds, p, cfg, c) {
            Ok(o) => o,
            // A stage stepped outside the domain: retry finer, then record the exit.
            Err(Error::Domain(_)) if level < max_level => {
                level += 1;
                continue;
            }
            Err(Error::Domain(_)) => {
                traj.exit = Some(EventRecord {
                    t: pair.a.t + s * pair.duration(),
                    x: p.0,
                    z: p.1,
                });
                break;
            }
            Err(e) => return Err(e),
        };
        match outcome {
            StepOutcome::Done(q, vmax, ratio) => {
                if vmax * ds * pair.duration() > limit && level < max_level {
                    level += 1;
                    continue;
                }
                traj.min_psi = traj.min_psi.min(ratio);
                let v = ((q.0 - p.0) / (ds * pair.duration()), (q.1 - p.1) / (ds * pair.duration()));
                traj.turn_to(v);
                p = q;
                s += ds;
                // Relax the step again once the difficult stretch is passed.
                if level > 0 && vmax * 2.0 * ds * pair.duration() < 0.5 * limit {
                    level -= 1;
                }
            }
            StepOutcome::Node if level < max_level => level += 1,
            StepOutcome::Node => {
                traj.vortex_capture = Some(EventRecord {
                    t: pair.a.t + s * pair.duration(),
                    x: p.0,
                    z: p.1,
                });
                break;
            }
        }
    }
    traj.current = [pair.a.t + s * pair.duration(), p.0, p.1];
    if record || !traj.active() {
        traj.path.push(traj.current);
    }
    Ok(())
}

/// Wave-packet run that drives the trajectories.
#[derive(Debug, Clone)]
pub struct PropagationSchedule {
    pub model: InteractionModel,
    pub config: PropagationConfig,
    pub n_steps: usize,
    /// Times (ps) at which nodes are searched in `vortex_region`.
    pub vortex_times: Vec<f64>,
    pub vortex_region: Option<Region>,
}

pub struct BohmianRun {
    pub trajectories: Vec<BohmianTrajectory>,
    pub final_field: WaveField,
    pub vortex_reports: Vec<VortexReport>,
}

impl BohmianRun {
    pub fn endpoints(&self) -> Vec<(f64, f64)> {
        self.trajectories.iter().map(|t| t.position()).collect()
    }
}

/// Propagates `psi0` and carries the seeds along in lock-step.
pub fn integrate_bohmian(
    psi0: &WaveField,
    seeds: &[SeedPoint],
    schedule: &PropagationSchedule,
    config: &BohmianConfig,
    constants: &PhysicalConstants,
) -> Result<BohmianRun> {
    config.validate()?;
    let grid = psi0.grid;
    for s in seeds {
        if !(s.x >= grid.x_min && s.x < grid.x_max && s.z >= grid.z_min && s.z < grid.z_max) {
            return Err(Error::InvalidParameter(format!("seed ({}, {}) outside the grid", s.x, s.z)));
        }
    }
    let mut prop = Propagator::new(psi0, &schedule.model, &schedule.config, constants)?;
    let mut trajs: Vec<BohmianTrajectory> = seeds.iter().map(|s| BohmianTrajectory::new(*s, psi0.t)).collect();
    let mut frame_a = GuidanceField::new(psi0, prop.spectral());
    let mut vortex_reports = Vec::new();
    let mut pending: Vec<f64> = schedule.vortex_times.clone();
    pending.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let vopts = VortexOptions::default();
    let mut update = 0usize;
    while prop.steps() < schedule.n_steps {
        let n = config.wave_steps_per_update.min(schedule.n_steps - prop.steps());
        prop.advance(n)?;
        let field = prop.wavefield();
        let frame_b = GuidanceField::new(&field, prop.spectral());
        update += 1;
        let record = update % config.record_every == 0 || prop.steps() == schedule.n_steps;
        let pair = FramePair::new(&frame_a, &frame_b, config.carrier_energy, constants);
        trajs
            .par_iter_mut()
            .try_for_each(|t| advance(t, &pair, config, constants, record))?;
        while let Some(&tv) = pending.first() {
            if frame_b.t + 1e-12 < tv {
                break;
            }
            pending.remove(0);
            let region = schedule.vortex_region.unwrap_or_else(|| Region::whole(&grid));
            vortex_reports.push(detect_vortices_in(&frame_b, region, &vopts, constants)?);
        }
        frame_a = frame_b;
    }
    for t in trajs.iter_mut() {
        if t.path.last() != Some(&t.current) {
            t.path.push(t.current);
        }
        let (x, z) = t.position();
        t.trapped = t.active() && z < config.trap_height && x.abs() > config.x_cut;
        if t.min_psi.is_infinite() {
            t.min_psi = 1.0;
        }
    }
    Ok(BohmianRun {
        trajectories: trajs,
        final_field: prop.wavefield(),
        vortex_reports,
    })
}

/// Smallest distance between any two trajectories at a common recorded time,
/// with the time where it occurs. Paths are compared index by index, skipping
/// entries whose time differs from the longest path (exit or capture points).
pub fn min_pairwise_separation(trajs: &[BohmianTrajectory]) -> Option<(f64, f64)> {
    let reference = trajs.iter().max_by_key(|t| t.path.len())?;
    let mut best: Option<(f64, f64)> = None;
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(trajs.len());
    for (k, r) in reference.path.iter().enumerate() {
        let t = r[0];
        pts.clear();
        pts.extend(
            trajs
                .iter()
                .filter_map(|tr| tr.path.get(k))
                .filter(|p| (p[0] - t).abs() < 1e-9)
                .map(|p| (p[1], p[2])),
        );
        if pts.len() < 2 {
            continue;
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut local = best.map_or(f64::INFINITY, |b| b.0);
        let mut found = false;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if pts[j].0 - pts[i].0 >= local {
                    break;
                }
                let d = (pts[j].0 - pts[i].0).hypot(pts[j].1 - pts[i].1);
                if d < local {
                    local = d;
                    found = true;
                }
            }
        }
        if found {
            best = Some((local, t));
        }
    }
    best
}

/// A pair of trajectories that passed through each other between two samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub first: usize,
    pub second: usize,
    /// Time of the later sample (ps).
    pub t: f64,
    /// Separation at the earlier and later sample (Å).
    pub before: f64,
    pub after: f64,
}

/// Pairs whose relative position reverses (cosine below `reversal`) between consecutive
/// common samples while both separations are under `tolerance`. Converging pairs keep
/// their relative direction; a same-time crossing flips it.
pub fn same_time_crossings(trajs: &[BohmianTrajectory], tolerance: f64, reversal: f64) -> Vec<Crossing> {
    let Some(reference) = trajs.iter().max_by_key(|t| t.path.len()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    let mut pts: Vec<(f64, f64, usize)> = Vec::with_capacity(trajs.len());
    for k in 0..reference.path.len().saturating_sub(1) {
        let (t0, t1) = (reference.path[k][0], reference.path[k + 1][0]);
        let at = |tr: &BohmianTrajectory, i: usize, t: f64| tr.path.get(i).filter(|p| (p[0] - t).abs() < 1e-9).copied();
        pts.clear();
        pts.extend(trajs.iter().enumerate().filter_map(|(n, tr)| {
            at(tr, k, t0).and_then(|p| at(tr, k + 1, t1).map(|_| (p[1], p[2], n)))
        }));
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                if pts[j].0 - pts[i].0 >= tolerance {
                    break;
                }
                let (a, b) = (pts[i].2, pts[j].2);
                let r0 = (pts[j].0 - pts[i].0, pts[j].1 - pts[i].1);
                let (p, q) = (trajs[a].path[k + 1], trajs[b].path[k + 1]);
                let r1 = (q[1] - p[1], q[2] - p[2]);
                let (d0, d1) = (r0.0.hypot(r0.1), r1.0.hypot(r1.1));
                if d0 >= tolerance || d1 >= tolerance {
                    continue;
                }
                let cos = (r0.0 * r1.0 + r0.1 * r1.1) / (d0 * d1).max(f64::MIN_POSITIVE);
                if d0 == 0.0 || d1 == 0.0 || cos < reversal {
                    out.push(Crossing {
                        first: a.min(b),
                        second: a.max(b),
                        t: t1,
                        before: d0,
                        after: d1,
                    });
                }
            }
        }
    }
    out
}
