//! Classical trajectories on the smooth potential: fixed-step RK4 for Hamilton's
//! equations, deflection functions, asymptotic energy diagrams, rainbows and trapping.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::fermatian::initial_conditions;
use crate::potential::{InteractionModel, ModelVariant};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    /// Time step (ps).
    pub dt: f64,
    /// Integration horizon (ps).
    pub t_max: f64,
    /// Launch and escape height (Å).
    pub escape_z: f64,
    /// Half-width of the adsorbate's range of influence (Å).
    pub x_cut: f64,
    /// Potential above which a step is halved (meV).
    pub v_halving: f64,
    pub max_halvings: u32,
    /// Keep every n-th step in the stored path; 0 stores only endpoints.
    pub record_every: usize,
    /// Stop as soon as the atom is bound (E_z < 0) beyond x_cut and moving away,
    /// instead of running on to t_max.
    pub stop_when_trapped: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            t_max: 50.0,
            escape_z: 10.27,
            x_cut: 10.6,
            v_halving: 1e6,
            max_halvings: 20,
            record_every: 0,
            stop_when_trapped: false,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.t_max > self.dt && self.escape_z > 0.0 && self.x_cut > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "integrator needs dt > 0, t_max > dt, escape_z > 0, x_cut > 0: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Phase-space point (x, z, p_x, p_z); momenta in meV·ps/Å.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub t: f64,
    pub x: f64,
    pub z: f64,
    pub px: f64,
    pub pz: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    Escaped,
    Trapped,
    /// t_max reached without meeting either asymptotic criterion.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub b: f64,
    pub theta_i: f64,
    pub e_i: f64,
    pub path: Vec<PhasePoint>,
    pub outcome: Outcome,
    /// Outgoing angle from the normal; for non-escaped atoms this is the
    /// instantaneous momentum direction at the last step (diagnostic only).
    pub theta_d: f64,
    /// p_z²/2m + V_Morse(z) at the end.
    pub e_z_final: f64,
    /// p_x²/2m at the end.
    pub e_x_final: f64,
    pub t_final: f64,
    /// Number of upward turning points in z.
    pub bounces: usize,
    /// max |E − E₀| / |E₀| along the path, E₀ the launch energy (E_i plus the
    /// small potential at the launch height).
    pub max_energy_drift: f64,
    pub final_state: PhasePoint,
}

impl TrajectoryRecord {
    pub fn trapped(&self) -> bool {
        self.outcome == Outcome::Trapped
    }

    /// CSV with columns t, x, z, px, pz, E.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "x", "z", "px", "pz", "E"])?;
        for p in &self.path {
            w.write_record([p.t, p.x, p.z, p.px, p.pz, p.energy].map(|v| format!("{v:.12e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

struct Dynamics<'a> {
    model: &'a InteractionModel,
    inv_m: f64,
    v_halving: f64,
}

type State = [f64; 4];

impl Dynamics<'_> {
    fn deriv(&self, s: &State) -> Result<(State, f64)> {
        let (v, (gx, gz)) = self.model.potential_and_gradient(s[0], s[1])?;
        Ok(([s[2] * self.inv_m, s[3] * self.inv_m, -gx, -gz], v))
    }

    fn energy(&self, s: &State) -> Result<f64> {
        Ok(0.5 * self.inv_m * (s[2] * s[2] + s[3] * s[3]) + self.model.potential(s[0], s[1])?)
    }

    /// One RK4 step; None if a stage enters the region V > v_halving.
    fn rk4(&self, s: &State, h: f64) -> Result<Option<State>> {
        let add = |a: &State, k: &State, c: f64| {
            [a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2], a[3] + c * k[3]]
        };
        let (k1, v1) = self.deriv(s)?;
        let (k2, v2) = self.deriv(&add(s, &k1, 0.5 * h))?;
        let (k3, v3) = self.deriv(&add(s, &k2, 0.5 * h))?;
        let (k4, v4) = self.deriv(&add(s, &k3, h))?;
        if [v1, v2, v3, v4].iter().any(|&v| v > self.v_halving || !v.is_finite()) {
            return Ok(None);
        }
        let mut out = *s;
        for i in 0..4 {
            out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        Ok(Some(out))
    }

    /// Advances by `h`, splitting into halves while a stage is too deep in the core.
    fn step(&self, s: &State, h: f64, depth: u32, max_depth: u32) -> Result<State> {
        if let Some(next) = self.rk4(s, h)? {
            return Ok(next);
        }
        if depth >= max_depth {
            return Err(Error::Integration(format!(
                "step still enters V > {} meV after {max_depth} halvings at (x, z) = ({}, {})",
                self.v_halving, s[0], s[1]
            )));
        }
        let mid = self.step(s, 0.5 * h, depth + 1, max_depth)?;
        self.step(&mid, 0.5 * h, depth + 1, max_depth)
    }
}

fn check_smooth(model: &InteractionModel) -> Result<()> {
    if model.variant == ModelVariant::HardWall {
        return Err(Error::InvalidParameter(
            "classical trajectories need a smooth potential, not the hard wall".into(),
        ));
    }
    model.validate()
}

/// Integrates from an explicit phase-space state for `n_steps` steps of `dt`
/// (negative `dt` integrates backward). Returns the final state.
pub fn integrate_fixed(
    model: &InteractionModel,
    start: (f64, f64, f64, f64),
    dt: f64,
    n_steps: usize,
    constants: &PhysicalConstants,
    max_halvings: u32,
) -> Result<(f64, f64, f64, f64)> {
    check_smooth(model)?;
    let dyn_ = Dynamics {
        model,
        inv_m: 1.0 / constants.mass(),
        v_halving: 1e6,
    };
    let mut s = [start.0, start.1, start.2, start.3];
    for _ in 0..n_steps {
        s = dyn_.step(&s, dt, 0, max_halvings)?;
    }
    Ok((s[0], s[1], s[2], s[3]))
}

/// Integrates one trajectory launched with impact parameter `b`.
pub fn integrate_trajectory(
    b: f64,
    theta_i: f64,
    e_i: f64,
    model: &InteractionModel,
    config: &IntegratorConfig,
    constants: &PhysicalConstants,
) -> Result<TrajectoryRecord> {
    check_smooth(model)?;
    config.validate()?;
    let (pos, mom) = initial_conditions(b, theta_i, e_i, config.escape_z, constants)?;
    let dyn_ = Dynamics {
        model,
        inv_m: 1.0 / constants.mass(),
        v_halving: config.v_halving,
    };
    let mut s: State = [pos.x, pos.z, mom.x, mom.z];
    let e0 = dyn_.energy(&s)?;
    let point = |t: f64, s: &State, e: f64| PhasePoint {
        t,
        x: s[0],
        z: s[1],
        px: s[2],
        pz: s[3],
        energy: e,
    };
    let mut path = vec![point(0.0, &s, e0)];
    let n_max = (config.t_max / config.dt).ceil() as usize;
    let half_m_inv = 0.5 * dyn_.inv_m;
    let e_z_of = |s: &State| half_m_inv * s[3] * s[3] + model.morse.value(s[1]);
    let mut max_drift: f64 = 0.0;
    let mut bounces = 0;
    let mut outcome = Outcome::Unresolved;
    let mut step = 0;
    let mut e = e0;
    while step < n_max {
        let prev_pz = s[3];
        s = dyn_.step(&s, config.dt, 0, config.max_halvings)?;
        step += 1;
        e = dyn_.energy(&s)?;
        max_drift = max_drift.max((e - e0).abs() / e0.abs());
        if prev_pz < 0.0 && s[3] >= 0.0 {
            bounces += 1;
        }
        let t = step as f64 * config.dt;
        if config.record_every > 0 && step % config.record_every == 0 {
            path.push(point(t, &s, e));
        }
        if s[1] > config.escape_z && s[3] > 0.0 {
            outcome = Outcome::Escaped;
            break;
        }
        if config.stop_when_trapped
            && s[0].abs() > config.x_cut
            && s[0] * s[2] > 0.0
            && e_z_of(&s) < 0.0
        {
            outcome = Outcome::Trapped;
            break;
        }
    }
    if outcome == Outcome::Unresolved && s[0].abs() > config.x_cut && e_z_of(&s) < 0.0 {
        outcome = Outcome::Trapped;
    }
    let t_final = step as f64 * config.dt;
    let last = point(t_final, &s, e);
    if path.last().map(|p| p.t) != Some(t_final) {
        path.push(last);
    }
    Ok(TrajectoryRecord {
        b,
        theta_i,
        e_i,
        path,
        outcome,
        theta_d: s[2].atan2(s[3]),
        e_z_final: e_z_of(&s),
        e_x_final: half_m_inv * s[2] * s[2],
        t_final,
        bounces,
        max_energy_drift: max_drift,
        final_state: last,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeflectionSample {
    pub b: f64,
    /// None for trapped or unresolved trajectories.
    pub theta_d: Option<f64>,
    pub trapped: bool,
    pub e_z_final: f64,
    pub e_x_final: f64,
    pub t_final: f64,
    pub bounces: usize,
    pub max_energy_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeflectionFunction {
    pub theta_i: f64,
    pub e_i: f64,
    pub variant: ModelVariant,
    pub samples: Vec<DeflectionSample>,
}

fn sample_grid(b_range: (f64, f64), n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(b_range.1 > b_range.0) {
        return Err(Error::InvalidParameter(format!(
            "need n >= 2 samples over a non-empty b range, got {n} over {b_range:?}"
        )));
    }
    Ok((0..n)
        .map(|i| b_range.0 + (b_range.1 - b_range.0) * i as f64 / (n - 1) as f64)
        .collect())
}

/// Deflection function over `n_samples` impact parameters in `b_range`, integrated in parallel.
pub fn deflection_scan(
    theta_i: f64,
    e_i: f64,
    model: &InteractionModel,
    b_range: (f64, f64),
    n_samples: usize,
    config: &IntegratorConfig,
    constants: &PhysicalConstants,
) -> Result<DeflectionFunction> {
    let cfg = IntegratorConfig {
        record_every: 0,
        ..*config
    };
    let samples = sample_grid(b_range, n_samples)?
        .into_par_iter()
        .map(|b| {
            let r = integrate_trajectory(b, theta_i, e_i, model, &cfg, constants)?;
            Ok(DeflectionSample {
                b,
                theta_d: (r.outcome == Outcome::Escaped).then_some(r.theta_d),
                trapped: r.trapped(),
                e_z_final: r.e_z_final,
                e_x_final: r.e_x_final,
                t_final: r.t_final,
                bounces: r.bounces,
                max_energy_drift: r.max_energy_drift,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DeflectionFunction {
        theta_i,
        e_i,
        variant: model.variant,
        samples,
    })
}

impl DeflectionFunction {
    /// CSV with columns b, theta_d_or_NaN, trapped_flag, E_z, E_x.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["b", "theta_d", "trapped", "E_z", "E_x"])?;
        for s in &self.samples {
            w.write_record([
                format!("{:.10}", s.b),
                format!("{:.12}", s.theta_d.unwrap_or(f64::NAN)),
                (s.trapped as u8).to_string(),
                format!("{:.12e}", s.e_z_final),
                format!("{:.12e}", s.e_x_final),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Maximal runs of consecutive escaped samples whose deflection varies by
    /// less than `max_jump` between neighbours.
    pub fn smooth_branches(&self, max_jump: f64) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start: Option<usize> = None;
        for i in 0..self.samples.len() {
            let ok = self.samples[i].theta_d.is_some();
            let continues = match (start, i.checked_sub(1)) {
                (Some(_), Some(j)) => match (self.samples[j].theta_d, self.samples[i].theta_d) {
                    (Some(a), Some(b)) => (a - b).abs() < max_jump,
                    _ => false,
                },
                _ => false,
            };
            if start.is_some() && !continues {
                out.push(start.unwrap()..i);
                start = None;
            }
            if ok && start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            out.push(s..self.samples.len());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rainbow {
    pub b: f64,
    pub theta_r: f64,
    pub delta_k_r: f64,
    pub kind: ExtremumKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RainbowReport {
    pub extrema: Vec<Rainbow>,
    /// Branches skipped for having fewer than three samples.
    pub skipped_branches: usize,
}

/// Largest deflection jump (rad) between neighbouring samples of one smooth branch.
pub const BRANCH_JUMP: f64 = 0.15;
/// Minimum depth (rad) of an extremum relative to the branch values on either side.
pub const RAINBOW_PROMINENCE: f64 = 2e-3;

/// Interior extrema of θ_d(b) on smooth branches, refined by a parabola through three samples.
pub fn find_rainbows(df: &DeflectionFunction, constants: &PhysicalConstants) -> RainbowReport {
    let k = constants.wavenumber(df.e_i);
    let mut extrema = Vec::new();
    let mut skipped = 0;
    for branch in df.smooth_branches(BRANCH_JUMP) {
        if branch.len() < 3 {
            skipped += 1;
            continue;
        }
        let b: Vec<f64> = df.samples[branch.clone()].iter().map(|s| s.b).collect();
        let th: Vec<f64> = df.samples[branch.clone()]
            .iter()
            .map(|s| s.theta_d.unwrap())
            .collect();
        for i in 1..th.len() - 1 {
            let kind = if th[i] > th[i - 1] && th[i] >= th[i + 1] {
                ExtremumKind::Max
            } else if th[i] < th[i - 1] && th[i] <= th[i + 1] {
                ExtremumKind::Min
            } else {
                continue;
            };
            // Prominence: the branch must fall away on both sides by the threshold.
            let side = |range: &mut dyn Iterator<Item = usize>| {
                let mut best: f64 = 0.0;
                for j in range {
                    let d = match kind {
                        ExtremumKind::Max => th[i] - th[j],
                        ExtremumKind::Min => th[j] - th[i],
                    };
                    if d < 0.0 {
                        break;
                    }
                    best = best.max(d);
                }
                best
            };
            let left = side(&mut (0..i).rev());
            let right = side(&mut (i + 1..th.len()));
            if left.min(right) < RAINBOW_PROMINENCE {
                continue;
            }
            let (y0, y1, y2) = (th[i - 1], th[i], th[i + 1]);
            let h = b[i + 1] - b[i];
            let denom = y0 - 2.0 * y1 + y2;
            let shift = if denom != 0.0 { 0.5 * (y0 - y2) / denom } else { 0.0 };
            let theta_r = y1 - 0.25 * (y0 - y2) * shift;
            extrema.push(Rainbow {
                b: b[i] + shift * h,
                theta_r,
                delta_k_r: k * (theta_r.sin() - df.theta_i.sin()),
                kind,
            });
        }
    }
    RainbowReport {
        extrema,
        skipped_branches: skipped,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySample {
    pub b: f64,
    pub e_z: f64,
    pub trapped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyDiagram {
    pub theta_i: f64,
    pub e_i: f64,
    pub samples: Vec<EnergySample>,
}

impl From<&DeflectionFunction> for EnergyDiagram {
    fn from(df: &DeflectionFunction) -> Self {
        Self {
            theta_i: df.theta_i,
            e_i: df.e_i,
            samples: df
                .samples
                .iter()
                .map(|s| EnergySample {
                    b: s.b,
                    e_z: s.e_z_final,
                    trapped: s.trapped,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyFeatures {
    /// Local minima of E_z over b (rainbow candidates): (b, E_z).
    pub minima: Vec<(f64, f64)>,
    /// Impact parameters where E_z crosses zero.
    pub zero_crossings: Vec<f64>,
    /// Impact parameters where E_z reaches E_i (outgoing along the normal).
    pub normal_points: Vec<f64>,
}

impl EnergyDiagram {
    /// CSV with columns b, E_z, trapped.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["b", "E_z", "trapped"])?;
        for s in &self.samples {
            w.write_record([
                format!("{:.10}", s.b),
                format!("{:.12e}", s.e_z),
                (s.trapped as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// All b where the sampled E_z(b) equals `target`, by linear interpolation.
    pub fn crossings(&self, target: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for w in self.samples.windows(2) {
            let (a, c) = (w[0].e_z - target, w[1].e_z - target);
            if a == 0.0 {
                out.push(w[0].b);
            } else if a * c < 0.0 {
                out.push(w[0].b + (w[1].b - w[0].b) * a / (a - c));
            }
        }
        if let Some(last) = self.samples.last() {
            if last.e_z == target {
                out.push(last.b);
            }
        }
        out
    }

    pub fn features(&self) -> EnergyFeatures {
        let s = &self.samples;
        let mut minima = Vec::new();
        for i in 1..s.len().saturating_sub(1) {
            if !s[i].trapped && s[i].e_z < s[i - 1].e_z && s[i].e_z <= s[i + 1].e_z && s[i].e_z > 0.0 {
                minima.push((s[i].b, s[i].e_z));
            }
        }
        EnergyFeatures {
            minima,
            zero_crossings: self.crossings(0.0),
            normal_points: self.crossings(self.e_i),
        }
    }
}

/// Asymptotic-energy diagram E_z(b); the same trajectories as [`deflection_scan`].
pub fn energy_diagram(
    theta_i: f64,
    e_i: f64,
    model: &InteractionModel,
    b_range: (f64, f64),
    n_samples: usize,
    config: &IntegratorConfig,
    constants: &PhysicalConstants,
) -> Result<EnergyDiagram> {
    let df = deflection_scan(theta_i, e_i, model, b_range, n_samples, config, constants)?;
    Ok(EnergyDiagram::from(&df))
}

/// Impact parameters sharing the asymptotic energy `e_z_target`, grouped in
/// consecutive pairs along b (a trailing odd root forms its own group).
pub fn newton_homologous_pairs(e_z_target: f64, diagram: &EnergyDiagram) -> Vec<Vec<f64>> {
    let roots = diagram.crossings(e_z_target);
    roots.chunks(2).map(|c| c.to_vec()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrappingSummary {
    pub intervals: Vec<(f64, f64)>,
    pub fraction: f64,
}

/// Trapped impact-parameter intervals (edges at midpoints to the neighbouring
/// untrapped samples) and the trapped fraction of the scanned range.
pub fn trapping_summary(df: &DeflectionFunction) -> TrappingSummary {
    let s = &df.samples;
    if s.len() < 2 {
        return TrappingSummary {
            intervals: Vec::new(),
            fraction: 0.0,
        };
    }
    let (lo, hi) = (s[0].b, s[s.len() - 1].b);
    let edge = |i: usize, j: usize| 0.5 * (s[i].b + s[j].b);
    let mut intervals = Vec::new();
    let mut i = 0;
    while i < s.len() {
        if !s[i].trapped {
            i += 1;
            continue;
        }
        let start = i;
        while i < s.len() && s[i].trapped {
            i += 1;
        }
        let a = if start == 0 { lo } else { edge(start - 1, start) };
        let b = if i == s.len() { hi } else { edge(i - 1, i) };
        intervals.push((a, b));
    }
    let covered: f64 = intervals.iter().map(|(a, b)| b - a).sum();
    TrappingSummary {
        fraction: covered / (hi - lo),
        intervals,
    }
}
