use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::sync::mpsc::{sync_channel, SyncSender};
use std::thread::JoinHandle;

use super::grid::Grid2D;
use super::spectral::Spectral;
use super::wavefield::WaveField;
use crate::constants::PhysicalConstants;
use crate::error::{Error, Result};
use crate::potential::{InteractionModel, ModelVariant};

/// Absorbing strips outside the analysis cell. Each step the field is multiplied by
/// exp(−W dt/ħ) with W = strength·sin²(π s/2), s the fractional depth into a strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorberSpec {
    /// |x| where the side strips begin (Å).
    pub x_inner: f64,
    /// z where the top strip begins (Å).
    pub z_inner: f64,
    /// Peak absorbing potential (meV).
    pub strength: f64,
}

impl AbsorberSpec {
    pub fn mask(&self, grid: &Grid2D, dt: f64, constants: &PhysicalConstants) -> Vec<f64> {
        let ramp = |d: f64, w: f64| -> f64 {
            if d <= 0.0 || w <= 0.0 {
                0.0
            } else {
                (0.5 * std::f64::consts::PI * (d / w).min(1.0)).sin().powi(2)
            }
        };
        let wx = grid.x_max.min(-grid.x_min) - self.x_inner;
        let wz = grid.z_max - self.z_inner;
        let mut out = Vec::with_capacity(grid.len());
        for ix in 0..grid.nx {
            let sx = ramp(grid.x(ix).abs() - self.x_inner, wx);
            for iz in 0..grid.nz {
                let sz = ramp(grid.z(iz) - self.z_inner, wz);
                let w = self.strength * sx.max(sz);
                out.push((-w * dt / constants.hbar).exp());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationConfig {
    /// Time step (ps).
    pub dt: f64,
    /// The sampled potential is clipped at this value (meV) to keep the stability bound finite.
    pub v_cap: f64,
    pub absorber: Option<AbsorberSpec>,
    /// Steps between norm checks; zero disables them.
    pub norm_check_every: usize,
    /// Relative norm drift that aborts the run (only checked without absorber).
    pub norm_abort: f64,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self {
            dt: 8e-4,
            v_cap: 200.0,
            absorber: None,
            norm_check_every: 1000,
            norm_abort: 1e-5,
        }
    }
}

/// Potential sampled on the grid and clipped at `v_cap`. Points where the
/// Lennard-Jones term is singular take the cap.
pub fn sample_potential(model: &InteractionModel, grid: &Grid2D, v_cap: f64) -> Result<Vec<f64>> {
    if model.variant == ModelVariant::HardWall {
        return Err(Error::Domain("the hard-wall model cannot be propagated".into()));
    }
    model.validate()?;
    let mut v = Vec::with_capacity(grid.len());
    for ix in 0..grid.nx {
        let x = grid.x(ix);
        for iz in 0..grid.nz {
            let value = model.potential(x, grid.z(iz)).unwrap_or(v_cap);
            v.push(if value.is_finite() { value.min(v_cap) } else { v_cap });
        }
    }
    Ok(v)
}

/// Explicit-scheme bound ħ/E_max with E_max = max kinetic + max |V|.
pub fn stability_bound(grid: &Grid2D, potential: &[f64], constants: &PhysicalConstants) -> f64 {
    let vmax = potential.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    constants.hbar / (grid.max_kinetic_energy(constants) + vmax)
}

/// Three-level (second-order differencing) propagator with a spectral kinetic operator.
pub struct Propagator {
    grid: Grid2D,
    constants: PhysicalConstants,
    config: PropagationConfig,
    potential: Vec<f64>,
    kinetic: Vec<f64>,
    mask: Option<Vec<f64>>,
    spectral: Spectral,
    prev: Option<Vec<Complex64>>,
    cur: Vec<Complex64>,
    spare: Vec<Complex64>,
    work: Vec<Complex64>,
    t0: f64,
    steps: usize,
    norm0: f64,
    max_drift: f64,
}

impl Propagator {
    pub fn new(
        psi0: &WaveField,
        model: &InteractionModel,
        config: &PropagationConfig,
        constants: &PhysicalConstants,
    ) -> Result<Self> {
        let grid = psi0.grid;
        grid.validate()?;
        if !(config.dt > 0.0) || !(config.v_cap > 0.0) {
            return Err(Error::InvalidParameter("dt and v_cap must be positive".into()));
        }
        let potential = sample_potential(model, &grid, config.v_cap)?;
        let bound = stability_bound(&grid, &potential, constants);
        if config.dt >= bound {
            return Err(Error::Stability { dt: config.dt, bound });
        }
        let spectral = Spectral::new(&grid);
        let c = constants.hbar2_over_2m;
        let kinetic = spectral.table(|kx, kz| c * (kx * kx + kz * kz));
        let mask = config.absorber.map(|a| a.mask(&grid, config.dt, constants));
        let n = grid.len();
        Ok(Self {
            grid,
            constants: *constants,
            config: config.clone(),
            potential,
            kinetic,
            mask,
            spectral,
            prev: None,
            cur: psi0.amplitudes.clone(),
            spare: vec![Complex64::new(0.0, 0.0); n],
            work: vec![Complex64::new(0.0, 0.0); n],
            t0: psi0.t,
            steps: 0,
            norm0: psi0.norm(),
            max_drift: 0.0,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.config.dt
    }

    pub fn time(&self) -> f64 {
        self.t0 + self.steps as f64 * self.config.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.cur
    }

    /// The field one step back (equal to the current one before the first step).
    pub fn previous_amplitudes(&self) -> &[Complex64] {
        self.prev.as_deref().unwrap_or(&self.cur)
    }

    pub fn wavefield(&self) -> WaveField {
        WaveField {
            grid: self.grid,
            amplitudes: self.cur.clone(),
            t: self.time(),
        }
    }

    pub fn spectral(&mut self) -> &mut Spectral {
        &mut self.spectral
    }

    /// Largest relative norm drift seen at the periodic checks.
    pub fn max_norm_drift(&self) -> f64 {
        self.max_drift
    }

    pub fn norm(&self) -> f64 {
        self.cur.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    /// out = H·input, with the clipped sampled potential.
    pub fn apply_hamiltonian(&mut self, input: &[Complex64], out: &mut [Complex64]) {
        out.copy_from_slice(input);
        self.spectral.apply_multiplier(out, &self.kinetic, &mut self.work);
        for ((o, i), v) in out.iter_mut().zip(input).zip(&self.potential) {
            *o += *i * *v;
        }
    }

    /// ⟨H⟩ of the current field (meV).
    pub fn energy(&mut self) -> f64 {
        let input = self.cur.clone();
        let mut h = vec![Complex64::new(0.0, 0.0); input.len()];
        self.apply_hamiltonian(&input, &mut h);
        let num: f64 = input.iter().zip(&h).map(|(a, b)| (a.conj() * b).re).sum();
        let den: f64 = input.iter().map(|a| a.norm_sqr()).sum();
        num / den
    }

    pub fn step(&mut self) -> Result<()> {
        let y = self.config.dt / self.constants.hbar;
        let mut h = std::mem::take(&mut self.spare);
        let cur = std::mem::take(&mut self.cur);
        self.apply_hamiltonian(&cur, &mut h);
        match self.prev.take() {
            None => {
                // Second-order Taylor start: ψ(dt) ≈ (1 − iyH − y²H²/2) ψ(0).
                let mut h2 = vec![Complex64::new(0.0, 0.0); cur.len()];
                self.apply_hamiltonian(&h, &mut h2);
                let mut next = vec![Complex64::new(0.0, 0.0); cur.len()];
                for i in 0..cur.len() {
                    next[i] = cur[i] - Complex64::new(0.0, y) * h[i] - 0.5 * y * y * h2[i];
                }
                self.prev = Some(cur);
                self.cur = next;
                self.spare = h;
            }
            Some(mut prev) => {
                // prev ← ψ(t−dt) − 2iy Hψ(t), then rotate the three buffers.
                let f = Complex64::new(0.0, 2.0 * y);
                for (p, hv) in prev.iter_mut().zip(&h) {
                    *p -= f * *hv;
                }
                self.cur = prev;
                self.prev = Some(cur);
                self.spare = h;
            }
        }
        if let Some(mask) = &self.mask {
            for (c, m) in self.cur.iter_mut().zip(mask) {
                *c *= *m;
            }
            if let Some(p) = self.prev.as_mut() {
                for (c, m) in p.iter_mut().zip(mask) {
                    *c *= *m;
                }
            }
        }
        self.steps += 1;
        let every = self.config.norm_check_every;
        if self.mask.is_none() && every > 0 && self.steps % every == 0 {
            let drift = ((self.norm() - self.norm0) / self.norm0).abs();
            self.max_drift = self.max_drift.max(drift);
            if drift > self.config.norm_abort {
                return Err(Error::NormDrift {
                    drift,
                    steps: self.steps,
                    limit: self.config.norm_abort,
                });
            }
        }
        Ok(())
    }

    pub fn advance(&mut self, n_steps: usize) -> Result<()> {
        for _ in 0..n_steps {
            self.step()?;
        }
        Ok(())
    }
}

/// Background writer for wave-field snapshots; stepping only blocks when
/// more than `capacity` snapshots are queued.
pub struct SnapshotWriter {
    sender: Option<SyncSender<(PathBuf, WaveField)>>,
    handle: Option<JoinHandle<Result<Vec<PathBuf>>>>,
}

impl SnapshotWriter {
    pub fn new(capacity: usize) -> Self {
        let (sender, receiver) = sync_channel::<(PathBuf, WaveField)>(capacity);
        let handle = std::thread::spawn(move || {
            let mut written = Vec::new();
            for (path, field) in receiver {
                field.save(&path)?;
                written.push(path);
            }
            Ok(written)
        });
        Self {
            sender: Some(sender),
            handle: Some(handle),
        }
    }

    pub fn submit(&self, path: PathBuf, field: WaveField) -> Result<()> {
        self.sender
            .as_ref()
            .expect("writer open")
            .send((path, field))
            .map_err(|_| Error::Io(std::io::Error::other("snapshot writer stopped")))
    }

    /// Waits for the queue to drain and returns the written paths.
    pub fn finish(mut self) -> Result<Vec<PathBuf>> {
        self.sender.take();
        match self.handle.take().expect("writer running").join() {
            Ok(r) => r,
            Err(_) => Err(Error::Io(std::io::Error::other("snapshot writer panicked"))),
        }
    }
}

impl Drop for SnapshotWriter {
    fn drop(&mut self) {
        self.sender.take();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

/// Snapshot cadence for [`propagate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotSchedule {
    pub every: usize,
    pub directory: PathBuf,
    pub prefix: String,
}

impl SnapshotSchedule {
    pub fn path(&self, step: usize) -> PathBuf {
        self.directory.join(format!("{}_{step:07}.wfld", self.prefix))
    }
}

/// Advances `psi` by `n_steps`, writing snapshots (including the initial and
/// final fields) when a schedule is given.
pub fn propagate(
    psi: &WaveField,
    model: &InteractionModel,
    config: &PropagationConfig,
    n_steps: usize,
    constants: &PhysicalConstants,
    snapshots: Option<&SnapshotSchedule>,
) -> Result<WaveField> {
    let mut prop = Propagator::new(psi, model, config, constants)?;
    let writer = snapshots.map(|_| SnapshotWriter::new(2));
    let emit = |prop: &Propagator, writer: &Option<SnapshotWriter>| -> Result<()> {
        if let (Some(s), Some(w)) = (snapshots, writer) {
            let n = prop.steps();
            if n == n_steps || (s.every > 0 && n % s.every == 0) {
                w.submit(s.path(n), prop.wavefield())?;
            }
        }
        Ok(())
    };
    emit(&prop, &writer)?;
    for _ in 0..n_steps {
        prop.step()?;
        emit(&prop, &writer)?;
    }
    if let Some(w) = writer {
        w.finish()?;
    }
    Ok(prop.wavefield())
}
