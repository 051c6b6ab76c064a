//! Run configuration: TOML with unit-suffixed keys. Every physical default is the
//! model's reference value; `E_i_meV` and `kind` must be given.

#![allow(non_snake_case)]

use heco::bohmian::{BohmianConfig, Region, SEED_LINE_OFFSETS};
use heco::newtonian::IntegratorConfig;
use heco::potential::{HardWallParams, LennardJonesParams, MorseParams};
use heco::tdse::{AbsorberSpec, Grid2D, InitialStateSpec, PropagationConfig};
use heco::{InteractionModel, ModelVariant};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunKind {
    PotentialScan,
    BoundStates,
    FermatTrace,
    FermatSeparatrices,
    HardwallIntensity,
    NewtonDeflection,
    NewtonEnergyDiagram,
    NewtonRainbows,
    TdsePropagate,
    TdseIntensity,
    BohmTrajectories,
    BohmVortices,
}

impl RunKind {
    pub fn name(&self) -> String {
        serde_json::to_value(self).unwrap().as_str().unwrap().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub kind: RunKind,
    #[serde(rename = "E_i_meV")]
    pub e_i_mev: f64,
    #[serde(default)]
    pub theta_i_deg: f64,
    /// Seed for random Born sampling; the command line flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Prefix for artifact names; the run kind when empty.
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub potential_scan: PotentialScanSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub hardwall: HardwallSection,
    #[serde(default)]
    pub newton: NewtonSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub packet: PacketSection,
    #[serde(default)]
    pub propagation: PropagationSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub bohm: BohmSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub variant: ModelVariant,
    #[serde(rename = "morse_D_meV")]
    pub morse_d_mev: f64,
    pub morse_alpha_per_A: f64,
    pub morse_z_m_A: f64,
    pub lj_epsilon_meV: f64,
    pub lj_sigma_A: f64,
    pub hardwall_a_A: f64,
    pub hardwall_z_r_A: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = InteractionModel::default();
        Self {
            variant: m.variant,
            morse_d_mev: m.morse.d,
            morse_alpha_per_A: m.morse.alpha,
            morse_z_m_A: m.morse.z_m,
            lj_epsilon_meV: m.lj.epsilon,
            lj_sigma_A: m.lj.sigma,
            hardwall_a_A: m.hardwall.a,
            hardwall_z_r_A: m.hardwall.z_r,
        }
    }
}

impl ModelSection {
    pub fn model(&self, variant: ModelVariant) -> InteractionModel {
        InteractionModel {
            variant,
            morse: self.morse(),
            lj: LennardJonesParams {
                epsilon: self.lj_epsilon_meV,
                sigma: self.lj_sigma_A,
            },
            hardwall: self.wall(),
        }
    }

    pub fn morse(&self) -> MorseParams {
        MorseParams {
            d: self.morse_d_mev,
            alpha: self.morse_alpha_per_A,
            z_m: self.morse_z_m_A,
        }
    }

    pub fn wall(&self) -> HardWallParams {
        HardWallParams {
            a: self.hardwall_a_A,
            z_r: self.hardwall_z_r_A,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialScanSection {
    pub x_min_A: f64,
    pub x_max_A: f64,
    pub nx: usize,
    pub z_min_A: f64,
    pub z_max_A: f64,
    pub nz: usize,
}

impl Default for PotentialScanSection {
    fn default() -> Self {
        Self {
            x_min_A: -12.0,
            x_max_A: 12.0,
            nx: 241,
            z_min_A: 0.0,
            z_max_A: 12.0,
            nz: 121,
        }
    }
}

/// Impact-parameter scans shared by the ray and Newtonian kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    pub b_min_A: f64,
    pub b_max_A: f64,
    pub samples: usize,
    /// Newtonian kinds repeat the scan for each listed model.
    pub variants: Vec<ModelVariant>,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            b_min_A: -10.6,
            b_max_A: 10.6,
            samples: 2001,
            variants: vec![ModelVariant::Full],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardwallSection {
    pub samples: usize,
}

impl Default for HardwallSection {
    fn default() -> Self {
        Self { samples: 20001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonSection {
    pub dt_ps: f64,
    pub t_max_ps: f64,
    pub escape_z_A: f64,
    pub x_cut_A: f64,
    pub v_halving_meV: f64,
    pub max_halvings: u32,
    pub stop_when_trapped: bool,
    /// Impact parameters whose full trajectories are written.
    pub trajectories_b_A: Vec<f64>,
    pub record_every: usize,
}

impl Default for NewtonSection {
    fn default() -> Self {
        let c = IntegratorConfig::default();
        Self {
            dt_ps: c.dt,
            t_max_ps: c.t_max,
            escape_z_A: c.escape_z,
            x_cut_A: c.x_cut,
            v_halving_meV: c.v_halving,
            max_halvings: c.max_halvings,
            stop_when_trapped: c.stop_when_trapped,
            trajectories_b_A: Vec::new(),
            record_every: 10,
        }
    }
}

impl NewtonSection {
    pub fn integrator(&self, record: bool) -> IntegratorConfig {
        IntegratorConfig {
            dt: self.dt_ps,
            t_max: self.t_max_ps,
            escape_z: self.escape_z_A,
            x_cut: self.x_cut_A,
            v_halving: self.v_halving_meV,
            max_halvings: self.max_halvings,
            record_every: if record { self.record_every } else { 0 },
            stop_when_trapped: self.stop_when_trapped,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub x_min_A: f64,
    pub x_max_A: f64,
    pub z_min_A: f64,
    pub z_max_A: f64,
    pub nx: usize,
    pub nz: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            x_min_A: -40.0,
            x_max_A: 40.0,
            z_min_A: -13.0,
            z_max_A: 70.0,
            nx: 512,
            nz: 512,
        }
    }
}

impl GridSection {
    pub fn grid(&self) -> heco::Result<Grid2D> {
        Grid2D::new(self.x_min_A, self.x_max_A, self.z_min_A, self.z_max_A, self.nx, self.nz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PacketSection {
    pub n_gaussians: usize,
    pub spacing_A: f64,
    pub sigma_x_A: f64,
    pub sigma_z_A: f64,
    pub center_x_A: f64,
    pub center_z_A: f64,
}

impl Default for PacketSection {
    fn default() -> Self {
        let s = InitialStateSpec::default();
        Self {
            n_gaussians: s.n_gaussians,
            spacing_A: s.spacing,
            sigma_x_A: s.sigma_x,
            sigma_z_A: s.sigma_z,
            center_x_A: s.center_x,
            center_z_A: s.center_z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationSection {
    pub dt_ps: f64,
    pub t_end_ps: f64,
    pub v_cap_meV: f64,
    pub norm_check_every: usize,
    pub norm_abort: f64,
    /// Steps between snapshots (and log rows); zero writes only the final field.
    pub snapshot_every: usize,
    /// Absorbing strips; omitted for a closed periodic box.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorber: Option<AbsorberSection>,
}

impl Default for PropagationSection {
    fn default() -> Self {
        let p = PropagationConfig::default();
        Self {
            dt_ps: 1e-3,
            t_end_ps: 7.2,
            v_cap_meV: p.v_cap,
            norm_check_every: p.norm_check_every,
            norm_abort: p.norm_abort,
            snapshot_every: 0,
            absorber: None,
        }
    }
}

impl PropagationSection {
    pub fn config(&self) -> PropagationConfig {
        PropagationConfig {
            dt: self.dt_ps,
            v_cap: self.v_cap_meV,
            absorber: self.absorber.as_ref().map(|a| AbsorberSpec {
                x_inner: a.x_inner_A,
                z_inner: a.z_inner_A,
                strength: a.strength_meV,
            }),
            norm_check_every: self.norm_check_every,
            norm_abort: self.norm_abort,
        }
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end_ps / self.dt_ps).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorberSection {
    pub x_inner_A: f64,
    pub z_inner_A: f64,
    pub strength_meV: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSection {
    /// Models whose spectra are extracted; the flat surface is always run as the reference.
    pub variants: Vec<ModelVariant>,
    pub cell_min_A: f64,
    pub cell_max_A: f64,
    pub z_analysis_A: f64,
    /// Window top; the grid top when omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_top_A: Option<f64>,
    pub times_ps: Vec<f64>,
    pub max_downward_fraction: f64,
    pub max_boundary_density: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            variants: vec![ModelVariant::Full],
            cell_min_A: -26.25,
            cell_max_A: 26.25,
            z_analysis_A: 8.0,
            z_top_A: Some(63.0),
            times_ps: vec![7.2],
            max_downward_fraction: 1e-3,
            max_boundary_density: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Seeding {
    Lines,
    BornQuantiles,
    BornRandom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BohmSection {
    pub seeding: Seeding,
    pub line_offsets_A: Vec<f64>,
    pub seeds_per_line: usize,
    pub seed_x_min_A: f64,
    pub seed_x_max_A: f64,
    /// Ensemble size for Born sampling.
    pub n_born: usize,
    pub interpolation_order: usize,
    pub node_threshold: f64,
    pub wave_steps_per_update: usize,
    pub max_subdivision: u32,
    pub max_displacement: f64,
    pub record_every: usize,
    pub carrier_energy_meV: f64,
    pub trap_height_A: f64,
    pub x_cut_A: f64,
    pub vortex_times_ps: Vec<f64>,
    pub vortex_x_min_A: f64,
    pub vortex_x_max_A: f64,
    pub vortex_z_min_A: f64,
    pub vortex_z_max_A: f64,
    pub density_bins: usize,
}

impl Default for BohmSection {
    fn default() -> Self {
        let b = BohmianConfig::default();
        Self {
            seeding: Seeding::Lines,
            line_offsets_A: SEED_LINE_OFFSETS.to_vec(),
            seeds_per_line: 41,
            seed_x_min_A: -20.0,
            seed_x_max_A: 20.0,
            n_born: 5000,
            interpolation_order: b.interpolation_order,
            node_threshold: b.node_threshold,
            wave_steps_per_update: b.wave_steps_per_update,
            max_subdivision: b.max_subdivision,
            max_displacement: b.max_displacement,
            record_every: b.record_every,
            carrier_energy_meV: b.carrier_energy,
            trap_height_A: b.trap_height,
            x_cut_A: b.x_cut,
            vortex_times_ps: Vec::new(),
            vortex_x_min_A: -15.0,
            vortex_x_max_A: 15.0,
            vortex_z_min_A: 0.5,
            vortex_z_max_A: 10.0,
            density_bins: 64,
        }
    }
}

impl BohmSection {
    pub fn config(&self) -> BohmianConfig {
        BohmianConfig {
            interpolation_order: self.interpolation_order,
            node_threshold: self.node_threshold,
            wave_steps_per_update: self.wave_steps_per_update,
            max_subdivision: self.max_subdivision,
            max_displacement: self.max_displacement,
            record_every: self.record_every,
            carrier_energy: self.carrier_energy_meV,
            trap_height: self.trap_height_A,
            x_cut: self.x_cut_A,
        }
    }

    pub fn region(&self) -> Region {
        Region {
            x_min: self.vortex_x_min_A,
            x_max: self.vortex_x_max_A,
            z_min: self.vortex_z_min_A,
            z_max: self.vortex_z_max_A,
        }
    }
}

impl RunConfig {
    pub fn theta_i(&self) -> f64 {
        self.theta_i_deg.to_radians()
    }

    pub fn label(&self) -> String {
        if self.label.is_empty() {
            self.kind.name()
        } else {
            self.label.clone()
        }
    }

    pub fn initial_state(&self) -> InitialStateSpec {
        let p = &self.packet;
        InitialStateSpec {
            n_gaussians: p.n_gaussians,
            spacing: p.spacing_A,
            sigma_x: p.sigma_x_A,
            sigma_z: p.sigma_z_A,
            center_x: p.center_x_A,
            center_z: p.center_z_A,
            e_i: self.e_i_mev,
            theta_i: self.theta_i(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Every violation found, in key order; empty when the run can start.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                v.push(msg.to_string());
            }
        };
        need(self.e_i_mev > 0.0 && self.e_i_mev.is_finite(), "E_i_meV must be positive");
        need(self.theta_i_deg.abs() < 90.0, "theta_i_deg must lie in (-90, 90)");
        let m = &self.model;
        need(m.morse_d_mev > 0.0, "model.morse_D_meV must be positive");
        need(m.morse_alpha_per_A > 0.0, "model.morse_alpha_per_A must be positive");
        need(m.lj_epsilon_meV > 0.0, "model.lj_epsilon_meV must be positive");
        need(m.lj_sigma_A > 0.0, "model.lj_sigma_A must be positive");
        need(
            m.hardwall_a_A > 0.0 && m.hardwall_z_r_A >= 0.0 && m.hardwall_z_r_A < m.hardwall_a_A,
            "model.hardwall_a_A and model.hardwall_z_r_A need a > 0 and 0 <= z_r < a",
        );
        let smooth = |variant: ModelVariant| variant != ModelVariant::HardWall;
        match self.kind {
            RunKind::PotentialScan => {
                let p = &self.potential_scan;
                need(smooth(m.variant), "model.variant = HardWall has no potential to scan");
                need(p.x_max_A > p.x_min_A && p.z_max_A > p.z_min_A, "potential_scan ranges must be non-empty");
                need(p.nx >= 2 && p.nz >= 2, "potential_scan.nx and nz must be at least 2");
            }
            RunKind::FermatTrace | RunKind::NewtonDeflection | RunKind::NewtonEnergyDiagram | RunKind::NewtonRainbows => {
                let s = &self.scan;
                need(s.b_max_A > s.b_min_A, "scan.b_max_A must exceed scan.b_min_A");
                need(s.samples >= 2, "scan.samples must be at least 2");
                if self.kind != RunKind::FermatTrace {
                    need(!s.variants.is_empty(), "scan.variants must list at least one model");
                    need(s.variants.iter().all(|v| smooth(*v)), "scan.variants cannot include HardWall for Newtonian runs");
                    let n = &self.newton;
                    need(n.dt_ps > 0.0 && n.t_max_ps > n.dt_ps, "newton.dt_ps must be positive and below newton.t_max_ps");
                    need(n.escape_z_A > 0.0 && n.x_cut_A > 0.0, "newton.escape_z_A and newton.x_cut_A must be positive");
                }
            }
            RunKind::HardwallIntensity => need(self.hardwall.samples >= 3, "hardwall.samples must be at least 3"),
            RunKind::TdsePropagate | RunKind::TdseIntensity | RunKind::BohmTrajectories | RunKind::BohmVortices => {
                let g = &self.grid;
                need(g.x_max_A > g.x_min_A && g.z_max_A > g.z_min_A, "grid ranges must be non-empty");
                need(
                    g.nx.is_power_of_two() && g.nz.is_power_of_two() && g.nx >= 8 && g.nz >= 8,
                    "grid.nx and grid.nz must be powers of two (at least 8)",
                );
                need(smooth(m.variant), "model.variant = HardWall cannot be propagated");
                let p = &self.propagation;
                need(p.dt_ps > 0.0, "propagation.dt_ps must be positive");
                need(p.t_end_ps > 0.0, "propagation.t_end_ps must be positive");
                need(p.v_cap_meV > 0.0, "propagation.v_cap_meV must be positive");
                if let Some(a) = &p.absorber {
                    need(a.strength_meV >= 0.0, "propagation.absorber.strength_meV must be non-negative");
                    need(
                        a.x_inner_A > 0.0 && a.x_inner_A < g.x_max_A.min(-g.x_min_A),
                        "propagation.absorber.x_inner_A must lie inside the grid",
                    );
                    need(
                        a.z_inner_A > g.z_min_A && a.z_inner_A < g.z_max_A,
                        "propagation.absorber.z_inner_A must lie inside the grid",
                    );
                }
                let pk = &self.packet;
                need(pk.n_gaussians > 0, "packet.n_gaussians must be positive");
                need(pk.sigma_x_A > 0.0 && pk.sigma_z_A > 0.0, "packet widths must be positive");
                need(pk.spacing_A >= 0.0, "packet.spacing_A must be non-negative");
                if self.kind == RunKind::TdseIntensity {
                    let a = &self.analysis;
                    need(!a.times_ps.is_empty(), "analysis.times_ps must list at least one time");
                    need(
                        a.times_ps.iter().all(|t| *t > 0.0 && *t <= p.t_end_ps + 1e-9),
                        "analysis.times_ps must lie in (0, propagation.t_end_ps]",
                    );
                    need(a.cell_max_A > a.cell_min_A, "analysis.cell_max_A must exceed analysis.cell_min_A");
                    need(!a.variants.is_empty(), "analysis.variants must list at least one model");
                    need(a.variants.iter().all(|v| smooth(*v)), "analysis.variants cannot include HardWall");
                }
                if matches!(self.kind, RunKind::BohmTrajectories | RunKind::BohmVortices) {
                    let b = &self.bohm;
                    need(
                        (2..=10).contains(&b.interpolation_order) && b.interpolation_order % 2 == 0,
                        "bohm.interpolation_order must be one of 2, 4, 6, 8, 10",
                    );
                    need(b.wave_steps_per_update > 0, "bohm.wave_steps_per_update must be positive");
                    need(b.max_displacement > 0.0, "bohm.max_displacement must be positive");
                    need(b.record_every > 0, "bohm.record_every must be positive");
                    need(
                        b.vortex_times_ps.iter().all(|t| *t >= 0.0 && *t <= p.t_end_ps + 1e-9),
                        "bohm.vortex_times_ps must lie in [0, propagation.t_end_ps]",
                    );
                    need(
                        b.vortex_x_max_A > b.vortex_x_min_A && b.vortex_z_max_A > b.vortex_z_min_A,
                        "bohm vortex region must be non-empty",
                    );
                    if self.kind == RunKind::BohmTrajectories {
                        match b.seeding {
                            Seeding::Lines => {
                                need(!b.line_offsets_A.is_empty(), "bohm.line_offsets_A must not be empty");
                                need(b.seeds_per_line >= 1, "bohm.seeds_per_line must be positive");
                                need(b.seed_x_max_A >= b.seed_x_min_A, "bohm.seed_x_max_A must not be below bohm.seed_x_min_A");
                            }
                            _ => need(b.n_born >= 1, "bohm.n_born must be positive"),
                        }
                    } else {
                        need(!b.vortex_times_ps.is_empty(), "bohm.vortex_times_ps must list at least one time");
                    }
                }
            }
            RunKind::BoundStates | RunKind::FermatSeparatrices => {}
        }
        v
    }
}

/// Parse failure with every problem found.
#[derive(Debug)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

/// A configuration with every optional entry present, used as the key schema.
fn schema() -> toml::Table {
    let mut c = RunConfig {
        kind: RunKind::BoundStates,
        e_i_mev: 10.0,
        theta_i_deg: 0.0,
        seed: Some(0),
        label: "x".into(),
        model: Default::default(),
        potential_scan: Default::default(),
        scan: Default::default(),
        hardwall: Default::default(),
        newton: Default::default(),
        grid: Default::default(),
        packet: Default::default(),
        propagation: Default::default(),
        analysis: Default::default(),
        bohm: Default::default(),
    };
    c.propagation.absorber = Some(AbsorberSection {
        x_inner_A: 1.0,
        z_inner_A: 1.0,
        strength_meV: 1.0,
    });
    c.analysis.z_top_A = Some(1.0);
    toml::Table::try_from(&c).expect("schema serializes")
}

fn unknown_keys(user: &toml::Table, schema: &toml::Table, path: &str, out: &mut Vec<String>) {
    for (k, v) in user {
        let full = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
        match schema.get(k) {
            None => out.push(format!("unknown key `{full}`")),
            Some(toml::Value::Table(s)) => match v {
                toml::Value::Table(u) => unknown_keys(u, s, &full, out),
                _ => out.push(format!("`{full}` must be a section")),
            },
            Some(_) => {}
        }
    }
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigErrors> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigErrors(vec![e.to_string()]))?;
    let mut errors = Vec::new();
    unknown_keys(&table, &schema(), "", &mut errors);
    for key in ["kind", "E_i_meV"] {
        if !table.contains_key(key) {
            errors.push(format!("missing required key `{key}`"));
        }
    }
    if !errors.is_empty() {
        return Err(ConfigErrors(errors));
    }
    let config: RunConfig = toml::from_str(text).map_err(|e| ConfigErrors(vec![e.message().to_string()]))?;
    let v = config.violations();
    if v.is_empty() {
        Ok(config)
    } else {
        Err(ConfigErrors(v))
    }
}
