//! One function per run kind. Each writes its artifacts into `out` and returns their paths.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use heco::bohmian::{
    detect_vortices_in, ensemble_density_check, integrate_bohmian, sample_born_quantiles, sample_born_random,
    seed_lines, BohmianRun, GuidanceField, PropagationSchedule, SeedPoint, VortexOptions, VortexReport,
};
use heco::fermatian::{self, trace_ray};
use heco::newtonian::{self, find_rainbows, integrate_trajectory, trapping_summary, ExtremumKind, EnergyDiagram};
use heco::potential::{jump_length, morse_bound_states, morse_turning_points};
use heco::tdse::{
    build_initial_state, reflection_coefficient, remove_plane_wave_contribution, Propagator, SMatrixRow, SMatrixSetup,
    WaveField,
};
use heco::{hardwall, ModelVariant, PhysicalConstants, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{RunConfig, RunKind, Seeding};

struct Out<'a> {
    dir: &'a Path,
    label: String,
    written: Vec<PathBuf>,
}

impl Out<'_> {
    fn file(&mut self, suffix: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(format!("{}_{suffix}", self.label));
        let f = File::create(&path)?;
        self.written.push(path);
        Ok(BufWriter::new(f))
    }

    fn json(&mut self, suffix: &str, value: &serde_json::Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("json value");
        text.push('\n');
        let path = self.dir.join(format!("{}_{suffix}", self.label));
        std::fs::write(&path, text)?;
        self.written.push(path);
        Ok(())
    }

    fn table(&mut self, suffix: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(self.file(suffix)?);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn e(v: f64) -> String {
    format!("{v:.10e}")
}

/// Executes `cfg`; `seed` is the resolved random seed.
pub fn execute(cfg: &RunConfig, dir: &Path, seed: u64, c: &PhysicalConstants) -> Result<Vec<PathBuf>> {
    let mut out = Out {
        dir,
        label: cfg.label(),
        written: Vec::new(),
    };
    match cfg.kind {
        RunKind::PotentialScan => potential_scan(cfg, &mut out)?,
        RunKind::BoundStates => bound_states(cfg, &mut out, c)?,
        RunKind::FermatTrace => fermat_trace(cfg, &mut out)?,
        RunKind::FermatSeparatrices => fermat_separatrices(cfg, &mut out)?,
        RunKind::HardwallIntensity => {
            let scan = hardwall::hardwall_intensity_scan(cfg.e_i_mev, cfg.theta_i(), cfg.hardwall.samples, &cfg.model.wall(), c)?;
            scan.write_csv(out.file("intensity.csv")?)?;
        }
        RunKind::NewtonDeflection | RunKind::NewtonEnergyDiagram | RunKind::NewtonRainbows => newton(cfg, &mut out, c)?,
        RunKind::TdsePropagate => tdse_propagate(cfg, &mut out, c)?,
        RunKind::TdseIntensity => tdse_intensity(cfg, &mut out, c)?,
        RunKind::BohmTrajectories => bohm_trajectories(cfg, &mut out, seed, c)?,
        RunKind::BohmVortices => bohm_vortices(cfg, &mut out, c)?,
    }
    Ok(out.written)
}

fn potential_scan(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let p = &cfg.potential_scan;
    let model = cfg.model.model(cfg.model.variant);
    model.validate()?;
    let axis = |lo: f64, hi: f64, n: usize| (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64);
    let mut rows = Vec::with_capacity(p.nx * p.nz);
    for z in axis(p.z_min_A, p.z_max_A, p.nz) {
        for x in axis(p.x_min_A, p.x_max_A, p.nx) {
            rows.push(vec![format!("{x:.6}"), format!("{z:.6}"), e(model.potential(x, z)?)]);
        }
    }
    out.table("potential.csv", &["x", "z", "V"], rows)
}

fn bound_states(cfg: &RunConfig, out: &mut Out, c: &PhysicalConstants) -> Result<()> {
    let morse = cfg.model.morse();
    let set = morse_bound_states(&morse, c)?;
    let mut rows = Vec::new();
    for (n, &en) in set.energies.iter().enumerate() {
        let (z_in, z_out) = morse_turning_points(&morse, en)?;
        rows.push(vec![
            n.to_string(),
            e(en),
            e(jump_length(&morse, cfg.e_i_mev, en)?),
            e(z_in),
            e(z_out),
        ]);
    }
    out.table("levels.csv", &["n", "E_n", "jump_length", "z_inner", "z_outer"], rows)?;
    out.json("summary.json", &json!({ "hbar_omega": set.hbar_omega, "count": set.count() }))
}

fn fermat_trace(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let s = &cfg.scan;
    let rays = fermatian::deflection_scan(cfg.theta_i(), &cfg.model.wall(), s.b_min_A, s.b_max_A, s.samples)?;
    fermatian::write_deflection_csv(&rays, out.file("deflection.csv")?)?;
    fermatian::write_polylines_csv(&rays, out.file("rays.csv")?)
}

fn fermat_separatrices(cfg: &RunConfig, out: &mut Out) -> Result<()> {
    let wall = cfg.model.wall();
    let theta = cfg.theta_i();
    let set = fermatian::find_separatrices(theta, &wall)?;
    let named = set.named();
    let rows = named.iter().map(|(n, b)| vec![n.to_string(), format!("{b:.12}")]);
    out.table("separatrices.csv", &["name", "b"], rows)?;
    // The rays through each separatrix, for drawing.
    let rays = named.iter().map(|(_, b)| trace_ray(*b, theta, &wall)).collect::<Result<Vec<_>>>()?;
    fermatian::write_polylines_csv(&rays, out.file("rays.csv")?)?;
    out.json(
        "summary.json",
        &json!({
            "theta_d_max": fermatian::theta_d_max(theta, &wall),
            "shadow_length": fermatian::shadow_length(theta, &wall).ok(),
        }),
    )
}

fn newton(cfg: &RunConfig, out: &mut Out, c: &PhysicalConstants) -> Result<()> {
    let s = &cfg.scan;
    let icfg = cfg.newton.integrator(false);
    icfg.validate()?;
    let mut summary = serde_json::Map::new();
    for &variant in &s.variants {
        let model = cfg.model.model(variant);
        model.validate()?;
        let df = newtonian::deflection_scan(cfg.theta_i(), cfg.e_i_mev, &model, (s.b_min_A, s.b_max_A), s.samples, &icfg, c)?;
        let name = variant.name();
        let trapping = trapping_summary(&df);
        let mut entry = json!({ "trapped_fraction": trapping.fraction, "trapped_intervals": trapping.intervals });
        match cfg.kind {
            RunKind::NewtonDeflection => {
                df.write_csv(out.file(&format!("{name}_deflection.csv"))?)?;
                let rcfg = cfg.newton.integrator(true);
                for &b in &cfg.newton.trajectories_b_A {
                    let r = integrate_trajectory(b, cfg.theta_i(), cfg.e_i_mev, &model, &rcfg, c)?;
                    r.write_csv(out.file(&format!("{name}_trajectory_b{b:+.3}.csv"))?)?;
                }
            }
            RunKind::NewtonEnergyDiagram => {
                let diagram = EnergyDiagram::from(&df);
                diagram.write_csv(out.file(&format!("{name}_energy.csv"))?)?;
                entry["features"] = serde_json::to_value(diagram.features()).expect("features");
            }
            _ => {
                df.write_csv(out.file(&format!("{name}_deflection.csv"))?)?;
                let report = find_rainbows(&df, c);
                let rows = report.extrema.iter().map(|r| {
                    vec![
                        format!("{:.10}", r.b),
                        format!("{:.8}", r.theta_r.to_degrees()),
                        format!("{:.8}", r.delta_k_r),
                        match r.kind {
                            ExtremumKind::Max => "max",
                            ExtremumKind::Min => "min",
                        }
                        .to_string(),
                    ]
                });
                out.table(&format!("{name}_rainbows.csv"), &["b", "theta_r_deg", "delta_k", "kind"], rows)?;
                entry["extrema"] = json!(report.extrema.len());
                entry["skipped_branches"] = json!(report.skipped_branches);
            }
        }
        summary.insert(name.to_string(), entry);
    }
    out.json("summary.json", &serde_json::Value::Object(summary))
}

fn initial_field(cfg: &RunConfig, c: &PhysicalConstants) -> Result<WaveField> {
    let grid = cfg.grid.grid()?;
    grid.validate_for_run(cfg.e_i_mev, c)?;
    build_initial_state(&cfg.initial_state(), &grid, c)
}

fn tdse_propagate(cfg: &RunConfig, out: &mut Out, c: &PhysicalConstants) -> Result<()> {
    let psi0 = initial_field(cfg, c)?;
    let model = cfg.model.model(cfg.model.variant);
    model.validate()?;
    let mut prop = Propagator::new(&psi0, &model, &cfg.propagation.config(), c)?;
    let n_steps = cfg.propagation.n_steps();
    let every = cfg.propagation.snapshot_every;
    let snap_dir = out.dir.join(format!("{}_snapshots", out.label));
    if every > 0 {
        std::fs::create_dir_all(&snap_dir)?;
    }
    let mut log = Vec::new();
    loop {
        let n = prop.steps();
        if n == 0 || n == n_steps || (every > 0 && n % every == 0) {
            let field = prop.wavefield();
            let (mx, mz, sx, sz) = field.position_moments();
            log.push(vec![format!("{:.6}", prop.time()), e(prop.norm()), e(prop.energy()), e(mx), e(mz), e(sx), e(sz)]);
            if every > 0 {
                let path = snap_dir.join(format!("step_{n:07}.wfld"));
                field.save(&path)?;
                out.written.push(path);
            }
        }
        if n == n_steps {
            break;
        }
        prop.step()?;
    }
    out.table("log.csv", &["t", "norm", "energy", "mean_x", "mean_z", "std_x", "std_z"], log)?;
    let path = out.dir.join(format!("{}_final.wfld", out.label));
    prop.wavefield().save(&path)?;
    out.written.push(path);
    Ok(())
}

fn tdse_intensity(cfg: &RunConfig, out: &mut Out, c: &PhysicalConstants) -> Result<()> {
    let psi0 = initial_field(cfg, c)?;
    let a = &cfg.analysis;
    let mut setup = SMatrixSetup::new(&psi0, cfg.e_i_mev, cfg.theta_i(), (a.cell_min_A, a.cell_max_A), a.z_analysis_A, a.z_top_A, c)?;
    setup.max_downward_fraction = a.max_downward_fraction;
    setup.max_boundary_density = a.max_boundary_density;
    let pcfg = cfg.propagation.config();
    let rows = |variant: ModelVariant| -> Result<Vec<SMatrixRow>> {
        let model = cfg.model.model(variant);
        model.validate()?;
        let mut p = Propagator::new(&psi0, &model, &pcfg, c)?;
        a.times_ps
            .iter()
            .map(|&t| {
                while p.time() < t - 1e-9 {
                    p.step()?;
                }
                let mut row = setup.extract(&p.wavefield())?;
                row.label = variant.name().to_string();
                Ok(row)
            })
            .collect()
    };
    let flat = rows(ModelVariant::FlatSurfaceOnly)?;
    let mut summary = serde_json::Map::new();
    for &variant in &a.variants {
        let name = variant.name();
        let mut probes = Vec::new();
        for (row, reference) in rows(variant)?.iter().zip(&flat) {
            let spectrum = if variant == ModelVariant::FlatSurfaceOnly {
                reflection_coefficient(row, c)
            } else {
                reflection_coefficient(&remove_plane_wave_contribution(row, reference)?, c)
            };
            spectrum.write_csv(out.file(&format!("{name}_t{:.2}.csv", row.t))?)?;
            probes.push(json!({
                "t": row.t,
                "window_probability": row.window_probability,
                "total_probability": row.total_probability(),
                "downward_fraction": row.downward_fraction,
            }));
        }
        summary.insert(name.to_string(), serde_json::Value::Array(probes));
    }
    out.json("summary.json", &serde_json::Value::Object(summary))
}

fn schedule(cfg: &RunConfig) -> PropagationSchedule {
    PropagationSchedule {
        model: cfg.model.model(cfg.model.variant),
        config: cfg.propagation.config(),
        n_steps: cfg.propagation.n_steps(),
        vortex_times: cfg.bohm.vortex_times_ps.clone(),
        vortex_region: Some(cfg.bohm.region()),
    }
}

fn write_vortices(out: &mut Out, reports: &[VortexReport]) -> Result<()> {
    let rows = reports.iter().flat_map(|r| {
        r.nodes.iter().map(|n| {
            vec![
                format!("{:.6}", n.t),
                format!("{:.6}", n.x),
                format!("{:.6}", n.z),
                n.winding.to_string(),
                format!("{:.8e}", n.circulation),
                n.indeterminate.to_string(),
            ]
        })
    });
    out.table("vortices.csv", &["t", "x", "z", "n", "circulation", "indeterminate"], rows)
}

fn bohm_trajectories(cfg: &RunConfig, out: &mut Out, seed: u64, c: &PhysicalConstants) -> Result<()> {
    let psi0 = initial_field(cfg, c)?;
    let b = &cfg.bohm;
    let seeds: Vec<SeedPoint> = match b.seeding {
        Seeding::Lines => seed_lines(cfg.packet.center_z_A, &b.line_offsets_A, b.seed_x_min_A, b.seed_x_max_A, b.seeds_per_line),
        Seeding::BornQuantiles => sample_born_quantiles(&psi0, b.n_born)?,
        Seeding::BornRandom => sample_born_random(&psi0, b.n_born, &mut ChaCha8Rng::seed_from_u64(seed)),
    };
    let sched = schedule(cfg);
    sched.model.validate()?;
    let run: BohmianRun = integrate_bohmian(&psi0, &seeds, &sched, &b.config(), c)?;
    let paths = run.trajectories.iter().enumerate().flat_map(|(i, t)| {
        t.path
            .iter()
            .map(move |p| vec![i.to_string(), format!("{:.8}", p[0]), format!("{:.10}", p[1]), format!("{:.10}", p[2])])
    });
    out.table("paths.csv", &["trajectory", "t", "x", "z"], paths)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    let rows = run.trajectories.iter().enumerate().map(|(i, t)| {
        let (x, z) = t.position();
        vec![
            i.to_string(),
            format!("{:.10}", t.seed.x),
            format!("{:.10}", t.seed.z),
            opt(t.seed.line),
            format!("{x:.10}"),
            format!("{z:.10}"),
            format!("{:.6}", t.turning),
            t.loops_completed.to_string(),
            e(t.min_psi),
            (t.trapped as u8).to_string(),
            opt(t.exit.map(|r| r.t)),
            opt(t.vortex_capture.map(|r| r.t)),
        ]
    });
    out.table(
        "summary.csv",
        &["trajectory", "seed_x", "seed_z", "line", "x_final", "z_final", "turning", "loops", "min_psi", "trapped", "exit_t", "capture_t"],
        rows,
    )?;
    write_vortices(out, &run.vortex_reports)?;
    if b.seeding != Seeding::Lines {
        let check = ensemble_density_check(&run.endpoints(), &run.final_field, (b.density_bins, b.density_bins), None)?;
        out.json("density_check.json", &serde_json::to_value(&check).expect("density check"))?;
    }
    Ok(())
}

fn bohm_vortices(cfg: &RunConfig, out: &mut Out, c: &PhysicalConstants) -> Result<()> {
    let psi0 = initial_field(cfg, c)?;
    let sched = schedule(cfg);
    sched.model.validate()?;
    let options = VortexOptions {
        interpolation_order: cfg.bohm.interpolation_order,
        ..Default::default()
    };
    let mut times = cfg.bohm.vortex_times_ps.clone();
    times.sort_by(|a, b| a.total_cmp(b));
    let mut prop = Propagator::new(&psi0, &sched.model, &sched.config, c)?;
    let mut reports = Vec::new();
    for t in times {
        while prop.time() < t - 1e-9 {
            prop.step()?;
        }
        let field = prop.wavefield();
        let guidance = GuidanceField::new(&field, prop.spectral());
        reports.push(detect_vortices_in(&guidance, cfg.bohm.region(), &options, c)?);
    }
    write_vortices(out, &reports)
}
