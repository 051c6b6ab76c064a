use heco::newtonian::*;
use heco::potential::{jump_length, morse_turning_points, MorseParams};
use heco::{Error, InteractionModel, ModelVariant, PhysicalConstants};
use proptest::prelude::*;

fn c() -> PhysicalConstants {
    PhysicalConstants::helium4()
}

fn fast() -> IntegratorConfig {
    IntegratorConfig {
        stop_when_trapped: true,
        ..Default::default()
    }
}

fn full() -> InteractionModel {
    InteractionModel::new(ModelVariant::Full)
}

#[test]
fn far_impact_reflects_specularly() {
    for deg in [0.0f64, 20.0] {
        let th = deg.to_radians();
        for b in [-10.6, 10.6] {
            let r = integrate_trajectory(b, th, 10.0, &full(), &fast(), &c()).unwrap();
            assert_eq!(r.outcome, Outcome::Escaped);
            assert!((r.theta_d - th).abs() < 5e-3, "{deg} {b}: {}", r.theta_d.to_degrees());
        }
    }
}

#[test]
fn flat_surface_retraces_its_path() {
    let m = InteractionModel::new(ModelVariant::FlatSurfaceOnly);
    let cfg = IntegratorConfig {
        record_every: 1,
        ..fast()
    };
    let r = integrate_trajectory(3.0, 0.0, 10.0, &m, &cfg, &c()).unwrap();
    assert_eq!(r.outcome, Outcome::Escaped);
    assert_eq!(r.theta_d, 0.0);
    assert!(r.path.iter().all(|p| p.x == 3.0));
    let z_min = r.path.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
    let e0 = r.path[0].energy;
    let turn = m.morse.inner_crossing(e0).unwrap();
    assert!((z_min - turn).abs() < 1e-5, "{z_min} vs {turn}");
    assert!((m.morse.value(turn) - e0).abs() < 1e-9);
    assert_eq!(r.bounces, 1);
}

#[test]
fn energy_is_conserved_at_fourth_order() {
    let th = 20f64.to_radians();
    let drift = |dt: f64| {
        let cfg = IntegratorConfig { dt, ..fast() };
        integrate_trajectory(1.5, th, 10.0, &full(), &cfg, &c())
            .unwrap()
            .max_energy_drift
    };
    assert!(drift(1e-4) < 1e-6);
    let ratio = drift(2e-3) / drift(1e-3);
    assert!((8.0..32.0).contains(&ratio), "{ratio}");
}

#[test]
fn backward_integration_recovers_the_start() {
    let cc = c();
    let (pos, mom) = heco::fermatian::initial_conditions(1.5, 20f64.to_radians(), 10.0, 10.27, &cc).unwrap();
    let start = (pos.x, pos.z, mom.x, mom.z);
    let n = 25_000;
    let end = integrate_fixed(&full(), start, 1e-4, n, &cc, 20).unwrap();
    let back = integrate_fixed(&full(), end, -1e-4, n, &cc, 20).unwrap();
    let err = (back.0 - start.0).hypot(back.1 - start.1);
    assert!(err < 1e-5, "{err}");
}

#[test]
fn core_penetration_without_halving_fails() {
    let err = integrate_fixed(&full(), (0.0, 0.9, 0.0, -5.0), 1e-4, 1, &c(), 0).unwrap_err();
    assert!(matches!(err, Error::Integration(_)));
}

#[test]
fn trajectory_csv_columns() {
    let cfg = IntegratorConfig {
        record_every: 100,
        ..fast()
    };
    let r = integrate_trajectory(0.5, 0.0, 10.0, &full(), &cfg, &c()).unwrap();
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("t,x,z,px,pz,E\n"));
    assert_eq!(text.lines().count(), r.path.len() + 1);
}

fn scan(variant: ModelVariant, e: f64, n: usize) -> DeflectionFunction {
    deflection_scan(0.0, e, &InteractionModel::new(variant), (-10.6, 10.6), n, &fast(), &c()).unwrap()
}

#[test]
fn normal_incidence_scan_is_odd_and_trapping_symmetric() {
    let df = scan(ModelVariant::Full, 10.0, 401);
    let n = df.samples.len();
    for i in 0..n {
        let (a, b) = (&df.samples[i], &df.samples[n - 1 - i]);
        assert_eq!(a.trapped, b.trapped);
        if let (Some(x), Some(y)) = (a.theta_d, b.theta_d) {
            assert!((x + y).abs() < 1e-9, "{} {x} {y}", a.b);
        }
    }
    let t = trapping_summary(&df);
    assert!(!t.intervals.is_empty());
    for (iv, jv) in t.intervals.iter().zip(t.intervals.iter().rev()) {
        assert!((iv.0 + jv.1).abs() < 1e-9 && (iv.1 + jv.0).abs() < 1e-9);
    }
}

#[test]
fn trapping_edges_converge_and_match_energy_zero_crossings() {
    let coarse = scan(ModelVariant::Full, 10.0, 401);
    let fine = scan(ModelVariant::Full, 10.0, 801);
    let h = 21.2 / 400.0;
    let (tc, tf) = (trapping_summary(&coarse), trapping_summary(&fine));
    assert_eq!(tc.intervals.len(), tf.intervals.len());
    for (a, b) in tc.intervals.iter().zip(&tf.intervals) {
        assert!((a.0 - b.0).abs() < h && (a.1 - b.1).abs() < h);
    }
    let zeros = EnergyDiagram::from(&fine).features().zero_crossings;
    for (lo, hi) in &tf.intervals {
        for edge in [lo, hi] {
            let nearest = zeros.iter().map(|z| (z - edge).abs()).fold(f64::INFINITY, f64::min);
            assert!(nearest < h, "edge {edge}: {zeros:?}");
        }
    }
}

#[test]
fn flat_surface_never_traps() {
    let t = trapping_summary(&scan(ModelVariant::FlatSurfaceOnly, 10.0, 201));
    assert_eq!(t.fraction, 0.0);
    assert!(t.intervals.is_empty());
}

#[test]
fn rainbow_angle_agrees_with_energy_minimum() {
    let df = scan(ModelVariant::Full, 10.0, 1001);
    let report = find_rainbows(&df, &c());
    assert_eq!(report.extrema.len(), 2, "{report:?}");
    let minima = EnergyDiagram::from(&df).features().minima;
    for r in &report.extrema {
        let (_, ez) = minima
            .iter()
            .min_by(|a, b| (a.0 - r.b).abs().total_cmp(&(b.0 - r.b).abs()))
            .copied()
            .unwrap();
        let from_energy = (ez / 10.0).sqrt().acos();
        assert!((from_energy - r.theta_r.abs()).abs() < 0.2f64.to_radians());
        assert!((r.delta_k_r.abs() - 1.95).abs() < 0.1);
    }
}

#[test]
fn repulsive_adsorbate_has_no_rainbows() {
    for e in [10.0, 40.0] {
        let r = find_rainbows(&scan(ModelVariant::RepulsiveAdsorbate, e, 801), &c());
        assert!(r.extrema.is_empty(), "{e}: {r:?}");
    }
}

#[test]
fn homologous_groups_at_oblique_incidence() {
    let th = 20f64.to_radians();
    let df = deflection_scan(th, 10.0, &full(), (-10.6, 10.6), 1001, &fast(), &c()).unwrap();
    let diagram = EnergyDiagram::from(&df);
    let top = 10.0 * th.cos().powi(2);
    let pairs = newton_homologous_pairs(top - 0.2, &diagram);
    assert!((3..=4).contains(&pairs.len()), "{pairs:?}");
    let bound = newton_homologous_pairs(-0.5, &diagram);
    assert!(!bound.is_empty());
    for group in &bound {
        for &b in group {
            let i = diagram.samples.partition_point(|s| s.b < b);
            assert!(diagram.samples[i - 1].trapped || diagram.samples[i].trapped);
        }
    }
}

/// Turning points of z(t) refined by a parabola through three samples: (t, z, x).
fn extrema(path: &[PhasePoint], maxima: bool) -> Vec<(f64, f64, f64)> {
    let s = if maxima { 1.0 } else { -1.0 };
    let mut out = Vec::new();
    for w in path.windows(3) {
        let (z0, z1, z2) = (s * w[0].z, s * w[1].z, s * w[2].z);
        if z1 > z0 && z1 >= z2 {
            let d = z0 - 2.0 * z1 + z2;
            let u = 0.5 * (z0 - z2) / d;
            let z = s * (z1 - 0.25 * (z0 - z2) * u);
            let x = w[1].x + u * 0.5 * (w[2].x - w[0].x);
            out.push((w[1].t, z, x));
        }
    }
    out
}

#[test]
fn trapped_motion_matches_morse_orbit() {
    let cfg = IntegratorConfig {
        record_every: 1,
        t_max: 30.0,
        ..Default::default()
    };
    let cc = c();
    let r = integrate_trajectory(2.0, 0.0, 10.0, &full(), &cfg, &cc).unwrap();
    assert!(r.trapped());
    let far: Vec<PhasePoint> = r.path.iter().filter(|p| p.x.abs() > 30.0).copied().collect();
    let morse = MorseParams::default();
    let ez: Vec<f64> = far
        .iter()
        .map(|p| p.pz * p.pz / (2.0 * cc.mass()) + morse.value(p.z))
        .collect();
    let e_z = ez.iter().sum::<f64>() / ez.len() as f64;
    assert!(ez.iter().all(|v| (v - e_z).abs() < 1e-4 * e_z.abs()));
    let tops = extrema(&far, true);
    let bottoms = extrema(&far, false);
    assert!(tops.len() >= 3);
    let jump = jump_length(&morse, 10.0, e_z).unwrap();
    for w in tops.windows(2) {
        let dx = (w[1].2 - w[0].2).abs();
        assert!((dx - jump).abs() / jump < 0.02, "{dx} vs {jump}");
    }
    let (lo, hi) = morse_turning_points(&morse, e_z).unwrap();
    for t in &tops {
        assert!((t.1 - hi).abs() < 1e-3, "{} vs {hi}", t.1);
    }
    for b in &bottoms {
        assert!((b.1 - lo).abs() < 1e-3, "{} vs {lo}", b.1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn deflection_is_odd_in_impact_parameter(b in 0.0..10.6f64) {
        let m = full();
        let p = integrate_trajectory(b, 0.0, 10.0, &m, &fast(), &c()).unwrap();
        let q = integrate_trajectory(-b, 0.0, 10.0, &m, &fast(), &c()).unwrap();
        prop_assert_eq!(p.outcome, q.outcome);
        prop_assert!((p.theta_d + q.theta_d).abs() < 1e-9);
        prop_assert!((p.e_z_final - q.e_z_final).abs() < 1e-9);
    }
}
