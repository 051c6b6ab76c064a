use heco::fermatian::*;
use heco::potential::HardWallParams;
use heco::PhysicalConstants;
use proptest::prelude::*;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

fn wall() -> HardWallParams {
    HardWallParams::default()
}

fn delta() -> f64 {
    (0.28f64 / 2.86).asin()
}

#[test]
fn initial_conditions_normal_incidence() {
    let c = PhysicalConstants::helium4();
    let (pos, mom) = initial_conditions(1.5, 0.0, 10.0, 10.27, &c).unwrap();
    assert_eq!((pos.x, pos.z), (1.5, 10.27));
    assert_eq!(mom.x, 0.0);
    // k from ħc and the rest energy directly: k² = 2 m c² E / (ħc)².
    let k = (2.0f64 * 3.727_379e12 * 10.0).sqrt() / 1.973_27e6;
    assert!((-mom.z / c.hbar - k).abs() < 1e-9);
    assert!((k - 4.375).abs() < 1e-3);
}

#[test]
fn initial_conditions_oblique() {
    let c = PhysicalConstants::helium4();
    let th = 20f64.to_radians();
    let (pos, mom) = initial_conditions(0.0, th, 10.0, 10.27, &c).unwrap();
    assert!((pos.x + 10.27 * th.tan()).abs() < 1e-14);
    assert!((mom.x / -mom.z - th.tan()).abs() < 1e-14);
    assert!(initial_conditions(0.0, FRAC_PI_2, 10.0, 10.27, &c).is_err());
    assert!(initial_conditions(0.0, 0.0, -1.0, 10.27, &c).is_err());
}

#[test]
fn far_rays_reflect_specularly() {
    for b in [-8.0, 6.0, 10.6] {
        let r = trace_ray(b, 0.0, &wall()).unwrap();
        assert_eq!(r.class.bounce_pattern, BouncePattern::FlatOnly);
        assert!(r.theta_d.abs() < 1e-14);
    }
}

#[test]
fn apex_ray_returns_along_its_path() {
    let r = trace_ray(0.0, 0.0, &wall()).unwrap();
    assert_eq!(r.class.bounce_pattern, BouncePattern::AdsorbateOnly);
    assert_eq!(r.class.direction, Direction::Normal);
    assert!(r.theta_d.abs() < 1e-14);
    assert!((r.scattering_angle() - PI).abs() < 1e-14);
}

#[test]
fn shadow_length_limits() {
    assert_eq!(shadow_length(0.0, &wall()).unwrap(), 0.0);
    assert!(shadow_length(FRAC_PI_2, &wall()).unwrap().is_infinite());
    assert!(shadow_length(FRAC_PI_2 - 1e-3, &wall()).unwrap() > 100.0);
}

/// Lee-side flat-wall interval no traced ray reaches, from a dense scan of b.
fn scanned_shadow(theta_i: f64, w: &HardWallParams, n: usize) -> (f64, f64) {
    let base = (w.a * w.a - w.z_r * w.z_r).sqrt();
    let (lo, hi) = (-3.0 * w.a - 5.0, 3.0 * w.a + 5.0);
    let mut first = f64::INFINITY;
    for i in 0..n {
        let b = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let r = trace_ray(b, theta_i, w).unwrap();
        for (p, s) in &r.bounce_points {
            if *s == Surface::Flat && p.x > 0.0 {
                first = first.min(p.x);
            }
        }
    }
    (base, first)
}

#[test]
fn exact_shadow_interval_matches_scan() {
    for deg in [10.0f64, 20.0, 40.0] {
        let th = deg.to_radians();
        let (a, b) = geometric_shadow_interval(th, &wall()).unwrap();
        let (sa, sb) = scanned_shadow(th, &wall(), 200_001);
        assert!((a - sa).abs() < 1e-12);
        let spacing = (6.0 * 2.86 + 10.0) / 200_000.0;
        assert!(sb >= b - 1e-9 && sb - b < 2.0 * spacing / th.cos(), "{deg}: {b} vs {sb}");
    }
}

#[test]
fn deflection_limit_of_flat_then_adsorbate_branch() {
    let th = 20f64.to_radians();
    assert!((theta_d_max(th, &wall()) - (-th + 2.0 * delta())).abs() < 1e-15);
}

fn ordered(s: &SeparatrixSet) -> bool {
    s.named().windows(2).all(|w| w[0].1 <= w[1].1)
}

#[test]
fn separatrices_are_ordered() {
    for deg in [0.0f64, 10.0, 20.0, 40.0] {
        let s = find_separatrices(deg.to_radians(), &wall()).unwrap();
        assert!(ordered(&s), "{deg}: {:?}", s.named());
    }
}

#[test]
fn full_separatrix_set_at_twenty_degrees() {
    let th = 20f64.to_radians();
    let s = find_separatrices(th, &wall()).unwrap();
    let fa = s.f_alpha.expect("F-alpha exists at 20 degrees");
    let chain = [s.f1, fa, s.f2, s.f3, s.f4, s.f_beta, s.f5, s.f6, s.f7];
    assert!(chain.windows(2).all(|w| w[0] < w[1]), "{chain:?}");
    let at = |b: f64| trace_ray(b, th, &wall()).unwrap().theta_d;
    assert!(at(fa).abs() < 1e-8);
    assert!(at(s.f_beta).abs() < 1e-8);
    assert!((at(s.f4) + th).abs() < 1e-8);
    assert!((at(s.f5) - th).abs() < 1e-8);
    assert!((at(s.f3) + FRAC_PI_2).abs() < 1e-7);
    assert!((at(s.f6) - FRAC_PI_2).abs() < 1e-7);
    // Only the two separatrices themselves leave along the normal.
    for r in deflection_scan(th, &wall(), fa + 1e-6, s.f_beta - 1e-6, 2001).unwrap() {
        assert!(r.theta_d.abs() > 1e-9);
    }
}

#[test]
fn normal_incidence_separatrices_are_mirror_images() {
    let s = find_separatrices(0.0, &wall()).unwrap();
    assert!(s.f_alpha.is_none());
    assert!((s.f1 + s.f7).abs() < 1e-8);
    assert!((s.f3 + s.f6).abs() < 1e-8);
    assert!(s.f4.abs() < 1e-8 && s.f_beta.abs() < 1e-8 && s.f5.abs() < 1e-8);
}

/// Polar angle of the adsorbate impact point just inside a branch edge.
fn impact(b: f64, th: f64) -> f64 {
    trace_ray(b, th, &wall()).unwrap().adsorbate_impact_angle().unwrap()
}

#[test]
fn double_collision_sectors() {
    let th = 20f64.to_radians();
    let s = find_separatrices(th, &wall()).unwrap();
    let eps = 1e-9;
    let sector_a = (impact(s.f3 - eps, th) - impact(s.f2 + eps, th)).abs();
    let sector_b = (impact(s.f7 - eps, th) - impact(s.f6 + eps, th)).abs();
    assert!((sector_a - (FRAC_PI_4 - th / 2.0 - delta())).abs() < 1e-6, "{sector_a}");
    // The impact angle approaches the tangent ray as the square root of the distance in b.
    assert!((sector_b - (FRAC_PI_4 - th / 2.0)).abs() < 1e-4, "{sector_b}");
}

#[test]
fn normal_pair_is_alpha_beta() {
    let th = 20f64.to_radians();
    let s = find_separatrices(th, &wall()).unwrap();
    let pairs = homologous_pairs(0.0, th, &wall()).unwrap();
    assert_eq!(pairs.len(), 1);
    assert!((pairs[0].b_single - s.f_beta).abs() < 1e-8);
    assert!((pairs[0].b_double - s.f_alpha.unwrap()).abs() < 1e-8);
}

#[test]
fn forward_pairs_are_separated_by_fixed_arc() {
    let th = 20f64.to_radians();
    for deg in [-8.0f64, -4.0, 0.0, 5.0, 15.0, 19.0] {
        let pairs = homologous_pairs(deg.to_radians(), th, &wall()).unwrap();
        let flat_first: Vec<_> = pairs
            .iter()
            .filter(|p| p.double_pattern == BouncePattern::FlatThenAdsorbate)
            .collect();
        assert_eq!(flat_first.len(), 1, "{deg}");
        assert!((flat_first[0].impact_arc - (FRAC_PI_2 - th)).abs() < 1e-9);
    }
}

#[test]
fn backward_pairs_follow_outgoing_angle() {
    let th = 20f64.to_radians();
    for deg in [-80.0f64, -60.0, -40.0] {
        let td = deg.to_radians();
        let pairs = homologous_pairs(td, th, &wall()).unwrap();
        assert_eq!(pairs.len(), 1, "{deg}");
        assert_eq!(pairs[0].double_pattern, BouncePattern::AdsorbateThenFlat);
        // Direct geometry: the single bounce sits at φ₁ = (θ_d − θ_i)/2 and the
        // adsorbate-then-flat bounce at φ₂ with −π − 2φ₂ − θ_i = θ_d.
        let phi1 = 0.5 * (td - th);
        let phi2 = -0.5 * (PI + td + th);
        let arc = (phi1 - phi2).abs();
        assert!((pairs[0].impact_arc - arc).abs() < 1e-9);
        assert!((arc - (FRAC_PI_2 - td.abs())).abs() < 1e-12);
    }
}

#[test]
fn double_partner_cutoff() {
    let th = 20f64.to_radians();
    let cut = theta_d_max(th, &wall());
    let inside = homologous_pairs(cut + 1e-3, th, &wall()).unwrap();
    assert!(!inside.is_empty());
    let beyond = homologous_pairs(cut - 1e-3, th, &wall()).unwrap();
    assert!(beyond.is_empty());
    // The single-bounce ray still exists there.
    let rays = deflection_scan(th, &wall(), -1.0, 1.0, 2001).unwrap();
    assert!(rays.windows(2).any(|w| (w[0].theta_d - (cut - 1e-3)) * (w[1].theta_d - (cut - 1e-3)) <= 0.0));
}

fn angle_between(a: Vec2, b: Vec2) -> f64 {
    (a.x * b.z - a.z * b.x).atan2(a.dot(b)).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn law_of_reflection(b in -6.0..6.0f64, deg in 0.0..60.0f64) {
        let w = wall();
        let r = trace_ray(b, deg.to_radians(), &w).unwrap();
        let dirs = r.directions();
        prop_assert!(r.bounce_points.len() <= 2);
        for (i, (p, s)) in r.bounce_points.iter().enumerate() {
            let n = match s {
                Surface::Flat => Vec2::new(0.0, 1.0),
                Surface::Adsorbate => Vec2::new(p.x / w.a, p.z / w.a),
            };
            let incoming = Vec2::new(-dirs[i].x, -dirs[i].z);
            prop_assert!((angle_between(incoming, n) - angle_between(dirs[i + 1], n)).abs() < 1e-12);
            prop_assert!((dirs[i + 1].norm() - 1.0).abs() < 1e-12);
        }
        for pair in r.segments.windows(2) {
            prop_assert_eq!(pair[0].1, pair[1].0);
        }
        prop_assert_eq!(
            r.class.direction == Direction::Grazing,
            (r.theta_d.abs() - FRAC_PI_2).abs() < 1e-9
        );
    }

    #[test]
    fn normal_incidence_deflection_is_odd(b in 0.0..6.0f64) {
        let p = trace_ray(b, 0.0, &wall()).unwrap();
        let m = trace_ray(-b, 0.0, &wall()).unwrap();
        prop_assert!((p.theta_d + m.theta_d).abs() < 1e-12);
    }
}
