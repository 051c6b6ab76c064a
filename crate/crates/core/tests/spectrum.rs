use heco::spectrum::*;

const W: f64 = 1.2;

fn grid(h: f64) -> Vec<f64> {
    let n = (4.5 / h).round() as i64;
    (-n..=n).map(|i| i as f64 * h).collect()
}

/// Single-slit pattern with zeros at multiples of W.
fn sinc2(k: f64) -> f64 {
    let u = std::f64::consts::PI * k / W;
    if u == 0.0 {
        1.0
    } else {
        (u.sin() / u).powi(2)
    }
}

fn bump(k: f64, at: f64, height: f64, width: f64) -> f64 {
    height * (-((k.abs() - at) / width).powi(2)).exp()
}

/// Roots of tan u = u above u₀, by bisection.
fn tan_root(lo: f64, hi: f64) -> f64 {
    let f = |u: f64| u.sin() - u * u.cos();
    let (mut a, mut b) = (lo, hi);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if f(a) * f(m) <= 0.0 {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

#[test]
fn clean_pattern_has_no_wings() {
    let k = grid(0.005);
    let y: Vec<f64> = k.iter().map(|&k| sinc2(k)).collect();
    for side in [1.0, -1.0] {
        let a = lobe_analysis(&k, &y, side, 1.8, &LobeCriteria::default());
        assert_eq!(a.wing_count(), 0, "{a:?}");
        let first = tan_root(3.2, 4.6) * W / std::f64::consts::PI;
        let second = tan_root(6.4, 7.8) * W / std::f64::consts::PI;
        assert_eq!(a.main_lobes.len(), 3, "{a:?}");
        assert!((a.main_lobes[1] - first).abs() < 0.005);
        assert!((a.main_lobes[2] - second).abs() < 0.005);
        assert_eq!(a.range_end, a.main_lobes[2]);
    }
}

#[test]
fn flank_plateau_is_a_shoulder() {
    let k = grid(0.01);
    // Plateau on the outer flank of the central lobe.
    let y: Vec<f64> = k.iter().map(|&k| sinc2(k) + bump(k, 0.8, 0.08, 0.1)).collect();
    let a = lobe_analysis(&k, &y, 1.0, 1.8, &LobeCriteria::default());
    assert_eq!(a.sub_lobes.len(), 0, "{a:?}");
    assert_eq!(a.shoulders.len(), 1, "{a:?}");
    assert!((a.shoulders[0] - 0.8).abs() < 0.1);
}

#[test]
fn valley_bump_is_a_sub_lobe() {
    let k = grid(0.01);
    let y: Vec<f64> = k.iter().map(|&k| sinc2(k) + bump(k, 2.4, 2e-3, 0.05)).collect();
    let a = lobe_analysis(&k, &y, -1.0, 1.8, &LobeCriteria::default());
    assert_eq!(a.sub_lobes.len(), 1, "{a:?}");
    assert!((a.sub_lobes[0] - 2.4).abs() < 0.02);
    // Beyond the lobe after the reference one nothing is counted.
    let far: Vec<f64> = k.iter().map(|&k| sinc2(k) + bump(k, 4.2, 1e-3, 0.05)).collect();
    assert_eq!(lobe_analysis(&k, &far, 1.0, 1.8, &LobeCriteria::default()).wing_count(), 0);
}

#[test]
fn local_maxima_and_band_mean() {
    let k = grid(0.01);
    let y: Vec<f64> = k.iter().map(|&k| sinc2(k)).collect();
    let s = DiffractionSpectrum {
        model: "test".into(),
        e_i: 10.0,
        theta_i: 0.0,
        theta_d: vec![0.0; k.len()],
        delta_k: k.clone(),
        intensity: y.clone(),
        intensity_raw: None,
    };
    let m = s.local_maxima(1.0);
    assert_eq!(m.len(), 3);
    assert!(m.iter().all(|(x, _)| *x > 0.0));
    let all = band_mean(&k, &y, 0.0, 10.0).unwrap();
    assert!((all - y.iter().sum::<f64>() / y.len() as f64).abs() < 1e-15);
    assert!(s.band_mean(5.0, 6.0).is_none());
}
