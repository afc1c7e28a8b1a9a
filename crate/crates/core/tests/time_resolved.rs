use lopsim::time_resolved::*;
use lopsim::C64;
use proptest::prelude::*;

const TAU: f64 = 40.0;

fn pulses(ratio: f64) -> (Pulse, Pulse) {
    (Pulse::standard(ratio, TAU), Pulse::standard(1.0, TAU))
}

#[test]
fn pulse_values_match_reference_integration() {
    // independent adaptive quadrature of the exponent, frozen
    let (f1, f2) = pulses(0.5);
    for (t, a, b) in [
        (10.0, 0.3348739481774675, 0.42131895235373673),
        (20.0, 0.09666577085041689, 0.01969945349160718),
        (35.0, 0.0013069594944587473, 3.845652033857262e-05),
    ] {
        assert!((f1.eval(t) - a).abs() < 1e-8, "{t}");
        assert!((f2.eval(t) - b).abs() < 1e-8, "{t}");
    }
}

#[test]
fn average_fidelity_for_mismatched_cavities() {
    let (lo, hi) = full_window(TAU);
    for (ratio, frozen, quoted) in
        [(0.5, 0.9446282840269744, 0.94), (0.7, 0.9844367279855379, 0.98), (0.9, 0.9986150854281692, 0.99)]
    {
        let (f1, f2) = pulses(ratio);
        let fav = average_fidelity(&f1, &f2, lo, hi).unwrap();
        assert!((fav - frozen).abs() < 1e-6, "{ratio}: {fav}");
        assert!((fav - quoted).abs() <= 0.01, "{ratio}: {fav}");
    }
    let f = Pulse::standard(1.0, TAU);
    assert!((average_fidelity(&f, &f, lo, hi).unwrap() - 1.0).abs() < 1e-12);
    assert!(average_fidelity(&f, &f, 5.0, 5.0).is_err());
}

#[test]
fn coincident_detection_is_perfect() {
    let (f1, f2) = pulses(0.5);
    for t in [1.0, 8.0, 15.0, 30.0] {
        assert_eq!(fidelity_t(&f1, &f2, t, t), TimeFidelity::Defined(1.0));
    }
    let off = fidelity_t(&f1, &f2, 5.0, 15.0).value().unwrap();
    assert!(off < 1.0);
    let same = fidelity_t(&f2, &f2, 5.0, 15.0).value().unwrap();
    assert!((same - 1.0).abs() < 1e-14);
    assert_eq!(fidelity_t(&f1, &f2, 500.0, 600.0), TimeFidelity::NoDetection);
}

#[test]
fn detuned_pulses_recover_at_phase_multiples() {
    let f = Pulse::standard(1.0, TAU);
    let dw = 0.7;
    let amp = |t: f64, detune: bool| {
        let v = C64::new(f.eval(t), 0.0);
        if detune {
            v * C64::from_polar(1.0, -dw * t)
        } else {
            v
        }
    };
    for t3 in [2.0, 5.0, 9.0] {
        for n in -2..=2i32 {
            let t4 = t3 + 2.0 * std::f64::consts::PI * n as f64 / dw;
            if t4 < 0.0 {
                continue;
            }
            let fid = fidelity_from_amplitudes(amp(t3, true), amp(t4, true), amp(t3, false), amp(t4, false));
            if let TimeFidelity::Defined(v) = fid {
                assert!((v - 1.0).abs() < 1e-12);
            }
        }
        let half = t3 + std::f64::consts::PI / dw;
        let v = fidelity_from_amplitudes(amp(t3, true), amp(half, true), amp(t3, false), amp(half, false));
        assert!(v.value().unwrap() < 1e-12);
    }
}

#[test]
fn average_equals_density_weighted_fidelity() {
    let (f1, f2) = pulses(0.5);
    let (lo, hi) = full_window(TAU);
    // composite Simpson grid over the square
    let n = 1200;
    let h = (hi - lo) / n as f64;
    let w = |k: usize| {
        if k == 0 || k == n {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let v1: Vec<f64> = (0..=n).map(|k| f1.eval(lo + k as f64 * h)).collect();
    let v2: Vec<f64> = (0..=n).map(|k| f2.eval(lo + k as f64 * h)).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=n {
        for j in 0..=n {
            let (a, b) = (v1[i] * v2[j], v1[j] * v2[i]);
            let dens = 0.25 * (a * a + b * b);
            if dens == 0.0 {
                continue;
            }
            let fid = (a + b) * (a + b) / (2.0 * (a * a + b * b));
            num += w(i) * w(j) * fid * dens;
            den += w(i) * w(j) * dens;
        }
    }
    let fav = average_fidelity(&f1, &f2, lo, hi).unwrap();
    assert!((num / den - fav).abs() < 1e-4, "{} vs {fav}", num / den);
    // total coincidence mass: 1/2 for fully emitted photons
    let mass = den * h * h / 9.0;
    assert!((mass - 0.5 * f1.emitted() * f2.emitted()).abs() < 1e-6);
}

#[test]
fn mismatched_cavities_lose_coincidence_mass() {
    let (lo, hi) = full_window(TAU);
    let mass = |f1: &Pulse, f2: &Pulse| {
        let n = 600;
        let h = (hi - lo) / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += joint_density(f1, f2, lo + (i as f64 + 0.5) * h, lo + (j as f64 + 0.5) * h);
            }
        }
        s * h * h
    };
    let (a, b) = pulses(0.5);
    let same = mass(&b, &b);
    assert!(mass(&a, &b) < same);
    assert!(joint_density(&b, &b, 3.0, 9.0) == joint_density(&b, &b, 9.0, 3.0));
}

#[test]
fn shifted_modes_decouple() {
    let p = PulseParams::standard(1.0, TAU);
    assert!((mode_overlap(&p, 3.0, 3.0, TAU) - 1.0).abs() < 1e-9);
    assert!(mode_overlap(&p, 5.0 * TAU, 0.0, TAU) < 1e-3);
    let mut last = 1.0 + 1e-12;
    for k in 0..40 {
        let v = mode_overlap(&p, 0.5 * k as f64, 0.0, TAU);
        assert!(v <= last + 1e-9, "{k}: {v} > {last}");
        last = v;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fidelity_symmetric_and_bounded(t3 in 0.0f64..60.0, t4 in 0.0f64..60.0, ratio in 0.3f64..1.0) {
        let (f1, f2) = pulses(ratio);
        let a = fidelity_t(&f1, &f2, t3, t4);
        let b = fidelity_t(&f1, &f2, t4, t3);
        prop_assert_eq!(a, b);
        if let TimeFidelity::Defined(v) = a {
            prop_assert!((0.5 - 1e-12..=1.0 + 1e-12).contains(&v));
        }
    }

    #[test]
    fn density_non_negative(t3 in -5.0f64..130.0, t4 in -5.0f64..130.0) {
        let (f1, f2) = pulses(0.5);
        prop_assert!(joint_density(&f1, &f2, t3, t4) >= 0.0);
    }
}
