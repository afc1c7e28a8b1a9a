use std::f64::consts::PI;

use lopsim::fock::{inner_product, Label, Statistics};
use lopsim::multiport::{bell_multiport, haar_random, symmetric4};
use lopsim::scattering::*;
use lopsim::C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn three_pipelines_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in 0..50 {
        let n = 1 + k % 6;
        let u = haar_random(n, &mut rng);
        let input = product_input(Statistics::Boson, &vec![Label::None; n]);
        let direct = postselect_coincidence(&scatter(&input, &u).unwrap()).probability;
        let brute = permanent_bruteforce(u.matrix()).unwrap().norm_sqr();
        let ryser = permanent_ryser(u.matrix()).unwrap().norm_sqr();
        let fast = coincidence_probability(&u, Statistics::Boson).unwrap();
        assert!((direct - brute).abs() < 1e-9, "{k}");
        assert!((ryser - brute).abs() < 1e-9, "{k}");
        assert!((fast - brute).abs() < 1e-9, "{k}");
    }
}

#[test]
fn even_bell_permanents_vanish() {
    for n in [2, 4, 6, 8, 10, 12] {
        assert!(permanent_ryser(bell_multiport(n).unwrap().matrix()).unwrap().norm() < 1e-10, "{n}");
    }
    for n in [3, 5, 7] {
        assert!(permanent_ryser(bell_multiport(n).unwrap().matrix()).unwrap().norm() > 1e-3, "{n}");
    }
}

#[test]
fn fermions_always_coincide() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 0..100 {
        let n = 1 + k % 6;
        let u = haar_random(n, &mut rng);
        assert!((coincidence_probability(&u, Statistics::Fermion).unwrap() - 1.0).abs() < 1e-10);
        if n <= 4 {
            let input = product_input(Statistics::Fermion, &vec![Label::None; n]);
            let p = postselect_coincidence(&scatter(&input, &u).unwrap()).probability;
            assert!((p - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn symmetric4_coincidence_curve() {
    for k in 0..50 {
        let phi = PI * k as f64 / 49.0;
        let p = coincidence_probability(&symmetric4(phi), Statistics::Boson).unwrap();
        assert!((p - (1.0 + (2.0 * phi).cos()) / 8.0).abs() < 1e-9, "{phi}");
    }
}

fn random_product(rng: &mut ChaCha8Rng, n: usize) -> lopsim::fock::PureState {
    let ports: Vec<Vec<(Label, C64)>> = (0..n)
        .map(|_| {
            [Label::H, Label::V]
                .into_iter()
                .map(|l| (l, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
                .collect()
        })
        .collect();
    product_state(Statistics::Boson, &ports)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scattering_preserves_norm(seed in any::<u64>(), n in 1usize..=4, fermion in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = haar_random(n, &mut rng);
        let mut s = random_product(&mut rng, n);
        if fermion {
            let labels: Vec<Label> = (0..n).map(|k| if k % 2 == 0 { Label::H } else { Label::V }).collect();
            s = product_input(Statistics::Fermion, &labels);
        }
        let out = scatter(&s, &u).unwrap();
        prop_assert!((out.norm_sqr().sqrt() - s.norm_sqr().sqrt()).abs() < 1e-10);
        prop_assert!((inner_product(&out, &out).re - s.norm_sqr()).abs() < 1e-10);
    }

    #[test]
    fn permanent_of_transpose(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = nalgebra::DMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let a = permanent_ryser(&m).unwrap();
        let b = permanent_ryser(&m.transpose()).unwrap();
        prop_assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn coincidence_projection_probability(seed in any::<u64>(), n in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = haar_random(n, &mut rng);
        let s = random_product(&mut rng, n).normalize().unwrap();
        let r = postselect_coincidence(&scatter(&s, &u).unwrap());
        prop_assert!((r.probability - r.projected.norm_sqr()).abs() < 1e-10);
        let direct = scatter_coincident(&s, &u).unwrap();
        prop_assert!((inner_product(&direct, &r.projected).re - r.probability).abs() < 1e-10);
    }
}
