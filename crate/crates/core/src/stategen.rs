//! Postselected multiphoton entangled states from the Bell multiport, and
//! the atom-photon duality used to herald multiatom states.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::fock::{FockState, Label, ModeIndex, PureState, Statistics};
use crate::multiport::{bell_multiport, Unitary};
use crate::scattering::{
    permanent_ryser, postselect_coincidence, product_input, product_state, scatter, scatter_coincident,
    transform_modes, CoincidenceResult, ScatterError,
};

/// Atoms live on ports `ATOM_PORT_OFFSET + i` so they never collide with
/// photon ports.
pub const ATOM_PORT_OFFSET: u16 = 100;
pub const W_MAX: usize = 18;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StategenError {
    #[error("N = {0} outside the supported range {1}..={2}")]
    OutOfRange(usize, usize, usize),
    #[error("input photon {0} is not normalized")]
    NotNormalized(usize),
    #[error("syndrome port {0} carries no photon")]
    EmptySyndromePort(usize),
    #[error("syndrome has {0} ports, expected {1}")]
    SyndromeShape(usize, usize),
    #[error(transparent)]
    Scatter(#[from] ScatterError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WSweepRow {
    pub n: usize,
    pub p_success: f64,
    pub is_zero: bool,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Basis state with one photon per port `1..=labels.len()`.
pub fn labelled(labels: &[Label]) -> FockState {
    FockState::from_modes(Statistics::Boson, labels.iter().enumerate().map(|(i, &l)| ModeIndex::new(i as u16 + 1, l)))
        .expect("one photon per port")
}

/// `|+>` in port 1 and `|->` everywhere else.
pub fn w_input_labels(n: usize) -> Vec<Label> {
    (0..n).map(|i| if i == 0 { Label::Plus } else { Label::Minus }).collect()
}

/// The single-excitation pattern with `+` in port `j` (1-based).
pub fn w_term(n: usize, j: usize) -> FockState {
    labelled(&(1..=n).map(|k| if k == j { Label::Plus } else { Label::Minus }).collect::<Vec<_>>())
}

/// Scatters the W input through the `N`-port Bell multiport and keeps the
/// coincidence part.
pub fn generate_w_state(n: usize) -> Result<CoincidenceResult, StategenError> {
    if !(2..=W_MAX).contains(&n) {
        return Err(StategenError::OutOfRange(n, 2, W_MAX));
    }
    let u = bell_multiport(n).expect("n >= 1");
    let input = product_input(Statistics::Boson, &w_input_labels(n));
    let projected = scatter_coincident(&input, &u)?;
    Ok(postselect_coincidence(&projected))
}

/// `beta_j = U_{j1} perm(U_red)`, with `U_red` the Bell matrix minus column 1
/// and row `j`.
pub fn w_amplitude_via_permanent(n: usize, j: usize) -> Result<C64, StategenError> {
    if !(2..=crate::scattering::RYSER_MAX).contains(&n) {
        return Err(StategenError::OutOfRange(n, 2, crate::scattering::RYSER_MAX));
    }
    if !(1..=n).contains(&j) {
        return Err(StategenError::OutOfRange(j, 1, n));
    }
    let u = bell_multiport(n).expect("n >= 1");
    let red = u.matrix().clone().remove_column(0).remove_row(j - 1);
    Ok(u.entry(j - 1, 0) * permanent_ryser(&red)?)
}

/// Exact W success probability for every `N` in `2..=n_max`.
pub fn wstate_sweep(n_max: usize) -> Result<Vec<WSweepRow>, StategenError> {
    if n_max > W_MAX {
        return Err(StategenError::OutOfRange(n_max, 2, W_MAX));
    }
    let mut rows = Vec::new();
    for n in 2..=n_max {
        let mut p = 0.0;
        for j in 1..=n {
            p += w_amplitude_via_permanent(n, j)?.norm_sqr();
        }
        rows.push(WSweepRow { n, p_success: p, is_zero: p < 1e-12 });
    }
    Ok(rows)
}

/// Flips the sign of every `|->` photon on the given ports (a local
/// `sigma_z` in the `+/-` basis).
pub fn apply_local_z(state: &PureState, ports: &[u16]) -> PureState {
    state.map_terms(|f, a| {
        let flips = f
            .occupations()
            .iter()
            .filter(|(m, _)| m.label == Label::Minus && ports.contains(&m.port))
            .map(|(_, n)| *n)
            .sum::<u32>();
        Some((f.clone(), if flips % 2 == 1 { -a } else { a }))
    })
}

/// Normalized textbook W state with alternating signs for even `N`:
/// `sum_j s_j |j>/sqrt N`, `s_j = (-1)^{j-1}` if `N` even, else 1.
pub fn w_reference(n: usize) -> PureState {
    let s = 1.0 / (n as f64).sqrt();
    let terms = (1..=n).map(|j| {
        let sign = if n.is_multiple_of(2) && j.is_multiple_of(2) { -1.0 } else { 1.0 };
        (w_term(n, j), c(sign * s))
    });
    PureState::from_terms(Statistics::Boson, terms).expect("uniform shape")
}

use Label::{Minus as M, Plus as P};

fn build(terms: &[(&[Label], f64)]) -> PureState {
    PureState::from_terms(Statistics::Boson, terms.iter().map(|(l, a)| (labelled(l), c(*a)))).expect("shape")
}

/// `(|+-+-> - |-+-+>)/sqrt 2`.
pub fn ghz4_reference() -> PureState {
    let r = 0.5f64.sqrt();
    build(&[(&[P, M, P, M], r), (&[M, P, M, P], -r)])
}

/// Singlet on ports (1,3) times singlet on ports (2,4).
pub fn double_singlet_reference() -> PureState {
    build(&[(&[P, P, M, M], 0.5), (&[M, M, P, P], 0.5), (&[P, M, M, P], -0.5), (&[M, P, P, M], -0.5)])
}

pub fn w4_reference() -> PureState {
    build(&[(&[P, M, M, M], 0.5), (&[M, P, M, M], -0.5), (&[M, M, P, M], 0.5), (&[M, M, M, P], -0.5)])
}

/// The spin-flipped partner of the four-photon W state.
pub fn w4_prime_reference() -> PureState {
    build(&[(&[M, P, P, P], 0.5), (&[P, M, P, P], -0.5), (&[P, P, M, P], 0.5), (&[P, P, P, M], -0.5)])
}

fn four_port(labels: [Label; 4]) -> Result<CoincidenceResult, StategenError> {
    let u = bell_multiport(4).expect("n >= 1");
    let out = scatter(&product_input(Statistics::Boson, &labels), &u)?;
    Ok(postselect_coincidence(&out))
}

/// Input `+-+-`.
pub fn generate_ghz4() -> Result<CoincidenceResult, StategenError> {
    four_port([P, M, P, M])
}

/// Input `++--`.
pub fn generate_double_singlet() -> Result<CoincidenceResult, StategenError> {
    four_port([P, P, M, M])
}

/// Coefficients of the postselected state on `{DS, GHZ, W, W'}` for the
/// product input `prod_i (alpha[i][0] a_{i+} + alpha[i][1] a_{i-})`.
pub fn decompose_general4(alpha: &[[C64; 2]; 4]) -> Result<[C64; 4], StategenError> {
    for (i, a) in alpha.iter().enumerate() {
        if (a[0].norm_sqr() + a[1].norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(StategenError::NotNormalized(i + 1));
        }
    }
    // product of the chosen amplitudes; true selects '+'
    let g = |s: [bool; 4]| -> C64 {
        s.iter().enumerate().fold(c(1.0), |acc, (i, &plus)| acc * alpha[i][if plus { 0 } else { 1 }])
    };
    let (t, f) = (true, false);
    let g1 = g([t, t, f, f]);
    let g2 = g([f, f, t, t]);
    let g3 = g([f, t, t, f]);
    let g4 = g([t, f, f, t]);
    let g5 = g([t, f, t, f]);
    let g6 = g([f, t, f, t]);
    let g7 = g([t, f, f, f]);
    let g8 = g([f, t, f, f]);
    let g9 = g([f, f, t, f]);
    let g10 = g([f, f, f, t]);
    let g11 = g([f, t, t, t]);
    let g12 = g([t, f, t, t]);
    let g13 = g([t, t, f, t]);
    let g14 = g([t, t, t, f]);
    let i = C64::new(0.0, 1.0);
    Ok([
        i * 0.25 * (g1 + g2 - g3 - g4),
        (g6 - g5) / (2.0 * 2f64.sqrt()),
        0.25 * (g8 + g10 - g7 - g9),
        0.25 * (g12 + g14 - g11 - g13),
    ])
}

/// `sum_k coeffs[k] |basis_k>` over `{DS, GHZ, W, W'}`.
pub fn general4_reconstruct(coeffs: &[C64; 4]) -> PureState {
    let basis = [double_singlet_reference(), ghz4_reference(), w4_reference(), w4_prime_reference()];
    let terms = basis.iter().zip(coeffs).flat_map(|(b, k)| b.terms().iter().map(move |(f, a)| (f.clone(), a * k)));
    PureState::from_terms(Statistics::Boson, terms).expect("shape")
}

/// Per-port photon superpositions in the `+/-` basis.
pub fn general4_input(alpha: &[[C64; 2]; 4]) -> PureState {
    let ports: Vec<_> = alpha.iter().map(|a| vec![(P, a[0]), (M, a[1])]).collect();
    product_state(Statistics::Boson, &ports)
}

/// Each atom `i` maximally entangled with the photon entering port `i`,
/// photons scattered through `u`, coincidence part kept.
pub fn atom_photon_joint(u: &Unitary) -> Result<PureState, StategenError> {
    let n = u.dim();
    let r = c(0.5f64.sqrt());
    let mut s = PureState::vacuum(Statistics::Boson);
    for i in (1..=n as u16).rev() {
        let mut next = PureState::zero(Statistics::Boson);
        for mu in [P, M] {
            let part = s
                .apply_creation(ModeIndex::new(ATOM_PORT_OFFSET + i, mu))
                .apply_creation(ModeIndex::new(i, mu))
                .scale(r);
            next = next.add(&part).unwrap_or(part);
        }
        s = next;
    }
    let map = |m: ModeIndex| {
        (m.port as usize <= n)
            .then(|| (0..n).map(|j| (ModeIndex::new(j as u16 + 1, m.label), u.entry(j, m.port as usize - 1))).collect())
    };
    let keep = |f: &FockState| {
        f.occupations().iter().filter(|(m, _)| m.port <= ATOM_PORT_OFFSET).all(|(_, k)| *k == 1)
            && (1..=n as u16).all(|p| f.port_occupation(p) <= 1)
    };
    Ok(transform_modes(&s, &map, Some(&keep))?)
}

/// Projects the photons of `joint` onto the detection syndrome
/// `prod_j sum_mu conj(alpha_{j mu}) b_{j mu}^dagger |0>` and returns the
/// (unnormalized) atomic remainder, relabelled onto ports `1..=N`.
pub fn project_atoms(joint: &PureState, syndrome: &[Vec<(Label, C64)>]) -> Result<PureState, StategenError> {
    let n = joint
        .terms()
        .first()
        .map(|(f, _)| f.occupations().iter().filter(|(m, _)| m.port <= ATOM_PORT_OFFSET).count())
        .unwrap_or(0);
    if syndrome.len() != n {
        return Err(StategenError::SyndromeShape(syndrome.len(), n));
    }
    for (j, port) in syndrome.iter().enumerate() {
        if port.iter().all(|(_, a)| a.norm() == 0.0) {
            return Err(StategenError::EmptySyndromePort(j + 1));
        }
    }
    Ok(joint.map_terms(|f, a| {
        let mut coeff = a;
        for (j, port) in syndrome.iter().enumerate() {
            let p = j as u16 + 1;
            let photon = f.occupations().iter().find(|(m, _)| m.port == p)?;
            let amp = port.iter().find(|(l, _)| *l == photon.0.label).map(|(_, x)| *x)?;
            if f.port_occupation(p) != 1 {
                return None;
            }
            coeff *= amp;
        }
        let atoms = f.restrict(|m| m.port > ATOM_PORT_OFFSET);
        let relabelled = FockState::from_occupations(
            Statistics::Boson,
            atoms.occupations().iter().map(|(m, k)| (ModeIndex::new(m.port - ATOM_PORT_OFFSET, m.label), *k)),
        )
        .ok()?;
        Some((relabelled, coeff))
    }))
}

/// The same atomic state built the other way round: the syndrome treated
/// as an input photon state, scattered through `U^T`, coincidence part kept.
pub fn dual_atom_state(u: &Unitary, syndrome: &[Vec<(Label, C64)>]) -> Result<PureState, StategenError> {
    let n = u.dim();
    let input = product_state(Statistics::Boson, syndrome);
    let out = postselect_coincidence(&scatter(&input, &u.transpose())?).projected;
    Ok(out.scale(c(2f64.powf(-(n as f64) / 2.0))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w4_probability_and_state() {
        let r = generate_w_state(4).unwrap();
        assert!((r.probability - 1.0 / 16.0).abs() < 1e-12);
        assert!((r.projected.overlap_modulus(&w4_reference()) - 1.0).abs() < 1e-12);
        assert_eq!(r.projected.len(), 4);
    }

    #[test]
    fn w2_is_singlet_form() {
        let r = generate_w_state(2).unwrap();
        assert!((r.probability - 0.5).abs() < 1e-12);
        assert!((r.projected.overlap_modulus(&w_reference(2)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn w6_vanishes() {
        assert!(generate_w_state(6).unwrap().probability < 1e-20);
        assert!(generate_w_state(1).is_err());
        assert!(generate_w_state(19).is_err());
    }

    #[test]
    fn w_permanent_matches_scatter() {
        for n in 2..=8 {
            let r = generate_w_state(n).unwrap();
            for j in 1..=n {
                let direct = r.projected.amplitude(&w_term(n, j));
                let perm = w_amplitude_via_permanent(n, j).unwrap();
                assert!((direct - perm).norm() < 1e-10, "n={n} j={j}");
            }
        }
        assert!((w_amplitude_via_permanent(4, 2).unwrap().norm() - 0.125).abs() < 1e-12);
        assert!((w_amplitude_via_permanent(2, 1).unwrap().norm() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn w_phase_relation() {
        for n in 2..=14 {
            let b1 = w_amplitude_via_permanent(n, 1).unwrap();
            if b1.norm() < 1e-12 {
                continue;
            }
            for j in 2..=n {
                let bj = w_amplitude_via_permanent(n, j).unwrap();
                let expect = if n % 2 == 0 && j % 2 == 0 { -b1 } else { b1 };
                assert!((bj - expect).norm() < 1e-10, "n={n} j={j}");
            }
        }
    }

    #[test]
    fn even_n_local_z_gives_uniform_w() {
        let r = generate_w_state(4).unwrap();
        let fixed = apply_local_z(&r.normalized().unwrap(), &[2, 4]);
        let a0 = fixed.terms()[0].1;
        assert!(fixed.terms().iter().all(|(_, a)| (a - a0).norm() < 1e-12));
    }

    #[test]
    fn sweep_pattern() {
        let rows = wstate_sweep(14).unwrap();
        let p = |n: usize| rows.iter().find(|r| r.n == n).unwrap().p_success;
        assert!(rows.iter().find(|r| r.n == 6).unwrap().is_zero);
        assert!(rows.iter().find(|r| r.n == 12).unwrap().is_zero);
        assert!(p(13) > p(9));
        assert!((p(4) - 1.0 / 16.0).abs() < 1e-12);
        assert!(rows.iter().filter(|r| r.is_zero).count() == 2);
    }

    #[test]
    fn ghz_and_double_singlet() {
        let g = generate_ghz4().unwrap();
        assert!((g.probability - 0.125).abs() < 1e-12);
        assert_eq!(g.projected.len(), 2);
        assert!((g.projected.overlap_modulus(&ghz4_reference()) - 1.0).abs() < 1e-12);
        for (_, a) in g.projected.terms() {
            assert!((a.norm() - 0.5f64.sqrt() * 0.125f64.sqrt()).abs() < 1e-12);
        }
        let d = generate_double_singlet().unwrap();
        assert!((d.probability - 1.0 / 16.0).abs() < 1e-12);
        assert!((d.projected.overlap_modulus(&double_singlet_reference()) - 1.0).abs() < 1e-12);
        let dn = d.normalized().unwrap();
        assert!(dn.terms().iter().all(|(_, a)| (a.norm() - 0.5).abs() < 1e-12));
    }

    #[test]
    fn double_singlet_factorizes() {
        let r = c(0.5f64.sqrt());
        let singlet = |p: u16, q: u16| {
            let v = PureState::vacuum(Statistics::Boson);
            let a = v.apply_creation(ModeIndex::new(p, P)).apply_creation(ModeIndex::new(q, M)).scale(r);
            let b = v.apply_creation(ModeIndex::new(p, M)).apply_creation(ModeIndex::new(q, P)).scale(-r);
            a.add(&b).unwrap()
        };
        let prod = crate::fock::tensor(&singlet(1, 3), &singlet(2, 4)).unwrap();
        assert!((crate::fock::inner_product(&prod, &double_singlet_reference()) - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn general4_special_inputs() {
        let one = c(1.0);
        let zero = c(0.0);
        let pl = [one, zero];
        let mi = [zero, one];
        let w = decompose_general4(&[pl, mi, mi, mi]).unwrap();
        assert!(w[0].norm() < 1e-15 && w[1].norm() < 1e-15 && w[3].norm() < 1e-15);
        assert!(w[2].norm() > 0.1);
        let g = decompose_general4(&[pl, mi, pl, mi]).unwrap();
        assert!(g[0].norm() < 1e-15 && g[2].norm() < 1e-15 && g[3].norm() < 1e-15);
        assert!(decompose_general4(&[[one, one], mi, mi, mi]).is_err());
    }

    #[test]
    fn basis_is_orthonormal() {
        let b = [double_singlet_reference(), ghz4_reference(), w4_reference(), w4_prime_reference()];
        for (i, x) in b.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let ip = crate::fock::inner_product(x, y);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - c(expect)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn duality_n2_and_n4() {
        for n in [2usize, 3, 4] {
            let u = bell_multiport(n).unwrap();
            let joint = atom_photon_joint(&u).unwrap();
            let labels = w_input_labels(n);
            let syn: Vec<_> = labels.iter().map(|&l| vec![(l, c(1.0))]).collect();
            let a = project_atoms(&joint, &syn).unwrap();
            let b = dual_atom_state(&u, &syn).unwrap();
            assert!(a.add(&b.scale(c(-1.0))).unwrap().norm_sqr() < 1e-24, "n={n}");
        }
    }

    #[test]
    fn identical_syndrome_gives_zero_atoms() {
        let u = bell_multiport(4).unwrap();
        let joint = atom_photon_joint(&u).unwrap();
        let syn = vec![vec![(P, c(1.0))]; 4];
        assert!(project_atoms(&joint, &syn).unwrap().is_zero());
        let bad = vec![vec![(P, c(1.0))], vec![], vec![(P, c(1.0))], vec![(P, c(1.0))]];
        assert!(matches!(project_atoms(&joint, &bad), Err(StategenError::EmptySyndromePort(2))));
    }
}
