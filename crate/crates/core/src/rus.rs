//! Repeat-until-success controlled-phase gate between two remote atomic
//! qubits, driven by photon-pair measurements.
//!
//! Each atom emits one photon entangled with its qubit. Measuring the pair
//! in a suitable basis either applies `CZ` to the atoms or hands back the
//! input up to known local phases, so the round can be repeated.
//!
//! Two-qubit vectors are indexed `2i + j` over `|ij>`; for photon pairs the
//! first factor is the photon of atom 1 (`x`), the second that of atom 2 (`y`).

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::fock::{FockState, Label, ModeIndex, PureState, Statistics, NORM_TOL};
use crate::multiport::{beamsplitter, bell_multiport, parity_multiport, Unitary};
use crate::scattering::{transform_modes, ScatterError};
use crate::stategen::ATOM_PORT_OFFSET;

/// Port of the photon emitted by atom 1; atom 2 uses the next port.
pub const PHOTON_PORT: u16 = 1;
/// Tolerance used for the analytic angle conditions.
pub const ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RusError {
    #[error("two-qubit state has norm^2 {0}, expected 1")]
    NotNormalized(f64),
    #[error("state is not of the encoded atom-photon form")]
    NotEncoded,
    #[error("network needs product states for outcomes 1 and 2")]
    UnsupportedBasis,
    #[error("outcome {0} outside 1..=4")]
    Outcome(usize),
    #[error("survival probability {0} outside [0, 1]")]
    Survival(f64),
    #[error(transparent)]
    Scatter(#[from] ScatterError),
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn cis(phi: f64) -> C64 {
    C64::from_polar(1.0, phi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    amps: [C64; 4],
}

impl TwoQubitState {
    pub fn new(amps: [C64; 4]) -> Result<Self, RusError> {
        let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(RusError::NotNormalized(n));
        }
        Ok(TwoQubitState { amps })
    }

    /// Rescales to unit norm; `None` for the zero vector.
    pub fn normalized(amps: [C64; 4]) -> Option<Self> {
        let n = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        (n > 1e-300).then(|| TwoQubitState { amps: amps.map(|a| a / n) })
    }

    pub fn basis(index: usize) -> Self {
        let mut amps = [C64::default(); 4];
        amps[index] = c(1.0);
        TwoQubitState { amps }
    }

    pub fn uniform() -> Self {
        TwoQubitState { amps: [c(0.5); 4] }
    }

    /// Haar-random pure state.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let amps = [(); 4].map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
            if let Some(s) = Self::normalized(amps) {
                return s;
            }
        }
    }

    /// `a ⊗ b` for single-qubit vectors.
    pub fn product(a: [C64; 2], b: [C64; 2]) -> Option<Self> {
        Self::normalized([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
    }

    pub fn amplitudes(&self) -> [C64; 4] {
        self.amps
    }

    pub fn inner(&self, other: &TwoQubitState) -> C64 {
        self.amps.iter().zip(other.amps.iter()).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn overlap_modulus(&self, other: &TwoQubitState) -> f64 {
        self.inner(other).norm()
    }

    /// Largest componentwise difference, global phase included.
    pub fn distance(&self, other: &TwoQubitState) -> f64 {
        self.amps.iter().zip(other.amps.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn apply_cz(&self) -> Self {
        let mut amps = self.amps;
        amps[3] = -amps[3];
        TwoQubitState { amps }
    }

    /// `Z_k(phi) = |0><0| + e^{-i phi} |1><1|` on qubit `k` (1 or 2).
    pub fn apply_z(&self, qubit: usize, phi: f64) -> Self {
        let e = cis(-phi);
        let mut amps = self.amps;
        for (idx, a) in amps.iter_mut().enumerate() {
            let bit = if qubit == 1 { idx >> 1 } else { idx & 1 };
            if bit == 1 {
                *a *= e;
            }
        }
        TwoQubitState { amps }
    }

    pub fn apply_phase(&self, phi: f64) -> Self {
        TwoQubitState { amps: self.amps.map(|a| a * cis(phi)) }
    }

    /// Bit flip on qubit `k`.
    pub fn apply_x(&self, qubit: usize) -> Self {
        let a = self.amps;
        let amps = if qubit == 1 { [a[2], a[3], a[0], a[1]] } else { [a[1], a[0], a[3], a[2]] };
        TwoQubitState { amps }
    }

    /// Even (`|00>`,`|11>`) or odd parity component, renormalized.
    pub fn parity_component(&self, even: bool) -> Option<Self> {
        let a = self.amps;
        let z = C64::default();
        if even {
            Self::normalized([a[0], z, z, a[3]])
        } else {
            Self::normalized([z, a[1], a[2], z])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisAngles {
    pub theta1: f64,
    pub theta2: f64,
    pub vartheta1: f64,
    pub vartheta2: f64,
    pub xi1: f64,
    pub xi2: f64,
}

impl BasisAngles {
    /// `xi_2 = -pi/2`, `theta = pi/4`, everything else zero; an insurance
    /// basis that implements `CZ`.
    pub fn angels() -> Self {
        BasisAngles { theta1: FRAC_PI_4, theta2: FRAC_PI_4, vartheta1: 0.0, vartheta2: 0.0, xi1: 0.0, xi2: -FRAC_PI_2 }
    }

    /// `theta = pi/4`, all phases zero; a parity-filter basis.
    pub fn demon() -> Self {
        BasisAngles { theta1: FRAC_PI_4, theta2: FRAC_PI_4, vartheta1: 0.0, vartheta2: 0.0, xi1: 0.0, xi2: 0.0 }
    }

    /// Orthonormal single-photon pairs `(a1, a2)` and `(b1, b2)`.
    pub fn vectors(&self) -> ([[C64; 2]; 2], [[C64; 2]; 2]) {
        let single = |th: f64, vt: f64, xi: f64| {
            let (s, co) = th.sin_cos();
            let v1 = [c(co), cis(vt) * s];
            let v2 = [cis(-xi - vt) * s, cis(-xi) * (-co)];
            [v1, v2]
        };
        (single(self.theta1, self.vartheta1, self.xi1), single(self.theta2, self.vartheta2, self.xi2))
    }

    /// `vartheta1 + vartheta2 + xi1 + xi2`.
    fn phase_sum(&self) -> f64 {
        self.vartheta1 + self.vartheta2 + self.xi1 + self.xi2
    }

    /// `vartheta1 - vartheta2 + xi1 - xi2`.
    fn phase_diff(&self) -> f64 {
        self.vartheta1 - self.vartheta2 + self.xi1 - self.xi2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Four maximally entangled states.
    FullBell,
    /// Outcomes 1, 2 are product states; 3, 4 implement the gate.
    Insurance,
    /// Outcomes 1, 2 are product states; 3, 4 project onto a parity subspace.
    Parity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    MaximallyEntangled,
    Product,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBasis {
    pub angles: BasisAngles,
    pub variant: Variant,
    pub states: [[C64; 4]; 4],
    pub kinds: [StateKind; 4],
    pub mub: bool,
}

impl MeasurementBasis {
    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let g: C64 = (0..4).map(|k| self.states[i][k].conj() * self.states[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                err = err.max((g - c(want)).norm());
            }
        }
        err
    }
}

fn outer(a: &[C64; 2], b: &[C64; 2]) -> [C64; 4] {
    [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]]
}

fn combine(u: [C64; 4], v: [C64; 4], sign: f64) -> [C64; 4] {
    [0, 1, 2, 3].map(|k| (u[k] + v[k] * sign) * FRAC_1_SQRT_2)
}

pub fn build_basis(angles: BasisAngles, variant: Variant) -> MeasurementBasis {
    let ([a1, a2], [b1, b2]) = angles.vectors();
    let (p11, p22) = (outer(&a1, &b1), outer(&a2, &b2));
    let (p12, p21) = (outer(&a1, &b2), outer(&a2, &b1));
    use StateKind::*;
    let (states, kinds) = match variant {
        Variant::FullBell => (
            [combine(p11, p22, 1.0), combine(p11, p22, -1.0), combine(p12, p21, 1.0), combine(p12, p21, -1.0)],
            [MaximallyEntangled; 4],
        ),
        Variant::Insurance | Variant::Parity => (
            [p11, p22, combine(p12, p21, 1.0), combine(p12, p21, -1.0)],
            [Product, Product, MaximallyEntangled, MaximallyEntangled],
        ),
    };
    let mub = states_unbiased(&states);
    MeasurementBasis { angles, variant, states, kinds, mub }
}

fn unbiased(s: &[C64; 4]) -> bool {
    s.iter().all(|a| (a.norm() - 0.5).abs() <= NORM_TOL)
}

fn states_unbiased(states: &[[C64; 4]; 4]) -> bool {
    states.iter().all(unbiased)
}

/// Every basis state has all four amplitudes of modulus 1/2.
pub fn check_mub(b: &MeasurementBasis) -> bool {
    states_unbiased(&b.states)
}

/// `Some(true)` for `(|00> + e^{i d}|11>)/sqrt 2`, `Some(false)` for the odd
/// analogue, `None` otherwise.
pub fn parity_form(s: &[C64; 4]) -> Option<bool> {
    let half = |k: usize| (s[k].norm() - FRAC_1_SQRT_2).abs() <= NORM_TOL;
    let zero = |k: usize| s[k].norm() <= NORM_TOL;
    if half(0) && half(3) && zero(1) && zero(2) {
        Some(true)
    } else if half(1) && half(2) && zero(0) && zero(3) {
        Some(false)
    } else {
        None
    }
}

/// A basis of the given variant whose measurement does what the variant
/// promises: unbiased for `FullBell` and `Insurance`, unbiased products
/// plus parity-type entangled states for `Parity`.
pub fn basis_is_valid(b: &MeasurementBasis) -> bool {
    match b.variant {
        Variant::FullBell | Variant::Insurance => check_mub(b),
        Variant::Parity => {
            unbiased(&b.states[0]) && unbiased(&b.states[1]) && b.states[2..].iter().all(|s| parity_form(s).is_some())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngleCheck {
    pub satisfied: bool,
    /// Degenerate family where some `sin 2theta` vanishes; valid for a
    /// full Bell measurement but without an insurance option.
    pub no_insurance: bool,
}

fn zero(x: f64) -> bool {
    x.abs() <= ANGLE_TOL
}

/// `|cos th1 cos th2| = |cos th1 sin th2| = |sin th1 cos th2| = |sin th1 sin th2| = 1/2`.
fn magic(a: &BasisAngles) -> bool {
    let (s1, c1) = a.theta1.sin_cos();
    let (s2, c2) = a.theta2.sin_cos();
    [c1 * c2, c1 * s2, s1 * c2, s1 * s2].iter().all(|x| zero(x.abs() - 0.5))
}

/// Closed-form angle conditions for each variant.
pub fn check_angle_conditions(a: &BasisAngles, variant: Variant) -> AngleCheck {
    let (t1, t2) = (a.theta1, a.theta2);
    let degenerate = zero((2.0 * t1).sin() * (2.0 * t2).sin());
    let satisfied = match variant {
        Variant::FullBell => {
            zero((2.0 * t1).cos() * (2.0 * t2).cos())
                && (degenerate || (zero(a.phase_sum().cos()) && zero(a.phase_diff().cos())))
        }
        Variant::Insurance => magic(a) && zero(a.phase_diff().cos()),
        Variant::Parity => {
            let upper = zero((t1 - t2).sin()) && zero((t1 + t2).cos());
            let lower = zero((t1 + t2).sin()) && zero((t1 - t2).cos());
            magic(a) && zero(a.phase_diff().sin()) && (upper || lower)
        }
    };
    AngleCheck { satisfied, no_insurance: variant == Variant::FullBell && satisfied && degenerate }
}

/// `α|00;x0y0> + β|01;x0y1> + γ|10;x1y0> + δ|11;x1y1>`: atoms on ports
/// 101/102 (`0`/`1` labels), photons on ports 1/2 (`H` = index 0).
pub fn encode(q: &TwoQubitState) -> PureState {
    let bit = |b: usize, atom: bool| match (b, atom) {
        (0, true) => Label::Zero,
        (_, true) => Label::One,
        (0, false) => Label::H,
        _ => Label::V,
    };
    let terms = (0..4).filter(|&k| q.amps[k].norm() > 0.0).map(|k| {
        let (i, j) = (k >> 1, k & 1);
        let modes = [
            ModeIndex::new(PHOTON_PORT, bit(i, false)),
            ModeIndex::new(PHOTON_PORT + 1, bit(j, false)),
            ModeIndex::new(ATOM_PORT_OFFSET + 1, bit(i, true)),
            ModeIndex::new(ATOM_PORT_OFFSET + 2, bit(j, true)),
        ];
        (FockState::from_modes(Statistics::Boson, modes).expect("distinct modes"), q.amps[k])
    });
    PureState::from_terms(Statistics::Boson, terms).expect("uniform shape")
}

fn bit_of(f: &FockState, port: u16, zero: Label, one: Label) -> Option<usize> {
    let mut found = None;
    for &(m, n) in f.occupations() {
        if m.port != port {
            continue;
        }
        if n != 1 || found.is_some() {
            return None;
        }
        found = Some(if m.label == zero {
            0
        } else if m.label == one {
            1
        } else {
            return None;
        });
    }
    found
}

/// `table[atoms][photons]` amplitudes of an encoded-form state.
fn amplitude_table(encoded: &PureState) -> Result<[[C64; 4]; 4], RusError> {
    let mut t = [[C64::default(); 4]; 4];
    for (f, a) in encoded.terms() {
        if f.particle_number() != 4 {
            return Err(RusError::NotEncoded);
        }
        let x = bit_of(f, PHOTON_PORT, Label::H, Label::V);
        let y = bit_of(f, PHOTON_PORT + 1, Label::H, Label::V);
        let q1 = bit_of(f, ATOM_PORT_OFFSET + 1, Label::Zero, Label::One);
        let q2 = bit_of(f, ATOM_PORT_OFFSET + 2, Label::Zero, Label::One);
        match (x, y, q1, q2) {
            (Some(x), Some(y), Some(q1), Some(q2)) => t[2 * q1 + q2][2 * x + y] += a,
            _ => return Err(RusError::NotEncoded),
        }
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureOutcome {
    /// 1-based outcome label.
    pub index: usize,
    pub probability: f64,
    /// Normalized atomic state after the detection; `None` if impossible.
    pub state: Option<TwoQubitState>,
}

/// Projects the photon pair onto each basis state.
pub fn measure(encoded: &PureState, b: &MeasurementBasis) -> Result<Vec<MeasureOutcome>, RusError> {
    let t = amplitude_table(encoded)?;
    let out = b
        .states
        .iter()
        .enumerate()
        .map(|(i, phi)| {
            let atoms = [0, 1, 2, 3].map(|q| (0..4).map(|p| phi[p].conj() * t[q][p]).sum::<C64>());
            let probability = atoms.iter().map(|a| a.norm_sqr()).sum::<f64>();
            let state = if probability > 1e-24 { TwoQubitState::normalized(atoms) } else { None };
            MeasureOutcome { index: i + 1, probability, state }
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// `CZ` applied to the input.
    GateSuccess,
    /// Input handed back; the round can be repeated.
    Restore,
    /// Projection onto the even (`|00>`,`|11>`) or odd parity subspace.
    ParityProjection { even: bool },
}

/// Post-measurement state written as `e^{i g} Z1(z1) Z2(z2) T|psi_in>`,
/// where `T` is fixed by the classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeAction {
    pub index: usize,
    pub classification: Classification,
    pub global_phase: f64,
    pub z1: f64,
    pub z2: f64,
}

impl OutcomeAction {
    /// Undoes the recorded local phases and global phase.
    pub fn correct(&self, post: &TwoQubitState) -> TwoQubitState {
        post.apply_z(1, -self.z1).apply_z(2, -self.z2).apply_phase(-self.global_phase)
    }

    /// What `correct` must produce for input `q`.
    pub fn target(&self, q: &TwoQubitState) -> Option<TwoQubitState> {
        match self.classification {
            Classification::GateSuccess => Some(q.apply_cz()),
            Classification::Restore => Some(*q),
            Classification::ParityProjection { even } => q.parity_component(even),
        }
    }
}

fn action(index: usize, classification: Classification, global_phase: f64, z1: f64, z2: f64) -> OutcomeAction {
    OutcomeAction { index, classification, global_phase, z1, z2 }
}

/// Correction table for the preset bases: [`BasisAngles::angels`] for
/// `Insurance` and `FullBell`, [`BasisAngles::demon`] for `Parity`.
pub fn classify_and_correct(index: usize, variant: Variant) -> Result<OutcomeAction, RusError> {
    use Classification::*;
    let a = match (variant, index) {
        (Variant::Insurance | Variant::Parity, 1) => action(1, Restore, 0.0, 0.0, 0.0),
        (Variant::Insurance, 2) => action(2, Restore, -FRAC_PI_2, PI, PI),
        (Variant::Parity, 2) => action(2, Restore, 0.0, PI, PI),
        (Variant::FullBell, 1) => action(1, GateSuccess, -FRAC_PI_4, -FRAC_PI_2, -FRAC_PI_2),
        (Variant::FullBell, 2) => action(2, GateSuccess, FRAC_PI_4, FRAC_PI_2, FRAC_PI_2),
        (Variant::Insurance | Variant::FullBell, 3) => action(3, GateSuccess, -FRAC_PI_4, FRAC_PI_2, -FRAC_PI_2),
        (Variant::Insurance | Variant::FullBell, 4) => action(4, GateSuccess, PI + FRAC_PI_4, -FRAC_PI_2, FRAC_PI_2),
        (Variant::Parity, 3) => action(3, ParityProjection { even: true }, 0.0, PI, 0.0),
        (Variant::Parity, 4) => action(4, ParityProjection { even: false }, PI, PI, 0.0),
        (_, i) => return Err(RusError::Outcome(i)),
    };
    Ok(a)
}

/// Reads the action off the basis itself. Detection of `Phi_i` multiplies
/// the input by `2 diag(conj Phi_i)`; this factors into local phases and
/// possibly `CZ` (unbiased state) or a parity projection (parity-form state).
pub fn derive_action(b: &MeasurementBasis, index: usize) -> Option<OutcomeAction> {
    let phi = b.states.get(index.checked_sub(1)?)?;
    let d = phi.map(|a| a.conj());
    if unbiased(phi) {
        let g = d[0].arg();
        let z2 = -(d[1] / d[0]).arg();
        let z1 = -(d[2] / d[0]).arg();
        let r = d[3] * d[0] / (d[1] * d[2]);
        let cls = if r.re > 0.0 { Classification::Restore } else { Classification::GateSuccess };
        return Some(action(index, cls, g, z1, z2));
    }
    match parity_form(phi)? {
        true => {
            Some(action(index, Classification::ParityProjection { even: true }, d[0].arg(), -(d[3] / d[0]).arg(), 0.0))
        }
        false => {
            Some(action(index, Classification::ParityProjection { even: false }, d[1].arg(), -(d[2] / d[1]).arg(), 0.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RusStatus {
    Success,
    /// Ran out of rounds; the state is the restored input.
    RoundsExhausted,
    /// A photon went undetected; the qubits must be reset.
    PhotonLoss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RusResult {
    pub status: RusStatus,
    /// Corrected atomic state; `None` after photon loss.
    pub state: Option<TwoQubitState>,
    pub rounds: usize,
    pub outcomes: Vec<usize>,
}

fn sample<R: Rng + ?Sized>(probs: impl Iterator<Item = f64>, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, p) in probs.enumerate() {
        acc += p;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

/// Repeats encode, measure and correct until the gate succeeds. Each
/// photon independently survives with probability `survival`.
pub fn rus_simulate_with<R: Rng + ?Sized>(
    q: &TwoQubitState,
    basis: &MeasurementBasis,
    max_rounds: usize,
    survival: f64,
    rng: &mut R,
) -> Result<RusResult, RusError> {
    if !(0.0..=1.0).contains(&survival) {
        return Err(RusError::Survival(survival));
    }
    let actions: Vec<OutcomeAction> =
        (1..=4).map(|i| derive_action(basis, i)).collect::<Option<_>>().ok_or(RusError::UnsupportedBasis)?;
    let mut state = *q;
    let mut outcomes = Vec::new();
    for round in 1..=max_rounds {
        if survival < 1.0 && (rng.random::<f64>() >= survival || rng.random::<f64>() >= survival) {
            return Ok(RusResult { status: RusStatus::PhotonLoss, state: None, rounds: round, outcomes });
        }
        let res = measure(&encode(&state), basis)?;
        let k = sample(res.iter().map(|r| r.probability), rng);
        outcomes.push(k + 1);
        let post = res[k].state.ok_or(RusError::UnsupportedBasis)?;
        let act = actions[k];
        let corrected = act.correct(&post);
        match act.classification {
            Classification::GateSuccess => {
                return Ok(RusResult { status: RusStatus::Success, state: Some(corrected), rounds: round, outcomes })
            }
            Classification::Restore => state = corrected,
            Classification::ParityProjection { .. } => return Err(RusError::UnsupportedBasis),
        }
    }
    Ok(RusResult { status: RusStatus::RoundsExhausted, state: Some(state), rounds: max_rounds, outcomes })
}

/// Lossless run with the [`BasisAngles::angels`] insurance basis.
pub fn rus_simulate(q: &TwoQubitState, seed: u64, max_rounds: usize) -> RusResult {
    let basis = build_basis(BasisAngles::angels(), Variant::Insurance);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rus_simulate_with(q, &basis, max_rounds, 1.0, &mut rng).expect("preset basis")
}

/// Detection probabilities grouped by photon pattern and by outcome.
/// Sorted `(port, label)` of each detected photon.
pub type Pattern = Vec<(u16, Label)>;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkDistribution {
    /// Photon pattern with its probability and assigned outcome.
    pub patterns: Vec<(Pattern, f64, Option<usize>)>,
    pub outcomes: [f64; 4],
    /// Weight of patterns outside the outcome table.
    pub unassigned: f64,
}

fn distribution<F>(state: &PureState, classify: F) -> NetworkDistribution
where
    F: Fn(&[(u16, Label)]) -> Option<usize>,
{
    let mut by_pattern: BTreeMap<Vec<(u16, Label)>, f64> = BTreeMap::new();
    for (f, a) in state.terms() {
        let mut pattern = Vec::new();
        for &(m, n) in f.occupations() {
            if m.port < ATOM_PORT_OFFSET {
                pattern.extend(std::iter::repeat_n((m.port, m.label), n as usize));
            }
        }
        *by_pattern.entry(pattern).or_default() += a.norm_sqr();
    }
    let mut outcomes = [0.0; 4];
    let mut unassigned = 0.0;
    let patterns = by_pattern
        .into_iter()
        .map(|(p, w)| {
            let k = classify(&p);
            match k {
                Some(i) => outcomes[i - 1] += w,
                None => unassigned += w,
            }
            (p, w, k)
        })
        .collect();
    NetworkDistribution { patterns, outcomes, unassigned }
}

/// Rotates each photon into the `h/v` frame of the basis
/// (`|h><a1| + |v><a2|`, likewise with `b`), mixes them on a 50:50
/// beamsplitter and reads polarization in both outputs.
pub fn polarization_network(encoded: &PureState, b: &MeasurementBasis) -> Result<NetworkDistribution, RusError> {
    if b.kinds[0] != StateKind::Product {
        return Err(RusError::UnsupportedBasis);
    }
    let ([a1, a2], [b1, b2]) = b.angles.vectors();
    let bs = beamsplitter(0.5, 0.0).expect("valid reflectivity");
    let map = |m: ModeIndex| {
        let (u, v) = match m.port {
            p if p == PHOTON_PORT => (a1, a2),
            p if p == PHOTON_PORT + 1 => (b1, b2),
            _ => return None,
        };
        let k = match m.label {
            Label::H => 0,
            Label::V => 1,
            _ => return None,
        };
        let col = (m.port - PHOTON_PORT) as usize;
        let mut img = Vec::new();
        for (lab, amp) in [(Label::H, u[k].conj()), (Label::V, v[k].conj())] {
            for row in 0..2 {
                img.push((ModeIndex::new(PHOTON_PORT + row as u16, lab), amp * bs.entry(row, col)));
            }
        }
        Some(img)
    };
    let out = transform_modes(encoded, &map, None)?;
    Ok(distribution(&out, |p| {
        let [(p1, l1), (p2, l2)] = p else { return None };
        match (l1, l2) {
            (Label::H, Label::H) => Some(1),
            (Label::V, Label::V) => Some(2),
            _ if p1 == p2 => Some(3),
            _ => Some(4),
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualRail {
    BellMultiport4,
    ParityMultiport,
}

impl DualRail {
    /// Basis this network measures.
    pub fn basis(self) -> MeasurementBasis {
        match self {
            DualRail::BellMultiport4 => build_basis(BasisAngles::angels(), Variant::Insurance),
            DualRail::ParityMultiport => build_basis(BasisAngles::demon(), Variant::Parity),
        }
    }
}

/// Routes `x0 -> 1`, `x1 -> 3`, `y0 -> 2`, `y1 -> 4` into a four-port
/// multiport and counts photons per output port.
pub fn dualrail_network(encoded: &PureState, which: DualRail) -> Result<NetworkDistribution, RusError> {
    let route = |m: ModeIndex| -> Option<u16> {
        match (m.port, m.label) {
            (p, Label::H) if p == PHOTON_PORT => Some(1),
            (p, Label::V) if p == PHOTON_PORT => Some(3),
            (p, Label::H) if p == PHOTON_PORT + 1 => Some(2),
            (p, Label::V) if p == PHOTON_PORT + 1 => Some(4),
            _ => None,
        }
    };
    let routed = transform_modes(encoded, &|m| route(m).map(|p| vec![(ModeIndex::new(p, Label::None), c(1.0))]), None)?;
    let u = match which {
        DualRail::BellMultiport4 => bell_multiport(4).expect("n >= 1"),
        DualRail::ParityMultiport => parity_multiport(),
    };
    let out = scatter_photons(&routed, &u)?;
    let (three, four) = match which {
        DualRail::BellMultiport4 => (3, 4),
        DualRail::ParityMultiport => (4, 3),
    };
    Ok(distribution(&out, |p| {
        let [(p1, _), (p2, _)] = p else { return None };
        match (p1, p2) {
            (1, 1) | (3, 3) => Some(1),
            (2, 2) | (4, 4) => Some(2),
            (1, 4) | (2, 3) => Some(three),
            (1, 2) | (3, 4) => Some(four),
            _ => None,
        }
    }))
}

/// Scatters ports `1..=4` only; atom modes pass through.
fn scatter_photons(state: &PureState, u: &Unitary) -> Result<PureState, RusError> {
    let n = u.dim() as u16;
    let map = |m: ModeIndex| {
        (m.port <= n).then(|| {
            (0..u.dim()).map(|r| (ModeIndex::new(r as u16 + 1, m.label), u.entry(r, (m.port - 1) as usize))).collect()
        })
    };
    Ok(transform_modes(state, &map, None)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportResult {
    /// Single-qubit state left on the target atom.
    pub state: [C64; 2],
    /// Parity-filter rounds used.
    pub rounds: usize,
    pub outcomes: Vec<usize>,
    /// `true` if the source read out `-`.
    pub source_minus: bool,
}

/// Teleports `alpha|0> + beta|1>` from atom 1 onto atom 2, prepared in
/// `(|0>+|1>)/sqrt 2`, by repeating the parity filter until it projects,
/// then reading the source in the `+/-` basis.
pub fn teleport_with_insurance(alpha: C64, beta: C64, seed: u64) -> Result<TeleportResult, RusError> {
    let n = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
    if n < 1e-300 {
        return Err(RusError::NotNormalized(0.0));
    }
    let (alpha, beta) = (alpha / n, beta / n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = build_basis(BasisAngles::demon(), Variant::Parity);
    let plus = [c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)];
    let mut state = TwoQubitState::product([alpha, beta], plus).expect("nonzero");
    let mut outcomes = Vec::new();
    let joined = loop {
        let res = measure(&encode(&state), &basis)?;
        let k = sample(res.iter().map(|r| r.probability), &mut rng);
        outcomes.push(k + 1);
        let act = classify_and_correct(k + 1, Variant::Parity)?;
        let corrected = act.correct(&res[k].state.ok_or(RusError::UnsupportedBasis)?);
        match act.classification {
            Classification::Restore => state = corrected,
            Classification::ParityProjection { even: true } => break corrected,
            Classification::ParityProjection { even: false } => break corrected.apply_x(2),
            Classification::GateSuccess => return Err(RusError::UnsupportedBasis),
        }
    };
    // alpha|00> + beta|11>; project the source onto |+> or |->
    let a = joined.amplitudes();
    let source_minus = rng.random::<f64>() < 0.5;
    let s = if source_minus { -1.0 } else { 1.0 };
    let projected = [a[0], a[3] * s];
    // a `-` reading leaves alpha|0> - beta|1>; Z on the target fixes it
    let target = [projected[0], projected[1] * s];
    let norm = (target[0].norm_sqr() + target[1].norm_sqr()).sqrt();
    Ok(TeleportResult { state: target.map(|x| x / norm), rounds: outcomes.len(), outcomes, source_minus })
}
