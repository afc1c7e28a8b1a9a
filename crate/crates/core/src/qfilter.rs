//! Polarizing-beamsplitter quantum filters with entangled ancillas.
//!
//! Layout for an `N`-photon filter: target photons on odd ports
//! `1, 3, .., 2N-1`, ancilla photons on even ports `2, 4, .., 2N`. PBS `k`
//! mixes ports `2k-1` and `2k`; H is transmitted across, V stays. The even
//! output ports carry detectors reading out in the `+/-` basis.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::fock::{FockError, FockState, Label, ModeIndex, PureState, Statistics};
use crate::scattering::{transform_modes, ScatterError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("input does not hold one H/V photon on each of the {0} target ports")]
    ShapeMismatch(usize),
    #[error("detection efficiency {0} outside (0, 1]")]
    Efficiency(f64),
    #[error(transparent)]
    Scatter(#[from] ScatterError),
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// What one detector saw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DetectorRecord {
    Plus,
    Minus,
    Empty,
    Multi,
}

impl DetectorRecord {
    pub fn symbol(self) -> char {
        match self {
            DetectorRecord::Plus => '+',
            DetectorRecord::Minus => '-',
            DetectorRecord::Empty => '0',
            DetectorRecord::Multi => 'M',
        }
    }
}

/// One syndrome class. `output` is the corrected state on the odd ports
/// for success syndromes with nonzero probability; failure classes can be
/// mixtures, so they carry only a probability.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub syndrome: Vec<DetectorRecord>,
    pub output: Option<PureState>,
    pub success: bool,
    pub probability: f64,
}

impl FilterOutcome {
    pub fn syndrome_string(&self) -> String {
        self.syndrome.iter().map(|d| d.symbol()).collect()
    }
}

fn r2() -> f64 {
    0.5f64.sqrt()
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// PBS routing on the pair `(2k-1, 2k)`.
fn pbs_image(m: ModeIndex) -> Option<Vec<(ModeIndex, C64)>> {
    let odd = m.port % 2 == 1;
    let port = match (m.label, odd) {
        (Label::H, true) => m.port + 1,
        (Label::H, false) => m.port - 1,
        (Label::V, _) => m.port,
        _ => return None,
    };
    Some(vec![(ModeIndex::new(port, m.label), one())])
}

/// Applies the PBS on every port pair `(2k-1, 2k)` present in the state.
pub fn pbs_all(state: &PureState) -> Result<PureState, FilterError> {
    Ok(transform_modes(state, &pbs_image, None)?)
}

/// Single PBS on ports 1 and 2.
pub fn pbs_transform(input: &PureState) -> Result<PureState, FilterError> {
    let map = |m: ModeIndex| if m.port <= 2 { pbs_image(m) } else { None };
    Ok(transform_modes(input, &map, None)?)
}

/// Rotates the even (detector) ports from H/V into the `+/-` basis.
fn to_diagonal(state: &PureState) -> Result<PureState, FilterError> {
    let map = |m: ModeIndex| {
        if m.port % 2 == 1 {
            return None;
        }
        let s = r2();
        let plus = ModeIndex::new(m.port, Label::Plus);
        let minus = ModeIndex::new(m.port, Label::Minus);
        match m.label {
            Label::H => Some(vec![(plus, C64::new(s, 0.0)), (minus, C64::new(s, 0.0))]),
            Label::V => Some(vec![(plus, C64::new(s, 0.0)), (minus, C64::new(-s, 0.0))]),
            _ => None,
        }
    };
    Ok(transform_modes(state, &map, None)?)
}

/// `(|H..H> + |V..V>)/sqrt 2` on ports `2, 4, .., 2N`.
pub fn ghz_ancilla(n: usize) -> PureState {
    let make =
        |l: Label| FockState::from_modes(Statistics::Boson, (1..=n).map(|k| ModeIndex::new(2 * k as u16, l))).unwrap();
    PureState::from_terms(
        Statistics::Boson,
        [(make(Label::H), C64::new(r2(), 0.0)), (make(Label::V), C64::new(r2(), 0.0))],
    )
    .expect("shape")
}

/// `(|HH> + |HV> + |VH> - |VV>)/2` on ports 2 and 4.
pub fn cz_ancilla() -> PureState {
    let t = |a: Label, b: Label, s: f64| {
        (
            FockState::from_modes(Statistics::Boson, [ModeIndex::new(2, a), ModeIndex::new(4, b)]).unwrap(),
            C64::new(s, 0.0),
        )
    };
    PureState::from_terms(
        Statistics::Boson,
        [
            t(Label::H, Label::H, 0.5),
            t(Label::H, Label::V, 0.5),
            t(Label::V, Label::H, 0.5),
            t(Label::V, Label::V, -0.5),
        ],
    )
    .expect("shape")
}

/// Two-photon target state on ports 1 and 3 from amplitudes over
/// `HH, HV, VH, VV`.
pub fn two_photon_target(amps: [C64; 4]) -> PureState {
    let labels = [(Label::H, Label::H), (Label::H, Label::V), (Label::V, Label::H), (Label::V, Label::V)];
    let terms = labels.iter().zip(amps).map(|(&(a, b), x)| {
        (FockState::from_modes(Statistics::Boson, [ModeIndex::new(1, a), ModeIndex::new(3, b)]).unwrap(), x)
    });
    PureState::from_terms(Statistics::Boson, terms).expect("shape")
}

/// `alpha |H..H> + beta |V..V>` on the odd ports of an `N`-photon filter.
pub fn ghz_target(n: usize, alpha: C64, beta: C64) -> PureState {
    let make = |l: Label| {
        FockState::from_modes(Statistics::Boson, (1..=n).map(|k| ModeIndex::new(2 * k as u16 - 1, l))).unwrap()
    };
    PureState::from_terms(Statistics::Boson, [(make(Label::H), alpha), (make(Label::V), beta)]).expect("shape")
}

fn check_target(input: &PureState, n: usize) -> Result<(), FilterError> {
    let ok = !input.is_zero()
        && input.terms().iter().all(|(f, _)| {
            f.particle_number() as usize == n
                && (1..=n).all(|k| f.port_occupation(2 * k as u16 - 1) == 1)
                && f.occupations().iter().all(|(m, _)| matches!(m.label, Label::H | Label::V))
        });
    if ok {
        Ok(())
    } else {
        Err(FilterError::ShapeMismatch(n))
    }
}

/// Keeps the all-H and all-V components.
pub fn parity_projection(input: &PureState) -> PureState {
    input.map_terms(|f, a| {
        let labels: Vec<Label> = f.occupations().iter().map(|(m, _)| m.label).collect();
        labels.windows(2).all(|w| w[0] == w[1]).then(|| (f.clone(), a))
    })
}

/// Flips the sign of the `VV` component of a two-photon state.
pub fn cz_projection(input: &PureState) -> PureState {
    input.map_terms(|f, a| {
        let vv = f.occupations().iter().all(|(m, _)| m.label == Label::V);
        Some((f.clone(), if vv { -a } else { a }))
    })
}

/// `sigma_z` (V -> -V) on the given ports.
pub fn apply_z(state: &PureState, ports: &[u16]) -> PureState {
    state.map_terms(|f, a| {
        let flips: u32 = f
            .occupations()
            .iter()
            .filter(|(m, _)| m.label == Label::V && ports.contains(&m.port))
            .map(|(_, k)| k)
            .sum();
        Some((f.clone(), if flips % 2 == 1 { -a } else { a }))
    })
}

fn detector_record(f: &FockState, port: u16) -> DetectorRecord {
    match f.port_occupation(port) {
        0 => DetectorRecord::Empty,
        1 => {
            if f.occupation(ModeIndex::new(port, Label::Plus)) == 1 {
                DetectorRecord::Plus
            } else {
                DetectorRecord::Minus
            }
        }
        _ => DetectorRecord::Multi,
    }
}

/// Runs target plus ancilla through the PBS array and `+/-` detectors.
/// Returns the detector-rotated state (odd ports still H/V).
fn detect(input: &PureState, ancilla: &PureState) -> Result<PureState, FilterError> {
    let joint = crate::fock::tensor(input, ancilla)?;
    to_diagonal(&pbs_all(&joint)?)
}

fn collect_outcomes<F>(state: &PureState, n: usize, correct: F) -> Vec<FilterOutcome>
where
    F: Fn(&[DetectorRecord], &PureState) -> PureState,
{
    let detectors: Vec<u16> = (1..=n).map(|k| 2 * k as u16).collect();
    let mut groups: BTreeMap<Vec<DetectorRecord>, Vec<(FockState, C64)>> = BTreeMap::new();
    for (f, a) in state.terms() {
        let rec: Vec<DetectorRecord> = detectors.iter().map(|&p| detector_record(f, p)).collect();
        groups.entry(rec).or_default().push((f.restrict(|m| m.port % 2 == 1), *a));
    }
    // every success syndrome is listed, even at zero probability
    for bits in 0..(1u32 << n) {
        let rec: Vec<DetectorRecord> = (0..n)
            .map(|k| if bits >> (n - 1 - k) & 1 == 0 { DetectorRecord::Plus } else { DetectorRecord::Minus })
            .collect();
        groups.entry(rec).or_default();
    }
    let mut out: Vec<FilterOutcome> = groups
        .into_iter()
        .map(|(rec, terms)| {
            let success = rec.iter().all(|d| matches!(d, DetectorRecord::Plus | DetectorRecord::Minus));
            let probability = terms.iter().fold(0.0, |acc, (_, a)| acc + a.norm_sqr());
            let output = if success && probability > 0.0 {
                let s = PureState::from_terms(Statistics::Boson, terms).expect("fixed photon number");
                s.normalize().ok().map(|s| correct(&rec, &s))
            } else {
                None
            };
            FilterOutcome { syndrome: rec, output, success, probability }
        })
        .collect();
    out.sort_by(|a, b| b.success.cmp(&a.success).then(a.syndrome.cmp(&b.syndrome)));
    out
}

/// `N`-photon parity filter with a GHZ ancilla. Success syndromes get a
/// `sigma_z` on port 1 when an odd number of detectors read `-`.
pub fn parity_filter(input: &PureState, n: usize) -> Result<Vec<FilterOutcome>, FilterError> {
    check_target(input, n)?;
    let state = detect(input, &ghz_ancilla(n))?;
    Ok(collect_outcomes(&state, n, |rec, s| {
        let minus = rec.iter().filter(|d| **d == DetectorRecord::Minus).count();
        if minus % 2 == 1 {
            apply_z(s, &[1])
        } else {
            s.clone()
        }
    }))
}

/// Two-photon CZ filter. Corrections: `sigma_z` on port 1 if detector 2
/// reads `-`, on port 3 if detector 4 reads `-`.
pub fn cz_filter(input: &PureState) -> Result<Vec<FilterOutcome>, FilterError> {
    check_target(input, 2)?;
    let state = detect(input, &cz_ancilla())?;
    Ok(collect_outcomes(&state, 2, |rec, s| {
        let mut ports = Vec::new();
        if rec[0] == DetectorRecord::Minus {
            ports.push(1);
        }
        if rec[1] == DetectorRecord::Minus {
            ports.push(3);
        }
        apply_z(s, &ports)
    }))
}

pub fn success_probability(outcomes: &[FilterOutcome]) -> f64 {
    outcomes.iter().filter(|o| o.success).map(|o| o.probability).sum()
}

/// Closed-form fidelity of the two-photon parity filter with detection
/// efficiency `p_d`, for uniform-modulus inputs.
pub fn filter_fidelity(p_d: f64) -> Result<f64, FilterError> {
    if !(p_d > 0.0 && p_d <= 1.0) {
        return Err(FilterError::Efficiency(p_d));
    }
    Ok(1.0 / (5.0 - 6.0 * p_d + 2.0 * p_d * p_d))
}

/// Brute-force fidelity of the parity filter with inefficient
/// non-resolving detectors. A single click `s` is registered by the POVM
/// element `p |1_s><1_s| + 2p(1-p) |2_s><2_s|`; the heralded state on the
/// odd ports is averaged over all single-click syndromes after correction
/// and compared with the ideal projected state.
pub fn filter_fidelity_povm(p_d: f64, input: &PureState, n: usize) -> Result<f64, FilterError> {
    if !(p_d > 0.0 && p_d <= 1.0) {
        return Err(FilterError::Efficiency(p_d));
    }
    check_target(input, n)?;
    let target = parity_projection(input).normalize()?;
    let state = detect(input, &ghz_ancilla(n))?;
    let detectors: Vec<u16> = (1..=n).map(|k| 2 * k as u16).collect();
    // detector Fock configuration -> odd-port branch
    let mut branches: BTreeMap<FockState, Vec<(FockState, C64)>> = BTreeMap::new();
    for (f, a) in state.terms() {
        branches.entry(f.restrict(|m| m.port % 2 == 0)).or_default().push((f.restrict(|m| m.port % 2 == 1), *a));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (det, terms) in branches {
        let mut weight = 1.0;
        let mut minus = 0;
        for &p in &detectors {
            let np = det.occupation(ModeIndex::new(p, Label::Plus));
            let nm = det.occupation(ModeIndex::new(p, Label::Minus));
            let (count, is_minus) = match (np, nm) {
                (k, 0) if k > 0 => (k, false),
                (0, k) if k > 0 => (k, true),
                _ => (0, false),
            };
            weight *= match count {
                1 => p_d,
                2 => 2.0 * p_d * (1.0 - p_d),
                _ => 0.0,
            };
            if is_minus {
                minus += 1;
            }
        }
        if weight == 0.0 {
            continue;
        }
        let branch = PureState::from_map(Statistics::Boson, terms);
        let branch = if minus % 2 == 1 { apply_z(&branch, &[1]) } else { branch };
        den += weight * branch.norm_sqr();
        num += weight * crate::fock::inner_product(&target, &branch).norm_sqr();
    }
    Ok(num / den)
}
