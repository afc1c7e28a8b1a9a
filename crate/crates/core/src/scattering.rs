//! Linear-optical scattering of Fock superpositions, coincidence
//! postselection, and permanent/determinant engines.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::fock::{FockError, FockState, Label, ModeIndex, PureState, Statistics};
use crate::multiport::Unitary;

/// Live term count above which an expansion is abandoned.
pub const MAX_TERMS: usize = 10_000_000;
pub const RYSER_MAX: usize = 24;
pub const BRUTEFORCE_MAX: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatterError {
    #[error("port {port} outside a {dim}-port network")]
    PortOutOfRange { port: u16, dim: usize },
    #[error("expansion exceeds {0} terms")]
    TooManyTerms(usize),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix dimension {0} exceeds the limit {1}")]
    TooLarge(usize, usize),
    #[error(transparent)]
    Fock(#[from] FockError),
}

/// Postselected state (unnormalized) and its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceResult {
    pub projected: PureState,
    pub probability: f64,
}

impl CoincidenceResult {
    pub fn normalized(&self) -> Option<PureState> {
        self.projected.normalize().ok()
    }
}

/// Image of a mode under a linear network; `None` leaves the mode alone.
pub type ModeMap<'a> = dyn Fn(ModeIndex) -> Option<Vec<(ModeIndex, C64)>> + 'a;
/// Partial-state filter; returning `false` discards the branch early.
pub type Pruner<'a> = dyn Fn(&FockState) -> bool + 'a;

/// Substitutes every creation operator by its image under `map`.
///
/// Each term is rebuilt from the vacuum, applying the images of its
/// operators from the last in canonical order to the first, so fermionic
/// signs come out of `FockState::create`. When `keep` is given, partial
/// states it rejects are dropped; it must be monotone (a rejected partial
/// state can never lead to an accepted final one).
pub fn transform_modes(
    state: &PureState,
    map: &ModeMap<'_>,
    keep: Option<&Pruner<'_>>,
) -> Result<PureState, ScatterError> {
    let stats = state.statistics();
    let mut total: HashMap<FockState, C64> = HashMap::new();
    let mut cache: HashMap<ModeIndex, Vec<(ModeIndex, C64)>> = HashMap::new();
    for (term, amp) in state.terms() {
        let mut ops = Vec::new();
        let mut norm = 1.0;
        for &(m, n) in term.occupations() {
            for k in 1..=n {
                norm *= k as f64;
                ops.push(m);
            }
        }
        let mut cur: HashMap<FockState, C64> = HashMap::new();
        cur.insert(FockState::vacuum(stats), amp / norm.sqrt());
        for &m in ops.iter().rev() {
            let image = cache
                .entry(m)
                .or_insert_with(|| {
                    map(m)
                        .unwrap_or_else(|| vec![(m, C64::new(1.0, 0.0))])
                        .into_iter()
                        .filter(|(_, c)| c.norm() > 0.0)
                        .collect()
                })
                .clone();
            let mut next: HashMap<FockState, C64> = HashMap::with_capacity(cur.len() * image.len().min(4));
            for (f, a) in &cur {
                for &(m2, c) in &image {
                    if let Some((g, fac)) = f.create(m2) {
                        if let Some(k) = keep {
                            if !k(&g) {
                                continue;
                            }
                        }
                        *next.entry(g).or_insert(C64::new(0.0, 0.0)) += a * c * fac;
                    }
                }
            }
            if next.len() > MAX_TERMS {
                return Err(ScatterError::TooManyTerms(MAX_TERMS));
            }
            cur = next;
        }
        for (f, a) in cur {
            *total.entry(f).or_insert(C64::new(0.0, 0.0)) += a;
        }
        if total.len() > MAX_TERMS {
            return Err(ScatterError::TooManyTerms(MAX_TERMS));
        }
    }
    Ok(PureState::from_map(stats, total))
}

fn check_ports(state: &PureState, u: &Unitary) -> Result<(), ScatterError> {
    for (f, _) in state.terms() {
        for (m, _) in f.occupations() {
            if m.port as usize > u.dim() {
                return Err(ScatterError::PortOutOfRange { port: m.port, dim: u.dim() });
            }
        }
    }
    Ok(())
}

fn unitary_map(u: &Unitary) -> impl Fn(ModeIndex) -> Option<Vec<(ModeIndex, C64)>> + '_ {
    move |m: ModeIndex| {
        let i = m.port as usize - 1;
        Some((0..u.dim()).map(|j| (ModeIndex::new(j as u16 + 1, m.label), u.entry(j, i))).collect())
    }
}

/// Full output state of `input` through `u`; labels ride along unchanged.
pub fn scatter(input: &PureState, u: &Unitary) -> Result<PureState, ScatterError> {
    check_ports(input, u)?;
    transform_modes(input, &unitary_map(u), None)
}

/// Like `scatter` but discards every branch that already has two particles
/// in one port, which makes large coincidence calculations tractable. The
/// result agrees with `postselect_coincidence(scatter(..))` on its support.
pub fn scatter_coincident(input: &PureState, u: &Unitary) -> Result<PureState, ScatterError> {
    check_ports(input, u)?;
    let keep = |f: &FockState| {
        let occ = f.occupations();
        occ.windows(2).all(|w| w[0].0.port != w[1].0.port) && occ.iter().all(|(_, n)| *n == 1)
    };
    transform_modes(input, &unitary_map(u), Some(&keep))
}

/// Keeps terms with exactly one particle in each of ports `1..=N`.
pub fn postselect_coincidence(state: &PureState) -> CoincidenceResult {
    let n = state.particle_number().unwrap_or(0) as usize;
    let projected = state.map_terms(|f, a| {
        let occ = f.occupations();
        let ok = occ.len() == n
            && occ.iter().all(|(_, k)| *k == 1)
            && occ.iter().enumerate().all(|(idx, (m, _))| m.port as usize == idx + 1);
        ok.then(|| (f.clone(), a))
    });
    let probability = projected.norm_sqr();
    CoincidenceResult { projected, probability }
}

/// One particle per port `1..=labels.len()`, port `i` carrying `labels[i-1]`.
pub fn product_input(statistics: Statistics, labels: &[Label]) -> PureState {
    let modes = labels.iter().enumerate().map(|(i, &l)| ModeIndex::new(i as u16 + 1, l));
    PureState::basis(FockState::from_modes(statistics, modes).expect("distinct ports"))
}

/// Product of single-particle superpositions, one per port in order.
/// `ports[i]` lists `(label, amplitude)` for port `i+1`.
pub fn product_state(statistics: Statistics, ports: &[Vec<(Label, C64)>]) -> PureState {
    let mut s = PureState::vacuum(statistics);
    for (i, amps) in ports.iter().enumerate().rev() {
        let mut next = PureState::zero(statistics);
        for &(l, a) in amps {
            let part = s.apply_creation(ModeIndex::new(i as u16 + 1, l)).scale(a);
            next = PureState::from_map(statistics, next.terms().iter().chain(part.terms().iter()).cloned());
        }
        s = next;
    }
    s
}

fn check_square(m: &DMatrix<C64>) -> Result<usize, ScatterError> {
    if m.nrows() != m.ncols() {
        return Err(ScatterError::NotSquare(m.nrows(), m.ncols()));
    }
    Ok(m.nrows())
}

/// Ryser's inclusion-exclusion formula with Gray-code subset order.
pub fn permanent_ryser(m: &DMatrix<C64>) -> Result<C64, ScatterError> {
    let n = check_square(m)?;
    if n > RYSER_MAX {
        return Err(ScatterError::TooLarge(n, RYSER_MAX));
    }
    if n == 0 {
        return Ok(C64::new(1.0, 0.0));
    }
    let mut row_sums = vec![C64::new(0.0, 0.0); n];
    let mut total = C64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        gray ^= 1 << j;
        if gray & (1 << j) != 0 {
            for (r, s) in row_sums.iter_mut().enumerate() {
                *s += m[(r, j)];
            }
        } else {
            for (r, s) in row_sums.iter_mut().enumerate() {
                *s -= m[(r, j)];
            }
        }
        let prod = row_sums.iter().fold(C64::new(1.0, 0.0), |acc, s| acc * s);
        if gray.count_ones().is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(if n % 2 == 0 { total } else { -total })
}

/// Explicit sum over all permutations. Oracle only.
pub fn permanent_bruteforce(m: &DMatrix<C64>) -> Result<C64, ScatterError> {
    let n = check_square(m)?;
    if n > BRUTEFORCE_MAX {
        return Err(ScatterError::TooLarge(n, BRUTEFORCE_MAX));
    }
    fn rec(m: &DMatrix<C64>, col: usize, used: &mut [bool], acc: C64, out: &mut C64) {
        let n = m.ncols();
        if col == n {
            *out += acc;
            return;
        }
        for row in 0..n {
            if !used[row] {
                used[row] = true;
                rec(m, col + 1, used, acc * m[(row, col)], out);
                used[row] = false;
            }
        }
    }
    let mut out = C64::new(0.0, 0.0);
    rec(m, 0, &mut vec![false; n], C64::new(1.0, 0.0), &mut out);
    Ok(out)
}

/// Probability that one identical particle per input port exits one per
/// output port: `|perm U|^2` for bosons, `|det U|^2` for fermions.
pub fn coincidence_probability(u: &Unitary, statistics: Statistics) -> Result<f64, ScatterError> {
    Ok(match statistics {
        Statistics::Boson => permanent_ryser(u.matrix())?.norm_sqr(),
        Statistics::Fermion => u.matrix().clone().determinant().norm_sqr(),
    })
}
