//! Multimode Fock states and finite superpositions of them.
//!
//! Creation operators are ordered canonically by ascending `(port, label)`.
//! A Fock term with occupations `n_m` stands for
//! `prod_m (a_m^dagger)^{n_m} / sqrt(n_m!) |0>` with the product written in
//! canonical order, so fermionic signs are always relative to that order.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Tolerance for the normalization flag and norm checks.
pub const NORM_TOL: f64 = 1e-10;
/// Amplitudes below this modulus are dropped after composite operations.
pub const PRUNE_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("fermionic mode {0} occupied more than once")]
    PauliViolation(ModeIndex),
    #[error("terms mix particle statistics")]
    MixedStatistics,
    #[error("terms carry different particle numbers ({0} vs {1})")]
    MixedParticleNumber(u32, u32),
    #[error("tensor product of states sharing mode {0}")]
    OverlappingModes(ModeIndex),
    #[error("cannot normalize the zero vector")]
    ZeroVector,
    #[error("parse error: {0}")]
    Parse(String),
}

/// Internal degree of freedom carried by a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    None,
    Plus,
    Minus,
    H,
    V,
    Early,
    Late,
    Zero,
    One,
}

impl Label {
    fn symbol(self) -> &'static str {
        match self {
            Label::None => "_",
            Label::Plus => "+",
            Label::Minus => "-",
            Label::H => "H",
            Label::V => "V",
            Label::Early => "e",
            Label::Late => "l",
            Label::Zero => "0",
            Label::One => "1",
        }
    }
}

impl FromStr for Label {
    type Err = FockError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "_" => Label::None,
            "+" => Label::Plus,
            "-" => Label::Minus,
            "H" => Label::H,
            "V" => Label::V,
            "e" => Label::Early,
            "l" => Label::Late,
            "0" => Label::Zero,
            "1" => Label::One,
            other => return Err(FockError::Parse(format!("unknown label '{other}'"))),
        })
    }
}

/// A single mode: spatial port (1-based) plus internal label.
/// Ordering is lexicographic in `(port, label)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex {
    pub port: u16,
    pub label: Label,
}

impl ModeIndex {
    /// Panics on port 0; ports are 1-based throughout.
    pub fn new(port: u16, label: Label) -> Self {
        assert!(port >= 1, "ports are numbered from 1");
        ModeIndex { port, label }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.port, self.label.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statistics {
    Boson,
    Fermion,
}

/// Occupation-number basis state. Occupations are kept sorted by mode and
/// never contain zero entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState {
    modes: Vec<(ModeIndex, u32)>,
    statistics: Statistics,
}

impl FockState {
    pub fn vacuum(statistics: Statistics) -> Self {
        FockState { modes: Vec::new(), statistics }
    }

    /// Builds a state from (mode, occupation) pairs; repeated modes add up.
    pub fn from_occupations<I>(statistics: Statistics, occ: I) -> Result<Self, FockError>
    where
        I: IntoIterator<Item = (ModeIndex, u32)>,
    {
        let mut modes: Vec<(ModeIndex, u32)> = Vec::new();
        for (m, n) in occ {
            if n == 0 {
                continue;
            }
            match modes.binary_search_by(|(k, _)| k.cmp(&m)) {
                Ok(i) => modes[i].1 += n,
                Err(i) => modes.insert(i, (m, n)),
            }
        }
        if statistics == Statistics::Fermion {
            if let Some((m, _)) = modes.iter().find(|(_, n)| *n > 1) {
                return Err(FockError::PauliViolation(*m));
            }
        }
        Ok(FockState { modes, statistics })
    }

    /// One particle in each listed mode.
    pub fn from_modes<I>(statistics: Statistics, modes: I) -> Result<Self, FockError>
    where
        I: IntoIterator<Item = ModeIndex>,
    {
        Self::from_occupations(statistics, modes.into_iter().map(|m| (m, 1)))
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn occupations(&self) -> &[(ModeIndex, u32)] {
        &self.modes
    }

    pub fn occupation(&self, mode: ModeIndex) -> u32 {
        match self.modes.binary_search_by(|(k, _)| k.cmp(&mode)) {
            Ok(i) => self.modes[i].1,
            Err(_) => 0,
        }
    }

    /// Total count on a spatial port, summed over labels.
    pub fn port_occupation(&self, port: u16) -> u32 {
        self.modes.iter().filter(|(m, _)| m.port == port).map(|(_, n)| n).sum()
    }

    pub fn particle_number(&self) -> u32 {
        self.modes.iter().map(|(_, n)| n).sum()
    }

    pub fn is_vacuum(&self) -> bool {
        self.modes.is_empty()
    }

    /// Applies one creation operator. Returns the new basis state with its
    /// ladder factor (`sqrt(n+1)` or a fermionic sign), or `None` when Pauli
    /// exclusion kills the term.
    pub fn create(&self, mode: ModeIndex) -> Option<(FockState, f64)> {
        match self.modes.binary_search_by(|(k, _)| k.cmp(&mode)) {
            Ok(i) => match self.statistics {
                Statistics::Fermion => None,
                Statistics::Boson => {
                    let mut next = self.clone();
                    let n = next.modes[i].1;
                    next.modes[i].1 = n + 1;
                    Some((next, ((n + 1) as f64).sqrt()))
                }
            },
            Err(i) => {
                let mut next = self.clone();
                next.modes.insert(i, (mode, 1));
                let factor = match self.statistics {
                    Statistics::Boson => 1.0,
                    Statistics::Fermion => {
                        if i % 2 == 0 {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                };
                Some((next, factor))
            }
        }
    }

    /// Keeps only the modes for which `keep` holds.
    pub fn restrict<F: Fn(&ModeIndex) -> bool>(&self, keep: F) -> FockState {
        FockState { modes: self.modes.iter().filter(|(m, _)| keep(m)).copied().collect(), statistics: self.statistics }
    }

    fn format_modes(&self) -> String {
        self.modes.iter().map(|(m, n)| format!("{m}^{n}")).collect::<Vec<_>>().join(" ")
    }
}

impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.modes.is_empty() {
            write!(f, "|vac>")
        } else {
            write!(f, "|{}>", self.format_modes())
        }
    }
}

/// Finite superposition of Fock states sharing one statistics tag.
///
/// The empty term list is the zero vector; the vacuum is a single term with
/// no occupied modes.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    terms: Vec<(FockState, C64)>,
    statistics: Statistics,
    normalized: bool,
}

impl PureState {
    pub fn vacuum(statistics: Statistics) -> Self {
        Self::from_map(statistics, [(FockState::vacuum(statistics), C64::new(1.0, 0.0))])
    }

    pub fn zero(statistics: Statistics) -> Self {
        PureState { terms: Vec::new(), statistics, normalized: false }
    }

    pub fn basis(state: FockState) -> Self {
        let stats = state.statistics;
        Self::from_map(stats, [(state, C64::new(1.0, 0.0))])
    }

    /// Builds a state, merging duplicate keys and pruning tiny amplitudes.
    /// Rejects mixed statistics and mixed particle numbers.
    pub fn from_terms<I>(statistics: Statistics, terms: I) -> Result<Self, FockError>
    where
        I: IntoIterator<Item = (FockState, C64)>,
    {
        let terms: Vec<_> = terms.into_iter().collect();
        let mut number = None;
        for (f, _) in &terms {
            if f.statistics != statistics {
                return Err(FockError::MixedStatistics);
            }
            let n = f.particle_number();
            match number {
                None => number = Some(n),
                Some(m) if m != n => return Err(FockError::MixedParticleNumber(m, n)),
                _ => {}
            }
        }
        Ok(Self::from_map(statistics, terms))
    }

    /// Unchecked constructor used by the scattering engines.
    pub(crate) fn from_map<I>(statistics: Statistics, terms: I) -> Self
    where
        I: IntoIterator<Item = (FockState, C64)>,
    {
        let mut acc: HashMap<FockState, C64> = HashMap::new();
        for (f, a) in terms {
            *acc.entry(f).or_insert(C64::new(0.0, 0.0)) += a;
        }
        let mut terms: Vec<_> = acc.into_iter().filter(|(_, a)| a.norm() >= PRUNE_TOL).collect();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        let norm: f64 = terms.iter().map(|(_, a)| a.norm_sqr()).sum();
        PureState { terms, statistics, normalized: (norm - 1.0).abs() < NORM_TOL }
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn terms(&self) -> &[(FockState, C64)] {
        &self.terms
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Particle number shared by all terms, `None` for the zero vector.
    pub fn particle_number(&self) -> Option<u32> {
        self.terms.first().map(|(f, _)| f.particle_number())
    }

    pub fn amplitude(&self, state: &FockState) -> C64 {
        match self.terms.binary_search_by(|(k, _)| k.cmp(state)) {
            Ok(i) => self.terms[i].1,
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        // start from +0.0 so an empty sum never prints as -0
        self.terms.iter().fold(0.0, |acc, (_, a)| acc + a.norm_sqr())
    }

    pub fn normalize(&self) -> Result<PureState, FockError> {
        let n = self.norm_sqr().sqrt();
        if n < PRUNE_TOL {
            return Err(FockError::ZeroVector);
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, c: C64) -> PureState {
        Self::from_map(self.statistics, self.terms.iter().map(|(f, a)| (f.clone(), a * c)))
    }

    pub fn add(&self, other: &PureState) -> Result<PureState, FockError> {
        Self::from_terms(self.statistics, self.terms.iter().chain(other.terms.iter()).cloned())
    }

    /// Maps every term through `f`, merging and pruning the result.
    pub fn map_terms<F>(&self, f: F) -> PureState
    where
        F: Fn(&FockState, C64) -> Option<(FockState, C64)>,
    {
        Self::from_map(self.statistics, self.terms.iter().filter_map(|(k, a)| f(k, *a)))
    }

    pub fn apply_creation(&self, mode: ModeIndex) -> PureState {
        apply_creation(self, mode)
    }

    /// `|<a|b>|` after normalizing both; equality modulo global phase.
    pub fn overlap_modulus(&self, other: &PureState) -> f64 {
        let na = self.norm_sqr().sqrt();
        let nb = other.norm_sqr().sqrt();
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        inner_product(self, other).norm() / (na * nb)
    }

    /// Line-oriented text form: `re im : port.label^n ...` per term, with a
    /// leading `# boson` / `# fermion` line.
    pub fn to_text(&self) -> String {
        let mut s = match self.statistics {
            Statistics::Boson => "# boson\n".to_string(),
            Statistics::Fermion => "# fermion\n".to_string(),
        };
        for (f, a) in &self.terms {
            s.push_str(&format!("{:.17e} {:.17e} : {}\n", a.re, a.im, f.format_modes()));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<PureState, FockError> {
        let mut stats = Statistics::Boson;
        let mut terms = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                match rest.trim() {
                    "boson" => stats = Statistics::Boson,
                    "fermion" => stats = Statistics::Fermion,
                    _ => {}
                }
                continue;
            }
            let (amp, modes) =
                line.split_once(':').ok_or_else(|| FockError::Parse(format!("missing ':' in '{line}'")))?;
            let nums: Vec<f64> = amp
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| FockError::Parse(e.to_string())))
                .collect::<Result<_, _>>()?;
            if nums.len() != 2 {
                return Err(FockError::Parse(format!("expected 're im' in '{line}'")));
            }
            let mut occ = Vec::new();
            for tok in modes.split_whitespace() {
                let (mode, n) = tok.split_once('^').unwrap_or((tok, "1"));
                let (port, label) =
                    mode.split_once('.').ok_or_else(|| FockError::Parse(format!("bad mode '{tok}'")))?;
                let port: u16 = port.parse().map_err(|_| FockError::Parse(format!("bad port in '{tok}'")))?;
                if port == 0 {
                    return Err(FockError::Parse("port 0".into()));
                }
                let n: u32 = n.parse().map_err(|_| FockError::Parse(format!("bad count in '{tok}'")))?;
                occ.push((ModeIndex::new(port, label.parse()?), n));
            }
            terms.push((FockState::from_occupations(stats, occ)?, C64::new(nums[0], nums[1])));
        }
        PureState::from_terms(stats, terms)
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(k, a)| format!("({:.6}{:+.6}i){}", a.re, a.im, k)).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Applies `a^dagger_mode` to every term.
pub fn apply_creation(state: &PureState, mode: ModeIndex) -> PureState {
    PureState::from_map(
        state.statistics,
        state.terms.iter().filter_map(|(f, a)| f.create(mode).map(|(g, c)| (g, a * c))),
    )
}

/// `<a|b>`, conjugate-linear in `a`. Terms of different statistics never
/// overlap, so mismatched tags give zero unless both sides are vacuum.
pub fn inner_product(a: &PureState, b: &PureState) -> C64 {
    let (small, large, conj_small) = if a.terms.len() <= b.terms.len() { (a, b, true) } else { (b, a, false) };
    let mut acc = C64::new(0.0, 0.0);
    for (f, x) in &small.terms {
        let key = if f.statistics == large.statistics || !f.is_vacuum() {
            f.clone()
        } else {
            FockState::vacuum(large.statistics)
        };
        let y = large.amplitude(&key);
        acc += if conj_small { x.conj() * y } else { y.conj() * x };
    }
    acc
}

/// Product state of two states living on disjoint modes.
pub fn tensor(a: &PureState, b: &PureState) -> Result<PureState, FockError> {
    if a.statistics != b.statistics {
        return Err(FockError::MixedStatistics);
    }
    let stats = a.statistics;
    let mut out = Vec::with_capacity(a.terms.len() * b.terms.len());
    for (fa, xa) in &a.terms {
        for (fb, xb) in &b.terms {
            if let Some((m, _)) = fa.modes.iter().find(|(m, _)| fb.occupation(*m) > 0) {
                return Err(FockError::OverlappingModes(*m));
            }
            let mut sign = 1.0;
            if stats == Statistics::Fermion {
                let inversions: usize =
                    fa.modes.iter().map(|(x, _)| fb.modes.iter().filter(|(y, _)| y < x).count()).sum();
                if inversions % 2 == 1 {
                    sign = -1.0;
                }
            }
            let joined = FockState::from_occupations(stats, fa.modes.iter().chain(fb.modes.iter()).copied())?;
            out.push((joined, xa * xb * sign));
        }
    }
    Ok(PureState::from_map(stats, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(p: u16, l: Label) -> ModeIndex {
        ModeIndex::new(p, l)
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn creation_on_vacuum() {
        let s = PureState::vacuum(Statistics::Boson).apply_creation(m(1, Label::Plus));
        assert_eq!(s.len(), 1);
        let f = FockState::from_modes(Statistics::Boson, [m(1, Label::Plus)]).unwrap();
        assert!((s.amplitude(&f) - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn boson_ladder_factor() {
        let s =
            PureState::vacuum(Statistics::Boson).apply_creation(m(1, Label::Plus)).apply_creation(m(1, Label::Plus));
        let f = FockState::from_occupations(Statistics::Boson, [(m(1, Label::Plus), 2)]).unwrap();
        assert!((s.amplitude(&f) - c(2f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn pauli_exclusion_gives_zero_vector() {
        let s =
            PureState::vacuum(Statistics::Fermion).apply_creation(m(1, Label::Plus)).apply_creation(m(1, Label::Plus));
        assert!(s.is_zero());
        assert!(!PureState::vacuum(Statistics::Fermion).is_zero());
    }

    #[test]
    fn fermion_sign_counts_preceding_modes() {
        let vac = PureState::vacuum(Statistics::Fermion);
        let ab = vac.apply_creation(m(2, Label::None)).apply_creation(m(1, Label::None));
        let ba = vac.apply_creation(m(1, Label::None)).apply_creation(m(2, Label::None));
        let f = FockState::from_modes(Statistics::Fermion, [m(1, Label::None), m(2, Label::None)]).unwrap();
        assert!((ab.amplitude(&f) - c(1.0)).norm() < 1e-15);
        assert!((ba.amplitude(&f) - c(-1.0)).norm() < 1e-15);
    }

    #[test]
    fn vacuum_inner_product() {
        let v = PureState::vacuum(Statistics::Boson);
        assert!((inner_product(&v, &v) - c(1.0)).norm() < 1e-15);
        let a = v.apply_creation(m(1, Label::H));
        let b = v.apply_creation(m(1, Label::V));
        assert!(inner_product(&a, &b).norm() < 1e-15);
    }

    #[test]
    fn tensor_basics() {
        let v = PureState::vacuum(Statistics::Boson);
        assert_eq!(tensor(&v, &v).unwrap(), v);
        let h1 = v.apply_creation(m(1, Label::H));
        let v2 = v.apply_creation(m(2, Label::V));
        let t = tensor(&h1, &v2).unwrap();
        let f = FockState::from_modes(Statistics::Boson, [m(1, Label::H), m(2, Label::V)]).unwrap();
        assert!((t.amplitude(&f) - c(1.0)).norm() < 1e-15);
        assert!(matches!(tensor(&h1, &h1), Err(FockError::OverlappingModes(_))));
    }

    #[test]
    fn tensor_of_diagonal_photons_is_uniform() {
        let v = PureState::vacuum(Statistics::Boson);
        let r = c(0.5f64.sqrt());
        let p1 = v.apply_creation(m(1, Label::H)).scale(r).add(&v.apply_creation(m(1, Label::V)).scale(r)).unwrap();
        let p2 = v.apply_creation(m(2, Label::H)).scale(r).add(&v.apply_creation(m(2, Label::V)).scale(r)).unwrap();
        let t = tensor(&p1, &p2).unwrap();
        assert_eq!(t.len(), 4);
        for (_, a) in t.terms() {
            assert!((a - c(0.5)).norm() < 1e-15);
        }
        assert!(t.is_normalized());
    }

    #[test]
    fn fermion_tensor_sign_from_interleaving() {
        let v = PureState::vacuum(Statistics::Fermion);
        let a = v.apply_creation(m(2, Label::None));
        let b = v.apply_creation(m(1, Label::None));
        let t = tensor(&a, &b).unwrap();
        // a2^dag a1^dag |0> = - a1^dag a2^dag |0>
        assert!((t.terms()[0].1 - c(-1.0)).norm() < 1e-15);
    }

    #[test]
    fn mixed_particle_number_rejected() {
        let f1 = FockState::vacuum(Statistics::Boson);
        let f2 = FockState::from_modes(Statistics::Boson, [m(1, Label::H)]).unwrap();
        let r = PureState::from_terms(Statistics::Boson, [(f1, c(1.0)), (f2, c(1.0))]);
        assert!(matches!(r, Err(FockError::MixedParticleNumber(0, 1))));
    }

    #[test]
    fn text_roundtrip() {
        let v = PureState::vacuum(Statistics::Fermion);
        let s = v.apply_creation(m(3, Label::V)).apply_creation(m(1, Label::Plus)).scale(C64::new(0.25, -0.5));
        let back = PureState::from_text(&s.to_text()).unwrap();
        assert_eq!(back, s);
        let vac_back = PureState::from_text(&PureState::vacuum(Statistics::Boson).to_text()).unwrap();
        assert_eq!(vac_back, PureState::vacuum(Statistics::Boson));
    }

    #[test]
    fn pruning_drops_cancelled_terms() {
        let v = PureState::vacuum(Statistics::Boson);
        let a = v.apply_creation(m(1, Label::H));
        let s = a.add(&a.scale(c(-1.0))).unwrap();
        assert!(s.is_zero());
    }
}
