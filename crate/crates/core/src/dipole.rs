//! Two distant three-level dipoles, each decaying from `|2>` to `|0>` or
//! `|1>`, watched by two polarization-resolving detectors in the far field.
//!
//! Coordinates: `z` along `r1 - r2`, `x` the quantization axis, lengths in
//! wavelengths so `k0 = 2 pi`. The inner product is `(a, b) = a^* . b`.
//! Two-atom states use the 9-dimensional product basis `|ab>`, index `3a + b`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64 as C64;
use thiserror::Error;

/// Below this `k0 r` dipole-dipole coupling is no longer negligible.
pub const REGIME_K0R: f64 = 50.0 * PI;
/// Offset from `theta = pi/2` used to evaluate the limit point.
pub const LIMIT_OFFSET: f64 = 1e-6;
pub const PHASE_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DipoleError {
    #[error("polarization vector is not transverse to the emission direction ({0:e})")]
    NotTransverse(f64),
    #[error("dipole vector must be unit length, got norm {0}")]
    DipoleNorm(f64),
    #[error("not a density matrix: {0}")]
    NotDensity(String),
}

pub type Vec3 = [C64; 3];

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `(a, b) = sum conj(a_i) b_i`.
pub fn inner(a: &Vec3, b: &Vec3) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn real3(v: [f64; 3]) -> Vec3 {
    v.map(c)
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `(0, 1, i)/sqrt 2`.
pub fn d20() -> Vec3 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [c(0.0), c(s), C64::new(0.0, s)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct DipoleConfig {
    pub r1: [f64; 3],
    pub r2: [f64; 3],
    /// Transition dipoles `D_20`, `D_21`.
    pub dipoles: [Vec3; 2],
    pub gamma: f64,
}

impl DipoleConfig {
    pub fn new(r1: [f64; 3], r2: [f64; 3], dipoles: [Vec3; 2], gamma: f64) -> Result<Self, DipoleError> {
        for d in &dipoles {
            let n = inner(d, d).re.sqrt();
            if (n - 1.0).abs() > 1e-10 {
                return Err(DipoleError::DipoleNorm(n));
            }
        }
        Ok(DipoleConfig { r1, r2, dipoles, gamma })
    }

    /// Atoms `r` wavelengths apart on the `z` axis, `D_21 = D_20^*`, `Gamma = 1`.
    pub fn standard(r: f64) -> Self {
        let d = d20();
        DipoleConfig {
            r1: [0.0, 0.0, 0.5 * r],
            r2: [0.0, 0.0, -0.5 * r],
            dipoles: [d, d.map(|x| x.conj())],
            gamma: 1.0,
        }
    }

    pub fn k0() -> f64 {
        2.0 * PI
    }

    pub fn separation(&self) -> f64 {
        let d = [self.r1[0] - self.r2[0], self.r1[1] - self.r2[1], self.r1[2] - self.r2[2]];
        dot(d, d).sqrt()
    }

    pub fn regime_warning(&self) -> Option<String> {
        let k0r = Self::k0() * self.separation();
        (k0r < REGIME_K0R)
            .then(|| format!("k0 r = {k0r:.3} is below 50 pi; dipole-dipole coupling is neglected but may matter here"))
    }

    fn phase(&self, k: [f64; 3], atom: usize) -> C64 {
        let r = if atom == 0 { self.r1 } else { self.r2 };
        C64::from_polar(1.0, -Self::k0() * dot(k, r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    H,
    V,
    Plus,
    Minus,
}

/// Detector at spherical angles `(theta, phi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    pub theta: f64,
    pub phi: f64,
}

impl DetectorSpec {
    pub fn new(theta: f64, phi: f64) -> Self {
        DetectorSpec { theta, phi }
    }

    /// Along the quantization axis.
    pub fn x_axis() -> Self {
        DetectorSpec { theta: PI / 2.0, phi: 0.0 }
    }

    pub fn direction(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn epsilon(&self, pol: Polarization) -> Vec3 {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        let h = real3([-sp, cp, 0.0]);
        let v = real3([-ct * cp, -ct * sp, st]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let i = C64::new(0.0, 1.0);
        match pol {
            Polarization::H => h,
            Polarization::V => v,
            Polarization::Plus => [0, 1, 2].map(|k| (h[k] + i * v[k]) * s),
            Polarization::Minus => [0, 1, 2].map(|k| (h[k] - i * v[k]) * s),
        }
    }
}

fn idx(a: usize, b: usize) -> usize {
    3 * a + b
}

/// Jump operator for a photon seen in direction `k` with polarization
/// `eps`, on the 9-dimensional two-atom space.
pub fn reset_operator(cfg: &DipoleConfig, k: [f64; 3], eps: &Vec3) -> Result<DMatrix<C64>, DipoleError> {
    let transverse = inner(&real3(k), eps).norm();
    if transverse > 1e-9 {
        return Err(DipoleError::NotTransverse(transverse));
    }
    let pre = (3.0 * cfg.gamma / (8.0 * PI)).sqrt();
    let mut r = DMatrix::zeros(9, 9);
    for j in 0..2 {
        let dj = inner(&cfg.dipoles[j], eps) * pre;
        for other in 0..3 {
            // atom 1 jumps |2> -> |j>, atom 2 spectator
            r[(idx(j, other), idx(2, other))] += dj * cfg.phase(k, 0);
            r[(idx(other, j), idx(other, 2))] += dj * cfg.phase(k, 1);
        }
    }
    Ok(r)
}

/// No-jump evolution over `dt`: each excited atom decays as `e^{-Gamma dt / 2}`.
pub fn conditional_evolution(cfg: &DipoleConfig, dt: f64) -> DMatrix<C64> {
    DMatrix::from_fn(9, 9, |i, j| {
        if i != j {
            return c(0.0);
        }
        let excited = (i / 3 == 2) as i32 + (i % 3 == 2) as i32;
        c((-0.5 * cfg.gamma * dt * excited as f64).exp())
    })
}

/// `N(t1, t2) = (3 / 8 pi) Gamma e^{-Gamma (t1 + t2)}`.
pub fn time_factor(cfg: &DipoleConfig, t1: f64, t2: f64) -> f64 {
    3.0 / (8.0 * PI) * cfg.gamma * (-cfg.gamma * (t1 + t2)).exp()
}

/// One detection: where and in which polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub detector: DetectorSpec,
    pub pol: Polarization,
}

/// Ground-state amplitudes `|ij>` (index `2i + j`) after photon `x` at `t1`
/// and photon `y` at `t2`, starting from amplitude `c22` on `|22>`.
pub fn two_photon_amplitude(cfg: &DipoleConfig, x: Detection, t1: f64, y: Detection, t2: f64, c22: C64) -> [C64; 4] {
    let (kx, ky) = (x.detector.direction(), y.detector.direction());
    let (ex, ey) = (x.detector.epsilon(x.pol), y.detector.epsilon(y.pol));
    let dy = cfg.dipoles.map(|d| inner(&d, &ey));
    let dx = cfg.dipoles.map(|d| inner(&d, &ex));
    let p1 = cfg.phase(ky, 0) * cfg.phase(kx, 1);
    let p2 = cfg.phase(ky, 1) * cfg.phase(kx, 0);
    let n = time_factor(cfg, t1, t2) * c22;
    let mut out = [c(0.0); 4];
    for i in 0..2 {
        for j in 0..2 {
            out[2 * i + j] = n * (dy[i] * dx[j] * p1 + dy[j] * dx[i] * p2);
        }
    }
    out
}

/// `exp(-i k0 (kA - kB).(r1 - r2))`.
pub fn detector_phase(cfg: &DipoleConfig, ka: [f64; 3], kb: [f64; 3]) -> C64 {
    let dk = [ka[0] - kb[0], ka[1] - kb[1], ka[2] - kb[2]];
    let dr = [cfg.r1[0] - cfg.r2[0], cfg.r1[1] - cfg.r2[1], cfg.r1[2] - cfg.r2[2]];
    C64::from_polar(1.0, -DipoleConfig::k0() * dot(dk, dr))
}

/// The half-fringe placement that leaves the atoms in a singlet.
pub fn detector_condition(cfg: &DipoleConfig, ka: [f64; 3], kb: [f64; 3]) -> bool {
    (detector_phase(cfg, ka, kb) + c(1.0)).norm() <= PHASE_TOL
}

/// Polar angles in `[pi/2 - half_width, pi/2 + half_width]` at which a
/// detector satisfies the condition against one on the `x` axis, for
/// separation `r` along `z`: `r cos theta = m + 1/2`.
pub fn condition_angles(r: f64, half_width: f64) -> Vec<f64> {
    let lim = r * half_width.sin();
    let m_lo = (-lim - 0.5).ceil() as i64;
    let m_hi = (lim - 0.5).floor() as i64;
    let mut out: Vec<f64> = (m_lo..=m_hi).map(|m| ((m as f64 + 0.5) / r).acos()).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// One point of a correlation scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub theta: f64,
    pub phi: f64,
    pub circular: f64,
    pub linear: f64,
}

/// Correlations with Alice at the condition angles for separation
/// `r_design` (Bob on the `x` axis) while the atoms sit `r_actual` apart.
pub fn correlation_scan(r_design: f64, r_actual: f64, phi: f64, half_width: f64) -> Vec<ScanPoint> {
    let cfg = DipoleConfig::standard(r_actual);
    let bob = DetectorSpec::x_axis();
    condition_angles(r_design, half_width)
        .into_iter()
        .map(|theta| {
            let a = DetectorSpec::new(theta, phi);
            ScanPoint {
                theta,
                phi,
                circular: correlation(&cfg, a, bob, CorrelationBasis::Circular),
                linear: correlation(&cfg, a, bob, CorrelationBasis::Linear),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrelationBasis {
    Circular,
    Linear,
}

impl CorrelationBasis {
    fn pols(self) -> [Polarization; 2] {
        match self {
            CorrelationBasis::Circular => [Polarization::Plus, Polarization::Minus],
            CorrelationBasis::Linear => [Polarization::H, Polarization::V],
        }
    }
}

/// Probability that the two detectors see orthogonal polarizations, from
/// the two-photon amplitudes (Alice first at `t1`, Bob at `t2`).
pub fn correlation_at(
    cfg: &DipoleConfig,
    a: DetectorSpec,
    b: DetectorSpec,
    basis: CorrelationBasis,
    t1: f64,
    t2: f64,
) -> f64 {
    let pols = basis.pols();
    let weight = |pa: Polarization, pb: Polarization| {
        let amp = two_photon_amplitude(
            cfg,
            Detection { detector: a, pol: pa },
            t1,
            Detection { detector: b, pol: pb },
            t2,
            c(1.0),
        );
        amp.iter().map(|z| z.norm_sqr()).sum::<f64>()
    };
    let mut total = 0.0;
    let mut orth = 0.0;
    for pa in pols {
        for pb in pols {
            let w = weight(pa, pb);
            total += w;
            if pa != pb {
                orth += w;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        orth / total
    }
}

pub fn correlation(cfg: &DipoleConfig, a: DetectorSpec, b: DetectorSpec, basis: CorrelationBasis) -> f64 {
    correlation_at(cfg, a, b, basis, 0.0, 0.0)
}

/// Closed forms valid when the detector condition holds, Bob on the `x` axis.
pub fn correlation_closed(theta: f64, phi: f64, basis: CorrelationBasis) -> f64 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let den = 1.0 + (st * cp).powi(2);
    match basis {
        CorrelationBasis::Circular => ((cp + st).powi(2) + (ct * sp).powi(2)) / (2.0 * den),
        CorrelationBasis::Linear => (cp * cp + st * st) / den,
    }
}

/// Closed form at `theta = pi/2 - LIMIT_OFFSET`, `phi = 0`.
pub fn correlation_limit(basis: CorrelationBasis) -> f64 {
    correlation_closed(PI / 2.0 - LIMIT_OFFSET, 0.0, basis)
}

/// Rough probability of catching both photons with small detectors of
/// solid angles `da`, `db` (steradians).
pub fn collection_probability(da: f64, db: f64) -> f64 {
    9.0 / (64.0 * PI * PI) * da * db
}

/// Two-photon polarization density matrix over `hh, hv, vh, vv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitDensity {
    rho: Matrix4<C64>,
}

impl TwoQubitDensity {
    pub fn new(rho: Matrix4<C64>) -> Result<Self, DipoleError> {
        let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(DipoleError::NotDensity(format!("not Hermitian ({herm:e})")));
        }
        let tr = rho.trace();
        if (tr - c(1.0)).norm() > 1e-10 {
            return Err(DipoleError::NotDensity(format!("trace {tr}")));
        }
        let d = TwoQubitDensity { rho };
        let m = d.min_eigenvalue();
        if m < -1e-10 {
            return Err(DipoleError::NotDensity(format!("negative eigenvalue {m:e}")));
        }
        Ok(d)
    }

    pub fn pure(psi: [C64; 4]) -> Result<Self, DipoleError> {
        let v = nalgebra::Vector4::from(psi);
        Self::new(v * v.adjoint())
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.rho
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.rho.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn expectation(&self, e: &Matrix4<C64>) -> f64 {
        (e * self.rho).trace().re
    }
}

fn projector(vs: &[[C64; 4]]) -> Matrix4<C64> {
    vs.iter().fold(Matrix4::zeros(), |acc, v| {
        let v = nalgebra::Vector4::from(*v);
        acc + v * v.adjoint()
    })
}

/// Orthogonal outcomes in the `h/v` basis.
pub fn e1d() -> Matrix4<C64> {
    projector(&[[c(0.0), c(1.0), c(0.0), c(0.0)], [c(0.0), c(0.0), c(1.0), c(0.0)]])
}

/// Orthogonal outcomes in the `(h +- v)/sqrt 2` basis.
pub fn e2d() -> Matrix4<C64> {
    let pm = [c(0.5), c(-0.5), c(0.5), c(-0.5)];
    let mp = [c(0.5), c(0.5), c(-0.5), c(-0.5)];
    projector(&[pm, mp])
}

/// `(|hv> - |vh>)/sqrt 2`.
pub fn singlet() -> [C64; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [c(0.0), c(s), c(-s), c(0.0)]
}

/// Whether `rho` always shows orthogonal polarizations in both bases.
pub fn infer_singlet_check(rho: &TwoQubitDensity) -> bool {
    (rho.expectation(&e1d()) - 1.0).abs() <= 1e-9 && (rho.expectation(&e2d()) - 1.0).abs() <= 1e-9
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingletInference {
    pub rho: TwoQubitDensity,
    /// Width of the feasible set left after both constraints.
    pub slack: f64,
}

/// The state forced by both constraints. The first puts all weight on
/// `hv, vh`: `rho = a|hv><hv| + c|hv><vh| + c^*|vh><hv| + b|vh><vh|` with
/// `a + b = 1`, `|c|^2 <= ab`. The second reads `(1 - 2 Re c)/2 = 1`, so
/// `Re c = -1/2`; then `1/4 + (Im c)^2 <= a(1 - a) <= 1/4` leaves one point.
pub fn infer_singlet_solve() -> Result<SingletInference, DipoleError> {
    let target: f64 = 1.0;
    let re_c = (1.0 - 2.0 * target) / 2.0;
    // a(1 - a) >= (Re c)^2 confines a to [lo, hi]
    let disc = 1.0 - 4.0 * re_c * re_c;
    if disc < -1e-12 {
        return Err(DipoleError::NotDensity("constraints infeasible".into()));
    }
    let half = 0.5 * disc.max(0.0).sqrt();
    let a: f64 = 0.5;
    let im_bound = (a * (1.0 - a) - re_c * re_c).max(0.0).sqrt();
    let mut rho = Matrix4::zeros();
    rho[(1, 1)] = c(a);
    rho[(2, 2)] = c(1.0 - a);
    rho[(1, 2)] = c(re_c);
    rho[(2, 1)] = c(re_c);
    Ok(SingletInference { rho: TwoQubitDensity::new(rho)?, slack: 2.0 * half + im_bound })
}
