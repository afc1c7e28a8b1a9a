//! Single-photon pulse shapes from adiabatically driven atom-cavity
//! sources, and the fidelity of entanglement heralded by time-resolved
//! two-photon coincidences between two non-identical sources.
//!
//! Times are in units of `1/kappa_2` of the reference cavity.

use num_complex::Complex64 as C64;
use thiserror::Error;

/// Absolute tolerance of the pulse-shape quadrature.
pub const QUAD_TOL: f64 = 1e-8;
const MAX_DEPTH: u32 = 48;
/// Panels for the composite rule before adaptive refinement.
const PANELS: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PulseError {
    #[error("cavity decay rate must be positive, got {0}")]
    Kappa(f64),
    #[error("coupling strength must be positive, got {0}")]
    Coupling(f64),
    #[error("Rabi envelope must be non-negative")]
    NegativeRabi,
    #[error("sample grid needs increasing times and matching values")]
    Samples,
    #[error("window [{0}, {1}] is empty")]
    Window(f64, f64),
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson over `PANELS` equal panels with Richardson correction.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / PANELS as f64;
    let panel_tol = tol / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            refine(&f, x0, x1, f0, fm, f1, simpson(f0, fm, f1, h), panel_tol, MAX_DEPTH)
        })
        .sum()
}

/// Rabi-frequency envelope `Omega(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Driving {
    Off,
    /// `g sqrt(peak_ratio) exp(-(t - center)^2 / (2 width^2))`, so that
    /// `max Omega^2 / g^2 = peak_ratio`.
    Gaussian {
        center: f64,
        width: f64,
        peak_ratio: f64,
    },
    /// Piecewise linear through `(t, Omega)` samples, zero outside.
    Sampled {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PulseParams {
    pub kappa: f64,
    pub g: f64,
    pub driving: Driving,
}

impl PulseParams {
    pub fn new(kappa: f64, g: f64, driving: Driving) -> Result<Self, PulseError> {
        if !(kappa > 0.0) {
            return Err(PulseError::Kappa(kappa));
        }
        if !(g > 0.0) {
            return Err(PulseError::Coupling(g));
        }
        match &driving {
            Driving::Gaussian { peak_ratio, .. } if *peak_ratio < 0.0 => return Err(PulseError::NegativeRabi),
            Driving::Sampled { times, values } => {
                if times.len() != values.len() || times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(PulseError::Samples);
                }
                if values.iter().any(|v| *v < 0.0) {
                    return Err(PulseError::NegativeRabi);
                }
            }
            _ => {}
        }
        Ok(PulseParams { kappa, g, driving })
    }

    /// Gaussian drive of duration `tau` centred at `tau/2`, width
    /// `sqrt 2 tau / 10`, peak `Omega^2/g^2 = 9`.
    pub fn standard(kappa: f64, tau: f64) -> Self {
        let driving = Driving::Gaussian { center: tau / 2.0, width: 2f64.sqrt() * tau / 10.0, peak_ratio: 9.0 };
        PulseParams::new(kappa, 1.0, driving).expect("positive parameters")
    }

    pub fn rabi(&self, t: f64) -> f64 {
        match &self.driving {
            Driving::Off => 0.0,
            Driving::Gaussian { center, width, peak_ratio } => {
                let x = (t - center) / width;
                self.g * peak_ratio.sqrt() * (-0.5 * x * x).exp()
            }
            Driving::Sampled { times, values } => {
                let n = times.len();
                if t < times[0] || t > times[n - 1] {
                    return 0.0;
                }
                let k = times.partition_point(|&x| x <= t).clamp(1, n - 1);
                let (t0, t1) = (times[k - 1], times[k]);
                let s = (t - t0) / (t1 - t0);
                values[k - 1] * (1.0 - s) + values[k] * s
            }
        }
    }

    pub fn sin_theta(&self, t: f64) -> f64 {
        let o = self.rabi(t);
        o / (o * o + self.g * self.g).sqrt()
    }
}

/// `f(t) = sqrt(kappa) sin(theta) exp(-(kappa/2) int_0^t sin^2(theta))`.
pub fn pulse_shape(p: &PulseParams, t: f64) -> f64 {
    if t < 0.0 {
        return 0.0;
    }
    let s = p.sin_theta(t);
    if s == 0.0 {
        return 0.0;
    }
    let acc = integrate(|x| p.sin_theta(x).powi(2), 0.0, t, QUAD_TOL * 1e-2);
    p.kappa.sqrt() * s * (-0.5 * p.kappa * acc).exp()
}

/// Pulse shape with the cumulative integral tabulated on a uniform grid,
/// for repeated evaluation. Zero outside `[0, t_max]`.
#[derive(Debug, Clone)]
pub struct Pulse {
    params: PulseParams,
    step: f64,
    t_max: f64,
    cumulative: Vec<f64>,
}

impl Pulse {
    pub fn new(params: PulseParams, t_max: f64) -> Self {
        let knots = ((t_max / 0.25).ceil() as usize).max(1);
        let step = t_max / knots as f64;
        let mut cumulative = Vec::with_capacity(knots + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for k in 0..knots {
            let a = k as f64 * step;
            acc += integrate(|x| params.sin_theta(x).powi(2), a, a + step, 1e-13);
            cumulative.push(acc);
        }
        Pulse { params, step, t_max, cumulative }
    }

    /// Standard drive of duration `tau`, supported on `[0, 3 tau]`.
    pub fn standard(kappa: f64, tau: f64) -> Self {
        Pulse::new(PulseParams::standard(kappa, tau), full_window(tau).1)
    }

    pub fn params(&self) -> &PulseParams {
        &self.params
    }

    pub fn support(&self) -> (f64, f64) {
        (0.0, self.t_max)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if !(0.0..=self.t_max).contains(&t) {
            return 0.0;
        }
        let p = &self.params;
        let s = p.sin_theta(t);
        if s == 0.0 {
            return 0.0;
        }
        let k = ((t / self.step) as usize).min(self.cumulative.len() - 1);
        let t0 = k as f64 * self.step;
        let acc = self.cumulative[k] + integrate(|x| p.sin_theta(x).powi(2), t0, t, 1e-13);
        p.kappa.sqrt() * s * (-0.5 * p.kappa * acc).exp()
    }

    /// `int f^2` over the support: the emission probability.
    pub fn emitted(&self) -> f64 {
        integrate(|t| self.eval(t).powi(2), 0.0, self.t_max, QUAD_TOL)
    }
}

/// Detector window for the full pulse of duration `tau`.
pub fn full_window(tau: f64) -> (f64, f64) {
    (0.0, 3.0 * tau)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeFidelity {
    Defined(f64),
    /// Neither ordering of the two photons can produce this coincidence.
    NoDetection,
}

impl TimeFidelity {
    pub fn value(self) -> Option<f64> {
        match self {
            TimeFidelity::Defined(v) => Some(v),
            TimeFidelity::NoDetection => None,
        }
    }
}

/// Fidelity from complex pulse amplitudes `f_i(t_j)`.
pub fn fidelity_from_amplitudes(f1_t3: C64, f1_t4: C64, f2_t3: C64, f2_t4: C64) -> TimeFidelity {
    let x = f1_t3 * f2_t4;
    let y = f1_t4 * f2_t3;
    let den = 2.0 * (x.norm_sqr() + y.norm_sqr());
    if den == 0.0 {
        return TimeFidelity::NoDetection;
    }
    TimeFidelity::Defined((x + y).norm_sqr() / den)
}

/// Fidelity of the heralded singlet for detections at `t3` and `t4`.
pub fn fidelity_t(f1: &Pulse, f2: &Pulse, t3: f64, t4: f64) -> TimeFidelity {
    let r = |v: f64| C64::new(v, 0.0);
    fidelity_from_amplitudes(r(f1.eval(t3)), r(f1.eval(t4)), r(f2.eval(t3)), r(f2.eval(t4)))
}

/// Fidelity averaged over all coincidences with detection in `[a, b]`.
pub fn average_fidelity(f1: &Pulse, f2: &Pulse, a: f64, b: f64) -> Result<f64, PulseError> {
    if !(a < b) {
        return Err(PulseError::Window(a, b));
    }
    let tol = QUAD_TOL;
    let cross = integrate(|t| f1.eval(t) * f2.eval(t), a, b, tol);
    let n1 = integrate(|t| f1.eval(t).powi(2), a, b, tol);
    let n2 = integrate(|t| f2.eval(t).powi(2), a, b, tol);
    if n1 == 0.0 || n2 == 0.0 {
        return Ok(1.0);
    }
    Ok(0.5 * (1.0 + cross * cross / (n1 * n2)))
}

/// Density of one cross-polarized coincidence at `(t3, t4)` after a
/// 50:50 beamsplitter, `(f1(t3)^2 f2(t4)^2 + f1(t4)^2 f2(t3)^2) / 4`.
/// For fully emitted photons it integrates to 1/2.
pub fn joint_density(f1: &Pulse, f2: &Pulse, t3: f64, t4: f64) -> f64 {
    let (a, b) = (f1.eval(t3) * f2.eval(t4), f1.eval(t4) * f2.eval(t3));
    0.25 * (a * a + b * b)
}

/// Overlap of the pulse with itself shifted by `t_i - t_j`, normalized to
/// the unshifted norm; the pulse is taken as zero outside `[0, 3 tau]`.
pub fn mode_overlap(p: &PulseParams, t_i: f64, t_j: f64, tau: f64) -> f64 {
    let (lo, hi) = full_window(tau);
    let pulse = Pulse::new(p.clone(), hi);
    let d = (t_i - t_j).abs();
    let norm = integrate(|t| pulse.eval(t).powi(2), lo, hi, QUAD_TOL);
    if norm == 0.0 || d >= hi - lo {
        return 0.0;
    }
    integrate(|t| pulse.eval(t) * pulse.eval(t + d), lo, hi - d, QUAD_TOL) / norm
}
