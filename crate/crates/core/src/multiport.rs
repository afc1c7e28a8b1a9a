//! Transfer matrices for beamsplitters and multiports, plus a triangular
//! (Reck-style) decomposition into two-port beamsplitter layers.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Frobenius tolerance on `U^dagger U - I`.
pub const UNITARY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultiportError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is not unitary (||U^dag U - I||_F = {0:e})")]
    NotUnitary(f64),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Square unitary transfer matrix. `entry(j, i)` is the amplitude for
/// input port `i` to reach output port `j` (both 0-based here).
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    m: DMatrix<C64>,
}

impl Unitary {
    pub fn new(m: DMatrix<C64>) -> Result<Self, MultiportError> {
        if m.nrows() != m.ncols() {
            return Err(MultiportError::NotSquare(m.nrows(), m.ncols()));
        }
        if m.nrows() == 0 {
            return Err(MultiportError::Domain("dimension must be at least 1".into()));
        }
        let err = unitarity_error(&m);
        if !(err < UNITARY_TOL) {
            return Err(MultiportError::NotUnitary(err));
        }
        Ok(Unitary { m })
    }

    pub fn identity(n: usize) -> Self {
        Unitary { m: DMatrix::identity(n, n) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.m[(row, col)]
    }

    pub fn unitarity_error(&self) -> f64 {
        unitarity_error(&self.m)
    }

    /// `self * other`: `other` acts first.
    pub fn compose(&self, other: &Unitary) -> Unitary {
        Unitary { m: &self.m * &other.m }
    }

    pub fn transpose(&self) -> Unitary {
        Unitary { m: self.m.transpose() }
    }

    pub fn adjoint(&self) -> Unitary {
        Unitary { m: self.m.adjoint() }
    }

    /// One line per row, `re,im` pairs separated by commas.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for r in 0..self.dim() {
            let row: Vec<String> =
                (0..self.dim()).map(|c| format!("{:.17e},{:.17e}", self.m[(r, c)].re, self.m[(r, c)].im)).collect();
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, MultiportError> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|e| MultiportError::Parse(e.to_string())))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<_, _>>()?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != 2 * n) {
            return Err(MultiportError::Parse(format!("expected {} values per row", 2 * n)));
        }
        let m = DMatrix::from_fn(n, n, |r, c| C64::new(rows[r][2 * c], rows[r][2 * c + 1]));
        Unitary::new(m)
    }
}

pub fn unitarity_error(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    (m.adjoint() * m - DMatrix::<C64>::identity(n, n)).norm()
}

/// Two-port beamsplitter `[[sqrt T, e^{i phi} sqrt R], [sqrt R, -e^{i phi} sqrt T]]`.
pub fn beamsplitter(reflectivity: f64, phi: f64) -> Result<Unitary, MultiportError> {
    if !(0.0..=1.0).contains(&reflectivity) {
        return Err(MultiportError::Domain(format!("reflectivity {reflectivity} outside [0,1]")));
    }
    Ok(Unitary { m: bs_block(reflectivity, phi) })
}

fn bs_block(r: f64, phi: f64) -> DMatrix<C64> {
    let t = (1.0 - r).sqrt();
    let r = r.sqrt();
    let e = C64::from_polar(1.0, phi);
    DMatrix::from_row_slice(2, 2, &[C64::new(t, 0.0), e * r, C64::new(r, 0.0), -e * t])
}

/// Discrete Fourier transform multiport, `U_ji = w^{(j-1)(i-1)} / sqrt N`.
pub fn bell_multiport(n: usize) -> Result<Unitary, MultiportError> {
    if n < 1 {
        return Err(MultiportError::Domain("N must be at least 1".into()));
    }
    let s = 1.0 / (n as f64).sqrt();
    let m = DMatrix::from_fn(n, n, |j, i| {
        // reduce the exponent first so large N keeps full phase accuracy
        let k = (j * i) % n;
        C64::from_polar(s, 2.0 * PI * k as f64 / n as f64)
    });
    Ok(Unitary { m })
}

/// Symmetric 4x4 family; `phi = pi/2` is the four-port Bell multiport.
pub fn symmetric4(phi: f64) -> Unitary {
    let e = C64::from_polar(1.0, phi);
    let o = C64::new(1.0, 0.0);
    let h = C64::new(0.5, 0.0);
    #[rustfmt::skip]
    let v = [
        o,  o,  o,  o,
        o,  e, -o, -e,
        o, -o,  o, -o,
        o, -e, -o,  e,
    ];
    Unitary { m: DMatrix::from_row_slice(4, 4, &v) * h }
}

/// Real symmetric multiport used for parity-type Bell measurements.
pub fn parity_multiport() -> Unitary {
    #[rustfmt::skip]
    let v = [
        1.0,  1.0,  1.0,  1.0,
        1.0,  1.0, -1.0, -1.0,
        1.0, -1.0,  1.0, -1.0,
        1.0, -1.0, -1.0,  1.0,
    ];
    Unitary { m: DMatrix::from_row_slice(4, 4, &v).map(|x| C64::new(0.5 * x, 0.0)) }
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// diagonal of R fixed to positive reals.
pub fn haar_random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Unitary {
    let g = DMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..n {
        let d = r[(c, c)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..n {
            q[(row, c)] *= ph;
        }
    }
    Unitary { m: q }
}

/// Beamsplitter `B(R, phi)` acting on ports `p < q` (0-based).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReckLayer {
    pub p: usize,
    pub q: usize,
    pub reflectivity: f64,
    pub phi: f64,
}

impl ReckLayer {
    pub fn matrix(&self, n: usize) -> DMatrix<C64> {
        let b = bs_block(self.reflectivity, self.phi);
        let mut m = DMatrix::<C64>::identity(n, n);
        let idx = [self.p, self.q];
        for (a, &ra) in idx.iter().enumerate() {
            for (b_, &rb) in idx.iter().enumerate() {
                m[(ra, rb)] = b[(a, b_)];
            }
        }
        m
    }
}

/// Layers in propagation order followed by unit-modulus output phases:
/// `U = diag(output_phases) * B_K * ... * B_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReckDecomposition {
    pub dim: usize,
    pub layers: Vec<ReckLayer>,
    pub output_phases: Vec<C64>,
}

impl ReckDecomposition {
    pub fn recompose(&self) -> DMatrix<C64> {
        let n = self.dim;
        let mut m = DMatrix::<C64>::identity(n, n);
        for layer in &self.layers {
            m = layer.matrix(n) * m;
        }
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.output_phases.clone())) * m
    }

    pub fn max_layers(n: usize) -> usize {
        n * (n.saturating_sub(1)) / 2
    }
}

/// Eliminates the last row first, then the next, multiplying by `B^dagger`
/// on column pairs `(k, n)` until only a diagonal of phases remains.
pub fn reck_decompose(u: &Unitary) -> Result<ReckDecomposition, MultiportError> {
    let err = u.unitarity_error();
    if !(err < UNITARY_TOL) {
        return Err(MultiportError::NotUnitary(err));
    }
    let n = u.dim();
    let mut m = u.m.clone();
    let mut layers = Vec::new();
    for row in (1..n).rev() {
        for k in 0..row {
            let a = m[(row, k)];
            if a.norm() < 1e-15 {
                continue;
            }
            let b = m[(row, row)];
            let na = a.norm_sqr();
            let nb = b.norm_sqr();
            let reflectivity = na / (na + nb);
            let phi = if nb > 0.0 { (b.arg() - a.arg() - PI).rem_euclid(2.0 * PI) } else { 0.0 };
            let layer = ReckLayer { p: k, q: row, reflectivity, phi };
            m = &m * layer.matrix(n).adjoint();
            m[(row, k)] = C64::new(0.0, 0.0);
            layers.push(layer);
        }
    }
    let output_phases = (0..n)
        .map(|i| {
            let d = m[(i, i)];
            d / d.norm()
        })
        .collect();
    Ok(ReckDecomposition { dim: n, layers, output_phases })
}
