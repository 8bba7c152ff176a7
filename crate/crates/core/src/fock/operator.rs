use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{ensure_finite, Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense operator on a truncated Fock space with a human-readable construction label.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    matrix: DMatrix<Complex64>,
    label: String,
}

impl OperatorMatrix {
    pub fn new(matrix: DMatrix<Complex64>, label: impl Into<String>) -> Self {
        Self {
            matrix,
            label: label.into(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.matrix.adjoint(), format!("({})^dag", self.label))
    }

    pub fn compose(&self, rhs: &OperatorMatrix) -> Self {
        Self::new(
            &self.matrix * &rhs.matrix,
            format!("{} * {}", self.label, rhs.label),
        )
    }

    /// `max |(U^dag U - I)_ij|` over the leading `block x block` corner.
    pub fn unitarity_defect(&self, block: usize) -> f64 {
        let p = self.matrix.adjoint() * &self.matrix;
        let mut worst: f64 = 0.0;
        for i in 0..block {
            for j in 0..block {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((p[(i, j)] - target).norm());
            }
        }
        worst
    }
}

/// Ladder operators and quadratures `q = (a^dag + a)/sqrt2`, `p = (a - a^dag)/(i sqrt2)`.
#[derive(Debug, Clone)]
pub struct LadderSet {
    pub a: OperatorMatrix,
    pub a_dag: OperatorMatrix,
    pub q: OperatorMatrix,
    pub p: OperatorMatrix,
}

pub fn annihilation(cutoff: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::from_element(cutoff, cutoff, ZERO);
    for n in 1..cutoff {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn ladder_and_quadratures(cutoff: usize) -> Result<LadderSet> {
    if cutoff < 2 {
        return Err(Error::InvalidDimension(format!("cutoff {cutoff} < 2")));
    }
    let a = annihilation(cutoff);
    let a_dag = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = (&a + &a_dag) * Complex64::new(s, 0.0);
    let p = (&a - &a_dag) * Complex64::new(0.0, -s);
    Ok(LadderSet {
        a: OperatorMatrix::new(a, "a"),
        a_dag: OperatorMatrix::new(a_dag, "a^dag"),
        q: OperatorMatrix::new(q, "q"),
        p: OperatorMatrix::new(p, "p"),
    })
}

/// Truncated `q` as a real symmetric tridiagonal matrix.
pub fn position_real(cutoff: usize) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(cutoff, cutoff);
    for n in 1..cutoff {
        let v = (n as f64 / 2.0).sqrt();
        q[(n - 1, n)] = v;
        q[(n, n - 1)] = v;
    }
    q
}

/// Truncations of `q^2` and `p^2` (both real symmetric pentadiagonal).
pub fn quadrature_squares_real(cutoff: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut q2 = DMatrix::zeros(cutoff, cutoff);
    let mut p2 = DMatrix::zeros(cutoff, cutoff);
    for n in 0..cutoff {
        let diag = n as f64 + 0.5;
        q2[(n, n)] = diag;
        p2[(n, n)] = diag;
        if n + 2 < cutoff {
            let off = 0.5 * (((n + 1) * (n + 2)) as f64).sqrt();
            q2[(n, n + 2)] = off;
            q2[(n + 2, n)] = off;
            p2[(n, n + 2)] = -off;
            p2[(n + 2, n)] = -off;
        }
    }
    (q2, p2)
}

/// `f(M)` for a real symmetric matrix via its eigendecomposition.
pub fn symmetric_function(m: DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m);
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let w = f(lambda);
        scaled.column_mut(j).scale_mut(w);
    }
    scaled * v.transpose()
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Gaussian unitaries on one or two modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaussianKind {
    /// `exp(alpha a^dag - alpha* a)`; shifts `q` by `sqrt2 Re(alpha)`.
    Displacement(Complex64),
    /// `exp((z* a^2 - z a^dag^2)/2)` with `z = r e^{i theta}`; `r > 0` squeezes `q`.
    Squeeze { r: f64, theta: f64 },
    /// `exp(-i theta a^dag a)`.
    Rotate(f64),
    /// `exp(theta (a1^dag a2 e^{i phi} - a1 a2^dag e^{-i phi}))`.
    BeamSplitter { theta: f64, phi: f64 },
    /// `exp(i g q1 q2)`.
    ControlledZ(f64),
}

impl GaussianKind {
    pub fn modes(&self) -> usize {
        match self {
            GaussianKind::BeamSplitter { .. } | GaussianKind::ControlledZ(_) => 2,
            _ => 1,
        }
    }

    fn check_finite(&self) -> Result<()> {
        match *self {
            GaussianKind::Displacement(a) => ensure_finite("displacement", &[a.re, a.im]),
            GaussianKind::Squeeze { r, theta } => ensure_finite("squeeze", &[r, theta]),
            GaussianKind::Rotate(t) => ensure_finite("rotation", &[t]),
            GaussianKind::BeamSplitter { theta, phi } => {
                ensure_finite("beam splitter", &[theta, phi])
            }
            GaussianKind::ControlledZ(g) => ensure_finite("controlled-Z", &[g]),
        }
    }

    fn label(&self) -> String {
        match self {
            GaussianKind::Displacement(a) => format!("D({a})"),
            GaussianKind::Squeeze { r, theta } => format!("S({r},{theta})"),
            GaussianKind::Rotate(t) => format!("R({t})"),
            GaussianKind::BeamSplitter { theta, phi } => format!("B({theta},{phi})"),
            GaussianKind::ControlledZ(g) => format!("CZ({g})"),
        }
    }
}

/// Dense generator of a Gaussian unitary (anti-Hermitian).
pub fn gaussian_generator(kind: GaussianKind, cutoff: usize) -> Result<DMatrix<Complex64>> {
    kind.check_finite()?;
    let l = ladder_and_quadratures(cutoff)?;
    let a = l.a.matrix();
    let ad = l.a_dag.matrix();
    let gen = match kind {
        GaussianKind::Displacement(alpha) => ad * alpha - a * alpha.conj(),
        GaussianKind::Squeeze { r, theta } => {
            let z = Complex64::from_polar(r, theta);
            ((a * a) * z.conj() - (ad * ad) * z) * Complex64::new(0.5, 0.0)
        }
        GaussianKind::Rotate(theta) => (ad * a) * Complex64::new(0.0, -theta),
        GaussianKind::BeamSplitter { theta, phi } => {
            let e = Complex64::from_polar(1.0, phi);
            (ad.kronecker(a) * e - a.kronecker(ad) * e.conj()) * Complex64::new(theta, 0.0)
        }
        GaussianKind::ControlledZ(g) => {
            let q = l.q.matrix();
            q.kronecker(q) * Complex64::new(0.0, g)
        }
    };
    Ok(gen)
}

/// Gaussian unitary as a dense matrix (`cutoff^2` square for two-mode kinds).
///
/// Rotations are diagonal and built exactly; everything else is the Pade
/// scaling-and-squaring exponential of the truncated generator. Two-mode kinds
/// are meant for small cutoffs; see [`super::two_mode`] for the production path.
pub fn build_gaussian_unitary(kind: GaussianKind, cutoff: usize) -> Result<OperatorMatrix> {
    if cutoff < 2 {
        return Err(Error::InvalidDimension(format!("cutoff {cutoff} < 2")));
    }
    kind.check_finite()?;
    let m = match kind {
        GaussianKind::Rotate(theta) => rotation(theta, cutoff),
        _ => gaussian_generator(kind, cutoff)?.exp(),
    };
    Ok(OperatorMatrix::new(m, kind.label()))
}

pub fn rotation(theta: f64, cutoff: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_element(cutoff, cutoff, ZERO);
    for n in 0..cutoff {
        m[(n, n)] = Complex64::from_polar(1.0, -theta * n as f64);
    }
    m
}
