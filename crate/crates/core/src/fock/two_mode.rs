use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::operator::{position_real, GaussianKind};
use super::state::{FockState, LEAKAGE_TOLERANCE};
use crate::error::{ensure_finite, Error, Result};

/// Beam splitter prepared as exact exponentials of each total-photon-number block.
///
/// The truncated generator never couples sectors, so exponentiating the
/// `(N+1)`-dimensional (or smaller, near the cutoff) blocks reproduces the dense
/// `D^2 x D^2` exponential exactly at a fraction of the cost.
#[derive(Debug, Clone)]
pub struct BeamSplitter {
    cutoff: usize,
    // blocks[N] acts on (k, N-k) for k in lo(N)..=hi(N)
    blocks: Vec<DMatrix<Complex64>>,
}

fn sector_range(total: usize, cutoff: usize) -> (usize, usize) {
    let lo = total.saturating_sub(cutoff - 1);
    let hi = total.min(cutoff - 1);
    (lo, hi)
}

impl BeamSplitter {
    pub fn new(theta: f64, phi: f64, cutoff: usize) -> Result<Self> {
        ensure_finite("beam splitter", &[theta, phi])?;
        if cutoff < 2 {
            return Err(Error::InvalidDimension(format!("cutoff {cutoff} < 2")));
        }
        let e = Complex64::from_polar(1.0, phi);
        let mut blocks = Vec::with_capacity(2 * cutoff - 1);
        for total in 0..(2 * cutoff - 1) {
            let (lo, hi) = sector_range(total, cutoff);
            let size = hi - lo + 1;
            let mut g = DMatrix::from_element(size, size, Complex64::new(0.0, 0.0));
            for j in 0..size {
                let k = lo + j;
                let rest = total - k;
                // theta e^{i phi} a1^dag a2 : |k, rest> -> |k+1, rest-1>
                if k + 1 <= hi && rest >= 1 {
                    let amp = ((k + 1) as f64 * rest as f64).sqrt();
                    g[(j + 1, j)] += e * theta * amp;
                }
                // -theta e^{-i phi} a1 a2^dag : |k, rest> -> |k-1, rest+1>
                if k >= 1 && k - 1 >= lo {
                    let amp = (k as f64 * (rest + 1) as f64).sqrt();
                    g[(j - 1, j)] -= e.conj() * theta * amp;
                }
            }
            blocks.push(g.exp());
        }
        Ok(Self { cutoff, blocks })
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        check_two_mode(state, self.cutoff)?;
        let d = self.cutoff;
        let src = state.amplitudes();
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        let mut buf = Vec::with_capacity(d);
        for (total, block) in self.blocks.iter().enumerate() {
            let (lo, hi) = sector_range(total, d);
            buf.clear();
            buf.extend((lo..=hi).map(|k| src[k * d + (total - k)]));
            for (i, k) in (lo..=hi).enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, v) in buf.iter().enumerate() {
                    acc += block[(i, j)] * v;
                }
                out[k * d + (total - k)] = acc;
            }
        }
        FockState::new(out, d, 2)
    }
}

/// `exp(i g q1 q2)` through the eigendecomposition of the truncated `q`.
///
/// With `q = V diag(lambda) V^T`, the gate acts on the amplitude matrix `C` as
/// `V ((V^T C V) o E) V^T` where `E_jk = exp(i g lambda_j lambda_k)`.
#[derive(Debug, Clone)]
pub struct ControlledZ {
    cutoff: usize,
    v: DMatrix<Complex64>,
    vt: DMatrix<Complex64>,
    phases: DMatrix<Complex64>,
}

impl ControlledZ {
    pub fn new(g: f64, cutoff: usize) -> Result<Self> {
        ensure_finite("controlled-Z", &[g])?;
        if cutoff < 2 {
            return Err(Error::InvalidDimension(format!("cutoff {cutoff} < 2")));
        }
        let eig = SymmetricEigen::new(position_real(cutoff));
        let lambda = eig.eigenvalues;
        let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
        let vt = v.transpose();
        let phases = DMatrix::from_fn(cutoff, cutoff, |j, k| {
            Complex64::from_polar(1.0, g * lambda[j] * lambda[k])
        });
        Ok(Self {
            cutoff,
            v,
            vt,
            phases,
        })
    }

    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        check_two_mode(state, self.cutoff)?;
        let c = state.to_matrix()?;
        let mut inner = &self.vt * c * &self.v;
        inner.component_mul_assign(&self.phases);
        FockState::from_matrix(&(&self.v * inner * &self.vt))
    }
}

/// `exp(i g q1 q2)` by a scaled Taylor series of the generator's action.
///
/// Independent of [`ControlledZ`]: only products with the tridiagonal `q` are used.
pub fn controlled_z_taylor(state: &FockState, g: f64) -> Result<FockState> {
    ensure_finite("controlled-Z", &[g])?;
    let d = state.cutoff();
    check_two_mode(state, d)?;
    let q = position_real(d).map(|x| Complex64::new(x, 0.0));
    let qnorm = (2.0 * d as f64).sqrt();
    let steps = ((g.abs() * qnorm * qnorm).ceil() as usize).max(1);
    let h = Complex64::new(0.0, g / steps as f64);
    let mut c = state.to_matrix()?;
    for _ in 0..steps {
        let mut term = c.clone();
        let mut acc = c.clone();
        for k in 1..80 {
            term = (&q * &term * &q) * (h / k as f64);
            acc += &term;
            if term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-17 {
                break;
            }
        }
        c = acc;
    }
    FockState::from_matrix(&c)
}

fn check_two_mode(state: &FockState, cutoff: usize) -> Result<()> {
    if state.modes() != 2 || state.cutoff() != cutoff {
        return Err(Error::InvalidDimension(format!(
            "expected two-mode state at cutoff {cutoff}, got {} mode(s) at {}",
            state.modes(),
            state.cutoff()
        )));
    }
    Ok(())
}

/// Result of a two-mode gate together with its truncation diagnostic.
#[derive(Debug, Clone)]
pub struct GateOutcome {
    pub state: FockState,
    pub norm_loss: f64,
    pub leaked: bool,
}

/// Applies a beam splitter or controlled-Z without forming the `D^2 x D^2` matrix.
pub fn apply_two_mode_gate(state: &FockState, kind: GaussianKind) -> Result<GateOutcome> {
    let d = state.cutoff();
    let out = match kind {
        GaussianKind::BeamSplitter { theta, phi } => BeamSplitter::new(theta, phi, d)?.apply(state)?,
        GaussianKind::ControlledZ(g) => ControlledZ::new(g, d)?.apply(state)?,
        other => {
            return Err(Error::InvalidParameter(format!(
                "{other:?} is not a two-mode gate"
            )))
        }
    };
    let before = state.norm_sqr();
    let norm_loss = (before - out.norm_sqr()).abs() / before;
    let leaked = norm_loss > LEAKAGE_TOLERANCE || out.leaks();
    Ok(GateOutcome {
        state: out,
        norm_loss,
        leaked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::operator::build_gaussian_unitary;
    use rand::{Rng, SeedableRng};

    fn random_two_mode(d: usize, seed: u64) -> FockState {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amps = (0..d * d)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        FockState::new(amps, d, 2).unwrap().normalized().unwrap()
    }

    fn dense_apply(kind: GaussianKind, state: &FockState) -> Vec<Complex64> {
        let u = build_gaussian_unitary(kind, state.cutoff()).unwrap();
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        (u.matrix() * v).as_slice().to_vec()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn single_photon_splits_evenly() {
        let s = FockState::product(&FockState::fock(1, 4).unwrap(), &FockState::vacuum(4).unwrap())
            .unwrap();
        let out = BeamSplitter::new(std::f64::consts::FRAC_PI_4, 0.0, 4)
            .unwrap()
            .apply(&s)
            .unwrap();
        let a = out.amplitudes();
        assert!((a[4].norm_sqr() - 0.5).abs() < 1e-12);
        assert!((a[1].norm_sqr() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn beam_splitter_matches_dense_exponential() {
        let s = random_two_mode(8, 1);
        let kind = GaussianKind::BeamSplitter { theta: 0.7, phi: 0.3 };
        let fast = BeamSplitter::new(0.7, 0.3, 8).unwrap().apply(&s).unwrap();
        assert!(max_diff(fast.amplitudes(), &dense_apply(kind, &s)) < 1e-8);
        assert!((fast.mean_photon() - s.mean_photon()).abs() < 1e-10);
    }

    #[test]
    fn controlled_z_routes_agree_with_dense() {
        let s = random_two_mode(8, 2);
        let dense = dense_apply(GaussianKind::ControlledZ(0.9), &s);
        let spectral = ControlledZ::new(0.9, 8).unwrap().apply(&s).unwrap();
        let taylor = controlled_z_taylor(&s, 0.9).unwrap();
        assert!(max_diff(spectral.amplitudes(), &dense) < 1e-8);
        assert!(max_diff(taylor.amplitudes(), &dense) < 1e-8);
    }

    #[test]
    fn controlled_z_routes_agree_at_production_cutoff() {
        let s = random_two_mode(40, 3);
        let spectral = ControlledZ::new(0.99, 40).unwrap().apply(&s).unwrap();
        let taylor = controlled_z_taylor(&s, 0.99).unwrap();
        assert!(max_diff(spectral.amplitudes(), taylor.amplitudes()) < 1e-8);
    }

    #[test]
    fn zero_coupling_is_identity() {
        let s = random_two_mode(6, 4);
        let out = apply_two_mode_gate(&s, GaussianKind::ControlledZ(0.0)).unwrap();
        assert!(max_diff(out.state.amplitudes(), s.amplitudes()) < 1e-14);
    }
}
