//! Homodyne projection and photon subtraction with a photon-number-resolving detector.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{ensure_finite, Error, Result};
use crate::fock::position::hermite_functions;
use crate::fock::FockState;

pub use crate::fock::position::quadrature_wavefunction;

/// Detectors resolve fewer than this many photons.
pub const PNR_SATURATION: usize = 10;

#[derive(Debug, Clone)]
pub struct HomodyneOutcome {
    pub post_state: FockState,
    /// Unnormalized probability density of the outcome.
    pub density: f64,
}

/// Projects `mode` of a two-mode state onto the eigenstate `|m>` of `q cos(theta) + p sin(theta)`.
///
/// `theta = pi/2` measures `p`.
pub fn homodyne_project(state: &FockState, mode: usize, theta: f64, m: f64) -> Result<HomodyneOutcome> {
    ensure_finite("homodyne", &[theta, m])?;
    if state.modes() != 2 || mode > 1 {
        return Err(Error::InvalidDimension(format!(
            "mode {mode} of a {}-mode state cannot be measured",
            state.modes()
        )));
    }
    let d = state.cutoff();
    let weights: Vec<Complex64> = hermite_functions(m, d)
        .into_iter()
        .enumerate()
        .map(|(n, psi)| Complex64::from_polar(psi, -theta * n as f64))
        .collect();
    let amps = state.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); d];
    for n1 in 0..d {
        for n2 in 0..d {
            let c = amps[n1 * d + n2];
            if mode == 0 {
                out[n2] += weights[n1] * c;
            } else {
                out[n1] += weights[n2] * c;
            }
        }
    }
    let density: f64 = out.iter().map(|z| z.norm_sqr()).sum::<f64>() / state.norm_sqr();
    if !(density >= 1e-14) {
        return Err(Error::ZeroProbability(density.sqrt()));
    }
    let post_state = FockState::single(out)?.normalized()?;
    Ok(HomodyneOutcome { post_state, density })
}

/// Photon-subtraction operators for a beam splitter of transmittance `t = e^{-beta}`
/// followed by photon counting on the reflected arm:
/// `O_n = ((1 - t^2)^{n/2} / sqrt(n!)) t^{a^dag a} a^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausFamily {
    beta: f64,
    cutoff: usize,
}

impl KrausFamily {
    pub fn new(beta: f64, cutoff: usize) -> Result<Self> {
        ensure_finite("beta", &[beta])?;
        if beta <= 0.0 {
            return Err(Error::InvalidParameter(format!("beta must be positive, got {beta}")));
        }
        if cutoff < 2 {
            return Err(Error::InvalidDimension(format!("cutoff {cutoff} < 2")));
        }
        Ok(Self { beta, cutoff })
    }

    /// Family for a beam splitter at angle `theta_deg` (transmittance `cos theta`).
    pub fn from_angle_deg(theta_deg: f64, cutoff: usize) -> Result<Self> {
        if !(theta_deg > 0.0 && theta_deg < 90.0) {
            return Err(Error::InvalidParameter(format!(
                "beam-splitter angle {theta_deg} deg outside (0, 90)"
            )));
        }
        Self::new(-theta_deg.to_radians().cos().ln(), cutoff)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn transmittance(&self) -> f64 {
        (-self.beta).exp()
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// `O_n` as a dense matrix.
    pub fn operator(&self, n: usize) -> DMatrix<f64> {
        let d = self.cutoff;
        let t2 = (-2.0 * self.beta).exp();
        let mut m = DMatrix::zeros(d, d);
        for k in n..d {
            // <k-n| O_n |k> = sqrt(C(k, n)) (1-t^2)^{n/2} t^{k-n}
            let log_binom = ln_factorial(k) - ln_factorial(n) - ln_factorial(k - n);
            let log_v = 0.5 * log_binom
                + 0.5 * n as f64 * (1.0 - t2).ln()
                + (k - n) as f64 * (-self.beta);
            m[(k - n, k)] = log_v.exp();
        }
        m
    }

    /// `max |(sum_n O_n^T O_n - I)_ij|` over the leading `block x block` corner.
    pub fn completeness_defect(&self, block: usize) -> f64 {
        let d = self.cutoff;
        let mut sum = DMatrix::<f64>::zeros(d, d);
        for n in 0..d {
            let o = self.operator(n);
            sum += o.transpose() * o;
        }
        let mut worst: f64 = 0.0;
        for i in 0..block {
            for j in 0..block {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((sum[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Unnormalized branches `O_n |psi>` for every `n` below the cutoff, applied to `mode`.
    pub fn branches(&self, state: &FockState, mode: usize) -> Result<Vec<FockState>> {
        let mut out = Vec::with_capacity(self.cutoff);
        self.for_each_branch(state, mode, |_, s| {
            out.push(s.clone());
            true
        })?;
        Ok(out)
    }

    /// `P(n) = ||O_n psi||^2 / ||psi||^2`.
    pub fn distribution(&self, state: &FockState, mode: usize) -> Result<Vec<f64>> {
        let norm = state.norm_sqr();
        let mut probs = Vec::with_capacity(self.cutoff);
        self.for_each_branch(state, mode, |_, s| {
            probs.push(s.norm_sqr() / norm);
            true
        })?;
        Ok(probs)
    }

    fn for_each_branch(
        &self,
        state: &FockState,
        mode: usize,
        mut visit: impl FnMut(usize, &FockState) -> bool,
    ) -> Result<()> {
        check_mode(state, mode)?;
        if state.cutoff() != self.cutoff {
            return Err(Error::InvalidDimension(format!(
                "Kraus family at cutoff {} applied to state at cutoff {}",
                self.cutoff,
                state.cutoff()
            )));
        }
        // O_n = (sqrt(e^{2 beta} - 1))^n / sqrt(n!) a^n t^{N}
        let gain = ((2.0 * self.beta).exp() - 1.0).sqrt();
        let mut current = damp(state, mode, self.beta);
        for n in 0..self.cutoff {
            if n > 0 {
                current = lower(&current, mode, gain / (n as f64).sqrt());
            }
            if !visit(n, &current) {
                break;
            }
        }
        Ok(())
    }
}

fn check_mode(state: &FockState, mode: usize) -> Result<()> {
    if mode >= state.modes() {
        return Err(Error::InvalidDimension(format!(
            "mode {mode} of a {}-mode state",
            state.modes()
        )));
    }
    Ok(())
}

fn photon_index(idx: usize, cutoff: usize, modes: usize, mode: usize) -> usize {
    if modes == 1 {
        idx
    } else if mode == 0 {
        idx / cutoff
    } else {
        idx % cutoff
    }
}

fn damp(state: &FockState, mode: usize, beta: f64) -> FockState {
    let d = state.cutoff();
    let factors: Vec<f64> = (0..d).map(|k| (-beta * k as f64).exp()).collect();
    let mut out = state.clone();
    let modes = state.modes();
    for (idx, a) in out.amplitudes_mut().iter_mut().enumerate() {
        *a *= factors[photon_index(idx, d, modes, mode)];
    }
    out
}

/// `scale * a` on the chosen mode.
fn lower(state: &FockState, mode: usize, scale: f64) -> FockState {
    let d = state.cutoff();
    let src = state.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    let sq: Vec<f64> = (0..d).map(|k| scale * (k as f64).sqrt()).collect();
    match (state.modes(), mode) {
        (1, _) => {
            for k in 1..d {
                out[k - 1] = src[k] * sq[k];
            }
        }
        (_, 0) => {
            for k in 1..d {
                for j in 0..d {
                    out[(k - 1) * d + j] = src[k * d + j] * sq[k];
                }
            }
        }
        _ => {
            for i in 0..d {
                for k in 1..d {
                    out[i * d + k - 1] = src[i * d + k] * sq[k];
                }
            }
        }
    }
    FockState::new(out, d, state.modes()).expect("shape preserved")
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

#[derive(Debug, Clone)]
pub struct SubtractionOutcome {
    pub n: usize,
    pub probability: f64,
    pub post_state: FockState,
    /// Sampled count at or above the detector's resolution limit.
    pub saturated: bool,
    /// Outcome distribution lost more than `1e-6` of its mass.
    pub truncated: bool,
}

/// Samples one detector click pattern behind a beam splitter at `theta_deg`.
pub fn sample_subtraction<R: Rng + ?Sized>(
    state: &FockState,
    mode: usize,
    theta_deg: f64,
    rng: &mut R,
) -> Result<SubtractionOutcome> {
    let family = KrausFamily::from_angle_deg(theta_deg, state.cutoff())?;
    sample_with(&family, state, mode, rng)
}

pub fn sample_with<R: Rng + ?Sized>(
    family: &KrausFamily,
    state: &FockState,
    mode: usize,
    rng: &mut R,
) -> Result<SubtractionOutcome> {
    let norm = state.norm_sqr();
    let target: f64 = rng.random::<f64>();
    let mut cumulative = 0.0;
    let mut chosen: Option<(usize, f64, FockState)> = None;
    let mut last: Option<(usize, f64, FockState)> = None;
    family.for_each_branch(state, mode, |n, branch| {
        let p = branch.norm_sqr() / norm;
        cumulative += p;
        if p > 0.0 {
            last = Some((n, p, branch.clone()));
        }
        if cumulative > target {
            chosen = Some((n, p, branch.clone()));
            return false;
        }
        true
    })?;
    let truncated = chosen.is_none() && cumulative < 1.0 - 1e-6;
    // Rounding can leave `target` just above the accumulated mass; fall back to the last nonzero branch.
    let (n, probability, branch) = chosen
        .or(last)
        .ok_or(Error::ZeroProbability(norm.sqrt()))?;
    Ok(SubtractionOutcome {
        n,
        probability,
        post_state: branch.normalized()?,
        saturated: n >= PNR_SATURATION,
        truncated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::operator::{build_gaussian_unitary, GaussianKind};
    use crate::fock::states::{make_cat, make_squeezed_vacuum, Parity};
    use crate::fock::two_mode::BeamSplitter;
    use rand::SeedableRng;

    fn coherent(alpha: f64, d: usize) -> FockState {
        let u = build_gaussian_unitary(GaussianKind::Displacement(Complex64::new(alpha, 0.0)), d)
            .unwrap();
        FockState::vacuum(d).unwrap().apply(&u).unwrap()
    }

    #[test]
    fn hermite_values() {
        assert!((quadrature_wavefunction(0, 0.0) - std::f64::consts::PI.powf(-0.25)).abs() < 1e-15);
        assert_eq!(quadrature_wavefunction(1, 0.0), 0.0);
    }

    #[test]
    fn rejects_nonpositive_beta() {
        assert!(matches!(KrausFamily::new(0.0, 10), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn completeness_at_cutoff_40() {
        for beta in [0.01, 0.05017, 0.3] {
            let k = KrausFamily::new(beta, 40).unwrap();
            assert!(k.completeness_defect(20) < 1e-10);
        }
    }

    #[test]
    fn coherent_state_poisson() {
        let t: f64 = 18f64.to_radians().cos();
        let k = KrausFamily::from_angle_deg(18.0, 40).unwrap();
        assert!((k.beta() - 0.05017).abs() < 1e-4);
        let probs = k.distribution(&coherent(1.0, 40), 0).unwrap();
        let mean = 1.0 - t * t;
        assert!((probs[0] - (-mean).exp()).abs() < 1e-6);
        assert!((probs[0] - 0.90893).abs() < 1e-5);
        assert!((probs[1] - mean * (-mean).exp()).abs() < 1e-6);
    }

    #[test]
    fn branches_match_dense_operators() {
        let k = KrausFamily::new(0.2, 12).unwrap();
        let s = make_squeezed_vacuum(0.3, 0.4, 12).unwrap();
        let branches = k.branches(&s, 0).unwrap();
        for n in [0, 1, 3] {
            let dense = k.operator(n).map(|x| Complex64::new(x, 0.0))
                * nalgebra::DVector::from_column_slice(s.amplitudes());
            for (a, b) in dense.iter().zip(branches[n].amplitudes()) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn vacuum_never_clicks() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let out = sample_subtraction(&FockState::vacuum(10).unwrap(), 0, 30.0, &mut rng).unwrap();
        assert_eq!(out.n, 0);
        assert!((out.probability - 1.0).abs() < 1e-15);
    }

    #[test]
    fn odd_counts_flip_parity() {
        let cat = make_cat(2.0, 0.0, Parity::Even, 40).unwrap();
        let k = KrausFamily::from_angle_deg(25.0, 40).unwrap();
        let branches = k.branches(&cat, 0).unwrap();
        assert!((branches[1].clone().normalized().unwrap().parity() + 1.0).abs() < 1e-10);
        assert!((branches[2].clone().normalized().unwrap().parity() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn p_homodyne_on_vacuum_pair() {
        let vac = FockState::vacuum(8).unwrap();
        let pair = FockState::product(&vac, &vac).unwrap();
        let out = homodyne_project(&pair, 1, std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        assert!((out.post_state.inner(&vac).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn node_of_single_photon_is_zero_probability() {
        let pair = FockState::product(&FockState::fock(1, 6).unwrap(), &FockState::vacuum(6).unwrap())
            .unwrap();
        assert!(matches!(
            homodyne_project(&pair, 0, 0.0, 0.0),
            Err(Error::ZeroProbability(_))
        ));
    }

    #[test]
    fn conditional_variance_of_entangled_pair() {
        let d = 50;
        let r = 0.5;
        let a = make_squeezed_vacuum(r, 0.0, d).unwrap();
        let b = make_squeezed_vacuum(-r, 0.0, d).unwrap();
        let pair = FockState::product(&a, &b).unwrap();
        let epr = BeamSplitter::new(std::f64::consts::FRAC_PI_4, 0.0, d)
            .unwrap()
            .apply(&pair)
            .unwrap();
        let out = homodyne_project(&epr, 0, 0.0, 0.0).unwrap();
        let q = crate::fock::operator::position_real(d);
        let v = out.post_state.amplitudes();
        let mut q2 = 0.0;
        for i in 0..d {
            for j in 0..d {
                q2 += (v[i].conj() * v[j]).re * (&q * &q)[(i, j)];
            }
        }
        let expected = 1.0 / (2.0 * (2.0 * r).cosh());
        assert!((q2 - expected).abs() < 1e-8, "{q2} vs {expected}");
    }
}
