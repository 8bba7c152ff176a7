//! Teleportation-based squeezing with finite-squeezing noise, and the repeated
//! subtraction-plus-teleportation cat generator built on top of it.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::fock::operator::{
    build_gaussian_unitary, quadrature_squares_real, rotation, symmetric_function, GaussianKind,
    OperatorMatrix,
};
use crate::fock::states::make_squeezed_vacuum;
use crate::fock::two_mode::ControlledZ;
use crate::fock::FockState;
use crate::measurement::{homodyne_project, sample_with, KrausFamily, PNR_SATURATION};
use crate::units::{cluster_from_source, source_from_cluster, SqueezingValue};

/// Finite-squeezing noise `exp(-eps q^2 / 2) exp(-eps p^2 / (2 tanh^2(2 r0)))`, `eps = sech(2 r0)`.
#[derive(Debug, Clone)]
pub struct NoiseChannel {
    epsilon: f64,
    matrix: OperatorMatrix,
}

impl NoiseChannel {
    pub fn new(r0: SqueezingValue, cutoff: usize) -> Result<Self> {
        let r0n = r0.nats().abs();
        ensure_finite("source squeezing", &[r0n])?;
        let epsilon = 1.0 / (2.0 * r0n).cosh();
        if !(epsilon < 1.0) {
            return Err(Error::DegenerateChannel(epsilon));
        }
        let t2 = (2.0 * r0n).tanh().powi(2);
        let (q2, p2) = quadrature_squares_real(cutoff);
        let fq = symmetric_function(q2, |x| (-0.5 * epsilon * x).exp());
        let fp = symmetric_function(p2, |x| (-0.5 * epsilon * x / t2).exp());
        let m = (fq * fp).map(|x| Complex64::new(x, 0.0));
        Ok(Self {
            epsilon,
            matrix: OperatorMatrix::new(m, format!("N(eps={epsilon})")),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn operator(&self) -> &OperatorMatrix {
        &self.matrix
    }

    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        state.apply(&self.matrix)?.normalized()
    }
}

pub fn noise_channel(state: &FockState, r0: SqueezingValue) -> Result<FockState> {
    NoiseChannel::new(r0, state.cutoff())?.apply(state)
}

/// Teleported squeezing gate with zero homodyne outcomes: `N(r0) S(-r_a)`.
///
/// Positive `r_a` stretches `q` (anti-squeezing); negative `r_a` compresses it.
#[derive(Debug, Clone)]
pub struct TeleportGate {
    r_a: f64,
    matrix: OperatorMatrix,
}

impl TeleportGate {
    pub fn new(r0: SqueezingValue, r_a: f64, cutoff: usize) -> Result<Self> {
        ensure_finite("r_a", &[r_a])?;
        let noise = NoiseChannel::new(r0, cutoff)?;
        let s = build_gaussian_unitary(GaussianKind::Squeeze { r: -r_a, theta: 0.0 }, cutoff)?;
        let matrix = noise.operator().compose(&s);
        Ok(Self { r_a, matrix })
    }

    pub fn r_a(&self) -> f64 {
        self.r_a
    }

    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        state.apply(&self.matrix)?.normalized()
    }
}

pub fn teleport_squeeze(state: &FockState, r0: SqueezingValue, r_a: f64) -> Result<FockState> {
    TeleportGate::new(r0, r_a, state.cutoff())?.apply(state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubtractionStats {
    pub p0: f64,
    pub n_mean: f64,
}

/// Zero-click probability and mean click number of one detector at `theta_deg`,
/// optionally after a teleported gate of strength `r_a`.
pub fn subtraction_statistics(
    state: &FockState,
    r0: SqueezingValue,
    r_a: Option<f64>,
    theta_deg: f64,
) -> Result<SubtractionStats> {
    let input = match r_a {
        Some(r_a) => teleport_squeeze(state, r0, r_a)?,
        None => state.clone(),
    };
    let probs = KrausFamily::from_angle_deg(theta_deg, state.cutoff())?.distribution(&input, 0)?;
    Ok(SubtractionStats {
        p0: probs[0],
        n_mean: probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum(),
    })
}

/// `theta_0 = theta0`, `theta_{x+1} = theta_x + a e^{b x}`, in degrees.
pub fn schedule_angles(theta0: f64, a: f64, b: f64, count: usize) -> Result<Vec<f64>> {
    ensure_finite("schedule", &[theta0, a, b])?;
    if count == 0 {
        return Err(Error::InvalidParameter("schedule needs at least one angle".into()));
    }
    let mut out = Vec::with_capacity(count);
    let mut theta = theta0;
    for x in 0..count {
        if !(theta > 0.0 && theta < 90.0) {
            return Err(Error::ScheduleOverflow { index: x, theta });
        }
        out.push(theta);
        theta += a * (b * x as f64).exp();
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PhantmConfig {
    /// Two-mode source squeezing.
    pub r0: SqueezingValue,
    pub n_steps: usize,
    pub subtractors_per_step: usize,
    pub theta0: f64,
    pub grad_a: f64,
    pub grad_b: f64,
    pub ra1: SqueezingValue,
    pub ra2: SqueezingValue,
    pub t_ph: usize,
    pub cutoff: usize,
    pub antisqueeze_enabled: bool,
}

impl PhantmConfig {
    /// Defaults at the given cluster squeezing in dB.
    pub fn at_cluster_db(r_db: f64) -> Self {
        Self {
            r0: source_from_cluster(SqueezingValue::from_db(r_db)).source,
            n_steps: 10,
            subtractors_per_step: 8,
            theta0: 18.0,
            grad_a: 0.75,
            grad_b: 0.35,
            ra1: SqueezingValue::from_db(2.39),
            ra2: SqueezingValue::from_db(0.43),
            t_ph: 55,
            cutoff: 60,
            antisqueeze_enabled: true,
        }
    }

    pub fn cluster(&self) -> SqueezingValue {
        cluster_from_source(self.r0).cluster
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_steps == 0 {
            return Err(Error::InvalidParameter("n_steps must be at least 1".into()));
        }
        if self.subtractors_per_step == 0 {
            return Err(Error::InvalidParameter("subtractors_per_step must be at least 1".into()));
        }
        if self.cutoff < 40 {
            return Err(Error::InvalidParameter(format!("cutoff {} < 40", self.cutoff)));
        }
        ensure_finite(
            "phantm config",
            &[self.r0.nats(), self.ra1.nats(), self.ra2.nats(), self.theta0, self.grad_a, self.grad_b],
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunFlag {
    /// Norm above photon index `cutoff - 5` exceeded the leakage tolerance after this step.
    Truncation { step: usize },
    /// A detector registered `PNR_SATURATION` or more photons.
    Saturation { step: usize, detector: usize },
    /// The zero-outcome homodyne branch had vanishing probability; the trial was redrawn.
    HomodyneRetry,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub post_state: FockState,
    pub photons: Vec<usize>,
    pub homodyne_m: f64,
    pub reset_applied: bool,
    pub antisqueeze_level: u8,
}

#[derive(Debug, Clone)]
pub struct CatRunRecord {
    pub final_state: FockState,
    pub per_step: Vec<StepOutcome>,
    pub total_photons: usize,
    pub seed: u64,
    pub truncation_flags: Vec<RunFlag>,
}

impl CatRunRecord {
    pub fn retries(&self) -> usize {
        self.truncation_flags
            .iter()
            .filter(|f| matches!(f, RunFlag::HomodyneRetry))
            .count()
    }

    pub fn saturated(&self) -> bool {
        self.truncation_flags
            .iter()
            .any(|f| matches!(f, RunFlag::Saturation { .. }))
    }

    pub fn truncated(&self) -> bool {
        self.truncation_flags
            .iter()
            .any(|f| matches!(f, RunFlag::Truncation { .. }))
    }
}

/// Matrices shared by every trial of one configuration.
///
/// One step: adjoin a `p`-squeezed ancilla (`r' = r tanh(r0) / sqrt2`), couple
/// with `C_Z(tanh 2 r0)`, run the detector chain on the input mode, project the
/// input mode onto `p = 0`, and correct the ancilla with
/// `G = R^dag(pi/2) S^dag(ln tanh 2 r0)`.
#[derive(Debug, Clone)]
pub struct PhantmKernel {
    config: PhantmConfig,
    input: FockState,
    ancilla: FockState,
    cz: ControlledZ,
    detectors: Vec<KrausFamily>,
    correction: OperatorMatrix,
    gates: [TeleportGate; 2],
}

const MAX_RETRIES: usize = 32;

impl PhantmKernel {
    pub fn new(config: &PhantmConfig) -> Result<Self> {
        config.validate()?;
        let d = config.cutoff;
        let r0 = config.r0.nats().abs();
        let g = (2.0 * r0).tanh();
        if !(g > 0.0) {
            return Err(Error::DegenerateChannel(1.0));
        }
        let r = config.cluster().nats();
        let input = make_squeezed_vacuum(-r, 0.0, d)?;
        let r_anc = r * r0.tanh() / std::f64::consts::SQRT_2;
        let ancilla = make_squeezed_vacuum(-r_anc, 0.0, d)?;
        let angles = schedule_angles(config.theta0, config.grad_a, config.grad_b, config.subtractors_per_step)?;
        let detectors = angles
            .iter()
            .map(|&t| KrausFamily::from_angle_deg(t, d))
            .collect::<Result<Vec<_>>>()?;
        let unscale = build_gaussian_unitary(GaussianKind::Squeeze { r: -g.ln(), theta: 0.0 }, d)?;
        let rot = OperatorMatrix::new(rotation(-std::f64::consts::FRAC_PI_2, d), "R^dag(pi/2)");
        let correction = rot.compose(&unscale);
        let gates = [
            TeleportGate::new(config.r0, config.ra1.nats(), d)?,
            TeleportGate::new(config.r0, config.ra2.nats(), d)?,
        ];
        Ok(Self {
            config: config.clone(),
            input,
            ancilla,
            cz: ControlledZ::new(g, d)?,
            detectors,
            correction,
            gates,
        })
    }

    pub fn config(&self) -> &PhantmConfig {
        &self.config
    }

    /// The squeezed vacuum every run starts from and resets to.
    pub fn input_state(&self) -> &FockState {
        &self.input
    }

    pub fn angles(&self) -> Vec<f64> {
        self.detectors
            .iter()
            .map(|k| k.transmittance().acos().to_degrees())
            .collect()
    }

    /// One subtraction-and-teleportation step. Returns the corrected output and the click pattern.
    pub fn step<R: Rng + ?Sized>(&self, state: &FockState, rng: &mut R) -> Result<(FockState, Vec<usize>)> {
        if state.cutoff() != self.config.cutoff || state.modes() != 1 {
            return Err(Error::InvalidDimension(format!(
                "step expects a single-mode state at cutoff {}",
                self.config.cutoff
            )));
        }
        let mut pair = self.cz.apply(&FockState::product(state, &self.ancilla)?)?;
        let mut photons = Vec::with_capacity(self.detectors.len());
        for family in &self.detectors {
            let outcome = sample_with(family, &pair, 0, rng)?;
            photons.push(outcome.n);
            pair = outcome.post_state;
        }
        let projected = homodyne_project(&pair, 0, std::f64::consts::FRAC_PI_2, 0.0)?;
        let out = projected.post_state.apply(&self.correction)?.normalized()?;
        Ok((out, photons))
    }

    pub fn gate(&self, level: u8) -> &TeleportGate {
        &self.gates[usize::from(level.clamp(1, 2) - 1)]
    }

    /// Full run of `n_steps`; redraws the whole trial if a homodyne branch has zero weight.
    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R, seed: u64) -> Result<CatRunRecord> {
        let mut retries = 0;
        loop {
            match self.run_once(rng, seed) {
                Ok(mut rec) => {
                    rec.truncation_flags
                        .extend(std::iter::repeat(RunFlag::HomodyneRetry).take(retries));
                    return Ok(rec);
                }
                Err(Error::ZeroProbability(_)) if retries < MAX_RETRIES => retries += 1,
                Err(e) => return Err(e),
            }
        }
    }

    fn run_once<R: Rng + ?Sized>(&self, rng: &mut R, seed: u64) -> Result<CatRunRecord> {
        let cfg = &self.config;
        let mut state = self.input.clone();
        let mut total = 0usize;
        let mut level = 1u8;
        let mut per_step = Vec::with_capacity(cfg.n_steps);
        let mut flags = Vec::new();
        for step in 0..cfg.n_steps {
            let (out, photons) = self.step(&state, rng)?;
            for (detector, &n) in photons.iter().enumerate() {
                if n >= PNR_SATURATION {
                    flags.push(RunFlag::Saturation { step, detector });
                }
            }
            let clicks: usize = photons.iter().sum();
            let reset = total == 0 && clicks == 0;
            if reset {
                state = self.input.clone();
            } else {
                total += clicks;
                state = out;
                if cfg.antisqueeze_enabled {
                    if total >= cfg.t_ph {
                        level = 2;
                    }
                    state = self.gate(level).apply(&state)?;
                }
            }
            if state.leaks() {
                flags.push(RunFlag::Truncation { step });
            }
            per_step.push(StepOutcome {
                post_state: state.clone(),
                photons,
                homodyne_m: 0.0,
                reset_applied: reset,
                antisqueeze_level: level,
            });
        }
        Ok(CatRunRecord {
            final_state: state,
            per_step,
            total_photons: total,
            seed,
            truncation_flags: flags,
        })
    }
}

pub fn run_phantm<R: Rng + ?Sized>(config: &PhantmConfig, rng: &mut R, seed: u64) -> Result<CatRunRecord> {
    PhantmKernel::new(config)?.run(rng, seed)
}

/// `p`-quadrature squeezing gate used outside the cat generator.
pub fn squeeze_matrix(r: f64, cutoff: usize) -> Result<DMatrix<Complex64>> {
    Ok(build_gaussian_unitary(GaussianKind::Squeeze { r, theta: 0.0 }, cutoff)?.into_matrix())
}
