//! Adaptive breeding of generated cats into GKP sensor states.
//!
//! Each cat is squeezed to amplitude `alpha_b` or `2 alpha_b`, or swapped for a
//! squeezed vacuum, depending on the squeezing it would carry after the rescale.
//! The prepared states are then bred pairwise over `M` rounds.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::catfit::{CatFit, CatFitter, FitSearch};
use crate::error::{ensure_finite, Error, Result};
use crate::exec::par_map;
use crate::fock::metrics::{effective_squeezing_on, Quadrature};
use crate::fock::operator::{position_real, symmetric_function, OperatorMatrix};
use crate::fock::position::PositionGrid;
use crate::fock::state::LEAKAGE_MARGIN;
use crate::fock::states::{make_squeezed_vacuum, Parity};
use crate::fock::two_mode::BeamSplitter;
use crate::fock::FockState;
use crate::measurement::homodyne_project;
use crate::seed::{seed_plan, stream_key, Stage};
use crate::teleport::{PhantmConfig, PhantmKernel, TeleportGate};
use crate::units::{source_from_cluster, SqueezingValue, DB_PER_NAT};

/// Lower bounds `(r', alpha_lb; r', 2 alpha_lb)` in dB, by cluster squeezing in dB.
pub const LOWER_BOUNDS_DB: [(f64, f64, f64); 7] = [
    (11.0, 6.08, 7.82),
    (11.25, 5.21, 6.95),
    (11.5, 4.34, 6.08),
    (11.75, 0.45, 5.65),
    (12.0, 3.91, 6.08),
    (12.25, 4.78, 6.51),
    (12.5, 4.78, 6.51),
];

/// Bounds at `r_db`, linearly interpolated between tabulated rows.
pub fn lower_bounds(r_db: f64) -> Result<(f64, f64)> {
    ensure_finite("r_db", &[r_db])?;
    let first = LOWER_BOUNDS_DB[0];
    let last = LOWER_BOUNDS_DB[LOWER_BOUNDS_DB.len() - 1];
    if r_db < first.0 - 1e-9 || r_db > last.0 + 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "no tabulated breeding bounds at {r_db} dB (range {}..{})",
            first.0, last.0
        )));
    }
    if let Some(row) = LOWER_BOUNDS_DB.iter().find(|row| (row.0 - r_db).abs() < 1e-9) {
        return Ok((row.1, row.2));
    }
    for w in LOWER_BOUNDS_DB.windows(2) {
        let (a, b) = (w[0], w[1]);
        if r_db <= b.0 + 1e-9 {
            let t = ((r_db - a.0) / (b.0 - a.0)).clamp(0.0, 1.0);
            return Ok((a.1 + t * (b.1 - a.1), a.2 + t * (b.2 - a.2)));
        }
    }
    Ok((last.1, last.2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreedConfig {
    pub rounds: u32,
    /// Scale applied to `2^{(M-3)/2}`; `sqrt(2 pi)` puts the output grid at sensor-state spacing.
    pub amplitude_unit: f64,
    /// `(alpha_lb, 2 alpha_lb)` squeezing bounds in dB.
    pub lower_bounds: (f64, f64),
    /// Source squeezing of the teleported rescaling gate.
    pub r0: SqueezingValue,
    pub cutoff: usize,
    pub u_q: f64,
    pub u_p: f64,
    /// PhANTM runs allowed per input before a rejected fit is replaced.
    pub max_draws: usize,
    /// Tail mass in the top levels above which a rescaled cat counts as truncated.
    pub leak_tolerance: f64,
}

impl BreedConfig {
    pub fn at_cluster_db(r_db: f64) -> Result<Self> {
        let sensor = (2.0 * std::f64::consts::PI).sqrt();
        Ok(Self {
            rounds: 3,
            amplitude_unit: sensor,
            lower_bounds: lower_bounds(r_db)?,
            r0: source_from_cluster(SqueezingValue::from_db(r_db)).source,
            cutoff: 65,
            u_q: sensor,
            u_p: sensor,
            max_draws: 4,
            leak_tolerance: 1e-4,
        })
    }

    pub fn alpha_b(&self) -> f64 {
        self.amplitude_unit * 2f64.powf((self.rounds as f64 - 3.0) / 2.0)
    }

    pub fn inputs(&self) -> usize {
        1 << self.rounds
    }

    pub fn cluster(&self) -> SqueezingValue {
        crate::units::cluster_from_source(self.r0).cluster
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.rounds > 6 {
            return Err(Error::InvalidParameter(format!("rounds {} outside 1..=6", self.rounds)));
        }
        ensure_finite(
            "breed config",
            &[self.amplitude_unit, self.lower_bounds.0, self.lower_bounds.1, self.u_q, self.u_p],
        )?;
        if !(self.amplitude_unit > 0.0) || self.u_q == 0.0 || self.u_p == 0.0 {
            return Err(Error::InvalidParameter("amplitude unit and displacements must be nonzero".into()));
        }
        if self.cutoff < 2 || self.max_draws == 0 {
            return Err(Error::InvalidParameter("cutoff >= 2 and max_draws >= 1 required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BreedAction {
    RescaleToAlphaB,
    RescaleTo2AlphaB,
    ReplaceWithSqueezedVacuum,
}

/// Squeezing in dB a cat would carry after being squeezed to `target`. Scaling
/// preserves `alpha_c`, so this is `ln(alpha_c / target)`.
pub fn rescaled_squeezing_db(fit: &CatFit, target: f64) -> f64 {
    DB_PER_NAT * (fit.alpha_c / target).ln()
}

/// The decision chain on precomputed squeezing levels, all in dB.
pub fn decide(r_alpha_b: f64, r_2alpha_b: f64, bounds: (f64, f64)) -> BreedAction {
    if r_alpha_b > r_2alpha_b && r_alpha_b > bounds.0 {
        BreedAction::RescaleToAlphaB
    } else if r_2alpha_b > bounds.1 {
        BreedAction::RescaleTo2AlphaB
    } else {
        BreedAction::ReplaceWithSqueezedVacuum
    }
}

/// Returns the action and whether it was forced by a degenerate fit.
pub fn rescale_decision(fit: &CatFit, cfg: &BreedConfig) -> (BreedAction, bool) {
    if !fit.accepted || !(fit.alpha_c > 0.0) || !(fit.alpha > 0.0) {
        return (BreedAction::ReplaceWithSqueezedVacuum, true);
    }
    let ab = cfg.alpha_b();
    let action = decide(
        rescaled_squeezing_db(fit, ab),
        rescaled_squeezing_db(fit, 2.0 * ab),
        cfg.lower_bounds,
    );
    (action, false)
}

/// Teleported squeezing gate that moves the fitted displacement `alpha` to `target`.
pub fn rescale_state(
    state: &FockState,
    fit: &CatFit,
    target: f64,
    r0: SqueezingValue,
    leak_tolerance: f64,
) -> Result<FockState> {
    ensure_finite("target", &[target])?;
    if !(target > 0.0) || !(fit.alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cannot rescale alpha {} to {target}",
            fit.alpha
        )));
    }
    // compression by ln(alpha/target) is a negative anti-squeeze
    let r_a = -(fit.alpha / target).ln();
    let out = TeleportGate::new(r0, r_a, state.cutoff())?.apply(state)?;
    let leakage = out.tail_mass(LEAKAGE_MARGIN);
    if leakage > leak_tolerance {
        return Err(Error::Truncation {
            leakage,
            tolerance: leak_tolerance,
        });
    }
    Ok(out)
}

/// `exp(i u q)`, exact in the eigenbasis of the truncated `q`.
pub fn position_phase(u: f64, cutoff: usize) -> OperatorMatrix {
    let q = position_real(cutoff);
    let c = symmetric_function(q.clone(), |x| (u * x).cos());
    let s = symmetric_function(q, |x| (u * x).sin());
    let m = c.zip_map(&s, |a, b| Complex64::new(a, b));
    OperatorMatrix::new(m, format!("exp(i {u} q)"))
}

/// Phase kick `exp(i u q)` with `u = pi / (2 sqrt2 alpha)`, which flips the relative
/// sign of the two components at `q = +-sqrt2 alpha`. Even states pass through.
pub fn parity_align(state: &FockState, parity: Parity, alpha: f64) -> Result<FockState> {
    match parity {
        Parity::Even => Ok(state.clone()),
        Parity::Odd => {
            ensure_finite("alpha", &[alpha])?;
            if !(alpha > 0.0) {
                return Err(Error::InvalidParameter(format!("alignment needs alpha > 0, got {alpha}")));
            }
            let u = std::f64::consts::PI / (2.0 * std::f64::consts::SQRT_2 * alpha);
            state.apply(&position_phase(u, state.cutoff()))?.normalized()
        }
    }
}

/// Reusable breeding network for one cutoff.
#[derive(Debug, Clone)]
pub struct Breeder {
    bs: BeamSplitter,
}

impl Breeder {
    pub fn new(cutoff: usize) -> Result<Self> {
        Ok(Self {
            bs: BeamSplitter::new(std::f64::consts::FRAC_PI_4, 0.0, cutoff)?,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.bs.cutoff()
    }

    /// 50:50 beam splitter, then `p = 0` on the second output.
    pub fn pair(&self, s1: &FockState, s2: &FockState) -> Result<FockState> {
        let d = self.cutoff();
        if s1.cutoff() != d || s2.cutoff() != d {
            return Err(Error::InvalidDimension(format!(
                "breeding at cutoff {d} got {} and {}",
                s1.cutoff(),
                s2.cutoff()
            )));
        }
        let mixed = self.bs.apply(&FockState::product(s1, s2)?)?;
        Ok(homodyne_project(&mixed, 1, std::f64::consts::FRAC_PI_2, 0.0)?.post_state)
    }

    /// Pairs `(0,1), (2,3), ...` each round until one state remains.
    pub fn tree(&self, mut states: Vec<FockState>) -> Result<FockState> {
        if states.is_empty() || !states.len().is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "breeding tree needs 2^M inputs, got {}",
                states.len()
            )));
        }
        while states.len() > 1 {
            states = states
                .chunks(2)
                .map(|p| self.pair(&p[0], &p[1]))
                .collect::<Result<Vec<_>>>()?;
        }
        Ok(states.pop().expect("one state left"))
    }
}

pub fn breed_pair(s1: &FockState, s2: &FockState) -> Result<FockState> {
    Breeder::new(s1.cutoff())?.pair(s1, s2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GkpSample {
    pub dq_db: f64,
    pub dp_db: f64,
    pub substitutions: usize,
    pub seed: u64,
}

/// A state ready for the tree, with the action that produced it.
#[derive(Debug, Clone)]
pub struct BreedInput {
    pub state: FockState,
    pub action: BreedAction,
    /// Set when the state was replaced for lack of a usable cat rather than by the decision chain.
    pub forced: bool,
}

#[derive(Debug, Clone)]
pub struct BreedResult {
    pub state: FockState,
    pub sample: GkpSample,
}

pub fn breed_tree(inputs: Vec<BreedInput>, cfg: &BreedConfig) -> Result<BreedResult> {
    cfg.validate()?;
    if inputs.len() != cfg.inputs() {
        return Err(Error::InvalidParameter(format!(
            "{} rounds need {} inputs, got {}",
            cfg.rounds,
            cfg.inputs(),
            inputs.len()
        )));
    }
    let substitutions = inputs
        .iter()
        .filter(|i| i.action == BreedAction::ReplaceWithSqueezedVacuum)
        .count();
    let breeder = Breeder::new(cfg.cutoff)?;
    let state = breeder.tree(inputs.into_iter().map(|i| i.state).collect())?;
    let grid = PositionGrid::for_cutoff(cfg.cutoff);
    let dq = effective_squeezing_on(&grid, &state, cfg.u_q, Quadrature::Q)?;
    let dp = effective_squeezing_on(&grid, &state, cfg.u_p, Quadrature::P)?;
    Ok(BreedResult {
        state,
        sample: GkpSample {
            dq_db: dq.db,
            dp_db: dp.db,
            substitutions,
            seed: 0,
        },
    })
}

/// Everything needed to turn one generated cat into a tree input.
#[derive(Debug, Clone)]
pub struct InputPreparer {
    cfg: BreedConfig,
    substitute: FockState,
}

impl InputPreparer {
    pub fn new(cfg: &BreedConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            substitute: make_squeezed_vacuum(cfg.cluster().nats(), 0.0, cfg.cutoff)?,
            cfg: cfg.clone(),
        })
    }

    /// Squeezed vacuum at the cluster squeezing, squeezed along the cat axis.
    pub fn substitute(&self) -> &FockState {
        &self.substitute
    }

    fn replaced(&self, forced: bool) -> BreedInput {
        BreedInput {
            state: self.substitute.clone(),
            action: BreedAction::ReplaceWithSqueezedVacuum,
            forced,
        }
    }

    /// Decide, rescale and align. Gate leakage falls back to substitution.
    pub fn prepare(&self, state: &FockState, fit: &CatFit) -> Result<BreedInput> {
        let (action, forced) = rescale_decision(fit, &self.cfg);
        let target = match action {
            BreedAction::RescaleToAlphaB => self.cfg.alpha_b(),
            BreedAction::RescaleTo2AlphaB => 2.0 * self.cfg.alpha_b(),
            BreedAction::ReplaceWithSqueezedVacuum => return Ok(self.replaced(forced)),
        };
        let widened = state.resized(self.cfg.cutoff)?;
        let scaled = match rescale_state(&widened, fit, target, self.cfg.r0, self.cfg.leak_tolerance) {
            Ok(s) => s,
            Err(Error::Truncation { .. }) => return Ok(self.replaced(true)),
            Err(e) => return Err(e),
        };
        Ok(BreedInput {
            state: parity_align(&scaled, fit.parity, target)?,
            action,
            forced: false,
        })
    }
}

/// Per-trial record of the full generate-fit-breed pipeline.
#[derive(Debug, Clone)]
pub struct GkpTrial {
    pub sample: GkpSample,
    pub fits: Vec<CatFit>,
    pub actions: Vec<BreedAction>,
    /// PhANTM runs discarded for a rejected fit.
    pub redraws: usize,
    pub forced: usize,
}

/// Shared, read-only machinery for GKP sampling.
pub struct GkpPipeline {
    kernel: PhantmKernel,
    fitter: CatFitter,
    preparer: InputPreparer,
    breed: BreedConfig,
}

impl GkpPipeline {
    pub fn new(phantm: &PhantmConfig, breed: &BreedConfig, search: FitSearch) -> Result<Self> {
        if breed.cutoff < phantm.cutoff {
            return Err(Error::InvalidDimension(format!(
                "breeding cutoff {} below generation cutoff {}",
                breed.cutoff, phantm.cutoff
            )));
        }
        Ok(Self {
            kernel: PhantmKernel::new(phantm)?,
            fitter: CatFitter::new(phantm.cutoff, search)?,
            preparer: InputPreparer::new(breed)?,
            breed: breed.clone(),
        })
    }

    pub fn breed_config(&self) -> &BreedConfig {
        &self.breed
    }

    /// One GKP state from `2^M` generated cats, lanes drawn from `(master, trial)`.
    pub fn trial(&self, master: u64, trial: u64) -> Result<GkpTrial> {
        let mut inputs = Vec::with_capacity(self.breed.inputs());
        let mut fits = Vec::with_capacity(self.breed.inputs());
        let mut redraws = 0;
        for lane in 0..self.breed.inputs() as u64 {
            let mut rng = seed_plan(master, Stage::Phantm, trial, lane);
            let seed = stream_key(master, Stage::Phantm, trial, lane);
            let mut chosen = None;
            for _ in 0..self.breed.max_draws {
                let rec = self.kernel.run(&mut rng, seed)?;
                let fit = self.fitter.fit(&rec.final_state)?;
                if fit.accepted {
                    chosen = Some((rec.final_state, fit));
                    break;
                }
                redraws += 1;
            }
            match chosen {
                Some((state, fit)) => {
                    inputs.push(self.preparer.prepare(&state, &fit)?);
                    fits.push(fit);
                }
                None => inputs.push(self.preparer.replaced(true)),
            }
        }
        let actions: Vec<BreedAction> = inputs.iter().map(|i| i.action).collect();
        let forced = inputs.iter().filter(|i| i.forced).count();
        let mut result = breed_tree(inputs, &self.breed)?;
        result.sample.seed = stream_key(master, Stage::Breeding, trial, 0);
        Ok(GkpTrial {
            sample: result.sample,
            fits,
            actions,
            redraws,
            forced,
        })
    }
}

/// Outcome of a batch: kept samples in trial order plus the trials that failed.
#[derive(Debug, Clone)]
pub struct GkpBatch {
    pub trials: Vec<GkpTrial>,
    pub failed: Vec<(u64, String)>,
}

impl GkpBatch {
    pub fn samples(&self) -> Vec<GkpSample> {
        self.trials.iter().map(|t| t.sample).collect()
    }
}

pub fn sample_gkp_distribution(
    phantm: &PhantmConfig,
    breed: &BreedConfig,
    search: FitSearch,
    trials: usize,
    master: u64,
) -> Result<GkpBatch> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let pipeline = GkpPipeline::new(phantm, breed, search)?;
    let results = par_map((0..trials as u64).collect(), |t| (t, pipeline.trial(master, t)));
    let mut batch = GkpBatch {
        trials: Vec::with_capacity(trials),
        failed: Vec::new(),
    };
    for (t, r) in results {
        match r {
            Ok(trial) => batch.trials.push(trial),
            Err(e) => batch.failed.push((t, e.to_string())),
        }
    }
    Ok(batch)
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catfit::fit_squeezed_cat;
    use crate::fock::metrics::state_metrics;
    use crate::fock::states::make_cat;
    use crate::teleport::noise_channel;

    fn fit_of(state: &FockState) -> CatFit {
        fit_squeezed_cat(state, &FitSearch::default()).unwrap()
    }

    fn q_modulus(state: &FockState) -> f64 {
        let u = (2.0 * std::f64::consts::PI).sqrt();
        let grid = PositionGrid::for_cutoff(state.cutoff());
        let e = effective_squeezing_on(&grid, state, u, Quadrature::Q).unwrap();
        (-(e.delta * u).powi(2)).exp()
    }

    #[test]
    fn tabulated_bounds() {
        assert_eq!(lower_bounds(11.5).unwrap(), (4.34, 6.08));
        assert_eq!(lower_bounds(11.75).unwrap(), (0.45, 5.65));
        let mid = lower_bounds(11.125).unwrap();
        assert!((mid.0 - 5.645).abs() < 1e-12 && (mid.1 - 7.385).abs() < 1e-12);
        assert!(lower_bounds(10.0).is_err());
        assert!(lower_bounds(13.0).is_err());
    }

    #[test]
    fn default_alpha_b() {
        let mut cfg = BreedConfig::at_cluster_db(11.5).unwrap();
        assert!((cfg.alpha_b() - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        cfg.amplitude_unit = 1.0;
        assert_eq!(cfg.alpha_b(), 1.0);
        cfg.rounds = 5;
        assert!((cfg.alpha_b() - 2.0).abs() < 1e-12);
        assert_eq!(cfg.inputs(), 32);
    }

    #[test]
    fn decision_examples() {
        assert_eq!(decide(7.0, 5.0, (4.34, 6.08)), BreedAction::RescaleToAlphaB);
        assert_eq!(decide(3.0, 5.0, (6.08, 4.34)), BreedAction::RescaleTo2AlphaB);
        assert_eq!(decide(3.0, 2.0, (6.08, 4.34)), BreedAction::ReplaceWithSqueezedVacuum);
    }

    #[test]
    fn decision_truth_table() {
        use BreedAction::*;
        // (r_ab > r_2ab, r_ab > lb1, r_2ab > lb2) -> action
        let table = [
            ((true, true, true), RescaleToAlphaB),
            ((true, true, false), RescaleToAlphaB),
            ((true, false, true), RescaleTo2AlphaB),
            ((true, false, false), ReplaceWithSqueezedVacuum),
            ((false, true, true), RescaleTo2AlphaB),
            ((false, true, false), ReplaceWithSqueezedVacuum),
            ((false, false, true), RescaleTo2AlphaB),
            ((false, false, false), ReplaceWithSqueezedVacuum),
        ];
        for ((a, b, c), want) in table {
            let (r_ab, r_2ab) = if a { (6.0, 4.0) } else { (4.0, 6.0) };
            let lb1 = if b { r_ab - 1.0 } else { r_ab + 1.0 };
            let lb2 = if c { r_2ab - 1.0 } else { r_2ab + 1.0 };
            assert_eq!(decide(r_ab, r_2ab, (lb1, lb2)), want, "{a} {b} {c}");
        }
    }

    #[test]
    fn rejected_fit_is_replaced_with_flag() {
        let cfg = BreedConfig::at_cluster_db(11.5).unwrap();
        let mut fit = fit_of(&make_cat(4.0, 0.2, Parity::Even, 40).unwrap());
        assert_eq!(rescale_decision(&fit, &cfg), (BreedAction::RescaleToAlphaB, false));
        fit.accepted = false;
        assert_eq!(rescale_decision(&fit, &cfg), (BreedAction::ReplaceWithSqueezedVacuum, true));
    }

    #[test]
    fn rescale_to_own_amplitude_is_noise_channel() {
        let cat = make_cat(2.5, 0.3, Parity::Even, 50).unwrap();
        let fit = fit_of(&cat);
        let r0 = SqueezingValue::from_db(14.5);
        let a = rescale_state(&cat, &fit, fit.alpha, r0, 1e-4).unwrap();
        let b = noise_channel(&cat, r0).unwrap();
        assert!(state_metrics(&a, &b).unwrap().fidelity > 1.0 - 1e-12);
    }

    #[test]
    fn noiseless_rescale_hits_target() {
        let cat = make_cat(4.0, 0.0, Parity::Even, 60).unwrap();
        let fit = fit_of(&cat);
        let out = rescale_state(&cat, &fit, 2.0, SqueezingValue::from_db(80.0), 1e-4).unwrap();
        let f = fit_of(&out);
        assert!((f.alpha - 2.0).abs() < 1e-3, "{f:?}");
        assert!((f.r_prime - 2f64.ln()).abs() < 1e-3, "{f:?}");
        assert!((f.alpha_c - fit.alpha_c).abs() < 2e-3);
    }

    #[test]
    fn finite_squeezing_rescale_damps() {
        let cat = make_cat(4.0, 0.0, Parity::Even, 60).unwrap();
        let fit = fit_of(&cat);
        let out = rescale_state(&cat, &fit, 2.0, SqueezingValue::from_db(14.5), 1e-4).unwrap();
        let f = fit_of(&out);
        assert!(f.fidelity > 0.9);
        assert!(f.alpha_c < fit.alpha_c && f.alpha_c > 0.5 * fit.alpha_c, "{f:?}");
    }

    #[test]
    fn alignment() {
        let even = make_cat(2.0, 0.0, Parity::Even, 40).unwrap();
        assert_eq!(parity_align(&even, Parity::Even, 2.0).unwrap(), even);
        let odd = make_cat(2.0, 0.0, Parity::Odd, 40).unwrap();
        let once = parity_align(&odd, Parity::Odd, 2.0).unwrap();
        assert!(once.parity() > 0.0, "{}", once.parity());
        let twice = parity_align(&once, Parity::Odd, 2.0).unwrap();
        assert!(twice.parity() < 0.0);
        assert!(parity_align(&odd, Parity::Odd, 0.0).is_err());
    }

    #[test]
    fn aligned_odd_cat_is_phase_flipped_even_cat() {
        // exp(iuq) on |+a> - |-a> gives e^{i pi/2}(|a'> + |-a'>) up to the p shift u,
        // so q densities of the aligned odd cat and the even cat agree away from the origin
        let odd = make_cat(3.0, 0.2, Parity::Odd, 50).unwrap();
        let aligned = parity_align(&odd, Parity::Odd, 3.0).unwrap();
        let grid = PositionGrid::for_cutoff(50);
        let a = grid.wavefunction(aligned.amplitudes());
        let b = grid.wavefunction(odd.amplitudes());
        for (x, (za, zb)) in grid.xs().iter().zip(a.iter().zip(&b)) {
            assert!((za.norm() - zb.norm()).abs() < 1e-6, "x = {x}");
        }
    }

    #[test]
    fn breeding_two_cats_sharpens_grid() {
        // one round from alpha = sqrt(pi/2) lands on the sqrt(2 pi) grid
        let cat = make_cat((std::f64::consts::PI / 2.0).sqrt(), 0.3, Parity::Even, 50).unwrap();
        let out = breed_pair(&cat, &cat).unwrap();
        assert!(q_modulus(&out) > q_modulus(&cat), "{} {}", q_modulus(&out), q_modulus(&cat));
    }

    #[test]
    fn breeding_is_symmetric() {
        let a = make_cat(2.0, 0.3, Parity::Even, 40).unwrap();
        let b = make_cat(1.5, 0.1, Parity::Even, 40).unwrap();
        let ab = breed_pair(&a, &b).unwrap();
        let ba = breed_pair(&b, &a).unwrap();
        assert!(state_metrics(&ab, &ba).unwrap().fidelity > 1.0 - 1e-10);
    }

    #[test]
    fn breeding_vacua_gives_vacuum() {
        let vac = FockState::vacuum(30).unwrap();
        let out = breed_pair(&vac, &vac).unwrap();
        let u = (2.0 * std::f64::consts::PI).sqrt();
        for quad in [Quadrature::Q, Quadrature::P] {
            let a = crate::fock::metrics::effective_squeezing(&out, u, quad).unwrap();
            let b = crate::fock::metrics::effective_squeezing(&vac, u, quad).unwrap();
            assert!((a.delta - b.delta).abs() < 1e-6);
        }
    }

    #[test]
    fn gaussian_partner_keeps_corrected_amplitude() {
        // a squeezed-vacuum partner along the cat axis rescales the cat by 1/sqrt2,
        // leaving alpha_c unchanged up to the finite partner squeezing
        let cat = make_cat(3.0, 0.0, Parity::Even, 50).unwrap();
        let partner = make_squeezed_vacuum(SqueezingValue::from_db(11.5).nats(), 0.0, 50).unwrap();
        let out = breed_pair(&cat, &partner).unwrap();
        let f = fit_of(&out);
        assert!(f.fidelity > 0.99, "{f:?}");
        assert!((f.alpha_c - 3.0).abs() < 0.3, "{f:?}");
        assert!((f.alpha - 3.0 / std::f64::consts::SQRT_2).abs() < 0.3, "{f:?}");
    }

    #[test]
    fn gaussian_tree_is_closed() {
        let cfg = BreedConfig::at_cluster_db(11.5).unwrap();
        let sv = make_squeezed_vacuum(cfg.cluster().nats(), 0.0, cfg.cutoff).unwrap();
        let inputs = (0..8)
            .map(|_| BreedInput {
                state: sv.clone(),
                action: BreedAction::ReplaceWithSqueezedVacuum,
                forced: false,
            })
            .collect();
        let res = breed_tree(inputs, &cfg).unwrap();
        assert!(state_metrics(&res.state, &sv).unwrap().fidelity > 1.0 - 1e-9);
        assert_eq!(res.sample.substitutions, 8);
        let grid = PositionGrid::for_cutoff(cfg.cutoff);
        let single = effective_squeezing_on(&grid, &sv, cfg.u_q, Quadrature::Q).unwrap();
        assert!((res.sample.dq_db - single.db).abs() < 1e-6);
    }

    #[test]
    fn substitutions_are_counted() {
        let cfg = BreedConfig {
            rounds: 2,
            cutoff: 30,
            ..BreedConfig::at_cluster_db(11.5).unwrap()
        };
        let cat = make_cat(1.5, 0.3, Parity::Even, 30).unwrap();
        let sv = make_squeezed_vacuum(0.8, 0.0, 30).unwrap();
        let inputs = vec![
            BreedInput { state: cat.clone(), action: BreedAction::RescaleToAlphaB, forced: false },
            BreedInput { state: sv.clone(), action: BreedAction::ReplaceWithSqueezedVacuum, forced: true },
            BreedInput { state: cat, action: BreedAction::RescaleTo2AlphaB, forced: false },
            BreedInput { state: sv, action: BreedAction::ReplaceWithSqueezedVacuum, forced: false },
        ];
        assert_eq!(breed_tree(inputs.clone(), &cfg).unwrap().sample.substitutions, 2);
        assert!(breed_tree(inputs[..3].to_vec(), &cfg).is_err());
    }
}
