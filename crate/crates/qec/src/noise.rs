//! GKP displacement noise on the lattice, reduced from four-mode macronodes.
//!
//! Each lattice node is a macronode of four GKP modes mixed by a balanced
//! four-splitter; the survivor is measured in `p` and the three ancillas in `q`.
//! At the covariance level the survivor's `p` variance is the arithmetic mean of
//! the four inputs and its `q` variance, conditioned on the ancilla outcomes, is
//! their harmonic mean. A face outcome picks up its own `p` noise plus the `q`
//! noise of its four boundary edges through the Bell-pair links.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{QecError, Result};
use crate::lattice::RhgLattice;

/// Amplitude with which a neighbour's `q` noise enters a face outcome. After the
/// macronode reduction each link acts as a unit-weight CZ of the canonical lattice.
pub const DEFAULT_LINK_WEIGHT: f64 = 1.0;

pub const MODES_PER_MACRONODE: usize = 4;

/// Displacement variance `sigma_Delta^2 = 2 Delta^2` of a mode with effective squeezing `db`.
pub fn db_to_variance(db: f64) -> f64 {
    let delta = 10f64.powf(-db / 20.0) / 2.0;
    2.0 * delta * delta
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DeltaSource {
    /// `(dq_db, dp_db)` pairs, resampled jointly per mode.
    Empirical(Vec<(f64, f64)>),
    /// Independent normal draws in dB per quadrature and mode.
    Gaussian { mu_q_db: f64, mu_p_db: f64, sigma_db: f64 },
    Noiseless,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub source: DeltaSource,
    pub link_weight: f64,
}

impl NoiseModel {
    pub fn empirical(samples: Vec<(f64, f64)>) -> Result<Self> {
        let m = Self {
            source: DeltaSource::Empirical(samples),
            link_weight: DEFAULT_LINK_WEIGHT,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn gaussian(mu_q_db: f64, mu_p_db: f64, sigma_db: f64) -> Result<Self> {
        let m = Self {
            source: DeltaSource::Gaussian { mu_q_db, mu_p_db, sigma_db },
            link_weight: DEFAULT_LINK_WEIGHT,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn uniform(db: f64) -> Result<Self> {
        Self::gaussian(db, db, 0.0)
    }

    pub fn noiseless() -> Self {
        Self {
            source: DeltaSource::Noiseless,
            link_weight: DEFAULT_LINK_WEIGHT,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.link_weight.is_finite() || self.link_weight < 0.0 {
            return Err(QecError::Model(format!("link weight {}", self.link_weight)));
        }
        match &self.source {
            DeltaSource::Empirical(s) => {
                if s.is_empty() {
                    return Err(QecError::Model("empirical source has no samples".into()));
                }
                if s.iter().any(|(q, p)| !q.is_finite() || !p.is_finite()) {
                    return Err(QecError::Model("non-finite empirical sample".into()));
                }
            }
            DeltaSource::Gaussian { mu_q_db, mu_p_db, sigma_db } => {
                if ![*mu_q_db, *mu_p_db, *sigma_db].iter().all(|v| v.is_finite()) || *sigma_db < 0.0 {
                    return Err(QecError::Model(format!(
                        "gaussian source ({mu_q_db}, {mu_p_db}, {sigma_db})"
                    )));
                }
            }
            DeltaSource::Noiseless => {}
        }
        Ok(())
    }

    /// One mode's `(dq_db, dp_db)`; `None` for the noiseless source.
    pub fn draw_mode<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<(f64, f64)> {
        match &self.source {
            DeltaSource::Empirical(s) => Some(s[rng.random_range(0..s.len())]),
            DeltaSource::Gaussian { mu_q_db, mu_p_db, sigma_db } => {
                // unit draws even at sigma = 0, so every sigma shares one stream
                let zq: f64 = StandardNormal.sample(rng);
                let zp: f64 = StandardNormal.sample(rng);
                Some((mu_q_db + sigma_db * zq, mu_p_db + sigma_db * zp))
            }
            DeltaSource::Noiseless => None,
        }
    }

    /// Survivor `(var_q, var_p)` of one macronode.
    pub fn draw_node<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let mut modes = [(0.0, 0.0); MODES_PER_MACRONODE];
        for m in modes.iter_mut() {
            match self.draw_mode(rng) {
                Some((dq, dp)) => *m = (db_to_variance(dq), db_to_variance(dp)),
                None => return (0.0, 0.0),
            }
        }
        macronode_variances(&modes)
    }
}

/// `(harmonic mean of q variances, arithmetic mean of p variances)`.
pub fn macronode_variances(modes: &[(f64, f64)]) -> (f64, f64) {
    let n = modes.len() as f64;
    let vp = modes.iter().map(|m| m.1).sum::<f64>() / n;
    let inv: f64 = modes.iter().map(|m| 1.0 / m.0).sum();
    let vq = if inv.is_finite() { n / inv } else { 0.0 };
    (vq, vp)
}

/// One noise realisation. All quantities are in units of `sqrt(pi)`, so a
/// logical flip is a shift by an odd integer.
#[derive(Debug, Clone)]
pub struct NoiseDraw {
    /// Measured face values (ideal outcome 0 plus noise).
    pub x: Vec<f64>,
    /// Face displacements before scaling, `x = true_shift / sqrt(pi)`.
    pub true_shift: Vec<f64>,
    /// Own `p` variance per face.
    pub face_var: Vec<f64>,
    /// Per-edge variance contributed to each adjacent face (`link_weight^2 var_q`).
    pub edge_var: Vec<f64>,
}

impl NoiseDraw {
    /// Covariance of the listed faces.
    pub fn covariance(&self, lattice: &RhgLattice, faces: &[usize]) -> DMatrix<f64> {
        let n = faces.len();
        let mut s = DMatrix::zeros(n, n);
        for (i, &f) in faces.iter().enumerate() {
            let ef = lattice.face_edges(f);
            s[(i, i)] = self.face_var[f] + ef.iter().map(|&e| self.edge_var[e]).sum::<f64>();
            for (j, &g) in faces.iter().enumerate().skip(i + 1) {
                let eg = lattice.face_edges(g);
                let shared: f64 = ef.iter().filter(|e| eg.contains(e)).map(|&e| self.edge_var[e]).sum();
                s[(i, j)] = shared;
                s[(j, i)] = shared;
            }
        }
        s
    }
}

pub fn draw_noise<R: Rng + ?Sized>(lattice: &RhgLattice, model: &NoiseModel, rng: &mut R) -> Result<NoiseDraw> {
    model.validate()?;
    let scale = std::f64::consts::PI;
    let w2 = model.link_weight * model.link_weight;
    let mut face_var = Vec::with_capacity(lattice.faces().len());
    for _ in lattice.faces() {
        face_var.push(model.draw_node(rng).1);
    }
    let mut edge_var = Vec::with_capacity(lattice.edges().len());
    for _ in lattice.edges() {
        edge_var.push(w2 * model.draw_node(rng).0);
    }
    if face_var.iter().chain(&edge_var).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(QecError::Model("non-finite node variance".into()));
    }
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let edge_shift: Vec<f64> = edge_var.iter().map(|v| v.sqrt() * unit.sample(rng)).collect();
    let mut true_shift = Vec::with_capacity(face_var.len());
    for (f, v) in face_var.iter().enumerate() {
        let own = v.sqrt() * unit.sample(rng);
        let links: f64 = lattice.face_edges(f).iter().map(|&e| edge_shift[e]).sum();
        true_shift.push(own + links);
    }
    let root = scale.sqrt();
    Ok(NoiseDraw {
        x: true_shift.iter().map(|s| s / root).collect(),
        true_shift,
        face_var: face_var.into_iter().map(|v| v / scale).collect(),
        edge_var: edge_var.into_iter().map(|v| v / scale).collect(),
    })
}
