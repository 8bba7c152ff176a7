//! One memory experiment: noise, inner binning, syndrome, matching, logical check.

use rand::Rng;

use crate::error::Result;
use crate::inner::{bin_with, flip_probability, precision};
use crate::lattice::RhgLattice;
use crate::matching::{extract_syndrome, face_weight, matching_graph, mwpm};
use crate::noise::{draw_noise, NoiseDraw, NoiseModel};

/// Binned face values with their flip probabilities.
#[derive(Debug, Clone)]
pub struct HomodyneRecord {
    pub x: Vec<f64>,
    pub q_binned: Vec<i64>,
    pub flip_prob: Vec<f64>,
    pub regularized_blocks: usize,
    pub underflows: usize,
}

impl HomodyneRecord {
    pub fn bits(&self) -> Vec<u8> {
        self.q_binned.iter().map(|q| q.rem_euclid(2) as u8).collect()
    }
}

/// Block-wise correlated binning of a noise draw.
pub fn decode_inner(lattice: &RhgLattice, draw: &NoiseDraw) -> Result<HomodyneRecord> {
    let n = lattice.faces().len();
    let mut q_binned = vec![0i64; n];
    let mut flip_prob = vec![0.0; n];
    let (mut regularized_blocks, mut underflows) = (0, 0);
    for block in lattice.blocks() {
        let sigma = draw.covariance(lattice, block);
        let x: Vec<f64> = block.iter().map(|&f| draw.x[f]).collect();
        if sigma.iter().all(|&v| v == 0.0) {
            // noiseless block: values sit on the grid
            for (k, &f) in block.iter().enumerate() {
                q_binned[f] = x[k].round() as i64;
            }
            continue;
        }
        let prec = precision(&sigma)?;
        if prec.regularized {
            regularized_blocks += 1;
        }
        let q = bin_with(&x, &prec.matrix);
        for (k, &f) in block.iter().enumerate() {
            q_binned[f] = q[k];
            let fp = flip_probability(k, &x, &q, &prec.matrix);
            if fp.underflow {
                underflows += 1;
            }
            flip_prob[f] = fp.p;
        }
    }
    Ok(HomodyneRecord {
        x: draw.x.clone(),
        q_binned,
        flip_prob,
        regularized_blocks,
        underflows,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrialOutcome {
    pub logical_error: bool,
    pub defects: usize,
    pub regularized_blocks: usize,
    pub underflows: usize,
    pub uninformative_faces: usize,
}

/// Matches the defects and returns the set of faces to flip.
pub fn outer_correction(lattice: &RhgLattice, record: &HomodyneRecord, bits: &[u8]) -> Result<(Vec<u8>, usize, usize)> {
    let defects = extract_syndrome(bits, lattice);
    let mut uninformative = 0;
    let weights: Vec<f64> = record
        .flip_prob
        .iter()
        .map(|&p| {
            let (w, flag) = face_weight(p);
            uninformative += flag as usize;
            w
        })
        .collect();
    let mut correction = vec![0u8; bits.len()];
    if !defects.is_empty() {
        let graph = matching_graph(&defects, &weights, lattice);
        for (i, j) in mwpm(&graph.weights)? {
            for f in graph.paths[i].path(lattice, defects[j]) {
                correction[f] ^= 1;
            }
        }
    }
    Ok((correction, defects.len(), uninformative))
}

/// Odd parity of the corrected bits on the logical sheet.
pub fn logical_failure(lattice: &RhgLattice, bits: &[u8], correction: &[u8]) -> bool {
    lattice
        .logical_sheet()
        .iter()
        .fold(0u8, |acc, &f| acc ^ bits[f] ^ correction[f])
        == 1
}

pub fn run_memory_trial<R: Rng + ?Sized>(lattice: &RhgLattice, model: &NoiseModel, rng: &mut R) -> Result<TrialOutcome> {
    let draw = draw_noise(lattice, model, rng)?;
    let record = decode_inner(lattice, &draw)?;
    let bits = record.bits();
    let (correction, defects, uninformative_faces) = outer_correction(lattice, &record, &bits)?;
    Ok(TrialOutcome {
        logical_error: logical_failure(lattice, &bits, &correction),
        defects,
        regularized_blocks: record.regularized_blocks,
        underflows: record.underflows,
        uninformative_faces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Boundary;
    use crate::matching::extract_syndrome;
    use rand::SeedableRng;

    #[test]
    fn noiseless_trial_succeeds() {
        let l = RhgLattice::new(3, Boundary::PeriodicTransverse).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let out = run_memory_trial(&l, &NoiseModel::noiseless(), &mut rng).unwrap();
            assert!(!out.logical_error);
            assert_eq!(out.defects, 0);
        }
    }

    #[test]
    fn correction_clears_syndrome() {
        let l = RhgLattice::new(5, Boundary::PeriodicTransverse).unwrap();
        let m = NoiseModel::uniform(8.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let draw = draw_noise(&l, &m, &mut rng).unwrap();
            let rec = decode_inner(&l, &draw).unwrap();
            let bits = rec.bits();
            let (c, _, _) = outer_correction(&l, &rec, &bits).unwrap();
            let fixed: Vec<u8> = bits.iter().zip(&c).map(|(a, b)| a ^ b).collect();
            assert!(extract_syndrome(&fixed, &l).is_empty());
        }
    }

    #[test]
    fn flip_probabilities_bounded() {
        let l = RhgLattice::new(3, Boundary::PeriodicTransverse).unwrap();
        let m = NoiseModel::uniform(6.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let draw = draw_noise(&l, &m, &mut rng).unwrap();
        let rec = decode_inner(&l, &draw).unwrap();
        for (f, &p) in rec.flip_prob.iter().enumerate() {
            assert!((0.0..=0.5 + 1e-9).contains(&p));
            assert!(rec.q_binned[f] == rec.x[f].floor() as i64 || rec.q_binned[f] == rec.x[f].ceil() as i64);
        }
    }
}
