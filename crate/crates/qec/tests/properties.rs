use gkp_qec::inner::{correlated_bin, flip_probability, precision};
use gkp_qec::lattice::{Boundary, RhgLattice};
use gkp_qec::matching::{extract_syndrome, mwpm};
use gkp_qec::memory::{decode_inner, outer_correction};
use gkp_qec::noise::{draw_noise, NoiseModel};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;

fn covariance(n: usize, entries: &[f64]) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |i, j| entries[i * 3 + j]);
    &a * a.transpose() + DMatrix::identity(n, n) * 0.01
}

proptest! {
    #[test]
    fn binned_values_are_neighbouring_integers(
        n in 1usize..=3,
        entries in prop::collection::vec(-0.5f64..0.5, 9),
        x in prop::collection::vec(-4.0f64..4.0, 3),
    ) {
        let sigma = covariance(n, &entries);
        let x = &x[..n];
        let b = correlated_bin(x, &sigma).unwrap();
        let prec = precision(&sigma).unwrap().matrix;
        for i in 0..n {
            prop_assert!(b.q[i] == x[i].floor() as i64 || b.q[i] == x[i].ceil() as i64);
            let p = flip_probability(i, x, &b.q, &prec).p;
            prop_assert!((0.0..=0.5 + 1e-9).contains(&p));
        }
    }

    #[test]
    fn matching_is_perfect(n in 1usize..=12, seed in any::<u64>()) {
        let n = 2 * n;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = rand::Rng::random_range(&mut rng, 0.0..10.0);
                w[i][j] = v;
                w[j][i] = v;
            }
        }
        let m = mwpm(&w).unwrap();
        let mut seen = vec![0; n];
        for (i, j) in m {
            seen[i] += 1;
            seen[j] += 1;
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
    }

    #[test]
    fn correction_always_clears_syndrome(db in 4.0f64..12.0, seed in any::<u64>()) {
        let l = RhgLattice::new(3, Boundary::PeriodicTransverse).unwrap();
        let m = NoiseModel::uniform(db).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let draw = draw_noise(&l, &m, &mut rng).unwrap();
        let rec = decode_inner(&l, &draw).unwrap();
        let bits = rec.bits();
        let (c, _, _) = outer_correction(&l, &rec, &bits).unwrap();
        let fixed: Vec<u8> = bits.iter().zip(&c).map(|(a, b)| a ^ b).collect();
        prop_assert!(extract_syndrome(&fixed, &l).is_empty());
        prop_assert_eq!(extract_syndrome(&bits, &l).len() % 2, 0);
    }
}
