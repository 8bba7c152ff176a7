use gkpsim::schema::{load_samples, persist_samples, CatRunRow, GkpSampleRow, PhotonHistRow, QecRateRow};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

#[test]
fn thousand_gkp_samples_round_trip_bit_exactly() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let rows: Vec<GkpSampleRow> = (0..1000)
        .map(|t| GkpSampleRow {
            trial: t,
            seed: rng.random(),
            r_db: 11.5,
            dq_db: rng.random_range(5.0..12.0),
            dp_db: rng.random_range(8.0..13.0),
            substitutions: rng.random_range(0..8),
            flags: if t % 7 == 0 { "redraws=1;forced=1".into() } else { String::new() },
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("gkp_samples.csv");
    persist_samples(&rows, &p).unwrap();
    let back: Vec<GkpSampleRow> = load_samples(&p).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(a.dq_db.to_bits(), b.dq_db.to_bits());
        assert_eq!(a.dp_db.to_bits(), b.dp_db.to_bits());
        assert_eq!(a, b);
    }
}

#[test]
fn schema_mismatch_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("hist.csv");
    persist_samples(&[PhotonHistRow { detector_index: 1, n: 0, count: 3 }], &p).unwrap();
    let e = load_samples::<QecRateRow>(&p).unwrap_err().to_string();
    for col in ["source", "r_db_or_mu", "failures", "master_seed"] {
        assert!(e.contains(col), "{e}");
    }
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), -1e300f64..1e300]
}

proptest! {
    #[test]
    fn cat_rows_round_trip(
        alpha in finite(), r_prime in finite(), fidelity in 0.0f64..1.0, alpha_c in finite(),
        seed in any::<u64>(), photons in 0u64..500, accepted in any::<bool>(), odd in any::<bool>(),
    ) {
        let row = CatRunRow {
            trial: 4,
            seed,
            r_db: 12.0,
            total_photons: photons,
            alpha,
            r_prime,
            parity: if odd { -1 } else { 1 },
            fidelity,
            alpha_c,
            accepted,
            flags: "truncation@3;saturation@4/2".into(),
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cat_runs.csv");
        persist_samples(std::slice::from_ref(&row), &p).unwrap();
        let back: Vec<CatRunRow> = load_samples(&p).unwrap();
        prop_assert_eq!(back.len(), 1);
        prop_assert_eq!(back[0].alpha.to_bits(), alpha.to_bits());
        prop_assert_eq!(&back[0], &row);
    }
}
