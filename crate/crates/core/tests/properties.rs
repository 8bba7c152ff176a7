use gkp_core::fock::operator::{build_gaussian_unitary, GaussianKind};
use gkp_core::fock::states::make_squeezed_vacuum;
use gkp_core::fock::two_mode::BeamSplitter;
use gkp_core::fock::FockState;
use gkp_core::measurement::KrausFamily;
use gkp_core::units::{cluster_from_source, source_from_cluster, SqueezingValue};
use num_complex::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn single_mode_gaussians_unitary_on_lower_block(
        re in -1.0f64..1.0,
        im in -1.0f64..1.0,
        r in -0.6f64..0.6,
        theta in 0.0f64..6.3,
    ) {
        for kind in [
            GaussianKind::Displacement(Complex64::new(re, im)),
            GaussianKind::Squeeze { r, theta },
            GaussianKind::Rotate(theta),
        ] {
            let u = build_gaussian_unitary(kind, 40).unwrap();
            prop_assert!(u.unitarity_defect(20) < 1e-8, "{kind:?}");
        }
    }

    #[test]
    fn kraus_family_complete(beta in 0.001f64..1.5) {
        let k = KrausFamily::new(beta, 30).unwrap();
        prop_assert!(k.completeness_defect(30) < 1e-10);
    }

    #[test]
    fn db_and_nats_round_trip(db in -5.0f64..25.0) {
        let v = SqueezingValue::from_db(db);
        prop_assert!((SqueezingValue::from_nats(v.nats()).db() - db).abs() < 1e-12);
    }

    #[test]
    fn cluster_source_inverse(db in 1.0f64..20.0) {
        let c = source_from_cluster(SqueezingValue::from_db(db));
        let back = cluster_from_source(c.source);
        prop_assert!((back.cluster.db() - db).abs() < 1e-9);
        prop_assert!((back.epsilon - c.epsilon).abs() < 1e-12);
    }

    #[test]
    fn beam_splitter_keeps_norm_and_photons(theta in 0.0f64..1.6, phi in 0.0f64..3.2, r in 0.0f64..0.3) {
        let d = 24;
        let a = make_squeezed_vacuum(r, 0.0, d).unwrap();
        let b = FockState::fock(2, d).unwrap();
        let s = FockState::product(&a, &b).unwrap();
        let out = BeamSplitter::new(theta, phi, d).unwrap().apply(&s).unwrap();
        // squeezed vacuum at r <= 0.3 keeps its mass far below n = 20, inside the exact blocks
        prop_assert!((out.norm_sqr() - s.norm_sqr()).abs() < 1e-10);
        prop_assert!((out.mean_photon() - s.mean_photon()).abs() < 1e-8);
    }

    #[test]
    fn subtraction_distribution_normalised(beta in 0.01f64..0.5, n in 0usize..10) {
        let k = KrausFamily::new(beta, 30).unwrap();
        let p = k.distribution(&FockState::fock(n, 30).unwrap(), 0).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}
