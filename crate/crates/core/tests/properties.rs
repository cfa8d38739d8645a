use egl::calculus::{divergence, leray_project};
use egl::io::{decode, RunConfig, Snapshot};
use egl::random::{random_div_free, random_scalar, random_vector, rng};
use egl::spectral::{chi_cutoff, dealias};
use egl::{Grid, Sobolev, VectorField};
use proptest::prelude::*;

fn grid() -> Grid {
    Grid::standard(2, 16).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn leray_is_an_idempotent_projection_onto_div_free(seed in any::<u64>()) {
        let g = grid();
        let u = random_vector(&g, 5, 1.0, &mut rng(seed)).unwrap();
        let p = leray_project(&u);
        let scale = u.sobolev_norm(0.0);
        prop_assert!(divergence(&p).sobolev_norm(0.0) <= 1e-12 * scale);
        prop_assert!((&leray_project(&p) - &p).max_abs() <= 1e-13 * scale.max(1.0));
        // Orthogonal: ‖u‖² = ‖Pu‖² + ‖u − Pu‖².
        let q = &u - &p;
        let lhs = u.sobolev_norm(1.0).powi(2);
        let rhs = p.sobolev_norm(1.0).powi(2) + q.sobolev_norm(1.0).powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
    }

    #[test]
    fn sobolev_norm_is_monotone_in_s(seed in any::<u64>(), s in 0.0f64..3.0, ds in 0.0f64..2.0) {
        let f = random_scalar(&grid(), 5, 1.0, &mut rng(seed)).unwrap();
        prop_assert!(f.sobolev_norm(s) <= f.sobolev_norm(s + ds) * (1.0 + 1e-14));
    }

    #[test]
    fn sobolev_norm_is_translation_invariant(seed in any::<u64>(), shift in 0usize..16) {
        let g = grid();
        let f = random_scalar(&g, 5, 1.0, &mut rng(seed)).unwrap();
        let mut moved = f.samples().to_vec();
        moved.rotate_left(shift * 16);
        let h = egl::ScalarField::from_samples(&g, moved).unwrap();
        prop_assert!((f.sobolev_norm(2.0) - h.sobolev_norm(2.0)).abs() <= 1e-12 * f.sobolev_norm(2.0));
    }

    #[test]
    fn chi_is_a_contraction_in_every_norm(seed in any::<u64>(), radius in 0.0f64..4.0, s in 0.0f64..4.0) {
        let f = random_scalar(&grid(), 5, 0.5, &mut rng(seed)).unwrap();
        let c = chi_cutoff(&f, radius).unwrap();
        prop_assert!(c.sobolev_norm(s) <= f.sobolev_norm(s) * (1.0 + 1e-14));
    }

    #[test]
    fn dealiasing_is_idempotent(seed in any::<u64>()) {
        use rand::Rng;
        let mut r = rng(seed);
        let noise = (0..256).map(|_| r.gen_range(-1.0..1.0)).collect();
        let f = egl::ScalarField::from_samples(&grid(), noise).unwrap();
        let once = dealias(&f);
        prop_assert!((&dealias(&once) - &once).max_abs() <= 1e-15 * f.max_abs().max(1.0));
    }

    #[test]
    fn random_div_free_hits_its_norm(seed in any::<u64>(), amp in 0.01f64..10.0, s in 0.0f64..4.0) {
        let u = random_div_free(&grid(), 4, s, amp, &mut rng(seed)).unwrap();
        prop_assert!((u.sobolev_norm(s) - amp).abs() <= 1e-12 * amp);
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact(seed in any::<u64>(), p in 3u32..6, l in 0.5f64..20.0) {
        let g = Grid::new(2, 1 << p, l).unwrap();
        let u: VectorField = random_vector(&g, 1, 0.0, &mut rng(seed)).unwrap();
        let bytes = Snapshot::vector(&u).to_bytes().unwrap();
        let (back, used) = decode(&bytes).unwrap();
        prop_assert_eq!(used, bytes.len());
        prop_assert_eq!(back.grid.length(), l);
        let v = back.into_vector().unwrap();
        for (a, b) in u.components().iter().zip(v.components()) {
            prop_assert_eq!(a.samples(), b.samples());
        }
    }

    #[test]
    fn snapshot_decoder_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
        let _ = decode(&bytes);
    }

    #[test]
    fn config_canonical_form_round_trips(
        n in 4usize..64,
        dt in 1e-4f64..1e-1,
        s in 2.1f64..5.0,
        seed in any::<u64>(),
        rs in proptest::collection::vec(1e-3f64..1.0, 1..4),
    ) {
        let cfg = RunConfig { n: 2 * n, dt, s, seed, r: rs, ..Default::default() };
        let back = RunConfig::parse(&cfg.canonical()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn config_parser_never_panics(text in "[ -~\n\\[\\]=#;]{0,200}") {
        let _ = RunConfig::parse(&text);
    }
}
