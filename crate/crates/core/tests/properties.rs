use nalgebra::DMatrix;
use proptest::prelude::*;

use rowdefect::drury_arveson::{blaschke_model, interior_identity_residual, InnerFunction, Polynomial};
use rowdefect::experiment::{identity_residuals, poisson_residuals, ExperimentConfig};
use rowdefect::numeric::{column_space, null_space, psd_sqrt};
use rowdefect::random::{random_contractive_tuple, random_low_defect_tuple, random_matrix, rng_from_seed};
use rowdefect::tuple::{defect_space, defect_space_by_join};
use rowdefect::words::{binomial, enumerate_multiindices, max_count, multiindices_of_degree, words_of_length};
use rowdefect::{defect_sequence, MultiIndex, OperatorTuple, TolerancePolicy, C64};

fn tuple_strategy() -> impl Strategy<Value = OperatorTuple> {
    (1usize..=3, 1usize..=6, any::<u64>(), 0u8..3).prop_map(|(d, m, seed, kind)| match kind {
        0 => random_contractive_tuple(d, m, false, seed).unwrap(),
        1 => random_contractive_tuple(d, m, true, seed).unwrap(),
        _ => random_low_defect_tuple(d, m, 1 + (seed as usize % m.min(2)), seed).unwrap(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 48,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn defect_profile_is_monotone_bounded_and_stabilizes(t in tuple_strategy()) {
        let p = defect_sequence(&t, 7);
        prop_assert!(p.is_monotone());
        prop_assert!(p.stabilization_is_permanent());
        let delta = p.first();
        for (i, &v) in p.deltas.iter().enumerate() {
            prop_assert!(v <= t.dim());
            prop_assert!(v <= max_count(t.arity(), i + 1, delta, t.is_commuting()));
        }
    }

    #[test]
    fn defect_identities_hold(t in tuple_strategy()) {
        let r = identity_residuals(&t).unwrap();
        prop_assert!(r.sum_formula < 1e-10, "{r:?}");
        prop_assert!(r.join_distance < 1e-7, "{r:?}");
        prop_assert!(r.split_distance < 1e-7, "{r:?}");
        prop_assert!(r.containment < 1e-8, "{r:?}");
    }

    #[test]
    fn poisson_identities_hold(t in tuple_strategy(), depth in 0usize..=3) {
        prop_assume!(defect_space(&t, 1).dim() > 0);
        let r = poisson_residuals(&t, depth).unwrap();
        prop_assert!(r.gram < 1e-10 && r.adjoint < 1e-10 && r.intertwining < 1e-10, "{r:?}");
    }

    #[test]
    fn join_of_first_defect_space_images(t in tuple_strategy(), n in 1usize..=4) {
        prop_assert!(defect_space_by_join(&t, n).distance(&defect_space(&t, n)) < 1e-7);
    }

    #[test]
    fn tuple_json_round_trip(t in tuple_strategy()) {
        let text = serde_json::to_string(&t).unwrap();
        let back: OperatorTuple = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn rank_nullity(rows in 1usize..=7, cols in 1usize..=7, rank in 1usize..=7, seed in any::<u64>()) {
        let rank = rank.min(rows).min(cols);
        let mut rng = rng_from_seed(seed);
        let a = random_matrix(&mut rng, rows, rank);
        let b = random_matrix(&mut rng, rank, cols);
        let x = &a * &b;
        let tol = TolerancePolicy::default();
        let range = column_space(&x, &tol);
        let kernel = null_space(&x, &tol);
        prop_assert_eq!(range.dim(), rank);
        prop_assert_eq!(kernel.dim(), cols - rank);
        prop_assert!((x.as_inner() * kernel.basis().as_inner()).norm() < 1e-10 * (1.0 + x.frobenius_norm()));
    }

    #[test]
    fn psd_square_root(m in 1usize..=6, k in 1usize..=6, seed in any::<u64>()) {
        let g = random_matrix(&mut rng_from_seed(seed), m, k.min(m));
        let a = &g * &g.adjoint();
        let r = psd_sqrt(&a, &TolerancePolicy::default()).unwrap();
        let back: DMatrix<C64> = r.as_inner() * r.as_inner();
        prop_assert!((back - a.as_inner()).norm() < 1e-10 * (1.0 + a.frobenius_norm()));
        prop_assert!((r.as_inner() - r.as_inner().adjoint()).norm() < 1e-12);
    }

    #[test]
    fn word_and_monomial_counts(d in 1usize..=4, n in 0usize..=5) {
        prop_assert_eq!(words_of_length(d, n).len(), d.pow(n as u32));
        prop_assert_eq!(multiindices_of_degree(d, n).len(), binomial(n + d - 1, d - 1));
        prop_assert_eq!(enumerate_multiindices(d, n).len(), binomial(n + d, d));
        prop_assert_eq!(max_count(d, n + 1, 1, true), binomial(n + d, d));
        let geometric: usize = (0..=n).map(|k| d.pow(k as u32)).sum();
        prop_assert_eq!(max_count(d, n + 1, 1, false), geometric);
    }

    #[test]
    fn polynomial_json_round_trip(exps in prop::collection::vec((0u32..4, 0u32..4, -3.0f64..3.0), 1..5)) {
        let terms = exps.iter().map(|&(a, b, c)| (MultiIndex::new(vec![a, b]), C64::new(c, -c / 2.0))).collect();
        let p = Polynomial::new(2, terms).unwrap();
        let back: Polynomial = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn blaschke_model_projections_agree(
        zeros in prop::collection::vec((-0.6f64..0.6, -0.6f64..0.6), 1..4)
    ) {
        let zeros: Vec<C64> = zeros.into_iter().map(|(re, im)| C64::new(re, im)).collect();
        let theta = InnerFunction::blaschke(&zeros).unwrap();
        let model = blaschke_model(&theta, 2 * theta.degree().max(1) + 2).unwrap();
        prop_assert_eq!(model.dim, theta.degree());
        prop_assert!(model.v_residual(4).unwrap() < 1e-8);
        let t = model.tuple().unwrap();
        prop_assert!(t.row_norm() <= 1.0 + 1e-10);
        prop_assert_eq!(defect_space(&t, 1).dim(), 1);
    }

    #[test]
    fn config_round_trip(seed in any::<u64>(), horizon in 1usize..10, atol in 1e-14f64..1e-6) {
        let mut c = ExperimentConfig::new("identity-suite");
        c.seed = Some(seed);
        c.horizon = Some(horizon);
        c.tolerance.identity_atol = Some(atol);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        prop_assert_eq!(back.tolerance_policy().unwrap().identity_atol, atol);
        prop_assert_eq!(back, c);
    }
}

#[test]
fn dshift_interior_identity() {
    for (d, n) in [(1, 6), (2, 5), (3, 3)] {
        assert!(interior_identity_residual(d, n) < 1e-12);
    }
}

