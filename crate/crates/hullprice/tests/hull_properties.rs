//! Randomised checks of the hull formulations against the oracles.

use hullprice::hulls::{build_p3, self_schedule_model, FormKind};
use hullprice::instance::synth::random_unit;
use hullprice::instance::{classify, GeneratorClass};
use hullprice::oracle::{dp_self_schedule, enumerate_best_schedule};
use hullprice::simplexcore::{solve_lp, SolveStatus, SolverOptions};
use proptest::prelude::*;

const CLASSES: [GeneratorClass; 4] = [GeneratorClass::G1, GeneratorClass::G2, GeneratorClass::G3, GeneratorClass::G4];

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn class_hull_is_integral_and_exact(seed in 0u64..1_000_000, class_ix in 0usize..4, horizon in 1usize..=5,
                                        prices in proptest::collection::vec(0.0f64..80.0, 5)) {
        let class = CLASSES[class_ix];
        let g = random_unit(seed, class, horizon);
        prop_assert_eq!(classify(&g), class);
        let price = &prices[..horizon];
        let (bf, _) = enumerate_best_schedule(&g, price).unwrap();
        let mut kinds = vec![FormKind::D4];
        if class != GeneratorClass::G4 {
            kinds.push(FormKind::hull_for(class));
        }
        for kind in kinds {
            let (m, h) = self_schedule_model(&g, kind, price).unwrap();
            let r = solve_lp(&m, &SolverOptions::default());
            prop_assert_eq!(r.status, SolveStatus::Optimal);
            prop_assert!(h.max_fractionality(&r.primal) < 1e-5, "{kind} fractional for {g:?}");
            prop_assert!(close(r.objective, bf.net_cost, 1e-6), "{kind}: {} vs {}", r.objective, bf.net_cost);
        }
    }

    #[test]
    fn dp_matches_enumeration(seed in 0u64..1_000_000, class_ix in 0usize..4, horizon in 1usize..=6,
                              prices in proptest::collection::vec(0.0f64..80.0, 6)) {
        let g = random_unit(seed, CLASSES[class_ix], horizon);
        let price = &prices[..horizon];
        let (dp, _) = dp_self_schedule(&g, price).unwrap();
        let (bf, _) = enumerate_best_schedule(&g, price).unwrap();
        prop_assert!(close(dp.net_cost, bf.net_cost, 1e-6), "{} vs {}", dp.net_cost, bf.net_cost);
    }

    #[test]
    fn relaxation_points_of_exact_hulls_pass_membership(seed in 0u64..1_000_000, class_ix in 0usize..3,
                                                        prices in proptest::collection::vec(0.0f64..80.0, 4)) {
        let class = CLASSES[class_ix];
        let g = random_unit(seed, class, 4);
        let (m, h) = self_schedule_model(&g, FormKind::hull_for(class), &prices).unwrap();
        let r = solve_lp(&m, &SolverOptions::default());
        let hat = h.status_point(&r.primal);
        let p3 = solve_lp(&build_p3(&g, &hat).unwrap(), &SolverOptions::default());
        prop_assert_eq!(p3.status, SolveStatus::Optimal);
    }

    #[test]
    fn self_schedule_value_is_monotone_in_price(seed in 0u64..1_000_000, class_ix in 0usize..4,
                                                prices in proptest::collection::vec(0.0f64..80.0, 4),
                                                period in 0usize..4, bump in 0.0f64..20.0) {
        let g = random_unit(seed, CLASSES[class_ix], 4);
        let (base, _) = dp_self_schedule(&g, &prices).unwrap();
        let mut raised = prices.clone();
        raised[period] += bump;
        let (after, _) = dp_self_schedule(&g, &raised).unwrap();
        prop_assert!(after.net_cost <= base.net_cost + 1e-7 * (1.0 + base.net_cost.abs()));
    }
}
