//! Random LPs must come back with a valid optimality certificate.

use hullprice::algebra::{LinearModel, Sense};
use hullprice::simplexcore::{certificate, solve_lp, solve_mip, SolveStatus, SolverOptions};
use proptest::prelude::*;

fn build(n: usize, rows: &[(Vec<i32>, u8, i32)], cost: &[i32], boxed: &[bool], binary: bool) -> LinearModel {
    let mut m = LinearModel::new();
    let vars: Vec<_> = (0..n)
        .map(|j| {
            if binary {
                m.var_bin(format!("b{j}"))
            } else {
                let ub = if boxed[j] { 5.0 } else { f64::INFINITY };
                m.var_cont(format!("x{j}"), 0.0, ub)
            }
        })
        .collect();
    for (i, (coefs, sense, rhs)) in rows.iter().enumerate() {
        let terms: Vec<_> = vars.iter().zip(coefs).map(|(&v, &a)| (v, a as f64)).collect();
        let sense = match sense % 3 {
            0 => Sense::Le,
            1 => Sense::Ge,
            _ => Sense::Eq,
        };
        m.row(&terms, sense, *rhs as f64, format!("r{i}"));
    }
    let obj: Vec<_> = vars.iter().zip(cost).map(|(&v, &c)| (v, c as f64)).collect();
    m.set_objective(&obj, 0.0).unwrap();
    m
}

fn lp_strategy() -> impl Strategy<Value = (usize, Vec<(Vec<i32>, u8, i32)>, Vec<i32>, Vec<bool>)> {
    (2usize..7).prop_flat_map(|n| {
        (
            Just(n),
            prop::collection::vec((prop::collection::vec(-4i32..5, n), 0u8..3, -6i32..10), 1..8),
            prop::collection::vec(-5i32..6, n),
            prop::collection::vec(prop::bool::ANY, n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn optimal_lps_carry_certificates((n, rows, cost, boxed) in lp_strategy()) {
        let m = build(n, &rows, &cost, &boxed, false);
        let r = solve_lp(&m, &SolverOptions::default());
        if r.status == SolveStatus::Optimal {
            let c = certificate(&m, &r);
            prop_assert!(c.holds(1e-6), "{c:?}");
        } else {
            prop_assert!(matches!(r.status, SolveStatus::Infeasible | SolveStatus::Unbounded));
        }
    }

    #[test]
    fn branch_and_bound_matches_enumeration((n, rows, cost, _b) in lp_strategy()) {
        let m = build(n, &rows, &cost, &[], true);
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
            if m.max_violation(&x) <= 1e-9 {
                best = best.min(m.objective_value(&x));
            }
        }
        let opts = SolverOptions { mip_gap: 0.0, ..SolverOptions::default() };
        let r = solve_mip(&m, &opts);
        if best.is_finite() {
            prop_assert_eq!(r.status, SolveStatus::Optimal);
            prop_assert!((r.objective - best).abs() < 1e-6, "{} vs {}", r.objective, best);
        } else {
            prop_assert_eq!(r.status, SolveStatus::Infeasible);
        }
    }
}
