//! Oracle cross-check suites shared by the CLI and the acceptance tests.
//!
//! Each suite draws its cases from a seed, so a rerun with the same seed
//! reproduces the same verdicts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::hulls::{self_schedule_model, FormKind};
use crate::instance::synth::random_unit;
use crate::instance::{GeneratorClass, SystemInstance};
use crate::oracle::{dp_self_schedule, enumerate_best_schedule};
use crate::pricing::{run_all, Algorithm, PricingOptions, PricingRunReport};
use crate::simplexcore::{solve_lp, SolveStatus, SolverOptions};

pub const CLASSES: [GeneratorClass; 4] = [GeneratorClass::G1, GeneratorClass::G2, GeneratorClass::G3, GeneratorClass::G4];

/// Prices are drawn uniformly from `[0, PRICE_MAX)`.
pub const PRICE_MAX: f64 = 80.0;

#[derive(Clone, Debug)]
pub struct Tolerances {
    /// Distance from the nearest integer.
    pub integrality: f64,
    /// Relative objective agreement, scaled by `1 + |obj|`.
    pub objective: f64,
    /// Allowed rise of an uplift sequence, scaled by `1 + U0`.
    pub monotone: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            integrality: 1e-5,
            objective: 1e-6,
            monotone: 1e-6,
        }
    }
}

/// Facet family removed from the class hull to build a negative control.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Corruption {
    /// Drop the rows that split start-up and running output costs, leaving
    /// the aggregated cost epigraph. Produces fractional vertices.
    AggregatedCost,
    /// Drop the minimum-up rows. Vertices stay integral but schedules can
    /// break minimum up time, so objectives drift below the true optimum.
    MissingMinUp,
}

impl Corruption {
    fn drops(self, tag: &str) -> bool {
        match self {
            Corruption::AggregatedCost => tag.contains(".split"),
            Corruption::MissingMinUp => tag.contains(".minup."),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub cases: usize,
    /// First few failure descriptions.
    pub failures: Vec<String>,
    pub failure_count: usize,
}

impl CheckReport {
    fn new(name: impl Into<String>) -> Self {
        CheckReport {
            name: name.into(),
            cases: 0,
            failures: Vec::new(),
            failure_count: 0,
        }
    }

    fn fail(&mut self, msg: String) {
        self.failure_count += 1;
        if self.failures.len() < 5 {
            self.failures.push(msg);
        }
    }

    pub fn passed(&self) -> bool {
        self.failure_count == 0
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Deterministic stream of `(class, unit seed, horizon, prices)` cases.
fn cases(seed: u64, per_class: usize, max_horizon: usize) -> Vec<(GeneratorClass, u64, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(4 * per_class);
    for class in CLASSES {
        for _ in 0..per_class {
            let horizon = rng.gen_range(1..=max_horizon.max(1));
            let unit_seed = rng.gen::<u64>();
            let prices = (0..horizon).map(|_| rng.gen_range(0.0..PRICE_MAX)).collect();
            out.push((class, unit_seed, prices));
        }
    }
    out
}

/// The self-schedule dynamic program against exhaustive enumeration.
pub fn dp_vs_enumeration(seed: u64, per_class: usize, max_horizon: usize, tol: &Tolerances) -> CheckReport {
    let mut rep = CheckReport::new("dp-vs-enumeration");
    for (class, unit_seed, prices) in cases(seed, per_class, max_horizon) {
        rep.cases += 1;
        let g = random_unit(unit_seed, class, prices.len());
        match (dp_self_schedule(&g, &prices), enumerate_best_schedule(&g, &prices)) {
            (Ok((dp, _)), Ok((bf, _))) if close(dp.net_cost, bf.net_cost, tol.objective) => {}
            (Ok((dp, _)), Ok((bf, _))) => rep.fail(format!(
                "{class:?} unit {unit_seed}: dp {} vs enumeration {}",
                dp.net_cost, bf.net_cost
            )),
            (a, b) => rep.fail(format!("{class:?} unit {unit_seed}: {:?} / {:?}", a.err(), b.err())),
        }
    }
    rep
}

/// The interval-hull LP value against the dynamic program.
pub fn interval_lp_vs_dp(seed: u64, per_class: usize, max_horizon: usize, tol: &Tolerances) -> CheckReport {
    let mut rep = CheckReport::new("interval-lp-vs-dp");
    let opts = SolverOptions::default();
    for (class, unit_seed, prices) in cases(seed, per_class, max_horizon) {
        rep.cases += 1;
        let g = random_unit(unit_seed, class, prices.len());
        let dp = match dp_self_schedule(&g, &prices) {
            Ok((v, _)) => v.net_cost,
            Err(e) => {
                rep.fail(format!("{class:?} unit {unit_seed}: {e}"));
                continue;
            }
        };
        let lp = self_schedule_model(&g, FormKind::D4, &prices).map(|(m, _)| solve_lp(&m, &opts));
        match lp {
            Ok(r) if r.status == SolveStatus::Optimal && close(r.objective, dp, tol.objective) => {}
            Ok(r) => rep.fail(format!(
                "{class:?} unit {unit_seed}: LP {:?} {} vs dp {dp}",
                r.status, r.objective
            )),
            Err(e) => rep.fail(format!("{class:?} unit {unit_seed}: {e}")),
        }
    }
    rep
}

/// LP optima over each class hull, and over the interval hull for every
/// class, must be integral and match enumeration. With `corrupt` set the
/// class hull loses a facet family and the suite is expected to fail.
pub fn hull_integrality(
    seed: u64,
    per_class: usize,
    max_horizon: usize,
    corrupt: Option<Corruption>,
    tol: &Tolerances,
) -> CheckReport {
    let name = match corrupt {
        None => "hull-integrality".to_string(),
        Some(c) => format!("hull-integrality ({c:?})"),
    };
    let mut rep = CheckReport::new(name);
    let opts = SolverOptions::default();
    for (class, unit_seed, prices) in cases(seed, per_class, max_horizon) {
        let g = random_unit(unit_seed, class, prices.len());
        let best = match enumerate_best_schedule(&g, &prices) {
            Ok((v, _)) => v.net_cost,
            Err(e) => {
                rep.fail(format!("{class:?} unit {unit_seed}: {e}"));
                continue;
            }
        };
        let mut kinds = Vec::new();
        if class != GeneratorClass::G4 {
            kinds.push(FormKind::hull_for(class));
        }
        if corrupt.is_none() {
            kinds.push(FormKind::D4);
        }
        for kind in kinds {
            rep.cases += 1;
            let (mut m, h) = match self_schedule_model(&g, kind, &prices) {
                Ok(x) => x,
                Err(e) => {
                    rep.fail(format!("{kind} {class:?} unit {unit_seed}: {e}"));
                    continue;
                }
            };
            if let Some(c) = corrupt {
                m = m.without_constraints(|row| c.drops(&row.tag));
            }
            let r = solve_lp(&m, &opts);
            if r.status != SolveStatus::Optimal {
                rep.fail(format!("{kind} {class:?} unit {unit_seed}: LP {:?}", r.status));
                continue;
            }
            let frac = h.max_fractionality(&r.primal);
            if frac > tol.integrality {
                rep.fail(format!("{kind} {class:?} unit {unit_seed}: fractional by {frac:.2e}"));
            } else if !close(r.objective, best, tol.objective) {
                rep.fail(format!(
                    "{kind} {class:?} unit {unit_seed}: LP {} vs enumeration {best}",
                    r.objective
                ));
            }
        }
    }
    rep
}

/// Checks one report's trace: the bound `Z' - P1` and the exact uplift at
/// flag-free solves never rise.
pub fn trace_is_monotone(report: &PricingRunReport, tol: &Tolerances) -> Result<(), String> {
    let Some(first) = report.trace.first() else {
        return Ok(());
    };
    let slack = tol.monotone * (1.0 + first.uplift_bound.abs());
    let mut bound = f64::INFINITY;
    let mut exact = f64::INFINITY;
    for e in &report.trace {
        if e.uplift_bound > bound + slack {
            return Err(format!("solve {}: bound rose {bound} -> {}", e.solve, e.uplift_bound));
        }
        bound = bound.min(e.uplift_bound);
        if let Some(u) = e.uplift {
            if u > exact + slack {
                return Err(format!("solve {}: uplift rose {exact} -> {u}", e.solve));
            }
            exact = exact.min(u);
        }
    }
    if report.uplift > exact + slack {
        return Err(format!("final uplift {} above trace {exact}", report.uplift));
    }
    Ok(())
}

/// Runs the iterative algorithms on each instance and checks every trace.
pub fn uplift_monotonicity(instances: &[SystemInstance], opts: &PricingOptions, tol: &Tolerances) -> CheckReport {
    let mut rep = CheckReport::new("uplift-monotonicity");
    let algs = [Algorithm::Ia1, Algorithm::Ia2, Algorithm::Iac1, Algorithm::Iac2];
    for inst in instances {
        match run_all(inst, &algs, opts) {
            Ok((_, reports)) => {
                for r in &reports {
                    rep.cases += 1;
                    if let Err(msg) = trace_is_monotone(r, tol) {
                        rep.fail(format!("{} {}: {msg}", inst.name, r.algorithm.name()));
                    }
                }
            }
            Err(e) => rep.fail(format!("{}: {e}", inst.name)),
        }
    }
    rep
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub seed: u64,
    pub per_class: usize,
    pub max_horizon: usize,
    pub corrupt: Option<Corruption>,
    pub tol: Tolerances,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            seed: 42,
            per_class: 50,
            max_horizon: 5,
            corrupt: None,
            tol: Tolerances::default(),
        }
    }
}

/// All generator-level suites plus monotonicity over `instances`.
pub fn run_suite(cfg: &SuiteConfig, instances: &[SystemInstance], opts: &PricingOptions) -> Vec<CheckReport> {
    vec![
        dp_vs_enumeration(cfg.seed, cfg.per_class, cfg.max_horizon, &cfg.tol),
        interval_lp_vs_dp(cfg.seed.wrapping_add(1), cfg.per_class, cfg.max_horizon, &cfg.tol),
        hull_integrality(cfg.seed.wrapping_add(2), cfg.per_class, cfg.max_horizon, cfg.corrupt, &cfg.tol),
        uplift_monotonicity(instances, opts, &cfg.tol),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_suites_pass() {
        let tol = Tolerances::default();
        assert!(dp_vs_enumeration(3, 10, 5, &tol).passed());
        assert!(interval_lp_vs_dp(4, 10, 5, &tol).passed());
        let r = hull_integrality(5, 10, 5, None, &tol);
        assert!(r.passed(), "{:?}", r.failures);
    }

    #[test]
    fn aggregated_cost_rows_give_fractional_vertices() {
        let r = hull_integrality(42, 200, 5, Some(Corruption::AggregatedCost), &Tolerances::default());
        assert!(r.failures.iter().any(|f| f.contains("fractional")), "{:?}", r.failures);
    }

    #[test]
    fn missing_min_up_rows_are_caught() {
        let r = hull_integrality(42, 50, 5, Some(Corruption::MissingMinUp), &Tolerances::default());
        assert!(!r.passed());
    }

    #[test]
    fn suites_are_deterministic() {
        let tol = Tolerances::default();
        let a = hull_integrality(9, 5, 4, None, &tol);
        let b = hull_integrality(9, 5, 4, None, &tol);
        assert_eq!(a.cases, b.cases);
        assert_eq!(a.failures, b.failures);
    }
}
