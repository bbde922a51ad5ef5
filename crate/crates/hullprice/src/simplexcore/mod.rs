//! Embedded LP and MIP solver over [`LinearModel`].
//!
//! `solve_lp` runs a bounded-variable primal simplex (Dantzig pricing, Bland's
//! rule after a run of degenerate pivots) and returns basis duals. Row duals
//! follow the minimisation convention: `>=` rows have nonnegative duals, `<=`
//! rows nonpositive. Alternate optimal duals are equally valid; callers compare
//! objective-level quantities, never raw dual vectors.

mod bnb;
mod factor;
mod primal;
mod problem;

use std::time::Duration;

use crate::algebra::{LinearModel, Sense, VarKind};
use crate::clock::Stopwatch;

pub use primal::BasisState;
use problem::LpProblem;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branching {
    MostFractional,
    PseudoCost,
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub mip_gap: f64,
    pub iteration_limit: usize,
    pub time_limit: Option<Duration>,
    pub node_limit: usize,
    pub branching: Branching,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    /// Integrality tolerance for branch-and-bound.
    pub integrality_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            feasibility_tol: 1e-7,
            optimality_tol: 1e-7,
            mip_gap: 1e-3,
            iteration_limit: 1_000_000,
            time_limit: None,
            node_limit: 200_000,
            branching: Branching::MostFractional,
            bland_after: 1000,
            integrality_tol: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub primal: Vec<f64>,
    /// One dual per constraint (LP solves only; empty for MIP).
    pub dual: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    /// Best proven lower bound; equals `objective` for LPs.
    pub best_bound: f64,
    pub iterations: usize,
    pub nodes: usize,
    pub elapsed: Duration,
    pub basis: Option<BasisState>,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, v: crate::algebra::VarId) -> f64 {
        self.primal[v.0]
    }

    /// Relative MIP gap in the absolute-plus-relative convention.
    pub fn gap(&self) -> f64 {
        (self.objective - self.best_bound).max(0.0) / (1.0 + self.objective.abs().max(self.best_bound.abs()))
    }
}

/// `|a - b| <= tol * (1 + max(|a|, |b|))`
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

/// Solves the continuous relaxation of `model` (binaries become `[0,1]` boxes).
pub fn solve_lp(model: &LinearModel, options: &SolverOptions) -> SolveResult {
    solve_lp_warm(model, options, None)
}

pub fn solve_lp_warm(model: &LinearModel, options: &SolverOptions, warm: Option<&BasisState>) -> SolveResult {
    let clock = Stopwatch::start();
    let p = LpProblem::from_model(model);
    let mut r = lp_on_problem(&p, model, &p.lower, &p.upper, options, warm);
    r.elapsed = clock.elapsed();
    r
}

fn lp_on_problem(
    p: &LpProblem,
    model: &LinearModel,
    lower: &[f64],
    upper: &[f64],
    options: &SolverOptions,
    warm: Option<&BasisState>,
) -> SolveResult {
    let out = primal::solve(p, lower, upper, warm, options);
    let n = p.n;
    let mut primal_x = out.x;
    primal_x.truncate(n);
    let objective = if out.status == SolveStatus::Optimal {
        model.objective_value(&primal_x)
    } else {
        f64::NAN
    };
    SolveResult {
        status: out.status,
        primal: primal_x,
        dual: out.y,
        reduced_costs: out.d,
        objective,
        best_bound: objective,
        iterations: out.iterations,
        nodes: 0,
        elapsed: Duration::ZERO,
        basis: out.basis,
    }
}

/// Branch-and-bound over the binary variables of `model`.
pub fn solve_mip(model: &LinearModel, options: &SolverOptions) -> SolveResult {
    if !model.has_integers() {
        return solve_lp(model, options);
    }
    bnb::branch_and_bound(model, options)
}

/// Optimality certificate of an LP solve, measured against the model.
#[derive(Clone, Debug, Default)]
pub struct Certificate {
    pub primal_violation: f64,
    /// Worst dual sign violation relative to each row's sense.
    pub dual_sign_violation: f64,
    /// Worst `|dual * slack| / (1 + |rhs|)` over rows.
    pub row_complementarity: f64,
    /// Worst reduced-cost violation at variable bounds.
    pub bound_complementarity: f64,
    /// `|primal objective - dual objective| / (1 + |objective|)`.
    pub duality_gap: f64,
}

impl Certificate {
    pub fn holds(&self, tol: f64) -> bool {
        self.primal_violation <= tol
            && self.dual_sign_violation <= tol
            && self.row_complementarity <= tol
            && self.bound_complementarity <= tol
            && self.duality_gap <= tol
    }
}

/// Recomputes duality conditions from scratch for an optimal LP result.
pub fn certificate(model: &LinearModel, r: &SolveResult) -> Certificate {
    let x = &r.primal;
    let y = &r.dual;
    let mut c = Certificate {
        primal_violation: model.max_violation(x),
        ..Default::default()
    };
    let n = model.num_vars();
    // Reduced costs from the row duals.
    let mut d: Vec<f64> = model.objective_dense().to_vec();
    let mut dual_obj = model.objective_constant();
    for (i, row) in model.constraints().iter().enumerate() {
        let yi = y[i];
        for &(v, a) in &row.coeffs {
            d[v.0] -= a * yi;
        }
        let sign_viol = match row.sense {
            Sense::Ge => (-yi).max(0.0),
            Sense::Le => yi.max(0.0),
            Sense::Eq => 0.0,
        };
        c.dual_sign_violation = c.dual_sign_violation.max(sign_viol);
        let slack = row.activity(x) - row.rhs;
        let comp = (yi * slack).abs() / (1.0 + row.rhs.abs());
        c.row_complementarity = c.row_complementarity.max(comp);
        dual_obj += yi * row.rhs;
    }
    for j in 0..n {
        let v = &model.variables()[j];
        let dj = d[j];
        // Reduced cost must push toward an active bound.
        let at_lower = v.lower.is_finite() && (x[j] - v.lower).abs() <= 1e-7 * (1.0 + v.lower.abs());
        let at_upper = v.upper.is_finite() && (x[j] - v.upper).abs() <= 1e-7 * (1.0 + v.upper.abs());
        let viol = if at_lower && at_upper {
            0.0
        } else if at_lower {
            (-dj).max(0.0)
        } else if at_upper {
            dj.max(0.0)
        } else {
            dj.abs()
        };
        let scale = 1.0 + model.objective_dense()[j].abs();
        c.bound_complementarity = c.bound_complementarity.max(viol / scale);
        if dj > 0.0 && v.lower.is_finite() {
            dual_obj += dj * v.lower;
        } else if dj < 0.0 && v.upper.is_finite() {
            dual_obj += dj * v.upper;
        } else if at_lower {
            dual_obj += dj * v.lower;
        } else if at_upper {
            dual_obj += dj * v.upper;
        }
    }
    let _ = VarKind::Continuous;
    c.duality_gap = (r.objective - dual_obj).abs() / (1.0 + r.objective.abs());
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{LinearModel, Sense};

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn one_dimensional_lp() {
        let mut m = LinearModel::new();
        let x = m.var_cont("x", 0.0, 10.0);
        m.row(&[(x, 1.0)], Sense::Ge, 3.0, "x>=3");
        m.set_objective(&[(x, 1.0)], 0.0).unwrap();
        let r = solve_lp(&m, &opts());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 3.0).abs() < 1e-9);
        assert!((r.dual[0] - 1.0).abs() < 1e-9);
        assert!(certificate(&m, &r).holds(1e-6));
    }

    #[test]
    fn le_row_dual_is_nonpositive() {
        let mut m = LinearModel::new();
        let x = m.var_cont("x", 0.0, f64::INFINITY);
        let y = m.var_cont("y", 0.0, f64::INFINITY);
        m.row(&[(x, 1.0), (y, 1.0)], Sense::Le, 1.0, "cap");
        m.set_objective(&[(x, -1.0), (y, -1.0)], 0.0).unwrap();
        let r = solve_lp(&m, &opts());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective + 1.0).abs() < 1e-9);
        assert!((r.dual[0] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded_are_statuses() {
        let mut m = LinearModel::new();
        let x = m.var_cont("x", 0.0, 1.0);
        m.row(&[(x, 1.0)], Sense::Ge, 2.0, "r");
        assert_eq!(solve_lp(&m, &opts()).status, SolveStatus::Infeasible);

        let mut m = LinearModel::new();
        let x = m.var_cont("x", 0.0, f64::INFINITY);
        let y = m.var_cont("y", f64::NEG_INFINITY, f64::INFINITY);
        m.row(&[(x, 1.0), (y, -1.0)], Sense::Ge, 0.0, "r");
        m.set_objective(&[(x, -1.0)], 0.0).unwrap();
        assert_eq!(solve_lp(&m, &opts()).status, SolveStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x + 2y  s.t. x + y = 4, x - y >= -2, y free, x in [0, 3]
        let mut m = LinearModel::new();
        let x = m.var_cont("x", 0.0, 3.0);
        let y = m.var_cont("y", f64::NEG_INFINITY, f64::INFINITY);
        m.row(&[(x, 1.0), (y, 1.0)], Sense::Eq, 4.0, "sum");
        m.row(&[(x, 1.0), (y, -1.0)], Sense::Ge, -2.0, "diff");
        m.set_objective(&[(x, 1.0), (y, 2.0)], 0.5).unwrap();
        let r = solve_lp(&m, &opts());
        assert_eq!(r.status, SolveStatus::Optimal);
        // x = 3, y = 1 -> 3 + 2 + 0.5
        assert!((r.objective - 5.5).abs() < 1e-9, "{}", r.objective);
        assert!(certificate(&m, &r).holds(1e-6));
    }

    #[test]
    fn degenerate_redundant_rows() {
        let mut m = LinearModel::new();
        let x = m.var_cont("x", 0.0, f64::INFINITY);
        let y = m.var_cont("y", 0.0, f64::INFINITY);
        for k in 0..5 {
            m.row(&[(x, 1.0), (y, 1.0)], Sense::Ge, 2.0, format!("dup{k}"));
            m.row(&[(x, 2.0), (y, 2.0)], Sense::Ge, 4.0, format!("dbl{k}"));
        }
        m.row(&[(x, 1.0), (y, -1.0)], Sense::Eq, 0.0, "sym");
        m.set_objective(&[(x, 1.0), (y, 1.0)], 0.0).unwrap();
        let r = solve_lp(&m, &opts());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 2.0).abs() < 1e-9);
        assert!(certificate(&m, &r).holds(1e-6));
    }

    #[test]
    fn binary_lower_bound_rounds_up() {
        let mut m = LinearModel::new();
        let x = m.var_bin("x");
        m.row(&[(x, 1.0)], Sense::Ge, 0.5, "half");
        m.set_objective(&[(x, 1.0)], 0.0).unwrap();
        let r = solve_mip(&m, &opts());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn knapsack_pick_best() {
        let mut m = LinearModel::new();
        let a = m.var_bin("a");
        let b = m.var_bin("b");
        m.row(&[(a, 1.0), (b, 1.0)], Sense::Le, 1.0, "one");
        m.set_objective(&[(a, -3.0), (b, -2.0)], 0.0).unwrap();
        let r = solve_mip(&m, &opts());
        assert!((r.objective + 3.0).abs() < 1e-9);
        assert!(r.objective >= r.best_bound - 1e-9);
    }
}
