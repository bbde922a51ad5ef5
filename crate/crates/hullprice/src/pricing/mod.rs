//! Pricing algorithms and uplift accounting.
//!
//! Every algorithm produces a dual vector over the coupling rows (balance,
//! then line limits) and is scored the same way: uplift is the MIP incumbent
//! cost minus the Lagrangian value at that vector, where each unit's
//! self-schedule term comes from the exact dynamic program.

mod algorithms;
mod report;

use std::time::Duration;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::LinearModel;
use crate::hulls::{self, coupling_coefficients, coupling_rhs, FormKind, HullError, SystemModel};
use crate::instance::SystemInstance;
use crate::oracle::{dp_self_schedule, OracleError};
use crate::simplexcore::{solve_lp, SolveResult, SolveStatus, SolverOptions};

pub use algorithms::{
    compute_lmp, run_all, run_complementary, run_ia, run_opt, run_tlp, solve_uc, IaState, UcSolution,
};
pub use report::{render_table, PricingRunReport, TraceEntry};

#[derive(Debug, Error)]
pub enum PricingError {
    #[error(transparent)]
    Hull(#[from] HullError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("unit-commitment MIP is infeasible")]
    MipInfeasible,
    #[error("unit-commitment MIP stopped without an incumbent ({0:?})")]
    MipNoIncumbent(SolveStatus),
    #[error("{stage}: LP solve ended with status {status:?}")]
    LpFailed { stage: &'static str, status: SolveStatus },
    #[error("price vectors differ in length ({left} vs {right})")]
    Dimension { left: usize, right: usize },
    #[error("generator `{id}`: interval model needs {size} variables, cap is {cap}")]
    TooLarge { id: String, size: usize, cap: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Lmp,
    Tlp,
    Ia1,
    Ia2,
    Iac1,
    Iac2,
    Opt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Lmp,
        Algorithm::Tlp,
        Algorithm::Ia1,
        Algorithm::Ia2,
        Algorithm::Iac1,
        Algorithm::Iac2,
        Algorithm::Opt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Lmp => "LMP",
            Algorithm::Tlp => "TLP",
            Algorithm::Ia1 => "IA1",
            Algorithm::Ia2 => "IA2",
            Algorithm::Iac1 => "IAC1",
            Algorithm::Iac2 => "IAC2",
            Algorithm::Opt => "OPT",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown algorithm `{s}`"))
    }
}

/// Stopping rules of the complementary search.
#[derive(Clone, Debug, Default)]
pub struct IacOptions {
    /// Worker groups; `None` uses one group per candidate, capped at the
    /// available parallelism.
    pub workers: Option<usize>,
    /// Stop after this many accepted upgrades.
    pub n_stop: Option<usize>,
    pub time_limit: Option<Duration>,
}

#[derive(Clone, Debug)]
pub struct PricingOptions {
    pub solver: SolverOptions,
    /// Distance from the nearest integer that counts as fractional.
    pub frac_tol: f64,
    /// Relative improvement a complementary upgrade must achieve.
    pub improve_tol: f64,
    /// Cap on relaxed-LP solves per run.
    pub max_iterations: usize,
    pub iac: IacOptions,
    /// Cap on interval-model variables per generator.
    pub max_interval_vars: usize,
}

impl Default for PricingOptions {
    fn default() -> Self {
        PricingOptions {
            solver: SolverOptions::default(),
            frac_tol: 1e-5,
            improve_tol: 1e-6,
            max_iterations: 500,
            iac: IacOptions::default(),
            max_interval_vars: 200_000,
        }
    }
}

/// `Z' - Z_C`: uplift implied by an upper bound on the MIP cost and a
/// Lagrangian value.
pub fn compute_uplift(z_qip_upper: f64, z_c: f64) -> f64 {
    z_qip_upper - z_c
}

/// Mean absolute componentwise difference.
pub fn price_difference(a: &[f64], b: &[f64]) -> Result<f64, PricingError> {
    if a.len() != b.len() {
        return Err(PricingError::Dimension {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64)
}

/// Unit price seen by each generator: `pi[i][t]`.
pub fn unit_prices(inst: &SystemInstance, duals: &[f64]) -> Vec<Vec<f64>> {
    inst.generators
        .iter()
        .map(|g| {
            let bus = inst.bus_index(&g.bus).unwrap_or(0);
            (1..=inst.horizon)
                .map(|t| coupling_coefficients(inst, bus, t).iter().map(|&(r, c)| duals[r] * c).sum())
                .collect()
        })
        .collect()
}

/// Price at every bus and period, `[t][bus]`.
pub fn bus_prices(inst: &SystemInstance, duals: &[f64]) -> Vec<Vec<f64>> {
    (1..=inst.horizon)
        .map(|t| {
            (0..inst.buses.len())
                .map(|b| coupling_coefficients(inst, b, t).iter().map(|&(r, c)| duals[r] * c).sum())
                .collect()
        })
        .collect()
}

/// Pricing formulations with the units named in `gamma` on the interval hull.
pub fn formulation_kinds(inst: &SystemInstance, gamma: &[String]) -> Vec<FormKind> {
    inst.generators
        .iter()
        .map(|g| {
            if gamma.contains(&g.id) {
                FormKind::D4
            } else {
                FormKind::relaxation_for(g, crate::instance::classify(g))
            }
        })
        .collect()
}

/// Exact convex-hull formulation of every unit.
pub fn hull_kinds(inst: &SystemInstance) -> Vec<FormKind> {
    inst.generators
        .iter()
        .map(|g| FormKind::hull_for(crate::instance::classify(g)))
        .collect()
}

/// Lagrangian value from the exact per-unit oracle.
#[derive(Clone, Debug, Serialize)]
pub struct OracleLagrangian {
    pub z_c: f64,
    /// Minimum net cost of each unit's self-schedule.
    pub unit_values: Vec<f64>,
    /// `gamma^T rhs`.
    pub constant: f64,
}

pub fn oracle_lagrangian(inst: &SystemInstance, duals: &[f64]) -> Result<OracleLagrangian, PricingError> {
    let prices = unit_prices(inst, duals);
    let constant: f64 = coupling_rhs(inst).iter().zip(duals).map(|(b, y)| b * y).sum();
    let values: Result<Vec<f64>, OracleError> = par_map(inst.generators.len(), |i| {
        dp_self_schedule(&inst.generators[i], &prices[i]).map(|(s, _)| s.net_cost)
    })
    .into_iter()
    .collect();
    let unit_values = values?;
    Ok(OracleLagrangian {
        z_c: constant + unit_values.iter().sum::<f64>(),
        unit_values,
        constant,
    })
}

/// One unit's relaxed self-schedule solve.
#[derive(Clone, Debug, Serialize)]
pub struct UnitLp {
    pub value: f64,
    pub fractionality: f64,
}

/// Lagrangian value over the given formulations, one LP per unit.
#[derive(Clone, Debug, Serialize)]
pub struct LpLagrangian {
    pub z_c: f64,
    pub units: Vec<UnitLp>,
    /// Units whose relaxation returned a fractional schedule.
    pub fractional: Vec<usize>,
}

pub fn lagrangian_value(
    inst: &SystemInstance,
    kinds: &[FormKind],
    duals: &[f64],
    opts: &PricingOptions,
) -> Result<LpLagrangian, PricingError> {
    let prices = unit_prices(inst, duals);
    let constant: f64 = coupling_rhs(inst).iter().zip(duals).map(|(b, y)| b * y).sum();
    let solved: Vec<Result<UnitLp, PricingError>> = par_map(inst.generators.len(), |i| {
        let (m, h) = hulls::self_schedule_model(&inst.generators[i], kinds[i], &prices[i])?;
        let r = lp(&m, &opts.solver, "self-schedule")?;
        Ok(UnitLp {
            value: r.objective,
            fractionality: h.status_fractionality(&r.primal).max(h.max_fractionality(&r.primal)),
        })
    });
    let units = solved.into_iter().collect::<Result<Vec<_>, _>>()?;
    let fractional = units
        .iter()
        .enumerate()
        .filter(|(_, u)| u.fractionality > opts.frac_tol)
        .map(|(i, _)| i)
        .collect();
    Ok(LpLagrangian {
        z_c: constant + units.iter().map(|u| u.value).sum::<f64>(),
        units,
        fractional,
    })
}

/// A solved relaxed pricing LP.
#[derive(Clone, Debug)]
pub struct RelaxedSolve {
    pub system: SystemModel,
    pub result: SolveResult,
    /// Duals of the coupling rows.
    pub duals: Vec<f64>,
}

pub fn solve_relaxed(
    inst: &SystemInstance,
    kinds: &[FormKind],
    opts: &PricingOptions,
) -> Result<RelaxedSolve, PricingError> {
    guard_size(inst, kinds, opts)?;
    let system = hulls::build_system(inst, kinds)?;
    let result = lp(&system.model, &opts.solver, "relaxed pricing LP")?;
    let duals = system.system_rows().iter().map(|&r| result.dual[r]).collect();
    Ok(RelaxedSolve { system, result, duals })
}

fn guard_size(inst: &SystemInstance, kinds: &[FormKind], opts: &PricingOptions) -> Result<(), PricingError> {
    for (g, k) in inst.generators.iter().zip(kinds) {
        if k.is_interval() {
            let sets = hulls::build_index_sets(g);
            let size: usize = sets.tk1.iter().chain(&sets.tk2).map(|&(t, k)| 2 * (k - t + 1) + 1).sum::<usize>()
                + sets.kt.len()
                + sets.theta_domain.len();
            if size > opts.max_interval_vars {
                return Err(PricingError::TooLarge {
                    id: g.id.clone(),
                    size,
                    cap: opts.max_interval_vars,
                });
            }
        }
    }
    Ok(())
}

fn lp(model: &LinearModel, opts: &SolverOptions, stage: &'static str) -> Result<SolveResult, PricingError> {
    let r = solve_lp(model, opts);
    if r.status != SolveStatus::Optimal {
        return Err(PricingError::LpFailed { stage, status: r.status });
    }
    Ok(r)
}

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests;
