//! Generator formulations and system assembly.
//!
//! Status-based formulations (3-bin and the hulls for the first three
//! classes) live in `threebin`; the interval formulation used as the exact
//! hull for any unit lives in `intervals`.

mod intervals;
mod threebin;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use thiserror::Error;

use crate::algebra::{LinearModel, Sense, VarId};
use crate::instance::{GeneratorClass, GeneratorSpec, ShutdownCost, SystemInstance};

pub use intervals::{build_index_sets, build_p3, IntervalIndexSets};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FormKind {
    /// Status/start/stop MIP with every constraint family.
    ThreeBin,
    /// LP relaxation of `ThreeBin`.
    ThreeBinRelaxed,
    /// Relaxation used for general units before upgrading them.
    G4Relaxation,
    D1,
    D2,
    D3,
    /// Interval formulation, continuous.
    D4,
    /// Interval formulation with binary arcs.
    D4Integral,
}

impl FormKind {
    pub fn is_interval(self) -> bool {
        matches!(self, FormKind::D4 | FormKind::D4Integral)
    }

    /// Exact hull for a class.
    pub fn hull_for(class: GeneratorClass) -> FormKind {
        match class {
            GeneratorClass::G1 => FormKind::D1,
            GeneratorClass::G2 => FormKind::D2,
            GeneratorClass::G3 => FormKind::D3,
            GeneratorClass::G4 => FormKind::D4,
        }
    }

    /// Starting formulation in the relaxed pricing LP. Units whose shut-down
    /// cost depends on duration go straight to the interval hull because the
    /// status model cannot price them.
    pub fn relaxation_for(g: &GeneratorSpec, class: GeneratorClass) -> FormKind {
        match class {
            GeneratorClass::G4 if matches!(g.shutdown_cost, ShutdownCost::Steps(_)) => FormKind::D4,
            GeneratorClass::G4 => FormKind::G4Relaxation,
            c => FormKind::hull_for(c),
        }
    }

    /// Formulation used inside the unit-commitment MIP.
    pub fn mip_for(class: GeneratorClass) -> FormKind {
        match class {
            GeneratorClass::G4 => FormKind::D4Integral,
            _ => FormKind::ThreeBin,
        }
    }
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormKind::ThreeBin => "3bin",
            FormKind::ThreeBinRelaxed => "3bin-lp",
            FormKind::G4Relaxation => "g4-relax",
            FormKind::D1 => "d1",
            FormKind::D2 => "d2",
            FormKind::D3 => "d3",
            FormKind::D4 => "d4",
            FormKind::D4Integral => "d4-int",
        })
    }
}

impl FromStr for FormKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "3bin" => FormKind::ThreeBin,
            "3bin-lp" => FormKind::ThreeBinRelaxed,
            "g4-relax" => FormKind::G4Relaxation,
            "d1" => FormKind::D1,
            "d2" => FormKind::D2,
            "d3" => FormKind::D3,
            "d4" => FormKind::D4,
            "d4-int" => FormKind::D4Integral,
            other => return Err(format!("unknown formulation `{other}`")),
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HullError {
    #[error("generator `{0}`: duration-dependent shut-down cost needs the interval formulation")]
    DurationShutdownCost(String),
    #[error("generator `{id}`: {kind} does not apply ({reason})")]
    ClassMismatch { id: String, kind: FormKind, reason: &'static str },
    #[error("point field `{field}` has length {found}, expected {expected}")]
    PointLength { field: &'static str, expected: usize, found: usize },
    #[error("generator `{id}` has horizon {found}, system has {expected}")]
    HorizonMismatch { id: String, expected: usize, found: usize },
    #[error("expected {expected} formulation kinds, got {found}")]
    KindCount { expected: usize, found: usize },
}

/// Variables of a status-based formulation, one entry per period.
#[derive(Clone, Debug)]
pub struct StatusVars {
    pub u: Vec<VarId>,
    pub v: Vec<VarId>,
    pub e: Vec<VarId>,
    pub x: Vec<VarId>,
    pub f: Vec<VarId>,
    /// Start-up state shares, present only for multi-state units.
    pub delta: Vec<Vec<VarId>>,
}

/// Variables of the interval formulation plus its linear image in status space.
#[derive(Clone, Debug)]
pub struct IntervalVars {
    pub sets: IntervalIndexSets,
    pub w: Vec<(usize, VarId)>,
    pub y: Vec<((usize, usize), VarId)>,
    pub z: Vec<((usize, usize), VarId)>,
    pub theta: Vec<(usize, VarId)>,
    pub q: Vec<((usize, usize), Vec<VarId>)>,
    pub u_map: Vec<Vec<(VarId, f64)>>,
    pub v_map: Vec<Vec<(VarId, f64)>>,
    pub e_map: Vec<Vec<(VarId, f64)>>,
    pub f_map: Vec<Vec<(VarId, f64)>>,
}

/// Where one generator's formulation sits inside a model.
#[derive(Clone, Debug)]
pub struct GenHandle {
    pub gen_index: usize,
    pub id: String,
    pub kind: FormKind,
    /// Output in period `t` as a linear expression.
    pub output: Vec<Vec<(VarId, f64)>>,
    pub status: Option<StatusVars>,
    pub intervals: Option<IntervalVars>,
    pub vars: Range<usize>,
    pub rows: Range<usize>,
}

/// A point in status space `(x, f, u, v, e)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StatusPoint {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub e: Vec<f64>,
}

fn eval(terms: &[(VarId, f64)], primal: &[f64]) -> f64 {
    terms.iter().map(|&(v, c)| c * primal[v.0]).sum()
}

fn frac(x: f64) -> f64 {
    (x - x.round()).abs()
}

impl GenHandle {
    /// Status-space image of a primal vector.
    pub fn status_point(&self, primal: &[f64]) -> StatusPoint {
        let t_max = self.output.len();
        let x: Vec<f64> = self.output.iter().map(|terms| eval(terms, primal)).collect();
        if let Some(s) = &self.status {
            let pick = |vs: &[VarId]| vs.iter().map(|v| primal[v.0]).collect::<Vec<_>>();
            return StatusPoint {
                x,
                f: pick(&s.f),
                u: pick(&s.u),
                v: pick(&s.v),
                e: pick(&s.e),
            };
        }
        let iv = self.intervals.as_ref().expect("handle has one representation");
        let map = |m: &[Vec<(VarId, f64)>]| (0..t_max).map(|t| eval(&m[t], primal)).collect::<Vec<_>>();
        StatusPoint {
            x,
            f: map(&iv.f_map),
            u: map(&iv.u_map),
            v: map(&iv.v_map),
            e: map(&iv.e_map),
        }
    }

    /// Variables that are binary in the integral version of this formulation.
    pub fn decision_vars(&self) -> Vec<VarId> {
        if let Some(s) = &self.status {
            return s.u.iter().chain(&s.v).chain(&s.e).copied().collect();
        }
        let iv = self.intervals.as_ref().expect("handle has one representation");
        iv.w.iter()
            .map(|p| p.1)
            .chain(iv.y.iter().map(|p| p.1))
            .chain(iv.z.iter().map(|p| p.1))
            .chain(iv.theta.iter().map(|p| p.1))
            .collect()
    }

    /// Largest distance to the nearest integer over the decision variables.
    pub fn max_fractionality(&self, primal: &[f64]) -> f64 {
        self.decision_vars()
            .iter()
            .map(|v| frac(primal[v.0]))
            .fold(0.0, f64::max)
    }

    /// Fractionality of the status-space image (`u`, `v`, `e`).
    pub fn status_fractionality(&self, primal: &[f64]) -> f64 {
        let p = self.status_point(primal);
        p.u.iter().chain(&p.v).chain(&p.e).map(|&x| frac(x)).fold(0.0, f64::max)
    }
}

/// Appends one generator's formulation. Class-specific hulls reject units
/// outside their class.
pub fn build_generator(
    model: &mut LinearModel,
    g: &GeneratorSpec,
    gen_index: usize,
    kind: FormKind,
) -> Result<GenHandle, HullError> {
    let class = crate::instance::classify(g);
    let reject = |reason| {
        Err(HullError::ClassMismatch {
            id: g.id.clone(),
            kind,
            reason,
        })
    };
    match kind {
        FormKind::D1 if class != GeneratorClass::G1 => return reject("needs a class G1 unit"),
        FormKind::D2 if !matches!(class, GeneratorClass::G1 | GeneratorClass::G2) => {
            return reject("needs a class G1 or G2 unit")
        }
        FormKind::D4 => return Ok(intervals::build(model, g, gen_index, false)),
        FormKind::D4Integral => return Ok(intervals::build(model, g, gen_index, true)),
        _ => {}
    }
    let lower_bound = matches!(kind, FormKind::G4Relaxation | FormKind::ThreeBinRelaxed);
    threebin::build(model, g, gen_index, kind, lower_bound)
}

/// A single-generator model minimising cost minus `price · output`.
pub fn self_schedule_model(
    g: &GeneratorSpec,
    kind: FormKind,
    price: &[f64],
) -> Result<(LinearModel, GenHandle), HullError> {
    if price.len() != g.horizon {
        return Err(HullError::PointLength {
            field: "price",
            expected: g.horizon,
            found: price.len(),
        });
    }
    let mut m = LinearModel::new();
    let h = build_generator(&mut m, g, 0, kind)?;
    for (t, terms) in h.output.iter().enumerate() {
        let scaled: Vec<(VarId, f64)> = terms.iter().map(|&(v, c)| (v, -price[t] * c)).collect();
        m.add_objective(&scaled, 0.0);
    }
    Ok((m, h))
}

/// Assembled system model with the coupling rows whose duals are prices.
#[derive(Clone, Debug)]
pub struct SystemModel {
    pub model: LinearModel,
    pub handles: Vec<GenHandle>,
    /// Balance row per period.
    pub balance_rows: Vec<usize>,
    /// Per line and period: (upper-limit row, lower-limit row), both `>=`.
    pub line_rows: Vec<Vec<(usize, usize)>>,
}

impl SystemModel {
    /// All coupling rows in a fixed order: balance rows, then line rows by
    /// line, period and direction.
    pub fn system_rows(&self) -> Vec<usize> {
        let mut rows = self.balance_rows.clone();
        for line in &self.line_rows {
            for &(a, b) in line {
                rows.push(a);
                rows.push(b);
            }
        }
        rows
    }
}

/// Coefficient of unit output at `bus` in each coupling row, same order as
/// [`SystemModel::system_rows`], for period `t` (1-based).
pub fn coupling_coefficients(inst: &SystemInstance, bus: usize, t: usize) -> Vec<(usize, f64)> {
    let t_max = inst.horizon;
    let mut out = vec![(t - 1, 1.0)];
    for (l, line) in inst.lines.iter().enumerate() {
        let base = t_max + 2 * (l * t_max + (t - 1));
        let e = line.shift_factors[bus];
        out.push((base, -e));
        out.push((base + 1, e));
    }
    out
}

/// Right-hand sides of the coupling rows, same order as `system_rows`.
pub fn coupling_rhs(inst: &SystemInstance) -> Vec<f64> {
    let mut rhs = inst.demand.clone();
    for line in &inst.lines {
        for t in 0..inst.horizon {
            let flow = load_flow(inst, line, t);
            rhs.push(-flow - line.limit);
            rhs.push(flow - line.limit);
        }
    }
    rhs
}

/// Flow contribution of the loads on `line` in 0-based period `t`.
fn load_flow(inst: &SystemInstance, line: &crate::instance::Line, t: usize) -> f64 {
    inst.buses
        .iter()
        .zip(&line.shift_factors)
        .map(|(b, e)| e * b.load_share * inst.demand[t])
        .sum()
}

/// Builds every generator with its given formulation plus the balance and
/// line rows. Line rows bound `sum_b E_lb (gen_b - load_b)` on both sides.
pub fn build_system(inst: &SystemInstance, kinds: &[FormKind]) -> Result<SystemModel, HullError> {
    if kinds.len() != inst.generators.len() {
        return Err(HullError::KindCount {
            expected: inst.generators.len(),
            found: kinds.len(),
        });
    }
    let mut model = LinearModel::new();
    let mut handles = Vec::with_capacity(kinds.len());
    for (i, (g, &kind)) in inst.generators.iter().zip(kinds).enumerate() {
        if g.horizon != inst.horizon {
            return Err(HullError::HorizonMismatch {
                id: g.id.clone(),
                expected: inst.horizon,
                found: g.horizon,
            });
        }
        handles.push(build_generator(&mut model, g, i, kind)?);
    }
    let t_max = inst.horizon;
    let mut balance_rows = Vec::with_capacity(t_max);
    for t in 0..t_max {
        let terms: Vec<(VarId, f64)> = handles.iter().flat_map(|h| h.output[t].iter().copied()).collect();
        balance_rows.push(model.row(&terms, Sense::Eq, inst.demand[t], format!("sys.balance.{}", t + 1)));
    }
    let mut line_rows = Vec::new();
    for (l, line) in inst.lines.iter().enumerate() {
        let mut rows = Vec::with_capacity(t_max);
        for t in 0..t_max {
            let flow = load_flow(inst, line, t);
            let mut terms = Vec::new();
            for h in &handles {
                let bus = inst.bus_index(&inst.generators[h.gen_index].bus).unwrap_or(0);
                let e = line.shift_factors[bus];
                for &(v, c) in &h.output[t] {
                    terms.push((v, -e * c));
                }
            }
            let neg: Vec<(VarId, f64)> = terms.iter().map(|&(v, c)| (v, -c)).collect();
            let up = model.row(&terms, Sense::Ge, -flow - line.limit, format!("sys.line.{}.{}.up", l + 1, t + 1));
            let dn = model.row(&neg, Sense::Ge, flow - line.limit, format!("sys.line.{}.{}.dn", l + 1, t + 1));
            rows.push((up, dn));
        }
        line_rows.push(rows);
    }
    Ok(SystemModel {
        model,
        handles,
        balance_rows,
        line_rows,
    })
}

#[cfg(test)]
mod tests;
