//! Sparse LP/MIP models shared by the formulation builders and the solver.
//!
//! Models are append-only: variables and constraints are never removed once
//! added, so a [`VarId`] or constraint index stays valid for the model's life.

mod lp_format;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use lp_format::export_lp_text;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("duplicate constraint tag `{0}`")]
    DuplicateTag(String),
    #[error("unknown variable index {0}")]
    UnknownVariable(usize),
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
    #[error("invalid bounds [{lower}, {upper}] for `{name}`")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("value {value} for `{name}` outside bounds [{lower}, {upper}]")]
    FixOutOfBounds {
        name: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: String,
}

impl Constraint {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| a * x[v.0]).sum()
    }
}

/// Minimisation model: `min c'x + c0` over variables with bounds and rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearModel {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<f64>,
    objective_constant: f64,
    tags: HashMap<String, usize>,
}

pub fn new_model() -> LinearModel {
    LinearModel::default()
}

impl LinearModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn constraint(&self, index: usize) -> &Constraint {
        &self.constraints[index]
    }

    pub fn constraint_index(&self, tag: &str) -> Option<usize> {
        self.tags.get(tag).copied()
    }

    /// Nonzero objective coefficients in variable order.
    pub fn objective(&self) -> Vec<(VarId, f64)> {
        self.objective
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(j, &c)| (VarId(j), c))
            .collect()
    }

    pub fn objective_coeff(&self, id: VarId) -> f64 {
        self.objective[id.0]
    }

    /// Dense objective vector, one entry per variable.
    pub fn objective_dense(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    pub fn has_integers(&self) -> bool {
        self.variables.iter().any(|v| v.kind == VarKind::Binary)
    }

    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY {
            return Err(ModelError::InvalidBounds { name, lower, upper });
        }
        self.variables.push(Variable {
            name,
            lower,
            upper,
            kind,
        });
        self.objective.push(0.0);
        Ok(VarId(self.variables.len() - 1))
    }

    /// Infallible variant used by builders whose bounds are valid by construction.
    pub fn var_cont(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.add_variable(name, lower, upper, VarKind::Continuous)
            .expect("builder produced invalid bounds")
    }

    pub fn var_bin(&mut self, name: impl Into<String>) -> VarId {
        self.add_variable(name, 0.0, 1.0, VarKind::Binary)
            .expect("binary bounds are valid")
    }

    /// Appends a row; duplicate variables in `coeffs` are merged and zeros dropped.
    pub fn add_constraint(
        &mut self,
        coeffs: &[(VarId, f64)],
        sense: Sense,
        rhs: f64,
        tag: impl Into<String>,
    ) -> Result<usize, ModelError> {
        let tag = tag.into();
        if self.tags.contains_key(&tag) {
            return Err(ModelError::DuplicateTag(tag));
        }
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite(tag));
        }
        let merged = self.merge(coeffs, &tag)?;
        self.tags.insert(tag.clone(), self.constraints.len());
        self.constraints.push(Constraint {
            coeffs: merged,
            sense,
            rhs,
            tag,
        });
        Ok(self.constraints.len() - 1)
    }

    /// Builder shorthand; panics only on duplicate tags, which are builder bugs.
    pub fn row(&mut self, coeffs: &[(VarId, f64)], sense: Sense, rhs: f64, tag: impl Into<String>) -> usize {
        self.add_constraint(coeffs, sense, rhs, tag)
            .unwrap_or_else(|e| panic!("formulation builder error: {e}"))
    }

    /// Copy without the rows matching `drop`. Row indices shift accordingly.
    pub fn without_constraints(&self, drop: impl Fn(&Constraint) -> bool) -> LinearModel {
        let mut out = self.clone();
        out.constraints.retain(|c| !drop(c));
        out.tags = out.constraints.iter().enumerate().map(|(i, c)| (c.tag.clone(), i)).collect();
        out
    }

    pub fn set_objective(&mut self, coeffs: &[(VarId, f64)], constant: f64) -> Result<(), ModelError> {
        if !constant.is_finite() {
            return Err(ModelError::NonFinite("objective".into()));
        }
        let merged = self.merge(coeffs, "objective")?;
        self.objective.iter_mut().for_each(|c| *c = 0.0);
        for (v, c) in merged {
            self.objective[v.0] = c;
        }
        self.objective_constant = constant;
        Ok(())
    }

    /// Adds terms to the current objective.
    pub fn add_objective(&mut self, coeffs: &[(VarId, f64)], constant: f64) {
        for &(v, c) in coeffs {
            assert!(v.0 < self.variables.len() && c.is_finite(), "formulation builder error: bad objective term");
            self.objective[v.0] += c;
        }
        self.objective_constant += constant;
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().zip(x).map(|(c, xv)| c * xv).sum::<f64>()
    }

    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) {
        let v = &mut self.variables[id.0];
        v.lower = lower;
        v.upper = upper;
    }

    /// Copy of the model with every variable relaxed to continuous.
    pub fn relaxed(&self) -> LinearModel {
        let mut m = self.clone();
        for v in &mut m.variables {
            v.kind = VarKind::Continuous;
        }
        m
    }

    /// Largest violation of bounds and rows at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, &xv) in self.variables.iter().zip(x) {
            worst = worst.max(v.lower - xv).max(xv - v.upper);
        }
        for c in &self.constraints {
            let a = c.activity(x);
            let viol = match c.sense {
                Sense::Le => a - c.rhs,
                Sense::Ge => c.rhs - a,
                Sense::Eq => (a - c.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    fn merge(&self, coeffs: &[(VarId, f64)], tag: &str) -> Result<Vec<(VarId, f64)>, ModelError> {
        for &(v, a) in coeffs {
            if v.0 >= self.variables.len() {
                return Err(ModelError::UnknownVariable(v.0));
            }
            if !a.is_finite() {
                return Err(ModelError::NonFinite(tag.to_string()));
            }
        }
        let mut out: Vec<(VarId, f64)> = coeffs.to_vec();
        out.sort_by_key(|&(v, _)| v);
        out.dedup_by(|next, kept| {
            if next.0 == kept.0 {
                kept.1 += next.1;
                true
            } else {
                false
            }
        });
        out.retain(|&(_, a)| a != 0.0);
        Ok(out)
    }
}

/// Copy of `model` with the given variables pinned to values.
pub fn fix_variables(model: &LinearModel, assignments: &[(VarId, f64)]) -> Result<LinearModel, ModelError> {
    let mut out = model.clone();
    for &(id, value) in assignments {
        let v = out
            .variables
            .get_mut(id.0)
            .ok_or(ModelError::UnknownVariable(id.0))?;
        if !(value >= v.lower && value <= v.upper) {
            return Err(ModelError::FixOutOfBounds {
                name: v.name.clone(),
                value,
                lower: v.lower,
                upper: v.upper,
            });
        }
        v.lower = value;
        v.upper = value;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_model_has_nothing() {
        let m = new_model();
        assert_eq!(m.num_vars(), 0);
        assert_eq!(m.num_constraints(), 0);
    }

    #[test]
    fn duplicate_tag_rejected() {
        let mut m = LinearModel::new();
        let x = m.var_cont("x", 0.0, 10.0);
        m.add_constraint(&[(x, 1.0)], Sense::Ge, 3.0, "lo").unwrap();
        assert_eq!(
            m.add_constraint(&[(x, 1.0)], Sense::Ge, 4.0, "lo"),
            Err(ModelError::DuplicateTag("lo".into()))
        );
    }

    #[test]
    fn unknown_variable_rejected() {
        let mut m = LinearModel::new();
        assert_eq!(
            m.add_constraint(&[(VarId(3), 1.0)], Sense::Le, 1.0, "r"),
            Err(ModelError::UnknownVariable(3))
        );
    }

    #[test]
    fn coefficients_merge_and_drop_zeros() {
        let mut m = LinearModel::new();
        let x = m.var_cont("x", 0.0, 1.0);
        let y = m.var_cont("y", 0.0, 1.0);
        let r = m.row(&[(x, 1.0), (y, 2.0), (x, -1.0)], Sense::Le, 1.0, "r");
        assert_eq!(m.constraint(r).coeffs, vec![(y, 2.0)]);
        m.add_objective(&[(x, 1.0), (x, 2.0)], 1.5);
        assert_eq!(m.objective(), vec![(x, 3.0)]);
        assert_eq!(m.objective_value(&[2.0, 0.0]), 7.5);
    }

    #[test]
    fn fix_pins_bounds() {
        let mut m = LinearModel::new();
        let u = m.var_bin("u");
        let x = m.var_cont("x", 0.0, 10.0);
        let f = fix_variables(&m, &[(u, 1.0), (x, 5.0)]).unwrap();
        assert_eq!((f.var(u).lower, f.var(u).upper), (1.0, 1.0));
        assert_eq!((f.var(x).lower, f.var(x).upper), (5.0, 5.0));
        assert!(matches!(
            fix_variables(&m, &[(x, 11.0)]),
            Err(ModelError::FixOutOfBounds { .. })
        ));
    }

    #[test]
    fn binary_bounds_clamped() {
        let mut m = LinearModel::new();
        let b = m.add_variable("b", -3.0, 7.0, VarKind::Binary).unwrap();
        assert_eq!((m.var(b).lower, m.var(b).upper), (0.0, 1.0));
        assert!(m.add_variable("bad", 2.0, 1.0, VarKind::Continuous).is_err());
    }
}
