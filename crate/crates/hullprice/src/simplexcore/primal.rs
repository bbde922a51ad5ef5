//! Bounded-variable primal simplex with a composite phase 1.
//!
//! Phase 1 minimises the sum of bound violations of basic variables from any
//! starting basis, so the same routine serves cold starts and branch-and-bound
//! warm starts after bound changes.

use super::factor::Factor;
use super::problem::LpProblem;
use super::{SolveStatus, SolverOptions};
use crate::clock::Stopwatch;

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const REFACTOR_ETAS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free variable held at zero.
    Zero,
}

/// Basis description reusable as a warm start on a problem of the same shape.
#[derive(Clone, Debug)]
pub struct BasisState {
    pub(crate) status: Vec<VarStatus>,
}

pub(crate) struct Outcome {
    pub status: SolveStatus,
    /// Values of structurals then logicals.
    pub x: Vec<f64>,
    /// Row duals.
    pub y: Vec<f64>,
    /// Structural reduced costs.
    pub d: Vec<f64>,
    pub iterations: usize,
    pub basis: Option<BasisState>,
}

struct Engine<'a> {
    p: &'a LpProblem,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    status: Vec<VarStatus>,
    head: Vec<usize>,
    x: Vec<f64>,
    factor: Option<Factor>,
    opts: &'a SolverOptions,
    iterations: usize,
}

pub(crate) fn solve(
    p: &LpProblem,
    lower: &[f64],
    upper: &[f64],
    warm: Option<&BasisState>,
    opts: &SolverOptions,
) -> Outcome {
    let n = p.n;
    let m = p.m;
    let mut cost = p.cost.clone();
    cost.extend(std::iter::repeat(0.0).take(m));
    let mut e = Engine {
        p,
        lower: lower.to_vec(),
        upper: upper.to_vec(),
        cost,
        status: Vec::new(),
        head: Vec::new(),
        x: vec![0.0; n + m],
        factor: None,
        opts,
        iterations: 0,
    };
    if lower.iter().zip(upper).any(|(l, u)| l > u) {
        return e.finish(SolveStatus::Infeasible);
    }
    e.init_basis(warm);
    let status = e.run();
    e.finish(status)
}

impl<'a> Engine<'a> {
    fn nonbasic_status(&self, j: usize) -> VarStatus {
        let (l, u) = (self.lower[j], self.upper[j]);
        if l.is_finite() {
            VarStatus::AtLower
        } else if u.is_finite() {
            VarStatus::AtUpper
        } else {
            VarStatus::Zero
        }
    }

    fn init_basis(&mut self, warm: Option<&BasisState>) {
        let n = self.p.n;
        let m = self.p.m;
        let usable = warm
            .filter(|w| w.status.len() == n + m)
            .filter(|w| w.status.iter().filter(|s| **s == VarStatus::Basic).count() == m);
        match usable {
            Some(w) => {
                self.status = w.status.clone();
                for j in 0..n + m {
                    let s = self.status[j];
                    let ok = match s {
                        VarStatus::Basic => true,
                        VarStatus::AtLower => self.lower[j].is_finite(),
                        VarStatus::AtUpper => self.upper[j].is_finite(),
                        VarStatus::Zero => !self.lower[j].is_finite() && !self.upper[j].is_finite(),
                    };
                    if !ok {
                        self.status[j] = self.nonbasic_status(j);
                    }
                }
            }
            None => {
                self.status = (0..n + m)
                    .map(|j| if j >= n { VarStatus::Basic } else { self.nonbasic_status(j) })
                    .collect();
            }
        }
        self.head = (0..n + m).filter(|&j| self.status[j] == VarStatus::Basic).collect();
        for j in 0..n + m {
            self.x[j] = match self.status[j] {
                VarStatus::AtLower => self.lower[j],
                VarStatus::AtUpper => self.upper[j],
                _ => 0.0,
            };
        }
    }

    /// Factorises the current basis, swapping singular columns for logicals.
    fn refactor(&mut self) {
        let n = self.p.n;
        for _ in 0..50 {
            match Factor::new(self.p, &self.head) {
                Ok(f) => {
                    self.factor = Some(f);
                    self.recompute_basics();
                    return;
                }
                Err(s) => {
                    for (pos, row) in s.bad_positions.iter().zip(&s.free_rows) {
                        let out = self.head[*pos];
                        self.status[out] = self.nonbasic_status(out);
                        self.x[out] = match self.status[out] {
                            VarStatus::AtLower => self.lower[out],
                            VarStatus::AtUpper => self.upper[out],
                            _ => 0.0,
                        };
                        let lg = n + row;
                        self.head[*pos] = lg;
                        self.status[lg] = VarStatus::Basic;
                    }
                }
            }
        }
        panic!("basis repair failed to produce a nonsingular basis");
    }

    fn recompute_basics(&mut self) {
        let m = self.p.m;
        let n = self.p.n;
        // B x_B = -sum_nonbasic col_j x_j
        let mut rhs = vec![0.0; m];
        for j in 0..n {
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                for (r, a) in self.p.column(j) {
                    rhs[r] -= a * self.x[j];
                }
            }
        }
        for r in 0..m {
            let j = n + r;
            if self.status[j] != VarStatus::Basic && self.x[j] != 0.0 {
                rhs[r] += self.x[j];
            }
        }
        let xb = self.factor.as_ref().unwrap().ftran(self.p, &rhs);
        for (pos, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[pos];
        }
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        let tol = self.opts.feasibility_tol;
        if v < self.lower[j] - tol {
            self.lower[j] - v
        } else if v > self.upper[j] + tol {
            v - self.upper[j]
        } else {
            0.0
        }
    }

    fn run(&mut self) -> SolveStatus {
        let n = self.p.n;
        let m = self.p.m;
        let clock = Stopwatch::start();
        self.refactor();
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let mut col = vec![0.0; m];
        let mut recovery = 0usize;
        loop {
            if self.iterations >= self.opts.iteration_limit {
                return SolveStatus::IterationLimit;
            }
            if let Some(limit) = self.opts.time_limit {
                if self.iterations % 64 == 0 && clock.elapsed() > limit {
                    return SolveStatus::TimeLimit;
                }
            }
            let f = self.factor.as_ref().unwrap();
            if f.num_etas() >= REFACTOR_ETAS || f.eta_nnz() > 20 * (m + 1) {
                self.refactor();
            }

            let tol = self.opts.feasibility_tol;
            let mut phase1 = false;
            let cb: Vec<f64> = self
                .head
                .iter()
                .map(|&j| {
                    let v = self.x[j];
                    if v < self.lower[j] - tol {
                        phase1 = true;
                        -1.0
                    } else if v > self.upper[j] + tol {
                        phase1 = true;
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            let cb = if phase1 {
                cb
            } else {
                self.head.iter().map(|&j| self.cost[j]).collect()
            };
            let y = self.factor.as_ref().unwrap().btran(self.p, &cb);

            // Pricing.
            let otol = self.opts.optimality_tol;
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..n + m {
                let s = self.status[j];
                if s == VarStatus::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let cj = if phase1 { 0.0 } else { self.cost[j] };
                let d = cj - self.p.dot_column(j, &y);
                let attractive = match s {
                    VarStatus::AtLower => d < -otol,
                    VarStatus::AtUpper => d > otol,
                    VarStatus::Zero => d.abs() > otol,
                    VarStatus::Basic => false,
                };
                if !attractive {
                    continue;
                }
                if bland {
                    enter = Some((j, d));
                    break;
                }
                if enter.map_or(true, |(_, best)| d.abs() > best.abs()) {
                    enter = Some((j, d));
                }
            }
            let Some((q, dq)) = enter else {
                if phase1 {
                    // Confirm on a fresh factorisation before declaring infeasibility.
                    if self.factor.as_ref().unwrap().num_etas() > 0 && recovery < 3 {
                        recovery += 1;
                        self.refactor();
                        continue;
                    }
                    return SolveStatus::Infeasible;
                }
                if self.factor.as_ref().unwrap().num_etas() > 0 && recovery < 3 {
                    recovery += 1;
                    self.refactor();
                    let drift = self.head.iter().any(|&j| self.infeasibility(j) > 0.0);
                    if drift {
                        continue;
                    }
                }
                return SolveStatus::Optimal;
            };

            self.p.scatter_column(q, &mut col);
            let alpha = self.factor.as_ref().unwrap().ftran(self.p, &col);
            let dir = if dq < 0.0 { 1.0 } else { -1.0 };

            let (leave, _theta_max) = self.ratio_test(&alpha, dir, phase1, bland);
            let flip = self.upper[q] - self.lower[q];
            let flip = if flip.is_finite() { flip } else { f64::INFINITY };

            let (theta, leave) = match leave {
                Some((pos, t, to_upper)) if t < flip => (t, Some((pos, to_upper))),
                _ => {
                    if !flip.is_finite() {
                        if phase1 {
                            // Numerical trouble: refresh and retry.
                            recovery += 1;
                            if recovery > 10 {
                                return SolveStatus::Infeasible;
                            }
                            self.refactor();
                            continue;
                        }
                        return SolveStatus::Unbounded;
                    }
                    (flip, None)
                }
            };
            self.iterations += 1;

            if theta <= DEGENERATE_STEP {
                degenerate_run += 1;
                if degenerate_run >= self.opts.bland_after {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }

            self.x[q] += dir * theta;
            for (pos, &j) in self.head.iter().enumerate() {
                if alpha[pos] != 0.0 {
                    self.x[j] -= dir * theta * alpha[pos];
                }
            }
            match leave {
                None => {
                    self.status[q] = if dir > 0.0 { VarStatus::AtUpper } else { VarStatus::AtLower };
                    self.x[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some((pos, to_upper)) => {
                    let out = self.head[pos];
                    if to_upper {
                        self.status[out] = VarStatus::AtUpper;
                        self.x[out] = self.upper[out];
                    } else {
                        self.status[out] = VarStatus::AtLower;
                        self.x[out] = self.lower[out];
                    }
                    self.head[pos] = q;
                    self.status[q] = VarStatus::Basic;
                    self.factor.as_mut().unwrap().update(pos, &alpha);
                }
            }
        }
    }

    /// Harris two-pass ratio test. Returns the leaving position, its step and
    /// whether it leaves at its upper bound.
    fn ratio_test(&self, alpha: &[f64], dir: f64, phase1: bool, bland: bool) -> (Option<(usize, f64, bool)>, f64) {
        let tol = self.opts.feasibility_tol;
        // (pos, relaxed step, exact step, leaves at upper)
        let mut cands: Vec<(usize, f64, f64, bool)> = Vec::new();
        for (pos, &j) in self.head.iter().enumerate() {
            let a = alpha[pos];
            if a.abs() < PIVOT_TOL {
                continue;
            }
            let delta = -dir * a;
            let v = self.x[j];
            let (l, u) = (self.lower[j], self.upper[j]);
            if delta < 0.0 {
                if phase1 && v > u + tol {
                    // Infeasible above and falling: first breakpoint is u.
                    cands.push((pos, (v - u + tol) / -delta, (v - u) / -delta, true));
                } else if phase1 && v < l - tol {
                    continue;
                } else if l.is_finite() {
                    cands.push((pos, (v - l + tol) / -delta, (v - l) / -delta, false));
                }
            } else if phase1 && v < l - tol {
                cands.push((pos, (l - v + tol) / delta, (l - v) / delta, false));
            } else if phase1 && v > u + tol {
                continue;
            } else if u.is_finite() {
                cands.push((pos, (u - v + tol) / delta, (u - v) / delta, true));
            }
        }
        if cands.is_empty() {
            return (None, f64::INFINITY);
        }
        if bland {
            let min_exact = cands.iter().map(|c| c.2.max(0.0)).fold(f64::INFINITY, f64::min);
            let pick = cands
                .iter()
                .filter(|c| c.2.max(0.0) <= min_exact + 1e-12)
                .min_by_key(|c| self.head[c.0])
                .unwrap();
            return (Some((pick.0, pick.2.max(0.0), pick.3)), min_exact);
        }
        let theta_max = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let mut best: Option<(usize, f64, bool)> = None;
        for &(pos, _, exact, up) in &cands {
            if exact <= theta_max && best.map_or(true, |(bp, _, _)| alpha[pos].abs() > alpha[bp].abs()) {
                best = Some((pos, exact, up));
            }
        }
        let (pos, exact, up) = best.unwrap();
        (Some((pos, exact.max(0.0), up)), theta_max)
    }

    fn finish(mut self, status: SolveStatus) -> Outcome {
        let n = self.p.n;
        let m = self.p.m;
        if status != SolveStatus::Optimal || self.factor.is_none() {
            let basis = if self.status.len() == n + m {
                Some(BasisState {
                    status: self.status.clone(),
                })
            } else {
                None
            };
            return Outcome {
                status,
                x: self.x,
                y: vec![0.0; m],
                d: vec![0.0; n],
                iterations: self.iterations,
                basis,
            };
        }
        // Snap basics that sit within tolerance of a bound.
        for &j in &self.head {
            if self.x[j] < self.lower[j] {
                self.x[j] = self.lower[j];
            } else if self.x[j] > self.upper[j] {
                self.x[j] = self.upper[j];
            }
        }
        let cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
        let y = self.factor.as_ref().unwrap().btran(self.p, &cb);
        let d: Vec<f64> = (0..n).map(|j| self.cost[j] - self.p.dot_column(j, &y)).collect();
        Outcome {
            status,
            x: std::mem::take(&mut self.x),
            y,
            d,
            iterations: self.iterations,
            basis: Some(BasisState {
                status: self.status.clone(),
            }),
        }
    }
}
