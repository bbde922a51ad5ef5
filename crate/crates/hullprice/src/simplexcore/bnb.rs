//! Best-bound branch-and-bound over binary variables.
//!
//! Nodes store only their bound changes and the parent's basis; children are
//! warm-started from it. A depth-first dive from the root supplies an early
//! incumbent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Duration;

use super::primal::{self, BasisState};
use super::problem::LpProblem;
use super::{Branching, SolveResult, SolveStatus, SolverOptions};
use crate::algebra::{LinearModel, VarKind};
use crate::clock::Stopwatch;

struct Node {
    bound: f64,
    depth: usize,
    fixes: Vec<(usize, f64)>,
    basis: Option<BasisState>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap: smaller bound first, deeper node breaks ties.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
    }
}

struct Relaxation {
    status: SolveStatus,
    x: Vec<f64>,
    objective: f64,
    basis: Option<BasisState>,
    iterations: usize,
}

struct Search<'a> {
    model: &'a LinearModel,
    p: LpProblem,
    opts: &'a SolverOptions,
    binaries: Vec<usize>,
    incumbent: Option<(f64, Vec<f64>)>,
    iterations: usize,
    pseudo: Vec<(f64, f64, usize)>,
}

impl<'a> Search<'a> {
    fn relax(&mut self, fixes: &[(usize, f64)], warm: Option<&BasisState>) -> Relaxation {
        let mut lower = self.p.lower.clone();
        let mut upper = self.p.upper.clone();
        for &(j, v) in fixes {
            lower[j] = v;
            upper[j] = v;
        }
        let out = primal::solve(&self.p, &lower, &upper, warm, self.opts);
        self.iterations += out.iterations;
        let mut x = out.x;
        x.truncate(self.p.n);
        let objective = if out.status == SolveStatus::Optimal {
            self.model.objective_value(&x)
        } else {
            f64::INFINITY
        };
        Relaxation {
            status: out.status,
            x,
            objective,
            basis: out.basis,
            iterations: out.iterations,
        }
    }

    fn fractional(&self, x: &[f64]) -> Option<usize> {
        let tol = self.opts.integrality_tol;
        let mut best: Option<(usize, f64)> = None;
        for &j in &self.binaries {
            let f = x[j] - x[j].floor();
            if f <= tol || f >= 1.0 - tol {
                continue;
            }
            let score = match self.opts.branching {
                Branching::MostFractional => 0.5 - (f - 0.5).abs(),
                Branching::PseudoCost => {
                    let (down, up, cnt) = self.pseudo[j];
                    if cnt == 0 {
                        0.5 - (f - 0.5).abs()
                    } else {
                        let c = cnt as f64;
                        (down / c * f).min(up / c * (1.0 - f)) + 1e-9
                    }
                }
            };
            if best.map_or(true, |(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    fn offer(&mut self, objective: f64, x: &[f64]) {
        if self.incumbent.as_ref().map_or(true, |(o, _)| objective < *o - 1e-12) {
            let mut x = x.to_vec();
            for &j in &self.binaries {
                x[j] = x[j].round();
            }
            self.incumbent = Some((objective, x));
        }
    }

    fn prunable(&self, bound: f64) -> bool {
        match &self.incumbent {
            Some((inc, _)) => {
                bound >= *inc - self.opts.mip_gap * (1.0 + inc.abs().max(bound.abs()))
            }
            None => false,
        }
    }

    /// Rounds toward the nearer integer one variable at a time until integral.
    fn dive(&mut self, root: &Relaxation, clock: &Stopwatch) {
        let mut fixes: Vec<(usize, f64)> = Vec::new();
        let mut x = root.x.clone();
        let mut basis = root.basis.clone();
        let mut objective = root.objective;
        for _ in 0..self.binaries.len() + 1 {
            if self.time_up(clock) {
                return;
            }
            let Some(j) = self.fractional(&x) else {
                self.offer(objective, &x);
                return;
            };
            let v = if x[j] >= 0.5 { 1.0 } else { 0.0 };
            fixes.push((j, v));
            let r = self.relax(&fixes, basis.as_ref());
            if r.status != SolveStatus::Optimal {
                fixes.pop();
                fixes.push((j, 1.0 - v));
                let r2 = self.relax(&fixes, basis.as_ref());
                if r2.status != SolveStatus::Optimal {
                    return;
                }
                x = r2.x;
                basis = r2.basis;
                objective = r2.objective;
                continue;
            }
            x = r.x;
            basis = r.basis;
            objective = r.objective;
        }
    }

    fn time_up(&self, clock: &Stopwatch) -> bool {
        self.opts.time_limit.map_or(false, |l| clock.elapsed() > l)
    }
}

pub(crate) fn branch_and_bound(model: &LinearModel, opts: &SolverOptions) -> SolveResult {
    let clock = Stopwatch::start();
    let p = LpProblem::from_model(model);
    let binaries: Vec<usize> = model
        .variables()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| j)
        .collect();
    let n = p.n;
    let mut s = Search {
        model,
        p,
        opts,
        binaries,
        incumbent: None,
        iterations: 0,
        pseudo: vec![(0.0, 0.0, 0); n],
    };

    let root = s.relax(&[], None);
    if root.status != SolveStatus::Optimal {
        return finish(&s, root.status, f64::NEG_INFINITY, 0, &clock);
    }
    s.dive(&root, &clock);

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: root.objective,
        depth: 0,
        fixes: Vec::new(),
        basis: root.basis.clone(),
    });
    let mut nodes = 0usize;
    let mut limit_status = None;
    let mut pending_root = Some(root);
    while let Some(node) = heap.pop() {
        if s.prunable(node.bound) {
            // Every remaining node is at least as bad.
            heap.clear();
            break;
        }
        if nodes >= opts.node_limit {
            limit_status = Some(SolveStatus::IterationLimit);
            heap.push(node);
            break;
        }
        if s.time_up(&clock) {
            limit_status = Some(SolveStatus::TimeLimit);
            heap.push(node);
            break;
        }
        nodes += 1;
        let r = match pending_root.take() {
            Some(r) => r,
            None => s.relax(&node.fixes, node.basis.as_ref()),
        };
        if r.status != SolveStatus::Optimal || s.prunable(r.objective) {
            continue;
        }
        let Some(j) = s.fractional(&r.x) else {
            s.offer(r.objective, &r.x);
            continue;
        };
        let frac = r.x[j];
        for v in [0.0, 1.0] {
            let mut fixes = node.fixes.clone();
            fixes.push((j, v));
            let child = s.relax(&fixes, r.basis.as_ref());
            if opts.branching == Branching::PseudoCost && child.status == SolveStatus::Optimal {
                let gain = (child.objective - r.objective).max(0.0);
                let e = &mut s.pseudo[j];
                if v == 0.0 {
                    e.0 += gain / frac.max(1e-6);
                } else {
                    e.1 += gain / (1.0 - frac).max(1e-6);
                    e.2 += 1;
                }
            }
            let _ = child.iterations;
            if child.status != SolveStatus::Optimal || s.prunable(child.objective) {
                continue;
            }
            if s.fractional(&child.x).is_none() {
                s.offer(child.objective, &child.x);
                continue;
            }
            heap.push(Node {
                bound: child.objective,
                depth: node.depth + 1,
                fixes,
                basis: child.basis,
            });
        }
    }

    let open_bound = heap.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let status = match (&s.incumbent, limit_status) {
        (Some(_), None) => SolveStatus::Optimal,
        (None, None) => SolveStatus::Infeasible,
        (_, Some(l)) => l,
    };
    let bound = match &s.incumbent {
        Some((inc, _)) => open_bound.min(*inc),
        None => open_bound,
    };
    finish(&s, status, bound, nodes, &clock)
}

fn finish(s: &Search, status: SolveStatus, bound: f64, nodes: usize, clock: &Stopwatch) -> SolveResult {
    let (objective, primal) = match &s.incumbent {
        Some((o, x)) => (*o, x.clone()),
        None => (f64::NAN, vec![0.0; s.p.n]),
    };
    let elapsed: Duration = clock.elapsed();
    SolveResult {
        status,
        primal,
        dual: Vec::new(),
        reduced_costs: Vec::new(),
        objective,
        best_bound: bound,
        iterations: s.iterations,
        nodes,
        elapsed,
        basis: None,
    }
}
