//! Interval (extended) formulation: a unit's schedule is a path through ON
//! runs and OFF gaps, each ON run carrying its own perspective dispatch.
//!
//! Down-node `k` is "last on in period `k`" (`k = 0`: before the horizon).
//! An initially-on unit picks its first shut-down through `w`; an initially-off
//! unit leaves down-node 0 with one unit of flow.

use std::collections::BTreeSet;

use super::{FormKind, GenHandle, HullError, IntervalVars};
use crate::algebra::{LinearModel, Sense, VarId};
use crate::instance::{initial_lock, GeneratorSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalIndexSets {
    pub initially_on: bool,
    pub t0: usize,
    /// First shut-down choices `k` of an initially-on unit (on through `k`).
    pub kbar: Vec<usize>,
    /// First ON runs `[1, k]` continuing from before the horizon.
    pub tk1: Vec<(usize, usize)>,
    /// ON runs `[t, k]` after a start inside the horizon.
    pub tk2: Vec<(usize, usize)>,
    /// OFF gaps `(k, t)`: last on in `k`, restart in `t`.
    pub kt: Vec<(usize, usize)>,
    /// Down-nodes, each of which may stay off to the end.
    pub theta_domain: Vec<usize>,
}

/// Off time before a restart at `t` after last-on period `k`.
pub(crate) fn off_time(g: &GeneratorSpec, k: usize, t: usize) -> usize {
    let base = t - k - 1;
    if k == 0 && !g.is_initially_on() {
        base.saturating_add(g.initial_down())
    } else {
        base
    }
}

pub fn build_index_sets(g: &GeneratorSpec) -> IntervalIndexSets {
    let t_max = g.horizon;
    let on0 = g.is_initially_on();
    let max_up = g.max_up.unwrap_or(usize::MAX);
    let t0 = if on0 { initial_lock(g) } else { 0 };
    let mut kbar = Vec::new();
    if on0 {
        let lo = t0.min(t_max);
        let hi = max_up.saturating_sub(g.initial_on_duration).min(t_max);
        kbar.extend(lo..=hi);
    }
    let tk1: Vec<(usize, usize)> = kbar.iter().filter(|&&k| k >= 1).map(|&k| (1, k)).collect();

    let mut down: BTreeSet<usize> = BTreeSet::new();
    if on0 {
        down.extend(kbar.iter().copied().filter(|&k| k < t_max));
    } else {
        down.insert(0);
    }
    // Forward closure: from each down-node reach starts, from starts reach new down-nodes.
    let mut tk2: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut kt: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut frontier: Vec<usize> = down.iter().copied().collect();
    while let Some(k) = frontier.pop() {
        for t in k + 1..=t_max {
            if off_time(g, k, t) < g.min_down_at(t) {
                continue;
            }
            let runs: Vec<(usize, usize)> = (t..=t_max)
                .filter(|&kk| {
                    let len = kk - t + 1;
                    len <= max_up && (kk == t_max || len >= g.min_up_at(t))
                })
                .map(|kk| (t, kk))
                .collect();
            if runs.is_empty() {
                continue;
            }
            kt.insert((k, t));
            for (t, kk) in runs {
                tk2.insert((t, kk));
                if kk < t_max && down.insert(kk) {
                    frontier.push(kk);
                }
            }
        }
    }
    IntervalIndexSets {
        initially_on: on0,
        t0,
        kbar,
        tk1,
        tk2: tk2.into_iter().collect(),
        kt: kt.into_iter().collect(),
        theta_domain: down.into_iter().collect(),
    }
}

pub(crate) fn build(model: &mut LinearModel, g: &GeneratorSpec, gen_index: usize, integral: bool) -> GenHandle {
    let sets = build_index_sets(g);
    let t_max = g.horizon;
    let id = &g.id;
    let var_start = model.num_vars();
    let row_start = model.num_constraints();
    let arc = |m: &mut LinearModel, name: String| {
        if integral {
            m.var_bin(name)
        } else {
            m.var_cont(name, 0.0, f64::INFINITY)
        }
    };
    let mut obj: Vec<(VarId, f64)> = Vec::new();
    let s0 = g.initial_on_duration;

    let w: Vec<(usize, VarId)> = sets
        .kbar
        .iter()
        .map(|&k| (k, arc(model, format!("w[{id}][{k}]"))))
        .collect();
    let y: Vec<((usize, usize), VarId)> = sets
        .tk2
        .iter()
        .map(|&(t, k)| ((t, k), arc(model, format!("y[{id}][{t}][{k}]"))))
        .collect();
    let z: Vec<((usize, usize), VarId)> = sets
        .kt
        .iter()
        .map(|&(k, t)| ((k, t), arc(model, format!("z[{id}][{k}][{t}]"))))
        .collect();
    let theta: Vec<(usize, VarId)> = sets
        .theta_domain
        .iter()
        .map(|&k| (k, arc(model, format!("theta[{id}][{k}]"))))
        .collect();

    // Entry row.
    if sets.initially_on {
        let terms: Vec<(VarId, f64)> = w.iter().map(|&(_, v)| (v, 1.0)).collect();
        model.row(&terms, Sense::Eq, 1.0, format!("{id}.entry"));
    }
    // Down-node balance: inflow (w, ending runs) equals outflow (gaps, stay off).
    for &(k, th) in &theta {
        let mut terms = vec![(th, 1.0)];
        for &((kk, _), zv) in &z {
            if kk == k {
                terms.push((zv, 1.0));
            }
        }
        for &(kk, wv) in &w {
            if kk == k {
                terms.push((wv, -1.0));
            }
        }
        for &((_, kk), yv) in &y {
            if kk == k {
                terms.push((yv, -1.0));
            }
        }
        let rhs = if !sets.initially_on && k == 0 { 1.0 } else { 0.0 };
        model.row(&terms, Sense::Eq, rhs, format!("{id}.down.{k}"));
    }
    // Up-node balance.
    let starts: BTreeSet<usize> = sets.tk2.iter().map(|&(t, _)| t).collect();
    for &t in &starts {
        let mut terms = Vec::new();
        for &((tt, _), yv) in &y {
            if tt == t {
                terms.push((yv, 1.0));
            }
        }
        for &((_, tt), zv) in &z {
            if tt == t {
                terms.push((zv, -1.0));
            }
        }
        model.row(&terms, Sense::Eq, 0.0, format!("{id}.up.{t}"));
    }

    // Per-run dispatch in perspective form.
    let mut output: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); t_max];
    let mut cost: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); t_max];
    let mut status: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); t_max];
    let mut runs: Vec<(usize, usize, VarId, bool)> = Vec::new();
    for &(k, wv) in &w {
        if k >= 1 {
            runs.push((1, k, wv, false));
        }
        let shut = if k < t_max { g.shutdown_cost.at(s0 + k) } else { 0.0 };
        obj.push((wv, shut));
    }
    for &((t, k), yv) in &y {
        runs.push((t, k, yv, true));
        if k < t_max {
            obj.push((yv, g.shutdown_cost.at(k - t + 1)));
        }
    }
    let mut q_vars = Vec::new();
    for &(t, k, lam, after_start) in &runs {
        let tag = format!("{t}.{k}");
        let mut prev: Option<VarId> = None;
        let mut qs = Vec::new();
        for s in t..=k {
            let q = model.var_cont(format!("q[{id}][{t}][{k}][{s}]"), 0.0, f64::INFINITY);
            let phi = model.var_cont(format!("phi[{id}][{t}][{k}][{s}]"), f64::NEG_INFINITY, f64::INFINITY);
            model.row(&[(q, 1.0), (lam, -g.p_min[s - 1])], Sense::Ge, 0.0, format!("{id}.qlo.{tag}.{s}"));
            model.row(&[(q, 1.0), (lam, -g.p_max[s - 1])], Sense::Le, 0.0, format!("{id}.qhi.{tag}.{s}"));
            if s == t && after_start {
                model.row(&[(q, 1.0), (lam, -g.su_ramp[s - 1])], Sense::Le, 0.0, format!("{id}.qsu.{tag}"));
            }
            if s == k && k < t_max {
                model.row(&[(q, 1.0), (lam, -g.sd_ramp[s - 1])], Sense::Le, 0.0, format!("{id}.qsd.{tag}"));
            }
            if let Some(p) = prev {
                model.row(
                    &[(q, 1.0), (p, -1.0), (lam, -g.ramp_up[s - 1])],
                    Sense::Le,
                    0.0,
                    format!("{id}.qru.{tag}.{s}"),
                );
                model.row(
                    &[(p, 1.0), (q, -1.0), (lam, -g.ramp_down[s - 1])],
                    Sense::Le,
                    0.0,
                    format!("{id}.qrd.{tag}.{s}"),
                );
            }
            for (j, seg) in g.cost_segments[s - 1].iter().enumerate() {
                model.row(
                    &[(phi, 1.0), (q, -seg.slope), (lam, -seg.intercept)],
                    Sense::Ge,
                    0.0,
                    format!("{id}.qcost.{tag}.{s}.{j}"),
                );
            }
            obj.push((phi, 1.0));
            obj.push((lam, g.no_load[s - 1]));
            output[s - 1].push((q, 1.0));
            cost[s - 1].push((phi, 1.0));
            status[s - 1].push((lam, 1.0));
            qs.push(q);
            prev = Some(q);
        }
        q_vars.push(((t, k), qs));
    }
    for &((k, t), zv) in &z {
        obj.push((zv, g.startup_cost_unchecked(off_time(g, k, t))));
    }
    model.add_objective(&obj, 0.0);

    // Status mapping: starts by restart period, stops one period after the last on period.
    let mut starts_map: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); t_max];
    let mut stops_map: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); t_max];
    for &((_, t), zv) in &z {
        starts_map[t - 1].push((zv, 1.0));
    }
    for &(k, _) in &theta {
        if k == 0 && !sets.initially_on {
            continue;
        }
        if k + 1 <= t_max {
            for &((kk, _), zv) in &z {
                if kk == k {
                    stops_map[k].push((zv, 1.0));
                }
            }
            let th = theta.iter().find(|(kk, _)| *kk == k).unwrap().1;
            stops_map[k].push((th, 1.0));
        }
    }

    GenHandle {
        gen_index,
        id: id.clone(),
        kind: if integral { FormKind::D4Integral } else { FormKind::D4 },
        output,
        status: None,
        intervals: Some(IntervalVars {
            sets,
            w,
            y,
            z,
            theta,
            q: q_vars,
            u_map: status,
            v_map: starts_map,
            e_map: stops_map,
            f_map: cost,
        }),
        vars: var_start..model.num_vars(),
        rows: row_start..model.num_constraints(),
    }
}

/// Hull-membership test: the interval formulation plus rows pinning its
/// image in `(x, f, u, v, e)` to `hat`. Feasible iff `hat` lies in the hull.
pub fn build_p3(g: &GeneratorSpec, hat: &super::StatusPoint) -> Result<LinearModel, HullError> {
    let t_max = g.horizon;
    for (name, v) in [("x", &hat.x), ("f", &hat.f), ("u", &hat.u), ("v", &hat.v), ("e", &hat.e)] {
        if v.len() != t_max {
            return Err(HullError::PointLength { field: name, expected: t_max, found: v.len() });
        }
    }
    let mut m = LinearModel::new();
    let h = build(&mut m, g, 0, false);
    let iv = h.intervals.as_ref().expect("interval handle");
    // Only feasibility matters.
    let zero: Vec<(VarId, f64)> = Vec::new();
    m.set_objective(&zero, 0.0).expect("constant objective");
    let id = &g.id;
    for s in 1..=t_max {
        let rows: [(&str, &Vec<(VarId, f64)>, f64); 4] = [
            ("mapx", &h.output[s - 1], hat.x[s - 1]),
            ("mapu", &iv.u_map[s - 1], hat.u[s - 1]),
            ("mapv", &iv.v_map[s - 1], hat.v[s - 1]),
            ("mape", &iv.e_map[s - 1], hat.e[s - 1]),
        ];
        for (name, terms, rhs) in rows {
            m.row(terms, Sense::Eq, rhs, format!("{id}.{name}.{s}"));
        }
        // Interval energy cost matches the point (epigraph variables can rise).
        let terms = iv.f_map[s - 1].clone();
        m.row(&terms, Sense::Eq, hat.f[s - 1], format!("{id}.mapf.{s}"));
    }
    Ok(m)
}
