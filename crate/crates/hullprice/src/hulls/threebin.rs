//! Status/start/stop ("3-bin") formulation and its tightened relaxations.

use super::{FormKind, GenHandle, HullError};
use crate::algebra::{LinearModel, Sense, VarId};
use crate::instance::{initial_lock, GeneratorSpec};

/// Which constraint families to emit.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Families {
    pub integral: bool,
    pub ramps: bool,
    pub startup_facet: bool,
    pub max_up: bool,
    pub multi_state: bool,
    /// Separate dispatch and cost of start-up hours from running hours.
    pub split_start_cost: bool,
}

impl Families {
    pub fn for_kind(kind: FormKind) -> Families {
        let all = Families {
            integral: false,
            ramps: true,
            startup_facet: true,
            max_up: true,
            multi_state: true,
            split_start_cost: false,
        };
        match kind {
            FormKind::ThreeBin => Families { integral: true, ..all },
            FormKind::ThreeBinRelaxed | FormKind::G4Relaxation => all,
            FormKind::D1 => Families {
                ramps: false,
                startup_facet: false,
                max_up: false,
                multi_state: false,
                ..all
            },
            FormKind::D2 => Families {
                ramps: false,
                split_start_cost: true,
                max_up: false,
                multi_state: false,
                ..all
            },
            FormKind::D3 => Families {
                ramps: false,
                split_start_cost: true,
                multi_state: false,
                ..all
            },
            FormKind::D4 | FormKind::D4Integral => unreachable!("interval formulation"),
        }
    }
}

/// Down-time windows `[lo, hi]` of every start-up state except the last.
pub(crate) fn state_windows(g: &GeneratorSpec) -> Vec<(usize, usize)> {
    let st = &g.startup_states;
    (0..st.len().saturating_sub(1))
        .map(|s| {
            let lo = if s == 0 { 1 } else { st[s].min_off };
            (lo, st[s + 1].min_off - 1)
        })
        .collect()
}

pub(crate) fn build(
    model: &mut LinearModel,
    g: &GeneratorSpec,
    gen_index: usize,
    kind: FormKind,
    shutdown_lower_bound: bool,
) -> Result<GenHandle, HullError> {
    let fam = Families::for_kind(kind);
    let t_max = g.horizon;
    let id = &g.id;
    let shutdown = match g.shutdown_cost.constant_value() {
        Some(c) => c,
        None if shutdown_lower_bound => match &g.shutdown_cost {
            crate::instance::ShutdownCost::Steps(s) => s.iter().map(|&(_, c)| c).fold(f64::INFINITY, f64::min),
            crate::instance::ShutdownCost::Constant(c) => *c,
        },
        None => return Err(HullError::DurationShutdownCost(id.clone())),
    };
    let single_start = g.single_startup_cost();
    if single_start.is_none() && !fam.multi_state {
        return Err(HullError::ClassMismatch {
            id: id.clone(),
            kind,
            reason: "multi-state start-up cost",
        });
    }
    let var_start = model.num_vars();
    let row_start = model.num_constraints();
    let on0 = g.is_initially_on();
    let lock = initial_lock(g).min(t_max);
    let d0 = g.initial_down();

    let bin = |m: &mut LinearModel, name: String| {
        if fam.integral {
            m.var_bin(name)
        } else {
            m.var_cont(name, 0.0, 1.0)
        }
    };
    let mut u = Vec::with_capacity(t_max);
    let mut v = Vec::with_capacity(t_max);
    let mut e = Vec::with_capacity(t_max);
    let mut x = Vec::with_capacity(t_max);
    let mut f = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        u.push(bin(model, format!("u[{id}][{t}]")));
        v.push(bin(model, format!("v[{id}][{t}]")));
        e.push(bin(model, format!("e[{id}][{t}]")));
        x.push(model.var_cont(format!("x[{id}][{t}]"), 0.0, f64::INFINITY));
        f.push(model.var_cont(format!("f[{id}][{t}]"), f64::NEG_INFINITY, f64::INFINITY));
    }
    let (ui, vi, ei) = (|t: usize| u[t - 1], |t: usize| v[t - 1], |t: usize| e[t - 1]);
    let u0 = if on0 { 1.0 } else { 0.0 };

    // Initial conditions as bounds.
    if on0 {
        for t in 1..=lock {
            model.set_bounds(ui(t), 1.0, 1.0);
        }
        model.set_bounds(vi(1), 0.0, 0.0);
    } else {
        model.set_bounds(ei(1), 0.0, 0.0);
        for t in 1..=t_max {
            if d0.saturating_add(t - 1) < g.min_down_at(t) {
                model.set_bounds(vi(t), 0.0, 0.0);
            }
        }
    }

    for t in 1..=t_max {
        // Logic: u_t - u_{t-1} = v_t - e_t.
        if t == 1 {
            model.row(&[(ui(1), 1.0), (vi(1), -1.0), (ei(1), 1.0)], Sense::Eq, u0, format!("{id}.logic.1"));
        } else {
            model.row(
                &[(ui(t), 1.0), (ui(t - 1), -1.0), (vi(t), -1.0), (ei(t), 1.0)],
                Sense::Eq,
                0.0,
                format!("{id}.logic.{t}"),
            );
        }
        // Min-up: every start whose required run covers t keeps the unit on.
        let mut terms: Vec<(VarId, f64)> = (1..=t)
            .filter(|&j| t <= j + g.min_up_at(j) - 1)
            .map(|j| (vi(j), 1.0))
            .collect();
        terms.push((ui(t), -1.0));
        model.row(&terms, Sense::Le, 0.0, format!("{id}.minup.{t}"));
        // Capacity.
        model.row(&[(x[t - 1], 1.0), (ui(t), -g.p_min[t - 1])], Sense::Ge, 0.0, format!("{id}.capl.{t}"));
        model.row(&[(x[t - 1], 1.0), (ui(t), -g.p_max[t - 1])], Sense::Le, 0.0, format!("{id}.capu.{t}"));
        // Piecewise cost epigraph.
        for (j, seg) in g.cost_segments[t - 1].iter().enumerate() {
            model.row(
                &[(f[t - 1], 1.0), (x[t - 1], -seg.slope), (ui(t), -seg.intercept)],
                Sense::Ge,
                0.0,
                format!("{id}.cost.{t}.{j}"),
            );
        }
    }
    // Min-down: after being on at s, no start within the required gap.
    for s in 0..t_max {
        let terms: Vec<(VarId, f64)> = (s + 1..=t_max)
            .filter(|&j| j <= s + g.min_down_at(j))
            .map(|j| (vi(j), 1.0))
            .collect();
        if terms.is_empty() {
            continue;
        }
        let mut terms = terms;
        if s == 0 {
            if u0 == 1.0 {
                model.row(&terms, Sense::Le, 0.0, format!("{id}.mindown.0"));
            }
            continue;
        }
        terms.push((ui(s), 1.0));
        model.row(&terms, Sense::Le, 1.0, format!("{id}.mindown.{s}"));
    }
    if fam.ramps {
        for t in 1..=t_max {
            if t == 1 && on0 {
                continue;
            }
            let up = g.ramp_up[t - 1];
            let su = g.su_ramp[t - 1];
            let dn = g.ramp_down[t - 1];
            if t == 1 {
                // Previous output is zero.
                model.row(&[(x[0], 1.0), (vi(1), -su)], Sense::Le, 0.0, format!("{id}.rampup.1"));
                continue;
            }
            let sd_prev = g.sd_ramp[t - 2];
            model.row(
                &[(x[t - 1], 1.0), (x[t - 2], -1.0), (ui(t - 1), -up), (vi(t), -su)],
                Sense::Le,
                0.0,
                format!("{id}.rampup.{t}"),
            );
            model.row(
                &[(x[t - 2], 1.0), (x[t - 1], -1.0), (ui(t), -dn), (ei(t), -sd_prev)],
                Sense::Le,
                0.0,
                format!("{id}.rampdown.{t}"),
            );
        }
    }
    if fam.startup_facet {
        for t in 1..=t_max {
            let pmax = g.p_max[t - 1];
            let su = g.su_ramp[t - 1].min(pmax);
            if su >= pmax {
                continue;
            }
            model.row(
                &[(x[t - 1], 1.0), (ui(t), -pmax), (vi(t), pmax - su)],
                Sense::Le,
                0.0,
                format!("{id}.suramp.{t}"),
            );
        }
    }
    if fam.split_start_cost {
        // With a binding start-up ramp the aggregated cost epigraph is weaker
        // than the cost envelope; split each hour into start and running parts.
        for t in 1..=t_max {
            let (pmin, pmax) = (g.p_min[t - 1], g.p_max[t - 1]);
            let su = g.su_ramp[t - 1].min(pmax);
            if su >= pmax || g.cost_segments[t - 1].len() < 2 {
                continue;
            }
            let xs = model.var_cont(format!("xs[{id}][{t}]"), 0.0, f64::INFINITY);
            let xr = model.var_cont(format!("xr[{id}][{t}]"), 0.0, f64::INFINITY);
            let fs = model.var_cont(format!("fs[{id}][{t}]"), f64::NEG_INFINITY, f64::INFINITY);
            let fr = model.var_cont(format!("fr[{id}][{t}]"), f64::NEG_INFINITY, f64::INFINITY);
            let (xt, ut, vt) = (x[t - 1], ui(t), vi(t));
            model.row(&[(xt, 1.0), (xs, -1.0), (xr, -1.0)], Sense::Eq, 0.0, format!("{id}.split.{t}"));
            model.row(&[(xs, 1.0), (vt, -pmin)], Sense::Ge, 0.0, format!("{id}.splitsl.{t}"));
            model.row(&[(xs, 1.0), (vt, -su)], Sense::Le, 0.0, format!("{id}.splitsu.{t}"));
            model.row(&[(xr, 1.0), (ut, -pmin), (vt, pmin)], Sense::Ge, 0.0, format!("{id}.splitrl.{t}"));
            model.row(&[(xr, 1.0), (ut, -pmax), (vt, pmax)], Sense::Le, 0.0, format!("{id}.splitru.{t}"));
            for (j, seg) in g.cost_segments[t - 1].iter().enumerate() {
                model.row(
                    &[(fs, 1.0), (xs, -seg.slope), (vt, -seg.intercept)],
                    Sense::Ge,
                    0.0,
                    format!("{id}.splitfs.{t}.{j}"),
                );
                model.row(
                    &[(fr, 1.0), (xr, -seg.slope), (ut, -seg.intercept), (vt, seg.intercept)],
                    Sense::Ge,
                    0.0,
                    format!("{id}.splitfr.{t}.{j}"),
                );
            }
            model.row(&[(f[t - 1], 1.0), (fs, -1.0), (fr, -1.0)], Sense::Ge, 0.0, format!("{id}.splitf.{t}"));
        }
    }
    if fam.max_up {
        if let Some(mx) = g.max_up {
            let first = if on0 { (mx + 1).saturating_sub(g.initial_on_duration).max(1) } else { mx + 1 };
            for tau in first..=t_max {
                let lo = if tau >= mx { tau + 1 - mx } else { 1 };
                let mut terms: Vec<(VarId, f64)> = (lo..=tau).map(|j| (vi(j), 1.0)).collect();
                terms.push((ui(tau), -1.0));
                model.row(&terms, Sense::Ge, 0.0, format!("{id}.maxup.{tau}"));
            }
        }
    }

    // Objective and start-up states.
    let mut obj: Vec<(VarId, f64)> = Vec::new();
    for t in 1..=t_max {
        obj.push((f[t - 1], 1.0));
        obj.push((ui(t), g.no_load[t - 1]));
        obj.push((ei(t), shutdown));
    }
    let mut delta = Vec::new();
    match single_start {
        Some(c) => {
            for t in 1..=t_max {
                obj.push((vi(t), c));
            }
        }
        None => {
            let windows = state_windows(g);
            let costs: Vec<f64> = g.startup_states.iter().map(|s| s.cost).collect();
            for t in 1..=t_max {
                let ds: Vec<VarId> = (0..costs.len())
                    .map(|s| model.var_cont(format!("delta[{id}][{t}][{s}]"), 0.0, f64::INFINITY))
                    .collect();
                let mut sum: Vec<(VarId, f64)> = ds.iter().map(|&d| (d, 1.0)).collect();
                sum.push((vi(t), -1.0));
                model.row(&sum, Sense::Eq, 0.0, format!("{id}.stype.{t}"));
                for (s, &(lo, hi)) in windows.iter().enumerate() {
                    let mut terms = vec![(ds[s], 1.0)];
                    for j in lo..=hi.min(t.saturating_sub(1)) {
                        terms.push((ei(t - j), -1.0));
                    }
                    let credit = if !on0 {
                        let dt = d0.saturating_add(t - 1);
                        if dt >= lo && dt <= hi {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        0.0
                    };
                    model.row(&terms, Sense::Le, credit, format!("{id}.start.{t}.{s}"));
                }
                for (s, &d) in ds.iter().enumerate() {
                    obj.push((d, costs[s]));
                }
                delta.push(ds);
            }
        }
    }
    model.add_objective(&obj, 0.0);

    let output = x.iter().map(|&xv| vec![(xv, 1.0)]).collect();
    Ok(GenHandle {
        gen_index,
        id: id.clone(),
        kind,
        output,
        status: Some(super::StatusVars { u, v, e, x, f, delta }),
        intervals: None,
        vars: var_start..model.num_vars(),
        rows: row_start..model.num_constraints(),
    })
}
