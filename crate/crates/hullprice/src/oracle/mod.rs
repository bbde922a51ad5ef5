//! Single-generator ground truth: interval dispatch LPs, the interval DP and
//! a brute-force schedule enumerator.
//!
//! Net cost of a schedule at prices `price` is
//! `sum(no_load + f(x) - price * x) + start-up + shut-down`. Start-up cost is
//! charged by down time, shut-down cost by the completed run length (the run
//! length of an initially-on unit includes its pre-horizon hours).

use std::collections::HashMap;

use thiserror::Error;

use crate::algebra::{LinearModel, Sense};
use crate::instance::{initial_lock, GeneratorSpec};
use crate::simplexcore::{solve_lp, SolveStatus, SolverOptions};

/// Largest horizon the enumerator accepts.
pub const ENUMERATION_MAX_HORIZON: usize = 12;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("horizon {0} exceeds the enumeration limit of {ENUMERATION_MAX_HORIZON}")]
    HorizonTooLarge(usize),
    #[error("price vector has {found} entries, expected {expected}")]
    PriceLength { expected: usize, found: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dispatch {
    /// `sum(f(x) - price * x)` over the interval, no-load excluded.
    pub cost: f64,
    /// Output for each period of the interval.
    pub x: Vec<f64>,
}

/// Optimal dispatch of an ON run `[t, k]`. `after_start` is false only for the
/// continuation of an initially-on unit, which is exempt from the start-up
/// ramp. Returns `None` when the run cannot be dispatched.
pub fn interval_dispatch(g: &GeneratorSpec, t: usize, k: usize, price: &[f64], after_start: bool) -> Option<Dispatch> {
    assert!(1 <= t && t <= k && k <= g.horizon);
    let mut m = LinearModel::new();
    let mut xs = Vec::new();
    let mut obj = Vec::new();
    for s in t..=k {
        let mut hi = g.p_max[s - 1];
        if s == t && after_start {
            hi = hi.min(g.su_ramp[s - 1]);
        }
        if s == k && k < g.horizon {
            hi = hi.min(g.sd_ramp[s - 1]);
        }
        let lo = g.p_min[s - 1];
        if lo > hi + 1e-9 {
            return None;
        }
        let x = m.var_cont(format!("x{s}"), lo, hi.max(lo));
        let phi = m.var_cont(format!("phi{s}"), f64::NEG_INFINITY, f64::INFINITY);
        for (j, seg) in g.cost_segments[s - 1].iter().enumerate() {
            m.row(&[(phi, 1.0), (x, -seg.slope)], Sense::Ge, seg.intercept, format!("cost{s}.{j}"));
        }
        if s > t {
            let prev = xs[xs.len() - 1];
            m.row(&[(x, 1.0), (prev, -1.0)], Sense::Le, g.ramp_up[s - 1], format!("rup{s}"));
            m.row(&[(prev, 1.0), (x, -1.0)], Sense::Le, g.ramp_down[s - 1], format!("rdn{s}"));
        }
        obj.push((phi, 1.0));
        obj.push((x, -price[s - 1]));
        xs.push(x);
    }
    m.set_objective(&obj, 0.0).expect("finite objective");
    let r = solve_lp(&m, &SolverOptions::default());
    match r.status {
        SolveStatus::Optimal => Some(Dispatch {
            cost: r.objective,
            x: xs.iter().map(|&v| r.value(v)).collect(),
        }),
        SolveStatus::Infeasible => None,
        other => panic!("interval dispatch LP ended with {other:?}"),
    }
}

/// Net dispatch cost of a run started inside the horizon; `+inf` if infeasible.
pub fn interval_dispatch_cost(g: &GeneratorSpec, t: usize, k: usize, price: &[f64]) -> f64 {
    interval_dispatch(g, t, k, price, true).map_or(f64::INFINITY, |d| d.cost)
}

/// Memoised interval dispatch for one price vector.
pub struct IntervalCache<'a> {
    g: &'a GeneratorSpec,
    price: &'a [f64],
    memo: HashMap<(usize, usize, bool), Option<Dispatch>>,
}

impl<'a> IntervalCache<'a> {
    pub fn new(g: &'a GeneratorSpec, price: &'a [f64]) -> Self {
        IntervalCache {
            g,
            price,
            memo: HashMap::new(),
        }
    }

    pub fn get(&mut self, t: usize, k: usize, after_start: bool) -> Option<&Dispatch> {
        let (g, price) = (self.g, self.price);
        self.memo
            .entry((t, k, after_start))
            .or_insert_with(|| interval_dispatch(g, t, k, price, after_start))
            .as_ref()
    }

    /// Run cost including no-load; `None` if the run cannot be dispatched.
    pub fn run_cost(&mut self, t: usize, k: usize, after_start: bool) -> Option<f64> {
        let no_load: f64 = self.g.no_load[t - 1..k].iter().sum();
        self.get(t, k, after_start).map(|d| d.cost + no_load)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleValue {
    pub on: Vec<bool>,
    pub x: Vec<f64>,
    pub net_cost: f64,
}

#[derive(Clone, Debug)]
pub struct DpTables {
    /// Best cost-to-go after the last on period `k` (index `k`, 0..T-1).
    pub v_down: Vec<f64>,
    /// Best cost-to-go when starting in period `t` (index `t`, 1..=T; index 0 unused).
    pub v_up: Vec<f64>,
    pub phi: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum DownChoice {
    StayOff,
    Start(usize),
}

fn check_price(g: &GeneratorSpec, price: &[f64]) -> Result<(), OracleError> {
    if price.len() != g.horizon {
        return Err(OracleError::PriceLength {
            expected: g.horizon,
            found: price.len(),
        });
    }
    Ok(())
}

/// Off time before a restart at `t` after last-on period `k` (0 = before the horizon).
fn gap(g: &GeneratorSpec, k: usize, t: usize) -> usize {
    let base = t - k - 1;
    if k == 0 && !g.is_initially_on() {
        base + g.initial_down()
    } else {
        base
    }
}

/// Dynamic program over the interval graph. Ties prefer staying off and then
/// the earliest shut-down.
pub fn dp_self_schedule(g: &GeneratorSpec, price: &[f64]) -> Result<(ScheduleValue, DpTables), OracleError> {
    check_price(g, price)?;
    let t_max = g.horizon;
    let max_up = g.max_up.unwrap_or(usize::MAX);
    let mut cache = IntervalCache::new(g, price);
    let mut v_down = vec![f64::INFINITY; t_max];
    let mut down_arg = vec![DownChoice::StayOff; t_max];
    let mut v_up = vec![f64::INFINITY; t_max + 1];
    let mut up_arg = vec![0usize; t_max + 1];

    let down_value = |k: usize, v_up: &[f64]| -> (f64, DownChoice) {
        let mut best = (0.0, DownChoice::StayOff);
        for t in k + 1..=t_max {
            let gp = gap(g, k, t);
            if gp < g.min_down_at(t) {
                continue;
            }
            let c = g.startup_cost_unchecked(gp) + v_up[t];
            if c < best.0 {
                best = (c, DownChoice::Start(t));
            }
        }
        best
    };

    for j in (1..=t_max).rev() {
        if j < t_max {
            let (v, a) = down_value(j, &v_up);
            v_down[j] = v;
            down_arg[j] = a;
        }
        for k in j..=t_max {
            let len = k - j + 1;
            if len > max_up || (k < t_max && len < g.min_up_at(j)) {
                continue;
            }
            let Some(run) = cache.run_cost(j, k, true) else { continue };
            let tail = if k < t_max { g.shutdown_cost.at(len) + v_down[k] } else { 0.0 };
            let c = run + tail;
            if c < v_up[j] {
                v_up[j] = c;
                up_arg[j] = k;
            }
        }
    }
    let (v0, a0) = down_value(0, &v_up);
    v_down[0] = v0;
    down_arg[0] = a0;

    // Phi and the first decision.
    let s0 = g.initial_on_duration;
    let (phi, first_k) = if g.is_initially_on() {
        let lo = initial_lock(g).min(t_max);
        let hi = max_up.saturating_sub(s0).min(t_max);
        let mut best = (f64::INFINITY, None);
        for k in lo..=hi {
            let c = if k == 0 {
                g.shutdown_cost.at(s0) + v_down[0]
            } else {
                let Some(run) = cache.run_cost(1, k, false) else { continue };
                run + if k < t_max { g.shutdown_cost.at(s0 + k) + v_down[k] } else { 0.0 }
            };
            if c < best.0 {
                best = (c, Some(k));
            }
        }
        best
    } else {
        (v_down[0], Some(0))
    };

    let mut on = vec![false; t_max];
    let mut x = vec![0.0; t_max];
    if let Some(k0) = first_k {
        let mut mark = |t: usize, k: usize, after_start: bool, cache: &mut IntervalCache| {
            let d = cache.get(t, k, after_start).expect("chosen run is dispatchable").clone();
            for s in t..=k {
                on[s - 1] = true;
                x[s - 1] = d.x[s - t];
            }
        };
        if k0 > 0 {
            mark(1, k0, false, &mut cache);
        }
        let mut k = k0;
        while k < t_max {
            match down_arg[k] {
                DownChoice::StayOff => break,
                DownChoice::Start(t) => {
                    let kk = up_arg[t];
                    mark(t, kk, true, &mut cache);
                    k = kk;
                }
            }
        }
    }
    Ok((
        ScheduleValue { on, x, net_cost: phi },
        DpTables { v_down, v_up, phi },
    ))
}

/// Checks an on/off pattern against every duration rule of `g`.
pub fn pattern_is_feasible(g: &GeneratorSpec, on: &[bool]) -> bool {
    runs_of(g, on).is_some()
}

/// Maximal ON runs `(t, k)` of a feasible pattern; `None` if a rule is broken.
fn runs_of(g: &GeneratorSpec, on: &[bool]) -> Option<Vec<(usize, usize)>> {
    let t_max = g.horizon;
    let max_up = g.max_up.unwrap_or(usize::MAX);
    let s0 = g.initial_on_duration;
    let mut runs = Vec::new();
    let mut t = 1;
    while t <= t_max {
        if !on[t - 1] {
            t += 1;
            continue;
        }
        let mut k = t;
        while k < t_max && on[k] {
            k += 1;
        }
        runs.push((t, k));
        t = k + 1;
    }
    if g.is_initially_on() {
        let lock = initial_lock(g);
        let first_len = match runs.first() {
            Some(&(1, k)) => k,
            _ => 0,
        };
        // The inherited run must meet min-up unless the horizon ends first.
        if first_len < t_max && first_len < lock {
            return None;
        }
        if s0 + first_len > max_up {
            return None;
        }
    }
    let mut last_on = 0;
    for (idx, &(t, k)) in runs.iter().enumerate() {
        let continuation = idx == 0 && t == 1 && g.is_initially_on();
        if continuation {
            last_on = k;
            continue;
        }
        let len = k - t + 1;
        if len > max_up || (k < t_max && len < g.min_up_at(t)) {
            return None;
        }
        if gap(g, last_on, t) < g.min_down_at(t) {
            return None;
        }
        last_on = k;
    }
    Some(runs)
}

/// Net cost of a fixed on/off pattern with optimal dispatch; `None` if infeasible.
pub fn pattern_cost(g: &GeneratorSpec, on: &[bool], cache: &mut IntervalCache) -> Option<(f64, Vec<f64>)> {
    let t_max = g.horizon;
    let runs = runs_of(g, on)?;
    let s0 = g.initial_on_duration;
    let mut total = 0.0;
    let mut x = vec![0.0; t_max];
    let mut last_on = 0;
    if g.is_initially_on() && !on[0] {
        total += g.shutdown_cost.at(s0);
    }
    for (idx, &(t, k)) in runs.iter().enumerate() {
        let continuation = idx == 0 && t == 1 && g.is_initially_on();
        let run = cache.run_cost(t, k, !continuation)?;
        let d = cache.get(t, k, !continuation)?;
        for s in t..=k {
            x[s - 1] = d.x[s - t];
        }
        total += run;
        if !continuation {
            total += g.startup_cost_unchecked(gap(g, last_on, t));
        }
        if k < t_max {
            let dur = if continuation { s0 + k } else { k - t + 1 };
            total += g.shutdown_cost.at(dur);
        }
        last_on = k;
    }
    Some((total, x))
}

/// Exhaustive search over on/off patterns. Returns the best schedule and the
/// number of patterns scanned. Ties keep the first pattern in counting order.
pub fn enumerate_best_schedule(g: &GeneratorSpec, price: &[f64]) -> Result<(ScheduleValue, usize), OracleError> {
    let t_max = g.horizon;
    if t_max > ENUMERATION_MAX_HORIZON {
        return Err(OracleError::HorizonTooLarge(t_max));
    }
    check_price(g, price)?;
    let mut cache = IntervalCache::new(g, price);
    let mut best: Option<ScheduleValue> = None;
    let total = 1usize << t_max;
    for mask in 0..total {
        let on: Vec<bool> = (0..t_max).map(|s| (mask >> s) & 1 == 1).collect();
        if let Some((c, x)) = pattern_cost(g, &on, &mut cache) {
            if best.as_ref().map_or(true, |b| c < b.net_cost - 1e-12) {
                best = Some(ScheduleValue { on, x, net_cost: c });
            }
        }
    }
    let best = best.expect("some pattern is always feasible");
    Ok((best, total))
}
