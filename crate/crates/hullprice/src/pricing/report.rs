use std::fmt::Write as _;

use serde::Serialize;

use super::Algorithm;

/// One relaxed-LP solve inside an iterative run.
#[derive(Clone, Debug, Serialize)]
pub struct TraceEntry {
    pub solve: usize,
    /// `p1` (first solve), `p2`/`p3` (upgrade found by that test) or `iac`.
    pub phase: String,
    pub upgraded: Vec<String>,
    pub gamma_size: usize,
    pub p1_objective: f64,
    /// `Z' - P1 objective`; never increases along a run.
    pub uplift_bound: f64,
    /// Whether the self-schedule test raised no flags at this solve's duals.
    pub flags_clear: bool,
    /// Uplift from the oracle Lagrangian, present when `flags_clear`.
    pub uplift: Option<f64>,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PricingRunReport {
    pub algorithm: Algorithm,
    pub instance: String,
    /// Duals of the coupling rows: balance per period, then line rows.
    pub prices: Vec<f64>,
    /// Price per period and bus.
    pub bus_prices: Vec<Vec<f64>>,
    /// MIP incumbent cost.
    pub z_qip: f64,
    pub z_qip_bound: f64,
    /// Objective of the LP the prices came from.
    pub relaxed_objective: Option<f64>,
    /// Lagrangian value over the run's final formulations.
    pub z_c_lp: Option<f64>,
    /// Lagrangian value from the exact self-schedule oracle.
    pub z_c: f64,
    pub uplift: f64,
    /// General units priced with the interval hull.
    pub gamma: Vec<String>,
    pub iac_accepted: usize,
    pub trace: Vec<TraceEntry>,
    pub iterations: usize,
    pub iteration_cap_hit: bool,
    pub fractional_flags: Vec<String>,
    pub elapsed_s: f64,
    pub price_diff_vs_lmp: Option<f64>,
}

impl PricingRunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Zeroes wall-clock fields so reruns are byte-identical.
    pub fn strip_timing(&mut self) {
        self.elapsed_s = 0.0;
        for e in &mut self.trace {
            e.elapsed_s = 0.0;
        }
    }
}

/// Comparison table in the layout of the paper's results table: pricing LP
/// value, uplift, time, saving (TLP against LMP, later rows against TLP as
/// `+x`), whether the uplift matches OPT, and the price difference to LMP.
pub fn render_table(reports: &[PricingRunReport], tol: f64) -> String {
    let find = |a: Algorithm| reports.iter().find(|r| r.algorithm == a).map(|r| r.uplift);
    let (lmp, tlp, opt) = (find(Algorithm::Lmp), find(Algorithm::Tlp), find(Algorithm::Opt));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<6} {:>16} {:>14} {:>12} {:>12} {:>8} {:>10}",
        "Model", "Solution", "Uplift", "Time(s)", "Save", "Optimal", "Diff"
    );
    for r in reports {
        let save = match (r.algorithm, lmp, tlp) {
            (Algorithm::Lmp, _, _) => "-".to_string(),
            (Algorithm::Tlp, Some(l), _) => format!("{:.3}", unsigned_zero(l - r.uplift)),
            (_, _, Some(t)) => format!("+{:.3}", unsigned_zero(t - r.uplift)),
            _ => "-".to_string(),
        };
        let optimal = match (r.algorithm, opt) {
            (Algorithm::Opt, _) => "*",
            (_, Some(o)) if (r.uplift - o).abs() <= tol * (1.0 + o.abs()) => "Y",
            (_, Some(_)) => "N",
            (_, None) => "-",
        };
        let solution = match r.algorithm {
            Algorithm::Lmp => "-".to_string(),
            _ => format!("{:.3}", r.relaxed_objective.unwrap_or(r.z_c)),
        };
        let time = match r.algorithm {
            Algorithm::Iac1 | Algorithm::Iac2 => format!("{:.3}(+{})", r.elapsed_s, r.iac_accepted),
            _ => format!("{:.3}", r.elapsed_s),
        };
        let diff = r.price_diff_vs_lmp.map_or("-".into(), |d| format!("{d:.4}"));
        let _ = writeln!(
            out,
            "{:<6} {:>16} {:>14.4} {:>12} {:>12} {:>8} {:>10}",
            r.algorithm.name(),
            solution,
            r.uplift,
            time,
            save,
            optimal,
            diff
        );
    }
    out
}

/// Maps values that print as zero at three decimals to `+0.0`.
fn unsigned_zero(x: f64) -> f64 {
    if x.abs() < 5e-4 {
        0.0
    } else {
        x
    }
}
