//! Generators, systems and the instance document.
//!
//! Periods are 1-based in every public method that takes a period; vectors
//! are stored 0-based (`p_max[t - 1]`).

mod format;
pub mod synth;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use format::{parse_instance, serialize_instance};

/// Down-time credited to a unit with no recorded history. Large enough that
/// every start is cold and every min-down restriction is met.
pub const FREE_OFF_HOURS: usize = 1_000_000;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("malformed instance document: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("down time {down_time} is below the minimum down time {min_down}")]
    DownTimeTooShort { down_time: usize, min_down: usize },
}

pub(crate) fn invalid(path: impl Into<String>, message: impl Into<String>) -> InstanceError {
    InstanceError::Invalid {
        path: path.into(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StartupState {
    pub name: String,
    pub cost: f64,
    /// Shortest down time (hours) at which this state applies.
    pub min_off: usize,
}

/// Shut-down cost as a step function of the completed up-duration.
#[derive(Clone, Debug, PartialEq)]
pub enum ShutdownCost {
    Constant(f64),
    /// `(min_duration, cost)` sorted by duration; the first entry starts at 1.
    Steps(Vec<(usize, f64)>),
}

impl ShutdownCost {
    pub fn at(&self, duration: usize) -> f64 {
        match self {
            ShutdownCost::Constant(c) => *c,
            ShutdownCost::Steps(steps) => steps
                .iter()
                .take_while(|(d, _)| *d <= duration)
                .last()
                .map(|&(_, c)| c)
                .unwrap_or(steps[0].1),
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self {
            ShutdownCost::Constant(c) => Some(*c),
            ShutdownCost::Steps(s) if s.iter().all(|&(_, c)| c == s[0].1) => Some(s[0].1),
            ShutdownCost::Steps(_) => None,
        }
    }
}

/// One convex piecewise-linear cost piece: `cost >= slope * x + intercept * on`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSegment {
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSpec {
    pub id: String,
    pub horizon: usize,
    pub p_min: Vec<f64>,
    pub p_max: Vec<f64>,
    pub ramp_up: Vec<f64>,
    pub ramp_down: Vec<f64>,
    pub su_ramp: Vec<f64>,
    /// Indexed by the last on period before a shut-down.
    pub sd_ramp: Vec<f64>,
    pub min_up: usize,
    pub min_down: usize,
    /// `None` means unlimited.
    pub max_up: Option<usize>,
    /// Whether min-up applies to a run starting in the period.
    pub mu_enforced: Vec<bool>,
    /// Whether min-down applies to a gap ending with a start in the period.
    pub md_enforced: Vec<bool>,
    pub no_load: Vec<f64>,
    pub cost_segments: Vec<Vec<CostSegment>>,
    /// Sorted by `min_off`; the first state starts at `min_down`.
    pub startup_states: Vec<StartupState>,
    pub shutdown_cost: ShutdownCost,
    pub initial_on_duration: usize,
    pub initial_off_duration: usize,
    pub bus: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GeneratorClass {
    G1,
    G2,
    G3,
    G4,
}

impl std::fmt::Display for GeneratorClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl GeneratorSpec {
    pub fn is_initially_on(&self) -> bool {
        self.initial_on_duration > 0
    }

    /// Hours already off before period 1; free units count as long off.
    pub fn initial_down(&self) -> usize {
        if self.initial_on_duration > 0 {
            0
        } else if self.initial_off_duration > 0 {
            self.initial_off_duration
        } else {
            FREE_OFF_HOURS
        }
    }

    /// Minimum length of a run starting in period `t`.
    pub fn min_up_at(&self, t: usize) -> usize {
        if self.mu_enforced[t - 1] {
            self.min_up
        } else {
            1
        }
    }

    /// Minimum gap before a restart in period `t`.
    pub fn min_down_at(&self, t: usize) -> usize {
        if self.md_enforced[t - 1] {
            self.min_down
        } else {
            1
        }
    }

    /// Start-up cost after `down_time` hours off.
    pub fn startup_cost_at(&self, down_time: usize) -> Result<f64, InstanceError> {
        if down_time < self.min_down {
            return Err(InstanceError::DownTimeTooShort {
                down_time,
                min_down: self.min_down,
            });
        }
        Ok(self.startup_cost_unchecked(down_time))
    }

    /// As [`Self::startup_cost_at`], charging the hot cost when a relaxed
    /// min-down allows a shorter gap.
    pub fn startup_cost_unchecked(&self, down_time: usize) -> f64 {
        self.startup_states
            .iter()
            .take_while(|s| s.min_off <= down_time)
            .last()
            .unwrap_or(&self.startup_states[0])
            .cost
    }

    pub fn single_startup_cost(&self) -> Option<f64> {
        let c = self.startup_states[0].cost;
        self.startup_states.iter().all(|s| s.cost == c).then_some(c)
    }

    /// Cost of producing `x` in period `t` while on, excluding no-load.
    pub fn energy_cost(&self, t: usize, x: f64) -> f64 {
        self.cost_segments[t - 1]
            .iter()
            .map(|s| s.slope * x + s.intercept)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn time_invariant(&self) -> bool {
        fn flat(v: &[f64]) -> bool {
            v.iter().all(|&a| a == v[0])
        }
        flat(&self.p_min)
            && flat(&self.p_max)
            && flat(&self.ramp_up)
            && flat(&self.ramp_down)
            && flat(&self.su_ramp)
            && flat(&self.sd_ramp)
            && flat(&self.no_load)
            && self.cost_segments.iter().all(|s| *s == self.cost_segments[0])
    }
}

/// First period in which an initially-on unit may be off is `initial_lock + 1`.
pub fn initial_lock(g: &GeneratorSpec) -> usize {
    g.min_up.saturating_sub(g.initial_on_duration)
}

pub fn classify(g: &GeneratorSpec) -> GeneratorClass {
    let basic = g.time_invariant()
        && g.single_startup_cost().is_some()
        && g.shutdown_cost.constant_value().is_some()
        && g.mu_enforced.iter().all(|&b| b)
        && g.md_enforced.iter().all(|&b| b);
    if !basic || g.horizon == 0 {
        return GeneratorClass::G4;
    }
    let (pmin, pmax) = (g.p_min[0], g.p_max[0]);
    let ramps_loose = g.ramp_up[0] >= pmax - pmin && g.ramp_down[0] >= pmax - pmin;
    if !ramps_loose || g.sd_ramp[0] < pmax {
        return GeneratorClass::G4;
    }
    let su = g.su_ramp[0];
    let g2_like = if su >= pmax {
        false
    } else if su >= pmin {
        true
    } else {
        return GeneratorClass::G4;
    };
    match (g.max_up.is_some(), g2_like) {
        (true, _) => GeneratorClass::G3,
        (false, false) => GeneratorClass::G1,
        (false, true) => GeneratorClass::G2,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    /// Fraction of system demand drawn at this bus.
    pub load_share: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub shift_factors: Vec<f64>,
    pub limit: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemInstance {
    pub name: String,
    pub horizon: usize,
    pub demand: Vec<f64>,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub generators: Vec<GeneratorSpec>,
}

impl SystemInstance {
    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn has_transmission(&self) -> bool {
        !self.lines.is_empty()
    }

    pub fn classes(&self) -> Vec<GeneratorClass> {
        self.generators.iter().map(classify).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn base_unit() -> GeneratorSpec {
        let t = 4;
        GeneratorSpec {
            id: "g".into(),
            horizon: t,
            p_min: vec![20.0; t],
            p_max: vec![100.0; t],
            ramp_up: vec![100.0; t],
            ramp_down: vec![100.0; t],
            su_ramp: vec![100.0; t],
            sd_ramp: vec![100.0; t],
            min_up: 2,
            min_down: 2,
            max_up: None,
            mu_enforced: vec![true; t],
            md_enforced: vec![true; t],
            no_load: vec![5.0; t],
            cost_segments: vec![vec![CostSegment { slope: 20.0, intercept: 0.0 }]; t],
            startup_states: vec![StartupState {
                name: "single".into(),
                cost: 100.0,
                min_off: 2,
            }],
            shutdown_cost: ShutdownCost::Constant(0.0),
            initial_on_duration: 0,
            initial_off_duration: 3,
            bus: "b1".into(),
        }
    }

    #[test]
    fn class_examples() {
        let g = base_unit();
        assert_eq!(classify(&g), GeneratorClass::G1);
        let mut g2 = g.clone();
        g2.su_ramp = vec![50.0; 4];
        assert_eq!(classify(&g2), GeneratorClass::G2);
        let mut g3 = g2.clone();
        g3.max_up = Some(10);
        assert_eq!(classify(&g3), GeneratorClass::G3);
        let mut g4 = g.clone();
        g4.p_max[2] = 90.0;
        assert_eq!(classify(&g4), GeneratorClass::G4);
        let mut g4 = g.clone();
        g4.startup_states = vec![
            StartupState { name: "hot".into(), cost: 50.0, min_off: 2 },
            StartupState { name: "cold".into(), cost: 80.0, min_off: 4 },
        ];
        assert_eq!(classify(&g4), GeneratorClass::G4);
    }

    #[test]
    fn startup_cost_boundaries() {
        let mut g = base_unit();
        assert_eq!(g.startup_cost_at(3).unwrap(), 100.0);
        g.startup_states = vec![
            StartupState { name: "hot".into(), cost: 50.0, min_off: 2 },
            StartupState { name: "warm".into(), cost: 80.0, min_off: 4 },
            StartupState { name: "cold".into(), cost: 120.0, min_off: 8 },
        ];
        assert_eq!(g.startup_cost_at(3).unwrap(), 50.0);
        assert_eq!(g.startup_cost_at(4).unwrap(), 80.0);
        assert_eq!(g.startup_cost_at(8).unwrap(), 120.0);
        assert!(g.startup_cost_at(1).is_err());
        assert_eq!(g.startup_cost_unchecked(1), 50.0);
    }

    #[test]
    fn initial_lock_examples() {
        let mut g = base_unit();
        g.initial_on_duration = 1;
        assert_eq!(initial_lock(&g), 1);
        g.initial_on_duration = 5;
        assert_eq!(initial_lock(&g), 0);
        g.min_up = 4;
        g.initial_on_duration = 0;
        assert_eq!(initial_lock(&g), 4);
    }

    #[test]
    fn shutdown_steps() {
        let s = ShutdownCost::Steps(vec![(1, 10.0), (3, 25.0)]);
        assert_eq!(s.at(1), 10.0);
        assert_eq!(s.at(2), 10.0);
        assert_eq!(s.at(7), 25.0);
        assert_eq!(s.constant_value(), None);
    }
}
