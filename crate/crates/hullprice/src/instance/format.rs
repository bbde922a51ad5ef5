//! JSON instance document.
//!
//! Every generator field may be a scalar (broadcast to all periods) or an
//! array of length `horizon`. Required fields are checked here rather than by
//! serde so that errors carry a field path.

use serde::{Deserialize, Serialize};

use super::{
    invalid, Bus, CostSegment, GeneratorSpec, InstanceError, Line, ShutdownCost, StartupState, SystemInstance,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Series<T> {
    Scalar(T),
    List(Vec<T>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Segments {
    Flat(Vec<[f64; 2]>),
    PerPeriod(Vec<Vec<[f64; 2]>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ShutdownStep {
    min_duration: usize,
    cost: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum RawShutdown {
    Constant(f64),
    Steps(Vec<ShutdownStep>),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bus: Option<String>,
    p_min: Option<Series<f64>>,
    p_max: Option<Series<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ramp_up: Option<Series<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ramp_down: Option<Series<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    su_ramp: Option<Series<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sd_ramp: Option<Series<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_up: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_down: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_up: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mu_enforced: Option<Series<bool>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    md_enforced: Option<Series<bool>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    no_load: Option<Series<f64>>,
    cost_segments: Option<Segments>,
    #[serde(skip_serializing_if = "Option::is_none")]
    startup_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    startup_states: Option<Vec<StartupState>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shutdown_cost: Option<RawShutdown>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_on_duration: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    initial_off_duration: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    horizon: Option<usize>,
    demand: Option<Series<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    buses: Option<Vec<Bus>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    lines: Vec<Line>,
    generators: Option<Vec<RawGenerator>>,
}

fn required<T>(v: Option<T>, path: &str) -> Result<T, InstanceError> {
    v.ok_or_else(|| invalid(path, "missing required field"))
}

fn expand<T: Clone>(s: Option<Series<T>>, default: Option<T>, t: usize, path: &str) -> Result<Vec<T>, InstanceError> {
    match s {
        None => match default {
            Some(d) => Ok(vec![d; t]),
            None => Err(invalid(path, "missing required field")),
        },
        Some(Series::Scalar(v)) => Ok(vec![v; t]),
        Some(Series::List(v)) if v.len() == t => Ok(v),
        Some(Series::List(v)) => Err(invalid(
            path,
            format!("expected {t} entries (one per period), found {}", v.len()),
        )),
    }
}

fn compress<T: Clone + PartialEq>(v: &[T]) -> Series<T> {
    if !v.is_empty() && v.iter().all(|a| *a == v[0]) {
        Series::Scalar(v[0].clone())
    } else {
        Series::List(v.to_vec())
    }
}

pub fn parse_instance(text: &str) -> Result<SystemInstance, InstanceError> {
    let raw: RawInstance = serde_json::from_str(text)?;
    let t = required(raw.horizon, "horizon")?;
    if t == 0 {
        return Err(invalid("horizon", "must be at least 1"));
    }
    let demand = expand(raw.demand, None, t, "demand")?;
    let buses = raw.buses.unwrap_or_else(|| {
        vec![Bus {
            id: "b1".into(),
            load_share: 1.0,
        }]
    });
    let default_bus = buses.first().map(|b| b.id.clone()).unwrap_or_default();
    let raw_gens = required(raw.generators, "generators")?;
    let mut generators = Vec::with_capacity(raw_gens.len());
    for (i, rg) in raw_gens.into_iter().enumerate() {
        generators.push(build_generator(rg, t, &format!("generators[{i}]"), &default_bus)?);
    }
    let inst = SystemInstance {
        name: raw.name.unwrap_or_default(),
        horizon: t,
        demand,
        buses,
        lines: raw.lines,
        generators,
    };
    validate_system(&inst)?;
    Ok(inst)
}

fn build_generator(rg: RawGenerator, t: usize, path: &str, default_bus: &str) -> Result<GeneratorSpec, InstanceError> {
    let p = |f: &str| format!("{path}.{f}");
    let p_max = expand(rg.p_max, None, t, &p("p_max"))?;
    let p_min = expand(rg.p_min, None, t, &p("p_min"))?;
    let loose = p_max.iter().cloned().fold(0.0, f64::max);
    let min_down = rg.min_down.unwrap_or(1);
    let cost_segments: Vec<Vec<CostSegment>> = match required(rg.cost_segments, &p("cost_segments"))? {
        Segments::Flat(s) => vec![to_segments(&s); t],
        Segments::PerPeriod(s) => {
            if s.len() != t {
                return Err(invalid(
                    p("cost_segments"),
                    format!("expected {t} per-period lists, found {}", s.len()),
                ));
            }
            s.iter().map(|v| to_segments(v)).collect()
        }
    };
    let startup_states = match (rg.startup_cost, rg.startup_states) {
        (Some(_), Some(_)) => {
            return Err(invalid(
                p("startup_cost"),
                "give either startup_cost or startup_states, not both",
            ))
        }
        (Some(c), None) => vec![StartupState {
            name: "single".into(),
            cost: c,
            min_off: min_down,
        }],
        (None, Some(s)) => s,
        (None, None) => vec![StartupState {
            name: "single".into(),
            cost: 0.0,
            min_off: min_down,
        }],
    };
    let shutdown_cost = match rg.shutdown_cost {
        None => ShutdownCost::Constant(0.0),
        Some(RawShutdown::Constant(c)) => ShutdownCost::Constant(c),
        Some(RawShutdown::Steps(s)) => ShutdownCost::Steps(s.iter().map(|x| (x.min_duration, x.cost)).collect()),
    };
    let g = GeneratorSpec {
        id: required(rg.id, &p("id"))?,
        horizon: t,
        ramp_up: expand(rg.ramp_up, Some(loose), t, &p("ramp_up"))?,
        ramp_down: expand(rg.ramp_down, Some(loose), t, &p("ramp_down"))?,
        su_ramp: expand(rg.su_ramp, Some(loose), t, &p("su_ramp"))?,
        sd_ramp: expand(rg.sd_ramp, Some(loose), t, &p("sd_ramp"))?,
        p_min,
        p_max,
        min_up: rg.min_up.unwrap_or(1),
        min_down,
        max_up: rg.max_up,
        mu_enforced: expand(rg.mu_enforced, Some(true), t, &p("mu_enforced"))?,
        md_enforced: expand(rg.md_enforced, Some(true), t, &p("md_enforced"))?,
        no_load: expand(rg.no_load, Some(0.0), t, &p("no_load"))?,
        cost_segments,
        startup_states,
        shutdown_cost,
        initial_on_duration: rg.initial_on_duration.unwrap_or(0),
        initial_off_duration: rg.initial_off_duration.unwrap_or(0),
        bus: rg.bus.unwrap_or_else(|| default_bus.to_string()),
    };
    validate_generator(&g, path)?;
    Ok(g)
}

fn to_segments(s: &[[f64; 2]]) -> Vec<CostSegment> {
    s.iter()
        .map(|&[slope, intercept]| CostSegment { slope, intercept })
        .collect()
}

/// Checks every generator invariant; errors name the field and period.
pub fn validate_generator(g: &GeneratorSpec, path: &str) -> Result<(), InstanceError> {
    let p = |f: &str| format!("{path}.{f}");
    let t = g.horizon;
    let series: [(&str, &Vec<f64>); 7] = [
        ("p_min", &g.p_min),
        ("p_max", &g.p_max),
        ("ramp_up", &g.ramp_up),
        ("ramp_down", &g.ramp_down),
        ("su_ramp", &g.su_ramp),
        ("sd_ramp", &g.sd_ramp),
        ("no_load", &g.no_load),
    ];
    for (name, v) in series {
        if v.len() != t {
            return Err(invalid(p(name), format!("expected {t} entries")));
        }
        for (k, &a) in v.iter().enumerate() {
            if !a.is_finite() {
                return Err(invalid(p(name), format!("period {}: value is not finite", k + 1)));
            }
            if a < 0.0 && name != "no_load" {
                return Err(invalid(p(name), format!("period {}: must be nonnegative", k + 1)));
            }
        }
    }
    for k in 0..t {
        if g.p_min[k] > g.p_max[k] {
            return Err(invalid(
                p("p_min"),
                format!("period {}: p_min {} exceeds p_max {}", k + 1, g.p_min[k], g.p_max[k]),
            ));
        }
    }
    if g.min_up < 1 {
        return Err(invalid(p("min_up"), "must be at least 1"));
    }
    if g.min_down < 1 {
        return Err(invalid(p("min_down"), "must be at least 1"));
    }
    if let Some(mx) = g.max_up {
        if mx < g.min_up {
            return Err(invalid(p("max_up"), "must be at least min_up"));
        }
    }
    if g.mu_enforced.len() != t || g.md_enforced.len() != t {
        return Err(invalid(p("mu_enforced"), format!("expected {t} entries")));
    }
    if g.cost_segments.len() != t {
        return Err(invalid(p("cost_segments"), format!("expected {t} per-period lists")));
    }
    for (k, segs) in g.cost_segments.iter().enumerate() {
        if segs.is_empty() {
            return Err(invalid(p("cost_segments"), format!("period {}: no segments", k + 1)));
        }
        for w in segs.windows(2) {
            if w[1].slope <= w[0].slope {
                return Err(invalid(
                    p("cost_segments"),
                    format!("period {}: slopes must be strictly increasing", k + 1),
                ));
            }
        }
        if segs.iter().any(|s| !s.slope.is_finite() || !s.intercept.is_finite()) {
            return Err(invalid(p("cost_segments"), format!("period {}: value is not finite", k + 1)));
        }
    }
    let states = &g.startup_states;
    if states.is_empty() {
        return Err(invalid(p("startup_states"), "at least one state required"));
    }
    if states[0].min_off != g.min_down {
        return Err(invalid(
            p("startup_states"),
            format!("first state must start at min_down = {}", g.min_down),
        ));
    }
    for (k, w) in states.windows(2).enumerate() {
        if w[1].min_off <= w[0].min_off {
            return Err(invalid(
                format!("{path}.startup_states[{}].min_off", k + 1),
                "windows must be strictly increasing",
            ));
        }
        if w[1].cost < w[0].cost {
            return Err(invalid(
                format!("{path}.startup_states[{}].cost", k + 1),
                "start-up cost must be non-decreasing in down time",
            ));
        }
    }
    if states.iter().any(|s| !s.cost.is_finite() || s.cost < 0.0) {
        return Err(invalid(p("startup_states"), "costs must be finite and nonnegative"));
    }
    match &g.shutdown_cost {
        ShutdownCost::Constant(c) if !c.is_finite() || *c < 0.0 => {
            return Err(invalid(p("shutdown_cost"), "must be finite and nonnegative"));
        }
        ShutdownCost::Steps(s) => {
            if s.is_empty() || s[0].0 != 1 {
                return Err(invalid(p("shutdown_cost"), "steps must start at duration 1"));
            }
            if s.windows(2).any(|w| w[1].0 <= w[0].0) {
                return Err(invalid(p("shutdown_cost"), "step durations must be strictly increasing"));
            }
            if s.iter().any(|&(_, c)| !c.is_finite() || c < 0.0) {
                return Err(invalid(p("shutdown_cost"), "costs must be finite and nonnegative"));
            }
        }
        _ => {}
    }
    if g.initial_on_duration > 0 && g.initial_off_duration > 0 {
        return Err(invalid(
            p("initial_on_duration"),
            "a unit cannot be both initially on and initially off",
        ));
    }
    if let Some(mx) = g.max_up {
        if g.initial_on_duration > mx {
            return Err(invalid(p("initial_on_duration"), "exceeds max_up"));
        }
    }
    Ok(())
}

fn validate_system(inst: &SystemInstance) -> Result<(), InstanceError> {
    let t = inst.horizon;
    if inst.demand.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(invalid("demand", "entries must be finite and nonnegative"));
    }
    if inst.buses.is_empty() {
        return Err(invalid("buses", "at least one bus required"));
    }
    let share: f64 = inst.buses.iter().map(|b| b.load_share).sum();
    if (share - 1.0).abs() > 1e-9 {
        return Err(invalid("buses", format!("load shares sum to {share}, expected 1")));
    }
    for (i, b) in inst.buses.iter().enumerate() {
        if inst.buses[..i].iter().any(|o| o.id == b.id) {
            return Err(invalid(format!("buses[{i}].id"), format!("duplicate bus id {}", b.id)));
        }
    }
    for (l, line) in inst.lines.iter().enumerate() {
        if line.shift_factors.len() != inst.buses.len() {
            return Err(invalid(
                format!("lines[{l}].shift_factors"),
                format!("expected {} entries (one per bus)", inst.buses.len()),
            ));
        }
        if !(line.limit >= 0.0) {
            return Err(invalid(format!("lines[{l}].limit"), "must be nonnegative"));
        }
    }
    for (i, g) in inst.generators.iter().enumerate() {
        if g.horizon != t {
            return Err(invalid(format!("generators[{i}]"), "horizon differs from the system horizon"));
        }
        if inst.bus_index(&g.bus).is_none() {
            return Err(invalid(format!("generators[{i}].bus"), format!("unknown bus {}", g.bus)));
        }
        if inst.generators[..i].iter().any(|o| o.id == g.id) {
            return Err(invalid(format!("generators[{i}].id"), format!("duplicate generator id {}", g.id)));
        }
    }
    Ok(())
}

/// Writes the document form; arrays that are constant collapse to scalars.
pub fn serialize_instance(inst: &SystemInstance) -> String {
    let generators = inst
        .generators
        .iter()
        .map(|g| {
            let segs_flat = g.cost_segments.iter().all(|s| *s == g.cost_segments[0]);
            let pair = |s: &Vec<CostSegment>| s.iter().map(|c| [c.slope, c.intercept]).collect::<Vec<_>>();
            let single = g.startup_states.len() == 1 && g.startup_states[0].name == "single";
            RawGenerator {
                id: Some(g.id.clone()),
                bus: Some(g.bus.clone()),
                p_min: Some(compress(&g.p_min)),
                p_max: Some(compress(&g.p_max)),
                ramp_up: Some(compress(&g.ramp_up)),
                ramp_down: Some(compress(&g.ramp_down)),
                su_ramp: Some(compress(&g.su_ramp)),
                sd_ramp: Some(compress(&g.sd_ramp)),
                min_up: Some(g.min_up),
                min_down: Some(g.min_down),
                max_up: g.max_up,
                mu_enforced: Some(compress(&g.mu_enforced)),
                md_enforced: Some(compress(&g.md_enforced)),
                no_load: Some(compress(&g.no_load)),
                cost_segments: Some(if segs_flat {
                    Segments::Flat(pair(&g.cost_segments[0]))
                } else {
                    Segments::PerPeriod(g.cost_segments.iter().map(pair).collect())
                }),
                startup_cost: single.then(|| g.startup_states[0].cost),
                startup_states: (!single).then(|| g.startup_states.clone()),
                shutdown_cost: Some(match &g.shutdown_cost {
                    ShutdownCost::Constant(c) => RawShutdown::Constant(*c),
                    ShutdownCost::Steps(s) => RawShutdown::Steps(
                        s.iter()
                            .map(|&(min_duration, cost)| ShutdownStep { min_duration, cost })
                            .collect(),
                    ),
                }),
                initial_on_duration: Some(g.initial_on_duration),
                initial_off_duration: Some(g.initial_off_duration),
            }
        })
        .collect();
    let raw = RawInstance {
        name: (!inst.name.is_empty()).then(|| inst.name.clone()),
        horizon: Some(inst.horizon),
        demand: Some(Series::List(inst.demand.clone())),
        buses: Some(inst.buses.clone()),
        lines: inst.lines.clone(),
        generators: Some(generators),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("instance serialises");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "horizon": 4,
        "demand": [30, 40, 50, 40],
        "generators": [
            {"id": "g1", "p_min": 10, "p_max": 60, "cost_segments": [[20, 0]], "startup_cost": 100}
        ]
    }"#;

    #[test]
    fn minimal_document() {
        let inst = parse_instance(MINIMAL).unwrap();
        assert_eq!(inst.generators.len(), 1);
        assert_eq!(inst.horizon, 4);
        assert!(!inst.has_transmission());
        let g = &inst.generators[0];
        assert_eq!(g.mu_enforced, vec![true; 4]);
        assert_eq!(g.max_up, None);
        assert_eq!(g.su_ramp, vec![60.0; 4]);
    }

    #[test]
    fn p_min_violation_names_period() {
        let doc = MINIMAL.replace(r#""p_min": 10"#, r#""p_min": [10, 70, 10, 10]"#);
        let err = parse_instance(&doc).unwrap_err().to_string();
        assert!(err.contains("generators[0].p_min"), "{err}");
        assert!(err.contains("period 2"), "{err}");
    }

    #[test]
    fn missing_field_has_path() {
        let doc = MINIMAL.replace(r#""p_max": 60, "#, "");
        let err = parse_instance(&doc).unwrap_err().to_string();
        assert!(err.contains("generators[0].p_max"), "{err}");
    }

    #[test]
    fn wrong_length_series() {
        let doc = MINIMAL.replace(r#""demand": [30, 40, 50, 40]"#, r#""demand": [30, 40]"#);
        let err = parse_instance(&doc).unwrap_err().to_string();
        assert!(err.contains("demand"), "{err}");
    }

    #[test]
    fn round_trip_is_identity() {
        let inst = parse_instance(MINIMAL).unwrap();
        let again = parse_instance(&serialize_instance(&inst)).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn per_period_segments_and_states() {
        let doc = r#"{
            "horizon": 2, "demand": 10,
            "buses": [{"id": "a", "load_share": 0.5}, {"id": "b", "load_share": 0.5}],
            "lines": [{"shift_factors": [0.0, -1.0], "limit": 5}],
            "generators": [{
                "id": "g", "bus": "b", "p_min": 0, "p_max": 20, "min_down": 2,
                "cost_segments": [[[10, 0], [30, -100]], [[12, 0]]],
                "startup_states": [{"name": "hot", "cost": 5, "min_off": 2}, {"name": "cold", "cost": 9, "min_off": 5}],
                "shutdown_cost": [{"min_duration": 1, "cost": 3}, {"min_duration": 4, "cost": 1}]
            }]
        }"#;
        let inst = parse_instance(doc).unwrap();
        assert_eq!(inst.generators[0].cost_segments[0].len(), 2);
        assert_eq!(inst, parse_instance(&serialize_instance(&inst)).unwrap());
    }
}
