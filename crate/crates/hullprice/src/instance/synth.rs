//! Seeded synthetic instances with a requested class mix.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    classify, Bus, CostSegment, GeneratorClass, GeneratorSpec, Line, ShutdownCost, StartupState, SystemInstance,
};

/// Class shares used when no explicit mix is requested (percent G1..G4).
pub const DEFAULT_SHARES: [f64; 4] = [50.0, 1.0, 8.0, 41.0];

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub seed: u64,
    pub horizon: usize,
    pub generators: usize,
    /// Exact counts per class; `None` applies [`DEFAULT_SHARES`].
    pub mix: Option<[usize; 4]>,
    /// Number of buses; more than one adds a single monitored line.
    pub buses: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 1,
            horizon: 6,
            generators: 6,
            mix: None,
            buses: 1,
        }
    }
}

/// Splits `n` by `shares` with largest remainders.
pub fn counts_from_shares(n: usize, shares: [f64; 4]) -> [usize; 4] {
    let total: f64 = shares.iter().sum();
    let exact: Vec<f64> = shares.iter().map(|s| s / total * n as f64).collect();
    let mut counts = [0usize; 4];
    for k in 0..4 {
        counts[k] = exact[k].floor() as usize;
    }
    let mut rest: Vec<usize> = (0..4).collect();
    rest.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut missing = n - counts.iter().sum::<usize>();
    for k in rest {
        if missing == 0 {
            break;
        }
        counts[k] += 1;
        missing -= 1;
    }
    counts
}

pub fn generate(cfg: &SynthConfig) -> SystemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t = cfg.horizon.max(1);
    let counts = cfg
        .mix
        .unwrap_or_else(|| counts_from_shares(cfg.generators, DEFAULT_SHARES));
    let classes = [GeneratorClass::G1, GeneratorClass::G2, GeneratorClass::G3, GeneratorClass::G4];
    let nb = cfg.buses.max(1);
    let buses: Vec<Bus> = {
        let raw: Vec<f64> = (0..nb).map(|_| rng.gen_range(1.0..3.0)).collect();
        let s: f64 = raw.iter().sum();
        let mut shares: Vec<f64> = raw.iter().map(|r| (r / s * 100.0).round() / 100.0).collect();
        let drift: f64 = 1.0 - shares.iter().sum::<f64>();
        shares[0] = ((shares[0] + drift) * 100.0).round() / 100.0;
        (0..nb)
            .map(|b| Bus {
                id: format!("b{}", b + 1),
                load_share: shares[b],
            })
            .collect()
    };
    let mut generators = Vec::new();
    for (ci, &class) in classes.iter().enumerate() {
        for _ in 0..counts[ci] {
            let id = format!("g{}", generators.len() + 1);
            let bus = buses[rng.gen_range(0..nb)].id.clone();
            generators.push(random_generator(&mut rng, class, t, id, bus));
        }
    }

    let cap: Vec<f64> = (0..t).map(|k| generators.iter().map(|g| g.p_max[k]).sum()).collect();
    let mut demand = Vec::with_capacity(t);
    let base = rng.gen_range(0.3..0.45);
    for k in 0..t {
        let phase = (k as f64 / t.max(2) as f64 * std::f64::consts::PI).sin();
        let locked: f64 = generators
            .iter()
            .filter(|g| g.is_initially_on() && k < super::initial_lock(g))
            .map(|g| g.p_min[k])
            .sum();
        let d = cap[k] * (base + 0.2 * phase + rng.gen_range(-0.03..0.03));
        let d = d.max(locked * 1.1 + 1.0).min(cap[k] * 0.85);
        demand.push(d.round());
    }

    let lines = if nb > 1 {
        let mut sf: Vec<f64> = (0..nb).map(|_| (rng.gen_range(-0.6..0.6f64) * 20.0).round() / 20.0).collect();
        sf[0] = 0.0;
        let peak = demand.iter().cloned().fold(0.0, f64::max);
        vec![Line {
            shift_factors: sf,
            limit: (peak * rng.gen_range(0.15..0.35)).round(),
        }]
    } else {
        Vec::new()
    };

    SystemInstance {
        name: format!("synth-{}", cfg.seed),
        horizon: t,
        demand,
        buses,
        lines,
        generators,
    }
}

/// One random generator of the given class, for tests and demos.
pub fn random_unit(seed: u64, class: GeneratorClass, horizon: usize) -> GeneratorSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_generator(&mut rng, class, horizon.max(1), "g1".into(), "b1".into())
}

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn random_generator(rng: &mut ChaCha8Rng, class: GeneratorClass, t: usize, id: String, bus: String) -> GeneratorSpec {
    for _ in 0..100 {
        let g = candidate(rng, class, t, id.clone(), bus.clone());
        if classify(&g) == class {
            return g;
        }
    }
    unreachable!("synthetic generator construction never matched class {class}")
}

fn candidate(rng: &mut ChaCha8Rng, class: GeneratorClass, t: usize, id: String, bus: String) -> GeneratorSpec {
    let p_max = rng.gen_range(4..=20) as f64 * 10.0;
    let p_min = round1(p_max * rng.gen_range(0.2..0.45));
    let nseg = rng.gen_range(1..=3);
    let mut segs = Vec::new();
    let mut slope = rng.gen_range(10..=40) as f64;
    let mut intercept = 0.0;
    for j in 0..nseg {
        if j > 0 {
            let bp = round1(p_min + (p_max - p_min) * j as f64 / nseg as f64);
            let next = slope + rng.gen_range(2..=10) as f64;
            intercept += (slope - next) * bp;
            slope = next;
        }
        segs.push(CostSegment { slope, intercept });
    }
    let min_up = rng.gen_range(1..=3usize.min(t));
    let min_down = rng.gen_range(1..=3usize.min(t));
    let startup = rng.gen_range(5..=50) as f64 * 10.0;
    let shutdown = if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0..=5) as f64 * 10.0 };
    let (on, off) = match rng.gen_range(0..5) {
        0 | 1 => (rng.gen_range(1..=4), 0),
        2 | 3 => (0, rng.gen_range(1..=5)),
        _ => (0, 0),
    };
    let mut g = GeneratorSpec {
        id,
        horizon: t,
        p_min: vec![p_min; t],
        p_max: vec![p_max; t],
        ramp_up: vec![p_max; t],
        ramp_down: vec![p_max; t],
        su_ramp: vec![p_max; t],
        sd_ramp: vec![p_max; t],
        min_up,
        min_down,
        max_up: None,
        mu_enforced: vec![true; t],
        md_enforced: vec![true; t],
        no_load: vec![rng.gen_range(0..=10) as f64 * 10.0; t],
        cost_segments: vec![segs; t],
        startup_states: vec![StartupState {
            name: "single".into(),
            cost: startup,
            min_off: min_down,
        }],
        shutdown_cost: ShutdownCost::Constant(shutdown),
        initial_on_duration: on,
        initial_off_duration: off,
        bus,
    };
    let su_binding = |rng: &mut ChaCha8Rng, g: &mut GeneratorSpec| {
        let su = round1(p_min + (p_max - p_min) * rng.gen_range(0.0..0.8));
        g.su_ramp = vec![su; t];
    };
    let set_max_up = |rng: &mut ChaCha8Rng, g: &mut GeneratorSpec| {
        let lo = g.min_up.max(2);
        let hi = lo.max(t.saturating_sub(1));
        let mx = rng.gen_range(lo..=hi);
        g.max_up = Some(mx);
        g.initial_on_duration = g.initial_on_duration.min(mx);
    };
    match class {
        GeneratorClass::G1 => {}
        GeneratorClass::G2 => su_binding(rng, &mut g),
        GeneratorClass::G3 => {
            if rng.gen_bool(0.5) {
                su_binding(rng, &mut g);
            }
            set_max_up(rng, &mut g);
        }
        GeneratorClass::G4 => {
            let mut features: Vec<u8> = (0..7).collect();
            features.shuffle(rng);
            let take = rng.gen_range(1..=2);
            for &f in &features[..take] {
                match f {
                    0 => {
                        let warm = min_down + rng.gen_range(1..=2);
                        let cold = warm + rng.gen_range(1..=3);
                        g.startup_states = vec![
                            StartupState { name: "hot".into(), cost: startup, min_off: min_down },
                            StartupState { name: "warm".into(), cost: startup * 1.5, min_off: warm },
                            StartupState { name: "cold".into(), cost: startup * 2.0, min_off: cold },
                        ];
                    }
                    1 => {
                        for k in 0..t {
                            g.p_max[k] = round1(p_max * rng.gen_range(0.8..1.0));
                            g.no_load[k] = (g.no_load[k] + rng.gen_range(-2..=2) as f64 * 5.0).max(0.0);
                        }
                        g.ramp_up = g.p_max.clone();
                        g.ramp_down = g.p_max.clone();
                        g.su_ramp = g.p_max.clone();
                        g.sd_ramp = g.p_max.clone();
                    }
                    2 => {
                        let r = round1((p_max - p_min) * rng.gen_range(0.25..0.7));
                        g.ramp_up = vec![r; t];
                        g.ramp_down = vec![r; t];
                    }
                    3 => {
                        let sd = round1(p_min + (p_max - p_min) * rng.gen_range(0.0..0.8));
                        g.sd_ramp = vec![sd; t];
                        su_binding(rng, &mut g);
                    }
                    4 => {
                        g.min_up = g.min_up.max(2);
                        g.min_down = g.min_down.max(2);
                        for st in &mut g.startup_states {
                            st.min_off = st.min_off.max(g.min_down);
                        }
                        let k = rng.gen_range(0..t);
                        g.mu_enforced[k] = false;
                        let k = rng.gen_range(0..t);
                        g.md_enforced[k] = false;
                    }
                    5 => {
                        g.shutdown_cost = ShutdownCost::Steps(vec![(1, shutdown + 20.0), (3, shutdown)]);
                    }
                    _ => {
                        su_binding(rng, &mut g);
                        set_max_up(rng, &mut g);
                        let r = round1((p_max - p_min) * rng.gen_range(0.3..0.8));
                        g.ramp_down = vec![r; t];
                    }
                }
            }
            // Keep the states aligned with a possibly raised min_down.
            g.startup_states[0].min_off = g.min_down;
            let mut last = g.min_down;
            for st in g.startup_states.iter_mut().skip(1) {
                st.min_off = st.min_off.max(last + 1);
                last = st.min_off;
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::format::validate_generator;
    use crate::instance::{parse_instance, serialize_instance};

    #[test]
    fn mix_is_honoured() {
        let cfg = SynthConfig {
            seed: 9,
            horizon: 6,
            generators: 10,
            mix: Some([5, 0, 1, 4]),
            buses: 1,
        };
        let inst = generate(&cfg);
        let classes = inst.classes();
        let count = |c| classes.iter().filter(|&&k| k == c).count();
        assert_eq!(count(GeneratorClass::G1), 5);
        assert_eq!(count(GeneratorClass::G2), 0);
        assert_eq!(count(GeneratorClass::G3), 1);
        assert_eq!(count(GeneratorClass::G4), 4);
    }

    #[test]
    fn deterministic_and_parseable() {
        let cfg = SynthConfig {
            seed: 42,
            generators: 8,
            buses: 2,
            ..SynthConfig::default()
        };
        let a = serialize_instance(&generate(&cfg));
        let b = serialize_instance(&generate(&cfg));
        assert_eq!(a, b);
        let inst = parse_instance(&a).unwrap();
        for (i, g) in inst.generators.iter().enumerate() {
            validate_generator(g, &format!("generators[{i}]")).unwrap();
        }
        assert_eq!(inst.lines.len(), 1);
    }

    #[test]
    fn default_shares_split() {
        assert_eq!(counts_from_shares(10, DEFAULT_SHARES), [5, 0, 1, 4]);
        assert_eq!(counts_from_shares(100, DEFAULT_SHARES), [50, 1, 8, 41]);
    }
}
