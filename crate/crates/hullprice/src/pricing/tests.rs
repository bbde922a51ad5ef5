use super::*;
use crate::instance::{Bus, CostSegment, GeneratorSpec, Line, ShutdownCost, StartupState};

fn unit(id: &str, t: usize, slope: f64, bus: &str) -> GeneratorSpec {
    GeneratorSpec {
        id: id.into(),
        horizon: t,
        p_min: vec![10.0; t],
        p_max: vec![100.0; t],
        ramp_up: vec![100.0; t],
        ramp_down: vec![100.0; t],
        su_ramp: vec![100.0; t],
        sd_ramp: vec![100.0; t],
        min_up: 1,
        min_down: 1,
        max_up: None,
        mu_enforced: vec![true; t],
        md_enforced: vec![true; t],
        no_load: vec![10.0; t],
        cost_segments: vec![vec![CostSegment { slope, intercept: 0.0 }]; t],
        startup_states: vec![StartupState { name: "single".into(), cost: 100.0, min_off: 1 }],
        shutdown_cost: ShutdownCost::Constant(0.0),
        initial_on_duration: 1,
        initial_off_duration: 0,
        bus: bus.into(),
    }
}

fn toy() -> SystemInstance {
    SystemInstance {
        name: "toy".into(),
        horizon: 4,
        demand: vec![50.0, 60.0, 70.0, 80.0],
        buses: vec![Bus { id: "b1".into(), load_share: 1.0 }],
        lines: vec![],
        generators: vec![unit("g1", 4, 20.0, "b1")],
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-6 * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn uplift_is_a_difference() {
    assert_eq!(compute_uplift(10.0, 10.0), 0.0);
    assert_eq!(compute_uplift(39_986_855.0, 39_986_726.0), 129.0);
    assert_eq!(compute_uplift(55_311_277.0, 55_309_361.0), 1_916.0);
}

#[test]
fn price_difference_is_mean_absolute_gap() {
    assert_eq!(price_difference(&[3.0, 4.0], &[3.0, 4.0]).unwrap(), 0.0);
    assert_eq!(price_difference(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), 1.0);
    assert!(matches!(price_difference(&[1.0], &[]), Err(PricingError::Dimension { .. })));
}

#[test]
fn algorithm_names_parse() {
    for a in Algorithm::ALL {
        assert_eq!(a.name().to_lowercase().parse::<Algorithm>().unwrap(), a);
    }
    assert!("simplex".parse::<Algorithm>().is_err());
}

#[test]
fn single_unit_lmp_is_marginal_slope() {
    let inst = toy();
    let opts = PricingOptions::default();
    let uc = solve_uc(&inst, &opts).unwrap();
    // Always on, output equals demand, no start-up: 20 * 260 + 4 * 10.
    assert!(close(uc.objective, 5240.0));
    let lmp = compute_lmp(&inst, &uc, &opts).unwrap();
    for p in &lmp.prices {
        assert!(close(*p, 20.0), "{:?}", lmp.prices);
    }
    // At price 20 staying on loses the no-load cost, which the uplift covers.
    assert!(lmp.uplift >= -1e-6);
}

#[test]
fn congested_line_separates_bus_prices() {
    let mut inst = toy();
    inst.horizon = 1;
    inst.demand = vec![100.0];
    inst.buses = vec![
        Bus { id: "b1".into(), load_share: 0.0 },
        Bus { id: "b2".into(), load_share: 1.0 },
    ];
    // Flow b1 -> b2 is the injection at b1.
    inst.lines = vec![Line { shift_factors: vec![1.0, 0.0], limit: 40.0 }];
    let mut cheap = unit("cheap", 1, 10.0, "b1");
    let mut dear = unit("dear", 1, 30.0, "b2");
    for g in [&mut cheap, &mut dear] {
        g.p_min = vec![0.0];
        g.no_load = vec![0.0];
    }
    inst.generators = vec![cheap, dear];
    let opts = PricingOptions::default();
    let uc = solve_uc(&inst, &opts).unwrap();
    assert!(close(uc.objective, 40.0 * 10.0 + 60.0 * 30.0));
    let lmp = compute_lmp(&inst, &uc, &opts).unwrap();
    let b = &lmp.bus_prices[0];
    assert!(close(b[0], 10.0) && close(b[1], 30.0), "{b:?}");
}

#[test]
fn exact_hulls_make_every_algorithm_agree() {
    let mut inst = toy();
    let mut second = unit("g2", 4, 35.0, "b1");
    second.initial_on_duration = 0;
    second.initial_off_duration = 2;
    second.su_ramp = vec![40.0; 4];
    inst.generators.push(second);
    inst.demand = vec![90.0, 130.0, 150.0, 60.0];
    let opts = PricingOptions::default();
    let (_, reports) = run_all(&inst, &Algorithm::ALL, &opts).unwrap();
    let opt = reports.iter().find(|r| r.algorithm == Algorithm::Opt).unwrap().uplift;
    for r in &reports[1..] {
        assert!((r.uplift - opt).abs() <= 1e-6 * (1.0 + opt.abs()), "{:?} {} vs {opt}", r.algorithm, r.uplift);
        assert!(r.gamma.is_empty());
    }
    let lmp = reports[0].uplift;
    assert!(lmp >= opt - 1e-6);
    assert!(render_table(&reports, 1e-5).lines().count() == 8);
}

#[test]
fn oracle_lagrangian_matches_lp_lagrangian_on_hulls() {
    let inst = toy();
    let opts = PricingOptions::default();
    let duals = vec![25.0, 18.0, 30.0, 12.0];
    let kinds = vec![FormKind::D1];
    let lp = lagrangian_value(&inst, &kinds, &duals, &opts).unwrap();
    let dp = oracle_lagrangian(&inst, &duals).unwrap();
    assert!(close(lp.z_c, dp.z_c));
    assert!(lp.fractional.is_empty());
}

fn corpus_gap_instance() -> SystemInstance {
    // TLP is well above the exact hull uplift on this instance.
    crate::instance::parse_instance(include_str!("../../data/corpus/synth-12.json")).unwrap()
}

#[test]
fn complementary_search_stops_after_n_accepted_upgrades() {
    let inst = corpus_gap_instance();
    let mut opts = PricingOptions::default();
    let uc = solve_uc(&inst, &opts).unwrap();
    let base = IaState::new(&inst, &uc, &opts).unwrap();
    opts.iac.n_stop = Some(1);
    opts.iac.workers = Some(2);
    let r = run_complementary(&inst, &uc, base, Algorithm::Iac1, &opts).unwrap();
    assert_eq!(r.iac_accepted, 1);
    assert!(r.trace.iter().filter(|e| e.phase == "iac").count() == 1);
}

#[test]
fn complementary_search_from_an_optimal_base_accepts_nothing() {
    let inst = corpus_gap_instance();
    let opts = PricingOptions::default();
    let uc = solve_uc(&inst, &opts).unwrap();
    let (ia, base) = run_ia(&inst, &uc, Algorithm::Ia1, &opts).unwrap();
    let opt = run_opt(&inst, &uc, &opts).unwrap();
    assert!(close(ia.uplift, opt.uplift));
    let r = run_complementary(&inst, &uc, base, Algorithm::Iac1, &opts).unwrap();
    assert_eq!(r.iac_accepted, 0);
    assert!(close(r.uplift, opt.uplift));
    assert!(render_table(&[r], 1e-5).contains("(+0)"));
}

#[test]
fn complementary_search_alone_reaches_the_hull_uplift() {
    let inst = corpus_gap_instance();
    let opts = PricingOptions::default();
    let uc = solve_uc(&inst, &opts).unwrap();
    let tlp = run_tlp(&inst, &uc, &opts).unwrap();
    let opt = run_opt(&inst, &uc, &opts).unwrap();
    assert!(tlp.uplift > opt.uplift + 1.0);
    let base = IaState::new(&inst, &uc, &opts).unwrap();
    let r = run_complementary(&inst, &uc, base, Algorithm::Iac2, &opts).unwrap();
    assert!(r.iac_accepted >= 1);
    assert!(close(r.uplift, opt.uplift), "{} vs {}", r.uplift, opt.uplift);
}

#[test]
fn upgrades_grow_gamma_and_lower_the_uplift() {
    let inst = corpus_gap_instance();
    let opts = PricingOptions::default();
    let uc = solve_uc(&inst, &opts).unwrap();
    let tlp = run_tlp(&inst, &uc, &opts).unwrap();
    for variant in [Algorithm::Ia1, Algorithm::Ia2] {
        let (r, _) = run_ia(&inst, &uc, variant, &opts).unwrap();
        assert!(r.gamma.len() > tlp.gamma.len());
        assert!(r.uplift < tlp.uplift - 1.0);
        let first = &r.trace[0];
        let last = r.trace.last().unwrap();
        assert!(last.uplift_bound < first.uplift_bound);
        assert!(last.flags_clear && r.fractional_flags.is_empty());
    }
}
