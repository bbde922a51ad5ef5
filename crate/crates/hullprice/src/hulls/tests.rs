use super::*;
use crate::instance::{Bus, CostSegment, Line, StartupState};
use crate::oracle::{dp_self_schedule, enumerate_best_schedule};
use crate::simplexcore::{solve_lp, SolveStatus, SolverOptions};

fn unit(t: usize) -> GeneratorSpec {
    GeneratorSpec {
        id: "g".into(),
        horizon: t,
        p_min: vec![20.0; t],
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
        no_load: vec![50.0; t],
        cost_segments: vec![vec![CostSegment { slope: 20.0, intercept: 0.0 }]; t],
        startup_states: vec![StartupState { name: "single".into(), cost: 300.0, min_off: 1 }],
        shutdown_cost: ShutdownCost::Constant(10.0),
        initial_on_duration: 0,
        initial_off_duration: 1,
        bus: "b1".into(),
    }
}

fn system(gens: Vec<GeneratorSpec>, demand: Vec<f64>) -> SystemInstance {
    SystemInstance {
        name: "t".into(),
        horizon: demand.len(),
        demand,
        buses: vec![Bus { id: "b1".into(), load_share: 1.0 }],
        lines: vec![],
        generators: gens,
    }
}

fn lp_value(g: &GeneratorSpec, kind: FormKind, price: &[f64]) -> (f64, Vec<f64>, GenHandle) {
    let (m, h) = self_schedule_model(g, kind, price).unwrap();
    let r = solve_lp(&m, &SolverOptions::default());
    assert_eq!(r.status, SolveStatus::Optimal);
    (r.objective, r.primal, h)
}

#[test]
fn first_shutdown_window_respects_max_up() {
    let mut g = unit(6);
    g.min_up = 2;
    g.min_down = 2;
    g.max_up = Some(3);
    g.startup_states[0].min_off = 2;
    g.initial_on_duration = 1;
    g.initial_off_duration = 0;
    let sets = build_index_sets(&g);
    assert_eq!(sets.kbar, vec![1, 2]);
    assert_eq!(sets.tk1, vec![(1, 1), (1, 2)]);
    for &(t, k) in &sets.tk2 {
        let len = k - t + 1;
        assert!(len <= 3 && (len >= 2 || k == 6));
    }
    for &(k, t) in &sets.kt {
        assert!(t - k - 1 >= 2);
    }
}

#[test]
fn unlimited_max_up_spans_to_horizon() {
    let mut g = unit(5);
    g.min_up = 3;
    g.initial_on_duration = 1;
    g.initial_off_duration = 0;
    assert_eq!(build_index_sets(&g).kbar, vec![2, 3, 4, 5]);
}

#[test]
fn relaxed_min_up_admits_single_period_run() {
    let mut g = unit(5);
    g.min_up = 3;
    assert!(!build_index_sets(&g).tk2.contains(&(2, 2)));
    g.mu_enforced[1] = false;
    assert!(build_index_sets(&g).tk2.contains(&(2, 2)));
}

#[test]
fn balance_and_line_rows() {
    let inst = system(vec![unit(2)], vec![50.0, 60.0]);
    let s = build_system(&inst, &[FormKind::D1]).unwrap();
    assert_eq!(s.system_rows().len(), 2);
    let mut inst = inst;
    inst.buses.push(Bus { id: "b2".into(), load_share: 0.0 });
    inst.buses[0].load_share = 1.0;
    inst.lines.push(Line { shift_factors: vec![0.0, 0.5], limit: 10.0 });
    let s = build_system(&inst, &[FormKind::D1]).unwrap();
    assert_eq!(s.system_rows().len(), 2 + 2 * 2);
    assert_eq!(coupling_rhs(&inst).len(), 6);
}

#[test]
fn interval_balance_rows_touch_only_dispatch_pieces() {
    let mut g = unit(3);
    g.startup_states = vec![
        StartupState { name: "hot".into(), cost: 100.0, min_off: 1 },
        StartupState { name: "cold".into(), cost: 400.0, min_off: 3 },
    ];
    let s = build_system(&system(vec![g], vec![40.0; 3]), &[FormKind::D4]).unwrap();
    for &r in &s.balance_rows {
        for &(v, _) in &s.model.constraint(r).coeffs {
            assert!(s.model.var(v).name.starts_with("q["));
        }
    }
}

#[test]
fn class_hulls_reject_other_classes() {
    let mut g = unit(3);
    g.su_ramp = vec![50.0; 3];
    let mut m = LinearModel::new();
    assert!(matches!(
        build_generator(&mut m, &g, 0, FormKind::D1),
        Err(HullError::ClassMismatch { .. })
    ));
    assert!(build_generator(&mut m, &g, 0, FormKind::D2).is_ok());
}

#[test]
fn startup_facet_caps_first_hour() {
    let mut g = unit(2);
    g.su_ramp = vec![50.0; 2];
    let (_, primal, h) = lp_value(&g, FormKind::D2, &[200.0, 200.0]);
    let p = h.status_point(&primal);
    assert!((p.v[0] - 1.0).abs() < 1e-9);
    assert!(p.x[0] <= 50.0 + 1e-7);
}

#[test]
fn max_up_cuts_long_runs() {
    let mut g = unit(3);
    g.max_up = Some(2);
    let (_, primal, h) = lp_value(&g, FormKind::D3, &[200.0; 3]);
    let p = h.status_point(&primal);
    assert!(p.u.iter().sum::<f64>() <= 2.0 + 1e-7);
}

#[test]
fn interval_lp_equals_dp_on_hand_units() {
    let mut cases = Vec::new();
    let mut g = unit(4);
    g.min_up = 2;
    g.min_down = 2;
    g.startup_states[0].min_off = 2;
    cases.push((g.clone(), vec![10.0, 60.0, 15.0, 40.0]));
    g.ramp_up = vec![30.0; 4];
    g.su_ramp = vec![40.0; 4];
    g.sd_ramp = vec![30.0; 4];
    cases.push((g.clone(), vec![50.0, 60.0, 45.0, 10.0]));
    g.initial_on_duration = 1;
    g.initial_off_duration = 0;
    cases.push((g.clone(), vec![5.0, 60.0, 5.0, 40.0]));
    g.shutdown_cost = ShutdownCost::Steps(vec![(1, 50.0), (3, 5.0)]);
    cases.push((g, vec![5.0, 60.0, 5.0, 40.0]));
    for (g, price) in cases {
        let (lp, primal, h) = lp_value(&g, FormKind::D4, &price);
        let (dp, _) = dp_self_schedule(&g, &price).unwrap();
        let (bf, _) = enumerate_best_schedule(&g, &price).unwrap();
        assert!((lp - dp.net_cost).abs() < 1e-6 * (1.0 + dp.net_cost.abs()), "{lp} vs {}", dp.net_cost);
        assert!((bf.net_cost - dp.net_cost).abs() < 1e-6 * (1.0 + dp.net_cost.abs()));
        assert!(h.max_fractionality(&primal) < 1e-6);
    }
}

#[test]
fn integral_schedule_lies_in_hull() {
    let mut g = unit(4);
    g.min_up = 2;
    let hat = StatusPoint {
        x: vec![0.0, 50.0, 60.0, 0.0],
        f: vec![0.0, 1000.0, 1200.0, 0.0],
        u: vec![0.0, 1.0, 1.0, 0.0],
        v: vec![0.0, 1.0, 0.0, 0.0],
        e: vec![0.0, 0.0, 0.0, 1.0],
    };
    let r = solve_lp(&build_p3(&g, &hat).unwrap(), &SolverOptions::default());
    assert_eq!(r.status, SolveStatus::Optimal);
}

#[test]
fn min_up_blip_lies_outside_hull() {
    let mut g = unit(4);
    g.min_up = 3;
    g.p_min = vec![0.0; 4];
    // Half a one-hour run: every mixture of feasible schedules covering
    // period 2 with weight 1/2 must also cover period 3 or 4.
    let hat = StatusPoint {
        x: vec![0.0, 10.0, 0.0, 0.0],
        f: vec![0.0, 200.0, 0.0, 0.0],
        u: vec![0.0, 0.5, 0.0, 0.0],
        v: vec![0.0, 0.5, 0.0, 0.0],
        e: vec![0.0, 0.0, 0.5, 0.0],
    };
    let r = solve_lp(&build_p3(&g, &hat).unwrap(), &SolverOptions::default());
    assert_eq!(r.status, SolveStatus::Infeasible);
}

#[test]
fn status_hull_point_passes_membership_test() {
    let mut g = unit(3);
    g.max_up = Some(2);
    let (_, primal, h) = lp_value(&g, FormKind::D3, &[35.0, 10.0, 60.0]);
    let hat = h.status_point(&primal);
    let r = solve_lp(&build_p3(&g, &hat).unwrap(), &SolverOptions::default());
    assert_eq!(r.status, SolveStatus::Optimal);
}

#[test]
fn aggregated_cost_epigraph_is_not_exact_with_binding_start_ramp() {
    let mut g = unit(4);
    g.p_min = vec![58.2; 4];
    g.p_max = vec![140.0; 4];
    g.ramp_up = vec![140.0; 4];
    g.ramp_down = vec![140.0; 4];
    g.su_ramp = vec![69.9; 4];
    g.sd_ramp = vec![140.0; 4];
    g.min_up = 2;
    g.no_load = vec![0.0; 4];
    g.cost_segments = vec![
        vec![
            CostSegment { slope: 29.0, intercept: 0.0 },
            CostSegment { slope: 33.0, intercept: -342.0 },
            CostSegment { slope: 39.0, intercept: -1018.2 },
        ];
        4
    ];
    g.startup_states[0].cost = 150.0;
    g.shutdown_cost = ShutdownCost::Constant(40.0);
    g.initial_off_duration = 4;
    let price = [0.0, 0.0, 10.62330285330509, 48.74597475465344];
    let (best, _) = enumerate_best_schedule(&g, &price).unwrap();
    // Negative control: facet-only status model without the split cost rows.
    let (weak, _, _) = lp_value(&g, FormKind::G4Relaxation, &price);
    assert!(weak < best.net_cost - 50.0);
    let (exact, primal, h) = lp_value(&g, FormKind::D2, &price);
    assert!((exact - best.net_cost).abs() < 1e-6 * (1.0 + exact.abs()));
    assert!(h.max_fractionality(&primal) < 1e-6);
}
