use std::collections::BTreeSet;

use super::report::{PricingRunReport, TraceEntry};
use super::{
    bus_prices, lagrangian_value, oracle_lagrangian, par_map, solve_relaxed, Algorithm, PricingError,
    PricingOptions, RelaxedSolve,
};
use crate::algebra::fix_variables;
use crate::clock::Stopwatch;
use crate::hulls::{build_p3, build_system, FormKind, SystemModel};
use crate::instance::{classify, GeneratorClass, SystemInstance};
use crate::simplexcore::{solve_lp, solve_mip, SolveStatus};

/// Unit-commitment MIP solution shared by every pricing run.
#[derive(Clone, Debug)]
pub struct UcSolution {
    /// Incumbent cost `Z'`.
    pub objective: f64,
    pub best_bound: f64,
    pub status: SolveStatus,
    pub system: SystemModel,
    pub primal: Vec<f64>,
    pub nodes: usize,
    pub elapsed_s: f64,
}

pub fn solve_uc(inst: &SystemInstance, opts: &PricingOptions) -> Result<UcSolution, PricingError> {
    let clock = Stopwatch::start();
    let kinds: Vec<FormKind> = inst.generators.iter().map(|g| FormKind::mip_for(classify(g))).collect();
    let system = build_system(inst, &kinds)?;
    let r = solve_mip(&system.model, &opts.solver);
    match r.status {
        SolveStatus::Infeasible => return Err(PricingError::MipInfeasible),
        SolveStatus::Unbounded => return Err(PricingError::MipNoIncumbent(r.status)),
        _ if r.primal.is_empty() || !r.objective.is_finite() => return Err(PricingError::MipNoIncumbent(r.status)),
        _ => {}
    }
    Ok(UcSolution {
        objective: r.objective,
        best_bound: r.best_bound,
        status: r.status,
        system,
        primal: r.primal,
        nodes: r.nodes,
        elapsed_s: clock.elapsed().as_secs_f64(),
    })
}

fn base_report(inst: &SystemInstance, uc: &UcSolution, algorithm: Algorithm, duals: Vec<f64>) -> PricingRunReport {
    PricingRunReport {
        algorithm,
        instance: inst.name.clone(),
        bus_prices: bus_prices(inst, &duals),
        prices: duals,
        z_qip: uc.objective,
        z_qip_bound: uc.best_bound,
        relaxed_objective: None,
        z_c_lp: None,
        z_c: f64::NAN,
        uplift: f64::NAN,
        gamma: Vec::new(),
        iac_accepted: 0,
        trace: Vec::new(),
        iterations: 0,
        iteration_cap_hit: false,
        fractional_flags: Vec::new(),
        elapsed_s: 0.0,
        price_diff_vs_lmp: None,
    }
}

fn finish(
    inst: &SystemInstance,
    mut report: PricingRunReport,
    clock: &Stopwatch,
) -> Result<PricingRunReport, PricingError> {
    let oracle = oracle_lagrangian(inst, &report.prices)?;
    report.z_c = oracle.z_c;
    report.uplift = super::compute_uplift(report.z_qip, oracle.z_c);
    report.elapsed_s = clock.elapsed().as_secs_f64();
    Ok(report)
}

/// Prices from the economic dispatch with commitments fixed at the MIP incumbent.
pub fn compute_lmp(inst: &SystemInstance, uc: &UcSolution, opts: &PricingOptions) -> Result<PricingRunReport, PricingError> {
    let clock = Stopwatch::start();
    let fixes: Vec<_> = uc
        .system
        .handles
        .iter()
        .flat_map(|h| h.decision_vars())
        .map(|v| (v, uc.primal[v.0].round()))
        .collect();
    let fixed = fix_variables(&uc.system.model, &fixes)
        .expect("rounded incumbent lies within binary bounds")
        .relaxed();
    let r = solve_lp(&fixed, &opts.solver);
    if r.status != SolveStatus::Optimal {
        return Err(PricingError::LpFailed {
            stage: "fixed-commitment dispatch",
            status: r.status,
        });
    }
    let duals = uc.system.system_rows().iter().map(|&row| r.dual[row]).collect();
    let mut report = base_report(inst, uc, Algorithm::Lmp, duals);
    report.relaxed_objective = Some(r.objective);
    finish(inst, report, &clock)
}

/// Working state of the iterative algorithms.
#[derive(Clone, Debug)]
pub struct IaState {
    pub kinds: Vec<FormKind>,
    pub classes: Vec<GeneratorClass>,
    pub relaxed: RelaxedSolve,
    pub trace: Vec<TraceEntry>,
    pub solves: usize,
    pub cap_hit: bool,
    /// Lagrangian value over the current formulations at the current duals.
    pub last_z_c_lp: Option<f64>,
    clock: Stopwatch,
}

impl IaState {
    /// State after the first relaxed solve, before any upgrade.
    pub fn new(inst: &SystemInstance, uc: &UcSolution, opts: &PricingOptions) -> Result<IaState, PricingError> {
        let classes: Vec<GeneratorClass> = inst.generators.iter().map(classify).collect();
        let kinds: Vec<FormKind> = inst
            .generators
            .iter()
            .zip(&classes)
            .map(|(g, &c)| FormKind::relaxation_for(g, c))
            .collect();
        let clock = Stopwatch::start();
        let relaxed = solve_relaxed(inst, &kinds, opts)?;
        let mut s = IaState {
            kinds,
            classes,
            relaxed,
            trace: Vec::new(),
            solves: 1,
            cap_hit: false,
            last_z_c_lp: None,
            clock,
        };
        s.record(inst, uc, "p1", Vec::new());
        Ok(s)
    }

    /// Units using the interval hull.
    pub fn upgraded(&self) -> Vec<usize> {
        (0..self.kinds.len()).filter(|&i| self.kinds[i] == FormKind::D4 && self.classes[i] == GeneratorClass::G4).collect()
    }

    fn candidates(&self) -> Vec<usize> {
        (0..self.kinds.len())
            .filter(|&i| self.classes[i] == GeneratorClass::G4 && self.kinds[i] != FormKind::D4)
            .collect()
    }

    fn record(&mut self, inst: &SystemInstance, uc: &UcSolution, phase: &str, added: Vec<usize>) {
        let obj = self.relaxed.result.objective;
        self.trace.push(TraceEntry {
            solve: self.solves,
            phase: phase.to_string(),
            upgraded: added.iter().map(|&i| inst.generators[i].id.clone()).collect(),
            gamma_size: self.upgraded().len(),
            p1_objective: obj,
            uplift_bound: uc.objective - obj,
            flags_clear: false,
            uplift: None,
            elapsed_s: self.clock.elapsed().as_secs_f64(),
        });
    }

    fn upgrade_and_resolve(
        &mut self,
        inst: &SystemInstance,
        uc: &UcSolution,
        opts: &PricingOptions,
        phase: &str,
        added: Vec<usize>,
    ) -> Result<bool, PricingError> {
        if self.solves >= opts.max_iterations {
            self.cap_hit = true;
            return Ok(false);
        }
        for &i in &added {
            self.kinds[i] = FormKind::D4;
        }
        self.relaxed = solve_relaxed(inst, &self.kinds, opts)?;
        self.solves += 1;
        self.last_z_c_lp = None;
        self.record(inst, uc, phase, added);
        Ok(true)
    }

    /// Relaxed self-schedules at the current duals; fractional general units
    /// not yet upgraded are returned.
    fn p2_step(&mut self, inst: &SystemInstance, uc: &UcSolution, opts: &PricingOptions) -> Result<Vec<usize>, PricingError> {
        let p2 = lagrangian_value(inst, &self.kinds, &self.relaxed.duals, opts)?;
        let cands: BTreeSet<usize> = self.candidates().into_iter().collect();
        let flagged: Vec<usize> = p2.fractional.iter().copied().filter(|i| cands.contains(i)).collect();
        self.last_z_c_lp = Some(p2.z_c);
        if flagged.is_empty() {
            let oracle = oracle_lagrangian(inst, &self.relaxed.duals)?;
            if let Some(last) = self.trace.last_mut() {
                last.flags_clear = true;
                last.uplift = Some(uc.objective - oracle.z_c);
            }
        }
        Ok(flagged)
    }

    /// Membership tests for fractional relaxed points; units outside the hull are returned.
    fn p3_step(&self, inst: &SystemInstance, opts: &PricingOptions) -> Result<Vec<usize>, PricingError> {
        let cands = self.candidates();
        let primal = &self.relaxed.result.primal;
        let outside: Vec<Result<Option<usize>, PricingError>> = par_map(cands.len(), |c| {
            let i = cands[c];
            let h = &self.relaxed.system.handles[i];
            if h.status_fractionality(primal) <= opts.frac_tol {
                return Ok(None);
            }
            let hat = h.status_point(primal);
            let m = build_p3(&inst.generators[i], &hat)?;
            let r = solve_lp(&m, &opts.solver);
            Ok(match r.status {
                SolveStatus::Infeasible => Some(i),
                _ => None,
            })
        });
        Ok(outside.into_iter().collect::<Result<Vec<_>, _>>()?.into_iter().flatten().collect())
    }

    fn step(
        &mut self,
        inst: &SystemInstance,
        uc: &UcSolution,
        opts: &PricingOptions,
        use_p2: bool,
    ) -> Result<bool, PricingError> {
        let (added, phase) = if use_p2 {
            (self.p2_step(inst, uc, opts)?, "p2")
        } else {
            (self.p3_step(inst, opts)?, "p3")
        };
        if added.is_empty() {
            return Ok(false);
        }
        self.upgrade_and_resolve(inst, uc, opts, phase, added)
    }

    /// Runs both loops until neither finds an upgrade. IA1 puts the
    /// self-schedule test inside and the membership test outside; IA2 swaps them.
    fn iterate(&mut self, inst: &SystemInstance, uc: &UcSolution, opts: &PricingOptions, p2_inner: bool) -> Result<(), PricingError> {
        loop {
            while self.step(inst, uc, opts, p2_inner)? {}
            if self.cap_hit || !self.step(inst, uc, opts, !p2_inner)? {
                break;
            }
        }
        // The final relaxed point must come with a self-schedule evaluation.
        if self.last_z_c_lp.is_none() {
            self.p2_step(inst, uc, opts)?;
        }
        Ok(())
    }

    fn report(&self, inst: &SystemInstance, uc: &UcSolution, algorithm: Algorithm) -> Result<PricingRunReport, PricingError> {
        let mut r = base_report(inst, uc, algorithm, self.relaxed.duals.clone());
        r.relaxed_objective = Some(self.relaxed.result.objective);
        r.z_c_lp = self.last_z_c_lp;
        r.gamma = self.upgraded().iter().map(|&i| inst.generators[i].id.clone()).collect();
        r.trace = self.trace.clone();
        r.iterations = self.solves;
        r.iteration_cap_hit = self.cap_hit;
        finish(inst, r, &self.clock)
    }
}

/// The relaxed pricing LP solved once, without upgrades.
pub fn run_tlp(inst: &SystemInstance, uc: &UcSolution, opts: &PricingOptions) -> Result<PricingRunReport, PricingError> {
    let mut s = IaState::new(inst, uc, opts)?;
    let p2 = lagrangian_value(inst, &s.kinds, &s.relaxed.duals, opts)?;
    s.last_z_c_lp = Some(p2.z_c);
    let mut r = s.report(inst, uc, Algorithm::Tlp)?;
    r.fractional_flags = p2.fractional.iter().map(|&i| inst.generators[i].id.clone()).collect();
    Ok(r)
}

/// Iterative upgrade algorithm; returns the report and the final state for
/// the complementary search.
pub fn run_ia(
    inst: &SystemInstance,
    uc: &UcSolution,
    variant: Algorithm,
    opts: &PricingOptions,
) -> Result<(PricingRunReport, IaState), PricingError> {
    let p2_inner = variant != Algorithm::Ia2;
    let mut s = IaState::new(inst, uc, opts)?;
    s.iterate(inst, uc, opts, p2_inner)?;
    let r = s.report(inst, uc, if p2_inner { Algorithm::Ia1 } else { Algorithm::Ia2 })?;
    Ok((r, s))
}

/// Parallel search for upgrades the iterative loops missed. Each worker owns
/// a group of remaining general units and upgrades them one by one in a
/// private copy of the relaxed LP, reporting as soon as the objective improves.
pub fn run_complementary(
    inst: &SystemInstance,
    uc: &UcSolution,
    mut base: IaState,
    variant: Algorithm,
    opts: &PricingOptions,
) -> Result<PricingRunReport, PricingError> {
    let p2_inner = !matches!(variant, Algorithm::Ia2 | Algorithm::Iac2);
    let clock = Stopwatch::start();
    let mut accepted = 0usize;
    let mut exhausted: BTreeSet<usize> = BTreeSet::new();
    let timed_out = |c: &Stopwatch| opts.iac.time_limit.is_some_and(|lim| c.elapsed() >= lim);
    loop {
        let cands: Vec<usize> = base.candidates().into_iter().filter(|i| !exhausted.contains(i)).collect();
        if cands.is_empty() || base.cap_hit || timed_out(&clock) {
            break;
        }
        if opts.iac.n_stop.is_some_and(|n| accepted >= n) {
            break;
        }
        let hw = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
        let m = opts.iac.workers.unwrap_or(cands.len().min(hw)).clamp(1, cands.len());
        let groups: Vec<Vec<usize>> = (0..m).map(|w| cands.iter().copied().skip(w).step_by(m).collect()).collect();
        let master = base.relaxed.result.objective;
        let threshold = master + opts.improve_tol * (1.0 + master.abs());
        let outcomes: Vec<Result<Option<Vec<usize>>, PricingError>> = par_map(m, |w| {
            let mut kinds = base.kinds.clone();
            let mut added = Vec::new();
            for &i in &groups[w] {
                if timed_out(&clock) {
                    return Ok(None);
                }
                kinds[i] = FormKind::D4;
                added.push(i);
                let r = solve_relaxed(inst, &kinds, opts)?;
                if r.result.objective > threshold {
                    return Ok(Some(added));
                }
            }
            Ok(None)
        });
        let mut found: Vec<usize> = Vec::new();
        for (w, o) in outcomes.into_iter().enumerate() {
            match o? {
                Some(set) => found.extend(set),
                None => exhausted.extend(groups[w].iter().copied()),
            }
        }
        if found.is_empty() {
            break;
        }
        if let Some(n) = opts.iac.n_stop {
            found.truncate(n - accepted);
        }
        accepted += found.len();
        if !base.upgrade_and_resolve(inst, uc, opts, "iac", found)? {
            break;
        }
        // Restore the zero-flag condition before the next round.
        base.iterate(inst, uc, opts, p2_inner)?;
    }
    if base.last_z_c_lp.is_none() {
        base.p2_step(inst, uc, opts)?;
    }
    let algorithm = if p2_inner { Algorithm::Iac1 } else { Algorithm::Iac2 };
    let mut r = base.report(inst, uc, algorithm)?;
    r.iac_accepted = accepted;
    Ok(r)
}

/// Full hull pricing LP: every general unit uses the interval hull.
pub fn run_opt(inst: &SystemInstance, uc: &UcSolution, opts: &PricingOptions) -> Result<PricingRunReport, PricingError> {
    let clock = Stopwatch::start();
    let kinds: Vec<FormKind> = inst.generators.iter().map(|g| FormKind::hull_for(classify(g))).collect();
    let relaxed = solve_relaxed(inst, &kinds, opts)?;
    let p2 = lagrangian_value(inst, &kinds, &relaxed.duals, opts)?;
    let mut r = base_report(inst, uc, Algorithm::Opt, relaxed.duals.clone());
    r.relaxed_objective = Some(relaxed.result.objective);
    r.z_c_lp = Some(p2.z_c);
    r.iterations = 1;
    r.fractional_flags = p2.fractional.iter().map(|&i| inst.generators[i].id.clone()).collect();
    r.gamma = inst
        .generators
        .iter()
        .filter(|g| classify(g) == GeneratorClass::G4)
        .map(|g| g.id.clone())
        .collect();
    finish(inst, r, &clock)
}

/// Runs the listed algorithms against one shared MIP solve and fills the
/// price difference against LMP when LMP is among them.
pub fn run_all(
    inst: &SystemInstance,
    algorithms: &[Algorithm],
    opts: &PricingOptions,
) -> Result<(UcSolution, Vec<PricingRunReport>), PricingError> {
    let uc = solve_uc(inst, opts)?;
    let mut reports = Vec::new();
    let mut ia_states: Vec<(Algorithm, IaState)> = Vec::new();
    for &a in algorithms {
        let r = match a {
            Algorithm::Lmp => compute_lmp(inst, &uc, opts)?,
            Algorithm::Tlp => run_tlp(inst, &uc, opts)?,
            Algorithm::Ia1 | Algorithm::Ia2 => {
                let (r, s) = run_ia(inst, &uc, a, opts)?;
                ia_states.push((a, s));
                r
            }
            Algorithm::Iac1 | Algorithm::Iac2 => {
                let base_alg = if a == Algorithm::Iac1 { Algorithm::Ia1 } else { Algorithm::Ia2 };
                let base = match ia_states.iter().find(|(b, _)| *b == base_alg) {
                    Some((_, s)) => s.clone(),
                    None => run_ia(inst, &uc, base_alg, opts)?.1,
                };
                run_complementary(inst, &uc, base, a, opts)?
            }
            Algorithm::Opt => run_opt(inst, &uc, opts)?,
        };
        reports.push(r);
    }
    if let Some(lmp) = reports.iter().find(|r| r.algorithm == Algorithm::Lmp).map(|r| r.prices.clone()) {
        for r in &mut reports {
            let flat_a: Vec<f64> = r.bus_prices.iter().flatten().copied().collect();
            let lmp_bus: Vec<f64> = bus_prices(inst, &lmp).into_iter().flatten().collect();
            r.price_diff_vs_lmp = super::price_difference(&flat_a, &lmp_bus).ok();
        }
    }
    Ok((uc, reports))
}
