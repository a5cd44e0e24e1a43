//! Execution of the configured experiments.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{DataMode, ExperimentConfig, ExperimentKind, ProblemKind};
use super::output::Table;
use crate::discretization::{interval_mesh, structured_triangle_mesh, ScalarSpace};
use crate::equilibration::{assemble_flux, equilibration_residual, EquilibratedFlux};
use crate::error::{Error, Result};
use crate::estimators::bounds::{discrete_data, LOCAL_GAP, REFERENCE_GAP};
use crate::estimators::{
    drift_alerts, estimator_report, inefficiency_study, jump_estimator, report_with_bounds, BoundEvaluator,
    EstimatorReport, Relation, Theorem,
};
use crate::norms::{infsup_identity_residual, residual_dual_norm_sq, ys_identity_residual, NormKind, RieszLiftContext};
use crate::timestepping::forcing::data_quadrature_degree;
use crate::timestepping::{
    reconstruct, Forcing, HeatDiscretization, InitialApproximation, SpaceTimeFunction, TimePartition, TimeProfile,
    TimeSlabSolution,
};
use crate::verification::{
    exact_error, manufactured, observed_orders, reference_solve, ManufacturedProblem, ReferenceOptions,
    ReferenceSolution, ReferenceSource,
};

pub const EQUILIBRATION_TOL: f64 = 1e-9;
pub const IDENTITY_TOL: f64 = 1e-10;
pub const LOCALIZATION_TOL: f64 = 1e-12;
pub const EFFECTIVITY_MAX: f64 = 10.0;
pub const INEFFICIENCY_RATIO_MAX: f64 = 0.1;
pub const DRIFT_MAX: f64 = 2.0;

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    /// `"<="`, `">="`, `"in"` or `"true"`.
    pub comparison: &'static str,
    pub limit: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: &'static str,
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub threads: usize,
    pub phases: Vec<Phase>,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub assertions: Vec<Assertion>,
    pub outputs: Vec<String>,
    /// Measured constants of bounds with unknown constants, by bound, one entry per level.
    pub measured_constants: BTreeMap<&'static str, Vec<f64>>,
    pub passed: bool,
}

/// A completed run: manifest and tables, not yet written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub tables: Vec<Table>,
}

struct Recorder {
    assertions: Vec<Assertion>,
    phases: Vec<Phase>,
    clock: Instant,
}

impl Recorder {
    fn new() -> Self {
        Recorder {
            assertions: Vec::new(),
            phases: Vec::new(),
            clock: Instant::now(),
        }
    }

    fn phase(&mut self, name: impl Into<String>) {
        let now = Instant::now();
        self.phases.push(Phase {
            name: name.into(),
            seconds: (now - self.clock).as_secs_f64(),
        });
        self.clock = now;
    }

    fn push(&mut self, name: String, value: f64, comparison: &'static str, limit: Vec<f64>, passed: bool) {
        debug_assert!(self.assertions.iter().all(|a| a.name != name), "duplicate assertion {name}");
        self.assertions.push(Assertion {
            name,
            value,
            comparison,
            limit,
            passed,
        });
    }

    fn at_most(&mut self, name: impl Into<String>, value: f64, limit: f64) {
        self.push(name.into(), value, "<=", vec![limit], value <= limit);
    }

    fn within(&mut self, name: impl Into<String>, value: f64, lo: f64, hi: f64) {
        self.push(name.into(), value, "in", vec![lo, hi], (lo..=hi).contains(&value));
    }

    fn holds(&mut self, name: impl Into<String>, ok: bool) {
        self.push(name.into(), if ok { 1.0 } else { 0.0 }, "true", Vec::new(), ok);
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// One discretization level of the configured problem.
pub struct Level {
    pub space: Arc<ScalarSpace>,
    pub partition: TimePartition,
    pub solution: TimeSlabSolution,
    pub problem: ManufacturedProblem,
    pub forcing: Forcing,
}

impl Level {
    pub fn build(cfg: &ExperimentConfig, level: usize) -> Result<Level> {
        let m = &cfg.mesh;
        let n = m.resolution * m.semidiscrete_refinement * (1 << level);
        let mesh = if m.dim == 1 {
            interval_mesh(n, 0.0, 1.0)?
        } else {
            structured_triangle_mesh(n, n, [0.0, 1.0, 0.0, 1.0])?
        };
        let space = Arc::new(ScalarSpace::new(Arc::new(mesh), m.degree)?);
        let partition = TimePartition::graded(cfg.time.final_time, cfg.time.steps * (1 << level), cfg.time.grading)?;
        let problem = manufactured(cfg.manufactured_kind()?, cfg.time.final_time)?;
        let disc = HeatDiscretization::new(space.clone());
        let u0 = disc.initial_value(&|x| problem.u0(x), InitialApproximation::L2Projection)?;
        let forcing = problem.forcing();
        let solution = disc.run_with_forcing(&partition, &forcing, u0)?;
        Ok(Level {
            space,
            partition,
            solution,
            problem,
            forcing,
        })
    }

    pub fn flux(&self, cfg: &ExperimentConfig) -> Result<EquilibratedFlux> {
        assemble_flux(&self.solution, cfg.flux_degree(), cfg.threads)
    }

    /// Reference for the configured data mode.
    pub fn reference(&self, cfg: &ExperimentConfig) -> Result<ReferenceSolution> {
        let r = &cfg.reference;
        let options = ReferenceOptions {
            dof_cap: r.dof_cap,
            richardson: r.richardson,
        };
        let source = match cfg.problem.data {
            DataMode::Exact => ReferenceSource::Manufactured(&self.problem),
            DataMode::Discrete => ReferenceSource::Discrete {
                forcing: discrete_data(&self.solution)?,
                initial: &self.solution.values[0],
            },
        };
        reference_solve(&source, &self.space, &self.partition, r.space_refinement, r.time_refinement, options)
    }

    /// `u_0 - u_{h,tau,0}` on the lift space of `ctx`.
    pub fn initial_error(&self, ctx: &RieszLiftContext) -> Result<DVector<f64>> {
        let u0 = ctx.space.l2_project(&|x| self.problem.u0(x), data_quadrature_degree(ctx.space.degree))?;
        Ok(u0 - ctx.prolongate(&self.solution.values[0]))
    }
}

/// Localized estimator table: one row per (cell, interval).
pub fn localized_table(name: &str, sol: &TimeSlabSolution, report: &EstimatorReport) -> Table {
    let osc = report.osc_by_cell(sol);
    let mut rows = Vec::new();
    for n in 0..sol.partition.n_intervals() {
        for k in 0..sol.space.mesh.n_cells() {
            let flux = report.flux.as_ref().map_or(0.0, |f| f.flux.get(n, k));
            rows.push(vec![
                k.to_string(),
                n.to_string(),
                fmt(report.jump.get(n, k)),
                fmt(flux),
                fmt(osc.get(n, k)),
            ]);
        }
    }
    Table::new(name, &["cell_id", "interval_index", "eta_J_sq", "eta_F_sq", "osc_sq"], rows)
}

fn tolerances() -> BTreeMap<&'static str, f64> {
    BTreeMap::from([
        ("equilibration", EQUILIBRATION_TOL),
        ("identity", IDENTITY_TOL),
        ("localization", LOCALIZATION_TOL),
        ("reference_gap", REFERENCE_GAP),
        ("local_gap", LOCAL_GAP),
        ("effectivity_max", EFFECTIVITY_MAX),
        ("inefficiency_ratio_max", INEFFICIENCY_RATIO_MAX),
        ("drift_max", DRIFT_MAX),
    ])
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut rec = Recorder::new();
    let mut constants = BTreeMap::new();
    let tables = match cfg.experiment {
        ExperimentKind::IdentitySuite => identity_suite(cfg, &mut rec)?,
        ExperimentKind::ConvergenceStudy => convergence_study(cfg, &mut rec)?,
        ExperimentKind::EstimatorReport => estimator_study(cfg, &mut rec, &mut constants)?,
        ExperimentKind::InefficiencyStudy => inefficiency(cfg, &mut rec)?,
        ExperimentKind::HypercircleCheck => hypercircle(cfg, &mut rec)?,
    };
    let passed = rec.assertions.iter().all(|a| a.passed);
    Ok(RunOutcome {
        manifest: RunManifest {
            experiment: cfg.experiment.name(),
            version: env!("CARGO_PKG_VERSION"),
            config: cfg.clone(),
            threads: cfg.threads,
            phases: rec.phases,
            tolerances: tolerances(),
            assertions: rec.assertions,
            outputs: tables.iter().map(|t| t.name.clone()).collect(),
            measured_constants: constants,
            passed,
        },
        tables,
    })
}

fn identity_suite(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<Vec<Table>> {
    let lv = Level::build(cfg, 0)?;
    let sol = &lv.solution;
    rec.phase("solve");
    let flux = lv.flux(cfg)?;
    rec.at_most("equilibration residual", equilibration_residual(&flux, sol)?, EQUILIBRATION_TOL);
    rec.phase("equilibration");

    let trial = RieszLiftContext::on_trial(lv.space.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.study.seed);
    let (mut ys, mut infsup) = (0.0f64, 0.0f64);
    for _ in 0..cfg.study.samples {
        let nodes = (0..=lv.partition.n_intervals())
            .map(|_| DVector::from_fn(lv.space.dim(), |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        let v = SpaceTimeFunction::new(TimeProfile::ContinuousAffine, lv.partition.clone(), nodes)?;
        ys = ys.max(ys_identity_residual(&v, &trial)?);
        infsup = infsup.max(infsup_identity_residual(&v, &trial)?);
    }
    rec.at_most("Y norm identity, worst random sample", ys, IDENTITY_TOL);
    rec.at_most("inf-sup identity, worst random sample", infsup, IDENTITY_TOL);
    rec.phase("norm identities");

    // On the trial space the residual of U is A (u_n - U) and its dual norm is the jump estimator.
    let big_u = reconstruct(sol, TimeProfile::ContinuousAffine);
    let data = discrete_data(sol)?;
    let r = residual_dual_norm_sq(&big_u, &data, &trial)?;
    let jump = jump_estimator(sol);
    let worst = r
        .iter()
        .zip(jump.interval_sums())
        .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
        .filter(|d| d.is_finite())
        .fold(0.0, f64::max);
    rec.at_most("trial-space residual equals jump estimator per interval", worst, IDENTITY_TOL);
    let ut = reconstruct(sol, TimeProfile::ConstantLeftContinuous);
    let gap = ut.to_slab().combine(1.0, &big_u.to_slab(), -1.0)?;
    let x = crate::norms::slab_norm_sq(&gap, NormKind::X, &trial)?;
    let rel = (x - jump.total_sq()).abs() / x.max(f64::MIN_POSITIVE);
    rec.at_most("jump estimator equals |u_tau - U|_X", rel, LOCALIZATION_TOL);

    let lift = RieszLiftContext::refined(lv.space.clone(), cfg.lift_refinement(), 0)?;
    let e0 = lv.initial_error(&lift)?;
    let report = estimator_report(sol, Some(&flux), &lv.forcing, Some(&e0), &lift)?;
    rec.at_most("localization consistency", report.localization_defect(sol), LOCALIZATION_TOL);
    rec.phase("estimators");
    Ok(vec![localized_table("estimators.csv", sol, &report)])
}

fn convergence_study(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<Vec<Table>> {
    if cfg.problem.data != DataMode::Exact {
        return Err(Error::Config("problem.data: a convergence study needs exact data".into()));
    }
    let mut rows = Vec::new();
    let (mut hs, mut ex, mut ey, mut ee, mut ej) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for l in 0..cfg.study.levels {
        let lv = Level::build(cfg, l)?;
        let sol = &lv.solution;
        let flux = lv.flux(cfg)?;
        let lift = RieszLiftContext::refined(lv.space.clone(), cfg.lift_refinement(), 0)?;
        let big_u = reconstruct(sol, TimeProfile::ContinuousAffine);
        let mean = reconstruct(sol, TimeProfile::Average);
        let error_x = exact_error(&lv.problem, &big_u, NormKind::X, &lift)?;
        let error_y = exact_error(&lv.problem, &big_u, NormKind::Y, &lift)?;
        let error_e = exact_error(&lv.problem, &mean, NormKind::Energy, &lift)?;
        let e0 = lv.initial_error(&lift)?;
        let report = estimator_report(sol, Some(&flux), &lv.forcing, Some(&e0), &lift)?;
        let t = &report.totals;
        let eta_f = t.eta_f.unwrap_or(0.0);
        let e0n = report.initial_error.unwrap_or(0.0);
        let est_y = ((eta_f + report.osc_y.value).powi(2) + e0n * e0n).sqrt();
        let est_e = (0.25 * t.eta_j.powi(2) + t.eta_f_mean.unwrap_or(0.0).powi(2)).sqrt() + report.osc_energy.value;
        let h = lv.space.mesh.h_max();
        let tau = lv.partition.tau_max();
        rows.push(vec![
            l.to_string(),
            fmt(h),
            fmt(tau),
            fmt(error_x),
            fmt(error_y),
            fmt(error_e),
            fmt(t.eta_j),
            fmt(eta_f),
            fmt(est_y / error_y),
            fmt(est_e / error_e),
        ]);
        hs.push(h);
        ex.push(error_x);
        ey.push(error_y);
        ee.push(error_e);
        ej.push(t.eta_j);
        rec.phase(format!("level {l}"));
    }
    let (lo, hi) = (cfg.study.order_min, cfg.study.order_max);
    for (name, v) in [("error_X", &ex), ("error_E", &ee), ("eta_J", &ej)] {
        for (i, o) in observed_orders(&hs, v).into_iter().enumerate() {
            rec.within(format!("order of {name}, levels {i}-{}", i + 1), o, lo, hi);
        }
    }
    for (name, v) in [("error_X", &ex), ("error_Y", &ey), ("error_E", &ee)] {
        rec.holds(format!("{name} decreasing"), v.windows(2).all(|w| w[1] < w[0]));
    }
    Ok(vec![Table::new(
        "convergence.csv",
        &[
            "level",
            "h",
            "tau",
            "error_X",
            "error_Y",
            "error_E",
            "eta_J",
            "eta_F",
            "effectivity_Y",
            "effectivity_E",
        ],
        rows,
    )])
}

/// Upper bounds guaranteed for discrete data, with the inequality index of the main bound.
const GUARANTEED: [Theorem; 3] = [Theorem::FluxYUpper, Theorem::ExtendedY, Theorem::FluxEnergy];

fn estimator_study(
    cfg: &ExperimentConfig,
    rec: &mut Recorder,
    constants: &mut BTreeMap<&'static str, Vec<f64>>,
) -> Result<Vec<Table>> {
    let levels = cfg.study.levels;
    let mut tables = Vec::new();
    let mut bound_rows = Vec::new();
    let mut all = Vec::new();
    for l in 0..levels {
        let lv = Level::build(cfg, l)?;
        let sol = &lv.solution;
        let flux = lv.flux(cfg)?;
        rec.phase(format!("level {l}: solve and flux"));
        let reference = lv.reference(cfg)?;
        rec.phase(format!("level {l}: reference"));
        let report = report_with_bounds(sol, Some(&flux), &reference, &Theorem::ALL)?;
        rec.phase(format!("level {l}: bounds"));
        let tag = if levels == 1 { String::new() } else { format!("level {l}: ") };
        rec.at_most(format!("{tag}localization consistency"), report.localization_defect(sol), LOCALIZATION_TOL);
        for b in &report.bounds {
            for q in &b.inequalities {
                bound_rows.push(vec![
                    l.to_string(),
                    b.theorem.name().to_string(),
                    q.label.clone(),
                    fmt(q.lhs),
                    fmt(q.rhs),
                    fmt(q.ratio()),
                    format!("{:?}", q.relation).to_lowercase(),
                    q.holds().map_or("measured".into(), |h| h.to_string()),
                ]);
            }
            if let Some(c) = b.max_local_constant {
                rec.holds(format!("{tag}{} local constant finite", b.theorem.name()), c.is_finite());
            }
            if cfg.problem.data == DataMode::Discrete && GUARANTEED.contains(&b.theorem) {
                let q = &b.inequalities[0];
                rec.at_most(format!("{tag}{}: error / estimator", b.theorem.name()), q.ratio(), 1.0 + REFERENCE_GAP);
                rec.at_most(format!("{tag}{} effectivity", b.theorem.name()), b.effectivity, EFFECTIVITY_MAX);
            }
            if b.theorem == Theorem::ExtendedY {
                let ratio = b.error / b.inequalities[1].lhs;
                rec.within(format!("{tag}extended norm equivalence ratio"), ratio, 1.0 - REFERENCE_GAP, 3.0 * (1.0 + REFERENCE_GAP));
            }
            if b.theorem == Theorem::JumpTimeLocal {
                let q = &b.inequalities[0];
                debug_assert_eq!(q.relation, Relation::Upper);
                rec.at_most(format!("{tag}time-local jump bound, worst interval"), q.lhs, 1.0 + LOCAL_GAP);
            }
        }
        let name = if levels == 1 { "estimators.csv".to_string() } else { format!("estimators_level{l}.csv") };
        tables.push(localized_table(&name, sol, &report));
        all.push(report.bounds);
    }
    let (table, alerts) = drift_alerts(&all);
    if levels > 1 {
        for (name, c) in &table {
            let drift = crate::estimators::constant_drift(c);
            rec.at_most(format!("{name} constant drift across levels"), drift, DRIFT_MAX);
        }
    }
    debug_assert!(levels == 1 || alerts.iter().all(|a| a.drift > DRIFT_MAX));
    *constants = table;
    tables.push(Table::new(
        "bounds.csv",
        &["level", "bound", "inequality", "lhs", "rhs", "ratio", "relation", "holds"],
        bound_rows,
    ));
    Ok(tables)
}

fn inefficiency(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<Vec<Table>> {
    let t = inefficiency_study(&cfg.problem.lambdas)?;
    rec.phase("modal sweep");
    rec.holds("|u - u_tau| / |u - U| strictly decreasing", t.ratio_strictly_decreasing());
    rec.holds("|u - u_tau| / eta_J decreasing for large lambda", t.large_lambda_trend());
    rec.holds("|u - U| / eta_J decreasing as lambda decreases", t.small_lambda_trend());
    let worst = t
        .rows
        .iter()
        .map(|r| (r.eta_j - r.eta_j_closed_form).abs() / r.eta_j_closed_form)
        .fold(0.0, f64::max);
    rec.at_most("eta_J against its closed form", worst, 1e-12);
    rec.holds(
        "all quantities positive",
        t.rows.iter().all(|r| r.error_ut > 0.0 && r.error_uu > 0.0 && r.eta_j > 0.0),
    );
    let (first, last) = (&t.rows[0], &t.rows[t.rows.len() - 1]);
    if last.lambda >= 1e3 {
        rec.at_most(format!("|u - u_tau| / eta_J at lambda {}", last.lambda), last.ratio_ut(), INEFFICIENCY_RATIO_MAX);
    }
    if first.lambda <= 1e-3 {
        rec.at_most(format!("|u - U| / eta_J at lambda {}", first.lambda), first.ratio_uu(), INEFFICIENCY_RATIO_MAX);
    }
    let rows = t
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt(r.lambda),
                fmt(r.error_ut),
                fmt(r.error_uu),
                fmt(r.eta_j),
                fmt(r.ratio_ut()),
                fmt(r.ratio_uu()),
                fmt(r.ratio_ut_uu()),
                fmt(r.energy_error_ut),
                fmt(r.energy_error_uu),
            ]
        })
        .collect();
    Ok(vec![Table::new(
        "inefficiency.csv",
        &[
            "lambda",
            "error_ut",
            "error_uu",
            "eta_J",
            "effectivity_ut",
            "effectivity_uu",
            "ratio_ut_uu",
            "energy_error_ut",
            "energy_error_uu",
        ],
        rows,
    )])
}

fn hypercircle(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<Vec<Table>> {
    let p = &cfg.problem;
    let steady = p.kind == ProblemKind::Relaxation || p.decay == 0.0;
    if !steady {
        return Err(Error::Config(
            "problem: the hypercircle check needs a source constant in time (relaxation, or decay = 0)".into(),
        ));
    }
    let mut rows = Vec::new();
    for l in 0..cfg.study.levels {
        let lv = Level::build(cfg, l)?;
        let sol = &lv.solution;
        let reference = lv.reference(cfg)?;
        rec.phase(format!("level {l}: solve and reference"));
        let ev = BoundEvaluator::new(sol, None, &reference)?;
        let eta = ev.jump.total();
        let sum = ev.error_energy_ut().powi(2) + ev.error_energy_uu().powi(2);
        let hyper = (sum - eta * eta).abs() / (eta * eta);
        let jump = (ev.error_y() - eta).abs() / eta;
        let tag = if cfg.study.levels == 1 { String::new() } else { format!("level {l}: ") };
        rec.at_most(format!("{tag}hypercircle defect"), hyper, REFERENCE_GAP);
        rec.at_most(format!("{tag}jump estimator against Y error"), jump, REFERENCE_GAP);
        rec.phase(format!("level {l}: evaluation"));
        rows.push(vec![
            l.to_string(),
            fmt(lv.space.mesh.h_max()),
            fmt(lv.partition.tau_max()),
            fmt(eta),
            fmt(ev.error_energy_ut()),
            fmt(ev.error_energy_uu()),
            fmt(hyper),
            fmt(ev.error_y()),
            fmt(jump),
        ]);
    }
    Ok(vec![Table::new(
        "hypercircle.csv",
        &[
            "level",
            "h",
            "tau",
            "eta_J",
            "error_E_ut",
            "error_E_uu",
            "hypercircle_defect",
            "error_Y",
            "jump_defect",
        ],
        rows,
    )])
}
