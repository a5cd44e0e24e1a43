//! Acceptance criteria, run sequentially so the runtime limits are measured in isolation.
//! Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use parest::equilibration::equilibration_residual;
use parest::experiment::{run, ExperimentConfig, Level, RunOutcome, Table};

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ExperimentConfig::from_file(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn assertion(out: &RunOutcome, name: &str) -> f64 {
    out.manifest
        .assertions
        .iter()
        .find(|a| a.name == name)
        .unwrap_or_else(|| panic!("no assertion {name}"))
        .value
}

fn column(t: &Table, name: &str) -> Vec<f64> {
    t.column(name).unwrap().iter().map(|v| v.parse().unwrap()).collect()
}

struct Verdict {
    ok: bool,
    detail: String,
}

fn check(ok: bool, detail: impl Into<String>) -> Verdict {
    Verdict { ok, detail: detail.into() }
}

fn equilibration() -> Verdict {
    let mut worst: f64 = 0.0;
    for (dim, resolution, kind) in [(1, 16, "fourier_1d"), (2, 8, "fourier_2d")] {
        for p in 1..=2 {
            let cfg = ExperimentConfig::parse(&format!(
                "experiment = \"identity_suite\"\n[problem]\nkind = \"{kind}\"\n[mesh]\ndim = {dim}\nresolution = {resolution}\ndegree = {p}\n[time]\nsteps = 8\n[estimator]\nflux_degree = {}\n",
                p + 1
            ))
            .unwrap();
            let lv = Level::build(&cfg, 0).unwrap();
            let flux = lv.flux(&cfg).unwrap();
            worst = worst.max(equilibration_residual(&flux, &lv.solution).unwrap());
        }
    }
    check(worst <= 1e-9, format!("max normalized residual {worst:.2e} <= 1e-9"))
}

fn identities() -> Verdict {
    let cfg = config("identity_suite.toml");
    let out = run(&cfg).unwrap();
    let ys = assertion(&out, "Y norm identity, worst random sample");
    let infsup = assertion(&out, "inf-sup identity, worst random sample");
    check(
        cfg.study.samples == 20 && ys <= 1e-10 && infsup <= 1e-10 && out.manifest.passed,
        format!("{} samples, Y identity {ys:.2e}, inf-sup identity {infsup:.2e} <= 1e-10", cfg.study.samples),
    )
}

fn hypercircle_run() -> (ExperimentConfig, RunOutcome) {
    let cfg = config("hypercircle_check.toml");
    let out = run(&cfg).unwrap();
    (cfg, out)
}

fn semidiscrete_setup(cfg: &ExperimentConfig) -> bool {
    cfg.mesh.semidiscrete_refinement >= 8 && cfg.reference.space_refinement >= 4 && cfg.reference.time_refinement >= 4
}

fn hypercircle() -> Verdict {
    let (cfg, out) = hypercircle_run();
    let defect = assertion(&out, "hypercircle defect");
    check(
        semidiscrete_setup(&cfg) && defect <= 0.02,
        format!("relative defect {defect:.2e} <= 2e-2 (space x{}, reference (4,4))", cfg.mesh.semidiscrete_refinement),
    )
}

fn jump_exactness() -> Verdict {
    let (cfg, out) = hypercircle_run();
    let gap = assertion(&out, "jump estimator against Y error");
    check(semidiscrete_setup(&cfg) && gap <= 0.02, format!("|err_Y - eta_J| / eta_J = {gap:.2e} <= 2e-2"))
}

/// `u(t) = (1 - exp(-lambda t)) / lambda` against `c` and `c t`, by composite Gauss quadrature.
fn modal_oracle(lambda: f64) -> (f64, f64, f64) {
    let c = 1.0 / (1.0 + lambda);
    let u = |t: f64| -(-lambda * t).exp_m1() / lambda;
    let (g, w) = ([-(0.6f64).sqrt(), 0.0, 0.6f64.sqrt()], [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0]);
    let m = 20_000;
    let h = 1.0 / m as f64;
    let (mut e_const, mut e_affine) = (0.0, 0.0);
    for i in 0..m {
        for q in 0..3 {
            let t = h * (i as f64 + 0.5 + 0.5 * g[q]);
            e_const += 0.5 * h * w[q] * (u(t) - c).powi(2);
            e_affine += 0.5 * h * w[q] * (u(t) - c * t).powi(2);
        }
    }
    // eta_J = sqrt(lambda) |u_tau - U|_{L2(0,1)} = sqrt(lambda) c / sqrt(3)
    let eta = lambda.sqrt() * c / 3f64.sqrt();
    (lambda.sqrt() * e_const.sqrt(), lambda.sqrt() * e_affine.sqrt(), eta)
}

fn inefficiency() -> Verdict {
    let cfg = config("inefficiency_study.toml");
    let out = run(&cfg).unwrap();
    let t = &out.tables[0];
    let lambdas = column(t, "lambda");
    let (eut, euu, eta) = (column(t, "error_ut"), column(t, "error_uu"), column(t, "eta_J"));
    let mut worst: f64 = 0.0;
    let mut ratios = Vec::new();
    for (i, &l) in lambdas.iter().enumerate() {
        let (a, b, e) = modal_oracle(l);
        worst = worst.max(((eut[i] - a) / a).abs()).max(((euu[i] - b) / b).abs()).max(((eta[i] - e) / e).abs());
        ratios.push((a / b, a / e, b / e));
    }
    let decreasing = ratios.windows(2).all(|w| w[1].0 < w[0].0);
    let big = ratios.last().unwrap().1;
    let small = ratios[0].2;
    let covers = lambdas.first() == Some(&1e-3) && lambdas.last() == Some(&1e3);
    check(
        covers && decreasing && big <= 0.1 && small <= 0.1 && worst < 1e-6,
        format!(
            "ratio strictly decreasing: {decreasing}; |u-u_tau|/eta_J at 1e3 = {big:.3e}; |u-U|/eta_J at 1e-3 = {small:.3e}; oracle gap {worst:.1e}"
        ),
    )
}

fn convergence() -> Verdict {
    let cfg = config("convergence_study.toml");
    let out = run(&cfg).unwrap();
    let t = &out.tables[0];
    let h = column(t, "h");
    let tau = column(t, "tau");
    let mut orders = Vec::new();
    for name in ["error_X", "error_E", "eta_J"] {
        let e = column(t, name);
        for i in 1..e.len() {
            orders.push((e[i - 1] / e[i]).ln() / (h[i - 1] / h[i]).ln());
        }
    }
    let (lo, hi) = orders.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &o| (a.min(o), b.max(o)));
    let proportional = tau.iter().zip(&h).all(|(t, hl)| ((t / hl) / (tau[0] / h[0]) - 1.0).abs() < 1e-12);
    let setup = cfg.problem.decay == std::f64::consts::PI.powi(2) && cfg.problem.k == 1 && t.rows.len() == 4;
    check(
        setup && proportional && lo >= 0.9 && hi <= 1.1,
        format!("{} levels, tau/h fixed: {proportional}, orders in [{lo:.3}, {hi:.3}] within [0.9, 1.1]", t.rows.len()),
    )
}

fn guaranteed_bounds() -> Verdict {
    let suite = [
        (1, "fourier_1d", 8, 8),
        (1, "polynomial_in_time", 8, 8),
        (1, "relaxation", 8, 8),
        (2, "fourier_2d", 4, 4),
        (2, "polynomial_in_time", 4, 4),
    ];
    let mut worst_ratio: f64 = 0.0;
    let mut worst_eff: f64 = 0.0;
    let mut all = true;
    let mut checked = 0;
    for (dim, kind, res, steps) in suite {
        let cfg = ExperimentConfig::parse(&format!(
            "experiment = \"estimator_report\"\n[problem]\nkind = \"{kind}\"\ndata = \"discrete\"\n[mesh]\ndim = {dim}\nresolution = {res}\n[time]\nsteps = {steps}\n"
        ))
        .unwrap();
        let out = run(&cfg).unwrap();
        for a in &out.manifest.assertions {
            if a.name.ends_with("error / estimator") {
                checked += 1;
                worst_ratio = worst_ratio.max(a.value);
                all &= a.passed;
            }
            if a.name.ends_with("effectivity") {
                worst_eff = worst_eff.max(a.value);
                all &= a.passed;
            }
        }
    }
    check(
        all && checked == 3 * suite.len() && worst_ratio <= 1.02 && worst_eff <= 10.0,
        format!("{} problems, {checked} bounds, worst error/estimator {worst_ratio:.4} <= 1.02, worst effectivity {worst_eff:.3} <= 10", suite.len()),
    )
}

fn local_efficiency() -> Verdict {
    let cfg = config("estimator_report.toml");
    let mut scaling = true;
    for l in 0..cfg.study.levels {
        let lv = Level::build(&cfg, l).unwrap();
        scaling &= lv.space.mesh.h_max().powi(2) <= lv.partition.tau_max() * (1.0 + 1e-12);
    }
    let out = run(&cfg).unwrap();
    let m = &out.manifest;
    let drifts: Vec<(&str, f64, bool)> = m
        .assertions
        .iter()
        .filter(|a| a.name.ends_with("constant drift across levels"))
        .map(|a| (a.name.split(' ').next().unwrap(), a.value, a.passed))
        .collect();
    let finite = m
        .assertions
        .iter()
        .filter(|a| a.name.ends_with("local constant finite"))
        .all(|a| a.passed);
    let worst = drifts.iter().map(|d| d.1).fold(0.0, f64::max);
    let listed = drifts.iter().map(|d| format!("{} {:.2}", d.0, d.1)).collect::<Vec<_>>().join(", ");
    check(
        cfg.study.levels == 3 && scaling && finite && drifts.len() >= 3 && drifts.iter().all(|d| d.2) && worst < 2.0,
        format!("3 levels, h^2 <= tau: {scaling}, finite: {finite}, drift {listed}"),
    )
}

fn determinism() -> Verdict {
    let names = [
        "identity_suite.toml",
        "convergence_study.toml",
        "inefficiency_study.toml",
        "hypercircle_check.toml",
        "estimator_report.toml",
    ];
    let mut same = true;
    let mut files = 0;
    for name in names {
        let mut cfg = config(name);
        cfg.threads = 1;
        if name == "estimator_report.toml" {
            cfg.study.levels = 2;
        }
        let csv = |o: RunOutcome| o.tables.iter().map(|t| t.to_csv().unwrap()).collect::<Vec<_>>();
        let a = csv(run(&cfg).unwrap());
        let b = csv(run(&cfg).unwrap());
        files += a.len();
        same &= a == b;
    }
    check(same, format!("{files} CSV tables from {} configs bitwise identical across two runs", names.len()))
}

fn main() -> ExitCode {
    type Criterion = (usize, &'static str, Duration, fn() -> Verdict);
    let criteria: [Criterion; 9] = [
        (1, "equilibration identity", Duration::from_secs(30), equilibration),
        (2, "inf-sup identity suite", Duration::from_secs(10), identities),
        (3, "hypercircle", Duration::from_secs(120), hypercircle),
        (4, "jump exactness", Duration::from_secs(120), jump_exactness),
        (5, "inefficiency reproduction", Duration::from_secs(5), inefficiency),
        (6, "first-order convergence", Duration::from_secs(120), convergence),
        (7, "guaranteed upper bounds", Duration::from_secs(180), guaranteed_bounds),
        (8, "local efficiency monitors", Duration::from_secs(300), local_efficiency),
        (9, "determinism", Duration::MAX, determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = f();
        let took = start.elapsed();
        let in_time = took <= limit;
        let ok = v.ok && in_time;
        failed += usize::from(!ok);
        let budget = if limit == Duration::MAX {
            String::new()
        } else {
            format!(" < {} s", limit.as_secs())
        };
        println!(
            "{} criterion {id} ({name}): {} [{:.1} s{budget}]",
            if ok { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64()
        );
    }
    println!("acceptance: {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
