//! Python bindings: discrete runs of manufactured problems, their estimators and bounds,
//! and the configured experiments.

use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use parest::equilibration::{equilibration_residual, EquilibratedFlux};
use parest::estimators::{estimator_report, inefficiency_study as study, report_with_bounds, Theorem};
use parest::experiment::{run, write_outputs, DataMode, ExperimentConfig, ExperimentKind, Level};
use parest::norms::{NormKind, RieszLiftContext};
use parest::timestepping::{reconstruct, TimeProfile};
use parest::verification::exact_error;

fn err(e: parest::Error) -> PyErr {
    match e {
        parest::Error::Config(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn norm_kind(name: &str) -> PyResult<NormKind> {
    Ok(match name {
        "X" | "x" => NormKind::X,
        "Y" | "y" => NormKind::Y,
        "energy" | "E" => NormKind::Energy,
        _ => return Err(PyValueError::new_err(format!("unknown norm {name:?}; expected X, Y or energy"))),
    })
}

fn profile(name: &str) -> PyResult<TimeProfile> {
    Ok(match name {
        "constant" => TimeProfile::ConstantLeftContinuous,
        "affine" => TimeProfile::ContinuousAffine,
        "average" => TimeProfile::Average,
        _ => {
            return Err(PyValueError::new_err(format!(
                "unknown profile {name:?}; expected constant, affine or average"
            )))
        }
    })
}

fn theorem(name: &str) -> PyResult<Theorem> {
    Theorem::ALL
        .into_iter()
        .find(|t| t.name() == name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown bound {name:?}")))
}

/// Implicit Euler run of a manufactured heat problem on the unit interval or square.
#[pyclass(unsendable)]
struct HeatRun {
    cfg: ExperimentConfig,
    level: Level,
    flux: Option<EquilibratedFlux>,
}

#[pymethods]
impl HeatRun {
    #[new]
    #[pyo3(signature = (kind="fourier_1d", dim=1, resolution=8, degree=1, steps=8, final_time=0.5, grading=1.0, k=1, ky=1, decay=std::f64::consts::PI * std::f64::consts::PI, amplitude=1.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        kind: &str,
        dim: usize,
        resolution: usize,
        degree: usize,
        steps: usize,
        final_time: f64,
        grading: f64,
        k: u32,
        ky: u32,
        decay: f64,
        amplitude: f64,
    ) -> PyResult<Self> {
        let text = format!(
            "experiment = \"estimator_report\"\n[problem]\nkind = \"{kind}\"\nk = {k}\nky = {ky}\ndecay = {decay:e}\namplitude = {amplitude:e}\n\
             [mesh]\ndim = {dim}\nresolution = {resolution}\ndegree = {degree}\n[time]\nfinal_time = {final_time:e}\nsteps = {steps}\ngrading = {grading:e}\n"
        );
        let cfg = ExperimentConfig::parse(&text).map_err(err)?;
        let level = Level::build(&cfg, 0).map_err(err)?;
        Ok(HeatRun { cfg, level, flux: None })
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.level.space.mesh.n_cells()
    }

    #[getter]
    fn n_intervals(&self) -> usize {
        self.level.partition.n_intervals()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.level.space.mesh.h_max()
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.level.partition.tau_max()
    }

    /// Nodal values `u_0, ..., u_N`.
    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        self.level.solution.values.iter().map(|v| v.iter().copied().collect()).collect()
    }

    /// `eta_J^2` per interval and cell.
    fn jump_estimator(&self) -> Vec<Vec<f64>> {
        parest::estimators::jump_estimator(&self.level.solution).values
    }

    #[getter]
    fn eta_j(&self) -> f64 {
        parest::estimators::jump_estimator(&self.level.solution).total()
    }

    /// Build the equilibrated flux and return its normalized equilibration residual.
    #[pyo3(signature = (degree=None))]
    fn equilibrate(&mut self, degree: Option<usize>) -> PyResult<f64> {
        if let Some(d) = degree {
            self.cfg.estimator.flux_degree = Some(d);
            self.cfg.validate().map_err(err)?;
        }
        let flux = self.level.flux(&self.cfg).map_err(err)?;
        let r = equilibration_residual(&flux, &self.level.solution).map_err(err)?;
        self.flux = Some(flux);
        Ok(r)
    }

    /// Estimators and oscillations over a lift space refined `lift_refinement` times.
    #[pyo3(signature = (lift_refinement=2))]
    fn estimators(&self, py: Python<'_>, lift_refinement: usize) -> PyResult<Py<PyAny>> {
        let lv = &self.level;
        let ctx = RieszLiftContext::refined(lv.space.clone(), lift_refinement, 0).map_err(err)?;
        let e0 = lv.initial_error(&ctx).map_err(err)?;
        let r = estimator_report(&lv.solution, self.flux.as_ref(), &lv.forcing, Some(&e0), &ctx).map_err(err)?;
        to_py(py, &r)
    }

    /// Error against the manufactured solution.
    #[pyo3(signature = (norm, profile_name="affine", lift_refinement=2))]
    fn exact_error(&self, norm: &str, profile_name: &str, lift_refinement: usize) -> PyResult<f64> {
        let lv = &self.level;
        let ctx = RieszLiftContext::refined(lv.space.clone(), lift_refinement, 0).map_err(err)?;
        let v = reconstruct(&lv.solution, profile(profile_name)?);
        exact_error(&lv.problem, &v, norm_kind(norm)?, &ctx).map_err(err)
    }

    /// Evaluate bounds against a reference solution; flux bounds need `equilibrate` first.
    #[pyo3(signature = (theorems=None, discrete=true, space_refinement=4, time_refinement=4, richardson=true))]
    fn bounds(
        &mut self,
        py: Python<'_>,
        theorems: Option<Vec<String>>,
        discrete: bool,
        space_refinement: usize,
        time_refinement: usize,
        richardson: bool,
    ) -> PyResult<Py<PyAny>> {
        let list = match theorems {
            Some(names) => names.iter().map(|n| theorem(n)).collect::<PyResult<Vec<_>>>()?,
            None => Theorem::ALL.to_vec(),
        };
        self.cfg.problem.data = if discrete { DataMode::Discrete } else { DataMode::Exact };
        self.cfg.reference.space_refinement = space_refinement;
        self.cfg.reference.time_refinement = time_refinement;
        self.cfg.reference.richardson = richardson;
        self.cfg.validate().map_err(err)?;
        let reference = self.level.reference(&self.cfg).map_err(err)?;
        let r = report_with_bounds(&self.level.solution, self.flux.as_ref(), &reference, &list).map_err(err)?;
        to_py(py, &r.bounds)
    }
}

/// Run an experiment from TOML text; write its outputs when `output` is given.
/// Returns the manifest.
#[pyfunction]
#[pyo3(signature = (config, output=None))]
fn run_experiment(py: Python<'_>, config: &str, output: Option<&str>) -> PyResult<Py<PyAny>> {
    let cfg = ExperimentConfig::parse(config).map_err(err)?;
    let out = run(&cfg).map_err(err)?;
    if let Some(dir) = output {
        write_outputs(&out, Path::new(dir)).map_err(err)?;
    }
    to_py(py, &out.manifest)
}

#[pyfunction]
fn list_experiments() -> Vec<(&'static str, &'static str)> {
    ExperimentKind::ALL.iter().map(|e| (e.name(), e.summary())).collect()
}

#[pyfunction]
fn schema() -> &'static str {
    parest::experiment::config::SCHEMA
}

#[pyfunction]
fn bound_names() -> Vec<&'static str> {
    Theorem::ALL.iter().map(|t| t.name()).collect()
}

/// One-step modal sweep; one row per eigenvalue.
#[pyfunction]
fn inefficiency_study(py: Python<'_>, lambdas: Vec<f64>) -> PyResult<Py<PyAny>> {
    let t = study(&lambdas).map_err(err)?;
    to_py(py, &t.rows)
}

#[pyfunction]
fn observed_orders(h: Vec<f64>, e: Vec<f64>) -> PyResult<Vec<f64>> {
    if h.len() != e.len() {
        return Err(PyValueError::new_err("h and e differ in length"));
    }
    Ok(parest::verification::observed_orders(&h, &e))
}

#[pymodule]
fn parest_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<HeatRun>()?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(list_experiments, m)?)?;
    m.add_function(wrap_pyfunction!(schema, m)?)?;
    m.add_function(wrap_pyfunction!(bound_names, m)?)?;
    m.add_function(wrap_pyfunction!(inefficiency_study, m)?)?;
    m.add_function(wrap_pyfunction!(observed_orders, m)?)?;
    Ok(())
}
