//! Python module `nhm`.

use nhm_core::config::SystemConfig;
use nhm_core::detector::{
    detect, verify_measure, DetectedMeasure, DetectionReport, Grid, MeasureCandidate, Thresholds, Volume,
};
use nhm_core::dynamics::{rk4_integrate, Integration};
use nhm_core::poisson::{energy, hamilton_rhs, PhaseState};
use nhm_core::reduction::{ReducedStructure, SymmetricSystem};
use nhm_core::systems::shipped_examples;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use std::collections::HashMap;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A compiled system description.
#[pyclass(name = "System", module = "nhm", frozen)]
struct PySystem {
    cfg: SystemConfig,
    sys: SymmetricSystem,
}

impl PySystem {
    fn build(cfg: SystemConfig) -> PyResult<Self> {
        let sys = cfg.compile().map_err(value_err)?;
        Ok(PySystem { cfg, sys })
    }

    fn state(&self, state: Vec<f64>) -> PyResult<PhaseState> {
        let mh = self.sys.m_hat();
        if state.len() != mh + self.sys.n() {
            return Err(value_err(format!(
                "state has {} entries, the system needs {}",
                state.len(),
                mh + self.sys.n()
            )));
        }
        Ok(PhaseState::from_slice(mh, &state))
    }
}

#[pymethods]
impl PySystem {
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Self::build(SystemConfig::parse(text).map_err(value_err)?)
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| value_err(format!("{path}: {e}")))?;
        Self::from_text(&text)
    }

    /// One of the bundled examples, by file stem.
    #[staticmethod]
    fn example(name: &str) -> PyResult<Self> {
        let ex = shipped_examples()
            .into_iter()
            .find(|e| e.file == name)
            .ok_or_else(|| value_err(format!("unknown example '{name}'")))?;
        Self::from_text(&ex.text)
    }

    #[getter]
    fn name(&self) -> String {
        self.cfg.name.clone()
    }

    #[getter]
    fn params(&self) -> HashMap<String, f64> {
        self.cfg.params.iter().cloned().collect()
    }

    #[getter]
    fn shape_names(&self) -> Vec<String> {
        self.sys.shape_chart().names.clone()
    }

    /// Momentum labels `p_<field>`, verticals first.
    #[getter]
    fn momentum_names(&self) -> Vec<String> {
        self.cfg.field_names().iter().map(|f| format!("p_{f}")).collect()
    }

    #[getter]
    fn state_dim(&self) -> usize {
        self.sys.m_hat() + self.sys.n()
    }

    /// A copy with some parameters replaced.
    fn with_params(&self, values: HashMap<String, f64>) -> PyResult<Self> {
        let mut cfg = self.cfg.clone();
        let mut names: Vec<_> = values.into_iter().collect();
        names.sort_by(|a, b| a.0.cmp(&b.0));
        for (k, v) in names {
            cfg.set_param(&k, v).map_err(|e| value_err(e.message))?;
        }
        Self::build(cfg)
    }

    fn to_text(&self) -> String {
        self.cfg.to_string()
    }

    fn energy(&self, state: Vec<f64>) -> PyResult<f64> {
        energy(&self.sys, &self.state(state)?).map_err(runtime_err)
    }

    /// Right-hand side of the reduced equations.
    fn rhs(&self, state: Vec<f64>) -> PyResult<Vec<f64>> {
        hamilton_rhs(&self.sys, &self.state(state)?).map_err(runtime_err)
    }

    #[pyo3(signature = (grid = 33, accept = 1e-6, reject = 1e-3))]
    fn analyze(&self, py: Python<'_>, grid: usize, accept: f64, reject: f64) -> PyResult<PyReport> {
        if grid < 2 || !(accept > 0.0 && accept < reject) {
            return Err(value_err("need grid >= 2 and 0 < accept < reject"));
        }
        let g = Grid::new(self.sys.shape_chart(), grid);
        let mut r = py
            .detach(|| detect(&self.sys, &g, Thresholds { accept, reject }))
            .map_err(runtime_err)?;
        r.system = Some(self.cfg.name.clone());
        Ok(PyReport { inner: r })
    }

    /// Integrates from `state` and returns `(times, states, energies)`.
    #[pyo3(signature = (state, t_end, h = 1e-3, every = 1))]
    fn simulate(
        &self,
        py: Python<'_>,
        state: Vec<f64>,
        t_end: f64,
        h: f64,
        every: usize,
    ) -> PyResult<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
        let x0 = self.state(state)?.to_vec();
        let mh = self.sys.m_hat();
        let sys = &self.sys;
        let rhs = |x: &[f64]| hamilton_rhs(sys, &PhaseState::from_slice(mh, x)).map_err(|e| e.to_string());
        let inside = |x: &[f64]| sys.shape_chart().in_sample_box(&x[..mh]);
        let diag = |x: &[f64]| vec![energy(sys, &PhaseState::from_slice(mh, x)).unwrap_or(f64::NAN)];
        let opts = Integration {
            h,
            t_end,
            admissible: &inside,
            diagnostics: &diag,
            record_every: every,
            ..Integration::plain(h, t_end, x0.len())
        };
        let traj = py.detach(|| rk4_integrate(&rhs, &x0, &opts)).map_err(runtime_err)?;
        let energies = traj.diagnostics.iter().map(|d| d[0]).collect();
        Ok((traj.times, traj.states, energies))
    }

    /// Largest relative Liouville residual over random states. Uses `density`
    /// if given, else the exponent in `report`, else the declared density.
    #[pyo3(signature = (density = None, volume = "momentum", report = None, samples = 100, seed = 42))]
    fn verify_measure(
        &self,
        py: Python<'_>,
        density: Option<&str>,
        volume: &str,
        report: Option<&PyReport>,
        samples: usize,
        seed: u64,
    ) -> PyResult<f64> {
        let cand = match (density, report) {
            (Some(src), _) => {
                let vol = match volume {
                    "momentum" => Volume::Momentum,
                    "velocity" => Volume::Velocity,
                    other => return Err(value_err(format!("volume must be 'momentum' or 'velocity', not '{other}'"))),
                };
                self.cfg.parse_density(src, vol).map_err(|e| value_err(e.message))?
            }
            (None, Some(r)) => MeasureCandidate::Detected(
                DetectedMeasure::from_report(&r.inner).ok_or_else(|| value_err("report carries no density"))?,
            ),
            (None, None) => self
                .cfg
                .density_candidate()
                .ok_or_else(|| value_err("the system declares no density"))?,
        };
        let s = py
            .detach(|| verify_measure(&self.sys, &cand, samples, seed))
            .map_err(runtime_err)?;
        Ok(s.max_relative)
    }

    fn __repr__(&self) -> String {
        format!("System('{}', shape={:?})", self.cfg.name, self.sys.shape_chart().names)
    }
}

/// Result of `System.analyze`.
#[pyclass(name = "Report", module = "nhm", frozen)]
struct PyReport {
    inner: DetectionReport,
}

#[pymethods]
impl PyReport {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyReport {
            inner: DetectionReport::from_json(text).map_err(value_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// `"measure-exists"`, `"no-measure"` or `"inconclusive"`.
    #[getter]
    fn verdict(&self) -> &'static str {
        self.inner.verdict.as_str()
    }

    #[getter]
    fn exit_code(&self) -> i32 {
        self.inner.verdict.exit_code()
    }

    #[getter]
    fn condition_one_residual(&self) -> f64 {
        self.inner.condition_one_residual
    }

    #[getter]
    fn closedness_residual(&self) -> Option<f64> {
        self.inner.closedness_residual
    }

    #[getter]
    fn reason(&self) -> Option<String> {
        self.inner.reason.clone()
    }

    #[getter]
    fn grid_axes(&self) -> Vec<Vec<f64>> {
        self.inner.grid.axes.clone()
    }

    /// `σ̂` at the grid nodes, row-major, when a density was reconstructed.
    #[getter]
    fn sigma(&self) -> Option<Vec<f64>> {
        self.inner.sigma.clone()
    }

    fn __repr__(&self) -> String {
        format!("Report({}, {})", self.inner.system.as_deref().unwrap_or("?"), self.verdict())
    }
}

#[pyfunction]
fn example_names() -> Vec<&'static str> {
    shipped_examples().iter().map(|e| e.file).collect()
}

#[pymodule]
fn nhm(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystem>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(example_names, m)?)?;
    Ok(())
}
