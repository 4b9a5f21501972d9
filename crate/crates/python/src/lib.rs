//! Python bindings: catalog access, IID and MH sampling, the distance
//! metrics, and full benchmark runs with JSON reports.

use std::path::PathBuf;

use pyo3::exceptions::{PyFileNotFoundError, PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bench::harness::{build_teststatistic_iid, build_teststatistic_user, Role};
use bench::metrics::{self, Metric, SwdConfig};
use bench::report;
use bench::samplers::{metropolis_hastings as mh, MhConfig};
use bench::targets;
use bench::Error;

fn to_py(err: Error) -> PyErr {
    match err {
        Error::NotFound(msg) => PyKeyError::new_err(msg),
        Error::Io(e) if e.kind() == std::io::ErrorKind::NotFound => PyFileNotFoundError::new_err(e.to_string()),
        Error::Parameter(_) | Error::Capacity { .. } | Error::UnsupportedMetric { .. } => {
            PyValueError::new_err(err.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Point set with optional per-row weights.
#[pyclass(name = "SampleBatch", module = "samplebench", frozen)]
struct PySampleBatch {
    inner: bench::SampleBatch,
}

#[pymethods]
impl PySampleBatch {
    #[new]
    #[pyo3(signature = (rows, weights=None))]
    fn new(rows: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> PyResult<Self> {
        let mut inner = bench::SampleBatch::from_rows(&rows).map_err(to_py)?;
        if let Some(w) = weights {
            inner = inner.with_weights(w).map_err(to_py)?;
        }
        Ok(Self { inner })
    }

    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: bench::store::read_csv(path).map_err(to_py)?,
        })
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        bench::store::write_csv(&self.inner, path).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn weights(&self) -> Option<Vec<f64>> {
        self.inner.weights().map(<[f64]>::to_vec)
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows().map(<[f64]>::to_vec).collect()
    }

    fn ess(&self) -> f64 {
        bench::store::ess(&self.inner)
    }

    /// Runs of identical consecutive rows become one row weighted by the run length.
    fn collapse_repeats(&self) -> Self {
        Self {
            inner: self.inner.collapse_repeats(),
        }
    }

    fn __repr__(&self) -> String {
        format!("SampleBatch(len={}, dim={}, ess={:.1})", self.inner.len(), self.inner.dim(), self.ess())
    }
}

/// Catalog entries as dicts with `name`, `dim` and `properties`.
#[pyfunction]
fn catalog(py: Python<'_>) -> PyResult<Vec<Bound<'_, PyDict>>> {
    targets::catalog()
        .iter()
        .map(|t| {
            let d = PyDict::new(py);
            d.set_item("name", t.name())?;
            d.set_item("dim", t.dim())?;
            d.set_item("properties", t.properties())?;
            Ok(d)
        })
        .collect()
}

fn lookup(testcase: &str) -> PyResult<targets::TargetSpec> {
    targets::lookup(testcase).map_err(to_py)
}

#[pyfunction]
fn log_density(testcase: &str, point: Vec<f64>) -> PyResult<f64> {
    lookup(testcase)?.log_density(&point).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (testcase, n, seed=0))]
fn sample_iid(testcase: &str, n: usize, seed: u64) -> PyResult<PySampleBatch> {
    Ok(PySampleBatch {
        inner: lookup(testcase)?.sample_iid(n, seed).map_err(to_py)?,
    })
}

#[pyfunction]
#[pyo3(signature = (testcase, n_steps, proposal_std=1.0, seed=0, chains=1, burn_in=None))]
fn metropolis_hastings(
    testcase: &str,
    n_steps: usize,
    proposal_std: f64,
    seed: u64,
    chains: usize,
    burn_in: Option<usize>,
) -> PyResult<PySampleBatch> {
    let mut cfg = MhConfig::new(n_steps, proposal_std, seed).with_chains(chains);
    if let Some(b) = burn_in {
        cfg = cfg.with_burn_in(b);
    }
    Ok(PySampleBatch {
        inner: mh(&lookup(testcase)?, &cfg).map_err(to_py)?,
    })
}

#[pyfunction]
fn ess(weights: Vec<f64>) -> PyResult<f64> {
    bench::store::ess_of_weights(&weights).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (x, y, projections=50, p=1.0, seed=0))]
fn sliced_wasserstein(x: &PySampleBatch, y: &PySampleBatch, projections: usize, p: f64, seed: u64) -> PyResult<f64> {
    metrics::sliced_wasserstein(&x.inner, &y.inner, &SwdConfig::new(projections, p, seed)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (xs, ys, p=1.0))]
fn wasserstein_1d(xs: Vec<f64>, ys: Vec<f64>, p: f64) -> PyResult<f64> {
    metrics::wasserstein_1d(&xs, &ys, p).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (x, y, cap=1000, seed=0))]
fn median_heuristic(x: &PySampleBatch, y: &PySampleBatch, cap: usize, seed: u64) -> PyResult<f64> {
    metrics::median_heuristic(&x.inner, &y.inner, cap, seed).map_err(to_py)
}

#[pyfunction]
fn mmd_exact(x: &PySampleBatch, y: &PySampleBatch, sigma: f64) -> PyResult<f64> {
    metrics::mmd_exact(&x.inner, &y.inner, sigma).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (x, y, sigma, features=1000, seed=0))]
fn mmd_rff(x: &PySampleBatch, y: &PySampleBatch, sigma: f64, features: usize, seed: u64) -> PyResult<f64> {
    metrics::mmd_rff(&x.inner, &y.inner, sigma, features, seed).map_err(to_py)
}

/// Benchmark report: reference and user statistics plus their comparison.
#[pyclass(name = "Report", module = "samplebench", frozen)]
struct PyReport {
    inner: bench::ReportDocument,
}

#[pymethods]
impl PyReport {
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: report::read_report(path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: report::from_json_str(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        report::to_json_string(&self.inner).map_err(to_py)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        report::write_report(&self.inner, path).map_err(to_py)
    }

    fn plot_overview(&self, path: PathBuf) -> PyResult<()> {
        report::plot_overview(&self.inner.comparison, path).map_err(to_py)
    }

    #[pyo3(signature = (metric, path, nbins=20))]
    fn plot_teststatistic(&self, metric: &str, path: PathBuf, nbins: usize) -> PyResult<()> {
        let r = self.inner.statistic(Role::IidReference, metric);
        let u = self.inner.statistic(Role::User, metric);
        let (Some(r), Some(u)) = (r, u) else {
            return Err(PyKeyError::new_err(format!("metric `{metric}` not in report")));
        };
        report::plot_teststatistic(r, u, nbins, path).map_err(to_py)
    }

    #[getter]
    fn passes(&self) -> bool {
        self.inner.comparison.passes()
    }

    #[getter]
    fn max_abs_z(&self) -> f64 {
        self.inner.comparison.max_abs_z()
    }

    #[getter]
    fn testcase(&self) -> &str {
        &self.inner.testcase
    }

    fn metric_names(&self) -> Vec<String> {
        self.inner.metric_names()
    }

    /// Per-metric comparison rows as dicts.
    fn entries<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .comparison
            .entries
            .iter()
            .map(|e| {
                let d = PyDict::new(py);
                d.set_item("metric", &e.metric)?;
                d.set_item("z", e.z)?;
                d.set_item("std_ratio", e.std_ratio)?;
                d.set_item("band", e.band.label())?;
                d.set_item("ref_mean", e.ref_mean)?;
                d.set_item("ref_std", e.ref_std)?;
                d.set_item("user_mean", e.user_mean)?;
                d.set_item("user_std", e.user_std)?;
                Ok(d)
            })
            .collect()
    }

    /// Per-batch values of one metric for the given role
    /// (`"iid-reference"` or `"user"`).
    fn values(&self, role: &str, metric: &str) -> PyResult<Vec<f64>> {
        let role = match role {
            "iid-reference" => Role::IidReference,
            "user" => Role::User,
            other => return Err(PyValueError::new_err(format!("unknown role `{other}`"))),
        };
        self.inner
            .statistic(role, metric)
            .map(|s| s.values.clone())
            .ok_or_else(|| PyKeyError::new_err(format!("metric `{metric}` not in report")))
    }

    fn __repr__(&self) -> String {
        format!(
            "Report(testcase={:?}, m={}, n={}, passes={})",
            self.inner.testcase,
            self.inner.m,
            self.inner.n,
            self.passes()
        )
    }
}

/// Scores `samples` against `m` IID reference batches of size `n`.
#[pyfunction]
#[pyo3(signature = (testcase, samples, metrics=None, m=100, n=10_000, seed=0, sampler="user"))]
fn run_benchmark(
    py: Python<'_>,
    testcase: &str,
    samples: &PySampleBatch,
    metrics: Option<Vec<String>>,
    m: usize,
    n: usize,
    seed: u64,
    sampler: &str,
) -> PyResult<PyReport> {
    let names = metrics.unwrap_or_else(|| ["mean", "variance", "swd", "mmd_rff"].map(String::from).to_vec());
    let metrics = names.iter().map(|s| s.parse()).collect::<bench::Result<Vec<Metric>>>().map_err(to_py)?;
    let target = lookup(testcase)?;
    let user = samples.inner.clone();
    let inner = py
        .detach(|| -> bench::Result<_> {
            let reference = build_teststatistic_iid(&target, &metrics, m, n, seed)?;
            let theirs = build_teststatistic_user(&target, &metrics, m, n, &user, seed)?;
            bench::ReportDocument::new(target.name(), sampler, seed, n, reference, theirs)
        })
        .map_err(to_py)?;
    Ok(PyReport { inner })
}

#[pymodule]
fn samplebench(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySampleBatch>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(log_density, m)?)?;
    m.add_function(wrap_pyfunction!(sample_iid, m)?)?;
    m.add_function(wrap_pyfunction!(metropolis_hastings, m)?)?;
    m.add_function(wrap_pyfunction!(ess, m)?)?;
    m.add_function(wrap_pyfunction!(sliced_wasserstein, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein_1d, m)?)?;
    m.add_function(wrap_pyfunction!(median_heuristic, m)?)?;
    m.add_function(wrap_pyfunction!(mmd_exact, m)?)?;
    m.add_function(wrap_pyfunction!(mmd_rff, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
