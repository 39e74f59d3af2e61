//! Python bindings: datasets, fitting, variance reports, stability
//! selection, classification, simulation and the baseline tests.

use std::collections::HashSet;
use std::path::PathBuf;

use nalgebra::DMatrix;
use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use smvmf::baselines;
use smvmf::estimation::{self, FitConfig, RegularizationSpec};
use smvmf::io::{self, LoadOptions};
use smvmf::model::{FactorModel, MultiViewDataset};
use smvmf::simulation::{self, Heatmap, Method, MethodConfig, SimulationSpec};
use smvmf::spow;
use smvmf::stability::{self, SelectionProfile, StabilityConfig};

fn to_py(e: smvmf::Error) -> PyErr {
    match e {
        smvmf::Error::IndexOutOfRange { .. } => PyIndexError::new_err(e.to_string()),
        e if e.exit_code() == 4 => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

fn nested(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Column-centered multi-view data over a shared set of variables.
#[pyclass(module = "smvmf_py", frozen)]
struct Dataset {
    inner: MultiViewDataset,
}

#[pymethods]
impl Dataset {
    /// Builds a dataset from nested lists (one n_m x p matrix per view).
    /// Columns are centered.
    #[new]
    #[pyo3(signature = (views, variable_names=None))]
    fn new(views: Vec<Vec<Vec<f64>>>, variable_names: Option<Vec<String>>) -> PyResult<Self> {
        let mats = views.iter().map(|v| matrix(v)).collect::<PyResult<Vec<_>>>()?;
        let mut inner = MultiViewDataset::from_views(mats).map_err(to_py)?;
        if let Some(names) = variable_names {
            let ids = (0..inner.n_views()).map(|m| inner.sample_ids(m).to_vec()).collect();
            inner = MultiViewDataset::new(inner.views().to_vec(), names, ids, None).map_err(to_py)?;
        }
        Ok(Dataset { inner })
    }

    /// Loads one delimited file per view, optionally residualizing every
    /// view on a covariate file matched by sample id.
    #[staticmethod]
    #[pyo3(signature = (paths, covariates=None, group_column=None))]
    fn load(
        paths: Vec<PathBuf>,
        covariates: Option<PathBuf>,
        group_column: Option<String>,
    ) -> PyResult<Self> {
        let opts = LoadOptions { delimiter: None, group_column };
        let mut views = paths
            .iter()
            .map(|p| io::load_matrix(p, &opts))
            .collect::<smvmf::Result<Vec<_>>>()
            .map_err(to_py)?;
        if let Some(c) = covariates {
            let cov = io::load_matrix(c, &LoadOptions::default()).map_err(to_py)?;
            views = views
                .iter()
                .map(|v| io::residualize_named(v, &cov))
                .collect::<smvmf::Result<Vec<_>>>()
                .map_err(to_py)?;
        }
        Ok(Dataset { inner: io::assemble_dataset(views).map_err(to_py)? })
    }

    #[getter]
    fn n_views(&self) -> usize {
        self.inner.n_views()
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    #[getter]
    fn variable_names(&self) -> Vec<String> {
        self.inner.variable_names().to_vec()
    }

    fn n_samples(&self, m: usize) -> PyResult<usize> {
        Ok(self.inner.view(m).map_err(to_py)?.nrows())
    }

    fn view(&self, m: usize) -> PyResult<Vec<Vec<f64>>> {
        Ok(nested(self.inner.view(m).map_err(to_py)?))
    }

    fn __repr__(&self) -> String {
        let ns: Vec<String> = (0..self.inner.n_views())
            .map(|m| self.inner.n_samples(m).to_string())
            .collect();
        format!("Dataset(views={}, n=[{}], p={})", self.inner.n_views(), ns.join(", "), self.inner.n_vars())
    }
}

/// A fitted model with its convergence record.
#[pyclass(module = "smvmf_py", frozen)]
struct Model {
    inner: FactorModel,
    #[pyo3(get)]
    objective_trace: Vec<f64>,
    #[pyo3(get)]
    converged: bool,
    #[pyo3(get)]
    iterations: usize,
}

#[pymethods]
impl Model {
    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn r(&self) -> usize {
        self.inner.r()
    }

    /// Shared loadings, p x d.
    #[getter]
    fn v_star(&self) -> Vec<Vec<f64>> {
        nested(self.inner.v_star())
    }

    fn v(&self, m: usize) -> PyResult<Vec<Vec<f64>>> {
        self.check(m)?;
        Ok(nested(self.inner.v(m)))
    }

    fn u(&self, m: usize) -> PyResult<Vec<Vec<f64>>> {
        self.check(m)?;
        Ok(nested(self.inner.u(m)))
    }

    fn w(&self, m: usize) -> PyResult<Vec<Vec<f64>>> {
        self.check(m)?;
        Ok(nested(self.inner.w(m)))
    }

    /// Largest orthogonality-constraint residual over all views.
    fn constraint_residual(&self) -> f64 {
        self.inner.check_constraints(0.0).max_residual()
    }

    /// Per-view percentages of variance explained and the underlying sums.
    fn variance_report<'py>(&self, py: Python<'py>, dataset: &Dataset) -> PyResult<Bound<'py, PyDict>> {
        let rep = self.inner.variance_report(&dataset.inner).map_err(to_py)?;
        let m = rep.pct_shared.len();
        let out = PyDict::new(py);
        out.set_item("sigma_shared", rep.sigma_star)?;
        out.set_item("sigma_specific", rep.sigma_m.clone())?;
        out.set_item("sample_variance", rep.sample_variance_per_view.clone())?;
        out.set_item("pct_shared", rep.pct_shared.clone())?;
        out.set_item("pct_specific", rep.pct_specific.clone())?;
        out.set_item("pct_total", (0..m).map(|k| rep.pct_total(k)).collect::<Vec<_>>())?;
        out.set_item("pct_residual", (0..m).map(|k| rep.pct_residual(k)).collect::<Vec<_>>())?;
        Ok(out)
    }
}

impl Model {
    fn check(&self, m: usize) -> PyResult<()> {
        if m >= self.inner.n_views() {
            return Err(PyIndexError::new_err(format!("view {m} out of range")));
        }
        Ok(())
    }
}

/// Fits the model. Give `lam` (and optionally `lam_view`) for fixed
/// penalties or `count` for a fixed number of nonzero loadings per column;
/// with neither, no shrinkage is applied.
#[pyfunction]
#[pyo3(signature = (dataset, d, r, lam=None, lam_view=None, count=None, tol=1e-6, max_iters=500))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    dataset: &Dataset,
    d: usize,
    r: usize,
    lam: Option<f64>,
    lam_view: Option<f64>,
    count: Option<usize>,
    tol: f64,
    max_iters: usize,
) -> PyResult<Model> {
    let m = dataset.inner.n_views();
    let reg = match (lam, count) {
        (Some(_), Some(_)) => return Err(PyValueError::new_err("give either lam or count, not both")),
        (None, Some(k)) => {
            if lam_view.is_some() {
                return Err(PyValueError::new_err("lam_view requires lam"));
            }
            RegularizationSpec::fixed_count(k, d, r, m)
        }
        (Some(l), None) => RegularizationSpec::parsimonious(l, lam_view.unwrap_or(l), d, r, m),
        (None, None) => RegularizationSpec::none(d, r, m),
    };
    let cfg = FitConfig { rel_tol: tol, max_outer_iters: max_iters, ..FitConfig::new(d, r, reg) };
    let res = py.detach(|| estimation::fit(&dataset.inner, &cfg)).map_err(to_py)?;
    Ok(Model {
        inner: res.model,
        objective_trace: res.objective_trace,
        converged: res.converged,
        iterations: res.iterations,
    })
}

/// Per-variable selection probabilities from stability selection.
#[pyclass(module = "smvmf_py")]
struct Profile {
    inner: SelectionProfile,
}

#[pymethods]
impl Profile {
    #[getter]
    fn variable_names(&self) -> Vec<String> {
        self.inner.variable_names.clone()
    }

    #[getter]
    fn view_labels(&self) -> Vec<String> {
        self.inner.view_labels.clone()
    }

    #[setter]
    fn set_view_labels(&mut self, labels: Vec<String>) -> PyResult<()> {
        if labels.len() != self.inner.n_views() {
            return Err(PyValueError::new_err("one label per view is required"));
        }
        self.inner.view_labels = labels;
        Ok(())
    }

    #[getter]
    fn shared_prob(&self) -> Vec<f64> {
        self.inner.shared_prob.clone()
    }

    #[getter]
    fn view_prob(&self) -> Vec<Vec<f64>> {
        self.inner.view_prob.clone()
    }

    #[getter]
    fn n_runs(&self) -> usize {
        self.inner.n_runs
    }

    /// Labels each variable as shared-exclusive, `<view>-exclusive`, mixed or none.
    #[pyo3(signature = (hi=0.5, lo=0.005))]
    fn classify(&self, hi: f64, lo: f64) -> PyResult<Vec<String>> {
        let labels = stability::classify_exclusive(&self.inner, hi, lo).map_err(to_py)?;
        Ok(labels.iter().map(|l| l.describe(&self.inner.view_labels)).collect())
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        io::write_profile(path, &self.inner).map_err(to_py)
    }

    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        Ok(Profile { inner: io::read_profile(path).map_err(to_py)? })
    }

    /// Writes `spow.csv` and `spow.svg` into `directory`; returns the
    /// variable order used.
    #[pyo3(signature = (directory, top_n=None))]
    fn export_spow(&self, directory: PathBuf, top_n: Option<usize>) -> PyResult<Vec<String>> {
        let e = spow::export_spow(&self.inner, directory, "spow", top_n).map_err(to_py)?;
        Ok(e.variables)
    }
}

/// Stability selection over `runs` half-samples.
#[pyfunction]
#[pyo3(signature = (dataset, d, r, count, runs=1000, seed=0, paired=false, group_exclusive=false))]
#[allow(clippy::too_many_arguments)]
fn stability_selection(
    py: Python<'_>,
    dataset: &Dataset,
    d: usize,
    r: usize,
    count: usize,
    runs: usize,
    seed: u64,
    paired: bool,
    group_exclusive: bool,
) -> PyResult<Profile> {
    let cfg = StabilityConfig {
        n_runs: runs,
        seed,
        paired_sampling: paired,
        group_exclusive,
        ..StabilityConfig::new(d, r, count)
    };
    let inner = py.detach(|| stability::run_stability(&dataset.inner, &cfg)).map_err(to_py)?;
    Ok(Profile { inner })
}

fn heatmap_dict<'py>(py: Python<'py>, h: &Heatmap) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("rows", h.row_labels.clone())?;
    d.set_item("values", h.values.clone())?;
    Ok(d)
}

/// Runs the simulation study and returns `{method: {"rows", "values"}}`
/// selection-probability heatmaps.
#[pyfunction]
#[pyo3(signature = (setting, experiments=100, methods=None, seed=0))]
fn simulate<'py>(
    py: Python<'py>,
    setting: u8,
    experiments: usize,
    methods: Option<Vec<String>>,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let methods = match methods {
        Some(list) => list
            .iter()
            .map(|s| s.parse::<Method>())
            .collect::<smvmf::Result<Vec<_>>>()
            .map_err(to_py)?,
        None => vec![Method::Smvmf, Method::Levene, Method::Pca, Method::StackedPca],
    };
    let spec = SimulationSpec {
        n_experiments: experiments,
        seed,
        ..SimulationSpec::setting(setting).map_err(to_py)?
    };
    let cfg = MethodConfig::default();
    let res = py
        .detach(|| simulation::run_experiments(&spec, &methods, &cfg))
        .map_err(to_py)?;
    let out = PyDict::new(py);
    for (name, h) in [
        ("smvmf_shared", &res.smvmf_shared),
        ("smvmf_specific", &res.smvmf_specific),
        ("levene", &res.levene),
        ("pca", &res.pca),
        ("stacked-pca", &res.stacked_pca),
    ] {
        if let Some(h) = h {
            out.set_item(name, heatmap_dict(py, h)?)?;
        }
    }
    out.set_item("n_completed", res.n_completed)?;
    Ok(out)
}

#[pyfunction]
fn soft_threshold(y: Vec<f64>, lam: f64) -> PyResult<Vec<f64>> {
    estimation::soft_threshold(&y, lam).map_err(to_py)
}

/// Levene's test (mean-centered); returns `(statistic, p_value)`.
#[pyfunction]
fn levene(groups: Vec<Vec<f64>>) -> PyResult<(f64, f64)> {
    let r = baselines::levene_test(&groups).map_err(to_py)?;
    Ok((r.statistic, r.p_value))
}

/// One-sided hypergeometric enrichment p-value of `reference` within `selected`.
#[pyfunction]
fn fisher(selected: HashSet<String>, reference: HashSet<String>, universe: usize) -> PyResult<f64> {
    baselines::fisher_enrichment(&selected, &reference, universe).map_err(to_py)
}

#[pymodule]
fn smvmf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Model>()?;
    m.add_class::<Profile>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(stability_selection, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(soft_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(levene, m)?)?;
    m.add_function(wrap_pyfunction!(fisher, m)?)?;
    Ok(())
}
