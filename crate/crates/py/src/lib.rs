//! Python bindings for `wsnloc`, importable as `wsnloc`.

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use wsnloc::bench::{self, ExperimentConfig};
use wsnloc::mds::Diagnostics;
use wsnloc::{netgraph, topology, Error, Point2};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::GraphDisconnected { .. } | Error::InfeasibleConfiguration { .. } => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn points(list: &[Point2]) -> Vec<(f64, f64)> {
    list.iter().map(|p| (p.x, p.y)).collect()
}

/// Node positions in a square arena, some of them anchors.
#[pyclass(frozen, name = "Deployment", module = "wsnloc")]
struct PyDeployment(wsnloc::Deployment);

#[pymethods]
impl PyDeployment {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        wsnloc::Deployment::from_json(text).map(Self).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn positions(&self) -> Vec<(f64, f64)> {
        points(self.0.positions())
    }

    #[getter]
    fn anchors(&self) -> Vec<usize> {
        self.0.anchors().to_vec()
    }

    #[getter]
    fn anchor_positions(&self) -> Vec<(f64, f64)> {
        points(&self.0.anchor_positions())
    }

    #[getter]
    fn side(&self) -> f64 {
        self.0.side()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind().as_str()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed()
    }

    fn __len__(&self) -> usize {
        self.0.n()
    }

    fn __repr__(&self) -> String {
        format!(
            "Deployment(n={}, kind='{}', anchors={}, seed={})",
            self.0.n(),
            self.0.kind().as_str(),
            self.0.anchors().len(),
            self.0.seed()
        )
    }
}

fn grid_noise(std: Option<f64>, spacing: f64) -> PyResult<topology::GridNoise> {
    match std {
        Some(s) => topology::GridNoise::new(s).map_err(to_py),
        None => Ok(topology::GridNoise::default_for_spacing(spacing)),
    }
}

#[pyfunction]
#[pyo3(signature = (n, r=0.5, seed=0))]
fn gen_random(n: usize, r: f64, seed: u64) -> PyResult<PyDeployment> {
    topology::gen_random(n, r, seed).map(PyDeployment).map_err(to_py)
}

/// `noise_std=None` uses 0.1 × the lattice spacing.
#[pyfunction]
#[pyo3(signature = (side_count, r=0.5, noise_std=None, seed=0))]
fn gen_square_grid(side_count: usize, r: f64, noise_std: Option<f64>, seed: u64) -> PyResult<PyDeployment> {
    let noise = grid_noise(noise_std, r / side_count.max(1) as f64)?;
    topology::gen_square_grid(side_count, r, noise, seed)
        .map(PyDeployment)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (rows, cols, r=0.5, noise_std=None, seed=0))]
fn gen_hex_grid(rows: usize, cols: usize, r: f64, noise_std: Option<f64>, seed: u64) -> PyResult<PyDeployment> {
    let noise = grid_noise(noise_std, topology::hex_spacing(rows.max(1), cols.max(1), r))?;
    topology::gen_hex_grid(rows, cols, r, noise, seed)
        .map(PyDeployment)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (deployment, m, seed=0))]
fn select_anchors(deployment: &PyDeployment, m: usize, seed: u64) -> PyResult<PyDeployment> {
    topology::select_anchors(&deployment.0, m, seed)
        .map(PyDeployment)
        .map_err(to_py)
}

/// Range-limited connectivity graph.
#[pyclass(frozen, name = "NetworkGraph", module = "wsnloc")]
struct PyNetworkGraph(wsnloc::NetworkGraph);

#[pymethods]
impl PyNetworkGraph {
    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn radio_range(&self) -> f64 {
        self.0.radio_range()
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.0.mode().as_str()
    }

    #[getter]
    fn anchors(&self) -> Vec<usize> {
        self.0.anchors().to_vec()
    }

    /// `(i, j, d)` with `i < j`.
    #[getter]
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.0.edges().iter().map(|e| (e.i, e.j, e.d)).collect()
    }

    fn avg_connectivity(&self) -> f64 {
        self.0.avg_connectivity()
    }

    fn is_connected(&self) -> bool {
        self.0.is_connected()
    }

    /// All-pairs shortest path lengths as a list of rows.
    fn shortest_paths(&self, py: Python<'_>) -> PyResult<Vec<Vec<f64>>> {
        let d = py.detach(|| self.0.shortest_paths()).map_err(to_py)?;
        Ok((0..d.n()).map(|i| d.row(i).to_vec()).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "NetworkGraph(n={}, edges={}, radio_range={}, mode='{}')",
            self.0.n(),
            self.0.edges().len(),
            self.0.radio_range(),
            self.0.mode().as_str()
        )
    }
}

/// `mode` is `"true_range"` or `"hop_count"`.
#[pyfunction]
#[pyo3(signature = (deployment, radio_range, mode="true_range"))]
fn build_graph(deployment: &PyDeployment, radio_range: f64, mode: &str) -> PyResult<PyNetworkGraph> {
    let mode: netgraph::DistanceMode = mode.parse().map_err(to_py)?;
    netgraph::build_graph(&deployment.0, radio_range, mode)
        .map(PyNetworkGraph)
        .map_err(to_py)
}

/// Estimated positions with solver diagnostics.
#[pyclass(frozen, name = "LocalizationResult", module = "wsnloc")]
struct PyLocalizationResult(wsnloc::LocalizationResult);

#[pymethods]
impl PyLocalizationResult {
    #[getter]
    fn algorithm(&self) -> &'static str {
        self.0.algorithm.as_str()
    }

    #[getter]
    fn positions(&self) -> Vec<(f64, f64)> {
        points(&self.0.estimated)
    }

    #[getter]
    fn converged(&self) -> bool {
        self.0.converged()
    }

    #[getter]
    fn diagnostics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        match &self.0.diagnostics {
            Diagnostics::Mds {
                eigenvalues,
                alignment_residual,
            } => {
                d.set_item("eigenvalues", eigenvalues.clone())?;
                d.set_item("alignment_residual", *alignment_residual)?;
            }
            Diagnostics::Sdp(s) => {
                d.set_item("converged", s.converged)?;
                d.set_item("iterations", s.iterations)?;
                d.set_item("constraint_residual", s.constraint_residual)?;
                d.set_item("psd_residual", s.psd_residual)?;
                d.set_item("relaxation_gap", s.relaxation_gap)?;
            }
        }
        Ok(d)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn __repr__(&self) -> String {
        format!(
            "LocalizationResult(algorithm='{}', n={}, converged={})",
            self.0.algorithm.as_str(),
            self.0.estimated.len(),
            if self.0.converged() { "True" } else { "False" }
        )
    }
}

fn anchor_points(list: Vec<(f64, f64)>) -> Vec<Point2> {
    list.into_iter().map(|(x, y)| Point2::new(x, y)).collect()
}

/// `anchor_truth` lists the anchor positions in the order of `graph.anchors`.
#[pyfunction]
fn mds_map(py: Python<'_>, graph: &PyNetworkGraph, anchor_truth: Vec<(f64, f64)>) -> PyResult<PyLocalizationResult> {
    let truth = anchor_points(anchor_truth);
    py.detach(|| wsnloc::mds::mds_map(&graph.0, &truth))
        .map(PyLocalizationResult)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (graph, anchor_truth, tol=wsnloc::sdp::DEFAULT_TOL, max_iter=wsnloc::sdp::DEFAULT_MAX_ITER))]
fn sdp_localize(
    py: Python<'_>,
    graph: &PyNetworkGraph,
    anchor_truth: Vec<(f64, f64)>,
    tol: f64,
    max_iter: usize,
) -> PyResult<PyLocalizationResult> {
    let truth = anchor_points(anchor_truth);
    py.detach(|| wsnloc::sdp::sdp_localize(&graph.0, &truth, tol, max_iter))
        .map(PyLocalizationResult)
        .map_err(to_py)
}

/// Mean non-anchor error in units of `radio_range`.
#[pyfunction]
fn estimation_error(result: &PyLocalizationResult, truth: &PyDeployment, radio_range: f64) -> PyResult<f64> {
    bench::estimation_error(&result.0, &truth.0, radio_range).map_err(to_py)
}

/// Classical MDS of a full distance matrix; returns `(coords, eigenvalues)`.
#[pyfunction]
#[pyo3(signature = (distances, dim=2))]
fn classical_mds(distances: Vec<Vec<f64>>, dim: usize) -> PyResult<(Vec<(f64, f64)>, Vec<f64>)> {
    let n = distances.len();
    if distances.iter().any(|row| row.len() != n) {
        return Err(PyValueError::new_err("distance matrix must be square"));
    }
    let d = netgraph::DistanceMatrix::from_fn(n, |i, j| distances[i][j]).map_err(to_py)?;
    let rel = wsnloc::mds::classical_mds(&d, dim).map_err(to_py)?;
    Ok((points(&rel.coords), rel.eigenvalues_all))
}

/// Aggregated sweep results.
#[pyclass(frozen, name = "Report", module = "wsnloc")]
struct PyReport(bench::Report);

#[pymethods]
impl PyReport {
    /// One dict per (range, anchors, algorithm) cell.
    #[getter]
    fn cells<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.0
            .cells
            .iter()
            .map(|c| {
                let d = PyDict::new(py);
                d.set_item("range", c.range)?;
                d.set_item("anchors", c.anchors)?;
                d.set_item("algorithm", c.algorithm.as_str())?;
                d.set_item("mean_error", c.mean_error)?;
                d.set_item("stddev", c.stddev)?;
                d.set_item("mean_connectivity", c.mean_connectivity)?;
                d.set_item("rounds", c.rounds)?;
                d.set_item("regenerated", c.regenerated)?;
                d.set_item("nonconverged", c.nonconverged)?;
                Ok(d)
            })
            .collect()
    }

    #[getter]
    fn config(&self) -> String {
        self.0.config.to_json()
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    fn to_figure_csv(&self) -> String {
        self.0.to_figure_csv()
    }
}

/// Runs a sweep described by an ExperimentConfig JSON string; `None` runs
/// the defaults.
#[pyfunction]
#[pyo3(signature = (config=None, jobs=1))]
fn run_sweep(py: Python<'_>, config: Option<&str>, jobs: usize) -> PyResult<PyReport> {
    let config = match config {
        Some(text) => ExperimentConfig::from_json(text).map_err(to_py)?,
        None => ExperimentConfig::default(),
    };
    py.detach(|| bench::run_sweep_with_jobs(&config, jobs))
        .map(PyReport)
        .map_err(to_py)
}

#[pymodule]
#[pyo3(name = "wsnloc")]
fn wsnloc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDeployment>()?;
    m.add_class::<PyNetworkGraph>()?;
    m.add_class::<PyLocalizationResult>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(gen_random, m)?)?;
    m.add_function(wrap_pyfunction!(gen_square_grid, m)?)?;
    m.add_function(wrap_pyfunction!(gen_hex_grid, m)?)?;
    m.add_function(wrap_pyfunction!(select_anchors, m)?)?;
    m.add_function(wrap_pyfunction!(build_graph, m)?)?;
    m.add_function(wrap_pyfunction!(mds_map, m)?)?;
    m.add_function(wrap_pyfunction!(sdp_localize, m)?)?;
    m.add_function(wrap_pyfunction!(estimation_error, m)?)?;
    m.add_function(wrap_pyfunction!(classical_mds, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    Ok(())
}
