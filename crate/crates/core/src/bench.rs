//! Seeded Monte Carlo sweeps comparing the localizers.
//!
//! Every trial draws its own deployment and anchor set from a seed derived
//! from `(base_seed, range, anchors, round, attempt)`, so a [`Report`] does
//! not depend on how trials are scheduled across threads.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mds::{mds_map, Algorithm, LocalizationResult};
use crate::netgraph::{build_graph, DistanceMode};
use crate::sdp::{sdp_localize, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::topology::{self, Deployment, GridNoise, TopologyKind};

/// Deployments tried per trial before giving up on a disconnected setup.
pub const MAX_ATTEMPTS: usize = 100;

/// Radio ranges used for every figure, in arena units.
pub const PAPER_RANGES: [f64; 4] = [0.15, 0.18, 0.20, 0.25];
pub const PAPER_ANCHORS: [usize; 4] = [4, 5, 6, 10];

/// Mean localization error over non-anchor nodes, in units of `radio_range`.
pub fn estimation_error(result: &LocalizationResult, truth: &Deployment, radio_range: f64) -> Result<f64> {
    if !(radio_range > 0.0) {
        return Err(Error::InvalidArgument(format!("radio range must be > 0, got {radio_range}")));
    }
    if result.estimated.len() != truth.n() {
        return Err(Error::InvalidArgument(format!(
            "result has {} positions, deployment has {} nodes",
            result.estimated.len(),
            truth.n()
        )));
    }
    let (sum, count) = result
        .estimated
        .iter()
        .zip(truth.positions())
        .enumerate()
        .filter(|&(i, _)| !truth.is_anchor(i))
        .fold((0.0, 0usize), |(s, c), (_, (e, t))| (s + e.dist(*t), c + 1));
    if count == 0 {
        return Err(Error::InvalidArgument("deployment has no non-anchor nodes".into()));
    }
    Ok(sum / count as f64 / radio_range)
}

/// Sweep parameters. Deserializes from JSON with every field optional;
/// omitted fields take the defaults of [`ExperimentConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// `random`, `square_grid` or `hex_grid`.
    pub topology: String,
    pub n: usize,
    /// Arena side length.
    pub r: f64,
    pub radio_ranges: Vec<f64>,
    pub anchor_counts: Vec<usize>,
    pub rounds: usize,
    pub base_seed: u64,
    /// Any of `mds_map`, `sdp`.
    pub algorithms: Vec<String>,
    /// Grid placement error std; `None` means 0.1 × lattice spacing.
    pub noise_std: Option<f64>,
    /// Hexagonal lattice shape; defaults to a square `√n × √n` layout.
    pub hex_rows: Option<usize>,
    pub hex_cols: Option<usize>,
    /// Edge lengths given to MDS-MAP: `true_range` or `hop_count`.
    pub mds_mode: String,
    pub sdp_tol: f64,
    pub sdp_max_iter: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            topology: TopologyKind::Random.as_str().into(),
            n: 64,
            r: 0.5,
            radio_ranges: PAPER_RANGES.to_vec(),
            anchor_counts: PAPER_ANCHORS.to_vec(),
            rounds: 20,
            base_seed: 0,
            algorithms: vec![Algorithm::MdsMap.as_str().into(), Algorithm::Sdp.as_str().into()],
            noise_std: None,
            hex_rows: None,
            hex_cols: None,
            mds_mode: DistanceMode::TrueRange.as_str().into(),
            sdp_tol: DEFAULT_TOL,
            sdp_max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// A validated [`ExperimentConfig`].
#[derive(Debug, Clone)]
struct Plan {
    kind: TopologyKind,
    grid: (usize, usize),
    algorithms: Vec<Algorithm>,
    mds_mode: DistanceMode,
}

fn exact_sqrt(n: usize) -> Option<usize> {
    let s = (n as f64).sqrt().round() as usize;
    (s * s == n).then_some(s)
}

impl ExperimentConfig {
    pub fn for_topology(kind: TopologyKind) -> Self {
        Self {
            topology: kind.as_str().into(),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Every violated field with a reason; empty when the config is usable.
    pub fn violations(&self) -> Vec<String> {
        self.plan().err().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        self.plan()
            .map(|_| ())
            .map_err(|v| Error::InvalidArgument(v.join("; ")))
    }

    fn plan(&self) -> std::result::Result<Plan, Vec<String>> {
        let mut bad = Vec::new();
        let kind = self.topology.parse::<TopologyKind>();
        if kind.is_err() {
            bad.push(format!("topology: unknown kind `{}`", self.topology));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            bad.push(format!("r: must be > 0, got {}", self.r));
        }
        if self.radio_ranges.is_empty() || self.radio_ranges.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            bad.push("radio_ranges: need at least one range, all > 0".into());
        }
        if self.anchor_counts.is_empty() || self.anchor_counts.iter().any(|&m| m < 3) {
            bad.push("anchor_counts: need at least one count, all >= 3".into());
        }
        if self.anchor_counts.iter().any(|&m| m >= self.n) {
            bad.push(format!("anchor_counts: every count must be below n = {}", self.n));
        }
        if self.rounds < 1 {
            bad.push("rounds: must be >= 1".into());
        }
        let mut algorithms = Vec::new();
        for a in &self.algorithms {
            match a.parse::<Algorithm>() {
                Ok(a) if !algorithms.contains(&a) => algorithms.push(a),
                Ok(_) => bad.push(format!("algorithms: `{a}` listed twice")),
                Err(_) => bad.push(format!("algorithms: unknown `{a}`")),
            }
        }
        if algorithms.is_empty() {
            bad.push("algorithms: need at least one of mds_map, sdp".into());
        }
        algorithms.sort();
        if let Some(s) = self.noise_std {
            if GridNoise::new(s).is_err() {
                bad.push(format!("noise_std: must be finite and >= 0, got {s}"));
            }
        }
        let mds_mode = self.mds_mode.parse::<DistanceMode>().unwrap_or_else(|_| {
            bad.push(format!("mds_mode: unknown `{}`", self.mds_mode));
            DistanceMode::TrueRange
        });
        if !(self.sdp_tol > 0.0) {
            bad.push("sdp_tol: must be > 0".into());
        }
        if self.sdp_max_iter < 1 {
            bad.push("sdp_max_iter: must be >= 1".into());
        }
        let mut grid = (0, 0);
        match kind {
            Ok(TopologyKind::SquareGrid) => match exact_sqrt(self.n) {
                Some(s) if s > 0 => grid = (s, s),
                _ => bad.push(format!("n: square grid needs a perfect square, got {}", self.n)),
            },
            Ok(TopologyKind::HexGrid) => {
                let default = exact_sqrt(self.n);
                let rows = self.hex_rows.or(default);
                let cols = self.hex_cols.or(default);
                match (rows, cols) {
                    (Some(r), Some(c)) if r > 0 && c > 0 && r * c == self.n => grid = (r, c),
                    _ => bad.push(format!("hex_rows/hex_cols: must be >= 1 with rows × cols = n = {}", self.n)),
                }
            }
            _ => {}
        }
        if bad.is_empty() {
            Ok(Plan {
                kind: kind.expect("checked"),
                grid,
                algorithms,
                mds_mode,
            })
        } else {
            Err(bad)
        }
    }
}

/// Outcome of one algorithm in one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgorithmOutcome {
    /// Mean non-anchor error in units of the radio range.
    pub error: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub round: usize,
    pub connectivity: f64,
    /// Deployments discarded because their graph was disconnected.
    pub regenerated: usize,
    pub outcomes: BTreeMap<Algorithm, AlgorithmOutcome>,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for one deployment attempt of one trial.
pub fn trial_seed(base_seed: u64, range: f64, anchors: usize, round: usize, attempt: usize) -> u64 {
    [range.to_bits(), anchors as u64, round as u64, attempt as u64]
        .into_iter()
        .fold(splitmix(base_seed), |h, v| splitmix(h ^ v))
}

fn deploy(config: &ExperimentConfig, plan: &Plan, seed: u64) -> Result<Deployment> {
    let noise = |spacing: f64| match config.noise_std {
        Some(s) => GridNoise::new(s),
        None => Ok(GridNoise::default_for_spacing(spacing)),
    };
    match plan.kind {
        TopologyKind::Random => topology::gen_random(config.n, config.r, seed),
        TopologyKind::SquareGrid => {
            let side = plan.grid.0;
            topology::gen_square_grid(side, config.r, noise(config.r / side as f64)?, seed)
        }
        TopologyKind::HexGrid => {
            let (rows, cols) = plan.grid;
            let spacing = topology::hex_spacing(rows, cols, config.r);
            topology::gen_hex_grid(rows, cols, config.r, noise(spacing)?, seed)
        }
    }
}

/// Generates a connected deployment with `anchors` anchors and runs every
/// configured algorithm on the same graph.
pub fn run_trial(config: &ExperimentConfig, range: f64, anchors: usize, round: usize) -> Result<TrialResult> {
    let plan = config.plan().map_err(|v| Error::InvalidArgument(v.join("; ")))?;
    run_planned_trial(config, &plan, range, anchors, round)
}

fn run_planned_trial(
    config: &ExperimentConfig,
    plan: &Plan,
    range: f64,
    anchors: usize,
    round: usize,
) -> Result<TrialResult> {
    for attempt in 0..MAX_ATTEMPTS {
        let seed = trial_seed(config.base_seed, range, anchors, round, attempt);
        let dep = deploy(config, plan, seed)?;
        let dep = topology::select_anchors(&dep, anchors, splitmix(seed ^ 0xA5A5_A5A5))?;
        let graph = build_graph(&dep, range, DistanceMode::TrueRange)?;
        if !graph.is_connected() {
            continue;
        }
        let truth = dep.anchor_positions();
        let mut outcomes = BTreeMap::new();
        for &algo in &plan.algorithms {
            let result = match algo {
                Algorithm::MdsMap if plan.mds_mode == DistanceMode::TrueRange => mds_map(&graph, &truth)?,
                Algorithm::MdsMap => mds_map(&build_graph(&dep, range, plan.mds_mode)?, &truth)?,
                Algorithm::Sdp => sdp_localize(&graph, &truth, config.sdp_tol, config.sdp_max_iter)?,
            };
            outcomes.insert(
                algo,
                AlgorithmOutcome {
                    error: estimation_error(&result, &dep, range)?,
                    converged: result.converged(),
                },
            );
        }
        return Ok(TrialResult {
            round,
            connectivity: graph.avg_connectivity(),
            regenerated: attempt,
            outcomes,
        });
    }
    Err(Error::InfeasibleConfiguration {
        attempts: MAX_ATTEMPTS,
        range,
        anchors,
    })
}

/// Aggregate of one (range, anchors, algorithm) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub range: f64,
    pub anchors: usize,
    pub algorithm: Algorithm,
    pub mean_error: f64,
    /// Sample standard deviation over rounds; 0 for a single round.
    pub stddev: f64,
    pub mean_connectivity: f64,
    pub rounds: usize,
    pub regenerated: usize,
    pub nonconverged: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub config: ExperimentConfig,
    /// Ordered by range, then anchor count, then algorithm, following the
    /// order in the config.
    pub cells: Vec<Cell>,
}

pub const REPORT_HEADER: &str =
    "topology,range,anchors,algorithm,mean_error_over_R,stddev,mean_connectivity,rounds,regenerated,nonconverged";

impl Report {
    pub fn cell(&self, range: f64, anchors: usize, algorithm: Algorithm) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.range == range && c.anchors == anchors && c.algorithm == algorithm)
    }

    /// Mean error over all anchor counts at one range.
    pub fn mean_over_anchors(&self, range: f64, algorithm: Algorithm) -> Option<f64> {
        let errs: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.range == range && c.algorithm == algorithm)
            .map(|c| c.mean_error)
            .collect();
        (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                self.config.topology,
                c.range,
                c.anchors,
                c.algorithm,
                c.mean_error,
                c.stddev,
                c.mean_connectivity,
                c.rounds,
                c.regenerated,
                c.nonconverged
            );
        }
        out
    }

    /// Plot data with the axes of the comparison figures.
    pub fn to_figure_csv(&self) -> String {
        let mut out = String::from("connectivity,error_over_R,algorithm,anchors\n");
        for c in &self.cells {
            let _ = writeln!(out, "{},{},{},{}", c.mean_connectivity, c.mean_error, c.algorithm, c.anchors);
        }
        out
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs the full cross product of ranges × anchor counts × rounds on the
/// current rayon pool.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Report> {
    let plan = config.plan().map_err(|v| Error::InvalidArgument(v.join("; ")))?;
    let jobs: Vec<(f64, usize, usize)> = config
        .radio_ranges
        .iter()
        .flat_map(|&range| {
            config
                .anchor_counts
                .iter()
                .flat_map(move |&m| (0..config.rounds).map(move |round| (range, m, round)))
        })
        .collect();
    let trials: Vec<TrialResult> = jobs
        .par_iter()
        .map(|&(range, m, round)| run_planned_trial(config, &plan, range, m, round))
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (chunk, &(range, m, _)) in trials.chunks(config.rounds).zip(jobs.iter().step_by(config.rounds)) {
        let connectivity: Vec<f64> = chunk.iter().map(|t| t.connectivity).collect();
        let (mean_connectivity, _) = mean_std(&connectivity);
        let regenerated = chunk.iter().map(|t| t.regenerated).sum();
        for &algo in &plan.algorithms {
            let outcomes: Vec<AlgorithmOutcome> = chunk.iter().map(|t| t.outcomes[&algo]).collect();
            let errors: Vec<f64> = outcomes.iter().map(|o| o.error).collect();
            let (mean_error, stddev) = mean_std(&errors);
            cells.push(Cell {
                range,
                anchors: m,
                algorithm: algo,
                mean_error,
                stddev,
                mean_connectivity,
                rounds: chunk.len(),
                regenerated,
                nonconverged: outcomes.iter().filter(|o| !o.converged).count(),
            });
        }
    }
    Ok(Report {
        config: config.clone(),
        cells,
    })
}

/// [`run_sweep`] on a dedicated pool of `jobs` worker threads.
pub fn run_sweep_with_jobs(config: &ExperimentConfig, jobs: usize) -> Result<Report> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| run_sweep(config))
}

/// Mean degree over `seeds` independent draws of a topology at one range,
/// without the connectivity filter applied by the sweeps.
pub fn mean_connectivity(config: &ExperimentConfig, range: f64, seeds: u64) -> Result<f64> {
    let plan = config.plan().map_err(|v| Error::InvalidArgument(v.join("; ")))?;
    let mut total = 0.0;
    for s in 0..seeds {
        let dep = deploy(config, &plan, splitmix(config.base_seed ^ s))?;
        total += build_graph(&dep, range, DistanceMode::TrueRange)?.avg_connectivity();
    }
    Ok(total / seeds as f64)
}
