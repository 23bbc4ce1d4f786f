use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wsnloc::bench::{estimation_error, run_sweep_with_jobs, ExperimentConfig};
use wsnloc::mds::mds_map;
use wsnloc::netgraph::build_graph;
use wsnloc::sdp::sdp_localize;
use wsnloc::topology::{self, gen_hex_grid, gen_random, gen_square_grid, select_anchors, GridNoise};
use wsnloc::{Algorithm, Deployment, DistanceMode, Error, TopologyKind};

/// Sensor network localization with MDS-MAP and an SDP relaxation.
#[derive(Debug, Parser)]
#[command(name = "wsnloc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a deployment and write it as JSON.
    Generate(GenerateArgs),
    /// Localize one deployment with one algorithm.
    Localize(LocalizeArgs),
    /// Run a seeded sweep and write the per-cell report as CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Topology {
    Random,
    SquareGrid,
    HexGrid,
}

impl From<Topology> for TopologyKind {
    fn from(t: Topology) -> Self {
        match t {
            Topology::Random => TopologyKind::Random,
            Topology::SquareGrid => TopologyKind::SquareGrid,
            Topology::HexGrid => TopologyKind::HexGrid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    MdsMap,
    Sdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Range,
    Hop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Figure {
    Fig2,
    Fig4,
    Fig6,
}

impl Figure {
    fn topology(self) -> TopologyKind {
        match self {
            Figure::Fig2 => TopologyKind::Random,
            Figure::Fig4 => TopologyKind::SquareGrid,
            Figure::Fig6 => TopologyKind::HexGrid,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig4 => "fig4",
            Figure::Fig6 => "fig6",
        }
    }
}

#[derive(Debug, clap::Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    topology: Topology,
    /// Node count for the random topology.
    #[arg(long, default_value_t = 64)]
    n: usize,
    /// Arena side length.
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    /// Nodes per side of the square grid.
    #[arg(long, default_value_t = 8)]
    side: usize,
    #[arg(long, default_value_t = 8)]
    rows: usize,
    #[arg(long, default_value_t = 8)]
    cols: usize,
    /// Per-axis placement error of grid nodes; defaults to 0.1 × spacing.
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also mark this many randomly chosen anchors.
    #[arg(long)]
    anchors: Option<usize>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, clap::Args)]
struct LocalizeArgs {
    /// Deployment JSON written by `generate`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Radio range in arena units.
    #[arg(long)]
    range: f64,
    /// Draw this many anchors with `--seed` instead of using the file's.
    #[arg(long)]
    anchors: Option<usize>,
    #[arg(long, value_enum)]
    algo: Algo,
    /// Edge lengths: measured distances or hop counts.
    #[arg(long, value_enum, default_value = "range")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = wsnloc::sdp::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = wsnloc::sdp::DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Result JSON path; printed to standard output when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct SweepArgs {
    /// ExperimentConfig JSON; fields left out take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset for one of the comparison figures; also writes plot data.
    #[arg(long, value_enum)]
    figure: Option<Figure>,
    /// Plot data path; defaults to `<output stem>_<figure>.csv`.
    #[arg(long)]
    figure_out: Option<PathBuf>,
    #[arg(long, value_enum)]
    topology: Option<Topology>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rounds: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(short, long)]
    output: PathBuf,
}

/// Exit status with the message printed to standard error.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::GraphDisconnected { .. } | Error::InfeasibleConfiguration { .. } | Error::DegenerateAnchors => {
                Failure::Runtime(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn noise(std: Option<f64>, spacing: f64) -> Result<GridNoise, Failure> {
    match std {
        Some(s) => Ok(GridNoise::new(s)?),
        None => Ok(GridNoise::default_for_spacing(spacing)),
    }
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    let dep = match args.topology {
        Topology::Random => gen_random(args.n, args.r, args.seed)?,
        Topology::SquareGrid => {
            let spacing = args.r / args.side as f64;
            gen_square_grid(args.side, args.r, noise(args.noise_std, spacing)?, args.seed)?
        }
        Topology::HexGrid => {
            let spacing = topology::hex_spacing(args.rows, args.cols, args.r);
            gen_hex_grid(args.rows, args.cols, args.r, noise(args.noise_std, spacing)?, args.seed)?
        }
    };
    let dep = match args.anchors {
        Some(m) => select_anchors(&dep, m, args.seed)?,
        None => dep,
    };
    write(&args.output, &(dep.to_json() + "\n"))?;
    println!("n={} kind={} seed={}", dep.n(), dep.kind().as_str(), dep.seed());
    Ok(())
}

fn localize(args: LocalizeArgs) -> Result<(), Failure> {
    let dep = Deployment::from_json(&read(&args.input)?)?;
    let dep = match args.anchors {
        Some(m) => select_anchors(&dep, m, args.seed)?,
        None => dep,
    };
    if dep.anchors().len() < 3 {
        return Err(Failure::Usage(format!("need at least 3 anchors, have {}", dep.anchors().len())));
    }
    let mode = match args.mode {
        Mode::Range => DistanceMode::TrueRange,
        Mode::Hop => DistanceMode::HopCount,
    };
    if args.algo == Algo::Sdp && mode == DistanceMode::HopCount {
        return Err(Failure::Usage("the SDP needs measured distances; use --mode range".into()));
    }
    let graph = build_graph(&dep, args.range, mode)?;
    if !graph.is_connected() {
        return Err(Failure::Runtime(format!(
            "graph at range {} is disconnected; increase --range",
            args.range
        )));
    }
    let truth = dep.anchor_positions();
    let result = match args.algo {
        Algo::MdsMap => mds_map(&graph, &truth)?,
        Algo::Sdp => sdp_localize(&graph, &truth, args.tol, args.max_iter)?,
    };
    if !result.converged() {
        eprintln!("warning: SDP solver stopped at the iteration limit before reaching tol {}", args.tol);
    }
    let json = result.to_json() + "\n";
    match &args.output {
        Some(path) => write(path, &json)?,
        None => print!("{json}"),
    }
    let algorithm = match args.algo {
        Algo::MdsMap => Algorithm::MdsMap,
        Algo::Sdp => Algorithm::Sdp,
    };
    println!(
        "algorithm={} error_over_R={:.6} connectivity={:.4} converged={}",
        algorithm.as_str(),
        estimation_error(&result, &dep, args.range)?,
        graph.avg_connectivity(),
        result.converged()
    );
    Ok(())
}

fn figure_path(output: &Path, figure: Figure) -> PathBuf {
    let stem = output.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    output.with_file_name(format!("{stem}_{}.csv", figure.name()))
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut config = match (&args.config, args.figure) {
        (Some(path), _) => ExperimentConfig::from_json(&read(path)?)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?,
        (None, Some(fig)) => ExperimentConfig::for_topology(fig.topology()),
        (None, None) => return Err(Failure::Usage("give --config or --figure".into())),
    };
    if let Some(fig) = args.figure {
        if args.topology.is_some_and(|t| TopologyKind::from(t) != fig.topology()) {
            return Err(Failure::Usage(format!("--topology conflicts with --figure {}", fig.name())));
        }
        config.topology = fig.topology().as_str().into();
    }
    if let Some(t) = args.topology {
        config.topology = TopologyKind::from(t).as_str().into();
    }
    if let Some(s) = args.seed {
        config.base_seed = s;
    }
    if let Some(r) = args.rounds {
        config.rounds = r;
    }
    let problems = config.violations();
    if !problems.is_empty() {
        return Err(Failure::Usage(format!("invalid config:\n  {}", problems.join("\n  "))));
    }
    let report = run_sweep_with_jobs(&config, args.jobs)?;
    write(&args.output, &report.to_csv())?;
    println!("wrote {} rows to {}", report.cells.len(), args.output.display());
    if let Some(fig) = args.figure {
        let path = args.figure_out.unwrap_or_else(|| figure_path(&args.output, fig));
        write(&path, &report.to_figure_csv())?;
        println!("wrote {} plot data to {}", fig.name(), path.display());
    }
    let nonconverged: usize = report.cells.iter().map(|c| c.nonconverged).sum();
    if nonconverged > 0 {
        eprintln!("warning: {nonconverged} SDP solves stopped at the iteration limit");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Localize(a) => localize(a),
        Command::Sweep(a) => sweep(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Runtime(msg)) = &f;
            eprintln!("wsnloc: {msg}");
            ExitCode::from(f.code())
        }
    }
}
