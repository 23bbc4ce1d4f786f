//! Acceptance run: one PASS/FAIL line per criterion, details indented.
//! Runs the three default 20-round sweeps, so it takes several minutes.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wsnloc::bench::{mean_connectivity, run_sweep_with_jobs, ExperimentConfig, Report, PAPER_ANCHORS, PAPER_RANGES};
use wsnloc::linalg::min_eigenvalue;
use wsnloc::mds::{classical_mds, double_center, fit_anchors, RelativeMap};
use wsnloc::netgraph::{build_graph, DistanceMatrix, DistanceMode, NetworkGraph};
use wsnloc::sdp::{build_problem, extract_positions, solve_feasibility, DEFAULT_MAX_ITER, DEFAULT_TOL};
use wsnloc::topology::{gen_random, select_anchors, Deployment, Point2, TopologyKind};
use wsnloc::Algorithm;

const RANDOM_DEGREE: [f64; 4] = [13.31, 18.21, 21.55, 29.75];
const SQUARE_DEGREE: [f64; 4] = [12.97, 18.07, 21.19, 30.14];
const HEX_DEGREE: [f64; 4] = [14.94, 20.35, 24.075, 33.45];

struct Verdicts {
    failed: usize,
}

impl Verdicts {
    fn record(&mut self, id: &str, title: &str, pass: bool, details: &[String]) {
        println!("{} [{id}] {title}", if pass { "PASS" } else { "FAIL" });
        for d in details {
            println!("      {d}");
        }
        if !pass {
            self.failed += 1;
        }
    }
}

fn connectivity_check(kind: TopologyKind, targets: [f64; 4], band: f64) -> (bool, Vec<String>) {
    let config = ExperimentConfig::for_topology(kind);
    let mut ok = true;
    let mut details = Vec::new();
    for (&range, &target) in PAPER_RANGES.iter().zip(&targets) {
        let mean = mean_connectivity(&config, range, 100).expect("valid config");
        let pass = (mean - target).abs() <= band;
        ok &= pass;
        details.push(format!(
            "{} R={range}: {mean:.3} (target {target} ± {band}) {}",
            kind.as_str(),
            if pass { "ok" } else { "out of band" }
        ));
    }
    (ok, details)
}

fn sweep(kind: TopologyKind) -> Report {
    let t = Instant::now();
    let report = run_sweep_with_jobs(&ExperimentConfig::for_topology(kind), 1).expect("sweep runs");
    println!("      ({} sweep finished in {:.0?})", kind.as_str(), t.elapsed());
    report
}

fn cell_error(report: &Report, range: f64, anchors: usize, algo: Algorithm) -> f64 {
    report.cell(range, anchors, algo).expect("cell present").mean_error
}

fn floyd_warshall(g: &NetworkGraph) -> Vec<Vec<f64>> {
    let n = g.n();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in g.edges() {
        d[e.i][e.j] = e.d;
        d[e.j][e.i] = e.d;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

fn criterion_6() -> (bool, Vec<String>) {
    let mut details = Vec::new();

    // (a) complete exact distances of 10 random points.
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let pts: Vec<Point2> = (0..10)
        .map(|_| Point2::new(rng.random_range(0.0..0.5), rng.random_range(0.0..0.5)))
        .collect();
    let dist = DistanceMatrix::from_fn(10, |i, j| pts[i].dist(pts[j])).unwrap();
    let rel = classical_mds(&dist, 2).unwrap();
    let anchors = [0, 1, 2];
    let t = fit_anchors(&rel, &anchors, &[pts[0], pts[1], pts[2]]).unwrap();
    let mds_err = rel.coords.iter().zip(&pts).map(|(&p, q)| t.apply(p).dist(*q)).fold(0.0, f64::max);
    let a = mds_err < 1e-8;
    details.push(format!("(a) MDS exact recovery max error {mds_err:.2e} (< 1e-8)"));

    // (b) trilateration against the circle-intersection closed form.
    let truth = Point2::new(0.15, 0.2);
    let dep = Deployment::from_parts(
        vec![Point2::new(0.0, 0.0), Point2::new(0.5, 0.0), Point2::new(0.0, 0.5), truth],
        vec![0, 1, 2],
        0.5,
        TopologyKind::Random,
        0,
    )
    .unwrap();
    let d2: Vec<f64> = (0..3).map(|k| dep.positions()[k].dist_sq(truth)).collect();
    let oracle = Point2::new(d2[0] - d2[1] + 0.25, d2[0] - d2[2] + 0.25);
    let g = build_graph(&dep, 1.0, DistanceMode::TrueRange).unwrap();
    let p = build_problem(&g, &dep.anchor_positions()).unwrap();
    let s = solve_feasibility(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
    let est = extract_positions(&s, &p).estimated[3];
    let tri_err = est.dist(oracle);
    let b = tri_err < 1e-6;
    details.push(format!("(b) SDP trilateration error {tri_err:.2e} (< 1e-6)"));

    // (c) Dijkstra against Floyd-Warshall on integer-weighted graphs.
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = 20;
        let mut present = vec![vec![false; n]; n];
        let mut edges = Vec::new();
        for j in 1..n {
            let i = rng.random_range(0..j);
            present[i][j] = true;
            edges.push((i, j, rng.random_range(1..=20) as f64));
        }
        for _ in 0..2 * n {
            let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
            let (i, j) = (u.min(v), u.max(v));
            if i != j && !present[i][j] {
                present[i][j] = true;
                edges.push((i, j, rng.random_range(1..=20) as f64));
            }
        }
        let g = NetworkGraph::from_edges(n, 1.0, edges, vec![], DistanceMode::TrueRange).unwrap();
        let fast = g.shortest_paths().unwrap();
        let slow = floyd_warshall(&g);
        mismatches += (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| fast.get(i, j) != slow[i][j])
            .count();
    }
    let c = mismatches == 0;
    details.push(format!("(c) shortest paths vs Floyd-Warshall: {mismatches} mismatching entries over 100 graphs"));
    (a && b && c, details)
}

fn criterion_7() -> (bool, Vec<String>) {
    let mut details = Vec::new();

    let mut worst_row = 0.0f64;
    for seed in 0..10 {
        let d = gen_random(64, 0.5, seed).unwrap();
        let g = build_graph(&d, 0.2, DistanceMode::TrueRange).unwrap();
        let Ok(sp) = g.shortest_paths() else { continue };
        let b = double_center(&sp.squared());
        let norm = b.norm();
        for i in 0..b.nrows() {
            worst_row = worst_row.max(b.row(i).sum().abs() / norm);
        }
    }
    let centering = worst_row <= 1e-9;
    details.push(format!("double-centering max |row sum| / ‖B‖ = {worst_row:.2e} (≤ 1e-9)"));

    let rel_pts = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.3, 0.8), Point2::new(-0.4, 0.5)];
    let truth: Vec<Point2> = rel_pts.iter().map(|p| Point2::new(-p.y + 1.0, p.x + 2.0)).collect();
    let rel = RelativeMap {
        coords: rel_pts.to_vec(),
        eigenvalues_used: vec![],
        eigenvalues_all: vec![],
    };
    let t = fit_anchors(&rel, &[0, 1, 2, 3], &truth).unwrap();
    let rot = [[0.0, -1.0], [1.0, 0.0]];
    let q_err = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (t.orthogonal[i][j] - rot[i][j]).abs())
        .fold(0.0, f64::max);
    let shift_err = (t.translation.x - 1.0).abs().max((t.translation.y - 2.0).abs());
    let procrustes = q_err <= 1e-9 && shift_err <= 1e-9 && (t.scale - 1.0).abs() <= 1e-9;
    details.push(format!("Procrustes round trip: Q error {q_err:.1e}, shift error {shift_err:.1e}"));

    let mut sym = true;
    let (mut min_lambda, mut min_gap, mut worst_res) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    let mut all_converged = true;
    for seed in 0..6 {
        let dep = select_anchors(&gen_random(64, 0.5, seed).unwrap(), 5, seed).unwrap();
        let g = build_graph(&dep, 0.2, DistanceMode::TrueRange).unwrap();
        let p = build_problem(&g, &dep.anchor_positions()).unwrap();
        let s = solve_feasibility(&p, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        sym &= s.z == s.z.transpose();
        min_lambda = min_lambda.min(min_eigenvalue(&s.z));
        min_gap = min_gap.min(s.relaxation_gap);
        worst_res = worst_res.max(s.constraint_residual);
        all_converged &= s.converged;
    }
    let z_ok = sym && min_lambda >= -DEFAULT_TOL && (!all_converged || worst_res <= DEFAULT_TOL);
    details.push(format!(
        "Z symmetric {sym}, min λ(Z) {min_lambda:.2e} (≥ -{DEFAULT_TOL:e}), max residual {worst_res:.2e}, converged {all_converged}"
    ));
    let gap_ok = min_gap >= -1e-8;
    details.push(format!("min relaxation gap {min_gap:.2e} (≥ -1e-8)"));

    let config = ExperimentConfig {
        radio_ranges: vec![0.2, 0.25],
        anchor_counts: vec![4, 6],
        rounds: 3,
        base_seed: 77,
        ..ExperimentConfig::default()
    };
    let serial = run_sweep_with_jobs(&config, 1).unwrap();
    let parallel = run_sweep_with_jobs(&config, 4).unwrap();
    let deterministic = serial == parallel && serial.to_csv() == parallel.to_csv();
    details.push(format!("sweep with 1 and 4 workers identical: {deterministic}"));

    (centering && procrustes && z_ok && gap_ok && deterministic, details)
}

fn main() -> ExitCode {
    let mut v = Verdicts { failed: 0 };
    let started = Instant::now();

    let (ok, d) = connectivity_check(TopologyKind::Random, RANDOM_DEGREE, 1.5);
    v.record("1", "connectivity, random topology, 100 seeds", ok, &d);

    let (ok_sq, mut d) = connectivity_check(TopologyKind::SquareGrid, SQUARE_DEGREE, 1.5);
    let (ok_hex, d_hex) = connectivity_check(TopologyKind::HexGrid, HEX_DEGREE, 2.0);
    d.extend(d_hex);
    v.record("2", "connectivity, square and hexagonal grids, 100 seeds", ok_sq && ok_hex, &d);

    let (ok, d) = criterion_6();
    v.record("6", "exact-recovery oracles", ok, &d);

    let (ok, d) = criterion_7();
    v.record("7", "invariant suites", ok, &d);

    let random = sweep(TopologyKind::Random);
    let square = sweep(TopologyKind::SquareGrid);
    let hex = sweep(TopologyKind::HexGrid);

    let mds = cell_error(&random, 0.15, 4, Algorithm::MdsMap);
    v.record(
        "3",
        "MDS-MAP error band, random, R=0.15, 4 anchors",
        (0.08..=0.20).contains(&mds),
        &[format!("mean error {mds:.4}R (band [0.08R, 0.20R])")],
    );

    let sdp_low = cell_error(&random, 0.15, 4, Algorithm::Sdp);
    let sdp_low_ok = (0.04..=0.11).contains(&sdp_low);
    let mut details = vec![format!(
        "R=0.15, 4 anchors: mean error {sdp_low:.4}R (band [0.04R, 0.11R]) {}",
        if sdp_low_ok { "ok" } else { "out of band" }
    )];
    let mut high_ok = true;
    for &m in &PAPER_ANCHORS {
        let e = cell_error(&random, 0.25, m, Algorithm::Sdp);
        high_ok &= e <= 0.02;
        details.push(format!("R=0.25, {m} anchors: mean error {e:.2e}R (≤ 0.02R)"));
    }
    v.record("4", "SDP error band, random topology", sdp_low_ok && high_ok, &details);

    let mut details = Vec::new();
    let mut a_ok = true;
    for c in random.cells.iter().filter(|c| c.algorithm == Algorithm::Sdp) {
        let m = cell_error(&random, c.range, c.anchors, Algorithm::MdsMap);
        if c.mean_error > m {
            a_ok = false;
            details.push(format!("(a) R={} anchors={}: SDP {:.4} > MDS {m:.4}", c.range, c.anchors, c.mean_error));
        }
    }
    details.push(format!("(a) SDP ≤ MDS in every random-topology cell: {a_ok}"));
    let mut b_ok = true;
    for (name, report) in [("random", &random), ("square_grid", &square), ("hex_grid", &hex)] {
        for algo in [Algorithm::MdsMap, Algorithm::Sdp] {
            let lo = report.mean_over_anchors(0.15, algo).unwrap();
            let hi = report.mean_over_anchors(0.25, algo).unwrap();
            let ok = hi < lo;
            b_ok &= ok;
            details.push(format!("(b) {name} {algo}: R=0.15 {lo:.3e} -> R=0.25 {hi:.3e} {}", if ok { "ok" } else { "not decreasing" }));
        }
    }
    let mut c_ok = true;
    for &range in &PAPER_RANGES {
        for algo in [Algorithm::MdsMap, Algorithm::Sdp] {
            let g = square.mean_over_anchors(range, algo).unwrap();
            let r = random.mean_over_anchors(range, algo).unwrap();
            let ok = g <= r;
            c_ok &= ok;
            details.push(format!("(c) R={range} {algo}: square {g:.3e} vs random {r:.3e} {}", if ok { "ok" } else { "grid worse" }));
        }
    }
    let nonconverged: usize = [&random, &square, &hex].iter().flat_map(|r| &r.cells).map(|c| c.nonconverged).sum();
    details.push(format!("non-converged SDP solves across all sweeps: {nonconverged}"));
    v.record("5", "ordering properties over the three sweeps", a_ok && b_ok && c_ok, &details);

    println!("{} of 7 criteria failed ({:.0?} total)", v.failed, started.elapsed());
    if v.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
