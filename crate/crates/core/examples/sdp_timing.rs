use std::time::Instant;

use wsnloc::bench::estimation_error;
use wsnloc::netgraph::{build_graph, DistanceMode};
use wsnloc::sdp::{build_problem, extract_positions, solve_feasibility_with, SolverOptions};
use wsnloc::topology::{gen_random, select_anchors};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let range: f64 = args.get(1).map_or(0.15, |s| s.parse().unwrap());
    let relaxation: f64 = args.get(2).map_or(1.0, |s| s.parse().unwrap());
    let seeds: u64 = args.get(3).map_or(5, |s| s.parse().unwrap());
    for seed in 0..seeds {
        let dep = select_anchors(&gen_random(64, 0.5, seed).unwrap(), 4, seed).unwrap();
        let g = build_graph(&dep, range, DistanceMode::TrueRange).unwrap();
        if !g.is_connected() {
            continue;
        }
        let p = build_problem(&g, &dep.anchor_positions()).unwrap();
        let t = Instant::now();
        let memory: usize = std::env::args().nth(4).map_or(10, |s| s.parse().unwrap());
        let opts = SolverOptions { relaxation, anderson_memory: memory, ..SolverOptions::default() };
        let s = solve_feasibility_with(&p, &opts).unwrap();
        let r = extract_positions(&s, &p);
        println!(
            "seed {seed} deg {:.2} m {} iters {} conv {} res {:.2e} gap {:.2e} err {:.5} time {:.2?}",
            g.avg_connectivity(),
            p.constraints().len(),
            s.iterations,
            s.converged,
            s.constraint_residual,
            s.relaxation_gap,
            estimation_error(&r, &dep, range).unwrap(),
            t.elapsed()
        );
    }
}
