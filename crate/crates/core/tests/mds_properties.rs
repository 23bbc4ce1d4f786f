use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wsnloc::mds::{alignment_residual, classical_mds, double_center, fit_anchors, mds_map, RelativeMap};
use wsnloc::netgraph::{build_graph, DistanceMatrix, DistanceMode};
use wsnloc::topology::{gen_random, Deployment, Point2, TopologyKind};

fn points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point2> {
    (0..n)
        .map(|_| Point2::new(rng.random_range(0.0..0.5), rng.random_range(0.0..0.5)))
        .collect()
}

fn exact_distances(pts: &[Point2]) -> DistanceMatrix {
    DistanceMatrix::from_fn(pts.len(), |i, j| pts[i].dist(pts[j])).unwrap()
}

fn twice_area(a: Point2, b: Point2, c: Point2) -> f64 {
    ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs()
}

#[test]
fn complete_exact_data_is_recovered_for_any_anchor_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut done = 0;
    while done < 50 {
        let n = rng.random_range(5..30);
        let pts = points(&mut rng, n);
        let k = rng.random_range(3..=n.min(8));
        let anchors = rand::seq::index::sample(&mut rng, n, k).into_vec();
        let a: Vec<Point2> = anchors.iter().map(|&i| pts[i]).collect();
        if twice_area(a[0], a[1], a[2]) < 1e-3 {
            continue;
        }
        let dep = Deployment::from_parts(pts.clone(), anchors, 0.5, TopologyKind::Random, 0).unwrap();
        let g = build_graph(&dep, 1.0, DistanceMode::TrueRange).unwrap();
        let r = mds_map(&g, &dep.anchor_positions()).unwrap();
        let worst = r.estimated.iter().zip(&pts).map(|(e, t)| e.dist(*t)).fold(0.0, f64::max);
        assert!(worst < 1e-8, "config {done}: max error {worst}");
        done += 1;
    }
}

#[test]
fn ten_points_match_after_alignment() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let pts = points(&mut rng, 10);
    let rel = classical_mds(&exact_distances(&pts), 2).unwrap();
    let all: Vec<usize> = (0..10).collect();
    let t = fit_anchors(&rel, &all, &pts).unwrap();
    let worst = rel.coords.iter().zip(&pts).map(|(&p, t2)| t.apply(p).dist(*t2)).fold(0.0, f64::max);
    assert!(worst < 1e-9);
    assert!((t.scale - 1.0).abs() < 1e-9);
    assert!((t.det().abs() - 1.0).abs() < 1e-9);
}

#[test]
fn translation_leaves_output_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // Dyadic coordinates keep every coordinate difference exact.
    let pts: Vec<Point2> = (0..12)
        .map(|_| Point2::new(rng.random_range(0..32) as f64 / 64.0, rng.random_range(0..32) as f64 / 64.0))
        .collect();
    let moved: Vec<Point2> = pts.iter().map(|p| Point2::new(p.x + 0.25, p.y + 0.125)).collect();
    let a = classical_mds(&exact_distances(&pts), 2).unwrap();
    let b = classical_mds(&exact_distances(&moved), 2).unwrap();
    assert_eq!(a, b);
}

#[test]
fn outputs_are_centred_on_shortest_path_input() {
    for seed in 0..20 {
        let d = gen_random(64, 0.5, seed).unwrap();
        let g = build_graph(&d, 0.2, DistanceMode::TrueRange).unwrap();
        let Ok(sp) = g.shortest_paths() else { continue };
        let b = double_center(&sp.squared());
        let norm = b.norm();
        for i in 0..64 {
            assert!(b.row(i).sum().abs() <= 1e-9 * norm);
            assert!(b.column(i).sum().abs() <= 1e-9 * norm);
            for j in 0..64 {
                assert_eq!(b[(i, j)], b[(j, i)]);
            }
        }
        let rel = classical_mds(&sp, 2).unwrap();
        let mx = rel.coords.iter().map(|p| p.x).sum::<f64>() / 64.0;
        let my = rel.coords.iter().map(|p| p.y).sum::<f64>() / 64.0;
        assert!(mx.abs() < 1e-9 && my.abs() < 1e-9);
        assert!(rel.eigenvalues_used[0] >= rel.eigenvalues_used[1]);
        assert_eq!(&rel.eigenvalues_all[..2], &rel.eigenvalues_used[..]);
    }
}

#[test]
fn planar_spectrum_has_rank_two() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let pts = points(&mut rng, 20);
        let rel = classical_mds(&exact_distances(&pts), 2).unwrap();
        let top = rel.eigenvalues_all[0];
        assert!(rel.eigenvalues_all[2..].iter().all(|l| l.abs() <= 1e-9 * top));
    }
}

#[test]
fn exact_extra_anchor_never_raises_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let coords = points(&mut rng, 8);
        let rel = RelativeMap {
            coords: coords.clone(),
            eigenvalues_used: vec![],
            eigenvalues_all: vec![],
        };
        // Truth is a noisy similarity image of the first four points.
        let truth: Vec<Point2> = coords[..4]
            .iter()
            .map(|p| Point2::new(0.1 - 2.0 * p.y + rng.random_range(-0.01..0.01), 0.3 + 2.0 * p.x + rng.random_range(-0.01..0.01)))
            .collect();
        let idx: Vec<usize> = (0..4).collect();
        let t = fit_anchors(&rel, &idx, &truth).unwrap();
        let before = alignment_residual(&t, &rel, &idx, &truth);

        let mut idx2 = idx.clone();
        idx2.push(5);
        let mut truth2 = truth.clone();
        truth2.push(t.apply(coords[5]));
        let t2 = fit_anchors(&rel, &idx2, &truth2).unwrap();
        let after = alignment_residual(&t2, &rel, &idx2, &truth2);
        assert!(after <= before * (1.0 + 1e-12) + 1e-15, "{after} > {before}");
    }
}
