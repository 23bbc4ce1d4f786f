//! Classical multidimensional scaling and the MDS-MAP localizer.
//!
//! MDS-MAP estimates every pairwise distance by a shortest path through the
//! network, embeds the resulting matrix in the plane with classical MDS, and
//! maps that relative embedding onto absolute coordinates with the
//! least-squares similarity transform fitted on the anchors.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, Matrix2, Vector2};

use crate::error::{Error, Result};
use crate::format::point_list;
use crate::linalg::sym_eigen_desc;
use crate::netgraph::{DistanceMatrix, NetworkGraph};
use crate::sdp::SdpDiagnostics;
use crate::topology::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    MdsMap,
    Sdp,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::MdsMap => "mds_map",
            Algorithm::Sdp => "sdp",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mds_map" | "mds-map" | "mds" => Ok(Algorithm::MdsMap),
            "sdp" => Ok(Algorithm::Sdp),
            other => Err(Error::InvalidArgument(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Coordinates in an arbitrary frame, as produced by classical MDS.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeMap {
    pub coords: Vec<Point2>,
    /// The retained eigenvalues, largest first. May be negative; coordinates
    /// use them clamped at zero.
    pub eigenvalues_used: Vec<f64>,
    /// Full spectrum of the double-centred matrix, descending.
    pub eigenvalues_all: Vec<f64>,
}

/// Similarity transform `p ↦ scale · Q · p + translation` with `Q` orthogonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform2 {
    pub scale: f64,
    /// Row-major `Q`; a rotation or a reflection.
    pub orthogonal: [[f64; 2]; 2],
    pub translation: Point2,
}

impl Transform2 {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            orthogonal: [[1.0, 0.0], [0.0, 1.0]],
            translation: Point2::new(0.0, 0.0),
        }
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let q = &self.orthogonal;
        Point2::new(
            self.scale * (q[0][0] * p.x + q[0][1] * p.y) + self.translation.x,
            self.scale * (q[1][0] * p.x + q[1][1] * p.y) + self.translation.y,
        )
    }

    pub fn det(&self) -> f64 {
        let q = &self.orthogonal;
        q[0][0] * q[1][1] - q[0][1] * q[1][0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostics {
    Mds {
        /// Full spectrum of the double-centred shortest-path matrix.
        eigenvalues: Vec<f64>,
        /// Sum of squared anchor misfits after alignment.
        alignment_residual: f64,
    },
    Sdp(SdpDiagnostics),
}

/// Estimated absolute positions for every node of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationResult {
    pub estimated: Vec<Point2>,
    pub algorithm: Algorithm,
    pub diagnostics: Diagnostics,
}

impl LocalizationResult {
    /// False only for an SDP run that hit its iteration cap.
    pub fn converged(&self) -> bool {
        match &self.diagnostics {
            Diagnostics::Mds { .. } => true,
            Diagnostics::Sdp(d) => d.converged,
        }
    }

    pub fn to_json(&self) -> String {
        format!(
            "{{\"algorithm\":\"{}\",\"positions\":{},\"converged\":{}}}",
            self.algorithm,
            point_list(self.estimated.iter().map(|p| (p.x, p.y))),
            self.converged()
        )
    }
}

/// Double centring of a matrix of squared proximities:
/// `B = -½ J P² J` with `J = I - 11ᵀ/n`.
pub fn double_center(proximity_squared: &DistanceMatrix) -> DMatrix<f64> {
    let n = proximity_squared.n();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n)
        .map(|i| proximity_squared.row(i).iter().sum::<f64>() / nf)
        .collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    // Input is symmetric, so column means equal row means.
    let mut b = DMatrix::from_fn(n, n, |i, j| {
        -0.5 * (proximity_squared.get(i, j) - row_means[i] - row_means[j] + grand)
    });
    crate::linalg::symmetrize(&mut b);
    b
}

/// Embeds a distance matrix in `dim ∈ {1, 2}` dimensions. The second
/// coordinate is zero when `dim == 1`.
pub fn classical_mds(distances: &DistanceMatrix, dim: usize) -> Result<RelativeMap> {
    if !(1..=2).contains(&dim) {
        return Err(Error::InvalidArgument(format!("dim must be 1 or 2, got {dim}")));
    }
    let n = distances.n();
    let b = double_center(&distances.squared());
    let eig = sym_eigen_desc(&b);
    let kept = dim.min(n);
    let eigenvalues_used: Vec<f64> = eig.values[..kept].to_vec();
    let scales: Vec<f64> = eigenvalues_used.iter().map(|&l| l.max(0.0).sqrt()).collect();

    let mut cols = vec![vec![0.0; n]; 2];
    for (k, &s) in scales.iter().enumerate() {
        for (i, c) in cols[k].iter_mut().enumerate() {
            *c = eig.vectors[(i, k)] * s;
        }
    }
    // Rounding can leak a sliver of the constant vector into eigenvectors of
    // near-zero eigenvalues; remove it.
    for col in &mut cols {
        if n > 0 {
            let mean = col.iter().sum::<f64>() / n as f64;
            col.iter_mut().for_each(|c| *c -= mean);
        }
    }
    let coords = (0..n).map(|i| Point2::new(cols[0][i], cols[1][i])).collect();
    Ok(RelativeMap {
        coords,
        eigenvalues_used,
        eigenvalues_all: eig.values,
    })
}

fn centroid(points: &[Point2]) -> Point2 {
    let n = points.len() as f64;
    Point2::new(
        points.iter().map(|p| p.x).sum::<f64>() / n,
        points.iter().map(|p| p.y).sum::<f64>() / n,
    )
}

/// True if the points span less than two dimensions.
fn is_collinear(centered: &[Vector2<f64>]) -> bool {
    let scatter: Matrix2<f64> = centered.iter().map(|v| v * v.transpose()).sum();
    let eig = scatter.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    hi <= 0.0 || lo <= 1e-12 * hi
}

/// Least-squares similarity transform (scale, rotation or reflection,
/// translation) taking the relative anchor coordinates onto their true
/// positions. `anchor_truth[k]` is the true position of `anchor_indices[k]`.
pub fn fit_anchors(relative: &RelativeMap, anchor_indices: &[usize], anchor_truth: &[Point2]) -> Result<Transform2> {
    if anchor_indices.len() != anchor_truth.len() {
        return Err(Error::InvalidArgument(format!(
            "{} anchor indices but {} anchor positions",
            anchor_indices.len(),
            anchor_truth.len()
        )));
    }
    if anchor_indices.len() < 3 {
        return Err(Error::InsufficientAnchors {
            found: anchor_indices.len(),
        });
    }
    if let Some(&a) = anchor_indices.iter().find(|&&a| a >= relative.coords.len()) {
        return Err(Error::InvalidArgument(format!("anchor index {a} out of range")));
    }
    let rel: Vec<Point2> = anchor_indices.iter().map(|&a| relative.coords[a]).collect();
    let (mu_rel, mu_true) = (centroid(&rel), centroid(anchor_truth));
    let rel_c: Vec<Vector2<f64>> = rel.iter().map(|p| Vector2::new(p.x - mu_rel.x, p.y - mu_rel.y)).collect();
    let true_c: Vec<Vector2<f64>> = anchor_truth
        .iter()
        .map(|p| Vector2::new(p.x - mu_true.x, p.y - mu_true.y))
        .collect();

    let rel_var: f64 = rel_c.iter().map(|v| v.norm_squared()).sum();
    if rel_var == 0.0 || (is_collinear(&rel_c) && is_collinear(&true_c)) {
        return Err(Error::DegenerateAnchors);
    }

    // Cross-covariance H = Σ t pᵀ; the optimal orthogonal factor is U Vᵀ
    // from H = U S Vᵀ, with no determinant correction so reflections stay
    // representable.
    let h: Matrix2<f64> = true_c.iter().zip(&rel_c).map(|(t, p)| t * p.transpose()).sum();
    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let q = u * v_t;
    let scale = svd.singular_values.sum() / rel_var;
    let mu_rel_v = Vector2::new(mu_rel.x, mu_rel.y);
    let shift = Vector2::new(mu_true.x, mu_true.y) - q * mu_rel_v * scale;
    Ok(Transform2 {
        scale,
        orthogonal: [[q[(0, 0)], q[(0, 1)]], [q[(1, 0)], q[(1, 1)]]],
        translation: Point2::new(shift.x, shift.y),
    })
}

/// Sum of squared distances between transformed relative anchors and truth.
pub fn alignment_residual(
    transform: &Transform2,
    relative: &RelativeMap,
    anchor_indices: &[usize],
    anchor_truth: &[Point2],
) -> f64 {
    anchor_indices
        .iter()
        .zip(anchor_truth)
        .map(|(&a, &t)| transform.apply(relative.coords[a]).dist_sq(t))
        .sum()
}

/// Shortest paths, classical MDS in two dimensions, then anchor alignment.
/// `anchor_truth` lists the true anchor positions in the order of
/// [`NetworkGraph::anchors`].
pub fn mds_map(graph: &NetworkGraph, anchor_truth: &[Point2]) -> Result<LocalizationResult> {
    let anchors = graph.anchors();
    if anchors.len() < 3 {
        return Err(Error::InsufficientAnchors { found: anchors.len() });
    }
    let distances = graph.shortest_paths()?;
    let relative = classical_mds(&distances, 2)?;
    let transform = fit_anchors(&relative, anchors, anchor_truth)?;
    let alignment_residual = alignment_residual(&transform, &relative, anchors, anchor_truth);
    Ok(LocalizationResult {
        estimated: relative.coords.iter().map(|&p| transform.apply(p)).collect(),
        algorithm: Algorithm::MdsMap,
        diagnostics: Diagnostics::Mds {
            eigenvalues: relative.eigenvalues_all,
            alignment_residual,
        },
    })
}
