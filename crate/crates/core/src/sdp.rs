//! Semidefinite relaxation of sensor localization with exact distances.
//!
//! With `X` the `2 × u` matrix of unknown positions, the distance equations
//! are linear in `Z = [[I₂, X], [Xᵀ, Y]]` once `Y = XᵀX` is relaxed to
//! `Y ⪰ XᵀX`, i.e. `Z ⪰ 0`:
//!
//! ```text
//! Z[0..2, 0..2] = I₂
//! (0; e_ij)(0; e_ij)ᵀ • Z = d_ij²    for unknown-unknown edges
//! (a_k; e_j)(a_k; e_j)ᵀ • Z = d_kj²  for anchor-unknown edges
//! Z ⪰ 0
//! ```
//!
//! where `A • B = tr(AB)`. The problem has no objective; any feasible `Z` is
//! a solution. [`solve_feasibility`] finds one by averaged reflections
//! between the affine constraint set and the PSD cone.

use std::fmt::{self, Write as _};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::format::f64_17;
use crate::linalg::{min_eigenvalue, project_psd, sym_eigen_desc, symmetrize};
use crate::mds::{Algorithm, Diagnostics, LocalizationResult};
use crate::netgraph::{DistanceMode, NetworkGraph};
use crate::topology::Point2;

/// Embedding dimension. Only the plane is supported.
pub const DIM: usize = 2;

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintTag {
    /// One of `Z₀₀ = 1`, `Z₁₁ = 1`, `Z₀₁ = 0`.
    IdentityBlock,
    /// Original node indices of the anchor and the unknown node.
    AnchorEdge { anchor: usize, unknown: usize },
    /// Original node indices, `i < j`.
    UnknownEdge { i: usize, j: usize },
}

impl fmt::Display for ConstraintTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintTag::IdentityBlock => f.write_str("identity_block"),
            ConstraintTag::AnchorEdge { anchor, unknown } => write!(f, "anchor_edge({anchor},{unknown})"),
            ConstraintTag::UnknownEdge { i, j } => write!(f, "unknown_edge({i},{j})"),
        }
    }
}

/// A linear constraint `A • Z = rhs` with `A` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Upper-triangle nonzeros `(row, col, value)`, `row <= col`, sorted.
    pub entries: Vec<(usize, usize, f64)>,
    pub rhs: f64,
    pub tag: ConstraintTag,
}

impl Constraint {
    /// `v vᵀ` for a sparse vector `v` given as `(index, value)` pairs with
    /// distinct indices.
    fn outer(v: &[(usize, f64)], rhs: f64, tag: ConstraintTag) -> Self {
        let mut entries = Vec::new();
        for &(p, a) in v {
            for &(q, b) in v {
                if p <= q && a * b != 0.0 {
                    entries.push((p, q, a * b));
                }
            }
        }
        entries.sort_by_key(|&(p, q, _)| (p, q));
        Self { entries, rhs, tag }
    }

    /// `A • Z` for symmetric `Z`.
    pub fn dot(&self, z: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(p, q, a)| if p == q { a * z[(p, q)] } else { 2.0 * a * z[(p, q)] })
            .sum()
    }

    pub fn to_dense(&self, size: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(size, size);
        for &(p, q, a) in &self.entries {
            m[(p, q)] = a;
            m[(q, p)] = a;
        }
        m
    }

    /// Coordinates in the orthonormal basis of symmetric matrices: the upper
    /// triangle, column-major, with off-diagonal entries scaled by √2 so that
    /// `svec(A) · svec(B) = A • B`.
    pub fn svec(&self) -> Vec<(usize, f64)> {
        self.entries
            .iter()
            .map(|&(p, q, a)| {
                let k = q * (q + 1) / 2 + p;
                (k, if p == q { a } else { a * std::f64::consts::SQRT_2 })
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SdpProblem {
    n_nodes: usize,
    /// Original index of unknown node `u`, in increasing order.
    unknown_nodes: Vec<usize>,
    anchors: Vec<usize>,
    anchor_positions: Vec<Point2>,
    constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn dim(&self) -> usize {
        DIM
    }

    pub fn n_unknown(&self) -> usize {
        self.unknown_nodes.len()
    }

    /// Side length of `Z`.
    pub fn z_size(&self) -> usize {
        DIM + self.n_unknown()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn unknown_nodes(&self) -> &[usize] {
        &self.unknown_nodes
    }

    /// Text listing of every constraint for cross-checking with external
    /// tools. Indices are 0-based; only the upper triangle is listed.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "z_size {}", self.z_size());
        let _ = writeln!(out, "constraints {}", self.constraints.len());
        for (k, c) in self.constraints.iter().enumerate() {
            let _ = writeln!(out, "constraint {k} {} {} {}", c.tag, f64_17(c.rhs), c.entries.len());
            for &(p, q, a) in &c.entries {
                let _ = writeln!(out, "{p} {q} {}", f64_17(a));
            }
        }
        out
    }
}

/// Assembles the feasibility problem. `anchor_truth` holds the anchor
/// positions in the order of [`NetworkGraph::anchors`]. Unknown nodes keep
/// their relative order.
pub fn build_problem(graph: &NetworkGraph, anchor_truth: &[Point2]) -> Result<SdpProblem> {
    if graph.mode() != DistanceMode::TrueRange {
        return Err(Error::UnsupportedMode(format!(
            "the SDP needs measured distances, graph is in {} mode",
            graph.mode().as_str()
        )));
    }
    let anchors = graph.anchors();
    if anchors.len() != anchor_truth.len() {
        return Err(Error::InvalidArgument(format!(
            "{} anchors but {} anchor positions",
            anchors.len(),
            anchor_truth.len()
        )));
    }
    if anchors.is_empty() {
        return Err(Error::InsufficientAnchors { found: 0 });
    }
    let unknown_nodes: Vec<usize> = (0..graph.n()).filter(|&i| !graph.is_anchor(i)).collect();
    if unknown_nodes.is_empty() {
        return Err(Error::InvalidArgument("no unknown nodes to localize".into()));
    }
    let mut slot = vec![usize::MAX; graph.n()];
    for (u, &node) in unknown_nodes.iter().enumerate() {
        slot[node] = DIM + u;
    }
    let anchor_pos = |a: usize| anchor_truth[anchors.binary_search(&a).expect("anchor")];

    let mut constraints = vec![
        Constraint::outer(&[(0, 1.0)], 1.0, ConstraintTag::IdentityBlock),
        Constraint::outer(&[(1, 1.0)], 1.0, ConstraintTag::IdentityBlock),
        Constraint {
            entries: vec![(0, 1, 0.5)],
            rhs: 0.0,
            tag: ConstraintTag::IdentityBlock,
        },
    ];
    for e in graph.edges() {
        match (graph.is_anchor(e.i), graph.is_anchor(e.j)) {
            (true, true) => {}
            (false, false) => constraints.push(Constraint::outer(
                &[(slot[e.i], 1.0), (slot[e.j], -1.0)],
                e.d * e.d,
                ConstraintTag::UnknownEdge { i: e.i, j: e.j },
            )),
            (a_is_i, _) => {
                let (anchor, unknown) = if a_is_i { (e.i, e.j) } else { (e.j, e.i) };
                let a = anchor_pos(anchor);
                constraints.push(Constraint::outer(
                    &[(0, a.x), (1, a.y), (slot[unknown], -1.0)],
                    e.d * e.d,
                    ConstraintTag::AnchorEdge { anchor, unknown },
                ));
            }
        }
    }
    Ok(SdpProblem {
        n_nodes: graph.n(),
        unknown_nodes,
        anchors: anchors.to_vec(),
        anchor_positions: anchor_truth.to_vec(),
        constraints,
    })
}

/// Solver statistics attached to an SDP localization.
#[derive(Debug, Clone, PartialEq)]
pub struct SdpDiagnostics {
    pub converged: bool,
    pub iterations: usize,
    pub constraint_residual: f64,
    pub psd_residual: f64,
    pub relaxation_gap: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub z: DMatrix<f64>,
    /// `2 × n_unknown` block of `Z`; column `u` estimates unknown node `u`.
    pub x: DMatrix<f64>,
    /// `n_unknown × n_unknown` Gram block.
    pub y: DMatrix<f64>,
    /// `max_i |A_i • Z − b_i|`.
    pub constraint_residual: f64,
    /// `max(0, −λ_min(Z))`.
    pub psd_residual: f64,
    /// `tr(Y − XᵀX)`.
    pub relaxation_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SdpSolution {
    pub fn diagnostics(&self) -> SdpDiagnostics {
        SdpDiagnostics {
            converged: self.converged,
            iterations: self.iterations,
            constraint_residual: self.constraint_residual,
            psd_residual: self.psd_residual,
            relaxation_gap: self.relaxation_gap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation factor of the averaged-reflection update, in `(0, 2)`.
    pub relaxation: f64,
    /// Number of past steps combined by the Anderson extrapolation; 0 runs
    /// the plain averaged-reflection iteration.
    pub anderson_memory: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            relaxation: 1.0,
            anderson_memory: 10,
        }
    }
}

/// Orthogonal projection onto `{Z : A_i • Z = b_i}` using a factorization
/// of the constraint Gram matrix `G_ij = A_i • A_j` computed once.
struct AffineProjector<'a> {
    constraints: &'a [Constraint],
    rhs: DVector<f64>,
    /// Inverse of the Gram matrix, or its pseudo-inverse when singular, which
    /// gives the least-norm correction.
    inverse: DMatrix<f64>,
}

impl<'a> AffineProjector<'a> {
    fn new(constraints: &'a [Constraint], size: usize) -> Self {
        let m = constraints.len();
        let svec_len = size * (size + 1) / 2;
        let mut touching: Vec<Vec<(usize, f64)>> = vec![Vec::new(); svec_len];
        for (c, con) in constraints.iter().enumerate() {
            for (k, v) in con.svec() {
                touching[k].push((c, v));
            }
        }
        let mut gram = DMatrix::zeros(m, m);
        for list in &touching {
            for &(a, va) in list {
                for &(b, vb) in list {
                    gram[(a, b)] += va * vb;
                }
            }
        }
        let max_diag = (0..m).map(|i| gram[(i, i)]).fold(0.0, f64::max);
        let inverse = match gram.clone().cholesky() {
            Some(ch) if (0..m).all(|i| ch.l_dirty()[(i, i)].powi(2) > 1e-12 * max_diag) => ch.inverse(),
            _ => {
                let eig = sym_eigen_desc(&gram);
                let cutoff = 1e-12 * eig.values.first().copied().unwrap_or(0.0).max(0.0);
                let mut pinv = DMatrix::zeros(m, m);
                for (k, &l) in eig.values.iter().enumerate() {
                    if l > cutoff {
                        let v = eig.vectors.column(k);
                        pinv += v * v.transpose() / l;
                    }
                }
                pinv
            }
        };
        Self {
            constraints,
            rhs: DVector::from_iterator(m, constraints.iter().map(|c| c.rhs)),
            inverse,
        }
    }

    fn residuals(&self, z: &DMatrix<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.constraints.len(),
            self.constraints.iter().zip(self.rhs.iter()).map(|(c, b)| c.dot(z) - b),
        )
    }

    fn max_residual(&self, z: &DMatrix<f64>) -> f64 {
        self.residuals(z).amax()
    }

    fn project(&self, z: &mut DMatrix<f64>) {
        let r = self.residuals(z);
        let y = &self.inverse * r;
        for (c, &w) in self.constraints.iter().zip(y.iter()) {
            for &(p, q, a) in &c.entries {
                z[(p, q)] -= w * a;
                if p != q {
                    z[(q, p)] -= w * a;
                }
            }
        }
    }
}

/// Finds `Z ⪰ 0` satisfying every constraint to within `tol`.
///
/// Iterates the averaged-reflection (Douglas–Rachford) map
/// `s ← s + λ (P_A(2 P_C(s) − s) − P_C(s))` between the PSD cone `C` and the
/// affine set `A`, starting from the least-norm point of `A`. The reflection
/// term is the correction that pulls plain alternating projections onto the
/// intersection. Iterates are extrapolated with a safeguarded Anderson step,
/// and the work happens in a frame centered on the anchors. The returned `Z`
/// is always PSD.
pub fn solve_feasibility(problem: &SdpProblem, tol: f64, max_iter: usize) -> Result<SdpSolution> {
    solve_feasibility_with(
        problem,
        &SolverOptions {
            tol,
            max_iter,
            ..SolverOptions::default()
        },
    )
}

pub fn solve_feasibility_with(problem: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", opts.tol)));
    }
    if !(opts.relaxation > 0.0 && opts.relaxation < 2.0) {
        return Err(Error::InvalidArgument(format!(
            "relaxation must lie in (0, 2), got {}",
            opts.relaxation
        )));
    }
    let size = problem.z_size();
    let frame = Frame::for_problem(problem);
    let local: Vec<Constraint> = problem.constraints.iter().map(|c| frame.transform(c)).collect();
    let affine = AffineProjector::new(&local, size);
    let mut start = DMatrix::zeros(size, size);
    affine.project(&mut start);

    let mut solver = Iteration::new(&affine, opts.relaxation, opts.anderson_memory);
    let mut current = solver.evaluate(start);
    let mut best = (current.z.clone(), current.residual);
    let mut iterations = 1;
    let mut converged = current.residual <= opts.tol;
    while !converged && iterations < opts.max_iter {
        let (next, evals) = solver.advance(&current);
        iterations += evals;
        current = next;
        if current.residual < best.1 {
            best = (current.z.clone(), current.residual);
        }
        converged = current.residual <= opts.tol;
    }
    let z = frame.restore(&best.0);
    let constraint_residual = problem
        .constraints
        .iter()
        .map(|c| (c.dot(&z) - c.rhs).abs())
        .fold(0.0, f64::max);
    let psd_residual = (-min_eigenvalue(&z)).max(0.0);
    converged = constraint_residual <= opts.tol && psd_residual <= opts.tol;

    let nu = problem.n_unknown();
    let x = z.view((0, DIM), (DIM, nu)).into_owned();
    let y = z.view((DIM, DIM), (nu, nu)).into_owned();
    let relaxation_gap = (&y - x.transpose() * &x).trace();
    Ok(SdpSolution {
        z,
        x,
        y,
        constraint_residual,
        psd_residual,
        relaxation_gap,
        iterations,
        converged,
    })
}

/// Affine change of coordinates `p ↦ (p − origin) / scale` applied to the
/// whole problem. On `Z` it acts by the congruence `Z = Wᵀ Z' W` with
/// `W = [[I, origin·1ᵀ], [0, scale·I]]`, which preserves both semidefiniteness
/// and the value of every constraint, so residuals keep their units.
struct Frame {
    origin: [f64; 2],
    scale: f64,
}

impl Frame {
    /// Centers on the anchors and scales by their RMS spread, so the `X`
    /// block is of order one.
    fn for_problem(problem: &SdpProblem) -> Self {
        let k = problem.anchor_positions.len() as f64;
        let origin = [
            problem.anchor_positions.iter().map(|p| p.x).sum::<f64>() / k,
            problem.anchor_positions.iter().map(|p| p.y).sum::<f64>() / k,
        ];
        let spread = (problem
            .anchor_positions
            .iter()
            .map(|p| (p.x - origin[0]).powi(2) + (p.y - origin[1]).powi(2))
            .sum::<f64>()
            / k)
            .sqrt();
        let scale = if spread > 0.0 { spread } else { 1.0 };
        Self { origin, scale }
    }

    /// Column `r` of `W` as sparse pairs.
    fn column(&self, r: usize) -> Vec<(usize, f64)> {
        if r < DIM {
            vec![(r, 1.0)]
        } else {
            vec![(0, self.origin[0]), (1, self.origin[1]), (r, self.scale)]
        }
    }

    /// `W A Wᵀ`.
    fn transform(&self, c: &Constraint) -> Constraint {
        let mut acc: std::collections::BTreeMap<(usize, usize), f64> = Default::default();
        for &(p, q, a) in &c.entries {
            let (cp, cq) = (self.column(p), self.column(q));
            let mut add = |u: &[(usize, f64)], v: &[(usize, f64)]| {
                for &(i, x) in u {
                    for &(j, y) in v {
                        *acc.entry((i.min(j), i.max(j))).or_insert(0.0) += a * x * y;
                    }
                }
            };
            add(&cp, &cq);
            if p != q {
                add(&cq, &cp);
            }
        }
        // Upper-triangle storage: off-diagonal entries hold half of `a_pq + a_qp`.
        let entries = acc
            .into_iter()
            .filter(|&(_, v)| v != 0.0)
            .map(|((i, j), v)| (i, j, if i == j { v } else { v / 2.0 }))
            .collect();
        Constraint { entries, rhs: c.rhs, tag: c.tag }
    }

    /// `Wᵀ Z' W`.
    fn restore(&self, local: &DMatrix<f64>) -> DMatrix<f64> {
        let n = local.nrows();
        let mut w = DMatrix::identity(n, n);
        for r in DIM..n {
            w[(0, r)] = self.origin[0];
            w[(1, r)] = self.origin[1];
            w[(r, r)] = self.scale;
        }
        let mut z = w.transpose() * local * &w;
        symmetrize(&mut z);
        z
    }
}

/// One evaluation of the averaged-reflection map at `s`.
struct Point {
    s: DMatrix<f64>,
    /// `s − T(s)`.
    g: DMatrix<f64>,
    /// `P_C(s)` with its identity block normalized.
    z: DMatrix<f64>,
    residual: f64,
}

/// The averaged-reflection map `T` and an Anderson-type extrapolation over
/// its recent iterates.
struct Iteration<'a> {
    affine: &'a AffineProjector<'a>,
    relaxation: f64,
    memory: usize,
    /// Differences `(s_{k+1} − s_k, g_{k+1} − g_k)`, oldest first.
    history: Vec<(DMatrix<f64>, DMatrix<f64>)>,
}

impl<'a> Iteration<'a> {
    fn new(affine: &'a AffineProjector<'a>, relaxation: f64, memory: usize) -> Self {
        Self {
            affine,
            relaxation,
            memory,
            history: Vec::new(),
        }
    }

    fn evaluate(&self, s: DMatrix<f64>) -> Point {
        let (cone, _) = project_psd(&s);
        let mut reflected = &cone * 2.0 - &s;
        self.affine.project(&mut reflected);
        let g = (&cone - reflected) * self.relaxation;
        let z = normalize_identity_block(cone);
        let residual = self.affine.max_residual(&z);
        Point { s, g, z, residual }
    }

    /// Least-squares combination of past steps, or `None` when there is no
    /// usable history.
    fn extrapolate(&self, at: &Point) -> Option<DMatrix<f64>> {
        let m = self.history.len();
        if m == 0 {
            return None;
        }
        // Normal equations of min ‖g − ΔG γ‖, lightly regularized.
        let mut gram = DMatrix::zeros(m, m);
        let mut rhs = DVector::zeros(m);
        for (i, (_, dgi)) in self.history.iter().enumerate() {
            rhs[i] = dgi.dot(&at.g);
            for (j, (_, dgj)) in self.history.iter().enumerate().skip(i) {
                let v = dgi.dot(dgj);
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        let scale = (0..m).map(|i| gram[(i, i)]).fold(0.0, f64::max);
        if !(scale > 0.0) {
            return None;
        }
        for i in 0..m {
            gram[(i, i)] += 1e-10 * scale;
        }
        let gamma = gram.cholesky()?.solve(&rhs);
        let mut next = &at.s - &at.g;
        for ((ds, dg), &c) in self.history.iter().zip(gamma.iter()) {
            next -= (ds - dg) * c;
        }
        next.iter().all(|v| v.is_finite()).then_some(next)
    }

    /// Moves to the next iterate; returns it with the number of map
    /// evaluations spent.
    fn advance(&mut self, at: &Point) -> (Point, usize) {
        let mut evals = 0;
        let mut next = None;
        if self.memory > 0 {
            if let Some(s) = self.extrapolate(at) {
                let candidate = self.evaluate(s);
                evals += 1;
                if candidate.g.norm() <= at.g.norm() {
                    next = Some(candidate);
                } else {
                    self.history.clear();
                }
            }
        }
        let next = next.unwrap_or_else(|| {
            evals += 1;
            self.evaluate(&at.s - &at.g)
        });
        if self.memory > 0 {
            if self.history.len() == self.memory {
                self.history.remove(0);
            }
            self.history.push((&next.s - &at.s, &next.g - &at.g));
        }
        (next, evals)
    }
}

/// Congruence `Z ↦ D Z D` with `D = diag(Z₁₁^{-1/2}, I)`: keeps `Z ⪰ 0`
/// and makes the leading 2×2 block exactly `I`, so `Y − XᵀX` is a Schur
/// complement. Left unchanged if that block is not positive definite.
fn normalize_identity_block(mut z: DMatrix<f64>) -> DMatrix<f64> {
    let block = nalgebra::Matrix2::new(z[(0, 0)], z[(0, 1)], z[(1, 0)], z[(1, 1)]);
    let eig = block.symmetric_eigen();
    if !(eig.eigenvalues.min() > 0.0) {
        return z;
    }
    let inv_sqrt = eig.eigenvectors
        * nalgebra::Matrix2::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    let n = z.nrows();
    for j in DIM..n {
        let (a, b) = (z[(0, j)], z[(1, j)]);
        let (x0, x1) = (inv_sqrt[(0, 0)] * a + inv_sqrt[(0, 1)] * b, inv_sqrt[(1, 0)] * a + inv_sqrt[(1, 1)] * b);
        z[(0, j)] = x0;
        z[(j, 0)] = x0;
        z[(1, j)] = x1;
        z[(j, 1)] = x1;
    }
    z[(0, 0)] = 1.0;
    z[(1, 1)] = 1.0;
    z[(0, 1)] = 0.0;
    z[(1, 0)] = 0.0;
    z
}

/// Reads unknown positions off the `X` block; anchors keep their true
/// positions.
pub fn extract_positions(solution: &SdpSolution, problem: &SdpProblem) -> LocalizationResult {
    let mut estimated = vec![Point2::default(); problem.n_nodes];
    for (&a, &p) in problem.anchors.iter().zip(&problem.anchor_positions) {
        estimated[a] = p;
    }
    for (u, &node) in problem.unknown_nodes.iter().enumerate() {
        estimated[node] = Point2::new(solution.x[(0, u)], solution.x[(1, u)]);
    }
    LocalizationResult {
        estimated,
        algorithm: Algorithm::Sdp,
        diagnostics: Diagnostics::Sdp(solution.diagnostics()),
    }
}

/// Builds, solves and extracts in one step. Non-convergence is reported in
/// the diagnostics, not as an error.
pub fn sdp_localize(graph: &NetworkGraph, anchor_truth: &[Point2], tol: f64, max_iter: usize) -> Result<LocalizationResult> {
    let problem = build_problem(graph, anchor_truth)?;
    let solution = solve_feasibility(&problem, tol, max_iter)?;
    Ok(extract_positions(&solution, &problem))
}
