//! Ground-truth deployments: uniform random, square grid and hexagonal grid,
//! plus random anchor selection.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::format::{f64_17, point_list};

/// A position in the plane, in arena units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist_sq(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    Random,
    SquareGrid,
    HexGrid,
}

impl TopologyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyKind::Random => "random",
            TopologyKind::SquareGrid => "square_grid",
            TopologyKind::HexGrid => "hex_grid",
        }
    }
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TopologyKind {
    type Err = Error;

    /// Accepts both the snake_case wire names and the dashed CLI spellings.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(TopologyKind::Random),
            "square_grid" | "square-grid" => Ok(TopologyKind::SquareGrid),
            "hex_grid" | "hex-grid" => Ok(TopologyKind::HexGrid),
            other => Err(Error::InvalidArgument(format!("unknown topology `{other}`"))),
        }
    }
}

/// Per-axis Gaussian placement error applied to grid vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridNoise {
    std: f64,
}

impl GridNoise {
    /// Default placement error as a fraction of the lattice spacing.
    pub const DEFAULT_SPACING_FRACTION: f64 = 0.1;

    pub fn new(std: f64) -> Result<Self> {
        if !(std >= 0.0 && std.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "placement noise std must be finite and >= 0, got {std}"
            )));
        }
        Ok(Self { std })
    }

    pub const fn none() -> Self {
        Self { std: 0.0 }
    }

    pub fn default_for_spacing(spacing: f64) -> Self {
        Self {
            std: Self::DEFAULT_SPACING_FRACTION * spacing,
        }
    }

    pub fn std(self) -> f64 {
        self.std
    }
}

/// Node positions, anchor set and the parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    positions: Vec<Point2>,
    anchors: Vec<usize>,
    side: f64,
    kind: TopologyKind,
    seed: u64,
}

impl Deployment {
    /// Builds a deployment from explicit parts, checking the anchor invariants.
    /// Anchor indices are sorted; duplicates are rejected.
    pub fn from_parts(
        positions: Vec<Point2>,
        mut anchors: Vec<usize>,
        side: f64,
        kind: TopologyKind,
        seed: u64,
    ) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidArgument(format!("arena side must be > 0, got {side}")));
        }
        if let Some(p) = positions.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite position {p:?}")));
        }
        anchors.sort_unstable();
        if anchors.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("duplicate anchor index".into()));
        }
        if let Some(&a) = anchors.last() {
            if a >= positions.len() {
                return Err(Error::InvalidArgument(format!(
                    "anchor index {a} out of range for {} nodes",
                    positions.len()
                )));
            }
        }
        Ok(Self {
            positions,
            anchors,
            side,
            kind,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Point2] {
        &self.positions
    }

    /// Sorted anchor indices.
    pub fn anchors(&self) -> &[usize] {
        &self.anchors
    }

    pub fn is_anchor(&self, i: usize) -> bool {
        self.anchors.binary_search(&i).is_ok()
    }

    /// True positions of the anchors, in the order of [`Deployment::anchors`].
    pub fn anchor_positions(&self) -> Vec<Point2> {
        self.anchors.iter().map(|&a| self.positions[a]).collect()
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn to_json(&self) -> String {
        let anchors: Vec<String> = self.anchors.iter().map(usize::to_string).collect();
        format!(
            "{{\"n\":{},\"r\":{},\"kind\":\"{}\",\"seed\":{},\"positions\":{},\"anchors\":[{}]}}",
            self.n(),
            f64_17(self.side),
            self.kind,
            self.seed,
            point_list(self.positions.iter().map(|p| (p.x, p.y))),
            anchors.join(",")
        )
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Wire {
            n: usize,
            r: f64,
            kind: String,
            seed: u64,
            positions: Vec<[f64; 2]>,
            anchors: Vec<usize>,
        }
        let wire: Wire = serde_json::from_str(text)?;
        if wire.n != wire.positions.len() {
            return Err(Error::Parse(format!(
                "n = {} but {} positions given",
                wire.n,
                wire.positions.len()
            )));
        }
        Self::from_parts(
            wire.positions.into_iter().map(Point2::from).collect(),
            wire.anchors,
            wire.r,
            wire.kind.parse()?,
            wire.seed,
        )
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn check_side(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("arena side must be > 0, got {r}")))
    }
}

/// `n` points i.i.d. uniform on `[0, r]²`.
pub fn gen_random(n: usize, r: f64, seed: u64) -> Result<Deployment> {
    check_side(r)?;
    let mut rng = rng_for(seed);
    let positions = (0..n)
        .map(|_| Point2::new(rng.random_range(0.0..=r), rng.random_range(0.0..=r)))
        .collect();
    Deployment::from_parts(positions, Vec::new(), r, TopologyKind::Random, seed)
}

fn perturb(lattice: Vec<Point2>, noise: GridNoise, seed: u64) -> Vec<Point2> {
    if noise.std == 0.0 {
        return lattice;
    }
    let mut rng = rng_for(seed);
    let normal = Normal::new(0.0, noise.std).expect("std validated by GridNoise");
    lattice
        .into_iter()
        .map(|p| Point2::new(p.x + normal.sample(&mut rng), p.y + normal.sample(&mut rng)))
        .collect()
}

/// Ideal square lattice: `side_count²` vertices spaced `r / side_count`
/// apart, inset by half a spacing from the arena border, row-major from the
/// lower-left corner.
pub fn square_lattice(side_count: usize, r: f64) -> Vec<Point2> {
    let spacing = r / side_count as f64;
    let mut out = Vec::with_capacity(side_count * side_count);
    for row in 0..side_count {
        for col in 0..side_count {
            out.push(Point2::new(
                (col as f64 + 0.5) * spacing,
                (row as f64 + 0.5) * spacing,
            ));
        }
    }
    out
}

pub fn gen_square_grid(side_count: usize, r: f64, noise: GridNoise, seed: u64) -> Result<Deployment> {
    check_side(r)?;
    if side_count == 0 {
        return Err(Error::InvalidArgument("side_count must be >= 1".into()));
    }
    let positions = perturb(square_lattice(side_count, r), noise, seed);
    Deployment::from_parts(positions, Vec::new(), r, TopologyKind::SquareGrid, seed)
}

/// Column spacing of the hexagonal lattice used by [`gen_hex_grid`].
///
/// Each vertex owns a cell `spacing` wide and `spacing·√3/2` tall; the
/// spacing is the largest one for which the `rows × cols` cells fit in the
/// arena, so an 8×8 lattice shares the square grid's `r/8` spacing.
pub fn hex_spacing(rows: usize, cols: usize, r: f64) -> f64 {
    let row_factor = 3f64.sqrt() / 2.0;
    r / (cols as f64).max(rows as f64 * row_factor)
}

/// Ideal hexagonal lattice: odd rows shifted by half a column, rows
/// `spacing·√3/2` apart, centred in `[0, r]²`.
pub fn hex_lattice(rows: usize, cols: usize, r: f64) -> Vec<Point2> {
    let spacing = hex_spacing(rows, cols, r);
    let row_step = spacing * 3f64.sqrt() / 2.0;
    let mut out = Vec::with_capacity(rows * cols);
    for row in 0..rows {
        let shift = if row % 2 == 1 { 0.5 } else { 0.0 };
        for col in 0..cols {
            out.push(Point2::new((col as f64 + shift) * spacing, row as f64 * row_step));
        }
    }
    let max_x = out.iter().map(|p| p.x).fold(0.0, f64::max);
    let max_y = out.iter().map(|p| p.y).fold(0.0, f64::max);
    let (dx, dy) = ((r - max_x) / 2.0, (r - max_y) / 2.0);
    for p in &mut out {
        p.x += dx;
        p.y += dy;
    }
    out
}

pub fn gen_hex_grid(rows: usize, cols: usize, r: f64, noise: GridNoise, seed: u64) -> Result<Deployment> {
    check_side(r)?;
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument("rows and cols must be >= 1".into()));
    }
    let positions = perturb(hex_lattice(rows, cols, r), noise, seed);
    Deployment::from_parts(positions, Vec::new(), r, TopologyKind::HexGrid, seed)
}

/// Picks `m` distinct anchors uniformly without replacement.
pub fn select_anchors(deployment: &Deployment, m: usize, seed: u64) -> Result<Deployment> {
    let n = deployment.n();
    if m > n {
        return Err(Error::InvalidArgument(format!(
            "cannot select {m} anchors from {n} nodes"
        )));
    }
    let mut rng = rng_for(seed);
    let mut anchors = index::sample(&mut rng, n, m).into_vec();
    anchors.sort_unstable();
    Ok(Deployment {
        anchors,
        ..deployment.clone()
    })
}
