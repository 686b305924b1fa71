//! Finite-difference operator pairs for the clamped buckling problem.
//!
//! Every pair `(A, B)` discretises the Rayleigh quotient
//! `∫(Δu)² / ∫|∇u|²` on the clamped space. Both matrices are assembled as
//! weighted Gram products `DᵀWD`, so they are symmetric to the last bit.
//!
//! Planar domains live on a square lattice of step `h`. Unknowns sit at
//! interior lattice nodes (all four adjacent cells inside the domain), the
//! boundary nodes carry `u = 0`, and a neighbour outside the domain takes the
//! value of the mirror node on the other side. That mirror rule is the
//! discrete `∂u/∂ν = 0`. `L` is the 5-point Laplacian evaluated at interior
//! and boundary nodes under this rule and `A = LᵀWL`. `B = GᵀW_eG` where `G`
//! takes differences along lattice edges.
//!
//! Disks and spherical caps separate into azimuthal modes `m`. Each mode is a
//! 1D problem on nodes `x_j = (j − ½)h`, `j = 1..N`, with `h = X/(N + ½)`
//! so that the clamped edge `x = X` is node `N + 1`. The radial flux vanishes
//! at the pole, so no pole condition has to be imposed.

use crate::linalg::{CsrMatrix, GramOperator, Triplets};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use thiserror::Error;

pub const MIN_RESOLUTION: usize = 8;
pub const MIN_RADIAL_NODES: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiscretizeError {
    #[error("grid too coarse: {interior} interior nodes across the narrowest part, need at least 3")]
    ResolutionTooCoarse { interior: usize },
    #[error("resolution {resolution} below the minimum {MIN_RESOLUTION}")]
    ResolutionBelowMinimum { resolution: usize },
    #[error("step 1/{resolution} does not divide side length {side}")]
    StepDoesNotDivide { resolution: usize, side: f64 },
    #[error("radial grid needs at least {MIN_RADIAL_NODES} nodes, got {nodes}")]
    TooFewRadialNodes { nodes: usize },
    #[error("cap aperture must lie in (0, π), got {0}")]
    ApertureOutOfRange(f64),
    #[error("shape {0} has no planar lattice")]
    NotPlanar(&'static str),
    #[error("shape {0} has no radial reduction")]
    NotRadial(&'static str),
    #[error("invalid side lengths {a} × {b}")]
    InvalidSides { a: f64, b: f64 },
    #[error("mode count must be at least 1")]
    NoModes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    Rectangle {
        a: f64,
        b: f64,
    },
    /// Unit disk.
    Disk,
    /// `[0,1]²` without the quadrant `(½,1]²`.
    Lshape,
    /// Geodesic ball `θ ≤ aperture` on the unit sphere.
    Cap {
        aperture: f64,
    },
}

impl Shape {
    pub fn name(&self) -> &'static str {
        match self {
            Shape::Rectangle { .. } => "rectangle",
            Shape::Disk => "disk",
            Shape::Lshape => "lshape",
            Shape::Cap { .. } => "cap",
        }
    }

    pub fn is_planar(&self) -> bool {
        matches!(self, Shape::Rectangle { .. } | Shape::Lshape)
    }

    pub fn is_radial(&self) -> bool {
        matches!(self, Shape::Disk | Shape::Cap { .. })
    }

    fn check(&self) -> Result<(), DiscretizeError> {
        match *self {
            Shape::Rectangle { a, b } if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) => {
                Err(DiscretizeError::InvalidSides { a, b })
            }
            Shape::Cap { aperture } if !(aperture > 0.0 && aperture < PI) => {
                Err(DiscretizeError::ApertureOutOfRange(aperture))
            }
            _ => Ok(()),
        }
    }
}

/// A domain plus its discretisation parameters. `resolution` counts lattice
/// cells per unit length for planar shapes and radial nodes for disks and
/// caps; `mode_count` is the number of azimuthal modes `m = 0..mode_count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub shape: Shape,
    pub resolution: usize,
    pub mode_count: usize,
}

impl DomainSpec {
    pub fn validate(&self) -> Result<(), DiscretizeError> {
        self.shape.check()?;
        if self.shape.is_radial() {
            if self.resolution < MIN_RADIAL_NODES {
                return Err(DiscretizeError::TooFewRadialNodes { nodes: self.resolution });
            }
            if self.mode_count == 0 {
                return Err(DiscretizeError::NoModes);
            }
        } else if self.resolution < MIN_RESOLUTION {
            return Err(DiscretizeError::ResolutionBelowMinimum {
                resolution: self.resolution,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Outside,
    Boundary,
    Interior(usize),
}

/// Lattice bookkeeping for a planar operator pair.
#[derive(Debug, Clone)]
pub struct PlanarGrid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    /// Centre of the bounding box; coordinates are measured from here.
    pub origin: [f64; 2],
    kinds: Vec<NodeKind>,
    interior: Vec<(usize, usize)>,
    laplacian: CsrMatrix,
    laplacian_nodes: Vec<(usize, usize)>,
    laplacian_weights: Vec<f64>,
}

impl PlanarGrid {
    pub fn kind(&self, i: usize, j: usize) -> NodeKind {
        self.kinds[j * (self.nx + 1) + i]
    }

    /// Lattice position of each unknown.
    pub fn interior_nodes(&self) -> &[(usize, usize)] {
        &self.interior
    }

    pub fn coordinate(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.h - self.origin[0], j as f64 * self.h - self.origin[1]]
    }

    /// Coordinates of the unknowns.
    pub fn unknown_coordinates(&self) -> Vec<[f64; 2]> {
        self.interior.iter().map(|&(i, j)| self.coordinate(i, j)).collect()
    }

    /// The clamped 5-point Laplacian: rows are the interior and boundary
    /// nodes listed by [`PlanarGrid::laplacian_nodes`], columns the unknowns.
    pub fn laplacian(&self) -> &CsrMatrix {
        &self.laplacian
    }

    pub fn laplacian_nodes(&self) -> &[(usize, usize)] {
        &self.laplacian_nodes
    }

    pub fn laplacian_weights(&self) -> &[f64] {
        &self.laplacian_weights
    }

    /// `Lu` spread over the whole lattice, zero where no row exists.
    pub fn laplacian_on_lattice(&self, u: &[f64]) -> Vec<f64> {
        let lu = self.laplacian.mul_vec(u);
        let mut out = vec![0.0; (self.nx + 1) * (self.ny + 1)];
        for (&(i, j), v) in self.laplacian_nodes.iter().zip(lu) {
            out[j * (self.nx + 1) + i] = v;
        }
        out
    }

    /// Centred difference along axis `p` at every unknown of a lattice
    /// field.
    pub fn centred_difference(&self, lattice: &[f64], p: usize) -> Vec<f64> {
        let stride = if p == 0 { 1 } else { self.nx + 1 };
        self.interior
            .iter()
            .map(|&(i, j)| {
                let c = j * (self.nx + 1) + i;
                (lattice[c + stride] - lattice[c - stride]) / (2.0 * self.h)
            })
            .collect()
    }

    /// Centred difference along axis `p` of a field given at the unknowns
    /// (zero on the boundary).
    pub fn centred_difference_of_unknowns(&self, u: &[f64], p: usize) -> Vec<f64> {
        let mut lattice = vec![0.0; (self.nx + 1) * (self.ny + 1)];
        for (&(i, j), &v) in self.interior.iter().zip(u) {
            lattice[j * (self.nx + 1) + i] = v;
        }
        self.centred_difference(&lattice, p)
    }
}

/// Edge-difference operator `G` and its quadrature weights.
#[derive(Debug, Clone)]
pub struct DiscreteGradient {
    pub g: CsrMatrix,
    pub weights: Vec<f64>,
    /// Axis of each edge: 0 for `x`, 1 for `y`.
    pub axis: Vec<u8>,
    pub midpoints: Vec<[f64; 2]>,
    /// Flat lattice indices `j·(nx+1) + i` of the two ends of each edge.
    pub ends: Vec<[usize; 2]>,
}

impl DiscreteGradient {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.g.mul_vec(u)
    }

    /// `Gᵀ W e`.
    pub fn adjoint_weighted(&self, e: &[f64]) -> Vec<f64> {
        let we: Vec<f64> = e.iter().zip(&self.weights).map(|(x, w)| x * w).collect();
        let mut out = vec![0.0; self.g.cols()];
        for (r, c, v) in self.g.entries() {
            out[c] += v * we[r];
        }
        out
    }

    /// Edge differences of a field given on the whole lattice, boundary
    /// values included.
    pub fn apply_to_lattice(&self, lattice: &[f64], h: f64) -> Vec<f64> {
        self.ends.iter().map(|&[a, b]| (lattice[b] - lattice[a]) / h).collect()
    }

    /// `⟨e, f⟩_W`, optionally restricted to edges along one axis.
    pub fn inner(&self, e: &[f64], f: &[f64], axis: Option<usize>) -> f64 {
        crate::sum::sum(
            (0..e.len())
                .filter(|&k| axis.is_none_or(|p| self.axis[k] as usize == p))
                .map(|k| self.weights[k] * e[k] * f[k]),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RadialCoordinate {
    /// Disk radius `r`, metric factor `r`.
    Radius,
    /// Colatitude `θ` on the unit sphere, metric factor `sin θ`.
    Colatitude,
}

#[derive(Debug, Clone, Serialize)]
pub struct RadialGrid {
    pub coordinate: RadialCoordinate,
    pub step: f64,
    pub extent: f64,
    pub nodes: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum Grid {
    Planar(PlanarGrid),
    Radial(RadialGrid),
}

/// `A u = Λ B u` (buckling) together with the lumped mass for `B u = λ M u`
/// (membrane).
#[derive(Debug, Clone)]
pub struct OperatorPair {
    /// Assembled `A = DᵀWD`.
    pub a: CsrMatrix,
    /// The factor `D` of `A` (a clamped Laplacian) and its weights `W`.
    pub a_root: CsrMatrix,
    pub a_weights: Vec<f64>,
    pub b: CsrMatrix,
    pub mass: Vec<f64>,
    pub grid: Grid,
    pub mode: Option<u32>,
}

impl OperatorPair {
    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    /// `A` applied through its factors; use this for eigensolves.
    pub fn buckling_operator(&self) -> GramOperator<'_> {
        GramOperator {
            root: &self.a_root,
            weights: &self.a_weights,
            assembled: &self.a,
        }
    }

    pub fn mass_matrix(&self) -> CsrMatrix {
        CsrMatrix::from_diagonal(&self.mass)
    }

    pub fn planar_grid(&self) -> Option<&PlanarGrid> {
        match &self.grid {
            Grid::Planar(g) => Some(g),
            Grid::Radial(_) => None,
        }
    }

    /// JSON summary of the grid.
    pub fn grid_descriptor(&self) -> serde_json::Value {
        match &self.grid {
            Grid::Planar(g) => json!({
                "kind": "planar",
                "nx": g.nx,
                "ny": g.ny,
                "h": g.h,
                "origin": g.origin,
                "unknowns": self.dim(),
            }),
            Grid::Radial(g) => json!({
                "kind": "radial",
                "coordinate": g.coordinate,
                "step": g.step,
                "extent": g.extent,
                "mode": self.mode,
                "unknowns": self.dim(),
            }),
        }
    }

    /// Writes `<stem>_A.mtx`, `<stem>_B.mtx` (coordinate text) and
    /// `<stem>_grid.json` into `dir`.
    pub fn write_dump(&self, dir: &Path, stem: &str) -> std::io::Result<()> {
        self.a
            .write_coordinate(BufWriter::new(File::create(dir.join(format!("{stem}_A.mtx")))?))?;
        self.b
            .write_coordinate(BufWriter::new(File::create(dir.join(format!("{stem}_B.mtx")))?))?;
        let text = serde_json::to_string_pretty(&self.grid_descriptor()).expect("grid descriptor serialises");
        std::fs::write(dir.join(format!("{stem}_grid.json")), text + "\n")
    }
}

fn lattice_size(side: f64, resolution: usize) -> Result<usize, DiscretizeError> {
    let cells = side * resolution as f64;
    let rounded = cells.round();
    if (cells - rounded).abs() > 1e-9 * cells.max(1.0) || rounded < 1.0 {
        return Err(DiscretizeError::StepDoesNotDivide { resolution, side });
    }
    Ok(rounded as usize)
}

/// Operator pair and edge gradient for a rectangle or the L-shape at step
/// `h = 1/resolution`.
pub fn build_planar(shape: &Shape, resolution: usize) -> Result<(OperatorPair, DiscreteGradient), DiscretizeError> {
    shape.check()?;
    let (w, hgt) = match *shape {
        Shape::Rectangle { a, b } => (a, b),
        Shape::Lshape => (1.0, 1.0),
        s => return Err(DiscretizeError::NotPlanar(s.name())),
    };
    let nx = lattice_size(w, resolution)?;
    let ny = lattice_size(hgt, resolution)?;
    let narrowest = match shape {
        Shape::Lshape => {
            if nx % 2 != 0 {
                return Err(DiscretizeError::StepDoesNotDivide { resolution, side: 0.5 });
            }
            nx / 2 - 1
        }
        _ => nx.min(ny) - 1,
    };
    if narrowest < 3 {
        return Err(DiscretizeError::ResolutionTooCoarse { interior: narrowest });
    }
    let h = 1.0 / resolution as f64;
    let is_lshape = matches!(shape, Shape::Lshape);
    let cell_inside = |ci: isize, cj: isize| -> bool {
        if ci < 0 || cj < 0 || ci >= nx as isize || cj >= ny as isize {
            return false;
        }
        !(is_lshape && 2 * ci as usize >= nx && 2 * cj as usize >= ny)
    };
    let cells_around = |i: usize, j: usize| -> usize {
        let (i, j) = (i as isize, j as isize);
        [(i - 1, j - 1), (i, j - 1), (i - 1, j), (i, j)]
            .iter()
            .filter(|&&(a, b)| cell_inside(a, b))
            .count()
    };

    let stride = nx + 1;
    let mut kinds = vec![NodeKind::Outside; stride * (ny + 1)];
    let mut interior = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            kinds[j * stride + i] = match cells_around(i, j) {
                0 => NodeKind::Outside,
                4 => {
                    interior.push((i, j));
                    NodeKind::Interior(interior.len() - 1)
                }
                _ => NodeKind::Boundary,
            };
        }
    }
    let n = interior.len();
    let kind_at = |i: isize, j: isize| -> NodeKind {
        if i < 0 || j < 0 || i > nx as isize || j > ny as isize {
            NodeKind::Outside
        } else {
            kinds[j as usize * stride + i as usize]
        }
    };

    // clamped Laplacian rows at interior and boundary nodes
    let inv_h2 = 1.0 / (h * h);
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut laplacian_nodes = Vec::new();
    let mut laplacian_weights = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let centre = kinds[j * stride + i];
            if centre == NodeKind::Outside {
                continue;
            }
            let mut row = Vec::new();
            if let NodeKind::Interior(k) = centre {
                row.push((k, -4.0 * inv_h2));
            }
            let (ii, jj) = (i as isize, j as isize);
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let neighbour = match kind_at(ii + di, jj + dj) {
                    NodeKind::Outside => kind_at(ii - di, jj - dj),
                    k => k,
                };
                if let NodeKind::Interior(k) = neighbour {
                    row.push((k, inv_h2));
                }
            }
            if row.is_empty() {
                continue;
            }
            rows.push(row);
            laplacian_nodes.push((i, j));
            laplacian_weights.push(h * h * cells_around(i, j) as f64 / 4.0);
        }
    }
    let mut lt = Triplets::new(rows.len(), n);
    for (r, row) in rows.iter().enumerate() {
        for &(c, v) in row {
            lt.push(r, c, v);
        }
    }
    let laplacian = lt.to_csr();
    let a = laplacian.gram(&laplacian_weights);

    // edge differences; edges with both ends on the boundary are identically zero
    let origin = [0.5 * nx as f64 * h, 0.5 * ny as f64 * h];
    let mut gt_entries = Vec::new();
    let mut weights = Vec::new();
    let mut axis = Vec::new();
    let mut midpoints = Vec::new();
    let mut ends = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            for p in 0..2usize {
                let (i2, j2) = if p == 0 { (i + 1, j) } else { (i, j + 1) };
                if i2 > nx || j2 > ny {
                    continue;
                }
                let (ka, kb) = (kinds[j * stride + i], kinds[j2 * stride + i2]);
                if ka == NodeKind::Outside || kb == NodeKind::Outside {
                    continue;
                }
                let ia = match ka {
                    NodeKind::Interior(k) => Some(k),
                    _ => None,
                };
                let ib = match kb {
                    NodeKind::Interior(k) => Some(k),
                    _ => None,
                };
                if ia.is_none() && ib.is_none() {
                    continue;
                }
                let (ii, jj) = (i as isize, j as isize);
                let adjacent = if p == 0 {
                    [(ii, jj - 1), (ii, jj)]
                } else {
                    [(ii - 1, jj), (ii, jj)]
                };
                let inside = adjacent.iter().filter(|&&(a, b)| cell_inside(a, b)).count();
                let r = weights.len();
                if let Some(k) = ia {
                    gt_entries.push((r, k, -1.0 / h));
                }
                if let Some(k) = ib {
                    gt_entries.push((r, k, 1.0 / h));
                }
                weights.push(h * h * inside as f64 / 2.0);
                axis.push(p as u8);
                let mid = if p == 0 {
                    [(i as f64 + 0.5) * h, j as f64 * h]
                } else {
                    [i as f64 * h, (j as f64 + 0.5) * h]
                };
                midpoints.push([mid[0] - origin[0], mid[1] - origin[1]]);
                ends.push([j * stride + i, j2 * stride + i2]);
            }
        }
    }
    let mut gt = Triplets::new(weights.len(), n);
    for (r, c, v) in gt_entries {
        gt.push(r, c, v);
    }
    let g = gt.to_csr();
    let b = g.gram(&weights);

    let grid = PlanarGrid {
        nx,
        ny,
        h,
        origin,
        kinds,
        interior,
        laplacian,
        laplacian_nodes,
        laplacian_weights,
    };
    let pair = OperatorPair {
        a,
        a_root: grid.laplacian.clone(),
        a_weights: grid.laplacian_weights.clone(),
        b,
        mass: vec![h * h; n],
        grid: Grid::Planar(grid),
        mode: None,
    };
    Ok((
        pair,
        DiscreteGradient {
            g,
            weights,
            axis,
            midpoints,
            ends,
        },
    ))
}

/// Membrane pencil `(B, M)` of a planar domain: 5-point Dirichlet Laplacian
/// form and lumped mass.
pub fn build_membrane(shape: &Shape, resolution: usize) -> Result<(CsrMatrix, CsrMatrix), DiscretizeError> {
    let (pair, _) = build_planar(shape, resolution)?;
    let mass = pair.mass_matrix();
    Ok((pair.b, mass))
}

fn build_radial(
    coordinate: RadialCoordinate,
    extent: f64,
    m: u32,
    nodes: usize,
) -> Result<OperatorPair, DiscretizeError> {
    if nodes < MIN_RADIAL_NODES {
        return Err(DiscretizeError::TooFewRadialNodes { nodes });
    }
    let n = nodes;
    let h = extent / (n as f64 + 0.5);
    let metric = |x: f64| match coordinate {
        RadialCoordinate::Radius => x,
        RadialCoordinate::Colatitude => x.sin(),
    };
    let x = |j: usize| (j as f64 - 0.5) * h; // j counted from 1
    let m2 = f64::from(m) * f64::from(m);
    let inv_h2 = 1.0 / (h * h);

    // rows j = 1..=n of (1/s)(s u')' − m²u/s², plus the clamped edge row
    let mut lt = Triplets::new(n + 1, n);
    let mut weights = Vec::with_capacity(n + 1);
    for j in 1..=n {
        let s = metric(x(j));
        let s_in = metric(x(j) - 0.5 * h);
        let s_out = metric(x(j) + 0.5 * h);
        let r = j - 1;
        lt.push(r, r, -(s_in + s_out) * inv_h2 / s - m2 / (s * s));
        if j > 1 {
            lt.push(r, r - 1, s_in * inv_h2 / s);
        }
        if j < n {
            lt.push(r, r + 1, s_out * inv_h2 / s);
        }
        weights.push(s * h);
    }
    // at the edge u = u' = 0, so Lu reduces to u'' = 2u_N/h² via the mirror
    lt.push(n, n - 1, 2.0 * inv_h2);
    weights.push(0.5 * metric(extent) * h);
    let laplacian = lt.to_csr();
    let a = laplacian.gram(&weights);

    let mut dt = Triplets::new(n, n);
    let mut edge_weights = Vec::with_capacity(n);
    for j in 1..=n {
        let r = j - 1;
        dt.push(r, r, -1.0 / h);
        if j < n {
            dt.push(r, r + 1, 1.0 / h);
        }
        edge_weights.push(metric(x(j) + 0.5 * h) * h);
    }
    let mut b = dt.to_csr().gram(&edge_weights);
    if m > 0 {
        let angular: Vec<f64> = (1..=n).map(|j| m2 * h / metric(x(j))).collect();
        b = add(&b, &CsrMatrix::from_diagonal(&angular));
    }
    let nodes_x: Vec<f64> = (1..=n).map(x).collect();
    let mass = nodes_x.iter().map(|&t| metric(t) * h).collect();
    Ok(OperatorPair {
        a,
        a_root: laplacian,
        a_weights: weights,
        b,
        mass,
        grid: Grid::Radial(RadialGrid {
            coordinate,
            step: h,
            extent,
            nodes: nodes_x,
        }),
        mode: Some(m),
    })
}

fn add(x: &CsrMatrix, y: &CsrMatrix) -> CsrMatrix {
    let mut t = Triplets::new(x.rows(), x.cols());
    for (r, c, v) in x.entries().chain(y.entries()) {
        t.push(r, c, v);
    }
    t.to_csr()
}

/// Mode-`m` pair on the unit disk with `nodes` radial unknowns.
pub fn build_radial_disk(m: u32, nodes: usize) -> Result<OperatorPair, DiscretizeError> {
    build_radial(RadialCoordinate::Radius, 1.0, m, nodes)
}

/// Mode-`m` pair on the spherical cap `θ ≤ aperture` of the unit sphere.
pub fn build_radial_cap(aperture: f64, m: u32, nodes: usize) -> Result<OperatorPair, DiscretizeError> {
    Shape::Cap { aperture }.check()?;
    build_radial(RadialCoordinate::Colatitude, aperture, m, nodes)
}

/// Mode-`m` pair for a disk or cap shape.
pub fn build_radial_shape(shape: &Shape, m: u32, nodes: usize) -> Result<OperatorPair, DiscretizeError> {
    match *shape {
        Shape::Disk => build_radial_disk(m, nodes),
        Shape::Cap { aperture } => build_radial_cap(aperture, m, nodes),
        s => Err(DiscretizeError::NotRadial(s.name())),
    }
}
