//! Quadrilateral meshes and the bilinear (isoparametric) element map.
//!
//! Elements list their four nodes counterclockwise. Local edge `j` joins
//! local node `j` to local node `j % 4 + 1`. Edges are stored as sorted node
//! pairs and numbered in lexicographic order of those pairs, which makes the
//! numbering a pure function of the node and element lists.
//!
//! Meshes are immutable; [`refine_uniform`] returns a new mesh.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::basis2d::REFERENCE_CORNERS;
use crate::{Error, Result};

/// Jacobian determinants at or below this value reject an element.
pub const DET_TOLERANCE: f64 = 1e-14;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Self { x0, x1, y0, y1 }
    }

    /// The reference square `[-1, 1]^2`.
    pub fn reference() -> Self {
        Self::new(-1.0, 1.0, -1.0, 1.0)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Tensor-grid provenance, kept so refinement can stay row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Grid {
    domain: Rect,
    nx: usize,
    ny: usize,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    elements: Vec<[usize; 4]>,
    edges: Vec<[usize; 2]>,
    elem2edge: Vec<[usize; 4]>,
    elem2edge_orientation: Vec<[i8; 4]>,
    edge2elem: Vec<[Option<(usize, usize)>; 2]>,
    grid: Option<Grid>,
}

/// Tensor-grid rectangulation with `nx * ny` elements.
///
/// Nodes are numbered row-major (x fastest), elements likewise, each starting
/// at its lower-left corner.
pub fn rectangulate(domain: Rect, nx: usize, ny: usize) -> Result<Mesh> {
    let Rect { x0, x1, y0, y1 } = domain;
    if !(x1 - x0 > 0.0) || !(y1 - y0 > 0.0) || !domain.area().is_finite() {
        return Err(Error::DegenerateDomain { x0, x1, y0, y1 });
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidMesh(format!("grid size {nx} x {ny}")));
    }
    let coord = |a: f64, b: f64, i: usize, n: usize| if i == n { b } else { a + (b - a) * i as f64 / n as f64 };
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = coord(y0, y1, j, ny);
        for i in 0..=nx {
            nodes.push([coord(x0, x1, i, nx), y]);
        }
    }
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let a = j * (nx + 1) + i;
            let b = a + nx + 1;
            elements.push([a, a + 1, b + 1, b]);
        }
    }
    let mut mesh = Mesh::from_parts(nodes, elements)?;
    mesh.grid = Some(Grid { domain, nx, ny });
    Ok(mesh)
}

/// Splits every element into four.
///
/// Tensor grids are regenerated at twice the resolution, which keeps the
/// row-major numbering. Other meshes get edge-midpoint and centroid nodes
/// appended after the existing nodes; the children of element `k` are
/// elements `4k..4k+4`.
pub fn refine_uniform(mesh: &Mesh) -> Mesh {
    if let Some(g) = mesh.grid {
        return rectangulate(g.domain, 2 * g.nx, 2 * g.ny).expect("refining a valid grid");
    }
    let nn = mesh.nodes.len();
    let ne = mesh.edges.len();
    let mut nodes = mesh.nodes.clone();
    nodes.extend(mesh.edges.iter().map(|&[a, b]| midpoint(mesh.nodes[a], mesh.nodes[b])));
    for k in 0..mesh.elements.len() {
        nodes.push(mesh.geometry(k).map(0.0, 0.0));
    }
    let mut elements = Vec::with_capacity(4 * mesh.elements.len());
    for (k, el) in mesh.elements.iter().enumerate() {
        let mid = |j: usize| nn + mesh.elem2edge[k][j];
        let c = nn + ne + k;
        for i in 0..4 {
            let prev = (i + 3) % 4;
            elements.push([el[i], mid(i), c, mid(prev)]);
        }
    }
    Mesh::from_parts(nodes, elements).expect("refinement preserves admissibility")
}

fn midpoint(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

impl Mesh {
    /// Builds a mesh from 0-based node coordinates and element node lists,
    /// deriving the edges.
    pub fn from_parts(nodes: Vec<[f64; 2]>, elements: Vec<[usize; 4]>) -> Result<Self> {
        let mut pairs: Vec<[usize; 2]> = Vec::with_capacity(4 * elements.len());
        Self::validate(&nodes, &elements)?;
        for el in &elements {
            for j in 0..4 {
                let (a, b) = (el[j], el[(j + 1) % 4]);
                pairs.push([a.min(b), a.max(b)]);
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        Self::with_edges(nodes, elements, pairs)
    }

    /// Like [`Mesh::from_parts`] but with a caller-chosen edge numbering.
    ///
    /// The edge list must be exactly the set of element sides.
    pub fn from_parts_with_edges(nodes: Vec<[f64; 2]>, elements: Vec<[usize; 4]>, edges: Vec<[usize; 2]>) -> Result<Self> {
        Self::validate(&nodes, &elements)?;
        let edges: Vec<[usize; 2]> = edges.into_iter().map(|[a, b]| [a.min(b), a.max(b)]).collect();
        let mut sorted = edges.clone();
        sorted.sort_unstable();
        let unique = sorted.len();
        sorted.dedup();
        if sorted.len() != unique {
            return Err(Error::InvalidMesh("duplicate edge in edge list".into()));
        }
        let mut sides: Vec<[usize; 2]> = elements
            .iter()
            .flat_map(|el| (0..4).map(move |j| [el[j].min(el[(j + 1) % 4]), el[j].max(el[(j + 1) % 4])]))
            .collect();
        sides.sort_unstable();
        sides.dedup();
        if sides != sorted {
            return Err(Error::InvalidMesh("edge list does not match the element sides".into()));
        }
        Self::with_edges(nodes, elements, edges)
    }

    fn validate(nodes: &[[f64; 2]], elements: &[[usize; 4]]) -> Result<()> {
        if elements.is_empty() {
            return Err(Error::InvalidMesh("no elements".into()));
        }
        for (k, el) in elements.iter().enumerate() {
            if let Some(&bad) = el.iter().find(|&&i| i >= nodes.len()) {
                return Err(Error::InvalidMesh(format!("element {} references node {}", k + 1, bad + 1)));
            }
            let g = QuadGeometry::new(el.map(|i| nodes[i]));
            if !(g.signed_area() > 0.0) {
                return Err(Error::InvalidMesh(format!("element {} is not counterclockwise", k + 1)));
            }
        }
        Ok(())
    }

    fn with_edges(nodes: Vec<[f64; 2]>, elements: Vec<[usize; 4]>, edges: Vec<[usize; 2]>) -> Result<Self> {
        let lookup: HashMap<[usize; 2], usize> = edges.iter().enumerate().map(|(e, &pair)| (pair, e)).collect();
        let mut elem2edge = Vec::with_capacity(elements.len());
        let mut orientation = Vec::with_capacity(elements.len());
        let mut edge2elem = vec![[None, None]; edges.len()];
        for (k, el) in elements.iter().enumerate() {
            let mut ids = [0; 4];
            let mut signs = [0i8; 4];
            for j in 0..4 {
                let (a, b) = (el[j], el[(j + 1) % 4]);
                let e = lookup[&[a.min(b), a.max(b)]];
                ids[j] = e;
                signs[j] = if a < b { 1 } else { -1 };
                let slot = &mut edge2elem[e];
                if slot[0].is_none() {
                    slot[0] = Some((k, j));
                } else if slot[1].is_none() {
                    slot[1] = Some((k, j));
                } else {
                    return Err(Error::InvalidMesh(format!("edge {}-{} has more than two elements", a + 1, b + 1)));
                }
            }
            elem2edge.push(ids);
            orientation.push(signs);
        }
        Ok(Self { nodes, elements, edges, elem2edge, elem2edge_orientation: orientation, edge2elem, grid: None })
    }

    /// The rectangle refined `level` times from a single element, i.e. a
    /// `2^level x 2^level` grid.
    pub fn uniform_level(domain: Rect, level: u32) -> Result<Self> {
        let n = 1usize << level;
        rectangulate(domain, n, n)
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    /// Edges as `[a, b]` with `a < b`.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global edge of each local edge, per element.
    pub fn elem2edge(&self) -> &[[usize; 4]] {
        &self.elem2edge
    }

    /// `+1` if the element runs along its local edge from the smaller to the
    /// larger global node index, `-1` otherwise.
    pub fn elem2edge_orientation(&self) -> &[[i8; 4]] {
        &self.elem2edge_orientation
    }

    /// `(element, local edge)` pairs adjacent to edge `e`, 0-based.
    pub fn edge_elements(&self, e: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edge2elem[e].iter().flatten().copied()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge2elem[e][1].is_none()
    }

    pub fn geometry(&self, k: usize) -> QuadGeometry {
        QuadGeometry::new(self.elements[k].map(|i| self.nodes[i]))
    }

    pub fn element_area(&self, k: usize) -> f64 {
        self.geometry(k).signed_area()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_elements()).map(|k| self.element_area(k)).sum()
    }

    /// Whether the mesh came from [`rectangulate`] (possibly refined).
    pub fn is_tensor_grid(&self) -> bool {
        self.grid.is_some()
    }

    /// `(|N|, |E|, |T|)`, used to check that two objects share a mesh.
    pub fn signature(&self) -> (usize, usize, usize) {
        (self.num_nodes(), self.num_edges(), self.num_elements())
    }

    pub fn to_file(&self) -> MeshFile {
        MeshFile {
            nodes: self.nodes.clone(),
            elements: self.elements.iter().map(|el| el.map(|i| i + 1)).collect(),
            edges: Some(self.edges.iter().map(|e| e.map(|i| i + 1)).collect()),
        }
    }

    pub fn from_file(file: MeshFile) -> Result<Self> {
        let to_zero = |i: usize| {
            i.checked_sub(1).ok_or_else(|| Error::InvalidMesh("indices in mesh files are 1-based".into()))
        };
        let elements = file
            .elements
            .iter()
            .map(|el| Ok([to_zero(el[0])?, to_zero(el[1])?, to_zero(el[2])?, to_zero(el[3])?]))
            .collect::<Result<Vec<_>>>()?;
        match file.edges {
            Some(edges) => {
                let edges = edges.iter().map(|e| Ok([to_zero(e[0])?, to_zero(e[1])?])).collect::<Result<Vec<_>>>()?;
                Self::from_parts_with_edges(file.nodes, elements, edges)
            }
            None => Self::from_parts(file.nodes, elements),
        }
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_file(serde_json::from_str(&text)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.to_file())?)?;
        Ok(())
    }
}

/// On-disk mesh layout. Node and element indices are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<[usize; 2]>>,
}

/// The four corner coordinates of an element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadGeometry {
    pub nodes: [[f64; 2]; 4],
}

/// `∇Q` at a point: `matrix[r][c]` is `∂(x, y)_r / ∂(ξ, η)_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian {
    pub matrix: [[f64; 2]; 2],
    pub det: f64,
}

impl Jacobian {
    /// Physical gradient from a reference gradient, `J^{-T} ∇_ξ`.
    #[inline]
    pub fn physical_gradient(&self, grad_xi: f64, grad_eta: f64) -> [f64; 2] {
        let [[x_xi, x_eta], [y_xi, y_eta]] = self.matrix;
        let inv = 1.0 / self.det;
        [(y_eta * grad_xi - y_xi * grad_eta) * inv, (-x_eta * grad_xi + x_xi * grad_eta) * inv]
    }

    /// `(∇Q)^{-1}`, rows `(ξ_x, ξ_y)` and `(η_x, η_y)`.
    pub fn inverse(&self) -> [[f64; 2]; 2] {
        let [[a, b], [c, d]] = self.matrix;
        let inv = 1.0 / self.det;
        [[d * inv, -b * inv], [-c * inv, a * inv]]
    }
}

impl QuadGeometry {
    pub fn new(nodes: [[f64; 2]; 4]) -> Self {
        Self { nodes }
    }

    /// `Q(ξ, η) = Σ_i X_i N_i(ξ, η)`.
    pub fn map(&self, xi: f64, eta: f64) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (c, node) in REFERENCE_CORNERS.iter().zip(&self.nodes) {
            let w = 0.25 * (1.0 + c[0] * xi) * (1.0 + c[1] * eta);
            out[0] += w * node[0];
            out[1] += w * node[1];
        }
        out
    }

    /// `∇Q(ξ, η)`; fails when the determinant is not safely positive.
    pub fn jacobian(&self, xi: f64, eta: f64) -> Result<Jacobian> {
        let mut m = [[0.0; 2]; 2];
        for (c, node) in REFERENCE_CORNERS.iter().zip(&self.nodes) {
            let dxi = 0.25 * c[0] * (1.0 + c[1] * eta);
            let deta = 0.25 * (1.0 + c[0] * xi) * c[1];
            for r in 0..2 {
                m[r][0] += dxi * node[r];
                m[r][1] += deta * node[r];
            }
        }
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det <= DET_TOLERANCE {
            return Err(Error::NonPositiveJacobian { det, xi, eta });
        }
        Ok(Jacobian { matrix: m, det })
    }

    /// Shoelace area; positive for counterclockwise node order.
    pub fn signed_area(&self) -> f64 {
        let n = &self.nodes;
        0.5 * (0..4).map(|i| n[i][0] * n[(i + 1) % 4][1] - n[(i + 1) % 4][0] * n[i][1]).sum::<f64>()
    }

    /// Edge vectors relative to node 1, used to recognise congruent elements.
    pub fn shape_key(&self) -> [f64; 6] {
        let [o, a, b, c] = self.nodes;
        [a[0] - o[0], a[1] - o[1], b[0] - o[0], b[1] - o[1], c[0] - o[0], c[1] - o[1]]
    }

    /// True for rectangles whose sides follow the coordinate axes with the
    /// local ξ direction along x.
    pub fn is_axis_aligned_rectangle(&self) -> bool {
        let [a, b, c, d] = self.nodes;
        let scale = (b[0] - a[0]).abs().max((d[1] - a[1]).abs());
        let tol = 1e-12 * scale;
        (a[1] - b[1]).abs() <= tol
            && (c[1] - d[1]).abs() <= tol
            && (a[0] - d[0]).abs() <= tol
            && (b[0] - c[0]).abs() <= tol
            && b[0] > a[0]
            && d[1] > a[1]
    }
}
