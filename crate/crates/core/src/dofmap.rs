//! Global numbering of the hierarchic shape functions.
//!
//! Global functions are ordered in degree blocks: first the nodal functions
//! in node order, then for each degree `q = 2..=p` the edge functions in edge
//! order followed (for `q >= 4`) by the bubbles of degree `q`, element by
//! element and `β` by `β` within an element. Because each block only depends
//! on `q`, the numbering for degree `p1` is a prefix of the numbering for any
//! `p2 > p1`, so coefficient vectors embed by zero-padding.
//!
//! Three tables describe the map, mirroring the usual presentation:
//!
//! * `B` (`n_p x 5`): degree, node, edge, element and bubble index of each
//!   global function (1-based, `0` for "not applicable");
//! * `C` (`n_{p,ref} x |T|`): global index of local function `l` on element `k`;
//! * `S` (`n_{p,ref} x |T|`): sign applied to local function `l` on element `k`.
//!
//! Odd-degree edge functions are odd under reversal of the edge parameter,
//! so the two elements sharing an edge must agree on a direction. Each edge
//! takes the traversal direction of its highest-numbered adjacent element as
//! its reference direction; the other element gets `-1` on odd degrees.

use crate::basis2d::{dim_trunk_space, shape_index, ShapeKind};
use crate::mesh::Mesh;
use crate::{Error, PolyDegree, Result};

/// What a global function is attached to (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofEntity {
    Node(usize),
    Edge(usize),
    Bubble { element: usize, beta: usize },
}

/// Attributes of one global function: a row of `B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DofAttr {
    pub degree: usize,
    pub entity: DofEntity,
}

impl DofAttr {
    /// The `B` row with 1-based indices and `0` in unused columns.
    pub fn b_row(&self) -> [usize; 5] {
        match self.entity {
            DofEntity::Node(i) => [self.degree, i + 1, 0, 0, 0],
            DofEntity::Edge(e) => [self.degree, 0, e + 1, 0, 0],
            DofEntity::Bubble { element, beta } => [self.degree, 0, 0, element + 1, beta],
        }
    }
}

/// How edge signs are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignRule {
    /// Continuity-preserving signs.
    #[default]
    Oriented,
    /// Every sign `+1`. Odd-degree edge functions are then discontinuous
    /// across interior edges; useful only for demonstrating why signs exist.
    Disabled,
}

/// `n_p = |N| + (p-1)|E| + (p-2)(p-3)/2 |T|` (last term only for `p >= 4`).
pub fn global_dim(mesh: &Mesh, p: PolyDegree) -> usize {
    let p = p.get();
    let bubbles = if p >= 4 { (p - 2) * (p - 3) / 2 } else { 0 };
    mesh.num_nodes() + (p - 1) * mesh.num_edges() + bubbles * mesh.num_elements()
}

#[derive(Debug, Clone)]
pub struct DofMap {
    p: PolyDegree,
    n_ref: usize,
    n_global: usize,
    mesh_signature: (usize, usize, usize),
    attributes: Vec<DofAttr>,
    /// `connectivity[k * n_ref + l]`, 0-based global index.
    connectivity: Vec<usize>,
    signs: Vec<i8>,
}

/// First global index (0-based) of the degree-`q` block, `q >= 2`.
fn block_offset(mesh: &Mesh, q: usize) -> usize {
    let (nn, ne, nt) = mesh.signature();
    let mut offset = nn;
    for r in 2..q {
        offset += ne + r.saturating_sub(3) * nt;
    }
    offset
}

impl DofMap {
    pub fn new(mesh: &Mesh, p: PolyDegree) -> Self {
        Self::with_sign_rule(mesh, p, SignRule::Oriented)
    }

    pub fn with_sign_rule(mesh: &Mesh, p: PolyDegree, rule: SignRule) -> Self {
        let deg = p.get();
        let n_ref = dim_trunk_space(deg);
        let n_global = global_dim(mesh, p);
        let (nn, ne, nt) = mesh.signature();

        let mut attributes = Vec::with_capacity(n_global);
        attributes.extend((0..nn).map(|i| DofAttr { degree: 1, entity: DofEntity::Node(i) }));
        for q in 2..=deg {
            attributes.extend((0..ne).map(|e| DofAttr { degree: q, entity: DofEntity::Edge(e) }));
            for element in 0..nt {
                attributes.extend((1..=q.saturating_sub(3)).map(|beta| DofAttr { degree: q, entity: DofEntity::Bubble { element, beta } }));
            }
        }
        debug_assert_eq!(attributes.len(), n_global);

        let offsets: Vec<usize> = (0..=deg).map(|q| if q >= 2 { block_offset(mesh, q) } else { 0 }).collect();
        let owner_orientation: Vec<i8> = (0..ne)
            .map(|e| {
                let (k, j) = mesh.edge_elements(e).max().expect("every edge has an element");
                mesh.elem2edge_orientation()[k][j]
            })
            .collect();

        let ids: Vec<_> = (1..=n_ref).map(shape_index).collect();
        let mut connectivity = Vec::with_capacity(n_ref * nt);
        let mut signs = Vec::with_capacity(n_ref * nt);
        for k in 0..nt {
            let element = &mesh.elements()[k];
            let edges = &mesh.elem2edge()[k];
            let orient = &mesh.elem2edge_orientation()[k];
            for id in &ids {
                let (global, sign) = match id.kind {
                    ShapeKind::Nodal { node } => (element[node - 1], 1),
                    ShapeKind::Edge { edge } => {
                        let e = edges[edge - 1];
                        let agrees = orient[edge - 1] * owner_orientation[e];
                        let sign = if rule == SignRule::Oriented && id.p % 2 == 1 { agrees } else { 1 };
                        (offsets[id.p] + e, sign)
                    }
                    ShapeKind::Bubble { beta } => (offsets[id.p] + ne + k * (id.p - 3) + beta - 1, 1),
                };
                connectivity.push(global);
                signs.push(sign);
            }
        }

        Self { p, n_ref, n_global, mesh_signature: mesh.signature(), attributes, connectivity, signs }
    }

    pub fn degree(&self) -> PolyDegree {
        self.p
    }

    /// `n_p`.
    pub fn n_global(&self) -> usize {
        self.n_global
    }

    /// `n_{p,ref}`, the number of local functions per element.
    pub fn n_local(&self) -> usize {
        self.n_ref
    }

    pub fn num_elements(&self) -> usize {
        self.connectivity.len() / self.n_ref
    }

    pub fn attributes(&self) -> &[DofAttr] {
        &self.attributes
    }

    /// Global indices (0-based) of the local functions of element `k`.
    pub fn element_dofs(&self, k: usize) -> &[usize] {
        &self.connectivity[k * self.n_ref..(k + 1) * self.n_ref]
    }

    /// Signs of the local functions of element `k`.
    pub fn element_signs(&self, k: usize) -> &[i8] {
        &self.signs[k * self.n_ref..(k + 1) * self.n_ref]
    }

    /// `B` with 1-based indices.
    pub fn b_matrix(&self) -> Vec<[usize; 5]> {
        self.attributes.iter().map(DofAttr::b_row).collect()
    }

    /// `C` as rows `l = 1..=n_{p,ref}`, columns elements, 1-based entries.
    pub fn c_matrix(&self) -> Vec<Vec<usize>> {
        (0..self.n_ref).map(|l| (0..self.num_elements()).map(|k| self.element_dofs(k)[l] + 1).collect()).collect()
    }

    /// `S` as rows `l`, columns elements.
    pub fn s_matrix(&self) -> Vec<Vec<i8>> {
        (0..self.n_ref).map(|l| (0..self.num_elements()).map(|k| self.element_signs(k)[l]).collect()).collect()
    }

    pub fn same_mesh(&self, other: &DofMap) -> bool {
        self.mesh_signature == other.mesh_signature
    }

    pub fn is_on(&self, mesh: &Mesh) -> bool {
        self.mesh_signature == mesh.signature()
    }
}

/// Pads degree-`p1` coefficients with zeros to represent the same function
/// in the degree-`p2` basis.
pub fn embed_coefficients(coeffs: &[f64], from: &DofMap, to: &DofMap) -> Result<Vec<f64>> {
    if !from.same_mesh(to) {
        return Err(Error::MeshMismatch);
    }
    if from.degree() > to.degree() {
        return Err(Error::DegreeOrder { from: from.degree().get(), to: to.degree().get() });
    }
    if coeffs.len() != from.n_global() {
        return Err(Error::DimensionMismatch { expected: from.n_global(), found: coeffs.len() });
    }
    let mut out = vec![0.0; to.n_global()];
    out[..coeffs.len()].copy_from_slice(coeffs);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{rectangulate, Rect};

    fn deg(p: usize) -> PolyDegree {
        PolyDegree::new(p).unwrap()
    }

    fn example4_mesh() -> Mesh {
        rectangulate(Rect::new(-3.0, 3.0, 0.0, 2.0), 7, 2).unwrap()
    }

    fn two_element_mesh() -> Mesh {
        rectangulate(Rect::new(0.0, 2.0, 0.0, 1.0), 2, 1).unwrap()
    }

    #[test]
    fn global_dim_examples() {
        assert_eq!(global_dim(&example4_mesh(), deg(4)), 149);
        let l2 = Mesh::uniform_level(Rect::reference(), 2).unwrap();
        assert_eq!(global_dim(&l2, deg(5)), 233);
        assert_eq!(global_dim(&rectangulate(Rect::reference(), 1, 1).unwrap(), deg(1)), 4);
    }

    #[test]
    fn single_element_b_matrix() {
        let m = rectangulate(Rect::reference(), 1, 1).unwrap();
        let b = DofMap::new(&m, deg(5)).b_matrix();
        assert_eq!(b.len(), 23);
        assert_eq!(b[0], [1, 1, 0, 0, 0]);
        assert_eq!(b[16], [4, 0, 0, 1, 1]);
        assert_eq!(b[22], [5, 0, 0, 1, 2]);
    }

    #[test]
    fn two_element_c_and_s() {
        let d = DofMap::new(&two_element_mesh(), deg(3));
        let c = d.c_matrix();
        let col1: Vec<usize> = c.iter().map(|r| r[0]).collect();
        let col2: Vec<usize> = c.iter().map(|r| r[1]).collect();
        assert_eq!(col1, vec![1, 2, 5, 4, 7, 10, 12, 8, 14, 17, 19, 15]);
        assert_eq!(col2, vec![2, 3, 6, 5, 9, 11, 13, 10, 16, 18, 20, 17]);
        let s = d.s_matrix();
        for (l, row) in s.iter().enumerate() {
            let expect_t1 = if l == 9 { -1 } else { 1 };
            assert_eq!(row, &vec![expect_t1, 1], "row {}", l + 1);
        }
    }

    #[test]
    fn example4_named_functions() {
        let m = example4_mesh();
        let d = DofMap::new(&m, deg(4));
        let attrs = d.attributes();
        assert_eq!(attrs[9].entity, DofEntity::Node(9));
        let DofEntity::Edge(e) = attrs[33].entity else { panic!("N_34 is an edge function") };
        let elems: Vec<usize> = m.edge_elements(e).map(|(k, _)| k + 1).collect();
        assert_eq!(elems, vec![4, 5]);
        assert_eq!(attrs[141].entity, DofEntity::Bubble { element: 6, beta: 1 });
        let mut around: Vec<usize> = (0..m.num_elements()).filter(|&k| d.element_dofs(k).contains(&9)).map(|k| k + 1).collect();
        around.sort();
        assert_eq!(around, vec![1, 2, 8, 9]);
    }

    #[test]
    fn b_rows_have_one_entity() {
        let d = DofMap::new(&example4_mesh(), deg(7));
        for row in d.b_matrix() {
            assert_eq!(row[1..4].iter().filter(|&&v| v != 0).count(), 1);
            assert_eq!(row[4] != 0, row[3] != 0);
        }
    }

    #[test]
    fn hierarchy_prefix() {
        let m = example4_mesh();
        for p in 1..=7 {
            let lo = DofMap::new(&m, deg(p)).b_matrix();
            let hi = DofMap::new(&m, deg(p + 1)).b_matrix();
            assert_eq!(&hi[..lo.len()], &lo[..]);
        }
    }

    #[test]
    fn connectivity_multiplicities() {
        let m = example4_mesh();
        let d = DofMap::new(&m, deg(6));
        let mut count = vec![0usize; d.n_global()];
        for k in 0..m.num_elements() {
            for &g in d.element_dofs(k) {
                count[g] += 1;
            }
        }
        for (g, attr) in d.attributes().iter().enumerate() {
            let expect = match attr.entity {
                DofEntity::Node(i) => m.elements().iter().filter(|el| el.contains(&i)).count(),
                DofEntity::Edge(e) => m.edge_elements(e).count(),
                DofEntity::Bubble { .. } => 1,
            };
            assert_eq!(count[g], expect, "global {}", g + 1);
        }
    }

    #[test]
    fn signs_follow_degree_parity() {
        let m = Mesh::uniform_level(Rect::reference(), 2).unwrap();
        let d = DofMap::new(&m, deg(6));
        for k in 0..m.num_elements() {
            for (l, &s) in d.element_signs(k).iter().enumerate() {
                let id = shape_index(l + 1);
                if !matches!(id.kind, ShapeKind::Edge { .. }) || id.p % 2 == 0 {
                    assert_eq!(s, 1);
                }
            }
        }
        let off = DofMap::with_sign_rule(&m, deg(6), SignRule::Disabled);
        assert!((0..m.num_elements()).all(|k| off.element_signs(k).iter().all(|&s| s == 1)));
    }

    #[test]
    fn embed_examples() {
        let m = example4_mesh();
        let d4 = DofMap::new(&m, deg(4));
        let d6 = DofMap::new(&m, deg(6));
        let v: Vec<f64> = (0..149).map(|i| i as f64).collect();
        assert_eq!(embed_coefficients(&v, &d4, &d4).unwrap(), v);
        let w = embed_coefficients(&v, &d4, &d6).unwrap();
        assert_eq!(w.len(), 293);
        assert_eq!(&w[..149], &v[..]);
        assert!(w[149..].iter().all(|&x| x == 0.0));
        let z = embed_coefficients(&vec![0.0; 149], &d4, &d6).unwrap();
        assert!(z.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn embed_errors() {
        let d4 = DofMap::new(&example4_mesh(), deg(4));
        let other = DofMap::new(&two_element_mesh(), deg(4));
        let v = vec![0.0; 149];
        assert!(matches!(embed_coefficients(&v, &d4, &other), Err(Error::MeshMismatch)));
        let d2 = DofMap::new(&example4_mesh(), deg(2));
        assert!(matches!(embed_coefficients(&v, &d4, &d2), Err(Error::DegreeOrder { .. })));
        assert!(matches!(embed_coefficients(&v[..10], &d4, &d4), Err(Error::DimensionMismatch { .. })));
    }
}
