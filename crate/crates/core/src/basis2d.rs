//! Trunk-space shape functions on the reference square `[-1, 1]^2`.
//!
//! Three families span the space of degree `p`:
//!
//! * nodal (bilinear) functions `N_1..N_4`, one per corner;
//! * edge functions of degree `q = 2..=p`, a 1D function `φ_q = N_{q+1}`
//!   blended linearly into the square, one per edge and degree;
//! * bubble functions `φ_{q-β-1}(ξ) φ_{β+1}(η)`, `1 <= β <= q - 3`, for
//!   `q >= 4`, which vanish on the whole boundary.
//!
//! Local functions are numbered by degree: all functions of degree `q` come
//! after those of degree `q - 1`, and within a degree the slot `s` is the
//! node (q = 1), the edge (`s <= 4`) or `4 + β` for bubbles.
//!
//! Corners are numbered counterclockwise from `(-1, -1)`; edge `j` runs from
//! corner `j` to corner `j % 4 + 1`.

use crate::basis1d::shape1d_table;
use crate::MAX_DEGREE;

/// Corners of the reference square in local node order.
pub const REFERENCE_CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Number of trunk-space functions of degree at most `p`.
pub fn dim_trunk_space(p: usize) -> usize {
    assert!(p >= 1);
    if p <= 3 {
        4 * p
    } else {
        4 * p + (p - 2) * (p - 3) / 2
    }
}

/// Number of local functions of exactly degree `q`.
pub fn count_of_degree(q: usize) -> usize {
    match q {
        0 => 0,
        1 => 4,
        2 | 3 => 4,
        _ => 4 + (q - 3),
    }
}

/// `(nodal, edge, bubble)` counts in the space of degree `p`.
pub fn kind_counts(p: usize) -> (usize, usize, usize) {
    let bubbles = if p >= 4 { (p - 2) * (p - 3) / 2 } else { 0 };
    (4, 4 * (p - 1), bubbles)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    /// Corner `1..=4`.
    Nodal { node: usize },
    /// Edge `1..=4`.
    Edge { edge: usize },
    /// Bubble index `β`, `1 <= β <= p - 3`.
    Bubble { beta: usize },
}

/// A local shape function identified by index `m` and by `(s, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LocalShapeId {
    pub m: usize,
    pub p: usize,
    pub s: usize,
    pub kind: ShapeKind,
}

/// Value and reference gradient of a shape function at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ShapeValue {
    pub value: f64,
    pub grad_xi: f64,
    pub grad_eta: f64,
}

/// Local index of slot `s` at degree `p`.
pub fn local_index(s: usize, p: usize) -> usize {
    assert!(p >= 1 && s >= 1 && s <= count_of_degree(p), "no slot {s} at degree {p}");
    if p == 1 {
        s
    } else {
        dim_trunk_space(p - 1) + s
    }
}

/// Inverse of [`local_index`].
pub fn shape_index(m: usize) -> LocalShapeId {
    assert!(m >= 1, "local shape functions are numbered from 1");
    let mut p = 1;
    while dim_trunk_space(p) < m {
        p += 1;
    }
    let s = if p == 1 { m } else { m - dim_trunk_space(p - 1) };
    let kind = if p == 1 {
        ShapeKind::Nodal { node: s }
    } else if s <= 4 {
        ShapeKind::Edge { edge: s }
    } else {
        ShapeKind::Bubble { beta: s - 4 }
    };
    LocalShapeId { m, p, s, kind }
}

/// Scratch tables of `N_1..N_{p+1}` at `ξ`, `-ξ`, `η`, `-η`.
struct Tables {
    xi: (Vec<f64>, Vec<f64>),
    mxi: (Vec<f64>, Vec<f64>),
    eta: (Vec<f64>, Vec<f64>),
    meta: (Vec<f64>, Vec<f64>),
}

impl Tables {
    fn new(p: usize) -> Self {
        let n = p + 1;
        let pair = || (vec![0.0; n], vec![0.0; n]);
        Self { xi: pair(), mxi: pair(), eta: pair(), meta: pair() }
    }

    fn fill(&mut self, xi: f64, eta: f64) {
        shape1d_table(xi, &mut self.xi.0, &mut self.xi.1);
        shape1d_table(-xi, &mut self.mxi.0, &mut self.mxi.1);
        shape1d_table(eta, &mut self.eta.0, &mut self.eta.1);
        shape1d_table(-eta, &mut self.meta.0, &mut self.meta.1);
    }

    /// `(φ_q(t), φ_q'(t))` from a table; `φ_q = N_{q+1}` sits at entry `q`.
    #[inline]
    fn phi(t: &(Vec<f64>, Vec<f64>), q: usize) -> (f64, f64) {
        (t.0[q], t.1[q])
    }

    fn eval(&self, id: &LocalShapeId, xi: f64, eta: f64) -> ShapeValue {
        match id.kind {
            ShapeKind::Nodal { node } => {
                let [cx, cy] = REFERENCE_CORNERS[node - 1];
                let fx = 1.0 + cx * xi;
                let fy = 1.0 + cy * eta;
                ShapeValue { value: 0.25 * fx * fy, grad_xi: 0.25 * cx * fy, grad_eta: 0.25 * fx * cy }
            }
            ShapeKind::Edge { edge } => {
                let q = id.p;
                match edge {
                    1 => {
                        let (f, df) = Self::phi(&self.xi, q);
                        let b = 0.5 * (1.0 - eta);
                        ShapeValue { value: b * f, grad_xi: b * df, grad_eta: -0.5 * f }
                    }
                    2 => {
                        let (f, df) = Self::phi(&self.eta, q);
                        let b = 0.5 * (1.0 + xi);
                        ShapeValue { value: b * f, grad_xi: 0.5 * f, grad_eta: b * df }
                    }
                    3 => {
                        let (f, df) = Self::phi(&self.mxi, q);
                        let b = 0.5 * (1.0 + eta);
                        ShapeValue { value: b * f, grad_xi: -b * df, grad_eta: 0.5 * f }
                    }
                    4 => {
                        let (f, df) = Self::phi(&self.meta, q);
                        let b = 0.5 * (1.0 - xi);
                        ShapeValue { value: b * f, grad_xi: -0.5 * f, grad_eta: -b * df }
                    }
                    _ => unreachable!(),
                }
            }
            ShapeKind::Bubble { beta } => {
                let (fx, dfx) = Self::phi(&self.xi, id.p - beta - 1);
                let (fy, dfy) = Self::phi(&self.eta, beta + 1);
                ShapeValue { value: fx * fy, grad_xi: dfx * fy, grad_eta: fx * dfy }
            }
        }
    }
}

fn check_point(xi: f64, eta: f64) {
    debug_assert!(
        xi.abs() <= 1.0 + 1e-12 && eta.abs() <= 1.0 + 1e-12,
        "({xi}, {eta}) outside the reference square"
    );
}

/// Value and reference gradient of local function `m` at `(xi, eta)`.
pub fn shape2d_eval(m: usize, xi: f64, eta: f64) -> ShapeValue {
    check_point(xi, eta);
    let id = shape_index(m);
    assert!(id.p <= MAX_DEGREE, "local index {m} exceeds degree {MAX_DEGREE}");
    let mut t = Tables::new(id.p);
    t.fill(xi, eta);
    t.eval(&id, xi, eta)
}

/// All `dim_trunk_space(p)` functions evaluated at a list of points.
#[derive(Debug, Clone)]
pub struct ShapeTable {
    n_shapes: usize,
    n_points: usize,
    data: Vec<ShapeValue>,
}

impl ShapeTable {
    pub fn n_shapes(&self) -> usize {
        self.n_shapes
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    /// Function `m` (1-based) at point `q` (0-based).
    #[inline]
    pub fn get(&self, m: usize, q: usize) -> &ShapeValue {
        &self.data[q * self.n_shapes + (m - 1)]
    }

    /// All functions at point `q`, in local order.
    #[inline]
    pub fn at_point(&self, q: usize) -> &[ShapeValue] {
        &self.data[q * self.n_shapes..(q + 1) * self.n_shapes]
    }
}

/// Batched evaluation of the whole degree-`p` space.
pub fn shape2d_eval_all(p: usize, points: &[[f64; 2]]) -> ShapeTable {
    assert!((1..=MAX_DEGREE).contains(&p), "degree {p} outside 1..={MAX_DEGREE}");
    let n_shapes = dim_trunk_space(p);
    let ids: Vec<LocalShapeId> = (1..=n_shapes).map(shape_index).collect();
    let mut tables = Tables::new(p);
    let mut data = Vec::with_capacity(n_shapes * points.len());
    for &[xi, eta] in points {
        check_point(xi, eta);
        tables.fill(xi, eta);
        data.extend(ids.iter().map(|id| tables.eval(id, xi, eta)));
    }
    ShapeTable { n_shapes, n_points: points.len(), data }
}

/// Reference coordinates of the point with parameter `t` on local edge `j`.
///
/// `t = -1` is the edge's start corner `j`, `t = 1` its end corner.
pub fn edge_point(j: usize, t: f64) -> [f64; 2] {
    match j {
        1 => [t, -1.0],
        2 => [1.0, t],
        3 => [-t, 1.0],
        4 => [-1.0, -t],
        _ => panic!("no local edge {j}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis1d::shape1d_eval;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trunk_dimensions() {
        assert_eq!(dim_trunk_space(3), 12);
        assert_eq!(dim_trunk_space(4), 17);
        assert_eq!(dim_trunk_space(7), 38);
        for p in 1..=MAX_DEGREE {
            let (a, b, c) = kind_counts(p);
            assert_eq!(a + b + c, dim_trunk_space(p));
            let by_degree: usize = (1..=p).map(count_of_degree).sum();
            assert_eq!(by_degree, dim_trunk_space(p));
        }
    }

    #[test]
    fn local_index_formula_cases_agree() {
        // Two-case formula: 4(p-1) + s for p <= 4, 4(p-1) + (p-3)(p-4)/2 + s for p >= 5.
        for p in 2..=MAX_DEGREE {
            for s in 1..=count_of_degree(p) {
                let two_case = if p <= 4 { 4 * (p - 1) + s } else { 4 * (p - 1) + (p - 3) * (p - 4) / 2 + s };
                assert_eq!(local_index(s, p), two_case, "p = {p}, s = {s}");
            }
        }
    }

    #[test]
    fn shape_index_examples() {
        assert_eq!(shape_index(1), LocalShapeId { m: 1, p: 1, s: 1, kind: ShapeKind::Nodal { node: 1 } });
        assert_eq!(shape_index(17), LocalShapeId { m: 17, p: 4, s: 5, kind: ShapeKind::Bubble { beta: 1 } });
        assert_eq!(shape_index(23), LocalShapeId { m: 23, p: 5, s: 6, kind: ShapeKind::Bubble { beta: 2 } });
        assert_eq!(shape_index(10).kind, ShapeKind::Edge { edge: 2 });
    }

    #[test]
    fn index_round_trip() {
        for m in 1..=dim_trunk_space(10) {
            let id = shape_index(m);
            assert_eq!(local_index(id.s, id.p), m);
        }
    }

    #[test]
    fn counts_by_kind_match_table() {
        let table = [(1, 4, 0, 0, 4), (2, 4, 4, 0, 8), (3, 4, 8, 0, 12), (4, 4, 12, 1, 17), (5, 4, 16, 3, 23), (6, 4, 20, 6, 30), (7, 4, 24, 10, 38)];
        for (p, nodal, edge, bubble, total) in table {
            let mut counts = (0, 0, 0);
            for m in 1..=dim_trunk_space(p) {
                match shape_index(m).kind {
                    ShapeKind::Nodal { .. } => counts.0 += 1,
                    ShapeKind::Edge { .. } => counts.1 += 1,
                    ShapeKind::Bubble { .. } => counts.2 += 1,
                }
            }
            assert_eq!(counts, (nodal, edge, bubble));
            assert_eq!(dim_trunk_space(p), total);
        }
    }

    #[test]
    fn eval_examples() {
        assert_eq!(shape2d_eval(1, -1.0, -1.0).value, 1.0);
        assert_abs_diff_eq!(shape2d_eval(3, 0.0, 0.0).value, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(shape2d_eval(10, 1.0, 0.0).value, shape1d_eval(4, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn nodal_kronecker() {
        let t = shape2d_eval_all(1, &REFERENCE_CORNERS);
        for q in 0..4 {
            for m in 1..=4 {
                let expect = if m == q + 1 { 1.0 } else { 0.0 };
                assert_eq!(t.get(m, q).value, expect);
            }
        }
        assert_eq!(shape2d_eval_all(2, &[[0.1, 0.2]]).n_shapes(), 8);
    }

    #[test]
    fn partition_of_unity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let (x, y) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
            let s: f64 = (1..=4).map(|m| shape2d_eval(m, x, y).value).sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn edge_traces() {
        for q in 2..=8 {
            for j in 1..=4 {
                let m = local_index(j, q);
                for i in 0..20 {
                    let t = -1.0 + 2.0 * i as f64 / 19.0;
                    for other in 1..=4 {
                        let [x, y] = edge_point(other, t);
                        let v = shape2d_eval(m, x, y).value;
                        if other == j {
                            assert_abs_diff_eq!(v, shape1d_eval(q + 1, t), epsilon = 1e-13);
                        } else {
                            assert!(v.abs() <= 1e-13, "q={q} j={j} edge={other} t={t}: {v}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bubbles_vanish_on_boundary() {
        for m in 1..=dim_trunk_space(MAX_DEGREE) {
            if !matches!(shape_index(m).kind, ShapeKind::Bubble { .. }) {
                continue;
            }
            for j in 1..=4 {
                for i in 0..20 {
                    let [x, y] = edge_point(j, -1.0 + 2.0 * i as f64 / 19.0);
                    assert!(shape2d_eval(m, x, y).value.abs() <= 1e-13);
                }
            }
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        let pts: Vec<[f64; 2]> = (0..50).map(|_| [rng.gen_range(-0.99..0.99), rng.gen_range(-0.99..0.99)]).collect();
        let table = shape2d_eval_all(6, &pts);
        for (q, &[x, y]) in pts.iter().enumerate() {
            for m in 1..=dim_trunk_space(6) {
                let sv = table.get(m, q);
                let fx = (shape2d_eval(m, x + h, y).value - shape2d_eval(m, x - h, y).value) / (2.0 * h);
                let fy = (shape2d_eval(m, x, y + h).value - shape2d_eval(m, x, y - h).value) / (2.0 * h);
                assert!((fx - sv.grad_xi).abs() <= 1e-6 * sv.grad_xi.abs().max(1.0));
                assert!((fy - sv.grad_eta).abs() <= 1e-6 * sv.grad_eta.abs().max(1.0));
            }
        }
    }

    #[test]
    fn batch_matches_scalar() {
        let pts = [[0.3, -0.7], [-1.0, 1.0], [0.0, 0.5]];
        let table = shape2d_eval_all(7, &pts);
        assert_eq!(table.n_points(), 3);
        for (q, &[x, y]) in pts.iter().enumerate() {
            for m in 1..=38 {
                assert_eq!(*table.get(m, q), shape2d_eval(m, x, y));
            }
        }
    }
}
