//! Reference, local and global mass/stiffness matrices and load vectors.
//!
//! Local matrices are integrated with a tensor Gauss rule, by default
//! `p + 1` points per direction. That is exact for mass and stiffness
//! integrands on axis-aligned rectangles; distorted quadrilaterals have
//! rational stiffness integrands and may want a higher order
//! (see [`AssemblyOptions::quad_order`]).
//!
//! Element `k` contributes `S_ik S_jk A_ij(T_k)` at `(C_ik, C_jk)`. Rows are
//! gathered from their incident elements rather than scattered through a
//! global triplet list, which keeps the working set small on large meshes.
//! Elements with identical shape (up to translation) share one local matrix.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::basis2d::{dim_trunk_space, shape2d_eval_all, ShapeTable};
use crate::dofmap::DofMap;
use crate::mesh::{Mesh, QuadGeometry};
use crate::quadrature::{reference_rule, QuadRule};
use crate::sparse::SparseMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Mass,
    Stiffness,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssemblyOptions {
    /// Gauss points per direction; `None` means `p + 1`.
    pub quad_order: Option<usize>,
    pub parallelism: Parallelism,
    /// Share local matrices between congruent elements.
    pub reuse_local: bool,
    /// Use `|T|/4 M_ref` for the mass matrix of axis-aligned rectangles.
    pub mass_fast_path: bool,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { quad_order: None, parallelism: Parallelism::Parallel, reuse_local: true, mass_fast_path: true }
    }
}

impl AssemblyOptions {
    pub fn serial() -> Self {
        Self { parallelism: Parallelism::Serial, ..Self::default() }
    }

    pub fn rule(&self, p: usize) -> Result<QuadRule> {
        match self.quad_order {
            Some(n) => QuadRule::tensor_gauss(n),
            None => Ok(reference_rule(p)),
        }
    }
}

fn mass_from_table(table: &ShapeTable, weights: impl Iterator<Item = f64>) -> DMatrix<f64> {
    let n = table.n_shapes();
    let mut m = DMatrix::zeros(n, n);
    for (q, w) in weights.enumerate() {
        let vals = table.at_point(q);
        for j in 0..n {
            let wj = w * vals[j].value;
            for i in j..n {
                m[(i, j)] += wj * vals[i].value;
            }
        }
    }
    m.fill_upper_triangle_with_lower_triangle();
    m
}

/// `∫ N_i N_j` over the reference square with the given rule.
pub fn reference_mass_with(p: usize, rule: &QuadRule) -> DMatrix<f64> {
    let table = shape2d_eval_all(p, &rule.points);
    mass_from_table(&table, rule.weights.iter().copied())
}

/// `∫ ∇N_i · ∇N_j` over the reference square with the given rule.
pub fn reference_stiffness_with(p: usize, rule: &QuadRule) -> DMatrix<f64> {
    let table = shape2d_eval_all(p, &rule.points);
    let n = table.n_shapes();
    let mut k = DMatrix::zeros(n, n);
    for (q, &w) in rule.weights.iter().enumerate() {
        let vals = table.at_point(q);
        for j in 0..n {
            let (gx, gy) = (w * vals[j].grad_xi, w * vals[j].grad_eta);
            for i in j..n {
                k[(i, j)] += gx * vals[i].grad_xi + gy * vals[i].grad_eta;
            }
        }
    }
    k.fill_upper_triangle_with_lower_triangle();
    k
}

/// Reference mass matrix with the default rule.
pub fn reference_mass(p: usize) -> DMatrix<f64> {
    reference_mass_with(p, &reference_rule(p))
}

/// Reference stiffness matrix with the default rule.
pub fn reference_stiffness(p: usize) -> DMatrix<f64> {
    reference_stiffness_with(p, &reference_rule(p))
}

/// Per-rule data shared by every element of one assembly.
struct LocalKernel<'a> {
    rule: &'a QuadRule,
    table: ShapeTable,
}

impl<'a> LocalKernel<'a> {
    fn new(p: usize, rule: &'a QuadRule) -> Self {
        Self { rule, table: shape2d_eval_all(p, &rule.points) }
    }

    fn mass_quadrature(&self, geom: &QuadGeometry) -> Result<DMatrix<f64>> {
        let dets = self
            .rule
            .points
            .iter()
            .zip(&self.rule.weights)
            .map(|(&[xi, eta], &w)| geom.jacobian(xi, eta).map(|j| w * j.det))
            .collect::<Result<Vec<_>>>()?;
        Ok(mass_from_table(&self.table, dets.into_iter()))
    }

    fn mass(&self, geom: &QuadGeometry, fast_path: bool) -> Result<DMatrix<f64>> {
        if fast_path && geom.is_axis_aligned_rectangle() {
            let reference = mass_from_table(&self.table, self.rule.weights.iter().copied());
            Ok(reference * (geom.signed_area() / 4.0))
        } else {
            self.mass_quadrature(geom)
        }
    }

    fn stiffness(&self, geom: &QuadGeometry) -> Result<DMatrix<f64>> {
        let n = self.table.n_shapes();
        let mut k = DMatrix::zeros(n, n);
        let mut grads = vec![[0.0; 2]; n];
        for (q, (&[xi, eta], &w)) in self.rule.points.iter().zip(&self.rule.weights).enumerate() {
            let jac = geom.jacobian(xi, eta)?;
            let scale = w * jac.det;
            for (g, sv) in grads.iter_mut().zip(self.table.at_point(q)) {
                *g = jac.physical_gradient(sv.grad_xi, sv.grad_eta);
            }
            for j in 0..n {
                let (gx, gy) = (scale * grads[j][0], scale * grads[j][1]);
                for i in j..n {
                    k[(i, j)] += gx * grads[i][0] + gy * grads[i][1];
                }
            }
        }
        k.fill_upper_triangle_with_lower_triangle();
        Ok(k)
    }

    fn matrix(&self, geom: &QuadGeometry, kind: MatrixKind, fast_path: bool) -> Result<DMatrix<f64>> {
        match kind {
            MatrixKind::Mass => self.mass(geom, fast_path),
            MatrixKind::Stiffness => self.stiffness(geom),
        }
    }
}

/// Local mass matrix; axis-aligned rectangles use `|T|/4 M_ref`.
pub fn local_mass(geom: &QuadGeometry, p: usize, rule: &QuadRule) -> Result<DMatrix<f64>> {
    if !geom.is_axis_aligned_rectangle() {
        log::debug!("local mass by quadrature for non-rectangular element {:?}", geom.nodes);
    }
    LocalKernel::new(p, rule).mass(geom, true)
}

/// Local mass matrix by quadrature with `|det J|` weights, for any element.
pub fn local_mass_quadrature(geom: &QuadGeometry, p: usize, rule: &QuadRule) -> Result<DMatrix<f64>> {
    LocalKernel::new(p, rule).mass_quadrature(geom)
}

/// Local stiffness matrix via the chain rule through `(∇Q)^{-1}`.
pub fn local_stiffness(geom: &QuadGeometry, p: usize, rule: &QuadRule) -> Result<DMatrix<f64>> {
    LocalKernel::new(p, rule).stiffness(geom)
}

fn quantize(v: f64) -> u64 {
    if v == 0.0 {
        return 0;
    }
    // Round away the low 8 mantissa bits so ulp-level noise in the
    // coordinates of a tensor grid does not split congruent elements.
    (v.to_bits() + (1 << 7)) & !((1u64 << 8) - 1)
}

/// For each element, the index of the local matrix it uses, and one
/// representative element per distinct matrix.
fn congruence_classes(mesh: &Mesh, reuse: bool) -> (Vec<usize>, Vec<usize>) {
    let nt = mesh.num_elements();
    if !reuse {
        return ((0..nt).collect(), (0..nt).collect());
    }
    let mut classes: HashMap<[u64; 6], usize> = HashMap::new();
    let mut representatives = Vec::new();
    let class_of = (0..nt)
        .map(|k| {
            let key = mesh.geometry(k).shape_key().map(quantize);
            *classes.entry(key).or_insert_with(|| {
                representatives.push(k);
                representatives.len() - 1
            })
        })
        .collect();
    (class_of, representatives)
}

fn maybe_par_map<T: Send>(parallel: Parallelism, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    match parallel {
        Parallelism::Serial => (0..n).map(f).collect(),
        Parallelism::Parallel => (0..n).into_par_iter().map(f).collect(),
    }
}

/// Global mass or stiffness matrix.
pub fn assemble(mesh: &Mesh, dofmap: &DofMap, kind: MatrixKind, opts: &AssemblyOptions) -> Result<SparseMatrix> {
    if !dofmap.is_on(mesh) {
        return Err(Error::MeshMismatch);
    }
    let p = dofmap.degree().get();
    let rule = opts.rule(p)?;
    let kernel = LocalKernel::new(p, &rule);
    let (class_of, representatives) = congruence_classes(mesh, opts.reuse_local);
    if kind == MatrixKind::Mass && opts.mass_fast_path {
        let general = representatives.iter().filter(|&&k| !mesh.geometry(k).is_axis_aligned_rectangle()).count();
        if general > 0 {
            log::debug!("{general} element shapes need quadrature for the mass matrix");
        }
    }
    let locals = maybe_par_map(opts.parallelism, representatives.len(), |c| {
        kernel.matrix(&mesh.geometry(representatives[c]), kind, opts.mass_fast_path)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let n_loc = dim_trunk_space(p);
    let n = dofmap.n_global();
    let nt = mesh.num_elements();

    // Global function -> (element, local index), in increasing element order.
    let mut start = vec![0usize; n + 1];
    for k in 0..nt {
        for &g in dofmap.element_dofs(k) {
            start[g + 1] += 1;
        }
    }
    for g in 0..n {
        start[g + 1] += start[g];
    }
    let mut next = start.clone();
    let mut incident = vec![(0u32, 0u16); start[n]];
    for k in 0..nt {
        for (i, &g) in dofmap.element_dofs(k).iter().enumerate() {
            incident[next[g]] = (k as u32, i as u16);
            next[g] += 1;
        }
    }

    // Each row gathers its entries from the incident elements. Duplicates
    // are summed in element order, so the result does not depend on how
    // rows are split across threads.
    let gather = |rows: std::ops::Range<usize>| {
        let mut lens = Vec::with_capacity(rows.len());
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut row: Vec<(u32, f64)> = Vec::new();
        for g in rows {
            row.clear();
            for &(k, i) in &incident[start[g]..start[g + 1]] {
                let (k, i) = (k as usize, i as usize);
                let local = &locals[class_of[k]];
                let dofs = dofmap.element_dofs(k);
                let signs = dofmap.element_signs(k);
                for j in 0..n_loc {
                    let s = f64::from(signs[i] * signs[j]);
                    row.push((dofs[j] as u32, s * local[(i, j)]));
                }
            }
            row.sort_by_key(|&(c, _)| c);
            let before = cols.len();
            for &(c, v) in &row {
                if cols.len() > before && cols[cols.len() - 1] == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            lens.push(cols.len() - before);
        }
        (lens, cols, vals)
    };
    const ROWS_PER_TASK: usize = 2048;
    let chunks: Vec<std::ops::Range<usize>> = (0..n).step_by(ROWS_PER_TASK).map(|a| a..(a + ROWS_PER_TASK).min(n)).collect();
    let parts = match opts.parallelism {
        Parallelism::Serial => vec![gather(0..n)],
        Parallelism::Parallel => chunks.into_par_iter().map(gather).collect(),
    };

    let nnz = parts.iter().map(|(_, c, _)| c.len()).sum();
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    row_ptr.push(0);
    for (lens, cols, vals) in parts {
        for len in lens {
            row_ptr.push(row_ptr[row_ptr.len() - 1] + len);
        }
        col_idx.extend(cols);
        values.extend(vals);
    }
    Ok(SparseMatrix::from_csr(n, row_ptr, col_idx, values, true))
}

/// `b_m = ∫ (c(x) N_m + g(x) · ∇N_m)` where `integrand(x, y)` returns
/// `(c, g)`.
pub fn assemble_linear_form<F>(mesh: &Mesh, dofmap: &DofMap, rule: &QuadRule, integrand: F) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> (f64, [f64; 2]) + Sync,
{
    if !dofmap.is_on(mesh) {
        return Err(Error::MeshMismatch);
    }
    let p = dofmap.degree().get();
    let table = shape2d_eval_all(p, &rule.points);
    let n_loc = table.n_shapes();
    let local = |k: usize| -> Result<Vec<f64>> {
        let geom = mesh.geometry(k);
        let mut v = vec![0.0; n_loc];
        for (q, (&[xi, eta], &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let jac = geom.jacobian(xi, eta)?;
            let [x, y] = geom.map(xi, eta);
            let (c, g) = integrand(x, y);
            let scale = w * jac.det;
            let needs_grad = g != [0.0, 0.0];
            for (vi, sv) in v.iter_mut().zip(table.at_point(q)) {
                let mut t = c * sv.value;
                if needs_grad {
                    let [gx, gy] = jac.physical_gradient(sv.grad_xi, sv.grad_eta);
                    t += g[0] * gx + g[1] * gy;
                }
                *vi += scale * t;
            }
        }
        Ok(v)
    };
    let locals: Vec<Vec<f64>> = (0..mesh.num_elements()).into_par_iter().map(local).collect::<Result<_>>()?;
    let mut b = vec![0.0; dofmap.n_global()];
    for (k, v) in locals.iter().enumerate() {
        for ((&g, &s), &val) in dofmap.element_dofs(k).iter().zip(dofmap.element_signs(k)).zip(v) {
            b[g] += f64::from(s) * val;
        }
    }
    Ok(b)
}

/// Load vector `b_m = ∫ f N_m`.
pub fn assemble_load<F>(mesh: &Mesh, dofmap: &DofMap, f: F, rule: &QuadRule) -> Result<Vec<f64>>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    assemble_linear_form(mesh, dofmap, rule, |x, y| (f(x, y), [0.0, 0.0]))
}
