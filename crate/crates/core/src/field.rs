//! Evaluation of global coefficient vectors: point values, sample grids and
//! inter-element continuity checks.

use nalgebra::DVector;

use crate::assembly::reference_mass;
use crate::basis2d::{edge_point, shape2d_eval_all, ShapeTable, ShapeValue};
use crate::dofmap::DofMap;
use crate::mesh::Mesh;
use crate::quadrature::QuadRule;
use crate::{Error, Result};

/// Value and physical gradient of a discrete field at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValue {
    pub value: f64,
    pub grad: [f64; 2],
}

fn check(mesh: &Mesh, dofmap: &DofMap, coeffs: &[f64]) -> Result<()> {
    if !dofmap.is_on(mesh) {
        return Err(Error::MeshMismatch);
    }
    if coeffs.len() != dofmap.n_global() {
        return Err(Error::DimensionMismatch { expected: dofmap.n_global(), found: coeffs.len() });
    }
    Ok(())
}

/// Signed local coefficients `S_lk c_{C_lk}` of element `k`.
pub fn local_coefficients(dofmap: &DofMap, coeffs: &[f64], k: usize) -> Vec<f64> {
    dofmap.element_dofs(k).iter().zip(dofmap.element_signs(k)).map(|(&g, &s)| f64::from(s) * coeffs[g]).collect()
}

fn combine(local: &[f64], shapes: &[ShapeValue]) -> ShapeValue {
    let mut out = ShapeValue { value: 0.0, grad_xi: 0.0, grad_eta: 0.0 };
    for (c, sv) in local.iter().zip(shapes) {
        out.value += c * sv.value;
        out.grad_xi += c * sv.grad_xi;
        out.grad_eta += c * sv.grad_eta;
    }
    out
}

/// Field value at reference point `(ξ, η)` of element `k`.
pub fn evaluate(mesh: &Mesh, dofmap: &DofMap, coeffs: &[f64], k: usize, xi: f64, eta: f64) -> Result<f64> {
    check(mesh, dofmap, coeffs)?;
    let table = shape2d_eval_all(dofmap.degree().get(), &[[xi, eta]]);
    Ok(combine(&local_coefficients(dofmap, coeffs, k), table.at_point(0)).value)
}

/// Field value and physical gradient at `(ξ, η)` of element `k`.
pub fn evaluate_with_gradient(mesh: &Mesh, dofmap: &DofMap, coeffs: &[f64], k: usize, xi: f64, eta: f64) -> Result<FieldValue> {
    check(mesh, dofmap, coeffs)?;
    let table = shape2d_eval_all(dofmap.degree().get(), &[[xi, eta]]);
    let r = combine(&local_coefficients(dofmap, coeffs, k), table.at_point(0));
    let jac = mesh.geometry(k).jacobian(xi, eta)?;
    Ok(FieldValue { value: r.value, grad: jac.physical_gradient(r.grad_xi, r.grad_eta) })
}

/// `n` equispaced points per direction on `[-1, 1]`, endpoints included.
pub fn reference_grid(n: usize) -> Vec<[f64; 2]> {
    let t = |i: usize| if n == 1 { 0.0 } else { -1.0 + 2.0 * i as f64 / (n - 1) as f64 };
    (0..n).flat_map(|j| (0..n).map(move |i| [t(i), t(j)])).collect()
}

/// `(x, y, value)` samples on an `n x n` reference grid in every element,
/// element by element.
pub fn sample(mesh: &Mesh, dofmap: &DofMap, coeffs: &[f64], n: usize) -> Result<Vec<[f64; 3]>> {
    check(mesh, dofmap, coeffs)?;
    let points = reference_grid(n);
    let table = shape2d_eval_all(dofmap.degree().get(), &points);
    let mut out = Vec::with_capacity(mesh.num_elements() * points.len());
    for k in 0..mesh.num_elements() {
        let geom = mesh.geometry(k);
        let local = local_coefficients(dofmap, coeffs, k);
        for (q, &[xi, eta]) in points.iter().enumerate() {
            let [x, y] = geom.map(xi, eta);
            out.push([x, y, combine(&local, table.at_point(q)).value]);
        }
    }
    Ok(out)
}

/// L2 projection of `f(ξ, η)` onto the degree-`p` space of the reference
/// square, `rhs_points` Gauss points per direction for `∫ f N_m`.
pub fn project_reference(p: usize, f: impl Fn(f64, f64) -> f64, rhs_points: usize) -> Result<Vec<f64>> {
    let rule = QuadRule::tensor_gauss(rhs_points)?;
    let table = shape2d_eval_all(p, &rule.points);
    let mut rhs = DVector::zeros(table.n_shapes());
    for (q, (&[xi, eta], &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
        let fw = w * f(xi, eta);
        for (r, sv) in rhs.iter_mut().zip(table.at_point(q)) {
            *r += fw * sv.value;
        }
    }
    let chol = reference_mass(p).cholesky().ok_or_else(|| Error::Factorization("reference mass matrix".into()))?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

/// Value of `Σ c_m N_m(ξ, η)` on the reference square.
pub fn evaluate_reference(coeffs: &[f64], table: &ShapeTable, q: usize) -> f64 {
    coeffs.iter().zip(table.at_point(q)).map(|(c, sv)| c * sv.value).sum()
}

/// Largest jump across interior edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityReport {
    pub max_jump: f64,
    /// Edge (0-based) with the largest nonzero jump.
    pub worst_edge: Option<usize>,
    pub edges_checked: usize,
}

/// Evaluates the field from both sides of every interior edge at the given
/// parameters in `[-1, 1]`, measured from the edge's first node.
pub fn continuity_defect(mesh: &Mesh, dofmap: &DofMap, coeffs: &[f64], params: &[f64]) -> Result<ContinuityReport> {
    check(mesh, dofmap, coeffs)?;
    let p = dofmap.degree().get();
    // Traces on each local edge, in both directions.
    let traces: Vec<[ShapeTable; 2]> = (1..=4)
        .map(|j| {
            let fwd: Vec<_> = params.iter().map(|&t| edge_point(j, t)).collect();
            let bwd: Vec<_> = params.iter().map(|&t| edge_point(j, -t)).collect();
            [shape2d_eval_all(p, &fwd), shape2d_eval_all(p, &bwd)]
        })
        .collect();
    let mut report = ContinuityReport { max_jump: 0.0, worst_edge: None, edges_checked: 0 };
    for (e, &[a, _]) in mesh.edges().iter().enumerate() {
        let sides: Vec<(usize, usize)> = mesh.edge_elements(e).collect();
        let [(k1, j1), (k2, j2)] = match sides.as_slice() {
            &[s1, s2] => [s1, s2],
            _ => continue,
        };
        report.edges_checked += 1;
        let trace = |k: usize, j: usize| {
            let forward = mesh.elements()[k][j] == a;
            let table = &traces[j][usize::from(!forward)];
            let local = local_coefficients(dofmap, coeffs, k);
            (0..params.len()).map(move |q| combine(&local, table.at_point(q)).value)
        };
        for (u, v) in trace(k1, j1).zip(trace(k2, j2)) {
            let jump = (u - v).abs();
            if jump > report.max_jump {
                report.max_jump = jump;
                report.worst_edge = Some(e);
            }
        }
    }
    Ok(report)
}
