//! The diffusion-reaction problem `-Δu + νu = f` with natural (zero
//! Neumann) boundary conditions, its Galerkin solution, energy-norm errors
//! and the h/p convergence study.
//!
//! Errors are measured against a reference approximation `ũ` of the exact
//! solution in the degree `p̃ = p_max + 2` space: the `(K + M)`-orthogonal
//! projection of `u`. The error of `u_n` is then `sqrt(dᵀ (K + M) d)` with
//! `d = ũ - u_n` after padding `u_n` to degree `p̃`.

use std::ops::RangeInclusive;
use std::sync::Arc;
use std::time::Instant;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet as FaerTriplet};
use faer::Side;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, assemble_linear_form, AssemblyOptions, MatrixKind};
use crate::dofmap::{embed_coefficients, DofMap};
use crate::mesh::{rectangulate, refine_uniform, Mesh, Rect};
use crate::quadrature::QuadRule;
use crate::sparse::SparseMatrix;
use crate::{Error, PolyDegree, Result};

pub type ScalarField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Conjugate gradients with a diagonal preconditioner.
    Cg,
    /// Sparse Cholesky factorization.
    Direct,
    /// Direct up to [`SolveOptions::direct_threshold`] unknowns, CG above.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub kind: SolverKind,
    /// Relative residual target for CG.
    pub tol: f64,
    /// CG gives up after `max_iter_factor * n` iterations.
    pub max_iter_factor: usize,
    pub direct_threshold: usize,
    pub assembly: AssemblyOptions,
    /// Gauss points per direction for the load vector; `None` means `p + 2`.
    pub load_quad_order: Option<usize>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            kind: SolverKind::Auto,
            tol: 1e-12,
            max_iter_factor: 20,
            direct_threshold: 20_000,
            assembly: AssemblyOptions::default(),
            load_quad_order: None,
        }
    }
}

#[derive(Clone)]
pub struct ExactSolution {
    pub u: ScalarField,
    pub grad: VectorField,
}

/// `-Δu + νu = f` on the mesh domain with zero Neumann data.
#[derive(Clone)]
pub struct BvpProblem {
    nu: f64,
    f: ScalarField,
    exact: Option<ExactSolution>,
}

impl std::fmt::Debug for BvpProblem {
    fn fmt(&self, fmt: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fmt.debug_struct("BvpProblem").field("nu", &self.nu).field("has_exact", &self.exact.is_some()).finish()
    }
}

/// `(1 - x²)² (1 - y²)²`, which has zero normal derivative on `∂[-1, 1]²`.
pub fn manufactured_u(x: f64, y: f64) -> f64 {
    let (a, b) = (1.0 - x * x, 1.0 - y * y);
    a * a * b * b
}

pub fn manufactured_grad(x: f64, y: f64) -> [f64; 2] {
    let (a, b) = (1.0 - x * x, 1.0 - y * y);
    [-4.0 * x * a * b * b, -4.0 * y * b * a * a]
}

/// Right-hand side matching [`manufactured_u`] for reaction coefficient `nu`.
pub fn manufactured_f(nu: f64, x: f64, y: f64) -> f64 {
    let (x2, y2) = (x * x, y * y);
    let laplacian_part = -2.0 + 5.0 * y2 - y2 * y2 + x2 * x2 * (-1.0 + 3.0 * y2) + x2 * (5.0 - 12.0 * y2 + 3.0 * y2 * y2);
    nu * manufactured_u(x, y) - 4.0 * laplacian_part
}

impl BvpProblem {
    pub fn new(nu: f64, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::NonPositiveReaction(nu));
        }
        Ok(Self { nu, f: Arc::new(f), exact: None })
    }

    pub fn with_exact(
        mut self,
        u: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        grad: impl Fn(f64, f64) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        self.exact = Some(ExactSolution { u: Arc::new(u), grad: Arc::new(grad) });
        self
    }

    /// The manufactured problem on `[-1, 1]²` with exact solution
    /// [`manufactured_u`].
    pub fn manufactured(nu: f64) -> Result<Self> {
        Ok(Self::new(nu, move |x, y| manufactured_f(nu, x, y))?.with_exact(manufactured_u, manufactured_grad))
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn f(&self, x: f64, y: f64) -> f64 {
        (self.f)(x, y)
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        self.exact.as_ref()
    }
}

/// Discrete solution: coefficients in the global hierarchic basis.
#[derive(Debug, Clone)]
pub struct Solution {
    pub dofmap: DofMap,
    pub coeffs: Vec<f64>,
    pub iterations: usize,
    /// Final `‖b - Ax‖ / ‖b‖`.
    pub residual: f64,
}

impl Solution {
    pub fn degree(&self) -> PolyDegree {
        self.dofmap.degree()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    let nb = norm(b);
    if nb == 0.0 {
        norm(&r)
    } else {
        norm(&r) / nb
    }
}

/// Jacobi-preconditioned conjugate gradients. Returns the solution and the
/// iteration count.
pub fn pcg(a: &SparseMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let mut x = vec![0.0; n];
    let nb = norm(b);
    if nb == 0.0 {
        return Ok((x, 0));
    }
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NoConvergence { iterations: it, residual: norm(&r) / nb });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) <= tol * nb {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: relative_residual(a, &x, b) })
}

/// Solves a symmetric positive definite system by sparse Cholesky.
pub fn cholesky_solve(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let lower: Vec<FaerTriplet<usize, usize, f64>> =
        a.triplets().filter(|&(i, j, _)| i >= j).map(|(i, j, v)| FaerTriplet::new(i, j, v)).collect();
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &lower).map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let llt = mat.sp_cholesky(Side::Lower).map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let mut rhs = faer::Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    llt.solve_in_place(rhs.as_mut());
    Ok((0..n).map(|i| rhs[(i, 0)]).collect())
}

/// Solves `A x = b` with the configured method. Returns the solution, the
/// iteration count (0 for direct) and the relative residual.
pub fn solve_linear(a: &SparseMatrix, b: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, usize, f64)> {
    let direct = match opts.kind {
        SolverKind::Direct => true,
        SolverKind::Cg => false,
        SolverKind::Auto => a.dim() <= opts.direct_threshold,
    };
    let (x, iterations) = if direct {
        (cholesky_solve(a, b)?, 0)
    } else {
        pcg(a, b, opts.tol, opts.max_iter_factor.saturating_mul(a.dim()).max(1))?
    };
    let residual = relative_residual(a, &x, b);
    Ok((x, iterations, residual))
}

fn load_rule(p: usize, opts: &SolveOptions) -> Result<QuadRule> {
    QuadRule::tensor_gauss(opts.load_quad_order.unwrap_or(p + 2))
}

/// Galerkin solution of `(K + νM) u = b` in the degree-`p` space.
pub fn solve_bvp(mesh: &Mesh, p: PolyDegree, problem: &BvpProblem, opts: &SolveOptions) -> Result<Solution> {
    let dofmap = DofMap::new(mesh, p);
    let k = assemble(mesh, &dofmap, MatrixKind::Stiffness, &opts.assembly)?;
    let m = assemble(mesh, &dofmap, MatrixKind::Mass, &opts.assembly)?;
    let a = SparseMatrix::linear_combination(1.0, &k, problem.nu, &m)?;
    let rule = load_rule(p.get(), opts)?;
    let f = &problem.f;
    let b = assemble_linear_form(mesh, &dofmap, &rule, |x, y| (f(x, y), [0.0, 0.0]))?;
    let (coeffs, iterations, residual) = solve_linear(&a, &b, opts)?;
    Ok(Solution { dofmap, coeffs, iterations, residual })
}

/// `K + M` at degree `p`, the matrix of the energy inner product.
pub fn energy_matrix(mesh: &Mesh, dofmap: &DofMap, opts: &AssemblyOptions) -> Result<SparseMatrix> {
    let k = assemble(mesh, dofmap, MatrixKind::Stiffness, opts)?;
    let m = assemble(mesh, dofmap, MatrixKind::Mass, opts)?;
    SparseMatrix::linear_combination(1.0, &k, 1.0, &m)
}

fn project_with(mesh: &Mesh, dofmap: DofMap, energy: &SparseMatrix, exact: &ExactSolution, opts: &SolveOptions) -> Result<Solution> {
    let p = dofmap.degree().get();
    let rule = load_rule(p, opts)?;
    let (u, grad) = (&exact.u, &exact.grad);
    let r = assemble_linear_form(mesh, &dofmap, &rule, |x, y| (u(x, y), grad(x, y)))?;
    let (coeffs, iterations, residual) = solve_linear(energy, &r, opts)?;
    Ok(Solution { dofmap, coeffs, iterations, residual })
}

/// Energy projection of the exact solution onto the degree-`p_tilde` space.
pub fn project_exact(mesh: &Mesh, p_tilde: PolyDegree, problem: &BvpProblem, opts: &SolveOptions) -> Result<Solution> {
    let exact = problem.exact().ok_or(Error::MissingExactSolution)?;
    let dofmap = DofMap::new(mesh, p_tilde);
    let energy = energy_matrix(mesh, &dofmap, &opts.assembly)?;
    project_with(mesh, dofmap, &energy, exact, opts)
}

/// `sqrt(dᵀ A d)` with `d = reference - sol` after embedding `sol` into the
/// reference space; `energy` is `K + M` at the reference degree.
pub fn energy_error(sol: &Solution, reference: &Solution, energy: &SparseMatrix) -> Result<f64> {
    let embedded = embed_coefficients(&sol.coeffs, &sol.dofmap, &reference.dofmap)?;
    if energy.dim() != embedded.len() || reference.coeffs.len() != embedded.len() {
        return Err(Error::DimensionMismatch { expected: energy.dim(), found: embedded.len() });
    }
    let d: Vec<f64> = reference.coeffs.iter().zip(&embedded).map(|(a, b)| a - b).collect();
    Ok(energy.quadratic_form(&d).max(0.0).sqrt())
}

/// One cell of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub level: u32,
    pub p: usize,
    pub n_p: usize,
    pub energy_error: f64,
    pub solve_iterations: usize,
    /// Seconds spent assembling and solving this cell.
    pub wall_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StudyOptions {
    /// Reference degree; `None` means `p_max + 2`.
    pub p_tilde: Option<usize>,
    pub solve: SolveOptions,
}

/// Solves on uniform meshes of `domain` for every level and `p = 1..=p_max`,
/// measuring each error against the energy projection at degree `p̃`.
pub fn convergence_study(
    domain: Rect,
    levels: RangeInclusive<u32>,
    p_max: PolyDegree,
    problem: &BvpProblem,
    opts: &StudyOptions,
) -> Result<Vec<ConvergenceRecord>> {
    let base = rectangulate(domain, 1, 1)?;
    convergence_study_on(&base, levels, p_max, problem, opts, |_, _, _| {})
}

/// Convergence study on `base` refined `level` times for each level,
/// calling `progress` with each cell's record, mesh and solution.
pub fn convergence_study_on(
    base: &Mesh,
    levels: RangeInclusive<u32>,
    p_max: PolyDegree,
    problem: &BvpProblem,
    opts: &StudyOptions,
    mut progress: impl FnMut(&ConvergenceRecord, &Mesh, &Solution),
) -> Result<Vec<ConvergenceRecord>> {
    let exact = problem.exact().ok_or(Error::MissingExactSolution)?;
    let p_tilde = PolyDegree::new(opts.p_tilde.unwrap_or(p_max.get() + 2))?;
    if p_tilde < p_max {
        return Err(Error::DegreeOrder { from: p_max.get(), to: p_tilde.get() });
    }
    let mut records = Vec::new();
    let mut mesh = base.clone();
    let mut current = 0;
    for level in levels {
        while current < level {
            mesh = refine_uniform(&mesh);
            current += 1;
        }
        let ref_map = DofMap::new(&mesh, p_tilde);
        let energy = energy_matrix(&mesh, &ref_map, &opts.solve.assembly)?;
        let reference = project_with(&mesh, ref_map, &energy, exact, &opts.solve)?;
        for p in 1..=p_max.get() {
            let start = Instant::now();
            let sol = solve_bvp(&mesh, PolyDegree::new(p)?, problem, &opts.solve)?;
            let wall_time = start.elapsed().as_secs_f64();
            let record = ConvergenceRecord {
                level,
                p,
                n_p: sol.coeffs.len(),
                energy_error: energy_error(&sol, &reference, &energy)?,
                solve_iterations: sol.iterations,
                wall_time,
            };
            progress(&record, &mesh, &sol);
            records.push(record);
        }
    }
    Ok(records)
}

/// Observed rates `log2(e_L / e_{L+1})` at degree `p`, keyed by the finer
/// level.
pub fn observed_rates(records: &[ConvergenceRecord], p: usize) -> Vec<(u32, f64)> {
    let mut at_p: Vec<&ConvergenceRecord> = records.iter().filter(|r| r.p == p).collect();
    at_p.sort_by_key(|r| r.level);
    at_p.windows(2)
        .filter(|w| w[1].level == w[0].level + 1)
        .map(|w| (w[1].level, (w[0].energy_error / w[1].energy_error).log2()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_rule_1d;

    fn deg(p: usize) -> PolyDegree {
        PolyDegree::new(p).unwrap()
    }

    fn single() -> Mesh {
        rectangulate(Rect::reference(), 1, 1).unwrap()
    }

    #[test]
    fn rejects_nonpositive_reaction() {
        assert!(matches!(BvpProblem::new(0.0, |_, _| 1.0), Err(Error::NonPositiveReaction(_))));
        assert!(BvpProblem::new(-1.0, |_, _| 1.0).is_err());
        assert!(BvpProblem::new(f64::NAN, |_, _| 1.0).is_err());
    }

    #[test]
    fn manufactured_data_is_consistent() {
        // -Δu + νu = f, with the Laplacian by central differences.
        let nu = 0.1;
        let h = 1e-4;
        for &(x, y) in &[(0.1, 0.2), (-0.7, 0.4), (0.55, -0.95), (0.0, 0.0)] {
            let lap = (manufactured_u(x + h, y) + manufactured_u(x - h, y) + manufactured_u(x, y + h) + manufactured_u(x, y - h)
                - 4.0 * manufactured_u(x, y))
                / (h * h);
            assert!((-lap + nu * manufactured_u(x, y) - manufactured_f(nu, x, y)).abs() < 1e-6);
            let g = manufactured_grad(x, y);
            let gx = (manufactured_u(x + h, y) - manufactured_u(x - h, y)) / (2.0 * h);
            assert!((g[0] - gx).abs() < 1e-7);
        }
    }

    #[test]
    fn constants_are_reproduced() {
        let mesh = Mesh::uniform_level(Rect::new(0.0, 1.0, 0.0, 2.0), 2).unwrap();
        let nu = 0.3;
        let c = 2.5;
        let problem = BvpProblem::new(nu, move |_, _| nu * c).unwrap();
        for p in [1, 3, 5] {
            let sol = solve_bvp(&mesh, deg(p), &problem, &SolveOptions::default()).unwrap();
            let nn = mesh.num_nodes();
            assert!(sol.coeffs[..nn].iter().all(|v| (v - c).abs() < 1e-10));
            assert!(sol.coeffs[nn..].iter().all(|v| v.abs() < 1e-10));
            assert!(sol.residual <= 1e-10);
        }
    }

    #[test]
    fn single_element_recovers_degree_eight_solution() {
        let problem = BvpProblem::manufactured(0.1).unwrap();
        let opts = SolveOptions::default();
        let sol = solve_bvp(&single(), deg(8), &problem, &opts).unwrap();
        let reference = project_exact(&single(), deg(10), &problem, &opts).unwrap();
        let energy = energy_matrix(&single(), &reference.dofmap, &opts.assembly).unwrap();
        assert!(energy_error(&sol, &reference, &energy).unwrap() <= 1e-9);
    }

    #[test]
    fn projection_of_one_is_nodal() {
        let mesh = Mesh::uniform_level(Rect::reference(), 1).unwrap();
        let problem = BvpProblem::new(1.0, |_, _| 1.0).unwrap().with_exact(|_, _| 1.0, |_, _| [0.0, 0.0]);
        let sol = project_exact(&mesh, deg(4), &problem, &SolveOptions::default()).unwrap();
        assert!(sol.coeffs[..9].iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(sol.coeffs[9..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_solution_error_is_energy_norm() {
        let problem = BvpProblem::manufactured(0.1).unwrap();
        let opts = SolveOptions::default();
        let mesh = single();
        let reference = project_exact(&mesh, deg(8), &problem, &opts).unwrap();
        let energy = energy_matrix(&mesh, &reference.dofmap, &opts.assembly).unwrap();
        let zero = Solution { dofmap: DofMap::new(&mesh, deg(1)), coeffs: vec![0.0; 4], iterations: 0, residual: 0.0 };
        let e = energy_error(&zero, &reference, &energy).unwrap();
        let (x, w) = gauss_rule_1d(12).unwrap();
        let mut norm2 = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            for (yj, wj) in x.iter().zip(&w) {
                let g = manufactured_grad(*xi, *yj);
                norm2 += wi * wj * (g[0] * g[0] + g[1] * g[1] + manufactured_u(*xi, *yj).powi(2));
            }
        }
        assert!((e - norm2.sqrt()).abs() < 1e-10 * norm2.sqrt());
        assert_eq!(energy_error(&reference, &reference, &energy).unwrap(), 0.0);
    }

    #[test]
    fn errors_decrease_with_p() {
        let problem = BvpProblem::manufactured(0.1).unwrap();
        let records = convergence_study(Rect::reference(), 1..=2, deg(5), &problem, &StudyOptions::default()).unwrap();
        assert_eq!(records.len(), 10);
        for level in 1..=2 {
            let e: Vec<f64> = records.iter().filter(|r| r.level == level).map(|r| r.energy_error).collect();
            assert!(e.windows(2).all(|w| w[1] <= w[0] + 1e-13), "{e:?}");
        }
        assert!(records[1].energy_error < records[0].energy_error);
    }

    #[test]
    fn cg_and_direct_agree() {
        let mesh = Mesh::uniform_level(Rect::reference(), 3).unwrap();
        let problem = BvpProblem::manufactured(0.1).unwrap();
        let cg = SolveOptions { kind: SolverKind::Cg, ..SolveOptions::default() };
        let direct = SolveOptions { kind: SolverKind::Direct, ..SolveOptions::default() };
        let a = solve_bvp(&mesh, deg(4), &problem, &cg).unwrap();
        let b = solve_bvp(&mesh, deg(4), &problem, &direct).unwrap();
        assert!(a.iterations > 0 && b.iterations == 0);
        let energy = energy_matrix(&mesh, &a.dofmap, &AssemblyOptions::default()).unwrap();
        let d: Vec<f64> = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x - y).collect();
        assert!(energy.quadratic_form(&d).sqrt() <= 1e-9);
    }

    #[test]
    fn cg_reports_stagnation() {
        let a = SparseMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1e6), (2, 2, 1e-6), (0, 1, 0.5), (1, 0, 0.5)], true);
        let err = pcg(&a, &[1.0, 1.0, 1.0], 1e-30, 1).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 1, .. }));
    }

    #[test]
    fn rates_from_records() {
        let rec = |level, e| ConvergenceRecord { level, p: 1, n_p: 0, energy_error: e, solve_iterations: 0, wall_time: 0.0 };
        let r = observed_rates(&[rec(2, 0.4), rec(3, 0.2), rec(4, 0.1)], 1);
        assert_eq!(r, vec![(3, 1.0), (4, 1.0)]);
    }
}
