use approx::assert_relative_eq;
use hpfem::basis2d::dim_trunk_space;
use hpfem::field::continuity_defect;
use hpfem::mesh::{rectangulate, refine_uniform};
use hpfem::quadrature::gauss_rule_1d;
use hpfem::{AssemblyOptions, DofMap, MatrixKind, Mesh, PolyDegree, Rect};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A tensor grid whose interior nodes are jiggled, so elements are general convex quadrilaterals.
fn distorted_grid(nx: usize, ny: usize, amount: f64, seed: u64) -> Mesh {
    let base = rectangulate(Rect::new(0.0, nx as f64, 0.0, ny as f64), nx, ny).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = base
        .nodes()
        .iter()
        .map(|&[x, y]| {
            let interior_x = x > 0.0 && x < nx as f64;
            let interior_y = y > 0.0 && y < ny as f64;
            let dx = if interior_x { rng.gen_range(-amount..amount) } else { 0.0 };
            let dy = if interior_y { rng.gen_range(-amount..amount) } else { 0.0 };
            [x + dx, y + dy]
        })
        .collect();
    Mesh::from_parts(nodes, base.elements().to_vec()).unwrap()
}

/// Coefficients of the constant function 1: every nodal function gets 1.
fn ones_on_nodes(mesh: &Mesh, d: &DofMap) -> Vec<f64> {
    (0..d.n_global()).map(|i| if i < mesh.num_nodes() { 1.0 } else { 0.0 }).collect()
}

fn brute_force_dim(p: usize) -> usize {
    // total degree <= p plus xi^p eta and xi eta^p (for p >= 2 these are new)
    let mut n = 0;
    for i in 0..=p {
        for j in 0..=p {
            if i + j <= p || (i, j) == (p, 1) || (i, j) == (1, p) {
                n += 1;
            }
        }
    }
    n
}

#[test]
fn trunk_dimension_matches_monomial_count() {
    for p in 1..=12 {
        assert_eq!(dim_trunk_space(p), brute_force_dim(p), "p = {p}");
    }
}

#[test]
fn gauss_rules_are_exact_to_degree_2n_minus_1() {
    for n in 1..=20 {
        let (x, w) = gauss_rule_1d(n).unwrap();
        for k in 0..2 * n {
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
            assert!((q - exact).abs() < 1e-13, "n = {n}, k = {k}: {q} vs {exact}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn constants_have_zero_energy_and_unit_mass(p in 1usize..=6, nx in 1usize..=3, ny in 1usize..=3, seed in any::<u64>()) {
        let mesh = distorted_grid(nx, ny, 0.25, seed);
        let d = DofMap::new(&mesh, PolyDegree::new(p).unwrap());
        let opts = AssemblyOptions::default();
        let one = ones_on_nodes(&mesh, &d);
        let k = hpfem::assembly::assemble(&mesh, &d, MatrixKind::Stiffness, &opts).unwrap();
        let m = hpfem::assembly::assemble(&mesh, &d, MatrixKind::Mass, &opts).unwrap();
        let k1 = k.mul_vec(&one);
        prop_assert!(k1.iter().all(|v| v.abs() < 1e-11), "max |K 1| = {}", k1.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        assert_relative_eq!(m.quadratic_form(&one), mesh.total_area(), max_relative = 1e-12);
        prop_assert!(k.max_asymmetry() < 1e-13 && m.max_asymmetry() < 1e-13);
    }

    #[test]
    fn random_fields_are_continuous_on_distorted_meshes(p in 1usize..=7, seed in any::<u64>()) {
        let mesh = distorted_grid(3, 2, 0.3, seed);
        let d = DofMap::new(&mesh, PolyDegree::new(p).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let coeffs: Vec<f64> = (0..d.n_global()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let params: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let report = continuity_defect(&mesh, &d, &coeffs, &params).unwrap();
        prop_assert_eq!(report.edges_checked, 7);
        prop_assert!(report.max_jump < 1e-12, "jump {}", report.max_jump);
    }

    #[test]
    fn mass_is_positive_definite_on_random_vectors(p in 1usize..=5, seed in any::<u64>()) {
        let mesh = distorted_grid(2, 2, 0.2, seed);
        let d = DofMap::new(&mesh, PolyDegree::new(p).unwrap());
        let m = hpfem::assembly::assemble(&mesh, &d, MatrixKind::Mass, &AssemblyOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..d.n_global()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        prop_assert!(m.quadratic_form(&v) > 0.0);
    }

    #[test]
    fn refinement_preserves_area_and_counts(nx in 1usize..=4, ny in 1usize..=4, seed in any::<u64>()) {
        let mesh = distorted_grid(nx, ny, 0.2, seed);
        let fine = refine_uniform(&mesh);
        let (n, e, t) = mesh.signature();
        prop_assert_eq!(fine.signature(), (n + e + t, 2 * e + 4 * t, 4 * t));
        assert_relative_eq!(fine.total_area(), mesh.total_area(), max_relative = 1e-13);
    }

    #[test]
    fn serial_and_parallel_assembly_agree_bitwise(p in 1usize..=5, seed in any::<u64>()) {
        let mesh = distorted_grid(3, 3, 0.2, seed);
        let d = DofMap::new(&mesh, PolyDegree::new(p).unwrap());
        for kind in [MatrixKind::Mass, MatrixKind::Stiffness] {
            let a = hpfem::assembly::assemble(&mesh, &d, kind, &AssemblyOptions::serial()).unwrap();
            let b = hpfem::assembly::assemble(&mesh, &d, kind, &AssemblyOptions::default()).unwrap();
            prop_assert!(a == b);
        }
    }
}
