use std::time::Instant;

use anyhow::Result;
use hpfem::assembly::assemble as assemble_matrix;
use hpfem::{AssemblyOptions, DofMap, MatrixKind, Mesh, PolyDegree, Rect};

use crate::output::{assembly_options, check_degree, Levels, MeshArgs, Out};
use crate::GlobalArgs;

/// Best-of-`repeats` seconds for the mass and the stiffness matrix.
pub fn time_assembly(mesh: &Mesh, p: PolyDegree, opts: &AssemblyOptions, repeats: usize) -> Result<(f64, f64)> {
    let d = DofMap::new(mesh, p);
    let mut best = (f64::INFINITY, f64::INFINITY);
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        assemble_matrix(mesh, &d, MatrixKind::Mass, opts)?;
        best.0 = best.0.min(start.elapsed().as_secs_f64());
        let start = Instant::now();
        assemble_matrix(mesh, &d, MatrixKind::Stiffness, opts)?;
        best.1 = best.1.min(start.elapsed().as_secs_f64());
    }
    Ok(best)
}

pub fn assemble(g: &GlobalArgs, p: usize, mesh_args: &MeshArgs, levels: Option<Levels>, pmax: Option<usize>, repeats: usize) -> Result<()> {
    let p = check_degree(p)?;
    let mesh = if mesh_args.mesh.is_none() && mesh_args.nx.is_none() && mesh_args.level.is_none() {
        MeshArgs { level: Some(2), ..mesh_args.clone() }.build(Rect::reference(), 1, 1)?
    } else {
        mesh_args.build(Rect::reference(), 1, 1)?
    };
    let opts = assembly_options(g);
    let out = Out::new(&g.out)?;
    let d = DofMap::new(&mesh, p);
    let m = assemble_matrix(&mesh, &d, MatrixKind::Mass, &opts)?;
    let k = assemble_matrix(&mesh, &d, MatrixKind::Stiffness, &opts)?;
    let m_path = out.matrix("M", &m, g.format)?;
    let k_path = out.matrix("K", &k, g.format)?;
    say!("p = {p}, n_p = {}: nnz(M) = {}, nnz(K) = {}", d.n_global(), m.nnz(), k.nnz());
    say!("wrote {} and {}", m_path.display(), k_path.display());

    if let Some(levels) = levels {
        let pmax = pmax.unwrap_or(p.get());
        let mut w = out.csv("timings.csv")?;
        w.write_record(["level", "p", "n_p", "mass_seconds", "stiffness_seconds"])?;
        for level in levels {
            let mesh = Mesh::uniform_level(Rect::reference(), level)?;
            for q in 1..=pmax {
                let q = PolyDegree::new(q)?;
                let (tm, tk) = time_assembly(&mesh, q, &opts, repeats)?;
                let n = hpfem::dofmap::global_dim(&mesh, q);
                w.write_record([level.to_string(), q.to_string(), n.to_string(), format!("{tm:.6}"), format!("{tk:.6}")])?;
                say!("level {level}, p = {q}: M {tm:.4} s, K {tk:.4} s");
            }
        }
        w.flush()?;
        say!("wrote {}", out.path("timings.csv").display());
    }
    Ok(())
}
