use std::fs::File;
use std::time::Instant;

use anyhow::{Context, Result};
use hpfem::field::sample;
use hpfem::mesh::{rectangulate, refine_uniform};
use hpfem::solver::{convergence_study_on, observed_rates, solve_bvp, StudyOptions};
use hpfem::{BvpProblem, ConvergenceRecord, Mesh, PolyDegree, Rect, Solution, SolveOptions, SolverKind};

use crate::expr::Expr;
use crate::output::{assembly_options, check_degree, Out};
use crate::{GlobalArgs, SolveArgs, SolverArg};

fn problem(args: &SolveArgs) -> Result<BvpProblem> {
    let Some(f) = &args.f else {
        return Ok(BvpProblem::manufactured(args.nu)?);
    };
    let f = Expr::parse(f)?;
    let problem = BvpProblem::new(args.nu, move |x, y| f.eval(x, y))?;
    Ok(match (&args.u, &args.ux, &args.uy) {
        (Some(u), Some(ux), Some(uy)) => {
            let (u, ux, uy) = (Expr::parse(u)?, Expr::parse(ux)?, Expr::parse(uy)?);
            problem.with_exact(move |x, y| u.eval(x, y), move |x, y| [ux.eval(x, y), uy.eval(x, y)])
        }
        _ => problem,
    })
}

fn write_samples(out: &Out, record: &ConvergenceRecord, mesh: &Mesh, sol: &Solution, grid: usize) -> Result<()> {
    let name = format!("solution_level{}_p{}.csv", record.level, record.p);
    let mut w = out.csv(&name)?;
    w.write_record(["x", "y", "u"])?;
    for [x, y, u] in sample(mesh, &sol.dofmap, &sol.coeffs, grid)? {
        w.write_record([format!("{x}"), format!("{y}"), format!("{u:.17e}")])?;
    }
    Ok(w.flush()?)
}

fn write_record(w: &mut csv::Writer<File>, r: &ConvergenceRecord) -> Result<()> {
    w.write_record([
        r.level.to_string(),
        r.p.to_string(),
        r.n_p.to_string(),
        format!("{:.10e}", r.energy_error),
        r.solve_iterations.to_string(),
        format!("{:.6}", r.wall_time),
    ])?;
    Ok(w.flush()?)
}

pub fn solve(g: &GlobalArgs, args: &SolveArgs) -> Result<()> {
    let pmax = check_degree(args.pmax)?;
    let problem = problem(args)?;
    let base = match &args.mesh {
        Some(path) => Mesh::read_json(path).with_context(|| format!("reading mesh {}", path.display()))?,
        None => rectangulate(args.domain.unwrap_or(Rect::reference()), 1, 1)?,
    };
    if let Some(path) = &args.save_mesh {
        base.write_json(path)?;
    }
    let kind = match args.solver {
        SolverArg::Cg => SolverKind::Cg,
        SolverArg::Direct => SolverKind::Direct,
        SolverArg::Auto => SolverKind::Auto,
    };
    let solve_opts = SolveOptions { kind, tol: args.tol, max_iter_factor: args.max_iter_factor, assembly: assembly_options(g), ..SolveOptions::default() };
    let out = Out::new(&g.out)?;
    let mut w = out.csv("convergence.csv")?;
    w.write_record(["level", "p", "n_p", "energy_error", "iterations", "seconds"])?;

    let mut on_cell = |r: &ConvergenceRecord, mesh: &Mesh, sol: &Solution| -> Result<()> {
        write_record(&mut w, r)?;
        say!("level {} p {} n_p {:>7} error {:.4e} iterations {} ({:.3} s)", r.level, r.p, r.n_p, r.energy_error, r.solve_iterations, r.wall_time);
        if args.samples {
            write_samples(&out, r, mesh, sol, args.sample_grid)?;
        }
        Ok(())
    };

    let records = if problem.exact().is_some() {
        let opts = StudyOptions { p_tilde: args.p_tilde, solve: solve_opts };
        let mut failure = None;
        let records = convergence_study_on(&base, args.levels.clone(), pmax, &problem, &opts, |r, mesh, sol| {
            if failure.is_none() {
                failure = on_cell(r, mesh, sol).err();
            }
        })?;
        if let Some(err) = failure {
            return Err(err);
        }
        records
    } else {
        // No exact solution: solve only, errors are reported as NaN.
        let mut records = Vec::new();
        let mut mesh = base.clone();
        for _ in 0..*args.levels.start() {
            mesh = refine_uniform(&mesh);
        }
        for level in args.levels.clone() {
            for p in 1..=pmax.get() {
                let start = Instant::now();
                let sol = solve_bvp(&mesh, PolyDegree::new(p)?, &problem, &solve_opts)?;
                let r = ConvergenceRecord {
                    level,
                    p,
                    n_p: sol.coeffs.len(),
                    energy_error: f64::NAN,
                    solve_iterations: sol.iterations,
                    wall_time: start.elapsed().as_secs_f64(),
                };
                on_cell(&r, &mesh, &sol)?;
                records.push(r);
            }
            mesh = refine_uniform(&mesh);
        }
        records
    };

    if problem.exact().is_some() {
        for p in 1..=pmax.get() {
            let rates: Vec<String> = observed_rates(&records, p).iter().map(|(_, r)| format!("{r:.2}")).collect();
            if !rates.is_empty() {
                say!("p = {p}: observed rates {}", rates.join(", "));
            }
        }
    }
    say!("wrote {}", out.path("convergence.csv").display());
    Ok(())
}
