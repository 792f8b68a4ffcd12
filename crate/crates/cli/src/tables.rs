use std::fs::File;

use anyhow::Result;
use hpfem::basis2d::{dim_trunk_space, kind_counts};
use hpfem::dofmap::global_dim;
use hpfem::mesh::rectangulate;
use hpfem::{DofMap, Mesh, PolyDegree, Rect};

use crate::assemble::time_assembly;
use crate::output::{assembly_options, check_degree, Levels, MeshArgs, Out};
use crate::GlobalArgs;

fn dash(v: usize) -> String {
    if v == 0 {
        "-".into()
    } else {
        v.to_string()
    }
}

fn b_rows(d: &DofMap) -> Vec<Vec<String>> {
    d.b_matrix()
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![(i + 1).to_string(), r[0].to_string()];
            row.extend(r[1..].iter().map(|&v| dash(v)));
            row
        })
        .collect()
}

fn write_b(w: &mut csv::Writer<File>, d: &DofMap) -> Result<()> {
    w.write_record(["index", "p", "node", "edge", "element", "bubble"])?;
    for row in b_rows(d) {
        w.write_record(&row)?;
    }
    Ok(w.flush()?)
}

fn element_header(n: usize) -> Vec<String> {
    let mut h = vec!["l".to_string()];
    h.extend((1..=n).map(|k| format!("T{k}")));
    h
}

fn c_rows(d: &DofMap) -> Vec<Vec<String>> {
    d.c_matrix()
        .iter()
        .enumerate()
        .map(|(l, r)| std::iter::once((l + 1).to_string()).chain(r.iter().map(|v| v.to_string())).collect())
        .collect()
}

fn s_rows(d: &DofMap) -> Vec<Vec<String>> {
    d.s_matrix()
        .iter()
        .enumerate()
        .map(|(l, r)| std::iter::once((l + 1).to_string()).chain(r.iter().map(|v| v.to_string())).collect())
        .collect()
}

fn write_rows(w: &mut csv::Writer<File>, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    Ok(w.flush()?)
}

fn print_table(title: &str, header: &[String], rows: &[Vec<String>]) {
    say!("{title}");
    let line = |r: &[String]| r.iter().map(|s| format!("{s:>8}")).collect::<String>();
    say!("{}", line(header));
    for r in rows {
        say!("{}", line(r));
    }
    say!("");
}

pub fn dofmap(g: &GlobalArgs, p: usize, mesh_args: &MeshArgs) -> Result<()> {
    let p = check_degree(p)?;
    let mesh = mesh_args.build(Rect::new(0.0, 2.0, 0.0, 1.0), 2, 1)?;
    let d = DofMap::new(&mesh, p);
    let out = Out::new(&g.out)?;
    let b_header: Vec<String> = ["index", "p", "node", "edge", "element", "bubble"].map(String::from).to_vec();
    let e_header = element_header(mesh.num_elements());
    let (b, c, s) = (b_rows(&d), c_rows(&d), s_rows(&d));
    write_b(&mut out.csv("dofmap_B.csv")?, &d)?;
    write_rows(&mut out.csv("dofmap_C.csv")?, &e_header, &c)?;
    write_rows(&mut out.csv("dofmap_S.csv")?, &e_header, &s)?;
    let (nn, ne, nt) = mesh.signature();
    say!("p = {p}: |N| = {nn}, |E| = {ne}, |T| = {nt}, n_p = {}", d.n_global());
    if d.n_global() <= 200 && nt <= 12 {
        print_table("B", &b_header, &b);
        print_table("C", &e_header, &c);
        print_table("S", &e_header, &s);
    }
    say!("wrote dofmap_B.csv, dofmap_C.csv, dofmap_S.csv to {}", g.out.display());
    Ok(())
}

pub fn tables(g: &GlobalArgs, levels: Levels, timing_levels: Levels, pmax: usize) -> Result<()> {
    let pmax = check_degree(pmax)?.get();
    let out = Out::new(&g.out)?;

    let mut w = out.csv("table1.csv")?;
    w.write_record(["p", "nodal", "edge", "bubble", "total"])?;
    for p in 1..=7 {
        let (n, e, b) = kind_counts(p);
        w.write_record([p, n, e, b, dim_trunk_space(p)].map(|v| v.to_string()))?;
    }
    w.flush()?;

    let single = rectangulate(Rect::reference(), 1, 1)?;
    write_b(&mut out.csv("table3_B.csv")?, &DofMap::new(&single, PolyDegree::new(5)?))?;

    let two = rectangulate(Rect::new(0.0, 2.0, 0.0, 1.0), 2, 1)?;
    let d = DofMap::new(&two, PolyDegree::new(3)?);
    write_rows(&mut out.csv("table4_C.csv")?, &element_header(2), &c_rows(&d))?;
    write_rows(&mut out.csv("table4_S.csv")?, &element_header(2), &s_rows(&d))?;

    let mut np = out.csv("table5_np.csv")?;
    let mut counts = out.csv("table5_mesh.csv")?;
    let mut header = vec!["level".to_string()];
    header.extend((1..=pmax).map(|p| format!("n{p}")));
    np.write_record(&header)?;
    counts.write_record(["level", "nodes", "edges", "elements"])?;
    for level in levels {
        let mesh = Mesh::uniform_level(Rect::reference(), level)?;
        let (nn, ne, nt) = mesh.signature();
        counts.write_record([level as usize, nn, ne, nt].map(|v| v.to_string()))?;
        let mut row = vec![level.to_string()];
        for p in 1..=pmax {
            row.push(global_dim(&mesh, PolyDegree::new(p)?).to_string());
        }
        np.write_record(&row)?;
    }
    np.flush()?;
    counts.flush()?;

    let opts = assembly_options(g);
    let mut times = out.csv("table6_times.csv")?;
    let mut header = vec!["level".to_string()];
    for p in 1..=pmax {
        header.push(format!("M_p{p}"));
        header.push(format!("K_p{p}"));
    }
    times.write_record(&header)?;
    for level in timing_levels {
        let mesh = Mesh::uniform_level(Rect::reference(), level)?;
        let mut row = vec![level.to_string()];
        for p in 1..=pmax {
            let (m, k) = time_assembly(&mesh, PolyDegree::new(p)?, &opts, 3)?;
            row.push(format!("{m:.4}"));
            row.push(format!("{k:.4}"));
        }
        times.write_record(&row)?;
    }
    times.flush()?;

    for name in ["table1.csv", "table3_B.csv", "table4_C.csv", "table4_S.csv", "table5_np.csv", "table5_mesh.csv", "table6_times.csv"] {
        say!("wrote {}", out.path(name).display());
    }
    Ok(())
}
