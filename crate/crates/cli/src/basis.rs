use anyhow::{bail, Result};
use hpfem::basis1d::shape1d_eval;
use hpfem::basis2d::{dim_trunk_space, shape2d_eval, shape_index};
use hpfem::field::reference_grid;
use hpfem::{ShapeKind, MAX_DEGREE};

use crate::output::Out;
use crate::GlobalArgs;

pub fn basis1d(g: &GlobalArgs, pmax: usize, points: usize) -> Result<()> {
    if pmax == 0 || points < 2 {
        bail!("need pmax >= 1 and at least two points");
    }
    let out = Out::new(&g.out)?;
    let mut w = out.csv("basis1d.csv")?;
    let mut header = vec!["xi".to_string()];
    header.extend((1..=pmax + 1).map(|m| format!("N{m}")));
    w.write_record(&header)?;
    for i in 0..points {
        let xi = -1.0 + 2.0 * i as f64 / (points - 1) as f64;
        let mut row = vec![format!("{xi}")];
        row.extend((1..=pmax + 1).map(|m| format!("{:.17e}", shape1d_eval(m, xi))));
        w.write_record(&row)?;
    }
    w.flush()?;
    say!("wrote {} ({} series, {points} points)", out.path("basis1d.csv").display(), pmax + 1);
    Ok(())
}

pub fn describe(kind: ShapeKind) -> (&'static str, usize) {
    match kind {
        ShapeKind::Nodal { node } => ("nodal", node),
        ShapeKind::Edge { edge } => ("edge", edge),
        ShapeKind::Bubble { beta } => ("bubble", beta),
    }
}

pub fn basis2d(g: &GlobalArgs, ms: &[usize], grid: usize) -> Result<()> {
    let max_m = dim_trunk_space(MAX_DEGREE);
    if let Some(&m) = ms.iter().find(|&&m| m == 0 || m > max_m) {
        bail!("local index {m} outside 1..={max_m}");
    }
    if grid < 2 {
        bail!("grid needs at least two points per direction");
    }
    let out = Out::new(&g.out)?;
    let points = reference_grid(grid);
    let mut index = out.csv("basis2d_index.csv")?;
    index.write_record(["m", "s", "p", "kind", "entity"])?;
    for &m in ms {
        let id = shape_index(m);
        let (kind, entity) = describe(id.kind);
        index.write_record([m.to_string(), id.s.to_string(), id.p.to_string(), kind.to_string(), entity.to_string()])?;
        let name = format!("basis2d_m{m}.csv");
        let mut w = out.csv(&name)?;
        w.write_record(["xi", "eta", "value"])?;
        for &[xi, eta] in &points {
            w.write_record([format!("{xi}"), format!("{eta}"), format!("{:.17e}", shape2d_eval(m, xi, eta).value)])?;
        }
        w.flush()?;
        say!("m = {m}: s = {}, p = {}, {kind} {entity} -> {}", id.s, id.p, out.path(&name).display());
    }
    index.flush()?;
    Ok(())
}
