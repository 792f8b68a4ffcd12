use std::fs::{self, File};
use std::io::BufWriter;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use hpfem::mesh::rectangulate;
use hpfem::{AssemblyOptions, Mesh, Rect, SparseMatrix};

use crate::{Format, GlobalArgs};

pub type Levels = RangeInclusive<u32>;

/// `a..b` (inclusive), `a..=b` or a single level `a`.
pub fn parse_levels(s: &str) -> Result<Levels, String> {
    let parse = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("bad level `{t}`: {e}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => {
            let a = parse(s)?;
            (a, a)
        }
    };
    if a > b {
        return Err(format!("empty level range {s}"));
    }
    Ok(a..=b)
}

/// `x0,x1,y0,y1`.
pub fn parse_domain(s: &str) -> Result<Rect, String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}"))).collect::<Result<_, _>>()?;
    match *v.as_slice() {
        [x0, x1, y0, y1] if x0 < x1 && y0 < y1 => Ok(Rect::new(x0, x1, y0, y1)),
        [_, _, _, _] => Err("domain needs x0 < x1 and y0 < y1".into()),
        _ => Err("domain needs four numbers x0,x1,y0,y1".into()),
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct MeshArgs {
    /// Read the mesh from a JSON file (1-based node indices)
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Write the mesh to a JSON file
    #[arg(long)]
    pub save_mesh: Option<PathBuf>,
    /// Domain x0,x1,y0,y1 for generated meshes
    #[arg(long, value_parser = parse_domain)]
    pub domain: Option<Rect>,
    /// Elements in x for a generated grid
    #[arg(long)]
    pub nx: Option<usize>,
    /// Elements in y for a generated grid
    #[arg(long)]
    pub ny: Option<usize>,
    /// Uniform refinement level (2^L x 2^L elements); overrides nx/ny
    #[arg(long)]
    pub level: Option<u32>,
}

impl MeshArgs {
    pub fn build(&self, domain: Rect, nx: usize, ny: usize) -> Result<Mesh> {
        let mesh = match &self.mesh {
            Some(path) => Mesh::read_json(path).with_context(|| format!("reading mesh {}", path.display()))?,
            None => {
                let domain = self.domain.unwrap_or(domain);
                match self.level {
                    Some(level) => Mesh::uniform_level(domain, level)?,
                    None => rectangulate(domain, self.nx.unwrap_or(nx), self.ny.or(self.nx).unwrap_or(ny))?,
                }
            }
        };
        if let Some(path) = &self.save_mesh {
            mesh.write_json(path).with_context(|| format!("writing mesh {}", path.display()))?;
        }
        Ok(mesh)
    }
}

pub fn assembly_options(g: &GlobalArgs) -> AssemblyOptions {
    AssemblyOptions { quad_order: g.quad_order, ..AssemblyOptions::default() }
}

/// The output directory.
pub struct Out {
    dir: PathBuf,
}

impl Out {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn csv(&self, name: &str) -> Result<csv::Writer<File>> {
        let path = self.path(name);
        csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))
    }

    pub fn matrix(&self, stem: &str, a: &SparseMatrix, format: Format) -> Result<PathBuf> {
        match format {
            Format::Mm => {
                let path = self.path(&format!("{stem}.mtx"));
                let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                a.write_matrix_market(BufWriter::new(file))?;
                Ok(path)
            }
            Format::Csv => {
                let name = format!("{stem}.csv");
                let mut w = self.csv(&name)?;
                w.write_record(["row", "col", "value"])?;
                for (i, j, v) in a.triplets() {
                    w.write_record([(i + 1).to_string(), (j + 1).to_string(), format!("{v:.17e}")])?;
                }
                w.flush()?;
                Ok(self.path(&name))
            }
        }
    }
}

pub fn check_degree(p: usize) -> Result<hpfem::PolyDegree> {
    if p == 0 {
        bail!("polynomial degree must be at least 1");
    }
    Ok(hpfem::PolyDegree::new(p)?)
}
