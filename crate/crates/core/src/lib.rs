//! Hierarchic hp finite elements on quadrilateral meshes.
//!
//! The crate builds Legendre-based hierarchic shape functions on the reference
//! square `[-1, 1]^2` (the *trunk space*: nodal, edge and bubble functions),
//! binds them to a quadrilateral mesh through three indexing tables
//! (attributes `B`, connectivity `C` and signs `S`), assembles sparse mass and
//! stiffness matrices and solves the diffusion-reaction problem
//!
//! ```text
//!   -Δu + ν u = f  in Ω,      ∂u/∂n = 0  on ∂Ω
//! ```
//!
//! with energy-norm error measurement under uniform h- and p-refinement.
//!
//! ```
//! use hpfem::{DofMap, Mesh, PolyDegree, Rect};
//!
//! let mesh = Mesh::uniform_level(Rect::reference(), 2).unwrap();
//! let dofs = DofMap::new(&mesh, PolyDegree::new(5).unwrap());
//! assert_eq!(dofs.n_global(), 233);
//! ```
//!
//! The companion guide in `book/` walks through each module with runnable
//! snippets.

pub mod assembly;
pub mod basis1d;
pub mod basis2d;
pub mod dofmap;
mod error;
pub mod field;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod sparse;

pub use assembly::{AssemblyOptions, MatrixKind, Parallelism};
pub use basis2d::{LocalShapeId, ShapeKind, ShapeValue};
pub use dofmap::{DofEntity, DofMap, SignRule};
pub use error::{Error, Result};
pub use mesh::{Jacobian, Mesh, QuadGeometry, Rect};
pub use quadrature::QuadRule;
pub use solver::{BvpProblem, ConvergenceRecord, Solution, SolveOptions, SolverKind};
pub use sparse::SparseMatrix;

/// Largest polynomial degree accepted anywhere in the crate.
pub const MAX_DEGREE: usize = 12;

/// Polynomial degree `p` of a hierarchic space, `1 <= p <= MAX_DEGREE`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolyDegree(usize);

impl PolyDegree {
    pub fn new(p: usize) -> Result<Self> {
        if (1..=MAX_DEGREE).contains(&p) {
            Ok(Self(p))
        } else {
            Err(Error::InvalidDegree(p))
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for PolyDegree {
    type Error = Error;

    fn try_from(p: usize) -> Result<Self> {
        Self::new(p)
    }
}

impl std::fmt::Display for PolyDegree {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
