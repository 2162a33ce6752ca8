pub mod coupling;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod quadrature;

pub use coupling::Coupling;
pub use error::{Error, Result};
pub use grid::{build_grid, GridKind, RadialGrid};
pub mod partial_waves;
pub mod special;
pub mod potential;
pub mod radial;
pub mod hydrogenic;
pub mod thomas_fermi;
pub mod traces;
pub mod operator_checks;
pub mod test_spaces;
pub mod cache;
pub mod report;
