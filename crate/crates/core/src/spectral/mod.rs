//! Real Fourier fields on the d-torus: norms, projectors, the smooth filter,
//! grid transforms and the dealiased cubic term.

mod cubic;
mod field;
mod filter;
mod grid;
mod lattice;
pub mod snapshot;

pub use cubic::{cubic_term, filtered_quartic, CubicEngine, DEALIAS_OVERSAMPLE};
pub use field::{
    project_high, project_low, sobolev_norm, sobolev_norm_sq, torus_volume, FourierField,
    PhaseState,
};
pub use filter::{chi, psi, smooth_filter, FilterSpec};
pub use grid::{fast_size, from_physical, grid_size, lp_norm, to_physical, PhysicalGrid};
pub(crate) use grid::{check_exponent, quadrature_lp, GridEvaluator};
pub use lattice::{canonical_index, Lattice, LatticeIndex};

/// Oversampling used for grid-maximum estimates of `L^inf` norms.
pub const SUP_OVERSAMPLE: usize = 4;
