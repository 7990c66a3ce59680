//! Extended solutions, dressing cascades and monodromy.
//!
//! An extended solution `l(zeta)` satisfies `-l^-1 d_± l = L_±(zeta)` and is
//! obtained by transporting a Lax connection across a patch of the
//! worldsheet. At a complex spectral value the pointwise Iwasawa factor of
//! `l` is again a sigma-model field, with deformed parameters.

pub mod cascade;
pub mod monodromy;
pub mod patch;
pub mod transport;

pub use cascade::{
    param_map, pcm_to_yb, run_cascade, yb_to_biyb, CascadeOptions, CascadeParams,
    CascadeReport, CascadeStage, SeedLax, StageDiagnostics,
};
pub use monodromy::{conserved_trace_drift, monodromy, MonodromyOptions, TraceDrift};
pub use patch::{patch_currents, patch_jet, patch_residuals, Patch};
pub use transport::{
    path_mismatch, transport_checked, transport_extended, transport_lattice, transport_line,
    ExtendedSolution, LaxLattice, PathOrder,
};
