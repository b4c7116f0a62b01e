//! Interpolation norms and the constructions built on them.

pub mod constants;
pub mod interp;

pub use interp::{
    balanced_shift, interp_norm, interp_norm_with, logconvex_norm, logconvex_norm_with, with_window_check,
    Certificate, InterpProblem, InterpSolution, Side, SidedProblem, Term, DEFAULT_WINDOW,
};
pub mod mean;
pub use mean::{mean_norm, mean_norm_with, mean_to_decomposition};
pub mod complex;
pub mod functionals;
pub use complex::{complex_view, stein_boundary_coeffs, stein_transport, AnalyticView, LaurentOperatorFamily};
pub use functionals::{discrete_real_norm, j_functional, k_functional};
pub mod base_change;
pub mod finite_rep;
pub use base_change::{change_base_reindex, reindex_collisions};
pub use finite_rep::{finite_rep, finite_rep_from, FiniteRep};
pub mod lozanovskii;
pub use lozanovskii::{calderon_lozanovskii_norm, level_set_decomposition, level_set_hint};
pub mod operators;
pub use operators::{
    apply_blockwise, diagonal_family_bound, operator_hints, operator_norm, operator_struct_bound, resolvent_family,
    OperatorBound, ResolventFamily, RESOLVENT_RANGE,
};
pub mod duality; pub use duality::{dual_norm_estimate, DualEstimate};
