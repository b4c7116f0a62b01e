//! Sequentially structured interpolation of finite-dimensional Banach couples.
//!
//! Spaces and couples live in [`spaces`], finitely supported sequences in
//! [`seq`], sequence structures in [`structures`], the convex solver in
//! [`solver`], interpolation norms and their constructions in [`engine`], and
//! the verification suites in [`harness`].

// `!(x > 0.0)` rejects NaN; loops over `j in 0..2` index both sides of a couple.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod engine;
pub mod error;
pub mod harness;
pub mod seq;
pub mod solver;
pub mod spaces;
pub mod structures;

pub use engine::{interp_norm, Certificate, InterpProblem, InterpSolution, SidedProblem, Term};
pub use error::{Error, Result};
pub use harness::{run_all, run_suite, VerificationReport};
pub use seq::SparseSeq;
pub use solver::SolverConfig;
pub use spaces::{Couple, NormSpec, NormedSpace, PExp, C64};
pub use structures::{seq_norm, weighted_seq_norm, NormEstimate, RademacherMode, SeqStructSpec, WeightedEval};
