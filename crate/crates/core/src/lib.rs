//! Simulation and stabilization of linear continuous-time systems under
//! random switching.
//!
//! The library models a switching signal driven by an irreducible Markov
//! chain with per-mode dwell-time distributions, propagates the associated
//! matrix cocycle in an overflow-safe scaled form, estimates Lyapunov
//! exponents and almost-sure stability, and synthesizes per-mode feedback
//! gains that push the closed-loop decay rate below any prescribed target.

// Indexed loops are the house style for dense matrix kernels, and negated
// comparisons like `!(x > 0.0)` deliberately catch NaN as well.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cocycle;
pub mod formats;
pub mod harness;
pub mod linalg;
pub mod lyapunov;
pub mod parallel;
pub mod pe;
pub mod rng;
pub mod stabilization;
pub mod switching;
