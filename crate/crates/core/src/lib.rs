//! Worst-case error characterization of LASSO-type recovery from noisy
//! under-determined Gaussian systems, together with the solvers and the
//! seeded Monte Carlo harness used to check it.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod roots;
pub mod special;
pub mod theory;
pub mod rng;
pub mod oracle;
pub mod solvers;
pub mod harness;
