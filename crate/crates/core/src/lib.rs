// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditioning;
pub mod diffusion;
pub mod expr;
pub mod montecarlo;
pub mod numerics;
