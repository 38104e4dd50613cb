//! Fractional-calculus and special-function primitives.

pub mod caputo;
pub mod mittag_leffler;
pub mod quadrature;
pub mod special;

pub use caputo::{caputo_l1_apply, l1_scale, l1_weights, rl_integral, FracOrder, TimeGrid};
pub use mittag_leffler::mittag_leffler;
