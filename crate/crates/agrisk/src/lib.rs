//! Aggregate risk analysis with primary and secondary uncertainty.
//!
//! Simulates catastrophe event sequences over reinsurance contract
//! portfolios, transforms per-event loss distributions through normal and
//! beta quantile functions, applies layered financial terms, and derives
//! portfolio risk measures (PML, VaR, TVaR) from the resulting year loss
//! tables.

// Guards written as `!(x > 0.0)` deliberately catch NaN as well; the
// suggested `x <= 0.0` form would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod engine;
pub mod gen;
pub mod io;
pub mod measures;
pub mod model;
pub mod statfuncs;
pub mod uncertainty;
