//! Rank-optimal weighting for composite indicators.
//!
//! Given normalized indicator values for a set of entities, this crate computes
//! composite indices and rankings for any weight vector, and solves exactly for
//! the weights that move a chosen entity as far up (or down) the ranking as
//! possible. Continuous weights on the simplex `Σw = 10` and integer weights in
//! `0..=5` are both supported, with an optional second-order criterion that
//! maximizes the lead over the next entity.
//!
//! The optimization problems are encoded as big-M mixed-integer programs and
//! solved by a best-bound branch-and-bound over the dense simplex in [`lp`].

pub mod dataset;
pub mod lp;
pub mod optimizer;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod ranking;

pub use dataset::{embedded_fixture_2014, parse_csv, IndicatorMatrix};
pub use optimizer::{solve, solve_all, Direction, OptimizationSpec, Order, Solution};
pub use ranking::{WeightMode, WeightVector};
