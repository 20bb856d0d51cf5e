//! Multicriteria portfolio selection with intuitionistic fuzzy goals.
//!
//! The pipeline: build a market model ([`market`]), evaluate the three
//! criteria — negated expected return, variance, negated Sharpe ratio —
//! and their gradients ([`objectives`]), derive per-criterion aspiration
//! bounds ([`bounds`]), wrap each criterion in a membership /
//! non-membership pair and scalarize to a single min-max objective
//! ([`fuzzy`]), then minimize it over the unit simplex by projected
//! (sub)gradient descent ([`solver`]). A brute-force sampling baseline
//! ([`oracle`]) cross-checks every optimum the solver reports.

pub mod bounds;
pub mod error;
pub mod fuzzy;
pub mod market;
pub mod objectives;
pub mod oracle;
pub mod solver;

pub use error::{Error, Result};
pub use market::{MarketModel, ReturnSeries};
pub use objectives::{CriterionId, CriterionValues, PortfolioWeights};
