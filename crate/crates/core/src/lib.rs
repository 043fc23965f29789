//! Solar-power forecast combination.
//!
//! Twenty-four epsilon-SVR base models are trained on NWP-style weather
//! inputs; a random-forest regressor combines their hourly forecasts with the
//! weather and lagged forecasts. [`ensemble::run_backtest`] evaluates the
//! combination month by month against the simple average and the best single
//! model.

pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod forest;
pub mod svr;

pub use error::{Error, Result};
