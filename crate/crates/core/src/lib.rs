//! Granule-based short-term wind-speed forecasting: interval granulation,
//! cluster features, four base learners and a multi-objective weighted
//! ensemble with empirical prediction intervals.

pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod ficmg;
pub mod granulation;
pub mod learners;
pub mod mosfo;
pub mod pipeline;
pub mod timeseries;

pub use error::{Error, Result};
