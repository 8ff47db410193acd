//! Forecast scoring: point and interval metrics, the Diebold–Mariano test,
//! the improvement-rate index and the k-fold harness.

mod cv;
mod dm;
mod metrics;

pub use cv::{run_cv, CvFold, CvReport, CV_VALIDATION_SHARE};
pub use dm::{dm_test, DmResult, Z_CRITICAL};
pub use metrics::{
    interval_scores, interval_scores_with_range, iri, mape, mse, point_scores, quantile_sorted,
    IntervalScores, PointScores, MAPE_EPS,
};
