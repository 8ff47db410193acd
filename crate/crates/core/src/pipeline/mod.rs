//! End-to-end plumbing shared by the command-line tool and the examples:
//! run configuration, synthetic data, stage runners and run directories.

mod artifacts;
mod config;
mod run;
mod synth;

pub use artifacts::{read_manifest, RunDir, MANIFEST};
pub use config::{Preset, RunConfig};
pub use run::{
    load_input, prediction_panel, prepare, run_forecast, splits, supervised_in, train_learners,
    ForecastRun, Prepared, Splits,
};
pub use synth::{generate, write_series_csv, SynthConfig, SYNTH_ORIGIN, SYNTH_STEP};
