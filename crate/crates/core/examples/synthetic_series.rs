//! Generate a synthetic wind series, fill its gaps and cut it into windows.

use granwind::pipeline::{generate, SynthConfig};
use granwind::timeseries::{chrono_split, interpolate_gaps, partition_windows, SplitSpec};

fn main() -> granwind::Result<()> {
    let cfg = SynthConfig {
        length: 7200,
        gap_rate: 0.01,
        ..SynthConfig::default()
    };
    let raw = generate(&cfg, 7)?;
    let missing = raw.gap_mask().iter().filter(|g| **g).count();
    println!("{} samples, {missing} missing", raw.len());

    let series = interpolate_gaps(&raw)?;
    let windows = partition_windows(&series, 36)?;
    println!(
        "{} windows of {} samples",
        windows.len(),
        windows.window_size
    );

    let (train, val, test) = chrono_split(&windows.windows, &SplitSpec::default())?;
    println!(
        "split: {} train / {} validation / {} test",
        train.len(),
        val.len(),
        test.len()
    );
    Ok(())
}
