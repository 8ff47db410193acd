//! Turn windows into triangular granules and extract clustering features.

use granwind::ficmg::{extract_features, FicmgConfig};
use granwind::granulation::granulate_series;
use granwind::pipeline::{generate, SynthConfig};
use granwind::timeseries::{interpolate_gaps, partition_windows};

fn main() -> granwind::Result<()> {
    let raw = generate(
        &SynthConfig {
            length: 3600,
            ..SynthConfig::default()
        },
        1,
    )?;
    let series = interpolate_gaps(&raw)?;
    let granules = granulate_series(&series, &partition_windows(&series, 36)?)?;

    for g in granules.granules.iter().take(3) {
        println!(
            "granule low={:.2} r={:.2} up={:.2}  mu(r)={}",
            g.low,
            g.r,
            g.up,
            g.membership(g.r)
        );
    }

    let (records, model) = extract_features(&granules, &FicmgConfig::default())?;
    println!(
        "{} sweeps, converged: {}",
        model.iterations, model.converged
    );
    for (j, c) in model.centers.rows.iter().enumerate() {
        println!("center {j}: [{:.3}, {:.3}, {:.3}]", c[0], c[1], c[2]);
    }
    let r = &records[0];
    println!(
        "record 0 features {:?} nearest {}",
        r.features, r.nearest_cluster
    );
    Ok(())
}
