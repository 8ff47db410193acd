//! Five-fold cross-validation over contiguous granule blocks.

use granwind::evaluation::{run_cv, PointScores};
use granwind::pipeline::{load_input, prepare, RunConfig};

fn main() -> granwind::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.synth.length = 14_400;
    cfg.set("learner.epochs", "80")?;
    cfg.set("mosfo.iterations", "50")?;
    let prep = prepare(&cfg, &load_input(&cfg)?)?;
    let report = run_cv(&prep.granules, &cfg)?;

    println!("fold  {}", PointScores::COLUMNS.join("  "));
    for f in &report.folds {
        let v = f.scores.values().map(|x| format!("{x:.4}"));
        println!("{:<5} {}   (granules {:?})", f.fold, v.join(" "), f.test);
    }
    println!(
        "mean  {}",
        report.mean().map(|x| format!("{x:.4}")).join(" ")
    );
    Ok(())
}
