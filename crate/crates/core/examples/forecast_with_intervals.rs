//! End-to-end: granulate, train, weight, forecast with intervals and score.

use granwind::evaluation::{interval_scores, point_scores};
use granwind::pipeline::{load_input, prepare, run_forecast, RunConfig};

fn main() -> granwind::Result<()> {
    let cfg = RunConfig::default();
    let prep = prepare(&cfg, &load_input(&cfg)?)?;
    let run = run_forecast(&cfg, &prep, None)?;

    let names = run.learner_names();
    for (n, w) in names.iter().zip(&run.weights.0) {
        println!("{n:<9} weight {w:+.4}");
    }
    let actual = run.test_actuals();
    let ps = point_scores(actual, &run.bundle.point)?;
    println!(
        "test MAPE {:.3}%  RMSE {:.4}  R2 {:.4}",
        ps.mape, ps.rmse, ps.r2
    );
    for lv in &run.bundle.intervals {
        let s = interval_scores(actual, &lv.lower, &lv.upper, lv.level)?;
        println!(
            "{:.0}% interval: PICP {:.3} PINAW {:.3} AIS {:.3}",
            lv.level * 100.0,
            s.picp,
            s.pinaw,
            s.ais
        );
    }
    let mut csv = Vec::new();
    run.bundle
        .write_csv(actual, &mut csv)
        .expect("writing to memory");
    for line in String::from_utf8_lossy(&csv).lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
