//! Search ensemble weights for a panel of forecasts and pick a compromise.

use granwind::ensemble::{combine, fit_weights, PredictionPanel};
use granwind::mosfo::MosfoConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> granwind::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let actual: Vec<f64> = (0..120)
        .map(|i| 8.0 + 2.0 * (i as f64 * 0.3).sin())
        .collect();
    // four noisy forecasters with different bias and spread
    let preds = [(0.3, 0.2), (-0.2, 0.5), (0.0, 0.9), (0.5, 0.1)]
        .iter()
        .map(|&(bias, spread)| {
            actual
                .iter()
                .map(|a| a + bias + spread * rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect();
    let panel = PredictionPanel::new(preds, actual)?;

    let fit = fit_weights(&panel, &MosfoConfig::default())?;
    println!("archive holds {} trade-offs", fit.archive.len());
    println!("chosen weights {:.3?}", fit.chosen.0);
    println!("chosen (MAPE %, MSE) = {:.4?}", fit.chosen_objectives);
    for (k, u) in fit.unit_objectives.iter().enumerate() {
        println!("learner {k} alone: {u:.4?}");
    }
    let point = combine(&panel, &fit.chosen.0)?;
    println!("first combined values {:.3?}", &point[..4]);
    Ok(())
}
