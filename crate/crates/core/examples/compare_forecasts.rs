//! Compare two forecasters with point metrics, the DM test and the improvement rate.

use granwind::evaluation::{dm_test, iri, point_scores};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> granwind::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let actual: Vec<f64> = (0..200)
        .map(|i| 7.0 + 1.5 * (i as f64 / 9.0).sin())
        .collect();
    let sharp: Vec<f64> = actual
        .iter()
        .map(|a| a + rng.random_range(-0.3..0.3))
        .collect();
    let blunt: Vec<f64> = actual
        .iter()
        .map(|a| a + rng.random_range(-0.6..0.6))
        .collect();

    let a = point_scores(&actual, &sharp)?;
    let b = point_scores(&actual, &blunt)?;
    println!("sharp: MAPE {:.3}% R2 {:.4}", a.mape, a.r2);
    println!("blunt: MAPE {:.3}% R2 {:.4}", b.mape, b.r2);

    let err = |p: &[f64]| -> Vec<f64> { actual.iter().zip(p).map(|(x, y)| x - y).collect() };
    let dm = dm_test(&err(&sharp), &err(&blunt))?;
    println!(
        "DM statistic {:.3}, equal accuracy rejected: {}",
        dm.statistic, dm.reject
    );
    println!("improvement rate {:.2}%", iri(a.mape, b.mape)?);
    Ok(())
}
