//! Plug an arbitrary two-objective problem into the optimizer and step it by hand.

use granwind::mosfo::{Bounds, FnProblem, Mosfo, MosfoConfig};

fn main() -> granwind::Result<()> {
    // Schaffer's problem: minimise x^2 and (x - 2)^2; the front is x in [0, 2].
    let problem = FnProblem::new(Bounds::new(vec![-5.0], vec![5.0])?, 2, |x: &[f64]| {
        vec![x[0] * x[0], (x[0] - 2.0).powi(2)]
    });
    let cfg = MosfoConfig {
        population: 40,
        iterations: 60,
        ..MosfoConfig::default()
    };
    let mut opt = Mosfo::new(&problem, cfg)?;
    while opt.iteration() < 60 {
        opt.step()?;
        if opt.iteration() % 20 == 0 {
            println!(
                "iteration {:>3}: archive size {}",
                opt.iteration(),
                opt.archive().len()
            );
        }
    }
    let mut xs: Vec<f64> = opt
        .archive()
        .members()
        .iter()
        .map(|m| m.position[0])
        .collect();
    xs.sort_by(f64::total_cmp);
    println!("front spans x in [{:.3}, {:.3}]", xs[0], xs[xs.len() - 1]);
    Ok(())
}
