//! Run the optimizer on the ZDT problems and measure front quality.

use std::time::Instant;

use granwind::mosfo::{
    analytic_front, count_dominated_pairs, front_quality, optimize, MosfoConfig, Zdt, ZdtKind,
};

fn main() -> granwind::Result<()> {
    for kind in [ZdtKind::Zdt1, ZdtKind::Zdt2, ZdtKind::Zdt3] {
        let reference: Vec<Vec<f64>> = analytic_front(kind, 500)
            .iter()
            .map(|p| p.to_vec())
            .collect();
        for seed in 0..3 {
            let cfg = MosfoConfig {
                rng_seed: seed,
                ..MosfoConfig::default()
            };
            let t = Instant::now();
            let archive = optimize(&Zdt::new(kind, 4)?, &cfg)?;
            let front = archive.objectives();
            let q = front_quality(&front, &reference)?;
            println!(
                "{kind} seed {seed}: {} points, IGD {:.4}, spacing {:.4}, dominated pairs {}, {:.1} ms",
                front.len(),
                q.igd,
                q.spacing,
                count_dominated_pairs(&front),
                t.elapsed().as_secs_f64() * 1e3
            );
        }
    }
    Ok(())
}
