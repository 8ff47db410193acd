//! Fit each base learner on lagged features and save one to disk.

use granwind::evaluation::mape;
use granwind::learners::{fit, LearnerConfig, LearnerKind, LearnerModel};
use granwind::pipeline::{load_input, prepare, splits, RunConfig};

fn main() -> granwind::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.synth.length = 14_400;
    let prep = prepare(&cfg, &load_input(&cfg)?)?;
    let sp = splits(&prep, cfg.lag)?;
    println!(
        "{} training samples of width {}",
        sp.train.len(),
        sp.train.inputs[0].len()
    );

    for kind in LearnerKind::ALL {
        let lc = LearnerConfig {
            epochs: 100,
            ..LearnerConfig::desk(kind)
        };
        let model = fit(kind, &sp.train, &lc)?;
        let (err, _) = mape(&sp.val.targets, &model.predict(&sp.val.inputs)?)?;
        println!("{kind:<10} validation MAPE {err:.3}%");
        if kind == LearnerKind::RandomForest {
            let path = std::env::temp_dir().join("granwind-rf.json");
            model.save(&path)?;
            let back = LearnerModel::load(&path)?;
            assert_eq!(
                back.predict_row(&sp.val.inputs[0])?,
                model.predict_row(&sp.val.inputs[0])?
            );
            println!("saved and reloaded {}", path.display());
        }
    }
    Ok(())
}
