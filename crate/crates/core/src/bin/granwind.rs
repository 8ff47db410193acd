use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use granwind::ensemble::read_forecast_csv;
use granwind::evaluation::{interval_scores, mape, point_scores, run_cv, CvReport, PointScores};
use granwind::ficmg::{write_features_csv, FicmgModel};
use granwind::learners::LearnerKind;
use granwind::mosfo::{analytic_front, count_dominated_pairs, front_quality, optimize, Zdt};
use granwind::pipeline::{self, generate, write_series_csv, Preset, RunConfig, RunDir};
use granwind::{Error, Result};

#[derive(Parser)]
#[command(
    name = "granwind",
    version,
    about = "Granule-based wind-speed forecasting"
)]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; defaults to `out/<subcommand>`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Full-size or small learner settings (default desk).
    #[arg(long, global = true, value_parser = ["paper", "desk"])]
    preset: Option<String>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a seeded synthetic series.
    Synth {
        #[arg(long)]
        length: Option<usize>,
    },
    /// Granulate a series and extract cluster features.
    Granulate {
        #[arg(long)]
        data: Option<PathBuf>,
        /// Also dump per-iteration cluster centers.
        #[arg(long)]
        trace: bool,
    },
    /// Train learners on the training split and save them.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        /// bilstm, cnn-gru, lstm-xgb, rf or all.
        #[arg(long, default_value = "all")]
        model: String,
    },
    /// Train, weight and forecast the test split.
    Forecast {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        model: Option<String>,
        /// Forecast with `--model` alone, bypassing the ensemble weights.
        #[arg(long, requires = "model")]
        solo: bool,
    },
    /// Score a forecast CSV.
    Evaluate {
        #[arg(long)]
        forecast: PathBuf,
    },
    /// k-fold cross-validation over granules.
    Cv {
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run the optimizer on a ZDT benchmark.
    BenchmarkOpt {
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        dim: Option<usize>,
    },
}

enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_) | Error::UnknownProblem(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn input_exists(p: &Path) -> std::result::Result<(), Failure> {
    if p.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!(
            "input file not found: {}",
            p.display()
        )))
    }
}

fn build_config(cli: &Cli, data: Option<&PathBuf>) -> std::result::Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => {
            input_exists(p)?;
            RunConfig::load(p)?
        }
        None => RunConfig::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(p) = &cli.preset {
        cfg.preset = p.parse::<Preset>()?;
    }
    if let Some(d) = data {
        cfg.data_path = Some(d.clone());
    }
    if let Some(p) = &cfg.data_path {
        input_exists(p)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

fn open_run(cli: &Cli, name: &str, cfg: &RunConfig) -> Result<RunDir> {
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| Path::new("out").join(name));
    let mut rd = RunDir::create(dir)?;
    rd.write("config.txt", cfg.to_text().as_bytes())?;
    Ok(rd)
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    match &cli.cmd {
        Cmd::Synth { length } => {
            let mut cfg = build_config(&cli, None)?;
            if let Some(l) = length {
                cfg.synth.length = *l;
            }
            let raw = generate(&cfg.synth, cfg.seed)?;
            let mut rd = open_run(&cli, "synth", &cfg)?;
            let path = rd.write("data.csv", &csv_bytes(|b| write_series_csv(&raw, b)))?;
            let gaps = raw.gap_mask().iter().filter(|g| **g).count();
            println!(
                "wrote {} samples ({gaps} missing) to {}",
                raw.len(),
                path.display()
            );
            rd.finish(&cfg.hash())?;
        }
        Cmd::Granulate { data, trace } => {
            let cfg = build_config(&cli, data.as_ref())?;
            let raw = pipeline::load_input(&cfg)?;
            let prep = pipeline::prepare(&cfg, &raw)?;
            let mut rd = open_run(&cli, "granulate", &cfg)?;
            rd.write("granules.csv", &csv_bytes(|b| prep.granules.write_csv(b)))?;
            rd.write(
                "features.csv",
                &csv_bytes(|b| write_features_csv(&prep.records, b)),
            )?;
            if *trace {
                let traced = FicmgModel::fit(
                    &prep.granules.points()[..prep.boundaries.0],
                    &cfg.ficmg,
                    true,
                )?;
                rd.write("trace.csv", &csv_bytes(|b| traced.write_trace_csv(b)))?;
            }
            println!("windows: {}", prep.granules.len());
            println!(
                "clustering iterations: {} ({})",
                prep.ficmg.iterations,
                if prep.ficmg.converged {
                    "converged"
                } else {
                    "stopped at max_iters"
                }
            );
            rd.finish(&cfg.hash())?;
        }
        Cmd::Train { data, model } => {
            let cfg = build_config(&cli, data.as_ref())?;
            let kinds: Vec<LearnerKind> = if model == "all" {
                LearnerKind::ALL.to_vec()
            } else {
                vec![model.parse()?]
            };
            let raw = pipeline::load_input(&cfg)?;
            let prep = pipeline::prepare(&cfg, &raw)?;
            let sp = pipeline::splits(&prep, cfg.lag)?;
            let models = pipeline::train_learners(&cfg, &kinds, &sp.train)?;
            let mut rd = open_run(&cli, "train", &cfg)?;
            for m in &models {
                let mut buf = Vec::new();
                m.write(&mut buf)?;
                rd.write(&format!("models/{}.json", m.kind.cli_name()), &buf)?;
                let (v, _) = mape(&sp.val.targets, &m.predict(&sp.val.inputs)?)?;
                println!("{:<9} validation MAPE {v:.3}%", m.kind.cli_name());
            }
            rd.finish(&cfg.hash())?;
        }
        Cmd::Forecast { data, model, solo } => {
            let cfg = build_config(&cli, data.as_ref())?;
            let solo = if *solo {
                Some(
                    model
                        .as_deref()
                        .unwrap_or_default()
                        .parse::<LearnerKind>()?,
                )
            } else {
                if model.is_some() {
                    return Err(Failure::Usage("--model on forecast needs --solo".into()));
                }
                None
            };
            let raw = pipeline::load_input(&cfg)?;
            let prep = pipeline::prepare(&cfg, &raw)?;
            let fr = pipeline::run_forecast(&cfg, &prep, solo)?;
            let mut rd = open_run(&cli, "forecast", &cfg)?;
            rd.write(
                "forecast.csv",
                &csv_bytes(|b| fr.bundle.write_csv(fr.test_actuals(), b)),
            )?;
            let report = match &fr.weight_fit {
                Some(w) => w.report_json(&fr.learner_names()),
                None => serde_json::to_string_pretty(&serde_json::json!({
                    "learners": fr.learner_names(),
                    "chosen_weights": fr.weights.0,
                    "solo": true,
                }))
                .expect("plain data serialises"),
            };
            rd.write("weights.json", report.as_bytes())?;
            let iv = serde_json::to_string_pretty(&fr.intervals).expect("plain data serialises");
            rd.write("intervals.json", iv.as_bytes())?;
            let names = fr.learner_names();
            let w: Vec<String> = names
                .iter()
                .zip(&fr.weights.0)
                .map(|(n, w)| format!("{n}={w:.4}"))
                .collect();
            println!("weights: {}", w.join(" "));
            println!("test samples: {}", fr.bundle.point.len());
            let (m, _) = mape(fr.test_actuals(), &fr.bundle.point)?;
            println!("test MAPE: {m:.3}%");
            rd.finish(&cfg.hash())?;
        }
        Cmd::Evaluate { forecast } => {
            let cfg = build_config(&cli, None)?;
            input_exists(forecast)?;
            let file = std::fs::File::open(forecast).map_err(|e| Error::Io {
                path: forecast.clone(),
                source: e,
            })?;
            let (actual, bundle) = read_forecast_csv(file).map_err(|e| e.in_stage("evaluate"))?;
            let ps = point_scores(&actual, &bundle.point)?;
            let mut rows: Vec<(String, f64)> = PointScores::COLUMNS
                .iter()
                .zip(ps.values())
                .map(|(n, v)| (n.to_string(), v))
                .collect();
            for l in &bundle.intervals {
                let s = interval_scores(&actual, &l.lower, &l.upper, l.level)?;
                let tag = (l.level * 100.0).round() as u32;
                rows.push((format!("PICP{tag}"), s.picp));
                rows.push((format!("PINAW{tag}"), s.pinaw));
                rows.push((format!("AIS{tag}"), s.ais));
            }
            let csv: String = std::iter::once("metric,value\n".to_string())
                .chain(rows.iter().map(|(n, v)| format!("{n},{v}\n")))
                .collect();
            let text: String = rows
                .iter()
                .map(|(n, v)| format!("{n:<8} {v:>12.6}\n"))
                .collect();
            let mut rd = open_run(&cli, "evaluate", &cfg)?;
            rd.write("metrics.csv", csv.as_bytes())?;
            rd.write("metrics.txt", text.as_bytes())?;
            print!("{text}");
            rd.finish(&cfg.hash())?;
        }
        Cmd::Cv { data } => {
            let cfg = build_config(&cli, data.as_ref())?;
            let raw = pipeline::load_input(&cfg)?;
            let prep = pipeline::prepare(&cfg, &raw)?;
            let report = run_cv(&prep.granules, &cfg)?;
            let mut rd = open_run(&cli, "cv", &cfg)?;
            rd.write("cv.csv", &csv_bytes(|b| report.write_csv(b)))?;
            print_cv(&report);
            rd.finish(&cfg.hash())?;
        }
        Cmd::BenchmarkOpt { problem, dim } => {
            let mut cfg = build_config(&cli, None)?;
            if let Some(p) = problem {
                cfg.problem = p.parse()?;
            }
            if let Some(d) = dim {
                cfg.problem_dim = *d;
            }
            let zdt = Zdt::new(cfg.problem, cfg.problem_dim)?;
            let mcfg = cfg.mosfo_config();
            let t = Instant::now();
            let archive = optimize(&zdt, &mcfg)?;
            let secs = t.elapsed().as_secs_f64();
            let front = archive.objectives();
            let reference: Vec<Vec<f64>> = analytic_front(cfg.problem, 500)
                .iter()
                .map(|p| p.to_vec())
                .collect();
            let q = front_quality(&front, &reference)?;
            let mut csv = String::from("f1,f2");
            (1..=cfg.problem_dim).for_each(|j| csv.push_str(&format!(",x{j}")));
            csv.push('\n');
            for m in archive.members() {
                let vals: Vec<String> = m
                    .objectives
                    .iter()
                    .chain(&m.position)
                    .map(f64::to_string)
                    .collect();
                csv.push_str(&vals.join(","));
                csv.push('\n');
            }
            let quality = format!(
                "igd = {}\nspacing = {}\nsize = {}\n",
                q.igd,
                q.spacing,
                front.len()
            );
            let mut rd = open_run(&cli, "benchmark-opt", &cfg)?;
            rd.write("front.csv", csv.as_bytes())?;
            rd.write("quality.txt", quality.as_bytes())?;
            rd.finish(&cfg.hash())?;
            print!("{}: {quality}", cfg.problem);
            println!("runtime = {secs:.3}s");
            let dominated = count_dominated_pairs(&front);
            if dominated > 0 || front.len() > mcfg.archive_capacity {
                return Err(Failure::Runtime(Error::InvalidConfig(format!(
                    "archive unsound: {dominated} dominated pairs, size {}",
                    front.len()
                ))));
            }
        }
    }
    Ok(())
}

fn print_cv(r: &CvReport) {
    println!(
        "{:<6}{}",
        "fold",
        PointScores::COLUMNS.map(|c| format!("{c:>10}")).join("")
    );
    for f in &r.folds {
        println!(
            "{:<6}{}",
            f.fold,
            f.scores.values().map(|v| format!("{v:>10.4}")).join("")
        );
    }
    println!(
        "{:<6}{}",
        "mean",
        r.mean().map(|v| format!("{v:>10.4}")).join("")
    );
}
