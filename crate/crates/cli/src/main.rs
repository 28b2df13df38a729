use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qweather_bench::error::{AtStage, HarnessError, Stage};
use qweather_bench::report::write_file;
use qweather_bench::{compare, emit_plot_data, execute, load_or_run, pipeline, DataSource, ExperimentConfig, ExperimentReport};
use qweather_core::numfmt;
use qweather_core::weather::{correlate, select_features, synth_generate, Selection, DEFAULT_TARGET};

#[derive(Parser)]
#[command(name = "qweather", version, about = "Quantum and classical weather model benchmarks")]
struct Cli {
    /// Seed for synthetic data and, with `run`, the model seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Experiment config (JSON) used by `run` when no path is given.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic monthly dataset as CSV.
    Synth {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Read a CSV, drop unusable rows and report what was kept.
    Ingest {
        input: PathBuf,
        #[arg(long, default_value = DEFAULT_TARGET)]
        target: String,
    },
    /// Rank features by Pearson correlation with the target.
    Correlate {
        /// CSV file; synthetic data is used when omitted.
        input: Option<PathBuf>,
        #[arg(long, default_value = DEFAULT_TARGET)]
        target: String,
        #[arg(long, conflicts_with = "top_k")]
        threshold: Option<f64>,
        #[arg(long)]
        top_k: Option<usize>,
        /// Rows of synthetic data when no input is given.
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Run one experiment and write its run directory.
    Run { config: Option<PathBuf> },
    /// Tabulate two or more reports (run dirs, report.json or config files).
    Compare {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Write the test-set prediction series of a report.
    Plotdata {
        input: PathBuf,
        #[arg(long)]
        probabilities: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::Write(format!("{}: {e}", dir.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), HarnessError> {
    match &cli.command {
        Command::Synth { n, output } => {
            let ds = synth_generate(cli.seed.unwrap_or(0), *n).at(Stage::Ingest)?;
            let path = output.clone().unwrap_or_else(|| cli.out_dir.join("synth.csv"));
            if let Some(parent) = path.parent() {
                ensure_dir(parent)?;
            }
            let mut buf = Vec::new();
            ds.write_csv(&mut buf).at(Stage::Ingest)?;
            write_file(&path, buf)?;
            println!("{} rows -> {}", ds.len(), path.display());
        }
        Command::Ingest { input, target } => {
            let (ds, rep) = pipeline::ingest(&DataSource::Csv(input.clone()), target)?;
            ensure_dir(&cli.out_dir)?;
            let json = serde_json::to_string_pretty(&rep).expect("report serializes");
            write_file(&cli.out_dir.join("ingestion.json"), json.clone() + "\n")?;
            let mut buf = Vec::new();
            ds.write_csv(&mut buf).at(Stage::Ingest)?;
            write_file(&cli.out_dir.join("ingested.csv"), buf)?;
            println!("{json}");
        }
        Command::Correlate { input, target, threshold, top_k, n } => {
            let data = match input {
                Some(p) => DataSource::Csv(p.clone()),
                None => DataSource::Synth { seed: cli.seed.unwrap_or(0), n: *n },
            };
            let (ds, _) = pipeline::ingest(&data, target)?;
            let rep = correlate(&ds).at(Stage::Correlate)?;
            let width = rep.entries.iter().map(|e| e.feature.len()).max().unwrap_or(7).max(7);
            println!("{:<width$}  {:>7}", "feature", "r");
            for e in &rep.entries {
                println!("{:<width$}  {:>7}", e.feature, numfmt::table(e.r));
            }
            for u in &rep.undefined {
                println!("{u:<width$}  {:>7}", "undef");
            }
            let rule = match (threshold, top_k) {
                (Some(t), _) => Some(Selection::Threshold(*t)),
                (None, Some(k)) => Some(Selection::TopK(*k)),
                (None, None) => None,
            };
            if let Some(rule) = rule {
                let sel = select_features(&rep, rule).at(Stage::Select)?;
                println!("selected: {}", sel.join(", "));
            }
            ensure_dir(&cli.out_dir)?;
            let json = serde_json::to_string_pretty(&rep).expect("report serializes");
            write_file(&cli.out_dir.join("correlations.json"), json + "\n")?;
        }
        Command::Run { config } => {
            let path = config
                .as_ref()
                .or(cli.config.as_ref())
                .ok_or_else(|| HarnessError::Config("no config given; pass a path or --config".into()))?;
            let mut cfg = ExperimentConfig::load(path)?;
            if let Some(s) = cli.seed {
                cfg.seed = Some(s);
            }
            let (dir, report) = execute(&cfg, &cli.out_dir)?;
            let m = &report.metrics;
            match (m.train.accuracy, m.test.accuracy, m.test.mse_scaled) {
                (Some(a), Some(b), _) => println!("train accuracy {}  test accuracy {}", numfmt::table(a), numfmt::table(b)),
                (_, _, Some(s)) => println!(
                    "test mse {} (scaled), {} K^2",
                    numfmt::table(s),
                    numfmt::table(m.test.mse_original.unwrap_or(f64::NAN))
                ),
                _ => {}
            }
            println!("parameters {}", report.parameters.total);
            println!("-> {}", dir.display());
        }
        Command::Compare { inputs } => {
            let reports = inputs
                .iter()
                .map(|p| load_or_run(p, &cli.out_dir))
                .collect::<Result<Vec<ExperimentReport>, _>>()?;
            let table = compare(&reports)?;
            print!("{}", table.to_text());
            ensure_dir(&cli.out_dir)?;
            write_file(&cli.out_dir.join("compare.csv"), table.to_csv())?;
        }
        Command::Plotdata { input, probabilities, output } => {
            let report = if input.is_dir() {
                ExperimentReport::load(&input.join("report.json"))?
            } else {
                ExperimentReport::load(input)?
            };
            let csv = emit_plot_data(&report, *probabilities)?;
            let path = output.clone().unwrap_or_else(|| cli.out_dir.join("plotdata.csv"));
            if let Some(parent) = path.parent() {
                ensure_dir(parent)?;
            }
            write_file(&path, csv)?;
            println!("{} rows -> {}", report.predictions.len(), path.display());
        }
    }
    Ok(())
}
