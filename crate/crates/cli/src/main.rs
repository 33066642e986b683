use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use cpwire::harness::{
    self, db_to_linear, ExperimentConfig, HarnessError, Learner, Method, MetricsRow, Scenario,
};
use cpwire::rng::seeded;
use cpwire::scenarios::{load_rss_csv, rss_to_series, series_without_inputs, synth_rss};

#[derive(Parser)]
#[command(name = "cpwire", version, about = "Conformal prediction experiments for wireless links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coverage/inefficiency sweep on the 8-APSK demodulation channel.
    Demod(OfflineArgs),
    /// Coverage/inefficiency sweep on modulation classification.
    Modclass {
        #[command(flatten)]
        common: OfflineArgs,
        /// Symbols per synthetic example.
        #[arg(long)]
        seq_len: Option<usize>,
        /// Directory holding a raw `<name>.f32` + `<name>.json` corpus.
        #[arg(long, requires = "corpus_name")]
        corpus_dir: Option<PathBuf>,
        #[arg(long, requires = "corpus_dir")]
        corpus_name: Option<String>,
    },
    /// Online RCI versus the uncalibrated baseline on an RSS series.
    RssOnline(OnlineArgs),
    /// Run a few fast end-to-end checks.
    Selftest,
}

#[derive(Args)]
struct CommonArgs {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path (CSV for sweeps, directory for online runs).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OfflineArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Training-set sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n_train: Option<Vec<usize>>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    folds: Option<usize>,
    /// Methods among naive, vb, kcv, cv (comma separated).
    #[arg(long, value_delimiter = ',')]
    method: Option<Vec<String>>,
    /// Learners among freq, bayes (comma separated).
    #[arg(long, value_delimiter = ',')]
    learner: Option<Vec<String>>,
    /// Signal-to-noise ratio in dB.
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    max_cv_n: Option<usize>,
    /// Record per-method wall time (makes output run-dependent).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct OnlineArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// RSS CSV with header `index,channel_id,rss`; AR(1) data when omitted.
    #[arg(long)]
    rss: Option<PathBuf>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Length of the synthetic series.
    #[arg(long)]
    length: Option<usize>,
    /// Standardize the RSS values before training.
    #[arg(long)]
    standardize: bool,
}

fn base_config(common: &CommonArgs, scenario: Scenario) -> Result<ExperimentConfig, HarnessError> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    config.scenario = scenario;
    if let Some(a) = common.alpha {
        config.alpha = a;
        config.online.rci.alpha = a;
    }
    if let Some(s) = common.seed {
        config.seed = s;
        config.online.rci.seed = s;
    }
    if let Some(out) = &common.out {
        config.output = Some(out.clone());
    }
    Ok(config)
}

fn offline_config(args: &OfflineArgs, scenario: Scenario) -> Result<ExperimentConfig, HarnessError> {
    let mut config = base_config(&args.common, scenario)?;
    if let Some(n) = &args.n_train {
        config.n_grid = n.clone();
    }
    if let Some(v) = args.n_test {
        config.n_test = v;
    }
    if let Some(v) = args.trials {
        config.trials = v;
    }
    if let Some(v) = args.folds {
        config.folds = v;
    }
    if let Some(v) = args.max_cv_n {
        config.max_cv_n = v;
    }
    if let Some(db) = args.snr_db {
        config.snr = db_to_linear(db);
    }
    if let Some(m) = &args.method {
        config.methods = m.iter().map(|s| s.parse::<Method>()).collect::<Result<_, _>>()?;
    }
    if let Some(l) = &args.learner {
        config.learners = l.iter().map(|s| s.parse::<Learner>()).collect::<Result<_, _>>()?;
    }
    config.timing |= args.timing;
    Ok(config)
}

fn run_offline(config: &ExperimentConfig) -> anyhow::Result<()> {
    let total = config.n_grid.len() * config.trials;
    let mut done = 0;
    let rows = harness::sweep_offline_with(config, |_| {
        done += 1;
        log::debug!("trial {done}/{total}");
    })?;
    match &config.output {
        Some(path) => {
            harness::write_metrics_csv(path, &rows)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => print!("{}", String::from_utf8(harness::metrics_csv(&rows)?)?),
    }
    print_summary(&rows)
}

fn print_summary(rows: &[MetricsRow]) -> anyhow::Result<()> {
    let summary = harness::summarize_offline(rows);
    eprintln!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn run_online(args: &OnlineArgs) -> anyhow::Result<()> {
    let mut config = base_config(&args.common, Scenario::Rss)?;
    let online = &mut config.online;
    if let Some(w) = args.warmup {
        online.warmup = w;
    }
    if let Some(g) = args.gamma {
        online.rci.gamma = g;
    }
    if let Some(e) = args.eta {
        online.rci.eta = e;
    }
    if let Some(l) = args.length {
        online.ar1.length = l;
    }
    if let Some(p) = &args.rss {
        online.rss_path = Some(p.clone());
    }
    online.standardize |= args.standardize;

    let series = match &online.rss_path {
        Some(path) => rss_to_series(
            &load_rss_csv(path).map_err(HarnessError::from)?,
            online.standardize,
        ),
        None => series_without_inputs(&synth_rss(&online.ar1, &mut seeded(config.seed)).map_err(HarnessError::from)?),
    };
    let report = harness::run_online_experiment(&series, &online.rci, online.warmup)?;
    if let Some(dir) = &config.output {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        harness::write_online_csv(&dir.join("rci.csv"), &report.rci)?;
        harness::write_online_csv(&dir.join("nqb.csv"), &report.baseline)?;
        harness::write_json(&dir.join("summary.json"), &report.summary)?;
        eprintln!("wrote rci.csv, nqb.csv and summary.json to {}", dir.display());
    }
    println!("{}", serde_json::to_string_pretty(&report.summary)?);
    Ok(())
}

fn selftest() -> anyhow::Result<()> {
    let config = ExperimentConfig {
        n_grid: vec![8],
        n_test: 20,
        trials: 2,
        ..ExperimentConfig::default()
    };
    let rows = harness::sweep_offline(&config)?;
    anyhow::ensure!(rows.len() == 2 * 4 * 2, "unexpected row count {}", rows.len());
    anyhow::ensure!(
        harness::metrics_csv(&rows)? == harness::metrics_csv(&harness::sweep_offline(&config)?)?,
        "sweep is not reproducible"
    );
    println!("offline sweep: ok ({} rows)", rows.len());

    let values = synth_rss(
        &cpwire::scenarios::Ar1Config {
            length: 400,
            ..Default::default()
        },
        &mut seeded(1),
    )?;
    let mut rci = cpwire::online::RciConfig::default();
    rci.net.window = 5;
    let report = harness::run_online_experiment(&series_without_inputs(&values), &rci, 100)?;
    anyhow::ensure!(report.rci.len() == 400, "online run truncated");
    println!(
        "online run: ok (coverage {:.3})",
        report.summary.methods["rci"].mean_coverage
    );
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    err.downcast_ref::<HarnessError>().map_or(1, |e| e.exit_code() as u8)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Demod(args) => run_offline(&offline_config(&args, Scenario::Demod)?),
        Command::Modclass {
            common,
            seq_len,
            corpus_dir,
            corpus_name,
        } => {
            let mut config = offline_config(&common, Scenario::Modclass)?;
            if let Some(l) = seq_len {
                config.modclass.seq_len = l;
            }
            if let (Some(dir), Some(name)) = (corpus_dir, corpus_name) {
                config.corpus = Some((dir, name));
            }
            run_offline(&config)
        }
        Command::RssOnline(args) => run_online(&args),
        Command::Selftest => selftest(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
