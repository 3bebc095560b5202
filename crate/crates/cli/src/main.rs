use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use bclab::data::{Dataset, DatasetSpec};
use bclab::experiments::{
    model_label, run_condexp, run_cross_distribution, run_freq_sweep, run_shift_sweep, train_model, ExperimentReport,
    TrainedModel,
};
use bclab::fno::{train, FnoModel, InputEncoding};
use bclab::io::checkpoint::{read_trained, write_trained};
use bclab::io::config::RunConfig;
use bclab::io::dataset::{generate_dataset_file, read_dataset};
use bclab::io::field::write_field;
use bclab::io::report::{write_json, write_report, write_training_log};
use bclab::{Parallelism, Result};

#[derive(Parser)]
#[command(name = "bclab", version, about = "Boundary-shift experiments for a learned Poisson solver")]
struct Cli {
    /// JSON run configuration; missing fields take the standard defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed of the run configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run independent solves and evaluations on the rayon pool.
    #[arg(long, global = true)]
    parallel: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Dist {
    B0,
    B1,
}

impl Dist {
    fn name(self) -> &'static str {
        match self {
            Dist::B0 => "b0",
            Dist::B1 => "b1",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Train,
    Holdout,
    Eval,
}

#[derive(Clone, Copy, ValueEnum)]
enum Encoding {
    Aware,
    Ablated,
}

impl From<Encoding> for InputEncoding {
    fn from(e: Encoding) -> Self {
        match e {
            Encoding::Aware => InputEncoding::BoundaryAware,
            Encoding::Ablated => InputEncoding::Ablated,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample and solve a dataset.
    Datagen {
        #[arg(long, value_enum, default_value = "b0")]
        dist: Dist,
        #[arg(long, value_enum, default_value = "train")]
        split: Split,
        /// Number of instances (defaults to the split size of the run configuration).
        #[arg(long)]
        count: Option<usize>,
        /// Jacobi sweeps (defaults to the split's iteration count).
        #[arg(long)]
        iters: Option<usize>,
        /// Additive offset on the Dirichlet edges.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        shift: f64,
        /// Replaces the Dirichlet bandwidth.
        #[arg(long)]
        bandwidth: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one model and write its checkpoint, sidecar and log.
    Train {
        #[arg(long, value_enum, default_value = "b0")]
        dist: Dist,
        #[arg(long, value_enum, default_value = "aware")]
        encoding: Encoding,
        /// Train on this dataset file instead of regenerating the training split.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Overrides the number of optimizer steps.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate checkpoints on b0 and b1.
    Eval {
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Error against a constant offset of the Dirichlet edges.
    SweepShift {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Error against the Dirichlet bandwidth.
    SweepFreq {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare an ablated prediction with the Monte-Carlo mean solution.
    Condexp {
        /// Ablated checkpoint, optionally followed by a boundary-aware one.
        #[arg(long = "checkpoint", required = true, num_args = 1..=2)]
        checkpoints: Vec<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Manufactured solution, superposition and gradient checks.
    Selftest {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.experiment.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_report(report: &ExperimentReport) {
    println!("{:<24} {:>10} {:>10} {:>6}", "label", "mean", "std", "count");
    for r in &report.rows {
        println!("{:<24} {:>10.4} {:>10.4} {:>6}", r.label, r.stat.mean, r.stat.std, r.stat.count);
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

enum Outcome {
    Done,
    CheckFailed(String),
}

fn run(cli: Cli) -> Result<Outcome> {
    let cfg = load_config(&cli)?;
    let plan = &cfg.experiment;
    let par = Parallelism::from_flag(cli.parallel);
    match cli.command {
        Command::Datagen {
            dist,
            split,
            count,
            iters,
            shift,
            bandwidth,
            out,
        } => {
            let mut boundary = plan.distribution(dist.name())?.clone();
            if let Some(k) = bandwidth {
                boundary = boundary.with_dirichlet_bandwidth(k)?;
            }
            let mut spec: DatasetSpec = match split {
                Split::Train => plan.train_spec(&boundary),
                Split::Holdout => plan.holdout_spec(&boundary),
                Split::Eval => plan.eval_spec(&boundary, 0.0),
            };
            spec.dirichlet_shift = shift;
            if let Some(c) = count {
                spec.count = c;
            }
            if let Some(i) = iters {
                spec.iterations = i;
            }
            ensure_parent(&out)?;
            generate_dataset_file(&out, &spec, 256, par)?;
            println!("wrote {} samples to {}", spec.count, out.display());
        }
        Command::Train {
            dist,
            encoding,
            data,
            steps,
            out,
        } => {
            let mut cfg = cfg.clone();
            if let Some(s) = steps {
                cfg.train.steps = s;
            }
            let enc: InputEncoding = encoding.into();
            let trained = match data {
                None => train_model(&cfg.experiment, &cfg.model, &cfg.train, dist.name(), enc, par)?,
                Some(path) => train_from_file(&cfg, &path, dist, enc, par)?,
            };
            ensure_parent(&out)?;
            write_trained(&out, &trained, dist.name(), &cfg)?;
            let mut log_path = out.clone().into_os_string();
            log_path.push(".log.csv");
            write_training_log(Path::new(&log_path), &trained.log)?;
            match trained.log.final_holdout() {
                Some(e) => println!("{}: final holdout relative L2 {e:.4}", trained.label),
                None => println!("{}: trained", trained.label),
            }
        }
        Command::Eval { checkpoints, out } => {
            let models = checkpoints.iter().map(|p| read_trained(p)).collect::<Result<Vec<_>>>()?;
            let refs: Vec<&TrainedModel> = models.iter().collect();
            let report = run_cross_distribution(plan, &refs, par)?;
            ensure_parent(&out)?;
            write_report(&out, &report)?;
            print_report(&report);
        }
        Command::SweepShift { checkpoint, out } => {
            let report = run_shift_sweep(plan, &read_trained(&checkpoint)?, par)?;
            ensure_parent(&out)?;
            write_report(&out, &report)?;
            print_report(&report);
        }
        Command::SweepFreq { checkpoint, out } => {
            let report = run_freq_sweep(plan, &read_trained(&checkpoint)?, par)?;
            ensure_parent(&out)?;
            write_report(&out, &report)?;
            print_report(&report);
        }
        Command::Condexp { checkpoints, out } => {
            let ablated = read_trained(&checkpoints[0])?;
            let aware = checkpoints.get(1).map(|p| read_trained(p)).transpose()?;
            let result = run_condexp(plan, &ablated, aware.as_ref(), par)?;
            std::fs::create_dir_all(&out)?;
            write_report(&out.join("report.csv"), &result.report)?;
            write_field(&out.join("prediction.bfld"), &result.prediction)?;
            write_field(&out.join("mc_mean.bfld"), &result.mc_mean)?;
            write_field(&out.join("abs_diff.bfld"), &result.abs_diff)?;
            write_json(&out.join("summary.json"), &result.summary())?;
            print_report(&result.report);
            println!(
                "mc-mean distance {:.4}, median individual {:.4}, beaten in {:.1}% of samples",
                result.mean_distance,
                result.median_individual,
                100.0 * result.fraction_beaten
            );
        }
        Command::Selftest { out } => {
            let checks = bclab::selftest::run_all()?;
            for c in &checks {
                println!(
                    "{} {}: {:.3e} (threshold {:.1e}) {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.threshold,
                    c.detail
                );
            }
            if let Some(p) = out {
                ensure_parent(&p)?;
                write_json(&p, &checks)?;
            }
            if let Some(c) = checks.iter().find(|c| !c.passed) {
                return Ok(Outcome::CheckFailed(c.name.clone()));
            }
        }
    }
    Ok(Outcome::Done)
}

fn train_from_file(
    cfg: &RunConfig,
    path: &Path,
    dist: Dist,
    enc: InputEncoding,
    par: Parallelism,
) -> Result<TrainedModel> {
    let data = read_dataset(path)?;
    let fno = cfg.model.fno_config(enc);
    fno.validate_for_grid(data.spec.grid_n)?;
    let holdout_spec = cfg.experiment.holdout_spec(cfg.experiment.distribution(dist.name())?);
    let holdout = Dataset::generate(
        &DatasetSpec {
            grid_n: data.spec.grid_n,
            ..holdout_spec
        },
        par,
    )?
    .encode(enc)?;
    let init = FnoModel::<f32>::init(fno, cfg.train.seed)?;
    let (model, log) = train(init, &data.encode(enc)?, &holdout, &cfg.train)?;
    Ok(TrainedModel {
        label: model_label(dist.name(), enc),
        model,
        log,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed(name)) => {
            eprintln!("error: check_failed: {name}");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
