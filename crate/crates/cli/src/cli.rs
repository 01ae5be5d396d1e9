use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use online_hmm::harness::ExperimentConfig;

use crate::config::{parse_config, ConfigFile};
use crate::curve_csv::{write_curve, INF_SENTINEL};
use crate::error::{CliError, Result};
use crate::manifest::{compare, render_summary, LearnerEntry, RunManifest, ARTIFACT, VERSION};
use crate::runner::{default_threads, run_experiment, LearnerRun};

const DEFAULTS: &str = "\
Configuration defaults (JSON keys; omitted keys take these values):
  sequences        10000   sequences per replica (P)
  replicas         1       independent random teachers (R)
  seed             0       master seed; every random draw derives from it
  snapshot_stride  10      parameter snapshot every k sequences, 0 disables
  kl_cap           1000000 largest m^T enumerated for KL
  teacher          \"random\" every row of pi, A, B drawn from the flat Dirichlet;
                   or {\"fixed\": {\"n\",\"m\",\"T\",\"pi\",\"A\",\"B\"}}
  drift            {\"kind\": \"static\"}; {\"kind\": \"abrupt\", \"interval\": k} redraws
                   the teacher after every k sequences (learners are not reset);
                   {\"kind\": \"gradual\", \"delta\": 0.01} adds U(0, delta) to every
                   entry after each sequence, then renormalizes
  student_init     \"symmetric\" all entries of each row equal;
                   or {\"perturbed\": {\"amplitude\": a}} mixes in a random model
Per learner (learners[i]):
  algorithm        required: bwo, bc, bona or mpa
  eta_bw           0.1     BWO learning rate
  eta_bc           0.5     BC learning rate
  lambda           0.01    BC softmax scale
  prior_strength   1.0     Dirichlet hyperparameter of the symmetric prior (bona, mpa)
  epsilon          1e-12   floor on student parameters inside likelihoods (bwo, bc)
  enumeration_cap  1000000 largest n^T hidden-path enumeration (bona, mpa)
  solver           {\"tol\": 1e-10, \"max_iter\": 500, \"degeneracy_guard\": 1e-6} (bona)
Output:
  <out>/config.json, <out>/manifest.json and <out>/learner<i>_<algorithm>.csv
  with columns p,kl_mean,kl_stderr,inf_flag (+ pi_i, A_ij, B_ia snapshots of
  replica 0 when snapshot_stride > 0). Infinite KL is written as 1e9 with
  inf_flag = 1.
Exit codes: 0 success, 1 configuration or input error, 2 runtime error.";

#[derive(Debug, Parser)]
#[command(name = "online-hmm", version, about = "Teacher-student experiments with online HMM learners", after_help = DEFAULTS)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment and write curves and a manifest
    Run {
        /// Experiment configuration (JSON)
        #[arg(long)]
        config: PathBuf,
        /// Output directory, created if missing
        #[arg(long)]
        out: PathBuf,
        /// Override the configuration's master seed
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for replicas [default: available parallelism]
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Summarize two or more run manifests
    Compare {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
    },
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("config types serialize");
    s.push('\n');
    s
}

/// Writes config, curves and manifest for finished runs into `out`.
pub fn write_outputs(out: &Path, config: &ExperimentConfig, runs: &[LearnerRun], threads: usize) -> Result<RunManifest> {
    std::fs::create_dir_all(out).map_err(|source| CliError::Write {
        path: out.to_path_buf(),
        source,
    })?;
    let echo = ConfigFile::from_experiment(config);
    write_file(&out.join("config.json"), &to_json(&echo))?;

    let mut learners = Vec::with_capacity(runs.len());
    for (index, run) in runs.iter().enumerate() {
        let name = format!("learner{index}_{}.csv", run.config.kind.name());
        write_curve(&out.join(&name), run, config.dims, config.snapshot_stride > 0)?;
        learners.push(LearnerEntry {
            index,
            algorithm: run.config.kind.name().to_string(),
            csv: name,
            wall_clock_seconds: run.wall_clock.as_secs_f64(),
            update_seconds: run.update_time.as_secs_f64(),
            failed_updates: run.failed_updates,
            max_projection_residual: run.max_projection_residual,
        });
    }
    let manifest = RunManifest {
        artifact: ARTIFACT.to_string(),
        version: VERSION.to_string(),
        seed: config.seed,
        threads,
        config: echo,
        learners,
    };
    write_file(&out.join("manifest.json"), &to_json(&manifest))?;
    Ok(manifest)
}

fn run(config: &Path, out: &Path, seed: Option<u64>, threads: Option<usize>) -> Result<()> {
    let (_, mut experiment) = parse_config(config)?;
    if let Some(seed) = seed {
        experiment.seed = seed;
    }
    let threads = match threads {
        Some(0) => return Err(CliError::Usage("--threads must be at least 1".into())),
        Some(k) => k,
        None => default_threads(),
    };
    let runs = run_experiment(&experiment, threads)?;
    let manifest = write_outputs(out, &experiment, &runs, threads)?;
    for (entry, run) in manifest.learners.iter().zip(&runs) {
        let last = run.averaged.points.last().map_or(f64::NAN, |p| p.mean);
        println!(
            "{}\tfinal_kl={}\twall_clock={:.3}s\tfailed_updates={}",
            entry.csv,
            if last.is_infinite() { INF_SENTINEL } else { last },
            entry.wall_clock_seconds,
            entry.failed_updates
        );
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => run(&config, &out, seed, threads),
        Command::Compare { manifests } => {
            print!("{}", render_summary(&compare(&manifests)?));
            Ok(())
        }
    }
}

/// Parses `args` (including the program name), executes, and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
