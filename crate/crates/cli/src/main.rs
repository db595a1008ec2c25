//! `srs`: plan an ensemble, sketch signals, decode sketches and run Monte
//! Carlo suites from the shell.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use srs_core::decoder::{self, DecodeOptions};
use srs_core::harness::{self, TimingSummary};
use srs_core::io as sio;
use srs_core::oracles::{self, BoundQuery};
use srs_core::{Ensemble, EnsembleParams, Error, RepsMode, RunSummary, TrialConfig};

const EXIT_FAILURE: u8 = 1;
const EXIT_DIGEST: u8 = 3;

#[derive(Parser)]
#[command(name = "srs", version, about = "Sublinear-time approximate sparse recovery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan a measurement ensemble and write its spec JSON.
    Plan {
        #[command(flatten)]
        ens: EnsembleFlags,
        /// Output path; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Sketch a `position,value` CSV signal.
    Encode {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        signal: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Apply `i,delta` lines from stdin to a sketch file.
    Update {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        sketch: PathBuf,
        /// Start from the all-zero sketch instead of reading `--sketch`.
        #[arg(long)]
        init: bool,
        /// Write here instead of overwriting `--sketch`.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Recover a sparse approximation from a sketch.
    Decode {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        sketch: PathBuf,
        /// Keep only the largest entries: a count, or a multiple of k such as `2k`.
        #[arg(long)]
        prune: Option<String>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
        format: OutputFormat,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo suite and print its summary JSON.
    Trial(SuiteArgs),
    /// Like `trial`, with timing statistics alongside the summary.
    Bench(SuiteArgs),
    /// Evaluate a tail bound.
    #[command(subcommand)]
    Bounds(BoundsCommand),
}

#[derive(Args)]
struct EnsembleFlags {
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    reps_mode: Option<RepsFlag>,
    #[arg(long)]
    gamma_id: Option<f64>,
    #[arg(long)]
    gamma_est: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RepsFlag {
    Linear,
    Log,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct SuiteArgs {
    /// TrialConfig JSON. Missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    ens: EnsembleFlags,
    #[arg(long)]
    trials: Option<usize>,
    /// Debugging only: reuse one matrix for every trial.
    #[arg(long)]
    fixed_matrix: bool,
    /// Per-trial rows as CSV.
    #[arg(long)]
    trials_csv: Option<PathBuf>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BoundsCommand {
    /// `Pr[Bin(n, p) >= theta n]` via the Chernoff bound.
    Chernoff {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        n: u64,
    },
    /// Fewer than `theta n` of `n` bins reach `h` of `m` balls.
    Poisson {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        h: u64,
        #[arg(long)]
        theta: f64,
    },
}

impl EnsembleFlags {
    fn apply(&self, p: &mut EnsembleParams) {
        if let Some(n) = self.n {
            p.n = n;
        }
        if let Some(k) = self.k {
            p.k = k;
        }
        if let Some(eps) = self.eps {
            p.eps = eps;
        }
        if let Some(seed) = self.seed {
            p.master_seed = seed;
        }
        if let Some(mode) = self.reps_mode {
            p.reps_mode = match mode {
                RepsFlag::Linear => RepsMode::Linear,
                RepsFlag::Log => RepsMode::Log,
            };
        }
        if let Some(g) = self.gamma_id {
            p.gamma_id = g;
        }
        if let Some(g) = self.gamma_est {
            p.gamma_est = g;
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_spec(path: &Path) -> Result<Ensemble> {
    sio::read_spec(open(path)?).with_context(|| format!("loading spec {}", path.display()))
}

fn load_sketch(path: &Path) -> Result<srs_core::SketchVector> {
    sio::read_sketch(open(path)?).with_context(|| format!("loading sketch {}", path.display()))
}

fn save_sketch(path: &Path, sketch: &srs_core::SketchVector) -> Result<()> {
    sio::write_sketch(sketch, create(path)?)?;
    Ok(())
}

fn parse_prune(s: &str, k: u64) -> Result<usize> {
    let s = s.trim();
    let budget = match s.strip_suffix('k') {
        Some("") => k,
        Some(mult) => mult.parse::<u64>().context("prune multiplier")? * k,
        None => s.parse::<u64>().context("prune budget")?,
    };
    if budget == 0 {
        bail!("prune budget must be positive");
    }
    Ok(budget as usize)
}

fn write_json(value: &impl Serialize, w: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn suite_config(args: &SuiteArgs) -> Result<TrialConfig> {
    let mut cfg = match &args.config {
        Some(path) => {
            let mut text = String::new();
            open(path)?.read_to_string(&mut text)?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => TrialConfig::default(),
    };
    args.ens.apply(&mut cfg.params);
    if let Some(n) = args.ens.n {
        cfg.signal.n = n;
    }
    if let Some(k) = args.ens.k {
        cfg.signal.k = k;
    }
    if let Some(seed) = args.ens.seed {
        cfg.signal.seed = seed;
        cfg.noise_seed = seed;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    cfg.fixed_matrix |= args.fixed_matrix;
    Ok(cfg)
}

#[derive(Serialize)]
struct BenchOutput {
    summary: RunSummary,
    timing: TimingSummary,
}

#[derive(Serialize)]
struct BoundOutput<I: Serialize> {
    inputs: I,
    q: Option<f64>,
    bound: f64,
}

#[derive(Serialize)]
struct ChernoffInputs {
    p: f64,
    theta: f64,
    n: u64,
}

fn run_suite_cmd(args: &SuiteArgs, with_timing: bool) -> Result<()> {
    let cfg = suite_config(args)?;
    let (summary, reports) = harness::run_suite(&cfg)?;
    if let Some(path) = &args.trials_csv {
        harness::write_trials_csv(&reports, create(path)?)?;
    }
    let mut w = output(args.out.as_deref())?;
    if with_timing {
        let timing = harness::timing_summary(&reports);
        write_json(&BenchOutput { summary, timing }, &mut *w)
    } else {
        write_json(&summary, &mut *w)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Plan { ens, out } => {
            let mut params = EnsembleParams::default();
            ens.apply(&mut params);
            let ensemble = Ensemble::plan(&params)?;
            let mut w = output(out.as_deref())?;
            sio::write_spec(&ensemble, &mut w)?;
            writeln!(w)?;
            w.flush()?;
        }
        Command::Encode { spec, signal, out } => {
            let ens = load_spec(&spec)?;
            let entries = sio::read_signal_csv(open(&signal)?)
                .with_context(|| format!("reading signal {}", signal.display()))?;
            save_sketch(&out, &ens.encode_sparse(&entries)?)?;
        }
        Command::Update {
            spec,
            sketch,
            init,
            out,
        } => {
            let ens = load_spec(&spec)?;
            let mut current = if init {
                ens.zero_sketch()
            } else {
                let s = load_sketch(&sketch)?;
                ens.check_sketch(&s)?;
                s
            };
            for (i, delta) in sio::read_updates(io::stdin().lock())? {
                ens.update(&mut current, i, delta)?;
            }
            save_sketch(out.as_deref().unwrap_or(&sketch), &current)?;
        }
        Command::Decode {
            spec,
            sketch,
            prune,
            format,
            out,
        } => {
            let ens = load_spec(&spec)?;
            let s = load_sketch(&sketch)?;
            let opts = DecodeOptions {
                prune: prune.map(|p| parse_prune(&p, ens.params().k)).transpose()?,
                ..DecodeOptions::default()
            };
            let (a, _) = decoder::recover_traced(&ens, &s, &opts, |_, _| {})?;
            let mut w = output(out.as_deref())?;
            match format {
                OutputFormat::Csv => sio::write_recovered_csv(&a, &mut w)?,
                OutputFormat::Json => {
                    sio::write_recovered_json(&a, ens.n(), &mut w)?;
                    writeln!(w)?;
                }
            }
            w.flush()?;
        }
        Command::Trial(args) => run_suite_cmd(&args, false)?,
        Command::Bench(args) => run_suite_cmd(&args, true)?,
        Command::Bounds(BoundsCommand::Chernoff { p, theta, n }) => {
            let bound = oracles::chernoff_binary_bound(p, theta, n)?;
            let doc = BoundOutput {
                inputs: ChernoffInputs { p, theta, n },
                q: None,
                bound,
            };
            write_json(&doc, &mut *output(None)?)?;
        }
        Command::Bounds(BoundsCommand::Poisson { m, n, p, h, theta }) => {
            let query = BoundQuery { m, n, p, h, theta };
            let res = oracles::poisson_bins_bound(&query)?;
            let doc = BoundOutput {
                inputs: query,
                q: Some(res.q),
                bound: res.bound,
            };
            write_json(&doc, &mut *output(None)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("srs: {err:#}");
            let digest = err
                .chain()
                .any(|e| matches!(e.downcast_ref::<Error>(), Some(Error::DigestMismatch { .. })));
            ExitCode::from(if digest { EXIT_DIGEST } else { EXIT_FAILURE })
        }
    }
}
