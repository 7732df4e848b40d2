//! `rcpolar construct | puncture | simulate`
//!
//! Settings come from an optional TOML file; command-line flags override it.
//! Exit codes: 0 success, 2 configuration error, 3 runtime error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rcpolar::config::RunConfig;
use rcpolar::harq::{sweep, write_results_csv};
use rcpolar::Error;
use toml::Value;

#[derive(Parser, Debug)]
#[command(name = "rcpolar", version, about = "Rate-compatible polar codes and HARQ simulation")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Master seed; generated and echoed when absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(flatten)]
    code: CodeArgs,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct CodeArgs {
    /// log2 of the mother code length.
    #[arg(long, global = true)]
    n: Option<i64>,
    /// Information bits.
    #[arg(long, global = true)]
    k: Option<i64>,
    /// log2 of the base length.
    #[arg(long, global = true)]
    p: Option<i64>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Bit-channel reliability profile as CSV.
    Construct {
        /// ga, bec or monte-carlo.
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long)]
        erasure: Option<f64>,
        /// Choose reliabilities for a first transmission of this many bits.
        #[arg(long)]
        selection_len: Option<i64>,
        #[arg(long)]
        trials: Option<i64>,
    },
    /// Derive a puncturing sequence with the progressive algorithm.
    Puncture {
        /// GA design SNR (dB, per complex symbol unless the config says otherwise).
        #[arg(long)]
        design_snr: Option<f64>,
        /// Use the erasure-channel metric with this erasure probability instead.
        #[arg(long)]
        design_erasure: Option<f64>,
        #[arg(long)]
        base_k: Option<i64>,
    },
    /// BER/BLER/throughput sweep.
    Simulate {
        /// bpsk, 16qam or 64qam.
        #[arg(long)]
        modulation: Option<String>,
        /// awgn, fast-fading or bec.
        #[arg(long)]
        channel: Option<String>,
        /// Erasure probability for the bec channel.
        #[arg(long)]
        erasure: Option<f64>,
        /// cc or ir.
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        t: Option<i64>,
        #[arg(long)]
        l: Option<i64>,
        /// Comma-separated SNR points in dB.
        #[arg(long, value_delimiter = ',')]
        snr: Option<Vec<f64>>,
        #[arg(long)]
        max_blocks: Option<i64>,
        #[arg(long)]
        target_errors: Option<i64>,
        /// random or all-zero.
        #[arg(long)]
        messages: Option<String>,
    },
}

fn set(root: &mut Value, path: &str, v: impl Into<Value>) {
    let mut node = root;
    let mut keys = path.split('.').peekable();
    while let Some(key) = keys.next() {
        let table = match node {
            Value::Table(t) => t,
            other => {
                *other = Value::Table(Default::default());
                let Value::Table(t) = other else { unreachable!() };
                t
            }
        };
        if keys.peek().is_none() {
            table.insert(key.to_string(), v.into());
            return;
        }
        node = table
            .entry(key.to_string())
            .or_insert_with(|| Value::Table(Default::default()));
    }
}

fn set_opt<T: Into<Value>>(root: &mut Value, path: &str, v: Option<T>) {
    if let Some(v) = v {
        set(root, path, v);
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut root = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
                field: "config".into(),
                reason: format!("{}: {e}", path.display()),
            })?;
            toml::from_str::<Value>(&text).map_err(|e| Error::Config {
                field: "config".into(),
                reason: e.message().to_string(),
            })?
        }
        None => Value::Table(Default::default()),
    };
    set_opt(&mut root, "seed", cli.seed.map(|s| s as i64));
    set_opt(&mut root, "output", cli.output.as_ref().map(|p| p.to_string_lossy().into_owned()));
    set_opt(&mut root, "code.n", cli.code.n);
    set_opt(&mut root, "code.k", cli.code.k);
    set_opt(&mut root, "code.p", cli.code.p);
    match &cli.cmd {
        Cmd::Construct { method, snr, erasure, selection_len, trials } => {
            set_opt(&mut root, "construction.method", method.clone());
            set_opt(&mut root, "construction.snr_db", *snr);
            set_opt(&mut root, "construction.erasure", *erasure);
            set_opt(&mut root, "construction.selection_len", *selection_len);
            set_opt(&mut root, "construction.trials", *trials);
        }
        Cmd::Puncture { design_snr, design_erasure, base_k } => {
            set(&mut root, "puncturing.sequence", "derive");
            if let Some(e) = design_erasure {
                let mut t = toml::map::Map::new();
                t.insert("kind".into(), "bec".into());
                t.insert("erasure".into(), (*e).into());
                set(&mut root, "puncturing.design", Value::Table(t));
            } else if let Some(s) = design_snr {
                set(&mut root, "puncturing.design.kind", "ga");
                set(&mut root, "puncturing.design.snr_db", *s);
                let has_conv = root
                    .get("puncturing")
                    .and_then(|p| p.get("design"))
                    .and_then(|d| d.get("convention"))
                    .is_some();
                if !has_conv {
                    set(&mut root, "puncturing.design.convention", "per-complex-symbol");
                }
            }
            set_opt(&mut root, "puncturing.base_k", *base_k);
        }
        Cmd::Simulate { modulation, channel, erasure, mode, t, l, snr, max_blocks, target_errors, messages } => {
            set_opt(&mut root, "link.modulation", modulation.clone());
            if let Some(c) = channel {
                let mut tbl = toml::map::Map::new();
                tbl.insert("kind".into(), c.clone().into());
                if let Some(e) = erasure {
                    tbl.insert("erasure".into(), (*e).into());
                }
                set(&mut root, "link.channel", Value::Table(tbl));
            } else {
                set_opt(&mut root, "link.channel.erasure", *erasure);
            }
            set_opt(&mut root, "link.mode", mode.clone());
            set_opt(&mut root, "link.t", *t);
            set_opt(&mut root, "link.l", *l);
            set_opt(&mut root, "link.snr_db", snr.clone());
            set_opt(&mut root, "stopping.max_blocks", *max_blocks);
            set_opt(&mut root, "stopping.target_block_errors", *target_errors);
            set_opt(&mut root, "link.messages", messages.clone());
        }
    }
    RunConfig::from_value(root)
}

fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    let cfg = build_config(&cli)?;
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Error::Config { field: "workers".into(), reason: "must be at least 1".into() });
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Error::Config { field: "workers".into(), reason: e.to_string() })?;
    }
    let seed = cfg.seed.unwrap_or_else(rand::random);
    match cli.cmd {
        Cmd::Construct { .. } => {
            let (seq, _) = cfg.sequence()?;
            let profile = cfg.construct(&seq, seed)?;
            if cfg.construction.method == rcpolar::construction::Method::MonteCarlo {
                eprintln!("seed={seed}");
            }
            let mut out = open_output(cfg.output.as_ref())?;
            profile.write_csv(&mut out)?;
            out.flush()?;
        }
        Cmd::Puncture { .. } => {
            let (seq, res) = cfg.sequence()?;
            let res = res.expect("puncture always derives");
            for (m, step) in res.steps.iter().enumerate() {
                if let Some((other, metric)) = step.runner_up {
                    let gap = (metric - step.metric).abs() / step.metric.abs().max(f64::MIN_POSITIVE);
                    if gap <= 1e-9 {
                        eprintln!("tie at step {m}: chose {} over {other} (relative gap {gap:.1e})", step.chosen);
                    }
                }
            }
            let mut out = open_output(cfg.output.as_ref())?;
            let design = toml::to_string(&cfg.puncturing.design).unwrap_or_default();
            writeln!(
                out,
                "# progressive puncturing, base length {}, base k {}, {}",
                seq.base_len(),
                cfg.base_k(),
                design.trim().replace('\n', ", ")
            )?;
            out.write_all(seq.to_text().as_bytes())?;
            out.flush()?;
        }
        Cmd::Simulate { .. } => {
            let Some(path) = cfg.output.clone() else {
                return Err(Error::Config { field: "output".into(), reason: "simulate needs an output path".into() });
            };
            eprintln!("seed={seed}");
            let sc = cfg.sweep_config(seed)?;
            let rows = sweep(&sc)?;
            write_results_csv(BufWriter::new(File::create(path)?), seed, &rows)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Config { .. } | Error::Parse(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
