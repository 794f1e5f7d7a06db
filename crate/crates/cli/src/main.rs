//! `qnnc`: compress, inspect and run quantized networks.

mod io;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use qnn_codec::bounds::BoundReport;
use qnn_codec::deepcodec::ktree::compress_network_ktree;
use qnn_codec::deepcodec::{argmax, compress_network_plbg, decompress_network, infer_network, NetworkContainer};
use qnn_codec::harness::{container_rows, run_bench, BenchRow, BenchSpec};
use qnn_codec::randgen::{gen_network, ColorDistribution, PRNG_NAME};
use qnn_codec::{ActivationKind, Codebook};

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::invalid(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<qnn_codec::Error> for CliError {
    fn from(e: qnn_codec::Error) -> Self {
        let code = if matches!(e, qnn_codec::Error::Verification(_)) {
            3
        } else {
            2
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "qnnc",
    version,
    about = "Lossless compression and compressed-domain inference for quantized networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CodecMode {
    Plbg,
    Ktree,
}

#[derive(Clone, Copy, ValueEnum)]
enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum Final {
    Softmax,
    Identity,
}

/// Matrix shape, color distribution and seed of a synthetic matrix.
#[derive(clap::Args, Clone)]
struct GenArgs {
    /// Rows N (nodes of the layer being fed).
    #[arg(long)]
    rows: usize,
    /// Columns M (inputs).
    #[arg(long)]
    cols: usize,
    /// Color probabilities p0,p1,...,pm.
    #[arg(long, value_delimiter = ',', required = true)]
    probs: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Codebook spans [-clip, clip].
    #[arg(long, default_value_t = 0.16)]
    clip: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Compress an uncompressed network file.
    Compress {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = CodecMode::Plbg)]
        mode: CodecMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild an uncompressed network file; hidden nodes come back in
    /// canonical order.
    Decompress {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a compressed network on one input vector.
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Activation::Relu)]
        activation: Activation,
        #[arg(long = "final", value_enum, default_value_t = Final::Identity)]
        final_activation: Final,
        /// Print the index of the largest output instead of the vector.
        #[arg(long)]
        argmax: bool,
        /// Print queue and timing statistics to stderr.
        #[arg(long)]
        stats: bool,
    },
    /// Print rate and space bounds for an N x M layer.
    Entropy {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        cols: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        probs: Vec<f64>,
        #[arg(long)]
        mc_trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate, compress, infer and verify random matrices.
    Bench {
        #[command(flatten)]
        spec: GenArgs,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a synthetic network as an uncompressed network file.
    Gen {
        #[command(flatten)]
        spec: GenArgs,
        /// Further layer widths after `rows`, for multi-layer networks.
        #[arg(long, value_delimiter = ',')]
        then: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn activation(a: Activation) -> ActivationKind {
    match a {
        Activation::Relu => ActivationKind::Relu,
        Activation::Sigmoid => ActivationKind::Sigmoid,
        Activation::Identity => ActivationKind::Identity,
    }
}

fn final_activation(f: Final) -> ActivationKind {
    match f {
        Final::Softmax => ActivationKind::Softmax,
        Final::Identity => ActivationKind::Identity,
    }
}

fn print_rows(rows: &[BenchRow]) {
    println!(
        "{:>5} {:>12} {:>3} {:>14} {:>12} {:>12} {:>10} {:>10} {:>12} {:>12} {:>6} {:>6}",
        "layer",
        "shape",
        "m",
        "table_bound",
        "observed",
        "ideal",
        "avg_queue",
        "max_queue",
        "compressed_s",
        "dense_s",
        "%pmf",
        "%arith"
    );
    for r in rows {
        println!(
            "{:>5} {:>12} {:>3} {:>14.1} {:>12} {:>12.1} {:>10.1} {:>10} {:>12.6} {:>12.6} {:>6.1} {:>6.1}",
            r.trial,
            format!("{}x{}", r.cols, r.rows),
            r.m,
            r.table_bound,
            r.observed_bits,
            r.ideal_bits,
            r.avg_queue_bits,
            r.max_queue_bits,
            r.compressed_time.as_secs_f64(),
            r.uncompressed_time.as_secs_f64(),
            r.pmf_percent,
            r.arith_percent
        );
    }
}

fn distribution(probs: Vec<f64>) -> Result<ColorDistribution, CliError> {
    Ok(ColorDistribution::new(probs)?)
}

fn write_csv(path: &Path, rows: &[BenchRow]) -> Result<(), CliError> {
    let csv_err = |e: csv::Error| CliError::invalid(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(BenchRow::FIELDS).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.record()).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compress { input, mode, out } => {
            let net = io::read_network(&input)?;
            let c = match mode {
                CodecMode::Plbg => compress_network_plbg(&net)?,
                CodecMode::Ktree => compress_network_ktree(&net)?,
            };
            io::write_container(&out, &c)?;
            print_rows(&container_rows(&c)?);
            let cells: usize = net.layers().iter().map(|l| l.matrix.cells().len()).sum();
            println!(
                "cells={cells} payload_bits={} file_bytes={}",
                c.payload_bits(),
                c.to_bytes().len()
            );
        }
        Command::Decompress { input, out } => {
            let c = io::read_container(&input)?;
            io::write_network(&out, &decompress_network(&c)?)?;
        }
        Command::Infer {
            model,
            input,
            activation: a,
            final_activation: f,
            argmax: want_argmax,
            stats,
        } => {
            let c: NetworkContainer = io::read_container(&model)?;
            let x = io::read_vector(&input)?;
            let out = infer_network(&c, &x, activation(a), final_activation(f))?;
            if want_argmax {
                match argmax(&out.y) {
                    Some(i) => println!("{i}"),
                    None => return Err(CliError::invalid("network has no outputs")),
                }
            } else {
                print!("{}", io::format_vector(&out.y));
            }
            if stats {
                let m = out.metrics;
                eprintln!("avg_queue_bits={:.3}", m.avg_bits);
                eprintln!("max_queue_bits={}", m.max_bits);
                eprintln!("max_queue_entries={}", m.entries_max);
                eprintln!("queue_samples={}", m.samples);
                eprintln!("seconds={:.9}", out.times.total.as_secs_f64());
                eprintln!("pmf_percent={:.2}", out.times.pmf_percent());
                eprintln!("arith_percent={:.2}", out.times.coding_percent());
                eprintln!("accumulate_percent={:.2}", out.times.accumulate_percent());
            }
        }
        Command::Entropy {
            rows,
            cols,
            probs,
            mc_trials,
            seed,
        } => {
            let dist = distribution(probs)?;
            let report = BoundReport::new(rows, cols, &dist, mc_trials.map(|t| (t, seed)))?;
            print!("{report}");
        }
        Command::Bench { spec, trials, csv } => {
            let spec = BenchSpec {
                rows: spec.rows,
                cols: spec.cols,
                dist: distribution(spec.probs)?,
                clip: spec.clip,
                trials,
                seed: spec.seed,
            };
            let (rows, summary) = run_bench(&spec)?;
            if let Some(path) = csv {
                write_csv(&path, &rows)?;
            }
            println!("{summary}");
        }
        Command::Gen { spec, then, out } => {
            let dist = distribution(spec.probs)?;
            let dims: Vec<usize> = [spec.cols, spec.rows].into_iter().chain(then).collect();
            let cb = Codebook::uniform(dist.m(), spec.clip);
            let net = gen_network(&dims, &dist, &cb, spec.seed)?;
            io::write_network(&out, &net)?;
            eprintln!("prng={PRNG_NAME} seed={}", spec.seed);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qnnc: {e}");
            ExitCode::from(e.code)
        }
    }
}
