//! `calim`: measure classifier calibration from prediction dumps, fit
//! and apply post-hoc calibration maps, and export reliability
//! diagrams.

mod commands;
mod diagram;
mod io;

use std::path::PathBuf;

use anyhow::{Context, Result};
use calim_core::{BinningScheme, DEFAULT_DIAGRAM_BINS, DEFAULT_HISTOGRAM_BINS, DEFAULT_METRIC_BINS};
use clap::{Parser, Subcommand, ValueEnum};

use commands::{ClasswiseArg, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scheme {
    EqualWidth,
    EqualFrequency,
}

impl From<Scheme> for BinningScheme {
    fn from(s: Scheme) -> Self {
        match s {
            Scheme::EqualWidth => BinningScheme::EqualWidth,
            Scheme::EqualFrequency => BinningScheme::EqualFrequency,
        }
    }
}

#[derive(Parser)]
#[command(name = "calim", version, about = "Confidence-calibration toolkit for classifier prediction dumps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print calibration metrics (accuracy, ECE, MCE, cwECE, NLL, Brier)
    Metrics {
        /// Predictions CSV (logit_*/prob_* columns plus a label column)
        #[arg(long)]
        input: PathBuf,
        /// Number of bins for the binned metrics
        #[arg(long, default_value_t = DEFAULT_METRIC_BINS)]
        bins: usize,
        #[arg(long, value_enum, default_value_t = Scheme::EqualWidth)]
        scheme: Scheme,
        /// Emit the report as JSON instead of a text table
        #[arg(long)]
        json: bool,
    },
    /// Fit a calibration map on a calibration set and store it
    Fit {
        #[arg(long, value_enum)]
        method: Method,
        /// Calibration-set predictions CSV
        #[arg(long)]
        input: PathBuf,
        /// Output map file (JSON)
        #[arg(long)]
        out: PathBuf,
        /// Bin count for histogram binning (other methods ignore it)
        #[arg(long, default_value_t = DEFAULT_HISTOGRAM_BINS)]
        bins: usize,
        /// Binning scheme for histogram binning
        #[arg(long, value_enum, default_value_t = Scheme::EqualWidth)]
        scheme: Scheme,
    },
    /// Apply a stored calibration map to a predictions file
    Apply {
        /// Map file written by `calim fit`
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Output predictions CSV (calibrated)
        #[arg(long)]
        out: PathBuf,
    },
    /// Export a reliability diagram (JSON, optionally SVG)
    Reliability {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DIAGRAM_BINS)]
        bins: usize,
        #[arg(long, value_enum, default_value_t = Scheme::EqualWidth)]
        scheme: Scheme,
        /// Build a classwise diagram: a 1-based class index, or 'all'
        #[arg(long)]
        classwise: Option<ClasswiseArg>,
        /// Write the JSON document here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render the diagram as SVG
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Fit every method on a calibration set and tabulate test metrics
    Compare {
        /// Calibration-set predictions CSV
        #[arg(long)]
        calib: PathBuf,
        /// Test-set predictions CSV
        #[arg(long)]
        test: PathBuf,
        /// Methods to compare (default: all)
        #[arg(long, value_enum, value_delimiter = ',')]
        methods: Vec<Method>,
        /// Bin count for histogram binning
        #[arg(long, default_value_t = DEFAULT_HISTOGRAM_BINS)]
        bins: usize,
        /// Emit machine-readable JSON instead of the table
        #[arg(long)]
        json: bool,
    },
    /// Generate a synthetic predictions file with known calibration
    Synth {
        /// Sample count
        #[arg(long)]
        n: usize,
        /// Class count (at least 2)
        #[arg(long)]
        classes: usize,
        /// Scale of the Gaussian true logits
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        /// Logit multiplier: 1 = calibrated, >1 overconfident, <1 underconfident
        #[arg(long, default_value_t = 1.0)]
        distort: f64,
        /// RNG seed; falls back to $CALIM_SEED, then 0
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn effective_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("CALIM_SEED") {
        Ok(text) => text
            .parse()
            .with_context(|| format!("CALIM_SEED is not a valid seed: '{text}'")),
        Err(_) => Ok(0),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Metrics { input, bins, scheme, json } => {
            commands::metrics(&input, bins, scheme.into(), json)
        }
        Command::Fit { method, input, out, bins, scheme } => {
            commands::fit(method, &input, &out, bins, scheme.into())
        }
        Command::Apply { map, input, out } => commands::apply(&map, &input, &out),
        Command::Reliability { input, bins, scheme, classwise, out, svg } => {
            commands::reliability(
                &input,
                bins,
                scheme.into(),
                classwise,
                out.as_deref(),
                svg.as_deref(),
            )
        }
        Command::Compare { calib, test, methods, bins, json } => {
            let methods = if methods.is_empty() {
                Method::ALL.to_vec()
            } else {
                methods
            };
            commands::compare(&calib, &test, &methods, bins, json)
        }
        Command::Synth { n, classes, sigma, distort, seed, out } => {
            commands::synth(n, classes, sigma, distort, effective_seed(seed)?, &out)
        }
    }
}

fn main() {
    // Die quietly instead of panicking when stdout is closed early
    // (e.g. piped into `head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(2);
    }
}
