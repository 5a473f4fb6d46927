//! Implementations behind the CLI subcommands.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use calim_core::{
    classwise_reliability_table, fit_histogram_binning, fit_isotonic, fit_linear_scaling,
    generate, reliability_table, BinEdges, BinningScheme, CalibrationMap, FitReport,
    MetricsReport, PredictionSet, ScalingMode, SynthConfig,
};

use crate::diagram::{render_svg, DiagramFile};
use crate::io::{read_predictions, write_predictions, WriteColumns};

/// Calibration method selectable on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    Histogram,
    Isotonic,
    Temperature,
    Vector,
    VectorBias,
    MatrixBias,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Histogram,
        Method::Isotonic,
        Method::Temperature,
        Method::Vector,
        Method::VectorBias,
        Method::MatrixBias,
    ];

    fn scaling_mode(self) -> Option<ScalingMode> {
        match self {
            Method::Histogram | Method::Isotonic => None,
            Method::Temperature => Some(ScalingMode::Temperature),
            Method::Vector => Some(ScalingMode::Vector),
            Method::VectorBias => Some(ScalingMode::VectorBias),
            Method::MatrixBias => Some(ScalingMode::MatrixBias),
        }
    }

    /// Column label used in the comparison table.
    fn table_label(self) -> &'static str {
        match self {
            Method::Histogram => "Hist-binning",
            Method::Isotonic => "Isotonic",
            Method::Temperature => "T-scaling",
            Method::Vector => "V-scaling",
            Method::VectorBias => "V-scaling-b",
            Method::MatrixBias => "M-scaling-b",
        }
    }

    fn name(self) -> &'static str {
        match self {
            Method::Histogram => "histogram",
            Method::Isotonic => "isotonic",
            Method::Temperature => "temperature",
            Method::Vector => "vector",
            Method::VectorBias => "vector-bias",
            Method::MatrixBias => "matrix-bias",
        }
    }

    fn fit(
        self,
        calib: &PredictionSet,
        bins: usize,
        scheme: BinningScheme,
    ) -> Result<(CalibrationMap, Option<FitReport>)> {
        Ok(match self {
            Method::Histogram => (fit_histogram_binning(calib, bins, scheme)?, None),
            Method::Isotonic => (fit_isotonic(calib)?, None),
            _ => {
                let mode = self.scaling_mode().expect("linear method");
                let (map, report) = fit_linear_scaling(calib, mode)?;
                (map, Some(report))
            }
        })
    }
}

fn print_metrics_text(report: &MetricsReport) {
    println!("accuracy  {:8.2}%", 100.0 * report.accuracy);
    println!("ece       {:8.2}%", 100.0 * report.ece);
    println!("mce       {:8.2}%", 100.0 * report.mce);
    println!("cwece     {:8.2}%", 100.0 * report.cwece);
    println!("nll       {:9.4}", report.nll);
    println!("brier     {:9.4}", report.brier);
    println!("binning   {} bins, {}", report.bins, report.scheme);
}

pub fn metrics(input: &Path, bins: usize, scheme: BinningScheme, json: bool) -> Result<()> {
    let ps = read_predictions(input)?;
    let report = MetricsReport::compute(&ps, bins, scheme)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print_metrics_text(&report);
    }
    Ok(())
}

pub fn fit(
    method: Method,
    input: &Path,
    out: &Path,
    bins: usize,
    scheme: BinningScheme,
) -> Result<()> {
    let calib = read_predictions(input)?;
    let (map, report) = method.fit(&calib, bins, scheme)?;
    fs::write(out, map.to_json(calib.k()))
        .with_context(|| format!("cannot write {}", out.display()))?;

    println!("method      {}", map.method());
    println!("classes     {}", calib.k());
    if method == Method::Histogram {
        println!("binning     {bins} bins, {scheme}");
    }
    if let Some(report) = &report {
        println!("initial nll {:.6}", report.initial_nll);
        println!("final nll   {:.6}", report.final_nll);
        println!("iterations  {}", report.iterations);
        println!("converged   {}", if report.converged { "yes" } else { "no" });
        println!("params      {}", report.summary);
        if !report.converged {
            eprintln!(
                "warning: {} fit did not converge after {} iterations; map written anyway",
                map.method(),
                report.iterations
            );
        }
    }
    println!("wrote       {}", out.display());
    Ok(())
}

pub fn apply(map_path: &Path, input: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(map_path)
        .with_context(|| format!("cannot read {}", map_path.display()))?;
    let map = CalibrationMap::from_json(&text)
        .with_context(|| format!("{} is not a valid map file", map_path.display()))?;
    let ps = read_predictions(input)?;
    let calibrated = map.apply(&ps)?;
    let columns = if calibrated.has_logits() {
        WriteColumns::Both
    } else {
        WriteColumns::Probs
    };
    write_predictions(out, &calibrated, columns)?;
    println!(
        "applied {} map to {} rows, wrote {}",
        map.method(),
        calibrated.n(),
        out.display()
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClasswiseArg {
    All,
    /// 1-based class index.
    One(usize),
}

impl std::str::FromStr for ClasswiseArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "all" {
            return Ok(ClasswiseArg::All);
        }
        match s.parse::<usize>() {
            Ok(j) if j >= 1 => Ok(ClasswiseArg::One(j)),
            _ => Err(format!("expected 'all' or a 1-based class index, got '{s}'")),
        }
    }
}

fn build_diagram(
    ps: &PredictionSet,
    bins: usize,
    scheme: BinningScheme,
    class: Option<usize>,
) -> Result<DiagramFile> {
    let table = match class {
        None => {
            let view = ps.top_label();
            let edges = BinEdges::for_scheme(scheme, bins, &view.conf)?;
            reliability_table(ps, &edges)?
        }
        Some(j) => {
            let confs: Vec<f64> = (0..ps.n()).map(|i| ps.probs_row(i)[j]).collect();
            let edges = BinEdges::for_scheme(scheme, bins, &confs)?;
            classwise_reliability_table(ps, &edges, j)?
        }
    };
    Ok(DiagramFile::from_table(&table))
}

pub fn reliability(
    input: &Path,
    bins: usize,
    scheme: BinningScheme,
    classwise: Option<ClasswiseArg>,
    out: Option<&Path>,
    svg: Option<&Path>,
) -> Result<()> {
    let ps = read_predictions(input)?;
    let json = match classwise {
        None | Some(ClasswiseArg::One(_)) => {
            let class = match classwise {
                Some(ClasswiseArg::One(j)) => {
                    if j > ps.k() {
                        bail!("class {j} outside 1..={}", ps.k());
                    }
                    Some(j - 1)
                }
                _ => None,
            };
            let diagram = build_diagram(&ps, bins, scheme, class)?;
            if let Some(svg_path) = svg {
                fs::write(svg_path, render_svg(&diagram))
                    .with_context(|| format!("cannot write {}", svg_path.display()))?;
            }
            diagram.to_json()
        }
        Some(ClasswiseArg::All) => {
            if svg.is_some() {
                bail!("--svg needs a single diagram; pass --classwise <CLASS> or drop --classwise");
            }
            let diagrams: Vec<DiagramFile> = (0..ps.k())
                .map(|j| build_diagram(&ps, bins, scheme, Some(j)))
                .collect::<Result<_>>()?;
            serde_json::to_string_pretty(&diagrams)?
        }
    };
    match out {
        Some(path) => fs::write(path, json + "\n")
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(())
}

pub fn compare(
    calib_path: &Path,
    test_path: &Path,
    methods: &[Method],
    bins: usize,
    json: bool,
) -> Result<()> {
    let calib = read_predictions(calib_path)?;
    let test = read_predictions(test_path)?;
    if calib.k() != test.k() {
        bail!(
            "calibration file has {} classes, test file has {}",
            calib.k(),
            test.k()
        );
    }

    let mut labels = vec!["Before calibration".to_string()];
    let mut names = vec!["before".to_string()];
    let mut reports = vec![MetricsReport::with_defaults(&test)?];
    for &method in methods {
        let (map, fit_report) = method.fit(&calib, bins, BinningScheme::EqualWidth)?;
        if let Some(r) = &fit_report {
            if !r.converged {
                eprintln!(
                    "warning: {} fit did not converge after {} iterations",
                    method.name(),
                    r.iterations
                );
            }
        }
        let calibrated = map.apply(&test)?;
        labels.push(method.table_label().to_string());
        names.push(method.name().to_string());
        reports.push(MetricsReport::with_defaults(&calibrated)?);
    }

    if json {
        let doc = serde_json::json!({ "methods": names, "reports": reports });
        println!("{}", serde_json::to_string_pretty(&doc)?);
        return Ok(());
    }

    // One row per metric; '*' marks the best column (highest accuracy,
    // lowest everything else).
    let rows: [(&str, fn(&MetricsReport) -> f64, bool, bool); 6] = [
        ("accuracy", |r| r.accuracy, true, true),
        ("ece", |r| r.ece, false, true),
        ("mce", |r| r.mce, false, true),
        ("cwece", |r| r.cwece, false, true),
        ("nll", |r| r.nll, false, false),
        ("brier", |r| r.brier, false, false),
    ];
    let width = labels.iter().map(|l| l.len()).max().unwrap().max(12) + 2;
    print!("{:10}", "metric");
    for label in &labels {
        print!("{label:>width$}");
    }
    println!();
    for (name, get, higher_better, percent) in rows {
        let values: Vec<f64> = reports.iter().map(get).collect();
        let best = values
            .iter()
            .cloned()
            .fold(if higher_better { f64::NEG_INFINITY } else { f64::INFINITY }, |a, b| {
                if higher_better {
                    a.max(b)
                } else {
                    a.min(b)
                }
            });
        print!("{name:10}");
        for &v in &values {
            let mark = if v == best { "*" } else { "" };
            let cell = if percent {
                format!("{:.2}%{mark}", 100.0 * v)
            } else {
                format!("{v:.4}{mark}")
            };
            print!("{cell:>width$}");
        }
        println!();
    }
    println!("(metrics on {} bins, equal-width; '*' = best per row)", reports[0].bins);
    Ok(())
}

pub fn synth(
    n: usize,
    classes: usize,
    sigma: f64,
    distort: f64,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let cfg = SynthConfig::distorted(n, classes, sigma, distort, seed);
    let ps = generate(&cfg)?;
    write_predictions(out, &ps, WriteColumns::Logits)?;
    println!(
        "wrote {} samples x {} classes (sigma {}, distortion {}, seed {}) to {}",
        n,
        classes,
        sigma,
        distort,
        seed,
        out.display()
    );
    Ok(())
}
