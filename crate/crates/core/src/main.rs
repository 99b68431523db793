//! Command-line front door: calibrate, fuse, simulate, emit figure
//! data, and self-check the closed-form identities.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use infoconf::calibration::{calibrate_with, BinningSpec, CalibrationError, CalibrationTable};
use infoconf::entropy::{
    force_b, golden_ratio_roots, net_force_self, observed_performance, perception_correction,
    spiral_params,
};
use infoconf::fusion::{evaluate, FusionError, FusionReport, FusionRule};
use infoconf::harness::{
    ingest_path, run_experiment, write_csv_path, ClassifierSpec, ConfidenceModel,
    ExperimentConfig, HarnessError, SyntheticSpec,
};
use infoconf::plot::{
    exp_density_series, exp_distribution_series, net_force_series, sigmoid_series, spirals_series,
    universe_series, PlotSeries, DEFAULT_POINTS,
};

/// Exit codes: 0 success, 1 check failure, 2 usage/input error,
/// 3 policy error.
enum CliError {
    Check(String),
    Usage(String),
    Policy(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Policy(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Check(m) | CliError::Usage(m) | CliError::Policy(m) => m,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Calibration(CalibrationError::DegenerateRate(_)) => {
                CliError::Policy(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        match e {
            CalibrationError::DegenerateRate(_) => CliError::Policy(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<FusionError> for CliError {
    fn from(e: FusionError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "infoconf", version, about = "Informational-confidence calibration toolkit")]
struct Cli {
    /// Override the experiment seed (simulate).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress informational output on stdout.
    #[arg(long, global = true)]
    quiet: bool,
    /// Report errors as a JSON object on stderr.
    #[arg(long, global = true)]
    json_errors: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a calibration table from an evaluation CSV.
    Calibrate {
        /// Evaluation CSV (sample_id,true_label,classifier_id,rank,label,confidence).
        input: PathBuf,
        /// Classifier to calibrate.
        #[arg(long)]
        classifier: String,
        /// Binning: "distinct", "auto", or "equal:N".
        #[arg(long, default_value = "auto")]
        binning: String,
        /// Accept a recognition rate of exactly 0 or 1 (clamps the
        /// normalization terms instead of failing).
        #[arg(long)]
        allow_degenerate: bool,
        /// Output table JSON path.
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Score an evaluation CSV: individual, AND/OR, and fused rates.
    Fuse {
        /// Evaluation CSV.
        input: PathBuf,
        /// Calibration table JSON (repeat per classifier).
        #[arg(long = "table")]
        tables: Vec<PathBuf>,
        /// Also report calibrated (informational) fusion; requires a
        /// table for every classifier in the input.
        #[arg(long)]
        calibrated: bool,
        /// Comma-separated rules: sum,max,product.
        #[arg(long, default_value = "sum,max,product")]
        rules: String,
        /// Largest n for the top-n / AND / OR rates.
        #[arg(long, default_value_t = 3)]
        n_max: usize,
        /// Optional report JSON path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a synthetic experiment and run the full pipeline.
    Simulate {
        /// Experiment spec JSON; overrides all individual flags.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Number of synthetic classifiers (1..=4 without a spec file).
        #[arg(long, default_value_t = 2)]
        classifiers: usize,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 50)]
        classes: usize,
        /// Error correlation of every classifier after the first.
        #[arg(long, default_value_t = 0.4)]
        correlation: f64,
        #[arg(long, default_value_t = 3)]
        n_best: usize,
        /// Output directory for evaluation.csv, tables, report.json.
        #[arg(long, short)]
        out_dir: PathBuf,
    },
    /// Emit figure data as CSV.
    Plot {
        figure: Figure,
        /// Rate parameters for exp-density / exp-distribution.
        #[arg(long, value_delimiter = ',', default_values_t = vec![100.0, 20.0, 10.0])]
        lambdas: Vec<f64>,
        /// Expectation values for the sigmoid figure.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 0.5, 1.0 / 3.0, 2.0])]
        expectations: Vec<f64>,
        /// Upper end of the x grid (density/distribution), or the
        /// half-width of the symmetric K grid (sigmoid).
        #[arg(long, default_value_t = 1.0)]
        x_max: f64,
        #[arg(long, default_value_t = DEFAULT_POINTS)]
        points: usize,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Verify the golden-ratio and perception identities.
    Goldencheck {
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Figure {
    ExpDensity,
    ExpDistribution,
    Sigmoid,
    NetForce,
    Spirals,
    Universe,
}

fn parse_binning(s: &str) -> Result<BinningSpec, CliError> {
    match s {
        "distinct" => Ok(BinningSpec::Distinct),
        "auto" => Ok(BinningSpec::Auto),
        _ => match s.strip_prefix("equal:").and_then(|n| n.parse::<usize>().ok()) {
            Some(n) if n > 0 => Ok(BinningSpec::EqualFrequency(n)),
            _ => Err(CliError::Usage(format!(
                "unknown binning '{s}' (expected distinct, auto, or equal:N)"
            ))),
        },
    }
}

fn parse_rules(s: &str) -> Result<Vec<FusionRule>, CliError> {
    s.split(',')
        .map(|r| {
            r.trim()
                .parse::<FusionRule>()
                .map_err(|e| CliError::Usage(e.to_string()))
        })
        .collect()
}

fn require_input(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "input not found: {}",
            path.display()
        )))
    }
}

fn cmd_calibrate(
    quiet: bool,
    input: &Path,
    classifier: &str,
    binning: &str,
    allow_degenerate: bool,
    output: &Path,
) -> Result<(), CliError> {
    require_input(input)?;
    let binning = parse_binning(binning)?;
    let eval = ingest_path(input)?;
    let table = calibrate_with(&eval, classifier, &binning, allow_degenerate)?;
    fs::write(output, table.to_json())?;
    if !quiet {
        println!(
            "classifier={} R={:.6} I_C={:.6} E_hat={:.6} entries={}",
            table.classifier_id,
            table.r,
            table.i_c,
            table.e_hat,
            table.entries.len()
        );
    }
    Ok(())
}

fn print_report(report: &FusionReport, n_max: usize) {
    let tops: Vec<String> = (1..=n_max).map(|n| format!("top{n}")).collect();
    println!("{:<14} {}", "classifier", tops.join("     "));
    for (id, rates) in &report.individual {
        let row: Vec<String> = tops.iter().map(|t| format!("{:.4}", rates[t])).collect();
        println!("{id:<14} {}", row.join("   "));
    }
    let and_row: Vec<String> = tops.iter().map(|t| format!("{:.4}", report.and[t])).collect();
    let or_row: Vec<String> = tops.iter().map(|t| format!("{:.4}", report.or[t])).collect();
    println!("{:<14} {}", "AND", and_row.join("   "));
    println!("{:<14} {}", "OR", or_row.join("   "));
    println!("{:<14} {:<8} {}", "rule", "raw", "informational");
    for (rule, rates) in &report.combined {
        let info = rates
            .informational
            .map(|v| format!("{v:.4}"))
            .unwrap_or_else(|| "-".to_string());
        println!("{rule:<14} {:<8.4} {info}", rates.raw);
    }
    if let Some(acc) = report.infonet {
        println!("{:<14} {acc:.4}", "infonet");
    }
    if report.product_flagged_samples > 0 {
        println!(
            "product rule: {} sample(s) with a zero or negative factor",
            report.product_flagged_samples
        );
    }
}

fn cmd_fuse(
    quiet: bool,
    input: &Path,
    table_paths: &[PathBuf],
    calibrated: bool,
    rules: &str,
    n_max: usize,
    report_path: Option<&Path>,
) -> Result<(), CliError> {
    require_input(input)?;
    let rules = parse_rules(rules)?;
    let eval = ingest_path(input)?;
    let mut tables: HashMap<String, CalibrationTable> = HashMap::new();
    for path in table_paths {
        require_input(path)?;
        let table = CalibrationTable::from_json(&fs::read_to_string(path)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        tables.insert(table.classifier_id.clone(), table);
    }
    let report = evaluate(
        &eval,
        if calibrated { Some(&tables) } else { None },
        &rules,
        n_max,
    )?;
    if let Some(path) = report_path {
        fs::write(path, serde_json::to_string_pretty(&report).expect("report serializes"))?;
    }
    if !quiet {
        print_report(&report, n_max);
    }
    Ok(())
}

/// The default synthetic roster; `--classifiers n` takes the first n.
fn default_classifiers(n: usize, correlation: f64) -> Result<Vec<ClassifierSpec>, CliError> {
    let roster = [
        ("alpha", 0.90, ConfidenceModel::Exponential { mean: 0.5 }),
        ("beta", 0.81, ConfidenceModel::Uniform),
        ("gamma", 0.75, ConfidenceModel::Logistic { scale: 0.4 }),
        ("delta", 0.70, ConfidenceModel::Exponential { mean: 0.25 }),
    ];
    if n == 0 || n > roster.len() {
        return Err(CliError::Usage(format!(
            "--classifiers must be in 1..={} (use --spec for custom rosters)",
            roster.len()
        )));
    }
    Ok(roster[..n]
        .iter()
        .enumerate()
        .map(|(i, (id, acc, model))| ClassifierSpec {
            id: (*id).to_string(),
            accuracy_target: *acc,
            confidence_model: *model,
            correlation: if i == 0 { 0.0 } else { correlation },
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    quiet: bool,
    seed: Option<u64>,
    spec_path: Option<&Path>,
    classifiers: usize,
    samples: usize,
    classes: usize,
    correlation: f64,
    n_best: usize,
    out_dir: &Path,
) -> Result<(), CliError> {
    let mut spec = match spec_path {
        Some(path) => {
            require_input(path)?;
            serde_json::from_str::<SyntheticSpec>(&fs::read_to_string(path)?)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => SyntheticSpec {
            seed: 42,
            n_samples: samples,
            n_classes: classes,
            classifiers: default_classifiers(classifiers, correlation)?,
            n_best,
        },
    };
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    let config = ExperimentConfig::with_defaults(spec);
    let result = run_experiment(&config)?;

    fs::create_dir_all(out_dir)?;
    let eval = infoconf::harness::generate(&config.spec)?;
    write_csv_path(&eval, &out_dir.join("evaluation.csv"))?;
    for table in &result.tables {
        fs::write(
            out_dir.join(format!("table_{}.json", table.classifier_id)),
            table.to_json(),
        )?;
    }
    fs::write(
        out_dir.join("report.json"),
        serde_json::to_string_pretty(&result).expect("report serializes"),
    )?;
    if !quiet {
        println!(
            "seed={} samples={} classes={} classifiers={}",
            result.seed,
            config.spec.n_samples,
            config.spec.n_classes,
            config.spec.classifiers.len()
        );
        print_report(&result.report, config.n_max);
        println!("written: {}", out_dir.display());
    }
    Ok(())
}

fn cmd_plot(
    quiet: bool,
    figure: Figure,
    lambdas: &[f64],
    expectations: &[f64],
    x_max: f64,
    points: usize,
    output: &Path,
) -> Result<(), CliError> {
    if points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let bad = |vals: &[f64], what: &str| -> Result<(), CliError> {
        if vals.is_empty() || vals.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            Err(CliError::Usage(format!("{what} must be positive and finite")))
        } else {
            Ok(())
        }
    };
    let series: PlotSeries = match figure {
        Figure::ExpDensity => {
            bad(lambdas, "--lambdas")?;
            exp_density_series(lambdas, x_max, points)
        }
        Figure::ExpDistribution => {
            bad(lambdas, "--lambdas")?;
            exp_distribution_series(lambdas, x_max, points)
        }
        Figure::Sigmoid => {
            bad(expectations, "--expectations")?;
            sigmoid_series(expectations, x_max.max(1.0) * 10.0, points)
        }
        Figure::NetForce => net_force_series(points),
        Figure::Spirals => spirals_series(points),
        Figure::Universe => universe_series(points),
    };
    let file = fs::File::create(output)?;
    series.write_csv(std::io::BufWriter::new(file))?;
    if !quiet {
        println!(
            "{}: {} rows, columns {}",
            series.name,
            series.rows.len(),
            series.columns.join(",")
        );
    }
    Ok(())
}

fn cmd_goldencheck(quiet: bool, tol: f64) -> Result<(), CliError> {
    let sqrt5 = 5.0_f64.sqrt();
    let g = (sqrt5 - 1.0) / 2.0;
    let phi = (1.0 + sqrt5) / 2.0;
    let roots = golden_ratio_roots();
    let spiral = spiral_params(phi).expect("phi is a valid spiral parameter");
    let perception = perception_correction(
        observed_performance(0.5).expect("0.5 is a valid relative speed"),
    )
    .expect("observed performance is a valid input");

    let checks: [(&str, f64, f64); 5] = [
        ("golden_root_positive", roots.0, g),
        ("golden_root_negative", roots.1, (-1.0 - sqrt5) / 2.0),
        (
            "net_force_self_equals_force_b",
            net_force_self(g).expect("golden root is in (0, 1)"),
            force_b(g, g).expect("golden root is in (0, 1)"),
        ),
        ("spiral_a_equals_b_at_phi", spiral.a, spiral.b),
        ("perception_value", perception, 1.0 / (1.0 + 1.0 / 2.0_f64.sqrt())),
    ];

    if !quiet {
        println!("golden root: {:.10}", roots.0);
        println!("perception value: {perception:.10}");
    }
    let mut failed = None;
    for (name, lhs, rhs) in checks {
        let diff = (lhs - rhs).abs();
        let status = if diff <= tol { "ok" } else { "FAIL" };
        if !quiet || status == "FAIL" {
            println!("{status} {name}: lhs={lhs:.12} rhs={rhs:.12} |diff|={diff:.3e}");
        }
        if diff > tol && failed.is_none() {
            failed = Some((name, diff));
        }
    }
    match failed {
        Some((name, diff)) => Err(CliError::Check(format!(
            "identity '{name}' exceeds tolerance {tol:e} (|diff| = {diff:.3e})"
        ))),
        None => Ok(()),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Calibrate {
            input,
            classifier,
            binning,
            allow_degenerate,
            output,
        } => cmd_calibrate(cli.quiet, input, classifier, binning, *allow_degenerate, output),
        Command::Fuse {
            input,
            tables,
            calibrated,
            rules,
            n_max,
            report,
        } => cmd_fuse(
            cli.quiet,
            input,
            tables,
            *calibrated,
            rules,
            *n_max,
            report.as_deref(),
        ),
        Command::Simulate {
            spec,
            classifiers,
            samples,
            classes,
            correlation,
            n_best,
            out_dir,
        } => cmd_simulate(
            cli.quiet,
            cli.seed,
            spec.as_deref(),
            *classifiers,
            *samples,
            *classes,
            *correlation,
            *n_best,
            out_dir,
        ),
        Command::Plot {
            figure,
            lambdas,
            expectations,
            x_max,
            points,
            output,
        } => cmd_plot(
            cli.quiet,
            *figure,
            lambdas,
            expectations,
            *x_max,
            *points,
            output,
        ),
        Command::Goldencheck { tol } => cmd_goldencheck(cli.quiet, *tol),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if cli.json_errors {
                eprintln!(
                    "{}",
                    serde_json::json!({ "error": e.message(), "code": e.code() })
                );
            } else {
                eprintln!("error: {}", e.message());
            }
            ExitCode::from(e.code())
        }
    }
}
