//! Command-line front end: build window files, cut symbol arrays, run
//! analyses, and probe structural properties.
//!
//! Every run is deterministic: identical arguments (and seed, where one
//! applies) produce byte-identical output. Reports embed the tool version
//! and the resolved configuration; exact rationals travel as
//! numerator/denominator strings next to a decimal rendering, and every
//! floating-point fit is named with a `_float` suffix.
//!
//! Exit codes: 0 success, 1 validation failure, 2 I/O failure, 3 an
//! inconclusive certificate under `--strict`.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use odowin::constructions::ac::{ac_window, AcParams};
use odowin::constructions::counterexample::counterexample_window;
use odowin::constructions::entropy::entropy_windows;
use odowin::constructions::path::path_window;
use odowin::measure::{parse_rational, MeasureInterval, RationalRepr};
use odowin::metrics::{besicovitch_estimate, periodic_slope_bound, UndecidedPolicy};
use odowin::model_set::{generate_array, regularity_report};
use odowin::odometer::OdometerPoint;
use odowin::window::{GenericOutcome, IrredundantOutcome, ProbeOptions};
use odowin::{CellStatus, OdometerSpec, WindowTree};

#[derive(Parser)]
#[command(
    name = "odowin",
    version,
    about = "Workbench for cylinder-tree windows over integer odometers"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a window file from a named construction
    Build(BuildArgs),
    /// Cut the symbol array of a window over an integer range
    Generate(GenerateArgs),
    /// Compute a report from windows or construction parameters
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Probe structural properties of a window file
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Construction {
    /// Irregular window over the doubly exponential scale chain
    Counterexample,
    /// Tunable-dimension family member (needs --p, --s, --t, --depth)
    Ac,
    /// Greedy interpolation path member (needs --scales, --t)
    Path,
    /// Staged positive-entropy pair (needs --scales, --gamma, --stages)
    Entropy,
    /// Clopen window from explicit cells, or the full group without --cells
    Cylinders,
    /// Seeded random window with fully decided cells (--frontier adds undecided ones)
    Random,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long, value_enum)]
    construction: Construction,
    /// Comma-separated scale sequence, e.g. 3,4,8
    #[arg(long, value_delimiter = ',')]
    scales: Option<Vec<u64>>,
    #[arg(long)]
    depth: Option<usize>,
    /// Rational dial in [0,1], e.g. 1/2
    #[arg(long)]
    t: Option<String>,
    /// Rational richness dial in (0,1), e.g. 1/2
    #[arg(long)]
    gamma: Option<String>,
    /// Branching factor of the dimension family (at least 3)
    #[arg(long)]
    p: Option<u64>,
    /// First-level multiplier of the dimension family (at least 1)
    #[arg(long)]
    s: Option<u64>,
    /// Stage count of the entropy construction
    #[arg(long)]
    stages: Option<usize>,
    /// In-cells as dash-joined digit paths, comma-separated: 0-1,2-3
    #[arg(long)]
    cells: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Let the random construction mark cells as undecided too
    #[arg(long)]
    frontier: bool,
    /// Window file to write
    #[arg(long)]
    out: PathBuf,
    /// Second window file for the entropy construction's reserve chain
    #[arg(long)]
    out_lower: Option<PathBuf>,
    /// Where to write the entropy construction log
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    window: PathBuf,
    /// Integer range lo..hi, e.g. 0..10 or -5..5
    #[arg(long, allow_hyphen_values = true)]
    range: String,
    /// Plain symbols when omitted; json wraps a report, csv lists positions
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum AnalyzeCmd {
    /// Per-level decided densities of a window: how close to periodic it is
    Toeplitz(ToeplitzArgs),
    /// Dimension-family ratios and the periodic ceiling
    Ac(AcAnalyzeArgs),
    /// Run the staged entropy construction and verify its log
    Entropy(EntropyAnalyzeArgs),
    /// Distance between two windows, with an optional array estimate
    Metric(MetricArgs),
    /// Measures along the interpolation path
    Path(PathAnalyzeArgs),
}

#[derive(Args)]
struct ToeplitzArgs {
    #[arg(long)]
    window: PathBuf,
    /// Deepest level to report (defaults to the window depth)
    #[arg(long)]
    max_n: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AcAnalyzeArgs {
    #[arg(long)]
    p: u64,
    #[arg(long)]
    s: u64,
    #[arg(long)]
    t: String,
    #[arg(long)]
    depth: usize,
    /// Deepest level for ratios and ceiling terms (defaults to depth - 1)
    #[arg(long)]
    max_level: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EntropyAnalyzeArgs {
    #[arg(long, value_delimiter = ',')]
    scales: Vec<u64>,
    #[arg(long)]
    gamma: String,
    #[arg(long)]
    stages: usize,
    /// Exit with code 3 when any invariant check fails
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MetricArgs {
    #[arg(long)]
    window: PathBuf,
    /// Second window file
    #[arg(long, conflicts_with = "shift")]
    other: Option<PathBuf>,
    /// Compare against the window translated by this integer
    #[arg(long, allow_hyphen_values = true)]
    shift: Option<i128>,
    /// Also estimate the distance from generated arrays over lo..hi
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PathAnalyzeArgs {
    #[arg(long, value_delimiter = ',')]
    scales: Vec<u64>,
    #[arg(long)]
    depth: Option<usize>,
    /// Single dial value
    #[arg(long, conflicts_with = "grid")]
    t: Option<String>,
    /// Sample dials k/N for k = 0..=N
    #[arg(long)]
    grid: Option<u64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    window: PathBuf,
    /// Integer range probed for edge points, default -32..32
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    #[arg(long)]
    parallel: bool,
    /// Exit with code 3 when any probe is inconclusive
    #[arg(long)]
    strict: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Validation(String),
    Io(String),
    Inconclusive(String),
}

impl CliError {
    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) | CliError::Inconclusive(m) => m,
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::Inconclusive(_) => 3,
        }
    }
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Cmd::Build(args) => cmd_build(args),
        Cmd::Generate(args) => cmd_generate(args),
        Cmd::Analyze(AnalyzeCmd::Toeplitz(args)) => cmd_analyze_toeplitz(args),
        Cmd::Analyze(AnalyzeCmd::Ac(args)) => cmd_analyze_ac(args),
        Cmd::Analyze(AnalyzeCmd::Entropy(args)) => cmd_analyze_entropy(args),
        Cmd::Analyze(AnalyzeCmd::Metric(args)) => cmd_analyze_metric(args),
        Cmd::Analyze(AnalyzeCmd::Path(args)) => cmd_analyze_path(args),
        Cmd::Verify(args) => cmd_verify(args),
    }
}

// ---------- shared plumbing ----------

#[derive(Serialize)]
struct Report<T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    results: T,
}

fn report<T: Serialize>(command: &'static str, config: serde_json::Value, results: T) -> Report<T> {
    Report {
        tool: "odowin",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        seed: None,
        results,
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    text
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load_window(path: &PathBuf) -> Result<WindowTree, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    WindowTree::load_json(&text)
        .map_err(|e| CliError::Validation(format!("window file {}: {e}", path.display())))
}

fn parse_range(text: &str) -> Result<(i128, i128), CliError> {
    let (lo, hi) = text
        .split_once("..")
        .ok_or_else(|| CliError::Validation(format!("range {text:?} is not of the form lo..hi")))?;
    let lo: i128 = lo.trim().parse().map_err(|_| {
        CliError::Validation(format!("range start {lo:?} is not an integer"))
    })?;
    let hi: i128 = hi.trim().parse().map_err(|_| {
        CliError::Validation(format!("range end {hi:?} is not an integer"))
    })?;
    if lo >= hi {
        return Err(CliError::Validation(format!("range {text:?} is empty")));
    }
    if hi - lo > 50_000_000 {
        return Err(CliError::Validation(format!("range {text:?} spans over 5e7 positions")));
    }
    Ok((lo, hi))
}

fn parse_rat(text: &str, name: &str) -> Result<BigRational, CliError> {
    parse_rational(text)
        .ok_or_else(|| CliError::Validation(format!("{name} {text:?} is not a rational p/q")))
}

fn require<T>(value: Option<T>, flag: &str, context: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Validation(format!("{context} requires {flag}")))
}

fn csv_field(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let quoted: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
        out.push_str(&quoted.join(","));
        out.push('\n');
    }
    out
}

/// Exact endpoints of a measure interval, rendered for reports.
#[derive(Serialize)]
struct IntervalRepr {
    lo: RationalRepr,
    hi: RationalRepr,
}

impl IntervalRepr {
    fn of(interval: &MeasureInterval) -> Self {
        IntervalRepr { lo: RationalRepr::of(&interval.lo), hi: RationalRepr::of(&interval.hi) }
    }
}

fn interval_rows(name: &str, interval: &IntervalRepr) -> Vec<Vec<String>> {
    vec![
        vec![format!("{name}_lo"), format!("{}/{}", interval.lo.num, interval.lo.den)],
        vec![format!("{name}_hi"), format!("{}/{}", interval.hi.num, interval.hi.den)],
    ]
}

// ---------- build ----------

fn cmd_build(args: BuildArgs) -> Result<(), CliError> {
    let window = match args.construction {
        Construction::Counterexample => {
            let depth = require(args.depth, "--depth", "the irregular construction")?;
            counterexample_window(depth).map_err(validation)?
        }
        Construction::Ac => {
            let p = require(args.p, "--p", "the dimension family")?;
            let s = require(args.s, "--s", "the dimension family")?;
            let t = parse_rat(&require(args.t.clone(), "--t", "the dimension family")?, "--t")?;
            let depth = require(args.depth, "--depth", "the dimension family")?;
            let params = AcParams::new(p, s, t, depth).map_err(validation)?;
            ac_window(&params).map_err(validation)?.tree
        }
        Construction::Path => {
            let scales = require(args.scales.clone(), "--scales", "the interpolation path")?;
            let spec = OdometerSpec::new(scales).map_err(validation)?;
            let depth = args.depth.unwrap_or(spec.max_depth());
            let t = parse_rat(&require(args.t.clone(), "--t", "the interpolation path")?, "--t")?;
            path_window(&spec, depth, &t).map_err(validation)?.tree
        }
        Construction::Entropy => {
            let scales = require(args.scales.clone(), "--scales", "the entropy construction")?;
            let spec = OdometerSpec::new(scales).map_err(validation)?;
            let gamma =
                parse_rat(&require(args.gamma.clone(), "--gamma", "the entropy construction")?, "--gamma")?;
            let stages = require(args.stages, "--stages", "the entropy construction")?;
            let built = entropy_windows(&spec, &gamma, stages).map_err(validation)?;
            if let Some(path) = &args.out_lower {
                let mut text = built.lower.save_json();
                text.push('\n');
                write_output(&Some(path.clone()), &text)?;
            }
            if let Some(path) = &args.log {
                write_output(&Some(path.clone()), &to_json(&built.log))?;
            }
            built.upper
        }
        Construction::Cylinders => {
            let scales = require(args.scales.clone(), "--scales", "the cylinder construction")?;
            let spec = OdometerSpec::new(scales).map_err(validation)?;
            let depth = require(args.depth, "--depth", "the cylinder construction")?;
            match &args.cells {
                None => {
                    WindowTree::from_cells(&spec, depth, &[(vec![], CellStatus::In)])
                        .map_err(validation)?
                }
                Some(text) => {
                    let cells = parse_cells(text)?;
                    WindowTree::from_cylinders(&spec, depth, &cells).map_err(validation)?
                }
            }
        }
        Construction::Random => {
            let scales = require(args.scales.clone(), "--scales", "the random construction")?;
            let spec = OdometerSpec::new(scales).map_err(validation)?;
            let depth = require(args.depth, "--depth", "the random construction")?;
            let period = spec.subgroup_index(depth);
            if period > 1 << 20 {
                return Err(CliError::Validation(format!(
                    "random construction over {period} cells is past the 2^20 budget"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed.unwrap_or(0));
            let choices: &[CellStatus] = if args.frontier {
                &[CellStatus::In, CellStatus::Out, CellStatus::Frontier]
            } else {
                &[CellStatus::In, CellStatus::Out]
            };
            let cells: Vec<(Vec<u64>, CellStatus)> = (0..period)
                .map(|r| {
                    let path = OdometerPoint::from_residue(&spec, r, depth).digits().to_vec();
                    (path, choices[rng.gen_range(0..choices.len())])
                })
                .collect();
            WindowTree::from_cells(&spec, depth, &cells).map_err(validation)?
        }
    };
    let mut text = window.save_json();
    text.push('\n');
    write_output(&Some(args.out), &text)
}

fn parse_cells(text: &str) -> Result<Vec<Vec<u64>>, CliError> {
    text.split(',')
        .map(|cell| {
            cell.trim()
                .split('-')
                .map(|d| {
                    d.trim().parse::<u64>().map_err(|_| {
                        CliError::Validation(format!("cell digit {d:?} is not an integer"))
                    })
                })
                .collect()
        })
        .collect()
}

// ---------- generate ----------

#[derive(Serialize)]
struct GenerateResults {
    start: String,
    len: usize,
    undecided: usize,
    symbols: String,
}

fn cmd_generate(args: GenerateArgs) -> Result<(), CliError> {
    let window = load_window(&args.window)?;
    let (lo, hi) = parse_range(&args.range)?;
    let array = generate_array(&window, lo, (hi - lo) as usize).map_err(validation)?;
    let content = match args.format {
        None => format!("{}\n", array.to_text()),
        Some(Format::Csv) => array.to_csv(),
        Some(Format::Json) => {
            let config = json!({
                "window": args.window.display().to_string(),
                "range": args.range,
            });
            let results = GenerateResults {
                start: lo.to_string(),
                len: array.len(),
                undecided: array.count_undecided(),
                symbols: array.to_text(),
            };
            to_json(&report("generate", config, results))
        }
    };
    write_output(&args.out, &content)
}

// ---------- analyze toeplitz ----------

#[derive(Serialize)]
struct LevelDensity {
    level: usize,
    value: RationalRepr,
}

#[derive(Serialize)]
struct ToeplitzResults {
    densities: Vec<LevelDensity>,
    limit_certificate: RationalRepr,
    frontier_mass: RationalRepr,
}

fn cmd_analyze_toeplitz(args: ToeplitzArgs) -> Result<(), CliError> {
    let window = load_window(&args.window)?;
    let max_n = args.max_n.unwrap_or(window.depth());
    if max_n == 0 || max_n > window.depth() {
        return Err(CliError::Validation(format!(
            "--max-n {max_n} outside the window's 1..={} levels",
            window.depth()
        )));
    }
    let reg = regularity_report(&window).map_err(validation)?;
    let densities: Vec<LevelDensity> = reg.decided_fractions[..max_n]
        .iter()
        .enumerate()
        .map(|(i, v)| LevelDensity { level: i + 1, value: RationalRepr::of(v) })
        .collect();
    let results = ToeplitzResults {
        densities,
        limit_certificate: RationalRepr::of(&reg.limit_certificate),
        frontier_mass: RationalRepr::of(&window.frontier_mass()),
    };
    let config = json!({
        "window": args.window.display().to_string(),
        "max_n": max_n,
    });
    let content = match args.format {
        Format::Json => to_json(&report("analyze toeplitz", config, results)),
        Format::Csv => {
            let rows: Vec<Vec<String>> = results
                .densities
                .iter()
                .map(|d| {
                    vec![
                        d.level.to_string(),
                        d.value.num.clone(),
                        d.value.den.clone(),
                        format!("{}", d.value.decimal),
                    ]
                })
                .collect();
            csv_table(&["level", "numerator", "denominator", "decimal"], &rows)
        }
    };
    write_output(&args.out, &content)
}

// ---------- analyze ac ----------

#[derive(Serialize)]
struct AcLevelRow {
    level: usize,
    cell_fraction: RationalRepr,
    ratio_float: f64,
}

#[derive(Serialize)]
struct AcResults {
    levels: Vec<AcLevelRow>,
    limit_ratio_float: f64,
    ceiling_terms_float: Vec<(usize, f64)>,
    ceiling_float: Option<f64>,
}

fn cmd_analyze_ac(args: AcAnalyzeArgs) -> Result<(), CliError> {
    let t = parse_rat(&args.t, "--t")?;
    let params = AcParams::new(args.p, args.s, t, args.depth).map_err(validation)?;
    let window = ac_window(&params).map_err(validation)?;
    let max_level = args.max_level.unwrap_or(args.depth.saturating_sub(1)).max(1);
    if max_level >= args.depth {
        return Err(CliError::Validation(format!(
            "--max-level {max_level} must stay below --depth {}",
            args.depth
        )));
    }
    let levels: Vec<AcLevelRow> = (1..=max_level)
        .map(|n| AcLevelRow {
            level: n,
            cell_fraction: RationalRepr::of(&params.cell_fraction(n)),
            ratio_float: params.finite_stage_ratio(n),
        })
        .collect();
    let bound = periodic_slope_bound(&window.tree, max_level).map_err(validation)?;
    let results = AcResults {
        levels,
        limit_ratio_float: params.limit_ratio(),
        ceiling_terms_float: bound.terms.clone(),
        ceiling_float: bound.bound,
    };
    let config = json!({
        "p": args.p,
        "s": args.s,
        "t": args.t,
        "depth": args.depth,
        "max_level": max_level,
    });
    let content = match args.format {
        Format::Json => to_json(&report("analyze ac", config, results)),
        Format::Csv => {
            let rows: Vec<Vec<String>> = results
                .levels
                .iter()
                .map(|r| {
                    vec![
                        r.level.to_string(),
                        r.cell_fraction.num.clone(),
                        r.cell_fraction.den.clone(),
                        format!("{}", r.ratio_float),
                    ]
                })
                .collect();
            csv_table(&["level", "fraction_numerator", "fraction_denominator", "ratio"], &rows)
        }
    };
    write_output(&args.out, &content)
}

// ---------- analyze entropy ----------

#[derive(Serialize)]
struct EntropyResults {
    all_passed: bool,
    checks: Vec<odowin::constructions::entropy::InvariantCheck>,
    upper_measure: IntervalRepr,
    lower_measure: IntervalRepr,
    log: odowin::constructions::entropy::EntropyLog,
}

fn cmd_analyze_entropy(args: EntropyAnalyzeArgs) -> Result<(), CliError> {
    let spec = OdometerSpec::new(args.scales.clone()).map_err(validation)?;
    let gamma = parse_rat(&args.gamma, "--gamma")?;
    let built = entropy_windows(&spec, &gamma, args.stages).map_err(validation)?;
    let verdict = odowin::constructions::entropy::verify_log(&built.log).map_err(validation)?;
    let all_passed = verdict.all_passed();
    let results = EntropyResults {
        all_passed,
        checks: verdict.checks,
        upper_measure: IntervalRepr::of(&built.upper.measure()),
        lower_measure: IntervalRepr::of(&built.lower.measure()),
        log: built.log,
    };
    let config = json!({
        "scales": args.scales,
        "gamma": args.gamma,
        "stages": args.stages,
    });
    let content = match args.format {
        Format::Json => to_json(&report("analyze entropy", config, results)),
        Format::Csv => {
            let rows: Vec<Vec<String>> = results
                .checks
                .iter()
                .map(|c| {
                    vec![
                        c.name.clone(),
                        c.stage.to_string(),
                        c.passed.to_string(),
                        c.detail.clone(),
                    ]
                })
                .collect();
            csv_table(&["check", "stage", "passed", "detail"], &rows)
        }
    };
    write_output(&args.out, &content)?;
    if args.strict && !all_passed {
        return Err(CliError::Inconclusive(
            "entropy invariant checks failed under --strict".to_string(),
        ));
    }
    Ok(())
}

// ---------- analyze metric ----------

#[derive(Serialize)]
struct EstimateResults {
    differing: usize,
    compared: usize,
    excluded: usize,
    density: Option<RationalRepr>,
}

#[derive(Serialize)]
struct MetricResults {
    distance: IntervalRepr,
    #[serde(skip_serializing_if = "Option::is_none")]
    estimate: Option<EstimateResults>,
}

fn cmd_analyze_metric(args: MetricArgs) -> Result<(), CliError> {
    let window = load_window(&args.window)?;
    let other = match (&args.other, args.shift) {
        (Some(path), None) => load_window(path)?,
        (None, Some(g)) => window.translate_by_int(g).map_err(validation)?,
        (None, None) => {
            return Err(CliError::Validation(
                "analyze metric needs --other or --shift".to_string(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap rejects the conflict"),
    };
    let distance = IntervalRepr::of(&window.pseudo_metric(&other).map_err(validation)?);
    let estimate = match &args.range {
        None => None,
        Some(range) => {
            let (lo, hi) = parse_range(range)?;
            let a = generate_array(&window, lo, (hi - lo) as usize).map_err(validation)?;
            let b = generate_array(&other, lo, (hi - lo) as usize).map_err(validation)?;
            let est = besicovitch_estimate(&a, &b, UndecidedPolicy::Exclude).map_err(validation)?;
            Some(EstimateResults {
                differing: est.differing,
                compared: est.compared,
                excluded: est.excluded,
                density: est.density().map(|d| RationalRepr::of(&d)),
            })
        }
    };
    let results = MetricResults { distance, estimate };
    let config = json!({
        "window": args.window.display().to_string(),
        "other": args.other.as_ref().map(|p| p.display().to_string()),
        "shift": args.shift.map(|g| g.to_string()),
        "range": args.range,
    });
    let content = match args.format {
        Format::Json => to_json(&report("analyze metric", config, results)),
        Format::Csv => {
            let mut rows = interval_rows("distance", &results.distance);
            if let Some(est) = &results.estimate {
                rows.push(vec!["differing".into(), est.differing.to_string()]);
                rows.push(vec!["compared".into(), est.compared.to_string()]);
                rows.push(vec!["excluded".into(), est.excluded.to_string()]);
                if let Some(d) = &est.density {
                    rows.push(vec!["density".into(), format!("{}/{}", d.num, d.den)]);
                }
            }
            csv_table(&["field", "value"], &rows)
        }
    };
    write_output(&args.out, &content)
}

// ---------- analyze path ----------

#[derive(Serialize)]
struct PathRow {
    index: u64,
    t: RationalRepr,
    measure: IntervalRepr,
}

#[derive(Serialize)]
struct PathResults {
    rows: Vec<PathRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<Vec<u64>>,
}

fn cmd_analyze_path(args: PathAnalyzeArgs) -> Result<(), CliError> {
    let spec = OdometerSpec::new(args.scales.clone()).map_err(validation)?;
    let depth = args.depth.unwrap_or(spec.max_depth());
    let results = match (&args.t, args.grid) {
        (Some(text), None) => {
            let t = parse_rat(text, "--t")?;
            let member = path_window(&spec, depth, &t).map_err(validation)?;
            PathResults {
                rows: vec![PathRow {
                    index: 0,
                    t: RationalRepr::of(&t),
                    measure: IntervalRepr::of(&member.tree.measure()),
                }],
                trace: Some(member.trace),
            }
        }
        (None, Some(grid)) => {
            if grid == 0 || grid > 100_000 {
                return Err(CliError::Validation(format!(
                    "--grid {grid} outside the supported 1..=100000"
                )));
            }
            let rows = (0..=grid)
                .map(|k| {
                    let t = BigRational::new(k.into(), grid.into());
                    let member = path_window(&spec, depth, &t).map_err(validation)?;
                    Ok(PathRow {
                        index: k,
                        t: RationalRepr::of(&t),
                        measure: IntervalRepr::of(&member.tree.measure()),
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            PathResults { rows, trace: None }
        }
        _ => {
            return Err(CliError::Validation(
                "analyze path needs exactly one of --t or --grid".to_string(),
            ))
        }
    };
    let config = json!({
        "scales": args.scales,
        "depth": depth,
        "t": args.t,
        "grid": args.grid,
    });
    let content = match args.format {
        Format::Json => to_json(&report("analyze path", config, results)),
        Format::Csv => {
            let rows: Vec<Vec<String>> = results
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.index.to_string(),
                        format!("{}/{}", r.t.num, r.t.den),
                        format!("{}/{}", r.measure.lo.num, r.measure.lo.den),
                        format!("{}/{}", r.measure.hi.num, r.measure.hi.den),
                    ]
                })
                .collect();
            csv_table(&["index", "t", "measure_lo", "measure_hi"], &rows)
        }
    };
    write_output(&args.out, &content)
}

// ---------- verify ----------

#[derive(Serialize)]
struct ProbeVerdict {
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<String>,
}

#[derive(Serialize)]
struct VerifyResults {
    proper: bool,
    generic: ProbeVerdict,
    regular_certificate: RationalRepr,
    irredundant: ProbeVerdict,
    conclusive: bool,
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let window = load_window(&args.window)?;
    let range_text = args.range.clone().unwrap_or_else(|| "-32..32".to_string());
    let (lo, hi) = parse_range(&range_text)?;
    let options = ProbeOptions { generic_range: (lo, hi), parallel: args.parallel };
    let report_struct = window.check_properties(&options).map_err(validation)?;
    let generic = match &report_struct.generic {
        GenericOutcome::Certified => ProbeVerdict { status: "certified", witness: None },
        GenericOutcome::FailsAt(g) => {
            ProbeVerdict { status: "fails_at", witness: Some(g.to_string()) }
        }
        GenericOutcome::Inconclusive { first_undecided } => ProbeVerdict {
            status: "inconclusive",
            witness: Some(first_undecided.to_string()),
        },
    };
    let irredundant = match &report_struct.irredundant {
        IrredundantOutcome::Certified => ProbeVerdict { status: "certified", witness: None },
        IrredundantOutcome::Inconclusive { witness } => {
            ProbeVerdict { status: "inconclusive", witness: Some(witness.to_string()) }
        }
    };
    let conclusive = generic.status != "inconclusive" && irredundant.status != "inconclusive";
    let results = VerifyResults {
        proper: report_struct.proper,
        generic,
        regular_certificate: RationalRepr::of(&report_struct.regular_certificate),
        irredundant,
        conclusive,
    };
    let config = json!({
        "window": args.window.display().to_string(),
        "range": range_text,
        "parallel": args.parallel,
    });
    let content = match args.format {
        Format::Json => to_json(&report("verify", config, results)),
        Format::Csv => {
            let mut rows = vec![
                vec!["proper".into(), results.proper.to_string()],
                vec!["generic".into(), results.generic.status.to_string()],
                vec![
                    "regular_certificate".into(),
                    format!("{}/{}", results.regular_certificate.num, results.regular_certificate.den),
                ],
                vec!["irredundant".into(), results.irredundant.status.to_string()],
                vec!["conclusive".into(), results.conclusive.to_string()],
            ];
            if let Some(w) = &results.generic.witness {
                rows.push(vec!["generic_witness".into(), w.clone()]);
            }
            if let Some(w) = &results.irredundant.witness {
                rows.push(vec!["irredundant_witness".into(), w.clone()]);
            }
            csv_table(&["field", "value"], &rows)
        }
    };
    write_output(&args.out, &content)?;
    if args.strict && !conclusive {
        return Err(CliError::Inconclusive(
            "a probe stayed inconclusive under --strict".to_string(),
        ));
    }
    Ok(())
}
