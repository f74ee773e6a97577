//! Command-line driver. Each subcommand writes one JSON or CSV report and maps
//! its outcome onto a fixed exit code.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Once;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::{One, Zero};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::constants::{comparison_table, write_comparison_csv};
use crate::counterexample::counterexample_table;
use crate::error::{input, Error, Result};
use crate::gram::{build_gram, eig_bounds, eig_bounds_exact, format_float, perturbation_demo, perturbation_gram, psd_certificate};
use crate::haar::{enumerate_family, CoefficientMap};
use crate::measure::{format_rational, parse_rational, rat, to_f64, Rational, StepSet};
use crate::search::{search_extremal, SearchConfig, SearchMode};
use crate::weights::{telescoping_check, verify_weights, WeightConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "HAAR_RIESZ_THREADS";

#[derive(Parser, Debug)]
#[command(name = "haar-riesz", version, about = "Exact Riesz and Bessel checks for restricted Haar systems")]
struct Cli {
    /// Significant digits for float columns.
    #[arg(long, global = true, default_value_t = 17, value_parser = clap::value_parser!(u16).range(1..=17))]
    precision: u16,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Random,
    GreedyFlip,
}

#[derive(Args, Debug)]
struct Output {
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gram matrix of the admissible family, optionally certifying G − c·D ⪰ 0.
    Gram {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        p: String,
        #[arg(long)]
        depth: u32,
        #[arg(long)]
        c: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// Exact grid sweep of the weight-function inequalities.
    VerifyWeights {
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 256)]
        grid: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Zig-zag table on E = [0, 2/3).
    Counterexample {
        #[arg(long)]
        n: u32,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// Constants comparison over a list of p values.
    Constants {
        /// A file with one rational per line, a range `start:end:step`, or a comma list.
        #[arg(long)]
        p_list: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// Seeded search for step sets with a small Riesz ratio.
    Search {
        #[arg(long)]
        p: String,
        #[arg(long)]
        depth: u32,
        #[arg(long)]
        resolution: u32,
        #[arg(long)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Random)]
        mode: ModeArg,
        /// Fixed cell inclusion probability; drawn per set from [1/2, 1) when absent.
        #[arg(long)]
        bias: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Weighted induction for given coefficients, step by step.
    InductionCheck {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        coeffs: PathBuf,
        #[arg(long)]
        p: String,
        #[arg(long)]
        depth: u32,
        #[command(flatten)]
        output: Output,
    },
    /// Orthonormal vectors shifted by u/n: small perturbations, no lower bound.
    DemoPerturbation {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        output: Output,
    },
}

/// Parses `argv` (including the program name), runs one subcommand and
/// returns its exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(rendered.as_bytes());
                    EXIT_INPUT
                }
            };
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {e}");
        return EXIT_INPUT;
    }
    match execute(&cli, out, err) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VERIFICATION_FAILED,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        Error::Consistency(_) => EXIT_VERIFICATION_FAILED,
        Error::Input(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => EXIT_INPUT,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = match raw.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return input(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")),
    };
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        // Fails only if a pool already exists, in which case it is kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    });
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

/// Runs `body` against the chosen sink: the `--out` file or standard output.
fn with_sink(output: &Output, out: &mut dyn Write, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &output.out {
        Some(path) => {
            let mut file = std::io::BufWriter::new(fs::File::create(path)?);
            body(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => body(out),
    }
}

fn emit_json<T: Serialize>(output: &Output, out: &mut dyn Write, value: &T) -> Result<()> {
    with_sink(output, out, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool> {
    let digits = cli.precision as usize;
    match &cli.command {
        Command::Gram { set, p, depth, c, format, output } => {
            let set: StepSet = read_json(set)?;
            let p = parse_rational(p)?;
            let c = c.as_deref().map(parse_rational).transpose()?;
            gram_command(&set, &p, *depth, c.as_ref(), *format, output, out, err, digits)
        }
        Command::VerifyWeights { p, grid, output } => {
            let cfg = WeightConfig::new(parse_rational(p)?)?;
            let report = verify_weights(&cfg, *grid)?;
            emit_json(output, out, &report)?;
            Ok(report.passed())
        }
        Command::Counterexample { n, format, output } => {
            let rows = counterexample_table(*n)?;
            match format {
                Format::Json => {
                    let rendered: Vec<_> = rows
                        .iter()
                        .map(|r| {
                            serde_json::json!({
                                "n": r.n,
                                "sum_of_norms": format_rational(&r.sum_of_norms),
                                "sum_of_norms_float": to_f64(&r.sum_of_norms),
                                "norm_of_sum": format_rational(&r.norm_of_sum),
                                "norm_of_sum_float": to_f64(&r.norm_of_sum),
                                "ratio": format_rational(&r.ratio),
                                "ratio_float": to_f64(&r.ratio),
                            })
                        })
                        .collect();
                    emit_json(output, out, &rendered)?;
                }
                Format::Csv => with_sink(output, out, |w| {
                    let mut csv = csv::Writer::from_writer(w);
                    csv.write_record(["n", "sum_of_norms", "sum_of_norms_float", "norm_of_sum", "norm_of_sum_float", "ratio", "ratio_float"])?;
                    for r in &rows {
                        csv.write_record([
                            r.n.to_string(),
                            format_rational(&r.sum_of_norms),
                            format_float(to_f64(&r.sum_of_norms), digits),
                            format_rational(&r.norm_of_sum),
                            format_float(to_f64(&r.norm_of_sum), digits),
                            format_rational(&r.ratio),
                            format_float(to_f64(&r.ratio), digits),
                        ])?;
                    }
                    csv.flush()?;
                    Ok(())
                })?,
            }
            Ok(true)
        }
        Command::Constants { p_list, format, output } => {
            let rows = comparison_table(&parse_p_list(p_list)?)?;
            match format {
                Format::Json => emit_json(output, out, &rows)?,
                Format::Csv => with_sink(output, out, |w| write_comparison_csv(&rows, w, digits))?,
            }
            Ok(true)
        }
        Command::Search { p, depth, resolution, iters, seed, mode, bias, output } => {
            let cfg = SearchConfig {
                p: parse_rational(p)?,
                depth: *depth,
                resolution: *resolution,
                iterations: *iters,
                seed: *seed,
                mode: match mode {
                    ModeArg::Random => SearchMode::Random,
                    ModeArg::GreedyFlip => SearchMode::GreedyFlip,
                },
                density_bias: *bias,
            };
            let result = search_extremal(&cfg)?;
            emit_json(output, out, &result)?;
            Ok(result.floor_certified != Some(false) && result.bessel_certified)
        }
        Command::InductionCheck { set, coeffs, p, depth, output } => {
            let set: StepSet = read_json(set)?;
            let coeffs: CoefficientMap = read_json(coeffs)?;
            let cfg = WeightConfig::new(parse_rational(p)?)?;
            let report = telescoping_check(&set, &coeffs, *depth, &cfg)?;
            emit_json(output, out, &report)?;
            Ok(report.all_hold())
        }
        Command::DemoPerturbation { n, output } => {
            let demo = perturbation_demo(*n)?;
            let (lo, hi) = eig_bounds_exact(&perturbation_gram(*n)?)?;
            let report = serde_json::json!({
                "n": demo.n,
                "sum_norm_sq": format_rational(&demo.sum_norm_sq),
                "norm_of_sum_sq": format_rational(&demo.norm_of_sum_sq),
                "per_vector_perturbation": format_rational(&demo.per_vector_perturbation),
                "lambda_min": lo,
                "lambda_max": hi,
            });
            emit_json(output, out, &report)?;
            let n_rat = Rational::from_integer((*n).into());
            Ok(demo.norm_of_sum_sq.is_zero()
                && demo.sum_norm_sq == &n_rat - Rational::one()
                && demo.per_vector_perturbation == Rational::one() / n_rat)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn gram_command(
    set: &StepSet,
    p: &Rational,
    depth: u32,
    c: Option<&Rational>,
    format: Format,
    output: &Output,
    out: &mut dyn Write,
    err: &mut dyn Write,
    digits: usize,
) -> Result<bool> {
    let family = enumerate_family(depth, set, p);
    let gram = build_gram(&family, set, true)?;
    let (lambda_min, lambda_max) = if gram.size() == 0 { (1.0, 1.0) } else { eig_bounds(&gram)? };
    let certified = c.map(|c| psd_certificate(&gram, c, &gram.diagonal()));
    match format {
        Format::Json => {
            let report = serde_json::json!({
                "p": format_rational(p),
                "depth": depth,
                "family_size": gram.size(),
                "lambda_min": lambda_min,
                "lambda_max": lambda_max,
                "c": c.map(format_rational),
                "certified": certified,
                "gram": gram,
            });
            emit_json(output, out, &report)?;
        }
        Format::Csv => {
            with_sink(output, out, |w| gram.write_csv(w, digits))?;
            // Keep the CSV plot-ready; the summary goes to the error stream.
            writeln!(
                err,
                "family_size={} lambda_min={} lambda_max={} certified={}",
                gram.size(),
                format_float(lambda_min, digits),
                format_float(lambda_max, digits),
                certified.map_or("n/a".to_string(), |b| b.to_string())
            )?;
        }
    }
    Ok(certified != Some(false))
}

/// A file with one rational per line (blank lines and `#` comments skipped),
/// an inclusive range `start:end:step`, or a comma-separated list.
pub fn parse_p_list(spec: &str) -> Result<Vec<Rational>> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path)?;
        return text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(parse_rational)
            .collect();
    }
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, end, step] => {
            let (start, end, step) = (parse_rational(start)?, parse_rational(end)?, parse_rational(step)?);
            if step <= Rational::zero() {
                return input("range step must be positive");
            }
            let count = ((&end - &start) / &step).floor();
            if count > rat(1_000_000, 1) {
                return input("range has more than a million points");
            }
            let mut values = Vec::new();
            let mut x = start;
            while x <= end {
                values.push(x.clone());
                x += &step;
            }
            Ok(values)
        }
        [single] => single.split(',').map(|s| parse_rational(s.trim())).collect(),
        _ => input(format!("cannot parse p list {spec:?}: expected a file, start:end:step or a comma list")),
    }
}
