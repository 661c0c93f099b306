//! Command-line front end for the `selfaffine` library.
//!
//! Exit status: 0 on success, 1 when the system fails validation, 2 on usage
//! errors. Diagnostics go to standard error.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use selfaffine::coding::standard_coding;
use selfaffine::holder::{classify, holder_exponent, subordinate};
use selfaffine::numeric::fmt_g;
use selfaffine::oracle::{
    dyadic_scales, empirical_chord_exponent, empirical_derivative_test_at, empirical_spectrum, ExponentFit,
};
use selfaffine::preset;
use selfaffine::spectrum::Spectrum;
use selfaffine::{Coding, Evaluator, HolderValue, SelfAffineSystem, SystemError};

#[derive(Parser)]
#[command(name = "selfaffine", version, about = "Self-affine functions: values, spectra, exponents")]
struct Cli {
    #[command(flatten)]
    source: SourceArgs,
    /// Error tolerance for evaluation.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (standard output if absent; a directory for `decompose`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SourceArgs {
    /// polya, okamoto, riesz-nagy, gray, cantor.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Preset parameter for okamoto, riesz-nagy and gray.
    #[arg(long, global = true)]
    a: Option<f64>,
    /// Pólya angle in degrees.
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// System description file (JSON).
    #[arg(long, global = true)]
    system: Option<PathBuf>,
    /// Inline system description (JSON).
    #[arg(long = "system-json", global = true)]
    system_json: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Check the connectivity and scale conditions.
    Validate,
    /// Value of the function at a time.
    Eval {
        #[arg(long)]
        t: f64,
    },
    /// Values at all level-n partition points.
    Sample {
        #[arg(long)]
        level: usize,
    },
    /// Multifractal spectrum on an evenly spaced grid of exponents.
    Spectrum {
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// Where to write the profile JSON when the table is CSV.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
    /// Differentiability class and exceptional-set dimensions.
    Classify,
    /// Pointwise Hölder exponent at a coding such as `12|3`.
    Holder {
        #[arg(long)]
        coding: String,
    },
    /// Write the time change and the monofractal factor as g.json and h.json.
    Decompose,
    /// Formula-free estimators.
    Oracle {
        #[command(subcommand)]
        which: OracleCommand,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Fitted exponent of chord increments at a time.
    Chord {
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 4)]
        kmin: i32,
        #[arg(long, default_value_t = 20)]
        kmax: i32,
    },
    /// Histogram of coarse exponents over level-n strings.
    Spectrum {
        #[arg(long)]
        level: usize,
        #[arg(long, default_value_t = 20)]
        bins: usize,
    },
    /// Trend of chord slopes along a coding, at `--t` or at random times.
    Derivative {
        #[arg(long)]
        t: Option<f64>,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 40)]
        depth: usize,
    },
}

enum Failure {
    Invalid(String),
    Usage(String),
}

impl From<SystemError> for Failure {
    fn from(e: SystemError) -> Self {
        match e {
            SystemError::Json(_) => Failure::Usage(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            eprintln!("invalid system: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_system(src: &SourceArgs) -> Result<SelfAffineSystem, Failure> {
    let given = [src.preset.is_some(), src.system.is_some(), src.system_json.is_some()];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err(usage("give exactly one of --preset, --system, --system-json"));
    }
    if let Some(name) = &src.preset {
        return Ok(preset::by_name(name, src.a, src.theta)?);
    }
    let text = match (&src.system, &src.system_json) {
        (Some(path), _) => fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?,
        (_, Some(text)) => text.clone(),
        _ => unreachable!("one source is present"),
    };
    Ok(preset::system_from_json(&text)?)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(fmt_g(x))
    }
}

fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize") + "\n"
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if !(cli.tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let sys = load_system(&cli.source)?;
    let format = cli.format.unwrap_or(Format::Text);
    match &cli.command {
        Command::Validate => {
            let report = sys.validate();
            if !report.ok() {
                return Err(Failure::Invalid(report.to_string()));
            }
            emit(&cli.out, &format!("ok: d={} m={}\n", sys.d(), sys.m()))
        }
        Command::Eval { t } => {
            if !(0.0..=1.0).contains(t) {
                return Err(usage("--t must lie in [0, 1]"));
            }
            let e = Evaluator::new(&sys).eval(*t, cli.tol);
            let coords: Vec<String> = e.value.iter().map(|x| fmt_g(*x)).collect();
            let text = match format {
                Format::Json => pretty(&json!({
                    "t": t,
                    "value": e.value.iter().copied().collect::<Vec<f64>>(),
                    "error_bound": e.error_bound,
                })),
                _ => format!("{} +- {}\n", coords.join(" "), fmt_g(e.error_bound)),
            };
            emit(&cli.out, &text)
        }
        Command::Sample { level } => {
            let sample = Evaluator::new(&sys).sample_curve(*level).map_err(|e| usage(e.to_string()))?;
            let text = match format {
                Format::Svg => svg(&sys, &sample),
                Format::Json => pretty(&json!(sample
                    .points
                    .iter()
                    .map(|p| json!({"t": p.t, "value": p.value.iter().copied().collect::<Vec<f64>>(), "err": p.err}))
                    .collect::<Vec<_>>())),
                _ => {
                    let mut s = String::from("t");
                    for k in 1..=sys.d() {
                        s += &format!(",x{k}");
                    }
                    s += ",err\n";
                    for p in &sample.points {
                        s += &fmt_g(p.t);
                        for x in p.value.iter() {
                            s += ",";
                            s += &fmt_g(*x);
                        }
                        s += &format!(",{}\n", fmt_g(p.err));
                    }
                    s
                }
            };
            emit(&cli.out, &text)
        }
        Command::Spectrum { grid, profile } => {
            if *grid < 2 {
                return Err(usage("--grid must be at least 2"));
            }
            let spectrum = Spectrum::new(&sys);
            let table = spectrum.table(*grid);
            let profile_json = serde_json::to_value(spectrum.profile()).expect("profile serializes");
            if format == Format::Json {
                let points: Vec<Value> = table.points.iter().map(|(a, d)| json!({"alpha": a, "dim": num(*d)})).collect();
                return emit(
                    &cli.out,
                    &pretty(&json!({"profile": profile_json, "table": points, "infinite_atom": table.infinite_atom})),
                );
            }
            let mut csv = String::from("alpha,dim\n");
            for (a, d) in &table.points {
                csv += &format!("{},{}\n", fmt_g(*a), fmt_g(*d));
            }
            emit(&cli.out, &csv)?;
            let target = profile.clone().or_else(|| cli.out.as_ref().map(|p| p.with_extension("profile.json")));
            if let Some(path) = target {
                fs::write(path, pretty(&profile_json))?;
            }
            Ok(())
        }
        Command::Classify => {
            let c = classify(&sys);
            let text = match format {
                Format::Json => pretty(&json!({
                    "case": c.case,
                    "dimD": opt_num(c.dim_d),
                    "dimDComplement": opt_num(c.dim_d_complement),
                    "sums": {
                        "log_ratio_sum": num(c.sums.log_ratio_sum),
                        "scales_dominate": c.sums.scales_dominate,
                        "hat_sum": num(c.sums.hat_sum),
                    },
                })),
                _ => {
                    let show = |x: Option<f64>| x.map_or("n/a".to_string(), fmt_g);
                    format!(
                        "case ({}) {}\ndimD {}\ndimD~ {}\nlog_ratio_sum {}\nhat_sum {}\n",
                        c.case.numeral(),
                        serde_json::to_value(c.case).expect("case serializes").as_str().unwrap_or_default(),
                        show(c.dim_d),
                        show(c.dim_d_complement),
                        fmt_g(c.sums.log_ratio_sum),
                        fmt_g(c.sums.hat_sum),
                    )
                }
            };
            emit(&cli.out, &text)
        }
        Command::Holder { coding } => {
            let coding: Coding = coding.parse().map_err(|e| usage(format!("{e}")))?;
            let r = holder_exponent(&sys, &coding).map_err(|e| usage(e.to_string()))?;
            let value = match r.value {
                HolderValue::Finite(x) => json!(x),
                HolderValue::Infinite => json!("inf"),
                HolderValue::Interval { lo, hi } => json!([lo, hi]),
            };
            let case = serde_json::to_value(r.case).expect("case serializes");
            let text = match format {
                Format::Json => pretty(&json!({
                    "value": value,
                    "case": case,
                    "K": r.k,
                    "mixed_constant_side": r.mixed_constant_side,
                })),
                _ => {
                    let v = match r.value {
                        HolderValue::Finite(x) => fmt_g(x),
                        HolderValue::Infinite => "inf".into(),
                        HolderValue::Interval { lo, hi } => format!("[{}, {}]", fmt_g(lo), fmt_g(hi)),
                    };
                    format!("value {v}\ncase {}\nK {}\n", case.as_str().unwrap_or_default(), fmt_g(r.k))
                }
            };
            emit(&cli.out, &text)
        }
        Command::Decompose => {
            let sub = subordinate(&sys)?;
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("g.json"), sub.g.to_json() + "\n")?;
            fs::write(dir.join("h.json"), sub.h.to_json() + "\n")?;
            for (name, report) in [("g", &sub.g_report), ("h", &sub.h_report)] {
                if !report.ok() {
                    eprintln!("note: {name} does not validate: {report}");
                }
            }
            println!("s {}", fmt_g(sub.s));
            Ok(())
        }
        Command::Oracle { which } => oracle(cli, &sys, which, format),
    }
}

fn oracle(cli: &Cli, sys: &SelfAffineSystem, which: &OracleCommand, format: Format) -> Result<(), Failure> {
    match which {
        OracleCommand::Chord { t, kmin, kmax } => {
            if !(0.0..=1.0).contains(t) {
                return Err(usage("--t must lie in [0, 1]"));
            }
            let ev = Evaluator::new(sys);
            let fit = empirical_chord_exponent(&ev, *t, &dyadic_scales(*kmin, *kmax)).map_err(|e| usage(e.to_string()))?;
            let text = match fit {
                ExponentFit::Infinite => "slope inf\n".to_string(),
                ExponentFit::Slope { slope, stderr, used } => {
                    format!("slope {}\nstderr {}\nused {used}\n", fmt_g(slope), fmt_g(stderr))
                }
            };
            emit(&cli.out, &text)
        }
        OracleCommand::Spectrum { level, bins } => {
            let s = empirical_spectrum(sys, *level, *bins).map_err(|e| usage(e.to_string()))?;
            let text = if format == Format::Json {
                pretty(&serde_json::to_value(&s).expect("histogram serializes"))
            } else {
                let mut csv = String::from("alpha,count,dim_estimate\n");
                for b in &s.bins {
                    csv += &format!("{},{},{}\n", fmt_g(b.alpha), b.count, fmt_g(b.dim_estimate));
                }
                csv
            };
            emit(&cli.out, &text)
        }
        OracleCommand::Derivative { t, samples, depth } => {
            if *depth > 40 {
                return Err(usage("--depth must be at most 40"));
            }
            let times: Vec<f64> = match t {
                Some(t) => vec![*t],
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                    (0..*samples).map(|_| rng.random::<f64>()).collect()
                }
            };
            let mut text = String::from("t,coding,verdict\n");
            for t in times {
                let trace = empirical_derivative_test_at(sys, t, *depth);
                let coding = standard_coding(sys, t, *depth).coding;
                let verdict = serde_json::to_value(trace.verdict).expect("verdict serializes");
                text += &format!("{},{},{}\n", fmt_g(t), coding, verdict.as_str().unwrap_or_default());
            }
            emit(&cli.out, &text)
        }
    }
}

/// Standalone SVG with one polyline; planar curves use the first two
/// coordinates, scalar functions plot `(t, f(t))`.
fn svg(sys: &SelfAffineSystem, sample: &selfaffine::CurveSample) -> String {
    let pts: Vec<(f64, f64)> = sample
        .points
        .iter()
        .map(|p| if sys.d() >= 2 { (p.value[0], p.value[1]) } else { (p.t, p.value[0]) })
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let w = (x1 - x0).max(1e-9);
    let h = (y1 - y0).max(1e-9);
    let stroke = 0.002 * w.max(h);
    // SVG y grows downward.
    let flip = |y: f64| if y == 0.0 { 0.0 } else { -y };
    let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{},{}", fmt_g(x), fmt_g(flip(y)))).collect();
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n\
         <polyline fill=\"none\" stroke=\"black\" stroke-width=\"{}\" points=\"{}\"/>\n</svg>\n",
        fmt_g(x0),
        fmt_g(flip(y1)),
        fmt_g(w),
        fmt_g(h),
        fmt_g(stroke),
        coords.join(" ")
    )
}
