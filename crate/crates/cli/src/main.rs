//! Command-line front end for the rank-share toolkit.
//!
//! Every subcommand is byte-deterministic for a fixed argument list and
//! input files; `simulate` therefore requires an explicit `--seed`.
//!
//! Exit codes: 0 success, 1 domain or input error, 2 usage error.

mod output;

use std::fmt::Write as _;
use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use rankshare::analysis::{fit_report, parse_table, FitOptions, MissingPolicy, ParseOptions};
use rankshare::combinatorics::{count_rank_shares, SplitParams};
use rankshare::model;
use rankshare::montecarlo::{simulate, SimConfig, SimMode, DEFAULT_DISCRETE_GRID};
use rankshare::numfmt;

use output::{json_text, Format, OutputArgs};

#[derive(Parser)]
#[command(
    name = "rankshare",
    version,
    about = "Exact, analytic, simulated, and fitted rank-share distributions"
)]
struct Cli {
    /// Worker threads; RANKSHARE_THREADS is used when the flag is absent.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact histogram of every (rank, share) outcome for T units among N participants.
    Enumerate(EnumerateArgs),
    /// Density of one rank's share, sampled across its support.
    Pdf(CurveArgs),
    /// Cumulative distribution of one rank's share, sampled across its support.
    Cdf(CurveArgs),
    /// Expected share of every rank.
    Expected(ProfileArgs),
    /// Piecewise polynomial coefficient table.
    Table(TableArgs),
    /// Expected shares per rank in double-log coordinates.
    Zipf(ProfileArgs),
    /// Monte Carlo spacing simulation, binned per rank.
    Simulate(SimulateArgs),
    /// Rank a dataset and correlate its rank means against the model profile.
    Fit(FitArgs),
}

#[derive(Args)]
struct EnumerateArgs {
    /// Total volume in units.
    #[arg(long)]
    t: u64,
    /// Participant count.
    #[arg(long)]
    n: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CurveArgs {
    /// Participant count.
    #[arg(long)]
    n: u32,
    /// Rank to evaluate.
    #[arg(long)]
    k: u32,
    /// Number of evenly spaced evaluation points across the support.
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    points: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ProfileArgs {
    /// Participant count.
    #[arg(long)]
    n: u32,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct TableArgs {
    /// Participant count.
    #[arg(long)]
    n: u32,
    /// Restrict the table to one rank.
    #[arg(long)]
    k: Option<u32>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Continuous,
    Discrete,
}

#[derive(Args)]
struct SimulateArgs {
    /// Participant count.
    #[arg(long)]
    n: u32,
    /// Number of simulated splits.
    #[arg(long)]
    samples: u64,
    /// RNG seed; mandatory so runs are reproducible.
    #[arg(long)]
    seed: u64,
    /// Sampling mode.
    #[arg(long, value_enum, default_value_t = Mode::Continuous)]
    mode: Mode,
    /// Grid units for discrete mode.
    #[arg(long)]
    t: Option<u64>,
    /// Histogram bin width.
    #[arg(long, default_value_t = 0.002)]
    bin_width: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FitArgs {
    /// Dataset path: header row of entity names, one row per category.
    #[arg(long)]
    input: PathBuf,
    /// Treat values as percents (divide by 100) instead of renormalizing
    /// each entity row to sum to 1.
    #[arg(long)]
    no_renormalize: bool,
    /// Category rows starting with this prefix are dropped as aggregates.
    #[arg(long, default_value = "Total")]
    total_row_pattern: String,
    /// Field delimiter: a single character, or "tab".
    #[arg(long, default_value = ",")]
    delimiter: String,
    /// Drop entities with unparseable cells instead of failing.
    #[arg(long)]
    drop_bad_entities: bool,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("rankshare: {err:#}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}

fn run(cli: Cli) -> Result<()> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Enumerate(args) => enumerate(args),
        Command::Pdf(args) => curve(args, model::pdf, "density"),
        Command::Cdf(args) => curve(args, model::cdf, "cumulative"),
        Command::Expected(args) => expected(args),
        Command::Table(args) => table(args),
        Command::Zipf(args) => zipf(args),
        Command::Simulate(args) => run_simulation(args),
        Command::Fit(args) => fit(args),
    }
}

fn init_threads(flag: Option<usize>) -> Result<()> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var("RANKSHARE_THREADS") {
            Ok(raw) => Some(
                raw.parse::<usize>()
                    .with_context(|| format!("RANKSHARE_THREADS={raw:?} is not a thread count"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            bail!("thread count must be at least 1");
        }
        // Ignore "already initialized": only the first configuration wins.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn enumerate(args: EnumerateArgs) -> Result<()> {
    let params = SplitParams::new(args.t, args.n)?;
    let hist = count_rank_shares(params);
    let content = match args.output.format {
        Format::Csv => {
            let mut buf = Vec::new();
            hist.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv output is utf-8")
        }
        Format::Json => json_text(&hist.to_json()),
    };
    args.output.write(&content)
}

fn curve(args: CurveArgs, f: fn(u32, u32, f64) -> f64, value_name: &str) -> Result<()> {
    if args.n < 2 {
        bail!("curves require at least 2 participants, got {}", args.n);
    }
    if args.k < 1 || args.k > args.n {
        bail!("rank {} out of range for {} participants", args.k, args.n);
    }
    let (lo, hi) = model::support_bounds(args.n, args.k);
    let steps = f64::from(args.points - 1);
    let series: Vec<(f64, f64)> = (0..args.points)
        .map(|j| {
            let s = lo + (hi - lo) * f64::from(j) / steps;
            (s, f(args.n, args.k, s))
        })
        .collect();
    let content = match args.output.format {
        Format::Csv => {
            let mut text = format!("share,{value_name}\n");
            for (s, v) in &series {
                writeln!(text, "{},{}", numfmt::fmt12(*s), numfmt::fmt12(*v)).unwrap();
            }
            text
        }
        Format::Json => {
            let points: Vec<_> = series
                .iter()
                .map(|(s, v)| {
                    json!({"share": numfmt::round12(*s), value_name: numfmt::round12(*v)})
                })
                .collect();
            json_text(&json!({"n": args.n, "k": args.k, "series": points}))
        }
    };
    args.output.write(&content)
}

fn expected(args: ProfileArgs) -> Result<()> {
    if args.n < 1 {
        bail!("at least 1 participant is required");
    }
    let profile = model::rank_profile(args.n);
    let content = match args.output.format {
        Format::Csv => {
            let mut text = String::from("rank,expected_share\n");
            for (idx, value) in profile.expected.iter().enumerate() {
                writeln!(text, "{},{}", idx + 1, numfmt::fmt12(*value)).unwrap();
            }
            text
        }
        Format::Json => {
            let expected: Vec<_> = profile
                .expected
                .iter()
                .map(|&v| numfmt::round12(v))
                .collect();
            json_text(&json!({"n": profile.n, "expected": expected}))
        }
    };
    args.output.write(&content)
}

fn zipf(args: ProfileArgs) -> Result<()> {
    if args.n < 1 {
        bail!("at least 1 participant is required");
    }
    let series = model::zipf_series(args.n);
    let content = match args.output.format {
        Format::Csv => {
            let mut text = String::from("log10_rank,log10_share\n");
            for (x, y) in &series {
                writeln!(text, "{},{}", numfmt::fmt12(*x), numfmt::fmt12(*y)).unwrap();
            }
            text
        }
        Format::Json => {
            let points: Vec<_> = series
                .iter()
                .map(|(x, y)| {
                    json!({"log10_rank": numfmt::round12(*x), "log10_share": numfmt::round12(*y)})
                })
                .collect();
            json_text(&json!({"n": args.n, "series": points}))
        }
    };
    args.output.write(&content)
}

fn table(args: TableArgs) -> Result<()> {
    if args.n < 3 {
        bail!(
            "coefficient tables require at least 3 participants, got {}",
            args.n
        );
    }
    if let Some(k) = args.k {
        if k < 1 || k > args.n {
            bail!("rank {k} out of range for {} participants", args.n);
        }
    }
    let tables = match args.k {
        Some(k) => vec![model::rank_polynomials(args.n, k)],
        None => model::polynomial_table(args.n),
    };
    let content = match args.output.format {
        Format::Csv => {
            let mut text = String::from("k,d,lower,upper,term,coeff\n");
            for t in &tables {
                for seg in &t.segments {
                    for (idx, &a) in seg.coeffs.iter().enumerate() {
                        writeln!(
                            text,
                            "{},{},{},{},{},{}",
                            t.k,
                            seg.d,
                            numfmt::fmt12(seg.lower),
                            numfmt::fmt12(seg.upper),
                            idx + 1,
                            a
                        )
                        .unwrap();
                    }
                }
            }
            text
        }
        Format::Json => {
            if tables.len() == 1 {
                json_text(&serde_json::to_value(&tables[0])?)
            } else {
                json_text(&serde_json::to_value(&tables)?)
            }
        }
    };
    args.output.write(&content)
}

fn run_simulation(args: SimulateArgs) -> Result<()> {
    if !(args.bin_width > 0.0 && args.bin_width <= 1.0) {
        bail!("bin width must lie in (0, 1]");
    }
    let mode = match args.mode {
        Mode::Continuous => {
            if args.t.is_some() {
                bail!("--t only applies to discrete mode");
            }
            SimMode::Continuous
        }
        Mode::Discrete => SimMode::Discrete {
            grid: args.t.unwrap_or(DEFAULT_DISCRETE_GRID),
        },
    };
    let cfg = SimConfig::new(args.n, args.samples, args.seed, mode)?;
    let emp = simulate(&cfg);
    let content = match args.output.format {
        Format::Csv => {
            let mut buf = Vec::new();
            emp.write_histogram_csv(&mut buf, args.bin_width)?;
            String::from_utf8(buf).expect("csv output is utf-8")
        }
        Format::Json => {
            let mut value = emp.histogram_json(args.bin_width);
            value["seed"] = json!(args.seed);
            json_text(&value)
        }
    };
    args.output.write(&content)
}

fn fit(args: FitArgs) -> Result<()> {
    let delimiter = match args.delimiter.as_str() {
        "tab" | "\\t" | "\t" => b'\t',
        s if s.len() == 1 => s.as_bytes()[0],
        other => bail!("delimiter must be a single character or \"tab\", got {other:?}"),
    };
    let parse_options = ParseOptions {
        delimiter,
        total_row_pattern: args.total_row_pattern.clone(),
        on_missing: if args.drop_bad_entities {
            MissingPolicy::DropEntity
        } else {
            MissingPolicy::Error
        },
        provenance: Some(args.input.display().to_string()),
    };
    let file = File::open(&args.input)
        .with_context(|| format!("opening {}", args.input.display()))?;
    let dataset = parse_table(file, &parse_options)
        .with_context(|| format!("parsing {}", args.input.display()))?;
    let report = fit_report(
        &dataset,
        &FitOptions {
            renormalize: !args.no_renormalize,
            total_row_pattern: args.total_row_pattern,
        },
    )?;
    let content = match args.output.format {
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            String::from_utf8(buf).expect("csv output is utf-8")
        }
        Format::Json => json_text(&report.to_json()),
    };
    args.output.write(&content)
}
