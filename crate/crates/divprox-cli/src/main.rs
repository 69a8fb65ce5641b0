//! `divprox` — benchmark CLI for European options on discrete-dividend
//! stocks: single prices, dividend sensitivities, accuracy tables and
//! the error-vs-dividend sweep.

mod config;
mod methods;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use divprox_core::{
    dividend_sensitivity, pde_price, DividendEvent, DividendSchedule, GridConfig, MarketParams,
    McConfig, OptionKind, OptionSpec, SensitivityRequest,
};

use config::BenchConfig;
use methods::{price_with, Method};
use report::build_report;

#[derive(Parser)]
#[command(name = "divprox", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price a single option with one method.
    Price(PriceArgs),
    /// Reproduce an accuracy table from a JSON config.
    Table(TableArgs),
    /// Sweep the dividend amount and report errors against the PDE.
    Figure(FigureArgs),
    /// Exact dividend sensitivities, optionally checked against PDE bumps.
    Sens(SensArgs),
}

#[derive(Args, Clone)]
struct MarketArgs {
    /// Spot price of the underlying.
    #[arg(long)]
    spot: f64,
    /// Continuously compounded risk-free rate.
    #[arg(long)]
    rate: f64,
    /// Lognormal volatility.
    #[arg(long)]
    vol: f64,
    /// Option strike.
    #[arg(long)]
    strike: f64,
    /// Option maturity in years.
    #[arg(long)]
    maturity: f64,
    /// Option kind.
    #[arg(long, value_parser = ["call", "put"], default_value = "call")]
    kind: String,
}

#[derive(Args, Clone)]
struct ScheduleArgs {
    /// Spacing between ex-dates in years (with --div-amount/--div-start).
    #[arg(long, requires = "div_amount", conflicts_with = "schedule")]
    div_every: Option<f64>,
    /// Cash amount of each dividend.
    #[arg(long, requires = "div_every")]
    div_amount: Option<f64>,
    /// First ex-date in years (defaults to --div-every).
    #[arg(long, requires = "div_every")]
    div_start: Option<f64>,
    /// CSV file with time_years,amount rows.
    #[arg(long)]
    schedule: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Spatial nodes of the finite-difference grid.
    #[arg(long, default_value_t = 800)]
    grid_nodes: usize,
    /// Time steps per year.
    #[arg(long, default_value_t = 200)]
    steps_per_year: usize,
    /// Grid half-width in terminal standard deviations.
    #[arg(long, default_value_t = 7.0)]
    grid_width: f64,
    /// Fully-implicit restart steps after maturity and each ex-date.
    #[arg(long, default_value_t = 4)]
    rannacher: usize,
}

#[derive(Args, Clone)]
struct McArgs {
    /// Monte-Carlo paths.
    #[arg(long, default_value_t = 1_000_000)]
    paths: usize,
    /// Simulation seed.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Disable antithetic pairing.
    #[arg(long)]
    no_antithetic: bool,
}

#[derive(Args)]
struct PriceArgs {
    /// Pricing method.
    #[arg(long, value_enum)]
    method: Method,
    #[command(flatten)]
    market: MarketArgs,
    #[command(flatten)]
    schedule: ScheduleArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    mc: McArgs,
}

#[derive(Args)]
struct TableArgs {
    /// JSON benchmark configuration.
    #[arg(long)]
    config: PathBuf,
    /// Write the CSV report here (stdout when omitted).
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Also write a markdown rendering here.
    #[arg(long)]
    md_out: Option<PathBuf>,
}

#[derive(Args)]
struct FigureArgs {
    #[arg(long, default_value_t = 100.0)]
    spot: f64,
    #[arg(long, default_value_t = 0.03)]
    rate: f64,
    #[arg(long, default_value_t = 0.30)]
    vol: f64,
    /// Strike (defaults to the spot, i.e. at the money).
    #[arg(long)]
    strike: Option<f64>,
    #[arg(long, default_value_t = 10.0)]
    maturity: f64,
    /// Spacing between ex-dates in years.
    #[arg(long, default_value_t = 1.0)]
    div_every: f64,
    /// First ex-date in years.
    #[arg(long, default_value_t = 0.5)]
    div_start: f64,
    /// Largest dividend amount of the sweep.
    #[arg(long, default_value_t = 6.0)]
    max_amount: f64,
    /// Sweep step for the dividend amount.
    #[arg(long, default_value_t = 0.25)]
    step: f64,
    /// Write the CSV here (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args)]
struct SensArgs {
    #[command(flatten)]
    market: MarketArgs,
    /// Comma-separated ex-dates (up to three) to differentiate against.
    #[arg(long, value_delimiter = ',', required = true)]
    times: Vec<f64>,
    /// Also compute a PDE bump estimate and report the difference.
    #[arg(long)]
    check: bool,
    /// Bump size for the PDE estimate.
    #[arg(long, default_value_t = 1.0)]
    bump: f64,
    #[command(flatten)]
    grid: GridArgs,
}

enum CliError {
    Usage(String),
    Numerical(String),
}

type CliResult<T> = Result<T, CliError>;

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

impl MarketArgs {
    fn build(&self) -> CliResult<(MarketParams, OptionSpec)> {
        let market = MarketParams::new(self.spot, self.rate, self.vol).map_err(usage)?;
        let kind = if self.kind == "put" {
            OptionKind::Put
        } else {
            OptionKind::Call
        };
        let option = OptionSpec::new(self.strike, self.maturity, kind).map_err(usage)?;
        Ok((market, option))
    }
}

impl ScheduleArgs {
    fn build(&self, maturity: f64) -> CliResult<DividendSchedule> {
        if let Some(path) = &self.schedule {
            return Ok(DividendSchedule::load_csv(path)
                .map_err(usage)?
                .within(maturity));
        }
        match (self.div_every, self.div_amount) {
            (Some(every), Some(amount)) => {
                let start = self.div_start.unwrap_or(every);
                DividendSchedule::periodic(start, every, amount, maturity).map_err(usage)
            }
            _ => Ok(DividendSchedule::empty()),
        }
    }
}

impl GridArgs {
    fn build(&self) -> CliResult<GridConfig> {
        let grid = GridConfig {
            space_nodes: self.grid_nodes,
            steps_per_year: self.steps_per_year,
            space_width: self.grid_width,
            rannacher_steps: self.rannacher,
        };
        grid.validate().map_err(usage)?;
        Ok(grid)
    }
}

impl McArgs {
    fn build(&self) -> CliResult<McConfig> {
        let mc = McConfig {
            n_paths: self.paths,
            seed: self.seed,
            antithetic: !self.no_antithetic,
        };
        mc.validate().map_err(usage)?;
        Ok(mc)
    }
}

fn write_or_print(path: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match path {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_price(args: &PriceArgs) -> CliResult<()> {
    let (market, option) = args.market.build()?;
    let schedule = args.schedule.build(option.maturity)?;
    schedule.validate_for(&option).map_err(usage)?;
    let grid = args.grid.build()?;
    let mc = args.mc.build()?;
    let (price, stderr) =
        price_with(args.method, &market, &option, &schedule, &grid, &mc).map_err(numerical)?;
    println!(
        "method={} spot={} rate={} vol={} strike={} maturity={} kind={} dividends={}",
        args.method,
        market.spot,
        market.rate,
        market.vol,
        option.strike,
        option.maturity,
        args.market.kind,
        schedule.len(),
    );
    match stderr {
        Some(se) => println!("price={price:.6} stderr={se:.6}"),
        None => println!("price={price:.6}"),
    }
    Ok(())
}

fn cmd_table(args: &TableArgs) -> CliResult<()> {
    let config = BenchConfig::load(&args.config).map_err(usage)?;
    let report = build_report(&config).map_err(numerical)?;
    for row in &report.rows {
        if let Some(error) = &row.error {
            eprintln!(
                "warning: {} at maturity {} strike ratio {} failed: {error}",
                row.method, row.maturity, row.strike_ratio
            );
        }
    }
    write_or_print(args.csv_out.as_ref(), &report.to_csv())?;
    if let Some(md) = &args.md_out {
        write_or_print(Some(md), &report.to_markdown())?;
    }
    Ok(())
}

fn cmd_figure(args: &FigureArgs) -> CliResult<()> {
    let market = MarketParams::new(args.spot, args.rate, args.vol).map_err(usage)?;
    let strike = args.strike.unwrap_or(args.spot);
    let option = OptionSpec::new(strike, args.maturity, OptionKind::Call).map_err(usage)?;
    let grid = args.grid.build()?;
    if !(args.step > 0.0 && args.max_amount >= 0.0) {
        return Err(CliError::Usage(
            "sweep step and range must be positive".into(),
        ));
    }
    let mc = McConfig::default();
    let mut out = String::from("dividend_amount,method,rel_err_pct\n");
    let sweep_len = (args.max_amount / args.step).round() as usize;
    for i in 0..=sweep_len {
        let amount = i as f64 * args.step;
        let schedule =
            DividendSchedule::periodic(args.div_start, args.div_every, amount, args.maturity)
                .map_err(usage)?;
        let reference = pde_price(&market, &option, &schedule, &grid)
            .map_err(numerical)?
            .price;
        for method in [Method::Gs, Method::Taylor2, Method::Taylor3] {
            let (price, _) =
                price_with(method, &market, &option, &schedule, &grid, &mc).map_err(numerical)?;
            let rel = 100.0 * (price - reference) / reference;
            out.push_str(&format!("{amount},{method},{rel:.4}\n"));
        }
    }
    write_or_print(args.out.as_ref(), &out)
}

/// Central-difference estimate of the dividend derivative at zero
/// dividends, pricing the bumped schedules with the PDE.
fn bump_estimate(
    market: &MarketParams,
    option: &OptionSpec,
    times: &[f64],
    h: f64,
    grid: &GridConfig,
) -> CliResult<f64> {
    let price_at = |amounts: &[f64]| -> CliResult<f64> {
        let mut events: Vec<DividendEvent> = times
            .iter()
            .zip(amounts)
            .map(|(&time, &amount)| DividendEvent { time, amount })
            .collect();
        events.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        events.dedup_by(|later, first| {
            if later.time == first.time {
                first.amount += later.amount;
                true
            } else {
                false
            }
        });
        let schedule = DividendSchedule::new_signed(events).map_err(usage)?;
        Ok(pde_price(market, option, &schedule, grid)
            .map_err(numerical)?
            .price)
    };
    match times.len() {
        1 => Ok((price_at(&[h])? - price_at(&[-h])?) / (2.0 * h)),
        2 if times[0] == times[1] => {
            let base = price_at(&[0.0, 0.0])?;
            Ok((price_at(&[h, 0.0])? - 2.0 * base + price_at(&[-h, 0.0])?) / (h * h))
        }
        2 => Ok(
            (price_at(&[h, h])? - price_at(&[h, -h])? - price_at(&[-h, h])? + price_at(&[-h, -h])?)
                / (4.0 * h * h),
        ),
        _ => Err(CliError::Usage(
            "--check supports one or two ex-dates".into(),
        )),
    }
}

fn cmd_sens(args: &SensArgs) -> CliResult<()> {
    let (market, option) = args.market.build()?;
    let request = SensitivityRequest::new(market, option, args.times.clone()).map_err(usage)?;
    let exact = dividend_sensitivity(&request).map_err(numerical)?;
    println!(
        "order={} times={:?} sensitivity={exact:.8}",
        args.times.len(),
        request.div_times()
    );
    if args.check {
        if !args.bump.is_finite() || args.bump <= 0.0 {
            return Err(CliError::Usage("--bump must be positive".into()));
        }
        let grid = args.grid.build()?;
        let estimate = bump_estimate(&market, &option, args.times.as_slice(), args.bump, &grid)?;
        println!(
            "pde_bump={estimate:.8} abs_diff={:.2e} rel_diff={:.2e}",
            (exact - estimate).abs(),
            (exact - estimate).abs() / exact.abs().max(f64::MIN_POSITIVE)
        );
    }
    Ok(())
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Price(args) => cmd_price(args),
        Command::Table(args) => cmd_table(args),
        Command::Figure(args) => cmd_figure(args),
        Command::Sens(args) => cmd_sens(args),
    }
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
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
