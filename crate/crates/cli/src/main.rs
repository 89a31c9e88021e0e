use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use twr_noma::config_file::{self, default_config_text, Preset, PRESETS};
use twr_noma::output::{emit_outputs, to_csv};
use twr_noma::sweep::{run_sweep, Metric, SweepSpec};
use twr_noma::validate::{run_criterion, ToleranceProfile, ValidateOptions, ValidationReport, CRITERIA};
use twr_noma::{SicMode, Signal, SystemConfig};

/// Exit status for a validation run with failed checks.
const EXIT_VALIDATION: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "twr-noma", version, about = "Two-way relay NOMA outage, rate and efficiency sweeps")]
struct Cli {
    /// Print the reference configuration file and exit.
    #[arg(long)]
    print_default_config: bool,

    /// List the figure presets and exit.
    #[arg(long)]
    list_presets: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep one metric over an SNR grid and write a CSV table.
    Sweep(SweepArgs),
    /// Run the analytic-vs-simulation checks and report each one.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct ConfigArgs {
    /// Configuration file (dotted keys, e.g. `noma.a1 = 0.8`).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Start from a figure preset (fig2..fig8); --config and --set apply on top.
    #[arg(long)]
    preset: Option<String>,

    /// Override one key, e.g. `--set sic.omega_i_db=-10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> twr_noma::Result<(SystemConfig, Option<&'static Preset>)> {
        let preset = self.preset.as_deref().map(config_file::preset).transpose()?;
        let config = config_file::load_config(self.config.as_deref(), preset, &self.overrides)?;
        Ok((config, preset))
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Ipsic,
    Psic,
    Both,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArgs,

    /// outage, ergodic_rate, throughput_dl, throughput_dt, ee_dl or ee_dt.
    #[arg(long)]
    metric: Option<Metric>,

    /// Comma-separated signals, e.g. `x1,x2`.
    #[arg(long)]
    signals: Option<String>,

    /// SIC mode; `both` writes rows for ipSIC and pSIC. Defaults to the
    /// preset's or config's `sic.mode`.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,

    /// SNR grid in dB as `start:stop:step`.
    #[arg(long, default_value = "0:40:5")]
    snr: String,

    /// Monte Carlo trials per row (at least 1000).
    #[arg(long, default_value_t = 1_000_000)]
    iterations: u64,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Add rows for the five-slot orthogonal baseline.
    #[arg(long)]
    with_oma: bool,

    /// Fill the asymptotic column where a high-SNR form exists.
    #[arg(long)]
    with_asymptotic: bool,

    /// Share random draws across the SNR grid for smoother curves.
    #[arg(long)]
    crn: bool,

    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,

    /// CSV output path; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Also write a matplotlib script next to the CSV (needs --out).
    #[arg(long, requires = "out")]
    emit_plot: bool,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[command(flatten)]
    config: ConfigArgs,

    /// `default`, or `strict` to halve every tolerance band.
    #[arg(long, default_value = "default")]
    profile: ToleranceProfile,

    /// Monte Carlo trials per estimate.
    #[arg(long, default_value_t = 1_000_000)]
    iterations: u64,

    #[arg(long)]
    seed: Option<u64>,

    /// Run only these criteria (1-11). Repeatable.
    #[arg(long = "criterion", value_name = "N")]
    criteria: Vec<u8>,

    #[arg(long)]
    workers: Option<usize>,
}

fn parse_snr(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, step] = parts[..] else {
        return Err(format!("--snr expects start:stop:step, got `{s}`"));
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("--snr `{x}`: {e}"));
    Ok((num(a)?, num(b)?, num(step)?))
}

fn parse_signals(s: &str) -> twr_noma::Result<Vec<Signal>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(|p| p.trim().parse()).collect()
}

fn sweep(args: &SweepArgs) -> Result<(), String> {
    let (config, preset) = args.config.load().map_err(|e| e.to_string())?;
    let metric = match (args.metric, preset) {
        (Some(m), _) => m,
        (None, Some(p)) => p.metric.parse().map_err(|e: twr_noma::Error| e.to_string())?,
        (None, None) => Metric::Outage,
    };
    let signals = match (&args.signals, preset) {
        (Some(s), _) => parse_signals(s).map_err(|e| e.to_string())?,
        (None, Some(p)) => parse_signals(p.signals).map_err(|e| e.to_string())?,
        (None, None) => Signal::ALL.to_vec(),
    };
    let modes = match args.mode {
        Some(ModeArg::Ipsic) => vec![SicMode::Imperfect],
        Some(ModeArg::Psic) => vec![SicMode::Perfect],
        Some(ModeArg::Both) => SicMode::ALL.to_vec(),
        None if preset.is_some() => SicMode::ALL.to_vec(),
        None => vec![config.sic],
    };
    let (start, stop, step) = parse_snr(&args.snr)?;
    let mut spec = SweepSpec::new(metric, signals).with_snr(start, stop, step);
    spec.modes = modes;
    spec.iterations = args.iterations;
    spec.seed = args.seed;
    spec.include_oma = args.with_oma || preset.is_some_and(|p| p.with_oma);
    spec.include_asymptotic = args.with_asymptotic || preset.is_some_and(|p| p.with_asymptotic);
    spec.common_random_numbers = args.crn;
    spec.workers = args.workers;
    spec.output = args.out.clone();
    spec.validate().map_err(|e| e.to_string())?;

    info!("{} rows over {} SNR points", metric, spec.grid().len());
    let rows = run_sweep(&spec, &config).map_err(|e| e.to_string())?;
    match &args.out {
        Some(path) => {
            for p in emit_outputs(&rows, path, args.emit_plot).map_err(|e| e.to_string())? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => print!("{}", to_csv(&rows)),
    }
    Ok(())
}

fn validate(args: &ValidateArgs) -> Result<bool, String> {
    let (config, _) = args.config.load().map_err(|e| e.to_string())?;
    let mut opts = ValidateOptions { profile: args.profile, iterations: args.iterations, ..ValidateOptions::default() };
    if let Some(seed) = args.seed {
        opts.seed = seed;
    }
    let criteria: Vec<u8> = if args.criteria.is_empty() { CRITERIA.collect() } else { args.criteria.clone() };
    let run = || -> twr_noma::Result<ValidationReport> {
        let mut report = ValidationReport::default();
        for n in criteria {
            for check in run_criterion(n, &config, &opts)? {
                println!("{check}");
                report.checks.push(check);
            }
        }
        Ok(report)
    };
    let report = twr_noma::montecarlo::with_workers(args.workers, run)
        .and_then(|r| r)
        .map_err(|e| e.to_string())?;
    let failed = report.failures().count();
    println!("profile {}: {} checks, {} failed", args.profile.name, report.checks.len(), failed);
    Ok(failed == 0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.print_default_config {
        print!("{}", default_config_text());
        return ExitCode::SUCCESS;
    }
    if cli.list_presets {
        for p in PRESETS {
            println!("{:<6} {:<14} {}", p.name, p.metric, p.description);
        }
        return ExitCode::SUCCESS;
    }
    let result = match &cli.command {
        Some(Command::Sweep(args)) => sweep(args).map(|_| true),
        Some(Command::Validate(args)) => validate(args),
        None => {
            eprintln!("error: no command given (try `twr-noma --help`)");
            return ExitCode::from(1);
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VALIDATION),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
