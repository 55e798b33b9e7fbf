//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 on invalid arguments (the message names the
//! offending flag), 1 when a computation or write fails.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::formats::{
    fmt_f64, write_curve_csv, write_grid_csv, write_records_csv, Report, ReportFile,
};
use crate::scanner::{
    db_to_transmission, linspace, optimal_preparation_noise, rate_vs_loss_curve, scan_grid,
    threshold_transmission, transmission_to_db, zero_crossing_loss,
};
use crate::security::{key_rate, Direction, ProtocolParams};
use crate::simulation::{rate_from_records, simulate_run, ChannelMode, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "cvqkd", version, about = "CV-QKD key rates with noisy state preparation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Key rate at one parameter point.
    Rate {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        loss: LossArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Minimal transmission with a positive key rate.
    Threshold {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Preparation noise that minimizes the threshold transmission.
    OptimalKappa {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
        kappa_min: f64,
        #[arg(long, default_value_t = 30.0, value_parser = non_negative)]
        kappa_max: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Key rate over a preparation-noise x transmission grid.
    Scan {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
        kappa_min: f64,
        #[arg(long, default_value_t = 30.0, value_parser = non_negative)]
        kappa_max: f64,
        #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(1..))]
        kappa_steps: u32,
        #[arg(long, default_value_t = 0.01, value_parser = transmission)]
        t_min: f64,
        #[arg(long, default_value_t = 1.0, value_parser = transmission)]
        t_max: f64,
        #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(1..))]
        t_steps: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Key rate versus channel loss in dB.
    Curve {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
        loss_min: f64,
        #[arg(long, default_value_t = 3.0, value_parser = non_negative)]
        loss_max: f64,
        #[arg(long, default_value_t = 61, value_parser = clap::value_parser!(u32).range(1..))]
        loss_steps: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte-Carlo prepare-and-measure run with parameter estimation.
    Simulate {
        #[command(flatten)]
        channel: ChannelArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        loss: LossArgs,
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(100..))]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ChannelModeArg::ExplicitBeamsplitter)]
        channel_mode: ChannelModeArg,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
pub struct ChannelArgs {
    /// Modulation variance V_S (SNU).
    #[arg(long = "vs", default_value_t = 32.0, value_parser = non_negative)]
    pub vs: f64,
    /// Eve's EPR variance W (SNU).
    #[arg(long = "w", default_value_t = 1.11, value_parser = at_least_one)]
    pub w: f64,
    /// Reconciliation efficiency.
    #[arg(long, default_value_t = 0.95, value_parser = efficiency)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = DirectionArg::Direct)]
    pub direction: DirectionArg,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct NoiseArgs {
    /// Preparation noise κ above shot noise (SNU).
    #[arg(long, value_parser = non_negative)]
    pub kappa: Option<f64>,
    /// Total source noise 1 + κ (SNU).
    #[arg(long, value_parser = at_least_one)]
    pub v0: Option<f64>,
}

impl NoiseArgs {
    fn kappa(&self) -> f64 {
        match (self.kappa, self.v0) {
            (Some(k), _) => k,
            (None, Some(v0)) => v0 - 1.0,
            (None, None) => 0.0,
        }
    }
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct LossArgs {
    /// Channel transmittance in (0, 1].
    #[arg(long = "t", value_parser = transmission)]
    pub t: Option<f64>,
    /// Channel loss in dB.
    #[arg(long, value_parser = non_negative)]
    pub loss_db: Option<f64>,
}

impl LossArgs {
    fn transmission(&self) -> f64 {
        match (self.t, self.loss_db) {
            (Some(t), _) => t,
            (None, Some(db)) => db_to_transmission(db),
            (None, None) => unreachable!("clap enforces one of --t/--loss-db"),
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write results to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// File format; inferred from the --out extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
}

impl OutputArgs {
    fn resolved_format(&self) -> OutputFormat {
        self.format.unwrap_or_else(|| match &self.out {
            Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) => OutputFormat::Json,
            _ => OutputFormat::Csv,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    #[value(alias = "dr")]
    Direct,
    #[value(alias = "rr")]
    Reverse,
}

impl From<DirectionArg> for Direction {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Direct => Direction::Direct,
            DirectionArg::Reverse => Direction::Reverse,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelModeArg {
    ScaledModulation,
    ExplicitBeamsplitter,
}

impl From<ChannelModeArg> for ChannelMode {
    fn from(m: ChannelModeArg) -> Self {
        match m {
            ChannelModeArg::ScaledModulation => ChannelMode::ScaledModulation,
            ChannelModeArg::ExplicitBeamsplitter => ChannelMode::ExplicitBeamsplitter,
        }
    }
}

fn parse_finite(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !v.is_finite() {
        return Err("must be finite".into());
    }
    Ok(v)
}

fn non_negative(s: &str) -> std::result::Result<f64, String> {
    let v = parse_finite(s)?;
    if v < 0.0 {
        return Err("must be >= 0".into());
    }
    Ok(v)
}

fn at_least_one(s: &str) -> std::result::Result<f64, String> {
    let v = parse_finite(s)?;
    if v < 1.0 {
        return Err("must be >= 1 (vacuum level)".into());
    }
    Ok(v)
}

fn transmission(s: &str) -> std::result::Result<f64, String> {
    let v = parse_finite(s)?;
    if !(v > 0.0 && v <= 1.0) {
        return Err("must lie in (0, 1]".into());
    }
    Ok(v)
}

fn efficiency(s: &str) -> std::result::Result<f64, String> {
    let v = parse_finite(s)?;
    if !(v > 0.0 && v <= 1.0) {
        return Err("must lie in (0, 1]".into());
    }
    Ok(v)
}

/// A cross-flag constraint violated after parsing.
#[derive(Debug)]
pub struct UsageError {
    pub flag: &'static str,
    pub message: String,
}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid value for '--{}': {}", self.flag, self.message)
    }
}

/// Parses and validates arguments without running anything.
pub fn parse_args<I, T>(args: I) -> std::result::Result<Cli, ParseFailure>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(ParseFailure::Clap)?;
    check_ranges(&cli.command).map_err(ParseFailure::Usage)?;
    Ok(cli)
}

#[derive(Debug)]
pub enum ParseFailure {
    Clap(clap::Error),
    Usage(UsageError),
}

fn check_ranges(cmd: &Command) -> std::result::Result<(), UsageError> {
    let ordered = |flag, lo: f64, hi: f64| {
        if lo > hi {
            Err(UsageError {
                flag,
                message: format!("{hi} is below the lower bound {lo}"),
            })
        } else {
            Ok(())
        }
    };
    match cmd {
        Command::OptimalKappa {
            kappa_min,
            kappa_max,
            ..
        } => ordered("kappa-max", *kappa_min, *kappa_max),
        Command::Scan {
            kappa_min,
            kappa_max,
            kappa_steps,
            t_min,
            t_max,
            t_steps,
            ..
        } => {
            ordered("kappa-max", *kappa_min, *kappa_max)?;
            ordered("t-max", *t_min, *t_max)?;
            if *kappa_steps > 1 && kappa_min == kappa_max {
                return Err(UsageError {
                    flag: "kappa-steps",
                    message: "more than one step needs kappa-max > kappa-min".into(),
                });
            }
            if *t_steps > 1 && t_min == t_max {
                return Err(UsageError {
                    flag: "t-steps",
                    message: "more than one step needs t-max > t-min".into(),
                });
            }
            Ok(())
        }
        Command::Curve {
            loss_min,
            loss_max,
            loss_steps,
            ..
        } => {
            ordered("loss-max", *loss_min, *loss_max)?;
            if *loss_steps > 1 && loss_min == loss_max {
                return Err(UsageError {
                    flag: "loss-steps",
                    message: "more than one step needs loss-max > loss-min".into(),
                });
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

fn params(channel: &ChannelArgs, kappa: f64, t: f64) -> ProtocolParams {
    ProtocolParams {
        modulation_variance: channel.vs,
        preparation_noise: kappa,
        transmission: t,
        eve_variance: channel.w,
        reconciliation_efficiency: channel.beta,
        direction: channel.direction.into(),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse_args(args) {
        Ok(cli) => cli,
        Err(ParseFailure::Clap(e)) => {
            let text = e.render().to_string();
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
        Err(ParseFailure::Usage(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            return 2;
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

fn emit_file(path: &Path, write: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    let mut w = BufWriter::new(file);
    write(&mut w)?;
    w.flush()?;
    Ok(())
}

fn emit(
    output: &OutputArgs,
    stdout: &mut dyn Write,
    report: impl FnOnce() -> Report,
    csv: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    let Some(path) = &output.out else {
        return Ok(());
    };
    match output.resolved_format() {
        OutputFormat::Json => {
            let json = ReportFile::new(report()).to_json()?;
            emit_file(path, |w| Ok(w.write_all(json.as_bytes())?))?;
        }
        OutputFormat::Csv => emit_file(path, csv)?,
    }
    writeln!(stdout, "wrote {}", path.display())?;
    Ok(())
}

fn execute(cmd: &Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Rate {
            channel,
            noise,
            loss,
            output,
        } => {
            let p = params(channel, noise.kappa(), loss.transmission());
            let b = key_rate(&p)?;
            writeln!(out, "direction      {}", p.direction)?;
            writeln!(out, "transmission   {}", fmt_f64(p.transmission))?;
            writeln!(out, "I(A:B)         {}", fmt_f64(b.mutual_info))?;
            writeln!(out, "chi(E:X)       {}", fmt_f64(b.holevo))?;
            writeln!(out, "key rate       {}", fmt_f64(b.key_rate))?;
            emit(
                output,
                out,
                || Report::Rate { params: p, breakdown: b },
                |w| {
                    let mut c = csv::Writer::from_writer(w);
                    c.write_record([
                        "mutual_info",
                        "holevo",
                        "key_rate",
                        "nu_e_plus",
                        "nu_e_minus",
                        "nu_cond_plus",
                        "nu_cond_minus",
                    ])
                    .map_err(|e| Error::Parse(e.to_string()))?;
                    c.write_record(
                        [
                            b.mutual_info,
                            b.holevo,
                            b.key_rate,
                            b.eve_spectrum.0,
                            b.eve_spectrum.1,
                            b.conditional_spectrum.0,
                            b.conditional_spectrum.1,
                        ]
                        .map(fmt_f64),
                    )
                    .map_err(|e| Error::Parse(e.to_string()))?;
                    c.flush()?;
                    Ok(())
                },
            )
        }
        Command::Threshold {
            channel,
            noise,
            output,
        } => {
            let p = params(channel, noise.kappa(), 1.0);
            let r = threshold_transmission(&p)?;
            writeln!(out, "t_min          {}", fmt_f64(r.t_min))?;
            writeln!(out, "loss (dB)      {}", fmt_f64(r.loss_db))?;
            writeln!(out, "converged      {}", r.converged)?;
            writeln!(out, "iterations     {}", r.iterations)?;
            emit(
                output,
                out,
                || Report::Threshold { params: p, threshold: r },
                |w| {
                    writeln!(w, "t_min,loss_db,converged,iterations")?;
                    writeln!(w, "{},{},{},{}", fmt_f64(r.t_min), fmt_f64(r.loss_db), r.converged, r.iterations)?;
                    Ok(())
                },
            )
        }
        Command::OptimalKappa {
            channel,
            kappa_min,
            kappa_max,
            output,
        } => {
            let p = params(channel, 0.0, 1.0);
            let range = (*kappa_min, *kappa_max);
            let opt = optimal_preparation_noise(&p, range)?;
            writeln!(out, "kappa*         {}", fmt_f64(opt.kappa))?;
            writeln!(out, "1 + kappa*     {}", fmt_f64(1.0 + opt.kappa))?;
            writeln!(out, "t_min          {}", fmt_f64(opt.threshold.t_min))?;
            writeln!(out, "loss (dB)      {}", fmt_f64(opt.threshold.loss_db))?;
            emit(
                output,
                out,
                || Report::OptimalKappa {
                    params: p.with_preparation_noise(opt.kappa),
                    kappa_range: range,
                    optimum: opt,
                },
                |w| {
                    writeln!(w, "kappa,t_min,loss_db")?;
                    writeln!(
                        w,
                        "{},{},{}",
                        fmt_f64(opt.kappa),
                        fmt_f64(opt.threshold.t_min),
                        fmt_f64(opt.threshold.loss_db)
                    )?;
                    Ok(())
                },
            )
        }
        Command::Scan {
            channel,
            kappa_min,
            kappa_max,
            kappa_steps,
            t_min,
            t_max,
            t_steps,
            output,
        } => {
            let base = params(channel, 0.0, 1.0);
            let kappas = linspace(*kappa_min, *kappa_max, *kappa_steps as usize);
            let ts = linspace(*t_min, *t_max, *t_steps as usize);
            let grid = scan_grid(&base, &kappas, &ts)?;
            let positive = grid.rates.iter().flatten().filter(|&&r| r > 0.0).count();
            writeln!(
                out,
                "{} x {} grid, {} secure cells, direction {}",
                kappas.len(),
                ts.len(),
                positive,
                base.direction
            )?;
            emit(output, out, || Report::Scan(grid.clone()), |w| write_grid_csv(w, &grid))
        }
        Command::Curve {
            channel,
            noise,
            loss_min,
            loss_max,
            loss_steps,
            output,
        } => {
            let p = params(channel, noise.kappa(), 1.0);
            let axis = linspace(*loss_min, *loss_max, *loss_steps as usize);
            let points = rate_vs_loss_curve(&p, &axis)?;
            match zero_crossing_loss(&points) {
                Some(db) => writeln!(out, "zero crossing  {} dB", fmt_f64(db))?,
                None => writeln!(out, "zero crossing  none on the axis")?,
            }
            emit(
                output,
                out,
                || Report::Curve {
                    params: p,
                    points: points.clone(),
                },
                |w| write_curve_csv(w, &points),
            )
        }
        Command::Simulate {
            channel,
            noise,
            loss,
            samples,
            seed,
            channel_mode,
            output,
        } => {
            let p = params(channel, noise.kappa(), loss.transmission());
            let n = usize::try_from(*samples).map_err(|_| Error::domain("samples", *samples as f64, "too large"))?;
            let cfg = RunConfig::new(p, n, *seed).with_channel_mode((*channel_mode).into());
            let records = simulate_run(&cfg)?;
            let calibration = simulate_run(&cfg.calibration())?;
            let sim = rate_from_records(&p, &records, &calibration)?;
            let e = sim.estimate;
            writeln!(out, "samples        {}", e.n_used)?;
            writeln!(out, "T_hat          {} ({} dB)", fmt_f64(e.t_hat), fmt_f64(transmission_to_db(e.t_hat.min(1.0))))?;
            match e.w_hat {
                Some(w) => writeln!(out, "W_hat          {}", fmt_f64(w))?,
                None => writeln!(out, "W_hat          undefined at unity transmission")?,
            }
            writeln!(out, "I_hat          {}", fmt_f64(e.i_hat))?;
            writeln!(out, "chi(E:X)       {}", fmt_f64(sim.breakdown.holevo))?;
            writeln!(out, "key rate       {}", fmt_f64(sim.breakdown.key_rate))?;
            emit(
                output,
                out,
                || Report::Simulation {
                    config: cfg,
                    estimate: e,
                    breakdown: sim.breakdown,
                },
                |w| write_records_csv(w, &records),
            )
        }
    }
}
