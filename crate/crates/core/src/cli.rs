//! The `hwm-opt` command line.
//!
//! Rates and fractions accept a `%` suffix (`2%` is `0.02`); the library only
//! ever sees decimals. Exit codes: 0 success, 1 numerical gate failure, 2
//! usage or validation error.

use std::ffi::OsString;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::Error;
use crate::inversion::{self_test_with_tolerance, InversionConfig, SELF_TEST_TOLERANCE};
use crate::model::{FundParameters, HwmMode};
use crate::montecarlo::{simulate_price, McConfig, McPayoff};
use crate::pricing::{merton_reference, price_call, price_forward, price_put};
use crate::tables::{compute_table, TableReport};
use crate::transforms::kernel_cross_check;

pub const SEED_ENV: &str = "HWM_OPT_SEED";
pub const SELFTEST_TOL_ENV: &str = "HWM_OPT_SELFTEST_TOL";

#[derive(Debug, Parser)]
#[command(name = "hwm-opt", version, about = "Options on hedge-fund NAVs with a high-water-mark incentive fee")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price one option, or every entry of a JSON config file.
    Price(PriceArgs),
    /// Recompute a published price table.
    Tables(TablesArgs),
    /// Run the numerical self-checks.
    Selftest(SelftestArgs),
    /// Price by Monte Carlo simulation.
    Mc(McArgs),
}

/// Contract and market inputs. Every flag can also come from `--config`, a
/// JSON object (or array of objects) keyed by the flag names; flags win.
#[derive(Debug, Clone, Default, Args)]
pub struct FundArgs {
    #[arg(long)]
    pub spot: Option<String>,
    #[arg(long)]
    pub hwm: Option<String>,
    #[arg(long)]
    pub strike: Option<String>,
    /// Years from inception.
    #[arg(long)]
    pub maturity: Option<String>,
    /// Years from inception to the valuation date (default 0).
    #[arg(long)]
    pub valuation_time: Option<String>,
    #[arg(long)]
    pub rate: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    /// Management fee.
    #[arg(long)]
    pub mgmt: Option<String>,
    /// Incentive fraction.
    #[arg(long)]
    pub incentive: Option<String>,
    #[arg(long)]
    pub mu: Option<String>,
    #[arg(long)]
    pub vol: Option<String>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Fixed,
    AccruingAtRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptionKind {
    Call,
    Put,
    Forward,
}

#[derive(Debug, Args)]
pub struct PriceArgs {
    #[command(flatten)]
    pub fund: FundArgs,
    #[arg(long = "option", value_enum)]
    pub option: Option<OptionKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    pub table: u8,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Append Monte Carlo price, standard error and |Δ|/SE columns.
    #[arg(long)]
    pub mc_check: bool,
    #[command(flatten)]
    pub mc: McFlags,
}

#[derive(Debug, Clone, Args)]
pub struct McFlags {
    #[arg(long, default_value_t = 100_000)]
    pub paths: u64,
    #[arg(long, default_value_t = 2000)]
    pub steps_per_year: u32,
    #[arg(long, default_value_t = McConfig::default().seed)]
    pub seed: u64,
    #[arg(long)]
    pub no_antithetic: bool,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub fund: FundArgs,
    #[arg(long = "option", value_enum)]
    pub option: Option<OptionKind>,
    #[command(flatten)]
    pub mc: McFlags,
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Gate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Gate(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Gate(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numeric { .. } => CliError::Gate(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Parses a decimal or a percentage such as `2%`.
pub fn parse_rate(text: &str) -> Result<f64, String> {
    let t = text.trim();
    let (num, scale) = match t.strip_suffix('%') {
        Some(rest) => (rest.trim(), 0.01),
        None => (t, 1.0),
    };
    num.parse::<f64>().map(|v| v * scale).map_err(|_| format!("not a number or percentage: {text:?}"))
}

fn parse_plain(text: &str) -> Result<f64, String> {
    text.trim().parse::<f64>().map_err(|_| format!("not a number: {text:?}"))
}

/// A config-file value: a JSON number or a string such as `"2%"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Number(f64),
    Text(String),
}

impl Scalar {
    fn text(&self) -> String {
        match self {
            Scalar::Number(v) => v.to_string(),
            Scalar::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileEntry {
    spot: Option<Scalar>,
    hwm: Option<Scalar>,
    strike: Option<Scalar>,
    maturity: Option<Scalar>,
    valuation_time: Option<Scalar>,
    rate: Option<Scalar>,
    alpha: Option<Scalar>,
    mgmt: Option<Scalar>,
    incentive: Option<Scalar>,
    mu: Option<Scalar>,
    vol: Option<Scalar>,
    mode: Option<ModeArg>,
    option: Option<OptionKind>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FileContent {
    One(FileEntry),
    Many(Vec<FileEntry>),
}

fn read_entries(path: &PathBuf) -> Result<Vec<FileEntry>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let content: FileContent =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))?;
    Ok(match content {
        FileContent::One(e) => vec![e],
        FileContent::Many(v) => v,
    })
}

/// Merges flags over one config entry into parameters.
fn resolve(flags: &FundArgs, entry: &FileEntry) -> Result<FundParameters, CliError> {
    let pick = |flag: &Option<String>, file: &Option<Scalar>, name: &str, rate: bool, default: Option<f64>| {
        let text = flag.clone().or_else(|| file.as_ref().map(Scalar::text));
        match text {
            Some(t) => {
                let parsed = if rate { parse_rate(&t) } else { parse_plain(&t) };
                parsed.map_err(|m| CliError::Usage(format!("--{name}: {m}")))
            }
            None => default.ok_or_else(|| CliError::Usage(format!("missing required flag --{name}"))),
        }
    };
    let mode = flags.mode.or(entry.mode).unwrap_or(ModeArg::Fixed);
    let p = FundParameters {
        spot: pick(&flags.spot, &entry.spot, "spot", false, None)?,
        hwm: pick(&flags.hwm, &entry.hwm, "hwm", false, None)?,
        strike: pick(&flags.strike, &entry.strike, "strike", false, None)?,
        maturity: pick(&flags.maturity, &entry.maturity, "maturity", false, None)?,
        valuation_time: pick(&flags.valuation_time, &entry.valuation_time, "valuation-time", false, Some(0.0))?,
        rate: pick(&flags.rate, &entry.rate, "rate", true, None)?,
        alpha: pick(&flags.alpha, &entry.alpha, "alpha", true, None)?,
        mgmt_fee: pick(&flags.mgmt, &entry.mgmt, "mgmt", true, None)?,
        incentive: pick(&flags.incentive, &entry.incentive, "incentive", true, None)?,
        mu: pick(&flags.mu, &entry.mu, "mu", true, None)?,
        vol: pick(&flags.vol, &entry.vol, "vol", true, None)?,
        mode: match mode {
            ModeArg::Fixed => HwmMode::Fixed,
            ModeArg::AccruingAtRate => HwmMode::AccruingAtRate,
        },
    };
    p.check()?;
    Ok(p)
}

fn requests(fund: &FundArgs, option: Option<OptionKind>) -> Result<Vec<(FundParameters, OptionKind)>, CliError> {
    let entries = match &fund.config {
        Some(path) => read_entries(path)?,
        None => vec![FileEntry::default()],
    };
    entries
        .iter()
        .map(|e| Ok((resolve(fund, e)?, option.or(e.option).unwrap_or(OptionKind::Call))))
        .collect()
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let rendered = e.render().to_string();
            let _ = if code == 0 { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Price(a) => cmd_price(&a, out),
        Command::Tables(a) => cmd_tables(&a, out),
        Command::Selftest(a) => cmd_selftest(&a, out),
        Command::Mc(a) => cmd_mc(&a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn io(e: std::io::Error) -> CliError {
    CliError::Gate(format!("write failed: {e}"))
}

pub fn cmd_price(args: &PriceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = InversionConfig::default();
    for (p, kind) in requests(&args.fund, args.option)? {
        let quote = match kind {
            OptionKind::Call => price_call(&p, &config)?,
            OptionKind::Put => price_put(&p, &config)?,
            OptionKind::Forward => price_forward(&p, &config)?,
        };
        let record = json!({
            "price": quote.value,
            "method": quote.method,
            "error_estimate": quote.error_estimate,
            "option": kind,
            "params_echo": p,
            "diagnostics": quote.diagnostics,
        });
        writeln!(out, "{record}").map_err(io)?;
    }
    Ok(())
}

fn mc_config(flags: &McFlags) -> Result<McConfig, CliError> {
    let seed = match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse::<u64>().map_err(|_| CliError::Usage(format!("{SEED_ENV} must be an unsigned integer, got {v:?}")))?,
        Err(_) => flags.seed,
    };
    let c = McConfig { paths: flags.paths, steps_per_year: flags.steps_per_year, seed, antithetic: !flags.no_antithetic };
    c.check()?;
    Ok(c)
}

pub fn cmd_tables(args: &TablesArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mc = if args.mc_check { Some(mc_config(&args.mc)?) } else { None };
    let report = compute_table(args.table, &InversionConfig::default(), mc.as_ref())?;
    match args.format {
        Format::Json => {
            let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Gate(e.to_string()))?;
            writeln!(out, "{text}").map_err(io)
        }
        Format::Csv => write_table_csv(&report, out),
    }
}

fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_owned(),
        _ => s,
    }
}

/// CSV with four decimals for prices, so reruns are byte-identical.
pub fn write_table_csv(report: &TableReport, out: &mut dyn Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let merton = report.rows.iter().any(|r| r.merton.is_some());
    let mc = report.rows.iter().any(|r| r.mc.is_some());
    let mut header = vec!["table", "block", "interpretation", "hwm", "strike", "maturity", "price", "error_estimate", "printed", "diff"];
    if merton {
        header.push("merton");
    }
    if mc {
        header.extend(["mc_price", "mc_std_error", "mc_z"]);
    }
    let csv_err = |e: csv::Error| CliError::Gate(format!("csv: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    for r in &report.rows {
        let mut rec = vec![
            report.table.to_string(),
            r.block.clone(),
            r.interpretation.clone().unwrap_or_default(),
            format!("{}", r.hwm),
            format!("{}", r.strike),
            format!("{}", r.maturity),
            fixed(r.price, 4),
            format!("{:.1e}", r.error_estimate),
            fixed(r.printed, 4),
            fixed(r.diff, 4),
        ];
        if merton {
            rec.push(r.merton.map(|m| fixed(m, 4)).unwrap_or_default());
        }
        if let Some(m) = r.mc {
            rec.extend([fixed(m.price, 4), fixed(m.std_error, 4), fixed(m.z, 2)]);
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(io)
}

#[derive(Debug, Clone, Serialize)]
pub struct Gate {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

/// Runs the self-check gates. The known-pair tolerance can be overridden
/// through `HWM_OPT_SELFTEST_TOL`.
pub fn selftest_gates() -> Result<Vec<Gate>, CliError> {
    let tol = match std::env::var(SELFTEST_TOL_ENV) {
        Ok(v) => parse_plain(&v).map_err(|m| CliError::Usage(format!("{SELFTEST_TOL_ENV}: {m}")))?,
        Err(_) => SELF_TEST_TOLERANCE,
    };
    let config = InversionConfig::default();
    let gate = |name: &str, value: f64, limit: f64| Gate { name: name.to_owned(), value, limit, passed: value <= limit };
    let mut gates = Vec::new();

    let pairs = self_test_with_tolerance(&config, tol)?;
    gates.push(gate("inversion known pairs, max abs error", pairs.max_abs_error, tol));

    let reference = FundParameters {
        spot: 100.0,
        hwm: 100.0,
        strike: 100.0,
        maturity: 1.0,
        valuation_time: 0.0,
        rate: 0.02,
        alpha: 0.10,
        mgmt_fee: 0.02,
        incentive: 0.20,
        mu: 0.15,
        vol: 0.20,
        mode: HwmMode::Fixed,
    };
    let mut kernel = 0.0f64;
    for strike in [90.0, 100.0, 110.0] {
        kernel = kernel.max(kernel_cross_check(&FundParameters { strike, ..reference.clone() }, &[0.5, 1.0, 5.0])?);
    }
    gates.push(gate("transform vs kernel quadrature, max rel gap", kernel, 1e-8));

    let strict = InversionConfig { series_terms: 80, euler_terms: 16, ..config };
    let mut parity = 0.0f64;
    for hwm in [85.0, 100.0, 115.0] {
        let p = FundParameters { hwm, ..reference.clone() };
        let a = price_put(&p, &config)?;
        let b = price_put(&p, &strict)?;
        let budget = 2.0 * (a.error_estimate + b.error_estimate).max(1e-12);
        parity = parity.max((a.value - b.value).abs() / budget);
    }
    gates.push(gate("parity put, config spread over 2x error budget", parity, 1.0));

    let mut merton = 0.0f64;
    for (k, t) in [(90.0, 0.5), (100.0, 0.5), (110.0, 0.5), (90.0, 1.0), (100.0, 1.0), (110.0, 1.0)] {
        let p = FundParameters { strike: k, maturity: t, alpha: 0.0, incentive: 0.0, mgmt_fee: 0.003, ..reference.clone() };
        let v = price_call(&p, &config)?.value;
        merton = merton.max((v - merton_reference(100.0, k, t, 0.02, 0.003, 0.2)).abs());
    }
    gates.push(gate("fee-free price vs closed form, max abs gap", merton, 1e-4));
    Ok(gates)
}

pub fn cmd_selftest(args: &SelftestArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let gates = selftest_gates()?;
    match args.format {
        Format::Json => writeln!(out, "{}", json!({ "gates": gates })).map_err(io)?,
        Format::Csv => {
            for g in &gates {
                let verdict = if g.passed { "PASS" } else { "FAIL" };
                writeln!(out, "{verdict}  {:<50} {:.3e}  (limit {:.1e})", g.name, g.value, g.limit).map_err(io)?;
            }
        }
    }
    let failed: Vec<&str> = gates.iter().filter(|g| !g.passed).map(|g| g.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Gate(format!("failed gates: {}", failed.join(", "))))
    }
}

pub fn cmd_mc(args: &McArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = mc_config(&args.mc)?;
    for (p, kind) in requests(&args.fund, args.option)? {
        let payoff = match kind {
            OptionKind::Call => McPayoff::Call,
            OptionKind::Put => McPayoff::Put,
            OptionKind::Forward => McPayoff::Forward,
        };
        let stats = simulate_price(&p, payoff, &config)?;
        let record = json!({
            "price": stats.price_mean,
            "method": crate::model::Method::MonteCarlo,
            "std_error": stats.std_error,
            "paths": stats.paths,
            "occupation_above_fraction": stats.occupation_above_fraction,
            "barrier_hit_fraction": stats.barrier_hit_fraction,
            "option": kind,
            "seed": config.seed,
            "params_echo": p,
        });
        writeln!(out, "{record}").map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentages() {
        assert_eq!(parse_rate("2%").unwrap(), 0.02);
        assert_eq!(parse_rate(" 0.15 ").unwrap(), 0.15);
        assert_eq!(parse_rate("20 %").unwrap(), 0.2);
        assert!(parse_rate("x%").is_err());
        assert!(parse_plain("100%").is_err());
    }

    #[test]
    fn fixed_point_has_no_negative_zero() {
        assert_eq!(fixed(-0.00001, 4), "0.0000");
        assert_eq!(fixed(-0.5, 4), "-0.5000");
        assert_eq!(fixed(12.34567, 4), "12.3457");
    }

    #[test]
    fn flags_override_file_entries() {
        let flags = FundArgs { vol: Some("40%".into()), ..Default::default() };
        let entry: FileEntry = serde_json::from_str(
            r#"{"spot":100,"hwm":100,"strike":90,"maturity":0.5,"rate":"2%","alpha":0.1,"mgmt":"2%","incentive":"20%","mu":"15%","vol":"20%"}"#,
        )
        .unwrap();
        let p = resolve(&flags, &entry).unwrap();
        assert_eq!(p.vol, 0.4);
        assert_eq!(p.rate, 0.02);
        assert_eq!(p.valuation_time, 0.0);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(serde_json::from_str::<FileEntry>(r#"{"volatility": 0.2}"#).is_err());
    }
}
