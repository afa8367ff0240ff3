//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for usage or spec errors, 3 when `capacity --verify`
//! fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use rlcn_core::capacity::{
    blahut_arimoto, capacity_closed_form, CapacityError, LogBase, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
use rlcn_core::channel::{build_dmc, ChannelError, ChannelSpec};
use rlcn_core::gf::prime_power;
use rlcn_core::grassmann::{
    count_ordered_bases, gaussian_coefficient, GrassmannError, DEFAULT_ENUMERATION_CAP,
};
use rlcn_core::mc::{empirical_capacity_pipeline, run_mc, McError};

use crate::formats::{self, Verification};
use crate::spec_file::{load_spec, parse_rank_def_list, ChannelSpecFile, LoadedSpec, SpecError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

pub const DEFAULT_SEED: u64 = 20_100_607;
pub const CAP_ENV: &str = "RLCN_ENUMERATION_CAP";

#[derive(Debug, Parser)]
#[command(
    name = "rlcn",
    version,
    about = "Subspace channel model of random linear network coding"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form capacity, optionally checked with Blahut-Arimoto
    Capacity(CapacityArgs),
    /// Export the transition matrix
    Matrix(MatrixArgs),
    /// Monte Carlo check of the transition law
    Simulate(SimulateArgs),
    /// Exact subspace and basis counts
    #[command(subcommand)]
    Count(CountCommand),
}

/// Channel given either as a spec file or inline.
#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// ChannelSpec JSON file
    #[arg(long, value_name = "PATH", conflicts_with_all = ["q", "packet_len", "h", "rank_def"])]
    pub spec: Option<PathBuf>,
    /// Field size (a prime power up to 256)
    #[arg(long)]
    pub q: Option<u32>,
    /// Packet length
    #[arg(long = "T", id = "packet_len", value_name = "T")]
    pub packet_len: Option<usize>,
    /// Number of packets per generation
    #[arg(long)]
    pub h: Option<usize>,
    /// Rank deficiency distribution p(0),...,p(h), indexed by deficiency r = h - rank(G),
    /// not by rank. Example: 0.5,0.3,0.2
    #[arg(long, value_name = "P0,...,PH", allow_hyphen_values = true)]
    pub rank_def: Option<String>,
    /// Largest alphabet the enumeration may build
    #[arg(long, env = CAP_ENV, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write to this file instead of stdout
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CapacityFormat {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DataFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CountFormat {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value = "text")]
    pub format: CapacityFormat,
    /// Logarithm base: 2, e, q, or any number greater than 1
    #[arg(long, default_value = "2")]
    pub log_base: String,
    /// Also run Blahut-Arimoto on the full transition matrix
    #[arg(long)]
    pub verify: bool,
    /// Verification tolerance
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: DataFormat,
    /// Print every row sum to stderr
    #[arg(long)]
    pub audit: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[arg(long, value_enum, default_value = "json")]
    pub format: DataFormat,
    /// Draws per input, or total draws with --pipeline
    #[arg(long, default_value_t = 10_000)]
    pub draws: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Estimate the deficiency distribution from simulated outputs and compare capacities
    #[arg(long)]
    pub pipeline: bool,
    /// Logarithm base for --pipeline capacities
    #[arg(long, default_value = "2")]
    pub log_base: String,
}

#[derive(Debug, Subcommand)]
pub enum CountCommand {
    /// Number of l-dimensional subspaces of GF(q)^n
    Gauss {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        l: u32,
        #[arg(long)]
        q: u32,
        #[arg(long, value_enum, default_value = "text")]
        format: CountFormat,
    },
    /// Number of ordered bases of GF(q)^h
    Bases {
        #[arg(long)]
        h: u32,
        #[arg(long)]
        q: u32,
        #[arg(long, value_enum, default_value = "text")]
        format: CountFormat,
    },
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        Failure::usage(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

struct Io<'a> {
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

impl Io<'_> {
    fn emit(&mut self, out: &OutputArgs, bytes: &[u8]) -> Result<(), Failure> {
        match &out.out {
            Some(path) => std::fs::write(path, bytes)
                .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
            None => self
                .stdout
                .write_all(bytes)
                .map_err(|e| Failure::usage(format!("cannot write to stdout: {e}"))),
        }
    }

    fn note(&mut self, msg: &str) {
        let _ = writeln!(self.stderr, "{msg}");
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let mut io = Io { stdout, stderr };
    let result = match cli.command {
        Command::Capacity(a) => cmd_capacity(&a, &mut io),
        Command::Matrix(a) => cmd_matrix(&a, &mut io),
        Command::Simulate(a) => cmd_simulate(&a, &mut io),
        Command::Count(c) => cmd_count(&c, &mut io),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            io.note(&format!("error: {}", f.message));
            f.code
        }
    }
}

fn resolve_source(src: &SourceArgs) -> Result<LoadedSpec, Failure> {
    if let Some(path) = &src.spec {
        return Ok(load_spec(path)?);
    }
    let missing: Vec<&str> = [
        ("--q", src.q.is_none()),
        ("--T", src.packet_len.is_none()),
        ("--h", src.h.is_none()),
        ("--rank-def", src.rank_def.is_none()),
    ]
    .into_iter()
    .filter_map(|(name, absent)| absent.then_some(name))
    .collect();
    if missing.len() == 4 {
        return Err(Failure::usage(
            "no channel given: pass --spec <PATH> or all of --q, --T, --h, --rank-def",
        ));
    }
    if !missing.is_empty() {
        return Err(Failure::usage(format!(
            "incomplete inline channel: missing {}",
            missing.join(", ")
        )));
    }
    let file = ChannelSpecFile {
        q: src.q.expect("checked"),
        packet_len: src.packet_len.expect("checked"),
        h: src.h.expect("checked"),
        rank_def: parse_rank_def_list(src.rank_def.as_deref().expect("checked"))?,
    };
    Ok(file.resolve()?)
}

fn parse_log_base(s: &str, q: u32) -> Result<LogBase, Failure> {
    let bad = |e: CapacityError| Failure::usage(format!("invalid --log-base {s:?}: {e}"));
    match s.trim() {
        "2" => Ok(LogBase::BITS),
        "e" => Ok(LogBase::NATS),
        "q" => LogBase::new(q as f64).map_err(bad),
        other => match other.parse::<f64>() {
            Ok(b) => LogBase::new(b).map_err(bad),
            Err(_) => Err(Failure::usage(format!(
                "invalid --log-base {s:?}: expected 2, e, q, or a number"
            ))),
        },
    }
}

/// Output alphabet size `Σ_l [T, l]_q`.
fn output_alphabet_size(spec: &ChannelSpec) -> BigUint {
    (0..=spec.h())
        .map(|l| gaussian_coefficient(spec.packet_len() as u32, l as u32, spec.q()))
        .sum()
}

fn input_alphabet_size(spec: &ChannelSpec) -> BigUint {
    gaussian_coefficient(spec.packet_len() as u32, spec.h() as u32, spec.q())
}

fn channel_failure(spec: &ChannelSpec, e: ChannelError) -> Failure {
    match e {
        ChannelError::Grassmann(GrassmannError::EnumerationTooLarge { cap, .. }) => {
            Failure::usage(format!(
                "enumeration too large: {} inputs x {} outputs exceeds the cap of {cap} (set {CAP_ENV} or --cap to raise it)",
                input_alphabet_size(spec),
                output_alphabet_size(spec),
            ))
        }
        other => Failure::usage(other.to_string()),
    }
}

fn report_warnings(io: &mut Io<'_>, warnings: &[String]) {
    for w in warnings {
        io.note(&format!("warning: {w}"));
    }
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| Failure::usage(format!("csv error: {e}")))?;
    Ok(buf)
}

fn cmd_capacity(a: &CapacityArgs, io: &mut Io<'_>) -> CmdResult {
    let loaded = resolve_source(&a.source)?;
    let spec = &loaded.spec;
    let base = parse_log_base(&a.log_base, spec.q())?;
    let report = capacity_closed_form(spec, base);

    let mut verification = None;
    let mut code = EXIT_OK;
    if a.verify {
        if a.tol.is_nan() || a.tol <= 0.0 {
            return Err(Failure::usage(format!(
                "--tol must be positive, got {}",
                a.tol
            )));
        }
        let dmc = build_dmc(spec, a.source.cap).map_err(|e| channel_failure(spec, e))?;
        match blahut_arimoto(dmc.trans(), a.tol, a.max_iters, base) {
            Ok(ba) => {
                let v = Verification::new(report.closed_form, &ba, a.tol);
                if !v.passed {
                    code = EXIT_VERIFY;
                }
                verification = Some(v);
            }
            Err(CapacityError::NonConvergence {
                best_estimate,
                gap,
                iterations,
                ..
            }) => {
                io.note(&format!(
                    "verification failed: Blahut-Arimoto did not reach gap {:e} within {iterations} iterations (estimate {best_estimate}, gap {gap:e})",
                    a.tol
                ));
                verification = Some(Verification {
                    blahut_arimoto: best_estimate,
                    gap_bound: gap,
                    iterations,
                    abs_difference: (report.closed_form - best_estimate).abs(),
                    tol: a.tol,
                    passed: false,
                });
                code = EXIT_VERIFY;
            }
            Err(e) => return Err(Failure::usage(e.to_string())),
        }
    }

    let bytes = match a.format {
        CapacityFormat::Text => {
            formats::capacity_text(&report, verification.as_ref(), &loaded.warnings).into_bytes()
        }
        CapacityFormat::Json => {
            report_warnings(io, &loaded.warnings);
            formats::capacity_json(
                ChannelSpecFile::from_spec(spec),
                &report,
                verification.as_ref(),
                &loaded.warnings,
            )
            .into_bytes()
        }
        CapacityFormat::Csv => {
            report_warnings(io, &loaded.warnings);
            csv_bytes(|buf| formats::capacity_csv(&report, buf))?
        }
    };
    io.emit(&a.output, &bytes)?;
    Ok(code)
}

fn cmd_matrix(a: &MatrixArgs, io: &mut Io<'_>) -> CmdResult {
    let loaded = resolve_source(&a.source)?;
    let spec = &loaded.spec;
    report_warnings(io, &loaded.warnings);
    let dmc = build_dmc(spec, a.source.cap).map_err(|e| channel_failure(spec, e))?;
    io.note(&format!(
        "inputs: {}, outputs: {}",
        dmc.num_inputs(),
        dmc.num_outputs()
    ));
    if a.audit {
        for (i, sum) in dmc.trans().row_sums().iter().enumerate() {
            let label = dmc.input_at(i).expect("input").label();
            io.note(&format!("row {i} ({label}): {sum:?}"));
        }
    }
    let bytes = match a.format {
        DataFormat::Csv => csv_bytes(|buf| formats::dmc_csv(&dmc, buf))?,
        DataFormat::Json => formats::dmc_json(&dmc).into_bytes(),
    };
    io.emit(&a.output, &bytes)?;
    Ok(EXIT_OK)
}

fn mc_failure(spec: &ChannelSpec, e: McError) -> Failure {
    match e {
        McError::InsufficientData => Failure::usage("--draws must be at least 1"),
        McError::Channel(c) => channel_failure(spec, c),
    }
}

fn cmd_simulate(a: &SimulateArgs, io: &mut Io<'_>) -> CmdResult {
    let loaded = resolve_source(&a.source)?;
    let spec = &loaded.spec;
    report_warnings(io, &loaded.warnings);
    if a.draws == 0 {
        return Err(Failure::usage("--draws must be at least 1"));
    }
    let bytes = if a.pipeline {
        let base = parse_log_base(&a.log_base, spec.q())?;
        let r = empirical_capacity_pipeline(spec, a.draws, a.seed, a.source.cap, base)
            .map_err(|e| mc_failure(spec, e))?;
        match a.format {
            DataFormat::Json => {
                formats::pipeline_json(ChannelSpecFile::from_spec(spec), &r).into_bytes()
            }
            DataFormat::Csv => csv_bytes(|buf| formats::pipeline_csv(&r, buf))?,
        }
    } else {
        let r = run_mc(spec, a.draws, a.seed, a.source.cap).map_err(|e| mc_failure(spec, e))?;
        io.note(&format!(
            "max |deviation| {:e}, worst |z| {}, off-support hits {}",
            r.max_abs_deviation, r.worst_z_score, r.off_support_hits
        ));
        match a.format {
            DataFormat::Json => formats::mc_json(&r).into_bytes(),
            DataFormat::Csv => csv_bytes(|buf| formats::mc_csv(&r, buf))?,
        }
    };
    io.emit(&a.output, &bytes)?;
    Ok(EXIT_OK)
}

fn check_prime_power(q: u32) -> Result<(), Failure> {
    prime_power(q)
        .map(|_| ())
        .ok_or_else(|| Failure::usage(format!("--q {q} is not a prime power")))
}

fn cmd_count(c: &CountCommand, io: &mut Io<'_>) -> CmdResult {
    let (quantity, params, value, format) = match *c {
        CountCommand::Gauss { n, l, q, format } => {
            check_prime_power(q)?;
            (
                "gaussian_coefficient",
                serde_json::json!({ "n": n, "l": l, "q": q }),
                gaussian_coefficient(n, l, q),
                format,
            )
        }
        CountCommand::Bases { h, q, format } => {
            check_prime_power(q)?;
            (
                "ordered_bases",
                serde_json::json!({ "h": h, "q": q }),
                count_ordered_bases(h, q),
                format,
            )
        }
    };
    let text = match format {
        CountFormat::Text => format!("{value}\n"),
        CountFormat::Json => formats::count_json(quantity, params, &value),
    };
    io.stdout
        .write_all(text.as_bytes())
        .map_err(|e| Failure::usage(format!("cannot write to stdout: {e}")))?;
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("rlcn").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn log_bases() {
        assert_eq!(parse_log_base("2", 3).unwrap(), LogBase::BITS);
        assert_eq!(parse_log_base("e", 3).unwrap(), LogBase::NATS);
        assert_eq!(parse_log_base("q", 3).unwrap().value(), 3.0);
        assert_eq!(parse_log_base("10", 3).unwrap().value(), 10.0);
        assert!(parse_log_base("1", 3).is_err());
        assert!(parse_log_base("x", 3).is_err());
    }

    #[test]
    fn default_text_output_has_six_decimals() {
        let (code, out, _) = run_str(&[
            "capacity",
            "--q",
            "2",
            "--T",
            "3",
            "--h",
            "2",
            "--rank-def",
            "1,0,0",
        ]);
        assert_eq!(code, 0);
        assert!(
            out.starts_with("capacity: 2.807355 bits per channel use\n"),
            "{out}"
        );
    }

    #[test]
    fn sources_must_be_complete_and_unambiguous() {
        let (code, _, err) = run_str(&["capacity"]);
        assert_eq!(code, 2);
        assert!(err.contains("no channel given"), "{err}");

        let (code, _, err) = run_str(&["capacity", "--q", "2", "--T", "3"]);
        assert_eq!(code, 2);
        assert!(err.contains("missing --h, --rank-def"), "{err}");

        let (code, _, _) = run_str(&["capacity", "--spec", "x.json", "--q", "2"]);
        assert_eq!(code, 2);
    }

    #[test]
    fn cap_message_names_sizes() {
        let (code, _, err) = run_str(&[
            "matrix",
            "--q",
            "2",
            "--T",
            "3",
            "--h",
            "2",
            "--rank-def",
            "1,0,0",
            "--cap",
            "6",
        ]);
        assert_eq!(code, 2);
        assert!(err.contains("7 inputs x 15 outputs"), "{err}");
    }

    #[test]
    fn count_rejects_non_prime_powers() {
        let (code, _, err) = run_str(&["count", "gauss", "--n", "3", "--l", "1", "--q", "6"]);
        assert_eq!(code, 2);
        assert!(err.contains("not a prime power"), "{err}");
        let (code, out, _) = run_str(&["count", "bases", "--h", "3", "--q", "2"]);
        assert_eq!((code, out.as_str()), (0, "168\n"));
    }

    #[test]
    fn help_goes_to_stdout() {
        let (code, out, _) = run_str(&["capacity", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("indexed by deficiency"));
    }
}
