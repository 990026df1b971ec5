//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification failure or lint findings, 2 usage,
//! parse or I/O error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::adders::{build_with, verify_function, AdderKind, AdderSpec, VerifyError};
use crate::energy::{cc_dissipation, cc_voltage, ramp_dissipation, stepwise_dissipation};
use crate::harness::{
    comparison_rows, format_float, frequency_sweep, sweep_csv, table_csv, HarnessConfig,
    MeterMode, PowerMeterConfig, StimulusPlan, TableConfig,
};
use crate::netlist::{parse_netlist, serialize_netlist, validate, Netlist};
use crate::switch_eval::{EvalConfig, StartMode};

pub const CIRCUITS_DIR_ENV: &str = "ADIASIM_CIRCUITS_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "adiasim", version, about = "Switch-level full-adder simulator with energy accounting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a circuit against the full-adder truth table.
    Verify(VerifyArgs),
    /// Average power of one or more circuits.
    Power(PowerArgs),
    /// Average power over a log-spaced frequency range, as CSV.
    Sweep(SweepArgs),
    /// Evaluate one energy formula.
    Energy {
        #[command(subcommand)]
        formula: Formula,
    },
    /// Report structural problems in a netlist file.
    Lint { netlist: PathBuf },
    /// Print a circuit in netlist text form.
    Export {
        circuit: String,
        #[arg(long)]
        cpl_optional_pmos: bool,
    },
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Built-in name or path to a netlist file.
    pub circuit: String,
    /// Chain rows from the previous row's state instead of starting cold.
    #[arg(long)]
    pub warm: bool,
    #[arg(long)]
    pub cpl_optional_pmos: bool,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeterArg {
    Exact,
    Rc,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    /// All seven built-in circuits.
    #[arg(long)]
    pub all: bool,
    #[arg(long = "circuit")]
    pub circuits: Vec<String>,
    #[arg(long, default_value_t = 1.8)]
    pub vdd: f64,
    /// Output load in farads; defaults to each netlist's own loads.
    #[arg(long)]
    pub cload: Option<f64>,
    #[arg(long, default_value_t = 50e6)]
    pub freq: f64,
    #[arg(long, default_value_t = 0.0)]
    pub isc: f64,
    #[arg(long, default_value_t = 0.0)]
    pub ileak: f64,
    #[arg(long, value_enum, default_value_t = MeterArg::Exact)]
    pub meter: MeterArg,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long = "circuit")]
    pub circuits: Vec<String>,
    #[arg(long, default_value_t = 1e6)]
    pub fmin: f64,
    #[arg(long, default_value_t = 100e6)]
    pub fmax: f64,
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, default_value_t = 1.8)]
    pub vdd: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Formula {
    /// Capacitor voltage under constant current: I*t/C.
    Eq2 {
        #[arg(long = "is")]
        i_s: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        t: f64,
    },
    /// Constant-current resistor loss: R*I^2*T.
    Eq4 {
        #[arg(long)]
        r: f64,
        #[arg(long = "is")]
        i_s: f64,
        #[arg(long)]
        t: f64,
    },
    /// Ramp charging loss: (RC/T)*C*V^2.
    Eq5 {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        v: f64,
    },
    /// Stepwise charging loss: C*V^2/(2n).
    Eq6 {
        #[arg(long)]
        c: f64,
        #[arg(long)]
        v: f64,
        #[arg(long)]
        n: u32,
    },
}

struct Usage(String);

type CmdResult = Result<i32, Usage>;

fn usage<T>(msg: impl Into<String>) -> Result<T, Usage> {
    Err(Usage(msg.into()))
}

/// Runs the CLI with `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Power(a) => cmd_power(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Energy { formula } => cmd_energy(&formula, out),
        Command::Lint { netlist } => cmd_lint(&netlist, out),
        Command::Export { circuit, cpl_optional_pmos } => cmd_export(&circuit, cpl_optional_pmos, out),
    };
    match result {
        Ok(code) => code,
        Err(Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
    }
}

fn read_netlist(path: &Path) -> Result<Netlist, Usage> {
    let text = std::fs::read_to_string(path)
        .or_else(|e| usage(format!("{}: {e}", path.display())))?;
    parse_netlist(&text).or_else(|e| usage(format!("{}:{e}", path.display())))
}

/// A built-in name, or a path to a netlist file. Built-ins are read from
/// the fixture directory when the override variable is set.
fn resolve(circuit: &str, cpl_optional_pmos: bool) -> Result<AdderSpec, Usage> {
    if let Ok(kind) = circuit.parse::<AdderKind>() {
        let mut spec = build_with(kind, cpl_optional_pmos);
        if let Some(dir) = std::env::var_os(CIRCUITS_DIR_ENV) {
            if !cpl_optional_pmos {
                spec.netlist = read_netlist(&Path::new(&dir).join(format!("{}.net", kind.name())))?;
                spec.expected_devices = spec.netlist.devices().len();
            }
        }
        return Ok(spec);
    }
    let path = Path::new(circuit);
    if !path.exists() {
        return usage(format!("unknown circuit `{circuit}`"));
    }
    Ok(AdderSpec::custom(read_netlist(path)?))
}

fn bit(b: bool) -> char {
    if b {
        '1'
    } else {
        '0'
    }
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> CmdResult {
    let spec = resolve(&a.circuit, a.cpl_optional_pmos)?;
    let mode = if a.warm { StartMode::Warm } else { StartMode::Cold };
    let report = match verify_function(&spec, &EvalConfig::default(), mode) {
        Ok(r) => r,
        Err(VerifyError::MissingPin(m)) => return usage(m),
        Err(VerifyError::Eval(e)) => {
            let _ = writeln!(out, "{}: {e}", spec.label());
            return Ok(EXIT_FAIL);
        }
    };
    let mut text = String::new();
    if a.csv {
        text.push_str("A,B,C,Sum,Carry,expected_sum,expected_carry,result\n");
    } else {
        text.push_str(&format!("{} ({} devices)\n", report.circuit, spec.netlist.devices().len()));
        text.push_str("A B C | Sum Carry | expect | result\n");
    }
    for r in &report.rows {
        let [x, y, z] = r.inputs.map(bit);
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        let (es, ec) = (bit(r.expected.0), bit(r.expected.1));
        if a.csv {
            text.push_str(&format!(
                "{x},{y},{z},{},{},{es},{ec},{verdict}\n",
                r.sum.symbol(),
                r.carry.symbol()
            ));
        } else {
            text.push_str(&format!(
                "{x} {y} {z} | {:<3} {:<5} | {es} {ec}    | {verdict}\n",
                r.sum.symbol(),
                r.carry.symbol()
            ));
        }
    }
    let _ = write!(out, "{text}");
    Ok(if report.all_pass() { EXIT_OK } else { EXIT_FAIL })
}

fn check_positive(name: &str, x: f64) -> Result<(), Usage> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        usage(format!("--{name} must be positive, got {x}"))
    }
}

fn check_non_negative(name: &str, x: f64) -> Result<(), Usage> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        usage(format!("--{name} must be non-negative, got {x}"))
    }
}

fn cmd_power(a: &PowerArgs, out: &mut dyn Write) -> CmdResult {
    check_positive("vdd", a.vdd)?;
    check_positive("freq", a.freq)?;
    check_non_negative("isc", a.isc)?;
    check_non_negative("ileak", a.ileak)?;
    if let Some(c) = a.cload {
        check_non_negative("cload", c)?;
    }
    let mut names: Vec<String> = a.circuits.clone();
    if a.all {
        names.extend(AdderKind::ALL.iter().map(|k| k.name().to_string()));
    }
    if names.is_empty() {
        return usage("give --all or at least one --circuit");
    }
    let specs = names
        .iter()
        .map(|n| resolve(n, false))
        .collect::<Result<Vec<_>, _>>()?;
    let harness = HarnessConfig {
        eval: EvalConfig { vdd: a.vdd, ..Default::default() },
        i_sc: a.isc,
        i_leak: a.ileak,
        ..Default::default()
    };
    let meter = PowerMeterConfig {
        mode: match a.meter {
            MeterArg::Exact => MeterMode::ExactIntegration,
            MeterArg::Rc => MeterMode::RcMeter,
        },
        ..Default::default()
    };
    let cfg = TableConfig { harness, f_clk: a.freq, c_load: a.cload, meter };
    let rows = comparison_rows(&specs, &cfg).or_else(|e| usage(e.to_string()))?;
    if a.csv {
        let _ = write!(out, "{}", table_csv(&rows));
        return Ok(EXIT_OK);
    }
    let mut text = format!(
        "VDD = {} V, f = {} Hz, meter = {:?}\n{:<8} {:>8} {:>16}\n",
        a.vdd, a.freq, meter.mode, "circuit", "devices", "avg power (uW)"
    );
    let mut footnote = None;
    for r in &rows {
        let devices = match r.variant_devices {
            Some(v) => {
                footnote = Some(v);
                format!("{} ({v}a)", r.devices)
            }
            None => r.devices.to_string(),
        };
        text.push_str(&format!(
            "{:<8} {:>8} {:>16.6}\n",
            r.circuit,
            devices,
            r.avg_power_w * 1e6
        ));
    }
    if let Some(v) = footnote {
        text.push_str(&format!("a: {v} devices with the optional output pMOS pair\n"));
    }
    let _ = write!(out, "{text}");
    Ok(EXIT_OK)
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> CmdResult {
    check_positive("vdd", a.vdd)?;
    if a.circuits.is_empty() {
        return usage("give at least one --circuit");
    }
    let cfg = HarnessConfig {
        eval: EvalConfig { vdd: a.vdd, ..Default::default() },
        ..Default::default()
    };
    let specs = a
        .circuits
        .iter()
        .map(|n| resolve(n, false))
        .collect::<Result<Vec<_>, _>>()?;
    // Each circuit is independent; results are joined in argument order.
    let results = std::thread::scope(|s| {
        let handles: Vec<_> = specs
            .iter()
            .map(|spec| {
                s.spawn(move || {
                    let width = crate::switch_eval::input_bindings(&spec.netlist)
                        .iter()
                        .filter(|b| !b.inverted)
                        .count();
                    let plan = StimulusPlan::all_transitions(width, a.fmin);
                    frequency_sweep(spec, a.fmin, a.fmax, a.points, &plan, &cfg)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect::<Result<Vec<_>, _>>()
    })
    .or_else(|e| usage(e.to_string()))?;
    let csv = sweep_csv(&results);
    match &a.out {
        Some(path) => {
            std::fs::write(path, csv).or_else(|e| usage(format!("{}: {e}", path.display())))?;
        }
        None => {
            let _ = write!(out, "{csv}");
        }
    }
    Ok(EXIT_OK)
}

fn cmd_energy(f: &Formula, out: &mut dyn Write) -> CmdResult {
    let value = match *f {
        Formula::Eq2 { i_s, c, t } => {
            check_non_negative("is", i_s)?;
            check_positive("c", c)?;
            check_non_negative("t", t)?;
            cc_voltage(i_s, c, t).or_else(|e| usage(e.to_string()))?
        }
        Formula::Eq4 { r, i_s, t } => {
            check_non_negative("r", r)?;
            check_non_negative("is", i_s)?;
            check_non_negative("t", t)?;
            cc_dissipation(r, i_s, t)
        }
        Formula::Eq5 { r, c, t, v } => {
            check_positive("r", r)?;
            check_non_negative("c", c)?;
            check_positive("t", t)?;
            check_non_negative("v", v)?;
            ramp_dissipation(r, c, t, v)
        }
        Formula::Eq6 { c, v, n } => {
            check_non_negative("c", c)?;
            check_non_negative("v", v)?;
            if n == 0 {
                return usage("--n must be at least 1");
            }
            stepwise_dissipation(c, v, n)
        }
    };
    let _ = writeln!(out, "{}", format_float(value));
    Ok(EXIT_OK)
}

fn cmd_lint(path: &Path, out: &mut dyn Write) -> CmdResult {
    let n = read_netlist(path)?;
    let diags = validate(&n);
    for d in &diags {
        let _ = writeln!(out, "{}: {:?} `{}`: {}", path.display(), d.kind, d.element, d.message);
    }
    Ok(if diags.is_empty() { EXIT_OK } else { EXIT_FAIL })
}

fn cmd_export(circuit: &str, cpl_optional_pmos: bool, out: &mut dyn Write) -> CmdResult {
    let spec = resolve(circuit, cpl_optional_pmos)?;
    let _ = write!(out, "{}", serialize_netlist(&spec.netlist));
    Ok(EXIT_OK)
}
