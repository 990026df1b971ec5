//! Input stimulus, per-transition energy, power meters and frequency sweeps.

use serde::Serialize;
use thiserror::Error;

use crate::adders::{build, AdderKind, AdderSpec, SupplyRegime};
use crate::energy::{Direction, EnergyReport, SupplyWaveform, TransitionEvent};
use crate::netlist::{Netlist, NodeId};
use crate::resistnet::{effective_resistance, from_on_switches_merged};
use crate::switch_eval::{
    evaluate, input_bindings, settle_cycle, vector_for, EvalConfig, EvalError, InputBinding,
    LogicValue, NodeStates,
};

pub const DEFAULT_RAMP_FRACTION: f64 = 0.25;
pub const DEFAULT_METER_R: f64 = 100e3;
pub const DEFAULT_METER_C: f64 = 100e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("invalid stimulus: {0}")]
    InvalidPlan(String),
    #[error("frequency must be positive and finite, got {0}")]
    InvalidFrequency(f64),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
    #[error("invalid meter: {0}")]
    InvalidMeter(String),
    #[error("invalid harness config: {0}")]
    InvalidConfig(String),
    #[error("no circuits given")]
    EmptyKinds,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Simulation settings shared by every cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarnessConfig {
    pub eval: EvalConfig,
    /// Ramp time as a fraction of the clock period.
    pub ramp_fraction: f64,
    pub i_sc: f64,
    pub i_leak: f64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            eval: EvalConfig::default(),
            ramp_fraction: DEFAULT_RAMP_FRACTION,
            i_sc: 0.0,
            i_leak: 0.0,
        }
    }
}

impl HarnessConfig {
    fn check(&self) -> Result<(), HarnessError> {
        self.eval.check()?;
        let ok = self.ramp_fraction > 0.0
            && self.ramp_fraction <= 0.5
            && self.i_sc >= 0.0
            && self.i_leak >= 0.0
            && self.i_sc.is_finite()
            && self.i_leak.is_finite();
        if ok {
            Ok(())
        } else {
            Err(HarnessError::InvalidConfig(format!(
                "ramp fraction {} must be in (0, 0.5], static currents non-negative",
                self.ramp_fraction
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StimulusPlan {
    /// Primary input bits per vector, applied cyclically.
    pub input_sequence: Vec<Vec<bool>>,
    pub cycles_per_vector: usize,
    pub f_clk: f64,
}

impl StimulusPlan {
    /// Every ordered pair of `width`-bit vectors exactly once as a
    /// consecutive transition, wrapping from the last vector to the first.
    pub fn all_transitions(width: usize, f_clk: f64) -> Self {
        StimulusPlan {
            input_sequence: de_bruijn_walk(width),
            cycles_per_vector: 1,
            f_clk,
        }
    }

    pub fn validate(&self, width: usize) -> Result<(), HarnessError> {
        if self.input_sequence.is_empty() {
            return Err(HarnessError::InvalidPlan("empty input sequence".into()));
        }
        if let Some(v) = self.input_sequence.iter().find(|v| v.len() != width) {
            return Err(HarnessError::InvalidPlan(format!(
                "vector has {} bits, circuit has {width} inputs",
                v.len()
            )));
        }
        if self.cycles_per_vector == 0 {
            return Err(HarnessError::InvalidPlan("cycles_per_vector must be at least 1".into()));
        }
        check_frequency(self.f_clk)
    }

    pub fn total_cycles(&self) -> usize {
        self.input_sequence.len() * self.cycles_per_vector
    }

    pub fn with_frequency(&self, f_clk: f64) -> Self {
        StimulusPlan {
            f_clk,
            ..self.clone()
        }
    }
}

fn check_frequency(f: f64) -> Result<(), HarnessError> {
    if f > 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::InvalidFrequency(f))
    }
}

/// Eulerian circuit of the complete directed graph with self-loops on the
/// `2^width` vectors: consecutive entries (cyclically) cover every ordered
/// pair once.
fn de_bruijn_walk(width: usize) -> Vec<Vec<bool>> {
    let n = 1usize << width;
    let mut next_edge = vec![0usize; n];
    let mut stack = vec![0usize];
    let mut circuit = Vec::with_capacity(n * n + 1);
    while let Some(&u) = stack.last() {
        if next_edge[u] < n {
            let v = next_edge[u];
            next_edge[u] += 1;
            stack.push(v);
        } else {
            circuit.push(stack.pop().unwrap());
        }
    }
    circuit.reverse();
    circuit.pop(); // the closing return to the start vertex
    circuit
        .into_iter()
        .map(|v| (0..width).map(|i| v >> (width - 1 - i) & 1 == 1).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MeterMode {
    ExactIntegration,
    RcMeter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerMeterConfig {
    pub mode: MeterMode,
    pub meter_r: f64,
    pub meter_c: f64,
}

impl Default for PowerMeterConfig {
    fn default() -> Self {
        PowerMeterConfig {
            mode: MeterMode::ExactIntegration,
            meter_r: DEFAULT_METER_R,
            meter_c: DEFAULT_METER_C,
        }
    }
}

impl PowerMeterConfig {
    pub fn rc() -> Self {
        PowerMeterConfig {
            mode: MeterMode::RcMeter,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let pos = |x: f64| x > 0.0 && x.is_finite();
        if self.mode == MeterMode::RcMeter && !(pos(self.meter_r) && pos(self.meter_c)) {
            return Err(HarnessError::InvalidMeter("meter R and C must be positive".into()));
        }
        Ok(())
    }

    /// Upper bound on the relative deviation of the RC reading from the
    /// exact average: the clock period over the meter time constant.
    pub fn ripple_bound(&self, f_clk: f64) -> f64 {
        1.0 / (f_clk * self.meter_r * self.meter_c)
    }
}

/// A node transition with everything except the clock frequency resolved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventTemplate {
    pub node: NodeId,
    pub c: f64,
    pub delta_v: f64,
    pub r_path: f64,
    pub direction: Direction,
}

/// Frequency-independent description of one clock cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleTrace {
    pub events: Vec<EventTemplate>,
}

impl CycleTrace {
    pub fn report(&self, regime: SupplyRegime, f: f64, cfg: &HarnessConfig) -> EnergyReport {
        let vdd = cfg.eval.vdd;
        let period = 1.0 / f;
        let supply = match regime {
            SupplyRegime::Dc => SupplyWaveform::DcStep { vdd },
            SupplyRegime::PowerClock => SupplyWaveform::Ramp {
                vdd,
                ramp_time: cfg.ramp_fraction * period,
                period,
            },
        };
        let mut r = EnergyReport::default();
        for e in &self.events {
            r.add_event(TransitionEvent {
                node: e.node,
                c: e.c,
                delta_v: e.delta_v,
                r_path: e.r_path,
                supply,
                direction: e.direction,
                v_mismatch: 0.0,
            });
        }
        if regime == SupplyRegime::Dc {
            r.add_static(cfg.i_sc, cfg.i_leak, vdd, period);
        }
        r
    }
}

fn primary_width(bindings: &[InputBinding]) -> usize {
    bindings.iter().filter(|b| !b.inverted).count()
}

/// Node states across one input change. For a DC circuit these are the
/// settled states before and after. For a power-clocked circuit they are
/// the Hold state under `from`, then Recover, and Wait, Evaluate and Hold
/// under `to`.
fn snapshots(
    spec: &AdderSpec,
    bindings: &[InputBinding],
    from: &[bool],
    to: &[bool],
    cfg: &EvalConfig,
) -> Result<Vec<NodeStates>, EvalError> {
    let (x_from, x_to) = (vector_for(bindings, from), vector_for(bindings, to));
    let n = &spec.netlist;
    match spec.supply_regime {
        SupplyRegime::Dc => {
            let before = evaluate(n, &x_from, cfg, None)?;
            let after = evaluate(n, &x_to, cfg, Some(&before))?;
            Ok(vec![before, after])
        }
        SupplyRegime::PowerClock => {
            let a = settle_cycle(n, &x_from, cfg, None)?;
            let b = settle_cycle(n, &x_to, cfg, Some(&a.recover))?;
            Ok(vec![a.hold, a.recover, b.wait, b.evaluate, b.hold])
        }
    }
}

/// Driven nodes (rails, clock, inputs) whose value in `states` is `value`.
fn sources_of(n: &Netlist, states: &NodeStates, value: LogicValue) -> (Vec<NodeId>, Vec<NodeId>) {
    let mut src = Vec::new();
    let mut blocked = Vec::new();
    for id in n.node_ids() {
        if n.node(id).role.is_driven() {
            if states[id].value == value {
                src.push(id);
            } else {
                blocked.push(id);
            }
        }
    }
    (src, blocked)
}

/// Events for nodes whose level differs between the first and last
/// snapshot. The path resistance is taken in the snapshot where the node
/// last changed, towards the driven nodes at its value there.
fn trace_between(n: &Netlist, snaps: &[NodeStates]) -> CycleTrace {
    let (first, last) = (&snaps[0], &snaps[snaps.len() - 1]);
    let mut events = Vec::new();
    for id in n.node_ids() {
        let node = n.node(id);
        if node.role.is_driven() || node.capacitance == 0.0 {
            continue;
        }
        let dv = last[id].level - first[id].level;
        if dv == 0.0 {
            continue;
        }
        let at = (1..snaps.len())
            .rev()
            .find(|&j| snaps[j][id].level != snaps[j - 1][id].level)
            .map_or(last, |j| &snaps[j]);
        let r_path = match at[id].value {
            v @ (LogicValue::Zero | LogicValue::One) => {
                let (src, blocked) = sources_of(n, at, v);
                if src.is_empty() {
                    f64::INFINITY
                } else {
                    let g = from_on_switches_merged(n, at, &src, &blocked, id);
                    effective_resistance(&g).unwrap_or(f64::INFINITY)
                }
            }
            _ => f64::INFINITY,
        };
        events.push(EventTemplate {
            node: id,
            c: node.capacitance,
            delta_v: dv,
            r_path,
            direction: if dv > 0.0 { Direction::Charge } else { Direction::Discharge },
        });
    }
    CycleTrace { events }
}

/// Node transitions of one cycle that switches the inputs from `from` to
/// `to`.
pub fn cycle_trace(
    spec: &AdderSpec,
    from: &[bool],
    to: &[bool],
    cfg: &EvalConfig,
) -> Result<CycleTrace, HarnessError> {
    let bindings = input_bindings(&spec.netlist);
    let width = primary_width(&bindings);
    if from.len() != width || to.len() != width {
        return Err(HarnessError::InvalidPlan(format!("circuit has {width} primary inputs")));
    }
    let snaps = snapshots(spec, &bindings, from, to, cfg)?;
    Ok(trace_between(&spec.netlist, &snaps))
}

pub fn run_cycle(
    spec: &AdderSpec,
    from: &[bool],
    to: &[bool],
    f: f64,
    cfg: &HarnessConfig,
) -> Result<EnergyReport, HarnessError> {
    check_frequency(f)?;
    cfg.check()?;
    Ok(cycle_trace(spec, from, to, &cfg.eval)?.report(spec.supply_regime, f, cfg))
}

/// Cycle traces for a whole stimulus, one per simulated clock cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanTrace {
    pub regime: SupplyRegime,
    pub cycles: Vec<CycleTrace>,
}

impl PlanTrace {
    pub fn cycle_reports(&self, f: f64, cfg: &HarnessConfig) -> Vec<EnergyReport> {
        self.cycles.iter().map(|c| c.report(self.regime, f, cfg)).collect()
    }

    pub fn energy_per_cycle(&self, f: f64, cfg: &HarnessConfig) -> f64 {
        let total: f64 = self.cycle_reports(f, cfg).iter().map(|r| r.total).sum();
        total / self.cycles.len() as f64
    }
}

/// Resolves every transition of `plan`. The frequency of the plan is not
/// used, so one trace serves a whole sweep.
pub fn trace_plan(
    spec: &AdderSpec,
    plan: &StimulusPlan,
    cfg: &HarnessConfig,
) -> Result<PlanTrace, HarnessError> {
    cfg.check()?;
    let bindings = input_bindings(&spec.netlist);
    plan.validate(primary_width(&bindings))?;
    let seq = &plan.input_sequence;
    let mut cycles = Vec::with_capacity(plan.total_cycles());
    for (i, to) in seq.iter().enumerate() {
        let from = &seq[(i + seq.len() - 1) % seq.len()];
        cycles.push(cycle_trace(spec, from, to, &cfg.eval)?);
        for _ in 1..plan.cycles_per_vector {
            cycles.push(CycleTrace { events: Vec::new() });
        }
    }
    Ok(PlanTrace {
        regime: spec.supply_regime,
        cycles,
    })
}

/// Steady-state RC meter reading. Each cycle's supply charge `E / vdd` is
/// mirrored into a parallel R-C; the reading is the mean of the capacitor
/// voltage sampled at the end of every cycle, converted back to power.
pub fn rc_meter_power(energies: &[f64], f: f64, vdd: f64, meter: &PowerMeterConfig) -> f64 {
    let m = energies.len();
    let decay = (-1.0 / (f * meter.meter_r * meter.meter_c)).exp();
    let kick: Vec<f64> = energies.iter().map(|e| e / vdd / meter.meter_c).collect();
    // Periodic steady state: solve for the voltage at the end of the last
    // cycle, then step through one period.
    let mut s = 0.0;
    let mut w = 1.0;
    for k in (0..m).rev() {
        w *= decay;
        s += kick[k] * w;
    }
    let mut v = s / (1.0 - decay.powi(m as i32));
    let mut sum = 0.0;
    for k in kick {
        v = (v + k) * decay;
        sum += v;
    }
    vdd * (sum / m as f64) / meter.meter_r
}

pub fn average_power_from_trace(
    trace: &PlanTrace,
    f: f64,
    meter: &PowerMeterConfig,
    cfg: &HarnessConfig,
) -> Result<f64, HarnessError> {
    check_frequency(f)?;
    meter.validate()?;
    let energies: Vec<f64> = trace.cycle_reports(f, cfg).iter().map(|r| r.total).collect();
    Ok(match meter.mode {
        MeterMode::ExactIntegration => energies.iter().sum::<f64>() * f / energies.len() as f64,
        MeterMode::RcMeter => rc_meter_power(&energies, f, cfg.eval.vdd, meter),
    })
}

pub fn average_power(
    spec: &AdderSpec,
    plan: &StimulusPlan,
    meter: &PowerMeterConfig,
    cfg: &HarnessConfig,
) -> Result<f64, HarnessError> {
    let trace = trace_plan(spec, plan, cfg)?;
    average_power_from_trace(&trace, plan.f_clk, meter, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub f_hz: f64,
    pub avg_power_w: f64,
    pub energy_per_cycle_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub circuit: String,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Least-squares slope of log P against log f.
    pub fn log_log_slope(&self) -> f64 {
        let xy: Vec<(f64, f64)> = self
            .points
            .iter()
            .map(|p| (p.f_hz.ln(), p.avg_power_w.ln()))
            .collect();
        let n = xy.len() as f64;
        let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
        let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = xy.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xy.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
        sxy / sxx
    }
}

pub fn log_frequencies(f_min: f64, f_max: f64, points: usize) -> Result<Vec<f64>, HarnessError> {
    if !(f_min > 0.0 && f_min < f_max && f_max.is_finite()) {
        return Err(HarnessError::InvalidSweep(format!(
            "need 0 < f_min < f_max, got {f_min} and {f_max}"
        )));
    }
    if points < 2 {
        return Err(HarnessError::InvalidSweep("need at least 2 points".into()));
    }
    let ratio = (f_max / f_min).ln();
    Ok((0..points)
        .map(|i| {
            if i == points - 1 {
                f_max
            } else {
                f_min * (ratio * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect())
}

/// Average power at log-spaced frequencies. The ramp time follows the
/// period at every point.
pub fn frequency_sweep(
    spec: &AdderSpec,
    f_min: f64,
    f_max: f64,
    points: usize,
    plan: &StimulusPlan,
    cfg: &HarnessConfig,
) -> Result<SweepResult, HarnessError> {
    let freqs = log_frequencies(f_min, f_max, points)?;
    let trace = trace_plan(spec, plan, cfg)?;
    let meter = PowerMeterConfig::default();
    let points = freqs
        .into_iter()
        .map(|f| {
            Ok(SweepPoint {
                f_hz: f,
                avg_power_w: average_power_from_trace(&trace, f, &meter, cfg)?,
                energy_per_cycle_j: trace.energy_per_cycle(f, cfg),
            })
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    Ok(SweepResult {
        circuit: spec.label(),
        points,
    })
}

/// Nine significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn sweep_csv(results: &[SweepResult]) -> String {
    let mut s = String::from("circuit,f_hz,avg_power_w,energy_per_cycle_j\n");
    for r in results {
        for p in &r.points {
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.circuit,
                format_float(p.f_hz),
                format_float(p.avg_power_w),
                format_float(p.energy_per_cycle_j)
            ));
        }
    }
    s
}

/// Operating point for a comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableConfig {
    pub harness: HarnessConfig,
    pub f_clk: f64,
    /// Overrides the output load of every circuit when set.
    pub c_load: Option<f64>,
    pub meter: PowerMeterConfig,
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig {
            harness: HarnessConfig::default(),
            f_clk: 50e6,
            c_load: None,
            meter: PowerMeterConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub circuit: String,
    pub devices: usize,
    /// Device count of the optional variant, where one exists.
    pub variant_devices: Option<usize>,
    pub avg_power_w: f64,
}

/// One row per circuit, all under the same stimulus and operating point.
pub fn comparison_rows(specs: &[AdderSpec], cfg: &TableConfig) -> Result<Vec<TableRow>, HarnessError> {
    if specs.is_empty() {
        return Err(HarnessError::EmptyKinds);
    }
    specs
        .iter()
        .map(|spec| {
            let mut spec = spec.clone();
            if let Some(c) = cfg.c_load {
                spec.netlist = spec.netlist.with_output_load(c);
            }
            let width = primary_width(&input_bindings(&spec.netlist));
            let plan = StimulusPlan::all_transitions(width, cfg.f_clk);
            Ok(TableRow {
                circuit: spec.label(),
                devices: spec.netlist.devices().len(),
                variant_devices: (spec.kind == Some(AdderKind::Cpl) && !spec.cpl_optional_pmos)
                    .then_some(spec.netlist.devices().len() + 2),
                avg_power_w: average_power(&spec, &plan, &cfg.meter, &cfg.harness)?,
            })
        })
        .collect()
}

pub fn comparison_table(kinds: &[AdderKind], cfg: &TableConfig) -> Result<Vec<TableRow>, HarnessError> {
    let specs: Vec<AdderSpec> = kinds.iter().map(|&k| build(k)).collect();
    comparison_rows(&specs, cfg)
}

pub fn table_csv(rows: &[TableRow]) -> String {
    let mut s = String::from("circuit,devices,avg_power_w\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.circuit, r.devices, format_float(r.avg_power_w)));
    }
    s
}
