//! Switch-level steady-state evaluation.
//!
//! Every MOS device is an ideal resistive switch controlled by its gate node.
//! Node values come from connectivity to driven nodes (rails, power clock,
//! primary inputs) through conducting switches. A logic 1 passed through an
//! nMOS, or a logic 0 passed through a pMOS, is degraded by one threshold.
//!
//! The fixed point is reached by asynchronous relaxation: at every step the
//! nodes whose drive would change are ranked by the effective resistance of
//! their driving network and only the fastest ones are updated. This resolves
//! cross-coupled latches the way the faster-charging side wins in silicon,
//! while feedback-free networks converge to their unique fixed point
//! regardless of update order.

mod truth;

use std::collections::BTreeMap;
use std::ops::Index;

use serde::Serialize;
use thiserror::Error;

use crate::netlist::{Device, DeviceKind, Netlist, NodeId, NodeRole};
use crate::resistnet::{effective_resistance, ConductanceNetwork};

pub(crate) use truth::vector_for;
pub use truth::{
    input_bindings, settle_cycle, truth_table, truth_table_with, CycleStates, InputBinding,
    StartMode, TruthRow, TruthTable, TruthTableError,
};

/// Gate nodes with an unknown value are split exactly up to this count;
/// beyond it the maybe-on switches are tried all-on and all-off only.
const MAX_EXACT_SPLIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LogicValue {
    Zero,
    One,
    /// X: conflicting or indeterminate.
    Unknown,
    /// Z: not driven.
    Floating,
}

impl LogicValue {
    pub fn from_bool(b: bool) -> Self {
        if b {
            LogicValue::One
        } else {
            LogicValue::Zero
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            LogicValue::Zero => Some(false),
            LogicValue::One => Some(true),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Strength {
    Strong,
    Degraded,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeState {
    pub value: LogicValue,
    pub strength: Strength,
    /// Nominal analog level in volts. For X and Z this is the last known level.
    pub level: f64,
}

impl NodeState {
    pub fn driven(value: bool, strength: Strength, cfg: &EvalConfig) -> Self {
        let level = match (value, strength) {
            (true, Strength::Strong) => cfg.vdd,
            (true, Strength::Degraded) => cfg.vdd - cfg.vtn,
            (false, Strength::Strong) => 0.0,
            (false, Strength::Degraded) => cfg.vtp.abs(),
        };
        NodeState {
            value: LogicValue::from_bool(value),
            strength,
            level,
        }
    }

    pub fn unknown(level: f64) -> Self {
        NodeState {
            value: LogicValue::Unknown,
            strength: Strength::Strong,
            level,
        }
    }

    pub fn floating(level: f64) -> Self {
        NodeState {
            value: LogicValue::Floating,
            strength: Strength::Strong,
            level,
        }
    }

    /// Short textual form used in tables: `0`, `1`, `X`, `Z`, with a `d`
    /// suffix for degraded levels.
    pub fn symbol(&self) -> String {
        let base = match self.value {
            LogicValue::Zero => "0",
            LogicValue::One => "1",
            LogicValue::Unknown => return "X".into(),
            LogicValue::Floating => return "Z".into(),
        };
        match self.strength {
            Strength::Strong => base.into(),
            Strength::Degraded => format!("{base}d"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ClockPhase {
    Evaluate,
    Hold,
    Recover,
    Wait,
}

impl ClockPhase {
    pub const SEQUENCE: [ClockPhase; 4] = [
        ClockPhase::Wait,
        ClockPhase::Evaluate,
        ClockPhase::Hold,
        ClockPhase::Recover,
    ];

    /// Logic value of the power clock at the end of this phase.
    pub fn clock_high(self) -> bool {
        matches!(self, ClockPhase::Evaluate | ClockPhase::Hold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalConfig {
    pub vdd: f64,
    pub vtn: f64,
    /// Negative for pMOS.
    pub vtp: f64,
    /// `None` means four times the node count.
    pub max_iterations: Option<usize>,
    pub clock_phase: ClockPhase,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            vdd: 1.8,
            vtn: 0.4,
            vtp: -0.4,
            max_iterations: None,
            clock_phase: ClockPhase::Evaluate,
        }
    }
}

impl EvalConfig {
    pub fn with_phase(mut self, phase: ClockPhase) -> Self {
        self.clock_phase = phase;
        self
    }

    pub fn check(&self) -> Result<(), EvalError> {
        let ok = self.vdd.is_finite()
            && self.vtn > 0.0
            && self.vtn < self.vdd
            && self.vtp < 0.0
            && self.vtp.abs() < self.vdd
            && self.max_iterations != Some(0);
        if ok {
            Ok(())
        } else {
            Err(EvalError::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// Node states indexed by [`NodeId`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeStates(Vec<NodeState>);

impl NodeStates {
    pub fn new(states: Vec<NodeState>) -> Self {
        NodeStates(states)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &NodeState)> {
        self.0.iter().enumerate().map(|(i, s)| (NodeId::from_index(i), s))
    }

    pub fn as_slice(&self) -> &[NodeState] {
        &self.0
    }
}

impl Index<NodeId> for NodeStates {
    type Output = NodeState;

    fn index(&self, id: NodeId) -> &NodeState {
        &self.0[id.index()]
    }
}

pub type InputVector = BTreeMap<NodeId, LogicValue>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no fixed point after {iterations} steps; oscillating nodes: {}", nodes.join(", "))]
    NonConvergence {
        iterations: usize,
        nodes: Vec<String>,
    },
    #[error("input `{0}` is missing or not driven to 0/1")]
    MissingInput(String),
    #[error("previous state covers {got} nodes, netlist has {want}")]
    PrevMismatch { got: usize, want: usize },
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SwitchState {
    On,
    Off,
    /// Gate is X or Z.
    Maybe,
}

/// Conduction of `d` given the state of its gate node. Degraded levels still
/// switch: a degraded 1 is above `vtn`, a degraded 0 below `vdd - |vtp|`.
pub fn switch_is_on(d: &Device, gate_state: &NodeState) -> SwitchState {
    match (d.kind, gate_state.value) {
        (_, LogicValue::Unknown | LogicValue::Floating) => SwitchState::Maybe,
        (DeviceKind::NMos, LogicValue::One) | (DeviceKind::PMos, LogicValue::Zero) => SwitchState::On,
        _ => SwitchState::Off,
    }
}

fn device_conducts(kind: DeviceKind, gate_high: bool) -> bool {
    match kind {
        DeviceKind::NMos => gate_high,
        DeviceKind::PMos => !gate_high,
    }
}

/// Values imposed on driven nodes by rails, power clock and inputs.
pub(crate) fn forced_states(
    n: &Netlist,
    inputs: &InputVector,
    cfg: &EvalConfig,
) -> Result<Vec<Option<NodeState>>, EvalError> {
    let mut fixed = vec![None; n.node_count()];
    for (id, node) in n.nodes().iter().enumerate() {
        let v = match node.role {
            NodeRole::SupplyRail => Some(true),
            NodeRole::GroundRail => Some(false),
            NodeRole::PowerClock => Some(cfg.clock_phase.clock_high()),
            NodeRole::Input => {
                let v = inputs
                    .get(&NodeId::from_index(id))
                    .and_then(|v| v.as_bool())
                    .ok_or_else(|| EvalError::MissingInput(node.name.clone()))?;
                Some(v)
            }
            _ => None,
        };
        fixed[id] = v.map(|b| NodeState::driven(b, Strength::Strong, cfg));
    }
    Ok(fixed)
}

pub(crate) struct Engine<'a> {
    n: &'a Netlist,
    cfg: &'a EvalConfig,
    fixed: Vec<Option<NodeState>>,
    prev: Option<&'a NodeStates>,
    /// Device indices incident on each node's channel terminals.
    channel: Vec<Vec<usize>>,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(
        n: &'a Netlist,
        fixed: Vec<Option<NodeState>>,
        cfg: &'a EvalConfig,
        prev: Option<&'a NodeStates>,
    ) -> Self {
        let mut channel = vec![Vec::new(); n.node_count()];
        for (i, d) in n.devices().iter().enumerate() {
            channel[d.source.index()].push(i);
            channel[d.drain.index()].push(i);
        }
        Engine {
            n,
            cfg,
            fixed,
            prev,
            channel,
        }
    }

    fn carried_level(&self, node: usize) -> f64 {
        self.prev.map_or(0.0, |p| p.0[node].level)
    }

    fn is_fixed(&self, node: usize) -> bool {
        self.fixed[node].is_some()
    }

    /// Nodes reachable from driven nodes of `value` through conducting
    /// devices; the second vector restricts traversal to devices that pass
    /// `value` without degradation.
    fn reach(&self, on: &[bool], value: bool) -> (Vec<bool>, Vec<bool>) {
        let lossless = if value { DeviceKind::PMos } else { DeviceKind::NMos };
        let flood = |strong_only: bool| {
            let mut seen = vec![false; self.n.node_count()];
            let mut stack: Vec<usize> = self
                .fixed
                .iter()
                .enumerate()
                .filter(|(_, f)| f.is_some_and(|s| s.value == LogicValue::from_bool(value)))
                .map(|(i, _)| i)
                .collect();
            for &s in &stack {
                seen[s] = true;
            }
            while let Some(u) = stack.pop() {
                for &di in &self.channel[u] {
                    let d = &self.n.devices()[di];
                    if !on[di] || (strong_only && d.kind != lossless) {
                        continue;
                    }
                    let v = d.other_terminal(NodeId::from_index(u)).unwrap().index();
                    if !seen[v] && !self.is_fixed(v) {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            seen
        };
        (flood(false), flood(true))
    }

    /// Node states for a fixed set of conducting devices.
    fn resolve(&self, on: &[bool]) -> Vec<NodeState> {
        let cfg = self.cfg;
        let (any1, strong1) = self.reach(on, true);
        let (any0, strong0) = self.reach(on, false);
        let count = self.n.node_count();
        let mut out: Vec<Option<NodeState>> = self.fixed.clone();
        for i in 0..count {
            if out[i].is_some() {
                continue;
            }
            let s1 = if strong1[i] { Strength::Strong } else { Strength::Degraded };
            let s0 = if strong0[i] { Strength::Strong } else { Strength::Degraded };
            out[i] = match (any1[i], any0[i]) {
                (true, true) => Some(match (strong1[i], strong0[i]) {
                    (true, false) => NodeState::driven(true, Strength::Strong, cfg),
                    (false, true) => NodeState::driven(false, Strength::Strong, cfg),
                    _ => NodeState::unknown(self.carried_level(i)),
                }),
                (true, false) => Some(NodeState::driven(true, s1, cfg)),
                (false, true) => Some(NodeState::driven(false, s0, cfg)),
                (false, false) => None,
            };
        }

        // Undriven islands share their retained charge.
        let mut island = vec![usize::MAX; count];
        for start in 0..count {
            if out[start].is_some() || island[start] != usize::MAX {
                continue;
            }
            let mut members = vec![start];
            island[start] = start;
            let mut k = 0;
            while k < members.len() {
                let u = members[k];
                k += 1;
                for &di in &self.channel[u] {
                    if !on[di] {
                        continue;
                    }
                    let v = self.n.devices()[di]
                        .other_terminal(NodeId::from_index(u))
                        .unwrap()
                        .index();
                    if out[v].is_none() && island[v] == usize::MAX {
                        island[v] = start;
                        members.push(v);
                    }
                }
            }
            let merged = self.prev.and_then(|p| {
                let mut acc: Option<(LogicValue, Strength)> = None;
                for &m in &members {
                    let s = p.0[m];
                    if s.value == LogicValue::Floating {
                        continue;
                    }
                    acc = Some(match acc {
                        None => (s.value, s.strength),
                        Some((v, st)) if v == s.value => (
                            v,
                            if st == Strength::Degraded || s.strength == Strength::Degraded {
                                Strength::Degraded
                            } else {
                                Strength::Strong
                            },
                        ),
                        Some(_) => (LogicValue::Unknown, Strength::Strong),
                    });
                }
                acc
            });
            for &m in &members {
                out[m] = Some(match merged {
                    Some((v, st)) if v.as_bool().is_some() => {
                        NodeState::driven(v.as_bool().unwrap(), st, cfg)
                    }
                    Some(_) => NodeState::unknown(self.carried_level(m)),
                    None => NodeState::floating(self.carried_level(m)),
                });
            }
        }
        out.into_iter().map(Option::unwrap).collect()
    }

    fn switch_states(&self, cur: &[NodeState]) -> Vec<SwitchState> {
        self.n
            .devices()
            .iter()
            .map(|d| switch_is_on(d, &cur[d.gate.index()]))
            .collect()
    }

    /// One synchronous recomputation of every node from the switch states
    /// implied by `cur`. Unknown gates are split into their 0/1 cases and
    /// nodes whose value differs between cases become X.
    pub(crate) fn step(&self, cur: &[NodeState]) -> Vec<NodeState> {
        let states = self.switch_states(cur);
        let mut maybe_gates: Vec<usize> = self
            .n
            .devices()
            .iter()
            .zip(&states)
            .filter(|(_, s)| **s == SwitchState::Maybe)
            .map(|(d, _)| d.gate.index())
            .collect();
        maybe_gates.sort_unstable();
        maybe_gates.dedup();

        let base: Vec<bool> = states.iter().map(|s| *s == SwitchState::On).collect();
        if maybe_gates.is_empty() {
            return self.resolve(&base);
        }

        let mut cases: Vec<Vec<bool>> = Vec::new();
        if maybe_gates.len() <= MAX_EXACT_SPLIT {
            for mask in 0u32..(1 << maybe_gates.len()) {
                let mut on = base.clone();
                for (di, d) in self.n.devices().iter().enumerate() {
                    if states[di] == SwitchState::Maybe {
                        let k = maybe_gates.binary_search(&d.gate.index()).unwrap();
                        on[di] = device_conducts(d.kind, mask >> k & 1 == 1);
                    }
                }
                cases.push(on);
            }
        } else {
            let all_on: Vec<bool> = states.iter().map(|s| *s != SwitchState::Off).collect();
            cases.push(base);
            cases.push(all_on);
        }

        let mut merged = self.resolve(&cases[0]);
        for on in &cases[1..] {
            let other = self.resolve(on);
            for (i, (m, o)) in merged.iter_mut().zip(other).enumerate() {
                if *m == o {
                    continue;
                }
                let same_value = m.value == o.value && m.value.as_bool().is_some();
                *m = if same_value {
                    NodeState::driven(m.value.as_bool().unwrap(), Strength::Degraded, self.cfg)
                } else {
                    NodeState::unknown(self.carried_level(i))
                };
            }
        }
        merged
    }

    /// Conducting network from `node` to every driven node whose value is
    /// `value`, with those driven nodes merged into one terminal.
    pub(crate) fn drive_network(
        &self,
        cur: &[NodeState],
        node: usize,
        value: bool,
    ) -> ConductanceNetwork {
        let target = LogicValue::from_bool(value);
        let is_source =
            |i: usize| self.fixed[i].is_some_and(|s| s.value == target);
        // Index 0 is the merged source terminal.
        let mut map = vec![usize::MAX; self.n.node_count()];
        let mut next = 1;
        for i in 0..self.n.node_count() {
            if is_source(i) {
                map[i] = 0;
            } else if !self.is_fixed(i) {
                map[i] = next;
                next += 1;
            }
        }
        let mut edges = Vec::new();
        for d in self.n.devices() {
            if switch_is_on(d, &cur[d.gate.index()]) != SwitchState::On {
                continue;
            }
            let (a, b) = (map[d.source.index()], map[d.drain.index()]);
            if a == usize::MAX || b == usize::MAX || a == b {
                continue;
            }
            edges.push((a, b, 1.0 / d.on_resistance));
        }
        ConductanceNetwork::new(next, edges, 0, map[node])
            .expect("drive network terminals are distinct and conductances positive")
    }

    fn drive_resistance(&self, cur: &[NodeState], node: usize, target: &NodeState) -> f64 {
        match target.value.as_bool() {
            Some(v) => effective_resistance(&self.drive_network(cur, node, v))
                .unwrap_or(f64::INFINITY),
            None => f64::INFINITY,
        }
    }

    pub(crate) fn run(&self, max_iterations: usize) -> Result<NodeStates, EvalError> {
        let count = self.n.node_count();
        let mut cur: Vec<NodeState> = (0..count)
            .map(|i| match (&self.fixed[i], self.prev) {
                (Some(f), _) => *f,
                (None, Some(p)) => p.0[i],
                (None, None) => NodeState::floating(0.0),
            })
            .collect();

        let mut last_changed = Vec::new();
        for _ in 0..max_iterations {
            let target = self.step(&cur);
            let changed: Vec<usize> = (0..count).filter(|&i| target[i] != cur[i]).collect();
            if changed.is_empty() {
                return Ok(NodeStates(cur));
            }
            let chosen: Vec<usize> = if changed.len() == 1 {
                changed.clone()
            } else {
                let r: Vec<f64> = changed
                    .iter()
                    .map(|&i| self.drive_resistance(&cur, i, &target[i]))
                    .collect();
                let best = r.iter().copied().fold(f64::INFINITY, f64::min);
                if best.is_infinite() {
                    changed.clone()
                } else {
                    changed
                        .iter()
                        .zip(&r)
                        .filter(|(_, &ri)| ri <= best * (1.0 + 1e-9))
                        .map(|(&i, _)| i)
                        .collect()
                }
            };
            for &i in &chosen {
                cur[i] = target[i];
            }
            last_changed = changed;
        }
        Err(EvalError::NonConvergence {
            iterations: max_iterations,
            nodes: last_changed
                .into_iter()
                .map(|i| self.n.nodes()[i].name.clone())
                .collect(),
        })
    }
}

/// Steady-state value of every node.
///
/// With `prev`, undriven nodes keep their previous state (charge retention);
/// without it they are Z.
pub fn evaluate(
    n: &Netlist,
    inputs: &InputVector,
    cfg: &EvalConfig,
    prev: Option<&NodeStates>,
) -> Result<NodeStates, EvalError> {
    cfg.check()?;
    if let Some(p) = prev {
        if p.len() != n.node_count() {
            return Err(EvalError::PrevMismatch {
                got: p.len(),
                want: n.node_count(),
            });
        }
    }
    let fixed = forced_states(n, inputs, cfg)?;
    let engine = Engine::new(n, fixed, cfg, prev);
    let limit = cfg.max_iterations.unwrap_or(4 * n.node_count()).max(1);
    engine.run(limit)
}

/// True when one more synchronous recomputation leaves `states` unchanged.
pub fn is_fixed_point(
    n: &Netlist,
    inputs: &InputVector,
    cfg: &EvalConfig,
    prev: Option<&NodeStates>,
    states: &NodeStates,
) -> Result<bool, EvalError> {
    let fixed = forced_states(n, inputs, cfg)?;
    let engine = Engine::new(n, fixed, cfg, prev);
    Ok(engine.step(&states.0) == states.0)
}
