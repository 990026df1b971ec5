//! Circuit data model: MOS switches connecting named, capacitive nodes.
//!
//! A [`Netlist`] is immutable once built. Use [`NetlistBuilder`] to assemble
//! one programmatically or [`parse_netlist`] to read the text format.

mod parse;

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use parse::{parse_netlist, parse_value, serialize_netlist, ParseError, ParseErrorKind};

/// On-resistance assigned to devices that do not specify one.
pub const DEFAULT_ON_RESISTANCE: f64 = 10e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DeviceKind {
    NMos,
    PMos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum NodeRole {
    Internal,
    Input,
    Output,
    SupplyRail,
    GroundRail,
    PowerClock,
}

impl NodeRole {
    /// Nodes whose value is imposed from outside the switch network.
    pub fn is_driven(self) -> bool {
        matches!(
            self,
            NodeRole::Input | NodeRole::SupplyRail | NodeRole::GroundRail | NodeRole::PowerClock
        )
    }

    pub fn is_rail(self) -> bool {
        matches!(
            self,
            NodeRole::SupplyRail | NodeRole::GroundRail | NodeRole::PowerClock
        )
    }
}

/// Index into a netlist's node table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(index: usize) -> Self {
        NodeId(index as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub name: String,
    /// Farads.
    pub capacitance: f64,
    pub role: NodeRole,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Device {
    pub name: String,
    pub kind: DeviceKind,
    pub gate: NodeId,
    pub source: NodeId,
    pub drain: NodeId,
    /// Ohms.
    pub on_resistance: f64,
}

impl Device {
    /// The channel terminal opposite `node`, if `node` is on the channel.
    pub fn other_terminal(&self, node: NodeId) -> Option<NodeId> {
        if node == self.source {
            Some(self.drain)
        } else if node == self.drain {
            Some(self.source)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Netlist {
    name: String,
    nodes: Vec<Node>,
    devices: Vec<Device>,
    inputs: Vec<NodeId>,
    outputs: Vec<NodeId>,
}

impl Netlist {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId::from_index)
    }

    /// Case-insensitive node lookup.
    pub fn find_node(&self, name: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .position(|n| n.name.eq_ignore_ascii_case(name))
            .map(NodeId::from_index)
    }

    pub fn has_power_clock(&self) -> bool {
        self.nodes.iter().any(|n| n.role == NodeRole::PowerClock)
    }

    /// Returns a copy with every output node's capacitance replaced.
    pub fn with_output_load(&self, farads: f64) -> Netlist {
        let mut out = self.clone();
        for &id in &self.outputs {
            out.nodes[id.index()].capacitance = farads;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetlistError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("missing rail: {0}")]
    MissingRail(String),
    #[error("invalid value: {0}")]
    InvalidValue(String),
}

/// Incremental construction of a [`Netlist`].
///
/// Nodes are referenced by name; names are matched case-insensitively.
#[derive(Debug, Clone)]
pub struct NetlistBuilder {
    name: String,
    nodes: Vec<Node>,
    index: HashMap<String, NodeId>,
    devices: Vec<(String, DeviceKind, String, String, String, f64)>,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl NetlistBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        NetlistBuilder {
            name: name.into(),
            nodes: Vec::new(),
            index: HashMap::new(),
            devices: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn node(
        &mut self,
        name: &str,
        capacitance: f64,
        role: NodeRole,
    ) -> Result<NodeId, NetlistError> {
        let key = name.to_ascii_lowercase();
        if self.index.contains_key(&key) {
            return Err(NetlistError::DuplicateName(name.to_string()));
        }
        if !(capacitance >= 0.0 && capacitance.is_finite()) {
            return Err(NetlistError::InvalidValue(format!(
                "capacitance of `{name}` must be finite and non-negative, got {capacitance}"
            )));
        }
        let id = NodeId::from_index(self.nodes.len());
        self.nodes.push(Node {
            name: name.to_string(),
            capacitance,
            role,
        });
        self.index.insert(key, id);
        Ok(id)
    }

    pub fn has_node(&self, name: &str) -> bool {
        self.index.contains_key(&name.to_ascii_lowercase())
    }

    /// Adds an internal node if not already declared.
    pub fn ensure_node(&mut self, name: &str) -> NodeId {
        match self.index.get(&name.to_ascii_lowercase()) {
            Some(&id) => id,
            None => self.node(name, 0.0, NodeRole::Internal).unwrap(),
        }
    }

    pub fn device(
        &mut self,
        name: &str,
        kind: DeviceKind,
        drain: &str,
        gate: &str,
        source: &str,
        on_resistance: f64,
    ) -> &mut Self {
        self.devices.push((
            name.to_string(),
            kind,
            drain.to_string(),
            gate.to_string(),
            source.to_string(),
            on_resistance,
        ));
        self
    }

    pub fn nmos(&mut self, name: &str, drain: &str, gate: &str, source: &str) -> &mut Self {
        self.device(name, DeviceKind::NMos, drain, gate, source, DEFAULT_ON_RESISTANCE)
    }

    pub fn pmos(&mut self, name: &str, drain: &str, gate: &str, source: &str) -> &mut Self {
        self.device(name, DeviceKind::PMos, drain, gate, source, DEFAULT_ON_RESISTANCE)
    }

    pub fn device_count(&self) -> usize {
        self.devices.len()
    }

    pub fn inputs<S: AsRef<str>>(&mut self, names: &[S]) -> &mut Self {
        self.inputs.extend(names.iter().map(|s| s.as_ref().to_string()));
        self
    }

    pub fn outputs<S: AsRef<str>>(&mut self, names: &[S]) -> &mut Self {
        self.outputs.extend(names.iter().map(|s| s.as_ref().to_string()));
        self
    }

    fn lookup(&self, name: &str) -> Result<NodeId, NetlistError> {
        self.index
            .get(&name.to_ascii_lowercase())
            .copied()
            .ok_or_else(|| NetlistError::UnknownNode(name.to_string()))
    }

    fn pin_list(&mut self, names: &[String], role: NodeRole) -> Result<Vec<NodeId>, NetlistError> {
        let mut ids: Vec<NodeId> = Vec::new();
        for name in names {
            let id = self.lookup(name)?;
            if ids.contains(&id) {
                return Err(NetlistError::DuplicateName(name.clone()));
            }
            let node = &mut self.nodes[id.index()];
            match node.role {
                NodeRole::Internal => node.role = role,
                r if r == role => {}
                other => {
                    return Err(NetlistError::InvalidValue(format!(
                        "`{name}` has role {other:?} and cannot be listed as {role:?}"
                    )))
                }
            }
            ids.push(id);
        }
        // Nodes declared with the role but left out of the explicit list keep
        // declaration order after the listed ones.
        for (i, node) in self.nodes.iter().enumerate() {
            let id = NodeId::from_index(i);
            if node.role == role && !ids.contains(&id) {
                ids.push(id);
            }
        }
        Ok(ids)
    }

    pub fn build(mut self) -> Result<Netlist, NetlistError> {
        let mut devices = Vec::with_capacity(self.devices.len());
        let mut device_names: HashMap<String, ()> = HashMap::new();
        for (name, kind, drain, gate, source, r) in &self.devices {
            if device_names.insert(name.to_ascii_lowercase(), ()).is_some() {
                return Err(NetlistError::DuplicateName(name.clone()));
            }
            if !name.starts_with(['M', 'm']) {
                return Err(NetlistError::InvalidValue(format!(
                    "device name `{name}` must start with `M`"
                )));
            }
            let drain = self.lookup(drain)?;
            let gate = self.lookup(gate)?;
            let source = self.lookup(source)?;
            if !(*r > 0.0 && r.is_finite()) {
                return Err(NetlistError::InvalidValue(format!(
                    "on-resistance of `{name}` must be positive and finite, got {r}"
                )));
            }
            if drain == source {
                return Err(NetlistError::InvalidValue(format!(
                    "device `{name}` has source and drain on the same node"
                )));
            }
            devices.push(Device {
                name: name.clone(),
                kind: *kind,
                gate,
                source,
                drain,
                on_resistance: *r,
            });
        }
        let grounds = self
            .nodes
            .iter()
            .filter(|n| n.role == NodeRole::GroundRail)
            .count();
        if grounds != 1 {
            return Err(NetlistError::MissingRail(format!(
                "expected exactly one ground rail, found {grounds}"
            )));
        }
        if !self
            .nodes
            .iter()
            .any(|n| matches!(n.role, NodeRole::SupplyRail | NodeRole::PowerClock))
        {
            return Err(NetlistError::MissingRail(
                "no supply rail or power clock declared".to_string(),
            ));
        }
        let input_names = std::mem::take(&mut self.inputs);
        let output_names = std::mem::take(&mut self.outputs);
        let inputs = self.pin_list(&input_names, NodeRole::Input)?;
        let outputs = self.pin_list(&output_names, NodeRole::Output)?;
        Ok(Netlist {
            name: self.name,
            nodes: self.nodes,
            devices,
            inputs,
            outputs,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiagnosticKind {
    NoDevices,
    FloatingNode,
    ZeroLoadCapacitance,
    DuplicateName,
    GroundRailCount,
    MissingSupply,
    InvalidResistance,
    InvalidCapacitance,
    SelfShortedDevice,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// Name of the offending node or device (or the netlist).
    pub element: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} [{}]: {}", self.kind, self.element, self.message)
    }
}

/// Re-checks every netlist invariant. An empty result means the netlist is
/// simulatable.
pub fn validate(n: &Netlist) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut diag = |kind, element: &str, message: String| {
        out.push(Diagnostic {
            kind,
            element: element.to_string(),
            message,
        })
    };

    if n.devices.is_empty() {
        diag(DiagnosticKind::NoDevices, &n.name, "netlist has no devices".into());
    }

    let node_names = n.nodes.iter().map(|x| x.name.as_str());
    let device_names = n.devices.iter().map(|d| d.name.as_str());
    for names in [node_names.collect::<Vec<_>>(), device_names.collect()] {
        let mut seen = HashMap::new();
        for name in names {
            if seen.insert(name.to_ascii_lowercase(), ()).is_some() {
                diag(
                    DiagnosticKind::DuplicateName,
                    name,
                    "name is not unique (case-insensitive)".into(),
                );
            }
        }
    }

    let grounds = n
        .nodes
        .iter()
        .filter(|x| x.role == NodeRole::GroundRail)
        .count();
    if grounds != 1 {
        diag(
            DiagnosticKind::GroundRailCount,
            &n.name,
            format!("expected exactly one ground rail, found {grounds}"),
        );
    }
    if !n
        .nodes
        .iter()
        .any(|x| matches!(x.role, NodeRole::SupplyRail | NodeRole::PowerClock))
    {
        diag(
            DiagnosticKind::MissingSupply,
            &n.name,
            "no supply rail or power clock".into(),
        );
    }

    let mut touched = vec![false; n.nodes.len()];
    for d in &n.devices {
        for t in [d.gate, d.source, d.drain] {
            touched[t.index()] = true;
        }
        if !(d.on_resistance > 0.0 && d.on_resistance.is_finite()) {
            diag(
                DiagnosticKind::InvalidResistance,
                &d.name,
                format!("on-resistance {} is not positive and finite", d.on_resistance),
            );
        }
        if d.source == d.drain {
            diag(
                DiagnosticKind::SelfShortedDevice,
                &d.name,
                "source and drain are the same node".into(),
            );
        }
    }

    for (i, node) in n.nodes.iter().enumerate() {
        if !(node.capacitance >= 0.0 && node.capacitance.is_finite()) {
            diag(
                DiagnosticKind::InvalidCapacitance,
                &node.name,
                format!("capacitance {} is negative or not finite", node.capacitance),
            );
        }
        if node.role == NodeRole::Internal && !touched[i] {
            diag(
                DiagnosticKind::FloatingNode,
                &node.name,
                "internal node is not connected to any device".into(),
            );
        }
        if node.role == NodeRole::Output && node.capacitance <= 0.0 {
            diag(
                DiagnosticKind::ZeroLoadCapacitance,
                &node.name,
                "output node has no load capacitance".into(),
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inverter() -> NetlistBuilder {
        let mut b = NetlistBuilder::new("inv");
        b.node("vdd", 0.0, NodeRole::SupplyRail).unwrap();
        b.node("gnd", 0.0, NodeRole::GroundRail).unwrap();
        b.node("in", 0.0, NodeRole::Input).unwrap();
        b.node("out", 20e-15, NodeRole::Output).unwrap();
        b.pmos("mp", "out", "in", "vdd");
        b.nmos("mn", "out", "in", "gnd");
        b
    }

    #[test]
    fn valid_netlist_has_no_diagnostics() {
        let n = inverter().build().unwrap();
        assert_eq!(validate(&n), vec![]);
    }

    #[test]
    fn floating_internal_node_is_reported() {
        let mut b = inverter();
        b.node("orphan", 0.0, NodeRole::Internal).unwrap();
        let d = validate(&b.build().unwrap());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::FloatingNode);
        assert_eq!(d[0].element, "orphan");
    }

    #[test]
    fn zero_output_load_is_reported() {
        let mut b = NetlistBuilder::new("inv");
        b.node("vdd", 0.0, NodeRole::SupplyRail).unwrap();
        b.node("gnd", 0.0, NodeRole::GroundRail).unwrap();
        b.node("in", 0.0, NodeRole::Input).unwrap();
        b.node("out", 0.0, NodeRole::Output).unwrap();
        b.pmos("mp", "out", "in", "vdd");
        b.nmos("mn", "out", "in", "gnd");
        let d = validate(&b.build().unwrap());
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].kind, DiagnosticKind::ZeroLoadCapacitance);
    }

    #[test]
    fn duplicate_names_are_case_insensitive() {
        let mut b = inverter();
        assert_eq!(
            b.node("OUT", 0.0, NodeRole::Internal),
            Err(NetlistError::DuplicateName("OUT".into()))
        );
    }

    #[test]
    fn builder_rejects_bad_devices() {
        let mut b = inverter();
        b.device("mx", DeviceKind::NMos, "out", "in", "out", 1e3);
        assert!(matches!(b.build(), Err(NetlistError::InvalidValue(_))));

        let mut b = inverter();
        b.device("mx", DeviceKind::NMos, "out", "in", "gnd", 0.0);
        assert!(matches!(b.build(), Err(NetlistError::InvalidValue(_))));

        let mut b = inverter();
        b.nmos("mx", "out", "nowhere", "gnd");
        assert_eq!(b.build(), Err(NetlistError::UnknownNode("nowhere".into())));
    }

    #[test]
    fn rails_are_required() {
        let mut b = NetlistBuilder::new("x");
        b.node("vdd", 0.0, NodeRole::SupplyRail).unwrap();
        assert!(matches!(b.build(), Err(NetlistError::MissingRail(_))));

        let mut b = NetlistBuilder::new("x");
        b.node("gnd", 0.0, NodeRole::GroundRail).unwrap();
        assert!(matches!(b.build(), Err(NetlistError::MissingRail(_))));
    }

    #[test]
    fn output_load_override() {
        let n = inverter().build().unwrap().with_output_load(5e-15);
        let out = n.find_node("OUT").unwrap();
        assert_eq!(n.node(out).capacitance, 5e-15);
    }
}
