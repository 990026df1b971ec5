//! Built-in full-adder netlists and functional verification.
//!
//! The netlists are reconstructions from the logic equations of each style
//! and the usual published topologies. Two things are fixed for every one of
//! them: the transistor count and the full-adder truth table.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::netlist::{
    parse_netlist, DeviceKind, Netlist, NetlistBuilder, NodeId, NodeRole, DEFAULT_ON_RESISTANCE,
};
use crate::switch_eval::{
    truth_table_with, EvalConfig, NodeState, StartMode, Strength, TruthTableError,
};

/// Load on every Sum/Carry output, true and complement.
pub const OUTPUT_LOAD: f64 = 20e-15;
/// Parasitic capacitance per device terminal (gate, source or drain)
/// attached to an internal node of the built-ins.
pub const TERMINAL_CAP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AdderKind {
    Cmos28,
    Cpl,
    TGate,
    PassAdiabatic,
    Pfal,
    Tgal,
    Serf,
}

impl AdderKind {
    pub const ALL: [AdderKind; 7] = [
        AdderKind::Cmos28,
        AdderKind::Cpl,
        AdderKind::TGate,
        AdderKind::PassAdiabatic,
        AdderKind::Pfal,
        AdderKind::Tgal,
        AdderKind::Serf,
    ];

    /// Short name used on the command line and for fixture files.
    pub fn name(self) -> &'static str {
        match self {
            AdderKind::Cmos28 => "cmos28",
            AdderKind::Cpl => "cpl",
            AdderKind::TGate => "tgate",
            AdderKind::PassAdiabatic => "pal",
            AdderKind::Pfal => "pfal",
            AdderKind::Tgal => "tgal",
            AdderKind::Serf => "serf",
        }
    }

    pub fn expected_devices(self) -> usize {
        match self {
            AdderKind::Cmos28 => 28,
            AdderKind::Cpl => 22,
            AdderKind::TGate => 20,
            AdderKind::PassAdiabatic => 10,
            AdderKind::Pfal => 38,
            AdderKind::Tgal => 60,
            AdderKind::Serf => 10,
        }
    }

    pub fn supply_regime(self) -> SupplyRegime {
        match self {
            AdderKind::PassAdiabatic | AdderKind::Pfal | AdderKind::Tgal => SupplyRegime::PowerClock,
            _ => SupplyRegime::Dc,
        }
    }

    /// Fixture text shipped with the crate.
    pub fn fixture(self) -> &'static str {
        match self {
            AdderKind::Cmos28 => include_str!("../circuits/cmos28.net"),
            AdderKind::Cpl => include_str!("../circuits/cpl.net"),
            AdderKind::TGate => include_str!("../circuits/tgate.net"),
            AdderKind::PassAdiabatic => include_str!("../circuits/pal.net"),
            AdderKind::Pfal => include_str!("../circuits/pfal.net"),
            AdderKind::Tgal => include_str!("../circuits/tgal.net"),
            AdderKind::Serf => include_str!("../circuits/serf.net"),
        }
    }
}

impl fmt::Display for AdderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown circuit `{0}`")]
pub struct UnknownAdder(pub String);

impl FromStr for AdderKind {
    type Err = UnknownAdder;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_lowercase();
        AdderKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or(UnknownAdder(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SupplyRegime {
    Dc,
    PowerClock,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdderSpec {
    /// `None` for a netlist loaded from a user file.
    pub kind: Option<AdderKind>,
    pub netlist: Netlist,
    pub expected_devices: usize,
    pub supply_regime: SupplyRegime,
    pub cpl_optional_pmos: bool,
}

impl AdderSpec {
    /// Wraps an arbitrary netlist; the supply regime follows from whether
    /// it has a power-clock node.
    pub fn custom(netlist: Netlist) -> Self {
        let supply_regime = if netlist.has_power_clock() {
            SupplyRegime::PowerClock
        } else {
            SupplyRegime::Dc
        };
        AdderSpec {
            kind: None,
            expected_devices: netlist.devices().len(),
            netlist,
            supply_regime,
            cpl_optional_pmos: false,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            Some(k) => k.name().to_string(),
            None => self.netlist.name().to_string(),
        }
    }
}

pub fn build(kind: AdderKind) -> AdderSpec {
    build_with(kind, false)
}

/// `cpl_optional_pmos` adds the two cross-coupled output restorers to CPL
/// and is ignored for the other styles.
pub fn build_with(kind: AdderKind, cpl_optional_pmos: bool) -> AdderSpec {
    let opt = cpl_optional_pmos && kind == AdderKind::Cpl;
    let netlist = match kind {
        AdderKind::Cmos28 => cmos28(),
        AdderKind::Cpl => cpl(opt),
        AdderKind::TGate => tgate(),
        AdderKind::PassAdiabatic => pal(),
        AdderKind::Pfal => pfal(),
        AdderKind::Tgal => tgal(),
        AdderKind::Serf => serf(),
    };
    AdderSpec {
        kind: Some(kind),
        netlist,
        expected_devices: kind.expected_devices() + if opt { 2 } else { 0 },
        supply_regime: kind.supply_regime(),
        cpl_optional_pmos: opt,
    }
}

/// Parses the shipped fixture for `kind`.
pub fn load_fixture(kind: AdderKind) -> Netlist {
    parse_netlist(kind.fixture()).expect("shipped fixtures parse")
}

struct Gen {
    b: NetlistBuilder,
    count: usize,
    wires: Vec<String>,
    terminals: Vec<String>,
}

impl Gen {
    fn new(name: &str, inputs: &[&str], clocked: bool) -> Self {
        let mut b = NetlistBuilder::new(name);
        b.node("vdd", 0.0, NodeRole::SupplyRail).unwrap();
        b.node("gnd", 0.0, NodeRole::GroundRail).unwrap();
        if clocked {
            b.node("pclk", 0.0, NodeRole::PowerClock).unwrap();
        }
        for i in inputs {
            b.node(i, 0.0, NodeRole::Input).unwrap();
        }
        b.inputs(inputs);
        Gen {
            b,
            count: 0,
            wires: Vec::new(),
            terminals: Vec::new(),
        }
    }

    fn outputs(&mut self, names: &[&str]) {
        for o in names {
            self.b.node(o, OUTPUT_LOAD, NodeRole::Output).unwrap();
        }
        self.b.outputs(names);
    }

    /// Internal nodes, declared in this order when the netlist is built.
    fn wires(&mut self, names: &[&str]) {
        self.wires.extend(names.iter().map(|w| w.to_string()));
    }

    fn dev(&mut self, kind: DeviceKind, d: &str, g: &str, s: &str) {
        self.count += 1;
        let name = format!("M{}", self.count);
        self.terminals.extend([d, g, s].map(str::to_string));
        self.b.device(&name, kind, d, g, s, DEFAULT_ON_RESISTANCE);
    }

    fn n(&mut self, d: &str, g: &str, s: &str) {
        self.dev(DeviceKind::NMos, d, g, s);
    }

    fn p(&mut self, d: &str, g: &str, s: &str) {
        self.dev(DeviceKind::PMos, d, g, s);
    }

    fn inv(&mut self, out: &str, inp: &str, supply: &str) {
        self.p(out, inp, supply);
        self.n(out, inp, "gnd");
    }

    /// Transmission gate between `a` and `b`, on when `g` is 1.
    fn tg(&mut self, a: &str, b: &str, g: &str, g_b: &str) {
        self.n(a, g, b);
        self.p(a, g_b, b);
    }

    fn finish(mut self) -> Netlist {
        for w in &self.wires {
            let k = self.terminals.iter().filter(|t| *t == w).count();
            // Rounded to attofarads so fixture values print cleanly.
            let c = (k as f64 * TERMINAL_CAP * 1e18).round() / 1e18;
            self.b.node(w, c, NodeRole::Internal).unwrap();
        }
        self.b.build().expect("built-in netlist is well formed")
    }
}

/// Mirror adder: a carry stage, a sum stage reusing the inverted carry, and
/// two output inverters.
fn cmos28() -> Netlist {
    let mut g = Gen::new("cmos28", &["A", "B", "C"], false);
    g.outputs(&["Sum", "Carry"]);
    g.wires(&["cb", "sb", "n1", "n2", "p1", "p2", "n3", "n4", "n5", "p3", "p4", "p5"]);
    // cb = !(AB + C(A+B))
    g.n("cb", "A", "n1");
    g.n("n1", "B", "gnd");
    g.n("cb", "C", "n2");
    g.n("n2", "A", "gnd");
    g.n("n2", "B", "gnd");
    g.p("cb", "A", "p1");
    g.p("p1", "B", "vdd");
    g.p("cb", "C", "p2");
    g.p("p2", "A", "vdd");
    g.p("p2", "B", "vdd");
    g.inv("Carry", "cb", "vdd");
    // sb = !(ABC + cb(A+B+C))
    g.n("sb", "A", "n3");
    g.n("n3", "B", "n4");
    g.n("n4", "C", "gnd");
    g.n("sb", "cb", "n5");
    for x in ["A", "B", "C"] {
        g.n("n5", x, "gnd");
    }
    g.p("sb", "A", "p3");
    g.p("p3", "B", "p4");
    g.p("p4", "C", "vdd");
    g.p("sb", "cb", "p5");
    for x in ["A", "B", "C"] {
        g.p("p5", x, "vdd");
    }
    g.inv("Sum", "sb", "vdd");
    g.finish()
}

/// Complementary pass-transistor logic: nMOS multiplexers on dual-rail
/// inputs, a pMOS restorer on the internal XOR pair and output inverters.
fn cpl(optional_pmos: bool) -> Netlist {
    let mut g = Gen::new("cpl", &["A", "B", "C", "A_b", "B_b", "C_b"], false);
    g.outputs(&["Sum", "Carry", "Sum_b", "Carry_b"]);
    g.wires(&["h", "hb", "sn", "sp", "cn", "cp"]);
    g.n("h", "B", "A_b");
    g.n("h", "B_b", "A");
    g.n("hb", "B", "A");
    g.n("hb", "B_b", "A_b");
    g.p("h", "hb", "vdd");
    g.p("hb", "h", "vdd");
    // Multiplexers feeding inverting drivers.
    for (out, on_h, on_hb) in [
        ("sn", "C", "C_b"),
        ("sp", "C_b", "C"),
        ("cn", "C_b", "A_b"),
        ("cp", "C", "A"),
    ] {
        g.n(out, "h", on_h);
        g.n(out, "hb", on_hb);
    }
    g.inv("Sum", "sn", "vdd");
    g.inv("Sum_b", "sp", "vdd");
    g.inv("Carry", "cn", "vdd");
    g.inv("Carry_b", "cp", "vdd");
    if optional_pmos {
        g.p("sn", "sp", "vdd");
        g.p("sp", "sn", "vdd");
    }
    g.finish()
}

fn tgate() -> Netlist {
    let mut g = Gen::new("tgate", &["A", "B", "C"], false);
    g.outputs(&["Sum", "Carry"]);
    g.wires(&["nA", "nB", "nC", "X", "Xb"]);
    g.inv("nA", "A", "vdd");
    g.inv("nB", "B", "vdd");
    g.inv("nC", "C", "vdd");
    // X = A xor B
    g.tg("X", "nA", "B", "nB");
    g.tg("X", "A", "nB", "B");
    g.inv("Xb", "X", "vdd");
    g.tg("Sum", "C", "Xb", "X");
    g.tg("Sum", "nC", "X", "Xb");
    g.tg("Carry", "A", "Xb", "X");
    g.tg("Carry", "C", "X", "Xb");
    g.finish()
}

/// Static energy recovering full adder: one inverter, an XNOR/XOR pair and
/// two pass multiplexers.
fn serf() -> Netlist {
    let mut g = Gen::new("serf", &["A", "B", "C"], false);
    g.outputs(&["Sum", "Carry"]);
    g.wires(&["nA", "H", "HB"]);
    g.inv("nA", "A", "vdd");
    g.n("H", "B", "A");
    g.p("H", "B", "nA");
    g.n("HB", "B", "nA");
    g.p("HB", "B", "A");
    g.n("Sum", "C", "H");
    g.p("Sum", "C", "HB");
    g.n("Carry", "H", "A");
    g.p("Carry", "H", "C");
    g.finish()
}

/// Pass-transistor adiabatic adder using the shared XOR/XNOR terms of the
/// sum and carry expressions, with the inverter on A powered by the clock.
fn pal() -> Netlist {
    let mut g = Gen::new("pal", &["A", "B", "C"], true);
    g.outputs(&["Sum", "Carry"]);
    g.wires(&["nA", "X", "Xb"]);
    g.inv("nA", "A", "pclk");
    g.n("Xb", "B", "A");
    g.p("Xb", "B", "nA");
    g.n("X", "B", "nA");
    g.p("X", "B", "A");
    g.n("Sum", "C", "Xb");
    g.p("Sum", "C", "X");
    g.n("Carry", "X", "C");
    g.p("Carry", "X", "B");
    g.finish()
}

/// Cross-coupled inverter pair powered by the clock, for dual-rail gates.
fn pfal_latch(g: &mut Gen, out: &str, out_b: &str) {
    g.inv(out, out_b, "pclk");
    g.inv(out_b, out, "pclk");
}

/// Positive feedback adiabatic logic: per output pair a clock-powered latch
/// with nMOS function blocks in parallel with its pull-up devices.
fn pfal() -> Netlist {
    let mut g = Gen::new(
        "pfal",
        &["A", "B", "C", "A_b", "B_b", "C_b"],
        true,
    );
    g.outputs(&["Sum", "Carry", "Sum_b", "Carry_b"]);
    g.wires(&["c1", "c2", "d1", "d2"]);
    g.wires(&["s1", "s2", "s3", "s4", "s5", "s6", "t1", "t2", "t3", "t4", "t5", "t6"]);
    pfal_latch(&mut g, "Carry", "Carry_b");
    pfal_latch(&mut g, "Sum", "Sum_b");

    // Carry = AB + C(A + B), and the same on complemented inputs.
    for (out, a, b, c, k1, k2) in [
        ("Carry", "A", "B", "C", "c1", "c2"),
        ("Carry_b", "A_b", "B_b", "C_b", "d1", "d2"),
    ] {
        g.n("pclk", a, k1);
        g.n(k1, b, out);
        g.n("pclk", c, k2);
        g.n(k2, a, out);
        g.n(k2, b, out);
    }

    // Sum = A(BC + B'C') + A'(BC' + B'C); Sum_b swaps the inner terms.
    for (out, k, inner) in [
        ("Sum", ["s1", "s2", "s3", "s4", "s5", "s6"], [("C", "C_b"), ("C_b", "C")]),
        ("Sum_b", ["t1", "t2", "t3", "t4", "t5", "t6"], [("C_b", "C"), ("C", "C_b")]),
    ] {
        for (i, (a, (cb, cbb))) in [("A", inner[0]), ("A_b", inner[1])].into_iter().enumerate() {
            let (top, m1, m2) = (k[3 * i], k[3 * i + 1], k[3 * i + 2]);
            g.n("pclk", a, top);
            g.n(top, "B", m1);
            g.n(m1, cb, out);
            g.n(top, "B_b", m2);
            g.n(m2, cbb, out);
        }
    }
    g.finish()
}

/// Transmission-gate adiabatic logic: per output pair a cross-coupled pMOS
/// latch on the clock plus transmission-gate function blocks for F and its
/// complement. Each of the two gates has 30 devices.
fn tgal() -> Netlist {
    let mut g = Gen::new(
        "tgal",
        &["A", "B", "C", "A_b", "B_b", "C_b"],
        true,
    );
    g.outputs(&["Sum", "Carry", "Sum_b", "Carry_b"]);
    g.wires(&["c1", "c2", "c3", "c4", "d1", "d2", "d3", "d4"]);
    g.wires(&["s1", "s2", "s3", "t1", "t2", "t3"]);

    // Carry = AB + (AB' + A'B)C
    for (out, out_b, [a, ab, b, bb, c, cb], [k1, k2, k3, k4]) in [
        ("Carry", "Carry_b", ["A", "A_b", "B", "B_b", "C", "C_b"], ["c1", "c2", "c3", "c4"]),
        ("Carry_b", "Carry", ["A_b", "A", "B_b", "B", "C_b", "C"], ["d1", "d2", "d3", "d4"]),
    ] {
        g.p(out, out_b, "pclk");
        g.tg("pclk", k1, a, ab);
        g.tg(k1, out, b, bb);
        g.tg("pclk", k2, a, ab);
        g.tg(k2, k3, bb, b);
        g.tg("pclk", k4, ab, a);
        g.tg(k4, k3, b, bb);
        g.tg(k3, out, c, cb);
    }

    // Sum = ABC + (A + B + C)Carry'
    for (out, out_b, [a, ab, b, bb, c, cb], gate, gate_b, [k1, k2, k3]) in [
        ("Sum", "Sum_b", ["A", "A_b", "B", "B_b", "C", "C_b"], "Carry_b", "Carry", ["s1", "s2", "s3"]),
        ("Sum_b", "Sum", ["A_b", "A", "B_b", "B", "C_b", "C"], "Carry", "Carry_b", ["t1", "t2", "t3"]),
    ] {
        g.p(out, out_b, "pclk");
        g.tg("pclk", k1, a, ab);
        g.tg(k1, k2, b, bb);
        g.tg(k2, out, c, cb);
        g.tg("pclk", k3, a, ab);
        g.tg("pclk", k3, b, bb);
        g.tg("pclk", k3, c, cb);
        g.tg(k3, out, gate, gate_b);
    }
    g.finish()
}

/// Reference full-adder table in ascending (A, B, C) order: (Sum, Carry).
pub const FULL_ADDER_TABLE: [(bool, bool); 8] = [
    (false, false),
    (true, false),
    (true, false),
    (false, true),
    (true, false),
    (false, true),
    (false, true),
    (true, true),
];

/// Sum and carry as sums of minterms.
pub fn minterm_form(a: bool, b: bool, c: bool) -> (bool, bool) {
    let sum = (!a & !b & c) | (!a & b & !c) | (a & !b & !c) | (a & b & c);
    let carry = (!a & b & c) | (a & !b & c) | (a & b & !c) | (a & b & c);
    (sum, carry)
}

/// Carry factored as AB + C(A + B), with the sum reusing the inverted carry.
pub fn factored_form(a: bool, b: bool, c: bool) -> (bool, bool) {
    let carry = (a & b) | (c & (a | b));
    let sum = (a & b & c) | (!carry & (a | b | c));
    (sum, carry)
}

/// Both outputs from the shared A xor B term.
pub fn shared_term_form(a: bool, b: bool, c: bool) -> (bool, bool) {
    let x = a ^ b;
    let sum = x ^ c;
    let carry = if x { c } else { a };
    (sum, carry)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub inputs: [bool; 3],
    pub sum: NodeState,
    pub carry: NodeState,
    pub expected: (bool, bool),
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub circuit: String,
    pub rows: Vec<VerifyRow>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn all_strong(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.sum.strength == Strength::Strong && r.carry.strength == Strength::Strong)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("netlist needs primary inputs A, B, C and outputs Sum, Carry: {0}")]
    MissingPin(String),
    #[error(transparent)]
    Eval(#[from] TruthTableError),
}

/// Checks the eight rows against the full-adder table at value level.
pub fn verify_function(
    spec: &AdderSpec,
    cfg: &EvalConfig,
    mode: StartMode,
) -> Result<VerifyReport, VerifyError> {
    let n = &spec.netlist;
    let table = truth_table_with(n, cfg, mode)?;
    let names: Vec<String> = table.input_names.iter().map(|s| s.to_ascii_lowercase()).collect();
    if names != ["a", "b", "c"] {
        return Err(VerifyError::MissingPin(format!("inputs are {:?}", table.input_names)));
    }
    for o in ["Sum", "Carry"] {
        if table.output(0, o).is_none() {
            return Err(VerifyError::MissingPin(format!("no output `{o}`")));
        }
    }
    let rows = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let sum = *table.output(i, "Sum").unwrap();
            let carry = *table.output(i, "Carry").unwrap();
            let expected = FULL_ADDER_TABLE[i];
            let pass = sum.value.as_bool() == Some(expected.0)
                && carry.value.as_bool() == Some(expected.1);
            VerifyRow {
                inputs: [r.inputs[0], r.inputs[1], r.inputs[2]],
                sum,
                carry,
                expected,
                pass,
            }
        })
        .collect();
    Ok(VerifyReport {
        circuit: spec.label(),
        rows,
    })
}

/// Unordered node pairs (x, y) where x drives y and y drives x through a
/// complementary inverter (pMOS from a supply or clock, nMOS to ground).
pub fn cross_coupled_inverter_pairs(n: &Netlist) -> Vec<(NodeId, NodeId)> {
    let powered = |id: NodeId| {
        matches!(n.node(id).role, NodeRole::SupplyRail | NodeRole::PowerClock)
    };
    let grounded = |id: NodeId| n.node(id).role == NodeRole::GroundRail;
    let inverts = |input: NodeId, out: NodeId| {
        let has = |kind: DeviceKind, rail: &dyn Fn(NodeId) -> bool| {
            n.devices().iter().any(|d| {
                d.kind == kind
                    && d.gate == input
                    && ((d.drain == out && rail(d.source)) || (d.source == out && rail(d.drain)))
            })
        };
        has(DeviceKind::PMos, &powered) && has(DeviceKind::NMos, &grounded)
    };
    let mut pairs = Vec::new();
    for x in n.node_ids() {
        for y in n.node_ids().filter(|&y| y > x) {
            if inverts(x, y) && inverts(y, x) {
                pairs.push((x, y));
            }
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::validate;

    #[test]
    fn names_round_trip() {
        for k in AdderKind::ALL {
            assert_eq!(k.name().parse::<AdderKind>().unwrap(), k);
        }
        assert_eq!("PFAL".parse::<AdderKind>().unwrap(), AdderKind::Pfal);
        assert!("nosuch".parse::<AdderKind>().is_err());
    }

    #[test]
    fn device_counts() {
        for k in AdderKind::ALL {
            let s = build(k);
            assert_eq!(s.netlist.devices().len(), s.expected_devices, "{k}");
        }
        assert_eq!(build_with(AdderKind::Cpl, true).netlist.devices().len(), 24);
        assert_eq!(build_with(AdderKind::Serf, true).netlist.devices().len(), 10);
    }

    #[test]
    fn built_ins_validate_cleanly() {
        for k in AdderKind::ALL {
            let d = validate(&build(k).netlist);
            assert!(d.is_empty(), "{k}: {d:?}");
        }
        assert!(validate(&build_with(AdderKind::Cpl, true).netlist).is_empty());
    }

    #[test]
    fn algebraic_forms_agree_with_reference() {
        for (i, expected) in FULL_ADDER_TABLE.iter().enumerate() {
            let (a, b, c) = (i & 4 != 0, i & 2 != 0, i & 1 != 0);
            assert_eq!(minterm_form(a, b, c), *expected);
            assert_eq!(factored_form(a, b, c), *expected);
            assert_eq!(shared_term_form(a, b, c), *expected);
            let ones = a as u8 + b as u8 + c as u8;
            assert_eq!(*expected, (ones % 2 == 1, ones >= 2));
        }
    }

    #[test]
    fn fixtures_match_builders() {
        for k in AdderKind::ALL {
            assert_eq!(load_fixture(k), build(k).netlist, "{k}");
        }
    }

    #[test]
    fn regimes() {
        for k in AdderKind::ALL {
            assert_eq!(
                build(k).netlist.has_power_clock(),
                k.supply_regime() == SupplyRegime::PowerClock,
                "{k}"
            );
        }
    }

    #[test]
    fn pfal_has_two_latches() {
        let n = build(AdderKind::Pfal).netlist;
        let pairs = cross_coupled_inverter_pairs(&n);
        let names: Vec<(&str, &str)> = pairs
            .iter()
            .map(|&(x, y)| (n.node(x).name.as_str(), n.node(y).name.as_str()))
            .collect();
        assert_eq!(names, [("Sum", "Sum_b"), ("Carry", "Carry_b")]);
        assert!(cross_coupled_inverter_pairs(&build(AdderKind::Cmos28).netlist).is_empty());
    }

    #[test]
    fn custom_spec_from_fixture_text() {
        let spec = AdderSpec::custom(load_fixture(AdderKind::Serf));
        assert_eq!(spec.supply_regime, SupplyRegime::Dc);
        assert_eq!(spec.label(), "serf");
    }

    #[test]
    fn all_built_ins_add() {
        let cfg = EvalConfig::default();
        for k in AdderKind::ALL {
            for mode in [StartMode::Cold, StartMode::Warm] {
                let r = verify_function(&build(k), &cfg, mode).unwrap();
                assert!(r.all_pass(), "{k} {mode:?}: {r:#?}");
            }
        }
    }

    #[test]
    fn cmos_outputs_are_strong() {
        let r = verify_function(&build(AdderKind::Cmos28), &EvalConfig::default(), StartMode::Cold)
            .unwrap();
        assert!(r.all_strong());
    }

    #[test]
    fn pfal_outputs_are_complementary() {
        let spec = build(AdderKind::Pfal);
        let t = truth_table_with(&spec.netlist, &EvalConfig::default(), StartMode::Cold).unwrap();
        for i in 0..8 {
            for (x, xb) in [("Sum", "Sum_b"), ("Carry", "Carry_b")] {
                let (v, vb) = (t.output(i, x).unwrap().value, t.output(i, xb).unwrap().value);
                assert!(v.as_bool().is_some() && vb.as_bool() == v.as_bool().map(|b| !b), "row {i} {x}");
            }
        }
    }

    #[test]
    fn cpl_optional_pmos_keeps_the_table() {
        let cfg = EvalConfig::default();
        let base = truth_table_with(&build(AdderKind::Cpl).netlist, &cfg, StartMode::Cold).unwrap();
        let opt =
            truth_table_with(&build_with(AdderKind::Cpl, true).netlist, &cfg, StartMode::Cold).unwrap();
        let values = |t: &crate::switch_eval::TruthTable| -> Vec<Vec<_>> {
            t.rows.iter().map(|r| r.outputs.iter().map(|s| s.value).collect()).collect()
        };
        assert_eq!(values(&base), values(&opt));
    }

    #[test]
    fn serf_row_110() {
        let spec = build(AdderKind::Serf);
        let r = verify_function(&spec, &EvalConfig::default(), StartMode::Cold).unwrap();
        let row = &r.rows[6];
        assert_eq!(row.inputs, [true, true, false]);
        assert_eq!(row.sum.value.as_bool(), Some(false));
        assert_eq!(row.carry.value.as_bool(), Some(true));
    }

    #[test]
    fn verify_rejects_non_adders() {
        let n = parse_netlist(
            ".NODE vdd ROLE=VDD\n.NODE gnd ROLE=GND\n.NODE in ROLE=IN\n.NODE out C=1f ROLE=OUT\n\
             M1 out in vdd P\nM2 out in gnd N\n",
        )
        .unwrap();
        let err = verify_function(&AdderSpec::custom(n), &EvalConfig::default(), StartMode::Cold);
        assert!(matches!(err, Err(VerifyError::MissingPin(_))));
    }
}
