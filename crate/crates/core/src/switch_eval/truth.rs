use serde::Serialize;
use thiserror::Error;

use super::{evaluate, ClockPhase, EvalConfig, EvalError, InputVector, LogicValue, NodeState, NodeStates};
use crate::netlist::{Netlist, NodeId};

/// How one netlist input pin is driven from the primary input bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InputBinding {
    pub node: NodeId,
    /// Index into the primary inputs.
    pub primary: usize,
    pub inverted: bool,
}

/// Splits the netlist inputs into primary inputs and complement pins. An
/// input named `<x>_b` is the complement of input `<x>` when both exist.
pub fn input_bindings(n: &Netlist) -> Vec<InputBinding> {
    let name = |id: NodeId| n.node(id).name.to_ascii_lowercase();
    let complement_of = |id: NodeId| {
        let nm = name(id);
        let stem = nm.strip_suffix("_b")?;
        n.inputs().iter().copied().find(|&o| name(o) == stem)
    };
    let primaries: Vec<NodeId> = n
        .inputs()
        .iter()
        .copied()
        .filter(|&id| complement_of(id).is_none())
        .collect();
    n.inputs()
        .iter()
        .map(|&id| match complement_of(id) {
            Some(stem) => InputBinding {
                node: id,
                primary: primaries.iter().position(|&p| p == stem).unwrap(),
                inverted: true,
            },
            None => InputBinding {
                node: id,
                primary: primaries.iter().position(|&p| p == id).unwrap(),
                inverted: false,
            },
        })
        .collect()
}

pub(crate) fn primary_names(n: &Netlist, bindings: &[InputBinding]) -> Vec<String> {
    bindings
        .iter()
        .filter(|b| !b.inverted)
        .map(|b| n.node(b.node).name.clone())
        .collect()
}

pub(crate) fn vector_for(bindings: &[InputBinding], bits: &[bool]) -> InputVector {
    bindings
        .iter()
        .map(|b| (b.node, LogicValue::from_bool(bits[b.primary] ^ b.inverted)))
        .collect()
}

/// Primary input bits for row `row`; the first input is the most significant.
pub(crate) fn row_bits(row: usize, width: usize) -> Vec<bool> {
    (0..width).map(|i| row >> (width - 1 - i) & 1 == 1).collect()
}

/// Node states at the end of each phase of one power-clock cycle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CycleStates {
    pub wait: NodeStates,
    pub evaluate: NodeStates,
    pub hold: NodeStates,
    pub recover: NodeStates,
}

/// Runs Wait, Evaluate, Hold and Recover in order with charge carried
/// between phases.
pub fn settle_cycle(
    n: &Netlist,
    inputs: &InputVector,
    cfg: &EvalConfig,
    prev: Option<&NodeStates>,
) -> Result<CycleStates, EvalError> {
    let wait = evaluate(n, inputs, &cfg.with_phase(ClockPhase::Wait), prev)?;
    let evaluate_s = evaluate(n, inputs, &cfg.with_phase(ClockPhase::Evaluate), Some(&wait))?;
    let hold = evaluate(n, inputs, &cfg.with_phase(ClockPhase::Hold), Some(&evaluate_s))?;
    let recover = evaluate(n, inputs, &cfg.with_phase(ClockPhase::Recover), Some(&hold))?;
    Ok(CycleStates {
        wait,
        evaluate: evaluate_s,
        hold,
        recover,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartMode {
    /// Every row starts from an all-Z state.
    Cold,
    /// Each row starts from the state left by the previous row.
    Warm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthRow {
    pub inputs: Vec<bool>,
    pub outputs: Vec<NodeState>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthTable {
    pub input_names: Vec<String>,
    pub output_names: Vec<String>,
    pub rows: Vec<TruthRow>,
}

impl TruthTable {
    pub fn output(&self, row: usize, name: &str) -> Option<&NodeState> {
        let k = self
            .output_names
            .iter()
            .position(|o| o.eq_ignore_ascii_case(name))?;
        self.rows.get(row).map(|r| &r.outputs[k])
    }

    pub fn to_csv(&self) -> String {
        let mut s = self
            .input_names
            .iter()
            .chain(&self.output_names)
            .cloned()
            .collect::<Vec<_>>()
            .join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r
                .inputs
                .iter()
                .map(|&b| if b { "1".to_string() } else { "0".to_string() })
                .chain(r.outputs.iter().map(NodeState::symbol))
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("row {row}: {source}")]
pub struct TruthTableError {
    pub row: usize,
    #[source]
    pub source: EvalError,
}

pub fn truth_table(n: &Netlist, cfg: &EvalConfig) -> Result<TruthTable, TruthTableError> {
    truth_table_with(n, cfg, StartMode::Cold)
}

/// Output states for every primary input combination in ascending binary
/// order. Power-clocked netlists are sampled in the Hold phase.
pub fn truth_table_with(
    n: &Netlist,
    cfg: &EvalConfig,
    mode: StartMode,
) -> Result<TruthTable, TruthTableError> {
    let bindings = input_bindings(n);
    let input_names = primary_names(n, &bindings);
    let width = input_names.len();
    let clocked = n.has_power_clock();
    let mut carried: Option<NodeStates> = None;
    let mut rows = Vec::with_capacity(1 << width);
    for row in 0..1usize << width {
        let bits = row_bits(row, width);
        let x = vector_for(&bindings, &bits);
        let prev = match mode {
            StartMode::Cold => None,
            StartMode::Warm => carried.as_ref(),
        };
        let wrap = |source| TruthTableError { row, source };
        let (sample, last) = if clocked {
            let c = settle_cycle(n, &x, cfg, prev).map_err(wrap)?;
            (c.hold, c.recover)
        } else {
            let s = evaluate(n, &x, cfg, prev).map_err(wrap)?;
            (s.clone(), s)
        };
        rows.push(TruthRow {
            inputs: bits,
            outputs: n.outputs().iter().map(|&o| sample[o]).collect(),
        });
        carried = Some(last);
    }
    Ok(TruthTable {
        input_names,
        output_names: n.outputs().iter().map(|&o| n.node(o).name.clone()).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    fn nand_with_complement_pin() -> Netlist {
        parse_netlist(
            ".NODE vdd ROLE=VDD\n.NODE gnd ROLE=GND\n.NODE a ROLE=IN\n.NODE b ROLE=IN\n.NODE a_b ROLE=IN\n\
             .NODE y C=5f ROLE=OUT\n.NODE m\n\
             MP1 y a vdd P\nMP2 y b vdd P\nMN1 y a m N\nMN2 m b gnd N\n\
             .NODE t C=1f ROLE=OUT\nMN3 t vdd a_b N\n",
        )
        .unwrap()
    }

    #[test]
    fn complement_pins_are_not_primary() {
        let n = nand_with_complement_pin();
        let b = input_bindings(&n);
        assert_eq!(b.len(), 3);
        assert_eq!(primary_names(&n, &b), ["a", "b"]);
        let comp = b.iter().find(|x| x.inverted).unwrap();
        assert_eq!(n.node(comp.node).name, "a_b");
        assert_eq!(comp.primary, 0);
    }

    #[test]
    fn nand_table_and_csv() {
        let n = nand_with_complement_pin();
        let t = truth_table(&n, &EvalConfig::default()).unwrap();
        assert_eq!(t.rows.len(), 4);
        let ys: Vec<String> = (0..4).map(|r| t.output(r, "y").unwrap().symbol()).collect();
        assert_eq!(ys, ["1", "1", "1", "0"]);
        // t follows a_b through an nMOS pass gate.
        let ts: Vec<String> = (0..4).map(|r| t.output(r, "t").unwrap().symbol()).collect();
        assert_eq!(ts, ["1d", "1d", "0", "0"]);
        assert_eq!(
            t.to_csv(),
            "a,b,y,t\n0,0,1,1d\n0,1,1,1d\n1,0,1,0\n1,1,0,0\n"
        );
    }

    #[test]
    fn warm_start_matches_cold_for_static_logic() {
        let n = nand_with_complement_pin();
        let cfg = EvalConfig::default();
        assert_eq!(
            truth_table_with(&n, &cfg, StartMode::Warm).unwrap(),
            truth_table(&n, &cfg).unwrap()
        );
    }

    #[test]
    fn row_bit_order() {
        assert_eq!(row_bits(1, 3), [false, false, true]);
        assert_eq!(row_bits(4, 3), [true, false, false]);
    }
}
