// Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use adiasim::netlist::{DeviceKind, Netlist, NetlistBuilder, NodeRole};
use adiasim::switch_eval::{InputVector, LogicValue};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs())
}

// ---- switch networks ----

/// Random netlist without feedback. Internal nodes are split into ordered
/// groups; a device's channel stays inside one group (plus driven nodes) and
/// its gate comes from driven nodes or earlier groups.
pub struct DagCase {
    pub netlist: Netlist,
    pub inputs: InputVector,
    pub group: Vec<Option<usize>>,
}

pub fn random_dag<R: Rng>(rng: &mut R) -> DagCase {
    let k = rng.gen_range(2..=3);
    let m = rng.gen_range(1..=(10 - k).min(8));
    let groups = rng.gen_range(1..=3usize);
    let mut b = NetlistBuilder::new("dag");
    b.node("vdd", 0.0, NodeRole::SupplyRail).unwrap();
    b.node("gnd", 0.0, NodeRole::GroundRail).unwrap();
    let mut driven = vec!["vdd".to_string(), "gnd".to_string()];
    for i in 0..k {
        let name = format!("i{i}");
        b.node(&name, 0.0, NodeRole::Input).unwrap();
        driven.push(name);
    }
    let mut gid: Vec<usize> = (0..m).map(|_| rng.gen_range(0..groups)).collect();
    gid.sort_unstable();
    let internal: Vec<String> = (0..m).map(|i| format!("n{i}")).collect();
    for name in &internal {
        b.node(name, 1e-15, NodeRole::Internal).unwrap();
    }

    let mut count = 0;
    let mut add = |b: &mut NetlistBuilder, rng: &mut R, own: usize| {
        let g = gid[own];
        let mut pool: Vec<&String> = driven.iter().collect();
        pool.extend(internal.iter().enumerate().filter(|(i, _)| gid[*i] == g && *i != own).map(|(_, s)| s));
        let other = *pool.choose(rng).unwrap();
        let mut gates: Vec<&String> = driven.iter().collect();
        gates.extend(internal.iter().enumerate().filter(|(i, _)| gid[*i] < g).map(|(_, s)| s));
        let gate = *gates.choose(rng).unwrap();
        let kind = if rng.gen_bool(0.5) { DeviceKind::NMos } else { DeviceKind::PMos };
        let r = rng.gen_range(1e3..50e3);
        count += 1;
        let (d, s) = if rng.gen_bool(0.5) { (&internal[own], other) } else { (other, &internal[own]) };
        b.device(&format!("M{count}"), kind, d, gate, s, r);
    };
    for own in 0..m {
        add(&mut b, rng, own);
    }
    for _ in 0..rng.gen_range(0..=2 * m) {
        let own = rng.gen_range(0..m);
        add(&mut b, rng, own);
    }
    let netlist = b.build().expect("generated netlist is valid");

    let mut inputs = BTreeMap::new();
    for &id in netlist.inputs() {
        inputs.insert(id, LogicValue::from_bool(rng.gen_bool(0.5)));
    }
    let group = netlist
        .node_ids()
        .map(|id| {
            let name = &netlist.node(id).name;
            internal.iter().position(|s| s == name).map(|i| gid[i])
        })
        .collect();
    DagCase { netlist, inputs, group }
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Sym {
    Lo(bool),
    Hi(bool),
    X,
    Z,
}

impl Sym {
    fn text(self) -> String {
        match self {
            Sym::Lo(true) => "0".into(),
            Sym::Lo(false) => "0d".into(),
            Sym::Hi(true) => "1".into(),
            Sym::Hi(false) => "1d".into(),
            Sym::X => "X".into(),
            Sym::Z => "Z".into(),
        }
    }

    fn bit(self) -> Option<bool> {
        match self {
            Sym::Lo(_) => Some(false),
            Sym::Hi(_) => Some(true),
            _ => None,
        }
    }
}

/// Enumerates every simple path from `start` through conducting devices and
/// undriven nodes to a driven node. Returns (reaches 1, reaches 1 through
/// pMOS only, reaches 0, reaches 0 through nMOS only).
fn paths(
    n: &Netlist,
    on: &[bool],
    fixed: &[Option<bool>],
    start: usize,
) -> (bool, bool, bool, bool) {
    let mut acc = (false, false, false, false);
    let mut visited = vec![false; n.node_count()];
    fn walk(
        n: &Netlist,
        on: &[bool],
        fixed: &[Option<bool>],
        u: usize,
        all_p: bool,
        all_n: bool,
        visited: &mut [bool],
        acc: &mut (bool, bool, bool, bool),
    ) {
        visited[u] = true;
        for (di, d) in n.devices().iter().enumerate() {
            if !on[di] {
                continue;
            }
            let v = if d.source.index() == u {
                d.drain.index()
            } else if d.drain.index() == u {
                d.source.index()
            } else {
                continue;
            };
            if visited[v] {
                continue;
            }
            let p = all_p && d.kind == DeviceKind::PMos;
            let q = all_n && d.kind == DeviceKind::NMos;
            match fixed[v] {
                Some(true) => {
                    acc.0 = true;
                    acc.1 |= p;
                }
                Some(false) => {
                    acc.2 = true;
                    acc.3 |= q;
                }
                None => walk(n, on, fixed, v, p, q, visited, acc),
            }
        }
        visited[u] = false;
    }
    walk(n, on, fixed, start, true, true, &mut visited, &mut acc);
    acc
}

/// Cold-start steady state of a feedback-free netlist, one symbol per node.
pub fn reach_oracle(case: &DagCase) -> Vec<String> {
    let n = &case.netlist;
    let count = n.node_count();
    let fixed: Vec<Option<bool>> = n
        .node_ids()
        .map(|id| match n.node(id).role {
            NodeRole::SupplyRail => Some(true),
            NodeRole::GroundRail => Some(false),
            NodeRole::Input => case.inputs[&id].as_bool(),
            _ => None,
        })
        .collect();
    let mut sym: Vec<Sym> = fixed
        .iter()
        .map(|f| match f {
            Some(true) => Sym::Hi(true),
            Some(false) => Sym::Lo(true),
            None => Sym::Z,
        })
        .collect();
    let groups = case.group.iter().flatten().max().map_or(0, |g| g + 1);
    for g in 0..groups {
        let members: Vec<usize> = (0..count).filter(|&i| case.group[i] == Some(g)).collect();
        let devs: Vec<usize> = (0..n.devices().len())
            .filter(|&di| {
                let d = &n.devices()[di];
                members.contains(&d.source.index()) || members.contains(&d.drain.index())
            })
            .collect();
        let mut unknown_gates: Vec<usize> = devs
            .iter()
            .map(|&di| n.devices()[di].gate.index())
            .filter(|&gi| sym[gi].bit().is_none())
            .collect();
        unknown_gates.sort_unstable();
        unknown_gates.dedup();

        let mut outcomes: Vec<Vec<Sym>> = Vec::new();
        for mask in 0u32..(1 << unknown_gates.len()) {
            let gate_bit = |gi: usize| match sym[gi].bit() {
                Some(b) => b,
                None => mask >> unknown_gates.iter().position(|&u| u == gi).unwrap() & 1 == 1,
            };
            let on: Vec<bool> = n
                .devices()
                .iter()
                .enumerate()
                .map(|(di, d)| {
                    devs.contains(&di)
                        && match d.kind {
                            DeviceKind::NMos => gate_bit(d.gate.index()),
                            DeviceKind::PMos => !gate_bit(d.gate.index()),
                        }
                })
                .collect();
            outcomes.push(
                members
                    .iter()
                    .map(|&i| match paths(n, &on, &fixed, i) {
                        (true, s1, true, s0) if s1 && !s0 => Sym::Hi(true),
                        (true, s1, true, s0) if s0 && !s1 => Sym::Lo(true),
                        (true, _, true, _) => Sym::X,
                        (true, s1, false, _) => Sym::Hi(s1),
                        (false, _, true, s0) => Sym::Lo(s0),
                        _ => Sym::Z,
                    })
                    .collect(),
            );
        }
        for (k, &i) in members.iter().enumerate() {
            let first = outcomes[0][k];
            sym[i] = if outcomes.iter().all(|o| o[k] == first) {
                first
            } else {
                match first.bit() {
                    Some(b) if outcomes.iter().all(|o| o[k].bit() == Some(b)) => {
                        if b {
                            Sym::Hi(false)
                        } else {
                            Sym::Lo(false)
                        }
                    }
                    _ => Sym::X,
                }
            };
        }
    }
    sym.into_iter().map(Sym::text).collect()
}

// ---- resistor networks ----

/// Random series-parallel network between nodes 0 and 1 built by recursive
/// composition, with resistances in ohms.
pub fn random_series_parallel<R: Rng>(rng: &mut R, depth: u32) -> (usize, Vec<(usize, usize, f64)>) {
    let mut edges = Vec::new();
    let mut next = 2;
    fn grow<R: Rng>(
        rng: &mut R,
        a: usize,
        b: usize,
        depth: u32,
        next: &mut usize,
        edges: &mut Vec<(usize, usize, f64)>,
    ) {
        if depth == 0 || rng.gen_bool(0.3) {
            edges.push((a, b, 10f64.powf(rng.gen_range(2.0..5.0))));
            return;
        }
        if rng.gen_bool(0.5) {
            let mid = *next;
            *next += 1;
            grow(rng, a, mid, depth - 1, next, edges);
            grow(rng, mid, b, depth - 1, next, edges);
        } else {
            grow(rng, a, b, depth - 1, next, edges);
            grow(rng, a, b, depth - 1, next, edges);
        }
    }
    grow(rng, 0, 1, depth, &mut next, &mut edges);
    edges.shuffle(rng);
    (next, edges)
}

/// Resistance between nodes 0 and 1 by repeated series and parallel
/// reduction of the edge list. None if the network does not reduce.
pub fn sp_reduce(mut edges: Vec<(usize, usize, f64)>) -> Option<f64> {
    loop {
        // Parallel: combine edges with the same endpoints.
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (a, b, r) in edges.drain(..) {
            let key = (a.min(b), a.max(b));
            merged
                .entry(key)
                .and_modify(|g| *g += 1.0 / r)
                .or_insert(1.0 / r);
        }
        edges = merged.into_iter().map(|((a, b), g)| (a, b, 1.0 / g)).collect();
        if edges.len() == 1 && (edges[0].0, edges[0].1) == (0, 1) {
            return Some(edges[0].2);
        }
        // Series: eliminate one inner node of degree two.
        let mut degree: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &(a, b, _)) in edges.iter().enumerate() {
            degree.entry(a).or_default().push(i);
            degree.entry(b).or_default().push(i);
        }
        let (node, pair) = degree
            .into_iter()
            .find(|(v, es)| *v > 1 && es.len() == 2)?;
        let (e1, e2) = (edges[pair[0]], edges[pair[1]]);
        let far = |e: (usize, usize, f64)| if e.0 == node { e.1 } else { e.0 };
        let joined = (far(e1), far(e2), e1.2 + e2.2);
        edges = edges
            .into_iter()
            .enumerate()
            .filter(|(i, _)| *i != pair[0] && *i != pair[1])
            .map(|(_, e)| e)
            .chain(std::iter::once(joined))
            .collect();
    }
}

/// Resistance between nodes `a` and `b` from Gauss-Seidel relaxation of the
/// node potentials with `a` held at 1 V and `b` at 0 V.
pub fn gauss_seidel_resistance(nodes: usize, edges: &[(usize, usize, f64)], a: usize, b: usize) -> f64 {
    let mut v = vec![0.0; nodes];
    v[a] = 1.0;
    for _ in 0..20_000 {
        let mut delta: f64 = 0.0;
        for i in 0..nodes {
            if i == a || i == b {
                continue;
            }
            let (mut gv, mut gs) = (0.0, 0.0);
            for &(x, y, r) in edges {
                let other = if x == i { y } else if y == i { x } else { continue };
                gv += v[other] / r;
                gs += 1.0 / r;
            }
            if gs > 0.0 {
                let nv = gv / gs;
                delta = delta.max((nv - v[i]).abs());
                v[i] = nv;
            }
        }
        if delta < 1e-15 {
            break;
        }
    }
    let current: f64 = edges
        .iter()
        .map(|&(x, y, r)| {
            if x == a {
                (v[a] - v[y]) / r
            } else if y == a {
                (v[a] - v[x]) / r
            } else {
                0.0
            }
        })
        .sum();
    1.0 / current
}
