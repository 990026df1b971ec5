//! Effective resistance of the conducting switch network by nodal analysis.

use thiserror::Error;

use crate::netlist::{Netlist, NodeId};
use crate::switch_eval::{switch_is_on, NodeStates, SwitchState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResistError {
    #[error("terminal {0} out of range for {1} nodes")]
    TerminalOutOfRange(usize, usize),
    #[error("terminals must differ")]
    SameTerminals,
    #[error("edge ({0}, {1}) has invalid conductance {2}")]
    InvalidConductance(usize, usize, f64),
    #[error("singular nodal system")]
    SingularSystem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceNetwork {
    node_count: usize,
    edges: Vec<(usize, usize, f64)>,
    terminal_a: usize,
    terminal_b: usize,
}

impl ConductanceNetwork {
    /// Edges are `(a, b, siemens)`. Self-loops are accepted and ignored.
    pub fn new(
        node_count: usize,
        edges: Vec<(usize, usize, f64)>,
        terminal_a: usize,
        terminal_b: usize,
    ) -> Result<Self, ResistError> {
        for t in [terminal_a, terminal_b] {
            if t >= node_count {
                return Err(ResistError::TerminalOutOfRange(t, node_count));
            }
        }
        if terminal_a == terminal_b {
            return Err(ResistError::SameTerminals);
        }
        for &(a, b, g) in &edges {
            if a >= node_count || b >= node_count {
                return Err(ResistError::TerminalOutOfRange(a.max(b), node_count));
            }
            if !(g > 0.0 && g.is_finite()) {
                return Err(ResistError::InvalidConductance(a, b, g));
            }
        }
        Ok(ConductanceNetwork {
            node_count,
            edges,
            terminal_a,
            terminal_b,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn terminals(&self) -> (usize, usize) {
        (self.terminal_a, self.terminal_b)
    }

    pub fn with_edge(mut self, a: usize, b: usize, g: f64) -> Result<Self, ResistError> {
        self.edges.push((a, b, g));
        ConductanceNetwork::new(self.node_count, self.edges, self.terminal_a, self.terminal_b)
    }

    pub fn swapped(&self) -> Self {
        ConductanceNetwork {
            terminal_a: self.terminal_b,
            terminal_b: self.terminal_a,
            ..self.clone()
        }
    }
}

/// Network of the devices that are definitely on in `states`, between `rail`
/// and `target`. Maybe-on devices are left out.
pub fn from_on_switches(
    n: &Netlist,
    states: &NodeStates,
    rail: NodeId,
    target: NodeId,
) -> ConductanceNetwork {
    from_on_switches_merged(n, states, &[rail], &[], target)
}

/// Like [`from_on_switches`] but with several source nodes shorted into one
/// terminal, and with `blocked` nodes removed together with their devices.
/// Panics if `target` is itself a source or blocked.
pub fn from_on_switches_merged(
    n: &Netlist,
    states: &NodeStates,
    sources: &[NodeId],
    blocked: &[NodeId],
    target: NodeId,
) -> ConductanceNetwork {
    const GONE: usize = usize::MAX;
    let mut map = vec![GONE; n.node_count()];
    let mut next = 1;
    for id in n.node_ids() {
        if sources.contains(&id) {
            map[id.index()] = 0;
        } else if !blocked.contains(&id) {
            map[id.index()] = next;
            next += 1;
        }
    }
    let edges = n
        .devices()
        .iter()
        .filter(|d| switch_is_on(d, &states[d.gate]) == SwitchState::On)
        .filter_map(|d| {
            let (a, b) = (map[d.source.index()], map[d.drain.index()]);
            (a != GONE && b != GONE && a != b).then(|| (a, b, 1.0 / d.on_resistance))
        })
        .collect();
    let t = map[target.index()];
    assert!(t != GONE && t != 0, "target must not be a source or blocked");
    ConductanceNetwork::new(next, edges, 0, t).expect("device resistances are validated")
}

/// Voltage between the terminals for a unit current injected at terminal a
/// and extracted at terminal b. Infinite when they are not connected.
pub fn effective_resistance(g: &ConductanceNetwork) -> Result<f64, ResistError> {
    let n = g.node_count;
    let mut adj = vec![Vec::new(); n];
    for &(a, b, _) in &g.edges {
        if a != b {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    // Restrict the solve to the component containing terminal a.
    let mut comp = vec![usize::MAX; n];
    let mut order = vec![g.terminal_a];
    comp[g.terminal_a] = 0;
    let mut k = 0;
    while k < order.len() {
        let u = order[k];
        k += 1;
        for &v in &adj[u] {
            if comp[v] == usize::MAX {
                comp[v] = order.len();
                order.push(v);
            }
        }
    }
    if comp[g.terminal_b] == usize::MAX {
        return Ok(f64::INFINITY);
    }

    // Ground terminal b and drop it from the unknowns.
    let ground = comp[g.terminal_b];
    let m = order.len() - 1;
    let idx = |c: usize| if c < ground { c } else { c - 1 };
    let mut lap = vec![vec![0.0; m]; m];
    let mut gmax: f64 = 0.0;
    for &(a, b, cond) in &g.edges {
        if a == b || comp[a] == usize::MAX {
            continue;
        }
        gmax = gmax.max(cond);
        let (ca, cb) = (comp[a], comp[b]);
        if ca != ground {
            lap[idx(ca)][idx(ca)] += cond;
        }
        if cb != ground {
            lap[idx(cb)][idx(cb)] += cond;
        }
        if ca != ground && cb != ground {
            lap[idx(ca)][idx(cb)] -= cond;
            lap[idx(cb)][idx(ca)] -= cond;
        }
    }
    let mut rhs = vec![0.0; m];
    rhs[idx(comp[g.terminal_a])] = 1.0;
    let v = solve(lap, rhs, 1e-15 * gmax)?;
    Ok(v[idx(comp[g.terminal_a])])
}

/// Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, tiny: f64) -> Result<Vec<f64>, ResistError> {
    let m = b.len();
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        if !(a[piv][col].abs() > tiny) {
            return Err(ResistError::SingularSystem);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..m {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..m {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let s: f64 = (r + 1..m).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Ok(x)
}
