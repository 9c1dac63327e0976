//! Per-pair optimal paths and their union, the MQE network.
//!
//! Two routes compute the same optimum:
//!
//! * [`pollack_maxmin`] + [`optimal_m`] + [`reconstruct_path`]: the dense
//!   max-min matrix iteration `Q(m)_jk = max_l min(Q(0)_jl, Q(m-1)_lk)`,
//!   an argmax over the intermediate-node budget `m`, and a shortest path
//!   in the threshold graph `A = {e : q(e) >= Q(m*)_jk}`. It retains every
//!   matrix and is meant for small instances.
//! * [`build_mqe`]: the same recursion run row by row (one source at a
//!   time), keeping only two rows plus a log of improvements from which
//!   paths are read back. Relaxations are restricted to nodes whose value
//!   changed in the previous step and to edges above the current row
//!   minimum; neither restriction changes any value. Among equally good
//!   predecessors the one with the widest last link is kept, which makes
//!   stored paths, and everything counted on them, independent of node
//!   labels whenever link lengths are distinct.
//!
//! Both are checked against [`brute_force_optimal`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{MqeError, Result};
use crate::geometry::{distance_matrix, Provenance, UserSet};
use crate::qchannel::{
    check_alpha, check_probability, efficiency, CapacitanceMatrix, PairEfficiency, PathDescriptor,
    INFINITE_CAPACITANCE,
};

/// Largest instance [`brute_force_optimal`] accepts.
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// `Q(0), Q(1), ..., Q(M)` where `Q(m)_jk` is the best bottleneck over
/// `j -> k` paths with at most `m` intermediate nodes and `Q(M) = Q(M+1)`.
#[derive(Debug, Clone)]
pub struct MaxMinSequence {
    n: usize,
    matrices: Vec<Vec<f64>>,
}

impl MaxMinSequence {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Index `M` of the converged matrix.
    pub fn converged_at(&self) -> usize {
        self.matrices.len() - 1
    }

    /// `Q(m)_jk`; for `m > M` this is the converged value.
    pub fn get(&self, m: usize, j: usize, k: usize) -> f64 {
        self.matrices[m.min(self.converged_at())][j * self.n + k]
    }

    pub fn matrix(&self, m: usize) -> &[f64] {
        &self.matrices[m]
    }
}

/// Dense max-min iteration until two consecutive matrices agree.
pub fn pollack_maxmin(q0: &CapacitanceMatrix) -> MaxMinSequence {
    let n = q0.len();
    let base = q0.as_slice().to_vec();
    let mut matrices = vec![base];
    // A simple path has at most n - 2 intermediate nodes.
    while matrices.len() < n.saturating_sub(1) {
        let prev = matrices.last().expect("non-empty");
        let mut next = vec![0.0; n * n];
        for j in 0..n {
            let q0j = q0.row(j);
            for k in 0..n {
                let mut best = f64::NEG_INFINITY;
                for l in 0..n {
                    let v = q0j[l].min(prev[l * n + k]);
                    if v > best {
                        best = v;
                    }
                }
                next[j * n + k] = best;
            }
        }
        if next == *prev {
            break;
        }
        matrices.push(next);
    }
    MaxMinSequence { n, matrices }
}

/// Chosen intermediate-node budget for one ordered pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    pub m_star: usize,
    /// `Q(m*)_jk`, the capacitance of the optimal path.
    pub q_star: f64,
    pub efficiency: f64,
}

/// Per-ordered-pair budgets, row-major; the diagonal is unused.
#[derive(Debug, Clone)]
pub struct BudgetTable {
    n: usize,
    entries: Vec<Budget>,
}

impl BudgetTable {
    pub fn get(&self, j: usize, k: usize) -> Budget {
        self.entries[j * self.n + k]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

/// `m* = argmax_m (1 - alpha) Q(m)_jk + alpha ln(1 - p) m`, smallest `m`
/// on ties. For `p = 1` every pair keeps the direct link.
pub fn optimal_m(seq: &MaxMinSequence, alpha: f64, p: f64) -> Result<BudgetTable> {
    check_alpha(alpha)?;
    check_probability(p)?;
    let n = seq.n;
    let top = if p >= 1.0 { 0 } else { seq.converged_at() };
    let mut entries = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let mut best = Budget { m_star: 0, q_star: seq.get(0, j, k), efficiency: efficiency(seq.get(0, j, k), 0, alpha, p) };
            for m in 1..=top {
                let q = seq.get(m, j, k);
                let e = efficiency(q, m, alpha, p);
                if e > best.efficiency {
                    best = Budget { m_star: m, q_star: q, efficiency: e };
                }
            }
            entries.push(best);
        }
    }
    Ok(BudgetTable { n, entries })
}

/// A maximal-efficiency path for one ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPath {
    pub path: PathDescriptor,
    /// Intermediate-node budget selected by the iteration.
    pub m_star: usize,
    /// Efficiency as booked by the iteration, `eff(Q(m*), m*)`.
    pub efficiency: f64,
    /// Edge realizing the path capacitance, as `(min, max)` node indices.
    pub bottleneck: (usize, usize),
}

impl OptimalPath {
    fn from_nodes(nodes: Vec<usize>, q0: &CapacitanceMatrix, m_star: usize, eff: f64, p: f64) -> Result<Self> {
        let bottleneck = bottleneck_edge(&nodes, q0);
        let path = PathDescriptor::new(nodes, q0, p)?;
        Ok(OptimalPath { path, m_star, efficiency: eff, bottleneck })
    }

    pub fn nodes(&self) -> &[usize] {
        &self.path.nodes
    }

    pub fn capacitance(&self) -> f64 {
        self.path.capacitance
    }

    pub fn length(&self) -> usize {
        self.path.length()
    }
}

/// Minimum-capacitance edge; ties go to the lexicographically smallest
/// sorted pair.
fn bottleneck_edge(nodes: &[usize], q0: &CapacitanceMatrix) -> (usize, usize) {
    let mut best: Option<(f64, (usize, usize))> = None;
    for w in nodes.windows(2) {
        let q = q0.get(w[0], w[1]);
        let e = (w[0].min(w[1]), w[0].max(w[1]));
        best = match best {
            None => Some((q, e)),
            Some((bq, be)) if q < bq || (q == bq && e < be) => Some((q, e)),
            keep => keep,
        };
    }
    best.expect("path has an edge").1
}

/// Shortest path from `pair.0` to `pair.1` in the graph of links with
/// capacitance `>= q_star`. Among shortest paths the lexicographically
/// smallest node sequence is returned. Fails if that path is longer than
/// `m_star + 1` edges or its bottleneck is not `q_star`.
pub fn reconstruct_path(
    q0: &CapacitanceMatrix,
    pair: (usize, usize),
    m_star: usize,
    q_star: f64,
    alpha: f64,
    p: f64,
) -> Result<OptimalPath> {
    let n = q0.len();
    let (j, k) = pair;
    if j >= n || k >= n || j == k {
        return Err(MqeError::invalid(format!("bad pair ({j}, {k}) for {n} users")));
    }
    let fail = |reason: String| MqeError::ReconstructionFailure { a: j, b: k, reason };
    // Hop distances to k inside A.
    let mut dist = vec![usize::MAX; n];
    dist[k] = 0;
    let mut queue = std::collections::VecDeque::from([k]);
    while let Some(u) = queue.pop_front() {
        if u == j {
            break;
        }
        for v in 0..n {
            if v != u && dist[v] == usize::MAX && q0.get(u, v) >= q_star {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    if dist[j] == usize::MAX {
        return Err(fail(format!("no path with capacitance >= {q_star}")));
    }
    if dist[j] > m_star + 1 {
        return Err(fail(format!("shortest admissible path has {} edges, budget allows {}", dist[j], m_star + 1)));
    }
    let mut nodes = vec![j];
    let mut u = j;
    while u != k {
        let next = (0..n)
            .find(|&v| v != u && dist[v] != usize::MAX && dist[v] + 1 == dist[u] && q0.get(u, v) >= q_star)
            .ok_or_else(|| fail("broken distance labels".into()))?;
        nodes.push(next);
        u = next;
    }
    let path = OptimalPath::from_nodes(nodes, q0, m_star, efficiency(q_star, m_star, alpha, p), p)?;
    if path.capacitance() != q_star {
        return Err(fail(format!("path bottleneck {} differs from {q_star}", path.capacitance())));
    }
    Ok(path)
}

/// Exhaustive optimum over all simple paths of a small instance.
#[derive(Debug, Clone)]
pub struct BruteForceResult {
    /// Among maximizers, the one with fewest intermediates, then the
    /// lexicographically smallest.
    pub best: OptimalPath,
    /// Number of simple paths attaining the maximal efficiency.
    pub degeneracy: usize,
}

pub fn brute_force_optimal(q0: &CapacitanceMatrix, alpha: f64, p: f64, pair: (usize, usize)) -> Result<BruteForceResult> {
    check_alpha(alpha)?;
    check_probability(p)?;
    let n = q0.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(MqeError::TooLarge { n, limit: BRUTE_FORCE_LIMIT });
    }
    let (a, b) = pair;
    if a >= n || b >= n || a == b {
        return Err(MqeError::invalid(format!("bad pair ({a}, {b}) for {n} users")));
    }

    struct Search<'a> {
        q0: &'a CapacitanceMatrix,
        target: usize,
        alpha: f64,
        p: f64,
        stack: Vec<usize>,
        on_stack: Vec<bool>,
        best: Option<(f64, Vec<usize>)>,
        degeneracy: usize,
    }

    impl Search<'_> {
        fn visit(&mut self, u: usize, cap: f64) {
            for v in 0..self.q0.len() {
                if self.on_stack[v] {
                    continue;
                }
                let c = cap.min(self.q0.get(u, v));
                if v == self.target {
                    let e = efficiency(c, self.stack.len() - 1, self.alpha, self.p);
                    match &self.best {
                        Some((be, _)) if e < *be => {}
                        Some((be, bn)) if e == *be => {
                            self.degeneracy += 1;
                            // DFS order is lexicographic, so only a shorter tie replaces.
                            if self.stack.len() + 1 < bn.len() {
                                let mut nodes = self.stack.clone();
                                nodes.push(v);
                                self.best = Some((e, nodes));
                            }
                        }
                        _ => {
                            let mut nodes = self.stack.clone();
                            nodes.push(v);
                            self.best = Some((e, nodes));
                            self.degeneracy = 1;
                        }
                    }
                    continue;
                }
                self.on_stack[v] = true;
                self.stack.push(v);
                self.visit(v, c);
                self.stack.pop();
                self.on_stack[v] = false;
            }
        }
    }

    let mut s = Search { q0, target: b, alpha, p, stack: vec![a], on_stack: vec![false; n], best: None, degeneracy: 0 };
    s.on_stack[a] = true;
    s.visit(a, INFINITE_CAPACITANCE);
    let (eff, nodes) = s.best.expect("direct link always exists");
    let m_star = nodes.len() - 2;
    let best = OptimalPath::from_nodes(nodes, q0, m_star, eff, p)?;
    Ok(BruteForceResult { best, degeneracy: s.degeneracy })
}

/// Union of per-pair optimal paths.
///
/// Paths are stored once per unordered pair `a < b`; the `b -> a` path is the
/// reverse, so the table is symmetric.
#[derive(Debug, Clone)]
pub struct MqeNetwork {
    users: UserSet,
    q0: CapacitanceMatrix,
    alpha: f64,
    p: f64,
    pairs: Vec<PairRecord>,
    nodes: Vec<u32>,
    edges: Vec<(usize, usize)>,
    length_mismatches: usize,
}

#[derive(Debug, Clone, Copy)]
struct PairRecord {
    m_star: u32,
    q_star: f64,
    efficiency: f64,
    start: usize,
    len: u32,
}

impl MqeNetwork {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn users(&self) -> &UserSet {
        &self.users
    }

    pub fn capacitances(&self) -> &CapacitanceMatrix {
        &self.q0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn provenance(&self) -> Provenance {
        self.users.provenance()
    }

    fn record(&self, a: usize, b: usize) -> &PairRecord {
        let n = self.len();
        let (i, j) = (a.min(b), a.max(b));
        // Row-major upper triangle without the diagonal.
        let idx = i * (2 * n - i - 1) / 2 + (j - i - 1);
        &self.pairs[idx]
    }

    fn raw_nodes(&self, a: usize, b: usize) -> &[u32] {
        let r = self.record(a, b);
        &self.nodes[r.start..r.start + r.len as usize]
    }

    /// `m*` for the ordered pair.
    pub fn m_star(&self, a: usize, b: usize) -> usize {
        self.record(a, b).m_star as usize
    }

    /// Capacitance of the chosen `a -> b` path.
    pub fn pair_capacitance(&self, a: usize, b: usize) -> f64 {
        self.record(a, b).q_star
    }

    /// Booked efficiency `eff(Q(m*), m*)` of the pair.
    pub fn pair_efficiency(&self, a: usize, b: usize) -> f64 {
        self.record(a, b).efficiency
    }

    /// Topological length of the stored `a -> b` path.
    pub fn path_length(&self, a: usize, b: usize) -> usize {
        self.record(a, b).len as usize - 1
    }

    /// Node sequence of the stored `a -> b` path.
    pub fn path_nodes(&self, a: usize, b: usize) -> Vec<usize> {
        let raw = self.raw_nodes(a, b);
        let mut v: Vec<usize> = raw.iter().map(|&x| x as usize).collect();
        if a > b {
            v.reverse();
        }
        v
    }

    /// Intermediate nodes of the stored `a -> b` path (unordered).
    pub fn intermediates(&self, a: usize, b: usize) -> impl Iterator<Item = usize> + '_ {
        let raw = self.raw_nodes(a, b);
        raw[1..raw.len() - 1].iter().map(|&x| x as usize)
    }

    pub fn path(&self, a: usize, b: usize) -> OptimalPath {
        let r = self.record(a, b);
        OptimalPath::from_nodes(self.path_nodes(a, b), &self.q0, r.m_star as usize, r.efficiency, self.p)
            .expect("stored paths are simple")
    }

    /// Unordered edges `(i, j)`, `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Link density `2 |E| / (N (N - 1))`.
    pub fn density(&self) -> f64 {
        let n = self.len() as f64;
        2.0 * self.edges.len() as f64 / (n * (n - 1.0))
    }

    /// Pairs whose reconstructed length differs from `m* + 1`.
    pub fn length_mismatches(&self) -> usize {
        self.length_mismatches
    }

    pub fn efficiency_table(&self) -> Vec<PairEfficiency> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * (n - 1));
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    out.push(PairEfficiency { source: a, target: b, efficiency: self.pair_efficiency(a, b) });
                }
            }
        }
        out
    }

    pub fn network_efficiency(&self) -> f64 {
        crate::qchannel::network_efficiency(self.len(), &self.efficiency_table()).expect("table is complete")
    }

    pub fn to_document(&self) -> NetworkDocument {
        let n = self.len();
        let d = distance_matrix(&self.users);
        let edges = self.edges.iter().map(|&(i, j)| (i, j, d.physical(i, j), self.q0.get(i, j))).collect();
        let mut paths = Vec::with_capacity(n * (n - 1));
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    paths.push((a, b, self.path_nodes(a, b), self.m_star(a, b), self.pair_capacitance(a, b), self.pair_efficiency(a, b)));
                }
            }
        }
        NetworkDocument {
            n,
            side: self.users.side(),
            lambda0: self.users.lambda0(),
            alpha: self.alpha,
            p: self.p,
            seed: match self.users.provenance() {
                Provenance::Seeded(s) => Some(s),
                Provenance::Explicit => None,
            },
            edges,
            paths,
        }
    }

    /// CSV `i,j,d,q` per link, `i < j`, `d` in physical units.
    pub fn write_edge_list<W: std::io::Write>(&self, w: W) -> Result<()> {
        let d = distance_matrix(&self.users);
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["i", "j", "d", "q"])?;
        for &(i, j) in &self.edges {
            wtr.write_record([i.to_string(), j.to_string(), format!("{:.16e}", d.physical(i, j)), format!("{:.16e}", self.q0.get(i, j))])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// CSV `a,b,m_star,length,capacitance,efficiency,nodes` per unordered
    /// pair `a < b`; `nodes` is space separated, `a` first.
    pub fn write_paths<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["a", "b", "m_star", "length", "capacitance", "efficiency", "nodes"])?;
        let n = self.len();
        for a in 0..n {
            for b in a + 1..n {
                let nodes: Vec<String> = self.path_nodes(a, b).iter().map(|x| x.to_string()).collect();
                wtr.write_record([
                    a.to_string(),
                    b.to_string(),
                    self.m_star(a, b).to_string(),
                    self.path_length(a, b).to_string(),
                    format!("{:.16e}", self.pair_capacitance(a, b)),
                    format!("{:.16e}", self.pair_efficiency(a, b)),
                    nodes.join(" "),
                ])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Serialized form of an [`MqeNetwork`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub n: usize,
    #[serde(rename = "L")]
    pub side: f64,
    pub lambda0: f64,
    pub alpha: f64,
    pub p: f64,
    pub seed: Option<u64>,
    /// `(i, j, d_ij, q_ij)` with `d_ij` in physical units.
    pub edges: Vec<(usize, usize, f64, f64)>,
    /// `(a, b, nodes, m_star, capacitance, efficiency)` per ordered pair.
    pub paths: Vec<(usize, usize, Vec<usize>, usize, f64, f64)>,
}

/// Nodes sorted by decreasing link capacitance, per row.
struct NeighborOrder {
    n: usize,
    q: Vec<f64>,
    idx: Vec<u32>,
}

impl NeighborOrder {
    fn new(q0: &CapacitanceMatrix) -> Self {
        let n = q0.len();
        let (q, idx): (Vec<Vec<f64>>, Vec<Vec<u32>>) = (0..n)
            .into_par_iter()
            .map(|l| {
                let row = q0.row(l);
                let mut order: Vec<u32> = (0..n as u32).filter(|&k| k as usize != l).collect();
                order.sort_by(|&x, &y| row[y as usize].total_cmp(&row[x as usize]).then(x.cmp(&y)));
                (order.iter().map(|&k| row[k as usize]).collect(), order)
            })
            .unzip();
        NeighborOrder { n, q: q.concat(), idx: idx.concat() }
    }

    fn row(&self, l: usize) -> (&[f64], &[u32]) {
        let w = self.n - 1;
        (&self.q[l * w..(l + 1) * w], &self.idx[l * w..(l + 1) * w])
    }
}

/// Maximum spanning tree (dense Prim) as adjacency lists.
fn max_spanning_tree(q0: &CapacitanceMatrix) -> Vec<Vec<usize>> {
    let n = q0.len();
    let mut in_tree = vec![false; n];
    let mut key = vec![f64::NEG_INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut adj = vec![Vec::new(); n];
    key[0] = INFINITE_CAPACITANCE;
    for _ in 0..n {
        let mut u = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (u == usize::MAX || key[v] > key[u]) {
                u = v;
            }
        }
        in_tree[u] = true;
        if parent[u] != usize::MAX {
            adj[u].push(parent[u]);
            adj[parent[u]].push(u);
        }
        let row = q0.row(u);
        for v in 0..n {
            if !in_tree[v] && row[v] > key[v] {
                key[v] = row[v];
                parent[v] = u;
            }
        }
    }
    adj
}

/// Widest-path (max-min) values from `source` read off the spanning tree.
fn widest_from(tree: &[Vec<usize>], q0: &CapacitanceMatrix, source: usize) -> Vec<f64> {
    let n = tree.len();
    let mut w = vec![f64::NEG_INFINITY; n];
    w[source] = INFINITE_CAPACITANCE;
    let mut stack = vec![source];
    while let Some(u) = stack.pop() {
        for &v in &tree[u] {
            if w[v] == f64::NEG_INFINITY {
                w[v] = w[u].min(q0.get(u, v));
                stack.push(v);
            }
        }
    }
    w
}

/// Improvement log entry: at `step`, the node improved via `pred`; `prev`
/// links to the node's previous entry.
#[derive(Clone, Copy)]
struct LogEntry {
    step: u32,
    pred: u32,
    prev: u32,
}

const NONE: u32 = u32::MAX;

/// `(m*, q*, efficiency, nodes)` of one pair.
type PairSolution = (u32, f64, f64, Vec<u32>);

struct SourceResult {
    records: Vec<PairSolution>,
}

/// Runs the row recursion `r(m)_k = max_l min(r(m-1)_l, Q(0)_lk)` from one
/// source and returns, for every target `k > source`, `(m*, q*, eff, nodes)`.
fn solve_source(
    source: usize,
    q0: &CapacitanceMatrix,
    order: &NeighborOrder,
    tree: &[Vec<usize>],
    alpha: f64,
    p: f64,
) -> Result<SourceResult> {
    let n = q0.len();
    let targets = source + 1..n;
    let mut r: Vec<f64> = q0.row(source).to_vec();
    let mut best_eff: Vec<f64> = r.iter().map(|&q| efficiency(q, 0, alpha, p)).collect();
    let mut best_m = vec![0u32; n];
    let mut best_q = r.clone();

    let mut log: Vec<LogEntry> = Vec::with_capacity(4 * n);
    let mut head = vec![NONE; n];
    for (k, h) in head.iter_mut().enumerate() {
        if k != source {
            *h = log.len() as u32;
            log.push(LogEntry { step: 0, pred: source as u32, prev: NONE });
        }
    }

    let mut active = vec![false; n];
    let mut n_active = 0usize;
    if p < 1.0 {
        let widest = widest_from(tree, q0, source);
        for k in targets.clone() {
            // Could a longer path still strictly beat the current best?
            if efficiency(widest[k], 1, alpha, p) > best_eff[k] {
                active[k] = true;
                n_active += 1;
            }
        }
        let mut frontier: Vec<u32> = (0..n as u32).filter(|&k| k as usize != source).collect();
        let mut r_new = r.clone();
        let mut pred_new = vec![NONE; n];
        // Step at which r_new[k] was last raised, and the link used.
        let mut raised_at = vec![0u32; n];
        let mut pred_q = vec![0.0f64; n];
        let mut m = 1usize;
        while n_active > 0 && !frontier.is_empty() && m + 1 < n {
            let rmin = r.iter().enumerate().filter(|&(k, _)| k != source).map(|(_, &v)| v).fold(f64::INFINITY, f64::min);
            r_new.copy_from_slice(&r);
            for &l in &frontier {
                let l = l as usize;
                let rl = r[l];
                let (qs, ks) = order.row(l);
                for (&q, &k) in qs.iter().zip(ks) {
                    if q <= rmin {
                        break;
                    }
                    let cand = rl.min(q);
                    let k = k as usize;
                    // Equal values prefer the wider last link, so the choice
                    // depends on geometry rather than on labels.
                    if cand > r_new[k] || (cand == r_new[k] && raised_at[k] == m as u32 && q > pred_q[k]) {
                        r_new[k] = cand;
                        pred_new[k] = l as u32;
                        pred_q[k] = q;
                        raised_at[k] = m as u32;
                    }
                }
            }
            frontier.clear();
            for k in 0..n {
                if r_new[k] > r[k] {
                    frontier.push(k as u32);
                    log.push(LogEntry { step: m as u32, pred: pred_new[k], prev: head[k] });
                    head[k] = (log.len() - 1) as u32;
                    if active[k] {
                        let e = efficiency(r_new[k], m, alpha, p);
                        if e > best_eff[k] {
                            best_eff[k] = e;
                            best_m[k] = m as u32;
                            best_q[k] = r_new[k];
                        }
                    }
                }
            }
            std::mem::swap(&mut r, &mut r_new);
            for k in targets.clone() {
                if active[k] {
                    let bound = efficiency(widest[k], m + 1, alpha, p);
                    if bound <= best_eff[k] {
                        active[k] = false;
                        n_active -= 1;
                    }
                }
            }
            m += 1;
        }
    }

    let mut records = Vec::with_capacity(n - source - 1);
    for k in targets {
        let m_star = best_m[k];
        let mut nodes = vec![k as u32];
        let mut cur = k;
        let mut s = m_star;
        loop {
            let mut e = head[cur];
            while e != NONE && log[e as usize].step > s {
                e = log[e as usize].prev;
            }
            if e == NONE {
                return Err(MqeError::ReconstructionFailure { a: source, b: k, reason: format!("no log entry for node {cur}") });
            }
            let entry = log[e as usize];
            nodes.push(entry.pred);
            if entry.step == 0 {
                break;
            }
            cur = entry.pred as usize;
            s = entry.step - 1;
        }
        nodes.reverse();
        if nodes[0] as usize != source || nodes.len() > m_star as usize + 2 {
            return Err(MqeError::ReconstructionFailure {
                a: source,
                b: k,
                reason: format!("walk of {} edges for budget {}", nodes.len() - 1, m_star),
            });
        }
        records.push((m_star, best_q[k], best_eff[k], nodes));
    }
    Ok(SourceResult { records })
}

/// Builds the MQE network of `users` for trade-off `alpha` and malicious
/// probability `p`.
pub fn build_mqe(users: &UserSet, alpha: f64, p: f64) -> Result<MqeNetwork> {
    check_alpha(alpha)?;
    check_probability(p)?;
    let n = users.len();
    let q0 = CapacitanceMatrix::from_distances(&distance_matrix(users));

    // The engine runs on users sorted by position, so input labels only
    // matter for coincident points.
    let pts = users.points();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0]).then(pts[a][1].total_cmp(&pts[b][1])).then(a.cmp(&b)));
    let qc = q0.permuted(&perm);
    let order = NeighborOrder::new(&qc);
    let tree = max_spanning_tree(&qc);

    let per_source: Vec<SourceResult> = (0..n - 1)
        .into_par_iter()
        .map(|j| solve_source(j, &qc, &order, &tree, alpha, p))
        .collect::<Result<_>>()?;

    let tri = |i: usize, j: usize| i * (2 * n - i - 1) / 2 + (j - i - 1);
    let mut slots: Vec<Option<PairSolution>> = vec![None; n * (n - 1) / 2];
    for (cj, res) in per_source.into_iter().enumerate() {
        for (offset, (m_star, q_star, eff, path)) in res.records.into_iter().enumerate() {
            let ck = cj + 1 + offset;
            let (a, b) = (perm[cj], perm[ck]);
            let mut path: Vec<u32> = path.into_iter().map(|c| perm[c as usize] as u32).collect();
            if a > b {
                path.reverse();
            }
            slots[tri(a.min(b), a.max(b))] = Some((m_star, q_star, eff, path));
        }
    }

    let mut pairs = Vec::with_capacity(slots.len());
    let mut nodes = Vec::new();
    let mut edge_seen = vec![false; n * n];
    let mut edges = Vec::new();
    let mut length_mismatches = 0;
    for j in 0..n {
        for k in j + 1..n {
            let (m_star, q_star, eff, path) = slots[tri(j, k)].take().expect("every pair solved");
            let cap = path.windows(2).map(|w| q0.get(w[0] as usize, w[1] as usize)).fold(INFINITE_CAPACITANCE, f64::min);
            let mut sorted = path.clone();
            sorted.sort_unstable();
            if cap != q_star || sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(MqeError::ReconstructionFailure {
                    a: j,
                    b: k,
                    reason: format!("path {path:?} has bottleneck {cap}, expected {q_star}"),
                });
            }
            if path.len() != m_star as usize + 2 {
                length_mismatches += 1;
            }
            for w in path.windows(2) {
                let (a, b) = (w[0].min(w[1]) as usize, w[0].max(w[1]) as usize);
                if !edge_seen[a * n + b] {
                    edge_seen[a * n + b] = true;
                    edges.push((a, b));
                }
            }
            pairs.push(PairRecord { m_star, q_star, efficiency: eff, start: nodes.len(), len: path.len() as u32 });
            nodes.extend_from_slice(&path);
        }
    }
    edges.sort_unstable();
    Ok(MqeNetwork { users: users.clone(), q0, alpha, p, pairs, nodes, edges, length_mismatches })
}
