//! Leveled graphs, homogeneous flow stream networks and their connection
//! matrices.
//!
//! A network is stored as a level function plus a set of undirected edges.
//! Every edge joins two consecutive levels, and its orientation (which end
//! is upstream) is read off the levels, so one-way movement cannot be
//! expressed. Movement along an edge from the lower level to the higher one
//! happens at rate `d + q`; the reverse direction at rate `d`.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

/// Largest node count accepted by [`enumerate_homogeneous_networks`].
pub const MAX_ENUMERATION_NODES: usize = 7;

/// Zero-based node index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    // Nodes are printed 1-based, as they appear in files and reports.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 + 1)
    }
}

/// Level of every node. Level 0 holds the most upstream nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LevelFunction {
    levels: Vec<usize>,
}

impl LevelFunction {
    pub fn new(levels: Vec<usize>) -> Self {
        Self { levels }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, node: usize) -> usize {
        self.levels[node]
    }

    pub fn max_level(&self) -> usize {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    /// Levels in `0..=max` that no node occupies.
    pub fn missing_levels(&self) -> Vec<usize> {
        let mut seen = vec![false; self.max_level() + 1];
        for &l in &self.levels {
            seen[l] = true;
        }
        seen.iter()
            .enumerate()
            .filter_map(|(l, &s)| (!s).then_some(l))
            .collect()
    }

    /// Number of nodes on each level `0..=max`.
    pub fn level_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.max_level() + 1];
        for &l in &self.levels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// The three-node configurations: two sources joining, a chain, and a split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThreeNodeKind {
    Tributary,
    Straight,
    Distributary,
}

impl ThreeNodeKind {
    pub const ALL: [ThreeNodeKind; 3] = [
        ThreeNodeKind::Tributary,
        ThreeNodeKind::Straight,
        ThreeNodeKind::Distributary,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ThreeNodeKind::Tributary => "tributary",
            ThreeNodeKind::Straight => "straight",
            ThreeNodeKind::Distributary => "distributary",
        }
    }
}

impl FromStr for ThreeNodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tributary" | "tributary3" => Ok(ThreeNodeKind::Tributary),
            "straight" | "straight3" => Ok(ThreeNodeKind::Straight),
            "distributary" | "distributary3" => Ok(ThreeNodeKind::Distributary),
            other => Err(invalid(format!("unknown three-node configuration `{other}`"))),
        }
    }
}

impl fmt::Display for ThreeNodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A leveled graph carrying diffusion rate `d` and drift rate `q`.
///
/// Construction only checks the shape of the input (indices, duplicates,
/// rates). The leveled-graph conditions are checked by [`validate`], which
/// reports instead of failing so that non-leveled graphs can be inspected.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamNetwork {
    levels: LevelFunction,
    /// Each edge stored once. When the endpoints sit on consecutive levels
    /// the pair is `(upstream, downstream)`, otherwise `(min, max)`.
    edges: Vec<(usize, usize)>,
    d: f64,
    q: f64,
}

fn check_rate(name: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(invalid(format!("{name} must be finite and nonnegative, got {value}")));
    }
    Ok(())
}

impl StreamNetwork {
    /// Builds a network from 0-based levels and 0-based edge pairs.
    pub fn new(levels: Vec<usize>, edges: &[(usize, usize)], d: f64, q: f64) -> Result<Self> {
        let n = levels.len();
        if n == 0 {
            return Err(Error::InvalidNetwork("network has no nodes".into()));
        }
        check_rate("d", d)?;
        check_rate("q", q)?;
        let mut stored = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidNetwork(format!(
                    "edge ({}, {}) references a node outside 1..={n}",
                    a + 1,
                    b + 1
                )));
            }
            if a == b {
                return Err(Error::InvalidNetwork(format!("self-loop at node {}", a + 1)));
            }
            let pair = if levels[b] == levels[a] + 1 {
                (a, b)
            } else if levels[a] == levels[b] + 1 {
                (b, a)
            } else {
                (a.min(b), a.max(b))
            };
            if stored
                .iter()
                .any(|&(x, y)| (x, y) == pair || (y, x) == pair)
            {
                return Err(Error::InvalidNetwork(format!(
                    "duplicate edge between {} and {}",
                    a + 1,
                    b + 1
                )));
            }
            stored.push(pair);
        }
        stored.sort_unstable();
        Ok(Self {
            levels: LevelFunction::new(levels),
            edges: stored,
            d,
            q,
        })
    }

    /// Same topology with different rates.
    pub fn with_rates(&self, d: f64, q: f64) -> Result<Self> {
        check_rate("d", d)?;
        check_rate("q", q)?;
        Ok(Self {
            d,
            q,
            ..self.clone()
        })
    }

    pub fn n(&self) -> usize {
        self.levels.len()
    }

    pub fn level_function(&self) -> &LevelFunction {
        &self.levels
    }

    pub fn levels(&self) -> &[usize] {
        self.levels.as_slice()
    }

    pub fn level(&self, node: NodeId) -> usize {
        self.levels.level(node.0)
    }

    pub fn max_level(&self) -> usize {
        self.levels.max_level()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Edges as `(upstream, downstream)`; `None` if some edge does not join
    /// consecutive levels.
    pub fn oriented_edges(&self) -> Option<Vec<(usize, usize)>> {
        self.edges
            .iter()
            .map(|&(a, b)| (self.levels.level(b) == self.levels.level(a) + 1).then_some((a, b)))
            .collect()
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Number of adjacent nodes exactly one level below each node.
    pub fn downstream_neighbor_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n()];
        for &(a, b) in &self.edges {
            if self.levels.level(b) == self.levels.level(a) + 1 {
                counts[a] += 1;
            } else if self.levels.level(a) == self.levels.level(b) + 1 {
                counts[b] += 1;
            }
        }
        counts
    }
}

/// One of the three-node configurations with the given rates.
pub fn canonical_three_node(kind: ThreeNodeKind, d: f64, q: f64) -> Result<StreamNetwork> {
    match kind {
        ThreeNodeKind::Tributary => StreamNetwork::new(vec![0, 0, 1], &[(0, 2), (1, 2)], d, q),
        ThreeNodeKind::Straight => StreamNetwork::new(vec![0, 1, 2], &[(0, 1), (1, 2)], d, q),
        ThreeNodeKind::Distributary => {
            StreamNetwork::new(vec![0, 1, 1], &[(0, 1), (0, 2)], d, q)
        }
    }
}

/// Path of `n` nodes with node `i` on level `i`.
pub fn straight_chain(n: usize, d: f64, q: f64) -> Result<StreamNetwork> {
    if n == 0 {
        return Err(invalid("a chain needs at least one node"));
    }
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    StreamNetwork::new((0..n).collect(), &edges, d, q)
}

/// A clause of the homogeneous-flow-network definition that fails.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// Level between 0 and the maximum level with no node on it.
    MissingLevel(usize),
    /// Edge whose endpoints are not on consecutive levels.
    EdgeSpansLevels {
        a: NodeId,
        b: NodeId,
        level_a: usize,
        level_b: usize,
    },
    /// Induced movement digraph is not strongly connected.
    NotStronglyConnected { components: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingLevel(l) => write!(f, "no node on level {l}"),
            Violation::EdgeSpansLevels {
                a,
                b,
                level_a,
                level_b,
            } => write!(
                f,
                "edge {a}-{b} joins levels {level_a} and {level_b}, which are not consecutive"
            ),
            Violation::NotStronglyConnected { components } => write!(
                f,
                "movement digraph is not strongly connected ({components} components)"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Set when `d = 0`: upstream movement vanishes and the connection
    /// matrix is reducible, although the graph itself is connected.
    pub irreducible_only_for_positive_d: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks level contiguity, level adjacency of edges and strong connectivity.
pub fn validate(net: &StreamNetwork) -> ValidationReport {
    let mut violations: Vec<Violation> = net
        .levels
        .missing_levels()
        .into_iter()
        .map(Violation::MissingLevel)
        .collect();
    for &(a, b) in &net.edges {
        let (la, lb) = (net.levels.level(a), net.levels.level(b));
        if la.abs_diff(lb) != 1 {
            violations.push(Violation::EdgeSpansLevels {
                a: NodeId(a),
                b: NodeId(b),
                level_a: la,
                level_b: lb,
            });
        }
    }

    // With d > 0 every edge carries movement both ways; with d = 0 only the
    // downstream direction survives, so connectivity is judged on the
    // undirected graph and the reducibility is flagged separately.
    let adj = net.neighbors();
    let components = strongly_connected_components(&adj).len();
    if components > 1 {
        violations.push(Violation::NotStronglyConnected { components });
    }
    ValidationReport {
        violations,
        irreducible_only_for_positive_d: net.d == 0.0 && net.n() > 1,
    }
}

fn ensure_valid(net: &StreamNetwork) -> Result<()> {
    let report = validate(net);
    match report.violations.first() {
        None => Ok(()),
        Some(v) => Err(Error::InvalidNetwork(v.to_string())),
    }
}

/// Ends of the network: nodes with no neighbour one level further down.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownstreamEnds {
    pub end_nodes: Vec<NodeId>,
    /// Subset of `end_nodes` on the maximum level.
    pub most_downstream: Vec<NodeId>,
}

pub fn downstream_end_nodes(net: &StreamNetwork) -> DownstreamEnds {
    let counts = net.downstream_neighbor_counts();
    let max = net.max_level();
    let end_nodes: Vec<NodeId> = (0..net.n())
        .filter(|&i| counts[i] == 0)
        .map(NodeId)
        .collect();
    let most_downstream = end_nodes
        .iter()
        .copied()
        .filter(|&i| net.level(i) == max)
        .collect();
    DownstreamEnds {
        end_nodes,
        most_downstream,
    }
}

/// Connection matrix `L = d D + q Q` together with its two patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionMatrix {
    pub l: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    pub drift: DMatrix<f64>,
}

impl ConnectionMatrix {
    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    /// `L + diag(r)`.
    pub fn jacobian(&self, r: &[f64]) -> DMatrix<f64> {
        let mut j = self.l.clone();
        for (i, &ri) in r.iter().enumerate() {
            j[(i, i)] += ri;
        }
        j
    }
}

/// Assembles `L`, `D` and `Q`. Entry `(j, i)` is the movement rate from
/// node `i` into node `j`; diagonals are accumulated from the same terms so
/// every column sums to zero.
pub fn build_connection_matrix(net: &StreamNetwork) -> Result<ConnectionMatrix> {
    ensure_valid(net)?;
    let n = net.n();
    let (d, q) = (net.d, net.q);
    let mut l = DMatrix::zeros(n, n);
    let mut diffusion = DMatrix::zeros(n, n);
    let mut drift = DMatrix::zeros(n, n);
    // validate() guarantees every stored edge is (upstream, downstream).
    for &(up, down) in &net.edges {
        l[(down, up)] += d + q;
        l[(up, up)] -= d + q;
        l[(up, down)] += d;
        l[(down, down)] -= d;

        diffusion[(down, up)] += 1.0;
        diffusion[(up, up)] -= 1.0;
        diffusion[(up, down)] += 1.0;
        diffusion[(down, down)] -= 1.0;

        drift[(down, up)] += 1.0;
        drift[(up, up)] -= 1.0;
    }
    Ok(ConnectionMatrix {
        l,
        diffusion,
        drift,
    })
}

/// Tarjan's algorithm on an adjacency list. Components are returned in
/// reverse topological order.
pub fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    struct State<'a> {
        adj: &'a [Vec<usize>],
        next_index: usize,
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        components: Vec<Vec<usize>>,
    }

    fn visit(s: &mut State<'_>, v: usize) {
        s.index[v] = Some(s.next_index);
        s.low[v] = s.next_index;
        s.next_index += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for k in 0..s.adj[v].len() {
            let w = s.adj[v][k];
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                Some(_) => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            let mut comp = Vec::new();
            while let Some(w) = s.stack.pop() {
                s.on_stack[w] = false;
                comp.push(w);
                if w == v {
                    break;
                }
            }
            comp.sort_unstable();
            s.components.push(comp);
        }
    }

    let n = adj.len();
    let mut s = State {
        adj,
        next_index: 0,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        components: Vec::new(),
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.components
}

/// True when the digraph of positive off-diagonal entries (arc `j -> i`
/// for `m[(i, j)] > 0`) is strongly connected.
pub fn is_irreducible(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    if n <= 1 {
        return true;
    }
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|j| (0..n).filter(|&i| i != j && m[(i, j)] > 0.0).collect())
        .collect();
    strongly_connected_components(&adj).len() == 1
}

/// Finds a level function making the undirected graph leveled, if one
/// exists. A connected graph admits one exactly when it is bipartite; the
/// breadth-first distance from the lowest-numbered node of each component
/// is returned.
pub fn find_level_function(n: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        if a >= n || b >= n || a == b {
            return None;
        }
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut level: Vec<Option<usize>> = vec![None; n];
    for start in 0..n {
        if level[start].is_some() {
            continue;
        }
        level[start] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            let lv = level[v]?;
            for &w in &adj[v] {
                match level[w] {
                    None => {
                        level[w] = Some(lv + 1);
                        queue.push_back(w);
                    }
                    Some(lw) if lw.abs_diff(lv) != 1 => return None,
                    Some(_) => {}
                }
            }
        }
    }
    level.into_iter().collect()
}

/// Invariant of a network under relabelings that keep every node on its
/// level. Equal forms mean level-preserving isomorphic networks.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalForm {
    level_sizes: Vec<usize>,
    cells: Vec<(usize, usize, usize)>,
    adjacency: Vec<bool>,
}

/// Canonical form by cell refinement plus exhaustive search.
///
/// Nodes are split into cells keyed by (level, upstream degree, downstream
/// degree); the labeling minimising the adjacency code is searched over all
/// permutations inside each cell. Cost grows with the product of cell-size
/// factorials, which stays small for the graph sizes enumerated here.
pub fn canonical_form(net: &StreamNetwork) -> CanonicalForm {
    let n = net.n();
    let levels = net.levels();
    let mut up_deg = vec![0usize; n];
    let mut down_deg = vec![0usize; n];
    for &(a, b) in net.edges() {
        let (hi, lo) = if levels[a] < levels[b] { (a, b) } else { (b, a) };
        down_deg[hi] += 1;
        up_deg[lo] += 1;
    }
    let key = |i: usize| (levels[i], up_deg[i], down_deg[i]);

    let mut by_cell: BTreeMap<(usize, usize, usize), Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        by_cell.entry(key(i)).or_default().push(i);
    }
    let cells: Vec<(usize, usize, usize)> = (0..n)
        .map(key)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .flat_map(|k| std::iter::repeat_n(k, by_cell[&k].len()))
        .collect();
    let groups: Vec<Vec<usize>> = by_cell.into_values().collect();

    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in net.edges() {
        adj[a][b] = true;
        adj[b][a] = true;
    }

    let mut best: Option<Vec<bool>> = None;
    let mut order = Vec::with_capacity(n);
    search_orderings(&groups, 0, &mut order, &mut |order: &[usize]| {
        let mut code = Vec::with_capacity(n * (n - 1) / 2);
        for x in 0..n {
            for y in (x + 1)..n {
                code.push(adj[order[x]][order[y]]);
            }
        }
        if best.as_ref().is_none_or(|b| code < *b) {
            best = Some(code);
        }
    });

    CanonicalForm {
        level_sizes: net.level_function().level_sizes(),
        cells,
        adjacency: best.unwrap_or_default(),
    }
}

fn search_orderings(
    groups: &[Vec<usize>],
    g: usize,
    order: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if g == groups.len() {
        visit(order);
        return;
    }
    for perm in permutations(&groups[g]) {
        let len = order.len();
        order.extend_from_slice(&perm);
        search_orderings(groups, g + 1, order, visit);
        order.truncate(len);
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Ordered sequences of positive integers summing to `n`.
fn compositions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for mut rest in compositions(n - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

/// All homogeneous flow stream networks on `n` nodes, one representative
/// per class of level-preserving isomorphism, sorted by canonical form.
///
/// Distinct level functions on the same graph give distinct networks.
pub fn enumerate_homogeneous_networks(n: usize, d: f64, q: f64) -> Result<Vec<StreamNetwork>> {
    if n == 0 || n > MAX_ENUMERATION_NODES {
        return Err(invalid(format!(
            "enumeration supports 1..={MAX_ENUMERATION_NODES} nodes, got {n}"
        )));
    }
    check_rate("d", d)?;
    check_rate("q", q)?;

    let per_profile: Vec<Vec<(CanonicalForm, StreamNetwork)>> = compositions(n)
        .into_par_iter()
        .map(|sizes| {
            let mut levels = Vec::with_capacity(n);
            for (l, &s) in sizes.iter().enumerate() {
                levels.extend(std::iter::repeat_n(l, s));
            }
            let mut candidates = Vec::new();
            let mut start = 0;
            for w in sizes.windows(2) {
                for a in start..start + w[0] {
                    for b in start + w[0]..start + w[0] + w[1] {
                        candidates.push((a, b));
                    }
                }
                start += w[0];
            }
            let mut found = BTreeMap::new();
            for mask in 0u64..(1u64 << candidates.len()) {
                let edges: Vec<(usize, usize)> = candidates
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| mask >> k & 1 == 1)
                    .map(|(_, &e)| e)
                    .collect();
                if !is_connected(n, &edges) {
                    continue;
                }
                let net = StreamNetwork::new(levels.clone(), &edges, d, q)
                    .expect("generated edges are well formed");
                found.entry(canonical_form(&net)).or_insert(net);
            }
            found.into_iter().collect()
        })
        .collect();

    let mut all: BTreeMap<CanonicalForm, StreamNetwork> = BTreeMap::new();
    for (form, net) in per_profile.into_iter().flatten() {
        all.entry(form).or_insert(net);
    }
    Ok(all.into_values().collect())
}
