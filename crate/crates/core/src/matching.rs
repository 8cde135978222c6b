//! Space-time decoding graph and exact minimum-weight matching with a
//! boundary.
//!
//! A window of `m` syndrome layers for one stabilizer type becomes a graph
//! with one node per (stabilizer, layer) plus a single virtual boundary
//! node. Node `(s, t)` has index `t * S + s` where `S` is the number of
//! stabilizers of that type, which is also the bit position of that
//! detection event inside a table address.
//!
//! Matching is solved exactly by dynamic programming over subsets of
//! detection events, using all-pairs shortest paths fixed at graph build.
//! Ties are broken first by path probability and then by the
//! lexicographically smallest space-time correction, so every result is
//! reproducible bit for bit.

use std::cmp::Ordering;

use crate::bits;
use crate::error::{Error, Result};
use crate::layout::{CodeLayout, StabType};
use crate::noise::{effective_edge_probabilities, EdgeProbabilities};

/// Physical error rate used for tie-break probabilities by default.
pub const REFERENCE_P: f64 = 1e-2;

const TOL: f64 = 1e-9;
const NO_PARTNER: u8 = u8::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EdgeKind {
    Space,
    Time,
    Boundary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
    pub qubit: Option<usize>,
    pub weight: f64,
    pub probability: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightMode {
    /// Every edge weighs 1; probabilities only break ties.
    Unit,
    /// Edge weight is the negative log-odds of its probability.
    Weighted,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphOptions {
    pub mode: WeightMode,
    pub probabilities: Option<EdgeProbabilities>,
}

impl Default for GraphOptions {
    fn default() -> Self {
        Self {
            mode: WeightMode::Unit,
            probabilities: Some(effective_edge_probabilities(REFERENCE_P)),
        }
    }
}

impl GraphOptions {
    pub fn weighted(p: f64) -> Self {
        Self {
            mode: WeightMode::Weighted,
            probabilities: Some(effective_edge_probabilities(p)),
        }
    }
}

/// Per-kind edge cost. Space and boundary edges share one kind.
#[derive(Clone, Copy, Debug, PartialEq)]
struct KindCost {
    weight: [f64; 2],
    neg_log_prob: [f64; 2],
}

/// Number of space-like and time-like hops on a path. Costs are always
/// recomputed from these counts so equal paths compare exactly equal.
type Hops = [u32; 2];

#[derive(Clone, Debug)]
struct PairPath {
    hops: Hops,
    edges: Vec<u32>,
    /// Space-time correction: bit `t * n + q` for data qubit `q` in layer `t`.
    signature: u128,
    /// Contribution to the oldest-layer correction when committed.
    commit_correction: u64,
    /// Contribution to the second-layer event toggles when committed.
    commit_delta: u64,
}

#[derive(Clone, Debug)]
pub struct DecodingGraph {
    stab_type: StabType,
    num_stabs: usize,
    layers: usize,
    num_data: usize,
    edges: Vec<Edge>,
    costs: KindCost,
    /// `paths[u * nodes + v]`, `None` when unreachable.
    paths: Vec<Option<PairPath>>,
}

impl DecodingGraph {
    pub fn build(
        layout: &CodeLayout,
        stab_type: StabType,
        layers: usize,
        options: &GraphOptions,
    ) -> Result<Self> {
        if layers == 0 {
            return Err(Error::InvalidConfig("window must hold at least one layer".into()));
        }
        let num_stabs = layout.num_stabilizers(stab_type);
        let num_data = layout.num_data();
        if layers * num_data > 128 {
            return Err(Error::InvalidConfig(format!(
                "window of {layers} layers x {num_data} qubits exceeds 128 signature bits"
            )));
        }
        let costs = kind_costs(options)?;
        let (space_p, time_p) = match options.probabilities {
            Some(p) => (p.space, p.time),
            None => (1.0, 1.0),
        };

        let boundary = layers * num_stabs;
        let mut edges = Vec::new();
        for t in 0..layers {
            for q in 0..num_data {
                let stabs = layout.stabilizers_of_qubit(stab_type, q);
                let (a, b, kind) = match stabs.as_slice() {
                    [s] => (t * num_stabs + s, boundary, EdgeKind::Boundary),
                    [s1, s2] => (t * num_stabs + s1, t * num_stabs + s2, EdgeKind::Space),
                    _ => unreachable!("data qubit in {} supports", stabs.len()),
                };
                edges.push(Edge {
                    a,
                    b,
                    kind,
                    qubit: Some(q),
                    weight: costs.weight[0],
                    probability: space_p,
                });
            }
        }
        for t in 0..layers.saturating_sub(1) {
            for s in 0..num_stabs {
                edges.push(Edge {
                    a: t * num_stabs + s,
                    b: (t + 1) * num_stabs + s,
                    kind: EdgeKind::Time,
                    qubit: None,
                    weight: costs.weight[1],
                    probability: time_p,
                });
            }
        }

        let mut graph = Self {
            stab_type,
            num_stabs,
            layers,
            num_data,
            edges,
            costs,
            paths: Vec::new(),
        };
        graph.paths = graph.shortest_paths();
        Ok(graph)
    }

    pub fn stab_type(&self) -> StabType {
        self.stab_type
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn num_stabilizers(&self) -> usize {
        self.num_stabs
    }

    pub fn num_data(&self) -> usize {
        self.num_data
    }

    /// Stabilizer-layer nodes plus the boundary node.
    pub fn num_nodes(&self) -> usize {
        self.layers * self.num_stabs + 1
    }

    pub fn boundary(&self) -> usize {
        self.layers * self.num_stabs
    }

    pub fn node(&self, stab: usize, layer: usize) -> usize {
        layer * self.num_stabs + stab
    }

    /// Layer of a non-boundary node.
    pub fn layer_of(&self, node: usize) -> usize {
        node / self.num_stabs
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Weight of the representative shortest path between two nodes.
    pub fn distance(&self, u: usize, v: usize) -> Option<f64> {
        self.path(u, v).map(|p| self.weight_of(p.hops))
    }

    /// Edge indices of the representative shortest path from `u` to `v`.
    pub fn shortest_path(&self, u: usize, v: usize) -> Option<Vec<usize>> {
        let p = self.path(u, v)?;
        let mut edges: Vec<usize> = p.edges.iter().map(|&e| e as usize).collect();
        if u > v {
            edges.reverse();
        }
        Some(edges)
    }

    fn path(&self, u: usize, v: usize) -> Option<&PairPath> {
        self.paths[u * self.num_nodes() + v].as_ref()
    }

    fn hops_of(&self, e: &Edge) -> Hops {
        match e.kind {
            EdgeKind::Time => [0, 1],
            _ => [1, 0],
        }
    }

    fn weight_of(&self, h: Hops) -> f64 {
        f64::from(h[0]) * self.costs.weight[0] + f64::from(h[1]) * self.costs.weight[1]
    }

    fn nlp_of(&self, h: Hops) -> f64 {
        f64::from(h[0]) * self.costs.neg_log_prob[0] + f64::from(h[1]) * self.costs.neg_log_prob[1]
    }

    /// Order by weight, then by probability (higher first).
    fn cmp_hops(&self, a: Hops, b: Hops) -> Ordering {
        if a == b {
            return Ordering::Equal;
        }
        let (wa, wb) = (self.weight_of(a), self.weight_of(b));
        if (wa - wb).abs() > TOL * (1.0 + wa.abs().max(wb.abs())) {
            return wa.total_cmp(&wb);
        }
        let (pa, pb) = (self.nlp_of(a), self.nlp_of(b));
        if (pa - pb).abs() > TOL * (1.0 + pa.abs().max(pb.abs())) {
            return pa.total_cmp(&pb);
        }
        Ordering::Equal
    }

    fn shortest_paths(&self) -> Vec<Option<PairPath>> {
        let n = self.num_nodes();
        let boundary = self.boundary();
        let mut dist: Vec<Option<Hops>> = vec![None; n * n];
        for u in 0..n {
            dist[u * n + u] = Some([0, 0]);
        }
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (i, e) in self.edges.iter().enumerate() {
            adj[e.a].push((e.b, i));
            adj[e.b].push((e.a, i));
            let h = self.hops_of(e);
            for (x, y) in [(e.a, e.b), (e.b, e.a)] {
                let slot = &mut dist[x * n + y];
                if slot.is_none_or(|cur| self.cmp_hops(h, cur) == Ordering::Less) {
                    *slot = Some(h);
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }

        // The boundary is never an intermediate node.
        for k in (0..n).filter(|&k| k != boundary) {
            for i in 0..n {
                let Some(ik) = dist[i * n + k] else { continue };
                for j in 0..n {
                    let Some(kj) = dist[k * n + j] else { continue };
                    let via = [ik[0] + kj[0], ik[1] + kj[1]];
                    let slot = &mut dist[i * n + j];
                    if slot.is_none_or(|cur| self.cmp_hops(via, cur) == Ordering::Less) {
                        *slot = Some(via);
                    }
                }
            }
        }

        let mut paths = vec![None; n * n];
        for u in 0..n {
            for v in u + 1..n {
                let Some(target) = dist[u * n + v] else { continue };
                let edges = self.trace_path(u, v, target, &dist, &adj);
                let path = self.describe(edges);
                paths[v * n + u] = Some(path.clone());
                paths[u * n + v] = Some(path);
            }
            paths[u * n + u] = Some(self.describe(Vec::new()));
        }
        paths
    }

    /// Greedy walk that always takes the smallest next node (then the
    /// smallest edge index) that stays on some optimal path. This yields
    /// the lexicographically smallest node sequence among optimal paths.
    fn trace_path(
        &self,
        u: usize,
        v: usize,
        target: Hops,
        dist: &[Option<Hops>],
        adj: &[Vec<(usize, usize)>],
    ) -> Vec<u32> {
        let n = self.num_nodes();
        let boundary = self.boundary();
        let mut cur = u;
        let mut remaining = target;
        let mut out = Vec::new();
        while cur != v {
            let (next, edge, rest) = adj[cur]
                .iter()
                .filter(|&&(w, _)| w != boundary || w == v)
                .find_map(|&(w, e)| {
                    let rest = dist[w * n + v]?;
                    let h = self.hops_of(&self.edges[e]);
                    let total = [h[0] + rest[0], h[1] + rest[1]];
                    (self.cmp_hops(total, remaining) == Ordering::Equal).then_some((w, e, rest))
                })
                .expect("shortest-path table inconsistent");
            out.push(edge as u32);
            cur = next;
            remaining = rest;
        }
        out
    }

    fn describe(&self, edges: Vec<u32>) -> PairPath {
        let mut hops = [0u32; 2];
        let mut signature = 0u128;
        let mut commit_correction = 0u64;
        let mut commit_delta = 0u64;
        for &e in &edges {
            let edge = &self.edges[e as usize];
            let h = self.hops_of(edge);
            hops[0] += h[0];
            hops[1] += h[1];
            let (c, d) = self.commit_contribution(edge);
            commit_correction ^= c;
            commit_delta ^= d;
            if let Some(q) = edge.qubit {
                signature ^= 1u128 << (self.layer_of(edge.a) * self.num_data + q);
            }
        }
        PairPath {
            hops,
            edges,
            signature,
            commit_correction,
            commit_delta,
        }
    }

    /// What committing one edge contributes: its data qubit if it touches
    /// layer 0, and the toggled layer-1 stabilizer for a 0-1 time edge.
    fn commit_contribution(&self, e: &Edge) -> (u64, u64) {
        let s = self.num_stabs;
        let in_layer0 = |x: usize| x < s;
        if !(in_layer0(e.a) || in_layer0(e.b)) {
            return (0, 0);
        }
        match e.kind {
            EdgeKind::Time => {
                let upper = e.a.max(e.b);
                (0, 1u64 << (upper - s))
            }
            _ => (1u64 << e.qubit.expect("space edge carries a qubit"), 0),
        }
    }

    /// Detection-event nodes encoded by a table address.
    pub fn events_from_address(&self, address: u64) -> Vec<usize> {
        bits::ones(address).collect()
    }

    pub fn min_weight_match(&self, events: &[usize]) -> Result<MatchingResult> {
        let mut scratch = MatchScratch::default();
        let plan = self.solve(events, &mut scratch)?;
        Ok(self.expand(events, &plan))
    }

    /// Matching reduced to the committed oldest-layer effect, without
    /// expanding paths. Used by table builds.
    pub(crate) fn commit_events(
        &self,
        events: &[usize],
        scratch: &mut MatchScratch,
    ) -> Result<(u64, u64)> {
        let plan = self.solve(events, scratch)?;
        let mut correction = 0u64;
        let mut delta = 0u64;
        for (u, v) in plan {
            let p = self.path(u, v).expect("planned pair is reachable");
            correction ^= p.commit_correction;
            delta ^= p.commit_delta;
        }
        Ok((correction, delta))
    }

    /// Subset DP: `dp[mask]` is the best way to explain the events in
    /// `mask`, always resolving the lowest remaining event first.
    fn solve(&self, events: &[usize], scratch: &mut MatchScratch) -> Result<Vec<(usize, usize)>> {
        let k = events.len();
        let b = self.boundary();
        if k > MAX_EVENTS {
            return Err(Error::InvalidConfig(format!(
                "{k} detection events exceed the matcher limit of {MAX_EVENTS}"
            )));
        }
        if let Some(&bad) = events.iter().find(|&&e| e >= b) {
            return Err(Error::InvalidConfig(format!("node {bad} is not a detection node")));
        }
        if events.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("events must be strictly ascending".into()));
        }

        let dp = &mut scratch.dp;
        dp.clear();
        dp.resize(1 << k, DpState::UNSET);
        dp[0] = DpState::EMPTY;
        for mask in 1usize..(1 << k) {
            let i = mask.trailing_zeros() as usize;
            let rest = mask & !(1 << i);
            let mut best = DpState::UNSET;
            let mut consider = |prev: &DpState, path: Option<&PairPath>, partner: u8| {
                let Some(path) = path else { return };
                if !prev.is_set() {
                    return;
                }
                let cand = DpState {
                    hops: [prev.hops[0] + path.hops[0] as u16, prev.hops[1] + path.hops[1] as u16],
                    signature: prev.signature ^ path.signature,
                    partner,
                };
                if !best.is_set() || self.better(&cand, &best) {
                    best = cand;
                }
            };
            consider(&dp[rest], self.path(events[i], b), NO_PARTNER);
            for j in bits::ones(rest as u64) {
                consider(&dp[rest & !(1 << j)], self.path(events[i], events[j]), j as u8);
            }
            dp[mask] = best;
        }

        let mut plan = Vec::with_capacity(k);
        let mut mask = (1usize << k) - 1;
        while mask != 0 {
            let i = mask.trailing_zeros() as usize;
            let st = dp[mask];
            debug_assert!(st.is_set());
            mask &= !(1 << i);
            if st.partner == NO_PARTNER {
                plan.push((events[i], b));
            } else {
                let j = st.partner as usize;
                mask &= !(1 << j);
                plan.push((events[i], events[j]));
            }
        }
        Ok(plan)
    }

    fn better(&self, a: &DpState, b: &DpState) -> bool {
        let ha = [u32::from(a.hops[0]), u32::from(a.hops[1])];
        let hb = [u32::from(b.hops[0]), u32::from(b.hops[1])];
        match self.cmp_hops(ha, hb) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => a.signature.reverse_bits() < b.signature.reverse_bits(),
        }
    }

    fn expand(&self, events: &[usize], plan: &[(usize, usize)]) -> MatchingResult {
        let b = self.boundary();
        let mut pairs = Vec::with_capacity(plan.len());
        let mut realized = Vec::new();
        let mut hops = [0u32; 2];
        let mut signature = 0u128;
        for &(u, v) in plan {
            let p = self.path(u, v).expect("planned pair is reachable");
            pairs.push((u, (v != b).then_some(v)));
            realized.extend(p.edges.iter().map(|&e| e as usize));
            hops[0] += p.hops[0];
            hops[1] += p.hops[1];
            signature ^= p.signature;
        }
        pairs.sort_unstable();
        debug_assert_eq!(
            pairs.iter().map(|&(_, v)| 1 + usize::from(v.is_some())).sum::<usize>(),
            events.len()
        );
        MatchingResult {
            pairs,
            realized_edges: realized,
            total_weight: self.weight_of(hops),
            log_probability: -self.nlp_of(hops),
            correction_signature: signature,
        }
    }
}

/// Largest event set the subset DP accepts.
pub const MAX_EVENTS: usize = 24;

#[derive(Clone, Copy, Debug)]
struct DpState {
    hops: [u16; 2],
    partner: u8,
    signature: u128,
}

impl DpState {
    const UNSET: Self = Self {
        hops: [u16::MAX; 2],
        partner: 0,
        signature: 0,
    };
    const EMPTY: Self = Self {
        hops: [0; 2],
        partner: 0,
        signature: 0,
    };

    fn is_set(&self) -> bool {
        self.hops[0] != u16::MAX
    }
}

/// Reusable DP buffer.
#[derive(Debug, Default)]
pub struct MatchScratch {
    dp: Vec<DpState>,
}

fn kind_costs(options: &GraphOptions) -> Result<KindCost> {
    let nlp = |q: f64| -q.ln();
    match (options.mode, options.probabilities) {
        (WeightMode::Unit, None) => Ok(KindCost {
            weight: [1.0, 1.0],
            neg_log_prob: [0.0, 0.0],
        }),
        (WeightMode::Unit, Some(p)) => {
            for q in [p.space, p.time] {
                if !(q > 0.0 && q <= 1.0) {
                    return Err(Error::InvalidConfig(format!("edge probability {q} not in (0, 1]")));
                }
            }
            Ok(KindCost {
                weight: [1.0, 1.0],
                neg_log_prob: [nlp(p.space), nlp(p.time)],
            })
        }
        (WeightMode::Weighted, None) => Err(Error::InvalidConfig(
            "weighted mode needs edge probabilities".into(),
        )),
        (WeightMode::Weighted, Some(p)) => {
            for q in [p.space, p.time] {
                if !(q > 0.0 && q < 0.5) {
                    return Err(Error::InvalidConfig(format!(
                        "weighted mode needs edge probabilities in (0, 0.5), got {q}"
                    )));
                }
            }
            let w = |q: f64| -(q / (1.0 - q)).ln();
            Ok(KindCost {
                weight: [w(p.space), w(p.time)],
                neg_log_prob: [nlp(p.space), nlp(p.time)],
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchingResult {
    /// Each event with its partner, or `None` for the boundary. Sorted.
    pub pairs: Vec<(usize, Option<usize>)>,
    /// Edge indices of all expanded paths (a multiset).
    pub realized_edges: Vec<usize>,
    pub total_weight: f64,
    /// Natural log of the product of realized edge probabilities.
    pub log_probability: f64,
    pub correction_signature: u128,
}

impl MatchingResult {
    /// Nodes of odd degree in the realized edge multiset, boundary excluded.
    pub fn odd_degree_nodes(&self, graph: &DecodingGraph) -> Vec<usize> {
        odd_degree_nodes(graph, &self.realized_edges)
    }
}

pub fn odd_degree_nodes(graph: &DecodingGraph, edges: &[usize]) -> Vec<usize> {
    let mut odd = vec![false; graph.num_nodes()];
    for &e in edges {
        let edge = &graph.edges()[e];
        odd[edge.a] ^= true;
        odd[edge.b] ^= true;
    }
    let b = graph.boundary();
    (0..graph.num_nodes()).filter(|&v| v != b && odd[v]).collect()
}

/// Outcome of committing the oldest layer of a window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Commitment {
    pub correction: u64,
    pub state_delta: u64,
    /// Realized edges with at least one endpoint in layer 0.
    pub edges: Vec<usize>,
}

pub fn commit_oldest_layer(graph: &DecodingGraph, result: &MatchingResult) -> Commitment {
    let s = graph.num_stabilizers();
    let mut c = Commitment {
        correction: 0,
        state_delta: 0,
        edges: Vec::new(),
    };
    for &e in &result.realized_edges {
        let edge = &graph.edges()[e];
        if edge.a < s || edge.b < s {
            let (corr, delta) = graph.commit_contribution(edge);
            c.correction ^= corr;
            c.state_delta ^= delta;
            c.edges.push(e);
        }
    }
    c
}
