//! Network synthesis and structural metrics.
//!
//! Generators build an undirected graph and emit both directed edges for
//! every undirected link, so dynamics run on a directed network while the
//! structural metrics use the undirected projection.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{fit_power_law, PowerLawFit};
use crate::model::{NetworkSpec, NeuronSpec, Sign, SimTime, SynapseState, TopologyMeta};
use crate::num::Scalar;
use crate::rng::{streams, RngStream};

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("invalid parameters: {0}")]
    Parameter(String),
}

fn param_err<T>(msg: impl Into<String>) -> Result<T, TopologyError> {
    Err(TopologyError::Parameter(msg.into()))
}

/// Neuron and synapse template applied to every node a generator creates.
#[derive(Clone, Debug)]
pub struct BuildOptions<S: Scalar> {
    pub threshold: S,
    pub soma_tau: S,
    pub t_refractory: SimTime,
    pub synapse: SynapseState<S>,
    /// Fixed per-edge latency added to the geometric delay.
    pub latency: SimTime,
    pub signal_velocity: S,
    pub detection_efficiency: S,
}

impl<S: Scalar> Default for BuildOptions<S> {
    fn default() -> Self {
        BuildOptions {
            threshold: S::one(),
            soma_tau: S::lit(10_000.0),
            t_refractory: SimTime::from_ns(50),
            synapse: SynapseState::default(),
            latency: SimTime::from_ps(1_000),
            signal_velocity: S::lit(2e7),
            detection_efficiency: S::one(),
        }
    }
}

/// Builds a network from undirected links, emitting `u -> v` then `v -> u` for each.
pub fn network_from_undirected<S: Scalar>(
    n: usize,
    links: &[(usize, usize)],
    opts: &BuildOptions<S>,
) -> NetworkSpec<S> {
    let mut net = NetworkSpec::empty(opts.signal_velocity);
    net.detection_efficiency = opts.detection_efficiency;
    for _ in 0..n {
        net.add_neuron(NeuronSpec::point(opts.threshold, opts.soma_tau, opts.t_refractory));
    }
    for &(u, v) in links {
        net.connect(u, v, opts.synapse.clone(), opts.latency);
        net.connect(v, u, opts.synapse.clone(), opts.latency);
    }
    net
}

fn sorted_links(adj: &[BTreeSet<usize>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (u, nb) in adj.iter().enumerate() {
        for &v in nb.range(u + 1..) {
            out.push((u, v));
        }
    }
    out
}

/// Watts–Strogatz undirected links: ring lattice with `k` neighbours, each
/// lattice link rewired with probability `p_rewire`.
pub fn small_world_links(
    n: usize,
    k: usize,
    p_rewire: f64,
    seed: u64,
) -> Result<Vec<(usize, usize)>, TopologyError> {
    if k < 2 || k % 2 != 0 {
        return param_err(format!("k must be even and >= 2, got {k}"));
    }
    if n <= k {
        return param_err(format!("n must exceed k (n={n}, k={k})"));
    }
    if !(0.0..=1.0).contains(&p_rewire) {
        return param_err(format!("p_rewire must be in [0, 1], got {p_rewire}"));
    }
    let mut adj = vec![BTreeSet::new(); n];
    for u in 0..n {
        for j in 1..=k / 2 {
            let v = (u + j) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    let mut rng = RngStream::with_stream(seed, streams::GENERATOR);
    for j in 1..=k / 2 {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.random::<f64>() >= p_rewire {
                continue;
            }
            if !adj[u].contains(&v) || adj[u].len() >= n - 1 {
                continue;
            }
            let w = loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    break w;
                }
            };
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    Ok(sorted_links(&adj))
}

pub fn generate_small_world<S: Scalar>(
    n: usize,
    k: usize,
    p_rewire: f64,
    seed: u64,
    opts: &BuildOptions<S>,
) -> Result<NetworkSpec<S>, TopologyError> {
    let links = small_world_links(n, k, p_rewire, seed)?;
    let mut net = network_from_undirected(n, &links, opts);
    net.topology = Some(TopologyMeta {
        generator: "small-world".into(),
        seed,
        params: BTreeMap::from([
            ("n".into(), n as f64),
            ("k".into(), k as f64),
            ("p".into(), p_rewire),
        ]),
    });
    Ok(net)
}

/// Barabási–Albert undirected links: a complete seed graph on `m` nodes, then
/// each new node attaches to `m` distinct existing nodes chosen with
/// probability proportional to degree.
pub fn scale_free_links(n: usize, m: usize, seed: u64) -> Result<Vec<(usize, usize)>, TopologyError> {
    if m < 1 {
        return param_err("m must be >= 1");
    }
    if n <= m {
        return param_err(format!("n must exceed m (n={n}, m={m})"));
    }
    let mut links = Vec::with_capacity(m * (m.saturating_sub(1)) / 2 + m * (n - m));
    // endpoint multiset: sampling uniformly from it is degree-proportional
    let mut ends: Vec<usize> = Vec::with_capacity(2 * links.capacity());
    for i in 0..m {
        for j in i + 1..m {
            links.push((i, j));
            ends.push(i);
            ends.push(j);
        }
    }
    let mut rng = RngStream::with_stream(seed, streams::GENERATOR);
    let mut targets: Vec<usize> = Vec::with_capacity(m);
    for v in m..n {
        targets.clear();
        if v == m {
            targets.extend(0..m);
        } else {
            while targets.len() < m {
                let t = ends[rng.random_range(0..ends.len())];
                if !targets.contains(&t) {
                    targets.push(t);
                }
            }
        }
        for &t in &targets {
            links.push((t.min(v), t.max(v)));
            ends.push(t);
            ends.push(v);
        }
    }
    Ok(links)
}

pub fn generate_scale_free<S: Scalar>(
    n: usize,
    m: usize,
    seed: u64,
    opts: &BuildOptions<S>,
) -> Result<NetworkSpec<S>, TopologyError> {
    let links = scale_free_links(n, m, seed)?;
    let mut net = network_from_undirected(n, &links, opts);
    net.topology = Some(TopologyMeta {
        generator: "scale-free".into(),
        seed,
        params: BTreeMap::from([("n".into(), n as f64), ("m".into(), m as f64)]),
    });
    Ok(net)
}

/// Places neurons uniformly in a square of `area_um2` and recomputes every
/// delay as rounded flight time at `velocity` plus the edge's fixed latency.
pub fn assign_layout_and_delays<S: Scalar>(
    spec: &NetworkSpec<S>,
    area_um2: f64,
    velocity: S,
    seed: u64,
) -> Result<NetworkSpec<S>, TopologyError> {
    if !(velocity > S::zero()) || !velocity.is_finite() {
        return param_err("velocity must be finite and > 0");
    }
    if !(area_um2 >= 0.0) || !area_um2.is_finite() {
        return param_err("area must be finite and >= 0");
    }
    let side = area_um2.sqrt();
    let mut rng = RngStream::with_stream(seed, streams::LAYOUT);
    let mut out = spec.clone();
    for nr in &mut out.neurons {
        let x = rng.random::<f64>() * side;
        let y = rng.random::<f64>() * side;
        nr.position = [S::lit(x), S::lit(y)];
    }
    out.signal_velocity = velocity;
    out.recompute_delays();
    Ok(out)
}

/// Marks `floor(fraction * n)` randomly chosen neurons inhibitory and makes
/// all of their efferent synapses inhibitory.
pub fn mix_inhibitory<S: Scalar>(
    spec: &NetworkSpec<S>,
    fraction: f64,
    seed: u64,
) -> Result<NetworkSpec<S>, TopologyError> {
    if !(0.0..=1.0).contains(&fraction) {
        return param_err(format!("fraction must be in [0, 1], got {fraction}"));
    }
    let n = spec.neurons.len();
    let count = ((fraction * n as f64).floor() as usize).min(n);
    let mut out = spec.clone();
    if count == 0 {
        return Ok(out);
    }
    let mut rng = RngStream::with_stream(seed, streams::INHIBITORY);
    let mut chosen = vec![false; n];
    for i in index::sample(&mut rng, n, count) {
        chosen[i] = true;
        out.neurons[i].inhibitory = true;
    }
    for e in &out.edges {
        if chosen[e.pre] {
            out.synapses[e.synapse_id].sign = Sign::Inhibitory;
        }
    }
    Ok(out)
}

/// Simple undirected graph with sorted, duplicate-free adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    pub adj: Vec<Vec<usize>>,
}

impl UndirectedGraph {
    pub fn from_links(n: usize, links: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut sets = vec![BTreeSet::new(); n];
        for (u, v) in links {
            if u != v && u < n && v < n {
                sets[u].insert(v);
                sets[v].insert(u);
            }
        }
        UndirectedGraph {
            adj: sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        }
    }

    /// Undirected projection of a network, ignoring self-edges and direction.
    pub fn from_network<S: Scalar>(spec: &NetworkSpec<S>) -> Self {
        Self::from_links(spec.neurons.len(), spec.edges.iter().map(|e| (e.pre, e.post)))
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Triangles through each node.
    fn triangles_per_node(&self) -> Vec<u64> {
        let mut t = vec![0u64; self.n()];
        for u in 0..self.n() {
            for &v in self.adj[u].iter().filter(|&&v| v > u) {
                // common neighbours w > v
                let (a, b) = (&self.adj[u], &self.adj[v]);
                let (mut i, mut j) = (0, 0);
                while i < a.len() && j < b.len() {
                    match a[i].cmp(&b[j]) {
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                        std::cmp::Ordering::Equal => {
                            let w = a[i];
                            if w > v {
                                t[u] += 1;
                                t[v] += 1;
                                t[w] += 1;
                            }
                            i += 1;
                            j += 1;
                        }
                    }
                }
            }
        }
        t
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n()];
        let mut comps = Vec::new();
        for s in 0..self.n() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        q.push_back(v);
                    }
                }
            }
            comps.push(comp);
        }
        comps
    }

    /// Sum of hop distances from `src` to every reachable node.
    fn bfs_sum(&self, src: usize) -> u64 {
        let mut dist = vec![u32::MAX; self.n()];
        dist[src] = 0;
        let mut q = VecDeque::from([src]);
        let mut total = 0u64;
        while let Some(u) = q.pop_front() {
            let d = dist[u];
            total += d as u64;
            for &v in &self.adj[u] {
                if dist[v] == u32::MAX {
                    dist[v] = d + 1;
                    q.push_back(v);
                }
            }
        }
        total
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    pub n_nodes: usize,
    pub n_links: usize,
    /// Global transitivity: 3 x triangles / connected triples.
    pub clustering: f64,
    /// Mean of per-node local clustering (nodes of degree < 2 count as 0).
    pub avg_local_clustering: f64,
    /// Mean shortest-path hops over ordered pairs of the largest component.
    pub avg_path_length: f64,
    pub connected: bool,
    pub largest_component: usize,
    pub path_length_sampled: bool,
    pub degree_hist: BTreeMap<usize, usize>,
    pub powerlaw_fit: Option<PowerLawFit>,
}

/// Exact all-pairs BFS is used up to this component size; above it sources are sampled.
pub const EXACT_PATH_LIMIT: usize = 10_000;
const SAMPLED_SOURCES: usize = 1_000;

pub fn measure<S: Scalar>(spec: &NetworkSpec<S>) -> TopologyReport {
    measure_graph(&UndirectedGraph::from_network(spec))
}

pub fn measure_graph(g: &UndirectedGraph) -> TopologyReport {
    let n = g.n();
    let tri = g.triangles_per_node();
    let mut triples = 0u64;
    let mut local_sum = 0.0;
    let mut degree_hist = BTreeMap::new();
    for v in 0..n {
        let d = g.degree(v) as u64;
        *degree_hist.entry(d as usize).or_insert(0) += 1;
        let pairs = d * d.saturating_sub(1) / 2;
        triples += pairs;
        if pairs > 0 {
            local_sum += tri[v] as f64 / pairs as f64;
        }
    }
    let tri_total: u64 = tri.iter().sum::<u64>() / 3;
    let clustering = if triples == 0 {
        0.0
    } else {
        3.0 * tri_total as f64 / triples as f64
    };

    let comps = g.components();
    let largest = comps.iter().max_by_key(|c| c.len()).cloned().unwrap_or_default();
    let size = largest.len();
    let sampled = size > EXACT_PATH_LIMIT;
    let sources: Vec<usize> = if sampled {
        let mut rng = RngStream::with_stream(0, streams::SAMPLING);
        let mut idx: Vec<usize> = index::sample(&mut rng, size, SAMPLED_SOURCES).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| largest[i]).collect()
    } else {
        largest.clone()
    };
    let avg_path_length = if size < 2 {
        0.0
    } else {
        let total: u64 = sources.par_iter().map(|&s| g.bfs_sum(s)).sum();
        total as f64 / (sources.len() as f64 * (size - 1) as f64)
    };

    let degrees: Vec<u64> = (0..n).map(|v| g.degree(v) as u64).filter(|&d| d > 0).collect();
    let powerlaw_fit = fit_power_law(&degrees, None).ok();

    TopologyReport {
        n_nodes: n,
        n_links: g.edge_count(),
        clustering,
        avg_local_clustering: if n == 0 { 0.0 } else { local_sum / n as f64 },
        avg_path_length,
        connected: comps.len() <= 1,
        largest_component: size,
        path_length_sampled: sampled,
        degree_hist,
        powerlaw_fit,
    }
}
