//! Population structures: undirected simple graphs and the generators for
//! the network families used in the experiments.
//!
//! All generators are deterministic for a fixed seed. Families that can
//! produce disconnected draws (Erdős–Rényi, Watts–Strogatz rewiring,
//! random regular) are resampled until connected, up to a retry cap.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::error::{Error, Result};

/// Retry budget for generators that need resampling (connectivity or
/// feasibility rejections).
const MAX_ATTEMPTS: usize = 100;

/// An undirected simple graph on nodes `0..n`, stored as sorted
/// per-node neighbor lists. Immutable after construction; safe to share
/// read-only across concurrent simulations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<u32>>,
}

impl Graph {
    /// Builds a graph from an edge list, validating simplicity.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "graph needs at least 3 nodes, got {n}"
            )));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut seen = HashSet::with_capacity(edges.len());
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at node {u}")));
            }
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::InvalidParameter(format!("duplicate edge ({u}, {v})")));
            }
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Graph { adjacency })
    }

    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.adjacency[node]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edge_count() as f64 / self.n() as f64
    }

    /// Returns the common degree if the graph is regular.
    pub fn regular_degree(&self) -> Option<usize> {
        let k = self.degree(0);
        self.adjacency.iter().all(|a| a.len() == k).then_some(k)
    }

    /// Breadth-first reachability from node 0.
    pub fn is_connected(&self) -> bool {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0u32]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u as usize) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// All edges as (u, v) with u < v, sorted lexicographically.
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (u, list) in self.adjacency.iter().enumerate() {
            for &v in list {
                if (u as u32) < v {
                    out.push((u as u32, v));
                }
            }
        }
        out
    }

    /// Serializes as whitespace-separated "u v" lines, 0-based, canonical
    /// order (u < v, sorted).
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    /// Parses edge-list text. With `n = None` the node count is inferred as
    /// the maximum index plus one; with an explicit `n`, indices are range
    /// checked against it.
    pub fn from_edge_list(text: &str, n: Option<usize>) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_idx = 0u32;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<u32> {
                tok.ok_or(Error::EdgeList {
                    line: i + 1,
                    reason: "expected two indices".into(),
                })?
                .parse::<u32>()
                .map_err(|e| Error::EdgeList {
                    line: i + 1,
                    reason: e.to_string(),
                })
            };
            let u = parse(parts.next())?;
            let v = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(Error::EdgeList {
                    line: i + 1,
                    reason: "trailing tokens".into(),
                });
            }
            if u == v {
                return Err(Error::EdgeList {
                    line: i + 1,
                    reason: format!("self-loop at node {u}"),
                });
            }
            if let Some(n) = n {
                if u as usize >= n || v as usize >= n {
                    return Err(Error::EdgeList {
                        line: i + 1,
                        reason: format!("index out of range for n = {n}"),
                    });
                }
            }
            max_idx = max_idx.max(u).max(v);
            edges.push((u, v));
        }
        let n = n.unwrap_or(max_idx as usize + 1);
        Graph::from_edges(n, &edges)
    }
}

/// Network family with its construction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GraphFamily {
    /// L×L square lattice with periodic boundaries and von Neumann
    /// neighborhood; every node has degree 4.
    Lattice2d { side: usize },
    /// Uniform random k-regular graph (pairing construction).
    RandomRegular { degree: usize },
    /// G(N, M) with M = ceil(mean_degree * N / 2) edges.
    ErdosRenyi { mean_degree: f64 },
    /// Ring lattice of even degree with independent edge rewiring.
    WattsStrogatz { base_degree: usize, rewire_prob: f64 },
    /// Preferential attachment from a connected seed clique of `seed_nodes`
    /// nodes; each new node attaches `edges_per_node` distinct edges.
    BarabasiAlbert { seed_nodes: usize, edges_per_node: usize },
}

/// A reproducible recipe for a population structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    #[serde(flatten)]
    pub family: GraphFamily,
    pub seed: u64,
}

impl GraphSpec {
    pub fn lattice(side: usize, seed: u64) -> Self {
        GraphSpec {
            n: side * side,
            family: GraphFamily::Lattice2d { side },
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidParameter(format!(
                "population must have n >= 3, got {}",
                self.n
            )));
        }
        match self.family {
            GraphFamily::Lattice2d { side } => {
                if side < 3 {
                    return Err(Error::InvalidParameter(
                        "lattice side must be >= 3 (smaller tori are not simple graphs)".into(),
                    ));
                }
                if side * side != self.n {
                    return Err(Error::InvalidParameter(format!(
                        "lattice of side {side} has {} nodes, spec says n = {}",
                        side * side,
                        self.n
                    )));
                }
            }
            GraphFamily::RandomRegular { degree } => {
                if degree == 0 || degree >= self.n {
                    return Err(Error::InvalidParameter(format!(
                        "regular degree {degree} infeasible for n = {}",
                        self.n
                    )));
                }
                if degree * self.n % 2 != 0 {
                    return Err(Error::InvalidParameter(format!(
                        "n*k = {}*{degree} is odd; no such regular graph",
                        self.n
                    )));
                }
            }
            GraphFamily::ErdosRenyi { mean_degree } => {
                if mean_degree <= 0.0 || mean_degree >= self.n as f64 {
                    return Err(Error::InvalidParameter(format!(
                        "mean degree {mean_degree} infeasible for n = {}",
                        self.n
                    )));
                }
            }
            GraphFamily::WattsStrogatz {
                base_degree,
                rewire_prob,
            } => {
                if base_degree == 0 || base_degree % 2 != 0 || base_degree >= self.n {
                    return Err(Error::InvalidParameter(format!(
                        "ring base degree must be even and < n, got {base_degree}"
                    )));
                }
                if !(0.0..=1.0).contains(&rewire_prob) {
                    return Err(Error::InvalidParameter(format!(
                        "rewire probability {rewire_prob} outside [0,1]"
                    )));
                }
            }
            GraphFamily::BarabasiAlbert {
                seed_nodes,
                edges_per_node,
            } => {
                if seed_nodes < 2 || seed_nodes > self.n {
                    return Err(Error::InvalidParameter(format!(
                        "seed clique size {seed_nodes} infeasible for n = {}",
                        self.n
                    )));
                }
                if edges_per_node == 0 || edges_per_node > seed_nodes {
                    return Err(Error::InvalidParameter(format!(
                        "edges per node {edges_per_node} must be in 1..={seed_nodes}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Generates the graph described by `spec`. Deterministic for a fixed seed.
pub fn generate(spec: &GraphSpec) -> Result<Graph> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    match spec.family {
        GraphFamily::Lattice2d { side } => lattice2d(side),
        GraphFamily::RandomRegular { degree } => {
            retry_connected(|rng| random_regular(spec.n, degree, rng), &mut rng)
        }
        GraphFamily::ErdosRenyi { mean_degree } => {
            let m = (mean_degree * spec.n as f64 / 2.0).ceil() as usize;
            retry_connected(|rng| erdos_renyi(spec.n, m, rng), &mut rng)
        }
        GraphFamily::WattsStrogatz {
            base_degree,
            rewire_prob,
        } => retry_connected(
            |rng| watts_strogatz(spec.n, base_degree, rewire_prob, rng),
            &mut rng,
        ),
        GraphFamily::BarabasiAlbert {
            seed_nodes,
            edges_per_node,
        } => {
            // Connected by construction (clique plus attachment).
            barabasi_albert(spec.n, seed_nodes, edges_per_node, &mut rng)
        }
    }
}

fn retry_connected<F>(mut build: F, rng: &mut ChaCha12Rng) -> Result<Graph>
where
    F: FnMut(&mut ChaCha12Rng) -> Result<Graph>,
{
    for _ in 0..MAX_ATTEMPTS {
        match build(rng) {
            Ok(g) if g.is_connected() => return Ok(g),
            Ok(_) | Err(Error::GraphGeneration(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Disconnected {
        attempts: MAX_ATTEMPTS,
    })
}

fn lattice2d(side: usize) -> Result<Graph> {
    let idx = |r: usize, c: usize| (r * side + c) as u32;
    let mut edges = Vec::with_capacity(2 * side * side);
    for r in 0..side {
        for c in 0..side {
            edges.push((idx(r, c), idx(r, (c + 1) % side)));
            edges.push((idx(r, c), idx((r + 1) % side, c)));
        }
    }
    Graph::from_edges(side * side, &edges)
}

/// Pairing (configuration-model) construction; a draw is rejected if it
/// produces a self-loop or duplicate edge.
fn random_regular(n: usize, k: usize, rng: &mut ChaCha12Rng) -> Result<Graph> {
    let mut stubs: Vec<u32> = (0..n as u32).flat_map(|v| std::iter::repeat(v).take(k)).collect();
    stubs.shuffle(rng);
    let mut seen = HashSet::with_capacity(n * k / 2);
    let mut edges = Vec::with_capacity(n * k / 2);
    for pair in stubs.chunks(2) {
        let (u, v) = (pair[0], pair[1]);
        if u == v || !seen.insert((u.min(v), u.max(v))) {
            return Err(Error::GraphGeneration("pairing produced a non-simple edge".into()));
        }
        edges.push((u, v));
    }
    Graph::from_edges(n, &edges)
}

fn erdos_renyi(n: usize, m: usize, rng: &mut ChaCha12Rng) -> Result<Graph> {
    let max_edges = n * (n - 1) / 2;
    if m > max_edges {
        return Err(Error::InvalidParameter(format!(
            "requested {m} edges exceeds the {max_edges} possible"
        )));
    }
    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    while edges.len() < m {
        let u = rng.gen_range(0..n as u32);
        let v = rng.gen_range(0..n as u32);
        if u != v && seen.insert((u.min(v), u.max(v))) {
            edges.push((u, v));
        }
    }
    Graph::from_edges(n, &edges)
}

fn watts_strogatz(n: usize, base_degree: usize, p: f64, rng: &mut ChaCha12Rng) -> Result<Graph> {
    let half = base_degree / 2;
    let mut seen = HashSet::with_capacity(n * half);
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(n * half);
    for u in 0..n {
        for s in 1..=half {
            let v = (u + s) % n;
            let key = ((u as u32).min(v as u32), (u as u32).max(v as u32));
            seen.insert(key);
            edges.push((u as u32, v as u32));
        }
    }
    // Rewire the far endpoint of each ring edge with probability p,
    // redrawing on self-loops and duplicates so the edge count is preserved.
    for i in 0..edges.len() {
        if rng.gen::<f64>() >= p {
            continue;
        }
        let (u, old_v) = edges[i];
        let old_key = (u.min(old_v), u.max(old_v));
        loop {
            let w = rng.gen_range(0..n as u32);
            let key = (u.min(w), u.max(w));
            if w == u || (key != old_key && seen.contains(&key)) {
                continue;
            }
            if key == old_key {
                break; // redrew the same endpoint; keep the edge
            }
            seen.remove(&old_key);
            seen.insert(key);
            edges[i] = (u, w);
            break;
        }
    }
    Graph::from_edges(n, &edges)
}

fn barabasi_albert(n: usize, m0: usize, m: usize, rng: &mut ChaCha12Rng) -> Result<Graph> {
    // Repeated-nodes list: each endpoint appearance weights future draws.
    let mut targets: Vec<u32> = Vec::with_capacity(2 * n * m);
    let mut edges = Vec::with_capacity(m0 * (m0 - 1) / 2 + (n - m0) * m);
    for u in 0..m0 as u32 {
        for v in (u + 1)..m0 as u32 {
            edges.push((u, v));
            targets.push(u);
            targets.push(v);
        }
    }
    for new in m0 as u32..n as u32 {
        let mut chosen = HashSet::with_capacity(m);
        while chosen.len() < m {
            let t = targets[rng.gen_range(0..targets.len())];
            chosen.insert(t);
        }
        for &t in &chosen {
            edges.push((new, t));
            targets.push(new);
            targets.push(t);
        }
    }
    Graph::from_edges(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize, family: GraphFamily, seed: u64) -> GraphSpec {
        GraphSpec { n, family, seed }
    }

    #[test]
    fn lattice_10_is_4_regular_with_100_nodes() {
        let g = generate(&GraphSpec::lattice(10, 1)).unwrap();
        assert_eq!(g.n(), 100);
        assert_eq!(g.regular_degree(), Some(4));
        assert!(g.is_connected());
    }

    #[test]
    fn lattice_3_torus() {
        let g = generate(&GraphSpec::lattice(3, 7)).unwrap();
        assert_eq!(g.n(), 9);
        assert_eq!(g.regular_degree(), Some(4));
        // symmetry: j in adj(i) <=> i in adj(j)
        for i in 0..9 {
            for &j in g.neighbors(i) {
                assert!(g.neighbors(j as usize).contains(&(i as u32)));
            }
        }
    }

    #[test]
    fn barabasi_albert_mean_degree_matches_edge_count() {
        let g = generate(&spec(
            100,
            GraphFamily::BarabasiAlbert {
                seed_nodes: 6,
                edges_per_node: 2,
            },
            42,
        ))
        .unwrap();
        // clique edges + m per added node, all distinct by construction
        let expected_edges = 6 * 5 / 2 + 94 * 2;
        assert_eq!(g.edge_count(), expected_edges);
        assert!((g.mean_degree() - 2.0 * expected_edges as f64 / 100.0).abs() < 1e-12);
        assert!(g.is_connected());
    }

    #[test]
    fn random_regular_has_exact_degree() {
        let g = generate(&spec(100, GraphFamily::RandomRegular { degree: 4 }, 3)).unwrap();
        assert_eq!(g.regular_degree(), Some(4));
        assert!(g.is_connected());
    }

    #[test]
    fn random_regular_odd_product_rejected() {
        let err = generate(&spec(99, GraphFamily::RandomRegular { degree: 3 }, 3)).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn watts_strogatz_preserves_ring_edge_count() {
        for seed in 0..5 {
            let g = generate(&spec(
                100,
                GraphFamily::WattsStrogatz {
                    base_degree: 4,
                    rewire_prob: 0.1,
                },
                seed,
            ))
            .unwrap();
            assert_eq!(g.edge_count(), 200);
            assert!(g.is_connected());
        }
    }

    #[test]
    fn erdos_renyi_connected_with_requested_edges() {
        let g = generate(&spec(100, GraphFamily::ErdosRenyi { mean_degree: 4.0 }, 11)).unwrap();
        assert_eq!(g.edge_count(), 200);
        assert!(g.is_connected());
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        for family in [
            GraphFamily::RandomRegular { degree: 4 },
            GraphFamily::ErdosRenyi { mean_degree: 4.0 },
            GraphFamily::WattsStrogatz {
                base_degree: 4,
                rewire_prob: 0.1,
            },
            GraphFamily::BarabasiAlbert {
                seed_nodes: 6,
                edges_per_node: 2,
            },
        ] {
            let a = generate(&spec(100, family, 5)).unwrap();
            let b = generate(&spec(100, family, 5)).unwrap();
            assert_eq!(a, b);
            let c = generate(&spec(100, family, 6)).unwrap();
            assert!(a != c, "different seeds should give different draws");
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = Graph::from_edge_list("0 1\n1 2\n2 0\n", None).unwrap();
        assert_eq!(g.n(), 3);
        assert_eq!(g.regular_degree(), Some(2));
        assert_eq!(Graph::from_edge_list(&g.to_edge_list(), None).unwrap(), g);

        let lat = generate(&GraphSpec::lattice(3, 0)).unwrap();
        let back = Graph::from_edge_list(&lat.to_edge_list(), Some(9)).unwrap();
        assert_eq!(back, lat);
        assert_eq!(back.regular_degree(), Some(4));
    }

    #[test]
    fn edge_list_rejects_malformed_input() {
        assert!(matches!(
            Graph::from_edge_list("0 1\n1\n", None),
            Err(Error::EdgeList { line: 2, .. })
        ));
        assert!(matches!(
            Graph::from_edge_list("0 0\n", None),
            Err(Error::EdgeList { line: 1, .. })
        ));
        assert!(matches!(
            Graph::from_edge_list("0 5\n", Some(3)),
            Err(Error::EdgeList { line: 1, .. })
        ));
        assert!(matches!(
            Graph::from_edge_list("0 1\n1 0\n", None),
            Err(Error::InvalidParameter(_))
        ));
    }
}
