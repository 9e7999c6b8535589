//! Time-respecting random walks.
//!
//! A walk that arrived at `v` over an edge with timestamp `t` may only leave
//! over an edge in `N_t(v)`. The next edge is drawn from that neighborhood
//! under one of the sampling laws of [`StrategyKind`]; a walk ends at its
//! length limit or as soon as the neighborhood is empty.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{self, TAG_SHUFFLE, TAG_WALK};
use crate::tgraph::{EdgeId, NodeId, TemporalGraph, Timestamp, NEG_INFINITY};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    /// Uniform over the temporal neighborhood.
    Uniform,
    /// Temporal biased: proportional to the descending time rank.
    Tbs,
    /// Weight biased: proportional to the ascending amount rank.
    Wbs,
    /// Normalized geometric blend `P_tbs^alpha * P_wbs^(1 - alpha)`.
    TbsWbs,
    /// Uniform over all out-edges, ignoring time. DeepWalk-style baseline.
    StaticUniform,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::Uniform,
        StrategyKind::Tbs,
        StrategyKind::Wbs,
        StrategyKind::TbsWbs,
        StrategyKind::StaticUniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Uniform => "uniform",
            StrategyKind::Tbs => "tbs",
            StrategyKind::Wbs => "wbs",
            StrategyKind::TbsWbs => "tbs_wbs",
            StrategyKind::StaticUniform => "static_uniform",
        }
    }

    pub fn is_temporal(self) -> bool {
        self != StrategyKind::StaticUniform
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', '+'], "_");
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Validation(format!("unknown sampling strategy `{s}`")))
    }
}

/// Which end of the rankings receives the large rank.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOrientation {
    /// Soonest timestamp and largest amount get the largest rank.
    #[default]
    Standard,
    /// Both rankings flipped (ablation).
    Reversed,
}

pub const DEFAULT_ALPHA: f64 = 0.5;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingStrategy {
    pub kind: StrategyKind,
    pub alpha: f64,
    #[serde(default)]
    pub orientation: RankOrientation,
}

impl SamplingStrategy {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            alpha: DEFAULT_ALPHA,
            orientation: RankOrientation::Standard,
        }
    }

    pub fn tbs_wbs(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::new(StrategyKind::TbsWbs)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Validation(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

impl Default for SamplingStrategy {
    fn default() -> Self {
        Self::new(StrategyKind::TbsWbs)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Maximum number of nodes per walk.
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walk_length: 10,
            walks_per_node: 4,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_length == 0 || self.walks_per_node == 0 {
            return Err(Error::Validation(
                "walk_length and walks_per_node must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Walk {
    pub nodes: Vec<NodeId>,
    pub edges: Vec<EdgeId>,
}

impl AsRef<[NodeId]> for Walk {
    fn as_ref(&self) -> &[NodeId] {
        &self.nodes
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WalkCorpus {
    pub walks: Vec<Walk>,
    pub node_frequencies: Vec<u64>,
}

/// Occurrence count of every node across `walks`.
pub fn node_frequencies<W: AsRef<[NodeId]>>(walks: &[W], node_count: usize) -> Vec<u64> {
    let mut freq = vec![0u64; node_count];
    for walk in walks {
        for node in walk.as_ref() {
            freq[node.0] += 1;
        }
    }
    freq
}

impl WalkCorpus {
    pub fn from_walks(walks: Vec<Walk>, node_count: usize) -> Self {
        let node_frequencies = node_frequencies(&walks, node_count);
        Self {
            walks,
            node_frequencies,
        }
    }

    pub fn len(&self) -> usize {
        self.walks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walks.is_empty()
    }

    /// One walk per line, external ids separated by single spaces.
    pub fn write_text<W: Write>(&self, graph: &TemporalGraph, mut out: W) -> std::io::Result<()> {
        for walk in &self.walks {
            let mut first = true;
            for &node in &walk.nodes {
                if !first {
                    out.write_all(b" ")?;
                }
                first = false;
                out.write_all(graph.external_id(node).as_bytes())?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()
    }
}

/// Reads a text corpus back as node sequences, resolving ids against `graph`.
pub fn read_corpus_text<R: BufRead>(graph: &TemporalGraph, input: R, source_name: &str) -> Result<Vec<Vec<NodeId>>> {
    let mut walks = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::format(source_name, i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let walk = line
            .split_whitespace()
            .map(|tok| {
                graph
                    .node(tok)
                    .ok_or_else(|| Error::format(source_name, i + 1, format!("unknown node `{tok}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        walks.push(walk);
    }
    Ok(walks)
}

/// Ascending ranks `1..=n`, tied keys sharing the mean of the ranks they span.
fn average_ranks<T: PartialOrd + Copy>(keys: &[T]) -> Vec<f64> {
    let n = keys.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].partial_cmp(&keys[b]).expect("rank keys must be comparable"));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && keys[order[j]] == keys[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let mean = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = mean;
        }
        i = j;
    }
    ranks
}

fn flip(mut ranks: Vec<f64>) -> Vec<f64> {
    let top = ranks.len() as f64 + 1.0;
    for r in &mut ranks {
        *r = top - *r;
    }
    ranks
}

/// `eta_-`: the earliest timestamp gets rank `n`, the latest rank 1.
pub fn rank_descending_time(timestamps: &[Timestamp]) -> Result<Vec<f64>> {
    if timestamps.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    Ok(flip(average_ranks(timestamps)))
}

/// `eta_+`: the smallest weight gets rank 1, the largest rank `n`.
pub fn rank_ascending_weight(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    Ok(average_ranks(weights))
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.into_iter().map(|x| x / total).collect()
}

fn tbs_probabilities(timestamps: &[Timestamp], orientation: RankOrientation) -> Result<Vec<f64>> {
    let ranks = rank_descending_time(timestamps)?;
    Ok(normalized(match orientation {
        RankOrientation::Standard => ranks,
        RankOrientation::Reversed => flip(ranks),
    }))
}

fn wbs_probabilities(weights: &[f64], orientation: RankOrientation) -> Result<Vec<f64>> {
    let ranks = rank_ascending_weight(weights)?;
    Ok(normalized(match orientation {
        RankOrientation::Standard => ranks,
        RankOrientation::Reversed => flip(ranks),
    }))
}

/// Selection probability of each candidate edge, given as parallel slices of
/// timestamps and weights.
pub fn edge_probabilities(timestamps: &[Timestamp], weights: &[f64], strategy: &SamplingStrategy) -> Result<Vec<f64>> {
    if timestamps.len() != weights.len() {
        return Err(Error::Validation("timestamp and weight slices differ in length".into()));
    }
    if timestamps.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    strategy.validate()?;
    let n = timestamps.len();
    match strategy.kind {
        StrategyKind::Uniform | StrategyKind::StaticUniform => Ok(vec![1.0 / n as f64; n]),
        StrategyKind::Tbs => tbs_probabilities(timestamps, strategy.orientation),
        StrategyKind::Wbs => wbs_probabilities(weights, strategy.orientation),
        StrategyKind::TbsWbs => {
            let alpha = strategy.alpha;
            if alpha == 1.0 {
                return tbs_probabilities(timestamps, strategy.orientation);
            }
            if alpha == 0.0 {
                return wbs_probabilities(weights, strategy.orientation);
            }
            let tbs = tbs_probabilities(timestamps, strategy.orientation)?;
            let wbs = wbs_probabilities(weights, strategy.orientation)?;
            let logs: Vec<f64> = tbs
                .iter()
                .zip(&wbs)
                .map(|(p, q)| alpha * p.ln() + (1.0 - alpha) * q.ln())
                .collect();
            let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(normalized(logs.into_iter().map(|l| (l - max).exp()).collect()))
        }
    }
}

/// Probabilities over a neighborhood of `graph`.
pub fn neighborhood_probabilities(graph: &TemporalGraph, neighborhood: &[EdgeId], strategy: &SamplingStrategy) -> Result<Vec<f64>> {
    let (ts, ws): (Vec<Timestamp>, Vec<f64>) = neighborhood
        .iter()
        .map(|&e| {
            let edge = graph.edge(e);
            (edge.timestamp, edge.weight)
        })
        .unzip();
    edge_probabilities(&ts, &ws, strategy)
}

/// Cumulative-sum inversion.
pub fn sample_index<R: Rng + ?Sized>(probabilities: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probabilities.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probabilities.len() - 1
}

/// A single walk of at most `walk_length` nodes starting at `start`.
pub fn temporal_walk<R: Rng + ?Sized>(
    graph: &TemporalGraph,
    start: NodeId,
    walk_length: usize,
    strategy: &SamplingStrategy,
    rng: &mut R,
) -> Result<Walk> {
    if start.index() >= graph.node_count() {
        return Err(Error::UnknownNode(start.to_string()));
    }
    strategy.validate()?;
    let mut walk = Walk {
        nodes: Vec::with_capacity(walk_length),
        edges: Vec::with_capacity(walk_length.saturating_sub(1)),
    };
    walk.nodes.push(start);
    let mut current = start;
    let mut floor: Timestamp = NEG_INFINITY;
    while walk.nodes.len() < walk_length {
        let candidates = graph.neighborhood(current, floor);
        if candidates.is_empty() {
            break;
        }
        // Every law goes through the same inversion so that laws which
        // coincide on a neighborhood also make identical draws.
        let probs = neighborhood_probabilities(graph, candidates, strategy)?;
        let chosen = candidates[sample_index(&probs, rng)];
        let edge = graph.edge(chosen);
        walk.edges.push(chosen);
        walk.nodes.push(edge.dst);
        current = edge.dst;
        if strategy.kind.is_temporal() {
            floor = edge.timestamp;
        }
    }
    Ok(walk)
}

/// `walks_per_node` rounds; each round starts one walk at every node, in a
/// per-round shuffled order. Each (round, start) pair draws from its own
/// stream, so the corpus does not depend on the number of worker threads.
pub fn generate_corpus(graph: &TemporalGraph, config: &WalkConfig, strategy: &SamplingStrategy) -> Result<WalkCorpus> {
    config.validate()?;
    strategy.validate()?;
    let mut walks = Vec::with_capacity(config.walks_per_node * graph.node_count());
    for round in 0..config.walks_per_node {
        let mut order: Vec<NodeId> = graph.nodes().collect();
        order.shuffle(&mut seeding::stream(config.seed, &[TAG_SHUFFLE, round as u64]));
        let batch = order
            .par_iter()
            .map(|&start| {
                let mut rng = seeding::stream(config.seed, &[TAG_WALK, round as u64, start.index() as u64]);
                temporal_walk(graph, start, config.walk_length, strategy, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        walks.extend(batch);
    }
    Ok(WalkCorpus::from_walks(walks, graph.node_count()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn strat(kind: StrategyKind) -> SamplingStrategy {
        SamplingStrategy::new(kind)
    }

    #[test]
    fn descending_time_ranks() {
        assert_eq!(rank_descending_time(&[3, 5, 8]).unwrap(), vec![3.0, 2.0, 1.0]);
        assert_eq!(rank_descending_time(&[4, 4, 9]).unwrap(), vec![2.5, 2.5, 1.0]);
        assert_eq!(rank_descending_time(&[7]).unwrap(), vec![1.0]);
        assert!(matches!(rank_descending_time(&[]), Err(Error::EmptyNeighborhood)));
    }

    #[test]
    fn ascending_weight_ranks() {
        assert_eq!(rank_ascending_weight(&[1.0, 2.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(rank_ascending_weight(&[2.0, 2.0]).unwrap(), vec![1.5, 1.5]);
        assert_eq!(rank_ascending_weight(&[0.0]).unwrap(), vec![1.0]);
        assert!(matches!(rank_ascending_weight(&[]), Err(Error::EmptyNeighborhood)));
    }

    #[test]
    fn probability_examples() {
        let p = edge_probabilities(&[1, 2, 3, 4], &[1.0; 4], &strat(StrategyKind::Uniform)).unwrap();
        assert_eq!(p, vec![0.25; 4]);

        let p = edge_probabilities(&[3, 5, 8], &[1.0, 1.0, 1.0], &strat(StrategyKind::Tbs)).unwrap();
        for (a, b) in p.iter().zip([1.0 / 2.0, 1.0 / 3.0, 1.0 / 6.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }

        let p = edge_probabilities(&[0, 0, 0], &[1.0, 2.0, 4.0], &strat(StrategyKind::Wbs)).unwrap();
        for (a, b) in p.iter().zip([1.0 / 6.0, 1.0 / 3.0, 1.0 / 2.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }

        // geometric mean oracle: sqrt(p*q) renormalized
        let tbs = [0.5, 1.0 / 3.0, 1.0 / 6.0];
        let wbs = [1.0 / 6.0, 1.0 / 3.0, 0.5];
        let g: Vec<f64> = tbs.iter().zip(&wbs).map(|(p, q)| f64::sqrt(p * q)).collect();
        let s: f64 = g.iter().sum();
        let p = edge_probabilities(&[3, 5, 8], &[1.0, 2.0, 4.0], &SamplingStrategy::tbs_wbs(0.5)).unwrap();
        for (a, b) in p.iter().zip(g.iter().map(|x| x / s)) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(p[0], 0.3169, epsilon = 1e-4);
        assert_abs_diff_eq!(p[1], 0.3661, epsilon = 1e-4);

        let one = edge_probabilities(&[3, 5, 8], &[1.0, 2.0, 4.0], &SamplingStrategy::tbs_wbs(1.0)).unwrap();
        let tbs = edge_probabilities(&[3, 5, 8], &[1.0, 2.0, 4.0], &strat(StrategyKind::Tbs)).unwrap();
        assert_eq!(one, tbs);
    }

    #[test]
    fn probability_errors() {
        assert!(matches!(
            edge_probabilities(&[], &[], &strat(StrategyKind::Tbs)),
            Err(Error::EmptyNeighborhood)
        ));
        assert!(edge_probabilities(&[1], &[1.0], &SamplingStrategy::tbs_wbs(1.5)).is_err());
        assert!(edge_probabilities(&[1, 2], &[1.0], &strat(StrategyKind::Tbs)).is_err());
    }

    #[test]
    fn reversed_orientation_flips_preference() {
        let s = SamplingStrategy {
            orientation: RankOrientation::Reversed,
            ..strat(StrategyKind::Tbs)
        };
        let p = edge_probabilities(&[3, 5, 8], &[1.0; 3], &s).unwrap();
        assert!(p[2] > p[0]);
    }

    #[test]
    fn strategy_names_round_trip() {
        for k in StrategyKind::ALL {
            assert_eq!(k.name().parse::<StrategyKind>().unwrap(), k);
        }
        assert_eq!("TBS+WBS".parse::<StrategyKind>().unwrap(), StrategyKind::TbsWbs);
        assert!("node2vec".parse::<StrategyKind>().is_err());
    }

    #[test]
    fn walk_from_sink_is_single_node() {
        let mut g = TemporalGraph::new();
        g.add_edge("A", "B", 1.0, 1).unwrap();
        let b = g.node("B").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = temporal_walk(&g, b, 10, &strat(StrategyKind::Tbs), &mut rng).unwrap();
        assert_eq!(w.nodes, vec![b]);
        assert!(w.edges.is_empty());
    }

    #[test]
    fn walk_follows_forced_path() {
        let mut g = TemporalGraph::new();
        g.add_edge("A", "B", 1.0, 1).unwrap();
        g.add_edge("B", "C", 1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = temporal_walk(&g, NodeId(0), 10, &strat(StrategyKind::Uniform), &mut rng).unwrap();
        assert_eq!(w.nodes, vec![NodeId(0), NodeId(1), NodeId(2)]);
        assert_eq!(w.edges, vec![EdgeId(0), EdgeId(1)]);
    }

    #[test]
    fn temporal_walk_refuses_earlier_edge_but_static_does_not() {
        let mut g = TemporalGraph::new();
        g.add_edge("A", "B", 1.0, 5).unwrap();
        g.add_edge("B", "A", 1.0, 3).unwrap();
        let (a, b) = (g.node("A").unwrap(), g.node("B").unwrap());
        for kind in [StrategyKind::Uniform, StrategyKind::Tbs, StrategyKind::Wbs, StrategyKind::TbsWbs] {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let w = temporal_walk(&g, a, 3, &strat(kind), &mut rng).unwrap();
            assert_eq!(w.nodes, vec![a, b], "{kind}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = temporal_walk(&g, a, 3, &strat(StrategyKind::StaticUniform), &mut rng).unwrap();
        assert_eq!(w.nodes, vec![a, b, a]);
    }

    #[test]
    fn walk_rejects_unknown_start() {
        let g = TemporalGraph::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            temporal_walk(&g, NodeId(0), 3, &strat(StrategyKind::Tbs), &mut rng),
            Err(Error::UnknownNode(_))
        ));
    }

    fn small_graph() -> TemporalGraph {
        let mut g = TemporalGraph::new();
        for i in 0..30u32 {
            for j in 0..3u32 {
                let dst = (i * 7 + j * 11 + 1) % 30;
                g.add_edge(&format!("n{i}"), &format!("n{dst}"), (i + j) as f64, ((i * 13 + j * 5) % 17) as i64)
                    .unwrap();
            }
        }
        g
    }

    #[test]
    fn corpus_shape_and_determinism() {
        let g = small_graph();
        let cfg = WalkConfig {
            walk_length: 10,
            walks_per_node: 4,
            seed: 42,
        };
        let s = strat(StrategyKind::Tbs);
        let a = generate_corpus(&g, &cfg, &s).unwrap();
        let b = generate_corpus(&g, &cfg, &s).unwrap();
        assert_eq!(a.len(), 4 * g.node_count());
        assert_eq!(a, b);

        let mut ta = Vec::new();
        let mut tb = Vec::new();
        a.write_text(&g, &mut ta).unwrap();
        b.write_text(&g, &mut tb).unwrap();
        assert_eq!(ta, tb);

        let total: u64 = a.node_frequencies.iter().sum();
        assert_eq!(total as usize, a.walks.iter().map(|w| w.nodes.len()).sum::<usize>());
    }

    #[test]
    fn corpus_is_independent_of_thread_count() {
        let g = small_graph();
        let cfg = WalkConfig {
            seed: 9,
            ..WalkConfig::default()
        };
        let s = strat(StrategyKind::TbsWbs);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let many = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = single.install(|| generate_corpus(&g, &cfg, &s).unwrap());
        let b = many.install(|| generate_corpus(&g, &cfg, &s).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_corpus() {
        let g = small_graph();
        let cfg = WalkConfig {
            walk_length: 1,
            walks_per_node: 1,
            seed: 0,
        };
        let c = generate_corpus(&g, &cfg, &strat(StrategyKind::Tbs)).unwrap();
        assert!(c.walks.iter().all(|w| w.nodes.len() == 1));
        assert!(c.node_frequencies.iter().all(|&f| f == 1));
        assert!(generate_corpus(
            &g,
            &WalkConfig {
                walk_length: 0,
                ..cfg
            },
            &strat(StrategyKind::Tbs)
        )
        .is_err());
    }

    #[test]
    fn corpus_text_round_trip() {
        let g = small_graph();
        let c = generate_corpus(&g, &WalkConfig::default(), &strat(StrategyKind::Wbs)).unwrap();
        let mut buf = Vec::new();
        c.write_text(&g, &mut buf).unwrap();
        let back = read_corpus_text(&g, buf.as_slice(), "corpus").unwrap();
        let nodes: Vec<Vec<NodeId>> = c.walks.iter().map(|w| w.nodes.clone()).collect();
        assert_eq!(back, nodes);
        let err = read_corpus_text(&g, "n0 n1\nn0 bogus\n".as_bytes(), "corpus").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }));
    }
}
