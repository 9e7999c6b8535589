//! Synthetic temporal graphs for tests and benchmarks.

use rand::Rng;

use crate::ingest::Label;
use crate::seeding;
use crate::tgraph::TemporalGraph;

/// Random multidigraph with `nodes` nodes and `edges` edges. Timestamps come
/// from `0..time_levels` and weights from `weight_levels` discrete values, so
/// ties are common; parallel edges and self-loops occur naturally.
pub fn random_multigraph<R: Rng>(nodes: usize, edges: usize, time_levels: i64, weight_levels: u32, rng: &mut R) -> TemporalGraph {
    let mut g = TemporalGraph::new();
    for i in 0..nodes {
        g.add_node(&format!("v{i}"));
    }
    for _ in 0..edges {
        let s = rng.gen_range(0..nodes);
        let d = rng.gen_range(0..nodes);
        let t = rng.gen_range(0..time_levels.max(1));
        let w = rng.gen_range(0..weight_levels.max(1)) as f64 * 0.5;
        g.add_edge(&format!("v{s}"), &format!("v{d}"), w, t)
            .expect("generated weights are non-negative");
    }
    g
}

/// Layout of [`planted_temporal_graph`].
#[derive(Clone, Debug)]
pub struct PlantedConfig {
    /// Labeled nodes per class.
    pub per_class: usize,
    pub bridges: usize,
    /// Nodes in each of the two downstream communities.
    pub community: usize,
    pub objective_out_degree: usize,
    pub bridge_out_degree: usize,
    pub community_out_degree: usize,
}

impl Default for PlantedConfig {
    /// 2,000 nodes: 400 labeled, 200 bridges, two communities of 700.
    fn default() -> Self {
        Self {
            per_class: 200,
            bridges: 200,
            community: 700,
            objective_out_degree: 3,
            bridge_out_degree: 5,
            community_out_degree: 4,
        }
    }
}

impl PlantedConfig {
    pub fn node_count(&self) -> usize {
        2 * self.per_class + self.bridges + 2 * self.community
    }
}

fn hex_id(kind: u8, i: usize) -> String {
    format!("0x{kind:02x}{i:038x}")
}

/// Graph whose labels are visible only through transaction timing.
///
/// Labeled nodes of both classes send funds to uniformly chosen bridge
/// accounts with identically distributed amounts. Bridges forward into an
/// "early" community (timestamps in `[0, 400]`) and a "late" community
/// (`[600, 1000]`), and each community only transacts internally within its
/// own window. Positive nodes transact in a short recent burst
/// (`[450, 550]`), so a time-respecting walk from them can only continue into
/// the late community; negative nodes transact early (`[0, 100]`). Ignoring
/// time, both classes have the same neighborhood distribution.
pub fn planted_temporal_graph(config: &PlantedConfig, seed: u64) -> (TemporalGraph, Vec<Label>) {
    let mut rng = seeding::stream(seed, &[0x5eed]);
    let mut g = TemporalGraph::new();
    let mut labels = Vec::with_capacity(2 * config.per_class);
    let objective: Vec<String> = (0..2 * config.per_class).map(|i| hex_id(1, i)).collect();
    let bridges: Vec<String> = (0..config.bridges).map(|i| hex_id(2, i)).collect();
    let early: Vec<String> = (0..config.community).map(|i| hex_id(3, i)).collect();
    let late: Vec<String> = (0..config.community).map(|i| hex_id(4, i)).collect();
    for id in objective.iter().chain(&bridges).chain(&early).chain(&late) {
        g.add_node(id);
    }

    let amount = |rng: &mut seeding::StreamRng| (rng.gen_range(-3.0f64..3.0)).exp();
    let edge = |g: &mut TemporalGraph, rng: &mut seeding::StreamRng, s: &str, d: &str, lo: i64, hi: i64| {
        let w = amount(rng);
        let t = rng.gen_range(lo..=hi);
        g.add_edge(s, d, w, t).expect("positive amount");
    };

    for (i, id) in objective.iter().enumerate() {
        let positive = i % 2 == 0;
        labels.push((id.clone(), positive));
        let (lo, hi) = if positive { (450, 550) } else { (0, 100) };
        for _ in 0..config.objective_out_degree {
            let b = &bridges[rng.gen_range(0..bridges.len())];
            edge(&mut g, &mut rng, id, b, lo, hi);
        }
    }
    for b in &bridges {
        for _ in 0..config.bridge_out_degree {
            let d = &early[rng.gen_range(0..early.len())];
            edge(&mut g, &mut rng, b, d, 0, 400);
            let d = &late[rng.gen_range(0..late.len())];
            edge(&mut g, &mut rng, b, d, 600, 1000);
        }
    }
    for (members, lo, hi) in [(&early, 0, 400), (&late, 600, 1000)] {
        for s in members.iter() {
            for _ in 0..config.community_out_degree {
                let d = &members[rng.gen_range(0..members.len())];
                edge(&mut g, &mut rng, s, d, lo, hi);
            }
        }
    }
    (g, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_graph_shape() {
        let cfg = PlantedConfig::default();
        let (g, labels) = planted_temporal_graph(&cfg, 1);
        assert_eq!(g.node_count(), 2000);
        assert_eq!(labels.len(), 400);
        assert_eq!(labels.iter().filter(|(_, l)| *l).count(), 200);
        let (g2, _) = planted_temporal_graph(&cfg, 1);
        assert_eq!(g.edges(), g2.edges());
    }
}
