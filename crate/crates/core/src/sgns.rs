//! Skip-gram with hierarchical softmax.
//!
//! Every node is a leaf of a Huffman tree built from corpus frequencies. The
//! probability of observing `target` in the context of `center` is the
//! product, along `target`'s root-to-leaf path, of sigmoid branch decisions
//! `sigma(+-phi(center) . psi(b))`, where `psi(b)` is the vector of internal
//! node `b`. Training runs plain SGD on the negative log of that product.

use std::cell::Cell;
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{self, TAG_INIT};
use crate::tgraph::{NodeId, TemporalGraph};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HuffmanTree {
    leaf_count: usize,
    /// Per leaf, branch bits from the root down (0 = first-merged child).
    codes: Vec<Vec<u8>>,
    /// Per leaf, internal-node ids from the root down to the leaf's parent.
    paths: Vec<Vec<u32>>,
}

impl HuffmanTree {
    /// Greedy two-minimum merge. Ties between subtrees are broken by
    /// `(frequency, smallest contained leaf id)`.
    pub fn build(frequencies: &[u64]) -> Result<Self> {
        let n = frequencies.len();
        if n < 2 {
            return Err(Error::DegenerateVocabulary(format!(
                "need at least 2 nodes, got {n}"
            )));
        }
        if frequencies.iter().all(|&f| f == 0) {
            return Err(Error::DegenerateVocabulary("all frequencies are zero".into()));
        }

        // Tree slots: 0..n are leaves, n..2n-1 internal nodes.
        let mut parent = vec![usize::MAX; 2 * n - 1];
        let mut bit = vec![0u8; 2 * n - 1];
        let mut heap: BinaryHeap<Reverse<(u64, usize, usize)>> =
            frequencies.iter().enumerate().map(|(i, &f)| Reverse((f, i, i))).collect();
        let mut next = n;
        while heap.len() > 1 {
            let Reverse((fa, ma, a)) = heap.pop().unwrap();
            let Reverse((fb, mb, b)) = heap.pop().unwrap();
            parent[a] = next;
            parent[b] = next;
            bit[b] = 1;
            heap.push(Reverse((fa + fb, ma.min(mb), next)));
            next += 1;
        }
        let root = 2 * n - 2;

        let mut codes = Vec::with_capacity(n);
        let mut paths = Vec::with_capacity(n);
        for leaf in 0..n {
            let mut code = Vec::new();
            let mut path = Vec::new();
            let mut node = leaf;
            while node != root {
                code.push(bit[node]);
                node = parent[node];
                path.push((node - n) as u32);
            }
            code.reverse();
            path.reverse();
            codes.push(code);
            paths.push(path);
        }
        Ok(Self {
            leaf_count: n,
            codes,
            paths,
        })
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_count
    }

    pub fn internal_count(&self) -> usize {
        self.leaf_count - 1
    }

    pub fn code(&self, leaf: NodeId) -> &[u8] {
        &self.codes[leaf.index()]
    }

    pub fn path(&self, leaf: NodeId) -> &[u32] {
        &self.paths[leaf.index()]
    }

    pub fn code_length(&self, leaf: NodeId) -> usize {
        self.codes[leaf.index()].len()
    }

    pub fn weighted_code_length(&self, frequencies: &[u64]) -> u64 {
        frequencies
            .iter()
            .zip(&self.codes)
            .map(|(&f, c)| f * c.len() as u64)
            .sum()
    }

    fn check(&self, node: NodeId) -> Result<()> {
        if node.index() >= self.leaf_count {
            return Err(Error::UnknownNode(node.to_string()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dimension: usize,
    /// Context positions on each side of the center.
    pub window: usize,
    pub epochs: usize,
    pub initial_learning_rate: f64,
    pub final_learning_rate: f64,
    pub seed: u64,
    /// 1 runs the deterministic sequential trainer; more runs lock-free
    /// parallel updates whose result depends on scheduling.
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dimension: 128,
            window: 4,
            epochs: 5,
            initial_learning_rate: 0.025,
            final_learning_rate: 1e-4,
            seed: 0,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 || self.window == 0 || self.epochs == 0 || self.workers == 0 {
            return Err(Error::Validation(
                "dimension, window, epochs and workers must be positive".into(),
            ));
        }
        if !(self.final_learning_rate > 0.0 && self.final_learning_rate < self.initial_learning_rate) {
            return Err(Error::Validation(
                "learning rates must satisfy 0 < final < initial".into(),
            ));
        }
        Ok(())
    }
}

/// Node vectors `phi` plus the internal-node vectors `psi` of the tree.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    dimension: usize,
    input: Vec<f64>,
    internal: Vec<f64>,
}

impl EmbeddingModel {
    /// `phi` uniform in `[-0.5/d, 0.5/d]`, `psi` zero.
    pub fn initialize(node_count: usize, dimension: usize, seed: u64) -> Self {
        let mut rng = seeding::stream(seed, &[TAG_INIT]);
        let half = 0.5 / dimension as f64;
        let input = (0..node_count * dimension)
            .map(|_| rng.gen_range(-half..=half))
            .collect();
        Self {
            dimension,
            input,
            internal: vec![0.0; node_count.saturating_sub(1) * dimension],
        }
    }

    pub fn zeros(node_count: usize, dimension: usize) -> Self {
        Self {
            dimension,
            input: vec![0.0; node_count * dimension],
            internal: vec![0.0; node_count.saturating_sub(1) * dimension],
        }
    }

    /// Model with every parameter drawn uniformly from `[-scale, scale]`.
    pub fn random(node_count: usize, dimension: usize, scale: f64, rng: &mut impl Rng) -> Self {
        let mut m = Self::zeros(node_count, dimension);
        for x in m.input.iter_mut().chain(m.internal.iter_mut()) {
            *x = rng.gen_range(-scale..=scale);
        }
        m
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn node_count(&self) -> usize {
        self.input.len() / self.dimension
    }

    pub fn vector(&self, node: NodeId) -> &[f64] {
        let d = self.dimension;
        &self.input[node.index() * d..(node.index() + 1) * d]
    }

    pub fn vector_mut(&mut self, node: NodeId) -> &mut [f64] {
        let d = self.dimension;
        &mut self.input[node.index() * d..(node.index() + 1) * d]
    }

    pub fn internal_vector(&self, id: u32) -> &[f64] {
        let d = self.dimension;
        &self.internal[id as usize * d..(id as usize + 1) * d]
    }

    pub fn internal_vector_mut(&mut self, id: u32) -> &mut [f64] {
        let d = self.dimension;
        &mut self.internal[id as usize * d..(id as usize + 1) * d]
    }

    pub fn is_finite(&self) -> bool {
        self.input.iter().chain(&self.internal).all(|x| x.is_finite())
    }

    /// Drops the internal vectors, keeping `phi` keyed by external id.
    pub fn into_node_embeddings(self, graph: &TemporalGraph) -> NodeEmbeddings {
        NodeEmbeddings::new(graph.external_ids().to_vec(), self.dimension, self.input)
    }
}

/// Final per-node vectors, keyed by external id.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeEmbeddings {
    ids: Vec<String>,
    dimension: usize,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

impl NodeEmbeddings {
    pub fn new(ids: Vec<String>, dimension: usize, data: Vec<f64>) -> Self {
        assert_eq!(ids.len() * dimension, data.len());
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        Self {
            ids,
            dimension,
            data,
            index,
        }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index.get(id).map(|&i| self.row(i))
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// `-ln sigma(y)`, stable for large `|y|`.
#[inline]
fn neg_log_sigmoid(y: f64) -> f64 {
    if y > 0.0 {
        (-y).exp().ln_1p()
    } else {
        -y + y.exp().ln_1p()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sign of the branch score: code 0 takes `sigma(x)`, code 1 `sigma(-x)`.
#[inline]
fn branch_sign(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `Pr(target | phi(center))` under hierarchical softmax.
pub fn path_probability(model: &EmbeddingModel, tree: &HuffmanTree, center: NodeId, target: NodeId) -> Result<f64> {
    tree.check(center)?;
    tree.check(target)?;
    let phi = model.vector(center);
    Ok(tree
        .code(target)
        .iter()
        .zip(tree.path(target))
        .map(|(&bit, &node)| sigmoid(branch_sign(bit) * dot(phi, model.internal_vector(node))))
        .product())
}

/// `-ln Pr(target | phi(center))`.
pub fn pair_loss(model: &EmbeddingModel, tree: &HuffmanTree, center: NodeId, target: NodeId) -> f64 {
    let phi = model.vector(center);
    tree.code(target)
        .iter()
        .zip(tree.path(target))
        .map(|(&bit, &node)| neg_log_sigmoid(branch_sign(bit) * dot(phi, model.internal_vector(node))))
        .sum()
}

/// Gradients of [`pair_loss`]: `(d/d phi(center), [(internal id, d/d psi)])`.
pub fn pair_gradient(
    model: &EmbeddingModel,
    tree: &HuffmanTree,
    center: NodeId,
    target: NodeId,
) -> (Vec<f64>, Vec<(u32, Vec<f64>)>) {
    let phi = model.vector(center);
    let mut g_phi = vec![0.0; model.dimension];
    let mut g_psi = Vec::new();
    for (&bit, &node) in tree.code(target).iter().zip(tree.path(target)) {
        let psi = model.internal_vector(node);
        // d/dx of -ln sigma(s x) is sigma(x) - (1 - bit)
        let coef = sigmoid(dot(phi, psi)) - (1.0 - bit as f64);
        for (g, p) in g_phi.iter_mut().zip(psi) {
            *g += coef * p;
        }
        g_psi.push((node, phi.iter().map(|x| coef * x).collect()));
    }
    (g_phi, g_psi)
}

/// Visits every `(center, context)` pair with `0 < |i - j| <= window`.
fn for_each_pair(walk: &[NodeId], window: usize, mut f: impl FnMut(NodeId, NodeId)) {
    for (i, &center) in walk.iter().enumerate() {
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(walk.len() - 1);
        for (j, &ctx) in walk.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i {
                f(center, ctx);
            }
        }
    }
}

pub fn count_pairs<W: AsRef<[NodeId]>>(walks: &[W], window: usize) -> u64 {
    let mut n = 0u64;
    for w in walks {
        for_each_pair(w.as_ref(), window, |_, _| n += 1);
    }
    n
}

/// Mean negative log-likelihood over all context pairs of the corpus.
pub fn corpus_loss<W: AsRef<[NodeId]>>(model: &EmbeddingModel, tree: &HuffmanTree, walks: &[W], window: usize) -> f64 {
    let mut total = 0.0;
    let mut n = 0u64;
    for w in walks {
        for_each_pair(w.as_ref(), window, |c, t| {
            total += pair_loss(model, tree, c, t);
            n += 1;
        });
    }
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

/// Parameter storage shared by the sequential and lock-free trainers.
trait Params {
    fn get(&self, i: usize) -> f64;
    fn set(&self, i: usize, v: f64);
}

impl Params for [Cell<f64>] {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        self[i].get()
    }
    #[inline]
    fn set(&self, i: usize, v: f64) {
        self[i].set(v)
    }
}

impl Params for [AtomicU64] {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self[i].load(Ordering::Relaxed))
    }
    #[inline]
    fn set(&self, i: usize, v: f64) {
        self[i].store(v.to_bits(), Ordering::Relaxed)
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn sgd_pair<P: Params + ?Sized>(
    input: &P,
    internal: &P,
    dim: usize,
    tree: &HuffmanTree,
    center: NodeId,
    target: NodeId,
    lr: f64,
    neu1e: &mut [f64],
) {
    let c0 = center.index() * dim;
    neu1e.fill(0.0);
    for (&bit, &node) in tree.code(target).iter().zip(tree.path(target)) {
        let p0 = node as usize * dim;
        let mut x = 0.0;
        for k in 0..dim {
            x += input.get(c0 + k) * internal.get(p0 + k);
        }
        let g = lr * ((1.0 - bit as f64) - sigmoid(x));
        for (k, e) in neu1e.iter_mut().enumerate() {
            let psi = internal.get(p0 + k);
            *e += g * psi;
            internal.set(p0 + k, psi + g * input.get(c0 + k));
        }
    }
    for (k, e) in neu1e.iter().enumerate() {
        input.set(c0 + k, input.get(c0 + k) + e);
    }
}

/// One SGD step on `-ln Pr(target | phi(center))` with rate `lr`.
pub fn sgd_step(model: &mut EmbeddingModel, tree: &HuffmanTree, center: NodeId, target: NodeId, lr: f64) {
    let dim = model.dimension;
    let mut neu1e = vec![0.0; dim];
    let input = Cell::from_mut(&mut model.input[..]).as_slice_of_cells();
    let internal = Cell::from_mut(&mut model.internal[..]).as_slice_of_cells();
    sgd_pair(input, internal, dim, tree, center, target, lr, &mut neu1e);
}

fn learning_rate(config: &TrainConfig, step: u64, total: u64) -> f64 {
    let frac = step as f64 / total as f64;
    config.initial_learning_rate - (config.initial_learning_rate - config.final_learning_rate) * frac
}

/// Trains node vectors on `walks`. The tree must have one leaf per node.
pub fn train<W: AsRef<[NodeId]> + Sync>(walks: &[W], tree: &HuffmanTree, config: &TrainConfig) -> Result<EmbeddingModel> {
    config.validate()?;
    if walks.is_empty() {
        return Err(Error::Training("empty corpus".into()));
    }
    let n = tree.leaf_count();
    if let Some(bad) = walks.iter().flat_map(|w| w.as_ref()).find(|v| v.index() >= n) {
        return Err(Error::Training(format!("walk node {bad} outside the vocabulary of {n}")));
    }
    let mut model = EmbeddingModel::initialize(n, config.dimension, config.seed);
    let pairs = count_pairs(walks, config.window);
    if pairs == 0 {
        return Ok(model);
    }
    if config.workers == 1 {
        train_sequential(&mut model, walks, tree, config, pairs);
    } else {
        train_lock_free(&mut model, walks, tree, config);
    }
    Ok(model)
}

fn train_sequential<W: AsRef<[NodeId]>>(
    model: &mut EmbeddingModel,
    walks: &[W],
    tree: &HuffmanTree,
    config: &TrainConfig,
    pairs: u64,
) {
    let dim = model.dimension;
    let total = pairs * config.epochs as u64;
    let mut step = 0u64;
    let mut neu1e = vec![0.0; dim];
    let input = Cell::from_mut(&mut model.input[..]).as_slice_of_cells();
    let internal = Cell::from_mut(&mut model.internal[..]).as_slice_of_cells();
    for _ in 0..config.epochs {
        for walk in walks {
            for_each_pair(walk.as_ref(), config.window, |c, t| {
                let lr = learning_rate(config, step, total);
                sgd_pair(input, internal, dim, tree, c, t, lr, &mut neu1e);
                step += 1;
            });
        }
    }
}

/// Hogwild-style: walks are split into contiguous shards, one per worker,
/// and parameters are read and written without synchronization. Updates may
/// be lost; the result depends on scheduling.
fn train_lock_free<W: AsRef<[NodeId]> + Sync>(model: &mut EmbeddingModel, walks: &[W], tree: &HuffmanTree, config: &TrainConfig) {
    let dim = model.dimension;
    let to_atomic = |v: &[f64]| v.iter().map(|x| AtomicU64::new(x.to_bits())).collect::<Vec<_>>();
    let input = to_atomic(&model.input);
    let internal = to_atomic(&model.internal);
    let shard = walks.len().div_ceil(config.workers);
    std::thread::scope(|scope| {
        for chunk in walks.chunks(shard) {
            let (input, internal) = (&input[..], &internal[..]);
            scope.spawn(move || {
                let total = count_pairs(chunk, config.window) * config.epochs as u64;
                if total == 0 {
                    return;
                }
                let mut step = 0u64;
                let mut neu1e = vec![0.0; dim];
                for _ in 0..config.epochs {
                    for walk in chunk {
                        for_each_pair(walk.as_ref(), config.window, |c, t| {
                            let lr = learning_rate(config, step, total);
                            sgd_pair(input, internal, dim, tree, c, t, lr, &mut neu1e);
                            step += 1;
                        });
                    }
                }
            });
        }
    });
    let from_atomic = |v: Vec<AtomicU64>| v.into_iter().map(|a| f64::from_bits(a.into_inner())).collect();
    model.input = from_atomic(input);
    model.internal = from_atomic(internal);
}

/// Builds the Huffman tree from `walks` and trains one vector per node of
/// `graph`.
pub fn embed_corpus<W: AsRef<[NodeId]> + Sync>(graph: &TemporalGraph, walks: &[W], config: &TrainConfig) -> Result<NodeEmbeddings> {
    let freqs = crate::walker::node_frequencies(walks, graph.node_count());
    let tree = HuffmanTree::build(&freqs)?;
    Ok(train(walks, &tree, config)?.into_node_embeddings(graph))
}

/// Largest relative discrepancy between the analytic gradient of
/// [`pair_loss`] and central finite differences with step `h`, over every
/// coordinate of `phi(center)` and of each `psi` on `target`'s path.
/// Coordinates where both gradients are below `1e-6` in magnitude contribute
/// their absolute difference instead.
pub fn gradient_check(model: &EmbeddingModel, tree: &HuffmanTree, center: NodeId, target: NodeId, h: f64) -> Result<f64> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::Validation("finite-difference step must be positive".into()));
    }
    tree.check(center)?;
    tree.check(target)?;
    let (g_phi, g_psi) = pair_gradient(model, tree, center, target);
    let mut probe = model.clone();
    let mut worst = 0.0f64;
    let mut compare = |analytic: f64, numeric: f64| {
        let scale = analytic.abs().max(numeric.abs());
        let err = if scale < 1e-6 {
            (analytic - numeric).abs()
        } else {
            (analytic - numeric).abs() / scale
        };
        worst = worst.max(err);
    };

    for (k, &analytic) in g_phi.iter().enumerate() {
        let x = probe.vector(center)[k];
        probe.vector_mut(center)[k] = x + h;
        let up = pair_loss(&probe, tree, center, target);
        probe.vector_mut(center)[k] = x - h;
        let down = pair_loss(&probe, tree, center, target);
        probe.vector_mut(center)[k] = x;
        compare(analytic, (up - down) / (2.0 * h));
    }
    for (node, grad) in &g_psi {
        for (k, &analytic) in grad.iter().enumerate() {
            let x = probe.internal_vector(*node)[k];
            probe.internal_vector_mut(*node)[k] = x + h;
            let up = pair_loss(&probe, tree, center, target);
            probe.internal_vector_mut(*node)[k] = x - h;
            let down = pair_loss(&probe, tree, center, target);
            probe.internal_vector_mut(*node)[k] = x;
            compare(analytic, (up - down) / (2.0 * h));
        }
    }
    Ok(worst)
}
