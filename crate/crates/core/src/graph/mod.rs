//! Hierarchical proximity graph (HNSW) construction.
//!
//! Construction is filter-agnostic: attributes are carried along with the
//! dataset but never consulted while linking nodes. The only addition to a
//! textbook build is the global density statistic `delta_d`, the mean
//! per-rank distance increment observed in the base-layer candidate lists.

mod persist;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::search::{search_layer, SearchStats, VisitedSet};
use crate::vector::{l2, Neighbor, NodeId, VectorDataset};

pub use persist::FORMAT_VERSION;

/// Adjacency lists indexed as `links[node][layer]`.
pub(crate) type Links = Vec<Vec<Vec<NodeId>>>;

#[derive(Debug, Clone, PartialEq)]
pub struct BuildParams {
    /// Max neighbors per node on upper layers; the base layer allows `2 * m`.
    pub m: usize,
    /// Construction beam width.
    pub efc: usize,
    /// Layer sampling multiplier, usually `1 / ln(m)`.
    pub level_norm: f64,
    /// Lower neighbor rank used for `delta_d` (1-indexed).
    pub alpha_rank: usize,
    /// Upper neighbor rank used for `delta_d` (1-indexed).
    pub beta_rank: usize,
    pub seed: u64,
}

impl BuildParams {
    /// Defaults derived from `m` and `efc`: `level_norm = 1/ln(m)`, `alpha = 10`, `beta = efc`.
    pub fn new(m: usize, efc: usize) -> Self {
        Self {
            m,
            efc,
            level_norm: 1.0 / (m.max(2) as f64).ln(),
            alpha_rank: 10,
            beta_rank: efc,
            seed: 42,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_ranks(mut self, alpha_rank: usize, beta_rank: usize) -> Self {
        self.alpha_rank = alpha_rank;
        self.beta_rank = beta_rank;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::Usage(format!("m must be at least 2, got {}", self.m)));
        }
        if !(self.level_norm > 0.0 && self.level_norm.is_finite()) {
            return Err(Error::Usage(format!(
                "level_norm must be positive, got {}",
                self.level_norm
            )));
        }
        if !(1 <= self.alpha_rank && self.alpha_rank < self.beta_rank && self.beta_rank <= self.efc)
        {
            return Err(Error::Usage(format!(
                "need 1 <= alpha_rank < beta_rank <= efc, got alpha={} beta={} efc={}",
                self.alpha_rank, self.beta_rank, self.efc
            )));
        }
        Ok(())
    }

    /// Degree cap at `layer`.
    pub fn max_degree(&self, layer: usize) -> usize {
        if layer == 0 {
            2 * self.m
        } else {
            self.m
        }
    }
}

impl Default for BuildParams {
    fn default() -> Self {
        Self::new(32, 40)
    }
}

/// Running mean of `(d_beta - d_alpha) / (beta - alpha)` over candidate lists.
#[derive(Debug, Clone)]
pub struct DeltaDAccumulator {
    alpha: usize,
    beta: usize,
    sum: f64,
    count: u64,
}

impl DeltaDAccumulator {
    pub fn new(alpha_rank: usize, beta_rank: usize) -> Self {
        assert!(alpha_rank >= 1 && alpha_rank < beta_rank);
        Self {
            alpha: alpha_rank,
            beta: beta_rank,
            sum: 0.0,
            count: 0,
        }
    }

    /// Feed one candidate list sorted ascending by distance. Lists shorter than
    /// `beta_rank` are ignored.
    pub fn observe(&mut self, sorted_dists: &[f32]) {
        if sorted_dists.len() < self.beta {
            return;
        }
        let da = sorted_dists[self.alpha - 1] as f64;
        let db = sorted_dists[self.beta - 1] as f64;
        self.sum += (db - da) / (self.beta - self.alpha) as f64;
        self.count += 1;
    }

    pub fn samples(&self) -> u64 {
        self.count
    }

    pub fn finish(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::Build(format!(
                "no candidate list reached beta_rank = {}; use a larger dataset or a smaller beta_rank \
                 (degenerate data such as exact duplicates also causes this)",
                self.beta
            )));
        }
        let dd = self.sum / self.count as f64;
        if !(dd > 0.0) {
            return Err(Error::Build(format!(
                "degenerate density statistic delta_d = {dd}: neighbor distances do not grow with rank (duplicate data?)"
            )));
        }
        Ok(dd)
    }
}

/// Mean rank-distance increment over the given sorted candidate lists.
pub fn record_delta_d<'a>(
    lists: impl IntoIterator<Item = &'a [f32]>,
    alpha_rank: usize,
    beta_rank: usize,
) -> Result<f64> {
    let mut acc = DeltaDAccumulator::new(alpha_rank, beta_rank);
    for l in lists {
        acc.observe(l);
    }
    acc.finish()
}

/// Multi-layer proximity graph over an owned dataset. Immutable once built.
#[derive(Debug, Clone)]
pub struct HnswIndex {
    params: BuildParams,
    data: VectorDataset,
    links: Links,
    entry_point: NodeId,
    top_layer: usize,
    delta_d: f64,
}

impl HnswIndex {
    /// Build the index by inserting every vector in order.
    pub fn build(data: VectorDataset, params: BuildParams) -> Result<Self> {
        params.validate()?;
        let n = data.len();
        if n == 0 {
            return Err(Error::Build("cannot build an index over an empty dataset".into()));
        }
        if n > NodeId::MAX as usize {
            return Err(Error::Build(format!("{n} vectors exceed the node id range")));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut links: Links = Vec::with_capacity(n);
        let mut visited = VisitedSet::new(n);
        let mut stats = SearchStats::default();
        let mut delta = DeltaDAccumulator::new(params.alpha_rank, params.beta_rank);
        let mut entry_point: NodeId = 0;
        let mut top_layer = 0usize;
        let mut dists = Vec::with_capacity(params.efc);

        for i in 0..n {
            // U in (0, 1]
            let u: f64 = 1.0 - rng.gen::<f64>();
            let level = (-u.ln() * params.level_norm).floor() as usize;
            links.push(vec![Vec::new(); level + 1]);
            if i == 0 {
                top_layer = level;
                continue;
            }

            let q = data.vector(i);
            let mut cur = entry_point;
            for layer in (level + 1..=top_layer).rev() {
                cur = search_layer(&links, &data, q, 1, &[cur], layer, &mut visited, &mut stats)[0].id;
            }

            for layer in (0..=level.min(top_layer)).rev() {
                let found =
                    search_layer(&links, &data, q, params.efc, &[cur], layer, &mut visited, &mut stats);
                if layer == 0 {
                    dists.clear();
                    dists.extend(found.iter().map(|c| c.dist));
                    delta.observe(&dists);
                }
                let selected = select_neighbors(&data, &found, params.m);
                let new_id = i as NodeId;
                links[i][layer] = selected.iter().map(|c| c.id).collect();
                let cap = params.max_degree(layer);
                for s in &selected {
                    let nb = s.id as usize;
                    links[nb][layer].push(new_id);
                    if links[nb][layer].len() > cap {
                        let base = data.vector(nb);
                        let mut cands: Vec<Neighbor> = links[nb][layer]
                            .iter()
                            .map(|&x| Neighbor::new(x, l2(base, data.vector(x as usize))))
                            .collect();
                        cands.sort_unstable();
                        links[nb][layer] = select_neighbors(&data, &cands, cap)
                            .iter()
                            .map(|c| c.id)
                            .collect();
                    }
                }
                cur = found[0].id;
            }

            if level > top_layer {
                top_layer = level;
                entry_point = i as NodeId;
            }
        }

        // Too few points for any candidate list to reach beta_rank: the
        // statistic is unavailable and reported as 0.
        let delta_d = if n <= params.beta_rank {
            0.0
        } else {
            delta.finish()?
        };
        Ok(Self {
            params,
            data,
            links,
            entry_point,
            top_layer,
            delta_d,
        })
    }

    pub(crate) fn from_parts(
        params: BuildParams,
        data: VectorDataset,
        links: Links,
        entry_point: NodeId,
        top_layer: usize,
        delta_d: f64,
    ) -> Result<Self> {
        let index = Self {
            params,
            data,
            links,
            entry_point,
            top_layer,
            delta_d,
        };
        index.check_invariants()?;
        Ok(index)
    }

    pub fn params(&self) -> &BuildParams {
        &self.params
    }

    pub fn dataset(&self) -> &VectorDataset {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    pub fn entry_point(&self) -> NodeId {
        self.entry_point
    }

    pub fn top_layer(&self) -> usize {
        self.top_layer
    }

    /// Global mean distance increment per neighbor rank. Zero when the index
    /// holds no more than `beta_rank` points.
    pub fn delta_d(&self) -> f64 {
        self.delta_d
    }

    /// Highest layer the node belongs to.
    pub fn node_level(&self, node: NodeId) -> usize {
        self.links[node as usize].len() - 1
    }

    /// Neighbors of `node` on `layer`; empty if the node is not present there.
    pub fn neighbors(&self, node: NodeId, layer: usize) -> &[NodeId] {
        self.links[node as usize]
            .get(layer)
            .map_or(&[][..], |l| l.as_slice())
    }

    pub(crate) fn links(&self) -> &Links {
        &self.links
    }

    /// Verify degree caps, edge validity, layer membership and entry point level.
    pub fn check_invariants(&self) -> Result<()> {
        let n = self.links.len();
        if n != self.data.len() {
            return Err(Error::Invariant(format!(
                "graph has {n} nodes but dataset has {}",
                self.data.len()
            )));
        }
        if (self.entry_point as usize) >= n {
            return Err(Error::Invariant("entry point out of range".into()));
        }
        if self.node_level(self.entry_point) != self.top_layer {
            return Err(Error::Invariant(format!(
                "entry point level {} differs from top layer {}",
                self.node_level(self.entry_point),
                self.top_layer
            )));
        }
        for (node, layers) in self.links.iter().enumerate() {
            if layers.is_empty() || layers.len() - 1 > self.top_layer {
                return Err(Error::Invariant(format!("node {node} has invalid level")));
            }
            for (layer, adj) in layers.iter().enumerate() {
                if adj.len() > self.params.max_degree(layer) {
                    return Err(Error::Invariant(format!(
                        "node {node} has degree {} on layer {layer}",
                        adj.len()
                    )));
                }
                for &nb in adj {
                    let nb = nb as usize;
                    if nb >= n || nb == node || self.links[nb].len() <= layer {
                        return Err(Error::Invariant(format!(
                            "node {node} has invalid edge to {nb} on layer {layer}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Heuristic neighbor selection: walk candidates nearest-first and keep one
/// unless it lies closer to an already kept neighbor than to the base node.
fn select_neighbors(data: &VectorDataset, sorted: &[Neighbor], m: usize) -> Vec<Neighbor> {
    let mut kept: Vec<Neighbor> = Vec::with_capacity(m);
    for &c in sorted {
        if kept.len() >= m {
            break;
        }
        let cv = data.vector(c.id as usize);
        let diverse = kept
            .iter()
            .all(|r| !(l2(cv, data.vector(r.id as usize)) < c.dist));
        if diverse {
            kept.push(c);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::synth::uniform_vectors;
    use std::collections::VecDeque;

    fn line(n: usize) -> VectorDataset {
        VectorDataset::from_vectors(1, (0..n).map(|i| i as f32).collect()).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(BuildParams::new(1, 40).validate().is_err());
        assert!(BuildParams::new(8, 40).with_ranks(10, 10).validate().is_err());
        assert!(BuildParams::new(8, 40).with_ranks(10, 41).validate().is_err());
        assert!(BuildParams::new(8, 40).validate().is_ok());
    }

    #[test]
    fn delta_d_on_endpoint_of_line() {
        let dists: Vec<f32> = (1..=200).map(|m| m as f32).collect();
        let dd = record_delta_d([dists.as_slice()], 10, 40).unwrap();
        assert_eq!(dd, 1.0);
    }

    #[test]
    fn delta_d_requires_long_lists() {
        let short = [1.0f32, 2.0, 3.0];
        assert!(matches!(
            record_delta_d([&short[..]], 10, 40),
            Err(Error::Build(_))
        ));
    }

    #[test]
    fn delta_d_degenerate_duplicates() {
        let zeros = [0.0f32; 50];
        assert!(matches!(
            record_delta_d([&zeros[..]], 10, 40),
            Err(Error::Build(_))
        ));
        let ds = VectorDataset::from_vectors(2, vec![1.0; 2 * 200]).unwrap();
        let err = HnswIndex::build(ds, BuildParams::new(8, 40)).unwrap_err();
        assert!(err.to_string().contains("degenerate"), "{err}");
    }

    #[test]
    fn empty_dataset_fails() {
        let ds = VectorDataset::from_vectors(4, vec![]).unwrap();
        assert!(matches!(
            HnswIndex::build(ds, BuildParams::new(8, 40)),
            Err(Error::Build(_))
        ));
    }

    #[test]
    fn single_vector_index() {
        let ds = VectorDataset::from_vectors(3, vec![1.0, 2.0, 3.0]).unwrap();
        let idx = HnswIndex::build(ds, BuildParams::new(8, 40)).unwrap();
        assert_eq!(idx.len(), 1);
        assert_eq!(idx.entry_point(), 0);
        assert_eq!(idx.top_layer(), idx.node_level(0));
        assert!((0..=idx.top_layer()).all(|l| idx.neighbors(0, l).is_empty()));
        assert_eq!(idx.delta_d(), 0.0);
    }

    #[test]
    fn line_dataset_delta_d_is_unit_spacing() {
        let idx = HnswIndex::build(line(500), BuildParams::new(8, 40).with_seed(3)).unwrap();
        // Candidate lists of interior points interleave both sides, so the
        // per-rank increment is about one half.
        assert!(idx.delta_d() > 0.4 && idx.delta_d() < 1.05, "{}", idx.delta_d());
    }

    fn bfs_reach(idx: &HnswIndex) -> usize {
        let mut seen = vec![false; idx.len()];
        let mut queue = VecDeque::from([idx.entry_point()]);
        seen[idx.entry_point() as usize] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in idx.neighbors(u, 0) {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count
    }

    #[test]
    fn build_respects_caps_and_connectivity() {
        let ds = uniform_vectors(1000, 16, 9);
        let idx = HnswIndex::build(ds, BuildParams::new(8, 40).with_seed(1)).unwrap();
        idx.check_invariants().unwrap();
        for node in 0..idx.len() as NodeId {
            assert!(idx.neighbors(node, 0).len() <= 16);
            for layer in 1..=idx.node_level(node) {
                assert!(idx.neighbors(node, layer).len() <= 8);
            }
        }
        assert!(bfs_reach(&idx) as f64 >= 0.99 * idx.len() as f64);
        assert!(idx.delta_d() > 0.0);
    }

    #[test]
    fn build_is_deterministic() {
        let a = HnswIndex::build(uniform_vectors(600, 8, 2), BuildParams::new(6, 40)).unwrap();
        let b = HnswIndex::build(uniform_vectors(600, 8, 2), BuildParams::new(6, 40)).unwrap();
        assert_eq!(a.links(), b.links());
        assert_eq!(a.entry_point(), b.entry_point());
        assert_eq!(a.delta_d().to_bits(), b.delta_d().to_bits());
        let c = HnswIndex::build(
            uniform_vectors(600, 8, 2),
            BuildParams::new(6, 40).with_seed(7),
        )
        .unwrap();
        assert_ne!(a.links(), c.links());
    }

    #[test]
    fn heuristic_prunes_shadowed_candidates() {
        // Base at 0; candidates at 1, 2, and -1 on a line. 2 is closer to 1 than to the base.
        let ds = VectorDataset::from_vectors(1, vec![0.0, 1.0, 2.0, -1.0]).unwrap();
        let cands = [
            Neighbor::new(1, 1.0),
            Neighbor::new(3, 1.0),
            Neighbor::new(2, 2.0),
        ];
        let kept: Vec<NodeId> = select_neighbors(&ds, &cands, 3).iter().map(|c| c.id).collect();
        assert_eq!(kept, vec![1, 3]);
    }
}
