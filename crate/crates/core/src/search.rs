//! Graph search: plain HNSW beam search, the exclusion-distance filtered
//! search and the result-set-filtering baseline.
//!
//! Filtered search keeps every visited node on the traversal path but adds
//! an *exclusion distance* `D` to non-target nodes, so target nodes outrank
//! nearby non-target ones without severing the graph. `D` is derived from the
//! estimated selectivity, the beam width and the index's density statistic
//! (see [`exclusion_distance`]).

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::filter::Filter;
use crate::graph::{HnswIndex, Links};
use crate::vector::{l2, top_k_of, Neighbor, NodeId, VectorDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchParams {
    /// Beam width: capacity of the result set during traversal.
    pub ef: usize,
    pub k: usize,
    /// Multiplier on the farthest result distance in the break test.
    pub gamma_slack: f64,
    /// Minimum share of target nodes in the result set before the search may stop.
    pub td_fraction: f64,
    /// Require `td_fraction` before terminating.
    pub termination_opt: bool,
    /// Divide the exclusion distance by `ef`.
    pub normalize_by_ef: bool,
}

impl SearchParams {
    pub fn new(ef: usize, k: usize) -> Self {
        Self {
            ef,
            k,
            gamma_slack: 1.0,
            td_fraction: 0.5,
            termination_opt: true,
            normalize_by_ef: true,
        }
    }

    pub fn with_termination_opt(mut self, on: bool) -> Self {
        self.termination_opt = on;
        self
    }

    pub fn with_normalize_by_ef(mut self, on: bool) -> Self {
        self.normalize_by_ef = on;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma_slack = gamma;
        self
    }

    pub fn with_td_fraction(mut self, fraction: f64) -> Self {
        self.td_fraction = fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.ef == 0 {
            return Err(Error::Usage("k and ef must be positive".into()));
        }
        if self.k > self.ef {
            return Err(Error::Usage(format!(
                "k ({}) must not exceed ef ({})",
                self.k, self.ef
            )));
        }
        if !(self.gamma_slack > 0.0 && self.gamma_slack.is_finite()) {
            return Err(Error::Usage(format!(
                "gamma must be positive, got {}",
                self.gamma_slack
            )));
        }
        if !(0.0..1.0).contains(&self.td_fraction) {
            return Err(Error::Usage(format!(
                "td_fraction must lie in [0, 1), got {}",
                self.td_fraction
            )));
        }
        Ok(())
    }
}

impl Default for SearchParams {
    fn default() -> Self {
        Self::new(100, 10)
    }
}

/// Per-query work counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Distances evaluated against the query.
    pub distance_computations: u64,
    /// Nodes expanded on all layers.
    pub hops: u64,
    /// Nodes expanded on the base layer.
    pub base_hops: u64,
    /// Base-layer expansions of target nodes (filtered searches only).
    pub base_td_hops: u64,
}

impl SearchStats {
    /// Share of target nodes among base-layer expansions.
    pub fn td_path_fraction(&self) -> f64 {
        if self.base_hops == 0 {
            0.0
        } else {
            self.base_td_hops as f64 / self.base_hops as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    Graph,
    BruteForce,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::Graph => "graph",
            Route::BruteForce => "brute_force",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    /// Target hits ascending by raw distance, ties by id.
    pub hits: Vec<Neighbor>,
    pub stats: SearchStats,
    pub route: Route,
    /// Selectivity estimate used, when one was.
    pub p_hat: Option<f64>,
    /// Exclusion distance applied, when one was.
    pub exclusion: Option<f64>,
    /// How many of the requested `k` hits are missing.
    pub shortfall: usize,
}

impl QueryOutcome {
    pub(crate) fn new(hits: Vec<Neighbor>, k: usize, stats: SearchStats, route: Route) -> Self {
        Self {
            shortfall: k.saturating_sub(hits.len()),
            hits,
            stats,
            route,
            p_hat: None,
            exclusion: None,
        }
    }

    pub fn ids(&self) -> Vec<NodeId> {
        self.hits.iter().map(|h| h.id).collect()
    }
}

/// Exclusion distance for estimated selectivity `p_hat`:
/// `(1 - p)(ef - p) * delta_d / (2p)`, optionally divided by `ef`.
///
/// The value is the midpoint of the admissible window
/// `(1-p)(k/p - 1)Δd < D < (1-p)(ef/p - k/p)Δd` (see [`exclusion_bounds`]).
pub fn exclusion_distance(p_hat: f64, sp: &SearchParams, delta_d: f64) -> Result<f64> {
    if !(p_hat > 0.0 && p_hat <= 1.0) {
        return Err(Error::Usage(format!(
            "selectivity must lie in (0, 1], got {p_hat}; route such queries to brute force"
        )));
    }
    if !(delta_d > 0.0 && delta_d.is_finite()) {
        return Err(Error::Usage(format!(
            "density statistic must be positive, got {delta_d} (index too small?)"
        )));
    }
    let ef = sp.ef as f64;
    let raw = (1.0 - p_hat) * (ef - p_hat) * delta_d / (2.0 * p_hat);
    Ok(if sp.normalize_by_ef { raw / ef } else { raw })
}

/// Lower and upper bounds of the admissible exclusion-distance window.
pub fn exclusion_bounds(p: f64, k: usize, ef: usize, delta_d: f64) -> (f64, f64) {
    let (k, ef) = (k as f64, ef as f64);
    (
        (1.0 - p) * (k / p - 1.0) * delta_d,
        (1.0 - p) * (ef / p - k / p) * delta_d,
    )
}

/// Raw distance for target nodes, raw distance plus `d` otherwise.
#[inline]
pub fn adjusted_distance(raw: f32, is_td: bool, d: f32) -> f32 {
    if is_td {
        raw
    } else {
        raw + d
    }
}

/// A visited node with both distances and its filter verdict.
///
/// Ordered by adjusted distance, then id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredNode {
    pub id: NodeId,
    pub raw: f32,
    pub adjusted: f32,
    pub is_td: bool,
}

impl Eq for ScoredNode {}

impl PartialOrd for ScoredNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ScoredNode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.adjusted
            .total_cmp(&other.adjusted)
            .then_with(|| self.id.cmp(&other.id))
    }
}

/// Output of the base-layer exclusion-distance search.
#[derive(Debug, Clone, PartialEq)]
pub struct OptiOutcome {
    /// Result set ascending by adjusted distance.
    pub results: Vec<ScoredNode>,
    /// Number of target nodes in `results`.
    pub td_count: usize,
    pub stats: SearchStats,
}

/// Bitset over node ids.
#[derive(Debug, Clone)]
pub struct VisitedSet {
    words: Vec<u64>,
}

impl VisitedSet {
    pub fn new(n: usize) -> Self {
        Self {
            words: vec![0; n.div_ceil(64)],
        }
    }

    /// Mark `id`; returns true if it was not yet marked.
    #[inline]
    pub fn insert(&mut self, id: NodeId) -> bool {
        let (w, b) = ((id >> 6) as usize, id & 63);
        let mask = 1u64 << b;
        let fresh = self.words[w] & mask == 0;
        self.words[w] |= mask;
        fresh
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.words[(id >> 6) as usize] & (1u64 << (id & 63)) != 0
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }
}

/// Beam search on one layer. Returns up to `ef` nodes ascending by distance.
///
/// `visited` is cleared on entry.
#[allow(clippy::too_many_arguments)]
pub(crate) fn search_layer(
    links: &Links,
    data: &VectorDataset,
    q: &[f32],
    ef: usize,
    entry_points: &[NodeId],
    layer: usize,
    visited: &mut VisitedSet,
    stats: &mut SearchStats,
) -> Vec<Neighbor> {
    visited.clear();
    let mut candidates: BinaryHeap<Reverse<Neighbor>> = BinaryHeap::new();
    let mut results: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(ef + 1);
    for &ep in entry_points {
        if visited.insert(ep) {
            let n = Neighbor::new(ep, l2(q, data.vector(ep as usize)));
            stats.distance_computations += 1;
            candidates.push(Reverse(n));
            results.push(n);
            if results.len() > ef {
                results.pop();
            }
        }
    }

    while let Some(Reverse(current)) = candidates.pop() {
        let farthest = results.peek().expect("result set is never empty").dist;
        if current.dist > farthest {
            break;
        }
        stats.hops += 1;
        if layer == 0 {
            stats.base_hops += 1;
        }
        let adj = links[current.id as usize]
            .get(layer)
            .map_or(&[][..], |l| l.as_slice());
        for &nb in adj {
            if !visited.insert(nb) {
                continue;
            }
            let d = l2(q, data.vector(nb as usize));
            stats.distance_computations += 1;
            let far = results.peek().map_or(f32::INFINITY, |r| r.dist);
            if results.len() < ef || d < far {
                let n = Neighbor::new(nb, d);
                candidates.push(Reverse(n));
                results.push(n);
                if results.len() > ef {
                    results.pop();
                }
            }
        }
    }
    results.into_sorted_vec()
}

fn check_query(index: &HnswIndex, q: &[f32]) -> Result<()> {
    if q.len() != index.dim() {
        return Err(Error::Usage(format!(
            "query has dimension {}, index has {}",
            q.len(),
            index.dim()
        )));
    }
    Ok(())
}

/// Beam search on a single layer starting from `ep` (unfiltered).
pub fn greedy_search(
    index: &HnswIndex,
    q: &[f32],
    ef: usize,
    ep: NodeId,
    layer: usize,
) -> Result<Vec<Neighbor>> {
    check_query(index, q)?;
    if ef == 0 {
        return Err(Error::Usage("ef must be positive".into()));
    }
    if (ep as usize) >= index.len() || index.node_level(ep) < layer {
        return Err(Error::Usage(format!(
            "entry point {ep} is not present on layer {layer}"
        )));
    }
    let mut visited = VisitedSet::new(index.len());
    let mut stats = SearchStats::default();
    Ok(search_layer(
        index.links(),
        index.dataset(),
        q,
        ef,
        &[ep],
        layer,
        &mut visited,
        &mut stats,
    ))
}

/// Greedy descent through layers `top..1` with beam width 1, ignoring any filter.
fn descend(index: &HnswIndex, q: &[f32], visited: &mut VisitedSet, stats: &mut SearchStats) -> NodeId {
    let mut ep = index.entry_point();
    for layer in (1..=index.top_layer()).rev() {
        ep = search_layer(index.links(), index.dataset(), q, 1, &[ep], layer, visited, stats)[0].id;
    }
    ep
}

/// Unfiltered HNSW search: descent, then a beam of width `ef` on the base layer.
pub fn hnsw_search(index: &HnswIndex, q: &[f32], sp: &SearchParams) -> Result<QueryOutcome> {
    sp.validate()?;
    check_query(index, q)?;
    let mut visited = VisitedSet::new(index.len());
    let mut stats = SearchStats::default();
    let ep = descend(index, q, &mut visited, &mut stats);
    let found = search_layer(
        index.links(),
        index.dataset(),
        q,
        sp.ef,
        &[ep],
        0,
        &mut visited,
        &mut stats,
    );
    Ok(QueryOutcome::new(
        top_k_of(found, sp.k),
        sp.k,
        stats,
        Route::Graph,
    ))
}

/// Base-layer search ordered by adjusted distance with exclusion distance `d`.
pub fn opti_greedy_search(
    index: &HnswIndex,
    q: &[f32],
    filter: &Filter,
    sp: &SearchParams,
    ep: NodeId,
    d: f64,
) -> Result<OptiOutcome> {
    sp.validate()?;
    check_query(index, q)?;
    filter.validate(&index.dataset().attributes().schema())?;
    if (ep as usize) >= index.len() {
        return Err(Error::Usage(format!("entry point {ep} out of range")));
    }
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::Usage(format!(
            "exclusion distance must be finite and non-negative, got {d}"
        )));
    }
    let mut visited = VisitedSet::new(index.len());
    let mut stats = SearchStats::default();
    Ok(opti_inner(index, q, filter, sp, ep, d as f32, &mut visited, &mut stats))
}

#[allow(clippy::too_many_arguments)]
fn opti_inner(
    index: &HnswIndex,
    q: &[f32],
    filter: &Filter,
    sp: &SearchParams,
    ep: NodeId,
    d: f32,
    visited: &mut VisitedSet,
    stats: &mut SearchStats,
) -> OptiOutcome {
    let data = index.dataset();
    let attrs = data.attributes();
    let gamma = sp.gamma_slack as f32;
    let score = |id: NodeId, stats: &mut SearchStats| {
        let raw = l2(q, data.vector(id as usize));
        stats.distance_computations += 1;
        let is_td = filter.matches(&attrs.record(id as usize));
        ScoredNode {
            id,
            raw,
            adjusted: adjusted_distance(raw, is_td, d),
            is_td,
        }
    };

    visited.clear();
    visited.insert(ep);
    let seed = score(ep, stats);
    let mut candidates = BinaryHeap::from([Reverse(seed)]);
    let mut results = BinaryHeap::with_capacity(sp.ef + 1);
    results.push(seed);
    let mut td_count = usize::from(seed.is_td);

    while let Some(Reverse(current)) = candidates.pop() {
        let farthest: ScoredNode = *results.peek().expect("result set is never empty");
        let stop = if sp.termination_opt {
            current.adjusted > gamma * farthest.adjusted
                && td_count as f64 > sp.td_fraction * results.len() as f64
        } else {
            current.adjusted > farthest.adjusted
        };
        if stop {
            break;
        }
        stats.hops += 1;
        stats.base_hops += 1;
        stats.base_td_hops += u64::from(current.is_td);

        for &nb in index.neighbors(current.id, 0) {
            if !visited.insert(nb) {
                continue;
            }
            let node = score(nb, stats);
            let far = results.peek().map_or(f32::INFINITY, |r: &ScoredNode| r.adjusted);
            if node.adjusted < far || results.len() < sp.ef {
                candidates.push(Reverse(node));
                results.push(node);
                td_count += usize::from(node.is_td);
                if results.len() > sp.ef {
                    let evicted = results.pop().unwrap();
                    td_count -= usize::from(evicted.is_td);
                }
            }
        }
    }

    OptiOutcome {
        results: results.into_sorted_vec(),
        td_count,
        stats: *stats,
    }
}

/// Filtered search with exclusion distance derived from `p_hat`.
pub fn favor_search(
    index: &HnswIndex,
    q: &[f32],
    filter: &Filter,
    p_hat: f64,
    sp: &SearchParams,
) -> Result<QueryOutcome> {
    let d = exclusion_distance(p_hat, sp, index.delta_d())?;
    let mut out = favor_search_with_exclusion(index, q, filter, d, sp)?;
    out.p_hat = Some(p_hat);
    Ok(out)
}

/// Filtered search with an explicit exclusion distance `d`.
pub fn favor_search_with_exclusion(
    index: &HnswIndex,
    q: &[f32],
    filter: &Filter,
    d: f64,
    sp: &SearchParams,
) -> Result<QueryOutcome> {
    sp.validate()?;
    check_query(index, q)?;
    filter.validate(&index.dataset().attributes().schema())?;
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::Usage(format!(
            "exclusion distance must be finite and non-negative, got {d}"
        )));
    }
    let mut visited = VisitedSet::new(index.len());
    let mut stats = SearchStats::default();
    let ep = descend(index, q, &mut visited, &mut stats);
    let opti = opti_inner(index, q, filter, sp, ep, d as f32, &mut visited, &mut stats);
    let hits = top_k_of(
        opti.results
            .iter()
            .filter(|n| n.is_td)
            .map(|n| Neighbor::new(n.id, n.raw)),
        sp.k,
    );
    let mut out = QueryOutcome::new(hits, sp.k, stats, Route::Graph);
    out.exclusion = Some(d);
    Ok(out)
}

/// Result-set filtering: unfiltered traversal where only target nodes may enter
/// the result set. The break test applies once the result set is full.
pub fn rsf_search(
    index: &HnswIndex,
    q: &[f32],
    filter: &Filter,
    sp: &SearchParams,
) -> Result<QueryOutcome> {
    sp.validate()?;
    check_query(index, q)?;
    filter.validate(&index.dataset().attributes().schema())?;
    let data = index.dataset();
    let attrs = data.attributes();

    let mut visited = VisitedSet::new(index.len());
    let mut stats = SearchStats::default();
    let ep = descend(index, q, &mut visited, &mut stats);

    visited.clear();
    visited.insert(ep);
    let raw = l2(q, data.vector(ep as usize));
    stats.distance_computations += 1;
    let is_td = filter.matches(&attrs.record(ep as usize));
    let seed = ScoredNode {
        id: ep,
        raw,
        adjusted: raw,
        is_td,
    };
    let mut candidates = BinaryHeap::from([Reverse(seed)]);
    let mut results: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(sp.ef + 1);
    if is_td {
        results.push(Neighbor::new(ep, raw));
    }

    while let Some(Reverse(current)) = candidates.pop() {
        if results.len() >= sp.ef && current.raw > results.peek().unwrap().dist {
            break;
        }
        stats.hops += 1;
        stats.base_hops += 1;
        stats.base_td_hops += u64::from(current.is_td);
        for &nb in index.neighbors(current.id, 0) {
            if !visited.insert(nb) {
                continue;
            }
            let raw = l2(q, data.vector(nb as usize));
            stats.distance_computations += 1;
            let far = results.peek().map_or(f32::INFINITY, |r| r.dist);
            if results.len() < sp.ef || raw < far {
                let is_td = filter.matches(&attrs.record(nb as usize));
                candidates.push(Reverse(ScoredNode {
                    id: nb,
                    raw,
                    adjusted: raw,
                    is_td,
                }));
                if is_td {
                    results.push(Neighbor::new(nb, raw));
                    if results.len() > sp.ef {
                        results.pop();
                    }
                }
            }
        }
    }

    Ok(QueryOutcome::new(
        top_k_of(results, sp.k),
        sp.k,
        stats,
        Route::Graph,
    ))
}
