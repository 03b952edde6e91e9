//! Selectivity estimation and query routing.
//!
//! Each query's filter selectivity is estimated from a uniform sample drawn
//! without replacement. Queries whose estimate falls below `lambda_threshold`
//! go to an exact pre-filtered scan; the rest go to the graph search.

use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filter::Filter;
use crate::graph::HnswIndex;
use crate::search::{exclusion_distance, favor_search_with_exclusion, QueryOutcome, Route, SearchParams, SearchStats};
use crate::vector::{l2, AttributeTable, Neighbor, NodeId, VectorDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct SelectorConfig {
    /// Estimates strictly below this go to brute force.
    pub lambda_threshold: f64,
    pub sample_fraction: f64,
    pub min_sample: usize,
    pub seed: u64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            lambda_threshold: 0.01,
            sample_fraction: 0.01,
            min_sample: 1000,
            seed: 42,
        }
    }
}

impl SelectorConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_threshold > 0.0 && self.lambda_threshold < 1.0) {
            return Err(Error::Usage(format!(
                "lambda must lie in (0, 1), got {}",
                self.lambda_threshold
            )));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::Usage(format!(
                "sample fraction must lie in (0, 1], got {}",
                self.sample_fraction
            )));
        }
        if self.min_sample == 0 {
            return Err(Error::Usage("min_sample must be positive".into()));
        }
        Ok(())
    }

    /// `max(min_sample, ceil(sample_fraction * n))`, capped at `n`.
    pub fn sample_size(&self, n: usize) -> usize {
        let by_fraction = (self.sample_fraction * n as f64).ceil() as usize;
        by_fraction.max(self.min_sample).min(n)
    }
}

/// Mix a stream id into the base seed (splitmix64 finalizer).
fn stream_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sample indices drawn uniformly without replacement from `0..n`.
///
/// `stream` separates independent draws under one seed, e.g. per query or per
/// filter batch.
pub fn draw_sample(n: usize, cfg: &SelectorConfig, stream: u64) -> Vec<usize> {
    let size = cfg.sample_size(n);
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, stream));
    rand::seq::index::sample(&mut rng, n, size).into_vec()
}

/// Target fraction among the sampled records.
pub fn estimate_with_sample(filter: &Filter, table: &AttributeTable, sample: &[usize]) -> Result<f64> {
    filter.validate(&table.schema())?;
    if sample.is_empty() {
        return Ok(0.0);
    }
    let hits = sample
        .iter()
        .filter(|&&i| filter.matches(&table.record(i)))
        .count();
    Ok(hits as f64 / sample.len() as f64)
}

/// Sampled selectivity estimate, deterministic in `cfg.seed`.
pub fn estimate_selectivity(filter: &Filter, ds: &VectorDataset, cfg: &SelectorConfig) -> Result<f64> {
    cfg.validate()?;
    if ds.is_empty() {
        return Err(Error::Usage("cannot estimate selectivity on an empty dataset".into()));
    }
    let sample = draw_sample(ds.len(), cfg, 0);
    estimate_with_sample(filter, ds.attributes(), &sample)
}

/// Relative standard error of the sampled estimate under the hypergeometric
/// model: `sqrt((1 - p) / (n p) * (1 - n / N))`.
pub fn theoretical_relative_error(p: f64, n: usize, big_n: usize) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Usage(format!("selectivity must lie in (0, 1], got {p}")));
    }
    if n == 0 || n > big_n {
        return Err(Error::Usage(format!("need 1 <= n <= N, got n={n} N={big_n}")));
    }
    let (n, big_n) = (n as f64, big_n as f64);
    Ok(((1.0 - p) / (n * p) * (1.0 - n / big_n)).sqrt())
}

pub fn route(p_hat: f64, cfg: &SelectorConfig) -> Route {
    if p_hat < cfg.lambda_threshold {
        Route::BruteForce
    } else {
        Route::Graph
    }
}

/// Exact filtered top-k by linear scan over target records.
pub fn brute_force_search(ds: &VectorDataset, q: &[f32], filter: &Filter, k: usize) -> Result<QueryOutcome> {
    if q.len() != ds.dim() {
        return Err(Error::Usage(format!(
            "query has dimension {}, dataset has {}",
            q.len(),
            ds.dim()
        )));
    }
    if k == 0 {
        return Err(Error::Usage("k must be positive".into()));
    }
    let attrs = ds.attributes();
    filter.validate(&attrs.schema())?;
    let mut stats = SearchStats::default();
    let mut heap: BinaryHeap<Neighbor> = BinaryHeap::with_capacity(k + 1);
    for i in 0..ds.len() {
        if !filter.matches(&attrs.record(i)) {
            continue;
        }
        let n = Neighbor::new(i as NodeId, l2(q, ds.vector(i)));
        stats.distance_computations += 1;
        if heap.len() < k {
            heap.push(n);
        } else if n < *heap.peek().unwrap() {
            heap.pop();
            heap.push(n);
        }
    }
    Ok(QueryOutcome::new(heap.into_sorted_vec(), k, stats, Route::BruteForce))
}

/// Dispatch on an already computed estimate.
pub fn answer_with_estimate(
    index: &HnswIndex,
    q: &[f32],
    filter: &Filter,
    p_hat: f64,
    sp: &SearchParams,
    cfg: &SelectorConfig,
) -> Result<QueryOutcome> {
    let mut out = match route(p_hat, cfg) {
        Route::BruteForce => brute_force_search(index.dataset(), q, filter, sp.k)?,
        Route::Graph => {
            let d = exclusion_distance(p_hat, sp, index.delta_d())?;
            favor_search_with_exclusion(index, q, filter, d, sp)?
        }
    };
    out.p_hat = Some(p_hat);
    Ok(out)
}

/// Estimate, route and search.
pub fn answer(
    index: &HnswIndex,
    q: &[f32],
    filter: &Filter,
    sp: &SearchParams,
    cfg: &SelectorConfig,
) -> Result<QueryOutcome> {
    let p_hat = estimate_selectivity(filter, index.dataset(), cfg)?;
    answer_with_estimate(index, q, filter, p_hat, sp, cfg)
}
