//! Exclusion-distance strategies compared side by side: no exclusion, the
//! selectivity-derived value, and the per-query worst case `D_max`.

use std::time::Instant;

use serde::Serialize;

use crate::bench::groundtruth::{recall_at_k, GroundTruth};
use crate::error::{Error, Result};
use crate::filter::Filter;
use crate::graph::HnswIndex;
use crate::search::{exclusion_distance, favor_search_with_exclusion, QueryOutcome, SearchParams};
use crate::selector::{estimate_selectivity, SelectorConfig};
use crate::vector::{l2, VectorDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// `D = 0`.
    Zero,
    /// `D` from the estimated selectivity.
    Formula,
    /// Largest target distance minus smallest non-target distance, per query.
    Max,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Zero, Strategy::Formula, Strategy::Max];

    pub fn as_str(&self) -> &'static str {
        match self {
            Strategy::Zero => "d0",
            Strategy::Formula => "formula",
            Strategy::Max => "d_max",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub strategy: String,
    pub ef: usize,
    pub k: usize,
    pub recall: f64,
    pub qps: f64,
    pub mean_distance_computations: f64,
    pub mean_exclusion: f64,
}

/// `max raw(q, target) - min raw(q, non-target)` over the full dataset,
/// clamped at zero. Zero when either class is empty.
pub fn d_max(ds: &VectorDataset, q: &[f32], filter: &Filter) -> f64 {
    let attrs = ds.attributes();
    let mut max_td = f32::NEG_INFINITY;
    let mut min_ntd = f32::INFINITY;
    for (i, v) in ds.vectors().enumerate() {
        let d = l2(q, v);
        if filter.matches(&attrs.record(i)) {
            max_td = max_td.max(d);
        } else {
            min_ntd = min_ntd.min(d);
        }
    }
    if max_td.is_finite() && min_ntd.is_finite() {
        f64::from(max_td - min_ntd).max(0.0)
    } else {
        0.0
    }
}

/// Run every strategy at one beam width. `D_max` is computed before the
/// timer starts since it needs a full scan per query.
pub fn ablation_exclusion(
    index: &HnswIndex,
    queries: &VectorDataset,
    filter: &Filter,
    truth: &GroundTruth,
    sp: &SearchParams,
    cfg: &SelectorConfig,
) -> Result<Vec<AblationRow>> {
    sp.validate()?;
    filter.validate(&index.dataset().attributes().schema())?;
    if truth.entries.len() != queries.len() || queries.is_empty() {
        return Err(Error::Usage("ground truth does not match the query set".into()));
    }
    let p_hat = estimate_selectivity(filter, index.dataset(), cfg)?;
    let mut rows = Vec::with_capacity(3);
    for strategy in Strategy::ALL {
        let ds: Vec<f64> = match strategy {
            Strategy::Zero => vec![0.0; queries.len()],
            Strategy::Formula => {
                let d = if p_hat > 0.0 {
                    exclusion_distance(p_hat, sp, index.delta_d())?
                } else {
                    0.0
                };
                vec![d; queries.len()]
            }
            Strategy::Max => queries.vectors().map(|q| d_max(index.dataset(), q, filter)).collect(),
        };
        let start = Instant::now();
        let outs = queries
            .vectors()
            .zip(&ds)
            .map(|(q, &d)| favor_search_with_exclusion(index, q, filter, d, sp))
            .collect::<Result<Vec<QueryOutcome>>>()?;
        let secs = start.elapsed().as_secs_f64().max(1e-9);
        let n = queries.len() as f64;
        rows.push(AblationRow {
            strategy: strategy.as_str().to_string(),
            ef: sp.ef,
            k: sp.k,
            recall: outs
                .iter()
                .enumerate()
                .map(|(i, o)| recall_at_k(&o.hits, &truth.ids(i), sp.k))
                .sum::<f64>()
                / n,
            qps: n / secs,
            mean_distance_computations: outs
                .iter()
                .map(|o| o.stats.distance_computations as f64)
                .sum::<f64>()
                / n,
            mean_exclusion: ds.iter().sum::<f64>() / n,
        });
    }
    Ok(rows)
}
