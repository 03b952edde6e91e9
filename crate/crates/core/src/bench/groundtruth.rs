//! Exact filtered ground truth and the recall metric.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::bench::io::{decode_ivecs, encode_ivecs};
use crate::error::{Error, Result};
use crate::filter::Filter;
use crate::selector::brute_force_search;
use crate::vector::{Neighbor, NodeId, VectorDataset};

/// Per query, the exact `k` nearest target records sorted by (distance, id).
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub k: usize,
    pub entries: Vec<Vec<Neighbor>>,
}

impl GroundTruth {
    /// Queries whose filter matched nothing.
    pub fn empty_entries(&self) -> usize {
        self.entries.iter().filter(|e| e.is_empty()).count()
    }

    pub fn ids(&self, query: usize) -> Vec<NodeId> {
        self.entries[query].iter().map(|n| n.id).collect()
    }

    /// Write ids as `ivecs` records (distances are not persisted).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let rows: Vec<Vec<u32>> = (0..self.entries.len()).map(|q| self.ids(q)).collect();
        fs::write(path, encode_ivecs(&rows))?;
        Ok(())
    }

    /// Read an `ivecs` file. Loaded entries carry NaN distances.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let rows = decode_ivecs(&fs::read(path)?)?;
        let k = rows.iter().map(Vec::len).max().unwrap_or(0);
        let entries = rows
            .into_iter()
            .map(|r| r.into_iter().map(|id| Neighbor::new(id, f32::NAN)).collect())
            .collect();
        Ok(Self { k, entries })
    }
}

pub fn compute_ground_truth(
    ds: &VectorDataset,
    queries: &VectorDataset,
    filter: &Filter,
    k: usize,
) -> Result<GroundTruth> {
    if queries.dim() != ds.dim() {
        return Err(Error::Usage(format!(
            "queries have dimension {}, dataset has {}",
            queries.dim(),
            ds.dim()
        )));
    }
    let entries = queries
        .vectors()
        .map(|q| brute_force_search(ds, q, filter, k).map(|o| o.hits))
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundTruth { k, entries })
}

/// `|hits ∩ truth| / |truth|` over the first `k` hits; 1 when `truth` is empty.
pub fn recall_at_k(hits: &[Neighbor], truth: &[NodeId], k: usize) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let truth: HashSet<NodeId> = truth.iter().copied().collect();
    let found = hits.iter().take(k).filter(|h| truth.contains(&h.id)).count();
    found as f64 / truth.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::synth::{synthetic_dataset, uniform_vectors};
    use crate::vector::l2;

    fn n(ids: &[NodeId]) -> Vec<Neighbor> {
        ids.iter().map(|&i| Neighbor::new(i, 0.0)).collect()
    }

    #[test]
    fn recall_examples() {
        let gt: Vec<NodeId> = (0..10).collect();
        assert_eq!(recall_at_k(&n(&gt), &gt, 10), 1.0);
        assert_eq!(recall_at_k(&n(&[20, 21, 22]), &gt, 10), 0.0);
        assert_eq!(recall_at_k(&n(&[0, 1, 2, 3, 4, 5, 6, 97, 98, 99]), &gt, 10), 0.7);
        assert_eq!(recall_at_k(&n(&[]), &[], 10), 1.0);
    }

    #[test]
    fn query_on_stored_vector() {
        let ds = synthetic_dataset(200, 4, 1, 1, 1, 2);
        let queries = VectorDataset::from_vectors(4, ds.vector(17).to_vec()).unwrap();
        let gt = compute_ground_truth(&ds, &queries, &Filter::True, 1).unwrap();
        assert_eq!(gt.ids(0), vec![17]);
    }

    #[test]
    fn matches_naive_double_loop() {
        let ds = synthetic_dataset(100, 5, 1, 1, 1, 3);
        let queries = uniform_vectors(20, 5, 4);
        let f = Filter::IntIn {
            attr: 0,
            values: vec![1, 4, 7],
        };
        let k = 7;
        let gt = compute_ground_truth(&ds, &queries, &f, k).unwrap();
        for (qi, q) in queries.vectors().enumerate() {
            let mut best: Vec<(f32, u32)> = Vec::new();
            for i in 0..ds.len() {
                let r = ds.attributes().record(i);
                if ![1, 4, 7].contains(&r.ints[0]) {
                    continue;
                }
                let d = l2(q, ds.vector(i));
                let pos = best
                    .iter()
                    .position(|&(bd, bi)| d < bd || (d == bd && (i as u32) < bi))
                    .unwrap_or(best.len());
                best.insert(pos, (d, i as u32));
                best.truncate(k);
            }
            let expect: Vec<u32> = best.iter().map(|b| b.1).collect();
            assert_eq!(gt.ids(qi), expect);
        }
    }

    #[test]
    fn empty_target_set_is_flagged() {
        let ds = synthetic_dataset(50, 3, 1, 1, 1, 3);
        let queries = uniform_vectors(3, 3, 4);
        let gt = compute_ground_truth(&ds, &queries, &Filter::not(Filter::True), 5).unwrap();
        assert_eq!(gt.empty_entries(), 3);
    }

    #[test]
    fn save_load_ids() {
        let ds = synthetic_dataset(300, 3, 1, 1, 1, 3);
        let queries = uniform_vectors(5, 3, 4);
        let gt = compute_ground_truth(&ds, &queries, &Filter::IntEq { attr: 0, value: 2 }, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gt.ivecs");
        gt.save(&p).unwrap();
        let back = GroundTruth::load(&p).unwrap();
        for q in 0..5 {
            assert_eq!(back.ids(q), gt.ids(q));
        }
    }
}
