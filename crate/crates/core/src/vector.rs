//! Vectors, attribute records, the dataset container and the distance kernel.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Node identifier inside a dataset / index.
pub type NodeId = u32;

/// A candidate or result: a dataset index and its distance to the query.
///
/// Ordering is by `dist` (IEEE total order) and then by `id`, so heaps and
/// sorts over neighbors are fully deterministic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: NodeId,
    pub dist: f32,
}

impl Neighbor {
    pub fn new(id: NodeId, dist: f32) -> Self {
        Self { id, dist }
    }
}

impl Eq for Neighbor {}

impl PartialOrd for Neighbor {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Neighbor {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then_with(|| self.id.cmp(&other.id))
    }
}

/// Euclidean distance with a dimension check.
pub fn euclidean(a: &[f32], b: &[f32]) -> Result<f32> {
    if a.len() != b.len() {
        return Err(Error::Usage(format!(
            "dimension mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(l2(a, b))
}

/// Unchecked Euclidean distance used on hot paths. Callers guarantee equal lengths.
#[inline]
pub fn l2(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f32;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc.sqrt()
}

/// The `min(k, len)` smallest neighbors, ascending by distance then id.
pub fn top_k_of(candidates: impl IntoIterator<Item = Neighbor>, k: usize) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = candidates.into_iter().collect();
    if k < all.len() {
        all.select_nth_unstable(k);
        all.truncate(k);
    }
    all.sort_unstable();
    all
}

/// Per-kind attribute arities shared by every record of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AttributeSchema {
    pub n_bool: usize,
    pub n_int: usize,
    pub n_float: usize,
}

impl AttributeSchema {
    pub fn new(n_bool: usize, n_int: usize, n_float: usize) -> Self {
        Self {
            n_bool,
            n_int,
            n_float,
        }
    }
}

/// Borrowed view of one record's attributes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttributeRecord<'a> {
    pub bools: &'a [bool],
    pub ints: &'a [i32],
    pub floats: &'a [f32],
}

/// Column-per-kind attribute storage, row-major within each kind.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttributeTable {
    schema: AttributeSchema,
    count: usize,
    bools: Vec<bool>,
    ints: Vec<i32>,
    floats: Vec<f32>,
}

impl AttributeTable {
    pub fn new(schema: AttributeSchema) -> Self {
        Self {
            schema,
            ..Default::default()
        }
    }

    /// A table of `count` records that carry no attributes at all.
    pub fn empty(count: usize) -> Self {
        Self {
            count,
            ..Default::default()
        }
    }

    pub fn from_parts(
        schema: AttributeSchema,
        count: usize,
        bools: Vec<bool>,
        ints: Vec<i32>,
        floats: Vec<f32>,
    ) -> Result<Self> {
        if bools.len() != count * schema.n_bool
            || ints.len() != count * schema.n_int
            || floats.len() != count * schema.n_float
        {
            return Err(Error::Format(format!(
                "attribute columns do not match schema {schema:?} for {count} records"
            )));
        }
        if let Some(pos) = floats.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite float attribute in record {}",
                pos / schema.n_float.max(1)
            )));
        }
        Ok(Self {
            schema,
            count,
            bools,
            ints,
            floats,
        })
    }

    pub fn push(&mut self, bools: &[bool], ints: &[i32], floats: &[f32]) -> Result<()> {
        let s = self.schema;
        if bools.len() != s.n_bool || ints.len() != s.n_int || floats.len() != s.n_float {
            return Err(Error::Schema(format!(
                "record arity ({}, {}, {}) does not match schema {s:?}",
                bools.len(),
                ints.len(),
                floats.len()
            )));
        }
        if floats.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite float attribute".into()));
        }
        self.bools.extend_from_slice(bools);
        self.ints.extend_from_slice(ints);
        self.floats.extend_from_slice(floats);
        self.count += 1;
        Ok(())
    }

    pub fn schema(&self) -> AttributeSchema {
        self.schema
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub fn record(&self, i: usize) -> AttributeRecord<'_> {
        let s = self.schema;
        AttributeRecord {
            bools: &self.bools[i * s.n_bool..(i + 1) * s.n_bool],
            ints: &self.ints[i * s.n_int..(i + 1) * s.n_int],
            floats: &self.floats[i * s.n_float..(i + 1) * s.n_float],
        }
    }

    pub(crate) fn columns(&self) -> (&[bool], &[i32], &[f32]) {
        (&self.bools, &self.ints, &self.floats)
    }
}

/// Fixed-dimension vectors stored contiguously, each paired with an attribute record.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorDataset {
    dim: usize,
    data: Vec<f32>,
    attributes: AttributeTable,
}

impl VectorDataset {
    pub fn new(dim: usize, data: Vec<f32>, attributes: AttributeTable) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Format("dimension must be positive".into()));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::Format(format!(
                "{} floats is not a multiple of dimension {dim}",
                data.len()
            )));
        }
        let count = data.len() / dim;
        if attributes.len() != count {
            return Err(Error::Format(format!(
                "{count} vectors but {} attribute records",
                attributes.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite component in vector {}",
                pos / dim
            )));
        }
        Ok(Self {
            dim,
            data,
            attributes,
        })
    }

    /// Vectors without attributes (every record has zero arity).
    pub fn from_vectors(dim: usize, data: Vec<f32>) -> Result<Self> {
        let count = if dim == 0 { 0 } else { data.len() / dim };
        Self::new(dim, data, AttributeTable::empty(count))
    }

    /// Replace the attribute table, e.g. after ingesting vectors and attributes separately.
    pub fn with_attributes(self, attributes: AttributeTable) -> Result<Self> {
        Self::new(self.dim, self.data, attributes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn vector(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn raw(&self) -> &[f32] {
        &self.data
    }

    pub fn attributes(&self) -> &AttributeTable {
        &self.attributes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        let v = [0.3, -1.5, 7.25];
        assert_eq!(euclidean(&v, &v).unwrap(), 0.0);
        assert_eq!(euclidean(&[1.0, 2.0, 3.0], &[4.0, 6.0, 3.0]).unwrap(), 5.0);
    }

    #[test]
    fn euclidean_rejects_mismatched_dims() {
        assert!(matches!(
            euclidean(&[1.0], &[1.0, 2.0]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn top_k_examples() {
        let c = [
            Neighbor::new(5, 1.0),
            Neighbor::new(2, 0.5),
            Neighbor::new(9, 2.0),
        ];
        assert_eq!(
            top_k_of(c, 2),
            vec![Neighbor::new(2, 0.5), Neighbor::new(5, 1.0)]
        );
        let tie = [Neighbor::new(3, 1.0), Neighbor::new(1, 1.0)];
        assert_eq!(top_k_of(tie, 1), vec![Neighbor::new(1, 1.0)]);
        assert_eq!(
            top_k_of([Neighbor::new(7, 0.3)], 5),
            vec![Neighbor::new(7, 0.3)]
        );
    }

    #[test]
    fn dataset_rejects_mismatched_attributes() {
        let err = VectorDataset::new(2, vec![0.0; 4], AttributeTable::empty(3));
        assert!(matches!(err, Err(Error::Format(_))));
        let err = VectorDataset::new(2, vec![0.0, f32::NAN], AttributeTable::empty(1));
        assert!(matches!(err, Err(Error::Format(_))));
    }

    #[test]
    fn attribute_push_checks_arity() {
        let mut t = AttributeTable::new(AttributeSchema::new(1, 1, 0));
        t.push(&[true], &[3], &[]).unwrap();
        assert!(t.push(&[true], &[], &[]).is_err());
        assert_eq!(t.record(0).ints, &[3]);
    }

    fn vec3() -> impl Strategy<Value = Vec<f32>> {
        prop::collection::vec(-100.0f32..100.0, 3)
    }

    proptest! {
        #[test]
        fn triangle_inequality(a in vec3(), b in vec3(), c in vec3()) {
            let ab = l2(&a, &b) as f64;
            let bc = l2(&b, &c) as f64;
            let ac = l2(&a, &c) as f64;
            prop_assert!(ac <= (ab + bc) * (1.0 + 1e-6) + 1e-6);
            prop_assert_eq!(l2(&a, &b), l2(&b, &a));
        }

        #[test]
        fn top_k_is_prefix_of_full_sort(
            raw in prop::collection::vec((0u32..50, 0u8..10), 0..40),
            k in 1usize..50,
        ) {
            let cands: Vec<Neighbor> = raw.iter().map(|&(id, d)| Neighbor::new(id, d as f32)).collect();
            let mut full = cands.clone();
            full.sort();
            let got = top_k_of(cands, k);
            prop_assert_eq!(&got[..], &full[..k.min(full.len())]);
        }
    }
}
