//! Synthetic vectors and attributes.
//!
//! Attribute distributions: bools are fair coin flips, ints are uniform on
//! `0..=9`, floats are uniform on `[0, 100]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::vector::{AttributeSchema, AttributeTable, VectorDataset};

pub fn synthesize_attributes(
    count: usize,
    n_bool: usize,
    n_int: usize,
    n_float: usize,
    seed: u64,
) -> AttributeTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bools = Vec::with_capacity(count * n_bool);
    let mut ints = Vec::with_capacity(count * n_int);
    let mut floats = Vec::with_capacity(count * n_float);
    for _ in 0..count {
        bools.extend((0..n_bool).map(|_| rng.gen_bool(0.5)));
        ints.extend((0..n_int).map(|_| rng.gen_range(0..=9)));
        floats.extend((0..n_float).map(|_| rng.gen_range(0.0f32..=100.0)));
    }
    AttributeTable::from_parts(
        AttributeSchema::new(n_bool, n_int, n_float),
        count,
        bools,
        ints,
        floats,
    )
    .expect("generated columns match the schema")
}

/// `count` vectors with components uniform on `[0, 1)`, no attributes.
pub fn uniform_vectors(count: usize, dim: usize, seed: u64) -> VectorDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..count * dim).map(|_| rng.gen::<f32>()).collect();
    VectorDataset::from_vectors(dim, data).expect("finite components")
}

/// Uniform vectors paired with synthesized attributes.
pub fn synthetic_dataset(
    count: usize,
    dim: usize,
    n_bool: usize,
    n_int: usize,
    n_float: usize,
    seed: u64,
) -> VectorDataset {
    uniform_vectors(count, dim, seed)
        .with_attributes(synthesize_attributes(
            count,
            n_bool,
            n_int,
            n_float,
            seed.wrapping_add(1),
        ))
        .expect("attribute count matches")
}

/// The desk-scale benchmark dataset: 100k uniform 32-d vectors with one
/// bool, two int and one float attribute.
pub fn default_dataset() -> VectorDataset {
    synthetic_dataset(100_000, 32, 1, 2, 1, 42)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{exact_selectivity, Filter};

    #[test]
    fn deterministic() {
        assert_eq!(
            synthesize_attributes(500, 1, 2, 1, 3),
            synthesize_attributes(500, 1, 2, 1, 3)
        );
        assert_ne!(
            synthesize_attributes(500, 1, 2, 1, 3),
            synthesize_attributes(500, 1, 2, 1, 4)
        );
    }

    #[test]
    fn value_ranges() {
        let t = synthesize_attributes(10_000, 0, 1, 1, 8);
        for i in 0..t.len() {
            let r = t.record(i);
            assert!((0..=9).contains(&r.ints[0]));
            assert!((0.0..=100.0).contains(&r.floats[0]));
        }
    }

    #[test]
    fn scenario_selectivities() {
        let t = synthesize_attributes(100_000, 1, 1, 0, 42);
        let p = exact_selectivity(&Filter::BoolEq { attr: 0, value: true }, &t).unwrap();
        assert!((p - 0.5).abs() <= 0.01, "{p}");
        let p = exact_selectivity(&Filter::int_in(0, [0, 1, 2]), &t).unwrap();
        assert!((p - 0.3).abs() <= 0.01, "{p}");
    }
}
