//! Attribute filter expressions.
//!
//! A [`Filter`] is a small expression tree over a record's positional
//! attributes (`bool0`, `int1`, `float2`, ...). Records that satisfy the
//! filter are *target* records; the rest are *non-target*.
//!
//! ```
//! use favor::filter::{parse_filter, Filter};
//!
//! let f = parse_filter("int0 in {1,2,3} and float0 in [10,60]").unwrap();
//! assert_eq!(
//!     f,
//!     Filter::And(vec![
//!         Filter::IntIn { attr: 0, values: vec![1, 2, 3] },
//!         Filter::FloatRange { attr: 0, low: 10.0, high: 60.0 },
//!     ])
//! );
//! assert_eq!(parse_filter(&f.to_string()).unwrap(), f);
//! ```

mod parser;

use std::fmt;

pub use parser::parse_filter;

use crate::error::{Error, Result};
use crate::vector::{AttributeRecord, AttributeSchema, AttributeTable};

#[derive(Debug, Clone, PartialEq)]
pub enum Filter {
    /// Matches every record.
    True,
    BoolEq {
        attr: usize,
        value: bool,
    },
    IntEq {
        attr: usize,
        value: i32,
    },
    /// Set membership. `values` is kept sorted and deduplicated.
    IntIn {
        attr: usize,
        values: Vec<i32>,
    },
    /// Closed interval `[low, high]`.
    FloatRange {
        attr: usize,
        low: f64,
        high: f64,
    },
    And(Vec<Filter>),
    Or(Vec<Filter>),
    Not(Box<Filter>),
}

impl Filter {
    pub fn int_in(attr: usize, values: impl IntoIterator<Item = i32>) -> Self {
        let mut values: Vec<i32> = values.into_iter().collect();
        values.sort_unstable();
        values.dedup();
        Filter::IntIn { attr, values }
    }

    pub fn not(inner: Filter) -> Self {
        Filter::Not(Box::new(inner))
    }

    /// Check attribute indices against `schema` and structural invariants.
    pub fn validate(&self, schema: &AttributeSchema) -> Result<()> {
        let check = |kind: &str, attr: usize, arity: usize| {
            if attr >= arity {
                Err(Error::Schema(format!(
                    "{kind}{attr} out of range: dataset has {arity} {kind} attribute(s)"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            Filter::True => Ok(()),
            Filter::BoolEq { attr, .. } => check("bool", *attr, schema.n_bool),
            Filter::IntEq { attr, .. } => check("int", *attr, schema.n_int),
            Filter::IntIn { attr, values } => {
                if values.is_empty() {
                    return Err(Error::Schema("empty value set".into()));
                }
                check("int", *attr, schema.n_int)
            }
            Filter::FloatRange { attr, low, high } => {
                if !(low <= high) {
                    return Err(Error::Schema(format!("malformed range [{low}, {high}]")));
                }
                check("float", *attr, schema.n_float)
            }
            Filter::And(children) | Filter::Or(children) => {
                if children.is_empty() {
                    return Err(Error::Schema("empty logical group".into()));
                }
                children.iter().try_for_each(|c| c.validate(schema))
            }
            Filter::Not(inner) => inner.validate(schema),
        }
    }

    /// Evaluate against a record, reporting out-of-range attribute indices.
    pub fn evaluate(&self, record: &AttributeRecord<'_>) -> Result<bool> {
        let schema = AttributeSchema::new(
            record.bools.len(),
            record.ints.len(),
            record.floats.len(),
        );
        self.validate(&schema)?;
        Ok(self.matches(record))
    }

    /// Evaluate a filter that has already been validated for this record's schema.
    ///
    /// Panics if an attribute index is out of range.
    #[inline]
    pub fn matches(&self, record: &AttributeRecord<'_>) -> bool {
        match self {
            Filter::True => true,
            Filter::BoolEq { attr, value } => record.bools[*attr] == *value,
            Filter::IntEq { attr, value } => record.ints[*attr] == *value,
            Filter::IntIn { attr, values } => values.binary_search(&record.ints[*attr]).is_ok(),
            Filter::FloatRange { attr, low, high } => {
                let v = record.floats[*attr] as f64;
                *low <= v && v <= *high
            }
            Filter::And(children) => children.iter().all(|c| c.matches(record)),
            Filter::Or(children) => children.iter().any(|c| c.matches(record)),
            Filter::Not(inner) => !inner.matches(record),
        }
    }

    /// Evaluate over every record of a table, returning one flag per record.
    pub fn mask(&self, table: &AttributeTable) -> Result<Vec<bool>> {
        self.validate(&table.schema())?;
        Ok((0..table.len())
            .map(|i| self.matches(&table.record(i)))
            .collect())
    }
}

/// Fraction of records in `table` that satisfy `filter`; 0 for an empty table.
pub fn exact_selectivity(filter: &Filter, table: &AttributeTable) -> Result<f64> {
    filter.validate(&table.schema())?;
    if table.is_empty() {
        return Ok(0.0);
    }
    let hits = (0..table.len())
        .filter(|&i| filter.matches(&table.record(i)))
        .count();
    Ok(hits as f64 / table.len() as f64)
}

impl fmt::Display for Filter {
    /// Renders in the textual grammar accepted by [`parse_filter`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Filter::True => write!(f, "true"),
            Filter::BoolEq { attr, value } => write!(f, "bool{attr} = {value}"),
            Filter::IntEq { attr, value } => write!(f, "int{attr} = {value}"),
            Filter::IntIn { attr, values } => {
                write!(f, "int{attr} in {{")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "}}")
            }
            Filter::FloatRange { attr, low, high } => {
                write!(f, "float{attr} in [{low:?},{high:?}]")
            }
            Filter::And(children) | Filter::Or(children) => {
                let op = if matches!(self, Filter::And(_)) {
                    " and "
                } else {
                    " or "
                };
                write!(f, "(")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{op}")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
            Filter::Not(inner) => match **inner {
                Filter::And(_) | Filter::Or(_) => write!(f, "not {inner}"),
                _ => write!(f, "not ({inner})"),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::synth::synthesize_attributes;
    use proptest::prelude::*;

    fn rec<'a>(bools: &'a [bool], ints: &'a [i32], floats: &'a [f32]) -> AttributeRecord<'a> {
        AttributeRecord {
            bools,
            ints,
            floats,
        }
    }

    #[test]
    fn evaluate_examples() {
        let r = rec(&[true], &[3, 8], &[42.0]);
        assert!(Filter::IntEq { attr: 0, value: 3 }.evaluate(&r).unwrap());
        assert!(!Filter::not(Filter::True).evaluate(&r).unwrap());
        assert!(Filter::FloatRange {
            attr: 0,
            low: 42.0,
            high: 42.0
        }
        .evaluate(&r)
        .unwrap());
    }

    #[test]
    fn evaluate_rejects_out_of_range_attribute() {
        let r = rec(&[true], &[3], &[]);
        let err = Filter::IntEq { attr: 1, value: 3 }.evaluate(&r);
        assert!(matches!(err, Err(Error::Schema(_))));
        let err = Filter::FloatRange {
            attr: 0,
            low: 0.0,
            high: 1.0,
        }
        .evaluate(&r);
        assert!(matches!(err, Err(Error::Schema(_))));
    }

    #[test]
    fn logic_scenario_match_rate() {
        let table = synthesize_attributes(100_000, 1, 2, 1, 7);
        let f = Filter::And(vec![
            Filter::IntEq { attr: 0, value: 5 },
            Filter::FloatRange {
                attr: 0,
                low: 0.0,
                high: 50.0,
            },
        ]);
        let hits = (0..table.len())
            .filter(|&i| f.evaluate(&table.record(i)).unwrap())
            .count();
        let rate = hits as f64 / table.len() as f64;
        assert!((rate - 0.05).abs() <= 0.005, "rate {rate}");
    }

    #[test]
    fn exact_selectivity_examples() {
        let table = synthesize_attributes(100_000, 1, 2, 1, 11);
        assert_eq!(exact_selectivity(&Filter::True, &table).unwrap(), 1.0);
        assert_eq!(
            exact_selectivity(&Filter::not(Filter::True), &table).unwrap(),
            0.0
        );
        let p = exact_selectivity(&Filter::BoolEq { attr: 0, value: true }, &table).unwrap();
        assert!((p - 0.5).abs() <= 0.01, "p {p}");
        assert_eq!(
            exact_selectivity(&Filter::True, &AttributeTable::empty(0)).unwrap(),
            0.0
        );
    }

    pub(crate) fn arb_filter() -> impl Strategy<Value = Filter> {
        let leaf = prop_oneof![
            Just(Filter::True),
            (0usize..2, any::<bool>()).prop_map(|(attr, value)| Filter::BoolEq { attr, value }),
            (0usize..2, 0i32..10).prop_map(|(attr, value)| Filter::IntEq { attr, value }),
            (0usize..2, prop::collection::vec(-3i32..12, 1..5))
                .prop_map(|(attr, v)| Filter::int_in(attr, v)),
            (0usize..2, -10.0f64..110.0, 0.0f64..60.0).prop_map(|(attr, lo, w)| {
                Filter::FloatRange {
                    attr,
                    low: lo,
                    high: lo + w,
                }
            }),
        ];
        leaf.prop_recursive(4, 24, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 2..4).prop_map(Filter::And),
                prop::collection::vec(inner.clone(), 2..4).prop_map(Filter::Or),
                inner.prop_map(Filter::not),
            ]
        })
    }

    proptest! {
        #[test]
        fn negation_flips(f in arb_filter(), b in any::<[bool; 2]>(), i in any::<[i32; 2]>(), x in any::<[u8; 2]>()) {
            let ints = [i[0].rem_euclid(10), i[1].rem_euclid(10)];
            let floats = [x[0] as f32 / 2.55, x[1] as f32 / 2.55];
            let r = rec(&b, &ints, &floats);
            prop_assert_eq!(Filter::not(f.clone()).evaluate(&r).unwrap(), !f.evaluate(&r).unwrap());
        }

        #[test]
        fn excluded_middle(f in arb_filter()) {
            let table = synthesize_attributes(300, 2, 2, 2, 5);
            let contra = Filter::And(vec![f.clone(), Filter::not(f.clone())]);
            let taut = Filter::Or(vec![f.clone(), Filter::not(f)]);
            prop_assert_eq!(exact_selectivity(&contra, &table).unwrap(), 0.0);
            prop_assert_eq!(exact_selectivity(&taut, &table).unwrap(), 1.0);
        }

        #[test]
        fn render_parse_round_trip(f in arb_filter()) {
            let text = f.to_string();
            prop_assert_eq!(parse_filter(&text).unwrap(), f);
        }
    }
}
