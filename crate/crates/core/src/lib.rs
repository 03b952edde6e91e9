//! Filtered approximate nearest neighbor search.
//!
//! An HNSW graph is built once, without regard to attributes. Queries carry a
//! vector and a boolean filter over per-record attributes. The filter's
//! selectivity is estimated by sampling: rare filters are answered exactly by a
//! pre-filtered scan, the rest by a graph search that penalizes non-matching
//! nodes with an *exclusion distance* instead of dropping them.
//!
//! ```
//! use favor::{bench::synth, graph::{BuildParams, HnswIndex}, filter::parse_filter};
//! use favor::{search::SearchParams, selector::{answer, SelectorConfig}};
//!
//! let ds = synth::synthetic_dataset(2000, 8, 1, 1, 1, 7);
//! let index = HnswIndex::build(ds, BuildParams::new(8, 40)).unwrap();
//! let f = parse_filter("int0 in {1, 2, 3}").unwrap();
//! let q = vec![0.5; 8];
//! let out = answer(&index, &q, &f, &SearchParams::new(50, 5), &SelectorConfig::default()).unwrap();
//! assert_eq!(out.hits.len(), 5);
//! ```

pub mod bench;
mod codec;
pub mod error;
pub mod filter;
pub mod graph;
pub mod search;
pub mod selector;
pub mod vector;

pub use error::{Error, Result};
pub use filter::{parse_filter, Filter};
pub use graph::{BuildParams, HnswIndex};
pub use search::{QueryOutcome, Route, SearchParams};
pub use selector::SelectorConfig;
pub use vector::{AttributeSchema, AttributeTable, Neighbor, NodeId, VectorDataset};
