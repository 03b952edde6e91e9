//! Benchmark tooling: synthetic data, dataset files, ground truth, sweeps,
//! ablations and the linear-model check.

pub mod ablation;
pub mod groundtruth;
pub mod io;
pub mod linear;
pub mod sweep;
pub mod synth;

pub use groundtruth::{compute_ground_truth, recall_at_k, GroundTruth};
pub use sweep::{run_sweep, Method, SweepRow, SweepSpec};
