//! Recall/QPS sweep over ef for every method, written as CSV to stdout.

use favor::bench::sweep::write_csv;
use favor::bench::synth::{synthetic_dataset, uniform_vectors};
use favor::bench::{compute_ground_truth, run_sweep, SweepSpec};
use favor::{parse_filter, BuildParams, HnswIndex};

fn main() -> favor::Result<()> {
    let index = HnswIndex::build(synthetic_dataset(10_000, 16, 1, 2, 1, 2), BuildParams::new(16, 80))?;
    let queries = uniform_vectors(100, 16, 3);
    let filters = vec![
        ("half".to_string(), parse_filter("bool0 = true")?),
        ("tenth".to_string(), parse_filter("int0 = 3")?),
    ];
    let truths = filters
        .iter()
        .map(|(_, f)| compute_ground_truth(index.dataset(), &queries, f, 10))
        .collect::<favor::Result<Vec<_>>>()?;
    let spec = SweepSpec::new(vec![10, 40, 160], 10, filters);
    let rows = run_sweep(&index, &queries, &spec, &truths)?;
    write_csv(&rows, std::io::stdout().lock())
}
