//! Zero, formula and per-query maximum exclusion distances side by side.

use favor::bench::ablation::ablation_exclusion;
use favor::bench::compute_ground_truth;
use favor::bench::synth::{synthetic_dataset, uniform_vectors};
use favor::{parse_filter, BuildParams, HnswIndex, SearchParams, SelectorConfig};

fn main() -> favor::Result<()> {
    let index = HnswIndex::build(synthetic_dataset(20_000, 16, 1, 2, 1, 4), BuildParams::new(16, 60))?;
    let queries = uniform_vectors(100, 16, 5);
    let f = parse_filter("int0 = 3")?;
    let gt = compute_ground_truth(index.dataset(), &queries, &f, 10)?;
    println!("{:>9} {:>4} {:>7} {:>8} {:>8} {:>9}", "strategy", "ef", "recall", "qps", "dc", "mean D");
    for ef in [20, 60, 120] {
        let rows = ablation_exclusion(&index, &queries, &f, &gt, &SearchParams::new(ef, 10), &SelectorConfig::default())?;
        for r in rows {
            println!(
                "{:>9} {:>4} {:>7.3} {:>8.0} {:>8.0} {:>9.4}",
                r.strategy, r.ef, r.recall, r.qps, r.mean_distance_computations, r.mean_exclusion
            );
        }
    }
    Ok(())
}
