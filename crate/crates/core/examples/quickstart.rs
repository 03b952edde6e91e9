//! Build an index over synthetic data and answer one filtered query.
//!
//! cargo run --example quickstart

use favor::bench::synth::synthetic_dataset;
use favor::selector::answer;
use favor::{parse_filter, BuildParams, HnswIndex, SearchParams, SelectorConfig};

fn main() -> favor::Result<()> {
    // 5000 points in 16 dims, one bool, two ints, one float attribute.
    let ds = synthetic_dataset(5000, 16, 1, 2, 1, 1);
    let index = HnswIndex::build(ds, BuildParams::new(16, 100))?;
    println!("{} points, delta_d {:.5}", index.len(), index.delta_d());

    let f = parse_filter("bool0 = true and int0 in {1, 2}")?;
    let q = vec![0.5f32; 16];
    let out = answer(&index, &q, &f, &SearchParams::new(64, 5), &SelectorConfig::default())?;
    println!(
        "route {}  p_hat {:.3}  exclusion {:?}",
        out.route.as_str(),
        out.p_hat.unwrap_or(f64::NAN),
        out.exclusion
    );
    for h in &out.hits {
        let rec = index.dataset().attributes().record(h.id as usize);
        println!("  #{:<5} dist {:.4}  bool0 {}  int0 {}", h.id, h.dist, rec.bools[0], rec.ints[0]);
    }
    Ok(())
}
