//! Sampled selectivity estimates and the graph / brute-force routing decision.

use favor::bench::synth::synthetic_dataset;
use favor::filter::exact_selectivity;
use favor::selector::{answer, estimate_selectivity, theoretical_relative_error};
use favor::{parse_filter, BuildParams, HnswIndex, SearchParams, SelectorConfig};

fn main() -> favor::Result<()> {
    let ds = synthetic_dataset(20_000, 8, 1, 2, 1, 5);
    let index = HnswIndex::build(ds, BuildParams::new(12, 60))?;
    let cfg = SelectorConfig::default();
    let n = cfg.sample_size(index.len());
    println!("sample size {n} of {}", index.len());

    let q = vec![0.3f32; 8];
    for e in ["bool0 = true", "int0 = 3", "int0 = 3 and int1 = 3", "float0 in [0.0, 0.002]"] {
        let f = parse_filter(e)?;
        let p = exact_selectivity(&f, index.dataset().attributes())?;
        let p_hat = estimate_selectivity(&f, index.dataset(), &cfg)?;
        let out = answer(&index, &q, &f, &SearchParams::new(50, 10), &cfg)?;
        let err = theoretical_relative_error(p, n, index.len()).unwrap_or(f64::NAN);
        println!(
            "{e:<26} p {p:.4}  p_hat {p_hat:.4}  rel.err {err:.3}  -> {} ({} dc)",
            out.route.as_str(),
            out.stats.distance_computations
        );
    }
    Ok(())
}
