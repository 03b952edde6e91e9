//! How the exclusion distance scales with selectivity and beam width.

use favor::search::{exclusion_bounds, exclusion_distance};
use favor::SearchParams;

fn main() -> favor::Result<()> {
    let delta_d = 0.01;
    let k = 10;
    println!("{:>6} {:>5} {:>10} {:>10} {:>10} {:>10}", "p", "ef", "lower", "D(raw)", "upper", "D(/ef)");
    for ef in [50, 200] {
        for p in [0.02, 0.1, 0.3, 0.5, 0.9] {
            let (lo, hi) = exclusion_bounds(p, k, ef, delta_d);
            let raw = exclusion_distance(p, &SearchParams::new(ef, k).with_normalize_by_ef(false), delta_d)?;
            let norm = exclusion_distance(p, &SearchParams::new(ef, k), delta_d)?;
            println!("{p:>6} {ef:>5} {lo:>10.4} {raw:>10.4} {hi:>10.4} {norm:>10.4}");
        }
    }
    // p = 0 has no exclusion distance; such filters go to brute force.
    println!("p = 0: {}", exclusion_distance(0.0, &SearchParams::new(50, k), delta_d).unwrap_err());
    Ok(())
}
