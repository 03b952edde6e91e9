//! Check that the m-th nearest neighbor distance grows roughly linearly in m.

use favor::bench::linear::{fit_r2, nearest_distances, verify_linear_model};
use favor::bench::synth::uniform_vectors;

fn main() -> favor::Result<()> {
    let ds = uniform_vectors(10_000, 32, 8);
    let d = nearest_distances(&ds, 0, 200);
    for m in [1, 10, 50, 100, 200] {
        println!("d_{m:<3} = {:.4}", d[m - 1]);
    }
    let y: Vec<f64> = d.iter().map(|&x| f64::from(x)).collect();
    println!("anchor 0: R^2 = {:.4}", fit_r2(&y).unwrap_or(f64::NAN));

    let r = verify_linear_model(&ds, 50, 200, 1)?;
    println!(
        "{} anchors: mean R^2 {:.4}, std {:.4}, degenerate {}",
        r.anchors,
        r.mean_r2.unwrap_or(f64::NAN),
        r.std_r2.unwrap_or(f64::NAN),
        r.degenerate
    );
    Ok(())
}
