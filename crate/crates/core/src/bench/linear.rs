//! Linear-model check: how well does the distance to the m-th nearest
//! neighbor follow a straight line in m?

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vector::{l2, VectorDataset};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModelReport {
    pub anchors: usize,
    pub m_max: usize,
    /// Mean R² over anchors with a non-degenerate fit; `None` if there are none.
    pub mean_r2: Option<f64>,
    pub std_r2: Option<f64>,
    /// Anchors whose neighbor distances have zero variance.
    pub degenerate: usize,
}

/// Coefficient of determination of an OLS fit `y = a + b*m`, `m = 1..=len`.
/// `None` when `y` has zero variance.
pub fn fit_r2(y: &[f64]) -> Option<f64> {
    let n = y.len() as f64;
    if y.len() < 2 {
        return None;
    }
    let mean_x = (n + 1.0) / 2.0;
    let mean_y = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, &v) in y.iter().enumerate() {
        let dx = (i + 1) as f64 - mean_x;
        let dy = v - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if syy == 0.0 {
        return None;
    }
    Some((sxy * sxy) / (sxx * syy))
}

/// Exact distances from `anchor` to its `m_max` nearest other points, ascending.
pub fn nearest_distances(ds: &VectorDataset, anchor: usize, m_max: usize) -> Vec<f32> {
    let a = ds.vector(anchor);
    let mut d: Vec<f32> = (0..ds.len())
        .filter(|&i| i != anchor)
        .map(|i| l2(a, ds.vector(i)))
        .collect();
    let m = m_max.min(d.len());
    if m < d.len() {
        d.select_nth_unstable_by(m, f32::total_cmp);
        d.truncate(m);
    }
    d.sort_unstable_by(f32::total_cmp);
    d
}

/// Regress `d_m` on `m = 1..=m_max` for anchors sampled without replacement.
pub fn verify_linear_model(
    ds: &VectorDataset,
    anchors: usize,
    m_max: usize,
    seed: u64,
) -> Result<LinearModelReport> {
    if m_max < 2 || m_max >= ds.len() {
        return Err(Error::Usage(format!(
            "m_max must lie in [2, count), got {m_max} with {} points",
            ds.len()
        )));
    }
    if anchors == 0 || anchors > ds.len() {
        return Err(Error::Usage(format!("invalid anchor count {anchors}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, ds.len(), anchors).into_vec();
    Ok(linear_report(ds, &picks, m_max))
}

/// Same as [`verify_linear_model`] for explicit anchor indices.
pub fn linear_report(ds: &VectorDataset, anchors: &[usize], m_max: usize) -> LinearModelReport {
    let mut r2s = Vec::with_capacity(anchors.len());
    let mut degenerate = 0;
    for &a in anchors {
        let y: Vec<f64> = nearest_distances(ds, a, m_max)
            .into_iter()
            .map(f64::from)
            .collect();
        match fit_r2(&y) {
            Some(r2) => r2s.push(r2),
            None => degenerate += 1,
        }
    }
    let (mean_r2, std_r2) = if r2s.is_empty() {
        (None, None)
    } else {
        let n = r2s.len() as f64;
        let mean = r2s.iter().sum::<f64>() / n;
        let var = r2s.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        (Some(mean), Some(var.sqrt()))
    };
    LinearModelReport {
        anchors: anchors.len(),
        m_max,
        mean_r2,
        std_r2,
        degenerate,
    }
}
