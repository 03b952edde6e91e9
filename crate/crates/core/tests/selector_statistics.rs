use favor::bench::groundtruth::{compute_ground_truth, recall_at_k};
use favor::bench::synth::{synthesize_attributes, synthetic_dataset, uniform_vectors};
use favor::filter::exact_selectivity;
use favor::selector::{answer, draw_sample, estimate_with_sample, theoretical_relative_error};
use favor::{AttributeTable, BuildParams, Filter, HnswIndex, Route, SearchParams, SelectorConfig};

/// `float0 in [0, v]` matching exactly `count` records.
fn float_prefix(table: &AttributeTable, count: usize) -> Filter {
    let mut vals: Vec<f32> = (0..table.len()).map(|i| table.record(i).floats[0]).collect();
    vals.sort_by(f32::total_cmp);
    assert!(vals[count - 1] < vals[count]);
    Filter::FloatRange {
        attr: 0,
        low: 0.0,
        high: f64::from(vals[count - 1]),
    }
}

#[test]
fn estimator_is_unbiased_and_matches_theoretical_error() {
    let n_total = 100_000;
    let table = synthesize_attributes(n_total, 1, 1, 1, 77);
    let seeds = 10_000u64;
    for p in [0.05, 0.1, 0.5] {
        let f = float_prefix(&table, (p * n_total as f64) as usize);
        assert_eq!(exact_selectivity(&f, &table).unwrap(), p);
        let ratios: Vec<f64> = (0..seeds)
            .map(|s| {
                let cfg = SelectorConfig::default().with_seed(s);
                estimate_with_sample(&f, &table, &draw_sample(n_total, &cfg, 0)).unwrap() / p
            })
            .collect();
        let m = seeds as f64;
        let mean = ratios.iter().sum::<f64>() / m;
        let sd = (ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt();
        let theory = theoretical_relative_error(p, 1000, n_total).unwrap();
        assert!(((sd - theory) / theory).abs() <= 0.10, "p = {p}: {sd} vs {theory}");
        assert!((mean - 1.0).abs() <= 3.0 * theory / m.sqrt(), "p = {p}: mean {mean}");
    }
}

#[test]
fn rare_filters_go_to_brute_force_with_full_recall() {
    let ds = synthetic_dataset(20_000, 8, 1, 1, 1, 5);
    let rare = float_prefix(ds.attributes(), 20);
    let index = HnswIndex::build(ds, BuildParams::new(8, 40)).unwrap();
    let queries = uniform_vectors(50, 8, 6);
    let gt = compute_ground_truth(index.dataset(), &queries, &rare, 10).unwrap();
    let sp = SearchParams::new(50, 10);
    let seeds = 1000;
    let mut brute = 0;
    for s in 0..seeds {
        let qi = s as usize % queries.len();
        let out = answer(&index, queries.vector(qi), &rare, &sp, &SelectorConfig::default().with_seed(s)).unwrap();
        if out.route == Route::BruteForce {
            brute += 1;
            assert_eq!(recall_at_k(&out.hits, &gt.ids(qi), 10), 1.0);
        }
    }
    assert!(brute * 100 >= seeds * 99, "{brute}/{seeds}");
}
