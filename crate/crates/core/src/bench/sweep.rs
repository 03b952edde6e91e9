//! Recall/QPS sweeps over beam widths, filters and search methods.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::bench::groundtruth::{recall_at_k, GroundTruth};
use crate::error::{Error, Result};
use crate::filter::{exact_selectivity, parse_filter, Filter};
use crate::graph::HnswIndex;
use crate::search::{hnsw_search, rsf_search, QueryOutcome, Route, SearchParams};
use crate::selector::{answer_with_estimate, brute_force_search, estimate_selectivity, SelectorConfig};
use crate::vector::VectorDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Estimate, route, then exclusion-distance search or brute force.
    Favor,
    Rsf,
    BruteForce,
    /// Unfiltered search; its hits are scored against the filtered truth.
    HnswUnfiltered,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Favor, Method::Rsf, Method::BruteForce, Method::HnswUnfiltered];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Favor => "favor",
            Method::Rsf => "rsf",
            Method::BruteForce => "brute_force",
            Method::HnswUnfiltered => "hnsw_unfiltered",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "favor" => Ok(Method::Favor),
            "rsf" => Ok(Method::Rsf),
            "brute" | "brute_force" => Ok(Method::BruteForce),
            "hnsw" | "hnsw_unfiltered" => Ok(Method::HnswUnfiltered),
            other => Err(Error::Usage(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub ef_values: Vec<usize>,
    pub k: usize,
    pub filters: Vec<(String, Filter)>,
    /// Timed passes per (filter, ef, method); the fastest pass is reported.
    pub repetitions: usize,
    pub warmup_queries: usize,
    pub methods: Vec<Method>,
    /// Carries gamma, td_fraction and the two switches; `ef` and `k` are overwritten.
    pub search: SearchParams,
    pub selector: SelectorConfig,
    /// Count selectivity estimation inside the favor timing.
    pub time_estimation: bool,
}

impl SweepSpec {
    pub fn new(ef_values: Vec<usize>, k: usize, filters: Vec<(String, Filter)>) -> Self {
        Self {
            ef_values,
            k,
            filters,
            repetitions: 1,
            warmup_queries: 10,
            methods: Method::ALL.to_vec(),
            search: SearchParams::default(),
            selector: SelectorConfig::default(),
            time_estimation: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ef_values.is_empty() {
            return Err(Error::Usage("no ef values given".into()));
        }
        if self.ef_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Usage("ef values must be strictly ascending".into()));
        }
        if self.k == 0 || self.k > self.ef_values[0] {
            return Err(Error::Usage(format!(
                "k = {} must lie in [1, min ef = {}]",
                self.k, self.ef_values[0]
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::Usage("repetitions must be positive".into()));
        }
        let mut names = HashSet::new();
        for (name, _) in &self.filters {
            if !names.insert(name.as_str()) {
                return Err(Error::Usage(format!("duplicate filter name `{name}`")));
            }
        }
        self.selector.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub filter: String,
    pub method: String,
    pub ef: usize,
    pub k: usize,
    pub selectivity: f64,
    pub p_hat: Option<f64>,
    pub exclusion: Option<f64>,
    pub recall: f64,
    pub qps: f64,
    pub mean_distance_computations: f64,
    pub mean_hops: f64,
    pub td_path_fraction: f64,
    pub graph_routes: usize,
    pub brute_routes: usize,
    pub shortfall_queries: usize,
    pub index_crc: String,
}

/// Aggregate of one method over one query batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub recall: f64,
    pub qps: f64,
    pub mean_distance_computations: f64,
    pub mean_hops: f64,
    /// Mean over queries of the share of base-layer hops landing on target nodes.
    pub td_path_fraction: f64,
    pub graph_routes: usize,
    pub brute_routes: usize,
    pub shortfall_queries: usize,
    pub p_hat: Option<f64>,
    pub exclusion: Option<f64>,
}

/// Everything a batch needs besides the method.
pub struct BatchContext<'a> {
    pub index: &'a HnswIndex,
    pub queries: &'a VectorDataset,
    pub filter: &'a Filter,
    pub truth: &'a GroundTruth,
    pub search: &'a SearchParams,
    pub selector: &'a SelectorConfig,
    pub repetitions: usize,
    pub warmup_queries: usize,
    pub time_estimation: bool,
}

fn run_one(
    ctx: &BatchContext<'_>,
    method: Method,
    q: &[f32],
    p_hat: Option<f64>,
) -> Result<QueryOutcome> {
    match method {
        Method::Favor => answer_with_estimate(
            ctx.index,
            q,
            ctx.filter,
            p_hat.expect("favor batches carry an estimate"),
            ctx.search,
            ctx.selector,
        ),
        Method::Rsf => rsf_search(ctx.index, q, ctx.filter, ctx.search),
        Method::BruteForce => brute_force_search(ctx.index.dataset(), q, ctx.filter, ctx.search.k),
        Method::HnswUnfiltered => hnsw_search(ctx.index, q, ctx.search),
    }
}

/// Run every query once per repetition and aggregate. The estimate for favor
/// is computed once per pass, inside the timer unless `time_estimation` is off.
pub fn run_batch(ctx: &BatchContext<'_>, method: Method) -> Result<BatchResult> {
    let nq = ctx.queries.len();
    if ctx.truth.entries.len() != nq {
        return Err(Error::Usage(format!(
            "ground truth holds {} entries for {nq} queries",
            ctx.truth.entries.len()
        )));
    }
    if nq == 0 {
        return Err(Error::Usage("empty query set".into()));
    }
    let estimate = || -> Result<Option<f64>> {
        match method {
            Method::Favor => Ok(Some(estimate_selectivity(ctx.filter, ctx.index.dataset(), ctx.selector)?)),
            _ => Ok(None),
        }
    };

    let warm = estimate()?;
    for q in ctx.queries.vectors().take(ctx.warmup_queries) {
        run_one(ctx, method, q, warm)?;
    }

    let mut best = f64::INFINITY;
    let mut outcomes = Vec::with_capacity(nq);
    let mut p_hat = warm;
    for _ in 0..ctx.repetitions {
        outcomes.clear();
        let start = Instant::now();
        p_hat = if ctx.time_estimation { estimate()? } else { warm };
        for q in ctx.queries.vectors() {
            outcomes.push(run_one(ctx, method, q, p_hat)?);
        }
        best = best.min(start.elapsed().as_secs_f64());
    }

    let n = nq as f64;
    let mut agg = BatchResult {
        recall: 0.0,
        qps: n / best.max(1e-9),
        mean_distance_computations: 0.0,
        mean_hops: 0.0,
        td_path_fraction: 0.0,
        graph_routes: 0,
        brute_routes: 0,
        shortfall_queries: 0,
        p_hat,
        exclusion: None,
    };
    for (qi, out) in outcomes.iter().enumerate() {
        agg.recall += recall_at_k(&out.hits, &ctx.truth.ids(qi), ctx.search.k);
        agg.mean_distance_computations += out.stats.distance_computations as f64;
        agg.mean_hops += out.stats.hops as f64;
        agg.td_path_fraction += out.stats.td_path_fraction();
        match out.route {
            Route::Graph => agg.graph_routes += 1,
            Route::BruteForce => agg.brute_routes += 1,
        }
        agg.shortfall_queries += usize::from(out.shortfall > 0);
        if out.exclusion.is_some() {
            agg.exclusion = out.exclusion;
        }
    }
    agg.recall /= n;
    agg.mean_distance_computations /= n;
    agg.mean_hops /= n;
    agg.td_path_fraction /= n;
    Ok(agg)
}

/// CRC32 of the serialized index, used to tie rows to one index file.
pub fn index_checksum(index: &HnswIndex) -> String {
    format!("{:08x}", crc32fast::hash(&index.to_bytes()))
}

/// One row per (filter, ef, method). `truths[i]` belongs to `spec.filters[i]`.
pub fn run_sweep(
    index: &HnswIndex,
    queries: &VectorDataset,
    spec: &SweepSpec,
    truths: &[GroundTruth],
) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    if truths.len() != spec.filters.len() {
        return Err(Error::Usage(format!(
            "missing ground truth: {} filters, {} ground-truth sets",
            spec.filters.len(),
            truths.len()
        )));
    }
    let crc = index_checksum(index);
    let mut rows = Vec::new();
    for ((name, filter), truth) in spec.filters.iter().zip(truths) {
        let selectivity = exact_selectivity(filter, index.dataset().attributes())?;
        for &ef in &spec.ef_values {
            let mut sp = spec.search.clone();
            sp.ef = ef;
            sp.k = spec.k;
            let ctx = BatchContext {
                index,
                queries,
                filter,
                truth,
                search: &sp,
                selector: &spec.selector,
                repetitions: spec.repetitions,
                warmup_queries: spec.warmup_queries,
                time_estimation: spec.time_estimation,
            };
            for &method in &spec.methods {
                let b = run_batch(&ctx, method)?;
                rows.push(SweepRow {
                    filter: name.clone(),
                    method: method.to_string(),
                    ef,
                    k: spec.k,
                    selectivity,
                    p_hat: b.p_hat,
                    exclusion: b.exclusion,
                    recall: b.recall,
                    qps: b.qps,
                    mean_distance_computations: b.mean_distance_computations,
                    mean_hops: b.mean_hops,
                    td_path_fraction: b.td_path_fraction,
                    graph_routes: b.graph_routes,
                    brute_routes: b.brute_routes,
                    shortfall_queries: b.shortfall_queries,
                    index_crc: crc.clone(),
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_csv<T: Serialize>(rows: &[T], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<()> {
    write_csv(rows, std::fs::File::create(path)?)
}

/// Parse a filter list: one `name: expression` per line, `#` comments and
/// blank lines ignored.
pub fn parse_filter_list(text: &str) -> Result<Vec<(String, Filter)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, expr) = line.split_once(':').ok_or_else(|| {
            Error::Usage(format!("line {}: expected `name: expression`", lineno + 1))
        })?;
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::Usage(format!("line {}: empty filter name", lineno + 1)));
        }
        out.push((name.to_string(), parse_filter(expr)?));
    }
    if out.is_empty() {
        return Err(Error::Usage("filter list is empty".into()));
    }
    Ok(out)
}

/// Recall and QPS of one method along an ef sweep, for interpolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub recall: f64,
    pub qps: f64,
}

/// QPS at `recall` by linear interpolation between the two bracketing sweep
/// points. Dominated points are dropped first so that noisy, non-monotone
/// recall does not produce a bogus bracket. `None` when the target lies
/// outside the measured recall range.
pub fn qps_at_recall(curve: &[CurvePoint], recall: f64) -> Option<f64> {
    let mut pts: Vec<CurvePoint> = curve.to_vec();
    pts.sort_by(|a, b| a.recall.total_cmp(&b.recall));
    // Drop points beaten on QPS by some point with at least their recall.
    let mut envelope: Vec<CurvePoint> = Vec::with_capacity(pts.len());
    let mut best = f64::NEG_INFINITY;
    for p in pts.iter().rev() {
        if p.qps > best {
            best = p.qps;
            envelope.push(*p);
        }
    }
    envelope.reverse();
    let first = envelope.first()?;
    let last = envelope.last()?;
    if recall > last.recall || recall < pts[0].recall {
        return None;
    }
    if recall <= first.recall {
        return Some(first.qps);
    }
    for w in envelope.windows(2) {
        let (a, b) = (w[0], w[1]);
        if recall >= a.recall && recall <= b.recall {
            if b.recall == a.recall {
                return Some(a.qps.max(b.qps));
            }
            let t = (recall - a.recall) / (b.recall - a.recall);
            return Some(a.qps + t * (b.qps - a.qps));
        }
    }
    Some(last.qps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::groundtruth::compute_ground_truth;
    use crate::bench::synth::{synthetic_dataset, uniform_vectors};
    use crate::graph::BuildParams;

    fn setup() -> (HnswIndex, VectorDataset) {
        let ds = synthetic_dataset(3000, 12, 1, 1, 1, 5);
        let index = HnswIndex::build(ds, BuildParams::new(12, 60)).unwrap();
        (index, uniform_vectors(60, 12, 6))
    }

    fn truths(index: &HnswIndex, queries: &VectorDataset, spec: &SweepSpec) -> Vec<GroundTruth> {
        spec.filters
            .iter()
            .map(|(_, f)| compute_ground_truth(index.dataset(), queries, f, spec.k).unwrap())
            .collect()
    }

    #[test]
    fn unfiltered_favor_matches_plain_search() {
        let (index, queries) = setup();
        let spec = SweepSpec::new(vec![30], 10, vec![("all".into(), Filter::True)]);
        let rows = run_sweep(&index, &queries, &spec, &truths(&index, &queries, &spec)).unwrap();
        let get = |m: &str| rows.iter().find(|r| r.method == m).unwrap();
        let (favor, plain) = (get("favor"), get("hnsw_unfiltered"));
        assert_eq!(favor.recall, plain.recall);
        assert_eq!(favor.mean_distance_computations, plain.mean_distance_computations);
        assert_eq!(favor.exclusion, Some(0.0));
    }

    #[test]
    fn rows_are_sane_and_recall_grows_with_ef() {
        let (index, queries) = setup();
        let spec = SweepSpec::new(
            vec![10, 20, 40, 80, 160],
            10,
            vec![
                ("bool".into(), parse_filter("bool0 = true").unwrap()),
                ("int".into(), parse_filter("int0 = 3").unwrap()),
            ],
        );
        let rows = run_sweep(&index, &queries, &spec, &truths(&index, &queries, &spec)).unwrap();
        assert_eq!(rows.len(), 2 * 5 * 4);
        let crc = index_checksum(&index);
        for r in &rows {
            assert!((0.0..=1.0).contains(&r.recall));
            assert!(r.qps > 0.0);
            assert_eq!(r.index_crc, crc);
            if r.method == "brute_force" {
                assert_eq!(r.recall, 1.0);
            }
        }
        let mut pairs = 0;
        let mut ok = 0;
        for filter in ["bool", "int"] {
            for m in ["favor", "rsf"] {
                let rec: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.filter == filter && r.method == m)
                    .map(|r| r.recall)
                    .collect();
                for w in rec.windows(2) {
                    pairs += 1;
                    ok += usize::from(w[1] >= w[0]);
                }
            }
        }
        assert!(ok * 100 >= pairs * 95, "{ok}/{pairs}");
    }

    #[test]
    fn spec_validation() {
        let f = vec![("a".into(), Filter::True)];
        assert!(SweepSpec::new(vec![20, 10], 5, f.clone()).validate().is_err());
        assert!(SweepSpec::new(vec![5, 10], 6, f.clone()).validate().is_err());
        let dup = vec![("a".into(), Filter::True), ("a".into(), Filter::True)];
        assert!(SweepSpec::new(vec![10], 5, dup).validate().is_err());
    }

    #[test]
    fn missing_ground_truth() {
        let (index, queries) = setup();
        let spec = SweepSpec::new(vec![10], 5, vec![("a".into(), Filter::True)]);
        assert!(matches!(run_sweep(&index, &queries, &spec, &[]), Err(Error::Usage(_))));
    }

    #[test]
    fn filter_list_format() {
        let list = parse_filter_list("# comment\nbool: bool0 = true\n\nrange : float0 in [0, 50]\n").unwrap();
        assert_eq!(list.len(), 2);
        assert_eq!(list[1].0, "range");
        assert!(parse_filter_list("no colon here").is_err());
        assert!(parse_filter_list("x: int9 = 1 +").is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let (index, queries) = setup();
        let mut spec = SweepSpec::new(vec![10], 5, vec![("a".into(), Filter::True)]);
        spec.methods = vec![Method::Rsf];
        let rows = run_sweep(&index, &queries, &spec, &truths(&index, &queries, &spec)).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("filter,method,ef,k,selectivity"));
        assert_eq!(text.lines().count(), 2);
    }

    #[test]
    fn interpolation() {
        let c = [
            CurvePoint { recall: 0.8, qps: 1000.0 },
            CurvePoint { recall: 0.9, qps: 600.0 },
            CurvePoint { recall: 1.0, qps: 200.0 },
        ];
        let close = |a: Option<f64>, b: f64| (a.unwrap() - b).abs() < 1e-9;
        assert!(close(qps_at_recall(&c, 0.85), 800.0));
        assert!(close(qps_at_recall(&c, 0.9), 600.0));
        assert_eq!(qps_at_recall(&c, 0.7), None);
        // A dominated point is ignored.
        let c2 = [c[0], CurvePoint { recall: 0.85, qps: 100.0 }, c[1]];
        assert!(close(qps_at_recall(&c2, 0.85), 800.0));
    }
}
