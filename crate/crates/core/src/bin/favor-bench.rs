//! Benchmark CLI. Index files hold only the graph, so every command that
//! searches also takes the vector and attribute files the index was built on.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use favor::bench::ablation::ablation_exclusion;
use favor::bench::groundtruth::{compute_ground_truth, recall_at_k, GroundTruth};
use favor::bench::io::{self, VectorFormat};
use favor::bench::linear::verify_linear_model;
use favor::bench::sweep::{index_checksum, parse_filter_list, run_sweep, write_csv_file, Method, SweepSpec};
use favor::bench::synth::{synthesize_attributes, uniform_vectors};
use favor::search::{favor_search, rsf_search};
use favor::selector::{answer_with_estimate, brute_force_search, estimate_selectivity, theoretical_relative_error};
use favor::{parse_filter, BuildParams, Error, HnswIndex, Result, SearchParams, SelectorConfig, VectorDataset};

#[derive(Parser)]
#[command(name = "favor-bench", version, about = "Filtered ANN search benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an index over a vector file and its attribute file.
    Build {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 32)]
        m: usize,
        #[arg(long, default_value_t = 40)]
        efc: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic attribute file.
    SynthAttrs {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        bools: usize,
        #[arg(long, default_value_t = 2)]
        ints: usize,
        #[arg(long, default_value_t = 1)]
        floats: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write uniform random vectors in [0, 1).
    SynthVectors {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value = "fvecs")]
        format: VectorFormat,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exact filtered ground truth, written as ivecs.
    Gt {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        queries: QueryArgs,
        #[arg(long)]
        filter: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one filtered query batch and write per-query rows.
    Search(SearchArgs),
    /// Recall/QPS sweep over ef values, filters and methods.
    Sweep {
        #[command(flatten)]
        index: IndexArgs,
        #[command(flatten)]
        queries: QueryArgs,
        /// File of `name: expression` lines.
        #[arg(long)]
        filters: PathBuf,
        /// Comma-separated, ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        ef: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, value_delimiter = ',', default_value = "favor,rsf,brute_force,hnsw_unfiltered")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        #[arg(long, default_value_t = 10)]
        warmup: usize,
        #[command(flatten)]
        tuning: TuningArgs,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Compare exclusion-distance strategies: zero, formula and per-query maximum.
    AblateD {
        #[command(flatten)]
        index: IndexArgs,
        #[command(flatten)]
        queries: QueryArgs,
        #[arg(long)]
        filter: String,
        #[arg(long, value_delimiter = ',', default_value = "100")]
        ef: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[command(flatten)]
        tuning: TuningArgs,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Fit d_m against m for sampled anchors and report R^2.
    VerifyLinear {
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long, default_value = "fvecs")]
        format: VectorFormat,
        #[arg(long, default_value_t = 100)]
        anchors: usize,
        #[arg(long, default_value_t = 200)]
        m_max: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    vectors: PathBuf,
    #[arg(long, default_value = "fvecs")]
    format: VectorFormat,
    #[arg(long)]
    attrs: PathBuf,
}

impl DataArgs {
    fn load(&self) -> Result<VectorDataset> {
        io::load_dataset(&self.vectors, self.format, &self.attrs)
    }
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    index: PathBuf,
    #[command(flatten)]
    data: DataArgs,
}

impl IndexArgs {
    fn load(&self) -> Result<HnswIndex> {
        HnswIndex::load(&self.index, self.data.load()?)
    }
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value = "fvecs")]
    query_format: VectorFormat,
}

impl QueryArgs {
    fn load(&self) -> Result<VectorDataset> {
        io::read_vectors(&self.queries, self.query_format)
    }
}

#[derive(Args)]
struct TuningArgs {
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    td_fraction: f64,
    #[arg(long)]
    no_term_opt: bool,
    #[arg(long)]
    no_ef_norm: bool,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, default_value_t = 0.01)]
    sample_frac: f64,
    #[arg(long, default_value_t = 42)]
    sample_seed: u64,
    /// Leave selectivity estimation out of the timed region.
    #[arg(long)]
    exclude_estimation: bool,
}

impl TuningArgs {
    fn search(&self, ef: usize, k: usize) -> SearchParams {
        SearchParams::new(ef, k)
            .with_gamma(self.gamma)
            .with_td_fraction(self.td_fraction)
            .with_termination_opt(!self.no_term_opt)
            .with_normalize_by_ef(!self.no_ef_norm)
    }

    fn selector(&self) -> SelectorConfig {
        SelectorConfig {
            lambda_threshold: self.lambda,
            sample_fraction: self.sample_frac,
            ..SelectorConfig::default()
        }
        .with_seed(self.sample_seed)
    }
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    index: IndexArgs,
    #[command(flatten)]
    queries: QueryArgs,
    #[arg(long)]
    filter: String,
    #[arg(long, default_value_t = 100)]
    ef: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// favor forces graph search; auto routes on the estimate.
    #[arg(long, default_value = "auto", value_parser = ["favor", "rsf", "brute", "auto"])]
    method: String,
    #[command(flatten)]
    tuning: TuningArgs,
    /// Ground truth (ivecs) to score recall against.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Serialize)]
struct SearchRow {
    query: usize,
    method: String,
    route: &'static str,
    p_hat: Option<f64>,
    exclusion: Option<f64>,
    recall: Option<f64>,
    distance_computations: u64,
    hops: u64,
    micros: f64,
    hits: String,
}

fn search(args: &SearchArgs) -> Result<()> {
    let index = args.index.load()?;
    let queries = args.queries.load()?;
    let filter = parse_filter(&args.filter)?;
    let sp = args.tuning.search(args.ef, args.k);
    sp.validate()?;
    let cfg = args.tuning.selector();
    cfg.validate()?;
    let truth = args.gt.as_ref().map(GroundTruth::load).transpose()?;
    if let Some(gt) = &truth {
        if gt.entries.len() != queries.len() {
            return Err(Error::Usage(format!(
                "ground truth has {} entries for {} queries",
                gt.entries.len(),
                queries.len()
            )));
        }
    }

    let est_start = Instant::now();
    let p_hat = estimate_selectivity(&filter, index.dataset(), &cfg)?;
    let est_secs = est_start.elapsed().as_secs_f64();
    let mut rows = Vec::with_capacity(queries.len());
    let start = Instant::now();
    for (qi, q) in queries.vectors().enumerate() {
        let t = Instant::now();
        let out = match args.method.as_str() {
            "favor" => favor_search(&index, q, &filter, p_hat, &sp)?,
            "rsf" => rsf_search(&index, q, &filter, &sp)?,
            "brute" => brute_force_search(index.dataset(), q, &filter, args.k)?,
            _ => answer_with_estimate(&index, q, &filter, p_hat, &sp, &cfg)?,
        };
        rows.push(SearchRow {
            query: qi,
            method: args.method.clone(),
            route: out.route.as_str(),
            p_hat: out.p_hat,
            exclusion: out.exclusion,
            recall: truth.as_ref().map(|gt| recall_at_k(&out.hits, &gt.ids(qi), args.k)),
            distance_computations: out.stats.distance_computations,
            hops: out.stats.hops,
            micros: t.elapsed().as_secs_f64() * 1e6,
            hits: out.ids().iter().map(u32::to_string).collect::<Vec<_>>().join(" "),
        });
    }
    let mut secs = start.elapsed().as_secs_f64();
    if !args.tuning.exclude_estimation && matches!(args.method.as_str(), "favor" | "auto") {
        secs += est_secs;
    }
    write_csv_file(&rows, &args.csv)?;

    let n = rows.len().max(1) as f64;
    println!("queries {}  p_hat {p_hat:.5}  qps {:.1}", rows.len(), rows.len() as f64 / secs.max(1e-9));
    println!(
        "estimator relative error (theory) {:.4}",
        theoretical_relative_error(p_hat.max(f64::MIN_POSITIVE), cfg.sample_size(index.len()), index.len())?
    );
    if truth.is_some() {
        let recall: f64 = rows.iter().filter_map(|r| r.recall).sum::<f64>() / n;
        println!("recall@{} {recall:.4}", args.k);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build { data, m, efc, seed, out } => {
            let ds = data.load()?;
            let start = Instant::now();
            let index = HnswIndex::build(ds, BuildParams::new(m, efc).with_seed(seed))?;
            index.save(&out)?;
            println!(
                "built {} nodes in {:.1}s, top layer {}, delta_d {:.6}, crc {}",
                index.len(),
                start.elapsed().as_secs_f64(),
                index.top_layer(),
                index.delta_d(),
                index_checksum(&index)
            );
        }
        Command::SynthAttrs { count, bools, ints, floats, seed, out } => {
            io::write_attributes(&out, &synthesize_attributes(count, bools, ints, floats, seed))?;
        }
        Command::SynthVectors { count, dim, seed, format, out } => {
            if dim == 0 {
                return Err(Error::Usage("dim must be positive".into()));
            }
            io::write_vectors(&out, &uniform_vectors(count, dim, seed), format)?;
        }
        Command::Gt { data, queries, filter, k, out } => {
            let ds = data.load()?;
            let gt = compute_ground_truth(&ds, &queries.load()?, &parse_filter(&filter)?, k)?;
            gt.save(&out)?;
            let empty = gt.empty_entries();
            if empty > 0 {
                eprintln!("warning: {empty} queries have no matching records (empty ground truth)");
            }
        }
        Command::Search(args) => search(&args)?,
        Command::Sweep { index, queries, filters, ef, k, methods, repetitions, warmup, tuning, csv } => {
            let index = index.load()?;
            let queries = queries.load()?;
            let mut spec = SweepSpec::new(ef, k, parse_filter_list(&std::fs::read_to_string(filters)?)?);
            spec.methods = methods;
            spec.repetitions = repetitions;
            spec.warmup_queries = warmup;
            spec.search = tuning.search(spec.ef_values.first().copied().unwrap_or(k), k);
            spec.selector = tuning.selector();
            spec.time_estimation = !tuning.exclude_estimation;
            spec.validate()?;
            let truths = spec
                .filters
                .iter()
                .map(|(_, f)| compute_ground_truth(index.dataset(), &queries, f, k))
                .collect::<Result<Vec<_>>>()?;
            let rows = run_sweep(&index, &queries, &spec, &truths)?;
            write_csv_file(&rows, &csv)?;
            println!("index crc {}; wrote {} rows", index_checksum(&index), rows.len());
        }
        Command::AblateD { index, queries, filter, ef, k, tuning, csv } => {
            let index = index.load()?;
            let queries = queries.load()?;
            let filter = parse_filter(&filter)?;
            let gt = compute_ground_truth(index.dataset(), &queries, &filter, k)?;
            let mut rows = Vec::new();
            for e in ef {
                rows.extend(ablation_exclusion(&index, &queries, &filter, &gt, &tuning.search(e, k), &tuning.selector())?);
            }
            write_csv_file(&rows, &csv)?;
        }
        Command::VerifyLinear { vectors, format, anchors, m_max, seed } => {
            let ds = io::read_vectors(&vectors, format)?;
            let r = verify_linear_model(&ds, anchors, m_max, seed)?;
            match (r.mean_r2, r.std_r2) {
                (Some(mean), Some(std)) => println!(
                    "anchors {}  m_max {}  mean_r2 {mean:.4}  std_r2 {std:.4}  degenerate {}",
                    r.anchors, r.m_max, r.degenerate
                ),
                _ => println!("anchors {}  all fits degenerate (zero variance)", r.anchors),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
