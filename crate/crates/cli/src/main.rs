use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use allknn::io::{read_points, write_graph, write_points, CounterReport};
use allknn::scaling::{fit_ladder, run_ladder, Ladder};
use allknn::{
    all_knn_with, brute_all_knn_parallel, build_rst, generate, Distribution, EngineReport, Error,
    KnnGraph, KnnOptions, PointSet, QualityBound,
};
use clap::{Parser, Subcommand, ValueEnum};

const EXIT_USAGE: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_MISMATCH: u8 = 3;
const EXIT_INVARIANT: u8 = 4;

#[derive(Parser)]
#[command(
    name = "allknn",
    version,
    about = "Exact all-k-nearest-neighbor graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic point file.
    Gen(GenArgs),
    /// Build the kNN graph of a point file.
    Build(BuildArgs),
    /// Time the engine over a ladder of sizes and fit its growth.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Uniform,
    Gaussian,
    Clustered,
}

impl DistArg {
    fn with_clusters(self, clusters: usize) -> Distribution {
        match self {
            DistArg::Uniform => Distribution::Uniform,
            DistArg::Gaussian => Distribution::Gaussian,
            DistArg::Clustered => Distribution::Clustered { clusters },
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    Rst,
    Brute,
}

#[derive(Clone, Copy, ValueEnum)]
enum QualityArg {
    Certified,
    Compact,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(short, long)]
    n: usize,
    #[arg(short, long)]
    d: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    distribution: DistArg,
    #[arg(long, default_value_t = 10)]
    cluster_count: usize,
    #[arg(long, env = "KNN_SEED", default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BuildArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    k: usize,
    #[arg(long, value_enum, default_value = "rst")]
    algo: Algo,
    /// Graph file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Compare against the brute-force graph.
    #[arg(long)]
    verify: bool,
    /// Write a JSON counter report here.
    #[arg(long)]
    counters: Option<PathBuf>,
    /// Check the engine invariants every S pops; 0 disables.
    #[arg(long, value_name = "S", default_value_t = 0)]
    assert_every: usize,
    /// Print the split tree to stderr.
    #[arg(long)]
    dump_tree: bool,
    #[arg(long, value_enum, default_value = "certified")]
    quality: QualityArg,
    /// Recorded in the counter report.
    #[arg(long, env = "KNN_SEED")]
    seed: Option<u64>,
}

#[derive(clap::Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1000, 2000, 4000, 8000, 16000])]
    n_list: Vec<usize>,
    #[arg(short, long, default_value_t = 2)]
    d: usize,
    #[arg(short, long, default_value_t = 5)]
    k: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    distribution: DistArg,
    #[arg(long, default_value_t = 10)]
    cluster_count: usize,
    #[arg(long, env = "KNN_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Skip the quadratic baseline.
    #[arg(long)]
    no_brute: bool,
    /// Emit JSON instead of a table.
    #[arg(long)]
    json: bool,
}

enum Failure {
    Lib(Error),
    Mismatch,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Lib(Error::Io(e))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Build(args) => cmd_build(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch) => ExitCode::from(EXIT_MISMATCH),
        Err(Failure::Lib(e)) => {
            eprintln!("allknn: {e}");
            ExitCode::from(match e {
                Error::Usage(_) => EXIT_USAGE,
                Error::Io(_) | Error::Parse { .. } => EXIT_IO,
                Error::Invariant(_) => EXIT_INVARIANT,
            })
        }
    }
}

fn with_output(
    path: Option<&Path>,
    f: impl FnOnce(&mut dyn Write) -> allknn::Result<()>,
) -> allknn::Result<()> {
    match path {
        Some(p) => f(&mut BufWriter::new(File::create(p)?)),
        None => f(&mut io::stdout().lock()),
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    let points = generate(
        args.n,
        args.d,
        args.distribution.with_clusters(args.cluster_count),
        args.seed,
    )?;
    with_output(args.output.as_deref(), |w| write_points(w, &points))?;
    Ok(())
}

fn load(path: &Path) -> allknn::Result<PointSet> {
    read_points(BufReader::new(File::open(path)?))
}

fn cmd_build(args: BuildArgs) -> Result<(), Failure> {
    let points = load(&args.input)?;
    if args.dump_tree {
        let mut tree = build_rst(&points)?;
        allknn::annotate(&mut tree, &points)?;
        eprint!("{}", tree.dump());
    }

    let start = Instant::now();
    let (graph, report) = match args.algo {
        Algo::Rst => {
            let opts = KnnOptions {
                assert_every: args.assert_every,
                quality: match args.quality {
                    QualityArg::Certified => QualityBound::Certified,
                    QualityArg::Compact => QualityBound::Compact,
                },
            };
            all_knn_with(&points, args.k, &opts)?
        }
        Algo::Brute => {
            let (g, evals) =
                allknn::instrument::count_distances(|| allknn::brute_all_knn(&points, args.k));
            let report = EngineReport {
                distance_evals: evals,
                ..EngineReport::default()
            };
            (g?, report)
        }
    };
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;

    with_output(args.output.as_deref(), |w| write_graph(w, &graph))?;

    if let Some(path) = &args.counters {
        let algo = match args.algo {
            Algo::Rst => "rst",
            Algo::Brute => "brute",
        };
        let counters = CounterReport::new(&points, args.k, algo, args.seed, &report, wall_ms);
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &counters).map_err(io::Error::from)?;
        writeln!(w)?;
        w.flush()?;
    }

    if args.verify {
        // keep stdout clean when the graph itself goes there
        let mut msg: Box<dyn Write> = match args.output {
            Some(_) => Box::new(io::stdout()),
            None => Box::new(io::stderr()),
        };
        verify(&points, &graph, &mut msg)?;
    }
    Ok(())
}

fn verify(points: &PointSet, graph: &KnnGraph, msg: &mut dyn Write) -> Result<(), Failure> {
    let oracle = brute_all_knn_parallel(points, graph.k())?;
    match graph.first_difference(&oracle) {
        None => {
            writeln!(msg, "IDENTICAL")?;
            Ok(())
        }
        Some(p) => {
            writeln!(msg, "DIFFERENT at point {p}")?;
            Err(Failure::Mismatch)
        }
    }
}

fn fmt_exponent(b: Option<f64>) -> String {
    b.map_or_else(|| "n/a".to_string(), |b| format!("{b:.4}"))
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let ladder = Ladder {
        n_list: args.n_list,
        d: args.d,
        k: args.k,
        distribution: args.distribution.with_clusters(args.cluster_count),
        seed: args.seed,
        repeats: args.repeats,
        brute: !args.no_brute,
    };
    let rows = run_ladder(&ladder)?;
    let fit = fit_ladder(&rows);
    let mut out = io::stdout().lock();
    if args.json {
        let doc = serde_json::json!({ "rows": rows, "fit": fit });
        writeln!(out, "{doc:#}")?;
        return Ok(());
    }
    writeln!(
        out,
        "# d={} k={} distribution={} seed={} repeats={}",
        ladder.d, ladder.k, ladder.distribution, ladder.seed, ladder.repeats
    )?;
    writeln!(
        out,
        "{:>8} {:>12} {:>12} {:>14} {:>12} {:>8} {:>14} {:>12}",
        "n", "min_ms", "median_ms", "dist_evals", "split_work", "pops", "brute_evals", "brute_ms"
    )?;
    for r in &rows {
        writeln!(
            out,
            "{:>8} {:>12.3} {:>12.3} {:>14} {:>12} {:>8} {:>14} {:>12}",
            r.n,
            r.wall_ms_min,
            r.wall_ms_median,
            r.distance_evals,
            r.split_work,
            r.pops,
            r.brute_evals.map_or("-".into(), |b| b.to_string()),
            r.brute_ms.map_or("-".into(), |b| format!("{b:.3}")),
        )?;
    }
    writeln!(
        out,
        "exponent dist_evals ~ (n log n)^b: b = {}",
        fmt_exponent(fit.evals_vs_nlogn)
    )?;
    writeln!(
        out,
        "exponent split_work ~ (n log n)^b: b = {}",
        fmt_exponent(fit.split_vs_nlogn)
    )?;
    writeln!(
        out,
        "exponent brute_evals ~ (n^2)^b:    b = {}",
        fmt_exponent(fit.brute_vs_n2)
    )?;
    Ok(())
}
