use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use clique_snl::eval::{emit_plots, grid_csv, rigidity_ablation, run_grid, ExperimentConfig, PipelineSettings};
use clique_snl::graph::{apply_noise, generate_rgg, load_graph};
use clique_snl::{localize_network, LocalizationReport, MeasurementGraph};

#[derive(Parser)]
#[command(name = "clique-snl", version, about = "Sensor network localization by clique registration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Localize one network, read from a file or generated at random.
    Solve(SolveArgs),
    /// Run a grid of random-graph experiments.
    Bench(BenchArgs),
    /// Compare runs with and without rigidity augmentation on a seed whose
    /// clique configuration is flexible.
    Ablation(AblationArgs),
}

#[derive(Args)]
struct PipelineFlags {
    #[arg(long, default_value_t = 0.01)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1e-8)]
    eps_abs: f64,
    #[arg(long, default_value_t = 1e-6)]
    eps_rel: f64,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    /// Skip rigidity augmentation.
    #[arg(long)]
    no_augment: bool,
    /// Test every pair of patches instead of pairs with the anchor patch.
    #[arg(long)]
    exhaustive_rigidity: bool,
}

impl PipelineFlags {
    fn settings(&self) -> PipelineSettings {
        PipelineSettings {
            rho: self.rho,
            lambda: self.lambda,
            eps_abs: self.eps_abs,
            eps_rel: self.eps_rel,
            max_iter: self.max_iter,
            augment: !self.no_augment,
            exhaustive_rigidity: self.exhaustive_rigidity,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Graph file in the `snl-graph v1` format.
    #[arg(long, conflicts_with = "rgg", required_unless_present = "rgg")]
    graph: Option<PathBuf>,
    /// Random geometric graph `N,K,r` (K counts corner anchors).
    #[arg(long, value_parser = parse_rgg)]
    rgg: Option<(usize, usize, f64)>,
    /// Multiplicative noise level; needs ground truth.
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Put anchors at the corners of the square.
    #[arg(long, requires = "rgg")]
    corner_anchors: bool,
    #[command(flatten)]
    pipeline: PipelineFlags,
    /// Estimated sensor positions as `id,x,y[,z]`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    dump_cliques: Option<PathBuf>,
    #[arg(long)]
    rigidity_report: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Directory for gnuplot `.dat` files.
    #[arg(long)]
    emit_plots: Option<PathBuf>,
}

#[derive(Args)]
struct AblationArgs {
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0.17)]
    r: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,0.01")]
    eta: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    seed_limit: u64,
    #[arg(long)]
    exhaustive_rigidity: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_rgg(s: &str) -> std::result::Result<(usize, usize, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [n, k, r] = parts[..] else {
        return Err(format!("expected N,K,r, got {s:?}"));
    };
    let n = n.parse().map_err(|_| format!("bad N {n:?}"))?;
    let k = k.parse().map_err(|_| format!("bad K {k:?}"))?;
    let r = r.parse().map_err(|_| format!("bad r {r:?}"))?;
    Ok((n, k, r))
}

fn load_input(args: &SolveArgs) -> Result<MeasurementGraph> {
    let g = match (&args.graph, args.rgg) {
        (Some(path), _) => load_graph(path).with_context(|| format!("reading {}", path.display()))?,
        (None, Some((n, k, r))) => generate_rgg(n, k, r, args.seed, args.corner_anchors)?,
        (None, None) => bail!("one of --graph or --rgg is required"),
    };
    Ok(apply_noise(&g, args.eta, args.seed)?)
}

fn positions_csv(report: &LocalizationReport) -> String {
    let mut out = String::new();
    for (i, p) in report.positions.iter().enumerate() {
        let coords: Vec<String> = p.iter().map(|x| format!("{x:.17e}")).collect();
        out.push_str(&format!("{},{}\n", i + 1, coords.join(",")));
    }
    out
}

fn cliques_dump(report: &LocalizationReport) -> String {
    let mut out = String::new();
    for (k, c) in report.cliques.iter().enumerate() {
        let ids: Vec<String> = c.members.iter().map(|v| (v + 1).to_string()).collect();
        out.push_str(&format!("clique {}: {}\n", k + 1, ids.join(" ")));
    }
    out
}

fn solve(args: SolveArgs) -> Result<()> {
    let g = load_input(&args)?;
    let report = localize_network(&g, &args.pipeline.settings().to_options())?;

    if let Some(path) = &args.out {
        fs::write(path, positions_csv(&report)).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.report {
        fs::write(path, serde_json::to_string_pretty(&report)?)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.dump_cliques {
        fs::write(path, cliques_dump(&report)).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &args.rigidity_report {
        fs::write(path, serde_json::to_string_pretty(&report.rigidity())?)
            .with_context(|| format!("writing {}", path.display()))?;
    }

    match report.ane {
        Some(a) => println!("ANE {a:.3e}"),
        None => println!("ANE n/a (no ground truth)"),
    }
    println!(
        "patches {}  admm iterations {}  t1 {:.3}s  t2 {:.3}s  t3 {:.3}s  rigidity {:?}",
        report.n_patches,
        report.admm_iters,
        report.t_partition_s,
        report.t_localize_s,
        report.t_register_s,
        report.status
    );
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let cfg = ExperimentConfig::load(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let rows = run_grid(&cfg)?;
    fs::write(&args.out, grid_csv(&rows)).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(dir) = &args.emit_plots {
        fs::create_dir_all(dir)?;
        for path in emit_plots(&rows, dir)? {
            println!("wrote {}", path.display());
        }
    }
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    println!("{} runs, {failed} failed", rows.len());
    Ok(())
}

fn ablation(args: AblationArgs) -> Result<()> {
    let settings = PipelineSettings {
        exhaustive_rigidity: args.exhaustive_rigidity,
        ..PipelineSettings::default()
    };
    let report = rigidity_ablation(args.n, args.k, args.r, &args.eta, args.seed_limit, &settings.to_options())?;
    let json = serde_json::to_string_pretty(&report)?;
    match &args.out {
        Some(path) => fs::write(path, &json).with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Bench(a) => bench(a),
        Command::Ablation(a) => ablation(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
