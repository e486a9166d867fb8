//! Command-line driver tying the mapping pipeline into reproducible
//! experiments: reorder, train, evaluate, compare against baselines and the
//! exhaustive oracle, verify the block-wise product, and export renders or
//! tile manifests.
//!
//! Exit codes: 0 success, 1 verification above tolerance, 2 operational
//! error, 3 infeasible result (no complete-coverage scheme).

use clap::{Args, Parser, Subcommand};
use crossmap_core::baselines::{brute_force_best, vanilla_fill_scheme, vanilla_scheme};
use crossmap_core::evaluator::{evaluate, EvalResult};
use crossmap_core::matrix::{parse_matrix_market, write_matrix_market, PrefixIndex, SparseMatrix};
use crossmap_core::render::render_svg;
use crossmap_core::reorder::{bandwidth, permute_matrix, rcm_order};
use crossmap_core::scheme::{MappingScheme, SchemeFile};
use crossmap_core::sim::{
    blockwise_spmv, dense_spmv, first_uncovered, max_relative_error, tile_manifest,
};
use crossmap_core::trainer::{curves_csv, train_with_observer, Optimizer, TrainConfig};
use rand::Rng as _;
use rand::SeedableRng as _;
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const VERIFY_TOLERANCE: f64 = 1e-10;

const EXIT_VERIFY_FAILED: u8 = 1;
const EXIT_ERROR: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "crossmap",
    about = "Learned block mapping of sparse matrices onto crossbar tiles",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reorder a symmetric matrix with (Reverse) Cuthill-McKee.
    Reorder(ReorderArgs),
    /// Train the sampling controller and export the best scheme.
    Train(TrainArgs),
    /// Score a scheme against a matrix.
    Eval(EvalArgs),
    /// Fixed-size diagonal blocks, optionally with fixed fills.
    Baseline(BaselineArgs),
    /// Exhaustively enumerate the action space (small instances only).
    Oracle(OracleArgs),
    /// Check the block-wise product against the dense product.
    Verify(VerifyArgs),
    /// Render the pattern and scheme as an SVG spy plot.
    Render(RenderArgs),
    /// Split scheme blocks into crossbar-sized tiles.
    Tiles(TilesArgs),
}

#[derive(Args, Serialize)]
struct ReorderArgs {
    /// Matrix Market input.
    #[arg(long)]
    input: PathBuf,
    /// Where to write the permutation JSON.
    #[arg(long)]
    perm_out: PathBuf,
    /// Where to write the permuted matrix.
    #[arg(long)]
    out: PathBuf,
    /// Use plain Cuthill-McKee instead of the reverse variant.
    #[arg(long)]
    no_reverse: bool,
}

#[derive(Args, Serialize)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    /// Grid cell size k.
    #[arg(long)]
    grid: usize,
    /// Fill grade count G.
    #[arg(long)]
    grades: usize,
    /// Coverage weight of the reward.
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    epochs: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    scheme_out: PathBuf,
    #[arg(long)]
    curves_out: PathBuf,
    /// Samples per update.
    #[arg(long, default_value_t = 1)]
    batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Baseline EMA decay.
    #[arg(long, default_value_t = 0.95)]
    decay: f64,
    /// Controller hidden size.
    #[arg(long, default_value_t = 10)]
    hidden: usize,
    /// Global-norm gradient clip; 0 disables.
    #[arg(long, default_value_t = 5.0)]
    clip: f64,
    /// Use plain SGD instead of the adaptive optimizer.
    #[arg(long)]
    sgd: bool,
    /// Share one classification head pair across all steps.
    #[arg(long)]
    tie_heads: bool,
    /// Keep every Nth curves row.
    #[arg(long, default_value_t = 1)]
    curves_stride: usize,
    /// Write agent checkpoints here.
    #[arg(long)]
    checkpoint_out: Option<PathBuf>,
    /// Checkpoint every N epochs (requires --checkpoint-out).
    #[arg(long, default_value_t = 5000)]
    checkpoint_interval: usize,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    scheme: PathBuf,
    #[arg(long)]
    alpha: f64,
}

#[derive(Args, Serialize)]
struct BaselineArgs {
    #[arg(long)]
    input: PathBuf,
    /// Diagonal block size.
    #[arg(long)]
    block: usize,
    /// Fixed fill size for every gap.
    #[arg(long)]
    fill: Option<usize>,
    #[arg(long, default_value_t = 0.8)]
    alpha: f64,
}

#[derive(Args, Serialize)]
struct OracleArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    grid: usize,
    #[arg(long)]
    grades: usize,
    #[arg(long)]
    alpha: f64,
    /// Refuse enumeration beyond this many action pairs.
    #[arg(long, default_value_t = 10_000_000)]
    cap: u64,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    scheme: PathBuf,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct RenderArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    scheme: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct TilesArgs {
    #[arg(long)]
    scheme: PathBuf,
    /// Crossbar side length.
    #[arg(long)]
    crossbar: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Reorder(a) => cmd_reorder(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Render(a) => cmd_render(a),
        Command::Tiles(a) => cmd_tiles(a),
    }
}

fn load_matrix(path: &Path) -> anyhow::Result<SparseMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    Ok(parse_matrix_market(&text)?)
}

fn load_scheme(path: &Path) -> anyhow::Result<(MappingScheme, SchemeFile)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))?;
    let file: SchemeFile = serde_json::from_str(&text)?;
    let scheme = file.to_scheme()?;
    Ok((scheme, file))
}

/// Every artifact-writing run leaves its fully-resolved arguments next to
/// the primary output as `<output>.config.json`.
fn echo_config<T: Serialize>(primary_output: &Path, args: &T) -> anyhow::Result<()> {
    let mut path = primary_output.as_os_str().to_owned();
    path.push(".config.json");
    let text = serde_json::to_string_pretty(args)?;
    std::fs::write(PathBuf::from(path), text)?;
    Ok(())
}

fn cmd_reorder(a: ReorderArgs) -> anyhow::Result<ExitCode> {
    let m = load_matrix(&a.input)?;
    let before = bandwidth(&m);
    let p = rcm_order(&m, !a.no_reverse)?;
    let permuted = permute_matrix(&m, &p)?;
    let after = bandwidth(&permuted);
    std::fs::write(&a.perm_out, serde_json::to_string(&p)?)?;
    std::fs::write(&a.out, write_matrix_market(&permuted))?;
    echo_config(&a.out, &a)?;
    println!("bandwidth: {before} -> {after}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_train(a: TrainArgs) -> anyhow::Result<ExitCode> {
    let m = load_matrix(&a.input)?;
    let mut cfg = TrainConfig::new(a.grid, a.grades, a.alpha, a.epochs, a.seed);
    cfg.batch = a.batch;
    cfg.lr = a.lr;
    cfg.decay = a.decay;
    cfg.hidden = a.hidden;
    cfg.clip_norm = if a.clip > 0.0 { Some(a.clip) } else { None };
    cfg.optimizer = if a.sgd {
        Optimizer::Sgd
    } else {
        Optimizer::Adam
    };
    cfg.tie_heads = a.tie_heads;

    let checkpoint = a.checkpoint_out.clone();
    let interval = a.checkpoint_interval.max(1);
    let outcome = train_with_observer(&m, &cfg, |epoch, params| {
        if let Some(path) = &checkpoint {
            if (epoch + 1) % interval == 0 {
                std::fs::write(path, params.to_checkpoint_json())?;
            }
        }
        Ok(())
    })?;

    let file = SchemeFile::from_scheme(&outcome.best_scheme, a.grid, a.grades)?;
    std::fs::write(&a.scheme_out, serde_json::to_string_pretty(&file)?)?;
    std::fs::write(&a.curves_out, curves_csv(&outcome.history, a.curves_stride))?;
    if let Some(path) = &checkpoint {
        std::fs::write(path, outcome.params.to_checkpoint_json())?;
    }
    echo_config(&a.scheme_out, &a)?;
    println!("{}", outcome.best_eval.to_json());
    if outcome.complete {
        Ok(ExitCode::SUCCESS)
    } else {
        log::warn!("no complete-coverage scheme found within the epoch budget");
        Ok(ExitCode::from(EXIT_INFEASIBLE))
    }
}

fn cmd_eval(a: EvalArgs) -> anyhow::Result<ExitCode> {
    let m = load_matrix(&a.input)?;
    let (scheme, _) = load_scheme(&a.scheme)?;
    let idx = PrefixIndex::new(&m)?;
    let result = evaluate(&scheme, &idx, a.alpha)?;
    println!("{}", result.to_json());
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct SchemeReport {
    scheme: SchemeFile,
    eval: Box<serde_json::value::RawValue>,
}

fn eval_value(e: &EvalResult) -> anyhow::Result<Box<serde_json::value::RawValue>> {
    Ok(serde_json::value::RawValue::from_string(e.to_json())?)
}

fn cmd_baseline(a: BaselineArgs) -> anyhow::Result<ExitCode> {
    let m = load_matrix(&a.input)?;
    let scheme = match a.fill {
        Some(f) => vanilla_fill_scheme(m.dim(), a.block, f)?,
        None => vanilla_scheme(m.dim(), a.block)?,
    };
    let idx = PrefixIndex::new(&m)?;
    let result = evaluate(&scheme, &idx, a.alpha)?;
    let report = SchemeReport {
        scheme: SchemeFile::from_scheme(&scheme, a.block, 2)?,
        eval: eval_value(&result)?,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct OracleReport {
    best_scheme: SchemeFile,
    best_reward: f64,
    enumerated_count: u64,
    eval: Box<serde_json::value::RawValue>,
}

fn cmd_oracle(a: OracleArgs) -> anyhow::Result<ExitCode> {
    let m = load_matrix(&a.input)?;
    let r = brute_force_best(&m, a.grid, a.grades, a.alpha, a.cap)?;
    let report = OracleReport {
        best_scheme: SchemeFile::from_scheme(&r.best_scheme, a.grid, a.grades)?,
        best_reward: r.best_reward,
        enumerated_count: r.enumerated_count,
        eval: eval_value(&r.best_eval)?,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(a: VerifyArgs) -> anyhow::Result<ExitCode> {
    let m = load_matrix(&a.input)?;
    let (scheme, _) = load_scheme(&a.scheme)?;
    if scheme.dim != m.dim() {
        anyhow::bail!(
            "dimension mismatch: scheme {} vs matrix {}",
            scheme.dim,
            m.dim()
        );
    }
    if let Some((row, col)) = first_uncovered(&m, &scheme) {
        eprintln!("error: incomplete coverage: nonzero at ({row}, {col}) is not inside any block");
        return Ok(ExitCode::from(EXIT_INFEASIBLE));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(a.seed);
    let mut worst = 0.0f64;
    for _ in 0..a.trials {
        let x: Vec<f64> = (0..m.dim()).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let got = blockwise_spmv(&m, &scheme, &x)?;
        let want = dense_spmv(&m, &x)?;
        worst = worst.max(max_relative_error(&got, &want));
    }
    let pass = worst < VERIFY_TOLERANCE;
    println!(
        "{{\"max_relative_error\": {worst:e}, \"trials\": {}, \"tolerance\": {VERIFY_TOLERANCE:e}, \"pass\": {pass}}}",
        a.trials
    );
    if pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_VERIFY_FAILED))
    }
}

fn cmd_render(a: RenderArgs) -> anyhow::Result<ExitCode> {
    let m = load_matrix(&a.input)?;
    let (scheme, _) = load_scheme(&a.scheme)?;
    if scheme.dim != m.dim() {
        anyhow::bail!(
            "dimension mismatch: scheme {} vs matrix {}",
            scheme.dim,
            m.dim()
        );
    }
    std::fs::write(&a.out, render_svg(&m, &scheme))?;
    echo_config(&a.out, &a)?;
    log::info!("wrote {}", a.out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_tiles(a: TilesArgs) -> anyhow::Result<ExitCode> {
    let (scheme, _) = load_scheme(&a.scheme)?;
    let manifest = tile_manifest(&scheme, a.crossbar)?;
    std::fs::write(&a.out, serde_json::to_string_pretty(&manifest)?)?;
    echo_config(&a.out, &a)?;
    println!(
        "{} tiles, {} occupied cells",
        manifest.tile_count, manifest.occupied_cells
    );
    Ok(ExitCode::SUCCESS)
}
