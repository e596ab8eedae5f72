use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use mscreen::bounds::{boot_dimension_exponent, s_exponent};
use mscreen::harness::{resolve_workers, run_monte_carlo};
use mscreen::{
    art_test, default_block_size, generate, load_sample, pbar, run_test, save_sample, ArtConfig, ArtFlavor,
    BootstrapConfig, CovariateLaw, DgpSpec, ErrorLaw, ExperimentSpec, GrowthParams, Layout, Method, Model,
    ReportFormat, StatKind, WeightScheme,
};

#[derive(Parser)]
#[command(name = "mscreen", version, about = "Bootstrap screening tests for many predictors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test a data file for any marginally relevant predictor.
    Test(TestArgs),
    /// Simulate a sample from one of the built-in processes.
    Simulate(SimulateArgs),
    /// Print dimension-growth and block-size bounds.
    Bound(BoundArgs),
    /// Run a Monte Carlo sweep and write a rejection-frequency table.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dwb,
    Pwb,
    Art,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatArg {
    Max,
    Ave,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightsArg {
    Unit,
    Ls,
    Hac,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    Nb,
    Pwb,
}

#[derive(Args)]
struct TestArgs {
    /// CSV or tab-separated file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Response column name (default: first column).
    #[arg(long)]
    response: Option<String>,
    #[arg(long, value_enum, default_value = "pwb")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "max")]
    stat: StatArg,
    #[arg(long, value_enum, default_value = "unit")]
    weights: WeightsArg,
    /// Bartlett bandwidth for `--weights hac` (default ⌈1.2·n^{1/3}⌉).
    #[arg(long)]
    hac_bandwidth: Option<usize>,
    /// Block length, or `auto` for 5·round(n^{1/6}).
    #[arg(long, default_value = "1")]
    block: String,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    /// ART tuning draws.
    #[arg(long, default_value_t = 1000)]
    tuning_reps: usize,
    /// ART resampling flavor.
    #[arg(long, value_enum, default_value = "nb")]
    flavor: FlavorArg,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Refit PWB weights on every replicate.
    #[arg(long)]
    recompute_weights: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    I,
    Ii,
    Iii,
    Iv,
    V,
    Local,
}

#[derive(Clone, Copy, ValueEnum)]
enum ErrorArg {
    E1,
    E2,
}

#[derive(Clone, Copy, ValueEnum)]
enum CovArg {
    C1,
    C2,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    model: ModelArg,
    #[arg(long, value_enum, default_value = "e1")]
    error: ErrorArg,
    #[arg(long, value_enum, default_value = "c1")]
    cov: CovArg,
    /// Equicorrelation for `--cov c1`.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Model parameter (φ₁ for ii, ϕ for iii/iv/v, c₁ for local).
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    /// Comma-separated local-alternative constants; overrides `--phi`.
    #[arg(long, value_delimiter = ',')]
    local_c: Option<Vec<f64>>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = mscreen::dgp::DEFAULT_BURN_IN)]
    burn_in: usize,
    #[arg(long)]
    emit: PathBuf,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    b: f64,
    #[arg(long)]
    lambda: f64,
    /// Block-length growth exponent.
    #[arg(long, default_value_t = 1.0 / 6.0)]
    rho: f64,
    #[arg(long)]
    n: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON experiment file; the full default grid if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long)]
    workers: Option<usize>,
    /// Shrink to n ∈ {100, 200}, p ∈ {10, 50} and 300 reps.
    #[arg(long)]
    desk: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bound(a) => cmd_bound(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn parse_block(arg: &str, n: usize) -> Result<usize> {
    if arg.eq_ignore_ascii_case("auto") {
        return Ok(default_block_size(n)?);
    }
    arg.parse()
        .with_context(|| format!("--block expects a positive integer or `auto`, got `{arg}`"))
}

fn cmd_test(a: TestArgs) -> Result<ExitCode> {
    let layout = Layout {
        response: a.response.clone(),
        predictors: None,
    };
    let sample = load_sample(&a.data, &layout).with_context(|| format!("loading {}", a.data.display()))?;
    let block = parse_block(&a.block, sample.n())?;
    let record = match a.method {
        MethodArg::Art => {
            let cfg = ArtConfig {
                alpha: a.alpha,
                outer_reps: a.reps,
                tuning_reps: a.tuning_reps,
                flavor: match a.flavor {
                    FlavorArg::Nb => ArtFlavor::Nb,
                    FlavorArg::Pwb => ArtFlavor::Pwb,
                },
                master_seed: a.seed,
                block_size: block,
            };
            let r = art_test(&sample, &cfg)?;
            json!({
                "statistic": r.statistic,
                "p_value": r.p_value,
                "reject": r.reject,
                "argmax_index": r.l_hat,
                "interval": [r.interval.0, r.interval.1],
                "t_n": r.t_n,
                "lambda_n": r.lambda_n,
                "omega_star": r.omega_star,
                "config": cfg,
            })
        }
        MethodArg::Dwb | MethodArg::Pwb => {
            let n = sample.n();
            let weight_scheme = match a.weights {
                WeightsArg::Unit => WeightScheme::Unit,
                WeightsArg::Ls => WeightScheme::LsSe,
                WeightsArg::Hac => WeightScheme::HacSe {
                    hac_bandwidth: a
                        .hac_bandwidth
                        .unwrap_or_else(|| mscreen::weights::default_hac_bandwidth(n)),
                },
            };
            let cfg = BootstrapConfig {
                method: if matches!(a.method, MethodArg::Dwb) {
                    Method::Dwb
                } else {
                    Method::Pwb
                },
                replicates: a.reps,
                block_size: block,
                weight_scheme,
                statistic_kind: match a.stat {
                    StatArg::Max => StatKind::Max,
                    StatArg::Ave => StatKind::Ave,
                },
                alpha: a.alpha,
                master_seed: a.seed,
                recompute_weights: a.recompute_weights,
            };
            let r = run_test(&sample, &cfg)?;
            json!({
                "statistic": r.observed.value,
                "p_value": r.p_value,
                "reject": r.reject,
                "argmax_index": r.observed.argmax_index,
                "argmax_name": sample.names().get(r.observed.argmax_index),
                "config": r.config_echo,
            })
        }
    };
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(a: SimulateArgs) -> Result<ExitCode> {
    let model = match a.model {
        ModelArg::I => Model::I,
        ModelArg::Ii => Model::Ii { phi1: a.phi },
        ModelArg::Iii => Model::Iii { varphi: a.phi },
        ModelArg::Iv => Model::Iv { varphi: a.phi },
        ModelArg::V => Model::V { varphi: a.phi },
        ModelArg::Local => Model::Local {
            c: a.local_c.clone().unwrap_or_else(|| vec![a.phi]),
        },
    };
    let error = match a.error {
        ErrorArg::E1 => ErrorLaw::E1,
        ErrorArg::E2 => ErrorLaw::E2,
    };
    let covariate = match a.cov {
        CovArg::C1 => CovariateLaw::C1 { gamma: a.gamma },
        CovArg::C2 => CovariateLaw::C2,
    };
    let mut spec = DgpSpec::new(a.n, a.p, model, error, covariate, a.seed);
    spec.burn_in = a.burn_in;
    let sample = generate(&spec)?;
    save_sample(&a.emit, &sample).with_context(|| format!("writing {}", a.emit.display()))?;
    eprintln!(
        "wrote {} rows x {} predictors to {}",
        sample.n(),
        sample.p(),
        a.emit.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_bound(a: BoundArgs) -> Result<ExitCode> {
    let s = s_exponent(a.b, a.lambda)?;
    let boot = boot_dimension_exponent(GrowthParams {
        b: a.b,
        lambda: a.lambda,
        rho: a.rho,
    })?;
    let record = json!({
        "s": s,
        "boot_exponent": boot,
        "ln_p_scale": (a.n as f64).powf(s),
        "pbar": pbar(a.n)?,
        "block_size": default_block_size(a.n)?,
    });
    println!("{}", serde_json::to_string_pretty(&record)?);
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(a: SweepArgs) -> Result<ExitCode> {
    let mut spec: ExperimentSpec = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => ExperimentSpec::default(),
    };
    if a.desk {
        spec = spec.desk();
    }
    if a.workers.is_some() {
        spec.workers = a.workers;
    }
    if spec.workers == Some(0) {
        bail!("--workers must be at least 1");
    }
    let workers = resolve_workers(spec.workers);
    eprintln!("sweep: {} tests on {} workers", spec.tests.len(), workers);
    let table = run_monte_carlo(&spec)?;
    let format = match a.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    };
    if table.rows.is_empty() {
        for f in &table.failures {
            eprintln!("failed: {} rep {}: {}", f.cell, f.rep, f.error);
        }
        bail!("every cell failed; no table written");
    }
    mscreen::emit_report(&table, &a.out, format)?;
    if table.is_partial() {
        let mut cells: Vec<&str> = table.failures.iter().map(|f| f.cell.as_str()).collect();
        cells.dedup();
        for c in &cells {
            eprintln!("failed cell: {c}");
        }
        eprintln!("{} of the grid's cells failed; table is partial", cells.len());
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}
