//! `levymax`: runs one experiment per invocation and writes report.json,
//! tables/*.csv and, with `--plots`, plots/*.svg into the output directory.
//!
//! Exit status: 0 when the experiment's verdict passes, 1 when it fails or errors
//! (the report is still written), 2 for unusable configuration (nothing written).

mod config;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levymax::calculus::HolderVariant;
use levymax::discrete_diff::FrameMode;

use config::{ClassSpec, ConfigError, CriterionSel, Experiment, ExperimentConfig, GridSpec, OperatorSpec, Tolerances};
use output::Report;
use run::Failure;

#[derive(Parser)]
#[command(name = "levymax", version, about = "Grid-operator experiments: extension, GCP, min-max, Lévy triples")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomized experiments (required for gcp, minmax, extremal, study).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory [default: out].
    #[arg(short, long, global = true)]
    output_dir: Option<PathBuf>,
    /// Also write log-log plots as SVG.
    #[arg(long, global = true)]
    plots: bool,
}

#[derive(Args, Clone, Default)]
struct GridArgs {
    /// Dimension, 1 or 2.
    #[arg(long)]
    dim: Option<usize>,
    /// Grid level n (spacing 2^{-2-n}).
    #[arg(long)]
    level: Option<u32>,
    /// Lower box corner, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    lo: Option<Vec<f64>>,
    /// Upper box corner, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    hi: Option<Vec<f64>>,
}

#[derive(Args, Clone, Default)]
struct ClassArgs {
    /// Regularity exponent β.
    #[arg(long)]
    beta: Option<f64>,
    /// Class variant (holder, lipschitz, c1, c1alpha, c11, c2, c2alpha); inferred from β if absent.
    #[arg(long, value_parser = parse_variant)]
    variant: Option<HolderVariant>,
}

#[derive(Args, Clone, Default)]
struct OperatorArgs {
    /// Zoo operator: discrete_laplacian, fractional, drift, isaacs, pucci_nonlocal.
    #[arg(long, conflicts_with = "operator_file")]
    operator: Option<String>,
    /// Linear operator JSON as written by the levy or minmax runs.
    #[arg(long)]
    operator_file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a grid and its Whitney cover; writes grid.json and cover.json.
    Grid {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Extend a sampled test function and tabulate it against the function.
    Extend {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        class: ClassArgs,
        /// Test function: affine, quadratic, sine, gaussian_bump, abs_pow.
        #[arg(long)]
        function: Option<String>,
    },
    /// Approximation rate of the extension over several levels.
    Rates {
        #[command(flatten)]
        grid: GridArgs,
        /// Levels, comma separated [default: 2,3,4,5,6].
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<u32>>,
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long)]
        function: Option<String>,
        /// Direction frames for the discrete derivatives.
        #[arg(long, value_parser = parse_frame_mode)]
        frame_mode: Option<FrameMode>,
    },
    /// Global comparison property check of an operator.
    Gcp {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        operator: OperatorArgs,
        /// Random touching pairs for nonlinear operators [default: 200].
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Min-max representation from sampled Clarke differentials.
    Minmax {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        operator: OperatorArgs,
        /// Residual tolerance [default: 1e-8].
        #[arg(long)]
        residual: Option<f64>,
    },
    /// Lévy triples of an operator (or its Clarke elements) at a grid point.
    Levy {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        operator: OperatorArgs,
        #[command(flatten)]
        class: ClassArgs,
        /// Base point, comma separated; snapped to the grid [default: box center].
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        point: Option<Vec<f64>>,
    },
    /// Positivity corrector for |x − x0|² over several levels.
    Corrector {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<u32>>,
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        point: Option<Vec<f64>>,
    },
    /// Extremal inequalities of a min-max operator against its own family.
    Extremal {
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        operator: OperatorArgs,
        /// Random (u, v, x) triples [default: 500].
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Acceptance criteria as named experiments.
    Study {
        /// Criterion number 1-12, or "all" [default: all].
        #[arg(long)]
        criterion: Option<String>,
    },
}

fn parse_variant(s: &str) -> Result<HolderVariant, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown class variant {s:?}"))
}

fn parse_frame_mode(s: &str) -> Result<FrameMode, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown frame mode {s:?}"))
}

fn grid_spec(g: GridArgs, levels: Option<Vec<u32>>) -> Option<GridSpec> {
    let spec = GridSpec { dim: g.dim, level: g.level, levels, lo: g.lo, hi: g.hi };
    (spec != GridSpec::default()).then_some(spec)
}

fn operator_spec(o: OperatorArgs) -> Option<OperatorSpec> {
    o.operator.map(OperatorSpec::Name).or(o.operator_file.map(|file| OperatorSpec::File { file }))
}

/// Flags as a partial configuration; the class needs β, so a bare variant is an error.
fn flags(cmd: Command) -> Result<(Experiment, ExperimentConfig), ConfigError> {
    let mut c = ExperimentConfig::default();
    let class = |a: ClassArgs| -> Result<Option<ClassSpec>, ConfigError> {
        match (a.beta, a.variant) {
            (Some(beta), variant) => Ok(Some(ClassSpec { beta, variant })),
            (None, Some(_)) => Err(ConfigError("--variant needs --beta".into())),
            (None, None) => Ok(None),
        }
    };
    let exp = match cmd {
        Command::Grid { grid } => {
            c.grid = grid_spec(grid, None);
            Experiment::Grid
        }
        Command::Extend { grid, class: k, function } => {
            c.grid = grid_spec(grid, None);
            c.class = class(k)?;
            c.function = function;
            Experiment::Extend
        }
        Command::Rates { grid, levels, class: k, function, frame_mode } => {
            c.grid = grid_spec(grid, levels);
            c.class = class(k)?;
            c.function = function;
            c.frame_mode = frame_mode;
            Experiment::Rates
        }
        Command::Gcp { grid, operator, trials } => {
            c.grid = grid_spec(grid, None);
            c.operator = operator_spec(operator);
            c.tolerances = Tolerances { trials, ..Default::default() };
            Experiment::Gcp
        }
        Command::Minmax { grid, operator, residual } => {
            c.grid = grid_spec(grid, None);
            c.operator = operator_spec(operator);
            c.tolerances = Tolerances { residual, ..Default::default() };
            Experiment::Minmax
        }
        Command::Levy { grid, operator, class: k, point } => {
            c.grid = grid_spec(grid, None);
            c.operator = operator_spec(operator);
            c.class = class(k)?;
            c.point = point;
            Experiment::Levy
        }
        Command::Corrector { grid, levels, class: k, point } => {
            c.grid = grid_spec(grid, levels);
            c.class = class(k)?;
            c.point = point;
            Experiment::Corrector
        }
        Command::Extremal { grid, operator, trials } => {
            c.grid = grid_spec(grid, None);
            c.operator = operator_spec(operator);
            c.tolerances = Tolerances { trials, ..Default::default() };
            Experiment::Extremal
        }
        Command::Study { criterion } => {
            c.criterion = match criterion.as_deref() {
                None => None,
                Some("all") => Some(CriterionSel::All("all".into())),
                Some(s) => Some(CriterionSel::One(
                    s.parse().map_err(|_| ConfigError(format!("criterion must be 1..=12 or \"all\", got {s:?}")))?,
                )),
            };
            Experiment::Study
        }
    };
    Ok((exp, c))
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var("LEVYMAX_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| ConfigError(format!("LEVYMAX_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(format!("cannot size the thread pool: {e}")))
}

fn write_all(
    dir: &Path,
    exp: Experiment,
    cfg: &ExperimentConfig,
    result: Result<run::Artifacts, String>,
    plots: bool,
) -> std::io::Result<bool> {
    let (passed, results, error, tables, files) = match result {
        Ok(a) => (a.passed, a.results, None, a.tables, a.files),
        Err(e) => (false, serde_json::Value::Null, Some(e), Vec::new(), Vec::new()),
    };
    for t in &tables {
        output::write_table(dir, t)?;
        if plots {
            output::plot_table(dir, t).map_err(|e| std::io::Error::other(e.to_string()))?;
        }
    }
    for (name, v) in &files {
        output::write_json(dir, name, v)?;
    }
    let report = Report {
        experiment: exp.name(),
        passed,
        seed: cfg.seed,
        config: cfg,
        results,
        error,
        tables: tables.iter().map(|t| format!("tables/{}.csv", t.name)).collect(),
        files: files.iter().map(|f| f.0.clone()).collect(),
    };
    output::write_report(dir, &report)?;
    Ok(passed)
}

fn main() -> ExitCode {
    let Cli { common, command } = Cli::parse();
    let setup = || -> Result<(Experiment, ExperimentConfig), ConfigError> {
        configure_threads()?;
        let (exp, from_flags) = flags(command)?;
        let base = match &common.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let mut cfg = base.overlay(from_flags);
        if common.seed.is_some() {
            cfg.seed = common.seed;
        }
        if common.output_dir.is_some() {
            cfg.output_dir = common.output_dir.clone();
        }
        cfg.validate(exp)?;
        Ok((exp, cfg))
    };
    let (exp, cfg) = match setup() {
        Ok(v) => v,
        Err(e) => {
            eprintln!("levymax: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match run::run(exp, &cfg) {
        Ok(a) => Ok(a),
        Err(Failure::Config(e)) => {
            eprintln!("levymax: {e}");
            return ExitCode::from(2);
        }
        Err(Failure::Experiment(e)) => Err(e),
    };
    if let Err(e) = &result {
        eprintln!("levymax: {} failed: {e}", exp.name());
    }
    let dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    match write_all(&dir, exp, &cfg, result, common.plots) {
        Ok(true) => {
            println!("{}: pass ({})", exp.name(), dir.join("report.json").display());
            ExitCode::SUCCESS
        }
        Ok(false) => {
            println!("{}: FAIL ({})", exp.name(), dir.join("report.json").display());
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("levymax: cannot write artifacts to {}: {e}", dir.display());
            ExitCode::from(1)
        }
    }
}
