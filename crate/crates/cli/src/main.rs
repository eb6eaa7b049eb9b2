//! `herzlab`: batch runner for the herzlab-core pipelines.
//!
//! Every run writes `report.json` plus one CSV/SVG pair per figure into `--out`.
//! Exit status: 0 when every check passes, 1 when a check fails, 2 for an invalid
//! configuration (one JSON line on stderr naming the field), 3 for a numerical failure
//! (the partial report is still written), 4 for I/O errors.

mod config;
mod plot;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::{ContextKind, ContextValue, ErrorKind};
use clap::{Args, Parser, Subcommand};

use config::{parse_p, ConfigError, ExperimentConfig, GridSpec, Pipeline};
use run::{Failure, Outcome};

#[derive(Parser)]
#[command(
    name = "herzlab",
    version,
    about = "Mixed-norm Herz space experiments on uniform grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Output directory for the report, figures and CSV files.
    #[arg(long, global = true, default_value = "herzlab-out")]
    out: PathBuf,
    /// Seed for randomized test functions.
    #[arg(long, global = true, default_value_t = 20240611)]
    seed: u64,
    /// Grid dimension (1 or 2).
    #[arg(long, global = true, default_value_t = 1)]
    dim: usize,
    /// Half-width R of the grid [-R, R]^n.
    #[arg(long, global = true)]
    extent: Option<f64>,
    /// Nodes per axis (odd).
    #[arg(long, global = true)]
    points: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Mixed Lebesgue and Herz norms of a test function.
    Norms {
        #[arg(long, default_value = "gaussian")]
        function: String,
        /// Exponent vector, e.g. `2` or `2,3`.
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, allow_negative_numbers = true)]
        k_min: Option<i32>,
        #[arg(long, allow_negative_numbers = true)]
        k_max: Option<i32>,
    },
    /// Equivalence of the smooth, non-tangential, auxiliary and grand maximal functions.
    Maximal {
        #[arg(long, default_value = "gaussian")]
        function: String,
        #[arg(long, default_value = "2")]
        p: String,
        /// Smoothing kernel: gaussian or bump.
        #[arg(long, default_value = "gaussian")]
        kernel: String,
        /// Aperture of the non-tangential operator.
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        /// Decay exponent of the auxiliary operator.
        #[arg(long, default_value_t = 2.0)]
        b: f64,
        /// Seminorm order of the grand family (default n + 2).
        #[arg(long)]
        n: Option<usize>,
        /// Number of dyadic scale levels (default log2 of the node count).
        #[arg(long)]
        j: Option<u32>,
        /// Largest accepted pairwise norm ratio.
        #[arg(long, default_value_t = 20.0)]
        max_factor: f64,
    },
    /// Atomic decomposition of a test function.
    Decompose {
        #[arg(long, default_value = "mean-zero")]
        function: String,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value = "2")]
        p: String,
        /// Moment degree (default: the smallest admissible one).
        #[arg(long)]
        s: Option<usize>,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, allow_negative_numbers = true)]
        k_min: Option<i32>,
        #[arg(long, allow_negative_numbers = true)]
        k_max: Option<i32>,
        /// Restricted type: shells k >= 0 only.
        #[arg(long)]
        restricted: bool,
    },
    /// Decomposition of a power-tail molecule into atoms.
    Molecule {
        /// Decay exponent of the tail.
        #[arg(long, default_value_t = 2.0)]
        gamma: f64,
        /// Core width.
        #[arg(long, default_value_t = 0.0625)]
        width: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Calderón–Zygmund operator harness on atoms.
    Operator {
        /// hilbert, riesz1, riesz2 or oscillatory.
        #[arg(long, default_value = "hilbert")]
        kernel: String,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0)]
        q: f64,
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long)]
        s: Option<usize>,
        /// Regularity exponent (default: the kernel's own).
        #[arg(long)]
        delta: Option<f64>,
        /// Atom radii as powers of two, e.g. `-3,-2,-1,0,1,2`.
        #[arg(long, default_value = "-3,-2,-1,0,1,2", allow_hyphen_values = true)]
        scales: String,
        /// Largest accepted max/min ratio of the atom norms.
        #[arg(long, default_value_t = 4.0)]
        factor: f64,
    },
    /// Campanato norm of a function and its pairing with atoms.
    Duality {
        #[arg(long, default_value = "square")]
        function: String,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value = "2")]
        p: String,
        #[arg(long)]
        s: Option<usize>,
        /// Ball radii, e.g. `0.25,0.5,1,2` (default: dyadic radii up to R).
        #[arg(long, default_value = "")]
        radii: String,
        #[arg(long, default_value_t = herzlab::duality::PAIRING_TOL)]
        tol: f64,
    },
    /// The full acceptance suite.
    Suite {
        /// Skip the grid-refinement checks.
        #[arg(long)]
        no_refine: bool,
        /// Run only these criteria, e.g. `1,8`.
        #[arg(long, default_value = "")]
        criteria: String,
    },
    /// Runs a configuration stored as JSON.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_list<T: std::str::FromStr>(raw: &str, field: &str) -> Result<Vec<T>, ConfigError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| ConfigError::new(field, format!("cannot parse `{s}` in `{raw}`")))
        })
        .collect()
}

fn build_config(cli: Cli) -> Result<ExperimentConfig, ConfigError> {
    let grid = GridSpec {
        dim: cli.common.dim,
        extent: cli.common.extent,
        points: cli.common.points,
    };
    let pipeline = match cli.command {
        Command::Norms {
            function,
            p,
            alpha,
            q,
            k_min,
            k_max,
        } => Pipeline::Norms {
            function,
            p: parse_p(&p)?,
            alpha,
            q,
            k_min,
            k_max,
        },
        Command::Maximal {
            function,
            p,
            kernel,
            a,
            b,
            n,
            j,
            max_factor,
        } => Pipeline::Maximal {
            function,
            p: parse_p(&p)?,
            kernel,
            a,
            b,
            n,
            j,
            max_factor,
        },
        Command::Decompose {
            function,
            alpha,
            q,
            p,
            s,
            eps,
            k_min,
            k_max,
            restricted,
        } => Pipeline::Decompose {
            function,
            alpha,
            q,
            p: parse_p(&p)?,
            s,
            eps,
            k_min,
            k_max,
            restricted,
        },
        Command::Molecule {
            gamma,
            width,
            alpha,
            q,
            p,
            s,
            eps,
        } => Pipeline::Molecule {
            gamma,
            width,
            alpha,
            q,
            p: parse_p(&p)?,
            s,
            eps,
        },
        Command::Operator {
            kernel,
            alpha,
            q,
            p,
            s,
            delta,
            scales,
            factor,
        } => Pipeline::Operator {
            kernel,
            alpha,
            q,
            p: parse_p(&p)?,
            s,
            delta,
            scales: parse_list(&scales, "scales")?,
            factor,
        },
        Command::Duality {
            function,
            alpha,
            p,
            s,
            radii,
            tol,
        } => Pipeline::Duality {
            function,
            alpha,
            p: parse_p(&p)?,
            s,
            radii: parse_list(&radii, "radii")?,
            tol,
        },
        Command::Suite {
            no_refine,
            criteria,
        } => Pipeline::Suite {
            refine: !no_refine,
            criteria: parse_list(&criteria, "criteria")?,
        },
        Command::Run { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| ConfigError::new("config", format!("{}: {e}", config.display())))?;
            return serde_json::from_str(&text)
                .map_err(|e| ConfigError::new("config", e.to_string()));
        }
    };
    Ok(ExperimentConfig {
        grid,
        seed: cli.common.seed,
        pipeline,
    })
}

/// Maps a clap error onto the single-line diagnostic, naming the offending flag.
fn clap_diagnostic(e: &clap::Error) -> ConfigError {
    let field = match e.get(ContextKind::InvalidArg) {
        Some(ContextValue::String(s)) => s
            .trim_start_matches('-')
            .split([' ', '=', '<'])
            .next()
            .unwrap_or("")
            .replace('-', "_"),
        _ => "arguments".into(),
    };
    let message = e.to_string();
    let first = message
        .lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("invalid arguments")
        .trim_start_matches("error: ")
        .to_string();
    ConfigError::new(
        if field.is_empty() {
            "arguments".into()
        } else {
            field
        },
        first,
    )
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(raw) = std::env::var("HERZLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        ConfigError::new(
            "HERZLAB_THREADS",
            format!("expected a positive integer, got `{raw}`"),
        )
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError::new("HERZLAB_THREADS", e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => e.exit(),
        Err(e) => {
            eprintln!("{}", clap_diagnostic(&e).to_json_line());
            return ExitCode::from(2);
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("{}", e.to_json_line());
        return ExitCode::from(2);
    }
    let out_dir = cli.common.out.clone();
    let cfg = match build_config(cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            return ExitCode::from(2);
        }
    };

    let mut outcome = Outcome::default();
    let failure = match run::execute(&cfg, &mut outcome) {
        Ok(()) => None,
        Err(Failure::Config(e)) => {
            eprintln!("{}", e.to_json_line());
            return ExitCode::from(2);
        }
        Err(Failure::Numerical(e)) => Some(e),
    };
    let report = match run::write_report(&out_dir, &cfg, &outcome, failure.as_ref()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": "io", "field": "out", "message": e.to_string() })
            );
            return ExitCode::from(4);
        }
    };
    for line in &outcome.lines {
        println!("{line}");
    }
    for (name, ok) in &outcome.checks {
        println!("check {name}: {}", if *ok { "PASS" } else { "FAIL" });
    }
    println!("report: {}", out_dir.join("report.json").display());
    if let Some(e) = failure {
        eprintln!(
            "{}",
            serde_json::json!({ "error": "numerical_failure", "field": cfg.pipeline.command(), "message": e.to_string() })
        );
        return ExitCode::from(3);
    }
    if report["pass"] == serde_json::Value::Bool(true) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
