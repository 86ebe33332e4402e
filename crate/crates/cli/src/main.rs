//! `ratex`: existence, uniqueness and identification diagnostics for linear
//! rational expectations models.
//!
//! Exit codes: 0 success / identified / equivalent, 1 input error,
//! 2 existence-uniqueness or canonical-form failure, 3 negative verdict,
//! 4 inconclusive.

mod commands;
mod files;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ratex_core::paramdsl::SamplerConfig;
use ratex_core::ToleranceConfig;
use serde_json::json;

use commands::{Oracle, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    JsonReport,
}

#[derive(Parser)]
#[command(name = "ratex", version, about = "Wiener-Hopf based solution and identification diagnostics for LRE models")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value = "text", global = true)]
    format: Format,

    /// Relative tolerance for numerical rank decisions.
    #[arg(long, env = "RATEX_TOL_RANK", global = true)]
    tol_rank: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Wiener-Hopf factorization B = B_minus B_plus and the EU check
    Factorize { model: PathBuf },
    /// Solution objects: [B_minus^-1 A]_+, A+, transfer series and canonical form
    Solve {
        model: PathBuf,
        /// Last transfer coefficient to print (default (n+1)kappa+lambda)
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Observational equivalence of two models
    Equiv {
        model_a: PathBuf,
        model_b: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        oracle: Oracle,
        /// Frequency grid size for the spectral oracle
        #[arg(long, default_value_t = 64)]
        grid: usize,
    },
    /// Rank test for affine restrictions at a numeric model
    Ident {
        model: PathBuf,
        restrictions: PathBuf,
        /// Also run the Deistler-Schrader criterion (VARMA models only)
        #[arg(long)]
        ds: bool,
    },
    /// Sampling-based generic identification of a parametrized model
    Generic {
        model: PathBuf,
        restrictions: PathBuf,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Valid samples needed before rank deficiency counts as evidence
        #[arg(long, default_value_t = 16)]
        min_valid: usize,
    },
    /// Local identification under nonlinear (or affine) restrictions
    Local { model: PathBuf, restrictions: PathBuf },
    /// Spectral density on a frequency grid, as CSV
    Spectrum {
        model: PathBuf,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulated sample path, as CSV
    Simulate {
        model: PathBuf,
        #[arg(long = "T", default_value_t = 1000)]
        t: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// MA truncation (default: where |C_h| drops below 1e-12 |C_0|)
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Factorize { .. } => "factorize",
            Command::Solve { .. } => "solve",
            Command::Equiv { .. } => "equiv",
            Command::Ident { .. } => "ident",
            Command::Generic { .. } => "generic",
            Command::Local { .. } => "local",
            Command::Spectrum { .. } => "spectrum",
            Command::Simulate { .. } => "simulate",
        }
    }
}

fn run(cli: &Cli, tol: &ToleranceConfig) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Factorize { model } => commands::factorize(model, tol),
        Command::Solve { model, horizon } => commands::solve_cmd(model, *horizon, tol),
        Command::Equiv { model_a, model_b, oracle, grid } => commands::equiv(model_a, model_b, *oracle, *grid, tol),
        Command::Ident { model, restrictions, ds } => commands::ident(model, restrictions, *ds, tol),
        Command::Generic { model, restrictions, samples, seed, min_valid } => {
            let cfg = SamplerConfig { num_samples: *samples, seed: *seed, min_valid: *min_valid };
            commands::generic(model, restrictions, &cfg, tol)
        }
        Command::Local { model, restrictions } => commands::local(model, restrictions, tol),
        Command::Spectrum { model, grid, out } => commands::spectrum(model, *grid, out.as_deref(), tol),
        Command::Simulate { model, t, seed, horizon, out } => {
            commands::simulate_cmd(model, *t, *seed, *horizon, out.as_deref(), tol)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut tol = ToleranceConfig::default();
    if let Some(r) = cli.tol_rank {
        if !(r.is_finite() && r > 0.0) {
            eprintln!("error: --tol-rank must be a positive number");
            return ExitCode::from(commands::EXIT_INPUT as u8);
        }
        tol = tol.with_rank(r);
    }
    let command = cli.command.name();
    let (code, text, mut js) = match run(&cli, &tol) {
        Ok(o) => (o.code, o.text, o.json),
        Err(e) => {
            let code = commands::error_code(&e);
            let msg = format!("{e:#}");
            (code, vec![format!("error: {msg}")], json!({"error": {"kind": commands::error_kind(&e), "message": msg}}))
        }
    };
    match cli.format {
        Format::Text => {
            for line in &text {
                if line.starts_with("error:") {
                    eprintln!("{line}");
                } else {
                    println!("{line}");
                }
            }
        }
        Format::JsonReport => {
            if !js.is_null() {
                js["command"] = json!(command);
                js["exit_code"] = json!(code);
                js["tol_rank"] = json!(tol.rank);
                println!("{}", serde_json::to_string_pretty(&js).expect("serializable report"));
            }
        }
    }
    ExitCode::from(code as u8)
}
