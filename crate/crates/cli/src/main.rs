use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod report;

/// Composite game analysis: equilibria, dynamics, potential and
/// dissipativity checks on cg-spec files.
#[derive(Parser)]
#[command(name = "cgame", author, version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Spec file, or `builtin:<name>`.
    #[arg(long)]
    pub spec: String,
    /// Seed for every random choice.
    #[arg(long, env = "CG_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the command's main tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Worker threads for independent samples and restarts.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Args, Debug, Clone)]
pub struct Flow {
    /// One of rd, bnn, smith, lp, gp, br.
    #[arg(long)]
    pub dynamics: String,
    #[arg(long, default_value_t = 1e-2)]
    pub dt: f64,
    #[arg(long = "t-end", default_value_t = 10.0)]
    pub t_end: f64,
    /// uniform | vertex:<idx> | vertex:<c1,c2,..> | dirichlet | explicit:<json>
    #[arg(long, default_value = "uniform")]
    pub init: String,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a dynamics and write the trajectory as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flow: Flow,
        /// Lyapunov column: a kind name, or `paired` for the dynamics' own.
        #[arg(long)]
        lyapunov: Option<String>,
    },
    /// Solve for an equilibrium (or check the initial profile) and report residuals.
    Equilibrium {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "uniform")]
        init: String,
        /// Only evaluate the initial profile.
        #[arg(long)]
        evaluate_only: bool,
    },
    /// Check the declared potential against the evaluation function.
    VerifyPotential {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Sampling test of dissipativity.
    VerifyDissipative {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, default_value_t = 100)]
        jacobian_points: usize,
    },
    /// Integrate a dynamics and test monotonicity of a Lyapunov function.
    Lyapunov {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        flow: Flow,
        /// Lyapunov kind; the dynamics' paired function when absent.
        #[arg(long)]
        kind: Option<String>,
    },
    /// List the admissible paths of every participant of a network spec.
    Paths {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate { common, flow, lyapunov } => commands::simulate(&common, &flow, lyapunov.as_deref()),
        Command::Equilibrium {
            common,
            init,
            evaluate_only,
        } => commands::equilibrium(&common, &init, evaluate_only),
        Command::VerifyPotential { common, samples } => commands::verify_potential(&common, samples),
        Command::VerifyDissipative {
            common,
            pairs,
            jacobian_points,
        } => commands::verify_dissipative(&common, pairs, jacobian_points),
        Command::Lyapunov { common, flow, kind } => commands::lyapunov(&common, &flow, kind.as_deref()),
        Command::Paths { common } => commands::paths(&common),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
