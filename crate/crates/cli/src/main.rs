//! `teamdp`: solve, reduce and check finite sequential teams from JSON files.

mod commands;
mod error;
mod files;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use teamdp::model::DEFAULT_STAGE_POLICY_CAP;
use teamdp::oracle::DEFAULT_BRUTE_FORCE_CAP;
use teamdp::par::{self, Execution};
use teamdp::solver::DEFAULT_STATE_CAP;

use commands::*;
use error::CliError;
use report::Runtime;

#[derive(Debug, Parser)]
#[command(
    name = "teamdp",
    version,
    about = "Exact solvers and checks for finite sequential stochastic teams"
)]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    report: Option<PathBuf>,

    /// Leave wall-clock time and worker count out of the report.
    #[arg(long, global = true)]
    no_runtime: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a team file against every model invariant.
    Validate { team: PathBuf },
    /// Find an optimal (exact) or person-by-person optimal (stagewise) policy.
    Solve {
        team: PathBuf,
        #[arg(long, value_enum, default_value_t = Algorithm::Exact)]
        algorithm: Algorithm,
        /// Starting policy for the stagewise algorithm.
        #[arg(long, value_enum, default_value_t = Init::Zeros)]
        init: Init,
        /// Also run the brute-force oracle and compare.
        #[arg(long)]
        check_oracle: bool,
        /// Maximum sweeps for the stagewise algorithm.
        #[arg(long, default_value_t = 100)]
        sweeps: usize,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        state_cap: usize,
        #[arg(long, default_value_t = DEFAULT_STAGE_POLICY_CAP)]
        stage_policy_cap: u128,
        #[arg(long, default_value_t = DEFAULT_BRUTE_FORCE_CAP)]
        oracle_cap: u128,
        /// Same as the global --report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the policy as a policy document.
        #[arg(long)]
        policy_out: Option<PathBuf>,
    },
    /// Enumerate every deterministic policy.
    Brute {
        team: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BRUTE_FORCE_CAP)]
        cap: u128,
    },
    /// Rewrite a team with independent measurements and certify the rewrite.
    Reduce {
        team: PathBuf,
        /// Reduced team output file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reference measures file; uniform references by default.
        #[arg(long)]
        references: Option<PathBuf>,
        /// Number of random policies evaluated under both forms.
        #[arg(long, default_value_t = 100)]
        probe: usize,
    },
    /// Write the strategic measure induced by a policy.
    Induce {
        team: PathBuf,
        /// Policy file; overrides --from.
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = InducedFrom::Optimal)]
        from: InducedFrom,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Test whether a measure is induced by a randomized (LR) or deterministic (LA) policy.
    CheckMeasure {
        team: PathBuf,
        measure: PathBuf,
        #[arg(long, value_enum, default_value_t = MeasureClass::Lr)]
        class: MeasureClass,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Write a bundled example document.
    Example {
        #[arg(value_enum)]
        name: ExampleName,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        horizon: usize,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Worked problems.
    Case {
        #[command(subcommand)]
        case: Case,
    },
}

#[derive(Debug, Subcommand)]
enum Case {
    /// Binary-noise Witsenhausen team over a list of grid offsets.
    Wd {
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.2, 0.1])]
        eps: Vec<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Discretized Gaussian Witsenhausen team from the best affine start.
    Wg {
        #[arg(long, default_value_t = 0.2)]
        k: f64,
        #[arg(long, default_value_t = 5.0)]
        sigma: f64,
        #[arg(long, default_value_t = 21)]
        bins: usize,
        #[arg(long, default_value_t = 3.0)]
        trunc: f64,
        #[arg(long, default_value_t = 100)]
        sweeps: usize,
        /// Rescale the likelihood ratio to sum to one for each first action.
        #[arg(long)]
        normalize_likelihood: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// POMDP solved as a team and by belief value iteration.
    Pomdp {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
        state_cap: usize,
    },
}

fn run(cli: &Cli, exec: Execution) -> Result<Outcome, CliError> {
    let seed = cli.seed;
    match &cli.command {
        Command::Validate { team } => validate(team, seed),
        Command::Solve {
            team,
            algorithm,
            init,
            check_oracle,
            sweeps,
            state_cap,
            stage_policy_cap,
            oracle_cap,
            out: _,
            policy_out,
        } => solve(
            team,
            &SolveArgs {
                algorithm: *algorithm,
                init: *init,
                check_oracle: *check_oracle,
                sweeps: *sweeps,
                state_cap: *state_cap,
                stage_policy_cap: *stage_policy_cap,
                oracle_cap: *oracle_cap,
                execution: exec,
                policy_out: policy_out.clone(),
            },
            seed,
        ),
        Command::Example {
            name,
            out,
            horizon,
            eps,
        } => example(*name, *horizon, *eps, out, seed),
        Command::Brute { team, cap } => brute(team, *cap, exec, seed),
        Command::Reduce {
            team,
            out,
            references,
            probe,
        } => reduce(team, references.as_deref(), out.as_deref(), *probe, exec, seed),
        Command::Induce {
            team,
            policy,
            from,
            out,
        } => induce(team, policy.as_deref(), *from, out.as_deref(), seed),
        Command::CheckMeasure {
            team,
            measure,
            class,
            tol,
        } => check_measure(team, measure, *class, *tol, seed),
        Command::Case { case } => match case {
            Case::Wd { k, eps, csv } => case_wd(*k, eps, csv.as_ref(), exec, seed),
            Case::Wg {
                k,
                sigma,
                bins,
                trunc,
                sweeps,
                normalize_likelihood,
                csv,
            } => case_wg(
                &GaussianArgs {
                    k: *k,
                    sigma: *sigma,
                    bins: *bins,
                    trunc: *trunc,
                    sweeps: *sweeps,
                    normalize_likelihood: *normalize_likelihood,
                },
                csv.as_ref(),
                exec,
                seed,
            ),
            Case::Pomdp {
                file,
                horizon,
                state_cap,
            } => case_pomdp(file, *horizon, *state_cap, exec, seed),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let start = Instant::now();
    let result = par::with_workers(par::workers_from_env(), || {
        run(&cli, exec).map(|o| (o, par::current_workers()))
    });
    match result {
        Ok((mut outcome, workers)) => {
            if !cli.no_runtime {
                outcome.report.runtime = Some(Runtime {
                    wall_clock_seconds: start.elapsed().as_secs_f64(),
                    workers,
                });
            }
            let text = files::to_json(&outcome.report);
            let target = match &cli.command {
                Command::Solve { out: Some(p), .. } => Some(p),
                _ => cli.report.as_ref(),
            };
            match target {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &text) {
                        eprintln!("error: {}: {e}", path.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
