use std::fmt::Display;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sis_opinion::dynamics::{simulate, SimConfig};
use sis_opinion::equilibria::{
    endemic_stability_check, solve_endemic, EquilibriumClass, SolveOptions,
};
use sis_opinion::intervention::{
    critical_uniform_opinion, respond, AllocateOptions, RespondOptions,
};
use sis_opinion::linalg::max_abs_diff;
use sis_opinion::scenario::{load_scenario, save_scenario, ScenarioFile};
use sis_opinion::spectral::{healthy_verdict, reproduction_extremes, Severity};
use sis_opinion::synthetic::{regime_params, SmallWorld};
use sis_opinion::trajectory_io::{emit_plot, write_trajectory};
use sis_opinion::{Error, Matrix, Result};

#[derive(Parser)]
#[command(
    name = "sis-opinion",
    version,
    about = "Networked SIS epidemics with polar opinion dynamics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate the coupled map from the scenario's initial state.
    Simulate {
        scenario: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        horizon: usize,
        /// Stop once the joint step falls below this.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Trajectory CSV (k,node,x,z).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Two-panel SVG plot.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Reproduction-number extremes, severity and the healthy-state verdict.
    Analyze { scenario: PathBuf },
    /// Solve for an equilibrium and check the sufficient stability conditions.
    Equilibrium {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 1_000_000)]
        max_iter: usize,
        /// Number of starts: the default interior start plus random ones.
        #[arg(long, default_value_t = 1)]
        starts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Severity-driven response plan.
    Respond {
        scenario: PathBuf,
        #[arg(long)]
        budget: f64,
        /// JSON array of rows (n x m, nonnegative); identity if omitted.
        #[arg(long)]
        input_matrix: Option<PathBuf>,
        #[arg(long)]
        json: bool,
        /// Seed of the opinion-floor estimates.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write a synthetic scenario.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Uniform opinion level at which the reproduction number equals one.
    Threshold { scenario: PathBuf },
}

#[derive(Subcommand)]
enum GenerateKind {
    /// Small-world physical and social layers.
    Ws {
        #[arg(long, default_value_t = 46)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 0.1)]
        p: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Regime::Moderate)]
        regime: Regime,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Regime {
    Mild,
    Moderate,
    Severe,
}

impl From<Regime> for Severity {
    fn from(r: Regime) -> Self {
        match r {
            Regime::Mild => Severity::Mild,
            Regime::Moderate => Severity::Moderate,
            Regime::Severe => Severity::Severe,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NonConvergence { .. } => 3,
        Error::Io(_) => 4,
        _ => 2,
    }
}

/// Serialized name of a unit enum variant.
fn tag<S: serde::Serialize>(v: S) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

fn fmt_vec<T: Display>(v: &[T]) -> String {
    let parts: Vec<String> = v.iter().map(|a| format!("{a:.10}")).collect();
    format!("[{}]", parts.join(", "))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            horizon,
            tol,
            out,
            plot,
        } => {
            let (p, s0) = load_scenario(&scenario)?;
            let cfg = SimConfig {
                horizon,
                conv_tol: tol,
                record_every: 1,
            };
            let traj = simulate(&p, &s0.x, &s0.z, &cfg)?;
            let last = traj.last();
            println!("steps: {}", last.k);
            println!("stop: {}", tag(traj.stop_reason));
            println!("max x: {:.10}", last.x.iter().copied().fold(0.0, f64::max));
            println!(
                "mean z: {:.10}",
                last.z.iter().sum::<f64>() / last.z.len() as f64
            );
            if let Some(path) = out {
                write_trajectory(&traj, path)?;
            }
            if let Some(path) = plot {
                emit_plot(&traj, path)?;
            }
        }
        Command::Analyze { scenario } => {
            let (p, _) = load_scenario(&scenario)?;
            let ex = reproduction_extremes(&p)?;
            let v = healthy_verdict(&p)?;
            println!("n: {}", p.n());
            println!("r_min: {:.10}", ex.r_min);
            println!("r_max: {:.10}", ex.r_max);
            println!("severity: {}", ex.severity.as_str());
            println!("healthy state: {}", tag(v.verdict));
            println!("origin jacobian radius: {:.10}", v.origin_jacobian_radius);
        }
        Command::Equilibrium {
            scenario,
            tol,
            max_iter,
            starts,
            seed,
        } => {
            let (p, _) = load_scenario(&scenario)?;
            let opts = SolveOptions { tol, max_iter };
            let rec = solve_endemic(&p, None, &opts)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut spread: f64 = 0.0;
            for _ in 1..starts.max(1) {
                let x: Vec<f64> = (0..p.n()).map(|_| rng.random_range(0.01..1.0)).collect();
                let z: Vec<f64> = (0..p.n()).map(|_| rng.random::<f64>()).collect();
                let other = solve_endemic(&p, Some((&x, &z)), &opts)?;
                spread = spread
                    .max(max_abs_diff(&other.x_star, &rec.x_star))
                    .max(max_abs_diff(&other.z_star, &rec.z_star));
            }
            println!("class: {}", tag(rec.class));
            println!("iterations: {}", rec.solver_iterations);
            println!("residual_x: {:e}", rec.residual_x);
            println!("residual_z: {:e}", rec.residual_z);
            println!("consensus: {}", rec.consensus);
            println!("infection bound: {}", rec.infection_bound);
            println!("opinion spread bound: {}", rec.opinion_spread_bound);
            if rec.class == EquilibriumClass::Endemic {
                let st = endemic_stability_check(&rec, &p)?;
                println!("stability: {}", tag(st));
            }
            if starts > 1 {
                println!("starts: {starts} (max deviation {spread:e})");
            }
            println!("x*: {}", fmt_vec(&rec.x_star));
            println!("z*: {}", fmt_vec(&rec.z_star));
        }
        Command::Respond {
            scenario,
            budget,
            input_matrix,
            json,
            seed,
        } => {
            let (p, _) = load_scenario(&scenario)?;
            let c = match input_matrix {
                Some(path) => {
                    let rows: Vec<Vec<f64>> = serde_json::from_str(&std::fs::read_to_string(path)?)
                        .map_err(|e| Error::Schema(format!("input matrix: {e}")))?;
                    Matrix::from_rows(&rows)?
                }
                None => Matrix::identity(p.n()),
            };
            let mut opts = RespondOptions::default();
            opts.allocate = AllocateOptions {
                protocol: sis_opinion::intervention::FloorProtocol {
                    seed,
                    ..opts.allocate.protocol
                },
                ..opts.allocate
            };
            let plan = respond(&p, &c, budget, &opts)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&plan).expect("plan serializes")
                );
            } else {
                println!("branch: {}", plan.branch.as_str());
                println!("r_min: {:.10}", plan.r_min);
                println!("r_max: {:.10}", plan.r_max);
                if let Some(r) = plan.r_at_floor {
                    println!("r_at_floor: {r:.10}");
                }
                if let Some(u) = &plan.u_star {
                    println!("u*: {}", fmt_vec(u));
                }
                if let Some(rec) = &plan.endemic_record {
                    println!("x*: {}", fmt_vec(&rec.x_star));
                }
                if !plan.medical_priority.is_empty() {
                    let top: Vec<String> = plan
                        .medical_priority
                        .iter()
                        .take(5)
                        .map(|m| format!("{} ({:.4})", m.node, m.weight))
                        .collect();
                    println!("medical priority: {}", top.join(", "));
                }
                let tags: Vec<String> = plan.measures.iter().map(tag).collect();
                println!("measures: [{}]", tags.join(", "));
                for d in &plan.diagnostics {
                    println!("note: {d}");
                }
            }
        }
        Command::Generate {
            kind:
                GenerateKind::Ws {
                    n,
                    k,
                    p,
                    seed,
                    regime,
                    out,
                },
        } => {
            let layout = SmallWorld { n, k, p, seed };
            let params = regime_params(&layout, regime.into())?;
            save_scenario(&ScenarioFile::from_small_world(&params, &layout), &out)?;
        }
        Command::Threshold { scenario } => {
            let (p, _) = load_scenario(&scenario)?;
            println!("a*: {:.12}", critical_uniform_opinion(&p)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
