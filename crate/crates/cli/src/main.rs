//! Command-line front end: validate models, run simulations emitting
//! line-delimited traces, list behaviour transitions and dump network
//! states.
//!
//! Exit codes: 0 success, 1 validation failure, 2 parse failure, 3 runtime
//! error.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use shape_calculus::behaviour::{behaviour_actions, delay_limit, Behaviour};
use shape_calculus::model::{build_model, parse_model, print_model, BuiltModel, ModelFile};
use shape_calculus::network::{SchedulerPolicy, Simulation};
use shape_calculus::Tolerances;

const EXIT_VALIDATION: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "shapecalc",
    about = "Simulator for 3D shapes with timed binding behaviours",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Print extra progress information to stderr.
    #[arg(long, global = true)]
    verbose: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Canonical,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a model; exit 0 when it is well-formed.
    Check { model: PathBuf },
    /// Run a model, writing one trace event per line.
    Run {
        model: PathBuf,
        /// Movement time step override.
        #[arg(long)]
        delta: Option<f64>,
        /// Scheduler seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Stop after this many evolution steps.
        #[arg(long)]
        max_steps: Option<u64>,
        /// Stop once the clock reaches this time.
        #[arg(long)]
        max_time: Option<f64>,
        /// Scheduler policy override.
        #[arg(long, value_enum)]
        policy: Option<PolicyArg>,
        /// Probability of spontaneous weak splits per bond per step.
        #[arg(long)]
        p_omega: Option<f64>,
        /// Trace file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the transitions of a behaviour up to a depth bound.
    Lts {
        model: PathBuf,
        /// Name of a behaviour defined in the model.
        behaviour: String,
        /// How many transition levels to explore.
        #[arg(long, default_value_t = 3)]
        depth: usize,
    },
    /// Print the network state after some number of steps.
    State {
        model: PathBuf,
        #[arg(long, default_value_t = 0)]
        steps: u64,
    },
    /// Parse a model and print its canonical form.
    Fmt { model: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

/// Tolerance defaults may be overridden through the environment:
/// `SHC_EPS_LEN`, `SHC_EPS_T`, `SHC_MAX_BISECT`.
fn tolerances_from_env() -> Result<Tolerances, String> {
    let mut tol = Tolerances::default();
    if let Ok(v) = std::env::var("SHC_EPS_LEN") {
        tol.eps_len = v
            .parse()
            .map_err(|_| format!("SHC_EPS_LEN: not a number: {v}"))?;
    }
    if let Ok(v) = std::env::var("SHC_EPS_T") {
        tol.eps_t = v
            .parse()
            .map_err(|_| format!("SHC_EPS_T: not a number: {v}"))?;
    }
    if let Ok(v) = std::env::var("SHC_MAX_BISECT") {
        tol.max_bisect = v
            .parse()
            .map_err(|_| format!("SHC_MAX_BISECT: not an integer: {v}"))?;
    }
    tol.validate()?;
    Ok(tol)
}

fn load(path: &PathBuf) -> Result<(ModelFile, String), ExitCode> {
    let src = match fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(ExitCode::from(EXIT_RUNTIME));
        }
    };
    match parse_model(&src) {
        Ok(m) => Ok((m, src)),
        Err(e) => {
            eprintln!("parse error in {}: {e}", path.display());
            Err(ExitCode::from(EXIT_PARSE))
        }
    }
}

fn build(model: &ModelFile, tol: &Tolerances) -> Result<BuiltModel, ExitCode> {
    match build_model(model, tol) {
        Ok(b) => Ok(b),
        Err(violations) => {
            eprintln!("validation failed:");
            for v in violations {
                eprintln!("  {v}");
            }
            Err(ExitCode::from(EXIT_VALIDATION))
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, String> {
    let tol = tolerances_from_env()?;
    match cli.command {
        Command::Check { model } => {
            let (m, _) = match load(&model) {
                Ok(v) => v,
                Err(code) => return Ok(code),
            };
            match build(&m, &tol) {
                Ok(built) => {
                    println!(
                        "ok: {} processes, {} behaviours, {} shapes",
                        built.network.len(),
                        built.env.len(),
                        m.shapes.len()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(code) => Ok(code),
            }
        }
        Command::Run {
            model,
            delta,
            seed,
            max_steps,
            max_time,
            policy,
            p_omega,
            out,
        } => {
            let (m, _) = match load(&model) {
                Ok(v) => v,
                Err(code) => return Ok(code),
            };
            let mut built = match build(&m, &tol) {
                Ok(b) => b,
                Err(code) => return Ok(code),
            };
            // command-line overrides dominate the model's config block
            if let Some(v) = delta {
                built.config.delta = v;
            }
            if let Some(v) = seed {
                built.config.seed = v;
            }
            if let Some(v) = max_steps {
                built.config.max_steps = Some(v);
            }
            if let Some(v) = max_time {
                built.config.max_time = Some(v);
            }
            if let Some(v) = policy {
                built.config.policy = match v {
                    PolicyArg::Canonical => SchedulerPolicy::Canonical,
                    PolicyArg::Random => SchedulerPolicy::Random,
                };
            }
            if let Some(v) = p_omega {
                built.config.p_omega = v;
            }

            let mut sim = Simulation::new(built.network, built.env, built.steer, built.config)
                .map_err(|e| e.to_string())?;
            let sink: Box<dyn Write> = match &out {
                Some(path) => Box::new(BufWriter::new(
                    fs::File::create(path).map_err(|e| format!("cannot create trace file: {e}"))?,
                )),
                None => Box::new(BufWriter::new(io::stdout())),
            };
            let mut sink = sink;
            writeln!(sink, "{}", sim.config.trace_header().to_json_line())
                .map_err(|e| e.to_string())?;
            let mut io_error = None;
            let summary = sim
                .run(|event| {
                    if io_error.is_none() {
                        if let Err(e) = writeln!(sink, "{}", event.to_json_line()) {
                            io_error = Some(e);
                        }
                    }
                })
                .map_err(|e| e.to_string())?;
            if let Some(e) = io_error {
                return Err(format!("trace write failed: {e}"));
            }
            sink.flush().map_err(|e| e.to_string())?;
            drop(sink);
            eprintln!("{summary}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Lts {
            model,
            behaviour,
            depth,
        } => {
            let (m, _) = match load(&model) {
                Ok(v) => v,
                Err(code) => return Ok(code),
            };
            let built = match build(&m, &tol) {
                Ok(b) => b,
                Err(code) => return Ok(code),
            };
            if !built.env.contains_key(&behaviour) {
                eprintln!("validation failed:\n  behaviour `{behaviour}` is not defined");
                return Ok(ExitCode::from(EXIT_VALIDATION));
            }
            print_lts(&behaviour, &built, depth).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::State { model, steps } => {
            let (m, _) = match load(&model) {
                Ok(v) => v,
                Err(code) => return Ok(code),
            };
            let built = match build(&m, &tol) {
                Ok(b) => b,
                Err(code) => return Ok(code),
            };
            let names = built.process_names.clone();
            let mut sim = Simulation::new(built.network, built.env, built.steer, built.config)
                .map_err(|e| e.to_string())?;
            for _ in 0..steps {
                if sim.halted() {
                    break;
                }
                sim.evolution_step().map_err(|e| e.to_string())?;
            }
            println!("clock: {:?}", sim.clock());
            println!("processes: {}", sim.network.len());
            for (key, p) in sim.network.processes() {
                let name = names
                    .get((key.0 as usize).saturating_sub(1))
                    .map(|s| s.as_str())
                    .unwrap_or("?");
                let shape = p.shape();
                println!("process {} ({name}):", key.0);
                println!("  mass {:?}, ref {}, vel {:?}", shape.mass(), shape.ref_point(),
                    p.velocity().map(|v| v.to_string()));
                for (id, node) in p.nodes() {
                    println!("  node {id}: {}", node.behaviour);
                }
                for b in p.bonds() {
                    println!("  bond {} between {} and {}", b.name, b.a, b.b);
                }
            }
            let violations = sim.network.well_formed(&sim.env, &tol);
            if violations.is_empty() {
                println!("well-formed: yes");
            } else {
                println!("well-formed: no");
                for v in violations {
                    println!("  {v}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Fmt { model } => {
            let (m, _) = match load(&model) {
                Ok(v) => v,
                Err(code) => return Ok(code),
            };
            print!("{}", print_model(&m));
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Breadth-first listing of action derivatives and delay limits up to the
/// depth bound.
fn print_lts(name: &str, built: &BuiltModel, depth: usize) -> io::Result<()> {
    let env = &built.env;
    let mut states: Vec<Behaviour> = vec![Behaviour::constant(name)];
    let mut frontier: Vec<usize> = vec![0];
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut printed = 0usize;
    for _level in 0..=depth {
        let mut next: Vec<usize> = Vec::new();
        for &idx in &frontier {
            let term = states[idx].clone();
            let limit = delay_limit(&term, env)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
            let limit = if limit.is_infinite() {
                "inf".to_string()
            } else {
                format!("{limit:?}")
            };
            writeln!(out, "state {idx}: {term}")?;
            writeln!(out, "  delay limit: {limit}")?;
            let actions = behaviour_actions(&term, env)
                .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
            for (action, derivative) in actions {
                let target = match states.iter().position(|s| *s == derivative) {
                    Some(i) => i,
                    None => {
                        states.push(derivative);
                        let i = states.len() - 1;
                        next.push(i);
                        i
                    }
                };
                writeln!(out, "  --{action}--> state {target}")?;
            }
            printed += 1;
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    writeln!(out, "{printed} states printed, {} discovered", states.len())?;
    Ok(())
}
