//! `thermocap`: capacity bounds, collision-model thermalization and local thermalization demos.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use config::*;
use output::{render, Format};

const AFTER_HELP: &str = "\
Output:
  json   {\"header\": {...}, \"body\": {...}}; the body is deterministic for a fixed seed.
  csv    first line '# <header json>', then a header row starting with schema_version.
  table  first line '# <header json>', then aligned columns and notes.

CSV columns:
  bounds      name,value,kind,method,tol (one row per bound, last row 'consistency')
  thermo      n,t,residual,residual_kind,thermalized
  localtherm  d,kappa,kappa_star,success,success_kind,analytic,threshold,epsilon,capacity_lb,
              capacity_lb_kind,fef,fef_kind,entangled,min_pt_eigenvalue,marginal_deviation,
              marginals_hold
  asym        m,trials,kappa,mean,mean_kind,stderr,d_s,rhs,passes
  fef         d,fef,fef_kind,restarts,converged,witness
  sweep       localtherm columns for kappa; <param>,capacity_lower,capacity_lower_kind,
              theorem1_upper,theorem1_upper_kind,consistent for epsilon and delta

Config files are JSON objects holding the command fields plus optional seed, format, out and
tol. Flags override file values. Values starting with '@' are read from a JSON file.

Exit codes: 0 all checks pass, 1 a built-in check failed, 2 bad config or input,
3 precondition, dimension guard or solver failure.";

#[derive(Parser)]
#[command(name = "thermocap", version, about = "Thermodynamic capacity bounds and thermalization checks", after_help = AFTER_HELP)]
struct Cli {
    /// JSON config file for the command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for every randomized step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true, env = "THERMOCAP_JOBS")]
    jobs: Option<usize>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Tolerance override, NAME=VALUE (repeatable). Names: hermitian, psd, support, trace, povm,
    /// free, sdp_gap, closure, convergence.
    #[arg(long = "tol", global = true)]
    tol: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One-shot capacity lower bound against the preservability upper bounds.
    Bounds(BoundsArgs),
    /// Collision-model bath size for a state or channel.
    Thermo(ThermoArgs),
    /// Locally thermalizing channel with a maximally entangled message code.
    Localtherm(LocalthermArgs),
    /// Random codebook experiment for asymmetry.
    Asym(AsymArgs),
    /// Fully entangled fraction of a bipartite state.
    Fef(FefArgs),
    /// Parameter sweep over kappa, epsilon or delta.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct BoundsArgs {
    /// Channel, e.g. dephasing:4, depolarizing:2:0.3, constant:0.7,0.3 or @choi.json.
    #[arg(long)]
    channel: Option<String>,
    /// Resource: coherence, athermality or @spec.json.
    #[arg(long)]
    spec: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Thermal populations, comma separated.
    #[arg(long)]
    thermal: Option<String>,
}

#[derive(Args)]
struct ThermoArgs {
    /// Energies, comma separated.
    #[arg(long)]
    hamiltonian: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    n_max: Option<usize>,
    /// full-swap or partial-swap.
    #[arg(long)]
    style: Option<String>,
    #[arg(long)]
    rate: Option<f64>,
    /// System state, e.g. basis:2:1 or plus.
    #[arg(long)]
    state: Option<String>,
    /// Channel whose outputs are thermalized.
    #[arg(long)]
    channel: Option<String>,
}

#[derive(Args)]
struct LocalthermArgs {
    #[arg(long)]
    d: Option<usize>,
    /// Sets beta_a, beta_b and beta_c.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    beta_a: Option<f64>,
    #[arg(long)]
    beta_b: Option<f64>,
    #[arg(long)]
    beta_c: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct AsymArgs {
    #[arg(long)]
    state: Option<String>,
    /// Order of the phase rotation group.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    kappa: Option<f64>,
}

#[derive(Args)]
struct FefArgs {
    /// Bipartite state, e.g. isotropic:2:0.5 or @state.json.
    #[arg(long)]
    state: Option<String>,
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// kappa, epsilon or delta.
    #[arg(long)]
    parameter: Option<String>,
    /// Grid, comma separated.
    #[arg(long)]
    values: Option<String>,
    /// Local dimension for a kappa sweep.
    #[arg(long)]
    d: Option<usize>,
    /// Common inverse temperature for a kappa sweep.
    #[arg(long)]
    beta: Option<f64>,
    /// Channel for an epsilon or delta sweep.
    #[arg(long)]
    channel: Option<String>,
}

fn energies(s: Option<&String>) -> CliResult<Option<Vec<f64>>> {
    s.map(|x| parse_list(x)).transpose()
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Bounds(_) => "bounds",
            Self::Thermo(_) => "thermo",
            Self::Localtherm(_) => "localtherm",
            Self::Asym(_) => "asym",
            Self::Fef(_) => "fef",
            Self::Sweep(_) => "sweep",
        }
    }

    /// Writes the flag overrides into the config object.
    fn overlay(&self, obj: &mut Map<String, Value>) -> CliResult<()> {
        match self {
            Self::Bounds(a) => {
                set(obj, "channel", a.channel.clone());
                set(obj, "spec", a.spec.clone());
                set(obj, "epsilon", a.epsilon);
                set(obj, "delta", a.delta);
                set(obj, "kappa", a.kappa);
                set(obj, "m_max", a.m_max);
                set(obj, "restarts", a.restarts);
                set(obj, "thermal", energies(a.thermal.as_ref())?.map(|p| json!({ "populations": p })));
            }
            Self::Thermo(a) => {
                set(obj, "hamiltonian", energies(a.hamiltonian.as_ref())?);
                set(obj, "beta", a.beta);
                set(obj, "epsilon", a.epsilon);
                set(obj, "n_max", a.n_max);
                set(obj, "style", a.style.clone());
                set(obj, "rate", a.rate);
                set(obj, "state", a.state.clone());
                set(obj, "channel", a.channel.clone());
            }
            Self::Localtherm(a) => {
                set(obj, "d", a.d);
                for k in ["beta_a", "beta_b", "beta_c"] {
                    set(obj, k, a.beta);
                }
                set(obj, "beta_a", a.beta_a);
                set(obj, "beta_b", a.beta_b);
                set(obj, "beta_c", a.beta_c);
                set(obj, "kappa", a.kappa);
                set(obj, "epsilon", a.epsilon);
            }
            Self::Asym(a) => {
                set(obj, "state", a.state.clone());
                set(obj, "group", a.order.map(|o| json!({ "phase_rotations": o })));
                set(obj, "m", a.m);
                set(obj, "trials", a.trials);
                set(obj, "kappa", a.kappa);
            }
            Self::Fef(a) => {
                set(obj, "state", a.state.clone());
                set(obj, "restarts", a.restarts);
            }
            Self::Sweep(a) => {
                set(obj, "parameter", a.parameter.clone());
                set(obj, "values", a.values.as_ref().map(|v| parse_list(v)).transpose()?);
                let kappa = obj.get("parameter").and_then(Value::as_str).map_or(a.channel.is_none(), |p| p == "kappa");
                if kappa {
                    if a.d.is_some() || a.beta.is_some() || !obj.contains_key("localtherm") {
                        let lt = nested(obj, "localtherm")?;
                        set(lt, "d", a.d);
                        for k in ["beta_a", "beta_b", "beta_c"] {
                            set(lt, k, a.beta);
                        }
                    }
                } else if a.channel.is_some() {
                    set(nested(obj, "bounds")?, "channel", a.channel.clone());
                }
            }
        }
        Ok(())
    }
}

fn run(cli: Cli) -> CliResult<i32> {
    let file = match &cli.config {
        Some(p) => match read_json(p)? {
            Value::Object(m) => m,
            _ => return Err(CliError::config(format!("{}: config must be a JSON object", p.display()))),
        },
        None => Map::new(),
    };
    let (common, mut obj) = split_common(file)?;
    cli.command.overlay(&mut obj)?;
    let seed = cli.seed.or(common.seed).unwrap_or(0);
    let tol = resolve_tolerances(&common.tol, &cli.tol)?;
    let format = match (cli.format, &common.format) {
        (Some(f), _) => f,
        (None, Some(s)) => Format::parse(s)?,
        (None, None) => Format::Json,
    };
    let out = cli.out.clone().or(common.out.as_ref().map(PathBuf::from));
    let jobs = cli.jobs.unwrap_or(1).max(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))?;

    let name = cli.command.name();
    let (resolved, report) = match &cli.command {
        Command::Bounds(_) => {
            let c: BoundsConfig = typed(obj, name)?;
            (json!(c), commands::bounds(&c, seed, &tol)?)
        }
        Command::Thermo(_) => {
            let c: ThermoConfig = typed(obj, name)?;
            (json!(c), commands::thermo(&c, seed)?)
        }
        Command::Localtherm(_) => {
            let c: LocalthermConfig = typed(obj, name)?;
            (json!(c), commands::localtherm(&c)?)
        }
        Command::Asym(_) => {
            let c: AsymConfig = typed(obj, name)?;
            (json!(c), commands::asym(&c, seed)?)
        }
        Command::Fef(_) => {
            let c: FefConfig = typed(obj, name)?;
            (json!(c), commands::fef_cmd(&c, seed)?)
        }
        Command::Sweep(_) => {
            let c: SweepConfig = typed(obj, name)?;
            (json!(c), commands::sweep(&c, seed, &tol)?)
        }
    };
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let header = json!({
        "tool": "thermocap",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "config": resolved,
        "seed": seed,
        "jobs": jobs,
        "tolerances": tol,
        "timestamp": timestamp,
    });
    let text = render(format, &header, &report)?;
    match out {
        Some(p) => std::fs::write(&p, text).map_err(|e| CliError::config(format!("cannot write {}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(if report.pass { 0 } else { EXIT_VIOLATION })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("thermocap: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
