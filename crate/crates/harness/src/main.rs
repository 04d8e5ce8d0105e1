use std::path::PathBuf;
use std::process::ExitCode;

use burgers_core::initial_data::{Family, FamilySpec};
use burgers_harness::{run_and_write, Equation, Experiment, ExperimentConfig, HarnessError};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "burgers-lab",
    version,
    about = "Long-time asymptotics experiments for viscous Burgers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Sup-norm decay sweep and power-law fit.
    Decay,
    /// Decay of sup |∂ₜⁿ∂ₓᵏ f|.
    Ddecay,
    /// Rescaled solution against the limit profile.
    Profile,
    /// Jump location by all routes.
    Zc,
    /// Concentration of the Hopf-Cole weight.
    Concentration,
    /// Structural properties of the rescaled phase.
    Properties,
    /// Heat solution against its self-similar profile.
    HeatProfile,
    /// Finite differences against the quadrature solution.
    FdCompare,
    /// Dump the solution on an (x, t) grid.
    Field,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Decay => Experiment::Decay,
            Command::Ddecay => Experiment::DerivativeDecay,
            Command::Profile => Experiment::Profile,
            Command::Zc => Experiment::CriticalZ,
            Command::Concentration => Experiment::Concentration,
            Command::Properties => Experiment::Properties,
            Command::HeatProfile => Experiment::HeatProfile,
            Command::FdCompare => Experiment::FdCompare,
            Command::Field => Experiment::Field,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum EquationArg {
    Burgers,
    Heat,
}

#[derive(clap::Args, Debug)]
struct Opts {
    /// JSON experiment configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Initial data family: PowerC0, PowerC1, PowerLog, SignFlipped, Asymmetric, Constant, Gaussian, Zero.
    #[arg(long, global = true)]
    family: Option<String>,
    #[arg(long, global = true)]
    kappa: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, value_enum, global = true)]
    equation: Option<EquationArg>,
    #[arg(long, global = true)]
    tmin: Option<f64>,
    #[arg(long, global = true)]
    tmax: Option<f64>,
    #[arg(long, global = true)]
    tcount: Option<usize>,
    /// Half-width of the excluded zone around the profile jump.
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Time derivative order for ddecay.
    #[arg(long = "dt-order", global = true)]
    dt_order: Option<usize>,
    /// Space derivative order for ddecay.
    #[arg(long = "dx-order", global = true)]
    dx_order: Option<usize>,
    /// Exit with status 4 if any experiment check fails.
    #[arg(long, global = true)]
    check: bool,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, HarnessError> {
    let o = &cli.opts;
    let experiment: Experiment = cli.command.into();
    let mut cfg = match &o.config {
        Some(p) => {
            let mut c = ExperimentConfig::from_json_file(p)?;
            c.experiment = experiment;
            c
        }
        None => ExperimentConfig::new(experiment, FamilySpec::power_c0(1.0, 0.5)),
    };
    if let Some(name) = &o.family {
        let family: Family = name
            .parse()
            .map_err(|e: burgers_core::Error| HarnessError::Config(e.to_string()))?;
        cfg.family.family = family;
    }
    if let Some(k) = o.kappa {
        cfg.family.kappa = k;
    }
    if let Some(a) = o.alpha {
        cfg.family.alpha = a;
    }
    if let Some(b) = o.beta {
        cfg.family.beta = Some(b);
    }
    if let Some(e) = o.equation {
        cfg.equation = match e {
            EquationArg::Burgers => Equation::Burgers,
            EquationArg::Heat => Equation::Heat,
        };
    }
    if let Some(t) = o.tmin {
        cfg.t_grid.t_min = t;
    }
    if let Some(t) = o.tmax {
        cfg.t_grid.t_max = t;
    }
    if let Some(c) = o.tcount {
        cfg.t_grid.count = c;
    }
    if let Some(e) = o.eps {
        cfg.exclusion_half_width = e;
    }
    if let Some(p) = &o.out {
        cfg.out_dir = p.clone();
    }
    if o.threads.is_some() {
        cfg.threads = o.threads;
    }
    if let Some(n) = o.dt_order {
        cfg.derivative_order.0 = n;
    }
    if let Some(k) = o.dx_order {
        cfg.derivative_order.1 = k;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(feature = "parallel")]
fn set_threads(n: Option<usize>) -> Result<(), HarnessError> {
    if let Some(n) = n {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_n: Option<usize>) -> Result<(), HarnessError> {
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = build_config(&cli).and_then(|cfg| {
        set_threads(cfg.threads)?;
        let out = run_and_write(&cfg)?;
        Ok(out)
    });
    match result {
        Ok(out) => {
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            let mut failed = false;
            for c in &out.checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
                failed |= !c.pass;
            }
            if cli.opts.check && failed {
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
