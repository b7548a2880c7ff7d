//! Batch driver for locking-threshold computations and experiments.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use ringlock::analytic::{
    chain_locked_state, chain_threshold, ratio_upper_bound, ring_approximate_state,
    ring_standard_approximate_state, ring_upper_bound, standard_chain_locked_state,
};
use ringlock::coupling::CouplingFunction;
use ringlock::dynamics::{self, PhaseState, SystemConfig};
use ringlock::experiments::{
    convergence_experiment, counterexample_experiment, scatter_experiment,
    standard_residual_experiment, SettleSettings,
};
use ringlock::frequencies::FrequencyVector;
use ringlock::io::{self, Metadata};
use ringlock::thresholds::{estimate_threshold, ProbeSettings};
use ringlock::{Scheme, Topology};

const AFTER_HELP: &str = CouplingFunction::GRAMMAR;

#[derive(Parser)]
#[command(
    name = "ringlock",
    version,
    about = "Locking thresholds of rings and chains of phase oscillators"
)]
#[command(after_help = AFTER_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the chain threshold, ring bound and ratio bound; with --gamma,
    /// also the constructed chain state and its ring approximation
    #[command(after_help = AFTER_HELP)]
    Analytic {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long)]
        gamma: Option<f64>,
        /// Directory for the phase-difference tables
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate from θ = 0 and report whether the trajectory locks
    #[command(after_help = AFTER_HELP)]
    Simulate {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = Topology::Chain)]
        topology: Topology,
        #[arg(long)]
        gamma: f64,
        #[command(flatten)]
        integration: IntegrationArgs,
        /// Write the trajectory (time, theta_1, ...) to this file
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Record every this many steps in the trajectory
        #[arg(long, default_value_t = 8)]
        every: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate one locking threshold by bisection on gamma
    #[command(after_help = AFTER_HELP)]
    Threshold {
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = Topology::Chain)]
        topology: Topology,
        #[command(flatten)]
        integration: IntegrationArgs,
        #[command(flatten)]
        bisection: BisectionArgs,
    },
    /// Matched chain/ring thresholds over random frequency draws
    #[command(after_help = AFTER_HELP)]
    Scatter {
        #[arg(long = "f", default_value = "sin(1)", allow_hyphen_values = true)]
        f: String,
        #[arg(long, default_value_t = Scheme::Telescopic)]
        scheme: Scheme,
        #[arg(long, default_value_t = 25)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Seed of the first trial; trial i uses seed + i
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        integration: IntegrationArgs,
        #[command(flatten)]
        bisection: BisectionArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write a gnuplot script
        #[arg(long)]
        gnuplot: bool,
    },
    /// Decay of the chain/ring separation with N. With --scheme standard
    /// only the analytic residual of the standard construction is measured
    #[command(after_help = AFTER_HELP)]
    Convergence {
        #[arg(long = "f", default_value = "-sin(1)", allow_hyphen_values = true)]
        f: String,
        #[arg(long, default_value_t = Scheme::Telescopic)]
        scheme: Scheme,
        /// Gamma as a fraction of each realization's chain threshold
        #[arg(long, default_value_t = 0.5)]
        gamma_fraction: f64,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64,128")]
        sizes: Vec<usize>,
        /// Frequency draws per size
        #[arg(long, default_value_t = 16)]
        realizations: usize,
        /// Size N draws use seed + N (plus multiples of 2^32 for later draws)
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = dynamics::DEFAULT_DT)]
        dt: f64,
        /// Stop integrating once the frequency spread is below this
        #[arg(long, default_value_t = SettleSettings::default().spread_tol)]
        spread_tol: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        gnuplot: bool,
    },
    /// Check the four-oscillator example where the chain locks but the ring cannot
    Counterexample {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SystemArgs {
    /// Coupling function (grammar below)
    #[arg(long = "f", default_value = "sin(1)", allow_hyphen_values = true)]
    f: String,
    #[arg(long, default_value_t = Scheme::Telescopic)]
    scheme: Scheme,
    /// Number of oscillators for a random draw
    #[arg(long, default_value_t = 25)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Base frequencies, one per line; overrides --n and --seed
    #[arg(long)]
    eta: Option<PathBuf>,
}

impl SystemArgs {
    fn load(&self) -> anyhow::Result<(CouplingFunction, FrequencyVector)> {
        let f = CouplingFunction::parse(&self.f)?;
        let fv = match &self.eta {
            Some(path) => io::read_frequency_vector(path)
                .with_context(|| format!("reading {}", path.display()))?,
            None => FrequencyVector::sample_uniform(self.n, self.seed)?,
        };
        Ok((f, fv))
    }

    fn metadata(&self, f: &CouplingFunction, fv: &FrequencyVector) -> Metadata {
        Metadata::new()
            .with("f", f.to_string())
            .with("scheme", self.scheme)
            .with("n", fv.len())
            .with("seed", fv.seed())
            .with("eta", fv.eta())
    }
}

#[derive(Args)]
struct IntegrationArgs {
    #[arg(long, default_value_t = dynamics::DEFAULT_DT)]
    dt: f64,
    /// Transient time before observation
    #[arg(long, default_value_t = dynamics::DEFAULT_TRANSIENT)]
    transient: f64,
    /// Length of the observation window
    #[arg(long, default_value_t = dynamics::DEFAULT_OBSERVATION)]
    observe: f64,
    /// Lock tolerance on frequency spread and phase drift
    #[arg(long, default_value_t = dynamics::DEFAULT_LOCK_TOL)]
    tol: f64,
}

#[derive(Args)]
struct BisectionArgs {
    /// Relative width at which bisection stops
    #[arg(long, default_value_t = ringlock::thresholds::DEFAULT_REL_TOL)]
    rel_tol: f64,
}

fn probe_settings(i: &IntegrationArgs, b: &BisectionArgs) -> ProbeSettings {
    ProbeSettings {
        dt: i.dt,
        transient_time: i.transient,
        observation_time: i.observe,
        lock_tolerance: i.tol,
        rel_tol: b.rel_tol,
        ..ProbeSettings::default()
    }
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn analytic(system: &SystemArgs, gamma: Option<f64>, out: Option<&Path>) -> anyhow::Result<()> {
    let (f, fv) = system.load()?;
    let p = f.profile()?;
    let cd = fv.cumulative_deviations();
    println!("f               {f}");
    println!("f_upper         {}", p.f_upper);
    println!("f_lower         {}", p.f_lower);
    println!("max |f'|        {}", p.max_abs_derivative);
    println!("x0              {}", p.positive_slope_zero);
    println!("D_upper         {}", cd.upper);
    println!("D_lower         {}", cd.lower);
    println!("chain threshold {}", chain_threshold(&p, &cd));
    println!("ring bound      {}", ring_upper_bound(&p, &cd));
    println!("ratio bound     {}", ratio_upper_bound(&p));
    let Some(gamma) = gamma else {
        return Ok(());
    };
    let (chain, approx) = match system.scheme {
        Scheme::Telescopic => {
            let chain = chain_locked_state(&f, &p, &fv, gamma)?;
            let approx = ring_approximate_state(&f, &p, &cd, &chain)?;
            (chain, approx)
        }
        Scheme::Standard => {
            let chain = standard_chain_locked_state(&f, &p, &fv, gamma)?;
            let approx = ring_standard_approximate_state(&f, &p, &fv, &chain)?;
            (chain, approx)
        }
    };
    println!("omega           {}", chain.omega);
    println!("stable          {}", chain.stable);
    println!("phi (chain)     {:?}", chain.phi);
    println!("psi             {}", approx.psi);
    println!("phi (ring)      {:?}", approx.phi_ring);
    println!("ring residual   {}", approx.max_residual());
    println!("residual bound  {}", approx.residual_bound);
    if let Some(dir) = out {
        create_dir(dir)?;
        let meta = system.metadata(&f, &fv).with("gamma", gamma);
        let chain_path = dir.join("chain_state.csv");
        io::write_phase_differences(&chain_path, &chain.phi)?;
        meta.clone()
            .with("topology", Topology::Chain)
            .with("omega", chain.omega)
            .with("stable", chain.stable)
            .write(&io::sidecar_path(&chain_path))?;
        let ring_path = dir.join("ring_approximation.csv");
        io::write_phase_differences(&ring_path, &approx.phi_ring)?;
        meta.with("topology", Topology::Ring)
            .with("psi", approx.psi)
            .with("x0", approx.x0)
            .with("max_residual", approx.max_residual())
            .with("residual_bound", approx.residual_bound)
            .write(&io::sidecar_path(&ring_path))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn simulate(
    system: &SystemArgs,
    topology: Topology,
    gamma: f64,
    integration: &IntegrationArgs,
    trajectory: Option<&Path>,
    every: usize,
    out: Option<&Path>,
) -> anyhow::Result<()> {
    let (f, fv) = system.load()?;
    let cfg = SystemConfig {
        dt: integration.dt,
        transient_time: integration.transient,
        observation_time: integration.observe,
        lock_tolerance: integration.tol,
        ..SystemConfig::new(f.clone(), fv.clone(), gamma, topology, system.scheme)
    };
    let start = PhaseState::zeros(fv.len());
    let (verdict, end) = dynamics::detect_lock_with_state(&cfg, &start)?;
    println!("locked          {}", verdict.locked);
    println!("frequency spread {:e}", verdict.max_frequency_spread);
    println!("phase drift     {:e}", verdict.max_phase_drift);
    println!("omega           {}", verdict.omega_hat);
    if let Some(path) = trajectory {
        let samples = dynamics::integrate_recording(
            &cfg,
            &start,
            cfg.transient_time + cfg.observation_time,
            every,
        )?;
        io::write_trajectory(path, &samples)?;
    }
    if let Some(dir) = out {
        create_dir(dir)?;
        let path = dir.join("final_state.csv");
        io::write_phase_differences(&path, &end.phase_differences())?;
        system
            .metadata(&f, &fv)
            .with("gamma", gamma)
            .with("topology", topology)
            .with("verdict", verdict)
            .with("config", &cfg)
            .write(&io::sidecar_path(&path))?;
    }
    Ok(())
}

fn threshold(
    system: &SystemArgs,
    topology: Topology,
    integration: &IntegrationArgs,
    bisection: &BisectionArgs,
) -> anyhow::Result<()> {
    let (f, fv) = system.load()?;
    let p = f.profile()?;
    let cd = fv.cumulative_deviations();
    let settings = probe_settings(integration, bisection);
    let est = estimate_threshold(&f, &p, &fv, topology, system.scheme, &settings)?;
    println!("empirical threshold {}", est.estimate());
    println!("gamma_low       {}", est.gamma_low);
    println!("gamma_high      {}", est.gamma_high);
    println!("iterations      {}", est.iterations);
    let (label, cap) = match topology {
        Topology::Chain => ("chain threshold", chain_threshold(&p, &cd)),
        Topology::Ring => ("ring bound     ", ring_upper_bound(&p, &cd)),
    };
    println!("{label} {cap}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn scatter(
    f: &str,
    scheme: Scheme,
    n: usize,
    trials: usize,
    seed: u64,
    settings: &ProbeSettings,
    out: &Path,
    gnuplot: bool,
) -> anyhow::Result<()> {
    let f = CouplingFunction::parse(f)?;
    let report = scatter_experiment(&f, scheme, n, trials, seed, settings)?;
    create_dir(out)?;
    let path = out.join("scatter.csv");
    let meta = Metadata::new()
        .with("f", f.to_string())
        .with("scheme", scheme)
        .with("n", n)
        .with("trials", trials)
        .with("seed", seed)
        .with("settings", settings)
        .with("summary", &report.summary)
        .with(
            "note",
            "thresholds are empirical: locking of the trajectory from theta = 0",
        );
    io::write_table_with_metadata(&path, &report.rows, &meta)?;
    if gnuplot {
        io::write_text(
            &out.join("scatter.gp"),
            &io::scatter_gnuplot("scatter.csv", report.summary.ratio_bound),
        )?;
    }
    let s = &report.summary;
    println!("trials          {}", s.trials);
    println!("max ratio       {}", s.max_ratio);
    println!("min ratio       {}", s.min_ratio);
    println!(
        "below 1         {} ({:.3})",
        s.below_one, s.fraction_below_one
    );
    println!("ratio bound     {}", s.ratio_bound);
    println!("above bound     {}", s.above_bound);
    println!("wrote           {}", path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn convergence(
    f: &str,
    scheme: Scheme,
    gamma_fraction: f64,
    sizes: &[usize],
    realizations: usize,
    seed: u64,
    settle: &SettleSettings,
    out: &Path,
    gnuplot: bool,
) -> anyhow::Result<()> {
    let f = CouplingFunction::parse(f)?;
    create_dir(out)?;
    let meta = Metadata::new()
        .with("f", f.to_string())
        .with("scheme", scheme)
        .with("gamma_fraction", gamma_fraction)
        .with("sizes", sizes)
        .with("realizations", realizations)
        .with("seed", seed);
    let rows_path = out.join("convergence.csv");
    let sizes_path = out.join("convergence_sizes.csv");
    match scheme {
        Scheme::Telescopic => {
            let r = convergence_experiment(&f, gamma_fraction, sizes, realizations, seed, settle)?;
            let meta = meta
                .with("settle", settle)
                .with("separation_slope", r.separation_slope)
                .with("residual_slope", r.residual_slope)
                .with("bound_violations", r.bound_violations);
            io::write_table_with_metadata(&rows_path, &r.rows, &meta)?;
            io::write_table(&sizes_path, &r.sizes)?;
            for s in &r.sizes {
                println!(
                    "N = {:4}  separation {:.4e}  residual {:.4e}  bound {:.4e}",
                    s.n, s.mean_separation, s.mean_residual, s.mean_bound
                );
            }
            println!("separation slope {}", fmt_slope(r.separation_slope));
            println!("residual slope  {}", fmt_slope(r.residual_slope));
            println!("bound violations {}", r.bound_violations);
        }
        Scheme::Standard => {
            let r = standard_residual_experiment(&f, gamma_fraction, sizes, realizations, seed)?;
            let missing = r.rows.iter().filter(|row| !row.found).count();
            let meta = meta
                .with("ring_residual_slope", r.ring_residual_slope)
                .with("chains_without_solution", missing);
            io::write_table_with_metadata(&rows_path, &r.rows, &meta)?;
            io::write_table(&sizes_path, &r.sizes)?;
            for s in &r.sizes {
                println!(
                    "N = {:4}  ring residual {:.4e}  bound {:.4e}  ({} draws)",
                    s.n, s.mean_residual, s.mean_bound, s.count
                );
            }
            println!("ring residual slope {}", fmt_slope(r.ring_residual_slope));
            println!("chains without solution {missing}");
        }
    }
    if gnuplot {
        io::write_text(
            &out.join("convergence.gp"),
            &io::convergence_gnuplot("convergence_sizes.csv"),
        )?;
    }
    println!("wrote           {}", rows_path.display());
    Ok(())
}

fn fmt_slope(s: Option<f64>) -> String {
    s.map_or_else(|| "n/a (single size)".to_string(), |v| v.to_string())
}

fn counterexample(out: Option<&Path>) -> anyhow::Result<bool> {
    let report = counterexample_experiment()?;
    println!("eta = {:?}", report.eta);
    for c in &report.checks {
        let tag = if c.passed { "pass" } else { "FAIL" };
        println!("[{tag}] {}: {}", c.name, c.detail);
    }
    if let Some(dir) = out {
        create_dir(dir)?;
        io::write_text(
            &dir.join("counterexample.json"),
            &(serde_json::to_string_pretty(&report)? + "\n"),
        )?;
    }
    Ok(report.all_passed())
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Analytic { system, gamma, out } => analytic(&system, gamma, out.as_deref())?,
        Command::Simulate {
            system,
            topology,
            gamma,
            integration,
            trajectory,
            every,
            out,
        } => simulate(
            &system,
            topology,
            gamma,
            &integration,
            trajectory.as_deref(),
            every,
            out.as_deref(),
        )?,
        Command::Threshold {
            system,
            topology,
            integration,
            bisection,
        } => threshold(&system, topology, &integration, &bisection)?,
        Command::Scatter {
            f,
            scheme,
            n,
            trials,
            seed,
            integration,
            bisection,
            out,
            gnuplot,
        } => {
            if trials == 0 {
                bail!("--trials must be positive");
            }
            let settings = probe_settings(&integration, &bisection);
            scatter(&f, scheme, n, trials, seed, &settings, &out, gnuplot)?
        }
        Command::Convergence {
            f,
            scheme,
            gamma_fraction,
            sizes,
            realizations,
            seed,
            dt,
            spread_tol,
            out,
            gnuplot,
        } => {
            let settle = SettleSettings {
                dt,
                spread_tol,
                ..SettleSettings::default()
            };
            convergence(
                &f,
                scheme,
                gamma_fraction,
                &sizes,
                realizations,
                seed,
                &settle,
                &out,
                gnuplot,
            )?
        }
        Command::Counterexample { out } => return counterexample(out.as_deref()),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
