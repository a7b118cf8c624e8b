//! `hydrolimit` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::engine::{evolve_observed, Checkpoint, CurrentCounter, EventStream, EventTrace, ObserverPath};
use crate::error::{Error, Result};
use crate::flux::{build_flux_table, canonical_configuration, FluxTable};
use crate::harness::{
    check_flux, run_hydro_experiment, run_riemann_current, test_discrepancy_decay, test_macroscopic_stability,
    test_ordering, CurrentExperiment, ScalingExperiment,
};
use crate::io::{read_document, verify_outputs, GeometrySpec, OutputDir, RunConfig};
use crate::model::{Lattice, ValidationReport};
use crate::pde::{solve_cauchy_snapshots, InitialData};
use crate::rng::{derive_seed, tag};

/// Environment variable holding the worker count.
pub const WORKERS_VAR: &str = "HYDROLIMIT_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "hydrolimit", version, about = "Attractive particle systems in random environment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (TOML).
    pub config: PathBuf,
    /// Replaces the global seed of the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replaces the output directory of the configuration.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Checks the model assumptions one by one.
    Validate(Common),
    /// Builds the flux table of the model.
    EstimateFlux(Common),
    /// Solves the conservation law for the configured profile.
    SolvePde {
        #[command(flatten)]
        common: Common,
        /// Flux table document (defaults to `flux_table.json` in the output directory).
        #[arg(long)]
        flux: Option<PathBuf>,
    },
    /// Runs one trajectory and records the observer current.
    Simulate(Common),
    /// Runs the hydrodynamic and current experiments.
    HydroVerify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        flux: PathBuf,
    },
    /// Runs the coupling property suites.
    CoupleTest(Common),
    /// Re-derives every hash recorded in an output directory.
    VerifyOutputs { dir: PathBuf },
}

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    fn of(passed: bool) -> Self {
        if passed {
            Self::Pass
        } else {
            Self::Fail
        }
    }
}

/// Parses the arguments, runs the command and maps the result to exit
/// status 0 (pass), 1 (criterion failure) or 2 (configuration or structural
/// error).
pub fn main() -> ExitCode {
    configure_workers();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn configure_workers() {
    if let Some(n) = std::env::var(WORKERS_VAR).ok().and_then(|v| v.parse::<usize>().ok()) {
        // A second initialization (for example in tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

pub fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Validate(c) => cmd_validate(&load(&c)?),
        Command::EstimateFlux(c) => cmd_estimate_flux(&load(&c)?),
        Command::SolvePde { common, flux } => {
            let cfg = load(&common)?;
            let flux = flux.unwrap_or_else(|| cfg.output_dir.join("flux_table.json"));
            cmd_solve_pde(&cfg, &flux)
        }
        Command::Simulate(c) => cmd_simulate(&load(&c)?),
        Command::HydroVerify { common, flux } => cmd_hydro(&load(&common)?, &flux),
        Command::CoupleTest(c) => cmd_couple_test(&load(&c)?),
        Command::VerifyOutputs { dir } => cmd_verify_outputs(&dir),
    }
}

fn load(c: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&c.config)?;
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(d) = &c.output_dir {
        cfg.output_dir = d.clone();
    }
    Ok(cfg)
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T> {
    s.as_ref().ok_or_else(|| Error::Config(format!("missing [{name}] section")))
}

fn print_report(title: &str, report: &ValidationReport) {
    println!("{title}");
    print!("{report}");
    println!("{}", if report.passed() { "overall PASS" } else { "overall FAIL" });
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<Outcome> {
    let report = cfg.model.validate()?;
    print_report(&format!("model {}", cfg.model.family.name()), &report);
    Ok(Outcome::of(report.passed()))
}

pub fn cmd_estimate_flux(cfg: &RunConfig) -> Result<Outcome> {
    let flux = section(&cfg.flux, "flux")?;
    let grid = flux.grid(cfg.model.capacity)?;
    let params = flux.params(cfg.seed, &cfg.thresholds);
    let table = build_flux_table(&cfg.model, &grid, &params)?;
    let mut out = OutputDir::create(&cfg.output_dir, cfg)?;
    out.write_json("flux_table.json", "flux_table", &table)?;
    out.write_csv("flux_table.csv", |buf| table.write_csv(buf))?;
    let report = flux_report(cfg, &table);
    out.write_json("flux_summary.json", "flux_summary", &report)?;
    out.finish()?;
    print_report("flux table", &report);
    Ok(Outcome::of(report.passed()))
}

fn flux_report(cfg: &RunConfig, table: &FluxTable) -> ValidationReport {
    let v = cfg.model.lipschitz_bound();
    let mut report = ValidationReport::new();
    let cells = table.lipschitz_cells(v);
    let worst = cells.iter().map(|&(s, b)| s - b).fold(f64::NEG_INFINITY, f64::max);
    report.push("lipschitz", cells.iter().all(|&(s, b)| s <= b), format!("V = {v}, worst excess {worst:.3e}"));
    let flagged: Vec<String> = table
        .densities
        .iter()
        .zip(&table.diagnostics)
        .filter(|(_, d)| d.phase_flag || !d.halves_agree)
        .map(|(r, d)| format!("{r}{}{}", if d.phase_flag { " phase" } else { "" }, if d.halves_agree { "" } else { " halves" }))
        .collect();
    println!("diagnostic flags: {}", if flagged.is_empty() { "none".to_string() } else { flagged.join(", ") });
    report
}

fn load_flux(path: &Path) -> Result<FluxTable> {
    let doc = read_document::<FluxTable>(path)?;
    if doc.kind != "flux_table" {
        return Err(Error::Config(format!("{} holds a {} document, not a flux table", path.display(), doc.kind)));
    }
    Ok(doc.payload)
}

pub fn cmd_solve_pde(cfg: &RunConfig, flux_path: &Path) -> Result<Outcome> {
    let pde = section(&cfg.pde, "pde")?;
    let flux = load_flux(flux_path)?;
    check_flux(&cfg.model, &flux)?;
    let profile = pde.profile.as_ref().ok_or_else(|| Error::Config("[pde] needs a profile".into()))?.build(cfg.model.capacity)?;
    let times = if pde.times.is_empty() { vec![0.0] } else { pde.times.clone() };
    let speed = flux.max_slope().max(f64::MIN_POSITIVE);
    let snaps = solve_cauchy_snapshots(&flux, InitialData::Step(&profile), &times, speed, &pde.params())?;
    let mut out = OutputDir::create(&cfg.output_dir, cfg)?;
    out.write_csv("pde_solution.csv", |buf| {
        use std::io::Write;
        writeln!(buf, "time,x,value")?;
        for (t, g) in times.iter().zip(&snaps) {
            for (i, v) in g.values.iter().enumerate() {
                writeln!(buf, "{t:?},{:?},{v:?}", g.center(i))?;
            }
        }
        Ok(())
    })?;
    let masses: Vec<(f64, f64)> = times.iter().zip(&snaps).map(|(&t, g)| (t, g.mass())).collect();
    out.write_json("pde_summary.json", "pde_summary", &masses)?;
    out.finish()?;
    for (t, m) in &masses {
        println!("t = {t}: mass {m}");
    }
    Ok(Outcome::Pass)
}

#[derive(serde::Serialize)]
struct SimulationSummary {
    lattice_len: usize,
    horizon: f64,
    particles: u64,
    events: u64,
    current_plus: i64,
    current_minus: i64,
    current_tilde: i64,
    current_net: i64,
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let sim = section(&cfg.simulate, "simulate")?;
    let lattice = match sim.geometry {
        GeometrySpec::Ring => Lattice::ring(sim.lattice_len),
        GeometrySpec::Segment => Lattice::segment(sim.lattice_len),
    };
    let env = cfg.model.sample_environment(lattice, cfg.seed)?;
    let mut config = canonical_configuration(lattice, cfg.model.capacity, sim.density, derive_seed(cfg.seed, tag::INITIAL, 0))?;
    let mut stream = EventStream::new(derive_seed(cfg.seed, tag::EVENTS, 0), env.len(), env.mark_rate())?;
    let counter = CurrentCounter::new(lattice, ObserverPath::Linear { origin: 0, velocity: sim.observer_velocity })?;
    let mut out = OutputDir::create(&cfg.output_dir, cfg)?;
    let counter = if sim.trace {
        let mut obs = (counter, EventTrace::new(Vec::new())?);
        evolve_observed(&env, &mut config, sim.horizon, &mut stream, &mut obs)?;
        let log = obs.1.finish()?;
        out.write_csv("events.csv", |buf| {
            buf.extend_from_slice(&log);
            Ok(())
        })?;
        obs.0
    } else {
        let mut obs = counter;
        evolve_observed(&env, &mut config, sim.horizon, &mut stream, &mut obs)?;
        obs
    };
    let summary = SimulationSummary {
        lattice_len: sim.lattice_len,
        horizon: sim.horizon,
        particles: config.particle_count(),
        events: stream.emitted(),
        current_plus: counter.plus,
        current_minus: counter.minus,
        current_tilde: counter.tilde,
        current_net: counter.net(),
    };
    out.write_json("simulation.json", "simulation", &summary)?;
    out.write_json("checkpoint.json", "checkpoint", &Checkpoint::new(sim.horizon, config, stream))?;
    out.finish()?;
    println!("net current {} over time {}", counter.net(), sim.horizon);
    Ok(Outcome::Pass)
}

fn decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

pub fn cmd_hydro(cfg: &RunConfig, flux_path: &Path) -> Result<Outcome> {
    let hydro = section(&cfg.hydro, "hydro")?;
    let flux = load_flux(flux_path)?;
    check_flux(&cfg.model, &flux)?;
    let th = &cfg.thresholds;
    let mut out = OutputDir::create(&cfg.output_dir, cfg)?;
    let mut report = ValidationReport::new();
    for (i, named) in hydro.profiles.iter().enumerate() {
        let profile = named.profile.build(cfg.model.capacity)?;
        let mut exp = ScalingExperiment::new(
            cfg.model.clone(),
            flux.clone(),
            profile,
            hydro.scales.clone(),
            hydro.time,
            cfg.job_seeds(1 + i as u64, hydro.seeds),
        );
        exp.time_points = hydro.time_points;
        exp.margin = hydro.margin;
        exp.padding = hydro.padding;
        exp.pde = cfg.pde_params();
        let r = run_hydro_experiment(&exp)?;
        out.write_csv(&format!("hydro_{}.csv", named.name), |buf| r.write_csv(buf))?;
        out.write_json(&format!("hydro_{}.json", named.name), "hydro_report", &r)?;
        let finals: Vec<f64> = r.scales.iter().map(|s| s.final_mean_delta).collect();
        let last = r.scales.last().expect("at least one scale");
        report.push(&format!("{}:trend", named.name), decreasing(&finals), format!("final Delta per scale {finals:?}"));
        report.push(
            &format!("{}:level", named.name),
            last.final_mean_delta < th.delta_fraction * last.total_mass,
            format!("final Delta {:.4} vs {} x mass {}", last.final_mean_delta, th.delta_fraction, last.total_mass),
        );
        for s in &r.scales {
            eprintln!("{}: N = {} took {:.2}s per seed", named.name, s.scale, s.runtime_secs);
        }
    }
    if let Some(rs) = &hydro.riemann {
        let exp = CurrentExperiment {
            spec: cfg.model.clone(),
            flux: flux.clone(),
            lambda: rs.lambda,
            rho: rs.rho,
            velocities: rs.velocities.clone(),
            scales: rs.scales.clone().unwrap_or_else(|| hydro.scales.clone()),
            time: hydro.time,
            seeds: cfg.job_seeds(0, rs.seeds.unwrap_or(hydro.seeds)),
            burn_in: rs.burn_in,
            margin: hydro.margin,
        };
        let r = run_riemann_current(&exp)?;
        out.write_csv("current.csv", |buf| r.write_csv(buf))?;
        out.write_json("current.json", "current_report", &r)?;
        for &v in &rs.velocities {
            let rows = r.rows_for(v);
            let errs: Vec<f64> = rows.iter().map(|row| row.mean_abs_error).collect();
            let last = *errs.last().expect("at least one scale");
            report.push(
                &format!("current:v={v}"),
                decreasing(&errs) && last < th.current_tolerance,
                format!("G_v = {:.4}, mean |ratio - G_v| per scale {errs:?}", rows[0].expected),
            );
        }
    }
    out.write_json("hydro_summary.json", "hydro_summary", &report)?;
    out.finish()?;
    print_report("hydrodynamic verification", &report);
    Ok(Outcome::of(report.passed()))
}

pub fn cmd_couple_test(cfg: &RunConfig) -> Result<Outcome> {
    let coupling = section(&cfg.coupling, "coupling")?;
    let th = &cfg.thresholds;
    let mut out = OutputDir::create(&cfg.output_dir, cfg)?;
    let mut report = ValidationReport::new();
    if let Some(o) = &coupling.ordering {
        let seed = cfg.job_seeds(10, 1)[0];
        let probe = cfg.model.sample_environment(Lattice::ring(o.lattice_len), seed)?;
        let horizon = o.events_per_site / probe.mark_rate();
        let r = test_ordering(&cfg.model, o.trials, o.lattice_len, horizon, seed)?;
        out.write_json("ordering.json", "ordering_report", &r)?;
        report.push("ordering", r.passed(), format!("{} violations in {} trials", r.violations, r.trials));
    }
    if let Some(d) = &coupling.discrepancy {
        let r = test_discrepancy_decay(&cfg.model, &d.init, d.trials, d.lattice_len, &d.times, cfg.job_seeds(11, 1)[0])?;
        out.write_json("discrepancy.json", "discrepancy_report", &r)?;
        report.push(
            "discrepancy",
            r.decayed(th.discrepancy_fraction),
            format!("mean count {:.4} -> {:.4}", r.initial_mean, r.final_mean),
        );
    }
    if let Some(s) = &coupling.stability {
        let r = test_macroscopic_stability(
            &cfg.model,
            &s.init,
            s.pairs,
            s.lattice_len,
            s.horizon,
            th.stability_slack,
            cfg.job_seeds(12, 1)[0],
        )?;
        out.write_json("stability.json", "stability_report", &r)?;
        report.push(
            "stability",
            r.stable_fraction >= th.stability_fraction,
            format!("stable fraction {:.3}", r.stable_fraction),
        );
    }
    out.write_json("coupling_summary.json", "coupling_summary", &report)?;
    out.finish()?;
    print_report("coupling suites", &report);
    Ok(Outcome::of(report.passed()))
}

pub fn cmd_verify_outputs(dir: &Path) -> Result<Outcome> {
    let r = verify_outputs(dir)?;
    for p in &r.problems {
        println!("FAIL {p}");
    }
    println!("{} files checked, {} problems", r.checked, r.problems.len());
    Ok(Outcome::of(r.passed()))
}
