use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{empirical_measure, sample_initial, Embedding};
use crate::engine::{evolve, evolve_observed, Configuration, CurrentCounter, EventStream, ObserverPath};
use crate::error::{invalid, Error, Result};
use crate::flux::{canonical_configuration, mean_stderr, FluxTable};
use crate::io::model_hash;
use crate::model::{EnvironmentField, Lattice, ModelSpec};
use crate::pde::{delta_distance, riemann_value, solve_cauchy_snapshots, GridFunction, InitialData, PdeParams, StepProfile};
use crate::rng::{derive_seed, tag};

/// Hyperbolic-scale comparison of a particle system with the entropy
/// solution driven by a tabulated flux.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingExperiment {
    pub spec: ModelSpec,
    pub flux: FluxTable,
    pub profile: StepProfile,
    pub scales: Vec<usize>,
    /// Macroscopic final time.
    pub time: f64,
    /// Number of equally spaced observation times in `[0, time]`, both ends
    /// included.
    #[serde(default = "default_time_points")]
    pub time_points: usize,
    pub seeds: Vec<u64>,
    pub pde: PdeParams,
    /// Macroscopic padding beyond `V t` on both sides of the support.
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Explicit macroscopic padding; must be at least `V t`.
    #[serde(default)]
    pub padding: Option<f64>,
}

fn default_time_points() -> usize {
    10
}

fn default_margin() -> f64 {
    0.5
}

impl ScalingExperiment {
    pub fn new(spec: ModelSpec, flux: FluxTable, profile: StepProfile, scales: Vec<usize>, time: f64, seeds: Vec<u64>) -> Self {
        let pde = PdeParams::new(0.005);
        Self { spec, flux, profile, scales, time, time_points: default_time_points(), seeds, pde, margin: default_margin(), padding: None }
    }

    pub fn times(&self) -> Vec<f64> {
        if self.time == 0.0 || self.time_points < 2 {
            return vec![self.time];
        }
        let m = (self.time_points - 1) as f64;
        (0..self.time_points).map(|j| self.time * j as f64 / m).collect()
    }

    fn padding(&self) -> Result<f64> {
        let need = self.spec.lipschitz_bound() * self.time;
        match self.padding {
            Some(p) if p < need => Err(Error::Padding(format!("padding {p} is below V t = {need}"))),
            Some(p) => Ok(p),
            None => Ok(need + self.margin),
        }
    }

    fn check(&self) -> Result<()> {
        check_flux(&self.spec, &self.flux)?;
        if self.scales.is_empty() || self.scales.contains(&0) {
            return Err(invalid("scales must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("at least one seed is required"));
        }
        if !(self.time >= 0.0 && self.time.is_finite()) {
            return Err(invalid("time must be finite and nonnegative"));
        }
        if !self.profile.is_compact() {
            return Err(invalid("the initial profile must have compact support"));
        }
        if self.profile.capacity != self.spec.capacity {
            return Err(invalid("profile and model capacities differ"));
        }
        Ok(())
    }

    /// Ring and embedding used at scale `n`.
    pub fn lattice_for(&self, n: usize) -> Result<(Lattice, Embedding)> {
        let pad = self.padding()?;
        let (a, b) = self.profile.extent().unwrap_or((0.0, 0.0));
        let first = ((a - pad) * n as f64).floor() as i64;
        let last = ((b + pad) * n as f64).ceil() as i64;
        Ok((Lattice::ring((last - first) as usize), Embedding { scale: n, first }))
    }
}

/// Refuses a flux table whose recorded model differs from `spec`.
pub fn check_flux(spec: &ModelSpec, flux: &FluxTable) -> Result<()> {
    if flux.capacity != spec.capacity {
        return Err(invalid("flux table and model capacities differ"));
    }
    if let Some(meta) = &flux.meta {
        let expected = model_hash(spec)?;
        if meta.model_hash != expected {
            return Err(Error::HashMismatch { expected, found: meta.model_hash.clone() });
        }
    }
    Ok(())
}

/// Speed used for the CFL condition of the macroscopic solver: the
/// Lipschitz constant of the interpolated flux.
fn pde_speed(flux: &FluxTable) -> f64 {
    let s = flux.max_slope();
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

/// Results at one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub scale: usize,
    pub lattice_len: usize,
    pub times: Vec<f64>,
    pub seeds: Vec<u64>,
    /// `delta[s][j]`: seed `s` at time `times[j]`.
    pub delta: Vec<Vec<f64>>,
    pub mean_delta: Vec<f64>,
    pub max_mean_delta: f64,
    pub final_mean_delta: f64,
    pub total_mass: f64,
    #[serde(skip)]
    pub runtime_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HydroReport {
    pub scales: Vec<ScaleReport>,
}

impl HydroReport {
    /// Whether the final mean distance strictly decreases along the scales.
    pub fn final_decreasing(&self) -> bool {
        self.scales.windows(2).all(|w| w[1].final_mean_delta < w[0].final_mean_delta)
    }

    pub fn max_decreasing(&self) -> bool {
        self.scales.windows(2).all(|w| w[1].max_mean_delta < w[0].max_mean_delta)
    }

    /// CSV `scale,seed,time,delta`.
    pub fn write_csv(&self, mut out: impl std::io::Write) -> Result<()> {
        writeln!(out, "scale,seed,time,delta")?;
        for s in &self.scales {
            for (seed, trace) in s.seeds.iter().zip(&s.delta) {
                for (t, d) in s.times.iter().zip(trace) {
                    writeln!(out, "{},{seed},{t:?},{d:?}", s.scale)?;
                }
            }
        }
        Ok(())
    }
}

fn scale_seed(seed: u64, n: usize) -> u64 {
    derive_seed(seed, tag::SCALE, n as u64)
}

fn hydro_run(
    exp: &ScalingExperiment,
    n: usize,
    seed: u64,
    lattice: Lattice,
    embedding: Embedding,
    targets: &[crate::pde::MassMeasure],
    times: &[f64],
) -> Result<Vec<f64>> {
    let base = scale_seed(seed, n);
    let env = exp.spec.sample_environment(lattice, derive_seed(base, tag::ENVIRONMENT, 0))?;
    let mut config = sample_initial(&exp.profile, exp.spec.capacity, lattice, embedding, derive_seed(base, tag::INITIAL, 0))?;
    let mut stream = EventStream::new(derive_seed(base, tag::EVENTS, 0), env.len(), env.mark_rate())?;
    let mut out = Vec::with_capacity(times.len());
    for (t, target) in times.iter().zip(targets) {
        evolve(&env, &mut config, t * n as f64, &mut stream)?;
        let pi = empirical_measure(config.occupancy(), embedding);
        out.push(delta_distance(&pi.measure, target));
    }
    Ok(out)
}

/// For every scale and seed: samples the initial profile, runs to time
/// `N t`, and tracks `Delta(pi^N(eta_{Ns}), u(., s) dx)` on the time grid.
pub fn run_hydro_experiment(exp: &ScalingExperiment) -> Result<HydroReport> {
    exp.check()?;
    let times = exp.times();
    let speed = pde_speed(&exp.flux);
    let snaps: Vec<GridFunction> = solve_cauchy_snapshots(&exp.flux, InitialData::Step(&exp.profile), &times, speed, &exp.pde)?;
    let targets: Vec<_> = snaps.iter().map(GridFunction::to_measure).collect();
    let total_mass = exp.profile.mass()?;
    let mut scales = Vec::with_capacity(exp.scales.len());
    for &n in &exp.scales {
        let (lattice, embedding) = exp.lattice_for(n)?;
        let start = Instant::now();
        let delta = exp
            .seeds
            .par_iter()
            .map(|&seed| hydro_run(exp, n, seed, lattice, embedding, &targets, &times))
            .collect::<Result<Vec<_>>>()?;
        let runtime_secs = start.elapsed().as_secs_f64() / exp.seeds.len() as f64;
        let mean_delta: Vec<f64> =
            (0..times.len()).map(|j| delta.iter().map(|d| d[j]).sum::<f64>() / delta.len() as f64).collect();
        scales.push(ScaleReport {
            scale: n,
            lattice_len: lattice.len,
            times: times.clone(),
            seeds: exp.seeds.clone(),
            max_mean_delta: mean_delta.iter().copied().fold(0.0, f64::max),
            final_mean_delta: *mean_delta.last().unwrap(),
            delta,
            mean_delta,
            total_mass,
            runtime_secs,
        });
    }
    Ok(HydroReport { scales })
}

/// Observer current from glued equilibrium halves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentExperiment {
    pub spec: ModelSpec,
    pub flux: FluxTable,
    pub lambda: f64,
    pub rho: f64,
    pub velocities: Vec<f64>,
    pub scales: Vec<usize>,
    pub time: f64,
    pub seeds: Vec<u64>,
    /// Microscopic equilibration time of each half before gluing.
    #[serde(default = "default_half_burn_in")]
    pub burn_in: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_half_burn_in() -> f64 {
    100.0
}

impl CurrentExperiment {
    /// Ring of even length with the glue point at its center.
    pub fn lattice_for(&self, n: usize) -> Lattice {
        let vmax = self.velocities.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let half = ((self.spec.lipschitz_bound() + vmax) * self.time + self.margin) * n as f64;
        Lattice::ring(2 * half.ceil() as usize)
    }

    fn check(&self) -> Result<()> {
        check_flux(&self.spec, &self.flux)?;
        let k = self.spec.capacity as f64;
        if !(0.0..=k).contains(&self.lambda) || !(0.0..=k).contains(&self.rho) {
            return Err(invalid(format!("Riemann densities must lie in [0, {k}]")));
        }
        if self.scales.is_empty() || self.scales.contains(&0) || self.seeds.is_empty() {
            return Err(invalid("current runs need positive scales and at least one seed"));
        }
        if !(self.time > 0.0) || !(self.burn_in >= 0.0) {
            return Err(invalid("current runs need a positive time and nonnegative burn-in"));
        }
        if self.velocities.iter().any(|v| !v.is_finite()) {
            return Err(invalid("observer velocities must be finite"));
        }
        Ok(())
    }
}

/// One `(velocity, scale)` cell of a current report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentRow {
    pub velocity: f64,
    pub scale: usize,
    pub expected: f64,
    pub ratios: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    /// `|mean - expected|`.
    pub abs_error: f64,
    /// Seed average of `|ratio - expected|`.
    pub mean_abs_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentReport {
    pub lambda: f64,
    pub rho: f64,
    pub seeds: Vec<u64>,
    pub rows: Vec<CurrentRow>,
}

impl CurrentReport {
    pub fn rows_for(&self, v: f64) -> Vec<&CurrentRow> {
        self.rows.iter().filter(|r| r.velocity == v).collect()
    }

    /// CSV `velocity,scale,seed,ratio,expected`.
    pub fn write_csv(&self, mut out: impl std::io::Write) -> Result<()> {
        writeln!(out, "velocity,scale,seed,ratio,expected")?;
        for r in &self.rows {
            for (seed, x) in self.seeds.iter().zip(&r.ratios) {
                writeln!(out, "{:?},{},{seed},{x:?},{:?}", r.velocity, r.scale, r.expected)?;
            }
        }
        Ok(())
    }
}

/// Configuration equal to `left` on sites below `cut` and to `right` from
/// `cut` on.
pub fn glue(left: &Configuration, right: &Configuration, cut: usize) -> Result<Configuration> {
    if left.lattice() != right.lattice() || left.capacity() != right.capacity() {
        return Err(invalid("glued halves must share lattice and capacity"));
    }
    let occ = left.occupancy()[..cut].iter().chain(&right.occupancy()[cut..]).copied().collect();
    Configuration::new(left.lattice(), left.capacity(), occ)
}

fn equilibrated(env: &EnvironmentField, density: f64, burn_in: f64, seed: u64) -> Result<Configuration> {
    let mut c = canonical_configuration(env.lattice, env.capacity, density, derive_seed(seed, tag::INITIAL, 0))?;
    let mut stream = EventStream::new(derive_seed(seed, tag::EVENTS, 0), env.len(), env.mark_rate())?;
    evolve(env, &mut c, burn_in, &mut stream)?;
    Ok(c)
}

fn current_run(exp: &CurrentExperiment, n: usize, seed: u64) -> Result<Vec<f64>> {
    let lattice = exp.lattice_for(n);
    let base = scale_seed(seed, n);
    let env = exp.spec.sample_environment(lattice, derive_seed(base, tag::ENVIRONMENT, 0))?;
    let cut = lattice.len / 2;
    let left = equilibrated(&env, exp.lambda, exp.burn_in, derive_seed(base, tag::REPLICA, 0))?;
    let right = equilibrated(&env, exp.rho, exp.burn_in, derive_seed(base, tag::REPLICA, 1))?;
    let mut config = glue(&left, &right, cut)?;
    let mut observers = exp
        .velocities
        .iter()
        .map(|&velocity| CurrentCounter::new(lattice, ObserverPath::Linear { origin: cut as i64, velocity }))
        .collect::<Result<Vec<_>>>()?;
    let horizon = exp.time * n as f64;
    let mut stream = EventStream::new(derive_seed(base, tag::EVENTS, 0), env.len(), env.mark_rate())?;
    evolve_observed(&env, &mut config, horizon, &mut stream, &mut observers)?;
    Ok(observers.iter().map(|o| o.net() as f64 / horizon).collect())
}

/// `phi^v_{Nt} / (N t)` per scale and observer velocity, next to
/// `G_v(lambda, rho)` from the flux table.
pub fn run_riemann_current(exp: &CurrentExperiment) -> Result<CurrentReport> {
    exp.check()?;
    let jobs: Vec<(usize, u64)> = exp.scales.iter().flat_map(|&n| exp.seeds.iter().map(move |&s| (n, s))).collect();
    let results = jobs.par_iter().map(|&(n, s)| current_run(exp, n, s)).collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (vi, &v) in exp.velocities.iter().enumerate() {
        let expected = riemann_value(&exp.flux, exp.lambda, exp.rho, v)?.value;
        for (si, &n) in exp.scales.iter().enumerate() {
            let ratios: Vec<f64> = (0..exp.seeds.len()).map(|k| results[si * exp.seeds.len() + k][vi]).collect();
            let (mean, stderr) = mean_stderr(&ratios);
            let mean_abs_error = ratios.iter().map(|r| (r - expected).abs()).sum::<f64>() / ratios.len() as f64;
            rows.push(CurrentRow {
                velocity: v,
                scale: n,
                expected,
                mean,
                stderr,
                abs_error: (mean - expected).abs(),
                mean_abs_error,
                ratios,
            });
        }
    }
    Ok(CurrentReport { lambda: exp.lambda, rho: exp.rho, seeds: exp.seeds.clone(), rows })
}
