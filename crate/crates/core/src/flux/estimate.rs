use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{flux_stencil, microscopic_flux};
use crate::engine::{evolve, Configuration, Dynamics, EventStream};
use crate::error::{invalid, Result};
use crate::model::{EnvironmentField, Lattice, ModelSpec};
use crate::rng::{derive_seed, rng_from_seed, tag};

/// Minimal number of batches of the batch-means error estimate.
pub const MIN_BATCHES: usize = 20;

/// Parameters of equilibrium flux runs on a ring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxParams {
    /// Ring length `L`.
    pub lattice_len: usize,
    /// Time discarded before measuring.
    pub burn_in: f64,
    /// Length of the measurement window.
    pub horizon: f64,
    /// Number of batches (at least [`MIN_BATCHES`]).
    #[serde(default = "default_batches")]
    pub batches: usize,
    /// One replica per seed: independent environment, initial placement and
    /// noise.
    pub seeds: Vec<u64>,
    /// Block variance above `phase_flag_factor * rho (K - rho) / b` (block
    /// size `b ~ sqrt(L)`) is flagged as possible phase separation.
    #[serde(default = "default_phase_factor")]
    pub phase_flag_factor: f64,
}

fn default_batches() -> usize {
    MIN_BATCHES
}

fn default_phase_factor() -> f64 {
    4.0
}

impl FluxParams {
    pub fn new(lattice_len: usize, burn_in: f64, horizon: f64, seeds: Vec<u64>) -> Self {
        Self { lattice_len, burn_in, horizon, batches: MIN_BATCHES, seeds, phase_flag_factor: default_phase_factor() }
    }

    fn check(&self) -> Result<()> {
        if self.lattice_len == 0 {
            return Err(invalid("flux runs need a nonempty ring"));
        }
        if self.batches < MIN_BATCHES {
            return Err(invalid(format!(
                "{} batches requested; the batch-means error needs at least {MIN_BATCHES}",
                self.batches
            )));
        }
        if !(self.horizon > 0.0) || !(self.burn_in >= 0.0) {
            return Err(invalid("measurement horizon must be positive and burn-in nonnegative"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("flux estimation needs at least one seed"));
        }
        Ok(())
    }
}

/// Outcome of one equilibrium run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicaEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub batch_means: Vec<f64>,
    /// First- and second-half batch averages agree within 3 combined errors.
    pub halves_agree: bool,
    /// Mean over batch ends of the variance of block densities.
    pub block_variance: f64,
}

/// Pooled estimate at one density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxPoint {
    pub density: f64,
    pub value: f64,
    pub stderr: f64,
    pub halves_agree: bool,
    pub block_variance: f64,
    pub phase_flag: bool,
    pub replicas: Vec<ReplicaEstimate>,
}

impl FluxPoint {
    fn exact_zero(density: f64) -> Self {
        Self { density, value: 0.0, stderr: 0.0, halves_agree: true, block_variance: 0.0, phase_flag: false, replicas: Vec::new() }
    }
}

/// `floor(rho L)` particles spread as evenly as possible, rotated by a
/// seeded offset.
pub fn canonical_configuration(lattice: Lattice, capacity: u8, density: f64, seed: u64) -> Result<Configuration> {
    let n = lattice.len as u64;
    let m = ((density * n as f64) + 1e-9).floor() as u64;
    let m = m.min(capacity as u64 * n);
    let even: Vec<u8> = (0..n).map(|x| ((x + 1) * m / n - x * m / n) as u8).collect();
    let mut rng = rng_from_seed(seed);
    let shift = rng.random_range(0..lattice.len);
    let occ = (0..lattice.len).map(|x| even[(x + shift) % lattice.len]).collect();
    Configuration::new(lattice, capacity, occ)
}

/// Space-time average of `j~` over one run on `env`, starting from `config`.
pub fn run_flux_replica(
    env: &EnvironmentField,
    mut config: Configuration,
    params: &FluxParams,
    event_seed: u64,
) -> Result<ReplicaEstimate> {
    params.check()?;
    let l = env.len();
    let dynamics = Dynamics::new(env);
    let mut stream = EventStream::new(event_seed, l, dynamics.site_rate())?;
    evolve(env, &mut config, params.burn_in, &mut stream)?;

    let stencil = flux_stencil(env);
    let mut local: Vec<f64> = (0..l).map(|x| microscopic_flux(env, config.occupancy(), x)).collect();
    let mut total: f64 = local.iter().sum();

    let block = ((l as f64).sqrt().round() as usize).max(1);
    let nb = params.batches;
    let bl = params.horizon / nb as f64;
    let start = params.burn_in;
    let end = start + params.horizon;
    let mut batch_means = Vec::with_capacity(nb);
    let mut block_vars = Vec::with_capacity(nb);
    let boundary = |i: usize| if i + 1 == nb { end } else { start + bl * (i + 1) as f64 };
    let mut t = start;
    let mut acc = 0.0;
    loop {
        let ev = stream.next_before(end);
        let upto = ev.map_or(end, |e| e.t);
        while batch_means.len() < nb && (boundary(batch_means.len()) < upto || ev.is_none()) {
            let b = boundary(batch_means.len());
            acc += total * (b - t);
            t = b;
            batch_means.push(acc / (bl * l as f64));
            acc = 0.0;
            block_vars.push(block_variance(config.occupancy(), block));
            // Refresh the running sum to keep rounding drift bounded.
            total = local.iter().sum();
        }
        let Some(ev) = ev else { break };
        acc += total * (ev.t - t);
        t = ev.t;
        if let Some(mv) = dynamics.apply(&mut config, &ev) {
            for site in [mv.from, mv.to] {
                for &d in &stencil {
                    if let Some(y) = env.lattice.offset(site, -d) {
                        let new = microscopic_flux(env, config.occupancy(), y);
                        total += new - local[y];
                        local[y] = new;
                    }
                }
            }
        }
    }

    let (mean, stderr) = mean_stderr(&batch_means);
    let half = nb / 2;
    let (m1, s1) = mean_stderr(&batch_means[..half]);
    let (m2, s2) = mean_stderr(&batch_means[half..]);
    let halves_agree = (m1 - m2).abs() <= 3.0 * (s1 * s1 + s2 * s2).sqrt() + 1e-15;
    let block_variance = block_vars.iter().sum::<f64>() / block_vars.len() as f64;
    Ok(ReplicaEstimate { mean, stderr, batch_means, halves_agree, block_variance })
}

fn block_variance(occ: &[u8], block: usize) -> f64 {
    let densities: Vec<f64> = occ
        .chunks_exact(block)
        .map(|c| c.iter().map(|&n| n as f64).sum::<f64>() / block as f64)
        .collect();
    if densities.len() < 2 {
        return 0.0;
    }
    let (m, _) = mean_stderr(&densities);
    densities.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (densities.len() - 1) as f64
}

/// Sample mean and its standard error.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Combines replica estimates: the mean of the replica means, with error
/// the larger of the propagated within-run errors and the between-replica
/// standard error.
pub fn pool(density: f64, capacity: u8, lattice_len: usize, factor: f64, replicas: Vec<ReplicaEstimate>) -> FluxPoint {
    let n = replicas.len() as f64;
    let means: Vec<f64> = replicas.iter().map(|r| r.mean).collect();
    let (value, between) = mean_stderr(&means);
    let within = replicas.iter().map(|r| r.stderr * r.stderr).sum::<f64>().sqrt() / n;
    let block_variance = replicas.iter().map(|r| r.block_variance).sum::<f64>() / n;
    let b = ((lattice_len as f64).sqrt().round()).max(1.0);
    let reference = density * (capacity as f64 - density) / b;
    FluxPoint {
        density,
        value,
        stderr: within.max(between),
        halves_agree: replicas.iter().all(|r| r.halves_agree),
        block_variance,
        phase_flag: block_variance > factor * reference.max(1.0 / (b * b)),
        replicas,
    }
}

fn check_density(spec: &ModelSpec, density: f64) -> Result<()> {
    if !(0.0..=spec.capacity as f64).contains(&density) {
        return Err(invalid(format!("density {density} outside [0, {}]", spec.capacity)));
    }
    Ok(())
}

/// Equilibrium estimate of `G(rho)`; one replica per seed, each with its own
/// environment draw.
pub fn estimate_flux_point(spec: &ModelSpec, density: f64, params: &FluxParams) -> Result<FluxPoint> {
    check_density(spec, density)?;
    params.check()?;
    if is_trivial(spec, density, params.lattice_len) {
        return Ok(FluxPoint::exact_zero(density));
    }
    let replicas = params
        .seeds
        .par_iter()
        .map(|&seed| replica_for_seed(spec, density, params, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(finish_point(spec, density, params, replicas))
}

fn is_trivial(spec: &ModelSpec, density: f64, l: usize) -> bool {
    let m = ((density * l as f64) + 1e-9).floor() as u64;
    m == 0 || m >= spec.capacity as u64 * l as u64
}

fn replica_for_seed(spec: &ModelSpec, density: f64, params: &FluxParams, seed: u64) -> Result<ReplicaEstimate> {
    let lattice = Lattice::ring(params.lattice_len);
    let env = spec.sample_environment(lattice, derive_seed(seed, tag::ENVIRONMENT, 0))?;
    let config = canonical_configuration(lattice, spec.capacity, density, derive_seed(seed, tag::INITIAL, 0))?;
    run_flux_replica(&env, config, params, derive_seed(seed, tag::EVENTS, 0))
}

fn finish_point(spec: &ModelSpec, density: f64, params: &FluxParams, replicas: Vec<ReplicaEstimate>) -> FluxPoint {
    pool(density, spec.capacity, params.lattice_len, params.phase_flag_factor, replicas)
}

/// Estimates on a grid, all (density, seed) jobs in parallel, merged in
/// grid order. Empty and full rings give exact zeros.
pub fn estimate_flux_points(spec: &ModelSpec, grid: &[f64], params: &FluxParams) -> Result<Vec<FluxPoint>> {
    params.check()?;
    for &r in grid {
        check_density(spec, r)?;
    }
    let jobs: Vec<(usize, u64)> = grid
        .iter()
        .enumerate()
        .filter(|(_, &r)| !is_trivial(spec, r, params.lattice_len))
        .flat_map(|(i, _)| params.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(i, seed)| replica_for_seed(spec, grid[i], params, seed).map(|r| (i, r)))
        .collect::<Result<Vec<_>>>()?;
    let mut per_point: Vec<Vec<ReplicaEstimate>> = vec![Vec::new(); grid.len()];
    for (i, r) in results {
        per_point[i].push(r);
    }
    Ok(grid
        .iter()
        .zip(per_point)
        .map(|(&r, reps)| if reps.is_empty() { FluxPoint::exact_zero(r) } else { finish_point(spec, r, params, reps) })
        .collect())
}

/// Equilibrium estimate on a given environment realization (one replica
/// per seed sharing that environment).
pub fn estimate_flux_on(env: &EnvironmentField, density: f64, params: &FluxParams) -> Result<FluxPoint> {
    params.check()?;
    let lattice = Lattice::ring(params.lattice_len);
    if env.lattice != lattice {
        return Err(invalid("flux runs need the environment on a ring of the configured length"));
    }
    let replicas = params
        .seeds
        .par_iter()
        .map(|&seed| {
            let config = canonical_configuration(lattice, env.capacity, density, derive_seed(seed, tag::INITIAL, 0))?;
            run_flux_replica(env, config, params, derive_seed(seed, tag::EVENTS, 0))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pool(density, env.capacity, params.lattice_len, params.phase_flag_factor, replicas))
}
