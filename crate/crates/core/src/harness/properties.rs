use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampling::{empirical_measure, Embedding};
use crate::engine::{Configuration, CoupledEnsemble, EventStream};
use crate::error::{invalid, Result};
use crate::model::{Lattice, ModelSpec};
use crate::pde::delta_distance;
use crate::rng::{derive_seed, rng_from_seed, tag, SimRng};

/// Number of intermediate times at which coupled runs are inspected.
pub const CHECKPOINTS: usize = 10;

fn trial_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, tag::TRIAL, i as u64)
}

fn checkpoints(horizon: f64) -> Vec<f64> {
    (1..=CHECKPOINTS).map(|j| horizon * j as f64 / CHECKPOINTS as f64).collect()
}

fn check_run(trials: usize, l: usize, horizon: f64) -> Result<()> {
    if trials == 0 || l == 0 {
        return Err(invalid("property suites need at least one trial and one site"));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon must be finite and nonnegative"));
    }
    Ok(())
}

/// Random pair `eta <= xi`: `xi(x)` uniform on `0..=K`, then `eta(x)`
/// uniform on `0..=xi(x)`.
pub fn ordered_pair(lattice: Lattice, capacity: u8, rng: &mut SimRng) -> Result<(Configuration, Configuration)> {
    let xi: Vec<u8> = (0..lattice.len).map(|_| rng.random_range(0..=capacity)).collect();
    let eta: Vec<u8> = xi.iter().map(|&m| rng.random_range(0..=m)).collect();
    Ok((Configuration::new(lattice, capacity, eta)?, Configuration::new(lattice, capacity, xi)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub trials: usize,
    pub lattice_len: usize,
    pub horizon: f64,
    pub checkpoints: usize,
    pub violations: usize,
    /// Seeds of the trials that lost the order.
    pub failing_seeds: Vec<u64>,
}

impl OrderingReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Coupled runs of random ordered pairs on a ring with a fresh environment
/// per trial; the order is checked at [`CHECKPOINTS`] times.
pub fn test_ordering(spec: &ModelSpec, trials: usize, l: usize, horizon: f64, seed: u64) -> Result<OrderingReport> {
    check_run(trials, l, horizon)?;
    let lattice = Lattice::ring(l);
    let times = checkpoints(horizon);
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<Option<u64>> {
            let s = trial_seed(seed, i);
            let env = spec.sample_environment(lattice, derive_seed(s, tag::ENVIRONMENT, 0))?;
            let mut rng = rng_from_seed(derive_seed(s, tag::INITIAL, 0));
            let (eta, xi) = ordered_pair(lattice, spec.capacity, &mut rng)?;
            let mut ens = CoupledEnsemble::new(&env, vec![eta, xi])?;
            let mut stream = EventStream::new(derive_seed(s, tag::EVENTS, 0), env.len(), env.mark_rate())?;
            for &t in &times {
                ens.evolve(t, &mut stream)?;
                let c = ens.configs();
                if !c[0].le(&c[1]) {
                    return Ok(Some(s));
                }
            }
            Ok(None)
        })
        .collect::<Result<Vec<_>>>()?;
    let failing_seeds: Vec<u64> = outcomes.into_iter().flatten().collect();
    Ok(OrderingReport {
        trials,
        lattice_len: l,
        horizon,
        checkpoints: CHECKPOINTS,
        violations: failing_seeds.len(),
        failing_seeds,
    })
}

/// `#{x : eta(x) > xi(x)} * #{y : eta(y) < xi(y)}`.
pub fn opposite_discrepancies(eta: &[u8], xi: &[u8]) -> u64 {
    let plus = eta.iter().zip(xi).filter(|(a, b)| a > b).count() as u64;
    let minus = eta.iter().zip(xi).filter(|(a, b)| a < b).count() as u64;
    plus * minus
}

/// Initial pairs for the discrepancy suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiscrepancyInit {
    /// Common Bernoulli background of the given density; one extra particle
    /// at an empty site for `eta` and at another empty site for `xi`.
    SinglePair { density: f64 },
    /// `eta = 1{x = 0}`, `xi = 1{x = 1}`.
    Swap,
    /// Independent Bernoulli configurations of the given density.
    Independent { density: f64 },
}

impl DiscrepancyInit {
    pub fn sample(&self, lattice: Lattice, capacity: u8, rng: &mut SimRng) -> Result<(Configuration, Configuration)> {
        let l = lattice.len;
        let bern = |rng: &mut SimRng, d: f64| -> Vec<u8> {
            (0..l)
                .map(|_| {
                    let v = d * capacity as f64;
                    let base = v.floor();
                    (base as u8 + (rng.random::<f64>() < v - base) as u8).min(capacity)
                })
                .collect()
        };
        let (eta, xi) = match *self {
            Self::SinglePair { density } => {
                let bg = bern(rng, density);
                let open: Vec<usize> = (0..l).filter(|&x| bg[x] < capacity).collect();
                if open.len() < 2 {
                    return Err(invalid("background leaves fewer than two non-full sites"));
                }
                let a = open[rng.random_range(0..open.len())];
                let b = loop {
                    let b = open[rng.random_range(0..open.len())];
                    if b != a {
                        break b;
                    }
                };
                let (mut eta, mut xi) = (bg.clone(), bg);
                eta[a] += 1;
                xi[b] += 1;
                (eta, xi)
            }
            Self::Swap => {
                if l < 2 {
                    return Err(invalid("a swap needs two sites"));
                }
                let mut eta = vec![0; l];
                let mut xi = vec![0; l];
                eta[0] = 1;
                xi[1] = 1;
                (eta, xi)
            }
            Self::Independent { density } => (bern(rng, density), bern(rng, density)),
        };
        Ok((Configuration::new(lattice, capacity, eta)?, Configuration::new(lattice, capacity, xi)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub trials: usize,
    pub lattice_len: usize,
    pub times: Vec<f64>,
    /// Seed average of the opposite-discrepancy count; entry 0 is time 0.
    pub mean_counts: Vec<f64>,
    pub initial_mean: f64,
    pub final_mean: f64,
    /// Fraction of trials ending ordered (or identical).
    pub ordered_fraction: f64,
}

impl DiscrepancyReport {
    /// Final mean count below `fraction` of the initial one.
    pub fn decayed(&self, fraction: f64) -> bool {
        self.final_mean < fraction * self.initial_mean
    }
}

/// Coupled runs of unordered pairs; records the mean opposite-discrepancy
/// count at time 0 and at each of `times`.
pub fn test_discrepancy_decay(
    spec: &ModelSpec,
    init: &DiscrepancyInit,
    trials: usize,
    l: usize,
    times: &[f64],
    seed: u64,
) -> Result<DiscrepancyReport> {
    check_run(trials, l, times.last().copied().unwrap_or(0.0))?;
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("times must be increasing"));
    }
    let lattice = Lattice::ring(l);
    let runs = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<(Vec<u64>, bool)> {
            let s = trial_seed(seed, i);
            let env = spec.sample_environment(lattice, derive_seed(s, tag::ENVIRONMENT, 0))?;
            let mut rng = rng_from_seed(derive_seed(s, tag::INITIAL, 0));
            let (eta, xi) = init.sample(lattice, spec.capacity, &mut rng)?;
            let mut counts = vec![opposite_discrepancies(eta.occupancy(), xi.occupancy())];
            let mut ens = CoupledEnsemble::new(&env, vec![eta, xi])?;
            let mut stream = EventStream::new(derive_seed(s, tag::EVENTS, 0), env.len(), env.mark_rate())?;
            for &t in times {
                ens.evolve(t, &mut stream)?;
                let c = ens.configs();
                counts.push(opposite_discrepancies(c[0].occupancy(), c[1].occupancy()));
            }
            let c = ens.configs();
            Ok((counts, c[0].le(&c[1]) || c[1].le(&c[0])))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = runs.len() as f64;
    let mean_counts: Vec<f64> =
        (0..=times.len()).map(|j| runs.iter().map(|r| r.0[j] as f64).sum::<f64>() / n).collect();
    Ok(DiscrepancyReport {
        trials,
        lattice_len: l,
        times: times.to_vec(),
        initial_mean: mean_counts[0],
        final_mean: *mean_counts.last().unwrap(),
        ordered_fraction: runs.iter().filter(|r| r.1).count() as f64 / n,
        mean_counts,
    })
}

/// Initial pairs for the stability suite, on top of a Bernoulli background.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StabilityInit {
    Identical { density: f64 },
    /// `eta <= xi` with `xi` adding independent Bernoulli(`extra`) particles
    /// on the empty sites of `eta`.
    Ordered { density: f64, extra: f64 },
    /// One particle of `eta` moved to a neighboring non-full site in `xi`.
    Perturbed { density: f64 },
}

impl StabilityInit {
    pub fn sample(&self, lattice: Lattice, capacity: u8, rng: &mut SimRng) -> Result<(Configuration, Configuration)> {
        let density = match *self {
            Self::Identical { density } | Self::Ordered { density, .. } | Self::Perturbed { density } => density,
        };
        let l = lattice.len;
        let v = density * capacity as f64;
        let base = v.floor();
        let eta: Vec<u8> =
            (0..l).map(|_| (base as u8 + (rng.random::<f64>() < v - base) as u8).min(capacity)).collect();
        let xi = match *self {
            Self::Identical { .. } => eta.clone(),
            Self::Ordered { extra, .. } => eta.iter().map(|&m| m + (m < capacity && rng.random::<f64>() < extra) as u8).collect(),
            Self::Perturbed { .. } => {
                let movable: Vec<usize> = (0..l)
                    .filter(|&x| eta[x] > 0 && (eta[(x + 1) % l] < capacity || eta[(x + l - 1) % l] < capacity))
                    .collect();
                if movable.is_empty() {
                    return Err(invalid("no particle can be displaced"));
                }
                let x = movable[rng.random_range(0..movable.len())];
                let right = (x + 1) % l;
                let left = (x + l - 1) % l;
                let y = match (eta[right] < capacity, eta[left] < capacity) {
                    (true, true) => {
                        if rng.random::<bool>() {
                            right
                        } else {
                            left
                        }
                    }
                    (true, false) => right,
                    _ => left,
                };
                let mut xi = eta.clone();
                xi[x] -= 1;
                xi[y] += 1;
                xi
            }
        };
        Ok((Configuration::new(lattice, capacity, eta)?, Configuration::new(lattice, capacity, xi)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub pairs: usize,
    pub lattice_len: usize,
    /// Checkpoint times; entry 0 is time 0.
    pub times: Vec<f64>,
    /// `delta[p][j]` for pair `p`.
    pub delta: Vec<Vec<f64>>,
    /// `slack_fraction` times the mean total mass of the pair.
    pub slack: Vec<f64>,
    /// Fraction of pairs with `Delta(t) <= Delta(0) + slack` at every
    /// checkpoint.
    pub stable_fraction: f64,
    /// Fraction of pairs with `Delta(t) <= Delta(0)` at every checkpoint.
    pub nonincreasing_fraction: f64,
}

/// Coupled runs of nearby pairs on a ring; tracks `Delta` between their
/// empirical measures (positions `x / L`, masses `eta(x) / L`).
pub fn test_macroscopic_stability(
    spec: &ModelSpec,
    init: &StabilityInit,
    pairs: usize,
    l: usize,
    horizon: f64,
    slack_fraction: f64,
    seed: u64,
) -> Result<StabilityReport> {
    check_run(pairs, l, horizon)?;
    let lattice = Lattice::ring(l);
    let embedding = Embedding { scale: l, first: 0 };
    let mut times = vec![0.0];
    times.extend(checkpoints(horizon));
    let runs = (0..pairs)
        .into_par_iter()
        .map(|i| -> Result<(Vec<f64>, f64)> {
            let s = trial_seed(seed, i);
            let env = spec.sample_environment(lattice, derive_seed(s, tag::ENVIRONMENT, 0))?;
            let mut rng = rng_from_seed(derive_seed(s, tag::INITIAL, 0));
            let (eta, xi) = init.sample(lattice, spec.capacity, &mut rng)?;
            let mass = (eta.particle_count() + xi.particle_count()) as f64 / (2 * l) as f64;
            let mut ens = CoupledEnsemble::new(&env, vec![eta, xi])?;
            let mut stream = EventStream::new(derive_seed(s, tag::EVENTS, 0), env.len(), env.mark_rate())?;
            let mut trace = Vec::with_capacity(times.len());
            for &t in &times {
                ens.evolve(t, &mut stream)?;
                let c = ens.configs();
                let a = empirical_measure(c[0].occupancy(), embedding);
                let b = empirical_measure(c[1].occupancy(), embedding);
                trace.push(delta_distance(&a.measure, &b.measure));
            }
            Ok((trace, slack_fraction * mass))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = runs.len() as f64;
    let stable = runs.iter().filter(|(d, s)| d.iter().all(|&x| x <= d[0] + s)).count() as f64 / n;
    let nonincreasing = runs.iter().filter(|(d, _)| d.iter().all(|&x| x <= d[0])).count() as f64 / n;
    let (delta, slack) = runs.into_iter().unzip();
    Ok(StabilityReport { pairs, lattice_len: l, times, delta, slack, stable_fraction: stable, nonincreasing_fraction: nonincreasing })
}
