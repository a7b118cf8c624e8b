use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::Configuration;
use crate::error::{invalid, Result};
use crate::model::Lattice;
use crate::pde::{MassMeasure, StepProfile};
use crate::rng::rng_from_seed;

/// Placement of a finite lattice on the rescaled line: site `i` sits at the
/// microscopic coordinate `y = first + i` and at the macroscopic point `y / N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub scale: usize,
    pub first: i64,
}

impl Embedding {
    pub fn coordinate(&self, i: usize) -> i64 {
        self.first + i as i64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.coordinate(i) as f64 / self.scale as f64
    }

    /// Site index of coordinate `y`, if on a lattice of `len` sites.
    pub fn site(&self, y: i64, len: usize) -> Option<usize> {
        usize::try_from(y - self.first).ok().filter(|&i| i < len)
    }
}

/// `eta(y) = floor(u0(y/N)) + Bernoulli(frac(u0(y/N)))`, independently over
/// sites.
pub fn sample_initial(
    u0: &StepProfile,
    capacity: u8,
    lattice: Lattice,
    embedding: Embedding,
    seed: u64,
) -> Result<Configuration> {
    let k = capacity as f64;
    if u0.left > k || u0.values.iter().any(|&v| v > k) {
        return Err(invalid(format!("initial profile exceeds the capacity {capacity}")));
    }
    if embedding.scale == 0 {
        return Err(invalid("scale must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let occ = (0..lattice.len)
        .map(|i| {
            let r = u0.value_at(embedding.point(i));
            let base = r.floor();
            let frac = r - base;
            let extra = frac > 0.0 && rng.random::<f64>() < frac;
            base as u8 + extra as u8
        })
        .collect();
    Configuration::new(lattice, capacity, occ)
}

/// `pi^N = N^{-1} sum_y eta(y) delta_{y/N}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub scale: usize,
    pub measure: MassMeasure,
}

pub fn empirical_measure(occ: &[u8], embedding: Embedding) -> EmpiricalMeasure {
    let n = embedding.scale as f64;
    let atoms = occ
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > 0)
        .map(|(i, &m)| (embedding.point(i), m as f64 / n))
        .collect();
    EmpiricalMeasure { scale: embedding.scale, measure: MassMeasure { atoms, pieces: vec![] } }
}
