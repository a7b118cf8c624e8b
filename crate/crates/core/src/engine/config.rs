use serde::{Deserialize, Serialize};

use crate::error::{structural, Error, Result};
use crate::model::Lattice;

/// Occupation numbers `eta(x)` in `{0..K}` on a finite lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "ConfigurationRecord", into = "ConfigurationRecord")]
pub struct Configuration {
    lattice: Lattice,
    capacity: u8,
    occ: Vec<u8>,
    count: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfigurationRecord {
    pub lattice: Lattice,
    pub capacity: u8,
    pub occupancy: Vec<u8>,
}

impl Configuration {
    pub fn new(lattice: Lattice, capacity: u8, occ: Vec<u8>) -> Result<Self> {
        if occ.len() != lattice.len {
            return Err(Error::LatticeMismatch { expected: lattice.len, found: occ.len() });
        }
        if let Some(x) = occ.iter().position(|&n| n > capacity) {
            return Err(structural(format!("eta({x}) = {} exceeds K = {capacity}", occ[x])));
        }
        let count = occ.iter().map(|&n| n as u64).sum();
        Ok(Self { lattice, capacity, occ, count })
    }

    pub fn empty(lattice: Lattice, capacity: u8) -> Self {
        Self { lattice, capacity, occ: vec![0; lattice.len], count: 0 }
    }

    pub fn full(lattice: Lattice, capacity: u8) -> Self {
        Self { lattice, capacity, occ: vec![capacity; lattice.len], count: capacity as u64 * lattice.len as u64 }
    }

    pub fn from_fn(lattice: Lattice, capacity: u8, f: impl Fn(usize) -> u8) -> Result<Self> {
        Self::new(lattice, capacity, (0..lattice.len).map(f).collect())
    }

    #[inline]
    pub fn occupancy(&self) -> &[u8] {
        &self.occ
    }

    #[inline]
    pub fn get(&self, x: usize) -> u8 {
        self.occ[x]
    }

    pub fn len(&self) -> usize {
        self.occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occ.is_empty()
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn capacity(&self) -> u8 {
        self.capacity
    }

    pub fn particle_count(&self) -> u64 {
        self.count
    }

    /// Moves one particle from `from` to `to`. The caller guarantees
    /// `eta(from) > 0` and `eta(to) < K`.
    #[inline]
    pub(crate) fn move_particle(&mut self, from: usize, to: usize) {
        debug_assert!(self.occ[from] > 0 && self.occ[to] < self.capacity);
        self.occ[from] -= 1;
        self.occ[to] += 1;
    }

    /// Sitewise order `eta <= xi`.
    pub fn le(&self, other: &Self) -> bool {
        self.occ.len() == other.occ.len() && self.occ.iter().zip(&other.occ).all(|(a, b)| a <= b)
    }

    /// The configuration seen from `s`: `(tau_s eta)(x) = eta(x + s)` on a
    /// ring.
    pub fn rotated(&self, s: usize) -> Self {
        let n = self.occ.len();
        let occ = (0..n).map(|x| self.occ[(x + s) % n]).collect();
        Self { occ, ..self.clone() }
    }

    /// `sum_x |eta(x) - xi(x)|`.
    pub fn l1_distance(&self, other: &Self) -> u64 {
        self.occ.iter().zip(&other.occ).map(|(a, b)| a.abs_diff(*b) as u64).sum()
    }
}

impl TryFrom<ConfigurationRecord> for Configuration {
    type Error = Error;

    fn try_from(r: ConfigurationRecord) -> Result<Self> {
        Self::new(r.lattice, r.capacity, r.occupancy)
    }
}

impl From<Configuration> for ConfigurationRecord {
    fn from(c: Configuration) -> Self {
        ConfigurationRecord { lattice: c.lattice, capacity: c.capacity, occupancy: c.occ }
    }
}
