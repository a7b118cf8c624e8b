use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{structural, Result};
use crate::rng::{rng_from_seed, SimRng};

/// One point `(t, x, v)` of the Poisson noise. `v1` selects the jump (the
/// displacement for jump families, the path for k-step and traffic), `v2` is
/// the thinning uniform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub x: usize,
    pub v1: f64,
    pub v2: f64,
}

/// Seeded stream of events with intensity `r*` per site, in increasing time.
///
/// Realized as the superposition of the per-site clocks: inter-event times
/// are exponential with rate `L r*` and each event picks its site uniformly,
/// which has the same law as `L` independent rate-`r*` clocks. A rotation
/// `s` relabels every site `x` as `x - s (mod L)`, producing the noise seen
/// by the environment shifted by `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventStream {
    seed: u64,
    sites: usize,
    site_rate: f64,
    rotation: usize,
    rng: SimRng,
    time: f64,
    emitted: u64,
    pending: Option<Event>,
}

impl EventStream {
    pub fn new(seed: u64, sites: usize, site_rate: f64) -> Result<Self> {
        if sites == 0 {
            return Err(structural("event stream needs at least one site"));
        }
        if !(site_rate.is_finite() && site_rate > 0.0) {
            return Err(structural(format!("event rate {site_rate} must be positive and finite")));
        }
        Ok(Self { seed, sites, site_rate, rotation: 0, rng: rng_from_seed(seed), time: 0.0, emitted: 0, pending: None })
    }

    /// Same noise, site labels shifted by `-s`.
    pub fn with_rotation(mut self, s: usize) -> Self {
        self.rotation = s % self.sites;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn site_rate(&self) -> f64 {
        self.site_rate
    }

    /// Number of events handed out so far.
    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    fn draw(&mut self) -> Event {
        let gap: f64 = self.rng.sample(Exp1);
        self.time += gap / (self.sites as f64 * self.site_rate);
        let raw = self.rng.random_range(0..self.sites);
        let x = (raw + self.sites - self.rotation) % self.sites;
        let v1 = self.rng.random::<f64>();
        let v2 = self.rng.random::<f64>();
        Event { t: self.time, x, v1, v2 }
    }

    /// The next event without consuming it.
    pub fn peek(&mut self) -> Event {
        if self.pending.is_none() {
            self.pending = Some(self.draw());
        }
        self.pending.unwrap()
    }

    #[inline]
    pub fn next_event(&mut self) -> Event {
        let ev = match self.pending.take() {
            Some(ev) => ev,
            None => self.draw(),
        };
        self.emitted += 1;
        ev
    }

    /// The next event if it happens no later than `horizon`; otherwise the
    /// event is kept for later calls.
    #[inline]
    pub fn next_before(&mut self, horizon: f64) -> Option<Event> {
        let ev = match self.pending.take() {
            Some(ev) => ev,
            None => self.draw(),
        };
        if ev.t <= horizon {
            self.emitted += 1;
            Some(ev)
        } else {
            self.pending = Some(ev);
            None
        }
    }
}

impl Iterator for EventStream {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        Some(self.next_event())
    }
}
