use serde::{Deserialize, Serialize};

use super::{evolve_observed, Configuration, Event, EventObserver, EventStream, Move};
use crate::error::{invalid, Result};
use crate::model::{EnvironmentField, Geometry, Lattice};

/// Observer trajectory. Position `x` denotes the boundary between sites
/// `x - 1` and `x`; positions are unwrapped integers and are reduced modulo
/// the ring length only when reading occupations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObserverPath {
    /// `x_t = origin + sgn(v) floor(|v| t)`.
    Linear { origin: i64, velocity: f64 },
    /// Unit steps `(time, +1 | -1)` in increasing time.
    Steps { origin: i64, steps: Vec<(f64, i8)> },
}

impl ObserverPath {
    pub fn fixed(origin: i64) -> Self {
        Self::Linear { origin, velocity: 0.0 }
    }

    pub fn origin(&self) -> i64 {
        match self {
            Self::Linear { origin, .. } | Self::Steps { origin, .. } => *origin,
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            Self::Linear { velocity, .. } if !velocity.is_finite() => Err(invalid("observer velocity must be finite")),
            Self::Steps { steps, .. } => {
                if steps.iter().any(|&(_, d)| d != 1 && d != -1) {
                    return Err(invalid("observer steps must be +1 or -1"));
                }
                if steps.windows(2).any(|w| w[0].0 > w[1].0) {
                    return Err(invalid("observer steps must be in increasing time"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Particle current seen by an observer: `phi = phi+ - phi- + phi~`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentCounter {
    lattice: Lattice,
    path: ObserverPath,
    position: i64,
    steps_done: u64,
    /// Rightward particle crossings.
    pub plus: i64,
    /// Leftward particle crossings.
    pub minus: i64,
    /// Observer self-motion term.
    pub tilde: i64,
}

impl CurrentCounter {
    pub fn new(lattice: Lattice, path: ObserverPath) -> Result<Self> {
        path.check()?;
        let position = path.origin();
        Ok(Self { lattice, path, position, steps_done: 0, plus: 0, minus: 0, tilde: 0 })
    }

    pub fn net(&self) -> i64 {
        self.plus - self.minus + self.tilde
    }

    pub fn position(&self) -> i64 {
        self.position
    }

    fn site_occ(&self, occ: &[u8], x: i64) -> i64 {
        match self.lattice.geometry {
            Geometry::Ring => occ[x.rem_euclid(self.lattice.len as i64) as usize] as i64,
            Geometry::Segment => usize::try_from(x).ok().and_then(|i| occ.get(i)).map_or(0, |&n| n as i64),
        }
    }

    fn step(&mut self, dir: i8, occ: &[u8]) {
        if dir > 0 {
            self.tilde -= self.site_occ(occ, self.position);
            self.position += 1;
        } else {
            self.tilde += self.site_occ(occ, self.position - 1);
            self.position -= 1;
        }
        self.steps_done += 1;
    }

    /// Signed number of times the jump `from -> from + z` crosses the
    /// observer (all ring images of it on a ring).
    fn crossings(&self, from: usize, z: i64) -> i64 {
        let a = from as i64;
        let x = self.position;
        match self.lattice.geometry {
            Geometry::Ring => {
                let n = self.lattice.len as i64;
                (a + z - x).div_euclid(n) - (a - x).div_euclid(n)
            }
            Geometry::Segment => (a < x && x <= a + z) as i64 - (a + z < x && x <= a) as i64,
        }
    }
}

impl EventObserver for CurrentCounter {
    fn advance(&mut self, t: f64, occ: &[u8]) {
        match &self.path {
            ObserverPath::Linear { velocity, .. } => {
                let v = *velocity;
                if v == 0.0 {
                    return;
                }
                let target = (v.abs() * t).floor() as u64;
                let dir = if v > 0.0 { 1 } else { -1 };
                while self.steps_done < target {
                    self.step(dir, occ);
                }
            }
            ObserverPath::Steps { .. } => loop {
                let ObserverPath::Steps { steps, .. } = &self.path else { unreachable!() };
                match steps.get(self.steps_done as usize) {
                    Some(&(s, d)) if s <= t => self.step(d, occ),
                    _ => break,
                }
            },
        }
    }

    fn on_event(&mut self, _ev: &Event, mv: Option<Move>, _occ: &[u8]) {
        if let Some(mv) = mv {
            let c = self.crossings(mv.from, mv.displacement);
            if c > 0 {
                self.plus += c;
            } else {
                self.minus -= c;
            }
        }
    }
}

/// Runs `config` to `horizon` and returns the current seen by `observer`.
pub fn count_current(
    env: &EnvironmentField,
    config: &mut Configuration,
    observer: ObserverPath,
    horizon: f64,
    stream: &mut EventStream,
) -> Result<CurrentCounter> {
    let mut counter = CurrentCounter::new(env.lattice, observer)?;
    evolve_observed(env, config, horizon, stream, &mut counter)?;
    Ok(counter)
}
