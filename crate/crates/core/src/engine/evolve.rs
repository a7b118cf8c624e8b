use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{Configuration, Dynamics, Event, EventStream, Move};
use crate::error::{structural, Error, Result};
use crate::model::EnvironmentField;

/// Hooks called while a trajectory is generated.
pub trait EventObserver {
    /// Called before the event at time `t` is applied, and once with the
    /// horizon at the end of a run; `occ` is the configuration just before.
    fn advance(&mut self, _t: f64, _occ: &[u8]) {}

    /// Called after every event, with the executed jump if any.
    fn on_event(&mut self, _ev: &Event, _mv: Option<Move>, _occ: &[u8]) {}
}

impl EventObserver for () {}

impl<A: EventObserver, B: EventObserver> EventObserver for (A, B) {
    fn advance(&mut self, t: f64, occ: &[u8]) {
        self.0.advance(t, occ);
        self.1.advance(t, occ);
    }

    fn on_event(&mut self, ev: &Event, mv: Option<Move>, occ: &[u8]) {
        self.0.on_event(ev, mv, occ);
        self.1.on_event(ev, mv, occ);
    }
}

impl<O: EventObserver> EventObserver for Vec<O> {
    fn advance(&mut self, t: f64, occ: &[u8]) {
        for o in self.iter_mut() {
            o.advance(t, occ);
        }
    }

    fn on_event(&mut self, ev: &Event, mv: Option<Move>, occ: &[u8]) {
        for o in self.iter_mut() {
            o.on_event(ev, mv, occ);
        }
    }
}

/// Runs `config` through every event of `stream` up to `horizon`.
pub fn evolve(env: &EnvironmentField, config: &mut Configuration, horizon: f64, stream: &mut EventStream) -> Result<()> {
    evolve_observed(env, config, horizon, stream, &mut ())
}

pub fn evolve_observed<O: EventObserver>(
    env: &EnvironmentField,
    config: &mut Configuration,
    horizon: f64,
    stream: &mut EventStream,
    observer: &mut O,
) -> Result<()> {
    check_compatible(env, config, stream)?;
    let dynamics = Dynamics::new(env);
    while let Some(ev) = stream.next_before(horizon) {
        observer.advance(ev.t, config.occupancy());
        let mv = dynamics.apply(config, &ev);
        observer.on_event(&ev, mv, config.occupancy());
    }
    observer.advance(horizon, config.occupancy());
    Ok(())
}

fn check_compatible(env: &EnvironmentField, config: &Configuration, stream: &EventStream) -> Result<()> {
    if config.lattice() != env.lattice {
        return Err(Error::LatticeMismatch { expected: env.len(), found: config.len() });
    }
    if config.capacity() != env.capacity {
        return Err(structural(format!(
            "configuration capacity {} differs from model capacity {}",
            config.capacity(),
            env.capacity
        )));
    }
    if stream.sites() != env.len() {
        return Err(Error::LatticeMismatch { expected: env.len(), found: stream.sites() });
    }
    if (stream.site_rate() - env.mark_rate()).abs() > 1e-12 * env.mark_rate() {
        return Err(structural(format!(
            "stream rate {} differs from mark intensity {}",
            stream.site_rate(),
            env.mark_rate()
        )));
    }
    Ok(())
}

/// A stream matched to `env`.
pub fn stream_for(env: &EnvironmentField, seed: u64) -> Result<EventStream> {
    EventStream::new(seed, env.len(), env.mark_rate())
}

/// Several configurations driven by one event stream (basic coupling).
#[derive(Clone, Debug)]
pub struct CoupledEnsemble<'a> {
    env: &'a EnvironmentField,
    configs: Vec<Configuration>,
    time: f64,
}

impl<'a> CoupledEnsemble<'a> {
    pub fn new(env: &'a EnvironmentField, configs: Vec<Configuration>) -> Result<Self> {
        for c in &configs {
            if c.lattice() != env.lattice || c.capacity() != env.capacity {
                return Err(Error::LatticeMismatch { expected: env.len(), found: c.len() });
            }
        }
        Ok(Self { env, configs, time: 0.0 })
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn into_configs(self) -> Vec<Configuration> {
        self.configs
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Advances every copy to `horizon`. `after_event` sees the ensemble
    /// after each event together with the sites it touched, and may stop the
    /// run early by returning `false`.
    pub fn evolve_with(
        &mut self,
        horizon: f64,
        stream: &mut EventStream,
        mut after_event: impl FnMut(&Event, &[Configuration], &[usize]) -> bool,
    ) -> Result<()> {
        if let Some(c) = self.configs.first() {
            check_compatible(self.env, c, stream)?;
        }
        let dynamics = Dynamics::new(self.env);
        let mut touched = Vec::with_capacity(2 * self.configs.len());
        while let Some(ev) = stream.next_before(horizon) {
            touched.clear();
            for c in &mut self.configs {
                if let Some(mv) = dynamics.apply(c, &ev) {
                    touched.push(mv.from);
                    touched.push(mv.to);
                }
            }
            self.time = ev.t;
            if !touched.is_empty() && !after_event(&ev, &self.configs, &touched) {
                return Ok(());
            }
        }
        self.time = horizon;
        Ok(())
    }

    pub fn evolve(&mut self, horizon: f64, stream: &mut EventStream) -> Result<()> {
        self.evolve_with(horizon, stream, |_, _, _| true)
    }
}

/// Evolves every configuration with the same noise; output `i` equals
/// [`evolve`] of `configs[i]` with a stream of the same seed.
pub fn evolve_coupled(
    env: &EnvironmentField,
    configs: Vec<Configuration>,
    horizon: f64,
    stream: &mut EventStream,
) -> Result<Vec<Configuration>> {
    if let Some(first) = configs.first() {
        if let Some(bad) = configs.iter().find(|c| c.len() != first.len()) {
            return Err(Error::LatticeMismatch { expected: first.len(), found: bad.len() });
        }
    }
    let mut ensemble = CoupledEnsemble::new(env, configs)?;
    ensemble.evolve(horizon, stream)?;
    Ok(ensemble.into_configs())
}

/// CSV log of events: `t,x,v1,v2,accepted`.
pub struct EventTrace<W: Write> {
    out: W,
    error: Option<std::io::Error>,
}

impl<W: Write> EventTrace<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "t,x,v1,v2,accepted")?;
        Ok(Self { out, error: None })
    }

    pub fn finish(mut self) -> std::io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> EventObserver for EventTrace<W> {
    fn on_event(&mut self, ev: &Event, mv: Option<Move>, _occ: &[u8]) {
        if self.error.is_none() {
            if let Err(e) = writeln!(self.out, "{:?},{},{:?},{:?},{}", ev.t, ev.x, ev.v1, ev.v2, mv.is_some() as u8) {
                self.error = Some(e);
            }
        }
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Exact resume point of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub time: f64,
    pub config: Configuration,
    pub stream: EventStream,
}

impl Checkpoint {
    pub fn new(time: f64, config: Configuration, stream: EventStream) -> Self {
        Self { format_version: CHECKPOINT_VERSION, time, config, stream }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cp: Self = serde_json::from_str(s)?;
        if cp.format_version != CHECKPOINT_VERSION {
            return Err(structural(format!("unsupported checkpoint version {}", cp.format_version)));
        }
        Ok(cp)
    }
}
