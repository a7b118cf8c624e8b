use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::hash::sha256_hex;
use crate::error::{Error, Result};
use crate::flux::FluxParams;
use crate::harness::{DiscrepancyInit, StabilityInit};
use crate::model::ModelSpec;
use crate::pde::{PdeParams, StepProfile};
use crate::rng::{derive_seed, tag};

/// Single-file run description. Every threshold used by a verdict lives in
/// [`Thresholds`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub model: ModelSpec,
    #[serde(default)]
    pub flux: Option<FluxSection>,
    #[serde(default)]
    pub pde: Option<PdeSection>,
    #[serde(default)]
    pub hydro: Option<HydroSection>,
    #[serde(default)]
    pub simulate: Option<SimulateSection>,
    #[serde(default)]
    pub coupling: Option<CouplingSection>,
    #[serde(default)]
    pub thresholds: Thresholds,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("hydrolimit-out")
}

fn default_batches() -> usize {
    crate::flux::MIN_BATCHES
}

fn default_one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSection {
    /// Explicit density grid; must contain 0 and K.
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
    /// Number of equal cells of `[0, K]` when no grid is given.
    #[serde(default)]
    pub cells: Option<usize>,
    pub lattice_len: usize,
    pub burn_in: f64,
    pub horizon: f64,
    #[serde(default = "default_one")]
    pub replicas: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
}

impl FluxSection {
    pub fn grid(&self, capacity: u8) -> Result<Vec<f64>> {
        match (&self.grid, self.cells) {
            (Some(g), _) => Ok(g.clone()),
            (None, Some(n)) if n > 0 => {
                let k = capacity as f64;
                Ok((0..=n).map(|i| if i == n { k } else { k * i as f64 / n as f64 }).collect())
            }
            _ => Err(Error::Config("flux section needs `grid` or a positive `cells`".into())),
        }
    }

    /// Replica seeds `derive(seed, REPLICA, i)`.
    pub fn params(&self, seed: u64, thresholds: &Thresholds) -> FluxParams {
        let seeds = (0..self.replicas as u64).map(|i| derive_seed(seed, tag::REPLICA, i)).collect();
        let mut p = FluxParams::new(self.lattice_len, self.burn_in, self.horizon, seeds);
        p.batches = self.batches;
        p.phase_flag_factor = thresholds.phase_flag_factor;
        p
    }
}

/// Step profile without its capacity, which comes from the model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    /// Consecutive blocks `levels[i]` on `[edges[i], edges[i+1])`, zero
    /// outside.
    Blocks { edges: Vec<f64>, levels: Vec<f64> },
    /// `left` before the first breakpoint, then `values[l]` from
    /// `breakpoints[l]` on.
    Steps {
        #[serde(default)]
        left: f64,
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

impl ProfileSpec {
    pub fn build(&self, capacity: u8) -> Result<StepProfile> {
        match self {
            Self::Blocks { edges, levels } => StepProfile::blocks(capacity, edges, levels),
            Self::Steps { left, breakpoints, values } => StepProfile::new(capacity, *left, breakpoints.clone(), values.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeSection {
    pub dx: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Data and times for `solve-pde`.
    #[serde(default)]
    pub profile: Option<ProfileSpec>,
    #[serde(default)]
    pub times: Vec<f64>,
}

fn default_cfl() -> f64 {
    0.9
}

fn default_margin() -> f64 {
    0.5
}

impl PdeSection {
    pub fn params(&self) -> PdeParams {
        PdeParams { dx: self.dx, cfl: self.cfl, margin: self.margin }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedProfile {
    pub name: String,
    pub profile: ProfileSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiemannSection {
    pub lambda: f64,
    pub rho: f64,
    pub velocities: Vec<f64>,
    #[serde(default)]
    pub scales: Option<Vec<usize>>,
    #[serde(default)]
    pub seeds: Option<usize>,
    #[serde(default = "default_half_burn_in")]
    pub burn_in: f64,
}

fn default_half_burn_in() -> f64 {
    100.0
}

fn default_time_points() -> usize {
    10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HydroSection {
    pub scales: Vec<usize>,
    pub time: f64,
    #[serde(default = "default_time_points")]
    pub time_points: usize,
    pub seeds: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
    #[serde(default)]
    pub padding: Option<f64>,
    #[serde(default)]
    pub profiles: Vec<NamedProfile>,
    #[serde(default)]
    pub riemann: Option<RiemannSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometrySpec {
    Ring,
    Segment,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub lattice_len: usize,
    #[serde(default = "default_geometry")]
    pub geometry: GeometrySpec,
    pub horizon: f64,
    pub density: f64,
    #[serde(default)]
    pub observer_velocity: f64,
    /// Write the event log as CSV.
    #[serde(default)]
    pub trace: bool,
}

fn default_geometry() -> GeometrySpec {
    GeometrySpec::Ring
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderingSection {
    pub trials: usize,
    pub lattice_len: usize,
    /// Horizon in attempted events per site.
    pub events_per_site: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscrepancySection {
    pub trials: usize,
    pub lattice_len: usize,
    pub times: Vec<f64>,
    pub init: DiscrepancyInit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    pub pairs: usize,
    pub lattice_len: usize,
    pub horizon: f64,
    pub init: StabilityInit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    #[serde(default)]
    pub ordering: Option<OrderingSection>,
    #[serde(default)]
    pub discrepancy: Option<DiscrepancySection>,
    #[serde(default)]
    pub stability: Option<StabilitySection>,
}

/// Tolerances and calibration constants of every verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Multiple of the standard error allowed in statistical comparisons.
    pub sigma: f64,
    /// Block-variance multiple flagging phase separation in flux runs.
    pub phase_flag_factor: f64,
    /// Largest allowed seed-averaged `|current ratio - G_v|` at the largest
    /// scale.
    pub current_tolerance: f64,
    /// Largest allowed final `Delta^N` at the largest scale, relative to the
    /// total mass.
    pub delta_fraction: f64,
    /// Largest allowed final/initial opposite-discrepancy ratio.
    pub discrepancy_fraction: f64,
    /// Stability slack relative to the total mass.
    pub stability_slack: f64,
    /// Required fraction of stable pairs.
    pub stability_fraction: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            sigma: 3.0,
            phase_flag_factor: 4.0,
            current_tolerance: 0.05,
            delta_fraction: 0.05,
            discrepancy_fraction: 0.2,
            stability_slack: 0.05,
            stability_fraction: 0.95,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// The configuration with the output location cleared: two runs that
    /// differ only in where they write share a hash and a snapshot.
    pub fn canonical(&self) -> Self {
        Self { output_dir: PathBuf::new(), ..self.clone() }
    }

    /// Canonical JSON encoding, the basis of [`RunConfig::hash`].
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.canonical())?)
    }

    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.canonical_json()?.as_bytes()))
    }

    pub fn pde_params(&self) -> PdeParams {
        self.pde.as_ref().map_or_else(|| PdeParams::new(0.005), PdeSection::params)
    }

    /// Seeds `derive(seed, TRIAL, i)` for `n` independent jobs of one kind.
    pub fn job_seeds(&self, stream: u64, n: usize) -> Vec<u64> {
        (0..n as u64).map(|i| derive_seed(derive_seed(self.seed, tag::TRIAL, stream), tag::REPLICA, i)).collect()
    }
}
