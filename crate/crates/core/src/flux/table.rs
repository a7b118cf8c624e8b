use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{estimate_flux_points, FluxParams, FluxPoint};
use crate::error::{invalid, structural, Result};
use crate::io::{model_hash, sha256_hex};
use crate::model::{EnvironmentLaw, ModelSpec};

pub const FLUX_TABLE_VERSION: u32 = 1;

/// Provenance of a flux table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxMeta {
    pub model_hash: String,
    pub family: String,
    pub environment: EnvironmentLaw,
    pub lattice_len: usize,
    pub burn_in: f64,
    pub horizon: f64,
    pub batches: usize,
    pub seeds: Vec<u64>,
}

/// Per-point diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub halves_agree: bool,
    pub block_variance: f64,
    pub phase_flag: bool,
}

/// Tabulated homogenized flux with its piecewise-linear interpolant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxTable {
    pub format_version: u32,
    pub capacity: u8,
    pub densities: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub diagnostics: Vec<PointDiagnostics>,
    pub meta: Option<FluxMeta>,
}

impl FluxTable {
    /// A table from known values (no statistical error), e.g. a closed-form
    /// flux sampled on a grid.
    pub fn from_values(capacity: u8, densities: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = densities.len();
        let table = Self {
            format_version: FLUX_TABLE_VERSION,
            capacity,
            densities,
            values,
            stderr: vec![0.0; n],
            diagnostics: vec![PointDiagnostics { halves_agree: true, block_variance: 0.0, phase_flag: false }; n],
            meta: None,
        };
        table.check()?;
        Ok(table)
    }

    /// Samples `g` on `n + 1` equally spaced densities in `[0, K]`.
    pub fn from_fn(capacity: u8, n: usize, g: impl Fn(f64) -> f64) -> Result<Self> {
        let k = capacity as f64;
        let densities: Vec<f64> = (0..=n).map(|i| k * i as f64 / n as f64).collect();
        let values = densities.iter().map(|&r| g(r)).collect();
        Self::from_values(capacity, densities, values)
    }

    fn check(&self) -> Result<()> {
        let n = self.densities.len();
        if n < 2 || self.values.len() != n || self.stderr.len() != n || self.diagnostics.len() != n {
            return Err(structural("flux table needs matching grid, values and errors with at least two points"));
        }
        if self.densities.windows(2).any(|w| w[0] >= w[1]) {
            return Err(structural("flux table grid must be strictly increasing"));
        }
        if self.densities[0] != 0.0 || self.densities[n - 1] != self.capacity as f64 {
            return Err(structural("flux table grid must start at 0 and end at K"));
        }
        if self.values.iter().chain(&self.stderr).any(|v| !v.is_finite()) {
            return Err(structural("flux table holds a non-finite entry"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.densities.is_empty()
    }

    /// Linear interpolation; exact at grid densities.
    pub fn interpolate(&self, rho: f64) -> Result<f64> {
        let k = self.capacity as f64;
        if !(0.0..=k).contains(&rho) {
            return Err(invalid(format!("density {rho} outside [0, {k}]")));
        }
        Ok(self.eval(rho))
    }

    /// Interpolant without range checking (clamped to the grid).
    #[inline]
    pub fn eval(&self, rho: f64) -> f64 {
        let d = &self.densities;
        let i = d.partition_point(|&r| r <= rho);
        if i == 0 {
            return self.values[0];
        }
        if i >= d.len() {
            return self.values[d.len() - 1];
        }
        let (r0, r1) = (d[i - 1], d[i]);
        if rho == r0 {
            return self.values[i - 1];
        }
        let w = (rho - r0) / (r1 - r0);
        self.values[i - 1] + w * (self.values[i] - self.values[i - 1])
    }

    /// Lipschitz constant of the interpolant.
    pub fn max_slope(&self) -> f64 {
        self.densities
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(d, v)| (v[1] - v[0]).abs() / (d[1] - d[0]))
            .fold(0.0, f64::max)
    }

    /// Ratio `|G(r_{i+1}) - G(r_i)| / (r_{i+1} - r_i)` and the allowed bound
    /// `V + 3 sqrt(se_i^2 + se_{i+1}^2) / (r_{i+1} - r_i)` on each grid cell.
    pub fn lipschitz_cells(&self, speed: f64) -> Vec<(f64, f64)> {
        (0..self.len() - 1)
            .map(|i| {
                let h = self.densities[i + 1] - self.densities[i];
                let slope = (self.values[i + 1] - self.values[i]).abs() / h;
                let se = (self.stderr[i].powi(2) + self.stderr[i + 1].powi(2)).sqrt();
                (slope, speed + 3.0 * se / h)
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(s)?;
        if t.format_version != FLUX_TABLE_VERSION {
            return Err(structural(format!("unsupported flux table version {}", t.format_version)));
        }
        t.check()?;
        Ok(t)
    }

    /// CSV with columns `density,value,stderr,halves_agree,block_variance,phase_flag`.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "density,value,stderr,halves_agree,block_variance,phase_flag")?;
        for i in 0..self.len() {
            let d = &self.diagnostics[i];
            writeln!(
                out,
                "{:?},{:?},{:?},{},{:?},{}",
                self.densities[i], self.values[i], self.stderr[i], d.halves_agree as u8, d.block_variance, d.phase_flag as u8
            )?;
        }
        Ok(())
    }

    /// Digest of the table contents.
    pub fn content_hash(&self) -> Result<String> {
        Ok(sha256_hex(serde_json::to_string(self)?.as_bytes()))
    }
}

/// Estimates the flux at every grid density and pins `G(0) = G(K) = 0`.
pub fn build_flux_table(spec: &ModelSpec, grid: &[f64], params: &FluxParams) -> Result<FluxTable> {
    let k = spec.capacity as f64;
    if grid.first() != Some(&0.0) || grid.last() != Some(&k) {
        return Err(invalid("flux grid must include 0 and K"));
    }
    let points: Vec<FluxPoint> = estimate_flux_points(spec, grid, params)?;
    let n = points.len();
    let mut values: Vec<f64> = points.iter().map(|p| p.value).collect();
    let mut stderr: Vec<f64> = points.iter().map(|p| p.stderr).collect();
    values[0] = 0.0;
    values[n - 1] = 0.0;
    stderr[0] = 0.0;
    stderr[n - 1] = 0.0;
    let table = FluxTable {
        format_version: FLUX_TABLE_VERSION,
        capacity: spec.capacity,
        densities: grid.to_vec(),
        values,
        stderr,
        diagnostics: points
            .iter()
            .map(|p| PointDiagnostics { halves_agree: p.halves_agree, block_variance: p.block_variance, phase_flag: p.phase_flag })
            .collect(),
        meta: Some(FluxMeta {
            model_hash: model_hash(spec)?,
            family: spec.family.name().to_string(),
            environment: spec.environment.clone(),
            lattice_len: params.lattice_len,
            burn_in: params.burn_in,
            horizon: params.horizon,
            batches: params.batches,
            seeds: params.seeds.clone(),
        }),
    };
    table.check()?;
    Ok(table)
}
