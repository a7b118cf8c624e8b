use serde::{Deserialize, Serialize};

use super::ValidationReport;
use crate::error::{structural, Result};

const SUM_TOLERANCE: f64 = 1e-9;

/// Finitely supported jump kernel `p(z)` on the integers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRecord", into = "KernelRecord")]
pub struct JumpKernel {
    /// `(z, p(z))` sorted by `z`, zero-probability entries removed.
    support: Vec<(i64, f64)>,
    cdf: Vec<f64>,
    /// Mass discarded when the kernel was obtained by truncating an infinite
    /// tail (before renormalization).
    truncated_mass: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelRecord {
    pub support: Vec<(i64, f64)>,
    #[serde(default)]
    pub truncated_mass: f64,
}

impl JumpKernel {
    pub fn new(entries: Vec<(i64, f64)>) -> Result<Self> {
        let mut support: Vec<(i64, f64)> = Vec::new();
        for (z, p) in entries {
            if !(0.0..=1.0).contains(&p) {
                return Err(structural(format!("kernel probability p({z}) = {p} outside [0,1]")));
            }
            match support.iter_mut().find(|(w, _)| *w == z) {
                Some(e) => e.1 += p,
                None => support.push((z, p)),
            }
        }
        support.retain(|&(_, p)| p > 0.0);
        if support.is_empty() {
            return Err(structural("kernel support is empty"));
        }
        support.sort_by_key(|&(z, _)| z);
        let total: f64 = support.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(structural(format!("kernel probabilities sum to {total}, expected 1")));
        }
        let mut acc = 0.0;
        let cdf = support
            .iter()
            .map(|&(_, p)| {
                acc += p;
                acc
            })
            .collect();
        Ok(Self { support, cdf, truncated_mass: 0.0 })
    }

    /// Truncates a (possibly infinitely supported) kernel to `|z| <= range`
    /// and renormalizes. The discarded mass is kept in the record.
    pub fn truncated(weight: impl Fn(i64) -> f64, range: i64) -> Result<Self> {
        let raw: Vec<(i64, f64)> = (-range..=range).map(|z| (z, weight(z))).collect();
        let kept: f64 = raw.iter().map(|&(_, p)| p).sum();
        if kept <= 0.0 {
            return Err(structural("truncated kernel has no mass"));
        }
        let mut k = Self::new(raw.into_iter().map(|(z, p)| (z, p / kept)).collect())?;
        k.truncated_mass = (1.0 - kept).max(0.0);
        Ok(k)
    }

    /// `p(1) = 1`.
    pub fn totally_asymmetric() -> Self {
        Self::new(vec![(1, 1.0)]).unwrap()
    }

    /// `p(1) = right`, `p(-1) = 1 - right`.
    pub fn nearest_neighbor(right: f64) -> Result<Self> {
        Self::new(vec![(1, right), (-1, 1.0 - right)])
    }

    pub fn support(&self) -> &[(i64, f64)] {
        &self.support
    }

    pub fn prob(&self, z: i64) -> f64 {
        self.support.iter().find(|&&(w, _)| w == z).map_or(0.0, |&(_, p)| p)
    }

    /// Index in [`support`](Self::support) of the displacement selected by
    /// the uniform `u` (inverse CDF, support ordered by `z`).
    #[inline]
    pub fn select_index(&self, u: f64) -> usize {
        if self.cdf.len() == 1 {
            return 0;
        }
        let i = self.cdf.partition_point(|&c| c <= u);
        i.min(self.cdf.len() - 1)
    }

    #[inline]
    pub fn select(&self, u: f64) -> i64 {
        self.support[self.select_index(u)].0
    }

    /// A uniform that [`select`](Self::select) maps to `z` (midpoint of its
    /// CDF interval), if `z` is in the support.
    pub fn uniform_for(&self, z: i64) -> Option<f64> {
        let i = self.support.iter().position(|&(w, _)| w == z)?;
        let lo = if i == 0 { 0.0 } else { self.cdf[i - 1] };
        Some(0.5 * (lo + self.cdf[i]))
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().map(|&(z, p)| z as f64 * p).sum()
    }

    pub fn mean_abs(&self) -> f64 {
        self.support.iter().map(|&(z, p)| z.unsigned_abs() as f64 * p).sum()
    }

    pub fn third_moment(&self) -> f64 {
        self.support.iter().map(|&(z, p)| (z.unsigned_abs() as f64).powi(3) * p).sum()
    }

    pub fn max_range(&self) -> i64 {
        self.support.iter().map(|&(z, _)| z.abs()).max().unwrap_or(0)
    }

    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    /// Irreducibility (A1): every `z != 0` is reached, as `z` or `-z`, by some
    /// convolution power. With displacements of both signs the reachable set
    /// is `g Z` with `g` the gcd of the support, so `g = 1` is required. With
    /// one sign only, the positive (or negative) semigroup must contain 1,
    /// i.e. `±1` must be in the support.
    pub fn is_irreducible(&self) -> bool {
        let nonzero: Vec<i64> = self.support.iter().map(|&(z, _)| z).filter(|&z| z != 0).collect();
        if nonzero.is_empty() {
            return false;
        }
        let has_pos = nonzero.iter().any(|&z| z > 0);
        let has_neg = nonzero.iter().any(|&z| z < 0);
        if has_pos && has_neg {
            nonzero.iter().fold(0i64, |g, &z| gcd(g, z.abs())) == 1
        } else {
            nonzero.iter().any(|&z| z.abs() == 1)
        }
    }

    /// Reports A1 (irreducibility), A2 (finite mean) and the third moment.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::new();
        let a1 = self.is_irreducible();
        let detail = if a1 {
            "every z != 0 reachable as z or -z".to_string()
        } else {
            let g = self.support.iter().fold(0i64, |g, &(z, _)| gcd(g, z.abs()));
            format!("some z unreachable (support gcd {g}, one-signed without a unit step or all mass at 0)")
        };
        report.push("A1", a1, detail);
        report.push("A2", true, format!("sum |z| p(z) = {}", self.mean_abs()));
        let mut third = format!("sum |z|^3 p(z) = {}", self.third_moment());
        if self.truncated_mass > 0.0 {
            third.push_str(&format!(" (tail mass {:.3e} truncated and renormalized)", self.truncated_mass));
        }
        report.push("moment3", true, third);
        report
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

impl TryFrom<KernelRecord> for JumpKernel {
    type Error = crate::Error;

    fn try_from(r: KernelRecord) -> Result<Self> {
        let mut k = Self::new(r.support)?;
        k.truncated_mass = r.truncated_mass;
        Ok(k)
    }
}

impl From<JumpKernel> for KernelRecord {
    fn from(k: JumpKernel) -> Self {
        KernelRecord { support: k.support, truncated_mass: k.truncated_mass }
    }
}
