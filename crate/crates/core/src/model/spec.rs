use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::environment::KStepField;
use super::{
    EnvironmentField, EnvironmentLaw, JumpKernel, KPath, Lattice, PathLaw, RateFunction, SelfAvoidingLaw,
    ValidationReport,
};
use crate::error::{structural, Result};
use crate::rng::{derive_seed, rng_from_seed, tag};

/// Coarse classification used by the property suites.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyClass {
    Misanthrope,
    GeneralizedMisanthrope,
    KStep,
    Traffic,
}

/// A model family together with its non-random ingredients. The random
/// ingredient of each family is a scalar field drawn from the spec's
/// [`EnvironmentLaw`]:
///
/// | family | field |
/// |---|---|
/// | `misanthrope` | `alpha(x)` in `[c, 1/c]` |
/// | `bond_misanthrope` | `alpha(x, x+z) = zeta p(z)`, `zeta` in `[c, 1/c]`, one draw per bond |
/// | `switching_misanthrope` | `alpha(x)` in `{0, 1}` selecting `rates[alpha(x)]` |
/// | `kstep_random_walk` | `beta^i_x = alpha(x)` in `[c, 1/c]` on every path |
/// | `kstep_two_sided` | `gamma^i_x`, `iota^i_x` in `[c, 1]`, sorted decreasing in `i` |
/// | `kstep_nearest_neighbor` | right-step probability `p_x` in `[c/2, 1 - c/2]` |
/// | `traffic` | `beta^1_x` in `[c, 1/c]` |
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Misanthrope {
        rate: RateFunction,
        kernel: JumpKernel,
    },
    BondMisanthrope {
        rate: RateFunction,
        kernel: JumpKernel,
    },
    SwitchingMisanthrope {
        kernel: JumpKernel,
        rates: [RateFunction; 2],
    },
    /// Walk with kernel `kernel` for `k` steps, optionally absorbed at the
    /// origin; rate `alpha(x)` on every step.
    KstepRandomWalk {
        kernel: JumpKernel,
        k: usize,
        #[serde(default = "default_true")]
        absorbed: bool,
        #[serde(default)]
        envelope: Option<JumpKernel>,
    },
    /// Straight paths `(1..k)` and `(-1..-k)` with probability 1/2 each and
    /// rates `2 gamma^i_x`, `2 iota^i_x`.
    KstepTwoSided {
        k: usize,
        #[serde(default)]
        envelope: Option<JumpKernel>,
    },
    /// Absorbed nearest-neighbor walk with site-dependent bias, unit rates.
    KstepNearestNeighbor {
        k: usize,
        #[serde(default)]
        envelope: Option<JumpKernel>,
    },
    /// Overtaking range `k` with weights over `-k..-1, 1..k`.
    Traffic {
        k: usize,
        weights: Vec<f64>,
    },
}

fn default_true() -> bool {
    true
}

impl Family {
    pub fn class(&self) -> FamilyClass {
        match self {
            Self::Misanthrope { .. } => FamilyClass::Misanthrope,
            Self::BondMisanthrope { .. } | Self::SwitchingMisanthrope { .. } => FamilyClass::GeneralizedMisanthrope,
            Self::KstepRandomWalk { .. } | Self::KstepTwoSided { .. } | Self::KstepNearestNeighbor { .. } => {
                FamilyClass::KStep
            }
            Self::Traffic { .. } => FamilyClass::Traffic,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Misanthrope { .. } => "misanthrope",
            Self::BondMisanthrope { .. } => "bond_misanthrope",
            Self::SwitchingMisanthrope { .. } => "switching_misanthrope",
            Self::KstepRandomWalk { .. } => "kstep_random_walk",
            Self::KstepTwoSided { .. } => "kstep_two_sided",
            Self::KstepNearestNeighbor { .. } => "kstep_nearest_neighbor",
            Self::Traffic { .. } => "traffic",
        }
    }
}

/// Complete description of a disordered model: family, capacity `K`,
/// ellipticity constant `c` and environment law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub capacity: u8,
    pub c: f64,
    pub environment: EnvironmentLaw,
}

/// `V = 2 k^2 c^{-1} sum |z| P(z)`, multiplied by `max(1, beta_max)` to
/// cover rates above 1.
pub fn lipschitz_kstep(k: usize, c: f64, envelope: &JumpKernel, beta_max: f64) -> f64 {
    2.0 * (k * k) as f64 / c * envelope.mean_abs() * beta_max.max(1.0)
}

impl ModelSpec {
    /// Homogeneous or disordered site misanthrope.
    pub fn misanthrope(capacity: u8, c: f64, rate: RateFunction, kernel: JumpKernel, environment: EnvironmentLaw) -> Self {
        Self { family: Family::Misanthrope { rate, kernel }, capacity, c, environment }
    }

    /// Totally asymmetric exclusion with site rates from `environment`.
    pub fn tasep(c: f64, environment: EnvironmentLaw) -> Self {
        Self::misanthrope(1, c, RateFunction::exclusion(1), JumpKernel::totally_asymmetric(), environment)
    }

    pub fn class(&self) -> FamilyClass {
        self.family.class()
    }

    /// Range the environment law must stay in.
    fn admissible_range(&self) -> (f64, f64, &'static str) {
        let c = self.c;
        match &self.family {
            Family::Misanthrope { .. } | Family::BondMisanthrope { .. } => (c, 1.0 / c, "ellipticity"),
            Family::SwitchingMisanthrope { .. } => (0.0, 1.0, "switch"),
            Family::KstepRandomWalk { .. } | Family::Traffic { .. } => (c, 1.0 / c, "beta1"),
            Family::KstepTwoSided { .. } => (c, 1.0, "beta1"),
            Family::KstepNearestNeighbor { .. } => (0.5 * c, 1.0 - 0.5 * c, "q-lower"),
        }
    }

    /// Assumption-by-assumption verdicts for the spec. Structural problems
    /// (malformed law, bad `c` or `K`) are errors.
    pub fn validate(&self) -> Result<ValidationReport> {
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(structural(format!("ellipticity constant c = {} outside (0, 1]", self.c)));
        }
        if self.capacity == 0 {
            return Err(structural("capacity K must be at least 1"));
        }
        self.environment.check()?;
        let mut report = ValidationReport::new();
        let check_capacity = |rate: &RateFunction| -> Result<()> {
            if rate.capacity() != self.capacity {
                return Err(structural(format!(
                    "rate table capacity {} differs from K = {}",
                    rate.capacity(),
                    self.capacity
                )));
            }
            Ok(())
        };
        match &self.family {
            Family::Misanthrope { rate, kernel } | Family::BondMisanthrope { rate, kernel } => {
                check_capacity(rate)?;
                report.extend(kernel.validate());
                report.extend(rate.validate());
            }
            Family::SwitchingMisanthrope { kernel, rates } => {
                report.extend(kernel.validate());
                for (i, r) in rates.iter().enumerate() {
                    check_capacity(r)?;
                    let mut sub = r.validate();
                    for ch in &mut sub.checks {
                        ch.name = format!("{}[b{i}]", ch.name);
                    }
                    report.extend(sub);
                }
            }
            Family::KstepRandomWalk { kernel, k, .. } => {
                check_k(*k)?;
                report.extend(kernel.validate());
            }
            Family::KstepTwoSided { k, .. } | Family::KstepNearestNeighbor { k, .. } => {
                check_k(*k)?;
            }
            Family::Traffic { k, weights } => {
                check_k(*k)?;
                let law = SelfAvoidingLaw::new(*k, weights)?;
                let total: f64 = weights.iter().sum();
                let p = JumpKernel::new(
                    SelfAvoidingLaw::positions(*k).zip(&law.weights()).map(|(z, w)| (z, w / total)).collect(),
                )?;
                let mut a1 = p.validate();
                a1.checks.retain(|ch| ch.name == "A1");
                report.extend(a1);
            }
        }
        let (lo, hi, name) = self.admissible_range();
        let (a, b) = self.environment.range();
        let ok = match &self.family {
            Family::SwitchingMisanthrope { .. } => discrete_values(&self.environment)
                .is_some_and(|v| v.iter().all(|&x| x == 0.0 || x == 1.0)),
            _ => a >= lo - 1e-12 && b <= hi + 1e-12,
        };
        let detail = match &self.family {
            Family::SwitchingMisanthrope { .. } => "environment values in {0, 1}".to_string(),
            _ => format!("environment values in [{a}, {b}], admissible [{lo}, {hi}]"),
        };
        report.push(name, ok, detail);
        if let Some(p) = self.kstep_envelope() {
            let (lo_q, hi_q) = self.kstep_envelope_check(&p);
            report.push("q-upper", hi_q.is_none(), hi_q.unwrap_or_else(|| "sup_(i,x) q^i_x <= c^-1 P".into()));
            if let Some(msg) = lo_q {
                report.push("q-lower", false, msg);
            }
        }
        Ok(report)
    }

    /// Speed bound `V` for the flux: a Lipschitz constant of the
    /// homogenized flux and the finite propagation speed of the graphical
    /// construction.
    pub fn lipschitz_bound(&self) -> f64 {
        let c = self.c;
        match &self.family {
            Family::Misanthrope { rate, kernel } | Family::BondMisanthrope { rate, kernel } => {
                2.0 / c * rate.sup_norm() * kernel.mean_abs()
            }
            Family::SwitchingMisanthrope { kernel, rates } => {
                let s = rates.iter().map(RateFunction::sup_norm).fold(0.0, f64::max);
                2.0 / c * s * kernel.mean_abs()
            }
            Family::KstepRandomWalk { k, .. } | Family::KstepTwoSided { k, .. } | Family::KstepNearestNeighbor { k, .. } => {
                let p = self.kstep_envelope().expect("k-step family has an envelope");
                lipschitz_kstep(*k, c, &p, self.beta_max())
            }
            Family::Traffic { k, .. } => {
                let (p, c2) = traffic_envelope(*k, c);
                lipschitz_kstep(2 * k, c2, &p, self.beta_max())
            }
        }
    }

    /// Largest path rate the environment can produce (k-step and traffic).
    fn beta_max(&self) -> f64 {
        let (_, hi) = self.environment.range();
        match &self.family {
            Family::KstepRandomWalk { .. } | Family::Traffic { .. } => hi,
            Family::KstepTwoSided { .. } => 2.0 * hi,
            _ => 1.0,
        }
    }

    /// Maximal jump range of one event.
    pub fn max_range(&self) -> i64 {
        match &self.family {
            Family::Misanthrope { kernel, .. }
            | Family::BondMisanthrope { kernel, .. }
            | Family::SwitchingMisanthrope { kernel, .. } => kernel.max_range(),
            Family::KstepRandomWalk { kernel, k, .. } => kernel.max_range() * *k as i64,
            Family::KstepTwoSided { k, .. } | Family::KstepNearestNeighbor { k, .. } | Family::Traffic { k, .. } => {
                *k as i64
            }
        }
    }

    /// Path law at a site with environment value `a`.
    fn kstep_law(&self, a: f64, b: &[f64]) -> Result<PathLaw> {
        match &self.family {
            Family::KstepRandomWalk { kernel, k, absorbed, .. } => PathLaw::random_walk(kernel, *k, *absorbed, vec![a; *k]),
            Family::KstepNearestNeighbor { k, .. } => {
                PathLaw::random_walk(&JumpKernel::nearest_neighbor(a)?, *k, true, vec![1.0; *k])
            }
            Family::KstepTwoSided { k, .. } => {
                let (gamma, iota) = b.split_at(*k);
                let right = KPath { positions: (1..=*k as i64).collect(), beta: gamma.iter().map(|g| 2.0 * g).collect() };
                let left = KPath { positions: (1..=*k as i64).map(|i| -i).collect(), beta: iota.iter().map(|g| 2.0 * g).collect() };
                PathLaw::new(*k, vec![(right, 0.5), (left, 0.5)])
            }
            _ => unreachable!("not a k-step family"),
        }
    }

    /// Lower kernel `p` of the bound `inf_x q^1_x >= c p`.
    fn kstep_lower(&self) -> Option<JumpKernel> {
        match &self.family {
            Family::KstepRandomWalk { kernel, .. } => Some(kernel.clone()),
            Family::KstepTwoSided { .. } | Family::KstepNearestNeighbor { .. } => JumpKernel::nearest_neighbor(0.5).ok(),
            _ => None,
        }
    }

    /// Envelope `P` of the bound `sup q^i_x <= c^{-1} P`. Unless declared,
    /// it is the normalized pointwise maximum of the marginals over the
    /// admissible environment values (sampled on a grid of the range for the
    /// nearest-neighbor family).
    pub fn kstep_envelope(&self) -> Option<JumpKernel> {
        let (declared, k) = match &self.family {
            Family::KstepRandomWalk { envelope, k, .. }
            | Family::KstepTwoSided { envelope, k }
            | Family::KstepNearestNeighbor { envelope, k } => (envelope, *k),
            _ => return None,
        };
        if let Some(p) = declared {
            return Some(p.clone());
        }
        let max = self.kstep_marginal_max(k);
        let total: f64 = max.iter().map(|e| e.1).sum();
        JumpKernel::new(max.into_iter().map(|(z, m)| (z, m / total)).collect()).ok()
    }

    fn kstep_probe_laws(&self) -> Vec<PathLaw> {
        let (lo, hi) = self.environment.range();
        match &self.family {
            Family::KstepNearestNeighbor { .. } => (0..=100)
                .map(|i| lo + (hi - lo) * i as f64 / 100.0)
                .filter_map(|p| self.kstep_law(p, &[]).ok())
                .collect(),
            Family::KstepTwoSided { k, .. } => self.kstep_law(0.0, &vec![0.5; 2 * k]).into_iter().collect(),
            _ => self.kstep_law(1.0, &[]).into_iter().collect(),
        }
    }

    fn kstep_marginal_max(&self, k: usize) -> Vec<(i64, f64)> {
        let mut max: Vec<(i64, f64)> = Vec::new();
        for law in self.kstep_probe_laws() {
            for i in 1..=k {
                for (z, q) in law.marginal(i) {
                    match max.iter_mut().find(|e| e.0 == z) {
                        Some(e) => e.1 = e.1.max(q),
                        None => max.push((z, q)),
                    }
                }
            }
        }
        max.sort_by_key(|e| e.0);
        max
    }

    fn kstep_envelope_check(&self, p: &JumpKernel) -> (Option<String>, Option<String>) {
        let Some(lower) = self.kstep_lower() else { return (None, None) };
        let c = self.c;
        let mut hi_msg = None;
        for law in self.kstep_probe_laws() {
            for i in 1..=law.k() {
                for (z, q) in law.marginal(i) {
                    if q > p.prob(z) / c + 1e-12 && hi_msg.is_none() {
                        hi_msg = Some(format!("q^{i}({z}) = {q} > c^-1 P({z}) = {}", p.prob(z) / c));
                    }
                }
            }
        }
        let lo_msg = (!lower.is_irreducible()).then(|| "lower kernel p fails A1".to_string());
        (lo_msg, hi_msg)
    }

    /// Draws the quenched environment on `lattice`, deterministically in
    /// `seed`. Refuses laws that leave the family's admissible range.
    pub fn sample_environment(&self, lattice: Lattice, seed: u64) -> Result<EnvironmentField> {
        if lattice.len == 0 {
            return Err(structural("lattice must have at least one site"));
        }
        let report = self.validate()?;
        let (_, _, range_check) = self.admissible_range();
        if let Some(ch) = report.check(range_check).filter(|ch| !ch.passed) {
            return Err(structural(format!("environment law rejected: {}", ch.detail)));
        }
        let mut rng = rng_from_seed(derive_seed(seed, tag::ENVIRONMENT, 0));
        let n = lattice.len;
        let c = self.c;
        match &self.family {
            Family::Misanthrope { rate, kernel } => {
                let alpha = self.environment.sample(n, &mut rng);
                EnvironmentField::misanthrope(lattice, c, rate.clone(), kernel.clone(), alpha)
            }
            Family::BondMisanthrope { rate, kernel } => {
                let s = kernel.support().len();
                let zeta = self.environment.sample(n * s, &mut rng);
                let bond = zeta.iter().enumerate().map(|(i, z)| z * kernel.support()[i % s].1).collect();
                EnvironmentField::bond(lattice, c, rate.clone(), kernel.clone(), kernel.clone(), bond)
            }
            Family::SwitchingMisanthrope { kernel, rates } => {
                let alpha = self.environment.sample(n, &mut rng);
                EnvironmentField::switching(lattice, c, kernel.clone(), rates.clone(), alpha)
            }
            Family::KstepRandomWalk { k, .. } | Family::KstepNearestNeighbor { k, .. } | Family::KstepTwoSided { k, .. } => {
                let k = *k;
                let two_sided = matches!(self.family, Family::KstepTwoSided { .. });
                let per_site = if two_sided { 2 * k } else { 1 };
                let raw = self.environment.sample(n * per_site, &mut rng);
                let mut laws = Vec::new();
                let mut index: HashMap<Vec<u64>, u32> = HashMap::new();
                let mut law_of_site = Vec::with_capacity(n);
                for x in 0..n {
                    let mut vals = raw[x * per_site..(x + 1) * per_site].to_vec();
                    if two_sided {
                        vals[..k].sort_by(|a, b| b.total_cmp(a));
                        vals[k..].sort_by(|a, b| b.total_cmp(a));
                    }
                    let key: Vec<u64> = vals.iter().map(|v| v.to_bits()).collect();
                    let id = match index.get(&key) {
                        Some(&id) => id,
                        None => {
                            let law = if two_sided { self.kstep_law(0.0, &vals)? } else { self.kstep_law(vals[0], &[])? };
                            laws.push(law);
                            let id = (laws.len() - 1) as u32;
                            index.insert(key, id);
                            id
                        }
                    };
                    law_of_site.push(id);
                }
                let field = KStepField {
                    k,
                    laws,
                    law_of_site,
                    lower: self.kstep_lower().expect("k-step family has a lower kernel"),
                    envelope: self.kstep_envelope().ok_or_else(|| structural("could not derive a path envelope"))?,
                };
                EnvironmentField::kstep(lattice, self.capacity, c, field)
            }
            Family::Traffic { k, weights } => {
                let law = SelfAvoidingLaw::new(*k, weights)?;
                let beta = self.environment.sample(n, &mut rng);
                EnvironmentField::traffic(lattice, self.capacity, c, law, beta)
            }
        }
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(structural("step count k must be at least 1"));
    }
    Ok(())
}

fn discrete_values(law: &EnvironmentLaw) -> Option<Vec<f64>> {
    use super::ValueDistribution as V;
    match law {
        EnvironmentLaw::Iid { value: V::PointMass { value } } => Some(vec![*value]),
        EnvironmentLaw::Iid { value: V::Discrete { values, probs } } => {
            Some(values.iter().zip(probs).filter(|(_, p)| **p > 0.0).map(|(v, _)| *v).collect())
        }
        EnvironmentLaw::Iid { value: V::Uniform { low, high } } => (low == high).then(|| vec![*low]),
        EnvironmentLaw::Markov { values, .. } => Some(values.clone()),
        EnvironmentLaw::RandomPhasePeriodic { pattern } => Some(pattern.clone()),
    }
}

/// Envelope of the traffic model seen as a `2k`-step model: `P` uniform on
/// `{-k..k} \ {0}` and `c' = min(c, 1/(2k))`, so that every marginal
/// (at most 1) is below `c'^{-1} P`.
pub fn traffic_envelope(k: usize, c: f64) -> (JumpKernel, f64) {
    let m = 2 * k;
    let p = JumpKernel::new(SelfAvoidingLaw::positions(k).map(|z| (z, 1.0 / m as f64)).collect())
        .expect("uniform envelope is well formed");
    (p, c.min(1.0 / m as f64))
}
