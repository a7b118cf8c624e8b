use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{JumpKernel, Lattice, PathLaw, RateFunction, SelfAvoidingLaw, ValidationReport};
use crate::error::{structural, Result};
use crate::rng::SimRng;

/// Law of a single real-valued environment coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueDistribution {
    PointMass { value: f64 },
    Uniform { low: f64, high: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

impl ValueDistribution {
    fn check(&self) -> Result<()> {
        match self {
            Self::PointMass { value } if !value.is_finite() => Err(structural("point mass must be finite")),
            Self::Uniform { low, high } if !(low.is_finite() && high.is_finite() && low <= high) => {
                Err(structural(format!("uniform law needs low <= high, got [{low}, {high}]")))
            }
            Self::Discrete { values, probs } => check_discrete(values, probs),
            _ => Ok(()),
        }
    }

    pub fn range(&self) -> (f64, f64) {
        match self {
            Self::PointMass { value } => (*value, *value),
            Self::Uniform { low, high } => (*low, *high),
            Self::Discrete { values, probs } => min_max(values.iter().zip(probs).filter(|(_, p)| **p > 0.0).map(|(v, _)| *v)),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::PointMass { value } => *value,
            Self::Uniform { low, high } => 0.5 * (low + high),
            Self::Discrete { values, probs } => values.iter().zip(probs).map(|(v, p)| v * p).sum(),
        }
    }

    fn sample(&self, rng: &mut SimRng) -> f64 {
        match self {
            Self::PointMass { value } => *value,
            Self::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Self::Discrete { values, probs } => values[pick(probs, rng.random::<f64>())],
        }
    }
}

fn check_discrete(values: &[f64], probs: &[f64]) -> Result<()> {
    if values.is_empty() || values.len() != probs.len() {
        return Err(structural("discrete law needs matching nonempty values and probs"));
    }
    if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || values.iter().any(|v| !v.is_finite()) {
        return Err(structural("discrete law has an invalid entry"));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(structural(format!("discrete probabilities sum to {total}")));
    }
    Ok(())
}

fn pick(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn min_max(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Shift-ergodic law of a scalar random field indexed by the lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnvironmentLaw {
    /// Independent coordinates.
    Iid { value: ValueDistribution },
    /// Stationary finite-state Markov chain along the lattice; state `i`
    /// carries `values[i]`.
    Markov { values: Vec<f64>, transition: Vec<Vec<f64>> },
    /// A periodic pattern read from a uniformly random phase.
    RandomPhasePeriodic { pattern: Vec<f64> },
}

impl EnvironmentLaw {
    pub fn constant(value: f64) -> Self {
        Self::Iid { value: ValueDistribution::PointMass { value } }
    }

    pub fn uniform(low: f64, high: f64) -> Self {
        Self::Iid { value: ValueDistribution::Uniform { low, high } }
    }

    /// Structural checks, including irreducibility of a Markov chain.
    pub fn check(&self) -> Result<()> {
        match self {
            Self::Iid { value } => value.check(),
            Self::Markov { values, transition } => {
                let n = values.len();
                if n == 0 || transition.len() != n || transition.iter().any(|row| row.len() != n) {
                    return Err(structural("Markov law needs an n x n transition matrix for n values"));
                }
                for row in transition {
                    check_discrete(values, row)?;
                }
                if !irreducible(transition) {
                    return Err(structural("Markov transition matrix is not irreducible"));
                }
                Ok(())
            }
            Self::RandomPhasePeriodic { pattern } => {
                if pattern.is_empty() || pattern.iter().any(|v| !v.is_finite()) {
                    return Err(structural("periodic pattern must be nonempty and finite"));
                }
                Ok(())
            }
        }
    }

    /// Smallest and largest value the field can take.
    pub fn range(&self) -> (f64, f64) {
        match self {
            Self::Iid { value } => value.range(),
            Self::Markov { values, .. } => min_max(values.iter().cloned()),
            Self::RandomPhasePeriodic { pattern } => min_max(pattern.iter().cloned()),
        }
    }

    /// Mean of one coordinate under the stationary law.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Iid { value } => value.mean(),
            Self::Markov { values, transition } => {
                stationary(transition).iter().zip(values).map(|(p, v)| p * v).sum()
            }
            Self::RandomPhasePeriodic { pattern } => pattern.iter().sum::<f64>() / pattern.len() as f64,
        }
    }

    /// Draws `n` consecutive coordinates.
    pub fn sample(&self, n: usize, rng: &mut SimRng) -> Vec<f64> {
        match self {
            Self::Iid { value } => (0..n).map(|_| value.sample(rng)).collect(),
            Self::Markov { values, transition } => {
                let pi = stationary(transition);
                let mut state = pick(&pi, rng.random::<f64>());
                let mut out = Vec::with_capacity(n);
                for i in 0..n {
                    if i > 0 {
                        state = pick(&transition[state], rng.random::<f64>());
                    }
                    out.push(values[state]);
                }
                out
            }
            Self::RandomPhasePeriodic { pattern } => {
                let phase = rng.random_range(0..pattern.len());
                (0..n).map(|i| pattern[(i + phase) % pattern.len()]).collect()
            }
        }
    }
}

fn irreducible(t: &[Vec<f64>]) -> bool {
    let n = t.len();
    let reach = |from: usize, forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { t[i][j] } else { t[j][i] };
                if w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(0, true) && reach(0, false)
}

/// Stationary distribution of an irreducible chain, by solving
/// `pi (I - T) = 0, sum pi = 1` with Gaussian elimination.
fn stationary(t: &[Vec<f64>]) -> Vec<f64> {
    let n = t.len();
    // Rows: equations; columns: unknowns pi_j, plus right-hand side.
    let mut a = vec![vec![0.0; n + 1]; n];
    for (j, row) in a.iter_mut().enumerate().take(n - 1) {
        for i in 0..n {
            row[i] = t[i][j] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for v in a[n - 1].iter_mut() {
        *v = 1.0;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, piv);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in 0..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    a.iter().map(|row| row[n].max(0.0)).collect()
}

/// One realization of the quenched environment on a finite lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentField {
    pub lattice: Lattice,
    pub capacity: u8,
    /// Ellipticity constant.
    pub c: f64,
    pub kind: FieldKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldKind {
    Jump(JumpField),
    KStep(KStepField),
    Traffic(TrafficField),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpVariant {
    /// `B = alpha(x) p(z) b(n, m)`.
    Site,
    /// `B = alpha(x, x+z) b(n, m)`.
    Bond,
    /// `B = p(z) b_{alpha(x)}(n, m)` with `alpha(x)` in `{0, 1}`.
    Switching,
}

/// Generalized misanthrope environment in the factored form
/// `B(x, z, n, m) = w(x, z) b_{s(x)}(n, m)`.
///
/// Marks `(z, u)` have intensity `c^{-1} s P(dz) du`, with `P` the envelope
/// kernel and `s` the largest sup norm among the rate tables; `thresholds`
/// caches `w(x, z) / (c^{-1} s P(z))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpField {
    pub variant: JumpVariant,
    /// Lower kernel `p` of the ellipticity bound (carries A1).
    pub lower: JumpKernel,
    /// Envelope kernel `P`, also the law of mark displacements.
    pub envelope: JumpKernel,
    pub scale: f64,
    /// `w(x, z)` by site, one entry per envelope support point.
    pub weights: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub tables: Vec<RateFunction>,
    pub table_of_site: Vec<u8>,
    /// `alpha(x)` for site disorder and switching; empty for bond disorder.
    pub site_values: Vec<f64>,
}

impl JumpField {
    #[inline]
    pub fn support_len(&self) -> usize {
        self.envelope.support().len()
    }

    #[inline]
    pub fn rate_table(&self, x: usize) -> &RateFunction {
        &self.tables[self.table_of_site[x] as usize]
    }

    /// `B(x, z_j, n, m)` for the `j`-th envelope support point.
    #[inline]
    pub fn rate(&self, x: usize, j: usize, n: u8, m: u8) -> f64 {
        self.weights[x * self.support_len() + j] * self.rate_table(x).rate(n, m)
    }

    #[inline]
    pub fn threshold(&self, x: usize, j: usize, n: u8, m: u8) -> f64 {
        self.thresholds[x * self.support_len() + j] * self.rate_table(x).rate(n, m)
    }
}

/// Generalized k-step environment: a path law and rates per site, stored as
/// a palette of laws indexed by site.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KStepField {
    pub k: usize,
    pub laws: Vec<PathLaw>,
    pub law_of_site: Vec<u32>,
    /// Lower kernel `p` with `inf_x q^1_x >= c p`.
    pub lower: JumpKernel,
    /// Envelope `P` with `sup_{i,x} q^i_x <= c^{-1} P`.
    pub envelope: JumpKernel,
}

impl KStepField {
    #[inline]
    pub fn law(&self, x: usize) -> &PathLaw {
        &self.laws[self.law_of_site[x] as usize]
    }

    pub fn beta_max(&self) -> f64 {
        self.laws.iter().map(PathLaw::beta_max).fold(0.0, f64::max)
    }
}

/// Traffic environment: weights over `{-k..k} \ {0}` and the rate `beta^1_x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficField {
    pub k: usize,
    pub law: SelfAvoidingLaw,
    pub beta: Vec<f64>,
}

impl TrafficField {
    pub fn beta_max(&self) -> f64 {
        self.beta.iter().cloned().fold(0.0, f64::max)
    }
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(structural(format!("{what} has {got} entries, expected {want}")));
    }
    Ok(())
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(structural(format!("ellipticity constant c = {c} outside (0, 1]")));
    }
    Ok(())
}

impl EnvironmentField {
    /// Site-disordered misanthrope: rate `alpha(x) p(y - x) b(eta(x), eta(y))`.
    pub fn misanthrope(lattice: Lattice, c: f64, rate: RateFunction, kernel: JumpKernel, alpha: Vec<f64>) -> Result<Self> {
        check_len("alpha", alpha.len(), lattice.len)?;
        let weights = alpha
            .iter()
            .flat_map(|&a| kernel.support().iter().map(move |&(_, p)| a * p))
            .collect();
        let field = JumpField {
            variant: JumpVariant::Site,
            lower: kernel.clone(),
            envelope: kernel,
            scale: 0.0,
            weights,
            thresholds: Vec::new(),
            tables: vec![rate],
            table_of_site: vec![0; lattice.len],
            site_values: alpha,
        };
        Self::jump(lattice, c, field)
    }

    /// Bond-disordered misanthrope: `alpha(x, x + z) = bond[x * S + j]` for
    /// the `j`-th support point of `envelope`.
    pub fn bond(
        lattice: Lattice,
        c: f64,
        rate: RateFunction,
        lower: JumpKernel,
        envelope: JumpKernel,
        bond: Vec<f64>,
    ) -> Result<Self> {
        check_len("bond field", bond.len(), lattice.len * envelope.support().len())?;
        let field = JumpField {
            variant: JumpVariant::Bond,
            lower,
            envelope,
            scale: 0.0,
            weights: bond,
            thresholds: Vec::new(),
            tables: vec![rate],
            table_of_site: vec![0; lattice.len],
            site_values: Vec::new(),
        };
        Self::jump(lattice, c, field)
    }

    /// Rate switching `B = p(z) [(1 - alpha(x)) b_0 + alpha(x) b_1]` with
    /// `alpha(x)` in `{0, 1}`.
    pub fn switching(
        lattice: Lattice,
        c: f64,
        kernel: JumpKernel,
        tables: [RateFunction; 2],
        alpha: Vec<f64>,
    ) -> Result<Self> {
        check_len("alpha", alpha.len(), lattice.len)?;
        if tables[0].capacity() != tables[1].capacity() {
            return Err(structural("switched rate functions have different capacities"));
        }
        let mut table_of_site = Vec::with_capacity(alpha.len());
        for &a in &alpha {
            table_of_site.push(match a {
                v if v == 0.0 => 0,
                v if v == 1.0 => 1,
                v => return Err(structural(format!("switching field value {v} is not 0 or 1"))),
            });
        }
        let weights = (0..lattice.len).flat_map(|_| kernel.support().iter().map(|&(_, p)| p)).collect();
        let field = JumpField {
            variant: JumpVariant::Switching,
            lower: kernel.clone(),
            envelope: kernel,
            scale: 0.0,
            weights,
            thresholds: Vec::new(),
            tables: tables.to_vec(),
            table_of_site,
            site_values: alpha,
        };
        Self::jump(lattice, c, field)
    }

    fn jump(lattice: Lattice, c: f64, mut field: JumpField) -> Result<Self> {
        check_c(c)?;
        if lattice.len == 0 {
            return Err(structural("lattice must have at least one site"));
        }
        if field.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(structural("rate weights must be nonnegative"));
        }
        let capacity = field.tables[0].capacity();
        field.scale = field.tables.iter().map(RateFunction::sup_norm).fold(0.0, f64::max);
        if field.scale <= 0.0 {
            return Err(structural("rate function vanishes identically"));
        }
        let s = field.support_len();
        let norm: Vec<f64> = field.envelope.support().iter().map(|&(_, p)| field.scale * p / c).collect();
        field.thresholds = field.weights.iter().enumerate().map(|(i, w)| w / norm[i % s]).collect();
        Ok(Self { lattice, capacity, c, kind: FieldKind::Jump(field) })
    }

    pub fn kstep(lattice: Lattice, capacity: u8, c: f64, field: KStepField) -> Result<Self> {
        check_c(c)?;
        if capacity == 0 {
            return Err(structural("capacity K must be at least 1"));
        }
        check_len("k-step site index", field.law_of_site.len(), lattice.len)?;
        if field.laws.iter().any(|l| l.k() != field.k) {
            return Err(structural("path laws do not all have length k"));
        }
        if field.law_of_site.iter().any(|&i| i as usize >= field.laws.len()) {
            return Err(structural("site refers to a missing path law"));
        }
        Ok(Self { lattice, capacity, c, kind: FieldKind::KStep(field) })
    }

    pub fn traffic(lattice: Lattice, capacity: u8, c: f64, law: SelfAvoidingLaw, beta: Vec<f64>) -> Result<Self> {
        check_c(c)?;
        if capacity == 0 {
            return Err(structural("capacity K must be at least 1"));
        }
        check_len("beta", beta.len(), lattice.len)?;
        if beta.iter().any(|b| !b.is_finite() || *b <= 0.0) {
            return Err(structural("traffic rates must be positive"));
        }
        let k = law.k();
        if 2 * k > 64 {
            return Err(structural("traffic range k above 32 is not supported"));
        }
        Ok(Self { lattice, capacity, c, kind: FieldKind::Traffic(TrafficField { k, law, beta }) })
    }

    pub fn len(&self) -> usize {
        self.lattice.len
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.len == 0
    }

    /// Total mark intensity per site `r*`: `c^{-1} s` for jump families,
    /// `max(1, beta_max)` for k-step and traffic.
    pub fn mark_rate(&self) -> f64 {
        match &self.kind {
            FieldKind::Jump(f) => f.scale / self.c,
            FieldKind::KStep(f) => f.beta_max().max(1.0),
            FieldKind::Traffic(f) => f.beta_max().max(1.0),
        }
    }

    /// Law of the displacement component of a mark, for jump families.
    pub fn mark_kernel(&self) -> Option<&JumpKernel> {
        match &self.kind {
            FieldKind::Jump(f) => Some(&f.envelope),
            _ => None,
        }
    }

    /// The environment seen from site `s`: `(tau_s alpha)(x) = alpha(x + s)`.
    /// Only meaningful on a ring.
    pub fn rotated(&self, s: usize) -> Self {
        let n = self.lattice.len;
        let s = s % n;
        let rot = |v: &[f64], width: usize| -> Vec<f64> {
            let mut out = Vec::with_capacity(v.len());
            for x in 0..n {
                let src = (x + s) % n;
                out.extend_from_slice(&v[src * width..(src + 1) * width]);
            }
            out
        };
        let mut out = self.clone();
        match &mut out.kind {
            FieldKind::Jump(f) => {
                let w = f.support_len();
                f.weights = rot(&f.weights, w);
                f.thresholds = rot(&f.thresholds, w);
                if !f.site_values.is_empty() {
                    f.site_values = rot(&f.site_values, 1);
                }
                let t = f.table_of_site.clone();
                f.table_of_site = (0..n).map(|x| t[(x + s) % n]).collect();
            }
            FieldKind::KStep(f) => {
                let l = f.law_of_site.clone();
                f.law_of_site = (0..n).map(|x| l[(x + s) % n]).collect();
            }
            FieldKind::Traffic(f) => f.beta = rot(&f.beta, 1),
        }
        out
    }

    /// Exhaustive scan of the ellipticity and path-law bounds of this
    /// realization.
    pub fn check_invariants(&self) -> ValidationReport {
        let c = self.c;
        let mut report = ValidationReport::new();
        let tol = 1e-12;
        match &self.kind {
            FieldKind::Jump(f) => {
                for t in &f.tables {
                    report.extend(t.validate());
                }
                report.extend(single(&f.lower, "A1"));
                match f.variant {
                    JumpVariant::Site => {
                        let bad = f.site_values.iter().position(|&a| a < c - tol || a > 1.0 / c + tol);
                        report.push(
                            "ellipticity",
                            bad.is_none(),
                            match bad {
                                None => format!("{c} <= alpha(x) <= {} at every site", 1.0 / c),
                                Some(x) => format!("alpha({x}) = {} outside [{c}, {}]", f.site_values[x], 1.0 / c),
                            },
                        );
                    }
                    _ => {
                        let k = self.capacity;
                        let mut bad = None;
                        'scan: for x in 0..self.len() {
                            for (j, &(z, pz)) in f.envelope.support().iter().enumerate() {
                                let lo = c * f.lower.prob(z);
                                let hi = f.scale * pz / c;
                                let b_low = f.rate(x, j, 1, k - 1);
                                let b_high = f.rate(x, j, k, 0);
                                if b_low < lo - tol || b_high > hi + tol {
                                    bad = Some((x, z, b_low, b_high, lo, hi));
                                    break 'scan;
                                }
                            }
                        }
                        for &(z, _) in f.lower.support() {
                            if f.envelope.prob(z) == 0.0 {
                                bad = Some((0, z, 0.0, 0.0, c * f.lower.prob(z), 0.0));
                            }
                        }
                        report.push(
                            "ellipticity",
                            bad.is_none(),
                            match bad {
                                None => "c p(z) <= B(x,z,1,K-1) and B(x,z,K,0) <= c^-1 s P(z) everywhere".to_string(),
                                Some((x, z, bl, bh, lo, hi)) => format!(
                                    "at x = {x}, z = {z}: B(1,K-1) = {bl} vs lower {lo}, B(K,0) = {bh} vs upper {hi}"
                                ),
                            },
                        );
                    }
                }
            }
            FieldKind::KStep(f) => {
                report.extend(single(&f.lower, "A1"));
                let mut beta_bad = None;
                let mut order_bad = None;
                for (i, law) in f.laws.iter().enumerate() {
                    for (path, _) in law.iter() {
                        let b1 = path.beta[0];
                        if (b1 < c - tol || b1 > 1.0 / c + tol) && beta_bad.is_none() {
                            beta_bad = Some((i, path.positions.clone(), b1));
                        }
                        if path.beta.windows(2).any(|w| w[0] < w[1]) && order_bad.is_none() {
                            order_bad = Some((i, path.positions.clone()));
                        }
                    }
                }
                report.push(
                    "beta1",
                    beta_bad.is_none(),
                    match &beta_bad {
                        None => format!("beta^1 in [{c}, {}] on every path", 1.0 / c),
                        Some((i, z, b)) => format!("law {i}, path {z:?}: beta^1 = {b}"),
                    },
                );
                report.push(
                    "beta-order",
                    order_bad.is_none(),
                    match &order_bad {
                        None => "beta^i >= beta^(i+1) on every path".to_string(),
                        Some((i, z)) => format!("law {i}, path {z:?}: rates increase along the path"),
                    },
                );
                let mut low_bad = None;
                let mut high_bad = None;
                for (li, law) in f.laws.iter().enumerate() {
                    if !f.law_of_site.contains(&(li as u32)) {
                        continue;
                    }
                    let first = law.marginal(1);
                    for &(z, p) in f.lower.support() {
                        let q = first.iter().find(|e| e.0 == z).map_or(0.0, |e| e.1);
                        if q < c * p - tol && low_bad.is_none() {
                            low_bad = Some((li, z, q, c * p));
                        }
                    }
                    for i in 1..=f.k {
                        for (z, q) in law.marginal(i) {
                            let bound = f.envelope.prob(z) / c;
                            if q > bound + tol && high_bad.is_none() {
                                high_bad = Some((li, i, z, q, bound));
                            }
                        }
                    }
                }
                report.push(
                    "q-lower",
                    low_bad.is_none(),
                    match low_bad {
                        None => "inf_x q^1_x >= c p".to_string(),
                        Some((l, z, q, b)) => format!("law {l}: q^1({z}) = {q} < c p({z}) = {b}"),
                    },
                );
                report.push(
                    "q-upper",
                    high_bad.is_none(),
                    match high_bad {
                        None => "sup_(i,x) q^i_x <= c^-1 P".to_string(),
                        Some((l, i, z, q, b)) => format!("law {l}: q^{i}({z}) = {q} > c^-1 P({z}) = {b}"),
                    },
                );
            }
            FieldKind::Traffic(f) => {
                let weights = f.law.weights();
                let total: f64 = weights.iter().sum();
                let lower = JumpKernel::new(
                    SelfAvoidingLaw::positions(f.k).zip(weights.iter()).map(|(z, w)| (z, w / total)).collect(),
                );
                match lower {
                    Ok(p) => report.extend(single(&p, "A1")),
                    Err(e) => report.push("A1", false, e.to_string()),
                }
                let bad = f.beta.iter().position(|&b| b < c - tol || b > 1.0 / c + tol);
                report.push(
                    "beta1",
                    bad.is_none(),
                    match bad {
                        None => format!("beta^1_x in [{c}, {}] at every site", 1.0 / c),
                        Some(x) => format!("beta^1_{x} = {} outside [{c}, {}]", f.beta[x], 1.0 / c),
                    },
                );
            }
        }
        report
    }
}

fn single(kernel: &JumpKernel, name: &str) -> ValidationReport {
    let mut r = ValidationReport::new();
    r.checks.extend(kernel.validate().checks.into_iter().filter(|ch| ch.name == name));
    r
}
