use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, structural, Result};

/// Piecewise-constant density: `left` on `(-inf, x_0)`, `values[l]` on
/// `[x_l, x_{l+1})`, and the last value on `[x_m, +inf)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepProfile {
    pub capacity: u8,
    pub left: f64,
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepProfile {
    pub fn new(capacity: u8, left: f64, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(structural("step profile needs one value per breakpoint"));
        }
        if breakpoints.iter().any(|x| !x.is_finite()) || breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(structural("step profile breakpoints must be finite and strictly increasing"));
        }
        let k = capacity as f64;
        if std::iter::once(&left).chain(&values).any(|v| !(0.0..=k).contains(v)) {
            return Err(structural(format!("step profile values must lie in [0, {k}]")));
        }
        Ok(Self { capacity, left, breakpoints, values })
    }

    /// Identically zero.
    pub fn zero(capacity: u8) -> Self {
        Self { capacity, left: 0.0, breakpoints: vec![], values: vec![] }
    }

    /// `lambda` left of `x0`, `rho` from `x0` on.
    pub fn riemann(capacity: u8, lambda: f64, rho: f64, x0: f64) -> Result<Self> {
        Self::new(capacity, lambda, vec![x0], vec![rho])
    }

    /// `value` on each of the consecutive intervals `[edges[i], edges[i+1])`,
    /// zero outside. Adjacent equal values are merged.
    pub fn blocks(capacity: u8, edges: &[f64], levels: &[f64]) -> Result<Self> {
        if edges.len() != levels.len() + 1 {
            return Err(structural("blocks need one more edge than levels"));
        }
        let mut bps = Vec::new();
        let mut vals: Vec<f64> = Vec::new();
        let mut last = 0.0;
        for (i, &r) in levels.iter().chain(std::iter::once(&0.0)).enumerate() {
            if r != last {
                bps.push(edges[i]);
                vals.push(r);
                last = r;
            }
        }
        Self::new(capacity, 0.0, bps, vals)
    }

    pub fn right(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.left)
    }

    pub fn value_at(&self, x: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&b| b <= x);
        if i == 0 {
            self.left
        } else {
            self.values[i - 1]
        }
    }

    pub fn is_compact(&self) -> bool {
        self.left == 0.0 && self.right() == 0.0
    }

    /// Smallest interval outside which the profile equals its end values.
    pub fn extent(&self) -> Option<(f64, f64)> {
        Some((*self.breakpoints.first()?, *self.breakpoints.last()?))
    }

    /// Bounded pieces `(a, b, r)`.
    pub fn pieces(&self) -> Vec<(f64, f64, f64)> {
        self.breakpoints.windows(2).zip(&self.values).map(|(w, &r)| (w[0], w[1], r)).collect()
    }

    /// Integral over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut edges = vec![a];
        edges.extend(self.breakpoints.iter().copied().filter(|&x| a < x && x < b));
        edges.push(b);
        edges.windows(2).map(|w| (w[1] - w[0]) * self.value_at(w[0])).sum()
    }

    pub fn mass(&self) -> Result<f64> {
        Ok(self.to_measure()?.total_mass())
    }

    pub fn to_measure(&self) -> Result<MassMeasure> {
        if !self.is_compact() {
            return Err(invalid("only compactly supported profiles define a finite measure"));
        }
        MassMeasure::new(vec![], self.pieces().into_iter().filter(|p| p.2 > 0.0).collect())
    }

    /// CSV `x,value`: one row per breakpoint plus the left end value at `-inf`.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "x,value")?;
        writeln!(out, "-inf,{:?}", self.left)?;
        for (x, r) in self.breakpoints.iter().zip(&self.values) {
            writeln!(out, "{x:?},{r:?}")?;
        }
        Ok(())
    }
}

/// Cell averages on the uniform mesh `[x0 + i dx, x0 + (i+1) dx)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub capacity: u8,
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(capacity: u8, x0: f64, dx: f64, values: Vec<f64>) -> Result<Self> {
        if !(dx > 0.0 && dx.is_finite()) || !x0.is_finite() {
            return Err(structural("grid needs a finite origin and positive spacing"));
        }
        let k = capacity as f64;
        if values.iter().any(|v| !(0.0..=k).contains(v)) {
            return Err(structural(format!("grid values must lie in [0, {k}]")));
        }
        Ok(Self { capacity, x0, dx, values })
    }

    /// Exact cell averages of a step profile on `n` cells starting at `x0`.
    pub fn project(profile: &StepProfile, x0: f64, dx: f64, n: usize) -> Result<Self> {
        let values = (0..n)
            .map(|i| {
                let a = x0 + i as f64 * dx;
                (profile.integral(a, a + dx) / dx).clamp(0.0, profile.capacity as f64)
            })
            .collect();
        Self::new(profile.capacity, x0, dx, values)
    }

    /// Cell-midpoint samples of `f`.
    pub fn from_fn(capacity: u8, x0: f64, dx: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(capacity, x0, dx, (0..n).map(|i| f(x0 + (i as f64 + 0.5) * dx)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x_end(&self) -> f64 {
        self.x0 + self.len() as f64 * self.dx
    }

    pub fn center(&self, i: usize) -> f64 {
        self.x0 + (i as f64 + 0.5) * self.dx
    }

    pub fn cell_edges(&self, i: usize) -> (f64, f64) {
        let a = self.x0 + i as f64 * self.dx;
        (a, a + self.dx)
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.dx
    }

    /// `sum |u_i - w_i| dx` on a common mesh.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.len() != other.len() || self.dx != other.dx || self.x0 != other.x0 {
            return Err(invalid("L1 distance needs identical meshes"));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.dx)
    }

    pub fn to_measure(&self) -> MassMeasure {
        let pieces = (0..self.len())
            .filter(|&i| self.values[i] > 0.0)
            .map(|i| {
                let (a, b) = self.cell_edges(i);
                (a, b, self.values[i])
            })
            .collect();
        MassMeasure { atoms: vec![], pieces }
    }

    /// CSV `x,value` with cell centers.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        writeln!(out, "x,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{:?},{v:?}", self.center(i))?;
        }
        Ok(())
    }
}

/// Finite measure on the line: point masses plus piecewise-constant densities.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MassMeasure {
    pub atoms: Vec<(f64, f64)>,
    pub pieces: Vec<(f64, f64, f64)>,
}

impl MassMeasure {
    pub fn new(atoms: Vec<(f64, f64)>, pieces: Vec<(f64, f64, f64)>) -> Result<Self> {
        if atoms.iter().any(|&(x, m)| !x.is_finite() || !(m >= 0.0 && m.is_finite())) {
            return Err(structural("atoms need finite locations and nonnegative masses"));
        }
        if pieces.iter().any(|&(a, b, d)| !(a.is_finite() && b.is_finite() && a <= b) || !(d >= 0.0 && d.is_finite())) {
            return Err(structural("density pieces need finite ordered endpoints and nonnegative densities"));
        }
        Ok(Self { atoms, pieces })
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>() + self.pieces.iter().map(|&(a, b, d)| (b - a) * d).sum::<f64>()
    }

    /// `mu((-inf, x])`.
    pub fn cumulative(&self, x: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().filter(|a| a.0 <= x).map(|a| a.1).sum();
        let dens: f64 = self.pieces.iter().map(|&(a, b, d)| (x.min(b) - a).max(0.0) * d).sum();
        atoms + dens
    }
}

/// `sup_x |nu((-inf, x]) - mu((-inf, x])|`, evaluated exactly at every atom
/// and density breakpoint including the left limits.
pub fn delta_distance(mu: &MassMeasure, nu: &MassMeasure) -> f64 {
    // (position, atom jump, slope change)
    let mut events: Vec<(f64, f64, f64)> = Vec::with_capacity(
        2 * (mu.pieces.len() + nu.pieces.len()) + mu.atoms.len() + nu.atoms.len(),
    );
    for (m, sign) in [(mu, -1.0), (nu, 1.0)] {
        events.extend(m.atoms.iter().map(|&(x, a)| (x, sign * a, 0.0)));
        for &(a, b, d) in &m.pieces {
            if b > a && d > 0.0 {
                events.push((a, 0.0, sign * d));
                events.push((b, 0.0, -sign * d));
            }
        }
    }
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut sup = 0.0f64;
    let mut gap = 0.0;
    let mut slope = 0.0;
    let mut pos = f64::NEG_INFINITY;
    let mut i = 0;
    while i < events.len() {
        let p = events[i].0;
        if pos.is_finite() {
            gap += slope * (p - pos);
        }
        sup = sup.max(gap.abs());
        while i < events.len() && events[i].0 == p {
            gap += events[i].1;
            slope += events[i].2;
            i += 1;
        }
        sup = sup.max(gap.abs());
        pos = p;
    }
    sup
}

/// Step approximation of a profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepApproximation {
    pub profile: StepProfile,
    pub delta: f64,
}

/// Piecewise-constant input for [`approximate_by_steps`].
#[derive(Clone, Debug, PartialEq)]
pub enum PiecewiseProfile<'a> {
    Step(&'a StepProfile),
    Grid(&'a GridFunction),
}

impl PiecewiseProfile<'_> {
    fn capacity(&self) -> u8 {
        match self {
            Self::Step(s) => s.capacity,
            Self::Grid(g) => g.capacity,
        }
    }

    fn pieces(&self) -> Vec<(f64, f64, f64)> {
        match self {
            Self::Step(s) => s.pieces(),
            Self::Grid(g) => (0..g.len()).map(|i| (g.cell_edges(i).0, g.cell_edges(i).1, g.values[i])).collect(),
        }
    }

    fn measure(&self) -> Result<MassMeasure> {
        match self {
            Self::Step(s) => s.to_measure(),
            Self::Grid(g) => Ok(g.to_measure()),
        }
    }
}

/// Approximates a compactly supported profile by a step profile whose
/// plateaus have length at least `eps` and whose values lie on `grid`.
///
/// Plateaus are built greedily from the left, each ending at the first input
/// breakpoint at least `eps` past its start; a short remainder is merged into
/// the previous plateau. Plateau values are the local averages rounded to the
/// nearest grid density.
pub fn approximate_by_steps(u0: PiecewiseProfile<'_>, eps: f64, grid: &[f64]) -> Result<StepApproximation> {
    if !(eps > 0.0) {
        return Err(invalid("plateau length must be positive"));
    }
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("density grid must be nonempty and increasing"));
    }
    let capacity = u0.capacity();
    let target = u0.measure()?;
    let pieces: Vec<(f64, f64, f64)> = {
        let mut p = u0.pieces();
        while p.first().is_some_and(|q| q.2 == 0.0) {
            p.remove(0);
        }
        while p.last().is_some_and(|q| q.2 == 0.0) {
            p.pop();
        }
        p
    };
    if pieces.is_empty() {
        return Ok(StepApproximation { profile: StepProfile::zero(capacity), delta: 0.0 });
    }
    let round = |r: f64| -> f64 {
        let i = grid.partition_point(|&g| g < r);
        let cand = [i.checked_sub(1).map(|j| grid[j]), grid.get(i).copied()];
        cand.into_iter().flatten().min_by(|a, b| (a - r).abs().total_cmp(&(b - r).abs())).unwrap()
    };
    let mut plateaus: Vec<(f64, f64, f64)> = Vec::new();
    let mut i = 0;
    while i < pieces.len() {
        let start = pieces[i].0;
        let mut mass = 0.0;
        let mut end = start;
        while i < pieces.len() && end - start < eps {
            mass += (pieces[i].1 - pieces[i].0) * pieces[i].2;
            end = pieces[i].1;
            i += 1;
        }
        if end - start < eps {
            if let Some(last) = plateaus.last_mut() {
                let m = last.2 * (last.1 - last.0) + mass;
                last.1 = end;
                last.2 = m / (last.1 - last.0);
                continue;
            }
        }
        plateaus.push((start, end, mass / (end - start)));
    }
    let mut breakpoints = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut current = 0.0;
    let mut edge = f64::NEG_INFINITY;
    for (a, b, r) in plateaus {
        if a > edge && current != 0.0 {
            breakpoints.push(edge);
            values.push(0.0);
            current = 0.0;
        }
        let r = round(r);
        if r != current {
            breakpoints.push(a);
            values.push(r);
            current = r;
        }
        edge = b;
    }
    if current != 0.0 {
        breakpoints.push(edge);
        values.push(0.0);
    }
    let profile = StepProfile::new(capacity, 0.0, breakpoints, values)?;
    let delta = delta_distance(&target, &profile.to_measure()?);
    Ok(StepApproximation { profile, delta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_counts_atoms_at_the_point() {
        let m = MassMeasure::new(vec![(0.0, 1.0)], vec![(1.0, 2.0, 0.5)]).unwrap();
        assert_eq!(m.cumulative(-0.1), 0.0);
        assert_eq!(m.cumulative(0.0), 1.0);
        assert_eq!(m.cumulative(1.5), 1.25);
        assert_eq!(m.total_mass(), 1.5);
    }

    #[test]
    fn delta_sees_left_limits() {
        let mu = MassMeasure::new(vec![(0.0, 1.0)], vec![]).unwrap();
        let nu = MassMeasure::new(vec![], vec![(0.0, 1.0, 1.0)]).unwrap();
        assert_eq!(delta_distance(&mu, &nu), 1.0);
    }

    #[test]
    fn blocks_merge_equal_levels() {
        let p = StepProfile::blocks(1, &[0.0, 1.0, 2.0, 3.0], &[0.5, 0.5, 0.2]).unwrap();
        assert_eq!(p.breakpoints, vec![0.0, 2.0, 3.0]);
        assert_eq!(p.values, vec![0.5, 0.2, 0.0]);
    }
}
