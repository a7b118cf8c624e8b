//! Path laws for the k-step family and the traffic model.
//!
//! A path `z = (z_1, ..., z_k)` lists the *positions* (relative to the
//! departure site `x`) visited in order; the particle settles at the first
//! `x + z_i` holding fewer than `K` particles.

use std::ops::{Add, Div, Mul, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::{JumpKernel, Lattice};
use crate::error::{structural, Result};

/// 1-based index of the first non-full path site; `None` stands for `+inf`.
pub type StepIndex = Option<usize>;

/// Result of scanning a path from `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KStepTarget {
    pub step: StepIndex,
    /// Landing site. `Some(x)` when `step` is infinite; `None` when the
    /// first non-full position lies outside a segment lattice.
    pub site: Option<usize>,
    /// `Y - x` as an unwrapped displacement.
    pub displacement: i64,
}

/// First index `N` with `eta(x + z_N) < K` and the corresponding target `Y`.
///
/// Positions outside a segment lattice count as non-full; landing there is
/// reported with `site = None` and the caller suppresses the jump.
#[inline]
pub fn kstep_target(lattice: &Lattice, occ: &[u8], capacity: u8, x: usize, path: &[i64]) -> KStepTarget {
    for (i, &z) in path.iter().enumerate() {
        match lattice.offset(x, z) {
            Some(y) if occ[y] >= capacity => continue,
            site => return KStepTarget { step: Some(i + 1), site, displacement: z },
        }
    }
    KStepTarget { step: None, site: Some(x), displacement: 0 }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KPath {
    pub positions: Vec<i64>,
    /// `beta^i` for `i = 1..=k`, nonincreasing.
    pub beta: Vec<f64>,
}

/// Finite law `q` on paths of length `k`, stored in the canonical
/// (lexicographic) order of positions so that the inverse-CDF map `F_q` is
/// deterministic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathLaw {
    k: usize,
    paths: Vec<KPath>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
}

impl PathLaw {
    pub fn new(k: usize, entries: Vec<(KPath, f64)>) -> Result<Self> {
        if k == 0 {
            return Err(structural("path length k must be at least 1"));
        }
        let mut merged: Vec<(KPath, f64)> = Vec::new();
        for (path, p) in entries {
            if path.positions.len() != k || path.beta.len() != k {
                return Err(structural(format!("path {:?} does not have length k = {k}", path.positions)));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(structural(format!("path probability {p} outside [0,1]")));
            }
            if path.beta.iter().any(|b| !b.is_finite() || *b < 0.0) {
                return Err(structural("path rates must be nonnegative"));
            }
            if path.beta.windows(2).any(|w| w[0] < w[1]) {
                return Err(structural(format!("rates {:?} are not nonincreasing along the path", path.beta)));
            }
            if p == 0.0 {
                continue;
            }
            match merged.iter_mut().find(|(q, _)| q.positions == path.positions) {
                Some((q, w)) => {
                    if q.beta != path.beta {
                        return Err(structural("duplicate path with different rates"));
                    }
                    *w += p;
                }
                None => merged.push((path, p)),
            }
        }
        if merged.is_empty() {
            return Err(structural("path law has no mass"));
        }
        merged.sort_by(|a, b| a.0.positions.cmp(&b.0.positions));
        let total: f64 = merged.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(structural(format!("path probabilities sum to {total}")));
        }
        let mut acc = 0.0;
        let mut cdf = Vec::with_capacity(merged.len());
        let mut probs = Vec::with_capacity(merged.len());
        let mut paths = Vec::with_capacity(merged.len());
        for (path, p) in merged {
            acc += p;
            cdf.push(acc);
            probs.push(p);
            paths.push(path);
        }
        Ok(Self { k, paths, probs, cdf })
    }

    /// Law of the first `k` positions of a walk with kernel `kernel`; when
    /// `absorbed`, the walk stays at 0 once it returns there.
    pub fn random_walk(kernel: &JumpKernel, k: usize, absorbed: bool, beta: Vec<f64>) -> Result<Self> {
        let entries = random_walk_paths(kernel.support(), k, absorbed)
            .into_iter()
            .map(|(positions, p)| (KPath { positions, beta: beta.clone() }, p))
            .collect();
        Self::new(k, entries)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&KPath, f64)> {
        self.paths.iter().zip(self.probs.iter().cloned())
    }

    /// `F_q(u)`: the path selected by the uniform `u`.
    #[inline]
    pub fn select(&self, u: f64) -> &KPath {
        let i = self.cdf.partition_point(|&c| c <= u).min(self.paths.len() - 1);
        &self.paths[i]
    }

    /// A uniform selecting path number `i` under [`select`](Self::select).
    pub fn uniform_for(&self, i: usize) -> f64 {
        let lo = if i == 0 { 0.0 } else { self.cdf[i - 1] };
        0.5 * (lo + self.cdf[i])
    }

    /// Marginal law of the `i`-th position (1-based).
    pub fn marginal(&self, i: usize) -> Vec<(i64, f64)> {
        let mut out: Vec<(i64, f64)> = Vec::new();
        for (path, p) in self.iter() {
            let z = path.positions[i - 1];
            match out.iter_mut().find(|(w, _)| *w == z) {
                Some(e) => e.1 += p,
                None => out.push((z, p)),
            }
        }
        out.sort_by_key(|&(z, _)| z);
        out
    }

    pub fn beta_max(&self) -> f64 {
        self.paths.iter().flat_map(|p| p.beta.iter().cloned()).fold(0.0, f64::max)
    }

    pub fn beta_min_first(&self) -> f64 {
        self.paths.iter().map(|p| p.beta[0]).fold(f64::INFINITY, f64::min)
    }

    /// Distinct positions visited by any path.
    pub fn offsets(&self) -> Vec<i64> {
        let mut v: Vec<i64> = self.paths.iter().flat_map(|p| p.positions.iter().cloned()).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// All length-`k` position sequences of a walk with step law `steps`
/// started at 0, with their probabilities, in lexicographic order. Absorbed
/// walks freeze at 0 after a return. Generic over the probability field so
/// that exact rational enumeration is available.
pub fn random_walk_paths<T>(steps: &[(i64, T)], k: usize, absorbed: bool) -> Vec<(Vec<i64>, T)>
where
    T: Clone + One + Mul<Output = T> + Add<Output = T>,
{
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<i64>, T)> = vec![(Vec::new(), T::one())];
    while let Some((prefix, p)) = stack.pop() {
        if prefix.len() == k {
            out.push((prefix, p));
            continue;
        }
        let here = prefix.last().copied().unwrap_or(0);
        if absorbed && !prefix.is_empty() && here == 0 {
            let mut next = prefix;
            next.resize(k, 0);
            out.push((next, p));
            continue;
        }
        for (z, q) in steps {
            let mut next = prefix.clone();
            next.push(here + z);
            stack.push((next, p.clone() * q.clone()));
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    let mut merged: Vec<(Vec<i64>, T)> = Vec::with_capacity(out.len());
    for (path, p) in out {
        match merged.last_mut() {
            Some((q, w)) if *q == path => *w = w.clone() + p,
            _ => merged.push((path, p)),
        }
    }
    merged
}

/// Jump rates `c(x, x + y)` of a k-step model at a site with `occ(x) > 0`,
/// by exact enumeration of `(path, probability, rates)` triples. `open(z)`
/// tells whether `x + z` holds fewer than `K` particles. Returns the
/// displacement/rate pairs with positive total, sorted by displacement.
pub fn kstep_rates<T>(paths: &[(Vec<i64>, T, Vec<T>)], open: impl Fn(i64) -> bool) -> Vec<(i64, T)>
where
    T: Clone + Zero + Mul<Output = T> + Add<Output = T>,
{
    let mut out: Vec<(i64, T)> = Vec::new();
    for (path, prob, beta) in paths {
        if let Some(i) = path.iter().position(|&z| open(z)) {
            let z = path[i];
            if z == 0 {
                continue;
            }
            let w = prob.clone() * beta[i].clone();
            match out.iter_mut().find(|(y, _)| *y == z) {
                Some(e) => e.1 = e.1.clone() + w,
                None => out.push((z, w)),
            }
        }
    }
    out.retain(|(_, w)| !w.is_zero());
    out.sort_by_key(|(z, _)| *z);
    out
}

/// Traffic-model path law: a random self-avoiding ordering of
/// `{-k..k} \ {0}` drawn sequentially, each next position chosen with
/// probability proportional to its weight among those not yet used.
///
/// Zero-weight positions are never drawn while positive weight remains; they
/// are appended afterwards in canonical order and carry rate 0, so they can
/// be visited but never receive a particle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfAvoidingLaw {
    k: usize,
    /// Positive-weight positions in canonical order, with their weights.
    positive: Vec<(i64, f64)>,
    /// Zero-weight positions in canonical order.
    zero: Vec<i64>,
}

impl SelfAvoidingLaw {
    /// `weights[j]` is the weight of the `j`-th element of
    /// `-k, ..., -1, 1, ..., k`.
    pub fn new(k: usize, weights: &[f64]) -> Result<Self> {
        if k == 0 {
            return Err(structural("traffic range k must be at least 1"));
        }
        if weights.len() != 2 * k {
            return Err(structural(format!("expected {} weights, got {}", 2 * k, weights.len())));
        }
        let mut positive = Vec::new();
        let mut zero = Vec::new();
        for (z, &w) in Self::positions(k).zip(weights) {
            if !w.is_finite() || w < 0.0 {
                return Err(structural(format!("weight for {z} must be nonnegative, got {w}")));
            }
            if w > 0.0 {
                positive.push((z, w));
            } else {
                zero.push(z);
            }
        }
        if positive.is_empty() {
            return Err(structural("all traffic weights are zero"));
        }
        Ok(Self { k, positive, zero })
    }

    /// `-k, ..., -1, 1, ..., k`.
    pub fn positions(k: usize) -> impl Iterator<Item = i64> {
        let k = k as i64;
        (-k..=k).filter(|&z| z != 0)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weight(&self, z: i64) -> f64 {
        self.positive.iter().find(|&&(w, _)| w == z).map_or(0.0, |&(_, v)| v)
    }

    pub fn weights(&self) -> Vec<f64> {
        Self::positions(self.k).map(|z| self.weight(z)).collect()
    }

    /// Full `2k`-step path selected by the uniform `u` (sequential
    /// inverse-CDF in canonical order), together with the per-step flag
    /// telling whether the position has positive weight.
    pub fn sample(&self, u: f64) -> Vec<(i64, bool)> {
        let mut used = vec![false; self.positive.len()];
        let mut out = Vec::with_capacity(2 * self.k);
        let mut u = u;
        for _ in 0..self.positive.len() {
            let (idx, next_u) = self.draw(&used, u);
            used[idx] = true;
            out.push((self.positive[idx].0, true));
            u = next_u;
        }
        out.extend(self.zero.iter().map(|&z| (z, false)));
        out
    }

    /// Scans the path selected by `u` and returns the 1-based step and
    /// position of the first position accepted by `open`, stopping as soon
    /// as it is found. Only positive-weight positions are considered; a
    /// `None` means every positive-weight position was rejected.
    #[inline]
    pub fn first_open(&self, u: f64, mut open: impl FnMut(i64) -> bool) -> Option<(usize, i64)> {
        let n = self.positive.len();
        // Small inline bitmask; traffic ranges beyond 64 positions are not supported.
        let mut used: u64 = 0;
        let mut u = u;
        for step in 0..n {
            let mut total = 0.0;
            for (j, &(_, w)) in self.positive.iter().enumerate() {
                if used & (1 << j) == 0 {
                    total += w;
                }
            }
            let target = u * total;
            let mut acc = 0.0;
            let mut chosen = n;
            for (j, &(_, w)) in self.positive.iter().enumerate() {
                if used & (1 << j) != 0 {
                    continue;
                }
                chosen = j;
                if target < acc + w {
                    break;
                }
                acc += w;
            }
            let (z, w) = self.positive[chosen];
            if open(z) {
                return Some((step + 1, z));
            }
            used |= 1 << chosen;
            u = ((target - acc) / w).clamp(0.0, 1.0 - f64::EPSILON);
        }
        None
    }

    fn draw(&self, used: &[bool], u: f64) -> (usize, f64) {
        let total: f64 = self.positive.iter().zip(used).filter(|(_, &d)| !d).map(|(&(_, w), _)| w).sum();
        let target = u * total;
        let mut acc = 0.0;
        let mut chosen = usize::MAX;
        for (j, &(_, w)) in self.positive.iter().enumerate() {
            if used[j] {
                continue;
            }
            chosen = j;
            if target < acc + w {
                break;
            }
            acc += w;
        }
        let w = self.positive[chosen].1;
        (chosen, ((target - acc) / w).clamp(0.0, 1.0 - f64::EPSILON))
    }
}

/// Exact law of the self-avoiding path over the positive-weight positions
/// (given in canonical order), in any field `T` such as `f64` or an exact
/// rational type. Zero weights must be excluded by the caller.
pub fn enumerate_self_avoiding<T>(weights: &[(i64, T)]) -> Vec<(Vec<i64>, T)>
where
    T: Clone + Zero + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T>,
{
    fn rec<T>(
        weights: &[(i64, T)],
        used: &mut Vec<bool>,
        remaining: T,
        prefix: &mut Vec<i64>,
        prob: T,
        out: &mut Vec<(Vec<i64>, T)>,
    ) where
        T: Clone + Zero + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T>,
    {
        if prefix.len() == weights.len() {
            out.push((prefix.clone(), prob));
            return;
        }
        for j in 0..weights.len() {
            if used[j] {
                continue;
            }
            let (z, w) = weights[j].clone();
            used[j] = true;
            prefix.push(z);
            let p = prob.clone() * w.clone() / remaining.clone();
            rec(weights, used, remaining.clone() - w, prefix, p, out);
            prefix.pop();
            used[j] = false;
        }
    }
    let total = weights.iter().fold(T::zero(), |acc, (_, w)| acc + w.clone());
    let mut out = Vec::new();
    let mut used = vec![false; weights.len()];
    let one = total.clone() / total.clone();
    rec(weights, &mut used, total, &mut Vec::new(), one, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_occ(len: usize, full: &[usize]) -> Vec<u8> {
        let mut occ = vec![0u8; len];
        for &x in full {
            occ[x] = 1;
        }
        occ
    }

    #[test]
    fn kstep_first_open_site() {
        let lat = Lattice::ring(10);
        let occ = ring_occ(10, &[3]);
        let t = kstep_target(&lat, &occ, 1, 3, &[1, 2]);
        assert_eq!((t.step, t.site), (Some(1), Some(4)));
        let occ = ring_occ(10, &[3, 4]);
        let t = kstep_target(&lat, &occ, 1, 3, &[1, 2]);
        assert_eq!((t.step, t.site), (Some(2), Some(5)));
        let occ = ring_occ(10, &[3, 4, 5]);
        let t = kstep_target(&lat, &occ, 1, 3, &[1, 2]);
        assert_eq!((t.step, t.site, t.displacement), (None, Some(3), 0));
    }

    #[test]
    fn kstep_outside_segment_is_reported() {
        let lat = Lattice::segment(4);
        let occ = vec![0, 0, 1, 1];
        let t = kstep_target(&lat, &occ, 1, 2, &[1, 2]);
        assert_eq!((t.step, t.site, t.displacement), (Some(2), None, 2));
    }

    #[test]
    fn absorbed_walk_law() {
        let r = JumpKernel::nearest_neighbor(0.5).unwrap();
        let paths = random_walk_paths(r.support(), 3, true);
        let total: f64 = paths.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // The walk returning at step 2 freezes: (1, 0, 0) has probability 1/4.
        let p = paths.iter().find(|(z, _)| z == &vec![1, 0, 0]).unwrap().1;
        assert!((p - 0.25).abs() < 1e-12);
        assert!(paths.iter().all(|(z, _)| z.len() == 3));
    }

    #[test]
    fn path_law_selection_matches_canonical_order() {
        let r = JumpKernel::nearest_neighbor(0.3).unwrap();
        let law = PathLaw::random_walk(&r, 2, false, vec![1.0, 1.0]).unwrap();
        assert_eq!(law.len(), 4);
        let first: Vec<_> = law.iter().map(|(p, _)| p.positions.clone()).collect();
        let mut sorted = first.clone();
        sorted.sort();
        assert_eq!(first, sorted);
        for i in 0..law.len() {
            let u = law.uniform_for(i);
            assert_eq!(law.select(u).positions, first[i]);
        }
        assert_eq!(law.marginal(1), vec![(-1, 0.7), (1, 0.3)]);
    }

    #[test]
    fn path_law_rejects_increasing_rates() {
        let bad = KPath { positions: vec![1, 2], beta: vec![0.5, 1.0] };
        assert!(PathLaw::new(2, vec![(bad, 1.0)]).is_err());
    }

    #[test]
    fn self_avoiding_symmetric_and_forced() {
        let law = SelfAvoidingLaw::new(1, &[1.0, 1.0]).unwrap();
        let paths = enumerate_self_avoiding(&[(-1, 1.0f64), (1, 1.0)]);
        assert_eq!(paths.len(), 2);
        for (_, p) in &paths {
            assert!((p - 0.5).abs() < 1e-15);
        }
        assert_eq!(law.sample(0.25), vec![(-1, true), (1, true)]);
        assert_eq!(law.sample(0.75), vec![(1, true), (-1, true)]);

        let forced = SelfAvoidingLaw::new(1, &[0.0, 1.0]).unwrap();
        for u in [0.0, 0.3, 0.999] {
            assert_eq!(forced.sample(u), vec![(1, true), (-1, false)]);
        }
    }

    #[test]
    fn sequential_sampler_agrees_with_enumeration() {
        let weights = [1.0, 2.0, 0.5, 3.0];
        let law = SelfAvoidingLaw::new(2, &weights).unwrap();
        let exact = enumerate_self_avoiding(&[(-2, 1.0f64), (-1, 2.0), (1, 0.5), (2, 3.0)]);
        // Inverse CDF in lexicographic order: cumulative probabilities of the
        // enumerated paths (already lexicographic in canonical order) map to
        // exactly those paths.
        let mut acc = 0.0;
        for (path, p) in &exact {
            let u = acc + 0.5 * p;
            let sampled: Vec<i64> = law.sample(u).into_iter().map(|(z, _)| z).collect();
            assert_eq!(&sampled, path, "u = {u}");
            acc += p;
        }
        assert!((acc - 1.0).abs() < 1e-12);
    }
}
