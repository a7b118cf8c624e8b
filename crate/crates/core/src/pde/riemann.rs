use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::flux::FluxTable;

/// Velocity step of the difference quotient used by [`riemann_profile`].
pub const PROFILE_STEP: f64 = 1e-7;

const TIE: f64 = 1e-12;

/// `G_v(lambda, rho)` together with the densities where the optimum is
/// attained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiemannValue {
    pub value: f64,
    pub argopt: Vec<f64>,
}

fn check_density(flux: &FluxTable, r: f64) -> Result<()> {
    let k = flux.capacity as f64;
    if (0.0..=k).contains(&r) {
        Ok(())
    } else {
        Err(invalid(format!("density {r} outside [0, {k}]")))
    }
}

/// Candidate densities in `[lo, hi]`: the endpoints and the interior grid
/// breakpoints. The interpolant minus `v r` is linear between them.
fn candidates(flux: &FluxTable, lo: f64, hi: f64) -> impl Iterator<Item = f64> + '_ {
    let d = &flux.densities;
    let i0 = d.partition_point(|&r| r <= lo);
    let i1 = d.partition_point(|&r| r < hi);
    std::iter::once(lo).chain(d[i0..i1.max(i0)].iter().copied()).chain((hi > lo).then_some(hi))
}

/// Value only, for inner loops.
#[inline]
pub fn riemann_value_unchecked(flux: &FluxTable, lambda: f64, rho: f64, v: f64) -> f64 {
    let (lo, hi, min) = if lambda <= rho { (lambda, rho, true) } else { (rho, lambda, false) };
    let f = |r: f64| flux.eval(r) - v * r;
    let mut best = f(lo);
    for r in candidates(flux, lo, hi).skip(1) {
        let y = f(r);
        if (min && y < best) || (!min && y > best) {
            best = y;
        }
    }
    best
}

/// `inf { G(r) - v r : r in [lambda, rho] }` for `lambda <= rho`, and the
/// supremum over `[rho, lambda]` otherwise, exact on the interpolated flux.
pub fn riemann_value(flux: &FluxTable, lambda: f64, rho: f64, v: f64) -> Result<RiemannValue> {
    check_density(flux, lambda)?;
    check_density(flux, rho)?;
    if !v.is_finite() {
        return Err(invalid("velocity must be finite"));
    }
    let value = riemann_value_unchecked(flux, lambda, rho, v);
    let (lo, hi) = if lambda <= rho { (lambda, rho) } else { (rho, lambda) };
    let tol = TIE * (1.0 + value.abs());
    let argopt = candidates(flux, lo, hi).filter(|&r| (flux.eval(r) - v * r - value).abs() <= tol).collect();
    Ok(RiemannValue { value, argopt })
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid("profile time must be positive"))
    }
}

/// Self-similar Riemann solution `R(x, t) = -d/dw G_w(lambda, rho)` at
/// `w = x / t`, as a symmetric difference quotient with step `h` in velocity.
pub fn riemann_profile_with_step(flux: &FluxTable, lambda: f64, rho: f64, t: f64, xs: &[f64], h: f64) -> Result<Vec<f64>> {
    check_density(flux, lambda)?;
    check_density(flux, rho)?;
    check_time(t)?;
    if !(h > 0.0) {
        return Err(invalid("difference step must be positive"));
    }
    let k = flux.capacity as f64;
    Ok(xs
        .iter()
        .map(|&x| {
            let w = x / t;
            let g = |v| riemann_value_unchecked(flux, lambda, rho, v);
            ((g(w - h) - g(w + h)) / (2.0 * h)).clamp(0.0, k)
        })
        .collect())
}

/// [`riemann_profile_with_step`] with `h = PROFILE_STEP`.
pub fn riemann_profile(flux: &FluxTable, lambda: f64, rho: f64, t: f64, xs: &[f64]) -> Result<Vec<f64>> {
    riemann_profile_with_step(flux, lambda, rho, t, xs, PROFILE_STEP)
}

/// `int_a^b R(x, t) dx = t (G_{a/t} - G_{b/t})`.
pub fn riemann_mass(flux: &FluxTable, lambda: f64, rho: f64, t: f64, a: f64, b: f64) -> Result<f64> {
    check_density(flux, lambda)?;
    check_density(flux, rho)?;
    check_time(t)?;
    let g = |v| riemann_value_unchecked(flux, lambda, rho, v);
    Ok(t * (g(a / t) - g(b / t)))
}

/// Exact cell averages of the Riemann solution on `n` cells from `x0`.
pub fn riemann_cells(flux: &FluxTable, lambda: f64, rho: f64, t: f64, x0: f64, dx: f64, n: usize) -> Result<Vec<f64>> {
    check_density(flux, lambda)?;
    check_density(flux, rho)?;
    check_time(t)?;
    let k = flux.capacity as f64;
    let g: Vec<f64> = (0..=n).map(|i| riemann_value_unchecked(flux, lambda, rho, (x0 + i as f64 * dx) / t)).collect();
    Ok(g.windows(2).map(|w| (t * (w[0] - w[1]) / dx).clamp(0.0, k)).collect())
}
