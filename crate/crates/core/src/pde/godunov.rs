use serde::{Deserialize, Serialize};

use super::profile::{GridFunction, StepProfile};
use super::riemann::riemann_value_unchecked;
use crate::error::{invalid, Error, Result};
use crate::flux::FluxTable;

/// Discretization parameters of the Cauchy solver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdeParams {
    pub dx: f64,
    /// Fraction of the CFL limit `dx / V` used as time step.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Extra padding added beyond `V t` on both sides.
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_cfl() -> f64 {
    0.9
}

fn default_margin() -> f64 {
    0.5
}

impl PdeParams {
    pub fn new(dx: f64) -> Self {
        Self { dx, cfl: default_cfl(), margin: default_margin() }
    }

    fn check(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(invalid("dx must be positive"));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(invalid("CFL fraction must lie in (0, 1]"));
        }
        if !(self.margin >= 0.0) {
            return Err(invalid("padding margin must be nonnegative"));
        }
        Ok(())
    }
}

/// Godunov numerical flux: `min_[a,b] G` if `a <= b`, else `max_[b,a] G`.
#[inline]
pub fn godunov_flux(flux: &FluxTable, a: f64, b: f64) -> f64 {
    if a == b {
        return flux.eval(a);
    }
    riemann_value_unchecked(flux, a, b, 0.0)
}

/// One Godunov step. The grid is extended by its end values, so the boundary
/// fluxes are `G(u_0)` and `G(u_{n-1})`.
pub fn godunov_step(flux: &FluxTable, u: &GridFunction, dt: f64, speed: f64) -> Result<GridFunction> {
    let limit = u.dx / speed;
    if !(dt >= 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    if u.is_empty() {
        return Ok(u.clone());
    }
    let n = u.len();
    let k = u.capacity as f64;
    let mut f = Vec::with_capacity(n + 1);
    f.push(flux.eval(u.values[0]));
    for i in 0..n - 1 {
        f.push(godunov_flux(flux, u.values[i], u.values[i + 1]));
    }
    f.push(flux.eval(u.values[n - 1]));
    let r = dt / u.dx;
    let values = (0..n).map(|i| (u.values[i] - r * (f[i + 1] - f[i])).clamp(0.0, k)).collect();
    Ok(GridFunction { capacity: u.capacity, x0: u.x0, dx: u.dx, values })
}

/// Initial data for [`solve_cauchy`].
#[derive(Clone, Debug, PartialEq)]
pub enum InitialData<'a> {
    Step(&'a StepProfile),
    Grid(&'a GridFunction),
}

/// Projects the initial data onto the solver mesh, padded by `V t + margin`
/// on both sides. Step profiles get a mesh aligned to multiples of `dx`.
pub fn initial_grid(u0: &InitialData<'_>, t: f64, speed: f64, params: &PdeParams) -> Result<GridFunction> {
    params.check()?;
    let pad = speed * t + params.margin;
    let dx = params.dx;
    match u0 {
        InitialData::Step(p) => {
            let (a, b) = p.extent().unwrap_or((0.0, 0.0));
            let i0 = ((a - pad) / dx).floor() as i64;
            let i1 = ((b + pad) / dx).ceil() as i64;
            GridFunction::project(p, i0 as f64 * dx, dx, (i1 - i0).max(1) as usize)
        }
        InitialData::Grid(g) => {
            if g.dx != dx {
                return Err(invalid("grid initial data must use the solver spacing"));
            }
            let extra = (pad / dx).ceil() as usize;
            let (l, r) = (g.values.first().copied().unwrap_or(0.0), g.values.last().copied().unwrap_or(0.0));
            let mut values = vec![l; extra];
            values.extend_from_slice(&g.values);
            values.extend(std::iter::repeat_n(r, extra));
            GridFunction::new(g.capacity, g.x0 - extra as f64 * dx, dx, values)
        }
    }
}

/// Advances `u` to each of the increasing `times` (relative to 0), with time
/// steps `cfl * dx / V` shortened to land on every requested time.
pub fn evolve_grid(flux: &FluxTable, mut u: GridFunction, times: &[f64], speed: f64, cfl: f64) -> Result<Vec<GridFunction>> {
    if !(speed > 0.0 && speed.is_finite()) {
        return Err(invalid("characteristic speed bound must be positive"));
    }
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("snapshot times must be nonnegative and increasing"));
    }
    let dt_max = cfl * u.dx / speed;
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while now < t {
            let remaining = t - now;
            let steps = (remaining / dt_max).ceil().max(1.0);
            let dt = remaining / steps;
            for _ in 0..steps as u64 {
                u = godunov_step(flux, &u, dt, speed)?;
            }
            now = t;
        }
        out.push(u.clone());
    }
    Ok(out)
}

/// Entropy solution at time `t` on the padded mesh.
pub fn solve_cauchy(flux: &FluxTable, u0: InitialData<'_>, t: f64, speed: f64, params: &PdeParams) -> Result<GridFunction> {
    let mut snaps = solve_cauchy_snapshots(flux, u0, &[t], speed, params)?;
    Ok(snaps.pop().expect("one snapshot"))
}

/// Entropy solution at each of `times`, on a mesh padded for the last time.
pub fn solve_cauchy_snapshots(
    flux: &FluxTable,
    u0: InitialData<'_>,
    times: &[f64],
    speed: f64,
    params: &PdeParams,
) -> Result<Vec<GridFunction>> {
    let horizon = times.last().copied().unwrap_or(0.0);
    let grid = initial_grid(&u0, horizon, speed, params)?;
    evolve_grid(flux, grid, times, speed, params.cfl)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parabola() -> FluxTable {
        FluxTable::from_fn(1, 100, |u| u * (1.0 - u)).unwrap()
    }

    #[test]
    fn cfl_violation_is_an_error() {
        let g = parabola();
        let u = GridFunction::new(1, 0.0, 0.1, vec![0.5; 4]).unwrap();
        assert!(matches!(godunov_step(&g, &u, 0.2, 1.0), Err(Error::Cfl { .. })));
    }

    #[test]
    fn snapshots_land_on_times() {
        let g = parabola();
        let p = StepProfile::blocks(1, &[0.0, 1.0], &[0.5]).unwrap();
        let snaps = solve_cauchy_snapshots(&g, InitialData::Step(&p), &[0.0, 0.3, 1.0], 1.0, &PdeParams::new(0.05)).unwrap();
        assert_eq!(snaps.len(), 3);
        assert!((snaps[0].mass() - 0.5).abs() < 1e-12);
        assert!((snaps[2].mass() - 0.5).abs() < 1e-12);
    }
}
