use hydrolimit::flux::{build_flux_table, estimate_flux_point, FluxParams, FluxTable};
use hydrolimit::harness::test_ordering;
use hydrolimit::io::{model_hash, RunConfig};
use hydrolimit::model::ModelSpec;
use hydrolimit::pde::{self, InitialData, MassMeasure, PdeParams, StepProfile};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: hydrolimit::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A disordered model description.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    spec: ModelSpec,
}

#[pymethods]
impl PyModel {
    /// Model section of a TOML run configuration.
    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        Ok(Self { spec: RunConfig::from_toml(text).map_err(err)?.model })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { spec: serde_json::from_str(text).map_err(json_err)? })
    }

    /// Totally asymmetric exclusion with i.i.d. uniform site rates on
    /// `[low, high]`; `c = min(low, 1 / high)`.
    #[staticmethod]
    fn tasep(low: f64, high: f64) -> Self {
        let c = low.min(1.0 / high);
        Self { spec: ModelSpec::tasep(c, hydrolimit::model::EnvironmentLaw::uniform(low, high)) }
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.spec).map_err(json_err)
    }

    fn hash(&self) -> PyResult<String> {
        model_hash(&self.spec).map_err(err)
    }

    #[getter]
    fn capacity(&self) -> u8 {
        self.spec.capacity
    }

    /// `(name, passed, detail)` for every assumption.
    fn validate(&self) -> PyResult<Vec<(String, bool, String)>> {
        let report = self.spec.validate().map_err(err)?;
        Ok(report.checks.into_iter().map(|c| (c.name, c.passed, c.detail)).collect())
    }

    fn lipschitz_bound(&self) -> f64 {
        self.spec.lipschitz_bound()
    }

    /// `(G(rho), stderr)` from equilibrium runs on a ring.
    fn estimate_flux(
        &self,
        py: Python<'_>,
        density: f64,
        lattice_len: usize,
        burn_in: f64,
        horizon: f64,
        seeds: Vec<u64>,
    ) -> PyResult<(f64, f64)> {
        let params = FluxParams::new(lattice_len, burn_in, horizon, seeds);
        let p = py.detach(|| estimate_flux_point(&self.spec, density, &params)).map_err(err)?;
        Ok((p.value, p.stderr))
    }

    fn build_flux_table(
        &self,
        py: Python<'_>,
        grid: Vec<f64>,
        lattice_len: usize,
        burn_in: f64,
        horizon: f64,
        seeds: Vec<u64>,
    ) -> PyResult<PyFluxTable> {
        let params = FluxParams::new(lattice_len, burn_in, horizon, seeds);
        let table = py.detach(|| build_flux_table(&self.spec, &grid, &params)).map_err(err)?;
        Ok(PyFluxTable { table })
    }

    /// Number of order violations among coupled ordered pairs.
    fn ordering_violations(&self, py: Python<'_>, trials: usize, lattice_len: usize, horizon: f64, seed: u64) -> PyResult<usize> {
        let r = py.detach(|| test_ordering(&self.spec, trials, lattice_len, horizon, seed)).map_err(err)?;
        Ok(r.violations)
    }
}

/// Tabulated flux with its piecewise-linear interpolant.
#[pyclass(name = "FluxTable", frozen)]
struct PyFluxTable {
    table: FluxTable,
}

#[pymethods]
impl PyFluxTable {
    #[new]
    fn new(capacity: u8, densities: Vec<f64>, values: Vec<f64>) -> PyResult<Self> {
        Ok(Self { table: FluxTable::from_values(capacity, densities, values).map_err(err)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { table: FluxTable::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.table.to_json().map_err(err)
    }

    #[getter]
    fn densities(&self) -> Vec<f64> {
        self.table.densities.clone()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.table.values.clone()
    }

    #[getter]
    fn stderr(&self) -> Vec<f64> {
        self.table.stderr.clone()
    }

    fn interpolate(&self, rho: f64) -> PyResult<f64> {
        self.table.interpolate(rho).map_err(err)
    }

    /// `(G_v(lambda, rho), optimizing densities)`.
    fn riemann_value(&self, lam: f64, rho: f64, v: f64) -> PyResult<(f64, Vec<f64>)> {
        let r = pde::riemann_value(&self.table, lam, rho, v).map_err(err)?;
        Ok((r.value, r.argopt))
    }

    fn riemann_profile(&self, lam: f64, rho: f64, t: f64, xs: Vec<f64>) -> PyResult<Vec<f64>> {
        pde::riemann_profile(&self.table, lam, rho, t, &xs).map_err(err)
    }

    /// Godunov solution at time `t` of blocks `levels[i]` on
    /// `[edges[i], edges[i+1])`; returns `(x0, dx, cell values)`.
    fn solve_blocks(&self, py: Python<'_>, edges: Vec<f64>, levels: Vec<f64>, t: f64, dx: f64) -> PyResult<(f64, f64, Vec<f64>)> {
        let profile = StepProfile::blocks(self.table.capacity, &edges, &levels).map_err(err)?;
        let speed = self.table.max_slope().max(f64::MIN_POSITIVE);
        let g = py
            .detach(|| pde::solve_cauchy(&self.table, InitialData::Step(&profile), t, speed, &PdeParams::new(dx)))
            .map_err(err)?;
        Ok((g.x0, g.dx, g.values))
    }
}

/// `sup_x |nu(-inf, x] - mu(-inf, x]|` for measures given by atoms
/// `(x, mass)` and density pieces `(a, b, density)`.
#[pyfunction]
fn delta_distance(
    mu_atoms: Vec<(f64, f64)>,
    mu_pieces: Vec<(f64, f64, f64)>,
    nu_atoms: Vec<(f64, f64)>,
    nu_pieces: Vec<(f64, f64, f64)>,
) -> PyResult<f64> {
    let mu = MassMeasure::new(mu_atoms, mu_pieces).map_err(err)?;
    let nu = MassMeasure::new(nu_atoms, nu_pieces).map_err(err)?;
    Ok(pde::delta_distance(&mu, &nu))
}

#[pymodule]
fn hydrolimit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyFluxTable>()?;
    m.add_function(wrap_pyfunction!(delta_distance, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
