//! Python bindings. Reports that are plain data come back as dicts built
//! from their JSON form; curves come back as lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use gftree_core::estimator::{
    estimate_B, estimate_B_pooled_tau, Estimate, EstimatorConfig, Observation, ObservationSet,
};
use gftree_core::experiments::{ingest_lineage_csv, run_convergence_study, ColumnMapping, StudyConfig};
use gftree_core::invariant::{
    compare_with_invariant, invariant_fixed_point, reconstruct_b_from_invariant, solve_conservative_pde,
    uniform_phase_profile, PdeOptions, SizeGrid, FIXED_POINT_TOL,
};
use gftree_core::model::{DivisionRate, ModelSpec, Scheme};
use gftree_core::simulator::{
    default_battery, many_to_one_check as m2o, read_genealogy_file, simulate_full_tree as full,
    simulate_sparse_lineage as sparse, write_genealogy_file, GenealogyTree, SimOptions,
};
use gftree_core::Error;

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Schema(_) | Error::EmptyAfterFiltering { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn power_law(coefficient: f64, exponent: f64) -> PyResult<DivisionRate> {
    DivisionRate::power_law(coefficient, exponent).map_err(err)
}

/// Model: division rate, growth kernel, admissible growth rates and root law.
#[pyclass(name = "ModelSpec", module = "gftree")]
struct PyModelSpec {
    inner: ModelSpec,
}

#[pymethods]
impl PyModelSpec {
    /// `B(x) = x²`, uniform-increment growth kernel, growth rates in [0.2, 3].
    #[staticmethod]
    fn reference() -> Self {
        PyModelSpec {
            inner: ModelSpec::reference(),
        }
    }

    /// Every cell grows at `rate`; `B(x) = coefficient · x^exponent`.
    #[staticmethod]
    fn constant_growth(coefficient: f64, exponent: f64, rate: f64) -> PyResult<Self> {
        let inner = ModelSpec::constant_growth(power_law(coefficient, exponent)?, rate);
        inner.validate().map_err(err)?;
        Ok(PyModelSpec { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyModelSpec {
            inner: ModelSpec::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// The division rate at `x`.
    fn division_rate(&self, x: f64) -> f64 {
        self.inner.division_rate.eval(x)
    }

    fn __repr__(&self) -> String {
        format!("ModelSpec({})", self.to_json())
    }
}

/// A simulated genealogy in breadth-first order.
#[pyclass(name = "Genealogy", module = "gftree")]
struct PyGenealogy {
    inner: GenealogyTree,
}

#[pymethods]
impl PyGenealogy {
    #[staticmethod]
    fn read_csv(path: &str) -> PyResult<Self> {
        let records = read_genealogy_file(path).map_err(err)?;
        Ok(PyGenealogy {
            inner: GenealogyTree::from_records(records).map_err(err)?,
        })
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        write_genealogy_file(self.inner.records(), path).map_err(err)
    }

    /// `(path, size_birth, growth_rate, lifetime, birth_time)` per cell.
    fn records(&self) -> Vec<(String, f64, f64, f64, f64)> {
        self.inner
            .records()
            .iter()
            .map(|r| {
                (
                    r.path.to_string(),
                    r.size_birth,
                    r.growth_rate,
                    r.lifetime,
                    r.birth_time,
                )
            })
            .collect()
    }

    fn observations(&self) -> PyResult<PyObservationSet> {
        Ok(PyObservationSet {
            inner: self.inner.observations().map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Observed cells: size at birth, growth rate and lifetime.
#[pyclass(name = "ObservationSet", module = "gftree")]
struct PyObservationSet {
    inner: ObservationSet,
}

#[pymethods]
impl PyObservationSet {
    #[new]
    fn new(size_birth: Vec<f64>, growth_rate: Vec<f64>, lifetime: Vec<f64>) -> PyResult<Self> {
        if size_birth.len() != growth_rate.len() || size_birth.len() != lifetime.len() {
            return Err(PyValueError::new_err("columns must have equal lengths"));
        }
        let rows = size_birth
            .into_iter()
            .zip(growth_rate)
            .zip(lifetime)
            .map(|((size_birth, growth_rate), lifetime)| Observation {
                size_birth,
                growth_rate,
                lifetime,
            })
            .collect();
        Ok(PyObservationSet {
            inner: ObservationSet::new(rows).map_err(err)?,
        })
    }

    fn mean_growth_rate(&self) -> f64 {
        self.inner.mean_growth_rate()
    }

    /// `(size_birth, growth_rate, lifetime)` columns.
    fn columns(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let rows = self.inner.rows();
        (
            rows.iter().map(|o| o.size_birth).collect(),
            rows.iter().map(|o| o.growth_rate).collect(),
            rows.iter().map(|o| o.lifetime).collect(),
        )
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// `B̂` on the grid `y_i = i·dx` with its ingredients.
#[pyclass(name = "Estimate", module = "gftree")]
struct PyEstimate {
    inner: Estimate,
}

#[pymethods]
impl PyEstimate {
    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.b_hat.xs().collect()
    }

    #[getter]
    fn b_hat(&self) -> Vec<f64> {
        self.inner.b_hat.values.clone()
    }

    /// `ν̂(y/2)`.
    #[getter]
    fn nu_half(&self) -> Vec<f64> {
        self.inner.nu_half.clone()
    }

    #[getter]
    fn raw_denominator(&self) -> Vec<f64> {
        self.inner.raw_denominator.clone()
    }

    #[getter]
    fn clipped(&self) -> Vec<bool> {
        self.inner.clipped.clone()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.resolved.h
    }

    #[getter]
    fn varpi(&self) -> f64 {
        self.inner.resolved.varpi
    }

    #[getter]
    fn dx(&self) -> f64 {
        self.inner.resolved.dx
    }

    fn __len__(&self) -> usize {
        self.inner.b_hat.len()
    }
}

fn scheme(name: &str) -> PyResult<Scheme> {
    name.parse().map_err(err)
}

#[pyfunction]
fn simulate_full_tree(spec: PyRef<'_, PyModelSpec>, generations: u32, seed: u64) -> PyResult<PyGenealogy> {
    Ok(PyGenealogy {
        inner: full(&spec.inner, generations, seed, &SimOptions::default()).map_err(err)?,
    })
}

#[pyfunction]
fn simulate_sparse_lineage(spec: PyRef<'_, PyModelSpec>, length: usize, seed: u64) -> PyResult<PyGenealogy> {
    Ok(PyGenealogy {
        inner: sparse(&spec.inner, length, seed, &SimOptions::default()).map_err(err)?,
    })
}

/// `config` is the estimator configuration as JSON; defaults otherwise.
#[pyfunction]
#[pyo3(signature = (obs, config = None, pooled_tau = false))]
fn estimate_b(obs: PyRef<'_, PyObservationSet>, config: Option<&str>, pooled_tau: bool) -> PyResult<PyEstimate> {
    let config: EstimatorConfig = match config {
        Some(text) => serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => EstimatorConfig::default(),
    };
    let inner = if pooled_tau {
        estimate_B_pooled_tau(&obs.inner, &config)
    } else {
        estimate_B(&obs.inner, &config)
    }
    .map_err(err)?;
    Ok(PyEstimate { inner })
}

/// Size marginal of the invariant law for constant growth `tau`.
#[pyfunction]
#[pyo3(signature = (coefficient, exponent, tau, dx = 2.5e-3, x_max = 5.0))]
fn invariant_fixed_point_py(
    py: Python<'_>,
    coefficient: f64,
    exponent: f64,
    tau: f64,
    dx: f64,
    x_max: f64,
) -> PyResult<Py<PyAny>> {
    let grid = SizeGrid::new(dx, x_max).map_err(err)?;
    let sol = invariant_fixed_point(&power_law(coefficient, exponent)?, tau, &grid, FIXED_POINT_TOL).map_err(err)?;
    to_py(
        py,
        &serde_json::json!({
            "x": sol.nu.xs().collect::<Vec<_>>(),
            "nu": sol.nu.values,
            "residual": sol.residual,
            "iterations": sol.iterations,
        }),
    )
}

/// Recovers `B` on `y0 + i·dy` from the invariant law it generates.
#[pyfunction]
#[pyo3(signature = (coefficient, exponent, tau, y0, dy, m, dx = 2.5e-3, x_max = 5.0))]
#[allow(clippy::too_many_arguments)]
fn closed_loop_b(
    coefficient: f64,
    exponent: f64,
    tau: f64,
    y0: f64,
    dy: f64,
    m: usize,
    dx: f64,
    x_max: f64,
) -> PyResult<Vec<f64>> {
    let grid = SizeGrid::new(dx, x_max).map_err(err)?;
    let sol = invariant_fixed_point(&power_law(coefficient, exponent)?, tau, &grid, FIXED_POINT_TOL).map_err(err)?;
    Ok(reconstruct_b_from_invariant(&sol, tau, y0, dy, m).map_err(err)?.values)
}

/// Relative L2 gap between the invariant density and `2B(2x)N(2x)` built
/// from the PDE steady state.
#[pyfunction]
#[pyo3(signature = (coefficient, exponent, tau, pde_dx = 0.02, lo = 0.5, hi = 2.5))]
fn pde_relation_error(coefficient: f64, exponent: f64, tau: f64, pde_dx: f64, lo: f64, hi: f64) -> PyResult<f64> {
    let rate = power_law(coefficient, exponent)?;
    let nu =
        invariant_fixed_point(&rate, tau, &SizeGrid::new(2.5e-3, 5.0).map_err(err)?, FIXED_POINT_TOL).map_err(err)?;
    let grid = SizeGrid::new(pde_dx, 8.0).map_err(err)?;
    let state = solve_conservative_pde(&rate, tau, &grid, &uniform_phase_profile(&grid), &PdeOptions::default())
        .map_err(err)?;
    Ok(compare_with_invariant(&rate, &state, &nu, lo, hi).relative_l2)
}

#[pyfunction]
#[pyo3(signature = (spec, log2_sizes, replicates, scheme_name = "full", seed = 0))]
fn convergence_study(
    py: Python<'_>,
    spec: PyRef<'_, PyModelSpec>,
    log2_sizes: Vec<u32>,
    replicates: usize,
    scheme_name: &str,
    seed: u64,
) -> PyResult<Py<PyAny>> {
    let config = StudyConfig {
        log2_sizes,
        replicates,
        ..StudyConfig::standard(scheme(scheme_name)?, seed)
    };
    to_py(py, &run_convergence_study(&spec.inner, &config).map_err(err)?)
}

#[pyfunction]
#[pyo3(signature = (spec, t, replicates, seed = 0, root_size = 1.0, tolerance_se = 3.0))]
fn many_to_one_check(
    py: Python<'_>,
    spec: PyRef<'_, PyModelSpec>,
    t: f64,
    replicates: usize,
    seed: u64,
    root_size: f64,
    tolerance_se: f64,
) -> PyResult<Py<PyAny>> {
    let report = m2o(
        &spec.inner,
        root_size,
        t,
        replicates,
        &default_battery(),
        seed,
        tolerance_se,
    )
    .map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
#[pyo3(signature = (path, size_birth = "size_birth", growth_rate = "growth_rate", lifetime = "lifetime", lineage_id = None))]
fn ingest_lineage(
    path: &str,
    size_birth: &str,
    growth_rate: &str,
    lifetime: &str,
    lineage_id: Option<String>,
) -> PyResult<PyObservationSet> {
    let mapping = ColumnMapping {
        size_birth: size_birth.into(),
        growth_rate: growth_rate.into(),
        lifetime: lifetime.into(),
        lineage_id,
        ..ColumnMapping::default()
    };
    Ok(PyObservationSet {
        inner: ingest_lineage_csv(path, &mapping).map_err(err)?.observations,
    })
}

#[pymodule]
fn gftree(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModelSpec>()?;
    m.add_class::<PyGenealogy>()?;
    m.add_class::<PyObservationSet>()?;
    m.add_class::<PyEstimate>()?;
    m.add_function(wrap_pyfunction!(simulate_full_tree, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_sparse_lineage, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_b, m)?)?;
    m.add("invariant_fixed_point", wrap_pyfunction!(invariant_fixed_point_py, m)?)?;
    m.add_function(wrap_pyfunction!(closed_loop_b, m)?)?;
    m.add_function(wrap_pyfunction!(pde_relation_error, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_study, m)?)?;
    m.add_function(wrap_pyfunction!(many_to_one_check, m)?)?;
    m.add_function(wrap_pyfunction!(ingest_lineage, m)?)?;
    Ok(())
}
