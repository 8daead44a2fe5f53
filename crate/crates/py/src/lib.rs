//! Python bindings for the core crate. Cyclotomic values cross the boundary as the
//! `num/den,...` coefficient text of `CycNum`, so nothing is rounded.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use weil_shintani::grouplib::Mat;
use weil_shintani::normmap::NormMap;
use weil_shintani::schrodinger::WeilRep;
use weil_shintani::verify::{run_check, RunConfig};
use weil_shintani::{CycNum, Error};

fn err(e: Error) -> PyErr {
    match e {
        Error::ConfigInvalid(_) | Error::Parse(_) | Error::NotPrime(_) | Error::EvenCharacteristic => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

#[pyclass(name = "Tower", frozen)]
struct PyTower(Arc<weil_shintani::Tower>);

#[pymethods]
impl PyTower {
    #[new]
    #[pyo3(signature = (p, base_degree = 1, m = 1))]
    fn new(p: u32, base_degree: usize, m: usize) -> PyResult<Self> {
        Ok(PyTower(Arc::new(weil_shintani::Tower::build(p, base_degree, m).map_err(err)?)))
    }

    #[getter]
    fn p(&self) -> u32 {
        self.0.p()
    }

    #[getter]
    fn base_degree(&self) -> usize {
        self.0.base_degree()
    }

    #[getter]
    fn rel_degree(&self) -> usize {
        self.0.rel_degree()
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    fn __repr__(&self) -> String {
        format!("Tower({})", self.0.to_text())
    }
}

/// Rows of integers, read in the prime field.
fn matrix(t: &weil_shintani::Tower, rows: Vec<Vec<i64>>) -> PyResult<Mat> {
    let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
    Mat::from_ints(t, &refs).map_err(err)
}

#[pyclass(name = "WeilRep", frozen)]
struct PyWeilRep(WeilRep);

#[pymethods]
impl PyWeilRep {
    #[new]
    #[pyo3(signature = (tower, n = 1, d = 1))]
    fn new(tower: &PyTower, n: usize, d: usize) -> PyResult<Self> {
        Ok(PyWeilRep(WeilRep::new(tower.0.clone(), n, d).map_err(err)?))
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Trace of `ρ(g)` for a symplectic matrix given as integer rows.
    fn trace(&self, rows: Vec<Vec<i64>>) -> PyResult<String> {
        let g = matrix(self.0.tower(), rows)?;
        Ok(self.0.rho(&g).map_err(err)?.trace().to_text())
    }

    /// Trace of `ρ(g) I_σ^i`.
    fn extended_trace(&self, i: usize, rows: Vec<Vec<i64>>) -> PyResult<String> {
        let g = matrix(self.0.tower(), rows)?;
        Ok(self.0.extended_trace_sp(i, &g).map_err(err)?.to_text())
    }
}

/// Norm of `(σ^i, g)` for an integer matrix `g`, in the matrix text format.
#[pyfunction]
fn gyoja_norm(tower: &PyTower, i: usize, rows: Vec<Vec<i64>>) -> PyResult<String> {
    let g = matrix(&tower.0, rows)?;
    let nm = NormMap::new(tower.0.clone(), i).map_err(err)?;
    Ok(nm.gyoja_norm(&g).map_err(err)?.to_text())
}

/// Complex approximation of a coefficient text, for display only.
#[pyfunction]
fn approximate(p: u32, text: &str) -> PyResult<(f64, f64)> {
    Ok(CycNum::from_text(p, text).map_err(err)?.to_complex())
}

/// Runs a named check; `config` is a JSON object overriding the defaults. Returns the
/// report as JSON.
#[pyfunction]
#[pyo3(signature = (check, config = "{}"))]
fn run(py: Python<'_>, check: &str, config: &str) -> PyResult<String> {
    let mut base = serde_json::to_value(RunConfig::default()).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let over: serde_json::Value = serde_json::from_str(config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let serde_json::Value::Object(over) = over else {
        return Err(PyValueError::new_err("config must be a JSON object"));
    };
    for (k, v) in over {
        base[k] = v;
    }
    let cfg: RunConfig = serde_json::from_value(base).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let check = check.to_owned();
    let report = py.detach(move || run_check(&check, &cfg)).map_err(err)?;
    Ok(report.to_json())
}

#[pymodule]
fn weil_shintani_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTower>()?;
    m.add_class::<PyWeilRep>()?;
    m.add_function(wrap_pyfunction!(gyoja_norm, m)?)?;
    m.add_function(wrap_pyfunction!(approximate, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
