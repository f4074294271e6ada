use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyIOError, PyValueError};
use pyo3::prelude::*;

use alphamod::frequency_partition::{build_bapu, AlphaParams, Bapu};
use alphamod::nls4::{self, Scheme, SolverConfig};
use alphamod::propagator::{self, TimeQuadrature};
use alphamod::spaces::{self, ExponentTuple, FreqGrid};
use alphamod::{cli, regions, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Validation(m) => PyValueError::new_err(m),
        Error::Numeric(m) => PyArithmeticError::new_err(m),
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::Json(e) => PyValueError::new_err(e.to_string()),
    }
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Periodic samples on a box `[-L/2, L/2)^d`, `d` in {1, 2}.
#[pyclass(name = "GridFunction", from_py_object)]
#[derive(Clone)]
struct PyGridFunction {
    inner: spaces::GridFunction,
}

#[pymethods]
impl PyGridFunction {
    #[new]
    fn new(d: usize, n: usize, length: f64, samples: Vec<Complex64>) -> PyResult<Self> {
        let inner = spaces::GridFunction::new(d, n, length, samples).map_err(py_err)?;
        Ok(Self { inner })
    }

    /// `amplitude * exp(-x^2 / (2 sigma^2))` on `n` points of a box of length `50 sigma`.
    #[staticmethod]
    #[pyo3(signature = (n, sigma=1.0, amplitude=1.0))]
    fn gaussian(n: usize, sigma: f64, amplitude: f64) -> PyResult<Self> {
        let inner = nls4::gaussian_datum(n, sigma, Complex64::new(amplitude, 0.0)).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: spaces::GridFunction::load(path).map_err(py_err)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        cli::write_atomic(path.as_ref(), &self.inner.to_bytes()).map_err(py_err)?;
        Ok(())
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn length(&self) -> f64 {
        self.inner.length()
    }

    fn samples(&self) -> Vec<Complex64> {
        self.inner.samples().to_vec()
    }

    fn lp_norm(&self, p: f64) -> PyResult<f64> {
        spaces::lp_norm(&self.inner, p).map_err(py_err)
    }

    fn sobolev_norm(&self, s: f64, p: f64) -> PyResult<f64> {
        spaces::sobolev_norm(&self.inner, s, p).map_err(py_err)
    }

    /// `‖f‖_{M^{s,α}_{p,q}}` with the α-BAPU covering the grid band.
    fn alpha_mod_norm(&self, p: f64, q: f64, s: f64, alpha: f64) -> PyResult<f64> {
        let d = self.inner.dim();
        let t = ExponentTuple::norm(d, p, q, s, alpha).map_err(py_err)?;
        let params = AlphaParams::new(alpha, d).map_err(py_err)?;
        let bapu = build_bapu(params, *self.inner.grid()).map_err(py_err)?;
        spaces::alpha_mod_norm(&self.inner, &t, &bapu).map_err(py_err)
    }

    /// `S_β(t) f`.
    fn propagate(&self, beta: f64, t: f64) -> PyResult<Self> {
        Ok(Self { inner: propagator::propagate(&self.inner, beta, t).map_err(py_err)? })
    }

    /// `‖S_β(t) f‖_{L^p([0, t1] × box)}` on `n_t` time nodes.
    #[pyo3(signature = (beta, p, t1=1.0, n_t=64))]
    fn spacetime_norm(&self, beta: f64, p: f64, t1: f64, n_t: usize) -> PyResult<f64> {
        let quad = TimeQuadrature::new(0.0, t1, n_t).map_err(py_err)?;
        Ok(propagator::spacetime_norm(&self.inner, beta, p, &quad).map_err(py_err)?.value)
    }

    fn __repr__(&self) -> String {
        format!("GridFunction(d={}, n={}, length={})", self.inner.dim(), self.inner.n(), self.inner.length())
    }
}

/// α-BAPU on a 1D or 2D grid with `n` points per axis and half-band `band`.
#[pyclass(name = "Bapu")]
struct PyBapu {
    inner: Bapu,
}

#[pymethods]
impl PyBapu {
    #[new]
    #[pyo3(signature = (alpha, d=1, n=1024, band=8.0))]
    fn new(alpha: f64, d: usize, n: usize, band: f64) -> PyResult<Self> {
        let grid = FreqGrid::new(d, n, std::f64::consts::PI * n as f64 / band).map_err(py_err)?;
        let params = AlphaParams::new(alpha, d).map_err(py_err)?;
        Ok(Self { inner: build_bapu(params, grid).map_err(py_err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn partition_error(&self) -> f64 {
        self.inner.partition_error()
    }

    fn overlap_count(&self) -> usize {
        self.inner.overlap_count()
    }

    fn centers(&self) -> Vec<Vec<f64>> {
        self.inner.windows.iter().map(|w| w.spec.center.clone()).collect()
    }

    /// Metadata as a JSON string.
    fn metadata(&self) -> PyResult<String> {
        json(&self.inner.metadata())
    }

    /// Windows applied to `f`, in the order of `centers()`.
    fn decompose(&self, f: &PyGridFunction) -> PyResult<Vec<PyGridFunction>> {
        self.inner
            .windows
            .iter()
            .map(|w| {
                alphamod::frequency_partition::apply_window(&f.inner, &w.profile)
                    .map(|inner| PyGridFunction { inner })
                    .map_err(py_err)
            })
            .collect()
    }
}

/// Region verdict at `(p, q)` as a JSON string.
#[pyfunction]
fn verdict(d: usize, beta: f64, p: f64, q: f64) -> PyResult<String> {
    json(&regions::verdict(d, beta, p, q).map_err(py_err)?)
}

#[pyfunction]
fn sufficient_threshold(d: usize, beta: f64, p: f64, q: f64) -> PyResult<f64> {
    Ok(regions::sufficient_threshold(d, beta, p, q).map_err(py_err)?.s)
}

#[pyfunction]
fn necessity_threshold(d: usize, beta: f64, p: f64, q: f64) -> PyResult<f64> {
    regions::necessity_threshold(d, beta, p, q).map_err(py_err)
}

#[pyfunction]
fn fix_time_threshold(d: usize, beta: f64, p: f64, q: f64) -> PyResult<f64> {
    regions::fix_time_threshold(d, beta, p, q).map_err(py_err)
}

/// Raster CSV with columns `inv_p,inv_q,label,sufficient_s,boundary,necessary_s,gap,fix_time_s`.
#[pyfunction]
#[pyo3(signature = (d, beta, resolution=101))]
fn region_raster(d: usize, beta: f64, resolution: usize) -> PyResult<String> {
    Ok(regions::raster_csv(&regions::region_grid(d, beta, resolution).map_err(py_err)?))
}

/// `(a, gamma)` of the admissible pair for `L^p_x`.
#[pyfunction]
fn strichartz_pair(p: f64) -> PyResult<(f64, f64)> {
    let s = nls4::strichartz_pair(p).map_err(py_err)?;
    Ok((s.a, s.gamma))
}

/// Solves the cubic fourth-order NLS; returns `(final state, energy CSV)`.
#[pyfunction]
#[pyo3(signature = (u0, dt, t_final, scheme="splitstep", margin=0.5))]
fn solve_nls4(u0: &PyGridFunction, dt: f64, t_final: f64, scheme: &str, margin: f64) -> PyResult<(PyGridFunction, String)> {
    let scheme = match scheme {
        "splitstep" => Scheme::Splitstep,
        "picard" => Scheme::Picard,
        other => return Err(PyValueError::new_err(format!("unknown scheme {other:?}"))),
    };
    let traj = nls4::solve(&u0.inner, &SolverConfig::new(dt, t_final, scheme)).map_err(py_err)?;
    let report = nls4::energy_report(&traj).map_err(py_err)?;
    let verdict = nls4::gronwall_monitor(&report, margin).map_err(py_err)?;
    Ok((PyGridFunction { inner: traj.last().clone() }, report.to_csv(verdict.constant)))
}

/// Runs acceptance criteria (all when `only` is empty); returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (only=Vec::new(), seed=0))]
fn run_acceptance(py: Python<'_>, only: Vec<u32>, seed: u64) -> PyResult<String> {
    let report = py.detach(|| cli::verify::run_acceptance(seed, &only));
    json(&report)
}

#[pymodule]
fn alphamod_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGridFunction>()?;
    m.add_class::<PyBapu>()?;
    m.add_function(wrap_pyfunction!(verdict, m)?)?;
    m.add_function(wrap_pyfunction!(sufficient_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(necessity_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(fix_time_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(region_raster, m)?)?;
    m.add_function(wrap_pyfunction!(strichartz_pair, m)?)?;
    m.add_function(wrap_pyfunction!(solve_nls4, m)?)?;
    m.add_function(wrap_pyfunction!(run_acceptance, m)?)?;
    Ok(())
}
