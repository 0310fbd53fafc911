//! Python module `platoon`: transfer functions, chain scenarios, the gain
//! and headway analyses, and the time-domain simulator.

use std::collections::BTreeMap;

use platoon_core::analysis::{self, FrequencyGrid};
use platoon_core::chain::{self, ChainScenario, Comm, Sensors};
use platoon_core::ratfun::RationalTF;
use platoon_core::simkit::{self, DisturbanceSpec, SimOptions};
use platoon_core::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: platoon_core::Error) -> PyErr {
    use platoon_core::Error as E;
    match e {
        E::Degree(_)
        | E::SingularTf(_)
        | E::Precondition(_)
        | E::InvalidFilter(_)
        | E::InvalidMount(_)
        | E::InvalidScenario(_)
        | E::ImproperTf(_) => PyValueError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

fn grid(omega_min: f64, omega_max: f64, points_per_decade: usize) -> PyResult<FrequencyGrid> {
    FrequencyGrid::new(
        omega_min,
        omega_max,
        points_per_decade,
        FrequencyGrid::default().refinement_depth,
    )
    .map_err(err)
}

/// Rational transfer function with ascending real coefficients.
#[pyclass(name = "TransferFunction", frozen)]
#[derive(Clone)]
struct PyTf(RationalTF);

#[pymethods]
impl PyTf {
    #[new]
    #[pyo3(signature = (num, den = vec![1.0]))]
    fn new(num: Vec<f64>, den: Vec<f64>) -> PyResult<Self> {
        RationalTF::from_coeffs(&num, &den).map(PyTf).map_err(err)
    }

    #[getter]
    fn num(&self) -> Vec<f64> {
        self.0.num().coeffs().to_vec()
    }

    #[getter]
    fn den(&self) -> Vec<f64> {
        self.0.den().coeffs().to_vec()
    }

    /// Value at `s = j omega`.
    fn __call__(&self, omega: f64) -> PyResult<Complex64> {
        self.0.eval(omega).map_err(err)
    }

    fn poles(&self) -> PyResult<Vec<Complex64>> {
        Ok(self.0.poles().map_err(err)?.roots)
    }

    fn zeros(&self) -> PyResult<Vec<Complex64>> {
        Ok(self.0.zeros().map_err(err)?.roots)
    }

    fn is_stable(&self) -> bool {
        self.0.is_stable()
    }

    fn __mul__(&self, other: &PyTf) -> PyResult<PyTf> {
        self.0.mul(&other.0).map(PyTf).map_err(err)
    }

    fn __add__(&self, other: &PyTf) -> PyResult<PyTf> {
        self.0.add(&other.0).map(PyTf).map_err(err)
    }

    /// `self / (1 + self)`.
    fn feedback(&self) -> PyResult<PyTf> {
        self.0.feedback().map(PyTf).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("TransferFunction({})", self.0)
    }
}

/// A homogeneous vehicle chain configuration.
#[pyclass(name = "Scenario", frozen)]
#[derive(Clone)]
struct PyScenario(ChainScenario);

#[pymethods]
impl PyScenario {
    #[staticmethod]
    #[pyo3(signature = (k, h = 0.0))]
    fn headway(k: &PyTf, h: f64) -> PyResult<Self> {
        ChainScenario::headway(k.0.clone(), h).map(PyScenario).map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (k, b, h_comm, w, h = 0.0))]
    fn cacc(k: &PyTf, b: &PyTf, h_comm: &PyTf, w: &PyTf, h: f64) -> PyResult<Self> {
        ChainScenario::cacc(k.0.clone(), h, b.0.clone(), h_comm.0.clone(), w.0.clone())
            .map(PyScenario)
            .map_err(err)
    }

    #[staticmethod]
    fn general(k: &PyTf, f: &PyTf, g: &PyTf, h_comm: &PyTf, w: &PyTf) -> PyResult<Self> {
        ChainScenario::general(k.0.clone(), f.0.clone(), g.0.clone(), h_comm.0.clone(), w.0.clone())
            .map(PyScenario)
            .map_err(err)
    }

    #[staticmethod]
    fn mounts(k: &PyTf, kr: &PyTf, kf: &PyTf) -> PyResult<Self> {
        ChainScenario::mounts(k.0.clone(), kr.0.clone(), kf.0.clone())
            .map(PyScenario)
            .map_err(err)
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.h()
    }

    #[getter]
    fn k(&self) -> PyTf {
        PyTf(self.0.k().clone())
    }

    #[getter]
    fn variant(&self) -> &'static str {
        match (self.0.comm(), self.0.sensors()) {
            (_, Sensors::Mounts { .. }) => "mounts",
            (Comm::Cacc { .. }, _) => "cacc",
            (Comm::General { .. }, _) => "general",
            (Comm::None, _) => "headway",
        }
    }

    /// Whether every link map of the chain is stable.
    fn links_stable(&self) -> PyResult<bool> {
        Ok(chain::build_links(&self.0).map_err(err)?.stable())
    }

    /// Chain response matrix from disturbances `d_0..d_N` to errors
    /// `e_1..e_N` at frequency `omega`, as nested lists.
    fn freq_matrix(&self, n: usize, omega: f64) -> PyResult<Vec<Vec<Complex64>>> {
        let m = chain::chain_freq_matrix(&self.0, n, omega).map_err(err)?.entries;
        Ok((0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(variant={:?}, h={}, K={})",
            self.variant(),
            self.0.h(),
            self.0.k()
        )
    }
}

/// Minimal time headway of controller `k`: `(h_min, argmax_omega, method)`.
#[pyfunction]
#[pyo3(signature = (k, omega_min = 1e-4, omega_max = 1e4, points_per_decade = 64))]
fn headway_min(k: &PyTf, omega_min: f64, omega_max: f64, points_per_decade: usize) -> PyResult<(f64, f64, String)> {
    let r = analysis::headway_min_b(&k.0, &grid(omega_min, omega_max, points_per_decade)?).map_err(err)?;
    let method = format!("{:?}", r.method);
    Ok((r.h_min, r.argmax_omega, method))
}

/// Sup over frequency of the largest singular value: `(gain, omega)`.
#[pyfunction]
#[pyo3(signature = (sc, n, omega_min = 1e-4, omega_max = 1e4, points_per_decade = 64))]
fn def1_gain(
    sc: &PyScenario,
    n: usize,
    omega_min: f64,
    omega_max: f64,
    points_per_decade: usize,
) -> PyResult<(f64, f64)> {
    let g = analysis::def1_gain(&sc.0, n, &grid(omega_min, omega_max, points_per_decade)?).map_err(err)?;
    Ok((g.gain, g.omega))
}

/// Sup over frequency of the largest single entry: `(gain, omega)`.
#[pyfunction]
#[pyo3(signature = (sc, n, omega_min = 1e-4, omega_max = 1e4, points_per_decade = 64))]
fn def2_gain(
    sc: &PyScenario,
    n: usize,
    omega_min: f64,
    omega_max: f64,
    points_per_decade: usize,
) -> PyResult<(f64, f64)> {
    let g = analysis::def2_gain(&sc.0, n, &grid(omega_min, omega_max, points_per_decade)?).map_err(err)?;
    Ok((g.gain, g.omega))
}

/// Gains for each chain length plus the detected growth law.
#[pyfunction]
fn gain_sweep<'py>(py: Python<'py>, sc: &PyScenario, ns: Vec<usize>) -> PyResult<Bound<'py, PyDict>> {
    let rep = analysis::gain_vs_n_sweep(&sc.0, &ns, &FrequencyGrid::default()).map_err(err)?;
    let out = PyDict::new(py);
    let def1: BTreeMap<usize, f64> = rep.per_n.iter().map(|(n, g)| (*n, g.def1_gain)).collect();
    let def2: BTreeMap<usize, f64> = rep.per_n.iter().map(|(n, g)| (*n, g.def2_gain)).collect();
    out.set_item("def1", def1)?;
    out.set_item("def2", def2)?;
    out.set_item("growth_class", format!("{:?}", rep.growth_class))?;
    out.set_item("c_estimate", rep.c_estimate)?;
    Ok(out)
}

/// Peak of `|tf(j omega)|`: `(peak, omega)`.
#[pyfunction]
fn hinf(tf: &PyTf) -> PyResult<(f64, f64)> {
    let r = analysis::hinf(&tf.0, &FrequencyGrid::default()).map_err(err)?;
    Ok((r.peak, r.omega_star))
}

/// Sensitivity integral of a loop with a double integrator.
#[pyfunction]
fn bode_integral<'py>(py: Python<'py>, r: &PyTf) -> PyResult<Bound<'py, PyDict>> {
    let rep = analysis::bode_csi_check(&r.0).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("integral", rep.integral_value)?;
    out.set_item("rhp_zero_sum", rep.rhp_zero_sum)?;
    out.set_item("residual", rep.residual)?;
    out.set_item("rhp_zeros", rep.q_list.roots)?;
    Ok(out)
}

/// Runs the chain simulator. Disturbances are dicts in the config format,
/// e.g. `{"type": "impulse", "target": 0}`. Returns the time vector, every
/// recorded signal and the L2 gain.
#[pyfunction]
#[pyo3(signature = (sc, n, disturbances, dt = simkit::DEFAULT_DT, horizon = simkit::DEFAULT_HORIZON))]
fn simulate<'py>(
    py: Python<'py>,
    sc: &PyScenario,
    n: usize,
    disturbances: Vec<Bound<'py, PyDict>>,
    dt: f64,
    horizon: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let dumps = py.import("json")?.getattr("dumps")?;
    let specs = disturbances
        .iter()
        .map(|d| {
            let text: String = dumps.call1((d,))?.extract()?;
            serde_json::from_str::<DisturbanceSpec>(&text).map_err(|e| PyValueError::new_err(e.to_string()))
        })
        .collect::<PyResult<Vec<_>>>()?;
    let trace = py
        .allow_threads(|| simkit::simulate_chain_with(&sc.0, n, &specs, dt, horizon, &SimOptions::default()))
        .map_err(err)?;
    let norms = simkit::trace_l2_norms(&trace);
    let signals = PyDict::new(py);
    for (k, v) in &trace.signals {
        signals.set_item(k, v)?;
    }
    let out = PyDict::new(py);
    out.set_item("t", &trace.t)?;
    out.set_item("signals", signals)?;
    out.set_item("gain", norms.gain())?;
    out.set_item("e_total", norms.e_total)?;
    out.set_item("d_total", norms.d_total)?;
    out.set_item("warnings", &trace.warnings)?;
    Ok(out)
}

#[pymodule]
fn platoon(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTf>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(headway_min, m)?)?;
    m.add_function(wrap_pyfunction!(def1_gain, m)?)?;
    m.add_function(wrap_pyfunction!(def2_gain, m)?)?;
    m.add_function(wrap_pyfunction!(gain_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(hinf, m)?)?;
    m.add_function(wrap_pyfunction!(bode_integral, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
