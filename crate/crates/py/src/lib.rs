//! Python bindings for `tribody`.

use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use tribody::closed_form::{self, ClosedFormError, SignMode, SurrogateParams};
use tribody::harness::{self, HarnessError, Scenario};
use tribody::lambert_w::{Branch, LambertError};
use tribody::model::{PolarState, SurrogateInitials};

fn lambert_err(e: LambertError) -> PyErr {
    match e {
        LambertError::UnknownBranch(_) => PyValueError::new_err(e.to_string()),
        other => PyArithmeticError::new_err(other.to_string()),
    }
}

fn closed_err(e: ClosedFormError) -> PyErr {
    match e {
        ClosedFormError::InvalidInput(_) => PyValueError::new_err(e.to_string()),
        other => PyArithmeticError::new_err(other.to_string()),
    }
}

fn harness_err(e: HarnessError) -> PyErr {
    match e {
        HarnessError::Input(_) => PyValueError::new_err(e.to_string()),
        other => PyArithmeticError::new_err(other.to_string()),
    }
}

/// Principal branch W0(z).
#[pyfunction]
fn w0(z: f64) -> PyResult<f64> {
    tribody::lambert_w::w0(z).map_err(lambert_err)
}

/// Lower branch W-1(z).
#[pyfunction]
fn wm1(z: f64) -> PyResult<f64> {
    tribody::lambert_w::wm1(z).map_err(lambert_err)
}

/// W on a named branch (`"principal"` or `"lower"`).
#[pyfunction]
fn lambert_w(branch: &str, z: f64) -> PyResult<f64> {
    let b: Branch = branch.parse().map_err(lambert_err)?;
    b.eval(z).map_err(lambert_err)
}

/// Surrogate constants of one body.
#[pyclass(name = "SurrogateParams", frozen)]
struct PySurrogateParams(SurrogateParams);

#[pymethods]
impl PySurrogateParams {
    #[getter]
    fn body_index(&self) -> usize {
        self.0.body_index
    }
    #[getter]
    fn a_const(&self) -> f64 {
        self.0.a_const
    }
    #[getter]
    fn b_const(&self) -> f64 {
        self.0.b_const
    }
    #[getter]
    fn k_const(&self) -> f64 {
        self.0.k_const
    }
    #[getter]
    fn sign(&self) -> i8 {
        self.0.sign
    }
    #[getter]
    fn c2(&self) -> f64 {
        self.0.c2
    }
    #[getter]
    fn c4(&self) -> f64 {
        self.0.c4
    }
    #[getter]
    fn c5(&self) -> f64 {
        self.0.c5
    }
    #[getter]
    fn r_a0(&self) -> f64 {
        self.0.r_a0
    }
    #[getter]
    fn t0(&self) -> f64 {
        self.0.t0
    }
    #[getter]
    fn branch(&self) -> &'static str {
        self.0.branch.as_str()
    }

    fn r_a_closed(&self, t: f64) -> PyResult<f64> {
        self.0.r_a_closed(t).map_err(closed_err)
    }

    fn implicit_residual(&self, t: f64) -> PyResult<f64> {
        self.0.implicit_residual(t).map_err(closed_err)
    }

    /// Latest valid time, or `None` when unbounded.
    fn validity_horizon(&self) -> PyResult<Option<f64>> {
        self.0.validity_horizon().map_err(closed_err)
    }

    fn radius_closed(&self, t: f64) -> PyResult<f64> {
        self.0.radius_closed(t).map_err(closed_err)
    }

    fn theta_closed(&self, t: f64) -> PyResult<f64> {
        self.0.theta_closed(t).map_err(closed_err)
    }

    /// `(r, r_dot)` at `t`.
    #[pyo3(signature = (t, quad_tol = 1e-10))]
    fn radius_semi_analytic(&self, t: f64, quad_tol: f64) -> PyResult<(f64, f64)> {
        self.0.radius_semi_analytic(t, quad_tol).map_err(closed_err)
    }

    #[pyo3(signature = (t, quad_tol = 1e-10))]
    fn theta_semi_analytic(&self, t: f64, quad_tol: f64) -> PyResult<f64> {
        self.0.theta_semi_analytic(t, quad_tol).map_err(closed_err)
    }

    fn to_json(&self) -> String {
        harness::to_json(&self.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "SurrogateParams(body={}, A={:?}, B={:?}, k={:?}, sign={}, branch={})",
            self.0.body_index,
            self.0.a_const,
            self.0.b_const,
            self.0.k_const,
            self.0.sign,
            self.0.branch.as_str()
        )
    }
}

/// Surrogate constants for `body` (0-based) from explicit surrogate and
/// body initial data.
#[pyfunction]
#[pyo3(signature = (g, masses, body, r_a0, rdot_a0, r_i0, rdot_i0, theta_i0 = 0.0, thetadot_i0 = 0.0, sign_mode = "auto", branch = "lower", t0 = 0.0))]
#[allow(clippy::too_many_arguments)]
fn build_params(
    g: f64,
    masses: [f64; 3],
    body: usize,
    r_a0: f64,
    rdot_a0: f64,
    r_i0: f64,
    rdot_i0: f64,
    theta_i0: f64,
    thetadot_i0: f64,
    sign_mode: &str,
    branch: &str,
    t0: f64,
) -> PyResult<PySurrogateParams> {
    if body > 2 {
        return Err(PyValueError::new_err(format!("body must be 0, 1 or 2, got {body}")));
    }
    let sign_mode: SignMode = serde_json::from_value(serde_json::Value::String(sign_mode.into()))
        .map_err(|_| PyValueError::new_err(format!("unknown sign mode '{sign_mode}'")))?;
    let branch: Branch = branch.parse().map_err(lambert_err)?;
    let surrogate = SurrogateInitials { r_a0, rdot_a0, theta0: theta_i0, thetadot0: thetadot_i0 };
    let state = PolarState::new(r_i0, theta_i0, rdot_i0, thetadot_i0);
    closed_form::build_params(g, masses, body, &surrogate, &state, sign_mode, branch, t0)
        .map(PySurrogateParams)
        .map_err(closed_err)
}

/// The example scenario as JSON.
#[pyfunction]
fn demo_scenario() -> String {
    Scenario::demo().to_json()
}

/// Runs a scenario given as JSON. Returns `(trajectory_csv, report_json,
/// exit_code)` with the exit code the CLI would use.
#[pyfunction]
#[pyo3(signature = (scenario_json, strict = false))]
fn run_scenario(scenario_json: &str, strict: bool) -> PyResult<(String, String, i32)> {
    let sc = Scenario::from_json(scenario_json).map_err(harness_err)?;
    let out = harness::run_scenario(&sc).map_err(harness_err)?;
    let code = out.exit_code(strict || sc.solver.strict);
    Ok((harness::trajectory_csv(&out.trajectories), out.report_json(&sc), code))
}

#[pymodule]
#[pyo3(name = "tribody")]
fn tribody_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(w0, m)?)?;
    m.add_function(wrap_pyfunction!(wm1, m)?)?;
    m.add_function(wrap_pyfunction!(lambert_w, m)?)?;
    m.add_function(wrap_pyfunction!(build_params, m)?)?;
    m.add_function(wrap_pyfunction!(demo_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_class::<PySurrogateParams>()?;
    Ok(())
}
