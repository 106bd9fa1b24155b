//! Python bindings. Long computations release the interpreter lock.
//!
//! Structured results come back as dicts; bulk numbers as lists of floats.

use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use srblab::gamma as g;
use srblab::greenlab as gl;
use srblab::laces as lc;
use srblab::paths::{PairPotential, Quadrature};
use srblab::{permsample as ps, pi, thermo as th, RngSpec};

create_exception!(srblab, SrblabError, PyRuntimeError, "Numerical failure inside srblab.");

fn raise(e: srblab::Error) -> PyErr {
    use srblab::Error as E;
    match e {
        E::InvalidArgument(_) | E::DegenerateInput(_) | E::Parse(_) => PyValueError::new_err(e.to_string()),
        E::Io(_) => PyOSError::new_err(e.to_string()),
        _ => SrblabError::new_err(e.to_string()),
    }
}

trait OrRaise<T> {
    fn or_raise(self) -> PyResult<T>;
}

impl<T> OrRaise<T> for srblab::Result<T> {
    fn or_raise(self) -> PyResult<T> {
        self.map_err(raise)
    }
}

/// Path-space model: dimension, coupling, pair potential, discretization.
#[pyclass(name = "Model", module = "srblab", frozen)]
struct PyModel {
    inner: srblab::paths::Model,
}

#[pymethods]
impl PyModel {
    #[new]
    #[pyo3(signature = (dim, alpha, potential = "step-ball", strength = 1.0, range = 1.0, beta = 1.0, steps_per_leg = 32, quadrature = "trapezoid"))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        dim: usize,
        alpha: f64,
        potential: &str,
        strength: f64,
        range: f64,
        beta: f64,
        steps_per_leg: usize,
        quadrature: &str,
    ) -> PyResult<Self> {
        let v = match potential {
            "step-ball" => PairPotential::step_ball(strength, range),
            "smooth-bump" => PairPotential::smooth_bump(strength, range),
            other => return Err(PyValueError::new_err(format!("unknown potential {other:?}"))),
        }
        .or_raise()?;
        let quadrature = match quadrature {
            "trapezoid" => Quadrature::Trapezoid,
            "simpson" => Quadrature::Simpson,
            other => return Err(PyValueError::new_err(format!("unknown quadrature {other:?}"))),
        };
        let inner = srblab::paths::Model {
            quadrature,
            ..srblab::paths::Model::new(dim, alpha, v).with_beta(beta).with_steps(steps_per_leg)
        };
        inner.validate().or_raise()?;
        Ok(PyModel { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(dim={}, alpha={}, beta={}, potential={}, steps_per_leg={})",
            self.inner.dim,
            self.inner.alpha,
            self.inner.beta,
            self.inner.potential.describe(),
            self.inner.steps_per_leg
        )
    }
}

/// Table of bridge weights `Γ_k(0)`.
#[pyclass(name = "GammaTable", module = "srblab", frozen)]
struct PyGammaTable {
    inner: g::GammaTable,
}

#[pymethods]
impl PyGammaTable {
    #[staticmethod]
    #[pyo3(signature = (dim, k_max, beta = 1.0))]
    fn free_gas(dim: usize, k_max: usize, beta: f64) -> PyResult<Self> {
        Ok(PyGammaTable {
            inner: g::GammaTable::free_gas(dim, beta, k_max).or_raise()?,
        })
    }

    #[staticmethod]
    fn estimate(py: Python<'_>, model: &PyModel, k_max: usize, samples: usize, seed: u64) -> PyResult<Self> {
        let inner = py.detach(|| g::estimate_gamma_table(&model.inner, k_max, samples, seed)).or_raise()?;
        Ok(PyGammaTable { inner })
    }

    /// A new table with rows added up to `k_max`; existing rows are kept.
    fn extend(&self, py: Python<'_>, model: &PyModel, k_max: usize, samples: usize) -> PyResult<Self> {
        let t = self.inner.clone();
        let inner = py.detach(|| g::extend_gamma_table(t, &model.inner, k_max, samples)).or_raise()?;
        Ok(PyGammaTable { inner })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyGammaTable {
            inner: g::GammaTable::from_text(text).or_raise()?,
        })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values()
    }

    fn std_errors(&self) -> Vec<f64> {
        self.inner.std_errors()
    }

    fn checksum(&self) -> String {
        self.inner.checksum()
    }

    #[getter]
    fn k_max(&self) -> usize {
        self.inner.k_max()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    fn __len__(&self) -> usize {
        self.inner.k_max()
    }
}

/// `{lower, upper, point, clamped, k_used}` for the connective constant.
#[pyfunction]
#[pyo3(signature = (table, k_min = 2, log_term = true))]
fn estimate_lambda_c<'py>(
    py: Python<'py>,
    table: &PyGammaTable,
    k_min: usize,
    log_term: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let b = g::estimate_lambda_c(&table.inner, g::LambdaFit { k_min, log_term }).or_raise()?;
    let d = PyDict::new(py);
    d.set_item("lower", b.lower)?;
    d.set_item("upper", b.upper)?;
    d.set_item("point", b.point_estimate)?;
    d.set_item("clamped", b.clamped)?;
    d.set_item("k_used", b.k_used)?;
    Ok(d)
}

/// Partial sums `S_K = Σ_{k<=K} λ^k Γ_k` with errors and increments.
#[pyfunction]
#[pyo3(signature = (table, lam, k_max = None))]
fn estimate_rho_c<'py>(
    py: Python<'py>,
    table: &PyGammaTable,
    lam: f64,
    k_max: Option<usize>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = g::estimate_rho_c(&table.inner, lam, k_max.unwrap_or(table.inner.k_max())).or_raise()?;
    let d = PyDict::new(py);
    d.set_item("partial_sums", r.partial_sums)?;
    d.set_item("std_errors", r.std_errors)?;
    d.set_item("increments", r.increments)?;
    d.set_item("increment_decay", r.increment_decay)?;
    Ok(d)
}

/// `(exponent, std_error)` of `λ^k Γ_k` against `k` on `k_lo..=k_hi`.
#[pyfunction]
fn fit_scaling_exponent(table: &PyGammaTable, lam: f64, k_lo: usize, k_hi: usize) -> PyResult<(f64, f64)> {
    let f = g::fit_scaling_exponent(&table.inner, lam, k_lo, k_hi).or_raise()?;
    Ok((f.exponent, f.std_error))
}

/// Weights `Γ_1..Γ_K` and `λ >= 1` for the variational problem.
#[pyclass(name = "Thermo", module = "srblab", frozen)]
struct PyThermo {
    inner: th::ThermoInput,
}

#[pymethods]
impl PyThermo {
    #[new]
    #[pyo3(signature = (gamma, lam = 1.0))]
    fn new(gamma: Vec<f64>, lam: f64) -> PyResult<Self> {
        Ok(PyThermo {
            inner: th::ThermoInput::new(gamma, lam).or_raise()?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (dim, k_max, beta = 1.0))]
    fn free_gas(dim: usize, k_max: usize, beta: f64) -> PyResult<Self> {
        Ok(PyThermo {
            inner: th::ThermoInput::free_gas(dim, beta, k_max).or_raise()?,
        })
    }

    #[staticmethod]
    fn from_table(table: &PyGammaTable, lam: f64) -> PyResult<Self> {
        Ok(PyThermo {
            inner: th::ThermoInput::from_table(&table.inner, lam).or_raise()?,
        })
    }

    fn critical_density(&self) -> f64 {
        self.inner.critical_density()
    }

    /// `(c, regime)` solving the tilt equation at density `rho`.
    #[pyo3(signature = (rho, tol = 1e-13))]
    fn solve_c(&self, rho: f64, tol: f64) -> PyResult<(f64, &'static str)> {
        let s = th::solve_c(rho, &self.inner, tol).or_raise()?;
        Ok((s.c, s.regime.as_str()))
    }

    #[pyo3(signature = (rho, tol = 1e-13))]
    fn minimizer(&self, rho: f64, tol: f64) -> PyResult<Vec<f64>> {
        Ok(th::minimizer_p_star(rho, &self.inner, tol).or_raise()?.0)
    }

    /// Closed-form and numerically minimized free energy.
    #[pyo3(signature = (rho, tol = 1e-13))]
    fn free_energy<'py>(&self, py: Python<'py>, rho: f64, tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let f = th::free_energy(rho, &self.inner, tol).or_raise()?;
        let d = PyDict::new(py);
        d.set_item("closed_form", f.closed_form)?;
        d.set_item("numeric", f.numeric)?;
        d.set_item("gap", f.gap)?;
        d.set_item("c", f.tilt.c)?;
        d.set_item("regime", f.tilt.regime.as_str())?;
        Ok(d)
    }

    /// Rows `(rho, c, f, mass, regime)`.
    #[pyo3(signature = (rhos, tol = 1e-13))]
    fn phase_diagram(&self, rhos: Vec<f64>, tol: f64) -> PyResult<Vec<(f64, f64, f64, f64, &'static str)>> {
        Ok(th::phase_diagram(&rhos, &self.inner, tol)
            .or_raise()?
            .into_iter()
            .map(|r| (r.rho, r.c, r.f, r.mass, r.regime.as_str()))
            .collect())
    }
}

/// Exact sampler of cycle counts with weights `θ_k`.
#[pyclass(name = "PartitionSampler", module = "srblab", frozen)]
struct PySampler {
    inner: ps::PartitionSampler,
}

#[pymethods]
impl PySampler {
    #[new]
    fn new(theta: Vec<f64>, n: usize) -> PyResult<Self> {
        Ok(PySampler {
            inner: ps::PartitionSampler::new(&theta, n).or_raise()?,
        })
    }

    /// Free-gas weights `θ_k = |Λ| (2πβk)^{-d/2}`.
    #[staticmethod]
    #[pyo3(signature = (dim, n, volume, beta = 1.0))]
    fn free_gas(dim: usize, n: usize, volume: f64, beta: f64) -> PyResult<Self> {
        let theta = ps::free_gas_weights(dim, beta, n, volume).or_raise()?;
        PySampler::new(theta, n)
    }

    fn removal_probability(&self, m: usize, k: usize) -> PyResult<f64> {
        if k == 0 || k > m || m > self.inner.n {
            return Err(PyValueError::new_err("need 1 <= k <= m <= n"));
        }
        Ok(self.inner.removal_probability(m, k))
    }

    /// Each sample as a dense list `[l_1, ..., l_n]`.
    fn sample(&self, py: Python<'_>, n_samples: usize, seed: u64) -> Vec<Vec<u32>> {
        py.detach(|| {
            self.inner
                .sample_many(n_samples, &RngSpec::new(seed))
                .iter()
                .map(|c| c.dense())
                .collect()
        })
    }
}

fn edges_of(edges: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    edges.into_iter().map(|(i, j)| if i < j { (i, j) } else { (j, i) }).collect()
}

/// Whether the graph on vertices `1..=n` with these edges has no breakpoint.
#[pyfunction]
fn is_irreducible(n: usize, edges: Vec<(usize, usize)>) -> PyResult<bool> {
    lc::is_irreducible(&lc::Graph::new(n, &edges_of(edges)).or_raise()?).or_raise()
}

/// Canonical lace of an irreducible graph, as an edge list.
#[pyfunction]
fn lace_of(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Vec<(usize, usize)>> {
    Ok(lc::lace_of(&lc::Graph::new(n, &edges_of(edges)).or_raise()?).or_raise()?.edges)
}

/// All laces on `n` vertices.
#[pyfunction]
fn enumerate_laces(n: usize) -> PyResult<Vec<Vec<(usize, usize)>>> {
    Ok(lc::enumerate_laces(n, lc::MATERIALIZE_CAP)
        .or_raise()?
        .into_iter()
        .map(|l| l.edges)
        .collect())
}

/// `(direct, resummed, discrepancy)` for a symmetric matrix given as rows.
#[pyfunction]
fn lace_identity_check(u: Vec<Vec<f64>>) -> PyResult<(f64, f64, f64)> {
    let n = u.len();
    if u.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("U must be square"));
    }
    let flat: Vec<f64> = u.into_iter().flatten().collect();
    let c = lc::lace_identity_check(n, &flat, lc::MATERIALIZE_CAP).or_raise()?;
    Ok((c.lhs, c.rhs, c.discrepancy))
}

/// `(graphs_checked, counterexamples)`; `flipped` uses the deliberately
/// wrong compatibility rule.
#[pyfunction]
#[pyo3(signature = (n, flipped = false))]
fn characterization_check(py: Python<'_>, n: usize, flipped: bool) -> PyResult<(u64, u64)> {
    let mode = if flipped { lc::Compatibility::Flipped } else { lc::Compatibility::Correct };
    let r = py.detach(|| lc::characterization_check(n, lc::DEFAULT_CAP, mode)).or_raise()?;
    Ok((r.graphs_checked, r.counterexamples + r.unknown_laces))
}

/// Rows `(N, Z_N, P_N, residual, residual_se)` of the renewal check.
#[pyfunction]
fn convolution_identity_check(
    py: Python<'_>,
    model: &PyModel,
    n_max: usize,
    samples: usize,
    seed: u64,
) -> PyResult<Vec<(usize, f64, f64, f64, f64)>> {
    let c = py
        .detach(|| pi::convolution_identity_check(&model.inner, n_max, samples, &RngSpec::new(seed)))
        .or_raise()?;
    Ok(c.rows.iter().map(|r| (r.n, r.z.mean, r.p.mean, r.residual, r.residual_se)).collect())
}

/// `(value, std_error)` of `u_n` at the given anchor points.
#[pyfunction]
fn estimate_u_n(
    py: Python<'_>,
    model: &PyModel,
    anchors: Vec<Vec<f64>>,
    samples: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let u = py
        .detach(|| pi::estimate_u_n(&model.inner, &anchors, samples, &RngSpec::new(seed)))
        .or_raise()?;
    Ok((u.value, u.std_error))
}

/// `∫(1+|x|)^{6-3d} dx`, the weight in the decay bound for irreducible sums.
#[pyfunction]
fn pi_weight_integral(dim: usize) -> PyResult<f64> {
    pi::pi_weight_integral(dim).or_raise()
}

/// `G(r) = Σ_n φ_n(r)` in dimension `dim`, with an estimate of the truncation error.
#[pyfunction]
#[pyo3(signature = (r, dim, tol = 1e-14))]
fn green_g(r: f64, dim: usize, tol: f64) -> PyResult<(f64, f64)> {
    let v = gl::green_g_radial(r, dim, tol).or_raise()?;
    Ok((v.value, v.error_estimate))
}

/// Rows `(r, G, leading, residual)`.
#[pyfunction]
#[pyo3(signature = (dim, radii, tol = 1e-16))]
fn green_asymptotics(dim: usize, radii: Vec<f64>, tol: f64) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    Ok(gl::green_asymptotics(dim, &radii, tol)
        .or_raise()?
        .into_iter()
        .map(|r| (r.r, r.g, r.leading, r.residual))
        .collect())
}

/// Function sampled on a symmetric cubic grid in dimension 1 to 3.
#[pyclass(name = "GridFn", module = "srblab", frozen)]
struct PyGridFn {
    inner: gl::GridFn,
}

#[pymethods]
impl PyGridFn {
    #[staticmethod]
    fn zeros(dim: usize, half_width: f64, spacing: f64) -> PyResult<Self> {
        Ok(PyGridFn {
            inner: gl::GridFn::zeros(dim, half_width, spacing).or_raise()?,
        })
    }

    /// Heat kernel at time `t` on this grid.
    fn heat_kernel(&self, t: f64) -> Self {
        PyGridFn {
            inner: gl::heat_kernel_grid(&self.inner, t),
        }
    }

    fn with_values(&self, values: Vec<f64>) -> PyResult<Self> {
        if values.len() != self.inner.values.len() {
            return Err(PyValueError::new_err(format!("expected {} values", self.inner.values.len())));
        }
        let mut inner = self.inner.clone();
        inner.values = values;
        inner.symmetric = false;
        Ok(PyGridFn { inner })
    }

    fn scale(&self, c: f64) -> Self {
        PyGridFn {
            inner: self.inner.scale(c),
        }
    }

    fn convolve(&self, py: Python<'_>, other: &PyGridFn) -> PyResult<Self> {
        let inner = py.detach(|| gl::convolve(&self.inner, &other.inner)).or_raise()?;
        Ok(PyGridFn { inner })
    }

    fn sub(&self, other: &PyGridFn) -> PyResult<Self> {
        Ok(PyGridFn {
            inner: self.inner.sub(&other.inner).or_raise()?,
        })
    }

    fn integral(&self) -> f64 {
        self.inner.integral()
    }

    fn l1(&self) -> f64 {
        self.inner.l1()
    }

    fn norm(&self) -> f64 {
        gl::banach_norm(&self.inner)
    }

    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    fn coords(&self, idx: usize) -> PyResult<Vec<f64>> {
        if idx >= self.inner.values.len() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.inner.coords(idx))
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyGridFn {
            inner: gl::GridFn::from_text(text).or_raise()?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.values.len()
    }
}

/// `G_μ = Σ μ^n φ_n` on the grid of `like`.
#[pyfunction]
#[pyo3(signature = (like, mu, tol = 1e-14))]
fn g_mu_grid(py: Python<'_>, like: &PyGridFn, mu: f64, tol: f64) -> PyResult<PyGridFn> {
    let inner = py.detach(|| gl::g_mu_grid(&like.inner, mu, tol)).or_raise()?;
    Ok(PyGridFn { inner })
}

/// `(G^Π, G^Γ)` for `Γ_N = a_N φ_N`.
#[pyfunction]
fn forward_construct(py: Python<'_>, like: &PyGridFn, a: Vec<f64>, lam: f64) -> PyResult<(PyGridFn, PyGridFn)> {
    let (p, q) = py.detach(|| gl::forward_construct(&like.inner, &a, lam)).or_raise()?;
    Ok((PyGridFn { inner: p }, PyGridFn { inner: q }))
}

/// Solve `S = G^Π + G^Π ⋆ S`; returns `S` and diagnostics.
#[pyfunction]
#[pyo3(signature = (g_pi, phi, tol = 1e-12))]
fn neumann_deconvolve<'py>(
    py: Python<'py>,
    g_pi: &PyGridFn,
    phi: &PyGridFn,
    tol: f64,
) -> PyResult<(PyGridFn, Bound<'py, PyDict>)> {
    let out = py.detach(|| gl::neumann_deconvolve(&g_pi.inner, &phi.inner, tol)).or_raise()?;
    let d = PyDict::new(py);
    d.set_item("mu", out.mu)?;
    d.set_item("a_norm", out.a_norm)?;
    d.set_item("terms", out.terms)?;
    d.set_item("tail_bound", out.tail_bound)?;
    d.set_item("residual", out.residual)?;
    Ok((PyGridFn { inner: out.s }, d))
}

#[pymodule]
#[pyo3(name = "srblab")]
fn srblab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", srblab::VERSION)?;
    m.add("SrblabError", m.py().get_type::<SrblabError>())?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyGammaTable>()?;
    m.add_class::<PyThermo>()?;
    m.add_class::<PySampler>()?;
    m.add_class::<PyGridFn>()?;
    m.add_function(wrap_pyfunction!(estimate_lambda_c, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_rho_c, m)?)?;
    m.add_function(wrap_pyfunction!(fit_scaling_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(is_irreducible, m)?)?;
    m.add_function(wrap_pyfunction!(lace_of, m)?)?;
    m.add_function(wrap_pyfunction!(enumerate_laces, m)?)?;
    m.add_function(wrap_pyfunction!(lace_identity_check, m)?)?;
    m.add_function(wrap_pyfunction!(characterization_check, m)?)?;
    m.add_function(wrap_pyfunction!(convolution_identity_check, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_u_n, m)?)?;
    m.add_function(wrap_pyfunction!(pi_weight_integral, m)?)?;
    m.add_function(wrap_pyfunction!(green_g, m)?)?;
    m.add_function(wrap_pyfunction!(green_asymptotics, m)?)?;
    m.add_function(wrap_pyfunction!(g_mu_grid, m)?)?;
    m.add_function(wrap_pyfunction!(forward_construct, m)?)?;
    m.add_function(wrap_pyfunction!(neumann_deconvolve, m)?)?;
    Ok(())
}
