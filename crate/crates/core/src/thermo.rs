//! The cycle-density variational problem: rate functions, the tilt `c(ρ)`,
//! the minimizer `p*`, the free energy and its condensation transition.
//!
//! All sums run over `k = 1..=K` where `K` is the length of the weight
//! table; terms `λ^k Γ_k e^{-ck}` are evaluated as exponentials of their
//! logarithms so large `K` does not overflow.

use crate::error::{invalid, Error, Result};
use crate::gamma::GammaTable;
use crate::stats::compensated_sum;

#[derive(Debug, Clone, PartialEq)]
pub struct ThermoInput {
    /// `Γ_1..Γ_K`, all positive.
    pub gamma: Vec<f64>,
    pub lambda: f64,
}

impl ThermoInput {
    pub fn new(gamma: Vec<f64>, lambda: f64) -> Result<Self> {
        if gamma.is_empty() {
            return Err(invalid("need at least one weight"));
        }
        if let Some((k, g)) = gamma.iter().enumerate().find(|(_, g)| !(g.is_finite() && **g > 0.0)) {
            return Err(invalid(format!("Γ_{} = {g} must be positive", k + 1)));
        }
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(invalid(format!("λ must be >= 1, got {lambda}")));
        }
        Ok(ThermoInput { gamma, lambda })
    }

    pub fn from_table(table: &GammaTable, lambda: f64) -> Result<Self> {
        ThermoInput::new(table.values(), lambda)
    }

    /// Closed-form free-gas weights `(2πβk)^{-d/2}`, `λ = 1`.
    pub fn free_gas(dim: usize, beta: f64, k_max: usize) -> Result<Self> {
        ThermoInput::new(GammaTable::free_gas(dim, beta, k_max)?.values(), 1.0)
    }

    pub fn k_max(&self) -> usize {
        self.gamma.len()
    }

    /// `log(λ^k Γ_k)` for each `k`.
    fn log_terms(&self) -> Vec<f64> {
        let ll = self.lambda.ln();
        self.gamma
            .iter()
            .enumerate()
            .map(|(i, g)| (i + 1) as f64 * ll + g.ln())
            .collect()
    }

    /// `Σ_k λ^k Γ_k e^{-ck}`.
    pub fn density_at(&self, c: f64) -> f64 {
        compensated_sum(
            self.log_terms()
                .iter()
                .enumerate()
                .map(|(i, t)| (t - c * (i + 1) as f64).exp()),
        )
    }

    /// Truncated critical density `Σ_{k<=K} λ^k Γ_k`.
    pub fn critical_density(&self) -> f64 {
        self.density_at(0.0)
    }

    /// `p_k = λ^k Γ_k e^{-ck} / k`.
    pub fn tilted_density(&self, c: f64) -> Vec<f64> {
        self.log_terms()
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let k = (i + 1) as f64;
                (t - c * k).exp() / k
            })
            .collect()
    }
}

/// Upper bound on `Σ_{k>K} (2πβk)^{-d/2}`, the free-gas truncation error of
/// the critical density; infinite for `d <= 2`.
pub fn free_gas_tail_bound(dim: usize, beta: f64, k_max: usize) -> f64 {
    let a = dim as f64 / 2.0;
    if a <= 1.0 {
        return f64::INFINITY;
    }
    (2.0 * std::f64::consts::PI * beta).powf(-a) * (k_max as f64).powf(1.0 - a) / (a - 1.0)
}

fn check_p(p: &[f64], input: &ThermoInput) -> Result<()> {
    if p.len() > input.k_max() {
        return Err(invalid("density vector longer than the weight table"));
    }
    if p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(invalid("cycle densities must be finite and non-negative"));
    }
    Ok(())
}

/// `I(p) = Σ_k p_k log(p_k k / (Γ_k e))`, with `0 log 0 = 0`.
pub fn rate_i(p: &[f64], gamma: &[f64]) -> Result<f64> {
    if let Some(g) = gamma.iter().find(|g| !(**g > 0.0)) {
        return Err(invalid(format!("weights must be positive, found {g}")));
    }
    if p.len() > gamma.len() {
        return Err(invalid("density vector longer than the weight table"));
    }
    if p.iter().any(|x| !(*x >= 0.0)) {
        return Err(invalid("cycle densities must be non-negative"));
    }
    Ok(compensated_sum(p.iter().zip(gamma).enumerate().map(|(i, (&pk, &g))| {
        if pk == 0.0 {
            0.0
        } else {
            pk * ((pk * (i + 1) as f64 / g).ln() - 1.0)
        }
    })))
}

/// `Σ_k k p_k`.
pub fn mass(p: &[f64]) -> f64 {
    compensated_sum(p.iter().enumerate().map(|(i, x)| (i + 1) as f64 * x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Subcritical,
    /// `ρ` exceeds the truncated critical density.
    Condensate,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Subcritical => "subcritical",
            Regime::Condensate => "condensate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltSolution {
    pub c: f64,
    pub regime: Regime,
    /// `Σ λ^k Γ_k e^{-ck} - min(ρ, ρ_c)`.
    pub residual: f64,
    pub iterations: usize,
}

const MAX_BISECTIONS: usize = 4000;

/// Solve `Σ λ^k Γ_k e^{-ck} = ρ` for `c >= 0` by bisection, stopping when
/// the residual in `ρ` is below `tol`.
pub fn solve_c(rho: f64, input: &ThermoInput, tol: f64) -> Result<TiltSolution> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid(format!("density must be positive, got {rho}")));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let rho_c = input.critical_density();
    if rho >= rho_c {
        return Ok(TiltSolution {
            c: 0.0,
            regime: if rho > rho_c { Regime::Condensate } else { Regime::Subcritical },
            residual: 0.0,
            iterations: 0,
        });
    }
    let f = |c: f64| input.density_at(c) - rho;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut iterations = 0;
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
        if !hi.is_finite() {
            return Err(Error::NumericFailure {
                message: "could not bracket the tilt parameter".into(),
                state: format!("rho = {rho}, last bracket [{lo}, {hi}]"),
            });
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let r = f(mid);
        iterations += 1;
        if r.abs() < tol {
            return Ok(TiltSolution {
                c: mid,
                regime: Regime::Subcritical,
                residual: r,
                iterations,
            });
        }
        if mid <= lo || mid >= hi || iterations > MAX_BISECTIONS {
            return Err(Error::NumericFailure {
                message: "bisection stalled before reaching the tolerance".into(),
                state: format!("bracket [{lo}, {hi}], residual {r}, tol {tol}"),
            });
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

/// `p*_k = λ^k Γ_k e^{-c(ρ)k} / k` (with `c = 0` in the condensate regime).
pub fn minimizer_p_star(rho: f64, input: &ThermoInput, tol: f64) -> Result<(Vec<f64>, TiltSolution)> {
    let sol = solve_c(rho, input, tol)?;
    Ok((input.tilted_density(sol.c), sol))
}

/// `J(p) = I(p) + (ρ - Σ k p_k) log λ - f`, defined for `Σ k p_k <= ρ`.
pub fn rate_j(p: &[f64], rho: f64, input: &ThermoInput, f_value: f64) -> Result<f64> {
    check_p(p, input)?;
    let m = mass(p);
    if m > rho * (1.0 + 1e-10) {
        return Err(invalid(format!("Σ k p_k = {m} exceeds ρ = {rho}")));
    }
    Ok(objective(p, rho, input)? - f_value)
}

/// `I(p) + (ρ - Σ k p_k) log λ`.
pub fn objective(p: &[f64], rho: f64, input: &ThermoInput) -> Result<f64> {
    Ok(rate_i(p, &input.gamma)? + (rho - mass(p)) * input.lambda.ln())
}

/// Closed-form free energy in both regimes.
pub fn free_energy_closed_form(rho: f64, input: &ThermoInput, tol: f64) -> Result<(f64, TiltSolution)> {
    let sol = solve_c(rho, input, tol)?;
    let tail = compensated_sum(input.tilted_density(sol.c));
    let ll = input.lambda.ln();
    let f = match sol.regime {
        Regime::Subcritical => rho * ll - (rho * sol.c + tail),
        Regime::Condensate => rho * ll - tail,
    };
    Ok((f, sol))
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericMinimum {
    pub value: f64,
    pub p: Vec<f64>,
    /// Constraint multiplier `ν >= 0` at the optimum.
    pub multiplier: f64,
    /// Lagrangian dual value; `value - dual` bounds the suboptimality.
    pub dual: f64,
    pub iterations: usize,
}

/// Minimize `I(p) + (ρ - Σ k p_k) log λ` over `p >= 0, Σ k p_k <= ρ`.
///
/// For a fixed multiplier `ν` on the mass constraint the Lagrangian
/// separates over `k` and each coordinate minimizes exactly at
/// `p_k = Γ_k λ^k e^{-νk}/k`. The multiplier is found by projected Newton
/// steps on the dual derivative; Newton iterates approach the root from
/// below because the mass is convex and decreasing in `ν`.
pub fn minimize_numeric(rho: f64, input: &ThermoInput, tol: f64) -> Result<NumericMinimum> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(invalid(format!("density must be positive, got {rho}")));
    }
    let coords = |nu: f64| input.tilted_density(nu);
    let excess = |p: &[f64]| mass(p) - rho;
    let mut nu = 0.0f64;
    let mut p = coords(nu);
    let mut iterations = 0;
    if excess(&p) > 0.0 {
        loop {
            let g = excess(&p);
            let slope = -compensated_sum(p.iter().enumerate().map(|(i, x)| ((i + 1) as f64).powi(2) * x));
            let step = g / slope;
            nu = (nu - step).max(0.0);
            p = coords(nu);
            iterations += 1;
            if excess(&p).abs() <= tol * rho.max(1.0) || step.abs() <= 1e-15 * nu.max(1e-300) {
                break;
            }
            if iterations > 500 || !nu.is_finite() {
                return Err(Error::NumericFailure {
                    message: "multiplier iteration did not converge".into(),
                    state: format!("nu = {nu}, excess = {}, p[..3] = {:?}", excess(&p), &p[..p.len().min(3)]),
                });
            }
        }
    }
    let value = objective(&p, rho, input)?;
    // Dual: L(p(ν), ν) = objective + ν (Σ k p_k - ρ).
    let dual = value + nu * excess(&p);
    Ok(NumericMinimum {
        value,
        p,
        multiplier: nu,
        dual,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeEnergy {
    pub closed_form: f64,
    pub numeric: f64,
    pub gap: f64,
    pub tilt: TiltSolution,
}

pub fn free_energy(rho: f64, input: &ThermoInput, tol: f64) -> Result<FreeEnergy> {
    let (closed_form, tilt) = free_energy_closed_form(rho, input, tol)?;
    let numeric = minimize_numeric(rho, input, tol)?.value;
    Ok(FreeEnergy {
        closed_form,
        numeric,
        gap: (closed_form - numeric).abs(),
        tilt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRow {
    pub rho: f64,
    pub c: f64,
    pub f: f64,
    pub mass: f64,
    pub regime: Regime,
}

/// Sweep `ρ` through the transition.
pub fn phase_diagram(rhos: &[f64], input: &ThermoInput, tol: f64) -> Result<Vec<PhaseRow>> {
    if rhos.is_empty() {
        return Err(invalid("empty density grid"));
    }
    rhos.iter()
        .map(|&rho| {
            let (f, tilt) = free_energy_closed_form(rho, input, tol)?;
            Ok(PhaseRow {
                rho,
                c: tilt.c,
                f,
                mass: mass(&input.tilted_density(tilt.c)),
                regime: tilt.regime,
            })
        })
        .collect()
}

pub fn phase_rows_csv(rows: &[PhaseRow]) -> String {
    let mut s = String::from("rho,c,f,mass,regime\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.rho, r.c, r.f, r.mass, r.regime.as_str()));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gas() -> ThermoInput {
        ThermoInput::free_gas(5, 1.0, 400).unwrap()
    }

    #[test]
    fn rate_i_examples() {
        let g = gas();
        assert_eq!(rate_i(&[0.0; 5], &g.gamma).unwrap(), 0.0);
        let p: Vec<f64> = g.gamma.iter().enumerate().map(|(i, x)| x / (i + 1) as f64).collect();
        let expect = -compensated_sum(p.iter().copied());
        assert!((rate_i(&p, &g.gamma).unwrap() - expect).abs() < 1e-14);
        assert!(rate_i(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn tilt_at_critical_density_is_zero() {
        let g = gas();
        let s = solve_c(g.critical_density(), &g, 1e-12).unwrap();
        assert_eq!(s.c, 0.0);
        let half = solve_c(g.critical_density() / 2.0, &g, 1e-12).unwrap();
        assert!(half.c > 0.0 && half.residual.abs() < 1e-12);
        let above = solve_c(2.0 * g.critical_density(), &g, 1e-12).unwrap();
        assert_eq!(above.regime, Regime::Condensate);
    }

    #[test]
    fn closed_and_numeric_agree() {
        let g = gas();
        for scale in [0.1, 0.5, 0.99, 1.5, 3.0] {
            let fe = free_energy(scale * g.critical_density(), &g, 1e-13).unwrap();
            assert!(fe.gap < 1e-9, "scale {scale}: {fe:?}");
        }
    }

    #[test]
    fn small_density_limit() {
        let (f, _) = free_energy_closed_form(1e-6, &gas(), 1e-15).unwrap();
        assert!(f.abs() < 1e-4);
    }

    #[test]
    fn j_rejects_infeasible() {
        let g = gas();
        assert!(rate_j(&[1.0], 0.5, &g, 0.0).is_err());
        assert!(phase_diagram(&[], &g, 1e-12).is_err());
    }
}
