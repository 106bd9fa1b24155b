//! Pointwise Green functions `G(x) = Σ_{n>=1} φ_n(x)` and
//! `G_μ(x) = Σ_{n>=1} μ^n φ_n(x)`.

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::stats::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenValue {
    pub value: f64,
    /// Number of explicitly summed terms.
    pub n_terms: usize,
    /// Size of the first neglected correction in the tail; an estimate of
    /// the absolute error.
    pub error_estimate: f64,
}

#[inline]
fn phi_t(r2: f64, dim: usize, t: f64) -> f64 {
    crate::paths::heat_kernel_r2(r2, dim, t)
}

/// `∫_T^∞ φ_t(r) dt` via the lower incomplete gamma series in `r²/2T`.
fn tail_integral(r2: f64, dim: usize, t: f64) -> f64 {
    let a = dim as f64 / 2.0 - 1.0;
    let x = r2 / (2.0 * t);
    // γ(a, x) x^{-a} e^{x} = Σ x^k / (a (a+1) ... (a+k))
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut k = 1.0;
    while term > 1e-18 * sum {
        term *= x / (a + k);
        sum += term;
        k += 1.0;
    }
    (2.0 * PI).powf(-(dim as f64) / 2.0) * t.powf(-a) * (-x).exp() * sum
}

/// First and third `t`-derivatives of `φ_t(r)`.
fn phi_derivatives(r2: f64, dim: usize, t: f64) -> (f64, f64) {
    let a = dim as f64 / 2.0;
    let b = r2 / 2.0;
    let f = phi_t(r2, dim, t);
    let g1 = -a / t + b / (t * t);
    let g2 = a / (t * t) - 2.0 * b / t.powi(3);
    let g3 = -2.0 * a / t.powi(3) + 6.0 * b / t.powi(4);
    (f * g1, f * (g1.powi(3) + 3.0 * g1 * g2 + g3))
}

/// `Σ_{n>N} φ_n(r)` by the midpoint Euler–Maclaurin formula, with an error
/// estimate.
fn em_tail(r2: f64, dim: usize, n: usize) -> (f64, f64) {
    let t = n as f64 + 0.5;
    let (d1, d3) = phi_derivatives(r2, dim, t);
    let third = 7.0 / 5760.0 * d3;
    (tail_integral(r2, dim, t) + d1 / 24.0 - third, third.abs())
}

/// `G(x) = Σ_{n>=1} (2πn)^{-d/2} e^{-|x|²/2n}` for `d >= 3`, to absolute
/// accuracy about `tol`.
pub fn green_g(x: &[f64], tol: f64) -> Result<GreenValue> {
    let r2: f64 = x.iter().map(|c| c * c).sum();
    green_g_radial(r2.sqrt(), x.len(), tol)
}

pub fn green_g_radial(r: f64, dim: usize, tol: f64) -> Result<GreenValue> {
    if dim <= 2 {
        return Err(Error::Divergence(format!(
            "Σ_n φ_n diverges in dimension {dim}; need d >= 3"
        )));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let r2 = r * r;
    // Start past the maximum of n ↦ φ_n(r) so the tail is monotone and the
    // incomplete-gamma series argument stays small.
    let mut n = ((2.0 * r2 / dim as f64).ceil() as usize).max(16);
    let mut tail = em_tail(r2, dim, n);
    while tail.1 > tol {
        n *= 2;
        tail = em_tail(r2, dim, n);
    }
    let head = compensated_sum((1..=n).map(|k| phi_t(r2, dim, k as f64)));
    Ok(GreenValue {
        value: head + tail.0,
        n_terms: n,
        error_estimate: tail.1,
    })
}

/// `Γ(d/2 - 1) / (2 π^{d/2})`, the coefficient of `|x|^{2-d}` in the
/// large-`|x|` behaviour of `G`.
pub fn green_leading_coefficient(dim: usize) -> Result<f64> {
    if dim <= 2 {
        return Err(invalid("the |x|^{2-d} asymptotics needs d >= 3"));
    }
    let a = dim as f64 / 2.0;
    Ok(gamma(a - 1.0) / (2.0 * PI.powf(a)))
}

/// `G_μ(r) = Σ μ^n φ_n(r)` for `0 <= μ < 1` in any dimension; `μ = 1` is
/// delegated to [`green_g_radial`].
pub fn g_mu_radial(r: f64, mu: f64, dim: usize, tol: f64) -> Result<GreenValue> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(invalid(format!("μ must lie in [0, 1], got {mu}")));
    }
    if mu == 1.0 {
        return green_g_radial(r, dim, tol);
    }
    if mu == 0.0 {
        return Ok(GreenValue {
            value: 0.0,
            n_terms: 0,
            error_estimate: 0.0,
        });
    }
    let r2 = r * r;
    let mut terms = Vec::new();
    let mut weight = 1.0;
    let mut n = 0usize;
    loop {
        n += 1;
        weight *= mu;
        terms.push(weight * phi_t(r2, dim, n as f64));
        // Every later term is at most μ^m (2πn)^{-d/2}.
        let bound = weight * mu / (1.0 - mu) * phi_t(0.0, dim, n as f64);
        if bound < tol || n > 100_000_000 {
            return Ok(GreenValue {
                value: compensated_sum(terms),
                n_terms: n,
                error_estimate: bound,
            });
        }
    }
}

pub fn g_mu(x: &[f64], mu: f64, tol: f64) -> Result<GreenValue> {
    let r2: f64 = x.iter().map(|c| c * c).sum();
    g_mu_radial(r2.sqrt(), mu, x.len(), tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticRow {
    pub r: f64,
    pub g: f64,
    pub leading: f64,
    pub residual: f64,
}

/// `(r, G(r), a_d r^{2-d}, |G - a_d r^{2-d}|)` over the given radii.
pub fn green_asymptotics(dim: usize, radii: &[f64], tol: f64) -> Result<Vec<AsymptoticRow>> {
    let a = green_leading_coefficient(dim)?;
    radii
        .iter()
        .map(|&r| {
            let g = green_g_radial(r, dim, tol)?.value;
            let leading = a * r.powf(2.0 - dim as f64);
            Ok(AsymptoticRow {
                r,
                g,
                leading,
                residual: (g - leading).abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_dimensions_diverge() {
        assert!(matches!(green_g(&[1.0, 0.0], 1e-10), Err(Error::Divergence(_))));
    }

    #[test]
    fn tail_integral_matches_free_formula_at_origin() {
        let t = 50.0f64;
        let expect = (2.0 * PI).powf(-2.5) * t.powf(-1.5) / 1.5;
        assert!((tail_integral(0.0, 5, t) - expect).abs() < 1e-15 * expect);
    }

    #[test]
    fn five_dim_coefficient() {
        let a = green_leading_coefficient(5).unwrap();
        assert!((a - 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn symmetric_under_reflection_and_rotation() {
        let a = green_g(&[1.0, 2.0, -0.5], 1e-13).unwrap().value;
        let b = green_g(&[-1.0, -2.0, 0.5], 1e-13).unwrap().value;
        let c = green_g(&[0.5, -1.0, 2.0], 1e-13).unwrap().value;
        assert_eq!(a, b);
        assert!((a - c).abs() < 1e-15);
    }

    #[test]
    fn larger_truncation_barely_moves() {
        let tol = 1e-12;
        let v = green_g_radial(3.0, 5, tol).unwrap();
        let head = compensated_sum((1..=4 * v.n_terms).map(|k| phi_t(9.0, 5, k as f64)));
        let tail = em_tail(9.0, 5, 4 * v.n_terms).0;
        assert!((head + tail - v.value).abs() < tol);
    }

    #[test]
    fn g_mu_edge_cases() {
        assert_eq!(g_mu(&[0.3], 0.0, 1e-12).unwrap().value, 0.0);
        let lo = g_mu(&[0.3, 0.1], 0.3, 1e-14).unwrap().value;
        let hi = g_mu(&[0.3, 0.1], 0.6, 1e-14).unwrap().value;
        assert!(lo < hi);
        assert!(g_mu(&[0.0], 1.5, 1e-12).is_err());
    }
}
