//! Solve `S = G^Π + G^Π ⋆ S` on a grid by a Neumann series around the
//! geometric heat-kernel sum `G_μ`, with `μ = ∫ G^Π`.
//!
//! Writing `ρ = μφ - G^Π` and `A = ρ ⋆ G_μ + ρ`, one has
//! `δ - G^Π = (δ - μφ) ⋆ (δ + A)`, hence
//! `δ + S = (δ + Q) ⋆ (δ + G_μ)` with `Q = Σ_{n>=1} (-A)^{⋆n}`.
//! The delta function never appears on the grid; it is carried by the
//! algebra above.

use crate::error::{invalid, Error, Result};
use crate::greenlab::green::g_mu_radial;
use crate::greenlab::grid::{banach_norm, convolve, GridFn};
use crate::paths::heat_kernel_r2;

/// `G_μ = Σ_{n>=1} μ^n φ_n` sampled on the grid of `like`.
pub fn g_mu_grid(like: &GridFn, mu: f64, tol: f64) -> Result<GridFn> {
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::Divergence(format!(
            "the geometric heat-kernel sum needs 0 <= μ < 1 on a grid, got {mu}"
        )));
    }
    let mut out = like.clone();
    let mut x = vec![0.0; like.dim];
    for idx in 0..out.values.len() {
        like.coords_into(idx, &mut x);
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        out.values[idx] = g_mu_radial(r, mu, like.dim, tol)?.value;
    }
    out.symmetric = true;
    Ok(out)
}

/// Heat kernel `φ_t` on the grid of `like`.
pub fn heat_kernel_grid(like: &GridFn, t: f64) -> GridFn {
    let mut out = like.clone();
    let mut x = vec![0.0; like.dim];
    for idx in 0..out.values.len() {
        like.coords_into(idx, &mut x);
        out.values[idx] = heat_kernel_r2(x.iter().map(|c| c * c).sum(), like.dim, t);
    }
    out.symmetric = true;
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deconvolution {
    pub s: GridFn,
    pub mu: f64,
    /// `∫ρ`; zero up to rounding when `∫φ = 1` on the grid.
    pub rho_integral: f64,
    pub a_norm: f64,
    pub a_l1: f64,
    pub terms: usize,
    /// Geometric bound on the neglected part of the series in L¹.
    pub tail_bound: f64,
    /// `‖S - G^Π - G^Π ⋆ S‖₁`.
    pub residual: f64,
}

const MAX_TERMS: usize = 10_000;

pub fn neumann_deconvolve(g_pi: &GridFn, phi: &GridFn, tol: f64) -> Result<Deconvolution> {
    if !g_pi.same_grid(phi) {
        return Err(invalid("G^Π and φ must share a grid"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tolerance must be positive"));
    }
    let mu = g_pi.integral();
    if mu >= 1.0 {
        return Err(Error::Supercritical { mu });
    }
    if mu < 0.0 {
        return Err(invalid(format!("∫G^Π = {mu} is negative")));
    }
    let g_mu = g_mu_grid(g_pi, mu, tol * 1e-3)?;
    let rho = phi.combine(mu, g_pi, -1.0)?;
    let a = convolve(&rho, &g_mu)?.add(&rho)?;
    let a_norm = banach_norm(&a);
    if a_norm >= 1.0 {
        return Err(Error::SeriesDivergence { norm: a_norm });
    }
    let a_l1 = a.l1();
    let mut q = GridFn {
        values: vec![0.0; a.values.len()],
        ..a.clone()
    };
    let mut term = a.scale(-1.0);
    let mut terms = 0;
    let mut tail_bound;
    loop {
        q = q.add(&term)?;
        terms += 1;
        let norm = term.l1();
        tail_bound = if a_l1 < 1.0 { norm * a_l1 / (1.0 - a_l1) } else { f64::INFINITY };
        if tail_bound < tol || norm == 0.0 {
            break;
        }
        if terms >= MAX_TERMS {
            return Err(Error::NumericFailure {
                message: "Neumann series did not reach the tolerance".into(),
                state: format!("{terms} terms, last term L1 {norm}, |A|_1 = {a_l1}"),
            });
        }
        term = convolve(&term, &a)?.scale(-1.0);
    }
    let s = q.add(&g_mu)?.add(&convolve(&q, &g_mu)?)?;
    let check = s.sub(g_pi)?.sub(&convolve(g_pi, &s)?)?;
    Ok(Deconvolution {
        rho_integral: rho.integral(),
        residual: check.l1(),
        s,
        mu,
        a_norm,
        a_l1,
        terms,
        tail_bound,
    })
}

/// Coefficients `π_N` of the irreducible sequence when `Γ_N = a_N φ_N`:
/// `π_N = a_N - Σ_{k<N} π_k a_{N-k}`, `a_1` taken as given.
pub fn synthetic_pi_coefficients(a: &[f64]) -> Vec<f64> {
    let mut pi = Vec::with_capacity(a.len());
    for n in 0..a.len() {
        let s: f64 = (0..n).map(|k| pi[k] * a[n - 1 - k]).sum();
        pi.push(a[n] - s);
    }
    pi
}

/// Build `Π_N` for `Γ_N = a_N φ_N` on the grid by the forward recursion
/// `Π_N = Γ_N - Σ_{k<N} Π_k ⋆ Γ_{N-k}` using grid convolutions, and return
/// `(G^Π, G^Γ) = (Σ λ^N Π_N, Σ λ^N Γ_N)`.
pub fn forward_construct(like: &GridFn, a: &[f64], lambda: f64) -> Result<(GridFn, GridFn)> {
    let gammas: Vec<GridFn> = (1..=a.len())
        .map(|n| heat_kernel_grid(like, n as f64).scale(a[n - 1]))
        .collect();
    let mut pis: Vec<GridFn> = Vec::with_capacity(a.len());
    for n in 0..a.len() {
        let mut p = gammas[n].clone();
        for k in 0..n {
            p = p.sub(&convolve(&pis[k], &gammas[n - 1 - k])?)?;
        }
        pis.push(p);
    }
    let zero = GridFn {
        values: vec![0.0; like.values.len()],
        ..like.clone()
    };
    let mut g_pi = zero.clone();
    let mut g_gamma = zero;
    let mut w = 1.0;
    for (p, g) in pis.iter().zip(&gammas) {
        w *= lambda;
        g_pi = g_pi.combine(1.0, p, w)?;
        g_gamma = g_gamma.combine(1.0, g, w)?;
    }
    Ok((g_pi, g_gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn supercritical_input_rejected() {
        let like = GridFn::zeros(1, 8.0, 0.05).unwrap();
        let phi = heat_kernel_grid(&like, 1.0);
        assert!(matches!(neumann_deconvolve(&phi.scale(1.2), &phi, 1e-10), Err(Error::Supercritical { .. })));
        assert!(matches!(g_mu_grid(&like, 1.0, 1e-10), Err(Error::Divergence(_))));
    }

    #[test]
    fn pure_gaussian_input_needs_no_series() {
        let like = GridFn::zeros(1, 20.0, 0.05).unwrap();
        let phi = heat_kernel_grid(&like, 1.0);
        let out = neumann_deconvolve(&phi.scale(0.4), &phi, 1e-12).unwrap();
        assert!(out.rho_integral.abs() < 1e-12);
        assert!(out.residual < 1e-8, "{out:?}");
    }

    #[test]
    fn scalar_recursion_inverts_geometric_sequence() {
        // Σ a_N z^N = z/(1-qz) gives Σ π_N z^N = z/(1-(q-1)z).
        let q = 0.5f64;
        let a: Vec<f64> = (0..8).map(|n| q.powi(n)).collect();
        for (n, p) in synthetic_pi_coefficients(&a).iter().enumerate() {
            assert!((p - (q - 1.0).powi(n as i32)).abs() < 1e-14);
        }
    }
}
