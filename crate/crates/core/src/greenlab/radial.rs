//! Convolutions of radial functions in any dimension, reduced to a
//! (radius, angle) double integral:
//!
//! `(f ⋆ g)(s) = |S^{d-2}| ∫_0^∞ r^{d-1} f(r) ∫_0^π sin^{d-2}θ
//!  g(√(r² + s² - 2rs cos θ)) dθ dr`.

// Kronrod nodes and weights as published, to more digits than f64 holds.
#![allow(clippy::excessive_precision)]

use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::Arc;

use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss rule.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        k += WGK[i] * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

const MAX_PIECES: usize = 4000;

/// Globally adaptive Gauss–Kronrod on `[a, b]`: bisect the piece with the
/// largest error estimate until the total error is below
/// `max(abs_tol, rel_tol |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v, e) = gk15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value: v, err: e });
    let (mut total, mut err) = (v, e);
    while err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= MAX_PIECES {
            return Err(Error::NumericFailure {
                message: "adaptive quadrature did not converge".into(),
                state: format!("[{a}, {b}]: value {total}, error {err}, {} pieces", heap.len()),
            });
        }
        let p = heap.pop().unwrap();
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.err;
        heap.push(Piece { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Piece { a: m, b: p.b, value: v2, err: e2 });
    }
    // Re-add from the pieces to shed accumulated rounding.
    let total = heap.iter().map(|p| p.value).sum();
    let err = heap.iter().map(|p| p.err).sum();
    Ok((total, err))
}

/// `∫_a^∞ f` via `r = a + t/(1-t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, abs_tol: f64, rel_tol: f64) -> Result<(f64, f64)> {
    integrate(
        |t| {
            let u = 1.0 - t;
            f(a + t / u) / (u * u)
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}

/// A radial profile `r ↦ f(r)` in dimension `dim`.
#[derive(Clone)]
pub struct RadialFn {
    pub dim: usize,
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub nonnegative: bool,
}

impl std::fmt::Debug for RadialFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialFn")
            .field("dim", &self.dim)
            .field("nonnegative", &self.nonnegative)
            .finish_non_exhaustive()
    }
}

impl RadialFn {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(dim: usize, nonnegative: bool, profile: F) -> Self {
        RadialFn {
            dim,
            profile: Arc::new(profile),
            nonnegative,
        }
    }

    /// `(1 + r)^{-m}`.
    pub fn power_decay(dim: usize, m: f64) -> Self {
        RadialFn::new(dim, true, move |r| (1.0 + r).powf(-m))
    }

    /// `exp(-h r²)`.
    pub fn gaussian(dim: usize, h: f64) -> Self {
        RadialFn::new(dim, true, move |r| (-h * r * r).exp())
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.profile)(r)
    }
}

/// `|S^{k}| = 2 π^{(k+1)/2} / Γ((k+1)/2)`.
pub fn sphere_area(k: usize) -> f64 {
    let a = (k as f64 + 1.0) / 2.0;
    2.0 * PI.powf(a) / gamma(a)
}

/// `(f ⋆ g)(s)` for radial `f, g` in their common dimension.
pub fn radial_convolution(f: &RadialFn, g: &RadialFn, s: f64, rel_tol: f64) -> Result<f64> {
    if f.dim != g.dim || f.dim == 0 {
        return Err(invalid("radial functions must share a positive dimension"));
    }
    if !(s >= 0.0) {
        return Err(invalid("radius must be non-negative"));
    }
    let d = f.dim;
    let inner_tol = rel_tol * 1e-2;
    let failure: std::cell::Cell<Option<Error>> = std::cell::Cell::new(None);
    let shell = |r: f64| -> f64 {
        if d == 1 {
            return f.eval(r) * (g.eval((s - r).abs()) + g.eval(s + r));
        }
        let fr = f.eval(r);
        if fr == 0.0 {
            return 0.0;
        }
        let angular = if r == 0.0 || s == 0.0 {
            g.eval((r * r + s * s).sqrt()) * sphere_area(d - 1) / sphere_area(d - 2)
        } else {
            let p = (d - 2) as i32;
            match integrate(
                |th: f64| th.sin().powi(p) * g.eval((r * r + s * s - 2.0 * r * s * th.cos()).max(0.0).sqrt()),
                0.0,
                PI,
                1e-300,
                inner_tol,
            ) {
                Ok((v, _)) => v,
                Err(e) => {
                    failure.set(Some(e));
                    0.0
                }
            }
        };
        r.powi(d as i32 - 1) * fr * sphere_area(d - 2) * angular
    };
    let (a, _) = integrate(shell, 0.0, s, 1e-300, rel_tol)?;
    let (b, _) = integrate_to_infinity(shell, s, 1e-300, rel_tol)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(a + b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub sup: f64,
    pub inf: f64,
}

impl RatioReport {
    fn from(radii: &[f64], ratios: Vec<f64>) -> Self {
        RatioReport {
            radii: radii.to_vec(),
            sup: ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            inf: ratios.iter().cloned().fold(f64::INFINITY, f64::min),
            ratios,
        }
    }
}

/// `∫ (1+|x|)^{-m} e^{-h|y-x|²} dx / (1+|y|)^{-m}` at each `|y|`.
pub fn gauss_decay_ratios(dim: usize, m: f64, h: f64, radii: &[f64], rel_tol: f64) -> Result<RatioReport> {
    let f = RadialFn::power_decay(dim, m);
    let g = RadialFn::gaussian(dim, h);
    let ratios = radii
        .iter()
        .map(|&y| Ok(radial_convolution(&f, &g, y, rel_tol)? / f.eval(y)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioReport::from(radii, ratios))
}

/// `(F ⋆ F)(s) / F(s)` for `F = (1+r)^{-p}`.
pub fn self_convolution_ratios(dim: usize, p: f64, radii: &[f64], rel_tol: f64) -> Result<RatioReport> {
    let f = RadialFn::power_decay(dim, p);
    let ratios = radii
        .iter()
        .map(|&s| Ok(radial_convolution(&f, &f, s, rel_tol)? / f.eval(s)))
        .collect::<Result<Vec<_>>>()?;
    Ok(RatioReport::from(radii, ratios))
}

/// `∫ f_d(x-y)² e^{-A|y|²} dy / f_d(x)²` with `f_d = (1+r)^{2-d}`.
pub fn fd_gauss_ratios(dim: usize, a: f64, radii: &[f64], rel_tol: f64) -> Result<RatioReport> {
    gauss_decay_ratios(dim, 2.0 * dim as f64 - 4.0, a, radii, rel_tol)
}
