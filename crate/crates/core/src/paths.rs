//! Discretized Brownian paths, the leg-pair interaction and the Hamiltonian.
//!
//! A path of `k` legs with `M` steps per leg is stored as one flat array of
//! `k*M + 1` points; leg `i` is the window `[i*M, (i+1)*M]`, so adjacent
//! legs share their junction point by construction.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `height` on `[0, R]`, zero beyond.
    StepBall,
    /// `height * exp(1 - 1/(1 - (r/R)^2))` on `[0, R)`; continuous.
    SmoothBump,
    /// Piecewise-linear interpolation of `(radii, values)`, zero past the
    /// last radius.
    Table { radii: Vec<f64>, values: Vec<f64> },
}

/// Pair interaction `v(r) >= 0`, bounded by `strength` and supported in
/// `[0, range]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairPotential {
    pub kind: PotentialKind,
    pub strength: f64,
    pub range: f64,
}

impl PairPotential {
    pub fn step_ball(height: f64, range: f64) -> Result<Self> {
        check_height_range(height, range)?;
        Ok(PairPotential {
            kind: PotentialKind::StepBall,
            strength: height,
            range,
        })
    }

    pub fn smooth_bump(height: f64, range: f64) -> Result<Self> {
        check_height_range(height, range)?;
        Ok(PairPotential {
            kind: PotentialKind::SmoothBump,
            strength: height,
            range,
        })
    }

    pub fn table(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(invalid("table potential needs >= 2 matching radii/values"));
        }
        if radii[0] != 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("table radii must start at 0 and increase strictly"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("table values must be finite and non-negative"));
        }
        let strength = values.iter().cloned().fold(0.0, f64::max);
        let range = *radii.last().unwrap();
        Ok(PairPotential {
            kind: PotentialKind::Table { radii, values },
            strength,
            range,
        })
    }

    /// `v ≡ 0`.
    pub fn zero() -> Self {
        PairPotential {
            kind: PotentialKind::StepBall,
            strength: 0.0,
            range: 0.0,
        }
    }

    pub fn is_continuous(&self) -> bool {
        match &self.kind {
            PotentialKind::StepBall => self.strength == 0.0,
            PotentialKind::SmoothBump => true,
            PotentialKind::Table { values, .. } => *values.last().unwrap() == 0.0,
        }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        if r > self.range {
            return 0.0;
        }
        match &self.kind {
            PotentialKind::StepBall => self.strength,
            PotentialKind::SmoothBump => {
                let q = r / self.range;
                if q >= 1.0 {
                    0.0
                } else {
                    self.strength * (1.0 - 1.0 / (1.0 - q * q)).exp()
                }
            }
            PotentialKind::Table { radii, values } => {
                let i = radii.partition_point(|&x| x <= r);
                if i >= radii.len() {
                    return *values.last().unwrap();
                }
                let (r0, r1) = (radii[i - 1], radii[i]);
                let w = (r - r0) / (r1 - r0);
                values[i - 1] * (1.0 - w) + values[i] * w
            }
        }
    }

    /// Short human-readable tag for metadata headers.
    pub fn describe(&self) -> String {
        let name = match self.kind {
            PotentialKind::StepBall => "step-ball",
            PotentialKind::SmoothBump => "smooth-bump",
            PotentialKind::Table { .. } => "table",
        };
        format!(
            "{name}(L={}, R={}, continuous={})",
            self.strength,
            self.range,
            self.is_continuous()
        )
    }
}

fn check_height_range(height: f64, range: f64) -> Result<()> {
    if !(height.is_finite() && height >= 0.0) {
        return Err(invalid(format!("potential height must be >= 0, got {height}")));
    }
    if !(range.is_finite() && range > 0.0) {
        return Err(invalid(format!("potential range must be > 0, got {range}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    #[default]
    Trapezoid,
    /// Composite Simpson; needs an even number of steps.
    Simpson,
}

/// One unit leg: `M + 1` points in `d` dimensions over duration `beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct Leg {
    pub dim: usize,
    pub beta: f64,
    pub points: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct LegView<'a> {
    pub dim: usize,
    pub beta: f64,
    pub points: &'a [f64],
}

impl Leg {
    pub fn new(dim: usize, beta: f64, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || !points.len().is_multiple_of(dim) || points.len() / dim < 2 {
            return Err(invalid("a leg needs at least two points of matching dimension"));
        }
        if !(beta > 0.0) {
            return Err(invalid("leg duration must be positive"));
        }
        Ok(Leg { dim, beta, points })
    }

    pub fn steps(&self) -> usize {
        self.points.len() / self.dim - 1
    }

    pub fn view(&self) -> LegView<'_> {
        LegView {
            dim: self.dim,
            beta: self.beta,
            points: &self.points,
        }
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }
}

impl LegView<'_> {
    pub fn steps(&self) -> usize {
        self.points.len() / self.dim - 1
    }

    pub fn to_leg(&self) -> Leg {
        Leg {
            dim: self.dim,
            beta: self.beta,
            points: self.points.to_vec(),
        }
    }
}

/// `k` consecutive legs of a discretized path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub dim: usize,
    pub beta: f64,
    pub steps_per_leg: usize,
    pub points: Vec<f64>,
}

impl PathConfig {
    pub fn n_legs(&self) -> usize {
        (self.points.len() / self.dim - 1) / self.steps_per_leg
    }

    pub fn leg(&self, i: usize) -> LegView<'_> {
        let (d, m) = (self.dim, self.steps_per_leg);
        LegView {
            dim: d,
            beta: self.beta,
            points: &self.points[i * m * d..((i + 1) * m + 1) * d],
        }
    }

    pub fn legs(&self) -> impl Iterator<Item = LegView<'_>> {
        (0..self.n_legs()).map(move |i| self.leg(i))
    }

    pub fn endpoint(&self) -> &[f64] {
        &self.points[self.points.len() - self.dim..]
    }

    /// Glue legs into a path; adjacent legs must share their junction point
    /// exactly.
    pub fn from_legs(legs: &[Leg]) -> Result<Self> {
        let first = legs.first().ok_or_else(|| invalid("a path needs >= 1 leg"))?;
        let (dim, beta, m) = (first.dim, first.beta, first.steps());
        let mut points = first.points.clone();
        for leg in &legs[1..] {
            if leg.dim != dim || leg.steps() != m || leg.beta != beta {
                return Err(invalid("legs must share dimension, step count and duration"));
            }
            if leg.point(0) != &points[points.len() - dim..] {
                return Err(invalid("adjacent legs must share their junction point"));
            }
            points.extend_from_slice(&leg.points[dim..]);
        }
        Ok(PathConfig {
            dim,
            beta,
            steps_per_leg: m,
            points,
        })
    }

    pub fn translate(&mut self, shift: &[f64]) {
        for p in self.points.chunks_exact_mut(self.dim) {
            for (x, s) in p.iter_mut().zip(shift) {
                *x += s;
            }
        }
    }
}

/// Everything a path-space Monte Carlo run needs besides the RNG.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub dim: usize,
    pub beta: f64,
    pub alpha: f64,
    pub potential: PairPotential,
    pub steps_per_leg: usize,
    pub quadrature: Quadrature,
}

impl Model {
    pub fn new(dim: usize, alpha: f64, potential: PairPotential) -> Self {
        Model {
            dim,
            beta: 1.0,
            alpha,
            potential,
            steps_per_leg: 32,
            quadrature: Quadrature::Trapezoid,
        }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        Model { beta, ..self }
    }

    pub fn with_steps(self, steps_per_leg: usize) -> Self {
        Model {
            steps_per_leg,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.dim)?;
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(invalid(format!("coupling must be >= 0, got {}", self.alpha)));
        }
        if self.steps_per_leg == 0 {
            return Err(invalid("need at least one step per leg"));
        }
        if self.quadrature == Quadrature::Simpson && !self.steps_per_leg.is_multiple_of(2) {
            return Err(invalid("Simpson quadrature needs an even step count"));
        }
        Ok(())
    }

    /// True when every weight `exp(-αH)` is identically one.
    pub fn is_free(&self) -> bool {
        self.alpha == 0.0 || self.potential.strength == 0.0
    }
}

/// Quadrature of `∫_0^β v(|f(s) - g(s)|) ds` on the shared grid.
pub fn interaction_v(
    f: LegView<'_>,
    g: LegView<'_>,
    v: &PairPotential,
    rule: Quadrature,
) -> Result<f64> {
    if f.dim != g.dim || f.points.len() != g.points.len() || f.beta != g.beta {
        return Err(invalid("legs must share grid, dimension and duration"));
    }
    if rule == Quadrature::Simpson && !f.steps().is_multiple_of(2) {
        return Err(invalid("Simpson quadrature needs an even step count"));
    }
    Ok(leg_pair_energy(f.points, g.points, f.dim, f.beta, v, rule))
}

#[inline]
pub(crate) fn leg_pair_energy(
    a: &[f64],
    b: &[f64],
    dim: usize,
    beta: f64,
    v: &PairPotential,
    rule: Quadrature,
) -> f64 {
    let n = a.len() / dim;
    let m = n - 1;
    let dt = beta / m as f64;
    let r2max = v.range * v.range;
    let mut acc = 0.0;
    for j in 0..n {
        let (pa, pb) = (&a[j * dim..(j + 1) * dim], &b[j * dim..(j + 1) * dim]);
        let r2: f64 = pa.iter().zip(pb).map(|(x, y)| (x - y) * (x - y)).sum();
        if r2 > r2max {
            continue;
        }
        let w = match rule {
            Quadrature::Trapezoid => {
                if j == 0 || j == m {
                    0.5
                } else {
                    1.0
                }
            }
            Quadrature::Simpson => {
                if j == 0 || j == m {
                    1.0 / 3.0
                } else if j % 2 == 1 {
                    4.0 / 3.0
                } else {
                    2.0 / 3.0
                }
            }
        };
        acc += w * v.eval(r2.sqrt());
    }
    acc * dt
}

fn bbox(points: &[f64], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in points.chunks_exact(dim) {
        for c in 0..dim {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    (lo, hi)
}

fn boxes_separated(a: &(Vec<f64>, Vec<f64>), b: &(Vec<f64>, Vec<f64>), range: f64) -> bool {
    a.0.iter()
        .zip(&a.1)
        .zip(b.0.iter().zip(&b.1))
        .any(|((alo, ahi), (blo, bhi))| blo - ahi > range || alo - bhi > range)
}

/// Matrix of leg-pair energies `V(B_i, B_j)` (row-major `k x k`, zero
/// diagonal). Pairs whose bounding boxes are further apart than the
/// potential range are skipped; that is exact since `v` vanishes there.
pub fn pair_interactions(path: &PathConfig, v: &PairPotential, rule: Quadrature) -> Vec<f64> {
    let k = path.n_legs();
    let mut out = vec![0.0; k * k];
    if v.strength == 0.0 {
        return out;
    }
    let boxes: Vec<_> = path.legs().map(|l| bbox(l.points, path.dim)).collect();
    for i in 0..k {
        for j in i + 1..k {
            if boxes_separated(&boxes[i], &boxes[j], v.range) {
                continue;
            }
            let e = leg_pair_energy(
                path.leg(i).points,
                path.leg(j).points,
                path.dim,
                path.beta,
                v,
                rule,
            );
            out[i * k + j] = e;
            out[j * k + i] = e;
        }
    }
    out
}

/// `H = Σ_{i<j} V(B_i, B_j)` over all leg pairs.
pub fn hamiltonian(path: &PathConfig, v: &PairPotential, rule: Quadrature) -> f64 {
    let k = path.n_legs();
    let pairs = pair_interactions(path, v, rule);
    let mut h = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            h += pairs[i * k + j];
        }
    }
    h
}

/// Elementary upper bound `L β k(k-1)/2` on the Hamiltonian of `k` legs.
pub fn hamiltonian_bound(v: &PairPotential, beta: f64, k: usize) -> f64 {
    v.strength * beta * (k * k.saturating_sub(1)) as f64 / 2.0
}

/// `1 - exp(-α V(f, g))`.
pub fn u_factor(
    f: LegView<'_>,
    g: LegView<'_>,
    v: &PairPotential,
    alpha: f64,
    rule: Quadrature,
) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(invalid(format!("coupling must be >= 0, got {alpha}")));
    }
    Ok(-(-alpha * interaction_v(f, g, v, rule)?).exp_m1())
}

/// Fill `buf` with a bridge from `start` to `end` over `duration`, using
/// `steps` equal time steps, by sequential Gaussian conditioning.
pub(crate) fn fill_bridge<R: Rng + ?Sized>(
    buf: &mut [f64],
    start: &[f64],
    end: &[f64],
    duration: f64,
    steps: usize,
    rng: &mut R,
) {
    let d = start.len();
    let dt = duration / steps as f64;
    buf[..d].copy_from_slice(start);
    for j in 0..steps - 1 {
        let remaining = duration - j as f64 * dt;
        let after = duration - (j + 1) as f64 * dt;
        let frac = dt / remaining;
        let sd = (dt * after / remaining).sqrt();
        let (prev, next) = buf.split_at_mut((j + 1) * d);
        let cur = &prev[j * d..];
        for c in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            next[c] = cur[c] + (end[c] - cur[c]) * frac + sd * z;
        }
    }
    buf[steps * d..(steps + 1) * d].copy_from_slice(end);
}

pub(crate) fn fill_free<R: Rng + ?Sized>(
    buf: &mut [f64],
    start: &[f64],
    duration: f64,
    steps: usize,
    rng: &mut R,
) {
    let d = start.len();
    let sd = (duration / steps as f64).sqrt();
    buf[..d].copy_from_slice(start);
    for j in 0..steps {
        for c in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            buf[(j + 1) * d + c] = buf[j * d + c] + sd * z;
        }
    }
}

fn check_sampling(start: &[f64], duration: f64, steps: usize) -> Result<()> {
    if start.is_empty() {
        return Err(invalid("points need at least one coordinate"));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(invalid(format!("duration must be positive, got {duration}")));
    }
    if steps == 0 {
        return Err(invalid("need at least one time step"));
    }
    Ok(())
}

/// Grid values of a Brownian bridge, flattened `(steps + 1) x d`.
pub fn sample_bridge<R: Rng + ?Sized>(
    start: &[f64],
    end: &[f64],
    duration: f64,
    steps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_sampling(start, duration, steps)?;
    if start.len() != end.len() {
        return Err(invalid("start and end must have the same dimension"));
    }
    let mut buf = vec![0.0; (steps + 1) * start.len()];
    fill_bridge(&mut buf, start, end, duration, steps, rng);
    Ok(buf)
}

/// A bridge of `n_legs` legs of duration `beta` each.
pub fn sample_bridge_path<R: Rng + ?Sized>(
    start: &[f64],
    end: &[f64],
    n_legs: usize,
    steps_per_leg: usize,
    beta: f64,
    rng: &mut R,
) -> Result<PathConfig> {
    if n_legs == 0 {
        return Err(invalid("need at least one leg"));
    }
    let points = sample_bridge(start, end, beta * n_legs as f64, steps_per_leg * n_legs, rng)?;
    Ok(PathConfig {
        dim: start.len(),
        beta,
        steps_per_leg,
        points,
    })
}

/// Free Brownian motion from `start` (endpoint not pinned).
pub fn sample_free_path<R: Rng + ?Sized>(
    start: &[f64],
    n_legs: usize,
    steps_per_leg: usize,
    beta: f64,
    rng: &mut R,
) -> Result<PathConfig> {
    if n_legs == 0 {
        return Err(invalid("need at least one leg"));
    }
    check_sampling(start, beta, steps_per_leg)?;
    let steps = steps_per_leg * n_legs;
    let mut points = vec![0.0; (steps + 1) * start.len()];
    fill_free(&mut points, start, beta * n_legs as f64, steps, rng);
    Ok(PathConfig {
        dim: start.len(),
        beta,
        steps_per_leg,
        points,
    })
}

/// Gaussian kernel `(2πt)^{-d/2} exp(-|x|²/2t)`.
pub fn heat_kernel(x: &[f64], t: f64) -> f64 {
    let r2: f64 = x.iter().map(|c| c * c).sum();
    heat_kernel_r2(r2, x.len(), t)
}

#[inline]
pub fn heat_kernel_r2(r2: f64, dim: usize, t: f64) -> f64 {
    (2.0 * std::f64::consts::PI * t).powf(-(dim as f64) / 2.0) * (-r2 / (2.0 * t)).exp()
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        Err(Error::InvalidArgument("dimension must be >= 1".into()))
    } else {
        Ok(())
    }
}
