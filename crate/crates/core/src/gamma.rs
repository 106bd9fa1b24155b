//! Monte Carlo estimates of the self-repellent bridge weights `Γ_k(x)`,
//! the connective constant, the critical density and scaling fits.
//!
//! `Γ_k(x) = φ_k(x) · E[exp(-α H_k)]` where the expectation is over
//! Brownian bridges `0 -> x` of duration `kβ` and `φ_k` is the Gaussian
//! kernel at time `kβ`.

use std::fmt::Write as _;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::paths::{self, heat_kernel, heat_kernel_r2, Model, PathConfig};
use crate::rng::RngSpec;
use crate::stats::{self, Moments};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEstimate {
    pub k: usize,
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(invalid("leg count must be >= 1"))
    } else {
        Ok(())
    }
}

/// Mean of `exp(-αH_k)` and of `exp(-αH_k)·extra` over bridges produced by
/// `start_end`, in chunk order. `extra` lets the Dirichlet estimator fold in
/// its indicator.
fn weight_moments<S, X>(
    model: &Model,
    k: usize,
    n_samples: usize,
    rng: &RngSpec,
    start_end: S,
    extra: X,
) -> Result<Moments>
where
    S: Fn(&mut rand_chacha::ChaCha8Rng) -> (Vec<f64>, Vec<f64>) + Sync,
    X: Fn(&PathConfig) -> f64 + Sync,
{
    let m = model.steps_per_leg;
    let bound = paths::hamiltonian_bound(&model.potential, model.beta, k);
    let parts = rng.map_chunks(n_samples, |range, r| -> Result<Moments> {
        let mut acc = Moments::default();
        let mut path = PathConfig {
            dim: model.dim,
            beta: model.beta,
            steps_per_leg: m,
            points: vec![0.0; (k * m + 1) * model.dim],
        };
        for _ in range {
            let (a, b) = start_end(r);
            paths::fill_bridge(&mut path.points, &a, &b, model.beta * k as f64, k * m, r);
            let h = paths::hamiltonian(&path, &model.potential, model.quadrature);
            if !(h >= 0.0 && h <= bound * (1.0 + 1e-12)) {
                return Err(Error::NumericFailure {
                    message: "Hamiltonian outside [0, L β k(k-1)/2]".into(),
                    state: format!("H = {h}, bound = {bound}"),
                });
            }
            acc.push((-model.alpha * h).exp() * extra(&path));
        }
        Ok(acc)
    });
    let parts: Vec<Moments> = parts.into_iter().collect::<Result<_>>()?;
    Ok(stats::merge_all(&parts))
}

/// `Γ_k(x)` for free-space bridges.
pub fn estimate_gamma_point(
    model: &Model,
    k: usize,
    x: &[f64],
    n_samples: usize,
    rng: &RngSpec,
) -> Result<GammaEstimate> {
    model.validate()?;
    check_k(k)?;
    if x.len() != model.dim {
        return Err(invalid("endpoint dimension does not match the model"));
    }
    if n_samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let phi = heat_kernel(x, model.beta * k as f64);
    if model.is_free() || k == 1 {
        return Ok(GammaEstimate {
            k,
            value: phi,
            std_error: 0.0,
            n_samples: n_samples as u64,
        });
    }
    let origin = vec![0.0; model.dim];
    let end = x.to_vec();
    let mom = weight_moments(model, k, n_samples, rng, |_| (origin.clone(), end.clone()), |_| 1.0)?;
    Ok(GammaEstimate {
        k,
        value: phi * mom.mean,
        std_error: phi * mom.std_error(),
        n_samples: mom.n,
    })
}

/// Box-restricted weight: start uniformly in `[-L/2, L/2)^d`, return to the
/// start after `k` legs, and count only paths whose grid points stay in the
/// box. Exits between grid points are not detected.
pub fn estimate_gamma_dirichlet(
    model: &Model,
    k: usize,
    box_side: f64,
    n_samples: usize,
    rng: &RngSpec,
) -> Result<GammaEstimate> {
    model.validate()?;
    check_k(k)?;
    if !(box_side > 0.0 && box_side.is_finite()) {
        return Err(invalid(format!("box side must be positive, got {box_side}")));
    }
    if n_samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let half = box_side / 2.0;
    let dim = model.dim;
    let start_end = |r: &mut rand_chacha::ChaCha8Rng| {
        let x: Vec<f64> = (0..dim).map(|_| r.random_range(-half..half)).collect();
        (x.clone(), x)
    };
    let inside = |p: &PathConfig| {
        if p.points.iter().all(|c| (-half..half).contains(c)) {
            1.0
        } else {
            0.0
        }
    };
    let mom = weight_moments(model, k, n_samples, rng, start_end, inside)?;
    let phi = heat_kernel_r2(0.0, dim, model.beta * k as f64);
    Ok(GammaEstimate {
        k,
        value: phi * mom.mean,
        std_error: phi * mom.std_error(),
        n_samples: mom.n,
    })
}

/// `Γ_k(0)` for `k = 1..K` with the parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable {
    pub alpha: f64,
    pub beta: f64,
    pub dim: usize,
    pub steps_per_leg: usize,
    pub potential: String,
    pub potential_strength: f64,
    pub potential_range: f64,
    pub seed: u64,
    pub version: String,
    pub entries: Vec<GammaEstimate>,
}

impl GammaTable {
    /// Exact free-gas table `Γ_k = (2πβk)^{-d/2}`.
    pub fn free_gas(dim: usize, beta: f64, k_max: usize) -> Result<Self> {
        paths::check_dim(dim)?;
        if !(beta > 0.0) {
            return Err(invalid("beta must be positive"));
        }
        let entries = (1..=k_max)
            .map(|k| GammaEstimate {
                k,
                value: heat_kernel_r2(0.0, dim, beta * k as f64),
                std_error: 0.0,
                n_samples: 0,
            })
            .collect();
        Ok(GammaTable {
            alpha: 0.0,
            beta,
            dim,
            steps_per_leg: 0,
            potential: "none".into(),
            potential_strength: 0.0,
            potential_range: 0.0,
            seed: 0,
            version: crate::VERSION.into(),
            entries,
        })
    }

    /// Build from arbitrary positive values (no error bars).
    pub fn from_values(dim: usize, beta: f64, values: &[f64]) -> Result<Self> {
        let mut t = GammaTable::free_gas(dim, beta, 0)?;
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("table values must be finite and non-negative"));
        }
        t.potential = "custom".into();
        t.entries = values
            .iter()
            .enumerate()
            .map(|(i, &value)| GammaEstimate {
                k: i + 1,
                value,
                std_error: 0.0,
                n_samples: 0,
            })
            .collect();
        Ok(t)
    }

    pub fn k_max(&self) -> usize {
        self.entries.len()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.value).collect()
    }

    pub fn std_errors(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.std_error).collect()
    }

    /// Truncated copy with the first `k` rows.
    pub fn truncated(&self, k: usize) -> Self {
        let mut t = self.clone();
        t.entries.truncate(k);
        t
    }

    fn rows_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            writeln!(s, "{},{},{},{}", e.k, e.value, e.std_error, e.n_samples).unwrap();
        }
        s
    }

    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.rows_text().as_bytes()))
    }

    /// Line-oriented text: `# key = value` header, then CSV.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let header = [
            ("format", "gamma-table".to_string()),
            ("version", self.version.clone()),
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("dim", self.dim.to_string()),
            ("steps_per_leg", self.steps_per_leg.to_string()),
            ("potential", self.potential.clone()),
            ("potential_strength", self.potential_strength.to_string()),
            ("potential_range", self.potential_range.to_string()),
            ("seed", self.seed.to_string()),
            ("rows_sha256", self.checksum()),
        ];
        for (k, v) in header {
            writeln!(s, "# {k} = {v}").unwrap();
        }
        s.push_str("k,value,std_error,n_samples\n");
        s.push_str(&self.rows_text());
        s
    }

    /// Parse [`to_text`](Self::to_text) output. Comment lines whose key is
    /// unknown are ignored, so files may carry extra metadata.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut t = GammaTable::free_gas(1, 1.0, 0)?;
        let mut expected = None;
        let mut saw_columns = false;
        let perr = |m: String| Error::Parse(m);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let Some((key, value)) = rest.split_once('=') else {
                    continue;
                };
                let (key, value) = (key.trim(), value.trim());
                let num = |v: &str| v.parse::<f64>().map_err(|e| perr(format!("{key}: {e}")));
                let int = |v: &str| v.parse::<u64>().map_err(|e| perr(format!("{key}: {e}")));
                match key {
                    "version" => t.version = value.to_string(),
                    "alpha" => t.alpha = num(value)?,
                    "beta" => t.beta = num(value)?,
                    "dim" => t.dim = int(value)? as usize,
                    "steps_per_leg" => t.steps_per_leg = int(value)? as usize,
                    "potential" => t.potential = value.to_string(),
                    "potential_strength" => t.potential_strength = num(value)?,
                    "potential_range" => t.potential_range = num(value)?,
                    "seed" => t.seed = int(value)?,
                    "rows_sha256" => expected = Some(value.to_string()),
                    _ => {}
                }
                continue;
            }
            if !saw_columns {
                if line != "k,value,std_error,n_samples" {
                    return Err(perr(format!("line {}: unexpected column header", lineno + 1)));
                }
                saw_columns = true;
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(perr(format!("line {}: expected 4 fields", lineno + 1)));
            }
            let bad = |e: &dyn std::fmt::Display| perr(format!("line {}: {e}", lineno + 1));
            let e = GammaEstimate {
                k: f[0].parse().map_err(|e| bad(&e))?,
                value: f[1].parse().map_err(|e| bad(&e))?,
                std_error: f[2].parse().map_err(|e| bad(&e))?,
                n_samples: f[3].parse().map_err(|e| bad(&e))?,
            };
            if e.k != t.entries.len() + 1 {
                return Err(perr(format!("line {}: rows must be k = 1, 2, ...", lineno + 1)));
            }
            t.entries.push(e);
        }
        if !saw_columns {
            return Err(perr("no table body".into()));
        }
        let found = t.checksum();
        match expected {
            Some(exp) if exp != found => Err(Error::Checksum {
                expected: exp,
                found,
            }),
            _ => Ok(t),
        }
    }

    fn matches_model(&self, model: &Model) -> bool {
        self.alpha == model.alpha
            && self.beta == model.beta
            && self.dim == model.dim
            && self.steps_per_leg == model.steps_per_leg
            && self.potential_strength == model.potential.strength
            && self.potential_range == model.potential.range
    }
}

/// Stream used for row `k`; rows are independent so a table can be
/// extended without touching existing rows.
pub fn row_stream(seed: u64, k: usize) -> RngSpec {
    RngSpec::new(seed).with_stream(1).derive(k as u64)
}

/// `Γ_k(0)` for `k = 1..=k_max`, row `k` drawn from [`row_stream`].
pub fn estimate_gamma_table(
    model: &Model,
    k_max: usize,
    n_samples: usize,
    seed: u64,
) -> Result<GammaTable> {
    let table = GammaTable {
        alpha: model.alpha,
        beta: model.beta,
        dim: model.dim,
        steps_per_leg: model.steps_per_leg,
        potential: model.potential.describe(),
        potential_strength: model.potential.strength,
        potential_range: model.potential.range,
        seed,
        version: crate::VERSION.into(),
        entries: Vec::new(),
    };
    extend_gamma_table(table, model, k_max, n_samples)
}

/// Add rows up to `k_max`, leaving existing rows unchanged.
pub fn extend_gamma_table(
    mut table: GammaTable,
    model: &Model,
    k_max: usize,
    n_samples: usize,
) -> Result<GammaTable> {
    model.validate()?;
    if !table.matches_model(model) {
        return Err(invalid("existing table was built with different parameters"));
    }
    let origin = vec![0.0; model.dim];
    for k in table.k_max() + 1..=k_max {
        let e = estimate_gamma_point(model, k, &origin, n_samples, &row_stream(table.seed, k))?;
        table.entries.push(e);
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaBracket {
    pub lower: f64,
    pub upper: f64,
    pub point_estimate: f64,
    /// The raw extrapolation fell outside `[lower, upper]` and was clamped.
    pub clamped: bool,
    pub k_used: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaFit {
    /// Smallest `k` used by the extrapolation.
    pub k_min: usize,
    /// Include the `(log k)/k` correction term.
    pub log_term: bool,
}

impl Default for LambdaFit {
    fn default() -> Self {
        LambdaFit {
            k_min: 2,
            log_term: true,
        }
    }
}

/// Bracket and extrapolate `λ_c = lim Γ_k^{-1/k}`.
///
/// The lower bound `max_k ((2πβk)^{d/2} Γ_k)^{-1/k}` follows from
/// submultiplicativity; the upper bound is `exp(α L β)`.
pub fn estimate_lambda_c(table: &GammaTable, fit: LambdaFit) -> Result<LambdaBracket> {
    if table.k_max() < 3 {
        return Err(Error::DegenerateInput("need at least 3 table rows".into()));
    }
    if let Some(e) = table.entries.iter().find(|e| !(e.value > 0.0)) {
        return Err(Error::DegenerateInput(format!("Γ_{} = {} is not positive", e.k, e.value)));
    }
    let d2 = table.dim as f64 / 2.0;
    let two_pi_beta = 2.0 * std::f64::consts::PI * table.beta;
    let lower = table
        .entries
        .iter()
        .map(|e| {
            let k = e.k as f64;
            (-(d2 * (two_pi_beta * k).ln() + e.value.ln()) / k).exp()
        })
        .fold(1.0f64, f64::max);
    let upper = (table.alpha * table.potential_strength * table.beta).exp();
    if lower > upper * (1.0 + 1e-12) {
        return Err(Error::InconsistentBracket { lower, upper });
    }
    // Only rounding can leave lower a hair above upper here.
    let lower = lower.min(upper);
    let used: Vec<&GammaEstimate> = table.entries.iter().filter(|e| e.k >= fit.k_min).collect();
    let n_coef = if fit.log_term { 3 } else { 2 };
    if used.len() < n_coef {
        return Err(Error::DegenerateInput("fit window has too few rows".into()));
    }
    let rows: Vec<Vec<f64>> = used
        .iter()
        .map(|e| {
            let k = e.k as f64;
            let mut r = vec![1.0, 1.0 / k];
            if fit.log_term {
                r.push(k.ln() / k);
            }
            r
        })
        .collect();
    let y: Vec<f64> = used.iter().map(|e| -e.value.ln() / e.k as f64).collect();
    let (coef, _) = stats::least_squares(&rows, &y)?;
    let raw = coef[0].exp();
    let point = raw.clamp(lower, upper);
    Ok(LambdaBracket {
        lower,
        upper,
        point_estimate: point,
        clamped: point != raw,
        k_used: used.iter().map(|e| e.k).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoPartialSums {
    pub lambda: f64,
    /// `S_K = Σ_{k<=K} λ^k Γ_k` for `K = 1..`.
    pub partial_sums: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub increments: Vec<f64>,
    /// Least-squares slope of `log increment` vs `log k` over the upper
    /// half of the range; below `-1` is consistent with convergence.
    pub increment_decay: Option<f64>,
}

/// Partial sums of `Σ λ^k Γ_k` up to `k_max` (at most the table length).
pub fn estimate_rho_c(table: &GammaTable, lambda: f64, k_max: usize) -> Result<RhoPartialSums> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("λ must be positive, got {lambda}")));
    }
    let k_max = k_max.min(table.k_max());
    let mut partial_sums = Vec::with_capacity(k_max);
    let mut std_errors = Vec::with_capacity(k_max);
    let mut increments = Vec::with_capacity(k_max);
    let mut var = 0.0;
    let mut terms = Vec::with_capacity(k_max);
    for e in &table.entries[..k_max] {
        let scale = (e.k as f64 * lambda.ln()).exp();
        let inc = scale * e.value;
        increments.push(inc);
        terms.push(inc);
        var += (scale * e.std_error).powi(2);
        partial_sums.push(stats::compensated_sum(terms.iter().copied()));
        std_errors.push(var.sqrt());
    }
    let lo = k_max / 2 + 1;
    let increment_decay = if k_max >= 4 {
        let (x, y): (Vec<f64>, Vec<f64>) = (lo..=k_max)
            .filter(|&k| increments[k - 1] > 0.0)
            .map(|k| ((k as f64).ln(), increments[k - 1].ln()))
            .unzip();
        stats::linear_fit(&x, &y).ok().map(|f| f.slope)
    } else {
        None
    };
    Ok(RhoPartialSums {
        lambda,
        partial_sums,
        std_errors,
        increments,
        increment_decay,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub std_error: f64,
    /// Normal-approximation 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Slope of `log(λ^k Γ_k)` against `log k` for `k` in `k_lo..=k_hi`.
pub fn fit_scaling_exponent(
    table: &GammaTable,
    lambda: f64,
    k_lo: usize,
    k_hi: usize,
) -> Result<ScalingFit> {
    let k_hi = k_hi.min(table.k_max());
    if k_lo < 1 || k_hi < k_lo + 2 {
        return Err(Error::DegenerateInput(format!(
            "window {k_lo}..={k_hi} needs at least 3 rows"
        )));
    }
    if !(lambda > 0.0) {
        return Err(invalid("λ must be positive"));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for e in &table.entries[k_lo - 1..k_hi] {
        if !(e.value > 0.0) {
            return Err(Error::DegenerateInput(format!("Γ_{} = {} is not positive", e.k, e.value)));
        }
        x.push((e.k as f64).ln());
        y.push(e.k as f64 * lambda.ln() + e.value.ln());
    }
    let fit = stats::linear_fit(&x, &y)?;
    Ok(ScalingFit {
        exponent: fit.slope,
        std_error: fit.slope_se,
        ci_low: fit.slope - 1.96 * fit.slope_se,
        ci_high: fit.slope + 1.96 * fit.slope_se,
    })
}
