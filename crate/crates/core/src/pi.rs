//! Irreducible-graph sums over free Brownian paths and the renewal identity
//! `Z_N = Σ_{k=1}^N P_k Z_{N-k}` for their spatial integrals.
//!
//! For a free path split into legs `B_1..B_N`, the per-path quantities are
//! `z_N = exp(-α H_N)` and `p_N = Σ_{g irreducible} Π_{(i,j)∈g} (-U_ij)`
//! with `U_ij = 1 - exp(-α V(B_i, B_j))`. All `N <= N_max` are read off
//! prefixes of one sampled path, so the estimates share random numbers.

use crate::error::{invalid, Error, Result};
use crate::laces::{self, LaceTable};
use crate::paths::{self, heat_kernel, Model, PathConfig};
use crate::rng::RngSpec;
use crate::stats::{Estimate, Moments};

/// Up to this `N` the irreducible sum is evaluated graph by graph; above
/// it the lace resummation is used.
pub const DIRECT_SUM_MAX_N: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct PiEstimate {
    pub n: usize,
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    /// Mean contribution of graphs whose canonical lace has `s + 1` edges.
    pub by_lace_size: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnEstimate {
    pub n: usize,
    pub anchors: Vec<Vec<f64>>,
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
}

/// Precomputed combinatorics for `N = 2..=n_max`.
struct Irreducibles {
    direct: Vec<Vec<u64>>,
    laces: Vec<Option<LaceTable>>,
}

impl Irreducibles {
    fn new(n_max: usize, cap: usize) -> Result<Self> {
        let mut direct = vec![Vec::new(); n_max + 1];
        let mut laces = vec![None; n_max + 1];
        for n in 2..=n_max {
            if n <= DIRECT_SUM_MAX_N {
                direct[n] = laces::irreducible_masks(n)?;
            }
            laces[n] = Some(LaceTable::new(n, cap)?);
        }
        Ok(Irreducibles { direct, laces })
    }

    /// `(p_N, contributions by lace size)` for the leading `n x n` block of
    /// the `stride x stride` matrix `u`.
    fn evaluate(&self, n: usize, u: &[f64], stride: usize) -> (f64, Vec<f64>) {
        let w: Vec<f64> = laces::edge_list(n)
            .into_iter()
            .map(|(i, j)| u[(i - 1) * stride + (j - 1)])
            .collect();
        let table = self.laces[n].as_ref().expect("table built for every n >= 2");
        let terms = table.lace_terms(&w);
        let mut by_size = vec![0.0; n - 1];
        for (lace, t) in table.laces.iter().zip(&terms) {
            by_size[lace.len() - 1] += t;
        }
        let total = if n <= DIRECT_SUM_MAX_N {
            laces::irreducible_sum_direct(n, &w, &self.direct[n])
        } else {
            terms.iter().sum()
        };
        (total, by_size)
    }
}

/// Per-path `(z_1..z_N, p_1..p_N, lace-size contributions of p_N)`.
struct PathSums {
    z: Vec<f64>,
    p: Vec<f64>,
    by_size: Vec<f64>,
}

fn path_sums(model: &Model, path: &PathConfig, n_max: usize, irr: &Irreducibles) -> PathSums {
    let v = paths::pair_interactions(path, &model.potential, model.quadrature);
    let u: Vec<f64> = v.iter().map(|x| -(-model.alpha * x).exp_m1()).collect();
    let mut z = vec![1.0; n_max + 1];
    let mut p = vec![0.0; n_max + 1];
    p[1] = 1.0;
    let mut h = 0.0;
    let mut by_size = Vec::new();
    for n in 2..=n_max {
        for i in 0..n - 1 {
            h += v[i * n_max + (n - 1)];
        }
        z[n] = (-model.alpha * h).exp();
        let (total, sizes) = irr.evaluate(n, &u, n_max);
        p[n] = total;
        if n == n_max {
            by_size = sizes;
        }
    }
    PathSums { z, p, by_size }
}

/// Sample paths of `n_max` legs and collect every per-path sum, in chunk
/// order.
fn sample_sums(model: &Model, n_max: usize, n_samples: usize, rng: &RngSpec) -> Result<Vec<PathSums>> {
    model.validate()?;
    if n_samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let irr = Irreducibles::new(n_max, laces::DEFAULT_CAP)?;
    let origin = vec![0.0; model.dim];
    let m = model.steps_per_leg;
    let chunks = rng.map_chunks(n_samples, |range, r| {
        let mut path = PathConfig {
            dim: model.dim,
            beta: model.beta,
            steps_per_leg: m,
            points: vec![0.0; (n_max * m + 1) * model.dim],
        };
        range
            .map(|_| {
                paths::fill_free(&mut path.points, &origin, model.beta * n_max as f64, n_max * m, r);
                path_sums(model, &path, n_max, &irr)
            })
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

fn check_n(n: usize) -> Result<()> {
    if n > laces::DEFAULT_CAP {
        return Err(crate::Error::ResourceLimit(format!(
            "N = {n} exceeds the enumeration cap {}",
            laces::DEFAULT_CAP
        )));
    }
    Ok(())
}

/// `P_N = ∫ Π_N`, the mean irreducible-graph sum over free paths.
pub fn estimate_pi_integrated(model: &Model, n: usize, n_samples: usize, rng: &RngSpec) -> Result<PiEstimate> {
    check_n(n)?;
    if n == 0 {
        return Err(invalid("N must be >= 1"));
    }
    if n == 1 {
        return Ok(PiEstimate {
            n,
            value: 1.0,
            std_error: 0.0,
            n_samples: n_samples as u64,
            by_lace_size: Vec::new(),
        });
    }
    let sums = sample_sums(model, n, n_samples, rng)?;
    let mut mom = Moments::default();
    let mut by_size = vec![0.0; n - 1];
    for s in &sums {
        mom.push(s.p[n]);
        for (acc, x) in by_size.iter_mut().zip(&s.by_size) {
            *acc += x;
        }
    }
    let count = sums.len() as f64;
    Ok(PiEstimate {
        n,
        value: mom.mean,
        std_error: mom.std_error(),
        n_samples: mom.n,
        by_lace_size: by_size.into_iter().map(|x| x / count).collect(),
    })
}

/// `Z_N = ∫ Γ_N = E[exp(-α H_N)]` over free paths.
pub fn estimate_z_free(model: &Model, n: usize, n_samples: usize, rng: &RngSpec) -> Result<Estimate> {
    model.validate()?;
    if n <= 1 || model.is_free() {
        return Ok(Estimate {
            mean: 1.0,
            std_error: 0.0,
            n: n_samples as u64,
        });
    }
    let origin = vec![0.0; model.dim];
    let m = model.steps_per_leg;
    let parts = rng.map_chunks(n_samples, |range, r| {
        let mut path = PathConfig {
            dim: model.dim,
            beta: model.beta,
            steps_per_leg: m,
            points: vec![0.0; (n * m + 1) * model.dim],
        };
        let mut acc = Moments::default();
        for _ in range {
            paths::fill_free(&mut path.points, &origin, model.beta * n as f64, n * m, r);
            acc.push((-model.alpha * paths::hamiltonian(&path, &model.potential, model.quadrature)).exp());
        }
        acc
    });
    Ok(crate::stats::merge_all(&parts).estimate())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub n: usize,
    pub z: Estimate,
    pub p: Estimate,
    pub residual: f64,
    /// Delta-method standard error of the residual, accounting for the
    /// correlation induced by shared paths.
    pub residual_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionCheck {
    pub rows: Vec<ResidualRow>,
}

impl ConvolutionCheck {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,Z_N,Z_err,P_N,P_err,r_N,r_err\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.n, r.z.mean, r.z.std_error, r.p.mean, r.p.std_error, r.residual, r.residual_se
            ));
        }
        s
    }
}

/// Residuals `r_N = Z_N - Σ_{k=1}^N P_k Z_{N-k}` for `N = 1..=n_max`.
pub fn convolution_identity_check(
    model: &Model,
    n_max: usize,
    n_samples: usize,
    rng: &RngSpec,
) -> Result<ConvolutionCheck> {
    check_n(n_max)?;
    if n_max == 0 {
        return Err(invalid("N_max must be >= 1"));
    }
    let sums = sample_sums(model, n_max.max(2), n_samples, rng)?;
    let count = sums.len() as f64;
    let mut zm = vec![Moments::default(); n_max + 1];
    let mut pm = vec![Moments::default(); n_max + 1];
    for s in &sums {
        for n in 0..=n_max {
            zm[n].push(s.z[n]);
            pm[n].push(s.p[n]);
        }
    }
    let zbar: Vec<f64> = zm.iter().map(|m| m.mean).collect();
    let pbar: Vec<f64> = pm.iter().map(|m| m.mean).collect();
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let residual = zbar[n] - (1..=n).map(|k| pbar[k] * zbar[n - k]).sum::<f64>();
        // Influence of one path on the residual; its variance gives the
        // delta-method error.
        let mut psi = Moments::default();
        for s in &sums {
            let lin: f64 = (1..=n)
                .map(|k| s.p[k] * zbar[n - k] + pbar[k] * s.z[n - k])
                .sum();
            psi.push(s.z[n] - lin);
        }
        rows.push(ResidualRow {
            n,
            z: zm[n].estimate(),
            p: pm[n].estimate(),
            residual,
            residual_se: (psi.variance() / count).sqrt(),
        });
    }
    Ok(ConvolutionCheck { rows })
}

/// `u_n(x_1..x_{2n})`: independent unit bridges `x_{2i-1} -> x_{2i}`,
/// weighted by `Π_{i<n} U(f_i, f_{i+1})` and the Gaussian masses of the
/// bridges.
pub fn estimate_u_n(model: &Model, anchors: &[Vec<f64>], n_samples: usize, rng: &RngSpec) -> Result<UnEstimate> {
    model.validate()?;
    if anchors.len() < 4 || !anchors.len().is_multiple_of(2) {
        return Err(invalid("need 2n anchor points with n >= 2"));
    }
    if anchors.iter().any(|a| a.len() != model.dim) {
        return Err(invalid("anchor dimension does not match the model"));
    }
    let n = anchors.len() / 2;
    let beta = model.beta;
    let mass: f64 = (0..n)
        .map(|i| {
            let diff: Vec<f64> = anchors[2 * i + 1].iter().zip(&anchors[2 * i]).map(|(b, a)| b - a).collect();
            heat_kernel(&diff, beta)
        })
        .product();
    let m = model.steps_per_leg;
    let parts = rng.map_chunks(n_samples, |range, r| {
        let mut acc = Moments::default();
        let mut legs = vec![vec![0.0; (m + 1) * model.dim]; n];
        for _ in range {
            for (i, leg) in legs.iter_mut().enumerate() {
                paths::fill_bridge(leg, &anchors[2 * i], &anchors[2 * i + 1], beta, m, r);
            }
            let w: f64 = (0..n - 1)
                .map(|i| {
                    let e = paths::leg_pair_energy(&legs[i], &legs[i + 1], model.dim, beta, &model.potential, model.quadrature);
                    -(-model.alpha * e).exp_m1()
                })
                .product();
            acc.push(w);
        }
        acc
    });
    let mom = crate::stats::merge_all(&parts);
    Ok(UnEstimate {
        n,
        anchors: anchors.to_vec(),
        value: mass * mom.mean,
        std_error: mass * mom.std_error(),
        n_samples: mom.n,
    })
}

/// `∫_{R^d} (1+|x|)^{6-3d} dx = |S^{d-1}| B(d, 2d-6)`, finite for `d >= 4`.
pub fn pi_weight_integral(dim: usize) -> Result<f64> {
    if dim < 4 {
        return Err(Error::Divergence(format!("(1+|x|)^(6-3d) is not integrable in d = {dim}")));
    }
    let d = dim as f64;
    Ok(crate::greenlab::radial::sphere_area(dim - 1) * statrs::function::beta::beta(d, 2.0 * d - 6.0))
}

/// Integrated stand-in for the constant in
/// `Σ_{N>=2} λ^N |Π_N(x)| <= C α (1+|x|)^{6-3d}`:
/// `Σ_{N=2}^{N_max} λ^N |P_N| / (α ∫(1+|x|)^{6-3d})`.
///
/// `|P_N| <= ∫|Π_N|` and the sum stops at `N_max`, so this only estimates
/// the smallest admissible constant from below.
pub fn empirical_pi_constant(check: &ConvolutionCheck, alpha: f64, lambda: f64, dim: usize) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(invalid("coupling must be positive"));
    }
    if !(lambda > 0.0) {
        return Err(invalid("λ must be positive"));
    }
    let total: f64 = check
        .rows
        .iter()
        .filter(|r| r.n >= 2)
        .map(|r| lambda.powi(r.n as i32) * r.p.mean.abs())
        .sum();
    Ok(total / (alpha * pi_weight_integral(dim)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_integral_matches_quadrature() {
        for dim in [4usize, 5, 7] {
            let m = 3.0 * dim as f64 - 6.0;
            let (radial, _) = crate::greenlab::radial::integrate_to_infinity(
                |r| r.powi(dim as i32 - 1) * (1.0 + r).powf(-m),
                0.0,
                0.0,
                1e-12,
            )
            .unwrap();
            let oracle = crate::greenlab::radial::sphere_area(dim - 1) * radial;
            let w = pi_weight_integral(dim).unwrap();
            assert!((w / oracle - 1.0).abs() < 1e-9, "d = {dim}: {w} vs {oracle}");
        }
        // d = 5 by hand: |S^4| B(5, 4) = (8π²/3) / 280.
        let hand = 8.0 * std::f64::consts::PI.powi(2) / 3.0 / 280.0;
        assert!((pi_weight_integral(5).unwrap() / hand - 1.0).abs() < 1e-12);
        assert!(matches!(pi_weight_integral(3), Err(Error::Divergence(_))));
    }
    use crate::paths::PairPotential;

    fn model(alpha: f64) -> Model {
        Model::new(2, alpha, PairPotential::step_ball(1.0, 1.0).unwrap()).with_steps(8)
    }

    #[test]
    fn free_model_has_no_irreducible_mass() {
        let est = estimate_pi_integrated(&model(0.0), 4, 50, &RngSpec::new(1)).unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(estimate_pi_integrated(&model(0.5), 1, 5, &RngSpec::new(1)).unwrap().value, 1.0);
    }

    #[test]
    fn two_leg_sum_is_minus_u() {
        let spec = RngSpec::new(4).with_chunk_size(50);
        let p2 = estimate_pi_integrated(&model(0.5), 2, 300, &spec).unwrap();
        let check = convolution_identity_check(&model(0.5), 2, 300, &spec).unwrap();
        assert!(p2.value <= 0.0);
        assert!((p2.value - (check.rows[1].z.mean - 1.0)).abs() < 1e-12);
        assert!(check.rows[0].residual.abs() < 1e-15);
        assert!(check.rows[1].residual.abs() < 1e-12);
    }

    #[test]
    fn breakdown_sums_to_total() {
        let est = estimate_pi_integrated(&model(0.8), 5, 200, &RngSpec::new(8)).unwrap();
        let total: f64 = est.by_lace_size.iter().sum();
        assert!((total - est.value).abs() < 1e-12);
    }

    #[test]
    fn z_edge_cases() {
        assert_eq!(estimate_z_free(&model(0.5), 0, 10, &RngSpec::new(1)).unwrap().mean, 1.0);
        assert_eq!(estimate_z_free(&model(0.5), 1, 10, &RngSpec::new(1)).unwrap().mean, 1.0);
        assert_eq!(estimate_z_free(&model(0.0), 6, 10, &RngSpec::new(1)).unwrap().std_error, 0.0);
    }

    #[test]
    fn u_n_vanishes_without_interaction() {
        let anchors = vec![vec![0.0, 0.0]; 4];
        let none = Model::new(2, 0.5, PairPotential::zero()).with_steps(8);
        assert_eq!(estimate_u_n(&none, &anchors, 50, &RngSpec::new(1)).unwrap().value, 0.0);
        let some = estimate_u_n(&model(0.5), &anchors, 50, &RngSpec::new(1)).unwrap();
        assert!(some.value > 0.0);
        assert!(estimate_u_n(&model(0.5), &anchors[..3], 50, &RngSpec::new(1)).is_err());
    }
}
