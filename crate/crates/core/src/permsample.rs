//! Exact sampling of cycle-count vectors `(l_k)` with `Σ k l_k = N` under
//! the weight `Π_k θ_k^{l_k} / (k^{l_k} l_k!)`.
//!
//! The normalizer obeys `N Z_N = Σ_{k=1}^N θ_k Z_{N-k}`, `Z_0 = 1`. A
//! sample is drawn by repeatedly removing the cycle through the largest
//! remaining element: with `m` elements left it has length `k` with
//! probability `θ_k Z_{m-k} / (m Z_m)`.

use rand::Rng;

use crate::error::{invalid, Result};
use crate::gamma::GammaTable;
use crate::rng::RngSpec;
use crate::stats::Moments;

fn check_theta(theta: &[f64], n: usize) -> Result<()> {
    if theta.len() < n {
        return Err(invalid(format!("need {n} weights, got {}", theta.len())));
    }
    if let Some((k, t)) = theta[..n].iter().enumerate().find(|(_, t)| !(t.is_finite() && **t > 0.0)) {
        return Err(invalid(format!("θ_{} = {t} must be positive", k + 1)));
    }
    Ok(())
}

/// `Z_0..Z_N` in linear arithmetic; `None` if anything overflows.
pub fn z_linear(theta: &[f64], n: usize) -> Result<Option<Vec<f64>>> {
    check_theta(theta, n)?;
    let mut z = vec![1.0; n + 1];
    for m in 1..=n {
        let s: f64 = (1..=m).map(|k| theta[k - 1] * z[m - k]).sum();
        z[m] = s / m as f64;
        if !(z[m].is_finite() && z[m] > 0.0) {
            return Ok(None);
        }
    }
    Ok(Some(z))
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `log Z_0..log Z_N`.
pub fn z_log(theta: &[f64], n: usize) -> Result<Vec<f64>> {
    check_theta(theta, n)?;
    let lt: Vec<f64> = theta[..n].iter().map(|t| t.ln()).collect();
    let mut lz = vec![0.0; n + 1];
    for m in 1..=n {
        let terms = (1..=m).map(|k| lt[k - 1] + lz[m - k]);
        lz[m] = log_sum_exp(terms) - (m as f64).ln();
    }
    Ok(lz)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZDomain {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZTable {
    pub log_z: Vec<f64>,
    pub domain: ZDomain,
}

impl ZTable {
    pub fn z(&self, m: usize) -> f64 {
        self.log_z[m].exp()
    }
}

/// Normalizers `Z_0..Z_N`, computed linearly when representable and in the
/// log domain otherwise.
pub fn z_recursion(theta: &[f64], n: usize) -> Result<ZTable> {
    match z_linear(theta, n)? {
        Some(z) => Ok(ZTable {
            log_z: z.iter().map(|x| x.ln()).collect(),
            domain: ZDomain::Linear,
        }),
        None => Ok(ZTable {
            log_z: z_log(theta, n)?,
            domain: ZDomain::Log,
        }),
    }
}

/// Sparse cycle counts: `(k, l_k)` pairs with `l_k > 0`, increasing `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleCounts {
    pub n: usize,
    pub parts: Vec<(usize, u32)>,
}

impl CycleCounts {
    pub fn count(&self, k: usize) -> u32 {
        self.parts
            .binary_search_by_key(&k, |&(kk, _)| kk)
            .map(|i| self.parts[i].1)
            .unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.parts.iter().map(|&(k, l)| k * l as usize).sum()
    }

    pub fn dense(&self) -> Vec<u32> {
        let mut out = vec![0; self.n];
        for &(k, l) in &self.parts {
            out[k - 1] = l;
        }
        out
    }

    pub fn from_dense(counts: &[u32]) -> Self {
        let parts: Vec<(usize, u32)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > 0)
            .map(|(i, &l)| (i + 1, l))
            .collect();
        let n = parts.iter().map(|&(k, l)| k * l as usize).sum();
        CycleCounts { n, parts }
    }

    /// `k:l_k` pairs separated by spaces.
    pub fn to_line(&self) -> String {
        self.parts
            .iter()
            .map(|(k, l)| format!("{k}:{l}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Debug, Clone)]
pub struct PartitionSampler {
    pub n: usize,
    log_theta: Vec<f64>,
    pub z: ZTable,
}

impl PartitionSampler {
    pub fn new(theta: &[f64], n: usize) -> Result<Self> {
        let z = z_recursion(theta, n)?;
        Ok(PartitionSampler {
            n,
            log_theta: theta[..n].iter().map(|t| t.ln()).collect(),
            z,
        })
    }

    /// `P(first removed cycle has length k)` with `m` elements left.
    pub fn removal_probability(&self, m: usize, k: usize) -> f64 {
        let lz = &self.z.log_z;
        (self.log_theta[k - 1] + lz[m - k] - lz[m] - (m as f64).ln()).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> CycleCounts {
        let mut dense = vec![0u32; self.n];
        let mut m = self.n;
        while m > 0 {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut chosen = m;
            for k in 1..=m {
                acc += self.removal_probability(m, k);
                if u < acc {
                    chosen = k;
                    break;
                }
            }
            dense[chosen - 1] += 1;
            m -= chosen;
        }
        CycleCounts::from_dense(&dense)
    }

    /// `n_samples` draws, in sample order regardless of thread count.
    pub fn sample_many(&self, n_samples: usize, rng: &RngSpec) -> Vec<CycleCounts> {
        rng.map_chunks(n_samples, |range, r| range.map(|_| self.sample(r)).collect::<Vec<_>>())
            .into_iter()
            .flatten()
            .collect()
    }
}

pub fn sample_partition<R: Rng + ?Sized>(theta: &[f64], n: usize, rng: &mut R) -> Result<CycleCounts> {
    Ok(PartitionSampler::new(theta, n)?.sample(rng))
}

/// `θ_k = |Λ| (2πβk)^{-d/2}` for `k = 1..N`.
pub fn free_gas_weights(dim: usize, beta: f64, n: usize, volume: f64) -> Result<Vec<f64>> {
    if !(volume > 0.0) {
        return Err(invalid("volume must be positive"));
    }
    Ok(GammaTable::free_gas(dim, beta, n)?.values().iter().map(|g| volume * g).collect())
}

/// `θ_k = |Λ| Γ_k` from a table; the table must reach `N`.
pub fn weights_from_table(table: &GammaTable, n: usize, volume: f64) -> Result<Vec<f64>> {
    if table.k_max() < n {
        return Err(invalid(format!("table has {} rows, need {n}", table.k_max())));
    }
    if !(volume > 0.0) {
        return Err(invalid("volume must be positive"));
    }
    Ok(table.values()[..n].iter().map(|g| volume * g).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleStat {
    pub k: usize,
    pub mean: f64,
    pub std_error: f64,
    /// Normal-approximation 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Per-`k` mean of `l_k / |Λ|` for `k = 1..=k_max`.
pub fn cycle_statistics(samples: &[CycleCounts], volume: f64, k_max: usize) -> Vec<CycleStat> {
    let mut moms = vec![Moments::default(); k_max];
    for s in samples {
        for (k, m) in moms.iter_mut().enumerate() {
            m.push(s.count(k + 1) as f64 / volume);
        }
    }
    moms.iter()
        .enumerate()
        .map(|(i, m)| CycleStat {
            k: i + 1,
            mean: m.mean,
            std_error: m.std_error(),
            ci_low: m.mean - 1.96 * m.std_error(),
            ci_high: m.mean + 1.96 * m.std_error(),
        })
        .collect()
}

/// Mean and standard error of `Σ_{k<=K} k l_k / |Λ|`.
pub fn truncated_mass(samples: &[CycleCounts], volume: f64, k_max: usize) -> crate::stats::Estimate {
    let mut m = Moments::default();
    for s in samples {
        let x: usize = s.parts.iter().filter(|(k, _)| *k <= k_max).map(|&(k, l)| k * l as usize).sum();
        m.push(x as f64 / volume);
    }
    m.estimate()
}

/// Every cycle-count vector with `Σ k l_k = n`, as dense vectors.
pub fn partitions(n: usize) -> Vec<Vec<u32>> {
    fn rec(rem: usize, max_part: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rem == 0 {
            out.push(cur.clone());
            return;
        }
        for k in (1..=max_part.min(rem)).rev() {
            cur[k - 1] += 1;
            rec(rem - k, k, cur, out);
            cur[k - 1] -= 1;
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut vec![0; n], &mut out);
    out
}

/// Unnormalized weight `Π_k θ_k^{l_k} / (k^{l_k} l_k!)`.
pub fn partition_weight(theta: &[f64], counts: &[u32]) -> f64 {
    counts
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let k = (i + 1) as f64;
            let fact: f64 = (1..=l).map(|x| x as f64).product();
            (theta[i] / k).powi(l as i32) / fact
        })
        .product()
}
