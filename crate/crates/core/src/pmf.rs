//! Transient distribution of the time-nonhomogeneous birth–death process.
//!
//! With `α = M/(1+M)` and `β = L/(1+M)` the PGF is
//! `G(z,t) = ((α + (1−α−β) z) / (1 − β z))^{I₀}`, i.e. `I(t)` is the sum of a
//! binomial `Bin(I₀, (1−α−β)/(1−β))` and an independent negative binomial
//! with `I₀` successes and failure probability `β`. For `I₀ = 1` this is the
//! zero-modified geometric law `P₀ = α`, `P_k = (1−α)(1−β)β^{k−1}`.

use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::calculus::{Field, IntegralTable};
use crate::error::{Error, Result};

/// Target mass beyond the automatic truncation point.
pub const TAIL_TARGET: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaBeta {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl AlphaBeta {
    /// `1 − α − β = (e^{−s} − M)/(1 + M)`; negative once `M > e^{−s}`.
    pub fn gamma(&self) -> f64 {
        1.0 - self.alpha - self.beta
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmfSlice {
    pub t: f64,
    pub i0: u64,
    /// `p[k] = P_k(t)` for `k = 0..=K`.
    pub p: Vec<f64>,
    /// Probability mass beyond `K`.
    pub tail: f64,
    pub alpha_beta: AlphaBeta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub t: f64,
    pub mean: f64,
    pub variance: f64,
    pub cv: f64,
}

/// `Z(k, t)`: rows are counts `ks`, columns are `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshGrid {
    pub times: Vec<f64>,
    pub ks: Vec<u64>,
    /// `z[r][i] = P_{ks[r]}(times[i])`.
    pub z: Vec<Vec<f64>>,
    /// Mass beyond `K` for each column.
    pub tails: Vec<f64>,
    /// Total mass of the undecimated column, excluding the tail.
    pub column_mass: Vec<f64>,
}

fn ensure_birth_death(tab: &IntegralTable) -> Result<()> {
    if tab.n_fn.iter().any(|&n| n != 0.0) {
        return Err(Error::ImmigrationNotSupported);
    }
    Ok(())
}

pub fn alpha_beta(tab: &IntegralTable, t: f64) -> Result<AlphaBeta> {
    let l = tab.interp(Field::L, t)?;
    let m = tab.interp(Field::M, t)?;
    Ok(AlphaBeta { t, alpha: m / (1.0 + m), beta: l / (1.0 + m) })
}

/// α rewritten through Σ for a constant recovery rate `mu`:
/// `α = 1 / (1 + 1/(μ Σ))`.
pub fn alpha_from_sigma(tab: &IntegralTable, mu: f64, t: f64) -> Result<f64> {
    let sigma = tab.interp(Field::Sigma, t)?;
    if sigma == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (1.0 + 1.0 / (mu * sigma)))
}

/// Smallest `K` with `(1−α) β^K < TAIL_TARGET`, scaled by `I₀`.
pub fn default_truncation(ab: &AlphaBeta, i0: u64) -> u64 {
    let i0 = i0.max(1);
    let base = if ab.beta <= 0.0 {
        1
    } else {
        let need = (TAIL_TARGET / (1.0 - ab.alpha)).ln() / ab.beta.ln();
        need.ceil().max(1.0) as u64
    };
    base.saturating_mul(i0).saturating_add(i0)
}

#[inline]
fn ln_pow(x: f64, n: f64) -> f64 {
    if n == 0.0 {
        0.0
    } else {
        n * x.ln()
    }
}

/// `P_k(t)` for general `I₀`. Each initial case independently leaves a
/// zero-modified geometric lineage, so with `m` surviving lineages
///
/// `P_k = Σ_{m=1}^{min(I₀,k)} C(I₀,m) (1−α)^m α^{I₀−m} C(k−1,m−1) (1−β)^m β^{k−m}`.
///
/// This regroups the binomial expansion of the PGF numerator into
/// nonnegative terms; the direct expansion in powers of `1−α−β` alternates
/// in sign whenever `M(t) > e^{−s(t)}` and cancels catastrophically.
fn pmf_general(ab: &AlphaBeta, i0: u64, k_max: usize) -> Vec<f64> {
    let n = i0 as usize;
    let (alpha, beta) = (ab.alpha, ab.beta);
    let lg = |x: usize| ln_gamma(x as f64);
    let ln_choose_n: Vec<f64> = (0..=n).map(|m| lg(n + 1) - lg(m + 1) - lg(n - m + 1)).collect();
    // survivor weights C(n,m)(1−α)^m α^{n−m} (1−β)^m, in logs
    let ln_surv: Vec<f64> = (0..=n)
        .map(|m| {
            let mf = m as f64;
            ln_choose_n[m] + ln_pow(1.0 - alpha, mf) + ln_pow(alpha, (n - m) as f64) + ln_pow(1.0 - beta, mf)
        })
        .collect();
    let ln_gamma_table: Vec<f64> = (0..=k_max + 1).map(|x| if x == 0 { f64::INFINITY } else { lg(x) }).collect();

    let mut p = Vec::with_capacity(k_max + 1);
    p.push(ln_pow(alpha, n as f64).exp());
    for k in 1..=k_max {
        let top = n.min(k);
        let mut acc = 0.0;
        for m in 1..=top {
            let ln_c = ln_gamma_table[k] - ln_gamma_table[m] - ln_gamma_table[k - m + 1];
            acc += (ln_surv[m] + ln_c + ln_pow(beta, (k - m) as f64)).exp();
        }
        p.push(acc);
    }
    p
}

fn pmf_single(ab: &AlphaBeta, k_max: usize) -> (Vec<f64>, f64) {
    let (alpha, beta) = (ab.alpha, ab.beta);
    let head = (1.0 - alpha) * (1.0 - beta);
    let mut p = Vec::with_capacity(k_max + 1);
    p.push(alpha);
    p.extend((1..=k_max).map(|k| head * ln_pow(beta, (k - 1) as f64).exp()));
    let tail = (1.0 - alpha) * ln_pow(beta, k_max as f64).exp();
    (p, tail)
}

/// `P_k(t)` for `k = 0..=k_max`. Requires a birth–death table (ν ≡ 0).
pub fn pmf(tab: &IntegralTable, t: f64, i0: u64, k_max: u64) -> Result<PmfSlice> {
    ensure_birth_death(tab)?;
    if k_max < i0 {
        return Err(Error::Truncation(format!("K = {k_max} is below I0 = {i0}")));
    }
    let ab = alpha_beta(tab, t)?;
    Ok(pmf_from_alpha_beta(&ab, i0, k_max))
}

pub fn pmf_from_alpha_beta(ab: &AlphaBeta, i0: u64, k_max: u64) -> PmfSlice {
    let k = k_max as usize;
    let (p, tail) = match i0 {
        0 => {
            let mut p = vec![0.0; k + 1];
            p[0] = 1.0;
            (p, 0.0)
        }
        1 => pmf_single(ab, k),
        _ => {
            let p = pmf_general(ab, i0, k);
            let tail = 1.0 - p.iter().sum::<f64>();
            if tail < -1e-9 {
                log::warn!("PMF mass exceeds one by {:e} at t = {}", -tail, ab.t);
            }
            (p, tail.max(0.0))
        }
    };
    PmfSlice { t: ab.t, i0, p, tail, alpha_beta: *ab }
}

/// General-`I₀` evaluation forced for any `I₀`, for cross-checking the
/// geometric fast path.
pub fn pmf_general_path(ab: &AlphaBeta, i0: u64, k_max: u64) -> Vec<f64> {
    pmf_general(ab, i0, k_max as usize)
}

impl PmfSlice {
    pub fn k_max(&self) -> u64 {
        (self.p.len() - 1) as u64
    }

    pub fn total_mass(&self) -> f64 {
        self.p.iter().sum::<f64>() + self.tail
    }

    /// Mean; for `I₀ = 1` the geometric tail beyond `K` is added in closed form.
    pub fn mean(&self) -> f64 {
        let body: f64 = self.p.iter().enumerate().map(|(k, &p)| k as f64 * p).sum();
        if self.i0 == 1 && self.tail > 0.0 {
            let k = self.k_max() as f64;
            let beta = self.alpha_beta.beta;
            body + self.tail * (k + 1.0 / (1.0 - beta))
        } else {
            body
        }
    }

    /// Variance of the truncated distribution (tail ignored).
    pub fn truncated_variance(&self) -> f64 {
        let mass: f64 = self.p.iter().sum();
        let m1: f64 = self.p.iter().enumerate().map(|(k, &p)| k as f64 * p).sum::<f64>() / mass;
        let m2: f64 = self.p.iter().enumerate().map(|(k, &p)| (k as f64).powi(2) * p).sum::<f64>() / mass;
        m2 - m1 * m1
    }

    /// Σ_{k≤K} p[k] z^k.
    pub fn power_series(&self, z: f64) -> f64 {
        let mut acc = 0.0;
        let mut zk = 1.0;
        for &p in &self.p {
            acc += p * zk;
            zk *= z;
        }
        acc
    }

    /// Σ_{k>K} p[k] z^k for `I₀ = 1`.
    pub fn geometric_tail_series(&self, z: f64) -> f64 {
        let AlphaBeta { alpha, beta, .. } = self.alpha_beta;
        let k = self.k_max() as f64;
        (1.0 - alpha) * (1.0 - beta) * ln_pow(beta, k).exp() * z.powf(k + 1.0) / (1.0 - beta * z)
    }
}

/// `G(z, t) = ((M − (L − 1) z) / (1 + M − L z))^{I₀}`.
pub fn pgf_eval(tab: &IntegralTable, z: f64, t: f64, i0: u64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::Domain(format!("PGF argument {z} outside [0, 1]")));
    }
    let l = tab.interp(Field::L, t)?;
    let m = tab.interp(Field::M, t)?;
    // numerator = denominator − (1 − z), exact normalisation at z = 1
    let ratio = 1.0 - (1.0 - z) / (1.0 + m - l * z);
    Ok(ratio.powi(i0 as i32))
}

pub fn moments(tab: &IntegralTable, t: f64, i0: u64) -> Result<Moments> {
    let s = tab.interp(Field::S, t)?;
    let l = tab.interp(Field::L, t)?;
    let m = tab.interp(Field::M, t)?;
    let n = i0 as f64;
    let mean = n * s.exp();
    let variance = n * (2.0 * s).exp() * (l + m);
    let cv = if i0 == 0 { 0.0 } else { ((l + m) / n).sqrt() };
    Ok(Moments { t, mean, variance, cv })
}

/// Builds `Z(k, t)` keeping every `k_stride`-th row; columns are computed
/// in parallel.
pub fn mesh(tab: &IntegralTable, times: &[f64], k_max: u64, i0: u64, k_stride: u64) -> Result<MeshGrid> {
    ensure_birth_death(tab)?;
    if k_max < i0 {
        return Err(Error::Truncation(format!("K = {k_max} is below I0 = {i0}")));
    }
    let stride = k_stride.max(1) as usize;
    let ks: Vec<u64> = (0..=k_max).step_by(stride).collect();
    // (kept entries, tail, undecimated mass) per time; full columns are dropped
    let columns: Vec<(Vec<f64>, f64, f64)> = times
        .par_iter()
        .map(|&t| {
            let c = pmf_from_alpha_beta(&alpha_beta(tab, t)?, i0, k_max);
            Ok((c.p.iter().step_by(stride).copied().collect(), c.tail, c.p.iter().sum()))
        })
        .collect::<Result<_>>()?;
    let z = (0..ks.len()).map(|r| columns.iter().map(|c| c.0[r]).collect()).collect();
    Ok(MeshGrid {
        times: times.to_vec(),
        ks,
        z,
        tails: columns.iter().map(|c| c.1).collect(),
        column_mass: columns.iter().map(|c| c.2).collect(),
    })
}

impl MeshGrid {
    /// `P_k(t)` across all times for the `r`-th kept count.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.z[r]
    }

    /// The kept entries of the PMF at `times[i]`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.z.iter().map(|row| row[i]).collect()
    }
}
