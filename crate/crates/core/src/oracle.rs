//! Independent ground truth for the closed-form PMF and for the simulator.
//!
//! [`forward_solve`] integrates the Kolmogorov forward equations of the
//! chain on `{0, …, K}` with classical RK4. From state `k` the chain jumps up
//! at rate `kλ(t) + ν(t)` and down at rate `kμ(t)`; mass pushed above `K` is
//! absorbed into `leaked` so an undersized truncation is visible.
//!
//! [`LineageReference`] handles horizons where the forward equations are too
//! large to integrate: every initial case and every immigrant founds an
//! independent birth–death lineage whose law at `t` is zero-modified
//! geometric, and immigrants arrive as a Poisson process.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::calculus::{exact_s, Field, IntegralTable};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Leakage above which a solve is rejected.
pub const MAX_LEAK: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDistribution {
    pub t: f64,
    pub q: Vec<f64>,
    pub leaked: f64,
}

impl TruncatedDistribution {
    pub fn mean(&self) -> f64 {
        self.q.iter().enumerate().map(|(k, &p)| k as f64 * p).sum()
    }

    pub fn total(&self) -> f64 {
        self.q.iter().sum::<f64>() + self.leaked
    }
}

struct Rates {
    lambda: f64,
    mu: f64,
    nu: f64,
}

fn rates_at(sc: &Scenario, t: f64) -> Rates {
    Rates { lambda: sc.lambda.value(t), mu: sc.mu.value(t), nu: sc.nu.value(t) }
}

/// Writes `d/dt (q, leaked)` into `dq`; the last slot of `dq` is the leak.
fn generator(r: &Rates, q: &[f64], dq: &mut [f64]) {
    let k_max = q.len() - 1;
    for k in 0..=k_max {
        let kf = k as f64;
        let mut v = -(kf * (r.lambda + r.mu) + r.nu) * q[k];
        if k > 0 {
            v += ((kf - 1.0) * r.lambda + r.nu) * q[k - 1];
        }
        if k < k_max {
            v += (kf + 1.0) * r.mu * q[k + 1];
        }
        dq[k] = v;
    }
    dq[k_max + 1] = (k_max as f64 * r.lambda + r.nu) * q[k_max];
}

fn stability_step(sc: &Scenario, t_target: f64, k_trunc: u64) -> Result<f64> {
    let lam = sc.lambda.sup_on(0.0, t_target)?;
    let mu = sc.mu.sup_on(0.0, t_target)?;
    let nu = sc.nu.sup_on(0.0, t_target)?;
    let scale = k_trunc as f64 * (lam + mu) + nu;
    Ok(if scale > 0.0 { 0.1 / scale } else { t_target.max(1.0) })
}

/// Forward-equation distribution of `I(t_target)` with the default step
/// `h ≤ 0.1 / (K(λ̄+μ̄) + ν̄)`.
pub fn forward_solve(sc: &Scenario, t_target: f64, k_trunc: u64) -> Result<TruncatedDistribution> {
    let h = stability_step(sc, t_target, k_trunc)?;
    forward_solve_with_step(sc, t_target, k_trunc, h)
}

/// As [`forward_solve`] with an explicit maximum step.
pub fn forward_solve_with_step(sc: &Scenario, t_target: f64, k_trunc: u64, h_max: f64) -> Result<TruncatedDistribution> {
    if t_target.is_nan() || t_target < 0.0 {
        return Err(Error::Domain(format!("oracle target time {t_target}")));
    }
    if k_trunc < sc.i0 {
        return Err(Error::Truncation(format!("K_trunc = {k_trunc} is below I0 = {}", sc.i0)));
    }
    let k = k_trunc as usize;
    let mut state = vec![0.0; k + 2];
    state[sc.i0 as usize] = 1.0;

    let mut stops: Vec<f64> = sc.breakpoints().into_iter().filter(|&b| b > 0.0 && b < t_target).collect();
    stops.push(t_target);

    let mut k1 = vec![0.0; k + 2];
    let mut k2 = vec![0.0; k + 2];
    let mut k3 = vec![0.0; k + 2];
    let mut k4 = vec![0.0; k + 2];
    let mut tmp = vec![0.0; k + 2];

    let mut t = 0.0;
    for stop in stops {
        let span = stop - t;
        if span <= 0.0 {
            continue;
        }
        let n = (span / h_max).ceil().max(1.0) as usize;
        let h = span / n as f64;
        for step in 0..n {
            let t0 = t + step as f64 * h;
            // stage rates evaluated strictly inside the span keep jumps out
            let r0 = rates_at(sc, t0);
            let rm = rates_at(sc, t0 + 0.5 * h);
            let r1 = Rates {
                lambda: sc.lambda.value_left(t0 + h),
                mu: sc.mu.value_left(t0 + h),
                nu: sc.nu.value_left(t0 + h),
            };
            generator(&r0, &state[..=k], &mut k1);
            for i in 0..=k {
                tmp[i] = state[i] + 0.5 * h * k1[i];
            }
            generator(&rm, &tmp[..=k], &mut k2);
            for i in 0..=k {
                tmp[i] = state[i] + 0.5 * h * k2[i];
            }
            generator(&rm, &tmp[..=k], &mut k3);
            for i in 0..=k {
                tmp[i] = state[i] + h * k3[i];
            }
            generator(&r1, &tmp[..=k], &mut k4);
            for i in 0..=k + 1 {
                state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        t = stop;
    }

    let leaked = state.pop().expect("leak slot");
    if leaked > MAX_LEAK {
        return Err(Error::Truncation(format!(
            "forward solve leaked {leaked:e} through K_trunc = {k_trunc}; increase the truncation"
        )));
    }
    for v in &mut state {
        if *v < 0.0 && *v >= -1e-12 {
            *v = 0.0;
        }
    }
    Ok(TruncatedDistribution { t: t_target, q: state, leaked })
}

/// Lineage decomposition of the birth–death–immigration process, evaluated
/// from an integral table.
pub struct LineageReference<'a> {
    sc: &'a Scenario,
    tab: &'a IntegralTable,
}

/// Extinction/continuation parameters of a lineage founded at `u`, observed
/// at `t`.
#[derive(Debug, Clone, Copy)]
pub struct LineageLaw {
    pub alpha: f64,
    pub beta: f64,
}

impl<'a> LineageReference<'a> {
    pub fn new(sc: &'a Scenario, tab: &'a IntegralTable) -> Self {
        Self { sc, tab }
    }

    /// Law at `t` of a lineage founded by one case at `u <= t`:
    /// `M_u = e^{s(u)} (M(t) − M(u))`, likewise `L_u`.
    pub fn law(&self, u: f64, t: f64) -> Result<LineageLaw> {
        let scale = exact_s(self.sc, u).exp();
        let l = scale * (self.tab.interp(Field::L, t)? - self.tab.interp(Field::L, u)?);
        let m = scale * (self.tab.interp(Field::M, t)? - self.tab.interp(Field::M, u)?);
        Ok(LineageLaw { alpha: m / (1.0 + m), beta: l / (1.0 + m) })
    }

    /// `P(I(t) = 0) = α(0,t)^{I₀} · exp(−∫₀ᵗ ν(u)(1 − α(u,t)) du)`, the
    /// integral taken by the trapezoid rule on the table grid.
    pub fn extinction_probability(&self, t: f64) -> Result<f64> {
        let founders = self.law(0.0, t)?.alpha.powi(self.sc.i0 as i32);
        let last = self.tab.grid.partition_point(|&g| g <= t);
        let mut integral = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for &u in &self.tab.grid[..last] {
            let f = self.sc.nu.value(u) * (1.0 - self.law(u, t)?.alpha);
            if let Some((pu, pf)) = prev {
                integral += 0.5 * (u - pu) * (pf + f);
            }
            prev = Some((u, f));
        }
        if let Some((pu, pf)) = prev {
            if t > pu {
                integral += 0.5 * (t - pu) * (pf + self.sc.nu.value_left(t));
            }
        }
        Ok(founders * (-integral).exp())
    }

    fn sample_lineage<R: Rng + ?Sized>(law: LineageLaw, rng: &mut R) -> u64 {
        if rng.random::<f64>() < law.alpha {
            return 0;
        }
        if law.beta <= 0.0 {
            return 1;
        }
        let u: f64 = 1.0 - rng.random::<f64>();
        1 + (u.ln() / law.beta.ln()).floor() as u64
    }

    /// One exact draw of `I(t)`.
    pub fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Result<u64> {
        let founder = self.law(0.0, t)?;
        let mut total = 0;
        for _ in 0..self.sc.i0 {
            total += Self::sample_lineage(founder, rng);
        }
        let mass = self.sc.nu.integrate(0.0, t)?;
        if mass > 0.0 {
            let arrivals = Poisson::new(mass).map_err(|e| Error::Domain(e.to_string()))?.sample(rng) as u64;
            let ceiling = self.sc.nu.sup_on(0.0, t)?;
            for _ in 0..arrivals {
                // arrival time with density ν(u)/∫ν by rejection
                let u = loop {
                    let u = rng.random::<f64>() * t;
                    if rng.random::<f64>() * ceiling < self.sc.nu.value(u) {
                        break u;
                    }
                };
                total += Self::sample_lineage(self.law(u, t)?, rng);
            }
        }
        Ok(total)
    }
}
