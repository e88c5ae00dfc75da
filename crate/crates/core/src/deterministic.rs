//! Expected trajectories Ī, Ā, B̄, R̄ and expected daily counts.
//!
//! `Ī(t) = e^{s(t)} (I₀ + N(t))` is evaluated from the integral table; the
//! cumulative processes are integrated with the same midpoint-Simpson panels
//! as the table, with Ī at a midpoint obtained from a half-interval Simpson
//! step for N.

use crate::calculus::{exact_s, simpson_cumulative, IntegralTable, Nodal};
use crate::error::{Error, Result};
use crate::rates::Shape;
use crate::scenario::Scenario;

#[derive(Debug, Clone)]
pub struct DeterministicSeries {
    pub grid: Vec<f64>,
    pub i_bar: Vec<f64>,
    pub a_bar: Vec<f64>,
    pub b_bar: Vec<f64>,
    pub r_bar: Vec<f64>,
    pub daily: DailyCounts,
}

/// Expected new infections and recoveries on day `d`, i.e. over `(d − 1, d]`.
#[derive(Debug, Clone, Default)]
pub struct DailyCounts {
    pub day: Vec<u32>,
    pub i_new: Vec<f64>,
    pub r_new: Vec<f64>,
}

impl DeterministicSeries {
    pub fn compute(sc: &Scenario, tab: &IntegralTable) -> Result<Self> {
        let i_bar = expected_infected(tab, sc.i0);
        let (a_bar, b_bar, r_bar) = expected_cumulatives(tab, sc, &i_bar);
        let daily = daily_from_cumulatives(tab, &a_bar, &b_bar, &r_bar)?;
        Ok(Self { grid: tab.grid.clone(), i_bar, a_bar, b_bar, r_bar, daily })
    }

    /// max_i |Ī − (I₀ + Ā + B̄ − R̄)| / max(1, Ī).
    pub fn consistency_residual(&self, i0: u64) -> f64 {
        (0..self.grid.len())
            .map(|i| {
                let rebuilt = i0 as f64 + self.a_bar[i] + self.b_bar[i] - self.r_bar[i];
                (self.i_bar[i] - rebuilt).abs() / self.i_bar[i].max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

pub fn expected_infected(tab: &IntegralTable, i0: u64) -> Vec<f64> {
    tab.s
        .iter()
        .zip(&tab.n_fn)
        .map(|(&s, &n)| s.exp() * (i0 as f64 + n))
        .collect()
}

/// Ī at an arbitrary time inside interval `i` of the table grid.
fn infected_within(sc: &Scenario, tab: &IntegralTable, i: usize, t: f64) -> f64 {
    let a = tab.grid[i];
    let ew = |u: f64| sc.nu.value(u) * (-exact_s(sc, u)).exp();
    let n_local = (t - a) / 6.0 * (ew(a) + 4.0 * ew(0.5 * (a + t)) + ew(t));
    exact_s(sc, t).exp() * (sc.i0 as f64 + tab.n_fn[i] + n_local)
}

/// (Ā, B̄, R̄) on the table grid. Ā is exact; B̄ = ∫λĪ and R̄ = ∫μĪ use
/// composite Simpson.
pub fn expected_cumulatives(tab: &IntegralTable, sc: &Scenario, i_bar: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let a_bar: Vec<f64> = tab.grid.iter().map(|&t| sc.nu.integral_unchecked(0.0, t)).collect();
    let weighted = |r| Nodal::weighted(&tab.grid, r, i_bar);
    let b_bar = simpson_cumulative(&tab.grid, &weighted(&sc.lambda), |i, t| {
        sc.lambda.value(t) * infected_within(sc, tab, i, t)
    });
    let r_bar = simpson_cumulative(&tab.grid, &weighted(&sc.mu), |i, t| {
        sc.mu.value(t) * infected_within(sc, tab, i, t)
    });
    (a_bar, b_bar, r_bar)
}

/// Expected daily new infections (internal + external) and recoveries.
pub fn daily_counts(tab: &IntegralTable, sc: &Scenario, i_bar: &[f64]) -> Result<DailyCounts> {
    let (a, b, r) = expected_cumulatives(tab, sc, i_bar);
    daily_from_cumulatives(tab, &a, &b, &r)
}

fn daily_from_cumulatives(tab: &IntegralTable, a: &[f64], b: &[f64], r: &[f64]) -> Result<DailyCounts> {
    let days = tab.t_end().floor() as u32;
    let mut out = DailyCounts::default();
    let mut prev = 0;
    for d in 1..=days {
        let i = tab
            .node_index(f64::from(d))
            .ok_or_else(|| Error::Config(format!("day {d} is not a grid node")))?;
        out.day.push(d);
        out.i_new.push(b[i] - b[prev] + a[i] - a[prev]);
        out.r_new.push(r[i] - r[prev]);
        prev = i;
    }
    Ok(out)
}

/// Closed-form approximation of Ī for scenarios whose rates are constant on
/// an initial window with net growth `a0 > 0`.
#[derive(Debug, Clone)]
pub struct ApproxInfected {
    pub a0: f64,
    pub nu0: f64,
    /// `ν₀ / a₀`.
    pub k0: f64,
    pub i_approx: Vec<f64>,
    /// Whether `s(t) <= a₀ t` held on every node, which bounds the neglected
    /// term.
    pub condition_holds: bool,
}

fn initial_level(r: &crate::rates::RateFunction, name: &str) -> Result<f64> {
    match r.segments()[0].shape {
        Shape::Constant { level } => Ok(level),
        Shape::RaisedCosine { .. } => Err(Error::ApproximationInapplicable(format!(
            "{name} is not constant on the initial window"
        ))),
    }
}

/// `Ī ≈ (I₀ + k₀) e^{s} − k₀ e^{s − a₀ t}` with `k₀ = ν₀/a₀`.
pub fn approx_expected_infected(tab: &IntegralTable, sc: &Scenario) -> Result<ApproxInfected> {
    let lambda0 = initial_level(&sc.lambda, "lambda")?;
    let mu0 = initial_level(&sc.mu, "mu")?;
    let nu0 = initial_level(&sc.nu, "nu")?;
    let a0 = lambda0 - mu0;
    if a0 <= 0.0 {
        return Err(Error::ApproximationInapplicable(format!("initial growth rate a0 = {a0} is not positive")));
    }
    let k0 = nu0 / a0;
    let i0 = sc.i0 as f64;
    let i_approx = tab
        .grid
        .iter()
        .zip(&tab.s)
        .map(|(&t, &s)| (i0 + k0) * s.exp() - k0 * (s - a0 * t).exp())
        .collect();
    let condition_holds = tab.grid.iter().zip(&tab.s).all(|(&t, &s)| s <= a0 * t + 1e-12);
    if !condition_holds {
        log::warn!("s(t) exceeds a0*t somewhere on the grid; the approximation's neglected term may not be small");
    }
    Ok(ApproxInfected { a0, nu0, k0, i_approx, condition_holds })
}
