//! The acceptance suite: twelve numbered checks on the running example and on
//! cases with closed-form answers. Used by the `acceptance` test target and by
//! the command-line `validate` command.
//!
//! Monte Carlo sizes come from [`ValidationConfig`]. The late-horizon
//! immigration check runs a reduced ensemble unless
//! `NHBDI_FULL_ACCEPTANCE=1`; `NHBDI_LATE_PATHS` sets the size directly.

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Binomial, Discrete};

use crate::calculus::{build_table, exact_s, Field};
use crate::deterministic::{expected_infected, DeterministicSeries};
use crate::error::Result;
use crate::oracle::{forward_solve, LineageReference};
use crate::pmf;
use crate::scenario::{Scenario, DEFAULT_SEED};
use crate::simulator::{empirical_pmf_distance, histogram_distance, run_ensemble_with, EnsembleOptions};

pub const CRITERIA: [(u8, &str); 12] = [
    (1, "L-M identity"),
    (2, "homogeneous reductions"),
    (3, "consistency identity"),
    (4, "s(t1) and decay horizon"),
    (5, "alpha/beta trajectory"),
    (6, "CV plateau"),
    (7, "PMF vs oracle"),
    (8, "pure-death closed form"),
    (9, "Monte Carlo goodness of fit"),
    (10, "BDI simulation vs references"),
    (11, "peak timing"),
    (12, "extinction limit"),
];

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {:<30} {:>8.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed.as_secs_f64(),
            self.detail
        )
    }
}

#[derive(Debug, Clone)]
pub struct ValidationConfig {
    /// Paths for the t = 8 and t = 20 checks.
    pub paths: u64,
    /// Paths for the t ≤ 500 immigration check.
    pub late_paths: u64,
    /// Draws from the lineage reference per snapshot.
    pub reference_samples: u64,
    pub seed: u64,
}

pub const REDUCED_LATE_PATHS: u64 = 2_000;

impl Default for ValidationConfig {
    fn default() -> Self {
        Self { paths: 100_000, late_paths: REDUCED_LATE_PATHS, reference_samples: 100_000, seed: DEFAULT_SEED }
    }
}

impl ValidationConfig {
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if std::env::var("NHBDI_FULL_ACCEPTANCE").is_ok_and(|v| v == "1") {
            cfg.late_paths = cfg.paths;
        }
        if let Some(n) = std::env::var("NHBDI_LATE_PATHS").ok().and_then(|v| v.parse().ok()) {
            cfg.late_paths = n;
        }
        cfg
    }
}

/// Outcome of a check body: pass flag and a one-line detail.
type Check = Result<(bool, String)>;

pub fn run_criterion(id: u8, cfg: &ValidationConfig) -> CriterionResult {
    let start = Instant::now();
    let outcome = match id {
        1 => identity(),
        2 => homogeneous(),
        3 => consistency(),
        4 => growth_and_horizon(),
        5 => alpha_beta_trajectory(),
        6 => cv_plateau(),
        7 => pmf_vs_oracle(),
        8 => pure_death(),
        9 => goodness_of_fit(cfg),
        10 => immigration_simulation(cfg),
        11 => peak_timing(),
        12 => extinction_limit(),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    if let Some(limit) = runtime_limit(id) {
        if elapsed > limit {
            passed = false;
            detail.push_str(&format!("; runtime {:.2}s over {}s", elapsed.as_secs_f64(), limit.as_secs()));
        }
    }
    let name = CRITERIA.iter().find(|c| c.0 == id).map_or("unknown", |c| c.1);
    CriterionResult { id, name, passed, detail, elapsed }
}

fn runtime_limit(id: u8) -> Option<Duration> {
    match id {
        1..=3 => Some(Duration::from_secs(1)),
        7 => Some(Duration::from_secs(30)),
        9 => Some(Duration::from_secs(60)),
        _ => None,
    }
}

pub fn run_all(cfg: &ValidationConfig) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|&(id, _)| run_criterion(id, cfg)).collect()
}

fn rel_err(x: f64, want: f64) -> f64 {
    if want == 0.0 {
        x.abs()
    } else {
        ((x - want) / want).abs()
    }
}

fn bd_example(delay: f64) -> Scenario {
    Scenario::running_example(delay, 0.0, 1)
}

fn identity() -> Check {
    let tab = build_table(&bd_example(10.0))?;
    let r = tab.identity_residual();
    Ok((r < 1e-8, format!("max |L-M-(1-e^-s)| = {r:.2e} (< 1e-8)")))
}

fn homogeneous() -> Check {
    let (lam, mu, nu) = (0.3, 0.1, 0.2);
    let a = lam - mu;
    let sc = Scenario::homogeneous(lam, mu, nu, 1, 40.0)?;
    let tab = build_table(&sc)?;
    let ibar = expected_infected(&tab, 1);
    let mut worst: f64 = 0.0;
    for (i, &t) in tab.grid.iter().enumerate() {
        let decay = 1.0 - (-a * t).exp();
        let growth = (a * t).exp();
        worst = worst
            .max(rel_err(tab.sigma[i], decay / a))
            .max(rel_err(tab.l_fn[i], lam / a * decay))
            .max(rel_err(tab.m_fn[i], mu / a * decay))
            .max(rel_err(ibar[i], growth + nu / a * (growth - 1.0)));
    }
    Ok((worst < 1e-8, format!("max relative error of Sigma, L, M, I-bar = {worst:.2e} (< 1e-8)")))
}

fn consistency() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (nu, i0) in [(0.0, 1), (0.2, 0), (0.2, 1)] {
        let sc = Scenario::running_example(10.0, nu, i0);
        let tab = build_table(&sc)?;
        let r = DeterministicSeries::compute(&sc, &tab)?.consistency_residual(i0);
        ok &= r < 1e-6;
        parts.push(format!("nu={nu},I0={i0}: {r:.1e}"));
    }
    Ok((ok, format!("relative residual {} (< 1e-6)", parts.join(", "))))
}

/// First `t > after` with `s(t) = 0`, by bisection on the exact s.
fn decay_root(sc: &Scenario, after: f64) -> Option<f64> {
    let mut lo = after;
    let mut hi = after;
    while exact_s(sc, hi) > 0.0 {
        lo = hi;
        hi += 10.0;
        if hi > 1e5 {
            return None;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if exact_s(sc, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn growth_and_horizon() -> Check {
    let step = bd_example(0.0);
    let s50 = exact_s(&step, 50.0);
    let root = decay_root(&step, 50.0).unwrap_or(f64::NAN);
    let smooth_root = decay_root(&bd_example(10.0), 60.0).unwrap_or(f64::NAN);
    let ok = (s50 - 10.0).abs() <= 1e-10 && (root - 300.0).abs() <= 2.0;
    Ok((ok, format!("d=0: s(50) = {s50:.12}, s root at t = {root:.4} (300 +/- 2); d=10 root at {smooth_root:.2} (informational)")))
}

fn alpha_beta_trajectory() -> Check {
    let tab = build_table(&bd_example(10.0))?;
    let mut worst: f64 = 0.0;
    for (i, &t) in tab.grid.iter().enumerate() {
        if (25.0..=150.0).contains(&t) {
            let m = tab.m_fn[i];
            worst = worst.max((m / (1.0 + m) - 1.0 / 3.0).abs());
        }
    }
    let end = pmf::alpha_beta(&tab, 500.0)?;
    let ok = worst < 0.01 && (end.beta - 0.6).abs() < 0.01 && end.alpha > 0.99;
    Ok((
        ok,
        format!(
            "max |alpha-1/3| on [25,150] = {worst:.2e}; beta(500) = {:.5}; alpha(500) = {:.5}",
            end.beta, end.alpha
        ),
    ))
}

fn cv_plateau() -> Check {
    let tab = build_table(&bd_example(10.0))?;
    let cv: Vec<f64> = (0..tab.len()).map(|i| (tab.l_fn[i] + tab.m_fn[i]).sqrt()).collect();
    let (lo, hi) = (2f64.sqrt() - 0.04, 2f64.sqrt() + 0.04);
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut rising = true;
    for i in 0..tab.len() {
        let t = tab.grid[i];
        if (25.0..=150.0).contains(&t) {
            min = min.min(cv[i]);
            max = max.max(cv[i]);
        }
        if t > 250.0 && cv[i] < cv[i - 1] {
            rising = false;
        }
    }
    // cross-check the table-level expression against the moments API
    let via_api = pmf::moments(&tab, 100.0, 1)?.cv;
    let at_100 = cv[tab.node_index(100.0).expect("integer days are nodes")];
    let ok = min >= lo && max <= hi && rising && (via_api - at_100).abs() < 1e-12;
    Ok((ok, format!("cv on [25,150] in [{min:.4}, {max:.4}] (within [{lo:.3}, {hi:.3}]); rising after 250: {rising}")))
}

fn pmf_vs_oracle() -> Check {
    let sc = bd_example(10.0);
    let tab = build_table(&sc)?;
    let slice = pmf::pmf(&tab, 8.0, 1, 400)?;
    let q = forward_solve(&sc, 8.0, 400)?;
    let worst = slice.p.iter().zip(&q.q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok((worst < 1e-5 && q.leaked < 1e-8, format!("max |P_k - q_k| = {worst:.2e} (< 1e-5); leaked = {:.1e}", q.leaked)))
}

fn pure_death() -> Check {
    let sc = Scenario::homogeneous(0.0, 0.1, 0.0, 5, 10.0)?;
    let tab = build_table(&sc)?;
    let slice = pmf::pmf(&tab, 10.0, 5, 5)?;
    let bin = Binomial::new((-1.0f64).exp(), 5).expect("valid binomial");
    let worst = (0..=5).map(|k| (slice.p[k] - bin.pmf(k as u64)).abs()).fold(0.0, f64::max);
    Ok((worst < 1e-10, format!("max |P_k - Binomial(5, e^-1)| = {worst:.2e} (< 1e-10)")))
}

fn goodness_of_fit(cfg: &ValidationConfig) -> Check {
    let mut sc = Scenario::homogeneous(0.12, 0.1, 0.0, 1, 20.0)?;
    sc.master_seed = cfg.seed;
    let opts = EnsembleOptions { snapshot_times: Some(vec![20.0]), replications: Some(cfg.paths), ..Default::default() };
    let summary = run_ensemble_with(&sc, &opts)?.summary;
    let tab = build_table(&sc)?;
    let slice = pmf::pmf(&tab, 20.0, 1, 5_000)?;
    let tv = empirical_pmf_distance(&summary, &slice)?;
    let alpha = slice.alpha_beta.alpha;
    let n = cfg.paths as f64;
    let sigma = (alpha * (1.0 - alpha) / n).sqrt();
    let ext = summary.extinction_fraction[0];
    let z = (ext - alpha) / sigma;
    let ok = tv < 0.01 && z.abs() <= 3.0;
    Ok((ok, format!("{} paths: TV = {tv:.4} (< 0.01); extinct {ext:.4} vs alpha {alpha:.4} ({z:+.2} sigma)", cfg.paths)))
}

fn immigration_simulation(cfg: &ValidationConfig) -> Check {
    let mut sc = Scenario::running_example(10.0, 0.2, 1);
    sc.master_seed = cfg.seed;
    let mut parts = Vec::new();
    let mut ok = true;

    // early horizon against the forward equations
    let mut early = sc.clone();
    early.t_end = 8.0;
    let opts = EnsembleOptions { snapshot_times: Some(vec![8.0]), replications: Some(cfg.paths), ..Default::default() };
    let summary = run_ensemble_with(&early, &opts)?.summary;
    let q = forward_solve(&early, 8.0, 400)?;
    let tv = histogram_distance(summary.histogram(8.0)?, &q.q, q.leaked);
    ok &= tv < 0.015;
    parts.push(format!("t=8 TV {tv:.4} ({} paths)", cfg.paths));

    // late horizon against the lineage decomposition
    let times = [50.0, 150.0, 300.0, 500.0];
    let opts = EnsembleOptions {
        snapshot_times: Some(times.to_vec()),
        replications: Some(cfg.late_paths),
        ..Default::default()
    };
    let summary = run_ensemble_with(&sc, &opts)?.summary;
    let tab = build_table(&sc)?;
    let reference = LineageReference::new(&sc, &tab);
    let n = cfg.late_paths as f64;

    let p0 = reference.extinction_probability(500.0)?;
    let ext = summary.histogram(500.0)?.mass(0);
    let z = (ext - p0) / (p0 * (1.0 - p0) / n).sqrt();
    ok &= z.abs() <= 3.0;
    parts.push(format!("P(I(500)=0) {ext:.4} vs {p0:.4} ({z:+.2} sigma)"));

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let m = cfg.reference_samples as f64;
    for &t in &times[..3] {
        let mut draws = (0..cfg.reference_samples).map(|_| reference.sample(t, &mut rng)).collect::<Result<Vec<u64>>>()?;
        draws.sort_unstable();
        let median = draws[(draws.len() - 1) / 2];
        let p_ref = draws.partition_point(|&x| x <= median) as f64 / m;
        let h = summary.histogram(t)?;
        let p_sim = h.cdf(median);
        let sigma = (p_ref * (1.0 - p_ref) * (1.0 / n + 1.0 / m)).sqrt();
        let z = (p_sim - p_ref) / sigma;
        ok &= z.abs() <= 3.0;
        parts.push(format!("t={t}: median {} vs ref {median} ({z:+.2} sigma)", h.quantile(0.5)));
    }
    parts.insert(1, format!("{} late paths", cfg.late_paths));
    Ok((ok, parts.join("; ")))
}

fn peak_timing() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    let want = 50.0 + 10.0 * (-2.0f64 / 3.0).acos() / std::f64::consts::PI;
    for (d, target, tol) in [(10.0, want, 0.02), (0.0, 50.0, 0.0)] {
        let sc = bd_example(d);
        let tab = build_table(&sc)?;
        let ibar = expected_infected(&tab, 1);
        let arg = (0..ibar.len()).fold(0, |b, i| if ibar[i] > ibar[b] { i } else { b });
        let t = tab.grid[arg];
        ok &= (t - target).abs() <= tol;
        parts.push(format!("d={d}: argmax {t:.4} (target {target:.4} +/- {tol})"));
    }
    Ok((ok, parts.join("; ")))
}

fn extinction_limit() -> Check {
    let sc = bd_example(10.0);
    let tab = build_table(&sc)?;
    let mut prev = 0.0;
    let mut monotone = true;
    let mut last = 0.0;
    for (i, &t) in tab.grid.iter().enumerate() {
        if t <= 60.0 {
            continue;
        }
        let ab = pmf::AlphaBeta { t, alpha: tab.m_fn[i] / (1.0 + tab.m_fn[i]), beta: tab.l_fn[i] / (1.0 + tab.m_fn[i]) };
        let p0 = pmf::pmf_from_alpha_beta(&ab, 1, 1).p[0];
        monotone &= p0 >= prev;
        prev = p0;
        last = p0;
    }
    let at_500 = tab.interp(Field::M, 500.0)?;
    Ok((monotone && last > 0.99, format!("P_0 nondecreasing after 60: {monotone}; P_0(500) = {last:.5} (M = {at_500:.1})")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_criteria_pass() {
        let cfg = ValidationConfig::default();
        for id in [1, 2, 3, 4, 5, 6, 7, 8, 11, 12] {
            let r = run_criterion(id, &cfg);
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn unknown_criterion_fails() {
        let r = run_criterion(13, &ValidationConfig::default());
        assert!(!r.passed);
        assert_eq!(r.name, "unknown");
    }

    #[test]
    fn decay_root_of_step_decree() {
        let root = decay_root(&bd_example(0.0), 50.0).unwrap();
        assert!((root - 300.0).abs() < 1e-9);
    }
}
