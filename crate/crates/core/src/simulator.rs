//! Event-driven Monte Carlo of the birth–death–immigration process.
//!
//! Paths are generated by thinning against a majorant that is constant over a
//! lookahead window: from state `k` the candidate rate is
//! `k·sup λ + k·sup μ + sup ν` over the window, and a candidate at time `τ`
//! is kept with probability `(kλ(τ) + kμ(τ) + ν(τ)) / majorant`. The same
//! uniform then selects the event type. When every rate is constant on the
//! window the acceptance test is skipped.
//!
//! Ensembles aggregate into integer histograms, so the summary does not
//! depend on how paths are scheduled across threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pmf::PmfSlice;
use crate::scenario::Scenario;

/// Default lookahead window for the thinning majorant, in days.
pub const DEFAULT_WINDOW: f64 = 5.0;
/// A single path aborts after this many events.
pub const EVENT_LIMIT: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    ExternalArrival,
    InternalBirth,
    Death,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::ExternalArrival => "external_arrival",
            EventKind::InternalBirth => "internal_birth",
            EventKind::Death => "death",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub population_after: u64,
}

/// Receives the events of one path in time order.
pub trait Observer {
    fn event(&mut self, time: f64, kind: EventKind, population_after: u64);
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventLog {
    pub events: Vec<Event>,
    pub initial: u64,
    pub horizon: f64,
}

impl Observer for EventLog {
    fn event(&mut self, time: f64, kind: EventKind, population_after: u64) {
        self.events.push(Event { time, kind, population_after });
    }
}

impl EventLog {
    fn new(initial: u64, horizon: f64) -> Self {
        Self { events: Vec::new(), initial, horizon }
    }

    /// `(arrivals, births, deaths)`.
    pub fn counts(&self) -> (u64, u64, u64) {
        let mut c = (0, 0, 0);
        for e in &self.events {
            match e.kind {
                EventKind::ExternalArrival => c.0 += 1,
                EventKind::InternalBirth => c.1 += 1,
                EventKind::Death => c.2 += 1,
            }
        }
        c
    }

    pub fn final_population(&self) -> u64 {
        self.events.last().map_or(self.initial, |e| e.population_after)
    }

    /// `I(t)`, right-continuous.
    pub fn population_at(&self, t: f64) -> u64 {
        let n = self.events.partition_point(|e| e.time <= t);
        if n == 0 {
            self.initial
        } else {
            self.events[n - 1].population_after
        }
    }

    /// Checks `I = I0 + A + B − R` after every event, along with time
    /// ordering and unit steps.
    pub fn check_conservation(&self) -> bool {
        let (mut a, mut b, mut r) = (0i64, 0i64, 0i64);
        let mut prev_t = 0.0;
        let mut prev_pop = self.initial as i64;
        for e in &self.events {
            if !(e.time > prev_t || (prev_t == 0.0 && e.time > 0.0)) || e.time > self.horizon {
                return false;
            }
            let step = match e.kind {
                EventKind::ExternalArrival => {
                    a += 1;
                    1
                }
                EventKind::InternalBirth => {
                    b += 1;
                    1
                }
                EventKind::Death => {
                    r += 1;
                    -1
                }
            };
            let pop = e.population_after as i64;
            if pop != prev_pop + step || pop != self.initial as i64 + a + b - r {
                return false;
            }
            prev_t = e.time;
            prev_pop = pop;
        }
        true
    }
}

/// Per-path seed: SplitMix64 of the master seed, offset by the path index and
/// mixed again. Adding paths never changes earlier seeds.
pub fn path_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed).wrapping_add(index))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Majorant data for one lookahead window.
struct Window {
    end: f64,
    lambda: f64,
    mu: f64,
    nu: f64,
    flat: bool,
}

fn window(sc: &Scenario, t: f64, width: f64, horizon: f64) -> Result<Window> {
    let end = (t + width).min(horizon);
    Ok(Window {
        end,
        lambda: sc.lambda.sup_on(t, end)?,
        mu: sc.mu.sup_on(t, end)?,
        nu: sc.nu.sup_on(t, end)?,
        flat: sc.lambda.is_flat_on(t, end) && sc.mu.is_flat_on(t, end) && sc.nu.is_flat_on(t, end),
    })
}

/// Runs one path up to `sc.t_end`, reporting events to `obs`. Returns the
/// final population.
pub fn simulate_observed<O: Observer>(sc: &Scenario, seed: u64, width: f64, obs: &mut O) -> Result<u64> {
    if width.is_nan() || width <= 0.0 {
        return Err(Error::Config(format!("lookahead window must be positive, got {width}")));
    }
    let horizon = sc.t_end;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    let mut k = sc.i0;
    let mut n_events = 0u64;
    let mut win = window(sc, t, width, horizon)?;

    while t < horizon {
        if k == 0 && sc.nu.sup_on(t, horizon)? == 0.0 {
            break;
        }
        let kf = k as f64;
        let bar = kf * (win.lambda + win.mu) + win.nu;
        let cand = if bar > 0.0 { t - (1.0 - rng.random::<f64>()).ln() / bar } else { f64::INFINITY };
        if cand > win.end {
            t = win.end;
            if t >= horizon {
                break;
            }
            win = window(sc, t, width, horizon)?;
            continue;
        }
        t = cand;
        let u = rng.random::<f64>() * bar;
        let (lam, mu, nu) = if win.flat {
            (win.lambda, win.mu, win.nu)
        } else {
            let rates = (sc.lambda.value(t), sc.mu.value(t), sc.nu.value(t));
            if u >= kf * (rates.0 + rates.1) + rates.2 {
                continue;
            }
            rates
        };
        let kind = if u < kf * lam {
            k += 1;
            EventKind::InternalBirth
        } else if u < kf * lam + nu {
            k += 1;
            EventKind::ExternalArrival
        } else {
            debug_assert!(mu > 0.0 && k > 0);
            k -= 1;
            EventKind::Death
        };
        obs.event(t, kind, k);
        n_events += 1;
        if n_events >= EVENT_LIMIT {
            return Err(Error::EventLimit { limit: EVENT_LIMIT, time: t });
        }
    }
    Ok(k)
}

/// One full event log with the default window.
pub fn simulate_path(sc: &Scenario, seed: u64) -> Result<EventLog> {
    let mut log = EventLog::new(sc.i0, sc.t_end);
    simulate_observed(sc, seed, DEFAULT_WINDOW, &mut log)?;
    Ok(log)
}

/// Integer-valued histogram.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Histogram {
    counts: BTreeMap<u64, u64>,
}

impl Histogram {
    pub fn add(&mut self, value: u64) {
        *self.counts.entry(value).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: Histogram) {
        for (v, c) in other.counts {
            *self.counts.entry(v).or_insert(0) += c;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count(&self, value: u64) -> u64 {
        self.counts.get(&value).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&v, &c)| (v, c))
    }

    /// Empirical mass at `value`.
    pub fn mass(&self, value: u64) -> f64 {
        self.count(value) as f64 / self.total() as f64
    }

    /// Share of observations `<= value`.
    pub fn cdf(&self, value: u64) -> f64 {
        self.counts.range(..=value).map(|(_, &c)| c).sum::<u64>() as f64 / self.total() as f64
    }

    pub fn mean(&self) -> f64 {
        let n = self.total() as f64;
        self.iter().map(|(v, c)| v as f64 * c as f64).sum::<f64>() / n
    }

    /// Sample standard deviation.
    pub fn sd(&self) -> f64 {
        let n = self.total() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let m = self.mean();
        let ss: f64 = self.iter().map(|(v, c)| c as f64 * (v as f64 - m).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    }

    /// Smallest value whose cumulative share reaches `q`.
    pub fn quantile(&self, q: f64) -> u64 {
        let n = self.total();
        let need = ((q * n as f64).ceil() as u64).clamp(1, n.max(1));
        let mut cum = 0;
        for (v, c) in self.iter() {
            cum += c;
            if cum >= need {
                return v;
            }
        }
        0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyStat {
    pub day: u32,
    pub mean: f64,
    pub sd: f64,
    pub q05: u64,
    pub q50: u64,
    pub q95: u64,
}

impl DailyStat {
    fn from_histogram(day: u32, h: &Histogram) -> Self {
        Self { day, mean: h.mean(), sd: h.sd(), q05: h.quantile(0.05), q50: h.quantile(0.5), q95: h.quantile(0.95) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSummary {
    pub replications: u64,
    pub horizon: f64,
    pub master_seed: u64,
    pub snapshot_times: Vec<f64>,
    pub empirical_pmf: Vec<Histogram>,
    pub extinction_fraction: Vec<f64>,
    pub daily_new_infections: Vec<DailyStat>,
    pub daily_new_recoveries: Vec<DailyStat>,
}

impl EmpiricalSummary {
    pub fn snapshot_index(&self, t: f64) -> Option<usize> {
        self.snapshot_times.iter().position(|&s| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    pub fn histogram(&self, t: f64) -> Result<&Histogram> {
        let i = self.snapshot_index(t).ok_or_else(|| Error::Usage(format!("no snapshot at t = {t}")))?;
        Ok(&self.empirical_pmf[i])
    }

    pub fn median(&self, t: f64) -> Result<u64> {
        Ok(self.histogram(t)?.quantile(0.5))
    }

    pub fn quantile(&self, t: f64, q: f64) -> Result<u64> {
        Ok(self.histogram(t)?.quantile(q))
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleOptions {
    /// Defaults to every integer day up to the horizon.
    pub snapshot_times: Option<Vec<f64>>,
    pub window: f64,
    /// Event logs kept for the first paths.
    pub keep_paths: usize,
    /// Private thread pool size; the global pool otherwise.
    pub threads: Option<usize>,
    /// Overrides `sc.replications`.
    pub replications: Option<u64>,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        Self { snapshot_times: None, window: DEFAULT_WINDOW, keep_paths: 0, threads: None, replications: None }
    }
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    pub summary: EmpiricalSummary,
    pub paths: Vec<EventLog>,
}

/// Per-path recorder of snapshots and daily counts over `(d−1, d]`.
struct Recorder<'a> {
    times: &'a [f64],
    next: usize,
    current: u64,
    snapshots: Vec<u64>,
    infections: Vec<u64>,
    recoveries: Vec<u64>,
}

impl<'a> Recorder<'a> {
    fn new(times: &'a [f64], initial: u64, days: usize) -> Self {
        Self {
            times,
            next: 0,
            current: initial,
            snapshots: Vec::with_capacity(times.len()),
            infections: vec![0; days],
            recoveries: vec![0; days],
        }
    }

    fn finish(mut self) -> Self {
        while self.next < self.times.len() {
            self.snapshots.push(self.current);
            self.next += 1;
        }
        self
    }
}

impl Observer for Recorder<'_> {
    fn event(&mut self, time: f64, kind: EventKind, population_after: u64) {
        while self.next < self.times.len() && self.times[self.next] < time {
            self.snapshots.push(self.current);
            self.next += 1;
        }
        self.current = population_after;
        let day = time.ceil() as usize;
        if day >= 1 && day <= self.infections.len() {
            match kind {
                EventKind::Death => self.recoveries[day - 1] += 1,
                _ => self.infections[day - 1] += 1,
            }
        }
    }
}

struct Aggregate {
    snapshots: Vec<Histogram>,
    infections: Vec<Histogram>,
    recoveries: Vec<Histogram>,
}

impl Aggregate {
    fn new(n_snap: usize, days: usize) -> Self {
        Self {
            snapshots: vec![Histogram::default(); n_snap],
            infections: vec![Histogram::default(); days],
            recoveries: vec![Histogram::default(); days],
        }
    }

    fn add(&mut self, rec: Recorder) {
        for (h, v) in self.snapshots.iter_mut().zip(rec.snapshots) {
            h.add(v);
        }
        for (h, v) in self.infections.iter_mut().zip(rec.infections) {
            h.add(v);
        }
        for (h, v) in self.recoveries.iter_mut().zip(rec.recoveries) {
            h.add(v);
        }
    }

    fn merge(mut self, other: Aggregate) -> Self {
        for (a, b) in self.snapshots.iter_mut().zip(other.snapshots) {
            a.merge(b);
        }
        for (a, b) in self.infections.iter_mut().zip(other.infections) {
            a.merge(b);
        }
        for (a, b) in self.recoveries.iter_mut().zip(other.recoveries) {
            a.merge(b);
        }
        self
    }
}

/// Ensemble with default options and `sc.replications` paths.
pub fn run_ensemble(sc: &Scenario) -> Result<EmpiricalSummary> {
    Ok(run_ensemble_with(sc, &EnsembleOptions::default())?.summary)
}

pub fn run_ensemble_with(sc: &Scenario, opts: &EnsembleOptions) -> Result<Ensemble> {
    match opts.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| ensemble_inner(sc, opts))
        }
        None => ensemble_inner(sc, opts),
    }
}

fn ensemble_inner(sc: &Scenario, opts: &EnsembleOptions) -> Result<Ensemble> {
    sc.validate()?;
    let reps = opts.replications.unwrap_or(sc.replications);
    if reps == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    let horizon = sc.t_end;
    let times: Vec<f64> = match &opts.snapshot_times {
        Some(ts) => {
            let mut ts = ts.clone();
            if ts.iter().any(|&t| !(0.0..=horizon).contains(&t)) {
                return Err(Error::Range { t: ts.iter().cloned().fold(f64::NAN, f64::max), end: horizon });
            }
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            ts
        }
        None => (0..=horizon.floor() as u64).map(|d| d as f64).collect(),
    };
    let days = horizon.floor() as usize;
    let master = sc.master_seed;

    let agg = (0..reps)
        .into_par_iter()
        .try_fold(
            || Aggregate::new(times.len(), days),
            |mut acc, i| {
                let mut rec = Recorder::new(&times, sc.i0, days);
                simulate_observed(sc, path_seed(master, i), opts.window, &mut rec)?;
                acc.add(rec.finish());
                Ok::<_, Error>(acc)
            },
        )
        .try_reduce(|| Aggregate::new(times.len(), days), |a, b| Ok(a.merge(b)))?;

    let paths = (0..(opts.keep_paths as u64).min(reps))
        .into_par_iter()
        .map(|i| {
            let mut log = EventLog::new(sc.i0, horizon);
            simulate_observed(sc, path_seed(master, i), opts.window, &mut log)?;
            Ok(log)
        })
        .collect::<Result<Vec<_>>>()?;

    let extinction_fraction = agg.snapshots.iter().map(|h| h.mass(0)).collect();
    let stats = |hs: &[Histogram]| hs.iter().enumerate().map(|(d, h)| DailyStat::from_histogram(d as u32 + 1, h)).collect();
    let summary = EmpiricalSummary {
        replications: reps,
        horizon,
        master_seed: master,
        snapshot_times: times,
        daily_new_infections: stats(&agg.infections),
        daily_new_recoveries: stats(&agg.recoveries),
        empirical_pmf: agg.snapshots,
        extinction_fraction,
    };
    Ok(Ensemble { summary, paths })
}

/// Total-variation distance between the snapshot histogram at `analytic.t`
/// and the analytic PMF, with mass beyond the PMF's support in one bucket.
pub fn empirical_pmf_distance(summary: &EmpiricalSummary, analytic: &PmfSlice) -> Result<f64> {
    let h = summary
        .histogram(analytic.t)
        .map_err(|_| Error::Usage(format!("summary has no snapshot at t = {}", analytic.t)))?;
    Ok(histogram_distance(h, &analytic.p, analytic.tail))
}

/// Total-variation distance of a histogram from `p` on `0..p.len()` plus a
/// tail bucket of mass `tail`.
pub fn histogram_distance(h: &Histogram, p: &[f64], tail: f64) -> f64 {
    let n = h.total() as f64;
    let k_max = p.len() as u64;
    let mut sum = 0.0;
    for (k, &pk) in p.iter().enumerate() {
        sum += (h.count(k as u64) as f64 / n - pk).abs();
    }
    let above = h.iter().filter(|&(v, _)| v >= k_max).map(|(_, c)| c).sum::<u64>() as f64 / n;
    0.5 * (sum + (above - tail).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::build_table;
    use crate::deterministic::DeterministicSeries;
    use crate::pmf;

    fn opts(reps: u64, times: Vec<f64>) -> EnsembleOptions {
        EnsembleOptions { snapshot_times: Some(times), replications: Some(reps), ..Default::default() }
    }

    #[test]
    fn pure_death_lifetime_is_exponential() {
        let mut sc = Scenario::homogeneous(0.0, 0.1, 0.0, 1, 400.0).unwrap();
        sc.replications = 100_000;
        let total: f64 = (0..sc.replications)
            .into_par_iter()
            .map(|i| {
                let log = simulate_path(&sc, path_seed(7, i)).unwrap();
                assert_eq!(log.events.len(), 1);
                log.events[0].time
            })
            .sum();
        let mean = total / sc.replications as f64;
        assert!((mean - 10.0).abs() < 0.1, "{mean}");
    }

    #[test]
    fn empty_system_has_no_events() {
        let sc = Scenario::homogeneous(0.3, 0.1, 0.0, 0, 100.0).unwrap();
        assert!(simulate_path(&sc, 1).unwrap().events.is_empty());
    }

    #[test]
    fn paths_conserve_population() {
        let sc = Scenario::running_example(10.0, 0.2, 1);
        let mut short = sc.clone();
        short.t_end = 70.0;
        for i in 0..20 {
            let log = simulate_path(&short, path_seed(3, i)).unwrap();
            assert!(log.check_conservation());
            let (a, b, r) = log.counts();
            assert_eq!(log.final_population(), short.i0 + a + b - r);
        }
    }

    #[test]
    fn path_seeds_are_stable_and_distinct() {
        assert_eq!(path_seed(20210122, 0), path_seed(20210122, 0));
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|i| path_seed(20210122, i)).collect();
        assert_eq!(seeds.len(), 10_000);
    }

    #[test]
    fn summary_is_independent_of_thread_count() {
        let mut sc = Scenario::running_example(10.0, 0.2, 1);
        sc.t_end = 30.0;
        let mut a = opts(2_000, vec![5.0, 10.0, 30.0]);
        a.threads = Some(1);
        let mut b = a.clone();
        b.threads = Some(4);
        let ra = run_ensemble_with(&sc, &a).unwrap().summary;
        let rb = run_ensemble_with(&sc, &b).unwrap().summary;
        assert_eq!(ra, rb);
        assert_eq!(format!("{ra:?}"), format!("{rb:?}"));
    }

    #[test]
    fn histograms_are_normalised_and_quantiles_ordered() {
        let mut sc = Scenario::running_example(10.0, 0.2, 1);
        sc.t_end = 20.0;
        let s = run_ensemble_with(&sc, &EnsembleOptions { replications: Some(3_000), ..Default::default() })
            .unwrap()
            .summary;
        assert_eq!(s.snapshot_times.len(), 21);
        for h in &s.empirical_pmf {
            assert_eq!(h.total(), 3_000);
        }
        assert_eq!(s.extinction_fraction[0], 0.0);
        for d in s.daily_new_infections.iter().chain(&s.daily_new_recoveries) {
            assert!(d.q05 <= d.q50 && d.q50 <= d.q95);
        }
    }

    #[test]
    fn daily_recoveries_match_expectation() {
        let mut sc = Scenario::homogeneous(0.12, 0.1, 0.2, 1, 100.0).unwrap();
        sc.replications = 100_000;
        let s = run_ensemble_with(&sc, &opts(sc.replications, vec![100.0])).unwrap().summary;
        let tab = build_table(&sc).unwrap();
        let det = DeterministicSeries::compute(&sc, &tab).unwrap();
        let n = sc.replications as f64;
        let mut outside = 0;
        for (stat, &want) in s.daily_new_recoveries.iter().zip(&det.daily.r_new) {
            let se = stat.sd / n.sqrt();
            if (stat.mean - want).abs() > 3.0 * se {
                outside += 1;
            }
        }
        // a few 3σ excursions are expected among 100 days
        assert!(outside <= 3, "{outside} days outside 3 SE");
        let mut worst: f64 = 0.0;
        for (stat, &want) in s.daily_new_infections.iter().zip(&det.daily.i_new) {
            worst = worst.max(((stat.mean - want) / (stat.sd / n.sqrt())).abs());
        }
        assert!(worst < 5.0, "{worst}");
    }

    #[test]
    fn homogeneous_bd_goodness_of_fit() {
        let sc = Scenario::homogeneous(0.12, 0.1, 0.0, 1, 20.0).unwrap();
        let s = run_ensemble_with(&sc, &opts(100_000, vec![20.0])).unwrap().summary;
        let tab = build_table(&sc).unwrap();
        let p = pmf::pmf(&tab, 20.0, 1, 2_000).unwrap();
        let tv = empirical_pmf_distance(&s, &p).unwrap();
        assert!(tv < 0.01, "{tv}");

        // negative control
        let wrong = Scenario::homogeneous(0.12, 0.2, 0.0, 1, 20.0).unwrap();
        let q = pmf::pmf(&build_table(&wrong).unwrap(), 20.0, 1, 2_000).unwrap();
        assert!(empirical_pmf_distance(&s, &q).unwrap() > 0.05);
    }

    #[test]
    fn distance_to_self_is_zero_and_mismatch_is_usage_error() {
        let sc = Scenario::homogeneous(0.12, 0.1, 0.0, 1, 20.0).unwrap();
        let tab = build_table(&sc).unwrap();
        let p = pmf::pmf(&tab, 20.0, 1, 50).unwrap();
        // integer counts proportional to the analytic masses
        let scale = 1e9;
        let mut exact = Histogram::default();
        for (k, &pk) in p.p.iter().enumerate() {
            exact.counts.insert(k as u64, (pk * scale).round() as u64);
        }
        exact.counts.insert(1_000, (p.tail * scale).round() as u64);
        assert!(histogram_distance(&exact, &p.p, p.tail) < 1e-8);
        let s = run_ensemble_with(&sc, &opts(10, vec![10.0])).unwrap().summary;
        assert!(matches!(empirical_pmf_distance(&s, &p), Err(Error::Usage(_))));
    }

    #[test]
    fn bdi_matches_forward_equations() {
        let mut sc = Scenario::running_example(10.0, 0.2, 1);
        sc.t_end = 8.0;
        let s = run_ensemble_with(&sc, &opts(100_000, vec![8.0])).unwrap().summary;
        let q = crate::oracle::forward_solve(&sc, 8.0, 400).unwrap();
        let tv = histogram_distance(s.histogram(8.0).unwrap(), &q.q, q.leaked);
        assert!(tv < 0.015, "{tv}");
    }

    #[test]
    fn window_width_does_not_change_the_law() {
        // the decree falls inside the horizon so thinning is exercised
        let mut sc = Scenario::running_example(10.0, 0.2, 1);
        sc.lambda = crate::rates::RateFunction::decree(0.3, 0.06, 2.0, 6.0).unwrap();
        sc.t_end = 8.0;
        let q = crate::oracle::forward_solve(&sc, 8.0, 200).unwrap();
        for w in [DEFAULT_WINDOW, 0.5 * DEFAULT_WINDOW, 0.3] {
            let o = EnsembleOptions { window: w, ..opts(40_000, vec![8.0]) };
            let s = run_ensemble_with(&sc, &o).unwrap().summary;
            let tv = histogram_distance(s.histogram(8.0).unwrap(), &q.q, q.leaked);
            assert!(tv < 0.02, "window {w}: {tv}");
        }
    }

    #[test]
    fn kept_paths_match_their_seeds() {
        let mut sc = Scenario::running_example(10.0, 0.2, 1);
        sc.t_end = 15.0;
        let o = EnsembleOptions { keep_paths: 3, ..opts(10, vec![15.0]) };
        let e = run_ensemble_with(&sc, &o).unwrap();
        assert_eq!(e.paths.len(), 3);
        for (i, log) in e.paths.iter().enumerate() {
            assert_eq!(log, &simulate_path(&sc, path_seed(sc.master_seed, i as u64)).unwrap());
        }
        let log = &e.paths[0];
        assert_eq!(log.population_at(15.0), log.final_population());
        assert_eq!(log.population_at(0.0), sc.i0);
    }
}
