//! Gridded central functions of the model:
//!
//! * `s(t) = ∫₀ᵗ (λ − μ)` (exact at every node),
//! * `Σ(t) = ∫₀ᵗ e^{−s}`, `N(t) = ∫₀ᵗ ν e^{−s}`,
//! * `L(t) = ∫₀ᵗ λ e^{−s}`, `M(t) = ∫₀ᵗ μ e^{−s}`.
//!
//! The exponential-weight integrals use composite Simpson with the midpoint
//! of every grid interval evaluated exactly, so each node is a Simpson node.
//! The grid step never exceeds `dt`; segment boundaries and integer days are
//! always grid nodes.

use crate::error::{Error, Result};
use crate::scenario::{Scenario, MAX_GRID_STEPS};

/// |s| beyond which `e^{-s}` is clamped.
pub const S_CLAMP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    S,
    Sigma,
    N,
    L,
    M,
}

#[derive(Debug, Clone)]
pub struct IntegralTable {
    pub grid: Vec<f64>,
    pub s: Vec<f64>,
    pub sigma: Vec<f64>,
    pub n_fn: Vec<f64>,
    pub l_fn: Vec<f64>,
    pub m_fn: Vec<f64>,
    /// Set when some |s| exceeded [`S_CLAMP`] and `e^{-s}` was clamped.
    pub clamped: bool,
}

/// `s(t)` straight from the segment algebra.
#[inline]
pub fn exact_s(sc: &Scenario, t: f64) -> f64 {
    sc.lambda.integral_unchecked(0.0, t) - sc.mu.integral_unchecked(0.0, t)
}

#[inline]
fn weight(s: f64) -> f64 {
    (-s.clamp(-S_CLAMP, S_CLAMP)).exp()
}

/// Grid nodes on `[0, t_end]`: integer days and rate breakpoints are forced,
/// each span between forced nodes is split uniformly with step `<= dt`.
pub fn build_grid(sc: &Scenario) -> Result<Vec<f64>> {
    sc.validate()?;
    let mut forced: Vec<f64> = vec![0.0, sc.t_end];
    forced.extend(sc.breakpoints().into_iter().filter(|&b| b > 0.0 && b < sc.t_end));
    let mut day = 1.0;
    while day < sc.t_end {
        forced.push(day);
        day += 1.0;
    }
    forced.sort_by(f64::total_cmp);
    forced.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));

    let mut grid = Vec::with_capacity((sc.t_end / sc.dt) as usize + forced.len() + 1);
    grid.push(0.0);
    for w in forced.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = ((b - a) / sc.dt - 1e-9).ceil().max(1.0);
        if grid.len() as f64 + m > MAX_GRID_STEPS + 1.0 {
            return Err(Error::Config(format!("integral grid exceeds {MAX_GRID_STEPS:.0} nodes")));
        }
        let m = m as usize;
        for i in 1..m {
            grid.push(a + (b - a) * i as f64 / m as f64);
        }
        grid.push(b);
    }
    Ok(grid)
}

/// Integrand values at the nodes. A rate with a jump at a node has distinct
/// one-sided limits there; `right[i]` opens interval `i`, `left[i]` closes
/// interval `i − 1`.
pub(crate) struct Nodal {
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

impl Nodal {
    /// `rate(t) · weight[i]` with both one-sided limits of the rate.
    pub fn weighted(grid: &[f64], rate: &crate::rates::RateFunction, weight: &[f64]) -> Self {
        Self {
            right: grid.iter().zip(weight).map(|(&t, &w)| rate.value(t) * w).collect(),
            left: grid.iter().zip(weight).map(|(&t, &w)| rate.value_left(t) * w).collect(),
        }
    }

    pub fn continuous(values: Vec<f64>) -> Self {
        Self { left: values.clone(), right: values }
    }
}

/// Cumulative ∫₀^{t_i} f on `grid`, one Simpson panel per interval using the
/// interval midpoint. `f` receives the interval's left node index and the
/// midpoint time.
pub(crate) fn simpson_cumulative(grid: &[f64], nodal: &Nodal, mut f: impl FnMut(usize, f64) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(grid.len());
    out.push(0.0);
    let mut acc = 0.0;
    for i in 1..grid.len() {
        let (a, b) = (grid[i - 1], grid[i]);
        let mid = f(i - 1, 0.5 * (a + b));
        acc += (b - a) / 6.0 * (nodal.right[i - 1] + 4.0 * mid + nodal.left[i]);
        out.push(acc);
    }
    out
}

pub fn build_table(sc: &Scenario) -> Result<IntegralTable> {
    let grid = build_grid(sc)?;
    let s: Vec<f64> = grid.iter().map(|&t| exact_s(sc, t)).collect();
    let clamped = s.iter().any(|v| v.abs() > S_CLAMP);
    if clamped {
        log::warn!("|s(t)| exceeds {S_CLAMP} on the grid; e^(-s) clamped");
    }

    let e: Vec<f64> = s.iter().map(|&v| weight(v)).collect();
    let ew = |r| Nodal::weighted(&grid, r, &e);

    let sigma = simpson_cumulative(&grid, &Nodal::continuous(e.clone()), |_, t| weight(exact_s(sc, t)));
    let n_fn = simpson_cumulative(&grid, &ew(&sc.nu), |_, t| sc.nu.value(t) * weight(exact_s(sc, t)));
    let l_fn = simpson_cumulative(&grid, &ew(&sc.lambda), |_, t| sc.lambda.value(t) * weight(exact_s(sc, t)));
    let m_fn = simpson_cumulative(&grid, &ew(&sc.mu), |_, t| sc.mu.value(t) * weight(exact_s(sc, t)));

    Ok(IntegralTable { grid, s, sigma, n_fn, l_fn, m_fn, clamped })
}

impl IntegralTable {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn t_end(&self) -> f64 {
        *self.grid.last().expect("non-empty grid")
    }

    pub fn field(&self, which: Field) -> &[f64] {
        match which {
            Field::S => &self.s,
            Field::Sigma => &self.sigma,
            Field::N => &self.n_fn,
            Field::L => &self.l_fn,
            Field::M => &self.m_fn,
        }
    }

    /// Index of the node equal to `t`, if any.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let i = self.grid.partition_point(|&g| g < t);
        (i < self.grid.len() && self.grid[i] == t).then_some(i)
    }

    /// Index of the node closest to `t`.
    pub fn nearest_index(&self, t: f64) -> usize {
        let i = self.grid.partition_point(|&g| g < t).min(self.grid.len() - 1);
        if i > 0 && (t - self.grid[i - 1]).abs() < (self.grid[i] - t).abs() {
            i - 1
        } else {
            i
        }
    }

    /// Piecewise-linear interpolation; exact at nodes.
    pub fn interp(&self, which: Field, t: f64) -> Result<f64> {
        let end = self.t_end();
        if t.is_nan() || t < 0.0 || t > end {
            return Err(Error::Range { t, end });
        }
        let v = self.field(which);
        let i = self.grid.partition_point(|&g| g <= t);
        if i == 0 {
            return Ok(v[0]);
        }
        let lo = i - 1;
        if self.grid[lo] == t || lo + 1 == self.grid.len() {
            return Ok(v[lo]);
        }
        let (ta, tb) = (self.grid[lo], self.grid[lo + 1]);
        let w = (t - ta) / (tb - ta);
        Ok(v[lo] + w * (v[lo + 1] - v[lo]))
    }

    /// max_i |L − M − (1 − e^{−s})|.
    pub fn identity_residual(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.l_fn[i] - self.m_fn[i] - (1.0 - (-self.s[i]).exp())).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn homogeneous(lambda: f64, mu: f64, nu: f64, t_end: f64, dt: f64) -> Scenario {
        let mut sc = Scenario::homogeneous(lambda, mu, nu, 1, t_end).unwrap();
        sc.dt = dt;
        sc
    }

    fn rel(a: f64, b: f64) -> f64 {
        if a == b {
            0.0
        } else {
            (a - b).abs() / b.abs()
        }
    }

    #[test]
    fn starts_at_zero() {
        let tab = build_table(&Scenario::running_example(10.0, 0.2, 1)).unwrap();
        for f in [Field::S, Field::Sigma, Field::N, Field::L, Field::M] {
            assert_eq!(tab.field(f)[0], 0.0);
        }
    }

    #[test]
    fn homogeneous_l_and_m_at_unit_exponent() {
        // at = 1 with a = 0.2
        let tab = build_table(&homogeneous(0.3, 0.1, 0.0, 5.0, 0.01)).unwrap();
        let l = tab.interp(Field::L, 5.0).unwrap();
        let m = tab.interp(Field::M, 5.0).unwrap();
        let decay = 1.0 - (-1.0f64).exp();
        assert!((l - 1.5 * decay).abs() < 1e-12);
        assert!((m - 0.5 * decay).abs() < 1e-12);
        assert!((l - 0.94819).abs() < 1e-5);
        assert!((m - 0.31606).abs() < 5e-6);
    }

    #[test]
    fn zero_drift_table() {
        let tab = build_table(&homogeneous(0.2, 0.2, 0.0, 30.0, 0.05)).unwrap();
        for i in 0..tab.len() {
            assert_eq!(tab.s[i], 0.0);
            assert_eq!(tab.n_fn[i], 0.0);
            assert!((tab.sigma[i] - tab.grid[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn homogeneous_closed_forms() {
        let (lambda, mu) = (0.3, 0.1);
        let a = lambda - mu;
        let tab = build_table(&homogeneous(lambda, mu, 0.2, 40.0, 0.01)).unwrap();
        for (i, &t) in tab.grid.iter().enumerate().skip(1) {
            let decay = -(-a * t).exp_m1();
            assert!(rel(tab.sigma[i], decay / a) < 1e-10, "sigma at {t}");
            assert!(rel(tab.l_fn[i], lambda / a * decay) < 1e-10, "L at {t}");
            assert!(rel(tab.m_fn[i], mu / a * decay) < 1e-10, "M at {t}");
            assert!(rel(tab.n_fn[i], 0.2 * tab.sigma[i]) < 1e-12, "N at {t}");
        }
    }

    #[test]
    fn constant_immigration_scales_sigma() {
        let tab = build_table(&Scenario::running_example(10.0, 0.2, 1)).unwrap();
        let worst = tab
            .sigma
            .iter()
            .zip(&tab.n_fn)
            .skip(1)
            .map(|(&s, &n)| rel(n, 0.2 * s))
            .fold(0.0, f64::max);
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn identity_holds_on_running_example() {
        let tab = build_table(&Scenario::running_example(10.0, 0.0, 1)).unwrap();
        assert!(tab.identity_residual() < 1e-8, "{}", tab.identity_residual());
        assert!(!tab.clamped);
    }

    #[test]
    fn identity_holds_across_a_step() {
        let tab = build_table(&Scenario::running_example(0.0, 0.0, 1)).unwrap();
        assert!(tab.identity_residual() < 1e-8, "{}", tab.identity_residual());
    }

    #[test]
    fn monotone_integrals() {
        let tab = build_table(&Scenario::running_example(5.0, 0.2, 1)).unwrap();
        for v in [&tab.sigma, &tab.n_fn, &tab.l_fn, &tab.m_fn] {
            assert!(v.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn simpson_converges_at_fourth_order() {
        let a: f64 = 0.2;
        let err = |dt: f64| {
            let tab = build_table(&homogeneous(0.3, 0.1, 0.0, 20.0, dt)).unwrap();
            tab.grid
                .iter()
                .zip(&tab.sigma)
                .map(|(&t, &sg)| (sg - (1.0 - (-a * t).exp()) / a).abs())
                .fold(0.0, f64::max)
        };
        // integer days are forced nodes, so start at a one-day step
        let (e1, e2, e3) = (err(1.0), err(0.5), err(0.25));
        assert!(e1 / e2 >= 8.0, "{e1} / {e2}");
        assert!(e2 / e3 >= 8.0, "{e2} / {e3}");
    }

    #[test]
    fn grid_contains_forced_nodes() {
        let mut sc = Scenario::running_example(7.5, 0.0, 1);
        sc.dt = 0.3;
        sc.t_end = 80.0;
        let grid = build_grid(&sc).unwrap();
        for t in [50.0, 57.5, 1.0, 79.0, 80.0] {
            assert!(grid.contains(&t), "missing {t}");
        }
        assert!(grid.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 0.3 + 1e-12));
    }

    #[test]
    fn interpolation_contract() {
        let tab = build_table(&Scenario::running_example(10.0, 0.0, 1)).unwrap();
        assert_eq!(tab.interp(Field::S, 0.0).unwrap(), 0.0);
        assert!((tab.interp(Field::S, 50.0).unwrap() - 10.0).abs() < 1e-12);
        let i = 1234;
        assert_eq!(tab.interp(Field::L, tab.grid[i]).unwrap(), tab.l_fn[i]);
        let mid = 0.5 * (tab.grid[i] + tab.grid[i + 1]);
        let lin = 0.5 * (tab.m_fn[i] + tab.m_fn[i + 1]);
        assert!((tab.interp(Field::M, mid).unwrap() - lin).abs() < 1e-15);
        assert!(matches!(tab.interp(Field::S, 500.1), Err(Error::Range { .. })));
        assert!(matches!(tab.interp(Field::S, -1.0), Err(Error::Range { .. })));
    }

    #[test]
    fn oversized_grid_rejected() {
        let mut sc = Scenario::running_example(0.0, 0.0, 1);
        sc.dt = 1e-5;
        assert!(matches!(build_table(&sc), Err(Error::Config(_))));
    }

    #[test]
    fn clamps_extreme_growth() {
        let tab = build_table(&homogeneous(1.0, 0.0, 0.0, 60.0, 0.1)).unwrap();
        assert!(tab.clamped);
        assert!(tab.sigma.iter().all(|v| v.is_finite()));
    }
}
