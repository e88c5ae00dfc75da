//! Piecewise rate functions λ(t), μ(t), ν(t) built from constant and
//! raised-cosine segments. Every segment has a closed-form antiderivative,
//! so cumulative rates are exact and suprema over an interval are exact.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Shape of a rate over one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Constant { level: f64 },
    /// Half cycle of a cosine going from `from` at the segment start to `to`
    /// at the segment end, flat at both ends.
    RaisedCosine { from: f64, to: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    /// `f64::INFINITY` for the final segment.
    pub t_end: f64,
    pub shape: Shape,
}

impl Segment {
    fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }

    fn value(&self, t: f64) -> f64 {
        match self.shape {
            Shape::Constant { level } => level,
            Shape::RaisedCosine { from, to } => {
                let phase = PI * (t - self.t_start) / self.duration();
                to + 0.5 * (from - to) * (1.0 + phase.cos())
            }
        }
    }

    /// Antiderivative measured from the segment start.
    fn primitive(&self, t: f64) -> f64 {
        let u = t - self.t_start;
        match self.shape {
            Shape::Constant { level } => level * u,
            Shape::RaisedCosine { from, to } => {
                let d = self.duration();
                0.5 * (from + to) * u + 0.5 * (from - to) * d / PI * (PI * u / d).sin()
            }
        }
    }

    fn integral(&self, a: f64, b: f64) -> f64 {
        match self.shape {
            Shape::Constant { level } => level * (b - a),
            Shape::RaisedCosine { .. } => self.primitive(b) - self.primitive(a),
        }
    }

    /// Raised-cosine segments are monotone, so extremes sit at the endpoints.
    fn range_on(&self, a: f64, b: f64) -> (f64, f64) {
        match self.shape {
            Shape::Constant { level } => (level, level),
            Shape::RaisedCosine { .. } => {
                let (va, vb) = (self.value(a), self.value(b));
                (va.min(vb), va.max(vb))
            }
        }
    }
}

/// A rate in events per day, defined on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction {
    segments: Vec<Segment>,
}

impl RateFunction {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Config("rate function needs at least one segment".into()));
        }
        if segments[0].t_start != 0.0 {
            return Err(Error::Config(format!(
                "first segment must start at t = 0, found {}",
                segments[0].t_start
            )));
        }
        for (i, seg) in segments.iter().enumerate() {
            let last = i + 1 == segments.len();
            if !seg.t_start.is_finite() {
                return Err(Error::Config(format!("segment {i}: non-finite start")));
            }
            if last {
                if seg.t_end != f64::INFINITY {
                    return Err(Error::Config("final segment must be unbounded".into()));
                }
                if !matches!(seg.shape, Shape::Constant { .. }) {
                    return Err(Error::Config("final segment must be constant".into()));
                }
            } else {
                if !seg.t_end.is_finite() {
                    return Err(Error::Config(format!("segment {i}: only the final segment may be unbounded")));
                }
                if seg.t_end != segments[i + 1].t_start {
                    return Err(Error::Config(format!(
                        "segments {i} and {} are not contiguous ({} vs {})",
                        i + 1,
                        seg.t_end,
                        segments[i + 1].t_start
                    )));
                }
            }
            match seg.shape {
                Shape::Constant { level } => {
                    if !(level >= 0.0 && level.is_finite()) {
                        return Err(Error::Config(format!("segment {i}: level must be finite and >= 0")));
                    }
                    if seg.t_end <= seg.t_start {
                        return Err(Error::Config(format!("segment {i}: empty segment")));
                    }
                }
                Shape::RaisedCosine { from, to } => {
                    if !(from >= 0.0 && to >= 0.0 && from.is_finite() && to.is_finite()) {
                        return Err(Error::Config(format!("segment {i}: levels must be finite and >= 0")));
                    }
                    if seg.t_end <= seg.t_start {
                        return Err(Error::Config(format!(
                            "segment {i}: raised-cosine needs a positive duration"
                        )));
                    }
                }
            }
        }
        Ok(Self { segments })
    }

    pub fn constant(level: f64) -> Result<Self> {
        Self::new(vec![Segment { t_start: 0.0, t_end: f64::INFINITY, shape: Shape::Constant { level } }])
    }

    /// `from` on `[0, t1)`, a raised-cosine transition over `[t1, t1 + d)`,
    /// then `to` forever. `d = 0` gives a step.
    pub fn decree(from: f64, to: f64, t1: f64, d: f64) -> Result<Self> {
        let mut segs = vec![Segment { t_start: 0.0, t_end: t1, shape: Shape::Constant { level: from } }];
        if d > 0.0 {
            segs.push(Segment { t_start: t1, t_end: t1 + d, shape: Shape::RaisedCosine { from, to } });
        }
        segs.push(Segment { t_start: t1 + d, t_end: f64::INFINITY, shape: Shape::Constant { level: to } });
        Self::new(segs)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Interior segment boundaries.
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.segments[1..].iter().map(|s| s.t_start)
    }

    pub fn is_identically_zero(&self) -> bool {
        self.segments.iter().all(|s| match s.shape {
            Shape::Constant { level } => level == 0.0,
            Shape::RaisedCosine { from, to } => from == 0.0 && to == 0.0,
        })
    }

    /// Level of a function made of a single constant segment.
    pub fn constant_level(&self) -> Option<f64> {
        match self.segments.as_slice() {
            [Segment { shape: Shape::Constant { level }, .. }] => Some(*level),
            _ => None,
        }
    }

    fn index_of(&self, t: f64) -> usize {
        self.segments.partition_point(|s| s.t_start <= t).saturating_sub(1)
    }

    /// Rate at `t`; caller guarantees `t >= 0`.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.segments[self.index_of(t)].value(t)
    }

    /// Left limit `r(t−)`; equals [`value`](Self::value) except at a jump.
    #[inline]
    pub fn value_left(&self, t: f64) -> f64 {
        let i = self.segments.partition_point(|s| s.t_start < t).saturating_sub(1);
        self.segments[i].value(t)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::Domain(format!("rate evaluated at t = {t}")));
        }
        Ok(self.value(t))
    }

    /// Exact ∫_{t0}^{t1} r(u) du.
    pub fn integrate(&self, t0: f64, t1: f64) -> Result<f64> {
        check_interval(t0, t1)?;
        Ok(self.integral_unchecked(t0, t1))
    }

    pub(crate) fn integral_unchecked(&self, t0: f64, t1: f64) -> f64 {
        let mut total = 0.0;
        for seg in &self.segments[self.index_of(t0)..] {
            if seg.t_start >= t1 {
                break;
            }
            let a = t0.max(seg.t_start);
            let b = t1.min(seg.t_end);
            if b > a {
                total += seg.integral(a, b);
            }
        }
        total
    }

    /// Exact (inf, sup) of the rate over `[t0, t1]`.
    pub fn range_on(&self, t0: f64, t1: f64) -> Result<(f64, f64)> {
        check_interval(t0, t1)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for seg in &self.segments[self.index_of(t0)..] {
            if seg.t_start > t1 {
                break;
            }
            let a = t0.max(seg.t_start);
            let b = t1.min(seg.t_end);
            let (l, h) = seg.range_on(a, b);
            lo = lo.min(l);
            hi = hi.max(h);
        }
        Ok((lo, hi))
    }

    pub fn sup_on(&self, t0: f64, t1: f64) -> Result<f64> {
        self.range_on(t0, t1).map(|(_, hi)| hi)
    }

    pub fn inf_on(&self, t0: f64, t1: f64) -> Result<f64> {
        self.range_on(t0, t1).map(|(lo, _)| lo)
    }

    /// True when the rate does not change anywhere in `[t0, t1]`.
    pub fn is_flat_on(&self, t0: f64, t1: f64) -> bool {
        self.range_on(t0, t1).map(|(lo, hi)| lo == hi).unwrap_or(false)
    }
}

fn check_interval(t0: f64, t1: f64) -> Result<()> {
    if t0.is_nan() || t1.is_nan() || t0 < 0.0 || t1 < t0 {
        return Err(Error::Domain(format!("invalid interval [{t0}, {t1}]")));
    }
    Ok(())
}

/// R(t) = λ(t)/μ(t).
pub fn effective_reproduction(sc: &Scenario, t: f64) -> Result<f64> {
    let lambda = sc.lambda.eval(t)?;
    let mu = sc.mu.eval(t)?;
    if mu == 0.0 {
        return Err(Error::UndefinedReproduction { t });
    }
    Ok(lambda / mu)
}

/// Mean infectious period τ(t) = 1/μ(t).
pub fn infectious_period(sc: &Scenario, t: f64) -> Result<f64> {
    let mu = sc.mu.eval(t)?;
    if mu == 0.0 {
        return Err(Error::UndefinedReproduction { t });
    }
    Ok(1.0 / mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn running_lambda(d: f64) -> RateFunction {
        RateFunction::decree(0.3, 0.06, 50.0, d).unwrap()
    }

    #[test]
    fn eval_running_example() {
        let lam = running_lambda(10.0);
        assert_eq!(lam.eval(25.0).unwrap(), 0.3);
        assert_eq!(lam.eval(60.0).unwrap(), 0.06);
        assert!((lam.eval(55.0).unwrap() - 0.18).abs() < 1e-15);
        assert!(matches!(lam.eval(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn integrate_running_example() {
        let lam = running_lambda(10.0);
        let mu = RateFunction::constant(0.1).unwrap();
        assert!((lam.integrate(0.0, 50.0).unwrap() - 15.0).abs() < 1e-12);
        let s50 = lam.integrate(0.0, 50.0).unwrap() - mu.integrate(0.0, 50.0).unwrap();
        assert!((s50 - 10.0).abs() < 1e-12);
        assert!((lam.integrate(50.0, 60.0).unwrap() - 1.8).abs() < 1e-12);
        assert!(matches!(lam.integrate(5.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn sup_running_example() {
        let lam = running_lambda(10.0);
        assert_eq!(lam.sup_on(0.0, 100.0).unwrap(), 0.3);
        assert_eq!(lam.sup_on(60.0, 100.0).unwrap(), 0.06);
        assert_eq!(lam.sup_on(50.0, 60.0).unwrap(), 0.3);
        assert!((lam.inf_on(50.0, 60.0).unwrap() - 0.06).abs() < 1e-15);
    }

    #[test]
    fn continuous_at_joins() {
        let lam = running_lambda(10.0);
        for join in [50.0, 60.0] {
            let eps = 1e-9;
            let gap = (lam.eval(join - eps).unwrap() - lam.eval(join + eps).unwrap()).abs();
            assert!(gap < 1e-6, "gap {gap} at {join}");
        }
    }

    #[test]
    fn rejects_malformed_segments() {
        let gap = vec![
            Segment { t_start: 0.0, t_end: 1.0, shape: Shape::Constant { level: 1.0 } },
            Segment { t_start: 2.0, t_end: f64::INFINITY, shape: Shape::Constant { level: 1.0 } },
        ];
        assert!(RateFunction::new(gap).is_err());
        assert!(RateFunction::constant(-0.1).is_err());
        let bounded = vec![Segment { t_start: 0.0, t_end: 5.0, shape: Shape::Constant { level: 1.0 } }];
        assert!(RateFunction::new(bounded).is_err());
    }

    fn arb_rate() -> impl Strategy<Value = RateFunction> {
        (0.0..2.0f64, 0.0..2.0f64, 0.0..2.0f64, 1.0..40.0f64, 0.0..20.0f64).prop_map(
            |(a, b, c, t1, d)| {
                let mut r = RateFunction::decree(a, b, t1, d).unwrap();
                // append a second transition so some functions have two cosines
                let last = r.segments.pop().unwrap();
                let s = last.t_start;
                r.segments.push(Segment { t_start: s, t_end: s + 7.0, shape: Shape::RaisedCosine { from: b, to: c } });
                r.segments.push(Segment { t_start: s + 7.0, t_end: f64::INFINITY, shape: Shape::Constant { level: c } });
                RateFunction::new(r.segments).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn integral_is_additive(r in arb_rate(), a in 0.0..100.0f64, b in 0.0..100.0f64, c in 0.0..100.0f64) {
            let mut v = [a, b, c];
            v.sort_by(f64::total_cmp);
            let whole = r.integrate(v[0], v[2]).unwrap();
            let split = r.integrate(v[0], v[1]).unwrap() + r.integrate(v[1], v[2]).unwrap();
            prop_assert!((whole - split).abs() < 1e-12);
        }

        #[test]
        fn integral_is_bracketed_by_range(r in arb_rate(), a in 0.0..100.0f64, w in 0.0..30.0f64) {
            let (lo, hi) = r.range_on(a, a + w).unwrap();
            let i = r.integrate(a, a + w).unwrap();
            prop_assert!(i <= hi * w + 1e-12);
            prop_assert!(i >= lo * w - 1e-12);
        }

        #[test]
        fn derivative_of_integral_is_rate(r in arb_rate(), t in 0.001..100.0f64) {
            let h = 1e-4;
            let lo = (t - h).max(0.0);
            let fd = (r.integrate(0.0, t + h).unwrap() - r.integrate(0.0, lo).unwrap()) / (t + h - lo);
            // one-sided near a kink only where the rate itself is continuous
            prop_assert!((fd - r.eval(t).unwrap()).abs() < 1e-6 || has_jump_near(&r, t, h));
        }
    }

    fn has_jump_near(r: &RateFunction, t: f64, h: f64) -> bool {
        r.breakpoints().any(|b| (b - t).abs() <= h && (r.value(b - 1e-12) - r.value(b)).abs() > 1e-9)
    }

    #[test]
    fn derivative_matches_at_random_points() {
        use rand::{Rng, SeedableRng};
        let lam = running_lambda(10.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let t: f64 = rng.random_range(0.001..200.0);
            let h = 1e-4;
            let fd = (lam.integrate(0.0, t + h).unwrap() - lam.integrate(0.0, t - h).unwrap()) / (2.0 * h);
            assert!((fd - lam.eval(t).unwrap()).abs() < 1e-6, "t = {t}");
        }
    }
}
