//! Model instances and their on-disk form (JSON or TOML).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rates::{RateFunction, Segment, Shape};

pub const DEFAULT_DT: f64 = 0.01;
pub const DEFAULT_K_MAX: u64 = 400_000;
pub const DEFAULT_REPLICATIONS: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 20_210_122;

/// Upper bound on `t_end / dt`.
pub const MAX_GRID_STEPS: f64 = 1e7;

/// A complete model instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub lambda: RateFunction,
    pub mu: RateFunction,
    pub nu: RateFunction,
    pub i0: u64,
    pub t_end: f64,
    pub dt: f64,
    pub k_max: u64,
    pub replications: u64,
    pub master_seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if self.t_end / self.dt > MAX_GRID_STEPS {
            return Err(Error::Config(format!(
                "grid of {:.0} steps exceeds the limit of {MAX_GRID_STEPS:.0}",
                self.t_end / self.dt
            )));
        }
        if self.k_max < self.i0 {
            return Err(Error::Config(format!("k_max ({}) must be >= i0 ({})", self.k_max, self.i0)));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be >= 1".into()));
        }
        Ok(())
    }

    /// The decree scenario used throughout the documentation: λ drops from
    /// 0.3 to 0.06 per day starting at day 50 over `delay` days, μ = 0.1.
    pub fn running_example(delay: f64, nu: f64, i0: u64) -> Self {
        Self {
            lambda: RateFunction::decree(0.3, 0.06, 50.0, delay).expect("valid decree"),
            mu: RateFunction::constant(0.1).expect("valid rate"),
            nu: RateFunction::constant(nu).expect("valid rate"),
            i0,
            t_end: 500.0,
            dt: DEFAULT_DT,
            k_max: DEFAULT_K_MAX,
            replications: DEFAULT_REPLICATIONS,
            master_seed: DEFAULT_SEED,
        }
    }

    /// Constant rates over `[0, t_end]`.
    pub fn homogeneous(lambda: f64, mu: f64, nu: f64, i0: u64, t_end: f64) -> Result<Self> {
        let sc = Self {
            lambda: RateFunction::constant(lambda)?,
            mu: RateFunction::constant(mu)?,
            nu: RateFunction::constant(nu)?,
            i0,
            t_end,
            dt: DEFAULT_DT,
            k_max: DEFAULT_K_MAX.max(i0),
            replications: DEFAULT_REPLICATIONS,
            master_seed: DEFAULT_SEED,
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn is_birth_death(&self) -> bool {
        self.nu.is_identically_zero()
    }

    /// All interior segment boundaries of λ, μ, ν, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self
            .lambda
            .breakpoints()
            .chain(self.mu.breakpoints())
            .chain(self.nu.breakpoints())
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    pub fn effective_reproduction(&self, t: f64) -> Result<f64> {
        crate::rates::effective_reproduction(self, t)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let format = Format::from_path(path)?;
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, format).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, format: Format) -> Result<Self> {
        let file: ScenarioFile = match format {
            Format::Json => serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?,
            Format::Toml => toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?,
        };
        file.into_scenario()
    }

    pub fn dump(&self, format: Format) -> Result<String> {
        let file = ScenarioFile::from(self);
        match format {
            Format::Json => serde_json::to_string_pretty(&file).map_err(|e| Error::Config(e.to_string())),
            Format::Toml => toml::to_string(&file).map_err(|e| Error::Config(e.to_string())),
        }
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = self.dump(Format::from_path(path)?)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn apply(&mut self, ov: &Overrides) -> Result<()> {
        if let Some(t) = ov.t_end {
            self.t_end = t;
        }
        if let Some(dt) = ov.dt {
            self.dt = dt;
        }
        if let Some(k) = ov.k_max {
            self.k_max = k;
        }
        if let Some(r) = ov.replications {
            self.replications = r;
        }
        if let Some(s) = ov.seed {
            self.master_seed = s;
        }
        if let Some(d) = ov.delay_d {
            self.lambda = with_delay(&self.lambda, d)?;
        }
        self.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Toml,
}

impl Format {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Ok(Self::Json),
            Some(e) if e.eq_ignore_ascii_case("toml") => Ok(Self::Toml),
            _ => Err(Error::Config(format!(
                "{}: scenario files must end in .json or .toml",
                path.display()
            ))),
        }
    }
}

/// Command-line adjustments applied on top of a scenario file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub k_max: Option<u64>,
    pub replications: Option<u64>,
    pub seed: Option<u64>,
    pub delay_d: Option<f64>,
}

/// Rewrites the duration of λ's raised-cosine transition. With no transition
/// present, one is inserted at the first step change between constant levels.
pub fn with_delay(rate: &RateFunction, d: f64) -> Result<RateFunction> {
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::Config(format!("delay must be >= 0, got {d}")));
    }
    let mut segs: Vec<Segment> = rate.segments().to_vec();
    let cosine = segs.iter().position(|s| matches!(s.shape, Shape::RaisedCosine { .. }));
    let (t1, from, to, at) = match cosine {
        Some(i) => {
            let Shape::RaisedCosine { from, to } = segs[i].shape else { unreachable!() };
            let t1 = segs[i].t_start;
            segs.remove(i);
            (t1, from, to, i)
        }
        None => {
            let i = segs
                .windows(2)
                .position(|w| match (w[0].shape, w[1].shape) {
                    (Shape::Constant { level: a }, Shape::Constant { level: b }) => a != b,
                    _ => false,
                })
                .ok_or_else(|| Error::Config("rate has no step or transition to apply a delay to".into()))?;
            let Shape::Constant { level: from } = segs[i].shape else { unreachable!() };
            let Shape::Constant { level: to } = segs[i + 1].shape else { unreachable!() };
            (segs[i].t_end, from, to, i + 1)
        }
    };
    // `at` now indexes the segment that follows the transition
    let end = t1 + d;
    if end >= segs[at].t_end {
        return Err(Error::Config(format!(
            "delay {d} overruns the following segment ending at {}",
            segs[at].t_end
        )));
    }
    segs[at].t_start = end;
    if d > 0.0 {
        segs.insert(at, Segment { t_start: t1, t_end: end, shape: Shape::RaisedCosine { from, to } });
    }
    segs[at - 1].t_end = t1;
    RateFunction::new(segs)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    lambda: RateFile,
    mu: RateFile,
    nu: RateFile,
    i0: u64,
    t_end: f64,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(default = "default_k_max")]
    k_max: u64,
    #[serde(default = "default_replications")]
    replications: u64,
    #[serde(default = "default_seed")]
    seed: u64,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_k_max() -> u64 {
    DEFAULT_K_MAX
}
fn default_replications() -> u64 {
    DEFAULT_REPLICATIONS
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RateFile {
    segments: Vec<SegmentFile>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ShapeKind {
    Constant,
    RaisedCosine,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentFile {
    t_start: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t_end: Option<f64>,
    shape: ShapeKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    from: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    to: Option<f64>,
}

impl RateFile {
    fn into_rate(self, name: &str) -> Result<RateFunction> {
        let n = self.segments.len();
        let segs = self
            .segments
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let ctx = |msg: &str| Error::Config(format!("{name}.segments[{i}]: {msg}"));
                let t_end = match s.t_end {
                    Some(t) => t,
                    None if i + 1 == n => f64::INFINITY,
                    None => return Err(ctx("only the last segment may omit t_end")),
                };
                let shape = match s.shape {
                    ShapeKind::Constant => {
                        if s.from.is_some() || s.to.is_some() {
                            return Err(ctx("constant segment takes `level`, not `from`/`to`"));
                        }
                        Shape::Constant { level: s.level.ok_or_else(|| ctx("missing `level`"))? }
                    }
                    ShapeKind::RaisedCosine => {
                        if s.level.is_some() {
                            return Err(ctx("raised_cosine segment takes `from`/`to`, not `level`"));
                        }
                        Shape::RaisedCosine {
                            from: s.from.ok_or_else(|| ctx("missing `from`"))?,
                            to: s.to.ok_or_else(|| ctx("missing `to`"))?,
                        }
                    }
                };
                Ok(Segment { t_start: s.t_start, t_end, shape })
            })
            .collect::<Result<Vec<_>>>()?;
        RateFunction::new(segs).map_err(|e| Error::Config(format!("{name}: {e}")))
    }
}

impl From<&RateFunction> for RateFile {
    fn from(r: &RateFunction) -> Self {
        let segments = r
            .segments()
            .iter()
            .map(|s| {
                let t_end = s.t_end.is_finite().then_some(s.t_end);
                match s.shape {
                    Shape::Constant { level } => SegmentFile {
                        t_start: s.t_start,
                        t_end,
                        shape: ShapeKind::Constant,
                        level: Some(level),
                        from: None,
                        to: None,
                    },
                    Shape::RaisedCosine { from, to } => SegmentFile {
                        t_start: s.t_start,
                        t_end,
                        shape: ShapeKind::RaisedCosine,
                        level: None,
                        from: Some(from),
                        to: Some(to),
                    },
                }
            })
            .collect();
        Self { segments }
    }
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario> {
        let sc = Scenario {
            lambda: self.lambda.into_rate("lambda")?,
            mu: self.mu.into_rate("mu")?,
            nu: self.nu.into_rate("nu")?,
            i0: self.i0,
            t_end: self.t_end,
            dt: self.dt,
            k_max: self.k_max,
            replications: self.replications,
            master_seed: self.seed,
        };
        sc.validate()?;
        Ok(sc)
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(sc: &Scenario) -> Self {
        Self {
            lambda: (&sc.lambda).into(),
            mu: (&sc.mu).into(),
            nu: (&sc.nu).into(),
            i0: sc.i0,
            t_end: sc.t_end,
            dt: sc.dt,
            k_max: sc.k_max,
            replications: sc.replications,
            seed: sc.master_seed,
        }
    }
}
