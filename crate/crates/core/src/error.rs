use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("effective reproduction number undefined at t = {t}: recovery rate is zero")]
    UndefinedReproduction { t: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("t = {t} lies outside the table range [0, {end}]")]
    Range { t: f64, end: f64 },

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("approximation inapplicable: {0}")]
    ApproximationInapplicable(String),

    #[error("closed-form PMF requires a zero immigration rate")]
    ImmigrationNotSupported,

    #[error("usage error: {0}")]
    Usage(String),

    #[error("sample path exceeded {limit} events before t = {time}")]
    EventLimit { limit: u64, time: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
