use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("ensemble is empty")]
    EmptyEnsemble,

    #[error("distance {distance} m is below the reference distance {reference} m")]
    BelowReferenceDistance { distance: f64, reference: f64 },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(
        "harvested-power floor {q_bar:e} W is infeasible: at most {max_q_bar:e} W is achievable"
    )]
    Infeasible { q_bar: f64, max_q_bar: f64 },

    #[error(
        "could not restore primal feasibility: avg power {avg_power:e} W (limit {p_avg:e}), \
         avg harvest {avg_harvest:e} W (floor {q_bar:e})"
    )]
    Recovery {
        avg_power: f64,
        p_avg: f64,
        avg_harvest: f64,
        q_bar: f64,
    },

    #[error("sweep aborted at Q̄ = {q_bar:e} W: {source}")]
    Sweep {
        q_bar: f64,
        #[source]
        source: Box<Error>,
    },
}
