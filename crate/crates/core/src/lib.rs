//! Secrecy-aware power allocation for a three-node SWIPT fading wiretap channel.
//!
//! A transmitter serves an information receiver (IR) while an energy receiver
//! (ER) harvests power and may eavesdrop. Each fading state splits the
//! transmit power between the message and artificial noise (AN) that the IR
//! cancels and the ER cannot. The crate solves two stochastic programs under
//! average/peak transmit power limits and an average harvested-power floor:
//!
//! * secrecy outage minimization ([`ProblemKind::OutageMin`]),
//! * ergodic secrecy capacity maximization ([`ProblemKind::EscMax`]).
//!
//! Both are handled by Lagrange dual decomposition over a Monte Carlo fading
//! ensemble ([`dual`]), with closed-form per-state solvers ([`perstate`]), an
//! alternating-optimization variant ([`alternating`]) and trade-off region
//! tracing ([`region`]).
//!
//! All powers are linear watts. dBm only appears at configuration boundaries
//! through [`dbm_to_watts`] / [`watts_to_dbm`].

pub mod alternating;
pub mod channel;
pub mod dual;
mod error;
pub mod model;
pub mod perstate;
pub mod region;

pub use error::{Error, Result};
pub use model::{
    dbm_to_watts, ensemble_average, harvested_power, outage_indicator, secrecy_rate,
    watts_to_dbm, DualPoint, FadingEnsemble, FadingState, PerStateDecision, SchemeKind,
    SystemParams, TradeoffPoint,
};
pub use dual::{Constraints, DualSolveReport, ProblemKind, SolverOptions};

/// Formats a float in scientific notation with 17 significant digits, which
/// round-trips any `f64` exactly.
pub fn fmt_sci(x: f64) -> String {
    format!("{x:.16e}")
}
