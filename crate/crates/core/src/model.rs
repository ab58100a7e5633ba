//! Domain types and the closed-form physical-layer evaluators.
//!
//! Everything here is plain value data and pure functions. The per-state
//! Lagrangians [`lagrangian_outage`] and [`lagrangian_rate`] live here as well
//! so that brute-force validators can evaluate them without touching solver
//! code.

use std::f64::consts::LN_2;

use crate::{Error, Result};

/// Converts dBm to watts: `W = 10^((dBm - 30) / 10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Transmitter limits, receiver noise and harvesting efficiency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Average transmit power limit (W).
    pub p_avg: f64,
    /// Peak transmit power limit (W).
    pub p_peak: f64,
    /// Energy harvesting efficiency in (0, 1].
    pub zeta: f64,
    /// IR noise power (W).
    pub sigma1_sq: f64,
    /// ER noise power (W).
    pub sigma2_sq: f64,
    /// Target secrecy rate in bits/s/Hz; only the outage problems use it.
    pub r0: f64,
}

impl SystemParams {
    pub fn new(
        p_avg: f64,
        p_peak: f64,
        zeta: f64,
        sigma1_sq: f64,
        sigma2_sq: f64,
        r0: f64,
    ) -> Result<Self> {
        let params = Self {
            p_avg,
            p_peak,
            zeta,
            sigma1_sq,
            sigma2_sq,
            r0,
        };
        params.validate()?;
        Ok(params)
    }

    /// Returns every violated invariant, one message per field.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.p_avg > 0.0 && self.p_avg.is_finite()) {
            out.push(format!("p_avg must be positive, got {}", self.p_avg));
        }
        if !(self.p_peak >= self.p_avg && self.p_peak.is_finite()) {
            out.push(format!(
                "p_peak must be finite and at least p_avg ({}), got {}",
                self.p_avg, self.p_peak
            ));
        }
        if !(self.zeta > 0.0 && self.zeta <= 1.0) {
            out.push(format!("zeta must lie in (0, 1], got {}", self.zeta));
        }
        if !(self.sigma1_sq > 0.0 && self.sigma1_sq.is_finite()) {
            out.push(format!("sigma1_sq must be positive, got {}", self.sigma1_sq));
        }
        if !(self.sigma2_sq > 0.0 && self.sigma2_sq.is_finite()) {
            out.push(format!("sigma2_sq must be positive, got {}", self.sigma2_sq));
        }
        if !(self.r0 >= 0.0 && self.r0.is_finite()) {
            out.push(format!("r0 must be non-negative, got {}", self.r0));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }

    pub fn with_r0(self, r0: f64) -> Self {
        Self { r0, ..self }
    }
}

impl Default for SystemParams {
    /// 20 dBm average, 30 dBm peak, 50% harvesting efficiency, −50 dBm noise
    /// at both receivers and a 6.5 bps/Hz target.
    fn default() -> Self {
        Self {
            p_avg: dbm_to_watts(20.0),
            p_peak: dbm_to_watts(30.0),
            zeta: 0.5,
            sigma1_sq: dbm_to_watts(-50.0),
            sigma2_sq: dbm_to_watts(-50.0),
            r0: 6.5,
        }
    }
}

/// Channel power gains of one fading state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingState {
    /// Tx → IR power gain.
    pub h: f64,
    /// Tx → ER power gain.
    pub g: f64,
}

impl FadingState {
    pub fn new(h: f64, g: f64) -> Result<Self> {
        if !(h >= 0.0 && h.is_finite() && g >= 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "channel gains must be finite and non-negative, got h={h}, g={g}"
            )));
        }
        Ok(Self { h, g })
    }
}

/// Equal-weight Monte Carlo sample of fading states.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingEnsemble {
    states: Vec<FadingState>,
    seed: u64,
}

impl FadingEnsemble {
    pub fn new(states: Vec<FadingState>, seed: u64) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        Ok(Self { states, seed })
    }

    pub fn states(&self) -> &[FadingState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Sample mean of `f` over the states.
    pub fn average<F: FnMut(&FadingState) -> f64>(&self, f: F) -> f64 {
        mean(self.states.iter().map(f), self.states.len())
    }
}

/// Expectation over fading states, implemented as the arithmetic mean.
pub fn ensemble_average<F: FnMut(&FadingState) -> f64>(
    states: &[FadingState],
    f: F,
) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    Ok(mean(states.iter().map(f), states.len()))
}

pub(crate) fn mean<I: Iterator<Item = f64>>(values: I, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

/// Transmit power and AN split for one state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerStateDecision {
    pub p: f64,
    /// Fraction of `p` spent on artificial noise.
    pub alpha: f64,
}

impl PerStateDecision {
    pub const OFF: Self = Self { p: 0.0, alpha: 0.0 };

    pub fn new(p: f64, alpha: f64) -> Self {
        debug_assert!(p >= 0.0 && (0.0..=1.0).contains(&alpha), "p={p} alpha={alpha}");
        Self { p, alpha }
    }
}

/// Which receiver model the secrecy rate is evaluated under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    /// AN is cancelled at the IR and jams the ER.
    AnCancelled,
    /// No AN: the split is forced to zero.
    NoAn,
    /// AN is sent but the IR cannot cancel it.
    NoCancel,
}

/// Multipliers for the average-power (`lambda`) and harvested-power (`mu`)
/// constraints.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DualPoint {
    pub lambda: f64,
    pub mu: f64,
}

impl DualPoint {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if !(lambda >= 0.0 && mu >= 0.0 && lambda.is_finite() && mu.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "multipliers must be finite and non-negative, got lambda={lambda}, mu={mu}"
            )));
        }
        Ok(Self { lambda, mu })
    }

    /// Net per-watt price `lambda - zeta * mu * g` of transmitting in a state.
    pub fn net_price(&self, state: &FadingState, params: &SystemParams) -> f64 {
        self.lambda - params.zeta * self.mu * state.g
    }
}

/// One boundary point of an outage-energy or rate-energy region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    /// Non-outage probability for outage problems, ergodic secrecy rate
    /// (bits/s/Hz) for rate problems.
    pub objective: f64,
    /// Achieved average harvested power (W).
    pub harvested: f64,
}

/// Secrecy rate `[log2(1 + SNR_IR) - log2(1 + SNR_ER)]^+` in bits/s/Hz.
pub fn secrecy_rate(
    scheme: SchemeKind,
    state: &FadingState,
    d: &PerStateDecision,
    params: &SystemParams,
) -> f64 {
    let alpha = match scheme {
        SchemeKind::NoAn => 0.0,
        SchemeKind::AnCancelled | SchemeKind::NoCancel => d.alpha,
    };
    let p = d.p;
    let info = (1.0 - alpha) * p;
    let snr_ir = match scheme {
        SchemeKind::NoCancel => info * state.h / (alpha * state.h * p + params.sigma1_sq),
        SchemeKind::AnCancelled | SchemeKind::NoAn => info * state.h / params.sigma1_sq,
    };
    let snr_er = info * state.g / (alpha * state.g * p + params.sigma2_sq);
    let rate = (snr_ir.ln_1p() - snr_er.ln_1p()) / LN_2;
    rate.max(0.0)
}

/// Harvested power `zeta * g * p`; independent of the AN split.
pub fn harvested_power(state: &FadingState, p: f64, params: &SystemParams) -> f64 {
    params.zeta * state.g * p
}

/// 1 if the secrecy rate falls strictly below `params.r0`, else 0.
pub fn outage_indicator(
    scheme: SchemeKind,
    state: &FadingState,
    d: &PerStateDecision,
    params: &SystemParams,
) -> u8 {
    u8::from(secrecy_rate(scheme, state, d, params) < params.r0)
}

/// Per-state outage Lagrangian `X + lambda p - zeta mu g p`.
pub fn lagrangian_outage(
    state: &FadingState,
    d: &PerStateDecision,
    dual: &DualPoint,
    params: &SystemParams,
) -> f64 {
    let x = f64::from(outage_indicator(SchemeKind::AnCancelled, state, d, params));
    x + dual.net_price(state, params) * d.p
}

/// Per-state rate Lagrangian `R - lambda p + zeta mu g p`.
pub fn lagrangian_rate(
    state: &FadingState,
    d: &PerStateDecision,
    dual: &DualPoint,
    params: &SystemParams,
) -> f64 {
    secrecy_rate(SchemeKind::AnCancelled, state, d, params) - dual.net_price(state, params) * d.p
}
