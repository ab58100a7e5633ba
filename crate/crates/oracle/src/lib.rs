//! Brute-force reference solvers for cross-checking `secrecy-swipt`.
//!
//! Everything here works from the model's rate and harvest formulas only:
//! exhaustive grids, bisection, and direct enumeration. These routines are
//! slow on purpose and are meant for tests and the `verify` command.

use secrecy_swipt::perstate::ExtendedPower;
use secrecy_swipt::{
    harvested_power, secrecy_rate, Constraints, DualPoint, FadingEnsemble, FadingState,
    PerStateDecision, ProblemKind, SchemeKind, SystemParams,
};

fn rate(state: &FadingState, p: f64, alpha: f64, params: &SystemParams) -> f64 {
    secrecy_rate(SchemeKind::AnCancelled, state, &PerStateDecision { p, alpha }, params)
}

fn price(state: &FadingState, dual: &DualPoint, params: &SystemParams) -> f64 {
    dual.lambda - params.zeta * dual.mu * state.g
}

fn l1(state: &FadingState, p: f64, alpha: f64, dual: &DualPoint, params: &SystemParams) -> f64 {
    let x = if rate(state, p, alpha, params) < params.r0 { 1.0 } else { 0.0 };
    x + price(state, dual, params) * p
}

fn l2(state: &FadingState, p: f64, alpha: f64, dual: &DualPoint, params: &SystemParams) -> f64 {
    rate(state, p, alpha, params) - price(state, dual, params) * p
}

/// Uniform grid of `n ≥ 2` points on `[lo, hi]` with exact endpoints.
pub fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    assert!(n >= 2, "grid needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

/// Minimum of `X + (lambda - zeta mu g) p` over an `n_p × n_alpha` grid on
/// `[0, p_peak] × [0, 1]`. Returns `(value, p, alpha)`; ties keep the
/// smallest `p`, then the smallest `alpha`.
pub fn grid_min_l1(
    state: &FadingState,
    dual: &DualPoint,
    params: &SystemParams,
    n_p: usize,
    n_alpha: usize,
) -> (f64, f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for p in linspace(0.0, params.p_peak, n_p) {
        for alpha in linspace(0.0, 1.0, n_alpha) {
            let v = l1(state, p, alpha, dual, params);
            if v < best.0 {
                best = (v, p, alpha);
            }
        }
    }
    best
}

/// Maximum of `R(alpha_bar, p) - (lambda - zeta mu g) p` over an `n_p`-point
/// grid on `[0, p_peak]`. Returns `(value, p)`.
pub fn grid_max_l2(
    state: &FadingState,
    dual: &DualPoint,
    alpha_bar: f64,
    params: &SystemParams,
    n_p: usize,
) -> (f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for p in linspace(0.0, params.p_peak, n_p) {
        let v = l2(state, p, alpha_bar, dual, params);
        if v > best.0 {
            best = (v, p);
        }
    }
    best
}

/// Joint `(p, alpha)` grid maximum of the rate Lagrangian, with `alpha` on
/// `[0, alpha_max]`. Returns `(value, p, alpha)`.
pub fn grid_max_l2_joint(
    state: &FadingState,
    dual: &DualPoint,
    params: &SystemParams,
    n_p: usize,
    n_alpha: usize,
    alpha_max: f64,
) -> (f64, f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for alpha in linspace(0.0, alpha_max, n_alpha) {
        for p in linspace(0.0, params.p_peak, n_p) {
            let v = l2(state, p, alpha, dual, params);
            if v > best.0 {
                best = (v, p, alpha);
            }
        }
    }
    best
}

/// Maximum of the secrecy rate over an `n`-point split grid at power `p_bar`.
/// Returns `(rate, alpha)`.
pub fn grid_max_rate_over_split(
    state: &FadingState,
    p_bar: f64,
    params: &SystemParams,
    n: usize,
) -> (f64, f64) {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for alpha in linspace(0.0, 1.0, n) {
        let v = rate(state, p_bar, alpha, params);
        if v > best.0 {
            best = (v, alpha);
        }
    }
    best
}

/// Smallest power reaching `params.r0` at split `alpha`, by bisection.
///
/// Returns `Infinite` if the rate at `1000 · p_peak` is still below target.
/// Otherwise bisects until the bracket collapses to adjacent floats, which
/// leaves the rate at the upper end within `1e-12` of the target, and returns
/// that upper end.
pub fn bisect_rate_inverse(state: &FadingState, alpha: f64, params: &SystemParams) -> ExtendedPower {
    if params.r0 <= 0.0 {
        return ExtendedPower::Finite(0.0);
    }
    let mut hi = params.p_peak * 1e3;
    if rate(state, hi, alpha, params) < params.r0 {
        return ExtendedPower::Infinite;
    }
    let mut lo = 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rate(state, mid, alpha, params) >= params.r0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    ExtendedPower::Finite(hi)
}

/// Multiplier box for [`grid_dual_search`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualBox {
    pub lambda: (f64, f64),
    pub mu: (f64, f64),
}

/// Per-state data for evaluating the outage dual function by enumeration.
#[derive(Debug, Clone, Copy)]
struct OutageProfile {
    /// Least power over an `alpha` grid that avoids outage, if within peak.
    p_min: Option<f64>,
}

fn outage_profile(state: &FadingState, params: &SystemParams, n_alpha: usize) -> OutageProfile {
    let mut best = ExtendedPower::Infinite;
    for alpha in linspace(0.0, 1.0, n_alpha) {
        let p = bisect_rate_inverse(state, alpha, params);
        if p < best {
            best = p;
        }
    }
    OutageProfile {
        p_min: best.finite().filter(|&p| p <= params.p_peak),
    }
}

/// `min over p, alpha` of `X + s p`: since `X` is 0 exactly on
/// `[p_min, p_peak]` for the best split, only the points 0, `p_min` and
/// `p_peak` can be optimal.
fn outage_state_min(prof: &OutageProfile, s: f64, p_peak: f64) -> f64 {
    match prof.p_min {
        Some(p_min) => 1.0f64.min(s * p_min).min(s * p_peak),
        None => 1.0f64.min(1.0 + s * p_peak),
    }
}

/// Exhaustive `n × n` search of the dual function over `bx`.
///
/// Outage duals are evaluated by enumeration from bisection-based minimum
/// powers on a 2001-point split grid, independently of the closed forms.
/// Rate duals use `rate_state_max`, which the caller supplies (for example a
/// fine joint grid, or the library's per-state solver).
/// Returns the best multiplier pair (maximum for outage, minimum for rate)
/// and its value. A box that excludes the optimum yields a boundary point.
pub fn grid_dual_search<F>(
    kind: ProblemKind,
    ensemble: &FadingEnsemble,
    params: &SystemParams,
    constraints: &Constraints,
    bx: &DualBox,
    n: usize,
    rate_state_max: F,
) -> (DualPoint, f64)
where
    F: Fn(&FadingState, &DualPoint) -> f64,
{
    let states = ensemble.states();
    let len = states.len() as f64;
    let profiles: Vec<OutageProfile> = match kind {
        ProblemKind::OutageMin => states.iter().map(|s| outage_profile(s, params, 2001)).collect(),
        ProblemKind::EscMax => Vec::new(),
    };
    let mut best: Option<(DualPoint, f64)> = None;
    for lambda in linspace(bx.lambda.0, bx.lambda.1, n) {
        for mu in linspace(bx.mu.0, bx.mu.1, n) {
            let dual = DualPoint { lambda, mu };
            let value = match kind {
                ProblemKind::OutageMin => {
                    let sum: f64 = states
                        .iter()
                        .zip(&profiles)
                        .map(|(s, prof)| outage_state_min(prof, price(s, &dual, params), params.p_peak))
                        .sum();
                    sum / len - lambda * params.p_avg + mu * constraints.q_bar
                }
                ProblemKind::EscMax => {
                    let sum: f64 = states.iter().map(|s| rate_state_max(s, &dual)).sum();
                    sum / len + lambda * params.p_avg - mu * constraints.q_bar
                }
            };
            let better = match (kind, &best) {
                (_, None) => true,
                (ProblemKind::OutageMin, Some((_, v))) => value > *v,
                (ProblemKind::EscMax, Some((_, v))) => value < *v,
            };
            if better {
                best = Some((dual, value));
            }
        }
    }
    best.expect("grid has at least four points")
}

/// Average harvested power for given per-state powers.
pub fn average_harvest(ensemble: &FadingEnsemble, powers: &[f64], params: &SystemParams) -> f64 {
    let states = ensemble.states();
    states
        .iter()
        .zip(powers)
        .map(|(s, &p)| harvested_power(s, p, params))
        .sum::<f64>()
        / states.len() as f64
}

/// Largest achievable average harvest under the power limits, by a linear
/// program solved through exhaustive fractional filling in `g` order.
pub fn max_average_harvest(ensemble: &FadingEnsemble, params: &SystemParams) -> f64 {
    let mut gs: Vec<f64> = ensemble.states().iter().map(|s| s.g).collect();
    gs.sort_by(|a, b| b.total_cmp(a));
    let n = gs.len() as f64;
    let mut budget = params.p_avg * n;
    let mut total = 0.0;
    for g in gs {
        let p = budget.min(params.p_peak);
        total += params.zeta * g * p;
        budget -= p;
        if budget <= 0.0 {
            break;
        }
    }
    total / n
}
