//! Per-fading-state subproblem solvers.
//!
//! For fixed multipliers `(lambda, mu)` both stochastic programs decouple
//! into one small problem per state. Outage problems minimize
//! `L1 = X + (lambda - zeta mu g) p`, rate problems maximize
//! `L2 = R - (lambda - zeta mu g) p`, over `p ∈ [0, p_peak]` and the AN split.
//!
//! Ties are broken toward the smallest power, then the smallest split.

mod cubic;
mod search;

use std::f64::consts::LN_2;

pub use cubic::{real_roots_cubic, real_roots_cubic_in, RootSet};
pub use search::{golden_min, grid_golden_min, grid_min, refine_grid_min, GridMin};

use crate::model::{
    lagrangian_rate, secrecy_rate, DualPoint, FadingState, PerStateDecision, SchemeKind, SystemParams,
};

/// Grid size for the one-dimensional split searches.
pub const ALPHA_GRID_POINTS: usize = 1001;
/// Golden-section tolerance used after the split grid.
pub const ALPHA_REFINE_TOL: f64 = 1e-6;
/// Rate subproblems keep the split strictly below one by this margin.
pub const ALPHA_UPPER_CLIP: f64 = 1e-9;

/// A power that may be unattainable.
///
/// The derived ordering puts every `Finite` value below `Infinite`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum ExtendedPower {
    Finite(f64),
    Infinite,
}

impl ExtendedPower {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedPower::Finite(p) => Some(p),
            ExtendedPower::Infinite => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedPower::Finite(_))
    }

    /// True if the power is finite and at most `limit`.
    pub fn within(self, limit: f64) -> bool {
        matches!(self, ExtendedPower::Finite(p) if p <= limit)
    }
}

/// Smallest power reaching secrecy rate `r0` with AN split `alpha`.
///
/// The rate condition reduces to `a p² + b p + c ≥ 0` with
/// `a = α(1-α)hg`, `b = ασ₁²g + (1-α)σ₂²h - 2^r0 σ₁²g`,
/// `c = -(2^r0 - 1)σ₁²σ₂² ≤ 0`, whose positive root is the single crossing.
/// The discriminant is `b² - 4ac`. The root is nudged up by a few ulps when
/// needed so that evaluating the rate at the returned power does reach `r0`.
pub fn min_power_for_rate(alpha: f64, state: &FadingState, params: &SystemParams) -> ExtendedPower {
    if params.r0 <= 0.0 {
        return ExtendedPower::Finite(0.0);
    }
    if alpha >= 1.0 || state.h == 0.0 {
        return ExtendedPower::Infinite;
    }
    let (h, g) = (state.h, state.g);
    let (s1, s2) = (params.sigma1_sq, params.sigma2_sq);
    let k = params.r0.exp2();
    let a = alpha * (1.0 - alpha) * h * g;
    let b = alpha * s1 * g + (1.0 - alpha) * s2 * h - k * s1 * g;
    let c = -(params.r0 * LN_2).exp_m1() * s1 * s2;

    let root = if a == 0.0 {
        if b <= 0.0 {
            return ExtendedPower::Infinite;
        }
        -c / b
    } else {
        let sq = (b * b - 4.0 * a * c).sqrt();
        if b >= 0.0 {
            -2.0 * c / (b + sq)
        } else {
            (sq - b) / (2.0 * a)
        }
    };
    if !root.is_finite() {
        return ExtendedPower::Infinite;
    }

    let mut p = root.max(0.0);
    for _ in 0..64 {
        let d = PerStateDecision { p, alpha };
        if secrecy_rate(SchemeKind::AnCancelled, state, &d, params) >= params.r0 {
            return ExtendedPower::Finite(p);
        }
        p = (p * (1.0 + 4.0 * f64::EPSILON)).max(f64::MIN_POSITIVE);
    }
    ExtendedPower::Infinite
}

/// Split `alpha_tilde` minimizing the required power, and that power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSearchResult {
    pub alpha_tilde: f64,
    pub p_min: ExtendedPower,
}

/// Minimizes [`min_power_for_rate`] over the split on `[0, 1]`.
pub fn search_min_split(state: &FadingState, params: &SystemParams, tol: f64) -> SplitSearchResult {
    let f = |alpha: f64| min_power_for_rate(alpha, state, params);
    let (alpha, p_min) = grid_golden_min(f, 0.0, 1.0, ALPHA_GRID_POINTS, tol);
    match p_min {
        ExtendedPower::Infinite => SplitSearchResult {
            alpha_tilde: 0.0,
            p_min,
        },
        ExtendedPower::Finite(_) => SplitSearchResult {
            alpha_tilde: alpha,
            p_min,
        },
    }
}

/// Outage subproblem: joint power and split minimizing
/// `X + (lambda - zeta mu g) p`.
pub fn solve_p1_sub(state: &FadingState, dual: &DualPoint, params: &SystemParams) -> PerStateDecision {
    let split = search_min_split(state, params, ALPHA_REFINE_TOL);
    solve_p1_sub_given_split(state, dual, params, &split)
}

/// [`solve_p1_sub`] with a precomputed split search, which does not depend
/// on the multipliers.
///
/// Three regimes: when harvesting pays (`lambda < zeta mu g`) transmit at
/// peak, keeping the split only if it avoids outage; otherwise spend exactly
/// the minimum power when it is within `min(1 / (lambda - zeta mu g), p_peak)`;
/// otherwise stay silent. With `mu = 0` the first regime never applies, and a
/// zero net price counts as an infinite threshold.
pub fn solve_p1_sub_given_split(
    state: &FadingState,
    dual: &DualPoint,
    params: &SystemParams,
    split: &SplitSearchResult,
) -> PerStateDecision {
    let price = dual.net_price(state, params);
    if price < 0.0 {
        let alpha = if split.p_min.within(params.p_peak) {
            split.alpha_tilde
        } else {
            0.0
        };
        return PerStateDecision::new(params.p_peak, alpha);
    }
    match split.p_min {
        ExtendedPower::Finite(p) if p <= params.p_peak && price * p <= 1.0 => {
            PerStateDecision::new(p, split.alpha_tilde)
        }
        _ => PerStateDecision::OFF,
    }
}

/// Outage power subproblem with the split fixed at `alpha_bar`.
pub fn solve_p11_sub(
    state: &FadingState,
    dual: &DualPoint,
    alpha_bar: f64,
    params: &SystemParams,
) -> PerStateDecision {
    let p1 = min_power_for_rate(alpha_bar, state, params);
    solve_p11_sub_given_power(state, dual, alpha_bar, p1, params)
}

pub fn solve_p11_sub_given_power(
    state: &FadingState,
    dual: &DualPoint,
    alpha_bar: f64,
    p_required: ExtendedPower,
    params: &SystemParams,
) -> PerStateDecision {
    let price = dual.net_price(state, params);
    let p = if price < 0.0 {
        params.p_peak
    } else {
        match p_required {
            ExtendedPower::Finite(p) if p <= params.p_peak && price * p <= 1.0 => p,
            _ => 0.0,
        }
    };
    PerStateDecision::new(p, alpha_bar)
}

/// Split maximizing the secrecy rate at fixed power `p_bar`.
///
/// With `x = σ₁²/(h p̄) - σ₂²/(g p̄)`: 0 for `x < -1`, `(1 + x)/2` for
/// `-1 ≤ x < 1`, and 1 for `x ≥ 1` (where the rate is zero for every split).
/// `h = 0` takes the `x → +∞` limit and `g = 0` the `x → -∞` limit; with no
/// power, or both gains zero, every split is equivalent and 0 is returned.
pub fn optimal_split_given_power(state: &FadingState, p_bar: f64, params: &SystemParams) -> f64 {
    if !(p_bar > 0.0) || (state.h == 0.0 && state.g == 0.0) {
        return 0.0;
    }
    if state.h == 0.0 {
        return 1.0;
    }
    if state.g == 0.0 {
        return 0.0;
    }
    let x = params.sigma1_sq / (state.h * p_bar) - params.sigma2_sq / (state.g * p_bar);
    if x < -1.0 {
        0.0
    } else if x < 1.0 {
        0.5 + 0.5 * x
    } else {
        1.0
    }
}

/// Split for the benchmark where the IR cannot cancel the AN: always zero,
/// since the rate is non-increasing in the split.
pub fn solve_nocancel_split(_state: &FadingState, _p_bar: f64, _params: &SystemParams) -> f64 {
    0.0
}

/// Coefficients of the cubic numerator of `∂L2/∂p` at a fixed split.
///
/// Where the clamp in the secrecy rate is inactive,
/// `∂L2/∂p = (a p³ + b p² + c p + d) / E(p)` with
/// `E(p) = (σ₁² + (1-ᾱ)hp)(σ₂² + ᾱgp)(σ₂² + gp) ln 2 > 0`.
/// `f` is the shared subexpression substituted into `b` and `c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub f: f64,
    alpha_bar: f64,
    h: f64,
    g: f64,
    sigma1_sq: f64,
    sigma2_sq: f64,
}

impl CubicCoefficients {
    /// Denominator `E(p)`.
    pub fn e(&self, p: f64) -> f64 {
        (self.sigma1_sq + (1.0 - self.alpha_bar) * p * self.h)
            * (self.sigma2_sq + self.alpha_bar * p * self.g)
            * (self.sigma2_sq + p * self.g)
            * LN_2
    }

    pub fn numerator(&self, p: f64) -> f64 {
        ((self.a * p + self.b) * p + self.c) * p + self.d
    }

    /// Power below which the secrecy rate is clamped to zero,
    /// `σ₁²/(ᾱh) - σ₂²/(ᾱg)` floored at zero. `Infinite` when a gain or the
    /// split is zero, where the clamp never switches inside the range.
    pub fn breakpoint(&self) -> ExtendedPower {
        if self.alpha_bar > 0.0 && self.h > 0.0 && self.g > 0.0 {
            let t = self.sigma1_sq / (self.alpha_bar * self.h)
                - self.sigma2_sq / (self.alpha_bar * self.g);
            ExtendedPower::Finite(t.max(0.0))
        } else {
            ExtendedPower::Infinite
        }
    }
}

pub fn cubic_coefficients(
    state: &FadingState,
    dual: &DualPoint,
    alpha_bar: f64,
    params: &SystemParams,
) -> CubicCoefficients {
    let (h, g) = (state.h, state.g);
    let (s1, s2) = (params.sigma1_sq, params.sigma2_sq);
    let ab = alpha_bar;
    let price = dual.net_price(state, params);
    let f = g * s2 * price * (1.0 + ab) * LN_2;
    let a = ab * h * g * g * price * (ab - 1.0) * LN_2;
    let b = h * (ab - 1.0) * f - ab * h * g * g * (ab - 1.0) - ab * g * g * s1 * price * LN_2;
    let c = h * s2 * s2 * price * (ab - 1.0) * LN_2
        - s1 * f
        - h * g * s2 * (ab - 1.0) * (ab - 1.0)
        - (h * g * s2 + ab * h * g * s2) * (ab - 1.0);
    let d = g * s2 * s1 * (ab - 1.0) - h * s2 * s2 * (ab - 1.0) - s2 * s2 * s1 * price * LN_2;
    CubicCoefficients {
        a,
        b,
        c,
        d,
        f,
        alpha_bar,
        h,
        g,
        sigma1_sq: s1,
        sigma2_sq: s2,
    }
}

/// Sorted, de-duplicated candidate powers: in-range roots, both endpoints,
/// and the clamp breakpoint when it lies strictly inside `(0, p_peak)`.
pub fn candidate_set(roots: &[f64], breakpoint: ExtendedPower, p_peak: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(6);
    out.push(0.0);
    out.extend(roots.iter().copied().filter(|&r| (0.0..=p_peak).contains(&r)));
    if let ExtendedPower::Finite(t) = breakpoint {
        if t > 0.0 && t < p_peak {
            out.push(t);
        }
    }
    out.push(p_peak);
    out.sort_by(f64::total_cmp);
    let eps = 1e-12 * p_peak;
    out.dedup_by(|x, y| (*x - *y).abs() <= eps);
    out
}

/// Best power for the rate subproblem at split `alpha_bar`, chosen among the
/// candidate set.
pub fn solve_p2_sub_fixed_alpha(
    state: &FadingState,
    dual: &DualPoint,
    alpha_bar: f64,
    params: &SystemParams,
) -> f64 {
    p2_fixed_alpha(state, dual, alpha_bar, params).0
}

/// Like [`solve_p2_sub_fixed_alpha`] but also returns the `L2` value.
pub fn p2_fixed_alpha(
    state: &FadingState,
    dual: &DualPoint,
    alpha_bar: f64,
    params: &SystemParams,
) -> (f64, f64) {
    let coef = cubic_coefficients(state, dual, alpha_bar, params);
    let pk = params.p_peak;
    // Solve in u = p / p_peak on [0, 1].
    let mut roots = real_roots_cubic_in(coef.a * pk * pk * pk, coef.b * pk * pk, coef.c * pk, coef.d, 0.0, 1.0);
    for r in &mut roots {
        *r *= pk;
    }
    best_candidate(
        candidate_set(&roots, coef.breakpoint(), pk)
            .into_iter()
            .map(|p| (p, alpha_bar)),
        state,
        dual,
        params,
    )
    .map(|(p, _, v)| (p, v))
    .expect("candidate set always holds both endpoints")
}

fn best_candidate<I>(
    cands: I,
    state: &FadingState,
    dual: &DualPoint,
    params: &SystemParams,
) -> Option<(f64, f64, f64)>
where
    I: IntoIterator<Item = (f64, f64)>,
{
    let mut best: Option<(f64, f64, f64)> = None;
    for (p, alpha) in cands {
        let v = lagrangian_rate(state, &PerStateDecision { p, alpha }, dual, params);
        let better = match best {
            None => true,
            Some((bp, ba, bv)) => v > bv || (v == bv && (p < bp || (p == bp && alpha < ba))),
        };
        if better {
            best = Some((p, alpha, v));
        }
    }
    best
}

/// Joint maximizer of `L2` obtained by substituting the optimal split at each
/// power and maximizing the resulting one-dimensional function.
///
/// With `c = σ₁²/h - σ₂²/g`, the optimal split is zero for `p ≤ -c`, zero
/// rate for `p ≤ c`, and `(1 + c/p)/2` beyond `|c|`. In the last region the
/// rate is `log2(h T² / (4 g σ₁² (gp + σ₂²)))` with `T = gp + gσ₁²/h + σ₂²`,
/// whose stationarity condition is a quadratic in `w = gp + σ₂²`. In the
/// zero-split region stationarity is a quadratic in `p`. Returns
/// `(p, alpha, L2)`.
pub fn p2_joint_by_split_substitution(
    state: &FadingState,
    dual: &DualPoint,
    params: &SystemParams,
) -> (f64, f64, f64) {
    let price = dual.net_price(state, params);
    let (h, g) = (state.h, state.g);
    let (s1, s2) = (params.sigma1_sq, params.sigma2_sq);
    let pk = params.p_peak;
    let in_range = |p: f64, lo: f64, hi: f64| p >= lo && p <= hi;
    let mut powers = vec![0.0, pk];

    if h > 0.0 && g == 0.0 {
        // No eavesdropper channel: log2(1 + hp/σ₁²) - price p is concave.
        if price > 0.0 {
            let p = 1.0 / (price * LN_2) - s1 / h;
            if in_range(p, 0.0, pk) {
                powers.push(p);
            }
        }
    } else if h > 0.0 && g > 0.0 {
        let c = s1 / h - s2 / g;
        let edge = c.abs();
        if edge > 0.0 && edge < pk {
            powers.push(edge);
        }
        if c < 0.0 {
            let sl = price * LN_2;
            let q = real_roots_cubic(0.0, sl * h * g, sl * (s1 * g + s2 * h), sl * s1 * s2 - (h * s2 - g * s1));
            powers.extend(q.as_slice().iter().copied().filter(|&p| in_range(p, 0.0, edge.min(pk))));
        }
        let k = g * s1 / h;
        let sl = price * LN_2;
        let q = real_roots_cubic(0.0, sl, sl * k - g, g * k);
        powers.extend(
            q.as_slice()
                .iter()
                .map(|w| (w - s2) / g)
                .filter(|&p| in_range(p, edge, pk)),
        );
    }
    powers.sort_by(f64::total_cmp);
    powers.dedup();

    let cands = powers.into_iter().map(|p| {
        let alpha = optimal_split_given_power(state, p, params);
        let alpha = if alpha >= 1.0 { 0.0 } else { alpha.min(1.0 - ALPHA_UPPER_CLIP) };
        (p, alpha)
    });
    best_candidate(cands, state, dual, params).expect("at least the endpoints")
}

/// Rate subproblem over power and split jointly.
///
/// Two stages: for each split on a uniform grid of `alpha_grid_n` points in
/// `[0, 1 - ALPHA_UPPER_CLIP]` the best power comes from [`p2_fixed_alpha`],
/// then golden-section search refines around the grid winner. The split
/// from [`p2_joint_by_split_substitution`] is evaluated alongside; when it
/// already matches or beats the grid winner, refinement cannot improve on
/// it and is skipped.
pub fn solve_p2_sub(
    state: &FadingState,
    dual: &DualPoint,
    params: &SystemParams,
    alpha_grid_n: usize,
) -> PerStateDecision {
    assert!(alpha_grid_n >= 2, "alpha grid needs at least two points");
    let hi = 1.0 - ALPHA_UPPER_CLIP;
    let (_, sub_alpha, _) = p2_joint_by_split_substitution(state, dual, params);
    let (sub_p, sub_val) = p2_fixed_alpha(state, dual, sub_alpha, params);

    // Minimize the negated value; ties in value fall to the smaller split.
    let neg = |alpha: f64| -p2_fixed_alpha(state, dual, alpha, params).1;
    let grid = grid_min(&neg, 0.0, hi, alpha_grid_n);
    let grid_alpha = if sub_val >= -grid.value {
        grid.x
    } else {
        refine_grid_min(&neg, &grid, ALPHA_REFINE_TOL).0
    };
    let (grid_p, grid_val) = p2_fixed_alpha(state, dual, grid_alpha, params);

    let take_sub = sub_val > grid_val
        || (sub_val == grid_val && (sub_p < grid_p || (sub_p == grid_p && sub_alpha < grid_alpha)));
    if take_sub {
        PerStateDecision::new(sub_p, sub_alpha)
    } else {
        PerStateDecision::new(grid_p, grid_alpha)
    }
}
