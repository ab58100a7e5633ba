//! Cross-checks of the per-state closed forms against brute-force oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use secrecy_swipt::model::{lagrangian_outage, lagrangian_rate};
use secrecy_swipt::perstate::{
    min_power_for_rate, optimal_split_given_power, solve_p1_sub, solve_p2_sub_fixed_alpha, ExtendedPower,
};
use secrecy_swipt::{secrecy_rate, DualPoint, FadingState, PerStateDecision, SchemeKind, SystemParams};
use secrecy_swipt_oracle::{
    bisect_rate_inverse, grid_max_l2, grid_max_rate_over_split, grid_min_l1,
};

/// Result of one named check over all trials.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Largest observed excess over the oracle.
    pub worst: f64,
}

/// Grid sizes of the oracles; the defaults match the acceptance suite.
#[derive(Debug, Clone, Copy)]
pub struct OracleSizes {
    pub outage_grid: usize,
    pub rate_grid: usize,
    pub split_grid: usize,
}

impl Default for OracleSizes {
    fn default() -> Self {
        Self {
            outage_grid: 500,
            rate_grid: 100_000,
            split_grid: 100_001,
        }
    }
}

fn log_uniform(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo.log10()..hi.log10()))
}

/// Runs the per-state suite on `trials` random instances around `base`.
pub fn perstate_suite(base: &SystemParams, trials: usize, seed: u64, sizes: OracleSizes) -> Vec<CheckResult> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut checks = [
        CheckResult { name: "outage subproblem vs grid", trials, failures: 0, worst: 0.0 },
        CheckResult { name: "fixed-split rate power vs grid", trials, failures: 0, worst: 0.0 },
        CheckResult { name: "split rule vs grid", trials, failures: 0, worst: 0.0 },
        CheckResult { name: "minimum power vs bisection", trials, failures: 0, worst: 0.0 },
    ];
    for _ in 0..trials {
        let s = FadingState::new(log_uniform(&mut rng, 1e-7, 1e-3), log_uniform(&mut rng, 1e-7, 1e-3))
            .expect("positive gains");
        let prm = base.with_r0(rng.gen_range(0.5..9.0));
        let dual = DualPoint::new(rng.gen_range(0.0..40.0), rng.gen_range(0.0..4e5)).expect("valid multipliers");

        let d = solve_p1_sub(&s, &dual, &prm);
        let (grid, _, _) = grid_min_l1(&s, &dual, &prm, sizes.outage_grid, sizes.outage_grid);
        record(&mut checks[0], lagrangian_outage(&s, &d, &dual, &prm) - grid, 1e-6);

        let alpha_bar = rng.gen_range(0.0..1.0);
        let p = solve_p2_sub_fixed_alpha(&s, &dual, alpha_bar, &prm);
        let ours = lagrangian_rate(&s, &PerStateDecision::new(p, alpha_bar), &dual, &prm);
        let (grid, _) = grid_max_l2(&s, &dual, alpha_bar, &prm, sizes.rate_grid);
        record(&mut checks[1], grid - ours, 1e-6);

        let p_bar = rng.gen_range(0.0..prm.p_peak);
        let a = optimal_split_given_power(&s, p_bar, &prm);
        let ours = secrecy_rate(SchemeKind::AnCancelled, &s, &PerStateDecision::new(p_bar, a), &prm);
        let (grid, _) = grid_max_rate_over_split(&s, p_bar, &prm, sizes.split_grid);
        record(&mut checks[2], grid - ours, 1e-9);

        let alpha = rng.gen_range(0.0..1.0);
        let excess = match (min_power_for_rate(alpha, &s, &prm), bisect_rate_inverse(&s, alpha, &prm)) {
            (ExtendedPower::Finite(x), ExtendedPower::Finite(y)) => (x - y).abs() / y.max(f64::MIN_POSITIVE),
            (ExtendedPower::Finite(x), ExtendedPower::Infinite) if x <= 1e3 * prm.p_peak => f64::INFINITY,
            (ExtendedPower::Infinite, ExtendedPower::Finite(_)) => f64::INFINITY,
            _ => 0.0,
        };
        record(&mut checks[3], excess, 1e-8);
    }
    checks.to_vec()
}

fn record(c: &mut CheckResult, excess: f64, tol: f64) {
    c.worst = c.worst.max(excess);
    if excess > tol {
        c.failures += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let sizes = OracleSizes {
            outage_grid: 60,
            rate_grid: 2000,
            split_grid: 2001,
        };
        let out = perstate_suite(&SystemParams::default(), 20, 3, sizes);
        assert_eq!(out.len(), 4);
        for c in out {
            assert_eq!(c.failures, 0, "{c:?}");
            assert_eq!(c.trials, 20);
        }
    }

    #[test]
    fn same_seed_same_report() {
        let sizes = OracleSizes {
            outage_grid: 20,
            rate_grid: 200,
            split_grid: 201,
        };
        let a = perstate_suite(&SystemParams::default(), 5, 8, sizes);
        let b = perstate_suite(&SystemParams::default(), 5, 8, sizes);
        assert_eq!(a, b);
    }
}
