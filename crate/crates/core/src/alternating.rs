//! Suboptimal solvers that alternate between power allocation at fixed
//! splits and split updates at fixed powers, plus the fixed-split heuristic.
//!
//! Each round solves the power problem by the dual method with every split
//! held, then moves each split to the rate-maximizing value for its power.
//! The split step can only help at fixed power, so a round is accepted only
//! if the objective does not get worse; otherwise the previous round is kept
//! and the loop stops.

use std::io::Write;

use crate::dual::{DualProblem, DualSolveReport, ProblemKind, SolverOptions};
use crate::model::{FadingEnsemble, PerStateDecision, SchemeKind, SystemParams};
use crate::perstate::{optimal_split_given_power, ALPHA_UPPER_CLIP};
use crate::{fmt_sci, Constraints, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlternatingOptions {
    pub max_rounds: usize,
    /// Stop when the objective changes by less than this, relative.
    pub obj_tol: f64,
    /// Split used by every state in the first round.
    pub initial_alpha: f64,
}

impl Default for AlternatingOptions {
    fn default() -> Self {
        Self {
            max_rounds: 20,
            obj_tol: 1e-6,
            initial_alpha: 0.5,
        }
    }
}

impl AlternatingOptions {
    pub fn violations(&self, kind: ProblemKind) -> Vec<String> {
        let mut v = Vec::new();
        if self.max_rounds == 0 {
            v.push("max_rounds must be at least 1".to_string());
        }
        if !(self.obj_tol > 0.0 && self.obj_tol.is_finite()) {
            v.push(format!("obj_tol must be positive, got {}", self.obj_tol));
        }
        let upper_ok = match kind {
            ProblemKind::OutageMin => self.initial_alpha <= 1.0,
            ProblemKind::EscMax => self.initial_alpha < 1.0,
        };
        if !(self.initial_alpha >= 0.0 && upper_ok) {
            v.push(format!(
                "initial_alpha {} out of range for {} problems",
                self.initial_alpha,
                kind.label()
            ));
        }
        v
    }
}

/// Objective and constraint usage after one accepted round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub objective: f64,
    pub avg_power: f64,
    pub avg_harvest: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingReport {
    /// Final decisions; `iterations` sums the ellipsoid iterations of all
    /// rounds.
    pub report: DualSolveReport,
    pub rounds: Vec<RoundRecord>,
}

impl AlternatingReport {
    pub fn write_rounds_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "round,objective,avg_power,avg_harvest")?;
        for r in &self.rounds {
            writeln!(
                out,
                "{},{},{},{}",
                r.round,
                fmt_sci(r.objective),
                fmt_sci(r.avg_power),
                fmt_sci(r.avg_harvest)
            )?;
        }
        Ok(())
    }
}

/// Alternating optimization for outage minimization.
pub fn solve_p1_alternating(
    ensemble: &FadingEnsemble,
    params: &SystemParams,
    constraints: &Constraints,
    opts: &AlternatingOptions,
    solver: &SolverOptions,
) -> Result<AlternatingReport> {
    solve_alternating(ProblemKind::OutageMin, ensemble, params, constraints, opts, solver)
}

/// Alternating optimization for ergodic secrecy capacity.
pub fn solve_p2_alternating(
    ensemble: &FadingEnsemble,
    params: &SystemParams,
    constraints: &Constraints,
    opts: &AlternatingOptions,
    solver: &SolverOptions,
) -> Result<AlternatingReport> {
    solve_alternating(ProblemKind::EscMax, ensemble, params, constraints, opts, solver)
}

/// One power solve with every split fixed at `alpha_bar`.
pub fn solve_fixed_alpha(
    kind: ProblemKind,
    ensemble: &FadingEnsemble,
    params: &SystemParams,
    constraints: &Constraints,
    alpha_bar: f64,
    solver: &SolverOptions,
) -> Result<DualSolveReport> {
    DualProblem::fixed_split(
        kind,
        SchemeKind::AnCancelled,
        ensemble,
        params,
        constraints,
        vec![alpha_bar; ensemble.len()],
    )?
    .solve(solver)
}

fn clip(kind: ProblemKind, alpha: f64) -> f64 {
    match kind {
        ProblemKind::OutageMin => alpha,
        ProblemKind::EscMax => alpha.min(1.0 - ALPHA_UPPER_CLIP),
    }
}

fn worse(kind: ProblemKind, candidate: f64, incumbent: f64) -> bool {
    match kind {
        ProblemKind::OutageMin => candidate > incumbent,
        ProblemKind::EscMax => candidate < incumbent,
    }
}

/// Alternating optimization for either problem.
pub fn solve_alternating(
    kind: ProblemKind,
    ensemble: &FadingEnsemble,
    params: &SystemParams,
    constraints: &Constraints,
    opts: &AlternatingOptions,
    solver: &SolverOptions,
) -> Result<AlternatingReport> {
    let v = opts.violations(kind);
    if !v.is_empty() {
        return Err(Error::InvalidParameter(v.join("; ")));
    }
    let states = ensemble.states();
    let mut alphas = vec![clip(kind, opts.initial_alpha); states.len()];
    let mut current: Option<DualSolveReport> = None;
    let mut rounds = Vec::new();
    let mut iterations = 0;

    for round in 1..=opts.max_rounds {
        let problem = DualProblem::fixed_split(
            kind,
            SchemeKind::AnCancelled,
            ensemble,
            params,
            constraints,
            alphas.clone(),
        )?;
        let mut rep = problem.solve(solver)?;
        iterations += rep.iterations;

        let updated: Vec<PerStateDecision> = states
            .iter()
            .zip(&rep.decisions)
            .map(|(s, d)| PerStateDecision::new(d.p, clip(kind, optimal_split_given_power(s, d.p, params))))
            .collect();
        let (objective, avg_power, avg_harvest) = problem.primal_summary(&updated);

        let (converged, stalled) = match &current {
            Some(prev) => {
                if worse(kind, objective, prev.objective) {
                    break;
                }
                let change = (objective - prev.objective).abs();
                let unchanged = prev.decisions.iter().zip(&updated).all(|(a, b)| {
                    (a.p - b.p).abs() <= 1e-12 * a.p.abs().max(1.0) && (a.alpha - b.alpha).abs() <= 1e-12
                });
                (change <= opts.obj_tol * prev.objective.abs().max(f64::MIN_POSITIVE), unchanged)
            }
            None => (false, false),
        };

        alphas = updated.iter().map(|d| d.alpha).collect();
        rep.decisions = updated;
        rep.objective = objective;
        rep.avg_power = avg_power;
        rep.avg_harvest = avg_harvest;
        rep.dual_gap_estimate = match kind {
            ProblemKind::OutageMin => (objective - rep.dual_value).max(0.0),
            ProblemKind::EscMax => (rep.dual_value - objective).max(0.0),
        };
        rounds.push(RoundRecord {
            round,
            objective,
            avg_power,
            avg_harvest,
        });
        current = Some(rep);
        if converged || stalled {
            break;
        }
    }
    let mut report = current.expect("first round is always accepted");
    report.iterations = iterations;
    Ok(AlternatingReport { report, rounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_ensemble, GeometryConfig};

    fn small() -> (FadingEnsemble, SystemParams) {
        let ens = generate_ensemble(&GeometryConfig::default(), 10, 3).unwrap();
        (ens, SystemParams::default())
    }

    #[test]
    fn rejects_bad_options() {
        let (ens, prm) = small();
        let opts = AlternatingOptions {
            initial_alpha: 1.0,
            ..Default::default()
        };
        let r = solve_p2_alternating(&ens, &prm, &Constraints::default(), &opts, &SolverOptions::default());
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn outage_rounds_are_monotone() {
        let (ens, prm) = small();
        let c = Constraints { q_bar: 5e-6 };
        let out = solve_p1_alternating(&ens, &prm, &c, &AlternatingOptions::default(), &SolverOptions::default())
            .unwrap();
        for w in out.rounds.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-9, "{:?}", out.rounds);
        }
        assert_eq!(out.report.objective, out.rounds.last().unwrap().objective);
    }

    #[test]
    fn rate_rounds_are_monotone() {
        let (ens, prm) = small();
        let c = Constraints { q_bar: 5e-6 };
        let out = solve_p2_alternating(&ens, &prm, &c, &AlternatingOptions::default(), &SolverOptions::default())
            .unwrap();
        for w in out.rounds.windows(2) {
            assert!(w[1].objective >= w[0].objective - 1e-9, "{:?}", out.rounds);
        }
        assert!(out.report.decisions.iter().all(|d| d.alpha < 1.0));
    }

    #[test]
    fn single_round_is_fixed_solve_plus_split_update() {
        let (ens, prm) = small();
        let c = Constraints { q_bar: 2e-6 };
        let solver = SolverOptions::default();
        let opts = AlternatingOptions {
            max_rounds: 1,
            initial_alpha: 0.0,
            ..Default::default()
        };
        let alt = solve_p1_alternating(&ens, &prm, &c, &opts, &solver).unwrap();
        let fixed = solve_fixed_alpha(ProblemKind::OutageMin, &ens, &prm, &c, 0.0, &solver).unwrap();
        for ((s, a), f) in ens.states().iter().zip(&alt.report.decisions).zip(&fixed.decisions) {
            assert_eq!(a.p, f.p);
            assert_eq!(a.alpha, optimal_split_given_power(s, f.p, &prm));
        }
    }

    #[test]
    fn writes_round_trace() {
        let (ens, prm) = small();
        let out = solve_p1_alternating(
            &ens,
            &prm,
            &Constraints::default(),
            &AlternatingOptions::default(),
            &SolverOptions::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        out.write_rounds_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("round,objective,avg_power,avg_harvest\n"));
        assert_eq!(text.lines().count(), out.rounds.len() + 1);
    }
}
