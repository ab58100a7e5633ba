//! Outage-energy and rate-energy boundaries traced by sweeping the
//! harvested-power floor, for every transmission scheme.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::alternating::{solve_alternating, AlternatingOptions};
use crate::dual::{check_feasibility, DualProblem, DualSolveReport, ProblemKind, SolverOptions};
use crate::model::{FadingEnsemble, PerStateDecision, SchemeKind, SystemParams, TradeoffPoint};
use crate::{fmt_sci, Constraints, Error, Result};

/// Transmission scheme whose boundary is traced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scheme {
    /// Joint per-state power and split optimization.
    Optimal,
    /// Alternating power and split updates.
    Alternating,
    /// Same split in every state, power optimized once.
    FixedAlpha(f64),
    /// No artificial noise.
    NoAn,
    /// AN that the information receiver cannot cancel.
    NoCancel,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Optimal => write!(f, "optimal"),
            Scheme::Alternating => write!(f, "alt"),
            Scheme::FixedAlpha(a) => write!(f, "fixed:{a}"),
            Scheme::NoAn => write!(f, "noan"),
            Scheme::NoCancel => write!(f, "nocancel"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(Scheme::Optimal),
            "alt" => Ok(Scheme::Alternating),
            "noan" => Ok(Scheme::NoAn),
            "nocancel" => Ok(Scheme::NoCancel),
            _ => {
                let bad = || {
                    Error::InvalidParameter(format!(
                        "unknown scheme {s:?}; expected optimal, alt, fixed:<alpha>, noan or nocancel"
                    ))
                };
                let a: f64 = s.strip_prefix("fixed:").ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::InvalidParameter(format!("fixed split {a} outside [0, 1]")));
                }
                Ok(Scheme::FixedAlpha(a))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub scheme: Scheme,
    pub kind: ProblemKind,
    pub q_points: usize,
    /// Sweep ends at this fraction of the largest feasible floor.
    pub q_max_fraction: f64,
}

impl SweepSpec {
    pub fn new(scheme: Scheme, kind: ProblemKind) -> Self {
        Self {
            scheme,
            kind,
            q_points: 11,
            q_max_fraction: 0.98,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.q_points < 2 {
            v.push(format!("q_points must be at least 2, got {}", self.q_points));
        }
        if !(self.q_max_fraction > 0.0 && self.q_max_fraction <= 1.0) {
            v.push(format!("q_max_fraction must lie in (0, 1], got {}", self.q_max_fraction));
        }
        v
    }
}

/// One solved point of a boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryPoint {
    pub q_bar: f64,
    /// Non-outage probability or ergodic secrecy rate, with the achieved
    /// average harvest.
    pub point: TradeoffPoint,
    pub avg_power: f64,
    pub iterations: usize,
    pub dual_gap_estimate: f64,
}

/// Region coordinates of a solve: non-outage probability for outage
/// problems, ergodic secrecy rate for rate problems.
pub fn tradeoff_point(report: &DualSolveReport) -> TradeoffPoint {
    let objective = match report.kind {
        ProblemKind::OutageMin => 1.0 - report.objective,
        ProblemKind::EscMax => report.objective,
    };
    TradeoffPoint {
        objective,
        harvested: report.avg_harvest,
    }
}

/// Benchmark without artificial noise.
pub fn benchmark_noan(
    kind: ProblemKind,
    ensemble: &FadingEnsemble,
    params: &SystemParams,
    constraints: &Constraints,
    solver: &SolverOptions,
) -> Result<DualSolveReport> {
    noan_problem(kind, ensemble, params, constraints)?.solve(solver)
}

fn noan_problem<'a>(
    kind: ProblemKind,
    ensemble: &'a FadingEnsemble,
    params: &SystemParams,
    constraints: &Constraints,
) -> Result<DualProblem<'a>> {
    DualProblem::fixed_split(
        kind,
        SchemeKind::NoAn,
        ensemble,
        params,
        constraints,
        vec![0.0; ensemble.len()],
    )
}

/// Benchmark where the AN cannot be cancelled: since the rate never grows
/// with the split, the optimum sends no AN, so the NoAN decisions are
/// reused with the objective evaluated under the non-cancelling rate.
pub fn benchmark_nocancel(
    kind: ProblemKind,
    ensemble: &FadingEnsemble,
    params: &SystemParams,
    constraints: &Constraints,
    solver: &SolverOptions,
) -> Result<DualSolveReport> {
    let noan = benchmark_noan(kind, ensemble, params, constraints, solver)?;
    nocancel_from_noan(noan, kind, ensemble, params, constraints)
}

fn nocancel_from_noan(
    mut rep: DualSolveReport,
    kind: ProblemKind,
    ensemble: &FadingEnsemble,
    params: &SystemParams,
    constraints: &Constraints,
) -> Result<DualSolveReport> {
    let eval = DualProblem::fixed_split(
        kind,
        SchemeKind::NoCancel,
        ensemble,
        params,
        constraints,
        vec![0.0; ensemble.len()],
    )?;
    for d in &mut rep.decisions {
        *d = PerStateDecision::new(d.p, 0.0);
    }
    let (objective, avg_power, avg_harvest) = eval.primal_summary(&rep.decisions);
    rep.objective = objective;
    rep.avg_power = avg_power;
    rep.avg_harvest = avg_harvest;
    Ok(rep)
}

/// Solves one scheme at one harvest floor.
pub fn solve_scheme(
    scheme: Scheme,
    kind: ProblemKind,
    ensemble: &FadingEnsemble,
    params: &SystemParams,
    constraints: &Constraints,
    solver: &SolverOptions,
    alt: &AlternatingOptions,
) -> Result<DualSolveReport> {
    Prepared::new(scheme, kind, ensemble, params, constraints, solver)?.solve(constraints, solver, alt)
}

/// Scheme state that can be reused across harvest floors.
enum Prepared<'a> {
    Dual(DualProblem<'a>),
    NoCancel(DualProblem<'a>),
    Alternating {
        kind: ProblemKind,
        ensemble: &'a FadingEnsemble,
        params: SystemParams,
    },
}

impl<'a> Prepared<'a> {
    fn new(
        scheme: Scheme,
        kind: ProblemKind,
        ensemble: &'a FadingEnsemble,
        params: &SystemParams,
        constraints: &Constraints,
        solver: &SolverOptions,
    ) -> Result<Self> {
        Ok(match scheme {
            Scheme::Optimal => Prepared::Dual(DualProblem::optimal(kind, ensemble, params, constraints, solver)),
            Scheme::FixedAlpha(a) => {
                if kind == ProblemKind::EscMax && a >= 1.0 {
                    return Err(Error::InvalidParameter(
                        "a fixed split of 1 carries no information in rate problems".to_string(),
                    ));
                }
                Prepared::Dual(DualProblem::fixed_split(
                    kind,
                    SchemeKind::AnCancelled,
                    ensemble,
                    params,
                    constraints,
                    vec![a; ensemble.len()],
                )?)
            }
            Scheme::NoAn => Prepared::Dual(noan_problem(kind, ensemble, params, constraints)?),
            Scheme::NoCancel => Prepared::NoCancel(noan_problem(kind, ensemble, params, constraints)?),
            Scheme::Alternating => Prepared::Alternating {
                kind,
                ensemble,
                params: *params,
            },
        })
    }

    fn solve(
        &self,
        constraints: &Constraints,
        solver: &SolverOptions,
        alt: &AlternatingOptions,
    ) -> Result<DualSolveReport> {
        match self {
            Prepared::Dual(p) => p.with_constraints(constraints).solve(solver),
            Prepared::NoCancel(p) => {
                let rep = p.with_constraints(constraints).solve(solver)?;
                let ensemble = p.ensemble();
                nocancel_from_noan(rep, p.kind(), ensemble, p.params(), constraints)
            }
            Prepared::Alternating {
                kind,
                ensemble,
                params,
            } => solve_alternating(*kind, ensemble, params, constraints, alt, solver).map(|r| r.report),
        }
    }
}

/// Uniform floor grid from 0 to `q_max_fraction` of the largest feasible
/// floor.
pub fn q_grid(spec: &SweepSpec, ensemble: &FadingEnsemble, params: &SystemParams) -> Vec<f64> {
    let q_max = check_feasibility(ensemble, params, &Constraints::default()).max_q_bar;
    let top = spec.q_max_fraction * q_max;
    let n = spec.q_points;
    (0..n)
        .map(|i| if i + 1 == n { top } else { top * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Traces a boundary over the uniform floor grid of `spec`.
pub fn trace_boundary(
    spec: &SweepSpec,
    ensemble: &FadingEnsemble,
    params: &SystemParams,
    solver: &SolverOptions,
    alt: &AlternatingOptions,
) -> Result<Vec<BoundaryPoint>> {
    let v = spec.violations();
    if !v.is_empty() {
        return Err(Error::InvalidParameter(v.join("; ")));
    }
    let q = q_grid(spec, ensemble, params);
    trace_boundary_at(spec.scheme, spec.kind, &q, ensemble, params, solver, alt)
}

/// Traces a boundary at explicit harvest floors, in the given order.
/// The first failing floor aborts the sweep.
pub fn trace_boundary_at(
    scheme: Scheme,
    kind: ProblemKind,
    q_bars: &[f64],
    ensemble: &FadingEnsemble,
    params: &SystemParams,
    solver: &SolverOptions,
    alt: &AlternatingOptions,
) -> Result<Vec<BoundaryPoint>> {
    let first = Constraints::new(q_bars.first().copied().unwrap_or(0.0))?;
    let prepared = Prepared::new(scheme, kind, ensemble, params, &first, solver)?;
    let results: Vec<Result<BoundaryPoint>> = q_bars
        .par_iter()
        .map(|&q_bar| {
            let c = Constraints::new(q_bar)?;
            let rep = prepared.solve(&c, solver, alt)?;
            Ok(BoundaryPoint {
                q_bar,
                point: tradeoff_point(&rep),
                avg_power: rep.avg_power,
                iterations: rep.iterations,
                dual_gap_estimate: rep.dual_gap_estimate,
            })
        })
        .collect();
    q_bars
        .iter()
        .zip(results)
        .map(|(&q_bar, r)| {
            r.map_err(|e| Error::Sweep {
                q_bar,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Writes boundary points as CSV with columns
/// `scheme,kind,q_bar,objective,harvested_w,avg_power_w,iterations`.
pub fn write_boundary_csv<W: Write>(
    mut out: W,
    scheme: Scheme,
    kind: ProblemKind,
    points: &[BoundaryPoint],
) -> std::io::Result<()> {
    writeln!(out, "scheme,kind,q_bar,objective,harvested_w,avg_power_w,iterations")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            scheme,
            kind.label(),
            fmt_sci(p.q_bar),
            fmt_sci(p.point.objective),
            fmt_sci(p.point.harvested),
            fmt_sci(p.avg_power),
            p.iterations
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{generate_ensemble, GeometryConfig};

    #[test]
    fn scheme_round_trips_through_text() {
        for s in ["optimal", "alt", "fixed:0.5", "noan", "nocancel"] {
            assert_eq!(s.parse::<Scheme>().unwrap().to_string(), s);
        }
        assert!("fixed:1.5".parse::<Scheme>().is_err());
        assert!("fixed:x".parse::<Scheme>().is_err());
        assert!("greedy".parse::<Scheme>().is_err());
    }

    #[test]
    fn grid_spans_zero_to_fraction_of_max() {
        let ens = generate_ensemble(&GeometryConfig::default(), 200, 1).unwrap();
        let prm = SystemParams::default();
        let spec = SweepSpec::new(Scheme::NoAn, ProblemKind::OutageMin);
        let q = q_grid(&spec, &ens, &prm);
        let max = check_feasibility(&ens, &prm, &Constraints::default()).max_q_bar;
        assert_eq!(q.len(), 11);
        assert_eq!(q[0], 0.0);
        assert_eq!(q[10], 0.98 * max);
        assert!(q.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn nocancel_sends_no_noise_and_matches_noan() {
        let ens = generate_ensemble(&GeometryConfig::default(), 40, 2).unwrap();
        let prm = SystemParams::default();
        let c = Constraints { q_bar: 4e-6 };
        let solver = SolverOptions::default();
        for kind in [ProblemKind::OutageMin, ProblemKind::EscMax] {
            let nc = benchmark_nocancel(kind, &ens, &prm, &c, &solver).unwrap();
            let na = benchmark_noan(kind, &ens, &prm, &c, &solver).unwrap();
            assert!(nc.decisions.iter().all(|d| d.alpha == 0.0));
            assert_eq!(nc.objective, na.objective);
        }
    }

    #[test]
    fn infeasible_floor_aborts_sweep_with_location() {
        let ens = generate_ensemble(&GeometryConfig::default(), 30, 4).unwrap();
        let prm = SystemParams::default();
        let max = check_feasibility(&ens, &prm, &Constraints::default()).max_q_bar;
        let err = trace_boundary_at(
            Scheme::NoAn,
            ProblemKind::OutageMin,
            &[0.0, 2.0 * max],
            &ens,
            &prm,
            &SolverOptions::default(),
            &AlternatingOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::Sweep { q_bar, source } => {
                assert_eq!(q_bar, 2.0 * max);
                assert!(matches!(*source, Error::Infeasible { .. }));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn boundary_csv_layout() {
        let pts = [BoundaryPoint {
            q_bar: 1e-6,
            point: TradeoffPoint {
                objective: 0.5,
                harvested: 1.5e-6,
            },
            avg_power: 0.1,
            iterations: 42,
            dual_gap_estimate: 0.0,
        }];
        let mut buf = Vec::new();
        write_boundary_csv(&mut buf, Scheme::FixedAlpha(0.5), ProblemKind::EscMax, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "scheme,kind,q_bar,objective,harvested_w,avg_power_w,iterations");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[0], "fixed:0.5");
        assert_eq!(row[1], "esc");
        assert_eq!(row[2].parse::<f64>().unwrap(), 1e-6);
        assert_eq!(row[6], "42");
    }
}
