//! Lagrange dual decomposition over a fading ensemble.
//!
//! For multipliers `(lambda, mu)` on the average-power and harvested-power
//! constraints the sampled problem splits into one subproblem per state. The
//! dual function is searched with a two-dimensional ellipsoid method, then a
//! primal solution is recovered at the best multipliers and repaired if it
//! violates a coupled constraint.

use std::io::Write;

use rayon::prelude::*;

use crate::model::{
    harvested_power, outage_indicator, secrecy_rate, DualPoint, FadingEnsemble, FadingState,
    PerStateDecision, SchemeKind, SystemParams,
};
use crate::perstate::{
    min_power_for_rate, search_min_split, solve_p11_sub_given_power, solve_p1_sub_given_split,
    solve_p2_sub, solve_p2_sub_fixed_alpha, ExtendedPower, SplitSearchResult, ALPHA_GRID_POINTS,
    ALPHA_REFINE_TOL,
};
use crate::{fmt_sci, Error, Result};

/// Which stochastic program is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    /// Minimize the secrecy outage probability.
    OutageMin,
    /// Maximize the ergodic secrecy capacity.
    EscMax,
}

impl ProblemKind {
    pub fn label(self) -> &'static str {
        match self {
            ProblemKind::OutageMin => "outage",
            ProblemKind::EscMax => "esc",
        }
    }
}

/// Coupled constraint data beyond the power limits in [`SystemParams`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Constraints {
    /// Floor on the average harvested power (W).
    pub q_bar: f64,
}

impl Constraints {
    pub fn new(q_bar: f64) -> Result<Self> {
        if !(q_bar >= 0.0 && q_bar.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "q_bar must be finite and non-negative, got {q_bar}"
            )));
        }
        Ok(Self { q_bar })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Stop once both ellipsoid semi-extents fall below `tol` times their
    /// initial values.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative slack allowed on both coupled constraints.
    pub feas_tol: f64,
    /// Split grid size for the joint rate subproblem.
    pub alpha_grid_n: usize,
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
            feas_tol: 1e-4,
            alpha_grid_n: ALPHA_GRID_POINTS,
            record_trace: false,
        }
    }
}

impl SolverOptions {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.tol > 0.0 && self.tol < 1.0) {
            v.push(format!("tol must lie in (0, 1), got {}", self.tol));
        }
        if self.max_iter == 0 {
            v.push("max_iter must be at least 1".to_string());
        }
        if !(self.feas_tol >= 0.0 && self.feas_tol.is_finite()) {
            v.push(format!("feas_tol must be finite and non-negative, got {}", self.feas_tol));
        }
        if self.alpha_grid_n < 2 {
            v.push(format!("alpha_grid_n must be at least 2, got {}", self.alpha_grid_n));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidParameter(v.join("; ")))
        }
    }
}

/// One ellipsoid iteration at which the dual function was evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub lambda: f64,
    pub mu: f64,
    pub dual_value: f64,
    pub subgrad_p: f64,
    pub subgrad_q: f64,
}

/// Dual function value and the per-state decisions attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct DualEvaluation {
    pub dual: DualPoint,
    pub value: f64,
    pub decisions: Vec<PerStateDecision>,
    pub avg_power: f64,
    pub avg_harvest: f64,
    /// Primal objective of `decisions`: outage probability or ergodic rate.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolveReport {
    pub kind: ProblemKind,
    /// Multipliers at which the primal decisions were produced.
    pub dual: DualPoint,
    pub decisions: Vec<PerStateDecision>,
    /// Outage probability for [`ProblemKind::OutageMin`], ergodic secrecy
    /// rate in bits/s/Hz for [`ProblemKind::EscMax`].
    pub objective: f64,
    pub avg_power: f64,
    pub avg_harvest: f64,
    pub iterations: usize,
    /// Best dual function value found.
    pub dual_value: f64,
    /// Non-negative distance between the primal objective and the best dual
    /// bound.
    pub dual_gap_estimate: f64,
    /// True when the decisions were repaired greedily rather than read off
    /// a multiplier pair.
    pub repaired: bool,
    pub trace: Vec<TraceRow>,
}

impl DualSolveReport {
    /// Writes the ellipsoid trace as CSV.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iter,lambda,mu,dual_value,subgrad_p,subgrad_q")?;
        for r in &self.trace {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.iter,
                fmt_sci(r.lambda),
                fmt_sci(r.mu),
                fmt_sci(r.dual_value),
                fmt_sci(r.subgrad_p),
                fmt_sci(r.subgrad_q)
            )?;
        }
        Ok(())
    }
}

/// `(E[p] - P_avg, Q̄ - E[Q])`: a supergradient of the concave outage dual,
/// and the negated subgradient of the convex rate dual.
pub fn subgradient(
    avg_power: f64,
    avg_harvest: f64,
    params: &SystemParams,
    constraints: &Constraints,
) -> (f64, f64) {
    (avg_power - params.p_avg, constraints.q_bar - avg_harvest)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feasibility {
    /// Largest average harvest reachable under the power limits (W).
    pub max_q_bar: f64,
    pub feasible: bool,
}

/// Greedy fill by descending `g`: states take peak power until the
/// average-power budget binds, the last one fractionally.
pub fn check_feasibility(
    ensemble: &FadingEnsemble,
    params: &SystemParams,
    constraints: &Constraints,
) -> Feasibility {
    let states = ensemble.states();
    let n = states.len() as f64;
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by(|&a, &b| states[b].g.total_cmp(&states[a].g));
    let mut budget = params.p_avg * n;
    let mut total = 0.0;
    for i in order {
        if budget <= 0.0 {
            break;
        }
        let p = budget.min(params.p_peak);
        total += harvested_power(&states[i], p, params);
        budget -= p;
    }
    let max_q_bar = total / n;
    Feasibility {
        max_q_bar,
        feasible: constraints.q_bar <= max_q_bar,
    }
}

/// Two-dimensional ellipsoid `{x : (x - c)ᵀ P⁻¹ (x - c) ≤ 1}` with neutral
/// central cuts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipsoid2 {
    pub center: [f64; 2],
    pub shape: [[f64; 2]; 2],
}

impl Ellipsoid2 {
    /// Area ratio after every cut: `sqrt(16/27)`.
    pub const AREA_FACTOR: f64 = 0.769_800_358_919_501;

    pub fn axis_aligned(center: [f64; 2], radii: [f64; 2]) -> Self {
        Self {
            center,
            shape: [[radii[0] * radii[0], 0.0], [0.0, radii[1] * radii[1]]],
        }
    }

    pub fn det(&self) -> f64 {
        let p = &self.shape;
        p[0][0] * p[1][1] - p[0][1] * p[1][0]
    }

    /// Half-width of the ellipsoid along coordinate `axis`.
    pub fn extent(&self, axis: usize) -> f64 {
        self.shape[axis][axis].sqrt()
    }

    /// Keeps the half `{x : aᵀ(x - c) ≤ 0}`. Returns false when the cut is
    /// degenerate and the ellipsoid was left unchanged.
    pub fn cut(&mut self, a: [f64; 2]) -> bool {
        let p = &self.shape;
        let pa = [p[0][0] * a[0] + p[0][1] * a[1], p[1][0] * a[0] + p[1][1] * a[1]];
        let apa = a[0] * pa[0] + a[1] * pa[1];
        if !(apa > 0.0 && apa.is_finite()) {
            return false;
        }
        let s = apa.sqrt();
        let b = [pa[0] / s, pa[1] / s];
        self.center[0] -= b[0] / 3.0;
        self.center[1] -= b[1] / 3.0;
        let k = 4.0 / 3.0;
        let w = 2.0 / 3.0;
        let p00 = k * (p[0][0] - w * b[0] * b[0]);
        let p11 = k * (p[1][1] - w * b[1] * b[1]);
        let p01 = k * (0.5 * (p[0][1] + p[1][0]) - w * b[0] * b[1]);
        self.shape = [[p00, p01], [p01, p11]];
        true
    }
}

#[derive(Debug, Clone)]
enum Rule {
    OptimalOutage(Vec<SplitSearchResult>),
    FixedOutage {
        alphas: Vec<f64>,
        p_required: Vec<ExtendedPower>,
    },
    OptimalRate {
        alpha_grid_n: usize,
    },
    FixedRate {
        alphas: Vec<f64>,
    },
}

/// A sampled problem with its per-state policy, ready for repeated dual
/// evaluations. Multiplier-independent work such as the outage split search
/// is done once at construction.
#[derive(Debug, Clone)]
pub struct DualProblem<'a> {
    kind: ProblemKind,
    scheme: SchemeKind,
    ensemble: &'a FadingEnsemble,
    params: SystemParams,
    constraints: Constraints,
    rule: Rule,
}

struct StateEval {
    d: PerStateDecision,
    /// Outage indicator or secrecy rate.
    value: f64,
}

impl<'a> DualProblem<'a> {
    /// Joint power and split optimization in every state.
    pub fn optimal(
        kind: ProblemKind,
        ensemble: &'a FadingEnsemble,
        params: &SystemParams,
        constraints: &Constraints,
        opts: &SolverOptions,
    ) -> Self {
        let rule = match kind {
            ProblemKind::OutageMin => Rule::OptimalOutage(
                ensemble
                    .states()
                    .par_iter()
                    .map(|s| search_min_split(s, params, ALPHA_REFINE_TOL))
                    .collect(),
            ),
            ProblemKind::EscMax => Rule::OptimalRate {
                alpha_grid_n: opts.alpha_grid_n,
            },
        };
        Self {
            kind,
            scheme: SchemeKind::AnCancelled,
            ensemble,
            params: *params,
            constraints: *constraints,
            rule,
        }
    }

    /// Power optimization with the split of state `i` fixed at `alphas[i]`.
    /// `scheme` selects the rate model used for the reported objective.
    pub fn fixed_split(
        kind: ProblemKind,
        scheme: SchemeKind,
        ensemble: &'a FadingEnsemble,
        params: &SystemParams,
        constraints: &Constraints,
        alphas: Vec<f64>,
    ) -> Result<Self> {
        if alphas.len() != ensemble.len() {
            return Err(Error::InvalidParameter(format!(
                "{} splits for {} states",
                alphas.len(),
                ensemble.len()
            )));
        }
        let upper_ok = |a: f64| match kind {
            ProblemKind::OutageMin => a <= 1.0,
            ProblemKind::EscMax => a < 1.0,
        };
        if let Some(a) = alphas.iter().find(|&&a| !(a >= 0.0 && upper_ok(a))) {
            return Err(Error::InvalidParameter(format!("split {a} out of range")));
        }
        let rule = match kind {
            ProblemKind::OutageMin => {
                let p_required = ensemble
                    .states()
                    .par_iter()
                    .zip(alphas.par_iter())
                    .map(|(s, &a)| min_power_for_rate(a, s, params))
                    .collect();
                Rule::FixedOutage { alphas, p_required }
            }
            ProblemKind::EscMax => Rule::FixedRate { alphas },
        };
        Ok(Self {
            kind,
            scheme,
            ensemble,
            params: *params,
            constraints: *constraints,
            rule,
        })
    }

    /// Same problem and policy with a different harvest floor.
    pub fn with_constraints(&self, constraints: &Constraints) -> Self {
        Self {
            constraints: *constraints,
            ..self.clone()
        }
    }

    pub fn kind(&self) -> ProblemKind {
        self.kind
    }

    pub fn ensemble(&self) -> &'a FadingEnsemble {
        self.ensemble
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn constraints(&self) -> &Constraints {
        &self.constraints
    }

    fn decide(&self, i: usize, state: &FadingState, dual: &DualPoint) -> PerStateDecision {
        let prm = &self.params;
        match &self.rule {
            Rule::OptimalOutage(splits) => solve_p1_sub_given_split(state, dual, prm, &splits[i]),
            Rule::FixedOutage { alphas, p_required } => {
                solve_p11_sub_given_power(state, dual, alphas[i], p_required[i], prm)
            }
            Rule::OptimalRate { alpha_grid_n } => solve_p2_sub(state, dual, prm, *alpha_grid_n),
            Rule::FixedRate { alphas } => PerStateDecision::new(
                solve_p2_sub_fixed_alpha(state, dual, alphas[i], prm),
                alphas[i],
            ),
        }
    }

    fn state_value(&self, state: &FadingState, d: &PerStateDecision) -> f64 {
        match self.kind {
            ProblemKind::OutageMin => f64::from(outage_indicator(self.scheme, state, d, &self.params)),
            ProblemKind::EscMax => secrecy_rate(self.scheme, state, d, &self.params),
        }
    }

    /// Objective, average power and average harvest of arbitrary decisions.
    pub fn primal_summary(&self, decisions: &[PerStateDecision]) -> (f64, f64, f64) {
        let states = self.ensemble.states();
        let n = states.len() as f64;
        let (mut obj, mut pw, mut hv) = (0.0, 0.0, 0.0);
        for (s, d) in states.iter().zip(decisions) {
            obj += self.state_value(s, d);
            pw += d.p;
            hv += harvested_power(s, d.p, &self.params);
        }
        (obj / n, pw / n, hv / n)
    }

    /// Dual function at `dual` with the decisions attaining it.
    pub fn evaluate(&self, dual: &DualPoint) -> DualEvaluation {
        let states = self.ensemble.states();
        let evals: Vec<StateEval> = states
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let d = self.decide(i, s, dual);
                StateEval {
                    d,
                    value: self.state_value(s, &d),
                }
            })
            .collect();
        let n = states.len() as f64;
        let (mut obj, mut pw, mut hv, mut lag) = (0.0, 0.0, 0.0, 0.0);
        for (s, e) in states.iter().zip(&evals) {
            let price = dual.net_price(s, &self.params);
            obj += e.value;
            pw += e.d.p;
            hv += harvested_power(s, e.d.p, &self.params);
            lag += match self.kind {
                ProblemKind::OutageMin => e.value + price * e.d.p,
                ProblemKind::EscMax => e.value - price * e.d.p,
            };
        }
        let coupling = dual.lambda * self.params.p_avg - dual.mu * self.constraints.q_bar;
        let value = match self.kind {
            ProblemKind::OutageMin => lag / n - coupling,
            ProblemKind::EscMax => lag / n + coupling,
        };
        DualEvaluation {
            dual: *dual,
            value,
            decisions: evals.into_iter().map(|e| e.d).collect(),
            avg_power: pw / n,
            avg_harvest: hv / n,
            objective: obj / n,
        }
    }

    fn better(&self, a: f64, b: f64) -> bool {
        match self.kind {
            ProblemKind::OutageMin => a > b,
            ProblemKind::EscMax => a < b,
        }
    }

    fn is_feasible(&self, avg_power: f64, avg_harvest: f64, feas_tol: f64) -> bool {
        avg_power <= self.params.p_avg * (1.0 + feas_tol)
            && avg_harvest >= self.constraints.q_bar * (1.0 - feas_tol)
    }

    fn check(&self) -> Result<()> {
        let f = check_feasibility(self.ensemble, &self.params, &self.constraints);
        if f.feasible {
            Ok(())
        } else {
            Err(Error::Infeasible {
                q_bar: self.constraints.q_bar,
                max_q_bar: f.max_q_bar,
            })
        }
    }

    /// Ellipsoid search of the dual followed by primal recovery.
    pub fn solve(&self, opts: &SolverOptions) -> Result<DualSolveReport> {
        opts.validate()?;
        self.check()?;
        let (best, iterations, trace) = self.ellipsoid(opts);
        let mut report = self.recover(&best, opts)?;
        report.iterations = iterations;
        report.trace = trace;
        Ok(report)
    }

    fn initial_center(&self) -> [f64; 2] {
        let mean_g = self.ensemble.average(|s| s.g);
        let lambda0 = 1.0 / self.params.p_avg;
        let mu0 = if mean_g > 0.0 {
            1.0 / (self.params.zeta * mean_g * self.params.p_peak)
        } else {
            1.0
        };
        [lambda0, mu0]
    }

    fn ellipsoid(&self, opts: &SolverOptions) -> (DualEvaluation, usize, Vec<TraceRow>) {
        // Iterate in coordinates scaled by the initial radii so the shape
        // matrix starts as the identity.
        let c0 = self.initial_center();
        let scale = [1e3 * c0[0], 1e3 * c0[1]];
        let mut ell = Ellipsoid2::axis_aligned([c0[0] / scale[0], c0[1] / scale[1]], [1.0, 1.0]);
        let mut best: Option<DualEvaluation> = None;
        let mut trace = Vec::new();
        let mut iterations = 0;

        while iterations < opts.max_iter {
            if ell.extent(0) <= opts.tol && ell.extent(1) <= opts.tol {
                break;
            }
            iterations += 1;
            let lambda = ell.center[0] * scale[0];
            let mu = ell.center[1] * scale[1];
            let a = if lambda < 0.0 {
                [-1.0, 0.0]
            } else if mu < 0.0 {
                [0.0, -1.0]
            } else {
                let ev = self.evaluate(&DualPoint { lambda, mu });
                let (vp, vq) = subgradient(ev.avg_power, ev.avg_harvest, &self.params, &self.constraints);
                if opts.record_trace {
                    trace.push(TraceRow {
                        iter: iterations,
                        lambda,
                        mu,
                        dual_value: ev.value,
                        subgrad_p: vp,
                        subgrad_q: vq,
                    });
                }
                let zero = vp == 0.0 && vq == 0.0;
                if best.as_ref().map_or(true, |b| self.better(ev.value, b.value)) {
                    best = Some(ev);
                }
                if zero {
                    break;
                }
                // Both duals keep the half-plane where the supergradient
                // direction of the outage dual points.
                [-vp * scale[0], -vq * scale[1]]
            };
            if !ell.cut(a) {
                break;
            }
        }
        let best = best.unwrap_or_else(|| {
            let c = ell.center;
            self.evaluate(&DualPoint {
                lambda: (c[0] * scale[0]).max(0.0),
                mu: (c[1] * scale[1]).max(0.0),
            })
        });
        (best, iterations, trace)
    }

    /// Turns the decisions at `best` into a primal solution meeting both
    /// coupled constraints within `opts.feas_tol`.
    ///
    /// Violations are first fixed by bisection on one multiplier with the
    /// other held, alternating between the two. If that fails the decisions
    /// are repaired greedily by moving power between states in `g` order.
    pub fn recover(&self, best: &DualEvaluation, opts: &SolverOptions) -> Result<DualSolveReport> {
        let ft = opts.feas_tol;
        let mut ev = best.clone();
        for _ in 0..4 {
            if self.is_feasible(ev.avg_power, ev.avg_harvest, ft) {
                break;
            }
            if ev.avg_power > self.params.p_avg * (1.0 + ft) {
                ev = self.bisect_lambda(&ev, ft);
            }
            if ev.avg_harvest < self.constraints.q_bar * (1.0 - ft) {
                ev = self.bisect_mu(&ev, ft);
            }
        }
        let mut repaired = false;
        let feasible = self.is_feasible(ev.avg_power, ev.avg_harvest, ft);
        if feasible {
            ev = self.tighten(ev, ft);
        }
        if let Some(decisions) = self.outage_selection(&ev.decisions) {
            let (objective, avg_power, avg_harvest) = self.primal_summary(&decisions);
            if !feasible || objective < ev.objective {
                ev = DualEvaluation {
                    decisions,
                    objective,
                    avg_power,
                    avg_harvest,
                    ..ev
                };
                repaired = true;
            }
        }
        if !self.is_feasible(ev.avg_power, ev.avg_harvest, ft) {
            let decisions = self.greedy_repair(&ev.decisions);
            let (objective, avg_power, avg_harvest) = self.primal_summary(&decisions);
            if !self.is_feasible(avg_power, avg_harvest, ft) {
                return Err(Error::Recovery {
                    avg_power,
                    p_avg: self.params.p_avg,
                    avg_harvest,
                    q_bar: self.constraints.q_bar,
                });
            }
            ev = DualEvaluation {
                decisions,
                objective,
                avg_power,
                avg_harvest,
                ..ev
            };
            repaired = true;
        }
        let gap = match self.kind {
            ProblemKind::OutageMin => ev.objective - best.value,
            ProblemKind::EscMax => best.value - ev.objective,
        };
        Ok(DualSolveReport {
            kind: self.kind,
            dual: ev.dual,
            decisions: ev.decisions,
            objective: ev.objective,
            avg_power: ev.avg_power,
            avg_harvest: ev.avg_harvest,
            iterations: 0,
            dual_value: best.value,
            dual_gap_estimate: gap.max(0.0),
            repaired,
            trace: Vec::new(),
        })
    }

    /// Lowers each multiplier as far as feasibility allows, so that slack
    /// budget is spent, keeping the result only if the objective improves.
    fn tighten(&self, ev: DualEvaluation, ft: f64) -> DualEvaluation {
        let mut ev = ev;
        for axis in [0, 1] {
            let cur = if axis == 0 { ev.dual.lambda } else { ev.dual.mu };
            if cur <= 0.0 {
                continue;
            }
            let at = |x: f64| {
                let dual = if axis == 0 {
                    DualPoint { lambda: x, ..ev.dual }
                } else {
                    DualPoint { mu: x, ..ev.dual }
                };
                self.evaluate(&dual)
            };
            let ok = |e: &DualEvaluation| self.is_feasible(e.avg_power, e.avg_harvest, ft);
            let zero = at(0.0);
            let cand = if ok(&zero) {
                zero
            } else {
                let (mut lo, mut hi) = (0.0, cur);
                let mut hi_ev = ev.clone();
                while hi - lo > 1e-9 * hi {
                    let mid = 0.5 * (lo + hi);
                    let m = at(mid);
                    if ok(&m) {
                        hi = mid;
                        hi_ev = m;
                    } else {
                        lo = mid;
                    }
                }
                hi_ev
            };
            if self.better_objective(cand.objective, ev.objective) {
                ev = cand;
            }
        }
        ev
    }

    fn better_objective(&self, a: f64, b: f64) -> bool {
        match self.kind {
            ProblemKind::OutageMin => a < b,
            ProblemKind::EscMax => a > b,
        }
    }

    /// Smallest `lambda` above the current one whose decisions meet the
    /// power budget, with `mu` held.
    fn bisect_lambda(&self, ev: &DualEvaluation, ft: f64) -> DualEvaluation {
        let limit = self.params.p_avg * (1.0 + ft);
        let mu = ev.dual.mu;
        let at = |lambda: f64| self.evaluate(&DualPoint { lambda, mu });
        let mut lo = ev.dual.lambda;
        let mut hi = (2.0 * lo).max(1.0 / self.params.p_avg);
        let mut hi_ev = at(hi);
        for _ in 0..200 {
            if hi_ev.avg_power <= limit {
                break;
            }
            lo = hi;
            hi *= 2.0;
            hi_ev = at(hi);
        }
        if hi_ev.avg_power > limit {
            return ev.clone();
        }
        while hi - lo > 1e-9 * hi {
            let mid = 0.5 * (lo + hi);
            let m = at(mid);
            if m.avg_power <= limit {
                hi = mid;
                hi_ev = m;
            } else {
                lo = mid;
            }
        }
        hi_ev
    }

    /// Smallest `mu` above the current one whose decisions meet the harvest
    /// floor, with `lambda` held.
    fn bisect_mu(&self, ev: &DualEvaluation, ft: f64) -> DualEvaluation {
        let floor = self.constraints.q_bar * (1.0 - ft);
        let lambda = ev.dual.lambda;
        let at = |mu: f64| self.evaluate(&DualPoint { lambda, mu });
        let mut lo = ev.dual.mu;
        let mut hi = (2.0 * lo).max(self.initial_center()[1]);
        let mut hi_ev = at(hi);
        for _ in 0..200 {
            if hi_ev.avg_harvest >= floor {
                break;
            }
            lo = hi;
            hi *= 2.0;
            hi_ev = at(hi);
        }
        if hi_ev.avg_harvest < floor {
            return ev.clone();
        }
        while hi - lo > 1e-9 * hi {
            let mid = 0.5 * (lo + hi);
            let m = at(mid);
            if m.avg_harvest >= floor {
                hi = mid;
                hi_ev = m;
            } else {
                lo = mid;
            }
        }
        hi_ev
    }

    /// Least power avoiding outage in state `i` and its split, if within
    /// the peak limit. Only defined for outage problems.
    fn outage_requirement(&self, i: usize) -> Option<(f64, f64)> {
        let peak = self.params.p_peak;
        let (p, alpha) = match &self.rule {
            Rule::OptimalOutage(splits) => (splits[i].p_min, splits[i].alpha_tilde),
            Rule::FixedOutage { alphas, p_required } => (p_required[i], alphas[i]),
            _ => return None,
        };
        p.finite().filter(|&p| p <= peak).map(|p| (p, alpha))
    }

    /// Serves the states marked in `served` at their least non-outage power
    /// and spends the remaining budget on harvest in descending `g` order.
    /// Returns `None` if the budget or the harvest floor is violated.
    fn fill(
        &self,
        served: &[bool],
        req: &[Option<(f64, f64)>],
        desc: &[usize],
    ) -> Option<Vec<PerStateDecision>> {
        let states = self.ensemble.states();
        let n = states.len() as f64;
        let peak = self.params.p_peak;
        let mut d: Vec<PerStateDecision> = req
            .iter()
            .zip(served)
            .map(|(r, &on)| match (r, on) {
                (Some((p, a)), true) => PerStateDecision::new(*p, *a),
                _ => PerStateDecision::OFF,
            })
            .collect();
        let mut left = self.params.p_avg * n - d.iter().map(|x| x.p).sum::<f64>();
        if left < 0.0 {
            return None;
        }
        for &i in desc {
            if left <= 0.0 {
                break;
            }
            let add = (peak - d[i].p).min(left);
            if add > 0.0 {
                let alpha = req[i].map_or(0.0, |r| r.1);
                d[i] = PerStateDecision::new(d[i].p + add, alpha);
                left -= add;
            }
        }
        let harvest: f64 = states.iter().zip(&d).map(|(s, x)| harvested_power(s, x.p, &self.params)).sum();
        (harvest >= self.constraints.q_bar * n).then_some(d)
    }

    /// Outage-problem primal heuristic seeded by the states that avoid
    /// outage in `decisions`: the costliest served states are dropped until
    /// the floor is met, then the cheapest unserved ones are added while
    /// both constraints hold.
    fn outage_selection(&self, decisions: &[PerStateDecision]) -> Option<Vec<PerStateDecision>> {
        if self.kind != ProblemKind::OutageMin {
            return None;
        }
        let states = self.ensemble.states();
        let n = states.len();
        let req: Vec<Option<(f64, f64)>> = (0..n).map(|i| self.outage_requirement(i)).collect();
        let mut desc: Vec<usize> = (0..n).collect();
        desc.sort_by(|&a, &b| states[b].g.total_cmp(&states[a].g).then(a.cmp(&b)));
        let mut by_cost: Vec<usize> = (0..n).filter(|&i| req[i].is_some()).collect();
        by_cost.sort_by(|&a, &b| req[a].unwrap().0.total_cmp(&req[b].unwrap().0).then(a.cmp(&b)));

        let mut served: Vec<bool> = (0..n)
            .map(|i| {
                req[i].is_some()
                    && decisions[i].p > 0.0
                    && outage_indicator(self.scheme, &states[i], &decisions[i], &self.params) == 0
            })
            .collect();
        let mut best = self.fill(&served, &req, &desc);
        for &i in by_cost.iter().rev() {
            if best.is_some() {
                break;
            }
            if served[i] {
                served[i] = false;
                best = self.fill(&served, &req, &desc);
            }
        }
        let mut best = best?;
        let budget = self.params.p_avg * n as f64;
        for &i in &by_cost {
            if served[i] {
                continue;
            }
            let used: f64 = (0..n).filter(|&j| served[j]).map(|j| req[j].unwrap().0).sum();
            let cost = req[i].unwrap().0;
            if used + cost > budget {
                break;
            }
            served[i] = true;
            match self.fill(&served, &req, &desc) {
                Some(d) => best = d,
                None => served[i] = false,
            }
        }
        Some(best)
    }

    /// Moves power between states to satisfy both constraints exactly.
    ///
    /// Power is trimmed from the weakest harvesting states first, then added
    /// to the strongest ones, then shifted from weak to strong states. For
    /// outage problems non-outage states are protected; if that leaves the
    /// floor unreachable the weakest protected state is released and the
    /// repair repeated.
    fn greedy_repair(&self, decisions: &[PerStateDecision]) -> Vec<PerStateDecision> {
        let states = self.ensemble.states();
        let n = states.len();
        let mut asc: Vec<usize> = (0..n).collect();
        asc.sort_by(|&a, &b| states[a].g.total_cmp(&states[b].g).then(a.cmp(&b)));

        let mut protected: Vec<bool> = match self.kind {
            ProblemKind::OutageMin => states
                .iter()
                .zip(decisions)
                .map(|(s, d)| d.p > 0.0 && outage_indicator(self.scheme, s, d, &self.params) == 0)
                .collect(),
            ProblemKind::EscMax => vec![false; n],
        };
        loop {
            let out = self.repair_pass(decisions, &protected, &asc);
            let (_, pw, hv) = self.primal_summary(&out);
            if self.is_feasible(pw, hv, 0.0) || !protected.iter().any(|&b| b) {
                return out;
            }
            let weakest = asc.iter().copied().find(|&i| protected[i]).expect("some protected");
            protected[weakest] = false;
        }
    }

    fn repair_pass(
        &self,
        decisions: &[PerStateDecision],
        protected: &[bool],
        asc: &[usize],
    ) -> Vec<PerStateDecision> {
        let states = self.ensemble.states();
        let n = states.len() as f64;
        let peak = self.params.p_peak;
        let zeta = self.params.zeta;
        let mut d = decisions.to_vec();
        let lb: Vec<f64> = d
            .iter()
            .zip(protected)
            .map(|(x, &keep)| if keep { x.p } else { 0.0 })
            .collect();
        let budget = self.params.p_avg * n;
        let need = self.constraints.q_bar * n;
        let mut used: f64 = d.iter().map(|x| x.p).sum();
        let mut harvest: f64 = states.iter().zip(&d).map(|(s, x)| zeta * s.g * x.p).sum();

        for &i in asc {
            if used <= budget {
                break;
            }
            let cut = (used - budget).min(d[i].p - lb[i]);
            if cut > 0.0 {
                d[i].p -= cut;
                used -= cut;
                harvest -= zeta * states[i].g * cut;
            }
        }
        for &i in asc.iter().rev() {
            let deficit = need - harvest;
            if deficit <= 0.0 || used >= budget {
                break;
            }
            let g = states[i].g;
            if g <= 0.0 {
                continue;
            }
            let add = (peak - d[i].p).min(budget - used).min(deficit / (zeta * g));
            if add > 0.0 {
                d[i].p += add;
                used += add;
                harvest += zeta * g * add;
            }
        }
        // Shift power from weak to strong states at constant total power.
        let (mut lo, mut hi) = (0, asc.len().saturating_sub(1));
        while lo < hi && need - harvest > 0.0 {
            let (j, i) = (asc[lo], asc[hi]);
            let gain = zeta * (states[i].g - states[j].g);
            if gain <= 0.0 {
                break;
            }
            let room_from = d[j].p - lb[j];
            let room_to = peak - d[i].p;
            if room_from <= 0.0 {
                lo += 1;
                continue;
            }
            if room_to <= 0.0 {
                hi -= 1;
                continue;
            }
            let amount = room_from.min(room_to).min((need - harvest) / gain);
            d[j].p -= amount;
            d[i].p += amount;
            harvest += gain * amount;
        }
        for x in &mut d {
            if x.p <= 0.0 {
                *x = PerStateDecision::OFF;
            }
        }
        d
    }
}

/// Dual function of the optimal per-state policy at `dual`.
pub fn dual_value(
    kind: ProblemKind,
    ensemble: &FadingEnsemble,
    dual: &DualPoint,
    params: &SystemParams,
    constraints: &Constraints,
) -> (f64, Vec<PerStateDecision>) {
    let ev = DualProblem::optimal(kind, ensemble, params, constraints, &SolverOptions::default())
        .evaluate(dual);
    (ev.value, ev.decisions)
}

/// Ellipsoid search and primal recovery with the optimal per-state policy.
pub fn ellipsoid_solve(
    kind: ProblemKind,
    ensemble: &FadingEnsemble,
    params: &SystemParams,
    constraints: &Constraints,
    opts: &SolverOptions,
) -> Result<DualSolveReport> {
    DualProblem::optimal(kind, ensemble, params, constraints, opts).solve(opts)
}

/// Primal recovery at a given multiplier pair with the optimal policy.
pub fn recover_primal(
    kind: ProblemKind,
    ensemble: &FadingEnsemble,
    best_dual: &DualPoint,
    params: &SystemParams,
    constraints: &Constraints,
    opts: &SolverOptions,
) -> Result<DualSolveReport> {
    let problem = DualProblem::optimal(kind, ensemble, params, constraints, opts);
    let ev = problem.evaluate(best_dual);
    problem.recover(&ev, opts)
}
