//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 1 2`.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use secrecy_swipt::alternating::{solve_alternating, solve_fixed_alpha, AlternatingOptions};
use secrecy_swipt::channel::{generate_ensemble, GeometryConfig};
use secrecy_swipt::dual::{check_feasibility, DualProblem};
use secrecy_swipt::model::{lagrangian_outage, lagrangian_rate};
use secrecy_swipt::perstate::{
    min_power_for_rate, optimal_split_given_power, p2_joint_by_split_substitution, solve_p1_sub,
    solve_p2_sub_fixed_alpha, ExtendedPower,
};
use secrecy_swipt::region::{benchmark_noan, trace_boundary_at, BoundaryPoint, Scheme};
use secrecy_swipt::{
    secrecy_rate, Constraints, DualPoint, FadingEnsemble, FadingState, PerStateDecision, ProblemKind, SchemeKind,
    SolverOptions, SystemParams,
};
use secrecy_swipt_oracle::{
    bisect_rate_inverse, grid_dual_search, grid_max_l2, grid_max_rate_over_split, grid_min_l1, DualBox,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

const FEAS_TOL: f64 = 1e-4;
const MONO_TOL: f64 = 1e-6;
const FIXED_ALPHA: f64 = 0.5;

fn log_uniform(rng: &mut ChaCha20Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo.log10()..hi.log10()))
}

fn random_state(rng: &mut ChaCha20Rng) -> FadingState {
    FadingState::new(log_uniform(rng, 1e-7, 1e-3), log_uniform(rng, 1e-7, 1e-3)).unwrap()
}

fn random_params(rng: &mut ChaCha20Rng) -> SystemParams {
    SystemParams::default().with_r0(rng.gen_range(0.5..9.0))
}

fn random_dual(rng: &mut ChaCha20Rng) -> DualPoint {
    DualPoint::new(rng.gen_range(0.0..40.0), rng.gen_range(0.0..4e5)).unwrap()
}

fn rate(state: &FadingState, p: f64, alpha: f64, params: &SystemParams) -> f64 {
    secrecy_rate(SchemeKind::AnCancelled, state, &PerStateDecision { p, alpha }, params)
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(101);
    let trials = 1000;
    let (mut fa, mut fb, mut fc, mut fd, mut compared) = (0, 0, 0, 0, 0);
    let mut worst = [0.0f64; 4];
    for _ in 0..trials {
        let s = random_state(&mut rng);
        let prm = random_params(&mut rng);
        let dual = random_dual(&mut rng);

        let d = solve_p1_sub(&s, &dual, &prm);
        let ours = lagrangian_outage(&s, &d, &dual, &prm);
        let (grid, _, _) = grid_min_l1(&s, &dual, &prm, 500, 500);
        worst[0] = worst[0].max(ours - grid);
        if ours > grid + 1e-6 {
            fa += 1;
        }

        let alpha_bar = rng.gen_range(0.0..1.0);
        let p = solve_p2_sub_fixed_alpha(&s, &dual, alpha_bar, &prm);
        let ours = lagrangian_rate(&s, &PerStateDecision::new(p, alpha_bar), &dual, &prm);
        let (grid, _) = grid_max_l2(&s, &dual, alpha_bar, &prm, 100_000);
        worst[1] = worst[1].max(grid - ours);
        if ours < grid - 1e-6 {
            fb += 1;
        }

        let p_bar = rng.gen_range(0.0..prm.p_peak);
        let a = optimal_split_given_power(&s, p_bar, &prm);
        let ours = rate(&s, p_bar, a, &prm);
        let (grid, _) = grid_max_rate_over_split(&s, p_bar, &prm, 100_001);
        worst[2] = worst[2].max(grid - ours);
        if ours < grid - 1e-9 {
            fc += 1;
        }

        let alpha = rng.gen_range(0.0..1.0);
        match (min_power_for_rate(alpha, &s, &prm), bisect_rate_inverse(&s, alpha, &prm)) {
            (ExtendedPower::Finite(x), ExtendedPower::Finite(y)) => {
                compared += 1;
                let rel = (x - y).abs() / y.max(f64::MIN_POSITIVE);
                worst[3] = worst[3].max(rel);
                if rel > 1e-8 {
                    fd += 1;
                }
            }
            (ExtendedPower::Finite(x), ExtendedPower::Infinite) if x <= 1e3 * prm.p_peak => fd += 1,
            (ExtendedPower::Infinite, ExtendedPower::Finite(_)) => fd += 1,
            _ => {}
        }
    }
    Outcome::new(
        fa + fb + fc + fd == 0,
        format!(
            "{trials} instances; failures a={fa} b={fb} c={fc} d={fd} ({compared} finite pairs); \
             worst excess a={:.2e} b={:.2e} c={:.2e} d(rel)={:.2e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(202);
    let mut cases = 0;
    let mut fails = 0;
    let mut worst = 0.0f64;
    while cases < 10_000 {
        let s = random_state(&mut rng);
        let prm = random_params(&mut rng);
        let alpha = rng.gen_range(0.0..1.0);
        let ExtendedPower::Finite(p) = min_power_for_rate(alpha, &s, &prm) else {
            continue;
        };
        cases += 1;
        let rel = (rate(&s, p, alpha, &prm) - prm.r0).abs() / prm.r0;
        worst = worst.max(rel);
        if rel > 1e-8 {
            fails += 1;
        }
    }
    Outcome::new(
        fails == 0,
        format!("{cases} finite cases, {fails} failures, worst relative error {worst:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let prm = SystemParams::default();
    let geo = GeometryConfig::default();
    let opts = SolverOptions::default();
    let mut pass = true;
    let mut lines = Vec::new();
    for seed in 301..=305u64 {
        let ens = generate_ensemble(&geo, 50, seed).unwrap();
        let q_max = check_feasibility(&ens, &prm, &Constraints::default()).max_q_bar;
        let c = Constraints { q_bar: 0.5 * q_max };
        for kind in [ProblemKind::OutageMin, ProblemKind::EscMax] {
            let rep = DualProblem::optimal(kind, &ens, &prm, &c, &opts).solve(&opts).unwrap();
            let span = |x: f64, fallback: f64| if x > 0.0 { (0.5 * x, 1.5 * x) } else { (0.0, fallback) };
            let bx = DualBox {
                lambda: span(rep.dual.lambda, 1.0 / prm.p_avg),
                mu: span(rep.dual.mu, 1.0 / (prm.zeta * ens.average(|s| s.g) * prm.p_peak)),
            };
            let (_, grid) = grid_dual_search(kind, &ens, &prm, &c, &bx, 400, |s, d| {
                p2_joint_by_split_substitution(s, d, &prm).2
            });
            let rel = (rep.dual_value - grid).abs() / grid.abs().max(1e-12);
            let feas =
                rep.avg_power <= prm.p_avg * (1.0 + FEAS_TOL) && rep.avg_harvest >= c.q_bar * (1.0 - FEAS_TOL);
            let gap_rel = rep.dual_gap_estimate / rep.objective.abs().max(1e-12);
            // Outage over N equally likely states is a multiple of 1/N, so
            // no primal point can beat the dual bound rounded up to that grid.
            let gap_ok = match kind {
                ProblemKind::OutageMin => {
                    let n = ens.len() as f64;
                    let floor = (rep.dual_value * n - 1e-9).ceil() / n;
                    rep.objective <= floor + 1e-12
                }
                ProblemKind::EscMax => gap_rel < 0.02,
            };
            let ok = rel <= 1e-3 && feas && gap_ok;
            pass &= ok;
            lines.push(format!(
                "{} seed {seed}: dual {:.6} grid {:.6} rel {:.1e} feasible {feas} objective {:.6} gap {:.2}%{}",
                kind.label(),
                rep.dual_value,
                grid,
                rel,
                rep.objective,
                100.0 * gap_rel,
                if kind == ProblemKind::OutageMin {
                    format!(" at 1/N bound {gap_ok}")
                } else {
                    String::new()
                }
            ));
        }
    }
    Outcome::new(pass, lines.join("; "))
}

struct Scenario {
    ens: FadingEnsemble,
    prm: SystemParams,
    c: Constraints,
}

fn scenarios() -> Vec<Scenario> {
    (0..20u64)
        .map(|k| {
            let geo = if k % 2 == 0 {
                GeometryConfig::with_distances(2.0, 2.0)
            } else {
                GeometryConfig::with_distances(2.0, 1.0)
            };
            let ens = generate_ensemble(&geo, 200, 500 + k).unwrap();
            let prm = SystemParams::default().with_r0([4.0, 5.5, 6.5, 8.0][(k % 4) as usize]);
            let q_max = check_feasibility(&ens, &prm, &Constraints::default()).max_q_bar;
            let c = Constraints {
                q_bar: q_max * (k % 5) as f64 / 5.0,
            };
            Scenario { ens, prm, c }
        })
        .collect()
}

fn small_solver() -> SolverOptions {
    SolverOptions {
        alpha_grid_n: 33,
        ..Default::default()
    }
}

fn criterion_4() -> Outcome {
    let opts = small_solver();
    let alt = AlternatingOptions::default();
    let (mut mono_fail, mut bit_fail, mut rounds) = (0, 0, 0);
    for sc in scenarios() {
        for kind in [ProblemKind::OutageMin, ProblemKind::EscMax] {
            let out = solve_alternating(kind, &sc.ens, &sc.prm, &sc.c, &alt, &opts).unwrap();
            rounds += out.rounds.len();
            for w in out.rounds.windows(2) {
                let bad = match kind {
                    ProblemKind::OutageMin => w[1].objective > w[0].objective + 1e-9,
                    ProblemKind::EscMax => w[1].objective < w[0].objective - 1e-9,
                };
                mono_fail += usize::from(bad);
            }
            let fixed = solve_fixed_alpha(kind, &sc.ens, &sc.prm, &sc.c, 0.0, &opts).unwrap();
            let noan = benchmark_noan(kind, &sc.ens, &sc.prm, &sc.c, &opts).unwrap();
            let same = fixed.objective.to_bits() == noan.objective.to_bits()
                && fixed.avg_harvest.to_bits() == noan.avg_harvest.to_bits()
                && fixed
                    .decisions
                    .iter()
                    .zip(&noan.decisions)
                    .all(|(a, b)| a.p.to_bits() == b.p.to_bits() && a.alpha.to_bits() == b.alpha.to_bits());
            bit_fail += usize::from(!same);
        }
    }
    Outcome::new(
        mono_fail == 0 && bit_fail == 0,
        format!(
            "20 scenarios x 2 problems, {rounds} rounds; monotonicity violations {mono_fail}, \
             fixed(0) vs NoAN mismatches {bit_fail}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let opts = small_solver();
    let alt = AlternatingOptions::default();
    let (mut nonzero, mut mismatch, mut points) = (0, 0, 0);
    let mut worst = 0.0f64;
    for sc in scenarios() {
        let q_max = check_feasibility(&sc.ens, &sc.prm, &Constraints::default()).max_q_bar;
        let qs: Vec<f64> = [0.0, 0.3, 0.6, 0.9].iter().map(|f| f * q_max).collect();
        for kind in [ProblemKind::OutageMin, ProblemKind::EscMax] {
            let solve = |scheme| trace_boundary_at(scheme, kind, &qs, &sc.ens, &sc.prm, &opts, &alt).unwrap();
            let nc = solve(Scheme::NoCancel);
            let na = solve(Scheme::NoAn);
            let rep = secrecy_swipt::region::solve_scheme(Scheme::NoCancel, kind, &sc.ens, &sc.prm, &sc.c, &opts, &alt)
                .unwrap();
            nonzero += rep.decisions.iter().filter(|d| d.alpha != 0.0).count();
            for (a, b) in nc.iter().zip(&na) {
                points += 1;
                let d = (a.point.objective - b.point.objective)
                    .abs()
                    .max((a.point.harvested - b.point.harvested).abs() / b.point.harvested.max(1e-30));
                worst = worst.max(d);
                if d > 1e-6 {
                    mismatch += 1;
                }
            }
        }
    }
    Outcome::new(
        nonzero == 0 && mismatch == 0,
        format!(
            "nonzero NoCancel splits {nonzero}; {points} boundary points compared, {mismatch} apart by more \
             than 1e-6 (worst {worst:.1e})"
        ),
    )
}

/// Boundaries of one geometry and problem for every compared scheme.
struct Sweep {
    q: Vec<f64>,
    optimal: Vec<BoundaryPoint>,
    alternating: Vec<BoundaryPoint>,
    fixed: Vec<BoundaryPoint>,
    noan: Vec<BoundaryPoint>,
}

fn sweep(kind: ProblemKind, ens: &FadingEnsemble, prm: &SystemParams, q: Vec<f64>) -> Sweep {
    let opts = small_solver();
    let alt = AlternatingOptions {
        initial_alpha: FIXED_ALPHA,
        ..Default::default()
    };
    let run = |scheme| trace_boundary_at(scheme, kind, &q, ens, prm, &opts, &alt).unwrap();
    Sweep {
        optimal: run(Scheme::Optimal),
        alternating: run(Scheme::Alternating),
        fixed: run(Scheme::FixedAlpha(FIXED_ALPHA)),
        noan: run(Scheme::NoAn),
        q,
    }
}

fn large_ensemble(d_er: f64) -> FadingEnsemble {
    generate_ensemble(&GeometryConfig::with_distances(2.0, d_er), 10_000, 1).unwrap()
}

fn fractions_of_max(ens: &FadingEnsemble, prm: &SystemParams, fractions: &[f64]) -> Vec<f64> {
    let q_max = check_feasibility(ens, prm, &Constraints::default()).max_q_bar;
    fractions.iter().map(|f| f * q_max).collect()
}

const OUTAGE_FRACTIONS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 0.98];

fn outage_sweep(d_er: f64) -> Sweep {
    let ens = large_ensemble(d_er);
    let prm = SystemParams::default();
    let mut q = fractions_of_max(&ens, &prm, &OUTAGE_FRACTIONS);
    if d_er == 2.0 {
        q.push(7.0e-6);
        q.sort_by(f64::total_cmp);
    }
    sweep(ProblemKind::OutageMin, &ens, &prm, q)
}

fn esc_sweep() -> Sweep {
    let ens = large_ensemble(2.0);
    let prm = SystemParams::default();
    let q = vec![0.0, 3e-6, 6e-6, 9e-6, 12e-6];
    sweep(ProblemKind::EscMax, &ens, &prm, q)
}

fn fmt_boundary(points: &[BoundaryPoint]) -> String {
    points
        .iter()
        .map(|b| format!("({:.2}uW, {:.4})", b.point.harvested * 1e6, b.point.objective))
        .collect::<Vec<_>>()
        .join(" ")
}

fn criterion_6(s: &Sweep) -> Outcome {
    let hit = s
        .optimal
        .iter()
        .filter(|b| b.point.harvested >= 7.0e-6 && b.point.objective >= 0.93)
        .map(|b| b.point)
        .next();
    let at7 = s.q.iter().position(|&q| q == 7.0e-6).unwrap();
    let noan_outage = 1.0 - s.noan[at7].point.objective;
    let pass = hit.is_some() && noan_outage > 0.95;
    Outcome::new(
        pass,
        format!(
            "optimal point {}; NoAN outage at 7 uW {:.4}; optimal boundary {}",
            hit.map_or("none".to_string(), |p| format!(
                "harvest {:.3} uW non-outage {:.4}",
                p.harvested * 1e6,
                p.objective
            )),
            noan_outage,
            fmt_boundary(&s.optimal)
        ),
    )
}

fn criterion_7(s: &Sweep) -> Outcome {
    let at6 = s.q.iter().position(|&q| q == 6e-6).unwrap();
    let (opt, noan) = (s.optimal[at6].point, s.noan[at6].point);
    let ratio = opt.objective / noan.objective;
    let worst_alt = s
        .optimal
        .iter()
        .zip(&s.alternating)
        .map(|(o, a)| (o.point.objective - a.point.objective) / o.point.objective)
        .fold(0.0f64, f64::max);
    Outcome::new(
        ratio >= 5.0 && worst_alt <= 0.05,
        format!(
            "at Q=6 uW optimal ESC {:.4} (harvest {:.3} uW) vs NoAN {:.4} (harvest {:.3} uW), ratio {:.2}; \
             worst alternating shortfall {:.3}%",
            opt.objective,
            opt.harvested * 1e6,
            noan.objective,
            noan.harvested * 1e6,
            ratio,
            100.0 * worst_alt
        ),
    )
}

fn criterion_8(near: &Sweep, far: &Sweep) -> Outcome {
    let scale = |s: &Sweep| s.optimal.iter().map(|b| b.point.harvested).fold(0.0, f64::max);
    let ratio = scale(near) / scale(far);
    let worst_noan = near.noan.iter().map(|b| 1.0 - b.point.objective).fold(1.0, f64::min);
    Outcome::new(
        (7.0..=13.0).contains(&ratio) && worst_noan >= 0.99,
        format!(
            "harvest scale {:.3} uW vs {:.3} uW, ratio {:.2}; lowest NoAN outage at 2m/1m {:.4}",
            scale(near) * 1e6,
            scale(far) * 1e6,
            ratio,
            worst_noan
        ),
    )
}

fn monotone_violations(points: &[BoundaryPoint]) -> usize {
    points
        .windows(2)
        .filter(|w| {
            let tol = MONO_TOL + w[0].dual_gap_estimate.max(w[1].dual_gap_estimate);
            w[1].point.objective > w[0].point.objective + tol
        })
        .count()
}

fn dominance_violations(upper: &[BoundaryPoint], lower: &[BoundaryPoint]) -> usize {
    upper
        .iter()
        .zip(lower)
        .filter(|(u, l)| l.point.objective > u.point.objective + MONO_TOL + u.dual_gap_estimate)
        .count()
}

fn criterion_9(sweeps: &[(&str, &Sweep)]) -> Outcome {
    let mut mono = 0;
    let mut dom = 0;
    let mut lines = Vec::new();
    for (name, s) in sweeps {
        let m: usize = [&s.optimal, &s.alternating, &s.fixed, &s.noan]
            .iter()
            .map(|b| monotone_violations(b))
            .sum();
        let d = dominance_violations(&s.optimal, &s.alternating) + dominance_violations(&s.alternating, &s.fixed);
        mono += m;
        dom += d;
        lines.push(format!("{name}: monotonicity {m}, dominance {d}"));
    }
    Outcome::new(mono == 0 && dom == 0, format!("violations {}", lines.join("; ")))
}

fn report(n: usize, start: Instant, o: &Outcome) {
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!("criterion {n}: {verdict} [{:.1}s] {}", start.elapsed().as_secs_f64(), o.detail);
}

fn main() -> ExitCode {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let want = |n: usize| selected.is_empty() || selected.contains(&n);
    let mut all_pass = true;
    let mut record = |n: usize, start: Instant, o: Outcome| {
        report(n, start, &o);
        all_pass &= o.pass;
    };

    let simple: [(usize, fn() -> Outcome); 5] =
        [(1, criterion_1), (2, criterion_2), (3, criterion_3), (4, criterion_4), (5, criterion_5)];
    for (n, f) in simple {
        if want(n) {
            let t = Instant::now();
            record(n, t, f());
        }
    }

    let need_outage = want(6) || want(8) || want(9);
    let t = Instant::now();
    let far = need_outage.then(|| outage_sweep(2.0));
    let near = (want(8) || want(9)).then(|| outage_sweep(1.0));
    let esc = (want(7) || want(9)).then(esc_sweep);
    if need_outage || esc.is_some() {
        println!("sweeps traced in {:.1}s", t.elapsed().as_secs_f64());
    }
    if let (true, Some(f)) = (want(6), &far) {
        record(6, t, criterion_6(f));
    }
    if let (true, Some(e)) = (want(7), &esc) {
        record(7, t, criterion_7(e));
    }
    if let (true, Some(n), Some(f)) = (want(8), &near, &far) {
        record(8, t, criterion_8(n, f));
    }
    if want(9) {
        let mut sweeps = Vec::new();
        if let Some(f) = &far {
            sweeps.push(("outage 2m/2m", f));
        }
        if let Some(n) = &near {
            sweeps.push(("outage 2m/1m", n));
        }
        if let Some(e) = &esc {
            sweeps.push(("esc 2m/2m", e));
        }
        record(9, t, criterion_9(&sweeps));
    }

    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
