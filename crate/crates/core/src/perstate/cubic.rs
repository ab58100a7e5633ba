//! Real roots of polynomials up to degree three.
//!
//! The cubic is split into monotone pieces at the roots of its derivative and
//! each sign-changing piece is solved by safeguarded Newton iteration, so
//! every returned root is polished to near machine precision. Coefficients
//! are normalized by their largest magnitude first; a leading coefficient
//! below [`DEGENERATE_TOL`] after normalization is treated as zero.

/// Relative size below which a leading coefficient is dropped.
pub const DEGENERATE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub enum RootSet {
    /// Distinct real roots in ascending order (possibly empty).
    Roots(Vec<f64>),
    /// Every coefficient is zero, so every real number is a root.
    IdenticallyZero,
}

impl RootSet {
    /// Roots as a slice; empty for the identically-zero polynomial.
    pub fn as_slice(&self) -> &[f64] {
        match self {
            RootSet::Roots(r) => r,
            RootSet::IdenticallyZero => &[],
        }
    }
}

/// All real roots of `a x³ + b x² + c x + d`.
pub fn real_roots_cubic(a: f64, b: f64, c: f64, d: f64) -> RootSet {
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    if scale == 0.0 {
        return RootSet::IdenticallyZero;
    }
    let (a, b, c, d) = (a / scale, b / scale, c / scale, d / scale);
    let mut roots = if a.abs() > DEGENERATE_TOL {
        cubic(a, b, c, d)
    } else if b.abs() > DEGENERATE_TOL {
        quadratic(b, c, d)
    } else if c.abs() > DEGENERATE_TOL {
        vec![-d / c]
    } else {
        Vec::new()
    };
    roots.sort_by(f64::total_cmp);
    // A double root is only resolved to about half the working precision.
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-7 * x.abs().max(y.abs()).max(1e-300));
    RootSet::Roots(roots)
}

/// Real roots of `a x³ + b x² + c x + d` inside `[lo, hi]`, ascending.
///
/// Works for any degree up to three without a degeneracy threshold: the
/// interval is split at the critical points it contains and each monotone
/// piece with a sign change is solved by safeguarded Newton. Tangent roots at
/// interior critical points are reported when the residual is at rounding
/// level. The identically-zero polynomial yields no roots.
pub fn real_roots_cubic_in(a: f64, b: f64, c: f64, d: f64, lo: f64, hi: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
    let mut roots = Vec::with_capacity(3);
    if scale == 0.0 || !(lo <= hi) {
        return roots;
    }
    let (a, b, c, d) = (a / scale, b / scale, c / scale, d / scale);
    let f = |x: f64| eval(a, b, c, d, x);
    let df = |x: f64| (3.0 * a * x + 2.0 * b) * x + c;
    if lo == hi {
        if f(lo).abs() <= 1e-12 * magnitude(a, b, c, d, lo) {
            roots.push(lo);
        }
        return roots;
    }

    let mut breaks = [lo, hi, hi, hi];
    let mut nb = 1;
    let push_crit = |x: f64, breaks: &mut [f64; 4], nb: &mut usize| {
        if x > lo && x < hi {
            breaks[*nb] = x;
            *nb += 1;
        }
    };
    if a != 0.0 {
        let disc = b * b - 3.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let q = -(b + if b >= 0.0 { sq } else { -sq });
            let (x1, x2) = if q == 0.0 {
                (0.0, 0.0)
            } else {
                (q / (3.0 * a), c / q)
            };
            let (x1, x2) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
            push_crit(x1, &mut breaks, &mut nb);
            if x2 != x1 {
                push_crit(x2, &mut breaks, &mut nb);
            }
        }
    } else if b != 0.0 {
        push_crit(-c / (2.0 * b), &mut breaks, &mut nb);
    }
    breaks[nb] = hi;
    let pieces = &breaks[..=nb];

    for (k, w) in pieces.windows(2).enumerate() {
        let (l, h) = (w[0], w[1]);
        let (fl, fh) = (f(l), f(h));
        if k == 0 && fl == 0.0 {
            roots.push(l);
        }
        if fl != 0.0 && fh != 0.0 && (fl < 0.0) != (fh < 0.0) {
            roots.push(bracketed_newton(f, df, l, h, fl));
        }
        if fh == 0.0 {
            roots.push(h);
        }
    }
    for &x in &pieces[1..nb] {
        if f(x).abs() <= 1e-12 * magnitude(a, b, c, d, x) && !roots.contains(&x) {
            roots.push(x);
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup();
    roots
}

fn eval(a: f64, b: f64, c: f64, d: f64, x: f64) -> f64 {
    ((a * x + b) * x + c) * x + d
}

/// Sum of absolute term magnitudes; the natural scale for a residual at `x`.
fn magnitude(a: f64, b: f64, c: f64, d: f64, x: f64) -> f64 {
    let ax = x.abs();
    ((a.abs() * ax + b.abs()) * ax + c.abs()) * ax + d.abs()
}

fn quadratic(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        // A tangent root can land slightly negative through rounding.
        let x = -b / (2.0 * a);
        if eval(0.0, a, b, c, x).abs() <= 1e-12 * magnitude(0.0, a, b, c, x) {
            return vec![x];
        }
        return Vec::new();
    }
    let sq = disc.sqrt();
    let q = -0.5 * (b + b.signum() * sq);
    let q = if q == 0.0 { -0.5 * sq } else { q };
    let mut out = Vec::with_capacity(2);
    if q != 0.0 {
        out.push(c / q);
        out.push(q / a);
    } else {
        out.push(0.0);
    }
    out.into_iter()
        .map(|x| polish(|t| eval(0.0, a, b, c, t), |t| 2.0 * a * t + b, x))
        .collect()
}

fn cubic(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let f = |x: f64| eval(a, b, c, d, x);
    let df = |x: f64| (3.0 * a * x + 2.0 * b) * x + c;
    // Cauchy bound on root magnitude.
    let bound = 1.0 + b.abs().max(c.abs()).max(d.abs()) / a.abs();

    let mut breaks = vec![-bound];
    let disc = b * b - 3.0 * a * c;
    if disc > 0.0 {
        let sq = disc.sqrt();
        let q = -(b + b.signum() * sq);
        let (x1, x2) = if q == 0.0 {
            (-sq / (3.0 * a), sq / (3.0 * a))
        } else {
            (q / (3.0 * a), c / q)
        };
        let (lo, hi) = if x1 < x2 { (x1, x2) } else { (x2, x1) };
        breaks.push(lo.clamp(-bound, bound));
        breaks.push(hi.clamp(-bound, bound));
    } else if disc == 0.0 {
        breaks.push((-b / (3.0 * a)).clamp(-bound, bound));
    }
    breaks.push(bound);

    let mut roots = Vec::with_capacity(3);
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            roots.push(lo);
        }
        if fhi == 0.0 {
            roots.push(hi);
        }
        if (flo < 0.0) != (fhi < 0.0) && flo != 0.0 && fhi != 0.0 {
            roots.push(bracketed_newton(f, df, lo, hi, flo));
        }
    }
    // Tangent (double) roots sit at critical points without a sign change.
    for &x in &breaks[1..breaks.len() - 1] {
        if f(x).abs() <= 1e-12 * magnitude(a, b, c, d, x) {
            roots.push(x);
        }
    }
    roots
}

/// Root of a monotone `f` on `[lo, hi]` where `f(lo)` and `f(hi)` differ in
/// sign. Newton steps that leave the bracket fall back to bisection.
fn bracketed_newton<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, flo: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let lo_negative = flo < 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == lo_negative {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let mut next = x - fx / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x || next <= lo || next >= hi {
            return next.clamp(lo, hi);
        }
        x = next;
    }
    x
}

/// A few Newton steps from a closed-form root, kept only if they help.
fn polish<F, D>(f: F, df: D, mut x: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    for _ in 0..3 {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - f(x) / d;
        if !(f(next).abs() < f(x).abs()) {
            break;
        }
        x = next;
    }
    x
}
