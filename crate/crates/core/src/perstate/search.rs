//! Grid-then-golden-section search on a bounded interval.
//!
//! Objectives are not assumed unimodal: a uniform grid picks the winning
//! cell and golden-section search refines inside the two cells adjacent to
//! the grid winner. The grid winner is kept unless refinement is strictly
//! better, so ties resolve to the smallest grid abscissa.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimizes `f` over `[lo, hi]`. Returns the argmin and its value.
pub fn grid_golden_min<T, F>(f: F, lo: f64, hi: f64, grid_n: usize, rel_tol: f64) -> (f64, T)
where
    T: PartialOrd + Copy,
    F: Fn(f64) -> T,
{
    let g = grid_min(&f, lo, hi, grid_n);
    refine_grid_min(&f, &g, rel_tol)
}

/// Winner of a uniform grid search, with its neighbouring grid points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMin<T> {
    pub x: f64,
    pub value: T,
    /// Bracket formed by the grid points on either side of `x`.
    pub bracket: (f64, f64),
}

/// Uniform grid of `grid_n` points on `[lo, hi]`; ties keep the first point.
pub fn grid_min<T, F>(f: &F, lo: f64, hi: f64, grid_n: usize) -> GridMin<T>
where
    T: PartialOrd + Copy,
    F: Fn(f64) -> T,
{
    assert!(grid_n >= 2, "grid needs at least two points");
    let step = (hi - lo) / (grid_n - 1) as f64;
    let at = |i: usize| if i + 1 == grid_n { hi } else { lo + step * i as f64 };

    let mut best_i = 0;
    let mut best = f(at(0));
    for i in 1..grid_n {
        let v = f(at(i));
        if v < best {
            best = v;
            best_i = i;
        }
    }
    GridMin {
        x: at(best_i),
        value: best,
        bracket: (at(best_i.saturating_sub(1)), at((best_i + 1).min(grid_n - 1))),
    }
}

/// Golden-section refinement inside the bracket of a grid winner, keeping the
/// grid point unless refinement is strictly better.
pub fn refine_grid_min<T, F>(f: &F, g: &GridMin<T>, rel_tol: f64) -> (f64, T)
where
    T: PartialOrd + Copy,
    F: Fn(f64) -> T,
{
    let (x, v) = golden_min(f, g.bracket.0, g.bracket.1, rel_tol);
    if v < g.value {
        (x, v)
    } else {
        (g.x, g.value)
    }
}

/// Golden-section search on `[a, b]` until the bracket is narrower than
/// `rel_tol * max(1, |x|)`. Returns the best point probed.
pub fn golden_min<T, F>(f: &F, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, T)
where
    T: PartialOrd + Copy,
    F: Fn(f64) -> T,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let (mut best_x, mut best) = if fd < fc { (d, fd) } else { (c, fc) };
    for _ in 0..200 {
        if (b - a) <= rel_tol * c.abs().max(1.0) {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc < best {
                best = fc;
                best_x = c;
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd < best {
                best = fd;
                best_x = d;
            }
        }
    }
    (best_x, best)
}
