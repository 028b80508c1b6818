//! One-dimensional root finding and minimization on brackets.

use thiserror::Error;

#[derive(Debug, Error, Clone, Copy, PartialEq)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
}

/// Finds a root of `f` on `[lo, hi]` by Newton steps safeguarded with
/// bisection. `f` returns the value and derivative; a step that would leave
/// the current bracket (or a zero derivative) falls back to the midpoint.
///
/// Stops when |f| ≤ `ftol` or the bracket is narrower than `xtol`.
pub fn newton_bisect<F>(mut f: F, lo: f64, hi: f64, xtol: f64, ftol: f64) -> Result<f64, RootError>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (f_lo, _) = f(lo);
    let (f_hi, _) = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(RootError::NoBracket { lo, hi, f_lo, f_hi });
    }
    let rising = f_hi > 0.0;
    let (mut a, mut b) = (lo, hi);
    let mut x = 0.5 * (a + b);
    for _ in 0..400 {
        let (fx, dfx) = f(x);
        if fx.abs() <= ftol {
            return Ok(x);
        }
        if (fx > 0.0) == rising {
            b = x;
        } else {
            a = x;
        }
        if (b - a).abs() <= xtol {
            return Ok(0.5 * (a + b));
        }
        let newton = x - fx / dfx;
        x = if dfx != 0.0 && newton > a && newton < b && newton.is_finite() {
            newton
        } else {
            0.5 * (a + b)
        };
    }
    Ok(x)
}

/// Plain bisection for a monotone predicate-like function without derivative.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64, RootError>
where
    F: FnMut(f64) -> f64,
{
    newton_bisect(|x| (f(x), 0.0), lo, hi, xtol, 0.0)
}

/// Golden-section search for the minimizer of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmin, min)`.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, xtol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Grows `[0, 1]` geometrically until `f(hi) ≥ f(hi / 2)` (the minimizer of a
/// convex `f` on `[0, ∞)` is then inside `[0, hi]`), then runs golden-section.
pub fn minimize_on_half_line<F>(mut f: F, xtol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut hi = 1.0;
    let mut prev = f(0.5);
    for _ in 0..200 {
        let cur = f(hi);
        if cur >= prev {
            break;
        }
        prev = cur;
        hi *= 2.0;
    }
    golden_section(f, 0.0, hi, xtol)
}

/// Illinois-modified regula falsi on a bracket with `f_a`, `f_b` of opposite
/// signs. Stops when |f| ≤ `ftol`, the bracket is narrower than `xtol`, or
/// after `max_iter` evaluations. Returns the evaluated point with the
/// smallest |f| as `(x, f(x))`.
pub fn illinois<F>(mut f: F, (mut a, mut fa): (f64, f64), (mut b, mut fb): (f64, f64), xtol: f64, ftol: f64, max_iter: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut best = if fa.abs() <= fb.abs() { (a, fa) } else { (b, fb) };
    // which end was retained on the previous step: -1 = a, 1 = b
    let mut side = 0;
    for _ in 0..max_iter {
        if best.1.abs() <= ftol || (b - a).abs() <= xtol {
            break;
        }
        let mut c = b - fb * (b - a) / (fb - fa);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc.abs() < best.1.abs() {
            best = (c, fc);
        }
        if fc == 0.0 {
            break;
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    best
}
