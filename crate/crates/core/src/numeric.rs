//! One-dimensional maximization on `[0, 1]` and adaptive Simpson quadrature.

use crate::error::{Error, Result};

const GRID_POINTS: usize = 101;
const GOLDEN_TOL: f64 = 1e-9;
/// 1/φ
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub arg: f64,
    pub value: f64,
}

/// Maximizes a unimodal `f` on `[0,1]`.
///
/// A 101-point grid picks the bracketing cell, golden-section search then
/// narrows it to width 1e-9. When an analytic derivative is supplied the
/// stationary point is polished by bisection on its sign, which recovers the
/// digits golden section cannot resolve on a flat maximum.
pub fn maximize_unit(f: impl Fn(f64) -> f64, df: Option<&dyn Fn(f64) -> f64>) -> Maximum {
    let step = 1.0 / (GRID_POINTS - 1) as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..GRID_POINTS {
        let x = i as f64 * step;
        let v = f(x);
        let closer = (x - 0.5).abs() < (best_i as f64 * step - 0.5).abs();
        if v > best_v || (v == best_v && closer) {
            best_v = v;
            best_i = i;
        }
    }
    let grid_best = Maximum {
        arg: best_i as f64 * step,
        value: best_v,
    };

    let mut lo = (best_i.saturating_sub(1)) as f64 * step;
    let mut hi = ((best_i + 1).min(GRID_POINTS - 1)) as f64 * step;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > GOLDEN_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    let mid = 0.5 * (lo + hi);
    let mut best = Maximum {
        arg: mid,
        value: f(mid),
    };

    if let Some(df) = df {
        let radius = 1e-6;
        let a = (mid - radius).max(0.0);
        let b = (mid + radius).min(1.0);
        if let Some(root) = bisect_decreasing(df, a, b) {
            let v = f(root);
            if v >= best.value - 1e-12 * best.value.abs().max(1e-300) {
                best = Maximum {
                    arg: root,
                    value: v,
                };
            }
        }
    }

    if grid_best.value > best.value {
        grid_best
    } else {
        best
    }
}

/// Root of a decreasing function on `[a, b]` if its sign changes there.
fn bisect_decreasing(df: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> Option<f64> {
    let da = df(a);
    let db = df(b);
    if !(da >= 0.0 && db <= 0.0) {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if df(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
///
/// The interval is first split into `panels` equal panels so that narrow
/// peaks are not skipped by the first Simpson estimate.
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    panels: usize,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b <= a {
        return Err(Error::Numeric(format!("bad integration interval [{a}, {b}]")));
    }
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let panel_tol = tol / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let x0 = a + p as f64 * h;
        let x1 = if p + 1 == panels { b } else { x0 + h };
        let fa = f(x0);
        let fb = f(x1);
        let xm = 0.5 * (x0 + x1);
        let fm = f(xm);
        let whole = (x1 - x0) / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson_step(f, x0, x1, fa, fm, fb, whole, panel_tol, 48)?;
    }
    if !total.is_finite() {
        return Err(Error::Numeric("integral is not finite".into()));
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "adaptive Simpson did not converge on [{a}, {b}] (residual {delta:e})"
        )));
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}
