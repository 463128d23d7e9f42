//! Scalar root finding and minimization.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootResult {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Widens `[lo, hi]` geometrically until `f` changes sign. `lo` is kept at or
/// above `floor`.
pub fn expand_bracket<F>(f: &mut F, mut lo: f64, mut hi: f64, floor: f64) -> Result<(f64, f64, f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    for _ in 0..12 {
        if flo == 0.0 || fhi == 0.0 || flo.signum() != fhi.signum() {
            return Ok((lo, flo, hi, fhi));
        }
        let width = hi - lo;
        if flo.abs() < fhi.abs() {
            lo = (lo - width).max(floor);
            flo = f(lo)?;
        } else {
            hi += width;
            fhi = f(hi)?;
        }
    }
    Err(Error::FitFailed(format!("no sign change in [{lo}, {hi}]")))
}

/// A few bisection steps to localize the root, then bracket-safeguarded
/// secant steps. Stops when `|f| <= ftol` or the bracket is narrower than
/// `xtol`.
pub fn find_root<F>(mut f: F, lo: f64, hi: f64, floor: f64, xtol: f64, ftol: f64) -> Result<RootResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut fa, mut b, mut fb) = expand_bracket(&mut f, lo, hi, floor)?;
    let mut iterations = 0;
    if fa == 0.0 {
        return Ok(RootResult { x: a, residual: 0.0, iterations });
    }
    if fb == 0.0 {
        return Ok(RootResult { x: b, residual: 0.0, iterations });
    }
    let bisections = 3;
    // Previous two iterates for the secant update.
    let (mut x0, mut f0) = (a, fa);
    let (mut x1, mut f1) = (b, fb);
    for it in 0..200 {
        iterations = it + 1;
        let mid = 0.5 * (a + b);
        let mut x = if it < bisections || f1 == f0 {
            mid
        } else {
            x1 - f1 * (x1 - x0) / (f1 - f0)
        };
        if !(x > a.min(b) && x < a.max(b)) {
            x = mid;
        }
        let fx = f(x)?;
        if fx.abs() <= ftol {
            return Ok(RootResult { x, residual: fx, iterations });
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        x0 = x1;
        f0 = f1;
        x1 = x;
        f1 = fx;
        if (b - a).abs() <= xtol {
            let (x, r) = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
            return Ok(RootResult { x, residual: r, iterations });
        }
    }
    Err(Error::FitFailed("root finding did not converge".into()))
}

/// Brent's minimization on `[a, b]`.
pub fn brent_minimize<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    const CGOLD: f64 = 0.381_966_011_250_105;
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-300;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}
