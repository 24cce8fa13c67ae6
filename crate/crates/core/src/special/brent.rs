//! Bracketing scan plus Brent refinement for well-separated zeros.

use crate::error::{Error, Result};

/// Walk [lo, hi] in fixed steps and return the first sign-change bracket
/// (a, b, f(a), f(b)).
pub fn bracket_scan<F>(f: &F, lo: f64, hi: f64, step: f64, what: &str) -> Result<(f64, f64, f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut a = lo;
    let mut fa = f(a)?;
    if fa == 0.0 {
        return Ok((a, a, 0.0, 0.0));
    }
    while a < hi {
        let b = (a + step).min(hi);
        let fb = f(b)?;
        if fb == 0.0 || fa * fb < 0.0 {
            return Ok((a, b, fa, fb));
        }
        a = b;
        fa = fb;
    }
    Err(Error::BracketFailure { what: what.to_string(), lo, hi })
}

/// Geometric scan for zeros whose location scale is unknown a priori.
pub fn bracket_scan_geometric<F>(
    f: &F,
    lo: f64,
    hi: f64,
    ratio: f64,
    what: &str,
) -> Result<(f64, f64, f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    assert!(ratio > 1.0 && lo > 0.0);
    let mut a = lo;
    let mut fa = f(a)?;
    if fa == 0.0 {
        return Ok((a, a, 0.0, 0.0));
    }
    while a < hi {
        let b = (a * ratio).min(hi);
        let fb = f(b)?;
        if fb == 0.0 || fa * fb < 0.0 {
            return Ok((a, b, fa, fb));
        }
        a = b;
        fa = fb;
    }
    Err(Error::BracketFailure { what: what.to_string(), lo, hi })
}

/// Brent's method on a sign-change bracket. `xtol` is an absolute
/// tolerance on the root location; a relative floor of a few ulps keeps
/// the loop finite for roots far from zero.
pub fn brent<F>(f: &F, bracket: (f64, f64, f64, f64), xtol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut a, mut b, mut fa, mut fb) = bracket;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::RootFailure(format!(
            "bracket [{a}, {b}] does not straddle a sign change (f = {fa:.3e}, {fb:.3e})"
        )));
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic / secant step
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Err(Error::RootFailure("Brent iteration limit reached".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_cosine_zero() {
        let f = |x: f64| Ok(x.cos());
        let br = bracket_scan(&f, 0.1, 3.0, 0.1, "cos zero").unwrap();
        let root = brent(&f, br, 1e-14, 100).unwrap();
        assert!((root - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn geometric_scan_spans_decades() {
        let f = |x: f64| Ok(x.ln() - 3.0); // zero at e^3
        let br = bracket_scan_geometric(&f, 1e-3, 1e3, 1.05, "ln").unwrap();
        let root = brent(&f, br, 1e-12, 200).unwrap();
        assert!((root - 3.0f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn reports_missing_bracket() {
        let f = |x: f64| Ok(x * x + 1.0);
        assert!(matches!(
            bracket_scan(&f, 0.0, 5.0, 0.5, "none"),
            Err(Error::BracketFailure { .. })
        ));
    }
}
