//! Derivative-free scalar routines: bracketed root finding and
//! golden-section search.

/// Brent's method on a bracket with a sign change. Returns `None` when
/// `f(a)` and `f(b)` share a sign.
pub fn brent_root<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
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
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
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
        fb = f(b);
    }
    Some(b)
}

/// Sub-intervals of `[lo, hi]` (uniform grid of `steps` cells) on which `f`
/// changes sign, in ascending order. Cells where both end values are below
/// `noise` in magnitude are skipped.
pub fn sign_change_brackets<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, steps: usize, noise: f64) -> Vec<(f64, f64)> {
    let h = (hi - lo) / steps as f64;
    let mut out = Vec::new();
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=steps {
        let x1 = if i == steps { hi } else { lo + i as f64 * h };
        let f1 = f(x1);
        let both_noise = f0.abs() < noise && f1.abs() < noise;
        if !both_noise && (f0 == 0.0 || f0.signum() != f1.signum()) {
            out.push((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    out
}

/// Result of a golden-section maximisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
/// The endpoints are also evaluated so a monotone `f` returns the better end.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Maximum {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a.min(b), a.max(b));
    let mut evals = 0;
    let mut eval = |x: f64, evals: &mut usize| {
        *evals += 1;
        f(x)
    };
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1, &mut evals);
    let mut f2 = eval(x2, &mut evals);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1, &mut evals);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2, &mut evals);
        }
    }
    let (mut x, mut value) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    for end in [a.min(b), a.max(b)] {
        let fe = eval(end, &mut evals);
        if fe > value {
            x = end;
            value = fe;
        }
    }
    Maximum { x, value, evaluations: evals }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent_root(|x| x * x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(r, 2f64.cbrt(), epsilon = 1e-11);
        assert!(brent_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }

    #[test]
    fn brackets_in_ascending_order() {
        let b = sign_change_brackets(|x| x.sin(), 0.5, 10.0, 1000, 0.0);
        assert_eq!(b.len(), 3);
        assert!(b[0].0 < 3.2 && b[0].1 > 3.1);
        assert!(b[2].0 < 9.43 && b[2].1 > 9.42);
    }

    #[test]
    fn golden_section_interior_and_boundary() {
        let m = golden_section_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-8);
        assert_abs_diff_eq!(m.x, 0.3, epsilon = 1e-7);
        let edge = golden_section_max(|x| -x, 1e-3, 1.0, 1e-8);
        assert_eq!(edge.x, 1e-3);
    }
}
