//! Real roots of cubic polynomials.

use std::f64::consts::PI;

const POLISH_ITERS: usize = 8;

/// Real roots of `a x^3 + b x^2 + c x + d`, ascending.
///
/// Uses the trigonometric form when the discriminant is positive and the
/// Cardano form otherwise, followed by Newton polishing on the original
/// coefficients. Degenerate leading coefficients fall back to the quadratic
/// or linear case.
pub fn real_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    if a == 0.0 {
        return quadratic_roots(b, c, d);
    }
    let (b1, c1, d1) = (b / a, c / a, d / a);
    let shift = b1 / 3.0;
    let p = c1 - b1 * b1 / 3.0;
    let q = 2.0 * b1 * b1 * b1 / 27.0 - b1 * c1 / 3.0 + d1;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);

    let mut roots = if disc > 0.0 {
        let r = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| r * (phi - 2.0 * PI * k as f64 / 3.0).cos() - shift)
            .collect::<Vec<_>>()
    } else {
        let s = (q * q / 4.0 + p * p * p / 27.0).max(0.0).sqrt();
        let big = -(q.signum()) * (q.abs() / 2.0 + s).cbrt();
        let t = if big != 0.0 { big - p / (3.0 * big) } else { 0.0 };
        vec![t - shift]
    };
    for x in roots.iter_mut() {
        *x = polish(*x, b1, c1, d1);
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut r = if q == 0.0 { vec![0.0, 0.0] } else { vec![q / a, c / q] };
    r.sort_by(|x, y| x.total_cmp(y));
    r
}

/// Newton iterations on the monic cubic, keeping the best iterate seen.
fn polish(mut x: f64, b: f64, c: f64, d: f64) -> f64 {
    let f = |x: f64| ((x + b) * x + c) * x + d;
    let mut best = (f(x).abs(), x);
    for _ in 0..POLISH_ITERS {
        let fx = f(x);
        let dfx = (3.0 * x + 2.0 * b) * x + c;
        if dfx == 0.0 || !fx.is_finite() {
            break;
        }
        let next = x - fx / dfx;
        let fn_ = f(next).abs();
        if fn_ < best.0 {
            best = (fn_, next);
        }
        if next == x {
            break;
        }
        x = next;
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(roots: &[f64], expect: &[f64]) {
        assert_eq!(roots.len(), expect.len(), "{roots:?}");
        for (r, e) in roots.iter().zip(expect) {
            assert!((r - e).abs() <= 1e-12 * e.abs().max(1.0), "{r} vs {e}");
        }
    }

    #[test]
    fn three_distinct_roots() {
        // (x-1)(x-2)(x-3)
        check(&real_roots(1.0, -6.0, 11.0, -6.0), &[1.0, 2.0, 3.0]);
        // scaled: 2(x+1)(x-0.5)(x-4)
        check(&real_roots(2.0, -7.0, -5.0, 4.0), &[-1.0, 0.5, 4.0]);
    }

    #[test]
    fn single_real_root() {
        // (x-2)(x^2+1)
        check(&real_roots(1.0, -2.0, 1.0, -2.0), &[2.0]);
    }

    #[test]
    fn wide_dynamic_range() {
        // roots 1e-9, 1e6, 3e6
        let (r1, r2, r3) = (1e-9, 1e6, 3e6);
        let b = -(r1 + r2 + r3);
        let c = r1 * r2 + r1 * r3 + r2 * r3;
        let d = -r1 * r2 * r3;
        check(&real_roots(1.0, b, c, d), &[r1, r2, r3]);
    }

    #[test]
    fn lower_degree() {
        check(&real_roots(0.0, 1.0, -3.0, 2.0), &[1.0, 2.0]);
        check(&real_roots(0.0, 0.0, 2.0, -1.0), &[0.5]);
    }
}
