//! Closed-form real roots of low-degree polynomials.

/// Real roots of `x^3 + b x^2 + c x + d`, ascending, each refined by Newton
/// steps on the polynomial. Clustered roots are not merged.
pub fn monic_cubic_roots(b: f64, c: f64, d: f64) -> Vec<f64> {
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;

    let mut roots = if disc > 0.0 {
        // one real root (Cardano)
        let s = disc.sqrt();
        let u = (-half_q + s).cbrt();
        let v = (-half_q - s).cbrt();
        vec![u + v - shift]
    } else if p == 0.0 {
        vec![-shift]
    } else {
        // three real roots (trigonometric)
        let m = 2.0 * (-third_p).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect()
    };

    for r in roots.iter_mut() {
        *r = newton_polish(
            |x| ((x + b) * x + c) * x + d,
            |x| (3.0 * x + 2.0 * b) * x + c,
            *r,
        );
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

fn newton_polish(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, mut x: f64) -> f64 {
    let mut fx = f(x);
    for _ in 0..4 {
        let d = df(x);
        if d == 0.0 || !d.is_finite() {
            break;
        }
        let next = x - fx / d;
        let fn_ = f(next);
        if !(fn_.abs() < fx.abs()) {
            break;
        }
        x = next;
        fx = fn_;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_three_real() {
        // (x-1)(x-2)(x-3)
        let r = monic_cubic_roots(-6.0, 11.0, -6.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn cubic_one_real() {
        // (x-2)(x^2+1)
        let r = monic_cubic_roots(-2.0, 1.0, -2.0);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cubic_triple() {
        let r = monic_cubic_roots(-3.0, 3.0, -1.0);
        assert!(r.iter().all(|x| (x - 1.0).abs() < 1e-4));
    }
}
