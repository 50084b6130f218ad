//! Small complex helpers that num-complex does not provide.

use num_complex::Complex64;
use std::f64::consts::TAU;

pub(crate) const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// `ln(1 + w)` without the cancellation of `(1 + w).ln()` for small `w`.
pub(crate) fn ln_1p(w: Complex64) -> Complex64 {
    if w.norm_sqr() < 1e-4 {
        let re = 0.5 * (2.0 * w.re + w.norm_sqr()).ln_1p();
        let im = w.im.atan2(1.0 + w.re);
        Complex64::new(re, im)
    } else {
        (Complex64::new(1.0, 0.0) + w).ln()
    }
}

/// `e^z` with one `sin_cos` call.
#[inline]
pub(crate) fn cexp(z: Complex64) -> Complex64 {
    let (s, c) = z.im.sin_cos();
    let r = z.re.exp();
    Complex64::new(r * c, r * s)
}

pub(crate) fn is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// `x mod 2π` into `[0, 2π)`.
pub(crate) fn wrap_tau(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_1p_small_argument() {
        let w = Complex64::new(1e-12, -3e-13);
        let got = ln_1p(w);
        assert!((got.re - 1e-12).abs() < 1e-24);
        assert!((got.im + 3e-13).abs() < 1e-24);
    }

    #[test]
    fn ln_1p_matches_ln_for_large_argument() {
        let w = Complex64::new(2.0, 3.0);
        assert!((ln_1p(w) - (w + 1.0).ln()).norm() < 1e-15);
    }
}
