//! Closed-form logarithms of `f` on each tract, and the matching inverse
//! branches.
//!
//! On a tract, `log f` has a branch that is continuous on the whole tract;
//! these are written so that the large term (`z`, `−iz`, `log z`, ...) is
//! separated from a bounded correction. That keeps them accurate when `f(z)`
//! itself is far beyond `f64` range.

use num_complex::Complex64;

use crate::cmath::{is_finite, ln_1p, I};
use crate::error::{Error, Result};
use crate::maps::{EntireMap, MapKind};

/// Which tract of a two-tract family a point belongs to. Single-tract
/// families always use `0`.
pub type TractTag = u8;

/// Continuous `log f(z)` on the tract containing (or nearest to) `z`.
///
/// Returns the tract tag alongside the value. The result is defined
/// everywhere `f(z) ≠ 0`, but is only guaranteed continuous on tracts.
pub fn log_image(map: &EntireMap, z: Complex64) -> (TractTag, Complex64) {
    let (tag, v) = log_image_formula(map, z);
    if is_finite(v) {
        (tag, v)
    } else {
        (tag, map.eval_raw(z).ln())
    }
}

/// Which tract `z` would belong to. Two-tract families split along a line
/// on which `|f| ≤ 2√|ab|` (cosine) or `|f| ≤ |λ|` (sine), both below `K`.
pub fn tract_of(map: &EntireMap, z: Complex64) -> TractTag {
    match *map.kind() {
        MapKind::Cosine { a, b } => {
            if z.re >= 0.5 * (b / a).norm().ln() {
                0
            } else {
                1
            }
        }
        MapKind::Sine { .. } => {
            if z.im >= 0.0 {
                0
            } else {
                1
            }
        }
        _ => 0,
    }
}

/// Direction in which the given tract runs off to infinity.
pub fn tract_direction(map: &EntireMap, tract: TractTag) -> Complex64 {
    match (*map.kind(), tract) {
        (MapKind::Cosine { .. }, 1) => Complex64::new(-1.0, 0.0),
        (MapKind::Sine { .. }, 0) => I,
        (MapKind::Sine { .. }, _) => -I,
        _ => Complex64::new(1.0, 0.0),
    }
}

fn log_image_formula(map: &EntireMap, z: Complex64) -> (TractTag, Complex64) {
    let tag = tract_of(map, z);
    let v = match *map.kind() {
        MapKind::ExpShift { kappa } => z + ln_1p(kappa * (-z).exp()),
        MapKind::ExpAffine { lambda } => lambda.ln() + z + ln_1p(-(-z).exp()),
        MapKind::Cosine { a, b } => {
            if tag == 0 {
                a.ln() + z + ln_1p(b / a * (-2.0 * z).exp())
            } else {
                b.ln() - z + ln_1p(a / b * (2.0 * z).exp())
            }
        }
        MapKind::Sine { lambda } => {
            if tag == 0 {
                (lambda * I * 0.5).ln() - I * z + ln_1p(-(2.0 * I * z).exp())
            } else {
                (lambda / (2.0 * I)).ln() + I * z + ln_1p(-(-2.0 * I * z).exp())
            }
        }
        MapKind::ZExp => z.ln() + z,
        MapKind::PetalExp => {
            let zp1 = z + 1.0;
            Complex64::new(0.25f64.ln(), 0.0) + zp1.ln() + z + ln_1p(-(-z).exp() / zp1)
        }
    };
    (tag, v)
}

/// `f′(z)/f(z)`, arranged to stay finite where `f` overflows.
pub fn log_derivative(map: &EntireMap, z: Complex64) -> Complex64 {
    let v = match *map.kind() {
        MapKind::ExpShift { kappa } => 1.0 / (1.0 + kappa * (-z).exp()),
        MapKind::ExpAffine { .. } => 1.0 / (1.0 - (-z).exp()),
        MapKind::Cosine { a, b } => {
            if tract_of(map, z) == 0 {
                let q = b / a * (-2.0 * z).exp();
                (1.0 - q) / (1.0 + q)
            } else {
                let p = a / b * (2.0 * z).exp();
                (p - 1.0) / (p + 1.0)
            }
        }
        MapKind::Sine { .. } => {
            if z.im >= 0.0 {
                let e = (2.0 * I * z).exp();
                I * (e + 1.0) / (e - 1.0)
            } else {
                let e = (-2.0 * I * z).exp();
                I * (1.0 + e) / (1.0 - e)
            }
        }
        MapKind::ZExp => 1.0 + 1.0 / z,
        MapKind::PetalExp => (z + 2.0) / ((z + 1.0) - (-z).exp()),
    };
    if is_finite(v) {
        v
    } else {
        map.derivative_raw(z) / map.eval_raw(z)
    }
}

/// Solves `log_image(z) = w` on the given tract: the inverse branch of `f`
/// whose image logarithm is exactly `w`.
///
/// A closed-form seed is polished by damped Newton iteration on
/// `log_image(z) − w`. Fails if the residual does not drop below
/// `1e−11·(1 + |w|)`.
pub fn preimage(map: &EntireMap, tract: TractTag, w: Complex64) -> Result<Complex64> {
    let mut z = seed(map, tract, w);
    if !is_finite(z) {
        return Err(Error::PullbackDivergence { t: w.re, iterations: 0 });
    }
    let tol = 1e-11 * (1.0 + w.norm());
    let residual = |z: Complex64| {
        let (tag, v) = log_image(map, z);
        if tag != tract {
            return (f64::INFINITY, Complex64::new(f64::NAN, f64::NAN));
        }
        let d = v - w;
        (d.norm(), d)
    };
    let (mut res, mut diff) = residual(z);
    const MAX_ITER: usize = 60;
    for iter in 0..MAX_ITER {
        if res <= tol {
            return Ok(z);
        }
        if !res.is_finite() {
            return Err(Error::PullbackDivergence { t: w.re, iterations: iter });
        }
        let mut step = diff / log_derivative(map, z);
        let mut accepted = false;
        for _ in 0..30 {
            let cand = z - step;
            let (r, d) = residual(cand);
            if r < res {
                z = cand;
                res = r;
                diff = d;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if res <= tol {
        Ok(z)
    } else {
        Err(Error::PullbackDivergence { t: w.re, iterations: MAX_ITER })
    }
}

fn seed(map: &EntireMap, tract: TractTag, w: Complex64) -> Complex64 {
    match *map.kind() {
        MapKind::ExpShift { kappa } => w + ln_1p(-kappa * (-w).exp()),
        MapKind::ExpAffine { lambda } => {
            let v = w - lambda.ln();
            v + ln_1p((-v).exp())
        }
        MapKind::Cosine { a, b } => {
            let s = (1.0 - 4.0 * a * b * (-2.0 * w).exp()).sqrt();
            let half = ((1.0 + s) * 0.5).ln();
            if tract == 0 {
                w - a.ln() + half
            } else {
                -(w - b.ln()) - half
            }
        }
        MapKind::Sine { lambda } => {
            let s = (1.0 - lambda * lambda * (-2.0 * w).exp()).sqrt();
            if tract == 0 {
                I * (w + (-I / lambda).ln() + (1.0 + s).ln())
            } else {
                -I * (w + (I / lambda).ln() + (1.0 + s).ln())
            }
        }
        MapKind::ZExp => lambert_seed(w),
        MapKind::PetalExp => {
            // (z + 1)e^{z+1} ≈ 4e·u for large u
            let v = w - Complex64::new(0.25f64.ln(), 0.0) + 1.0;
            lambert_seed(v) - 1.0
        }
    }
}

/// Seed for `log z + z = w`.
fn lambert_seed(w: Complex64) -> Complex64 {
    if w.re > 1.0 || w.norm() > 4.0 {
        w - w.ln()
    } else {
        // small target: z ≈ e^w
        w.exp()
    }
}
