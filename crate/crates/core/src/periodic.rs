//! Periodic points, their multipliers, and rotation numbers.

use std::f64::consts::TAU;
use std::fmt;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use crate::cmath::is_finite;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::maps::{format_complex, format_real, EntireMap};

pub const MAX_PERIOD: usize = 8;
/// `|m|` within this of 1 counts as indifferent.
pub const INDIFFERENT_SLACK: f64 = 1e-9;
pub const MAX_PARABOLIC_Q: u32 = 64;
pub const PARABOLIC_TOL: f64 = 1e-6;
/// Required `|fⁿ(z) − z|` after polishing.
pub const PERIODIC_TOL: f64 = 1e-10;
pub const DEDUP_RADIUS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FixedClass {
    Attracting,
    Repelling,
    /// `m^q ≈ 1` for this `q ≤ 64`.
    ParabolicCandidate(u32),
    /// `|m| ≈ 1` with rotation number `arg m / 2π mod 1`.
    IrrationallyIndifferent(f64),
}

impl fmt::Display for FixedClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FixedClass::Attracting => f.write_str("attracting"),
            FixedClass::Repelling => f.write_str("repelling"),
            FixedClass::ParabolicCandidate(q) => write!(f, "parabolic({q})"),
            FixedClass::IrrationallyIndifferent(t) => write!(f, "irrational({t})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointInfo {
    pub point: Complex64,
    pub period: usize,
    pub multiplier: Complex64,
    pub class: FixedClass,
}

/// `fⁿ(z)` and `(fⁿ)′(z)` by the chain rule.
pub fn iterate_with_derivative(map: &EntireMap, z: Complex64, n: usize) -> Result<(Complex64, Complex64)> {
    let mut w = z;
    let mut d = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        d *= map.derivative(w)?;
        w = map.evaluate(w)?;
    }
    if is_finite(d) {
        Ok((w, d))
    } else {
        Err(Error::Overflow(z))
    }
}

fn check_period(period: usize) -> Result<()> {
    if (1..=MAX_PERIOD).contains(&period) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("period {period} outside 1..={MAX_PERIOD}")))
    }
}

/// Damped Newton on `fⁿ(z) − z`, run until the step stalls. Fails with
/// [`Error::NotPeriodic`] unless the final residual is below `1e−10`.
pub fn polish(map: &EntireMap, z0: Complex64, period: usize) -> Result<Complex64> {
    let residual = |z: Complex64| iterate_with_derivative(map, z, period).map(|(w, d)| (w - z, d));
    let fail = || Error::NotPeriodic(z0);
    let mut z = z0;
    let (mut g, mut dg) = residual(z).map_err(|_| fail())?;
    for _ in 0..200 {
        let slope = dg - 1.0;
        if slope.norm() == 0.0 {
            break;
        }
        let mut step = g / slope;
        let mut moved = false;
        for _ in 0..40 {
            let cand = z - step;
            if let Ok((gc, dc)) = residual(cand) {
                if gc.norm() < g.norm() || (gc.norm() == g.norm() && step.norm() < 1e-14) {
                    z = cand;
                    g = gc;
                    dg = dc;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved || step.norm() <= 1e-15 * z.norm().max(1.0) {
            break;
        }
    }
    if g.norm() < PERIODIC_TOL {
        Ok(z)
    } else {
        Err(fail())
    }
}

fn class_of(m: Complex64) -> FixedClass {
    let a = m.norm();
    if a > 1.0 + INDIFFERENT_SLACK {
        return FixedClass::Repelling;
    }
    if a < 1.0 - INDIFFERENT_SLACK {
        return FixedClass::Attracting;
    }
    let mut power = Complex64::new(1.0, 0.0);
    for q in 1..=MAX_PARABOLIC_Q {
        power *= m;
        if (power - 1.0).norm() < PARABOLIC_TOL {
            return FixedClass::ParabolicCandidate(q);
        }
    }
    FixedClass::IrrationallyIndifferent((m.arg() / TAU).rem_euclid(1.0))
}

/// Polishes `z` as a point of period `period` and classifies it by its
/// multiplier.
pub fn classify(map: &EntireMap, z: Complex64, period: usize) -> Result<FixedPointInfo> {
    check_period(period)?;
    let point = polish(map, z, period)?;
    let (_, multiplier) = iterate_with_derivative(map, point, period)?;
    Ok(FixedPointInfo { point, period, multiplier, class: class_of(multiplier) })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchBox {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl SearchBox {
    pub fn square(half_width: f64) -> Self {
        Self { re: (-half_width, half_width), im: (-half_width, half_width) }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        (self.re.0..=self.re.1).contains(&z.re) && (self.im.0..=self.im.1).contains(&z.im)
    }

    /// Centres of a `grid × grid` partition, shifted by `offset`.
    pub fn seeds(&self, grid: usize, offset: Complex64) -> Vec<Complex64> {
        let dx = (self.re.1 - self.re.0) / grid as f64;
        let dy = (self.im.1 - self.im.0) / grid as f64;
        (0..grid * grid)
            .map(|k| {
                let (i, j) = (k % grid, k / grid);
                Complex64::new(self.re.0 + dx * (i as f64 + 0.5), self.im.0 + dy * (j as f64 + 0.5)) + offset
            })
            .collect()
    }
}

/// Points of period `period` found by Newton from the cell centres of a
/// `grid × grid` partition of `search`, deduplicated and sorted by
/// `(re, im)`. Only roots inside the box are kept.
pub fn find_fixed_points(
    map: &EntireMap,
    period: usize,
    search: SearchBox,
    grid: usize,
    exec: Exec,
) -> Result<Vec<FixedPointInfo>> {
    find_fixed_points_from(map, period, search, &search.seeds(grid, Complex64::new(0.0, 0.0)), grid, exec)
}

/// [`find_fixed_points`] with explicit seeds.
pub fn find_fixed_points_from(
    map: &EntireMap,
    period: usize,
    search: SearchBox,
    seeds: &[Complex64],
    grid: usize,
    exec: Exec,
) -> Result<Vec<FixedPointInfo>> {
    check_period(period)?;
    if grid < 4 {
        return Err(Error::InvalidParameter("grid must be at least 4".into()));
    }
    let found = exec.map(seeds.len(), |i| {
        classify(map, seeds[i], period).ok().filter(|info| search.contains(info.point))
    });
    let mut roots: Vec<FixedPointInfo> = Vec::new();
    for info in found.into_iter().flatten() {
        if roots.iter().all(|r| (r.point - info.point).norm() > DEDUP_RADIUS) {
            roots.push(info);
        }
    }
    roots.sort_by(|a, b| a.point.re.total_cmp(&b.point.re).then(a.point.im.total_cmp(&b.point.im)));
    Ok(roots)
}

pub const FIXED_POINT_CSV_HEADER: &str = "re,im,period,mult_re,mult_im,class";

pub fn fixed_point_csv_row(info: &FixedPointInfo) -> String {
    format!(
        "{},{},{},{},{}",
        format_complex(info.point),
        info.period,
        format_real(info.multiplier.re),
        format_real(info.multiplier.im),
        info.class
    )
}

/// Partial quotients `[a₁, a₂, …]` of `θ = 1/(a₁ + 1/(a₂ + …))`.
///
/// The expansion is that of the exact rational value of the `f64`, and it
/// stops early once a convergent is within two ulps of `θ` (everything
/// after that describes rounding) or a quotient exceeds `u64`.
pub fn rotation_number_cf(theta: f64, depth: usize) -> Result<Vec<u64>> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("rotation number {theta} outside (0, 1)")));
    }
    if depth > 40 {
        return Err(Error::InvalidParameter("depth must be at most 40".into()));
    }
    let (num, den) = exact_ratio(theta);
    let (mut a, mut b) = (den, num);
    let tol = 2.0 * ulp(theta);
    let (mut p0, mut q0, mut p1, mut q1) = (1.0f64, 0.0f64, 0.0f64, 1.0f64);
    let mut out = Vec::new();
    while out.len() < depth && !b.is_zero() {
        let Some(quot) = (&a / &b).to_u64() else { break };
        let rem = &a % &b;
        (a, b) = (b, rem);
        out.push(quot);
        (p0, p1) = (p1, quot as f64 * p1 + p0);
        (q0, q1) = (q1, quot as f64 * q1 + q0);
        if (p1 / q1 - theta).abs() <= tol {
            break;
        }
    }
    Ok(out)
}

fn exact_ratio(x: f64) -> (BigUint, BigUint) {
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1 << 52), exp - 1075) };
    let num = BigUint::from(mant);
    if e >= 0 {
        (num << e as usize, BigUint::from(1u8))
    } else {
        (num, BigUint::from(1u8) << (-e) as usize)
    }
}

fn ulp(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1) - x
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationEstimate {
    /// Mean of `arg(f(z)/z)/2π mod 1` along the orbit.
    pub mean_turn: f64,
    pub max_modulus: f64,
    pub steps: usize,
}

/// Estimates the rotation number about a fixed point at the origin from
/// the orbit of `z0`.
pub fn rotation_estimate(map: &EntireMap, z0: Complex64, steps: usize) -> Result<RotationEstimate> {
    let mut z = z0;
    let mut turn = 0.0;
    let mut max_modulus = z.norm();
    for _ in 0..steps {
        let w = map.evaluate(z)?;
        turn += ((w / z).arg() / TAU).rem_euclid(1.0);
        z = w;
        max_modulus = max_modulus.max(z.norm());
    }
    Ok(RotationEstimate { mean_turn: turn / steps as f64, max_modulus, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::golden_mean;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn expshift() -> EntireMap {
        EntireMap::exp_shift(c(-2.0, 0.0)).unwrap()
    }

    #[test]
    fn classify_examples() {
        let info = classify(&expshift(), c(1.146193, 0.0), 1).unwrap();
        assert_eq!(info.class, FixedClass::Repelling);
        assert!((info.multiplier.re - 3.14619).abs() < 1e-4);

        let info = classify(&EntireMap::z_exp(), c(0.0, 0.0), 1).unwrap();
        assert_eq!(info.class, FixedClass::ParabolicCandidate(1));

        let info = classify(&EntireMap::golden_exp_affine(), c(0.0, 0.0), 1).unwrap();
        match info.class {
            FixedClass::IrrationallyIndifferent(t) => assert!((t - golden_mean()).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn classify_rejects_non_periodic() {
        assert!(matches!(classify(&expshift(), c(1000.0, 0.0), 1), Err(Error::NotPeriodic(_))));
        assert!(classify(&expshift(), c(1.0, 0.0), 9).is_err());
    }

    #[test]
    fn exp_shift_inventory() {
        let pts = find_fixed_points(&expshift(), 1, SearchBox::square(3.0), 16, Exec::default()).unwrap();
        assert_eq!(pts.len(), 2, "{pts:?}");
        assert!((pts[0].point.re + 1.84141).abs() < 1e-5);
        assert_eq!(pts[0].class, FixedClass::Attracting);
        assert!((pts[0].multiplier.norm() - 0.1586).abs() < 1e-4);
        assert!((pts[1].point.re - 1.14619).abs() < 1e-5);
        assert_eq!(pts[1].class, FixedClass::Repelling);
    }

    #[test]
    fn z_exp_parabolic_root_is_found_once() {
        let pts = find_fixed_points(&EntireMap::z_exp(), 1, SearchBox::square(1.0), 8, Exec::default()).unwrap();
        let near_zero: Vec<_> = pts.iter().filter(|p| p.point.norm() < 1e-3).collect();
        assert_eq!(near_zero.len(), 1, "{pts:?}");
        assert_eq!(near_zero[0].class, FixedClass::ParabolicCandidate(1));
    }

    #[test]
    fn multiplier_matches_finite_difference() {
        let f = EntireMap::sine(c(1.3, 0.2)).unwrap();
        for n in 1..=4 {
            for z in [c(0.3, 0.1), c(-1.0, 0.5), c(0.7, -0.2)] {
                let (_, d) = iterate_with_derivative(&f, z, n).unwrap();
                let h = 1e-6;
                let fd = (iterate_with_derivative(&f, z + h, n).unwrap().0
                    - iterate_with_derivative(&f, z - h, n).unwrap().0)
                    / (2.0 * h);
                assert!((fd - d).norm() <= 1e-5 * d.norm().max(1.0), "{n} {z}");
            }
        }
    }

    #[test]
    fn continued_fractions() {
        assert_eq!(rotation_number_cf(golden_mean(), 5).unwrap(), vec![1, 1, 1, 1, 1]);
        assert_eq!(rotation_number_cf(1.0 / 3.0, 3).unwrap(), vec![3]);
        assert_eq!(rotation_number_cf(2f64.sqrt() - 1.0, 4).unwrap(), vec![2, 2, 2, 2]);
        assert_eq!(rotation_number_cf(0.5, 10).unwrap(), vec![2]);
        assert!(rotation_number_cf(1.0, 3).is_err());
        assert!(rotation_number_cf(0.3, 41).is_err());
    }

    #[test]
    fn golden_rotation_estimate() {
        let est = rotation_estimate(&EntireMap::golden_exp_affine(), c(0.01, 0.0), 100_000).unwrap();
        assert!(est.max_modulus < 1.0);
        assert!((est.mean_turn - golden_mean()).abs() < 1e-3);
    }
}
