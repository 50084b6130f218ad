//! The built-in entire-function families.
//!
//! Each family has a closed-form derivative and a closed-form singular set,
//! which everything downstream relies on (tract bound, logarithmic lift,
//! inverse branches). Maps are validated when built and immutable after.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::cmath::{cexp, is_finite};
use crate::error::{Error, Result};

/// Which family a map belongs to, without its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// `λ(eᶻ − 1)`
    ExpAffine,
    /// `eᶻ + κ`
    ExpShift,
    /// `λ·sin z`
    Sine,
    /// `a·eᶻ + b·e⁻ᶻ`
    Cosine,
    /// `z·eᶻ`
    ZExp,
    /// `¼((z + 1)eᶻ − 1)`
    PetalExp,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::ExpAffine,
        Family::ExpShift,
        Family::Sine,
        Family::Cosine,
        Family::ZExp,
        Family::PetalExp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::ExpAffine => "expaffine",
            Family::ExpShift => "expshift",
            Family::Sine => "sine",
            Family::Cosine => "cosine",
            Family::ZExp => "zexp",
            Family::PetalExp => "petalexp",
        }
    }

    /// Names of the complex parameters, in descriptor order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::ExpAffine | Family::Sine => &["lambda"],
            Family::ExpShift => &["kappa"],
            Family::Cosine => &["a", "b"],
            Family::ZExp | Family::PetalExp => &[],
        }
    }

    /// Number of tracts over `{|w| > K}`.
    pub fn tract_count(self) -> usize {
        match self {
            Family::Sine | Family::Cosine => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|fam| fam.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown family '{s}'")))
    }
}

/// A family member with its parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MapKind {
    ExpAffine { lambda: Complex64 },
    ExpShift { kappa: Complex64 },
    Sine { lambda: Complex64 },
    Cosine { a: Complex64, b: Complex64 },
    ZExp,
    PetalExp,
}

/// A validated entire map. Construct through the family constructors,
/// [`EntireMap::from_params`] or by parsing a descriptor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntireMap {
    kind: MapKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingularKind {
    Critical,
    Asymptotic,
}

impl fmt::Display for SingularKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SingularKind::Critical => "critical",
            SingularKind::Asymptotic => "asymptotic",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularValue {
    pub point: Complex64,
    pub kind: SingularKind,
}

/// The finite singular values of a map, pairwise distinct.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularSet {
    pub values: Vec<SingularValue>,
}

impl SingularSet {
    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.values.iter().map(|v| v.point)
    }
}

/// Golden-mean rotation number `(√5 − 1)/2`.
pub fn golden_mean() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

/// `e^{2πiθ}`.
pub fn rotation(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * theta)
}

fn check_finite(name: &str, v: Complex64) -> Result<()> {
    if is_finite(v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite")))
    }
}

fn check_nonzero(name: &str, v: Complex64) -> Result<()> {
    check_finite(name, v)?;
    if v == Complex64::new(0.0, 0.0) {
        Err(Error::InvalidParameter(format!("{name} must be nonzero")))
    } else {
        Ok(())
    }
}

impl EntireMap {
    pub fn exp_affine(lambda: Complex64) -> Result<Self> {
        check_nonzero("lambda", lambda)?;
        Ok(Self { kind: MapKind::ExpAffine { lambda } })
    }

    /// `λ(eᶻ − 1)` with `λ = e^{2πiθ}`, θ the golden mean.
    pub fn golden_exp_affine() -> Self {
        Self { kind: MapKind::ExpAffine { lambda: rotation(golden_mean()) } }
    }

    pub fn exp_shift(kappa: Complex64) -> Result<Self> {
        check_finite("kappa", kappa)?;
        Ok(Self { kind: MapKind::ExpShift { kappa } })
    }

    pub fn sine(lambda: Complex64) -> Result<Self> {
        check_nonzero("lambda", lambda)?;
        Ok(Self { kind: MapKind::Sine { lambda } })
    }

    /// Rejects `a = 0` or `b = 0`; those degenerate to exponential maps.
    pub fn cosine(a: Complex64, b: Complex64) -> Result<Self> {
        check_nonzero("a", a)?;
        check_nonzero("b", b)?;
        Ok(Self { kind: MapKind::Cosine { a, b } })
    }

    pub fn z_exp() -> Self {
        Self { kind: MapKind::ZExp }
    }

    pub fn petal_exp() -> Self {
        Self { kind: MapKind::PetalExp }
    }

    /// Builds a map from its family and parameters in descriptor order.
    pub fn from_params(family: Family, params: &[Complex64]) -> Result<Self> {
        let want = family.param_names().len();
        if params.len() != want {
            return Err(Error::InvalidParameter(format!(
                "{family} takes {want} parameter(s), got {}",
                params.len()
            )));
        }
        match family {
            Family::ExpAffine => Self::exp_affine(params[0]),
            Family::ExpShift => Self::exp_shift(params[0]),
            Family::Sine => Self::sine(params[0]),
            Family::Cosine => Self::cosine(params[0], params[1]),
            Family::ZExp => Ok(Self::z_exp()),
            Family::PetalExp => Ok(Self::petal_exp()),
        }
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn family(&self) -> Family {
        match self.kind {
            MapKind::ExpAffine { .. } => Family::ExpAffine,
            MapKind::ExpShift { .. } => Family::ExpShift,
            MapKind::Sine { .. } => Family::Sine,
            MapKind::Cosine { .. } => Family::Cosine,
            MapKind::ZExp => Family::ZExp,
            MapKind::PetalExp => Family::PetalExp,
        }
    }

    pub fn params(&self) -> Vec<Complex64> {
        match self.kind {
            MapKind::ExpAffine { lambda } | MapKind::Sine { lambda } => vec![lambda],
            MapKind::ExpShift { kappa } => vec![kappa],
            MapKind::Cosine { a, b } => vec![a, b],
            MapKind::ZExp | MapKind::PetalExp => vec![],
        }
    }

    /// `f(z)` with no overflow check. Hot loops use this and test the
    /// result themselves.
    #[inline]
    pub fn eval_raw(&self, z: Complex64) -> Complex64 {
        match self.kind {
            MapKind::ExpAffine { lambda } => lambda * (cexp(z) - 1.0),
            MapKind::ExpShift { kappa } => cexp(z) + kappa,
            MapKind::Sine { lambda } => lambda * z.sin(),
            MapKind::Cosine { a, b } => a * cexp(z) + b * cexp(-z),
            MapKind::ZExp => z * cexp(z),
            MapKind::PetalExp => 0.25 * ((z + 1.0) * cexp(z) - 1.0),
        }
    }

    #[inline]
    pub fn derivative_raw(&self, z: Complex64) -> Complex64 {
        match self.kind {
            MapKind::ExpAffine { lambda } => lambda * cexp(z),
            MapKind::ExpShift { .. } => cexp(z),
            MapKind::Sine { lambda } => lambda * z.cos(),
            MapKind::Cosine { a, b } => a * cexp(z) - b * cexp(-z),
            MapKind::ZExp => (1.0 + z) * cexp(z),
            MapKind::PetalExp => 0.25 * (z + 2.0) * cexp(z),
        }
    }

    /// `f(z)`. Fails with [`Error::Overflow`] when the result is not a
    /// finite double.
    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        finite_or_overflow(z, self.eval_raw(z))
    }

    /// `f′(z)` in closed form.
    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        finite_or_overflow(z, self.derivative_raw(z))
    }

    pub fn singular_values(&self) -> SingularSet {
        use SingularKind::*;
        let sv = |point, kind| SingularValue { point, kind };
        let values = match self.kind {
            MapKind::ExpShift { kappa } => vec![sv(kappa, Asymptotic)],
            MapKind::ExpAffine { lambda } => vec![sv(-lambda, Asymptotic)],
            MapKind::Sine { lambda } => vec![sv(lambda, Critical), sv(-lambda, Critical)],
            MapKind::Cosine { a, b } => {
                let v = 2.0 * (a * b).sqrt();
                vec![sv(v, Critical), sv(-v, Critical)]
            }
            MapKind::ZExp => vec![
                sv(Complex64::new(-(-1f64).exp(), 0.0), Critical),
                sv(Complex64::new(0.0, 0.0), Asymptotic),
            ],
            MapKind::PetalExp => vec![
                sv(self.eval_raw(Complex64::new(-2.0, 0.0)), Critical),
                sv(Complex64::new(-0.25, 0.0), Asymptotic),
            ],
        };
        SingularSet { values }
    }

    /// `K = 1 + max(|f(0)|, max |s|)` over the singular values `s`.
    pub fn bound_k(&self) -> f64 {
        let f0 = self.eval_raw(Complex64::new(0.0, 0.0)).norm();
        let smax = self
            .singular_values()
            .points()
            .map(|s| s.norm())
            .fold(0.0, f64::max);
        1.0 + f0.max(smax)
    }
}

fn finite_or_overflow(z: Complex64, v: Complex64) -> Result<Complex64> {
    if is_finite(v) {
        Ok(v)
    } else {
        Err(Error::Overflow(z))
    }
}

/// Shortest round-tripping decimal, switching to exponent notation outside
/// `[1e−5, 1e16)` so that output stays short.
pub fn format_real(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Formats a complex number as `re,im` using the shortest round-tripping
/// decimal form.
pub fn format_complex(z: Complex64) -> String {
    format!("{},{}", format_real(z.re), format_real(z.im))
}

/// Parses `re,im` (a bare `re` means zero imaginary part).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || Error::Parse(format!("expected 're,im', got '{s}'"));
    let mut parts = s.split(',');
    let re: f64 = parts.next().ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
    let im: f64 = match parts.next() {
        Some(p) => p.trim().parse().map_err(|_| bad())?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

/// Descriptor form: `family=<name> <param>=<re>,<im> ...`.
impl fmt::Display for EntireMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let family = self.family();
        write!(f, "family={family}")?;
        for (name, value) in family.param_names().iter().zip(self.params()) {
            write!(f, " {name}={}", format_complex(value))?;
        }
        Ok(())
    }
}

impl FromStr for EntireMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut family = None;
        let mut pairs = Vec::new();
        for token in s.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got '{token}'")))?;
            if key == "family" {
                family = Some(value.parse::<Family>()?);
            } else {
                pairs.push((key, parse_complex(value)?));
            }
        }
        let family = family.ok_or_else(|| Error::Parse("missing family=".into()))?;
        let mut params = Vec::new();
        for name in family.param_names() {
            let (_, v) = pairs
                .iter()
                .find(|(k, _)| k == name)
                .ok_or_else(|| Error::Parse(format!("missing {name}= for {family}")))?;
            params.push(*v);
        }
        if let Some((k, _)) = pairs.iter().find(|(k, _)| !family.param_names().contains(k)) {
            return Err(Error::Parse(format!("{family} has no parameter '{k}'")));
        }
        EntireMap::from_params(family, &params)
    }
}
