//! Dynamic rays ("hairs") by pullback along an external address.
//!
//! A hair is parametrized by a real potential `t > 0` and satisfies
//! `f(γ_s(t)) = γ_{σs}(F(t))` with `F(t) = eᵗ − 1`, where `σ` drops the
//! first digit of the address. Far out, `γ_s(t)` lies within `O(t·e^{−t})`
//! of a point of domain `s₀` whose image has modulus `≈ F(t)`, so each
//! point of the hair is computed by pushing the potential up with `F`
//! until it is large, seeding there, and pulling back through the inverse
//! branches selected by the address.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::logdyn::{lift, TractGeometry};
use crate::maps::{format_complex, format_real};
use crate::orbit::{self, BigPoint, Classification, DomainSet, DOUBLING_STREAK};
use crate::periodic::{self, FixedClass, FixedPointInfo};

/// Largest allowed absolute value of an address digit.
pub const MAX_DIGIT: i64 = 1 << 16;
/// Potential above which a hair point is seeded directly.
pub const SEED_POTENTIAL: f64 = 60.0;
/// Smallest potential accepted by [`hair_point`].
pub const MIN_POTENTIAL: f64 = 0.05;
/// Landing is declared once one period of pullbacks moves the point less
/// than this.
pub const LANDING_GAP: f64 = 1e-12;

/// `F(t) = eᵗ − 1`, the model dynamics on potentials.
pub fn model_potential(t: f64) -> f64 {
    t.exp_m1()
}

/// An eventually periodic sequence of fundamental-domain labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExternalAddress {
    preperiod: Vec<i64>,
    period: Vec<i64>,
}

impl ExternalAddress {
    pub fn new(preperiod: Vec<i64>, period: Vec<i64>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::InvalidParameter("address period must be nonempty".into()));
        }
        if let Some(d) = preperiod.iter().chain(&period).find(|d| d.abs() > MAX_DIGIT) {
            return Err(Error::InvalidParameter(format!("address digit {d} exceeds 2^16")));
        }
        Ok(Self { preperiod, period })
    }

    pub fn periodic(period: Vec<i64>) -> Result<Self> {
        Self::new(Vec::new(), period)
    }

    pub fn constant(digit: i64) -> Result<Self> {
        Self::new(Vec::new(), vec![digit])
    }

    pub fn preperiod(&self) -> &[i64] {
        &self.preperiod
    }

    pub fn period(&self) -> &[i64] {
        &self.period
    }

    pub fn is_periodic(&self) -> bool {
        self.preperiod.is_empty()
    }

    pub fn digit(&self, j: usize) -> i64 {
        match self.preperiod.get(j) {
            Some(&d) => d,
            None => self.period[(j - self.preperiod.len()) % self.period.len()],
        }
    }

    /// The address with its first `j` digits removed.
    pub fn shifted(&self, j: usize) -> Self {
        if j <= self.preperiod.len() {
            return Self { preperiod: self.preperiod[j..].to_vec(), period: self.period.clone() };
        }
        let n = self.period.len();
        let k = (j - self.preperiod.len()) % n;
        let mut period = self.period[k..].to_vec();
        period.extend_from_slice(&self.period[..k]);
        Self { preperiod: Vec::new(), period }
    }
}

fn join(digits: &[i64]) -> String {
    digits.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(",")
}

impl fmt::Display for ExternalAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.preperiod.is_empty() {
            write!(f, "{};", join(&self.preperiod))?;
        }
        write!(f, "p:{}", join(&self.period))
    }
}

impl FromStr for ExternalAddress {
    type Err = Error;

    /// `p:0,1` for the periodic address `(0 1)(0 1)…`; `2,-1;p:0` for a
    /// preperiod followed by a period.
    fn from_str(s: &str) -> Result<Self> {
        let digits = |part: &str| -> Result<Vec<i64>> {
            part.split(',')
                .map(|d| d.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad address digit {d:?}"))))
                .collect()
        };
        let (pre, per) = match s.trim().split_once(';') {
            Some((pre, per)) => (digits(pre)?, per.trim()),
            None => (Vec::new(), s.trim()),
        };
        let per = per
            .strip_prefix("p:")
            .ok_or_else(|| Error::Parse(format!("address period must start with \"p:\": {s:?}")))?;
        Self::new(pre, digits(per)?)
    }
}

/// The point `γ_s(t)` of the hair with address `s`.
///
/// Fails with [`Error::AddressInfeasible`] when a pullback whose target
/// lies outside `{|w| ≤ K}` does not land in the requested domain, and
/// with [`Error::PullbackDivergence`] when an inverse branch cannot be
/// solved to tolerance.
pub fn hair_point(geom: &TractGeometry, addr: &ExternalAddress, t: f64) -> Result<BigPoint> {
    if !t.is_finite() || t < MIN_POTENTIAL {
        return Err(Error::InvalidParameter(format!("potential {t} must be finite and at least {MIN_POTENTIAL}")));
    }
    let mut xs = vec![t];
    while xs[xs.len() - 1] < SEED_POTENTIAL {
        xs.push(model_potential(xs[xs.len() - 1]));
    }
    let m = xs.len() - 1;

    // The image of the seed has modulus F(x_m) and points along the tract
    // of the next digit.
    let (next_tract, _) = geom.split_domain(addr.digit(m + 1));
    let x = xs[m];
    let w = Complex64::new(
        x + (-(-x).exp()).ln_1p(),
        lift::tract_direction(geom.map(), next_tract).arg(),
    );
    let mut z = pull(geom, addr.digit(m), w, x)?;
    let mut big = BigPoint::from_complex(geom, z);
    for k in (0..m).rev() {
        let target = z;
        let d = addr.digit(k);
        z = pull(geom, d, target.ln(), xs[k])?;
        if target.norm() > geom.k() && geom.domain_index(z).ok() != Some(d) {
            return Err(Error::AddressInfeasible { digit: d, t: xs[k] });
        }
        big = BigPoint::Direct(z);
    }
    Ok(big)
}

fn pull(geom: &TractGeometry, domain: i64, w: Complex64, t: f64) -> Result<Complex64> {
    geom.pullback_log(domain, w).map_err(|e| match e {
        Error::PullbackDivergence { iterations, .. } => Error::PullbackDivergence { t, iterations },
        other => other,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaySample {
    pub t: f64,
    pub point: BigPoint,
    pub digit: i64,
}

/// `samples` points of the hair on an evenly spaced potential grid from
/// `t_start` to `t_end`.
pub fn trace_ray(
    geom: &TractGeometry,
    addr: &ExternalAddress,
    t_start: f64,
    t_end: f64,
    samples: usize,
) -> Result<Vec<RaySample>> {
    if t_start.is_nan() || t_end.is_nan() || t_start >= t_end || samples < 2 {
        return Err(Error::InvalidParameter("need t_start < t_end and at least 2 samples".into()));
    }
    let dt = (t_end - t_start) / (samples - 1) as f64;
    (0..samples)
        .map(|i| {
            let t = if i + 1 == samples { t_end } else { t_start + dt * i as f64 };
            hair_point(geom, addr, t).map(|point| RaySample { t, point, digit: addr.digit(0) })
        })
        .collect()
}

pub const RAY_CSV_HEADER: &str = "t,re,im,digit";

/// `t,re,im,digit`; points beyond `f64` range print `inf`.
pub fn ray_csv_row(geom: &TractGeometry, s: &RaySample) -> String {
    let z = s.point.to_complex(geom).unwrap_or(Complex64::new(f64::INFINITY, f64::INFINITY));
    format!("{},{},{}", format_real(s.t), format_complex(z), s.digit)
}

/// `|f(γ_s(t)) − γ_{σs}(F(t))| / (1 + |γ_{σs}(F(t))|)`, or `None` when
/// either side is outside the direct representation.
pub fn functional_residual(geom: &TractGeometry, addr: &ExternalAddress, t: f64) -> Result<Option<f64>> {
    let here = hair_point(geom, addr, t)?;
    let there = hair_point(geom, &addr.shifted(1), model_potential(t))?;
    let (BigPoint::Direct(a), BigPoint::Direct(b)) = (here, there) else {
        return Ok(None);
    };
    let fa = geom.map().eval_raw(a);
    Ok(Some((fa - b).norm() / (1.0 + b.norm())))
}

#[derive(Clone, Debug, PartialEq)]
pub enum LandingStatus {
    Landed { point: Complex64, info: FixedPointInfo },
    NoConvergence { last_point: Complex64, last_gaps: [f64; 2], pullbacks: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct LandingResult {
    pub address: ExternalAddress,
    pub status: LandingStatus,
}

impl LandingResult {
    pub fn landed(&self) -> Option<&FixedPointInfo> {
        match &self.status {
            LandingStatus::Landed { info, .. } => Some(info),
            LandingStatus::NoConvergence { .. } => None,
        }
    }

    /// `address;status;re;im;multiplier_abs;class`. Without convergence the
    /// last two gaps take the place of the class.
    pub fn record(&self) -> String {
        match &self.status {
            LandingStatus::Landed { point, info } => format!(
                "{};landed;{};{};{};{}",
                self.address,
                format_real(point.re),
                format_real(point.im),
                format_real(info.multiplier.norm()),
                info.class
            ),
            LandingStatus::NoConvergence { last_point, last_gaps, .. } => format!(
                "{};no_convergence;{};{};;gaps={:e},{:e}",
                self.address,
                format_real(last_point.re),
                format_real(last_point.im),
                last_gaps[0],
                last_gaps[1]
            ),
        }
    }
}

pub const DEFAULT_MAX_PULLBACKS: usize = 500;

/// Follows a periodic hair towards potential 0 by pulling `γ_s(1)` back
/// one period at a time. Once a period moves the point by less than
/// [`LANDING_GAP`], the limit is polished to a periodic point and
/// classified.
pub fn land_ray(geom: &TractGeometry, addr: &ExternalAddress, max_pullbacks: usize) -> Result<LandingResult> {
    if !addr.is_periodic() {
        return Err(Error::InvalidParameter(format!("address {addr} is not purely periodic")));
    }
    let n = addr.period().len();
    let mut p = hair_point(geom, addr, 1.0)?.to_complex(geom)?;
    let mut gaps = [f64::NAN; 2];
    for j in 1..=max_pullbacks {
        let mut q = p;
        for &d in addr.period().iter().rev() {
            q = pull(geom, d, q.ln(), 0.0)?;
        }
        let gap = (q - p).norm();
        gaps = [gaps[1], gap];
        p = q;
        if gap < LANDING_GAP {
            let point = periodic::polish(geom.map(), p, n)?;
            let info = periodic::classify(geom.map(), point, n)?;
            return Ok(LandingResult { address: addr.clone(), status: LandingStatus::Landed { point, info } });
        }
        if !gap.is_finite() {
            return Err(Error::PullbackDivergence { t: 0.0, iterations: j });
        }
    }
    Ok(LandingResult {
        address: addr.clone(),
        status: LandingStatus::NoConvergence { last_point: p, last_gaps: gaps, pullbacks: max_pullbacks },
    })
}

/// Whether a landing verdict is compatible with landing theory: the
/// landing point is repelling or parabolic.
pub fn landing_is_admissible(info: &FixedPointInfo) -> bool {
    matches!(info.class, FixedClass::Repelling | FixedClass::ParabolicCandidate(_))
}

/// Outcome of [`hair_confinement_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct ConfinementReport {
    pub samples: usize,
    /// Samples whose image orbit failed, with the verdict that failed.
    pub failures: Vec<(f64, Classification)>,
    /// Images (samples included) that were representable and checked
    /// against the domain and the radius.
    pub checked_points: usize,
    /// Samples whose escape was declared at `f64` overflow rather than by
    /// a full doubling streak.
    pub overflowed: usize,
}

impl ConfinementReport {
    pub fn confined(&self) -> bool {
        self.samples > 0 && self.failures.is_empty()
    }
}

/// Checks that the hair of constant address `digit`, sampled at `samples`
/// potentials in `t_range`, stays in that domain with modulus at least
/// `radius` for the sample and its first 20 images, and escapes.
///
/// Images are taken on the hair itself (`γ(Fʲ(t))`); forward iteration
/// would lose the imaginary part after two steps.
pub fn hair_confinement_check(
    geom: &TractGeometry,
    digit: i64,
    t_range: (f64, f64),
    samples: usize,
    radius: f64,
) -> Result<ConfinementReport> {
    let addr = ExternalAddress::constant(digit)?;
    let allowed = DomainSet::only([digit]);
    let ts = trace_ray(geom, &addr, t_range.0, t_range.1, samples)?;
    let mut report = ConfinementReport { samples, failures: Vec::new(), checked_points: 0, overflowed: 0 };
    for s in ts {
        let rec = orbit::classify_sequence(geom, &allowed, radius, orbit::ray_orbit(geom, &addr, s.t, DOUBLING_STREAK));
        report.checked_points += rec.r_values.len();
        if rec.overflowed {
            report.overflowed += 1;
        }
        if !rec.classification.is_escaping() {
            report.failures.push((s.t, rec.classification));
        }
    }
    Ok(report)
}
