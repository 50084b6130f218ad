//! Overflow-safe iteration and escape classification.
//!
//! Orbits of these maps leave `f64` range after two or three steps, so a
//! point is carried either as its value or, past [`DIRECT_LIMIT`], as a
//! logarithm tagged with its strip.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cmath::is_finite;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::logdyn::{lift, LogPoint, TractGeometry};
use crate::maps::format_complex;
use crate::rays::{self, ExternalAddress};

/// Modulus above which points switch to the logarithmic representation.
pub const DIRECT_LIMIT: f64 = 1e15;
/// Consecutive doublings of `r` that count as escape.
pub const DOUBLING_STREAK: usize = 20;
pub const DEFAULT_NMAX: usize = 100_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BigPoint {
    Direct(Complex64),
    Logarithmic(LogPoint),
}

impl BigPoint {
    pub fn from_complex(geom: &TractGeometry, z: Complex64) -> Self {
        if z.norm() <= DIRECT_LIMIT {
            BigPoint::Direct(z)
        } else {
            BigPoint::Logarithmic(geom.log_point(z.ln()))
        }
    }

    /// The point `e^ζ`, stored directly when that is small enough.
    pub fn from_log(geom: &TractGeometry, zeta: Complex64) -> Self {
        if zeta.re <= DIRECT_LIMIT.ln() {
            BigPoint::Direct(zeta.exp())
        } else {
            BigPoint::Logarithmic(geom.log_point(zeta))
        }
    }

    pub fn to_complex(&self, geom: &TractGeometry) -> Result<Complex64> {
        match self {
            BigPoint::Direct(z) => Ok(*z),
            BigPoint::Logarithmic(p) => geom.exp_of(p),
        }
    }

    pub fn log_modulus(&self) -> f64 {
        match self {
            BigPoint::Direct(z) => z.norm().ln(),
            BigPoint::Logarithmic(p) => p.zeta.re,
        }
    }

    pub fn is_direct(&self) -> bool {
        matches!(self, BigPoint::Direct(_))
    }

    /// Fundamental domain containing the point.
    pub fn domain(&self, geom: &TractGeometry) -> Result<i64> {
        match self {
            BigPoint::Direct(z) => geom.domain_index(*z),
            BigPoint::Logarithmic(p) => geom.domain_index_log(p),
        }
    }

    /// `r` of the point; requires `|z| > K` off the cut.
    pub fn size_r(&self, geom: &TractGeometry) -> Result<f64> {
        match self {
            BigPoint::Direct(z) => geom.size_r(*z),
            BigPoint::Logarithmic(p) => Ok(geom.size_r_log(p)),
        }
    }
}

/// One application of `f`. Values that fit are evaluated directly;
/// otherwise the closed-form logarithm of `f` is used. Fails with
/// [`Error::Indeterminate`] once even the logarithm is out of range.
pub fn step(geom: &TractGeometry, p: &BigPoint) -> Result<BigPoint> {
    let z = p.to_complex(geom)?;
    let fz = geom.map().eval_raw(z);
    if is_finite(fz) && fz.norm() <= DIRECT_LIMIT {
        return Ok(BigPoint::Direct(fz));
    }
    let (_, w) = lift::log_image(geom.map(), z);
    if !is_finite(w) {
        return Err(Error::Indeterminate);
    }
    Ok(BigPoint::from_log(geom, w))
}

/// Plain-`f64` iteration, stopping at the first non-finite value.
pub fn direct_orbit(geom: &TractGeometry, z: Complex64, steps: usize) -> Vec<Complex64> {
    let mut out = vec![z];
    let mut z = z;
    for _ in 0..steps {
        z = geom.map().eval_raw(z);
        if !is_finite(z) {
            break;
        }
        out.push(z);
    }
    out
}

/// The domains an orbit is allowed to visit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DomainSet {
    All,
    Only(BTreeSet<i64>),
}

impl DomainSet {
    pub fn only(domains: impl IntoIterator<Item = i64>) -> Self {
        DomainSet::Only(domains.into_iter().collect())
    }

    pub fn contains(&self, d: i64) -> bool {
        match self {
            DomainSet::All => true,
            DomainSet::Only(s) => s.contains(&d),
        }
    }

    /// Labels used when a finite list is needed; `All` is cut to `−3..=3`.
    pub fn sample_labels(&self) -> Vec<i64> {
        match self {
            DomainSet::All => (-3..=3).collect(),
            DomainSet::Only(s) => s.iter().copied().collect(),
        }
    }
}

impl fmt::Display for DomainSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainSet::All => f.write_str("all"),
            DomainSet::Only(s) => {
                let parts: Vec<String> = s.iter().map(|d| d.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for DomainSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("all") {
            return Ok(DomainSet::All);
        }
        let set = s
            .split(',')
            .map(|p| p.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad domain label {p:?}"))))
            .collect::<Result<BTreeSet<_>>>()?;
        if set.is_empty() {
            return Err(Error::Parse("empty domain set".into()));
        }
        Ok(DomainSet::Only(set))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    /// `r` doubled at every step from `n_detect` on, for
    /// [`DOUBLING_STREAK`] steps or until the orbit overflowed.
    Escaping { n_detect: usize },
    /// At step `n_exit` the orbit fell below `R` or left the allowed domains.
    LeftDomains { n_exit: usize },
    Undecided,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::Escaping { .. } => "escaping",
            Classification::LeftDomains { .. } => "left_domains",
            Classification::Undecided => "undecided",
        }
    }

    pub fn is_escaping(&self) -> bool {
        matches!(self, Classification::Escaping { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub points: Vec<BigPoint>,
    pub r_values: Vec<f64>,
    pub classification: Classification,
    pub domains_visited: Vec<i64>,
    /// Escape was declared because the orbit left every representable
    /// range, not by a full doubling streak.
    pub overflowed: bool,
}

/// Incremental form of the escape test, fed one orbit point at a time.
/// Shared by forward iteration and by orbits made of ray images.
#[derive(Debug)]
pub struct GrowthClassifier<'a> {
    geom: &'a TractGeometry,
    allowed: &'a DomainSet,
    log_radius: f64,
    streak: usize,
    record: OrbitRecord,
}

impl<'a> GrowthClassifier<'a> {
    pub fn new(geom: &'a TractGeometry, allowed: &'a DomainSet, radius: f64) -> Self {
        Self {
            geom,
            allowed,
            log_radius: radius.ln(),
            streak: 0,
            record: OrbitRecord {
                points: Vec::new(),
                r_values: Vec::new(),
                classification: Classification::Undecided,
                domains_visited: Vec::new(),
                overflowed: false,
            },
        }
    }

    /// Records the next orbit point; returns a verdict once one is reached.
    pub fn observe(&mut self, p: BigPoint) -> Option<Classification> {
        let m = self.record.points.len();
        self.record.points.push(p);
        if p.log_modulus() < self.log_radius {
            return Some(Classification::LeftDomains { n_exit: m });
        }
        let d = match p.domain(self.geom) {
            Ok(d) => d,
            Err(Error::Indeterminate) => return Some(self.overflow()),
            Err(_) => return Some(Classification::LeftDomains { n_exit: m }),
        };
        self.record.domains_visited.push(d);
        if !self.allowed.contains(d) {
            return Some(Classification::LeftDomains { n_exit: m });
        }
        let Ok(r) = p.size_r(self.geom) else {
            return Some(Classification::LeftDomains { n_exit: m });
        };
        match self.record.r_values.last() {
            Some(&prev) if r >= 2.0 * prev => self.streak += 1,
            _ => self.streak = 0,
        }
        self.record.r_values.push(r);
        (self.streak >= DOUBLING_STREAK).then(|| Classification::Escaping { n_detect: m - self.streak })
    }

    /// The next orbit point is not representable: escape by fiat.
    pub fn overflow(&mut self) -> Classification {
        self.record.overflowed = true;
        let last = self.record.r_values.len().saturating_sub(1);
        Classification::Escaping { n_detect: last - self.streak.min(last) }
    }

    pub fn finish(mut self, verdict: Classification) -> OrbitRecord {
        self.record.classification = verdict;
        self.record
    }
}

fn validate(geom: &TractGeometry, radius: f64, n_max: usize) -> Result<()> {
    if radius.is_nan() || radius <= geom.k() {
        return Err(Error::InvalidParameter(format!("R = {radius} must exceed K = {}", geom.k())));
    }
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    Ok(())
}

/// Runs an orbit given as a sequence of points through the classifier.
/// `Err(Indeterminate)` items count as overflow; any other error ends the
/// run as `Undecided`.
pub fn classify_sequence(
    geom: &TractGeometry,
    allowed: &DomainSet,
    radius: f64,
    points: impl IntoIterator<Item = Result<BigPoint>>,
) -> OrbitRecord {
    let mut c = GrowthClassifier::new(geom, allowed, radius);
    for item in points {
        let verdict = match item {
            Ok(p) => c.observe(p),
            Err(Error::Indeterminate) => Some(c.overflow()),
            Err(_) => Some(Classification::Undecided),
        };
        if let Some(v) = verdict {
            return c.finish(v);
        }
    }
    c.finish(Classification::Undecided)
}

/// Follows the orbit of `z` for at most `n_max` steps and decides whether
/// it escapes within `allowed` while staying outside `{|z| < R}`.
pub fn classify_growth(
    geom: &TractGeometry,
    allowed: &DomainSet,
    radius: f64,
    z: BigPoint,
    n_max: usize,
) -> Result<OrbitRecord> {
    validate(geom, radius, n_max)?;
    let orbit = std::iter::successors(Some(Ok(z)), |prev: &Result<BigPoint>| match prev {
        Ok(p) => Some(step(geom, p)),
        Err(_) => None,
    });
    Ok(classify_sequence(geom, allowed, radius, orbit.take(n_max + 1)))
}

/// [`classify_growth`] over many starting points.
pub fn classify_batch(
    geom: &TractGeometry,
    allowed: &DomainSet,
    radius: f64,
    points: &[Complex64],
    n_max: usize,
    exec: Exec,
) -> Result<Vec<OrbitRecord>> {
    validate(geom, radius, n_max)?;
    exec.map(points.len(), |i| {
        classify_growth(geom, allowed, radius, BigPoint::from_complex(geom, points[i]), n_max)
    })
    .into_iter()
    .collect()
}

pub const ORBIT_CSV_HEADER: &str = "re,im,classification,n_detect,domains_visited";

/// `re,im,classification,n_detect,domains_visited`; `n_detect` holds the
/// exit step for `left_domains` and is empty when undecided.
pub fn orbit_csv_row(z: Complex64, rec: &OrbitRecord) -> String {
    let n = match rec.classification {
        Classification::Escaping { n_detect } => n_detect.to_string(),
        Classification::LeftDomains { n_exit } => n_exit.to_string(),
        Classification::Undecided => String::new(),
    };
    let domains: Vec<String> = rec.domains_visited.iter().map(|d| d.to_string()).collect();
    format!("{},{},{},{}", format_complex(z), rec.classification.label(), n, domains.join(";"))
}

/// Ray-image orbit of a hair point: `γ_{σʲs}(Fʲ(t))` for `j = 0, 1, …`.
pub fn ray_orbit<'a>(
    geom: &'a TractGeometry,
    addr: &'a ExternalAddress,
    t: f64,
    steps: usize,
) -> impl Iterator<Item = Result<BigPoint>> + 'a {
    (0..=steps).scan(t, move |x, j| {
        let item = if x.is_finite() {
            rays::hair_point(geom, &addr.shifted(j), *x)
        } else {
            Err(Error::Indeterminate)
        };
        *x = rays::model_potential(*x);
        Some(item)
    })
}

/// Length of the random periodic words used as probe addresses.
pub const PROBE_WORD_LEN: usize = 6;
/// Upper end of the search grid, as `log ρ`.
pub const RPRIME_LOG_CAP: f64 = 700.0;

/// Potential at which the hair of `addr` reaches modulus `rho`: bisection
/// on `log t`, or the smallest admissible potential if the whole hair lies
/// outside the circle.
pub fn potential_at_radius(geom: &TractGeometry, addr: &ExternalAddress, rho: f64) -> Result<f64> {
    let log_mod = |lt: f64| rays::hair_point(geom, addr, lt.exp()).map(|p| p.log_modulus());
    let target = rho.ln();
    let mut lo = rays::MIN_POTENTIAL.ln();
    if log_mod(lo)? >= target {
        return Ok(lo.exp());
    }
    let mut hi = target.max(1.0) + 2.0;
    while log_mod(hi)? < target {
        hi *= 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if log_mod(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi.exp())
}

fn random_address(rng: &mut ChaCha8Rng, labels: &[i64]) -> ExternalAddress {
    let word = (0..PROBE_WORD_LEN).map(|_| labels[rng.gen_range(0..labels.len())]).collect();
    ExternalAddress::periodic(word).expect("labels are bounded")
}

/// Classifies `probes` hair points of modulus `rho` with random addresses
/// in `allowed`. Returns one record per probe.
pub fn probe_shell(
    geom: &TractGeometry,
    allowed: &DomainSet,
    radius: f64,
    rho: f64,
    probes: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<OrbitRecord>> {
    let labels = allowed.sample_labels();
    exec.map(probes, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let addr = random_address(&mut rng, &labels);
        let t = potential_at_radius(geom, &addr, rho)?;
        Ok(classify_sequence(geom, allowed, radius, ray_orbit(geom, &addr, t, DOUBLING_STREAK + 1)))
    })
    .into_iter()
    .collect()
}

/// Smallest `ρ = R·2ᵏ` at which every probe escapes: a witness for the
/// radius beyond which points whose orbits stay in `allowed` escape.
pub fn estimate_rprime(
    geom: &TractGeometry,
    allowed: &DomainSet,
    radius: f64,
    probes: usize,
    seed: u64,
    exec: Exec,
) -> Result<f64> {
    validate(geom, radius, 1)?;
    let mut rho = radius;
    for k in 0.. {
        if rho.ln() > RPRIME_LOG_CAP {
            break;
        }
        let shell_seed = seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let recs = probe_shell(geom, allowed, radius, rho, probes, shell_seed, exec)?;
        if recs.iter().all(|r| r.classification.is_escaping()) {
            return Ok(rho);
        }
        rho *= 2.0;
    }
    Err(Error::NoWitness)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShellMinimum {
    pub radius: f64,
    pub min_image_modulus: f64,
}

/// For each radius `T`, the least `|f(z)|` over the samples with `|z| ≥ T`.
pub fn extendability_probe(
    geom: &TractGeometry,
    samples: &[Complex64],
    radii: &[f64],
) -> Result<Vec<ShellMinimum>> {
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("radii must be strictly increasing".into()));
    }
    let images: Vec<(f64, f64)> = samples
        .iter()
        .map(|&z| {
            let fz = geom.map().eval_raw(z);
            let m = if is_finite(fz) { fz.norm() } else { lift::log_image(geom.map(), z).1.re.exp() };
            (z.norm(), m)
        })
        .collect();
    radii
        .iter()
        .map(|&t| {
            images
                .iter()
                .filter(|(r, _)| *r >= t)
                .map(|&(_, m)| m)
                .reduce(f64::min)
                .map(|m| ShellMinimum { radius: t, min_image_modulus: m })
                .ok_or(Error::EmptyShell { radius: t })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::EntireMap;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn expshift() -> TractGeometry {
        TractGeometry::new(EntireMap::exp_shift(c(-2.0, 0.0)).unwrap()).unwrap()
    }

    #[test]
    fn step_examples() {
        let g = expshift();
        assert_eq!(step(&g, &BigPoint::Direct(c(0.0, 0.0))).unwrap(), BigPoint::Direct(c(-1.0, 0.0)));
        match step(&g, &BigPoint::Direct(c(40.0, 0.0))).unwrap() {
            BigPoint::Logarithmic(p) => {
                assert!((p.zeta - c(40.0, 0.0)).norm() < 1e-12);
                assert_eq!(p.strip, 0);
            }
            other => panic!("{other:?}"),
        }
        let z = c(1.3, -0.4);
        assert_eq!(step(&g, &BigPoint::Direct(z)).unwrap(), BigPoint::Direct(g.map().evaluate(z).unwrap()));
    }

    #[test]
    fn step_overflows_to_indeterminate() {
        let g = expshift();
        let mut p = BigPoint::Direct(c(5.0, 0.0));
        let mut n = 0;
        loop {
            match step(&g, &p) {
                Ok(q) => p = q,
                Err(Error::Indeterminate) => break,
                Err(e) => panic!("{e}"),
            }
            n += 1;
            assert!(n < 10);
        }
        assert!(!p.is_direct());
    }

    #[test]
    fn representation_round_trip() {
        let g = expshift();
        for z in [c(1e14, 3e13), c(-2e15, 1.0), c(0.3, 7.0)] {
            let via_log = BigPoint::Logarithmic(g.log_point(z.ln())).to_complex(&g).unwrap();
            assert!((via_log - z).norm() <= 1e-9 * z.norm());
            let b = BigPoint::from_complex(&g, z);
            assert!((b.to_complex(&g).unwrap() - z).norm() <= 1e-9 * z.norm());
        }
    }

    #[test]
    fn classify_growth_examples() {
        let g = expshift();
        let zero = DomainSet::only([0]);
        let rec = classify_growth(&g, &zero, 5.0, BigPoint::Direct(c(60.0, 0.0)), 1000).unwrap();
        assert!(rec.classification.is_escaping());
        assert!(rec.overflowed);

        let rec = classify_growth(&g, &zero, 5.0, BigPoint::Direct(c(-1.8414, 0.0)), 1000).unwrap();
        assert_eq!(rec.classification, Classification::LeftDomains { n_exit: 0 });

        let one = DomainSet::only([1]);
        let rec = classify_growth(&g, &one, 5.0, BigPoint::Direct(c(60.0, 0.0)), 1000).unwrap();
        assert_eq!(rec.classification, Classification::LeftDomains { n_exit: 0 });
        assert_eq!(rec.domains_visited, vec![0]);
    }

    #[test]
    fn classify_growth_rejects_small_radius() {
        let g = expshift();
        assert!(classify_growth(&g, &DomainSet::All, 2.0, BigPoint::Direct(c(6.0, 0.0)), 10).is_err());
    }

    #[test]
    fn escaping_is_monotone_in_n_max() {
        let g = expshift();
        let z = BigPoint::Direct(c(7.0, 0.5));
        let a = classify_growth(&g, &DomainSet::All, 4.0, z, 50).unwrap();
        let b = classify_growth(&g, &DomainSet::All, 4.0, z, 5000).unwrap();
        assert!(a.classification.is_escaping());
        assert_eq!(a.classification, b.classification);
    }

    #[test]
    fn escaping_r_values_increase_from_detection() {
        let g = expshift();
        let rec = classify_growth(&g, &DomainSet::All, 4.0, BigPoint::Direct(c(8.0, 0.2)), 100).unwrap();
        let Classification::Escaping { n_detect } = rec.classification else { panic!() };
        assert!(rec.r_values[n_detect..].windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn domain_set_parse() {
        assert_eq!("all".parse::<DomainSet>().unwrap(), DomainSet::All);
        assert_eq!("0, -2".parse::<DomainSet>().unwrap(), DomainSet::only([-2, 0]));
        assert!("x".parse::<DomainSet>().is_err());
        assert_eq!(DomainSet::only([1, 0]).to_string(), "0,1");
    }

    #[test]
    fn csv_row_format() {
        let g = expshift();
        let rec = classify_growth(&g, &DomainSet::only([1]), 5.0, BigPoint::Direct(c(60.0, 0.0)), 10).unwrap();
        assert_eq!(orbit_csv_row(c(60.0, 0.0), &rec), "60,0,left_domains,0,0");
    }

    #[test]
    fn extendability_examples() {
        let g = expshift();
        let pos: Vec<Complex64> = (1..=400).map(|k| c(k as f64 * 0.1, 0.0)).collect();
        let rep = extendability_probe(&g, &pos, &[10.0, 20.0, 40.0]).unwrap();
        for (m, x) in rep.iter().zip([10.0f64, 20.0, 40.0]) {
            assert!((m.min_image_modulus - (x.exp() - 2.0)).abs() <= 1e-9 * x.exp());
        }
        let neg: Vec<Complex64> = pos.iter().map(|z| -z).collect();
        let rep = extendability_probe(&g, &neg, &[10.0, 20.0, 40.0]).unwrap();
        assert!(rep.iter().all(|m| (m.min_image_modulus - 2.0).abs() < 1e-4));
        assert!(matches!(
            extendability_probe(&g, &pos, &[100.0]),
            Err(Error::EmptyShell { radius }) if radius == 100.0
        ));
        assert!(extendability_probe(&g, &pos, &[20.0, 10.0]).is_err());
    }
}
