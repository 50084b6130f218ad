//! Tract geometry in logarithmic coordinates.
//!
//! For a map `f` with bound `K`, the tracts are the components of
//! `f⁻¹({|w| > K})`. A cut ray `γ` in `{|w| > K}` that avoids the tracts
//! slices the half-plane `H = {Re ζ > log K}` into fundamental strips, and
//! its preimage slices each tract into fundamental domains. The lift `Φ`
//! satisfies `exp ∘ Φ = f ∘ exp` and maps each fundamental domain onto a
//! strip; the size function `r(z) = |ζ − ζ₀|` measures distance in the
//! strip to a fixed far-out base point.
//!
//! Domain labels: for single-tract families the label is the strip index
//! of `Φ`. For the two-tract families (sine, cosine) the tract tag `t ∈
//! {0, 1}` and strip `s` are flattened to `2s + t`.

mod audit;
pub mod lift;

pub use audit::{
    cf_csv_row, expansion_csv_row, format_params, DoublingAudit, DoublingSample, ExpansionReport,
    CF_CSV_HEADER, EXPANSION_CSV_HEADER,
};

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use num_complex::Complex64;

use crate::cmath::{is_finite, wrap_tau};
use crate::error::{Error, Result};
use crate::maps::EntireMap;
use lift::TractTag;

/// Tolerance for "on the cut curve".
pub const ON_CUT_TOL: f64 = 1e-9;

/// Real part of the base point in every strip: `16π + log K + 1`.
pub fn base_real_part(k: f64) -> f64 {
    16.0 * PI + k.ln() + 1.0
}

/// The four axis directions a cut ray may take, in search order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    NegReal,
    PosImag,
    NegImag,
    PosReal,
}

impl Direction {
    pub const SEARCH_ORDER: [Direction; 4] =
        [Direction::NegReal, Direction::PosImag, Direction::NegImag, Direction::PosReal];

    pub fn unit(self) -> Complex64 {
        match self {
            Direction::NegReal => Complex64::new(-1.0, 0.0),
            Direction::PosImag => Complex64::new(0.0, 1.0),
            Direction::NegImag => Complex64::new(0.0, -1.0),
            Direction::PosReal => Complex64::new(1.0, 0.0),
        }
    }

    /// Argument of the ray, normalised to `(0, 2π]`.
    pub fn angle(self) -> f64 {
        match self {
            Direction::NegReal => PI,
            Direction::PosImag => FRAC_PI_2,
            Direction::NegImag => 3.0 * FRAC_PI_2,
            Direction::PosReal => TAU,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::NegReal => "-x",
            Direction::PosImag => "+iy",
            Direction::NegImag => "-iy",
            Direction::PosReal => "+x",
        })
    }
}

/// The ray `{ s·dir : s ≥ K }`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutCurve {
    pub direction: Direction,
    /// `|base| = K`.
    pub base: Complex64,
}

impl CutCurve {
    pub fn angle(&self) -> f64 {
        self.direction.angle()
    }

    /// Distance from `z` to the ray.
    pub fn distance(&self, z: Complex64) -> f64 {
        let u = self.direction.unit();
        let s = (z * u.conj()).re;
        let k = self.base.norm();
        if s >= k {
            (z - u * s).norm()
        } else {
            (z - self.base).norm()
        }
    }
}

/// A logarithmic coordinate `ζ` (so `z = e^ζ`) with its fundamental strip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPoint {
    pub zeta: Complex64,
    pub strip: i64,
}

const SAMPLE_COUNT: usize = 200;
const SAMPLE_LIMIT: f64 = 1e10;

/// Picks the first axis ray, in the order −x, +iy, −iy, +x, along which
/// `|f| ≤ K` holds at 200 geometrically spaced samples out to `|z| = 10¹⁰`
/// and beyond (by a per-family asymptotic bound).
pub fn choose_cut_curve(map: &EntireMap) -> Result<CutCurve> {
    let k = map.bound_k();
    Direction::SEARCH_ORDER
        .into_iter()
        .find(|&dir| {
            let ratio = (SAMPLE_LIMIT / k).powf(1.0 / (SAMPLE_COUNT - 1) as f64);
            let samples_ok = (0..SAMPLE_COUNT).all(|i| {
                let z = dir.unit() * (k * ratio.powi(i as i32));
                map.eval_raw(z).norm() <= k
            });
            samples_ok && asymptotically_outside_tracts(map, dir, k)
        })
        .map(|direction| CutCurve { direction, base: direction.unit() * k })
        .ok_or(Error::NoCutRay)
}

/// Whether `|f| ≤ K` persists along the ray beyond the sampled range.
/// On each axis the built-in families either tend to a limit, are
/// periodic with a known sup, or blow up.
fn asymptotically_outside_tracts(map: &EntireMap, dir: Direction, k: f64) -> bool {
    use crate::maps::MapKind::*;
    use Direction::*;
    match (*map.kind(), dir) {
        (ExpShift { kappa }, NegReal) => kappa.norm() < k,
        (ExpShift { kappa }, PosImag | NegImag) => 1.0 + kappa.norm() <= k,
        (ExpAffine { lambda }, NegReal) => lambda.norm() < k,
        (ExpAffine { lambda }, PosImag | NegImag) => 2.0 * lambda.norm() <= k,
        (Sine { lambda }, NegReal | PosReal) => lambda.norm() <= k,
        (Cosine { a, b }, PosImag | NegImag) => a.norm() + b.norm() <= k,
        (ZExp, NegReal) => true,
        (PetalExp, NegReal) => 0.25 < k,
        _ => false,
    }
}

/// Everything derived once from a map: `K`, the cut ray and the base
/// points. Immutable, cheap to share across threads.
#[derive(Clone, Debug)]
pub struct TractGeometry {
    map: EntireMap,
    k: f64,
    log_k: f64,
    cut: CutCurve,
    base_re: f64,
}

impl TractGeometry {
    pub fn new(map: EntireMap) -> Result<Self> {
        let cut = choose_cut_curve(&map)?;
        let k = map.bound_k();
        Ok(Self { map, k, log_k: k.ln(), cut, base_re: base_real_part(k) })
    }

    pub fn map(&self) -> &EntireMap {
        &self.map
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn log_k(&self) -> f64 {
        self.log_k
    }

    pub fn cut(&self) -> &CutCurve {
        &self.cut
    }

    fn theta(&self) -> f64 {
        self.cut.angle()
    }

    fn two_tracts(&self) -> bool {
        self.map.family().tract_count() == 2
    }

    /// Strip of the lifted cut containing `Im ζ = y`. Strip `s` is
    /// `θ + 2π(s−1) ≤ y < θ + 2πs`.
    pub fn strip_of(&self, y: f64) -> i64 {
        (((y - self.theta()) / TAU).floor() as i64).saturating_add(1)
    }

    /// Offset of `y` from the centre of its strip, in `[−π, π)`.
    fn strip_offset(&self, y: f64) -> f64 {
        wrap_tau(y - self.theta()) - PI
    }

    /// Imaginary part of the centre of strip `s`.
    pub fn strip_center(&self, strip: i64) -> f64 {
        self.theta() - PI + TAU * strip as f64
    }

    /// Moves `Im w` into strip `s` by a multiple of `2π`.
    pub fn place_in_strip(&self, w: Complex64, strip: i64) -> Complex64 {
        Complex64::new(w.re, self.strip_center(strip) + self.strip_offset(w.im))
    }

    pub fn log_point(&self, zeta: Complex64) -> LogPoint {
        LogPoint { zeta, strip: self.strip_of(zeta.im) }
    }

    /// Base point `ζ₀` of strip `s`: real part `16π + log K + 1`, centred
    /// vertically in the strip.
    pub fn base_point(&self, strip: i64) -> Complex64 {
        Complex64::new(self.base_re, self.strip_center(strip))
    }

    /// Splits a flattened domain label into (tract, strip).
    pub fn split_domain(&self, domain: i64) -> (TractTag, i64) {
        if self.two_tracts() {
            (domain.rem_euclid(2) as TractTag, domain.div_euclid(2))
        } else {
            (0, domain)
        }
    }

    pub fn join_domain(&self, tract: TractTag, strip: i64) -> i64 {
        if self.two_tracts() {
            strip.saturating_mul(2).saturating_add(tract as i64)
        } else {
            strip
        }
    }

    /// `|f(z)| > K`.
    pub fn in_tract(&self, z: Complex64) -> bool {
        let fz = self.map.eval_raw(z);
        if is_finite(fz) {
            fz.norm() > self.k
        } else {
            lift::log_image(&self.map, z).1.re > self.log_k
        }
    }

    /// `in_tract` for a point given by its logarithm.
    pub fn in_tract_log(&self, p: &LogPoint) -> Result<bool> {
        Ok(self.in_tract(self.exp_of(p)?))
    }

    /// `e^ζ`, reducing `Im ζ` to its strip first. Fails once the modulus
    /// leaves `f64` range.
    pub fn exp_of(&self, p: &LogPoint) -> Result<Complex64> {
        let reduced = Complex64::new(p.zeta.re, p.zeta.im - TAU * self.strip_of(p.zeta.im) as f64);
        let z = reduced.exp();
        if is_finite(z) {
            Ok(z)
        } else {
            Err(Error::Indeterminate)
        }
    }

    /// The lift `Φ` evaluated at `z` directly: a logarithm of `f(z)` whose
    /// imaginary part lies in the strip of `z`'s fundamental domain.
    /// Fails with [`Error::NotInTract`] off the tracts.
    pub fn phi_at(&self, z: Complex64) -> Result<(TractTag, LogPoint)> {
        let (tag, w) = lift::log_image(&self.map, z);
        if !is_finite(w) {
            return Err(Error::Indeterminate);
        }
        if w.re <= self.log_k {
            return Err(Error::NotInTract);
        }
        Ok((tag, self.log_point(w)))
    }

    /// `Φ(ζ)` for a logarithmic point.
    pub fn phi(&self, p: &LogPoint) -> Result<LogPoint> {
        let z = self.exp_of(p)?;
        self.phi_at(z).map(|(_, q)| q)
    }

    /// `Φ′(ζ) = e^ζ f′(e^ζ) / f(e^ζ)`, in closed form.
    pub fn phi_derivative(&self, p: &LogPoint) -> Result<Complex64> {
        let z = self.exp_of(p)?;
        Ok(z * lift::log_derivative(&self.map, z))
    }

    /// Label of the fundamental domain containing `z`.
    pub fn domain_index(&self, z: Complex64) -> Result<i64> {
        let (tag, w) = match self.phi_at(z) {
            Ok(v) => v,
            Err(Error::NotInTract) => return Err(Error::NotInDomain(z)),
            Err(e) => return Err(e),
        };
        // f(z) on γ: the angular offset from the cut, scaled by |f(z)|.
        let edge = wrap_tau(w.zeta.im - self.theta());
        let ang = edge.min(TAU - edge);
        if ang * w.zeta.re.exp() <= ON_CUT_TOL {
            return Err(Error::NotInDomain(z));
        }
        Ok(self.join_domain(tag, w.strip))
    }

    pub fn domain_index_log(&self, p: &LogPoint) -> Result<i64> {
        self.domain_index(self.exp_of(p)?)
    }

    /// `r(z) = |ζ − ζ₀|` for `z` in `G_K` off the cut.
    pub fn size_r(&self, z: Complex64) -> Result<f64> {
        if z.norm() <= self.k || self.cut.distance(z) <= ON_CUT_TOL {
            return Err(Error::OutsideDomain(z));
        }
        Ok(self.size_r_log(&self.log_point(z.ln())))
    }

    /// `r̃(ζ)`. Valid whenever `Re ζ > log K`; no cut test is made since a
    /// logarithmic point is only ever produced far from `γ`.
    pub fn size_r_log(&self, p: &LogPoint) -> f64 {
        (p.zeta.re - self.base_re).hypot(self.strip_offset(p.zeta.im))
    }

    /// `r(z)` from `log|z|` and a principal argument, for hot loops. Returns
    /// `None` when `z` may lie within the cut tolerance of `γ`, in which
    /// case [`TractGeometry::size_r`] decides.
    #[inline]
    pub fn size_r_polar(&self, log_modulus: f64, arg: f64) -> Option<f64> {
        let mut x = arg - self.theta();
        while x < 0.0 {
            x += TAU;
        }
        while x >= TAU {
            x -= TAU;
        }
        let offset = x - PI;
        (PI - offset.abs() > 1e-6).then(|| (log_modulus - self.base_re).hypot(offset))
    }

    /// Inverse branch of `f` into domain `domain`: the point `z` with
    /// `Φ(z) = w` once `w` is moved into that domain's strip. `w` is a
    /// logarithm of the target value.
    pub fn pullback_log(&self, domain: i64, w: Complex64) -> Result<Complex64> {
        let (tract, strip) = self.split_domain(domain);
        lift::preimage(&self.map, tract, self.place_in_strip(w, strip))
    }

    /// Inverse branch applied to a target value `u` (any nonzero complex).
    pub fn pullback(&self, domain: i64, u: Complex64) -> Result<Complex64> {
        self.pullback_log(domain, u.ln())
    }
}
