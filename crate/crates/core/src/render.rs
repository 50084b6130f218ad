//! Escape-time pictures and PPM output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::cmath::cexp;
use crate::logdyn::TractGeometry;
use crate::maps::MapKind;
use crate::orbit::{step, BigPoint, DIRECT_LIMIT, DOUBLING_STREAK};

/// A rectangle of the plane sampled at square pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viewport {
    pub center: Complex64,
    pub width: f64,
    pub pixels_x: usize,
    pub pixels_y: usize,
}

impl Viewport {
    /// Height is `width · pixels_y / pixels_x`.
    pub fn new(center: Complex64, width: f64, pixels_x: usize, pixels_y: usize) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) || pixels_x == 0 || pixels_y == 0 {
            return Err(Error::InvalidParameter("viewport needs positive width and pixel counts".into()));
        }
        Ok(Self { center, width, pixels_x, pixels_y })
    }

    pub fn square(center: Complex64, width: f64, pixels: usize) -> Result<Self> {
        Self::new(center, width, pixels, pixels)
    }

    pub fn pixel_size(&self) -> f64 {
        self.width / self.pixels_x as f64
    }

    pub fn height(&self) -> f64 {
        self.pixel_size() * self.pixels_y as f64
    }

    fn left(&self) -> f64 {
        self.center.re - 0.5 * self.width
    }

    fn top(&self) -> f64 {
        self.center.im + 0.5 * self.height()
    }

    /// Centre of pixel `(i, j)`, column `i` from the left, row `j` from the top.
    pub fn pixel_center(&self, i: usize, j: usize) -> Complex64 {
        let s = self.pixel_size();
        Complex64::new(self.left() + s * (i as f64 + 0.5), self.top() - s * (j as f64 + 0.5))
    }

    /// Pixel whose centre is nearest to `z`, ties going to the lower index.
    pub fn nearest_pixel(&self, z: Complex64) -> Option<(usize, usize)> {
        let s = self.pixel_size();
        let u = (z.re - self.left()) / s;
        let v = (self.top() - z.im) / s;
        let index = |u: f64, n: usize| {
            (0.0..=n as f64).contains(&u).then(|| ((u.ceil() - 1.0).max(0.0) as usize).min(n - 1))
        };
        Some((index(u, self.pixels_x)?, index(v, self.pixels_y)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Escape detected after this many steps.
    Escaping(usize),
    NonEscaping,
}

/// Parameters of the per-pixel escape test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EscapeRule {
    /// Doubling of `r` is only counted while `|z|` is at least this;
    /// `None` means `K + 1`.
    pub radius: Option<f64>,
    pub streak: usize,
}

impl Default for EscapeRule {
    fn default() -> Self {
        Self { radius: None, streak: DOUBLING_STREAK }
    }
}

/// Escape test for a single point: `r` must double `rule.streak` times in
/// a row with `|z| ≥ R`, or the orbit must overflow. Anything else within
/// `n_max` steps is non-escaping.
pub fn escape_verdict(geom: &TractGeometry, z: Complex64, n_max: usize, rule: &EscapeRule) -> Verdict {
    escape_row(geom, &[z], n_max, rule)[0]
}

/// [`escape_verdict`] for each point of `zs`.
pub fn escape_row(geom: &TractGeometry, zs: &[Complex64], n_max: usize, rule: &EscapeRule) -> Vec<Verdict> {
    // One monomorphic loop per family keeps the dispatch out of the hot path.
    match *geom.map().kind() {
        MapKind::ExpAffine { lambda } => row_loop(geom, zs, n_max, rule, |z| lambda * (cexp(z) - 1.0)),
        MapKind::ExpShift { kappa } => row_loop(geom, zs, n_max, rule, |z| cexp(z) + kappa),
        _ => row_loop(geom, zs, n_max, rule, |z| geom.map().eval_raw(z)),
    }
}

fn row_loop(
    geom: &TractGeometry,
    zs: &[Complex64],
    n_max: usize,
    rule: &EscapeRule,
    eval: impl Fn(Complex64) -> Complex64 + Copy,
) -> Vec<Verdict> {
    zs.iter().map(|&z| escape_loop(geom, z, n_max, rule, eval)).collect()
}

fn escape_loop(
    geom: &TractGeometry,
    z: Complex64,
    n_max: usize,
    rule: &EscapeRule,
    eval: impl Fn(Complex64) -> Complex64,
) -> Verdict {
    let radius = rule.radius.unwrap_or(geom.k() + 1.0);
    let (r2, direct2) = (radius * radius, DIRECT_LIMIT * DIRECT_LIMIT);
    let mut tracker = Streak { prev: None, count: 0, needed: rule.streak };
    let mut z = z;
    for n in 0..n_max {
        let m2 = z.norm_sqr();
        if m2 >= r2 {
            let r = geom.size_r_polar(0.5 * m2.ln(), z.arg()).or_else(|| geom.size_r(z).ok());
            if tracker.push(r) {
                return Verdict::Escaping(n);
            }
        } else {
            tracker.reset();
        }
        let w = eval(z);
        if w.norm_sqr() <= direct2 {
            z = w;
            continue;
        }
        let Ok(mut p) = step(geom, &BigPoint::Direct(z)) else {
            return Verdict::Escaping(n + 1);
        };
        for n in n + 1..n_max {
            let r = if p.log_modulus() >= radius.ln() { p.size_r(geom).ok() } else { None };
            if tracker.push(r) {
                return Verdict::Escaping(n);
            }
            p = match step(geom, &p) {
                Ok(q) => q,
                Err(_) => return Verdict::Escaping(n + 1),
            };
        }
        return Verdict::NonEscaping;
    }
    Verdict::NonEscaping
}

struct Streak {
    prev: Option<f64>,
    count: usize,
    needed: usize,
}

impl Streak {
    fn push(&mut self, r: Option<f64>) -> bool {
        match (self.prev, r) {
            (Some(a), Some(b)) if b >= 2.0 * a => self.count += 1,
            _ => self.count = 0,
        }
        self.prev = r;
        self.count >= self.needed
    }

    #[inline]
    fn reset(&mut self) {
        self.prev = None;
        self.count = 0;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifiedImage {
    pub viewport: Viewport,
    pub n_max: usize,
    /// Row-major from the top-left pixel.
    pub verdicts: Vec<Verdict>,
    pub overlay: Vec<bool>,
}

impl ClassifiedImage {
    pub fn verdict(&self, i: usize, j: usize) -> Verdict {
        self.verdicts[j * self.viewport.pixels_x + i]
    }

    pub fn is_marked(&self, i: usize, j: usize) -> bool {
        self.overlay[j * self.viewport.pixels_x + i]
    }

    pub fn mark(&mut self, i: usize, j: usize) {
        self.overlay[j * self.viewport.pixels_x + i] = true;
    }

    pub fn verdict_at(&self, z: Complex64) -> Option<Verdict> {
        self.viewport.nearest_pixel(z).map(|(i, j)| self.verdict(i, j))
    }
}

/// Classifies every pixel centre of `vp`. Rows are independent, so the
/// result does not depend on `exec`.
pub fn render(geom: &TractGeometry, vp: Viewport, n_max: usize, rule: &EscapeRule, exec: Exec) -> ClassifiedImage {
    let rows = exec.map(vp.pixels_y, |j| {
        let zs: Vec<Complex64> = (0..vp.pixels_x).map(|i| vp.pixel_center(i, j)).collect();
        escape_row(geom, &zs, n_max, rule)
    });
    ClassifiedImage {
        viewport: vp,
        n_max,
        verdicts: rows.concat(),
        overlay: vec![false; vp.pixels_x * vp.pixels_y],
    }
}

/// Marks the pixels hit by the first `n_orbit` points (the singular value
/// itself included) of each singular orbit.
pub fn overlay_singular_orbit(geom: &TractGeometry, mut img: ClassifiedImage, n_orbit: usize) -> ClassifiedImage {
    for s in geom.map().singular_values().points() {
        let mut z = s;
        for _ in 0..n_orbit {
            if let Some((i, j)) = img.viewport.nearest_pixel(z) {
                img.mark(i, j);
            }
            match geom.map().evaluate(z) {
                Ok(w) => z = w,
                Err(_) => break,
            }
        }
    }
    img
}

/// Binary PPM: `P6`, dimensions, `255`, then RGB rows from the top.
/// Overlay is black, non-escaping white, and escape after `n` steps the
/// gray `⌊255·min(1, n/n_max)⌋`.
pub fn encode_ppm(img: &ClassifiedImage) -> Vec<u8> {
    let vp = &img.viewport;
    let mut out = format!("P6\n{} {}\n255\n", vp.pixels_x, vp.pixels_y).into_bytes();
    out.reserve(3 * img.verdicts.len());
    for (v, &marked) in img.verdicts.iter().zip(&img.overlay) {
        let g = match (marked, v) {
            (true, _) => 0,
            (false, Verdict::NonEscaping) => 255,
            (false, Verdict::Escaping(n)) => (255.0 * (*n as f64 / img.n_max as f64).min(1.0)).floor() as u8,
        };
        out.extend_from_slice(&[g, g, g]);
    }
    out
}

pub fn write_ppm(img: &ClassifiedImage, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&encode_ppm(img))?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::EntireMap;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn image(verdicts: Vec<Verdict>, overlay: Vec<bool>, n_max: usize) -> ClassifiedImage {
        let vp = Viewport::new(c(0.0, 0.0), verdicts.len() as f64, verdicts.len(), 1).unwrap();
        ClassifiedImage { viewport: vp, n_max, verdicts, overlay }
    }

    #[test]
    fn ppm_bytes() {
        let img = image(vec![Verdict::NonEscaping], vec![false], 10);
        assert_eq!(encode_ppm(&img), b"P6\n1 1\n255\n\xff\xff\xff");
        let img = image(vec![Verdict::NonEscaping], vec![true], 10);
        assert_eq!(encode_ppm(&img), b"P6\n1 1\n255\n\x00\x00\x00");
        let img = image(vec![Verdict::Escaping(10), Verdict::NonEscaping], vec![false; 2], 10);
        assert_eq!(encode_ppm(&img), b"P6\n2 1\n255\n\xff\xff\xff\xff\xff\xff");
        let img = image(vec![Verdict::Escaping(3)], vec![false], 10);
        assert_eq!(&encode_ppm(&img)[11..], &[76, 76, 76]);
    }

    #[test]
    fn pixel_geometry() {
        let vp = Viewport::square(c(0.0, 0.0), 4.0, 4).unwrap();
        assert_eq!(vp.pixel_center(0, 0), c(-1.5, 1.5));
        assert_eq!(vp.pixel_center(3, 3), c(1.5, -1.5));
        assert_eq!(vp.nearest_pixel(c(-1.4, 1.6)), Some((0, 0)));
        // On the boundary between two centres: lower index.
        assert_eq!(vp.nearest_pixel(c(0.0, 0.0)), Some((1, 1)));
        assert_eq!(vp.nearest_pixel(c(-2.0, 2.0)), Some((0, 0)));
        assert_eq!(vp.nearest_pixel(c(2.0, -2.0)), Some((3, 3)));
        assert_eq!(vp.nearest_pixel(c(2.1, 0.0)), None);
        assert!(Viewport::square(c(0.0, 0.0), 0.0, 4).is_err());
    }

    #[test]
    fn nearest_pixel_recovers_every_centre() {
        let vp = Viewport::new(c(0.3, -0.2), 3.0, 7, 5).unwrap();
        for j in 0..5 {
            for i in 0..7 {
                assert_eq!(vp.nearest_pixel(vp.pixel_center(i, j)), Some((i, j)));
            }
        }
    }

    #[test]
    fn render_is_exec_independent() {
        let g = TractGeometry::new(EntireMap::golden_exp_affine()).unwrap();
        let vp = Viewport::square(c(0.0, 0.0), 8.0, 24).unwrap();
        let rule = EscapeRule::default();
        let a = render(&g, vp, 200, &rule, Exec::Sequential);
        let b = render(&g, vp, 200, &rule, Exec::default());
        assert_eq!(encode_ppm(&a), encode_ppm(&b));
        assert_eq!(a.verdict_at(c(0.0, 0.0)), Some(Verdict::NonEscaping));
    }

    #[test]
    fn overlay_marks_singular_values() {
        let g = TractGeometry::new(EntireMap::golden_exp_affine()).unwrap();
        let vp = Viewport::square(c(0.0, 0.0), 8.0, 16).unwrap();
        let img = render(&g, vp, 10, &EscapeRule::default(), Exec::default());
        let img = overlay_singular_orbit(&g, img, 1);
        let (i, j) = vp.nearest_pixel(-g.map().params()[0]).unwrap();
        assert!(img.is_marked(i, j));
        assert_eq!(img.overlay.iter().filter(|&&m| m).count(), 1);

        let far = Viewport::square(c(100.0, 100.0), 1.0, 8).unwrap();
        let img = render(&g, far, 5, &EscapeRule::default(), Exec::default());
        let img = overlay_singular_orbit(&g, img, 1000);
        assert!(img.overlay.iter().all(|&m| !m));
    }
}
