//! Numerical audits of the expansion estimate for `Φ` and of the doubling
//! of `r` inside a fundamental domain.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{lift, TractGeometry, ON_CUT_TOL};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::maps::{format_real, EntireMap};

/// Relative slack allowed before an expansion sample counts as a violation.
pub const EXPANSION_SLACK: f64 = 1e-12;
/// Width of the sampling rectangle in `Re ζ`, starting at `log K`.
const EXPANSION_DEPTH: f64 = 6.0;
const MAX_ATTEMPTS: usize = 10_000;

/// Grid factor and per-candidate sample count for [`TractGeometry::find_cf`].
pub const CF_GRID_FACTOR: f64 = 1.1;
pub const CF_SAMPLES: usize = 500;

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionReport {
    pub samples: usize,
    pub violations: usize,
    /// Smallest `(|Φ′| − bound) / bound` seen, where
    /// `bound = (Re Φ − log K) / 4π`.
    pub min_margin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoublingSample {
    pub z: Complex64,
    pub r: f64,
    pub r_image: f64,
}

impl DoublingSample {
    pub fn doubles(&self) -> bool {
        self.r_image >= 2.0 * self.r
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoublingAudit {
    pub requested: usize,
    pub samples: Vec<DoublingSample>,
}

impl DoublingAudit {
    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|s| !s.doubles()).count()
    }

    /// All requested samples were found and every one doubles.
    pub fn passed(&self) -> bool {
        self.samples.len() == self.requested && self.failures() == 0
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl TractGeometry {
    /// Checks `|Φ′(ζ)| ≥ (Re Φ(ζ) − log K)/4π` at `sample_count` points
    /// drawn uniformly from `{log K < Re ζ < log K + 6, |Im ζ| < π}` and
    /// kept when `e^ζ` lies in a tract. `Φ′` is evaluated by the chain
    /// rule, never by differencing.
    pub fn verify_expansion(&self, sample_count: usize, seed: u64, exec: Exec) -> ExpansionReport {
        let log_k = self.log_k();
        let margins = exec.map(sample_count, |i| {
            let mut rng = rng_for(seed, i as u64);
            for _ in 0..MAX_ATTEMPTS {
                let zeta = Complex64::new(
                    log_k + EXPANSION_DEPTH * rng.gen::<f64>(),
                    -PI + TAU * rng.gen::<f64>(),
                );
                let z = zeta.exp();
                let Ok((_, image)) = self.phi_at(z) else { continue };
                let bound = (image.zeta.re - log_k) / (4.0 * PI);
                let deriv = (z * lift::log_derivative(self.map(), z)).norm();
                return Some((deriv - bound) / bound);
            }
            None
        });
        let found: Vec<f64> = margins.into_iter().flatten().collect();
        ExpansionReport {
            samples: found.len(),
            violations: found.iter().filter(|&&m| m < -EXPANSION_SLACK).count(),
            min_margin: found.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    /// Samples points `z` of fundamental domain `domain` with
    /// `c_min ≤ r(z) ≤ r_max` and records `r(z)` and `r(f(z))`.
    ///
    /// Points are generated by pulling back `w = log K + e^σ + iv` through
    /// the domain's inverse branch, with `σ` uniform on
    /// `[−8, Re ζ₀ + r_max + 2]` and `v` uniform across the strip; this
    /// reaches both the thin part of the domain near the tract boundary and
    /// its far end.
    pub fn audit_doubling(
        &self,
        domain: i64,
        c_min: f64,
        r_max: f64,
        samples: usize,
        seed: u64,
        exec: Exec,
    ) -> DoublingAudit {
        let (_, strip) = self.split_domain(domain);
        let sigma_hi = self.base_point(0).re + r_max + 2.0;
        let found = exec.map(samples, |i| {
            let mut rng = rng_for(seed, i as u64);
            for _ in 0..MAX_ATTEMPTS {
                let sigma = rng.gen_range(-8.0..sigma_hi);
                let w = Complex64::new(
                    self.log_k() + sigma.exp(),
                    self.strip_center(strip) + rng.gen_range(-PI..PI),
                );
                let Ok(z) = self.pullback_log(domain, w) else { continue };
                if z.norm() <= self.k() || self.cut().distance(z) <= ON_CUT_TOL {
                    continue;
                }
                let Ok(r) = self.size_r(z) else { continue };
                if r < c_min || r > r_max {
                    continue;
                }
                let Ok((_, image)) = self.phi_at(z) else { continue };
                return Some(DoublingSample { z, r, r_image: self.size_r_log(&image) });
            }
            None
        });
        DoublingAudit { requested: samples, samples: found.into_iter().flatten().collect() }
    }

    /// Smallest `C` on the grid `1.1ᵏ < r_max` such that 500 sampled points
    /// of the domain with `r ∈ [C, r_max]` all satisfy `r(f(z)) ≥ 2r(z)`.
    pub fn find_cf(&self, domain: i64, r_max: f64, seed: u64, exec: Exec) -> Result<f64> {
        let mut k = 0;
        loop {
            let c = CF_GRID_FACTOR.powi(k);
            if c >= r_max {
                return Err(Error::NoThreshold { r_max });
            }
            let stream_seed = seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            if self.audit_doubling(domain, c, r_max, CF_SAMPLES, stream_seed, exec).passed() {
                return Ok(c);
            }
            k += 1;
        }
    }
}

pub const EXPANSION_CSV_HEADER: &str = "family,params,samples,violations,min_margin";
pub const CF_CSV_HEADER: &str = "family,domain,C_F";

/// Parameters as `re±imi`, joined by `;`.
pub fn format_params(map: &EntireMap) -> String {
    map.params().iter().map(|z| format!("{}{}{}i", format_real(z.re), if z.im.is_sign_negative() { "-" } else { "+" }, format_real(z.im.abs()))).collect::<Vec<_>>().join(";")
}

pub fn expansion_csv_row(map: &EntireMap, rep: &ExpansionReport) -> String {
    format!(
        "{},{},{},{},{}",
        map.family(),
        format_params(map),
        rep.samples,
        rep.violations,
        format_real(rep.min_margin)
    )
}

pub fn cf_csv_row(map: &EntireMap, domain: i64, c_f: f64) -> String {
    format!("{},{},{}", map.family(), domain, format_real(c_f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expansion_holds_for_exp_affine_identity_scale() {
        let g = TractGeometry::new(EntireMap::exp_affine(c(1.0, 0.0)).unwrap()).unwrap();
        let rep = g.verify_expansion(2000, 3, Exec::default());
        assert_eq!(rep.samples, 2000);
        assert_eq!(rep.violations, 0);
        assert!(rep.min_margin > 0.0);
    }

    #[test]
    fn expansion_holds_for_other_families() {
        for f in [
            EntireMap::z_exp(),
            EntireMap::petal_exp(),
            EntireMap::sine(c(2.0, 0.5)).unwrap(),
            EntireMap::cosine(c(0.5, 0.2), c(-1.5, 0.1)).unwrap(),
        ] {
            let g = TractGeometry::new(f).unwrap();
            let rep = g.verify_expansion(2000, 11, Exec::default());
            assert_eq!(rep.samples, 2000, "{f}");
            assert_eq!(rep.violations, 0, "{f}");
        }
    }

    #[test]
    fn doubling_audit_samples_respect_bounds() {
        let g = TractGeometry::new(EntireMap::exp_shift(c(-2.0, 0.0)).unwrap()).unwrap();
        let audit = g.audit_doubling(0, 10.0, 200.0, 300, 5, Exec::default());
        assert_eq!(audit.samples.len(), 300);
        for s in &audit.samples {
            assert!(s.r >= 10.0 && s.r <= 200.0);
            assert_eq!(g.domain_index(s.z).unwrap(), 0);
        }
        // Small points near the tract boundary have r ≈ 51 and do not double.
        assert!(audit.failures() > 0);
    }

    #[test]
    fn csv_rows() {
        let f = EntireMap::exp_shift(c(-2.0, 0.0)).unwrap();
        let rep = ExpansionReport { samples: 10, violations: 0, min_margin: 0.5 };
        assert_eq!(expansion_csv_row(&f, &rep), "expshift,-2+0i,10,0,0.5");
        let g = EntireMap::cosine(c(1.0, 0.0), c(1.0, -0.5)).unwrap();
        assert_eq!(format_params(&g), "1+0i;1-0.5i");
        assert_eq!(cf_csv_row(&f, 0, 54.75), "expshift,0,54.75");
    }

    #[test]
    fn find_cf_no_threshold_when_r_max_too_small() {
        let g = TractGeometry::new(EntireMap::exp_shift(c(-2.0, 0.0)).unwrap()).unwrap();
        assert!(matches!(
            g.find_cf(0, 1.0, 1, Exec::default()),
            Err(Error::NoThreshold { .. })
        ));
    }

    #[test]
    fn find_cf_exp_shift_threshold_sits_past_the_tract_boundary() {
        let g = TractGeometry::new(EntireMap::exp_shift(c(-2.0, 0.0)).unwrap()).unwrap();
        let cf = g.find_cf(0, 200.0, 7, Exec::default()).unwrap();
        // Near the tract boundary r ≈ Re ζ₀ − log K ≈ 51.3 and f barely moves r.
        assert!(cf > 40.0 && cf <= 120.0, "{cf}");
    }
}
