//! Lamperti transform, Bessel index algebra and first-passage densities.
//!
//! Above the threshold `h_x` the transformed variable `y = lamperti(x)` is a
//! Bessel process below `h_y = lamperti(h_x)`, so burst durations are its
//! first-passage times to `h_y`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::bessel::{j_unchecked, zero_table};
use crate::error::{domain, invalid, Error, Result};

/// Default cap on the number of series terms.
pub const DEFAULT_K_TERMS: usize = 10_000;

/// Terms whose exponential factor falls below `exp(-46)` of the leading one
/// are dropped.
pub const TRUNCATION_EXPONENT: f64 = 46.0;

pub fn lamperti(x: f64, eta: f64) -> Result<f64> {
    if !(eta > 1.0) {
        return Err(Error::UnsupportedTransform(eta));
    }
    if !(x > 0.0) {
        return domain(format!("Lamperti transform needs x > 0 (got {x})"));
    }
    Ok(1.0 / ((eta - 1.0) * x.powf(eta - 1.0)))
}

pub fn lamperti_inverse(y: f64, eta: f64) -> Result<f64> {
    if !(eta > 1.0) {
        return Err(Error::UnsupportedTransform(eta));
    }
    if !(y > 0.0) {
        return domain(format!("inverse Lamperti transform needs y > 0 (got {y})"));
    }
    Ok(((eta - 1.0) * y).powf(-1.0 / (eta - 1.0)))
}

/// Index `nu` and dimension `n_dim = 2(nu + 1)` of a Bessel process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselIndex {
    pub nu: f64,
    pub n_dim: f64,
}

impl BesselIndex {
    pub fn from_nu(nu: f64) -> Self {
        Self { nu, n_dim: 2.0 * (nu + 1.0) }
    }
}

pub fn index_from(eta: f64, lambda: f64) -> Result<BesselIndex> {
    if !(eta > 1.0) {
        return Err(Error::UnsupportedTransform(eta));
    }
    Ok(BesselIndex::from_nu((lambda - 2.0 * eta + 1.0) / (2.0 * (eta - 1.0))))
}

pub fn crossover_time(nu: f64, h_y: f64) -> Result<f64> {
    if !(h_y > 0.0) {
        return domain(format!("threshold h_y must be positive (got {h_y})"));
    }
    let j1 = zero_table(nu, 1)?[0];
    Ok(2.0 * h_y * h_y / (j1 * j1))
}

/// First-passage time density of a Bessel process of index `nu` from `y0`
/// up to `h_y`.
pub fn fpt_density(nu: f64, y0: f64, h_y: f64, t: f64) -> Result<f64> {
    if !(h_y > 0.0) || !(y0 > 0.0) || y0 >= h_y {
        return domain(format!("need 0 < y0 < h_y (got y0={y0}, h_y={h_y})"));
    }
    if !(t > 0.0) {
        return domain(format!("time must be positive (got {t})"));
    }
    let scale = t / (2.0 * h_y * h_y);
    let r = y0 / h_y;
    let j1 = zero_table(nu, 1)?[0];
    let mut sum = 0.0;
    let mut k = 0;
    let mut table = zero_table(nu, 64)?;
    while k < DEFAULT_K_TERMS {
        if k == table.len() {
            table = zero_table(nu, (2 * k).min(DEFAULT_K_TERMS))?;
        }
        let j = table[k];
        if k > 0 && (j * j - j1 * j1) * scale > TRUNCATION_EXPONENT {
            break;
        }
        sum += j * j_unchecked(nu, r * j) / j_unchecked(nu + 1.0, j) * (-j * j * scale).exp();
        k += 1;
    }
    Ok(h_y.powf(nu - 2.0) / y0.powf(nu) * sum)
}

/// Parameters of the burst-duration densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FptSpec {
    pub nu: f64,
    pub h_y: f64,
    pub t_min: f64,
    pub k_terms: usize,
}

impl FptSpec {
    pub fn new(nu: f64, h_y: f64, t_min: f64) -> Self {
        Self { nu, h_y, t_min, k_terms: DEFAULT_K_TERMS }
    }

    /// Spec for a simple SDE with threshold `h_x`.
    pub fn from_model(eta: f64, lambda: f64, h_x: f64, t_min: f64) -> Result<Self> {
        let idx = index_from(eta, lambda)?;
        Ok(Self::new(idx.nu, lamperti(h_x, eta)?, t_min))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h_y > 0.0) {
            return invalid(format!("h_y must be positive (got {})", self.h_y));
        }
        if !(self.t_min > 0.0) {
            return invalid(format!("t_min must be positive (got {})", self.t_min));
        }
        if self.k_terms == 0 {
            return invalid("k_terms must be at least 1");
        }
        if !(0.0..=crate::bessel::MAX_ORDER - 1.0).contains(&self.nu) {
            return domain(format!("index {} outside the supported range", self.nu));
        }
        Ok(())
    }

    pub fn crossover_time(&self) -> Result<f64> {
        crossover_time(self.nu, self.h_y)
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(t >= self.t_min) {
            return domain(format!("t = {t} is below t_min = {}; the density is undefined there", self.t_min));
        }
        Ok(())
    }
}

/// Infinite-series burst-duration density normalized on `[t_min, inf)`.
#[derive(Debug, Clone)]
pub struct SeriesPdf {
    spec: FptSpec,
    zeros: Vec<f64>,
    // Sums are carried relative to exp(-j1^2 t_min / 2h^2) to avoid underflow.
    rel_norm: f64,
}

impl SeriesPdf {
    pub fn new(spec: FptSpec) -> Result<Self> {
        spec.validate()?;
        let a = spec.t_min / (2.0 * spec.h_y * spec.h_y);
        let mut zeros = Vec::new();
        let mut table = zero_table(spec.nu, 64.min(spec.k_terms))?;
        let j1 = table[0];
        while zeros.len() < spec.k_terms {
            let k = zeros.len();
            if k == table.len() {
                table = zero_table(spec.nu, (2 * k).min(spec.k_terms))?;
            }
            let j = table[k];
            if k > 0 && (j * j - j1 * j1) * a > TRUNCATION_EXPONENT {
                break;
            }
            zeros.push(j);
        }
        let two_h2 = 2.0 * spec.h_y * spec.h_y;
        let rel_norm = zeros.iter().map(|j| two_h2 * (-(j * j - j1 * j1) * a).exp()).sum();
        Ok(Self { spec, zeros, rel_norm })
    }

    pub fn spec(&self) -> &FptSpec {
        &self.spec
    }

    pub fn terms(&self) -> usize {
        self.zeros.len()
    }

    /// `C1` such that `C1 * kernel(t)` integrates to one on `[t_min, inf)`.
    pub fn normalization(&self) -> f64 {
        let j1 = self.zeros[0];
        let a = self.spec.t_min / (2.0 * self.spec.h_y * self.spec.h_y);
        (j1 * j1 * a).exp() / self.rel_norm
    }

    /// Unnormalized sum `sum_k j_k^2 exp(-j_k^2 t / 2h^2)`.
    pub fn kernel(&self, t: f64) -> f64 {
        let s = t / (2.0 * self.spec.h_y * self.spec.h_y);
        self.zeros.iter().map(|j| j * j * (-j * j * s).exp()).sum()
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        self.spec.check_t(t)?;
        let two_h2 = 2.0 * self.spec.h_y * self.spec.h_y;
        let j1 = self.zeros[0];
        let shift = j1 * j1 * self.spec.t_min;
        let sum: f64 = self.zeros.iter().map(|j| j * j * (-(j * j * t - shift) / two_h2).exp()).sum();
        Ok(sum / self.rel_norm)
    }

    /// Probability of a duration exceeding `t`.
    pub fn survival(&self, t: f64) -> Result<f64> {
        self.spec.check_t(t)?;
        let two_h2 = 2.0 * self.spec.h_y * self.spec.h_y;
        let j1 = self.zeros[0];
        let shift = j1 * j1 * self.spec.t_min;
        let sum: f64 = self.zeros.iter().map(|j| two_h2 * (-(j * j * t - shift) / two_h2).exp()).sum();
        Ok(sum / self.rel_norm)
    }
}

/// Integral approximation of the series density, normalized on `[t_min, inf)`.
#[derive(Debug, Clone)]
pub struct ClosedPdf {
    spec: FptSpec,
    j1: f64,
    c2: f64,
}

impl ClosedPdf {
    pub fn new(spec: FptSpec) -> Result<Self> {
        spec.validate()?;
        let j1 = zero_table(spec.nu, 1)?[0];
        let h = spec.h_y;
        // The bracket equals the integral of x^2 exp(-x^2 t / 2h^2) over
        // x > j1, which integrates over t in closed form.
        let norm = (2.0 * PI).sqrt() * h.powi(3) / spec.t_min.sqrt()
            * erfc(j1 * (spec.t_min / 2.0).sqrt() / h);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numerical(format!(
                "normalization of the closed-form density underflows at t_min = {}",
                spec.t_min
            )));
        }
        Ok(Self { spec, j1, c2: 1.0 / norm })
    }

    pub fn spec(&self) -> &FptSpec {
        &self.spec
    }

    pub fn normalization(&self) -> f64 {
        self.c2
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        self.spec.check_t(t)?;
        let h = self.spec.h_y;
        let j1 = self.j1;
        let a = h * h * j1 * (-j1 * j1 * t / (2.0 * h * h)).exp() / t;
        let b = (PI / 2.0).sqrt() * h.powi(3) * erfc(j1 * t.sqrt() / (2.0f64.sqrt() * h)) / t.powf(1.5);
        Ok(self.c2 * (a + b))
    }
}

pub fn burst_pdf_series(spec: &FptSpec, t: f64) -> Result<f64> {
    SeriesPdf::new(*spec)?.density(t)
}

pub fn burst_pdf_closed(spec: &FptSpec, t: f64) -> Result<f64> {
    ClosedPdf::new(*spec)?.density(t)
}

/// First-passage time of a Bessel process of index `nu` from `y0` up to
/// `h_y`, by Euler-Maruyama with step `dt` and reflection at zero. The
/// crossing time is interpolated linearly within the final step.
pub fn sample_bessel_fpt<R: Rng + ?Sized>(nu: f64, y0: f64, h_y: f64, dt: f64, rng: &mut R) -> f64 {
    let drift = nu + 0.5;
    let sdt = dt.sqrt();
    let mut y = y0;
    let mut t = 0.0;
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let yn = (y + drift / y * dt + sdt * z).abs();
        if yn >= h_y {
            return t + dt * (h_y - y) / (yn - y);
        }
        y = yn.max(f64::MIN_POSITIVE);
        t += dt;
    }
}
