//! Power spectral density of variable-step paths.
//!
//! Samples are held constant until the next event (zero-order hold) and read
//! off a uniform grid. Non-overlapping Hann-windowed segments are averaged
//! and `beta` is fitted on log-binned band averages.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::sde::Observer;
use crate::stats::{fit_power_law, LogHistogram, PowerLawFit};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdConfig {
    /// Grid spacing in the path's time unit.
    pub dt: f64,
    /// Segment length; a power of two.
    pub segment: usize,
    /// Fit band `[f_lo, f_hi]`; `None` uses two decades around the geometric
    /// mean of the resolved frequencies.
    pub band: Option<(f64, f64)>,
    pub bins_per_decade: usize,
}

impl PsdConfig {
    pub fn new(dt: f64, segment: usize) -> Self {
        Self { dt, segment, band: None, bins_per_decade: 10 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return invalid(format!("grid spacing must be positive (got {})", self.dt));
        }
        if self.segment < 16 || !self.segment.is_power_of_two() {
            return invalid(format!("segment length must be a power of two >= 16 (got {})", self.segment));
        }
        if let Some((a, b)) = self.band {
            if !(a > 0.0 && b > a) {
                return invalid(format!("fit band must satisfy 0 < lo < hi (got {a}, {b})"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freq: Vec<f64>,
    pub power: Vec<f64>,
    pub segments: usize,
    pub band: (f64, f64),
    pub fit: PowerLawFit,
    /// `beta = -slope` of the fitted power law.
    pub beta: f64,
}

/// Streaming Welch estimator over uniformly spaced values.
pub struct Welch {
    cfg: PsdConfig,
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    window_power: f64,
    buf: Vec<f64>,
    acc: Vec<f64>,
    segments: usize,
}

impl Welch {
    pub fn new(cfg: PsdConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.segment;
        let window: Vec<f64> = (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect();
        let window_power = window.iter().map(|w| w * w).sum::<f64>() / n as f64;
        Ok(Self {
            cfg,
            fft: FftPlanner::new().plan_fft_forward(n),
            window,
            window_power,
            buf: Vec::with_capacity(n),
            acc: vec![0.0; n / 2 + 1],
            segments: 0,
        })
    }

    pub fn push(&mut self, v: f64) {
        self.buf.push(v);
        if self.buf.len() == self.cfg.segment {
            self.flush();
        }
    }

    fn flush(&mut self) {
        let n = self.cfg.segment;
        let mean = self.buf.iter().sum::<f64>() / n as f64;
        let mut data: Vec<Complex<f64>> =
            self.buf.iter().zip(&self.window).map(|(v, w)| Complex::new((v - mean) * w, 0.0)).collect();
        self.fft.process(&mut data);
        let scale = 2.0 * self.cfg.dt / (n as f64 * self.window_power);
        for (a, c) in self.acc.iter_mut().zip(&data) {
            *a += scale * c.norm_sqr();
        }
        self.segments += 1;
        self.buf.clear();
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    /// Adds the completed segments of `other`, e.g. from another
    /// realization. Incomplete trailing segments are not carried over.
    pub fn merge(&mut self, other: &Welch) -> Result<()> {
        if self.cfg != other.cfg {
            return invalid("cannot merge estimators with different configurations");
        }
        for (a, b) in self.acc.iter_mut().zip(&other.acc) {
            *a += b;
        }
        self.segments += other.segments;
        Ok(())
    }

    /// Averages the completed segments and fits the spectral exponent.
    pub fn finish(&self) -> Result<Spectrum> {
        if self.segments == 0 {
            return Err(Error::InsufficientData(format!(
                "series shorter than one segment of {} grid points",
                self.cfg.segment
            )));
        }
        let n = self.cfg.segment;
        let df = 1.0 / (n as f64 * self.cfg.dt);
        let freq: Vec<f64> = (1..=n / 2).map(|k| k as f64 * df).collect();
        let power: Vec<f64> = self.acc[1..=n / 2].iter().map(|p| p / self.segments as f64).collect();
        let band = self.cfg.band.unwrap_or_else(|| {
            let g = (freq[0] * freq[freq.len() - 1]).sqrt();
            (g / 10.0, g * 10.0)
        });
        let mut hist = LogHistogram::new(band.0, band.1, self.cfg.bins_per_decade)?;
        let mut counts = vec![0usize; hist.bins()];
        for (f, p) in freq.iter().zip(&power) {
            if let Some(i) = hist.bin_of(*f) {
                hist.weights[i] += p;
                counts[i] += 1;
            }
        }
        let xy: Vec<(f64, f64)> = (0..hist.bins())
            .filter(|&i| counts[i] > 0)
            .map(|i| (hist.center(i), hist.weights[i] / counts[i] as f64))
            .collect();
        let fit = fit_power_law(&xy, band.0, band.1)?;
        Ok(Spectrum { freq, power, segments: self.segments, band, beta: -fit.exponent, fit })
    }
}

/// Zero-order-hold resampler feeding a [`Welch`] estimator; usable as a
/// simulation observer so long runs need not be stored.
pub struct PsdAccumulator {
    welch: Welch,
    dt: f64,
    t0: Option<f64>,
    k: u64,
    last: f64,
}

impl PsdAccumulator {
    pub fn new(cfg: PsdConfig) -> Result<Self> {
        Ok(Self { welch: Welch::new(cfg)?, dt: cfg.dt, t0: None, k: 0, last: 0.0 })
    }

    pub fn segments(&self) -> usize {
        self.welch.segments()
    }

    pub fn finish(&self) -> Result<Spectrum> {
        self.welch.finish()
    }

    pub fn merge(&mut self, other: &PsdAccumulator) -> Result<()> {
        self.welch.merge(&other.welch)
    }
}

impl Observer for PsdAccumulator {
    #[inline]
    fn observe(&mut self, t: f64, x: f64) {
        let t0 = match self.t0 {
            Some(t0) => t0,
            None => {
                self.t0 = Some(t);
                self.last = x;
                return;
            }
        };
        while t0 + self.k as f64 * self.dt < t {
            self.welch.push(self.last);
            self.k += 1;
        }
        self.last = x;
    }
}

/// Zero-order-hold values of `(t, x)` on the grid `t[0] + k dt`, `k` such that
/// the grid point does not pass the final sample.
pub fn resample_zoh(t: &[f64], x: &[f64], dt: f64) -> Result<Vec<f64>> {
    if t.len() != x.len() || t.is_empty() {
        return invalid("time and value columns must be non-empty and equally long");
    }
    if !(dt > 0.0) {
        return invalid("grid spacing must be positive");
    }
    let t0 = t[0];
    let n = ((t[t.len() - 1] - t0) / dt).floor() as usize + 1;
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    for k in 0..n {
        let g = t0 + k as f64 * dt;
        while i + 1 < t.len() && t[i + 1] <= g {
            i += 1;
        }
        out.push(x[i]);
    }
    Ok(out)
}

/// Spectrum of a variable-step series.
pub fn psd_estimate(t: &[f64], x: &[f64], cfg: PsdConfig) -> Result<Spectrum> {
    let grid = resample_zoh(t, x, cfg.dt)?;
    psd_uniform(&grid, cfg)
}

/// Spectrum of values already on a uniform grid of spacing `cfg.dt`.
pub fn psd_uniform(values: &[f64], cfg: PsdConfig) -> Result<Spectrum> {
    let mut w = Welch::new(cfg)?;
    for &v in values {
        w.push(v);
    }
    w.finish()
}
