//! Returns as q-Gaussian noise whose scale follows the complex SDE.
//!
//! For each sampling interval the window average of `x` sets
//! `r0 = 1 + r0_bar |avg x|`, and one draw with that scale is emitted.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, invalid, Error, Result};
use crate::sde::{rng_for, simulate_with, ComplexSdeParams, Model, Observer, RunSummary, SimConfig};

pub const DEFAULT_LAMBDA2: f64 = 5.0;
/// One minute, the sampling interval of the empirical series.
pub const DEFAULT_SAMPLE_DT: f64 = 60.0;
/// One hour, the width of the pre-analysis filter.
pub const DEFAULT_FILTER_WINDOW: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QGaussianParams {
    pub r0: f64,
    pub lambda2: f64,
}

impl QGaussianParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0) {
            return invalid(format!("r0 must be positive (got {})", self.r0));
        }
        if !(self.lambda2 > 1.0) {
            return invalid(format!("lambda2 must exceed 1 (got {})", self.lambda2));
        }
        Ok(())
    }

    /// Degrees of freedom of the equivalent Student-t law.
    pub fn dof(&self) -> f64 {
        self.lambda2 - 1.0
    }

    pub fn has_finite_variance(&self) -> bool {
        self.lambda2 > 3.0
    }
}

pub fn qgaussian_pdf(r: f64, p: &QGaussianParams) -> Result<f64> {
    p.validate()?;
    let l = p.lambda2;
    let ln_norm = ln_gamma(0.5 * l) - ln_gamma(0.5 * l - 0.5) - (p.r0 * PI.sqrt()).ln();
    let r02 = p.r0 * p.r0;
    Ok((ln_norm + 0.5 * l * (r02 / (r02 + r * r)).ln()).exp())
}

/// Two-sided tail probability `P(|r| > a)`.
pub fn qgaussian_tail(a: f64, p: &QGaussianParams) -> Result<f64> {
    p.validate()?;
    if !(a >= 0.0) {
        return domain(format!("tail level must be non-negative (got {a})"));
    }
    let d = p.dof();
    let t = a / p.r0 * d.sqrt();
    Ok(beta_reg(0.5 * d, 0.5, d / (d + t * t)))
}

/// One draw via `r = r0 t_d / sqrt(d)` with `d = lambda2 - 1`.
pub fn sample_qgaussian<R: Rng + ?Sized>(p: &QGaussianParams, rng: &mut R) -> Result<f64> {
    p.validate()?;
    let d = p.dof();
    let st = StudentT::new(d).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    Ok(p.r0 * st.sample(rng) / d.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnModelParams {
    pub complex: ComplexSdeParams,
    pub r0_bar: f64,
    /// Averaging window in scaled time.
    pub tau_s: f64,
    pub lambda2: f64,
}

impl ReturnModelParams {
    /// Window of `window_seconds` real seconds.
    pub fn with_window(complex: ComplexSdeParams, r0_bar: f64, window_seconds: f64, lambda2: f64) -> Self {
        Self { complex, r0_bar, tau_s: complex.sigma_t_sq * window_seconds, lambda2 }
    }

    pub fn validate(&self) -> Result<()> {
        self.complex.validate()?;
        if !(self.r0_bar > 0.0) || !(self.tau_s > 0.0) {
            return invalid("need r0_bar > 0 and tau_s > 0");
        }
        QGaussianParams { r0: 1.0, lambda2: self.lambda2 }.validate()
    }

    pub fn r0_from_integral(&self, integral: f64) -> f64 {
        1.0 + self.r0_bar / self.tau_s * integral.abs()
    }
}

/// Exact integral of the linear interpolant of `(t, x)` over `[a, b]`.
pub fn window_integral(t: &[f64], x: &[f64], a: f64, b: f64) -> Result<f64> {
    if t.len() != x.len() || t.len() < 2 {
        return invalid("need at least two samples with matching columns");
    }
    if !(a >= t[0]) || !(b <= t[t.len() - 1]) || !(b > a) {
        return domain(format!("window [{a}, {b}] is not inside the path [{}, {}]", t[0], t[t.len() - 1]));
    }
    let mut acc = 0.0;
    for i in 1..t.len() {
        acc += overlap_integral(t[i - 1], x[i - 1], t[i], x[i], a, b);
        if t[i] >= b {
            break;
        }
    }
    Ok(acc)
}

#[inline]
fn overlap_integral(t0: f64, x0: f64, t1: f64, x1: f64, a: f64, b: f64) -> f64 {
    let lo = t0.max(a);
    let hi = t1.min(b);
    if hi <= lo {
        return 0.0;
    }
    let slope = (x1 - x0) / (t1 - t0);
    let xl = x0 + slope * (lo - t0);
    let xh = x0 + slope * (hi - t0);
    0.5 * (xl + xh) * (hi - lo)
}

/// `r0` for the window `[t_s, t_s + tau_s]` of a stored path.
pub fn volatility_r0(t: &[f64], x: &[f64], t_s: f64, p: &ReturnModelParams) -> Result<f64> {
    p.validate()?;
    Ok(p.r0_from_integral(window_integral(t, x, t_s, t_s + p.tau_s)?))
}

/// Streams the integrals of `x` over windows `[t0 + k step, t0 + k step + width]`,
/// where `t0` is the first observed time.
#[derive(Debug, Clone)]
pub struct WindowIntegrator {
    step: f64,
    width: f64,
    t0: Option<f64>,
    prev: (f64, f64),
    next_open: u64,
    open: std::collections::VecDeque<(u64, f64)>,
    pub integrals: Vec<f64>,
}

impl WindowIntegrator {
    pub fn new(step: f64, width: f64) -> Self {
        Self {
            step,
            width,
            t0: None,
            prev: (0.0, 0.0),
            next_open: 0,
            open: Default::default(),
            integrals: Vec::new(),
        }
    }

    pub fn start(&self) -> Option<f64> {
        self.t0
    }
}

impl Observer for WindowIntegrator {
    #[inline]
    fn observe(&mut self, t: f64, x: f64) {
        let Some(t0) = self.t0 else {
            self.t0 = Some(t);
            self.prev = (t, x);
            return;
        };
        let (tp, xp) = self.prev;
        while t0 + self.next_open as f64 * self.step < t {
            self.open.push_back((self.next_open, 0.0));
            self.next_open += 1;
        }
        for (k, acc) in self.open.iter_mut() {
            let a = t0 + *k as f64 * self.step;
            *acc += overlap_integral(tp, xp, t, x, a, a + self.width);
        }
        while let Some(&(k, acc)) = self.open.front() {
            if t0 + k as f64 * self.step + self.width <= t {
                self.integrals.push(acc);
                self.open.pop_front();
            } else {
                break;
            }
        }
        self.prev = (t, x);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    /// Window start in real seconds.
    pub t_seconds: Vec<f64>,
    pub r: Vec<f64>,
    pub r0: Vec<f64>,
    pub sde: RunSummary,
    pub q_seed: u64,
}

/// One q-Gaussian draw per `r0`; draw `k` uses stream `k` of `q_seed`, so the
/// result does not depend on evaluation order.
pub fn modulated_returns(r0: &[f64], lambda2: f64, q_seed: u64) -> Result<Vec<f64>> {
    QGaussianParams { r0: 1.0, lambda2 }.validate()?;
    r0.par_iter()
        .enumerate()
        .map(|(k, &s)| sample_qgaussian(&QGaussianParams { r0: s, lambda2 }, &mut rng_for(q_seed, k as u64)))
        .collect()
}

/// Simulates the complex SDE under `cfg` and emits one return per
/// `sample_dt` seconds of real time.
pub fn simulate_returns(p: &ReturnModelParams, cfg: &SimConfig, sample_dt: f64, q_seed: u64) -> Result<ReturnSeries> {
    p.validate()?;
    if !(sample_dt > 0.0) {
        return invalid(format!("sample_dt must be positive (got {sample_dt})"));
    }
    let sigma = p.complex.sigma_t_sq;
    let mut wi = WindowIntegrator::new(sigma * sample_dt, p.tau_s);
    let sde = simulate_with(&Model::Complex(p.complex), cfg, 0, &mut wi)?;
    let t0 = wi.start().unwrap_or(cfg.burn_in);
    let r0: Vec<f64> = wi.integrals.iter().map(|&i| p.r0_from_integral(i)).collect();
    let r = modulated_returns(&r0, p.lambda2, q_seed)?;
    let t_seconds = (0..r.len()).map(|k| (t0 + k as f64 * sigma * sample_dt) / sigma).collect();
    Ok(ReturnSeries { t_seconds, r, r0, sde, q_seed })
}

/// Trailing flat moving average over `window` seconds of a series sampled
/// every `sample_dt` seconds. Output element `i` averages inputs
/// `i ..= i + k - 1`, i.e. it belongs to input index `i + k - 1`.
pub fn moving_average(series: &[f64], window: f64, sample_dt: f64) -> Result<Vec<f64>> {
    if !(sample_dt > 0.0) || !(window >= sample_dt) {
        return invalid(format!("window {window} s is shorter than one step of {sample_dt} s"));
    }
    let k = (window / sample_dt).round() as usize;
    if series.len() < k {
        return Err(Error::InsufficientData(format!("{} samples, window needs {k}", series.len())));
    }
    let inv = 1.0 / k as f64;
    let mut out = Vec::with_capacity(series.len() + 1 - k);
    let mut sum: f64 = series[..k].iter().sum();
    out.push(sum * inv);
    for i in k..series.len() {
        if (i - k + 1).is_multiple_of(k) {
            sum = series[i + 1 - k..=i].iter().sum();
        } else {
            sum += series[i] - series[i - k];
        }
        out.push(sum * inv);
    }
    Ok(out)
}

/// `|r|` scaled to unit mean and smoothed over `window` seconds.
pub fn smoothed_abs_returns(r: &[f64], window: f64, sample_dt: f64) -> Result<Vec<f64>> {
    if r.is_empty() {
        return Err(Error::InsufficientData("empty return series".into()));
    }
    let mean = r.iter().map(|v| v.abs()).sum::<f64>() / r.len() as f64;
    if !(mean > 0.0) {
        return domain("returns are identically zero");
    }
    let abs: Vec<f64> = r.iter().map(|v| v.abs() / mean).collect();
    moving_average(&abs, window, sample_dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::SIGMA_T_SQ;

    fn cplx() -> ComplexSdeParams {
        ComplexSdeParams { eta: 2.5, lambda: 3.6, sigma_t_sq: SIGMA_T_SQ, epsilon: 0.017, x_max_cap: 1e3 }
    }

    #[test]
    fn pdf_at_origin() {
        let p = QGaussianParams { r0: 1.0, lambda2: 5.0 };
        assert!((qgaussian_pdf(0.0, &p).unwrap() - 0.75).abs() < 1e-14);
        assert_eq!(qgaussian_pdf(1.3, &p).unwrap(), qgaussian_pdf(-1.3, &p).unwrap());
        assert!(qgaussian_pdf(0.0, &QGaussianParams { r0: 0.0, lambda2: 5.0 }).is_err());
    }

    #[test]
    fn tail_matches_closed_form() {
        let p = QGaussianParams { r0: 1.0, lambda2: 5.0 };
        for &a in &[0.0, 0.5, 2.0, 10.0] {
            let want = 1.0 - 0.5 * a * (2.0 * a * a + 3.0) / (1.0f64 + a * a).powf(1.5);
            assert!((qgaussian_tail(a, &p).unwrap() - want).abs() < 1e-12, "a={a}");
        }
    }

    #[test]
    fn r0_examples() {
        let p = ReturnModelParams { complex: cplx(), r0_bar: 0.4, tau_s: 1e-4, lambda2: 5.0 };
        let t = [0.0, 5e-5, 2e-4];
        assert!((volatility_r0(&t, &[0.0; 3], 0.0, &p).unwrap() - 1.0).abs() < 1e-15);
        assert!((volatility_r0(&t, &[2.0; 3], 0.0, &p).unwrap() - 1.8).abs() < 1e-12);
        assert!((volatility_r0(&t, &[-3.0; 3], 5e-5, &p).unwrap() - 2.2).abs() < 1e-12);
        assert!(volatility_r0(&t, &[2.0; 3], 1.5e-4, &p).is_err());
    }

    #[test]
    fn streaming_windows_match_batch() {
        let t: Vec<f64> = (0..400).map(|i| (i as f64).powf(1.3) * 0.01).collect();
        let x: Vec<f64> = t.iter().map(|s| (s * 2.0).sin() * 3.0).collect();
        for &(step, width) in &[(0.5, 0.5), (0.5, 1.25), (0.7, 0.3)] {
            let mut w = WindowIntegrator::new(step, width);
            for (a, b) in t.iter().zip(&x) {
                w.observe(*a, *b);
            }
            assert!(!w.integrals.is_empty());
            for (k, got) in w.integrals.iter().enumerate() {
                let a = k as f64 * step;
                let want = window_integral(&t, &x, a, a + width).unwrap();
                assert!((got - want).abs() < 1e-12, "k={k}");
            }
        }
    }

    #[test]
    fn moving_average_examples() {
        assert_eq!(moving_average(&[2.0; 10], 180.0, 60.0).unwrap(), vec![2.0; 8]);
        let mut s = vec![0.0; 10];
        s[4] = 1.0;
        let out = moving_average(&s, 180.0, 60.0).unwrap();
        assert_eq!(out.iter().filter(|&&v| (v - 1.0 / 3.0).abs() < 1e-15).count(), 3);
        assert!(moving_average(&s, 30.0, 60.0).is_err());
    }

    #[test]
    fn frozen_volatility_gives_unit_scale() {
        let r0 = vec![1.0; 5];
        let a = modulated_returns(&r0, 5.0, 4).unwrap();
        let b = modulated_returns(&r0, 5.0, 4).unwrap();
        assert_eq!(a, b);
        let direct = sample_qgaussian(&QGaussianParams { r0: 1.0, lambda2: 5.0 }, &mut rng_for(4, 3)).unwrap();
        assert_eq!(a[3], direct);
    }

    #[test]
    fn simulate_returns_is_deterministic() {
        let p = ReturnModelParams::with_window(cplx(), 0.4, 60.0, 5.0);
        let cfg = SimConfig { burn_in: 1.0, ..SimConfig::new(5, crate::sde::StopRule::Duration(0.05)) };
        let a = simulate_returns(&p, &cfg, 60.0, 9).unwrap();
        let b = simulate_returns(&p, &cfg, 60.0, 9).unwrap();
        assert_eq!(a, b);
        // The first sample may land up to kappa^2 past the burn-in.
        assert!(a.r.len() >= 400 && a.r.len() <= 500, "{}", a.r.len());
        assert!(a.r0.iter().all(|&v| v >= 1.0));
        assert!((a.t_seconds[1] - a.t_seconds[0] - 60.0).abs() < 1e-6);
    }
}
