//! Nonlinear SDEs generating bursty power-law signals.
//!
//! Time is scaled time `t_s = sigma_t_sq * t` throughout. The integrator is
//! Euler-Maruyama with a state-dependent step chosen so that every step has
//! the same relative noise amplitude `kappa`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::bursts::BurstDetector;
use crate::error::{domain, invalid, Error, Result};

/// Empirical real-time scale in 1/seconds.
pub const SIGMA_T_SQ: f64 = 1.0 / 6.0 * 1e-5;

/// Algorithm and version of the random stream, echoed into output metadata.
pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.9), stream = realization index";

pub const DEFAULT_KAPPA: f64 = 0.1;
pub const DEFAULT_BURN_IN: f64 = 1e3;
pub const DEFAULT_MAX_STEPS: u64 = 10_000_000_000;

/// Reflection level as a fraction of `x_min`.
pub const FLOOR_FRACTION: f64 = 1e-6;

fn default_x_min() -> f64 {
    1.0
}
fn default_m() -> u32 {
    2
}
fn default_sigma() -> f64 {
    SIGMA_T_SQ
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeParams {
    pub eta: f64,
    pub lambda: f64,
    #[serde(default = "default_x_min")]
    pub x_min: f64,
    #[serde(default = "default_m")]
    pub m: u32,
    #[serde(default = "default_sigma")]
    pub sigma_t_sq: f64,
    /// Optional reflecting ceiling, applied in log space. `None` leaves the
    /// model unbounded above.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_ceiling: Option<f64>,
}

impl SdeParams {
    pub fn new(eta: f64, lambda: f64) -> Self {
        Self { eta, lambda, x_min: 1.0, m: 2, sigma_t_sq: SIGMA_T_SQ, x_ceiling: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return invalid(format!("eta must be positive (got {})", self.eta));
        }
        if !(self.lambda > 1.0) {
            return invalid(format!("lambda must exceed 1 (got {})", self.lambda));
        }
        if !(self.x_min > 0.0) || self.m < 1 || !(self.sigma_t_sq > 0.0) {
            return invalid("need x_min > 0, m >= 1 and sigma_t_sq > 0");
        }
        if let Some(c) = self.x_ceiling {
            if !(c > self.x_min) || !c.is_finite() {
                return invalid(format!("x_ceiling must be finite and exceed x_min (got {c})"));
            }
        }
        Ok(())
    }

    pub fn x_floor(&self) -> f64 {
        FLOOR_FRACTION * self.x_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexSdeParams {
    pub eta: f64,
    pub lambda: f64,
    #[serde(default = "default_sigma")]
    pub sigma_t_sq: f64,
    pub epsilon: f64,
    pub x_max_cap: f64,
}

impl ComplexSdeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !(self.lambda > 1.0) || !(self.sigma_t_sq > 0.0) {
            return invalid("need eta > 0, lambda > 1 and sigma_t_sq > 0");
        }
        if !(self.epsilon > 0.0) {
            return invalid(format!("epsilon must be positive (got {})", self.epsilon));
        }
        if !(self.x_max_cap > 1.0) {
            return invalid(format!("x_max_cap must exceed 1 (got {})", self.x_max_cap));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Simple(SdeParams),
    Complex(ComplexSdeParams),
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Simple(p) => p.validate(),
            Model::Complex(p) => p.validate(),
        }
    }

    pub fn sigma_t_sq(&self) -> f64 {
        match self {
            Model::Simple(p) => p.sigma_t_sq,
            Model::Complex(p) => p.sigma_t_sq,
        }
    }

    pub fn fingerprint(&self) -> String {
        match self {
            Model::Simple(p) => format!(
                "simple eta={} lambda={} x_min={} m={} sigma_t_sq={}{}",
                p.eta,
                p.lambda,
                p.x_min,
                p.m,
                p.sigma_t_sq,
                p.x_ceiling.map(|c| format!(" x_ceiling={c}")).unwrap_or_default()
            ),
            Model::Complex(p) => format!(
                "complex eta={} lambda={} epsilon={} x_max_cap={} sigma_t_sq={}",
                p.eta, p.lambda, p.epsilon, p.x_max_cap, p.sigma_t_sq
            ),
        }
    }

    /// Value whose excursions define bursts: `x` itself, or `|x|` for the
    /// signed complex model.
    pub fn level(&self, x: f64) -> f64 {
        match self {
            Model::Simple(_) => x,
            Model::Complex(_) => x.abs(),
        }
    }
}

pub fn drift_simple(x: f64, p: &SdeParams) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("drift needs x > 0 (got {x})"));
    }
    let restriction = 0.5 * p.m as f64 * (p.x_min / x).powi(p.m as i32);
    Ok((p.eta - 0.5 * p.lambda + restriction) * x.powf(2.0 * p.eta - 1.0))
}

pub fn diffusion_simple(x: f64, p: &SdeParams) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("diffusion needs x > 0 (got {x})"));
    }
    Ok(x.powf(p.eta))
}

/// One adaptive Euler-Maruyama step of the simple model for a given normal
/// draw `zeta`. Returns `(x_next, dt_s)`.
pub fn step_adaptive(x: f64, p: &SdeParams, kappa: f64, zeta: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return domain(format!("step needs x > 0 (got {x})"));
    }
    Ok(SimpleKernel::new(p, kappa).step(x, zeta))
}

pub fn drift_complex(x: f64, p: &ComplexSdeParams) -> f64 {
    let q = 1.0 + x * x;
    let den = p.epsilon * q.sqrt() + 1.0;
    let r = x / p.x_max_cap;
    (p.eta - 0.5 * p.lambda - r * r) * q.powf(p.eta - 1.0) / (den * den) * x
}

pub fn diffusion_complex(x: f64, p: &ComplexSdeParams) -> f64 {
    let q = 1.0 + x * x;
    q.powf(0.5 * p.eta) / (p.epsilon * q.sqrt() + 1.0)
}

/// Complex-model step with `dt_s = kappa^2 / (1 + x^2)^(eta - 1)`.
pub fn step_complex(x: f64, p: &ComplexSdeParams, kappa: f64, zeta: f64) -> (f64, f64) {
    ComplexKernel::new(p, kappa).step(x, zeta)
}

/// Stationary density of the restricted simple model.
pub fn stationary_pdf(x: f64, p: &SdeParams) -> Result<f64> {
    if !(p.lambda > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "stationary density is not normalizable for lambda = {}",
            p.lambda
        )));
    }
    if !(x > 0.0) {
        return domain(format!("density needs x > 0 (got {x})"));
    }
    let m = p.m as f64;
    let norm = m * p.x_min.powf(p.lambda - 1.0) / gamma((p.lambda - 1.0) / m);
    Ok(norm * (-(p.x_min / x).powi(p.m as i32)).exp() * x.powf(-p.lambda))
}

/// Power spectral density exponent `beta = 1 + (lambda - 3) / (2 (eta - 1))`.
pub fn spectral_beta(p: &SdeParams) -> Result<f64> {
    if p.eta == 1.0 {
        return Err(Error::UndefinedExponent);
    }
    Ok(1.0 + (p.lambda - 3.0) / (2.0 * (p.eta - 1.0)))
}

trait Kernel: Send + Sync {
    fn step(&self, x: f64, zeta: f64) -> (f64, f64);
}

#[derive(Debug, Clone, Copy)]
struct SimpleKernel {
    kappa: f64,
    k2: f64,
    base: f64,
    half_m: f64,
    m: i32,
    x_min: f64,
    dt_exp: f64,
    floor: f64,
    ceiling: f64,
}

impl SimpleKernel {
    fn new(p: &SdeParams, kappa: f64) -> Self {
        Self {
            kappa,
            k2: kappa * kappa,
            base: p.eta - 0.5 * p.lambda,
            half_m: 0.5 * p.m as f64,
            m: p.m as i32,
            x_min: p.x_min,
            dt_exp: 2.0 - 2.0 * p.eta,
            floor: p.x_floor(),
            ceiling: p.x_ceiling.unwrap_or(f64::INFINITY),
        }
    }
}

impl Kernel for SimpleKernel {
    #[inline]
    fn step(&self, x: f64, zeta: f64) -> (f64, f64) {
        let dt = self.k2 * x.powf(self.dt_exp);
        let restriction = self.half_m * (self.x_min / x).powi(self.m);
        let mut next = x + self.k2 * (self.base + restriction) * x + self.kappa * x * zeta;
        if next <= self.floor {
            next = 2.0 * self.floor - next;
        } else if next > self.ceiling {
            next = self.ceiling * self.ceiling / next;
        }
        (next, dt)
    }
}

#[derive(Debug, Clone, Copy)]
struct ComplexKernel {
    kappa: f64,
    k2: f64,
    base: f64,
    eps: f64,
    inv_cap: f64,
    dt_exp: f64,
}

impl ComplexKernel {
    fn new(p: &ComplexSdeParams, kappa: f64) -> Self {
        Self {
            kappa,
            k2: kappa * kappa,
            base: p.eta - 0.5 * p.lambda,
            eps: p.epsilon,
            inv_cap: 1.0 / p.x_max_cap,
            dt_exp: 1.0 - p.eta,
        }
    }
}

impl Kernel for ComplexKernel {
    #[inline]
    fn step(&self, x: f64, zeta: f64) -> (f64, f64) {
        let q = 1.0 + x * x;
        let sq = q.sqrt();
        let den = self.eps * sq + 1.0;
        let r = x * self.inv_cap;
        let dt = self.k2 * q.powf(self.dt_exp);
        let next = x + self.k2 * (self.base - r * r) * x / (den * den) + self.kappa * sq / den * zeta;
        (next, dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Stop after `count` complete bursts above `threshold` whose duration is
    /// at least `min_duration`.
    Bursts {
        threshold: f64,
        count: u64,
        #[serde(default)]
        min_duration: f64,
    },
    /// Stop once this much scaled time has elapsed after burn-in.
    Duration(f64),
    /// Stop after this many post-burn-in samples.
    Samples(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub kappa: f64,
    /// Initial value; `None` starts at `x_min` (simple) or 1 (complex).
    pub x0: Option<f64>,
    pub burn_in: f64,
    pub seed: u64,
    pub stop: StopRule,
    pub max_steps: u64,
}

impl SimConfig {
    pub fn new(seed: u64, stop: StopRule) -> Self {
        Self {
            kappa: DEFAULT_KAPPA,
            x0: None,
            burn_in: DEFAULT_BURN_IN,
            seed,
            stop,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }

    pub fn validate(&self, model: &Model) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa <= 0.5) {
            return invalid(format!("kappa must lie in (0, 0.5] (got {})", self.kappa));
        }
        if !(self.burn_in >= 0.0) || !self.burn_in.is_finite() {
            return invalid(format!("burn_in must be finite and >= 0 (got {})", self.burn_in));
        }
        if let (Some(x0), Model::Simple(p)) = (self.x0, model) {
            if !(x0 > p.x_floor()) {
                return invalid(format!("x0 = {x0} must lie above the reflecting floor"));
            }
        }
        match self.stop {
            StopRule::Bursts { threshold, count, min_duration } => {
                if count == 0 || !threshold.is_finite() || !(min_duration >= 0.0) {
                    return invalid("burst stop rule needs count >= 1, finite threshold, min_duration >= 0");
                }
            }
            StopRule::Duration(d) => {
                if !(d > 0.0) || !d.is_finite() {
                    return invalid(format!("stop duration must be positive (got {d})"));
                }
            }
            StopRule::Samples(n) => {
                if n == 0 {
                    return invalid("sample stop rule needs at least one sample");
                }
            }
        }
        Ok(())
    }

    fn x0_for(&self, model: &Model) -> f64 {
        self.x0.unwrap_or(match model {
            Model::Simple(p) => p.x_min,
            Model::Complex(_) => 1.0,
        })
    }
}

/// Receives every post-burn-in sample in time order.
pub trait Observer {
    fn observe(&mut self, t: f64, x: f64);
}

impl<F: FnMut(f64, f64)> Observer for F {
    fn observe(&mut self, t: f64, x: f64) {
        self(t, x)
    }
}

/// Bookkeeping returned by every run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: u64,
    pub samples: u64,
    pub t_end: f64,
    pub bursts: u64,
    pub seed: u64,
    pub stream: u64,
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs one realization on random stream `stream`, feeding samples to `obs`.
pub fn simulate_with<O: Observer + ?Sized>(
    model: &Model,
    cfg: &SimConfig,
    stream: u64,
    obs: &mut O,
) -> Result<RunSummary> {
    model.validate()?;
    cfg.validate(model)?;
    match model {
        Model::Simple(p) => run(&SimpleKernel::new(p, cfg.kappa), model, cfg, stream, obs),
        Model::Complex(p) => run(&ComplexKernel::new(p, cfg.kappa), model, cfg, stream, obs),
    }
}

fn run<K: Kernel, O: Observer + ?Sized>(
    kernel: &K,
    model: &Model,
    cfg: &SimConfig,
    stream: u64,
    obs: &mut O,
) -> Result<RunSummary> {
    let mut rng = rng_for(cfg.seed, stream);
    let mut x = cfg.x0_for(model);
    let mut t = 0.0;
    let mut steps = 0u64;
    let mut samples = 0u64;

    let (mut detector, target, min_duration, t_stop) = match cfg.stop {
        StopRule::Bursts { threshold, count, min_duration } => {
            (Some(BurstDetector::new(threshold)), count, min_duration, f64::INFINITY)
        }
        StopRule::Duration(d) => (None, 0, 0.0, cfg.burn_in + d),
        StopRule::Samples(_) => (None, 0, 0.0, f64::INFINITY),
    };
    let sample_cap = match cfg.stop {
        StopRule::Samples(n) => n,
        _ => u64::MAX,
    };
    let mut counted = 0u64;

    if t >= cfg.burn_in {
        obs.observe(t, x);
        samples += 1;
        if samples >= sample_cap {
            return Ok(RunSummary { steps, samples, t_end: t, bursts: 0, seed: cfg.seed, stream });
        }
        if let Some(d) = detector.as_mut() {
            d.push(t, model.level(x));
        }
    }
    loop {
        if steps >= cfg.max_steps {
            let progress = match cfg.stop {
                StopRule::Bursts { .. } => format!("{counted} of {target} bursts"),
                StopRule::Duration(_) => format!("t_s = {t} of {t_stop}"),
                StopRule::Samples(n) => format!("{samples} of {n} samples"),
            };
            return Err(Error::Truncated { steps, progress });
        }
        let zeta: f64 = rng.sample(StandardNormal);
        let (next, dt) = kernel.step(x, zeta);
        steps += 1;
        if !next.is_finite() {
            return Err(Error::Numerical(format!("non-finite state after {steps} steps")));
        }
        x = next;
        t += dt;
        if t < cfg.burn_in {
            continue;
        }
        obs.observe(t, x);
        samples += 1;
        if let Some(d) = detector.as_mut() {
            if let Some(b) = d.push(t, model.level(x)) {
                if b.duration >= min_duration {
                    counted += 1;
                    if counted == target {
                        break;
                    }
                }
            }
        } else if t >= t_stop || samples >= sample_cap {
            break;
        }
    }
    Ok(RunSummary { steps, samples, t_end: t, bursts: counted, seed: cfg.seed, stream })
}

/// Metadata carried alongside a stored path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMeta {
    pub model: Model,
    pub fingerprint: String,
    pub kappa: f64,
    pub burn_in: f64,
    pub seed: u64,
    pub stream: u64,
    pub steps: u64,
    pub generator: String,
}

/// Stored samples `(t_s, x)` of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub meta: PathMeta,
}

impl Path {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.x.iter().copied())
    }

    /// Real time in seconds of sample `i`.
    pub fn real_time(&self, i: usize) -> f64 {
        self.t[i] / self.meta.model.sigma_t_sq()
    }
}

pub fn simulate(model: &Model, cfg: &SimConfig) -> Result<Path> {
    simulate_stream(model, cfg, 0)
}

pub fn simulate_stream(model: &Model, cfg: &SimConfig, stream: u64) -> Result<Path> {
    let mut t = Vec::new();
    let mut x = Vec::new();
    let summary = simulate_with(model, cfg, stream, &mut |ts: f64, xs: f64| {
        t.push(ts);
        x.push(xs);
    })?;
    Ok(Path {
        t,
        x,
        meta: PathMeta {
            model: *model,
            fingerprint: model.fingerprint(),
            kappa: cfg.kappa,
            burn_in: cfg.burn_in,
            seed: cfg.seed,
            stream,
            steps: summary.steps,
            generator: GENERATOR.to_string(),
        },
    })
}

/// Runs `realizations` independent streams in parallel; `make(i)` builds the
/// observer for stream `i`. Results come back in stream order.
pub fn run_ensemble<O, F>(
    model: &Model,
    cfg: &SimConfig,
    realizations: u64,
    make: F,
) -> Result<Vec<(O, RunSummary)>>
where
    O: Observer + Send,
    F: Fn(u64) -> O + Sync,
{
    (0..realizations)
        .into_par_iter()
        .map(|i| {
            let mut obs = make(i);
            let s = simulate_with(model, cfg, i, &mut obs)?;
            Ok((obs, s))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(eta: f64, lambda: f64) -> SdeParams {
        SdeParams::new(eta, lambda)
    }

    #[test]
    fn drift_examples() {
        assert!((drift_simple(1.0, &p(2.5, 4.0)).unwrap() - 1.5).abs() < 1e-15);
        assert!((drift_simple(1.0, &p(2.0, 4.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!(drift_simple(1e6, &p(1.5, 4.0)).unwrap() < 0.0);
        assert!(drift_simple(0.0, &p(2.0, 4.0)).is_err());
    }

    #[test]
    fn diffusion_examples() {
        assert_eq!(diffusion_simple(1.0, &p(2.7, 4.0)).unwrap(), 1.0);
        assert_eq!(diffusion_simple(2.0, &p(2.0, 4.0)).unwrap(), 4.0);
        assert!((diffusion_simple(4.0, &p(1.5, 4.0)).unwrap() - 8.0).abs() < 1e-14);
        assert!(diffusion_simple(-1.0, &p(2.0, 4.0)).is_err());
    }

    #[test]
    fn step_examples() {
        let (x, dt) = step_adaptive(1.0, &p(2.5, 4.0), 0.1, 0.0).unwrap();
        assert!((x - 1.015).abs() < 1e-15);
        assert!((dt - 0.01).abs() < 1e-17);
        let (_, dt) = step_adaptive(2.0, &p(2.0, 4.0), 0.1, 0.0).unwrap();
        assert!((dt - 0.0025).abs() < 1e-17);
        let (x, _) = step_adaptive(3.0, &p(2.0, 4.0), 1e-9, 1.3).unwrap();
        assert!((x - 3.0).abs() < 1e-8);
        assert!(step_adaptive(0.0, &p(2.0, 4.0), 0.1, 0.0).is_err());
    }

    #[test]
    fn step_reflects_at_floor() {
        let q = p(2.0, 4.0);
        let (x, _) = step_adaptive(1.0, &q, 0.5, -40.0).unwrap();
        assert!(x > q.x_floor());
    }

    #[test]
    fn step_reflects_at_ceiling() {
        let q = SdeParams { x_ceiling: Some(10.0), ..p(2.5, 4.0) };
        let (x, _) = step_adaptive(9.0, &q, 0.5, 2.0).unwrap();
        let unreflected = 9.0 + 0.25 * (0.5 + 1.0 / 81.0) * 9.0 + 0.5 * 9.0 * 2.0;
        assert!((x - 100.0 / unreflected).abs() < 1e-12);
        assert!(SdeParams { x_ceiling: Some(0.5), ..q }.validate().is_err());
    }

    #[test]
    fn complex_examples() {
        let q = ComplexSdeParams { eta: 2.5, lambda: 3.6, sigma_t_sq: SIGMA_T_SQ, epsilon: 0.017, x_max_cap: 1e3 };
        assert_eq!(drift_complex(0.0, &q), 0.0);
        assert!((diffusion_complex(0.0, &q) - 1.0 / 1.017).abs() < 1e-15);
        let want = (2.5 - 1.8 - 1e-6) * 2f64.powf(1.5) / (0.017 * 2f64.sqrt() + 1.0).powi(2);
        assert!((drift_complex(1.0, &q) - want).abs() < 1e-14);
        assert!((drift_complex(1.0, &q) - 1.888023).abs() < 1e-6);
        let (x, dt) = step_complex(1.0, &q, 0.1, 0.0);
        assert!((dt - 0.01 / 2f64.powf(1.5)).abs() < 1e-16);
        assert!((x - (1.0 + drift_complex(1.0, &q) * dt)).abs() < 1e-14);
    }

    #[test]
    fn stationary_pdf_value() {
        let want = 2.0 / (std::f64::consts::PI.sqrt() / 2.0) * (-1.0f64).exp();
        assert!((stationary_pdf(1.0, &p(2.5, 4.0)).unwrap() - want).abs() < 1e-14);
        assert!((want - 0.8302).abs() < 1e-4);
        let bad = SdeParams { lambda: 1.0, ..p(2.0, 4.0) };
        assert!(stationary_pdf(1.0, &bad).is_err());
    }

    #[test]
    fn beta_examples() {
        assert_eq!(spectral_beta(&p(2.0, 4.0)).unwrap(), 1.5);
        assert!((spectral_beta(&p(2.5, 4.0)).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(spectral_beta(&p(1.7, 3.0)).unwrap(), 1.0);
        assert_eq!(spectral_beta(&p(1.0, 3.0)), Err(Error::UndefinedExponent));
    }

    #[test]
    fn config_validation() {
        let m = Model::Simple(p(2.0, 4.0));
        let mut c = SimConfig::new(1, StopRule::Duration(1.0));
        assert!(c.validate(&m).is_ok());
        c.kappa = 0.6;
        assert!(c.validate(&m).is_err());
        c.kappa = 0.1;
        c.x0 = Some(0.0);
        assert!(c.validate(&m).is_err());
    }

    #[test]
    fn burn_in_and_determinism() {
        let m = Model::Simple(p(1.5, 4.0));
        let cfg = SimConfig { burn_in: 2.0, ..SimConfig::new(9, StopRule::Duration(3.0)) };
        let a = simulate(&m, &cfg).unwrap();
        let b = simulate(&m, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.t[0] >= 2.0);
        assert!(a.t.windows(2).all(|w| w[1] > w[0]));
        assert!(a.x.iter().all(|&x| x > 0.0));
        assert!(*a.t.last().unwrap() >= 5.0);
        let c = simulate_stream(&m, &cfg, 1).unwrap();
        assert_ne!(a.x, c.x);
    }

    #[test]
    fn sample_stop_counts_post_burn_in_samples() {
        let m = Model::Simple(p(2.0, 4.0));
        let cfg = SimConfig { burn_in: 0.5, ..SimConfig::new(4, StopRule::Samples(1000)) };
        let path = simulate(&m, &cfg).unwrap();
        assert_eq!(path.len(), 1000);
        assert!(path.t[0] >= 0.5);
    }

    #[test]
    fn step_cap_is_reported() {
        let m = Model::Simple(p(2.0, 4.0));
        let cfg = SimConfig { max_steps: 10, burn_in: 0.0, ..SimConfig::new(1, StopRule::Duration(1e9)) };
        assert!(matches!(simulate(&m, &cfg), Err(Error::Truncated { steps: 10, .. })));
    }
}
