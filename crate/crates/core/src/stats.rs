//! Log-binned densities, power-law fits and small distribution tests.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};

pub const DEFAULT_BINS_PER_DECADE: usize = 10;

/// Logarithmic bins anchored at `lo`, each `1/bins_per_decade` decades wide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHistogram {
    pub edges: Vec<f64>,
    pub weights: Vec<f64>,
    pub counts: Vec<u64>,
    pub total_weight: f64,
    pub samples: u64,
}

impl LogHistogram {
    pub fn new(lo: f64, hi: f64, bins_per_decade: usize) -> Result<Self> {
        if !(lo > 0.0) || !(hi > lo) || bins_per_decade == 0 {
            return invalid(format!("need 0 < lo < hi and bins_per_decade >= 1 (got {lo}, {hi}, {bins_per_decade})"));
        }
        let n = ((hi / lo).log10() * bins_per_decade as f64 - 1e-9).ceil().max(1.0) as usize;
        let edges = (0..=n).map(|i| lo * 10f64.powf(i as f64 / bins_per_decade as f64)).collect();
        Ok(Self { edges, weights: vec![0.0; n], counts: vec![0; n], total_weight: 0.0, samples: 0 })
    }

    pub fn bins(&self) -> usize {
        self.weights.len()
    }

    pub fn bin_of(&self, v: f64) -> Option<usize> {
        if !(v >= self.edges[0]) || v > *self.edges.last().unwrap() {
            return None;
        }
        let i = match self.edges.binary_search_by(|e| e.partial_cmp(&v).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        Some(i.min(self.bins() - 1))
    }

    /// Adds `v` with weight `w`; values outside the edges are ignored.
    pub fn add(&mut self, v: f64, w: f64) -> bool {
        match self.bin_of(v) {
            Some(i) => {
                self.weights[i] += w;
                self.counts[i] += 1;
                self.total_weight += w;
                self.samples += 1;
                true
            }
            None => false,
        }
    }

    pub fn width(&self, i: usize) -> f64 {
        self.edges[i + 1] - self.edges[i]
    }

    /// Geometric bin centre.
    pub fn center(&self, i: usize) -> f64 {
        (self.edges[i] * self.edges[i + 1]).sqrt()
    }

    /// Density normalized over the in-range weight.
    pub fn density(&self, i: usize) -> f64 {
        if self.total_weight > 0.0 {
            self.weights[i] / (self.total_weight * self.width(i))
        } else {
            0.0
        }
    }

    pub fn densities(&self) -> Vec<f64> {
        (0..self.bins()).map(|i| self.density(i)).collect()
    }

    /// `(centre, density)` of every bin with non-zero weight.
    pub fn points(&self) -> Vec<(f64, f64)> {
        (0..self.bins()).filter(|&i| self.weights[i] > 0.0).map(|i| (self.center(i), self.density(i))).collect()
    }
}

/// Normalized log-binned density of positive samples.
pub fn log_binned_density(samples: &[f64], bins_per_decade: usize) -> Result<LogHistogram> {
    if samples.len() < 10 {
        return Err(Error::InsufficientData(format!("need at least 10 samples, got {}", samples.len())));
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for &s in samples {
        if !(s > 0.0) || !s.is_finite() {
            return domain(format!("samples must be positive and finite (got {s})"));
        }
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let bpd = bins_per_decade as f64;
    let lo_edge = 10f64.powf((lo.log10() * bpd).floor() / bpd);
    let mut hi_edge = 10f64.powf((hi.log10() * bpd).ceil() / bpd);
    if hi_edge <= lo_edge * (1.0 + 1e-12) {
        hi_edge = lo_edge * 10f64.powf(1.0 / bpd);
    }
    let mut hist = LogHistogram::new(lo_edge.min(lo), hi_edge.max(hi), bins_per_decade)?;
    for &s in samples {
        hist.add(s, 1.0);
    }
    Ok(hist)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub stderr: f64,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    /// Coefficient of determination in log-log coordinates.
    pub r_squared: f64,
}

/// Least-squares slope of `log y` against `log x` for points with
/// `lo <= x <= hi` and `y > 0`.
pub fn fit_power_law(xy: &[(f64, f64)], lo: f64, hi: f64) -> Result<PowerLawFit> {
    let pts: Vec<(f64, f64)> = xy
        .iter()
        .filter(|(x, y)| *x >= lo && *x <= hi && *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len();
    if n < 5 {
        return Err(Error::InsufficientData(format!("{n} positive bins in [{lo}, {hi}], need 5")));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("all fit points share one abscissa".into()));
    }
    let slope = sxy / sxx;
    let icept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - icept - slope * p.0).powi(2)).sum();
    // Residuals of an exact power law are rounding noise; keep the error
    // strictly positive at the precision of the slope itself.
    let stderr = (sse / (nf - 2.0) / sxx).sqrt().max(f64::EPSILON * slope.abs().max(1.0));
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let xs = pts.iter().map(|p| p.0.exp());
    let (fit_lo, fit_hi) = xs.fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
    Ok(PowerLawFit { exponent: slope, prefactor: icept.exp(), stderr, lo: fit_lo, hi: fit_hi, points: n, r_squared })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterBin {
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub mean: f64,
    pub std: f64,
    pub count: u64,
}

/// Conditional mean and standard deviation of the second coordinate in
/// logarithmic bins of the first. Empty bins are omitted.
pub fn binned_scatter(pairs: &[(f64, f64)], bins_per_decade: usize) -> Result<Vec<ScatterBin>> {
    if pairs.len() < 100 {
        return Err(Error::InsufficientData(format!("need at least 100 pairs, got {}", pairs.len())));
    }
    let firsts: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let hist = log_binned_density(&firsts, bins_per_decade)?;
    let n = hist.bins();
    let mut sum = vec![0.0; n];
    let mut sum2 = vec![0.0; n];
    let mut cnt = vec![0u64; n];
    for &(a, b) in pairs {
        if let Some(i) = hist.bin_of(a) {
            sum[i] += b;
            sum2[i] += b * b;
            cnt[i] += 1;
        }
    }
    Ok((0..n)
        .filter(|&i| cnt[i] > 0)
        .map(|i| {
            let c = cnt[i] as f64;
            let mean = sum[i] / c;
            let var = if cnt[i] > 1 { ((sum2[i] - c * mean * mean) / (c - 1.0)).max(0.0) } else { 0.0 };
            ScatterBin { lo: hist.edges[i], hi: hist.edges[i + 1], center: hist.center(i), mean, std: var.sqrt(), count: cnt[i] }
        })
        .collect())
}

/// Power-law fit of binned means over bins with at least `min_count` pairs.
pub fn fit_scatter(bins: &[ScatterBin], lo: f64, hi: f64, min_count: u64) -> Result<PowerLawFit> {
    let xy: Vec<(f64, f64)> = bins.iter().filter(|b| b.count >= min_count).map(|b| (b.center, b.mean)).collect();
    fit_power_law(&xy, lo, hi)
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientData("KS statistic needs two non-empty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Hill estimate of the tail index `alpha` of `P(|X| > x) ~ x^-alpha` from the
/// `k` largest magnitudes.
pub fn hill_estimator(samples: &[f64], k: usize) -> Result<f64> {
    if k < 2 || k >= samples.len() {
        return invalid(format!("need 2 <= k < n (got k={k}, n={})", samples.len()));
    }
    let mut mags: Vec<f64> = samples.iter().map(|v| v.abs()).collect();
    let pivot = mags.len() - k - 1;
    mags.select_nth_unstable_by(pivot, f64::total_cmp);
    let xk = mags[pivot];
    if !(xk > 0.0) {
        return domain("Hill estimator needs a positive order statistic");
    }
    let mean_log: f64 = mags[pivot + 1..].iter().map(|v| (v / xk).ln()).sum::<f64>() / k as f64;
    Ok(1.0 / mean_log)
}

/// Maximum-likelihood decay rate of an exponential tail beyond `t0`, with
/// its asymptotic standard error.
pub fn exponential_tail_rate(samples: &[f64], t0: f64) -> Result<(f64, f64, usize)> {
    let tail: Vec<f64> = samples.iter().filter(|&&v| v > t0).map(|v| v - t0).collect();
    if tail.len() < 2 {
        return Err(Error::InsufficientData(format!("{} samples beyond {t0}", tail.len())));
    }
    let n = tail.len() as f64;
    let rate = n / tail.iter().sum::<f64>();
    Ok((rate, rate / n.sqrt(), tail.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_samples_single_bin() {
        let h = log_binned_density(&[3.0; 20], 10).unwrap();
        let occupied: Vec<usize> = (0..h.bins()).filter(|&i| h.counts[i] > 0).collect();
        assert_eq!(occupied.len(), 1);
        let i = occupied[0];
        assert!((h.density(i) - 1.0 / h.width(i)).abs() < 1e-12);
    }

    #[test]
    fn density_is_normalized() {
        let s: Vec<f64> = (1..1000).map(|i| (i as f64).powf(1.7)).collect();
        let h = log_binned_density(&s, 7).unwrap();
        let total: f64 = (0..h.bins()).map(|i| h.density(i) * h.width(i)).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(h.samples, s.len() as u64);
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(log_binned_density(&[1.0; 5], 10).is_err());
        let mut s = vec![1.0; 20];
        s[3] = 0.0;
        assert!(log_binned_density(&s, 10).is_err());
    }

    #[test]
    fn exact_power_laws() {
        let xy: Vec<(f64, f64)> = (0..30).map(|i| 10f64.powf(i as f64 / 10.0)).map(|x| (x, x.powf(2.0 / 3.0))).collect();
        let f = fit_power_law(&xy, 0.0, 1e9).unwrap();
        assert!((f.exponent - 2.0 / 3.0).abs() < 1e-9);
        assert!(f.stderr > 0.0);
        let xy: Vec<(f64, f64)> = xy.iter().map(|&(x, _)| (x, 3.0 * x.powf(5.0 / 3.0))).collect();
        let f = fit_power_law(&xy, 0.0, 1e9).unwrap();
        assert!((f.exponent - 5.0 / 3.0).abs() < 1e-9);
        assert!((f.prefactor - 3.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_bins() {
        let xy = vec![(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 0.0), (5.0, 5.0)];
        assert!(matches!(fit_power_law(&xy, 0.0, 10.0), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().map(|v| v + 1000.0).collect();
        assert_eq!(ks_two_sample(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn hill_on_exact_pareto_quantiles() {
        let n = 100_000;
        let s: Vec<f64> = (1..=n).map(|i| (i as f64 / (n as f64 + 1.0)).powf(-1.0 / 3.0)).collect();
        let a = hill_estimator(&s, 1000).unwrap();
        assert!((a - 3.0).abs() < 0.05, "{a}");
    }
}
