//! Bessel functions of the first kind and their positive zeros.
//!
//! `J_nu(x)` uses the ascending series for `x < 2`, Steed's continued
//! fractions with downward recurrence in the middle range, and the Hankel
//! expansion once `x >= max(30, nu^2)`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::{Arc, OnceLock, RwLock};

use statrs::function::gamma::gamma;

use crate::error::{domain, Result};

/// Largest supported order.
pub const MAX_ORDER: f64 = 100.0;

const SERIES_LIMIT: f64 = 2.0;
const FPMIN: f64 = f64::MIN_POSITIVE / f64::EPSILON;
const EPS: f64 = f64::EPSILON;

fn check(nu: f64, x: f64) -> Result<()> {
    if !(0.0..=MAX_ORDER).contains(&nu) {
        return domain(format!("order {nu} outside [0, {MAX_ORDER}]"));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return domain(format!("argument {x} must be finite and non-negative"));
    }
    Ok(())
}

/// `J_nu(x)` for `0 <= nu <= 100`, `x >= 0`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64> {
    check(nu, x)?;
    Ok(j_unchecked(nu, x))
}

pub(crate) fn j_unchecked(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x < SERIES_LIMIT {
        series(nu, x)
    } else if x >= hankel_limit(nu) {
        hankel(nu, x)
    } else {
        steed(nu, x)
    }
}

fn hankel_limit(nu: f64) -> f64 {
    (nu * nu).max(30.0)
}

fn series(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        sum += term;
        if term.abs() < EPS * sum.abs() {
            break;
        }
    }
    (0.5 * x).powf(nu) / gamma(nu + 1.0) * sum
}

fn hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let z8 = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * z8);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < EPS * p.abs() {
            break;
        }
    }
    let phase = nu * FRAC_PI_2 + FRAC_PI_4;
    let (s, c) = x.sin_cos();
    let (sp, cp) = phase.sin_cos();
    let cos_w = c * cp + s * sp;
    let sin_w = s * cp - c * sp;
    (2.0 / (PI * x)).sqrt() * (p * cos_w - q * sin_w)
}

fn steed(nu: f64, x: f64) -> f64 {
    let nl = (nu + 0.5).floor() as usize;
    let mu = nu - nl as f64;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;
    let max_iter = 10_000 + 4 * x as usize;

    let mut isign = 1.0;
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    for _ in 0..max_iter {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() < EPS {
            break;
        }
    }

    let mut rjl = isign * FPMIN;
    let mut rjpl = h * rjl;
    let rjl1 = rjl;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let tmp = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * tmp - rjl;
        rjl = tmp;
    }
    if rjl == 0.0 {
        rjl = EPS;
    }
    let f = rjpl / rjl;

    let mut a = 0.25 - mu * mu;
    let mut p = -0.5 * xi;
    let mut q = 1.0;
    let br = 2.0 * x;
    let mut bi = 2.0;
    let mut fact = a * xi / (p * p + q * q);
    let mut cr = br + q * fact;
    let mut ci = bi + p * fact;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let mut dlr = cr * dr - ci * di;
    let mut dli = cr * di + ci * dr;
    let mut tmp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = tmp;
    for i in 2..max_iter {
        a += 2.0 * (i - 1) as f64;
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < FPMIN {
            dr = FPMIN;
        }
        fact = a / (cr * cr + ci * ci);
        cr = br + cr * fact;
        ci = bi - ci * fact;
        if cr.abs() + ci.abs() < FPMIN {
            cr = FPMIN;
        }
        den = dr * dr + di * di;
        dr /= den;
        di = -di / den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        tmp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = tmp;
        if (dlr - 1.0).abs() + dli.abs() < EPS {
            break;
        }
    }
    let gam = (p - f) / q;
    let rjmu = (w / ((p - f) * gam + q)).sqrt().copysign(rjl);
    rjl1 * (rjmu / rjl)
}

/// First `k` positive zeros of `J_nu`, strictly increasing.
///
/// Results are cached per order; the cache only ever grows, so concurrent
/// readers see either the old or the extended table.
pub fn bessel_zeros(nu: f64, k: usize) -> Result<Vec<f64>> {
    Ok(zero_table(nu, k)?[..k].to_vec())
}

pub(crate) fn zero_table(nu: f64, k: usize) -> Result<Arc<Vec<f64>>> {
    check(nu, 0.0)?;
    if k == 0 {
        return domain("at least one zero must be requested");
    }
    static CACHE: OnceLock<RwLock<HashMap<u64, Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    let key = nu.to_bits();
    if let Some(t) = cache.read().expect("zero cache poisoned").get(&key) {
        if t.len() >= k {
            return Ok(Arc::clone(t));
        }
    }
    let mut guard = cache.write().expect("zero cache poisoned");
    let mut zeros = guard.get(&key).map(|t| t.as_ref().clone()).unwrap_or_default();
    extend_zeros(nu, &mut zeros, k);
    let table = Arc::new(zeros);
    guard.insert(key, Arc::clone(&table));
    Ok(table)
}

fn extend_zeros(nu: f64, zeros: &mut Vec<f64>, k: usize) {
    zeros.reserve(k.saturating_sub(zeros.len()));
    while zeros.len() < k {
        // Consecutive zeros are at least ~3.1 apart for nu >= 0, so a 0.5
        // scan started 2.5 past the previous zero cannot skip one.
        let mut a = match zeros.last() {
            Some(&z) => z + 2.5,
            None => nu.max(1.0),
        };
        let mut fa = j_unchecked(nu, a);
        loop {
            let b = a + 0.5;
            let fb = j_unchecked(nu, b);
            if fa == 0.0 {
                zeros.push(a);
                break;
            }
            if fa.signum() != fb.signum() {
                zeros.push(brent(|t| j_unchecked(nu, t), a, b, fa, fb));
                break;
            }
            a = b;
            fa = fb;
        }
    }
}

/// Brent's root finder on a sign-changing bracket.
pub(crate) fn brent(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64) -> f64 {
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb == 0.0 {
            return b;
        }
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * EPS * b.abs() + 1e-300;
        let m = 0.5 * (c - b);
        if m.abs() <= tol {
            return b;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    b
}
