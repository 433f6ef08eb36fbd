use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use statrs::function::{beta::beta_reg, erf::erfc, gamma::gamma_ur, gamma::ln_gamma};

use super::StatsError;

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Upper-tail probability of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(0.5 * df, 0.5 * x)
}

/// Two-tailed p-value of a Student's t statistic.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    beta_reg(0.5 * df, 0.5, df / (df + t * t)).clamp(0.0, 1.0)
}

fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson over `panels` equal sub-intervals of `[a, b]`.
fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = lo + h;
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = h / 6.0 * (fa + 4.0 * fm + fb);
            simpson_rec(&f, lo, hi, fa, fm, fb, whole, tol / panels as f64, 30)
        })
        .sum()
}

/// Range CDF of `k` standard normals.
fn normal_range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let km1 = (k - 1) as i32;
    let inner = integrate(
        |z| normal_pdf(z) * (normal_cdf(z) - normal_cdf(z - w)).max(0.0).powi(km1),
        -8.5,
        8.5 + w,
        8,
        1e-10,
    );
    (k as f64 * inner).clamp(0.0, 1.0)
}

/// CDF of the studentized range for `k` means and `df` error degrees of
/// freedom. `df = f64::INFINITY` gives the normal range.
pub fn studentized_range_cdf(q: f64, k: usize, df: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if !df.is_finite() || df > 5000.0 {
        return normal_range_cdf(q, k);
    }
    // density of s = sqrt(chi2_df / df)
    let half = 0.5 * df;
    let log_c = half * df.ln() - ln_gamma(half) - (half - 1.0) * std::f64::consts::LN_2;
    let density = |s: f64| {
        if s <= 0.0 {
            0.0
        } else {
            (log_c + (df - 1.0) * s.ln() - half * s * s).exp()
        }
    };
    let upper = 1.0 + 14.0 / df.sqrt();
    let lower = (1.0 - 14.0 / df.sqrt()).max(0.0);
    integrate(
        |s| density(s) * normal_range_cdf(q * s, k),
        lower,
        upper,
        24,
        1e-8,
    )
    .clamp(0.0, 1.0)
}

/// Quantile of the studentized range distribution by bisection on the CDF.
/// Results are memoized per `(p, k, df)`.
pub fn studentized_range_quantile(p: f64, k: usize, df: f64) -> Result<f64, StatsError> {
    if !(p > 0.0 && p < 1.0) || k < 2 || !(df >= 1.0) {
        return Err(StatsError::BadArgument(format!("p={p}, k={k}, df={df}")));
    }
    static CACHE: OnceLock<Mutex<HashMap<(u64, usize, u64), f64>>> = OnceLock::new();
    let key = (p.to_bits(), k, df.to_bits());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&q) = cache.lock().expect("cache lock").get(&key) {
        return Ok(q);
    }
    let q = range_quantile(p, k, df)?;
    cache.lock().expect("cache lock").insert(key, q);
    Ok(q)
}

fn range_quantile(p: f64, k: usize, df: f64) -> Result<f64, StatsError> {
    let (mut lo, mut hi) = (0.0, 8.0);
    while studentized_range_cdf(hi, k, df) < p {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(StatsError::NonConvergence);
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if studentized_range_cdf(mid, k, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-6 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
