//! Small statistics toolkit: fits, medians, batch means, intervals.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_se: f64,
    pub points: usize,
}

/// Ordinary least squares y ≈ intercept + slope·x.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let slope_se = if xs.len() > 2 { (sse / (m - 2.0) / sxx).sqrt() } else { f64::NAN };
    LinearFit { slope, intercept, r2, slope_se, points: xs.len() }
}

/// Median; NaN-free input assumed, ±∞ allowed.
pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let k = s.len();
    if k == 0 {
        return f64::NAN;
    }
    if k % 2 == 1 {
        s[k / 2]
    } else {
        let (a, b) = (s[k / 2 - 1], s[k / 2]);
        if a == b {
            a
        } else {
            0.5 * (a + b)
        }
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// |a − b| in units of the combined standard error.
    pub fn z_score(&self, other: &Estimate) -> f64 {
        (self.mean - other.mean).abs() / (self.se.powi(2) + other.se.powi(2)).sqrt()
    }
}

/// Mean with a batch-means standard error. The batch length starts at
/// √N and doubles while the estimated variance still grows noticeably.
pub fn batch_means(series: &[f64]) -> Estimate {
    let n = series.len();
    let m = mean(series);
    if n < 8 {
        return Estimate { mean: m, se: (variance(series) / n as f64).sqrt() };
    }
    let se_for = |b: usize| {
        let k = n / b;
        let bm: Vec<f64> = (0..k).map(|j| mean(&series[j * b..(j + 1) * b])).collect();
        (variance(&bm) / k as f64).sqrt()
    };
    let mut b = ((n as f64).sqrt() as usize).max(1);
    let mut se = se_for(b);
    while n / (2 * b) >= 20 {
        let next = se_for(2 * b);
        if next < se * 1.05 {
            se = se.max(next);
            break;
        }
        b *= 2;
        se = next;
    }
    Estimate { mean: m, se }
}

/// Effective sample size from the initial positive sequence of autocorrelations.
pub fn effective_sample_size(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 4 {
        return n as f64;
    }
    let m = mean(series);
    let c0: f64 = series.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
    if c0 == 0.0 {
        return n as f64;
    }
    let acf = |lag: usize| series[..n - lag].iter().zip(&series[lag..]).map(|(a, b)| (a - m) * (b - m)).sum::<f64>() / n as f64 / c0;
    let mut tau = 1.0;
    let mut lag = 1;
    while lag + 1 < n / 2 {
        let pair = acf(lag) + acf(lag + 1);
        if pair <= 0.0 {
            break;
        }
        tau += 2.0 * pair;
        lag += 2;
    }
    n as f64 / tau
}

/// Gelman–Rubin potential scale reduction for equal-length chains.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let grand = mean(&means);
    let b = n / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains.iter().map(|c| variance(c)).sum::<f64>() / m;
    let var = (n - 1.0) / n * w + b / n;
    (var / w).sqrt()
}

/// Wilson score interval at z standard deviations.
pub fn wilson(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let d = 1.0 + z * z / n;
    let c = (p + z * z / (2.0 * n)) / d;
    let h = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / d;
    ((c - h).max(0.0), (c + h).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fit_exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = linear_fit(&xs, &ys);
        assert!((f.slope + 0.5).abs() < 1e-14 && (f.intercept - 2.0).abs() < 1e-14);
        assert!((f.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[1.0, 2.0, 3.0, 4.0]), 2.5);
        assert_eq!(median(&[f64::NEG_INFINITY, f64::NEG_INFINITY, 1.0, 2.0]), f64::NEG_INFINITY);
    }

    #[test]
    fn batch_means_on_ar1() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho: f64 = 0.9;
        let mut x = 0.0;
        let s: Vec<f64> = (0..200_000)
            .map(|_| {
                x = rho * x + rng.random_range(-1.0..1.0) * (3.0f64).sqrt();
                x
            })
            .collect();
        // stationary variance 1/(1-ρ²), long-run variance 1/(1-ρ)²
        let want = (1.0 / (1.0 - rho).powi(2) / s.len() as f64).sqrt();
        let e = batch_means(&s);
        assert!(e.se > 0.7 * want && e.se < 1.3 * want, "{} vs {want}", e.se);
        let ess = effective_sample_size(&s);
        let want_ess = s.len() as f64 * (1.0 - rho) / (1.0 + rho);
        assert!(ess > 0.7 * want_ess && ess < 1.3 * want_ess);
    }

    #[test]
    fn wilson_contains_p() {
        let (lo, hi) = wilson(30, 100, 3.0);
        assert!(lo < 0.3 && hi > 0.3);
        assert_eq!(wilson(0, 0, 3.0), (0.0, 1.0));
    }
}
