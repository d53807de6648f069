//! Small statistical toolbox: power sums, k-statistics, leave-one-out
//! jackknife, a normal CDF and the Kolmogorov–Smirnov distance.
//!
//! Everything here is plain `f64`; the exact machinery lives in
//! [`crate::cumulants`].

use serde::{Deserialize, Serialize};

/// A point estimate together with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Moments of one (sub)sample, as consumed by jackknifed functionals.
///
/// `kstats[r]` for `r = 1..=4` are the unbiased k-statistics; `central[p]`
/// for `p = 2..=6` are the plug-in central moments (about the subsample
/// mean). `kappa(r)` picks the k-statistic for `r <= 4` and the plug-in
/// cumulant for `r = 5, 6` (the latter is biased at order `O(1/N)`).
#[derive(Clone, Copy, Debug)]
pub struct MomentSet {
    pub n: f64,
    pub mean: f64,
    pub central: [f64; 7],
    pub kstats: [f64; 5],
}

impl MomentSet {
    pub fn kappa(&self, order: usize) -> f64 {
        match order {
            1..=4 => self.kstats[order],
            5 => self.central[5] - 10.0 * self.central[3] * self.central[2],
            6 => {
                self.central[6]
                    - 15.0 * self.central[4] * self.central[2]
                    - 10.0 * self.central[3] * self.central[3]
                    + 30.0 * self.central[2].powi(3)
            }
            _ => f64::NAN,
        }
    }

    pub fn skewness(&self) -> f64 {
        self.kstats[3] / self.kstats[2].powf(1.5)
    }

    pub fn excess_kurtosis(&self) -> f64 {
        self.kstats[4] / (self.kstats[2] * self.kstats[2])
    }
}

/// Centered data with its power sums, ready for O(1) leave-one-out updates.
pub struct SampleSummary {
    centered: Vec<f64>,
    mean: f64,
    sums: [f64; 7],
}

impl SampleSummary {
    pub fn new(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let centered: Vec<f64> = xs.iter().map(|&x| x - mean).collect();
        let mut sums = [0.0; 7];
        sums[0] = n;
        for &y in &centered {
            let mut p = y;
            for s in sums.iter_mut().skip(1) {
                *s += p;
                p *= y;
            }
        }
        SampleSummary {
            centered,
            mean,
            sums,
        }
    }

    pub fn len(&self) -> usize {
        self.centered.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centered.is_empty()
    }

    pub fn full(&self) -> MomentSet {
        moments_from_sums(&self.sums, self.mean)
    }

    /// Moments of the sample with observation `i` removed.
    pub fn leave_one_out(&self, i: usize) -> MomentSet {
        let y = self.centered[i];
        let mut sums = self.sums;
        sums[0] -= 1.0;
        let mut p = y;
        for s in sums.iter_mut().skip(1) {
            *s -= p;
            p *= y;
        }
        moments_from_sums(&sums, self.mean)
    }
}

/// k-statistics and central moments from raw power sums (any translation;
/// `mean_shift` restores the original location for `k_1`).
fn moments_from_sums(s: &[f64; 7], mean_shift: f64) -> MomentSet {
    let n = s[0];
    let (s1, s2, s3, s4) = (s[1], s[2], s[3], s[4]);
    let mut kstats = [f64::NAN; 5];
    kstats[1] = mean_shift + s1 / n;
    if n >= 2.0 {
        kstats[2] = (n * s2 - s1 * s1) / (n * (n - 1.0));
    }
    if n >= 3.0 {
        kstats[3] =
            (2.0 * s1.powi(3) - 3.0 * n * s1 * s2 + n * n * s3) / (n * (n - 1.0) * (n - 2.0));
    }
    if n >= 4.0 {
        kstats[4] = (-6.0 * s1.powi(4) + 12.0 * n * s1 * s1 * s2
            - 3.0 * n * (n - 1.0) * s2 * s2
            - 4.0 * n * (n + 1.0) * s1 * s3
            + n * n * (n + 1.0) * s4)
            / (n * (n - 1.0) * (n - 2.0) * (n - 3.0));
    }

    // central moments about the subsample mean, via the binomial shift
    let delta = s1 / n;
    let mut central = [0.0; 7];
    central[0] = n;
    #[allow(clippy::needless_range_loop)]
    for p in 2..=6usize {
        let mut acc = 0.0;
        let mut binom = 1.0f64; // C(p, q), built from q = p downwards
        for q in (0..=p).rev() {
            acc += binom * s[q] * (-delta).powi((p - q) as i32);
            binom = binom * q as f64 / (p - q + 1) as f64;
        }
        central[p] = acc / n;
    }
    MomentSet {
        n,
        mean: mean_shift + delta,
        central,
        kstats,
    }
}

/// Leave-one-out jackknife of several functionals in one pass.
pub fn jackknife(xs: &[f64], functionals: &[&dyn Fn(&MomentSet) -> f64]) -> Vec<Estimate> {
    let summary = SampleSummary::new(xs);
    let full = summary.full();
    let n = xs.len() as f64;
    let mut loo_values = vec![Vec::with_capacity(xs.len()); functionals.len()];
    for i in 0..xs.len() {
        let loo = summary.leave_one_out(i);
        for (f, out) in functionals.iter().zip(loo_values.iter_mut()) {
            out.push(f(&loo));
        }
    }
    functionals
        .iter()
        .zip(loo_values.iter())
        .map(|(f, loo)| {
            let mean_loo = loo.iter().sum::<f64>() / n;
            let ss: f64 = loo.iter().map(|v| (v - mean_loo) * (v - mean_loo)).sum();
            Estimate {
                value: f(&full),
                stderr: ((n - 1.0) / n * ss).sqrt(),
            }
        })
        .collect()
}

/// Abramowitz–Stegun 7.1.26 rational approximation of erf; absolute error
/// below 1.5e-7, plenty for KS distances gated at 1e-2.
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Kolmogorov–Smirnov distance of a sample to the standard normal:
/// `sup_x |F_N(x) - Φ(x)|`.
pub fn ks_distance_std_normal(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let phi = normal_cdf(x);
        d = d.max(((i + 1) as f64 / n - phi).abs());
        d = d.max((phi - i as f64 / n).abs());
    }
    d
}

/// Ordinary least squares for `y = intercept + slope * x`.
pub fn fit_line(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    (intercept, slope)
}
