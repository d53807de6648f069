//! The experiment harness: Monte Carlo verification of the pattern-count
//! CLT, limiting-variance extrapolation, one-point conditional pattern
//! densities `φ^π_{p1}` and the conditional-expectation checks built on the
//! recursive 2-cycle sampler.
//!
//! Replica `r` of a grid cell `g` always draws from the stream
//! `(seed, group g, member r)`, so reports are reproducible bit-for-bit on
//! any worker count; aggregation folds in replica order.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cumulants::ClassCumulants;
use crate::error::{Error, Result};
use crate::pattern::{count_fast, VincularPattern};
use crate::perm::{IntegerPartition, Permutation, PointSet};
use crate::sampler::{sample_class, ClassSpec, RandomStream, GENERATOR_ID};
use crate::stats::{
    fit_line, jackknife, ks_distance_std_normal, Estimate, MomentSet, SampleSummary,
};
use crate::wdg::EdgeMultiset;

/// Bootstrap rounds used by the limiting-variance extrapolation.
const BOOTSTRAP_ROUNDS: usize = 200;

/// Stream groups `2^16` and above are reserved for bootstrap resampling.
const BOOTSTRAP_GROUP_BASE: u32 = 1 << 16;

fn default_max_ops() -> f64 {
    2e10
}

/// Distributional gates applied to every non-degenerate grid row. Skewness
/// and kurtosis gates are asserted at 4 jackknife standard errors, per the
/// harness-wide 4-sigma convention.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GateThresholds {
    #[serde(default)]
    pub ks: Option<f64>,
    #[serde(default)]
    pub skewness: Option<f64>,
    #[serde(default)]
    pub excess_kurtosis: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub pattern: VincularPattern,
    pub class: ClassSpec,
    /// Sizes to sweep; must be strictly increasing. May be empty (and is
    /// ignored) when the class is explicit.
    #[serde(default)]
    pub n_grid: Vec<usize>,
    pub replicas: usize,
    pub seed: u64,
    /// Refuse runs whose estimated operation count exceeds this.
    #[serde(default = "default_max_ops")]
    pub max_ops: f64,
    #[serde(default)]
    pub gates: GateThresholds,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub format: ReportFormat,
}

impl ExperimentConfig {
    fn grid(&self) -> Result<Vec<usize>> {
        match &self.class {
            ClassSpec::Explicit(lam) => {
                if !self.n_grid.is_empty() && self.n_grid != [lam.n()] {
                    return Err(Error::Constraint(format!(
                        "explicit class of size {} conflicts with the n-grid",
                        lam.n()
                    )));
                }
                Ok(vec![lam.n()])
            }
            ClassSpec::Proportions { .. } => {
                if self.n_grid.is_empty() {
                    return Err(Error::GridTooShort { got: 0, need: 1 });
                }
                if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Constraint(
                        "n-grid must be strictly increasing".into(),
                    ));
                }
                Ok(self.n_grid.clone())
            }
        }
    }

    fn validate(&self) -> Result<Vec<usize>> {
        if self.replicas < 2 {
            return Err(Error::TooFewSamples {
                got: self.replicas,
                need: 2,
            });
        }
        let grid = self.grid()?;
        let estimated: f64 = grid
            .iter()
            .map(|&n| self.replicas as f64 * per_sample_cost(&self.pattern, n))
            .sum();
        if estimated > self.max_ops {
            return Err(Error::CostGuard {
                estimated,
                limit: self.max_ops,
            });
        }
        Ok(grid)
    }
}

/// Crude operation count per replica: sampling plus the counting kernel.
fn per_sample_cost(pattern: &VincularPattern, n: usize) -> f64 {
    let nf = n as f64;
    let k = pattern.k() as f64;
    let sample = 6.0 * nf;
    let count = if pattern.block_count() == 1 {
        2.0 * nf * k
    } else if pattern.is_classical() && pattern.k() == 2 {
        2.0 * nf * nf.log2().max(1.0)
    } else {
        nf.powi(pattern.block_count() as i32) * k * k
    };
    sample + count
}

/// Per-size statistics of one CLT run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NStats {
    pub n: usize,
    pub lambda: IntegerPartition,
    pub replicas: usize,
    pub mean: f64,
    pub variance: f64,
    /// `variance / n^{2m-1}`, the normalization of the CLT.
    pub variance_normalized: f64,
    pub skewness: Option<Estimate>,
    pub excess_kurtosis: Option<Estimate>,
    /// `κ̂_3 / n^{3(m-1/2)}` and `κ̂_4 / n^{4(m-1/2)}`.
    pub kappa3_normalized: Option<Estimate>,
    pub kappa4_normalized: Option<Estimate>,
    pub ks_distance: Option<f64>,
    pub studentized_mean: Option<f64>,
    pub studentized_variance: Option<f64>,
    /// All counts equal (zero variance): the limit law collapses.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub name: String,
    pub n: usize,
    pub value: f64,
    pub threshold: f64,
    #[serde(default)]
    pub stderr: Option<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub generator: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub rows: Vec<NStats>,
    pub gates: Vec<GateResult>,
    pub all_gates_passed: bool,
    /// The only field excluded from reproducibility comparisons.
    pub wall_time_ms: u64,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per (n, statistic): `n,statistic,value,uncertainty`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,statistic,value,uncertainty\n");
        let mut push = |n: usize, name: &str, value: f64, err: Option<f64>| {
            let err = err.map(|e| e.to_string()).unwrap_or_default();
            out.push_str(&format!("{n},{name},{value},{err}\n"));
        };
        for row in &self.rows {
            push(row.n, "mean", row.mean, None);
            push(row.n, "variance", row.variance, None);
            push(row.n, "variance_normalized", row.variance_normalized, None);
            if let Some(e) = row.skewness {
                push(row.n, "skewness", e.value, Some(e.stderr));
            }
            if let Some(e) = row.excess_kurtosis {
                push(row.n, "excess_kurtosis", e.value, Some(e.stderr));
            }
            if let Some(e) = row.kappa3_normalized {
                push(row.n, "kappa3_normalized", e.value, Some(e.stderr));
            }
            if let Some(e) = row.kappa4_normalized {
                push(row.n, "kappa4_normalized", e.value, Some(e.stderr));
            }
            if let Some(d) = row.ks_distance {
                push(row.n, "ks_distance", d, None);
            }
        }
        out
    }
}

/// Draws `replicas` class-uniform permutations and counts the pattern;
/// replica `r` uses stream `(seed, group, r)`, so the output is the same on
/// any worker count.
pub fn collect_counts(
    pattern: &VincularPattern,
    lambda: &IntegerPartition,
    replicas: usize,
    seed: u64,
    group: u32,
) -> Vec<u64> {
    (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = RandomStream::grouped(seed, group, r as u32).rng();
            count_fast(&sample_class(lambda, &mut rng), pattern)
        })
        .collect()
}

/// Runs the CLT experiment of `cfg`: per grid size, sample counts, estimate
/// moments/cumulants with jackknife errors, measure the KS distance of the
/// studentized counts to N(0,1), and evaluate the configured gates.
pub fn run_clt(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let start = std::time::Instant::now();
    let grid = cfg.validate()?;
    let m = cfg.pattern.block_count() as f64;
    let mut rows = Vec::new();
    let mut gates = Vec::new();

    for (g, &n) in grid.iter().enumerate() {
        let lambda = cfg.class.resolve(n)?;
        let counts = collect_counts(&cfg.pattern, &lambda, cfg.replicas, cfg.seed, g as u32);
        let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let summary = SampleSummary::new(&xs);
        let full = summary.full();
        let variance = full.kstats[2];
        let degenerate = variance == 0.0;
        let nf = n as f64;

        let row = if degenerate {
            NStats {
                n,
                lambda: lambda.clone(),
                replicas: cfg.replicas,
                mean: full.mean,
                variance,
                variance_normalized: 0.0,
                skewness: None,
                excess_kurtosis: None,
                kappa3_normalized: None,
                kappa4_normalized: None,
                ks_distance: None,
                studentized_mean: None,
                studentized_variance: None,
                degenerate,
            }
        } else {
            let k3_scale = nf.powf(3.0 * (m - 0.5));
            let k4_scale = nf.powf(4.0 * (m - 0.5));
            let ests = jackknife(
                &xs,
                &[
                    &|mo: &MomentSet| mo.skewness(),
                    &|mo: &MomentSet| mo.excess_kurtosis(),
                    &move |mo: &MomentSet| mo.kstats[3] / k3_scale,
                    &move |mo: &MomentSet| mo.kstats[4] / k4_scale,
                ],
            );
            let sd = variance.sqrt();
            let studentized: Vec<f64> = xs.iter().map(|&x| (x - full.mean) / sd).collect();
            let stud_m = SampleSummary::new(&studentized).full();
            NStats {
                n,
                lambda: lambda.clone(),
                replicas: cfg.replicas,
                mean: full.mean,
                variance,
                variance_normalized: variance / nf.powf(2.0 * m - 1.0),
                skewness: Some(ests[0]),
                excess_kurtosis: Some(ests[1]),
                kappa3_normalized: Some(ests[2]),
                kappa4_normalized: Some(ests[3]),
                ks_distance: Some(ks_distance_std_normal(&studentized)),
                studentized_mean: Some(stud_m.mean),
                studentized_variance: Some(stud_m.kstats[2]),
                degenerate,
            }
        };

        gates.extend(evaluate_gates(&cfg.gates, &row, cfg.replicas));
        rows.push(row);
    }

    let all_gates_passed = gates.iter().all(|gate| gate.passed);
    Ok(ExperimentReport {
        schema: 1,
        generator: GENERATOR_ID.to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        rows,
        gates,
        all_gates_passed,
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}

fn evaluate_gates(thresholds: &GateThresholds, row: &NStats, replicas: usize) -> Vec<GateResult> {
    let mut out = Vec::new();
    let nf = replicas as f64;
    if let (Some(sm), Some(sv)) = (row.studentized_mean, row.studentized_variance) {
        out.push(GateResult {
            name: "studentized_mean".into(),
            n: row.n,
            value: sm,
            threshold: 4.0 / nf.sqrt(),
            stderr: None,
            passed: sm.abs() < 4.0 / nf.sqrt(),
        });
        out.push(GateResult {
            name: "studentized_variance".into(),
            n: row.n,
            value: sv,
            threshold: 4.0 * (2.0 / nf).sqrt(),
            stderr: None,
            passed: (sv - 1.0).abs() < 4.0 * (2.0 / nf).sqrt(),
        });
    }
    if row.degenerate {
        return out;
    }
    if let (Some(limit), Some(d)) = (thresholds.ks, row.ks_distance) {
        out.push(GateResult {
            name: "ks_distance".into(),
            n: row.n,
            value: d,
            threshold: limit,
            stderr: None,
            passed: d < limit,
        });
    }
    if let (Some(limit), Some(e)) = (thresholds.skewness, row.skewness) {
        out.push(GateResult {
            name: "skewness".into(),
            n: row.n,
            value: e.value,
            threshold: limit,
            stderr: Some(e.stderr),
            passed: e.value.abs() < limit + 4.0 * e.stderr,
        });
    }
    if let (Some(limit), Some(e)) = (thresholds.excess_kurtosis, row.excess_kurtosis) {
        out.push(GateResult {
            name: "excess_kurtosis".into(),
            n: row.n,
            value: e.value,
            threshold: limit,
            stderr: Some(e.stderr),
            passed: e.value.abs() < limit + 4.0 * e.stderr,
        });
    }
    out
}

// ---------------------------------------------------------------------------
// limiting variance
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VariancePoint {
    pub n: usize,
    pub variance: f64,
    /// `variance / n^{2m-1}`.
    pub normalized: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VarianceFit {
    /// Extrapolated limit of `variance / n^{2m-1}` as `1/n -> 0`.
    pub estimate: f64,
    /// Bootstrap standard error of the intercept.
    pub stderr: f64,
    pub per_n: Vec<VariancePoint>,
}

/// Estimates the limiting normalized variance by fitting
/// `variance/n^{2m-1} = a + b/n` over the grid and extrapolating to
/// `1/n -> 0`; the intercept error comes from `BOOTSTRAP_ROUNDS` bootstrap
/// resamples of the per-size counts.
pub fn estimate_limit_variance(cfg: &ExperimentConfig) -> Result<VarianceFit> {
    let grid = cfg.validate()?;
    if grid.len() < 3 {
        return Err(Error::GridTooShort {
            got: grid.len(),
            need: 3,
        });
    }
    let m = cfg.pattern.block_count() as f64;
    let mut per_n = Vec::new();
    let mut all_counts: Vec<Vec<f64>> = Vec::new();
    for (g, &n) in grid.iter().enumerate() {
        let lambda = cfg.class.resolve(n)?;
        let counts = collect_counts(&cfg.pattern, &lambda, cfg.replicas, cfg.seed, g as u32);
        let xs: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let variance = SampleSummary::new(&xs).full().kstats[2];
        per_n.push(VariancePoint {
            n,
            variance,
            normalized: variance / (n as f64).powf(2.0 * m - 1.0),
        });
        all_counts.push(xs);
    }
    let points: Vec<(f64, f64)> = per_n
        .iter()
        .map(|p| (1.0 / p.n as f64, p.normalized))
        .collect();
    let (estimate, _) = fit_line(&points);

    // center each cell before resampling so the power sums do not cancel
    let centered: Vec<(f64, Vec<f64>)> = all_counts
        .iter()
        .map(|xs| {
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            (mean, xs.iter().map(|&x| x - mean).collect())
        })
        .collect();

    // bootstrap the intercept; round b for every grid cell uses the stream
    // (seed, BOOTSTRAP_GROUP_BASE + cell, b)
    let intercepts: Vec<f64> = (0..BOOTSTRAP_ROUNDS)
        .into_par_iter()
        .map(|b| {
            let mut boot_points = Vec::with_capacity(grid.len());
            for (g, (_, ys)) in centered.iter().enumerate() {
                let stream =
                    RandomStream::grouped(cfg.seed, BOOTSTRAP_GROUP_BASE + g as u32, b as u32);
                let mut rng = stream.rng();
                let mut sums = [0.0f64; 3];
                for _ in 0..ys.len() {
                    let y = ys[rng.gen_range(0..ys.len())];
                    sums[0] += 1.0;
                    sums[1] += y;
                    sums[2] += y * y;
                }
                let nn = sums[0];
                let var = (nn * sums[2] - sums[1] * sums[1]) / (nn * (nn - 1.0));
                boot_points.push((
                    1.0 / grid[g] as f64,
                    var / (grid[g] as f64).powf(2.0 * m - 1.0),
                ));
            }
            fit_line(&boot_points).0
        })
        .collect();
    let bm = intercepts.iter().sum::<f64>() / intercepts.len() as f64;
    let stderr = (intercepts.iter().map(|v| (v - bm) * (v - bm)).sum::<f64>()
        / (intercepts.len() as f64 - 1.0))
        .sqrt();
    Ok(VarianceFit {
        estimate,
        stderr,
        per_n,
    })
}

// ---------------------------------------------------------------------------
// one-point conditional pattern densities
// ---------------------------------------------------------------------------

/// Monte Carlo estimate of `φ^π_{p1}(x, y)`: the probability that `k-1`
/// i.i.d. points from `p1·Δ + (1-p1)·Λ`, together with `(x, y)`, realize
/// the pattern `π`. Draws colliding in a coordinate with earlier points are
/// resampled. Returns the binomial estimate and standard error.
pub fn phi_estimate(
    pi: &Permutation,
    p1: f64,
    x: f64,
    y: f64,
    trials: usize,
    stream: RandomStream,
) -> Result<Estimate> {
    if pi.size() < 2 {
        return Err(Error::Constraint("pattern must have size >= 2".into()));
    }
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::BadProportions { p1, p2: 0.0 });
    }
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::Constraint(format!(
            "point ({x}, {y}) outside the unit square"
        )));
    }
    if trials == 0 {
        return Err(Error::TooFewSamples { got: 0, need: 1 });
    }
    let k = pi.size();
    let mut rng = stream.rng();
    let mut hits = 0usize;
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(k);
    for _ in 0..trials {
        points.clear();
        points.push((x, y));
        while points.len() < k {
            let candidate = if rng.gen::<f64>() < p1 {
                let h: f64 = rng.gen();
                (h, h)
            } else {
                (rng.gen(), rng.gen())
            };
            let collides = points
                .iter()
                .any(|&(px, py)| px == candidate.0 || py == candidate.1);
            if !collides {
                points.push(candidate);
            }
        }
        let set = PointSet::new(points.clone()).expect("collisions were resampled");
        if &set.pattern() == pi {
            hits += 1;
        }
    }
    let p_hat = hits as f64 / trials as f64;
    Ok(Estimate {
        value: p_hat,
        stderr: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpreadCheck {
    pub min: f64,
    pub max: f64,
    /// `sqrt(se_min² + se_max²)`.
    pub combined_stderr: f64,
    /// `max - min > 4 * combined_stderr`.
    pub significant: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiCheckReport {
    pub grid: Vec<f64>,
    /// `phi[ix][iy]` estimates `φ(grid[ix], grid[iy])`.
    pub phi: Vec<Vec<Estimate>>,
    /// Spread of `s(x,y) = φ(x,y) + φ(y,x)` over the grid.
    pub symmetrized: SpreadCheck,
    /// Largest `|φ(P) - φ(Q)| - 4·se` to `(k-1)·|P-Q|_1` ratio observed.
    pub max_lipschitz_ratio: f64,
    /// Every pair satisfied `|φ(P)-φ(Q)| <= (k-1)|P-Q|_1 + 4·se`.
    pub lipschitz_ok: bool,
    /// Spread of `f(x,y,z) = φ(x,y) + φ(y,z) + φ(z,x)` over the grid cube.
    pub three_point: SpreadCheck,
}

/// Grid-based checks of `φ^π_{p1}`: non-constancy of the symmetrized
/// density, the `(k-1)`-Lipschitz bound in `L¹`, and non-constancy of the
/// three-point combination. Requires `p1 < 1` (with `p1 = 1` the density
/// degenerates and non-constancy no longer holds).
pub fn phi_checks(
    pi: &Permutation,
    p1: f64,
    grid_step: f64,
    trials: usize,
    stream: RandomStream,
) -> Result<PhiCheckReport> {
    if p1 >= 1.0 {
        return Err(Error::BadProportions { p1, p2: 0.0 });
    }
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::Constraint(format!(
            "grid step {grid_step} outside (0, 1]"
        )));
    }
    let k = pi.size();
    let steps = (1.0 / grid_step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=steps)
        .map(|i| (i as f64 * grid_step).min(1.0))
        .collect();

    let cells: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|ix| (0..grid.len()).map(move |iy| (ix, iy)))
        .collect();
    let flat: Vec<Estimate> = cells
        .par_iter()
        .map(|&(ix, iy)| {
            let stream = RandomStream::grouped(
                stream.seed,
                stream.stream_id as u32,
                (ix * grid.len() + iy) as u32,
            );
            phi_estimate(pi, p1, grid[ix], grid[iy], trials, stream)
        })
        .collect::<Result<_>>()?;
    let phi: Vec<Vec<Estimate>> = flat.chunks(grid.len()).map(|c| c.to_vec()).collect();

    // s(x, y) = φ(x, y) + φ(y, x)
    let mut s_best: Option<(f64, f64)> = None; // (value, se²)
    let mut s_worst: Option<(f64, f64)> = None;
    #[allow(clippy::needless_range_loop)]
    for ix in 0..grid.len() {
        for iy in ix..grid.len() {
            let v = phi[ix][iy].value + phi[iy][ix].value;
            let se2 = phi[ix][iy].stderr.powi(2) + phi[iy][ix].stderr.powi(2);
            if s_best.is_none() || v > s_best.unwrap().0 {
                s_best = Some((v, se2));
            }
            if s_worst.is_none() || v < s_worst.unwrap().0 {
                s_worst = Some((v, se2));
            }
        }
    }
    let (smax, smax_se2) = s_best.unwrap();
    let (smin, smin_se2) = s_worst.unwrap();
    let symmetrized = SpreadCheck {
        min: smin,
        max: smax,
        combined_stderr: (smax_se2 + smin_se2).sqrt(),
        significant: smax - smin > 4.0 * (smax_se2 + smin_se2).sqrt(),
    };

    // Lipschitz in L1, allowing 4 combined standard errors of slack
    let mut lipschitz_ok = true;
    let mut max_ratio = 0.0f64;
    for (a, &(ix, iy)) in cells.iter().enumerate() {
        for &(jx, jy) in cells.iter().skip(a + 1) {
            let dist = (grid[ix] - grid[jx]).abs() + (grid[iy] - grid[jy]).abs();
            if dist == 0.0 {
                continue;
            }
            let diff = (phi[ix][iy].value - phi[jx][jy].value).abs();
            let slack = 4.0 * (phi[ix][iy].stderr.powi(2) + phi[jx][jy].stderr.powi(2)).sqrt();
            max_ratio = max_ratio.max(diff / dist);
            if diff > (k as f64 - 1.0) * dist + slack {
                lipschitz_ok = false;
            }
        }
    }

    // f(x, y, z) = φ(x,y) + φ(y,z) + φ(z,x)
    let mut t_best: Option<(f64, f64)> = None;
    let mut t_worst: Option<(f64, f64)> = None;
    for ix in 0..grid.len() {
        for iy in 0..grid.len() {
            for iz in 0..grid.len() {
                let v = phi[ix][iy].value + phi[iy][iz].value + phi[iz][ix].value;
                let se2 = phi[ix][iy].stderr.powi(2)
                    + phi[iy][iz].stderr.powi(2)
                    + phi[iz][ix].stderr.powi(2);
                if t_best.is_none() || v > t_best.unwrap().0 {
                    t_best = Some((v, se2));
                }
                if t_worst.is_none() || v < t_worst.unwrap().0 {
                    t_worst = Some((v, se2));
                }
            }
        }
    }
    let (tmax, tmax_se2) = t_best.unwrap();
    let (tmin, tmin_se2) = t_worst.unwrap();
    let three_point = SpreadCheck {
        min: tmin,
        max: tmax,
        combined_stderr: (tmax_se2 + tmin_se2).sqrt(),
        significant: tmax - tmin > 4.0 * (tmax_se2 + tmin_se2).sqrt(),
    };

    Ok(PhiCheckReport {
        grid,
        phi,
        symmetrized,
        max_lipschitz_ratio: max_ratio,
        lipschitz_ok,
        three_point,
    })
}

// ---------------------------------------------------------------------------
// conditional expectation checks for the 2-cycle construction
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionalMeanReport {
    pub n: usize,
    pub positions: (usize, usize),
    /// Monte Carlo `Ê[C | i, j]` where `C` counts occurrences through
    /// position `i` or `j`.
    pub conditional_mean: Estimate,
    /// `n^{k-1}/(k-1)! · (φ̂(x,y) + φ̂(y,x))` at `x = i/n`, `y = j/n`.
    pub predicted: f64,
    pub predicted_stderr: f64,
    /// `|mean - predicted| / predicted` (NaN when predicted is 0).
    pub relative_deviation: f64,
    /// Largest observed count of occurrences through both positions, and
    /// the `k²·n^{k-2}` ceiling it must respect.
    pub both_max: u64,
    pub both_bound: f64,
}

/// Estimates `E[C | i, j]` under the 2-cycle construction conditioned on
/// the transposition positions `(i, j)` (0-based), and compares it with the
/// one-point-density prediction. The construction is already conditional,
/// so no rejection is involved.
pub fn conditional_mean_check(
    pi: &Permutation,
    lambda: &IntegerPartition,
    i: usize,
    j: usize,
    trials: usize,
    stream: RandomStream,
) -> Result<ConditionalMeanReport> {
    let n = lambda.n();
    if i == j {
        return Err(Error::Constraint("positions i and j must differ".into()));
    }
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange { index: i.max(j), n });
    }
    let k = pi.size();
    let pattern = VincularPattern::classical(pi.clone())?;
    let reduced = lambda.remove_part(2)?;

    let per_trial: Vec<(u64, u64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng =
                RandomStream::grouped(stream.seed, stream.stream_id as u32, t as u32).rng();
            let rest = sample_class(&reduced, &mut rng);
            let sigma = crate::sampler::rec2_assemble(n, i, j, &rest).expect("valid positions");
            let total = count_fast(&sigma, &pattern);
            let without_both = count_fast(&rest, &pattern);
            let c = total - without_both;
            // split off the occurrences using both positions
            let without_j = count_fast(&sigma.remove_positions(&[j]), &pattern);
            let without_i = count_fast(&sigma.remove_positions(&[i]), &pattern);
            let c1 = without_j - without_both;
            let c2 = without_i - without_both;
            let both = c - c1 - c2;
            (c, both)
        })
        .collect();

    let xs: Vec<f64> = per_trial.iter().map(|&(c, _)| c as f64).collect();
    let est = jackknife(&xs, &[&|m: &MomentSet| m.kstats[1]]);
    let both_max = per_trial.iter().map(|&(_, b)| b).max().unwrap_or(0);

    let p1 = lambda.multiplicity(1) as f64 / n as f64;
    let x = (i + 1) as f64 / n as f64;
    let y = (j + 1) as f64 / n as f64;
    let phi_trials = trials.max(10_000);
    let fxy = phi_estimate(
        pi,
        p1,
        x,
        y,
        phi_trials,
        RandomStream::grouped(stream.seed, stream.stream_id as u32 ^ 0x5555, 0),
    )?;
    let fyx = phi_estimate(
        pi,
        p1,
        y,
        x,
        phi_trials,
        RandomStream::grouped(stream.seed, stream.stream_id as u32 ^ 0x5555, 1),
    )?;
    let factorial: f64 = (1..k).map(|t| t as f64).product();
    let scale = (n as f64).powi(k as i32 - 1) / factorial;
    let predicted = scale * (fxy.value + fyx.value);
    let predicted_stderr = scale * (fxy.stderr.powi(2) + fyx.stderr.powi(2)).sqrt();

    Ok(ConditionalMeanReport {
        n,
        positions: (i, j),
        conditional_mean: est[0],
        predicted,
        predicted_stderr,
        relative_deviation: (est[0].value - predicted).abs() / predicted,
        both_max,
        both_bound: (k * k) as f64 * (n as f64).powi(k as i32 - 2),
    })
}

// ---------------------------------------------------------------------------
// fixed point probabilities
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub n: usize,
    /// Exact `P[σ(i_s) = j_s for all s]`, as a float and as `p/q`.
    pub exact: f64,
    pub exact_rational: String,
    /// `p1^r ((1-p1)/n)^{m-r}` with `p1 = m_1(λ)/n`.
    pub predicted: f64,
    /// `exact / predicted`; `None` when the prediction vanishes.
    pub ratio: Option<f64>,
}

/// Compares the exact probability `P[∀s, σ(i_s) = j_s]` on `C_λ` with the
/// product approximation it converges to. Requires distinct `i`'s,
/// distinct `j`'s and no cross-coincidence `i_s = j_t` for `s ≠ t`.
pub fn fixed_point_probability_check(
    lambda: &IntegerPartition,
    i_list: &[usize],
    j_list: &[usize],
) -> Result<FixedPointReport> {
    let n = lambda.n();
    let m = i_list.len();
    if j_list.len() != m || m == 0 {
        return Err(Error::SizeMismatch {
            left: m,
            right: j_list.len(),
        });
    }
    for s in 0..m {
        for t in 0..m {
            if s != t
                && (i_list[s] == i_list[t] || j_list[s] == j_list[t] || i_list[s] == j_list[t])
            {
                return Err(Error::Constraint(
                    "need distinct i's, distinct j's and no cross coincidence".into(),
                ));
            }
        }
    }
    let pairs: Vec<(usize, usize)> = i_list.iter().copied().zip(j_list.iter().copied()).collect();
    let alpha = EdgeMultiset::new(n, pairs)?;
    let engine = ClassCumulants::new(lambda)?;
    let exact = engine.joint_moment(&alpha)?;
    let exact_f = num_traits::ToPrimitive::to_f64(&exact).unwrap_or(f64::NAN);

    let p1 = lambda.multiplicity(1) as f64 / n as f64;
    let fixed = (0..m).filter(|&s| i_list[s] == j_list[s]).count();
    let predicted = p1.powi(fixed as i32) * ((1.0 - p1) / n as f64).powi((m - fixed) as i32);
    Ok(FixedPointReport {
        n,
        exact: exact_f,
        exact_rational: exact.to_string(),
        predicted,
        ratio: (predicted != 0.0).then_some(exact_f / predicted),
    })
}
