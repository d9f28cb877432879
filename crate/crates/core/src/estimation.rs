//! Monte Carlo estimation of `θ_r(β)`, the critical intensity, the
//! subcritical decay rate and the near-critical linear lower bound.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::build;
use crate::connection::{ConnectionFamily, MarkLaw};
use crate::error::{Error, Result};
use crate::geometry::{window_for_radius, CubeGrid};
use crate::graphs::origin_reach;
use crate::sampler::sample;
use crate::stats::{quantile, weighted_fit, Estimate, LineFit};
use crate::stream::{derive_seed, rng_for};

const SWEEP_TAG: u64 = 0x53_5745_4550; // "SWEEP"
const BOOT_TAG: u64 = 0x424F_4F54; // "BOOT"

/// One-arm exponent of two-dimensional percolation.
pub const ONE_ARM_2D: f64 = 5.0 / 48.0;

/// Connection family, mark law and ambient dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub family: ConnectionFamily,
    pub law: MarkLaw,
    pub dim: usize,
}

impl Model {
    pub fn new(family: ConnectionFamily, law: MarkLaw, dim: usize) -> Self {
        Self { family, law, dim }
    }

    pub fn grid(&self) -> Result<CubeGrid> {
        CubeGrid::new(self.dim, self.family.cutoff)
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        self.family.check_marks(&self.law)?;
        self.grid().map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub beta: f64,
    pub r: f64,
    pub q: usize,
    #[serde(flatten)]
    pub estimate: Estimate,
}

/// `θ̂_r(β)` over a grid of intensities, radii and levels `q`.
///
/// Replicate `k` at intensity index `b` uses the seed derived from
/// `(master_seed, b, k)` and is shared by every radius and level, so the
/// estimates are exactly monotone in `r` and in `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub model: Model,
    pub betas: Vec<f64>,
    pub radii: Vec<f64>,
    pub qs: Vec<usize>,
    pub n: u64,
    pub master_seed: u64,
    /// Ordered by intensity, then radius, then level.
    pub cells: Vec<SweepCell>,
    /// Origin reach per (intensity, replicate, level).
    #[serde(skip)]
    reach: Vec<Option<f64>>,
}

impl SweepResult {
    fn reach_at(&self, b: usize, k: usize, qi: usize) -> Option<f64> {
        self.reach[(b * self.n as usize + k) * self.qs.len() + qi]
    }

    /// Whether `B_r` occurred in replicate `k`.
    pub fn indicator(&self, b: usize, k: usize, ri: usize, qi: usize) -> bool {
        self.reach_at(b, k, qi).is_some_and(|x| x > self.radii[ri])
    }

    pub fn cell(&self, b: usize, ri: usize, qi: usize) -> &SweepCell {
        &self.cells[(b * self.radii.len() + ri) * self.qs.len() + qi]
    }

    pub fn theta(&self, b: usize, ri: usize, qi: usize) -> f64 {
        self.cell(b, ri, qi).estimate.p_hat
    }
}

/// Estimates `θ_r(β) = P(B_r)` for every combination of the inputs.
pub fn theta_sweep(model: &Model, qs: &[usize], betas: &[f64], radii: &[f64], n: u64, master_seed: u64) -> Result<SweepResult> {
    model.validate()?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if qs.is_empty() || betas.is_empty() || radii.is_empty() {
        return Err(Error::InvalidParameter("empty sweep grid".into()));
    }
    if let Some(&q) = qs.iter().find(|&&q| q >= model.family.alpha) {
        return Err(Error::InvalidParameter(format!("q = {q} must be below alpha = {}", model.family.alpha)));
    }
    if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
        return Err(Error::InvalidParameter(format!("intensity {b} must be finite and non-negative")));
    }
    if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::InvalidParameter(format!("radius {r} must be positive")));
    }
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    let window = window_for_radius(r_max, model.grid()?, model.family.cutoff)?;
    let per_replicate: Vec<Vec<Option<f64>>> = (0..betas.len() * n as usize)
        .into_par_iter()
        .map(|idx| {
            let b = idx / n as usize;
            let k = (idx % n as usize) as u64;
            let seed = derive_seed(master_seed, &[SWEEP_TAG, b as u64, k]);
            let real = sample(seed, betas[b], &window, &model.law, true)?;
            let complex = build(&real, &model.family)?;
            qs.iter().map(|&q| origin_reach(&complex, q)).collect()
        })
        .collect::<Result<_>>()?;
    let reach: Vec<Option<f64>> = per_replicate.into_iter().flatten().collect();

    let mut result = SweepResult {
        model: model.clone(),
        betas: betas.to_vec(),
        radii: radii.to_vec(),
        qs: qs.to_vec(),
        n,
        master_seed,
        cells: Vec::new(),
        reach,
    };
    let mut cells = Vec::with_capacity(betas.len() * radii.len() * qs.len());
    for (b, &beta) in betas.iter().enumerate() {
        for (ri, &r) in radii.iter().enumerate() {
            for (qi, &q) in qs.iter().enumerate() {
                let hits = (0..n as usize).filter(|&k| result.indicator(b, k, ri, qi)).count() as u64;
                cells.push(SweepCell {
                    beta,
                    r,
                    q,
                    estimate: Estimate::from_counts(hits, n),
                });
            }
        }
    }
    result.cells = cells;
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalConfig {
    pub r_small: f64,
    pub r_large: f64,
    /// Intensity bracket, sampled at `points` evenly spaced values.
    pub bracket: (f64, f64),
    pub points: usize,
    pub n: u64,
    /// Threshold of the bisection method.
    pub tau: f64,
    /// Exponent `η` of the rescaled curves `r^η θ̂_r` that are crossed.
    pub eta: f64,
    pub resamples: usize,
}

impl CriticalConfig {
    pub fn betas(&self) -> Vec<f64> {
        let (lo, hi) = self.bracket;
        (0..self.points)
            .map(|i| lo + (hi - lo) * i as f64 / (self.points - 1) as f64)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.bracket;
        if !(self.r_small > 0.0 && self.r_small < self.r_large) {
            return Err(Error::InvalidParameter("need 0 < r_small < r_large".into()));
        }
        if !(lo >= 0.0 && lo < hi && hi.is_finite()) || self.points < 2 {
            return Err(Error::InvalidParameter("need a bracket lo < hi with at least two points".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) || !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidParameter("need 0 < tau < 1 and eta >= 0".into()));
        }
        if self.n == 0 || self.resamples == 0 {
            return Err(Error::InvalidParameter("n and resamples must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    CurveCrossing,
    Bisection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodEstimate {
    pub method: Method,
    pub beta_c_hat: f64,
    /// Bootstrap percentile interval (2.5%, 97.5%).
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Bootstrap resamples in which the method found no value.
    pub failed_resamples: usize,
}

impl MethodEstimate {
    pub fn overlaps(&self, other: &MethodEstimate) -> bool {
        self.ci_lo <= other.ci_hi && other.ci_lo <= self.ci_hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalEstimate {
    pub q: usize,
    pub config: CriticalConfig,
    pub crossing: MethodEstimate,
    pub bisection: MethodEstimate,
    pub sweep: SweepResult,
}

impl CriticalEstimate {
    /// Both bootstrap intervals overlap.
    pub fn methods_agree(&self) -> bool {
        self.crossing.overlaps(&self.bisection)
    }
}

/// First upward zero of `r_l^η θ_l − r_s^η θ_s` after its minimum, linearly
/// interpolated.
fn crossing_point(betas: &[f64], small: &[f64], large: &[f64], cfg: &CriticalConfig) -> Option<f64> {
    let ws = cfg.r_small.powf(cfg.eta);
    let wl = cfg.r_large.powf(cfg.eta);
    let f: Vec<f64> = small.iter().zip(large).map(|(s, l)| wl * l - ws * s).collect();
    let m = (0..f.len()).fold(0, |best, i| if f[i] < f[best] { i } else { best });
    if f[m] >= 0.0 {
        return None;
    }
    (m..f.len() - 1)
        .find(|&k| f[k + 1] >= 0.0)
        .map(|k| betas[k] + (betas[k + 1] - betas[k]) * (-f[k]) / (f[k + 1] - f[k]))
}

/// Smallest intensity where the piecewise-linear `θ̂_{r_large}` exceeds `τ`.
fn threshold_point(betas: &[f64], large: &[f64], tau: f64) -> Option<f64> {
    let k = large.iter().position(|&t| t > tau)?;
    if k == 0 {
        return None;
    }
    let (b0, b1, t0, t1) = (betas[k - 1], betas[k], large[k - 1], large[k]);
    Some(b0 + (b1 - b0) * (tau - t0) / (t1 - t0))
}

fn summarize(method: Method, point: Option<f64>, mut boot: Vec<f64>, resamples: usize, lo: f64, hi: f64, why: &str) -> Result<MethodEstimate> {
    let beta_c_hat = point.ok_or_else(|| Error::NoCrossing {
        lo,
        hi,
        reason: why.to_string(),
    })?;
    let failed = resamples - boot.len();
    boot.sort_by(f64::total_cmp);
    let (ci_lo, ci_hi) = if boot.is_empty() {
        (beta_c_hat, beta_c_hat)
    } else {
        (quantile(&boot, 0.025), quantile(&boot, 0.975))
    };
    Ok(MethodEstimate {
        method,
        beta_c_hat,
        ci_lo,
        ci_hi,
        failed_resamples: failed,
    })
}

/// Estimates `β_c^(q)` by two methods on one sweep over the bracket.
///
/// Curve crossing locates where `r_large^η θ̂_{r_large}` overtakes
/// `r_small^η θ̂_{r_small}`; bisection locates where `θ̂_{r_large}` first
/// exceeds `τ`. Intervals come from resampling replicates within each
/// intensity, keeping each replicate's pair of indicators together.
pub fn estimate_beta_c(model: &Model, q: usize, cfg: &CriticalConfig, master_seed: u64) -> Result<CriticalEstimate> {
    cfg.validate()?;
    let betas = cfg.betas();
    let sweep = theta_sweep(model, &[q], &betas, &[cfg.r_small, cfg.r_large], cfg.n, master_seed)?;
    let n = cfg.n as usize;
    let nb = betas.len();
    let small: Vec<f64> = (0..nb).map(|b| sweep.theta(b, 0, 0)).collect();
    let large: Vec<f64> = (0..nb).map(|b| sweep.theta(b, 1, 0)).collect();
    // 0 = neither, 1 = small only, 3 = both (large implies small)
    let codes: Vec<Vec<u8>> = (0..nb)
        .map(|b| {
            (0..n)
                .map(|k| sweep.indicator(b, k, 0, 0) as u8 | (sweep.indicator(b, k, 1, 0) as u8) << 1)
                .collect()
        })
        .collect();

    let mut rng = rng_for(master_seed, &[BOOT_TAG, q as u64]);
    let mut boot_cross = Vec::with_capacity(cfg.resamples);
    let mut boot_bisect = Vec::with_capacity(cfg.resamples);
    let mut s = vec![0.0; nb];
    let mut l = vec![0.0; nb];
    for _ in 0..cfg.resamples {
        for b in 0..nb {
            let (mut cs, mut cl) = (0u64, 0u64);
            for _ in 0..n {
                let c = codes[b][rng.random_range(0..n)];
                cs += (c & 1) as u64;
                cl += (c >> 1) as u64;
            }
            s[b] = cs as f64 / n as f64;
            l[b] = cl as f64 / n as f64;
        }
        if let Some(x) = crossing_point(&betas, &s, &l, cfg) {
            boot_cross.push(x);
        }
        if let Some(x) = threshold_point(&betas, &l, cfg.tau) {
            boot_bisect.push(x);
        }
    }
    let (lo, hi) = cfg.bracket;
    let crossing = summarize(
        Method::CurveCrossing,
        crossing_point(&betas, &small, &large, cfg),
        boot_cross,
        cfg.resamples,
        lo,
        hi,
        "rescaled curves do not cross",
    )?;
    let bisection = summarize(
        Method::Bisection,
        threshold_point(&betas, &large, cfg.tau),
        boot_bisect,
        cfg.resamples,
        lo,
        hi,
        "theta at r_large does not pass tau inside the bracket",
    )?;
    Ok(CriticalEstimate {
        q,
        config: cfg.clone(),
        crossing,
        bisection,
        sweep,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    pub r: f64,
    #[serde(flatten)]
    pub estimate: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub beta: f64,
    pub q: usize,
    pub points: Vec<DecayPoint>,
    /// Radii with `θ̂_r = 0`, left out of the regression.
    pub excluded: Vec<f64>,
    /// Fit of `ln θ̂_r` against `r`; `None` when fewer than two radii remain.
    pub fit: Option<LineFit>,
    /// `c(β) = −slope`.
    pub decay_rate: Option<f64>,
    /// Negative slope, `R² ≥ 0.95`, and at least one e-fold of decay
    /// across the fitted radii.
    pub exponential: bool,
}

/// Fits `ln θ̂_r ≈ a − c r` by weighted least squares with weights
/// `n θ̂ / (1 − θ̂)`, the inverse delta-method variances.
pub fn decay_fit(model: &Model, q: usize, beta: f64, r_grid: &[f64], n: u64, master_seed: u64) -> Result<DecayFit> {
    if r_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("r_grid must be strictly increasing".into()));
    }
    if r_grid.first().is_some_and(|&r| r < model.family.cutoff) {
        return Err(Error::InvalidParameter("radii must be at least the cutoff D".into()));
    }
    let sweep = theta_sweep(model, &[q], &[beta], r_grid, n, master_seed)?;
    let points: Vec<DecayPoint> = (0..r_grid.len())
        .map(|ri| DecayPoint {
            r: r_grid[ri],
            estimate: sweep.cell(0, ri, 0).estimate,
        })
        .collect();
    let used: Vec<&DecayPoint> = points.iter().filter(|p| p.estimate.successes > 0).collect();
    let excluded = points.iter().filter(|p| p.estimate.successes == 0).map(|p| p.r).collect();
    let x: Vec<f64> = used.iter().map(|p| p.r).collect();
    let y: Vec<f64> = used.iter().map(|p| p.estimate.p_hat.ln()).collect();
    let w: Vec<f64> = used
        .iter()
        .map(|p| {
            let t = p.estimate.p_hat;
            n as f64 * t / (1.0 - t).max(0.5 / n as f64)
        })
        .collect();
    let fit = weighted_fit(&x, &y, &w);
    let exponential = fit.is_some_and(|f| {
        let span = x.last().unwrap() - x.first().unwrap();
        f.slope < 0.0 && f.r_squared >= 0.95 && -f.slope * span >= 1.0
    });
    Ok(DecayFit {
        beta,
        q,
        points,
        excluded,
        decay_rate: fit.map(|f| -f.slope),
        fit,
        exponential,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearCriticalPoint {
    pub beta: f64,
    #[serde(flatten)]
    pub estimate: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearCritical {
    pub beta_c: f64,
    pub r_proxy: f64,
    pub points: Vec<NearCriticalPoint>,
    /// Largest `c` with `θ̂(β) ≥ c (β − β̂_c)` on the grid.
    pub c_hat: Option<f64>,
    /// Largest `c` with `θ̂(β) − 2 SE ≥ c (β − β̂_c)` on the grid.
    pub c_lo: Option<f64>,
    /// `c_lo > 0`: a positive linear lower bound survives two standard
    /// errors at every grid point.
    pub verdict: bool,
}

/// Checks the linear lower bound `θ_∞(β) ≥ c (β − β_c)` with `θ̂_{R}` as the
/// proxy for `θ_∞`.
pub fn near_critical_slope(
    model: &Model,
    q: usize,
    beta_grid: &[f64],
    beta_c: f64,
    r_proxy: f64,
    n: u64,
    master_seed: u64,
) -> Result<NearCritical> {
    if !(beta_c > 0.0 && beta_c.is_finite()) {
        return Err(Error::InvalidParameter("beta_c must be positive".into()));
    }
    if let Some(b) = beta_grid.iter().find(|&&b| b < beta_c) {
        return Err(Error::InvalidParameter(format!("grid point {b} lies below beta_c = {beta_c}")));
    }
    if r_proxy < model.family.cutoff {
        return Err(Error::InvalidParameter("R_proxy must be at least the cutoff D".into()));
    }
    let sweep = theta_sweep(model, &[q], beta_grid, &[r_proxy], n, master_seed)?;
    let points: Vec<NearCriticalPoint> = beta_grid
        .iter()
        .enumerate()
        .map(|(b, &beta)| NearCriticalPoint {
            beta,
            estimate: sweep.cell(b, 0, 0).estimate,
        })
        .collect();
    let above: Vec<&NearCriticalPoint> = points.iter().filter(|p| p.beta > beta_c).collect();
    let min_ratio = |f: &dyn Fn(&Estimate) -> f64| {
        above
            .iter()
            .map(|p| f(&p.estimate) / (p.beta - beta_c))
            .reduce(f64::min)
    };
    let c_hat = min_ratio(&|e| e.p_hat);
    let c_lo = min_ratio(&|e| e.p_hat - 2.0 * e.se());
    Ok(NearCritical {
        beta_c,
        r_proxy,
        points,
        c_hat,
        c_lo,
        verdict: c_lo.is_some_and(|c| c > 0.0),
    })
}
