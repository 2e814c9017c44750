//! Camera-based squeezing measurement: frame simulation, cumulative pixel
//! integration, quadratic variance fits and squeezing extraction.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{check_range, QpbError, Result};
use crate::gaussian::StateParams;
use crate::photon::{pmf, CountSampler, CutoffPolicy};
use crate::rng::stream_rng;

/// Photon numbers above which frame totals are drawn from a Gaussian.
pub const EXACT_SAMPLING_LIMIT: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraConfig {
    pub n_alpha: f64,
    pub n_s: f64,
    /// Displacement phase relative to the squeezing axis (0 squeezed, π/2 anti-squeezed).
    pub phi: f64,
    pub rows: usize,
    pub cols: usize,
    pub n_frames: usize,
    pub seed: u64,
}

impl CameraConfig {
    pub fn new(n_alpha: f64, n_s: f64, phi: f64, seed: u64) -> Self {
        Self { n_alpha, n_s, phi, rows: 32, cols: 32, n_frames: 10_000, seed }
    }

    pub fn validate(&self) -> Result<()> {
        check_range("n_alpha", self.n_alpha, 0.0, f64::INFINITY)?;
        check_range("n_s", self.n_s, 0.0, f64::INFINITY)?;
        check_range("phi", self.phi, 0.0, 2.0 * std::f64::consts::PI)?;
        if self.rows == 0 || self.cols == 0 {
            return Err(QpbError::Empty("pixel grid"));
        }
        if self.n_frames < 2 {
            return Err(QpbError::EnsembleTooSmall { found: self.n_frames, required: 2 });
        }
        Ok(())
    }

    /// The displaced squeezed vacuum entering the camera.
    pub fn state(&self) -> StateParams {
        StateParams::Dsv { alpha: self.n_alpha.sqrt(), phi: self.phi, r: self.n_s.sqrt().asinh(), theta: 0.0 }
    }

    pub fn pixels(&self) -> usize {
        self.rows * self.cols
    }
}

/// The coefficient of `η²` in the detected variance.
fn eta2_coefficient(n_alpha: f64, n_s: f64, phi: f64) -> f64 {
    2.0 * n_alpha * n_s + n_s + 2.0 * n_s * n_s - 2.0 * (2.0 * phi).cos() * n_alpha * (n_s * (n_s + 1.0)).sqrt()
}

/// Mean and variance of photon counts after a loss of transmissivity `eta`.
pub fn dsv_detected_moments(n_alpha: f64, n_s: f64, phi: f64, eta: f64) -> Result<(f64, f64)> {
    check_range("eta", eta, 0.0, 1.0)?;
    check_range("n_alpha", n_alpha, 0.0, f64::INFINITY)?;
    check_range("n_s", n_s, 0.0, f64::INFINITY)?;
    let mean = eta * (n_alpha + n_s);
    Ok((mean, mean + eta * eta * eta2_coefficient(n_alpha, n_s, phi)))
}

/// Coefficients `(a0, a1, a2)` of the noiseless variance-versus-mean curve,
/// parametric in the transmissivity.
pub fn analytic_coefficients(n_alpha: f64, n_s: f64, phi: f64) -> (f64, f64, f64) {
    let n = n_alpha + n_s;
    if n == 0.0 {
        return (0.0, 1.0, 0.0);
    }
    (0.0, 1.0, eta2_coefficient(n_alpha, n_s, phi) / (n * n))
}

/// Per-pixel photon counts of many frames, stored frame-major and row-major within a frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameEnsemble {
    pub rows: usize,
    pub cols: usize,
    pub counts: Vec<u32>,
}

impl FrameEnsemble {
    pub fn n_frames(&self) -> usize {
        self.counts.len() / (self.rows * self.cols)
    }

    pub fn frame(&self, k: usize) -> &[u32] {
        let p = self.rows * self.cols;
        &self.counts[k * p..(k + 1) * p]
    }

    pub fn totals(&self) -> Vec<u64> {
        (0..self.n_frames()).map(|k| self.frame(k).iter().map(|&c| c as u64).sum()).collect()
    }
}

/// Draws frame totals from the photon statistics of the state and scatters
/// the photons uniformly over the pixels. Frame `k` uses stream `k`.
pub fn simulate_frames(cfg: &CameraConfig) -> Result<FrameEnsemble> {
    cfg.validate()?;
    let state = cfg.state();
    let n_alpha_s = cfg.n_alpha + cfg.n_s;
    let var = cfg.n_alpha + eta2_coefficient(cfg.n_alpha, cfg.n_s, cfg.phi) + cfg.n_s;
    let total_sampler = if n_alpha_s + 10.0 * var.max(0.0).sqrt() <= EXACT_SAMPLING_LIMIT {
        TotalSampler::Exact(CountSampler::new(&pmf(state, CutoffPolicy::Adaptive)?))
    } else {
        TotalSampler::Gaussian { mean: n_alpha_s, sd: var.max(0.0).sqrt() }
    };
    let pixels = cfg.pixels();
    let frames: Vec<Vec<u32>> = (0..cfg.n_frames as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(cfg.seed, k);
            let total = total_sampler.draw(&mut rng);
            scatter(total, pixels, &mut rng)
        })
        .collect::<Result<_>>()?;
    Ok(FrameEnsemble { rows: cfg.rows, cols: cfg.cols, counts: frames.concat() })
}

enum TotalSampler {
    Exact(CountSampler),
    Gaussian { mean: f64, sd: f64 },
}

impl TotalSampler {
    fn draw<R: Rng>(&self, rng: &mut R) -> u64 {
        match self {
            TotalSampler::Exact(s) => s.draw(rng) as u64,
            TotalSampler::Gaussian { mean, sd } => {
                let z: f64 = StandardNormal.sample(rng);
                (mean + sd * z).round().max(0.0) as u64
            }
        }
    }
}

/// Uniform multinomial assignment through sequential binomial draws.
fn scatter<R: Rng>(total: u64, pixels: usize, rng: &mut R) -> Result<Vec<u32>> {
    let mut out = vec![0u32; pixels];
    let mut left = total;
    for (i, slot) in out.iter_mut().enumerate() {
        if left == 0 {
            break;
        }
        let remaining = pixels - i;
        let k = if remaining == 1 {
            left
        } else {
            Binomial::new(left, 1.0 / remaining as f64).map_err(|e| QpbError::Inconsistent(e.to_string()))?.sample(rng)
        };
        *slot = u32::try_from(k).map_err(|_| QpbError::OutOfRange { name: "pixel count", value: k as f64 })?;
        left -= k;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupPoint {
    pub mean: f64,
    pub variance: f64,
}

/// For each `k`, the mean and sample variance over frames of the counts summed
/// over the first `k` pixels in row-major order.
pub fn integrate_pixels(ens: &FrameEnsemble) -> Result<Vec<GroupPoint>> {
    let n = ens.n_frames();
    if n < 2 {
        return Err(QpbError::EnsembleTooSmall { found: n, required: 2 });
    }
    let pixels = ens.rows * ens.cols;
    let cumulative = |k: usize| -> Vec<f64> {
        let mut acc = 0u64;
        ens.frame(k)
            .iter()
            .map(|&c| {
                acc += c as u64;
                acc as f64
            })
            .collect()
    };
    let mut means = vec![0.0; pixels];
    for k in 0..n {
        for (m, v) in means.iter_mut().zip(cumulative(k)) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n as f64);
    let mut ss = vec![0.0; pixels];
    for k in 0..n {
        for ((s, v), m) in ss.iter_mut().zip(cumulative(k)).zip(&means) {
            *s += (v - m).powi(2);
        }
    }
    Ok(means.into_iter().zip(ss).map(|(mean, s)| GroupPoint { mean, variance: s / (n - 1) as f64 }).collect())
}

/// Coefficients of `variance = a0 + a1·m + a2·m²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFit {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl QuadraticFit {
    pub fn eval(&self, m: f64) -> f64 {
        self.a0 + self.a1 * m + self.a2 * m * m
    }
}

/// Inverse variances of the group variances, `(N − 1) / (2 V²)`, for Gaussian-like counts over `n_frames` frames.
pub fn variance_weights(points: &[GroupPoint], n_frames: usize) -> Vec<f64> {
    let dof = n_frames.saturating_sub(1) as f64;
    points.iter().map(|p| if p.variance > 0.0 { dof / (2.0 * p.variance * p.variance) } else { 0.0 }).collect()
}

/// Least-squares quadratic through the points; `weights` gives a weighted fit.
pub fn fit_variance_curve(points: &[GroupPoint], weights: Option<&[f64]>) -> Result<QuadraticFit> {
    if points.len() < 3 {
        return Err(QpbError::RankDeficient);
    }
    let scale = points.iter().map(|p| p.mean.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(QpbError::RankDeficient);
    }
    let n = points.len();
    let w = |i: usize| weights.map_or(1.0, |w| w[i].max(0.0).sqrt());
    let a = DMatrix::from_fn(n, 3, |i, j| w(i) * (points[i].mean / scale).powi(j as i32));
    let b = DVector::from_fn(n, |i, _| w(i) * points[i].variance);
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    if sv.min() <= 1e-12 * sv.max() {
        return Err(QpbError::RankDeficient);
    }
    let x = svd.solve(&b, 0.0).map_err(|_| QpbError::RankDeficient)?;
    Ok(QuadraticFit { a0: x[0], a1: x[1] / scale, a2: x[2] / (scale * scale) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqueezingEstimate {
    pub n_s: f64,
    pub r: f64,
    /// Squared relative residual of the two curvature coefficients.
    pub residual: f64,
}

/// Recovers the squeezing photon number from the curves measured at φ = 0 and
/// φ = π/2 by least squares on their curvature coefficients.
pub fn estimate_squeezing(fit0: &QuadraticFit, fit90: &QuadraticFit, n_alpha: f64) -> Result<SqueezingEstimate> {
    check_range("n_alpha", n_alpha, 0.0, f64::INFINITY)?;
    for fit in [fit0, fit90] {
        if (fit.a1 - 1.0).abs() > 0.25 {
            return Err(QpbError::Inconsistent(format!("linear coefficient {:.4} is far from 1", fit.a1)));
        }
    }
    let spread = fit0.a2.abs() + fit90.a2.abs();
    if fit0.a2 - fit90.a2 > 0.1 * spread + 1e-15 {
        return Err(QpbError::Inconsistent("the squeezed curve lies above the anti-squeezed one".into()));
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    let cost = |n_s: f64| {
        let (_, _, c0) = analytic_coefficients(n_alpha, n_s, 0.0);
        let (_, _, c90) = analytic_coefficients(n_alpha, n_s, half_pi);
        (c0 - fit0.a2).powi(2) + (c90 - fit90.a2).powi(2)
    };
    let mut grid: Vec<f64> = vec![0.0];
    grid.extend((0..=400).map(|k| 10f64.powf(-6.0 + 9.0 * k as f64 / 400.0)));
    let best = (0..grid.len()).min_by(|&a, &b| cost(grid[a]).partial_cmp(&cost(grid[b])).unwrap()).unwrap();
    let lo = if best == 0 { 0.0 } else { grid[best - 1] };
    let hi = grid[(best + 1).min(grid.len() - 1)];
    let (mut a, mut b) = (lo, hi);
    let inv = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let c = b - inv * (b - a);
        let d = a + inv * (b - a);
        if cost(c) < cost(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let mut n_s = 0.5 * (a + b);
    if cost(grid[best]) < cost(n_s) {
        n_s = grid[best];
    }
    let residual = cost(n_s) / (fit0.a2.powi(2) + fit90.a2.powi(2)).max(1e-300);
    Ok(SqueezingEstimate { n_s, r: n_s.sqrt().asinh(), residual })
}
