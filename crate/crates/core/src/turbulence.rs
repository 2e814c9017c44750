//! Kolmogorov phase screens, turbulence-strength estimation, iterative mask
//! correction, crosstalk matrices and mutual information.

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{check_range, QpbError, Result};
use crate::fft::{angular_frequencies, mean_of, Fft2};
use crate::modes::{overlap, ComplexField, GridSpec};
use crate::rng::{stream_rng, substream};

/// Converts a structure constant in units of 1e-13 mm^(-2/3) to m^(-2/3).
pub fn cn2_from_paper_units(value: f64) -> f64 {
    value * 1e-13 * 1e2
}

/// Converts a structure constant in m^(-2/3) to units of 1e-13 mm^(-2/3).
pub fn cn2_to_paper_units(value: f64) -> f64 {
    value / 1e-11
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceSpec {
    /// Refractive-index structure constant in m^(-2/3).
    pub cn2: f64,
    /// Path length in metres.
    pub distance: f64,
    pub wavelength: f64,
    /// Outer scale `L0` in metres.
    pub outer_scale: f64,
    /// Inner scale `l0` in metres.
    pub inner_scale: f64,
}

impl TurbulenceSpec {
    /// Spec with the default outer (50 m) and inner (5 mm) scales.
    pub fn new(cn2: f64, distance: f64, wavelength: f64) -> Result<Self> {
        let s = Self { cn2, distance, wavelength, outer_scale: 50.0, inner_scale: 5e-3 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        check_range("cn2", self.cn2, 0.0, f64::INFINITY)?;
        check_range("distance", self.distance, f64::MIN_POSITIVE, f64::INFINITY)?;
        check_range("wavelength", self.wavelength, f64::MIN_POSITIVE, f64::INFINITY)?;
        check_range("outer_scale", self.outer_scale, f64::MIN_POSITIVE, f64::INFINITY)?;
        check_range("inner_scale", self.inner_scale, f64::MIN_POSITIVE, f64::INFINITY)
    }

    pub fn k0(&self) -> f64 {
        2.0 * PI / self.outer_scale
    }

    pub fn km(&self) -> f64 {
        5.92 / self.inner_scale
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// Fried parameter `r0 = (0.423 k² Cn² d)^(-3/5)`; infinite without turbulence.
    pub fn fried_parameter(&self) -> f64 {
        (0.423 * self.wavenumber().powi(2) * self.cn2 * self.distance).powf(-0.6)
    }

    /// Phase power spectral density at angular spatial frequency `k`.
    pub fn spectrum(&self, k: f64) -> f64 {
        if self.cn2 == 0.0 {
            return 0.0;
        }
        let k2 = k * k;
        0.023
            * self.fried_parameter().powf(-5.0 / 3.0)
            * (k2 + self.k0().powi(2)).powf(-11.0 / 6.0)
            * (-k2 / self.km().powi(2)).exp()
    }
}

/// Real phase screen in radians with zero spatial mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScreen {
    pub data: Array2<f64>,
    pub grid: GridSpec,
    pub spec: TurbulenceSpec,
    pub seed: u64,
    pub stream: u64,
}

impl PhaseScreen {
    pub fn variance(&self) -> f64 {
        self.data.mapv(|v| v * v).mean().unwrap_or(0.0)
    }
}

/// Draws a screen from stream 0 of `seed`.
pub fn kolmogorov_screen(spec: &TurbulenceSpec, grid: GridSpec, seed: u64) -> Result<PhaseScreen> {
    kolmogorov_screen_stream(spec, grid, seed, 0)
}

/// Spectral screen `Re[Σ_κ c_κ √φ(κ) √(Δκx Δκy) e^{iκ·x}]` with `c_κ = n₁ + i n₂`
/// drawn from unit normals. With this scaling the periodogram
/// `|DFT(Φ)|² / (rows·cols)² / (Δκx Δκy)` has expectation `φ(κ)`.
pub fn kolmogorov_screen_stream(spec: &TurbulenceSpec, grid: GridSpec, seed: u64, stream: u64) -> Result<PhaseScreen> {
    spec.validate()?;
    let dx = grid.pitch();
    let nyquist = PI / dx;
    if nyquist < spec.km() {
        return Err(QpbError::GridTooCoarse { nyquist, km: spec.km() });
    }
    let (rows, cols) = grid.dim();
    let kx = angular_frequencies(cols, dx);
    let ky = angular_frequencies(rows, dx);
    let dk = (2.0 * PI / (cols as f64 * dx)) * (2.0 * PI / (rows as f64 * dx));
    let mut rng = stream_rng(seed, stream);
    let mut spectrum = Array2::from_shape_fn((rows, cols), |(i, j)| {
        let amp = (spec.spectrum((kx[j] * kx[j] + ky[i] * ky[i]).sqrt()) * dk).sqrt();
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im) * amp
    });
    // The piston term only adds a constant, which is removed below anyway.
    spectrum[(0, 0)] = Complex64::new(0.0, 0.0);
    Fft2::new(rows, cols).inverse(&mut spectrum);
    let mut data = spectrum.mapv(|z| z.re);
    let mean = data.mean().unwrap_or(0.0);
    data.mapv_inplace(|v| v - mean);
    Ok(PhaseScreen { data, grid, spec: *spec, seed, stream })
}

/// Imprints the screen on a field; the norm is unchanged.
pub fn apply_screen(field: &ComplexField, screen: &PhaseScreen) -> Result<ComplexField> {
    if field.grid != screen.grid {
        return Err(QpbError::DimensionMismatch { expected: field.data.len(), found: screen.data.len() });
    }
    field.with_phase(&screen.data)
}

/// Free-space transfer function between two planes, applied by FFT.
#[derive(Clone)]
pub struct Propagator {
    h: Array2<Complex64>,
    h_inv: Array2<Complex64>,
    plan: Fft2,
    pub distance: f64,
}

/// Regularization in `1/H → H*/(|H|² + ε)`.
pub const INVERSE_EPS: f64 = 1e-6;

impl Propagator {
    /// Fresnel transfer function `exp(−i z (kx² + ky²) / 2k)`. A zero distance gives `H = 1`.
    pub fn fresnel(grid: GridSpec, wavelength: f64, distance: f64) -> Self {
        let k = 2.0 * PI / wavelength;
        let kx = angular_frequencies(grid.cols, grid.pitch());
        let ky = angular_frequencies(grid.rows, grid.pitch());
        let h = Array2::from_shape_fn(grid.dim(), |(i, j)| {
            Complex64::from_polar(1.0, -distance * (kx[j] * kx[j] + ky[i] * ky[i]) / (2.0 * k))
        });
        let h_inv = h.mapv(|z| z.conj() / (z.norm_sqr() + INVERSE_EPS));
        Self { h, h_inv, plan: Fft2::new(grid.rows, grid.cols), distance }
    }

    pub fn unity(grid: GridSpec) -> Self {
        Self::fresnel(grid, 1.0, 0.0)
    }

    pub fn forward(&self, data: &Array2<Complex64>) -> Array2<Complex64> {
        self.filter(data, &self.h)
    }

    pub fn backward(&self, data: &Array2<Complex64>) -> Array2<Complex64> {
        self.filter(data, &self.h_inv)
    }

    fn filter(&self, data: &Array2<Complex64>, kernel: &Array2<Complex64>) -> Array2<Complex64> {
        let mut c = data.clone();
        self.plan.forward(&mut c);
        c *= kernel;
        self.plan.inverse(&mut c);
        let n = c.len() as f64;
        c.mapv_inplace(|z| z / n);
        c
    }

    /// Camera-plane intensity of `field·e^{iΦ}`.
    pub fn observe(&self, field: &ComplexField, phase: &Array2<f64>) -> Result<Array2<f64>> {
        let u = field.with_phase(phase)?;
        Ok(self.forward(&u.data).mapv(|z| z.norm_sqr()))
    }
}

/// Minimum number of frames accepted by the strength estimator.
pub const MIN_FRAMES: usize = 20;

/// Radially binned power spectrum of an intensity map normalized to unit sum.
pub fn radial_intensity_spectrum(plan: &Fft2, intensity: &Array2<f64>) -> Vec<f64> {
    let total: f64 = intensity.sum();
    let scale = if total > 0.0 { 1.0 / total } else { 0.0 };
    let mut c = intensity.mapv(|v| Complex64::new(v * scale, 0.0));
    plan.forward(&mut c);
    let (rows, cols) = intensity.dim();
    let nbins = rows.min(cols) / 2;
    let mut sums = vec![0.0; nbins];
    let mut counts = vec![0usize; nbins];
    for ((i, j), z) in c.indexed_iter() {
        let fi = if i <= rows / 2 { i as f64 } else { i as f64 - rows as f64 };
        let fj = if j <= cols / 2 { j as f64 } else { j as f64 - cols as f64 };
        let b = (fi * fi + fj * fj).sqrt().round() as usize;
        if b < nbins {
            sums[b] += z.norm_sqr();
            counts[b] += 1;
        }
    }
    sums.iter().zip(&counts).map(|(s, &n)| s / n.max(1) as f64).collect()
}

fn ensemble_spectrum(plan: &Fft2, frames: &[Array2<f64>]) -> Vec<f64> {
    let spectra: Vec<Vec<f64>> = frames.iter().map(|f| radial_intensity_spectrum(plan, f)).collect();
    let n = spectra.len() as f64;
    (0..spectra[0].len()).map(|b| spectra.iter().map(|s| s[b]).sum::<f64>() / n).collect()
}

/// Grid-search estimator of `Cn²` from camera-plane intensity frames.
///
/// Each candidate is represented by a library of simulated frames of the same
/// probe through the same propagation; the candidate whose ensemble-averaged
/// radial spectrum is closest in log space wins.
pub struct Cn2Estimator {
    pub probe: ComplexField,
    pub propagator: Propagator,
    pub base: TurbulenceSpec,
    pub template_frames: usize,
    pub seed: u64,
}

impl Cn2Estimator {
    /// Simulated camera frames for one structure constant.
    pub fn simulate(&self, cn2: f64, frames: usize, seed: u64) -> Result<Vec<Array2<f64>>> {
        let spec = TurbulenceSpec { cn2, ..self.base };
        (0..frames as u64)
            .into_par_iter()
            .map(|i| {
                let s = kolmogorov_screen_stream(&spec, self.probe.grid, seed, i)?;
                self.propagator.observe(&self.probe, &s.data)
            })
            .collect()
    }

    /// Returns the candidate (in m^(-2/3)) and the distance to every candidate.
    pub fn estimate(&self, observed: &[Array2<f64>], candidates: &[f64]) -> Result<(f64, Vec<f64>)> {
        if observed.len() < MIN_FRAMES {
            return Err(QpbError::EnsembleTooSmall { found: observed.len(), required: MIN_FRAMES });
        }
        if candidates.is_empty() {
            return Err(QpbError::Empty("candidate grid"));
        }
        let (rows, cols) = self.probe.grid.dim();
        let plan = Fft2::new(rows, cols);
        let target = ensemble_spectrum(&plan, observed);
        let mut distances = Vec::with_capacity(candidates.len());
        for (ci, &cn2) in candidates.iter().enumerate() {
            let frames = self.simulate(cn2, self.template_frames, substream(self.seed, ci as u64))?;
            let tpl = ensemble_spectrum(&plan, &frames);
            let d: f64 =
                target.iter().zip(&tpl).skip(1).map(|(a, b)| ((a + 1e-300).ln() - (b + 1e-300).ln()).powi(2)).sum();
            distances.push(d);
        }
        let best = distances
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| candidates[i])
            .unwrap();
        Ok((best, distances))
    }
}

/// Starting point for the correction loop.
#[derive(Debug, Clone, Default)]
pub enum GdoInit {
    /// Flat initial estimate.
    #[default]
    Zero,
    /// Mean of `count` screens drawn at the estimated strength.
    EnsembleMean { spec: TurbulenceSpec, count: usize, seed: u64 },
    /// Caller-provided turbulence estimate.
    Given(Array2<f64>),
}

#[derive(Debug, Clone)]
pub struct GdoOptions {
    pub max_iter: usize,
    /// Relative MSE change over `window` iterations below which the loop stops.
    pub tol: f64,
    pub window: usize,
    pub init: GdoInit,
}

impl Default for GdoOptions {
    fn default() -> Self {
        Self { max_iter: 300, tol: 1e-6, window: 10, init: GdoInit::Zero }
    }
}

#[derive(Debug, Clone)]
pub struct GdoResult {
    /// Estimated turbulence phase.
    pub estimate: Array2<f64>,
    /// Mask to display on the correcting modulator, `−estimate` wrapped to `[0, 2π)`.
    pub correction: Array2<f64>,
    /// Mean intensity MSE of the model before each update, in iteration order.
    pub mse_trace: Vec<f64>,
    pub converged: bool,
}

/// Iterative phase retrieval of the turbulence phase from camera intensities.
///
/// Each probe `A_k` (the beam leaving the hologram) is modelled through the
/// current estimate as `U_k = F⁻¹{F[A_k e^{iΦ}]·H}`. The amplitude of `U_k` is
/// replaced by the observed `√I_k`, the result is propagated back with the
/// regularized inverse of `H`, and the new estimate is the angle of
/// `Σ_k B_k·conj(A_k)`.
pub fn gdo_correct(
    probes: &[ComplexField],
    observations: &[Array2<f64>],
    propagator: &Propagator,
    options: &GdoOptions,
) -> Result<GdoResult> {
    let first = probes.first().ok_or(QpbError::Empty("probes"))?;
    if probes.len() != observations.len() {
        return Err(QpbError::DimensionMismatch { expected: probes.len(), found: observations.len() });
    }
    let grid = first.grid;
    for (p, o) in probes.iter().zip(observations) {
        if p.grid != grid || o.dim() != grid.dim() {
            return Err(QpbError::DimensionMismatch { expected: grid.rows * grid.cols, found: o.len() });
        }
    }
    let mut phase = match &options.init {
        GdoInit::Zero => Array2::zeros(grid.dim()),
        GdoInit::Given(p) => {
            if p.dim() != grid.dim() {
                return Err(QpbError::DimensionMismatch { expected: grid.rows * grid.cols, found: p.len() });
            }
            p.clone()
        }
        GdoInit::EnsembleMean { spec, count, seed } => {
            let screens: Vec<Array2<f64>> = (0..*count as u64)
                .map(|i| kolmogorov_screen_stream(spec, grid, *seed, i).map(|s| s.data))
                .collect::<Result<_>>()?;
            mean_of(&screens).ok_or(QpbError::Empty("initial ensemble"))?.mapv(|v| -v)
        }
    };
    let amplitudes: Vec<Array2<f64>> = observations.iter().map(|o| o.mapv(|v| v.max(0.0).sqrt())).collect();
    let mut trace = Vec::with_capacity(options.max_iter + 1);
    let mut converged = false;
    for iter in 0..=options.max_iter {
        let mut acc = Array2::<Complex64>::zeros(grid.dim());
        let mut mse = 0.0;
        for ((probe, obs), amp) in probes.iter().zip(observations).zip(&amplitudes) {
            let u = propagator.forward(&probe.with_phase(&phase)?.data);
            mse += Zip::from(&u).and(obs).fold(0.0, |s, z, &i| s + (z.norm_sqr() - i).powi(2)) / u.len() as f64;
            let mut projected = u;
            Zip::from(&mut projected).and(amp).for_each(|z, &a| {
                let n = z.norm();
                *z = if n > 0.0 { *z * (a / n) } else { Complex64::new(a, 0.0) };
            });
            let back = propagator.backward(&projected);
            Zip::from(&mut acc).and(&back).and(&probe.data).for_each(|s, b, p| *s += b * p.conj());
        }
        mse /= probes.len() as f64;
        trace.push(mse);
        let initial = trace[0];
        if mse > 10.0 * initial && initial > 0.0 {
            return Err(QpbError::Diverged { mse, initial });
        }
        if mse == 0.0 {
            converged = true;
            break;
        }
        if iter >= options.window {
            let past = trace[iter - options.window];
            if (past - mse).abs() <= options.tol * past {
                converged = true;
                break;
            }
        }
        if iter == options.max_iter {
            break;
        }
        phase = acc.mapv(|z| z.arg());
    }
    let correction = phase.mapv(|p| (-p).rem_euclid(2.0 * PI));
    Ok(GdoResult { estimate: phase, correction, mse_trace: trace, converged })
}

/// Conditional detection probabilities `P(detected | sent)` over an OAM alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct CrosstalkMatrix {
    pub alphabet: Vec<i32>,
    /// `probs[(d, s)]`: probability of detecting mode `d` when `s` was sent.
    pub probs: Array2<f64>,
}

impl CrosstalkMatrix {
    /// Builds a matrix after checking that every column is a distribution.
    pub fn new(alphabet: Vec<i32>, probs: Array2<f64>) -> Result<Self> {
        let n = alphabet.len();
        if n == 0 {
            return Err(QpbError::Empty("alphabet"));
        }
        if probs.dim() != (n, n) {
            return Err(QpbError::DimensionMismatch { expected: n * n, found: probs.len() });
        }
        for s in 0..n {
            let col = probs.column(s);
            if col.iter().any(|&p| p < 0.0 || !p.is_finite()) || (col.sum() - 1.0).abs() > 1e-9 {
                return Err(QpbError::Inconsistent(format!("column {s} is not a distribution")));
            }
        }
        Ok(Self { alphabet, probs })
    }

    pub fn identity(alphabet: Vec<i32>) -> Self {
        let n = alphabet.len();
        Self { alphabet, probs: Array2::eye(n) }
    }

    pub fn dim(&self) -> usize {
        self.alphabet.len()
    }

    /// Average probability mass on the diagonal.
    pub fn diagonal_mean(&self) -> f64 {
        self.probs.diag().mean().unwrap_or(0.0)
    }
}

/// Propagates every sent mode through `exp(i·phase)` and projects onto the alphabet.
pub fn crosstalk_matrix(modes: &[(i32, ComplexField)], phase: Option<&Array2<f64>>) -> Result<CrosstalkMatrix> {
    if modes.is_empty() {
        return Err(QpbError::Empty("alphabet"));
    }
    let n = modes.len();
    let columns: Vec<Vec<f64>> = modes
        .par_iter()
        .map(|(_, sent)| {
            let received = match phase {
                Some(p) => sent.with_phase(p)?,
                None => sent.clone(),
            };
            let col: Vec<f64> =
                modes.iter().map(|(_, det)| overlap(det, &received).map(|z| z.norm_sqr())).collect::<Result<_>>()?;
            let total: f64 = col.iter().sum();
            if total <= 0.0 {
                return Err(QpbError::Inconsistent("sent mode has no overlap with the alphabet".into()));
            }
            Ok(col.into_iter().map(|p| p / total).collect())
        })
        .collect::<Result<_>>()?;
    let probs = Array2::from_shape_fn((n, n), |(d, s)| columns[s][d]);
    Ok(CrosstalkMatrix { alphabet: modes.iter().map(|(l, _)| *l).collect(), probs })
}

/// Mutual information in bits per photon for equiprobable sent modes.
pub fn mutual_information(m: &CrosstalkMatrix) -> f64 {
    let n = m.dim();
    let nf = n as f64;
    let mut total = 0.0;
    for d in 0..n {
        let row_sum: f64 = m.probs.row(d).sum();
        for s in 0..n {
            let p = m.probs[(d, s)];
            if p > 0.0 {
                total += p * (p * nf / row_sum).log2();
            }
        }
    }
    total / nf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{lg_field, petal_superposition, BeamGeometry, LgSpec};

    fn spec(cn2_paper: f64) -> TurbulenceSpec {
        TurbulenceSpec::new(cn2_from_paper_units(cn2_paper), 200.0, 633e-9).unwrap()
    }

    #[test]
    fn unit_conversion() {
        assert!((cn2_from_paper_units(60.0) - 6e-10).abs() < 1e-24);
        assert!((cn2_to_paper_units(6e-10) - 60.0).abs() < 1e-12);
    }

    #[test]
    fn fried_parameter_scaling() {
        let s = TurbulenceSpec::new(1e-14, 1000.0, 633e-9).unwrap();
        let k = 2.0 * PI / 633e-9;
        let expected = (0.423 * k * k * 1e-14 * 1000.0f64).powf(-0.6);
        assert!((s.fried_parameter() - expected).abs() < 1e-15);
        assert!((s.fried_parameter() - 0.0274).abs() < 1e-3);
        let stronger = TurbulenceSpec { cn2: 2e-14, ..s };
        assert!(stronger.fried_parameter() < s.fried_parameter());
        let longer = TurbulenceSpec { distance: 2000.0, ..s };
        assert!((longer.fried_parameter() / s.fried_parameter() - 2f64.powf(-0.6)).abs() < 1e-12);
    }

    #[test]
    fn screens() {
        let g = GridSpec::square(64, 8e-3);
        let zero = kolmogorov_screen(&TurbulenceSpec { cn2: 0.0, ..spec(1.0) }, g, 1).unwrap();
        assert!(zero.data.iter().all(|&v| v == 0.0));
        let a = kolmogorov_screen(&spec(60.0), g, 5).unwrap();
        let b = kolmogorov_screen(&spec(60.0), g, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.data.mean().unwrap().abs() < 1e-12);
        let coarse = GridSpec::square(16, 1.0);
        assert!(matches!(kolmogorov_screen(&spec(60.0), coarse, 1), Err(QpbError::GridTooCoarse { .. })));
    }

    #[test]
    fn screen_preserves_norm() {
        let g = GridSpec::square(64, 8e-3);
        let beam = BeamGeometry::default();
        let f = lg_field(LgSpec { l: 2, p: 0 }, &beam, g).unwrap();
        let s = kolmogorov_screen(&spec(30.0), g, 3).unwrap();
        let out = apply_screen(&f, &s).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);
        for (a, b) in out.data.iter().zip(f.data.iter()) {
            assert!((a.norm() - b.norm()).abs() < 1e-12);
        }
        assert!(overlap(&f, &out).unwrap().norm() < 1.0);
        let flat = PhaseScreen { data: Array2::zeros(g.dim()), ..s };
        assert_eq!(apply_screen(&f, &flat).unwrap(), f);
    }

    #[test]
    fn propagator_round_trip() {
        let g = GridSpec::square(64, 8e-3);
        let beam = BeamGeometry::default();
        let f = lg_field(LgSpec { l: 1, p: 0 }, &beam, g).unwrap();
        let p = Propagator::fresnel(g, 633e-9, 1.0);
        let peak = f.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let back = p.backward(&p.forward(&f.data));
        for (a, b) in back.iter().zip(f.data.iter()) {
            assert!((a - b).norm() < 1e-5 * peak);
        }
        let u = Propagator::unity(g);
        for (a, b) in u.forward(&f.data).iter().zip(f.data.iter()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn gdo_without_turbulence_starts_at_zero() {
        let g = GridSpec::square(64, 8e-3);
        let beam = BeamGeometry::default();
        let target = petal_superposition(3, &beam, g).unwrap();
        let prop = Propagator::fresnel(g, 633e-9, 1.0);
        let obs = prop.observe(&target, &Array2::zeros(g.dim())).unwrap();
        let peak = obs.iter().cloned().fold(0.0, f64::max);
        let res = gdo_correct(&[target], &[obs], &prop, &GdoOptions::default()).unwrap();
        assert!(res.mse_trace[0] <= 1e-24 * peak * peak);
        assert!(res.converged);
    }

    #[test]
    fn gdo_reduces_mse() {
        let g = GridSpec::square(64, 8e-3);
        let beam = BeamGeometry::default();
        let probes =
            vec![petal_superposition(3, &beam, g).unwrap(), lg_field(LgSpec { l: 0, p: 0 }, &beam, g).unwrap()];
        let s = kolmogorov_screen(&spec(60.0), g, 11).unwrap();
        let prop = Propagator::fresnel(g, 633e-9, 1.0);
        let obs: Vec<_> = probes.iter().map(|p| prop.observe(p, &s.data).unwrap()).collect();
        let opts = GdoOptions { max_iter: 100, ..Default::default() };
        let res = gdo_correct(&probes, &obs, &prop, &opts).unwrap();
        assert!(res.mse_trace.last().unwrap() < &(0.2 * res.mse_trace[0]));
        assert!(res.correction.iter().all(|&v| (0.0..2.0 * PI).contains(&v)));
    }

    #[test]
    fn mutual_information_limits() {
        let id = CrosstalkMatrix::identity((0..8).collect());
        assert_eq!(mutual_information(&id), 3.0);
        let uniform = CrosstalkMatrix::new((0..4).collect(), Array2::from_elem((4, 4), 0.25)).unwrap();
        assert!(mutual_information(&uniform).abs() < 1e-15);
        let mut perm = Array2::zeros((3, 3));
        perm[(1, 0)] = 1.0;
        perm[(2, 1)] = 1.0;
        perm[(0, 2)] = 1.0;
        let perm = CrosstalkMatrix::new(vec![0, 1, 2], perm).unwrap();
        assert!((mutual_information(&perm) - 3f64.log2()).abs() < 1e-12);
        assert!(CrosstalkMatrix::new(vec![0, 1], Array2::from_elem((2, 2), 0.4)).is_err());
    }

    #[test]
    fn crosstalk_without_turbulence_is_diagonal() {
        let g = GridSpec::square(128, 8e-3);
        let beam = BeamGeometry::default();
        let modes: Vec<(i32, ComplexField)> =
            (-2..=2).map(|l| (l, lg_field(LgSpec { l, p: 0 }, &beam, g).unwrap())).collect();
        let m = crosstalk_matrix(&modes, None).unwrap();
        for s in 0..5 {
            assert!((m.probs.column(s).sum() - 1.0).abs() < 1e-12);
            assert!(1.0 - m.probs[(s, s)] < 0.02);
        }
        assert!(crosstalk_matrix(&[], None).is_err());
    }
}
