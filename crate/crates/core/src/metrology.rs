//! SU(1,1) interferometry: evolution, parity and on-off detection, phase
//! sensitivity and its optimization over the interferometer phase.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{QpbError, Result};
use crate::gaussian::{
    apply, compose, make_single_mode, parity_expectation, phase_shift, reduce_mode, tensor, two_mode_squeezer,
    GaussianState, Mode, PhaseTarget, StateParams, SymplecticTransform,
};

/// Step of the central-difference derivative in radians.
pub const DERIVATIVE_STEP: f64 = 1e-5;
/// Points of the coarse phase grid over `[0, π]`, endpoints excluded from evaluation.
pub const COARSE_POINTS: usize = 2001;
/// Smallest phase examined by the optimizer.
pub const PHI_FLOOR: f64 = 10.0 * DERIVATIVE_STEP;
const MIN_SLOPE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su11Config {
    pub g: f64,
    pub psi: f64,
    pub phi: f64,
    pub input_a: StateParams,
    pub input_b: StateParams,
}

impl Su11Config {
    /// Coherent light of `n1` photons in mode A and a displaced squeezed vacuum
    /// with `n2` displacement photons and squeezing `r` in mode B.
    ///
    /// The squeezing angle is `π`: the squeezed quadrature is the one conjugate
    /// to the displacement, which makes the phase sensitivity improve
    /// monotonically with `r`.
    pub fn standard(n1: f64, n2: f64, r: f64, g: f64) -> Self {
        Self {
            g,
            psi: 0.0,
            phi: 0.0,
            input_a: StateParams::Coherent { alpha: n1.max(0.0).sqrt(), phi: 0.0 },
            input_b: StateParams::Dsv { alpha: n2.max(0.0).sqrt(), phi: 0.0, r, theta: PI },
        }
    }

    pub fn vacuum(g: f64) -> Self {
        Self { g, psi: 0.0, phi: 0.0, input_a: StateParams::Vacuum, input_b: StateParams::Vacuum }
    }

    pub fn with_phi(&self, phi: f64) -> Self {
        Self { phi, ..*self }
    }

    pub fn n1(&self) -> f64 {
        self.input_a.displacement_photons()
    }

    pub fn n2(&self) -> f64 {
        self.input_b.displacement_photons()
    }

    /// Photons not carried by the displacements (squeezing and thermal parts).
    pub fn n_xi(&self) -> f64 {
        self.input_a.incoherent_photons() + self.input_b.incoherent_photons()
    }

    pub fn n_opa(&self) -> f64 {
        2.0 * self.g.sinh().powi(2)
    }

    /// Total photon budget entering the phase shift.
    pub fn n_total(&self) -> f64 {
        let n_opa = self.n_opa();
        (self.n1() + self.n2() + self.n_xi()) * (1.0 + n_opa)
            + n_opa
            + 2.0 * (self.n1() * self.n2() * n_opa * (n_opa + 2.0)).sqrt()
    }

    fn validate(&self) -> Result<()> {
        if self.g.is_nan() || self.g < 0.0 {
            return Err(QpbError::OutOfRange { name: "g", value: self.g });
        }
        self.input_a.validate()?;
        self.input_b.validate()
    }
}

/// `TMS(g, ψ)·PS_A(φ)·TMS(g, ψ + π)`.
pub fn su11_transform(cfg: &Su11Config) -> Result<SymplecticTransform> {
    let first = two_mode_squeezer(cfg.g, cfg.psi + PI)?;
    let second = two_mode_squeezer(cfg.g, cfg.psi)?;
    compose(&second, &compose(&phase_shift(PhaseTarget::A, cfg.phi), &first)?)
}

pub fn input_state(cfg: &Su11Config) -> Result<GaussianState> {
    Ok(tensor(&make_single_mode(cfg.input_a)?, &make_single_mode(cfg.input_b)?))
}

pub fn su11_evolve(cfg: &Su11Config) -> Result<GaussianState> {
    cfg.validate()?;
    apply(&su11_transform(cfg)?, &input_state(cfg)?)
}

/// Parity of output mode B.
pub fn parity_signal(cfg: &Su11Config) -> Result<f64> {
    parity_expectation(&reduce_mode(&su11_evolve(cfg)?, Mode::B)?)
}

/// Probability of at least one photon, `1 − P(0)` with
/// `P(0) = 2^N / √det(2Γ + I) · exp(−2 x̄ᵀ(2Γ + I)⁻¹ x̄)`.
pub fn p_on(state: &GaussianState) -> Result<f64> {
    let dim = state.mean().len();
    let m = state.cov() * 2.0 + DMatrix::identity(dim, dim);
    let chol = m.cholesky().ok_or(QpbError::Singular)?;
    let x = state.mean();
    let quad = x.dot(&chol.solve(x));
    let det = chol.determinant();
    let p0 = 2f64.powi(state.modes() as i32) / det.sqrt() * (-2.0 * quad).exp();
    Ok((1.0 - p0).clamp(0.0, 1.0))
}

/// Click probability of output mode B.
pub fn on_signal(cfg: &Su11Config) -> Result<f64> {
    p_on(&reduce_mode(&su11_evolve(cfg)?, Mode::B)?)
}

/// Numerical derivative scheme for `d/dφ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Derivative {
    #[default]
    Central,
    /// Richardson extrapolation of two central differences (`h` and `h/2`).
    Richardson,
}

fn derivative<F: Fn(f64) -> Result<f64>>(f: &F, phi: f64, scheme: Derivative) -> Result<f64> {
    let h = DERIVATIVE_STEP;
    let central = |h: f64| -> Result<f64> { Ok((f(phi + h)? - f(phi - h)?) / (2.0 * h)) };
    match scheme {
        Derivative::Central => central(h),
        Derivative::Richardson => {
            let d1 = central(h)?;
            let d2 = central(h / 2.0)?;
            Ok((4.0 * d2 - d1) / 3.0)
        }
    }
}

/// Detection scheme at output mode B.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    Parity,
    OnOff,
}

impl Detection {
    pub fn name(&self) -> &'static str {
        match self {
            Detection::Parity => "parity",
            Detection::OnOff => "on_off",
        }
    }
}

/// Error-propagation sensitivity `√(1 − ⟨Π⟩²) / |∂⟨Π⟩/∂φ|`.
pub fn sensitivity_parity(cfg: &Su11Config) -> Result<f64> {
    sensitivity_parity_with(cfg, Derivative::Central)
}

pub fn sensitivity_parity_with(cfg: &Su11Config, scheme: Derivative) -> Result<f64> {
    let signal = |phi: f64| parity_signal(&cfg.with_phi(phi));
    let p = signal(cfg.phi)?;
    let slope = derivative(&signal, cfg.phi, scheme)?;
    if slope.abs() < MIN_SLOPE {
        return Err(QpbError::NonInformative { phi: cfg.phi });
    }
    Ok((1.0 - p * p).max(0.0).sqrt() / slope.abs())
}

/// Binary-outcome Fisher information `(∂P/∂φ)² / (P(1 − P))` of a click detector.
pub fn fisher_on_off(cfg: &Su11Config) -> Result<f64> {
    let signal = |phi: f64| on_signal(&cfg.with_phi(phi));
    let p = signal(cfg.phi)?;
    if p <= 0.0 || p >= 1.0 {
        return Err(QpbError::NonInformative { phi: cfg.phi });
    }
    let slope = derivative(&signal, cfg.phi, Derivative::Central)?;
    Ok(slope * slope / (p * (1.0 - p)))
}

/// Fisher information from the click outcome alone, `(∂P/∂φ)² / P`.
pub fn fisher_on_only(cfg: &Su11Config) -> Result<f64> {
    let signal = |phi: f64| on_signal(&cfg.with_phi(phi));
    let p = signal(cfg.phi)?;
    if p <= 0.0 {
        return Err(QpbError::NonInformative { phi: cfg.phi });
    }
    let slope = derivative(&signal, cfg.phi, Derivative::Central)?;
    Ok(slope * slope / p)
}

pub fn sensitivity_on_off(cfg: &Su11Config) -> Result<f64> {
    let f = fisher_on_off(cfg)?;
    if f < MIN_SLOPE * MIN_SLOPE {
        return Err(QpbError::NonInformative { phi: cfg.phi });
    }
    Ok(1.0 / f.sqrt())
}

pub fn sensitivity(cfg: &Su11Config, detection: Detection) -> Result<f64> {
    match detection {
        Detection::Parity => sensitivity_parity(cfg),
        Detection::OnOff => sensitivity_on_off(cfg),
    }
}

/// Shot-noise and Heisenberg limits `(1/√n_total, 1/n_total)`.
pub fn snl_hl(cfg: &Su11Config) -> (f64, f64) {
    let n = cfg.n_total();
    (1.0 / n.sqrt(), 1.0 / n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiOptimum {
    pub phi_star: f64,
    pub delta_phi: f64,
}

/// Minimizes the sensitivity over `φ ∈ (0, π)`: a 2001-point grid, a
/// logarithmic scan below the first grid point, then golden-section search
/// inside the bracket around the best sample.
pub fn optimize_phi(cfg: &Su11Config, detection: Detection) -> Result<PhiOptimum> {
    let eval = |phi: f64| sensitivity(&cfg.with_phi(phi), detection).ok().filter(|v| v.is_finite());
    let step = PI / (COARSE_POINTS - 1) as f64;
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(COARSE_POINTS + 40);
    let log_points = 40;
    let (lo, hi) = (PHI_FLOOR.ln(), step.ln());
    for k in 0..log_points {
        let phi = (lo + (hi - lo) * k as f64 / log_points as f64).exp();
        samples.push((phi, eval(phi).unwrap_or(f64::INFINITY)));
    }
    for i in 1..COARSE_POINTS - 1 {
        let phi = i as f64 * step;
        samples.push((phi, eval(phi).unwrap_or(f64::INFINITY)));
    }
    let (best, _) = samples.iter().enumerate().min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap()).unwrap();
    if !samples[best].1.is_finite() {
        return Err(QpbError::NonInformative { phi: cfg.phi });
    }
    let left = if best == 0 { samples[0].0 } else { samples[best - 1].0 };
    let right = samples.get(best + 1).map_or(PI - step, |s| s.0);
    let f = |phi: f64| eval(phi).unwrap_or(f64::INFINITY);
    let (phi, val) = golden_section(&f, left, right, 1e-12);
    let (phi_star, delta_phi) = if val <= samples[best].1 { (phi, val) } else { samples[best] };
    Ok(PhiOptimum { phi_star, delta_phi })
}

fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol * (a.abs() + b.abs()).max(1e-300) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Parameter varied along a sensitivity curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vary {
    R,
    G,
}

impl Vary {
    pub fn name(&self) -> &'static str {
        match self {
            Vary::R => "r",
            Vary::G => "g",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub delta_phi: f64,
    pub snl: f64,
    pub hl: f64,
    pub phi_star: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCurve {
    pub vary: Vary,
    pub detection: Detection,
    pub points: Vec<CurvePoint>,
}

/// Sets the squeezing parameter of whichever input carries one.
pub fn with_r(cfg: &Su11Config, r: f64) -> Su11Config {
    let set = |p: StateParams| match p {
        StateParams::Dsv { alpha, phi, theta, .. } => StateParams::Dsv { alpha, phi, r, theta },
        StateParams::SqueezedVacuum { theta, .. } => StateParams::SqueezedVacuum { r, theta },
        other => other,
    };
    Su11Config { input_b: set(cfg.input_b), ..*cfg }
}

/// Optimized sensitivity at each abscissa, evaluated in parallel and returned in input order.
pub fn sweep_curve(base: &Su11Config, vary: Vary, xs: &[f64], detection: Detection) -> Result<SensitivityCurve> {
    let points = xs
        .par_iter()
        .map(|&x| {
            let cfg = match vary {
                Vary::R => with_r(base, x),
                Vary::G => Su11Config { g: x, ..*base },
            };
            let opt = optimize_phi(&cfg, detection)?;
            let (snl, hl) = snl_hl(&cfg);
            Ok(CurvePoint { x, delta_phi: opt.delta_phi, snl, hl, phi_star: opt.phi_star })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SensitivityCurve { vary, detection, points })
}
