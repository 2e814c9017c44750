//! Gaussian states as quadrature mean vectors and covariance matrices, and the
//! symplectic elements that act on them.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};

use crate::error::{check_range, QpbError, Result};
use crate::special::laguerre;

const SYMMETRY_TOL: f64 = 1e-10;
const UNCERTAINTY_TOL: f64 = 1e-9;

/// Parameters of the single-mode state families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateParams {
    Vacuum,
    Thermal {
        n_th: f64,
    },
    Coherent {
        alpha: f64,
        phi: f64,
    },
    SqueezedVacuum {
        r: f64,
        theta: f64,
    },
    /// Displaced squeezed vacuum: squeeze by `(r, theta)`, then displace by `alpha·e^{i phi}`.
    Dsv {
        alpha: f64,
        phi: f64,
        r: f64,
        theta: f64,
    },
}

impl StateParams {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StateParams::Vacuum => Ok(()),
            StateParams::Thermal { n_th } => check_range("n_th", n_th, 0.0, f64::INFINITY),
            StateParams::Coherent { alpha, phi } => {
                check_range("alpha", alpha, 0.0, f64::INFINITY)?;
                check_range("phi", phi, f64::MIN, f64::MAX)
            }
            StateParams::SqueezedVacuum { r, theta } => {
                check_range("r", r, 0.0, f64::INFINITY)?;
                check_range("theta", theta, f64::MIN, f64::MAX)
            }
            StateParams::Dsv { alpha, phi, r, theta } => {
                check_range("alpha", alpha, 0.0, f64::INFINITY)?;
                check_range("phi", phi, f64::MIN, f64::MAX)?;
                check_range("r", r, 0.0, f64::INFINITY)?;
                check_range("theta", theta, f64::MIN, f64::MAX)
            }
        }
    }

    /// Short family name used in output files.
    pub fn family(&self) -> &'static str {
        match self {
            StateParams::Vacuum => "vacuum",
            StateParams::Thermal { .. } => "thermal",
            StateParams::Coherent { .. } => "coherent",
            StateParams::SqueezedVacuum { .. } => "squeezed_vacuum",
            StateParams::Dsv { .. } => "dsv",
        }
    }

    /// Mean photon number carried by the coherent displacement.
    pub fn displacement_photons(&self) -> f64 {
        match *self {
            StateParams::Coherent { alpha, .. } | StateParams::Dsv { alpha, .. } => alpha * alpha,
            _ => 0.0,
        }
    }

    /// Mean photon number not carried by the displacement (squeezing or thermal).
    pub fn incoherent_photons(&self) -> f64 {
        match *self {
            StateParams::Thermal { n_th } => n_th,
            StateParams::SqueezedVacuum { r, .. } | StateParams::Dsv { r, .. } => r.sinh().powi(2),
            _ => 0.0,
        }
    }
}

/// Which mode of a two-mode system an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    A,
    B,
}

/// Target of a phase shift on two modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseTarget {
    A,
    B,
    Both,
}

/// Gaussian state of `N` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// Block-diagonal symplectic form with blocks `[[0, 1], [-1, 0]]`.
pub fn omega(modes: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        w[(2 * k, 2 * k + 1)] = 1.0;
        w[(2 * k + 1, 2 * k)] = -1.0;
    }
    w
}

impl GaussianState {
    /// Builds a state, checking symmetry, dimensions and the uncertainty principle.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let state = Self::new_unchecked(mean, cov)?;
        let nu = state.symplectic_eigenvalues();
        if let Some(&min) = nu.first() {
            if min < 1.0 - UNCERTAINTY_TOL {
                return Err(QpbError::InvalidState(format!("symplectic eigenvalue of 2Γ is {min:.3e} < 1")));
            }
        }
        Ok(state)
    }

    fn new_unchecked(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(QpbError::InvalidState(format!("mean length {dim} is not a positive even number")));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(QpbError::DimensionMismatch { expected: dim, found: cov.nrows() });
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(QpbError::InvalidState("non-finite entry".into()));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > SYMMETRY_TOL {
            return Err(QpbError::InvalidState(format!("covariance asymmetric by {asym:.3e}")));
        }
        Ok(Self { mean, cov })
    }

    pub fn vacuum(modes: usize) -> Self {
        Self { mean: DVector::zeros(2 * modes), cov: DMatrix::identity(2 * modes, 2 * modes) * 0.5 }
    }

    pub fn modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Symplectic eigenvalues of `2Γ`, ascending. Each is ≥ 1 for a physical state.
    pub fn symplectic_eigenvalues(&self) -> Vec<f64> {
        let m = omega(self.modes()) * (&self.cov * 2.0);
        let mut ims: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.im.abs()).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ims.chunks(2).map(|pair| 0.5 * (pair[0] + pair[pair.len() - 1])).collect()
    }

    /// Mean photon number and photon-number variance of a single-mode state.
    pub fn photon_moments(&self) -> Result<(f64, f64)> {
        self.require_modes(1)?;
        let g = &self.cov;
        let x = &self.mean;
        let mean = 0.5 * (g.trace() - 1.0) + x.norm_squared();
        let var = 0.5 * ((g * g).trace() - 0.5) + 2.0 * (x.transpose() * g * x)[0];
        Ok((mean, var))
    }

    fn require_modes(&self, n: usize) -> Result<()> {
        if self.modes() != n {
            return Err(QpbError::DimensionMismatch { expected: n, found: self.modes() });
        }
        Ok(())
    }
}

/// Constructs the single-mode state for a parameter set.
pub fn make_single_mode(params: StateParams) -> Result<GaussianState> {
    params.validate()?;
    let (mean, cov) = match params {
        StateParams::Vacuum => ([0.0, 0.0], squeezed_cov(0.0, 0.0)),
        StateParams::Thermal { n_th } => {
            let v = (2.0 * n_th + 1.0) / 2.0;
            ([0.0, 0.0], [[v, 0.0], [0.0, v]])
        }
        StateParams::Coherent { alpha, phi } => (displacement(alpha, phi), squeezed_cov(0.0, 0.0)),
        StateParams::SqueezedVacuum { r, theta } => ([0.0, 0.0], squeezed_cov(r, theta)),
        StateParams::Dsv { alpha, phi, r, theta } => (displacement(alpha, phi), squeezed_cov(r, theta)),
    };
    Ok(GaussianState {
        mean: DVector::from_column_slice(&mean),
        cov: DMatrix::from_row_slice(2, 2, &[cov[0][0], cov[0][1], cov[1][0], cov[1][1]]),
    })
}

fn displacement(alpha: f64, phi: f64) -> [f64; 2] {
    [alpha * phi.cos(), alpha * phi.sin()]
}

fn squeezed_cov(r: f64, theta: f64) -> [[f64; 2]; 2] {
    if r == 0.0 {
        return [[0.5, 0.0], [0.0, 0.5]];
    }
    let (c, s) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    let off = -0.5 * theta.sin() * s;
    [[0.5 * (c - theta.cos() * s), off], [off, 0.5 * (c + theta.cos() * s)]]
}

/// Direct sum of two states.
pub fn tensor(a: &GaussianState, b: &GaussianState) -> GaussianState {
    let (na, nb) = (a.mean.len(), b.mean.len());
    let mut mean = DVector::zeros(na + nb);
    mean.rows_mut(0, na).copy_from(&a.mean);
    mean.rows_mut(na, nb).copy_from(&b.mean);
    let mut cov = DMatrix::zeros(na + nb, na + nb);
    cov.view_mut((0, 0), (na, na)).copy_from(&a.cov);
    cov.view_mut((na, na), (nb, nb)).copy_from(&b.cov);
    GaussianState { mean, cov }
}

/// Keeps one mode of a two-mode state.
pub fn reduce_mode(state: &GaussianState, keep: Mode) -> Result<GaussianState> {
    state.require_modes(2)?;
    let off = match keep {
        Mode::A => 0,
        Mode::B => 2,
    };
    Ok(GaussianState {
        mean: state.mean.rows(off, 2).into_owned(),
        cov: state.cov.view((off, off), (2, 2)).into_owned(),
    })
}

/// Loss channel: mixes the mode with vacuum on a beamsplitter of transmissivity `eta`.
pub fn attenuate(state: &GaussianState, eta: f64) -> Result<GaussianState> {
    check_range("eta", eta, 0.0, 1.0)?;
    state.require_modes(1)?;
    Ok(GaussianState {
        mean: &state.mean * eta.sqrt(),
        cov: &state.cov * eta + DMatrix::identity(2, 2) * (0.5 * (1.0 - eta)),
    })
}

/// Linear symplectic map on phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    pub matrix: DMatrix<f64>,
    pub label: String,
}

impl SymplecticTransform {
    pub fn identity(modes: usize) -> Self {
        Self { matrix: DMatrix::identity(2 * modes, 2 * modes), label: "I".into() }
    }

    pub fn modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// Largest deviation of `S Ω Sᵀ` from `Ω`.
    pub fn symplectic_defect(&self) -> f64 {
        let w = omega(self.modes());
        (&self.matrix * &w * self.matrix.transpose() - w).amax()
    }
}

pub fn beamsplitter(t: f64) -> Result<SymplecticTransform> {
    check_range("T", t, 0.0, 1.0)?;
    let (a, b) = (t.sqrt(), (1.0 - t).sqrt());
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        a, 0.0, b, 0.0,
        0.0, a, 0.0, b,
        b, 0.0, -a, 0.0,
        0.0, b, 0.0, -a,
    ]);
    Ok(SymplecticTransform { matrix: m, label: format!("BS({t})") })
}

pub fn two_mode_squeezer(g: f64, psi: f64) -> Result<SymplecticTransform> {
    check_range("g", g, 0.0, f64::INFINITY)?;
    let (c, s) = (g.cosh(), g.sinh());
    let (cp, sp) = (psi.cos() * s, psi.sin() * s);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        c, 0.0, cp, sp,
        0.0, c, sp, -cp,
        cp, sp, c, 0.0,
        sp, -cp, 0.0, c,
    ]);
    Ok(SymplecticTransform { matrix: m, label: format!("TMS({g},{psi})") })
}

pub fn phase_shift(which: PhaseTarget, phi: f64) -> SymplecticTransform {
    let mut m = DMatrix::identity(4, 4);
    let (c, s) = (phi.cos(), phi.sin());
    let offsets: &[usize] = match which {
        PhaseTarget::A => &[0],
        PhaseTarget::B => &[2],
        PhaseTarget::Both => &[0, 2],
    };
    for &o in offsets {
        m[(o, o)] = c;
        m[(o, o + 1)] = -s;
        m[(o + 1, o)] = s;
        m[(o + 1, o + 1)] = c;
    }
    SymplecticTransform { matrix: m, label: format!("PS_{which:?}({phi})") }
}

/// Returns `S2·S1` (apply `s1` first).
pub fn compose(s2: &SymplecticTransform, s1: &SymplecticTransform) -> Result<SymplecticTransform> {
    if s2.matrix.nrows() != s1.matrix.nrows() {
        return Err(QpbError::DimensionMismatch { expected: s2.matrix.nrows(), found: s1.matrix.nrows() });
    }
    Ok(SymplecticTransform { matrix: &s2.matrix * &s1.matrix, label: format!("{}·{}", s2.label, s1.label) })
}

pub fn apply(s: &SymplecticTransform, state: &GaussianState) -> Result<GaussianState> {
    if s.matrix.nrows() != state.mean.len() {
        return Err(QpbError::DimensionMismatch { expected: s.matrix.nrows(), found: state.mean.len() });
    }
    let cov = &s.matrix * &state.cov * s.matrix.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    Ok(GaussianState { mean: &s.matrix * &state.mean, cov })
}

/// Wigner function of a Gaussian state at a phase-space point.
pub fn wigner_gaussian(state: &GaussianState, point: &[f64]) -> Result<f64> {
    let dim = state.mean.len();
    if point.len() != dim {
        return Err(QpbError::DimensionMismatch { expected: dim, found: point.len() });
    }
    let chol = state.cov.clone().cholesky().ok_or(QpbError::Singular)?;
    let d = DVector::from_column_slice(point) - &state.mean;
    let quad = d.dot(&chol.solve(&d));
    let det = chol.determinant();
    Ok((-quad).exp() / (PI.powi(state.modes() as i32) * det.sqrt()))
}

/// Wigner function of the Fock state `|n⟩`.
pub fn wigner_fock(n: usize, x: f64, p: f64) -> f64 {
    let rho2 = x * x + p * p;
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    2.0 / PI * sign * laguerre(n, 0.0, 4.0 * rho2) * (-2.0 * rho2).exp()
}

/// Expectation of the photon-number parity operator `(-1)^n`.
pub fn parity_expectation(state: &GaussianState) -> Result<f64> {
    state.require_modes(1)?;
    Ok(FRAC_PI_2 * wigner_gaussian(state, &[0.0, 0.0])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn coherent(alpha: f64, phi: f64) -> GaussianState {
        make_single_mode(StateParams::Coherent { alpha, phi }).unwrap()
    }

    #[test]
    fn table_states() {
        let v = make_single_mode(StateParams::Vacuum).unwrap();
        assert_eq!(v, GaussianState::vacuum(1));
        let th = make_single_mode(StateParams::Thermal { n_th: 1.0 }).unwrap();
        assert_eq!(th.cov(), &DMatrix::from_row_slice(2, 2, &[1.5, 0.0, 0.0, 1.5]));
        let dsv = make_single_mode(StateParams::Dsv { alpha: 2.0, phi: 0.0, r: 0.0, theta: 0.0 }).unwrap();
        assert_eq!(dsv, coherent(2.0, 0.0));
        assert_eq!(make_single_mode(StateParams::Thermal { n_th: 0.0 }).unwrap(), GaussianState::vacuum(1));
    }

    #[test]
    fn dsv_collapses() {
        let a = make_single_mode(StateParams::Dsv { alpha: 1.3, phi: 0.4, r: 0.0, theta: 0.9 }).unwrap();
        let b = coherent(1.3, 0.4);
        assert!((a.mean() - b.mean()).amax() < 1e-14);
        assert!((a.cov() - b.cov()).amax() < 1e-14);
        let a = make_single_mode(StateParams::Dsv { alpha: 0.0, phi: 0.4, r: 0.8, theta: 0.9 }).unwrap();
        let b = make_single_mode(StateParams::SqueezedVacuum { r: 0.8, theta: 0.9 }).unwrap();
        assert!((a.cov() - b.cov()).amax() < 1e-14);
        assert!(a.mean().amax() < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_single_mode(StateParams::Thermal { n_th: -0.1 }).is_err());
        assert!(make_single_mode(StateParams::SqueezedVacuum { r: -1.0, theta: 0.0 }).is_err());
        assert!(beamsplitter(1.2).is_err());
        let bad = GaussianState::new(DVector::zeros(2), DMatrix::identity(2, 2) * 0.1);
        assert!(matches!(bad, Err(QpbError::InvalidState(_))));
    }

    #[test]
    fn tensor_and_reduce() {
        let s = tensor(&coherent(2.0, 0.0), &GaussianState::vacuum(1));
        assert_eq!(s.mean().as_slice(), &[2.0, 0.0, 0.0, 0.0]);
        assert_eq!(tensor(&GaussianState::vacuum(1), &GaussianState::vacuum(1)), GaussianState::vacuum(2));
        let th = make_single_mode(StateParams::Thermal { n_th: 1.0 }).unwrap();
        let s = tensor(&GaussianState::vacuum(1), &th);
        assert_eq!(reduce_mode(&s, Mode::B).unwrap(), th);
        let s = tensor(&coherent(1.0, 0.3), &coherent(2.0, 1.0));
        assert_eq!(reduce_mode(&s, Mode::A).unwrap(), coherent(1.0, 0.3));
        assert!(reduce_mode(&th, Mode::A).is_err());
    }

    #[test]
    fn tensor_symplectic_spectrum_is_union() {
        let a = make_single_mode(StateParams::Thermal { n_th: 2.0 }).unwrap();
        let b = make_single_mode(StateParams::SqueezedVacuum { r: 0.7, theta: 0.2 }).unwrap();
        let nu = tensor(&a, &b).symplectic_eigenvalues();
        assert_relative_eq!(nu[0], 1.0, epsilon = 1e-9);
        assert_relative_eq!(nu[1], 5.0, epsilon = 1e-9);
    }

    #[test]
    fn beamsplitter_examples() {
        assert_eq!(
            beamsplitter(1.0).unwrap().matrix,
            DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 1.0, -1.0, -1.0]))
        );
        let s = tensor(&coherent(2.0, 0.0), &GaussianState::vacuum(1));
        let out = apply(&beamsplitter(0.5).unwrap(), &s).unwrap();
        let r2 = 2f64.sqrt();
        for (a, b) in out.mean().iter().zip([r2, 0.0, r2, 0.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
        assert!(beamsplitter(0.3).unwrap().symplectic_defect() < 1e-12);
    }

    #[test]
    fn squeezer_examples() {
        assert_eq!(two_mode_squeezer(0.0, 0.7).unwrap().matrix, DMatrix::identity(4, 4));
        let g = 1.1;
        let id = compose(&two_mode_squeezer(g, 0.0).unwrap(), &two_mode_squeezer(g, PI).unwrap()).unwrap();
        assert!((id.matrix - DMatrix::identity(4, 4)).amax() < 1e-12);
        let out = apply(&two_mode_squeezer(g, 0.0).unwrap(), &GaussianState::vacuum(2)).unwrap();
        let th = make_single_mode(StateParams::Thermal { n_th: g.sinh().powi(2) }).unwrap();
        assert!((reduce_mode(&out, Mode::B).unwrap().cov() - th.cov()).amax() < 1e-12);
    }

    #[test]
    fn phase_shift_examples() {
        assert!((phase_shift(PhaseTarget::A, 0.0).matrix - DMatrix::identity(4, 4)).amax() < 1e-15);
        assert!((phase_shift(PhaseTarget::Both, 2.0 * PI).matrix - DMatrix::identity(4, 4)).amax() < 1e-12);
        let s = GaussianState::new(DVector::from_column_slice(&[1.0, 0.0, 1.0, 0.0]), DMatrix::identity(4, 4) * 0.5)
            .unwrap();
        let out = apply(&phase_shift(PhaseTarget::Both, PI), &s).unwrap();
        for (a, b) in out.mean().iter().zip([-1.0, 0.0, -1.0, 0.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn double_balanced_beamsplitter() {
        let bs = beamsplitter(0.5).unwrap();
        let twice = compose(&bs, &bs).unwrap();
        assert!((twice.matrix - DMatrix::identity(4, 4)).amax() < 1e-15);
        let th = tensor(
            &make_single_mode(StateParams::Thermal { n_th: 1.0 }).unwrap(),
            &make_single_mode(StateParams::Thermal { n_th: 1.0 }).unwrap(),
        );
        let out = apply(&bs, &th).unwrap();
        assert!((out.cov() - th.cov()).amax() < 1e-14);
    }

    #[test]
    fn attenuation_limits() {
        let s = make_single_mode(StateParams::Dsv { alpha: 1.5, phi: 0.2, r: 0.6, theta: 0.0 }).unwrap();
        assert_eq!(attenuate(&s, 1.0).unwrap(), s);
        assert!((attenuate(&s, 0.0).unwrap().cov() - GaussianState::vacuum(1).cov()).amax() < 1e-15);
        assert!(attenuate(&s, 1.5).is_err());
    }

    #[test]
    fn wigner_values() {
        let v = GaussianState::vacuum(1);
        assert_relative_eq!(wigner_gaussian(&v, &[0.0, 0.0]).unwrap(), 2.0 / PI, epsilon = 1e-15);
        let c = coherent(1.2, 0.7);
        let pt = [c.mean()[0], c.mean()[1]];
        assert_relative_eq!(wigner_gaussian(&c, &pt).unwrap(), 2.0 / PI, epsilon = 1e-14);
        assert_relative_eq!(wigner_fock(3, 0.0, 0.0), -2.0 / PI, epsilon = 1e-15);
        for i in -10..=10 {
            for j in -10..=10 {
                let (x, p) = (i as f64 * 0.2, j as f64 * 0.2);
                let w = wigner_gaussian(&v, &[x, p]).unwrap();
                assert!((w - wigner_fock(0, x, p)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn wigner_integrates_to_one() {
        let s = make_single_mode(StateParams::Dsv { alpha: 0.8, phi: 1.0, r: 0.5, theta: 0.6 }).unwrap();
        let h = 0.02;
        let mut total = 0.0;
        for i in -300..=300 {
            for j in -300..=300 {
                total += wigner_gaussian(&s, &[i as f64 * h, j as f64 * h]).unwrap();
            }
        }
        assert!((total * h * h - 1.0).abs() < 1e-3);
    }

    #[test]
    fn fock_sign_changes() {
        for n in 1..6 {
            let mut changes = 0;
            let mut prev = wigner_fock(n, 0.0, 0.0);
            for k in 1..4000 {
                let w = wigner_fock(n, k as f64 * 1e-3, 0.0);
                if w.signum() != prev.signum() && w != 0.0 {
                    changes += 1;
                }
                prev = w;
            }
            assert_eq!(changes, n);
        }
    }

    #[test]
    fn parity_closed_forms() {
        assert_relative_eq!(parity_expectation(&GaussianState::vacuum(1)).unwrap(), 1.0, epsilon = 1e-15);
        let th = make_single_mode(StateParams::Thermal { n_th: 1.0 }).unwrap();
        assert_relative_eq!(parity_expectation(&th).unwrap(), 1.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(parity_expectation(&coherent(1.0, 0.0)).unwrap(), (-2f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn photon_moments_of_known_states() {
        let th = make_single_mode(StateParams::Thermal { n_th: 1.0 }).unwrap();
        let (m, v) = th.photon_moments().unwrap();
        assert_relative_eq!(m, 1.0, epsilon = 1e-14);
        assert_relative_eq!(v, 2.0, epsilon = 1e-14);
        let (m, v) = coherent(2.0, 0.3).photon_moments().unwrap();
        assert_relative_eq!(m, 4.0, epsilon = 1e-13);
        assert_relative_eq!(v, 4.0, epsilon = 1e-13);
    }
}
