//! Qubit tomography in the `{|+l⟩, |−l⟩}` OAM basis.

use nalgebra::{Complex, Matrix2, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QpbError, Result};
use crate::modes::{lg_field, overlap, BeamGeometry, ComplexField, LgSpec};

const HERMITIAN_TOL: f64 = 1e-10;
const EIGEN_TOL: f64 = 1e-9;

type C = Complex<f64>;

/// Outcomes of the six projections, each complementary pair normalized to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixProbabilities {
    /// `|+l⟩`, `|−l⟩`
    pub basis: [f64; 2],
    /// `(|+l⟩ + |−l⟩)/√2`, `(|+l⟩ − |−l⟩)/√2`
    pub diagonal: [f64; 2],
    /// `(|+l⟩ + i|−l⟩)/√2`, `(|+l⟩ − i|−l⟩)/√2`
    pub circular: [f64; 2],
}

impl SixProbabilities {
    pub fn as_array(&self) -> [f64; 6] {
        [self.basis[0], self.basis[1], self.diagonal[0], self.diagonal[1], self.circular[0], self.circular[1]]
    }

    /// Outcomes of ideal projections of a pure state with amplitudes `(a, b)`.
    pub fn from_amplitudes(a: Complex64, b: Complex64) -> Result<Self> {
        let i = Complex64::new(0.0, 1.0);
        let raw = [
            a.norm_sqr(),
            b.norm_sqr(),
            (a + b).norm_sqr() / 2.0,
            (a - b).norm_sqr() / 2.0,
            (a - i * b).norm_sqr() / 2.0,
            (a + i * b).norm_sqr() / 2.0,
        ];
        if raw.iter().all(|&p| p < 1e-6) {
            return Err(QpbError::Inconsistent("field is orthogonal to the qubit subspace".into()));
        }
        let pair = |x: f64, y: f64| {
            let s = x + y;
            [x / s, y / s]
        };
        Ok(Self { basis: pair(raw[0], raw[1]), diagonal: pair(raw[2], raw[3]), circular: pair(raw[4], raw[5]) })
    }
}

/// Projects a field onto the six principal states of the `±l` qubit.
pub fn project_six(field: &ComplexField, l: i32, beam: &BeamGeometry) -> Result<SixProbabilities> {
    let plus = lg_field(LgSpec { l, p: 0 }, beam, field.grid)?;
    let minus = lg_field(LgSpec { l: -l, p: 0 }, beam, field.grid)?;
    SixProbabilities::from_amplitudes(overlap(&plus, field)?, overlap(&minus, field)?)
}

/// 2×2 density matrix in the `{|+l⟩, |−l⟩}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitDensity {
    pub rho: Matrix2<C>,
}

impl QubitDensity {
    pub fn new(rho: Matrix2<C>) -> Result<Self> {
        let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(QpbError::InvalidState(format!("density matrix not Hermitian ({herm:.2e})")));
        }
        if (rho.trace().re - 1.0).abs() > HERMITIAN_TOL || rho.trace().im.abs() > HERMITIAN_TOL {
            return Err(QpbError::InvalidState("density matrix trace differs from 1".into()));
        }
        let d = Self { rho };
        if d.eigenvalues()[0] < -EIGEN_TOL {
            return Err(QpbError::InvalidState("density matrix has a negative eigenvalue".into()));
        }
        Ok(d)
    }

    /// `|ψ⟩⟨ψ|` for `|ψ⟩ = a|+l⟩ + b|−l⟩`, normalized.
    pub fn pure(a: Complex64, b: Complex64) -> Result<Self> {
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if n == 0.0 {
            return Err(QpbError::Empty("state amplitudes"));
        }
        let (a, b) = (a / n, b / n);
        Ok(Self { rho: Matrix2::new(a * a.conj(), a * b.conj(), b * a.conj(), b * b.conj()) })
    }

    pub fn maximally_mixed() -> Self {
        Self { rho: Matrix2::identity() * C::new(0.5, 0.0) }
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.rho[(0, 0)].re;
        let d = self.rho[(1, 1)].re;
        let b = self.rho[(0, 1)].norm();
        let mid = 0.5 * (a + d);
        let half = (0.25 * (a - d).powi(2) + b * b).sqrt();
        [mid - half, mid + half]
    }

    /// Bloch vector `(⟨σx⟩, ⟨σy⟩, ⟨σz⟩)`.
    pub fn bloch(&self) -> [f64; 3] {
        let off = self.rho[(0, 1)];
        [2.0 * off.re, -2.0 * off.im, (self.rho[(0, 0)] - self.rho[(1, 1)]).re]
    }

    pub fn determinant(&self) -> f64 {
        self.rho.determinant().re
    }

    /// Outcomes of the six ideal projections on this state.
    pub fn six_probabilities(&self) -> SixProbabilities {
        let [x, y, z] = self.bloch();
        SixProbabilities {
            basis: [(1.0 + z) / 2.0, (1.0 - z) / 2.0],
            diagonal: [(1.0 + x) / 2.0, (1.0 - x) / 2.0],
            circular: [(1.0 + y) / 2.0, (1.0 - y) / 2.0],
        }
    }
}

/// Linear Stokes inversion followed by an eigenvalue clamp onto the physical states.
pub fn reconstruct_density(p: &SixProbabilities) -> QubitDensity {
    let norm = |q: [f64; 2]| {
        let s = q[0] + q[1];
        if s > 0.0 {
            (q[0] - q[1]) / s
        } else {
            0.0
        }
    };
    let (sx, sy, sz) = (norm(p.diagonal), norm(p.circular), norm(p.basis));
    let rho = Matrix2::new(
        C::new((1.0 + sz) / 2.0, 0.0),
        C::new(sx / 2.0, -sy / 2.0),
        C::new(sx / 2.0, sy / 2.0),
        C::new((1.0 - sz) / 2.0, 0.0),
    );
    QubitDensity { rho: physical_projection(rho) }
}

fn physical_projection(rho: Matrix2<C>) -> Matrix2<C> {
    let eig = SymmetricEigen::new(rho);
    if eig.eigenvalues.iter().all(|&v| v >= 0.0) {
        return rho;
    }
    let clamped: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    let mut out = Matrix2::zeros();
    for (k, &v) in clamped.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        out += col * col.adjoint() * C::new(v / total, 0.0);
    }
    (out + out.adjoint()) * C::new(0.5, 0.0)
}

/// Uhlmann fidelity `(Tr√(√ρ₁ ρ₂ √ρ₁))²`, via the two-level closed form
/// `Tr(ρ₁ρ₂) + 2√(det ρ₁ · det ρ₂)`.
pub fn fidelity(a: &QubitDensity, b: &QubitDensity) -> Result<f64> {
    for d in [a, b] {
        QubitDensity::new(d.rho)?;
    }
    let overlap = (a.rho * b.rho).trace().re;
    let dets = (a.determinant().max(0.0) * b.determinant().max(0.0)).sqrt();
    Ok((overlap + 2.0 * dets).clamp(0.0, 1.0))
}
