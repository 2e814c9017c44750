//! Laguerre-Gaussian and Hermite-Gaussian fields sampled on a square-pixel grid.

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{check_range, QpbError, Result};
use crate::special::{factorial, hermite, laguerre};

/// Fraction of the mode energy allowed outside the grid.
const CLIP_TOL: f64 = 1e-3;

/// Gaussian beam parameters at one axial position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub wavelength: f64,
    pub w0: f64,
    pub z: f64,
}

impl Default for BeamGeometry {
    fn default() -> Self {
        Self { wavelength: 633e-9, w0: 1e-3, z: 0.0 }
    }
}

impl BeamGeometry {
    pub fn new(wavelength: f64, w0: f64, z: f64) -> Result<Self> {
        check_range("wavelength", wavelength, f64::MIN_POSITIVE, f64::INFINITY)?;
        check_range("w0", w0, f64::MIN_POSITIVE, f64::INFINITY)?;
        check_range("z", z, f64::MIN, f64::MAX)?;
        Ok(Self { wavelength, w0, z })
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn rayleigh_range(&self) -> f64 {
        PI * self.w0 * self.w0 / self.wavelength
    }

    pub fn width(&self) -> f64 {
        self.w0 * (1.0 + (self.z / self.rayleigh_range()).powi(2)).sqrt()
    }

    /// Wavefront curvature `1/R(z)`; zero at the waist.
    pub fn curvature(&self) -> f64 {
        let zr = self.rayleigh_range();
        self.z / (self.z * self.z + zr * zr)
    }

    pub fn gouy(&self) -> f64 {
        (self.z / self.rayleigh_range()).atan()
    }
}

/// Sampling grid. Pixels are square with pitch `2·extent/cols`; sample `j` of a
/// row sits at `x = (j − cols/2)·pitch`, so the centre pixel is exactly on axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    /// Physical half-width along x in metres.
    pub extent: f64,
}

impl GridSpec {
    pub fn square(n: usize, extent: f64) -> Self {
        Self { rows: n, cols: n, extent }
    }

    pub fn pitch(&self) -> f64 {
        2.0 * self.extent / self.cols as f64
    }

    pub fn area_element(&self) -> f64 {
        self.pitch() * self.pitch()
    }

    pub fn x(&self, col: usize) -> f64 {
        (col as f64 - (self.cols / 2) as f64) * self.pitch()
    }

    pub fn y(&self, row: usize) -> f64 {
        (row as f64 - (self.rows / 2) as f64) * self.pitch()
    }

    pub fn center(&self) -> (usize, usize) {
        (self.rows / 2, self.cols / 2)
    }

    pub fn dim(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Azimuth `atan2(y, x)`, branch cut along the negative x axis.
    pub fn azimuth(&self, row: usize, col: usize) -> f64 {
        self.y(row).atan2(self.x(col))
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(QpbError::Empty("grid"));
        }
        check_range("extent", self.extent, f64::MIN_POSITIVE, f64::INFINITY)
    }
}

/// Transverse complex amplitude with unit discrete norm `Σ|u|²·dA = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub data: Array2<Complex64>,
    pub grid: GridSpec,
}

impl ComplexField {
    /// Wraps samples and rescales them to unit norm.
    pub fn normalized(data: Array2<Complex64>, grid: GridSpec) -> Result<Self> {
        if data.dim() != grid.dim() {
            return Err(QpbError::DimensionMismatch { expected: grid.rows * grid.cols, found: data.len() });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(QpbError::InvalidState("non-finite field sample".into()));
        }
        let mut f = Self { data, grid };
        let n = f.norm();
        if n == 0.0 {
            return Err(QpbError::Empty("field has zero norm"));
        }
        f.data.mapv_inplace(|z| z / n);
        Ok(f)
    }

    /// Wraps samples without rescaling.
    pub fn raw(data: Array2<Complex64>, grid: GridSpec) -> Self {
        Self { data, grid }
    }

    pub fn norm(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.area_element()).sqrt()
    }

    pub fn intensity(&self) -> Array2<f64> {
        self.data.mapv(|z| z.norm_sqr())
    }

    /// Multiplies pointwise by `exp(i·phase)`.
    pub fn with_phase(&self, phase: &Array2<f64>) -> Result<Self> {
        if phase.dim() != self.data.dim() {
            return Err(QpbError::DimensionMismatch { expected: self.data.len(), found: phase.len() });
        }
        let mut data = self.data.clone();
        Zip::from(&mut data).and(phase).for_each(|u, &p| *u *= Complex64::from_polar(1.0, p));
        Ok(Self { data, grid: self.grid })
    }
}

/// Laguerre-Gaussian mode indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LgSpec {
    pub l: i32,
    pub p: u32,
}

/// Hermite-Gaussian mode indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HgSpec {
    pub n: u32,
    pub m: u32,
}

/// Samples `LG_{l,p}`, carrying `exp(+i(2p+|l|+1)ξ)` for the Gouy phase.
pub fn lg_field(spec: LgSpec, beam: &BeamGeometry, grid: GridSpec) -> Result<ComplexField> {
    grid.validate()?;
    let w = beam.width();
    let al = spec.l.unsigned_abs() as usize;
    let p = spec.p as usize;
    let c = (2.0 * factorial(p) / (PI * factorial(p + al))).sqrt() / w;
    let k = beam.wavenumber();
    let curv = beam.curvature();
    let gouy = (2 * p + al + 1) as f64 * beam.gouy();
    let data = Array2::from_shape_fn(grid.dim(), |(i, j)| {
        let (x, y) = (grid.x(j), grid.y(i));
        let r2 = x * x + y * y;
        let s = 2.0 * r2 / (w * w);
        let amp = c * s.powf(al as f64 / 2.0) * (-r2 / (w * w)).exp() * laguerre(p, al as f64, s);
        let phase = -k * r2 * curv / 2.0 + spec.l as f64 * y.atan2(x) + gouy;
        Complex64::from_polar(amp, phase)
    });
    finish(data, grid)
}

/// Samples `HG_{n,m}`, carrying `exp(−i(n+m+1)ξ)` for the Gouy phase.
pub fn hg_field(spec: HgSpec, beam: &BeamGeometry, grid: GridSpec) -> Result<ComplexField> {
    grid.validate()?;
    let w = beam.width();
    let (n, m) = (spec.n as usize, spec.m as usize);
    let c = (2.0 / (PI * 2f64.powi((n + m) as i32) * factorial(n) * factorial(m))).sqrt() / w;
    let k = beam.wavenumber();
    let curv = beam.curvature();
    let gouy = -((n + m + 1) as f64) * beam.gouy();
    let data = Array2::from_shape_fn(grid.dim(), |(i, j)| {
        let (x, y) = (grid.x(j), grid.y(i));
        let r2 = x * x + y * y;
        let amp = c * hermite(n, 2f64.sqrt() * x / w) * hermite(m, 2f64.sqrt() * y / w) * (-r2 / (w * w)).exp();
        Complex64::from_polar(1.0, -k * r2 * curv / 2.0 + gouy) * amp
    });
    finish(data, grid)
}

fn finish(data: Array2<Complex64>, grid: GridSpec) -> Result<ComplexField> {
    let captured: f64 = data.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.area_element();
    if 1.0 - captured > CLIP_TOL {
        return Err(QpbError::ExtentTooSmall(1.0 - captured));
    }
    ComplexField::normalized(data, grid)
}

/// Normalized linear combination `Σ c_k f_k`.
pub fn superpose(coeffs: &[Complex64], fields: &[&ComplexField]) -> Result<ComplexField> {
    let first = fields.first().ok_or(QpbError::Empty("fields"))?;
    if coeffs.len() != fields.len() {
        return Err(QpbError::DimensionMismatch { expected: fields.len(), found: coeffs.len() });
    }
    let mut acc = Array2::zeros(first.grid.dim());
    for (c, f) in coeffs.iter().zip(fields) {
        same_grid(first, f)?;
        acc.scaled_add(*c, &f.data);
    }
    ComplexField::normalized(acc, first.grid)
}

/// Discrete inner product `⟨a|b⟩ = Σ conj(a)·b·dA`.
pub fn overlap(a: &ComplexField, b: &ComplexField) -> Result<Complex64> {
    same_grid(a, b)?;
    let s: Complex64 = a.data.iter().zip(b.data.iter()).map(|(x, y)| x.conj() * y).sum();
    Ok(s * a.grid.area_element())
}

fn same_grid(a: &ComplexField, b: &ComplexField) -> Result<()> {
    if a.grid != b.grid {
        return Err(QpbError::DimensionMismatch { expected: a.data.len(), found: b.data.len() });
    }
    Ok(())
}

/// Equal-weight superposition `(LG_{+l,0} + LG_{−l,0})/√2`.
pub fn petal_superposition(l: i32, beam: &BeamGeometry, grid: GridSpec) -> Result<ComplexField> {
    let a = lg_field(LgSpec { l, p: 0 }, beam, grid)?;
    let b = lg_field(LgSpec { l: -l, p: 0 }, beam, grid)?;
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    superpose(&[h, h], &[&a, &b])
}

/// Blazed grating plus an `l`-fold spiral, wrapped to `[0, 2π)`.
pub fn fork_hologram(l: i32, grid: GridSpec, period_px: f64) -> Result<Array2<f64>> {
    if period_px.is_nan() || period_px < 2.0 {
        return Err(QpbError::OutOfRange { name: "grating_period_px", value: period_px });
    }
    Ok(Array2::from_shape_fn(grid.dim(), |(i, j)| {
        (2.0 * PI * j as f64 / period_px + l as f64 * grid.azimuth(i, j)).rem_euclid(2.0 * PI)
    }))
}

/// 8-bit binary PGM image of an intensity map scaled to its maximum.
pub fn intensity_pgm(intensity: &Array2<f64>) -> Vec<u8> {
    let (rows, cols) = intensity.dim();
    let max = intensity.iter().cloned().fold(0.0, f64::max);
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(intensity.iter().map(|&v| if max > 0.0 { (255.0 * v / max).round() as u8 } else { 0 }));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup(n: usize) -> (BeamGeometry, GridSpec) {
        (BeamGeometry::default(), GridSpec::square(n, 8e-3))
    }

    fn argmax(a: &Array2<f64>) -> (usize, usize) {
        let mut best = (0, 0);
        for ((i, j), v) in a.indexed_iter() {
            if *v > a[best] {
                best = (i, j);
            }
        }
        best
    }

    #[test]
    fn beam_geometry() {
        let b = BeamGeometry::default();
        assert_eq!(b.gouy(), 0.0);
        assert_eq!(b.curvature(), 0.0);
        assert_eq!(b.width(), b.w0);
        let far = BeamGeometry { z: 2.0, ..b };
        assert!(far.width() > b.w0);
        assert!(BeamGeometry::new(-1.0, 1e-3, 0.0).is_err());
    }

    #[test]
    fn lg_profiles() {
        let (b, g) = setup(128);
        let f = lg_field(LgSpec { l: 0, p: 0 }, &b, g).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-9);
        assert_eq!(argmax(&f.intensity()), g.center());
        let f = lg_field(LgSpec { l: 3, p: 0 }, &b, g).unwrap();
        assert_eq!(f.intensity()[g.center()], 0.0);
        let f = lg_field(LgSpec { l: 0, p: 1 }, &b, g).unwrap();
        let row = g.center().0;
        let line: Vec<f64> = (g.cols / 2..g.cols).map(|j| f.data[(row, j)].re).collect();
        let sign_changes = line.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
        assert_eq!(sign_changes, 1);
    }

    #[test]
    fn clipped_extent_is_rejected() {
        let b = BeamGeometry::default();
        let err = lg_field(LgSpec { l: 0, p: 0 }, &b, GridSpec::square(64, 1e-3)).unwrap_err();
        assert!(matches!(err, QpbError::ExtentTooSmall(_)));
    }

    #[test]
    fn hg_profiles() {
        let (b, g) = setup(128);
        let lg = lg_field(LgSpec { l: 0, p: 0 }, &b, g).unwrap();
        let hg = hg_field(HgSpec { n: 0, m: 0 }, &b, g).unwrap();
        assert!((lg.data.clone() - hg.data).iter().all(|z| z.norm() < 1e-9));
        let hg = hg_field(HgSpec { n: 1, m: 0 }, &b, g).unwrap();
        let (cr, cc) = g.center();
        for i in 1..g.rows {
            for d in 1..cc {
                let a = hg.data[(i, cc + d)];
                let m = hg.data[(i, cc - d)];
                assert!((a + m).norm() < 1e-9);
            }
        }
        let hg = hg_field(HgSpec { n: 2, m: 3 }, &b, g).unwrap();
        let count = |v: Vec<f64>| {
            let v: Vec<f64> = v.into_iter().filter(|x| x.abs() > 1e-12).collect();
            v.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
        };
        let along_x: Vec<f64> = (0..g.cols).map(|j| hg.data[(cr + 3, j)].re).collect();
        let along_y: Vec<f64> = (0..g.rows).map(|i| hg.data[(i, cc + 3)].re).collect();
        assert_eq!(count(along_x), 2);
        assert_eq!(count(along_y), 3);
    }

    #[test]
    fn mirror_l_is_conjugate() {
        let (b, g) = setup(64);
        let p = lg_field(LgSpec { l: 2, p: 1 }, &b, g).unwrap();
        let m = lg_field(LgSpec { l: -2, p: 1 }, &b, g).unwrap();
        for (a, c) in p.data.iter().zip(m.data.iter()) {
            assert!((a.conj() - c).norm() < 1e-9);
        }
    }

    #[test]
    fn superposition_petals_and_overlaps() {
        let (b, g) = setup(128);
        let s = petal_superposition(3, &b, g).unwrap();
        let a = lg_field(LgSpec { l: 3, p: 0 }, &b, g).unwrap();
        let c = lg_field(LgSpec { l: -3, p: 0 }, &b, g).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((overlap(&a, &s).unwrap() - h).norm() < 1e-6);
        assert!((overlap(&c, &s).unwrap() - h).norm() < 1e-6);
        assert!((s.norm() - 1.0).abs() < 1e-9);
        let ring_r = (1.5f64).sqrt() * b.w0;
        let samples: Vec<f64> = (0..720)
            .map(|k| {
                let t = k as f64 * PI / 360.0;
                let j = ((ring_r * t.cos()) / g.pitch()).round() as isize + (g.cols / 2) as isize;
                let i = ((ring_r * t.sin()) / g.pitch()).round() as isize + (g.rows / 2) as isize;
                s.data[(i as usize, j as usize)].norm_sqr()
            })
            .collect();
        let max = samples.iter().cloned().fold(0.0, f64::max);
        let bright: Vec<bool> = samples.iter().map(|&v| v > 0.5 * max).collect();
        let petals = (0..720).filter(|&k| bright[k] && !bright[(k + 719) % 720]).count();
        assert_eq!(petals, 6);
        let one = superpose(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], &[&a, &c]).unwrap();
        assert!((one.data - a.data).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn overlap_properties() {
        let (b, g) = setup(128);
        let a = lg_field(LgSpec { l: 3, p: 0 }, &b, g).unwrap();
        let c = lg_field(LgSpec { l: 4, p: 0 }, &b, g).unwrap();
        assert!((overlap(&a, &a).unwrap().re - 1.0).abs() < 1e-9);
        assert!(overlap(&a, &c).unwrap().norm() < 1e-3);
        let s = petal_superposition(2, &b, g).unwrap();
        assert!(overlap(&a, &s).unwrap().norm() <= 1.0);
        let other = lg_field(LgSpec { l: 0, p: 0 }, &b, GridSpec::square(64, 8e-3)).unwrap();
        assert!(overlap(&a, &other).is_err());
    }

    #[test]
    fn fork_hologram_winding() {
        let g = GridSpec::square(64, 8e-3);
        let plain = fork_hologram(0, g, 8.0).unwrap();
        assert!((plain[(5, 3)] - 2.0 * PI * 3.0 / 8.0).abs() < 1e-12);
        assert!(fork_hologram(1, g, 1.0).is_err());
        let mask = fork_hologram(1, g, 8.0).unwrap();
        assert!(mask.iter().all(|&v| (0.0..2.0 * PI).contains(&v)));
        let winding = |ci: usize, cj: usize, half: usize| {
            let mut path = Vec::new();
            for j in cj - half..cj + half {
                path.push((ci - half, j));
            }
            for i in ci - half..ci + half {
                path.push((i, cj + half));
            }
            for j in (cj - half + 1..=cj + half).rev() {
                path.push((ci + half, j));
            }
            for i in (ci - half + 1..=ci + half).rev() {
                path.push((i, cj - half));
            }
            let mut total = 0.0;
            for k in 0..path.len() {
                let a = mask[path[k]];
                let b = mask[path[(k + 1) % path.len()]];
                total += (b - a + PI).rem_euclid(2.0 * PI) - PI;
            }
            (total / (2.0 * PI)).round() as i32
        };
        let (ci, cj) = g.center();
        assert_eq!(winding(ci, cj, 10).abs(), 1);
        assert_eq!(winding(ci + 15, cj + 15, 5), 0);
    }

    #[test]
    fn pgm_header() {
        let img = intensity_pgm(&Array2::from_elem((2, 3), 1.0));
        assert!(img.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(img.len(), 11 + 6);
    }
}
