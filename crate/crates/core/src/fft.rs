//! Two-dimensional FFTs on row-major complex arrays.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Cached forward and inverse plans for one array shape. Both directions are unnormalized.
#[derive(Clone)]
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn forward(&self, data: &mut Array2<Complex64>) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse transform without the `1/(rows·cols)` factor.
    pub fn inverse(&self, data: &mut Array2<Complex64>) {
        self.run(data, &self.row_inv, &self.col_inv);
    }

    fn run(&self, data: &mut Array2<Complex64>, rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.dim(), (self.rows, self.cols), "array shape does not match the plan");
        if !data.is_standard_layout() {
            *data = data.as_standard_layout().into_owned();
        }
        rows.process(data.as_slice_mut().expect("standard layout"));
        let mut t = data.t().as_standard_layout().into_owned();
        cols.process(t.as_slice_mut().expect("standard layout"));
        data.assign(&t.t());
    }
}

/// Angular spatial frequencies `2π·fftfreq(n, d)` in FFT order.
pub fn angular_frequencies(n: usize, spacing: f64) -> Vec<f64> {
    let scale = 2.0 * PI / (n as f64 * spacing);
    (0..n)
        .map(|i| {
            let k = if i <= (n - 1) / 2 { i as isize } else { i as isize - n as isize };
            k as f64 * scale
        })
        .collect()
}

/// Squared magnitude of the forward transform.
pub fn power_spectrum(plan: &Fft2, data: &Array2<f64>) -> Array2<f64> {
    let mut c = data.mapv(|v| Complex64::new(v, 0.0));
    plan.forward(&mut c);
    c.mapv(|z| z.norm_sqr())
}

/// Elementwise mean of equally shaped arrays.
pub fn mean_of(arrays: &[Array2<f64>]) -> Option<Array2<f64>> {
    let first = arrays.first()?;
    let mut acc = Array2::zeros(first.dim());
    for a in arrays {
        acc += a;
    }
    Some(acc / arrays.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_delta() {
        let plan = Fft2::new(4, 6);
        let mut a = Array2::from_shape_fn((4, 6), |(i, j)| Complex64::new(i as f64 - j as f64 * 0.5, (i * j) as f64));
        let orig = a.clone();
        plan.forward(&mut a);
        plan.inverse(&mut a);
        for (x, y) in a.iter().zip(orig.iter()) {
            assert!((x / 24.0 - y).norm() < 1e-12);
        }
        let mut d = Array2::zeros((4, 6));
        d[(0, 0)] = Complex64::new(1.0, 0.0);
        plan.forward(&mut d);
        assert!(d.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn plane_wave_lands_in_one_bin() {
        let (n, m) = (8, 8);
        let plan = Fft2::new(n, m);
        let mut a = Array2::from_shape_fn((n, m), |(i, j)| {
            Complex64::from_polar(1.0, 2.0 * PI * (2.0 * i as f64 + 3.0 * j as f64) / 8.0)
        });
        plan.forward(&mut a);
        assert!((a[(2, 3)].norm() - 64.0).abs() < 1e-10);
        let freqs = angular_frequencies(8, 0.5);
        assert!((freqs[1] - 2.0 * PI / 4.0).abs() < 1e-15);
        assert!(freqs[4] < 0.0 && freqs[3] > 0.0);
    }
}
