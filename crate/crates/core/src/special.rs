//! Orthogonal polynomials and factorial helpers.

use statrs::function::factorial::ln_factorial;

/// Generalized Laguerre polynomial `L_n^α(x)` by upward recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 + alpha - x) * cur - (k + alpha) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Physicists' Hermite polynomial `H_n(x)`.
pub fn hermite(n: usize, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub fn ln_fact(n: usize) -> f64 {
    ln_factorial(n as u64)
}

pub fn factorial(n: usize) -> f64 {
    ln_fact(n).exp()
}

/// Neumaier compensated summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn laguerre_low_orders() {
        let x = 0.7;
        assert_relative_eq!(laguerre(1, 0.0, x), 1.0 - x, epsilon = 1e-15);
        assert_relative_eq!(laguerre(2, 0.0, x), 0.5 * (x * x - 4.0 * x + 2.0), epsilon = 1e-15);
        assert_relative_eq!(laguerre(1, 3.0, x), 4.0 - x, epsilon = 1e-15);
        assert_relative_eq!(laguerre(2, 1.0, x), 0.5 * (x * x - 6.0 * x + 6.0), epsilon = 1e-14);
        for n in 0..8 {
            assert_relative_eq!(laguerre(n, 0.0, 0.0), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn hermite_low_orders() {
        let x = -1.3;
        assert_relative_eq!(hermite(2, x), 4.0 * x * x - 2.0, epsilon = 1e-14);
        assert_relative_eq!(hermite(3, x), 8.0 * x.powi(3) - 12.0 * x, epsilon = 1e-13);
        assert_relative_eq!(hermite(4, 0.0), 12.0, epsilon = 1e-14);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(v), 2.0);
        assert_relative_eq!(factorial(5), 120.0, epsilon = 1e-10);
    }
}
