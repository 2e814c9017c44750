//! Photon-number distributions, count moments, sampling and temperature relations.

use num_complex::Complex64;
use rand::Rng;

use crate::constants::{HBAR, K_B};
use crate::error::{QpbError, Result};
use crate::gaussian::StateParams;
use crate::rng::stream_rng;
use crate::special::{compensated_sum, ln_fact};

const TAIL_TARGET: f64 = 1e-12;
const RESCALE_AT: f64 = 1e150;

/// How far the pmf is tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutoffPolicy {
    /// Smallest cutoff whose remaining tail mass is below 1e-12.
    #[default]
    Adaptive,
    /// Tabulate exactly `n = 0..=cutoff`.
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    pub probs: Vec<f64>,
    pub cutoff: usize,
    pub family: StateParams,
    /// Probability mass beyond `cutoff`.
    pub tail_mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountMoments {
    pub mean: f64,
    pub variance: f64,
    pub mandel_q: f64,
}

impl PhotonDistribution {
    pub fn total(&self) -> f64 {
        compensated_sum(self.probs.iter().copied())
    }

    pub fn prob(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    /// Cumulative distribution over the tabulated range.
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }
}

/// Closed-form photon-number mean and variance of each family.
pub fn closed_form_moments(params: StateParams) -> (f64, f64) {
    match params {
        StateParams::Vacuum => (0.0, 0.0),
        StateParams::Thermal { n_th } => (n_th, n_th + n_th * n_th),
        StateParams::Coherent { alpha, .. } => (alpha * alpha, alpha * alpha),
        StateParams::SqueezedVacuum { r, .. } => {
            let s2 = r.sinh().powi(2);
            (s2, 2.0 * s2 * (1.0 + s2))
        }
        StateParams::Dsv { alpha, phi, r, theta } => dsv_moments(alpha, phi, r, theta),
    }
}

/// Mean and variance of a displaced squeezed vacuum.
pub fn dsv_moments(alpha: f64, phi: f64, r: f64, theta: f64) -> (f64, f64) {
    let a2 = alpha * alpha;
    let s2 = r.sinh().powi(2);
    let var = a2 * ((2.0 * r).cosh() - (2.0 * r).sinh() * (theta - 2.0 * phi).cos()) + 2.0 * s2 * (1.0 + s2);
    (a2 + s2, var)
}

/// Photon-number variance of a displaced squeezed vacuum with `theta = 0`, written in terms of
/// the displacement photons `n_alpha` and squeezing photons `n_s`.
pub fn dsv_variance_photons(n_alpha: f64, n_s: f64, phi: f64) -> f64 {
    n_alpha + 2.0 * n_alpha * n_s + 2.0 * n_s + 2.0 * n_s * n_s
        - 2.0 * (2.0 * phi).cos() * n_alpha * (n_s * (1.0 + n_s)).sqrt()
}

fn hard_cap(params: StateParams) -> usize {
    let (mean, var) = closed_form_moments(params);
    (10.0 * (mean + 10.0 * var.sqrt() + 20.0)).ceil() as usize
}

/// Photon-number distribution of a single-mode state family.
pub fn pmf(params: StateParams, policy: CutoffPolicy) -> Result<PhotonDistribution> {
    params.validate()?;
    let (mean, var) = closed_form_moments(params);
    let limit = match policy {
        CutoffPolicy::Adaptive => hard_cap(params),
        CutoffPolicy::Fixed(n) => n,
    };
    let bulk_end = mean + 8.0 * var.sqrt() + 10.0;
    let mut terms = Vec::with_capacity(limit.min(1 << 16) + 1);
    let mut gen = TermGenerator::new(params);
    for n in 0..=limit {
        let p = gen.next_term(n);
        if !p.is_finite() {
            return Err(QpbError::InvalidState(format!("photon probability overflow at n = {n}")));
        }
        terms.push(p);
        let adaptive = matches!(policy, CutoffPolicy::Adaptive);
        if adaptive && n as f64 > bulk_end && p < 1e-18 && terms[n - 1] < 1e-18 {
            break;
        }
    }
    let cutoff = match policy {
        CutoffPolicy::Fixed(n) => n,
        CutoffPolicy::Adaptive => {
            let mut tail = 0.0;
            let mut cut = terms.len() - 1;
            while cut > 0 && tail + terms[cut] < TAIL_TARGET {
                tail += terms[cut];
                cut -= 1;
            }
            cut
        }
    };
    let tabulated = compensated_sum(terms[cutoff + 1..].iter().copied());
    terms.truncate(cutoff + 1);
    let tail_mass = match policy {
        CutoffPolicy::Adaptive => tabulated,
        CutoffPolicy::Fixed(_) => (1.0 - compensated_sum(terms.iter().copied())).max(0.0),
    };
    Ok(PhotonDistribution { probs: terms, cutoff, family: params, tail_mass })
}

/// Streams `P(n)` for increasing `n`.
enum TermGenerator {
    Vacuum,
    Poisson { ln_mean: f64, mean: f64 },
    Thermal { ln_ratio: f64, ln_norm: f64 },
    Squeezed { t2: f64, last: f64 },
    Dsv(DsvRecurrence),
}

impl TermGenerator {
    fn new(params: StateParams) -> Self {
        match params {
            StateParams::Vacuum => TermGenerator::Vacuum,
            StateParams::Thermal { n_th: 0.0 } => TermGenerator::Vacuum,
            StateParams::Thermal { n_th } => {
                TermGenerator::Thermal { ln_ratio: (n_th / (1.0 + n_th)).ln(), ln_norm: -(1.0 + n_th).ln() }
            }
            StateParams::Coherent { alpha, .. } | StateParams::Dsv { alpha, r: 0.0, .. } => poisson(alpha),
            StateParams::SqueezedVacuum { r: 0.0, .. } => TermGenerator::Vacuum,
            StateParams::SqueezedVacuum { r, .. } => {
                TermGenerator::Squeezed { t2: r.tanh().powi(2), last: 1.0 / r.cosh() }
            }
            StateParams::Dsv { alpha, phi, r, theta } => TermGenerator::Dsv(DsvRecurrence::new(alpha, phi, r, theta)),
        }
    }

    fn next_term(&mut self, n: usize) -> f64 {
        match self {
            TermGenerator::Vacuum => (n == 0) as u8 as f64,
            TermGenerator::Poisson { ln_mean, mean } => {
                if *mean == 0.0 {
                    return (n == 0) as u8 as f64;
                }
                (n as f64 * *ln_mean - *mean - ln_fact(n)).exp()
            }
            TermGenerator::Thermal { ln_ratio, ln_norm } => (n as f64 * *ln_ratio + *ln_norm).exp(),
            TermGenerator::Squeezed { t2, last } => {
                if n % 2 == 1 {
                    return 0.0;
                }
                if n > 0 {
                    let m = (n / 2 - 1) as f64;
                    *last *= *t2 * (2.0 * m + 1.0) / (2.0 * (m + 1.0));
                }
                *last
            }
            TermGenerator::Dsv(rec) => rec.next_term(n),
        }
    }
}

fn poisson(alpha: f64) -> TermGenerator {
    let mean = alpha * alpha;
    TermGenerator::Poisson { ln_mean: mean.ln(), mean }
}

/// Scaled Hermite recurrence for the displaced squeezed vacuum.
///
/// With `c = sqrt(tanh r / 2)` and `u_n = cⁿ H_n(z) / sqrt(n!)`, the probability is
/// `P(n) = |u_n|² · exp(−α²(1 + tanh r · cos(θ − 2φ))) / cosh r`. The pair
/// `(u_{n−1}, u_n)` is stored with a shared logarithmic scale so neither the
/// polynomial nor the Gaussian prefactor can overflow.
struct DsvRecurrence {
    cz2: Complex64,
    c2: f64,
    prev: Complex64,
    cur: Complex64,
    ln_scale: f64,
    ln_pref: f64,
}

impl DsvRecurrence {
    fn new(alpha: f64, phi: f64, r: f64, theta: f64) -> Self {
        let t = r.tanh();
        let c = (t / 2.0).sqrt();
        let gamma = alpha * (Complex64::from_polar(r.cosh(), phi) + Complex64::from_polar(r.sinh(), theta - phi));
        let root = Complex64::from_polar((2.0 * r).sinh().sqrt(), theta / 2.0);
        let z = gamma / root;
        let ln_pref = -alpha * alpha * (1.0 + t * (theta - 2.0 * phi).cos()) - r.cosh().ln();
        Self {
            cz2: 2.0 * c * z,
            c2: 2.0 * c * c,
            prev: Complex64::new(0.0, 0.0),
            cur: Complex64::new(1.0, 0.0),
            ln_scale: 0.0,
            ln_pref,
        }
    }

    fn next_term(&mut self, n: usize) -> f64 {
        if n > 0 {
            let k = (n - 1) as f64;
            let next = (self.cz2 * self.cur - self.c2 * k.sqrt() * self.prev) / (k + 1.0).sqrt();
            self.prev = self.cur;
            self.cur = next;
            let mag = self.cur.norm().max(self.prev.norm());
            if mag > RESCALE_AT || (mag < 1.0 / RESCALE_AT && mag > 0.0) {
                self.prev /= mag;
                self.cur /= mag;
                self.ln_scale += mag.ln();
            }
        }
        let m = self.cur.norm();
        if m == 0.0 {
            return 0.0;
        }
        (2.0 * (m.ln() + self.ln_scale) + self.ln_pref).exp()
    }
}

/// First two moments and Mandel Q of a tabulated distribution.
pub fn moments(dist: &PhotonDistribution) -> CountMoments {
    let mean = compensated_sum(dist.probs.iter().enumerate().map(|(n, p)| n as f64 * p));
    let variance = compensated_sum(dist.probs.iter().enumerate().map(|(n, p)| {
        let d = n as f64 - mean;
        d * d * p
    }))
    .max(0.0);
    let mandel_q = if mean > 0.0 { (variance - mean) / mean } else { 0.0 };
    CountMoments { mean, variance, mandel_q }
}

/// Inverse-CDF sampling on one `(seed, stream)` pair. Draws landing in the
/// untabulated tail are reported as `cutoff + 1`.
pub fn sample_counts(dist: &PhotonDistribution, n_samples: usize, seed: u64, stream: u64) -> Vec<u32> {
    let sampler = CountSampler::new(dist);
    let mut rng = stream_rng(seed, stream);
    (0..n_samples).map(|_| sampler.draw(&mut rng)).collect()
}

/// Reusable inverse-CDF sampler.
#[derive(Debug, Clone)]
pub struct CountSampler {
    cdf: Vec<f64>,
}

impl CountSampler {
    pub fn new(dist: &PhotonDistribution) -> Self {
        let mut cdf = dist.cdf();
        let total = dist.total() + dist.tail_mass;
        for c in &mut cdf {
            *c /= total;
        }
        Self { cdf }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u) as u32
    }
}

/// Bose occupation `1/(exp(ħω/k_B T) − 1)`.
pub fn thermal_mean_from_temperature(temperature: f64, omega: f64) -> Result<f64> {
    positive("temperature", temperature)?;
    positive("omega", omega)?;
    Ok(1.0 / (HBAR * omega / (K_B * temperature)).exp_m1())
}

/// Temperature giving the mean occupation `n_bar` at angular frequency `omega`.
pub fn temperature_from_thermal_mean(n_bar: f64, omega: f64) -> Result<f64> {
    positive("n_bar", n_bar)?;
    positive("omega", omega)?;
    Ok(HBAR * omega / (K_B * (1.0 / n_bar).ln_1p()))
}

/// Temperature of the thermal state seen in one arm of a two-mode squeezed vacuum.
pub fn tmsv_effective_temperature(r: f64, omega: f64) -> Result<f64> {
    positive("r", r)?;
    positive("omega", omega)?;
    let coth = 1.0 / r.tanh();
    Ok(HBAR * omega / (2.0 * K_B * coth.ln()))
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(QpbError::OutOfRange { name, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn adaptive(params: StateParams) -> PhotonDistribution {
        pmf(params, CutoffPolicy::Adaptive).unwrap()
    }

    #[test]
    fn closed_form_values() {
        let c = adaptive(StateParams::Coherent { alpha: 1.0, phi: 0.0 });
        assert_relative_eq!(c.prob(0), (-1f64).exp(), epsilon = 1e-15);
        let t = adaptive(StateParams::Thermal { n_th: 1.0 });
        for n in 0..10 {
            assert_relative_eq!(t.prob(n), 0.5f64.powi(n as i32 + 1), epsilon = 1e-15);
        }
        let s = adaptive(StateParams::SqueezedVacuum { r: 1.0, theta: 0.3 });
        assert_eq!(s.prob(1), 0.0);
        assert_eq!(s.prob(3), 0.0);
        assert_relative_eq!(s.prob(0), 1.0 / 1f64.cosh(), epsilon = 1e-15);
    }

    #[test]
    fn adaptive_tail_is_small() {
        for params in [
            StateParams::Coherent { alpha: 3.0, phi: 0.0 },
            StateParams::Thermal { n_th: 2.5 },
            StateParams::SqueezedVacuum { r: 1.5, theta: 0.0 },
            StateParams::Dsv { alpha: 4.0, phi: 0.3, r: 1.2, theta: 1.0 },
        ] {
            let d = adaptive(params);
            assert!(d.tail_mass <= 1e-12, "{params:?} tail {}", d.tail_mass);
            assert!((d.total() + d.tail_mass - 1.0).abs() < 1e-9, "{params:?}");
            assert!(d.probs.iter().all(|&p| p >= 0.0));
        }
    }

    #[test]
    fn dsv_limits_match_other_families() {
        let dsv = adaptive(StateParams::Dsv { alpha: 1.7, phi: 0.4, r: 0.0, theta: 0.2 });
        let coh = adaptive(StateParams::Coherent { alpha: 1.7, phi: 0.4 });
        for n in 0..coh.probs.len().max(dsv.probs.len()) {
            assert!((dsv.prob(n) - coh.prob(n)).abs() < 1e-10);
        }
        let dsv = adaptive(StateParams::Dsv { alpha: 0.0, phi: 0.0, r: 0.9, theta: 0.5 });
        let sv = adaptive(StateParams::SqueezedVacuum { r: 0.9, theta: 0.5 });
        for n in 0..sv.probs.len().max(dsv.probs.len()) {
            assert!((dsv.prob(n) - sv.prob(n)).abs() < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn moments_match_closed_forms() {
        let m = moments(&adaptive(StateParams::Coherent { alpha: 2f64.sqrt(), phi: 0.0 }));
        assert_relative_eq!(m.mean, 2.0, epsilon = 1e-9);
        assert_relative_eq!(m.variance, 2.0, epsilon = 1e-9);
        assert!(m.mandel_q.abs() < 1e-9);
        let m = moments(&adaptive(StateParams::Thermal { n_th: 1.0 }));
        assert_relative_eq!(m.variance, 2.0, epsilon = 1e-6);
        let m = moments(&adaptive(StateParams::SqueezedVacuum { r: 0.8, theta: 0.0 }));
        let (mean, var) = closed_form_moments(StateParams::SqueezedVacuum { r: 0.8, theta: 0.0 });
        assert_relative_eq!(m.mean, mean, epsilon = 1e-9);
        assert_relative_eq!(m.variance, var, epsilon = 1e-8);
    }

    #[test]
    fn dsv_variance_follows_photon_formula() {
        let r: f64 = 0.5;
        let n_s = r.sinh().powi(2);
        for k in 0..12 {
            let phi = k as f64 * 0.3;
            let m = moments(&adaptive(StateParams::Dsv { alpha: 2.0, phi, r, theta: 0.0 }));
            assert!((m.variance - dsv_variance_photons(4.0, n_s, phi)).abs() < 1e-6, "phi {phi}");
            assert!((m.mean - (4.0 + n_s)).abs() < 1e-6);
        }
    }

    #[test]
    fn dsv_can_be_sub_and_super_poissonian() {
        let sub = moments(&adaptive(StateParams::Dsv { alpha: 2.0, phi: 0.0, r: 0.5, theta: 0.0 }));
        let sup = moments(&adaptive(StateParams::Dsv { alpha: 2.0, phi: 1.5, r: 0.5, theta: 0.0 }));
        assert!(sub.mandel_q < 0.0);
        assert!(sup.mandel_q > 0.0);
    }

    #[test]
    fn large_dsv_stays_finite() {
        let d = adaptive(StateParams::Dsv { alpha: 50.0, phi: 0.7, r: 3.0, theta: 0.4 });
        assert!((d.total() + d.tail_mass - 1.0).abs() < 1e-9, "total {}", d.total());
        let m = moments(&d);
        let (mean, var) = dsv_moments(50.0, 0.7, 3.0, 0.4);
        assert!((m.mean - mean).abs() / mean < 1e-8);
        assert!((m.variance - var).abs() / var < 1e-7);
    }

    #[test]
    fn sampling() {
        let d = adaptive(StateParams::Coherent { alpha: 1.0, phi: 0.0 });
        let xs = sample_counts(&d, 1_000_000, 3, 0);
        let mean = xs.iter().map(|&x| x as f64).sum::<f64>() / xs.len() as f64;
        assert!((mean - 1.0).abs() < 3.0 / 1000.0);
        assert_eq!(xs[..100], sample_counts(&d, 100, 3, 0)[..]);
        let v = adaptive(StateParams::Vacuum);
        assert!(sample_counts(&v, 1000, 1, 1).iter().all(|&x| x == 0));
    }

    #[test]
    fn temperature_relations() {
        let omega = 2.0 * std::f64::consts::PI * 3e14;
        let t = HBAR * omega / (K_B * 2f64.ln());
        assert_relative_eq!(thermal_mean_from_temperature(t, omega).unwrap(), 1.0, epsilon = 1e-12);
        assert!(thermal_mean_from_temperature(1e-3, omega).unwrap() < 1e-300);
        let n = 0.37;
        let back = thermal_mean_from_temperature(temperature_from_thermal_mean(n, omega).unwrap(), omega).unwrap();
        assert_relative_eq!(back, n, epsilon = 1e-12);
        assert!(thermal_mean_from_temperature(0.0, omega).is_err());
        let mut last = 0.0;
        for k in 1..20 {
            let r = 0.1 * k as f64;
            let te = tmsv_effective_temperature(r, omega).unwrap();
            assert!(te > last);
            last = te;
            assert_relative_eq!(
                thermal_mean_from_temperature(te, omega).unwrap(),
                r.sinh().powi(2),
                max_relative = 1e-9
            );
        }
        assert!(tmsv_effective_temperature(0.0, omega).is_err());
    }
}
