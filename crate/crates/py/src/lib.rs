//! Python bindings for the qpb toolkit.
//!
//! Heavy work runs with the interpreter lock released. Range and size errors
//! surface as `ValueError`, every other numerical failure as `RuntimeError`.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qpb_core::camera::{
    estimate_squeezing, fit_variance_curve, integrate_pixels, simulate_frames, variance_weights, CameraConfig,
};
use qpb_core::metrology::{self, Detection, Su11Config};
use qpb_core::photon::{self, CutoffPolicy};
use qpb_core::pipeline::{self, PipelineConfig};
use qpb_core::rng::substream;
use qpb_core::source_id::{self, NaiveBayes, Source};
use qpb_core::tomography::{self, QubitDensity, SixProbabilities};
use qpb_core::turbulence::{cn2_from_paper_units, CrosstalkMatrix};
use qpb_core::{QpbError, StateParams};

fn err(e: QpbError) -> PyErr {
    match e {
        QpbError::OutOfRange { .. }
        | QpbError::DimensionMismatch { .. }
        | QpbError::Empty(_)
        | QpbError::InvalidState(_)
        | QpbError::EnsembleTooSmall { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn state_params(family: &str, alpha: f64, phi: f64, r: f64, theta: f64, n_th: f64) -> PyResult<StateParams> {
    let p = match family {
        "vacuum" => StateParams::Vacuum,
        "thermal" => StateParams::Thermal { n_th },
        "coherent" => StateParams::Coherent { alpha, phi },
        "squeezed" | "squeezed_vacuum" => StateParams::SqueezedVacuum { r, theta },
        "dsv" => StateParams::Dsv { alpha, phi, r, theta },
        other => return Err(PyValueError::new_err(format!("unknown state family `{other}`"))),
    };
    p.validate().map_err(err)?;
    Ok(p)
}

fn detection(name: &str) -> PyResult<Detection> {
    match name {
        "parity" => Ok(Detection::Parity),
        "on-off" | "on_off" => Ok(Detection::OnOff),
        other => Err(PyValueError::new_err(format!("unknown detection `{other}`"))),
    }
}

fn source(name: &str) -> PyResult<Source> {
    match name {
        "coherent" => Ok(Source::Coherent),
        "thermal" => Ok(Source::Thermal),
        other => Err(PyValueError::new_err(format!("unknown source `{other}`"))),
    }
}

/// Photon-number probabilities `P(0..=cutoff)` of a single-mode Gaussian state.
/// Without `cutoff` the table extends until the tail mass is below 1e-12.
#[pyfunction]
#[pyo3(signature = (family, alpha=0.0, phi=0.0, r=0.0, theta=0.0, n_th=0.0, cutoff=None))]
fn photon_pmf(
    family: &str,
    alpha: f64,
    phi: f64,
    r: f64,
    theta: f64,
    n_th: f64,
    cutoff: Option<usize>,
) -> PyResult<Vec<f64>> {
    let p = state_params(family, alpha, phi, r, theta, n_th)?;
    let policy = cutoff.map_or(CutoffPolicy::Adaptive, CutoffPolicy::Fixed);
    Ok(photon::pmf(p, policy).map_err(err)?.probs)
}

/// `(mean, variance, mandel_q)` of the photon-number distribution.
#[pyfunction]
#[pyo3(signature = (family, alpha=0.0, phi=0.0, r=0.0, theta=0.0, n_th=0.0))]
fn photon_moments(family: &str, alpha: f64, phi: f64, r: f64, theta: f64, n_th: f64) -> PyResult<(f64, f64, f64)> {
    let p = state_params(family, alpha, phi, r, theta, n_th)?;
    let m = photon::moments(&photon::pmf(p, CutoffPolicy::Adaptive).map_err(err)?);
    Ok((m.mean, m.variance, m.mandel_q))
}

/// SU(1,1) interferometer fed with coherent light in one arm and a displaced
/// squeezed vacuum in the other.
#[pyclass(name = "Su11", module = "qpb", frozen)]
struct PySu11 {
    cfg: Su11Config,
}

#[pymethods]
impl PySu11 {
    #[new]
    #[pyo3(signature = (n1, n2, r, g))]
    fn new(n1: f64, n2: f64, r: f64, g: f64) -> Self {
        Self { cfg: Su11Config::standard(n1, n2, r, g) }
    }

    /// Both ports in vacuum.
    #[staticmethod]
    fn vacuum(g: f64) -> Self {
        Self { cfg: Su11Config::vacuum(g) }
    }

    #[getter]
    fn n_total(&self) -> f64 {
        self.cfg.n_total()
    }

    fn parity_signal(&self, phi: f64) -> PyResult<f64> {
        metrology::parity_signal(&self.cfg.with_phi(phi)).map_err(err)
    }

    fn on_signal(&self, phi: f64) -> PyResult<f64> {
        metrology::on_signal(&self.cfg.with_phi(phi)).map_err(err)
    }

    #[pyo3(signature = (phi, detection="parity"))]
    fn sensitivity(&self, phi: f64, detection: &str) -> PyResult<f64> {
        metrology::sensitivity(&self.cfg.with_phi(phi), self::detection(detection)?).map_err(err)
    }

    /// `(phi_star, delta_phi)` minimizing the phase uncertainty.
    #[pyo3(signature = (detection="parity"))]
    fn optimize(&self, py: Python<'_>, detection: &str) -> PyResult<(f64, f64)> {
        let d = self::detection(detection)?;
        let cfg = self.cfg;
        let o = py.detach(move || metrology::optimize_phi(&cfg, d)).map_err(err)?;
        Ok((o.phi_star, o.delta_phi))
    }

    /// `(snl, hl)` for the total photon number inside the interferometer.
    fn limits(&self) -> (f64, f64) {
        metrology::snl_hl(&self.cfg)
    }
}

#[pyclass(name = "SqueezingEstimate", module = "qpb", frozen, get_all)]
struct PySqueezingEstimate {
    n_s: f64,
    r: f64,
    residual: f64,
    /// `(a0, a1, a2)` of the variance curve at φ = 0 and φ = π/2.
    fit0: (f64, f64, f64),
    fit90: (f64, f64, f64),
}

/// Simulates the camera at φ = 0 and φ = π/2 and recovers the squeezing
/// photon number from the pixel-integration variance curves.
#[pyfunction]
#[pyo3(signature = (n_alpha, n_s, frames=10000, rows=32, cols=32, seed=1))]
fn camera_estimate(
    py: Python<'_>,
    n_alpha: f64,
    n_s: f64,
    frames: usize,
    rows: usize,
    cols: usize,
    seed: u64,
) -> PyResult<PySqueezingEstimate> {
    let run = move || -> qpb_core::Result<_> {
        let mut fits = Vec::new();
        for (i, phi) in [0.0, std::f64::consts::FRAC_PI_2].into_iter().enumerate() {
            let cfg = CameraConfig {
                rows,
                cols,
                n_frames: frames,
                ..CameraConfig::new(n_alpha, n_s, phi, substream(seed, i as u64))
            };
            let points = integrate_pixels(&simulate_frames(&cfg)?)?;
            let w = variance_weights(&points, frames);
            fits.push(fit_variance_curve(&points, Some(&w))?);
        }
        let est = estimate_squeezing(&fits[0], &fits[1], n_alpha)?;
        Ok((est, fits))
    };
    let (est, fits) = py.detach(run).map_err(err)?;
    let t = |f: &qpb_core::camera::QuadraticFit| (f.a0, f.a1, f.a2);
    Ok(PySqueezingEstimate { n_s: est.n_s, r: est.r, residual: est.residual, fit0: t(&fits[0]), fit90: t(&fits[1]) })
}

/// Photon counts drawn from a coherent or thermal source.
#[pyfunction]
#[pyo3(signature = (source, n_bar, k, seed=1, stream=0))]
fn generate_counts(source: &str, n_bar: f64, k: usize, seed: u64, stream: u64) -> PyResult<Vec<u32>> {
    Ok(source_id::generate_counts(self::source(source)?, n_bar, k, seed, stream).map_err(err)?.counts)
}

#[pyclass(name = "NaiveBayes", module = "qpb", frozen)]
struct PyNaiveBayes {
    inner: NaiveBayes,
}

#[pymethods]
impl PyNaiveBayes {
    #[new]
    #[pyo3(signature = (n_bar, prior_coherent=0.5, prior_thermal=0.5))]
    fn new(n_bar: f64, prior_coherent: f64, prior_thermal: f64) -> PyResult<Self> {
        Ok(Self { inner: NaiveBayes::with_priors(n_bar, prior_coherent, prior_thermal).map_err(err)? })
    }

    /// `(source, gap)` where a positive gap favours thermal light.
    fn classify(&self, counts: Vec<u32>) -> PyResult<(&'static str, f64)> {
        if counts.is_empty() {
            return Err(err(QpbError::Empty("counts")));
        }
        let d = self.inner.classify(&counts);
        Ok((d.source.name(), d.gap))
    }
}

#[pyclass(name = "AccuracyCurve", module = "qpb", frozen, get_all)]
struct PyAccuracyCurve {
    n_bar: f64,
    sample_sizes: Vec<usize>,
    accuracy: Vec<f64>,
    errbar: Vec<f64>,
    /// Per size: `[[cc, ct], [tc, tt]]`, rows the true source.
    confusion: Vec<[[usize; 2]; 2]>,
}

#[pyfunction]
#[pyo3(signature = (n_bar, sizes, trials=5000, seed=1))]
fn accuracy_curve(
    py: Python<'_>,
    n_bar: f64,
    sizes: Vec<usize>,
    trials: usize,
    seed: u64,
) -> PyResult<PyAccuracyCurve> {
    let c = py.detach(move || source_id::accuracy_curve(n_bar, &sizes, trials, seed)).map_err(err)?;
    Ok(PyAccuracyCurve {
        n_bar: c.n_bar,
        sample_sizes: c.sample_sizes,
        accuracy: c.accuracy,
        errbar: c.errbar,
        confusion: c.confusion,
    })
}

/// Qubit density matrix in the `{|+l⟩, |−l⟩}` basis.
#[pyclass(name = "QubitDensity", module = "qpb", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyQubitDensity {
    inner: QubitDensity,
}

#[pymethods]
impl PyQubitDensity {
    /// Pure state `a|+l⟩ + b|−l⟩`, normalized.
    #[staticmethod]
    fn pure(a: Complex64, b: Complex64) -> PyResult<Self> {
        Ok(Self { inner: QubitDensity::pure(a, b).map_err(err)? })
    }

    /// Linear-inversion estimate from the six projection probabilities
    /// `(+l, −l, D, A, R, L)`.
    #[staticmethod]
    fn reconstruct(probs: [f64; 6]) -> Self {
        let six = SixProbabilities {
            basis: [probs[0], probs[1]],
            diagonal: [probs[2], probs[3]],
            circular: [probs[4], probs[5]],
        };
        Self { inner: tomography::reconstruct_density(&six) }
    }

    fn matrix(&self) -> [[Complex64; 2]; 2] {
        let m = &self.inner.rho;
        [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
    }

    fn bloch(&self) -> [f64; 3] {
        self.inner.bloch()
    }

    fn eigenvalues(&self) -> [f64; 2] {
        self.inner.eigenvalues()
    }

    fn six_probabilities(&self) -> [f64; 6] {
        self.inner.six_probabilities().as_array()
    }

    fn fidelity(&self, other: &PyQubitDensity) -> PyResult<f64> {
        tomography::fidelity(&self.inner, &other.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        let [x, y, z] = self.inner.bloch();
        format!("QubitDensity(bloch=[{x:.6}, {y:.6}, {z:.6}])")
    }
}

fn matrix_rows(m: &CrosstalkMatrix) -> Vec<Vec<f64>> {
    m.probs.rows().into_iter().map(|r| r.to_vec()).collect()
}

#[pyclass(name = "PipelineReport", module = "qpb", frozen, get_all)]
struct PyPipelineReport {
    cn2: f64,
    cn2_estimate: f64,
    mse_trace: Vec<f64>,
    converged: bool,
    prepared: PyQubitDensity,
    distorted: PyQubitDensity,
    corrected: PyQubitDensity,
    fidelity_prepared: f64,
    fidelity_distorted: f64,
    fidelity_corrected: f64,
    alphabet: Vec<i32>,
    crosstalk_clean: Vec<Vec<f64>>,
    crosstalk_distorted: Vec<Vec<f64>>,
    crosstalk_corrected: Vec<Vec<f64>>,
    mi_clean: f64,
    mi_distorted: f64,
    mi_corrected: f64,
}

#[pymethods]
impl PyPipelineReport {
    fn mse_ratio(&self) -> f64 {
        let first = self.mse_trace.first().copied().unwrap_or(0.0);
        let last = self.mse_trace.last().copied().unwrap_or(0.0);
        if first > 0.0 {
            last / first
        } else {
            0.0
        }
    }
}

/// Distorts a `|±l⟩` qubit with a Kolmogorov screen, corrects it by iterative
/// phase retrieval and scores it by tomography and mode crosstalk.
/// Give the strength either in m^(-2/3) or in units of 1e-11 m^(-2/3).
#[pyfunction]
#[pyo3(signature = (cn2=None, cn2_paper_units=None, grid_size=256, max_iter=300, qubit_l=3, seed=1, index=0))]
#[allow(clippy::too_many_arguments)]
fn run_pipeline(
    py: Python<'_>,
    cn2: Option<f64>,
    cn2_paper_units: Option<f64>,
    grid_size: usize,
    max_iter: usize,
    qubit_l: i32,
    seed: u64,
    index: u64,
) -> PyResult<PyPipelineReport> {
    let cn2 = match (cn2, cn2_paper_units) {
        (Some(v), None) => v,
        (None, Some(p)) => cn2_from_paper_units(p),
        _ => return Err(PyValueError::new_err("give exactly one of cn2 and cn2_paper_units")),
    };
    let cfg = PipelineConfig { grid_size, max_iter, qubit_l, seed, ..PipelineConfig::default() };
    let r = py.detach(move || pipeline::run_pipeline(&cfg, cn2, index)).map_err(err)?;
    let q = |d: QubitDensity| PyQubitDensity { inner: d };
    Ok(PyPipelineReport {
        cn2: r.cn2,
        cn2_estimate: r.cn2_estimate,
        mse_trace: r.mse_trace,
        converged: r.converged,
        prepared: q(r.prepared),
        distorted: q(r.distorted),
        corrected: q(r.corrected),
        fidelity_prepared: r.fidelity_prepared,
        fidelity_distorted: r.fidelity_distorted,
        fidelity_corrected: r.fidelity_corrected,
        alphabet: r.crosstalk_clean.alphabet.clone(),
        crosstalk_clean: matrix_rows(&r.crosstalk_clean),
        crosstalk_distorted: matrix_rows(&r.crosstalk_distorted),
        crosstalk_corrected: matrix_rows(&r.crosstalk_corrected),
        mi_clean: r.mi_clean,
        mi_distorted: r.mi_distorted,
        mi_corrected: r.mi_corrected,
    })
}

#[pymodule]
fn qpb(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(photon_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(photon_moments, m)?)?;
    m.add_function(wrap_pyfunction!(camera_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(generate_counts, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy_curve, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_class::<PySu11>()?;
    m.add_class::<PySqueezingEstimate>()?;
    m.add_class::<PyNaiveBayes>()?;
    m.add_class::<PyAccuracyCurve>()?;
    m.add_class::<PyQubitDensity>()?;
    m.add_class::<PyPipelineReport>()?;
    Ok(())
}
