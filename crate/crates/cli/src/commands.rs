//! Subcommand definitions and the experiments behind them.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use qpb_core::camera::{
    analytic_coefficients, dsv_detected_moments, estimate_squeezing, fit_variance_curve, integrate_pixels,
    simulate_frames, variance_weights, CameraConfig,
};
use qpb_core::gaussian::{make_single_mode, wigner_gaussian};
use qpb_core::metrology::{sweep_curve, Detection, Su11Config, Vary};
use qpb_core::photon::{moments, pmf, sample_counts, CutoffPolicy};
use qpb_core::pipeline::{run_pipeline, PipelineConfig};
use qpb_core::rng::substream;
use qpb_core::source_id::accuracy_curve;
use qpb_core::tomography::{fidelity, reconstruct_density, QubitDensity, SixProbabilities};
use qpb_core::turbulence::{cn2_from_paper_units, cn2_to_paper_units, GdoInit};
use qpb_core::StateParams;

use crate::output::{Run, Table};
use crate::row;

/// Flag combinations that parse but make no sense together.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Photon-number distribution (and optionally a Wigner map) of a single-mode state.
    ///
    /// Figure mapping: Fig. 2.3 to 2.7 (vacuum, coherent, thermal, squeezed and
    /// displaced squeezed statistics), e.g. `states --family dsv --alpha 2 --r 1 --theta 1.5708`.
    States(StatesArgs),
    /// Optimized phase sensitivity of the SU(1,1) interferometer along a parameter sweep.
    ///
    /// Figure mapping: Fig. 3.4 (`--detection parity --vary r --n1 16 --n2 4 --g 2`),
    /// Fig. 3.5 (`--detection parity --vary g`), Fig. 3.6 (`--detection on-off --vary g --r 2`).
    Su11(Su11Args),
    /// Simulated camera frames of a displaced squeezed beam and the variance-versus-mean analysis.
    ///
    /// Figure mapping: Fig. 3.8 and 3.9 (cumulative pixel groups at phase 0 and π/2,
    /// quadratic fits and squeezing estimate).
    Camera(CameraArgs),
    /// Naive Bayes discrimination of coherent and thermal light versus sequence length.
    ///
    /// Figure mapping: Fig. 4.5 (accuracy versus number of data points for several mean photon numbers).
    Discriminate(DiscriminateArgs),
    /// Turbulence distortion, strength estimation, iterative correction and channel capacity.
    ///
    /// Figure mapping: Fig. 5.3 (MSE trace), Fig. 5.5 (crosstalk matrices), Fig. 5.6 (mutual information).
    Turbulence(TurbulenceArgs),
    /// Six-projection tomography of the OAM qubit before and after turbulence and correction.
    ///
    /// Figure mapping: Fig. 5.7 (reconstructed density matrices and fidelities).
    Tomography(TomographyArgs),
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::States(a) => states(a),
        Command::Su11(a) => su11(a),
        Command::Camera(a) => camera(a),
        Command::Discriminate(a) => discriminate(a),
        Command::Turbulence(a) => turbulence(a),
        Command::Tomography(a) => tomography(a),
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Vacuum,
    Thermal,
    Coherent,
    Sv,
    Dsv,
}

#[derive(Args, Debug, Serialize)]
pub struct StatesArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Displacement amplitude |α|.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Displacement phase in radians.
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    /// Squeezing parameter.
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    /// Squeezing angle in radians.
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
    /// Mean thermal photon number.
    #[arg(long, default_value_t = 0.0)]
    n_th: f64,
    /// Tabulate exactly `0..=cutoff` instead of the adaptive cutoff.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Monte Carlo draws added as an empirical column.
    #[arg(long, default_value_t = 0)]
    samples: usize,
    /// Points per axis of the Wigner map (0 disables it).
    #[arg(long, default_value_t = 0)]
    wigner_points: usize,
    /// Half-width of the Wigner map in quadrature units.
    #[arg(long, default_value_t = 4.0)]
    wigner_extent: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn states(a: StatesArgs) -> Result<()> {
    let params = match a.family {
        Family::Vacuum => StateParams::Vacuum,
        Family::Thermal => StateParams::Thermal { n_th: a.n_th },
        Family::Coherent => StateParams::Coherent { alpha: a.alpha, phi: a.phi },
        Family::Sv => StateParams::SqueezedVacuum { r: a.r, theta: a.theta },
        Family::Dsv => StateParams::Dsv { alpha: a.alpha, phi: a.phi, r: a.r, theta: a.theta },
    };
    let policy = a.cutoff.map_or(CutoffPolicy::Adaptive, CutoffPolicy::Fixed);
    let dist = pmf(params, policy)?;
    let mut run = Run::new(&a.out, "states", &a, Some(a.seed))?;
    let counts = (a.samples > 0).then(|| {
        let mut hist = vec![0usize; dist.cutoff + 2];
        for c in sample_counts(&dist, a.samples, a.seed, 0) {
            hist[(c as usize).min(dist.cutoff + 1)] += 1;
        }
        hist
    });
    let mut t = Table::new(if counts.is_some() { &["n", "probability", "empirical"] } else { &["n", "probability"] });
    for (n, &p) in dist.probs.iter().enumerate() {
        match &counts {
            Some(h) => t.push(row![n, p, h[n] as f64 / a.samples as f64]),
            None => t.push(row![n, p]),
        }
    }
    run.write_table("states.csv", &t)?;
    let m = moments(&dist);
    let mut s = Table::new(&["family", "cutoff", "tail_mass", "mean", "variance", "mandel_q"]);
    s.push(row![params.family(), dist.cutoff, dist.tail_mass, m.mean, m.variance, m.mandel_q]);
    run.write_table("states_moments.csv", &s)?;
    if a.wigner_points > 0 {
        if a.wigner_points < 2 {
            bail!(usage("--wigner-points must be 0 or at least 2"));
        }
        let state = make_single_mode(params)?;
        let mut w = Table::new(&["x", "p", "w"]);
        let step = 2.0 * a.wigner_extent / (a.wigner_points - 1) as f64;
        for i in 0..a.wigner_points {
            for j in 0..a.wigner_points {
                let (x, p) = (-a.wigner_extent + i as f64 * step, -a.wigner_extent + j as f64 * step);
                w.push(row![x, p, wigner_gaussian(&state, &[x, p])?]);
            }
        }
        run.write_table("states_wigner.csv", &w)?;
    }
    run.finish()
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionArg {
    Parity,
    OnOff,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VaryArg {
    R,
    G,
}

#[derive(Args, Debug, Serialize)]
pub struct Su11Args {
    #[arg(long, value_enum, default_value = "parity")]
    detection: DetectionArg,
    #[arg(long, value_enum, default_value = "r")]
    vary: VaryArg,
    /// Coherent photons in mode A.
    #[arg(long, default_value_t = 16.0)]
    n1: f64,
    /// Displacement photons of the squeezed input in mode B.
    #[arg(long, default_value_t = 4.0)]
    n2: f64,
    /// Gain of both parametric amplifiers (fixed value when sweeping r).
    #[arg(long, default_value_t = 2.0)]
    g: f64,
    /// Squeezing of the mode-B input (fixed value when sweeping g).
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    /// Start of the sweep (default 0 for r, 0.1 for g).
    #[arg(long)]
    from: Option<f64>,
    /// End of the sweep (default 3 for r, 2 for g).
    #[arg(long)]
    to: Option<f64>,
    #[arg(long, default_value_t = 31)]
    points: usize,
    /// Recorded in the manifest; the calculation is deterministic.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn su11(a: Su11Args) -> Result<()> {
    let (vary, lo, hi) = match a.vary {
        VaryArg::R => (Vary::R, a.from.unwrap_or(0.0), a.to.unwrap_or(3.0)),
        VaryArg::G => (Vary::G, a.from.unwrap_or(0.1), a.to.unwrap_or(2.0)),
    };
    if a.points < 2 {
        bail!(usage("--points must be at least 2"));
    }
    let detection = match a.detection {
        DetectionArg::Parity => Detection::Parity,
        DetectionArg::OnOff => Detection::OnOff,
    };
    let xs: Vec<f64> = (0..a.points).map(|i| lo + (hi - lo) * i as f64 / (a.points - 1) as f64).collect();
    let base = Su11Config::standard(a.n1, a.n2, a.r, a.g);
    let curve = sweep_curve(&base, vary, &xs, detection)?;
    let mut run = Run::new(&a.out, "su11", &a, Some(a.seed))?;
    let mut t = Table::new(&[vary.name(), "delta_phi", "snl", "hl", "phi_star"]);
    for p in &curve.points {
        t.push(row![p.x, p.delta_phi, p.snl, p.hl, p.phi_star]);
    }
    run.write_table("su11.csv", &t)?;
    run.note(format!("detection on output mode B ({})", detection.name()));
    run.finish()
}

#[derive(Args, Debug, Serialize)]
pub struct CameraArgs {
    /// Mean photon number of the displacement.
    #[arg(long, default_value_t = 1e6)]
    n_alpha: f64,
    /// Mean photon number of the squeezing.
    #[arg(long, default_value_t = 1.0)]
    n_s: f64,
    #[arg(long, default_value_t = 32)]
    rows: usize,
    #[arg(long, default_value_t = 32)]
    cols: usize,
    #[arg(long, default_value_t = 10_000)]
    frames: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn camera(a: CameraArgs) -> Result<()> {
    let mut run = Run::new(&a.out, "camera", &a, Some(a.seed))?;
    let mut groups = Table::new(&["phi", "pixels", "mean", "variance", "shot_noise", "analytic_variance"]);
    let mut fits = Table::new(&["phi", "a0", "a1", "a2", "a2_analytic"]);
    let mut fitted = Vec::new();
    for (i, phi) in [0.0, FRAC_PI_2].into_iter().enumerate() {
        let cfg = CameraConfig {
            rows: a.rows,
            cols: a.cols,
            n_frames: a.frames,
            ..CameraConfig::new(a.n_alpha, a.n_s, phi, substream(a.seed, i as u64))
        };
        let points = integrate_pixels(&simulate_frames(&cfg)?)?;
        let pixels = cfg.pixels() as f64;
        for (k, p) in points.iter().enumerate() {
            let (_, v) = dsv_detected_moments(a.n_alpha, a.n_s, phi, (k + 1) as f64 / pixels)?;
            groups.push(row![phi, k + 1, p.mean, p.variance, p.mean, v]);
        }
        let weights = variance_weights(&points, a.frames);
        let fit = fit_variance_curve(&points, Some(&weights))?;
        fits.push(row![phi, fit.a0, fit.a1, fit.a2, analytic_coefficients(a.n_alpha, a.n_s, phi).2]);
        fitted.push(fit);
    }
    run.write_table("camera.csv", &groups)?;
    run.write_table("camera_fit.csv", &fits)?;
    let est = estimate_squeezing(&fitted[0], &fitted[1], a.n_alpha)?;
    let mut e = Table::new(&["n_s_true", "n_s_estimate", "r_estimate", "residual"]);
    e.push(row![a.n_s, est.n_s, est.r, est.residual]);
    run.write_table("camera_estimate.csv", &e)?;
    run.note("photons of each frame are assigned to pixels by a uniform multinomial draw");
    run.finish()
}

#[derive(Args, Debug, Serialize)]
pub struct DiscriminateArgs {
    /// Mean photon numbers, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.40,0.53,0.67,0.77")]
    n_bar: Vec<f64>,
    /// Sequence lengths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,40,80,160")]
    sizes: Vec<usize>,
    /// Trials per source and sequence length.
    #[arg(long, default_value_t = 5000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn discriminate(a: DiscriminateArgs) -> Result<()> {
    let mut run = Run::new(&a.out, "discriminate", &a, Some(a.seed))?;
    let mut t = Table::new(&["n_bar", "k", "accuracy", "errbar"]);
    let mut c = Table::new(&[
        "n_bar",
        "k",
        "coherent_as_coherent",
        "coherent_as_thermal",
        "thermal_as_coherent",
        "thermal_as_thermal",
    ]);
    for (i, &n_bar) in a.n_bar.iter().enumerate() {
        let curve = accuracy_curve(n_bar, &a.sizes, a.trials, substream(a.seed, i as u64))?;
        for (j, &k) in curve.sample_sizes.iter().enumerate() {
            t.push(row![n_bar, k, curve.accuracy[j], curve.errbar[j]]);
            let m = curve.confusion[j];
            c.push(row![n_bar, k, m[0][0], m[0][1], m[1][0], m[1][1]]);
        }
    }
    run.write_table("discriminate.csv", &t)?;
    run.write_table("discriminate_confusion.csv", &c)?;
    run.finish()
}

#[derive(Args, Debug, Serialize)]
pub struct TurbulenceFlags {
    /// Structure constants in m^(-2/3), comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "cn2_paper_units")]
    cn2: Option<Vec<f64>>,
    /// Structure constants in units of 1e-13 mm^(-2/3), comma separated.
    #[arg(long, value_delimiter = ',')]
    cn2_paper_units: Option<Vec<f64>>,
    /// Samples per side of the simulation grid.
    #[arg(long, default_value_t = 256)]
    grid: usize,
    /// Half-width of the simulation window in metres.
    #[arg(long, default_value_t = 8e-3)]
    half_width: f64,
    /// Beam waist in metres.
    #[arg(long, default_value_t = 1e-3)]
    waist: f64,
    #[arg(long, default_value_t = 633e-9)]
    wavelength: f64,
    /// Turbulent path length in metres.
    #[arg(long, default_value_t = 200.0)]
    distance: f64,
    /// Separation between the modulator and camera planes in metres.
    #[arg(long, default_value_t = 1.0)]
    propagation: f64,
    #[arg(long, default_value_t = 1e-3)]
    inner_scale: f64,
    #[arg(long, default_value_t = 50.0)]
    outer_scale: f64,
    #[arg(long, default_value_t = 3)]
    qubit_l: i32,
    /// Alphabet is `-max..=max`.
    #[arg(long, default_value_t = 5)]
    alphabet_max: i32,
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    /// Initial estimate of the correction loop.
    #[arg(long, value_enum, default_value = "zero")]
    init: InitArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitArg {
    Zero,
    Ensemble,
}

impl TurbulenceFlags {
    fn strengths(&self) -> Vec<f64> {
        match (&self.cn2, &self.cn2_paper_units) {
            (Some(v), _) => v.clone(),
            (None, Some(v)) => v.iter().map(|&p| cn2_from_paper_units(p)).collect(),
            (None, None) => [30.0, 60.0, 90.0].iter().map(|&p| cn2_from_paper_units(p)).collect(),
        }
    }

    fn config(&self) -> Result<PipelineConfig> {
        if self.alphabet_max < 0 {
            bail!(usage("--alphabet-max must be non-negative"));
        }
        Ok(PipelineConfig {
            grid_size: self.grid,
            extent: self.half_width,
            beam: qpb_core::BeamGeometry::new(self.wavelength, self.waist, 0.0)?,
            qubit_l: self.qubit_l,
            propagation: self.propagation,
            distance: self.distance,
            inner_scale: self.inner_scale,
            outer_scale: self.outer_scale,
            alphabet: (-self.alphabet_max..=self.alphabet_max).collect(),
            max_iter: self.max_iter,
            init: match self.init {
                InitArg::Zero => GdoInit::Zero,
                InitArg::Ensemble => GdoInit::EnsembleMean {
                    spec: qpb_core::turbulence::TurbulenceSpec::new(1e-15, self.distance, self.wavelength)?,
                    count: 20,
                    seed: substream(self.seed, 0xE5),
                },
            },
            seed: self.seed,
            ..PipelineConfig::default()
        })
    }
}

#[derive(Args, Debug, Serialize)]
pub struct TurbulenceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    flags: TurbulenceFlags,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn turbulence(a: TurbulenceArgs) -> Result<()> {
    let cfg = a.flags.config()?;
    let mut run = Run::new(&a.out, "turbulence", &a, Some(a.flags.seed))?;
    let mut summary = Table::new(&[
        "cn2_m",
        "cn2_paper",
        "cn2_estimate_paper",
        "fried_parameter",
        "mse_initial",
        "mse_final",
        "iterations",
        "fidelity_prepared",
        "fidelity_distorted",
        "fidelity_corrected",
        "mi_clean",
        "mi_distorted",
        "mi_corrected",
    ]);
    let mut trace = Table::new(&["cn2_paper", "iteration", "mse"]);
    let mut xt = Table::new(&["cn2_paper", "stage", "sent", "detected", "probability"]);
    for (i, &cn2) in a.flags.strengths().iter().enumerate() {
        let r = run_pipeline(&cfg, cn2, i as u64)?;
        let paper = cn2_to_paper_units(cn2);
        summary.push(row![
            cn2,
            paper,
            cn2_to_paper_units(r.cn2_estimate),
            cfg.spec(cn2)?.fried_parameter(),
            r.mse_trace[0],
            *r.mse_trace.last().unwrap_or(&0.0),
            r.mse_trace.len() - 1,
            r.fidelity_prepared,
            r.fidelity_distorted,
            r.fidelity_corrected,
            r.mi_clean,
            r.mi_distorted,
            r.mi_corrected,
        ]);
        for (it, m) in r.mse_trace.iter().enumerate() {
            trace.push(row![paper, it, *m]);
        }
        for (stage, m) in [
            ("clean", &r.crosstalk_clean),
            ("distorted", &r.crosstalk_distorted),
            ("corrected", &r.crosstalk_corrected),
        ] {
            for (s, &ls) in m.alphabet.iter().enumerate() {
                for (d, &ld) in m.alphabet.iter().enumerate() {
                    xt.push(row![paper, stage, ls, ld, m.probs[(d, s)]]);
                }
            }
        }
    }
    run.write_table("turbulence.csv", &summary)?;
    run.write_table("turbulence_mse.csv", &trace)?;
    run.write_table("turbulence_crosstalk.csv", &xt)?;
    run.note("cn2 columns are given both in m^(-2/3) and in units of 1e-13 mm^(-2/3)");
    run.finish()
}

#[derive(Args, Debug, Serialize)]
pub struct TomographyArgs {
    /// Reconstruct from six measured probabilities instead of simulating:
    /// `+l,-l,diag+,diag-,circ+,circ-`.
    #[arg(long, value_delimiter = ',')]
    probs: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    flags: TurbulenceFlags,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn density_row(t: &mut Table, label: &str, cn2_paper: f64, rho: &QubitDensity, f: f64) {
    let m = rho.rho;
    t.push(row![
        label,
        cn2_paper,
        f,
        m[(0, 0)].re,
        m[(0, 0)].im,
        m[(0, 1)].re,
        m[(0, 1)].im,
        m[(1, 0)].re,
        m[(1, 0)].im,
        m[(1, 1)].re,
        m[(1, 1)].im,
    ]);
}

fn density_text(label: &str, rho: &QubitDensity) -> String {
    let m = rho.rho;
    let grid = |part: fn(&Complex64) -> f64| {
        format!(
            "  {:>16.9e} {:>16.9e}\n  {:>16.9e} {:>16.9e}\n",
            part(&m[(0, 0)]),
            part(&m[(0, 1)]),
            part(&m[(1, 0)]),
            part(&m[(1, 1)])
        )
    };
    format!("{label}\n re\n{} im\n{}", grid(|z| z.re), grid(|z| z.im))
}

fn tomography(a: TomographyArgs) -> Result<()> {
    let mut run = Run::new(&a.out, "tomography", &a, Some(a.flags.seed))?;
    let mut t = Table::new(&[
        "stage",
        "cn2_paper",
        "fidelity",
        "rho00_re",
        "rho00_im",
        "rho01_re",
        "rho01_im",
        "rho10_re",
        "rho10_im",
        "rho11_re",
        "rho11_im",
    ]);
    let mut text = String::new();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let ideal = QubitDensity::pure(h.into(), h.into())?;
    if let Some(p) = &a.probs {
        if p.len() != 6 {
            bail!(usage(format!("--probs needs 6 values, got {}", p.len())));
        }
        let six = SixProbabilities { basis: [p[0], p[1]], diagonal: [p[2], p[3]], circular: [p[4], p[5]] };
        if p.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            bail!(usage("--probs entries must lie in [0, 1]"));
        }
        let rho = reconstruct_density(&six);
        density_row(&mut t, "measured", f64::NAN, &rho, fidelity(&rho, &ideal)?);
        text.push_str(&density_text("measured", &rho));
    } else {
        let cfg = a.flags.config()?;
        for (i, &cn2) in a.flags.strengths().iter().enumerate() {
            let r = run_pipeline(&cfg, cn2, i as u64)?;
            let paper = cn2_to_paper_units(cn2);
            for (label, rho, f) in [
                ("prepared", &r.prepared, r.fidelity_prepared),
                ("distorted", &r.distorted, r.fidelity_distorted),
                ("corrected", &r.corrected, r.fidelity_corrected),
            ] {
                density_row(&mut t, label, paper, rho, f);
                text.push_str(&density_text(&format!("{label} cn2_paper={paper}"), rho));
            }
        }
    }
    run.write_table("tomography.csv", &t)?;
    run.write_bytes("tomography_density.txt", text.as_bytes())?;
    run.note("fidelities are against (|+l> + |-l>)/sqrt(2)");
    run.finish()
}
