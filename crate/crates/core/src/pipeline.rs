//! End-to-end turbulence experiment: prepare an OAM qubit, distort it with a
//! phase screen, estimate the strength, correct it, and score the result by
//! tomography and channel capacity.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{QpbError, Result};
use crate::modes::{lg_field, petal_superposition, BeamGeometry, ComplexField, GridSpec, LgSpec};
use crate::rng::substream;
use crate::tomography::{fidelity, project_six, reconstruct_density, QubitDensity};
use crate::turbulence::{
    crosstalk_matrix, gdo_correct, kolmogorov_screen_stream, mutual_information, Cn2Estimator, CrosstalkMatrix,
    GdoInit, GdoOptions, Propagator, TurbulenceSpec, MIN_FRAMES,
};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub grid_size: usize,
    /// Half-width of the simulation window in metres.
    pub extent: f64,
    pub beam: BeamGeometry,
    /// Qubit basis `|±l⟩`.
    pub qubit_l: i32,
    /// Plane separation between the distorting screen and the camera.
    pub propagation: f64,
    pub distance: f64,
    pub inner_scale: f64,
    pub outer_scale: f64,
    /// Detection alphabet for the crosstalk matrices.
    pub alphabet: Vec<i32>,
    pub max_iter: usize,
    pub init: GdoInit,
    /// Candidate structure constants (m^(-2/3)) for the strength estimate.
    pub candidates: Vec<f64>,
    pub estimator_frames: usize,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            grid_size: 256,
            extent: 8e-3,
            beam: BeamGeometry::default(),
            qubit_l: 3,
            propagation: 1.0,
            distance: 200.0,
            inner_scale: 1e-3,
            outer_scale: 50.0,
            alphabet: (-5..=5).collect(),
            max_iter: 300,
            init: GdoInit::Zero,
            candidates: [30.0, 60.0, 90.0].iter().map(|&v| crate::turbulence::cn2_from_paper_units(v)).collect(),
            estimator_frames: MIN_FRAMES,
            seed: 1,
        }
    }
}

impl PipelineConfig {
    pub fn grid(&self) -> GridSpec {
        GridSpec::square(self.grid_size, self.extent)
    }

    pub fn spec(&self, cn2: f64) -> Result<TurbulenceSpec> {
        let spec = TurbulenceSpec {
            inner_scale: self.inner_scale,
            outer_scale: self.outer_scale,
            ..TurbulenceSpec::new(cn2, self.distance, self.beam.wavelength)?
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Probe beams shown on the modulator during correction.
    pub fn probes(&self) -> Result<Vec<ComplexField>> {
        let grid = self.grid();
        Ok(vec![
            petal_superposition(self.qubit_l, &self.beam, grid)?,
            lg_field(LgSpec { l: 0, p: 0 }, &self.beam, grid)?,
            petal_superposition(self.qubit_l + 2, &self.beam, grid)?,
        ])
    }
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    /// Structure constant in m^(-2/3).
    pub cn2: f64,
    pub cn2_estimate: f64,
    pub mse_trace: Vec<f64>,
    pub converged: bool,
    pub prepared: QubitDensity,
    pub distorted: QubitDensity,
    pub corrected: QubitDensity,
    pub fidelity_prepared: f64,
    pub fidelity_distorted: f64,
    pub fidelity_corrected: f64,
    pub crosstalk_clean: CrosstalkMatrix,
    pub crosstalk_distorted: CrosstalkMatrix,
    pub crosstalk_corrected: CrosstalkMatrix,
    pub mi_clean: f64,
    pub mi_distorted: f64,
    pub mi_corrected: f64,
}

impl PipelineReport {
    pub fn mse_ratio(&self) -> f64 {
        let first = self.mse_trace.first().copied().unwrap_or(0.0);
        let last = self.mse_trace.last().copied().unwrap_or(0.0);
        if first > 0.0 {
            last / first
        } else {
            0.0
        }
    }
}

/// Runs the full experiment at one structure constant. `index` selects the
/// random streams so that several strengths can share a seed.
pub fn run_pipeline(cfg: &PipelineConfig, cn2: f64, index: u64) -> Result<PipelineReport> {
    let grid = cfg.grid();
    let spec = cfg.spec(cn2)?;
    let propagator = Propagator::fresnel(grid, cfg.beam.wavelength, cfg.propagation);
    let probes = cfg.probes()?;
    let qubit = &probes[0];
    let ideal = {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        QubitDensity::pure(h.into(), h.into())?
    };

    let screen = kolmogorov_screen_stream(&spec, grid, cfg.seed, substream(index, 0))?;

    let cn2_estimate = if cfg.candidates.is_empty() {
        cn2
    } else {
        let estimator = Cn2Estimator {
            probe: qubit.clone(),
            propagator: propagator.clone(),
            base: spec,
            template_frames: cfg.estimator_frames,
            seed: substream(cfg.seed, substream(index, 2)),
        };
        let frames: Vec<Array2<f64>> = (0..cfg.estimator_frames as u64)
            .into_par_iter()
            .map(|i| {
                let s = kolmogorov_screen_stream(&spec, grid, cfg.seed, substream(index, 1 + (i << 8)))?;
                propagator.observe(qubit, &s.data)
            })
            .collect::<Result<_>>()?;
        estimator.estimate(&frames, &cfg.candidates)?.0
    };

    let observations: Vec<Array2<f64>> =
        probes.iter().map(|p| propagator.observe(p, &screen.data)).collect::<Result<_>>()?;
    let init = match &cfg.init {
        GdoInit::EnsembleMean { count, seed, .. } => {
            GdoInit::EnsembleMean { spec: TurbulenceSpec { cn2: cn2_estimate, ..spec }, count: *count, seed: *seed }
        }
        other => other.clone(),
    };
    let options = GdoOptions { max_iter: cfg.max_iter, init, ..GdoOptions::default() };
    let gdo = gdo_correct(&probes, &observations, &propagator, &options)?;
    let residual = &screen.data + &gdo.correction;

    let tomo = |phase: Option<&Array2<f64>>| -> Result<QubitDensity> {
        let field = match phase {
            Some(p) => qubit.with_phase(p)?,
            None => qubit.clone(),
        };
        Ok(reconstruct_density(&project_six(&field, cfg.qubit_l, &cfg.beam)?))
    };
    let prepared = tomo(None)?;
    let distorted = tomo(Some(&screen.data))?;
    let corrected = tomo(Some(&residual))?;

    let modes: Vec<(i32, ComplexField)> = cfg
        .alphabet
        .iter()
        .map(|&l| lg_field(LgSpec { l, p: 0 }, &cfg.beam, grid).map(|f| (l, f)))
        .collect::<Result<_>>()?;
    if modes.is_empty() {
        return Err(QpbError::Empty("alphabet"));
    }
    let crosstalk_clean = crosstalk_matrix(&modes, None)?;
    let crosstalk_distorted = crosstalk_matrix(&modes, Some(&screen.data))?;
    let crosstalk_corrected = crosstalk_matrix(&modes, Some(&residual))?;

    Ok(PipelineReport {
        cn2,
        cn2_estimate,
        converged: gdo.converged,
        mse_trace: gdo.mse_trace,
        fidelity_prepared: fidelity(&prepared, &ideal)?,
        fidelity_distorted: fidelity(&distorted, &ideal)?,
        fidelity_corrected: fidelity(&corrected, &ideal)?,
        prepared,
        distorted,
        corrected,
        mi_clean: mutual_information(&crosstalk_clean),
        mi_distorted: mutual_information(&crosstalk_distorted),
        mi_corrected: mutual_information(&crosstalk_corrected),
        crosstalk_clean,
        crosstalk_distorted,
        crosstalk_corrected,
    })
}
