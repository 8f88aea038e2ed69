//! End-to-end dither experiment: acquisition, estimation, reconstruction, scoring.

use std::path::PathBuf;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dither::{cycle_difference, estimate_gradient, Axis, DifferenceSample, GradientField};
use crate::error::{NucError, Result};
use crate::grid::{Frame, Grid};
use crate::io;
use crate::poisson::reconstruct_offset;
use crate::rng::{self, Stage};
use crate::sensor::{capture, gain_compensate, GainMap, OffsetMap, TemporalNoiseModel};
use crate::sim::fpn::{gen_fpn, FpnModel};
use crate::sim::scene::{sample_shifted, FrameSequence, SceneModel, SceneSource, SyntheticScene};

/// Actuator error: the commanded one-pixel step lands at
/// `N(mean_longitudinal, σ_l)` along the dither axis and `N(0, σ_t)` across it,
/// redrawn every cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShiftErrorModel {
    pub mean_longitudinal: f64,
    pub sigma_longitudinal: f64,
    pub sigma_transverse: f64,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for ShiftErrorModel {
    fn default() -> Self {
        ShiftErrorModel {
            mean_longitudinal: 1.0,
            sigma_longitudinal: 0.0,
            sigma_transverse: 0.0,
            seed: 0,
        }
    }
}

impl ShiftErrorModel {
    /// Actual `(dx, dy)` displacement for one cycle.
    pub fn draw(&self, axis: Axis, cycle: usize) -> (f64, f64) {
        let mut rng = rng::stream(self.seed, &[axis.index(), cycle as u64]);
        let zl: f64 = StandardNormal.sample(&mut rng);
        let zt: f64 = StandardNormal.sample(&mut rng);
        let along = self.mean_longitudinal + self.sigma_longitudinal * zl;
        let across = self.sigma_transverse * zt;
        match axis {
            Axis::Horizontal => (along, across),
            Axis::Vertical => (across, along),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GainSpec {
    Uniform {
        value: f64,
    },
    /// Log-normal per-pixel gain `exp(spread·z)`.
    Random {
        spread: f64,
    },
}

impl Default for GainSpec {
    fn default() -> Self {
        GainSpec::Uniform { value: 1.0 }
    }
}

impl GainSpec {
    pub fn build(&self, height: usize, width: usize, seed: u64) -> Result<GainMap> {
        match *self {
            GainSpec::Uniform { value } => GainMap::uniform(height, width, value),
            GainSpec::Random { spread } => {
                let mut rng = rng::stream(seed, &[0]);
                GainMap::new(Frame::from_fn(height, width, |_, _| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (spread * z).exp()
                })?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: SceneModel,
    /// Directory of PFM/PGM frames to use instead of the synthetic scene.
    pub scene_dir: Option<PathBuf>,
    pub fpn: FpnModel,
    pub gain: GainSpec,
    pub temporal_sigma: f64,
    pub cycles_per_axis: usize,
    /// Scene frames between the starts of consecutive dither cycles.
    pub cycle_interval: u64,
    pub shift_error: ShiftErrorModel,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scene: SceneModel::default(),
            scene_dir: None,
            fpn: FpnModel::default(),
            gain: GainSpec::default(),
            temporal_sigma: 3e-4,
            cycles_per_axis: 32,
            cycle_interval: 256,
            shift_error: ShiftErrorModel::default(),
            master_seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cycles_per_axis == 0 {
            return Err(NucError::InvalidParameter(
                "cycles_per_axis must be >= 1".into(),
            ));
        }
        if self.cycle_interval == 0 {
            return Err(NucError::InvalidParameter(
                "cycle_interval must be >= 1".into(),
            ));
        }
        if !(self.temporal_sigma >= 0.0 && self.temporal_sigma.is_finite()) {
            return Err(NucError::InvalidParameter(
                "temporal_sigma must be >= 0".into(),
            ));
        }
        let s = &self.shift_error;
        if !(s.sigma_longitudinal >= 0.0
            && s.sigma_transverse >= 0.0
            && s.mean_longitudinal.is_finite())
        {
            return Err(NucError::InvalidParameter(
                "shift error sigmas must be >= 0 and the mean finite".into(),
            ));
        }
        if self.scene_dir.is_none() {
            self.scene.validate()?;
        }
        Ok(())
    }

    /// Copies of the component models with seeds derived from `master_seed`.
    pub fn seeded_scene(&self) -> SceneModel {
        SceneModel {
            seed: rng::stage_seed(self.master_seed, Stage::Scene),
            ..self.scene.clone()
        }
    }

    pub fn seeded_fpn(&self) -> FpnModel {
        FpnModel {
            seed: rng::stage_seed(self.master_seed, Stage::Fpn),
            ..self.fpn.clone()
        }
    }

    pub fn seeded_shift_error(&self) -> ShiftErrorModel {
        ShiftErrorModel {
            seed: rng::stage_seed(self.master_seed, Stage::Shift),
            ..self.shift_error.clone()
        }
    }

    pub fn noise_model(&self) -> Result<TemporalNoiseModel> {
        TemporalNoiseModel::new(
            self.temporal_sigma,
            rng::stage_seed(self.master_seed, Stage::TemporalNoise),
        )
    }

    pub fn scene_source(&self) -> Result<Box<dyn SceneSource>> {
        match &self.scene_dir {
            Some(dir) => {
                let frames = io::read_frame_dir(dir)?
                    .into_iter()
                    .map(|(_, f)| f)
                    .collect();
                Ok(Box::new(FrameSequence::new(frames)?))
            }
            None => Ok(Box::new(SyntheticScene::new(&self.seeded_scene())?)),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub acquisition_s: f64,
    pub reconstruction_s: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub estimated_offset: OffsetMap,
    pub true_offset: OffsetMap,
    pub normalized_error: f64,
    pub corrupted_error: f64,
    pub residual_norm: f64,
    /// Standard deviation of the first base scene frame, the metric's denominator.
    pub scene_std: f64,
    /// Cells whose every difference sample used in-domain scene data.
    pub valid: Vec<bool>,
    pub reference_scene: Frame,
    /// Gain-compensated capture of the first base frame.
    pub reference_capture: Frame,
    pub timings: StageTimings,
}

/// JSON-friendly digest of an [`ExperimentResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub height: usize,
    pub width: usize,
    pub master_seed: u64,
    pub cycles_per_axis: usize,
    pub normalized_error: f64,
    pub corrupted_error: f64,
    pub residual_norm: f64,
    pub scene_std: f64,
    pub valid_cells: usize,
    pub timings: StageTimings,
}

impl ExperimentResult {
    pub fn summary(&self, cfg: &ExperimentConfig) -> ExperimentSummary {
        let (height, width) = self.true_offset.dims();
        ExperimentSummary {
            height,
            width,
            master_seed: cfg.master_seed,
            cycles_per_axis: cfg.cycles_per_axis,
            normalized_error: self.normalized_error,
            corrupted_error: self.corrupted_error,
            residual_norm: self.residual_norm,
            scene_std: self.scene_std,
            valid_cells: self.valid.iter().filter(|&&v| v).count(),
            timings: self.timings,
        }
    }
}

/// Standard deviation of `estimate − truth` over valid cells, divided by `scene_std`.
///
/// The mean difference is removed first, so a constant added to either map
/// does not change the score.
pub fn normalized_error(
    estimate: &Grid,
    truth: &Grid,
    valid: &[bool],
    scene_std: f64,
) -> Result<f64> {
    estimate.ensure_same_dims(truth)?;
    if valid.len() != truth.len() {
        return Err(NucError::InvalidParameter(
            "validity mask does not match the map".into(),
        ));
    }
    if scene_std.is_nan() || scene_std <= 0.0 {
        return Err(NucError::Degenerate("scene has zero standard deviation"));
    }
    let diffs: Vec<f64> = estimate
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .zip(valid)
        .filter(|(_, &ok)| ok)
        .map(|((e, t), _)| e - t)
        .collect();
    if diffs.is_empty() {
        return Err(NucError::Degenerate("no valid cells to score"));
    }
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    Ok(var.sqrt() / scene_std)
}

/// Marks both endpoints of every difference that read a clamped shifted sample.
fn mark_invalid(valid: &mut [bool], shifted_valid: &[bool], axis: Axis, h: usize, w: usize) {
    match axis {
        Axis::Horizontal => {
            for i in 0..h {
                for j in 0..w - 1 {
                    if !shifted_valid[i * w + j] {
                        valid[i * w + j] = false;
                        valid[i * w + j + 1] = false;
                    }
                }
            }
        }
        Axis::Vertical => {
            for i in 0..h - 1 {
                for j in 0..w {
                    if !shifted_valid[i * w + j] {
                        valid[i * w + j] = false;
                        valid[(i + 1) * w + j] = false;
                    }
                }
            }
        }
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let scene = cfg.scene_source()?;
    run_experiment_on(cfg, scene.as_ref())
}

/// Everything measured during the dither campaign, before reconstruction.
#[derive(Debug, Clone)]
pub struct Acquisition {
    pub true_offset: OffsetMap,
    pub gradient: GradientField,
    /// Cells whose difference samples never read a clamped shifted pixel.
    pub valid: Vec<bool>,
    /// First base frame of the campaign, before and after capture.
    pub reference_scene: Frame,
    pub reference_capture: Frame,
}

/// Runs the horizontal then the vertical dither campaign and estimates the
/// offset gradient; `cfg.scene` and `cfg.scene_dir` are ignored.
pub fn acquire(cfg: &ExperimentConfig, scene: &dyn SceneSource) -> Result<Acquisition> {
    cfg.validate()?;
    let (h, w) = scene.dims();

    let truth = gen_fpn(&cfg.seeded_fpn(), h, w)?;
    let gain = cfg
        .gain
        .build(h, w, rng::stage_seed(cfg.master_seed, Stage::Gain))?;
    let offset_raw = truth.to_raw(&gain)?;
    let noise = cfg.noise_model()?;
    let shifts = cfg.seeded_shift_error();
    let n = cfg.cycles_per_axis;

    let mut valid = vec![true; h * w];
    let mut reference: Option<(Frame, Frame)> = None;
    let mut x_samples = Vec::with_capacity(n);
    let mut y_samples = Vec::with_capacity(n);

    for (block, axis) in [Axis::Horizontal, Axis::Vertical].into_iter().enumerate() {
        for cycle in 0..n {
            let slot = (block * n + cycle) as u64;
            let t = slot * cfg.cycle_interval;
            let base_scene = scene.frame(t);
            let shifted = sample_shifted(scene, t + 1, shifts.draw(axis, cycle))?;
            mark_invalid(&mut valid, &shifted.valid, axis, h, w);

            let base_raw = capture(&base_scene, &gain, &offset_raw, &noise, 2 * slot)?;
            let shifted_raw = capture(&shifted.frame, &gain, &offset_raw, &noise, 2 * slot + 1)?;
            let base = gain_compensate(&base_raw, &gain)?;
            let sample: DifferenceSample =
                cycle_difference(&base, &gain_compensate(&shifted_raw, &gain)?, axis)?;
            match axis {
                Axis::Horizontal => x_samples.push(sample),
                Axis::Vertical => y_samples.push(sample),
            }
            if reference.is_none() {
                reference = Some((base_scene, base));
            }
        }
    }
    let (reference_scene, reference_capture) = reference.expect("at least one cycle ran");
    let gradient = estimate_gradient(&x_samples, &y_samples)?;
    Ok(Acquisition {
        true_offset: truth,
        gradient,
        valid,
        reference_scene,
        reference_capture,
    })
}

/// Runs the experiment against an already constructed scene; `cfg.scene` and
/// `cfg.scene_dir` are ignored.
pub fn run_experiment_on(
    cfg: &ExperimentConfig,
    scene: &dyn SceneSource,
) -> Result<ExperimentResult> {
    let start = Instant::now();
    let acq = acquire(cfg, scene)?;
    let acquired = Instant::now();

    let report = reconstruct_offset(&acq.gradient)?;
    let reconstructed = Instant::now();

    let (h, w) = scene.dims();
    let scene_std = acq.reference_scene.stats().1;
    let zero = Grid::filled(h, w, 0.0)?;
    let truth = acq.true_offset;
    let normalized = normalized_error(report.offset.grid(), truth.grid(), &acq.valid, scene_std)?;
    let corrupted = normalized_error(&zero, truth.grid(), &acq.valid, scene_std)?;

    Ok(ExperimentResult {
        estimated_offset: report.offset,
        true_offset: truth,
        normalized_error: normalized,
        corrupted_error: corrupted,
        residual_norm: report.residual_norm,
        scene_std,
        valid: acq.valid,
        reference_scene: acq.reference_scene,
        reference_capture: acq.reference_capture,
        timings: StageTimings {
            acquisition_s: (acquired - start).as_secs_f64(),
            reconstruction_s: (reconstructed - acquired).as_secs_f64(),
        },
    })
}
