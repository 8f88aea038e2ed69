//! Seeded simulation of dither experiments on synthetic scenes.

pub mod experiment;
pub mod fpn;
pub mod scene;
pub mod sweep;

pub use experiment::{
    acquire, normalized_error, run_experiment, run_experiment_on, Acquisition, ExperimentConfig,
    ExperimentResult, ExperimentSummary, GainSpec, ShiftErrorModel, StageTimings,
};
pub use fpn::{gen_fpn, FpnModel};
pub use scene::{
    gen_scene_frame, resample_bilinear, sample_shifted, BlobModel, FrameSequence, SceneModel,
    SceneSource, ShiftedFrame, SyntheticScene,
};
pub use sweep::{
    cell_seed, sweep, sweep_with_threads, ParamSpec, SweepParam, SweepRow, SweepSpec, SweepTable,
};
