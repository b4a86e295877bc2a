//! Training data on disk, synthetic scenes and evaluation metrics.

mod eval;
mod metrics;
mod render;
mod training;

use thiserror::Error;

pub use eval::{evaluate_scene, evaluate_synthetic, match_detections, DetectionStats, SceneEvaluation};
pub use metrics::{ClassMetrics, EvalReport};
pub use render::{
    ground_truth_mask, random_scene_spec, render_scene, CardPlacement, Face, GroundTruth, RandomSceneOptions,
    SceneSidecar, SceneSpec, SidecarCard, SyntheticScene, CARD_ASPECT, FELT,
};
pub use training::{
    load_scene_dir, load_training_dir, synthetic_training_set, write_scene_dir, write_training_dir, LabeledPatch,
    SceneFile,
};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("directory not found: {0}")]
    MissingDir(String),
    #[error("malformed file name {0:?} (expected <index>-<label>.png)")]
    BadName(String),
    #[error("unknown label {label:?} in {file:?}")]
    UnknownLabel { file: String, label: String },
    #[error("{file:?}: expected a {expected}x{expected} patch, found {width}x{height}")]
    PatchSize {
        file: String,
        expected: usize,
        width: usize,
        height: usize,
    },
    #[error("no examples found in {0}")]
    Empty(String),
    #[error("invalid scene: {0}")]
    InvalidSpec(String),
    #[error("{file:?}: {msg}")]
    Sidecar { file: String, msg: String },
    #[error(transparent)]
    Raster(#[from] crate::raster::RasterError),
    #[error(transparent)]
    Pipeline(#[from] crate::pipeline::PipelineError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
