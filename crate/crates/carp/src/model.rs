//! Building the classifier once at startup.

use std::path::Path;

use carp_core::classify::{train_knn, ClassifyError};
use carp_core::dataset::{load_training_dir, synthetic_training_set, DatasetError, LabeledPatch, RandomSceneOptions};
use carp_core::pipeline::PipelineConfig;
use carp_core::{HogParams, KnnModel};
use thiserror::Error;

pub const DEFAULT_K: usize = 3;
/// Examples per class in the built-in synthetic training set.
pub const SYNTHETIC_PER_LABEL: usize = 12;
/// Seed range for synthetic training scenes, far from typical test seeds.
pub const SYNTHETIC_TRAIN_SEED: u64 = 1 << 40;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no training data: pass --train-dir, set CARP_TRAIN_DIR, use --model or --synthetic-model")]
    NoSource,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

pub fn train_from_patches(patches: &[LabeledPatch], k: usize) -> Result<KnnModel, ModelError> {
    let pairs: Vec<_> = patches.iter().map(|p| (p.patch.clone(), p.label)).collect();
    Ok(train_knn(&pairs, k, &HogParams::default())?)
}

pub fn train_from_dir(dir: &Path, k: usize) -> Result<KnnModel, ModelError> {
    train_from_patches(&load_training_dir(dir)?, k)
}

/// Patches cut from rendered scenes by the pipeline itself.
pub fn synthetic_patches(cfg: &PipelineConfig) -> Result<Vec<LabeledPatch>, ModelError> {
    Ok(synthetic_training_set(
        SYNTHETIC_PER_LABEL,
        SYNTHETIC_TRAIN_SEED,
        &RandomSceneOptions::default(),
        cfg,
    )?)
}

pub fn synthetic_model(cfg: &PipelineConfig, k: usize) -> Result<KnnModel, ModelError> {
    train_from_patches(&synthetic_patches(cfg)?, k)
}

/// Where the classifier comes from, in order of precedence.
#[derive(Debug, Clone, Default)]
pub struct ModelSource<'a> {
    pub model_file: Option<&'a Path>,
    pub train_dir: Option<&'a Path>,
    pub synthetic: bool,
}

impl ModelSource<'_> {
    pub fn is_empty(&self) -> bool {
        self.model_file.is_none() && self.train_dir.is_none() && !self.synthetic
    }

    /// `k` overrides the value stored in a model file.
    pub fn load(&self, k: Option<usize>, cfg: &PipelineConfig) -> Result<KnnModel, ModelError> {
        if let Some(path) = self.model_file {
            let m = KnnModel::load(path)?;
            return Ok(match k {
                Some(k) => m.with_k(k)?,
                None => m,
            });
        }
        let k = k.unwrap_or(DEFAULT_K);
        if let Some(dir) = self.train_dir {
            return train_from_dir(dir, k);
        }
        if self.synthetic {
            return synthetic_model(cfg, k);
        }
        Err(ModelError::NoSource)
    }
}
