//! Matching detections to ground truth and scoring whole test sets.

use serde::{Deserialize, Serialize};

use super::metrics::EvalReport;
use super::render::{random_scene_spec, render_scene, GroundTruth, RandomSceneOptions};
use super::DatasetError;
use crate::classify::{CardLabel, KnnModel};
use crate::pipeline::{analyze, PipelineConfig, PipelineError, StageTimings};
use crate::raster::ImageRgb;
use crate::reproject::Quad;
use crate::scalar::Scalar;

/// Fraction of the ground-truth diagonal within which centroids match.
pub const MATCH_RADIUS: f64 = 0.25;

/// Greedy one-to-one matching by centroid distance, closest pairs first.
/// Returns `(truth index, detection index)` pairs.
pub fn match_detections(truths: &[Quad<f64>], detections: &[Quad<f64>]) -> Vec<(usize, usize)> {
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for (i, t) in truths.iter().enumerate() {
        let (tc, radius) = (t.centroid(), MATCH_RADIUS * t.diagonal());
        for (j, d) in detections.iter().enumerate() {
            let dist = tc.dist(d.centroid());
            if dist <= radius {
                cands.push((dist, i, j));
            }
        }
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut t_used = vec![false; truths.len()];
    let mut d_used = vec![false; detections.len()];
    let mut out = Vec::new();
    for (_, i, j) in cands {
        if !t_used[i] && !d_used[j] {
            t_used[i] = true;
            d_used[j] = true;
            out.push((i, j));
        }
    }
    out.sort_unstable();
    out
}

/// Outcome of running the pipeline on one labelled scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEvaluation {
    /// `(truth, prediction)` for matched cards.
    pub pairs: Vec<(CardLabel, CardLabel)>,
    pub missed: Vec<CardLabel>,
    pub spurious: Vec<CardLabel>,
    pub timings: StageTimings,
}

/// Runs the full pipeline on `image` and compares against `truths`.
/// Blank ground-truth cards take part in matching but are not scored.
pub fn evaluate_scene<T: Scalar>(
    model: &KnnModel<T>,
    cfg: &PipelineConfig,
    image: &ImageRgb,
    truths: &[GroundTruth],
) -> Result<SceneEvaluation, PipelineError> {
    let analysis = analyze(image, model, cfg)?;
    let det_quads: Vec<Quad<f64>> = analysis.cards.iter().map(|c| c.quad.cast()).collect();
    let truth_quads: Vec<Quad<f64>> = truths.iter().map(|t| t.quad).collect();
    let matches = match_detections(&truth_quads, &det_quads);
    let mut t_hit = vec![false; truths.len()];
    let mut d_hit = vec![false; det_quads.len()];
    let mut pairs = Vec::new();
    for &(i, j) in &matches {
        t_hit[i] = true;
        d_hit[j] = true;
        if let Some(t) = truths[i].label {
            pairs.push((t, analysis.cards[j].label));
        }
    }
    Ok(SceneEvaluation {
        pairs,
        missed: truths
            .iter()
            .zip(&t_hit)
            .filter(|(_, &h)| !h)
            .filter_map(|(t, _)| t.label)
            .collect(),
        spurious: analysis
            .cards
            .iter()
            .zip(&d_hit)
            .filter(|(_, &h)| !h)
            .map(|(c, _)| c.label)
            .collect(),
        timings: analysis.timings,
    })
}

/// Detection counts across a test set.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionStats {
    pub truths: usize,
    pub matched: usize,
    pub spurious: usize,
}

impl DetectionStats {
    pub fn recall(&self) -> f64 {
        if self.truths == 0 {
            1.0
        } else {
            self.matched as f64 / self.truths as f64
        }
    }

    pub fn from_scenes(scenes: &[SceneEvaluation]) -> Self {
        let matched: usize = scenes.iter().map(|s| s.pairs.len()).sum();
        let missed: usize = scenes.iter().map(|s| s.missed.len()).sum();
        Self {
            truths: matched + missed,
            matched,
            spurious: scenes.iter().map(|s| s.spurious.len()).sum(),
        }
    }
}

impl EvalReport {
    pub fn from_scenes(scenes: &[SceneEvaluation]) -> Self {
        let pairs: Vec<_> = scenes.iter().flat_map(|s| s.pairs.iter().copied()).collect();
        let missed: Vec<_> = scenes.iter().flat_map(|s| s.missed.iter().copied()).collect();
        let spurious: Vec<_> = scenes.iter().flat_map(|s| s.spurious.iter().copied()).collect();
        Self::from_outcomes(&pairs, &missed, &spurious)
    }
}

/// Renders `count` random scenes (scene `i` seeded with `seed + i`) and
/// evaluates the model on each.
pub fn evaluate_synthetic<T: Scalar>(
    model: &KnnModel<T>,
    cfg: &PipelineConfig,
    opts: &RandomSceneOptions,
    count: usize,
    seed: u64,
) -> Result<Vec<SceneEvaluation>, DatasetError> {
    (0..count as u64)
        .map(|i| {
            let spec = random_scene_spec(seed.wrapping_add(i), opts, None)?;
            let scene = render_scene(&spec)?;
            Ok(evaluate_scene(model, cfg, &scene.image, &scene.ground_truth)?)
        })
        .collect()
}
