//! End-to-end analysis of one table photograph.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{knn_predict, patch_features, CardLabel, ClassifyError, KnnModel};
use crate::contours::{extract_card_quads, find_external_contours, Contour, QuadFilter};
use crate::draw;
use crate::geometry::Point;
use crate::raster::{ImageRgb, RasterError};
use crate::reproject::{extract_corner, reproject_card, CornerConfig, CornerPatch, Quad, ReprojectError};
use crate::scalar::Scalar;
use crate::segmentation::{cluster_overlay, segment_cards, KMeansParams, Segmentation, SegmentationError};
use crate::strategy::{
    assign_roles, dealer_upcard, normalize_rank, recommend, Hand, Move, Rank, Role, RoleConfig, StrategyError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Segmentation(#[from] SegmentationError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("writing debug artifacts: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub kmeans: KMeansParams,
    pub quads: QuadFilter,
    pub corner: CornerConfig,
    pub roles: RoleConfig,
}

/// Wall-clock time per stage in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub segmentation: f64,
    pub contours: f64,
    pub reprojection: f64,
    pub classification: f64,
    pub total: f64,
}

/// A card-shaped region with its upright image and corner patch.
#[derive(Debug, Clone)]
pub struct CardCandidate<T> {
    pub quad: Quad<T>,
    pub card: ImageRgb,
    /// `None` when the reprojected card fails the aspect check.
    pub patch: Option<CornerPatch>,
}

#[derive(Debug, Clone)]
pub struct Candidates<T> {
    pub segmentation: Segmentation<T>,
    pub contours: Vec<Contour>,
    pub cards: Vec<CardCandidate<T>>,
    pub timings: StageTimings,
}

/// Segmentation, contour extraction and reprojection; no classifier needed.
pub fn extract_candidates<T: Scalar>(img: &ImageRgb, cfg: &PipelineConfig) -> Result<Candidates<T>, PipelineError> {
    let mut timings = StageTimings::default();
    let t0 = Instant::now();
    let segmentation = segment_cards::<T>(img, &cfg.kmeans)?;
    timings.segmentation = ms(t0);

    let t = Instant::now();
    // a frame that is one colour has no card/background split to trace
    let contours = if segmentation.occupied_clusters() > 1 {
        find_external_contours(&segmentation.mask)
    } else {
        Vec::new()
    };
    let polys = extract_card_quads::<T>(&contours, &cfg.quads);
    timings.contours = ms(t);

    let t = Instant::now();
    let mut cards = Vec::with_capacity(polys.len());
    for poly in polys {
        let raw: [Point<T>; 4] = [poly.vertices[0], poly.vertices[1], poly.vertices[2], poly.vertices[3]];
        let (quad, card) = match reproject_card(img, raw) {
            Ok(v) => v,
            Err(ReprojectError::Raster(e)) => return Err(e.into()),
            Err(_) => continue,
        };
        let patch = extract_corner(&card, &cfg.corner).ok();
        cards.push(CardCandidate { quad, card, patch });
    }
    timings.reprojection = ms(t);
    timings.total = ms(t0);
    Ok(Candidates {
        segmentation,
        contours,
        cards,
        timings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CardDetection<T> {
    pub quad: Quad<T>,
    pub label: CardLabel,
    /// Distances to the k nearest training examples, ascending.
    pub distances: Vec<T>,
    pub role: Role,
}

#[derive(Debug, Clone)]
pub struct Analysis<T> {
    pub cards: Vec<CardDetection<T>>,
    pub timings: StageTimings,
    pub candidates: Candidates<T>,
}

/// Full pipeline: candidates, classification and role assignment.
pub fn analyze<T: Scalar>(
    img: &ImageRgb,
    model: &KnnModel<T>,
    cfg: &PipelineConfig,
) -> Result<Analysis<T>, PipelineError> {
    let t0 = Instant::now();
    let candidates = extract_candidates::<T>(img, cfg)?;
    let t = Instant::now();
    let mut cards = Vec::new();
    for c in &candidates.cards {
        let Some(patch) = &c.patch else { continue };
        let f = patch_features(patch, model.hog_params())?;
        let pred = knn_predict(model, &f)?;
        cards.push(CardDetection {
            quad: c.quad,
            label: pred.label,
            distances: pred.distances,
            role: Role::Unassigned,
        });
    }
    let ys: Vec<f64> = cards.iter().map(|c| c.quad.centroid().y.as_f64()).collect();
    for (c, role) in cards.iter_mut().zip(assign_roles(&ys, img.height() as f64, &cfg.roles)) {
        c.role = role;
    }
    let mut timings = candidates.timings;
    timings.classification = ms(t);
    timings.total = ms(t0);
    Ok(Analysis {
        cards,
        timings,
        candidates,
    })
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1000.0
}

/// Player and dealer cards read from the detections.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRead {
    /// Player ranks in left-to-right order; face-down cards are skipped.
    pub player: Vec<Rank>,
    pub upcard: Option<Rank>,
}

pub fn read_table<T: Scalar>(cards: &[CardDetection<T>]) -> TableRead {
    let mut player: Vec<(f64, CardLabel)> = cards
        .iter()
        .filter(|c| c.role == Role::Player)
        .map(|c| (c.quad.centroid().x.as_f64(), c.label))
        .collect();
    player.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut dealer: Vec<(f64, CardLabel)> = cards
        .iter()
        .filter(|c| c.role == Role::Dealer)
        .map(|c| (c.quad.centroid().x.as_f64(), c.label))
        .collect();
    dealer.sort_by(|a, b| a.0.total_cmp(&b.0));
    let dealer: Vec<CardLabel> = dealer.into_iter().map(|(_, l)| l).collect();
    TableRead {
        player: player.into_iter().filter_map(|(_, l)| normalize_rank(l).ok()).collect(),
        upcard: dealer_upcard(&dealer).ok(),
    }
}

/// Serializable summary used by the CLI and the HTTP service.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub width: usize,
    pub height: usize,
    pub cards: Vec<CardReport>,
    pub player_hand: Vec<Rank>,
    pub dealer_upcard: Option<Rank>,
    pub recommendation: Option<Recommendation>,
    /// Why no recommendation was made.
    pub note: Option<String>,
    pub timings_ms: StageTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardReport {
    /// TL, TR, BR, BL in image pixels.
    pub quad: [[f64; 2]; 4],
    pub label: CardLabel,
    pub role: Role,
    pub distances: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    #[serde(rename = "move")]
    pub action: Move,
    pub display: String,
}

impl Recommendation {
    pub fn new(m: Move) -> Self {
        Self {
            action: m,
            display: m.display().to_owned(),
        }
    }
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

/// Why a table could not be advised on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdviceGap {
    TooFewPlayerCards,
    NoUpcard,
}

impl<T: Scalar> Analysis<T> {
    pub fn advice(&self) -> Result<Move, AdviceGap> {
        let table = read_table(&self.cards);
        if table.player.len() < 2 {
            return Err(AdviceGap::TooFewPlayerCards);
        }
        let upcard = table.upcard.ok_or(AdviceGap::NoUpcard)?;
        let hand = Hand::new(table.player).map_err(|_| AdviceGap::TooFewPlayerCards)?;
        match recommend(&hand, upcard) {
            Ok(m) => Ok(m),
            Err(StrategyError::InvalidHand { .. }) => Err(AdviceGap::TooFewPlayerCards),
            Err(_) => Err(AdviceGap::NoUpcard),
        }
    }

    pub fn report(&self, width: usize, height: usize) -> AnalysisReport {
        let table = read_table(&self.cards);
        let (recommendation, note) = match self.advice() {
            Ok(m) => (Some(Recommendation::new(m)), None),
            Err(AdviceGap::TooFewPlayerCards) => (None, Some("fewer than two player cards".to_owned())),
            Err(AdviceGap::NoUpcard) => (None, Some("no dealer upcard visible".to_owned())),
        };
        let mut player_hand = table.player.clone();
        player_hand.sort_by(|a, b| b.value().cmp(&a.value()).then(a.cmp(b)));
        AnalysisReport {
            width,
            height,
            cards: self
                .cards
                .iter()
                .map(|c| CardReport {
                    quad: c.quad.corners().map(|p| [round4(p.x.as_f64()), round4(p.y.as_f64())]),
                    label: c.label,
                    role: c.role,
                    distances: c.distances.iter().map(|d| round4(d.as_f64())).collect(),
                })
                .collect(),
            player_hand,
            dealer_upcard: table.upcard,
            recommendation,
            note,
            timings_ms: self.timings,
        }
    }

    /// Input image with card outlines, labels and roles drawn on top.
    pub fn annotate(&self, img: &ImageRgb) -> ImageRgb {
        let mut out = img.clone();
        for c in &self.cards {
            let color = match c.role {
                Role::Dealer => [230, 60, 40],
                Role::Player => [40, 120, 255],
                Role::Unassigned => [250, 210, 40],
            };
            let corners = c.quad.corners().map(|p| (p.x.as_f64(), p.y.as_f64()));
            draw::polygon(&mut out, &corners, color, 2);
            let (x, y) = corners[0];
            draw::text(&mut out, c.label.as_str(), x, y - 18.0, 2, color);
        }
        out
    }

    /// Writes intermediate images (cluster map, mask, contours, cards and
    /// corner patches) into `dir`.
    pub fn write_debug(&self, img: &ImageRgb, dir: &Path) -> Result<(), PipelineError> {
        std::fs::create_dir_all(dir)?;
        let seg = &self.candidates.segmentation;
        cluster_overlay(img.width(), img.height(), seg.label_map(), seg.selected).save_png(dir.join("clusters.png"))?;
        seg.mask.to_gray().save_png(dir.join("mask.png"))?;
        let mut contours = img.clone();
        for c in &self.candidates.contours {
            for p in &c.points {
                draw::dot(&mut contours, p.x as f64, p.y as f64, [255, 0, 255]);
            }
        }
        for c in &self.candidates.cards {
            let corners = c.quad.corners().map(|p| (p.x.as_f64(), p.y.as_f64()));
            draw::polygon(&mut contours, &corners, [255, 255, 0], 1);
        }
        contours.save_png(dir.join("contours.png"))?;
        for (i, c) in self.candidates.cards.iter().enumerate() {
            c.card.save_png(dir.join(format!("card_{i:02}.png")))?;
            if let Some(p) = &c.patch {
                p.image().save_png(dir.join(format!("patch_{i:02}.png")))?;
            }
        }
        Ok(())
    }
}
