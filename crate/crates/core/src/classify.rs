//! HoG descriptors of corner patches and nearest-neighbour rank classification.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{ImageGray, ImageRgb};
use crate::reproject::{extract_corner, CornerConfig, CornerPatch, ReprojectError};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("patch is {width}x{height}, descriptor window is {win_w}x{win_h}")]
    PatchSize {
        width: usize,
        height: usize,
        win_w: usize,
        win_h: usize,
    },
    #[error("invalid HoG parameters: {0}")]
    InvalidHogParams(&'static str),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("k = {k} but the model holds {examples} examples")]
    KTooLarge { k: usize, examples: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("feature length {actual} does not match model length {expected}")]
    FeatureLength { expected: usize, actual: usize },
    #[error("unknown card label {0:?}")]
    UnknownLabel(String),
    #[error("model file: {0}")]
    ModelFile(String),
    #[error(transparent)]
    Corner(#[from] ReprojectError),
}

/// Rank classes recognised from the corner index; suits are ignored and a
/// face-down card is `Back`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum CardLabel {
    Two,
    Three,
    Four,
    Five,
    Six,
    Seven,
    Eight,
    Nine,
    Ten,
    Jack,
    Queen,
    King,
    Ace,
    Back,
}

impl CardLabel {
    pub const ALL: [CardLabel; 14] = [
        CardLabel::Two,
        CardLabel::Three,
        CardLabel::Four,
        CardLabel::Five,
        CardLabel::Six,
        CardLabel::Seven,
        CardLabel::Eight,
        CardLabel::Nine,
        CardLabel::Ten,
        CardLabel::Jack,
        CardLabel::Queen,
        CardLabel::King,
        CardLabel::Ace,
        CardLabel::Back,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CardLabel::Two => "2",
            CardLabel::Three => "3",
            CardLabel::Four => "4",
            CardLabel::Five => "5",
            CardLabel::Six => "6",
            CardLabel::Seven => "7",
            CardLabel::Eight => "8",
            CardLabel::Nine => "9",
            CardLabel::Ten => "10",
            CardLabel::Jack => "J",
            CardLabel::Queen => "Q",
            CardLabel::King => "K",
            CardLabel::Ace => "A",
            CardLabel::Back => "BACK",
        }
    }
}

impl fmt::Display for CardLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CardLabel {
    type Err = ClassifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CardLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| ClassifyError::UnknownLabel(s.to_string()))
    }
}

impl From<CardLabel> for String {
    fn from(l: CardLabel) -> Self {
        l.as_str().to_string()
    }
}

impl TryFrom<String> for CardLabel {
    type Error = ClassifyError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HogParams {
    pub window: (usize, usize),
    pub block: (usize, usize),
    pub block_stride: (usize, usize),
    pub cell: (usize, usize),
    pub bins: usize,
}

impl Default for HogParams {
    fn default() -> Self {
        Self {
            window: (28, 28),
            block: (14, 14),
            block_stride: (7, 7),
            cell: (7, 7),
            bins: 9,
        }
    }
}

impl HogParams {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let ok = |a: usize, b: usize| b > 0 && a % b == 0;
        if self.bins == 0 {
            return Err(ClassifyError::InvalidHogParams("bins must be positive"));
        }
        if !ok(self.window.0, self.cell.0) || !ok(self.window.1, self.cell.1) {
            return Err(ClassifyError::InvalidHogParams("window must be a multiple of the cell"));
        }
        if !ok(self.block.0, self.cell.0) || !ok(self.block.1, self.cell.1) {
            return Err(ClassifyError::InvalidHogParams("block must be a multiple of the cell"));
        }
        if self.block.0 > self.window.0 || self.block.1 > self.window.1 {
            return Err(ClassifyError::InvalidHogParams("block larger than window"));
        }
        if !ok(self.window.0 - self.block.0, self.block_stride.0)
            || !ok(self.window.1 - self.block.1, self.block_stride.1)
        {
            return Err(ClassifyError::InvalidHogParams("stride must divide window - block"));
        }
        Ok(())
    }

    pub fn blocks(&self) -> (usize, usize) {
        (
            (self.window.0 - self.block.0) / self.block_stride.0 + 1,
            (self.window.1 - self.block.1) / self.block_stride.1 + 1,
        )
    }

    pub fn cells_per_block(&self) -> (usize, usize) {
        (self.block.0 / self.cell.0, self.block.1 / self.cell.1)
    }

    pub fn block_len(&self) -> usize {
        let (cx, cy) = self.cells_per_block();
        cx * cy * self.bins
    }

    pub fn descriptor_len(&self) -> usize {
        let (bx, by) = self.blocks();
        bx * by * self.block_len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector<T>(pub Vec<T>);

impl<T: Scalar> FeatureVector<T> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn distance(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }
}

/// Histogram-of-oriented-gradients descriptor of a window-sized image.
///
/// Centered `[-1, 0, 1]` gradients with edge replication; unsigned
/// orientation split into `bins` sectors over 180 degrees, each vote shared
/// linearly between the two nearest bin centres; 2-D cell histograms
/// grouped into overlapping blocks normalised with L2-Hys (clip 0.2).
/// Blocks are emitted row by row.
pub fn compute_hog<T: Scalar>(img: &ImageGray, params: &HogParams) -> Result<FeatureVector<T>, ClassifyError> {
    params.validate()?;
    let (w, h) = params.window;
    if img.width() != w || img.height() != h {
        return Err(ClassifyError::PatchSize {
            width: img.width(),
            height: img.height(),
            win_w: w,
            win_h: h,
        });
    }
    let (ncx, ncy) = (w / params.cell.0, h / params.cell.1);
    let bins = params.bins;
    let mut cells = vec![T::zero(); ncx * ncy * bins];
    let px = |x: isize, y: isize| {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        T::lit(f64::from(img.get(xc, yc)))
    };
    let bin_width = T::lit(std::f64::consts::PI) / T::from_usize_lossy(bins);
    let half = T::lit(0.5);
    for y in 0..h {
        for x in 0..w {
            let (xi, yi) = (x as isize, y as isize);
            let dx = px(xi + 1, yi) - px(xi - 1, yi);
            let dy = px(xi, yi + 1) - px(xi, yi - 1);
            let mag = dx.hypot(dy);
            if mag == T::zero() {
                continue;
            }
            let mut angle = dy.atan2(dx);
            if angle < T::zero() {
                angle = angle + T::lit(std::f64::consts::PI);
            }
            // bin centres sit at (i + 0.5) * bin_width
            let pos = angle / bin_width - half;
            let lo = pos.floor();
            let frac = pos - lo;
            let lo_i = lo.to_isize().unwrap_or(0).rem_euclid(bins as isize) as usize;
            let hi_i = (lo_i + 1) % bins;
            let cell = ((y / params.cell.1) * ncx + x / params.cell.0) * bins;
            cells[cell + lo_i] = cells[cell + lo_i] + mag * (T::one() - frac);
            cells[cell + hi_i] = cells[cell + hi_i] + mag * frac;
        }
    }

    let (bx, by) = params.blocks();
    let (cbx, cby) = params.cells_per_block();
    let (sx, sy) = (params.block_stride.0 / params.cell.0, params.block_stride.1 / params.cell.1);
    let mut out = Vec::with_capacity(params.descriptor_len());
    let mut block = Vec::with_capacity(params.block_len());
    for byi in 0..by {
        for bxi in 0..bx {
            block.clear();
            for cy in 0..cby {
                for cx in 0..cbx {
                    let cell = ((byi * sy + cy) * ncx + bxi * sx + cx) * bins;
                    block.extend_from_slice(&cells[cell..cell + bins]);
                }
            }
            l2_hys(&mut block);
            out.extend_from_slice(&block);
        }
    }
    Ok(FeatureVector(out))
}

fn l2_hys<T: Scalar>(v: &mut [T]) {
    let clip = T::lit(0.2);
    let norm = v.iter().map(|&a| a * a).sum::<T>().sqrt();
    if norm == T::zero() {
        return;
    }
    for a in v.iter_mut() {
        *a = (*a / norm).min(clip);
    }
    let norm = v.iter().map(|&a| a * a).sum::<T>().sqrt();
    if norm > T::zero() {
        for a in v.iter_mut() {
            *a = *a / norm;
        }
    }
}

pub fn patch_features<T: Scalar>(patch: &CornerPatch, params: &HogParams) -> Result<FeatureVector<T>, ClassifyError> {
    compute_hog(patch.image(), params)
}

/// Stored training descriptors with class indices into a sorted label list.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel<T> {
    features: Vec<FeatureVector<T>>,
    classes: Vec<usize>,
    labels: Vec<CardLabel>,
    k: usize,
    hog: HogParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction<T> {
    pub label: CardLabel,
    /// Distances to the `k` nearest training examples, ascending.
    pub distances: Vec<T>,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile<T> {
    version: u32,
    k: usize,
    hog: HogParams,
    labels: Vec<CardLabel>,
    examples: Vec<ModelExample<T>>,
}

#[derive(Serialize, Deserialize)]
struct ModelExample<T> {
    class: usize,
    features: FeatureVector<T>,
}

impl<T: Scalar> KnnModel<T> {
    /// Builds a model from precomputed descriptors. Labels are ordered by
    /// their text ("10" < "2" < ... < "A" < "BACK" < "J" < "K" < "Q").
    pub fn from_features(
        examples: Vec<(FeatureVector<T>, CardLabel)>,
        k: usize,
        hog: HogParams,
    ) -> Result<Self, ClassifyError> {
        if examples.is_empty() {
            return Err(ClassifyError::EmptyTrainingSet);
        }
        if k == 0 {
            return Err(ClassifyError::ZeroK);
        }
        let dim = examples[0].0.len();
        if let Some((f, _)) = examples.iter().find(|(f, _)| f.len() != dim) {
            return Err(ClassifyError::FeatureLength {
                expected: dim,
                actual: f.len(),
            });
        }
        let mut labels: Vec<CardLabel> = examples.iter().map(|(_, l)| *l).collect();
        labels.sort_by_key(|l| l.as_str());
        labels.dedup();
        let (features, classes) = examples
            .into_iter()
            .map(|(f, l)| {
                let c = labels.iter().position(|x| *x == l).expect("label present");
                (f, c)
            })
            .unzip();
        Ok(Self {
            features,
            classes,
            labels,
            k,
            hog,
        })
    }

    pub fn labels(&self) -> &[CardLabel] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn hog_params(&self) -> &HogParams {
        &self.hog
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn examples(&self) -> impl Iterator<Item = (&FeatureVector<T>, CardLabel)> {
        self.features.iter().zip(&self.classes).map(|(f, &c)| (f, self.labels[c]))
    }

    /// Same training data, different neighbour count.
    pub fn with_k(mut self, k: usize) -> Result<Self, ClassifyError> {
        if k == 0 {
            return Err(ClassifyError::ZeroK);
        }
        self.k = k;
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            k: self.k,
            hog: self.hog,
            labels: self.labels.clone(),
            examples: self
                .features
                .iter()
                .zip(&self.classes)
                .map(|(f, &class)| ModelExample {
                    class,
                    features: f.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, ClassifyError> {
        let file: ModelFile<T> = serde_json::from_str(s).map_err(|e| ClassifyError::ModelFile(e.to_string()))?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(ClassifyError::ModelFile(format!("unsupported version {}", file.version)));
        }
        if let Some(e) = file.examples.iter().find(|e| e.class >= file.labels.len()) {
            return Err(ClassifyError::ModelFile(format!("class index {} out of range", e.class)));
        }
        let examples = file
            .examples
            .into_iter()
            .map(|e| (e.features, file.labels[e.class]))
            .collect();
        Self::from_features(examples, file.k, file.hog)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ClassifyError> {
        std::fs::write(path, self.to_json()).map_err(|e| ClassifyError::ModelFile(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ClassifyError> {
        let s = std::fs::read_to_string(path).map_err(|e| ClassifyError::ModelFile(e.to_string()))?;
        Self::from_json(&s)
    }
}

/// Computes descriptors for every patch and stores them all.
pub fn train_knn<T: Scalar>(
    training: &[(CornerPatch, CardLabel)],
    k: usize,
    hog: &HogParams,
) -> Result<KnnModel<T>, ClassifyError> {
    let examples = training
        .iter()
        .map(|(p, l)| Ok((patch_features(p, hog)?, *l)))
        .collect::<Result<Vec<_>, ClassifyError>>()?;
    KnnModel::from_features(examples, k, *hog)
}

/// Majority vote of the `k` nearest examples (Euclidean); a tied vote goes
/// to whichever tied class owns the nearest neighbour.
pub fn knn_predict<T: Scalar>(model: &KnnModel<T>, features: &FeatureVector<T>) -> Result<Prediction<T>, ClassifyError> {
    let dim = model.features[0].len();
    if features.len() != dim {
        return Err(ClassifyError::FeatureLength {
            expected: dim,
            actual: features.len(),
        });
    }
    if model.k > model.len() {
        return Err(ClassifyError::KTooLarge {
            k: model.k,
            examples: model.len(),
        });
    }
    let mut scored: Vec<(T, usize)> = model
        .features
        .iter()
        .enumerate()
        .map(|(i, f)| (f.distance(features), i))
        .collect();
    let by_dist = |a: &(T, usize), b: &(T, usize)| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    };
    if model.k < scored.len() {
        scored.select_nth_unstable_by(model.k - 1, by_dist);
        scored.truncate(model.k);
    }
    scored.sort_by(by_dist);

    let mut votes = vec![0usize; model.labels.len()];
    for &(_, i) in &scored {
        votes[model.classes[i]] += 1;
    }
    let top = *votes.iter().max().expect("non-empty labels");
    // scored is ascending, so the first neighbour from a top class wins ties
    let class = scored
        .iter()
        .map(|&(_, i)| model.classes[i])
        .find(|&c| votes[c] == top)
        .expect("some neighbour has the top vote");
    Ok(Prediction {
        label: model.labels[class],
        distances: scored.into_iter().map(|(d, _)| d).collect(),
    })
}

/// Corner extraction, descriptor and vote for one reprojected card.
pub fn classify_card<T: Scalar>(
    model: &KnnModel<T>,
    card: &ImageRgb,
    corner: &CornerConfig,
) -> Result<Prediction<T>, ClassifyError> {
    let patch = extract_corner(card, corner)?;
    let f = patch_features(&patch, &model.hog)?;
    knn_predict(model, &f)
}
