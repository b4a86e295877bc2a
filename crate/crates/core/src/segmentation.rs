//! Card/background separation by K-means in RGB and HSV cluster scoring.
//!
//! Pixels are clustered as 3-vectors with Lloyd's algorithm (k-means++
//! seeding, several seeded restarts). Each cluster is then scored as
//! `(255 - mean S) + mean V`; the brightest, least saturated cluster is
//! taken to be the card faces.
//!
//! Preconditions for good results: cards do not overlap, are fully
//! visible, and the background contrasts with the white card stock.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{hsv, BinaryMask, ImageRgb};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum SegmentationError {
    #[error("image has {pixels} pixels, need at least k = {k}")]
    TooFewPixels { pixels: usize, k: usize },
    #[error("invalid k-means parameters: {0}")]
    InvalidParams(&'static str),
    #[error("label buffer has {actual} entries, image has {expected} pixels")]
    LabelLength { expected: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansParams {
    pub k: usize,
    pub max_iter: usize,
    /// Stop once every center moves less than this (RGB units).
    pub epsilon: f64,
    pub attempts: usize,
    pub seed: u64,
}

impl Default for KMeansParams {
    fn default() -> Self {
        Self {
            k: 3,
            max_iter: 10,
            epsilon: 1.0,
            attempts: 10,
            seed: 0x5eed_ca7d,
        }
    }
}

impl KMeansParams {
    pub fn validate(&self) -> Result<(), SegmentationError> {
        if self.k == 0 {
            return Err(SegmentationError::InvalidParams("k must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(SegmentationError::InvalidParams("max_iter must be at least 1"));
        }
        if !(self.epsilon >= 0.0) {
            return Err(SegmentationError::InvalidParams("epsilon must be non-negative"));
        }
        if self.attempts == 0 {
            return Err(SegmentationError::InvalidParams("attempts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult<T> {
    /// Cluster index per pixel, row-major.
    pub labels: Vec<u32>,
    pub centers: Vec<[T; 3]>,
    /// Sum of squared distances of every pixel to its center.
    pub compactness: T,
    /// Final compactness of every restart, in attempt order.
    pub attempt_compactness: Vec<T>,
    /// Compactness after each assignment step of the winning restart.
    pub iteration_compactness: Vec<T>,
}

#[inline]
fn sq_dist<T: Scalar>(p: [u8; 3], c: &[T; 3]) -> T {
    let dr = T::lit(f64::from(p[0])) - c[0];
    let dg = T::lit(f64::from(p[1])) - c[1];
    let db = T::lit(f64::from(p[2])) - c[2];
    dr * dr + dg * dg + db * db
}

#[inline]
fn to_center<T: Scalar>(p: [u8; 3]) -> [T; 3] {
    p.map(|v| T::lit(f64::from(v)))
}

struct Attempt<T> {
    labels: Vec<u32>,
    centers: Vec<[T; 3]>,
    compactness: T,
    history: Vec<T>,
}

fn kmeans_pp<T: Scalar>(pixels: &[[u8; 3]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[T; 3]> {
    let n = pixels.len();
    let mut centers: Vec<[T; 3]> = Vec::with_capacity(k);
    centers.push(to_center(pixels[rng.random_range(0..n)]));
    let mut d2: Vec<T> = pixels.iter().map(|&p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: T = d2.iter().copied().sum();
        let pick = if total > T::zero() {
            let target = T::lit(rng.random::<f64>()) * total;
            let mut acc = T::zero();
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc = acc + d;
                if acc > target {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = to_center(pixels[pick]);
        for (d, &p) in d2.iter_mut().zip(pixels) {
            let nd = sq_dist(p, &c);
            if nd < *d {
                *d = nd;
            }
        }
        centers.push(c);
    }
    centers
}

/// Assigns each pixel to its nearest center (lowest index on ties) and
/// returns the compactness. `dist` receives each pixel's squared distance.
fn assign<T: Scalar>(
    pixels: &[[u8; 3]],
    centers: &[[T; 3]],
    labels: &mut [u32],
    dist: &mut [T],
) -> T {
    let mut total = T::zero();
    for ((p, l), d) in pixels.iter().zip(labels.iter_mut()).zip(dist.iter_mut()) {
        let mut best = 0;
        let mut best_d = sq_dist(*p, &centers[0]);
        for (ci, c) in centers.iter().enumerate().skip(1) {
            let dd = sq_dist(*p, c);
            if dd < best_d {
                best_d = dd;
                best = ci;
            }
        }
        *l = best as u32;
        *d = best_d;
        total = total + best_d;
    }
    total
}

/// Recomputes centers as cluster means (integer accumulation) and returns
/// the largest center displacement.
fn update<T: Scalar>(
    pixels: &[[u8; 3]],
    centers: &mut [[T; 3]],
    labels: &[u32],
    dist: &mut [T],
) -> T {
    let k = centers.len();
    let mut sums = vec![[0u64; 3]; k];
    let mut counts = vec![0u64; k];
    for (p, &l) in pixels.iter().zip(labels) {
        let s = &mut sums[l as usize];
        s[0] += u64::from(p[0]);
        s[1] += u64::from(p[1]);
        s[2] += u64::from(p[2]);
        counts[l as usize] += 1;
    }
    let mut shift = T::zero();
    for ci in 0..k {
        let new = if counts[ci] > 0 {
            let n = counts[ci] as f64;
            sums[ci].map(|s| T::lit(s as f64 / n))
        } else {
            // Empty cluster: move it onto the pixel worst served by its own center.
            let (far, _) = dist
                .iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |(bi, bd), (i, &d)| if d > bd { (i, d) } else { (bi, bd) });
            dist[far] = T::zero();
            to_center(pixels[far])
        };
        let old = centers[ci];
        let moved = ((new[0] - old[0]).powi(2) + (new[1] - old[1]).powi(2) + (new[2] - old[2]).powi(2)).sqrt();
        if moved > shift {
            shift = moved;
        }
        centers[ci] = new;
    }
    shift
}

fn run_attempt<T: Scalar>(pixels: &[[u8; 3]], params: &KMeansParams, seed: u64) -> Attempt<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = kmeans_pp::<T>(pixels, params.k, &mut rng);
    let mut labels = vec![0u32; pixels.len()];
    let mut dist = vec![T::zero(); pixels.len()];
    let eps = T::lit(params.epsilon);
    let mut history = Vec::with_capacity(params.max_iter + 1);
    for _ in 0..params.max_iter {
        history.push(assign(pixels, &centers, &mut labels, &mut dist));
        let shift = update(pixels, &mut centers, &labels, &mut dist);
        if shift < eps {
            break;
        }
    }
    let compactness = assign(pixels, &centers, &mut labels, &mut dist);
    history.push(compactness);
    Attempt {
        labels,
        centers,
        compactness,
        history,
    }
}

/// Lloyd's K-means over the image's pixels as RGB vectors.
///
/// Attempt `j` is seeded with `params.seed ^ j`; the attempt with the lowest
/// compactness wins (earliest on ties), so the result does not depend on
/// how attempts are scheduled across threads.
pub fn kmeans_pixels<T: Scalar>(
    img: &ImageRgb,
    params: &KMeansParams,
) -> Result<ClusterResult<T>, SegmentationError> {
    params.validate()?;
    let pixels: Vec<[u8; 3]> = img.pixels().collect();
    if pixels.len() < params.k {
        return Err(SegmentationError::TooFewPixels {
            pixels: pixels.len(),
            k: params.k,
        });
    }
    let attempts: Vec<Attempt<T>> = (0..params.attempts as u64)
        .into_par_iter()
        .map(|j| run_attempt(&pixels, params, params.seed ^ j))
        .collect();
    let attempt_compactness: Vec<T> = attempts.iter().map(|a| a.compactness).collect();
    let best = attempt_compactness
        .iter()
        .enumerate()
        .fold(0, |bi, (i, &c)| if c < attempt_compactness[bi] { i } else { bi });
    let win = attempts.into_iter().nth(best).expect("at least one attempt");
    Ok(ClusterResult {
        labels: win.labels,
        centers: win.centers,
        compactness: win.compactness,
        attempt_compactness,
        iteration_compactness: win.history,
    })
}

/// `(255 - mean S) + mean V` per cluster; empty clusters score -inf.
pub fn score_clusters<T: Scalar>(
    img: &ImageRgb,
    labels: &[u32],
    k: usize,
) -> Result<Vec<T>, SegmentationError> {
    let n = img.width() * img.height();
    if labels.len() != n {
        return Err(SegmentationError::LabelLength {
            expected: n,
            actual: labels.len(),
        });
    }
    let mut sat = vec![0u64; k];
    let mut val = vec![0u64; k];
    let mut count = vec![0u64; k];
    for (p, &l) in img.pixels().zip(labels) {
        let l = l as usize;
        if l >= k {
            return Err(SegmentationError::InvalidParams("label out of range"));
        }
        let [_, s, v] = hsv(p);
        sat[l] += u64::from(s);
        val[l] += u64::from(v);
        count[l] += 1;
    }
    Ok((0..k)
        .map(|i| {
            if count[i] == 0 {
                T::neg_infinity()
            } else {
                let c = count[i] as f64;
                T::lit((255.0 - sat[i] as f64 / c) + val[i] as f64 / c)
            }
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct Segmentation<T> {
    pub mask: BinaryMask,
    pub clusters: ClusterResult<T>,
    pub scores: Vec<T>,
    pub selected: usize,
}

impl<T: Scalar> Segmentation<T> {
    /// Number of clusters that received at least one pixel.
    pub fn occupied_clusters(&self) -> usize {
        self.scores.iter().filter(|s| s.is_finite()).count()
    }

    pub fn label_map(&self) -> &[u32] {
        &self.clusters.labels
    }
}

/// Clusters the image and keeps the highest-scoring cluster as the mask.
pub fn segment_cards<T: Scalar>(
    img: &ImageRgb,
    params: &KMeansParams,
) -> Result<Segmentation<T>, SegmentationError> {
    let clusters = kmeans_pixels::<T>(img, params)?;
    let scores = score_clusters::<T>(img, &clusters.labels, params.k)?;
    let selected = argmax_first(&scores);
    let data = clusters.labels.iter().map(|&l| (l as usize == selected) as u8).collect();
    let mask = BinaryMask::from_raw(img.width(), img.height(), data).expect("dimensions match image");
    Ok(Segmentation {
        mask,
        clusters,
        scores,
        selected,
    })
}

fn argmax_first<T: Scalar>(v: &[T]) -> usize {
    v.iter()
        .enumerate()
        .fold(0, |bi, (i, &s)| if s > v[bi] { i } else { bi })
}

/// False-color rendering of a label map for debugging.
pub fn cluster_overlay(width: usize, height: usize, labels: &[u32], selected: usize) -> ImageRgb {
    const PALETTE: [[u8; 3]; 6] = [
        [230, 25, 75],
        [60, 180, 75],
        [0, 130, 200],
        [245, 130, 48],
        [145, 30, 180],
        [70, 240, 240],
    ];
    ImageRgb::from_fn(width, height, |x, y| {
        let l = labels[y * width + x] as usize;
        if l == selected {
            [255, 255, 255]
        } else {
            PALETTE[l % PALETTE.len()]
        }
    })
    .expect("non-empty dimensions")
}
