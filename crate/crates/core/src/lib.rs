//! Playing-card detection, rank classification and blackjack advice from
//! still photographs of a table.
//!
//! The pipeline runs K-means colour segmentation, external contour tracing
//! and polygon simplification to find cards, reprojects each card upright,
//! reads its rank corner with a HoG descriptor and a k-nearest-neighbour
//! vote, then feeds the hands into a basic-strategy table.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

pub mod classify;
pub mod contours;
pub mod dataset;
pub mod draw;
mod font;
pub mod geometry;
pub mod pipeline;
pub mod raster;
pub mod reproject;
pub mod scalar;
pub mod segmentation;
pub mod strategy;

pub use classify::{CardLabel, HogParams};
pub use raster::{BinaryMask, ImageGray, ImageRgb};
pub use scalar::Scalar;
pub use strategy::{Hand, Move, Rank, Role};

pub type Point = geometry::Point<f64>;
pub type Polygon = geometry::Polygon<f64>;
pub type Quad = reproject::Quad<f64>;
pub type Homography = reproject::Homography<f64>;
pub type FeatureVector = classify::FeatureVector<f64>;
pub type KnnModel = classify::KnnModel<f64>;
pub type Prediction = classify::Prediction<f64>;
pub type ClusterResult = segmentation::ClusterResult<f64>;
pub type Segmentation = segmentation::Segmentation<f64>;
pub type CardDetection = pipeline::CardDetection<f64>;
pub type Analysis = pipeline::Analysis<f64>;
