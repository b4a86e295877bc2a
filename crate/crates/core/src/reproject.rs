//! Corner ordering, four-point homographies, perspective warps and the
//! rank-corner patch extraction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{polygon_area, Point};
use crate::raster::{
    resize_cubic, rgb_to_gray, sample_cubic, threshold_range, to_u8, ImageGray, ImageRgb, RasterError,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum ReprojectError {
    #[error("degenerate quadrilateral: {0}")]
    InvalidQuad(&'static str),
    #[error("homography estimation failed: singular system")]
    EstimationFailure,
    #[error("homography is not invertible")]
    NotInvertible,
    #[error("invalid card aspect {aspect:.3} (height/width), probably invalid")]
    InvalidCardAspect { aspect: f64 },
    #[error("image too small: corner crop is {width}x{height}")]
    ImageTooSmall { width: usize, height: usize },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Four corners in top-left, top-right, bottom-right, bottom-left order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quad<T> {
    pub tl: Point<T>,
    pub tr: Point<T>,
    pub br: Point<T>,
    pub bl: Point<T>,
}

impl<T: Scalar> Quad<T> {
    pub fn corners(&self) -> [Point<T>; 4] {
        [self.tl, self.tr, self.br, self.bl]
    }

    pub fn from_corners(c: [Point<T>; 4]) -> Self {
        Self {
            tl: c[0],
            tr: c[1],
            br: c[2],
            bl: c[3],
        }
    }

    pub fn area(&self) -> T {
        polygon_area(&self.corners())
    }

    pub fn centroid(&self) -> Point<T> {
        crate::geometry::vertex_mean(&self.corners())
    }

    /// Longest side, used as a scale for matching tolerances.
    pub fn diagonal(&self) -> T {
        self.tl.dist(self.br).max(self.tr.dist(self.bl))
    }

    pub fn cast<U: Scalar>(&self) -> Quad<U> {
        Quad::from_corners(self.corners().map(|p| p.cast()))
    }
}

fn check_non_degenerate<T: Scalar>(pts: &[Point<T>; 4]) -> Result<(), ReprojectError> {
    for i in 0..4 {
        for j in i + 1..4 {
            if pts[i] == pts[j] {
                return Err(ReprojectError::InvalidQuad("duplicate corner"));
            }
        }
    }
    let scale = pts
        .iter()
        .flat_map(|a| pts.iter().map(move |b| a.dist(*b)))
        .fold(T::zero(), T::max);
    let tol = T::lit(1e-9) * scale * scale;
    for skip in 0..4 {
        let tri: Vec<Point<T>> = (0..4).filter(|&k| k != skip).map(|k| pts[k]).collect();
        if polygon_area(&tri) <= tol {
            return Err(ReprojectError::InvalidQuad("three collinear corners"));
        }
    }
    Ok(())
}

/// Canonical corner order: split into the two left-most and two right-most
/// points by x (ties by y); the upper left point is top-left, the lower one
/// bottom-left; the right point farther from top-left is bottom-right.
pub fn order_points<T: Scalar>(pts: [Point<T>; 4]) -> Result<Quad<T>, ReprojectError> {
    check_non_degenerate(&pts)?;
    let mut sorted = pts;
    sorted.sort_by(|a, b| {
        a.x.partial_cmp(&b.x)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.y.partial_cmp(&b.y).unwrap_or(std::cmp::Ordering::Equal))
    });
    let (mut l0, mut l1) = (sorted[0], sorted[1]);
    if l1.y < l0.y {
        std::mem::swap(&mut l0, &mut l1);
    }
    let (tl, bl) = (l0, l1);
    let (r0, r1) = (sorted[2], sorted[3]);
    let (br, tr) = if tl.dist(r0) > tl.dist(r1) { (r0, r1) } else { (r1, r0) };
    Ok(Quad { tl, tr, br, bl })
}

/// `(width, height)` from the longer of each pair of opposing edges.
pub fn quad_dims<T: Scalar>(q: &Quad<T>) -> (usize, usize) {
    let w = q.tl.dist(q.tr).max(q.bl.dist(q.br));
    let h = q.tl.dist(q.bl).max(q.tr.dist(q.br));
    let r = |v: T| v.round().to_usize().unwrap_or(0).max(1);
    (r(w), r(h))
}

/// Row-major 3x3 projective map with `m[2][2] == 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Scalar> Homography<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            m: [[o, z, z], [z, o, z], [z, z, o]],
        }
    }

    pub fn from_matrix(m: [[T; 3]; 3]) -> Result<Self, ReprojectError> {
        let s = m[2][2];
        if s.abs() < T::lit(1e-300).max(T::min_positive_value()) {
            return Err(ReprojectError::NotInvertible);
        }
        let h = Self {
            m: m.map(|row| row.map(|v| v / s)),
        };
        if h.determinant().abs() <= T::lit(1e-12) || !h.determinant().is_finite() {
            return Err(ReprojectError::NotInvertible);
        }
        Ok(h)
    }

    pub fn apply(&self, p: Point<T>) -> Point<T> {
        let m = &self.m;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        Point::new(
            (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w,
            (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w,
        )
    }

    pub fn determinant(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn inverse(&self) -> Result<Self, ReprojectError> {
        let m = &self.m;
        let det = self.determinant();
        if det.abs() <= T::lit(1e-12) || !det.is_finite() {
            return Err(ReprojectError::NotInvertible);
        }
        let adj = [
            [
                m[1][1] * m[2][2] - m[1][2] * m[2][1],
                m[0][2] * m[2][1] - m[0][1] * m[2][2],
                m[0][1] * m[1][2] - m[0][2] * m[1][1],
            ],
            [
                m[1][2] * m[2][0] - m[1][0] * m[2][2],
                m[0][0] * m[2][2] - m[0][2] * m[2][0],
                m[0][2] * m[1][0] - m[0][0] * m[1][2],
            ],
            [
                m[1][0] * m[2][1] - m[1][1] * m[2][0],
                m[0][1] * m[2][0] - m[0][0] * m[2][1],
                m[0][0] * m[1][1] - m[0][1] * m[1][0],
            ],
        ];
        Self::from_matrix(adj.map(|row| row.map(|v| v / det)))
    }

    pub fn compose(&self, other: &Self) -> [[T; 3]; 3] {
        mat_mul(&self.m, &other.m)
    }
}

fn mat_mul<T: Scalar>(a: &[[T; 3]; 3], b: &[[T; 3]; 3]) -> [[T; 3]; 3] {
    let mut out = [[T::zero(); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Similarity transform taking the points to zero mean and mean distance
/// sqrt(2) from the origin, with its inverse.
fn normalizer<T: Scalar>(pts: &[Point<T>; 4]) -> ([[T; 3]; 3], [[T; 3]; 3]) {
    let c = crate::geometry::vertex_mean(pts);
    let mean_d = pts.iter().map(|p| p.dist(c)).sum::<T>() / T::lit(4.0);
    let s = if mean_d > T::zero() { T::lit(2f64.sqrt()) / mean_d } else { T::one() };
    let (o, z) = (T::one(), T::zero());
    let fwd = [[s, z, -s * c.x], [z, s, -s * c.y], [z, z, o]];
    let inv = [[o / s, z, c.x], [z, o / s, c.y], [z, z, o]];
    (fwd, inv)
}

fn solve_linear<T: Scalar, const N: usize>(mut a: [[T; N]; N], mut b: [T; N]) -> Option<[T; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[piv][col].abs() < T::lit(1e-12) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..N {
            let f = a[r][col] / a[col][col];
            if f == T::zero() {
                continue;
            }
            for c in col..N {
                a[r][c] = a[r][c] - f * a[col][c];
            }
            b[r] = b[r] - f * b[col];
        }
    }
    let mut x = [T::zero(); N];
    for r in (0..N).rev() {
        let s: T = (r + 1..N).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Exact four-correspondence homography (8x8 linear system, `h33 = 1`),
/// solved on similarity-normalized coordinates for conditioning.
pub fn solve_homography<T: Scalar>(
    src: &[Point<T>; 4],
    dst: &[Point<T>; 4],
) -> Result<Homography<T>, ReprojectError> {
    check_non_degenerate(src).map_err(|_| ReprojectError::EstimationFailure)?;
    check_non_degenerate(dst).map_err(|_| ReprojectError::EstimationFailure)?;
    let (ns, _) = normalizer(src);
    let (nd, nd_inv) = normalizer(dst);
    let tf = |m: &[[T; 3]; 3], p: Point<T>| {
        Point::new(m[0][0] * p.x + m[0][2], m[1][1] * p.y + m[1][2])
    };
    let (z, o) = (T::zero(), T::one());
    let mut a = [[z; 8]; 8];
    let mut b = [z; 8];
    for k in 0..4 {
        let s = tf(&ns, src[k]);
        let d = tf(&nd, dst[k]);
        a[2 * k] = [s.x, s.y, o, z, z, z, -d.x * s.x, -d.x * s.y];
        b[2 * k] = d.x;
        a[2 * k + 1] = [z, z, z, s.x, s.y, o, -d.y * s.x, -d.y * s.y];
        b[2 * k + 1] = d.y;
    }
    let h = solve_linear(a, b).ok_or(ReprojectError::EstimationFailure)?;
    let hn = [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], o]];
    let full = mat_mul(&nd_inv, &mat_mul(&hn, &ns));
    Homography::from_matrix(full).map_err(|_| ReprojectError::EstimationFailure)
}

/// Output pixel `(x, y)` takes the cubic sample of the input at `H^-1 (x, y)`,
/// with edge replication outside the input.
pub fn warp_perspective<T: Scalar>(
    img: &ImageRgb,
    h: &Homography<T>,
    out_w: usize,
    out_h: usize,
) -> Result<ImageRgb, ReprojectError> {
    let inv = h.inverse()?;
    let mut data = Vec::with_capacity(out_w * out_h * 3);
    let mut px = [T::zero(); 3];
    for y in 0..out_h {
        for x in 0..out_w {
            let s = inv.apply(Point::new(T::from_usize_lossy(x), T::from_usize_lossy(y)));
            sample_cubic(img.as_raw(), img.width(), img.height(), 3, s.x, s.y, &mut px);
            data.extend(px.iter().map(|&v| to_u8(v)));
        }
    }
    Ok(ImageRgb::from_raw(out_w, out_h, data)?)
}

/// Orders the corners, warps the card to an upright rectangle and turns
/// landscape cards to portrait by rotating the destination corners.
pub fn reproject_card<T: Scalar>(
    img: &ImageRgb,
    raw: [Point<T>; 4],
) -> Result<(Quad<T>, ImageRgb), ReprojectError> {
    let quad = order_points(raw)?;
    let (w, h) = quad_dims(&quad);
    let (out_w, out_h, landscape) = if w > h { (h, w, true) } else { (w, h, false) };
    let (xm, ym) = (T::from_usize_lossy(out_w - 1), T::from_usize_lossy(out_h - 1));
    let z = T::zero();
    let mut dst = [Point::new(z, z), Point::new(xm, z), Point::new(xm, ym), Point::new(z, ym)];
    if landscape {
        // tl -> top-right, tr -> bottom-right, ...: the scene's left edge becomes the top
        dst.rotate_left(1);
    }
    if out_w < 2 || out_h < 2 {
        return Err(ReprojectError::InvalidQuad("card smaller than two pixels"));
    }
    let hmg = solve_homography(&quad.corners(), &dst)?;
    let card = warp_perspective(img, &hmg, out_w, out_h)?;
    Ok((quad, card))
}

pub const PATCH_SIZE: usize = 28;

/// 28x28 thresholded rank-corner patch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CornerPatch(ImageGray);

impl CornerPatch {
    pub fn new(img: ImageGray) -> Result<Self, ReprojectError> {
        if img.width() != PATCH_SIZE || img.height() != PATCH_SIZE {
            return Err(ReprojectError::ImageTooSmall {
                width: img.width(),
                height: img.height(),
            });
        }
        Ok(Self(img))
    }

    pub fn image(&self) -> &ImageGray {
        &self.0
    }

    pub fn into_image(self) -> ImageGray {
        self.0
    }
}

/// Corner-crop proportions, tuned for standard poker-size decks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerConfig {
    pub row_start: f64,
    pub row_end: f64,
    pub col_start: f64,
    pub col_end: f64,
    /// Expected height/width ratio and the allowed deviation either side.
    pub aspect: f64,
    pub aspect_tolerance: f64,
    /// Ink gray range kept by the threshold.
    pub ink_lo: u8,
    pub ink_hi: u8,
}

impl Default for CornerConfig {
    fn default() -> Self {
        Self {
            row_start: 0.03,
            row_end: 0.15,
            col_start: 0.01,
            col_end: 0.13,
            aspect: 1.4,
            aspect_tolerance: 0.2,
            ink_lo: 0,
            ink_hi: 125,
        }
    }
}

impl CornerConfig {
    /// Half-open `(rows, cols)` crop window for a `w x h` card.
    pub fn crop_window(&self, w: usize, h: usize) -> ((usize, usize), (usize, usize)) {
        let at = |frac: f64, dim: usize| (frac * dim as f64).floor() as usize;
        (
            (at(self.row_start, h), at(self.row_end, h).min(h)),
            (at(self.col_start, w), at(self.col_end, w).min(w)),
        )
    }
}

/// Crops the top-left rank index, thresholds dark ink and resizes to 28x28.
pub fn extract_corner(card: &ImageRgb, cfg: &CornerConfig) -> Result<CornerPatch, ReprojectError> {
    let (w, h) = (card.width(), card.height());
    let aspect = h as f64 / w as f64;
    if (aspect - cfg.aspect).abs() > cfg.aspect_tolerance + 1e-12 {
        return Err(ReprojectError::InvalidCardAspect { aspect });
    }
    let ((r0, r1), (c0, c1)) = cfg.crop_window(w, h);
    if r1 <= r0 || c1 <= c0 {
        return Err(ReprojectError::ImageTooSmall {
            width: c1.saturating_sub(c0),
            height: r1.saturating_sub(r0),
        });
    }
    let corner = card.crop(c0, r0, c1, r1)?;
    let ink = threshold_range(&rgb_to_gray(&corner), cfg.ink_lo, cfg.ink_hi)?;
    let patch = resize_cubic(&ink.to_gray(), PATCH_SIZE, PATCH_SIZE)?;
    CornerPatch::new(patch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::new(x, y)
    }

    #[test]
    fn rectangle_any_order() {
        let c = [p(0.0, 0.0), p(10.0, 0.0), p(10.0, 14.0), p(0.0, 14.0)];
        let expect = Quad::from_corners(c);
        let perms = [[0, 1, 2, 3], [3, 2, 1, 0], [2, 0, 3, 1], [1, 3, 0, 2]];
        for perm in perms {
            assert_eq!(order_points(perm.map(|i| c[i])).unwrap(), expect);
        }
    }

    #[test]
    fn diamond_follows_sort_rule() {
        let q = order_points([p(5.0, 0.0), p(10.0, 5.0), p(5.0, 10.0), p(0.0, 5.0)]).unwrap();
        assert_eq!(q.tl, p(5.0, 0.0));
        assert_eq!(q.bl, p(0.0, 5.0));
        assert_eq!(q.br, p(5.0, 10.0));
        assert_eq!(q.tr, p(10.0, 5.0));
    }

    #[test]
    fn degenerate_quads_rejected() {
        assert!(order_points([p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0), p(0.0, 5.0)]).is_err());
        assert!(order_points([p(0.0, 0.0), p(0.0, 0.0), p(2.0, 0.0), p(0.0, 5.0)]).is_err());
    }

    #[test]
    fn dims_use_longer_opposing_edges() {
        let rect = Quad::from_corners([p(0.0, 0.0), p(200.0, 0.0), p(200.0, 280.0), p(0.0, 280.0)]);
        assert_eq!(quad_dims(&rect), (200, 280));
        let h = (280.0f64.powi(2) - 10.0f64.powi(2)).sqrt();
        let trap = Quad::from_corners([p(10.0, 0.0), p(190.0, 0.0), p(200.0, h), p(0.0, h)]);
        assert_eq!(quad_dims(&trap).0, 200);
        let unit = Quad::from_corners([p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]);
        assert_eq!(quad_dims(&unit), (1, 1));
    }

    #[test]
    fn identity_and_scale_homographies() {
        let sq = [p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)];
        let id = solve_homography(&sq, &sq).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((id.m[i][j] - e).abs() < 1e-9);
            }
        }
        let big = sq.map(|q| q * 2.0);
        let s = solve_homography(&sq, &big).unwrap();
        let expect = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((s.m[i][j] - expect[i][j]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn singular_homography_is_an_error() {
        let sq = [p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)];
        let line = [p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0), p(3.0, 3.0)];
        assert!(matches!(solve_homography(&sq, &line), Err(ReprojectError::EstimationFailure)));
        let flat = Homography {
            m: [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
        };
        let img = ImageRgb::filled(4, 4, [0; 3]).unwrap();
        assert!(warp_perspective(&img, &flat, 4, 4).is_err());
    }

    #[test]
    fn identity_warp_is_lossless() {
        let img = ImageRgb::from_fn(17, 11, |x, y| [(x * 13) as u8, (y * 21) as u8, ((x ^ y) * 7) as u8]).unwrap();
        let out = warp_perspective(&img, &Homography::<f64>::identity(), 17, 11).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn scaling_constant_image() {
        let img = ImageRgb::filled(10, 10, [40, 80, 120]).unwrap();
        let h = Homography::from_matrix([[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let out = warp_perspective(&img, &h, 20, 20).unwrap();
        assert!(out.pixels().all(|px| px == [40, 80, 120]));
    }

    #[test]
    fn crop_homography_matches_direct_resample() {
        let img = ImageRgb::from_fn(40, 40, |x, y| {
            let v = if (x / 5 + y / 5) % 2 == 0 { 230 } else { 20 };
            [v, v, v]
        })
        .unwrap();
        // crop [8, 28) x [6, 26): translation by (-8, -6)
        let h = Homography::from_matrix([[1.0, 0.0, -8.0], [0.0, 1.0, -6.0], [0.0, 0.0, 1.0]]).unwrap();
        let out = warp_perspective(&img, &h, 20, 20).unwrap();
        let direct = img.crop(8, 6, 28, 26).unwrap();
        for (a, b) in out.as_raw().iter().zip(direct.as_raw()) {
            assert!((i16::from(*a) - i16::from(*b)).abs() <= 1);
        }
    }

    #[test]
    fn corner_window_arithmetic() {
        let cfg = CornerConfig::default();
        assert_eq!(cfg.crop_window(400, 560), ((16, 84), (4, 52)));
        let card = ImageRgb::filled(400, 560, [255, 255, 255]).unwrap();
        let patch = extract_corner(&card, &cfg).unwrap();
        assert_eq!((patch.image().width(), patch.image().height()), (28, 28));
        assert!(patch.image().as_raw().iter().all(|&v| v == 0));
    }

    #[test]
    fn corner_rejects_bad_aspect_and_tiny_cards() {
        let cfg = CornerConfig::default();
        let square = ImageRgb::filled(100, 100, [255; 3]).unwrap();
        assert!(matches!(extract_corner(&square, &cfg), Err(ReprojectError::InvalidCardAspect { .. })));
        let tiny = ImageRgb::filled(5, 7, [255; 3]).unwrap();
        assert_eq!(cfg.crop_window(5, 7), ((0, 1), (0, 0)));
        assert!(matches!(extract_corner(&tiny, &cfg), Err(ReprojectError::ImageTooSmall { .. })));
    }

    #[test]
    fn corner_depends_only_on_top_left_region() {
        let cfg = CornerConfig::default();
        let base = ImageRgb::from_fn(100, 140, |x, y| if (3..10).contains(&x) && (6..18).contains(&y) { [0; 3] } else { [255; 3] }).unwrap();
        let mut other = base.clone();
        for y in 30..140 {
            for x in 20..100 {
                other.put_pixel(x, y, [0, 0, 0]);
            }
        }
        assert_eq!(extract_corner(&base, &cfg).unwrap(), extract_corner(&other, &cfg).unwrap());
    }

    #[test]
    fn landscape_card_comes_out_portrait() {
        let img = ImageRgb::filled(300, 200, [200; 3]).unwrap();
        let raw = [p(20.0, 30.0), p(160.0, 30.0), p(160.0, 130.0), p(20.0, 130.0)];
        let (q, card) = reproject_card(&img, raw).unwrap();
        assert_eq!(q.tl, p(20.0, 30.0));
        assert_eq!((card.width(), card.height()), (100, 140));
    }

    fn convex_quad() -> impl Strategy<Value = [Point<f64>; 4]> {
        (
            10.0f64..500.0,
            10.0f64..500.0,
            20.0f64..200.0,
            20.0f64..200.0,
            0.0f64..std::f64::consts::TAU,
            proptest::array::uniform4((-0.15f64..0.15, -0.15f64..0.15)),
        )
            .prop_map(|(cx, cy, w, h, rot, jit)| {
                let base = [(-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)];
                let (s, c) = rot.sin_cos();
                let mut out = [p(0.0, 0.0); 4];
                for k in 0..4 {
                    let lx = (base[k].0 + jit[k].0) * w;
                    let ly = (base[k].1 + jit[k].1) * h;
                    out[k] = p(cx + c * lx - s * ly, cy + s * lx + c * ly);
                }
                out
            })
    }

    proptest! {
        #[test]
        fn ordering_is_permutation_invariant(q in convex_quad(), perm in Just(()).prop_perturb(|_, mut rng| {
            let mut idx = [0usize, 1, 2, 3];
            for i in (1..4).rev() {
                let j = (rng.next_u32() as usize) % (i + 1);
                idx.swap(i, j);
            }
            idx
        })) {
            let a = order_points(q).unwrap();
            let b = order_points(perm.map(|i| q[i])).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn homography_reproduces_corners(src in convex_quad(), dst in convex_quad()) {
            let h = solve_homography(&src, &dst).unwrap();
            for k in 0..4 {
                let m = h.apply(src[k]);
                prop_assert!((m.x - dst[k].x).abs() < 1e-6 && (m.y - dst[k].y).abs() < 1e-6);
            }
        }
    }
}
