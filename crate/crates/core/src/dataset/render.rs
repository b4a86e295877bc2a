//! Synthetic table scenes with exact ground truth.
//!
//! Cards are drawn in their own frame (width 1, height 1.4), mapped into
//! the scene through a homography and supersampled 3x3 per pixel. Scenes
//! are deterministic for a given spec and seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::classify::CardLabel;
use crate::font::{render_text, Bitmap};
use crate::geometry::Point;
use crate::raster::ImageRgb;
use crate::reproject::{solve_homography, Homography, Quad};
use crate::strategy::Role;

pub const CARD_ASPECT: f64 = 1.4;
pub const FELT: [u8; 3] = [22, 92, 48];

const CARD_STOCK: [f64; 3] = [248.0, 248.0, 244.0];
const BLACK_INK: [f64; 3] = [24.0, 24.0, 28.0];
const RED_INK: [f64; 3] = [196.0, 24.0, 36.0];
const BACK_DARK: [f64; 3] = [28.0, 36.0, 112.0];
const BACK_LIGHT: [f64; 3] = [112.0, 132.0, 214.0];
const COURT_FILL: [f64; 3] = [226.0, 186.0, 60.0];

/// What is printed on a card.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Face {
    /// Rank index in two opposite corners plus a centre motif.
    Index { label: CardLabel, red: bool },
    /// Only the top-left index, for orientation tests.
    SingleIndex { label: CardLabel, red: bool },
    /// Patterned back with a white border.
    Back,
    /// Plain card stock.
    Blank,
}

impl Face {
    pub fn label(&self) -> Option<CardLabel> {
        match *self {
            Face::Index { label, .. } | Face::SingleIndex { label, .. } => Some(label),
            Face::Back => Some(CardLabel::Back),
            Face::Blank => None,
        }
    }

    /// A printable face for any label; backs ignore `red`.
    pub fn for_label(label: CardLabel, red: bool) -> Self {
        if label == CardLabel::Back {
            Face::Back
        } else {
            Face::Index { label, red }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardPlacement {
    pub face: Face,
    /// Centre in scene pixels.
    pub center: (f64, f64),
    /// Card width in pixels; height is `1.4 x` this.
    pub width: f64,
    /// Clockwise rotation on screen.
    pub rotation_deg: f64,
    /// Per-corner displacement (TL, TR, BR, BL) in pixels, for perspective.
    #[serde(default)]
    pub corner_offsets: [(f64, f64); 4],
    #[serde(default = "unassigned")]
    pub role: Role,
}

fn unassigned() -> Role {
    Role::Unassigned
}

impl CardPlacement {
    pub fn upright(face: Face, center: (f64, f64), width: f64) -> Self {
        Self {
            face,
            center,
            width,
            rotation_deg: 0.0,
            corner_offsets: [(0.0, 0.0); 4],
            role: Role::Unassigned,
        }
    }

    /// Corner positions in the card's own TL, TR, BR, BL order.
    pub fn quad(&self) -> Quad<f64> {
        let (hw, hh) = (self.width / 2.0, self.width * CARD_ASPECT / 2.0);
        let (s, c) = self.rotation_deg.to_radians().sin_cos();
        let local = [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)];
        let mut pts = [Point::new(0.0, 0.0); 4];
        for (k, (lx, ly)) in local.into_iter().enumerate() {
            let (ox, oy) = self.corner_offsets[k];
            pts[k] = Point::new(
                self.center.0 + c * lx - s * ly + ox,
                self.center.1 + s * lx + c * ly + oy,
            );
        }
        Quad::from_corners(pts)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub background: [u8; 3],
    pub cards: Vec<CardPlacement>,
    /// Standard deviation of per-channel Gaussian noise.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Permit cards that overlap or leave the frame; the scene is then
    /// flagged as outside the detector's assumptions.
    #[serde(default)]
    pub allow_violations: bool,
}

impl SceneSpec {
    pub fn new(width: usize, height: usize, seed: u64) -> Self {
        Self {
            width,
            height,
            background: FELT,
            cards: Vec::new(),
            noise_sigma: 0.0,
            seed,
            allow_violations: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub quad: Quad<f64>,
    /// `None` for blank cards.
    pub label: Option<CardLabel>,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScene {
    pub image: ImageRgb,
    pub ground_truth: Vec<GroundTruth>,
    pub seed: u64,
    /// Every card fully visible and no two cards overlapping.
    pub within_assumptions: bool,
}

/// JSON sidecar written next to a rendered scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSidecar {
    pub width: usize,
    pub height: usize,
    pub seed: u64,
    pub within_assumptions: bool,
    pub cards: Vec<SidecarCard>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarCard {
    /// TL, TR, BR, BL in the card's own orientation.
    pub quad: [[f64; 2]; 4],
    pub label: Option<CardLabel>,
    pub role: Role,
}

impl SyntheticScene {
    pub fn sidecar(&self) -> SceneSidecar {
        SceneSidecar {
            width: self.image.width(),
            height: self.image.height(),
            seed: self.seed,
            within_assumptions: self.within_assumptions,
            cards: self
                .ground_truth
                .iter()
                .map(|g| SidecarCard {
                    quad: g.quad.corners().map(|p| [p.x, p.y]),
                    label: g.label,
                    role: g.role,
                })
                .collect(),
        }
    }
}

impl SceneSidecar {
    pub fn ground_truth(&self) -> Vec<GroundTruth> {
        self.cards
            .iter()
            .map(|c| GroundTruth {
                quad: Quad::from_corners(c.quad.map(|[x, y]| Point::new(x, y))),
                label: c.label,
                role: c.role,
            })
            .collect()
    }
}

fn inside_convex(q: &[Point<f64>; 4], p: Point<f64>) -> bool {
    let mut sign = 0.0;
    for k in 0..4 {
        let a = q[k];
        let b = q[(k + 1) % 4];
        let c = (b - a).cross(p - a);
        if c != 0.0 {
            if sign == 0.0 {
                sign = c.signum();
            } else if c.signum() != sign {
                return false;
            }
        }
    }
    true
}

fn edges_cross(a: &[Point<f64>; 4], b: &[Point<f64>; 4]) -> bool {
    let seg = |p1: Point<f64>, p2: Point<f64>, p3: Point<f64>, p4: Point<f64>| {
        let d1 = (p4 - p3).cross(p1 - p3);
        let d2 = (p4 - p3).cross(p2 - p3);
        let d3 = (p2 - p1).cross(p3 - p1);
        let d4 = (p2 - p1).cross(p4 - p1);
        if d1 == 0.0 && d2 == 0.0 {
            // collinear: overlap of the projections onto the common line
            let dir = p2 - p1;
            let t = |p: Point<f64>| (p - p1).x * dir.x + (p - p1).y * dir.y;
            let (a, b) = (t(p3).min(t(p4)), t(p3).max(t(p4)));
            return b >= 0.0 && a <= t(p2);
        }
        d1 * d2 <= 0.0 && d3 * d4 <= 0.0
    };
    (0..4).any(|i| (0..4).any(|j| seg(a[i], a[(i + 1) % 4], b[j], b[(j + 1) % 4])))
}

fn quads_overlap(a: &Quad<f64>, b: &Quad<f64>) -> bool {
    let (ca, cb) = (a.corners(), b.corners());
    edges_cross(&ca, &cb) || inside_convex(&ca, cb[0]) || inside_convex(&cb, ca[0])
}

fn mix(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [0, 1, 2].map(|i| a[i] * (1.0 - t) + b[i] * t)
}

struct CardPainter {
    face: Face,
    index: Option<Bitmap>,
    inv: Homography<f64>,
    quad: [Point<f64>; 4],
}

// Rank index box in card units (card width = 1).
const INDEX_X: (f64, f64) = (0.02, 0.12);
const INDEX_Y: (f64, f64) = (0.055, 0.195);
const CORNER_RADIUS: f64 = 0.03;

impl CardPainter {
    fn new(c: &CardPlacement) -> Result<Self, DatasetError> {
        let quad = c.quad();
        let unit = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, CARD_ASPECT),
            Point::new(0.0, CARD_ASPECT),
        ];
        let h = solve_homography(&unit, &quad.corners()).map_err(|_| DatasetError::InvalidSpec("degenerate card".into()))?;
        let inv = h.inverse().map_err(|_| DatasetError::InvalidSpec("degenerate card".into()))?;
        let index = c.face.label().filter(|l| *l != CardLabel::Back).map(|l| render_text(l.as_str()));
        Ok(Self {
            face: c.face,
            index,
            inv,
            quad: quad.corners(),
        })
    }

    fn bounds(&self, w: usize, h: usize) -> (usize, usize, usize, usize) {
        let xs = self.quad.map(|p| p.x);
        let ys = self.quad.map(|p| p.y);
        let lo = |v: [f64; 4]| v.iter().copied().fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
        let hi = |v: [f64; 4], m: usize| (v.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil() as isize + 1).clamp(0, m as isize) as usize;
        (lo(xs), lo(ys), hi(xs, w), hi(ys, h))
    }

    /// Colour at card coordinates, or `None` outside the rounded outline.
    fn shade(&self, u: f64, v: f64) -> Option<[f64; 3]> {
        if !(0.0..=1.0).contains(&u) || !(0.0..=CARD_ASPECT).contains(&v) {
            return None;
        }
        let r = CORNER_RADIUS;
        let cx = u.clamp(r, 1.0 - r);
        let cy = v.clamp(r, CARD_ASPECT - r);
        if (u - cx).powi(2) + (v - cy).powi(2) > r * r {
            return None;
        }
        Some(match self.face {
            Face::Blank => CARD_STOCK,
            Face::Back => {
                let m = 0.07;
                if u < m || u > 1.0 - m || v < m || v > CARD_ASPECT - m {
                    CARD_STOCK
                } else {
                    let a = ((u + v) * 14.0).rem_euclid(1.0);
                    let b = ((u - v) * 14.0).rem_euclid(1.0);
                    if a < 0.2 || b < 0.2 {
                        BACK_LIGHT
                    } else {
                        BACK_DARK
                    }
                }
            }
            Face::Index { red, .. } | Face::SingleIndex { red, .. } => {
                let ink = if red { RED_INK } else { BLACK_INK };
                let both = matches!(self.face, Face::Index { .. });
                let (ru, rv) = (1.0 - u, CARD_ASPECT - v);
                if self.index_ink(u, v) || self.pip(u, v) || (both && (self.index_ink(ru, rv) || self.pip(ru, rv))) {
                    ink
                } else if let Some(c) = self.motif(u, v, ink) {
                    c
                } else {
                    CARD_STOCK
                }
            }
        })
    }

    fn index_ink(&self, u: f64, v: f64) -> bool {
        let Some(bm) = &self.index else { return false };
        let (x0, x1) = INDEX_X;
        let (y0, y1) = INDEX_Y;
        bm.sample((u - x0) / (x1 - x0), (v - y0) / (y1 - y0))
    }

    fn pip(&self, u: f64, v: f64) -> bool {
        let (cx, cy, r) = (0.07, 0.255, 0.032);
        (u - cx).abs() + (v - cy).abs() <= r
    }

    fn motif(&self, u: f64, v: f64, ink: [f64; 3]) -> Option<[f64; 3]> {
        let label = self.face.label()?;
        let (du, dv) = (u - 0.5, v - CARD_ASPECT / 2.0);
        match label {
            CardLabel::Jack | CardLabel::Queen | CardLabel::King => {
                if du.abs() < 0.28 && dv.abs() < 0.42 {
                    if du.abs() > 0.26 || dv.abs() > 0.40 {
                        Some(ink)
                    } else {
                        Some(COURT_FILL)
                    }
                } else {
                    None
                }
            }
            _ => ((du / 0.13).abs() + (dv / 0.18).abs() <= 1.0).then_some(ink),
        }
    }
}

const SUPERSAMPLE: usize = 3;

/// Renders a scene and reports its exact card corners.
pub fn render_scene(spec: &SceneSpec) -> Result<SyntheticScene, DatasetError> {
    if spec.width == 0 || spec.height == 0 {
        return Err(DatasetError::InvalidSpec("empty canvas".into()));
    }
    if !(spec.noise_sigma >= 0.0) {
        return Err(DatasetError::InvalidSpec("negative noise".into()));
    }
    let quads: Vec<Quad<f64>> = spec.cards.iter().map(|c| c.quad()).collect();
    let (w, h) = (spec.width as f64, spec.height as f64);
    let fully_visible = quads.iter().all(|q| {
        q.corners()
            .iter()
            .all(|p| p.x >= 0.0 && p.y >= 0.0 && p.x <= w - 1.0 && p.y <= h - 1.0)
    });
    let disjoint = (0..quads.len()).all(|i| (i + 1..quads.len()).all(|j| !quads_overlap(&quads[i], &quads[j])));
    if !spec.allow_violations {
        if !fully_visible {
            return Err(DatasetError::InvalidSpec("card extends outside the frame".into()));
        }
        if !disjoint {
            return Err(DatasetError::InvalidSpec("cards overlap".into()));
        }
    }
    if spec.cards.iter().any(|c| !(c.width > 2.0)) {
        return Err(DatasetError::InvalidSpec("card width must exceed 2 px".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut acc: Vec<[f64; 3]> = vec![spec.background.map(f64::from); spec.width * spec.height];
    let painters = spec.cards.iter().map(CardPainter::new).collect::<Result<Vec<_>, _>>()?;
    let n_sub = (SUPERSAMPLE * SUPERSAMPLE) as f64;
    for painter in &painters {
        let (x0, y0, x1, y1) = painter.bounds(spec.width, spec.height);
        for y in y0..y1 {
            for x in x0..x1 {
                let mut sum = [0.0; 3];
                let mut hits = 0.0;
                for sy in 0..SUPERSAMPLE {
                    for sx in 0..SUPERSAMPLE {
                        let px = x as f64 + (sx as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5;
                        let py = y as f64 + (sy as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5;
                        let c = painter.inv.apply(Point::new(px, py));
                        if let Some(col) = painter.shade(c.x, c.y) {
                            for i in 0..3 {
                                sum[i] += col[i];
                            }
                            hits += 1.0;
                        }
                    }
                }
                if hits > 0.0 {
                    let idx = y * spec.width + x;
                    let cover = hits / n_sub;
                    let mean = sum.map(|s| s / hits);
                    acc[idx] = mix(acc[idx], mean, cover);
                }
            }
        }
    }

    let noise = Normal::new(0.0, spec.noise_sigma.max(0.0))
        .map_err(|_| DatasetError::InvalidSpec("noise".into()))?;
    let mut data = Vec::with_capacity(acc.len() * 3);
    for px in acc {
        for v in px {
            let n = if spec.noise_sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            data.push((v + n).round().clamp(0.0, 255.0) as u8);
        }
    }
    let image = ImageRgb::from_raw(spec.width, spec.height, data).expect("buffer sized from spec");
    Ok(SyntheticScene {
        image,
        ground_truth: spec
            .cards
            .iter()
            .zip(quads)
            .map(|(c, quad)| GroundTruth {
                quad,
                label: c.face.label(),
                role: c.role,
            })
            .collect(),
        seed: spec.seed,
        within_assumptions: fully_visible && disjoint,
    })
}

/// Pixels whose centre lies on a card (rounded outline included).
pub fn ground_truth_mask(spec: &SceneSpec) -> Result<crate::raster::BinaryMask, DatasetError> {
    let painters = spec.cards.iter().map(CardPainter::new).collect::<Result<Vec<_>, _>>()?;
    let mut mask = crate::raster::BinaryMask::zeros(spec.width, spec.height)
        .map_err(|_| DatasetError::InvalidSpec("empty canvas".into()))?;
    for p in &painters {
        let (x0, y0, x1, y1) = p.bounds(spec.width, spec.height);
        for y in y0..y1 {
            for x in x0..x1 {
                let c = p.inv.apply(Point::new(x as f64, y as f64));
                if p.shade(c.x, c.y).is_some() {
                    mask.set(x, y, true);
                }
            }
        }
    }
    Ok(mask)
}

/// Options for randomly laid out scenes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomSceneOptions {
    pub width: usize,
    pub height: usize,
    pub min_cards: usize,
    pub max_cards: usize,
    pub card_width: (f64, f64),
    pub max_rotation_deg: f64,
    /// Maximum corner displacement as a fraction of card width.
    pub perspective: f64,
    pub noise_sigma: f64,
}

impl Default for RandomSceneOptions {
    fn default() -> Self {
        Self {
            width: 720,
            height: 540,
            min_cards: 2,
            max_cards: 6,
            card_width: (104.0, 120.0),
            max_rotation_deg: 45.0,
            perspective: 0.03,
            noise_sigma: 3.0,
        }
    }
}

/// Lays cards out on a 3x2 grid (one card per cell, jittered, rotated).
/// `labels` fixes the faces; otherwise they are drawn uniformly.
pub fn random_scene_spec(
    seed: u64,
    opts: &RandomSceneOptions,
    labels: Option<&[CardLabel]>,
) -> Result<SceneSpec, DatasetError> {
    const COLS: usize = 3;
    const ROWS: usize = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let n = match labels {
        Some(l) => l.len(),
        None => rng.random_range(opts.min_cards..=opts.max_cards.max(opts.min_cards)),
    };
    if n > COLS * ROWS {
        return Err(DatasetError::InvalidSpec(format!("at most {} cards per random scene", COLS * ROWS)));
    }
    let cell_w = opts.width as f64 / COLS as f64;
    let cell_h = opts.height as f64 / ROWS as f64;
    let mut cells: Vec<usize> = (0..COLS * ROWS).collect();
    for i in (1..cells.len()).rev() {
        let j = rng.random_range(0..=i);
        cells.swap(i, j);
    }
    let mut spec = SceneSpec::new(opts.width, opts.height, seed);
    spec.noise_sigma = opts.noise_sigma;
    for (i, &cell) in cells.iter().take(n).enumerate() {
        let width = rng.random_range(opts.card_width.0..=opts.card_width.1);
        let rot = rng.random_range(-opts.max_rotation_deg..=opts.max_rotation_deg);
        let jitter = opts.perspective * width;
        let mut offsets = [(0.0, 0.0); 4];
        for o in offsets.iter_mut() {
            *o = (
                rng.random_range(-jitter..=jitter),
                rng.random_range(-jitter..=jitter),
            );
        }
        // radius of the circle enclosing the card, perspective included
        let reach = width * (1.0 + CARD_ASPECT * CARD_ASPECT).sqrt() / 2.0 + jitter * 1.5 + 2.0;
        let (cx0, cy0) = ((cell % COLS) as f64 * cell_w + cell_w / 2.0, (cell / COLS) as f64 * cell_h + cell_h / 2.0);
        let slack_x = (cell_w / 2.0 - reach).max(0.0);
        let slack_y = (cell_h / 2.0 - reach).max(0.0);
        let center = (
            cx0 + rng.random_range(-slack_x..=slack_x),
            cy0 + rng.random_range(-slack_y..=slack_y),
        );
        let label = match labels {
            Some(l) => l[i],
            None => CardLabel::ALL[rng.random_range(0..CardLabel::ALL.len())],
        };
        let red = rng.random_bool(0.5);
        spec.cards.push(CardPlacement {
            face: Face::for_label(label, red),
            center,
            width,
            rotation_deg: rot,
            corner_offsets: offsets,
            role: if cell / COLS == 0 { Role::Dealer } else { Role::Player },
        });
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_scene_is_background_only() {
        let s = render_scene(&SceneSpec::new(40, 30, 1)).unwrap();
        assert!(s.ground_truth.is_empty());
        assert!(s.image.pixels().all(|p| p == FELT));
        assert!(s.within_assumptions);
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = random_scene_spec(11, &RandomSceneOptions::default(), None).unwrap();
        let a = render_scene(&spec).unwrap();
        let b = render_scene(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn six_card_layouts_are_valid() {
        let opts = RandomSceneOptions {
            min_cards: 6,
            max_cards: 6,
            ..Default::default()
        };
        for seed in 0..20 {
            let spec = random_scene_spec(seed, &opts, None).unwrap();
            let s = render_scene(&spec).unwrap();
            assert_eq!(s.ground_truth.len(), 6);
            assert!(s.within_assumptions);
            for (i, a) in s.ground_truth.iter().enumerate() {
                for b in &s.ground_truth[i + 1..] {
                    assert!(!quads_overlap(&a.quad, &b.quad));
                }
            }
        }
    }

    #[test]
    fn rejects_overlap_and_out_of_frame() {
        let mut spec = SceneSpec::new(300, 300, 0);
        spec.cards.push(CardPlacement::upright(Face::Blank, (100.0, 150.0), 80.0));
        spec.cards.push(CardPlacement::upright(Face::Blank, (140.0, 150.0), 80.0));
        assert!(matches!(render_scene(&spec), Err(DatasetError::InvalidSpec(_))));
        spec.allow_violations = true;
        assert!(!render_scene(&spec).unwrap().within_assumptions);

        let mut spec = SceneSpec::new(300, 300, 0);
        spec.cards.push(CardPlacement::upright(Face::Blank, (10.0, 150.0), 80.0));
        assert!(render_scene(&spec).is_err());
    }

    #[test]
    fn aligned_but_separate_cards_do_not_overlap() {
        let a = CardPlacement::upright(Face::Blank, (100.0, 100.0), 50.0).quad();
        let b = CardPlacement::upright(Face::Blank, (100.0, 300.0), 50.0).quad();
        let c = CardPlacement::upright(Face::Blank, (100.0, 150.0), 50.0).quad();
        assert!(!quads_overlap(&a, &b));
        assert!(quads_overlap(&a, &c));
    }

    #[test]
    fn quad_corners_follow_rotation() {
        let mut c = CardPlacement::upright(Face::Blank, (100.0, 100.0), 50.0);
        c.rotation_deg = 90.0;
        let q = c.quad();
        // card top-left swings to the upper right on screen
        assert!((q.tl.x - 135.0).abs() < 1e-9 && (q.tl.y - 75.0).abs() < 1e-9);
    }

    #[test]
    fn sidecar_round_trip() {
        let spec = random_scene_spec(3, &RandomSceneOptions::default(), None).unwrap();
        let s = render_scene(&spec).unwrap();
        let json = serde_json::to_string(&s.sidecar()).unwrap();
        let back: SceneSidecar = serde_json::from_str(&json).unwrap();
        assert_eq!(back.ground_truth(), s.ground_truth);
    }
}
