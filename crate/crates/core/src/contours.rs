//! Outer-border tracing, polygon simplification and card-quad filtering.

use serde::{Deserialize, Serialize};

use crate::geometry::{perimeter, polygon_area, Point, Polygon};
use crate::raster::BinaryMask;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PixelPoint {
    pub x: i32,
    pub y: i32,
}

/// Closed border of one foreground region; consecutive points are
/// 8-adjacent and the last point connects back to the first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Contour {
    pub points: Vec<PixelPoint>,
}

impl Contour {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_points<T: Scalar>(&self) -> Vec<Point<T>> {
        self.points
            .iter()
            .map(|p| Point::new(T::lit(f64::from(p.x)), T::lit(f64::from(p.y))))
            .collect()
    }

    pub fn perimeter<T: Scalar>(&self) -> T {
        perimeter(&self.to_points::<T>(), true)
    }
}

// Clockwise on screen (y down), starting east.
const DIRS: [(isize, isize); 8] = [
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
];

fn dir_of(dr: isize, dc: isize) -> usize {
    DIRS.iter()
        .position(|&d| d == (dr, dc))
        .expect("neighbour offset")
}

struct Border {
    is_hole: bool,
    parent: i32,
}

/// Border following (Suzuki & Abe) returning only outermost borders.
///
/// Foreground uses 8-connectivity and background 4-connectivity. Regions
/// lying inside a hole of another region are not reported. Contours come
/// out in raster-scan discovery order.
pub fn find_external_contours(mask: &BinaryMask) -> Vec<Contour> {
    let (w, h) = (mask.width(), mask.height());
    let (pw, ph) = (w + 2, h + 2);
    let mut f = vec![0i32; pw * ph];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x, y) {
                f[(y + 1) * pw + x + 1] = 1;
            }
        }
    }
    let at = |r: usize, c: usize| r * pw + c;

    let mut borders = vec![
        Border { is_hole: false, parent: 0 },
        // the frame
        Border { is_hole: true, parent: 0 },
    ];
    let mut out = Vec::new();
    let mut nbd: i32 = 1;

    for i in 1..ph - 1 {
        let mut lnbd: i32 = 1;
        for j in 1..pw - 1 {
            let fij = f[at(i, j)];
            if fij == 0 {
                continue;
            }
            let start = if fij == 1 && f[at(i, j - 1)] == 0 {
                Some((false, 4usize))
            } else if fij >= 1 && f[at(i, j + 1)] == 0 {
                if fij > 1 {
                    lnbd = fij;
                }
                Some((true, 0usize))
            } else {
                None
            };

            if let Some((is_hole, from_dir)) = start {
                nbd += 1;
                let prev = &borders[lnbd as usize];
                let parent = if is_hole == prev.is_hole { prev.parent } else { lnbd };
                borders.push(Border { is_hole, parent });
                let pts = follow_border(&mut f, pw, (i, j), from_dir, nbd);
                if !is_hole && parent == 1 {
                    out.push(Contour {
                        points: pts
                            .into_iter()
                            .map(|(r, c)| PixelPoint {
                                x: c as i32 - 1,
                                y: r as i32 - 1,
                            })
                            .collect(),
                    });
                }
            }

            let fij = f[at(i, j)];
            if fij != 1 {
                lnbd = fij.abs();
            }
        }
    }
    out
}

fn follow_border(
    f: &mut [i32],
    pw: usize,
    start: (usize, usize),
    from_dir: usize,
    nbd: i32,
) -> Vec<(usize, usize)> {
    let at = |p: (usize, usize)| p.0 * pw + p.1;
    let step = |p: (usize, usize), d: usize| {
        (
            (p.0 as isize + DIRS[d].0) as usize,
            (p.1 as isize + DIRS[d].1) as usize,
        )
    };

    // 3.1: clockwise search for any non-zero neighbour
    let first = (0..8)
        .map(|k| (from_dir + k) % 8)
        .find(|&d| f[at(step(start, d))] != 0);
    let Some(d1) = first else {
        f[at(start)] = -nbd;
        return vec![start];
    };
    let p1 = step(start, d1);

    let mut pts = Vec::new();
    let mut p2 = p1;
    let mut p3 = start;
    loop {
        pts.push(p3);
        // 3.3: counter-clockwise search starting after p2
        let d2 = dir_of(p2.0 as isize - p3.0 as isize, p2.1 as isize - p3.1 as isize);
        let mut east_zero = false;
        let mut p4 = p2;
        for k in 1..=8 {
            let d = (d2 + 8 - k) % 8;
            let q = step(p3, d);
            if f[at(q)] != 0 {
                p4 = q;
                break;
            }
            if d == 0 {
                east_zero = true;
            }
        }
        // 3.4
        if east_zero {
            f[at(p3)] = -nbd;
        } else if f[at(p3)] == 1 {
            f[at(p3)] = nbd;
        }
        // 3.5
        if p4 == start && p3 == p1 {
            break;
        }
        p2 = p3;
        p3 = p4;
    }
    pts
}

#[inline]
fn chord_distance<T: Scalar>(p: Point<T>, a: Point<T>, b: Point<T>) -> T {
    let ab = b - a;
    let len = ab.norm();
    if len == T::zero() {
        (p - a).norm()
    } else {
        ab.cross(p - a).abs() / len
    }
}

/// Indices kept by Ramer-Douglas-Peucker on a closed curve, ascending.
///
/// The curve is split at its two mutually farthest points (first pair in
/// index order on ties); each half is then simplified recursively, keeping
/// a point when its perpendicular distance to the current chord exceeds
/// `epsilon`.
pub fn rdp_closed_indices<T: Scalar>(points: &[Point<T>], epsilon: T) -> Vec<usize> {
    let n = points.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let (mut ai, mut bi, mut best) = (0, 0, T::zero());
    for i in 0..n {
        for j in i + 1..n {
            let d = (points[i] - points[j]).norm();
            if d > best {
                best = d;
                ai = i;
                bi = j;
            }
        }
    }
    if best == T::zero() {
        return vec![0];
    }
    let mut keep = vec![false; n];
    keep[ai] = true;
    keep[bi] = true;
    // stack of (start, len) runs along the cyclic sequence
    let mut stack = vec![(ai, bi - ai), (bi, n - (bi - ai))];
    while let Some((s, len)) = stack.pop() {
        if len < 2 {
            continue;
        }
        let a = points[s];
        let b = points[(s + len) % n];
        let mut far = 0;
        let mut far_d = T::neg_infinity();
        for off in 1..len {
            let d = chord_distance(points[(s + off) % n], a, b);
            if d > far_d {
                far_d = d;
                far = off;
            }
        }
        if far_d > epsilon {
            keep[(s + far) % n] = true;
            stack.push((s, far));
            stack.push(((s + far) % n, len - far));
        }
    }
    (0..n).filter(|&i| keep[i]).collect()
}

pub fn simplify_rdp<T: Scalar>(poly: &Polygon<T>, epsilon: T) -> Polygon<T> {
    let idx = rdp_closed_indices(&poly.vertices, epsilon);
    Polygon::new(idx.into_iter().map(|i| poly.vertices[i]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadFilter {
    /// RDP tolerance as a fraction of the contour's closed perimeter.
    pub rdp_fraction: f64,
    /// Quads smaller than this fraction of the largest quad are dropped.
    pub min_area_ratio: f64,
}

impl Default for QuadFilter {
    fn default() -> Self {
        Self {
            rdp_fraction: 0.02,
            min_area_ratio: 0.10,
        }
    }
}

/// Simplifies each contour and keeps the four-vertex results whose area is
/// at least `min_area_ratio` of the largest one, in discovery order.
pub fn extract_card_quads<T: Scalar>(contours: &[Contour], filter: &QuadFilter) -> Vec<Polygon<T>> {
    let quads: Vec<(Polygon<T>, T)> = contours
        .iter()
        .filter(|c| c.len() >= 4)
        .filter_map(|c| {
            let pts = c.to_points::<T>();
            let eps = T::lit(filter.rdp_fraction) * perimeter(&pts, true);
            let idx = rdp_closed_indices(&pts, eps);
            (idx.len() == 4).then(|| {
                let poly = Polygon::new(idx.into_iter().map(|i| pts[i]).collect::<Vec<_>>());
                let area = polygon_area(&poly.vertices);
                (poly, area)
            })
        })
        .collect();
    let max_area = quads.iter().map(|(_, a)| *a).fold(T::zero(), T::max);
    let cutoff = T::lit(filter.min_area_ratio) * max_area;
    quads
        .into_iter()
        .filter(|(_, a)| *a >= cutoff && *a > T::zero())
        .map(|(p, _)| p)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rect_mask(w: usize, h: usize, rects: &[(usize, usize, usize, usize)]) -> BinaryMask {
        BinaryMask::from_fn(w, h, |x, y| {
            rects
                .iter()
                .any(|&(x0, y0, rw, rh)| (x0..x0 + rw).contains(&x) && (y0..y0 + rh).contains(&y))
        })
        .unwrap()
    }

    fn pts(raw: &[(f64, f64)]) -> Polygon<f64> {
        Polygon::new(raw.iter().map(|&(x, y)| Point::new(x, y)).collect())
    }

    #[test]
    fn empty_mask_has_no_contours() {
        assert!(find_external_contours(&BinaryMask::zeros(10, 10).unwrap()).is_empty());
    }

    #[test]
    fn filled_rectangle_border() {
        let (w, h) = (23usize, 14usize);
        let m = rect_mask(40, 30, &[(5, 7, w, h)]);
        let cs = find_external_contours(&m);
        assert_eq!(cs.len(), 1);
        let expect = (2 * (w - 1) + 2 * (h - 1)) as f64;
        assert!((cs[0].perimeter::<f64>() - expect).abs() <= 2.0);
        assert_eq!(cs[0].points[0], PixelPoint { x: 5, y: 7 });
    }

    #[test]
    fn two_squares_two_contours() {
        let m = rect_mask(30, 30, &[(2, 2, 6, 6), (15, 15, 8, 8)]);
        assert_eq!(find_external_contours(&m).len(), 2);
    }

    #[test]
    fn diagonal_touch_is_one_region() {
        let m = rect_mask(10, 10, &[(1, 1, 3, 3), (4, 4, 3, 3)]);
        assert_eq!(find_external_contours(&m).len(), 1);
    }

    #[test]
    fn region_inside_hole_is_not_reported() {
        let m = BinaryMask::from_fn(30, 30, |x, y| {
            let ring = (3..27).contains(&x) && (3..27).contains(&y) && !((6..24).contains(&x) && (6..24).contains(&y));
            let island = (12..16).contains(&x) && (12..16).contains(&y);
            ring || island
        })
        .unwrap();
        let cs = find_external_contours(&m);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].points[0], PixelPoint { x: 3, y: 3 });
    }

    #[test]
    fn touching_image_border() {
        let m = BinaryMask::from_fn(5, 4, |_, _| true).unwrap();
        let cs = find_external_contours(&m);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].len(), 2 * 4 + 2 * 3);
    }

    #[test]
    fn single_pixel_region() {
        let m = rect_mask(5, 5, &[(2, 2, 1, 1)]);
        let cs = find_external_contours(&m);
        assert_eq!(cs.len(), 1);
        assert_eq!(cs[0].points, vec![PixelPoint { x: 2, y: 2 }]);
    }

    #[test]
    fn square_with_midpoints_reduces_to_corners() {
        let p = pts(&[
            (0.0, 0.0),
            (5.0, 0.0),
            (10.0, 0.0),
            (10.0, 5.0),
            (10.0, 10.0),
            (5.0, 10.0),
            (0.0, 10.0),
            (0.0, 5.0),
        ]);
        let s = simplify_rdp(&p, 0.02 * p.perimeter());
        assert_eq!(s, pts(&[(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]));
        let zero = simplify_rdp(&p, 0.0);
        assert_eq!(zero.len(), 4);
    }

    #[test]
    fn zero_epsilon_keeps_non_collinear_vertices() {
        let p = pts(&[(0.0, 0.0), (4.0, 1.0), (8.0, 0.0), (9.0, 5.0), (3.0, 7.0)]);
        assert_eq!(simplify_rdp(&p, 0.0), p);
    }

    /// Sagitta of a chord spanning `steps` edges of a regular n-gon.
    fn sagitta(r: f64, n: usize, steps: usize) -> f64 {
        r * (1.0 - (std::f64::consts::PI * steps as f64 / n as f64).cos())
    }

    #[test]
    fn circle_polygon_simplifies_to_octagon() {
        let n = 64;
        let r = 100.0;
        let circle: Polygon<f64> = Polygon::new(
            (0..n)
                .map(|i| {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    Point::new(r * a.cos(), r * a.sin())
                })
                .collect(),
        );
        let eps = 0.02 * circle.perimeter();
        // halves (32 edges) and quarters (16) exceed eps, eighths (8) do not
        assert!(sagitta(r, n, 16) > eps && sagitta(r, n, 8) < eps);
        let s = simplify_rdp(&circle, eps);
        assert_eq!(s.len(), 8);
        assert!((4..=8).contains(&s.len()));
    }

    #[test]
    fn card_filter_drops_small_and_non_quads() {
        let m = rect_mask(400, 400, &[(10, 10, 200, 280), (300, 10, 20, 28)]);
        let cs = find_external_contours(&m);
        assert_eq!(cs.len(), 2);
        let q = extract_card_quads::<f64>(&cs, &QuadFilter::default());
        assert_eq!(q.len(), 1);
        assert!((q[0].area() - 199.0 * 279.0).abs() < 1.0);

        // a pentagon: square with one corner cut off diagonally
        let pent = BinaryMask::from_fn(200, 200, |x, y| {
            (20..180).contains(&x) && (20..180).contains(&y) && x + y < 260
        })
        .unwrap();
        let cs = find_external_contours(&pent);
        assert!(extract_card_quads::<f64>(&cs, &QuadFilter::default()).is_empty());
    }

    #[test]
    fn clean_square_gives_one_quad() {
        let m = rect_mask(50, 50, &[(10, 10, 30, 30)]);
        let q = extract_card_quads::<f32>(&find_external_contours(&m), &QuadFilter::default());
        assert_eq!(q.len(), 1);
        assert_eq!(q[0].len(), 4);
    }

    fn mask_strategy() -> impl Strategy<Value = BinaryMask> {
        (3usize..24, 3usize..24).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0u8..=1, w * h)
                .prop_map(move |d| BinaryMask::from_raw(w, h, d).unwrap())
        })
    }

    fn star_polygon() -> impl Strategy<Value = Polygon<f64>> {
        proptest::collection::vec((1.0f64..100.0, 0.0f64..1.0), 3..40).prop_map(|v| {
            let n = v.len();
            Polygon::new(
                v.into_iter()
                    .enumerate()
                    .map(|(i, (r, jitter))| {
                        let a = 2.0 * std::f64::consts::PI * (i as f64 + 0.8 * jitter) / n as f64;
                        Point::new((r * a.cos()).round(), (r * a.sin()).round())
                    })
                    .collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn contour_points_are_border_pixels(m in mask_strategy()) {
            let (w, h) = (m.width() as i32, m.height() as i32);
            let fg = |x: i32, y: i32| x >= 0 && y >= 0 && x < w && y < h && m.get(x as usize, y as usize);
            for c in find_external_contours(&m) {
                for (k, p) in c.points.iter().enumerate() {
                    prop_assert!(fg(p.x, p.y));
                    let touches_bg = (-1..=1).any(|dy| (-1..=1).any(|dx| !fg(p.x + dx, p.y + dy)));
                    prop_assert!(touches_bg);
                    let q = c.points[(k + 1) % c.len()];
                    prop_assert!((p.x - q.x).abs() <= 1 && (p.y - q.y).abs() <= 1);
                }
            }
        }

        #[test]
        fn rdp_subsequence_tolerance_idempotence(p in star_polygon(), frac in 0.0f64..0.1) {
            let eps = frac * p.perimeter();
            let idx = rdp_closed_indices(&p.vertices, eps);
            prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
            // every dropped point is within eps of the chord that replaced it
            for (k, &a) in idx.iter().enumerate() {
                let b = idx[(k + 1) % idx.len()];
                let n = p.len();
                let mut i = (a + 1) % n;
                while i != b {
                    let d = chord_distance(p.vertices[i], p.vertices[a], p.vertices[b]);
                    prop_assert!(d <= eps + 1e-9);
                    i = (i + 1) % n;
                }
            }
            let once = simplify_rdp(&p, eps);
            prop_assert_eq!(simplify_rdp(&once, eps), once);
        }
    }
}
