//! Planar points and polygons in raster coordinates (origin top-left, y down).

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    /// z-component of the 2-D cross product.
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    pub fn cast<U: Scalar>(self) -> Point<U> {
        Point::new(U::lit(self.x.as_f64()), U::lit(self.y.as_f64()))
    }
}

impl<T: Scalar> Add for Point<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Scalar> Sub for Point<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Scalar> Mul<T> for Point<T> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// An ordered vertex list, implicitly closed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Polygon<T> {
    pub vertices: Vec<Point<T>>,
}

impl<T: Scalar> Polygon<T> {
    pub fn new(vertices: Vec<Point<T>>) -> Self {
        Self { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> T {
        polygon_area(&self.vertices)
    }

    pub fn perimeter(&self) -> T {
        perimeter(&self.vertices, true)
    }

    pub fn centroid(&self) -> Point<T> {
        vertex_mean(&self.vertices)
    }
}

/// Sum of segment lengths; `closed` adds the last-to-first segment.
pub fn perimeter<T: Scalar>(points: &[Point<T>], closed: bool) -> T {
    let mut total: T = points.windows(2).map(|w| w[0].dist(w[1])).sum();
    if closed && points.len() > 2 {
        total = total + points[points.len() - 1].dist(points[0]);
    }
    total
}

/// Absolute shoelace area.
pub fn polygon_area<T: Scalar>(points: &[Point<T>]) -> T {
    signed_area(points).abs()
}

/// Shoelace area, positive when the vertices run clockwise on screen
/// (counter-clockwise in a y-up frame).
pub fn signed_area<T: Scalar>(points: &[Point<T>]) -> T {
    if points.len() < 3 {
        return T::zero();
    }
    let n = points.len();
    let twice: T = (0..n).map(|i| points[i].cross(points[(i + 1) % n])).sum();
    twice * T::lit(0.5)
}

pub fn vertex_mean<T: Scalar>(points: &[Point<T>]) -> Point<T> {
    if points.is_empty() {
        return Point::new(T::zero(), T::zero());
    }
    let n = T::from_usize_lossy(points.len());
    let sx: T = points.iter().map(|p| p.x).sum();
    let sy: T = points.iter().map(|p| p.y).sum();
    Point::new(sx / n, sy / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(raw: &[(f64, f64)]) -> Vec<Point<f64>> {
        raw.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    #[test]
    fn unit_square_perimeter_and_area() {
        let sq = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(perimeter(&sq, true), 4.0);
        assert_eq!(polygon_area(&sq), 1.0);
    }

    #[test]
    fn open_segment_is_hypotenuse() {
        assert_eq!(perimeter(&pts(&[(0.0, 0.0), (3.0, 4.0)]), false), 5.0);
    }

    #[test]
    fn hexagon_perimeter() {
        let hex: Vec<Point<f64>> = (0..6)
            .map(|i| {
                let a = std::f64::consts::PI / 3.0 * i as f64;
                Point::new(2.0 * a.cos(), 2.0 * a.sin())
            })
            .collect();
        assert!((perimeter(&hex, true) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn triangle_area_ignores_orientation() {
        let mut tri = pts(&[(0.0, 0.0), (4.0, 0.0), (0.0, 3.0)]);
        assert_eq!(polygon_area(&tri), 6.0);
        tri.reverse();
        assert_eq!(polygon_area(&tri), 6.0);
    }

    #[test]
    fn f32_works_too() {
        let sq: Vec<Point<f32>> = vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
        ];
        assert_eq!(polygon_area(&sq), 4.0f32);
    }
}
