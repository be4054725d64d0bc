//! Planar primitives shared by the scenario, footprint and Voronoi code.

use serde::{Deserialize, Serialize};

/// A ground-plane point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned rectangle with lower-left corner `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn x_max(&self) -> f64 {
        self.x + self.w
    }

    pub fn y_max(&self) -> f64 {
        self.y + self.h
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> Point {
        Point::new(self.x + 0.5 * self.w, self.y + 0.5 * self.h)
    }

    /// Closed containment.
    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.x && p.x <= self.x_max() && p.y >= self.y && p.y <= self.y_max()
    }

    /// Area of the intersection of the interiors.
    pub fn overlap_area(&self, other: &Rect) -> f64 {
        let w = self.x_max().min(other.x_max()) - self.x.max(other.x);
        let h = self.y_max().min(other.y_max()) - self.y.max(other.y);
        if w > 0.0 && h > 0.0 {
            w * h
        } else {
            0.0
        }
    }

    pub fn corners(&self) -> [Point; 4] {
        [
            Point::new(self.x, self.y),
            Point::new(self.x_max(), self.y),
            Point::new(self.x_max(), self.y_max()),
            Point::new(self.x, self.y_max()),
        ]
    }
}

/// Shoelace area of a simple polygon (absolute value).
pub fn polygon_area(poly: &[Point]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for (i, p) in poly.iter().enumerate() {
        let q = &poly[(i + 1) % poly.len()];
        twice += p.x * q.y - q.x * p.y;
    }
    0.5 * twice.abs()
}

/// Clips a convex polygon to the half-plane `n · p <= c` (Sutherland–Hodgman, one edge).
pub fn clip_half_plane(poly: &[Point], nx: f64, ny: f64, c: f64) -> Vec<Point> {
    let side = |p: &Point| nx * p.x + ny * p.y - c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for (i, cur) in poly.iter().enumerate() {
        let next = &poly[(i + 1) % poly.len()];
        let (sc, sn) = (side(cur), side(next));
        if sc <= 0.0 {
            out.push(*cur);
        }
        if (sc < 0.0 && sn > 0.0) || (sc > 0.0 && sn < 0.0) {
            let t = sc / (sc - sn);
            out.push(Point::new(
                cur.x + t * (next.x - cur.x),
                cur.y + t * (next.y - cur.y),
            ));
        }
    }
    out
}

/// Intersection of a convex polygon with a rectangle.
pub fn clip_to_rect(poly: &[Point], rect: &Rect) -> Vec<Point> {
    let mut out = poly.to_vec();
    for (nx, ny, c) in [
        (-1.0, 0.0, -rect.x),
        (1.0, 0.0, rect.x_max()),
        (0.0, -1.0, -rect.y),
        (0.0, 1.0, rect.y_max()),
    ] {
        if out.is_empty() {
            break;
        }
        out = clip_half_plane(&out, nx, ny, c);
    }
    out
}
