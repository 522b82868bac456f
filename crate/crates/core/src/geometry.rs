//! Small planar geometry helpers shared by terrain, gauge and optimizer code.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn sub(self, other: Point) -> Point {
        Point::new(self.x - other.x, self.y - other.y)
    }

    pub fn add(self, other: Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point) -> f64 {
        self.sub(other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point::new(x, y)
    }
}

/// Closest point to `p` on segment `a`-`b`, with its parameter in [0, 1].
pub fn closest_on_segment(p: Point, a: Point, b: Point) -> (Point, f64) {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return (a, 0.0);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    (a.add(ab.scale(t)), t)
}

/// Simple polygon given by its vertices (implicitly closed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Self { vertices }
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(vec![
            Point::new(x0, y0),
            Point::new(x1, y0),
            Point::new(x1, y1),
            Point::new(x0, y1),
        ])
    }

    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|k| self.vertices[k].cross(self.vertices[(k + 1) % n]))
            .sum::<f64>()
            * 0.5
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }

    /// True when `p` is inside or on the boundary.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            let (q, _) = closest_on_segment(p, a, b);
            if q.dist(p) <= 1e-9 * (1.0 + p.norm()) {
                return true;
            }
            if (a.y > p.y) != (b.y > p.y) {
                let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// `p` itself if inside, else the nearest boundary point.
    pub fn project(&self, p: Point) -> Point {
        if self.contains(p) {
            return p;
        }
        self.edges()
            .map(|(a, b)| closest_on_segment(p, a, b).0)
            .min_by(|q1, q2| q1.dist(p).total_cmp(&q2.dist(p)))
            .unwrap_or(p)
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = Point::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Point::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        (lo, hi)
    }

    /// Checks vertex count, finiteness, positive area and that no two
    /// non-adjacent edges intersect.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.vertices.len();
        if n < 3 {
            return Err(format!("polygon needs at least 3 vertices, got {n}"));
        }
        if self.vertices.iter().any(|v| !v.is_finite()) {
            return Err("polygon has a non-finite vertex".into());
        }
        if self.area() <= 0.0 {
            return Err("polygon has zero area".into());
        }
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if !adjacent && segments_intersect(edges[i], edges[j]) {
                    return Err(format!("polygon edges {i} and {j} intersect"));
                }
            }
        }
        Ok(())
    }
}

fn segments_intersect((p1, p2): (Point, Point), (q1, q2): (Point, Point)) -> bool {
    let d1 = p2.sub(p1).cross(q1.sub(p1));
    let d2 = p2.sub(p1).cross(q2.sub(p1));
    let d3 = q2.sub(q1).cross(p1.sub(q1));
    let d4 = q2.sub(q1).cross(p2.sub(q1));
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_contains_and_projects() {
        let sq = Polygon::rectangle(0.0, 0.0, 2.0, 1.0);
        assert!(sq.validate().is_ok());
        assert_eq!(sq.area(), 2.0);
        assert!(sq.contains(Point::new(1.0, 0.5)));
        assert!(sq.contains(Point::new(2.0, 0.5)));
        assert!(!sq.contains(Point::new(3.0, 0.5)));
        assert_eq!(sq.project(Point::new(3.0, 0.5)), Point::new(2.0, 0.5));
        assert_eq!(sq.project(Point::new(-1.0, -1.0)), Point::new(0.0, 0.0));
    }

    #[test]
    fn bowtie_is_rejected() {
        let bowtie = Polygon::new(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ]);
        assert!(bowtie.validate().is_err());
        assert!(Polygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)])
            .validate()
            .is_err());
    }
}
