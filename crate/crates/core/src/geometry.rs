//! Areas of half-plane cuts of the unit square.
//!
//! Reservation prices are uniform on `[0, 1]²`, so a demand probability is
//! the area of a convex region of the square. Regions here are intersections
//! of half-planes, clipped one at a time (Sutherland–Hodgman) and measured
//! with the shoelace formula.

pub type Point = (f64, f64);

/// The closed half-plane `a·x + b·y ≤ c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl HalfPlane {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    fn signed_excess(&self, p: Point) -> f64 {
        self.a * p.0 + self.b * p.1 - self.c
    }

    fn crossing(&self, from: Point, to: Point) -> Point {
        let d0 = self.signed_excess(from);
        let d1 = self.signed_excess(to);
        let t = d0 / (d0 - d1);
        (from.0 + t * (to.0 - from.0), from.1 + t * (to.1 - from.1))
    }
}

pub const UNIT_SQUARE: [Point; 4] = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];

/// Clips a convex polygon (counter-clockwise vertex list) to a half-plane.
pub fn clip(polygon: &[Point], plane: &HalfPlane) -> Vec<Point> {
    let mut out = Vec::with_capacity(polygon.len() + 1);
    let n = polygon.len();
    for i in 0..n {
        let cur = polygon[i];
        let next = polygon[(i + 1) % n];
        let cur_in = plane.signed_excess(cur) <= 0.0;
        let next_in = plane.signed_excess(next) <= 0.0;
        match (cur_in, next_in) {
            (true, true) => out.push(next),
            (true, false) => out.push(plane.crossing(cur, next)),
            (false, true) => {
                out.push(plane.crossing(cur, next));
                out.push(next);
            }
            (false, false) => {}
        }
    }
    out
}

/// Shoelace area (absolute value).
pub fn polygon_area(polygon: &[Point]) -> f64 {
    if polygon.len() < 3 {
        return 0.0;
    }
    let n = polygon.len();
    let twice: f64 = (0..n)
        .map(|i| {
            let (x0, y0) = polygon[i];
            let (x1, y1) = polygon[(i + 1) % n];
            x0 * y1 - x1 * y0
        })
        .sum();
    0.5 * twice.abs()
}

/// Area of the unit square that satisfies every half-plane.
pub fn unit_square_area_within(planes: &[HalfPlane]) -> f64 {
    let mut poly = UNIT_SQUARE.to_vec();
    for plane in planes {
        poly = clip(&poly, plane);
        if poly.is_empty() {
            return 0.0;
        }
    }
    polygon_area(&poly).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_and_triangle() {
        assert_eq!(unit_square_area_within(&[]), 1.0);
        let diag = HalfPlane::new(1.0, 1.0, 1.0);
        assert!((unit_square_area_within(&[diag]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn plane_missing_the_square() {
        assert_eq!(
            unit_square_area_within(&[HalfPlane::new(1.0, 1.0, -0.1)]),
            0.0
        );
        assert_eq!(
            unit_square_area_within(&[HalfPlane::new(1.0, 1.0, 3.0)]),
            1.0
        );
    }

    #[test]
    fn trapezoid_when_line_exits_the_square() {
        // x + y ≤ 1.4 removes a corner triangle of area 0.5·0.6²
        let area = unit_square_area_within(&[HalfPlane::new(1.0, 1.0, 1.4)]);
        assert!((area - (1.0 - 0.18)).abs() < 1e-14);
    }

    #[test]
    fn rectangle_cut() {
        let planes = [HalfPlane::new(1.0, 0.0, 0.3), HalfPlane::new(0.0, 1.0, 0.5)];
        assert!((unit_square_area_within(&planes) - 0.15).abs() < 1e-15);
    }
}
