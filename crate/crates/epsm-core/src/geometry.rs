//! Planar geometry primitives shared across the metric modules.
//!
//! Everything operates in a bird's-eye 2D world frame with meters as the
//! unit. Polylines are ordered point lists; oriented boxes are rectangles
//! given by center, heading and extents.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// 2D vector / point in meters (or m/s when used as a velocity).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product; sign gives the turn direction.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    /// Unit vector, or zero when the input has no direction.
    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self.scale(1.0 / n)
        } else {
            Vec2::ZERO
        }
    }

    /// Left-hand normal (counter-clockwise quarter turn).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn from_heading(heading: f64) -> Vec2 {
        Vec2::new(heading.cos(), heading.sin())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        self.scale(rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = angle.rem_euclid(two_pi);
    if a >= std::f64::consts::PI {
        a -= two_pi;
    }
    a
}

/// Total arc length of a polyline.
pub fn arc_length(points: &[Vec2]) -> f64 {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Distance from a point to a line segment. The interior case uses the
/// cross-product form, which stays exact for collinear inputs.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = (p - a).dot(ab) / len2;
    if t <= 0.0 {
        p.distance(a)
    } else if t >= 1.0 {
        p.distance(b)
    } else {
        (p - a).cross(ab).abs() / len2.sqrt()
    }
}

/// Minimum distance from a point to a polyline (at least one point required).
pub fn point_polyline_distance(p: Vec2, line: &[Vec2]) -> f64 {
    match line {
        [] => f64::INFINITY,
        [only] => p.distance(*only),
        _ => line
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Arc-length position of the closest point on a polyline to `p`.
pub fn project_onto_polyline(p: Vec2, line: &[Vec2]) -> f64 {
    let mut best = f64::INFINITY;
    let mut best_s = 0.0;
    let mut s = 0.0;
    for w in line.windows(2) {
        let ab = w[1] - w[0];
        let len2 = ab.norm_squared();
        let seg_len = len2.sqrt();
        let t = if len2 == 0.0 {
            0.0
        } else {
            ((p - w[0]).dot(ab) / len2).clamp(0.0, 1.0)
        };
        let d = p.distance(w[0] + ab * t);
        if d < best {
            best = d;
            best_s = s + t * seg_len;
        }
        s += seg_len;
    }
    best_s
}

/// Point at a given arc-length position along a polyline (clamped to the ends).
pub fn point_at_arc(line: &[Vec2], s: f64) -> Vec2 {
    debug_assert!(!line.is_empty());
    if s <= 0.0 {
        return line[0];
    }
    let mut remaining = s;
    for w in line.windows(2) {
        let seg = w[0].distance(w[1]);
        if remaining <= seg {
            if seg == 0.0 {
                return w[0];
            }
            return w[0] + (w[1] - w[0]) * (remaining / seg);
        }
        remaining -= seg;
    }
    *line.last().unwrap()
}

/// Local tangent direction at an arc-length position.
pub fn tangent_at_arc(line: &[Vec2], s: f64) -> Vec2 {
    let mut remaining = s.max(0.0);
    for w in line.windows(2) {
        let seg = w[0].distance(w[1]);
        if remaining <= seg && seg > 0.0 {
            return (w[1] - w[0]).normalized();
        }
        remaining -= seg;
    }
    line.windows(2)
        .rev()
        .find(|w| w[0] != w[1])
        .map(|w| (w[1] - w[0]).normalized())
        .unwrap_or(Vec2::new(1.0, 0.0))
}

/// Resamples a polyline at a fixed arc-length spacing, always keeping the
/// first point. The last sample lands at the final multiple of `spacing`
/// that fits within the total arc length.
pub fn resample_polyline(line: &[Vec2], spacing: f64) -> Vec<Vec2> {
    assert!(spacing > 0.0, "spacing must be positive");
    if line.is_empty() {
        return Vec::new();
    }
    let total = arc_length(line);
    let n = (total / spacing).floor() as usize;
    (0..=n).map(|i| point_at_arc(line, i as f64 * spacing)).collect()
}

/// Rectangle with an orientation, used for bounding-box footprints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox {
    pub center: Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl OrientedBox {
    pub fn area(&self) -> f64 {
        self.length * self.width
    }

    /// Corner points in counter-clockwise order.
    pub fn corners(&self) -> [Vec2; 4] {
        let fwd = Vec2::from_heading(self.heading) * (self.length / 2.0);
        let left = Vec2::from_heading(self.heading).perp() * (self.width / 2.0);
        [
            self.center + fwd + left,
            self.center - fwd + left,
            self.center - fwd - left,
            self.center + fwd - left,
        ]
    }
}

/// Signed area of a simple polygon (positive for counter-clockwise).
pub fn polygon_area(points: &[Vec2]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..points.len() {
        let a = points[i];
        let b = points[(i + 1) % points.len()];
        acc += a.cross(b);
    }
    acc / 2.0
}

/// Clips a polygon against a convex clip polygon (Sutherland-Hodgman).
/// Both inputs must be wound counter-clockwise.
pub fn clip_convex(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut output: Vec<Vec2> = subject.to_vec();
    for i in 0..clip.len() {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % clip.len()];
        let edge = b - a;
        let input = std::mem::take(&mut output);
        let inside = |p: Vec2| edge.cross(p - a) >= 0.0;
        for j in 0..input.len() {
            let cur = input[j];
            let next = input[(j + 1) % input.len()];
            let cur_in = inside(cur);
            let next_in = inside(next);
            if cur_in {
                output.push(cur);
            }
            if cur_in != next_in {
                // intersection of segment (cur, next) with the clip edge line
                let d = next - cur;
                let denom = edge.cross(d);
                if denom.abs() > 0.0 {
                    let t = edge.cross(a - cur) / denom;
                    output.push(cur + d * t.clamp(0.0, 1.0));
                }
            }
        }
    }
    output
}

/// Area of the intersection of two oriented boxes.
pub fn box_intersection_area(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let clipped = clip_convex(&a.corners(), &b.corners());
    polygon_area(&clipped).abs()
}
