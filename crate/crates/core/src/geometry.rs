//! Planar vectors and oriented footprint rectangles.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point or displacement in the plane, in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing along `heading` (radians, counter-clockwise from +x).
    pub fn from_heading(heading: f64) -> Self {
        Self::new(heading.cos(), heading.sin())
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product; positive when `other` is to the left.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Vec2::ZERO
        }
    }

    /// Left-hand perpendicular.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn heading(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn lerp(self, other: Vec2, t: f64) -> Vec2 {
        self + (other - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Interpolates between two headings along the shorter arc.
pub fn lerp_angle(a: f64, b: f64, t: f64) -> f64 {
    a + wrap_angle(b - a) * t
}

/// Wraps an angle into (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r <= -std::f64::consts::PI {
        r += two_pi;
    } else if r > std::f64::consts::PI {
        r -= two_pi;
    }
    r
}

/// Axis-aligned bounding box, used as a cheap pre-filter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: Vec2::new(f64::INFINITY, f64::INFINITY),
        max: Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    pub fn union(self, o: Aabb) -> Aabb {
        Aabb {
            min: Vec2::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            max: Vec2::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        }
    }

    pub fn intersects(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }
}

/// Oriented rectangle footprint: `length` along `heading`, `width` across it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Obb {
    pub center: Vec2,
    pub heading: f64,
    pub length: f64,
    pub width: f64,
}

impl Obb {
    pub fn new(center: Vec2, heading: f64, length: f64, width: f64) -> Self {
        Self {
            center,
            heading,
            length,
            width,
        }
    }

    /// Same rectangle grown by `margin` on every side.
    pub fn inflated(self, margin: f64) -> Obb {
        Obb {
            length: self.length + 2.0 * margin,
            width: self.width + 2.0 * margin,
            ..self
        }
    }

    pub fn axes(&self) -> (Vec2, Vec2) {
        let u = Vec2::from_heading(self.heading);
        (u, u.perp())
    }

    /// Corners in counter-clockwise order starting front-left.
    pub fn corners(&self) -> [Vec2; 4] {
        let (u, v) = self.axes();
        let hl = u * (0.5 * self.length);
        let hw = v * (0.5 * self.width);
        let c = self.center;
        [c + hl + hw, c - hl + hw, c - hl - hw, c + hl - hw]
    }

    /// Front-center point.
    pub fn front(&self) -> Vec2 {
        self.center + Vec2::from_heading(self.heading) * (0.5 * self.length)
    }

    pub fn aabb(&self) -> Aabb {
        let (u, v) = self.axes();
        let ex = 0.5 * (self.length * u.x.abs() + self.width * v.x.abs());
        let ey = 0.5 * (self.length * u.y.abs() + self.width * v.y.abs());
        Aabb {
            min: Vec2::new(self.center.x - ex, self.center.y - ey),
            max: Vec2::new(self.center.x + ex, self.center.y + ey),
        }
    }

    /// Half extent of the rectangle projected onto unit `axis`.
    fn radius_on(&self, axis: Vec2) -> f64 {
        let (u, v) = self.axes();
        0.5 * (self.length * u.dot(axis).abs() + self.width * v.dot(axis).abs())
    }

    /// Separating-axis overlap test. Touching edges count as overlap.
    pub fn overlaps(&self, other: &Obb) -> bool {
        let d = other.center - self.center;
        let (u1, v1) = self.axes();
        let (u2, v2) = other.axes();
        for axis in [u1, v1, u2, v2] {
            let dist = d.dot(axis).abs();
            if dist > self.radius_on(axis) + other.radius_on(axis) {
                return false;
            }
        }
        true
    }

    /// Whether `p` lies inside (or on) the rectangle.
    pub fn contains(&self, p: Vec2) -> bool {
        let (u, v) = self.axes();
        let d = p - self.center;
        d.dot(u).abs() <= 0.5 * self.length + 1e-12 && d.dot(v).abs() <= 0.5 * self.width + 1e-12
    }
}
