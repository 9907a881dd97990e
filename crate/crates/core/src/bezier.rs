//! Cubic Bézier primitives and timed sampling of paths built from them.

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::geometry::Vec2;

/// Arc-length convergence tolerance for adaptive subdivision (m).
pub const ARC_LENGTH_TOL: f64 = 1e-4;

/// Samples per segment in the arc-length lookup table.
const TABLE_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicBezier {
    pub p0: Vec2,
    pub p1: Vec2,
    pub p2: Vec2,
    pub p3: Vec2,
}

fn check_domain(u: f64) -> Result<(), GeometryError> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(GeometryError::OutOfDomain(u))
    }
}

impl CubicBezier {
    pub const fn new(p0: Vec2, p1: Vec2, p2: Vec2, p3: Vec2) -> Self {
        Self { p0, p1, p2, p3 }
    }

    /// Straight segment with control points at thirds, so `u` is proportional to arc length.
    pub fn line(a: Vec2, b: Vec2) -> Self {
        Self::new(a, a.lerp(b, 1.0 / 3.0), a.lerp(b, 2.0 / 3.0), b)
    }

    pub fn is_finite(&self) -> bool {
        self.control_points().iter().all(|p| p.is_finite())
    }

    pub fn control_points(&self) -> [Vec2; 4] {
        [self.p0, self.p1, self.p2, self.p3]
    }

    pub fn eval(&self, u: f64) -> Result<Vec2, GeometryError> {
        check_domain(u)?;
        Ok(self.eval_unchecked(u))
    }

    pub(crate) fn eval_unchecked(&self, u: f64) -> Vec2 {
        let v = 1.0 - u;
        let b0 = v * v * v;
        let b1 = 3.0 * v * v * u;
        let b2 = 3.0 * v * u * u;
        let b3 = u * u * u;
        self.p0 * b0 + self.p1 * b1 + self.p2 * b2 + self.p3 * b3
    }

    /// d(position)/du.
    pub fn derivative(&self, u: f64) -> Result<Vec2, GeometryError> {
        check_domain(u)?;
        Ok(self.derivative_unchecked(u))
    }

    pub(crate) fn derivative_unchecked(&self, u: f64) -> Vec2 {
        let v = 1.0 - u;
        (self.p1 - self.p0) * (3.0 * v * v) + (self.p2 - self.p1) * (6.0 * v * u) + (self.p3 - self.p2) * (3.0 * u * u)
    }

    pub(crate) fn second_derivative_unchecked(&self, u: f64) -> Vec2 {
        let a = self.p2 - self.p1 * 2.0 + self.p0;
        let b = self.p3 - self.p2 * 2.0 + self.p1;
        a * (6.0 * (1.0 - u)) + b * (6.0 * u)
    }

    /// Signed curvature (1/m), left turns positive. Zero where the tangent vanishes.
    pub fn curvature(&self, u: f64) -> f64 {
        let d1 = self.derivative_unchecked(u);
        let d2 = self.second_derivative_unchecked(u);
        let n = d1.norm();
        if n < 1e-12 {
            0.0
        } else {
            d1.cross(d2) / (n * n * n)
        }
    }

    /// Splits at `u` (de Casteljau).
    pub fn split(&self, u: f64) -> (CubicBezier, CubicBezier) {
        let a = self.p0.lerp(self.p1, u);
        let b = self.p1.lerp(self.p2, u);
        let c = self.p2.lerp(self.p3, u);
        let d = a.lerp(b, u);
        let e = b.lerp(c, u);
        let f = d.lerp(e, u);
        (CubicBezier::new(self.p0, a, d, f), CubicBezier::new(f, e, c, self.p3))
    }

    /// Arc length by adaptive subdivision until control polygon and chord agree
    /// within [`ARC_LENGTH_TOL`].
    pub fn arc_length(&self) -> f64 {
        self.arc_length_within(ARC_LENGTH_TOL, 0)
    }

    fn arc_length_within(&self, tol: f64, depth: u32) -> f64 {
        let chord = self.p0.distance(self.p3);
        let poly = self.p0.distance(self.p1) + self.p1.distance(self.p2) + self.p2.distance(self.p3);
        if poly - chord <= tol || depth >= 24 {
            return 0.5 * (chord + poly);
        }
        let (l, r) = self.split(0.5);
        l.arc_length_within(0.5 * tol, depth + 1) + r.arc_length_within(0.5 * tol, depth + 1)
    }
}

/// Chain of cubic segments parameterized by arc length.
#[derive(Clone, Debug)]
pub struct Path {
    segments: Vec<CubicBezier>,
    /// Per segment: `(u, s_local)` samples of the cumulative length.
    tables: Vec<Vec<(f64, f64)>>,
    starts: Vec<f64>,
    total: f64,
}

impl Path {
    pub fn new(segments: Vec<CubicBezier>) -> Self {
        let mut tables = Vec::with_capacity(segments.len());
        let mut starts = Vec::with_capacity(segments.len());
        let mut total = 0.0;
        for seg in &segments {
            starts.push(total);
            let mut table = Vec::with_capacity(TABLE_SAMPLES + 1);
            let mut prev = seg.p0;
            let mut acc = 0.0;
            table.push((0.0, 0.0));
            for i in 1..=TABLE_SAMPLES {
                let u = i as f64 / TABLE_SAMPLES as f64;
                let p = seg.eval_unchecked(u);
                acc += p.distance(prev);
                prev = p;
                table.push((u, acc));
            }
            total += acc;
            tables.push(table);
        }
        Path {
            segments,
            tables,
            starts,
            total,
        }
    }

    pub fn length(&self) -> f64 {
        self.total
    }

    pub fn segments(&self) -> &[CubicBezier] {
        &self.segments
    }

    /// Segment index and curve parameter at arc length `s` (clamped to the path).
    fn locate(&self, s: f64) -> (usize, f64) {
        let s = s.clamp(0.0, self.total);
        let idx = match self.starts.partition_point(|&st| st <= s) {
            0 => 0,
            n => n - 1,
        };
        let local = s - self.starts[idx];
        let table = &self.tables[idx];
        let j = table.partition_point(|&(_, ls)| ls < local).clamp(1, table.len() - 1);
        let (u0, s0) = table[j - 1];
        let (u1, s1) = table[j];
        let u = if s1 > s0 { u0 + (u1 - u0) * (local - s0) / (s1 - s0) } else { u1 };
        (idx, u.clamp(0.0, 1.0))
    }

    pub fn point_at(&self, s: f64) -> Vec2 {
        let (i, u) = self.locate(s);
        self.segments[i].eval_unchecked(u)
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        let (i, u) = self.locate(s);
        let d = self.segments[i].derivative_unchecked(u);
        if d.norm() > 1e-12 {
            return d.heading();
        }
        let seg = &self.segments[i];
        let chord = seg.p3 - seg.p0;
        if chord.norm() > 1e-12 {
            chord.heading()
        } else {
            0.0
        }
    }

    pub fn curvature_at(&self, s: f64) -> f64 {
        let (i, u) = self.locate(s);
        self.segments[i].curvature(u)
    }
}

/// Longitudinal profile: constant acceleration from `v_start`, with speed clamped
/// to `[v_floor, v_cap]`. A floor above `v_start` is lowered to `v_start`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedProfile {
    pub v_start: f64,
    pub accel: f64,
    pub v_cap: f64,
    pub v_floor: f64,
}

impl SpeedProfile {
    pub fn new(v_start: f64, accel: f64, v_cap: f64) -> Self {
        Self {
            v_start,
            accel,
            v_cap,
            v_floor: 0.0,
        }
    }

    pub fn with_floor(mut self, v_floor: f64) -> Self {
        self.v_floor = v_floor;
        self
    }
}

/// Advances a clamped constant-acceleration motion by `dt`; returns (distance, new speed).
pub(crate) fn advance_speed(v: f64, a: f64, lo: f64, hi: f64, dt: f64) -> (f64, f64) {
    let bound = if a > 0.0 && v < hi {
        Some(hi)
    } else if a < 0.0 && v > lo {
        Some(lo)
    } else {
        None
    };
    match bound {
        None => (v * dt, v),
        Some(b) => {
            let t_hit = (b - v) / a;
            if t_hit >= dt {
                (v * dt + 0.5 * a * dt * dt, v + a * dt)
            } else {
                (v * t_hit + 0.5 * a * t_hit * t_hit + b * (dt - t_hit), b)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub position: Vec2,
    pub heading: f64,
    pub speed: f64,
    /// Effective longitudinal acceleration over the tick that starts at this sample.
    pub accel_lon: f64,
    pub accel_lat: f64,
    /// Arc length travelled since the first sample.
    pub s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimedTrajectory {
    pub samples: Vec<TrajectorySample>,
    pub dt: f64,
}

impl TimedTrajectory {
    /// A single pose held for `horizon` seconds.
    pub fn stationary(position: Vec2, heading: f64, dt: f64, horizon: f64) -> Self {
        let n = (horizon / dt).round() as usize;
        let samples = (0..=n)
            .map(|k| TrajectorySample {
                t: k as f64 * dt,
                position,
                heading,
                speed: 0.0,
                accel_lon: 0.0,
                accel_lat: 0.0,
                s: 0.0,
            })
            .collect();
        TimedTrajectory { samples, dt }
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    pub fn last(&self) -> &TrajectorySample {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn first(&self) -> &TrajectorySample {
        &self.samples[0]
    }

    pub fn distance(&self) -> f64 {
        self.last().s
    }

    /// Remaining part starting at sample `from`, re-timed to start at 0.
    pub fn tail(&self, from: usize) -> TimedTrajectory {
        let from = from.min(self.samples.len().saturating_sub(1));
        let t0 = self.samples[from].t;
        let s0 = self.samples[from].s;
        let samples = self.samples[from..]
            .iter()
            .map(|s| TrajectorySample {
                t: s.t - t0,
                s: s.s - s0,
                ..*s
            })
            .collect();
        TimedTrajectory { samples, dt: self.dt }
    }
}

/// Samples `path` on a `dt` grid. Stops at `horizon` or when the path is exhausted.
pub fn sample_path(path: &Path, profile: SpeedProfile, dt: f64, horizon: f64) -> TimedTrajectory {
    let total = path.length();
    if total <= 1e-9 {
        let p = path.segments().first().map_or(Vec2::ZERO, |s| s.p0);
        return TimedTrajectory::stationary(p, path.heading_at(0.0), dt, horizon);
    }
    let n = (horizon / dt).round() as usize;
    let lo = profile.v_floor.min(profile.v_start).max(0.0);
    let hi = profile.v_cap.max(profile.v_start);
    let mut v = profile.v_start.max(0.0);
    let mut s = 0.0;
    let mut samples = Vec::with_capacity(n + 1);
    let make = |t: f64, s: f64, v: f64| TrajectorySample {
        t,
        position: path.point_at(s),
        heading: path.heading_at(s),
        speed: v,
        accel_lon: 0.0,
        accel_lat: path.curvature_at(s) * v * v,
        s,
    };
    samples.push(make(0.0, 0.0, v));
    for k in 1..=n {
        let (ds, v_next) = advance_speed(v, profile.accel, lo, hi, dt);
        samples[k - 1].accel_lon = (v_next - v) / dt;
        s += ds;
        v = v_next;
        let exhausted = s >= total - 1e-9;
        if exhausted {
            s = total;
        }
        samples.push(make(k as f64 * dt, s, v));
        if exhausted {
            break;
        }
    }
    let m = samples.len();
    if m >= 2 {
        samples[m - 1].accel_lon = samples[m - 2].accel_lon;
    }
    TimedTrajectory { samples, dt }
}

/// Samples a single curve; see [`sample_path`].
pub fn sample_trajectory(curve: &CubicBezier, profile: SpeedProfile, dt: f64, horizon: f64) -> TimedTrajectory {
    sample_path(&Path::new(vec![*curve]), profile, dt, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn square() -> CubicBezier {
        CubicBezier::new(v(0.0, 0.0), v(0.0, 1.0), v(1.0, 1.0), v(1.0, 0.0))
    }

    #[test]
    fn endpoints_interpolate() {
        let c = square();
        assert_eq!(c.eval(0.0).unwrap(), c.p0);
        assert_eq!(c.eval(1.0).unwrap(), c.p3);
    }

    #[test]
    fn collinear_curve_is_linear() {
        let c = CubicBezier::new(v(0.0, 0.0), v(1.0, 0.0), v(2.0, 0.0), v(3.0, 0.0));
        let p = c.eval(0.5).unwrap();
        assert!((p.x - 1.5).abs() < 1e-15 && p.y == 0.0);
    }

    #[test]
    fn unit_square_midpoint() {
        let p = square().eval(0.5).unwrap();
        assert!((p.x - 0.5).abs() < 1e-15);
        assert!((p.y - 0.75).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        assert_eq!(square().eval(1.5), Err(GeometryError::OutOfDomain(1.5)));
        assert!(square().derivative(-0.1).is_err());
    }

    #[test]
    fn endpoint_derivatives() {
        let c = square();
        assert_eq!(c.derivative(0.0).unwrap(), (c.p1 - c.p0) * 3.0);
        assert_eq!(c.derivative(1.0).unwrap(), (c.p3 - c.p2) * 3.0);
        let line = CubicBezier::new(v(0.0, 0.0), v(1.0, 1.0), v(1.5, 1.5), v(4.0, 4.0));
        for i in 0..=10 {
            let d = line.derivative(i as f64 / 10.0).unwrap();
            assert!(d.cross(v(1.0, 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn arc_length_cases() {
        assert!((CubicBezier::line(v(0.0, 0.0), v(3.0, 0.0)).arc_length() - 3.0).abs() < 1e-3);
        let p = v(2.0, 2.0);
        assert_eq!(CubicBezier::new(p, p, p, p).arc_length(), 0.0);
        // dense polyline oracle
        let c = square();
        let n = 100_000;
        let mut oracle = 0.0;
        let mut prev = c.p0;
        for i in 1..=n {
            let q = c.eval(i as f64 / n as f64).unwrap();
            oracle += q.distance(prev);
            prev = q;
        }
        assert!((c.arc_length() - oracle).abs() < 1e-3, "{} vs {}", c.arc_length(), oracle);
    }

    #[test]
    fn constant_speed_straight_line() {
        let c = CubicBezier::line(v(0.0, 0.0), v(40.0, 0.0));
        let tr = sample_trajectory(&c, SpeedProfile::new(10.0, 0.0, 10.0), 0.1, 10.0);
        assert_eq!(tr.samples.len(), 41);
        assert!((tr.duration() - 4.0).abs() < 1e-9);
        for (k, smp) in tr.samples.iter().enumerate() {
            assert!((smp.position.x - k as f64).abs() < 1e-6, "{k}: {:?}", smp.position);
        }
    }

    #[test]
    fn deceleration_stops_at_zero() {
        let c = CubicBezier::line(v(0.0, 0.0), v(100.0, 0.0));
        let tr = sample_trajectory(&c, SpeedProfile::new(2.0, -1.5, 2.0), 0.1, 4.0);
        for smp in &tr.samples {
            let expected = (2.0 - 1.5 * smp.t).max(0.0);
            assert!((smp.speed - expected).abs() < 1e-9, "t={} v={}", smp.t, smp.speed);
        }
        // closed-form stopping distance v^2 / 2a
        assert!((tr.distance() - 4.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn lateral_acceleration_from_curvature() {
        // cubic quarter-circle approximant: curvature within about 3% of 1/50
        let r = 50.0;
        let k = 0.552_284_749_8 * r;
        let c = CubicBezier::new(v(0.0, 0.0), v(k, 0.0), v(r, r - k), v(r, r));
        let tr = sample_trajectory(&c, SpeedProfile::new(15.0, 0.0, 15.0), 0.1, 4.0);
        for smp in &tr.samples {
            assert!((smp.accel_lat - 4.5).abs() < 0.15, "{}", smp.accel_lat);
        }
    }

    #[test]
    fn floor_holds_speed() {
        let c = CubicBezier::line(v(0.0, 0.0), v(200.0, 0.0));
        let tr = sample_trajectory(&c, SpeedProfile::new(10.0, -1.5, 10.0).with_floor(7.0), 0.1, 4.0);
        assert!((tr.last().speed - 7.0).abs() < 1e-12);
        assert!(tr.samples.iter().all(|s| s.speed >= 7.0 - 1e-12));
    }

    #[test]
    fn tail_retimes() {
        let c = CubicBezier::line(v(0.0, 0.0), v(200.0, 0.0));
        let tr = sample_trajectory(&c, SpeedProfile::new(10.0, 0.0, 10.0), 0.1, 4.0);
        let tail = tr.tail(5);
        assert_eq!(tail.samples.len(), 36);
        assert_eq!(tail.first().t, 0.0);
        assert_eq!(tail.first().s, 0.0);
    }
}
