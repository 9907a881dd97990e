use crate::bezier::TimedTrajectory;
use crate::geometry::{lerp_angle, Obb};

use super::{ManeuverCandidate, Prediction};

const BISECTION_STEPS: usize = 30;

/// Ego rectangle at sample `k` (clamped to the last sample).
pub fn footprint_at(traj: &TimedTrajectory, k: usize, length: f64, width: f64) -> Obb {
    let s = &traj.samples[k.min(traj.samples.len() - 1)];
    Obb::new(s.position, s.heading, length, width)
}

fn interpolated(traj: &TimedTrajectory, k: usize, frac: f64, length: f64, width: f64) -> Obb {
    let n = traj.samples.len();
    let a = &traj.samples[k.min(n - 1)];
    let b = &traj.samples[(k + 1).min(n - 1)];
    Obb::new(
        a.position.lerp(b.position, frac),
        lerp_angle(a.heading, b.heading, frac),
        length,
        width,
    )
}

/// Earliest time at which the candidate and the prediction footprints overlap, or
/// `f64::INFINITY` if they stay apart over the common horizon.
///
/// Poses are linearly interpolated between samples; intervals are sub-stepped so that
/// neither body moves more than a quarter of the smaller footprint dimension per step,
/// and the first overlapping step is refined by bisection.
pub fn time_to_collision(candidate: &ManeuverCandidate, prediction: &Prediction) -> f64 {
    let (el, ew) = (candidate.ego_length, candidate.ego_width);
    let (pl, pw) = (prediction.length, prediction.width);
    let a = &candidate.trajectory;
    let b = &prediction.trajectory;
    let n = a.samples.len().min(b.samples.len());
    if n == 0 {
        return f64::INFINITY;
    }
    let overlap_at = |k: usize, f: f64| interpolated(a, k, f, el, ew).overlaps(&interpolated(b, k, f, pl, pw));
    if overlap_at(0, 0.0) {
        return 0.0;
    }
    // quick reject: the two swept regions never come close
    let reach = 0.5 * (el.hypot(ew) + pl.hypot(pw));
    let min_dim = el.min(ew).min(pl).min(pw).max(0.05);
    for k in 0..n - 1 {
        let (a0, a1) = (&a.samples[k], &a.samples[k + 1]);
        let (b0, b1) = (&b.samples[k], &b.samples[k + 1]);
        let gap = a0.position.distance(b0.position);
        let moved = (a1.position - a0.position).norm() + (b1.position - b0.position).norm();
        if gap - moved > 2.0 * reach {
            continue;
        }
        let rel = ((a1.position - a0.position) - (b1.position - b0.position)).norm()
            + 0.5 * el * (a1.heading - a0.heading).abs()
            + 0.5 * pl * (b1.heading - b0.heading).abs();
        let m = ((rel / (0.25 * min_dim)).ceil() as usize).max(1);
        for j in 1..=m {
            let f = j as f64 / m as f64;
            if overlap_at(k, f) {
                let (mut lo, mut hi) = ((j - 1) as f64 / m as f64, f);
                for _ in 0..BISECTION_STEPS {
                    let mid = 0.5 * (lo + hi);
                    if overlap_at(k, mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return a0.t + hi * (a1.t - a0.t);
            }
        }
    }
    f64::INFINITY
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bezier::{sample_trajectory, CubicBezier, SpeedProfile};
    use crate::geometry::Vec2;
    use crate::identification::Maneuver;
    use crate::scenario::AgentKind;

    fn straight(from: Vec2, to: Vec2, v: f64) -> TimedTrajectory {
        if v == 0.0 {
            return TimedTrajectory::stationary(from, (to - from).heading(), 0.1, 4.0);
        }
        sample_trajectory(&CubicBezier::line(from, to), SpeedProfile::new(v, 0.0, v), 0.1, 4.0)
    }

    fn cand(traj: TimedTrajectory) -> ManeuverCandidate {
        ManeuverCandidate {
            maneuver: Maneuver::KeepLaneSameSpeed,
            v_begin: traj.first().speed,
            v_end: traj.last().speed,
            trajectory: traj,
            target_lane: "l".into(),
            feasible: true,
            infeasibility: None,
            ego_length: 4.0,
            ego_width: 2.0,
            commit_duration: None,
        }
    }

    fn pred(traj: TimedTrajectory) -> Prediction {
        Prediction {
            agent_id: "o".into(),
            kind: AgentKind::Vehicle,
            length: 4.0,
            width: 2.0,
            horizon: traj.duration(),
            trajectory: traj,
        }
    }

    #[test]
    fn closing_on_stationary_object() {
        // gap between bumpers 20 m at 10 m/s closing
        let c = cand(straight(Vec2::ZERO, Vec2::new(100.0, 0.0), 10.0));
        let p = pred(straight(Vec2::new(24.0, 0.0), Vec2::new(30.0, 0.0), 0.0));
        let t = time_to_collision(&c, &p);
        assert!((t - 2.0).abs() < 1e-6, "{t}");
    }

    #[test]
    fn parallel_lanes_never_collide() {
        let c = cand(straight(Vec2::ZERO, Vec2::new(100.0, 0.0), 10.0));
        let p = pred(straight(Vec2::new(10.0, 3.5), Vec2::new(100.0, 3.5), 5.0));
        assert_eq!(time_to_collision(&c, &p), f64::INFINITY);
    }

    #[test]
    fn immediate_overlap_is_zero() {
        let c = cand(straight(Vec2::ZERO, Vec2::new(100.0, 0.0), 10.0));
        let p = pred(straight(Vec2::new(2.0, 0.5), Vec2::new(3.0, 0.5), 0.0));
        assert_eq!(time_to_collision(&c, &p), 0.0);
    }

    #[test]
    fn head_on_meets_in_middle() {
        let c = cand(straight(Vec2::ZERO, Vec2::new(100.0, 0.0), 10.0));
        let p = pred(straight(Vec2::new(84.0, 0.0), Vec2::new(0.0, 0.0), 10.0));
        // gap 80 m at 20 m/s closing
        assert!((time_to_collision(&c, &p) - 4.0).abs() < 1e-6);
    }
}
