//! Deterministic geometric framing critic and the servo loop built on it.

use std::convert::Infallible;

use serde::{Deserialize, Serialize};

use super::{
    angle_pitch_deg, apply_servo_with, union_box, CameraState, FramingSpec, ProjectionMode, ServoCommand, ServoOp,
    ServoSteps,
};
use crate::geometry::{Aabb, Vec3};
use crate::memory::ShotDistance;
use crate::reflection::{
    json_digest, run_reflection, ExhaustionMode, Feedback, ReflectionConfig, ReflectionPolicy, ReflectionStatus,
};

/// Allowed offset of the projected target center, as a fraction of the half frame.
pub const CENTROID_TOLERANCE: f64 = 0.15;
pub const PITCH_TOLERANCE_DEG: f64 = 10.0;
const NEAR_PLANE: f64 = 1e-3;
const FRAME_SLACK: f64 = 1e-9;

const PENALTY_OUTSIDE: u8 = 4;
const PENALTY_CENTROID: u8 = 2;
const PENALTY_COVERAGE: u8 = 2;
const PENALTY_PITCH: u8 = 1;
const SATISFIED_SCORE: u8 = 8;

/// Frame-height coverage band `[lo, hi)` for a distance class.
pub fn coverage_band(distance: ShotDistance) -> (f64, f64) {
    match distance {
        ShotDistance::CloseUp => (0.60, f64::INFINITY),
        ShotDistance::Medium => (0.30, 0.60),
        ShotDistance::Long => (0.0, 0.30),
    }
}

fn band_gap(c: f64, (lo, hi): (f64, f64)) -> f64 {
    if c < lo {
        lo - c
    } else if c >= hi {
        c - hi + 1e-6
    } else {
        0.0
    }
}

/// Normalized image coordinates in [-1, 1] across the frame, or `None` for
/// points at or behind the near plane.
pub fn project(state: &CameraState, p: Vec3) -> Option<[f64; 2]> {
    let q = state.to_camera(p);
    let depth = -q.z;
    if depth <= NEAR_PLANE {
        return None;
    }
    let t = state.intrinsics.tan_half_fov();
    let half_h = match state.intrinsics.mode {
        ProjectionMode::Perspective => depth * t,
        ProjectionMode::Orthographic => state.distance * t,
    };
    Some([q.x / (half_h * state.intrinsics.aspect()), q.y / half_h])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramingReport {
    /// 1..=10
    pub score: u8,
    pub suggestion: Option<ServoCommand>,
    pub satisfied: bool,
    pub corners_outside: usize,
    pub centroid_offset: Option<f64>,
    pub coverage: Option<f64>,
    pub pitch_error_deg: f64,
    /// Continuous badness used to break ties between equal scores.
    pub cost: f64,
}

struct Assessment {
    score: u8,
    cost: f64,
    corners_outside: usize,
    centroid_offset: Option<f64>,
    coverage: Option<f64>,
    pitch_error_deg: f64,
}

impl Assessment {
    fn better_than(&self, o: &Assessment) -> bool {
        self.score > o.score || (self.score == o.score && self.cost < o.cost - 1e-12)
    }
}

fn assess(state: &CameraState, targets: &[Aabb], spec: &FramingSpec) -> Assessment {
    let pitch_error_deg = (state.pitch_deg() - angle_pitch_deg(spec.angle)).abs();
    let Some(bounds) = union_box(targets) else {
        return Assessment {
            score: 1,
            cost: f64::INFINITY,
            corners_outside: 0,
            centroid_offset: None,
            coverage: None,
            pitch_error_deg,
        };
    };
    let corners: Vec<Vec3> = targets.iter().flat_map(|b| b.corners()).collect();
    let projected: Vec<Option<[f64; 2]>> = corners.iter().map(|c| project(state, *c)).collect();

    let mut outside = 0;
    let mut cost = 0.0;
    for (p, c) in projected.iter().zip(&corners) {
        match p {
            None => {
                outside += 1;
                // grows with how far behind the near plane the corner is, bounded
                let behind = state.to_camera(*c).z + NEAR_PLANE;
                cost += 10.0 + behind / (1.0 + behind);
            }
            Some([x, y]) => {
                let spill = (x.abs() - 1.0).max(0.0) + (y.abs() - 1.0).max(0.0);
                if spill > FRAME_SLACK {
                    outside += 1;
                }
                cost += spill;
            }
        }
    }
    let centroid_offset = project(state, bounds.center()).map(|[x, y]| x.abs().max(y.abs()));
    cost += centroid_offset.map_or(10.0, |o| (o - CENTROID_TOLERANCE).max(0.0));

    let coverage = if projected.iter().all(Option::is_some) {
        let ys = projected.iter().flatten().map(|p| p[1]);
        let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
        Some((hi - lo) / 2.0)
    } else {
        None
    };
    let gap = coverage.map_or(1.0, |c| band_gap(c, coverage_band(spec.distance)));
    cost += gap;
    cost += (pitch_error_deg - PITCH_TOLERANCE_DEG).max(0.0) / 90.0;

    let score = if projected.iter().all(Option::is_none) {
        1
    } else {
        let mut penalty = 0;
        if outside > 0 {
            penalty += PENALTY_OUTSIDE;
        }
        if centroid_offset.is_none_or(|o| o > CENTROID_TOLERANCE) {
            penalty += PENALTY_CENTROID;
        }
        if gap > 0.0 {
            penalty += PENALTY_COVERAGE;
        }
        if pitch_error_deg > PITCH_TOLERANCE_DEG {
            penalty += PENALTY_PITCH;
        }
        10u8.saturating_sub(penalty).max(1)
    };
    Assessment { score, cost, corners_outside: outside, centroid_offset, coverage, pitch_error_deg }
}

/// Anything that can judge a framing and suggest one command.
pub trait FramingCritic {
    fn evaluate(&self, state: &CameraState, targets: &[Aabb], spec: &FramingSpec) -> FramingReport;
}

/// Scores by projecting the target boxes; suggests the single step whose
/// simulated result scores best (ties by command order).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GeometricCritic {
    pub steps: ServoSteps,
}

impl FramingCritic for GeometricCritic {
    fn evaluate(&self, state: &CameraState, targets: &[Aabb], spec: &FramingSpec) -> FramingReport {
        let now = assess(state, targets, spec);
        let mut best: Option<(ServoOp, Assessment)> = None;
        if now.score < SATISFIED_SCORE && !targets.is_empty() {
            for op in ServoOp::ALL {
                let next = apply_servo_with(state, op.into(), &self.steps);
                let a = assess(&next, targets, spec);
                let improves = a.better_than(best.as_ref().map_or(&now, |(_, b)| b));
                if improves {
                    best = Some((op, a));
                }
            }
        }
        FramingReport {
            score: now.score,
            suggestion: best.map(|(op, _)| ServoCommand::new(op)),
            satisfied: now.score >= SATISFIED_SCORE,
            corners_outside: now.corners_outside,
            centroid_offset: now.centroid_offset,
            coverage: now.coverage,
            pitch_error_deg: now.pitch_error_deg,
            cost: now.cost,
        }
    }
}

pub fn framing_score(state: &CameraState, targets: &[Aabb], spec: &FramingSpec) -> FramingReport {
    GeometricCritic::default().evaluate(state, targets, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServoStep {
    pub turn: usize,
    pub score: u8,
    /// Undo of the previous command, applied because it lowered the score.
    pub reverted: Option<ServoCommand>,
    pub command: Option<ServoCommand>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServoOutcome {
    pub final_state: CameraState,
    pub best_score: u8,
    pub status: ReflectionStatus,
    pub turns_used: usize,
    pub satisfied: bool,
    pub steps: Vec<ServoStep>,
}

struct ServoPolicy<'a, C> {
    critic: &'a C,
    targets: &'a [Aabb],
    spec: &'a FramingSpec,
    steps: ServoSteps,
    last: Option<(ServoCommand, f64)>,
    log: Vec<(Option<ServoCommand>, Option<ServoCommand>)>,
}

impl<C: FramingCritic> ReflectionPolicy for ServoPolicy<'_, C> {
    type Context = CameraState;
    type Output = CameraState;
    type Critique = FramingReport;
    type Error = Infallible;

    fn generate(&mut self, initial: &CameraState) -> Result<CameraState, Infallible> {
        Ok(*initial)
    }

    fn score(&mut self, s: &CameraState, _: &CameraState) -> Result<Feedback<FramingReport>, Infallible> {
        let r = self.critic.evaluate(s, self.targets, self.spec);
        Ok(Feedback::new(r.score as f64, r))
    }

    fn refine(&mut self, s: &CameraState, fb: &Feedback<FramingReport>, _: &CameraState) -> Result<CameraState, Infallible> {
        let mut state = *s;
        let mut suggestion = fb.critique.suggestion;
        let mut base = fb.score;
        let mut reverted = None;
        if let Some((cmd, before)) = self.last.take() {
            if fb.score < before {
                let undo = cmd.opposite();
                state = apply_servo_with(&state, undo, &self.steps);
                reverted = Some(undo);
                let r = self.critic.evaluate(&state, self.targets, self.spec);
                base = r.score as f64;
                suggestion = r.suggestion.filter(|c| c.op != cmd.op);
            }
        }
        if let Some(c) = suggestion {
            state = apply_servo_with(&state, c, &self.steps);
            self.last = Some((c, base));
        }
        self.log.push((reverted, suggestion));
        Ok(state)
    }

    fn fallback(&mut self, initial: &CameraState) -> Result<CameraState, Infallible> {
        Ok(*initial)
    }

    fn digest(&self, s: &CameraState) -> String {
        json_digest(s)
    }
}

/// Servoes until the critic is satisfied or the horizon is spent; always
/// returns the best state seen.
pub fn servo_loop<C: FramingCritic>(
    initial: &CameraState,
    targets: &[Aabb],
    spec: &FramingSpec,
    critic: &C,
    steps: &ServoSteps,
    config: &ReflectionConfig,
) -> ServoOutcome {
    let mut policy = ServoPolicy { critic, targets, spec, steps: *steps, last: None, log: Vec::new() };
    let config = ReflectionConfig { on_exhaustion: ExhaustionMode::BestSoFar, ..*config };
    let out = run_reflection(&mut policy, initial, &config).unwrap_or_else(|_| unreachable!("servo policy is infallible"));
    let steps = out
        .trace
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let (reverted, command) = policy.log.get(i).copied().unwrap_or((None, None));
            ServoStep { turn: t.turn, score: t.score as u8, reverted, command }
        })
        .collect();
    let best_score = out.trace.iter().map(|t| t.score as u8).max().unwrap_or(1);
    ServoOutcome {
        final_state: out.result,
        best_score,
        satisfied: out.status == ReflectionStatus::Accepted,
        status: out.status,
        turns_used: out.turns_used,
        steps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{init_camera, CameraIntrinsics, CanonicalView, DEFAULT_MARGIN};
    use crate::geometry::UnitQuat;
    use crate::memory::Angle;

    fn cube() -> Aabb {
        Aabb::from_center_half(Vec3::new(0.0, 0.0, 0.5), Vec3::splat(0.5))
    }

    fn spec(d: ShotDistance) -> FramingSpec {
        FramingSpec::new(vec!["a".into()], Angle::EyeLevel, d)
    }

    fn init(d: ShotDistance) -> CameraState {
        init_camera(&[cube()], &spec(d), CameraIntrinsics::new(50.0, 4.0).unwrap(), DEFAULT_MARGIN).unwrap()
    }

    #[test]
    fn init_keeps_corners_in_frame() {
        for d in [ShotDistance::CloseUp, ShotDistance::Medium, ShotDistance::Long] {
            let r = framing_score(&init(d), &[cube()], &spec(d));
            assert_eq!(r.corners_outside, 0);
        }
    }

    #[test]
    fn target_behind_camera_scores_one() {
        let mut s = init(ShotDistance::Medium);
        // camera sits at -Y looking +Y; move the pivot far behind it
        s.pivot = Vec3::new(0.0, 50.0, 0.5);
        s.rotation = crate::camera::view_rotation(CanonicalView::Front, 0.0);
        assert!(s.position().y > 40.0);
        let r = framing_score(&s, &[cube()], &spec(ShotDistance::Medium));
        assert_eq!(r.score, 1);
        assert!(r.suggestion.is_some());
        assert!(!r.satisfied);
    }

    /// Oracle: pinhole projection written out by hand for a camera on the -Y
    /// axis looking +Y; a box 0.9 m tall at 1 m depth with α = 90° covers
    /// 0.45 of the frame.
    #[test]
    fn coverage_in_medium_band() {
        let intr = CameraIntrinsics::new(12.0, 4.0).unwrap();
        let s = CameraState {
            pivot: Vec3::ZERO,
            rotation: crate::camera::view_rotation(CanonicalView::Front, 0.0),
            distance: 1.05,
            intrinsics: intr,
        };
        let target = Aabb::new(Vec3::new(-0.1, -0.05, -0.45), Vec3::new(0.1, 0.05, 0.45));
        // nearest face at depth 1.0: half height 0.45 / (1.0 * tan 45°)
        let oracle = 0.45 / 1.0;
        let r = framing_score(&s, &[target], &spec(ShotDistance::Medium));
        assert!((r.coverage.unwrap() - oracle).abs() < 1e-9);
        assert_eq!(r.score, 10);
        assert!(r.satisfied && r.suggestion.is_none());
    }

    #[test]
    fn satisfied_start_issues_nothing() {
        let s = init(ShotDistance::Medium);
        let r = framing_score(&s, &[cube()], &spec(ShotDistance::Medium));
        assert!(r.score >= 8, "{r:?}");
        let out = servo_loop(&s, &[cube()], &spec(ShotDistance::Medium), &GeometricCritic::default(), &ServoSteps::default(), &ReflectionConfig::default());
        assert_eq!(out.turns_used, 0);
        assert!(out.steps.iter().all(|st| st.command.is_none()));
        assert_eq!(out.final_state, s);
    }

    #[test]
    fn one_exact_fix_converges_in_one_turn() {
        // a close-up pushed in too far: corners spill out of frame, nothing else wrong
        let sp = spec(ShotDistance::CloseUp);
        let start = apply_servo_with(&init(ShotDistance::CloseUp), ServoCommand::scaled(ServoOp::ZoomIn, 2.0), &ServoSteps::default());
        let r = framing_score(&start, &[cube()], &sp);
        assert_eq!(r.score, 6, "{r:?}");
        assert_eq!(r.suggestion.map(|c| c.op), Some(ServoOp::ZoomOut));
        let out = servo_loop(&start, &[cube()], &sp, &GeometricCritic::default(), &ServoSteps::default(), &ReflectionConfig::default());
        assert_eq!(out.turns_used, 1);
        assert!(out.satisfied);
        assert_eq!(out.steps[0].command.unwrap().op, ServoOp::ZoomOut);
    }

    struct Stubborn;

    impl FramingCritic for Stubborn {
        fn evaluate(&self, _: &CameraState, _: &[Aabb], _: &FramingSpec) -> FramingReport {
            FramingReport {
                score: 5,
                suggestion: Some(ServoOp::ZoomIn.into()),
                satisfied: false,
                corners_outside: 0,
                centroid_offset: None,
                coverage: None,
                pitch_error_deg: 0.0,
                cost: 1.0,
            }
        }
    }

    #[test]
    fn adversarial_critic_hits_the_cap() {
        let s = init(ShotDistance::Medium);
        let out = servo_loop(&s, &[cube()], &spec(ShotDistance::Medium), &Stubborn, &ServoSteps::default(), &ReflectionConfig::default());
        assert_eq!(out.turns_used, 5);
        assert_eq!(out.status, ReflectionStatus::BudgetExhaustedBest);
        assert!(!out.satisfied);
        assert_eq!(out.steps.len(), 6);
        assert_eq!(out.final_state, s);
    }

    /// Scores drop after every command so each turn starts with a revert.
    struct Declining;

    impl FramingCritic for Declining {
        fn evaluate(&self, s: &CameraState, _: &[Aabb], _: &FramingSpec) -> FramingReport {
            let score = if s.distance > 3.0 { 6 } else { 3 };
            FramingReport {
                score,
                suggestion: Some(if s.distance > 3.0 { ServoOp::ZoomIn } else { ServoOp::PanUp }.into()),
                satisfied: false,
                corners_outside: 0,
                centroid_offset: None,
                coverage: None,
                pitch_error_deg: 0.0,
                cost: 0.0,
            }
        }
    }

    #[test]
    fn worse_step_is_reverted() {
        let s = CameraState {
            pivot: Vec3::ZERO,
            rotation: UnitQuat::IDENTITY,
            distance: 4.0,
            intrinsics: CameraIntrinsics::new(50.0, 4.0).unwrap(),
        };
        let out = servo_loop(&s, &[cube()], &spec(ShotDistance::Medium), &Declining, &ServoSteps::default(), &ReflectionConfig::default());
        assert_eq!(out.steps[0].command.unwrap().op, ServoOp::ZoomIn);
        assert_eq!(out.steps[1].reverted.unwrap().op, ServoOp::ZoomOut);
        assert_eq!(out.best_score, 6);
        let mut best = 0;
        for st in &out.steps {
            best = best.max(st.score);
        }
        assert_eq!(best, out.best_score);
    }
}
