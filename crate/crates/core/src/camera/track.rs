//! Keyframed camera movement.

use serde::{Deserialize, Serialize};

use super::{apply_servo_with, dolly, rotation_delta, CameraError, CameraIntrinsics, CameraState, ServoCommand, ServoOp, ServoSteps};
use crate::geometry::{Aabb, UnitQuat, Vec3};
use crate::memory::{MoveDirection, Movement};

pub const INTERPOLATION: &str = "Bezier";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keyframe {
    pub frame: u32,
    pub pivot: Vec3,
    /// (w, x, y, z)
    pub quaternion: [f64; 4],
    pub distance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus_distance: Option<f64>,
}

impl Keyframe {
    pub fn from_state(frame: u32, s: &CameraState, focus_distance: Option<f64>) -> Self {
        let q = s.rotation;
        Self { frame, pivot: s.pivot, quaternion: [q.w, q.x, q.y, q.z], distance: s.distance, focus_distance }
    }

    pub fn rotation(&self) -> UnitQuat {
        let [w, x, y, z] = self.quaternion;
        UnitQuat { w, x, y, z }
    }

    pub fn state(&self, intrinsics: CameraIntrinsics) -> CameraState {
        CameraState { pivot: self.pivot, rotation: self.rotation(), distance: self.distance, intrinsics }
    }
}

/// Per-shot camera export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeTrack {
    pub intrinsics: CameraIntrinsics,
    pub keyframes: Vec<Keyframe>,
    pub interpolation: String,
}

impl KeyframeTrack {
    pub fn new(intrinsics: CameraIntrinsics, keyframes: Vec<Keyframe>) -> Self {
        Self { intrinsics, keyframes, interpolation: INTERPOLATION.to_string() }
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        let bad = |m: String| Err(CameraError::InvalidTrack(m));
        if self.keyframes.is_empty() {
            return bad("no keyframes".into());
        }
        if self.interpolation != INTERPOLATION {
            return bad(format!("interpolation must be {INTERPOLATION}"));
        }
        for w in self.keyframes.windows(2) {
            if w[1].frame <= w[0].frame {
                return bad(format!("frame {} does not follow {}", w[1].frame, w[0].frame));
            }
        }
        for k in &self.keyframes {
            if (k.rotation().norm() - 1.0).abs() > 1e-9 {
                return bad(format!("frame {} rotation is not a unit quaternion", k.frame));
            }
            if !(k.distance > 0.0 && k.distance.is_finite()) || !k.pivot.is_finite() {
                return bad(format!("frame {} has a non-finite or non-positive distance", k.frame));
            }
        }
        Ok(())
    }

    pub fn first_state(&self) -> Option<CameraState> {
        self.keyframes.first().map(|k| k.state(self.intrinsics))
    }
}

/// How far a scripted movement travels over the shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MovementExtent {
    pub pan_steps: f64,
    pub orbit_deg: f64,
    pub zoom_kappa: f64,
}

impl Default for MovementExtent {
    fn default() -> Self {
        Self { pan_steps: 3.0, orbit_deg: 30.0, zoom_kappa: 1.0 }
    }
}

/// Nearest target surface distance from the camera.
pub fn focus_distance(state: &CameraState, targets: &[Aabb]) -> Option<f64> {
    let p = state.position();
    targets.iter().map(|b| b.distance_to_point(p)).min_by(f64::total_cmp)
}

fn orbit_op(d: MoveDirection) -> ServoOp {
    match d {
        MoveDirection::Left => ServoOp::OrbitLeft,
        MoveDirection::Right => ServoOp::OrbitRight,
        MoveDirection::Up => ServoOp::OrbitUp,
        MoveDirection::Down => ServoOp::OrbitDown,
    }
}

fn pan_op(d: MoveDirection) -> ServoOp {
    match d {
        MoveDirection::Left => ServoOp::PanLeft,
        MoveDirection::Right => ServoOp::PanRight,
        MoveDirection::Up => ServoOp::PanUp,
        MoveDirection::Down => ServoOp::PanDown,
    }
}

/// Start keyframe at frame 1; for moving shots an end keyframe at `n_frames`.
#[allow(clippy::too_many_arguments)]
pub fn plan_movement(
    state: &CameraState,
    movement: Movement,
    direction: Option<MoveDirection>,
    n_frames: u32,
    targets: &[Aabb],
    steps: &ServoSteps,
    extent: &MovementExtent,
) -> Result<KeyframeTrack, CameraError> {
    match (movement.needs_direction(), direction) {
        (true, None) => return Err(CameraError::MissingDirection(movement)),
        (false, Some(_)) => return Err(CameraError::UnexpectedDirection(movement)),
        _ => {}
    }
    let start = Keyframe::from_state(1, state, focus_distance(state, targets));
    if movement == Movement::Static {
        return Ok(KeyframeTrack::new(state.intrinsics, vec![start]));
    }
    if n_frames < 2 {
        return Err(CameraError::TooFewFrames(n_frames));
    }
    let mut end = *state;
    match (movement, direction) {
        (Movement::Pan, Some(d)) => {
            end = apply_servo_with(state, ServoCommand::scaled(pan_op(d), extent.pan_steps), steps);
        }
        (Movement::Orbit, Some(d)) => {
            let delta = rotation_delta(orbit_op(d), extent.orbit_deg).expect("orbit op");
            end.rotation = state.rotation.compose(delta).renormalized();
        }
        (Movement::ZoomIn, _) => end.distance = dolly(state.distance, steps.dolly_base, extent.zoom_kappa),
        (Movement::ZoomOut, _) => end.distance = dolly(state.distance, steps.dolly_base, -extent.zoom_kappa),
        _ => unreachable!("direction checked above"),
    }
    let last = Keyframe::from_state(n_frames, &end, focus_distance(&end, targets));
    Ok(KeyframeTrack::new(state.intrinsics, vec![start, last]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{view_rotation, CanonicalView};
    use nalgebra::{Quaternion, UnitQuaternion, Vector3};

    fn state() -> CameraState {
        CameraState {
            pivot: Vec3::new(0.0, 0.0, 1.0),
            rotation: view_rotation(CanonicalView::Front, 20.0),
            distance: 6.0,
            intrinsics: CameraIntrinsics::new(35.0, 8.0).unwrap(),
        }
    }

    fn plan(m: Movement, d: Option<MoveDirection>) -> Result<KeyframeTrack, CameraError> {
        let target = Aabb::from_center_half(Vec3::new(0.0, 0.0, 1.0), Vec3::splat(0.5));
        plan_movement(&state(), m, d, 48, &[target], &ServoSteps::default(), &MovementExtent::default())
    }

    #[test]
    fn static_is_one_keyframe() {
        let t = plan(Movement::Static, None).unwrap();
        assert_eq!(t.keyframes.len(), 1);
        assert_eq!(t.interpolation, "Bezier");
        // camera raised 20° on a 6 m arm; nearest point is the box's front-top edge
        let (dy, dz) = (6.0 * 20f64.to_radians().cos() - 0.5, 6.0 * 20f64.to_radians().sin() - 0.5);
        assert!((t.keyframes[0].focus_distance.unwrap() - dy.hypot(dz)).abs() < 1e-9);
        t.validate().unwrap();
    }

    #[test]
    fn zoom_follows_dolly_law() {
        let t = plan(Movement::ZoomIn, None).unwrap();
        assert_eq!(t.keyframes[1].frame, 48);
        assert!((t.keyframes[1].distance - 6.0 * 2f64.powf(-1.0)).abs() < 1e-12);
        let o = plan(Movement::ZoomOut, None).unwrap();
        assert!((o.keyframes[1].distance - 12.0).abs() < 1e-12);
    }

    #[test]
    fn orbit_left_composes_yaw_step() {
        let t = plan(Movement::Orbit, Some(MoveDirection::Left)).unwrap();
        let s = state();
        assert_eq!(t.keyframes[1].pivot, s.pivot);
        let q = |u: UnitQuat| UnitQuaternion::from_quaternion(Quaternion::new(u.w, u.x, u.y, u.z));
        let oracle = q(s.rotation) * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), (-30.0f64).to_radians());
        assert!(oracle.angle_to(&q(t.keyframes[1].rotation())) < 1e-9);
    }

    #[test]
    fn direction_rules() {
        assert_eq!(plan(Movement::Pan, None), Err(CameraError::MissingDirection(Movement::Pan)));
        assert_eq!(
            plan(Movement::ZoomIn, Some(MoveDirection::Up)),
            Err(CameraError::UnexpectedDirection(Movement::ZoomIn))
        );
        let pan = plan(Movement::Pan, Some(MoveDirection::Right)).unwrap();
        assert!(pan.keyframes[1].pivot.x > 0.0);
    }

    #[test]
    fn track_json_shape() {
        let t = plan(Movement::ZoomIn, None).unwrap();
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["interpolation"], "Bezier");
        let k = &v["keyframes"][0];
        for key in ["frame", "pivot", "quaternion", "distance", "focus_distance"] {
            assert!(k.get(key).is_some(), "{key}");
        }
        assert!(v["intrinsics"]["focal_length_mm"].is_number());
        let back: KeyframeTrack = serde_json::from_value(v).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn validate_rejects_bad_frames() {
        let mut t = plan(Movement::ZoomIn, None).unwrap();
        t.keyframes[1].frame = 1;
        assert!(t.validate().is_err());
    }
}
