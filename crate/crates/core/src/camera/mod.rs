//! Orbital camera: pivot, rotation and distance around fixed intrinsics.
//!
//! Camera-local axes follow the usual renderer convention: the camera looks
//! down local −Z with +Y up, so the offset (0, 0, d) puts it behind the pivot.

mod critic;
mod frustum;
mod track;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, Mat3, UnitQuat, Vec3};
use crate::memory::{Angle, MoveDirection, Movement, ShotDistance};

pub use critic::{
    coverage_band, framing_score, project, servo_loop, FramingCritic, FramingReport, GeometricCritic, ServoOutcome, ServoStep,
    CENTROID_TOLERANCE, PITCH_TOLERANCE_DEG,
};
pub use frustum::{aabb_in_view, frustum_corners, FRUSTUM_FAR, FRUSTUM_NEAR};
pub use track::{focus_distance, plan_movement, Keyframe, KeyframeTrack, MovementExtent, INTERPOLATION};

pub const DEFAULT_SENSOR_HEIGHT_MM: f64 = 24.0;
pub const DEFAULT_VIEWPORT_HEIGHT_PX: f64 = 1080.0;
pub const DEFAULT_VIEWPORT_WIDTH_PX: f64 = 1920.0;
/// Safety margin on the bounding-sphere distance.
pub const DEFAULT_MARGIN: f64 = 1.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("no target boxes to frame")]
    EmptyTargets,
    #[error("margin must exceed 1, got {0}")]
    InvalidMargin(f64),
    #[error("focal length must be positive, got {0}")]
    InvalidFocalLength(f64),
    #[error("movement `{0}` needs a direction")]
    MissingDirection(Movement),
    #[error("movement `{0}` takes no direction")]
    UnexpectedDirection(Movement),
    #[error("a moving shot needs at least 2 frames, got {0}")]
    TooFewFrames(u32),
    #[error("invalid camera track: {0}")]
    InvalidTrack(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMode {
    Perspective,
    Orthographic,
}

/// Fixed optical properties of a shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub focal_length_mm: f64,
    pub aperture: f64,
    pub sensor_height_mm: f64,
    pub vertical_fov_rad: f64,
    pub viewport_height_px: f64,
    pub viewport_width_px: f64,
    pub mode: ProjectionMode,
}

pub fn vertical_fov(sensor_height_mm: f64, focal_length_mm: f64) -> f64 {
    2.0 * (sensor_height_mm / (2.0 * focal_length_mm)).atan()
}

impl CameraIntrinsics {
    pub fn new(focal_length_mm: f64, aperture: f64) -> Result<Self, CameraError> {
        Self::with_sensor(focal_length_mm, aperture, DEFAULT_SENSOR_HEIGHT_MM)
    }

    pub fn with_sensor(focal_length_mm: f64, aperture: f64, sensor_height_mm: f64) -> Result<Self, CameraError> {
        if !(focal_length_mm > 0.0 && focal_length_mm.is_finite()) {
            return Err(CameraError::InvalidFocalLength(focal_length_mm));
        }
        Ok(Self {
            focal_length_mm,
            aperture,
            sensor_height_mm,
            vertical_fov_rad: vertical_fov(sensor_height_mm, focal_length_mm),
            viewport_height_px: DEFAULT_VIEWPORT_HEIGHT_PX,
            viewport_width_px: DEFAULT_VIEWPORT_WIDTH_PX,
            mode: ProjectionMode::Perspective,
        })
    }

    /// Lens chosen for a distance class when nothing else picks one.
    pub fn for_distance(distance: ShotDistance) -> Self {
        let (f, n) = match distance {
            ShotDistance::CloseUp => (85.0, 2.0),
            ShotDistance::Medium => (50.0, 4.0),
            ShotDistance::Long => (35.0, 8.0),
        };
        Self::new(f, n).expect("table lenses are valid")
    }

    pub fn aspect(&self) -> f64 {
        self.viewport_width_px / self.viewport_height_px
    }

    pub fn tan_half_fov(&self) -> f64 {
        (self.vertical_fov_rad / 2.0).tan()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraState {
    pub pivot: Vec3,
    pub rotation: UnitQuat,
    pub distance: f64,
    pub intrinsics: CameraIntrinsics,
}

/// Row-major 4×4.
pub type Mat4 = [[f64; 4]; 4];

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn affine(r: &Mat3, t: Vec3) -> Mat4 {
    let m = &r.0;
    [
        [m[0][0], m[0][1], m[0][2], t.x],
        [m[1][0], m[1][1], m[1][2], t.y],
        [m[2][0], m[2][1], m[2][2], t.z],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

fn translation(t: Vec3) -> Mat4 {
    affine(&Mat3::IDENTITY, t)
}

pub fn transform_point(m: &Mat4, p: Vec3) -> Vec3 {
    let r = |i: usize| m[i][0] * p.x + m[i][1] * p.y + m[i][2] * p.z + m[i][3];
    Vec3::new(r(0), r(1), r(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: Vec3,
    pub view_matrix: Mat4,
}

impl CameraState {
    pub fn position(&self) -> Vec3 {
        self.pivot + self.rotation.rotate(Vec3::new(0.0, 0.0, self.distance))
    }

    /// The camera's world transform; the view matrix is its inverse.
    pub fn world_matrix(&self) -> Mat4 {
        mat4_mul(
            &mat4_mul(&translation(self.pivot), &affine(&self.rotation.to_matrix(), Vec3::ZERO)),
            &translation(Vec3::new(0.0, 0.0, self.distance)),
        )
    }

    /// World point in camera space.
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        self.rotation.to_matrix().transpose().mul_vec(p - self.pivot) - Vec3::new(0.0, 0.0, self.distance)
    }

    /// Elevation of the camera above the pivot's horizontal plane, degrees.
    pub fn pitch_deg(&self) -> f64 {
        self.rotation.rotate(Vec3::Z).z.clamp(-1.0, 1.0).asin().to_degrees()
    }

    pub fn is_valid(&self) -> bool {
        (self.rotation.norm() - 1.0).abs() <= 1e-9 && self.distance > 0.0 && self.pivot.is_finite()
    }
}

pub fn camera_pose(state: &CameraState) -> CameraPose {
    let rt = state.rotation.to_matrix().transpose();
    let view = mat4_mul(
        &mat4_mul(&translation(Vec3::new(0.0, 0.0, -state.distance)), &affine(&rt, Vec3::ZERO)),
        &translation(-state.pivot),
    );
    CameraPose { position: state.position(), view_matrix: view }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServoOp {
    PanLeft,
    PanRight,
    PanUp,
    PanDown,
    OrbitLeft,
    OrbitRight,
    OrbitUp,
    OrbitDown,
    ZoomIn,
    ZoomOut,
    RollLeft,
    RollRight,
}

impl ServoOp {
    pub const ALL: [ServoOp; 12] = [
        ServoOp::PanLeft,
        ServoOp::PanRight,
        ServoOp::PanUp,
        ServoOp::PanDown,
        ServoOp::OrbitLeft,
        ServoOp::OrbitRight,
        ServoOp::OrbitUp,
        ServoOp::OrbitDown,
        ServoOp::ZoomIn,
        ServoOp::ZoomOut,
        ServoOp::RollLeft,
        ServoOp::RollRight,
    ];

    pub fn opposite(self) -> ServoOp {
        use ServoOp::*;
        match self {
            PanLeft => PanRight,
            PanRight => PanLeft,
            PanUp => PanDown,
            PanDown => PanUp,
            OrbitLeft => OrbitRight,
            OrbitRight => OrbitLeft,
            OrbitUp => OrbitDown,
            OrbitDown => OrbitUp,
            ZoomIn => ZoomOut,
            ZoomOut => ZoomIn,
            RollLeft => RollRight,
            RollRight => RollLeft,
        }
    }

    pub fn as_str(self) -> &'static str {
        use ServoOp::*;
        match self {
            PanLeft => "pan_left",
            PanRight => "pan_right",
            PanUp => "pan_up",
            PanDown => "pan_down",
            OrbitLeft => "orbit_left",
            OrbitRight => "orbit_right",
            OrbitUp => "orbit_up",
            OrbitDown => "orbit_down",
            ZoomIn => "zoom_in",
            ZoomOut => "zoom_out",
            RollLeft => "roll_left",
            RollRight => "roll_right",
        }
    }
}

impl fmt::Display for ServoOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoCommand {
    pub op: ServoOp,
    /// Multiplies the per-step amount; 1 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnitude: Option<f64>,
}

impl ServoCommand {
    pub fn new(op: ServoOp) -> Self {
        Self { op, magnitude: None }
    }

    pub fn scaled(op: ServoOp, magnitude: f64) -> Self {
        Self { op, magnitude: Some(magnitude) }
    }

    pub fn opposite(self) -> Self {
        Self { op: self.op.opposite(), magnitude: self.magnitude }
    }
}

impl From<ServoOp> for ServoCommand {
    fn from(op: ServoOp) -> Self {
        Self::new(op)
    }
}

/// Per-step amounts of the update laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoSteps {
    /// Screen displacement per pan step as a fraction of viewport height.
    pub pan_fraction: f64,
    pub angle_deg: f64,
    pub dolly_base: f64,
    pub dolly_kappa: f64,
}

impl Default for ServoSteps {
    fn default() -> Self {
        Self { pan_fraction: 0.1, angle_deg: 15.0, dolly_base: 2.0, dolly_kappa: 0.5 }
    }
}

/// World units per screen pixel at depth `d`.
pub fn pan_sensitivity(d: f64, intrinsics: &CameraIntrinsics) -> f64 {
    2.0 * d * intrinsics.tan_half_fov() / intrinsics.viewport_height_px
}

pub fn dolly(d: f64, base: f64, kappa: f64) -> f64 {
    d * base.powf(-kappa)
}

/// Rotation about a camera-local axis.
fn local_turn(axis: Vec3, deg: f64) -> UnitQuat {
    UnitQuat::from_axis_angle(axis, deg.to_radians())
}

/// The local rotation an orbit or roll command composes on the right.
pub fn rotation_delta(op: ServoOp, deg: f64) -> Option<UnitQuat> {
    use ServoOp::*;
    Some(match op {
        // the camera swings toward its own left/right/up/down around the pivot
        OrbitLeft => local_turn(Vec3::Y, -deg),
        OrbitRight => local_turn(Vec3::Y, deg),
        OrbitUp => local_turn(Vec3::X, -deg),
        OrbitDown => local_turn(Vec3::X, deg),
        RollLeft => local_turn(Vec3::Z, deg),
        RollRight => local_turn(Vec3::Z, -deg),
        _ => return None,
    })
}

pub fn apply_servo(state: &CameraState, cmd: ServoCommand) -> CameraState {
    apply_servo_with(state, cmd, &ServoSteps::default())
}

pub fn apply_servo_with(state: &CameraState, cmd: ServoCommand, steps: &ServoSteps) -> CameraState {
    use ServoOp::*;
    let k = cmd.magnitude.unwrap_or(1.0);
    let mut next = *state;
    match cmd.op {
        PanLeft | PanRight | PanUp | PanDown => {
            let px = steps.pan_fraction * state.intrinsics.viewport_height_px * k;
            let screen = match cmd.op {
                PanLeft => Vec3::new(-px, 0.0, 0.0),
                PanRight => Vec3::new(px, 0.0, 0.0),
                PanUp => Vec3::new(0.0, px, 0.0),
                _ => Vec3::new(0.0, -px, 0.0),
            };
            next.pivot += state.rotation.rotate(screen * pan_sensitivity(state.distance, &state.intrinsics));
        }
        ZoomIn => next.distance = dolly(state.distance, steps.dolly_base, steps.dolly_kappa * k),
        ZoomOut => next.distance = dolly(state.distance, steps.dolly_base, -steps.dolly_kappa * k),
        op => {
            let delta = rotation_delta(op, steps.angle_deg * k).expect("rotation op");
            next.rotation = state.rotation.compose(delta).renormalized();
        }
    }
    next
}

/// The four turnaround views, named by where the camera sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CanonicalView {
    Front,
    Back,
    Left,
    Right,
}

impl CanonicalView {
    pub const ALL: [CanonicalView; 4] = [CanonicalView::Front, CanonicalView::Back, CanonicalView::Left, CanonicalView::Right];

    /// Unit offset from the pivot toward the camera.
    pub fn offset(self) -> Vec3 {
        match self {
            CanonicalView::Front => Vec3::new(0.0, -1.0, 0.0),
            CanonicalView::Back => Vec3::new(0.0, 1.0, 0.0),
            CanonicalView::Left => Vec3::new(-1.0, 0.0, 0.0),
            CanonicalView::Right => Vec3::new(1.0, 0.0, 0.0),
        }
    }

    fn yaw_deg(self) -> f64 {
        match self {
            CanonicalView::Front => 0.0,
            CanonicalView::Back => 180.0,
            CanonicalView::Left => -90.0,
            CanonicalView::Right => 90.0,
        }
    }

    /// View whose offset best matches a horizontal direction; Front when the
    /// direction is degenerate. Ties go to the earlier view.
    pub fn nearest(dir: [f64; 2]) -> CanonicalView {
        if dir[0].hypot(dir[1]) < 1e-9 {
            return CanonicalView::Front;
        }
        let mut best = (f64::NEG_INFINITY, CanonicalView::Front);
        for v in CanonicalView::ALL {
            let o = v.offset();
            let s = o.x * dir[0] + o.y * dir[1];
            if s > best.0 + 1e-12 {
                best = (s, v);
            }
        }
        best.1
    }
}

pub fn angle_pitch_deg(angle: Angle) -> f64 {
    match angle {
        Angle::EyeLevel => 0.0,
        Angle::High => 20.0,
        Angle::Low => -20.0,
    }
}

/// Orientation looking at the pivot from `view`, raised by `pitch_deg`.
pub fn view_rotation(view: CanonicalView, pitch_deg: f64) -> UnitQuat {
    let m = Mat3::rotation_z(view.yaw_deg().to_radians()).mul_mat(&Mat3::rotation_x((90.0 - pitch_deg).to_radians()));
    UnitQuat::from_matrix(&m)
}

/// What a shot asks of the camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramingSpec {
    pub focus_ids: Vec<String>,
    pub angle: Angle,
    pub distance: ShotDistance,
    pub movement: Movement,
    pub direction: Option<MoveDirection>,
    pub view: CanonicalView,
}

impl FramingSpec {
    pub fn new(focus_ids: Vec<String>, angle: Angle, distance: ShotDistance) -> Self {
        Self { focus_ids, angle, distance, movement: Movement::Static, direction: None, view: CanonicalView::Front }
    }

    pub fn with_view(mut self, view: CanonicalView) -> Self {
        self.view = view;
        self
    }
}

/// Union box of the targets.
pub fn union_box(targets: &[Aabb]) -> Option<Aabb> {
    let (first, rest) = targets.split_first()?;
    Some(rest.iter().fold(*first, |acc, b| acc.union(b)))
}

/// Pivot at the union-box center, rotation from the chosen view and angle
/// class, distance from the bounding sphere.
pub fn init_camera(
    targets: &[Aabb],
    spec: &FramingSpec,
    intrinsics: CameraIntrinsics,
    margin: f64,
) -> Result<CameraState, CameraError> {
    let bounds = union_box(targets).ok_or(CameraError::EmptyTargets)?;
    if !(margin >= 1.0 && margin.is_finite()) {
        return Err(CameraError::InvalidMargin(margin));
    }
    let pivot = bounds.center();
    let r_bound = bounds.max.distance(pivot);
    let distance = (r_bound * margin / (intrinsics.vertical_fov_rad / 2.0).sin()).max(1e-6);
    Ok(CameraState { pivot, rotation: view_rotation(spec.view, angle_pitch_deg(spec.angle)), distance, intrinsics })
}
