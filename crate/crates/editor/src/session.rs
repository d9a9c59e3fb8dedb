//! One editing session on one shot. The state is the shot's snapshot
//! document; every edit is a pure step on it, so replaying the log from the
//! built shot reproduces the current state exactly.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use blocking_core::camera::{apply_servo_with, focus_distance, CameraIntrinsics, KeyframeTrack, ServoCommand, ServoSteps};
use blocking_core::geometry::{world_aabb, EulerDeg, Vec3};
use blocking_core::layout::{retain_members, verify_scene, Diagnostic, ErrorCounts, SceneLayout, Tolerances};
use blocking_core::memory::AssetType;
use blocking_core::pipeline::{detect_onstage, export_snapshot, render_svg, SnapshotDocument, SnapshotPlacement, StoryWorld};

/// Id reported in `changed_ids` for camera edits.
pub const CAMERA_ID: &str = "camera";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EditorError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("stale version: edit was made against {expected}, session is at {current}")]
    StaleVersion { expected: u64, current: u64 },
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("world unavailable: {0}")]
    World(String),
}

impl EditorError {
    pub fn code(&self) -> &'static str {
        match self {
            EditorError::UnknownSession(_) => "unknown_session",
            EditorError::UnknownTarget(_) => "unknown_target",
            EditorError::StaleVersion { .. } => "stale_version",
            EditorError::InvalidEdit(_) => "invalid_edit",
            EditorError::World(_) => "world_unavailable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Edit {
    ServoCommand(ServoCommand),
    /// Moves or turns one asset; its size never changes.
    SetPlacement {
        asset_id: String,
        #[serde(default)]
        location: Option<Vec3>,
        #[serde(default)]
        rotation: Option<EulerDeg>,
    },
    AddAsset {
        asset_id: String,
        asset_type: AssetType,
        location: Vec3,
        #[serde(default)]
        rotation: EulerDeg,
        dimensions: Vec3,
    },
    RemoveAsset {
        asset_id: String,
    },
    /// Lens changes keep the framing; `distance` rescales every keyframe so
    /// the first one lands on it.
    SetCameraParam {
        #[serde(default)]
        focal_length_mm: Option<f64>,
        #[serde(default)]
        aperture: Option<f64>,
        #[serde(default)]
        distance: Option<f64>,
    },
    Undo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditResult {
    pub accepted: bool,
    /// Verification of the post-edit layout. Advisory only.
    pub diagnostics: Vec<Diagnostic>,
    pub version: u64,
    pub changed_ids: Vec<String>,
}

/// Pushed to event stream subscribers after every accepted edit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditEvent {
    pub version: u64,
    pub changed_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cursor {
    pub scene_id: u32,
    pub shot_id: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateDetail {
    #[default]
    Summary,
    Snapshot,
    TopdownSvg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub cursor: Cursor,
    pub version: u64,
    pub residual: ErrorCounts,
    pub edit_log: Vec<Edit>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateDocument {
    Summary(SessionSummary),
    Snapshot(SnapshotDocument),
    TopdownSvg(String),
}

/// Everything an edit step needs besides the state itself.
#[derive(Debug, Clone, PartialEq)]
struct Context {
    steps: ServoSteps,
    tolerances: Tolerances,
    focus_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub session_id: String,
    pub cursor: Cursor,
    ctx: Context,
    base: SnapshotDocument,
    current: SnapshotDocument,
    /// States before each edit still in effect, with what that edit changed.
    history: Vec<(SnapshotDocument, Vec<String>)>,
    edit_log: Vec<Edit>,
    version: u64,
}

fn layout_of(doc: &SnapshotDocument) -> SceneLayout {
    SceneLayout {
        scene_size: doc.scene_size,
        placements: doc.placements.iter().map(|p| (p.asset_id.clone(), p.placement())).collect(),
        constraints: doc.constraints.clone(),
        shot_modifications: Vec::new(),
    }
}

fn finite(v: f64, what: &str) -> Result<(), EditorError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(EditorError::InvalidEdit(format!("{what} must be finite")))
    }
}

fn positive(v: f64, what: &str) -> Result<(), EditorError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(EditorError::InvalidEdit(format!("{what} must be positive")))
    }
}

fn finite_vec(v: Vec3, what: &str) -> Result<(), EditorError> {
    finite(v.x, what).and(finite(v.y, what)).and(finite(v.z, what))
}

fn finite_rot(r: EulerDeg, what: &str) -> Result<(), EditorError> {
    finite(r.x, what).and(finite(r.y, what)).and(finite(r.z, what))
}

impl Context {
    /// Re-derives what depends on the layout and camera: diagnostics, who is
    /// expected on stage, and who the first keyframe sees.
    fn refresh(&self, doc: &mut SnapshotDocument) -> Result<(), EditorError> {
        let layout = layout_of(doc);
        doc.diagnostics = verify_scene(&layout, &self.tolerances).map_err(|e| EditorError::InvalidEdit(e.to_string()))?;
        doc.expected = doc
            .placements
            .iter()
            .filter(|p| p.asset_type == Some(AssetType::Character))
            .map(|p| p.asset_id.clone())
            .collect();
        doc.detected = match doc.camera_state() {
            Some(s) => detect_onstage(&layout, &doc.expected, &s),
            None => Vec::new(),
        };
        Ok(())
    }

    /// Keyframes that carried a focus distance get it recomputed from the
    /// focus assets, or from everything on stage when none is present.
    fn refocus(&self, doc: &SnapshotDocument, track: &mut KeyframeTrack) {
        let focus: BTreeSet<&str> = self.focus_ids.iter().map(String::as_str).collect();
        let mut targets: Vec<_> =
            doc.placements.iter().filter(|p| focus.contains(p.asset_id.as_str())).map(|p| world_aabb(&p.placement())).collect();
        if targets.is_empty() {
            targets = doc.placements.iter().map(|p| world_aabb(&p.placement())).collect();
        }
        let intr = track.intrinsics;
        for k in &mut track.keyframes {
            if k.focus_distance.is_some() {
                k.focus_distance = focus_distance(&k.state(intr), &targets);
            }
        }
    }

    fn camera<'a>(&self, doc: &'a mut SnapshotDocument) -> Result<&'a mut KeyframeTrack, EditorError> {
        doc.camera.as_mut().ok_or_else(|| EditorError::UnknownTarget(CAMERA_ID.into()))
    }

    /// One non-undo edit applied to `doc`. Returns the ids it touched.
    fn step(&self, doc: &mut SnapshotDocument, edit: &Edit) -> Result<Vec<String>, EditorError> {
        let index = |doc: &SnapshotDocument, id: &str| {
            doc.placements
                .binary_search_by(|p| p.asset_id.as_str().cmp(id))
                .map_err(|_| EditorError::UnknownTarget(id.to_string()))
        };
        let changed = match edit {
            Edit::ServoCommand(cmd) => {
                if let Some(m) = cmd.magnitude {
                    finite(m, "magnitude")?;
                }
                let track = self.camera(doc)?;
                let intr = track.intrinsics;
                for k in &mut track.keyframes {
                    let next = apply_servo_with(&k.state(intr), *cmd, &self.steps);
                    k.pivot = next.pivot;
                    k.quaternion = [next.rotation.w, next.rotation.x, next.rotation.y, next.rotation.z];
                    k.distance = next.distance;
                }
                let mut track = track.clone();
                self.refocus(doc, &mut track);
                doc.camera = Some(track);
                vec![CAMERA_ID.to_string()]
            }
            Edit::SetPlacement { asset_id, location, rotation } => {
                let i = index(doc, asset_id)?;
                if let Some(l) = location {
                    finite_vec(*l, "location")?;
                    doc.placements[i].location = *l;
                }
                if let Some(r) = rotation {
                    finite_rot(*r, "rotation")?;
                    doc.placements[i].rotation = *r;
                }
                vec![asset_id.clone()]
            }
            Edit::AddAsset { asset_id, asset_type, location, rotation, dimensions } => {
                let i = match index(doc, asset_id) {
                    Ok(_) => return Err(EditorError::InvalidEdit(format!("asset `{asset_id}` is already placed"))),
                    Err(_) if asset_id.trim().is_empty() => {
                        return Err(EditorError::InvalidEdit("asset_id must not be empty".into()))
                    }
                    Err(_) => doc.placements.partition_point(|p| p.asset_id < *asset_id),
                };
                finite_vec(*location, "location")?;
                finite_rot(*rotation, "rotation")?;
                positive(dimensions.x, "width").and(positive(dimensions.y, "depth")).and(positive(dimensions.z, "height"))?;
                doc.placements.insert(
                    i,
                    SnapshotPlacement {
                        asset_id: asset_id.clone(),
                        asset_type: Some(*asset_type),
                        location: *location,
                        rotation: *rotation,
                        dimensions: *dimensions,
                    },
                );
                vec![asset_id.clone()]
            }
            Edit::RemoveAsset { asset_id } => {
                let i = index(doc, asset_id)?;
                doc.placements.remove(i);
                // constraints on the asset go; those anchored to it become free
                let members: BTreeSet<String> = doc.placements.iter().map(|p| p.asset_id.clone()).collect();
                doc.constraints = retain_members(&layout_of(doc), &members).constraints;
                vec![asset_id.clone()]
            }
            Edit::SetCameraParam { focal_length_mm, aperture, distance } => {
                if focal_length_mm.is_none() && aperture.is_none() && distance.is_none() {
                    return Err(EditorError::InvalidEdit("no camera parameter given".into()));
                }
                let track = self.camera(doc)?;
                let old = track.intrinsics;
                if focal_length_mm.is_some() || aperture.is_some() {
                    let f = focal_length_mm.unwrap_or(old.focal_length_mm);
                    let n = aperture.unwrap_or(old.aperture);
                    positive(n, "aperture")?;
                    let fresh = CameraIntrinsics::with_sensor(f, n, old.sensor_height_mm)
                        .map_err(|e| EditorError::InvalidEdit(e.to_string()))?;
                    track.intrinsics = CameraIntrinsics {
                        viewport_height_px: old.viewport_height_px,
                        viewport_width_px: old.viewport_width_px,
                        mode: old.mode,
                        ..fresh
                    };
                }
                if let Some(d) = distance {
                    positive(*d, "distance")?;
                    let ratio = d / track.keyframes[0].distance;
                    for (i, k) in track.keyframes.iter_mut().enumerate() {
                        k.distance = if i == 0 { *d } else { k.distance * ratio };
                    }
                }
                let mut track = track.clone();
                self.refocus(doc, &mut track);
                doc.camera = Some(track);
                vec![CAMERA_ID.to_string()]
            }
            Edit::Undo => unreachable!("undo is handled by the session"),
        };
        self.refresh(doc)?;
        Ok(changed)
    }
}

impl Session {
    /// Opens a session on a built shot. `steps` defaults to the world's servo
    /// step sizes.
    pub fn open(
        session_id: impl Into<String>,
        world: &StoryWorld,
        cursor: Cursor,
        steps: Option<ServoSteps>,
    ) -> Result<Self, EditorError> {
        let (_, shot) = world
            .shot(cursor.scene_id, cursor.shot_id)
            .map_err(|_| EditorError::UnknownTarget(format!("scene {} shot {}", cursor.scene_id, cursor.shot_id)))?;
        let base = export_snapshot(world, cursor.scene_id, cursor.shot_id)
            .map_err(|e| EditorError::World(e.to_string()))?;
        let ctx = Context {
            steps: steps.unwrap_or(world.config.servo_steps),
            tolerances: world.config.tolerances,
            focus_ids: shot.camera.as_ref().map(|c| c.spec.focus_ids.clone()).unwrap_or_default(),
        };
        Ok(Self {
            session_id: session_id.into(),
            cursor,
            ctx,
            current: base.clone(),
            base,
            history: Vec::new(),
            edit_log: Vec::new(),
            version: 0,
        })
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn edit_log(&self) -> &[Edit] {
        &self.edit_log
    }

    pub fn snapshot(&self) -> &SnapshotDocument {
        &self.current
    }

    /// The shot as built, before any edit.
    pub fn base(&self) -> &SnapshotDocument {
        &self.base
    }

    /// Applies `edit` if the client saw the current version. A rejected edit
    /// leaves the session untouched; an undo with nothing to undo is reported
    /// as not accepted.
    pub fn apply_edit(&mut self, expected_version: u64, edit: Edit) -> Result<EditResult, EditorError> {
        if expected_version != self.version {
            return Err(EditorError::StaleVersion { expected: expected_version, current: self.version });
        }
        let changed_ids = match &edit {
            Edit::Undo => match self.history.pop() {
                Some((prior, changed)) => {
                    self.current = prior;
                    changed
                }
                None => {
                    return Ok(EditResult {
                        accepted: false,
                        diagnostics: self.current.diagnostics.clone(),
                        version: self.version,
                        changed_ids: Vec::new(),
                    })
                }
            },
            other => {
                let mut next = self.current.clone();
                let changed = self.ctx.step(&mut next, other)?;
                let prior = std::mem::replace(&mut self.current, next);
                self.history.push((prior, changed.clone()));
                changed
            }
        };
        self.edit_log.push(edit);
        self.version += 1;
        Ok(EditResult { accepted: true, diagnostics: self.current.diagnostics.clone(), version: self.version, changed_ids })
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.session_id.clone(),
            cursor: self.cursor,
            version: self.version,
            residual: ErrorCounts::from_diagnostics(&self.current.diagnostics),
            edit_log: self.edit_log.clone(),
        }
    }

    pub fn state(&self, detail: StateDetail) -> StateDocument {
        match detail {
            StateDetail::Summary => StateDocument::Summary(self.summary()),
            StateDetail::Snapshot => StateDocument::Snapshot(self.current.clone()),
            StateDetail::TopdownSvg => StateDocument::TopdownSvg(render_svg(&self.current)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use blocking_core::camera::ServoOp;
    use blocking_core::layout::DiagnosticKind;
    use blocking_core::pipeline::synth::synthetic_story;
    use blocking_core::pipeline::{build_story, BuildConfig};

    fn world() -> StoryWorld {
        let i = synthetic_story(1, 1, 3).unwrap();
        build_story(i.storyboard, &i.dimensions, &i.layouts, &BuildConfig::default()).unwrap()
    }

    fn open(w: &StoryWorld) -> Session {
        Session::open("s", w, Cursor { scene_id: 1, shot_id: 1 }, None).unwrap()
    }

    fn placement<'a>(s: &'a Session, id: &str) -> &'a SnapshotPlacement {
        s.snapshot().placements.iter().find(|p| p.asset_id == id).unwrap()
    }

    #[test]
    fn fresh_session_is_the_built_shot() {
        let w = world();
        let s = open(&w);
        assert_eq!(s.version(), 0);
        assert!(s.edit_log().is_empty());
        assert_eq!(s.snapshot(), &export_snapshot(&w, 1, 1).unwrap());
    }

    #[test]
    fn placement_edit_touches_one_asset() {
        let w = world();
        let mut s = open(&w);
        let before = s.snapshot().clone();
        let loc = Vec3::new(0.0, -4.0, 0.0);
        let r = s.apply_edit(0, Edit::SetPlacement { asset_id: "lamp_1".into(), location: Some(loc), rotation: None }).unwrap();
        assert!(r.accepted);
        assert_eq!(r.version, 1);
        assert_eq!(r.changed_ids, vec!["lamp_1".to_string()]);
        for (a, b) in before.placements.iter().zip(&s.snapshot().placements) {
            assert_eq!(a == b, a.asset_id != "lamp_1");
        }
        // the lamp no longer sits on the table
        assert!(r.diagnostics.iter().any(|d| d.asset_id == "lamp_1" && d.kind == DiagnosticKind::Relationship));
        assert_eq!(r.diagnostics, verify_scene(&layout_of(s.snapshot()), &Tolerances::default()).unwrap());
    }

    #[test]
    fn stale_and_unknown_edits_change_nothing() {
        let w = world();
        let mut s = open(&w);
        let before = s.clone();
        assert_eq!(
            s.apply_edit(3, Edit::Undo),
            Err(EditorError::StaleVersion { expected: 3, current: 0 })
        );
        let e = s.apply_edit(0, Edit::RemoveAsset { asset_id: "ghost".into() }).unwrap_err();
        assert_eq!(e.code(), "unknown_target");
        let e = s.apply_edit(0, Edit::SetCameraParam { focal_length_mm: Some(-1.0), aperture: None, distance: None });
        assert_eq!(e.unwrap_err().code(), "invalid_edit");
        assert_eq!(s, before);
    }

    #[test]
    fn undo_restores_the_prior_state() {
        let w = world();
        let mut s = open(&w);
        let start = s.snapshot().to_json();
        s.apply_edit(0, Edit::ServoCommand(ServoOp::OrbitLeft.into())).unwrap();
        s.apply_edit(1, Edit::RemoveAsset { asset_id: "table_1".into() }).unwrap();
        assert!(s.snapshot().constraints.iter().all(|c| c.anchor_asset_id.as_deref() != Some("table_1")));
        let r = s.apply_edit(2, Edit::Undo).unwrap();
        assert_eq!(r.changed_ids, vec!["table_1".to_string()]);
        s.apply_edit(3, Edit::Undo).unwrap();
        assert_eq!(s.snapshot().to_json(), start);
        let r = s.apply_edit(4, Edit::Undo).unwrap();
        assert!(!r.accepted);
        assert_eq!(s.version(), 4);
        assert_eq!(s.edit_log().len(), 4);
    }

    #[test]
    fn replaying_the_log_reproduces_the_state() {
        let w = world();
        let mut s = open(&w);
        let edits = vec![
            Edit::AddAsset {
                asset_id: "crate".into(),
                asset_type: AssetType::Object,
                location: Vec3::new(3.0, 3.0, 0.0),
                rotation: EulerDeg::yaw(20.0),
                dimensions: Vec3::splat(0.5),
            },
            Edit::ServoCommand(ServoOp::ZoomIn.into()),
            Edit::Undo,
            Edit::SetCameraParam { focal_length_mm: Some(35.0), aperture: None, distance: Some(6.0) },
            Edit::SetPlacement { asset_id: "hero_1".into(), location: None, rotation: Some(EulerDeg::yaw(45.0)) },
        ];
        for (v, e) in edits.into_iter().enumerate() {
            s.apply_edit(v as u64, e).unwrap();
        }
        let mut again = open(&w);
        for (v, e) in s.edit_log().iter().enumerate() {
            again.apply_edit(v as u64, e.clone()).unwrap();
        }
        assert_eq!(again.snapshot().to_json(), s.snapshot().to_json());
        assert_eq!(placement(&s, "crate").dimensions, Vec3::splat(0.5));
        assert_eq!(s.snapshot().camera_state().unwrap().distance, 6.0);
    }

    #[test]
    fn zoom_follows_the_session_step() {
        let w = world();
        let steps = ServoSteps { dolly_base: 2.0, dolly_kappa: 1.0, ..ServoSteps::default() };
        let mut s = Session::open("s", &w, Cursor { scene_id: 1, shot_id: 2 }, Some(steps)).unwrap();
        let d0 = s.snapshot().camera_state().unwrap().distance;
        s.apply_edit(0, Edit::ServoCommand(ServoOp::ZoomIn.into())).unwrap();
        assert!((s.snapshot().camera_state().unwrap().distance - d0 / 2.0).abs() < 1e-12);
    }
}
