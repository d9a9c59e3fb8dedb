//! Snapshot documents and the top-down SVG view.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{PipelineError, SceneWorld, ShotSnapshot, StoryWorld};
use crate::camera::{CameraState, KeyframeTrack};
use crate::geometry::{forward_vector, EulerDeg, Placement, Vec3};
use crate::layout::{Diagnostic, SceneShell, SceneSize, SpatialConstraint};
use crate::memory::{AssetType, SceneType};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPlacement {
    pub asset_id: String,
    pub asset_type: Option<AssetType>,
    pub location: Vec3,
    pub rotation: EulerDeg,
    pub dimensions: Vec3,
}

impl SnapshotPlacement {
    pub fn placement(&self) -> Placement {
        Placement::new(self.location, self.rotation, self.dimensions)
    }
}

/// Everything needed to draw or re-load one shot. Lists are sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDocument {
    pub scene_id: u32,
    pub shot_id: u32,
    pub scene_type: SceneType,
    pub scene_size: SceneSize,
    pub shell: SceneShell,
    pub placements: Vec<SnapshotPlacement>,
    pub constraints: Vec<SpatialConstraint>,
    pub camera: Option<KeyframeTrack>,
    pub expected: Vec<String>,
    pub detected: Vec<String>,
    pub diagnostics: Vec<Diagnostic>,
}

impl SnapshotDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Io(e.to_string()))
    }

    pub fn camera_state(&self) -> Option<CameraState> {
        self.camera.as_ref().and_then(KeyframeTrack::first_state)
    }
}

pub fn snapshot_document(scene: &SceneWorld, shot: &ShotSnapshot) -> SnapshotDocument {
    SnapshotDocument {
        scene_id: shot.scene_id,
        shot_id: shot.shot_id,
        scene_type: scene.scene_type,
        scene_size: shot.layout.scene_size,
        shell: scene.shell.clone(),
        placements: shot
            .layout
            .placements
            .iter()
            .map(|(id, p)| SnapshotPlacement {
                asset_id: id.clone(),
                asset_type: scene.asset_type(id),
                location: p.location,
                rotation: p.rotation,
                dimensions: p.dimensions,
            })
            .collect(),
        constraints: shot.layout.constraints.clone(),
        camera: shot.camera.as_ref().map(|c| c.track.clone()),
        expected: shot.expected.clone(),
        detected: shot.detected.clone(),
        diagnostics: shot.advisories.clone(),
    }
}

pub fn export_snapshot(world: &StoryWorld, scene_id: u32, shot_id: u32) -> Result<SnapshotDocument, PipelineError> {
    let (scene, shot) = world.shot(scene_id, shot_id)?;
    Ok(snapshot_document(scene, shot))
}

pub fn render_topdown(world: &StoryWorld, scene_id: u32, shot_id: u32) -> Result<String, PipelineError> {
    Ok(render_svg(&export_snapshot(world, scene_id, shot_id)?))
}

const PX_PER_M: f64 = 40.0;
const MARGIN_PX: f64 = 20.0;
const TICK_M: f64 = 0.3;
const WEDGE_MIN_M: f64 = 1.0;

struct Canvas {
    size: SceneSize,
}

impl Canvas {
    fn x(&self, x: f64) -> f64 {
        MARGIN_PX + (x - self.size.x_negative) * PX_PER_M
    }

    /// +Y points up the page.
    fn y(&self, y: f64) -> f64 {
        MARGIN_PX + (self.size.y - y) * PX_PER_M
    }

    fn pt(&self, x: f64, y: f64) -> String {
        format!("{:.3},{:.3}", self.x(x), self.y(y))
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Orthographic view from above: bounds, walls, footprints with a tick along
/// each asset's forward direction, and the camera with its horizontal field.
pub fn render_svg(doc: &SnapshotDocument) -> String {
    let c = Canvas { size: doc.scene_size };
    let s = doc.scene_size;
    let w = (s.x - s.x_negative) * PX_PER_M + 2.0 * MARGIN_PX;
    let h = (s.y - s.y_negative) * PX_PER_M + 2.0 * MARGIN_PX;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.3}" height="{h:.3}" viewBox="0 0 {w:.3} {h:.3}" data-scene="{}" data-shot="{}">"#,
        doc.scene_id, doc.shot_id
    );
    let _ = writeln!(
        out,
        r#"  <rect class="bounds" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="black"/>"#,
        c.x(s.x_negative),
        c.y(s.y),
        (s.x - s.x_negative) * PX_PER_M,
        (s.y - s.y_negative) * PX_PER_M
    );
    for wall in &doc.shell.walls {
        let b = wall.aabb;
        let _ = writeln!(
            out,
            r#"  <rect class="wall" x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="gray"/>"#,
            c.x(b.min.x),
            c.y(b.max.y),
            (b.max.x - b.min.x) * PX_PER_M,
            (b.max.y - b.min.y) * PX_PER_M
        );
    }
    for p in &doc.placements {
        let pl = p.placement();
        let k = pl.world_corners();
        let pts = [k[0], k[1], k[3], k[2]].iter().map(|v| c.pt(v.x, v.y)).collect::<Vec<_>>().join(" ");
        let class = match p.asset_type {
            Some(AssetType::Character) => "character",
            Some(AssetType::Object) => "object",
            None => "asset",
        };
        let id = escape(&p.asset_id);
        let _ = writeln!(out, r#"  <polygon class="{class}" data-id="{id}" points="{pts}" fill="none" stroke="blue"/>"#);
        let f = forward_vector(p.rotation.z);
        let reach = p.dimensions.y / 2.0 + TICK_M;
        let (x0, y0) = (p.location.x, p.location.y);
        let _ = writeln!(
            out,
            r#"  <line class="forward" data-id="{id}" x1="{:.3}" y1="{:.3}" x2="{:.3}" y2="{:.3}" stroke="red"/>"#,
            c.x(x0),
            c.y(y0),
            c.x(x0 + f[0] * reach),
            c.y(y0 + f[1] * reach)
        );
        let _ = writeln!(out, r#"  <text x="{:.3}" y="{:.3}" font-size="10">{id}</text>"#, c.x(x0), c.y(y0) - 4.0);
    }
    if let Some(cam) = doc.camera_state() {
        let p = cam.position();
        let _ = writeln!(out, r#"  <circle class="camera" cx="{:.3}" cy="{:.3}" r="5" fill="green"/>"#, c.x(p.x), c.y(p.y));
        let look = cam.rotation.rotate(Vec3::new(0.0, 0.0, -1.0));
        let flat = look.x.hypot(look.y);
        if flat > 1e-6 {
            let half = (cam.intrinsics.tan_half_fov() * cam.intrinsics.aspect()).atan();
            let heading = look.y.atan2(look.x);
            let len = cam.distance.max(WEDGE_MIN_M);
            let edge = |a: f64| c.pt(p.x + len * a.cos(), p.y + len * a.sin());
            let _ = writeln!(
                out,
                r#"  <polygon class="frustum" points="{} {} {}" fill="green" fill-opacity="0.15" stroke="green"/>"#,
                c.pt(p.x, p.y),
                edge(heading - half),
                edge(heading + half)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::generate_scene_shell;

    fn doc(placements: Vec<SnapshotPlacement>, scene_type: SceneType) -> SnapshotDocument {
        let size = SceneSize::symmetric(5.0);
        SnapshotDocument {
            scene_id: 1,
            shot_id: 1,
            scene_type,
            scene_size: size,
            shell: generate_scene_shell(&size, scene_type),
            placements,
            constraints: Vec::new(),
            camera: None,
            expected: Vec::new(),
            detected: Vec::new(),
            diagnostics: Vec::new(),
        }
    }

    fn attr(line: &str, name: &str) -> f64 {
        let key = format!(" {name}=\"");
        let start = line.find(&key).unwrap() + key.len();
        line[start..].split('"').next().unwrap().parse().unwrap()
    }

    #[test]
    fn empty_outdoor_scene_is_bounds_only() {
        let svg = render_svg(&doc(Vec::new(), SceneType::Outdoor));
        assert_eq!(svg.matches("<rect").count(), 1);
        assert!(svg.contains(r#"class="bounds""#));
        for tag in ["<polygon", "<line", "<circle", "<text"] {
            assert!(!svg.contains(tag), "{tag}");
        }
        // 10 m at 40 px/m plus margins
        assert!(svg.contains(r#"width="440.000""#));
    }

    #[test]
    fn quarter_turn_ticks_toward_plus_x() {
        let p = SnapshotPlacement {
            asset_id: "chair".into(),
            asset_type: Some(AssetType::Object),
            location: Vec3::new(1.0, 2.0, 0.0),
            rotation: EulerDeg::yaw(90.0),
            dimensions: Vec3::new(0.5, 0.5, 1.0),
        };
        let svg = render_svg(&doc(vec![p], SceneType::Indoor));
        let line = svg.lines().find(|l| l.contains(r#"class="forward""#)).unwrap();
        let (x1, y1, x2, y2) = (attr(line, "x1"), attr(line, "y1"), attr(line, "x2"), attr(line, "y2"));
        assert!(x2 > x1);
        assert!((y2 - y1).abs() < 1e-3);
        assert!((x2 - x1 - (0.25 + TICK_M) * PX_PER_M).abs() < 1e-3);
        assert_eq!(svg.matches(r#"class="wall""#).count(), 4);
    }

    #[test]
    fn rendering_is_repeatable() {
        let p = SnapshotPlacement {
            asset_id: "a<b".into(),
            asset_type: None,
            location: Vec3::new(-1.0, 0.5, 0.0),
            rotation: EulerDeg::yaw(33.0),
            dimensions: Vec3::new(0.7, 0.4, 1.0),
        };
        let d = doc(vec![p], SceneType::Indoor);
        assert_eq!(render_svg(&d), render_svg(&d));
        assert!(render_svg(&d).contains("a&lt;b"));
    }
}
