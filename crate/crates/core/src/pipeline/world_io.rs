//! World directory layout: `world.json`, one snapshot and one SVG per shot,
//! and `metrics.json`.

use std::fs;
use std::path::Path;

use super::{compute_metrics, render_svg, snapshot_document, PipelineError, StoryWorld};

pub const WORLD_FILE: &str = "world.json";

pub fn snapshot_file_name(scene_id: u32, shot_id: u32) -> String {
    format!("scene_{scene_id}_shot_{shot_id}")
}

fn io(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io(format!("{}: {e}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<(), PipelineError> {
    fs::write(path, text).map_err(|e| io(path, e))
}

pub fn write_world(world: &StoryWorld, dir: &Path) -> Result<(), PipelineError> {
    for sub in ["snapshots", "topdown"] {
        let d = dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| io(&d, e))?;
    }
    let json = serde_json::to_string_pretty(world).map_err(|e| io(dir, e))?;
    write(&dir.join(WORLD_FILE), &json)?;
    for scene in world.scenes.values() {
        for shot in scene.shots.values() {
            let doc = snapshot_document(scene, shot);
            let name = snapshot_file_name(shot.scene_id, shot.shot_id);
            write(&dir.join("snapshots").join(format!("{name}.json")), &doc.to_json())?;
            write(&dir.join("topdown").join(format!("{name}.svg")), &render_svg(&doc))?;
        }
    }
    let metrics = serde_json::to_string_pretty(&compute_metrics(world, None)).map_err(|e| io(dir, e))?;
    write(&dir.join("metrics.json"), &metrics)
}

pub fn read_world(dir: &Path) -> Result<StoryWorld, PipelineError> {
    let path = dir.join(WORLD_FILE);
    let text = fs::read_to_string(&path).map_err(|e| io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| io(&path, e))
}
