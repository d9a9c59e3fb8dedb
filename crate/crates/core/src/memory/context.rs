//! Task-specific projections of the graph.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AssetRecord, AssetType, CameraInstruction, ContinuityMemoryGraph, GraphError, ModificationType, SceneOutline, SceneRecord, ShotRecord};
use crate::layout::SceneLayout;

/// Every JSON key a metrics slice may contain. Anything else in a metrics
/// payload (prompts, descriptions, prose) is a leak.
pub const METRICS_FIELD_ALLOWLIST: &[&str] = &[
    "kind",
    "shots",
    "scene_id",
    "shot_id",
    "focus_on_ids",
    "expected_character_ids",
    "asset_modifications",
    "asset_id",
    "modification_type",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextTask {
    Layout,
    Camera,
    Asset,
    Metrics,
}

impl fmt::Display for ContextTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContextTask::Layout => "layout",
            ContextTask::Camera => "camera",
            ContextTask::Asset => "asset",
            ContextTask::Metrics => "metrics",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModificationHook {
    pub asset_id: String,
    pub modification_type: ModificationType,
}

/// What the metrics need from one shot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsHook {
    pub scene_id: u32,
    pub shot_id: u32,
    pub focus_on_ids: Vec<String>,
    /// Characters on stage during the shot.
    pub expected_character_ids: Vec<String>,
    pub asset_modifications: Vec<ModificationHook>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContextPayload {
    Layout {
        scene: SceneRecord,
        assets: Vec<AssetRecord>,
        shots: Vec<ShotRecord>,
        /// Committed layout of the referenced scene, if there is one.
        reference_layout: Option<SceneLayout>,
    },
    Camera {
        camera_instruction: CameraInstruction,
        focus_assets: Vec<AssetRecord>,
    },
    Asset {
        outline: Vec<SceneOutline>,
        assets: Vec<AssetRecord>,
    },
    Metrics {
        shots: Vec<MetricsHook>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSlice {
    pub task: ContextTask,
    pub scene_id: Option<u32>,
    pub shot_id: Option<u32>,
    pub payload: ContextPayload,
}

fn bad_target(task: ContextTask, reason: impl Into<String>) -> GraphError {
    GraphError::UnknownTaskTarget { task: task.to_string(), reason: reason.into() }
}

fn records(graph: &ContinuityMemoryGraph, ids: impl IntoIterator<Item = impl AsRef<str>>) -> Vec<AssetRecord> {
    let ids: BTreeSet<String> = ids.into_iter().map(|s| s.as_ref().to_string()).collect();
    ids.iter().filter_map(|id| graph.asset(id).cloned()).collect()
}

/// Minimal sub-records for a task. Layout needs a scene, camera needs a shot,
/// asset and metrics take an optional scene filter.
pub fn project_context(
    graph: &ContinuityMemoryGraph,
    task: ContextTask,
    scene_id: Option<u32>,
    shot_id: Option<u32>,
) -> Result<ContextSlice, GraphError> {
    if let Some(s) = scene_id {
        if graph.scene(s).is_none() {
            return Err(bad_target(task, format!("scene {s} does not exist")));
        }
    }
    let payload = match task {
        ContextTask::Layout => {
            let s = scene_id.ok_or_else(|| bad_target(task, "a scene id is required"))?;
            if shot_id.is_some() {
                return Err(bad_target(task, "layout works on whole scenes; drop the shot id"));
            }
            let scene = graph.resolve_scene(s)?;
            let assets = records(graph, graph.scene_universe(s)?);
            let shots = graph.shots_of(s).into_iter().cloned().collect();
            let reference_layout = scene
                .scene_setup
                .reference_scene_id
                .and_then(|r| graph.committed().scene_layouts.get(&r).cloned());
            ContextPayload::Layout { scene, assets, shots, reference_layout }
        }
        ContextTask::Camera => {
            let (Some(s), Some(n)) = (scene_id, shot_id) else {
                return Err(bad_target(task, "both scene and shot ids are required"));
            };
            let shot = graph.shot(s, n).ok_or_else(|| bad_target(task, format!("shot {s}/{n} does not exist")))?;
            let ci = shot.camera_instruction.clone();
            let focus_assets = records(graph, &ci.focus_on_ids);
            ContextPayload::Camera { camera_instruction: ci, focus_assets }
        }
        ContextTask::Asset => {
            if shot_id.is_some() {
                return Err(bad_target(task, "assets are selected per scene, not per shot"));
            }
            match scene_id {
                Some(s) => ContextPayload::Asset {
                    outline: graph.outline().iter().filter(|o| o.scene_id == s).cloned().collect(),
                    assets: records(graph, graph.scene_universe(s)?),
                },
                None => ContextPayload::Asset {
                    outline: graph.outline().to_vec(),
                    assets: graph.asset_sheet().values().cloned().collect(),
                },
            }
        }
        ContextTask::Metrics => {
            let mut shots = Vec::new();
            for (sc, sh) in graph.shot_keys() {
                if scene_id.is_some_and(|s| s != sc) || shot_id.is_some_and(|n| n != sh) {
                    continue;
                }
                let rec = graph.shot(sc, sh).expect("listed key");
                let expected_character_ids = graph
                    .members_at(sc, sh)?
                    .into_iter()
                    .filter(|id| graph.asset(id).is_some_and(|a| a.asset_type == AssetType::Character))
                    .collect();
                shots.push(MetricsHook {
                    scene_id: sc,
                    shot_id: sh,
                    focus_on_ids: rec.camera_instruction.focus_on_ids.clone(),
                    expected_character_ids,
                    asset_modifications: rec
                        .modifications()
                        .iter()
                        .map(|m| ModificationHook { asset_id: m.asset_id.clone(), modification_type: m.modification_type })
                        .collect(),
                });
            }
            if shots.is_empty() {
                return Err(bad_target(task, "no shot matches the filter"));
            }
            ContextPayload::Metrics { shots }
        }
    };
    Ok(ContextSlice { task, scene_id, shot_id, payload })
}
