//! The continuity memory graph: outline, asset sheet, scene context and shot
//! context, plus the layouts and camera tracks committed through the gate.

mod commit;
mod context;
mod schema;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::camera::KeyframeTrack;
use crate::layout::SceneLayout;

pub use commit::{layout_validator, CommitOutcome, DiagnosticReport, Proposal, ProposalKind, ProposalPayload, Provenance, Verdict};
pub use context::{project_context, ContextPayload, ContextSlice, ContextTask, MetricsHook, ModificationHook, METRICS_FIELD_ALLOWLIST};
pub use schema::{
    Angle, AssetModification, AssetRecord, AssetType, CameraInstruction, CharacterAction, Extra, LightingModification,
    ModificationType, MoveDirection, Movement, SceneDetail, SceneOutline, SceneSetup, SceneType, ShotDistance,
    ShotOutline, ShotRecord, Storyboard,
};

/// Scene-level record as held in the graph.
pub type SceneRecord = SceneDetail;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("storyboard schema error: {0}")]
    Schema(String),
    #[error("unknown reference `{id}` in {context}")]
    Reference { id: String, context: String },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("scene reference chain starting at scene {0} loops")]
    Cycle(u32),
    #[error("unknown scene {0}")]
    UnknownScene(u32),
    #[error("unknown shot {0}/{1}")]
    UnknownShot(u32, u32),
    #[error("invalid target for the {task} context: {reason}")]
    UnknownTaskTarget { task: String, reason: String },
    #[error("validator failed: {0}")]
    ValidatorFailure(String),
}

/// (scene_id, shot_id)
pub type ShotKey = (u32, u32);

/// State accepted through the gatekeeper.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommittedState {
    pub scene_layouts: BTreeMap<u32, SceneLayout>,
    pub shot_layouts: BTreeMap<ShotKey, SceneLayout>,
    pub shot_cameras: BTreeMap<ShotKey, KeyframeTrack>,
}

/// Immutable snapshot of the story state. Mutation happens only through
/// [`ContinuityMemoryGraph::commit`], which returns a new snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityMemoryGraph {
    story_summary: String,
    outline: Vec<SceneOutline>,
    asset_sheet: BTreeMap<String, AssetRecord>,
    scene_context: BTreeMap<u32, SceneRecord>,
    shot_context: BTreeMap<ShotKey, ShotRecord>,
    extra: Extra,
    committed: CommittedState,
    version: u64,
}

/// Parses and validates a storyboard document.
pub fn parse_storyboard(document: &str) -> Result<ContinuityMemoryGraph, GraphError> {
    let sb: Storyboard = serde_json::from_str(document).map_err(|e| GraphError::Schema(e.to_string()))?;
    ContinuityMemoryGraph::from_storyboard(sb)
}

fn reference(id: impl Into<String>, context: impl Into<String>) -> GraphError {
    GraphError::Reference { id: id.into(), context: context.into() }
}

impl ContinuityMemoryGraph {
    pub fn from_storyboard(sb: Storyboard) -> Result<Self, GraphError> {
        let mut asset_sheet = BTreeMap::new();
        for a in sb.asset_sheet {
            let id = a.asset_id.clone();
            if asset_sheet.insert(id.clone(), a).is_some() {
                return Err(GraphError::DuplicateId(id));
            }
        }
        for a in asset_sheet.values() {
            if let Some(r) = &a.reference_character {
                if !asset_sheet.contains_key(r) {
                    return Err(reference(r, format!("reference_character of `{}`", a.asset_id)));
                }
            }
        }

        let mut last_scene = None;
        for s in &sb.storyboard_outline {
            if last_scene.is_some_and(|l| s.scene_id <= l) {
                return Err(order_error(&format!("outline scene {} out of order", s.scene_id), s.scene_id, last_scene));
            }
            last_scene = Some(s.scene_id);
            for (i, shot) in s.shots.iter().enumerate() {
                let expected = i as u32 + 1;
                if shot.shot_id != expected {
                    return Err(if s.shots[..i].iter().any(|x| x.shot_id == shot.shot_id) {
                        GraphError::DuplicateId(format!("shot {}/{}", s.scene_id, shot.shot_id))
                    } else {
                        GraphError::Schema(format!(
                            "scene {} shot ids must run 1, 2, ... without gaps; found {} at position {expected}",
                            s.scene_id, shot.shot_id
                        ))
                    });
                }
            }
        }
        let outline_scenes: BTreeSet<u32> = sb.storyboard_outline.iter().map(|s| s.scene_id).collect();

        let mut scene_context = BTreeMap::new();
        let mut last = None;
        for d in sb.scene_details {
            let id = d.scene_id;
            if scene_context.contains_key(&id) {
                return Err(GraphError::DuplicateId(format!("scene {id}")));
            }
            if last.is_some_and(|l| id <= l) {
                return Err(order_error("scene_details out of order", id, last));
            }
            last = Some(id);
            if !outline_scenes.contains(&id) {
                return Err(reference(id.to_string(), "scene_details (scene missing from the outline)"));
            }
            if let Some(r) = d.scene_setup.reference_scene_id {
                if r >= id || !scene_context.contains_key(&r) {
                    return Err(reference(r.to_string(), format!("reference_scene_id of scene {id}")));
                }
            }
            if d.scene_setup.asset_ids.is_empty() {
                return Err(GraphError::Schema(format!("scene {id} lists no assets")));
            }
            let mut seen = BTreeSet::new();
            for a in &d.scene_setup.asset_ids {
                if !asset_sheet.contains_key(a) {
                    return Err(reference(a, format!("scene {id} asset_ids")));
                }
                if !seen.insert(a) {
                    return Err(GraphError::DuplicateId(format!("asset `{a}` listed twice in scene {id}")));
                }
            }
            scene_context.insert(id, d);
        }
        for s in &outline_scenes {
            if !scene_context.contains_key(s) {
                return Err(GraphError::Schema(format!("scene {s} has no scene_details entry")));
            }
        }

        let outline_shots: BTreeSet<ShotKey> = sb
            .storyboard_outline
            .iter()
            .flat_map(|s| s.shots.iter().map(move |sh| (s.scene_id, sh.shot_id)))
            .collect();
        let mut shot_context = BTreeMap::new();
        for shot in sb.shot_details {
            let key = (shot.scene_id, shot.shot_id);
            if !outline_shots.contains(&key) {
                return Err(reference(format!("{}/{}", key.0, key.1), "shot_details (shot missing from the outline)"));
            }
            if shot_context.contains_key(&key) {
                return Err(GraphError::DuplicateId(format!("shot {}/{}", key.0, key.1)));
            }
            shot_context.insert(key, shot);
        }
        for key in &outline_shots {
            if !shot_context.contains_key(key) {
                return Err(GraphError::Schema(format!("shot {}/{} has no shot_details entry", key.0, key.1)));
            }
        }

        let graph = ContinuityMemoryGraph {
            story_summary: sb.story_summary,
            outline: sb.storyboard_outline,
            asset_sheet,
            scene_context,
            shot_context,
            extra: sb.extra,
            committed: CommittedState::default(),
            version: 0,
        };
        graph.validate_shots()?;
        Ok(graph)
    }

    fn validate_shots(&self) -> Result<(), GraphError> {
        for (&(scene, shot), rec) in &self.shot_context {
            let ctx = format!("shot {scene}/{shot}");
            for m in rec.modifications() {
                if !self.asset_sheet.contains_key(&m.asset_id) {
                    return Err(reference(&m.asset_id, format!("{ctx} asset_modifications")));
                }
            }
            for a in rec.character_actions.iter().flatten() {
                match self.asset_sheet.get(&a.asset_id) {
                    None => return Err(reference(&a.asset_id, format!("{ctx} character_actions"))),
                    Some(r) if r.asset_type != AssetType::Character => {
                        return Err(GraphError::Schema(format!(
                            "{ctx}: character action on `{}`, which is not a character",
                            a.asset_id
                        )))
                    }
                    _ => {}
                }
            }
            let cam = &rec.camera_instruction;
            if cam.movement.needs_direction() != cam.direction.is_some() {
                return Err(GraphError::Schema(format!(
                    "{ctx}: direction must be set exactly when movement is pan or orbit"
                )));
            }
            let members = self.members_at(scene, shot)?;
            for f in &cam.focus_on_ids {
                if !members.contains(f) {
                    return Err(reference(f, format!("{ctx} focus_on_ids (not on stage)")));
                }
            }
        }
        Ok(())
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn story_summary(&self) -> &str {
        &self.story_summary
    }

    pub fn outline(&self) -> &[SceneOutline] {
        &self.outline
    }

    pub fn asset_sheet(&self) -> &BTreeMap<String, AssetRecord> {
        &self.asset_sheet
    }

    pub fn asset(&self, id: &str) -> Option<&AssetRecord> {
        self.asset_sheet.get(id)
    }

    pub fn scene_ids(&self) -> Vec<u32> {
        self.scene_context.keys().copied().collect()
    }

    pub fn scene(&self, scene_id: u32) -> Option<&SceneRecord> {
        self.scene_context.get(&scene_id)
    }

    pub fn shot(&self, scene_id: u32, shot_id: u32) -> Option<&ShotRecord> {
        self.shot_context.get(&(scene_id, shot_id))
    }

    /// Shots of a scene in order.
    pub fn shots_of(&self, scene_id: u32) -> Vec<&ShotRecord> {
        self.shot_context.range((scene_id, 0)..=(scene_id, u32::MAX)).map(|(_, v)| v).collect()
    }

    pub fn shot_keys(&self) -> Vec<ShotKey> {
        self.shot_context.keys().copied().collect()
    }

    pub fn committed(&self) -> &CommittedState {
        &self.committed
    }

    /// Scene with its reference chain flattened. Fields left empty locally
    /// (wall description, empty prose, missing extra keys) come from the
    /// nearest ancestor that defines them.
    pub fn resolve_scene(&self, scene_id: u32) -> Result<SceneRecord, GraphError> {
        let mut chain = Vec::new();
        let mut seen = BTreeSet::new();
        let mut cur = Some(scene_id);
        while let Some(id) = cur {
            if !seen.insert(id) {
                return Err(GraphError::Cycle(scene_id));
            }
            let rec = self.scene_context.get(&id).ok_or(GraphError::UnknownScene(id))?;
            chain.push(rec);
            cur = rec.scene_setup.reference_scene_id;
        }
        let mut out = chain[0].clone();
        for ancestor in &chain[1..] {
            inherit(&mut out.scene_setup, &ancestor.scene_setup);
            for (k, v) in &ancestor.extra {
                out.extra.entry(k.clone()).or_insert_with(|| v.clone());
            }
        }
        Ok(out)
    }

    /// Assets on stage during a shot. Scene assets whose first modification in
    /// the scene is an `add` enter at that shot; `add` and `remove` then carry
    /// forward in shot order until reversed.
    pub fn members_at(&self, scene_id: u32, shot_id: u32) -> Result<BTreeSet<String>, GraphError> {
        let scene = self.scene_context.get(&scene_id).ok_or(GraphError::UnknownScene(scene_id))?;
        if !self.shot_context.contains_key(&(scene_id, shot_id)) {
            return Err(GraphError::UnknownShot(scene_id, shot_id));
        }
        let shots = self.shots_of(scene_id);
        let mut first_kind: BTreeMap<&str, ModificationType> = BTreeMap::new();
        for s in &shots {
            for m in s.modifications() {
                first_kind.entry(m.asset_id.as_str()).or_insert(m.modification_type);
            }
        }
        let mut members: BTreeSet<String> = scene
            .scene_setup
            .asset_ids
            .iter()
            .filter(|a| first_kind.get(a.as_str()) != Some(&ModificationType::Add))
            .cloned()
            .collect();
        for s in shots.iter().take_while(|s| s.shot_id <= shot_id) {
            for m in s.modifications() {
                match m.modification_type {
                    ModificationType::Add => {
                        members.insert(m.asset_id.clone());
                    }
                    ModificationType::Remove => {
                        members.remove(&m.asset_id);
                    }
                    ModificationType::Transform => {}
                }
            }
        }
        Ok(members)
    }

    /// Every asset that is on stage in at least one shot of the scene.
    pub fn scene_universe(&self, scene_id: u32) -> Result<BTreeSet<String>, GraphError> {
        let scene = self.scene_context.get(&scene_id).ok_or(GraphError::UnknownScene(scene_id))?;
        let mut all: BTreeSet<String> = scene.scene_setup.asset_ids.iter().cloned().collect();
        for s in self.shots_of(scene_id) {
            all.extend(s.modifications().iter().filter(|m| m.modification_type == ModificationType::Add).map(|m| m.asset_id.clone()));
        }
        Ok(all)
    }

    /// Canonical document form; asset sheet ordered by id.
    pub fn to_storyboard(&self) -> Storyboard {
        Storyboard {
            story_summary: self.story_summary.clone(),
            storyboard_outline: self.outline.clone(),
            asset_sheet: self.asset_sheet.values().cloned().collect(),
            scene_details: self.scene_context.values().cloned().collect(),
            shot_details: self.shot_context.values().cloned().collect(),
            extra: self.extra.clone(),
        }
    }

    pub fn to_storyboard_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_storyboard()).expect("storyboard serializes")
    }
}

fn order_error(what: &str, id: u32, last: Option<u32>) -> GraphError {
    if last == Some(id) {
        GraphError::DuplicateId(format!("scene {id}"))
    } else {
        GraphError::Schema(format!("{what}: scene ids must be strictly increasing"))
    }
}

fn blank(v: &Value) -> bool {
    match v {
        Value::Null => true,
        Value::String(s) => s.trim().is_empty(),
        _ => false,
    }
}

fn inherit(local: &mut SceneSetup, from: &SceneSetup) {
    if local.wall_description.is_none() {
        local.wall_description = from.wall_description.clone();
    }
    if local.lighting_description.trim().is_empty() {
        local.lighting_description = from.lighting_description.clone();
    }
    if local.ground_description.trim().is_empty() {
        local.ground_description = from.ground_description.clone();
    }
    if blank(&local.layout_description) {
        local.layout_description = from.layout_description.clone();
    }
    for (k, v) in &from.extra {
        local.extra.entry(k.clone()).or_insert_with(|| v.clone());
    }
}

/// Serialized form of a graph snapshot including committed state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub version: u64,
    pub storyboard: Storyboard,
    pub scene_layouts: Vec<SceneLayoutEntry>,
    pub shot_layouts: Vec<ShotLayoutEntry>,
    pub shot_cameras: Vec<ShotCameraEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneLayoutEntry {
    pub scene_id: u32,
    pub layout: SceneLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotLayoutEntry {
    pub scene_id: u32,
    pub shot_id: u32,
    pub layout: SceneLayout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotCameraEntry {
    pub scene_id: u32,
    pub shot_id: u32,
    pub track: KeyframeTrack,
}

impl Serialize for ContinuityMemoryGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let c = &self.committed;
        GraphDocument {
            version: self.version,
            storyboard: self.to_storyboard(),
            scene_layouts: c
                .scene_layouts
                .iter()
                .map(|(&scene_id, layout)| SceneLayoutEntry { scene_id, layout: layout.clone() })
                .collect(),
            shot_layouts: c
                .shot_layouts
                .iter()
                .map(|(&(scene_id, shot_id), layout)| ShotLayoutEntry { scene_id, shot_id, layout: layout.clone() })
                .collect(),
            shot_cameras: c
                .shot_cameras
                .iter()
                .map(|(&(scene_id, shot_id), track)| ShotCameraEntry { scene_id, shot_id, track: track.clone() })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ContinuityMemoryGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = GraphDocument::deserialize(d)?;
        let mut g = ContinuityMemoryGraph::from_storyboard(doc.storyboard).map_err(serde::de::Error::custom)?;
        g.version = doc.version;
        g.committed.scene_layouts = doc.scene_layouts.into_iter().map(|e| (e.scene_id, e.layout)).collect();
        g.committed.shot_layouts =
            doc.shot_layouts.into_iter().map(|e| ((e.scene_id, e.shot_id), e.layout)).collect();
        g.committed.shot_cameras =
            doc.shot_cameras.into_iter().map(|e| ((e.scene_id, e.shot_id), e.track)).collect();
        Ok(g)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use serde_json::json;

    pub(crate) fn doc(scenes: Value, shots: Value, assets: Value, outline: Value) -> String {
        json!({
            "story_summary": "s",
            "storyboard_outline": outline,
            "asset_sheet": assets,
            "scene_details": scenes,
            "shot_details": shots,
        })
        .to_string()
    }

    pub(crate) fn asset(id: &str, kind: &str) -> Value {
        json!({"asset_id": id, "asset_type": kind, "description": format!("the {id}"),
               "reference_character": null, "text_to_image_prompt": "prompt"})
    }

    pub(crate) fn scene(id: u32, reference: Option<u32>, assets: &[&str]) -> Value {
        json!({"scene_id": id, "scene_setup": {
            "reference_scene_id": reference, "asset_ids": assets, "scene_type": "indoor",
            "layout_description": "layout", "lighting_description": "light",
            "ground_description": "floor", "wall_description": null}})
    }

    pub(crate) fn shot(scene: u32, shot: u32, focus: &[&str]) -> Value {
        json!({"scene_id": scene, "shot_id": shot, "asset_modifications": null, "character_actions": null,
               "camera_instruction": {"focus_on_ids": focus, "angle": "eye-level", "distance": "medium shot",
                                      "movement": "static", "direction": null, "description": "d"},
               "sound_effect": null})
    }

    pub(crate) fn outline(shape: &[(u32, u32)]) -> Value {
        Value::Array(
            shape
                .iter()
                .map(|&(s, n)| {
                    json!({"scene_id": s, "scene_description": "x",
                           "shots": (1..=n).map(|i| json!({"shot_id": i, "shot_description": "y"})).collect::<Vec<_>>()})
                })
                .collect(),
        )
    }

    fn minimal() -> String {
        doc(json!([scene(1, None, &["rick"])]), json!([shot(1, 1, &["rick"])]), json!([asset("rick", "character")]), outline(&[(1, 1)]))
    }

    #[test]
    fn minimal_document() {
        let g = parse_storyboard(&minimal()).unwrap();
        assert_eq!(g.scene_ids(), vec![1]);
        assert_eq!(g.shot_keys(), vec![(1, 1)]);
        assert_eq!(g.asset_sheet().len(), 1);
        assert_eq!(g.version(), 0);
    }

    #[test]
    fn ghost_asset_is_named() {
        let text = doc(
            json!([scene(1, None, &["rick"]), scene(2, Some(1), &["rick", "ghost"])]),
            json!([shot(1, 1, &["rick"]), shot(2, 1, &["rick"])]),
            json!([asset("rick", "character")]),
            outline(&[(1, 1), (2, 1)]),
        );
        match parse_storyboard(&text).unwrap_err() {
            GraphError::Reference { id, .. } => assert_eq!(id, "ghost"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn forward_reference_rejected() {
        let text = doc(
            json!([scene(1, Some(1), &["rick"])]),
            json!([shot(1, 1, &["rick"])]),
            json!([asset("rick", "character")]),
            outline(&[(1, 1)]),
        );
        assert!(matches!(parse_storyboard(&text), Err(GraphError::Reference { .. })));
    }

    #[test]
    fn duplicates_and_order() {
        let dup_asset = doc(
            json!([scene(1, None, &["rick"])]),
            json!([shot(1, 1, &["rick"])]),
            json!([asset("rick", "character"), asset("rick", "object")]),
            outline(&[(1, 1)]),
        );
        assert_eq!(parse_storyboard(&dup_asset).unwrap_err(), GraphError::DuplicateId("rick".into()));

        let mut o = outline(&[(1, 2)]);
        o[0]["shots"][1]["shot_id"] = json!(3);
        let gap = doc(
            json!([scene(1, None, &["rick"])]),
            json!([shot(1, 1, &["rick"]), shot(1, 3, &["rick"])]),
            json!([asset("rick", "character")]),
            o,
        );
        assert!(matches!(parse_storyboard(&gap), Err(GraphError::Schema(_))));
    }

    #[test]
    fn bad_enum_is_schema_error() {
        let text = minimal().replace("eye-level", "eye level");
        assert!(matches!(parse_storyboard(&text), Err(GraphError::Schema(_))));
    }

    #[test]
    fn direction_iff_pan_or_orbit() {
        let mut s = shot(1, 1, &["rick"]);
        s["camera_instruction"]["movement"] = json!("orbit");
        let text = doc(json!([scene(1, None, &["rick"])]), json!([s]), json!([asset("rick", "character")]), outline(&[(1, 1)]));
        assert!(matches!(parse_storyboard(&text), Err(GraphError::Schema(_))));
    }

    #[test]
    fn membership_is_cumulative() {
        let mut s2 = shot(1, 2, &["rick"]);
        s2["asset_modifications"] = json!([{"asset_id": "sam", "modification_type": "remove", "description": "leaves"}]);
        let mut s3 = shot(1, 3, &["rick", "ilsa"]);
        s3["asset_modifications"] = json!([{"asset_id": "ilsa", "modification_type": "add", "description": "enters"}]);
        let text = doc(
            json!([scene(1, None, &["rick", "sam", "ilsa"])]),
            json!([shot(1, 1, &["rick", "sam"]), s2, s3]),
            json!([asset("rick", "character"), asset("sam", "character"), asset("ilsa", "character")]),
            outline(&[(1, 3)]),
        );
        let g = parse_storyboard(&text).unwrap();
        let names = |v: BTreeSet<String>| v.into_iter().collect::<Vec<_>>();
        assert_eq!(names(g.members_at(1, 1).unwrap()), ["rick", "sam"]);
        assert_eq!(names(g.members_at(1, 2).unwrap()), ["rick"]);
        assert_eq!(names(g.members_at(1, 3).unwrap()), ["ilsa", "rick"]);
        assert_eq!(g.scene_universe(1).unwrap().len(), 3);
    }

    #[test]
    fn focus_must_be_on_stage() {
        let mut s2 = shot(1, 2, &["sam"]);
        s2["asset_modifications"] = json!([{"asset_id": "sam", "modification_type": "remove", "description": "x"}]);
        let text = doc(
            json!([scene(1, None, &["rick", "sam"])]),
            json!([shot(1, 1, &["rick"]), s2]),
            json!([asset("rick", "character"), asset("sam", "character")]),
            outline(&[(1, 2)]),
        );
        assert!(matches!(parse_storyboard(&text), Err(GraphError::Reference { .. })));
    }

    #[test]
    fn resolve_inherits_walls() {
        let mut s1 = scene(1, None, &["rick"]);
        s1["scene_setup"]["wall_description"] = json!("plaster");
        let text = doc(
            json!([s1, scene(2, Some(1), &["rick"])]),
            json!([shot(1, 1, &["rick"]), shot(2, 1, &["rick"])]),
            json!([asset("rick", "character")]),
            outline(&[(1, 1), (2, 1)]),
        );
        let g = parse_storyboard(&text).unwrap();
        assert_eq!(g.resolve_scene(1).unwrap(), g.scene(1).unwrap().clone());
        assert_eq!(g.resolve_scene(2).unwrap().scene_setup.wall_description.as_deref(), Some("plaster"));
        assert_eq!(g.resolve_scene(2).unwrap().scene_setup.reference_scene_id, Some(1));
    }

    /// Walks the chain one link at a time and takes each field from the first
    /// scene that defines it.
    fn brute_force_wall(g: &ContinuityMemoryGraph, id: u32) -> Option<String> {
        let mut cur = g.scene(id);
        while let Some(s) = cur {
            if let Some(w) = &s.scene_setup.wall_description {
                return Some(w.clone());
            }
            cur = s.scene_setup.reference_scene_id.and_then(|r| g.scene(r));
        }
        None
    }

    #[test]
    fn three_link_chain_matches_walk() {
        let mut s1 = scene(1, None, &["rick"]);
        s1["scene_setup"]["wall_description"] = json!("brick");
        s1["scene_setup"]["mood"] = json!("tense");
        let mut s2 = scene(2, Some(1), &["rick"]);
        s2["scene_setup"]["lighting_description"] = json!("");
        let mut s3 = scene(3, Some(2), &["rick"]);
        s3["scene_setup"]["ground_description"] = json!(" ");
        let text = doc(
            json!([s1, s2, s3]),
            json!([shot(1, 1, &["rick"]), shot(2, 1, &["rick"]), shot(3, 1, &["rick"])]),
            json!([asset("rick", "character")]),
            outline(&[(1, 1), (2, 1), (3, 1)]),
        );
        let g = parse_storyboard(&text).unwrap();
        for id in 1..=3 {
            let r = g.resolve_scene(id).unwrap();
            assert_eq!(r.scene_setup.wall_description, brute_force_wall(&g, id));
            assert_eq!(r.scene_setup.extra.get("mood"), Some(&json!("tense")));
        }
        let r3 = g.resolve_scene(3).unwrap();
        assert_eq!(r3.scene_setup.ground_description, "floor");
        assert_eq!(r3.scene_setup.lighting_description, "light");
        let a = serde_json::to_string(&g.resolve_scene(3).unwrap()).unwrap();
        let b = serde_json::to_string(&g.resolve_scene(3).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn round_trip_is_field_for_field() {
        let mut a = asset("rick", "character");
        a["tags"] = json!(["x"]);
        let text = doc(json!([scene(1, None, &["rick"])]), json!([shot(1, 1, &["rick"])]), json!([a]), outline(&[(1, 1)]));
        let g = parse_storyboard(&text).unwrap();
        let again = parse_storyboard(&g.to_storyboard_json()).unwrap();
        assert_eq!(g, again);
        let full = serde_json::to_string(&g).unwrap();
        let back: ContinuityMemoryGraph = serde_json::from_str(&full).unwrap();
        assert_eq!(back, g);
    }
}
