//! Wire types of the storyboard document.
//!
//! Field names and enum spellings follow the director's output schema
//! exactly. Unknown keys are captured in `extra` and written back verbatim.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub type Extra = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssetType {
    Character,
    Object,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Angle {
    #[serde(rename = "eye-level")]
    EyeLevel,
    #[serde(rename = "high angle")]
    High,
    #[serde(rename = "low angle")]
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShotDistance {
    #[serde(rename = "close-up")]
    CloseUp,
    #[serde(rename = "medium shot")]
    Medium,
    #[serde(rename = "long shot")]
    Long,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Movement {
    #[serde(rename = "static")]
    Static,
    #[serde(rename = "pan")]
    Pan,
    #[serde(rename = "orbit")]
    Orbit,
    #[serde(rename = "zoom in")]
    ZoomIn,
    #[serde(rename = "zoom out")]
    ZoomOut,
}

impl Movement {
    pub fn needs_direction(self) -> bool {
        matches!(self, Movement::Pan | Movement::Orbit)
    }
}

impl fmt::Display for Movement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Movement::Static => "static",
            Movement::Pan => "pan",
            Movement::Orbit => "orbit",
            Movement::ZoomIn => "zoom in",
            Movement::ZoomOut => "zoom out",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoveDirection {
    Left,
    Right,
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SceneType {
    Indoor,
    Outdoor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModificationType {
    Add,
    Remove,
    Transform,
}

impl fmt::Display for ModificationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModificationType::Add => "add",
            ModificationType::Remove => "remove",
            ModificationType::Transform => "transform",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotOutline {
    pub shot_id: u32,
    pub shot_description: String,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneOutline {
    pub scene_id: u32,
    pub scene_description: String,
    pub shots: Vec<ShotOutline>,
    #[serde(flatten)]
    pub extra: Extra,
}

/// One unique character or object of the story.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetRecord {
    pub asset_id: String,
    pub asset_type: AssetType,
    pub description: String,
    #[serde(default)]
    pub reference_character: Option<String>,
    #[serde(default)]
    pub text_to_image_prompt: String,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSetup {
    #[serde(default)]
    pub reference_scene_id: Option<u32>,
    pub asset_ids: Vec<String>,
    pub scene_type: SceneType,
    /// Usually prose; planner outputs sometimes embed a structured layout here.
    pub layout_description: Value,
    pub lighting_description: String,
    pub ground_description: String,
    #[serde(default)]
    pub wall_description: Option<String>,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDetail {
    pub scene_id: u32,
    pub scene_setup: SceneSetup,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetModification {
    pub asset_id: String,
    pub modification_type: ModificationType,
    #[serde(default)]
    pub description: Option<String>,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterAction {
    pub asset_id: String,
    pub action_description: String,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraInstruction {
    pub focus_on_ids: Vec<String>,
    pub angle: Angle,
    pub distance: ShotDistance,
    pub movement: Movement,
    #[serde(default)]
    pub direction: Option<MoveDirection>,
    pub description: String,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightingModification {
    #[serde(default)]
    pub new_lighting_description: Option<String>,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub scene_id: u32,
    pub shot_id: u32,
    #[serde(default)]
    pub asset_modifications: Option<Vec<AssetModification>>,
    #[serde(default)]
    pub character_actions: Option<Vec<CharacterAction>>,
    #[serde(default)]
    pub lighting_modification: Option<LightingModification>,
    #[serde(default)]
    pub sound_effect: Option<String>,
    pub camera_instruction: CameraInstruction,
    #[serde(flatten)]
    pub extra: Extra,
}

impl ShotRecord {
    pub fn modifications(&self) -> &[AssetModification] {
        self.asset_modifications.as_deref().unwrap_or(&[])
    }
}

/// The top-level storyboard document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Storyboard {
    #[serde(default)]
    pub story_summary: String,
    pub storyboard_outline: Vec<SceneOutline>,
    pub asset_sheet: Vec<AssetRecord>,
    pub scene_details: Vec<SceneDetail>,
    pub shot_details: Vec<ShotRecord>,
    #[serde(flatten)]
    pub extra: Extra,
}
