//! The planner's layout document and its conversion to [`SceneLayout`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    Facing, LayoutError, Relationship, SceneLayout, SceneSize, ShotModificationSet, ShotTarget,
    SpatialConstraint,
};
use crate::geometry::{EulerDeg, Placement, Vec3};

type Extra = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutObject {
    pub asset_id: String,
    pub location: Vec3,
    pub rotation: EulerDeg,
    #[serde(default)]
    pub anchor_asset_id: Option<String>,
    #[serde(default)]
    pub relationship: Option<Relationship>,
    #[serde(default)]
    pub contact: Option<bool>,
    #[serde(default)]
    pub direction: Option<Facing>,
    /// Box size, when the document carries it inline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimensions: Option<Vec3>,
    #[serde(flatten)]
    pub extra: Extra,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerShotModifications {
    pub shot_id: u32,
    pub asset_modifications: Vec<ShotTarget>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleSceneLayout {
    pub scene_size: SceneSize,
    pub assets: Vec<LayoutObject>,
    #[serde(default)]
    pub shot_asset_modifications: Option<Vec<PlannerShotModifications>>,
    #[serde(flatten)]
    pub extra: Extra,
}

/// `{"scene": {...}}` as emitted by the planner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutDocument {
    pub scene: SingleSceneLayout,
}

/// Parses a planner layout. Accepts the wrapped `{"scene": ...}` form and the
/// bare form embedded in scene details.
pub fn parse_layout_document(text: &str) -> Result<LayoutDocument, LayoutError> {
    let value: Value = serde_json::from_str(text).map_err(|e| LayoutError::Schema(e.to_string()))?;
    LayoutDocument::from_value(value)
}

impl LayoutDocument {
    pub fn from_value(value: Value) -> Result<Self, LayoutError> {
        let inner = match value {
            Value::Object(mut m) if m.contains_key("scene") && !m.contains_key("assets") => {
                m.remove("scene").unwrap_or(Value::Null)
            }
            other => other,
        };
        let scene: SingleSceneLayout =
            serde_json::from_value(inner).map_err(|e| LayoutError::Schema(e.to_string()))?;
        Ok(LayoutDocument { scene })
    }

    /// Builds a layout, taking each asset's size from its inline `dimensions`
    /// or else from `dims`.
    pub fn to_scene_layout(&self, dims: &BTreeMap<String, Vec3>) -> Result<SceneLayout, LayoutError> {
        let s = &self.scene;
        let mut layout = SceneLayout::new(s.scene_size);
        for obj in &s.assets {
            if layout.placements.contains_key(&obj.asset_id) {
                return Err(LayoutError::Schema(format!("asset `{}` listed twice", obj.asset_id)));
            }
            let d = obj
                .dimensions
                .or_else(|| dims.get(&obj.asset_id).copied())
                .ok_or_else(|| LayoutError::MissingDimensions(obj.asset_id.clone()))?;
            layout.placements.insert(obj.asset_id.clone(), Placement::new(obj.location, obj.rotation, d));
            let c = SpatialConstraint {
                asset_id: obj.asset_id.clone(),
                anchor_asset_id: obj.anchor_asset_id.clone(),
                relationship: obj.relationship,
                contact: obj.contact,
                direction: obj.direction,
            };
            if c.anchor_asset_id.is_some() || !c.is_empty() {
                layout.set_constraint(c);
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in s.shot_asset_modifications.iter().flatten() {
            if !seen.insert(m.shot_id) {
                return Err(LayoutError::Schema(format!("shot {} has two modification entries", m.shot_id)));
            }
            for t in &m.asset_modifications {
                if !layout.placements.contains_key(&t.asset_id) {
                    return Err(LayoutError::UnknownAsset(t.asset_id.clone()));
                }
            }
            layout.shot_modifications.push(ShotModificationSet {
                shot_id: m.shot_id,
                asset_modifications: m.asset_modifications.clone(),
            });
        }
        layout.shot_modifications.sort_by_key(|m| m.shot_id);
        layout.validate()?;
        Ok(layout)
    }

    /// Planner form of a layout, with dimensions carried inline.
    pub fn from_scene_layout(layout: &SceneLayout) -> Self {
        let assets = layout
            .placements
            .iter()
            .map(|(id, p)| {
                let c = layout.constraint(id).cloned().unwrap_or_else(|| SpatialConstraint::free(id.clone()));
                LayoutObject {
                    asset_id: id.clone(),
                    location: p.location,
                    rotation: p.rotation,
                    anchor_asset_id: c.anchor_asset_id,
                    relationship: c.relationship,
                    contact: c.contact,
                    direction: c.direction,
                    dimensions: Some(p.dimensions),
                    extra: Extra::new(),
                }
            })
            .collect();
        let mods = (!layout.shot_modifications.is_empty()).then(|| {
            layout
                .shot_modifications
                .iter()
                .map(|m| PlannerShotModifications {
                    shot_id: m.shot_id,
                    asset_modifications: m.asset_modifications.clone(),
                })
                .collect()
        });
        LayoutDocument {
            scene: SingleSceneLayout {
                scene_size: layout.scene_size,
                assets,
                shot_asset_modifications: mods,
                extra: Extra::new(),
            },
        }
    }
}
