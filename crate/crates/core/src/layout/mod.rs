//! Scene layouts: placement formulas, constraint verification with exact
//! fixes, deterministic repair, the indoor shell, per-shot snapshots and
//! spatial drift.

mod io;
mod repair;
mod shell;
mod shots;
mod verify;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{world_aabb, Aabb, EulerDeg, Placement, Vec3};

pub use io::{
    parse_layout_document, LayoutDocument, LayoutObject, PlannerShotModifications, SingleSceneLayout,
};
pub use repair::{
    repair_scene, repair_turn, topological_order, ErrorCounts, GateCritique, LayoutGate, RepairOutcome,
};
pub use shell::{generate_scene_shell, mount_on_wall, SceneShell, Wall, WallSide, WALL_HEIGHT, WALL_THICKNESS};
pub use shots::{apply_shot_modifications, retain_members, spatial_drift_error};
pub use verify::{apply_fix, verify_scene, Diagnostic, DiagnosticKind, Fix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("layout schema error: {0}")]
    Schema(String),
    #[error("constraint on `{asset}` names unknown anchor `{anchor}`")]
    UnknownAnchor { asset: String, anchor: String },
    #[error("unknown asset `{0}`")]
    UnknownAsset(String),
    #[error("no dimensions known for asset `{0}`")]
    MissingDimensions(String),
    #[error("spatial drift needs at least two shots, got {0}")]
    InsufficientShots(usize),
    #[error("static asset `{asset}` missing from shot {index}")]
    MissingStaticAsset { asset: String, index: usize },
}

/// Verification budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub direction_cone_deg: f64,
    pub bearing_sector_deg: f64,
    pub contact_gap_m: f64,
    pub occlusion_penetration_m: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            direction_cone_deg: 45.0,
            bearing_sector_deg: 90.0,
            contact_gap_m: 0.05,
            occlusion_penetration_m: 0.02,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relationship {
    OnTopOf,
    OnTheLeftOf,
    OnTheRightOf,
    InFrontOf,
    Behind,
}

impl Relationship {
    pub const ALL: [Relationship; 5] = [
        Relationship::OnTopOf,
        Relationship::OnTheLeftOf,
        Relationship::OnTheRightOf,
        Relationship::InFrontOf,
        Relationship::Behind,
    ];

    /// Center of the valid bearing sector for planar relations.
    pub fn sector_center_deg(self) -> Option<f64> {
        match self {
            Relationship::OnTheRightOf => Some(0.0),
            Relationship::Behind => Some(90.0),
            Relationship::OnTheLeftOf => Some(180.0),
            Relationship::InFrontOf => Some(270.0),
            Relationship::OnTopOf => None,
        }
    }

    /// Horizontal axis (0 = x, 1 = y) and sign the relation points along.
    pub fn planar_axis(self) -> Option<(usize, f64)> {
        match self {
            Relationship::OnTheRightOf => Some((0, 1.0)),
            Relationship::OnTheLeftOf => Some((0, -1.0)),
            Relationship::Behind => Some((1, 1.0)),
            Relationship::InFrontOf => Some((1, -1.0)),
            Relationship::OnTopOf => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Relationship::OnTopOf => "on_top_of",
            Relationship::OnTheLeftOf => "on_the_left_of",
            Relationship::OnTheRightOf => "on_the_right_of",
            Relationship::InFrontOf => "in_front_of",
            Relationship::Behind => "behind",
        }
    }
}

impl fmt::Display for Relationship {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How an asset is oriented toward its anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Facing {
    Facing,
    FacingAway,
    LeftSideFacing,
    RightSideFacing,
}

impl Facing {
    pub const ALL: [Facing; 4] =
        [Facing::Facing, Facing::FacingAway, Facing::LeftSideFacing, Facing::RightSideFacing];

    /// Offset added to the yaw that faces the anchor.
    pub fn yaw_offset_deg(self) -> f64 {
        match self {
            Facing::Facing => 0.0,
            Facing::FacingAway => 180.0,
            Facing::LeftSideFacing => 90.0,
            Facing::RightSideFacing => -90.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialConstraint {
    pub asset_id: String,
    #[serde(default)]
    pub anchor_asset_id: Option<String>,
    #[serde(default)]
    pub relationship: Option<Relationship>,
    #[serde(default)]
    pub contact: Option<bool>,
    #[serde(default)]
    pub direction: Option<Facing>,
}

impl SpatialConstraint {
    pub fn free(asset_id: impl Into<String>) -> Self {
        Self { asset_id: asset_id.into(), anchor_asset_id: None, relationship: None, contact: None, direction: None }
    }

    pub fn anchored(asset_id: impl Into<String>, anchor: impl Into<String>) -> Self {
        Self { anchor_asset_id: Some(anchor.into()), ..Self::free(asset_id) }
    }

    pub fn with_relationship(mut self, r: Relationship) -> Self {
        self.relationship = Some(r);
        self
    }

    pub fn with_contact(mut self, c: bool) -> Self {
        self.contact = Some(c);
        self
    }

    pub fn with_direction(mut self, d: Facing) -> Self {
        self.direction = Some(d);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.relationship.is_none() && self.contact.is_none() && self.direction.is_none()
    }
}

/// Footprint bounds of a scene in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSize {
    pub x: f64,
    pub x_negative: f64,
    pub y: f64,
    pub y_negative: f64,
}

impl SceneSize {
    pub fn symmetric(half: f64) -> Self {
        Self { x: half, x_negative: -half, y: half, y_negative: -half }
    }

    pub fn is_ordered(&self) -> bool {
        self.x_negative < self.x && self.y_negative < self.y
    }

    pub fn contains_xy(&self, b: &Aabb) -> bool {
        b.min.x >= self.x_negative - 1e-9
            && b.max.x <= self.x + 1e-9
            && b.min.y >= self.y_negative - 1e-9
            && b.max.y <= self.y + 1e-9
    }

    /// XY translation that moves `b` inside the footprint (centered when it cannot fit).
    pub fn clamp_shift(&self, b: &Aabb) -> Vec3 {
        let axis = |lo: f64, hi: f64, bmin: f64, bmax: f64| {
            if bmax - bmin > hi - lo {
                (lo + hi) / 2.0 - (bmin + bmax) / 2.0
            } else if bmin < lo {
                lo - bmin
            } else if bmax > hi {
                hi - bmax
            } else {
                0.0
            }
        };
        Vec3::new(
            axis(self.x_negative, self.x, b.min.x, b.max.x),
            axis(self.y_negative, self.y, b.min.y, b.max.y),
            0.0,
        )
    }
}

/// Target transform for one asset during one shot. Constraint fields that are
/// present override the base constraint for that shot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotTarget {
    pub asset_id: String,
    pub target_location: Vec3,
    pub target_rotation: EulerDeg,
    #[serde(default)]
    pub anchor_asset_id: Option<String>,
    #[serde(default)]
    pub relationship: Option<Relationship>,
    #[serde(default)]
    pub contact: Option<bool>,
    #[serde(default)]
    pub direction: Option<Facing>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotModificationSet {
    pub shot_id: u32,
    pub asset_modifications: Vec<ShotTarget>,
}

/// Placements plus the constraints they must satisfy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneLayout {
    pub scene_size: SceneSize,
    pub placements: BTreeMap<String, Placement>,
    /// At most one constraint per asset, sorted by asset id.
    pub constraints: Vec<SpatialConstraint>,
    #[serde(default)]
    pub shot_modifications: Vec<ShotModificationSet>,
}

impl SceneLayout {
    pub fn new(scene_size: SceneSize) -> Self {
        Self { scene_size, placements: BTreeMap::new(), constraints: Vec::new(), shot_modifications: Vec::new() }
    }

    pub fn with_placement(mut self, id: impl Into<String>, p: Placement) -> Self {
        self.placements.insert(id.into(), p);
        self
    }

    /// Adds or replaces the constraint of `c.asset_id`, keeping the list sorted.
    pub fn set_constraint(&mut self, c: SpatialConstraint) {
        match self.constraints.binary_search_by(|x| x.asset_id.cmp(&c.asset_id)) {
            Ok(i) => self.constraints[i] = c,
            Err(i) => self.constraints.insert(i, c),
        }
    }

    pub fn with_constraint(mut self, c: SpatialConstraint) -> Self {
        self.set_constraint(c);
        self
    }

    pub fn constraint(&self, asset_id: &str) -> Option<&SpatialConstraint> {
        self.constraints
            .binary_search_by(|x| x.asset_id.as_str().cmp(asset_id))
            .ok()
            .map(|i| &self.constraints[i])
    }

    pub fn aabb(&self, asset_id: &str) -> Option<Aabb> {
        self.placements.get(asset_id).map(world_aabb)
    }

    /// Checks the structural invariants: constrained assets and anchors exist,
    /// fields that need an anchor have one, dimensions are positive.
    pub fn validate(&self) -> Result<(), LayoutError> {
        for (id, p) in &self.placements {
            let d = p.dimensions;
            if !(d.x > 0.0 && d.y > 0.0 && d.z > 0.0) {
                return Err(LayoutError::Schema(format!("asset `{id}` has non-positive dimensions")));
            }
            if !p.location.is_finite() {
                return Err(LayoutError::Schema(format!("asset `{id}` has a non-finite location")));
            }
        }
        if !self.scene_size.is_ordered() {
            return Err(LayoutError::Schema("scene_size bounds are not ordered".into()));
        }
        for c in &self.constraints {
            if !self.placements.contains_key(&c.asset_id) {
                return Err(LayoutError::UnknownAsset(c.asset_id.clone()));
            }
            match &c.anchor_asset_id {
                Some(a) if !self.placements.contains_key(a) => {
                    return Err(LayoutError::UnknownAnchor { asset: c.asset_id.clone(), anchor: a.clone() })
                }
                Some(a) if a == &c.asset_id => {
                    return Err(LayoutError::Schema(format!("asset `{a}` is anchored to itself")))
                }
                None if !c.is_empty() => {
                    return Err(LayoutError::Schema(format!(
                        "constraint on `{}` sets relationship, contact or direction without an anchor",
                        c.asset_id
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Location of a subject placed in contact with `anchor` per the layout formulas.
///
/// Horizontal relations offset the anchor's location by the sum of half
/// extents on one axis; `on_top_of` stacks on the anchor's top surface.
pub fn place_contact(relationship: Relationship, anchor: &Placement, subject_dims: Vec3) -> Placement {
    let b = anchor.location;
    let bd = anchor.dimensions;
    let a = subject_dims;
    let location = match relationship {
        Relationship::OnTopOf => Vec3::new(b.x, b.y, b.z + bd.z),
        Relationship::OnTheRightOf => Vec3::new(b.x + bd.x / 2.0 + a.x / 2.0, b.y, b.z),
        Relationship::OnTheLeftOf => Vec3::new(b.x - bd.x / 2.0 - a.x / 2.0, b.y, b.z),
        Relationship::Behind => Vec3::new(b.x, b.y + bd.y / 2.0 + a.y / 2.0, b.z),
        Relationship::InFrontOf => Vec3::new(b.x, b.y - bd.y / 2.0 - a.y / 2.0, b.z),
    };
    Placement::new(location, EulerDeg::default(), subject_dims)
}
