//! Seeded synthetic inputs: random constrained scenes and small multi-scene
//! stories in the three input document formats.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::assets::DimensionEstimate;
use crate::geometry::{facing_rotation_z, normalize_deg, world_aabb, EulerDeg, Placement, Vec3};
use crate::layout::{
    verify_scene, DiagnosticKind, Facing, LayoutDocument, Relationship, SceneLayout, SceneSize, SpatialConstraint,
    Tolerances,
};
use crate::memory::{Storyboard, GraphError};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A scene of `n_assets` boxes scattered at random over a 16 m square, each
/// asset after the first anchored to an earlier one. No side of an asset is
/// claimed twice, counting the side that faces its own anchor.
pub fn random_scene(seed: u64, n_assets: usize) -> SceneLayout {
    let mut r = rng(seed);
    let size = SceneSize::symmetric(8.0);
    let mut layout = SceneLayout::new(size);
    let mut used: BTreeMap<usize, BTreeSet<Relationship>> = BTreeMap::new();
    for i in 0..n_assets {
        let id = format!("a{i}");
        let dims = Vec3::new(r.random_range(0.3..1.5), r.random_range(0.3..1.5), r.random_range(0.4..2.0));
        let loc = Vec3::new(r.random_range(-6.5..6.5), r.random_range(-6.5..6.5), 0.0);
        let yaw = r.random_range(-180.0..180.0f64).round();
        layout.placements.insert(id.clone(), Placement::new(loc, EulerDeg::yaw(yaw), dims));
        if i == 0 {
            continue;
        }
        let anchor = r.random_range(0..i);
        let free: Vec<Relationship> = Relationship::ALL
            .into_iter()
            .filter(|rel| *rel != Relationship::OnTopOf)
            .filter(|rel| !used.get(&anchor).is_some_and(|u| u.contains(rel)))
            .collect();
        let mut c = SpatialConstraint::anchored(id.clone(), format!("a{anchor}"));
        if let Some(rel) = free.choose(&mut r) {
            used.entry(anchor).or_default().insert(*rel);
            used.entry(i).or_default().insert(opposite(*rel));
            c.relationship = Some(*rel);
        }
        c.contact = Some(r.random_bool(0.5));
        if r.random_bool(0.7) {
            c.direction = Facing::ALL.choose(&mut r).copied();
        }
        layout.set_constraint(c);
    }
    layout
}

const HORIZONTAL: [Relationship; 4] =
    [Relationship::OnTheRightOf, Relationship::Behind, Relationship::OnTheLeftOf, Relationship::InFrontOf];

fn random_box(r: &mut ChaCha8Rng, at: Vec3) -> Placement {
    let dims = Vec3::new(r.random_range(0.3..1.5), r.random_range(0.3..1.5), r.random_range(0.4..2.0));
    Placement::new(at, EulerDeg::yaw(r.random_range(-180.0..180.0)), dims)
}

/// Subject location at `deg` from the anchor, far enough that the two world
/// boxes cannot touch whatever their yaw.
fn clear_of(r: &mut ChaCha8Rng, a: &Placement, s: &Placement, deg: f64) -> Vec3 {
    let reach = |p: &Placement| std::f64::consts::SQRT_2 * p.dimensions.x.hypot(p.dimensions.y) / 2.0;
    let range = reach(a) + reach(s) + r.random_range(0.1..2.0);
    let e = deg.to_radians();
    Vec3::new(a.location.x + range * e.cos(), a.location.y + range * e.sin(), 0.0)
}

/// Subject beside the anchor along the relationship's axis with a chosen
/// surface gap between the two world boxes.
fn beside(r: &mut ChaCha8Rng, a: &Placement, s: &Placement, rel: Relationship, gap: f64) -> Vec3 {
    let (axis, sign) = rel.planar_axis().expect("horizontal relationship");
    let (ha, hs) = (world_aabb(a).extent() * 0.5, world_aabb(s).extent() * 0.5);
    let other = 1 - axis;
    let slack = 0.8 * ha[other].min(hs[other]);
    let mut loc = a.location;
    loc = loc.with_axis(axis, a.location[axis] + sign * (ha[axis] + hs[axis] + gap));
    loc.with_axis(other, a.location[other] + r.random_range(-slack..=slack))
}

/// Two assets whose layout carries exactly one diagnostic, of `kind`. Direction,
/// relationship and contact violations come from an anchored subject;
/// occlusion from two free boxes that interpenetrate.
pub fn single_violation(seed: u64, kind: DiagnosticKind) -> SceneLayout {
    let mut r = rng(seed);
    let tol = Tolerances::default();
    loop {
        let mut layout = SceneLayout::new(SceneSize::symmetric(10.0));
        let at = Vec3::new(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0), 0.0);
        let anchor = random_box(&mut r, at);
        let mut subject = random_box(&mut r, Vec3::ZERO);
        let rel = *HORIZONTAL.choose(&mut r).expect("non-empty");
        let center = rel.sector_center_deg().expect("horizontal relationship");
        let mut c = SpatialConstraint::anchored("s", "a");
        match kind {
            DiagnosticKind::Direction => {
                let bearing = center + r.random_range(-30.0..30.0);
                subject.location = clear_of(&mut r, &anchor, &subject, bearing);
                let facing = *Facing::ALL.choose(&mut r).expect("non-empty");
                let base = facing_rotation_z(subject.location.xy(), anchor.location.xy()).expect("apart");
                let off = r.random_range(50.0..180.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
                subject.rotation = EulerDeg::yaw(normalize_deg(base + facing.yaw_offset_deg() + off));
                c = c.with_relationship(rel).with_contact(false).with_direction(facing);
            }
            DiagnosticKind::Relationship => {
                let off = r.random_range(50.0..180.0) * if r.random_bool(0.5) { 1.0 } else { -1.0 };
                let bearing = center + off;
                subject.location = clear_of(&mut r, &anchor, &subject, bearing);
                c = c.with_relationship(rel);
                if r.random_bool(0.5) {
                    c = c.with_contact(false);
                }
            }
            DiagnosticKind::Contact => {
                let want = r.random_bool(0.5);
                let gap = if want { r.random_range(0.06..1.5) } else { r.random_range(-0.015..0.04) };
                subject.location = beside(&mut r, &anchor, &subject, rel, gap);
                c = c.with_contact(want);
                if r.random_bool(0.75) {
                    c = c.with_relationship(rel);
                }
            }
            DiagnosticKind::Occlusion => {
                let (ha, hs) = (world_aabb(&anchor).extent() * 0.5, world_aabb(&subject).extent() * 0.5);
                let dx = r.random_range(-0.9..0.9) * (ha.x + hs.x);
                let dy = r.random_range(-0.9..0.9) * (ha.y + hs.y);
                subject.location = anchor.location + Vec3::new(dx, dy, 0.0);
                c = SpatialConstraint::free("s");
            }
        }
        layout.placements.insert("a".into(), anchor);
        layout.placements.insert("s".into(), subject);
        if !c.is_empty() {
            layout.set_constraint(c);
        }
        if let Ok(d) = verify_scene(&layout, &tol) {
            if d.len() == 1 && d[0].kind == kind {
                return layout;
            }
        }
    }
}

fn opposite(r: Relationship) -> Relationship {
    match r {
        Relationship::OnTheLeftOf => Relationship::OnTheRightOf,
        Relationship::OnTheRightOf => Relationship::OnTheLeftOf,
        Relationship::InFrontOf => Relationship::Behind,
        Relationship::Behind => Relationship::InFrontOf,
        Relationship::OnTopOf => Relationship::OnTopOf,
    }
}

/// Per-shot uniform translation noise in the ground plane, in `[-m, m]` on
/// each axis; a pure function of its arguments.
pub fn jitter_offset(seed: u64, scene_id: u32, shot_id: u32, asset_id: &str, magnitude: f64) -> Vec3 {
    let mut r = rng(super::stable_seed(&[&seed.to_string(), "jitter", &scene_id.to_string(), &shot_id.to_string(), asset_id]));
    if magnitude <= 0.0 {
        return Vec3::ZERO;
    }
    Vec3::new(r.random_range(-magnitude..=magnitude), r.random_range(-magnitude..=magnitude), 0.0)
}

/// Three documents describing one story.
#[derive(Debug, Clone, PartialEq)]
pub struct StoryInputs {
    pub storyboard: Storyboard,
    pub dimensions: Vec<DimensionEstimate>,
    pub layouts: BTreeMap<u32, LayoutDocument>,
}

/// A small story: `n_scenes` indoor scenes, each with a table and a lamp on
/// it plus two characters that talk across the table, shot `shots_per_scene`
/// times. Characters wander between shots; furniture never moves.
pub fn synthetic_story(seed: u64, n_scenes: u32, shots_per_scene: u32) -> Result<StoryInputs, GraphError> {
    let mut r = rng(seed);
    let angles = ["eye-level", "high angle", "low angle"];
    let distances = ["close-up", "medium shot", "long shot"];
    let mut assets = Vec::new();
    let mut dimensions = Vec::new();
    let mut outline = Vec::new();
    let mut scene_details = Vec::new();
    let mut shot_details = Vec::new();
    let mut layouts = BTreeMap::new();
    for s in 1..=n_scenes {
        let (table, lamp, hero, friend) = (format!("table_{s}"), format!("lamp_{s}"), format!("hero_{s}"), format!("friend_{s}"));
        for (id, kind) in [(&table, "object"), (&lamp, "object"), (&hero, "character"), (&friend, "character")] {
            assets.push(json!({
                "asset_id": id, "asset_type": kind, "description": format!("{id} in scene {s}"),
                "reference_character": null, "text_to_image_prompt": format!("a {id}")
            }));
        }
        let table_w = (r.random_range(0.7..1.0f64) * 100.0).round() / 100.0;
        dimensions.push(DimensionEstimate::width(table.clone(), table_w));
        dimensions.push(DimensionEstimate::height(lamp.clone(), 0.45));
        dimensions.push(DimensionEstimate::height(hero.clone(), (r.random_range(1.6..1.9f64) * 100.0).round() / 100.0));
        dimensions.push(DimensionEstimate::height(friend.clone(), (r.random_range(1.5..1.8f64) * 100.0).round() / 100.0));

        let shots: Vec<Value> = (1..=shots_per_scene)
            .map(|t| json!({"shot_id": t, "shot_description": format!("scene {s} shot {t}")}))
            .collect();
        outline.push(json!({"scene_id": s, "scene_description": format!("scene {s}"), "shots": shots}));
        scene_details.push(json!({
            "scene_id": s,
            "scene_setup": {
                "reference_scene_id": null,
                "asset_ids": [&table, &lamp, &hero, &friend],
                "scene_type": "indoor",
                "layout_description": "A table in the middle of the room, two people talking across it.",
                "lighting_description": "Warm lamp light.",
                "ground_description": "Wooden floor.",
                "wall_description": "Painted walls."
            }
        }));

        let cx = r.random_range(-2.0..2.0f64).round();
        let cy = r.random_range(-2.0..2.0f64).round();
        let mut mods = Vec::new();
        for t in 1..=shots_per_scene {
            let focus: Vec<&String> = match t % 3 {
                1 => vec![&hero, &friend],
                2 => vec![&hero],
                _ => vec![&friend, &table],
            };
            let moving = t > 1 && t % 2 == 0;
            shot_details.push(json!({
                "scene_id": s, "shot_id": t,
                "asset_modifications": if moving { json!([{"asset_id": &hero, "modification_type": "transform", "description": "steps aside"}]) } else { Value::Null },
                "character_actions": [{"asset_id": &hero, "action_description": "talks"}],
                "lighting_modification": null,
                "sound_effect": null,
                "camera_instruction": {
                    "focus_on_ids": focus,
                    "angle": angles[(t as usize + s as usize) % 3],
                    "distance": distances[t as usize % 3],
                    "movement": "static",
                    "direction": null,
                    "description": format!("shot {t}")
                }
            }));
            if moving {
                let dx = r.random_range(-0.8..-0.4f64);
                mods.push(json!({
                    "shot_id": t,
                    "asset_modifications": [{
                        "asset_id": &hero,
                        "target_location": {"x": cx - table_w / 2.0 - 0.6 + dx, "y": cy - 0.4, "z": 0.0},
                        "target_rotation": {"x": 0.0, "y": 0.0, "z": 90.0}
                    }]
                }));
            }
        }
        let layout = json!({
            "scene": {
                "scene_size": {"x": 6, "x_negative": -6, "y": 6, "y_negative": -6},
                "assets": [
                    {"asset_id": &table, "location": {"x": cx, "y": cy, "z": 0.0}, "rotation": {"x": 0, "y": 0, "z": 0},
                     "anchor_asset_id": null, "relationship": null, "contact": null, "direction": null},
                    {"asset_id": &lamp, "location": {"x": cx + 0.1, "y": cy, "z": table_w}, "rotation": {"x": 0, "y": 0, "z": 0},
                     "anchor_asset_id": &table, "relationship": "on_top_of", "contact": true, "direction": null},
                    {"asset_id": &hero, "location": {"x": cx - table_w / 2.0 - 0.6, "y": cy, "z": 0.0}, "rotation": {"x": 0, "y": 0, "z": 90},
                     "anchor_asset_id": &table, "relationship": "on_the_left_of", "contact": false, "direction": "facing"},
                    {"asset_id": &friend, "location": {"x": cx + table_w / 2.0 + 0.6, "y": cy, "z": 0.0}, "rotation": {"x": 0, "y": 0, "z": -90},
                     "anchor_asset_id": &table, "relationship": "on_the_right_of", "contact": false, "direction": "facing"}
                ],
                "shot_asset_modifications": mods
            }
        });
        layouts.insert(s, LayoutDocument::from_value(layout).map_err(|e| GraphError::Schema(e.to_string()))?);
    }
    let doc = json!({
        "story_summary": format!("synthetic story {seed}"),
        "storyboard_outline": outline,
        "asset_sheet": assets,
        "scene_details": scene_details,
        "shot_details": shot_details,
    });
    let storyboard: Storyboard = serde_json::from_value(doc).map_err(|e| GraphError::Schema(e.to_string()))?;
    Ok(StoryInputs { storyboard, dimensions, layouts })
}
