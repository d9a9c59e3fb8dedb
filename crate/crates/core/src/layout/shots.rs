//! Per-shot snapshots and spatial drift between them.

use std::collections::{BTreeMap, BTreeSet};

use super::{LayoutError, SceneLayout, SpatialConstraint};
use crate::geometry::Placement;

/// Layout as it stands during `shot_id`: targeted placements replaced and
/// provided constraint fields overridden. Targets do not carry over to later
/// shots; everything else is copied unchanged.
pub fn apply_shot_modifications(layout: &SceneLayout, shot_id: u32) -> Result<SceneLayout, LayoutError> {
    let mut out = layout.clone();
    let Some(set) = layout.shot_modifications.iter().find(|m| m.shot_id == shot_id) else {
        return Ok(out);
    };
    for t in &set.asset_modifications {
        let p = out.placements.get_mut(&t.asset_id).ok_or_else(|| LayoutError::UnknownAsset(t.asset_id.clone()))?;
        *p = Placement::new(t.target_location, t.target_rotation, p.dimensions);
        if t.anchor_asset_id.is_some() || t.relationship.is_some() || t.contact.is_some() || t.direction.is_some() {
            let mut c = out.constraint(&t.asset_id).cloned().unwrap_or_else(|| SpatialConstraint::free(t.asset_id.clone()));
            if t.anchor_asset_id.is_some() {
                c.anchor_asset_id = t.anchor_asset_id.clone();
            }
            if t.relationship.is_some() {
                c.relationship = t.relationship;
            }
            if t.contact.is_some() {
                c.contact = t.contact;
            }
            if t.direction.is_some() {
                c.direction = t.direction;
            }
            if let Some(a) = &c.anchor_asset_id {
                if !out.placements.contains_key(a) {
                    return Err(LayoutError::UnknownAnchor { asset: t.asset_id.clone(), anchor: a.clone() });
                }
            }
            out.set_constraint(c);
        }
    }
    Ok(out)
}

/// Drops assets not in `members`. Constraints anchored on a dropped asset lose
/// their anchor-dependent fields.
pub fn retain_members(layout: &SceneLayout, members: &BTreeSet<String>) -> SceneLayout {
    let mut out = layout.clone();
    out.placements.retain(|id, _| members.contains(id));
    out.constraints.retain(|c| members.contains(&c.asset_id));
    for c in &mut out.constraints {
        if c.anchor_asset_id.as_ref().is_some_and(|a| !members.contains(a)) {
            *c = SpatialConstraint::free(c.asset_id.clone());
        }
    }
    out.constraints.retain(|c| c.anchor_asset_id.is_some() || !c.is_empty());
    out
}

/// Mean over static assets of the mean, over consecutive shot pairs, of the
/// mean displacement of the eight world-space corners of the asset's box
/// (rotation included).
pub fn spatial_drift_error(
    shots: &[BTreeMap<String, Placement>],
    static_ids: &[String],
) -> Result<f64, LayoutError> {
    if shots.len() < 2 {
        return Err(LayoutError::InsufficientShots(shots.len()));
    }
    if static_ids.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for id in static_ids {
        let mut corners = Vec::with_capacity(shots.len());
        for (index, shot) in shots.iter().enumerate() {
            let p = shot.get(id).ok_or_else(|| LayoutError::MissingStaticAsset { asset: id.clone(), index })?;
            corners.push(p.world_corners());
        }
        let pairs = corners.len() - 1;
        let mut per_asset = 0.0;
        for k in 0..pairs {
            let moved: f64 = (0..8).map(|i| corners[k + 1][i].distance(corners[k][i])).sum();
            per_asset += moved / 8.0;
        }
        total += per_asset / pairs as f64;
    }
    Ok(total / static_ids.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{EulerDeg, Vec3};
    use crate::layout::{Relationship, SceneSize, ShotModificationSet, ShotTarget};

    fn at(x: f64) -> Placement {
        Placement::new(Vec3::new(x, 0.0, 0.0), EulerDeg::default(), Vec3::splat(1.0))
    }

    fn shot(x: f64) -> BTreeMap<String, Placement> {
        [("table".to_string(), at(x))].into_iter().collect()
    }

    #[test]
    fn drift_examples() {
        let ids = vec!["table".to_string()];
        assert_eq!(spatial_drift_error(&[shot(0.0), shot(0.0), shot(0.0)], &ids).unwrap(), 0.0);
        assert_eq!(spatial_drift_error(&[shot(0.0), shot(1.0)], &ids).unwrap(), 1.0);
        assert_eq!(spatial_drift_error(&[shot(0.0), shot(1.0), shot(1.0)], &ids).unwrap(), 0.5);
        assert!(matches!(spatial_drift_error(&[shot(0.0)], &ids), Err(LayoutError::InsufficientShots(1))));
        let empty = BTreeMap::new();
        assert!(matches!(
            spatial_drift_error(&[shot(0.0), empty], &ids),
            Err(LayoutError::MissingStaticAsset { index: 1, .. })
        ));
    }

    #[test]
    fn only_targets_change() {
        let base = SceneLayout::new(SceneSize::symmetric(10.0))
            .with_placement("prince", at(0.0))
            .with_placement("horse", at(2.5));
        let mut layout = base.clone();
        layout.shot_modifications.push(ShotModificationSet {
            shot_id: 2,
            asset_modifications: vec![ShotTarget {
                asset_id: "prince".into(),
                target_location: Vec3::new(0.5, 0.2, 0.0),
                target_rotation: EulerDeg::new(-90.0, 0.0, 30.0),
                anchor_asset_id: Some("horse".into()),
                relationship: Some(Relationship::InFrontOf),
                contact: Some(false),
                direction: None,
            }],
        });
        assert_eq!(apply_shot_modifications(&layout, 1).unwrap(), layout);
        let s2 = apply_shot_modifications(&layout, 2).unwrap();
        assert_eq!(s2.placements["horse"], layout.placements["horse"]);
        assert_eq!(s2.placements["prince"].rotation.x, -90.0);
        assert_eq!(s2.constraint("prince").unwrap().relationship, Some(Relationship::InFrontOf));
    }

    #[test]
    fn removed_anchor_frees_dependents() {
        let l = SceneLayout::new(SceneSize::symmetric(10.0))
            .with_placement("a", at(0.0))
            .with_placement("b", at(3.0))
            .with_constraint(SpatialConstraint::anchored("b", "a").with_contact(false));
        let members: BTreeSet<String> = ["b".to_string()].into_iter().collect();
        let r = retain_members(&l, &members);
        assert_eq!(r.placements.len(), 1);
        assert!(r.constraints.is_empty());
        r.validate().unwrap();
    }
}
