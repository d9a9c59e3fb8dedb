//! Consistency metrics over a built world: drift of static assets between
//! shots, onstage character count matching, and the build traces.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Ablation, SceneWorld, StoryWorld};
use crate::assets::LibraryStats;
use crate::layout::spatial_drift_error;
use crate::memory::AssetType;
use crate::reflection::ReflectionStatus;

/// Smoothing term in the count match denominator.
pub const OCCM_EPSILON: f64 = 1e-6;

/// Count match in percent: 100 when `detected == expected`, decaying
/// exponentially with the relative miss.
pub fn occm(detected: usize, expected: usize) -> f64 {
    let (d, e) = (detected as f64, expected as f64);
    (-(d - e).abs() / (OCCM_EPSILON + e)).exp() * 100.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotOccm {
    pub scene_id: u32,
    pub shot_id: u32,
    pub detected: usize,
    pub expected: usize,
    pub occm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServoSummary {
    pub scene_id: u32,
    pub shot_id: u32,
    pub scores: Vec<u8>,
    pub status: ReflectionStatus,
    pub turns_used: usize,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairSummary {
    pub status: ReflectionStatus,
    pub turns_used: usize,
    pub committed: bool,
    /// Rows D, R, O, C by turn.
    pub table: BTreeMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub ablation: Ablation,
    /// Per scene; absent for scenes with fewer than two shots.
    pub sde: BTreeMap<u32, Option<f64>>,
    pub static_ids: BTreeMap<u32, Vec<String>>,
    pub occm: Vec<ShotOccm>,
    pub occm_mean: Option<f64>,
    pub repair: BTreeMap<u32, RepairSummary>,
    pub servo: Vec<ServoSummary>,
    pub library: LibraryStats,
}

impl MetricsReport {
    /// Mean of the per-scene drift values that exist.
    pub fn sde_mean(&self) -> Option<f64> {
        let v: Vec<f64> = self.sde.values().flatten().copied().collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Objects on stage in every shot of the scene that no shot moves.
pub fn default_static_ids(scene: &SceneWorld) -> Vec<String> {
    let targeted: BTreeSet<&str> = scene
        .base_layout
        .shot_modifications
        .iter()
        .flat_map(|m| m.asset_modifications.iter().map(|t| t.asset_id.as_str()))
        .collect();
    scene
        .assets
        .values()
        .filter(|a| a.asset_type == AssetType::Object && !targeted.contains(a.asset_id.as_str()))
        .filter(|a| scene.shots.values().all(|s| s.layout.placements.contains_key(&a.asset_id)))
        .map(|a| a.asset_id.clone())
        .collect()
}

/// Pure function of the world. `static_ids` overrides the default set per
/// scene; ids missing from any shot of their scene are dropped.
pub fn compute_metrics(world: &StoryWorld, static_ids: Option<&BTreeMap<u32, Vec<String>>>) -> MetricsReport {
    let mut sde = BTreeMap::new();
    let mut statics = BTreeMap::new();
    let mut occms = Vec::new();
    let mut repair = BTreeMap::new();
    let mut servo = Vec::new();
    for (&s, scene) in &world.scenes {
        let ids: Vec<String> = match static_ids.and_then(|m| m.get(&s)) {
            Some(given) => given
                .iter()
                .filter(|id| scene.shots.values().all(|shot| shot.layout.placements.contains_key(*id)))
                .cloned()
                .collect(),
            None => default_static_ids(scene),
        };
        let shots: Vec<_> = scene.shots.values().map(|shot| shot.layout.placements.clone()).collect();
        sde.insert(s, spatial_drift_error(&shots, &ids).ok());
        statics.insert(s, ids);
        repair.insert(
            s,
            RepairSummary {
                status: scene.gate.status,
                turns_used: scene.gate.turns_used,
                committed: scene.gate.committed,
                table: scene.gate.table(),
            },
        );
        for shot in scene.shots.values() {
            let (d, e) = (shot.detected.len(), shot.expected.len());
            occms.push(ShotOccm { scene_id: s, shot_id: shot.shot_id, detected: d, expected: e, occm: occm(d, e) });
            if let Some(c) = &shot.camera {
                servo.push(ServoSummary {
                    scene_id: s,
                    shot_id: shot.shot_id,
                    scores: c.servo.steps.iter().map(|st| st.score).collect(),
                    status: c.servo.status,
                    turns_used: c.servo.turns_used,
                    satisfied: c.servo.satisfied,
                });
            }
        }
    }
    let occm_mean = (!occms.is_empty()).then(|| occms.iter().map(|o| o.occm).sum::<f64>() / occms.len() as f64);
    MetricsReport {
        ablation: world.config.ablation,
        sde,
        static_ids: statics,
        occm: occms,
        occm_mean,
        repair,
        servo,
        library: world.library.stats(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn occm_examples() {
        assert_eq!(occm(3, 3), 100.0);
        assert_eq!(occm(0, 0), 100.0);
        // independent evaluations of exp(-2/2.000001) and exp(-1/2.000001)
        assert!((occm(0, 2) - 36.787_946_1).abs() < 1e-4);
        assert!((occm(1, 2) - 60.653_080_7).abs() < 1e-4);
        assert!((occm(0, 2) - 100.0 * (-2.0f64 / 2.000_001).exp()).abs() < 1e-12);
        // nobody expected: any detection is a total miss (the exponent is -1e6 per extra)
        assert_eq!(occm(1, 0), 0.0);
    }

    proptest! {
        #[test]
        fn occm_is_a_decaying_match(d in 0usize..12, e in 1usize..12) {
            let v = occm(d, e);
            prop_assert!(v > 0.0 && v <= 100.0);
            prop_assert_eq!(v == 100.0, d == e);
            // strictly worse one step farther from the expected count
            prop_assert!(occm(e + d + 1, e) < occm(e + d, e));
            if d < e {
                prop_assert!(occm(d, e) < occm(d + 1, e));
            }
        }
    }
}
