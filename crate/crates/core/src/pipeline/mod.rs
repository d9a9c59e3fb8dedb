//! End-to-end story builds, metrics and exports.

mod build;
mod export;
mod metrics;
pub mod synth;
mod world_io;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::camera::{MovementExtent, ServoSteps, DEFAULT_MARGIN};
use crate::layout::Tolerances;
use crate::reflection::ReflectionConfig;

pub use build::{
    build_story, build_story_from_texts, detect_onstage, BuildIssue, BuildStage, GateTrace, SceneWorld, ShotCamera,
    ShotSnapshot, StoryWorld,
};
pub use export::{export_snapshot, render_svg, render_topdown, snapshot_document, SnapshotDocument, SnapshotPlacement};
pub use metrics::{compute_metrics, default_static_ids, occm, MetricsReport, ShotOccm, ServoSummary, OCCM_EPSILON};
pub use world_io::{read_world, snapshot_file_name, write_world, WORLD_FILE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("{}", summarize(.issues))]
    Build { issues: Vec<BuildIssue>, buildable_scenes: Vec<u32> },
    #[error("unknown shot {0}/{1}")]
    UnknownShot(u32, u32),
    #[error("world file error: {0}")]
    Io(String),
}

fn summarize(issues: &[BuildIssue]) -> String {
    issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; ")
}

/// Which parts of the shared state a build is allowed to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// Shared base layout and asset registry.
    #[default]
    Full,
    /// Neither: every shot re-lays out and rebuilds its assets.
    NoGraph,
    /// Shared layout, but every shot rebuilds its asset proxies.
    NoAssetRegistry,
    /// Shared assets, but every shot re-lays out the scene.
    NoSharedLayout,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Ablation::Full, Ablation::NoGraph, Ablation::NoAssetRegistry, Ablation::NoSharedLayout];

    pub fn shares_layout(self) -> bool {
        matches!(self, Ablation::Full | Ablation::NoAssetRegistry)
    }

    pub fn shares_assets(self) -> bool {
        matches!(self, Ablation::Full | Ablation::NoSharedLayout)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoGraph => "no_graph",
            Ablation::NoAssetRegistry => "no_asset_registry",
            Ablation::NoSharedLayout => "no_shared_layout",
        }
    }
}

impl std::str::FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ablation::ALL
            .into_iter()
            .find(|a| a.as_str() == s.replace('-', "_"))
            .ok_or_else(|| format!("unknown ablation `{s}` (expected full, no_graph, no_asset_registry or no_shared_layout)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildConfig {
    pub seed: u64,
    pub ablation: Ablation,
    pub reflection: ReflectionConfig,
    pub tolerances: Tolerances,
    /// Repair turns the gate's fallback may spend.
    pub fallback_turns: usize,
    pub servo_steps: ServoSteps,
    pub margin: f64,
    /// Length of a moving shot in frames.
    pub n_frames: u32,
    pub extent: MovementExtent,
    /// Half-width of the per-shot translation noise when layouts are not shared.
    pub jitter_m: f64,
    /// Relative spread of rebuilt proxy proportions when assets are not shared.
    pub mesh_jitter: f64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ablation: Ablation::Full,
            reflection: ReflectionConfig::default(),
            tolerances: Tolerances::default(),
            fallback_turns: 20,
            servo_steps: ServoSteps::default(),
            margin: DEFAULT_MARGIN,
            n_frames: 48,
            extent: MovementExtent::default(),
            jitter_m: 0.5,
            mesh_jitter: 0.15,
        }
    }
}

/// Seed derived from a list of labels; stable across platforms and runs.
pub(crate) fn stable_seed(parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablation_names_round_trip() {
        for a in Ablation::ALL {
            assert_eq!(a.as_str().parse::<Ablation>().unwrap(), a);
        }
        assert_eq!("no-graph".parse::<Ablation>().unwrap(), Ablation::NoGraph);
        assert!("none".parse::<Ablation>().is_err());
    }

    #[test]
    fn config_fills_defaults() {
        let c: BuildConfig = serde_json::from_str(r#"{"seed": 9}"#).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.fallback_turns, 20);
        assert_eq!(c.reflection.horizon, 5);
    }
}
