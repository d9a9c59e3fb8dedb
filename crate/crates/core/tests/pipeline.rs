use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use blocking_core::layout::verify_scene;
use blocking_core::pipeline::synth::{jitter_offset, synthetic_story, StoryInputs};
use blocking_core::pipeline::{
    build_story, compute_metrics, export_snapshot, read_world, render_svg, write_world, Ablation, BuildConfig,
    BuildStage, PipelineError, SnapshotDocument, StoryWorld,
};

fn build(inputs: &StoryInputs, config: &BuildConfig) -> StoryWorld {
    build_story(inputs.storyboard.clone(), &inputs.dimensions, &inputs.layouts, config).expect("story builds")
}

fn with(seed: u64, ablation: Ablation) -> BuildConfig {
    BuildConfig { seed, ablation, ..BuildConfig::default() }
}

fn tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn synthetic_scenes_commit_clean() {
    for seed in 0..5 {
        let inputs = synthetic_story(seed, 2, 4).unwrap();
        let world = build(&inputs, &with(seed, Ablation::Full));
        assert!(world.uncommitted_scenes().is_empty(), "seed {seed}");
        for scene in world.scenes.values() {
            assert!(scene.gate.residual.is_empty(), "seed {seed}: {:?}", scene.gate.residual);
            assert_eq!(verify_scene(&scene.base_layout, &world.config.tolerances).unwrap(), Vec::new());
            assert_eq!(scene.shots.len(), 4);
            for shot in scene.shots.values() {
                assert!(shot.camera.is_some());
                assert_eq!(shot.expected.len(), 2);
            }
        }
    }
}

#[test]
fn writing_twice_is_byte_identical() {
    let inputs = synthetic_story(3, 2, 3).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_world(&build(&inputs, &with(3, Ablation::Full)), a.path()).unwrap();
    write_world(&build(&inputs, &with(3, Ablation::Full)), b.path()).unwrap();
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    assert_eq!(ta.len(), 1 + 2 * 6 + 1);
    assert_eq!(ta, tb);
}

#[test]
fn world_file_round_trips() {
    let inputs = synthetic_story(4, 1, 3).unwrap();
    let world = build(&inputs, &with(4, Ablation::Full));
    let dir = tempfile::tempdir().unwrap();
    write_world(&world, dir.path()).unwrap();
    let back = read_world(dir.path()).unwrap();
    assert_eq!(back, world);
    assert_eq!(compute_metrics(&back, None), compute_metrics(&world, None));
    for t in 1..=3 {
        let doc = export_snapshot(&world, 1, t).unwrap();
        assert_eq!(export_snapshot(&back, 1, t).unwrap(), doc);
        let text = fs::read_to_string(dir.path().join(format!("snapshots/scene_1_shot_{t}.json"))).unwrap();
        let again = SnapshotDocument::from_json(&text).unwrap();
        assert_eq!(again.to_json(), text);
        assert_eq!(render_svg(&again), fs::read_to_string(dir.path().join(format!("topdown/scene_1_shot_{t}.svg"))).unwrap());
    }
}

#[test]
fn snapshots_mirror_the_shot() {
    let inputs = synthetic_story(5, 1, 4).unwrap();
    let world = build(&inputs, &with(5, Ablation::Full));
    let scene = &world.scenes[&1];
    for shot in scene.shots.values() {
        let doc = export_snapshot(&world, 1, shot.shot_id).unwrap();
        assert_eq!(doc.placements.len(), shot.layout.placements.len());
        let track = &shot.camera.as_ref().unwrap().track;
        assert_eq!(doc.camera.as_ref(), Some(track));
        assert_eq!(doc.camera_state(), track.first_state());
        assert!(doc.placements.iter().all(|p| p.asset_type.is_some()));
    }
    assert!(matches!(export_snapshot(&world, 1, 9), Err(PipelineError::UnknownShot(1, 9))));
}

#[test]
fn missing_layout_names_the_scene() {
    let mut inputs = synthetic_story(6, 3, 2).unwrap();
    inputs.layouts.remove(&3);
    let err = build_story(inputs.storyboard, &inputs.dimensions, &inputs.layouts, &BuildConfig::default()).unwrap_err();
    let PipelineError::Build { issues, buildable_scenes } = err else { panic!("{err:?}") };
    assert_eq!(buildable_scenes, vec![1, 2]);
    assert_eq!(issues.len(), 1);
    assert_eq!(issues[0].stage, BuildStage::Layout);
    assert_eq!(issues[0].scene_id, Some(3));
    assert!(issues[0].to_string().contains("scene 3"));
}

#[test]
fn shared_graph_has_no_static_drift() {
    for seed in 0..5 {
        let world = build(&synthetic_story(seed, 2, 4).unwrap(), &with(seed, Ablation::Full));
        let m = compute_metrics(&world, None);
        for (s, ids) in &m.static_ids {
            assert_eq!(ids, &vec![format!("lamp_{s}"), format!("table_{s}")]);
            assert_eq!(m.sde[s], Some(0.0));
        }
    }
}

/// Rigid translations move all eight corners by the same vector, so the drift
/// of one asset between two shots is the distance between their offsets.
fn jitter_oracle(seed: u64, scenes: u32, shots: u32, magnitude: f64) -> BTreeMap<u32, f64> {
    (1..=scenes)
        .map(|s| {
            let ids = [format!("lamp_{s}"), format!("table_{s}")];
            let per_asset: f64 = ids
                .iter()
                .map(|id| {
                    let steps: f64 = (1..shots)
                        .map(|t| {
                            let a = jitter_offset(seed, s, t, id, magnitude);
                            let b = jitter_offset(seed, s, t + 1, id, magnitude);
                            ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt()
                        })
                        .sum();
                    steps / (shots - 1) as f64
                })
                .sum();
            (s, per_asset / ids.len() as f64)
        })
        .collect()
}

#[test]
fn relayout_drift_matches_the_translation_oracle() {
    for seed in 0..5 {
        let config = with(seed, Ablation::NoSharedLayout);
        let world = build(&synthetic_story(seed, 2, 4).unwrap(), &config);
        let m = compute_metrics(&world, None);
        for (s, want) in jitter_oracle(seed, 2, 4, config.jitter_m) {
            let got = m.sde[&s].unwrap();
            assert!(want > 0.0);
            assert!((got - want).abs() < 1e-9, "seed {seed} scene {s}: {got} vs {want}");
        }
    }
}

#[test]
fn full_graph_is_the_strict_minimum() {
    for seed in 0..5 {
        let inputs = synthetic_story(seed, 2, 3).unwrap();
        let sde: BTreeMap<Ablation, f64> = Ablation::ALL
            .into_iter()
            .map(|a| (a, compute_metrics(&build(&inputs, &with(seed, a)), None).sde_mean().unwrap()))
            .collect();
        assert_eq!(sde[&Ablation::Full], 0.0);
        for a in [Ablation::NoGraph, Ablation::NoAssetRegistry, Ablation::NoSharedLayout] {
            assert!(sde[&a] > 0.0, "seed {seed} {a:?}");
        }
    }
}

#[test]
fn shared_registry_reuses_models() {
    let inputs = synthetic_story(2, 2, 3).unwrap();
    let full = compute_metrics(&build(&inputs, &with(2, Ablation::Full)), None).library;
    // 8 distinct assets, each requested once at build time and again per shot it is in
    assert_eq!(full.unique_models, 8);
    assert!(full.raw_requests > full.unique_models);
    assert_eq!(full.reuse_count, full.raw_requests - full.unique_models);
    let rebuilt = compute_metrics(&build(&inputs, &with(2, Ablation::NoAssetRegistry)), None).library;
    assert!(rebuilt.unique_models > full.unique_models);
}

#[test]
fn metrics_are_a_pure_function_of_the_world() {
    let world = build(&synthetic_story(8, 2, 3).unwrap(), &with(8, Ablation::NoGraph));
    let before = serde_json::to_string(&world).unwrap();
    let a = compute_metrics(&world, None);
    let b = compute_metrics(&world, None);
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&world).unwrap(), before);
    let only_tables: BTreeMap<u32, Vec<String>> =
        [(1, vec!["table_1".to_string(), "nobody".to_string()]), (2, vec!["table_2".to_string()])].into();
    let c = compute_metrics(&world, Some(&only_tables));
    assert_eq!(c.static_ids[&1], vec!["table_1".to_string()]);
}
