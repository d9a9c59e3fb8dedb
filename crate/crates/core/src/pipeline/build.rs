//! Story build: assets, gated layouts, shells, per-shot snapshots and cameras.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::synth::jitter_offset;
use super::{stable_seed, BuildConfig, PipelineError};
use crate::assets::{
    default_raw_dims, materialize_placeholder, parse_dimension_estimates, AssetLibrary, CanonicalAsset, DimensionEstimate,
};
use crate::camera::{
    aabb_in_view, init_camera, plan_movement, servo_loop, CameraIntrinsics, CameraState, CanonicalView, FramingSpec,
    GeometricCritic, KeyframeTrack, ServoOutcome,
};
use crate::geometry::{world_aabb, Aabb, Vec3};
use crate::layout::{
    apply_shot_modifications, generate_scene_shell, parse_layout_document, retain_members, verify_scene, Diagnostic,
    ErrorCounts, LayoutDocument, LayoutGate, SceneLayout, SceneShell,
};
use crate::memory::{
    layout_validator, AssetType, CommitOutcome, ContinuityMemoryGraph, Proposal, ProposalPayload,
    Provenance, SceneType, ShotRecord, Storyboard,
};
use crate::reflection::{run_reflection, ReflectionStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildStage {
    Parse,
    Assets,
    Layout,
    Gate,
    Camera,
}

impl BuildStage {
    /// Whether the problem lies in the inputs rather than the engine.
    pub fn is_input(self) -> bool {
        !matches!(self, BuildStage::Gate)
    }
}

/// One problem found while building, with where it happened.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildIssue {
    pub stage: BuildStage,
    pub scene_id: Option<u32>,
    pub shot_id: Option<u32>,
    pub message: String,
}

impl fmt::Display for BuildIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.scene_id, self.shot_id) {
            (Some(s), Some(t)) => write!(f, "scene {s} shot {t}: {}", self.message),
            (Some(s), None) => write!(f, "scene {s}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

fn issue(stage: BuildStage, scene_id: Option<u32>, shot_id: Option<u32>, message: impl Into<String>) -> BuildIssue {
    BuildIssue { stage, scene_id, shot_id, message: message.into() }
}

/// What the layout gate did for one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateTrace {
    pub status: ReflectionStatus,
    pub turns_used: usize,
    pub scores: Vec<f64>,
    /// Counts at each scored turn, then after the fallback when it ran.
    pub per_turn: Vec<ErrorCounts>,
    pub residual: Vec<Diagnostic>,
    pub committed: bool,
}

impl GateTrace {
    /// Rows D, R, O, C; one column per entry of `per_turn`.
    pub fn table(&self) -> BTreeMap<String, Vec<usize>> {
        crate::layout::DiagnosticKind::ALL
            .iter()
            .map(|k| (k.code().to_string(), self.per_turn.iter().map(|c| c.get(*k)).collect()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotCamera {
    pub spec: FramingSpec,
    pub initial: CameraState,
    pub servo: ServoOutcome,
    pub track: KeyframeTrack,
}

impl ShotCamera {
    /// Camera at the first keyframe.
    pub fn state(&self) -> CameraState {
        self.track.first_state().unwrap_or(self.servo.final_state)
    }
}

/// One shot: the layout in effect, who is expected and who the camera sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotSnapshot {
    pub scene_id: u32,
    pub shot_id: u32,
    pub layout: SceneLayout,
    /// Characters on stage during the shot.
    pub expected: Vec<String>,
    /// Characters whose boxes reach into the view volume at the first keyframe.
    pub detected: Vec<String>,
    pub camera: Option<ShotCamera>,
    /// Verification of the shot layout; never repaired.
    pub advisories: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneWorld {
    pub scene_id: u32,
    pub scene_type: SceneType,
    pub shell: SceneShell,
    pub base_layout: SceneLayout,
    pub assets: BTreeMap<String, CanonicalAsset>,
    pub gate: GateTrace,
    pub shots: BTreeMap<u32, ShotSnapshot>,
}

impl SceneWorld {
    pub fn asset_type(&self, id: &str) -> Option<AssetType> {
        self.assets.get(id).map(|a| a.asset_type)
    }

    pub fn characters(&self) -> BTreeSet<String> {
        self.assets.values().filter(|a| a.asset_type == AssetType::Character).map(|a| a.asset_id.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryWorld {
    pub config: BuildConfig,
    pub graph: ContinuityMemoryGraph,
    pub library: AssetLibrary,
    pub scenes: BTreeMap<u32, SceneWorld>,
}

impl StoryWorld {
    pub fn shot(&self, scene_id: u32, shot_id: u32) -> Result<(&SceneWorld, &ShotSnapshot), PipelineError> {
        let scene = self.scenes.get(&scene_id).ok_or(PipelineError::UnknownShot(scene_id, shot_id))?;
        let shot = scene.shots.get(&shot_id).ok_or(PipelineError::UnknownShot(scene_id, shot_id))?;
        Ok((scene, shot))
    }

    /// Scenes whose base layout did not pass the gate.
    pub fn uncommitted_scenes(&self) -> Vec<u32> {
        self.scenes.values().filter(|s| !s.gate.committed).map(|s| s.scene_id).collect()
    }
}

/// Ids among `candidates` whose boxes in `layout` reach into the view volume.
pub fn detect_onstage<'a>(
    layout: &SceneLayout,
    candidates: impl IntoIterator<Item = &'a String>,
    state: &CameraState,
) -> Vec<String> {
    candidates
        .into_iter()
        .filter(|id| layout.aabb(id).is_some_and(|b| aabb_in_view(state, &b)))
        .cloned()
        .collect()
}

/// Parses the three documents, then builds. Parse problems of every document
/// are reported together.
pub fn build_story_from_texts(
    storyboard: &str,
    dimensions: &str,
    layouts: &BTreeMap<u32, String>,
    config: &BuildConfig,
) -> Result<StoryWorld, PipelineError> {
    let mut issues = Vec::new();
    let sb = serde_json::from_str::<Storyboard>(storyboard)
        .map_err(|e| issues.push(issue(BuildStage::Parse, None, None, format!("storyboard: {e}"))))
        .ok();
    let dims = parse_dimension_estimates(dimensions)
        .map_err(|e| issues.push(issue(BuildStage::Parse, None, None, format!("dimensions: {e}"))))
        .ok();
    let mut docs = BTreeMap::new();
    for (&s, text) in layouts {
        match parse_layout_document(text) {
            Ok(d) => {
                docs.insert(s, d);
            }
            Err(e) => issues.push(issue(BuildStage::Parse, Some(s), None, format!("layout: {e}"))),
        }
    }
    match (sb, dims) {
        (Some(sb), Some(dims)) if issues.is_empty() => build_story(sb, &dims, &docs, config),
        _ => Err(PipelineError::Build { issues, buildable_scenes: Vec::new() }),
    }
}

/// Builds every scene and shot. Problems are collected per scene so a single
/// report names all of them; the error lists the scenes that built cleanly.
/// A layout the gate cannot fix is not an error: it stays uncommitted and is
/// visible in [`StoryWorld::uncommitted_scenes`].
pub fn build_story(
    storyboard: Storyboard,
    dimensions: &[DimensionEstimate],
    layouts: &BTreeMap<u32, LayoutDocument>,
    config: &BuildConfig,
) -> Result<StoryWorld, PipelineError> {
    let mut graph = ContinuityMemoryGraph::from_storyboard(storyboard).map_err(|e| PipelineError::Build {
        issues: vec![issue(BuildStage::Parse, None, None, e.to_string())],
        buildable_scenes: Vec::new(),
    })?;
    let mut issues = Vec::new();
    let mut estimates: BTreeMap<&str, &DimensionEstimate> = BTreeMap::new();
    for e in dimensions {
        if estimates.insert(e.asset_id.as_str(), e).is_some() {
            issues.push(issue(BuildStage::Assets, None, None, format!("two dimension estimates for `{}`", e.asset_id)));
        }
    }
    let mut library = AssetLibrary::new();
    let mut scenes = BTreeMap::new();
    let mut buildable = Vec::new();
    for scene_id in graph.scene_ids() {
        let before = issues.len();
        let built = build_scene(&mut graph, &mut library, &estimates, layouts, scene_id, config, &mut issues);
        if let Some(world) = built.filter(|_| issues.len() == before) {
            buildable.push(scene_id);
            scenes.insert(scene_id, world);
        }
    }
    if !issues.is_empty() {
        return Err(PipelineError::Build { issues, buildable_scenes: buildable });
    }
    Ok(StoryWorld { config: *config, graph, library, scenes })
}

fn request_key(record: &crate::memory::AssetRecord) -> String {
    if record.description.trim().is_empty() {
        record.asset_id.clone()
    } else {
        record.description.clone()
    }
}

/// Raw proxy proportions for a rebuilt asset: the type default with each
/// extent perturbed by up to `spread`.
fn rebuilt_raw_dims(t: AssetType, spread: f64, seed: u64) -> Vec3 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let d = default_raw_dims(t);
    let mut f = || if spread > 0.0 { 1.0 + r.random_range(-spread..=spread) } else { 1.0 };
    Vec3::new(d.x * f(), d.y * f(), d.z * f())
}

#[allow(clippy::too_many_arguments)]
fn build_scene(
    graph: &mut ContinuityMemoryGraph,
    library: &mut AssetLibrary,
    estimates: &BTreeMap<&str, &DimensionEstimate>,
    layouts: &BTreeMap<u32, LayoutDocument>,
    scene_id: u32,
    config: &BuildConfig,
    issues: &mut Vec<BuildIssue>,
) -> Option<SceneWorld> {
    let at = |stage, msg: String| issue(stage, Some(scene_id), None, msg);
    let record = match graph.resolve_scene(scene_id) {
        Ok(r) => r,
        Err(e) => {
            issues.push(at(BuildStage::Parse, e.to_string()));
            return None;
        }
    };
    let universe = graph.scene_universe(scene_id).ok()?;

    let mut assets = BTreeMap::new();
    for id in &universe {
        let Some(rec) = graph.asset(id) else {
            issues.push(at(BuildStage::Assets, format!("asset `{id}` is not on the asset sheet")));
            continue;
        };
        let est = estimates.get(id.as_str()).copied();
        let built = library.get_or_register(&request_key(rec), || {
            materialize_placeholder(rec, est, default_raw_dims(rec.asset_type))
        });
        match built {
            Ok((mut a, _)) => {
                // a reused model keeps its geometry but belongs to this id
                a.asset_id = id.clone();
                a.asset_type = rec.asset_type;
                assets.insert(id.clone(), a);
            }
            Err(e) => issues.push(at(BuildStage::Assets, format!("`{id}`: {e}"))),
        }
    }

    let Some(doc) = layouts.get(&scene_id) else {
        issues.push(at(BuildStage::Layout, format!("no layout document for scene {scene_id}")));
        return None;
    };
    let dims: BTreeMap<String, Vec3> = assets.iter().map(|(k, a)| (k.clone(), a.dims)).collect();
    let layout = match doc.to_scene_layout(&dims) {
        Ok(l) => l,
        Err(e) => {
            issues.push(at(BuildStage::Layout, e.to_string()));
            return None;
        }
    };
    let placed: BTreeSet<String> = layout.placements.keys().cloned().collect();
    for missing in universe.difference(&placed) {
        issues.push(at(BuildStage::Layout, format!("asset `{missing}` has no placement")));
    }
    for extra in placed.difference(&universe) {
        issues.push(at(BuildStage::Layout, format!("placed asset `{extra}` is not part of the scene")));
    }
    if !assets.keys().all(|k| placed.contains(k)) || !placed.is_subset(&universe) {
        return None;
    }

    let mut gate = LayoutGate { tolerances: config.tolerances, fallback_turns: config.fallback_turns };
    let outcome = match run_reflection(&mut gate, &layout, &config.reflection) {
        Ok(o) => o,
        Err(e) => {
            issues.push(at(BuildStage::Gate, e.to_string()));
            return None;
        }
    };
    let base = outcome.result;
    let residual = verify_scene(&base, &config.tolerances).unwrap_or_default();
    let mut per_turn: Vec<ErrorCounts> = outcome.trace.iter().map(|t| t.critique.counts).collect();
    if outcome.status == ReflectionStatus::Handover {
        per_turn.push(ErrorCounts::from_diagnostics(&residual));
    }
    let committed = match graph.commit(
        &Proposal::scene_layout(scene_id, base.clone(), Provenance::Policy),
        layout_validator(config.tolerances),
    ) {
        Ok(CommitOutcome::Accepted(g)) => {
            *graph = g;
            true
        }
        Ok(CommitOutcome::Rejected(_)) => false,
        Err(e) => {
            issues.push(at(BuildStage::Gate, e.to_string()));
            return None;
        }
    };
    let trace = GateTrace {
        status: outcome.status,
        turns_used: outcome.turns_used,
        scores: outcome.trace.iter().map(|t| t.score).collect(),
        per_turn,
        residual,
        committed,
    };
    let shell = generate_scene_shell(&base.scene_size, record.scene_setup.scene_type);
    let characters: BTreeSet<String> =
        assets.values().filter(|a| a.asset_type == AssetType::Character).map(|a| a.asset_id.clone()).collect();

    let shots: Vec<ShotRecord> = graph.shots_of(scene_id).into_iter().cloned().collect();
    let mut snapshots = BTreeMap::new();
    for shot in &shots {
        let t = shot.shot_id;
        let at_shot = |stage, msg: String| issue(stage, Some(scene_id), Some(t), msg);
        let members = match graph.members_at(scene_id, t) {
            Ok(m) => m,
            Err(e) => {
                issues.push(at_shot(BuildStage::Layout, e.to_string()));
                continue;
            }
        };

        let mut shot_base = base.clone();
        if !config.ablation.shares_layout() {
            for (id, p) in shot_base.placements.iter_mut() {
                p.location += jitter_offset(config.seed, scene_id, t, id, config.jitter_m);
            }
        }
        for id in &members {
            let Some(rec) = graph.asset(id) else { continue };
            if config.ablation.shares_assets() {
                let _ = library.get_or_register(&request_key(rec), || Ok::<_, String>(assets[id].clone()));
                continue;
            }
            let seed = stable_seed(&[&config.seed.to_string(), "mesh", &scene_id.to_string(), &t.to_string(), id]);
            let raw = rebuilt_raw_dims(rec.asset_type, config.mesh_jitter, seed);
            let key = format!("{} scene {scene_id} shot {t}", request_key(rec));
            let est = estimates.get(id.as_str()).copied();
            match library.get_or_register(&key, || materialize_placeholder(rec, est, raw)) {
                Ok((a, _)) => {
                    if let Some(p) = shot_base.placements.get_mut(id) {
                        p.dimensions = a.dims;
                    }
                }
                Err(e) => issues.push(at_shot(BuildStage::Assets, format!("`{id}`: {e}"))),
            }
        }
        let mut layout_t = match apply_shot_modifications(&shot_base, t) {
            Ok(l) => retain_members(&l, &members),
            Err(e) => {
                issues.push(at_shot(BuildStage::Layout, e.to_string()));
                continue;
            }
        };
        layout_t.shot_modifications.clear();
        let advisories = verify_scene(&layout_t, &config.tolerances).unwrap_or_default();
        let expected: Vec<String> = members.iter().filter(|m| characters.contains(*m)).cloned().collect();

        let camera = match shot_camera(&layout_t, &members, shot, config) {
            Ok(c) => c,
            Err(e) => {
                issues.push(at_shot(BuildStage::Camera, e));
                continue;
            }
        };
        if let Some(c) = &camera {
            let proposal = Proposal {
                payload: ProposalPayload::ShotCamera { scene_id, shot_id: t, track: c.track.clone() },
                provenance: Provenance::Policy,
            };
            match graph.commit(&proposal, layout_validator(config.tolerances)) {
                Ok(CommitOutcome::Accepted(g)) => *graph = g,
                Ok(CommitOutcome::Rejected(r)) => {
                    issues.push(at_shot(BuildStage::Camera, format!("camera track rejected: {}", r.note.unwrap_or_default())));
                }
                Err(e) => issues.push(at_shot(BuildStage::Camera, e.to_string())),
            }
        }
        let detected = match &camera {
            Some(c) => detect_onstage(&layout_t, &expected, &c.state()),
            None => Vec::new(),
        };
        snapshots.insert(
            t,
            ShotSnapshot { scene_id, shot_id: t, layout: layout_t, expected, detected, camera, advisories },
        );
    }

    Some(SceneWorld {
        scene_id,
        scene_type: record.scene_setup.scene_type,
        shell,
        base_layout: base,
        assets,
        gate: trace,
        shots: snapshots,
    })
}

/// Frames the shot's focus assets, or everything on stage when none of them
/// is present. The camera starts on the side the first focus asset faces.
fn shot_camera(
    layout: &SceneLayout,
    members: &BTreeSet<String>,
    shot: &ShotRecord,
    config: &BuildConfig,
) -> Result<Option<ShotCamera>, String> {
    let instr = &shot.camera_instruction;
    let focus: Vec<String> = instr.focus_on_ids.iter().filter(|id| layout.placements.contains_key(*id)).cloned().collect();
    let targets: Vec<Aabb> = if focus.is_empty() {
        members.iter().filter_map(|id| layout.placements.get(id)).map(world_aabb).collect()
    } else {
        focus.iter().map(|id| world_aabb(&layout.placements[id])).collect()
    };
    if targets.is_empty() {
        return Ok(None);
    }
    let view = focus.first().map_or(CanonicalView::Front, |id| CanonicalView::nearest(layout.placements[id].forward_xy()));
    let mut spec = FramingSpec::new(focus, instr.angle, instr.distance).with_view(view);
    spec.movement = instr.movement;
    spec.direction = instr.direction;
    let initial = init_camera(&targets, &spec, CameraIntrinsics::for_distance(instr.distance), config.margin)
        .map_err(|e| e.to_string())?;
    let critic = GeometricCritic { steps: config.servo_steps };
    let servo = servo_loop(&initial, &targets, &spec, &critic, &config.servo_steps, &config.reflection);
    let track = plan_movement(
        &servo.final_state,
        instr.movement,
        instr.direction,
        config.n_frames,
        &targets,
        &config.servo_steps,
        &config.extent,
    )
    .map_err(|e| e.to_string())?;
    Ok(Some(ShotCamera { spec, initial, servo, track }))
}
