//! `blocking`: build story worlds, check and repair layouts, inspect cameras
//! and metrics, render top-down views, and serve editing sessions.
//!
//! Exit codes: 0 ok, 2 bad input, 3 verification residuals, 4 internal error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use blocking_core::camera::{camera_pose, CameraPose, Keyframe};
use blocking_core::layout::{repair_scene, verify_scene, ErrorCounts, SceneLayout, Tolerances};
use blocking_core::pipeline::{
    build_story_from_texts, compute_metrics, export_snapshot, read_world, render_svg, write_world, Ablation, BuildConfig,
    PipelineError, SnapshotDocument, StoryWorld,
};
use blocking_editor::{serve, AppState};

const PORT_ENV: &str = "BLOCKING_ENGINE_PORT";
const DEFAULT_PORT: u16 = 7878;
/// Copies of the build inputs, kept next to the world so other ablations can
/// be rebuilt from it.
const INPUTS_DIR: &str = "inputs";

#[derive(Parser)]
#[command(name = "blocking", version, about = "Grounded 3D storyboard blocking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a world directory from a storyboard, dimension estimates and per-scene layouts.
    Build {
        #[arg(long)]
        storyboard: PathBuf,
        #[arg(long)]
        dims: PathBuf,
        /// Directory of `scene_<N>.json` layout documents.
        #[arg(long)]
        layouts: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Build configuration JSON; missing fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Verify a scene layout (a serialized layout or a shot snapshot).
    Verify {
        #[arg(long)]
        layout: PathBuf,
    },
    /// Repair a scene layout and print the result with per-turn counts.
    Repair {
        #[arg(long)]
        layout: PathBuf,
        #[arg(long, default_value_t = 5)]
        max_turns: usize,
    },
    /// Camera keyframes and poses of a shot, from a snapshot file or a world directory.
    Camera {
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        shot: u32,
        /// Scene to read when `--snapshot` is a world directory.
        #[arg(long)]
        scene: Option<u32>,
    },
    /// Consistency metrics of a world, or of the same story rebuilt under an ablation.
    Metrics {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        ablation: Option<Ablation>,
    },
    /// Write the top-down SVG of one shot.
    Render {
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        scene: u32,
        #[arg(long)]
        shot: u32,
        /// Output file; `-` writes to stdout.
        #[arg(long)]
        svg: PathBuf,
    },
    /// Serve editing sessions over HTTP.
    Serve {
        #[arg(long)]
        world: PathBuf,
        /// Falls back to BLOCKING_ENGINE_PORT, then 7878.
        #[arg(long)]
        port: Option<u16>,
    },
}

enum Failure {
    Input(String, Value),
    Residual(Value),
    Internal(String, Value),
}

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Failure::Input(msg.into(), Value::Null)
    }

    fn internal(msg: impl Into<String>) -> Self {
        Failure::Internal(msg.into(), Value::Null)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match &e {
            PipelineError::Build { issues, buildable_scenes } => {
                let details = json!({"issues": issues, "buildable_scenes": buildable_scenes});
                if issues.iter().all(|i| i.stage.is_input()) {
                    Failure::Input(e.to_string(), details)
                } else {
                    Failure::Internal(e.to_string(), details)
                }
            }
            PipelineError::UnknownShot(..) => Failure::input(e.to_string()),
            PipelineError::Io(_) => Failure::input(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn print_json(v: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("output serializes"));
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn scene_file_id(name: &str) -> Option<u32> {
    name.strip_prefix("scene_")?.strip_suffix(".json")?.parse().ok()
}

fn read_layouts(dir: &Path) -> Result<BTreeMap<u32, String>, Failure> {
    let entries = fs::read_dir(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    let mut out = BTreeMap::new();
    for e in entries {
        let e = e.map_err(|e| Failure::input(e.to_string()))?;
        if let Some(id) = e.file_name().to_str().and_then(scene_file_id) {
            out.insert(id, read(&e.path())?);
        }
    }
    Ok(out)
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Failure::internal(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::internal(format!("{}: {e}", path.display())))
}

struct Inputs {
    storyboard: String,
    dims: String,
    layouts: BTreeMap<u32, String>,
}

fn save_inputs(out: &Path, inputs: &Inputs) -> Result<(), Failure> {
    let dir = out.join(INPUTS_DIR);
    write(&dir.join("storyboard.json"), &inputs.storyboard)?;
    write(&dir.join("dims.json"), &inputs.dims)?;
    for (s, text) in &inputs.layouts {
        write(&dir.join("layouts").join(format!("scene_{s}.json")), text)?;
    }
    Ok(())
}

fn load_inputs(world_dir: &Path) -> Result<Inputs, Failure> {
    let dir = world_dir.join(INPUTS_DIR);
    Ok(Inputs {
        storyboard: read(&dir.join("storyboard.json"))?,
        dims: read(&dir.join("dims.json"))?,
        layouts: read_layouts(&dir.join("layouts"))?,
    })
}

fn build(
    storyboard: &Path,
    dims: &Path,
    layouts: &Path,
    out: &Path,
    config: Option<&Path>,
    seed: Option<u64>,
) -> Outcome {
    let mut cfg = match config {
        Some(p) => serde_json::from_str::<BuildConfig>(&read(p)?)
            .map_err(|e| Failure::input(format!("{}: {e}", p.display())))?,
        None => BuildConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let inputs = Inputs { storyboard: read(storyboard)?, dims: read(dims)?, layouts: read_layouts(layouts)? };
    let world = build_story_from_texts(&inputs.storyboard, &inputs.dims, &inputs.layouts, &cfg)?;
    write_world(&world, out).map_err(|e| Failure::internal(e.to_string()))?;
    save_inputs(out, &inputs)?;
    let scenes: Vec<Value> = world
        .scenes
        .values()
        .map(|s| {
            json!({
                "scene_id": s.scene_id,
                "status": s.gate.status,
                "turns_used": s.gate.turns_used,
                "committed": s.gate.committed,
                "residual": ErrorCounts::from_diagnostics(&s.gate.residual),
                "shots": s.shots.keys().collect::<Vec<_>>(),
            })
        })
        .collect();
    let report = json!({"out": out.display().to_string(), "ablation": cfg.ablation, "seed": cfg.seed, "scenes": scenes});
    print_json(&report);
    if world.uncommitted_scenes().is_empty() {
        Ok(())
    } else {
        Err(Failure::Residual(json!({"uncommitted_scenes": world.uncommitted_scenes()})))
    }
}

/// A serialized layout, or the layout inside a shot snapshot.
fn load_layout(path: &Path) -> Result<SceneLayout, Failure> {
    let text = read(path)?;
    if let Ok(l) = serde_json::from_str::<SceneLayout>(&text) {
        return Ok(l);
    }
    match SnapshotDocument::from_json(&text) {
        Ok(doc) => Ok(SceneLayout {
            scene_size: doc.scene_size,
            placements: doc.placements.iter().map(|p| (p.asset_id.clone(), p.placement())).collect(),
            constraints: doc.constraints,
            shot_modifications: Vec::new(),
        }),
        Err(_) => Err(Failure::input(format!("{}: neither a scene layout nor a shot snapshot", path.display()))),
    }
}

fn verify(layout: &Path) -> Outcome {
    let l = load_layout(layout)?;
    let diags = verify_scene(&l, &Tolerances::default()).map_err(|e| Failure::input(e.to_string()))?;
    print_json(&json!({"counts": ErrorCounts::from_diagnostics(&diags), "diagnostics": diags}));
    if diags.is_empty() {
        Ok(())
    } else {
        Err(Failure::Residual(Value::Null))
    }
}

fn repair(layout: &Path, max_turns: usize) -> Outcome {
    let tol = Tolerances::default();
    let l = load_layout(layout)?;
    let diags = verify_scene(&l, &tol).map_err(|e| Failure::input(e.to_string()))?;
    let out = repair_scene(&l, &diags, max_turns, &tol).map_err(|e| Failure::internal(e.to_string()))?;
    print_json(&json!({
        "converged": out.converged,
        "turns_used": out.turns_used,
        "table": out.table(),
        "residual": out.residual,
        "layout": out.layout,
    }));
    if out.converged {
        Ok(())
    } else {
        Err(Failure::Residual(Value::Null))
    }
}

#[derive(Serialize)]
struct PosedKeyframe {
    #[serde(flatten)]
    keyframe: Keyframe,
    #[serde(flatten)]
    pose: CameraPose,
}

fn camera(snapshot: &Path, shot: u32, scene: Option<u32>) -> Outcome {
    let doc = if snapshot.is_dir() {
        let world = read_world(snapshot)?;
        let scene = match scene {
            Some(s) => s,
            None => {
                let with_shot: Vec<u32> =
                    world.scenes.values().filter(|s| s.shots.contains_key(&shot)).map(|s| s.scene_id).collect();
                match with_shot.as_slice() {
                    [only] => *only,
                    _ => return Err(Failure::input(format!("shot {shot} is ambiguous or missing; pass --scene"))),
                }
            }
        };
        export_snapshot(&world, scene, shot)?
    } else {
        let doc = SnapshotDocument::from_json(&read(snapshot)?)
            .map_err(|e| Failure::input(format!("{}: {e}", snapshot.display())))?;
        if doc.shot_id != shot || scene.is_some_and(|s| s != doc.scene_id) {
            return Err(Failure::input(format!(
                "{} holds scene {} shot {}",
                snapshot.display(),
                doc.scene_id,
                doc.shot_id
            )));
        }
        doc
    };
    let Some(track) = &doc.camera else {
        return Err(Failure::input(format!("scene {} shot {} has no camera", doc.scene_id, doc.shot_id)));
    };
    let keyframes: Vec<PosedKeyframe> = track
        .keyframes
        .iter()
        .map(|k| PosedKeyframe { keyframe: *k, pose: camera_pose(&k.state(track.intrinsics)) })
        .collect();
    print_json(&json!({
        "scene_id": doc.scene_id,
        "shot_id": doc.shot_id,
        "intrinsics": track.intrinsics,
        "interpolation": track.interpolation,
        "keyframes": keyframes,
        "expected": doc.expected,
        "detected": doc.detected,
    }));
    Ok(())
}

fn metrics(world_dir: &Path, ablation: Option<Ablation>) -> Outcome {
    let world = read_world(world_dir)?;
    let report = match ablation {
        Some(a) if a != world.config.ablation => {
            let inputs = load_inputs(world_dir)?;
            let cfg = BuildConfig { ablation: a, ..world.config };
            let rebuilt: StoryWorld = build_story_from_texts(&inputs.storyboard, &inputs.dims, &inputs.layouts, &cfg)?;
            compute_metrics(&rebuilt, None)
        }
        _ => compute_metrics(&world, None),
    };
    let mut v = serde_json::to_value(&report).expect("report serializes");
    v["sde_mean"] = json!(report.sde_mean());
    print_json(&v);
    Ok(())
}

fn render(world_dir: &Path, scene: u32, shot: u32, svg: &Path) -> Outcome {
    let world = read_world(world_dir)?;
    let text = render_svg(&export_snapshot(&world, scene, shot)?);
    if svg.as_os_str() == "-" {
        print!("{text}");
        Ok(())
    } else {
        write(svg, &text)
    }
}

fn port(flag: Option<u16>) -> Result<u16, Failure> {
    if let Some(p) = flag {
        return Ok(p);
    }
    match std::env::var(PORT_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::input(format!("{PORT_ENV}=`{v}` is not a port"))),
        Err(_) => Ok(DEFAULT_PORT),
    }
}

fn serve_world(world_dir: &Path, flag: Option<u16>) -> Outcome {
    let world = read_world(world_dir)?;
    let port = port(flag)?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::internal(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", port))
            .await
            .map_err(|e| Failure::internal(format!("bind 127.0.0.1:{port}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| Failure::internal(e.to_string()))?;
        println!("{}", json!({"listening": addr.to_string()}));
        let _ = std::io::stdout().flush();
        let state = Arc::new(AppState::with_world(world_dir.to_path_buf(), world));
        serve(listener, state).await.map_err(|e| Failure::internal(e.to_string()))
    })
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Build { storyboard, dims, layouts, out, config, seed } => {
            build(&storyboard, &dims, &layouts, &out, config.as_deref(), seed)
        }
        Command::Verify { layout } => verify(&layout),
        Command::Repair { layout, max_turns } => repair(&layout, max_turns),
        Command::Camera { snapshot, shot, scene } => camera(&snapshot, shot, scene),
        Command::Metrics { world, ablation } => metrics(&world, ablation),
        Command::Render { world, scene, shot, svg } => render(&world, scene, shot, &svg),
        Command::Serve { world, port } => serve_world(&world, port),
    }
}

fn main() -> ExitCode {
    let err = |code: &str, message: String, details: Value| {
        eprintln!("{}", json!({"error": {"code": code, "message": message, "details": details}}));
    };
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m, d)) => {
            err("schema", m, d);
            ExitCode::from(2)
        }
        Err(Failure::Residual(d)) => {
            err("residual", "verification residuals remain".into(), d);
            ExitCode::from(3)
        }
        Err(Failure::Internal(m, d)) => {
            err("internal", m, d);
            ExitCode::from(4)
        }
    }
}
