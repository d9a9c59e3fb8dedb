//! Gatekeeping: proposals reach the graph only when the validator passes them.

use std::fmt::Display;

use serde::{Deserialize, Serialize};

use super::{ContinuityMemoryGraph, GraphError};
use crate::camera::KeyframeTrack;
use crate::layout::{verify_scene, Diagnostic, SceneLayout, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProposalKind {
    SceneLayout,
    ShotCamera,
    ShotModification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Policy,
    ManualEdit,
}

/// The payload type is tied to the kind by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProposalPayload {
    SceneLayout { scene_id: u32, layout: SceneLayout },
    ShotCamera { scene_id: u32, shot_id: u32, track: KeyframeTrack },
    /// The full per-shot layout snapshot.
    ShotModification { scene_id: u32, shot_id: u32, layout: SceneLayout },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub payload: ProposalPayload,
    pub provenance: Provenance,
}

impl Proposal {
    pub fn scene_layout(scene_id: u32, layout: SceneLayout, provenance: Provenance) -> Self {
        Self { payload: ProposalPayload::SceneLayout { scene_id, layout }, provenance }
    }

    pub fn kind(&self) -> ProposalKind {
        match self.payload {
            ProposalPayload::SceneLayout { .. } => ProposalKind::SceneLayout,
            ProposalPayload::ShotCamera { .. } => ProposalKind::ShotCamera,
            ProposalPayload::ShotModification { .. } => ProposalKind::ShotModification,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub diagnostics: Vec<Diagnostic>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl DiagnosticReport {
    pub fn note(note: impl Into<String>) -> Self {
        Self { diagnostics: Vec::new(), note: Some(note.into()) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    Fail(DiagnosticReport),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CommitOutcome {
    Accepted(ContinuityMemoryGraph),
    Rejected(DiagnosticReport),
}

impl CommitOutcome {
    pub fn accepted(self) -> Option<ContinuityMemoryGraph> {
        match self {
            CommitOutcome::Accepted(g) => Some(g),
            CommitOutcome::Rejected(_) => None,
        }
    }
}

/// Validator used by the pipeline: layouts must verify clean, camera tracks
/// must have increasing frames and unit rotations.
pub fn layout_validator(
    tol: Tolerances,
) -> impl Fn(&Proposal, &ContinuityMemoryGraph) -> Result<Verdict, String> {
    move |proposal, _| match &proposal.payload {
        ProposalPayload::SceneLayout { layout, .. } | ProposalPayload::ShotModification { layout, .. } => {
            let diagnostics = verify_scene(layout, &tol).map_err(|e| e.to_string())?;
            Ok(if diagnostics.is_empty() {
                Verdict::Pass
            } else {
                Verdict::Fail(DiagnosticReport { diagnostics, note: None })
            })
        }
        ProposalPayload::ShotCamera { track, .. } => Ok(match track.validate() {
            Ok(()) => Verdict::Pass,
            Err(e) => Verdict::Fail(DiagnosticReport::note(e.to_string())),
        }),
    }
}

impl ContinuityMemoryGraph {
    /// Copy-then-swap update. The receiver is never modified; an accepted
    /// proposal yields a new snapshot with the version bumped by one.
    pub fn commit<V, E>(&self, proposal: &Proposal, validator: V) -> Result<CommitOutcome, GraphError>
    where
        V: FnOnce(&Proposal, &ContinuityMemoryGraph) -> Result<Verdict, E>,
        E: Display,
    {
        match &proposal.payload {
            ProposalPayload::SceneLayout { scene_id, .. } => {
                if self.scene(*scene_id).is_none() {
                    return Err(GraphError::UnknownScene(*scene_id));
                }
            }
            ProposalPayload::ShotCamera { scene_id, shot_id, .. }
            | ProposalPayload::ShotModification { scene_id, shot_id, .. } => {
                if self.shot(*scene_id, *shot_id).is_none() {
                    return Err(GraphError::UnknownShot(*scene_id, *shot_id));
                }
            }
        }
        match validator(proposal, self).map_err(|e| GraphError::ValidatorFailure(e.to_string()))? {
            Verdict::Fail(report) => Ok(CommitOutcome::Rejected(report)),
            Verdict::Pass => {
                let mut next = self.clone();
                let c = &mut next.committed;
                match &proposal.payload {
                    ProposalPayload::SceneLayout { scene_id, layout } => {
                        c.scene_layouts.insert(*scene_id, layout.clone());
                    }
                    ProposalPayload::ShotCamera { scene_id, shot_id, track } => {
                        c.shot_cameras.insert((*scene_id, *shot_id), track.clone());
                    }
                    ProposalPayload::ShotModification { scene_id, shot_id, layout } => {
                        c.shot_layouts.insert((*scene_id, *shot_id), layout.clone());
                    }
                }
                next.version += 1;
                Ok(CommitOutcome::Accepted(next))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{EulerDeg, Placement, Vec3};
    use crate::layout::{DiagnosticKind, SceneSize};
    use crate::memory::parse_storyboard;
    use crate::memory::tests::{asset, doc, outline, scene, shot};
    use serde_json::json;

    fn graph() -> ContinuityMemoryGraph {
        let text = doc(
            json!([scene(1, None, &["a", "b"])]),
            json!([shot(1, 1, &["a"])]),
            json!([asset("a", "object"), asset("b", "object")]),
            outline(&[(1, 1)]),
        );
        parse_storyboard(&text).unwrap()
    }

    fn two_boxes(gap: f64) -> SceneLayout {
        let p = |x| Placement::new(Vec3::new(x, 0.0, 0.0), EulerDeg::default(), Vec3::splat(1.0));
        SceneLayout::new(SceneSize::symmetric(10.0)).with_placement("a", p(0.0)).with_placement("b", p(1.0 + gap))
    }

    #[test]
    fn clean_layout_is_accepted() {
        let g = graph();
        let p = Proposal::scene_layout(1, two_boxes(0.5), Provenance::Policy);
        let next = g.commit(&p, layout_validator(Tolerances::default())).unwrap().accepted().unwrap();
        assert_eq!(next.version(), 1);
        assert_eq!(next.committed().scene_layouts[&1], two_boxes(0.5));
        assert_eq!(g.version(), 0);
        let again = next.commit(&p, layout_validator(Tolerances::default())).unwrap().accepted().unwrap();
        assert_eq!(again.version(), 2);
        assert_eq!(again.committed(), next.committed());
    }

    #[test]
    fn interpenetration_is_rejected_without_mutation() {
        let g = graph();
        let before = serde_json::to_string(&g).unwrap();
        let p = Proposal::scene_layout(1, two_boxes(-0.5), Provenance::ManualEdit);
        match g.commit(&p, layout_validator(Tolerances::default())).unwrap() {
            CommitOutcome::Rejected(r) => {
                assert_eq!(r.diagnostics.len(), 1);
                assert_eq!(r.diagnostics[0].kind, DiagnosticKind::Occlusion);
                assert!((r.diagnostics[0].measured - 0.5).abs() < 1e-9);
            }
            CommitOutcome::Accepted(_) => panic!("overlap accepted"),
        }
        assert_eq!(serde_json::to_string(&g).unwrap(), before);
    }

    #[test]
    fn validator_error_and_missing_target() {
        let g = graph();
        let p = Proposal::scene_layout(1, two_boxes(0.5), Provenance::Policy);
        let err = g.commit(&p, |_, _| Err::<Verdict, _>("boom")).unwrap_err();
        assert_eq!(err, GraphError::ValidatorFailure("boom".into()));
        let p = Proposal::scene_layout(7, two_boxes(0.5), Provenance::Policy);
        assert_eq!(g.commit(&p, |_, _| Ok::<_, String>(Verdict::Pass)).unwrap_err(), GraphError::UnknownScene(7));
        assert_eq!(p.kind(), ProposalKind::SceneLayout);
    }
}
