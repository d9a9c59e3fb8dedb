//! Deterministic repair: apply engine fixes in dependency order, re-verify,
//! repeat.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::verify::{settle_asset, unblock, verify_scene, Diagnostic, DiagnosticKind};
use super::{LayoutError, SceneLayout, Tolerances};
use crate::geometry::{world_aabb, Aabb};
use crate::reflection::{json_digest, verdict_score, Feedback, ReflectionPolicy};

/// Assets grouped into tiers so that anchors come before their dependents.
/// Cycles are broken by releasing the smallest remaining id.
pub fn topological_order(layout: &SceneLayout) -> Vec<Vec<String>> {
    let mut indegree: BTreeMap<&str, usize> = layout.placements.keys().map(|k| (k.as_str(), 0)).collect();
    let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for c in &layout.constraints {
        let Some(anchor) = c.anchor_asset_id.as_deref() else { continue };
        if !indegree.contains_key(anchor) || !indegree.contains_key(c.asset_id.as_str()) {
            continue;
        }
        children.entry(anchor).or_default().push(c.asset_id.as_str());
        *indegree.get_mut(c.asset_id.as_str()).expect("checked above") += 1;
    }
    let mut remaining: BTreeSet<&str> = indegree.keys().copied().collect();
    let mut tiers = Vec::new();
    while !remaining.is_empty() {
        let mut tier: Vec<&str> = remaining.iter().copied().filter(|k| indegree[k] == 0).collect();
        if tier.is_empty() {
            tier.push(*remaining.iter().next().expect("non-empty"));
        }
        for id in &tier {
            remaining.remove(id);
            for ch in children.get(id).into_iter().flatten() {
                let d = indegree.get_mut(ch).expect("known node");
                *d = d.saturating_sub(1);
            }
        }
        tiers.push(tier.into_iter().map(String::from).collect());
    }
    tiers
}

/// Diagnostic counts by family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub direction: usize,
    pub relationship: usize,
    pub occlusion: usize,
    pub contact: usize,
}

impl ErrorCounts {
    pub fn from_diagnostics(diags: &[Diagnostic]) -> Self {
        let mut c = ErrorCounts::default();
        for d in diags {
            *c.slot(d.kind) += 1;
        }
        c
    }

    fn slot(&mut self, kind: DiagnosticKind) -> &mut usize {
        match kind {
            DiagnosticKind::Direction => &mut self.direction,
            DiagnosticKind::Relationship => &mut self.relationship,
            DiagnosticKind::Occlusion => &mut self.occlusion,
            DiagnosticKind::Contact => &mut self.contact,
        }
    }

    pub fn get(&self, kind: DiagnosticKind) -> usize {
        match kind {
            DiagnosticKind::Direction => self.direction,
            DiagnosticKind::Relationship => self.relationship,
            DiagnosticKind::Occlusion => self.occlusion,
            DiagnosticKind::Contact => self.contact,
        }
    }

    pub fn total(&self) -> usize {
        self.direction + self.relationship + self.occlusion + self.contact
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub layout: SceneLayout,
    pub turns_used: usize,
    /// Counts before the first turn, then after each turn.
    pub per_turn: Vec<ErrorCounts>,
    pub residual: Vec<Diagnostic>,
    pub converged: bool,
}

impl RepairOutcome {
    /// Rows D, R, O, C; one column per verification turn.
    pub fn table(&self) -> BTreeMap<String, Vec<usize>> {
        DiagnosticKind::ALL
            .iter()
            .map(|k| (k.code().to_string(), self.per_turn.iter().map(|c| c.get(*k)).collect()))
            .collect()
    }
}

/// One repair pass. Assets are visited in dependency order and each one
/// with a live diagnostic gets its fresh fixes; placements are then clamped
/// into the footprint. An empty diagnostic list leaves the layout as is.
pub fn repair_turn(layout: &SceneLayout, diagnostics: &[Diagnostic], tol: &Tolerances) -> SceneLayout {
    let mut current = layout.clone();
    if diagnostics.is_empty() {
        return current;
    }
    let count = |l: &SceneLayout| verify_scene(l, tol).map_or(usize::MAX, |d| d.len());
    let order: Vec<String> = topological_order(layout).into_iter().flatten().collect();

    // free sweep: every asset settles in turn
    let mut free = current.clone();
    for id in &order {
        settle_asset(&mut free, id, tol);
    }
    clamp_groups(&mut free);

    // guarded sweep: a settle that adds diagnostics is dropped
    let mut total = count(&current);
    for id in &order {
        let mut trial = current.clone();
        settle_asset(&mut trial, id, tol);
        let n = count(&trial);
        if n <= total {
            (current, total) = (trial, n);
        }
    }
    let mut clamped = current.clone();
    clamp_groups(&mut clamped);
    let n = count(&clamped);
    if n <= total {
        (current, total) = (clamped, n);
    }
    let n = count(&free);
    if n <= total {
        (current, total) = (free, n);
    }
    if total > 0 {
        let stuck: BTreeSet<String> = verify_scene(&current, tol).into_iter().flatten().map(|d| d.asset_id).collect();
        for id in stuck {
            if let Some(l) = unblock(&current, &id, tol) {
                current = l;
            }
        }
    }
    current
}

/// Assets linked by anchors, as sorted id lists.
fn constraint_groups(layout: &SceneLayout) -> Vec<Vec<String>> {
    let mut group: BTreeMap<&str, usize> = layout.placements.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for c in &layout.constraints {
            let Some(a) = c.anchor_asset_id.as_deref() else { continue };
            let (Some(&ga), Some(&gs)) = (group.get(a), group.get(c.asset_id.as_str())) else { continue };
            if ga != gs {
                let (keep, drop) = (ga.min(gs), ga.max(gs));
                for g in group.values_mut() {
                    if *g == drop {
                        *g = keep;
                    }
                }
                changed = true;
            }
        }
    }
    let mut out: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (id, g) in group {
        out.entry(g).or_default().push(id.to_string());
    }
    out.into_values().collect()
}

/// Pulls placements back onto the footprint. A group of linked assets that
/// fits moves rigidly so relations inside it survive; otherwise each asset is
/// clamped on its own.
fn clamp_groups(layout: &mut SceneLayout) {
    let size = layout.scene_size;
    for ids in constraint_groups(layout) {
        let boxes: Vec<Aabb> = ids.iter().map(|id| world_aabb(&layout.placements[id])).collect();
        let union = boxes.iter().skip(1).fold(boxes[0], |u, b| u.union(b));
        let e = union.extent();
        if e.x <= size.x - size.x_negative && e.y <= size.y - size.y_negative {
            let t = size.clamp_shift(&union);
            for id in &ids {
                layout.placements.get_mut(id).expect("grouped ids exist").location += t;
            }
        } else {
            for id in &ids {
                let p = layout.placements.get_mut(id).expect("grouped ids exist");
                p.location += size.clamp_shift(&world_aabb(p));
            }
        }
    }
}

/// Repeats [`repair_turn`] until the layout verifies clean or `max_turns` is
/// spent. On non-convergence the layout with the fewest diagnostics is
/// returned with `converged = false`.
pub fn repair_scene(
    layout: &SceneLayout,
    diagnostics: &[Diagnostic],
    max_turns: usize,
    tol: &Tolerances,
) -> Result<RepairOutcome, LayoutError> {
    let mut current = layout.clone();
    let mut diags = diagnostics.to_vec();
    let mut per_turn = vec![ErrorCounts::from_diagnostics(&diags)];
    let mut best = (diags.len(), current.clone(), diags.clone());
    let mut turns = 0;
    while !diags.is_empty() && turns < max_turns {
        current = repair_turn(&current, &diags, tol);
        diags = verify_scene(&current, tol)?;
        turns += 1;
        per_turn.push(ErrorCounts::from_diagnostics(&diags));
        if diags.len() < best.0 {
            best = (diags.len(), current.clone(), diags.clone());
        }
    }
    let (_, layout, residual) = best;
    Ok(RepairOutcome { converged: residual.is_empty(), layout, turns_used: turns, per_turn, residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateCritique {
    pub counts: ErrorCounts,
    pub diagnostics: Vec<Diagnostic>,
}

/// The layout gatekeeper as a reflection policy: the engine verdict is the
/// score, one repair turn is the refinement, an extended repair the fallback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutGate {
    pub tolerances: Tolerances,
    pub fallback_turns: usize,
}

impl Default for LayoutGate {
    fn default() -> Self {
        Self { tolerances: Tolerances::default(), fallback_turns: 20 }
    }
}

impl ReflectionPolicy for LayoutGate {
    type Context = SceneLayout;
    type Output = SceneLayout;
    type Critique = GateCritique;
    type Error = LayoutError;

    fn generate(&mut self, proposal: &SceneLayout) -> Result<SceneLayout, LayoutError> {
        Ok(proposal.clone())
    }

    fn score(&mut self, output: &SceneLayout, _: &SceneLayout) -> Result<Feedback<GateCritique>, LayoutError> {
        let diagnostics = verify_scene(output, &self.tolerances)?;
        Ok(Feedback::new(
            verdict_score(diagnostics.is_empty()),
            GateCritique { counts: ErrorCounts::from_diagnostics(&diagnostics), diagnostics },
        ))
    }

    fn refine(
        &mut self,
        output: &SceneLayout,
        feedback: &Feedback<GateCritique>,
        _: &SceneLayout,
    ) -> Result<SceneLayout, LayoutError> {
        Ok(repair_turn(output, &feedback.critique.diagnostics, &self.tolerances))
    }

    fn fallback(&mut self, proposal: &SceneLayout) -> Result<SceneLayout, LayoutError> {
        let diags = verify_scene(proposal, &self.tolerances)?;
        Ok(repair_scene(proposal, &diags, self.fallback_turns, &self.tolerances)?.layout)
    }

    fn digest(&self, output: &SceneLayout) -> String {
        json_digest(output)
    }
}
