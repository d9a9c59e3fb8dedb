//! Constraint verification. Every diagnostic carries the exact transform that
//! clears it.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::repair::topological_order;
use super::{Facing, LayoutError, Relationship, SceneLayout, SpatialConstraint, Tolerances};
use crate::geometry::{
    angle_between_deg, bearing_deg, facing_rotation_z, normalize_deg, penetration, world_aabb, Aabb, EulerDeg, Placement,
    Vec3, GEOM_EPS,
};

/// Angular inset used when snapping a bearing onto a sector edge, degrees.
const SECTOR_INSET_DEG: f64 = 1e-3;
/// How far inside the sector a bearing fix aims, so later small moves keep it.
const SECTOR_TARGET_MARGIN_DEG: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiagnosticKind {
    Direction,
    Relationship,
    Occlusion,
    Contact,
}

impl DiagnosticKind {
    pub const ALL: [DiagnosticKind; 4] =
        [DiagnosticKind::Direction, DiagnosticKind::Relationship, DiagnosticKind::Occlusion, DiagnosticKind::Contact];

    /// Position within a repair tier: contact, relationship, direction, occlusion.
    pub fn repair_rank(self) -> u8 {
        match self {
            DiagnosticKind::Contact => 0,
            DiagnosticKind::Relationship => 1,
            DiagnosticKind::Direction => 2,
            DiagnosticKind::Occlusion => 3,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            DiagnosticKind::Direction => "D",
            DiagnosticKind::Relationship => "R",
            DiagnosticKind::Occlusion => "O",
            DiagnosticKind::Contact => "C",
        }
    }
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiagnosticKind::Direction => "direction",
            DiagnosticKind::Relationship => "relationship",
            DiagnosticKind::Occlusion => "occlusion",
            DiagnosticKind::Contact => "contact",
        })
    }
}

/// Corrective transform for the diagnostic's `asset_id`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Fix {
    pub translation: Option<Vec3>,
    pub rotation_z: Option<f64>,
}

impl Fix {
    fn translate(t: Vec3) -> Self {
        Self { translation: Some(t), rotation_z: None }
    }

    fn rotate(z: f64) -> Self {
        Self { translation: None, rotation_z: Some(z) }
    }

    fn describe(&self, asset: &str) -> String {
        let mut parts = Vec::new();
        if let Some(t) = self.translation {
            for (i, axis) in ["X", "Y", "Z"].iter().enumerate() {
                let v = t[i];
                if v != 0.0 {
                    parts.push(format!("translate `{asset}` along the {axis}-axis by {v:+.3} m"));
                }
            }
        }
        if let Some(z) = self.rotation_z {
            parts.push(format!("set rotation_z of `{asset}` to {z:.3} deg"));
        }
        if parts.is_empty() {
            parts.push("no change".into());
        }
        parts.join("; ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub asset_id: String,
    pub anchor_id: Option<String>,
    pub measured: f64,
    pub unit: String,
    pub budget: f64,
    pub fix: Fix,
    pub message: String,
}

impl Diagnostic {
    fn new(
        kind: DiagnosticKind,
        asset: &str,
        anchor: &str,
        measured: f64,
        unit: &str,
        budget: f64,
        fix: Fix,
        what: String,
    ) -> Self {
        let message = format!("{what}; fix: {}", fix.describe(asset));
        Self {
            kind,
            asset_id: asset.to_string(),
            anchor_id: Some(anchor.to_string()),
            measured,
            unit: unit.to_string(),
            budget,
            fix,
            message,
        }
    }

    /// Identity used to re-check a diagnostic after other fixes moved things.
    pub fn key(&self) -> (DiagnosticKind, &str, Option<&str>) {
        (self.kind, self.asset_id.as_str(), self.anchor_id.as_deref())
    }
}

/// Applies a fix to the diagnostic's asset. Other placements are untouched.
pub fn apply_fix(layout: &mut SceneLayout, diag: &Diagnostic) {
    if let Some(p) = layout.placements.get_mut(&diag.asset_id) {
        if let Some(t) = diag.fix.translation {
            p.location += t;
        }
        if let Some(z) = diag.fix.rotation_z {
            p.rotation = EulerDeg::new(p.rotation.x, p.rotation.y, z);
        }
    }
}

/// Checks every constraint plus pairwise occlusion.
pub fn verify_scene(layout: &SceneLayout, tol: &Tolerances) -> Result<Vec<Diagnostic>, LayoutError> {
    layout.validate()?;
    let rank = occlusion_rank(layout);
    let mut out = Vec::new();
    for c in &layout.constraints {
        for kind in [DiagnosticKind::Direction, DiagnosticKind::Relationship, DiagnosticKind::Contact] {
            out.extend(check_constraint(layout, c, kind, tol));
        }
    }
    let ids: Vec<&String> = layout.placements.keys().collect();
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            out.extend(check_pair(layout, a, b, tol, &rank));
        }
    }
    Ok(out)
}

/// Applies the live fixes for one asset: its own constraint (position, then
/// facing, then position again since turning changes the box), then every
/// interpenetration it is the designated mover for. If problems remain, the
/// asset moves to the best nearby spot found by a bounded search.
pub(super) fn settle_asset(layout: &mut SceneLayout, id: &str, tol: &Tolerances) {
    if let Some(c) = layout.constraint(id).cloned() {
        use DiagnosticKind::{Contact, Direction, Relationship};
        for kind in [Relationship, Contact, Direction, Relationship, Contact] {
            if let Some(d) = check_constraint(layout, &c, kind, tol) {
                apply_fix(layout, &d);
            }
        }
    }
    let others: Vec<String> = layout.placements.keys().filter(|k| k.as_str() != id).cloned().collect();
    for other in others {
        let rank = occlusion_rank(layout);
        let (a, b) = if id < other.as_str() { (id, other.as_str()) } else { (other.as_str(), id) };
        if let Some(d) = check_pair(layout, a, b, tol, &rank).filter(|d| d.asset_id == id) {
            apply_fix(layout, &d);
        }
    }
    if let Some(p) = relocate(layout, id, tol) {
        layout.placements.insert(id.to_string(), p);
    }
}

fn occlusion_rank(layout: &SceneLayout) -> BTreeMap<String, usize> {
    topological_order(layout)
        .into_iter()
        .flatten()
        .enumerate()
        .map(|(i, id)| (id, i))
        .collect()
}

fn stacked(layout: &SceneLayout, a: &str, b: &str) -> bool {
    let on = |s: &str, t: &str| {
        layout
            .constraint(s)
            .is_some_and(|c| c.relationship == Some(Relationship::OnTopOf) && c.anchor_asset_id.as_deref() == Some(t))
    };
    on(a, b) || on(b, a)
}

fn check_pair(
    layout: &SceneLayout,
    a: &str,
    b: &str,
    tol: &Tolerances,
    rank: &BTreeMap<String, usize>,
) -> Option<Diagnostic> {
    if stacked(layout, a, b) {
        return None;
    }
    let (ba, bb) = (layout.aabb(a)?, layout.aabb(b)?);
    let depth = penetration(&ba, &bb)?.depth;
    if depth < tol.occlusion_penetration_m {
        return None;
    }
    let later = |x: &str| rank.get(x).copied().unwrap_or(usize::MAX);
    let (mover, other, mb, ob) = if (later(b), b) > (later(a), a) { (b, a, bb, ba) } else { (a, b, ba, bb) };
    let mtv = separating_push(layout, mover, &mb, &ob, tol);
    Some(Diagnostic::new(
        DiagnosticKind::Occlusion,
        mover,
        other,
        depth,
        "m",
        tol.occlusion_penetration_m,
        Fix::translate(mtv),
        format!("`{mover}` and `{other}` interpenetrate by {depth:.3} m (budget {:.3} m)", tol.occlusion_penetration_m),
    ))
}

/// Horizontal translation of `mover` (box `mb`) that clears `other` (box
/// `ob`). Of the four sideways pushes the one that leaves the mover's own
/// constraint intact, creates no new interpenetration and stays on the
/// footprint wins; ties go to the shorter push, then x before y.
/// Blocking sits on the ground, so pairs are never separated by stacking.
fn separating_push(layout: &SceneLayout, mover: &str, mb: &Aabb, ob: &Aabb, tol: &Tolerances) -> Vec3 {
    let mut best: Option<((usize, f64), Vec3)> = None;
    for axis in 0..2 {
        for t in [ob.max[axis] - mb.min[axis], ob.min[axis] - mb.max[axis]] {
            let push = Vec3::ZERO.with_axis(axis, t);
            let cost = (push_side_effects(layout, mover, push, tol), t.abs());
            if best.as_ref().is_none_or(|(b, _)| cost.0 < b.0 || (cost.0 == b.0 && cost.1 < b.1)) {
                best = Some((cost, push));
            }
        }
    }
    best.map(|(_, p)| p).unwrap_or(Vec3::ZERO)
}

/// Problems `mover` would have after moving by `t`: failed checks of its own
/// constraint, interpenetrations, and leaving the footprint.
fn push_side_effects(layout: &SceneLayout, mover: &str, t: Vec3, tol: &Tolerances) -> usize {
    match layout.placements.get(mover) {
        Some(p) => placement_issues(layout, mover, Placement { location: p.location + t, ..*p }, tol),
        None => 0,
    }
}

/// Problems `id` would have if placed at `p`.
fn placement_issues(layout: &SceneLayout, id: &str, p: Placement, tol: &Tolerances) -> usize {
    let mut moved = layout.clone();
    moved.placements.insert(id.to_string(), p);
    let mb = world_aabb(&p);
    let mut n = 0;
    if let Some(c) = moved.constraint(id) {
        for kind in [DiagnosticKind::Direction, DiagnosticKind::Relationship, DiagnosticKind::Contact] {
            n += usize::from(check_constraint(&moved, c, kind, tol).is_some());
        }
    }
    for (other, q) in &moved.placements {
        if other != id && !stacked(&moved, id, other) {
            n += usize::from(penetration(&mb, &world_aabb(q)).is_some_and(|x| x.depth >= tol.occlusion_penetration_m));
        }
    }
    n + usize::from(!moved.scene_size.contains_xy(&mb))
}

const SEARCH_STEP: f64 = 0.25;
const SEARCH_RINGS: i32 = 12;

/// Candidate placements for `id`: around its anchor on the related side when
/// it has a planar relationship, otherwise on a grid around where it stands.
/// Candidates with a facing requirement are turned to meet it.
fn candidate_placements(layout: &SceneLayout, id: &str, tol: &Tolerances) -> Vec<Placement> {
    let Some(sp) = layout.placements.get(id).copied() else { return Vec::new() };
    let c = layout.constraint(id);
    let anchor = c.and_then(|c| c.anchor_asset_id.as_deref()).and_then(|a| layout.placements.get(a));
    let face = |mut p: Placement| {
        if let (Some(c), Some(ap)) = (c, anchor) {
            if let Some(f) = c.direction {
                if let Ok(base) = facing_rotation_z(p.location.xy(), ap.location.xy()) {
                    p.rotation = EulerDeg::new(p.rotation.x, p.rotation.y, normalize_deg(base + f.yaw_offset_deg()));
                }
            }
        }
        p
    };
    let offsets: Vec<f64> = (-SEARCH_RINGS..=SEARCH_RINGS).map(|k| k as f64 * SEARCH_STEP).collect();
    let mut out = Vec::new();
    match (c, anchor, c.and_then(|c| c.relationship).and_then(|r| r.planar_axis())) {
        (Some(c), Some(ap), Some((axis, sign))) => {
            let perp = 1 - axis;
            let ab = world_aabb(ap);
            let clearance = if c.contact == Some(true) { 0.0 } else { 2.0 * tol.contact_gap_m };
            let steps = if c.contact == Some(true) { 0..=0 } else { 0..=SEARCH_RINGS };
            for k in steps {
                for &q in &offsets {
                    let mut p = sp;
                    p.location = p.location.with_axis(perp, ap.location[perp] + q).with_axis(axis, ap.location[axis] + sign);
                    let p = face(p);
                    let b = world_aabb(&p);
                    let off = b.center()[axis] - p.location[axis];
                    let want = ab.center()[axis] + sign * (ab.extent()[axis] / 2.0 + b.extent()[axis] / 2.0 + clearance + k as f64 * SEARCH_STEP);
                    let mut p = p;
                    p.location = p.location.with_axis(axis, want - off);
                    out.push(p);
                }
            }
        }
        _ => {
            for &dx in &offsets {
                for &dy in &offsets {
                    let mut p = sp;
                    p.location = sp.location + Vec3::new(dx, dy, 0.0);
                    out.push(face(p));
                }
            }
        }
    }
    out
}

/// Best candidate spot for `id` when where it stands still has problems:
/// fewest issues, then shortest move. `None` when nothing beats staying.
fn relocate(layout: &SceneLayout, id: &str, tol: &Tolerances) -> Option<Placement> {
    let sp = *layout.placements.get(id)?;
    let now = placement_issues(layout, id, sp, tol);
    if now == 0 {
        return None;
    }
    let mut best: Option<(usize, f64, Placement)> = None;
    for p in candidate_placements(layout, id, tol) {
        let n = placement_issues(layout, id, p, tol);
        let d = p.location.distance(sp.location);
        if best.as_ref().is_none_or(|(bn, bd, _)| n < *bn || (n == *bn && d < *bd)) {
            best = Some((n, d, p));
        }
    }
    best.filter(|(n, _, _)| *n < now).map(|(_, _, p)| p)
}

/// Two-step move for an asset whose own spots are all taken: it goes to a
/// candidate that satisfies its constraint, and whatever it then overlaps is
/// relocated out of the way. Returns the rearranged layout only when it has
/// fewer diagnostics in total than `layout`.
pub(super) fn unblock(layout: &SceneLayout, id: &str, tol: &Tolerances) -> Option<SceneLayout> {
    let before = verify_scene(layout, tol).ok()?.len();
    let sp = *layout.placements.get(id)?;
    let c = layout.constraint(id).cloned();
    let mut tried: Vec<(f64, Placement)> = candidate_placements(layout, id, tol)
        .into_iter()
        .filter(|p| {
            let mut moved = layout.clone();
            moved.placements.insert(id.to_string(), *p);
            moved.scene_size.contains_xy(&world_aabb(p))
                && c.as_ref().is_none_or(|c| {
                    [DiagnosticKind::Direction, DiagnosticKind::Relationship, DiagnosticKind::Contact]
                        .into_iter()
                        .all(|k| check_constraint(&moved, c, k, tol).is_none())
                })
        })
        .map(|p| (p.location.distance(sp.location), p))
        .collect();
    tried.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best: Option<(usize, SceneLayout)> = None;
    for (_, p) in tried.into_iter().take(UNBLOCK_CANDIDATES) {
        let mut trial = layout.clone();
        trial.placements.insert(id.to_string(), p);
        let pb = world_aabb(&p);
        let blockers: Vec<String> = trial
            .placements
            .iter()
            .filter(|(o, q)| {
                o.as_str() != id
                    && !stacked(&trial, id, o)
                    && penetration(&pb, &world_aabb(q)).is_some_and(|x| x.depth >= tol.occlusion_penetration_m)
            })
            .map(|(o, _)| o.clone())
            .collect();
        for b in blockers {
            if let Some(q) = relocate(&trial, &b, tol) {
                trial.placements.insert(b, q);
            }
        }
        let n = verify_scene(&trial, tol).ok()?.len();
        if n < before && best.as_ref().is_none_or(|(bn, _)| n < *bn) {
            best = Some((n, trial));
            if n == 0 {
                break;
            }
        }
    }
    best.map(|(_, l)| l)
}

const UNBLOCK_CANDIDATES: usize = 40;

fn check_constraint(
    layout: &SceneLayout,
    c: &SpatialConstraint,
    kind: DiagnosticKind,
    tol: &Tolerances,
) -> Option<Diagnostic> {
    let anchor = c.anchor_asset_id.as_deref()?;
    let sp = layout.placements.get(&c.asset_id)?;
    let ap = layout.placements.get(anchor)?;
    let (s, a) = (c.asset_id.as_str(), anchor);
    match kind {
        DiagnosticKind::Direction => {
            let facing = c.direction?;
            let base = facing_rotation_z(sp.location.xy(), ap.location.xy()).ok()?;
            let target = normalize_deg(base + facing.yaw_offset_deg());
            let dev = angle_between_deg(sp.rotation.z, target);
            (dev > tol.direction_cone_deg).then(|| {
                Diagnostic::new(
                    kind,
                    s,
                    a,
                    dev,
                    "deg",
                    tol.direction_cone_deg,
                    Fix::rotate(target),
                    format!("`{s}` should be {} `{a}` but its forward is {dev:.1} deg off", facing_label(facing)),
                )
            })
        }
        DiagnosticKind::Relationship => {
            let rel = c.relationship?;
            if rel == Relationship::OnTopOf {
                check_stacking(layout, c, a, tol)
            } else {
                check_sector(layout, c, rel, a, tol)
            }
        }
        DiagnosticKind::Contact => {
            let want = c.contact?;
            if c.relationship == Some(Relationship::OnTopOf) {
                return None;
            }
            let (sb, ab) = (world_aabb(sp), world_aabb(ap));
            let gap = sb.surface_gap(&ab);
            if want && gap > tol.contact_gap_m {
                let fix = match c.relationship.and_then(|r| r.planar_axis().map(|ax| (r, ax))) {
                    Some((rel, _)) => contact_position_fix(layout, c, rel, a, tol),
                    None => close_gaps(&sb, &ab),
                };
                Some(Diagnostic::new(
                    kind,
                    s,
                    a,
                    gap,
                    "m",
                    tol.contact_gap_m,
                    fix,
                    format!("`{s}` should touch `{a}` but the gap is {gap:.3} m"),
                ))
            } else if !want && gap <= tol.contact_gap_m {
                let (axis, sign) = match c.relationship.and_then(|r| r.planar_axis()) {
                    Some(ax) => ax,
                    None => {
                        let d = sb.center() - ab.center();
                        let axis = if d.x.abs() >= d.y.abs() { 0 } else { 1 };
                        (axis, if d[axis] >= 0.0 { 1.0 } else { -1.0 })
                    }
                };
                let t = separation_shift(&sb, &ab, axis, sign, 2.0 * tol.contact_gap_m);
                Some(Diagnostic::new(
                    kind,
                    s,
                    a,
                    gap,
                    "m",
                    tol.contact_gap_m,
                    Fix::translate(t),
                    format!("`{s}` should keep clear of `{a}` but the gap is only {gap:.3} m"),
                ))
            } else {
                None
            }
        }
        DiagnosticKind::Occlusion => None,
    }
}

fn facing_label(f: Facing) -> &'static str {
    match f {
        Facing::Facing => "facing",
        Facing::FacingAway => "facing away from",
        Facing::LeftSideFacing => "presenting its left side to",
        Facing::RightSideFacing => "presenting its right side to",
    }
}

fn check_sector(
    layout: &SceneLayout,
    c: &SpatialConstraint,
    rel: Relationship,
    a: &str,
    tol: &Tolerances,
) -> Option<Diagnostic> {
    let s = c.asset_id.as_str();
    let sp = &layout.placements[s];
    let ap = &layout.placements[a];
    let center = rel.sector_center_deg()?;
    let half = tol.bearing_sector_deg / 2.0;
    let (dev, range) = match bearing_deg(ap.location.xy(), sp.location.xy()) {
        Ok(b) => {
            let dev = normalize_deg(b - center);
            if (-half..half).contains(&dev) {
                return None;
            }
            let dx = sp.location.x - ap.location.x;
            let dy = sp.location.y - ap.location.y;
            (dev, dx.hypot(dy))
        }
        Err(_) => (180.0, 0.0),
    };
    let fix = if c.contact == Some(true) || range == 0.0 {
        contact_position_fix(layout, c, rel, a, tol)
    } else {
        let margin = SECTOR_TARGET_MARGIN_DEG.min(half / 2.0);
        let edge = if dev >= half { center + half - margin } else { center - half + margin };
        let clearance = if c.contact == Some(false) { 2.0 * tol.contact_gap_m } else { 0.0 };
        let r = [edge, center]
            .into_iter()
            .find_map(|deg| ray_range(layout, sp, ap, deg, range, clearance).map(|r| (deg, r)));
        let (deg, r) = r.unwrap_or((edge, range));
        let e = deg.to_radians();
        let target = Vec3::new(ap.location.x + r * e.cos(), ap.location.y + r * e.sin(), sp.location.z);
        Fix::translate(Vec3::new(target.x - sp.location.x, target.y - sp.location.y, 0.0))
    };
    Some(Diagnostic::new(
        DiagnosticKind::Relationship,
        s,
        a,
        dev.abs(),
        "deg",
        half,
        fix,
        format!("`{s}` should be {rel} `{a}` but its bearing is {:.1} deg from the sector center", dev.abs()),
    ))
}

fn check_stacking(layout: &SceneLayout, c: &SpatialConstraint, a: &str, tol: &Tolerances) -> Option<Diagnostic> {
    let s = c.asset_id.as_str();
    let sb = layout.aabb(s)?;
    let ab = layout.aabb(a)?;
    let ov = sb.overlaps(&ab);
    let footprint_ok = ov.x > GEOM_EPS && ov.y > GEOM_EPS;
    let rise = sb.min.z - ab.max.z;
    let floating = c.contact == Some(false);
    let vertical_ok = if floating { rise > tol.contact_gap_m } else { rise.abs() <= tol.contact_gap_m };
    if footprint_ok && vertical_ok {
        return None;
    }
    let target_rise = if floating { 2.0 * tol.contact_gap_m } else { 0.0 };
    let center = sb.center();
    let cx = center.x.clamp(ab.min.x, ab.max.x);
    let cy = center.y.clamp(ab.min.y, ab.max.y);
    let t = Vec3::new(cx - center.x, cy - center.y, ab.max.z + target_rise - sb.min.z);
    let (measured, what) = if !vertical_ok {
        (rise.abs(), format!("`{s}` should rest on `{a}` but its base is {rise:+.3} m from the top surface"))
    } else {
        let horizontal = Vec3::new(-ov.x.min(0.0), -ov.y.min(0.0), 0.0).norm();
        (horizontal, format!("`{s}` should rest on `{a}` but its footprint misses the top surface"))
    };
    Some(Diagnostic::new(
        DiagnosticKind::Relationship,
        s,
        a,
        measured,
        "m",
        tol.contact_gap_m,
        Fix::translate(t),
        what,
    ))
}

/// Distance along the ray at `deg` from the anchor, closest to `range`, that
/// keeps the subject inside the footprint and clear of the anchor's box.
fn ray_range(layout: &SceneLayout, sp: &Placement, ap: &Placement, deg: f64, range: f64, clearance: f64) -> Option<f64> {
    let u = [deg.to_radians().cos(), deg.to_radians().sin()];
    let (sb, ab) = (world_aabb(sp), world_aabb(ap));
    let hs = sb.extent() * 0.5;
    let ha = ab.extent() * 0.5;
    let off = sb.center() - sp.location;
    let size = layout.scene_size;
    let bounds = [(size.x_negative, size.x), (size.y_negative, size.y)];
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for k in 0..2 {
        let (b0, b1) = bounds[k];
        let base = ap.location[k] + off[k];
        let (min_c, max_c) = (b0 + hs[k] - base, b1 - hs[k] - base);
        if u[k].abs() < 1e-12 {
            if min_c > 0.0 || max_c < 0.0 {
                return None;
            }
        } else {
            let (a, b) = (min_c / u[k], max_c / u[k]);
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
    }
    // apart on at least one horizontal axis
    let apart = (0..2)
        .filter(|&k| u[k].abs() > 1e-12)
        .map(|k| ((ab.center()[k] - ap.location[k]) * u[k].signum() + ha[k] + hs[k] + clearance - off[k] * u[k].signum()) / u[k].abs())
        .fold(f64::INFINITY, f64::min);
    lo = lo.max(apart);
    (lo <= hi).then(|| range.clamp(lo, hi))
}

/// Moves the subject to touch the anchor along the relationship axis while
/// keeping its bearing inside the sector and its side faces overlapping.
fn contact_position_fix(
    layout: &SceneLayout,
    c: &SpatialConstraint,
    rel: Relationship,
    a: &str,
    tol: &Tolerances,
) -> Fix {
    let sp = &layout.placements[&c.asset_id];
    let ap = &layout.placements[a];
    let (sb, ab) = (world_aabb(sp), world_aabb(ap));
    let Some((axis, sign)) = rel.planar_axis() else {
        return close_gaps(&sb, &ab);
    };
    let perp = 1 - axis;
    let clearance = if c.contact == Some(true) { 0.0 } else { 2.0 * tol.contact_gap_m };
    let hs = sb.extent() * 0.5;
    let ha = ab.extent() * 0.5;
    let target_center = ab.center()[axis] + sign * (ha[axis] + hs[axis] + clearance);
    let t_axis = target_center - sb.center()[axis];

    let axis_dist = sign * (sp.location[axis] + t_axis - ap.location[axis]);
    let p = sp.location[perp] - ap.location[perp];
    let bound = axis_dist.max(0.0) * (tol.bearing_sector_deg / 2.0 - SECTOR_INSET_DEG).to_radians().tan();
    let (blo, bhi) = (-bound - p, bound - p);
    let reach = ha[perp] + hs[perp];
    let (clo, chi) = (ab.center()[perp] - reach - sb.center()[perp], ab.center()[perp] + reach - sb.center()[perp]);
    let (lo, hi) = if blo.max(clo) <= bhi.min(chi) { (blo.max(clo), bhi.min(chi)) } else { (blo, bhi) };
    let t_perp = 0f64.clamp(lo, hi);

    let z_gap = if sb.min.z > ab.max.z {
        ab.max.z - sb.min.z
    } else if sb.max.z < ab.min.z {
        ab.min.z - sb.max.z
    } else {
        0.0
    };
    let mut t = Vec3::ZERO.with_axis(axis, t_axis).with_axis(perp, t_perp);
    t.z = z_gap;
    Fix::translate(t)
}

fn close_gaps(sb: &Aabb, ab: &Aabb) -> Fix {
    let mut t = Vec3::ZERO;
    for i in 0..3 {
        if sb.min[i] > ab.max[i] {
            t = t.with_axis(i, ab.max[i] - sb.min[i]);
        } else if sb.max[i] < ab.min[i] {
            t = t.with_axis(i, ab.min[i] - sb.max[i]);
        }
    }
    Fix::translate(t)
}

fn separation_shift(sb: &Aabb, ab: &Aabb, axis: usize, sign: f64, clearance: f64) -> Vec3 {
    let target = if sign > 0.0 { ab.max[axis] + clearance - sb.min[axis] } else { ab.min[axis] - clearance - sb.max[axis] };
    Vec3::ZERO.with_axis(axis, target)
}
