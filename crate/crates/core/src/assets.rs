//! Canonical asset materialization: orient into Z-up / −Y-front space, scale
//! uniformly from a single estimated dimension, dedupe through a library.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Mat3, Vec3};
use crate::memory::{AssetRecord, AssetType};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssetError {
    #[error("top face {top} and front face {front} lie on the same axis")]
    AxisConflict { top: FaceLabel, front: FaceLabel },
    #[error("raw extent along {0} is not positive")]
    ZeroExtent(char),
    #[error("dimension estimate for `{asset_id}`: {reason}")]
    InvalidEstimate { asset_id: String, reason: String },
    #[error("no dimension estimate for `{0}`")]
    MissingEstimate(String),
    #[error("library request key is empty")]
    EmptyKey,
    #[error("asset builder failed: {0}")]
    Builder(String),
    #[error("malformed dimensions document: {0}")]
    Schema(String),
}

/// The six turnaround faces of an asset in its current local frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FaceLabel {
    A,
    B,
    C,
    D,
    E,
    F,
}

impl FaceLabel {
    pub const ALL: [FaceLabel; 6] = [FaceLabel::A, FaceLabel::B, FaceLabel::C, FaceLabel::D, FaceLabel::E, FaceLabel::F];

    /// A +X, B −X, C +Y, D −Y, E +Z, F −Z.
    pub fn normal(self) -> [i8; 3] {
        match self {
            FaceLabel::A => [1, 0, 0],
            FaceLabel::B => [-1, 0, 0],
            FaceLabel::C => [0, 1, 0],
            FaceLabel::D => [0, -1, 0],
            FaceLabel::E => [0, 0, 1],
            FaceLabel::F => [0, 0, -1],
        }
    }

    pub fn axis(self) -> usize {
        self.normal().iter().position(|&c| c != 0).expect("unit normal")
    }
}

impl fmt::Display for FaceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Front answer from orientation classification; `Ambiguous` for symmetric objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrontLabel {
    Face(FaceLabel),
    Ambiguous,
}

/// A proper rotation that maps coordinate axes to coordinate axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AxisRotation(pub [[i8; 3]; 3]);

impl AxisRotation {
    pub const IDENTITY: AxisRotation = AxisRotation([[1, 0, 0], [0, 1, 0], [0, 0, 1]]);

    /// All 24 proper axis-aligned rotations, in a fixed order.
    pub fn all() -> Vec<AxisRotation> {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut out = Vec::with_capacity(24);
        for p in perms {
            for signs in 0..8u8 {
                let mut m = [[0i8; 3]; 3];
                for (row, &col) in p.iter().enumerate() {
                    m[row][col] = if signs >> row & 1 == 1 { -1 } else { 1 };
                }
                let r = AxisRotation(m);
                if r.determinant() == 1 {
                    out.push(r);
                }
            }
        }
        out
    }

    pub fn determinant(&self) -> i32 {
        let m = self.0.map(|r| r.map(i32::from));
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn apply(&self, v: [i8; 3]) -> [i8; 3] {
        let m = &self.0;
        [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
    }

    pub fn to_mat3(&self) -> Mat3 {
        Mat3(self.0.map(|r| r.map(f64::from)))
    }

    /// Rotation angle in degrees: 0, 90, 120 or 180.
    pub fn angle_deg(&self) -> f64 {
        let tr: i32 = (0..3).map(|i| i32::from(self.0[i][i])).sum();
        ((tr as f64 - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees()
    }

    /// Extents of a box after rotation (axis permutation of `dims`).
    pub fn permute_extents(&self, dims: Vec3) -> Vec3 {
        let d = [dims.x, dims.y, dims.z];
        let pick = |row: [i8; 3]| d[row.iter().position(|&c| c != 0).expect("one entry per row")];
        Vec3::new(pick(self.0[0]), pick(self.0[1]), pick(self.0[2]))
    }
}

fn cross(a: [i8; 3], b: [i8; 3]) -> [i8; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn neg(a: [i8; 3]) -> [i8; 3] {
    a.map(|c| -c)
}

/// Rotation taking the top face normal to +Z and the front normal to −Y. An
/// ambiguous front gets the smallest rotation that levels the top (no yaw);
/// an upside-down top flips about X.
pub fn canonical_align(top: FaceLabel, front: FrontLabel) -> Result<AxisRotation, AssetError> {
    let t = top.normal();
    let rows = match front {
        FrontLabel::Face(f) => {
            if f.axis() == top.axis() {
                return Err(AssetError::AxisConflict { top, front: f });
            }
            // rows are the preimages of +X, +Y, +Z
            let uy = neg(f.normal());
            [cross(uy, t), uy, t]
        }
        FrontLabel::Ambiguous => match top {
            FaceLabel::E => return Ok(AxisRotation::IDENTITY),
            FaceLabel::F => [[1, 0, 0], [0, -1, 0], [0, 0, -1]],
            _ => {
                // horizontal top: the unique quarter turn that levels it
                return Ok(AxisRotation::all()
                    .into_iter()
                    .filter(|r| r.apply(t) == [0, 0, 1])
                    .min_by(|a, b| a.angle_deg().total_cmp(&b.angle_deg()))
                    .expect("some rotation levels any axis"));
            }
        },
    };
    Ok(AxisRotation(rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalTransform {
    pub r_align: AxisRotation,
    pub s_norm: f64,
}

/// One row of the dimensions document: exactly one of width (X), depth (Y),
/// height (Z) is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub asset_id: String,
    pub width: Option<f64>,
    pub depth: Option<f64>,
    pub height: Option<f64>,
}

impl DimensionEstimate {
    pub fn height(asset_id: impl Into<String>, h: f64) -> Self {
        Self { asset_id: asset_id.into(), width: None, depth: None, height: Some(h) }
    }

    pub fn width(asset_id: impl Into<String>, w: f64) -> Self {
        Self { asset_id: asset_id.into(), width: Some(w), depth: None, height: None }
    }

    /// The set axis and its value, checking the exactly-one rule.
    pub fn axis_value(&self) -> Result<(usize, f64), AssetError> {
        let set: Vec<(usize, f64)> = [self.width, self.depth, self.height]
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|v| (i, v)))
            .collect();
        let bad = |reason: &str| AssetError::InvalidEstimate { asset_id: self.asset_id.clone(), reason: reason.into() };
        match set.as_slice() {
            [(axis, v)] if *v > 0.0 && v.is_finite() => Ok((*axis, *v)),
            [_] => Err(bad("value must be a positive number")),
            [] => Err(bad("one of width, depth, height is required")),
            _ => Err(bad("only one of width, depth, height may be given")),
        }
    }
}

/// Parses and validates the estimator output. Values are rounded to
/// centimeters, the precision the estimator is asked for.
pub fn parse_dimension_estimates(text: &str) -> Result<Vec<DimensionEstimate>, AssetError> {
    let mut rows: Vec<DimensionEstimate> = serde_json::from_str(text).map_err(|e| AssetError::Schema(e.to_string()))?;
    for r in &mut rows {
        for v in [&mut r.width, &mut r.depth, &mut r.height].into_iter().flatten() {
            *v = (*v * 100.0).round() / 100.0;
        }
        r.axis_value()?;
    }
    Ok(rows)
}

/// Uniform scale that brings the estimated extent to its value.
pub fn apply_dimension(raw: Vec3, est: &DimensionEstimate) -> Result<(f64, Vec3), AssetError> {
    for (i, c) in ['x', 'y', 'z'].into_iter().enumerate() {
        if !(raw.axis(i) > 0.0) {
            return Err(AssetError::ZeroExtent(c));
        }
    }
    let (axis, value) = est.axis_value()?;
    let s = value / raw.axis(axis);
    // exact on the estimated axis regardless of rounding in the product
    Ok((s, (raw * s).with_axis(axis, value)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetSource {
    Retrieved,
    Generated,
    Placeholder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalAsset {
    pub asset_id: String,
    pub asset_type: AssetType,
    /// Local extents after alignment and scaling; front is −Y, up is +Z.
    pub dims: Vec3,
    pub transform: CanonicalTransform,
    pub source: AssetSource,
}

/// Proxy box proportions by type, before scaling.
pub fn default_raw_dims(t: AssetType) -> Vec3 {
    match t {
        AssetType::Character => Vec3::new(0.5, 0.3, 1.0),
        AssetType::Object => Vec3::splat(1.0),
    }
}

/// Box proxy for an asset: already canonical, scaled from its estimate.
pub fn materialize_placeholder(
    record: &AssetRecord,
    est: Option<&DimensionEstimate>,
    raw: Vec3,
) -> Result<CanonicalAsset, AssetError> {
    let est = est.ok_or_else(|| AssetError::MissingEstimate(record.asset_id.clone()))?;
    let (s_norm, dims) = apply_dimension(raw, est)?;
    Ok(CanonicalAsset {
        asset_id: record.asset_id.clone(),
        asset_type: record.asset_type,
        dims,
        transform: CanonicalTransform { r_align: AxisRotation::IDENTITY, s_norm },
        source: AssetSource::Placeholder,
    })
}

/// Lowercase with runs of whitespace collapsed to one space.
pub fn normalize_key(descriptor: &str) -> String {
    descriptor.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LibraryStats {
    pub raw_requests: usize,
    pub unique_models: usize,
    pub reuse_count: usize,
}

impl LibraryStats {
    /// Requests per distinct model.
    pub fn reuse_factor(&self) -> f64 {
        if self.unique_models == 0 {
            0.0
        } else {
            self.raw_requests as f64 / self.unique_models as f64
        }
    }

    /// Share of requests served without a build, in percent.
    pub fn savings_pct(&self) -> f64 {
        if self.raw_requests == 0 {
            0.0
        } else {
            100.0 * self.reuse_count as f64 / self.raw_requests as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AssetLibrary {
    entries: BTreeMap<String, CanonicalAsset>,
    stats: LibraryStats,
}

impl AssetLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> LibraryStats {
        self.stats
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&CanonicalAsset> {
        self.entries.get(&normalize_key(key))
    }

    /// Returns the stored asset for `key`, building it on first request. A
    /// failing builder leaves the library untouched.
    pub fn get_or_register<F, E>(&mut self, key: &str, build: F) -> Result<(CanonicalAsset, bool), AssetError>
    where
        F: FnOnce() -> Result<CanonicalAsset, E>,
        E: fmt::Display,
    {
        let key = normalize_key(key);
        if key.is_empty() {
            return Err(AssetError::EmptyKey);
        }
        if let Some(a) = self.entries.get(&key) {
            self.stats.raw_requests += 1;
            self.stats.reuse_count += 1;
            return Ok((a.clone(), true));
        }
        let asset = build().map_err(|e| AssetError::Builder(e.to_string()))?;
        self.stats.raw_requests += 1;
        self.stats.unique_models += 1;
        self.entries.insert(key, asset.clone());
        Ok((asset, false))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ez() -> [i8; 3] {
        [0, 0, 1]
    }

    /// Every rotation among the 24 satisfying the mapping.
    fn solutions(top: FaceLabel, front: FaceLabel) -> Vec<AxisRotation> {
        AxisRotation::all()
            .into_iter()
            .filter(|r| r.apply(top.normal()) == ez() && r.apply(front.normal()) == [0, -1, 0])
            .collect()
    }

    #[test]
    fn twenty_four_rotations() {
        let all = AxisRotation::all();
        assert_eq!(all.len(), 24);
        let unique: std::collections::BTreeSet<_> = all.iter().collect();
        assert_eq!(unique.len(), 24);
    }

    #[test]
    fn align_examples() {
        assert_eq!(canonical_align(FaceLabel::E, FrontLabel::Face(FaceLabel::D)).unwrap(), AxisRotation::IDENTITY);
        let r = canonical_align(FaceLabel::C, FrontLabel::Face(FaceLabel::F)).unwrap();
        assert_eq!(r.apply([0, 1, 0]), [0, 0, 1]);
        assert_eq!(r.apply([0, 0, -1]), [0, -1, 0]);
        assert_eq!(r, solutions(FaceLabel::C, FaceLabel::F)[0]);
        // the mapping forces a half turn about (0, 1, 1), not a quarter turn about X
        assert_eq!(r.angle_deg().round(), 180.0);
        let yaw = canonical_align(FaceLabel::E, FrontLabel::Face(FaceLabel::C)).unwrap();
        assert_eq!(yaw.apply([0, 0, 1]), [0, 0, 1]);
        assert_eq!(yaw.apply([0, 1, 0]), [0, -1, 0]);
        assert_eq!(yaw, AxisRotation([[-1, 0, 0], [0, -1, 0], [0, 0, 1]]));
    }

    #[test]
    fn exhaustive_pairs() {
        let mut solved = 0;
        let mut rejected = 0;
        for top in FaceLabel::ALL {
            for front in FaceLabel::ALL {
                let got = canonical_align(top, FrontLabel::Face(front));
                if top.axis() == front.axis() {
                    assert!(matches!(got, Err(AssetError::AxisConflict { .. })));
                    rejected += 1;
                } else {
                    let sols = solutions(top, front);
                    assert_eq!(sols.len(), 1);
                    assert_eq!(got.unwrap(), sols[0]);
                    solved += 1;
                }
            }
        }
        assert_eq!((solved, rejected), (24, 12));
    }

    #[test]
    fn ambiguous_front_is_minimal() {
        for top in FaceLabel::ALL {
            let r = canonical_align(top, FrontLabel::Ambiguous).unwrap();
            assert_eq!(r.determinant(), 1);
            assert_eq!(r.apply(top.normal()), ez());
            let min = AxisRotation::all()
                .into_iter()
                .filter(|c| c.apply(top.normal()) == ez())
                .map(|c| c.angle_deg())
                .fold(f64::INFINITY, f64::min);
            assert!((r.angle_deg() - min).abs() < 1e-9, "{top}");
        }
        assert_eq!(canonical_align(FaceLabel::E, FrontLabel::Ambiguous).unwrap(), AxisRotation::IDENTITY);
    }

    #[test]
    fn dimension_examples() {
        let (s, d) = apply_dimension(Vec3::new(0.5, 0.25, 1.0), &DimensionEstimate::height("a", 1.70)).unwrap();
        assert!((s - 1.7).abs() < 1e-12);
        assert!(d.distance(Vec3::new(0.85, 0.425, 1.70)) < 1e-12);
        let (s, d) = apply_dimension(Vec3::splat(1.0), &DimensionEstimate::width("a", 1.0)).unwrap();
        assert_eq!((s, d), (1.0, Vec3::splat(1.0)));
        let (s, d) = apply_dimension(Vec3::new(2.0, 1.0, 1.0), &DimensionEstimate::width("box", 0.30)).unwrap();
        assert!((s - 0.15).abs() < 1e-12);
        assert!(d.distance(Vec3::new(0.30, 0.15, 0.15)) < 1e-12);
        assert_eq!(
            apply_dimension(Vec3::new(0.0, 1.0, 1.0), &DimensionEstimate::width("a", 1.0)),
            Err(AssetError::ZeroExtent('x'))
        );
    }

    #[test]
    fn estimates_follow_exactly_one_rule() {
        let ok = r#"[{"asset_id": "box", "width": 0.30, "depth": null, "height": null}]"#;
        assert_eq!(parse_dimension_estimates(ok).unwrap()[0].axis_value().unwrap(), (0, 0.30));
        let two = r#"[{"asset_id": "box", "width": 0.30, "depth": 0.2, "height": null}]"#;
        assert!(matches!(parse_dimension_estimates(two), Err(AssetError::InvalidEstimate { .. })));
        let none = r#"[{"asset_id": "box", "width": null, "depth": null, "height": null}]"#;
        assert!(matches!(parse_dimension_estimates(none), Err(AssetError::InvalidEstimate { .. })));
        let neg = r#"[{"asset_id": "box", "width": -1, "depth": null, "height": null}]"#;
        assert!(parse_dimension_estimates(neg).is_err());
    }

    fn record(id: &str, t: AssetType) -> AssetRecord {
        serde_json::from_value(serde_json::json!({
            "asset_id": id, "asset_type": t, "description": "d", "reference_character": null
        }))
        .unwrap()
    }

    #[test]
    fn placeholders() {
        let rec = record("sam", AssetType::Character);
        let a = materialize_placeholder(&rec, Some(&DimensionEstimate::height("sam", 1.70)), default_raw_dims(AssetType::Character))
            .unwrap();
        assert!(a.dims.distance(Vec3::new(0.85, 0.51, 1.70)) < 1e-12);
        assert_eq!(a.source, AssetSource::Placeholder);
        let b = materialize_placeholder(&rec, Some(&DimensionEstimate::height("sam", 1.70)), default_raw_dims(AssetType::Character))
            .unwrap();
        assert_eq!(a, b);
        let obj = record("crate", AssetType::Object);
        let c = materialize_placeholder(&obj, Some(&DimensionEstimate::width("crate", 0.42)), default_raw_dims(AssetType::Object)).unwrap();
        assert_eq!(c.dims.x, 0.42);
        assert_eq!(materialize_placeholder(&obj, None, Vec3::splat(1.0)), Err(AssetError::MissingEstimate("crate".into())));
    }

    fn cube(id: &str) -> CanonicalAsset {
        CanonicalAsset {
            asset_id: id.into(),
            asset_type: AssetType::Object,
            dims: Vec3::splat(1.0),
            transform: CanonicalTransform { r_align: AxisRotation::IDENTITY, s_norm: 1.0 },
            source: AssetSource::Placeholder,
        }
    }

    #[test]
    fn library_dedupes() {
        let mut lib = AssetLibrary::new();
        let (_, reused) = lib.get_or_register("piano", || Ok::<_, String>(cube("piano"))).unwrap();
        assert!(!reused);
        assert_eq!(lib.stats().unique_models, 1);
        let (_, reused) = lib.get_or_register("  Piano ", || Err::<CanonicalAsset, _>("must not build")).unwrap();
        assert!(reused);
        assert_eq!(lib.stats(), LibraryStats { raw_requests: 2, unique_models: 1, reuse_count: 1 });
        assert_eq!(lib.stats().reuse_factor(), 2.0);
        assert!(matches!(lib.get_or_register("harp", || Err::<CanonicalAsset, _>("no")), Err(AssetError::Builder(_))));
        assert_eq!(lib.len(), 1);
        assert_eq!(lib.get_or_register("   ", || Ok::<_, String>(cube("x"))), Err(AssetError::EmptyKey));
    }

    proptest! {
        #[test]
        fn uniform_scale_keeps_ratios(x in 0.01..10.0f64, y in 0.01..10.0f64, z in 0.01..10.0f64, v in 0.01..5.0f64, axis in 0usize..3) {
            let mut est = DimensionEstimate { asset_id: "a".into(), width: None, depth: None, height: None };
            *[&mut est.width, &mut est.depth, &mut est.height][axis] = Some(v);
            let raw = Vec3::new(x, y, z);
            let (s, d) = apply_dimension(raw, &est).unwrap();
            prop_assert_eq!(d.axis(axis), v);
            for i in 0..3 {
                prop_assert!((d.axis(i) - raw.axis(i) * s).abs() <= 1e-9 * d.axis(i).max(1.0));
            }
        }

        #[test]
        fn library_accounting(keys in prop::collection::vec("[a-c]{1,2}", 1..60)) {
            let mut lib = AssetLibrary::new();
            let mut last_unique = 0;
            for k in &keys {
                lib.get_or_register(k, || Ok::<_, String>(cube(k))).unwrap();
                let s = lib.stats();
                prop_assert!(s.unique_models >= last_unique);
                prop_assert_eq!(s.raw_requests - s.unique_models, s.reuse_count);
                prop_assert_eq!(s.unique_models, lib.len());
                last_unique = s.unique_models;
            }
        }
    }
}
