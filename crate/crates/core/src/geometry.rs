//! Deterministic 3D math shared by every stage of the engine.
//!
//! World frame: +X right, +Y back (away from the default viewer), +Z up.
//! Asset origins sit at the bottom center of their bounding box, and an
//! unrotated asset faces −Y.

use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Overlaps at or below this length are treated as touching, not penetrating.
pub const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };
    pub const X: Vec3 = Vec3 { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: Vec3 = Vec3 { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 1.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Vec3 {
        let n = self.norm();
        if n == 0.0 {
            self
        } else {
            self * (1.0 / n)
        }
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn abs(self) -> Vec3 {
        Vec3::new(self.x.abs(), self.y.abs(), self.z.abs())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn xy(self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Component by axis index (0 = x, 1 = y, 2 = z).
    pub fn axis(self, i: usize) -> f64 {
        self[i]
    }

    pub fn with_axis(mut self, i: usize, v: f64) -> Vec3 {
        match i {
            0 => self.x = v,
            1 => self.y = v,
            _ => self.z = v,
        }
        self
    }

    pub fn unit_axis(i: usize) -> Vec3 {
        Vec3::ZERO.with_axis(i, 1.0)
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("Vec3 index {i} out of range"),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.3}, {:.3}, {:.3})", self.x, self.y, self.z)
    }
}

/// Wraps an angle in degrees into (−180, 180].
pub fn normalize_deg(deg: f64) -> f64 {
    let mut a = deg % 360.0;
    if a <= -180.0 {
        a += 360.0;
    } else if a > 180.0 {
        a -= 360.0;
    }
    a
}

/// Absolute angular distance between two headings, in [0, 180].
pub fn angle_between_deg(a: f64, b: f64) -> f64 {
    normalize_deg(a - b).abs()
}

/// Euler rotation in degrees, applied X then Y then Z about the world axes
/// (the XYZ Euler mode of common DCC tools). Components live in (−180, 180].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EulerDeg {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EulerDeg {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self {
            x: normalize_deg(x),
            y: normalize_deg(y),
            z: normalize_deg(z),
        }
    }

    pub fn yaw(z: f64) -> Self {
        Self::new(0.0, 0.0, z)
    }

    pub fn to_matrix(self) -> Mat3 {
        let rx = Mat3::rotation_x(self.x.to_radians());
        let ry = Mat3::rotation_y(self.y.to_radians());
        let rz = Mat3::rotation_z(self.z.to_radians());
        rz.mul_mat(&ry).mul_mat(&rx)
    }
}

impl<'de> Deserialize<'de> for EulerDeg {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            x: f64,
            y: f64,
            z: f64,
        }
        let r = Raw::deserialize(d)?;
        Ok(EulerDeg::new(r.x, r.y, r.z))
    }
}

/// Row-major 3×3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Mat3 {
        Mat3([[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]])
    }

    pub fn rotation_x(rad: f64) -> Mat3 {
        let (s, c) = rad.sin_cos();
        Mat3([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    pub fn rotation_y(rad: f64) -> Mat3 {
        let (s, c) = rad.sin_cos();
        Mat3([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    }

    pub fn rotation_z(rad: f64) -> Mat3 {
        let (s, c) = rad.sin_cos();
        Mat3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3::new(self.0[0][j], self.0[1][j], self.0[2][j])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    pub fn mul_mat(&self, o: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(out)
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn abs(&self) -> Mat3 {
        let mut out = self.0;
        for row in out.iter_mut() {
            for c in row.iter_mut() {
                *c = c.abs();
            }
        }
        Mat3(out)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
}

/// Unit quaternion stored as (w, x, y, z).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitQuat {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitQuat {
    pub const IDENTITY: UnitQuat = UnitQuat { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    /// Normalizes the raw components. Returns `None` for a zero quaternion.
    pub fn new_normalize(w: f64, x: f64, y: f64, z: f64) -> Option<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if n == 0.0 || !n.is_finite() {
            return None;
        }
        Some(Self { w: w / n, x: x / n, y: y / n, z: z / n })
    }

    pub fn from_axis_angle(axis: Vec3, rad: f64) -> Self {
        let a = axis.normalized();
        let (s, c) = (rad * 0.5).sin_cos();
        Self { w: c, x: a.x * s, y: a.y * s, z: a.z * s }
    }

    /// Builds the rotation whose matrix has the given orthonormal columns.
    pub fn from_matrix(m: &Mat3) -> Self {
        let r = &m.0;
        let trace = r[0][0] + r[1][1] + r[2][2];
        let (w, x, y, z) = if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            (0.25 * s, (r[2][1] - r[1][2]) / s, (r[0][2] - r[2][0]) / s, (r[1][0] - r[0][1]) / s)
        } else if r[0][0] > r[1][1] && r[0][0] > r[2][2] {
            let s = (1.0 + r[0][0] - r[1][1] - r[2][2]).sqrt() * 2.0;
            ((r[2][1] - r[1][2]) / s, 0.25 * s, (r[0][1] + r[1][0]) / s, (r[0][2] + r[2][0]) / s)
        } else if r[1][1] > r[2][2] {
            let s = (1.0 + r[1][1] - r[0][0] - r[2][2]).sqrt() * 2.0;
            ((r[0][2] - r[2][0]) / s, (r[0][1] + r[1][0]) / s, 0.25 * s, (r[1][2] + r[2][1]) / s)
        } else {
            let s = (1.0 + r[2][2] - r[0][0] - r[1][1]).sqrt() * 2.0;
            ((r[1][0] - r[0][1]) / s, (r[0][2] + r[2][0]) / s, (r[1][2] + r[2][1]) / s, 0.25 * s)
        };
        Self::new_normalize(w, x, y, z).unwrap_or(Self::IDENTITY)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn renormalized(self) -> Self {
        Self::new_normalize(self.w, self.x, self.y, self.z).unwrap_or(Self::IDENTITY)
    }

    pub fn conjugate(self) -> Self {
        Self { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// Hamilton product `self ⊗ rhs`.
    pub fn compose(self, rhs: UnitQuat) -> UnitQuat {
        let (a, b) = (self, rhs);
        UnitQuat {
            w: a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            x: a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            y: a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            z: a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        }
    }

    pub fn to_matrix(&self) -> Mat3 {
        let UnitQuat { w, x, y, z } = *self;
        Mat3([
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ])
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        self.to_matrix().mul_vec(v)
    }

    /// Largest absolute component difference, sign-insensitive (q and −q are the same rotation).
    pub fn max_abs_diff(&self, o: &UnitQuat) -> f64 {
        let d = |s: f64| {
            (self.w - s * o.w)
                .abs()
                .max((self.x - s * o.x).abs())
                .max((self.y - s * o.y).abs())
                .max((self.z - s * o.z).abs())
        };
        d(1.0).min(d(-1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min: min.min(max), max: max.max(min) }
    }

    pub fn from_center_half(center: Vec3, half: Vec3) -> Self {
        Self { min: center - half, max: center + half }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn translated(&self, t: Vec3) -> Aabb {
        Aabb { min: self.min + t, max: self.max + t }
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb { min: self.min.min(o.min), max: self.max.max(o.max) }
    }

    /// The 8 corners, ordered by the bit pattern (x, y, z) of `i`.
    pub fn corners(&self) -> [Vec3; 8] {
        let mut out = [Vec3::ZERO; 8];
        for (i, c) in out.iter_mut().enumerate() {
            *c = Vec3::new(
                if i & 1 == 0 { self.min.x } else { self.max.x },
                if i & 2 == 0 { self.min.y } else { self.max.y },
                if i & 4 == 0 { self.min.z } else { self.max.z },
            );
        }
        out
    }

    /// Per-axis overlap lengths; positive on every axis means the interiors intersect.
    pub fn overlaps(&self, o: &Aabb) -> Vec3 {
        Vec3::new(
            self.max.x.min(o.max.x) - self.min.x.max(o.min.x),
            self.max.y.min(o.max.y) - self.min.y.max(o.min.y),
            self.max.z.min(o.max.z) - self.min.z.max(o.min.z),
        )
    }

    pub fn intersects(&self, o: &Aabb) -> bool {
        let ov = self.overlaps(o);
        ov.x > GEOM_EPS && ov.y > GEOM_EPS && ov.z > GEOM_EPS
    }

    /// Per-axis separation (0 on axes where the intervals touch or overlap).
    pub fn axis_gaps(&self, o: &Aabb) -> Vec3 {
        let g = |i: usize| (self.min[i] - o.max[i]).max(o.min[i] - self.max[i]).max(0.0);
        Vec3::new(g(0), g(1), g(2))
    }

    /// Minimal Euclidean distance between the two boxes' surfaces; 0 when they touch or overlap.
    pub fn surface_gap(&self, o: &Aabb) -> f64 {
        self.axis_gaps(o).norm()
    }

    /// Distance from a point to the closest point of the box (0 inside).
    pub fn distance_to_point(&self, p: Vec3) -> f64 {
        let c = p.max(self.min).min(self.max);
        c.distance(p)
    }

    pub fn xy_overlap_area(&self, o: &Aabb) -> f64 {
        let ov = self.overlaps(o);
        ov.x.max(0.0) * ov.y.max(0.0)
    }
}

/// Location (bottom-center origin), rotation and size of one asset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub location: Vec3,
    pub rotation: EulerDeg,
    /// width = X, depth = Y, height = Z, meters.
    pub dimensions: Vec3,
}

impl Placement {
    pub fn new(location: Vec3, rotation: EulerDeg, dimensions: Vec3) -> Self {
        Self { location, rotation, dimensions }
    }

    pub fn world_corners(&self) -> [Vec3; 8] {
        let r = self.rotation.to_matrix();
        let d = self.dimensions;
        let mut out = [Vec3::ZERO; 8];
        for (i, c) in out.iter_mut().enumerate() {
            let local = Vec3::new(
                if i & 1 == 0 { -d.x / 2.0 } else { d.x / 2.0 },
                if i & 2 == 0 { -d.y / 2.0 } else { d.y / 2.0 },
                if i & 4 == 0 { 0.0 } else { d.z },
            );
            *c = self.location + r.mul_vec(local);
        }
        out
    }

    pub fn forward_xy(&self) -> [f64; 2] {
        forward_vector(self.rotation.z)
    }
}

/// World-space AABB of a placed asset.
pub fn world_aabb(p: &Placement) -> Aabb {
    let r = p.rotation.to_matrix();
    let half = p.dimensions * 0.5;
    let center = p.location + r.mul_vec(Vec3::new(0.0, 0.0, half.z));
    let world_half = r.abs().mul_vec(half);
    Aabb::from_center_half(center, world_half)
}

/// Horizontal facing direction of an asset with yaw `rotation_z` degrees.
pub fn forward_vector(rotation_z: f64) -> [f64; 2] {
    let r = rotation_z.to_radians();
    [r.sin(), -r.cos()]
}

/// Yaw (degrees, in (−180, 180]) that points an asset at `asset_xy` toward `anchor_xy`.
pub fn facing_rotation_z(asset_xy: [f64; 2], anchor_xy: [f64; 2]) -> Result<f64, GeometryError> {
    let dx = anchor_xy[0] - asset_xy[0];
    let dy = anchor_xy[1] - asset_xy[1];
    if dx == 0.0 && dy == 0.0 {
        return Err(GeometryError::Degenerate("asset and anchor share a position"));
    }
    Ok(normalize_deg(dx.atan2(-dy).to_degrees()))
}

/// Planar bearing of `subject` seen from `anchor`: 0° = +X, 90° = +Y, counterclockwise, in [0, 360).
pub fn bearing_deg(anchor_xy: [f64; 2], subject_xy: [f64; 2]) -> Result<f64, GeometryError> {
    let dx = subject_xy[0] - anchor_xy[0];
    let dy = subject_xy[1] - anchor_xy[1];
    if dx == 0.0 && dy == 0.0 {
        return Err(GeometryError::Degenerate("bearing between coincident points"));
    }
    let mut b = dy.atan2(dx).to_degrees();
    if b < 0.0 {
        b += 360.0;
    }
    if b >= 360.0 {
        b -= 360.0;
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Penetration {
    pub depth: f64,
    /// Translation of the first box that separates it from the second.
    pub mtv: Vec3,
}

/// Penetration of `a` into `b`.
///
/// Per axis the candidate push is the one moving `a` away from `b`'s center
/// (positive when the centers coincide); the smallest candidate wins with
/// ties resolved x, then y, then z.
pub fn penetration(a: &Aabb, b: &Aabb) -> Option<Penetration> {
    if !a.intersects(b) {
        return None;
    }
    let (ca, cb) = (a.center(), b.center());
    let mut best: Option<(usize, f64, f64)> = None;
    for i in 0..3 {
        let (push, sign) = if ca[i] >= cb[i] {
            (b.max[i] - a.min[i], 1.0)
        } else {
            (a.max[i] - b.min[i], -1.0)
        };
        if best.is_none_or(|(_, d, _)| push < d) {
            best = Some((i, push, sign));
        }
    }
    let (axis, depth, sign) = best?;
    Some(Penetration { depth, mtv: Vec3::unit_axis(axis) * (sign * depth) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn unrotated_box() {
        let p = Placement::new(Vec3::ZERO, EulerDeg::default(), Vec3::new(2.0, 1.0, 3.0));
        let b = world_aabb(&p);
        assert_eq!(b.min, Vec3::new(-1.0, -0.5, 0.0));
        assert_eq!(b.max, Vec3::new(1.0, 0.5, 3.0));
    }

    #[test]
    fn quarter_turn_swaps_axes() {
        let p = Placement::new(Vec3::ZERO, EulerDeg::yaw(90.0), Vec3::new(2.0, 1.0, 3.0));
        let b = world_aabb(&p);
        assert!(close(b.min.x, -0.5) && close(b.min.y, -1.0) && close(b.min.z, 0.0));
        assert!(close(b.max.x, 0.5) && close(b.max.y, 1.0) && close(b.max.z, 3.0));
    }

    #[test]
    fn forty_five_degree_half_extents() {
        let p = Placement::new(Vec3::ZERO, EulerDeg::yaw(45.0), Vec3::new(2.0, 2.0, 1.0));
        let b = world_aabb(&p);
        // corner enumeration: the corner (1,1) rotated by 45° lands at (0, √2)
        let expected = 2f64.sqrt();
        assert!(close(b.max.x, expected) && close(b.max.y, expected));
        assert!(close(b.min.x, -expected) && close(b.min.y, -expected));
    }

    #[test]
    fn forward_vector_table() {
        let f0 = forward_vector(0.0);
        assert!(close(f0[0], 0.0) && close(f0[1], -1.0));
        let f90 = forward_vector(90.0);
        assert!(close(f90[0], 1.0) && close(f90[1], 0.0));
        let f180 = forward_vector(180.0);
        assert!(close(f180[0], 0.0) && close(f180[1], 1.0));
    }

    #[test]
    fn facing_rotation_examples() {
        assert!(close(facing_rotation_z([0.0, 0.0], [1.0, 0.0]).unwrap(), 90.0));
        assert!(close(facing_rotation_z([0.0, 0.0], [0.0, -1.0]).unwrap(), 0.0));
        assert!(close(facing_rotation_z([0.0, 0.0], [0.0, 1.0]).unwrap(), 180.0));
        assert!(close(facing_rotation_z([0.0, 0.0], [-1.0, 0.0]).unwrap(), -90.0));
        assert!(facing_rotation_z([1.0, 1.0], [1.0, 1.0]).is_err());
    }

    #[test]
    fn bearing_examples() {
        assert!(close(bearing_deg([0.0, 0.0], [0.0, 1.0]).unwrap(), 90.0));
        assert!(close(bearing_deg([0.0, 0.0], [1.0, 0.0]).unwrap(), 0.0));
        assert!(close(bearing_deg([2.0, 3.0], [1.0, 2.0]).unwrap(), 225.0));
        assert!(bearing_deg([0.0, 0.0], [0.0, 0.0]).is_err());
    }

    #[test]
    fn penetration_examples() {
        let unit = |c: Vec3| Aabb::from_center_half(c, Vec3::splat(0.5));
        assert!(penetration(&unit(Vec3::ZERO), &unit(Vec3::new(2.0, 0.0, 0.0))).is_none());

        let same = penetration(&unit(Vec3::ZERO), &unit(Vec3::ZERO)).unwrap();
        assert_eq!(same.depth, 1.0);
        assert_eq!(same.mtv, Vec3::new(1.0, 0.0, 0.0));

        let off = penetration(&unit(Vec3::new(0.6, 0.0, 0.0)), &unit(Vec3::ZERO)).unwrap();
        assert!(close(off.depth, 0.4));
        assert!(close(off.mtv.x, 0.4) && off.mtv.y == 0.0 && off.mtv.z == 0.0);

        // touching faces are not a penetration
        assert!(penetration(&unit(Vec3::ZERO), &unit(Vec3::new(1.0, 0.0, 0.0))).is_none());
    }

    #[test]
    fn normalize_range() {
        assert_eq!(normalize_deg(-180.0), 180.0);
        assert_eq!(normalize_deg(540.0), 180.0);
        assert_eq!(normalize_deg(-190.0), 170.0);
        assert_eq!(EulerDeg::new(0.0, 0.0, 270.0).z, -90.0);
    }

    #[test]
    fn quaternion_matrix_round_trip() {
        let q = UnitQuat::from_axis_angle(Vec3::new(1.0, 2.0, -0.5), 1.1);
        let back = UnitQuat::from_matrix(&q.to_matrix());
        assert!(q.max_abs_diff(&back) < 1e-12);
        assert!((q.to_matrix().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn surface_gap_diagonal() {
        let a = Aabb::new(Vec3::ZERO, Vec3::splat(1.0));
        let b = a.translated(Vec3::new(1.3, 1.4, 0.0));
        assert!(close(a.surface_gap(&b), (0.09f64 + 0.16).sqrt()));
        assert_eq!(a.surface_gap(&a), 0.0);
    }
}
