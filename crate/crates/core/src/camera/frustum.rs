//! Exact box-in-view test by separating axes between the view volume and a
//! world box, both treated as convex polyhedra in camera space.

use super::{CameraState, ProjectionMode};
use crate::geometry::{Aabb, Vec3};

pub const FRUSTUM_NEAR: f64 = 1e-3;
pub const FRUSTUM_FAR: f64 = 1e4;

/// The eight corners of the view volume in camera space, near face first
/// (x−y−, x+y−, x−y+, x+y+).
pub fn frustum_corners(state: &CameraState) -> [Vec3; 8] {
    let t = state.intrinsics.tan_half_fov();
    let a = state.intrinsics.aspect();
    let mut out = [Vec3::ZERO; 8];
    for (i, depth) in [FRUSTUM_NEAR, FRUSTUM_FAR].into_iter().enumerate() {
        let half_h = match state.intrinsics.mode {
            ProjectionMode::Perspective => depth * t,
            ProjectionMode::Orthographic => state.distance * t,
        };
        let half_w = half_h * a;
        for (j, (sx, sy)) in [(-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)].into_iter().enumerate() {
            out[i * 4 + j] = Vec3::new(sx * half_w, sy * half_h, -depth);
        }
    }
    out
}

fn interval(points: &[Vec3], axis: Vec3) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        let s = p.dot(axis);
        (lo.min(s), hi.max(s))
    })
}

/// Whether any part of `b` lies inside the camera's view volume.
pub fn aabb_in_view(state: &CameraState, b: &Aabb) -> bool {
    let f = frustum_corners(state);
    let boxc: Vec<Vec3> = b.corners().iter().map(|p| state.to_camera(*p)).collect();
    let rt = state.rotation.to_matrix().transpose();
    let box_axes = [rt.col(0), rt.col(1), rt.col(2)];

    // near face corners 0..4, far face 4..8
    let side_edges: Vec<Vec3> = (0..4).map(|i| f[i + 4] - f[i]).collect();
    let face_edges = [f[1] - f[0], f[2] - f[0]];
    let face_normals = [
        Vec3::Z,
        side_edges[0].cross(f[2] - f[0]),
        side_edges[1].cross(f[3] - f[1]),
        side_edges[0].cross(f[1] - f[0]),
        side_edges[2].cross(f[3] - f[2]),
    ];

    let mut axes: Vec<Vec3> = Vec::with_capacity(32);
    axes.extend(box_axes);
    axes.extend(face_normals);
    for e in side_edges.iter().chain(face_edges.iter()) {
        for a in box_axes {
            axes.push(e.cross(a));
        }
    }
    for axis in axes {
        let n = axis.norm();
        if n < 1e-12 {
            continue;
        }
        let axis = axis * (1.0 / n);
        let (f0, f1) = interval(&f, axis);
        let (b0, b1) = interval(&boxc, axis);
        if f1 < b0 || b1 < f0 {
            return false;
        }
    }
    true
}
