//! Ground plane and, for interiors, four wall slabs whose inner faces sit on
//! the footprint border.

use serde::{Deserialize, Serialize};

use super::SceneSize;
use crate::geometry::{Aabb, EulerDeg, Placement, Vec3};
use crate::memory::SceneType;

pub const WALL_THICKNESS: f64 = 0.1;
pub const WALL_HEIGHT: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WallSide {
    PosX,
    NegX,
    PosY,
    NegY,
}

impl WallSide {
    pub const ALL: [WallSide; 4] = [WallSide::PosX, WallSide::NegX, WallSide::PosY, WallSide::NegY];

    /// Yaw that turns a wall-mounted asset's front toward the room.
    pub fn mount_rotation_z(self) -> f64 {
        match self {
            WallSide::PosX => -90.0,
            WallSide::NegX => 90.0,
            WallSide::PosY => 0.0,
            WallSide::NegY => 180.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub side: WallSide,
    pub aabb: Aabb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneShell {
    /// Zero-thickness ground rectangle at z = 0.
    pub ground: Aabb,
    pub walls: Vec<Wall>,
}

pub fn generate_scene_shell(size: &SceneSize, scene_type: SceneType) -> SceneShell {
    let ground = Aabb::new(Vec3::new(size.x_negative, size.y_negative, 0.0), Vec3::new(size.x, size.y, 0.0));
    let walls = match scene_type {
        SceneType::Outdoor => Vec::new(),
        SceneType::Indoor => {
            let t = WALL_THICKNESS;
            let (x0, x1, y0, y1) = (size.x_negative, size.x, size.y_negative, size.y);
            let slab = |min: (f64, f64), max: (f64, f64)| {
                Aabb::new(Vec3::new(min.0, min.1, 0.0), Vec3::new(max.0, max.1, WALL_HEIGHT))
            };
            vec![
                Wall { side: WallSide::PosX, aabb: slab((x1, y0 - t), (x1 + t, y1 + t)) },
                Wall { side: WallSide::NegX, aabb: slab((x0 - t, y0 - t), (x0, y1 + t)) },
                Wall { side: WallSide::PosY, aabb: slab((x0, y1), (x1, y1 + t)) },
                Wall { side: WallSide::NegY, aabb: slab((x0, y0 - t), (x1, y0)) },
            ]
        }
    };
    SceneShell { ground, walls }
}

/// Placement of an asset hung flat against a wall: pulled in from the border
/// by half its depth and turned to face the room. `along` is the coordinate
/// on the wall's tangent axis.
pub fn mount_on_wall(size: &SceneSize, side: WallSide, dims: Vec3, along: f64, z: f64) -> Placement {
    let half_depth = dims.y / 2.0;
    let location = match side {
        WallSide::PosX => Vec3::new(size.x - half_depth, along, z),
        WallSide::NegX => Vec3::new(size.x_negative + half_depth, along, z),
        WallSide::PosY => Vec3::new(along, size.y - half_depth, z),
        WallSide::NegY => Vec3::new(along, size.y_negative + half_depth, z),
    };
    Placement::new(location, EulerDeg::yaw(side.mount_rotation_z()), dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::world_aabb;

    #[test]
    fn outdoor_has_ground_only() {
        let s = generate_scene_shell(&SceneSize::symmetric(10.0), SceneType::Outdoor);
        assert!(s.walls.is_empty());
        assert_eq!(s.ground.extent(), Vec3::new(20.0, 20.0, 0.0));
    }

    #[test]
    fn inner_faces_on_border() {
        let size = SceneSize::symmetric(10.0);
        let s = generate_scene_shell(&size, SceneType::Indoor);
        assert_eq!(s.walls.len(), 4);
        let right = s.walls.iter().find(|w| w.side == WallSide::PosX).unwrap();
        assert_eq!(right.aabb.min.x, 10.0);
        let left = s.walls.iter().find(|w| w.side == WallSide::NegX).unwrap();
        assert_eq!(left.aabb.max.x, -10.0);
        let back = s.walls.iter().find(|w| w.side == WallSide::PosY).unwrap();
        assert_eq!(back.aabb.min.y, 10.0);
    }

    #[test]
    fn wall_mount_formula() {
        let size = SceneSize::symmetric(10.0);
        let p = mount_on_wall(&size, WallSide::PosX, Vec3::new(1.0, 0.2, 0.8), 0.0, 1.2);
        assert!((p.location.x - 9.9).abs() < 1e-12);
        assert_eq!(p.rotation.z, -90.0);
        // back face flush with the wall's inner face, front toward -X
        let b = world_aabb(&p);
        assert!((b.max.x - 10.0).abs() < 1e-12);
        let f = p.forward_xy();
        assert!((f[0] + 1.0).abs() < 1e-12);
    }
}
