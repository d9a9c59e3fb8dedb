//! Grounded storyboard blocking: a continuity graph of the story, canonical
//! asset boxes, engine-verified layouts, an orbital camera servoed against a
//! geometric critic, and consistency metrics over the resulting shots.

pub mod assets;
pub mod camera;
pub mod geometry;
pub mod layout;
pub mod memory;
pub mod pipeline;
pub mod reflection;
