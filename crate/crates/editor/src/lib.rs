//! Editing sessions over a built world and the HTTP service that exposes
//! them: structured edits with optimistic versioning, advisory verification
//! after every edit, undo, and a server-push stream of change events.

mod http;
mod session;

pub use http::{router, serve, AppState};
pub use session::{
    Cursor, Edit, EditEvent, EditResult, EditorError, Session, SessionSummary, StateDetail, StateDocument, CAMERA_ID,
};
