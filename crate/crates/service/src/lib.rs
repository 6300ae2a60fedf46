//! Turn-based HTTP service that runs recommendation missions with a human participant.
//!
//! Each session is a phase machine ([`session::Session`]) whose accepted
//! commands are appended to a per-session event log, so a restarted server
//! rebuilds every session by replay.

mod api;
pub mod config;
mod error;
pub mod session;
pub mod store;

pub use api::{serve, AppState, CreateSession, Created};
pub use config::ServiceConfig;
pub use error::ServiceError;
pub use session::{latin_square_row, OrderingSlot, Phase, Session, SessionEvent};
pub use store::EventStore;
