//! Mixed-initiative cooking assistance engine.
//!
//! Knowledge distilled from an instructional video grounds a dialogue state
//! machine that answers a cook's questions, a periodic monitor that watches
//! the live scene for missed or incorrect steps, a session memory, and
//! sentence-level video playback. Every model sits behind an adapter trait
//! with a deterministic mock, and session time can be simulated, so whole
//! sessions replay bit for bit.

pub mod adapter;
pub mod clock;
pub mod harness;
pub mod knowledge;
pub mod media;
pub mod memory;
pub mod monitor;
pub mod orchestrator;
pub mod session;
pub mod text;
