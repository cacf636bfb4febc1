//! Inputs shared by the benchmarks.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use galley_core::clock::{SimClock, SimTime};
use galley_core::knowledge::{load_knowledge, Frame, RecipeKnowledge};
use galley_core::memory::{MemoryStore, RecordDraft, RecordKind, RecordLinks};
use galley_core::session::{Adapters, Engine, SessionConfig};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

pub fn spaghetti() -> RecipeKnowledge {
    load_knowledge(&fixtures().join("recipes/spaghetti.json")).expect("fixture recipe")
}

const WORDS: [&str; 12] = ["pot", "water", "salt", "pasta", "onion", "garlic", "oil", "pan", "sauce", "drain", "cheese", "stir"];

/// A store of `n` utterances and observations one second apart.
pub fn store(n: usize) -> MemoryStore {
    let mut store = MemoryStore::new();
    for i in 0..n {
        let text = format!("{} the {} with {}", WORDS[i % 12], WORDS[(i * 7 + 3) % 12], WORDS[(i * 5 + 1) % 12]);
        let draft = if i % 2 == 0 {
            RecordDraft::new(RecordKind::Utterance, SimTime(i as u64 * 1000), text)
        } else {
            RecordDraft::new(RecordKind::Observation, SimTime(i as u64 * 1000), text)
                .with_links(RecordLinks { tick_id: Some(i as u64), ..Default::default() })
        };
        store.append(draft).expect("monotone timestamps");
    }
    store
}

/// `n` frames at 4 fps with a scene change every 40 frames.
pub fn frames(n: usize) -> Vec<Frame> {
    (0..n)
        .map(|i| {
            let level = if (i / 40) % 2 == 0 { 0.2 } else { 0.8 };
            Frame::new(i as f64 * 0.25, vec![level, 1.0 - level, 0.5, 0.5])
        })
        .collect()
}

pub fn engine() -> (SimClock, Engine) {
    let clock = SimClock::new();
    let engine = Engine::start(SessionConfig::default(), spaghetti(), Adapters::mock(), Arc::new(clock.clone()))
        .expect("engine starts");
    (clock, engine)
}
