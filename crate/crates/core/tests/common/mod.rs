#![allow(dead_code)]

use proptest::prelude::*;

use galley_core::knowledge::{FrameRef, Ingredient, RecipeKnowledge, SentenceUnit, Step, SCHEMA_VERSION};

pub const WORDS: &[&str] = &[
    "pot", "water", "salt", "boil", "pasta", "onion", "garlic", "chop", "oil", "pan", "sauce", "tomato", "herbs",
    "stir", "drain", "cheese", "heat", "slice", "add", "minutes",
];

pub fn arb_sentence_text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 1..8).prop_map(|w| {
        let mut s = w.join(" ");
        s.push('.');
        let mut c = s.chars();
        c.next().map(|f| f.to_uppercase().collect::<String>() + c.as_str()).unwrap_or_default()
    })
}

/// Any printable text, including quotes, escapes and non-ASCII.
pub fn arb_free_text() -> impl Strategy<Value = String> {
    "[ -~\u{e9}\u{fc}\u{4e2d}\u{1f373}\"\\\\\n\t]{0,24}"
}

/// A valid knowledge value: contiguous non-overlapping sentence intervals
/// with arbitrary (finite) times, steps partitioning a prefix of the
/// sentences, and keyframes inside their sentences.
pub fn arb_knowledge() -> impl Strategy<Value = RecipeKnowledge> {
    (1usize..10)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((arb_sentence_text(), 0.01f64..30.0, 0.0f64..3.0), n),
                prop::collection::vec((arb_free_text(), arb_free_text()), n),
                prop::collection::vec(1usize..4, 0..n),
                prop::collection::vec((arb_free_text(), arb_free_text(), 0..n), 0..4),
                prop::collection::vec(prop::option::of(0.0f64..1.0), n),
                "[a-z0-9-]{1,12}",
                arb_free_text(),
                0.0f64..1e4,
            )
        })
        .prop_map(|(units, descs, step_lens, ings, kf, recipe_id, title, start)| {
            let mut t = start;
            let mut sentences = Vec::new();
            for (i, ((text, dur, gap), (vis, aud))) in units.into_iter().zip(descs).enumerate() {
                let t_start = t + gap;
                let t_end = t_start + dur;
                let mut s = SentenceUnit::new(i, text, t_start, t_end);
                s.visual_description = vis;
                s.audio_description = aud;
                if let Some(frac) = kf[i] {
                    let ts = (t_start + frac * dur).clamp(t_start, t_end);
                    s.keyframes.push(FrameRef { timestamp: ts, hash: format!("{:016x}", i * 7919) });
                }
                sentences.push(s);
                t = t_end;
            }
            let n = sentences.len();
            let mut steps = Vec::new();
            let mut next = 0;
            for len in step_lens {
                if next >= n {
                    break;
                }
                let last = (next + len - 1).min(n - 1);
                steps.push(Step { index: steps.len(), summary: sentences[next].text.clone(), first_sentence: next, last_sentence: last });
                next = last + 1;
            }
            let ingredients = ings
                .into_iter()
                .map(|(name, quantity, first_mention)| Ingredient { name, quantity, first_mention })
                .collect();
            RecipeKnowledge {
                schema_version: SCHEMA_VERSION,
                recipe_id,
                title,
                video_duration: t + 1.0,
                sentences,
                ingredients,
                steps,
            }
        })
}

pub mod drive {
    use std::path::PathBuf;
    use std::sync::Arc;

    use proptest::prelude::*;

    use galley_core::clock::{SimClock, SimTime};
    use galley_core::knowledge::{load_knowledge, RecipeKnowledge};
    use galley_core::monitor::{PerceivedScene, ScriptedPerceiver};
    use galley_core::session::{Adapters, Engine, SessionConfig, Stimulus};

    /// One utterance per routing outcome, plus junk.
    pub const UTTERANCES: &[&str] = &[
        "Is the pasta cooked yet?",
        "What's my next step?",
        "Something went wrong with the sauce",
        "What do you see on the counter?",
        "Tell me more",
        "That's wrong",
        "play the boiling part",
        "pause",
        "resume",
        "I'm skipping step 4",
        "hmm",
        "",
    ];

    pub const ACTIONS: &[&str] = &["boiling the water", "chopping the onions", "scrolling on a phone", "stirring the sauce"];

    pub fn spaghetti() -> RecipeKnowledge {
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/recipes/spaghetti.json");
        load_knowledge(&path).unwrap()
    }

    #[derive(Debug, Clone)]
    pub enum Input {
        Say(&'static str),
        Wait,
    }

    /// Scene changes: (tick index, action, matched step).
    pub type Scenes = Vec<(u64, &'static str, Option<usize>)>;

    pub fn arb_inputs(max: usize) -> impl Strategy<Value = Vec<(u64, Input)>> {
        prop::collection::vec(
            (
                0u64..7000,
                prop_oneof![prop::sample::select(UTTERANCES).prop_map(Input::Say), Just(Input::Wait)],
            ),
            0..max,
        )
    }

    pub fn arb_scenes(max: usize) -> impl Strategy<Value = Scenes> {
        prop::collection::vec((1u64..40, prop::sample::select(ACTIONS), prop::option::of(0usize..9)), 0..max)
    }

    pub fn perceiver(scenes: &Scenes, period_ms: u64) -> ScriptedPerceiver {
        let mut p = ScriptedPerceiver::new();
        for (tick, action, step) in scenes {
            let scene =
                PerceivedScene { action: action.to_string(), matched_step: *step, visible_items: vec![], sounds: vec![] };
            p.push_scene(SimTime(tick * period_ms), scene.to_reply());
        }
        p
    }

    /// Runs inputs (gaps in ms) against a fresh engine; returns the engine
    /// after a final pump at the last input time.
    pub fn run(config: SessionConfig, scenes: &Scenes, inputs: &[(u64, Input)]) -> Engine {
        run_observed(config, scenes, inputs, |_| {})
    }

    /// Like [`run`], calling `observe` after every pump.
    pub fn run_observed(
        config: SessionConfig,
        scenes: &Scenes,
        inputs: &[(u64, Input)],
        mut observe: impl FnMut(&Engine),
    ) -> Engine {
        let clock = SimClock::new();
        let mut adapters = Adapters::mock();
        adapters.perceiver = Box::new(perceiver(scenes, config.tick_span().0));
        let mut engine = Engine::start(config, spaghetti(), adapters, Arc::new(clock.clone())).unwrap();
        for (gap, input) in inputs {
            clock.advance_by(galley_core::clock::SimSpan(*gap));
            engine.pump();
            observe(&engine);
            if let Input::Say(text) = input {
                engine.submit(Stimulus::utterance(*text));
                engine.pump();
                observe(&engine);
            }
        }
        engine
    }
}
