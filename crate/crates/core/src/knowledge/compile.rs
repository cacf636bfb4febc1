//! Canonical recipe knowledge file.
//!
//! The canonical form is pretty-printed JSON with object keys sorted
//! lexicographically, UTF-8, terminated by a single newline. Floats use the
//! shortest representation that round-trips exactly, so parsing and
//! recompiling reproduces the same bytes.

use serde::Serialize;
use serde_json::Value;

use super::{Ingredient, KnowledgeError, RecipeKnowledge, SentenceUnit, Step, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq)]
pub struct RecipeMeta {
    pub recipe_id: String,
    pub title: String,
    pub video_duration: f64,
}

/// Recursively rebuilds every object with sorted keys, independent of how
/// the JSON map type orders its entries.
fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = serde_json::Map::new();
            for (k, v) in entries {
                out.insert(k, sort_keys(v));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Serializes any value in canonical form.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String, KnowledgeError> {
    let tree = serde_json::to_value(value).map_err(|e| KnowledgeError::Serialize(e.to_string()))?;
    let mut text =
        serde_json::to_string_pretty(&sort_keys(tree)).map_err(|e| KnowledgeError::Serialize(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn to_canonical(knowledge: &RecipeKnowledge) -> Result<String, KnowledgeError> {
    knowledge.validate()?;
    to_canonical_json(knowledge)
}

/// Parses and validates a knowledge file.
pub fn parse_knowledge(text: &str) -> Result<RecipeKnowledge, KnowledgeError> {
    let knowledge: RecipeKnowledge =
        serde_json::from_str(text).map_err(|e| KnowledgeError::SchemaViolation(vec![e.to_string()]))?;
    knowledge.validate()?;
    Ok(knowledge)
}

pub fn compile_knowledge(
    sentences: Vec<SentenceUnit>,
    ingredients: Vec<Ingredient>,
    steps: Vec<Step>,
    meta: RecipeMeta,
) -> Result<(RecipeKnowledge, String), KnowledgeError> {
    let knowledge = RecipeKnowledge {
        schema_version: SCHEMA_VERSION,
        recipe_id: meta.recipe_id,
        title: meta.title,
        video_duration: meta.video_duration,
        sentences,
        ingredients,
        steps,
    };
    let canonical = to_canonical(&knowledge)?;
    Ok((knowledge, canonical))
}
