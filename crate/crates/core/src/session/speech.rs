use std::sync::{Arc, Mutex};

use serde_json::json;

use crate::adapter::{AdapterError, RemoteEndpoint};

/// Text-to-speech boundary. Returns a reference to the synthesized audio.
pub trait Speaker {
    fn speak(&self, text: &str, speed: f64) -> Result<String, AdapterError>;
}

/// Records every call; clones share the log.
#[derive(Debug, Clone, Default)]
pub struct MockSpeaker {
    calls: Arc<Mutex<Vec<(String, f64)>>>,
}

impl MockSpeaker {
    pub fn calls(&self) -> Vec<(String, f64)> {
        self.calls.lock().expect("speaker log lock").clone()
    }
}

impl Speaker for MockSpeaker {
    fn speak(&self, text: &str, speed: f64) -> Result<String, AdapterError> {
        let mut calls = self.calls.lock().expect("speaker log lock");
        calls.push((text.to_string(), speed));
        Ok(format!("tts://mock/{}", calls.len()))
    }
}

#[derive(Debug, Clone, Default)]
pub struct FailingSpeaker;

impl Speaker for FailingSpeaker {
    fn speak(&self, _: &str, _: f64) -> Result<String, AdapterError> {
        Err(AdapterError::Unavailable("speech synthesis offline".into()))
    }
}

/// Hosted speech synthesis; the reply text is an audio URL or handle.
#[derive(Debug, Clone)]
pub struct RemoteSpeaker {
    pub endpoint: RemoteEndpoint,
}

impl Speaker for RemoteSpeaker {
    fn speak(&self, text: &str, speed: f64) -> Result<String, AdapterError> {
        self.endpoint.call("synthesize_speech", &json!({ "text": text, "speed": speed }))
    }
}
