//! Shared plumbing for model and service adapters.
//!
//! Every external model (describer, classifier, generator, perceiver, judge,
//! matcher, speech synthesis) sits behind a trait with a deterministic mock.
//! Remote implementations all speak one HTTP contract: `POST <url>` with a
//! JSON body `{"task": <tag>, "payload": <object>}`, answered by
//! `{"text": <string>}`.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AdapterError {
    #[error("adapter unavailable: {0}")]
    Unavailable(String),
    #[error("adapter returned an unusable reply: {0}")]
    BadReply(String),
    #[error("transport failure: {0}")]
    Transport(String),
}

#[derive(Debug, Serialize)]
struct RemoteRequest<'a> {
    task: &'a str,
    payload: &'a Value,
}

#[derive(Debug, Deserialize)]
struct RemoteReply {
    text: String,
}

/// One hosted model endpoint.
#[derive(Debug, Clone)]
pub struct RemoteEndpoint {
    url: String,
    agent: ureq::Agent,
}

impl RemoteEndpoint {
    pub fn new(url: impl Into<String>) -> Self {
        Self::with_timeout(url, Duration::from_secs(30))
    }

    pub fn with_timeout(url: impl Into<String>, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { url: url.into(), agent }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// Sends one task and returns the reply text.
    pub fn call(&self, task: &str, payload: &Value) -> Result<String, AdapterError> {
        let mut resp = self
            .agent
            .post(&self.url)
            .send_json(RemoteRequest { task, payload })
            .map_err(|e| AdapterError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(AdapterError::Unavailable(format!("{} returned {}", self.url, status)));
        }
        let reply: RemoteReply = resp
            .body_mut()
            .read_json()
            .map_err(|e| AdapterError::BadReply(e.to_string()))?;
        Ok(reply.text)
    }
}
