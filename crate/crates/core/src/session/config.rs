use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Adapters, FailingSpeaker, MockSpeaker, RemoteSpeaker, SessionError};
use crate::adapter::RemoteEndpoint;
use crate::clock::SimSpan;
use crate::media::{LexicalMatcher, RemoteMatcher};
use crate::memory::{ContextConfig, RecencyLexicalScorer};
use crate::monitor::{RemoteJudge, RemotePerceiver, RuleJudge, ScriptedPerceiver};
use crate::orchestrator::{
    CannedGenerator, EchoGenerator, FailingClassifier, FailingGenerator, KeywordClassifier, RemoteClassifier,
    RemoteGenerator,
};

pub const TTS_SPEED_RANGE: (f64, f64) = (0.5, 3.0);

/// Which implementation backs an adapter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdapterChoice {
    #[default]
    Mock,
    /// Mock variant that echoes its input (generator only).
    Echo,
    /// Always fails; for exercising degraded paths.
    Failing,
    Remote,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdapterConfig {
    pub classifier: AdapterChoice,
    pub generator: AdapterChoice,
    pub perceiver: AdapterChoice,
    pub judge: AdapterChoice,
    pub matcher: AdapterChoice,
    pub speech: AdapterChoice,
}

/// Environment variables holding remote endpoint URLs.
pub const ENDPOINT_VARS: [(&str, &str); 6] = [
    ("classifier", "GALLEY_CLASSIFIER_URL"),
    ("generator", "GALLEY_GENERATOR_URL"),
    ("perceiver", "GALLEY_PERCEIVER_URL"),
    ("judge", "GALLEY_JUDGE_URL"),
    ("matcher", "GALLEY_MATCHER_URL"),
    ("speech", "GALLEY_SPEECH_URL"),
];

const REMOTE_TIMEOUT: Duration = Duration::from_secs(30);

fn endpoint(role: &str) -> Result<RemoteEndpoint, SessionError> {
    let var = ENDPOINT_VARS.iter().find(|(r, _)| *r == role).map(|(_, v)| *v).expect("known adapter role");
    let url = std::env::var(var)
        .map_err(|_| SessionError::InvalidConfig(format!("{role} adapter is remote but {var} is not set")))?;
    Ok(RemoteEndpoint::with_timeout(url, REMOTE_TIMEOUT))
}

fn unsupported(role: &str, choice: AdapterChoice) -> SessionError {
    SessionError::InvalidConfig(format!("{role} adapter does not support {choice:?}"))
}

impl AdapterConfig {
    pub fn all_mock() -> Self {
        Self::default()
    }

    /// Builds the adapters. Remote endpoints come from the environment.
    pub fn build(&self) -> Result<Adapters, SessionError> {
        let mut a = Adapters::mock();
        a.classifier = match self.classifier {
            AdapterChoice::Mock => Box::new(KeywordClassifier::builtin()),
            AdapterChoice::Failing => Box::new(FailingClassifier),
            AdapterChoice::Remote => Box::new(RemoteClassifier { endpoint: endpoint("classifier")? }),
            c => return Err(unsupported("classifier", c)),
        };
        a.generator = match self.generator {
            AdapterChoice::Mock => Box::new(CannedGenerator),
            AdapterChoice::Echo => Box::new(EchoGenerator),
            AdapterChoice::Failing => Box::new(FailingGenerator),
            AdapterChoice::Remote => Box::new(RemoteGenerator { endpoint: endpoint("generator")? }),
        };
        a.perceiver = match self.perceiver {
            AdapterChoice::Mock => Box::new(ScriptedPerceiver::new()),
            AdapterChoice::Remote => Box::new(RemotePerceiver { endpoint: endpoint("perceiver")? }),
            c => return Err(unsupported("perceiver", c)),
        };
        a.judge = match self.judge {
            AdapterChoice::Mock => Box::new(RuleJudge),
            AdapterChoice::Remote => Box::new(RemoteJudge { endpoint: endpoint("judge")? }),
            c => return Err(unsupported("judge", c)),
        };
        a.matcher = match self.matcher {
            AdapterChoice::Mock => Box::new(LexicalMatcher),
            AdapterChoice::Remote => Box::new(RemoteMatcher { endpoint: endpoint("matcher")? }),
            c => return Err(unsupported("matcher", c)),
        };
        a.speaker = match self.speech {
            AdapterChoice::Mock => Box::new(MockSpeaker::default()),
            AdapterChoice::Failing => Box::new(FailingSpeaker),
            AdapterChoice::Remote => Box::new(RemoteSpeaker { endpoint: endpoint("speech")? }),
            c => return Err(unsupported("speech", c)),
        };
        a.scorer = Box::new(RecencyLexicalScorer::default());
        Ok(a)
    }
}

/// Session settings, read from a TOML file.
///
/// ```toml
/// recipe = "spaghetti.json"
/// tick_period = 2.0      # seconds between monitor ticks
/// idle_timeout = 5.0     # seconds of quiet before returning to idle
/// tts_speed = 1.0        # speech rate multiplier, 0.5 to 3.0
/// context_budget = 400   # whitespace tokens per response context
/// alert_cooldown = 30.0  # seconds before the same alert may repeat
///
/// [context]
/// recent_turns = 6
/// recent_observations = 3
/// retrieved = 5
///
/// [adapters]
/// generator = "mock"     # mock | echo | failing | remote
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub recipe: Option<PathBuf>,
    pub tick_period: f64,
    pub idle_timeout: f64,
    pub tts_speed: f64,
    pub context_budget: usize,
    pub alert_cooldown: f64,
    pub context: ContextConfig,
    pub adapters: AdapterConfig,
    /// Append-only memory file; enables crash recovery.
    pub memory_file: Option<PathBuf>,
    /// Line-delimited trace output.
    pub trace_file: Option<PathBuf>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            recipe: None,
            tick_period: 2.0,
            idle_timeout: 5.0,
            tts_speed: 1.0,
            context_budget: 400,
            alert_cooldown: 30.0,
            context: ContextConfig::default(),
            adapters: AdapterConfig::default(),
            memory_file: None,
            trace_file: None,
        }
    }
}

impl SessionConfig {
    pub fn from_toml(text: &str) -> Result<Self, SessionError> {
        let cfg: Self = toml::from_str(text).map_err(|e| SessionError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, SessionError> {
        let text = std::fs::read_to_string(path).map_err(|e| SessionError::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.recipe, &mut cfg.memory_file, &mut cfg.trace_file].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.tick_period) || SimSpan::from_secs_f64(self.tick_period).as_millis() == 0 {
            return Err(SessionError::InvalidConfig(format!("tick_period must be positive, got {}", self.tick_period)));
        }
        if !positive(self.idle_timeout) {
            return Err(SessionError::InvalidConfig(format!("idle_timeout must be positive, got {}", self.idle_timeout)));
        }
        validate_tts_speed(self.tts_speed)?;
        if !(self.alert_cooldown.is_finite() && self.alert_cooldown >= 0.0) {
            return Err(SessionError::InvalidConfig(format!("alert_cooldown must be non-negative, got {}", self.alert_cooldown)));
        }
        Ok(())
    }

    pub fn tick_span(&self) -> SimSpan {
        SimSpan::from_secs_f64(self.tick_period)
    }

    pub fn idle_span(&self) -> SimSpan {
        SimSpan::from_secs_f64(self.idle_timeout)
    }

    pub fn cooldown_span(&self) -> SimSpan {
        SimSpan::from_secs_f64(self.alert_cooldown)
    }
}

pub fn validate_tts_speed(speed: f64) -> Result<(), SessionError> {
    let (lo, hi) = TTS_SPEED_RANGE;
    if !(lo..=hi).contains(&speed) {
        return Err(SessionError::InvalidConfig(format!("tts_speed must be within [{lo}, {hi}], got {speed}")));
    }
    Ok(())
}
