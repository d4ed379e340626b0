//! Shipped generation transports: file replay keyed by request hash, and an
//! OpenAI-style chat-completions client.

use std::collections::{HashMap, VecDeque};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use rubric_reward_core::execution::{
    DecodeParams, FinishReason, GenerationReply, GenerationRequest, GenerationTransport, TransportError,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::io::{read_jsonl, IoError};

/// One recorded reply. Several entries may share a key; they are served in
/// file order, one per call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub key: String,
    pub text: String,
    #[serde(default = "stop")]
    pub finish_reason: FinishReason,
}

fn stop() -> FinishReason {
    FinishReason::Stop
}

impl ReplayEntry {
    pub fn for_request(request: &GenerationRequest, text: impl Into<String>) -> Self {
        Self { key: request.key(), text: text.into(), finish_reason: FinishReason::Stop }
    }
}

#[derive(Debug, Default)]
pub struct ReplayTransport {
    replies: Mutex<HashMap<String, VecDeque<GenerationReply>>>,
}

impl ReplayTransport {
    pub fn new(entries: impl IntoIterator<Item = ReplayEntry>) -> Self {
        let mut map: HashMap<String, VecDeque<GenerationReply>> = HashMap::new();
        for e in entries {
            map.entry(e.key).or_default().push_back(GenerationReply { text: e.text, finish_reason: e.finish_reason });
        }
        Self { replies: Mutex::new(map) }
    }

    pub fn load(path: &Path) -> Result<Self, IoError> {
        Ok(Self::new(read_jsonl::<ReplayEntry>(path)?))
    }

    /// Replies not yet served.
    pub fn remaining(&self) -> usize {
        self.replies.lock().map(|m| m.values().map(VecDeque::len).sum()).unwrap_or(0)
    }
}

impl GenerationTransport for ReplayTransport {
    fn generate(&self, request: &GenerationRequest, _: &DecodeParams) -> Result<GenerationReply, TransportError> {
        let key = request.key();
        let mut map = self.replies.lock().map_err(|_| TransportError::Io("replay state poisoned".into()))?;
        map.get_mut(&key).and_then(VecDeque::pop_front).ok_or(TransportError::NoReply(key))
    }
}

pub fn write_replay(out: &mut dyn Write, entries: &[ReplayEntry]) -> std::io::Result<()> {
    crate::io::write_jsonl(out, entries)
}

pub const ENV_ENDPOINT: &str = "JUDGE_ENDPOINT";
pub const ENV_API_KEY: &str = "JUDGE_API_KEY";
pub const ENV_MODEL: &str = "JUDGE_MODEL";

/// Chat-completions client. `endpoint` is the full URL requests are posted to.
pub struct HttpTransport {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
    model: String,
}

impl HttpTransport {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        model: impl Into<String>,
        timeout: Duration,
    ) -> Self {
        let agent =
            ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
        Self { agent, endpoint: endpoint.into(), api_key, model: model.into() }
    }

    /// Reads `JUDGE_ENDPOINT`, `JUDGE_MODEL` and optionally `JUDGE_API_KEY`.
    pub fn from_env(timeout: Duration) -> Result<Self, TransportError> {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.trim().is_empty());
        let endpoint = var(ENV_ENDPOINT).ok_or_else(|| TransportError::Config(format!("{ENV_ENDPOINT} is not set")))?;
        let model = var(ENV_MODEL).ok_or_else(|| TransportError::Config(format!("{ENV_MODEL} is not set")))?;
        Ok(Self::new(endpoint, var(ENV_API_KEY), model, timeout))
    }

    pub fn body(&self, request: &GenerationRequest, params: &DecodeParams) -> Value {
        let mut body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user()},
            ],
        });
        if let Some(t) = params.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(m) = params.max_tokens {
            body["max_tokens"] = json!(m);
        }
        body
    }
}

fn map_ureq(e: ureq::Error) -> TransportError {
    match e {
        ureq::Error::Timeout(_) => TransportError::Timeout,
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => TransportError::Timeout,
        other => TransportError::Io(other.to_string()),
    }
}

/// Text and finish reason of the first choice of a chat-completions reply.
pub fn parse_chat_reply(body: &str) -> Result<GenerationReply, TransportError> {
    let v: Value = serde_json::from_str(body).map_err(|e| TransportError::Protocol(e.to_string()))?;
    let choice =
        v.get("choices").and_then(|c| c.get(0)).ok_or_else(|| TransportError::Protocol("no choices".into()))?;
    let text = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| TransportError::Protocol("choice without message content".into()))?;
    let finish_reason = match choice.get("finish_reason").and_then(Value::as_str) {
        None | Some("stop") => FinishReason::Stop,
        Some("length") => FinishReason::Length,
        Some(other) => FinishReason::Other(other.to_string()),
    };
    Ok(GenerationReply { text: text.to_string(), finish_reason })
}

impl GenerationTransport for HttpTransport {
    fn generate(&self, request: &GenerationRequest, params: &DecodeParams) -> Result<GenerationReply, TransportError> {
        let mut req = self.agent.post(&self.endpoint).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(self.body(request, params)).map_err(map_ureq)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(map_ureq)?;
        if status >= 400 {
            return Err(TransportError::Status { status, body: text });
        }
        parse_chat_reply(&text)
    }
}
