//! Blocking HTTP client used by the CLI subcommands.

use std::path::Path;

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    /// Bad input, rejected request, or an error response from the server.
    #[error("{0}")]
    Validation(String),
    /// The server could not be reached at all.
    #[error("transport error: {0}")]
    Transport(String),
}

impl ClientError {
    pub fn exit_code(&self) -> u8 {
        match self {
            ClientError::Validation(_) => 1,
            ClientError::Transport(_) => 2,
        }
    }
}

pub struct ApiClient {
    base: String,
    http: reqwest::blocking::Client,
}

impl ApiClient {
    pub fn new(base: impl Into<String>) -> Self {
        ApiClient {
            base: base.into().trim_end_matches('/').to_string(),
            http: reqwest::blocking::Client::new(),
        }
    }

    fn handle(
        &self,
        response: reqwest::blocking::Response,
    ) -> Result<serde_json::Value, ClientError> {
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let body: serde_json::Value =
            serde_json::from_str(&text).unwrap_or_else(|_| json!({ "raw": text }));
        if status.is_success() {
            Ok(body)
        } else {
            Err(ClientError::Validation(format!("{status}: {body}")))
        }
    }

    pub fn deploy_file(&self, path: &Path) -> Result<serde_json::Value, ClientError> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| ClientError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let response = self
            .http
            .post(format!("{}/applications", self.base))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        self.handle(response)
    }

    pub fn migrate(
        &self,
        app: &str,
        component: &str,
        to: Option<&str>,
    ) -> Result<serde_json::Value, ClientError> {
        let mut body = json!({ "component": component, "reason": "manual" });
        if let Some(node) = to {
            body["hint"] = json!(node);
        }
        let response = self
            .http
            .post(format!("{}/applications/{app}/migrations", self.base))
            .json(&body)
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        self.handle(response)
    }

    pub fn status(&self, app: &str) -> Result<serde_json::Value, ClientError> {
        let response = self
            .http
            .get(format!("{}/applications/{app}", self.base))
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        self.handle(response)
    }

    pub fn domains(&self) -> Result<serde_json::Value, ClientError> {
        let response = self
            .http
            .get(format!("{}/domains", self.base))
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        self.handle(response)
    }
}
