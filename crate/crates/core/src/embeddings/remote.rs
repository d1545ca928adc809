//! HTTP client for an external sentence-embedding service.
//!
//! Wire format: `POST <endpoint>` with `{"texts": [...]}`; the service answers
//! `{"dim": n, "vectors": [[...], ...]}` with one vector per text, in request
//! order. How token outputs are pooled into a sentence vector is up to the
//! service.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbedError, EmbeddingProvider};

#[derive(Debug, Serialize)]
pub struct EmbedRequest<'a> {
    pub texts: &'a [String],
}

#[derive(Debug, Deserialize, Serialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub vectors: Vec<Vec<f64>>,
}

pub struct RemoteProvider {
    id: String,
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl RemoteProvider {
    pub fn new(endpoint: &str, timeout: Duration) -> Result<Self, EmbedError> {
        let url = reqwest::Url::parse(endpoint)
            .map_err(|e| EmbedError::InvalidConfig(format!("invalid endpoint '{endpoint}': {e}")))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EmbedError::InvalidConfig(format!("cannot build HTTP client: {e}")))?;
        Ok(Self {
            id: format!("remote:{url}"),
            endpoint: url.to_string(),
            client,
        })
    }

    fn unavailable(&self, reason: impl Into<String>) -> EmbedError {
        EmbedError::RemoteUnavailable {
            endpoint: self.endpoint.clone(),
            reason: reason.into(),
        }
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> Option<usize> {
        None
    }

    fn embed_texts(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let resp = self
            .client
            .post(&self.endpoint)
            .json(&EmbedRequest { texts })
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    self.unavailable(format!("request timed out: {e}"))
                } else {
                    self.unavailable(e.to_string())
                }
            })?;
        let status = resp.status();
        if status != reqwest::StatusCode::OK {
            return Err(self.unavailable(format!("HTTP status {status}")));
        }
        let body: EmbedResponse = resp
            .json()
            .map_err(|e| self.unavailable(format!("malformed response body: {e}")))?;

        if body.dim == 0 {
            return Err(self.unavailable("response declares dim 0"));
        }
        if body.vectors.len() != texts.len() {
            return Err(self.unavailable(format!("expected {} vectors, got {}", texts.len(), body.vectors.len())));
        }
        for v in &body.vectors {
            if v.len() != body.dim {
                return Err(EmbedError::DimensionMismatch {
                    expected: body.dim,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(self.unavailable("vector contains non-finite values"));
            }
        }
        Ok(body.vectors)
    }
}
