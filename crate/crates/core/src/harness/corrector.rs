//! Client side of the corrector endpoint.
//!
//! `POST /correct` takes `{source, candidates, input?}` and answers
//! `{output, truncated?}`. `POST /correct_batch` takes the same fields as
//! parallel lists (`sources`, `candidates`, `inputs?`) and answers
//! `{outputs, truncated?}` in request order. `input` is the record text as
//! the dataset builder renders it, so servers need not rebuild the template.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dataset::{build_input, BuildOptions};
use crate::error::{Error, Result};
use crate::generation::{CandidatePool, ClientError, RetryPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectRequest {
    pub source: String,
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectResponse {
    pub output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectBatchRequest {
    pub sources: Vec<String>,
    pub candidates: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectBatchResponse {
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncated: Option<Vec<bool>>,
}

impl CorrectBatchRequest {
    pub fn from_requests(requests: &[CorrectRequest]) -> Self {
        let inputs: Option<Vec<String>> = requests.iter().map(|r| r.input.clone()).collect();
        CorrectBatchRequest {
            sources: requests.iter().map(|r| r.source.clone()).collect(),
            candidates: requests.iter().map(|r| r.candidates.clone()).collect(),
            inputs,
        }
    }
}

/// The request for one pool: candidates as the dataset variant selects them.
pub fn request_for_pool(pool: &CandidatePool, opts: &BuildOptions) -> Result<CorrectRequest> {
    let (parts, _) = build_input(pool, opts)?;
    Ok(CorrectRequest {
        source: pool.source.clone(),
        candidates: parts.candidates.clone(),
        input: Some(parts.render()),
    })
}

pub trait Corrector: Sync {
    /// One output per request, in order.
    fn correct_batch(&self, requests: &[CorrectRequest]) -> Result<Vec<String>>;
}

pub struct HttpCorrector {
    base_url: String,
    agent: ureq::Agent,
    retry: RetryPolicy,
    batch_size: usize,
}

impl HttpCorrector {
    pub fn new(base_url: impl Into<String>) -> Self {
        HttpCorrector {
            base_url: base_url.into().trim_end_matches('/').to_string(),
            agent: ureq::AgentBuilder::new().timeout(Duration::from_secs(300)).build(),
            retry: RetryPolicy::default(),
            batch_size: 32,
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_batch_size(mut self, batch_size: usize) -> Self {
        self.batch_size = batch_size.max(1);
        self
    }

    fn post<B: Serialize, R: for<'de> Deserialize<'de>>(&self, path: &str, body: &B) -> Result<R> {
        let url = format!("{}{path}", self.base_url);
        let body = serde_json::to_value(body)?;
        let value = self
            .retry
            .run(|| match self.agent.post(&url).send_json(body.clone()) {
                Ok(resp) => resp
                    .into_json::<serde_json::Value>()
                    .map_err(|e| ClientError::transient(format!("reading {url}: {e}"))),
                Err(ureq::Error::Status(code, resp)) => {
                    let text = resp.into_string().unwrap_or_default();
                    let message = format!("{url}: HTTP {code}: {text}");
                    if code == 429 || code >= 500 {
                        Err(ClientError::transient(message))
                    } else {
                        Err(ClientError::fatal(message))
                    }
                }
                Err(e) => Err(ClientError::transient(format!("{url}: {e}"))),
            })
            .map_err(|attempts| Error::Corrector(attempts.last().cloned().unwrap_or_default()))?;
        serde_json::from_value(value).map_err(|e| Error::Corrector(format!("{url}: bad response: {e}")))
    }

    pub fn correct(&self, request: &CorrectRequest) -> Result<CorrectResponse> {
        self.post("/correct", request)
    }
}

impl Corrector for HttpCorrector {
    fn correct_batch(&self, requests: &[CorrectRequest]) -> Result<Vec<String>> {
        let mut outputs = Vec::with_capacity(requests.len());
        for chunk in requests.chunks(self.batch_size) {
            let response: CorrectBatchResponse =
                self.post("/correct_batch", &CorrectBatchRequest::from_requests(chunk))?;
            if response.outputs.len() != chunk.len() {
                return Err(Error::Corrector(format!(
                    "sent {} items, got {} outputs",
                    chunk.len(),
                    response.outputs.len()
                )));
            }
            outputs.extend(response.outputs);
        }
        Ok(outputs)
    }
}
