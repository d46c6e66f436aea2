//! Blocking single-request client for a remote network commons.
//!
//! `GET <endpoint>/network/<id>` is expected to return a CX document. The
//! transport is pluggable so tests can replay recorded responses instead of
//! touching the network.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;
use url::Url;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

const MAX_BODY_BYTES: u64 = 1 << 30;

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("invalid endpoint {endpoint:?}: {reason}")]
    InvalidEndpoint { endpoint: String, reason: String },

    #[error("GET {url} returned status {status}")]
    Status { url: String, status: u16 },

    #[error("GET {url} timed out after {}s", .timeout.as_secs_f64())]
    Timeout { url: String, timeout: Duration },

    #[error("GET {url} failed: {cause}")]
    Transport { url: String, cause: String },

    #[error("no recorded response for {0}")]
    NotRecorded(String),

    #[error("invalid fixture: {0}")]
    Fixture(String),
}

impl FetchError {
    /// HTTP status for non-success responses.
    pub fn status(&self) -> Option<u16> {
        match self {
            FetchError::Status { status, .. } => Some(*status),
            _ => None,
        }
    }

    pub fn is_timeout(&self) -> bool {
        matches!(self, FetchError::Timeout { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

pub trait HttpGet: Send + Sync {
    /// Performs one GET. Non-success statuses are returned, not raised.
    fn get(&self, url: &str, timeout: Duration) -> Result<HttpResponse, FetchError>;
}

/// Live HTTP transport.
#[derive(Debug, Default, Clone, Copy)]
pub struct UreqTransport;

impl HttpGet for UreqTransport {
    fn get(&self, url: &str, timeout: Duration) -> Result<HttpResponse, FetchError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let map = |e: ureq::Error| match e {
            ureq::Error::Timeout(_) => FetchError::Timeout {
                url: url.to_string(),
                timeout,
            },
            ureq::Error::Io(io)
                if matches!(io.kind(), std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock) =>
            {
                FetchError::Timeout {
                    url: url.to_string(),
                    timeout,
                }
            }
            other => FetchError::Transport {
                url: url.to_string(),
                cause: other.to_string(),
            },
        };
        let mut resp = agent.get(url).call().map_err(map)?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(MAX_BODY_BYTES)
            .read_to_vec()
            .map_err(map)?;
        Ok(HttpResponse { status, body })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Fixture {
    interactions: Vec<Interaction>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Interaction {
    url: String,
    #[serde(default = "ok")]
    status: u16,
    /// A string is replayed verbatim; any other JSON value is replayed as
    /// its compact serialization.
    #[serde(default)]
    body: serde_json::Value,
    #[serde(default)]
    timeout: bool,
}

fn ok() -> u16 {
    200
}

#[derive(Debug, Clone)]
enum Recorded {
    Response(HttpResponse),
    Timeout,
}

/// Replays responses from a JSON fixture of the form
/// `{"interactions": [{"url": ..., "status": 200, "body": ...}]}`.
/// An interaction with `"timeout": true` simulates an expired deadline.
#[derive(Debug, Clone, Default)]
pub struct RecordedTransport {
    responses: HashMap<String, Recorded>,
}

impl RecordedTransport {
    pub fn from_json(text: &str) -> Result<Self, FetchError> {
        let fixture: Fixture =
            serde_json::from_str(text).map_err(|e| FetchError::Fixture(e.to_string()))?;
        let mut responses = HashMap::new();
        for i in fixture.interactions {
            let rec = if i.timeout {
                Recorded::Timeout
            } else {
                let body = match i.body {
                    serde_json::Value::String(s) => s.into_bytes(),
                    serde_json::Value::Null => Vec::new(),
                    v => v.to_string().into_bytes(),
                };
                Recorded::Response(HttpResponse { status: i.status, body })
            };
            responses.insert(i.url, rec);
        }
        Ok(RecordedTransport { responses })
    }

    pub fn load(path: &Path) -> Result<Self, FetchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FetchError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn insert(&mut self, url: impl Into<String>, status: u16, body: impl Into<Vec<u8>>) {
        let resp = HttpResponse {
            status,
            body: body.into(),
        };
        self.responses.insert(url.into(), Recorded::Response(resp));
    }
}

impl HttpGet for RecordedTransport {
    fn get(&self, url: &str, timeout: Duration) -> Result<HttpResponse, FetchError> {
        match self.responses.get(url) {
            Some(Recorded::Response(r)) => Ok(r.clone()),
            Some(Recorded::Timeout) => Err(FetchError::Timeout {
                url: url.to_string(),
                timeout,
            }),
            None => Err(FetchError::NotRecorded(url.to_string())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct NetworkClient<T = UreqTransport> {
    endpoint: Url,
    timeout: Duration,
    transport: T,
}

impl NetworkClient<UreqTransport> {
    pub fn new(endpoint: &str) -> Result<Self, FetchError> {
        Self::with_transport(endpoint, UreqTransport)
    }
}

impl<T: HttpGet> NetworkClient<T> {
    pub fn with_transport(endpoint: &str, transport: T) -> Result<Self, FetchError> {
        let invalid = |reason: String| FetchError::InvalidEndpoint {
            endpoint: endpoint.to_string(),
            reason,
        };
        let url = Url::parse(endpoint).map_err(|e| invalid(e.to_string()))?;
        if !matches!(url.scheme(), "http" | "https") {
            return Err(invalid(format!("unsupported scheme {}", url.scheme())));
        }
        if url.cannot_be_a_base() || url.host().is_none() {
            return Err(invalid("missing host".into()));
        }
        Ok(NetworkClient {
            endpoint: url,
            timeout: DEFAULT_TIMEOUT,
            transport,
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn timeout(&self) -> Duration {
        self.timeout
    }

    pub fn network_url(&self, network_id: &str) -> Url {
        let mut url = self.endpoint.clone();
        url.path_segments_mut()
            .expect("endpoint validated as base URL")
            .pop_if_empty()
            .extend(["network", network_id]);
        url
    }

    /// Fetches the raw CX document for `network_id`. Never retries.
    pub fn fetch(&self, network_id: &str) -> Result<Vec<u8>, FetchError> {
        if network_id.trim().is_empty() {
            return Err(FetchError::Transport {
                url: self.endpoint.to_string(),
                cause: "empty network id".into(),
            });
        }
        let url = self.network_url(network_id).to_string();
        log::info!("fetching {url}");
        let resp = self.transport.get(&url, self.timeout)?;
        if !(200..300).contains(&resp.status) {
            return Err(FetchError::Status {
                url,
                status: resp.status,
            });
        }
        Ok(resp.body)
    }
}

/// Fetches a network over live HTTP with the default timeout.
pub fn fetch_network(network_id: &str, endpoint: &str) -> Result<Vec<u8>, FetchError> {
    NetworkClient::new(endpoint)?.fetch(network_id)
}
