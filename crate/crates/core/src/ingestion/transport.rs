use std::collections::{HashMap, VecDeque};
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

/// Blocking GET. `Err` means the request never produced an HTTP status.
pub trait HttpGet: Send + Sync {
    fn get(&self, url: &str) -> std::result::Result<HttpResponse, String>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        Self {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(60))
    }
}

impl HttpGet for UreqTransport {
    fn get(&self, url: &str) -> std::result::Result<HttpResponse, String> {
        match self.agent.get(url).set("Accept", "application/json").call() {
            Ok(resp) => {
                let status = resp.status();
                let body = resp.into_string().map_err(|e| e.to_string())?;
                Ok(HttpResponse { status, body })
            }
            Err(ureq::Error::Status(status, resp)) => Ok(HttpResponse {
                status,
                body: resp.into_string().unwrap_or_default(),
            }),
            Err(e) => Err(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub url: String,
    pub status: u16,
    pub body: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recording {
    pub interactions: Vec<Interaction>,
}

impl Recording {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Replays recorded responses by exact URL. Several recordings for the same
/// URL are served in order; the last one repeats once the queue drains.
pub struct RecordedTransport {
    queues: Mutex<HashMap<String, VecDeque<HttpResponse>>>,
}

impl RecordedTransport {
    pub fn new(recording: Recording) -> Self {
        let mut queues: HashMap<String, VecDeque<HttpResponse>> = HashMap::new();
        for i in recording.interactions {
            queues.entry(i.url).or_default().push_back(HttpResponse {
                status: i.status,
                body: i.body,
            });
        }
        Self {
            queues: Mutex::new(queues),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::new(Recording::load(path)?))
    }
}

impl HttpGet for RecordedTransport {
    fn get(&self, url: &str) -> std::result::Result<HttpResponse, String> {
        let mut queues = self.queues.lock().unwrap();
        let queue = queues
            .get_mut(url)
            .ok_or_else(|| format!("no recorded response for {url}"))?;
        if queue.len() > 1 {
            Ok(queue.pop_front().unwrap())
        } else {
            queue
                .front()
                .cloned()
                .ok_or_else(|| format!("no recorded response for {url}"))
        }
    }
}

/// Wraps another transport and keeps every successful exchange.
pub struct RecordingTransport<T> {
    inner: T,
    log: Mutex<Vec<Interaction>>,
}

impl<T: HttpGet> RecordingTransport<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    /// Recorded exchanges sorted by URL, so the file does not depend on
    /// the order concurrent requests completed in.
    pub fn recording(&self) -> Recording {
        let mut interactions = self.log.lock().unwrap().clone();
        interactions.sort_by(|a, b| a.url.cmp(&b.url));
        Recording { interactions }
    }
}

impl<T: HttpGet> HttpGet for RecordingTransport<T> {
    fn get(&self, url: &str) -> std::result::Result<HttpResponse, String> {
        let resp = self.inner.get(url)?;
        self.log.lock().unwrap().push(Interaction {
            url: url.to_string(),
            status: resp.status,
            body: resp.body.clone(),
        });
        Ok(resp)
    }
}
