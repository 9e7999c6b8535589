//! Client for an Etherscan-compatible account transaction-list endpoint.
//!
//! Requests are serialized through a minimum-interval rate limiter, transport
//! failures and rate-limit replies are retried with exponential backoff, and
//! complete per-address results are cached on disk as JSON.

use std::fs;
use std::path::PathBuf;
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::Deserialize;

use super::records::{is_address, TransactionRecord, WEI_PER_ETHER};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct FetchConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    /// Extra query parameters appended to every request (e.g. a chain id).
    pub extra_params: Vec<(String, String)>,
    pub page_size: usize,
    pub max_requests_per_second: f64,
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub timeout: Duration,
    pub cache_dir: Option<PathBuf>,
    /// Off by default; without it only cached addresses can be served.
    pub network_enabled: bool,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.etherscan.io/api".into(),
            api_key: None,
            extra_params: Vec::new(),
            page_size: 1000,
            max_requests_per_second: 5.0,
            max_retries: 5,
            initial_backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(30),
            cache_dir: None,
            network_enabled: false,
        }
    }
}

#[derive(Deserialize)]
struct Envelope {
    status: String,
    message: String,
    result: serde_json::Value,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ApiTx {
    hash: String,
    from: String,
    #[serde(default)]
    to: String,
    value: String,
    time_stamp: String,
    #[serde(default)]
    is_error: String,
}

enum Page {
    Records(Vec<TransactionRecord>, usize),
    RateLimited,
}

pub struct ExplorerClient {
    config: FetchConfig,
    agent: ureq::Agent,
    last_request: Option<Instant>,
    requests: u64,
}

impl ExplorerClient {
    pub fn new(config: FetchConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        Self {
            config,
            agent,
            last_request: None,
            requests: 0,
        }
    }

    /// HTTP requests issued so far, retries included.
    pub fn requests_made(&self) -> u64 {
        self.requests
    }

    fn cache_path(&self, address: &str) -> Option<PathBuf> {
        self.config
            .cache_dir
            .as_ref()
            .map(|d| d.join(format!("{address}.json")))
    }

    /// All normal transactions of `address`, sorted by timestamp.
    pub fn fetch_account_transactions(&mut self, address: &str) -> Result<Vec<TransactionRecord>> {
        let address = address.to_ascii_lowercase();
        if !is_address(&address) {
            return Err(Error::Validation(format!("malformed address `{address}`")));
        }
        if let Some(path) = self.cache_path(&address) {
            if path.exists() {
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                return serde_json::from_str(&text)
                    .map_err(|e| Error::format(path.display().to_string(), e.line(), e.to_string()));
            }
        }
        if !self.config.network_enabled {
            return Err(Error::Fetch(format!(
                "`{address}` is not cached and network access is disabled"
            )));
        }

        let mut records = Vec::new();
        let mut page = 1usize;
        loop {
            let (batch, raw_len) = self.fetch_page_with_retry(&address, page)?;
            records.extend(batch);
            if raw_len < self.config.page_size {
                break;
            }
            page += 1;
        }
        records.sort_by(|a, b| a.timestamp.cmp(&b.timestamp).then_with(|| a.tx_hash.cmp(&b.tx_hash)));

        if let Some(path) = self.cache_path(&address) {
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            let json = serde_json::to_string(&records).expect("records serialize");
            fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        }
        Ok(records)
    }

    fn fetch_page_with_retry(&mut self, address: &str, page: usize) -> Result<(Vec<TransactionRecord>, usize)> {
        let mut backoff = self.config.initial_backoff;
        let mut attempt = 0;
        loop {
            let outcome = self.fetch_page(address, page);
            let retryable = match outcome {
                Ok(Page::Records(recs, n)) => return Ok((recs, n)),
                Ok(Page::RateLimited) => "rate limited".to_string(),
                Err(Error::Fetch(msg)) => msg,
                Err(e) => return Err(e),
            };
            attempt += 1;
            if attempt > self.config.max_retries {
                return Err(Error::Fetch(format!(
                    "giving up on {address} page {page} after {attempt} attempts: {retryable}"
                )));
            }
            warn!("{address} page {page}: {retryable}; retrying in {backoff:?}");
            thread::sleep(backoff);
            backoff *= 2;
        }
    }

    fn throttle(&mut self) {
        if self.config.max_requests_per_second <= 0.0 {
            return;
        }
        let interval = Duration::from_secs_f64(1.0 / self.config.max_requests_per_second);
        if let Some(last) = self.last_request {
            let elapsed = last.elapsed();
            if elapsed < interval {
                thread::sleep(interval - elapsed);
            }
        }
        self.last_request = Some(Instant::now());
    }

    fn fetch_page(&mut self, address: &str, page: usize) -> Result<Page> {
        self.throttle();
        self.requests += 1;
        let page_s = page.to_string();
        let offset_s = self.config.page_size.to_string();
        let mut req = self
            .agent
            .get(&self.config.endpoint)
            .query("module", "account")
            .query("action", "txlist")
            .query("address", address)
            .query("page", &page_s)
            .query("offset", &offset_s)
            .query("sort", "asc");
        if let Some(key) = &self.config.api_key {
            req = req.query("apikey", key);
        }
        for (k, v) in &self.config.extra_params {
            req = req.query(k, v);
        }
        debug!("GET {} address={address} page={page}", self.config.endpoint);
        let mut resp = req.call().map_err(|e| Error::Fetch(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 {
            return Ok(Page::RateLimited);
        }
        if status >= 500 {
            return Err(Error::Fetch(format!("server returned HTTP {status}")));
        }
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Fetch(e.to_string()))?;
        if status != 200 {
            return Err(Error::Validation(format!("endpoint returned HTTP {status}: {body}")));
        }
        parse_page(&body, &self.config.endpoint)
    }
}

fn parse_page(body: &str, source: &str) -> Result<Page> {
    let env: Envelope = serde_json::from_str(body).map_err(|e| Error::format(source, e.line(), e.to_string()))?;
    match (&env.status[..], &env.result) {
        ("1", serde_json::Value::Array(items)) => {
            let n = items.len();
            let mut out = Vec::with_capacity(n);
            for item in items {
                let tx: ApiTx = serde_json::from_value(item.clone())
                    .map_err(|e| Error::format(source, 1, format!("malformed transaction: {e}")))?;
                if tx.to.is_empty() {
                    // contract creation
                    continue;
                }
                out.push(convert(tx, source)?);
            }
            Ok(Page::Records(out, n))
        }
        ("0", result) => {
            let text = result.as_str().unwrap_or("");
            if env.message.starts_with("No transactions found") {
                Ok(Page::Records(Vec::new(), 0))
            } else if text.to_ascii_lowercase().contains("rate limit") {
                Ok(Page::RateLimited)
            } else {
                Err(Error::Fetch(format!("{}: {}", env.message, text)))
            }
        }
        _ => Err(Error::format(source, 1, format!("unexpected status `{}`", env.status))),
    }
}

fn convert(tx: ApiTx, source: &str) -> Result<TransactionRecord> {
    let bad = |what: &str, v: &str| Error::format(source, 1, format!("malformed {what} `{v}`"));
    let wei: u128 = tx.value.parse().map_err(|_| bad("value", &tx.value))?;
    let timestamp = tx.time_stamp.parse().map_err(|_| bad("timeStamp", &tx.time_stamp))?;
    let from = tx.from.to_ascii_lowercase();
    let to = tx.to.to_ascii_lowercase();
    if !is_address(&from) || !is_address(&to) {
        return Err(bad("address", &format!("{from} -> {to}")));
    }
    Ok(TransactionRecord {
        tx_hash: Some(tx.hash.to_ascii_lowercase()),
        from,
        to,
        value: wei as f64 / WEI_PER_ETHER,
        timestamp,
        failed: tx.is_error == "1",
    })
}
