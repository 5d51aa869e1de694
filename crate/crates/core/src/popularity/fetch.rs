use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cache::JsonCache;
use crate::dataset::QAExample;
use crate::error::{Error, Result};
use crate::http::{call_with_retry, parallel_map, percent_encode, RateLimiter, RetryPolicy};

/// Environment variable holding the User-Agent sent to the page-views API.
pub const USER_AGENT_ENV: &str = "TAILQA_USER_AGENT";

/// Month used when none is configured.
pub const DEFAULT_MONTH: &str = "2022-10";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct YearMonth {
    pub year: u16,
    pub month: u8,
}

impl YearMonth {
    pub fn last_day(&self) -> u8 {
        match self.month {
            4 | 6 | 9 | 11 => 30,
            2 => {
                let y = self.year as u32;
                if (y.is_multiple_of(4) && !y.is_multiple_of(100)) || y.is_multiple_of(400) {
                    29
                } else {
                    28
                }
            }
            _ => 31,
        }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Validation(format!("invalid month '{s}', expected YYYY-MM"));
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year: u16 = y.parse().map_err(|_| bad())?;
        let month: u8 = m.parse().map_err(|_| bad())?;
        if !(1..=12).contains(&month) {
            return Err(bad());
        }
        Ok(Self { year, month })
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopularityRecord {
    pub entity_title: String,
    pub month: YearMonth,
    pub views: u64,
    /// Unix seconds.
    pub fetched_at: u64,
    /// The API had no article by this title.
    #[serde(default)]
    pub missing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageviewsConfig {
    #[serde(default = "PageviewsConfig::default_base_url")]
    pub base_url: String,
    #[serde(default = "PageviewsConfig::default_project")]
    pub project: String,
    #[serde(default = "PageviewsConfig::default_month")]
    pub month: YearMonth,
    #[serde(default = "PageviewsConfig::default_parallelism")]
    pub parallelism: usize,
    /// Requests per second; `None` disables rate limiting.
    #[serde(default = "PageviewsConfig::default_rate")]
    pub rate_limit_per_sec: Option<f64>,
    #[serde(default)]
    pub retry: RetryPolicy,
}

impl PageviewsConfig {
    fn default_base_url() -> String {
        "https://wikimedia.org/api/rest_v1".into()
    }
    fn default_project() -> String {
        "en.wikipedia".into()
    }
    fn default_month() -> YearMonth {
        DEFAULT_MONTH.parse().unwrap()
    }
    fn default_parallelism() -> usize {
        4
    }
    fn default_rate() -> Option<f64> {
        Some(50.0)
    }
}

impl Default for PageviewsConfig {
    fn default() -> Self {
        Self {
            base_url: Self::default_base_url(),
            project: Self::default_project(),
            month: Self::default_month(),
            parallelism: Self::default_parallelism(),
            rate_limit_per_sec: Self::default_rate(),
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Deserialize)]
struct PageviewsResponse {
    items: Vec<PageviewsItem>,
}

#[derive(Deserialize)]
struct PageviewsItem {
    views: u64,
}

/// Page-views client backed by an on-disk cache keyed by (title, month).
pub struct PageviewsClient {
    config: PageviewsConfig,
    cache: JsonCache,
    agent: ureq::Agent,
    limiter: Option<RateLimiter>,
    requests: AtomicUsize,
}

impl PageviewsClient {
    pub fn new(config: PageviewsConfig, cache_dir: impl Into<PathBuf>) -> Self {
        let user_agent = std::env::var(USER_AGENT_ENV)
            .unwrap_or_else(|_| format!("tailqa/{}", env!("CARGO_PKG_VERSION")));
        let agent = ureq::AgentBuilder::new().user_agent(&user_agent).build();
        let limiter = config
            .rate_limit_per_sec
            .map(|r| RateLimiter::new(r, config.parallelism.max(1) as f64));
        Self {
            config,
            cache: JsonCache::new(cache_dir),
            agent,
            limiter,
            requests: AtomicUsize::new(0),
        }
    }

    pub fn config(&self) -> &PageviewsConfig {
        &self.config
    }

    /// Number of HTTP requests issued by this client (retries included).
    pub fn requests_made(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    fn url(&self, title: &str, month: YearMonth) -> String {
        let article = percent_encode(&title.trim().replace(' ', "_"));
        format!(
            "{}/metrics/pageviews/per-article/{}/all-access/user/{}/monthly/{:04}{:02}01/{:04}{:02}{:02}",
            self.config.base_url.trim_end_matches('/'),
            self.config.project,
            article,
            month.year,
            month.month,
            month.year,
            month.month,
            month.last_day()
        )
    }

    /// Returns the cached record when present, otherwise queries the API and
    /// caches the result. A 404 yields `views = 0` with `missing` set.
    pub fn fetch(&self, title: &str, month: YearMonth) -> Result<PopularityRecord> {
        let month_s = month.to_string();
        let key = JsonCache::key(&["pageviews", &self.config.project, title, &month_s]);
        if let Some(rec) = self.cache.get::<PopularityRecord>(&key) {
            return Ok(rec);
        }
        let url = self.url(title, month);
        let outcome = call_with_retry(&self.config.retry, |timeout: Duration| {
            if let Some(l) = &self.limiter {
                l.acquire();
            }
            self.requests.fetch_add(1, Ordering::Relaxed);
            self.agent.get(&url).timeout(timeout).call()
        })?;
        let (views, missing) = match outcome.status {
            200..=299 => {
                let body: PageviewsResponse = serde_json::from_str(&outcome.body).map_err(|e| {
                    Error::Protocol(format!("page-views response for '{title}': {e}"))
                })?;
                (body.items.iter().map(|i| i.views).sum(), false)
            }
            404 => (0, true),
            code => {
                return Err(Error::Protocol(format!(
                    "page-views API returned HTTP {code} for '{title}'"
                )))
            }
        };
        let record = PopularityRecord {
            entity_title: title.to_string(),
            month,
            views,
            fetched_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            missing,
        };
        self.cache.put(&key, &record)?;
        Ok(record)
    }

    /// Fetches each distinct title once with bounded parallelism.
    pub fn fetch_many(
        &self,
        titles: &[String],
        month: YearMonth,
    ) -> Result<BTreeMap<String, PopularityRecord>> {
        let mut unique: Vec<String> = titles.to_vec();
        unique.sort();
        unique.dedup();
        let results = parallel_map(&unique, self.config.parallelism, |t| self.fetch(t, month));
        unique
            .into_iter()
            .zip(results)
            .map(|(t, r)| r.map(|r| (t, r)))
            .collect()
    }
}

/// Fills `popularity` of every example from its subject label's page views.
pub fn annotate_dataset(
    examples: &[QAExample],
    client: &PageviewsClient,
    month: YearMonth,
) -> Result<Vec<QAExample>> {
    let titles: Vec<String> = examples.iter().map(|e| e.subj_label.clone()).collect();
    let records = client.fetch_many(&titles, month)?;
    Ok(examples
        .iter()
        .map(|e| {
            let mut e = e.clone();
            e.popularity = Some(records[&e.subj_label].views);
            e
        })
        .collect())
}
