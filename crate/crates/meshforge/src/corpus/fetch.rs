//! Remote article fetching with rate limiting and a disk cache.
//!
//! Responses are cached on disk keyed by a digest of the request (without
//! credentials), so a populated cache makes reruns fully offline. The HTTP
//! layer sits behind a small trait to keep the client testable.

use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use quick_xml::events::Event;
use quick_xml::Reader;
use sha2::{Digest, Sha256};

use crate::corpus::{hex_str, ArticleRecord, MeshRef};
use crate::error::{Error, Result};

/// Environment variable consulted for the API key.
pub const API_KEY_ENV: &str = "MESHFORGE_API_KEY";

#[derive(Debug, Clone)]
pub struct EndpointConfig {
    /// Base URL of the efetch-style endpoint.
    pub fetch_url: String,
    /// Base URL of the esearch-style endpoint for date-range queries.
    pub search_url: String,
    pub api_key: Option<String>,
    pub rate_limit_per_sec: f64,
    pub cache_dir: Option<PathBuf>,
    pub max_retries: u32,
    /// Ids per fetch request.
    pub batch_size: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            fetch_url: "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/efetch.fcgi".to_string(),
            search_url: "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/esearch.fcgi".to_string(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            rate_limit_per_sec: 3.0,
            cache_dir: None,
            max_retries: 3,
            batch_size: 100,
        }
    }
}

pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<Vec<u8>>;
}

/// Blocking HTTP transport.
pub struct HttpTransport {
    agent: ureq::Agent,
}

impl Default for HttpTransport {
    fn default() -> Self {
        HttpTransport {
            agent: ureq::AgentBuilder::new()
                .timeout(Duration::from_secs(60))
                .build(),
        }
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<Vec<u8>> {
        match self.agent.get(url).call() {
            Ok(resp) => {
                let mut body = Vec::new();
                resp.into_reader()
                    .read_to_end(&mut body)
                    .map_err(|e| Error::Http {
                        url: url.to_string(),
                        message: e.to_string(),
                    })?;
                Ok(body)
            }
            Err(ureq::Error::Status(status, _)) => Err(Error::HttpStatus {
                url: url.to_string(),
                status,
            }),
            Err(e) => Err(Error::Http {
                url: url.to_string(),
                message: e.to_string(),
            }),
        }
    }
}

pub struct PubmedClient<T: Transport> {
    config: EndpointConfig,
    transport: T,
    last_request: Mutex<Option<Instant>>,
}

impl<T: Transport> PubmedClient<T> {
    pub fn new(config: EndpointConfig, transport: T) -> Self {
        PubmedClient {
            config,
            transport,
            last_request: Mutex::new(None),
        }
    }

    /// Fetch records by id list, in batches. Cached responses skip both the
    /// network and the rate limiter.
    pub fn fetch_ids(&self, ids: &[String]) -> Result<Vec<ArticleRecord>> {
        let mut out = Vec::new();
        for chunk in ids.chunks(self.config.batch_size.max(1)) {
            if chunk.is_empty() {
                continue;
            }
            let joined = chunk.join(",");
            let cache_key = format!("efetch:db=pubmed:id={joined}");
            let mut url = format!(
                "{}?db=pubmed&retmode=xml&id={joined}",
                self.config.fetch_url
            );
            if let Some(key) = &self.config.api_key {
                url.push_str(&format!("&api_key={key}"));
            }
            let body = self.get_cached(&cache_key, &url)?;
            let mut records = parse_pubmed_article_set(&body)?;
            out.append(&mut records);
        }
        Ok(out)
    }

    /// Resolve a publication date range to ids, then fetch them.
    pub fn fetch_date_range(&self, from: &str, to: &str, max: usize) -> Result<Vec<ArticleRecord>> {
        let cache_key = format!("esearch:db=pubmed:from={from}:to={to}:max={max}");
        let mut url = format!(
            "{}?db=pubmed&retmax={max}&datetype=pdat&mindate={from}&maxdate={to}",
            self.config.search_url
        );
        if let Some(key) = &self.config.api_key {
            url.push_str(&format!("&api_key={key}"));
        }
        let body = self.get_cached(&cache_key, &url)?;
        let ids = parse_esearch_ids(&body)?;
        self.fetch_ids(&ids)
    }

    fn cache_path(&self, key: &str) -> Option<PathBuf> {
        let dir = self.config.cache_dir.as_ref()?;
        let digest = hex_str(&Sha256::digest(key.as_bytes()));
        Some(dir.join(format!("{digest}.xml")))
    }

    fn get_cached(&self, key: &str, url: &str) -> Result<Vec<u8>> {
        if let Some(path) = self.cache_path(key) {
            if let Ok(body) = std::fs::read(&path) {
                log::debug!("cache hit for {key}");
                return Ok(body);
            }
        }
        let body = self.get_with_retry(url)?;
        if let Some(path) = self.cache_path(key) {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&path, &body)?;
        }
        Ok(body)
    }

    fn throttle(&self) {
        let interval = if self.config.rate_limit_per_sec > 0.0 {
            Duration::from_secs_f64(1.0 / self.config.rate_limit_per_sec)
        } else {
            return;
        };
        let mut last = self.last_request.lock().unwrap();
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < interval {
                std::thread::sleep(interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn get_with_retry(&self, url: &str) -> Result<Vec<u8>> {
        let mut attempt = 0;
        loop {
            self.throttle();
            match self.transport.get(url) {
                Ok(body) => return Ok(body),
                Err(Error::HttpStatus { status, url }) if status < 500 => {
                    return Err(Error::HttpStatus { status, url });
                }
                Err(e) => {
                    if attempt >= self.config.max_retries {
                        return Err(e);
                    }
                    let backoff = Duration::from_millis(100 * backoff_shift(attempt));
                    std::thread::sleep(backoff);
                    attempt += 1;
                }
            }
        }
    }
}

fn backoff_shift(attempt: u32) -> u64 {
    1u64 << attempt.min(6)
}

/// Parse an efetch-style `PubmedArticleSet`. Articles that cannot be
/// reduced to a record (no pmid or year) are skipped with a log line.
pub fn parse_pubmed_article_set(xml: &[u8]) -> Result<Vec<ArticleRecord>> {
    let text = std::str::from_utf8(xml).map_err(|e| Error::Record {
        path: "<response>".to_string(),
        line: 0,
        message: format!("response is not UTF-8: {e}"),
    })?;
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let mut out = Vec::new();
    let mut buf = Vec::new();
    loop {
        match reader.read_event_into(&mut buf).map_err(xml_err)? {
            Event::Start(e) if e.name().as_ref() == b"PubmedArticle" => {
                match parse_article(&mut reader)? {
                    Some(rec) => out.push(rec),
                    None => log::debug!("skipping article without pmid/year"),
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    Ok(out)
}

fn xml_err(e: quick_xml::Error) -> Error {
    Error::Record {
        path: "<response>".to_string(),
        line: 0,
        message: format!("XML error: {e}"),
    }
}

fn parse_article(reader: &mut Reader<&[u8]>) -> Result<Option<ArticleRecord>> {
    let mut pmid = String::new();
    let mut year: Option<i32> = None;
    let mut journal = String::new();
    let mut journal_title = String::new();
    let mut authors = 0u32;
    let mut mesh = Vec::new();
    let mut ptypes: Vec<String> = Vec::new();
    let mut buf = Vec::new();

    loop {
        match reader.read_event_into(&mut buf).map_err(xml_err)? {
            Event::Start(e) => match e.name().as_ref() {
                b"PMID" if pmid.is_empty() => pmid = read_text(reader, b"PMID")?,
                b"ISOAbbreviation" => journal = read_text(reader, b"ISOAbbreviation")?,
                b"Title" if journal_title.is_empty() => {
                    journal_title = read_text(reader, b"Title")?
                }
                b"PubDate" => {
                    if let Some(y) = parse_pub_date(reader)? {
                        year.get_or_insert(y);
                    }
                }
                b"Author" => authors += 1,
                b"MeshHeading" => {
                    if let Some(m) = parse_mesh_heading(reader)? {
                        mesh.push(m);
                    }
                }
                b"PublicationType" => ptypes.push(read_text(reader, b"PublicationType")?),
                _ => {}
            },
            Event::End(e) if e.name().as_ref() == b"PubmedArticle" => break,
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    let (Some(year), false) = (year, pmid.is_empty()) else {
        return Ok(None);
    };
    if journal.is_empty() {
        journal = journal_title;
    }
    let ptype = ptypes
        .iter()
        .find(|t| *t == "Journal Article" || *t == "Review")
        .or_else(|| ptypes.first())
        .cloned();
    Ok(Some(ArticleRecord {
        pmid,
        year,
        journal,
        authors,
        mesh,
        ptype,
    }))
}

fn parse_pub_date(reader: &mut Reader<&[u8]>) -> Result<Option<i32>> {
    let mut year = None;
    let mut medline_date = String::new();
    let mut buf = Vec::new();
    loop {
        match reader.read_event_into(&mut buf).map_err(xml_err)? {
            Event::Start(e) => match e.name().as_ref() {
                b"Year" => year = read_text(reader, b"Year")?.parse().ok(),
                b"MedlineDate" => medline_date = read_text(reader, b"MedlineDate")?,
                _ => {}
            },
            Event::End(e) if e.name().as_ref() == b"PubDate" => break,
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if year.is_none() && medline_date.len() >= 4 {
        year = medline_date[..4].parse().ok();
    }
    Ok(year)
}

/// A heading is major when the descriptor or any qualifier is starred.
fn parse_mesh_heading(reader: &mut Reader<&[u8]>) -> Result<Option<MeshRef>> {
    let mut id = String::new();
    let mut major = false;
    let mut buf = Vec::new();
    loop {
        match reader.read_event_into(&mut buf).map_err(xml_err)? {
            Event::Start(e) => {
                let name = e.name().as_ref().to_vec();
                if name == b"DescriptorName" || name == b"QualifierName" {
                    let mut topic_major = false;
                    let mut ui = String::new();
                    for attr in e.attributes().flatten() {
                        match attr.key.as_ref() {
                            b"UI" => ui = String::from_utf8_lossy(&attr.value).to_string(),
                            b"MajorTopicYN" => topic_major = &*attr.value == b"Y",
                            _ => {}
                        }
                    }
                    if name == b"DescriptorName" && id.is_empty() {
                        id = ui;
                    }
                    major |= topic_major;
                    // consume the text content
                    let _ = read_text(reader, &name)?;
                }
            }
            Event::End(e) if e.name().as_ref() == b"MeshHeading" => break,
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if id.is_empty() {
        return Ok(None);
    }
    Ok(Some(MeshRef { id, major }))
}

fn parse_esearch_ids(xml: &[u8]) -> Result<Vec<String>> {
    let text = std::str::from_utf8(xml).map_err(|e| Error::Record {
        path: "<response>".to_string(),
        line: 0,
        message: format!("response is not UTF-8: {e}"),
    })?;
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);
    let mut ids = Vec::new();
    let mut buf = Vec::new();
    let mut in_idlist = false;
    loop {
        match reader.read_event_into(&mut buf).map_err(xml_err)? {
            Event::Start(e) if e.name().as_ref() == b"IdList" => in_idlist = true,
            Event::Start(e) if in_idlist && e.name().as_ref() == b"Id" => {
                ids.push(read_text(&mut reader, b"Id")?);
            }
            Event::End(e) if e.name().as_ref() == b"IdList" => in_idlist = false,
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    Ok(ids)
}

fn read_text(reader: &mut Reader<&[u8]>, end: &[u8]) -> Result<String> {
    let mut text = String::new();
    let mut depth = 1usize;
    let mut buf = Vec::new();
    loop {
        match reader.read_event_into(&mut buf).map_err(xml_err)? {
            Event::Text(t) => text.push_str(&t.unescape().map_err(xml_err)?),
            Event::Start(_) => depth += 1,
            Event::End(e) => {
                depth -= 1;
                if depth == 0 && e.name().as_ref() == end {
                    break;
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    Ok(text.trim().to_string())
}
