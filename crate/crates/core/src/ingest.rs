//! Post record parsing and keyword filtering.
//!
//! Records arrive as JSON Lines or CSV dumps; filtering uses a three-class
//! keyword set (phrases, hashtags, word-boundary tokens) so that a short
//! abbreviation like "mi" matches the word "MI" but not "Miami".

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Platform {
    Twitter,
    Facebook,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn is_valid(&self) -> bool {
        (-90.0..=90.0).contains(&self.lat) && (-180.0..=180.0).contains(&self.lon)
    }
}

/// One timestamped post from either platform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    pub id: String,
    pub platform: Platform,
    /// UTC epoch seconds.
    pub timestamp: i64,
    pub text: String,
    pub user_id: String,
    pub geo: Option<GeoPoint>,
}

/// Wire schema for one JSON Lines / CSV row.
#[derive(Debug, Deserialize, Serialize)]
struct RawRecord {
    id: String,
    platform: Platform,
    ts: i64,
    text: String,
    user: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lon: Option<f64>,
}

impl RawRecord {
    fn validate(self, line: usize) -> Result<PostRecord> {
        if self.id.is_empty() {
            return Err(Error::MalformedRecord {
                line,
                msg: "empty id".into(),
            });
        }
        if self.ts <= 0 {
            return Err(Error::MalformedRecord {
                line,
                msg: format!("non-positive timestamp {}", self.ts),
            });
        }
        let geo = match (self.lat, self.lon) {
            (Some(lat), Some(lon)) => {
                let point = GeoPoint { lat, lon };
                if !point.is_valid() {
                    return Err(Error::MalformedRecord {
                        line,
                        msg: format!("geo point out of bounds ({lat}, {lon})"),
                    });
                }
                Some(point)
            }
            (None, None) => None,
            _ => {
                return Err(Error::MalformedRecord {
                    line,
                    msg: "lat/lon must be given together".into(),
                })
            }
        };
        Ok(PostRecord {
            id: self.id,
            platform: self.platform,
            timestamp: self.ts,
            text: self.text,
            user_id: self.user,
            geo,
        })
    }
}

impl From<&PostRecord> for RawRecord {
    fn from(r: &PostRecord) -> Self {
        RawRecord {
            id: r.id.clone(),
            platform: r.platform,
            ts: r.timestamp,
            text: r.text.clone(),
            user: r.user_id.clone(),
            lat: r.geo.map(|g| g.lat),
            lon: r.geo.map(|g| g.lon),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    JsonLines,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonlines" | "jsonl" => Ok(Format::JsonLines),
            "csv" => Ok(Format::Csv),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    Lenient,
    Strict,
}

/// Parse post records from a line stream. In lenient mode malformed lines are
/// counted and skipped; in strict mode the first malformed line is an error.
pub fn parse_records<R: BufRead>(
    input: R,
    format: Format,
    mode: ParseMode,
) -> Result<(Vec<PostRecord>, usize)> {
    match format {
        Format::JsonLines => parse_jsonlines(input, mode),
        Format::Csv => parse_csv(input, mode),
    }
}

fn parse_jsonlines<R: BufRead>(input: R, mode: ParseMode) -> Result<(Vec<PostRecord>, usize)> {
    let mut records = Vec::new();
    let mut skipped = 0;
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<RawRecord>(&line)
            .map_err(|e| Error::MalformedRecord {
                line: line_no,
                msg: e.to_string(),
            })
            .and_then(|raw| raw.validate(line_no));
        match (parsed, mode) {
            (Ok(rec), _) => records.push(rec),
            (Err(_), ParseMode::Lenient) => skipped += 1,
            (Err(e), ParseMode::Strict) => return Err(e),
        }
    }
    Ok((records, skipped))
}

fn parse_csv<R: BufRead>(input: R, mode: ParseMode) -> Result<(Vec<PostRecord>, usize)> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let mut records = Vec::new();
    let mut skipped = 0;
    for (i, row) in reader.deserialize::<RawRecord>().enumerate() {
        let line_no = i + 2; // header occupies line 1
        let parsed = row
            .map_err(|e| Error::MalformedRecord {
                line: line_no,
                msg: e.to_string(),
            })
            .and_then(|raw| raw.validate(line_no));
        match (parsed, mode) {
            (Ok(rec), _) => records.push(rec),
            (Err(_), ParseMode::Lenient) => skipped += 1,
            (Err(e), ParseMode::Strict) => return Err(e),
        }
    }
    Ok((records, skipped))
}

/// Serialize records back out as JSON Lines in the wire schema.
pub fn write_jsonlines<W: std::io::Write>(mut out: W, records: &[PostRecord]) -> Result<()> {
    for rec in records {
        let raw = RawRecord::from(rec);
        serde_json::to_writer(&mut out, &raw).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// A compiled keyword set. Phrases match as case-insensitive substrings,
/// hashtags match '#'-prefixed tokens exactly, tokens match whole words.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeywordSet {
    pub phrases: Vec<String>,
    pub hashtags: Vec<String>,
    pub tokens: Vec<String>,
}

impl KeywordSet {
    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty() && self.hashtags.is_empty() && self.tokens.is_empty()
    }

    pub fn len(&self) -> usize {
        self.phrases.len() + self.hashtags.len() + self.tokens.len()
    }
}

/// Classify keyword lines: leading '#' is a hashtag, internal whitespace
/// makes a phrase, anything else is a word-boundary token. Everything is
/// lowercased and deduplicated.
pub fn compile_keyword_set<S: AsRef<str>>(lines: &[S]) -> KeywordSet {
    let mut set = KeywordSet::default();
    for line in lines {
        let entry = line.as_ref().trim().to_lowercase();
        if entry.is_empty() {
            continue;
        }
        let bucket = if entry.starts_with('#') {
            &mut set.hashtags
        } else if entry.chars().any(char::is_whitespace) {
            &mut set.phrases
        } else {
            &mut set.tokens
        };
        if !bucket.contains(&entry) {
            bucket.push(entry);
        }
    }
    set
}

/// Read a keyword file: one keyword per line, "//" lines are comments.
pub fn load_keyword_file<R: BufRead>(input: R) -> Result<KeywordSet> {
    let mut lines = Vec::new();
    for line in input.lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("//") {
            continue;
        }
        lines.push(trimmed.to_string());
    }
    Ok(compile_keyword_set(&lines))
}

/// Lowercase maximal alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// '#'-prefixed tokens of the text, lowercased, with the '#' retained.
fn hashtag_tokens(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut tags = Vec::new();
    let mut chars = lower.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c != '#' {
            continue;
        }
        let mut end = i + c.len_utf8();
        while let Some(&(j, next)) = chars.peek() {
            if next.is_alphanumeric() || next == '_' {
                end = j + next.len_utf8();
                chars.next();
            } else {
                break;
            }
        }
        if end > i + 1 {
            tags.push(lower[i..end].to_string());
        }
    }
    tags
}

/// Keep records matching any keyword; count matching records per keyword.
/// A record may count toward several keywords but appears once in the output.
pub fn filter_records(
    records: &[PostRecord],
    set: &KeywordSet,
) -> (Vec<PostRecord>, BTreeMap<String, u64>) {
    let mut matched = Vec::new();
    let mut stats: BTreeMap<String, u64> = BTreeMap::new();
    for rec in records {
        let lower = rec.text.to_lowercase();
        let words = tokenize(&rec.text);
        let tags = hashtag_tokens(&rec.text);
        let mut hit = false;
        for phrase in &set.phrases {
            if lower.contains(phrase.as_str()) {
                *stats.entry(phrase.clone()).or_insert(0) += 1;
                hit = true;
            }
        }
        for tag in &set.hashtags {
            if tags.iter().any(|t| t == tag) {
                *stats.entry(tag.clone()).or_insert(0) += 1;
                hit = true;
            }
        }
        for token in &set.tokens {
            if words.iter().any(|w| w == token) {
                *stats.entry(token.clone()).or_insert(0) += 1;
                hit = true;
            }
        }
        if hit {
            matched.push(rec.clone());
        }
    }
    (matched, stats)
}
