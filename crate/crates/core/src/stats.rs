//! Pearson correlations, distribution exports, and lexicon category counts.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::tokenize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSeries {
    pub name: String,
    pub values: Vec<f64>,
}

impl NamedSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        NamedSeries {
            name: name.into(),
            values,
        }
    }
}

/// Pearson product-moment correlation coefficient.
pub fn pearson(x: &NamedSeries, y: &NamedSeries) -> Result<f64> {
    if x.values.len() != y.values.len() {
        return Err(Error::LengthMismatch(x.values.len(), y.values.len()));
    }
    let n = x.values.len();
    if n < 2 {
        return Err(Error::TooFewPoints(n));
    }
    let mean_x = x.values.iter().sum::<f64>() / n as f64;
    let mean_y = y.values.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.values.iter().map(|v| (v - mean_x).powi(2)).sum();
    let syy: f64 = y.values.iter().map(|v| (v - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::ZeroVariance(x.name.clone()));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance(y.name.clone()));
    }
    let sxy: f64 = x
        .values
        .iter()
        .zip(&y.values)
        .map(|(a, b)| (a - mean_x) * (b - mean_y))
        .sum();
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    debug_assert!(r.abs() <= 1.0 + 1e-12);
    Ok(r.clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub series_a: String,
    pub series_b: String,
    pub r: f64,
}

/// One Pearson coefficient per requested name pair.
pub fn correlation_table(
    series: &[NamedSeries],
    pairs: &[(String, String)],
) -> Result<Vec<CorrelationRow>> {
    let lookup = |name: &str| {
        series
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::UnknownSeries(name.to_string()))
    };
    pairs
        .iter()
        .map(|(a, b)| {
            let r = pearson(lookup(a)?, lookup(b)?)?;
            Ok(CorrelationRow {
                series_a: a.clone(),
                series_b: b.clone(),
                r,
            })
        })
        .collect()
}

/// CSV export: "series_a,series_b,r" with r at the report precision of two
/// decimal places.
pub fn write_correlation_csv<W: std::io::Write>(
    mut out: W,
    rows: &[CorrelationRow],
) -> Result<()> {
    writeln!(out, "series_a,series_b,r")?;
    for row in rows {
        writeln!(out, "{},{},{:.2}", row.series_a, row.series_b, row.r)?;
    }
    Ok(())
}

/// Read named series from a CSV whose header names the series and whose
/// columns hold the values.
pub fn load_series_csv<R: BufRead>(input: R) -> Result<Vec<NamedSeries>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for row in reader.records() {
        let row = row.map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for (i, field) in row.iter().enumerate() {
            let value = field
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidParameter(format!("column {}: {e}", headers[i])))?;
            columns[i].push(value);
        }
    }
    Ok(headers
        .into_iter()
        .zip(columns)
        .map(|(name, values)| NamedSeries { name, values })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub enum LexiconEntry {
    Exact(String),
    /// Prefix stem, written with a trailing '*' in lexicon files.
    Stem(String),
}

impl LexiconEntry {
    fn matches(&self, token: &str) -> bool {
        match self {
            LexiconEntry::Exact(w) => token == w,
            LexiconEntry::Stem(prefix) => token.starts_with(prefix.as_str()),
        }
    }
}

/// Category-to-entries dictionary for word counting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Lexicon {
    pub categories: BTreeMap<String, Vec<LexiconEntry>>,
}

impl Lexicon {
    /// Parse the "category: word1 word2 stem3*" file format.
    pub fn load<R: BufRead>(input: R) -> Result<Lexicon> {
        let mut categories: BTreeMap<String, Vec<LexiconEntry>> = BTreeMap::new();
        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with("//") {
                continue;
            }
            let (category, words) = trimmed.split_once(':').ok_or(Error::BadLexiconLine {
                line: line_no,
                msg: "expected 'category: word ...'".into(),
            })?;
            let category = category.trim().to_lowercase();
            if category.is_empty() {
                return Err(Error::BadLexiconLine {
                    line: line_no,
                    msg: "empty category name".into(),
                });
            }
            let entries = categories.entry(category).or_default();
            for word in words.split_whitespace() {
                let word = word.to_lowercase();
                let entry = match word.strip_suffix('*') {
                    Some(stem) if !stem.is_empty() && !stem.contains('*') => {
                        LexiconEntry::Stem(stem.to_string())
                    }
                    None if !word.contains('*') => LexiconEntry::Exact(word),
                    _ => {
                        return Err(Error::BadLexiconLine {
                            line: line_no,
                            msg: format!("bad entry '{word}': '*' only allowed as suffix"),
                        })
                    }
                };
                if !entries.contains(&entry) {
                    entries.push(entry);
                }
            }
        }
        Ok(Lexicon { categories })
    }
}

/// Percent of tokens matching each category. Tokens are lowercase maximal
/// alphanumeric runs; one token may count toward several categories.
pub fn lexicon_percentages(
    texts: &[impl AsRef<str>],
    lexicon: &Lexicon,
) -> Result<BTreeMap<String, f64>> {
    let mut matched: BTreeMap<String, u64> = lexicon
        .categories
        .keys()
        .map(|c| (c.clone(), 0u64))
        .collect();
    let mut total = 0u64;
    for text in texts {
        for token in tokenize(text.as_ref()) {
            total += 1;
            for (category, entries) in &lexicon.categories {
                if entries.iter().any(|e| e.matches(&token)) {
                    *matched.get_mut(category).unwrap() += 1;
                }
            }
        }
    }
    if total == 0 {
        return Err(Error::ZeroTokens);
    }
    Ok(matched
        .into_iter()
        .map(|(c, m)| (c, 100.0 * m as f64 / total as f64))
        .collect())
}

/// Complementary CDF of a frequency-of-frequencies distribution:
/// `(count, P(X >= count))` sorted by count ascending.
pub fn ccdf_export(distribution: &BTreeMap<u64, u64>) -> Vec<(u64, f64)> {
    let total: u64 = distribution.values().sum();
    if total == 0 {
        return Vec::new();
    }
    let mut remaining = total;
    let mut out = Vec::with_capacity(distribution.len());
    for (&count, &users) in distribution {
        out.push((count, remaining as f64 / total as f64));
        remaining -= users;
    }
    out
}

/// CSV export: "count,ccdf".
pub fn write_ccdf_csv<W: std::io::Write>(mut out: W, ccdf: &[(u64, f64)]) -> Result<()> {
    writeln!(out, "count,ccdf")?;
    for (count, p) in ccdf {
        writeln!(out, "{count},{p:.9}")?;
    }
    Ok(())
}
