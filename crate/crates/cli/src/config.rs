use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use afterglow::decay::{DecayConfig, Weighting};
use afterglow::ingest::Format;

/// Full run configuration. Loaded from a JSON file; individual CLI flags
/// override fields. Defaults mirror the standard analysis parameters
/// (hourly buckets, 1% peak threshold sustained over 3 buckets, R^2 gate
/// 0.8).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Vec<PathBuf>,
    pub format: Format,
    pub keywords: Option<PathBuf>,
    pub bucket_width: i64,
    pub tz_offset: i64,
    pub threshold_frac: f64,
    pub sustain_k: usize,
    pub ratio_theta: f64,
    pub max_width: usize,
    pub min_len: usize,
    pub r2_gate: f64,
    pub weighting: Weighting,
    pub gazetteer: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub series: Option<PathBuf>,
    pub pairs: Vec<(String, String)>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let decay = DecayConfig::default();
        RunConfig {
            input: Vec::new(),
            format: Format::JsonLines,
            keywords: None,
            bucket_width: 3600,
            tz_offset: 0,
            threshold_frac: decay.threshold_frac,
            sustain_k: decay.sustain_k,
            ratio_theta: decay.ratio_theta,
            max_width: decay.max_width,
            min_len: decay.min_len,
            r2_gate: decay.r2_gate,
            weighting: decay.weighting,
            gazetteer: None,
            lexicon: None,
            series: None,
            pairs: Vec::new(),
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<RunConfig, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }

    pub fn decay_config(&self) -> DecayConfig {
        DecayConfig {
            threshold_frac: self.threshold_frac,
            sustain_k: self.sustain_k,
            ratio_theta: self.ratio_theta,
            max_width: self.max_width,
            min_len: self.min_len,
            r2_gate: self.r2_gate,
            weighting: self.weighting,
        }
    }

    /// Range checks for every numeric parameter; run before any work.
    pub fn validate(&self) -> Result<(), String> {
        if self.bucket_width <= 0 {
            return Err(format!("bucket_width must be positive, got {}", self.bucket_width));
        }
        self.decay_config().validate().map_err(|e| e.to_string())
    }
}
