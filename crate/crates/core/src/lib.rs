//! Event activity analytics for timestamped social-media posts: keyword
//! filtering, hourly activity series, post-peak decay factor estimation,
//! gazetteer-based geographic shares, correlation tables, and lexicon
//! category percentages.

pub mod decay;
pub mod error;
pub mod geo;
pub mod ingest;
pub mod stats;
pub mod timeseries;

pub use decay::{DecayConfig, DecayReport, MergedRegion, RegionFit, Weighting};
pub use error::{Error, Result};
pub use geo::{Assignment, Gazetteer, GazetteerEntry};
pub use ingest::{Format, GeoPoint, KeywordSet, ParseMode, Platform, PostRecord};
pub use stats::{Lexicon, NamedSeries};
pub use timeseries::TimeSeries;
