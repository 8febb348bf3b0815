mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use afterglow::decay::Weighting;
use afterglow::ingest::Format;

use commands::{CmdError, EXIT_INPUT};
use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "afterglow",
    about = "Event activity analytics: keyword filtering, hourly series, decay factors, geo shares, correlations"
)]
struct Cli {
    /// JSON config file; CLI flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Input post files (JSON Lines or CSV); repeatable
    #[arg(long, global = true)]
    input: Vec<PathBuf>,

    /// Input format: jsonlines or csv
    #[arg(long, global = true)]
    format: Option<String>,

    /// Keyword file, one keyword per line, "//" comments
    #[arg(long, global = true)]
    keywords: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seconds added to timestamps before bucket alignment
    #[arg(long, global = true)]
    tz_offset: Option<i64>,

    /// Bucket width in seconds
    #[arg(long, global = true)]
    bucket_width: Option<i64>,

    /// Decay window threshold as a fraction of the peak
    #[arg(long, global = true)]
    threshold_frac: Option<f64>,

    /// Consecutive sub-threshold buckets ending the decay window
    #[arg(long, global = true)]
    sustain_k: Option<usize>,

    /// Spike detection ratio over boundary neighbors
    #[arg(long, global = true)]
    ratio_theta: Option<f64>,

    /// Maximum spike run width in buckets
    #[arg(long, global = true)]
    max_width: Option<usize>,

    /// Minimum region length accepted without an R^2 check
    #[arg(long, global = true)]
    min_len: Option<usize>,

    /// R^2 gate for accepting a fitted region
    #[arg(long, global = true)]
    r2_gate: Option<f64>,

    /// Region weighting: bucket_length, point_count, or activity_mass
    #[arg(long, global = true)]
    weighting: Option<String>,

    /// Gazetteer CSV
    #[arg(long, global = true)]
    gazetteer: Option<PathBuf>,

    /// Lexicon file ("category: word stem*" lines)
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,

    /// Named-series CSV for correlations
    #[arg(long, global = true)]
    series: Option<PathBuf>,

    /// Correlation pairs as "a:b,c:d"
    #[arg(long, global = true)]
    pairs: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Filter records against a keyword set; write matches and stats
    Filter,
    /// Bucket records into an activity series CSV
    Bucket,
    /// Day-wise 24-hour overlay of an hourly series
    Overlay {
        /// Comma-separated day indices (default: all days)
        #[arg(long, value_delimiter = ',')]
        days: Option<Vec<usize>>,
    },
    /// Net decay factor analysis with a JSON report
    Decay,
    /// Country shares and density grid from geo-tagged records
    Geo {
        /// Density grid cell size in degrees
        #[arg(long, default_value_t = 0.5)]
        cell_size: f64,
    },
    /// Pearson correlation table over named series
    Correlate,
    /// Lexicon category percentages over record texts
    Lexicon,
    /// Run all configured stages and emit the full bundle
    Report,
}

fn parse_pairs(spec: &str) -> Result<Vec<(String, String)>, String> {
    spec.split(',')
        .map(|pair| {
            pair.split_once(':')
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                .ok_or_else(|| format!("bad pair '{pair}', expected a:b"))
        })
        .collect()
}

fn build_config(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let o = &cli.overrides;
    if !o.input.is_empty() {
        cfg.input = o.input.clone();
    }
    if let Some(format) = &o.format {
        cfg.format = format.parse::<Format>().map_err(|e| e.to_string())?;
    }
    if let Some(v) = &o.keywords {
        cfg.keywords = Some(v.clone());
    }
    if let Some(v) = &o.out {
        cfg.out = v.clone();
    }
    if let Some(v) = o.tz_offset {
        cfg.tz_offset = v;
    }
    if let Some(v) = o.bucket_width {
        cfg.bucket_width = v;
    }
    if let Some(v) = o.threshold_frac {
        cfg.threshold_frac = v;
    }
    if let Some(v) = o.sustain_k {
        cfg.sustain_k = v;
    }
    if let Some(v) = o.ratio_theta {
        cfg.ratio_theta = v;
    }
    if let Some(v) = o.max_width {
        cfg.max_width = v;
    }
    if let Some(v) = o.min_len {
        cfg.min_len = v;
    }
    if let Some(v) = o.r2_gate {
        cfg.r2_gate = v;
    }
    if let Some(w) = &o.weighting {
        cfg.weighting = match w.as_str() {
            "bucket_length" => Weighting::BucketLength,
            "point_count" => Weighting::PointCount,
            "activity_mass" => Weighting::ActivityMass,
            other => return Err(format!("unknown weighting '{other}'")),
        };
    }
    if let Some(v) = &o.gazetteer {
        cfg.gazetteer = Some(v.clone());
    }
    if let Some(v) = &o.lexicon {
        cfg.lexicon = Some(v.clone());
    }
    if let Some(v) = &o.series {
        cfg.series = Some(v.clone());
    }
    if let Some(spec) = &o.pairs {
        cfg.pairs = parse_pairs(spec)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<(), CmdError> {
    match &cli.command {
        Command::Filter => commands::cmd_filter(cfg),
        Command::Bucket => commands::cmd_bucket(cfg),
        Command::Overlay { days } => commands::cmd_overlay(cfg, days.clone()),
        Command::Decay => commands::cmd_decay(cfg),
        Command::Geo { cell_size } => commands::cmd_geo(cfg, *cell_size),
        Command::Correlate => commands::cmd_correlate(cfg),
        Command::Lexicon => commands::cmd_lexicon(cfg),
        Command::Report => commands::cmd_report(cfg).map(|_| ()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(EXIT_INPUT as u8);
        }
    };
    match run(&cli, &cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code as u8)
        }
    }
}
