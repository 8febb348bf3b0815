use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use afterglow::decay::{analyze_decay, DecayReport};
use afterglow::error::Error as CoreError;
use afterglow::geo::{country_share, grid_density, Gazetteer};
use afterglow::ingest::{
    filter_records, load_keyword_file, parse_records, write_jsonlines, KeywordSet, ParseMode,
    PostRecord,
};
use afterglow::stats::{
    correlation_table, lexicon_percentages, load_series_csv, write_correlation_csv, Lexicon,
};
use afterglow::timeseries::{bucketize, day_count, daywise_overlay, TimeSeries};

use crate::config::RunConfig;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug)]
pub struct CmdError {
    pub code: i32,
    pub message: String,
}

pub type CmdResult<T> = Result<T, CmdError>;

fn input_err(message: impl Into<String>) -> CmdError {
    CmdError {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn core_err(e: CoreError) -> CmdError {
    let code = match e {
        CoreError::EmptyRecords
        | CoreError::EmptySeries
        | CoreError::InsufficientDecayData
        | CoreError::TooFewPoints(_)
        | CoreError::ZeroEventActivity
        | CoreError::ZeroVariance(_)
        | CoreError::NoGeoRecords
        | CoreError::ZeroTokens => EXIT_INFEASIBLE,
        _ => EXIT_INPUT,
    };
    CmdError {
        code,
        message: e.to_string(),
    }
}

fn open(path: &Path) -> CmdResult<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| input_err(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> CmdResult<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| input_err(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| input_err(format!("cannot create {}: {e}", path.display())))
}

fn load_records(cfg: &RunConfig) -> CmdResult<(Vec<PostRecord>, usize)> {
    if cfg.input.is_empty() {
        return Err(input_err("no input files configured"));
    }
    let mut records = Vec::new();
    let mut skipped = 0;
    for path in &cfg.input {
        let reader = open(path)?;
        let (mut recs, skip) =
            parse_records(reader, cfg.format, ParseMode::Lenient).map_err(core_err)?;
        records.append(&mut recs);
        skipped += skip;
    }
    Ok((records, skipped))
}

fn load_keywords(cfg: &RunConfig) -> CmdResult<KeywordSet> {
    let path = cfg
        .keywords
        .as_ref()
        .ok_or_else(|| input_err("no keyword file configured"))?;
    load_keyword_file(open(path)?).map_err(core_err)
}

/// Records used by the analysis stages: keyword-filtered when a keyword file
/// is configured, the full parse otherwise.
fn load_working_records(cfg: &RunConfig) -> CmdResult<Vec<PostRecord>> {
    let (records, _) = load_records(cfg)?;
    match &cfg.keywords {
        Some(_) => {
            let set = load_keywords(cfg)?;
            Ok(filter_records(&records, &set).0)
        }
        None => Ok(records),
    }
}

fn series_of(cfg: &RunConfig, records: &[PostRecord]) -> CmdResult<TimeSeries> {
    bucketize(records, cfg.bucket_width, cfg.tz_offset).map_err(core_err)
}

fn write_match_stats(path: &Path, stats: &BTreeMap<String, u64>) -> CmdResult<()> {
    let mut out = create(path)?;
    writeln!(out, "keyword,records").map_err(|e| input_err(e.to_string()))?;
    for (keyword, count) in stats {
        writeln!(out, "{keyword},{count}").map_err(|e| input_err(e.to_string()))?;
    }
    Ok(())
}

pub fn cmd_filter(cfg: &RunConfig) -> CmdResult<()> {
    let (records, skipped) = load_records(cfg)?;
    let set = load_keywords(cfg)?;
    let (matched, stats) = filter_records(&records, &set);

    let out_path = cfg.out.join("filtered.jsonl");
    let mut out = create(&out_path)?;
    write_jsonlines(&mut out, &matched).map_err(core_err)?;
    write_match_stats(&cfg.out.join("match_stats.csv"), &stats)?;

    println!(
        "parsed {} records ({} skipped), matched {}",
        records.len() + skipped,
        skipped,
        matched.len()
    );
    for (keyword, count) in &stats {
        println!("  {keyword}: {count}");
    }
    println!("wrote {}", out_path.display());
    Ok(())
}

pub fn cmd_bucket(cfg: &RunConfig) -> CmdResult<()> {
    let records = load_working_records(cfg)?;
    let ts = series_of(cfg, &records)?;
    let out_path = cfg.out.join("hourly.csv");
    ts.write_csv(create(&out_path)?).map_err(core_err)?;
    println!(
        "{} records over {} buckets of {}s, wrote {}",
        ts.total(),
        ts.len(),
        ts.bucket_width,
        out_path.display()
    );
    Ok(())
}

pub fn cmd_overlay(cfg: &RunConfig, days: Option<Vec<usize>>) -> CmdResult<()> {
    let records = load_working_records(cfg)?;
    let ts = series_of(cfg, &records)?;
    let days = days.unwrap_or_else(|| (0..day_count(&ts)).collect());
    let overlay = daywise_overlay(&ts, &days).map_err(core_err)?;
    let out_path = cfg.out.join("overlay.csv");
    overlay.write_csv(create(&out_path)?).map_err(core_err)?;
    println!("overlay of {} days, wrote {}", days.len(), out_path.display());
    Ok(())
}

fn print_decay_summary(report: &DecayReport) {
    println!("net_decay_factor: {:.4}", report.net_factor);
    println!(
        "peak: bucket {} (count {}), window ends at t={}",
        report.peak_idx, report.peak_value, report.window_end_idx
    );
    println!("spikes removed: {:?}", report.spike_indices);
    println!("regions:");
    println!("  start   end     alpha      beta      r2  contribution  weight");
    for r in &report.regions {
        println!(
            "  {:5} {:5} {:9.3} {:9.3} {:7.4} {:13.4} {:7.1}{}",
            r.start_idx,
            r.end_idx,
            r.alpha,
            r.beta,
            r.r2,
            r.contribution,
            r.weight,
            if r.flagged { "  (flagged)" } else { "" }
        );
    }
}

pub fn cmd_decay(cfg: &RunConfig) -> CmdResult<()> {
    let records = load_working_records(cfg)?;
    let ts = series_of(cfg, &records)?;
    let report = analyze_decay(&ts, &cfg.decay_config()).map_err(core_err)?;
    let out_path = cfg.out.join("decay.json");
    let json = serde_json::to_string_pretty(&report).map_err(|e| input_err(e.to_string()))?;
    let mut out = create(&out_path)?;
    out.write_all(json.as_bytes())
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| input_err(e.to_string()))?;
    print_decay_summary(&report);
    println!("wrote {}", out_path.display());
    Ok(())
}

fn write_country_csv(
    path: &Path,
    shares: &BTreeMap<String, afterglow::geo::CountryShare>,
    unassigned: u64,
) -> CmdResult<()> {
    let mut out = create(path)?;
    writeln!(out, "country,count,percent").map_err(|e| input_err(e.to_string()))?;
    for (name, share) in shares {
        writeln!(out, "{name},{},{:.4}", share.count, share.percent)
            .map_err(|e| input_err(e.to_string()))?;
    }
    writeln!(out, "unassigned,{unassigned},").map_err(|e| input_err(e.to_string()))?;
    Ok(())
}

pub fn cmd_geo(cfg: &RunConfig, cell_size: f64) -> CmdResult<()> {
    let records = load_working_records(cfg)?;
    let gazetteer_path = cfg
        .gazetteer
        .as_ref()
        .ok_or_else(|| input_err("no gazetteer configured"))?;
    let gazetteer = Gazetteer::load(open(gazetteer_path)?).map_err(core_err)?;
    let (shares, unassigned) = country_share(&records, &gazetteer).map_err(core_err)?;
    write_country_csv(&cfg.out.join("geo_countries.csv"), &shares, unassigned)?;
    let grid = grid_density(&records, cell_size).map_err(core_err)?;
    grid.write_csv(create(&cfg.out.join("geo_grid.csv"))?)
        .map_err(core_err)?;
    for (name, share) in &shares {
        println!("{name}: {} ({:.2}%)", share.count, share.percent);
    }
    println!("unassigned: {unassigned}");
    Ok(())
}

pub fn cmd_correlate(cfg: &RunConfig) -> CmdResult<()> {
    let series_path = cfg
        .series
        .as_ref()
        .ok_or_else(|| input_err("no series file configured"))?;
    let series = load_series_csv(open(series_path)?).map_err(core_err)?;
    if cfg.pairs.is_empty() {
        return Err(input_err("no series pairs configured"));
    }
    let rows = correlation_table(&series, &cfg.pairs).map_err(core_err)?;
    let out_path = cfg.out.join("correlations.csv");
    write_correlation_csv(create(&out_path)?, &rows).map_err(core_err)?;
    for row in &rows {
        println!("{} vs {}: {:.2}", row.series_a, row.series_b, row.r);
    }
    Ok(())
}

fn write_lexicon_csv(path: &Path, percents: &BTreeMap<String, f64>) -> CmdResult<()> {
    let mut out = create(path)?;
    writeln!(out, "category,percent").map_err(|e| input_err(e.to_string()))?;
    for (category, pct) in percents {
        writeln!(out, "{category},{pct:.4}").map_err(|e| input_err(e.to_string()))?;
    }
    Ok(())
}

pub fn cmd_lexicon(cfg: &RunConfig) -> CmdResult<()> {
    let records = load_working_records(cfg)?;
    let lexicon_path = cfg
        .lexicon
        .as_ref()
        .ok_or_else(|| input_err("no lexicon configured"))?;
    let lexicon = Lexicon::load(open(lexicon_path)?).map_err(core_err)?;
    let texts: Vec<&str> = records.iter().map(|r| r.text.as_str()).collect();
    let percents = lexicon_percentages(&texts, &lexicon).map_err(core_err)?;
    write_lexicon_csv(&cfg.out.join("lexicon.csv"), &percents)?;
    for (category, pct) in &percents {
        println!("{category}: {pct:.2}%");
    }
    Ok(())
}

/// Run every stage present in the config and emit the full bundle. Outputs
/// are byte-stable for identical inputs and config.
pub fn cmd_report(cfg: &RunConfig) -> CmdResult<Vec<PathBuf>> {
    let records = load_working_records(cfg)?;
    let mut written = Vec::new();

    let ts = series_of(cfg, &records)?;
    let hourly = cfg.out.join("hourly.csv");
    ts.write_csv(create(&hourly)?).map_err(core_err)?;
    written.push(hourly);

    let days: Vec<usize> = (0..day_count(&ts)).collect();
    let overlay = daywise_overlay(&ts, &days).map_err(core_err)?;
    let overlay_path = cfg.out.join("overlay.csv");
    overlay.write_csv(create(&overlay_path)?).map_err(core_err)?;
    written.push(overlay_path);

    let report = analyze_decay(&ts, &cfg.decay_config()).map_err(core_err)?;
    let decay_path = cfg.out.join("decay.json");
    let json = serde_json::to_string_pretty(&report).map_err(|e| input_err(e.to_string()))?;
    let mut out = create(&decay_path)?;
    out.write_all(json.as_bytes())
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| input_err(e.to_string()))?;
    written.push(decay_path);

    if let Some(gazetteer_path) = &cfg.gazetteer {
        let gazetteer = Gazetteer::load(open(gazetteer_path)?).map_err(core_err)?;
        let (shares, unassigned) = country_share(&records, &gazetteer).map_err(core_err)?;
        let geo_path = cfg.out.join("geo_countries.csv");
        write_country_csv(&geo_path, &shares, unassigned)?;
        written.push(geo_path);
    }

    if let Some(series_path) = &cfg.series {
        let series = load_series_csv(open(series_path)?).map_err(core_err)?;
        let rows = correlation_table(&series, &cfg.pairs).map_err(core_err)?;
        let corr_path = cfg.out.join("correlations.csv");
        write_correlation_csv(create(&corr_path)?, &rows).map_err(core_err)?;
        written.push(corr_path);
    }

    if let Some(lexicon_path) = &cfg.lexicon {
        let lexicon = Lexicon::load(open(lexicon_path)?).map_err(core_err)?;
        let texts: Vec<&str> = records.iter().map(|r| r.text.as_str()).collect();
        let percents = lexicon_percentages(&texts, &lexicon).map_err(core_err)?;
        let lex_path = cfg.out.join("lexicon.csv");
        write_lexicon_csv(&lex_path, &percents)?;
        written.push(lex_path);
    }

    println!("net_decay_factor: {:.4}", report.net_factor);
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(written)
}
