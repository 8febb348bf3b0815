//! End-to-end acceptance checks, one test per criterion. Each prints a
//! PASS line on success (visible with `cargo test -- --nocapture`).

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use afterglow::decay::{analyze_decay, DecayConfig};
use afterglow::geo::{assign, country_share, Gazetteer};
use afterglow::ingest::{compile_keyword_set, filter_records, GeoPoint, Platform, PostRecord};
use afterglow::stats::{pearson, NamedSeries};
use afterglow::timeseries::{bucketize, TimeSeries, HOUR};

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .unwrap()
}

fn series(counts: Vec<u64>) -> TimeSeries {
    TimeSeries {
        origin: 0,
        bucket_width: HOUR,
        tz_offset: 0,
        counts,
    }
}

/// Peak bucket followed by chi(t) = scale * (100 - 20 ln t), t = 1..=72.
fn log_law_series(scale: f64) -> TimeSeries {
    // peak high enough that a later 5x spike cannot out-rank it
    let mut counts = vec![(600.0 * scale) as u64];
    counts.extend((1..=72).map(|t| (scale * (100.0 - 20.0 * (t as f64).ln())).round() as u64));
    series(counts)
}

/// Independent OLS of chi on ln t, straight from the definition.
fn oracle_log_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0.ln()).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0.ln().powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| p.0.ln() * p.1).sum();
    let alpha = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let beta = (sy - alpha * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (alpha * p.0.ln() + beta)).powi(2))
        .sum();
    (alpha, beta, 1.0 - ss_res / ss_tot)
}

/// Direct evaluation of the product-moment definition.
fn oracle_pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let dx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum::<f64>().sqrt();
    let dy: f64 = y.iter().map(|b| (b - my).powi(2)).sum::<f64>().sqrt();
    num / (dx * dy)
}

#[test]
fn criterion_1_exact_log_law_recovery() {
    let start = Instant::now();
    let ts = log_law_series(1e6);
    let report = analyze_decay(&ts, &DecayConfig::default()).unwrap();
    assert_eq!(report.regions.len(), 1, "expected a single region");
    assert!(report.regions[0].r2 >= 0.999, "r2 = {}", report.regions[0].r2);
    assert!(
        (report.net_factor - 0.2).abs() <= 1e-6,
        "net factor {} not within 1e-6 of 0.2",
        report.net_factor
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("PASS: criterion 1 exact log-law recovery (net {:.7}, {elapsed:?})", report.net_factor);
}

#[test]
fn criterion_2_segmentation_of_concatenated_laws() {
    let scale = 1e4;
    let mut rng = StdRng::seed_from_u64(42);
    let mut chis: Vec<f64> = (1..=24).map(|t| 100.0 - 20.0 * (t as f64).ln()).collect();
    chis.extend((1..=24).map(|t| 90.0 - 5.0 * (t as f64).ln()));
    let mut counts = vec![(120.0 * scale) as u64];
    counts.extend(chis.iter().map(|chi| {
        let noise = 1.0 + 0.01 * rng.gen_range(-1.0f64..1.0);
        (scale * chi * noise).round() as u64
    }));
    let ts = series(counts.clone());
    let cfg = DecayConfig::default();
    let report = analyze_decay(&ts, &cfg).unwrap();
    assert!(report.regions.len() >= 2, "got {} regions", report.regions.len());

    // independent re-fit of every emitted region in its local time
    for r in &report.regions {
        let local: Vec<(f64, f64)> = (r.start_idx..=r.end_idx)
            .filter(|t| !report.spike_indices.contains(t))
            .map(|t| ((t - r.start_idx + 1) as f64, counts[t as usize] as f64))
            .collect();
        let (_, _, r2) = oracle_log_fit(&local);
        assert!(r2 > 0.8, "region [{}, {}] re-fits to r2 {}", r.start_idx, r.end_idx, r2);
    }

    let analytic = (24.0 * (20.0 / 100.0) + 24.0 * (5.0 / 90.0)) / 48.0;
    let rel = (report.net_factor - analytic).abs() / analytic;
    assert!(rel < 0.05, "net {} vs analytic {analytic} ({:.1}% off)", report.net_factor, rel * 100.0);
    println!(
        "PASS: criterion 2 segmentation ({} regions, net {:.4} vs analytic {:.4})",
        report.regions.len(),
        report.net_factor,
        analytic
    );
}

#[test]
fn criterion_3_spike_robustness() {
    let cfg = DecayConfig::default();
    let base = log_law_series(1e6);
    let base_net = analyze_decay(&base, &cfg).unwrap().net_factor;

    let mut spiked = base.clone();
    spiked.counts[10] *= 5; // bucket 10 is t = 10 post-peak
    let report = analyze_decay(&spiked, &cfg).unwrap();
    assert!(
        report.spike_indices.contains(&10),
        "spike at t=10 not detected: {:?}",
        report.spike_indices
    );
    let delta = (report.net_factor - base_net).abs();
    assert!(delta < 0.01, "net factor moved by {delta}");
    println!("PASS: criterion 3 spike robustness (delta {delta:.6}, spikes {:?})", report.spike_indices);
}

#[test]
fn criterion_4_threshold_semantics() {
    let cfg = DecayConfig::default();
    // peak 1000; chi stays >= 20 through t = 40, drops below 10 for exactly
    // sustain_k buckets at t = 41..43, then rebounds
    let mut counts = vec![1000u64];
    counts.extend((1..=40).map(|t| 600 - 14 * t as u64));
    counts.extend([5u64, 5, 5]);
    counts.extend([300u64, 250, 200]);
    let report = analyze_decay(&series(counts), &cfg).unwrap();
    assert_eq!(report.window_end_idx, 40, "window should end at t=40");

    // a one-bucket dip below threshold must not end the window
    let mut counts = vec![1000u64];
    counts.extend((1..=40).map(|t| if t == 20 { 5 } else { 600 - 14 * t as u64 }));
    counts.extend([5u64, 5, 5]);
    let report = analyze_decay(&series(counts), &cfg).unwrap();
    assert_eq!(report.window_end_idx, 40, "dip at t=20 ended the window early");
    println!("PASS: criterion 4 threshold semantics (window ends at t=40 in both fixtures)");
}

#[test]
fn criterion_5_scale_invariance() {
    let cfg = DecayConfig::default();
    // even counts keep the 0.5x scaling integral
    let mut counts = vec![2 * 550_000u64];
    counts.extend((1..=72).map(|t| {
        let chi = 10_000.0 * (100.0 - 20.0 * (t as f64).ln());
        2 * (chi.round() as u64 / 2 + 1)
    }));
    let base = series(counts);
    let base_report = analyze_decay(&base, &cfg).unwrap();
    for scale in [0.5f64, 3.0, 10.0] {
        let scaled = series(
            base.counts
                .iter()
                .map(|&c| (c as f64 * scale).round() as u64)
                .collect(),
        );
        let report = analyze_decay(&scaled, &cfg).unwrap();
        assert!(
            (report.net_factor - base_report.net_factor).abs() < 1e-9,
            "net factor changed at {scale}x"
        );
        let base_bounds: Vec<_> = base_report.regions.iter().map(|r| (r.start_idx, r.end_idx)).collect();
        let bounds: Vec<_> = report.regions.iter().map(|r| (r.start_idx, r.end_idx)).collect();
        assert_eq!(base_bounds, bounds, "region boundaries changed at {scale}x");
    }
    println!("PASS: criterion 5 scale invariance (0.5x, 3x, 10x)");
}

#[test]
fn criterion_6_pearson_oracle() {
    let mut rng = StdRng::seed_from_u64(7);
    for case in 0..100 {
        let x: Vec<f64> = (0..10).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let y: Vec<f64> = (0..10).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let engine = pearson(
            &NamedSeries::new("x", x.clone()),
            &NamedSeries::new("y", y.clone()),
        )
        .unwrap();
        let oracle = oracle_pearson(&x, &y);
        assert!(
            (engine - oracle).abs() < 1e-12,
            "case {case}: engine {engine} vs oracle {oracle}"
        );
    }
    let x = NamedSeries::new("x", vec![1.0, 4.0, 2.0, 9.0]);
    let neg = NamedSeries::new("neg", x.values.iter().map(|v| -v).collect());
    assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-12);
    assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
    println!("PASS: criterion 6 pearson oracle (100 random pairs within 1e-12)");
}

#[test]
fn criterion_7_filter_correctness() {
    let rec = |id: usize, text: &str| PostRecord {
        id: id.to_string(),
        platform: Platform::Twitter,
        timestamp: 1_366_000_000 + id as i64,
        text: text.to_string(),
        user_id: "u".into(),
        geo: None,
    };
    // planted corpus: every even id carries a keyword
    let mut records = Vec::new();
    let mut planted = Vec::new();
    for i in 0..200 {
        if i % 2 == 0 {
            records.push(rec(i, "great over by CSK tonight #IPL"));
            planted.push(i.to_string());
        } else {
            records.push(rec(i, "nothing to see here"));
        }
    }
    let set = compile_keyword_set(&["CSK", "#IPL"]);
    let (matched, _) = filter_records(&records, &set);
    let matched_ids: Vec<_> = matched.iter().map(|r| r.id.clone()).collect();
    assert_eq!(matched_ids, planted, "planted recall is not 100%");

    // the §-style disambiguation: phrase-only excludes, token includes
    let ambiguous = vec![rec(1000, "I moved to MI, USA")];
    let phrase_only = compile_keyword_set(&["mumbai indians"]);
    assert!(filter_records(&ambiguous, &phrase_only).0.is_empty());
    let token_mi = compile_keyword_set(&["mi"]);
    assert_eq!(filter_records(&ambiguous, &token_mi).0.len(), 1);
    println!("PASS: criterion 7 filter correctness (100% recall, MI disambiguation)");
}

#[test]
fn criterion_8_geo_shares() {
    let root = workspace_root();
    let file = std::fs::File::open(root.join("fixtures/gazetteer_india.csv")).unwrap();
    let gazetteer = Gazetteer::load(std::io::BufReader::new(file)).unwrap();

    let delhi = assign(GeoPoint { lat: 28.613, lon: 77.209 }, &gazetteer);
    assert_eq!(delhi.country.as_deref(), Some("India"));
    assert_eq!(delhi.state.as_deref(), Some("Delhi"));
    assert_eq!(delhi.city.as_deref(), Some("Delhi"));

    let geo_rec = |id: usize, lat: f64, lon: f64| PostRecord {
        id: id.to_string(),
        platform: Platform::Twitter,
        timestamp: 1,
        text: String::new(),
        user_id: "u".into(),
        geo: Some(GeoPoint { lat, lon }),
    };
    let records = vec![
        geo_rec(1, 28.613, 77.209),
        geo_rec(2, 19.076, 72.877),
        geo_rec(3, 12.972, 77.594),
        geo_rec(4, 51.5, -0.12),
    ];
    let (shares, unassigned) = country_share(&records, &gazetteer).unwrap();
    assert_eq!(unassigned, 0);
    let total: f64 = shares.values().map(|s| s.percent).sum();
    assert!((total - 100.0).abs() < 1e-9, "percents sum to {total}");
    assert!((shares["India"].percent - 75.0).abs() < 1e-9);
    assert!((shares["United Kingdom"].percent - 25.0).abs() < 1e-9);
    println!("PASS: criterion 8 geo shares (sum 100, Delhi assignment, 75/25 split)");
}

#[test]
fn criterion_9_mass_conservation_at_scale() {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(99);
    let records: Vec<PostRecord> = (0..1_000_000)
        .map(|i| PostRecord {
            id: i.to_string(),
            platform: Platform::Twitter,
            timestamp: 1_366_000_000 + rng.gen_range(0..60 * 86_400),
            text: String::new(),
            user_id: "u".into(),
            geo: None,
        })
        .collect();
    for _ in 0..5 {
        let width = rng.gen_range(60..20_000);
        let ts = bucketize(&records, width, 0).unwrap();
        assert_eq!(ts.total(), 1_000_000, "mass lost at width {width}");
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!("PASS: criterion 9 mass conservation (1M records, 5 widths, {elapsed:?})");
}

#[test]
fn criterion_10_report_determinism() {
    let root = workspace_root();
    let bin = env!("CARGO_BIN_EXE_afterglow");
    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    for out in [out_a.path(), out_b.path()] {
        let status = Command::new(bin)
            .current_dir(&root)
            .args(["--config", "fixtures/demo_config.json", "report", "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    }
    let files = ["hourly.csv", "overlay.csv", "decay.json", "geo_countries.csv", "correlations.csv", "lexicon.csv"];
    for name in files {
        let a = std::fs::read(out_a.path().join(name)).unwrap();
        let b = std::fs::read(out_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
    println!("PASS: criterion 10 determinism ({} byte-identical files)", files.len());
}
