//! Implementations behind the `deltaspec` command-line tool. The binary
//! itself only parses arguments and dispatches here.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::demo::{run_ab_experiment_with, synthetic_scenario, AbReport};
use crate::error::{Error, Result};
use crate::gradcheck::run_gradient_checks;
use crate::loss::HybridConfig;
use crate::manifest::{
    read_mix_manifest, read_score_manifest, MixManifestRow, ScoreManifestRow, SnrSpec,
};
use crate::metrics::{
    edit_distance_rate, sdr_metric, si_sdr_metric, suppression_mae, TranscriptPair,
};
use crate::mixsim::{derive_seed, make_mixture, MixSpec};
use crate::stft::StftConfig;
use crate::wav::{load_wav, save_wav, WavEncoding};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Build one `StftConfig` list from the three comma-separated flag lists, or
/// fall back to the standard resolution bank.
pub fn resolutions_from_flags(
    fft_sizes: Option<Vec<usize>>,
    hops: Option<Vec<usize>>,
    wins: Option<Vec<usize>>,
) -> Result<Vec<StftConfig>> {
    match (fft_sizes, hops, wins) {
        (None, None, None) => Ok(StftConfig::resolution_bank()),
        (Some(f), Some(h), Some(w)) => {
            if f.len() != h.len() || f.len() != w.len() || f.is_empty() {
                return Err(Error::InvalidConfig(
                    "--fft-sizes, --hops, and --wins need the same nonzero length".into(),
                ));
            }
            f.iter()
                .zip(h.iter())
                .zip(w.iter())
                .map(|((&fft, &hop), &win)| StftConfig::new(fft, hop, win))
                .collect()
        }
        _ => Err(Error::InvalidConfig(
            "give all of --fft-sizes, --hops, and --wins, or none".into(),
        )),
    }
}

// ---------------------------------------------------------------- mix

pub struct MixOptions {
    pub manifest: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
}

struct ResolvedMix {
    interference_snr_db: Vec<f64>,
    noise_snr_db: Option<f64>,
}

/// Build every mixture in the manifest. Rows that fail are reported and
/// skipped; the provenance CSV records the outcome of every row. Returns a
/// nonzero exit code when any row failed.
pub fn cmd_mix(opts: &MixOptions) -> Result<i32> {
    let rows = read_mix_manifest(&opts.manifest)?;
    fs::create_dir_all(&opts.out_dir)?;
    let mut prov = csv::Writer::from_path(opts.out_dir.join("provenance.csv"))?;
    prov.write_record([
        "output",
        "target",
        "interference",
        "noise",
        "interference_snr_db",
        "noise_snr_db",
        "seed",
        "status",
    ])?;

    let mut failures = 0usize;
    for (idx, row) in rows.iter().enumerate() {
        let seed = row
            .seed
            .unwrap_or_else(|| derive_seed(opts.seed, idx as u64));
        let joined_interference = row
            .interferences
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(";");
        let noise_text = row
            .noise
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        match run_mix_row(row, seed, &opts.out_dir) {
            Ok(resolved) => {
                prov.write_record([
                    row.output.clone(),
                    row.target.display().to_string(),
                    joined_interference,
                    noise_text,
                    join_floats(&resolved.interference_snr_db),
                    resolved
                        .noise_snr_db
                        .map(|v| format!("{v:.6}"))
                        .unwrap_or_default(),
                    seed.to_string(),
                    "ok".to_string(),
                ])?;
            }
            Err(e) => {
                failures += 1;
                eprintln!("mix: manifest line {}: {e}", row.line);
                prov.write_record([
                    row.output.clone(),
                    row.target.display().to_string(),
                    joined_interference,
                    noise_text,
                    String::new(),
                    String::new(),
                    seed.to_string(),
                    format!("error: {e}"),
                ])?;
            }
        }
    }
    prov.flush()?;
    Ok(i32::from(failures > 0))
}

fn run_mix_row(row: &MixManifestRow, seed: u64, out_dir: &Path) -> Result<ResolvedMix> {
    let target = load_wav(&row.target)?;
    let interferences = row
        .interferences
        .iter()
        .map(|p| load_wav(p))
        .collect::<Result<Vec<_>>>()?;
    let noise = row.noise.as_ref().map(|p| load_wav(p)).transpose()?;

    // draws happen in manifest order so a fixed seed resolves identically
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let interference_snr_db: Vec<f64> = row
        .interference_snr
        .iter()
        .map(|s| resolve_snr(s, &mut rng))
        .collect();
    let noise_snr_db = row.noise_snr.as_ref().map(|s| resolve_snr(s, &mut rng));

    let spec = MixSpec {
        target,
        interferences,
        noise,
        interference_snr_db: interference_snr_db.clone(),
        noise_snr_db,
        seed,
    };
    let result = make_mixture(&spec)?;
    save_wav(
        &result.mixture,
        &out_dir.join(&row.output),
        WavEncoding::Float32,
    )?;
    Ok(ResolvedMix {
        interference_snr_db,
        noise_snr_db,
    })
}

fn resolve_snr(spec: &SnrSpec, rng: &mut ChaCha8Rng) -> f64 {
    match *spec {
        SnrSpec::Fixed(v) => v,
        SnrSpec::Range(lo, hi) => rng.random_range(lo..=hi),
    }
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.6}"))
        .collect::<Vec<_>>()
        .join(";")
}

// ---------------------------------------------------------------- score

pub struct ScoreOptions {
    pub manifest: PathBuf,
    pub out: PathBuf,
    pub format: OutputFormat,
    pub config: StftConfig,
}

#[derive(Debug, Clone, Serialize)]
struct ScoredRow {
    reference: String,
    estimate: String,
    si_sdr_db: f64,
    sdr_db: f64,
    mae_over: f64,
    mae_under: f64,
    wer: Option<f64>,
    cer: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct ScoreSummary {
    rows: usize,
    si_sdr_db: Option<f64>,
    sdr_db: Option<f64>,
    mae_over: Option<f64>,
    mae_under: Option<f64>,
    wer: Option<f64>,
    cer: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct ScoreReport {
    rows: Vec<ScoredRow>,
    summary: ScoreSummary,
}

/// Score every reference/estimate pair in the manifest. Failing rows are
/// reported on stderr and skipped; the report always ends with a mean row.
pub fn cmd_score(opts: &ScoreOptions) -> Result<i32> {
    let rows = read_score_manifest(&opts.manifest)?;
    let mut scored = Vec::new();
    let mut failures = 0usize;
    for row in &rows {
        match score_row(row, &opts.config) {
            Ok(s) => scored.push(s),
            Err(e) => {
                failures += 1;
                eprintln!("score: manifest line {}: {e}", row.line);
            }
        }
    }

    let summary = summarize(&scored);
    match opts.format {
        OutputFormat::Csv => write_score_csv(&opts.out, &scored, &summary)?,
        OutputFormat::Json => {
            let report = ScoreReport {
                rows: scored,
                summary,
            };
            fs::write(&opts.out, serde_json::to_string_pretty(&report)?)?;
        }
    }
    Ok(i32::from(failures > 0))
}

fn score_row(row: &ScoreManifestRow, config: &StftConfig) -> Result<ScoredRow> {
    let reference = load_wav(&row.reference)?;
    let estimate = load_wav(&row.estimate)?;
    let suppression = suppression_mae(&estimate, &reference, config)?;
    let (wer, cer) = match &row.transcripts {
        Some((r, h)) => (
            Some(edit_distance_rate(&TranscriptPair::words(r, h))?.rate),
            Some(edit_distance_rate(&TranscriptPair::characters(r, h))?.rate),
        ),
        None => (None, None),
    };
    Ok(ScoredRow {
        reference: row.reference.display().to_string(),
        estimate: row.estimate.display().to_string(),
        si_sdr_db: si_sdr_metric(&estimate, &reference)?,
        sdr_db: sdr_metric(&estimate, &reference)?,
        mae_over: suppression.mae_over,
        mae_under: suppression.mae_under,
        wer,
        cer,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn summarize(rows: &[ScoredRow]) -> ScoreSummary {
    ScoreSummary {
        rows: rows.len(),
        si_sdr_db: mean(rows.iter().map(|r| r.si_sdr_db)),
        sdr_db: mean(rows.iter().map(|r| r.sdr_db)),
        mae_over: mean(rows.iter().map(|r| r.mae_over)),
        mae_under: mean(rows.iter().map(|r| r.mae_under)),
        wer: mean(rows.iter().filter_map(|r| r.wer)),
        cer: mean(rows.iter().filter_map(|r| r.cer)),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn write_score_csv(path: &Path, rows: &[ScoredRow], summary: &ScoreSummary) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "reference",
        "estimate",
        "si_sdr_db",
        "sdr_db",
        "mae_over",
        "mae_under",
        "wer",
        "cer",
    ])?;
    for r in rows {
        w.write_record([
            r.reference.clone(),
            r.estimate.clone(),
            format!("{:.6}", r.si_sdr_db),
            format!("{:.6}", r.sdr_db),
            format!("{:.6}", r.mae_over),
            format!("{:.6}", r.mae_under),
            fmt_opt(r.wer),
            fmt_opt(r.cer),
        ])?;
    }
    w.write_record([
        "mean".to_string(),
        String::new(),
        fmt_opt(summary.si_sdr_db),
        fmt_opt(summary.sdr_db),
        fmt_opt(summary.mae_over),
        fmt_opt(summary.mae_under),
        fmt_opt(summary.wer),
        fmt_opt(summary.cer),
    ])?;
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------- grad-check

pub struct GradCheckOptions {
    pub seed: u64,
    pub length: usize,
    pub resolutions: Vec<StftConfig>,
    pub tolerance: f64,
}

/// Run the finite-difference battery and print one line per check.
pub fn cmd_grad_check(opts: &GradCheckOptions) -> Result<i32> {
    let report = run_gradient_checks(opts.seed, opts.length, &opts.resolutions, opts.tolerance)?;
    let mut out = std::io::stdout().lock();
    for check in &report.checks {
        let verdict = if check.max_rel_err <= report.tolerance {
            "PASS"
        } else {
            "FAIL"
        };
        writeln!(
            out,
            "{}: max_rel_err {:.3e} {}",
            check.name, check.max_rel_err, verdict
        )?;
    }
    let ok = report.all_pass();
    writeln!(
        out,
        "gradient checks {} at tolerance {:.1e}",
        if ok { "passed" } else { "FAILED" },
        report.tolerance
    )?;
    Ok(i32::from(!ok))
}

// ---------------------------------------------------------------- demo

pub enum DemoScenario {
    Builtin,
    UserPair {
        target: PathBuf,
        interference: PathBuf,
        snr_db: f64,
    },
}

pub struct DemoOptions {
    pub scenario: DemoScenario,
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub gamma: f64,
    pub out: PathBuf,
    pub curves: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct DemoReport<'a> {
    scenario: &'a str,
    steps: usize,
    learning_rate: f64,
    seed: u64,
    gamma: f64,
    #[serde(flatten)]
    report: &'a AbReport,
}

/// Run the two-arm mask-optimization comparison and write the JSON report.
pub fn cmd_demo(opts: &DemoOptions) -> Result<i32> {
    let (scenario_name, scenario) = match &opts.scenario {
        DemoScenario::Builtin => ("builtin-synthetic", synthetic_scenario()),
        DemoScenario::UserPair {
            target,
            interference,
            snr_db,
        } => {
            let t = load_wav(target)?;
            let i = load_wav(interference)?;
            if t.len() != i.len() {
                return Err(Error::LengthMismatch {
                    left: t.len(),
                    right: i.len(),
                });
            }
            (
                "user-pair",
                MixSpec {
                    target: t,
                    interferences: vec![i],
                    noise: None,
                    interference_snr_db: vec![*snr_db],
                    noise_snr_db: None,
                    seed: opts.seed,
                },
            )
        }
    };

    let hybrid_cfg = HybridConfig {
        gamma: opts.gamma,
        ..HybridConfig::default()
    };
    let report = run_ab_experiment_with(
        &scenario,
        opts.steps,
        opts.learning_rate,
        opts.seed,
        &hybrid_cfg,
    )?;

    let wrapped = DemoReport {
        scenario: scenario_name,
        steps: opts.steps,
        learning_rate: opts.learning_rate,
        seed: opts.seed,
        gamma: opts.gamma,
        report: &report,
    };
    fs::write(&opts.out, serde_json::to_string_pretty(&wrapped)?)?;

    if let Some(curve_path) = &opts.curves {
        let mut w = csv::Writer::from_path(curve_path)?;
        w.write_record(["step", "si_sdr_only", "hybrid"])?;
        for (i, (a, b)) in report.arms[0]
            .loss_curve
            .iter()
            .zip(&report.arms[1].loss_curve)
            .enumerate()
        {
            w.write_record([i.to_string(), format!("{a:.8}"), format!("{b:.8}")])?;
        }
        w.flush()?;
    }

    let mut out = std::io::stdout().lock();
    writeln!(out, "mixture SI-SDR: {:.3} dB", report.mixture_si_sdr_db)?;
    for arm in &report.arms {
        writeln!(
            out,
            "{}: SI-SDR {:.3} dB, MAE over {:.6}, MAE under {:.6}",
            arm.loss_name, arm.final_si_sdr_db, arm.mae_over, arm.mae_under
        )?;
    }
    Ok(0)
}
