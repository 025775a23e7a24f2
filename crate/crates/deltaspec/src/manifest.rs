//! Manifest file formats consumed and produced by the command-line tools.
//!
//! Mixture manifest: CSV with header
//! `target,interference,noise,interference_snr_db,noise_snr_db,seed,output`.
//! Multiple interference paths (and their SNR entries) are separated by `;`
//! within the cell. SNR entries are either a fixed value (`3.5`) or a range
//! (`-10..10`) to be sampled with the row seed. `noise`, `noise_snr_db`, and
//! `seed` may be empty.
//!
//! Scoring manifest: tab-separated lines of
//! `reference-wav<TAB>estimate-wav[<TAB>reference-transcript<TAB>hypothesis-transcript]`
//! with no header.

use std::fs::File;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};

/// A fixed SNR in dB or a range to sample uniformly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrSpec {
    Fixed(f64),
    Range(f64, f64),
}

impl SnrSpec {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let text = text.trim();
        if let Some((lo, hi)) = text.split_once("..") {
            let lo: f64 = lo
                .trim()
                .parse()
                .map_err(|_| format!("bad SNR range start {lo:?}"))?;
            let hi: f64 = hi
                .trim()
                .parse()
                .map_err(|_| format!("bad SNR range end {hi:?}"))?;
            if lo > hi || lo.is_nan() || hi.is_nan() {
                return Err(format!("empty SNR range {text:?}"));
            }
            Ok(SnrSpec::Range(lo, hi))
        } else {
            let v: f64 = text
                .parse()
                .map_err(|_| format!("bad SNR value {text:?}"))?;
            Ok(SnrSpec::Fixed(v))
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawMixRow {
    target: String,
    #[serde(default)]
    interference: String,
    #[serde(default)]
    noise: String,
    #[serde(default)]
    interference_snr_db: String,
    #[serde(default)]
    noise_snr_db: String,
    #[serde(default)]
    seed: String,
    output: String,
}

/// One parsed row of the mixture manifest.
#[derive(Debug, Clone)]
pub struct MixManifestRow {
    pub line: usize,
    pub target: PathBuf,
    pub interferences: Vec<PathBuf>,
    pub noise: Option<PathBuf>,
    pub interference_snr: Vec<SnrSpec>,
    pub noise_snr: Option<SnrSpec>,
    pub seed: Option<u64>,
    pub output: String,
}

pub fn read_mix_manifest(path: &Path) -> Result<Vec<MixManifestRow>> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let mut rows = Vec::new();
    for (idx, record) in reader.deserialize::<RawMixRow>().enumerate() {
        let line = idx + 2; // header occupies line 1
        let raw = record.map_err(|e| Error::Manifest {
            line,
            detail: e.to_string(),
        })?;
        rows.push(parse_mix_row(raw, line)?);
    }
    Ok(rows)
}

fn parse_mix_row(raw: RawMixRow, line: usize) -> Result<MixManifestRow> {
    let fail = |detail: String| Error::Manifest { line, detail };

    let interferences: Vec<PathBuf> = split_list(&raw.interference)
        .into_iter()
        .map(PathBuf::from)
        .collect();
    let interference_snr: Vec<SnrSpec> = split_list(&raw.interference_snr_db)
        .into_iter()
        .map(|s| SnrSpec::parse(&s))
        .collect::<std::result::Result<_, _>>()
        .map_err(fail)?;
    if interferences.len() != interference_snr.len() {
        return Err(fail(format!(
            "{} interference paths but {} SNR entries",
            interferences.len(),
            interference_snr.len()
        )));
    }

    let noise = (!raw.noise.is_empty()).then(|| PathBuf::from(&raw.noise));
    let noise_snr = if raw.noise_snr_db.is_empty() {
        None
    } else {
        Some(SnrSpec::parse(&raw.noise_snr_db).map_err(fail)?)
    };
    if noise.is_some() != noise_snr.is_some() {
        return Err(fail("noise path and noise SNR must come together".into()));
    }

    let seed = if raw.seed.is_empty() {
        None
    } else {
        Some(
            raw.seed
                .parse::<u64>()
                .map_err(|_| fail(format!("bad seed {:?}", raw.seed)))?,
        )
    };
    if raw.output.is_empty() {
        return Err(fail("missing output filename".into()));
    }
    if raw.target.is_empty() {
        return Err(fail("missing target path".into()));
    }

    Ok(MixManifestRow {
        line,
        target: PathBuf::from(raw.target),
        interferences,
        noise,
        interference_snr,
        noise_snr,
        seed,
        output: raw.output,
    })
}

fn split_list(cell: &str) -> Vec<String> {
    cell.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

/// One parsed line of the scoring manifest.
#[derive(Debug, Clone)]
pub struct ScoreManifestRow {
    pub line: usize,
    pub reference: PathBuf,
    pub estimate: PathBuf,
    pub transcripts: Option<(String, String)>,
}

pub fn read_score_manifest(path: &Path) -> Result<Vec<ScoreManifestRow>> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| Error::Manifest {
            line,
            detail: e.to_string(),
        })?;
        let fields: Vec<&str> = record.iter().collect();
        match fields.len() {
            2 => rows.push(ScoreManifestRow {
                line,
                reference: PathBuf::from(fields[0]),
                estimate: PathBuf::from(fields[1]),
                transcripts: None,
            }),
            4 => rows.push(ScoreManifestRow {
                line,
                reference: PathBuf::from(fields[0]),
                estimate: PathBuf::from(fields[1]),
                transcripts: Some((fields[2].to_string(), fields[3].to_string())),
            }),
            n => {
                return Err(Error::Manifest {
                    line,
                    detail: format!("expected 2 or 4 tab-separated fields, found {n}"),
                })
            }
        }
    }
    Ok(rows)
}
