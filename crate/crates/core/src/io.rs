//! Reproducible persistence: trace CSV files, JSON reports and the digest
//! manifest.
//!
//! Tabular outputs are comma-separated with a header row; structured
//! reports are JSON. Every numeric column uses the shortest round-tripping
//! decimal form, so re-reading reproduces each value bit for bit. Every
//! command that writes output emits exactly one manifest, written last,
//! listing the SHA-256 digest of every file it produced.

use crate::config::ExperimentConfig;
use crate::model::{AtomTruth, DetectionParams, ImageSample, Provenance, TimeTrace};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {message}")]
    Malformed { path: String, message: String },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

impl IoError {
    fn file(path: &Path, source: std::io::Error) -> Self {
        Self::File {
            path: path.display().to_string(),
            source,
        }
    }
}

/// One CSV row of a trace file.
#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    run: u64,
    image: usize,
    start_time_s: f64,
    exposure_s: f64,
    photoelectrons: f64,
    /// Ground-truth atom count at exposure start; empty for ingested data.
    atoms_start: Option<u32>,
    atoms_end: Option<u32>,
    /// 1 when a loss pulse was applied in the hold after this image.
    pulsed_after: u8,
}

/// Writes one trace to `path`. `pulsed_after`, when given, must have one
/// flag per inter-image gap.
pub fn write_trace_csv(
    path: &Path,
    trace: &TimeTrace,
    run: u64,
    pulsed_after: Option<&[bool]>,
) -> Result<(), IoError> {
    let mut w = csv::Writer::from_path(path).map_err(|source| IoError::Csv {
        path: path.display().to_string(),
        source,
    })?;
    for (i, s) in trace.samples.iter().enumerate() {
        let pulsed = pulsed_after
            .and_then(|p| p.get(i).copied())
            .unwrap_or(false);
        w.serialize(TraceRow {
            run,
            image: s.index,
            start_time_s: s.start_time,
            exposure_s: s.exposure,
            photoelectrons: s.photoelectrons,
            atoms_start: s.truth.as_ref().map(|t| t.atoms_start),
            atoms_end: s.truth.as_ref().map(|t| t.atoms_end),
            pulsed_after: u8::from(pulsed),
        })
        .map_err(|source| IoError::Csv {
            path: path.display().to_string(),
            source,
        })?;
    }
    w.flush().map_err(|e| IoError::file(path, e))?;
    Ok(())
}

/// Reads a trace file back. Detection parameters come from the config that
/// accompanies the data; event times inside exposures are not part of the
/// tabular format, so ground truth carries the boundary counts only.
pub fn read_trace_csv(path: &Path, params: DetectionParams) -> Result<TimeTrace, IoError> {
    let mut reader = csv::Reader::from_path(path).map_err(|source| IoError::Csv {
        path: path.display().to_string(),
        source,
    })?;
    let mut samples = Vec::new();
    for row in reader.deserialize::<TraceRow>() {
        let row = row.map_err(|source| IoError::Csv {
            path: path.display().to_string(),
            source,
        })?;
        samples.push(ImageSample {
            index: row.image,
            start_time: row.start_time_s,
            exposure: row.exposure_s,
            photoelectrons: row.photoelectrons,
            truth: match (row.atoms_start, row.atoms_end) {
                (Some(a), Some(b)) => Some(AtomTruth {
                    atoms_start: a,
                    atoms_end: b,
                    loss_times: Vec::new(),
                    load_times: Vec::new(),
                }),
                _ => None,
            },
        });
    }
    let trace = TimeTrace {
        samples,
        params,
        provenance: Provenance::Ingested {
            file: path.display().to_string(),
        },
    };
    trace.check_ordering().map_err(|message| IoError::Malformed {
        path: path.display().to_string(),
        message,
    })?;
    Ok(trace)
}

/// Lists `trace_*.csv` files in a directory, sorted by name.
pub fn list_trace_files(dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| IoError::file(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("trace_") && n.ends_with(".csv"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    Ok(files)
}

/// SHA-256 digest of a file, hex encoded.
pub fn sha256_file(path: &Path) -> Result<String, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::file(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
}

/// Provenance record emitted alongside every command's outputs.
///
/// The manifest is written last and lists a digest for every other file in
/// the output directory. Re-running a command with identical config and
/// seed reproduces every byte, manifest included: the creation timestamp is
/// only recorded when `SOURCE_DATE_EPOCH` is set, never from the wall
/// clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Subcommand that produced this directory.
    pub command: String,
    pub seed: u64,
    /// Fully resolved configuration the command ran with.
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_unix_epoch: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub const MANIFEST_NAME: &str = "manifest.json";

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: ExperimentConfig) -> Self {
        Self {
            tool: "motcount".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config,
            created_unix_epoch: std::env::var("SOURCE_DATE_EPOCH")
                .ok()
                .and_then(|v| v.parse().ok()),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Digests every file in `dir` (except the manifest itself) as this
    /// manifest's outputs, then writes the manifest.
    pub fn digest_outputs_and_write(mut self, dir: &Path) -> Result<(), IoError> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| IoError::file(dir, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file() && p.file_name().map(|n| n != MANIFEST_NAME).unwrap_or(false)
            })
            .collect();
        paths.sort();
        for p in &paths {
            self.outputs.push(FileDigest {
                path: p
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                sha256: sha256_file(p)?,
            });
        }
        write_json(&dir.join(MANIFEST_NAME), &self)
    }

    pub fn read(dir: &Path) -> Result<Self, IoError> {
        let path = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| IoError::file(&path, e))?;
        serde_json::from_str(&text).map_err(|source| IoError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    /// Re-digests every listed output; returns the paths whose digests no
    /// longer match.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>, IoError> {
        let mut mismatched = Vec::new();
        for f in &self.outputs {
            let actual = sha256_file(&dir.join(&f.path))?;
            if actual != f.sha256 {
                mismatched.push(f.path.clone());
            }
        }
        Ok(mismatched)
    }
}

/// Writes a pretty-printed JSON report with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.display().to_string(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| IoError::file(path, e))
}

/// Writes CSV rows through a closure over a started writer.
pub fn write_csv_with<F>(path: &Path, header: &[&str], rows: F) -> Result<(), IoError>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let mut file = std::fs::File::create(path).map_err(|e| IoError::file(path, e))?;
    let mut line = header.join(",");
    line.push('\n');
    file.write_all(line.as_bytes())
        .map_err(|e| IoError::file(path, e))?;
    rows(&mut file).map_err(|e| IoError::file(path, e))?;
    file.flush().map_err(|e| IoError::file(path, e))?;
    Ok(())
}
