//! Schema-tagged JSONL and JSON file I/O.
//!
//! Every record type written to disk carries a `"schema"` field (e.g.
//! `"qr/1"` for question records) that is checked on read, so stale or
//! mismatched files fail loudly instead of producing garbage downstream.
//! Whole-file writes go through a temp-file-and-rename so a crash never
//! leaves a partial file under the final name.

use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Wire schema tag carried by a record type.
pub trait Schema {
    const TAG: &'static str;
}

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: invalid record: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: schema mismatch: expected {expected:?}, found {found:?}")]
    SchemaMismatch {
        path: PathBuf,
        line: usize,
        expected: &'static str,
        found: String,
    },
}

#[derive(Serialize)]
struct Tagged<T> {
    schema: String,
    #[serde(flatten)]
    record: T,
}

/// Serialize one record to its tagged JSONL line (no trailing newline).
pub fn to_line<T: Serialize + Schema>(record: &T) -> String {
    let tagged = Tagged {
        schema: T::TAG.to_string(),
        record,
    };
    serde_json::to_string(&tagged).expect("record types serialize infallibly")
}

/// Parse one tagged JSONL line. The schema tag is checked before the record
/// shape, so feeding the wrong file type reports a schema mismatch rather
/// than a field error.
fn from_line<T: DeserializeOwned + Schema>(
    line: &str,
    path: &Path,
    lineno: usize,
) -> Result<T, JsonlError> {
    let parse_err = |e: serde_json::Error| JsonlError::Parse {
        path: path.to_path_buf(),
        line: lineno,
        message: e.to_string(),
    };
    let value: serde_json::Value = serde_json::from_str(line).map_err(parse_err)?;
    let found = value.get("schema").and_then(|s| s.as_str()).unwrap_or("");
    if found != T::TAG {
        return Err(JsonlError::SchemaMismatch {
            path: path.to_path_buf(),
            line: lineno,
            expected: T::TAG,
            found: found.to_string(),
        });
    }
    serde_json::from_value(value).map_err(parse_err)
}

/// Read a whole schema-tagged JSONL file.
pub fn read_jsonl<T: DeserializeOwned + Schema>(path: &Path) -> Result<Vec<T>, JsonlError> {
    let file = fs::File::open(path).map_err(|e| JsonlError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| JsonlError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(from_line(&line, path, idx + 1)?);
    }
    Ok(records)
}

/// Atomically write a schema-tagged JSONL file (temp file + rename).
pub fn write_jsonl<'a, T, I>(path: &Path, records: I) -> Result<(), JsonlError>
where
    T: Serialize + Schema + 'a,
    I: IntoIterator<Item = &'a T>,
{
    write_atomic(path, |w| {
        for record in records {
            writeln!(w, "{}", to_line(record))?;
        }
        Ok(())
    })
}

/// Atomically write a pretty-printed JSON value (manifests, reports).
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), JsonlError> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

fn write_atomic(
    path: &Path,
    write: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
) -> Result<(), JsonlError> {
    let io_err = |e: std::io::Error| JsonlError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let tmp = temp_sibling(path);
    let result = (|| {
        let file = fs::File::create(&tmp)?;
        let mut writer = BufWriter::new(file);
        write(&mut writer)?;
        writer.flush()?;
        writer.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err)
}

fn temp_sibling(path: &Path) -> PathBuf {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    path.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}

/// Incremental JSONL writer used by the resumable eval runner: opens in
/// append mode and flushes after every record so completed work survives an
/// interrupt.
pub struct JsonlAppender {
    path: PathBuf,
    writer: BufWriter<fs::File>,
}

impl JsonlAppender {
    pub fn open(path: &Path) -> Result<Self, JsonlError> {
        let file = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| JsonlError::Io {
                path: path.to_path_buf(),
                source: e,
            })?;
        Ok(Self {
            path: path.to_path_buf(),
            writer: BufWriter::new(file),
        })
    }

    pub fn append<T: Serialize + Schema>(&mut self, record: &T) -> Result<(), JsonlError> {
        let io_err = |e: std::io::Error| JsonlError::Io {
            path: self.path.clone(),
            source: e,
        };
        writeln!(self.writer, "{}", to_line(record)).map_err(io_err)?;
        self.writer.flush().map_err(io_err)
    }
}
