use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{ExecutionResult, SandboxError};

/// Parses checkpoint JSONL. A final line without a terminating newline that
/// fails to parse is treated as a write torn by an interrupt and dropped; any
/// other malformed line is an error. Returns the results and whether a torn
/// line was dropped.
pub fn read_checkpoint<R: BufRead>(mut reader: R) -> Result<(Vec<ExecutionResult>, bool), SandboxError> {
    let mut results = Vec::new();
    let mut line_no = 0;
    let mut buf = Vec::new();
    loop {
        buf.clear();
        let read = reader
            .read_until(b'\n', &mut buf)
            .map_err(|e| SandboxError::io("<checkpoint>", e))?;
        if read == 0 {
            return Ok((results, false));
        }
        line_no += 1;
        let terminated = buf.ends_with(b"\n");
        let text = match std::str::from_utf8(&buf) {
            Ok(t) => t.trim(),
            Err(_) if !terminated => return Ok((results, true)),
            Err(_) => {
                return Err(SandboxError::Parse {
                    line: line_no,
                    message: "line is not valid UTF-8".into(),
                })
            }
        };
        if text.is_empty() {
            continue;
        }
        match serde_json::from_str(text) {
            Ok(r) => results.push(r),
            Err(_) if !terminated => return Ok((results, true)),
            Err(e) => {
                return Err(SandboxError::Parse {
                    line: line_no,
                    message: e.to_string(),
                })
            }
        }
    }
}

/// Append-only checkpoint; every record is flushed as soon as it is written.
pub struct CheckpointWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl CheckpointWriter {
    /// Opens `path` for appending and returns the results already in it. A
    /// torn trailing line is cut off so the next append starts cleanly.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<ExecutionResult>), SandboxError> {
        let path = path.as_ref().to_path_buf();
        let existing = match File::open(&path) {
            Ok(f) => {
                let (results, torn) = read_checkpoint(std::io::BufReader::new(f)).map_err(|e| match e {
                    SandboxError::Io { source, .. } => SandboxError::io(&path, source),
                    other => other,
                })?;
                if torn {
                    log::warn!("{}: dropping a partially written final record", path.display());
                    rewrite(&path, &results)?;
                }
                results
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(SandboxError::io(&path, e)),
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| SandboxError::io(&path, e))?;
        Ok((
            CheckpointWriter {
                path,
                out: BufWriter::new(file),
            },
            existing,
        ))
    }

    pub fn append(&mut self, result: &ExecutionResult) -> Result<(), SandboxError> {
        crate::jsonl::write_record(&mut self.out, result)
            .and_then(|_| self.out.flush())
            .map_err(|e| SandboxError::io(&self.path, e))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

fn rewrite(path: &Path, results: &[ExecutionResult]) -> Result<(), SandboxError> {
    let tmp = path.with_extension("tmp");
    let write = || -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(&tmp)?);
        for r in results {
            crate::jsonl::write_record(&mut out, r)?;
        }
        out.flush()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| SandboxError::io(path, e))
}
