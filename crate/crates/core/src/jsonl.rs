use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

/// A failure while reading one JSONL stream.
#[derive(Debug)]
pub(crate) enum LineError {
    Io(std::io::Error),
    Parse { line: usize, message: String },
}

/// Reads `reader` one record per line. Blank lines are ignored; line numbers
/// are 1-based and count blank lines.
pub(crate) fn read_records<T, R>(reader: R) -> Result<Vec<(usize, T)>, LineError>
where
    T: DeserializeOwned,
    R: BufRead,
{
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| match e.kind() {
            std::io::ErrorKind::InvalidData => LineError::Parse {
                line: idx + 1,
                message: "line is not valid UTF-8".to_string(),
            },
            _ => LineError::Io(e),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| LineError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push((idx + 1, record));
    }
    Ok(out)
}

pub(crate) fn write_record<T: Serialize, W: Write>(mut writer: W, record: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut writer, record)?;
    writer.write_all(b"\n")
}
