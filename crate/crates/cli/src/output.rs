use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{CliError, Result};

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::infra(format!("{}: {e}", path.display()))
}

/// Writes via a sibling temp file and a rename, so readers never see a
/// half-written output.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let file = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    let mut w = BufWriter::new(file);
    fill(&mut w).map_err(|e| io_err(&tmp, e))?;
    let file = w.into_inner().map_err(|e| io_err(&tmp, e.error()))?;
    file.sync_all().map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(header)?;
        for row in rows {
            csv.write_record(row)?;
        }
        csv.flush()
    })
}

/// Right-aligned columns, first column left-aligned.
pub fn aligned_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

/// Keeps `[A-Za-z0-9._-]` and replaces everything else with `_`.
pub fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') { c } else { '_' })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligned() {
        let t = aligned_table(
            &["model".into(), "k=1".into()],
            &[vec!["7B".into(), "28.2".into()], vec!["13B".into(), "--.-".into()]],
        );
        assert_eq!(t, "model   k=1\n7B     28.2\n13B    --.-\n");
    }

    #[test]
    fn safe_names() {
        assert_eq!(file_safe("nll-score:nll 13b/x"), "nll-score_nll_13b_x");
    }
}
