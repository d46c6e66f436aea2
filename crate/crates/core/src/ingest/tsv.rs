//! Three-column tab-separated triples. Blank lines and lines starting with
//! `#` are skipped; fields are trimmed.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kg::Triple;

pub fn parse_tsv(text: &str) -> Result<Vec<Triple>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        if let Some(pos) = fields.iter().position(|f| f.is_empty()) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("field {} is empty", pos + 1),
            });
        }
        out.push(Triple::new(fields[0], fields[1], fields[2])?);
    }
    Ok(out)
}

pub fn read_tsv(path: &Path) -> Result<Vec<Triple>> {
    parse_tsv(&super::read_text(path)?)
}

/// Writes triples as `head TAB relation TAB tail` lines.
pub fn write_tsv<W: Write>(mut w: W, triples: &[Triple]) -> std::io::Result<()> {
    for t in triples {
        writeln!(w, "{}\t{}\t{}", t.head, t.relation, t.tail)?;
    }
    Ok(())
}
