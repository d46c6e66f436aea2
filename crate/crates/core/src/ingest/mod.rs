//! Knowledge graph readers.
//!
//! All readers return triples in file order; deduplication happens in
//! [`crate::kg::build_index`].

pub mod cx;
pub mod fetch;
pub mod ntriples;
pub mod tsv;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::Triple;

pub use cx::{parse_cx, read_cx};
pub use fetch::{fetch_network, FetchError, HttpGet, NetworkClient, RecordedTransport, UreqTransport};
pub use ntriples::{parse_ntriples, read_ntriples};
pub use tsv::{parse_tsv, read_tsv, write_tsv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Tsv,
    NTriples,
    Cx,
}

impl SourceFormat {
    pub const ALL: [SourceFormat; 3] = [SourceFormat::Tsv, SourceFormat::NTriples, SourceFormat::Cx];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceFormat::Tsv => "tsv",
            SourceFormat::NTriples => "ntriples",
            SourceFormat::Cx => "cx",
        }
    }
}

impl fmt::Display for SourceFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tsv" | "tab" => Ok(SourceFormat::Tsv),
            "ntriples" | "n-triples" | "nt" | "rdf" => Ok(SourceFormat::NTriples),
            "cx" | "ndex" => Ok(SourceFormat::Cx),
            other => Err(Error::Config(format!(
                "unknown format {other:?} (expected tsv, ntriples or cx)"
            ))),
        }
    }
}

/// Reads a file in the given format.
pub fn read(path: &Path, format: SourceFormat) -> Result<Vec<Triple>> {
    match format {
        SourceFormat::Tsv => read_tsv(path),
        SourceFormat::NTriples => read_ntriples(path),
        SourceFormat::Cx => read_cx(path),
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))
}
