//! Output helpers: TSV files with provenance header comments.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::CliError;

/// Provenance shared by every artifact of one invocation.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
}

impl Provenance {
    /// Hashes the canonical command together with the bytes of every input.
    pub fn new(command: String, inputs: &[&[u8]]) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        for input in inputs {
            hasher.update((input.len() as u64).to_le_bytes());
            hasher.update(input);
        }
        let digest = hasher.finalize();
        let mut config_hash = String::with_capacity(64);
        for byte in digest {
            let _ = write!(config_hash, "{byte:02x}");
        }
        Self { command, config_hash }
    }

    pub fn header(&self) -> String {
        format!("# {}\n# config-sha256: {}\n", self.command, self.config_hash)
    }
}

/// Fixed six-decimal rendering used throughout the TSV outputs.
pub fn num(x: f64) -> String {
    format!("{x:.6}")
}

/// Six-decimal rendering with undefined values left blank.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A TSV table accumulated in memory.
#[derive(Debug, Default)]
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        let mut t = Table::default();
        t.row(header.iter().map(|s| s.to_string()));
        t
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let cells: Vec<String> = cells.into_iter().map(|c| c.replace(['\t', '\n'], " ")).collect();
        self.text.push_str(&cells.join("\t"));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn write_artifact(dir: &Path, name: &str, provenance: &Provenance, body: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    let mut content = provenance.header();
    content.push_str(body);
    fs::write(&path, content).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Left-aligned fixed-width text table.
pub fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<width$}", width = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_have_six_decimals() {
        assert_eq!(num(0.5), "0.500000");
        assert_eq!(opt(None), "");
    }

    #[test]
    fn hash_depends_on_inputs() {
        let a = Provenance::new("x".into(), &[b"1"]);
        let b = Provenance::new("x".into(), &[b"2"]);
        assert_ne!(a.config_hash, b.config_hash);
        assert_eq!(a.config_hash.len(), 64);
        assert!(a.header().starts_with("# x\n# config-sha256: "));
    }

    #[test]
    fn aligned_pads_columns() {
        let t = aligned(&[vec!["a".into(), "bb".into()], vec!["ccc".into(), "d".into()]]);
        assert_eq!(t, "a    bb\nccc  d\n");
    }
}
