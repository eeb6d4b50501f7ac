use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Version of the report layout; bumped on incompatible changes.
pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct SpecInfo {
    pub source: String,
    pub name: String,
    pub sha256: String,
}

impl SpecInfo {
    pub fn new(source: &str, name: &str, bytes: &[u8]) -> Self {
        SpecInfo {
            source: source.to_string(),
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        }
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Abort,
}

/// Envelope shared by every report.
#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub format: &'static str,
    pub version: u32,
    pub command: &'static str,
    pub engine_version: &'static str,
    pub spec: SpecInfo,
    pub seed: u64,
    pub tolerances: serde_json::Value,
    pub verdict: Verdict,
    pub result: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(
        command: &'static str,
        spec: SpecInfo,
        seed: u64,
        tolerances: serde_json::Value,
        verdict: Verdict,
        result: T,
    ) -> Self {
        Report {
            format: "cg-report",
            version: REPORT_VERSION,
            command,
            engine_version: cgame_core::VERSION,
            spec,
            seed,
            tolerances,
            verdict,
            result,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Sends `bytes` to `path`, or to stdout when no path is given.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> std::io::Result<()> {
    match path {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()
        }
    }
}
