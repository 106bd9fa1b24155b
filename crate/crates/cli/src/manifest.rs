//! Run manifests. Every output file starts with a block of `#` comment
//! lines describing the run; removing those lines leaves plain CSV. Wall
//! time lives only in a sidecar `<output>.manifest.toml` so that the
//! primary outputs of identical runs are byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    pub config_sha256: String,
    pub master_seed: Option<u64>,
    /// How each operation derives its random stream from the master seed.
    pub streams: Vec<String>,
    pub outputs: Vec<String>,
    /// Result summaries that do not fit the CSV body.
    pub results: Vec<(String, String)>,
    pub resolved_config: String,
}

impl RunManifest {
    pub fn new(command: &str, resolved_config: String, master_seed: Option<u64>) -> Self {
        let digest = Sha256::digest(format!("{command}\n{resolved_config}").as_bytes());
        RunManifest {
            command: command.into(),
            code_version: srblab::VERSION.into(),
            config_sha256: hex::encode(digest),
            master_seed,
            streams: Vec::new(),
            outputs: Vec::new(),
            results: Vec::new(),
            resolved_config,
        }
    }

    pub fn stream(&mut self, s: impl Into<String>) {
        self.streams.push(s.into());
    }

    pub fn result(&mut self, key: &str, value: impl ToString) {
        self.results.push((key.into(), value.to_string()));
    }

    /// The comment block placed at the top of every output file.
    pub fn header(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# srblab run manifest").unwrap();
        writeln!(s, "# command = {}", self.command).unwrap();
        writeln!(s, "# code_version = {}", self.code_version).unwrap();
        writeln!(s, "# config_sha256 = {}", self.config_sha256).unwrap();
        if let Some(seed) = self.master_seed {
            writeln!(s, "# master_seed = {seed}").unwrap();
        }
        for st in &self.streams {
            writeln!(s, "# stream: {st}").unwrap();
        }
        let outputs = if self.outputs.is_empty() { "stdout".to_string() } else { self.outputs.join(", ") };
        writeln!(s, "# outputs = {outputs}").unwrap();
        for (k, v) in &self.results {
            writeln!(s, "# result.{k} = {v}").unwrap();
        }
        for line in self.resolved_config.lines() {
            writeln!(s, "# config: {line}").unwrap();
        }
        writeln!(s, "# end manifest").unwrap();
        s
    }
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.toml");
    PathBuf::from(name)
}

#[derive(Serialize)]
struct Sidecar<'a> {
    #[serde(flatten)]
    manifest: &'a RunManifest,
    wall_time_seconds: f64,
    workers: usize,
}

/// Write `body` under the manifest header, to a file or to stdout.
pub fn write_output(path: Option<&Path>, manifest: &RunManifest, body: &str) -> Result<(), CliError> {
    let text = format!("{}{}", manifest.header(), body);
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

pub fn write_sidecar(output: &Path, manifest: &RunManifest, wall: Duration, workers: usize) -> Result<(), CliError> {
    let side = Sidecar {
        manifest,
        wall_time_seconds: wall.as_secs_f64(),
        workers,
    };
    let text = toml::to_string(&side).map_err(|e| CliError::Config(format!("manifest: {e}")))?;
    std::fs::write(sidecar_path(output), text)?;
    Ok(())
}

/// Drop the manifest and any other `#` lines.
pub fn strip_header(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}
