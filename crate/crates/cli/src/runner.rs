//! Runs a validated config and persists `paths.csv`, `report.csv` and
//! `manifest.txt` under `<output_dir>/<config hash>/`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::commands::{execute, Outcome, ReportRow, Verdict};
use crate::config::{Command, ExperimentConfig};

pub const LIBRARY_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("could not build the worker pool: {0}")]
    Pool(String),
    #[error("malformed manifest: {0}")]
    Manifest(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
        }
    }

    /// Process exit code: 0 all verdicts pass, 2 some verdict fails, 1 error.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 2,
            Status::Error => 1,
        }
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Status::Pass, Status::Fail, Status::Error]
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown status `{s}`"))
    }
}

/// A file written by a run, with its data-row count (header excluded).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedFile {
    pub name: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config_hash: String,
    pub command: Command,
    pub master_seed: u64,
    pub library_version: String,
    pub threads: usize,
    pub started: String,
    pub finished: String,
    pub files: Vec<EmittedFile>,
    pub verdicts: Vec<Verdict>,
    pub status: Status,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn file(&self, name: &str) -> Option<&EmittedFile> {
        self.files.iter().find(|f| f.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "config_hash = {}", self.config_hash);
        let _ = writeln!(out, "command = {}", self.command);
        let _ = writeln!(out, "master_seed = {}", self.master_seed);
        let _ = writeln!(out, "library_version = {}", self.library_version);
        let _ = writeln!(out, "threads = {}", self.threads);
        let _ = writeln!(out, "started = {}", self.started);
        let _ = writeln!(out, "finished = {}", self.finished);
        for f in &self.files {
            let _ = writeln!(out, "file = {} | {} | {}", f.name, f.rows, f.sha256);
        }
        for v in &self.verdicts {
            let _ = writeln!(out, "verdict = {} | {} | {}", v.name, if v.pass { "pass" } else { "fail" }, v.detail.replace('\n', " "));
        }
        let _ = writeln!(out, "status = {}", self.status.name());
        if let Some(e) = &self.error {
            let _ = writeln!(out, "error = {}", e.replace('\n', " "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, RunError> {
        let bad = |m: String| RunError::Manifest(m);
        let mut fields = std::collections::BTreeMap::new();
        let mut files = Vec::new();
        let mut verdicts = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (key, value) = line.split_once(" = ").ok_or_else(|| bad(format!("line `{line}`")))?;
            match key {
                "file" => {
                    let parts: Vec<&str> = value.splitn(3, " | ").collect();
                    let [name, rows, sha256] = parts[..] else { return Err(bad(format!("file line `{line}`"))) };
                    let rows = rows.parse().map_err(|_| bad(format!("row count in `{line}`")))?;
                    files.push(EmittedFile { name: name.into(), rows, sha256: sha256.into() });
                }
                "verdict" => {
                    let parts: Vec<&str> = value.splitn(3, " | ").collect();
                    let (name, pass, detail) = match parts[..] {
                        [n, p] => (n, p, ""),
                        [n, p, d] => (n, p, d),
                        _ => return Err(bad(format!("verdict line `{line}`"))),
                    };
                    verdicts.push(Verdict { name: name.into(), pass: pass == "pass", detail: detail.into() });
                }
                _ => {
                    fields.insert(key.to_string(), value.to_string());
                }
            }
        }
        let mut get = |k: &str| fields.remove(k).ok_or_else(|| bad(format!("missing `{k}`")));
        Ok(Self {
            config_hash: get("config_hash")?,
            command: get("command")?.parse().map_err(bad)?,
            master_seed: get("master_seed")?.parse().map_err(|_| bad("master_seed".into()))?,
            library_version: get("library_version")?,
            threads: get("threads")?.parse().map_err(|_| bad("threads".into()))?,
            started: get("started")?,
            finished: get("finished")?,
            files,
            verdicts,
            status: get("status")?.parse().map_err(bad)?,
            error: get("error").ok(),
        })
    }
}

/// Directory a config's outputs go to.
pub fn run_directory(config: &ExperimentConfig) -> PathBuf {
    config.runtime.output_dir.join(config.hash())
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Writes `bytes` to `dir/name` and records its checksum.
fn emit(dir: &Path, name: &str, bytes: &[u8], rows: usize) -> Result<EmittedFile, RunError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(EmittedFile { name: name.into(), rows, sha256: hex::encode(Sha256::digest(bytes)) })
}

fn report_csv(rows: &[ReportRow]) -> Vec<u8> {
    let mut out = String::from("quantity,label,value,std_error\n");
    for r in rows {
        let se = r.std_error.map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{se}", r.quantity, r.label, r.value);
    }
    out.into_bytes()
}

fn paths_csv(outcome: &Outcome) -> (Vec<u8>, usize) {
    let mut bytes = Vec::new();
    let rows = match &outcome.paths {
        Some(e) => e.write_csv(&mut bytes).expect("writing to memory"),
        None => {
            bytes.extend_from_slice(b"path_index,t,value\n");
            0
        }
    };
    (bytes, rows)
}

/// Executes the command on a worker pool sized by `threads` and writes the
/// outputs. Failures inside the computation end up in the manifest with
/// status `error`; only output i/o problems are returned as `Err`.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest, RunError> {
    let started = now();
    let dir = run_directory(config);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.runtime.threads)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    let threads = pool.current_num_threads();
    let result = pool.install(|| execute(config));

    let (outcome, error) = match result {
        Ok(o) => (o, None),
        Err(e) => (Outcome::default(), Some(e.to_string())),
    };
    let (paths, path_rows) = paths_csv(&outcome);
    let files = vec![
        emit(&dir, "paths.csv", &paths, path_rows)?,
        emit(&dir, "report.csv", &report_csv(&outcome.rows), outcome.rows.len())?,
    ];
    let status = if error.is_some() {
        Status::Error
    } else if outcome.verdicts.iter().all(|v| v.pass) {
        Status::Pass
    } else {
        Status::Fail
    };
    let manifest = RunManifest {
        config_hash: config.hash(),
        command: config.command,
        master_seed: config.mc.master_seed,
        library_version: LIBRARY_VERSION.into(),
        threads,
        started,
        finished: now(),
        files,
        verdicts: outcome.verdicts,
        status,
        error,
    };
    let tmp = dir.join("manifest.txt.tmp");
    let target = dir.join("manifest.txt");
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(manifest.to_text().as_bytes()).and_then(|_| f.sync_all()).map_err(io_err(&tmp))?;
    fs::rename(&tmp, &target).map_err(io_err(&target))?;
    Ok(manifest)
}
