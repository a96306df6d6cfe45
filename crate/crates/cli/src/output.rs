use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::CliError;

/// Shortest decimal that round-trips to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// In-memory CSV with a single header row.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let names: Vec<&str> = header.iter().map(|h| h.as_ref()).collect();
        Csv { text: format!("{}\n", names.join(",")), columns: names.len() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns);
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn floats(&mut self, values: &[f64]) {
        self.row(values.iter().copied().map(fmt_f64).collect());
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskRecord {
    pub name: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_clock_s: f64,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub library_version: String,
    pub config: ExperimentConfig,
    pub tasks: Vec<TaskRecord>,
    pub files: Vec<String>,
}

/// Collects results of one invocation; nothing touches the disk before
/// [`Run::finish`].
pub struct Run {
    command: String,
    config: ExperimentConfig,
    tasks: Vec<TaskRecord>,
    files: Vec<(String, String)>,
}

impl Run {
    pub fn new(command: &str, config: &ExperimentConfig) -> Self {
        Run { command: command.to_string(), config: config.clone(), tasks: Vec::new(), files: Vec::new() }
    }

    /// Times `f` and records its outcome as a task.
    pub fn task<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T, String>) -> Option<T> {
        let start = Instant::now();
        let outcome = f();
        let wall_clock_s = start.elapsed().as_secs_f64();
        let (status, error, value) = match outcome {
            Ok(v) => ("ok", None, Some(v)),
            Err(e) => ("failed", Some(e), None),
        };
        self.tasks.push(TaskRecord { name: name.to_string(), status: status.into(), error, wall_clock_s, details: Value::Null });
        value
    }

    /// Attaches details to the most recent task.
    pub fn detail(&mut self, details: Value) {
        if let Some(t) = self.tasks.last_mut() {
            t.details = details;
        }
    }

    /// Marks the most recent task as failed without discarding its output.
    pub fn fail_last(&mut self, error: String) {
        if let Some(t) = self.tasks.last_mut() {
            t.status = "failed".into();
            t.error = Some(error);
        }
    }

    pub fn file(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn json(&mut self, name: impl Into<String>, value: &impl Serialize) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        self.file(name, text + "\n");
        Ok(())
    }

    pub fn failed(&self) -> bool {
        self.tasks.iter().any(|t| t.status != "ok")
    }

    /// Writes every file in order, then the manifest.
    pub fn finish(self, out: &Path) -> Result<RunManifest, CliError> {
        fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
        for (name, contents) in &self.files {
            let path = out.join(name);
            fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        let manifest = RunManifest {
            command: self.command,
            library_version: qab_core::VERSION.to_string(),
            config: self.config,
            tasks: self.tasks,
            files: self.files.into_iter().map(|(n, _)| n).collect(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?;
        let path = out.join(MANIFEST);
        fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(manifest)
    }
}

pub const MANIFEST: &str = "manifest.json";
