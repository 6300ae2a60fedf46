//! Append-only event logs, one JSON-lines file per session.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::ServiceError;
use crate::session::SessionEvent;

#[derive(Debug, Clone)]
pub struct EventStore {
    dir: Option<PathBuf>,
}

impl EventStore {
    /// A store that keeps nothing; sessions live only in memory.
    pub fn ephemeral() -> Self {
        Self { dir: None }
    }

    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir: Some(dir) })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(dir: &Path, id: &str) -> PathBuf {
        dir.join(format!("{id}.jsonl"))
    }

    pub fn append(&self, id: &str, events: &[SessionEvent]) -> Result<(), ServiceError> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let mut buf = Vec::new();
        for e in events {
            serde_json::to_writer(&mut buf, e).map_err(|e| ServiceError::Internal(e.to_string()))?;
            buf.push(b'\n');
        }
        let mut f = OpenOptions::new().create(true).append(true).open(Self::path(dir, id))?;
        f.write_all(&buf)?;
        f.sync_data()?;
        Ok(())
    }

    /// Reads every session log. A torn final line (from a crash mid-write) is dropped.
    pub fn load_all(&self) -> Result<BTreeMap<String, Vec<SessionEvent>>, ServiceError> {
        let mut out = BTreeMap::new();
        let Some(dir) = &self.dir else { return Ok(out) };
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_owned) else { continue };
            let lines: Vec<String> = BufReader::new(File::open(&path)?).lines().collect::<Result<_, _>>()?;
            let mut events = Vec::with_capacity(lines.len());
            for (i, line) in lines.iter().enumerate() {
                match serde_json::from_str(line) {
                    Ok(e) => events.push(e),
                    Err(_) if i + 1 == lines.len() => {
                        tracing::warn!(session = %id, "dropping torn trailing event");
                    }
                    Err(e) => {
                        return Err(ServiceError::Internal(format!("{}:{}: {e}", path.display(), i + 1)));
                    }
                }
            }
            if !events.is_empty() {
                out.insert(id, events);
            }
        }
        Ok(out)
    }
}
