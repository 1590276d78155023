use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::{content_hash, CandidateFile, CorpusError};
use crate::toolchain::{Status, Verdict};

/// One line of the JSON-lines ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub content_hash: String,
    pub profile_id: String,
    pub cell: String,
    pub status: Status,
    pub diagnostics_digest: String,
    pub timestamp: String,
}

/// Append-only verdict log. Appends go through one lock, and timestamps are
/// strictly increasing per ledger handle so `(hash, profile, cell, timestamp)`
/// never repeats.
#[derive(Debug)]
pub struct Ledger {
    path: PathBuf,
    inner: Mutex<Writer>,
}

#[derive(Debug)]
struct Writer {
    file: File,
    last: Option<DateTime<Utc>>,
}

impl Ledger {
    pub fn open(path: &Path) -> Result<Self, CorpusError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|source| CorpusError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| CorpusError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        let last = Self::read(path)?
            .last()
            .and_then(|e| DateTime::parse_from_rfc3339(&e.timestamp).ok())
            .map(|t| t.with_timezone(&Utc));
        Ok(Ledger {
            path: path.to_path_buf(),
            inner: Mutex::new(Writer { file, last }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn record(
        &self,
        file: &CandidateFile,
        profile_id: &str,
        verdict: &Verdict,
    ) -> Result<LedgerEntry, CorpusError> {
        let mut w = self.inner.lock().expect("ledger lock poisoned");
        let mut now = Utc::now();
        if let Some(last) = w.last {
            if now <= last {
                now = last + chrono::Duration::nanoseconds(1);
            }
        }
        w.last = Some(now);
        let entry = LedgerEntry {
            content_hash: file.content_hash.clone(),
            profile_id: profile_id.to_string(),
            cell: verdict.cell.canonical_key(),
            status: verdict.status,
            diagnostics_digest: content_hash(verdict.diagnostics.as_bytes()),
            timestamp: now.to_rfc3339_opts(SecondsFormat::Nanos, true),
        };
        let mut line = serde_json::to_string(&entry).map_err(|e| CorpusError::Ledger(e.to_string()))?;
        line.push('\n');
        w.file
            .write_all(line.as_bytes())
            .and_then(|_| w.file.flush())
            .map_err(|source| CorpusError::Io {
                path: self.path.clone(),
                source,
            })?;
        Ok(entry)
    }

    pub fn read(path: &Path) -> Result<Vec<LedgerEntry>, CorpusError> {
        let file = match File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => {
                return Err(CorpusError::Io {
                    path: path.to_path_buf(),
                    source,
                })
            }
        };
        let mut entries = Vec::new();
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| CorpusError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(
                serde_json::from_str(&line)
                    .map_err(|e| CorpusError::Ledger(format!("{}:{}: {e}", path.display(), n + 1)))?,
            );
        }
        Ok(entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolchain::OptionSet;
    use std::collections::BTreeSet;

    fn verdict(status: Status) -> Verdict {
        Verdict {
            status,
            exit_code: Some(1),
            terminated_by_signal: false,
            diagnostics: "error".into(),
            wall_time: 0.0,
            cell: OptionSet::from_pairs([("opt", "-O2")]),
        }
    }

    #[test]
    fn appends_are_unique_and_persistent() {
        let dir = tempfile::tempdir().unwrap();
        let src = dir.path().join("a.c");
        std::fs::write(&src, "x").unwrap();
        let file = CandidateFile::from_path(&src).unwrap();
        let path = dir.path().join("ledger.jsonl");
        {
            let ledger = Ledger::open(&path).unwrap();
            for _ in 0..50 {
                ledger.record(&file, "cc", &verdict(Status::Reject)).unwrap();
            }
        }
        // reopening continues after the last timestamp
        let ledger = Ledger::open(&path).unwrap();
        ledger.record(&file, "cc", &verdict(Status::Accept)).unwrap();
        let entries = Ledger::read(&path).unwrap();
        assert_eq!(entries.len(), 51);
        let keys: BTreeSet<_> = entries
            .iter()
            .map(|e| (&e.content_hash, &e.profile_id, &e.cell, &e.timestamp))
            .collect();
        assert_eq!(keys.len(), 51);
        assert_eq!(entries[0].cell, "opt=-O2");
        assert_eq!(entries.last().unwrap().status, Status::Accept);
        let stamps: Vec<_> = entries.iter().map(|e| e.timestamp.clone()).collect();
        let mut sorted = stamps.clone();
        sorted.sort();
        assert_eq!(stamps, sorted);
    }

    #[test]
    fn missing_ledger_reads_empty() {
        assert!(Ledger::read(Path::new("/nonexistent/ledger.jsonl")).unwrap().is_empty());
    }
}
