//! Corpus scanning, per-tool assessment, and reference/subject partitioning.

mod ledger;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use globset::{Glob, GlobSet, GlobSetBuilder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use walkdir::WalkDir;

use crate::toolchain::{invoke_and_classify, OptionSet, Status, ToolProfile, ToolchainError, Verdict};

pub use ledger::{Ledger, LedgerEntry};

/// Directory names that mark the files below them as expected rejections or
/// expected warnings.
pub const EXPECT_REJECT_DIR: &str = "expect-reject";
pub const EXPECT_WARN_DIR: &str = "expect-warn";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus root {0} does not exist")]
    RootMissing(PathBuf),
    #[error("verdict maps cover different files ({only_reference} only in reference, {only_subject} only in subject)")]
    UniverseMismatch { only_reference: usize, only_subject: usize },
    #[error("bad ignore glob: {0}")]
    Glob(#[from] globset::Error),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("ledger error: {0}")]
    Ledger(String),
    #[error(transparent)]
    Toolchain(#[from] ToolchainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LanguageTag {
    C,
    Asm,
    Other,
}

impl LanguageTag {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("c" | "h" | "i") => LanguageTag::C,
            Some("s" | "S" | "asm") => LanguageTag::Asm,
            _ => LanguageTag::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateFile {
    pub path: PathBuf,
    pub content_hash: String,
    pub language_tag: LanguageTag,
    pub size_bytes: u64,
    /// `expect-reject` / `expect-warn` when the file sits below such a directory.
    pub tags: Vec<String>,
}

impl CandidateFile {
    pub fn from_path(path: &Path) -> Result<Self, CorpusError> {
        let bytes = std::fs::read(path).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let tags = path
            .components()
            .filter_map(|c| c.as_os_str().to_str())
            .filter(|c| *c == EXPECT_REJECT_DIR || *c == EXPECT_WARN_DIR)
            .map(str::to_string)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        Ok(CandidateFile {
            path: path.to_path_buf(),
            content_hash: content_hash(&bytes),
            language_tag: LanguageTag::from_path(path),
            size_bytes: bytes.len() as u64,
            tags,
        })
    }

    pub fn expects_reject(&self) -> bool {
        self.tags.iter().any(|t| t == EXPECT_REJECT_DIR)
    }
}

pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Default)]
pub struct ScanFilter {
    /// Extensions without the leading dot. Empty means every file.
    pub extensions: BTreeSet<String>,
    /// Globs matched against the path relative to the root.
    pub ignore: Vec<String>,
}

impl ScanFilter {
    pub fn extensions<I: IntoIterator<Item = S>, S: AsRef<str>>(exts: I) -> Self {
        ScanFilter {
            extensions: exts
                .into_iter()
                .map(|e| e.as_ref().trim_start_matches('.').to_string())
                .collect(),
            ignore: Vec::new(),
        }
    }

    pub fn ignoring(mut self, glob: &str) -> Self {
        self.ignore.push(glob.to_string());
        self
    }

    fn globset(&self) -> Result<GlobSet, CorpusError> {
        let mut b = GlobSetBuilder::new();
        for g in &self.ignore {
            b.add(Glob::new(g)?);
        }
        Ok(b.build()?)
    }

    fn wants(&self, path: &Path) -> bool {
        self.extensions.is_empty()
            || path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| self.extensions.contains(e))
    }
}

/// Recursively lists matching files under `root`, sorted by path. Symlinks are
/// followed, but a link that loops back to an ancestor is skipped.
pub fn scan(root: &Path, filter: &ScanFilter) -> Result<Vec<CandidateFile>, CorpusError> {
    if !root.exists() {
        return Err(CorpusError::RootMissing(root.to_path_buf()));
    }
    let ignore = filter.globset()?;
    let mut paths = Vec::new();
    for entry in WalkDir::new(root).follow_links(true) {
        let entry = match entry {
            Ok(e) => e,
            Err(e) if e.loop_ancestor().is_some() => continue,
            Err(e) => {
                // dangling symlinks and unreadable directories are skipped
                if e.io_error().is_some() && e.path().is_some() {
                    continue;
                }
                return Err(CorpusError::Io {
                    path: root.to_path_buf(),
                    source: e.into(),
                });
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        if ignore.is_match(rel) || !filter.wants(entry.path()) {
            continue;
        }
        paths.push(entry.into_path());
    }
    paths.sort();
    paths.iter().map(|p| CandidateFile::from_path(p)).collect()
}

/// Verdicts from one tool at one cell, keyed by file path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assessment {
    pub profile_id: String,
    pub cell: OptionSet,
    pub verdicts: BTreeMap<PathBuf, Verdict>,
}

/// Runs `profile` at `cell` on every file. A missing tool aborts the whole
/// call; per-file outcomes never do.
pub fn assess(
    files: &[CandidateFile],
    profile: &ToolProfile,
    cell: &OptionSet,
    ledger: Option<&Ledger>,
) -> Result<Assessment, CorpusError> {
    profile.check_options(cell)?;
    let verdicts: Vec<Verdict> = files
        .par_iter()
        .map(|f| invoke_and_classify(profile, cell, &f.path))
        .collect::<Result<_, _>>()?;
    if let Some(ledger) = ledger {
        for (file, verdict) in files.iter().zip(&verdicts) {
            ledger.record(file, &profile.id, verdict)?;
        }
    }
    Ok(Assessment {
        profile_id: profile.id.clone(),
        cell: cell.clone(),
        verdicts: files.iter().map(|f| f.path.clone()).zip(verdicts).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CrashEntry {
    pub path: PathBuf,
    pub tool: String,
    pub cell: String,
    pub status: Status,
}

/// Agreement sets between a reference and a subject tool.
///
/// Crash and timeout verdicts count as "not accepted" for the four agreement
/// sets and are additionally listed in `any_crash`. A file that neither tool
/// accepted and at least one crashed on appears only in `any_crash`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub both_accept: BTreeSet<PathBuf>,
    pub both_reject: BTreeSet<PathBuf>,
    pub ref_only_accept: BTreeSet<PathBuf>,
    pub subject_only_accept: BTreeSet<PathBuf>,
    pub any_crash: Vec<CrashEntry>,
}

impl Partition {
    pub fn crash_files(&self) -> BTreeSet<PathBuf> {
        self.any_crash.iter().map(|c| c.path.clone()).collect()
    }

    pub fn disagreements(&self) -> usize {
        self.ref_only_accept.len() + self.subject_only_accept.len()
    }

    pub fn has_findings(&self) -> bool {
        self.disagreements() > 0 || !self.any_crash.is_empty()
    }
}

pub fn partition(reference: &Assessment, subject: &Assessment) -> Result<Partition, CorpusError> {
    let ref_keys: BTreeSet<_> = reference.verdicts.keys().collect();
    let subj_keys: BTreeSet<_> = subject.verdicts.keys().collect();
    if ref_keys != subj_keys {
        return Err(CorpusError::UniverseMismatch {
            only_reference: ref_keys.difference(&subj_keys).count(),
            only_subject: subj_keys.difference(&ref_keys).count(),
        });
    }
    let mut part = Partition::default();
    for (path, rv) in &reference.verdicts {
        let sv = &subject.verdicts[path];
        for (tool, v) in [(&reference.profile_id, rv), (&subject.profile_id, sv)] {
            if v.status.is_crash_like() {
                part.any_crash.push(CrashEntry {
                    path: path.clone(),
                    tool: tool.clone(),
                    cell: v.cell.canonical_key(),
                    status: v.status,
                });
            }
        }
        let (r, s) = (rv.status, sv.status);
        match (r == Status::Accept, s == Status::Accept) {
            (true, true) => part.both_accept.insert(path.clone()),
            (true, false) => part.ref_only_accept.insert(path.clone()),
            (false, true) => part.subject_only_accept.insert(path.clone()),
            (false, false) if r == Status::Reject && s == Status::Reject => part.both_reject.insert(path.clone()),
            (false, false) => false,
        };
    }
    part.any_crash.sort();
    Ok(part)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrashHit {
    pub path: PathBuf,
    pub cell: OptionSet,
    pub verdict: Verdict,
}

/// Runs every file at every cell and keeps only crash and timeout outcomes;
/// acceptance and rejection are ignored. Hits are ordered by (path, cell).
pub fn crash_sweep(
    files: &[CandidateFile],
    profile: &ToolProfile,
    cells: &[OptionSet],
    ledger: Option<&Ledger>,
) -> Result<Vec<CrashHit>, CorpusError> {
    for cell in cells {
        profile.check_options(cell)?;
    }
    let jobs: Vec<(&CandidateFile, &OptionSet)> =
        files.iter().flat_map(|f| cells.iter().map(move |c| (f, c))).collect();
    let verdicts: Vec<Verdict> = jobs
        .par_iter()
        .map(|(f, c)| invoke_and_classify(profile, c, &f.path))
        .collect::<Result<_, _>>()?;
    if let Some(ledger) = ledger {
        for ((file, _), verdict) in jobs.iter().zip(&verdicts) {
            ledger.record(file, &profile.id, verdict)?;
        }
    }
    let mut hits: Vec<CrashHit> = jobs
        .into_iter()
        .zip(verdicts)
        .filter(|(_, v)| v.status.is_crash_like())
        .map(|((f, c), v)| CrashHit {
            path: f.path.clone(),
            cell: c.clone(),
            verdict: v,
        })
        .collect();
    hits.sort_by(|a, b| (&a.path, a.cell.canonical_key()).cmp(&(&b.path, b.cell.canonical_key())));
    Ok(hits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn verdict(status: Status) -> Verdict {
        Verdict {
            status,
            exit_code: Some(0),
            terminated_by_signal: false,
            diagnostics: String::new(),
            wall_time: 0.0,
            cell: OptionSet::default(),
        }
    }

    fn assessment(id: &str, entries: &[(&str, Status)]) -> Assessment {
        Assessment {
            profile_id: id.into(),
            cell: OptionSet::default(),
            verdicts: entries.iter().map(|(p, s)| (PathBuf::from(p), verdict(*s))).collect(),
        }
    }

    fn set(items: &[&str]) -> BTreeSet<PathBuf> {
        items.iter().map(PathBuf::from).collect()
    }

    #[test]
    fn scan_empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(scan(dir.path(), &ScanFilter::default()).unwrap().is_empty());
    }

    #[test]
    fn scan_filters_by_extension_in_path_order() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("b")).unwrap();
        fs::write(dir.path().join("a.c"), "a").unwrap();
        fs::write(dir.path().join("b/c.c"), "c").unwrap();
        fs::write(dir.path().join("d.txt"), "d").unwrap();
        let files = scan(dir.path(), &ScanFilter::extensions(["c"])).unwrap();
        let rel: Vec<_> = files
            .iter()
            .map(|f| f.path.strip_prefix(dir.path()).unwrap().to_path_buf())
            .collect();
        assert_eq!(rel, [PathBuf::from("a.c"), PathBuf::from("b/c.c")]);
        assert_eq!(files[0].language_tag, LanguageTag::C);
        assert_eq!(files[0].size_bytes, 1);
    }

    #[test]
    fn scan_skips_symlink_loops() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("sub")).unwrap();
        fs::write(dir.path().join("sub/x.c"), "x").unwrap();
        std::os::unix::fs::symlink(dir.path(), dir.path().join("sub/loop")).unwrap();
        let files = scan(dir.path(), &ScanFilter::extensions(["c"])).unwrap();
        assert_eq!(files.len(), 1);
    }

    #[test]
    fn scan_honors_ignore_globs_and_tags() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("expect-reject")).unwrap();
        fs::create_dir_all(dir.path().join("build")).unwrap();
        fs::write(dir.path().join("expect-reject/bad.c"), "int").unwrap();
        fs::write(dir.path().join("build/gen.c"), "int x;").unwrap();
        fs::write(dir.path().join("ok.c"), "int y;").unwrap();
        let files = scan(dir.path(), &ScanFilter::extensions([".c"]).ignoring("build/**")).unwrap();
        assert_eq!(files.len(), 2);
        assert!(files[0].expects_reject());
        assert!(files[1].tags.is_empty());
    }

    #[test]
    fn scan_missing_root() {
        assert!(matches!(
            scan(Path::new("/nonexistent/corpus"), &ScanFilter::default()),
            Err(CorpusError::RootMissing(_))
        ));
    }

    #[test]
    fn content_hash_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.c");
        fs::write(&p, "int main(void){return 0;}").unwrap();
        let a = CandidateFile::from_path(&p).unwrap();
        let b = CandidateFile::from_path(&p).unwrap();
        assert_eq!(a.content_hash, b.content_hash);
        assert_eq!(a.content_hash.len(), 64);
    }

    #[test]
    fn partition_set_arithmetic() {
        use Status::*;
        let r = assessment("ref", &[("a", Accept), ("b", Reject), ("c", Accept)]);
        let s = assessment("subj", &[("a", Accept), ("b", Reject), ("c", Reject)]);
        let p = partition(&r, &s).unwrap();
        assert_eq!(p.both_accept, set(&["a"]));
        assert_eq!(p.both_reject, set(&["b"]));
        assert_eq!(p.ref_only_accept, set(&["c"]));
        assert!(p.subject_only_accept.is_empty());
        assert!(p.any_crash.is_empty());
    }

    #[test]
    fn partition_crash_precedence() {
        let r = assessment("ref", &[("a", Status::Accept)]);
        let s = assessment("subj", &[("a", Status::Crash)]);
        let p = partition(&r, &s).unwrap();
        assert_eq!(p.crash_files(), set(&["a"]));
        assert_eq!(p.any_crash[0].tool, "subj");
        assert!(p.both_accept.is_empty());
        assert_eq!(p.ref_only_accept, set(&["a"]));
    }

    #[test]
    fn partition_identity_has_no_disagreements() {
        use Status::*;
        let r = assessment("ref", &[("a", Accept), ("b", Reject), ("c", Accept)]);
        let p = partition(&r, &r).unwrap();
        assert_eq!(p.disagreements(), 0);
    }

    #[test]
    fn partition_universe_mismatch() {
        let r = assessment("ref", &[("a", Status::Accept)]);
        let s = assessment("subj", &[("b", Status::Accept)]);
        assert!(matches!(
            partition(&r, &s),
            Err(CorpusError::UniverseMismatch {
                only_reference: 1,
                only_subject: 1
            })
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn status() -> impl Strategy<Value = Status> {
            prop_oneof![
                Just(Status::Accept),
                Just(Status::Reject),
                Just(Status::Crash),
                Just(Status::Timeout)
            ]
        }

        proptest! {
            #[test]
            fn partition_swap_symmetry_and_coverage(pairs in proptest::collection::vec((status(), status()), 0..30)) {
                let names: Vec<String> = (0..pairs.len()).map(|i| format!("f{i:02}")).collect();
                let r: Vec<(&str, Status)> = names.iter().zip(&pairs).map(|(n, p)| (n.as_str(), p.0)).collect();
                let s: Vec<(&str, Status)> = names.iter().zip(&pairs).map(|(n, p)| (n.as_str(), p.1)).collect();
                let (ra, sa) = (assessment("r", &r), assessment("s", &s));
                let fwd = partition(&ra, &sa).unwrap();
                let back = partition(&sa, &ra).unwrap();
                prop_assert_eq!(&fwd.both_accept, &back.both_accept);
                prop_assert_eq!(&fwd.both_reject, &back.both_reject);
                prop_assert_eq!(&fwd.ref_only_accept, &back.subject_only_accept);
                prop_assert_eq!(&fwd.subject_only_accept, &back.ref_only_accept);
                prop_assert_eq!(fwd.crash_files(), back.crash_files());
                prop_assert!(fwd.both_accept.is_disjoint(&fwd.both_reject));

                let crash = fwd.crash_files();
                for (name, (a, b)) in names.iter().zip(&pairs) {
                    let p = PathBuf::from(name);
                    let in_four = [&fwd.both_accept, &fwd.both_reject, &fwd.ref_only_accept, &fwd.subject_only_accept]
                        .iter()
                        .filter(|s| s.contains(&p))
                        .count();
                    prop_assert!(in_four <= 1);
                    prop_assert!(in_four == 1 || crash.contains(&p));
                    prop_assert_eq!(crash.contains(&p), a.is_crash_like() || b.is_crash_like());
                }
            }
        }
    }
}
