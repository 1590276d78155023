//! Option-grid replay of a single file and detection of cells whose verdict
//! departs from the rest.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::content_hash;
use crate::toolchain::{invoke_and_classify, OptionSet, Status, ToolProfile, ToolchainError, Verdict};

pub const OPT_AXIS: &str = "opt";
pub const DEBUG_AXIS: &str = "debug";

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("profile `{profile}` has no `{axis}` axis")]
    MissingAxis { profile: String, axis: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Toolchain(#[from] ToolchainError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixMode {
    /// Cartesian product of every axis.
    Full,
    /// Lowest and highest optimization crossed with every debug entry.
    Compromise,
    /// Lowest and highest optimization at the first debug entry.
    Minmax,
}

impl std::str::FromStr for MatrixMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(MatrixMode::Full),
            "compromise" => Ok(MatrixMode::Compromise),
            "minmax" => Ok(MatrixMode::Minmax),
            other => Err(format!("unknown matrix mode `{other}`")),
        }
    }
}

/// Enumerates the option sets for `mode`. Axes other than `opt` and `debug`
/// stay at their first entry in the reduced modes.
pub fn build_matrix(profile: &ToolProfile, mode: MatrixMode) -> Result<Vec<OptionSet>, MatrixError> {
    let mut choices: Vec<(String, Vec<String>)> = Vec::new();
    if mode != MatrixMode::Full {
        for axis in [OPT_AXIS, DEBUG_AXIS] {
            if profile.axis(axis).is_none() {
                return Err(MatrixError::MissingAxis {
                    profile: profile.id.clone(),
                    axis: axis.to_string(),
                });
            }
        }
    }
    for axis in &profile.option_axes {
        let values = match (mode, axis.name.as_str()) {
            (MatrixMode::Full, _) => axis.values.clone(),
            (_, OPT_AXIS) => {
                let mut ends = vec![axis.values[0].clone()];
                if axis.values.len() > 1 {
                    ends.push(axis.values[axis.values.len() - 1].clone());
                }
                ends
            }
            (MatrixMode::Compromise, DEBUG_AXIS) => axis.values.clone(),
            _ => vec![axis.values[0].clone()],
        };
        choices.push((axis.name.clone(), values));
    }

    let mut cells: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (name, values) in &choices {
        cells = cells
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut next = prefix.clone();
                    next.push((name.clone(), v.clone()));
                    next
                })
            })
            .collect();
    }
    Ok(cells.into_iter().map(OptionSet::from_pairs).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub cell: String,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixReport {
    pub file: String,
    pub file_hash: String,
    pub profile_id: String,
    pub cells: BTreeMap<String, Verdict>,
    pub baseline_status: Option<Status>,
    pub discrepancies: Vec<Discrepancy>,
}

impl MatrixReport {
    /// Derives baseline and discrepancies from the per-cell verdicts.
    pub fn from_cells(file: &Path, file_hash: String, profile_id: &str, cells: BTreeMap<String, Verdict>) -> Self {
        let baseline = modal_status(cells.values().map(|v| v.status));
        let discrepancies = cells
            .iter()
            .filter(|(_, v)| Some(v.status) != baseline)
            .map(|(k, v)| Discrepancy {
                cell: k.clone(),
                status: v.status,
            })
            .collect();
        MatrixReport {
            file: file.display().to_string(),
            file_hash,
            profile_id: profile_id.to_string(),
            cells,
            baseline_status: baseline,
            discrepancies,
        }
    }
}

/// Most frequent status; ties go to Accept, then Reject, Crash, Timeout.
pub fn modal_status(statuses: impl IntoIterator<Item = Status>) -> Option<Status> {
    let mut counts: BTreeMap<Status, usize> = BTreeMap::new();
    for s in statuses {
        *counts.entry(s).or_default() += 1;
    }
    // `Status` orders Accept < Reject < Crash < Timeout, so the first maximum wins.
    let max = *counts.values().max()?;
    counts.into_iter().find(|(_, n)| *n == max).map(|(s, _)| s)
}

/// Replays `file` once per cell.
pub fn run_matrix(file: &Path, profile: &ToolProfile, cells: &[OptionSet]) -> Result<MatrixReport, MatrixError> {
    let bytes = std::fs::read(file).map_err(|source| MatrixError::Io {
        path: file.to_path_buf(),
        source,
    })?;
    for cell in cells {
        profile.check_options(cell)?;
    }
    let verdicts: Vec<Verdict> = cells
        .par_iter()
        .map(|cell| invoke_and_classify(profile, cell, file))
        .collect::<Result<_, _>>()?;
    let by_key = cells.iter().map(OptionSet::canonical_key).zip(verdicts).collect();
    Ok(MatrixReport::from_cells(
        file,
        content_hash(&bytes),
        &profile.id,
        by_key,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toolchain::ToolKind;

    fn five_by_three() -> ToolProfile {
        ToolProfile::new(
            "cc",
            ToolKind::Compiler,
            vec!["cc".into(), "{options}".into(), "{input}".into()],
        )
        .with_axis("opt", &["-O0", "-O1", "-O2", "-O3", "-O4"])
        .with_axis("debug", &["-g0", "-g", "-ginline"])
    }

    #[test]
    fn full_grid_is_fifteen_cells() {
        let cells = build_matrix(&five_by_three(), MatrixMode::Full).unwrap();
        assert_eq!(cells.len(), 15);
        let keys: std::collections::BTreeSet<_> = cells.iter().map(|c| c.canonical_key()).collect();
        assert_eq!(keys.len(), 15);
    }

    #[test]
    fn compromise_is_six_cells() {
        let cells = build_matrix(&five_by_three(), MatrixMode::Compromise).unwrap();
        assert_eq!(cells.len(), 6);
        assert!(cells.iter().all(|c| matches!(c.get("opt"), Some("-O0" | "-O4"))));
    }

    #[test]
    fn minmax_is_two_cells() {
        let cells = build_matrix(&five_by_three(), MatrixMode::Minmax).unwrap();
        let keys: Vec<_> = cells.iter().map(|c| c.canonical_key()).collect();
        assert_eq!(keys, ["debug=-g0;opt=-O0", "debug=-g0;opt=-O4"]);
    }

    #[test]
    fn single_entry_axes_give_one_cell() {
        let p = ToolProfile::new("cc", ToolKind::Compiler, vec!["cc".into(), "{input}".into()])
            .with_axis("opt", &["-O0"])
            .with_axis("debug", &["-g"]);
        for mode in [MatrixMode::Full, MatrixMode::Compromise, MatrixMode::Minmax] {
            assert_eq!(build_matrix(&p, mode).unwrap().len(), 1);
        }
    }

    #[test]
    fn reduced_modes_need_opt_and_debug() {
        let p =
            ToolProfile::new("cc", ToolKind::Compiler, vec!["cc".into(), "{input}".into()]).with_axis("opt", &["-O0"]);
        assert!(matches!(
            build_matrix(&p, MatrixMode::Compromise),
            Err(MatrixError::MissingAxis { .. })
        ));
        assert_eq!(build_matrix(&p, MatrixMode::Full).unwrap().len(), 1);
    }

    #[test]
    fn modal_tiebreak_order() {
        use Status::*;
        assert_eq!(modal_status([Reject, Accept]), Some(Accept));
        assert_eq!(modal_status([Crash, Reject]), Some(Reject));
        assert_eq!(modal_status([Timeout, Crash]), Some(Crash));
        assert_eq!(modal_status([Crash, Crash, Accept]), Some(Crash));
        assert_eq!(modal_status(std::iter::empty()), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn verdict(status: Status) -> Verdict {
            Verdict {
                status,
                exit_code: None,
                terminated_by_signal: false,
                diagnostics: String::new(),
                wall_time: 0.0,
                cell: OptionSet::default(),
            }
        }

        proptest! {
            #[test]
            fn discrepancies_empty_iff_uniform(statuses in proptest::collection::vec(0u8..4, 1..12)) {
                let all = [Status::Accept, Status::Reject, Status::Crash, Status::Timeout];
                let cells: BTreeMap<String, Verdict> = statuses
                    .iter()
                    .enumerate()
                    .map(|(i, s)| (format!("opt=-O{i:02}"), verdict(all[*s as usize])))
                    .collect();
                let r = MatrixReport::from_cells(Path::new("f.c"), String::new(), "p", cells);
                let uniform = statuses.iter().all(|s| *s == statuses[0]);
                prop_assert_eq!(r.discrepancies.is_empty(), uniform);
                for d in &r.discrepancies {
                    prop_assert_ne!(Some(d.status), r.baseline_status);
                }
            }
        }
    }
}
