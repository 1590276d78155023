use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use diffharness::asmdiff::{
    assemble_unit, compare, compare_unmasked, AsmDiffError, AsmUnit, AsmVerdict, Baseline, CompiledRules,
    DialectRuleSet, MaskTable, WordFormat, BASELINE_MAGIC,
};
use diffharness::combiner::{combine, default_collision_patterns, link_collision_report, read_input_list};
use diffharness::corpus::{assess, crash_sweep, partition, scan, CandidateFile, CorpusError, Ledger, ScanFilter};
use diffharness::execdiff::{capture_reference, self_check, verify, ExecDiffError, VerifyOptions};
use diffharness::generator::{
    gen_programs, parse_operators, write_programs, ConstantPool, DataModel, GenError, Operator, PoolPreset,
};
use diffharness::matrix::{build_matrix, run_matrix, MatrixError};
use diffharness::reducer::{default_output_path, reduce_file, ReduceError, TestCommand};
use diffharness::toolchain::{tool_version, OptionSet, ToolKind, ToolProfile, ToolchainError, Verdict};
use rayon::prelude::*;

use crate::config::Loaded;
use crate::report::{AsmFinding, CampaignReport, CombineSummary, CrashFinding, FileError, GenSummary, MatrixFinding};
use crate::{BuildArgs, CliError, Command, CorpusArgs};

const BUILDERS: &[ToolKind] = &[ToolKind::Compiler, ToolKind::Assembler];
const RUNNERS: &[ToolKind] = &[ToolKind::Runner];

/// Errors that may wrap a toolchain failure.
trait Wrapped: Display {
    fn toolchain(&self) -> Option<&ToolchainError>;

    fn is_environment(&self) -> bool {
        self.toolchain().is_some_and(ToolchainError::is_environment)
    }

    /// Misconfiguration that would repeat for every file.
    fn is_config(&self) -> bool {
        false
    }
}

impl Wrapped for ToolchainError {
    fn toolchain(&self) -> Option<&ToolchainError> {
        Some(self)
    }
}

impl Wrapped for CorpusError {
    fn toolchain(&self) -> Option<&ToolchainError> {
        match self {
            CorpusError::Toolchain(t) => Some(t),
            _ => None,
        }
    }
}

impl Wrapped for MatrixError {
    fn toolchain(&self) -> Option<&ToolchainError> {
        match self {
            MatrixError::Toolchain(t) => Some(t),
            _ => None,
        }
    }
}

impl Wrapped for ExecDiffError {
    fn toolchain(&self) -> Option<&ToolchainError> {
        match self {
            ExecDiffError::Toolchain(t) => Some(t),
            _ => None,
        }
    }
}

impl Wrapped for AsmDiffError {
    fn toolchain(&self) -> Option<&ToolchainError> {
        match self {
            AsmDiffError::Toolchain(t) => Some(t),
            _ => None,
        }
    }

    fn is_config(&self) -> bool {
        matches!(self, AsmDiffError::Config(_) | AsmDiffError::FormatMismatch)
    }
}

impl Wrapped for GenError {
    fn toolchain(&self) -> Option<&ToolchainError> {
        match self {
            GenError::ExecDiff(e) => e.toolchain(),
            _ => None,
        }
    }
}

/// Error that stops the whole subcommand.
fn fatal<E: Wrapped>(e: E) -> CliError {
    if e.is_environment() {
        CliError::Environment(e.to_string())
    } else {
        CliError::Usage(e.to_string())
    }
}

/// Per-file results: environment errors abort, the rest become report entries.
fn collect<T, E: Wrapped>(
    report: &mut CampaignReport,
    results: Vec<(PathBuf, Result<T, E>)>,
) -> Result<Vec<(PathBuf, T)>, CliError> {
    let mut ok = Vec::new();
    for (path, r) in results {
        match r {
            Ok(v) => ok.push((path, v)),
            Err(e) if e.is_environment() || e.is_config() => return Err(fatal(e)),
            Err(e) => report.errors.push(FileError {
                path: path.display().to_string(),
                message: e.to_string(),
            }),
        }
    }
    Ok(ok)
}

pub fn dispatch(command: &Command, cfg: &Loaded) -> Result<CampaignReport, CliError> {
    let mut report = CampaignReport::new(command.name());
    match command {
        Command::Scan(corpus) => {
            let files = corpus_files(corpus, cfg)?;
            report.files = names(&files);
        }
        Command::Assess {
            tool,
            cell,
            ledger,
            corpus,
        } => {
            let profile = tool_or_default(cfg, tool.as_deref())?;
            let cell = parse_cell(profile, cell.as_deref())?;
            let files = corpus_files(corpus, cfg)?;
            let ledger = open_ledger(ledger.as_ref(), cfg)?;
            let a = assess(&files, profile, &cell, ledger.as_ref()).map_err(fatal)?;
            report.files = names(&files);
            note_versions(&mut report, [profile]);
            note_verdicts(&mut report, &profile.id, a.verdicts.values());
            for (path, v) in &a.verdicts {
                if v.status.is_crash_like() {
                    report.crash_hits.push(crash_finding(path, &profile.id, v));
                }
            }
        }
        Command::Partition {
            reference,
            subject,
            reference_cell,
            subject_cell,
            ledger,
            corpus,
        } => {
            let r = cfg.tool(
                cfg.pick(reference.as_deref(), cfg.campaign.reference.as_deref(), "reference")?,
                BUILDERS,
            )?;
            let s = cfg.tool(
                cfg.pick(subject.as_deref(), cfg.campaign.subject.as_deref(), "subject")?,
                BUILDERS,
            )?;
            let (rc, sc) = (
                parse_cell(r, reference_cell.as_deref())?,
                parse_cell(s, subject_cell.as_deref())?,
            );
            let files = corpus_files(corpus, cfg)?;
            let ledger = open_ledger(ledger.as_ref(), cfg)?;
            let ra = assess(&files, r, &rc, ledger.as_ref()).map_err(fatal)?;
            let sa = assess(&files, s, &sc, ledger.as_ref()).map_err(fatal)?;
            let part = partition(&ra, &sa).map_err(fatal)?;
            report.files = names(&files);
            note_versions(&mut report, [r, s]);
            // Reference and subject may be the same profile; keep the histograms apart.
            note_verdicts(&mut report, &format!("reference:{}", r.id), ra.verdicts.values());
            note_verdicts(&mut report, &format!("subject:{}", s.id), sa.verdicts.values());
            for c in &part.any_crash {
                let v = if c.tool == r.id && ra.verdicts[&c.path].status.is_crash_like() {
                    &ra.verdicts[&c.path]
                } else {
                    &sa.verdicts[&c.path]
                };
                report.crash_hits.push(crash_finding(&c.path, &c.tool, v));
            }
            report.crash_hits.dedup();
            report.partition = Some(part);
        }
        Command::Sweep {
            tool,
            mode,
            ledger,
            corpus,
        } => {
            let profile = tool_or_default(cfg, tool.as_deref())?;
            let cells = build_matrix(profile, mode.unwrap_or(cfg.campaign.matrix_mode)).map_err(fatal)?;
            let files = corpus_files(corpus, cfg)?;
            let ledger = open_ledger(ledger.as_ref(), cfg)?;
            let hits = crash_sweep(&files, profile, &cells, ledger.as_ref()).map_err(fatal)?;
            report.files = names(&files);
            note_versions(&mut report, [profile]);
            report.crash_hits = hits
                .iter()
                .map(|h| crash_finding(&h.path, &profile.id, &h.verdict))
                .collect();
        }
        Command::Matrix { tool, mode, corpus } => {
            let profile = tool_or_default(cfg, tool.as_deref())?;
            let cells = build_matrix(profile, mode.unwrap_or(cfg.campaign.matrix_mode)).map_err(fatal)?;
            let files = corpus_files(corpus, cfg)?;
            let results = files
                .par_iter()
                .map(|f| (f.path.clone(), run_matrix(&f.path, profile, &cells)))
                .collect();
            report.files = names(&files);
            note_versions(&mut report, [profile]);
            for (_, m) in collect(&mut report, results)? {
                report
                    .matrix_discrepancies
                    .extend(m.discrepancies.iter().map(|d| MatrixFinding {
                        file: m.file.clone(),
                        tool: m.profile_id.clone(),
                        cell: d.cell.clone(),
                        status: d.status,
                        baseline: m.baseline_status,
                    }));
            }
        }
        Command::Capture { build, out, corpus } => {
            let (cc, run, cell) = reference_build(cfg, build)?;
            let files = corpus_files(corpus, cfg)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(dir)
                    .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", dir.display())))?;
            }
            let results = files
                .par_iter()
                .map(|f| {
                    let r = capture_reference(&f.path, cc, run, &cell).and_then(|a| {
                        let dest = match out {
                            Some(dir) => dir.join(f.path.file_name().unwrap_or_default()),
                            None => f.path.clone(),
                        };
                        std::fs::write(&dest, a.text()).map_err(|source| ExecDiffError::Io {
                            path: dest.clone(),
                            source,
                        })?;
                        Ok(dest)
                    });
                    (f.path.clone(), r)
                })
                .collect();
            report.files = names(&files);
            note_versions(&mut report, [cc, run]);
            report.captured = collect(&mut report, results)?
                .into_iter()
                .map(|(_, dest)| dest.display().to_string())
                .collect();
        }
        Command::Verify {
            build,
            compare_exit,
            quarantine,
            corpus,
        } => {
            let (cc, run, cell) = subject_build(cfg, build)?;
            let mut files = corpus_files(corpus, cfg)?;
            if let Some(q) = quarantine {
                let listed = read_quarantine(q)?;
                files.retain(|f| {
                    let skip = listed.contains(&f.path);
                    if skip {
                        report.quarantined.push(f.path.display().to_string());
                    }
                    !skip
                });
            }
            let opts = VerifyOptions {
                compare_exit: *compare_exit,
            };
            let results = files
                .par_iter()
                .map(|f| (f.path.clone(), verify(&f.path, cc, run, &cell, opts)))
                .collect();
            report.files = names(&files);
            note_versions(&mut report, [cc, run]);
            for (path, d) in collect(&mut report, results)? {
                report.execdiff_checked.push(path.display().to_string());
                if !d.is_match() {
                    report.execdiff_mismatches.push(d);
                }
            }
        }
        Command::Selfcheck {
            build,
            write_quarantine,
            corpus,
        } => {
            let (cc, run, cell) = reference_build(cfg, build)?;
            let files = corpus_files(corpus, cfg)?;
            let results = files
                .par_iter()
                .map(|f| (f.path.clone(), self_check(&f.path, cc, run, &cell)))
                .collect();
            report.files = names(&files);
            note_versions(&mut report, [cc, run]);
            for (path, s) in collect(&mut report, results)? {
                report.execdiff_checked.push(path.display().to_string());
                if s.quarantined {
                    report.quarantined.push(path.display().to_string());
                }
            }
            if let Some(q) = write_quarantine {
                let mut list = report.quarantined.clone();
                list.sort();
                let body: String = list.iter().map(|p| format!("{p}\n")).collect();
                std::fs::write(q, body).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", q.display())))?;
            }
        }
        Command::Gen {
            out,
            preset,
            ops,
            chunk,
            data_model,
            annotate,
            build,
        } => {
            let preset: PoolPreset = preset
                .as_deref()
                .unwrap_or(&cfg.campaign.generator_preset)
                .parse()
                .map_err(CliError::Usage)?;
            let model: DataModel = data_model.parse().map_err(CliError::Usage)?;
            let ops = match ops {
                Some(list) => parse_operators(list).map_err(fatal)?,
                None => Operator::ALL.to_vec(),
            };
            let pool = ConstantPool::preset(preset, model);
            let programs = gen_programs(&pool, &ops, *chunk).map_err(fatal)?;
            let paths = write_programs(out, &programs).map_err(fatal)?;
            let mut annotated = 0;
            if *annotate {
                let (cc, run, cell) = reference_build(cfg, build)?;
                note_versions(&mut report, [cc, run]);
                let results = paths
                    .par_iter()
                    .map(|p| {
                        let r = capture_reference(p, cc, run, &cell).and_then(|a| {
                            std::fs::write(p, a.text()).map_err(|source| ExecDiffError::Io {
                                path: p.clone(),
                                source,
                            })
                        });
                        (p.clone(), r)
                    })
                    .collect();
                annotated = collect(&mut report, results)?.len();
            }
            report.files = paths.iter().map(|p| p.display().to_string()).collect();
            report.generated = Some(GenSummary {
                output_dir: out.display().to_string(),
                files: programs.len(),
                cases: programs.iter().map(|p| p.cases.len()).sum(),
                annotated,
            });
        }
        Command::Combine { list, out, link_log } => {
            let inputs = read_input_list(list)
                .map_err(|e| CliError::Usage(format!("cannot read input list {}: {e}", list.display())))?;
            let suite = combine(&inputs);
            suite
                .write_to(out)
                .map_err(|e| CliError::Usage(format!("cannot write to {}: {e}", out.display())))?;
            let collisions = match link_log {
                Some(log) => {
                    let text = std::fs::read(log)
                        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", log.display())))?;
                    link_collision_report(&String::from_utf8_lossy(&text), &default_collision_patterns())
                }
                None => Vec::new(),
            };
            report.files = suite.units.iter().map(|u| u.path.display().to_string()).collect();
            report.combined = Some(CombineSummary {
                output_dir: out.display().to_string(),
                units: suite.units.iter().map(|u| u.unit_name.clone()).collect(),
                skipped: suite.skipped.clone(),
                collisions,
            });
        }
        Command::Reduce {
            input,
            test,
            output,
            granularity,
            budget,
            test_timeout,
        } => {
            let output = output.clone().unwrap_or_else(|| default_output_path(input));
            let mut cmd = TestCommand::new(test.clone());
            cmd.timeout = std::time::Duration::from_secs_f64(*test_timeout);
            let summary = reduce_file(input, &output, &cmd, *granularity, *budget).map_err(|e| match e {
                ReduceError::NotReproducible => CliError::Usage(format!(
                    "{}: the test command does not report the full input as interesting",
                    input.display()
                )),
                other => CliError::Usage(other.to_string()),
            })?;
            report.files = vec![input.display().to_string()];
            report.reduction = Some(summary);
        }
        Command::Asmdiff {
            a,
            b,
            assembler,
            cell,
            rules,
            mask,
            no_mask,
            section,
            word_size,
            endian,
            record,
        } => {
            let format = WordFormat {
                size: *word_size,
                endianness: *endian,
            };
            format.validate().map_err(fatal)?;
            let rule_set = match rules {
                Some(p) => DialectRuleSet::from_json(&read_text(p)?).map_err(fatal)?,
                None => DialectRuleSet::default(),
            };
            let ctx = AsmContext {
                rules: rules.as_ref().map(|_| rule_set.compile()).transpose().map_err(fatal)?,
                assembler: assembler.as_deref().map(|id| cfg.tool(id, BUILDERS)).transpose()?,
                cell: None,
                section,
                format,
            };
            let ctx = AsmContext {
                cell: ctx.assembler.map(|p| parse_cell(p, cell.as_deref())).transpose()?,
                ..ctx
            };
            let table = match mask {
                Some(p) => MaskTable::from_json(&read_text(p)?).map_err(fatal)?,
                None => MaskTable::default(),
            };
            if let Some(p) = ctx.assembler {
                note_versions(&mut report, [p]);
            }
            if let Some(dest) = record {
                let unit = ctx.load(a).map_err(fatal)?;
                Baseline::record(&unit, section, &table, &rule_set, ctx.assembler)
                    .and_then(|bl| bl.write(dest))
                    .map_err(fatal)?;
                report.files.push(a.display().to_string());
            }
            if let Some(b) = b {
                let pairs = asm_pairs(a, b)?;
                let results = pairs
                    .par_iter()
                    .map(|(x, y)| {
                        let r = ctx.load(x).and_then(|ux| {
                            let uy = ctx.load(y)?;
                            if *no_mask {
                                compare_unmasked(&ux, &uy)
                            } else {
                                compare(&ux, &uy, &table)
                            }
                        });
                        (x.clone(), r.map(|rep| (y.clone(), rep)))
                    })
                    .collect();
                for (x, (y, rep)) in collect(&mut report, results)? {
                    let (xs, ys) = (x.display().to_string(), y.display().to_string());
                    report.files.push(xs.clone());
                    report.asmdiff_compared.push(format!("{xs} {ys}"));
                    if rep.verdict != AsmVerdict::Equal {
                        report.asmdiff_differences.push(AsmFinding {
                            a: xs,
                            b: ys,
                            report: rep,
                        });
                    }
                }
            } else if record.is_none() {
                return Err(CliError::Usage("asmdiff needs a second input or --record".into()));
            }
        }
        Command::Report { from } => {
            let text = read_text(from)?;
            report = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{} is not a campaign report: {e}", from.display())))?;
        }
    }
    Ok(report)
}

struct AsmContext<'a> {
    rules: Option<CompiledRules>,
    assembler: Option<&'a ToolProfile>,
    cell: Option<OptionSet>,
    section: &'a str,
    format: WordFormat,
}

impl AsmContext<'_> {
    /// Baseline files and ELF objects are read directly; anything else is
    /// source for the assembler.
    fn load(&self, path: &Path) -> Result<AsmUnit, AsmDiffError> {
        let bytes = std::fs::read(path).map_err(|source| AsmDiffError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if bytes.starts_with(BASELINE_MAGIC) {
            return Ok(Baseline::parse(&bytes, path)?.to_unit());
        }
        if bytes.starts_with(b"\x7fELF") {
            return AsmUnit::from_object(path, self.section, self.format);
        }
        let Some(asm) = self.assembler else {
            return Err(AsmDiffError::Config(format!(
                "{} is neither an object nor a baseline and no --assembler was given",
                path.display()
            )));
        };
        let cell = self.cell.clone().unwrap_or_else(|| asm.default_options());
        assemble_unit(path, self.rules.as_ref(), asm, &cell, self.section, self.format)
    }
}

/// One pair for two files; same-named files for two directories.
fn asm_pairs(a: &Path, b: &Path) -> Result<Vec<(PathBuf, PathBuf)>, CliError> {
    if !(a.is_dir() && b.is_dir()) {
        return Ok(vec![(a.to_path_buf(), b.to_path_buf())]);
    }
    let mut names: Vec<PathBuf> = std::fs::read_dir(a)
        .map_err(|e| CliError::Usage(format!("cannot list {}: {e}", a.display())))?
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_ok_and(|t| t.is_file()))
        .map(|e| e.path())
        .collect();
    names.sort();
    Ok(names
        .into_iter()
        .map(|x| {
            let y = b.join(x.file_name().unwrap_or_default());
            (x, y)
        })
        .collect())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn read_quarantine(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    Ok(read_text(path)?
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(PathBuf::from)
        .collect())
}

fn names(files: &[CandidateFile]) -> Vec<String> {
    files.iter().map(|f| f.path.display().to_string()).collect()
}

/// Explicit files win; otherwise every root (flag or configuration) is scanned.
fn corpus_files(args: &CorpusArgs, cfg: &Loaded) -> Result<Vec<CandidateFile>, CliError> {
    let mut files: Vec<CandidateFile> = args
        .files
        .iter()
        .map(|p| CandidateFile::from_path(p).map_err(fatal))
        .collect::<Result<_, _>>()?;
    let roots = if !args.roots.is_empty() {
        args.roots.clone()
    } else if args.files.is_empty() {
        cfg.campaign.corpus_roots.clone()
    } else {
        Vec::new()
    };
    let exts = if args.extensions.is_empty() {
        &cfg.campaign.extensions
    } else {
        &args.extensions
    };
    let mut filter = ScanFilter::extensions(exts);
    for g in cfg.campaign.ignore.iter().chain(&args.ignore) {
        filter = filter.ignoring(g);
    }
    for root in &roots {
        files.extend(scan(root, &filter).map_err(fatal)?);
    }
    if files.is_empty() && args.files.is_empty() && roots.is_empty() {
        return Err(CliError::Usage(
            "no input files: pass files, --root, or configure corpus_roots".into(),
        ));
    }
    files.sort_by(|x, y| x.path.cmp(&y.path));
    files.dedup_by(|x, y| x.path == y.path);
    Ok(files)
}

fn open_ledger(flag: Option<&PathBuf>, cfg: &Loaded) -> Result<Option<Ledger>, CliError> {
    flag.or(cfg.campaign.ledger.as_ref())
        .map(|p| Ledger::open(p).map_err(fatal))
        .transpose()
}

fn parse_cell(profile: &ToolProfile, key: Option<&str>) -> Result<OptionSet, CliError> {
    let cell = match key {
        Some(k) => OptionSet::parse_key(k).map_err(fatal)?,
        None => profile.default_options(),
    };
    profile.check_options(&cell).map_err(fatal)?;
    Ok(cell)
}

/// `--tool`, else the configured subject, else the reference.
fn tool_or_default<'a>(cfg: &'a Loaded, tool: Option<&'a str>) -> Result<&'a ToolProfile, CliError> {
    let fallback = cfg.campaign.subject.as_deref().or(cfg.campaign.reference.as_deref());
    cfg.tool(cfg.pick(tool, fallback, "tool (--tool)")?, BUILDERS)
}

fn reference_build<'a>(
    cfg: &'a Loaded,
    b: &'a BuildArgs,
) -> Result<(&'a ToolProfile, &'a ToolProfile, OptionSet), CliError> {
    let cc = cfg.tool(
        cfg.pick(
            b.compiler.as_deref(),
            cfg.campaign.reference.as_deref(),
            "reference compiler",
        )?,
        BUILDERS,
    )?;
    let run = cfg.tool(
        cfg.pick(b.runner.as_deref(), cfg.reference_runner(), "runner")?,
        RUNNERS,
    )?;
    Ok((cc, run, parse_cell(cc, b.cell.as_deref())?))
}

fn subject_build<'a>(
    cfg: &'a Loaded,
    b: &'a BuildArgs,
) -> Result<(&'a ToolProfile, &'a ToolProfile, OptionSet), CliError> {
    let cc = cfg.tool(
        cfg.pick(
            b.compiler.as_deref(),
            cfg.campaign.subject.as_deref(),
            "subject compiler",
        )?,
        BUILDERS,
    )?;
    let run = cfg.tool(cfg.pick(b.runner.as_deref(), cfg.subject_runner(), "runner")?, RUNNERS)?;
    Ok((cc, run, parse_cell(cc, b.cell.as_deref())?))
}

fn note_versions<'a>(report: &mut CampaignReport, tools: impl IntoIterator<Item = &'a ToolProfile>) {
    for t in tools {
        if !report.tool_versions.contains_key(&t.id) {
            report.tool_versions.insert(t.id.clone(), tool_version(t));
        }
    }
}

fn note_verdicts<'a>(report: &mut CampaignReport, key: &str, verdicts: impl Iterator<Item = &'a Verdict>) {
    let mut hist: BTreeMap<String, usize> = BTreeMap::new();
    for v in verdicts {
        *hist.entry(v.status.to_string()).or_default() += 1;
    }
    report.verdicts.insert(key.to_string(), hist);
}

fn crash_finding(path: &Path, tool: &str, v: &Verdict) -> CrashFinding {
    CrashFinding {
        path: path.display().to_string(),
        tool: tool.to_string(),
        cell: v.cell.canonical_key(),
        status: v.status,
        diagnostics: v.diagnostics.clone(),
    }
}
