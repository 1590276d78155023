//! Campaign configuration: a tool list plus the campaign fields.
//!
//! ```json
//! {
//!   "tools": [ { "id": "gcc", "kind": "compiler", "command_template": ["gcc", "{options}", "{input}", "-o", "{output}"] } ],
//!   "campaign": { "reference": "gcc", "subject": "clang", "runners": ["native"], "corpus_roots": ["corpus"] }
//! }
//! ```

use std::path::{Path, PathBuf};

use diffharness::generator::PoolPreset;
use diffharness::matrix::MatrixMode;
use diffharness::toolchain::{ToolKind, ToolProfile, ToolSet};
use serde::{Deserialize, Serialize};

use crate::CliError;

fn default_matrix_mode() -> MatrixMode {
    MatrixMode::Compromise
}

fn default_preset() -> String {
    "default".to_string()
}

fn default_extensions() -> Vec<String> {
    vec!["c".to_string()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub reference: Option<String>,
    #[serde(default)]
    pub subject: Option<String>,
    /// First entry runs reference builds, last entry runs subject builds.
    #[serde(default)]
    pub runners: Vec<String>,
    #[serde(default)]
    pub corpus_roots: Vec<PathBuf>,
    #[serde(default = "default_matrix_mode")]
    pub matrix_mode: MatrixMode,
    #[serde(default = "default_preset")]
    pub generator_preset: String,
    #[serde(default)]
    pub report: Option<PathBuf>,
    #[serde(default = "default_extensions")]
    pub extensions: Vec<String>,
    #[serde(default)]
    pub ignore: Vec<String>,
    #[serde(default)]
    pub ledger: Option<PathBuf>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            reference: None,
            subject: None,
            runners: Vec::new(),
            corpus_roots: Vec::new(),
            matrix_mode: default_matrix_mode(),
            generator_preset: default_preset(),
            report: None,
            extensions: default_extensions(),
            ignore: Vec::new(),
            ledger: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub tools: Vec<ToolProfile>,
    #[serde(default)]
    pub campaign: CampaignConfig,
}

#[derive(Debug, Clone, Default)]
pub struct Loaded {
    pub tools: ToolSet,
    pub campaign: CampaignConfig,
    /// Directory relative paths in the file are resolved against.
    pub base: PathBuf,
}

impl Loaded {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: PathBuf) -> Result<Self, CliError> {
        let file: ConfigFile = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let tools = ToolSet { tools: file.tools };
        tools.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let mut campaign = file.campaign;
        for root in &mut campaign.corpus_roots {
            *root = resolve(&base, root);
        }
        for p in [&mut campaign.report, &mut campaign.ledger].into_iter().flatten() {
            *p = resolve(&base, p);
        }
        let loaded = Loaded { tools, campaign, base };
        loaded.validate()?;
        Ok(loaded)
    }

    /// Every profile id the campaign names must exist with the right kind.
    pub fn validate(&self) -> Result<(), CliError> {
        let c = &self.campaign;
        for id in c.reference.iter().chain(&c.subject) {
            self.tool(id, &[ToolKind::Compiler, ToolKind::Assembler])?;
        }
        for id in &c.runners {
            self.tool(id, &[ToolKind::Runner])?;
        }
        c.generator_preset.parse::<PoolPreset>().map_err(CliError::Config)?;
        Ok(())
    }

    pub fn tool(&self, id: &str, kinds: &[ToolKind]) -> Result<&ToolProfile, CliError> {
        let t = self
            .tools
            .get(id)
            .ok_or_else(|| CliError::Config(format!("unknown tool id `{id}`")))?;
        if !kinds.contains(&t.kind) {
            return Err(CliError::Config(format!(
                "tool `{id}` is a {:?}, expected one of {kinds:?}",
                t.kind
            )));
        }
        Ok(t)
    }

    /// `explicit`, else the campaign field named `what`.
    pub fn pick<'a>(
        &'a self,
        explicit: Option<&'a str>,
        fallback: Option<&'a str>,
        what: &str,
    ) -> Result<&'a str, CliError> {
        explicit
            .or(fallback)
            .ok_or_else(|| CliError::Usage(format!("no {what} given on the command line or in the configuration")))
    }

    pub fn reference_runner(&self) -> Option<&str> {
        self.campaign.runners.first().map(String::as_str)
    }

    pub fn subject_runner(&self) -> Option<&str> {
        self.campaign.runners.last().map(String::as_str)
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
