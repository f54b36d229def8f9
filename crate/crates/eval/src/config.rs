use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::EvalError;
use crnforge_core::equivalence::MatchMode;
use crnforge_core::prompt::{FewShotStrategy, PromptPack, DEFAULT_SYSTEM_PROMPT, INSTRUCTION_PREFIX, KINMODGPT_SYSTEM_PROMPT};
use crnforge_core::stats::ConvergenceParams;
use crnforge_core::wire::MAX_TEMPERATURE;
use crnforge_llm::EndpointConfig;

/// Few-shot counts of the default sweep.
pub const DEFAULT_FEW_SHOT_COUNTS: [usize; 10] = [0, 1, 5, 10, 20, 30, 40, 50, 60, 70];
/// Temperatures of the default sweep.
pub const DEFAULT_TEMPERATURES: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationMode {
    #[default]
    Off,
    /// Record whether each answer's fenced block is a complete grammar
    /// sentence. Does not change verdicts.
    GrammarCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptStyle {
    #[default]
    Default,
    Kinmodgpt,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Identifies this configuration in result tables.
    pub id: String,
    /// Model name shown in plot data.
    pub label: String,
    /// Test pairs, JSONL in either export style.
    pub dataset: PathBuf,
    /// Source of few-shot pairs; the first `few_shot` records are used.
    pub few_shot_file: Option<PathBuf>,
    pub few_shot: usize,
    pub strategy: FewShotStrategy,
    pub prompt: PromptStyle,
    /// Overrides `prompt` when set.
    pub system_prompt: Option<String>,
    pub instruction_prefix: String,
    pub temperature: f64,
    pub mode: MatchMode,
    pub validation: ValidationMode,
    /// Replication `r` sends seed `seed + r`.
    pub seed: u64,
    /// Send the samples of one replication concurrently.
    pub parallel: bool,
    pub max_tokens: Option<u32>,
    pub endpoint: EndpointConfig,
    pub convergence: ConvergenceParams,
    pub few_shot_counts: Vec<usize>,
    pub temperatures: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            id: "run".into(),
            label: "model".into(),
            dataset: PathBuf::from("test.jsonl"),
            few_shot_file: None,
            few_shot: 0,
            strategy: FewShotStrategy::HistoryPrepend,
            prompt: PromptStyle::Default,
            system_prompt: None,
            instruction_prefix: INSTRUCTION_PREFIX.into(),
            temperature: 0.0,
            mode: MatchMode::PaperLiteral,
            validation: ValidationMode::Off,
            seed: 0,
            parallel: false,
            max_tokens: None,
            endpoint: EndpointConfig::default(),
            convergence: ConvergenceParams::default(),
            few_shot_counts: DEFAULT_FEW_SHOT_COUNTS.to_vec(),
            temperatures: DEFAULT_TEMPERATURES.to_vec(),
        }
    }
}

impl RunConfig {
    /// Reads a TOML file. Relative paths inside are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<RunConfig, EvalError> {
        let text = std::fs::read_to_string(path).map_err(|e| EvalError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = RunConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.dataset.is_relative() {
            cfg.dataset = base.join(&cfg.dataset);
        }
        if let Some(f) = cfg.few_shot_file.as_mut().filter(|f| f.is_relative()) {
            *f = base.join(&*f);
        }
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<RunConfig, EvalError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| EvalError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let temp_ok = |t: f64| (0.0..=MAX_TEMPERATURE).contains(&t);
        if !temp_ok(self.temperature) || !self.temperatures.iter().copied().all(temp_ok) {
            return Err(EvalError::Config(format!("temperatures must lie in [0, {MAX_TEMPERATURE}]")));
        }
        if (self.few_shot > 0 || self.few_shot_counts.iter().any(|&n| n > 0)) && self.few_shot_file.is_none() {
            // Sweeps may still run their zero-shot rows.
            if self.few_shot > 0 {
                return Err(EvalError::Config("few_shot > 0 needs few_shot_file".into()));
            }
        }
        self.convergence.validate().map_err(EvalError::Config)?;
        self.endpoint.validate().map_err(|e| EvalError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn system_prompt_text(&self) -> String {
        match (&self.system_prompt, self.prompt) {
            (Some(text), _) => text.clone(),
            (None, PromptStyle::Default) => DEFAULT_SYSTEM_PROMPT.into(),
            (None, PromptStyle::Kinmodgpt) => KINMODGPT_SYSTEM_PROMPT.into(),
            (None, PromptStyle::None) => String::new(),
        }
    }

    /// Prompt pack without examples.
    pub fn base_pack(&self) -> PromptPack {
        PromptPack {
            system_prompt: self.system_prompt_text(),
            few_shot: Vec::new(),
            strategy: self.strategy,
            instruction_prefix: self.instruction_prefix.clone(),
        }
    }
}
