use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use tokio::task::JoinSet;

use crate::config::{RunConfig, ValidationMode};
use crate::EvalError;
use crnforge_core::datagen::{import_jsonl, SamplePair};
use crnforge_core::equivalence::{score_answer, MatchMode};
use crnforge_core::gcd::reply_is_grammatical;
use crnforge_core::prompt::{build_messages, FewShotPair, PromptPack};
use crnforge_core::stats::{ConvergenceReport, ConvergenceTracker, Step};
use crnforge_llm::{few_shot_from_jsonl, ChatBackend, CompletionRequest};

/// Outcome for one test description in one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub correct: bool,
    /// The endpoint call failed; the sample counts as incorrect.
    pub failed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Whether a model could be extracted from the reply.
    pub extracted: bool,
    /// Present only with grammar-check validation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grammar_complete: Option<bool>,
    pub matched: usize,
    pub missing: usize,
    pub extra: usize,
    pub answer: Option<String>,
    /// Wall time of the endpoint call. Not written to reports.
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub config_id: String,
    pub few_shot: usize,
    pub temperature: f64,
    pub replication: usize,
    pub seed: u64,
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub failed: usize,
    pub samples: Vec<SampleRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceOutcome {
    pub report: ConvergenceReport,
    pub replications: Vec<ReplicationResult>,
}

/// One line of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config_id: String,
    pub few_shot: usize,
    pub temperature: f64,
    pub mode: MatchMode,
    pub mean: f64,
    pub stddev: f64,
    pub n_reps: usize,
    pub converged: bool,
    /// Set when the row could not be run; the other numbers are then zero.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Run,
    Converge,
    FewShot,
    Temperature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub kind: SweepKind,
    pub label: String,
    pub rows: Vec<SweepRow>,
    pub replications: Vec<ReplicationResult>,
}

pub struct Harness {
    cfg: RunConfig,
    backend: Arc<dyn ChatBackend>,
    pairs: Arc<Vec<SamplePair>>,
    pool: Vec<FewShotPair>,
}

impl Harness {
    /// `pool` holds every available few-shot example; a run with `n` shots
    /// uses its first `n`.
    pub fn new(
        cfg: RunConfig,
        backend: Arc<dyn ChatBackend>,
        pairs: Vec<SamplePair>,
        pool: Vec<FewShotPair>,
    ) -> Result<Harness, EvalError> {
        cfg.validate()?;
        if pairs.is_empty() {
            return Err(EvalError::Dataset("the test set is empty".into()));
        }
        let bad = PromptPack::default().with_few_shot(pool.clone()).invalid_examples();
        if let Some((i, msg)) = bad.first() {
            return Err(EvalError::Dataset(format!("few-shot example {i} has no valid model: {msg}")));
        }
        Ok(Harness {
            cfg,
            backend,
            pairs: Arc::new(pairs),
            pool,
        })
    }

    /// Reads the dataset and few-shot files named by `cfg`.
    pub fn from_config(cfg: RunConfig, backend: Arc<dyn ChatBackend>) -> Result<Harness, EvalError> {
        let read = |p: &std::path::Path| {
            std::fs::read_to_string(p).map_err(|e| EvalError::Dataset(format!("{}: {e}", p.display())))
        };
        let pairs = import_jsonl(&read(&cfg.dataset)?).map_err(|e| EvalError::Dataset(e.to_string()))?;
        let pool = match &cfg.few_shot_file {
            Some(path) => {
                let text = read(path)?;
                let n = text.lines().filter(|l| !l.trim().is_empty()).count();
                few_shot_from_jsonl(&text, n).map_err(|e| EvalError::Dataset(e.to_string()))?
            }
            None => Vec::new(),
        };
        Harness::new(cfg, backend, pairs, pool)
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn pairs(&self) -> &[SamplePair] {
        &self.pairs
    }

    pub fn pool_len(&self) -> usize {
        self.pool.len()
    }

    fn pack(&self, few_shot: usize) -> Result<PromptPack, EvalError> {
        if few_shot > self.pool.len() {
            return Err(EvalError::Config(format!(
                "{few_shot} few-shot examples requested but only {} available",
                self.pool.len()
            )));
        }
        Ok(self.cfg.base_pack().with_few_shot(self.pool[..few_shot].to_vec()))
    }

    fn config_id(&self, few_shot: usize, temperature: f64) -> String {
        format!("{}-n{few_shot}-t{temperature}", self.cfg.id)
    }

    /// Sends every test description once, in dataset order, and scores the
    /// replies. Replication `r` uses seed `seed + r`.
    pub async fn run_replication(
        &self,
        few_shot: usize,
        temperature: f64,
        replication: usize,
    ) -> Result<ReplicationResult, EvalError> {
        let pack = self.pack(few_shot)?;
        let seed = self.cfg.seed.wrapping_add(replication as u64);
        let requests: Vec<CompletionRequest> = self
            .pairs
            .iter()
            .map(|p| CompletionRequest {
                messages: build_messages(&pack, &[], &p.description),
                temperature,
                seed: Some(seed),
                max_tokens: self.cfg.max_tokens,
            })
            .collect();

        let mode = self.cfg.mode;
        let check = self.cfg.validation == ValidationMode::GrammarCheck;
        let samples = if self.cfg.parallel {
            let mut set = JoinSet::new();
            for (index, request) in requests.into_iter().enumerate() {
                let backend = self.backend.clone();
                let pairs = self.pairs.clone();
                set.spawn(async move { score_one(&*backend, &pairs[index], index, request, mode, check).await });
            }
            let mut out = Vec::with_capacity(self.pairs.len());
            while let Some(joined) = set.join_next().await {
                out.push(joined.map_err(|e| EvalError::Config(format!("sample task failed: {e}")))?);
            }
            out.sort_by_key(|s| s.index);
            out
        } else {
            let mut out = Vec::with_capacity(self.pairs.len());
            for (index, request) in requests.into_iter().enumerate() {
                out.push(score_one(&*self.backend, &self.pairs[index], index, request, mode, check).await);
            }
            out
        };

        let correct = samples.iter().filter(|s| s.correct).count();
        let failed = samples.iter().filter(|s| s.failed).count();
        if failed > 0 {
            tracing::warn!(failed, replication, "endpoint failures counted as incorrect");
        }
        Ok(ReplicationResult {
            config_id: self.config_id(few_shot, temperature),
            few_shot,
            temperature,
            replication,
            seed,
            accuracy: correct as f64 / samples.len() as f64,
            correct,
            total: samples.len(),
            failed,
            samples,
        })
    }

    /// Runs replications until the mean accuracy converges or the
    /// replication budget is spent.
    pub async fn converge(&self, few_shot: usize, temperature: f64) -> Result<ConvergenceOutcome, EvalError> {
        let mut tracker = ConvergenceTracker::new(self.cfg.convergence);
        let mut replications = Vec::new();
        loop {
            let rep = self.run_replication(few_shot, temperature, tracker.len()).await?;
            let step = tracker.push(rep.accuracy);
            tracing::info!(replication = rep.replication, accuracy = rep.accuracy, ?step, "replication done");
            replications.push(rep);
            if step != Step::Continue {
                break;
            }
        }
        Ok(ConvergenceOutcome {
            report: tracker.report(),
            replications,
        })
    }

    fn single_row(&self, rep: &ReplicationResult) -> SweepRow {
        SweepRow {
            config_id: rep.config_id.clone(),
            few_shot: rep.few_shot,
            temperature: rep.temperature,
            mode: self.cfg.mode,
            mean: rep.accuracy,
            stddev: 0.0,
            n_reps: 1,
            converged: true,
            error: None,
        }
    }

    fn converged_row(&self, few_shot: usize, temperature: f64, out: &ConvergenceOutcome) -> SweepRow {
        SweepRow {
            config_id: self.config_id(few_shot, temperature),
            few_shot,
            temperature,
            mode: self.cfg.mode,
            mean: out.report.mean,
            stddev: out.report.stddev,
            n_reps: out.report.n,
            converged: out.report.converged,
            error: None,
        }
    }

    fn failed_row(&self, few_shot: usize, temperature: f64, err: &EvalError) -> SweepRow {
        SweepRow {
            config_id: self.config_id(few_shot, temperature),
            few_shot,
            temperature,
            mode: self.cfg.mode,
            mean: 0.0,
            stddev: 0.0,
            n_reps: 0,
            converged: false,
            error: Some(err.to_string()),
        }
    }

    /// One replication at the configured few-shot count and temperature.
    pub async fn run(&self) -> Result<SweepOutput, EvalError> {
        let rep = self.run_replication(self.cfg.few_shot, self.cfg.temperature, 0).await?;
        Ok(self.output(SweepKind::Run, vec![self.single_row(&rep)], vec![rep]))
    }

    /// Convergence at the configured few-shot count and temperature.
    pub async fn run_converge(&self) -> Result<SweepOutput, EvalError> {
        let out = self.converge(self.cfg.few_shot, self.cfg.temperature).await?;
        let row = self.converged_row(self.cfg.few_shot, self.cfg.temperature, &out);
        Ok(self.output(SweepKind::Converge, vec![row], out.replications))
    }

    /// One replication per few-shot count at temperature 0. A count that
    /// cannot run yields an error row and the sweep continues.
    pub async fn sweep_fewshot(&self, counts: &[usize]) -> SweepOutput {
        let mut rows = Vec::with_capacity(counts.len());
        let mut reps = Vec::new();
        for &n in counts {
            match self.run_replication(n, 0.0, 0).await {
                Ok(rep) => {
                    rows.push(self.single_row(&rep));
                    reps.push(rep);
                }
                Err(e) => rows.push(self.failed_row(n, 0.0, &e)),
            }
        }
        self.output(SweepKind::FewShot, rows, reps)
    }

    /// Convergence per temperature at the configured few-shot count.
    /// Temperature 0 is deterministic and runs a single replication.
    pub async fn sweep_temperature(&self, temperatures: &[f64]) -> SweepOutput {
        let n = self.cfg.few_shot;
        let mut rows = Vec::with_capacity(temperatures.len());
        let mut reps = Vec::new();
        for &t in temperatures {
            if t == 0.0 {
                match self.run_replication(n, t, 0).await {
                    Ok(rep) => {
                        rows.push(self.single_row(&rep));
                        reps.push(rep);
                    }
                    Err(e) => rows.push(self.failed_row(n, t, &e)),
                }
            } else {
                match self.converge(n, t).await {
                    Ok(out) => {
                        rows.push(self.converged_row(n, t, &out));
                        reps.extend(out.replications);
                    }
                    Err(e) => rows.push(self.failed_row(n, t, &e)),
                }
            }
        }
        self.output(SweepKind::Temperature, rows, reps)
    }

    fn output(&self, kind: SweepKind, rows: Vec<SweepRow>, replications: Vec<ReplicationResult>) -> SweepOutput {
        SweepOutput {
            kind,
            label: self.cfg.label.clone(),
            rows,
            replications,
        }
    }
}

async fn score_one(
    backend: &dyn ChatBackend,
    pair: &SamplePair,
    index: usize,
    request: CompletionRequest,
    mode: MatchMode,
    check_grammar: bool,
) -> SampleRecord {
    let start = Instant::now();
    let reply = backend.complete(&request).await;
    let elapsed = start.elapsed();
    match reply {
        Ok(answer) => {
            let report = score_answer(&pair.network, &answer, mode);
            SampleRecord {
                index,
                correct: report.as_ref().is_some_and(|r| r.verdict),
                failed: false,
                error: None,
                extracted: report.is_some(),
                grammar_complete: check_grammar.then(|| reply_is_grammatical(&answer)),
                matched: report.as_ref().map_or(0, |r| r.matched_pairs.len()),
                missing: report.as_ref().map_or(pair.network.len(), |r| r.missing_gt.len()),
                extra: report.as_ref().map_or(0, |r| r.extra_ans.len()),
                answer: Some(answer),
                elapsed,
            }
        }
        Err(e) => {
            tracing::warn!(index, error = %e, "endpoint call failed");
            SampleRecord {
                index,
                correct: false,
                failed: true,
                error: Some(e.to_string()),
                extracted: false,
                grammar_complete: check_grammar.then_some(false),
                matched: 0,
                missing: pair.network.len(),
                extra: 0,
                answer: None,
                elapsed,
            }
        }
    }
}
