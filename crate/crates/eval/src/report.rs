use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::harness::{SampleRecord, SweepKind, SweepOutput};
use crate::EvalError;

pub const RESULTS_FILE: &str = "results.csv";
pub const SAMPLES_FILE: &str = "samples.jsonl";
pub const FEWSHOT_PLOT_FILE: &str = "fewshot_plot.csv";
pub const TEMPERATURE_PLOT_FILE: &str = "temperature_plot.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub results: PathBuf,
    pub samples: PathBuf,
    pub plot: Option<PathBuf>,
}

#[derive(Serialize)]
struct SampleLine<'a> {
    config_id: &'a str,
    few_shot: usize,
    temperature: f64,
    replication: usize,
    seed: u64,
    #[serde(flatten)]
    sample: &'a SampleRecord,
}

/// Writes the results table, per-sample records and, for sweeps, plot data
/// into `dir`. Output depends only on `output`, so identical runs produce
/// identical files.
pub fn emit_report(output: &SweepOutput, dir: &Path) -> Result<ReportFiles, EvalError> {
    std::fs::create_dir_all(dir)?;

    let results = dir.join(RESULTS_FILE);
    let mut w = csv::Writer::from_path(&results)?;
    w.write_record(["config_id", "few_shot", "temperature", "mode", "mean", "stddev", "n_reps", "converged", "error"])?;
    for r in &output.rows {
        w.write_record([
            r.config_id.clone(),
            r.few_shot.to_string(),
            r.temperature.to_string(),
            r.mode.to_string(),
            format!("{:.6}", r.mean),
            format!("{:.6}", r.stddev),
            r.n_reps.to_string(),
            r.converged.to_string(),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;

    let samples = dir.join(SAMPLES_FILE);
    let mut f = std::io::BufWriter::new(std::fs::File::create(&samples)?);
    for rep in &output.replications {
        for s in &rep.samples {
            let line = SampleLine {
                config_id: &rep.config_id,
                few_shot: rep.few_shot,
                temperature: rep.temperature,
                replication: rep.replication,
                seed: rep.seed,
                sample: s,
            };
            serde_json::to_writer(&mut f, &line).map_err(std::io::Error::other)?;
            f.write_all(b"\n")?;
        }
    }
    f.flush()?;

    let ok_rows = || output.rows.iter().filter(|r| r.error.is_none());
    let plot = match output.kind {
        SweepKind::FewShot => {
            let path = dir.join(FEWSHOT_PLOT_FILE);
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["n", "accuracy", "model_label"])?;
            for r in ok_rows() {
                w.write_record([r.few_shot.to_string(), format!("{:.6}", r.mean), output.label.clone()])?;
            }
            w.flush()?;
            Some(path)
        }
        SweepKind::Temperature => {
            let path = dir.join(TEMPERATURE_PLOT_FILE);
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["temperature", "mean", "stddev", "model_label"])?;
            for r in ok_rows() {
                w.write_record([
                    r.temperature.to_string(),
                    format!("{:.6}", r.mean),
                    format!("{:.6}", r.stddev),
                    output.label.clone(),
                ])?;
            }
            w.flush()?;
            Some(path)
        }
        SweepKind::Run | SweepKind::Converge => None,
    };

    Ok(ReportFiles { results, samples, plot })
}
