//! Sequential replication until the mean accuracy is pinned down.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvergenceParams {
    /// Largest acceptable confidence-interval half-width.
    pub dn: f64,
    pub confidence: f64,
    /// Replications before the first check.
    pub n_min: usize,
    /// Consecutive passing checks required.
    pub k_limit: usize,
    /// Hard cap on replications.
    pub n_max: usize,
}

impl Default for ConvergenceParams {
    fn default() -> Self {
        ConvergenceParams {
            dn: 0.02,
            confidence: 0.99,
            n_min: 3,
            k_limit: 2,
            n_max: 50,
        }
    }
}

impl ConvergenceParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dn > 0.0 && self.dn.is_finite()) {
            return Err(format!("dn must be positive, got {}", self.dn));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(format!("confidence must lie in (0, 1), got {}", self.confidence));
        }
        if self.n_min < 2 {
            return Err(format!("n_min must be at least 2, got {}", self.n_min));
        }
        if self.k_limit < 1 {
            return Err("k_limit must be at least 1".into());
        }
        if self.n_max < self.n_min {
            return Err(format!("n_max {} is below n_min {}", self.n_max, self.n_min));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
    pub stddev: f64,
    pub n: usize,
    /// Half-width at the last check; infinite if no check happened.
    pub half_width: f64,
    pub converged: bool,
    pub accuracies: Vec<f64>,
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn sample_stddev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    // Shifted by the first value so that a constant series gives exactly 0.
    let shifted: Vec<f64> = values.iter().map(|v| v - values[0]).collect();
    let m = mean(&shifted);
    let ss: f64 = shifted.iter().map(|v| (v - m).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Two-sided Student-t confidence-interval half-width of the mean.
pub fn half_width(values: &[f64], confidence: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.5 + confidence / 2.0);
    t * sample_stddev(values) / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Continue,
    Converged,
    /// `n_max` reached without convergence.
    Exhausted,
}

/// Feeds replications one at a time and says when to stop.
#[derive(Debug, Clone)]
pub struct ConvergenceTracker {
    params: ConvergenceParams,
    values: Vec<f64>,
    streak: usize,
    half_width: f64,
    done: Option<Step>,
}

impl ConvergenceTracker {
    pub fn new(params: ConvergenceParams) -> Self {
        ConvergenceTracker {
            params,
            values: Vec::new(),
            streak: 0,
            half_width: f64::INFINITY,
            done: None,
        }
    }

    pub fn params(&self) -> &ConvergenceParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_done(&self) -> bool {
        self.done.is_some()
    }

    /// Records one replication. Checks start with the first replication
    /// after `n_min`.
    pub fn push(&mut self, accuracy: f64) -> Step {
        if let Some(step) = self.done {
            return step;
        }
        self.values.push(accuracy);
        let n = self.values.len();
        if n > self.params.n_min {
            self.half_width = half_width(&self.values, self.params.confidence);
            if self.half_width <= self.params.dn {
                self.streak += 1;
            } else {
                self.streak = 0;
            }
            if self.streak >= self.params.k_limit {
                self.done = Some(Step::Converged);
                return Step::Converged;
            }
        }
        if n >= self.params.n_max {
            self.done = Some(Step::Exhausted);
            return Step::Exhausted;
        }
        Step::Continue
    }

    pub fn report(&self) -> ConvergenceReport {
        ConvergenceReport {
            mean: mean(&self.values),
            stddev: sample_stddev(&self.values),
            n: self.values.len(),
            half_width: self.half_width,
            converged: self.done == Some(Step::Converged),
            accuracies: self.values.clone(),
        }
    }
}

#[derive(Debug, Error)]
#[error("replication {} failed: {source}", partial.n + 1)]
pub struct ConvergeError<E: std::error::Error + 'static> {
    #[source]
    pub source: E,
    /// Replications completed before the failure.
    pub partial: ConvergenceReport,
}

/// Calls `runner(replication_index)` until the tracker stops.
pub fn converge<E, F>(params: ConvergenceParams, mut runner: F) -> Result<ConvergenceReport, ConvergeError<E>>
where
    E: std::error::Error + 'static,
    F: FnMut(usize) -> Result<f64, E>,
{
    let mut tracker = ConvergenceTracker::new(params);
    loop {
        match runner(tracker.len()) {
            Ok(acc) => {
                if tracker.push(acc) != Step::Continue {
                    return Ok(tracker.report());
                }
            }
            Err(source) => {
                return Err(ConvergeError {
                    source,
                    partial: tracker.report(),
                })
            }
        }
    }
}
