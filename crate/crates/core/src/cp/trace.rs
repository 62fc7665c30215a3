use std::io::Write;
use std::time::Duration;

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    ConvergedByGradient,
    ConvergedByObjective,
    MaxIters,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::ConvergedByGradient => "converged-by-gradient",
            SolveStatus::ConvergedByObjective => "converged-by-objective",
            SolveStatus::MaxIters => "max-iters",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One accepted iteration. Iteration 0 is the starting point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub objective: f64,
    pub grad_norm: f64,
    pub alpha: f64,
    pub ls_evals: usize,
}

#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub records: Vec<TraceRecord>,
    pub status: SolveStatus,
    /// Not part of equality: wall time differs between identical runs.
    pub wall_time: Duration,
}

impl PartialEq for SolveTrace {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records && self.status == other.status
    }
}

impl SolveTrace {
    pub(crate) fn new() -> Self {
        Self {
            records: Vec::new(),
            status: SolveStatus::MaxIters,
            wall_time: Duration::ZERO,
        }
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }

    /// Number of iterations after the starting point.
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn is_monotone(&self) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].objective <= w[0].objective)
    }

    /// CSV with header `iter,objective,grad_norm,alpha,ls_evals`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "iter,objective,grad_norm,alpha,ls_evals")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.iter, r.objective, r.grad_norm, r.alpha, r.ls_evals
            )?;
        }
        w.flush()?;
        Ok(())
    }
}
