//! Per-iteration records, the metrics CSV and comparison tables.

use std::fmt;

use crate::exploration::Strategy;
use crate::session::FailureReason;

/// What happened at one record. `Init` marks the visual-only iteration 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordOutcome {
    Init,
    Contact,
    Failure(FailureReason),
}

impl RecordOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecordOutcome::Init => "init",
            RecordOutcome::Contact => "contact",
            RecordOutcome::Failure(_) => "failure",
        }
    }
}

/// One row of a session's metrics history.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Chamfer distance between estimate and truth clouds, meters.
    pub chamfer_m: f64,
    pub cumulative_failures: usize,
    pub n_attractors: usize,
    /// Candidate vertex of this iteration; `None` at iteration 0.
    pub selected_vertex: Option<usize>,
    pub outcome: RecordOutcome,
}

/// Renders records as the metrics CSV. Floats use shortest round-trip
/// formatting, so identical runs produce byte-identical output.
pub fn records_to_csv(records: &[IterationRecord]) -> String {
    let mut s = String::from(
        "iteration,chamfer_mm,cumulative_failures,n_attractors,selected_vertex,outcome\n",
    );
    for r in records {
        let vertex = r
            .selected_vertex
            .map(|v| v.to_string())
            .unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.iteration,
            r.chamfer_m * 1000.0,
            r.cumulative_failures,
            r.n_attractors,
            vertex,
            r.outcome.as_str()
        ));
    }
    s
}

/// Aggregates for one strategy across seeds.
#[derive(Debug, Clone, Copy)]
pub struct StrategyStats {
    pub strategy: Strategy,
    pub chamfer_mm_mean: f64,
    pub chamfer_mm_std: f64,
    pub failures_mean: f64,
    pub failures_std: f64,
}

/// Paired strategy comparison over a set of seeds.
#[derive(Debug, Clone)]
pub struct ComparisonSummary {
    pub object: String,
    pub seeds: Vec<u64>,
    pub stats: Vec<StrategyStats>,
}

impl ComparisonSummary {
    pub fn get(&self, strategy: Strategy) -> &StrategyStats {
        self.stats
            .iter()
            .find(|s| s.strategy == strategy)
            .expect("both strategies present")
    }

    /// `metric,strategy,mean,std` rows: one per strategy and metric.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,strategy,mean,std\n");
        for stats in &self.stats {
            s.push_str(&format!(
                "chamfer_mm,{},{},{}\n",
                stats.strategy.as_str(),
                stats.chamfer_mm_mean,
                stats.chamfer_mm_std
            ));
        }
        for stats in &self.stats {
            s.push_str(&format!(
                "failures,{},{},{}\n",
                stats.strategy.as_str(),
                stats.failures_mean,
                stats.failures_std
            ));
        }
        s
    }
}

impl fmt::Display for ComparisonSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "object {:?}, {} seed(s): chamfer (mm) and contact failures",
            self.object,
            self.seeds.len()
        )?;
        for s in &self.stats {
            writeln!(
                f,
                "  {:<6} chamfer {:7.3} ± {:6.3}   failures {:6.2} ± {:5.2}",
                s.strategy.as_str(),
                s.chamfer_mm_mean,
                s.chamfer_mm_std,
                s.failures_mean,
                s.failures_std
            )?;
        }
        Ok(())
    }
}
