//! Monte Carlo studies: sweep one variable over its grid, run seeded trials
//! per cell (in parallel, with seeds pre-assigned), and aggregate per-cell
//! statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::pipeline::{run_pipeline, TrialOutcome};
use super::trial_seeds;
use crate::error::{Error, Result};

/// The three named sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StudyKind {
    /// Five (sigma_du, sigma_dy) pairs at fixed period and data length.
    Noise,
    /// Data length over {1000, 2000, 4000, 8000} at fixed period and noise.
    DataLength,
    /// Period over {2, 3, 4, 6, 8} at fixed data length and noise.
    Period,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Noise => "noise",
            Self::DataLength => "ndata",
            Self::Period => "period",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "noise" => Ok(Self::Noise),
            "ndata" => Ok(Self::DataLength),
            "period" => Ok(Self::Period),
            other => Err(Error::InvalidArgument(format!(
                "unknown study {other:?}; expected noise|ndata|period"
            ))),
        }
    }
}

/// One grid point of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub period: usize,
    pub data_length: usize,
    pub sigma_du: f64,
    pub sigma_dy: f64,
}

impl StudyCell {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        Self {
            period: config.period,
            data_length: config.data_length,
            sigma_du: config.process_noise.std_dev,
            sigma_dy: config.observation_noise.std_dev,
        }
    }

    fn apply(&self, base: &ExperimentConfig) -> ExperimentConfig {
        let mut config = base.clone();
        config.period = self.period;
        config.data_length = self.data_length;
        config.process_noise.std_dev = self.sigma_du;
        config.observation_noise.std_dev = self.sigma_dy;
        config
    }
}

/// The grid a study sweeps; values not swept come from the base config.
pub fn study_grid(kind: StudyKind, base: &ExperimentConfig) -> Vec<StudyCell> {
    let anchor = StudyCell::from_config(base);
    match kind {
        StudyKind::Noise => [
            (0.01, 0.005),
            (0.05, 0.025),
            (0.10, 0.050),
            (0.00, 0.050),
            (0.10, 0.000),
        ]
        .iter()
        .map(|&(sigma_du, sigma_dy)| StudyCell {
            sigma_du,
            sigma_dy,
            ..anchor
        })
        .collect(),
        StudyKind::DataLength => [1000, 2000, 4000, 8000]
            .iter()
            .map(|&data_length| StudyCell {
                data_length,
                ..anchor
            })
            .collect(),
        StudyKind::Period => [2, 3, 4, 6, 8]
            .iter()
            .map(|&period| StudyCell { period, ..anchor })
            .collect(),
    }
}

/// Aggregated statistics for one cell. Standard deviations are sample
/// standard deviations and absent when fewer than two trials completed;
/// every statistic is absent when no trial completed.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub period: usize,
    pub data_length: usize,
    pub sigma_du: f64,
    pub sigma_dy: f64,
    pub trials: usize,
    pub failures: usize,
    /// Mean and spread of the total vertex error.
    pub mean_total_error: Option<f64>,
    pub std_total_error: Option<f64>,
    /// Per-vertex-index standard deviation of `E_i` across trials, averaged
    /// over the indices.
    pub avg_std_vertex_error: Option<f64>,
    /// Pooled per-vertex error statistics over all completed trials.
    pub min_vertex_error: Option<f64>,
    pub max_vertex_error: Option<f64>,
    pub mean_vertex_error: Option<f64>,
    pub std_vertex_error: Option<f64>,
    pub mean_fit_conventional: Option<f64>,
    pub std_fit_conventional: Option<f64>,
    pub mean_fit_polytope: Option<f64>,
    pub std_fit_polytope: Option<f64>,
    /// Mean of the per-trial improvement `fit_polytope - fit_conventional`
    /// (mean FIT over channels).
    pub mean_fit_improvement: Option<f64>,
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    Some(var.sqrt())
}

/// Aggregates one cell's outcomes (delegates to [`summarize_rows`], the
/// single aggregation path shared with CSV re-aggregation).
pub fn summarize_cell(cell: &StudyCell, outcomes: &[TrialOutcome]) -> CellSummary {
    let rows: Vec<super::report::TrialRow> =
        outcomes.iter().map(super::report::TrialRow::from).collect();
    summarize_rows(cell, &rows)
}

/// Aggregates one cell's flat trial rows; failed rows count toward
/// `failures` and are excluded from every statistic.
pub fn summarize_rows(cell: &StudyCell, rows: &[super::report::TrialRow]) -> CellSummary {
    let completed: Vec<_> = rows.iter().filter(|r| r.is_ok()).collect();
    let failures = rows.len() - completed.len();

    let totals: Vec<f64> = completed.iter().filter_map(|r| r.total_error).collect();
    let pooled: Vec<f64> = completed
        .iter()
        .flat_map(|r| r.vertex_errors.iter().copied())
        .collect();
    let fit_conv: Vec<f64> = completed.iter().filter_map(|r| r.fit_conv_mean).collect();
    let fit_pso: Vec<f64> = completed.iter().filter_map(|r| r.fit_pso_mean).collect();
    let improvements: Vec<f64> = completed
        .iter()
        .filter_map(|r| Some(r.fit_pso_mean? - r.fit_conv_mean?))
        .collect();

    // Std of E_i per vertex index across trials, averaged over indices.
    let avg_std_vertex_error = if completed.len() >= 2 {
        let per_index: Vec<f64> = (0..cell.period)
            .filter_map(|i| {
                let column: Vec<f64> = completed
                    .iter()
                    .filter_map(|r| r.vertex_errors.get(i).copied())
                    .collect();
                sample_std(&column)
            })
            .collect();
        mean(&per_index)
    } else {
        None
    };

    CellSummary {
        period: cell.period,
        data_length: cell.data_length,
        sigma_du: cell.sigma_du,
        sigma_dy: cell.sigma_dy,
        trials: rows.len(),
        failures,
        mean_total_error: mean(&totals),
        std_total_error: sample_std(&totals),
        avg_std_vertex_error,
        min_vertex_error: pooled.iter().copied().reduce(f64::min),
        max_vertex_error: pooled.iter().copied().reduce(f64::max),
        mean_vertex_error: mean(&pooled),
        std_vertex_error: sample_std(&pooled),
        mean_fit_conventional: mean(&fit_conv),
        std_fit_conventional: sample_std(&fit_conv),
        mean_fit_polytope: mean(&fit_pso),
        std_fit_polytope: sample_std(&fit_pso),
        mean_fit_improvement: mean(&improvements),
    }
}

/// Results of a sweep: per-cell outcomes in seed order plus their summaries.
#[derive(Debug, Clone)]
pub struct StudyResults {
    pub label: String,
    pub cells: Vec<StudyCell>,
    /// `outcomes[cell][trial]`, trials in pre-assigned seed order.
    pub outcomes: Vec<Vec<TrialOutcome>>,
    pub summaries: Vec<CellSummary>,
    pub output_dim: usize,
}

impl StudyResults {
    pub fn completed_trials(&self) -> usize {
        self.outcomes
            .iter()
            .flatten()
            .filter(|o| o.is_completed())
            .count()
    }

    pub fn total_trials(&self) -> usize {
        self.outcomes.iter().map(Vec::len).sum()
    }
}

/// Runs `trials` seeded trials in every cell of the given grid. Trials run
/// in parallel; seeds are derived from the master seed and the cell contents
/// beforehand, and results are merged in seed order, so the outcome is
/// independent of scheduling.
pub fn run_study_cells(
    base: &ExperimentConfig,
    label: &str,
    cells: &[StudyCell],
    trials: usize,
) -> Result<StudyResults> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if cells.is_empty() {
        return Err(Error::Config("study grid is empty".into()));
    }
    let plant = base.plant.resolve()?;
    let output_dim = plant.output_dim();

    // Reject cells whose data length cannot support the identification
    // settings before any computation.
    for cell in cells {
        let config = cell.apply(base);
        config.validate()?;
    }

    let jobs: Vec<(usize, ExperimentConfig, u64)> = cells
        .iter()
        .enumerate()
        .flat_map(|(cell_idx, cell)| {
            let config = cell.apply(base);
            trial_seeds(base.master_seed, cell, trials)
                .into_iter()
                .map(move |seed| (cell_idx, config.clone(), seed))
                .collect::<Vec<_>>()
        })
        .collect();

    let flat: Vec<(usize, TrialOutcome)> = jobs
        .par_iter()
        .map(|(cell_idx, config, seed)| (*cell_idx, run_pipeline(config, *seed)))
        .collect();

    let mut outcomes: Vec<Vec<TrialOutcome>> = vec![Vec::with_capacity(trials); cells.len()];
    for (cell_idx, outcome) in flat {
        outcomes[cell_idx].push(outcome);
    }
    let summaries = cells
        .iter()
        .zip(&outcomes)
        .map(|(cell, cell_outcomes)| summarize_cell(cell, cell_outcomes))
        .collect();

    Ok(StudyResults {
        label: label.to_string(),
        cells: cells.to_vec(),
        outcomes,
        summaries,
        output_dim,
    })
}

/// Runs a named study over its full grid.
pub fn run_study(base: &ExperimentConfig, kind: StudyKind, trials: usize) -> Result<StudyResults> {
    let cells = study_grid(kind, base);
    run_study_cells(base, kind.name(), &cells, trials)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::NoiseParams;

    fn small_config(master_seed: u64) -> ExperimentConfig {
        let mut config = ExperimentConfig::reference(master_seed);
        config.period = 2;
        config.data_length = 1000;
        config.validation_length = 200;
        config
    }

    #[test]
    fn grids_follow_the_study_definitions() {
        let base = ExperimentConfig::reference(1);
        let noise = study_grid(StudyKind::Noise, &base);
        assert_eq!(noise.len(), 5);
        assert!(noise.iter().all(|c| c.period == 6 && c.data_length == 3000));
        assert_eq!((noise[2].sigma_du, noise[2].sigma_dy), (0.10, 0.050));

        let ndata = study_grid(StudyKind::DataLength, &base);
        assert_eq!(
            ndata.iter().map(|c| c.data_length).collect::<Vec<_>>(),
            vec![1000, 2000, 4000, 8000]
        );

        let period = study_grid(StudyKind::Period, &base);
        assert_eq!(
            period.iter().map(|c| c.period).collect::<Vec<_>>(),
            vec![2, 3, 4, 6, 8]
        );
    }

    #[test]
    fn study_results_are_deterministic_and_ordered() {
        let base = small_config(42);
        let cells = [StudyCell::from_config(&base)];
        let a = run_study_cells(&base, "unit", &cells, 2).unwrap();
        let b = run_study_cells(&base, "unit", &cells, 2).unwrap();
        assert_eq!(a.total_trials(), 2);
        let seeds_a: Vec<u64> = a.outcomes[0].iter().map(TrialOutcome::seed).collect();
        let seeds_b: Vec<u64> = b.outcomes[0].iter().map(TrialOutcome::seed).collect();
        assert_eq!(seeds_a, seeds_b);
        assert_eq!(seeds_a, trial_seeds(42, &cells[0], 2));
        for (x, y) in a.outcomes[0].iter().zip(&b.outcomes[0]) {
            let (x, y) = (x.report().unwrap(), y.report().unwrap());
            assert_eq!(x.vertex_errors, y.vertex_errors);
            assert_eq!(x.fit_polytope, y.fit_polytope);
        }
    }

    #[test]
    fn single_trial_summary_has_no_spread_columns() {
        let base = small_config(17);
        let cells = [StudyCell::from_config(&base)];
        let results = run_study_cells(&base, "unit", &cells, 1).unwrap();
        let summary = &results.summaries[0];
        assert_eq!(summary.trials, 1);
        assert_eq!(summary.failures, 0);
        assert!(summary.mean_total_error.is_some());
        assert!(summary.std_total_error.is_none());
        assert!(summary.avg_std_vertex_error.is_none());
    }

    #[test]
    fn summaries_count_failures_and_exclude_them() {
        let base = small_config(3);
        let cell = StudyCell::from_config(&base);
        let mut outcomes: Vec<TrialOutcome> = trial_seeds(3, &cell, 2)
            .into_iter()
            .map(|seed| run_pipeline(&base, seed))
            .collect();
        outcomes.push(TrialOutcome::Failed(crate::harness::pipeline::FailedTrial {
            seed: 999,
            period: cell.period,
            data_length: cell.data_length,
            sigma_du: cell.sigma_du,
            sigma_dy: cell.sigma_dy,
            reason: "synthetic".into(),
        }));
        let summary = summarize_cell(&cell, &outcomes);
        assert_eq!(summary.trials, 3);
        assert_eq!(summary.failures, 1);
        // Mean over the two completed trials only.
        let manual: f64 = outcomes
            .iter()
            .filter_map(TrialOutcome::report)
            .map(|r| r.total_error)
            .sum::<f64>()
            / 2.0;
        assert_eq!(summary.mean_total_error, Some(manual));
    }

    #[test]
    fn invalid_cells_are_rejected_before_running() {
        let mut base = small_config(5);
        base.data_length = 20_000; // base is fine; the cell override is not
        let cells = [StudyCell {
            period: 2,
            data_length: 50,
            sigma_du: 0.1,
            sigma_dy: 0.05,
        }];
        assert!(matches!(
            run_study_cells(&base, "unit", &cells, 1),
            Err(Error::Config(_))
        ));
        let _ = NoiseParams::standard_normal();
    }
}
