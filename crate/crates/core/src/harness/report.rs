//! Report emission and re-aggregation.
//!
//! Two formats: CSV (`trials.csv` with one row per trial plus `summary.csv`
//! with one row per cell) and structured text (`report.txt` carrying both).
//! Float fields use the shortest round-trip decimal representation, so
//! re-parsing a CSV reproduces the exact binary values and re-aggregation
//! matches the in-memory aggregates bit for bit. Report files contain no
//! wall-clock data: reruns with the same master seed are byte-identical.
//! The `wall_ms` column is reserved in the schema and left empty; timings
//! live on [`crate::harness::pipeline::TrialReport`] for callers to log.

use std::io::Write;
use std::path::{Path, PathBuf};

use super::pipeline::TrialOutcome;
use super::study::{summarize_rows, CellSummary, StudyCell, StudyResults};
use crate::error::{Error, Result};

/// Output format of [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
}

impl ReportFormat {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "csv" => Ok(Self::Csv),
            "text" => Ok(Self::Text),
            other => Err(Error::InvalidArgument(format!(
                "unknown format {other:?}; expected csv|text"
            ))),
        }
    }
}

/// Flat per-trial record: exactly the science content of one `trials.csv`
/// row. Failed trials keep their cell coordinates and a failure status.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub seed: u64,
    pub period: usize,
    pub data_length: usize,
    pub sigma_du: f64,
    pub sigma_dy: f64,
    pub vertex_errors: Vec<f64>,
    pub total_error: Option<f64>,
    pub fit_conv_mean: Option<f64>,
    pub fit_pso_mean: Option<f64>,
    pub fit_conv: Vec<f64>,
    pub fit_pso: Vec<f64>,
    pub error_at_lambda: Option<f64>,
    pub lambda: Vec<f64>,
    pub structure_residual: Option<f64>,
    pub condition_estimate: Option<f64>,
    pub status: String,
}

impl TrialRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn cell(&self) -> StudyCell {
        StudyCell {
            period: self.period,
            data_length: self.data_length,
            sigma_du: self.sigma_du,
            sigma_dy: self.sigma_dy,
        }
    }
}

impl From<&TrialOutcome> for TrialRow {
    fn from(outcome: &TrialOutcome) -> Self {
        match outcome {
            TrialOutcome::Completed(r) => TrialRow {
                seed: r.seed,
                period: r.period,
                data_length: r.data_length,
                sigma_du: r.sigma_du,
                sigma_dy: r.sigma_dy,
                vertex_errors: r.vertex_errors.clone(),
                total_error: Some(r.total_error),
                fit_conv_mean: Some(r.fit_conventional.mean_fit),
                fit_pso_mean: Some(r.fit_polytope.mean_fit),
                fit_conv: r.fit_conventional.per_output_fit.clone(),
                fit_pso: r.fit_polytope.per_output_fit.clone(),
                error_at_lambda: Some(r.error_at_lambda),
                lambda: r.lambda_star.as_slice().to_vec(),
                structure_residual: Some(r.structure_residual),
                condition_estimate: Some(r.condition_estimate),
                status: "ok".to_string(),
            },
            TrialOutcome::Failed(f) => TrialRow {
                seed: f.seed,
                period: f.period,
                data_length: f.data_length,
                sigma_du: f.sigma_du,
                sigma_dy: f.sigma_dy,
                vertex_errors: Vec::new(),
                total_error: None,
                fit_conv_mean: None,
                fit_pso_mean: None,
                fit_conv: Vec::new(),
                fit_pso: Vec::new(),
                error_at_lambda: None,
                lambda: Vec::new(),
                structure_residual: None,
                condition_estimate: None,
                status: format!("failed: {}", f.reason),
            },
        }
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Column header for a trials CSV padded to `max_period` vertices and
/// `output_dim` channels.
fn trials_header(max_period: usize, output_dim: usize) -> Vec<String> {
    let mut header = vec![
        "seed".to_string(),
        "N".to_string(),
        "N_data".to_string(),
        "sigma_du".to_string(),
        "sigma_dy".to_string(),
    ];
    header.extend((0..max_period).map(|i| format!("E_{i}")));
    header.push("total_E".to_string());
    header.push("fit_conv_mean".to_string());
    header.push("fit_pso_mean".to_string());
    header.extend((1..=output_dim).map(|c| format!("fit_conv_y{c}")));
    header.extend((1..=output_dim).map(|c| format!("fit_pso_y{c}")));
    header.push("E_lambda_star".to_string());
    header.extend((0..max_period).map(|i| format!("lambda_{i}")));
    header.push("structure_residual".to_string());
    header.push("condition_estimate".to_string());
    header.push("status".to_string());
    header.push("wall_ms".to_string());
    header
}

fn padded(values: &[f64], len: usize) -> Vec<String> {
    (0..len)
        .map(|i| values.get(i).copied().map(fmt_f64).unwrap_or_default())
        .collect()
}

/// Writes one row per trial in the fixed column order.
pub fn write_trials_csv(
    rows: &[TrialRow],
    max_period: usize,
    output_dim: usize,
    path: &Path,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    writer
        .write_record(trials_header(max_period, output_dim))
        .map_err(|e| Error::Parse(e.to_string()))?;
    for row in rows {
        let mut record: Vec<String> = vec![
            row.seed.to_string(),
            row.period.to_string(),
            row.data_length.to_string(),
            fmt_f64(row.sigma_du),
            fmt_f64(row.sigma_dy),
        ];
        record.extend(padded(&row.vertex_errors, max_period));
        record.push(fmt_opt(row.total_error));
        record.push(fmt_opt(row.fit_conv_mean));
        record.push(fmt_opt(row.fit_pso_mean));
        record.extend(padded(&row.fit_conv, output_dim));
        record.extend(padded(&row.fit_pso, output_dim));
        record.push(fmt_opt(row.error_at_lambda));
        record.extend(padded(&row.lambda, max_period));
        record.push(fmt_opt(row.structure_residual));
        record.push(fmt_opt(row.condition_estimate));
        record.push(row.status.clone());
        record.push(String::new()); // wall_ms: reserved, kept reproducible
        writer
            .write_record(&record)
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}

const SUMMARY_HEADER: [&str; 19] = [
    "study",
    "N",
    "N_data",
    "sigma_du",
    "sigma_dy",
    "trials",
    "failures",
    "mu_total_E",
    "sigma_total_E",
    "avg_sigma_E_i",
    "min_E_i",
    "max_E_i",
    "mean_E_i",
    "std_E_i",
    "fit_conv_mean",
    "fit_conv_std",
    "fit_pso_mean",
    "fit_pso_std",
    "mean_fit_improvement",
];

/// Writes the per-cell aggregate block.
pub fn write_summary_csv(label: &str, summaries: &[CellSummary], path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    writer
        .write_record(SUMMARY_HEADER)
        .map_err(|e| Error::Parse(e.to_string()))?;
    for s in summaries {
        let record: Vec<String> = vec![
            label.to_string(),
            s.period.to_string(),
            s.data_length.to_string(),
            fmt_f64(s.sigma_du),
            fmt_f64(s.sigma_dy),
            s.trials.to_string(),
            s.failures.to_string(),
            fmt_opt(s.mean_total_error),
            fmt_opt(s.std_total_error),
            fmt_opt(s.avg_std_vertex_error),
            fmt_opt(s.min_vertex_error),
            fmt_opt(s.max_vertex_error),
            fmt_opt(s.mean_vertex_error),
            fmt_opt(s.std_vertex_error),
            fmt_opt(s.mean_fit_conventional),
            fmt_opt(s.std_fit_conventional),
            fmt_opt(s.mean_fit_polytope),
            fmt_opt(s.std_fit_polytope),
            fmt_opt(s.mean_fit_improvement),
        ];
        writer
            .write_record(&record)
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}

fn opt_display(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "n/a".to_string())
}

/// Writes the structured-text report: per-trial lines plus per-cell
/// aggregate blocks. Deterministic given the results.
pub fn write_text_report(
    label: &str,
    cells: &[StudyCell],
    rows_per_cell: &[Vec<TrialRow>],
    summaries: &[CellSummary],
    path: &Path,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("study: {label}\n"));
    out.push_str(&format!("cells: {}\n\n", cells.len()));
    for ((cell, rows), summary) in cells.iter().zip(rows_per_cell).zip(summaries) {
        out.push_str(&format!(
            "[cell] N={} N_data={} sigma_du={} sigma_dy={}\n",
            cell.period, cell.data_length, cell.sigma_du, cell.sigma_dy
        ));
        for row in rows {
            if row.is_ok() {
                out.push_str(&format!(
                    "  trial seed={} status=ok total_E={} fit_conv={} fit_pso={} E_lambda_star={} residual={} lambda={:?}\n",
                    row.seed,
                    opt_display(row.total_error),
                    opt_display(row.fit_conv_mean),
                    opt_display(row.fit_pso_mean),
                    opt_display(row.error_at_lambda),
                    opt_display(row.structure_residual),
                    row.lambda,
                ));
            } else {
                out.push_str(&format!("  trial seed={} {}\n", row.seed, row.status));
            }
        }
        out.push_str(&format!(
            "  aggregate: trials={} failures={}\n",
            summary.trials, summary.failures
        ));
        out.push_str(&format!(
            "    mu(total_E)={} sigma(total_E)={} avg_sigma(E_i)={}\n",
            opt_display(summary.mean_total_error),
            opt_display(summary.std_total_error),
            opt_display(summary.avg_std_vertex_error),
        ));
        out.push_str(&format!(
            "    E_i min={} max={} mean={} std={}\n",
            opt_display(summary.min_vertex_error),
            opt_display(summary.max_vertex_error),
            opt_display(summary.mean_vertex_error),
            opt_display(summary.std_vertex_error),
        ));
        out.push_str(&format!(
            "    fit conv={} pso={} improvement={}\n\n",
            opt_display(summary.mean_fit_conventional),
            opt_display(summary.mean_fit_polytope),
            opt_display(summary.mean_fit_improvement),
        ));
    }
    let mut file = std::fs::File::create(path).map_err(io_err(path))?;
    file.write_all(out.as_bytes()).map_err(io_err(path))?;
    Ok(())
}

/// Emits the report files for a study into `dir` and returns the written
/// paths: `trials.csv` + `summary.csv` for CSV, `report.txt` for text.
pub fn emit_report(results: &StudyResults, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    if results.outcomes.iter().all(Vec::is_empty) {
        return Err(Error::InvalidArgument("no trial results to report".into()));
    }
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rows_per_cell: Vec<Vec<TrialRow>> = results
        .outcomes
        .iter()
        .map(|outcomes| outcomes.iter().map(TrialRow::from).collect())
        .collect();
    let max_period = results.cells.iter().map(|c| c.period).max().unwrap_or(1);

    match format {
        ReportFormat::Csv => {
            let trials_path = dir.join("trials.csv");
            let flat: Vec<TrialRow> = rows_per_cell.iter().flatten().cloned().collect();
            write_trials_csv(&flat, max_period, results.output_dim, &trials_path)?;
            let summary_path = dir.join("summary.csv");
            write_summary_csv(&results.label, &results.summaries, &summary_path)?;
            Ok(vec![trials_path, summary_path])
        }
        ReportFormat::Text => {
            let path = dir.join("report.txt");
            write_text_report(
                &results.label,
                &results.cells,
                &rows_per_cell,
                &results.summaries,
                &path,
            )?;
            Ok(vec![path])
        }
    }
}

fn parse_opt(field: &str, name: &str) -> Result<Option<f64>> {
    if field.is_empty() {
        return Ok(None);
    }
    field
        .parse::<f64>()
        .map(Some)
        .map_err(|e| Error::Parse(format!("column {name}: {e}")))
}

fn parse_num<T: std::str::FromStr>(field: &str, name: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    field
        .parse::<T>()
        .map_err(|e| Error::Parse(format!("column {name}: {e}")))
}

/// Reads a `trials.csv` back into rows (plus the output dimension implied by
/// the header), for re-aggregation.
pub fn read_trials_csv(path: &Path) -> Result<(Vec<TrialRow>, usize)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e.to_string()),
    })?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let count_prefixed = |prefix: &str| header.iter().filter(|h| h.starts_with(prefix)).count();
    let max_period = count_prefixed("E_") - usize::from(header.iter().any(|h| h == "E_lambda_star"));
    let output_dim = count_prefixed("fit_conv_y");
    let expected = trials_header(max_period, output_dim);
    if header != expected {
        return Err(Error::Parse(format!(
            "unexpected trials header: {header:?}"
        )));
    }

    let take_block = |fields: &[String], start: usize, len: usize| -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for (k, field) in fields[start..start + len].iter().enumerate() {
            match parse_opt(field, &header[start + k])? {
                Some(v) => out.push(v),
                None => break,
            }
        }
        Ok(out)
    };

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let fields: Vec<String> = record.iter().map(str::to_string).collect();
        if fields.len() != expected.len() {
            return Err(Error::Parse(format!(
                "row has {} fields, expected {}",
                fields.len(),
                expected.len()
            )));
        }
        let mut at = 0usize;
        let mut next = |n: usize| {
            let start = at;
            at += n;
            start
        };
        let seed: u64 = parse_num(&fields[next(1)], "seed")?;
        let period: usize = parse_num(&fields[next(1)], "N")?;
        let data_length: usize = parse_num(&fields[next(1)], "N_data")?;
        let sigma_du: f64 = parse_num(&fields[next(1)], "sigma_du")?;
        let sigma_dy: f64 = parse_num(&fields[next(1)], "sigma_dy")?;
        let vertex_errors = take_block(&fields, next(max_period), max_period)?;
        let total_error = parse_opt(&fields[next(1)], "total_E")?;
        let fit_conv_mean = parse_opt(&fields[next(1)], "fit_conv_mean")?;
        let fit_pso_mean = parse_opt(&fields[next(1)], "fit_pso_mean")?;
        let fit_conv = take_block(&fields, next(output_dim), output_dim)?;
        let fit_pso = take_block(&fields, next(output_dim), output_dim)?;
        let error_at_lambda = parse_opt(&fields[next(1)], "E_lambda_star")?;
        let lambda = take_block(&fields, next(max_period), max_period)?;
        let structure_residual = parse_opt(&fields[next(1)], "structure_residual")?;
        let condition_estimate = parse_opt(&fields[next(1)], "condition_estimate")?;
        let status = fields[next(1)].clone();
        let _wall = next(1);
        rows.push(TrialRow {
            seed,
            period,
            data_length,
            sigma_du,
            sigma_dy,
            vertex_errors,
            total_error,
            fit_conv_mean,
            fit_pso_mean,
            fit_conv,
            fit_pso,
            error_at_lambda,
            lambda,
            structure_residual,
            condition_estimate,
            status,
        });
    }
    Ok((rows, output_dim))
}

/// Groups parsed rows by their cell (first-appearance order) and recomputes
/// the per-cell aggregates; the backbone of the `report` verb.
pub fn reaggregate(rows: Vec<TrialRow>) -> (Vec<StudyCell>, Vec<Vec<TrialRow>>, Vec<CellSummary>) {
    let mut cells: Vec<StudyCell> = Vec::new();
    let mut grouped: Vec<Vec<TrialRow>> = Vec::new();
    for row in rows {
        let cell = row.cell();
        match cells.iter().position(|c| {
            c.period == cell.period
                && c.data_length == cell.data_length
                && c.sigma_du == cell.sigma_du
                && c.sigma_dy == cell.sigma_dy
        }) {
            Some(idx) => grouped[idx].push(row),
            None => {
                cells.push(cell);
                grouped.push(vec![row]);
            }
        }
    }
    let summaries = cells
        .iter()
        .zip(&grouped)
        .map(|(cell, rows)| summarize_rows(cell, rows))
        .collect();
    (cells, grouped, summaries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{ExperimentConfig, NoiseParams};
    use crate::harness::study::{run_study_cells, StudyCell};

    fn tiny_results(master_seed: u64) -> StudyResults {
        let mut config = ExperimentConfig::reference(master_seed);
        config.period = 2;
        config.data_length = 1000;
        config.validation_length = 150;
        config.process_noise = NoiseParams::new(0.0, 0.05);
        config.observation_noise = NoiseParams::new(0.0, 0.02);
        let cells = [StudyCell::from_config(&config)];
        run_study_cells(&config, "unit", &cells, 2).unwrap()
    }

    #[test]
    fn single_trial_csv_has_one_data_row() {
        let mut config = ExperimentConfig::reference(5);
        config.period = 2;
        config.data_length = 1000;
        config.validation_length = 150;
        let cells = [StudyCell::from_config(&config)];
        let results = run_study_cells(&config, "unit", &cells, 1).unwrap();
        let dir = std::env::temp_dir().join("polysid-report-single");
        let _ = std::fs::remove_dir_all(&dir);
        let paths = emit_report(&results, &dir, ReportFormat::Csv).unwrap();
        let text = std::fs::read_to_string(&paths[0]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2, "header plus one row");
        assert!(lines[0].starts_with("seed,N,N_data,sigma_du,sigma_dy,E_0,E_1,total_E"));
        assert!(lines[0].ends_with("status,wall_ms"));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn reports_are_byte_identical_across_reruns() {
        let dir_a = std::env::temp_dir().join("polysid-report-a");
        let dir_b = std::env::temp_dir().join("polysid-report-b");
        for dir in [&dir_a, &dir_b] {
            let _ = std::fs::remove_dir_all(dir);
        }
        emit_report(&tiny_results(88), &dir_a, ReportFormat::Csv).unwrap();
        emit_report(&tiny_results(88), &dir_b, ReportFormat::Csv).unwrap();
        for name in ["trials.csv", "summary.csv"] {
            let a = std::fs::read(dir_a.join(name)).unwrap();
            let b = std::fs::read(dir_b.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between reruns");
        }
        emit_report(&tiny_results(88), &dir_a, ReportFormat::Text).unwrap();
        emit_report(&tiny_results(88), &dir_b, ReportFormat::Text).unwrap();
        let a = std::fs::read(dir_a.join("report.txt")).unwrap();
        let b = std::fs::read(dir_b.join("report.txt")).unwrap();
        assert_eq!(a, b);
        for dir in [&dir_a, &dir_b] {
            std::fs::remove_dir_all(dir).unwrap();
        }
    }

    #[test]
    fn csv_round_trip_reaggregates_exactly() {
        let results = tiny_results(31);
        let dir = std::env::temp_dir().join("polysid-report-roundtrip");
        let _ = std::fs::remove_dir_all(&dir);
        let paths = emit_report(&results, &dir, ReportFormat::Csv).unwrap();
        let (rows, output_dim) = read_trials_csv(&paths[0]).unwrap();
        assert_eq!(output_dim, 2);
        assert_eq!(rows.len(), 2);
        let (cells, _, summaries) = reaggregate(rows);
        assert_eq!(cells.len(), 1);
        assert_eq!(summaries, results.summaries, "aggregates must match exactly");
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn failed_rows_round_trip() {
        use crate::harness::pipeline::{FailedTrial, TrialOutcome};
        let failed = TrialOutcome::Failed(FailedTrial {
            seed: 4,
            period: 3,
            data_length: 800,
            sigma_du: 0.1,
            sigma_dy: 0.0,
            reason: "degenerate data: synthetic".into(),
        });
        let row = TrialRow::from(&failed);
        let dir = std::env::temp_dir().join("polysid-report-failed");
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trials.csv");
        write_trials_csv(&[row.clone()], 3, 2, &path).unwrap();
        let (rows, _) = read_trials_csv(&path).unwrap();
        assert_eq!(rows, vec![row]);
        assert!(!rows[0].is_ok());
        let (_, _, summaries) = reaggregate(rows);
        assert_eq!(summaries[0].failures, 1);
        assert_eq!(summaries[0].mean_total_error, None);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
