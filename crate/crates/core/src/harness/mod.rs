//! Config-driven experiment harness: the five-step pipeline (signal
//! transformation, subspace identification, coordinate transformation,
//! parameter extraction, polytope construction) plus weight optimization,
//! Monte Carlo studies over noise / data-length / period grids, and report
//! emission.
//!
//! Reproducibility contract: every random stream is derived from the master
//! seed through [`derive_seed`], per-trial seeds are assigned before any
//! trial runs, and report files are byte-identical across reruns with the
//! same master seed. Wall-clock timings are kept out of report files for
//! that reason; they live in [`pipeline::TrialReport`] for callers to log.

pub mod config;
pub mod pipeline;
pub mod report;
pub mod study;

pub use config::{ExperimentConfig, IdentificationParams, NoiseParams, PlantSpec, PsoSettings};
pub use pipeline::{run_pipeline, FailedTrial, TrialOutcome, TrialReport};
pub use report::{emit_report, read_trials_csv, ReportFormat, TrialRow};
pub use study::{run_study, run_study_cells, study_grid, CellSummary, StudyCell, StudyKind, StudyResults};

/// Splitmix64-style mixing: maps a base seed and a stream tag to an
/// independent child seed. Deterministic and platform-independent.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one study cell, derived from the master seed and the cell
/// contents (not its grid position), so a cell keeps its seeds when the
/// surrounding grid changes.
pub(crate) fn cell_seed(master: u64, cell: &study::StudyCell) -> u64 {
    let mut s = derive_seed(master, 0x6cb9);
    s = derive_seed(s, cell.period as u64);
    s = derive_seed(s, cell.data_length as u64);
    s = derive_seed(s, cell.sigma_du.to_bits());
    s = derive_seed(s, cell.sigma_dy.to_bits());
    s
}

/// Pre-assigned per-trial seeds for a cell.
pub fn trial_seeds(master: u64, cell: &study::StudyCell, trials: usize) -> Vec<u64> {
    let base = cell_seed(master, cell);
    (0..trials).map(|t| derive_seed(base, t as u64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        let a = derive_seed(42, 1);
        assert_eq!(a, derive_seed(42, 1));
        assert_ne!(a, derive_seed(42, 2));
        assert_ne!(a, derive_seed(43, 1));
    }

    #[test]
    fn trial_seeds_depend_on_cell_content_not_position() {
        let cell = study::StudyCell {
            period: 6,
            data_length: 3000,
            sigma_du: 0.1,
            sigma_dy: 0.05,
        };
        let again = cell;
        assert_eq!(trial_seeds(7, &cell, 5), trial_seeds(7, &again, 5));
        let other = study::StudyCell {
            data_length: 2000,
            ..cell
        };
        assert_ne!(trial_seeds(7, &cell, 5), trial_seeds(7, &other, 5));
    }
}
