//! Structure recovery: coordinate transformations that map an identified
//! cycled model (arbitrary state basis) into cyclic-structured form, plus the
//! orchestration that extracts the per-phase vertex models.
//!
//! Two dual constructions are available. The controllability-based transform
//! `T = sum_j A*^j B* S_m^{j+1} G_j` assembles per-phase Krylov columns; with
//! the default selectors and a single input it lands every phase in the
//! controllable companion convention, which pins `B_i = e1` and the 0/1
//! entries of `A_i` exactly even on noisy estimates. The observability-based
//! transform builds `T^{-1} = sum_j F_j S_q^j C* A*^j` from single-channel
//! observability rows instead; it yields an input-output equivalent (but
//! observer-patterned) realization and serves as the fallback when the
//! controllability transform is ill-conditioned.

use nalgebra::DMatrix;

use crate::cyclic::{cyclic_shift_matrix, extract_phase_parameters, CycledSystem, VertexSet};
use crate::error::{Error, Result};
use crate::statespace::{StateSpaceModel, SINGULAR_CONDITION_LIMIT};

/// Which Gramian family a transform was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformMethod {
    Controllability,
    Observability,
}

/// Route selection for [`recover_vertices`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryRoute {
    Controllability,
    Observability,
    /// Try the controllability transform first, fall back to the
    /// observability transform if it is singular.
    Auto,
}

/// An invertible coordinate transformation together with its inverse and a
/// condition estimate (`sigma_max / sigma_min`).
#[derive(Debug, Clone)]
pub struct TransformMatrix {
    pub t: DMatrix<f64>,
    pub t_inverse: DMatrix<f64>,
    pub condition_estimate: f64,
    pub method: TransformMethod,
}

/// Per-index block-diagonal selector matrices: for each `j = 0..n-1`, one
/// block per phase. Controllability selectors use `m x n` blocks,
/// observability selectors `n x q` blocks.
#[derive(Debug, Clone)]
pub struct SelectorBlocks {
    /// `blocks[j][phase]`.
    blocks: Vec<Vec<DMatrix<f64>>>,
    block_shape: (usize, usize),
}

impl SelectorBlocks {
    /// Wraps explicit per-index, per-phase blocks; all blocks must share one
    /// shape and every index must provide one block per phase.
    pub fn new(blocks: Vec<Vec<DMatrix<f64>>>) -> Result<Self> {
        let period = blocks.first().map(Vec::len).unwrap_or(0);
        if blocks.is_empty() || period == 0 {
            return Err(Error::InvalidArgument("selector blocks must be non-empty".into()));
        }
        let block_shape = blocks[0][0].shape();
        for per_index in &blocks {
            if per_index.len() != period || per_index.iter().any(|b| b.shape() != block_shape) {
                return Err(Error::Dimension(
                    "selector blocks must share one shape and phase count".into(),
                ));
            }
        }
        Ok(Self { blocks, block_shape })
    }

    /// Default controllability selectors: each phase block of `G_j` is the
    /// `m x n` unit matrix selecting column `j` from the first input channel,
    /// so the per-phase columns of `T` become `[B-col, AB-col, ...,
    /// A^{n-1}B-col]` and the recovered phases land in companion form.
    pub fn controllability_default(order: usize, input_dim: usize, period: usize) -> Self {
        let blocks = (0..order)
            .map(|j| {
                (0..period)
                    .map(|_| {
                        let mut g = DMatrix::<f64>::zeros(input_dim, order);
                        g[(0, j)] = 1.0;
                        g
                    })
                    .collect()
            })
            .collect();
        Self {
            blocks,
            block_shape: (input_dim, order),
        }
    }

    /// Default observability selectors: each phase block of `F_j` is the
    /// `n x q` unit matrix routing the first output channel into row `j`, so
    /// `T^{-1}` stacks single-channel observability rows per phase.
    pub fn observability_default(order: usize, output_dim: usize, period: usize) -> Self {
        let blocks = (0..order)
            .map(|j| {
                (0..period)
                    .map(|_| {
                        let mut f = DMatrix::<f64>::zeros(order, output_dim);
                        f[(j, 0)] = 1.0;
                        f
                    })
                    .collect()
            })
            .collect();
        Self {
            blocks,
            block_shape: (order, output_dim),
        }
    }

    pub fn index_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn period(&self) -> usize {
        self.blocks[0].len()
    }

    pub fn block_shape(&self) -> (usize, usize) {
        self.block_shape
    }

    /// Expands index `j` into its full block-diagonal matrix.
    fn assemble(&self, j: usize) -> DMatrix<f64> {
        let period = self.period();
        let (rows, cols) = self.block_shape;
        let mut full = DMatrix::<f64>::zeros(period * rows, period * cols);
        for (phase, block) in self.blocks[j].iter().enumerate() {
            full.view_mut((phase * rows, phase * cols), (rows, cols))
                .copy_from(block);
        }
        full
    }
}

fn condition_of(mat: &DMatrix<f64>) -> f64 {
    let svd = mat.clone().svd(false, false);
    let max = svd.singular_values.max();
    let min = svd.singular_values.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

fn check_lifted_dims(
    rows: usize,
    cols: usize,
    name: &str,
    want_rows: usize,
    want_cols: usize,
) -> Result<()> {
    if rows != want_rows || cols != want_cols {
        return Err(Error::Dimension(format!(
            "cycled {name} must be {want_rows}x{want_cols}, got {rows}x{cols}"
        )));
    }
    Ok(())
}

/// Builds the controllability-based transform
/// `T = sum_{j=0}^{n-1} A*^j B* S_m^{j+1} G_j` for an identified cycled pair
/// `(A*, B*)`. Fails with a singular-transform error when the condition
/// estimate exceeds [`SINGULAR_CONDITION_LIMIT`], which is how an
/// uncontrollable pair manifests.
pub fn build_transform_controllability(
    a_cyc: &DMatrix<f64>,
    b_cyc: &DMatrix<f64>,
    period: usize,
    base_dims: (usize, usize),
    selectors: Option<&SelectorBlocks>,
) -> Result<TransformMatrix> {
    let (n, m) = base_dims;
    let nn = period * n;
    check_lifted_dims(a_cyc.nrows(), a_cyc.ncols(), "A", nn, nn)?;
    check_lifted_dims(b_cyc.nrows(), b_cyc.ncols(), "B", nn, period * m)?;
    let default;
    let selectors = match selectors {
        Some(s) => s,
        None => {
            default = SelectorBlocks::controllability_default(n, m, period);
            &default
        }
    };
    if selectors.index_count() != n
        || selectors.period() != period
        || selectors.block_shape() != (m, n)
    {
        return Err(Error::Dimension(
            "controllability selectors must provide n indices of m x n blocks per phase".into(),
        ));
    }

    let shift = cyclic_shift_matrix(m, period);
    let mut krylov = b_cyc.clone();
    let mut shift_pow = shift.clone();
    let mut t = DMatrix::<f64>::zeros(nn, nn);
    for j in 0..n {
        t += &krylov * &shift_pow * selectors.assemble(j);
        if j + 1 < n {
            krylov = a_cyc * krylov;
            shift_pow *= &shift;
        }
    }

    let condition_estimate = condition_of(&t);
    if !condition_estimate.is_finite() || condition_estimate > SINGULAR_CONDITION_LIMIT {
        return Err(Error::SingularTransform {
            condition: condition_estimate,
        });
    }
    let t_inverse = t.clone().try_inverse().ok_or(Error::SingularTransform {
        condition: condition_estimate,
    })?;
    Ok(TransformMatrix {
        t,
        t_inverse,
        condition_estimate,
        method: TransformMethod::Controllability,
    })
}

/// Builds the observability-based transform by assembling its inverse
/// `T^{-1} = sum_{j=0}^{n-1} F_j S_q^j C* A*^j` for an identified cycled pair
/// `(C*, A*)`; the dual of [`build_transform_controllability`].
pub fn build_transform_observability(
    a_cyc: &DMatrix<f64>,
    c_cyc: &DMatrix<f64>,
    period: usize,
    base_dims: (usize, usize),
    selectors: Option<&SelectorBlocks>,
) -> Result<TransformMatrix> {
    let (n, q) = base_dims;
    let nn = period * n;
    check_lifted_dims(a_cyc.nrows(), a_cyc.ncols(), "A", nn, nn)?;
    check_lifted_dims(c_cyc.nrows(), c_cyc.ncols(), "C", period * q, nn)?;
    let default;
    let selectors = match selectors {
        Some(s) => s,
        None => {
            default = SelectorBlocks::observability_default(n, q, period);
            &default
        }
    };
    if selectors.index_count() != n
        || selectors.period() != period
        || selectors.block_shape() != (n, q)
    {
        return Err(Error::Dimension(
            "observability selectors must provide n indices of n x q blocks per phase".into(),
        ));
    }

    let shift = cyclic_shift_matrix(q, period);
    let mut ca = c_cyc.clone();
    let mut shift_pow = DMatrix::<f64>::identity(period * q, period * q);
    let mut t_inverse = DMatrix::<f64>::zeros(nn, nn);
    for j in 0..n {
        t_inverse += selectors.assemble(j) * &shift_pow * &ca;
        if j + 1 < n {
            ca = &ca * a_cyc;
            shift_pow *= &shift;
        }
    }

    let condition_estimate = condition_of(&t_inverse);
    if !condition_estimate.is_finite() || condition_estimate > SINGULAR_CONDITION_LIMIT {
        return Err(Error::SingularTransform {
            condition: condition_estimate,
        });
    }
    let t = t_inverse.clone().try_inverse().ok_or(Error::SingularTransform {
        condition: condition_estimate,
    })?;
    Ok(TransformMatrix {
        t,
        t_inverse,
        condition_estimate,
        method: TransformMethod::Observability,
    })
}

/// Applies the similarity `(T^{-1} A T, T^{-1} B, C T, D)` to a lifted
/// estimate and packages the result as a [`CycledSystem`] without asserting
/// the ideal zero pattern.
pub fn apply_similarity(
    estimate: &StateSpaceModel,
    transform: &TransformMatrix,
    period: usize,
    base_dims: (usize, usize, usize),
) -> Result<CycledSystem> {
    let (n, m, q) = base_dims;
    if estimate.order() != period * n
        || estimate.input_dim() != period * m
        || estimate.output_dim() != period * q
    {
        return Err(Error::Dimension(format!(
            "estimate of shape ({}, {}, {}) does not match period {period} with base dims ({n}, {m}, {q})",
            estimate.order(),
            estimate.input_dim(),
            estimate.output_dim()
        )));
    }
    if transform.t.nrows() != period * n {
        return Err(Error::Dimension(format!(
            "transform is {}x{}, expected {}x{}",
            transform.t.nrows(),
            transform.t.ncols(),
            period * n,
            period * n
        )));
    }
    CycledSystem::new(
        &transform.t_inverse * estimate.a() * &transform.t,
        &transform.t_inverse * estimate.b(),
        estimate.c() * &transform.t,
        estimate.d().clone(),
        period,
        base_dims,
    )
}

/// Snaps the entries that the controllability transform fixes by
/// construction (single-input case): within each phase block column of `A`,
/// the first `n-1` columns are exact unit vectors into the next phase block,
/// and `B` is the exact cyclic pattern of `e1` blocks. Deviations there are
/// pure solver roundoff, so pinning them removes false residual.
fn pin_companion_structure(cycled: &CycledSystem) -> Result<CycledSystem> {
    let period = cycled.period();
    let (n, m, q) = cycled.base_dims();
    debug_assert_eq!(m, 1);
    let mut a = cycled.a_cyc().clone();
    for phase in 0..period {
        let next = ((phase + 1) % period) * n;
        for k in 0..n - 1 {
            let col = phase * n + k;
            a.column_mut(col).fill(0.0);
            a[(next + k + 1, col)] = 1.0;
        }
    }
    let mut b = DMatrix::<f64>::zeros(period * n, period);
    for phase in 0..period {
        b[(((phase + 1) % period) * n, phase)] = 1.0;
    }
    CycledSystem::new(a, b, cycled.c_cyc().clone(), cycled.d_cyc().clone(), period, (n, m, q))
}

/// Everything recovered from one lifted estimate.
#[derive(Debug, Clone)]
pub struct RecoveredStructure {
    /// The transformed system in cyclic-structured coordinates.
    pub cycled: CycledSystem,
    /// The `N` per-phase vertex models.
    pub vertex_set: VertexSet,
    /// Frobenius mass outside the cyclic pattern after transformation.
    pub structure_residual: f64,
    /// Condition estimate of the transform that was applied.
    pub condition_estimate: f64,
    pub route_used: TransformMethod,
}

/// Orchestrates transform construction, similarity, and per-phase
/// extraction. `Auto` tries the controllability route first and falls back
/// to the observability route on a singular transform; if both are singular
/// the structure is unrecoverable.
pub fn recover_vertices(
    estimate: &StateSpaceModel,
    period: usize,
    base_dims: (usize, usize, usize),
    route: RecoveryRoute,
) -> Result<RecoveredStructure> {
    let (n, m, q) = base_dims;
    let build_ctrb = || {
        build_transform_controllability(estimate.a(), estimate.b(), period, (n, m), None)
    };
    let build_obs = || {
        build_transform_observability(estimate.a(), estimate.c(), period, (n, q), None)
    };
    let transform = match route {
        RecoveryRoute::Controllability => build_ctrb()?,
        RecoveryRoute::Observability => build_obs()?,
        RecoveryRoute::Auto => match build_ctrb() {
            Ok(t) => t,
            Err(ctrb_err @ Error::SingularTransform { .. }) => match build_obs() {
                Ok(t) => t,
                Err(obs_err) => {
                    return Err(Error::UnrecoverableStructure {
                        controllability: ctrb_err.to_string(),
                        observability: obs_err.to_string(),
                    })
                }
            },
            Err(other) => return Err(other),
        },
    };

    let mut cycled = apply_similarity(estimate, &transform, period, base_dims)?;
    if transform.method == TransformMethod::Controllability && m == 1 {
        cycled = pin_companion_structure(&cycled)?;
    }
    let extraction = extract_phase_parameters(&cycled)?;
    Ok(RecoveredStructure {
        cycled,
        vertex_set: extraction.vertex_set,
        structure_residual: extraction.structure_residual,
        condition_estimate: transform.condition_estimate,
        route_used: transform.method,
    })
}
