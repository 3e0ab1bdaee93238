//! Subspace identification of state-space models from input-output data.
//!
//! The estimator is a past-inputs/past-outputs instrumental-variable scheme:
//! an LQ factorization of the stacked block-Hankel data matrix
//! `[U_f; U_p; Y_p; Y_f]` orthogonalizes the future outputs against the
//! future inputs, the part correlated with the past instruments is reduced to
//! the prescribed order by SVD, `C` and `A` come from the shift invariance of
//! the estimated extended observability matrix, and `B`, `D` from a linear
//! least-squares problem over the input-output equation projected onto the
//! left null space of that observability estimate. On noise-free data from a
//! minimal system of the requested order the estimate is input-output exact
//! up to factorization roundoff; under white process and observation noise it
//! is consistent.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::statespace::{SignalRecord, StateSpaceModel, RANK_TOLERANCE};

/// Stacked matrix of shifted signal windows: entry at block-row `r`, column
/// `c` is `signal[offset + r + c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelBlock {
    data: DMatrix<f64>,
    block_rows: usize,
    columns: usize,
    signal_dim: usize,
}

impl HankelBlock {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn signal_dim(&self) -> usize {
        self.signal_dim
    }
}

/// Builds a block-Hankel matrix with `block_rows` shifted window rows and
/// `columns` columns, starting at `offset`.
pub fn build_block_hankel(
    signal: &[nalgebra::DVector<f64>],
    block_rows: usize,
    columns: usize,
    offset: usize,
) -> Result<HankelBlock> {
    if block_rows == 0 || columns == 0 {
        return Err(Error::InvalidArgument(
            "block_rows and columns must be positive".into(),
        ));
    }
    let required = offset + block_rows + columns - 1;
    if required > signal.len() {
        return Err(Error::InsufficientData {
            required,
            actual: signal.len(),
        });
    }
    let d = signal[0].len();
    let mut data = DMatrix::<f64>::zeros(block_rows * d, columns);
    for c in 0..columns {
        for r in 0..block_rows {
            data.view_mut((r * d, c), (d, 1))
                .copy_from(&signal[offset + r + c]);
        }
    }
    Ok(HankelBlock {
        data,
        block_rows,
        columns,
        signal_dim: d,
    })
}

/// Settings for one identification run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentificationConfig {
    /// Target state dimension; always fixed by the problem setting.
    pub order: usize,
    /// Hankel depth (past and future horizons).
    pub block_rows: usize,
    /// Relative singular-value tolerance for rank decisions.
    pub rank_tolerance: f64,
}

impl IdentificationConfig {
    pub fn new(order: usize, block_rows: usize, rank_tolerance: f64) -> Self {
        Self {
            order,
            block_rows,
            rank_tolerance,
        }
    }

    /// Default configuration for a given order and output dimension:
    /// `block_rows = 2 * ceil(order / output_dim) + 2`, which exceeds the
    /// observability depth with margin.
    pub fn for_order(order: usize, output_dim: usize) -> Self {
        let depth = order.div_ceil(output_dim.max(1));
        Self {
            order,
            block_rows: 2 * depth + 2,
            rank_tolerance: RANK_TOLERANCE,
        }
    }

    /// Checks internal consistency against the data dimensions.
    pub fn validate(&self, output_dim: usize) -> Result<()> {
        if self.order == 0 {
            return Err(Error::InvalidArgument("order must be positive".into()));
        }
        if self.block_rows * output_dim <= self.order {
            return Err(Error::InvalidArgument(format!(
                "block_rows ({}) times output dimension ({}) must exceed the order ({})",
                self.block_rows, output_dim, self.order
            )));
        }
        if (self.block_rows - 1) * output_dim < self.order {
            return Err(Error::InvalidArgument(format!(
                "block_rows ({}) too shallow for the shift-invariance estimate of order {}",
                self.block_rows, self.order
            )));
        }
        if !(self.rank_tolerance > 0.0) || !self.rank_tolerance.is_finite() {
            return Err(Error::InvalidArgument(
                "rank_tolerance must be a positive finite number".into(),
            ));
        }
        Ok(())
    }

    /// Minimum number of samples this configuration needs for signals of the
    /// given input/output dimensions: the data matrix must have at least as
    /// many columns as rows.
    pub fn min_samples(&self, input_dim: usize, output_dim: usize) -> usize {
        2 * self.block_rows - 1 + 2 * self.block_rows * (input_dim + output_dim)
    }
}

/// Identifies a state-space model of `config.order` states from the record.
/// The returned realization is in an arbitrary state basis; its Markov
/// parameters, not its entries, are the contract.
pub fn subspace_identify(
    data: &SignalRecord,
    config: &IdentificationConfig,
) -> Result<StateSpaceModel> {
    let m = data.input_dim();
    let q = data.output_dim();
    let n = config.order;
    let i = config.block_rows;
    config.validate(q)?;

    let required = config.min_samples(m, q);
    if data.len() < required {
        return Err(Error::InsufficientData {
            required,
            actual: data.len(),
        });
    }
    let j = data.len() - 2 * i + 1;

    // Stacked data matrix [U_f; U_p; Y_p; Y_f].
    let u_hankel = build_block_hankel(data.inputs(), 2 * i, j, 0)?;
    let y_hankel = build_block_hankel(data.outputs(), 2 * i, j, 0)?;
    let im = i * m;
    let iq = i * q;
    let rows = 2 * im + 2 * iq;
    let mut stacked = DMatrix::<f64>::zeros(rows, j);
    stacked
        .view_mut((0, 0), (im, j))
        .copy_from(&u_hankel.matrix().view((im, 0), (im, j))); // U_f
    stacked
        .view_mut((im, 0), (im, j))
        .copy_from(&u_hankel.matrix().view((0, 0), (im, j))); // U_p
    stacked
        .view_mut((2 * im, 0), (iq, j))
        .copy_from(&y_hankel.matrix().view((0, 0), (iq, j))); // Y_p
    stacked
        .view_mut((2 * im + iq, 0), (iq, j))
        .copy_from(&y_hankel.matrix().view((iq, 0), (iq, j))); // Y_f

    // LQ factorization via QR of the transpose; only the triangular factor
    // is needed.
    let lower = DMatrix::from(stacked.transpose().qr().r().transpose());

    let l11 = lower.view((0, 0), (im, im)).clone_owned();
    let yf_row = 2 * im + iq;
    let l41 = lower.view((yf_row, 0), (iq, im)).clone_owned();
    // Components of Y_f along the past-instrument directions.
    let l42_43 = lower.view((yf_row, im), (iq, im + iq)).clone_owned();

    let svd = l42_43.svd(true, false);
    let u_full = svd.u.as_ref().expect("SVD with u requested");
    let s_max = svd.singular_values[0];
    if !(s_max > 0.0) || svd.singular_values[n - 1] < config.rank_tolerance * s_max {
        return Err(Error::DegenerateData(format!(
            "estimated observability matrix has rank below the requested order {n}"
        )));
    }

    // Extended observability estimate of rank n.
    let mut gamma = u_full.columns(0, n).clone_owned();
    for (col, s) in svd.singular_values.iter().take(n).enumerate() {
        gamma.column_mut(col).scale_mut(s.sqrt());
    }

    let c_mat = gamma.view((0, 0), (q, n)).clone_owned();
    // Shift invariance: Gamma[0..(i-1)q] * A = Gamma[q..iq].
    let gamma_up = gamma.view((0, 0), ((i - 1) * q, n)).clone_owned();
    let gamma_down = gamma.view((q, 0), ((i - 1) * q, n)).clone_owned();
    let a_mat = lstsq(&gamma_up, &gamma_down)?;

    // B, D from the null space of the observability estimate: with
    // U2 = orthogonal complement of Gamma's columns,
    // U2' * Y_f * pinv(U_f) = U2' * Toeplitz(Markov), linear in (D, B).
    let u2t = u_full.columns(n, iq - n).transpose();
    let u2t_l41 = &u2t * &l41;
    // X = (U2' L41) L11^{-1}  via  L11' X' = (U2' L41)'.
    let xt = l11
        .transpose()
        .solve_upper_triangular(&u2t_l41.transpose())
        .ok_or_else(|| {
            Error::DegenerateData("future input block is not persistently exciting".into())
        })?;
    let x = xt.transpose();

    let rows_per_block = iq - n;
    let mut lhs = DMatrix::<f64>::zeros(i * rows_per_block, q + n);
    let mut rhs = DMatrix::<f64>::zeros(i * rows_per_block, m);
    // Backward recursion N_k = L_{k+1} C + N_{k+1} A over the block columns
    // of U2'.
    let mut n_k = DMatrix::<f64>::zeros(rows_per_block, n);
    for k in (0..i).rev() {
        let l_k = u2t.view((0, k * q), (rows_per_block, q)).clone_owned();
        lhs.view_mut((k * rows_per_block, 0), (rows_per_block, q))
            .copy_from(&l_k);
        lhs.view_mut((k * rows_per_block, q), (rows_per_block, n))
            .copy_from(&n_k);
        rhs.view_mut((k * rows_per_block, 0), (rows_per_block, m))
            .copy_from(&x.view((0, k * m), (rows_per_block, m)));
        if k > 0 {
            n_k = &l_k * &c_mat + n_k * &a_mat;
        }
    }
    let db = lstsq(&lhs, &rhs)?;
    let d_mat = db.view((0, 0), (q, m)).clone_owned();
    let b_mat = db.view((q, 0), (n, m)).clone_owned();

    StateSpaceModel::new(a_mat, b_mat, c_mat, d_mat)
}

/// Conventional single-model identification: the subspace estimator applied
/// to the raw (non-cycled) signals at the plant order, with default depth.
pub fn conventional_identify(data: &SignalRecord, order: usize) -> Result<StateSpaceModel> {
    if order == 0 {
        return Err(Error::InvalidArgument("order must be positive".into()));
    }
    let config = IdentificationConfig::for_order(order, data.output_dim());
    subspace_identify(data, &config)
}

/// Least squares `argmin_X ||A X - B||_F` via SVD.
fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let svd = a.clone().svd(true, true);
    let eps = svd.singular_values[0].max(1.0) * 1e-13;
    svd.solve(b, eps)
        .map_err(|e| Error::DegenerateData(format!("least-squares solve failed: {e}")))
}
