//! Cyclic reformulation machinery: cycled signals, cyclic shift matrices,
//! ideal cyclic systems built from a time-invariant model, per-phase
//! parameter extraction, and the block-diagonal sparsity of cycled Markov
//! parameters.
//!
//! Block conventions, shared with structure recovery: for period `N`, a
//! cyclic-structured state matrix carries the phase-`i` block `A_i` at block
//! position `(row (i+1) mod N, column i)`, and likewise for `B`; `C` and `D`
//! are block diagonal with the phase-`i` block at `(i, i)`. A cycled signal
//! places the sample at step `k` into block `k mod N` and zeros elsewhere.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::statespace::StateSpaceModel;

/// Block-structured representation of a period-`N` cycled system.
///
/// Dimension bookkeeping is enforced (`Nn x Nn` and friends); the cyclic zero
/// pattern itself is not, because identified systems deviate from it. Ideal
/// constructions from [`build_ideal_cyclic`] carry exact zeros off-pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct CycledSystem {
    a_cyc: DMatrix<f64>,
    b_cyc: DMatrix<f64>,
    c_cyc: DMatrix<f64>,
    d_cyc: DMatrix<f64>,
    period: usize,
    base_dims: (usize, usize, usize),
}

impl CycledSystem {
    /// Wraps explicit matrices after validating block dimensions against the
    /// period and base dimensions `(n, m, q)`.
    pub fn new(
        a_cyc: DMatrix<f64>,
        b_cyc: DMatrix<f64>,
        c_cyc: DMatrix<f64>,
        d_cyc: DMatrix<f64>,
        period: usize,
        base_dims: (usize, usize, usize),
    ) -> Result<Self> {
        let (n, m, q) = base_dims;
        if period == 0 || n == 0 || m == 0 || q == 0 {
            return Err(Error::InvalidArgument(
                "period and base dimensions must be positive".into(),
            ));
        }
        let checks = [
            ("A", a_cyc.shape(), (period * n, period * n)),
            ("B", b_cyc.shape(), (period * n, period * m)),
            ("C", c_cyc.shape(), (period * q, period * n)),
            ("D", d_cyc.shape(), (period * q, period * m)),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::Dimension(format!(
                    "cycled {name} must be {}x{}, got {}x{}",
                    want.0, want.1, got.0, got.1
                )));
            }
        }
        Ok(Self { a_cyc, b_cyc, c_cyc, d_cyc, period, base_dims })
    }

    /// Views an identified model of order `N*n` with `N*m` inputs and `N*q`
    /// outputs as a cycled system.
    pub fn from_model(
        model: &StateSpaceModel,
        period: usize,
        base_dims: (usize, usize, usize),
    ) -> Result<Self> {
        Self::new(
            model.a().clone(),
            model.b().clone(),
            model.c().clone(),
            model.d().clone(),
            period,
            base_dims,
        )
    }

    pub fn a_cyc(&self) -> &DMatrix<f64> {
        &self.a_cyc
    }

    pub fn b_cyc(&self) -> &DMatrix<f64> {
        &self.b_cyc
    }

    pub fn c_cyc(&self) -> &DMatrix<f64> {
        &self.c_cyc
    }

    pub fn d_cyc(&self) -> &DMatrix<f64> {
        &self.d_cyc
    }

    pub fn period(&self) -> usize {
        self.period
    }

    /// Base dimensions `(n, m, q)` of one phase.
    pub fn base_dims(&self) -> (usize, usize, usize) {
        self.base_dims
    }

    /// The cycled system as a plain state-space model of order `N*n`.
    pub fn as_state_space(&self) -> StateSpaceModel {
        StateSpaceModel::new(
            self.a_cyc.clone(),
            self.b_cyc.clone(),
            self.c_cyc.clone(),
            self.d_cyc.clone(),
        )
        .expect("cycled dimensions are consistent by construction")
    }
}

/// An ordered list of `N` per-phase parameter sets sharing one shape; the
/// vertex list of a polytopic model.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexSet {
    vertices: Vec<StateSpaceModel>,
}

impl VertexSet {
    pub fn new(vertices: Vec<StateSpaceModel>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidArgument("vertex set must be non-empty".into()));
        }
        let dims = (
            vertices[0].order(),
            vertices[0].input_dim(),
            vertices[0].output_dim(),
        );
        if vertices
            .iter()
            .any(|v| (v.order(), v.input_dim(), v.output_dim()) != dims)
        {
            return Err(Error::Dimension(
                "all vertices must share identical (n, m, q)".into(),
            ));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[StateSpaceModel] {
        &self.vertices
    }

    pub fn period(&self) -> usize {
        self.vertices.len()
    }

    /// Shared `(n, m, q)` of every vertex.
    pub fn base_dims(&self) -> (usize, usize, usize) {
        let v = &self.vertices[0];
        (v.order(), v.input_dim(), v.output_dim())
    }
}

/// Lifts a signal to period `N`: step `k` of the result has the original
/// sample in block `k mod N` and zero blocks elsewhere.
pub fn cycle_signal(signal: &[DVector<f64>], period: usize) -> Result<Vec<DVector<f64>>> {
    if period == 0 {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    if signal.is_empty() {
        return Err(Error::InvalidArgument("cannot cycle an empty signal".into()));
    }
    let d = signal[0].len();
    if signal.iter().any(|v| v.len() != d) {
        return Err(Error::Dimension("signal vectors must share one dimension".into()));
    }
    Ok(signal
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let mut out = DVector::<f64>::zeros(period * d);
            out.rows_mut((k % period) * d, d).copy_from(v);
            out
        })
        .collect())
}

/// Inverse of [`cycle_signal`]: reads block `k mod N` of each step.
pub fn uncycle_signal(cycled: &[DVector<f64>], period: usize) -> Result<Vec<DVector<f64>>> {
    if period == 0 {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    if cycled.is_empty() {
        return Err(Error::InvalidArgument("cannot uncycle an empty signal".into()));
    }
    let nd = cycled[0].len();
    if nd % period != 0 || cycled.iter().any(|v| v.len() != nd) {
        return Err(Error::Dimension(format!(
            "cycled dimension {nd} is not a multiple of period {period}"
        )));
    }
    let d = nd / period;
    Ok(cycled
        .iter()
        .enumerate()
        .map(|(k, v)| v.rows((k % period) * d, d).clone_owned())
        .collect())
}

/// Cyclic shift matrix for dimension parameter `d` and period `N`: identity
/// blocks on the first block superdiagonal and in the bottom-left block
/// corner. Raising it to the `N`-th power gives the identity.
pub fn cyclic_shift_matrix(d: usize, period: usize) -> DMatrix<f64> {
    let size = d * period;
    let mut s = DMatrix::<f64>::zeros(size, size);
    for block in 0..period {
        let col_block = (block + 1) % period;
        for k in 0..d {
            s[(block * d + k, col_block * d + k)] = 1.0;
        }
    }
    s
}

/// Builds the ideal cyclic lift of a time-invariant model: every phase block
/// of `A` and `B` equals the model's `(A, B)` on the cyclic pattern, and `C`,
/// `D` repeat block-diagonally.
pub fn build_ideal_cyclic(model: &StateSpaceModel, period: usize) -> Result<CycledSystem> {
    if period == 0 {
        return Err(Error::InvalidArgument("period must be positive".into()));
    }
    let (n, m, q) = (model.order(), model.input_dim(), model.output_dim());
    let mut a_cyc = DMatrix::<f64>::zeros(period * n, period * n);
    let mut b_cyc = DMatrix::<f64>::zeros(period * n, period * m);
    let mut c_cyc = DMatrix::<f64>::zeros(period * q, period * n);
    let mut d_cyc = DMatrix::<f64>::zeros(period * q, period * m);
    for i in 0..period {
        let r = (i + 1) % period;
        a_cyc.view_mut((r * n, i * n), (n, n)).copy_from(model.a());
        b_cyc.view_mut((r * n, i * m), (n, m)).copy_from(model.b());
        c_cyc.view_mut((i * q, i * n), (q, n)).copy_from(model.c());
        d_cyc.view_mut((i * q, i * m), (q, m)).copy_from(model.d());
    }
    CycledSystem::new(a_cyc, b_cyc, c_cyc, d_cyc, period, (n, m, q))
}

/// Sum of squares over entries whose block position fails `on_pattern`.
fn off_pattern_sq(
    mat: &DMatrix<f64>,
    block_rows: usize,
    block_cols: usize,
    on_pattern: impl Fn(usize, usize) -> bool,
) -> f64 {
    let mut acc = 0.0;
    for col in 0..mat.ncols() {
        let cb = col / block_cols;
        for row in 0..mat.nrows() {
            if !on_pattern(row / block_rows, cb) {
                let v = mat[(row, col)];
                acc += v * v;
            }
        }
    }
    acc
}

/// Result of reading the per-phase blocks out of a cycled system.
#[derive(Debug, Clone)]
pub struct ExtractionResult {
    pub vertex_set: VertexSet,
    /// Frobenius norm of every entry lying outside the designated cyclic /
    /// block-diagonal pattern across all four matrices; zero for ideal
    /// constructions, positive for noisy identified systems.
    pub structure_residual: f64,
}

/// Extracts the `N` per-phase parameter sets from the designated block
/// positions and measures how much mass lies outside the pattern.
pub fn extract_phase_parameters(cycled: &CycledSystem) -> Result<ExtractionResult> {
    let period = cycled.period();
    let (n, m, q) = cycled.base_dims();
    let mut vertices = Vec::with_capacity(period);
    for i in 0..period {
        let r = (i + 1) % period;
        vertices.push(StateSpaceModel::new(
            cycled.a_cyc().view((r * n, i * n), (n, n)).clone_owned(),
            cycled.b_cyc().view((r * n, i * m), (n, m)).clone_owned(),
            cycled.c_cyc().view((i * q, i * n), (q, n)).clone_owned(),
            cycled.d_cyc().view((i * q, i * m), (q, m)).clone_owned(),
        )?);
    }

    let cyclic = |rb: usize, cb: usize| rb == (cb + 1) % period;
    let diagonal = |rb: usize, cb: usize| rb == cb;
    let off_sq = off_pattern_sq(cycled.a_cyc(), n, n, cyclic)
        + off_pattern_sq(cycled.b_cyc(), n, m, cyclic)
        + off_pattern_sq(cycled.c_cyc(), q, n, diagonal)
        + off_pattern_sq(cycled.d_cyc(), q, m, diagonal);

    Ok(ExtractionResult {
        vertex_set: VertexSet::new(vertices)?,
        structure_residual: off_sq.sqrt(),
    })
}

/// Frobenius norm of the off-block-diagonal part of
/// `S_q^i * H(i+j) * S_m^j` for the ideal period-`N` lift of `model`, where
/// `H` are the cycled system's Markov parameters. Exactly zero in exact
/// arithmetic for every `i, j >= 0`.
pub fn markov_sparsity_residual(
    model: &StateSpaceModel,
    period: usize,
    i: usize,
    j: usize,
) -> Result<f64> {
    let cycled = build_ideal_cyclic(model, period)?;
    let (_, m, q) = cycled.base_dims();
    let order = i + j;
    // H(0) = D; H(k) = C A^{k-1} B.
    let h = if order == 0 {
        cycled.d_cyc().clone()
    } else {
        let mut akb = cycled.b_cyc().clone();
        for _ in 0..order - 1 {
            akb = cycled.a_cyc() * akb;
        }
        cycled.c_cyc() * akb
    };
    let sq = cyclic_shift_matrix(q, period);
    let sm = cyclic_shift_matrix(m, period);
    let mut shifted = h;
    for _ in 0..i {
        shifted = &sq * shifted;
    }
    for _ in 0..j {
        shifted = shifted * &sm;
    }
    Ok(off_pattern_sq(&shifted, q, m, |rb, cb| rb == cb).sqrt())
}
