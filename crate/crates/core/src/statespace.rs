//! Discrete-time LTI state-space models: simulation with process and
//! observation noise, Gaussian excitation signals, Markov parameters, and the
//! controllable companion form.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Condition-number limit beyond which a similarity transform is treated as
/// singular in double precision.
pub const SINGULAR_CONDITION_LIMIT: f64 = 1e12;

/// Default relative tolerance for rank decisions: singular values below
/// `RANK_TOLERANCE * sigma_max` count as zero.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// A discrete-time linear time-invariant model
/// `x(k+1) = A x(k) + B u(k)`, `y(k) = C x(k) + D u(k)`
/// with `n` states, `m` inputs, and `q` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl StateSpaceModel {
    /// Builds a model from its four matrices, checking that the dimensions
    /// are mutually consistent and every entry is finite.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Dimension(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if n == 0 {
            return Err(Error::Dimension("state dimension must be positive".into()));
        }
        let m = b.ncols();
        let q = c.nrows();
        if m == 0 || q == 0 {
            return Err(Error::Dimension(
                "input and output dimensions must be positive".into(),
            ));
        }
        if b.nrows() != n {
            return Err(Error::Dimension(format!(
                "B must have {} rows, got {}",
                n,
                b.nrows()
            )));
        }
        if c.ncols() != n {
            return Err(Error::Dimension(format!(
                "C must have {} columns, got {}",
                n,
                c.ncols()
            )));
        }
        if d.nrows() != q || d.ncols() != m {
            return Err(Error::Dimension(format!(
                "D must be {}x{}, got {}x{}",
                q,
                m,
                d.nrows(),
                d.ncols()
            )));
        }
        for (name, mat) in [("A", &a), ("B", &b), ("C", &c), ("D", &d)] {
            if mat.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("matrix {name}")));
            }
        }
        Ok(Self { a, b, c, d })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    /// State dimension `n`.
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension `m`.
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// Output dimension `q`.
    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }
}

/// Serialized form of [`StateSpaceModel`]: matrices as row-major arrays of
/// rows plus the three dimensions. This is the wire/file schema used by the
/// polytope documents and the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct StateSpaceDoc {
    n: usize,
    m: usize,
    q: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<Vec<f64>>,
}

fn matrix_rows(mat: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..mat.nrows())
        .map(|r| mat.row(r).iter().copied().collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!(
            "matrix {name} must be {nrows}x{ncols} rows-of-rows"
        )));
    }
    Ok(DMatrix::from_row_iterator(
        nrows,
        ncols,
        rows.iter().flatten().copied(),
    ))
}

impl Serialize for StateSpaceModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        StateSpaceDoc {
            n: self.order(),
            m: self.input_dim(),
            q: self.output_dim(),
            a: matrix_rows(&self.a),
            b: matrix_rows(&self.b),
            c: matrix_rows(&self.c),
            d: matrix_rows(&self.d),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StateSpaceModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let doc = StateSpaceDoc::deserialize(deserializer)?;
        let build = || -> Result<StateSpaceModel> {
            StateSpaceModel::new(
                rows_to_matrix(&doc.a, doc.n, doc.n, "A")?,
                rows_to_matrix(&doc.b, doc.n, doc.m, "B")?,
                rows_to_matrix(&doc.c, doc.q, doc.n, "C")?,
                rows_to_matrix(&doc.d, doc.q, doc.m, "D")?,
            )
        };
        build().map_err(serde::de::Error::custom)
    }
}

/// Paired input/output sequences from one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    inputs: Vec<DVector<f64>>,
    outputs: Vec<DVector<f64>>,
}

impl SignalRecord {
    /// Builds a record, checking equal lengths and uniform per-step
    /// dimensions.
    pub fn new(inputs: Vec<DVector<f64>>, outputs: Vec<DVector<f64>>) -> Result<Self> {
        if inputs.len() != outputs.len() {
            return Err(Error::Dimension(format!(
                "inputs ({}) and outputs ({}) must have equal length",
                inputs.len(),
                outputs.len()
            )));
        }
        if inputs.is_empty() {
            return Err(Error::InvalidArgument("signal record must be non-empty".into()));
        }
        let m = inputs[0].len();
        let q = outputs[0].len();
        if inputs.iter().any(|u| u.len() != m) || outputs.iter().any(|y| y.len() != q) {
            return Err(Error::Dimension(
                "all vectors in a signal record must share their declared dimension".into(),
            ));
        }
        Ok(Self { inputs, outputs })
    }

    pub fn inputs(&self) -> &[DVector<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[DVector<f64>] {
        &self.outputs
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.outputs[0].len()
    }
}

/// Seeded Gaussian noise description. `std_dev = 0` means exactly-constant
/// noise equal to `mean` (no RNG draws), so zero-mean zero-deviation specs
/// leave signals untouched.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub mean: f64,
    pub std_dev: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(mean: f64, std_dev: f64, seed: u64) -> Result<Self> {
        if !mean.is_finite() || !std_dev.is_finite() {
            return Err(Error::NonFinite("noise parameters".into()));
        }
        if std_dev < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "std_dev must be nonnegative, got {std_dev}"
            )));
        }
        Ok(Self { mean, std_dev, seed })
    }

    /// Exactly-zero noise.
    pub fn silent() -> Self {
        Self { mean: 0.0, std_dev: 0.0, seed: 0 }
    }

    fn sampler(&self) -> Option<(Normal<f64>, ChaCha8Rng)> {
        if self.std_dev == 0.0 {
            None
        } else {
            let dist = Normal::new(self.mean, self.std_dev).expect("validated std_dev");
            Some((dist, ChaCha8Rng::seed_from_u64(self.seed)))
        }
    }
}

/// Simulates the model over `inputs` from initial state `x0`, with additive
/// per-step Gaussian process noise on the state recursion and observation
/// noise on the outputs. Each noise stream is drawn from its own seeded
/// ChaCha8 generator (ziggurat normal variates), element by element per step,
/// so results are bit-reproducible for fixed arguments.
pub fn simulate(
    model: &StateSpaceModel,
    inputs: &[DVector<f64>],
    process_noise: &NoiseSpec,
    observation_noise: &NoiseSpec,
    x0: &DVector<f64>,
) -> Result<SignalRecord> {
    let n = model.order();
    let m = model.input_dim();
    let q = model.output_dim();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "x0 must have dimension {}, got {}",
            n,
            x0.len()
        )));
    }
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("input sequence must be non-empty".into()));
    }
    if let Some(bad) = inputs.iter().position(|u| u.len() != m) {
        return Err(Error::Dimension(format!(
            "input vector at step {} has dimension {}, expected {}",
            bad,
            inputs[bad].len(),
            m
        )));
    }

    let mut process = process_noise.sampler();
    let mut observation = observation_noise.sampler();

    let mut x = x0.clone();
    let mut x_next = DVector::<f64>::zeros(n);
    let mut y = DVector::<f64>::zeros(q);
    let mut outputs = Vec::with_capacity(inputs.len());

    for u in inputs {
        // State update first in draw order: d_u(k), then d_y(k).
        x_next.gemv(1.0, &model.a, &x, 0.0);
        x_next.gemv(1.0, &model.b, u, 1.0);
        match &mut process {
            Some((dist, rng)) => {
                for v in x_next.iter_mut() {
                    *v += dist.sample(rng);
                }
            }
            None if process_noise.mean != 0.0 => x_next.add_scalar_mut(process_noise.mean),
            None => {}
        }

        y.gemv(1.0, &model.c, &x, 0.0);
        y.gemv(1.0, &model.d, u, 1.0);
        match &mut observation {
            Some((dist, rng)) => {
                for v in y.iter_mut() {
                    *v += dist.sample(rng);
                }
            }
            None if observation_noise.mean != 0.0 => y.add_scalar_mut(observation_noise.mean),
            None => {}
        }

        outputs.push(y.clone());
        std::mem::swap(&mut x, &mut x_next);
    }

    SignalRecord::new(inputs.to_vec(), outputs)
}

/// Noise-free simulation from the zero initial state, returning outputs only.
/// Hot path for objective evaluation during weight optimization.
pub fn simulate_outputs(model: &StateSpaceModel, inputs: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let n = model.order();
    let q = model.output_dim();
    let mut x = DVector::<f64>::zeros(n);
    let mut x_next = DVector::<f64>::zeros(n);
    let mut y = DVector::<f64>::zeros(q);
    let mut outputs = Vec::with_capacity(inputs.len());
    for u in inputs {
        y.gemv(1.0, &model.c, &x, 0.0);
        y.gemv(1.0, &model.d, u, 1.0);
        outputs.push(y.clone());
        x_next.gemv(1.0, &model.a, &x, 0.0);
        x_next.gemv(1.0, &model.b, u, 1.0);
        std::mem::swap(&mut x, &mut x_next);
    }
    outputs
}

/// Draws a sequence of `length` i.i.d. Gaussian vectors of dimension `dim`
/// from a ChaCha8 generator seeded with `seed`. Entries are drawn vector by
/// vector, component by component. `std_dev = 0` yields constant entries
/// equal to `mean`.
pub fn generate_gaussian_signal(
    dim: usize,
    length: usize,
    mean: f64,
    std_dev: f64,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dim must be positive".into()));
    }
    if length == 0 {
        return Err(Error::InvalidArgument("length must be positive".into()));
    }
    if std_dev < 0.0 || !std_dev.is_finite() || !mean.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "invalid Gaussian parameters ({mean}, {std_dev})"
        )));
    }
    if std_dev == 0.0 {
        return Ok(vec![DVector::from_element(dim, mean); length]);
    }
    let dist = Normal::new(mean, std_dev).expect("validated parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..length)
        .map(|_| DVector::from_fn(dim, |_, _| dist.sample(&mut rng)))
        .collect())
}

/// Markov parameters `H(0) = D`, `H(i) = C A^{i-1} B` for `i >= 1`.
pub fn markov_parameters(model: &StateSpaceModel, count: usize) -> Result<Vec<DMatrix<f64>>> {
    if count == 0 {
        return Err(Error::InvalidArgument("count must be positive".into()));
    }
    let mut params = Vec::with_capacity(count);
    params.push(model.d().clone());
    // Running power: A^{i-1} B.
    let mut akb = model.b().clone();
    for _ in 1..count {
        params.push(model.c() * &akb);
        akb = model.a() * akb;
    }
    Ok(params)
}

/// Controllability and observability of a realization, decided by the ranks
/// of the stacked controllability/observability matrices under the relative
/// singular-value tolerance [`RANK_TOLERANCE`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RealizationProperties {
    pub controllable: bool,
    pub observable: bool,
    pub controllability_rank: usize,
    pub observability_rank: usize,
}

/// Rank of a matrix relative to its largest singular value.
pub fn numeric_rank(mat: &DMatrix<f64>, tolerance: f64) -> usize {
    let svd = mat.clone().svd(false, false);
    let max = svd.singular_values.max();
    if max == 0.0 {
        return 0;
    }
    svd.singular_values.iter().filter(|&&s| s > tolerance * max).count()
}

/// Stacked controllability matrix `[B, AB, ..., A^{n-1}B]`.
pub fn controllability_matrix(model: &StateSpaceModel) -> DMatrix<f64> {
    let n = model.order();
    let m = model.input_dim();
    let mut ctrb = DMatrix::<f64>::zeros(n, n * m);
    let mut akb = model.b().clone();
    for j in 0..n {
        ctrb.view_mut((0, j * m), (n, m)).copy_from(&akb);
        if j + 1 < n {
            akb = model.a() * akb;
        }
    }
    ctrb
}

/// Stacked observability matrix `[C; CA; ...; CA^{n-1}]`.
pub fn observability_matrix(model: &StateSpaceModel) -> DMatrix<f64> {
    let n = model.order();
    let q = model.output_dim();
    let mut obsv = DMatrix::<f64>::zeros(n * q, n);
    let mut ca = model.c().clone();
    for j in 0..n {
        obsv.view_mut((j * q, 0), (q, n)).copy_from(&ca);
        if j + 1 < n {
            ca = &ca * model.a();
        }
    }
    obsv
}

/// Checks controllability of `(A, B)` and observability of `(C, A)`.
pub fn check_controllability_observability(model: &StateSpaceModel) -> RealizationProperties {
    let n = model.order();
    let controllability_rank = numeric_rank(&controllability_matrix(model), RANK_TOLERANCE);
    let observability_rank = numeric_rank(&observability_matrix(model), RANK_TOLERANCE);
    RealizationProperties {
        controllable: controllability_rank == n,
        observable: observability_rank == n,
        controllability_rank,
        observability_rank,
    }
}

/// Transforms a controllable single-input model to the controllable companion
/// realization: `B = e1`, ones on the first subdiagonal of `A`, the free
/// coefficients in the last column of `A`, zeros elsewhere. The similarity
/// uses the controllability matrix `[B, AB, ..., A^{n-1}B]`, so a model
/// already in companion form is returned unchanged up to solver roundoff.
pub fn to_controllable_companion(model: &StateSpaceModel) -> Result<StateSpaceModel> {
    if model.input_dim() != 1 {
        return Err(Error::Unsupported(
            "companion transformation requires a single-input model".into(),
        ));
    }
    let t = controllability_matrix(model);
    let svd = t.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !condition.is_finite() || condition > SINGULAR_CONDITION_LIMIT {
        return Err(Error::SingularTransform { condition });
    }
    let lu = t.clone().lu();
    let a_new = lu
        .solve(&(model.a() * &t))
        .ok_or(Error::SingularTransform { condition })?;
    let b_new = lu
        .solve(model.b())
        .ok_or(Error::SingularTransform { condition })?;
    let c_new = model.c() * &t;
    StateSpaceModel::new(a_new, b_new, c_new, model.d().clone())
}

/// Built-in third-order demonstration plant (1 input, 2 outputs) in
/// controllable companion form; the default target of the experiment
/// harness and the reference basis for parameter-error metrics.
pub fn reference_plant() -> StateSpaceModel {
    StateSpaceModel::new(
        DMatrix::from_row_slice(3, 3, &[0.0, 0.0, -0.3025, 1.0, 0.0, 0.58, 0.0, 1.0, 0.7]),
        DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.0]),
        DMatrix::from_row_slice(2, 3, &[1.0, 1.9, 2.245, 3.0, 1.4, 1.71]),
        DMatrix::from_row_slice(2, 1, &[0.0, 0.0]),
    )
    .expect("reference plant is well-formed")
}

/// The same plant as [`reference_plant`] in its original (non-companion)
/// coordinates; useful for exercising the companion transformation.
pub fn reference_plant_original() -> StateSpaceModel {
    StateSpaceModel::new(
        DMatrix::from_row_slice(3, 3, &[0.64, 0.33, 0.6, -0.72, -0.34, 0.7, 0.5, 0.6, 0.4]),
        DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 1.0]),
        DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 1.0]),
        DMatrix::from_row_slice(2, 1, &[0.0, 0.0]),
    )
    .expect("reference plant is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_model(a: f64, b: f64, c: f64, d: f64) -> StateSpaceModel {
        StateSpaceModel::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, b),
            DMatrix::from_element(1, 1, c),
            DMatrix::from_element(1, 1, d),
        )
        .unwrap()
    }

    #[test]
    fn rejects_inconsistent_dimensions() {
        let bad = StateSpaceModel::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
        );
        assert!(matches!(bad, Err(Error::Dimension(_))));
    }

    #[test]
    fn rejects_non_finite_entries() {
        let bad = StateSpaceModel::new(
            DMatrix::from_element(1, 1, f64::NAN),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
        );
        assert!(matches!(bad, Err(Error::NonFinite(_))));
    }

    #[test]
    fn zero_input_zero_noise_gives_zero_output() {
        let model = reference_plant();
        let inputs = vec![DVector::zeros(1); 20];
        let record = simulate(
            &model,
            &inputs,
            &NoiseSpec::silent(),
            &NoiseSpec::silent(),
            &DVector::zeros(3),
        )
        .unwrap();
        assert!(record.outputs().iter().all(|y| y.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn impulse_response_matches_hand_recursion() {
        // u(0)=1 then zeros: y(0) = D = 0, x(1) = B, y(1) = C B = first C column.
        let model = reference_plant();
        let mut inputs = vec![DVector::zeros(1); 5];
        inputs[0] = DVector::from_element(1, 1.0);
        let record = simulate(
            &model,
            &inputs,
            &NoiseSpec::silent(),
            &NoiseSpec::silent(),
            &DVector::zeros(3),
        )
        .unwrap();
        assert_eq!(record.outputs()[0], DVector::from_column_slice(&[0.0, 0.0]));
        assert_relative_eq!(record.outputs()[1][0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(record.outputs()[1][1], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn simulation_is_deterministic() {
        let model = reference_plant();
        let inputs = generate_gaussian_signal(1, 50, 0.0, 1.0, 7).unwrap();
        let du = NoiseSpec::new(0.0, 0.1, 11).unwrap();
        let dy = NoiseSpec::new(0.0, 0.05, 13).unwrap();
        let x0 = DVector::zeros(3);
        let r1 = simulate(&model, &inputs, &du, &dy, &x0).unwrap();
        let r2 = simulate(&model, &inputs, &du, &dy, &x0).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn noise_free_simulation_is_linear() {
        let model = reference_plant();
        let u1 = generate_gaussian_signal(1, 40, 0.0, 1.0, 1).unwrap();
        let u2 = generate_gaussian_signal(1, 40, 0.0, 1.0, 2).unwrap();
        let (alpha, beta) = (0.37, -1.21);
        let combined: Vec<DVector<f64>> = u1
            .iter()
            .zip(&u2)
            .map(|(a, b)| a * alpha + b * beta)
            .collect();
        let x0 = DVector::zeros(3);
        let silent = NoiseSpec::silent();
        let y1 = simulate(&model, &u1, &silent, &silent, &x0).unwrap();
        let y2 = simulate(&model, &u2, &silent, &silent, &x0).unwrap();
        let yc = simulate(&model, &combined, &silent, &silent, &x0).unwrap();
        for k in 0..40 {
            let expect = &y1.outputs()[k] * alpha + &y2.outputs()[k] * beta;
            assert_relative_eq!(
                (&yc.outputs()[k] - expect).norm(),
                0.0,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn simulate_rejects_dimension_mismatch() {
        let model = reference_plant();
        let inputs = vec![DVector::zeros(2); 4];
        let err = simulate(
            &model,
            &inputs,
            &NoiseSpec::silent(),
            &NoiseSpec::silent(),
            &DVector::zeros(3),
        );
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn gaussian_degenerate_std_gives_constant() {
        let signal = generate_gaussian_signal(3, 10, 2.5, 0.0, 42).unwrap();
        assert!(signal.iter().all(|v| v.iter().all(|&x| x == 2.5)));
    }

    #[test]
    fn gaussian_sample_moments_converge() {
        let signal = generate_gaussian_signal(1, 100_000, 0.0, 1.0, 123).unwrap();
        let vals: Vec<f64> = signal.iter().map(|v| v[0]).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64;
        assert!(mean.abs() < 0.02, "sample mean {mean}");
        assert!((var.sqrt() - 1.0).abs() < 0.02, "sample std {}", var.sqrt());
    }

    #[test]
    fn gaussian_is_seed_deterministic_and_rejects_zero_length() {
        let a = generate_gaussian_signal(2, 100, 0.0, 1.0, 9).unwrap();
        let b = generate_gaussian_signal(2, 100, 0.0, 1.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(generate_gaussian_signal(2, 0, 0.0, 1.0, 9).is_err());
    }

    #[test]
    fn markov_parameters_scalar_example() {
        let model = scalar_model(0.5, 2.0, 3.0, 1.0);
        let params = markov_parameters(&model, 3).unwrap();
        assert_eq!(params[0][(0, 0)], 1.0);
        assert_eq!(params[1][(0, 0)], 6.0);
        assert_eq!(params[2][(0, 0)], 3.0);
    }

    #[test]
    fn markov_first_parameter_is_feedthrough() {
        let model = reference_plant();
        let params = markov_parameters(&model, 1).unwrap();
        assert_eq!(params[0], DMatrix::zeros(2, 1));
    }

    #[test]
    fn markov_matches_impulse_response() {
        let model = reference_plant_original();
        let count = 8;
        let mut inputs = vec![DVector::zeros(1); count];
        inputs[0] = DVector::from_element(1, 1.0);
        let record = simulate(
            &model,
            &inputs,
            &NoiseSpec::silent(),
            &NoiseSpec::silent(),
            &DVector::zeros(3),
        )
        .unwrap();
        let params = markov_parameters(&model, count).unwrap();
        for k in 0..count {
            assert_relative_eq!(
                (&record.outputs()[k] - params[k].column(0).clone_owned()).norm(),
                0.0,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn companion_transform_recovers_reference_realization() {
        let companion = to_controllable_companion(&reference_plant_original()).unwrap();
        let target = reference_plant();
        for (name, got, want) in [
            ("A", companion.a(), target.a()),
            ("B", companion.b(), target.b()),
            ("C", companion.c(), target.c()),
            ("D", companion.d(), target.d()),
        ] {
            assert!(
                (got - want).amax() < 1e-10,
                "{name} deviates: {got}"
            );
        }
    }

    #[test]
    fn companion_transform_is_idempotent() {
        let model = reference_plant();
        let again = to_controllable_companion(&model).unwrap();
        assert!((again.a() - model.a()).amax() < 1e-12);
        assert!((again.b() - model.b()).amax() < 1e-12);
        assert!((again.c() - model.c()).amax() < 1e-12);
    }

    #[test]
    fn companion_transform_preserves_markov_parameters() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.random::<f64>() - 0.5);
        let b = DMatrix::from_fn(3, 1, |_, _| rng.random::<f64>() + 0.1);
        let c = DMatrix::from_fn(2, 3, |_, _| rng.random::<f64>() - 0.5);
        let d = DMatrix::zeros(2, 1);
        let model = StateSpaceModel::new(a, b, c, d).unwrap();
        let companion = to_controllable_companion(&model).unwrap();
        let h0 = markov_parameters(&model, 10).unwrap();
        let h1 = markov_parameters(&companion, 10).unwrap();
        for (m0, m1) in h0.iter().zip(&h1) {
            assert!((m0 - m1).amax() < 1e-9);
        }
    }

    #[test]
    fn companion_transform_rejects_uncontrollable_and_mimo() {
        let uncontrollable = StateSpaceModel::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 1),
            DMatrix::from_row_slice(1, 2, &[1.0, 0.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(matches!(
            to_controllable_companion(&uncontrollable),
            Err(Error::SingularTransform { .. })
        ));

        let mimo = StateSpaceModel::new(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 2),
        )
        .unwrap();
        assert!(matches!(
            to_controllable_companion(&mimo),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn reference_plant_is_minimal() {
        let props = check_controllability_observability(&reference_plant());
        assert!(props.controllable && props.observable);
        assert_eq!(props.controllability_rank, 3);
        assert_eq!(props.observability_rank, 3);
    }

    #[test]
    fn degenerate_realizations_flagged() {
        let no_input = StateSpaceModel::new(
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 1),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(!check_controllability_observability(&no_input).controllable);

        let no_output = StateSpaceModel::new(
            DMatrix::identity(2, 2),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(!check_controllability_observability(&no_output).observable);
    }

    #[test]
    fn model_serialization_round_trips_exactly() {
        let model = reference_plant_original();
        let json = serde_json::to_string(&model).unwrap();
        let back: StateSpaceModel = serde_json::from_str(&json).unwrap();
        assert_eq!(model, back);
        // Schema sanity: uppercase matrix keys and explicit dims.
        assert!(json.contains("\"A\"") && json.contains("\"n\""));
    }
}
