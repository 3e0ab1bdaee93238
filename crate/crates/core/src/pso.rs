//! Global-best particle swarm optimization over the standard simplex.
//!
//! Particles move in the raw coordinate space; every evaluation projects the
//! raw point onto the simplex and adds a quadratic penalty on the
//! pre-projection violation, so the search is unconstrained while the
//! returned optimum is always feasible. The penalty scale is calibrated from
//! the median objective value of the initial (feasible) population.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polytope::{validate_simplex, PolytopeModel, SimplexWeights};

/// Swarm settings. Defaults follow the reference study: population 50,
/// 200 iterations, inertia 0.7, cognitive and social coefficients 2.0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsoParams {
    pub population: usize,
    pub max_iterations: usize,
    /// Inertia weight `w` in `(0, 1]`.
    pub inertia: f64,
    /// Cognitive coefficient `c1`.
    pub cognitive: f64,
    /// Social coefficient `c2`.
    pub social: f64,
    /// Base penalty coefficient `rho`; scaled by the initial-population
    /// median objective value at run time.
    pub penalty_coefficient: f64,
    pub seed: u64,
}

impl PsoParams {
    pub fn new(seed: u64) -> Self {
        Self {
            population: 50,
            max_iterations: 200,
            inertia: 0.7,
            cognitive: 2.0,
            social: 2.0,
            penalty_coefficient: 1e3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::InvalidArgument("population must be at least 2".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be positive".into()));
        }
        if !(self.inertia > 0.0 && self.inertia <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "inertia must lie in (0, 1], got {}",
                self.inertia
            )));
        }
        if !(self.cognitive > 0.0) || !(self.social > 0.0) {
            return Err(Error::InvalidArgument(
                "cognitive and social coefficients must be positive".into(),
            ));
        }
        if !(self.penalty_coefficient > 0.0) {
            return Err(Error::InvalidArgument(
                "penalty coefficient must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Search outcome: the feasible best point, its value, the per-iteration
/// global-best trace (never increasing), and the number of objective
/// evaluations.
#[derive(Debug, Clone)]
pub struct ObjectiveReport {
    pub best_weights: SimplexWeights,
    pub best_value: f64,
    pub value_history: Vec<f64>,
    pub evaluations: usize,
}

/// Clamps negative entries to zero and renormalizes to unit sum; an
/// all-nonpositive input falls back to uniform weights. NaN entries are
/// treated as zero.
pub fn project_to_simplex(raw: &[f64]) -> SimplexWeights {
    assert!(!raw.is_empty(), "cannot project an empty vector");
    let clamped: Vec<f64> = raw
        .iter()
        .map(|&v| if v > 0.0 && v.is_finite() { v } else { 0.0 })
        .collect();
    let sum: f64 = clamped.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        let uniform = vec![1.0 / raw.len() as f64; raw.len()];
        return SimplexWeights::from_feasible(normalize(uniform));
    }
    SimplexWeights::from_feasible(normalize(clamped))
}

fn normalize(mut w: Vec<f64>) -> Vec<f64> {
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Projection plus the pre-projection violation magnitude.
pub fn project_with_violation(raw: &[f64]) -> (SimplexWeights, f64) {
    let violation = validate_simplex(raw, 0.0).violation;
    (project_to_simplex(raw), violation.min(f64::MAX))
}

/// An objective defined on feasible simplex points. Evaluation during the
/// swarm search always happens at the projected point; the violation penalty
/// is added on top by the optimizer.
pub trait SimplexObjective: Sync {
    fn cost(&self, weights: &SimplexWeights) -> f64;

    /// Full penalized objective at a raw search point: cost at the projected
    /// point plus `rho * violation^2`.
    fn penalized_cost(&self, raw: &[f64], rho: f64) -> f64 {
        let (weights, violation) = project_with_violation(raw);
        self.cost(&weights) + rho * violation * violation
    }
}

impl<F: Fn(&SimplexWeights) -> f64 + Sync> SimplexObjective for F {
    fn cost(&self, weights: &SimplexWeights) -> f64 {
        self(weights)
    }
}

/// Sum of squared prediction errors of the polytope model at a given weight
/// vector, simulated noise-free from the zero state over a validation
/// record.
pub struct PredictionErrorObjective {
    polytope: PolytopeModel,
    validation_inputs: Vec<DVector<f64>>,
    validation_outputs: Vec<DVector<f64>>,
}

impl PredictionErrorObjective {
    pub fn new(
        polytope: PolytopeModel,
        validation_inputs: Vec<DVector<f64>>,
        validation_outputs: Vec<DVector<f64>>,
    ) -> Result<Self> {
        if validation_inputs.len() != validation_outputs.len() || validation_inputs.is_empty() {
            return Err(Error::Dimension(
                "validation inputs and outputs must be non-empty and equally long".into(),
            ));
        }
        let (_, m, q) = polytope.vertex_set().base_dims();
        if validation_inputs.iter().any(|u| u.len() != m)
            || validation_outputs.iter().any(|y| y.len() != q)
        {
            return Err(Error::Dimension(format!(
                "validation record must carry {m}-dim inputs and {q}-dim outputs"
            )));
        }
        Ok(Self {
            polytope,
            validation_inputs,
            validation_outputs,
        })
    }

    pub fn polytope(&self) -> &PolytopeModel {
        &self.polytope
    }
}

impl SimplexObjective for PredictionErrorObjective {
    fn cost(&self, weights: &SimplexWeights) -> f64 {
        let model = match self.polytope.evaluate(weights) {
            Ok(m) => m,
            Err(_) => return f64::INFINITY,
        };
        let n = model.order();
        let q = model.output_dim();
        let mut x = DVector::<f64>::zeros(n);
        let mut x_next = DVector::<f64>::zeros(n);
        let mut y = DVector::<f64>::zeros(q);
        let mut acc = 0.0;
        for (u, y_val) in self.validation_inputs.iter().zip(&self.validation_outputs) {
            y.gemv(1.0, model.c(), &x, 0.0);
            y.gemv(1.0, model.d(), u, 1.0);
            y -= y_val;
            acc += y.norm_squared();
            x_next.gemv(1.0, model.a(), &x, 0.0);
            x_next.gemv(1.0, model.b(), u, 1.0);
            std::mem::swap(&mut x, &mut x_next);
        }
        acc
    }
}

/// Runs global-best PSO over a `dimension`-simplex. Deterministic for fixed
/// `(objective, dimension, params)`: randoms come from one seeded ChaCha8
/// stream and are drawn per particle index before any evaluation of the
/// iteration.
pub fn optimize<O: SimplexObjective>(
    objective: &O,
    dimension: usize,
    params: &PsoParams,
) -> Result<ObjectiveReport> {
    params.validate()?;
    if dimension == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let pop = params.population;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    // Initial positions uniform on the simplex (normalized exponentials);
    // velocities start at zero.
    let mut positions: Vec<Vec<f64>> = (0..pop)
        .map(|_| {
            let draws: Vec<f64> = (0..dimension)
                .map(|_| -(1.0 - rng.random::<f64>()).ln())
                .collect();
            project_to_simplex(&draws).as_slice().to_vec()
        })
        .collect();
    let mut velocities = vec![vec![0.0; dimension]; pop];

    let mut costs: Vec<f64> = positions
        .iter()
        .map(|x| objective.penalized_cost(x, 0.0))
        .collect();
    let mut evaluations = pop;

    // Penalty scale: base coefficient times the median initial objective
    // (initial points are feasible, so no penalty is involved here).
    let rho = {
        let mut sorted = costs.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let median = if pop % 2 == 1 {
            sorted[pop / 2]
        } else {
            0.5 * (sorted[pop / 2 - 1] + sorted[pop / 2])
        };
        if median.is_finite() && median > 0.0 {
            params.penalty_coefficient * median
        } else {
            params.penalty_coefficient
        }
    };

    let mut pbest = positions.clone();
    let mut pbest_cost = costs.clone();
    let mut gbest_idx = 0;
    for p in 1..pop {
        if pbest_cost[p] < pbest_cost[gbest_idx] {
            gbest_idx = p;
        }
    }
    let mut gbest = pbest[gbest_idx].clone();
    let mut gbest_cost = pbest_cost[gbest_idx];
    let mut value_history = Vec::with_capacity(params.max_iterations + 1);
    value_history.push(gbest_cost);

    for _ in 0..params.max_iterations {
        // Move every particle against the previous global best, drawing all
        // randoms in particle order first.
        for p in 0..pop {
            for d in 0..dimension {
                let r1 = rng.random::<f64>();
                let r2 = rng.random::<f64>();
                velocities[p][d] = params.inertia * velocities[p][d]
                    + params.cognitive * r1 * (pbest[p][d] - positions[p][d])
                    + params.social * r2 * (gbest[d] - positions[p][d]);
                positions[p][d] += velocities[p][d];
            }
        }
        for (p, position) in positions.iter().enumerate() {
            costs[p] = objective.penalized_cost(position, rho);
        }
        evaluations += pop;
        for p in 0..pop {
            if costs[p] < pbest_cost[p] {
                pbest_cost[p] = costs[p];
                pbest[p].clone_from(&positions[p]);
            }
        }
        for p in 0..pop {
            if pbest_cost[p] < gbest_cost {
                gbest_cost = pbest_cost[p];
                gbest.clone_from(&pbest[p]);
            }
        }
        value_history.push(gbest_cost);
    }

    Ok(ObjectiveReport {
        best_weights: project_to_simplex(&gbest),
        best_value: gbest_cost,
        value_history,
        evaluations,
    })
}
