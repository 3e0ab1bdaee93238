//! Matrix polytope models: simplex weight vectors, convex combinations of
//! vertex models, and the serialized polytope document.

use serde::{Deserialize, Serialize};

use crate::cyclic::VertexSet;
use crate::error::{Error, Result};
use crate::statespace::StateSpaceModel;

/// Tolerance for accepting a weight vector as a member of the standard
/// simplex.
pub const SIMPLEX_TOLERANCE: f64 = 1e-10;

/// A nonnegative weight vector summing to one; the coordinate of a point
/// inside a matrix polytope.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    /// Validates a raw vector against the simplex constraints within
    /// [`SIMPLEX_TOLERANCE`].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let check = validate_simplex(&weights, SIMPLEX_TOLERANCE);
        if !check.valid {
            return Err(Error::SimplexViolation {
                violation: check.violation,
            });
        }
        Ok(Self(weights))
    }

    /// The `i`-th unit weight vector of length `len`.
    pub fn unit(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::InvalidArgument(format!(
                "unit index {index} out of range for length {len}"
            )));
        }
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        Ok(Self(w))
    }

    /// Constructs without re-validating; for internal paths whose output is
    /// feasible by construction (projection, unit vectors).
    pub(crate) fn from_feasible(weights: Vec<f64>) -> Self {
        debug_assert!(validate_simplex(&weights, 1e-9).valid);
        Self(weights)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<'de> Deserialize<'de> for SimplexWeights {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<f64>::deserialize(deserializer)?;
        SimplexWeights::new(raw).map_err(serde::de::Error::custom)
    }
}

/// Outcome of a simplex membership check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexCheck {
    pub valid: bool,
    /// `max(worst negativity, |sum - 1|)`; zero for interior points.
    pub violation: f64,
}

/// Checks `w_i >= -tolerance` for all entries and `|sum - 1| <= tolerance`,
/// reporting the violation magnitude either way.
pub fn validate_simplex(weights: &[f64], tolerance: f64) -> SimplexCheck {
    if weights.is_empty() || weights.iter().any(|w| !w.is_finite()) {
        return SimplexCheck {
            valid: false,
            violation: f64::INFINITY,
        };
    }
    let negativity = weights.iter().fold(0.0f64, |acc, &w| acc.max(-w));
    let sum_deviation = (weights.iter().sum::<f64>() - 1.0).abs();
    let violation = negativity.max(sum_deviation);
    SimplexCheck {
        valid: negativity <= tolerance && sum_deviation <= tolerance,
        violation,
    }
}

/// Uniform weights `1/N`, renormalized so the sum is exactly one.
pub fn uniform_weights(len: usize) -> Result<SimplexWeights> {
    if len == 0 {
        return Err(Error::InvalidArgument("weight length must be positive".into()));
    }
    let mut w = vec![1.0 / len as f64; len];
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    Ok(SimplexWeights::from_feasible(w))
}

/// A polytopic uncertainty model over an ordered vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeModel {
    vertex_set: VertexSet,
}

impl PolytopeModel {
    pub fn new(vertex_set: VertexSet) -> Self {
        Self { vertex_set }
    }

    pub fn vertex_set(&self) -> &VertexSet {
        &self.vertex_set
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_set.period()
    }

    /// Entrywise convex combination of all four vertex matrices at the given
    /// simplex coordinate.
    pub fn evaluate(&self, weights: &SimplexWeights) -> Result<StateSpaceModel> {
        if weights.len() != self.vertex_count() {
            return Err(Error::Dimension(format!(
                "{} weights for {} vertices",
                weights.len(),
                self.vertex_count()
            )));
        }
        let check = validate_simplex(weights.as_slice(), SIMPLEX_TOLERANCE);
        if !check.valid {
            return Err(Error::SimplexViolation {
                violation: check.violation,
            });
        }
        let vertices = self.vertex_set.vertices();
        let (n, m, q) = self.vertex_set.base_dims();
        let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
        let mut b = nalgebra::DMatrix::<f64>::zeros(n, m);
        let mut c = nalgebra::DMatrix::<f64>::zeros(q, n);
        let mut d = nalgebra::DMatrix::<f64>::zeros(q, m);
        for (&w, vertex) in weights.as_slice().iter().zip(vertices) {
            a += vertex.a() * w;
            b += vertex.b() * w;
            c += vertex.c() * w;
            d += vertex.d() * w;
        }
        StateSpaceModel::new(a, b, c, d)
    }
}

/// Serialized polytope artifact: the vertex models plus the experiment
/// metadata needed to reproduce them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolytopeDocument {
    /// Schema tag; currently `"polytope/v1"`.
    pub format: String,
    pub period: usize,
    pub seed: u64,
    /// Free-form pipeline settings (data length, noise levels, ...).
    pub settings: std::collections::BTreeMap<String, String>,
    /// Optimized weights, when a weight search was run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<SimplexWeights>,
    pub vertices: Vec<StateSpaceModel>,
}

pub const POLYTOPE_FORMAT: &str = "polytope/v1";

impl PolytopeDocument {
    pub fn new(
        polytope: &PolytopeModel,
        seed: u64,
        settings: std::collections::BTreeMap<String, String>,
        lambda_star: Option<SimplexWeights>,
    ) -> Self {
        Self {
            format: POLYTOPE_FORMAT.to_string(),
            period: polytope.vertex_count(),
            seed,
            settings,
            lambda_star,
            vertices: polytope.vertex_set().vertices().to_vec(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if doc.format != POLYTOPE_FORMAT {
            return Err(Error::Parse(format!(
                "unsupported polytope format {:?}",
                doc.format
            )));
        }
        if doc.vertices.len() != doc.period {
            return Err(Error::Parse(format!(
                "document declares period {} but carries {} vertices",
                doc.period,
                doc.vertices.len()
            )));
        }
        Ok(doc)
    }

    pub fn polytope(&self) -> Result<PolytopeModel> {
        Ok(PolytopeModel::new(VertexSet::new(self.vertices.clone())?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::reference_plant;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn scalar_vertex(a: f64) -> StateSpaceModel {
        StateSpaceModel::new(
            DMatrix::from_element(1, 1, a),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.0),
        )
        .unwrap()
    }

    fn two_vertex_polytope() -> PolytopeModel {
        PolytopeModel::new(VertexSet::new(vec![scalar_vertex(0.0), scalar_vertex(1.0)]).unwrap())
    }

    #[test]
    fn unit_weights_select_vertices() {
        let polytope = two_vertex_polytope();
        for i in 0..2 {
            let model = polytope
                .evaluate(&SimplexWeights::unit(2, i).unwrap())
                .unwrap();
            assert_eq!(model, polytope.vertex_set().vertices()[i]);
        }
    }

    #[test]
    fn identical_vertices_are_a_fixed_point() {
        let truth = reference_plant();
        let polytope =
            PolytopeModel::new(VertexSet::new(vec![truth.clone(); 4]).unwrap());
        let model = polytope
            .evaluate(&uniform_weights(4).unwrap())
            .unwrap();
        assert!((model.a() - truth.a()).amax() < 1e-15);
        assert!((model.c() - truth.c()).amax() < 1e-15);
    }

    #[test]
    fn scalar_combination_is_weighted_average() {
        let polytope = two_vertex_polytope();
        let model = polytope
            .evaluate(&SimplexWeights::new(vec![0.25, 0.75]).unwrap())
            .unwrap();
        assert_relative_eq!(model.a()[(0, 0)], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn validates_reported_optimal_weights() {
        let check = validate_simplex(&[0.003, 0.016, 0.000, 0.563, 0.418, 0.000], 1e-10);
        assert!(check.valid, "violation {}", check.violation);
    }

    #[test]
    fn flags_sum_and_sign_violations() {
        let check = validate_simplex(&[0.5, 0.6], 1e-9);
        assert!(!check.valid);
        assert_relative_eq!(check.violation, 0.1, epsilon = 1e-12);

        let check = validate_simplex(&[-0.01, 1.01], 1e-6);
        assert!(!check.valid);
        assert_relative_eq!(check.violation, 0.01, epsilon = 1e-12);
    }

    #[test]
    fn uniform_weights_examples() {
        assert_eq!(uniform_weights(1).unwrap().as_slice(), &[1.0]);
        assert_eq!(uniform_weights(4).unwrap().as_slice(), &[0.25; 4]);
        let six = uniform_weights(6).unwrap();
        assert_eq!(six.len(), 6);
        assert_relative_eq!(six.as_slice().iter().sum::<f64>(), 1.0, epsilon = 0.0);
    }

    #[test]
    fn evaluate_rejects_bad_weights() {
        let polytope = two_vertex_polytope();
        assert!(matches!(
            polytope.evaluate(&uniform_weights(3).unwrap()),
            Err(Error::Dimension(_))
        ));
        // Bypass the validated constructor to hit the evaluate-side check.
        let bad = SimplexWeights(vec![0.7, 0.7]);
        assert!(matches!(
            polytope.evaluate(&bad),
            Err(Error::SimplexViolation { .. })
        ));
    }

    #[test]
    fn polytope_document_round_trips() {
        let truth = reference_plant();
        let polytope = PolytopeModel::new(VertexSet::new(vec![truth; 3]).unwrap());
        let mut settings = std::collections::BTreeMap::new();
        settings.insert("data_length".to_string(), "3000".to_string());
        let doc = PolytopeDocument::new(&polytope, 42, settings, Some(uniform_weights(3).unwrap()));
        let json = doc.to_json().unwrap();
        let back = PolytopeDocument::from_json(&json).unwrap();
        assert_eq!(back.period, 3);
        assert_eq!(back.seed, 42);
        assert_eq!(back.vertices, doc.vertices);
        assert_eq!(back.polytope().unwrap().vertex_count(), 3);
    }

    proptest! {
        #[test]
        fn convexity_bounds_every_entry(w0 in 0.0f64..1.0) {
            let polytope = two_vertex_polytope();
            let weights = SimplexWeights::new(vec![w0, 1.0 - w0]).unwrap();
            let model = polytope.evaluate(&weights).unwrap();
            let v = model.a()[(0, 0)];
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn combination_is_affine(w0 in 0.0f64..1.0, v0 in 0.0f64..1.0, alpha in 0.0f64..1.0) {
            let polytope = two_vertex_polytope();
            let l1 = vec![w0, 1.0 - w0];
            let l2 = vec![v0, 1.0 - v0];
            let mixed: Vec<f64> = l1
                .iter()
                .zip(&l2)
                .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
                .collect();
            let e1 = polytope.evaluate(&SimplexWeights::new(l1).unwrap()).unwrap();
            let e2 = polytope.evaluate(&SimplexWeights::new(l2).unwrap()).unwrap();
            let em = polytope.evaluate(&SimplexWeights::new(mixed).unwrap()).unwrap();
            let expect = e1.a()[(0, 0)] * alpha + e2.a()[(0, 0)] * (1.0 - alpha);
            prop_assert!((em.a()[(0, 0)] - expect).abs() < 1e-12);
        }

        #[test]
        fn permutation_equivariance(w0 in 0.0f64..1.0, a0 in -1.0f64..1.0, a1 in -1.0f64..1.0) {
            let p1 = PolytopeModel::new(
                VertexSet::new(vec![scalar_vertex(a0), scalar_vertex(a1)]).unwrap(),
            );
            let p2 = PolytopeModel::new(
                VertexSet::new(vec![scalar_vertex(a1), scalar_vertex(a0)]).unwrap(),
            );
            let w = vec![w0, 1.0 - w0];
            let swapped = vec![1.0 - w0, w0];
            let e1 = p1.evaluate(&SimplexWeights::new(w).unwrap()).unwrap();
            let e2 = p2.evaluate(&SimplexWeights::new(swapped).unwrap()).unwrap();
            prop_assert!((e1.a()[(0, 0)] - e2.a()[(0, 0)]).abs() < 1e-15);
        }
    }
}
