//! Evaluation metrics: per-channel FIT scores and squared-Frobenius
//! parameter errors.

use nalgebra::DVector;

use crate::cyclic::VertexSet;
use crate::error::{Error, Result};
use crate::statespace::StateSpaceModel;

/// Per-output-channel FIT percentages plus their arithmetic mean.
///
/// FIT is 100 at perfect prediction, 0 for the mean predictor, and can be
/// arbitrarily negative; it never exceeds 100.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub per_output_fit: Vec<f64>,
    pub mean_fit: f64,
}

/// FIT between a reference signal and a model prediction, computed per
/// output channel as `(1 - sqrt(sum (y - y_hat)^2 / sum (y - y_bar)^2)) * 100`
/// with `y_bar` the reference channel mean. The mean over channels is
/// reported alongside the per-channel values.
pub fn fit(y_true: &[DVector<f64>], y_model: &[DVector<f64>]) -> Result<FitReport> {
    if y_true.len() != y_model.len() {
        return Err(Error::Dimension(format!(
            "signal lengths differ: {} vs {}",
            y_true.len(),
            y_model.len()
        )));
    }
    if y_true.len() < 2 {
        return Err(Error::InvalidArgument(
            "FIT needs at least two samples".into(),
        ));
    }
    let q = y_true[0].len();
    if y_true.iter().chain(y_model.iter()).any(|v| v.len() != q) {
        return Err(Error::Dimension(
            "all output vectors must share one dimension".into(),
        ));
    }
    let len = y_true.len() as f64;
    let mut per_output_fit = Vec::with_capacity(q);
    for ch in 0..q {
        let mean = y_true.iter().map(|v| v[ch]).sum::<f64>() / len;
        let mut num = 0.0;
        let mut den = 0.0;
        for (t, m) in y_true.iter().zip(y_model) {
            num += (t[ch] - m[ch]).powi(2);
            den += (t[ch] - mean).powi(2);
        }
        if den == 0.0 {
            return Err(Error::DegenerateReference(format!(
                "output channel {ch} of the reference signal is constant"
            )));
        }
        per_output_fit.push((1.0 - (num / den).sqrt()) * 100.0);
    }
    let mean_fit = per_output_fit.iter().sum::<f64>() / q as f64;
    Ok(FitReport { per_output_fit, mean_fit })
}

/// Squared-Frobenius parameter estimation error
/// `||A - A_m||_F^2 + ||B - B_m||_F^2 + ||C - C_m||_F^2 + ||D - D_m||_F^2`.
pub fn param_error(truth: &StateSpaceModel, estimate: &StateSpaceModel) -> Result<f64> {
    if truth.order() != estimate.order()
        || truth.input_dim() != estimate.input_dim()
        || truth.output_dim() != estimate.output_dim()
    {
        return Err(Error::Dimension(format!(
            "models differ in shape: ({}, {}, {}) vs ({}, {}, {})",
            truth.order(),
            truth.input_dim(),
            truth.output_dim(),
            estimate.order(),
            estimate.input_dim(),
            estimate.output_dim()
        )));
    }
    Ok((truth.a() - estimate.a()).norm_squared()
        + (truth.b() - estimate.b()).norm_squared()
        + (truth.c() - estimate.c()).norm_squared()
        + (truth.d() - estimate.d()).norm_squared())
}

/// Sum of [`param_error`] over all vertices of a set.
pub fn total_vertex_error(truth: &StateSpaceModel, vertices: &VertexSet) -> Result<f64> {
    let mut total = 0.0;
    for vertex in vertices.vertices() {
        total += param_error(truth, vertex)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::reference_plant;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn vectors(vals: &[f64]) -> Vec<DVector<f64>> {
        vals.iter().map(|&v| DVector::from_element(1, v)).collect()
    }

    #[test]
    fn perfect_prediction_scores_100() {
        let y = vectors(&[1.0, -2.0, 0.5, 3.0]);
        let report = fit(&y, &y).unwrap();
        assert_eq!(report.per_output_fit, vec![100.0]);
        assert_eq!(report.mean_fit, 100.0);
    }

    #[test]
    fn mean_predictor_scores_zero() {
        let y = vectors(&[1.0, 2.0, 3.0, 6.0]);
        let mean = 3.0;
        let y_hat = vectors(&[mean, mean, mean, mean]);
        let report = fit(&y, &y_hat).unwrap();
        assert_relative_eq!(report.per_output_fit[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hand_computed_example() {
        let y = vectors(&[1.0, 2.0, 3.0]);
        let y_hat = vectors(&[1.0, 2.0, 4.0]);
        let report = fit(&y, &y_hat).unwrap();
        let expect = (1.0 - (0.5f64).sqrt()) * 100.0;
        assert_relative_eq!(report.per_output_fit[0], expect, max_relative = 1e-12);
    }

    #[test]
    fn constant_reference_channel_is_rejected() {
        let y = vectors(&[2.0, 2.0, 2.0]);
        let y_hat = vectors(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            fit(&y, &y_hat),
            Err(Error::DegenerateReference(_))
        ));
    }

    #[test]
    fn fit_is_scale_invariant() {
        let y = vectors(&[1.0, 2.0, 3.0, -1.0]);
        let y_hat = vectors(&[1.1, 1.9, 3.2, -0.7]);
        let scale = 41.7;
        let ys: Vec<DVector<f64>> = y.iter().map(|v| v * scale).collect();
        let yhs: Vec<DVector<f64>> = y_hat.iter().map(|v| v * scale).collect();
        let a = fit(&y, &y_hat).unwrap();
        let b = fit(&ys, &yhs).unwrap();
        assert_relative_eq!(a.per_output_fit[0], b.per_output_fit[0], epsilon = 1e-10);
    }

    #[test]
    fn fit_is_per_channel() {
        let y: Vec<DVector<f64>> = vec![
            DVector::from_column_slice(&[1.0, 10.0]),
            DVector::from_column_slice(&[2.0, 20.0]),
            DVector::from_column_slice(&[3.0, 30.0]),
        ];
        let mut y_hat = y.clone();
        y_hat[2][0] = 4.0; // perturb channel 0 only
        let report = fit(&y, &y_hat).unwrap();
        assert!(report.per_output_fit[0] < 100.0);
        assert_eq!(report.per_output_fit[1], 100.0);
        assert_relative_eq!(
            report.mean_fit,
            (report.per_output_fit[0] + 100.0) / 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn param_error_zero_iff_equal_and_symmetric() {
        let truth = reference_plant();
        assert_eq!(param_error(&truth, &truth).unwrap(), 0.0);

        let mut a = truth.a().clone();
        a[(2, 2)] += 0.25;
        let perturbed = StateSpaceModel::new(
            a,
            truth.b().clone(),
            truth.c().clone(),
            truth.d().clone(),
        )
        .unwrap();
        let forward = param_error(&truth, &perturbed).unwrap();
        let backward = param_error(&perturbed, &truth).unwrap();
        assert_relative_eq!(forward, 0.25 * 0.25, epsilon = 1e-15);
        assert_eq!(forward, backward);
    }

    #[test]
    fn param_error_rejects_shape_mismatch() {
        let truth = reference_plant();
        let scalar = StateSpaceModel::new(
            DMatrix::from_element(1, 1, 0.5),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 0.0),
        )
        .unwrap();
        assert!(param_error(&truth, &scalar).is_err());
    }

    #[test]
    fn total_error_is_additive() {
        let truth = reference_plant();
        let mut b1 = truth.b().clone();
        b1[(0, 0)] += 0.1; // error 0.01
        let mut b2 = truth.b().clone();
        b2[(1, 0)] -= 0.3; // error 0.09
        let v1 = StateSpaceModel::new(truth.a().clone(), b1, truth.c().clone(), truth.d().clone())
            .unwrap();
        let v2 = StateSpaceModel::new(truth.a().clone(), b2, truth.c().clone(), truth.d().clone())
            .unwrap();
        let set = VertexSet::new(vec![v1, v2]).unwrap();
        assert_relative_eq!(
            total_vertex_error(&truth, &set).unwrap(),
            0.01 + 0.09,
            epsilon = 1e-12
        );
    }
}
