use super::DiagGmm;
use crate::error::{check_dim, Error, Result};

/// Closed-form Bhattacharyya distance between two diagonal Gaussians.
pub fn bhattacharyya_gaussian(mean1: &[f64], var1: &[f64], mean2: &[f64], var2: &[f64]) -> Result<f64> {
    let d = mean1.len();
    check_dim(d, var1.len())?;
    check_dim(d, mean2.len())?;
    check_dim(d, var2.len())?;
    if var1.iter().chain(var2).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid(
            "Bhattacharyya distance needs positive finite variances",
        ));
    }
    let mut maha = 0.0;
    let mut logdet = 0.0;
    for i in 0..d {
        let avg = 0.5 * (var1[i] + var2[i]);
        let diff = mean1[i] - mean2[i];
        maha += diff * diff / avg;
        logdet += (avg / (var1[i] * var2[i]).sqrt()).ln();
    }
    Ok((0.125 * maha + 0.5 * logdet).max(0.0))
}

/// UBM-weighted sum of per-component Bhattacharyya distances.
///
/// GMM-to-GMM Bhattacharyya has no closed form; this matched-component
/// approximation relies on the adapted model keeping the UBM's component order.
pub fn gmm_distance(ubm: &DiagGmm, adapted: &DiagGmm) -> Result<f64> {
    check_dim(ubm.n_components(), adapted.n_components())?;
    check_dim(ubm.dim(), adapted.dim())?;
    let mut total = 0.0;
    for k in 0..ubm.n_components() {
        let b = bhattacharyya_gaussian(ubm.mean(k), ubm.variance(k), adapted.mean(k), adapted.variance(k))?;
        total += ubm.weights()[k] * b;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(
            bhattacharyya_gaussian(&[0.3], &[2.0], &[0.3], &[2.0]).unwrap(),
            0.0
        );
        let shift = bhattacharyya_gaussian(&[0.0], &[1.0], &[1.0], &[1.0]).unwrap();
        assert!((shift - 0.125).abs() < 1e-12);
        let spread = bhattacharyya_gaussian(&[0.0], &[1.0], &[0.0], &[4.0]).unwrap();
        assert!((spread - 0.5 * 1.25f64.ln()).abs() < 1e-12);
        assert!((spread - 0.11157).abs() < 1e-5);
    }

    #[test]
    fn rejects_bad_variances() {
        assert!(bhattacharyya_gaussian(&[0.0], &[0.0], &[0.0], &[1.0]).is_err());
        assert!(bhattacharyya_gaussian(&[0.0, 1.0], &[1.0], &[0.0], &[1.0]).is_err());
    }

    fn pair(mean_b: f64) -> (DiagGmm, DiagGmm) {
        let ubm = DiagGmm::new(vec![0.3, 0.7], vec![0.0, 5.0], vec![1.0, 1.0], vec![1e-3]).unwrap();
        let adapted = DiagGmm::new(
            vec![0.3, 0.7],
            vec![1.0, 5.0 + mean_b],
            vec![1.0, 1.0],
            vec![1e-3],
        )
        .unwrap();
        (ubm, adapted)
    }

    #[test]
    fn weighted_sum_of_components() {
        let (ubm, adapted) = pair(0.0);
        assert!((gmm_distance(&ubm, &adapted).unwrap() - 0.0375).abs() < 1e-12);
        assert_eq!(gmm_distance(&ubm, &ubm).unwrap(), 0.0);
    }

    #[test]
    fn single_component_reduces_to_gaussian_distance() {
        let a = DiagGmm::new(vec![1.0], vec![0.0, 1.0], vec![1.0, 2.0], vec![0.1, 0.1]).unwrap();
        let b = DiagGmm::new(vec![1.0], vec![0.5, -1.0], vec![3.0, 0.5], vec![0.1, 0.1]).unwrap();
        let direct = bhattacharyya_gaussian(a.mean(0), a.variance(0), b.mean(0), b.variance(0)).unwrap();
        assert_eq!(gmm_distance(&a, &b).unwrap(), direct);
    }

    #[test]
    fn mismatched_models_are_rejected() {
        let (ubm, _) = pair(0.0);
        let one = DiagGmm::new(vec![1.0], vec![0.0], vec![1.0], vec![1e-3]).unwrap();
        assert!(gmm_distance(&ubm, &one).is_err());
    }

    fn gaussian() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..5).prop_flat_map(|d| {
            (
                prop::collection::vec(-10.0..10.0f64, d),
                prop::collection::vec(0.01..10.0f64, d),
            )
        })
    }

    proptest! {
        #[test]
        fn symmetric_and_non_negative((m1, v1) in gaussian(), seed in 0u64..1000) {
            let d = m1.len();
            let m2: Vec<f64> = (0..d).map(|i| m1[i] + ((seed + i as u64) % 7) as f64 - 3.0).collect();
            let v2: Vec<f64> = (0..d).map(|i| v1[i] * (1.0 + ((seed * 3 + i as u64) % 5) as f64)).collect();
            let ab = bhattacharyya_gaussian(&m1, &v1, &m2, &v2).unwrap();
            let ba = bhattacharyya_gaussian(&m2, &v2, &m1, &v1).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
            prop_assert_eq!(bhattacharyya_gaussian(&m1, &v1, &m1, &v1).unwrap(), 0.0);
            let differs = m1.iter().zip(&m2).any(|(a, b)| a != b) || v1.iter().zip(&v2).any(|(a, b)| a != b);
            if differs {
                prop_assert!(ab > 0.0);
            }
        }
    }
}
