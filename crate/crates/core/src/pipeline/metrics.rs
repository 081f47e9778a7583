use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{check_dim, Error, Result};

/// A correlation coefficient with its two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub coefficient: f64,
    pub p_value: f64,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    check_dim(x.len(), y.len())?;
    if x.len() < 3 {
        return Err(Error::TooShort {
            what: "paired sample",
            needed: 3,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value in paired sample"));
    }
    Ok(())
}

/// p-value of `r` under the null via `t = r sqrt((n-2)/(1-r^2))`, n-2 degrees of freedom.
fn t_test(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

fn raw_pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation of a constant sample".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_pair(x, y)?;
    let r = raw_pearson(x, y)?;
    Ok(Correlation {
        coefficient: r,
        p_value: t_test(r, x.len()),
    })
}

/// 1-based ranks, ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation> {
    check_pair(x, y)?;
    let r = raw_pearson(&average_ranks(x), &average_ranks(y))?;
    Ok(Correlation {
        coefficient: r,
        p_value: t_test(r, x.len()),
    })
}

pub fn median_abs_error(truth: &[f64], predicted: &[f64]) -> Result<f64> {
    check_dim(truth.len(), predicted.len())?;
    if truth.is_empty() {
        return Err(Error::TooShort {
            what: "paired sample",
            needed: 1,
            got: 0,
        });
    }
    let mut err: Vec<f64> = truth.iter().zip(predicted).map(|(a, b)| (a - b).abs()).collect();
    if err.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("non-finite value in paired sample"));
    }
    err.sort_by(f64::total_cmp);
    let n = err.len();
    Ok(if n % 2 == 1 {
        err[n / 2]
    } else {
        0.5 * (err[n / 2 - 1] + err[n / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linear_relation() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap().coefficient - 1.0).abs() < 1e-12);
        assert_eq!(spearman(&x, &y).unwrap().coefficient, 1.0);
        assert_eq!(pearson(&x, &y).unwrap().p_value, 0.0);
    }

    #[test]
    fn cubic_is_monotone_not_linear() {
        let x = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.powi(3)).collect();
        assert_eq!(spearman(&x, &y).unwrap().coefficient, 1.0);
        assert!(pearson(&x, &y).unwrap().coefficient < 1.0);
    }

    #[test]
    fn offset_predictions() {
        let t = [10.0, 20.0, 35.0, 3.0];
        let p: Vec<f64> = t.iter().map(|v| v + 5.0).collect();
        assert_eq!(median_abs_error(&t, &p).unwrap(), 5.0);
    }

    #[test]
    fn constant_input_is_undefined() {
        let x = [1.0, 2.0, 3.0];
        let c = [4.0; 3];
        assert!(matches!(pearson(&x, &c), Err(Error::Undefined(_))));
        assert!(matches!(spearman(&c, &x), Err(Error::Undefined(_))));
        assert!(pearson(&x[..2], &c[..2]).is_err());
    }

    #[test]
    fn ties_share_ranks() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn p_value_matches_table() {
        // r = 0.5, n = 10: t = 1.633 on 8 df, two-sided p = 0.1411.
        let r = 0.5;
        assert!((t_test(r, 10) - 0.141_1).abs() < 5e-4);
    }

    proptest! {
        #[test]
        fn spearman_ignores_monotone_maps(v in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..40)) {
            let (x, y): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            if let Ok(base) = spearman(&x, &y) {
                let tx: Vec<f64> = x.iter().map(|a| (a / 10.0).exp()).collect();
                let ty: Vec<f64> = y.iter().map(|b| b * b * b - 7.0).collect();
                let moved = spearman(&tx, &ty).unwrap();
                prop_assert!((moved.coefficient - base.coefficient).abs() < 1e-12);
            }
        }

        #[test]
        fn mae_ignores_order(v in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..40), seed in any::<u64>()) {
            let (t, p): (Vec<f64>, Vec<f64>) = v.iter().copied().unzip();
            let mut idx: Vec<usize> = (0..t.len()).collect();
            let mut s = seed;
            for i in (1..idx.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                idx.swap(i, (s >> 33) as usize % (i + 1));
            }
            let tp: Vec<f64> = idx.iter().map(|&i| t[i]).collect();
            let pp: Vec<f64> = idx.iter().map(|&i| p[i]).collect();
            prop_assert_eq!(median_abs_error(&t, &p).unwrap(), median_abs_error(&tp, &pp).unwrap());
        }
    }
}
