//! Forecast error metrics: MAE, RMSE, cosine similarity and the generalized
//! (Ruzicka) Jaccard distance, plus sample-weighted pooling of reports.

use std::io::Write;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub mae: f64,
    pub rmse: f64,
    pub cosine_sim: f64,
    pub jaccard_dist: f64,
    pub n: usize,
}

/// Scores `pred` against `actual`.
///
/// Cosine similarity is 1 when both vectors are zero and 0 when exactly one
/// is. Jaccard distance is `1 − Σmin/Σmax` over the values clipped at zero,
/// and 0 when both clipped sums vanish.
pub fn evaluate(pred: &[f64], actual: &[f64]) -> Result<MetricReport> {
    if pred.len() != actual.len() {
        return Err(Error::arg(format!(
            "prediction has {} values, actual has {}",
            pred.len(),
            actual.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::arg("cannot evaluate empty vectors"));
    }
    let n = pred.len();
    let (mut abs_sum, mut sq_sum) = (0.0, 0.0);
    let (mut dot, mut pp, mut aa) = (0.0, 0.0, 0.0);
    let (mut min_sum, mut max_sum) = (0.0, 0.0);
    for (&p, &a) in pred.iter().zip(actual) {
        let e = p - a;
        abs_sum += e.abs();
        sq_sum += e * e;
        dot += p * a;
        pp += p * p;
        aa += a * a;
        let (pc, ac) = (p.max(0.0), a.max(0.0));
        min_sum += pc.min(ac);
        max_sum += pc.max(ac);
    }
    let cosine_sim = match (pp == 0.0, aa == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => {
            // One square root keeps identical vectors at exactly 1.
            let norm = match (pp * aa).sqrt() {
                n if n.is_finite() && n > 0.0 => n,
                _ => pp.sqrt() * aa.sqrt(),
            };
            (dot / norm).clamp(-1.0, 1.0)
        }
    };
    let jaccard_dist = if max_sum == 0.0 {
        0.0
    } else {
        1.0 - min_sum / max_sum
    };
    Ok(MetricReport {
        mae: abs_sum / n as f64,
        rmse: (sq_sum / n as f64).sqrt(),
        cosine_sim,
        jaccard_dist,
        n,
    })
}

/// Pools reports as if their samples were concatenated for MAE and RMSE;
/// cosine and Jaccard become sample-weighted means of the per-report values.
pub fn aggregate(reports: &[MetricReport]) -> Result<MetricReport> {
    if reports.is_empty() {
        return Err(Error::arg("cannot aggregate an empty list of reports"));
    }
    if reports.len() == 1 {
        return Ok(reports[0]);
    }
    let n: usize = reports.iter().map(|r| r.n).sum();
    if n == 0 {
        return Err(Error::arg("reports carry no samples"));
    }
    let weighted = |f: fn(&MetricReport) -> f64| {
        reports.iter().map(|r| r.n as f64 * f(r)).sum::<f64>() / n as f64
    };
    Ok(MetricReport {
        mae: weighted(|r| r.mae),
        rmse: weighted(|r| r.rmse * r.rmse).sqrt(),
        cosine_sim: weighted(|r| r.cosine_sim),
        jaccard_dist: weighted(|r| r.jaccard_dist),
        n,
    })
}

/// Writes `scope,metric,value,n` rows for each `(scope, report)` pair.
pub fn write_report_csv<'a, W: Write>(
    rows: impl IntoIterator<Item = (&'a str, &'a MetricReport)>,
    mut w: W,
) -> Result<()> {
    writeln!(w, "scope,metric,value,n")?;
    for (scope, r) in rows {
        for (name, value) in [
            ("mae", r.mae),
            ("jaccard_dist", r.jaccard_dist),
            ("cosine_sim", r.cosine_sim),
            ("rmse", r.rmse),
        ] {
            writeln!(w, "{scope},{name},{value},{}", r.n)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_vectors() {
        let v = [0.5, 2.0, 0.0, 1.5];
        let r = evaluate(&v, &v).unwrap();
        assert_eq!((r.mae, r.rmse, r.jaccard_dist, r.n), (0.0, 0.0, 0.0, 4));
        assert!((r.cosine_sim - 1.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_support() {
        let r = evaluate(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!((r.mae, r.rmse, r.cosine_sim, r.jaccard_dist), (1.0, 1.0, 0.0, 1.0));
    }

    #[test]
    fn zero_vector_conventions() {
        let r = evaluate(&[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!((r.cosine_sim, r.jaccard_dist), (1.0, 0.0));
        let r = evaluate(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!((r.cosine_sim, r.jaccard_dist), (0.0, 1.0));
    }

    #[test]
    fn errors() {
        assert!(matches!(evaluate(&[], &[]), Err(Error::Argument(_))));
        assert!(matches!(evaluate(&[1.0], &[1.0, 2.0]), Err(Error::Argument(_))));
        assert!(matches!(aggregate(&[]), Err(Error::Argument(_))));
    }

    #[test]
    fn matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let p: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..3.0)).collect();
            let a: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..3.0)).collect();
            let r = evaluate(&p, &a).unwrap();

            let mut mae = 0.0;
            let mut mse = 0.0;
            for i in 0..10 {
                mae += (p[i] - a[i]).abs() / 10.0;
                mse += (p[i] - a[i]) * (p[i] - a[i]) / 10.0;
            }
            let dot: f64 = (0..10).map(|i| p[i] * a[i]).sum();
            let np: f64 = (0..10).map(|i| p[i] * p[i]).sum::<f64>().sqrt();
            let na: f64 = (0..10).map(|i| a[i] * a[i]).sum::<f64>().sqrt();
            let mins: f64 = (0..10).map(|i| if p[i] < a[i] { p[i] } else { a[i] }).sum();
            let maxs: f64 = (0..10).map(|i| if p[i] > a[i] { p[i] } else { a[i] }).sum();

            assert!((r.mae - mae).abs() < 1e-12);
            assert!((r.rmse - mse.sqrt()).abs() < 1e-12);
            assert!((r.cosine_sim - dot / (np * na)).abs() < 1e-12);
            assert!((r.jaccard_dist - (1.0 - mins / maxs)).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregate_cases() {
        let r = evaluate(&[1.0, 2.0], &[1.5, 2.0]).unwrap();
        assert_eq!(aggregate(&[r]).unwrap(), r);
        let twice = aggregate(&[r, r]).unwrap();
        assert!((twice.mae - r.mae).abs() < 1e-15);
        assert!((twice.rmse - r.rmse).abs() < 1e-15);
        assert!((twice.cosine_sim - r.cosine_sim).abs() < 1e-15);
        assert!((twice.jaccard_dist - r.jaccard_dist).abs() < 1e-15);
        assert_eq!(twice.n, 4);

        let a = evaluate(&[1.0], &[1.0]).unwrap();
        let b = evaluate(&[1.2], &[1.0]).unwrap();
        assert!((aggregate(&[a, b]).unwrap().mae - 0.1).abs() < 1e-12);
    }

    #[test]
    fn report_csv_rows() {
        let r = evaluate(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_report_csv([("3", &r), ("ALL", &r)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("scope,metric,value,n\n3,mae,1,2\n"));
        assert_eq!(text.lines().count(), 9);
    }

    fn vecs() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..20).prop_flat_map(|n| {
            (
                proptest::collection::vec(-5.0f64..5.0, n),
                proptest::collection::vec(-5.0f64..5.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae((p, a) in vecs()) {
            let r = evaluate(&p, &a).unwrap();
            prop_assert!(r.rmse >= r.mae - 1e-12);
            let mean_err = p.iter().zip(&a).map(|(x, y)| x - y).sum::<f64>() / p.len() as f64;
            prop_assert!(r.rmse >= mean_err.abs() - 1e-12);
            prop_assert!((-1.0..=1.0).contains(&r.cosine_sim));
            prop_assert!((0.0..=1.0).contains(&r.jaccard_dist));
        }

        #[test]
        fn scale_behavior((p, a) in vecs(), c in 0.1f64..10.0) {
            let r = evaluate(&p, &a).unwrap();
            let ps: Vec<f64> = p.iter().map(|v| c * v).collect();
            let as_: Vec<f64> = a.iter().map(|v| c * v).collect();
            let s = evaluate(&ps, &as_).unwrap();
            prop_assert!((s.mae - c * r.mae).abs() < 1e-9 * (1.0 + c * r.mae));
            prop_assert!((s.rmse - c * r.rmse).abs() < 1e-9 * (1.0 + c * r.rmse));
            prop_assert!((s.cosine_sim - r.cosine_sim).abs() < 1e-9);
            prop_assert!((s.jaccard_dist - r.jaccard_dist).abs() < 1e-9);
        }

        #[test]
        fn jaccard_is_symmetric_with_identity(
            (p, a) in vecs().prop_map(|(p, a)| {
                (p.into_iter().map(f64::abs).collect::<Vec<_>>(),
                 a.into_iter().map(f64::abs).collect::<Vec<_>>())
            })
        ) {
            let pa = evaluate(&p, &a).unwrap().jaccard_dist;
            let ap = evaluate(&a, &p).unwrap().jaccard_dist;
            prop_assert!((pa - ap).abs() < 1e-12);
            prop_assert_eq!(evaluate(&p, &p).unwrap().jaccard_dist, 0.0);
            if p != a {
                prop_assert!(pa > 0.0);
            }
        }
    }
}
