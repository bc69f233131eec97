use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub threshold: f64,
    /// `None` when no prediction reaches the threshold.
    pub mae: Option<f64>,
    pub n: usize,
}

/// 0, 0.5, …, 10.
pub fn default_thresholds() -> Vec<f64> {
    (0..=20).map(|i| f64::from(i) * 0.5).collect()
}

/// MAE over the `(label, truth, confidence)` triples whose confidence is at
/// least each threshold.
pub fn confidence_curve(predictions: &[(f64, f64, f64)], thresholds: &[f64]) -> Vec<CurvePoint> {
    thresholds
        .iter()
        .map(|&c| {
            let (sum, n) = predictions
                .iter()
                .filter(|p| p.2 >= c)
                .fold((0.0, 0usize), |(s, n), p| (s + (p.0 - p.1).abs(), n + 1));
            CurvePoint {
                threshold: c,
                mae: (n > 0).then(|| sum / n as f64),
                n,
            }
        })
        .collect()
}

/// `threshold,mae,n`; an undefined MAE is written as `NA`.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("threshold,mae,n\n");
    for p in points {
        match p.mae {
            Some(m) => out.push_str(&format!("{},{},{}\n", p.threshold, m, p.n)),
            None => out.push_str(&format!("{},NA,{}\n", p.threshold, p.n)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_confidences_share_one_mae() {
        let preds = [(0.45, 0.5, 2.0), (0.15, 0.3, 2.0), (0.85, 0.8, 2.0)];
        let curve = confidence_curve(&preds, &[0.0, 1.0, 2.0]);
        assert!(curve.iter().all(|p| p.mae == curve[0].mae && p.n == 3));
    }

    #[test]
    fn exact_high_confidence_items() {
        let preds = [(0.45, 0.45, 9.0), (0.15, 0.65, 0.5), (0.75, 0.75, 8.0)];
        let curve = confidence_curve(&preds, &default_thresholds());
        let top = curve.iter().find(|p| p.threshold == 8.0).unwrap();
        assert_eq!((top.mae, top.n), (Some(0.0), 2));
        let last = curve.last().unwrap();
        assert_eq!((last.mae, last.n), (None, 0));
        assert!(curve_csv(&curve).ends_with("10,NA,0\n"));
    }

    proptest::proptest! {
        #[test]
        fn retained_count_non_increasing(
            preds in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..10.0), 1..60)
        ) {
            let curve = confidence_curve(&preds, &default_thresholds());
            for w in curve.windows(2) {
                proptest::prop_assert!(w[1].n <= w[0].n);
            }
        }
    }
}
