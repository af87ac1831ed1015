//! Run metrics: test accuracy, probe-set gradient norm, moving averages.

use crate::error::{Error, Result};
use crate::nn::{self, GradVector, Sample};
use crate::scalar::{from_f64, Scalar};
use crate::split::{SplitArch, SplitParams};

/// Fraction of test samples whose argmax logit matches the label.
/// Logit ties break to the lowest class index.
pub fn test_accuracy<S: Scalar>(
    arch: &SplitArch,
    theta: &SplitParams<S>,
    test: &[Sample<S>],
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::contract("empty test set"));
    }
    let joint = arch.joint();
    let params = theta.to_joint();
    let mut correct = 0usize;
    for sample in test {
        let (logits, _) = nn::forward(&joint, &params, &sample.x)?;
        let mut pred = 0usize;
        for (k, &z) in logits.iter().enumerate() {
            if z > logits[pred] {
                pred = k;
            }
        }
        if pred == sample.y {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

/// Squared L2 norm of the full-parameter gradient of the mean loss over
/// the probe set.
pub fn grad_norm_probe<S: Scalar>(
    arch: &SplitArch,
    theta: &SplitParams<S>,
    probe: &[Sample<S>],
) -> Result<S> {
    if probe.is_empty() {
        return Err(Error::contract("empty probe set"));
    }
    let joint = arch.joint();
    let params = theta.to_joint();
    let inv_n = S::one() / from_f64::<S>(probe.len() as f64);
    let mut mean = GradVector::<S>::zeros(&joint);
    for sample in probe {
        let (_, tape) = nn::forward(&joint, &params, &sample.x)?;
        let (_, dlogits) = nn::softmax_cross_entropy(tape.output(), sample.y)?;
        let (grad, _) = nn::backward(&joint, &params, &tape, &dlogits)?;
        mean.add_scaled(&grad, inv_n);
    }
    Ok(mean.norm_sq())
}

/// Trailing moving average; the first `window - 1` entries average over
/// the available prefix.
pub fn moving_average(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::contract("moving-average window must be >= 1"));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for i in 0..series.len() {
        sum += series[i];
        if i >= window {
            sum -= series[i - window];
        }
        let count = (i + 1).min(window);
        out.push(sum / count as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, Activation, Arch, LayerSpec, ParamVector};

    fn split_arch(input: usize, cut: usize, classes: usize) -> SplitArch {
        let client =
            Arch::new(vec![LayerSpec::new(input, cut, Activation::Relu).unwrap()]).unwrap();
        let ap = Arch::new(vec![
            LayerSpec::new(cut, classes, Activation::Identity).unwrap(),
        ])
        .unwrap();
        SplitArch::new(client, ap).unwrap()
    }

    fn balanced_test_set(classes: usize, dim: usize, per_class: usize) -> Vec<Sample<f64>> {
        let mut out = Vec::new();
        for k in 0..classes {
            for i in 0..per_class {
                let x = (0..dim)
                    .map(|d| ((k * dim + d + i) as f64 * 0.13).sin())
                    .collect();
                out.push(Sample { x, y: k });
            }
        }
        out
    }

    #[test]
    fn constant_logits_predict_class_zero() {
        let arch = split_arch(4, 3, 10);
        let mut theta = SplitParams::from_joint(&arch, &init_params(&arch.joint(), 1)).unwrap();
        theta.phi = ParamVector::zeros(arch.ap());
        let test = balanced_test_set(10, 4, 3);
        let acc = test_accuracy(&arch, &theta, &test).unwrap();
        // Tie-break picks class 0, which holds 1/10 of a balanced set.
        assert!((acc - 0.1).abs() <= 1e-12);
    }

    #[test]
    fn single_sample_accuracy_is_zero_or_one() {
        let arch = split_arch(4, 3, 2);
        let theta = SplitParams::from_joint(&arch, &init_params(&arch.joint(), 2)).unwrap();
        let test = vec![Sample {
            x: vec![0.2, -0.4, 0.9, 0.0],
            y: 1,
        }];
        let acc = test_accuracy(&arch, &theta, &test).unwrap();
        assert!(acc == 0.0 || acc == 1.0);
    }

    #[test]
    fn accuracy_bounds_hold() {
        let arch = split_arch(3, 2, 3);
        let theta = SplitParams::from_joint(&arch, &init_params(&arch.joint(), 3)).unwrap();
        let test = balanced_test_set(3, 3, 5);
        let acc = test_accuracy(&arch, &theta, &test).unwrap();
        assert!((0.0..=1.0).contains(&acc));
    }

    #[test]
    fn grad_norm_matches_finite_differences() {
        let arch = split_arch(3, 4, 3);
        let theta = SplitParams::from_joint(&arch, &init_params(&arch.joint(), 4)).unwrap();
        let probe = balanced_test_set(3, 3, 2);

        let value = grad_norm_probe(&arch, &theta, &probe).unwrap();

        let joint = arch.joint();
        let fd = nn::finite_diff_grad(
            |params| {
                let mut sum = 0.0;
                for s in &probe {
                    let (logits, _) = nn::forward(&joint, params, &s.x).unwrap();
                    let (l, _) = nn::softmax_cross_entropy(&logits, s.y).unwrap();
                    sum += l;
                }
                sum / probe.len() as f64
            },
            &theta.to_joint(),
            1e-5,
        );
        let expected = fd.norm_sq();
        assert!(
            (value - expected).abs() <= 1e-6 * expected.max(1e-12),
            "{value} vs {expected}"
        );
    }

    #[test]
    fn moving_average_window_one_is_identity() {
        let series = [3.0, 1.0, 4.0, 1.5];
        assert_eq!(moving_average(&series, 1).unwrap(), series.to_vec());
    }

    #[test]
    fn moving_average_constant_series_unchanged() {
        let series = [2.5; 7];
        assert_eq!(moving_average(&series, 3).unwrap(), series.to_vec());
    }

    #[test]
    fn moving_average_prefix_behavior() {
        assert_eq!(moving_average(&[0.0, 10.0], 2).unwrap(), vec![0.0, 5.0]);
    }

    #[test]
    fn moving_average_rejects_zero_window() {
        assert!(moving_average(&[1.0], 0).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn moving_average_stays_within_range(
                series in proptest::collection::vec(-10.0f64..10.0, 1..30),
                window in 1usize..8,
            ) {
                let out = moving_average(&series, window).unwrap();
                let lo = series.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for v in out {
                    prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9);
                }
            }
        }
    }
}
