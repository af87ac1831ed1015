//! Cut-layer split of a dense network.
//!
//! The client half `g(x, gamma)` produces cut-layer activations; the
//! access-point half `h(a, phi)` consumes them and computes the loss.
//! The four operations here are the per-batch halves of the exchange:
//! client forward, AP forward+loss, AP backward (which yields the
//! per-sample cut-layer gradients), client backward.
//!
//! Batch semantics are a map over samples: vectorized implementations
//! would have to be bit-compatible with the per-sample definition.

use crate::error::{Error, Result};
use crate::nn::{self, Arch, GradVector, ParamVector, Sample, Tape};
use crate::scalar::{from_f64, Scalar};

/// The two halves of an architecture around the cut layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitArch {
    client: Arch,
    ap: Arch,
}

impl SplitArch {
    pub fn new(client: Arch, ap: Arch) -> Result<Self> {
        if client.output_dim() != ap.input_dim() {
            return Err(Error::config(format!(
                "cut-layer width mismatch: client outputs {}, AP expects {}",
                client.output_dim(),
                ap.input_dim()
            )));
        }
        Ok(SplitArch { client, ap })
    }

    pub fn client(&self) -> &Arch {
        &self.client
    }

    pub fn ap(&self) -> &Arch {
        &self.ap
    }

    /// Cut-layer width `d_c`.
    pub fn cut_width(&self) -> usize {
        self.client.output_dim()
    }

    /// Client-side parameter count `d_CL`.
    pub fn client_param_count(&self) -> usize {
        self.client.param_count()
    }

    /// AP-side parameter count `d_AP`.
    pub fn ap_param_count(&self) -> usize {
        self.ap.param_count()
    }

    pub fn num_classes(&self) -> usize {
        self.ap.output_dim()
    }

    /// The un-split concatenated network, used by oracles and metrics.
    pub fn joint(&self) -> Arch {
        self.client
            .joined(&self.ap)
            .expect("halves chain by construction")
    }
}

/// Parameters partitioned across the cut layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitParams<S> {
    pub gamma: ParamVector<S>,
    pub phi: ParamVector<S>,
}

impl<S: Scalar> SplitParams<S> {
    pub fn new(arch: &SplitArch, gamma: ParamVector<S>, phi: ParamVector<S>) -> Result<Self> {
        if gamma.len() != arch.client_param_count() || phi.len() != arch.ap_param_count() {
            return Err(Error::contract("split parameter layout mismatch"));
        }
        Ok(SplitParams { gamma, phi })
    }

    /// Splits a joint parameter vector at the cut layer.
    pub fn from_joint(arch: &SplitArch, joint: &ParamVector<S>) -> Result<Self> {
        let (gamma, phi) = joint.split_at(arch.client_param_count())?;
        SplitParams::new(arch, gamma, phi)
    }

    /// Concatenates back into the joint layout.
    pub fn to_joint(&self) -> ParamVector<S> {
        self.gamma.concat(&self.phi)
    }

    pub fn is_finite(&self) -> bool {
        self.gamma.is_finite() && self.phi.is_finite()
    }
}

/// Cut-layer activations for one batch, transmitted client -> AP
/// together with the labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationBatch<S> {
    pub rows: Vec<Vec<S>>,
    pub labels: Vec<usize>,
    pub origin_client: usize,
}

impl<S: Scalar> ActivationBatch<S> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

/// Per-sample cut-layer loss gradients for one batch, transmitted
/// AP -> client. Rows are not batch-averaged; each side averages its own
/// parameter gradients after full backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct CutGradBatch<S> {
    pub rows: Vec<Vec<S>>,
}

impl<S: Scalar> CutGradBatch<S> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// The three payload kinds that cross the wire. Borrowed views so the
/// traffic ledger can weigh a transmission without copying it.
#[derive(Debug, Clone, Copy)]
pub enum WireMessage<'a, S> {
    Activations(&'a ActivationBatch<S>),
    CutGradients(&'a CutGradBatch<S>),
    ParamHandoff(&'a ParamVector<S>),
}

/// Client-side forward pass over a batch: one activation row per sample,
/// with the per-sample tapes retained for the client's backward pass.
pub fn client_forward<S: Scalar>(
    client_arch: &Arch,
    gamma: &ParamVector<S>,
    batch: &[Sample<S>],
    origin_client: usize,
) -> Result<(ActivationBatch<S>, Vec<Tape<S>>)> {
    if batch.is_empty() {
        return Err(Error::contract("empty batch"));
    }
    let mut rows = Vec::with_capacity(batch.len());
    let mut tapes = Vec::with_capacity(batch.len());
    let mut labels = Vec::with_capacity(batch.len());
    for sample in batch {
        let (out, tape) = nn::forward(client_arch, gamma, &sample.x)?;
        rows.push(out);
        tapes.push(tape);
        labels.push(sample.y);
    }
    Ok((
        ActivationBatch {
            rows,
            labels,
            origin_client,
        },
        tapes,
    ))
}

/// AP-side forward pass and per-sample losses for a received batch.
pub fn ap_forward_loss<S: Scalar>(
    ap_arch: &Arch,
    phi: &ParamVector<S>,
    batch: &ActivationBatch<S>,
) -> Result<(Vec<S>, Vec<Tape<S>>)> {
    if batch.is_empty() {
        return Err(Error::contract("empty activation batch"));
    }
    if batch.labels.len() != batch.rows.len() {
        return Err(Error::contract("activation row/label count mismatch"));
    }
    let classes = ap_arch.output_dim();
    let mut losses = Vec::with_capacity(batch.len());
    let mut tapes = Vec::with_capacity(batch.len());
    for (row, &label) in batch.rows.iter().zip(&batch.labels) {
        if label >= classes {
            return Err(Error::data(format!(
                "label {label} out of range for {classes} classes"
            )));
        }
        let (logits, tape) = nn::forward(ap_arch, phi, row)?;
        let (loss, _) = nn::softmax_cross_entropy(&logits, label)?;
        losses.push(loss);
        tapes.push(tape);
    }
    Ok((losses, tapes))
}

/// AP-side backward pass: batch-mean gradient for `phi` plus the
/// per-sample cut-layer gradients to transmit back.
pub fn ap_backward<S: Scalar>(
    ap_arch: &Arch,
    phi: &ParamVector<S>,
    tapes: &[Tape<S>],
    labels: &[usize],
) -> Result<(GradVector<S>, CutGradBatch<S>)> {
    if tapes.is_empty() {
        return Err(Error::contract("empty tape batch"));
    }
    if tapes.len() != labels.len() {
        return Err(Error::contract("tape/label count mismatch"));
    }
    let inv_b = S::one() / from_f64::<S>(tapes.len() as f64);
    let mut mean = GradVector::zeros(ap_arch);
    let mut rows = Vec::with_capacity(tapes.len());
    for (tape, &label) in tapes.iter().zip(labels) {
        let (_, dlogits) = nn::softmax_cross_entropy(tape.output(), label)?;
        let (grad, dinput) = nn::backward(ap_arch, phi, tape, &dlogits)?;
        mean.add_scaled(&grad, inv_b);
        rows.push(dinput);
    }
    Ok((mean, CutGradBatch { rows }))
}

/// Client-side backward pass: batch-mean gradient for `gamma` from the
/// received cut-layer gradients and the client's own tapes.
pub fn client_backward<S: Scalar>(
    client_arch: &Arch,
    gamma: &ParamVector<S>,
    tapes: &[Tape<S>],
    cut_grads: &CutGradBatch<S>,
) -> Result<GradVector<S>> {
    if tapes.len() != cut_grads.rows.len() {
        return Err(Error::contract(format!(
            "tape count {} does not match cut-gradient rows {}",
            tapes.len(),
            cut_grads.rows.len()
        )));
    }
    if tapes.is_empty() {
        return Err(Error::contract("empty tape batch"));
    }
    let inv_b = S::one() / from_f64::<S>(tapes.len() as f64);
    let mut mean = GradVector::zeros(client_arch);
    for (tape, row) in tapes.iter().zip(&cut_grads.rows) {
        let (grad, _) = nn::backward(client_arch, gamma, tape, row)?;
        mean.add_scaled(&grad, inv_b);
    }
    Ok(mean)
}

/// Mean softmax cross-entropy of `theta` over `samples`, computed through
/// the split halves. Used both by the on-protocol validation path and as
/// a free AP-side metric; both must agree bit-for-bit.
pub fn mean_loss<S: Scalar>(
    arch: &SplitArch,
    theta: &SplitParams<S>,
    samples: &[Sample<S>],
) -> Result<S> {
    if samples.is_empty() {
        return Err(Error::contract("empty evaluation set"));
    }
    let mut sum = S::zero();
    for sample in samples {
        let (cut, _) = nn::forward(arch.client(), &theta.gamma, &sample.x)?;
        let (logits, _) = nn::forward(arch.ap(), &theta.phi, &cut)?;
        let (loss, _) = nn::softmax_cross_entropy(&logits, sample.y)?;
        sum = sum + loss;
    }
    Ok(sum / from_f64::<S>(samples.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{init_params, Activation, LayerSpec};
    use rand::Rng;

    fn layer(i: usize, o: usize, a: Activation) -> LayerSpec {
        LayerSpec::new(i, o, a).unwrap()
    }

    fn small_split() -> SplitArch {
        let client = Arch::new(vec![
            layer(4, 5, Activation::Relu),
            layer(5, 3, Activation::Identity),
        ])
        .unwrap();
        let ap = Arch::new(vec![
            layer(3, 4, Activation::Relu),
            layer(4, 3, Activation::Identity),
        ])
        .unwrap();
        SplitArch::new(client, ap).unwrap()
    }

    fn random_samples(arch: &SplitArch, n: usize, seed: u64) -> Vec<Sample<f64>> {
        let mut rng = crate::rng::stream(seed, 99, 0, 0);
        (0..n)
            .map(|_| Sample {
                x: (0..arch.client().input_dim())
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect(),
                y: rng.random_range(0..arch.num_classes()),
            })
            .collect()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "values differ: {a} vs {b}");
    }

    /// Runs the full four-step exchange for one batch and returns
    /// per-sample losses plus batch-mean gradients for both halves.
    fn run_exchange(
        arch: &SplitArch,
        theta: &SplitParams<f64>,
        batch: &[Sample<f64>],
    ) -> (Vec<f64>, GradVector<f64>, GradVector<f64>) {
        let (acts, client_tapes) = client_forward(arch.client(), &theta.gamma, batch, 0).unwrap();
        let (losses, ap_tapes) = ap_forward_loss(arch.ap(), &theta.phi, &acts).unwrap();
        let (phi_grad, cut_grads) =
            ap_backward(arch.ap(), &theta.phi, &ap_tapes, &acts.labels).unwrap();
        let gamma_grad =
            client_backward(arch.client(), &theta.gamma, &client_tapes, &cut_grads).unwrap();
        (losses, gamma_grad, phi_grad)
    }

    #[test]
    fn cut_width_mismatch_rejected() {
        let client = Arch::new(vec![layer(4, 3, Activation::Relu)]).unwrap();
        let ap = Arch::new(vec![layer(5, 2, Activation::Identity)]).unwrap();
        assert!(SplitArch::new(client, ap).is_err());
    }

    #[test]
    fn identity_client_passes_inputs_through() {
        let client = Arch::new(vec![layer(2, 2, Activation::Identity)]).unwrap();
        let gamma = ParamVector::from_layer_parts(
            &client,
            &[(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0])],
        )
        .unwrap();
        let batch = vec![
            Sample { x: vec![1.0, 2.0], y: 0 },
            Sample { x: vec![-3.0, 4.0], y: 1 },
        ];
        let (acts, _) = client_forward(&client, &gamma, &batch, 7).unwrap();
        assert_eq!(acts.rows, vec![vec![1.0, 2.0], vec![-3.0, 4.0]]);
        assert_eq!(acts.labels, vec![0, 1]);
        assert_eq!(acts.origin_client, 7);
    }

    #[test]
    fn batch_of_64_yields_64_rows() {
        let arch = small_split();
        let theta = SplitParams::from_joint(
            &arch,
            &init_params::<f64>(&arch.joint(), 3),
        )
        .unwrap();
        let batch = random_samples(&arch, 64, 1);
        let (acts, tapes) = client_forward(arch.client(), &theta.gamma, &batch, 0).unwrap();
        assert_eq!(acts.len(), 64);
        assert_eq!(tapes.len(), 64);
    }

    #[test]
    fn batch_rows_equal_per_sample_forward() {
        let arch = small_split();
        let theta =
            SplitParams::from_joint(&arch, &init_params::<f64>(&arch.joint(), 5)).unwrap();
        let batch = random_samples(&arch, 9, 2);
        let (acts, _) = client_forward(arch.client(), &theta.gamma, &batch, 0).unwrap();
        for (row, sample) in acts.rows.iter().zip(&batch) {
            let (expected, _) = nn::forward(arch.client(), &theta.gamma, &sample.x).unwrap();
            assert_eq!(row, &expected);
        }
    }

    #[test]
    fn uniform_activations_through_identity_ap_give_ln_k() {
        let ap = Arch::new(vec![layer(10, 10, Activation::Identity)]).unwrap();
        let mut eye = vec![0.0; 100];
        for i in 0..10 {
            eye[i * 10 + i] = 1.0;
        }
        let phi = ParamVector::from_layer_parts(&ap, &[(eye, vec![0.0; 10])]).unwrap();
        let batch = ActivationBatch {
            rows: vec![vec![0.4; 10], vec![0.4; 10]],
            labels: vec![3, 9],
            origin_client: 0,
        };
        let (losses, _) = ap_forward_loss(&ap, &phi, &batch).unwrap();
        for loss in losses {
            assert_close(loss, (10.0f64).ln(), 1e-12);
        }
    }

    #[test]
    fn non_finite_activations_surface_numeric_error() {
        let ap = Arch::new(vec![layer(3, 2, Activation::Identity)]).unwrap();
        let phi = init_params::<f64>(&ap, 0);
        let batch = ActivationBatch {
            rows: vec![vec![f64::NAN, 0.0, 1.0]],
            labels: vec![0],
            origin_client: 0,
        };
        assert!(matches!(
            ap_forward_loss(&ap, &phi, &batch),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn out_of_range_label_is_data_error() {
        let ap = Arch::new(vec![layer(3, 2, Activation::Identity)]).unwrap();
        let phi = init_params::<f64>(&ap, 0);
        let batch = ActivationBatch {
            rows: vec![vec![0.0, 0.0, 1.0]],
            labels: vec![2],
            origin_client: 0,
        };
        assert!(matches!(
            ap_forward_loss(&ap, &phi, &batch),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn split_losses_match_unsplit_network() {
        let arch = small_split();
        let joint = arch.joint();
        let joint_params = init_params::<f64>(&joint, 17);
        let theta = SplitParams::from_joint(&arch, &joint_params).unwrap();
        let batch = random_samples(&arch, 6, 3);

        let (losses, _, _) = run_exchange(&arch, &theta, &batch);
        for (sample, loss) in batch.iter().zip(&losses) {
            let (logits, _) = nn::forward(&joint, &joint_params, &sample.x).unwrap();
            let (expected, _) = nn::softmax_cross_entropy(&logits, sample.y).unwrap();
            assert_close(*loss, expected, 1e-12);
        }
    }

    #[test]
    fn split_gradients_match_unsplit_network() {
        let arch = small_split();
        let joint = arch.joint();
        let joint_params = init_params::<f64>(&joint, 23);
        let theta = SplitParams::from_joint(&arch, &joint_params).unwrap();
        let batch = random_samples(&arch, 5, 4);

        let (_, gamma_grad, phi_grad) = run_exchange(&arch, &theta, &batch);

        // Un-split oracle: joint backward per sample, averaged.
        let inv_b = 1.0 / batch.len() as f64;
        let mut joint_mean = GradVector::<f64>::zeros(&joint);
        for sample in &batch {
            let (_, tape) = nn::forward(&joint, &joint_params, &sample.x).unwrap();
            let (_, dlogits) = nn::softmax_cross_entropy(tape.output(), sample.y).unwrap();
            let (grad, _) = nn::backward(&joint, &joint_params, &tape, &dlogits).unwrap();
            joint_mean.add_scaled(&grad, inv_b);
        }
        let split_grads = gamma_grad.concat(&phi_grad);
        for (a, b) in split_grads.values().iter().zip(joint_mean.values()) {
            assert_close(*a, *b, 1e-10);
        }
    }

    #[test]
    fn single_sample_batch_mean_is_the_sample_gradient() {
        let arch = small_split();
        let theta =
            SplitParams::from_joint(&arch, &init_params::<f64>(&arch.joint(), 8)).unwrap();
        let batch = random_samples(&arch, 1, 5);
        let (acts, _) = client_forward(arch.client(), &theta.gamma, &batch, 0).unwrap();
        let (_, ap_tapes) = ap_forward_loss(arch.ap(), &theta.phi, &acts).unwrap();
        let (phi_grad, _) = ap_backward(arch.ap(), &theta.phi, &ap_tapes, &acts.labels).unwrap();

        let (_, dlogits) = nn::softmax_cross_entropy(ap_tapes[0].output(), batch[0].y).unwrap();
        let (single, _) = nn::backward(arch.ap(), &theta.phi, &ap_tapes[0], &dlogits).unwrap();
        for (a, b) in phi_grad.values().iter().zip(single.values()) {
            assert_close(*a, *b, 1e-15);
        }
    }

    #[test]
    fn cut_gradients_answer_every_activation_row() {
        let arch = small_split();
        let theta =
            SplitParams::from_joint(&arch, &init_params::<f64>(&arch.joint(), 9)).unwrap();
        let batch = random_samples(&arch, 7, 6);
        let (acts, _) = client_forward(arch.client(), &theta.gamma, &batch, 0).unwrap();
        let (_, ap_tapes) = ap_forward_loss(arch.ap(), &theta.phi, &acts).unwrap();
        let (_, cut_grads) = ap_backward(arch.ap(), &theta.phi, &ap_tapes, &acts.labels).unwrap();
        assert_eq!(cut_grads.len(), acts.len());
        for row in &cut_grads.rows {
            assert_eq!(row.len(), arch.cut_width());
        }
    }

    #[test]
    fn negated_cut_gradients_negate_gamma_gradient() {
        let arch = small_split();
        let theta =
            SplitParams::from_joint(&arch, &init_params::<f64>(&arch.joint(), 13)).unwrap();
        let batch = random_samples(&arch, 4, 7);
        let (acts, client_tapes) =
            client_forward(arch.client(), &theta.gamma, &batch, 0).unwrap();
        let (_, ap_tapes) = ap_forward_loss(arch.ap(), &theta.phi, &acts).unwrap();
        let (_, cut_grads) = ap_backward(arch.ap(), &theta.phi, &ap_tapes, &acts.labels).unwrap();

        let grad =
            client_backward(arch.client(), &theta.gamma, &client_tapes, &cut_grads).unwrap();
        let negated = CutGradBatch {
            rows: cut_grads
                .rows
                .iter()
                .map(|r| r.iter().map(|v| -v).collect())
                .collect(),
        };
        let neg_grad =
            client_backward(arch.client(), &theta.gamma, &client_tapes, &negated).unwrap();
        for (a, b) in grad.values().iter().zip(neg_grad.values()) {
            assert_close(*a, -*b, 1e-15);
        }
    }

    #[test]
    fn identity_client_gamma_gradient_is_mean_outer_product() {
        // Single identity layer client: dW = mean over batch of
        // cut_grad (x) input.
        let client = Arch::new(vec![layer(2, 2, Activation::Identity)]).unwrap();
        let gamma = ParamVector::from_layer_parts(
            &client,
            &[(vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0])],
        )
        .unwrap();
        let batch = vec![
            Sample { x: vec![1.0, 2.0], y: 0 },
            Sample { x: vec![3.0, -1.0], y: 0 },
        ];
        let (_, tapes) = client_forward(&client, &gamma, &batch, 0).unwrap();
        let cut = CutGradBatch {
            rows: vec![vec![0.5, -0.5], vec![1.0, 2.0]],
        };
        let grad = client_backward(&client, &gamma, &tapes, &cut).unwrap();
        // Row 0 of dW: mean of (0.5*[1,2], 1.0*[3,-1]) = [1.75, 0.0].
        assert_eq!(&grad.values()[0..2], &[1.75, 0.0]);
        // Row 1: mean of (-0.5*[1,2], 2.0*[3,-1]) = [2.75, -1.5].
        assert_eq!(&grad.values()[2..4], &[2.75, -1.5]);
        // Biases: mean of cut rows.
        assert_eq!(&grad.values()[4..6], &[0.75, 0.75]);
    }

    #[test]
    fn row_count_mismatch_is_contract_error() {
        let arch = small_split();
        let theta =
            SplitParams::from_joint(&arch, &init_params::<f64>(&arch.joint(), 2)).unwrap();
        let batch = random_samples(&arch, 3, 8);
        let (_, tapes) = client_forward(arch.client(), &theta.gamma, &batch, 0).unwrap();
        let cut = CutGradBatch {
            rows: vec![vec![0.0; arch.cut_width()]; 2],
        };
        assert!(matches!(
            client_backward(arch.client(), &theta.gamma, &tapes, &cut),
            Err(Error::Contract(_))
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            /// Defining invariant of the module: the split pipeline and the
            /// un-split network agree on losses and gradients.
            #[test]
            fn split_equivalence(seed in 0u64..500, n in 1usize..6) {
                let arch = small_split();
                let joint = arch.joint();
                let joint_params = init_params::<f64>(&joint, seed);
                let theta = SplitParams::from_joint(&arch, &joint_params).unwrap();
                let batch = random_samples(&arch, n, seed.wrapping_add(1));

                let (losses, gamma_grad, phi_grad) = run_exchange(&arch, &theta, &batch);

                let inv_b = 1.0 / batch.len() as f64;
                let mut joint_mean = GradVector::<f64>::zeros(&joint);
                for (sample, loss) in batch.iter().zip(&losses) {
                    let (_, tape) = nn::forward(&joint, &joint_params, &sample.x).unwrap();
                    let (expected, dlogits) =
                        nn::softmax_cross_entropy(tape.output(), sample.y).unwrap();
                    prop_assert!((loss - expected).abs() <= 1e-10);
                    let (grad, _) = nn::backward(&joint, &joint_params, &tape, &dlogits).unwrap();
                    joint_mean.add_scaled(&grad, inv_b);
                }
                let split_grads = gamma_grad.concat(&phi_grad);
                for (a, b) in split_grads.values().iter().zip(joint_mean.values()) {
                    let scale = a.abs().max(b.abs()).max(1.0);
                    prop_assert!((a - b).abs() / scale <= 1e-10);
                }
            }

            /// Batch-mean gradients equal the mean of per-sample gradients.
            #[test]
            fn batch_mean_fidelity(seed in 0u64..500) {
                let arch = small_split();
                let theta = SplitParams::from_joint(
                    &arch,
                    &init_params::<f64>(&arch.joint(), seed),
                ).unwrap();
                let batch = random_samples(&arch, 5, seed.wrapping_add(11));

                let (_, gamma_grad, _) = run_exchange(&arch, &theta, &batch);

                let mut mean = GradVector::<f64>::zeros(arch.client());
                for sample in &batch {
                    let (_, g, _) = run_exchange(&arch, &theta, std::slice::from_ref(sample));
                    mean.add_scaled(&g, 1.0 / batch.len() as f64);
                }
                for (a, b) in gamma_grad.values().iter().zip(mean.values()) {
                    prop_assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }
}
