//! Built-in oracle suites, runnable from the CLI.
//!
//! The helpers here are shared with the integration tests: random split
//! architectures, a kink-free batch generator (central differences near
//! a ReLU kink are meaningless), the four-step exchange without ledger
//! bookkeeping, and the two gradient checks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::adversary;
use crate::error::Result;
use crate::nn::{self, Activation, Arch, GradVector, LayerSpec, Sample};
use crate::pigeon;
use crate::rng;
use crate::scalar::Scalar;
use crate::split::{self, SplitArch, SplitParams};

/// One suite's verdict.
pub struct SelfTestOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Draws a small random split architecture with at most `max_params`
/// parameters in total.
pub fn random_split_arch(rng: &mut ChaCha8Rng, max_params: usize) -> SplitArch {
    loop {
        let input = rng.random_range(3..=8);
        let classes = rng.random_range(2..=5);
        let client_layers = rng.random_range(1..=2);
        let ap_layers = rng.random_range(1..=2);

        let mut dims = vec![input];
        for _ in 0..client_layers + ap_layers - 1 {
            dims.push(rng.random_range(2..=6));
        }
        dims.push(classes);

        let mut specs = Vec::new();
        for w in dims.windows(2) {
            let activation = if rng.random_range(0..2) == 0 {
                Activation::Relu
            } else {
                Activation::Identity
            };
            specs.push(LayerSpec::new(w[0], w[1], activation).expect("dims >= 2"));
        }
        // Last layer emits logits.
        let last = specs.len() - 1;
        specs[last] = LayerSpec::new(specs[last].fan_in, specs[last].fan_out, Activation::Identity)
            .expect("valid");

        let client = Arch::new(specs[..client_layers].to_vec()).expect("chained");
        let ap = Arch::new(specs[client_layers..].to_vec()).expect("chained");
        let arch = SplitArch::new(client, ap).expect("cut widths chain");
        if arch.joint().param_count() <= max_params {
            return arch;
        }
    }
}

fn min_abs_relu_pre<S: Scalar>(arch: &Arch, params: &nn::ParamVector<S>, x: &[S]) -> f64 {
    let (_, tape) = nn::forward(arch, params, x).expect("finite input");
    let mut min = f64::INFINITY;
    for (l, layer) in arch.layers().iter().enumerate() {
        if layer.activation == Activation::Relu {
            for &z in tape.pre_activations(l) {
                min = min.min(z.abs().to_f64().expect("finite"));
            }
        }
    }
    min
}

/// Draws a batch whose ReLU pre-activations stay clear of zero, so
/// finite differences see a smooth function.
pub fn kink_free_batch(
    arch: &SplitArch,
    theta: &SplitParams<f64>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Sample<f64>> {
    let joint = arch.joint();
    let params = theta.to_joint();
    let dim = arch.client().input_dim();
    let classes = arch.num_classes();
    let mut batch = Vec::with_capacity(n);
    while batch.len() < n {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        if min_abs_relu_pre(&joint, &params, &x) > 1e-3 {
            let y = rng.random_range(0..classes);
            batch.push(Sample { x, y });
        }
    }
    batch
}

/// Runs the four-step exchange for one batch without any ledger or
/// attack hooks; returns per-sample losses and both batch-mean grads.
pub fn split_pipeline(
    arch: &SplitArch,
    theta: &SplitParams<f64>,
    batch: &[Sample<f64>],
) -> Result<(Vec<f64>, GradVector<f64>, GradVector<f64>)> {
    let (acts, client_tapes) = split::client_forward(arch.client(), &theta.gamma, batch, 0)?;
    let (losses, ap_tapes) = split::ap_forward_loss(arch.ap(), &theta.phi, &acts)?;
    let (phi_grad, cut_grads) = split::ap_backward(arch.ap(), &theta.phi, &ap_tapes, &acts.labels)?;
    let gamma_grad = split::client_backward(arch.client(), &theta.gamma, &client_tapes, &cut_grads)?;
    Ok((losses, gamma_grad, phi_grad))
}

/// Checks the split-pipeline gradients of the batch-mean loss against
/// central finite differences of the un-split network.
pub fn gradient_check_case(
    arch: &SplitArch,
    theta: &SplitParams<f64>,
    batch: &[Sample<f64>],
    rel_tol: f64,
    abs_tol: f64,
) -> std::result::Result<(), String> {
    let (_, gamma_grad, phi_grad) =
        split_pipeline(arch, theta, batch).map_err(|e| e.to_string())?;
    let analytic = gamma_grad.concat(&phi_grad);

    let joint = arch.joint();
    let fd = nn::finite_diff_grad(
        |params| {
            let mut sum = 0.0;
            for s in batch {
                let (logits, _) = nn::forward(&joint, params, &s.x).expect("finite");
                let (loss, _) = nn::softmax_cross_entropy(&logits, s.y).expect("in range");
                sum += loss;
            }
            sum / batch.len() as f64
        },
        &theta.to_joint(),
        1e-5,
    );

    for (i, (a, f)) in analytic.values().iter().zip(fd.values()).enumerate() {
        let diff = (a - f).abs();
        let scale = a.abs().max(f.abs());
        if diff > abs_tol.max(rel_tol * scale) {
            return Err(format!(
                "coordinate {i}: analytic {a} vs finite-difference {f} (diff {diff})"
            ));
        }
    }
    Ok(())
}

/// Checks that the split pipeline and the un-split network agree on
/// per-sample losses and batch-mean gradients.
pub fn split_equivalence_case(
    arch: &SplitArch,
    theta: &SplitParams<f64>,
    batch: &[Sample<f64>],
    tol: f64,
) -> std::result::Result<(), String> {
    let (losses, gamma_grad, phi_grad) =
        split_pipeline(arch, theta, batch).map_err(|e| e.to_string())?;

    let joint = arch.joint();
    let joint_params = theta.to_joint();
    let mut joint_mean = GradVector::<f64>::zeros(&joint);
    for (sample, loss) in batch.iter().zip(&losses) {
        let (_, tape) = nn::forward(&joint, &joint_params, &sample.x).map_err(|e| e.to_string())?;
        let (expected, dlogits) =
            nn::softmax_cross_entropy(tape.output(), sample.y).map_err(|e| e.to_string())?;
        if (loss - expected).abs() > tol {
            return Err(format!("loss mismatch: split {loss} vs joint {expected}"));
        }
        let (grad, _) =
            nn::backward(&joint, &joint_params, &tape, &dlogits).map_err(|e| e.to_string())?;
        joint_mean.add_scaled(&grad, 1.0 / batch.len() as f64);
    }
    let split_grads = gamma_grad.concat(&phi_grad);
    for (i, (a, b)) in split_grads.values().iter().zip(joint_mean.values()).enumerate() {
        let scale = a.abs().max(b.abs()).max(1.0);
        if (a - b).abs() / scale > tol {
            return Err(format!("gradient mismatch at {i}: {a} vs {b}"));
        }
    }
    Ok(())
}

fn suite(name: &'static str, result: std::result::Result<(), String>) -> SelfTestOutcome {
    match result {
        Ok(()) => SelfTestOutcome {
            name,
            passed: true,
            detail: "ok".into(),
        },
        Err(detail) => SelfTestOutcome {
            name,
            passed: false,
            detail,
        },
    }
}

fn gradient_suite(cases: usize) -> std::result::Result<(), String> {
    let mut stream = rng::stream(2024, 11, 0, 0);
    for case in 0..cases {
        let arch = random_split_arch(&mut stream, 300);
        let theta = SplitParams::from_joint(
            &arch,
            &nn::init_params(&arch.joint(), stream.random::<u64>()),
        )
        .map_err(|e| e.to_string())?;
        let batch = kink_free_batch(&arch, &theta, 2, &mut stream);
        gradient_check_case(&arch, &theta, &batch, 1e-5, 1e-8)
            .map_err(|e| format!("case {case}: {e}"))?;
    }
    Ok(())
}

fn equivalence_suite(cases: usize) -> std::result::Result<(), String> {
    let mut stream = rng::stream(2025, 12, 0, 0);
    for case in 0..cases {
        let arch = random_split_arch(&mut stream, 300);
        let theta = SplitParams::from_joint(
            &arch,
            &nn::init_params(&arch.joint(), stream.random::<u64>()),
        )
        .map_err(|e| e.to_string())?;
        let n = stream.random_range(1..=4);
        let batch = kink_free_batch(&arch, &theta, n, &mut stream);
        split_equivalence_case(&arch, &theta, &batch, 1e-10)
            .map_err(|e| format!("case {case}: {e}"))?;
    }
    Ok(())
}

fn attack_suite() -> std::result::Result<(), String> {
    for y in 0..10 {
        if adversary::flip_label(y, 10, 3) != (y + 3) % 10 {
            return Err(format!("label flip wrong at {y}"));
        }
    }
    let mut stream = rng::stream(2026, 13, 0, 0);
    let params = adversary::AttackParams::default();
    for _ in 0..100 {
        let g: Vec<f64> = (0..12).map(|_| stream.random_range(-2.0..2.0)).collect();
        let norm_g: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        let tampered = adversary::tamper_activation(&g, &params, &mut stream);
        let noise_norm: f64 = tampered
            .iter()
            .zip(&g)
            .map(|(t, gi)| (t - 0.1 * gi) / 0.9)
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        if (noise_norm - norm_g).abs() > 1e-12 * norm_g.max(1.0) {
            return Err(format!("noise norm {noise_norm} drifted from {norm_g}"));
        }
        let batch = split::CutGradBatch {
            rows: vec![g.clone()],
        };
        if adversary::tamper_gradient(&adversary::tamper_gradient(&batch)) != batch {
            return Err("gradient tamper is not an involution".into());
        }
    }
    Ok(())
}

fn pigeonhole_suite() -> std::result::Result<(), String> {
    let m = 6;
    let n = 2;
    for seed in 0..20u64 {
        let mut stream = rng::partition_stream(seed, 1);
        let assignment =
            pigeon::partition_clients(m, n, 1, &mut stream).map_err(|e| e.to_string())?;
        // All adversary sets of size n over m clients.
        for a in 0..m {
            for b in a + 1..m {
                let clean = assignment
                    .clusters
                    .iter()
                    .any(|c| !c.contains(&a) && !c.contains(&b));
                if !clean {
                    return Err(format!("no clean cluster for adversaries {{{a},{b}}}"));
                }
            }
        }
    }
    Ok(())
}

fn softmax_suite() -> std::result::Result<(), String> {
    let mut stream = rng::stream(2027, 14, 0, 0);
    for _ in 0..200 {
        let k = stream.random_range(2..=10);
        let logits: Vec<f64> = (0..k).map(|_| stream.random_range(-6.0..6.0)).collect();
        let y = stream.random_range(0..k);
        let (loss, grad) = nn::softmax_cross_entropy(&logits, y).map_err(|e| e.to_string())?;
        if loss < 0.0 {
            return Err(format!("negative loss {loss}"));
        }
        let sum: f64 = grad.iter().sum();
        if sum.abs() > 1e-12 {
            return Err(format!("gradient sum {sum} off the simplex tangent"));
        }
    }
    let (loss, _) = nn::softmax_cross_entropy(&[0.0; 10], 0).map_err(|e| e.to_string())?;
    if (loss - (10.0f64).ln()).abs() > 1e-12 {
        return Err(format!("uniform loss {loss} is not ln 10"));
    }
    Ok(())
}

/// Runs every oracle suite; the CLI prints one line per outcome.
pub fn run_selftest() -> Vec<SelfTestOutcome> {
    vec![
        suite("gradient-check (6 random split nets)", gradient_suite(6)),
        suite("split-equivalence (6 random cases)", equivalence_suite(6)),
        suite("attack-units (flip table, involution, norms)", attack_suite()),
        suite("pigeonhole (M=6, N=2, exhaustive sets)", pigeonhole_suite()),
        suite("softmax-properties", softmax_suite()),
    ]
}
