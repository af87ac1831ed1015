//! In-protocol attacks, expressed as message transforms.
//!
//! A malicious client intercepts exactly three points of the training
//! exchange — the labels it attaches, the activations it sends, the
//! cut-layer gradients it receives — plus the end-of-round parameter
//! handoff. It still performs correct backpropagation arithmetic on
//! whatever flows through; the attack lives in the messages.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Deserialize;

use crate::nn::{self, Arch, ParamVector};
use crate::scalar::{from_f64, Scalar};
use crate::split::CutGradBatch;

/// The attack taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attack {
    LabelFlip,
    ActivationTamper,
    GradientTamper,
    ParamSwap,
}

/// Attack constants. Defaults follow the simulated attacks: labels shift
/// by 3, tampered activations mix 0.1 signal with 0.9 norm-matched noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackParams {
    pub label_shift: usize,
    pub mix_signal: f64,
    pub mix_noise: f64,
}

impl Default for AttackParams {
    fn default() -> Self {
        AttackParams {
            label_shift: 3,
            mix_signal: 0.1,
            mix_noise: 0.9,
        }
    }
}

/// Per-client role: honest, or malicious with one attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BehaviorSpec {
    Honest,
    Malicious {
        attack: Attack,
        params: AttackParams,
    },
}

impl BehaviorSpec {
    pub fn malicious(attack: Attack) -> Self {
        BehaviorSpec::Malicious {
            attack,
            params: AttackParams::default(),
        }
    }

    pub fn is_malicious(&self) -> bool {
        matches!(self, BehaviorSpec::Malicious { .. })
    }

    pub fn attack(&self) -> Option<Attack> {
        match self {
            BehaviorSpec::Honest => None,
            BehaviorSpec::Malicious { attack, .. } => Some(*attack),
        }
    }

    /// Hook: label attached to an outgoing activation row.
    pub fn attach_label(&self, y: usize, num_classes: usize) -> usize {
        match self {
            BehaviorSpec::Malicious {
                attack: Attack::LabelFlip,
                params,
            } => flip_label(y, num_classes, params.label_shift),
            _ => y,
        }
    }

    /// Hook: one outgoing activation row, in sample order. Draws from the
    /// client-turn stream only when the attack actually fires.
    pub fn send_activation<S: Scalar>(&self, row: Vec<S>, rng: &mut ChaCha8Rng) -> Vec<S> {
        match self {
            BehaviorSpec::Malicious {
                attack: Attack::ActivationTamper,
                params,
            } => tamper_activation(&row, params, rng),
            _ => row,
        }
    }

    /// Hook: the received cut-gradient batch.
    pub fn receive_cut_grads<S: Scalar>(&self, batch: CutGradBatch<S>) -> CutGradBatch<S> {
        match self {
            BehaviorSpec::Malicious {
                attack: Attack::GradientTamper,
                ..
            } => tamper_gradient(&batch),
            _ => batch,
        }
    }

    /// Hook: the end-of-round parameter handoff. Only a param-swapping
    /// client in the publishing position manipulates it; everyone else
    /// (and the attacker's own evaluation-time transmissions) sends the
    /// true parameters.
    pub fn publish_handoff<S: Scalar>(
        &self,
        gamma: &ParamVector<S>,
        client_arch: &Arch,
        rng: &mut ChaCha8Rng,
    ) -> ParamVector<S> {
        match self {
            BehaviorSpec::Malicious {
                attack: Attack::ParamSwap,
                ..
            } => swap_params(client_arch, rng),
            _ => gamma.clone(),
        }
    }
}

/// Shifts a label: `(y + shift) mod K`.
pub fn flip_label(y: usize, num_classes: usize, shift: usize) -> usize {
    debug_assert!(y < num_classes);
    (y + shift) % num_classes
}

/// Replaces an activation row `g` with `0.1 g + 0.9 n~` where `n~` is a
/// standard-normal draw rescaled to the norm of `g`. A zero row is
/// returned unchanged (the rescaling is undefined there).
pub fn tamper_activation<S: Scalar>(
    g: &[S],
    params: &AttackParams,
    rng: &mut ChaCha8Rng,
) -> Vec<S> {
    let norm_g = g
        .iter()
        .fold(S::zero(), |acc, &v| acc + v * v)
        .sqrt();
    if norm_g == S::zero() {
        return vec![S::zero(); g.len()];
    }
    let noise: Vec<S> = (0..g.len())
        .map(|_| from_f64::<S>(<StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)))
        .collect();
    let norm_n = noise
        .iter()
        .fold(S::zero(), |acc, &v| acc + v * v)
        .sqrt();
    let scale = norm_g / norm_n;
    let a = from_f64::<S>(params.mix_signal);
    let b = from_f64::<S>(params.mix_noise);
    g.iter()
        .zip(&noise)
        .map(|(&gi, &ni)| a * gi + b * (scale * ni))
        .collect()
}

/// Negates every cut-layer gradient row.
pub fn tamper_gradient<S: Scalar>(batch: &CutGradBatch<S>) -> CutGradBatch<S> {
    CutGradBatch {
        rows: batch
            .rows
            .iter()
            .map(|row| row.iter().map(|&v| -v).collect())
            .collect(),
    }
}

/// Fabricates a handoff payload: a freshly re-initialized client half,
/// seeded from the attacker's stream. Finite, plausible-looking, and
/// completely untrained.
pub fn swap_params<S: Scalar>(client_arch: &Arch, rng: &mut ChaCha8Rng) -> ParamVector<S> {
    use rand::Rng;
    nn::init_params(client_arch, rng.random::<u64>())
}
