//! Sequential split-learning training of one cluster.
//!
//! A client turn is `E` mini-batch updates, each running the four-step
//! exchange: activations up, loss at the AP, per-sample cut gradients
//! down, client-side backward. Both halves take one SGD step per batch
//! with the same learning rate. A cluster round runs its clients in
//! order, handing the client half from each client to the next.

use rand::seq::SliceRandom;

use crate::adversary::BehaviorSpec;
use crate::error::{Error, Result};
use crate::events::{RunSink, TurnLog};
use crate::ledger::TrafficLedger;
use crate::nn::{self, Sample};
use crate::rng;
use crate::scalar::{to_f64, Scalar};
use crate::split::{
    self, ActivationBatch, SplitArch, SplitParams, WireMessage,
};

/// One participating client: its shard of local data plus its behavior.
/// Ids are 0-based indices into the run's client list.
#[derive(Debug, Clone)]
pub struct ClientState<S> {
    pub id: usize,
    pub dataset: Vec<Sample<S>>,
    pub behavior: BehaviorSpec,
}

/// Static per-turn context.
#[derive(Debug, Clone, Copy)]
pub struct TurnCtx<S> {
    pub round: usize,
    pub subround: usize,
    pub cluster: usize,
    pub updates_per_turn: usize,
    pub batch_size: usize,
    pub learning_rate: S,
    pub seed: u64,
}

/// Result of one client turn.
#[derive(Debug, Clone)]
pub struct TurnResult<S> {
    pub theta: SplitParams<S>,
    pub batch_mean_losses: Vec<S>,
}

/// Epoch-style mini-batch source: a shuffled pass over the shard,
/// reshuffled (from the same turn stream) whenever it runs out.
struct BatchPlan {
    order: Vec<usize>,
    cursor: usize,
}

impl BatchPlan {
    fn new(n: usize, stream: &mut rand_chacha::ChaCha8Rng) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(stream);
        BatchPlan { order, cursor: 0 }
    }

    fn next_batch(
        &mut self,
        size: usize,
        stream: &mut rand_chacha::ChaCha8Rng,
    ) -> Vec<usize> {
        let mut batch = Vec::with_capacity(size);
        for _ in 0..size {
            if self.cursor == self.order.len() {
                self.order.shuffle(stream);
                self.cursor = 0;
            }
            batch.push(self.order[self.cursor]);
            self.cursor += 1;
        }
        batch
    }
}

fn turn_context_err(err: Error, ctx: &TurnCtx<impl Scalar>, client: usize) -> Error {
    let detail = format!(
        "round {} cluster {} client {}: {err}",
        ctx.round,
        ctx.cluster + 1,
        client + 1
    );
    match err {
        Error::Numeric(_) => Error::Numeric(detail),
        Error::Data(_) => Error::Data(detail),
        other => {
            let _ = other;
            Error::Contract(detail)
        }
    }
}

/// Runs one client turn: `E` mini-batch updates from `theta_in`.
/// Attack hooks fire inside the exchange; a malicious client still does
/// correct arithmetic on whatever messages flow.
pub fn run_client_turn<S: Scalar>(
    client: &ClientState<S>,
    arch: &SplitArch,
    theta_in: SplitParams<S>,
    ctx: &TurnCtx<S>,
    ledger: &mut TrafficLedger,
    sink: &mut dyn RunSink,
) -> Result<TurnResult<S>> {
    if ctx.updates_per_turn == 0 {
        return Err(Error::contract("updates per turn must be >= 1"));
    }
    if ctx.batch_size == 0 {
        return Err(Error::contract("batch size must be >= 1"));
    }
    if ctx.batch_size > client.dataset.len() {
        return Err(Error::contract(format!(
            "batch size {} exceeds client {} dataset of {} samples",
            ctx.batch_size,
            client.id + 1,
            client.dataset.len()
        )));
    }

    let mut stream = rng::turn_stream(ctx.seed, client.id, ctx.round, ctx.subround);
    let mut plan = BatchPlan::new(client.dataset.len(), &mut stream);
    let num_classes = arch.num_classes();

    let mut gamma = theta_in.gamma;
    let mut phi = theta_in.phi;
    let mut batch_mean_losses = Vec::with_capacity(ctx.updates_per_turn);

    for e in 0..ctx.updates_per_turn {
        let idxs = plan.next_batch(ctx.batch_size, &mut stream);
        let batch: Vec<Sample<S>> = idxs.iter().map(|&i| client.dataset[i].clone()).collect();

        // Step 1: client forward; the transmitted rows and labels pass
        // through the attack hooks, the client's own tapes stay true.
        let (acts, client_tapes) =
            split::client_forward(arch.client(), &gamma, &batch, client.id)
                .map_err(|e| turn_context_err(e, ctx, client.id))?;
        let sent = ActivationBatch {
            rows: acts
                .rows
                .into_iter()
                .map(|row| client.behavior.send_activation(row, &mut stream))
                .collect(),
            labels: acts
                .labels
                .iter()
                .map(|&y| client.behavior.attach_label(y, num_classes))
                .collect(),
            origin_client: client.id,
        };
        ledger.message(ctx.round, ctx.cluster, WireMessage::Activations(&sent));
        ledger.client_passes(ctx.round, ctx.cluster, sent.len() as u64);

        // Step 2: AP forward and per-sample losses.
        let (losses, ap_tapes) = split::ap_forward_loss(arch.ap(), &phi, &sent)
            .map_err(|e| turn_context_err(e, ctx, client.id))?;

        // Step 3: AP backward; per-sample cut gradients go back down.
        let (phi_grad, cut_grads) =
            split::ap_backward(arch.ap(), &phi, &ap_tapes, &sent.labels)
                .map_err(|e| turn_context_err(e, ctx, client.id))?;
        ledger.message(ctx.round, ctx.cluster, WireMessage::CutGradients(&cut_grads));

        // Step 4: client backward on the (possibly tampered) gradients.
        let received = client.behavior.receive_cut_grads(cut_grads);
        let gamma_grad =
            split::client_backward(arch.client(), &gamma, &client_tapes, &received)
                .map_err(|e| turn_context_err(e, ctx, client.id))?;

        gamma = nn::sgd_step(&gamma, &gamma_grad, ctx.learning_rate)
            .map_err(|e| turn_context_err(e, ctx, client.id))?;
        phi = nn::sgd_step(&phi, &phi_grad, ctx.learning_rate)
            .map_err(|e| turn_context_err(e, ctx, client.id))?;

        let mean = losses.iter().fold(S::zero(), |acc, &l| acc + l)
            / S::from(losses.len()).expect("batch size fits scalar");
        batch_mean_losses.push(mean);
        sink.on_turn(&TurnLog {
            round: ctx.round,
            subround: ctx.subround,
            cluster: ctx.cluster,
            client: client.id,
            batch_index: e,
            mean_loss: to_f64(mean),
        });
    }

    Ok(TurnResult {
        theta: SplitParams { gamma, phi },
        batch_mean_losses,
    })
}

/// Runs one cluster round: members take turns in order, each starting
/// from the previous member's final parameters; the client half crosses
/// the wire between consecutive members.
#[allow(clippy::too_many_arguments)]
pub fn run_cluster_round<S: Scalar>(
    clients: &[ClientState<S>],
    members: &[usize],
    arch: &SplitArch,
    theta_start: SplitParams<S>,
    ctx: &TurnCtx<S>,
    ledger: &mut TrafficLedger,
    sink: &mut dyn RunSink,
) -> Result<SplitParams<S>> {
    if members.is_empty() {
        return Err(Error::contract("cluster must have at least one member"));
    }
    let mut theta = theta_start;
    for (i, &member) in members.iter().enumerate() {
        let client = clients
            .get(member)
            .ok_or_else(|| Error::contract(format!("unknown client id {member}")))?;
        let result = run_client_turn(client, arch, theta, ctx, ledger, sink)?;
        theta = result.theta;
        // Intra-cluster handoff of the client half to the next member.
        if i + 1 < members.len() {
            ledger.message(
                ctx.round,
                ctx.cluster,
                WireMessage::ParamHandoff(&theta.gamma),
            );
        }
    }
    Ok(theta)
}

/// Per-round client order shared by the vanilla baseline and by the
/// cluster partition (which chunks the same shuffled sequence).
pub fn shuffled_ids(m: usize, seed: u64, round: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..m).collect();
    let mut stream = rng::partition_stream(seed, round);
    ids.shuffle(&mut stream);
    ids
}

/// Vanilla sequential SL: all clients in one cluster, `t_rounds` global
/// rounds, no validation or selection. The client order is reshuffled
/// per round from the partition stream; the round's last client hands
/// the client half to the next round's first client. Returns the
/// trajectory `[theta^1, ..., theta^{T+1}]`.
#[allow(clippy::too_many_arguments)]
pub fn run_vanilla_sl<S: Scalar>(
    clients: &[ClientState<S>],
    arch: &SplitArch,
    theta_init: SplitParams<S>,
    t_rounds: usize,
    updates_per_turn: usize,
    batch_size: usize,
    learning_rate: S,
    seed: u64,
    ledger: &mut TrafficLedger,
    sink: &mut dyn RunSink,
) -> Result<Vec<SplitParams<S>>> {
    if clients.is_empty() {
        return Err(Error::contract("at least one client required"));
    }
    let mut trajectory = vec![theta_init];
    for round in 1..=t_rounds {
        let order = shuffled_ids(clients.len(), seed, round);
        let ctx = TurnCtx {
            round,
            subround: 0,
            cluster: 0,
            updates_per_turn,
            batch_size,
            learning_rate,
            seed,
        };
        let theta = run_cluster_round(
            clients,
            &order,
            arch,
            trajectory.last().expect("nonempty").clone(),
            &ctx,
            ledger,
            sink,
        )?;
        // End-of-round handoff to the next round's first client.
        ledger.message(round, 0, WireMessage::ParamHandoff(&theta.gamma));
        trajectory.push(theta);
    }
    Ok(trajectory)
}
