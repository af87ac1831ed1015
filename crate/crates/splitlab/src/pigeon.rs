//! Cluster-selection split learning.
//!
//! Each global round partitions the clients into `R = N + 1` disjoint
//! clusters, trains every cluster independently from the same starting
//! parameters, scores each cluster's result on the shared validation
//! set, and adopts the cluster with the lowest loss. With at most `N`
//! malicious clients, the pigeonhole principle guarantees an all-honest
//! cluster in every round.
//!
//! The handoff of the adopted client half into the next round is guarded:
//! the next round's first clients each transmit shared-set activations
//! computed from the parameters they received, and the access point
//! compares them against the activations of the evaluating client. A
//! mismatch disqualifies the previously selected cluster, rolls the
//! selection back to the next-best stored candidate, and repeats.

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::events::{RunSink, TamperEvent};
use crate::ledger::TrafficLedger;
use crate::nn::{self, ParamVector, Sample};
use crate::protocol::{run_cluster_round, ClientState, TurnCtx};
use crate::rng;
use crate::scalar::Scalar;
use crate::split::{self, ActivationBatch, SplitArch, SplitParams, WireMessage};

/// Training scheme executed per global round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// One cluster of all clients, no validation or selection.
    Vanilla,
    /// Cluster training with validation-loss selection.
    Pigeon,
    /// Selection plus `R - 1` extra subrounds of the chosen cluster,
    /// restoring one update per client per global round.
    PigeonPlus,
}

/// One round's partition of the client ids into `R` ordered clusters of
/// equal size; within-cluster order is the turn order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterAssignment {
    pub round: usize,
    pub clusters: Vec<Vec<usize>>,
}

impl ClusterAssignment {
    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn first_client(&self, cluster: usize) -> usize {
        self.clusters[cluster][0]
    }

    pub fn last_client(&self, cluster: usize) -> usize {
        *self.clusters[cluster].last().expect("clusters nonempty")
    }
}

/// Chunks a uniformly random permutation of `0..m` into `N + 1`
/// consecutive blocks. `m` must be divisible by `N + 1`.
pub fn partition_clients(
    m: usize,
    n: usize,
    round: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ClusterAssignment> {
    let r = n + 1;
    if m == 0 || !m.is_multiple_of(r) {
        return Err(Error::config(format!(
            "{m} clients cannot be split into {r} equal clusters"
        )));
    }
    let mut ids: Vec<usize> = (0..m).collect();
    ids.shuffle(rng);
    let size = m / r;
    let clusters = ids.chunks(size).map(<[usize]>::to_vec).collect();
    Ok(ClusterAssignment { round, clusters })
}

/// End-of-round validation: the cluster's last client transmits the
/// cut-layer activations of every shared sample (a malicious client
/// sends them untampered here; it wants its cluster selected), and the
/// access point averages the resulting per-sample losses.
pub fn evaluate_validation_loss<S: Scalar>(
    arch: &SplitArch,
    theta: &SplitParams<S>,
    last_client: usize,
    shared: &[Sample<S>],
    round: usize,
    cluster: usize,
    ledger: &mut TrafficLedger,
) -> Result<S> {
    if shared.is_empty() {
        return Err(Error::contract("shared validation set is empty"));
    }
    let (batch, _) = split::client_forward(arch.client(), &theta.gamma, shared, last_client)?;
    ledger.message(round, cluster, WireMessage::Activations(&batch));
    ledger.client_passes(round, cluster, batch.len() as u64);

    let (losses, _) = split::ap_forward_loss(arch.ap(), &theta.phi, &batch)?;
    let sum = losses.iter().fold(S::zero(), |acc, &l| acc + l);
    Ok(sum / S::from(losses.len()).expect("count fits scalar"))
}

/// Argmin over finite losses; a non-finite loss disqualifies its cluster
/// before the comparison. Ties break to the lowest cluster index.
pub fn select_cluster<S: Scalar>(losses: &[S]) -> Result<usize> {
    if losses.is_empty() {
        return Err(Error::contract("no cluster losses to select from"));
    }
    let mut best: Option<(usize, S)> = None;
    for (i, &loss) in losses.iter().enumerate() {
        if !loss.is_finite() {
            continue;
        }
        match best {
            Some((_, b)) if loss >= b => {}
            _ => best = Some((i, loss)),
        }
    }
    best.map(|(i, _)| i).ok_or_else(|| {
        Error::RoundFailure("every cluster produced a non-finite validation loss".into())
    })
}

/// Result of the handoff verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VerifyOutcome {
    Ok,
    Tampered { flagged: Vec<usize> },
}

/// Compares each first client's shared-set activations against the
/// reference rows from the evaluating client. Any per-scalar absolute
/// difference above `epsilon` flags that client's received parameters.
pub fn verify_handoff<S: Scalar>(
    reference: &[Vec<S>],
    first_client_rows: &[(usize, Vec<Vec<S>>)],
    epsilon: S,
) -> Result<VerifyOutcome> {
    let mut flagged = Vec::new();
    for (client, rows) in first_client_rows {
        if rows.len() != reference.len() {
            return Err(Error::contract(format!(
                "verification rows from client {} cover {} samples, reference covers {}",
                client + 1,
                rows.len(),
                reference.len()
            )));
        }
        let mut mismatch = false;
        for (row, ref_row) in rows.iter().zip(reference) {
            if row.len() != ref_row.len() {
                return Err(Error::contract("verification row width mismatch"));
            }
            if row
                .iter()
                .zip(ref_row)
                .any(|(a, b)| (*a - *b).abs() > epsilon)
            {
                mismatch = true;
                break;
            }
        }
        if mismatch {
            flagged.push(*client);
        }
    }
    if flagged.is_empty() {
        Ok(VerifyOutcome::Ok)
    } else {
        Ok(VerifyOutcome::Tampered { flagged })
    }
}

/// Everything one global round produced, retained until the next round's
/// verification clears the handoff.
#[derive(Debug, Clone)]
pub struct RoundOutcome<S> {
    /// Selected cluster; `None` only after every candidate was
    /// disqualified by rollback.
    pub selected: Option<usize>,
    pub losses: Vec<S>,
    /// Parameters the next round starts from.
    pub theta_next: SplitParams<S>,
    /// Every cluster's end-of-round parameters, kept for rollback.
    pub candidates: Vec<SplitParams<S>>,
    /// Parameters this round started from (fallback when all candidates
    /// are disqualified).
    pub theta_start: SplitParams<S>,
    pub disqualified: Vec<bool>,
}

/// Disqualifies one cluster and reselects among the untainted remainder;
/// with nothing left the round becomes a no-op (`theta_next` returns to
/// the round's starting parameters).
pub fn rollback_reselect<S: Scalar>(
    mut outcome: RoundOutcome<S>,
    disqualified: usize,
) -> RoundOutcome<S> {
    outcome.disqualified[disqualified] = true;
    let mut best: Option<(usize, S)> = None;
    for (i, &loss) in outcome.losses.iter().enumerate() {
        if outcome.disqualified[i] || !loss.is_finite() {
            continue;
        }
        match best {
            Some((_, b)) if loss >= b => {}
            _ => best = Some((i, loss)),
        }
    }
    match best {
        Some((i, _)) => {
            outcome.selected = Some(i);
            outcome.theta_next = outcome.candidates[i].clone();
        }
        None => {
            outcome.selected = None;
            outcome.theta_next = outcome.theta_start.clone();
        }
    }
    outcome
}

/// What the previous round published, pending verification.
#[derive(Debug, Clone)]
struct Pending<S> {
    outcome: RoundOutcome<S>,
    assignment: ClusterAssignment,
    round: usize,
}

/// Per-round report handed to the harness.
#[derive(Debug, Clone)]
pub struct GlobalRoundReport<S> {
    pub round: usize,
    pub assignment: ClusterAssignment,
    pub detections: Vec<TamperEvent>,
    /// Parameters the round actually started from, after any rollback.
    pub theta_start: SplitParams<S>,
    pub losses: Vec<S>,
    pub selected: usize,
    pub selected_all_honest: bool,
    pub final_validation_loss: S,
    pub adopted_turns: usize,
    pub theta_end: SplitParams<S>,
}

/// Drives global rounds for all three modes through one code path.
///
/// Validation, verification, and selection run on the wire only when
/// there is more than one cluster; with `R = 1` (vanilla, or `N = 0`)
/// the loop degenerates to plain sequential SL and the validation loss
/// is computed as a free access-point metric.
pub struct RoundEngine<'a, S: Scalar> {
    clients: &'a [ClientState<S>],
    arch: &'a SplitArch,
    shared: &'a [Sample<S>],
    mode: Mode,
    num_clusters: usize,
    updates_per_turn: usize,
    batch_size: usize,
    learning_rate: S,
    seed: u64,
    verify_epsilon: S,
    pub ledger: TrafficLedger,
    round: usize,
    theta: SplitParams<S>,
    published_gamma: ParamVector<S>,
    pending: Option<Pending<S>>,
}

impl<'a, S: Scalar> RoundEngine<'a, S> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        clients: &'a [ClientState<S>],
        arch: &'a SplitArch,
        shared: &'a [Sample<S>],
        mode: Mode,
        max_malicious: usize,
        updates_per_turn: usize,
        batch_size: usize,
        learning_rate: S,
        seed: u64,
        theta_init: SplitParams<S>,
    ) -> Result<Self> {
        if clients.is_empty() {
            return Err(Error::config("at least one client required"));
        }
        if shared.is_empty() {
            return Err(Error::config("shared validation set must be nonempty"));
        }
        let num_clusters = match mode {
            Mode::Vanilla => 1,
            _ => max_malicious + 1,
        };
        if !clients.len().is_multiple_of(num_clusters) {
            return Err(Error::config(format!(
                "{} clients are not divisible into {num_clusters} clusters",
                clients.len()
            )));
        }
        let published_gamma = theta_init.gamma.clone();
        Ok(RoundEngine {
            clients,
            arch,
            shared,
            mode,
            num_clusters,
            updates_per_turn,
            batch_size,
            learning_rate,
            seed,
            verify_epsilon: S::zero(),
            ledger: TrafficLedger::new(),
            round: 1,
            theta: theta_init,
            published_gamma,
            pending: None,
        })
    }

    /// Overrides the verification tolerance (defaults to exact equality,
    /// which deterministic evaluation makes attainable).
    pub fn with_verify_epsilon(mut self, epsilon: S) -> Self {
        self.verify_epsilon = epsilon;
        self
    }

    fn protected(&self) -> bool {
        self.num_clusters > 1
    }

    /// Current adopted parameters.
    pub fn theta(&self) -> &SplitParams<S> {
        &self.theta
    }

    /// Client-half activations over the shared set; the deterministic
    /// reference the verification step compares against.
    fn shared_rows(&self, gamma: &ParamVector<S>) -> Result<Vec<Vec<S>>> {
        self.shared
            .iter()
            .map(|s| nn::forward(self.arch.client(), gamma, &s.x).map(|(out, _)| out))
            .collect()
    }

    /// Verifies the pending handoff at the start of round `t`, rolling
    /// back and republishing until the published parameters check out.
    fn resolve_handoff(
        &mut self,
        t: usize,
        assignment: &ClusterAssignment,
    ) -> Result<Vec<TamperEvent>> {
        let mut detections = Vec::new();
        loop {
            let reference_gamma = match &self.pending {
                Some(p) => p.outcome.theta_next.gamma.clone(),
                None => self.theta.gamma.clone(),
            };
            let reference = self.shared_rows(&reference_gamma)?;
            let received_rows = self.shared_rows(&self.published_gamma)?;

            let mut transmissions = Vec::with_capacity(assignment.num_clusters());
            for (ri, _) in assignment.clusters.iter().enumerate() {
                let first = assignment.first_client(ri);
                let batch = ActivationBatch {
                    rows: received_rows.clone(),
                    labels: self.shared.iter().map(|s| s.y).collect(),
                    origin_client: first,
                };
                self.ledger.message(t, ri, WireMessage::Activations(&batch));
                self.ledger.client_passes(t, ri, batch.len() as u64);
                transmissions.push((first, batch.rows));
            }

            match verify_handoff(&reference, &transmissions, self.verify_epsilon)? {
                VerifyOutcome::Ok => return Ok(detections),
                VerifyOutcome::Tampered { flagged } => {
                    let pending = self
                        .pending
                        .as_mut()
                        .expect("a tampered handoff implies a previous round");
                    let disqualified = pending
                        .outcome
                        .selected
                        .expect("a published handoff implies a selection");
                    let outcome = rollback_reselect(pending.outcome.clone(), disqualified);
                    detections.push(TamperEvent {
                        disqualified_cluster: disqualified,
                        flagged_clients: flagged,
                        reselected: outcome.selected,
                    });
                    let gamma_pub = match outcome.selected {
                        Some(sel) => {
                            let publisher = pending.assignment.last_client(sel);
                            let mut swap_rng =
                                rng::swap_stream(self.seed, publisher, pending.round);
                            self.clients[publisher].behavior.publish_handoff(
                                &outcome.theta_next.gamma,
                                self.arch.client(),
                                &mut swap_rng,
                            )
                        }
                        // Every candidate disqualified: the access point
                        // rebroadcasts the previous round's starting
                        // parameters itself.
                        None => outcome.theta_next.gamma.clone(),
                    };
                    for ri in 0..assignment.num_clusters() {
                        self.ledger
                            .message(t, ri, WireMessage::ParamHandoff(&gamma_pub));
                    }
                    self.published_gamma = gamma_pub;
                    pending.outcome = outcome;
                }
            }
        }
    }

    /// Executes global round `t` and advances the engine state.
    pub fn run_global_round(&mut self, sink: &mut dyn RunSink) -> Result<GlobalRoundReport<S>> {
        let t = self.round;
        self.round += 1;
        let r = self.num_clusters;

        let mut partition_rng = rng::partition_stream(self.seed, t);
        let assignment = partition_clients(self.clients.len(), r - 1, t, &mut partition_rng)?;

        let detections = if self.protected() {
            self.resolve_handoff(t, &assignment)?
        } else {
            Vec::new()
        };

        // The clients hold whatever was published; the AP holds the
        // verified candidate's half. On honest runs these coincide.
        let theta_base = match &self.pending {
            Some(p) => p.outcome.theta_next.clone(),
            None => self.theta.clone(),
        };
        let theta_start = SplitParams {
            gamma: self.published_gamma.clone(),
            phi: theta_base.phi,
        };

        // Cluster-wise training from the common starting parameters.
        let mut candidates = Vec::with_capacity(r);
        for (ri, members) in assignment.clusters.iter().enumerate() {
            let ctx = TurnCtx {
                round: t,
                subround: 0,
                cluster: ri,
                updates_per_turn: self.updates_per_turn,
                batch_size: self.batch_size,
                learning_rate: self.learning_rate,
                seed: self.seed,
            };
            let theta_r = run_cluster_round(
                self.clients,
                members,
                self.arch,
                theta_start.clone(),
                &ctx,
                &mut self.ledger,
                sink,
            )?;
            candidates.push(theta_r);
        }

        // Validation losses and selection.
        let mut losses = Vec::with_capacity(r);
        if self.protected() {
            for (ri, candidate) in candidates.iter().enumerate() {
                let last = assignment.last_client(ri);
                losses.push(evaluate_validation_loss(
                    self.arch,
                    candidate,
                    last,
                    self.shared,
                    t,
                    ri,
                    &mut self.ledger,
                )?);
            }
        } else {
            losses.push(split::mean_loss(self.arch, &candidates[0], self.shared)?);
        }
        let selected = select_cluster(&losses)
            .map_err(|e| Error::RoundFailure(format!("round {t}: {e}")))?;

        // Extra subrounds of the selected cluster.
        if self.mode == Mode::PigeonPlus && r > 1 {
            for sub in 1..r {
                self.ledger.message(
                    t,
                    selected,
                    WireMessage::ParamHandoff(&candidates[selected].gamma),
                );
                let ctx = TurnCtx {
                    round: t,
                    subround: sub,
                    cluster: selected,
                    updates_per_turn: self.updates_per_turn,
                    batch_size: self.batch_size,
                    learning_rate: self.learning_rate,
                    seed: self.seed,
                };
                candidates[selected] = run_cluster_round(
                    self.clients,
                    &assignment.clusters[selected],
                    self.arch,
                    candidates[selected].clone(),
                    &ctx,
                    &mut self.ledger,
                    sink,
                )?;
            }
        }

        let theta_next = candidates[selected].clone();
        let final_validation_loss = if self.mode == Mode::PigeonPlus && r > 1 {
            // Recomputed at the AP after the final subround; the same
            // activations serve as the next round's verification
            // reference, so no further wire traffic is charged.
            split::mean_loss(self.arch, &theta_next, self.shared)?
        } else {
            losses[selected]
        };

        let subrounds = if self.mode == Mode::PigeonPlus && r > 1 {
            r
        } else {
            1
        };
        let adopted_turns = assignment.clusters[selected].len() * subrounds;

        let selected_all_honest = assignment.clusters[selected]
            .iter()
            .all(|&c| !self.clients[c].behavior.is_malicious());

        // Publish the adopted client half toward the next round's first
        // clients; a parameter-swapping last client manipulates exactly
        // this payload.
        let publisher = assignment.last_client(selected);
        let mut swap_rng = rng::swap_stream(self.seed, publisher, t);
        let gamma_pub = self.clients[publisher].behavior.publish_handoff(
            &theta_next.gamma,
            self.arch.client(),
            &mut swap_rng,
        );
        for _ in 0..r {
            self.ledger
                .message(t, selected, WireMessage::ParamHandoff(&gamma_pub));
        }

        self.pending = Some(Pending {
            outcome: RoundOutcome {
                selected: Some(selected),
                losses: losses.clone(),
                theta_next: theta_next.clone(),
                candidates,
                theta_start: theta_start.clone(),
                disqualified: vec![false; r],
            },
            assignment: assignment.clone(),
            round: t,
        });
        self.published_gamma = gamma_pub;
        self.theta = theta_next.clone();

        Ok(GlobalRoundReport {
            round: t,
            assignment,
            detections,
            theta_start,
            losses,
            selected,
            selected_all_honest,
            final_validation_loss,
            adopted_turns,
            theta_end: theta_next,
        })
    }
}
