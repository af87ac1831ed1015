//! Structured run events and the sink they flow through.
//!
//! The protocol emits one [`TurnLog`] per mini-batch update and the
//! harness emits one [`RoundRecord`] per global round. Sinks decide what
//! to do with them: the CLI streams CSV rows, tests collect in memory.

use crate::ledger::Counters;

/// One mini-batch update inside a client turn.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnLog {
    pub round: usize,
    pub subround: usize,
    pub cluster: usize,
    pub client: usize,
    pub batch_index: usize,
    pub mean_loss: f64,
}

/// A detected parameter-handoff manipulation, discovered while verifying
/// the previous round's published client half.
#[derive(Debug, Clone, PartialEq)]
pub struct TamperEvent {
    /// Cluster index (within the previous round) whose handoff was bad.
    pub disqualified_cluster: usize,
    /// First clients whose verification transmissions mismatched.
    pub flagged_clients: Vec<usize>,
    /// Cluster adopted instead, if any candidate remained.
    pub reselected: Option<usize>,
}

/// Per-round report: validation losses, selection, metrics, detections.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// Global round index, 1-based.
    pub round: usize,
    /// Per-cluster validation losses at selection time.
    pub cluster_losses: Vec<f64>,
    /// Selected cluster, 0-based; `None` only if every candidate of the
    /// round was disqualified later (stress configurations).
    pub selected: usize,
    /// Whether the selected cluster contained no malicious client.
    pub selected_all_honest: bool,
    /// Validation loss of the parameters actually adopted for the next
    /// round (recomputed after extra subrounds when those run).
    pub final_validation_loss: f64,
    /// Test accuracy of the adopted parameters.
    pub test_accuracy: f64,
    /// Squared gradient norm of the mean probe-set loss at the round's
    /// starting parameters.
    pub grad_norm_sq: f64,
    /// Turns whose updates survive into the adopted parameters.
    pub adopted_turns: usize,
    /// Tamper detections handled at the start of this round.
    pub detections: Vec<TamperEvent>,
    /// Cumulative ledger totals at the end of the round.
    pub ledger_total: Counters,
}

/// Receiver for run events.
pub trait RunSink {
    fn on_turn(&mut self, _log: &TurnLog) {}
    fn on_round(&mut self, _record: &RoundRecord) {}
}

/// Discards everything.
pub struct NullSink;

impl RunSink for NullSink {}

/// Collects everything; used by tests and by the library API.
#[derive(Default)]
pub struct CollectSink {
    pub turns: Vec<TurnLog>,
    pub rounds: Vec<RoundRecord>,
}

impl RunSink for CollectSink {
    fn on_turn(&mut self, log: &TurnLog) {
        self.turns.push(log.clone());
    }

    fn on_round(&mut self, record: &RoundRecord) {
        self.rounds.push(record.clone());
    }
}
