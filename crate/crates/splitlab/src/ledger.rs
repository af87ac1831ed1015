//! Traffic and computation accounting.
//!
//! The ledger counts three unit kinds, segmented per round and cluster:
//!
//! - `cut_scalar_units`: cut-layer traffic in scalars. Each transmitted
//!   activation row costs its width `d_c`. The gradient rows the AP
//!   returns answer a charged activation row of the same exchange, so
//!   the exchange's cost is carried by the uplink row; validation and
//!   verification transmissions are forward-only uplinks and charge the
//!   same way.
//! - `handoff_scalar_units`: client-side parameter handoffs, `d_CL`
//!   scalars per transmission.
//! - `client_pass_units`: client-side compute. One unit per training
//!   sample (forward plus backward) and one per validation forward.
//!
//! Counters are commutative sums, so totals are independent of the order
//! in which independent clusters would record them.

use std::collections::BTreeMap;

use crate::scalar::Scalar;
use crate::split::WireMessage;

/// One bucket of accounting totals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counters {
    pub cut_scalar_units: u64,
    pub handoff_scalar_units: u64,
    pub client_pass_units: u64,
}

impl Counters {
    pub fn add(&mut self, other: &Counters) {
        self.cut_scalar_units += other.cut_scalar_units;
        self.handoff_scalar_units += other.handoff_scalar_units;
        self.client_pass_units += other.client_pass_units;
    }
}

/// Monotone counters keyed by `(round, cluster)`.
#[derive(Debug, Clone, Default)]
pub struct TrafficLedger {
    rows: BTreeMap<(usize, usize), Counters>,
    total: Counters,
}

impl TrafficLedger {
    pub fn new() -> Self {
        TrafficLedger::default()
    }

    fn bucket(&mut self, round: usize, cluster: usize) -> &mut Counters {
        self.rows.entry((round, cluster)).or_default()
    }

    /// Records one on-protocol transmission.
    pub fn message<S: Scalar>(&mut self, round: usize, cluster: usize, msg: WireMessage<'_, S>) {
        match msg {
            WireMessage::Activations(batch) => {
                let units = (batch.len() * batch.width()) as u64;
                self.bucket(round, cluster).cut_scalar_units += units;
                self.total.cut_scalar_units += units;
            }
            // The downlink gradient rows ride the exchange already paid
            // for by the activation uplink; no extra scalar units.
            WireMessage::CutGradients(_) => {}
            WireMessage::ParamHandoff(params) => {
                let units = params.len() as u64;
                self.bucket(round, cluster).handoff_scalar_units += units;
                self.total.handoff_scalar_units += units;
            }
        }
    }

    /// Records client-side compute: `n` sample passes.
    pub fn client_passes(&mut self, round: usize, cluster: usize, n: u64) {
        self.bucket(round, cluster).client_pass_units += n;
        self.total.client_pass_units += n;
    }

    pub fn total(&self) -> Counters {
        self.total
    }

    pub fn cluster_total(&self, round: usize, cluster: usize) -> Counters {
        self.rows.get(&(round, cluster)).copied().unwrap_or_default()
    }

    pub fn round_total(&self, round: usize) -> Counters {
        let mut acc = Counters::default();
        for ((r, _), c) in &self.rows {
            if *r == round {
                acc.add(c);
            }
        }
        acc
    }

    /// Rows in deterministic `(round, cluster)` order.
    pub fn rows(&self) -> impl Iterator<Item = (&(usize, usize), &Counters)> {
        self.rows.iter()
    }
}
