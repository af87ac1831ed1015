//! A deterministic split-learning laboratory.
//!
//! The crate simulates sequential split learning between clients and an
//! access point as explicit message exchanges. On top of the vanilla
//! protocol it implements cluster-based robust training: each round the
//! clients are partitioned into `N + 1` clusters, every cluster trains
//! independently, and the cluster with the lowest shared-set validation
//! loss is adopted — with at most `N` malicious clients, one cluster is
//! always clean. Parameter handoffs between rounds are verified against
//! shared-set activations and rolled back when manipulated.
//!
//! Four in-protocol attacks are available as per-client behaviors:
//! label flipping, activation tampering, cut-gradient negation, and
//! parameter swapping at the handoff. A traffic ledger counts every
//! scalar that crosses the wire and every client-side pass, and a run's
//! totals must reproduce the closed-form overhead expressions exactly.
//!
//! Everything is deterministic: a run is a pure function of its
//! configuration, bit for bit, including the CSV output.
//!
//! Core math is generic over the scalar type (`f32`/`f64`) via
//! [`scalar::Scalar`]; the harness and CLI run at `f64` through the
//! aliases below.

pub mod adversary;
pub mod data;
pub mod error;
pub mod events;
pub mod harness;
pub mod ledger;
pub mod nn;
pub mod pigeon;
pub mod protocol;
pub mod rng;
pub mod scalar;
pub mod split;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar type used by the experiment harness and the CLI.
pub type Real = f64;
/// Parameter vector at the default scalar.
pub type ParamVec = nn::ParamVector<Real>;
/// Gradient vector at the default scalar.
pub type GradVec = nn::GradVector<Real>;
/// Labelled sample at the default scalar.
pub type Sample = nn::Sample<Real>;
/// Split parameters at the default scalar.
pub type SplitParams = split::SplitParams<Real>;
/// Activation batch at the default scalar.
pub type ActivationBatch = split::ActivationBatch<Real>;
/// Cut-gradient batch at the default scalar.
pub type CutGradBatch = split::CutGradBatch<Real>;
/// Dataset bundle at the default scalar.
pub type DatasetBundle = data::DatasetBundle<Real>;
/// Client state at the default scalar.
pub type ClientState = protocol::ClientState<Real>;
