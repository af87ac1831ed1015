//! Closed-form per-round communication and computation overheads.
//!
//! Communication is counted in scalars: cut-layer traffic weighs `d_c`
//! per transmitted sample row, parameter handoffs weigh `d_CL` per
//! transmission. Computation counts client-side passes at one unit per
//! training sample and per validation forward. A completed honest run's
//! ledger must reproduce these forms exactly, per round and in total.

use crate::pigeon::Mode;

/// Inputs to the closed forms.
#[derive(Debug, Clone, Copy)]
pub struct OverheadInputs {
    pub mode: Mode,
    /// Total clients M.
    pub clients: u64,
    /// Per-cluster size M-bar.
    pub cluster_size: u64,
    /// Cluster count R.
    pub num_clusters: u64,
    /// Samples each client processes per round (E * B).
    pub samples_per_round: u64,
    /// Shared validation samples D_o.
    pub shared_size: u64,
    /// Cut-layer width d_c.
    pub cut_width: u64,
    /// Client-side parameter count d_CL.
    pub client_params: u64,
}

/// Per-round scalar-unit totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverheadBreakdown {
    /// Communication attributable to the selected cluster.
    pub comm_selected: u64,
    /// Communication attributable to each unselected cluster.
    pub comm_unselected: u64,
    /// Communication across all clusters.
    pub comm_total: u64,
    /// Client-side compute across all clusters, in pass units.
    pub compute_total: u64,
}

pub fn expected_overhead(inputs: &OverheadInputs) -> OverheadBreakdown {
    let OverheadInputs {
        mode,
        clients: m,
        cluster_size: m_bar,
        num_clusters: r,
        samples_per_round: d_tilde,
        shared_size: d_o,
        cut_width: d_c,
        client_params: d_cl,
    } = *inputs;

    match mode {
        Mode::Vanilla => {
            let comm = m * d_tilde * d_c + m * d_cl;
            OverheadBreakdown {
                comm_selected: comm,
                comm_unselected: 0,
                comm_total: comm,
                compute_total: m * d_tilde,
            }
        }
        Mode::Pigeon => OverheadBreakdown {
            comm_selected: (m_bar * d_tilde + 2 * d_o) * d_c + (m_bar + r - 1) * d_cl,
            comm_unselected: (m_bar * d_tilde + 2 * d_o) * d_c + (m_bar - 1) * d_cl,
            comm_total: (m * d_tilde + 2 * r * d_o) * d_c + m * d_cl,
            compute_total: m * d_tilde + 2 * r * d_o,
        },
        Mode::PigeonPlus => OverheadBreakdown {
            comm_selected: (m * d_tilde + 2 * d_o) * d_c + (m + r - 1) * d_cl,
            comm_unselected: (m_bar * d_tilde + 2 * d_o) * d_c + (m_bar - 1) * d_cl,
            comm_total: ((2 * m - m_bar) * d_tilde + 2 * r * d_o) * d_c + (2 * m - m_bar) * d_cl,
            compute_total: (2 * m - m_bar) * d_tilde + 2 * r * d_o,
        },
    }
}
