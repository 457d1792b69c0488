//! # ia-workbench
//!
//! A numerical workbench for interference alignment (IA) in MIMO X networks —
//! single-hop networks in which every transmitter has an independent message
//! for every receiver. The crate turns the classical degrees-of-freedom (DoF)
//! machinery for these networks into executable, seed-reproducible checks:
//!
//! * [`network`] — X-network configurations, generic random channels (spatial
//!   and diagonal symbol-extended), transmitter-side decomposition and
//!   reciprocity transforms.
//! * [`cj`] — monomial beamforming bases over symbol extensions, built from
//!   products of interference-carrying channel matrices, with exact (symbolic)
//!   verification of the alignment conditions.
//! * [`separability`] — assembly of the signal-space matrix that stacks
//!   desired and aligned-interference columns, together with SVD rank
//!   certificates, the block-diagonal specialization check, and the
//!   row/column induction trace.
//! * [`dof`] — exact rational DoF calculators: outer bounds, achievable
//!   limits, finite-extension achieved fractions, and spatial scale
//!   invariance checks.
//! * [`feasibility`] — equation/variable counting and properness for spatial
//!   beamforming IA (no symbol extensions), plus an alternating-minimization
//!   leakage solver that gathers empirical feasibility evidence.
//! * [`cli`] — the `ia-workbench` command-line front end with JSON/CSV
//!   reports and `--replay` support.
//!
//! All randomness flows from explicit `u64` seeds through counter-derived
//! ChaCha streams, so every result in this crate is bit-reproducible.

pub mod cj;
pub mod cli;
pub mod dof;
pub mod feasibility;
pub mod network;
pub mod separability;

mod rng;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    /// A network configuration violates a structural invariant.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An operation restricted to SIMO configurations was given a
    /// multi-antenna transmitter.
    #[error("config is not SIMO: transmitter {transmitter} has {antennas} antennas (expected 1)")]
    NotSimo {
        /// Index of the offending transmitter (0-based).
        transmitter: usize,
        /// Its antenna count.
        antennas: usize,
    },

    /// Transmitter decomposition with a split that does not divide some
    /// antenna count.
    #[error("cannot split transmitter {transmitter} with {antennas} antennas into {split} nodes")]
    IndivisibleSplit {
        /// Index of the offending transmitter (0-based).
        transmitter: usize,
        /// Its antenna count.
        antennas: usize,
        /// The requested split factor.
        split: usize,
    },

    /// The requested monomial degree cap would overflow the evaluated
    /// column magnitudes or produce an unreasonably large basis.
    #[error("degree cap {cap} is out of range: {reason}")]
    DegreeOutOfRange {
        /// The offending cap (m or m+1).
        cap: usize,
        /// Size estimate or magnitude bound that failed.
        reason: String,
    },

    /// The extension-length identity requires `m ≥ L` and `R | M·|V|`; the
    /// given m fails one of the two.
    #[error(
        "extension degree m={m} is inadmissible for (M={num_tx}, N={num_rx}, R={rx_antennas}): \
         need m ≥ L and R | M·C(m,L); smallest admissible m is {next_admissible}"
    )]
    InadmissibleDegree {
        /// The rejected degree.
        m: usize,
        /// Transmitter count.
        num_tx: usize,
        /// Receiver count.
        num_rx: usize,
        /// Antennas per receiver.
        rx_antennas: usize,
        /// Smallest admissible degree `≥ m`.
        next_admissible: usize,
    },

    /// Two objects that must share dimensions or provenance do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix handed to a numeric check contains NaN or infinity.
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite {
        /// Row of the first non-finite entry.
        row: usize,
        /// Column of the first non-finite entry.
        col: usize,
    },

    /// A rank certificate was requested for a non-square matrix.
    #[error("matrix is {rows}×{cols}, expected square")]
    NotSquare {
        /// Row count.
        rows: usize,
        /// Column count.
        cols: usize,
    },

    /// A stream-demand matrix violates the per-node antenna budgets.
    #[error("invalid DoF demand: {0}")]
    InvalidDemand(String),

    /// The incremental induction matrix did not reproduce the directly
    /// assembled signal-space matrix.
    #[error("incremental and direct signal-space assembly disagree at {0}")]
    AssemblyMismatch(String),

    /// File I/O failure (CLI paths).
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON encode/decode failure (CLI paths).
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
