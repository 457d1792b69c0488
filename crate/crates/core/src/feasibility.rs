//! Properness counting and spatial-IA feasibility evidence.
//!
//! For linear interference alignment over one channel use (no symbol
//! extensions), the zero-forcing conditions form a polynomial system. This
//! module counts its scalar equations `N_e` and free variables `N_v`,
//! evaluates the properness condition `N_e ≤ N_v` and the symmetric-demand
//! stream bound, and runs an alternating-minimization solver over generic
//! spatial channels to gather empirical evidence for or against
//! feasibility. The solver reports evidence, never certainty: improper
//! systems are provably infeasible, and the solver's role is to exhibit
//! that behaviour (and the converse convergence on feasible instances)
//! numerically.

use nalgebra::{DMatrix, SymmetricEigen};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dof::rational_string;
use crate::network::{NetworkConfig, SpatialChannels};
use crate::rng;
use crate::{Error, Result};

/// Stream-demand matrix: entry `(j, i)` is the number of independent
/// streams transmitter `i` sends to receiver `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DofDemand {
    streams: Vec<Vec<usize>>,
}

impl DofDemand {
    /// Validates a demand matrix against a configuration: the shape must be
    /// `N × M`, every receiver must have `Σ_i d_ji ≤ B_j` and every
    /// transmitter `Σ_j d_ji ≤ A_i`, otherwise the filters cannot have full
    /// column rank.
    pub fn new(config: &NetworkConfig, streams: Vec<Vec<usize>>) -> Result<Self> {
        if streams.len() != config.num_rx()
            || streams.iter().any(|row| row.len() != config.num_tx())
        {
            return Err(Error::InvalidDemand(format!(
                "demand must be an {}×{} matrix",
                config.num_rx(),
                config.num_tx()
            )));
        }
        let demand = Self { streams };
        for rx in 0..config.num_rx() {
            let total = demand.rx_total(rx);
            if total > config.rx_antennas(rx) {
                return Err(Error::InvalidDemand(format!(
                    "receiver {rx} must combine {total} streams with only {} antennas",
                    config.rx_antennas(rx)
                )));
            }
        }
        for tx in 0..config.num_tx() {
            let total = demand.tx_total(tx);
            if total > config.tx_antennas(tx) {
                return Err(Error::InvalidDemand(format!(
                    "transmitter {tx} must precode {total} streams with only {} antennas",
                    config.tx_antennas(tx)
                )));
            }
        }
        Ok(demand)
    }

    /// The uniform demand `d_ji ≡ d`.
    pub fn uniform(config: &NetworkConfig, d: usize) -> Result<Self> {
        Self::new(config, vec![vec![d; config.num_tx()]; config.num_rx()])
    }

    /// Streams from transmitter `tx` to receiver `rx`.
    pub fn streams(&self, rx: usize, tx: usize) -> usize {
        self.streams[rx][tx]
    }

    /// Streams decoded at receiver `rx`, `Σ_i d_ji`.
    pub fn rx_total(&self, rx: usize) -> usize {
        self.streams[rx].iter().sum()
    }

    /// Streams originated by transmitter `tx`, `Σ_j d_ji`.
    pub fn tx_total(&self, tx: usize) -> usize {
        self.streams.iter().map(|row| row[tx]).sum()
    }

    /// Total stream count.
    pub fn total(&self) -> usize {
        self.streams.iter().flatten().sum()
    }

    /// True when no streams are requested.
    pub fn is_zero(&self) -> bool {
        self.total() == 0
    }

    /// Receiver count of the matrix.
    pub fn num_rx(&self) -> usize {
        self.streams.len()
    }

    /// Transmitter count of the matrix.
    pub fn num_tx(&self) -> usize {
        self.streams.first().map_or(0, Vec::len)
    }

    /// `Some(d)` when every entry equals `d`.
    pub fn uniform_streams(&self) -> Option<usize> {
        let d = self.streams[0][0];
        self.streams.iter().flatten().all(|&x| x == d).then_some(d)
    }
}

/// Number of scalar zero-forcing equations:
/// `N_e = Σ_k (Σ_i d_ki) · (Σ_{j≠k} Σ_i d_ji)`.
pub fn count_equations(demand: &DofDemand) -> u64 {
    let total = demand.total() as u64;
    (0..demand.num_rx())
        .map(|rx| {
            let own = demand.rx_total(rx) as u64;
            own * (total - own)
        })
        .sum()
}

/// Number of free filter variables after removing superfluous ones:
/// `N_v = Σ_j Σ_i (A_i − d_ji)·d_ji + Σ_j (B_j − Σ_i d_ji)·(Σ_i d_ji)`.
pub fn count_variables(config: &NetworkConfig, demand: &DofDemand) -> u64 {
    let precoder: u64 = (0..demand.num_rx())
        .flat_map(|rx| (0..demand.num_tx()).map(move |tx| (rx, tx)))
        .map(|(rx, tx)| {
            let d = demand.streams(rx, tx) as u64;
            (config.tx_antennas(tx) as u64 - d) * d
        })
        .sum();
    let combiner: u64 = (0..demand.num_rx())
        .map(|rx| {
            let own = demand.rx_total(rx) as u64;
            (config.rx_antennas(rx) as u64 - own) * own
        })
        .sum();
    precoder + combiner
}

/// Equation/variable counts and the properness verdict.
#[derive(Clone, Debug, Serialize)]
pub struct PropernessReport {
    /// Scalar equation count.
    #[serde(rename = "N_e")]
    pub equations: u64,
    /// Free variable count.
    #[serde(rename = "N_v")]
    pub variables: u64,
    /// `N_e ≤ N_v`.
    pub proper: bool,
    /// The symmetric stream bound `(A+B)/(MN+1)`, present when the
    /// configuration and demand are symmetric.
    #[serde(with = "rational_string::opt", skip_serializing_if = "Option::is_none")]
    pub symmetric_bound: Option<BigRational>,
}

/// Counts equations and variables for `demand` on `config` and evaluates
/// properness.
pub fn properness_report(config: &NetworkConfig, demand: &DofDemand) -> PropernessReport {
    let equations = count_equations(demand);
    let variables = count_variables(config, demand);
    let uniform_tx = config
        .tx_antenna_counts()
        .iter()
        .all(|&a| a == config.tx_antennas(0));
    let symmetric_bound = match (
        uniform_tx,
        config.uniform_rx_antennas(),
        demand.uniform_streams(),
    ) {
        (true, Some(b), Some(_)) => Some(
            symmetric_bound(
                config.num_tx() as u64,
                config.num_rx() as u64,
                config.tx_antennas(0) as u64,
                b as u64,
            )
            .bound,
        ),
        _ => None,
    };
    PropernessReport {
        equations,
        variables,
        proper: equations <= variables,
        symmetric_bound,
    }
}

/// The symmetric stream bound and the largest integer demand passing it.
#[derive(Clone, Debug, Serialize)]
pub struct SymmetricBound {
    /// `(A + B) / (MN + 1)` as an exact rational.
    #[serde(with = "rational_string")]
    pub bound: BigRational,
    /// `⌊bound⌋`: the largest integer `d` for which the uniform demand is
    /// proper.
    pub max_proper_streams: u64,
}

/// Stream bound for the symmetric network (`A` antennas per transmitter,
/// `B` per receiver, uniform demand): a feasible linear IA solution needs
/// `d ≤ (A + B) / (MN + 1)`.
pub fn symmetric_bound(
    num_tx: u64,
    num_rx: u64,
    tx_antennas: u64,
    rx_antennas: u64,
) -> SymmetricBound {
    let bound = BigRational::new(
        BigInt::from(tx_antennas + rx_antennas),
        BigInt::from(num_tx * num_rx + 1),
    );
    let max_proper_streams = bound.floor().to_integer().to_u64().unwrap_or(u64::MAX);
    SymmetricBound {
        bound,
        max_proper_streams,
    }
}

/// Orthonormal spatial-IA filters: one precoder per message, one combiner
/// per receiver (columns grouped by originating transmitter).
#[derive(Clone, Debug)]
pub struct IaSolution {
    /// `precoders[j][i]` is the `A_i × d_ji` precoder of message (j, i).
    pub precoders: Vec<Vec<DMatrix<Complex64>>>,
    /// `combiners[j]` is the `B_j × Σ_i d_ji` receive filter of receiver j.
    pub combiners: Vec<DMatrix<Complex64>>,
}

impl IaSolution {
    /// Worst column-orthonormality defect `‖X†X − I‖_max` over all filters.
    pub fn orthonormality_defect(&self) -> f64 {
        let defect = |m: &DMatrix<Complex64>| -> f64 {
            if m.ncols() == 0 {
                return 0.0;
            }
            let gram = m.adjoint() * m;
            let eye = DMatrix::<Complex64>::identity(m.ncols(), m.ncols());
            (gram - eye).iter().map(|z| z.norm()).fold(0.0, f64::max)
        };
        self.precoders
            .iter()
            .flatten()
            .chain(&self.combiners)
            .map(defect)
            .fold(0.0, f64::max)
    }
}

/// How one restart of the alternating solver ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RestartOutcome {
    /// Normalized leakage fell below the tolerance.
    Converged {
        /// Iterations used.
        iterations: usize,
    },
    /// Relative improvement stalled while the leakage stayed above the
    /// tolerance.
    Plateaued {
        /// Iterations used.
        iterations: usize,
    },
    /// The iteration budget ran out while still improving.
    Exhausted,
}

/// Leakage series of one restart.
#[derive(Clone, Debug, Serialize)]
pub struct RestartTrace {
    /// Restart index.
    pub restart: usize,
    /// Total interference power caught by the receive filters, per
    /// iteration (iteration 0 is the random initialization).
    pub leakage: Vec<f64>,
    /// The same series normalized by the total desired-signal power.
    pub normalized: Vec<f64>,
    /// Stop reason.
    pub outcome: RestartOutcome,
}

impl RestartTrace {
    /// Final normalized leakage of the run.
    pub fn final_normalized(&self) -> f64 {
        *self.normalized.last().unwrap_or(&f64::INFINITY)
    }
}

/// Instrumentation of a whole solve: per-restart leakage series plus the
/// desired-signal rank flags of the best solution.
#[derive(Clone, Debug, Serialize)]
pub struct LeakageTrace {
    /// One trace per restart, keyed by restart index.
    pub restarts: Vec<RestartTrace>,
    /// Rank-condition flags per receiver, evaluated on the best restart.
    pub desired_rank_ok: Vec<bool>,
}

/// Evidence classification of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Some restart reached the leakage tolerance with all rank conditions
    /// intact. Not a proof of feasibility.
    #[serde(rename = "FEASIBLE_EVIDENCE")]
    Feasible,
    /// Every restart plateaued above the tolerance. Not a proof of
    /// infeasibility (though improperness is).
    #[serde(rename = "INFEASIBLE_EVIDENCE")]
    Infeasible,
    /// Mixed or budget-limited outcomes.
    #[serde(rename = "INCONCLUSIVE")]
    Inconclusive,
}

/// Knobs of the alternating solver.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Iteration budget per restart.
    pub max_iters: usize,
    /// Normalized-leakage convergence tolerance.
    pub leak_tol: f64,
    /// Independent random initializations.
    pub restarts: usize,
    /// Root seed for the initializations.
    pub seed: u64,
    /// Plateau window (iterations).
    pub plateau_window: usize,
    /// Minimal relative improvement over a window to keep going.
    pub plateau_rel: f64,
    /// Relative tolerance of the desired-signal rank check.
    pub rank_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            leak_tol: 1e-9,
            restarts: 5,
            seed: 0,
            plateau_window: 50,
            plateau_rel: 1e-6,
            rank_tol: 1e-8,
        }
    }
}

/// Result of [`solve_spatial_ia`].
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    /// Evidence classification.
    pub verdict: Verdict,
    /// Filters of the best restart.
    pub solution: IaSolution,
    /// Per-restart instrumentation.
    pub trace: LeakageTrace,
    /// Index of the best restart.
    pub best_restart: usize,
    /// Final normalized leakage of the best restart.
    pub final_leakage: f64,
}

const RESTART_TAG: u64 = 0x4941_5253;

fn random_orthonormal(
    rows: usize,
    cols: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> DMatrix<Complex64> {
    let raw = DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    if cols == 0 {
        return raw;
    }
    raw.qr().q()
}

/// Columns of the Hermitian part of `matrix` belonging to its `count`
/// smallest eigenvalues, in ascending eigenvalue order (ties broken by the
/// decomposition's output order, which is deterministic).
fn least_dominant_eigenvectors(matrix: &DMatrix<Complex64>, count: usize) -> DMatrix<Complex64> {
    let dim = matrix.nrows();
    let hermitian = (matrix + matrix.adjoint()).scale(0.5);
    let eigen = SymmetricEigen::new(hermitian);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[a]
            .partial_cmp(&eigen.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut out = DMatrix::zeros(dim, count);
    for (col, &idx) in order.iter().take(count).enumerate() {
        out.set_column(col, &eigen.eigenvectors.column(idx));
    }
    out
}

/// Interference covariance at receiver `rx`: signals destined to other
/// receivers, observed through the links into `rx`.
#[allow(clippy::needless_range_loop)]
fn interference_covariance(
    channels: &SpatialChannels,
    precoders: &[Vec<DMatrix<Complex64>>],
    rx: usize,
) -> DMatrix<Complex64> {
    let config = channels.config();
    let b = config.rx_antennas(rx);
    let mut q = DMatrix::<Complex64>::zeros(b, b);
    for tx in 0..config.num_tx() {
        let h = channels.link(rx, tx);
        for other in (0..config.num_rx()).filter(|&k| k != rx) {
            let v = &precoders[other][tx];
            if v.ncols() == 0 {
                continue;
            }
            let hv = h * v;
            q += &hv * hv.adjoint();
        }
    }
    q
}

/// Raw and normalized forward leakage of a filter set.
#[derive(Clone, Copy, Debug)]
pub struct LeakageValue {
    /// `Σ_j tr(U^{[j]†} Q_j U^{[j]})`.
    pub raw: f64,
    /// Total desired-signal power `Σ_j ‖U^{[j]†}[H V]‖²`.
    pub desired_power: f64,
    /// `raw / desired_power` (raw when the desired power vanishes).
    pub normalized: f64,
}

/// The desired-signal response `U^{[j]†}[H^{[j,1]}V^{[j,1]}, …]` of one
/// receiver (a `Σd × Σd` matrix).
fn desired_response(
    channels: &SpatialChannels,
    solution: &IaSolution,
    demand: &DofDemand,
    rx: usize,
) -> DMatrix<Complex64> {
    let config = channels.config();
    let own = demand.rx_total(rx);
    let mut stacked = DMatrix::<Complex64>::zeros(config.rx_antennas(rx), own);
    let mut offset = 0;
    for tx in 0..config.num_tx() {
        let d = demand.streams(rx, tx);
        if d == 0 {
            continue;
        }
        let hv = channels.link(rx, tx) * &solution.precoders[rx][tx];
        stacked
            .view_mut((0, offset), (config.rx_antennas(rx), d))
            .copy_from(&hv);
        offset += d;
    }
    solution.combiners[rx].adjoint() * stacked
}

/// Evaluates the forward interference leakage of `solution`.
pub fn forward_leakage(
    channels: &SpatialChannels,
    solution: &IaSolution,
    demand: &DofDemand,
) -> LeakageValue {
    let config = channels.config();
    let mut raw = 0.0;
    let mut desired_power = 0.0;
    for rx in 0..config.num_rx() {
        let u = &solution.combiners[rx];
        if u.ncols() == 0 {
            continue;
        }
        let q = interference_covariance(channels, &solution.precoders, rx);
        raw += (u.adjoint() * &q * u)
            .diagonal()
            .iter()
            .map(|z| z.re)
            .sum::<f64>();
        desired_power += desired_response(channels, solution, demand, rx)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>();
    }
    let normalized = if desired_power > 0.0 {
        raw / desired_power
    } else {
        raw
    };
    LeakageValue {
        raw,
        desired_power,
        normalized,
    }
}

/// Checks the desired-signal rank condition at every receiver: the
/// filtered desired response must have numerical rank `Σ_i d_ji` at the
/// given relative tolerance. Receivers with no streams pass vacuously.
pub fn check_rank_conditions(
    channels: &SpatialChannels,
    solution: &IaSolution,
    demand: &DofDemand,
    tol_rel: f64,
) -> Vec<bool> {
    (0..channels.config().num_rx())
        .map(|rx| {
            if demand.rx_total(rx) == 0 {
                return true;
            }
            let response = desired_response(channels, solution, demand, rx);
            let sv = response.svd(false, false).singular_values;
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for &s in sv.iter() {
                lo = lo.min(s);
                hi = hi.max(s);
            }
            hi > 0.0 && lo > tol_rel * hi
        })
        .collect()
}

/// Splits a combiner into its per-transmitter column blocks.
fn combiner_blocks<'a>(
    combiner: &'a DMatrix<Complex64>,
    demand: &DofDemand,
    rx: usize,
) -> Vec<nalgebra::DMatrixView<'a, Complex64>> {
    let mut blocks = Vec::with_capacity(demand.num_tx());
    let mut offset = 0;
    for tx in 0..demand.num_tx() {
        let d = demand.streams(rx, tx);
        blocks.push(combiner.view((0, offset), (combiner.nrows(), d)));
        offset += d;
    }
    blocks
}

/// Residual of the reciprocal zero-forcing conditions when the filters are
/// read through the role-swapped correspondence: the combiner splits
/// column-wise into per-message reciprocal precoders, the per-message
/// precoders stack into reciprocal combiners, and the reciprocal channel is
/// the conjugate transpose.
pub fn reciprocal_leakage(
    channels: &SpatialChannels,
    solution: &IaSolution,
    demand: &DofDemand,
) -> f64 {
    let config = channels.config();
    let mut total = 0.0;
    // Reciprocal receiver = original transmitter `tx`; its combiner stacks
    // the precoders of every message that transmitter originates.
    for tx in 0..config.num_tx() {
        for rx in 0..config.num_rx() {
            let h = channels.link(rx, tx); // reciprocal channel is h†
            let blocks = combiner_blocks(&solution.combiners[rx], demand, rx);
            for (other_tx, block) in blocks.iter().enumerate() {
                if other_tx == tx || block.ncols() == 0 {
                    continue;
                }
                // ‖Ũ^{[tx]†} h† block‖² summed over the stacked combiner
                // rows = Σ_j' ‖V^{[j',tx]†} h† block‖².
                for j2 in 0..config.num_rx() {
                    let v = &solution.precoders[j2][tx];
                    if v.ncols() == 0 {
                        continue;
                    }
                    let m = v.adjoint() * h.adjoint() * block;
                    total += m.iter().map(|z| z.norm_sqr()).sum::<f64>();
                }
            }
        }
    }
    total
}

/// [`reciprocal_leakage`] after canonicalizing each combiner so its desired
/// response becomes the identity (same column span, hence the same forward
/// leakage subspaces). At an exact alignment point the canonical reciprocal
/// residual vanishes with the forward one; the raw split may not, because
/// the correspondence fixes filters only up to an invertible column mix.
pub fn canonicalized_reciprocal_leakage(
    channels: &SpatialChannels,
    solution: &IaSolution,
    demand: &DofDemand,
) -> Result<f64> {
    let config = channels.config();
    let mut canonical = solution.clone();
    for rx in 0..config.num_rx() {
        if demand.rx_total(rx) == 0 {
            continue;
        }
        let response = desired_response(channels, solution, demand, rx);
        let inv = response.try_inverse().ok_or_else(|| {
            Error::InvalidConfig(format!(
                "receiver {rx}: desired response is singular, cannot canonicalize"
            ))
        })?;
        canonical.combiners[rx] = &solution.combiners[rx] * inv.adjoint();
    }
    Ok(reciprocal_leakage(channels, &canonical, demand))
}

/// Reverse half-sweep through the reciprocal network: the reciprocal
/// channel is `H†` and each stream's precoder acts there as one block of
/// the reciprocal receive filter, so updating `V^{[ji]}` to the `d_ji`
/// least-dominant eigenvectors of
/// `Σ_{k≠j} H^{[ki]†} U^{[k]} U^{[k]†} H^{[ki]}` — the covariance of
/// everything the stream would leak into the other receivers' filters —
/// exactly minimizes the total forward leakage in that block.
#[allow(clippy::needless_range_loop)]
fn reverse_sweep(
    channels: &SpatialChannels,
    demand: &DofDemand,
    precoders: &mut [Vec<DMatrix<Complex64>>],
    combiners: &[DMatrix<Complex64>],
) {
    let config = channels.config();
    for tx in 0..config.num_tx() {
        for rx in 0..config.num_rx() {
            let d = demand.streams(rx, tx);
            if d == 0 {
                continue;
            }
            let a = config.tx_antennas(tx);
            let mut g = DMatrix::<Complex64>::zeros(a, a);
            for k in (0..config.num_rx()).filter(|&k| k != rx) {
                let hu = channels.link(k, tx).adjoint() * &combiners[k];
                g += &hu * hu.adjoint();
            }
            precoders[rx][tx] = least_dominant_eigenvectors(&g, d);
        }
    }
}

/// Runs the alternating spatial-IA solver: the forward half-sweep updates
/// each combiner to the least-dominant eigenvectors of its interference
/// covariance, the reverse half-sweep updates each precoder through the
/// reciprocal network, and each half exactly minimizes the total
/// interference leakage given the other side — so the recorded leakage is
/// nonincreasing. Multiple seeded restarts explore different basins; the
/// verdict reports evidence, never proof.
pub fn solve_spatial_ia(
    channels: &SpatialChannels,
    demand: &DofDemand,
    options: &SolveOptions,
) -> Result<SolveOutcome> {
    let config = channels.config();
    if demand.num_rx() != config.num_rx() || demand.num_tx() != config.num_tx() {
        return Err(Error::InvalidDemand(
            "demand shape does not match the channel configuration".into(),
        ));
    }
    // Re-validate the antenna budgets in case the demand was deserialized.
    let demand = DofDemand::new(config, demand.streams.clone())?;

    if demand.is_zero() {
        let solution = IaSolution {
            precoders: (0..config.num_rx())
                .map(|_| {
                    (0..config.num_tx())
                        .map(|tx| DMatrix::zeros(config.tx_antennas(tx), 0))
                        .collect()
                })
                .collect(),
            combiners: (0..config.num_rx())
                .map(|rx| DMatrix::zeros(config.rx_antennas(rx), 0))
                .collect(),
        };
        let trace = LeakageTrace {
            restarts: vec![RestartTrace {
                restart: 0,
                leakage: vec![0.0],
                normalized: vec![0.0],
                outcome: RestartOutcome::Converged { iterations: 0 },
            }],
            desired_rank_ok: vec![true; config.num_rx()],
        };
        return Ok(SolveOutcome {
            verdict: Verdict::Feasible,
            solution,
            trace,
            best_restart: 0,
            final_leakage: 0.0,
        });
    }

    let mut restarts = Vec::with_capacity(options.restarts);
    let mut candidates: Vec<IaSolution> = Vec::with_capacity(options.restarts);
    for restart in 0..options.restarts {
        let mut rng = rng::stream_rng(options.seed, RESTART_TAG | (restart as u64) << 32);
        let mut solution = IaSolution {
            precoders: (0..config.num_rx())
                .map(|rx| {
                    (0..config.num_tx())
                        .map(|tx| {
                            random_orthonormal(
                                config.tx_antennas(tx),
                                demand.streams(rx, tx),
                                &mut rng,
                            )
                        })
                        .collect()
                })
                .collect(),
            combiners: (0..config.num_rx())
                .map(|rx| random_orthonormal(config.rx_antennas(rx), demand.rx_total(rx), &mut rng))
                .collect(),
        };

        let initial = forward_leakage(channels, &solution, &demand);
        let mut leakage = vec![initial.raw];
        let mut normalized = vec![initial.normalized];
        let mut outcome = RestartOutcome::Exhausted;

        for iteration in 1..=options.max_iters {
            // Forward half-sweep: combiners catch the least interference.
            for rx in 0..config.num_rx() {
                let q = interference_covariance(channels, &solution.precoders, rx);
                solution.combiners[rx] = least_dominant_eigenvectors(&q, demand.rx_total(rx));
            }
            // Reverse half-sweep: precoders move out of the way.
            reverse_sweep(
                channels,
                &demand,
                &mut solution.precoders,
                &solution.combiners,
            );

            let value = forward_leakage(channels, &solution, &demand);
            leakage.push(value.raw);
            normalized.push(value.normalized);

            if value.normalized < options.leak_tol {
                outcome = RestartOutcome::Converged {
                    iterations: iteration,
                };
                break;
            }
            if iteration >= options.plateau_window {
                let before = normalized[iteration - options.plateau_window];
                let improvement = (before - value.normalized) / before.max(f64::MIN_POSITIVE);
                if improvement < options.plateau_rel {
                    outcome = RestartOutcome::Plateaued {
                        iterations: iteration,
                    };
                    break;
                }
            }
        }

        restarts.push(RestartTrace {
            restart,
            leakage,
            normalized,
            outcome,
        });
        candidates.push(solution);
    }

    let best_restart = (0..restarts.len())
        .min_by(|&a, &b| {
            let (fa, fb) = (
                restarts[a].final_normalized(),
                restarts[b].final_normalized(),
            );
            fa.partial_cmp(&fb).unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("at least one restart");
    let solution = candidates.swap_remove(best_restart);
    let final_leakage = restarts[best_restart].final_normalized();
    let desired_rank_ok = check_rank_conditions(channels, &solution, &demand, options.rank_tol);

    let converged_with_rank = matches!(
        restarts[best_restart].outcome,
        RestartOutcome::Converged { .. }
    ) && desired_rank_ok.iter().all(|&ok| ok);
    let all_plateaued = restarts
        .iter()
        .all(|r| matches!(r.outcome, RestartOutcome::Plateaued { .. }));
    let verdict = if converged_with_rank {
        Verdict::Feasible
    } else if all_plateaued {
        Verdict::Infeasible
    } else {
        Verdict::Inconclusive
    };

    Ok(SolveOutcome {
        verdict,
        solution,
        trace: LeakageTrace {
            restarts,
            desired_rank_ok,
        },
        best_restart,
        final_leakage,
    })
}
