//! Signal-space assembly and rank certificates.
//!
//! After aligning interference with the monomial bases, what remains to be
//! certified is separability: at the reference receiver (receiver 0,
//! without loss of generality) the desired columns and the aligned
//! interference columns must together span the whole `nR`-dimensional
//! receive space. This module assembles that square signal-space matrix,
//! certifies its rank through singular values, and re-derives it two more
//! ways — through the block-diagonal specialization of the desired block,
//! and through the stepwise row/column induction — so each rank claim is
//! checked along an independent route.

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_complex::Complex64;
use serde::Serialize;

use crate::cj::{self, BeamBasis};
use crate::network::{ExtendedChannels, NetworkConfig};
use crate::{Error, Result};

/// Default relative singular-value tolerance for rank certificates.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Matrices beyond this edge length are refused (the workbench targets
/// desk-scale certificates).
const MAX_EXTENSION: usize = 1 << 22;

/// Scenario tag for the specialized re-draw used by the Step-1 check.
const STEP1_REDRAW_TAG: u64 = 0x5354_4550_3100;

/// Dimension bookkeeping for an `m`-capped construction over a SIMO
/// network: basis sizes and the symbol-extension length they force.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ExtensionPlan {
    /// Degree cap of the signal bases.
    pub m: usize,
    /// Count of interference-carrying channels, `L = M·R·(N−1)`.
    pub interference_channels: usize,
    /// Signal-basis size `|V| = C(m, L)`.
    pub v_cols: usize,
    /// Interference-basis size `|I| = C(m+1, L)`.
    pub i_cols: usize,
    /// Extension length `n = M·|V|/R + (N−1)·|I|`.
    pub n: usize,
}

fn to_usize(count: &BigUint, what: &str) -> Result<usize> {
    usize::try_from(count)
        .ok()
        .filter(|&c| c <= MAX_EXTENSION)
        .ok_or_else(|| {
            Error::InvalidConfig(format!("{what} = {count} exceeds the desk-scale limit"))
        })
}

fn degree_is_admissible(num_tx: usize, rx_antennas: usize, arity: usize, m: usize) -> bool {
    m >= arity && (cj::binomial(m, arity) * BigUint::from(num_tx)) % rx_antennas == BigUint::ZERO
}

/// Exact basis/dimension counts, unconstrained by matrix-size limits.
/// Used by the rational DoF calculators, where the counts may be
/// astronomically large but are never materialized.
pub(crate) struct ExtensionCounts {
    pub v_cols: BigUint,
    pub i_cols: BigUint,
    pub n: BigUint,
}

pub(crate) fn extension_counts(
    num_tx: usize,
    num_rx: usize,
    rx_antennas: usize,
    m: usize,
) -> Result<ExtensionCounts> {
    if num_tx == 0 || num_rx < 2 || rx_antennas == 0 {
        return Err(Error::InvalidConfig(
            "the construction needs M ≥ 1, N ≥ 2 and R ≥ 1".into(),
        ));
    }
    if num_tx <= rx_antennas {
        return Err(Error::InvalidConfig(format!(
            "the beamforming construction needs M > R, got M = {num_tx} ≤ R = {rx_antennas}"
        )));
    }
    let arity = num_tx * rx_antennas * (num_rx - 1);
    if !degree_is_admissible(num_tx, rx_antennas, arity, m) {
        return Err(Error::InadmissibleDegree {
            m,
            num_tx,
            num_rx,
            rx_antennas,
            next_admissible: next_admissible_degree(num_tx, num_rx, rx_antennas, m),
        });
    }
    let v_cols = cj::binomial(m, arity);
    let i_cols = cj::binomial(m + 1, arity);
    let desired = &v_cols * BigUint::from(num_tx) / BigUint::from(rx_antennas);
    let n = &desired + &i_cols * BigUint::from(num_rx - 1);
    Ok(ExtensionCounts { v_cols, i_cols, n })
}

/// Ascending admissible degrees for a SIMO shape, starting at the smallest.
pub fn admissible_degrees(
    num_tx: usize,
    num_rx: usize,
    rx_antennas: usize,
) -> impl Iterator<Item = usize> {
    let mut m = 0;
    std::iter::from_fn(move || {
        m = next_admissible_degree(num_tx, num_rx, rx_antennas, m);
        let found = m;
        m += 1;
        Some(found)
    })
}

/// Smallest admissible degree `≥ start` for the given SIMO shape; an
/// admissible `m` satisfies `m ≥ L` and `R | M·C(m, L)`.
pub fn next_admissible_degree(
    num_tx: usize,
    num_rx: usize,
    rx_antennas: usize,
    start: usize,
) -> usize {
    let arity = num_tx * rx_antennas * (num_rx - 1);
    let mut m = start.max(arity);
    // m = L·R·z always works, so the scan terminates well before this bound.
    let bound = (m + arity * rx_antennas).max(arity * rx_antennas);
    while m <= bound {
        if degree_is_admissible(num_tx, rx_antennas, arity, m) {
            return m;
        }
        m += 1;
    }
    unreachable!("an admissible degree exists within one L·R stride");
}

/// Computes basis sizes and the extension length for degree cap `m`, or
/// reports the smallest admissible degree when `m` violates `m ≥ L` or
/// `R | M·|V|`.
pub fn choose_extension_length(
    num_tx: usize,
    num_rx: usize,
    rx_antennas: usize,
    m: usize,
) -> Result<ExtensionPlan> {
    let counts = extension_counts(num_tx, num_rx, rx_antennas, m)?;
    Ok(ExtensionPlan {
        m,
        interference_channels: num_tx * rx_antennas * (num_rx - 1),
        v_cols: to_usize(&counts.v_cols, "|V|")?,
        i_cols: to_usize(&counts.i_cols, "|I|")?,
        n: to_usize(&counts.n, "extension length n")?,
    })
}

/// The per-receiver signal and interference bases of one channel
/// realization.
#[derive(Clone, Debug)]
pub struct CjBases {
    /// `V_j` for every receiver `j`.
    pub signal: Vec<BeamBasis>,
    /// `I_j` for every receiver `j`.
    pub interference: Vec<BeamBasis>,
}

impl CjBases {
    /// Degree cap the bases were built with.
    pub fn degree(&self) -> usize {
        self.signal[0].basis().cap()
    }
}

/// Builds `V_j` and `I_j` for every receiver of `channels` at degree `m`.
/// The channel extension must equal the length planned by
/// [`choose_extension_length`].
pub fn build_bases(channels: &ExtendedChannels, m: usize) -> Result<CjBases> {
    let plan = choose_extension_length(
        channels.num_tx(),
        channels.num_rx(),
        channels.rx_antennas(),
        m,
    )?;
    if plan.n != channels.extension() {
        return Err(Error::DimensionMismatch(format!(
            "channels carry an extension of {} uses but degree m={m} plans n={}",
            channels.extension(),
            plan.n
        )));
    }
    let mut signal = Vec::with_capacity(channels.num_rx());
    let mut interference = Vec::with_capacity(channels.num_rx());
    for served in 0..channels.num_rx() {
        signal.push(cj::build_beam_basis(channels, served, m)?);
        interference.push(cj::build_interference_basis(channels, served, m)?);
    }
    Ok(CjBases {
        signal,
        interference,
    })
}

/// What a column of the signal-space matrix carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ColumnSource {
    /// A desired-signal column: transmitter `tx` precoding signal-basis
    /// column `column` for receiver 0.
    Desired {
        /// Transmitter index.
        tx: usize,
        /// Signal-basis column.
        column: usize,
    },
    /// An aligned-interference column: replica `replica` of column `column`
    /// of the interference basis of receiver `rx`.
    Interference {
        /// The receiver whose messages cause this interference.
        rx: usize,
        /// Interference-basis column.
        column: usize,
        /// Antenna replica within the block-diagonal structure.
        replica: usize,
    },
}

/// What a row of the signal-space matrix observes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RowSource {
    /// Channel use `t`.
    pub channel_use: usize,
    /// Receive antenna `r`.
    pub antenna: usize,
}

/// The square `nR × nR` signal-space matrix of receiver 0 together with its
/// row/column bookkeeping. Rows are grouped by channel use (then antenna);
/// columns are the `M·|V|` desired columns followed by the interference
/// blocks of receivers `1 … N−1`, each ordered column-major with `R`
/// replicas per interference column.
#[derive(Clone, Debug)]
pub struct SignalSpaceMatrix {
    matrix: DMatrix<Complex64>,
    columns: Vec<ColumnSource>,
    rows: Vec<RowSource>,
}

impl SignalSpaceMatrix {
    /// The assembled matrix.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Column bookkeeping, in column order.
    pub fn columns(&self) -> &[ColumnSource] {
        &self.columns
    }

    /// Row bookkeeping, in row order.
    pub fn rows(&self) -> &[RowSource] {
        &self.rows
    }

    /// The desired-signal block (first `M·|V|` columns), as an owned
    /// tall matrix.
    pub fn desired_block(&self) -> DMatrix<Complex64> {
        let desired = self
            .columns
            .iter()
            .take_while(|c| matches!(c, ColumnSource::Desired { .. }))
            .count();
        self.matrix.columns(0, desired).into_owned()
    }
}

/// Assembles the signal-space matrix `[D | E]` of receiver 0 from one
/// channel realization and its bases.
pub fn assemble_signal_space(
    channels: &ExtendedChannels,
    bases: &CjBases,
) -> Result<SignalSpaceMatrix> {
    let (num_tx, num_rx, rx_antennas) =
        (channels.num_tx(), channels.num_rx(), channels.rx_antennas());
    if bases.signal.len() != num_rx || bases.interference.len() != num_rx {
        return Err(Error::DimensionMismatch(
            "bases do not cover every receiver of the channel realization".into(),
        ));
    }
    let n = channels.extension();
    let v_cols = bases.signal[0].len();
    let i_cols = bases.interference[0].len();
    for basis in bases.signal.iter().chain(&bases.interference) {
        if basis.matrix().nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "basis rows {} disagree with the channel extension {n}",
                basis.matrix().nrows()
            )));
        }
    }
    let total = n * rx_antennas;
    if num_tx * v_cols + rx_antennas * (num_rx - 1) * i_cols != total {
        return Err(Error::DimensionMismatch(format!(
            "column budget M|V| + R(N−1)|I| = {} does not equal nR = {total}; \
             was the extension planned with choose_extension_length?",
            num_tx * v_cols + rx_antennas * (num_rx - 1) * i_cols
        )));
    }

    let mut matrix = DMatrix::zeros(total, total);
    let mut columns = Vec::with_capacity(total);
    let rows: Vec<RowSource> = (0..n)
        .flat_map(|t| {
            (0..rx_antennas).map(move |antenna| RowSource {
                channel_use: t,
                antenna,
            })
        })
        .collect();

    // Desired block: at channel use t the R×M link matrix towards receiver
    // 0, Kronecker-scaled by the t-th row of V_0.
    let v0 = bases.signal[0].matrix();
    for tx in 0..num_tx {
        for column in 0..v_cols {
            let col_idx = columns.len();
            columns.push(ColumnSource::Desired { tx, column });
            for t in 0..n {
                for antenna in 0..rx_antennas {
                    matrix[(t * rx_antennas + antenna, col_idx)] =
                        channels.coefficient(0, tx, antenna, t) * v0[(t, column)];
                }
            }
        }
    }

    // Interference blocks: receiver l's basis column k enters once per
    // antenna replica, carrying the same scalar on each antenna row.
    for rx in 1..num_rx {
        let il = bases.interference[rx].matrix();
        for column in 0..i_cols {
            for replica in 0..rx_antennas {
                let col_idx = columns.len();
                columns.push(ColumnSource::Interference {
                    rx,
                    column,
                    replica,
                });
                for t in 0..n {
                    matrix[(t * rx_antennas + replica, col_idx)] = il[(t, column)];
                }
            }
        }
    }

    Ok(SignalSpaceMatrix {
        matrix,
        columns,
        rows,
    })
}

/// Verdict of a singular-value rank check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RankCertificate {
    /// True iff `σ_min / σ_max > tol`.
    pub full_rank: bool,
    /// Smallest singular value.
    pub sigma_min: f64,
    /// Largest singular value.
    pub sigma_max: f64,
}

impl RankCertificate {
    /// The certified ratio `σ_min / σ_max` (NaN for an all-zero matrix).
    pub fn ratio(&self) -> f64 {
        self.sigma_min / self.sigma_max
    }
}

fn ensure_finite(matrix: &DMatrix<Complex64>) -> Result<()> {
    for col in 0..matrix.ncols() {
        for row in 0..matrix.nrows() {
            let z = matrix[(row, col)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
    }
    Ok(())
}

/// Smallest and largest singular values of an arbitrary finite matrix.
pub fn singular_extremes(matrix: &DMatrix<Complex64>) -> Result<(f64, f64)> {
    ensure_finite(matrix)?;
    let sv = matrix.clone().svd(false, false).singular_values;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for &s in sv.iter() {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    Ok((lo, hi))
}

/// Certifies that a square matrix has full rank: `σ_min / σ_max > tol_rel`.
///
/// Rejects non-square matrices and non-finite entries.
pub fn rank_certificate(matrix: &DMatrix<Complex64>, tol_rel: f64) -> Result<RankCertificate> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::NotSquare {
            rows: matrix.nrows(),
            cols: matrix.ncols(),
        });
    }
    let (sigma_min, sigma_max) = singular_extremes(matrix)?;
    Ok(RankCertificate {
        full_rank: sigma_max > 0.0 && sigma_min > tol_rel * sigma_max,
        sigma_min,
        sigma_max,
    })
}

/// Outcome of the block-diagonal specialization check of the desired block.
#[derive(Clone, Debug, Serialize)]
pub struct Step1Report {
    /// Block edge length `|V|`.
    pub block_size: usize,
    /// True iff every entry outside the `M` diagonal blocks is exactly zero.
    pub block_diagonal: bool,
    /// Rank certificate of each diagonal block, transmitter by transmitter.
    pub blocks: Vec<RankCertificate>,
}

impl Step1Report {
    /// True when the specialization is block diagonal with all blocks of
    /// full rank.
    pub fn pass(&self) -> bool {
        self.block_diagonal && self.blocks.iter().all(|b| b.full_rank)
    }
}

/// Runs the desired-signal independence check: re-draws an independent
/// realization, zeroes the designated desired-channel coefficients so that
/// the truncated desired block must become block diagonal, and certifies
/// every `|V| × |V|` diagonal block.
///
/// Applies only when `R < M`; each transmitter's block survives on rows
/// `i·|V| … (i+1)·|V|−1` of the first `M·|V|/R` channel uses.
pub fn step1_specialization_check(
    channels: &ExtendedChannels,
    m: usize,
    tol_rel: f64,
) -> Result<Step1Report> {
    let (num_tx, rx_antennas) = (channels.num_tx(), channels.rx_antennas());
    if num_tx <= rx_antennas {
        return Err(Error::InvalidConfig(format!(
            "the specialization argument needs R < M, got M = {num_tx} ≤ R = {rx_antennas}"
        )));
    }
    let plan = choose_extension_length(num_tx, channels.num_rx(), rx_antennas, m)?;
    let uses = num_tx * plan.v_cols / rx_antennas;

    // The zero pattern only touches links towards receiver 0, which the
    // basis monomials never contain, so the basis of the specialized
    // realization is untouched by the zeroing itself.
    let specialized = channels
        .redraw(STEP1_REDRAW_TAG)
        .with_zeroed(|rx, tx, antenna, t| {
            let global_row = antenna * uses + t;
            rx == 0 && t < uses && !(tx * plan.v_cols..(tx + 1) * plan.v_cols).contains(&global_row)
        });
    let vbar = cj::build_beam_basis(&specialized, 0, m)?;

    // Truncated desired block, antenna-major rows: (r, t) ↦ H^{[0i]}_r(t)·V̄(t, c).
    let edge = num_tx * plan.v_cols;
    let mut dbar = DMatrix::zeros(edge, edge);
    for tx in 0..num_tx {
        for column in 0..plan.v_cols {
            for antenna in 0..rx_antennas {
                for t in 0..uses {
                    dbar[(antenna * uses + t, tx * plan.v_cols + column)] =
                        specialized.coefficient(0, tx, antenna, t) * vbar.matrix()[(t, column)];
                }
            }
        }
    }

    let mut block_diagonal = true;
    'outer: for row in 0..edge {
        for col in 0..edge {
            if row / plan.v_cols != col / plan.v_cols && dbar[(row, col)] != Complex64::ZERO {
                block_diagonal = false;
                break 'outer;
            }
        }
    }

    let mut blocks = Vec::with_capacity(num_tx);
    for tx in 0..num_tx {
        let block = dbar
            .view(
                (tx * plan.v_cols, tx * plan.v_cols),
                (plan.v_cols, plan.v_cols),
            )
            .into_owned();
        blocks.push(rank_certificate(&block, tol_rel)?);
    }
    Ok(Step1Report {
        block_size: plan.v_cols,
        block_diagonal,
        blocks,
    })
}

/// Rank verdict after appending one row/column block in the induction.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct InductionStep {
    /// Step index κ (1-based, as the blocks are appended).
    pub step: usize,
    /// Edge length of the matrix certified at this step.
    pub size: usize,
    /// Its rank certificate.
    pub certificate: RankCertificate,
}

/// The full induction trace: the truncated desired base followed by one
/// verdict per appended interference column group.
#[derive(Clone, Debug, Serialize)]
pub struct Step2Trace {
    /// Certificate of the `M|V| × M|V|` starting matrix.
    pub base: RankCertificate,
    /// One entry per appended block, κ = 1 … (N−1)·|I|.
    pub steps: Vec<InductionStep>,
}

impl Step2Trace {
    /// True when the base and every step certified full rank.
    pub fn pass(&self) -> bool {
        self.base.full_rank && self.steps.iter().all(|s| s.certificate.full_rank)
    }
}

/// Builds the signal-space matrix incrementally — starting from the
/// truncated desired block and appending `R` rows (one more channel use)
/// and `R` columns (one more interference column group) per step — and
/// certifies the rank at every step.
///
/// The incremental construction must finish exactly at the directly
/// assembled signal-space matrix (the row/column orders coincide by
/// construction, so the recorded permutation is the identity); any
/// disagreement is reported as [`Error::AssemblyMismatch`].
pub fn step2_induction_trace(
    channels: &ExtendedChannels,
    bases: &CjBases,
    tol_rel: f64,
) -> Result<Step2Trace> {
    let direct = assemble_signal_space(channels, bases)?;
    let (num_tx, num_rx, rx_antennas) =
        (channels.num_tx(), channels.num_rx(), channels.rx_antennas());
    let v_cols = bases.signal[0].len();
    let i_cols = bases.interference[0].len();
    let base_edge = num_tx * v_cols;
    let uses_base = base_edge / rx_antennas;
    let total_steps = (num_rx - 1) * i_cols;

    let v0 = bases.signal[0].matrix();
    // Desired entry at (use t, antenna r) for column (tx, c).
    let desired_entry = |t: usize, antenna: usize, tx: usize, c: usize| {
        channels.coefficient(0, tx, antenna, t) * v0[(t, c)]
    };
    // The interference receiver and basis column appended at step κ.
    let group = |step: usize| (1 + (step - 1) / i_cols, (step - 1) % i_cols);

    let mut g = DMatrix::zeros(base_edge, base_edge);
    for t in 0..uses_base {
        for antenna in 0..rx_antennas {
            for tx in 0..num_tx {
                for c in 0..v_cols {
                    g[(t * rx_antennas + antenna, tx * v_cols + c)] =
                        desired_entry(t, antenna, tx, c);
                }
            }
        }
    }
    let base = rank_certificate(&g, tol_rel)?;

    let mut steps = Vec::with_capacity(total_steps);
    for step in 1..=total_steps {
        let old_edge = g.nrows();
        let new_edge = old_edge + rx_antennas;
        let appended_use = uses_base + step - 1;
        let (rx, col) = group(step);
        let il = bases.interference[rx].matrix();

        let mut grown = DMatrix::zeros(new_edge, new_edge);
        grown.view_mut((0, 0), (old_edge, old_edge)).copy_from(&g);

        // New columns on the old rows: the appended interference column at
        // every earlier channel use, one replica per antenna.
        for t in 0..appended_use {
            for antenna in 0..rx_antennas {
                grown[(t * rx_antennas + antenna, old_edge + antenna)] = il[(t, col)];
            }
        }
        // New rows on the old columns: everything receiver 0 hears at the
        // appended channel use, restricted to the columns already present.
        for antenna in 0..rx_antennas {
            let row = old_edge + antenna;
            for tx in 0..num_tx {
                for c in 0..v_cols {
                    grown[(row, tx * v_cols + c)] = desired_entry(appended_use, antenna, tx, c);
                }
            }
            for earlier in 1..step {
                let (erx, ecol) = group(earlier);
                let column = base_edge + (earlier - 1) * rx_antennas + antenna;
                grown[(row, column)] = bases.interference[erx].matrix()[(appended_use, ecol)];
            }
            // Corner: the appended column at the appended use.
            grown[(row, old_edge + antenna)] = il[(appended_use, col)];
        }

        g = grown;
        steps.push(InductionStep {
            step,
            size: new_edge,
            certificate: rank_certificate(&g, tol_rel)?,
        });
    }

    if g != *direct.matrix() {
        return Err(Error::AssemblyMismatch(format!(
            "final induction matrix ({}×{}) differs from the direct assembly",
            g.nrows(),
            g.ncols()
        )));
    }
    Ok(Step2Trace { base, steps })
}

/// Aggregate one-realization separability report (the `separability`
/// subcommand's JSON payload).
#[derive(Clone, Debug, Serialize)]
pub struct SeparabilityReport {
    /// The SIMO configuration checked.
    pub config: NetworkConfig,
    /// Degree cap.
    pub m: usize,
    /// Extension length.
    pub n: usize,
    /// Basis/dimension bookkeeping.
    pub counts: ExtensionPlan,
    /// Smallest singular value of the signal-space matrix.
    pub sigma_min: f64,
    /// Largest singular value of the signal-space matrix.
    pub sigma_max: f64,
    /// Whether the rank certificate passed.
    pub pass: bool,
    /// Seed of the realization.
    pub seed: u64,
    /// Relative tolerance used.
    pub tol_rel: f64,
}

/// Draws one realization of `config` at degree `m` and certifies the rank
/// of its signal-space matrix.
pub fn verify(
    config: &NetworkConfig,
    m: usize,
    seed: u64,
    tol_rel: f64,
) -> Result<SeparabilityReport> {
    let rx_antennas = config.simo_rx_antennas()?;
    let plan = choose_extension_length(config.num_tx(), config.num_rx(), rx_antennas, m)?;
    let channels = ExtendedChannels::draw(config, plan.n, seed)?;
    let bases = build_bases(&channels, m)?;
    let f = assemble_signal_space(&channels, &bases)?;
    let cert = rank_certificate(f.matrix(), tol_rel)?;
    Ok(SeparabilityReport {
        config: config.clone(),
        m,
        n: plan.n,
        counts: plan,
        sigma_min: cert.sigma_min,
        sigma_max: cert.sigma_max,
        pass: cert.full_rank,
        seed,
        tol_rel,
    })
}
