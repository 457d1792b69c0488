//! Exact rational degrees-of-freedom calculators.
//!
//! Everything here is arbitrary-precision rational arithmetic — no floating
//! point touches a bound formula. Values serialize as `"p/q"` strings.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::separability::{self, extension_counts};
use crate::Result;

fn ratio(numer: u128, denom: u128) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

fn integer(value: u128) -> BigRational {
    BigRational::from_integer(BigInt::from(value))
}

/// Serializes a rational as its reduced `"p/q"` string (the denominator is
/// omitted when it is one).
pub mod rational_string {
    use num_rational::BigRational;
    use serde::Serializer;

    #[allow(clippy::missing_errors_doc)]
    pub fn serialize<S: Serializer>(value: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&value.to_string())
    }

    /// `Option`-valued variant for optional report fields.
    pub mod opt {
        use num_rational::BigRational;
        use serde::Serializer;

        #[allow(clippy::missing_errors_doc, clippy::ref_option)]
        pub fn serialize<S: Serializer>(
            value: &Option<BigRational>,
            s: S,
        ) -> Result<S::Ok, S::Error> {
            match value {
                Some(v) => s.serialize_some(&v.to_string()),
                None => s.serialize_none(),
            }
        }
    }
}

/// Sum-DoF outer bound of the `M × N` SIMO X network with `R` antennas per
/// receiver: `min(M, MNR / (M + NR − R))`. By reciprocity the same value
/// bounds the `N × M` MISO network.
pub fn outer_bound_simo(num_tx: u64, num_rx: u64, rx_antennas: u64) -> BigRational {
    let (m, n, r) = (num_tx as u128, num_rx as u128, rx_antennas as u128);
    integer(m).min(ratio(m * n * r, m + n * r - r))
}

/// Sum DoF of the `M × N` MIMO X network with `A` antennas at every node:
/// `A · MN / (M + N − 1)`.
pub fn mimo_x_dof(num_tx: u64, num_rx: u64, antennas: u64) -> BigRational {
    let (m, n, a) = (num_tx as u128, num_rx as u128, antennas as u128);
    ratio(a * m * n, m + n - 1)
}

/// Both sides of the spatial scale-invariance identity.
#[derive(Clone, Debug, Serialize)]
pub struct ScaleInvarianceCheck {
    /// DoF of the antenna-scaled network computed through transmitter-side
    /// decomposition: the `(A·M) × N` SIMO network with `A·R` antennas per
    /// receiver.
    #[serde(with = "rational_string")]
    pub decomposed: BigRational,
    /// `A` times the DoF of the base `(M, N, R)` network.
    #[serde(with = "rational_string")]
    pub scaled_base: BigRational,
    /// Exact rational equality of the two.
    pub equal: bool,
}

/// Checks that scaling every antenna count by `A` scales the DoF by `A`:
/// the decomposed `(AM, N, AR)` value must equal `A ·` the base value,
/// exactly.
pub fn scale_invariance_check(
    num_tx: u64,
    num_rx: u64,
    rx_antennas: u64,
    scale: u64,
) -> ScaleInvarianceCheck {
    let decomposed = outer_bound_simo(scale * num_tx, num_rx, scale * rx_antennas);
    let scaled_base = integer(scale as u128) * outer_bound_simo(num_tx, num_rx, rx_antennas);
    let equal = decomposed == scaled_base;
    ScaleInvarianceCheck {
        decomposed,
        scaled_base,
        equal,
    }
}

/// Sum DoF achieved by the degree-`m` construction: `N·M·|V| / n`, exact.
///
/// Requires an admissible `m` (see
/// [`separability::choose_extension_length`]); the value is monotone
/// nondecreasing along the admissible degrees and bounded by
/// `MNR / (M + NR − R)`.
pub fn achieved_fraction(
    num_tx: usize,
    num_rx: usize,
    rx_antennas: usize,
    m: usize,
) -> Result<BigRational> {
    let counts = extension_counts(num_tx, num_rx, rx_antennas, m)?;
    let streams = BigInt::from(counts.v_cols) * BigInt::from(num_tx * num_rx);
    Ok(BigRational::new(streams, BigInt::from(counts.n)))
}

/// The achieved value at one specific degree.
#[derive(Clone, Debug, Serialize)]
pub struct AchievedAtDegree {
    /// The degree cap used.
    pub m: usize,
    /// `N·M·|V| / n` at that degree.
    #[serde(with = "rational_string")]
    pub value: BigRational,
}

/// Bound/achievability summary for one network.
#[derive(Clone, Debug, Serialize)]
pub struct DofReport {
    /// Sum-DoF outer bound.
    #[serde(with = "rational_string")]
    pub outer_bound: BigRational,
    /// Sum DoF the construction reaches in the limit of large degree (the
    /// bound is tight, so this equals the outer bound; kept separate
    /// because the two are computed from different sides).
    #[serde(with = "rational_string")]
    pub achievable_limit: BigRational,
    /// Finite-degree achieved fraction, when a degree was requested and a
    /// beamforming construction exists (`M > R`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub achieved_at_m: Option<AchievedAtDegree>,
    /// True when `M ≤ R`: the single-user bound `M` applies and plain
    /// zero forcing achieves it, so no beamforming construction is built.
    pub zero_forcing_regime: bool,
}

/// Builds the report for a SIMO network, optionally evaluating the
/// finite-degree fraction at `m`.
pub fn dof_report_simo(
    num_tx: u64,
    num_rx: u64,
    rx_antennas: u64,
    m: Option<usize>,
) -> Result<DofReport> {
    let bound = outer_bound_simo(num_tx, num_rx, rx_antennas);
    let zero_forcing_regime = num_tx <= rx_antennas;
    let achieved_at_m = match m {
        Some(m) if !zero_forcing_regime => Some(AchievedAtDegree {
            m,
            value: achieved_fraction(num_tx as usize, num_rx as usize, rx_antennas as usize, m)?,
        }),
        _ => None,
    };
    Ok(DofReport {
        outer_bound: bound.clone(),
        achievable_limit: bound,
        achieved_at_m,
        zero_forcing_regime,
    })
}

/// Builds the report for a symmetric MIMO network with `A` antennas at
/// every node. Finite-degree fractions are evaluated on the transmitter-side
/// decomposed `(A·M) × N` SIMO network with `A·R = A` antennas per receiver.
pub fn dof_report_mimo(
    num_tx: u64,
    num_rx: u64,
    antennas: u64,
    m: Option<usize>,
) -> Result<DofReport> {
    let value = mimo_x_dof(num_tx, num_rx, antennas);
    debug_assert_eq!(value, outer_bound_simo(antennas * num_tx, num_rx, antennas));
    let zero_forcing_regime = num_tx == 1;
    let achieved_at_m = match m {
        Some(m) if !zero_forcing_regime => Some(AchievedAtDegree {
            m,
            value: achieved_fraction(
                (antennas * num_tx) as usize,
                num_rx as usize,
                antennas as usize,
                m,
            )?,
        }),
        _ => None,
    };
    Ok(DofReport {
        outer_bound: value.clone(),
        achievable_limit: value,
        achieved_at_m,
        zero_forcing_regime,
    })
}

/// The achieved fractions at the first `count` admissible degrees.
pub fn achieved_fraction_trend(
    num_tx: usize,
    num_rx: usize,
    rx_antennas: usize,
    count: usize,
) -> Result<Vec<AchievedAtDegree>> {
    separability::admissible_degrees(num_tx, num_rx, rx_antennas)
        .take(count)
        .map(|m| {
            Ok(AchievedAtDegree {
                m,
                value: achieved_fraction(num_tx, num_rx, rx_antennas, m)?,
            })
        })
        .collect()
}

/// `true` when the sandwich `achieved ≤ limit ≤ outer` holds; exposed for
/// report validation.
pub fn report_is_consistent(report: &DofReport) -> bool {
    let achieved_ok = report
        .achieved_at_m
        .as_ref()
        .is_none_or(|a| a.value <= report.achievable_limit);
    achieved_ok && report.achievable_limit <= report.outer_bound
}
