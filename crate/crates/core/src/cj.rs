//! Monomial beamforming bases over symbol extensions.
//!
//! Each transmitter precodes the symbols intended for receiver `j` along a
//! common basis `V_j` whose columns are products of the interference-carrying
//! diagonal channel matrices, raised to bounded positive exponents and applied
//! to the all-ones vector. Multiplying any basis column by one more
//! interference-carrying channel just increments one exponent, so the image
//! lands exactly on a column of the degree-(m+1) interference basis `I_j`.
//! That containment is verified symbolically here — by exponent bookkeeping,
//! not by numeric subspace distance.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use num_bigint::BigUint;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::network::{ExtendedChannels, NetworkConfig};
use crate::{Error, Result};

/// Hard cap on basis columns; larger requests are rejected with the
/// estimate instead of exhausting memory.
const MAX_BASIS_COLUMNS: usize = 1 << 22;

/// Largest exponent budget that keeps evaluated column magnitudes inside
/// double range: `cap · |log2 h_max| ≤ 900`.
const MAX_MAGNITUDE_EXPONENT: f64 = 900.0;

/// Exact binomial coefficient as a big integer.
pub(crate) fn binomial(n: usize, k: usize) -> BigUint {
    num_integer::binomial(BigUint::from(n), BigUint::from(k))
}

/// A product of the relabeled interference channels `T_1 … T_L` with
/// positive exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial {
    exponents: Vec<u32>,
}

impl Monomial {
    /// The exponent vector (every entry ≥ 1).
    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    /// Total degree `Σ α_k`.
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// The monomial with the exponent of variable `k` incremented — the
    /// image of this column under channel `T_k`.
    pub fn bumped(&self, k: usize) -> Monomial {
        let mut exponents = self.exponents.clone();
        exponents[k] += 1;
        Monomial { exponents }
    }

    fn lex_cmp(&self, other: &Self) -> Ordering {
        self.exponents.cmp(&other.exponents)
    }
}

impl std::fmt::Display for Monomial {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, &e) in self.exponents.iter().enumerate() {
            write!(f, "T{}", k + 1)?;
            if e > 1 {
                write!(f, "^{e}")?;
            }
        }
        Ok(())
    }
}

/// The lexicographically ordered set of all monomials in `arity` variables
/// with every exponent ≥ 1 and total degree ≤ `cap`.
///
/// Contains exactly `C(cap, arity)` monomials; empty (and flagged so by
/// [`MonomialBasis::is_empty`]) when `cap < arity`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialBasis {
    arity: usize,
    cap: usize,
    monomials: Vec<Monomial>,
}

impl MonomialBasis {
    /// Number of variables `L`.
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Degree cap (`m` for signal bases, `m+1` for interference bases).
    pub fn cap(&self) -> usize {
        self.cap
    }

    /// The ordered monomials.
    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Number of monomials.
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    /// True for the degenerate `cap < arity` case.
    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    /// Position of an exponent vector, if it belongs to the basis.
    ///
    /// Binary search over the lexicographic order.
    pub fn index_of(&self, monomial: &Monomial) -> Option<usize> {
        self.monomials
            .binary_search_by(|probe| probe.lex_cmp(monomial))
            .ok()
    }
}

/// Enumerates the monomial basis for `arity` variables under degree cap
/// `cap`, in lexicographic order of exponent vectors (a monomial precedes
/// another iff its exponent is smaller at the first index where they
/// differ).
pub fn enumerate_monomials(arity: usize, cap: usize) -> MonomialBasis {
    fn extend(prefix: &mut Vec<u32>, slots: usize, budget: u32, out: &mut Vec<Monomial>) {
        if slots == 0 {
            out.push(Monomial {
                exponents: prefix.clone(),
            });
            return;
        }
        // Every remaining slot still needs an exponent of at least one.
        let max_here = budget - (slots as u32 - 1);
        for e in 1..=max_here {
            prefix.push(e);
            extend(prefix, slots - 1, budget - e, out);
            prefix.pop();
        }
    }

    let mut monomials = Vec::new();
    if arity > 0 && cap >= arity {
        extend(
            &mut Vec::with_capacity(arity),
            arity,
            cap as u32,
            &mut monomials,
        );
    }
    MonomialBasis {
        arity,
        cap,
        monomials,
    }
}

/// Identifies one interference-carrying channel `H^{[li]}_r`: the link from
/// transmitter `tx` to antenna `antenna` of receiver `rx`. All indices are
/// 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelLabel {
    /// Receiver `l`.
    pub rx: usize,
    /// Transmitter `i`.
    pub tx: usize,
    /// Receive antenna `r`.
    pub antenna: usize,
}

/// The interference-carrying channels of a SIMO network as seen from
/// `served` — every (receiver ≠ served, transmitter, antenna) triple, in the
/// fixed global order `rx`, then `tx`, then `antenna`. The list has
/// `L = M·R·(N−1)` entries.
///
/// Requires a SIMO configuration with more transmitters than receive
/// antennas (`M > R`); otherwise zero forcing applies and no beamforming
/// basis is built.
pub fn interference_channel_labels(
    config: &NetworkConfig,
    served: usize,
) -> Result<Vec<ChannelLabel>> {
    let rx_antennas = config.simo_rx_antennas()?;
    if config.num_tx() <= rx_antennas {
        return Err(Error::InvalidConfig(format!(
            "the beamforming construction needs M > R, got M = {} ≤ R = {}",
            config.num_tx(),
            rx_antennas
        )));
    }
    if served >= config.num_rx() {
        return Err(Error::InvalidConfig(format!(
            "served receiver {served} out of range (N = {})",
            config.num_rx()
        )));
    }
    let mut labels = Vec::with_capacity(config.num_tx() * rx_antennas * (config.num_rx() - 1));
    for rx in (0..config.num_rx()).filter(|&l| l != served) {
        for tx in 0..config.num_tx() {
            for antenna in 0..rx_antennas {
                labels.push(ChannelLabel { rx, tx, antenna });
            }
        }
    }
    Ok(labels)
}

/// A beamforming (or interference) basis: the evaluated `n × |basis|`
/// matrix together with the monomial bookkeeping that produced it.
#[derive(Clone, Debug)]
pub struct BeamBasis {
    served: usize,
    labels: Vec<ChannelLabel>,
    basis: MonomialBasis,
    matrix: DMatrix<Complex64>,
}

impl BeamBasis {
    /// The receiver this basis precodes for.
    pub fn served_receiver(&self) -> usize {
        self.served
    }

    /// The relabeled channels `T_1 … T_L` in their global order.
    pub fn labels(&self) -> &[ChannelLabel] {
        &self.labels
    }

    /// The monomial bookkeeping.
    pub fn basis(&self) -> &MonomialBasis {
        &self.basis
    }

    /// The evaluated `n × |basis|` column matrix.
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Number of columns.
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    /// True when the degree cap was below the variable count.
    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// JSON descriptor of the basis bookkeeping (no column data).
    pub fn descriptor(&self) -> serde_json::Value {
        serde_json::json!({
            "L": self.basis.arity(),
            "cap": self.basis.cap(),
            "served": self.served,
            "labels": self.labels.iter().map(|l| [l.rx, l.tx, l.antenna]).collect::<Vec<_>>(),
            "exponent_rows": self.basis.monomials().iter().map(Monomial::exponents).collect::<Vec<_>>(),
        })
    }

    /// Raw column data as row-major little-endian complex doubles, for
    /// cross-checking against other implementations.
    pub fn column_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(self.matrix.len() * 16);
        for row in 0..self.matrix.nrows() {
            for col in 0..self.matrix.ncols() {
                let z = self.matrix[(row, col)];
                bytes.extend_from_slice(&z.re.to_le_bytes());
                bytes.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        bytes
    }
}

fn build_basis_with_cap(
    channels: &ExtendedChannels,
    served: usize,
    cap: usize,
) -> Result<BeamBasis> {
    let config = NetworkConfig::simo(channels.num_tx(), channels.num_rx(), channels.rx_antennas())
        .expect("channel dimensions are valid");
    let labels = interference_channel_labels(&config, served)?;

    let (_, h_max) = channels.magnitude_bounds();
    let spread = h_max.log2().abs().max(1.0);
    if cap as f64 * spread > MAX_MAGNITUDE_EXPONENT {
        return Err(Error::DegreeOutOfRange {
            cap,
            reason: format!(
                "evaluated magnitudes reach 2^{:.0}, beyond double precision",
                cap as f64 * spread
            ),
        });
    }
    let count = binomial(cap, labels.len());
    if count > BigUint::from(MAX_BASIS_COLUMNS) {
        return Err(Error::DegreeOutOfRange {
            cap,
            reason: format!(
                "basis would have C({cap},{}) = {count} columns",
                labels.len()
            ),
        });
    }

    let basis = enumerate_monomials(labels.len(), cap);
    let n = channels.extension();
    let mut matrix = DMatrix::zeros(n, basis.len());
    for (col, monomial) in basis.monomials().iter().enumerate() {
        for t in 0..n {
            let mut product = Complex64::ONE;
            for (label, &exponent) in labels.iter().zip(monomial.exponents()) {
                product *= channels
                    .coefficient(label.rx, label.tx, label.antenna, t)
                    .powu(exponent);
            }
            matrix[(t, col)] = product;
        }
    }
    Ok(BeamBasis {
        served,
        labels,
        basis,
        matrix,
    })
}

/// Builds the signal basis `V_j` (degree cap `m`) for `served`.
pub fn build_beam_basis(channels: &ExtendedChannels, served: usize, m: usize) -> Result<BeamBasis> {
    build_basis_with_cap(channels, served, m)
}

/// Builds the interference basis `I_j` (degree cap `m + 1`) for `served`.
pub fn build_interference_basis(
    channels: &ExtendedChannels,
    served: usize,
    m: usize,
) -> Result<BeamBasis> {
    build_basis_with_cap(channels, served, m + 1)
}

/// One failed containment check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AlignmentMiss {
    /// The channel whose image fell outside the interference basis.
    pub channel: ChannelLabel,
    /// The signal-basis column that was multiplied.
    pub column: usize,
}

/// Outcome of checking every interference-channel image of every signal
/// column against the interference basis.
#[derive(Clone, Debug, Serialize)]
pub struct AlignmentReport {
    /// Number of (channel, column) pairs checked.
    pub checks: usize,
    /// Pairs whose image was not a column of the interference basis.
    pub misses: Vec<AlignmentMiss>,
}

impl AlignmentReport {
    /// True when every image was located.
    pub fn pass(&self) -> bool {
        self.misses.is_empty()
    }
}

/// Locates the column of `interference` that equals `channel · (column of
/// signal)`, by exponent bookkeeping. Returns `None` when the channel is
/// not an interference carrier of the basis (e.g. a desired channel with
/// `rx == served`) or when the bumped exponent vector is not present.
pub fn locate_image(
    signal: &BeamBasis,
    interference: &BeamBasis,
    channel: ChannelLabel,
    column: usize,
) -> Option<usize> {
    let k = signal.labels().iter().position(|&l| l == channel)?;
    let bumped = signal.basis().monomials()[column].bumped(k);
    interference.basis().index_of(&bumped)
}

/// Verifies the alignment conditions for a (signal, interference) basis
/// pair: for every interference-carrying channel `T` and every column `v`
/// of the signal basis, `T·v` must be exactly a column of the interference
/// basis.
///
/// The check is symbolic — multiplying a column by `T_k` increments one
/// exponent, so it reduces to an index lookup — and therefore exact.
pub fn verify_alignment(signal: &BeamBasis, interference: &BeamBasis) -> Result<AlignmentReport> {
    if signal.served != interference.served
        || signal.labels != interference.labels
        || signal.basis.cap() + 1 != interference.basis.cap()
        || signal.matrix.nrows() != interference.matrix.nrows()
    {
        return Err(Error::DimensionMismatch(
            "signal and interference bases were not built from the same channels and degree".into(),
        ));
    }
    let mut misses = Vec::new();
    let mut checks = 0;
    for (k, &channel) in signal.labels.iter().enumerate() {
        for column in 0..signal.len() {
            checks += 1;
            let bumped = signal.basis.monomials()[column].bumped(k);
            if interference.basis.index_of(&bumped).is_none() {
                misses.push(AlignmentMiss { channel, column });
            }
        }
    }
    Ok(AlignmentReport { checks, misses })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkConfig;

    /// Independent enumeration oracle: filter the full exponent cube.
    fn brute_force(arity: usize, cap: usize) -> Vec<Vec<u32>> {
        let mut all = vec![vec![]];
        for _ in 0..arity {
            let mut next = Vec::new();
            for prefix in &all {
                for e in 1..=cap as u32 {
                    let mut grown = prefix.clone();
                    grown.push(e);
                    next.push(grown);
                }
            }
            all = next;
        }
        let mut kept: Vec<Vec<u32>> = all
            .into_iter()
            .filter(|v| v.iter().sum::<u32>() <= cap as u32)
            .collect();
        kept.sort();
        kept
    }

    #[test]
    fn matches_the_displayed_degree_five_matrix() {
        // T1T2T3, T1T2T3², T1T2T3³, T1T2²T3, T1T2²T3², T1T2³T3,
        // T1²T2T3, T1²T2T3², T1²T2²T3, T1³T2T3.
        let expected: Vec<Vec<u32>> = vec![
            vec![1, 1, 1],
            vec![1, 1, 2],
            vec![1, 1, 3],
            vec![1, 2, 1],
            vec![1, 2, 2],
            vec![1, 3, 1],
            vec![2, 1, 1],
            vec![2, 1, 2],
            vec![2, 2, 1],
            vec![3, 1, 1],
        ];
        let basis = enumerate_monomials(3, 5);
        let got: Vec<Vec<u32>> = basis
            .monomials()
            .iter()
            .map(|m| m.exponents().to_vec())
            .collect();
        assert_eq!(got, expected);
        assert_eq!(basis.monomials()[0].to_string(), "T1T2T3");
        assert_eq!(basis.monomials()[9].to_string(), "T1^3T2T3");
    }

    #[test]
    fn smallest_and_degenerate_cases() {
        let single = enumerate_monomials(1, 1);
        assert_eq!(single.len(), 1);
        assert_eq!(single.monomials()[0].exponents(), &[1]);

        assert!(enumerate_monomials(3, 2).is_empty());
        assert!(enumerate_monomials(0, 4).is_empty());
    }

    #[test]
    fn enumeration_agrees_with_brute_force() {
        let basis = enumerate_monomials(2, 4);
        let got: Vec<Vec<u32>> = basis
            .monomials()
            .iter()
            .map(|m| m.exponents().to_vec())
            .collect();
        assert_eq!(
            got,
            vec![
                vec![1, 1],
                vec![1, 2],
                vec![1, 3],
                vec![2, 1],
                vec![2, 2],
                vec![3, 1]
            ]
        );

        for arity in 1..=3 {
            for cap in 1..=7 {
                let basis = enumerate_monomials(arity, cap);
                let got: Vec<Vec<u32>> = basis
                    .monomials()
                    .iter()
                    .map(|m| m.exponents().to_vec())
                    .collect();
                assert_eq!(got, brute_force(arity, cap), "arity {arity} cap {cap}");
                assert_eq!(
                    BigUint::from(basis.len()),
                    binomial(cap, arity),
                    "count must be C(cap, arity)"
                );
            }
        }
    }

    #[test]
    fn lex_order_matches_first_difference_rule() {
        let basis = enumerate_monomials(3, 6);
        let monomials = basis.monomials();
        for a in 0..monomials.len() {
            for b in 0..monomials.len() {
                let first_diff = monomials[a]
                    .exponents()
                    .iter()
                    .zip(monomials[b].exponents())
                    .find(|(x, y)| x != y);
                let expected = match first_diff {
                    None => a == b,
                    Some((x, y)) => (x < y) == (a < b),
                };
                assert!(expected, "order violates the first-difference rule");
            }
        }
    }

    #[test]
    fn signal_to_interference_count_ratio_is_exact() {
        // |V|·(m+1) == |I|·(m+1−L), i.e. |V|/|I| = (m+1−L)/(m+1).
        for arity in 1..=4usize {
            for m in arity..=12 {
                let v = binomial(m, arity);
                let i = binomial(m + 1, arity);
                assert_eq!(
                    v.clone() * BigUint::from(m + 1),
                    i * BigUint::from(m + 1 - arity)
                );
            }
        }
    }

    #[test]
    fn labels_cover_all_interference_carriers_in_order() {
        let config = NetworkConfig::simo(3, 2, 1).unwrap();
        let labels = interference_channel_labels(&config, 0).unwrap();
        assert_eq!(labels.len(), 3);
        assert!(labels.iter().all(|l| l.rx == 1));
        assert_eq!(
            labels.iter().map(|l| l.tx).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );

        let config = NetworkConfig::simo(6, 3, 2).unwrap();
        assert_eq!(interference_channel_labels(&config, 0).unwrap().len(), 24);

        let config = NetworkConfig::simo(2, 3, 1).unwrap();
        let labels = interference_channel_labels(&config, 1).unwrap();
        assert_eq!(labels.len(), 4);
        assert_eq!(
            labels.iter().map(|l| l.rx).collect::<Vec<_>>(),
            vec![0, 0, 2, 2]
        );

        // Zero-forcing regime is rejected.
        let config = NetworkConfig::simo(2, 2, 2).unwrap();
        assert!(interference_channel_labels(&config, 0).is_err());
    }

    #[test]
    fn beam_basis_columns_are_evaluated_monomials() {
        let config = NetworkConfig::simo(2, 2, 1).unwrap();
        let channels = ExtendedChannels::draw(&config, 5, 11).unwrap();
        let basis = build_beam_basis(&channels, 0, 2).unwrap();
        // L = 2, so |V| = C(2,2) = 1 and the single monomial is T1·T2 with
        // T1 = H^{[10]}_0, T2 = H^{[11]}_0 (0-based, interference rx 1).
        assert_eq!(basis.len(), 1);
        for t in 0..5 {
            let expected = channels.coefficient(1, 0, 0, t) * channels.coefficient(1, 1, 0, t);
            assert_eq!(basis.matrix()[(t, 0)], expected);
        }

        let interference = build_interference_basis(&channels, 0, 2).unwrap();
        assert_eq!(interference.len(), 3);
    }

    #[test]
    fn unit_channels_give_all_ones_columns() {
        let channels = ExtendedChannels::from_fn(3, 2, 1, 4, |_, _, _, _| Complex64::ONE);
        let basis = build_beam_basis(&channels, 0, 4).unwrap();
        assert!(!basis.is_empty());
        assert!(basis.matrix().iter().all(|&z| z == Complex64::ONE));
    }

    #[test]
    fn alignment_containment_holds_and_is_counted() {
        let config = NetworkConfig::simo(3, 2, 1).unwrap();
        let channels = ExtendedChannels::draw(&config, 7, 3).unwrap();
        let signal = build_beam_basis(&channels, 0, 3).unwrap();
        let interference = build_interference_basis(&channels, 0, 3).unwrap();
        let report = verify_alignment(&signal, &interference).unwrap();
        assert!(report.pass());
        assert_eq!(report.checks, 3); // L·|V| = 3·1

        let config = NetworkConfig::simo(2, 3, 1).unwrap();
        let channels = ExtendedChannels::draw(&config, 12, 3).unwrap();
        let signal = build_beam_basis(&channels, 1, 4).unwrap();
        let interference = build_interference_basis(&channels, 1, 4).unwrap();
        let report = verify_alignment(&signal, &interference).unwrap();
        assert!(report.pass());
        assert_eq!(report.checks, 4); // L·|V| = 4·1
    }

    #[test]
    fn desired_channel_images_are_not_in_the_interference_book() {
        let config = NetworkConfig::simo(2, 2, 1).unwrap();
        let channels = ExtendedChannels::draw(&config, 5, 11).unwrap();
        let signal = build_beam_basis(&channels, 0, 3).unwrap();
        let interference = build_interference_basis(&channels, 0, 3).unwrap();

        // A channel towards the served receiver is not an interference
        // carrier; its image has no exponent-vector representation.
        let desired = ChannelLabel {
            rx: 0,
            tx: 0,
            antenna: 0,
        };
        assert_eq!(locate_image(&signal, &interference, desired, 0), None);

        // Whereas every true interference carrier lands inside.
        for &label in signal.labels() {
            for column in 0..signal.len() {
                assert!(locate_image(&signal, &interference, label, column).is_some());
            }
        }
    }

    #[test]
    fn mismatched_bases_are_rejected() {
        let config = NetworkConfig::simo(2, 2, 1).unwrap();
        let channels = ExtendedChannels::draw(&config, 5, 11).unwrap();
        let signal = build_beam_basis(&channels, 0, 2).unwrap();
        let wrong_degree = build_interference_basis(&channels, 0, 3).unwrap();
        assert!(verify_alignment(&signal, &wrong_degree).is_err());
        let wrong_receiver = build_interference_basis(&channels, 1, 2).unwrap();
        assert!(verify_alignment(&signal, &wrong_receiver).is_err());
    }

    #[test]
    fn oversized_degree_requests_are_rejected_with_estimates() {
        let config = NetworkConfig::simo(2, 2, 1).unwrap();
        let channels = ExtendedChannels::draw(&config, 5, 11).unwrap();
        let err = build_beam_basis(&channels, 0, 2000).unwrap_err();
        assert!(matches!(err, Error::DegreeOutOfRange { .. }));

        let config = NetworkConfig::simo(8, 4, 1).unwrap(); // L = 24
        let channels = ExtendedChannels::draw(&config, 5, 11).unwrap();
        let err = build_beam_basis(&channels, 0, 80).unwrap_err();
        match err {
            Error::DegreeOutOfRange { reason, .. } => {
                assert!(reason.contains("columns"), "got: {reason}")
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn descriptor_and_column_dump_shapes() {
        let config = NetworkConfig::simo(2, 2, 1).unwrap();
        let channels = ExtendedChannels::draw(&config, 5, 11).unwrap();
        let basis = build_beam_basis(&channels, 0, 3).unwrap();
        let descriptor = basis.descriptor();
        assert_eq!(descriptor["L"], 2);
        assert_eq!(descriptor["cap"], 3);
        assert_eq!(
            descriptor["exponent_rows"].as_array().unwrap().len(),
            basis.len()
        );
        assert_eq!(basis.column_bytes().len(), 5 * basis.len() * 16);
    }
}
