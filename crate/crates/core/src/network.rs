//! X-network configurations and generic channel draws.
//!
//! The noiseless signal-space abstraction used throughout the crate: a
//! network is just node counts plus per-node antenna counts, and a channel
//! realization is a seeded draw of complex coefficients. Two kinds of draws
//! exist — dense spatial channels (one `B_j × A_i` matrix per link, used by
//! the no-extension feasibility study) and diagonal symbol-extended channels
//! (one coefficient per channel use, used by the monomial beamforming
//! construction).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

/// Smallest magnitude a drawn channel coefficient may have.
pub const H_MIN: f64 = 0.5;
/// Largest magnitude a drawn channel coefficient may have.
pub const H_MAX: f64 = 2.0;

/// Node counts above this are rejected; keeps stream counters collision-free.
const MAX_NODES: usize = 1 << 20;

#[derive(Serialize, Deserialize)]
struct RawConfig {
    #[serde(rename = "M")]
    num_tx: usize,
    #[serde(rename = "N")]
    num_rx: usize,
    tx_antennas: Vec<usize>,
    rx_antennas: Vec<usize>,
}

/// An `M × N` X-network configuration: `M` transmitters with antenna counts
/// `A_i`, `N` receivers with antenna counts `B_j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct NetworkConfig {
    tx_antennas: Vec<usize>,
    rx_antennas: Vec<usize>,
}

impl NetworkConfig {
    /// Builds a configuration from per-node antenna counts.
    pub fn new(tx_antennas: Vec<usize>, rx_antennas: Vec<usize>) -> Result<Self> {
        if tx_antennas.is_empty() || rx_antennas.is_empty() {
            return Err(Error::InvalidConfig(
                "need at least one transmitter and one receiver".into(),
            ));
        }
        if tx_antennas.len() > MAX_NODES || rx_antennas.len() > MAX_NODES {
            return Err(Error::InvalidConfig(format!(
                "node counts are limited to {MAX_NODES}"
            )));
        }
        for (i, &a) in tx_antennas.iter().enumerate() {
            if a == 0 {
                return Err(Error::InvalidConfig(format!(
                    "transmitter {i} has zero antennas"
                )));
            }
        }
        for (j, &b) in rx_antennas.iter().enumerate() {
            if b == 0 {
                return Err(Error::InvalidConfig(format!(
                    "receiver {j} has zero antennas"
                )));
            }
        }
        Ok(Self {
            tx_antennas,
            rx_antennas,
        })
    }

    /// SIMO network: `num_tx` single-antenna transmitters, `num_rx` receivers
    /// with `rx_antennas` antennas each.
    pub fn simo(num_tx: usize, num_rx: usize, rx_antennas: usize) -> Result<Self> {
        Self::new(vec![1; num_tx], vec![rx_antennas; num_rx])
    }

    /// Fully symmetric network: `antennas` at every node.
    pub fn symmetric(num_tx: usize, num_rx: usize, antennas: usize) -> Result<Self> {
        Self::new(vec![antennas; num_tx], vec![antennas; num_rx])
    }

    /// Transmitter count `M`.
    pub fn num_tx(&self) -> usize {
        self.tx_antennas.len()
    }

    /// Receiver count `N`.
    pub fn num_rx(&self) -> usize {
        self.rx_antennas.len()
    }

    /// Antenna count of transmitter `i`.
    pub fn tx_antennas(&self, i: usize) -> usize {
        self.tx_antennas[i]
    }

    /// Antenna count of receiver `j`.
    pub fn rx_antennas(&self, j: usize) -> usize {
        self.rx_antennas[j]
    }

    /// All transmitter antenna counts.
    pub fn tx_antenna_counts(&self) -> &[usize] {
        &self.tx_antennas
    }

    /// All receiver antenna counts.
    pub fn rx_antenna_counts(&self) -> &[usize] {
        &self.rx_antennas
    }

    /// `Some(A)` when every node (both sides) has the same antenna count `A`.
    pub fn symmetric_antennas(&self) -> Option<usize> {
        let a = self.tx_antennas[0];
        let all = self.tx_antennas.iter().chain(&self.rx_antennas);
        all.clone().all(|&x| x == a).then_some(a)
    }

    /// Common receiver antenna count, if all receivers agree.
    pub fn uniform_rx_antennas(&self) -> Option<usize> {
        let r = self.rx_antennas[0];
        self.rx_antennas.iter().all(|&x| x == r).then_some(r)
    }

    /// Validates the SIMO restriction (`A_i = 1` for every transmitter and a
    /// common receiver antenna count) and returns that count `R`.
    pub fn simo_rx_antennas(&self) -> Result<usize> {
        if let Some((i, &a)) = self.tx_antennas.iter().enumerate().find(|(_, &a)| a != 1) {
            return Err(Error::NotSimo {
                transmitter: i,
                antennas: a,
            });
        }
        self.uniform_rx_antennas().ok_or_else(|| {
            Error::InvalidConfig("SIMO draw requires equal antenna counts at all receivers".into())
        })
    }

    /// The reciprocal network: roles of transmitters and receivers swapped.
    ///
    /// An involution: `c.reciprocal().reciprocal() == c`.
    pub fn reciprocal(&self) -> Self {
        Self {
            tx_antennas: self.rx_antennas.clone(),
            rx_antennas: self.tx_antennas.clone(),
        }
    }

    /// Transmitter-side decomposition: every transmitter is viewed as
    /// `split` independent nodes sharing its antennas equally, so a
    /// transmitter with `A_i` antennas becomes `split` transmitters with
    /// `A_i / split` antennas each. Receivers are untouched, and the total
    /// transmit antenna count is preserved.
    ///
    /// The canonical use splits each `A`-antenna transmitter of a symmetric
    /// network into `A` single-antenna nodes.
    pub fn decompose_transmitters(&self, split: usize) -> Result<Self> {
        if split == 0 {
            return Err(Error::InvalidConfig("split factor must be positive".into()));
        }
        let mut tx = Vec::with_capacity(self.num_tx() * split);
        for (i, &a) in self.tx_antennas.iter().enumerate() {
            if a % split != 0 {
                return Err(Error::IndivisibleSplit {
                    transmitter: i,
                    antennas: a,
                    split,
                });
            }
            tx.extend(std::iter::repeat_n(a / split, split));
        }
        Self::new(tx, self.rx_antennas.clone())
    }
}

impl TryFrom<RawConfig> for NetworkConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        if raw.num_tx != raw.tx_antennas.len() || raw.num_rx != raw.rx_antennas.len() {
            return Err(Error::InvalidConfig(format!(
                "M={} and N={} disagree with antenna lists of length {} and {}",
                raw.num_tx,
                raw.num_rx,
                raw.tx_antennas.len(),
                raw.rx_antennas.len()
            )));
        }
        Self::new(raw.tx_antennas, raw.rx_antennas)
    }
}

impl From<NetworkConfig> for RawConfig {
    fn from(config: NetworkConfig) -> Self {
        RawConfig {
            num_tx: config.num_tx(),
            num_rx: config.num_rx(),
            tx_antennas: config.tx_antennas,
            rx_antennas: config.rx_antennas,
        }
    }
}

impl std::fmt::Display for NetworkConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}x{} X network (tx antennas {:?}, rx antennas {:?})",
            self.num_tx(),
            self.num_rx(),
            self.tx_antennas,
            self.rx_antennas
        )
    }
}

/// Diagonal symbol-extended channels of a SIMO network.
///
/// One complex coefficient per (receiver `j`, transmitter `i`, receive
/// antenna `r`, channel use `t`). The `n × n` channel matrix of a link is
/// diagonal with these coefficients; it is applied as an elementwise row
/// scaling and never materialized dense.
#[derive(Clone, Debug)]
pub struct ExtendedChannels {
    num_tx: usize,
    num_rx: usize,
    rx_antennas: usize,
    extension: usize,
    seed: u64,
    magnitude_bounds: (f64, f64),
    coeffs: Vec<Complex64>,
}

impl ExtendedChannels {
    /// Draws an `n`-fold symbol extension of `config` (SIMO only).
    ///
    /// Coefficients are i.i.d. with magnitude uniform on
    /// [[`H_MIN`], [`H_MAX`]] and uniform phase, drawn from one ChaCha
    /// stream per (j, i, r) so the realization is stable under growing the
    /// network or the extension.
    pub fn draw(config: &NetworkConfig, extension: usize, seed: u64) -> Result<Self> {
        let rx_antennas = config.simo_rx_antennas()?;
        if extension == 0 {
            return Err(Error::InvalidConfig(
                "symbol-extension length must be positive".into(),
            ));
        }
        let (num_tx, num_rx) = (config.num_tx(), config.num_rx());
        let mut coeffs = Vec::with_capacity(num_tx * num_rx * rx_antennas * extension);
        for rx in 0..num_rx {
            for tx in 0..num_tx {
                for antenna in 0..rx_antennas {
                    let mut rng = rng::stream_rng(seed, rng::channel_stream(rx, tx, antenna));
                    for _ in 0..extension {
                        coeffs.push(rng::polar_coefficient(&mut rng, H_MIN, H_MAX));
                    }
                }
            }
        }
        Ok(Self {
            num_tx,
            num_rx,
            rx_antennas,
            extension,
            seed,
            magnitude_bounds: (H_MIN, H_MAX),
            coeffs,
        })
    }

    /// Builds channels from an explicit coefficient function (used by tests
    /// and by specialized proof-device realizations).
    pub fn from_fn<F>(
        num_tx: usize,
        num_rx: usize,
        rx_antennas: usize,
        extension: usize,
        mut f: F,
    ) -> Self
    where
        F: FnMut(usize, usize, usize, usize) -> Complex64,
    {
        let mut coeffs = Vec::with_capacity(num_tx * num_rx * rx_antennas * extension);
        for rx in 0..num_rx {
            for tx in 0..num_tx {
                for antenna in 0..rx_antennas {
                    for t in 0..extension {
                        coeffs.push(f(rx, tx, antenna, t));
                    }
                }
            }
        }
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for c in &coeffs {
            lo = lo.min(c.norm());
            hi = hi.max(c.norm());
        }
        Self {
            num_tx,
            num_rx,
            rx_antennas,
            extension,
            seed: 0,
            magnitude_bounds: (lo, hi),
            coeffs,
        }
    }

    /// The coefficient of link (rx `j`, tx `i`) at antenna `r`, use `t`.
    pub fn coefficient(&self, rx: usize, tx: usize, antenna: usize, t: usize) -> Complex64 {
        debug_assert!(rx < self.num_rx && tx < self.num_tx);
        debug_assert!(antenna < self.rx_antennas && t < self.extension);
        let idx = ((rx * self.num_tx + tx) * self.rx_antennas + antenna) * self.extension + t;
        self.coeffs[idx]
    }

    /// Transmitter count.
    pub fn num_tx(&self) -> usize {
        self.num_tx
    }

    /// Receiver count.
    pub fn num_rx(&self) -> usize {
        self.num_rx
    }

    /// Antennas per receiver (`R`).
    pub fn rx_antennas(&self) -> usize {
        self.rx_antennas
    }

    /// Symbol-extension length (`n`).
    pub fn extension(&self) -> usize {
        self.extension
    }

    /// Root seed of the draw (0 for handmade realizations).
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Smallest and largest stored coefficient magnitude.
    pub fn magnitude_bounds(&self) -> (f64, f64) {
        self.magnitude_bounds
    }

    /// Number of stored coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    /// True when no coefficients are stored.
    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// An independent realization of the same dimensions, derived from this
    /// draw's seed and a scenario tag.
    pub fn redraw(&self, tag: u64) -> Self {
        let config = NetworkConfig::simo(self.num_tx, self.num_rx, self.rx_antennas)
            .expect("dimensions were validated at construction");
        Self::draw(&config, self.extension, rng::derive_seed(self.seed, tag))
            .expect("dimensions were validated at construction")
    }

    /// A copy with every coefficient matching the predicate replaced by
    /// exact zero. Zeroed coefficients deliberately escape the draw's
    /// magnitude bounds; the result is a polynomial-identity device, not a
    /// channel realization.
    pub fn with_zeroed<F>(&self, mut zero: F) -> Self
    where
        F: FnMut(usize, usize, usize, usize) -> bool,
    {
        Self::from_fn(
            self.num_tx,
            self.num_rx,
            self.rx_antennas,
            self.extension,
            |rx, tx, antenna, t| {
                if zero(rx, tx, antenna, t) {
                    Complex64::ZERO
                } else {
                    self.coefficient(rx, tx, antenna, t)
                }
            },
        )
    }

    /// JSON dump: one array of `[re, im]` pairs per link, keyed `"j/i/r"`.
    pub fn dump_json(&self) -> serde_json::Value {
        let mut map = BTreeMap::new();
        for rx in 0..self.num_rx {
            for tx in 0..self.num_tx {
                for antenna in 0..self.rx_antennas {
                    let series: Vec<[f64; 2]> = (0..self.extension)
                        .map(|t| {
                            let c = self.coefficient(rx, tx, antenna, t);
                            [c.re, c.im]
                        })
                        .collect();
                    map.insert(format!("{rx}/{tx}/{antenna}"), series);
                }
            }
        }
        serde_json::json!(map)
    }
}

/// Dense spatial channels: one generic `B_j × A_i` matrix per link, no
/// symbol extension. Used by the linear-feasibility study.
#[derive(Clone, Debug)]
pub struct SpatialChannels {
    config: NetworkConfig,
    seed: u64,
    links: Vec<DMatrix<Complex64>>,
}

impl SpatialChannels {
    /// Draws one matrix per (receiver, transmitter) pair, entries i.i.d.
    /// with bounded magnitude and uniform phase, one stream per link.
    pub fn draw(config: &NetworkConfig, seed: u64) -> Self {
        let mut links = Vec::with_capacity(config.num_rx() * config.num_tx());
        for rx in 0..config.num_rx() {
            for tx in 0..config.num_tx() {
                let mut rng = rng::stream_rng(seed, rng::channel_stream(rx, tx, 0));
                let rows = config.rx_antennas(rx);
                let cols = config.tx_antennas(tx);
                let mut mat = DMatrix::zeros(rows, cols);
                for row in 0..rows {
                    for col in 0..cols {
                        mat[(row, col)] = rng::polar_coefficient(&mut rng, H_MIN, H_MAX);
                    }
                }
                links.push(mat);
            }
        }
        Self {
            config: config.clone(),
            seed,
            links,
        }
    }

    /// The channel matrix of link (rx `j`, tx `i`), shape `B_j × A_i`.
    pub fn link(&self, rx: usize, tx: usize) -> &DMatrix<Complex64> {
        &self.links[rx * self.config.num_tx() + tx]
    }

    /// The configuration the channels were drawn for.
    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    /// Root seed of the draw.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// JSON dump: row-major `[re, im]` matrices keyed `"j/i"`.
    pub fn dump_json(&self) -> serde_json::Value {
        let mut map = BTreeMap::new();
        for rx in 0..self.config.num_rx() {
            for tx in 0..self.config.num_tx() {
                let m = self.link(rx, tx);
                let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
                    .map(|row| {
                        (0..m.ncols())
                            .map(|col| [m[(row, col)].re, m[(row, col)].im])
                            .collect()
                    })
                    .collect();
                map.insert(format!("{rx}/{tx}"), rows);
            }
        }
        serde_json::json!(map)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extended_draw_counts_and_bounds() {
        let config = NetworkConfig::simo(2, 2, 1).unwrap();
        let channels = ExtendedChannels::draw(&config, 5, 7).unwrap();
        assert_eq!(channels.len(), 20);
        for rx in 0..2 {
            for tx in 0..2 {
                for t in 0..5 {
                    let h = channels.coefficient(rx, tx, 0, t).norm();
                    assert!((H_MIN..=H_MAX).contains(&h), "|h| = {h} out of bounds");
                }
            }
        }

        let config = NetworkConfig::simo(3, 2, 2).unwrap();
        assert_eq!(ExtendedChannels::draw(&config, 7, 1).unwrap().len(), 84);
    }

    #[test]
    fn extended_draw_is_deterministic() {
        let config = NetworkConfig::simo(2, 2, 1).unwrap();
        let a = ExtendedChannels::draw(&config, 5, 7).unwrap();
        let b = ExtendedChannels::draw(&config, 5, 7).unwrap();
        assert_eq!(a.coeffs, b.coeffs);
    }

    #[test]
    fn growing_the_network_preserves_existing_streams() {
        let small = ExtendedChannels::draw(&NetworkConfig::simo(2, 2, 1).unwrap(), 4, 9).unwrap();
        let large = ExtendedChannels::draw(&NetworkConfig::simo(3, 3, 2).unwrap(), 6, 9).unwrap();
        for rx in 0..2 {
            for tx in 0..2 {
                for t in 0..4 {
                    assert_eq!(
                        small.coefficient(rx, tx, 0, t),
                        large.coefficient(rx, tx, 0, t)
                    );
                }
            }
        }
    }

    #[test]
    fn non_simo_draw_names_the_offender() {
        let config = NetworkConfig::new(vec![1, 3], vec![2, 2]).unwrap();
        let err = ExtendedChannels::draw(&config, 4, 0).unwrap_err();
        match err {
            Error::NotSimo {
                transmitter,
                antennas,
            } => {
                assert_eq!((transmitter, antennas), (1, 3));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn decompose_splits_transmitters() {
        let config = NetworkConfig::new(vec![2, 2, 2], vec![4, 4, 4]).unwrap();
        let split = config.decompose_transmitters(2).unwrap();
        assert_eq!(split.num_tx(), 6);
        assert_eq!(split.num_rx(), 3);
        assert!(split.tx_antenna_counts().iter().all(|&a| a == 1));
        assert!(split.rx_antenna_counts().iter().all(|&b| b == 4));

        let config = NetworkConfig::new(vec![3, 3], vec![6, 6, 6]).unwrap();
        let split = config.decompose_transmitters(3).unwrap();
        assert_eq!(split.num_tx(), 6);
        assert!(split.tx_antenna_counts().iter().all(|&a| a == 1));

        let config = NetworkConfig::new(vec![1, 1], vec![1, 1]).unwrap();
        assert_eq!(config.decompose_transmitters(1).unwrap(), config);

        let config = NetworkConfig::new(vec![2, 3], vec![1]).unwrap();
        assert!(matches!(
            config.decompose_transmitters(2),
            Err(Error::IndivisibleSplit { transmitter: 1, .. })
        ));
    }

    #[test]
    fn decompose_preserves_total_tx_antennas() {
        let config = NetworkConfig::new(vec![4, 8, 2], vec![3]).unwrap();
        for split in [1, 2] {
            let d = config.decompose_transmitters(split).unwrap();
            assert_eq!(
                d.tx_antenna_counts().iter().sum::<usize>(),
                config.tx_antenna_counts().iter().sum::<usize>()
            );
        }
    }

    #[test]
    fn reciprocal_swaps_roles_and_is_an_involution() {
        let config = NetworkConfig::new(vec![1, 1, 1], vec![2, 2]).unwrap();
        let flip = config.reciprocal();
        assert_eq!(flip.tx_antenna_counts(), &[2, 2]);
        assert_eq!(flip.rx_antenna_counts(), &[1, 1, 1]);
        assert_eq!(flip.reciprocal(), config);

        // SIMO reciprocates to MISO.
        let simo = NetworkConfig::simo(4, 2, 3).unwrap();
        let miso = simo.reciprocal();
        assert!(miso.tx_antenna_counts().iter().all(|&a| a == 3));
        assert!(miso.rx_antenna_counts().iter().all(|&b| b == 1));
    }

    #[test]
    fn spatial_draw_shapes_and_seeds() {
        let config = NetworkConfig::new(vec![2, 2], vec![3, 3]).unwrap();
        let a = SpatialChannels::draw(&config, 3);
        for rx in 0..2 {
            for tx in 0..2 {
                assert_eq!(a.link(rx, tx).shape(), (3, 2));
            }
        }
        let b = SpatialChannels::draw(&config, 4);
        assert_ne!(a.link(0, 0), b.link(0, 0));
        let c = SpatialChannels::draw(&config, 3);
        assert_eq!(a.link(1, 0), c.link(1, 0));
    }

    #[test]
    fn config_json_round_trip() {
        let config = NetworkConfig::new(vec![1, 1, 1], vec![2, 2]).unwrap();
        let json = serde_json::to_value(&config).unwrap();
        assert_eq!(json["M"], 3);
        assert_eq!(json["N"], 2);
        assert_eq!(json["tx_antennas"], serde_json::json!([1, 1, 1]));
        let back: NetworkConfig = serde_json::from_value(json).unwrap();
        assert_eq!(back, config);

        let bad: std::result::Result<NetworkConfig, _> =
            serde_json::from_str(r#"{"M":2,"N":1,"tx_antennas":[1],"rx_antennas":[1]}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn zeroed_variant_and_dump() {
        let config = NetworkConfig::simo(2, 2, 1).unwrap();
        let channels = ExtendedChannels::draw(&config, 3, 1).unwrap();
        let zeroed = channels.with_zeroed(|rx, tx, _, t| rx == 0 && tx == 1 && t == 2);
        assert_eq!(zeroed.coefficient(0, 1, 0, 2), Complex64::ZERO);
        assert_eq!(
            zeroed.coefficient(1, 1, 0, 2),
            channels.coefficient(1, 1, 0, 2)
        );

        let dump = channels.dump_json();
        assert_eq!(dump["0/1/0"].as_array().unwrap().len(), 3);
    }
}
