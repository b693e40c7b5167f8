//! Comparator networks over Boolean inputs.
//!
//! Channels are 1-based at every public boundary (JSON, text, the
//! [`Comparator`] fields). Internally, bit `i - 1` of a packed word holds
//! channel `i`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest channel count a network may have. Bit vectors are packed into a
/// single `u64`.
pub const MAX_CHANNELS: usize = 64;

/// Largest channel count for which exhaustive 0-1 enumeration is attempted.
pub const MAX_EXHAUSTIVE_CHANNELS: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetError {
    #[error("network has {0} channels, at most {MAX_CHANNELS} are supported")]
    TooManyChannels(usize),
    #[error("comparator ({i},{j}) is out of range for {n} channels")]
    ChannelOutOfRange { i: usize, j: usize, n: usize },
    #[error("comparator ({i},{j}) is not standard (need i < j)")]
    NotStandard { i: usize, j: usize },
    #[error("channel {channel} is used twice in layer {layer}")]
    ChannelReused { layer: usize, channel: usize },
    #[error("input has length {got}, network has {expected} channels")]
    Dimension { expected: usize, got: usize },
    #[error("not a permutation of 1..={0}")]
    InvalidPermutation(usize),
    #[error("exhaustive check over {0} channels is not supported")]
    TooLargeForExhaustive(usize),
    #[error("invalid bit vector literal {0:?}")]
    BadBits(String),
}

/// A standard comparator `(i, j)` with `i < j`: the minimum goes to channel
/// `i`, the maximum to channel `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Comparator {
    pub i: usize,
    pub j: usize,
}

impl Comparator {
    pub fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }
}

impl fmt::Display for Comparator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// A set of comparators acting on pairwise disjoint channels, kept sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Layer {
    comparators: Vec<Comparator>,
}

impl Layer {
    pub fn new(mut comparators: Vec<Comparator>) -> Self {
        comparators.sort_unstable();
        Self { comparators }
    }

    pub fn comparators(&self) -> &[Comparator] {
        &self.comparators
    }

    pub fn len(&self) -> usize {
        self.comparators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comparators.is_empty()
    }

    pub fn contains(&self, c: Comparator) -> bool {
        self.comparators.binary_search(&c).is_ok()
    }
}

impl FromIterator<(usize, usize)> for Layer {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        Layer::new(iter.into_iter().map(|(i, j)| Comparator::new(i, j)).collect())
    }
}

/// A layered comparator network on `n` channels.
///
/// Construction validates channel ranges, standardness and layer
/// independence; values are immutable afterwards.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork", into = "RawNetwork")]
pub struct ComparatorNetwork {
    n: usize,
    layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
struct RawNetwork {
    n: usize,
    layers: Vec<Vec<[usize; 2]>>,
}

impl TryFrom<RawNetwork> for ComparatorNetwork {
    type Error = NetError;

    fn try_from(raw: RawNetwork) -> Result<Self, NetError> {
        let layers = raw
            .layers
            .into_iter()
            .map(|l| l.into_iter().map(|[i, j]| (i, j)).collect())
            .collect();
        ComparatorNetwork::new(raw.n, layers)
    }
}

impl From<ComparatorNetwork> for RawNetwork {
    fn from(net: ComparatorNetwork) -> Self {
        RawNetwork {
            n: net.n,
            layers: net
                .layers
                .iter()
                .map(|l| l.comparators.iter().map(|c| [c.i, c.j]).collect())
                .collect(),
        }
    }
}

impl ComparatorNetwork {
    pub fn new(n: usize, layers: Vec<Layer>) -> Result<Self, NetError> {
        if n > MAX_CHANNELS {
            return Err(NetError::TooManyChannels(n));
        }
        for (k, layer) in layers.iter().enumerate() {
            let mut seen = 0u64;
            for c in &layer.comparators {
                if c.i == 0 || c.j == 0 || c.i > n || c.j > n {
                    return Err(NetError::ChannelOutOfRange { i: c.i, j: c.j, n });
                }
                if c.i >= c.j {
                    return Err(NetError::NotStandard { i: c.i, j: c.j });
                }
                for ch in [c.i, c.j] {
                    let bit = 1u64 << (ch - 1);
                    if seen & bit != 0 {
                        return Err(NetError::ChannelReused { layer: k + 1, channel: ch });
                    }
                    seen |= bit;
                }
            }
        }
        Ok(Self { n, layers })
    }

    /// Builds a network from plain `(i, j)` pairs, one inner vector per layer.
    pub fn from_pairs(n: usize, layers: &[&[(usize, usize)]]) -> Result<Self, NetError> {
        Self::new(n, layers.iter().map(|l| l.iter().copied().collect()).collect())
    }

    pub fn empty(n: usize) -> Self {
        Self { n, layers: Vec::new() }
    }

    pub fn channels(&self) -> usize {
        self.n
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn size(&self) -> usize {
        self.layers.iter().map(Layer::len).sum()
    }

    pub fn comparators(&self) -> impl Iterator<Item = Comparator> + '_ {
        self.layers.iter().flat_map(|l| l.comparators.iter().copied())
    }

    /// The first `k` layers (or all of them if the network is shallower).
    pub fn prefix(&self, k: usize) -> Self {
        Self {
            n: self.n,
            layers: self.layers.iter().take(k).cloned().collect(),
        }
    }

    /// Drops empty layers at the end.
    pub fn trim_trailing_empty(&self) -> Self {
        let mut layers = self.layers.clone();
        while layers.last().is_some_and(Layer::is_empty) {
            layers.pop();
        }
        Self { n: self.n, layers }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("network serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl fmt::Display for ComparatorNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n={}:", self.n)?;
        for layer in &self.layers {
            f.write_str(" [")?;
            for (idx, c) in layer.comparators.iter().enumerate() {
                if idx > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{c}")?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

/// A 0-1 vector of length `n`, packed with channel `i` in bit `i - 1`.
///
/// The text form lists channel 1 first, so `"100"` has a one on channel 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitVector {
    n: usize,
    bits: u64,
}

impl BitVector {
    pub fn new(n: usize, bits: u64) -> Self {
        debug_assert!(n <= MAX_CHANNELS);
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Self { n, bits: bits & mask }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(n, 0)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Value on 1-based channel `i`.
    pub fn get(&self, i: usize) -> bool {
        (self.bits >> (i - 1)) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Nondecreasing from channel 1 to channel `n`, i.e. all zeros come
    /// first.
    pub fn is_sorted(&self) -> bool {
        let ones = self.bits.count_ones() as usize;
        self.bits == Self::sorted_with_ones(self.n, ones).bits
    }

    pub fn sorted(&self) -> Self {
        Self::sorted_with_ones(self.n, self.bits.count_ones() as usize)
    }

    fn sorted_with_ones(n: usize, ones: usize) -> Self {
        if ones == 0 {
            return Self::zeros(n);
        }
        let block = if ones == 64 { u64::MAX } else { (1u64 << ones) - 1 };
        Self::new(n, block << (n - ones))
    }

    /// Number of leading zero channels (from channel 1).
    pub fn leading_zeros(&self) -> usize {
        (self.bits.trailing_zeros() as usize).min(self.n)
    }

    /// Number of trailing one channels (ending at channel `n`).
    pub fn trailing_ones(&self) -> usize {
        if self.n == 0 {
            return 0;
        }
        (self.bits << (64 - self.n)).leading_ones() as usize
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 1..=self.n {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitVector {
    type Err = NetError;

    fn from_str(s: &str) -> Result<Self, NetError> {
        if s.len() > MAX_CHANNELS {
            return Err(NetError::BadBits(s.to_string()));
        }
        let mut bits = 0u64;
        for (idx, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits |= 1 << idx,
                _ => return Err(NetError::BadBits(s.to_string())),
            }
        }
        Ok(Self::new(s.len(), bits))
    }
}

#[inline]
fn apply_packed(net: &ComparatorNetwork, mut bits: u64) -> u64 {
    for c in net.comparators() {
        let (a, b) = (c.i - 1, c.j - 1);
        let va = (bits >> a) & 1;
        let vb = (bits >> b) & 1;
        // Only a (1, 0) pair moves: clear channel a, set channel b.
        let swap = va & !vb;
        bits ^= (swap << a) | (swap << b);
    }
    bits
}

pub fn apply_network(net: &ComparatorNetwork, input: BitVector) -> Result<BitVector, NetError> {
    if input.len() != net.n {
        return Err(NetError::Dimension { expected: net.n, got: input.len() });
    }
    Ok(BitVector::new(net.n, apply_packed(net, input.bits)))
}

const LANE_PATTERNS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

/// Bit-sliced state for 64 consecutive inputs: word `c` holds channel
/// `c + 1` of inputs `64 * chunk .. 64 * chunk + 63`.
fn sliced_chunk(n: usize, chunk: u64, state: &mut [u64]) {
    for (c, word) in state.iter_mut().enumerate().take(n) {
        *word = if c < 6 {
            LANE_PATTERNS[c]
        } else if (chunk >> (c - 6)) & 1 == 1 {
            u64::MAX
        } else {
            0
        };
    }
}

fn sliced_apply(net: &ComparatorNetwork, state: &mut [u64]) {
    for c in net.comparators() {
        let (a, b) = (state[c.i - 1], state[c.j - 1]);
        state[c.i - 1] = a & b;
        state[c.j - 1] = a | b;
    }
}

fn chunk_sorted(net: &ComparatorNetwork, chunk: u64) -> bool {
    let n = net.n;
    let mut state = [0u64; MAX_CHANNELS];
    sliced_chunk(n, chunk, &mut state);
    sliced_apply(net, &mut state[..n]);
    state[..n].windows(2).all(|w| w[0] & !w[1] == 0)
}

fn chunk_count(n: usize) -> u64 {
    if n <= 6 {
        1
    } else {
        1u64 << (n - 6)
    }
}

/// Exhaustive 0-1 check, one chunk of 64 inputs at a time on the calling
/// thread.
pub fn is_sorting_network_sequential(net: &ComparatorNetwork) -> Result<bool, NetError> {
    if net.n > MAX_EXHAUSTIVE_CHANNELS {
        return Err(NetError::TooLargeForExhaustive(net.n));
    }
    Ok((0..chunk_count(net.n)).all(|chunk| chunk_sorted(net, chunk)))
}

/// Exhaustive 0-1 check with chunks spread over the rayon pool.
#[cfg(feature = "parallel")]
pub fn is_sorting_network_parallel(net: &ComparatorNetwork) -> Result<bool, NetError> {
    use rayon::prelude::*;
    if net.n > MAX_EXHAUSTIVE_CHANNELS {
        return Err(NetError::TooLargeForExhaustive(net.n));
    }
    Ok((0..chunk_count(net.n)).into_par_iter().all(|chunk| chunk_sorted(net, chunk)))
}

/// True iff `net` sorts every 0-1 input (and hence, by the zero-one
/// principle, every input). Panics above [`MAX_EXHAUSTIVE_CHANNELS`].
pub fn is_sorting_network(net: &ComparatorNetwork) -> bool {
    #[cfg(feature = "parallel")]
    let verdict = is_sorting_network_parallel(net);
    #[cfg(not(feature = "parallel"))]
    let verdict = is_sorting_network_sequential(net);
    verdict.expect("exhaustive check limited to small channel counts")
}

fn outputs_in_range(prefix: &ComparatorNetwork, range: std::ops::Range<u64>) -> BTreeSet<BitVector> {
    range
        .map(|x| BitVector::new(prefix.n, apply_packed(prefix, x)))
        .filter(|y| !y.is_sorted())
        .collect()
}

/// Distinct unsorted vectors at the output of `prefix` over all 2^n inputs.
pub fn unsorted_outputs(prefix: &ComparatorNetwork) -> BTreeSet<BitVector> {
    assert!(prefix.n <= MAX_EXHAUSTIVE_CHANNELS, "exhaustive enumeration limited to small n");
    let total = 1u64 << prefix.n;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        const BLOCK: u64 = 1 << 12;
        (0..total.div_ceil(BLOCK))
            .into_par_iter()
            .map(|b| outputs_in_range(prefix, b * BLOCK..((b + 1) * BLOCK).min(total)))
            .reduce(BTreeSet::new, |mut a, b| {
                a.extend(b);
                a
            })
    }
    #[cfg(not(feature = "parallel"))]
    {
        outputs_in_range(prefix, 0..total)
    }
}

/// Every distinct output of `prefix`, sorted ones included.
pub fn all_outputs(prefix: &ComparatorNetwork) -> BTreeSet<BitVector> {
    assert!(prefix.n <= MAX_EXHAUSTIVE_CHANNELS, "exhaustive enumeration limited to small n");
    (0..1u64 << prefix.n)
        .map(|x| BitVector::new(prefix.n, apply_packed(prefix, x)))
        .collect()
}

/// Layerwise mirror image: `(i, j)` becomes `(n - j + 1, n - i + 1)`.
pub fn reflect(net: &ComparatorNetwork) -> ComparatorNetwork {
    let n = net.n;
    let layers = net
        .layers
        .iter()
        .map(|l| l.comparators.iter().map(|c| (n - c.j + 1, n - c.i + 1)).collect())
        .collect();
    ComparatorNetwork { n, layers }
}

/// Relabels channel `c` as `perm[c - 1]` and untangles the result back into
/// a standard network.
///
/// Layers are scanned in order. A comparator that comes out as `(i, j)` with
/// `i > j` is flipped and the labels `i` and `j` are exchanged in every later
/// comparator. Comparators inside one layer touch disjoint channels, so the
/// scan order inside a layer does not affect the result.
pub fn permute_untangle(net: &ComparatorNetwork, perm: &[usize]) -> Result<ComparatorNetwork, NetError> {
    let n = net.n;
    if perm.len() != n {
        return Err(NetError::InvalidPermutation(n));
    }
    let mut seen = vec![false; n + 1];
    for &p in perm {
        if p == 0 || p > n || seen[p] {
            return Err(NetError::InvalidPermutation(n));
        }
        seen[p] = true;
    }
    // label[c] is the current name of original channel c.
    let mut label: Vec<usize> = std::iter::once(0).chain(perm.iter().copied()).collect();
    let mut layers = Vec::with_capacity(net.depth());
    for layer in &net.layers {
        let mut out = Vec::with_capacity(layer.len());
        let mut swaps = Vec::new();
        for c in &layer.comparators {
            let (a, b) = (label[c.i], label[c.j]);
            if a < b {
                out.push(Comparator::new(a, b));
            } else {
                out.push(Comparator::new(b, a));
                swaps.push((a, b));
            }
        }
        for (a, b) in swaps {
            for l in label.iter_mut().skip(1) {
                if *l == a {
                    *l = b;
                } else if *l == b {
                    *l = a;
                }
            }
        }
        layers.push(Layer::new(out));
    }
    Ok(ComparatorNetwork { n, layers })
}

/// Removes comparators that never exchange their inputs on any 0-1 vector.
/// Such comparators act as the identity, so dropping all of them at once
/// leaves the function of the network unchanged.
pub fn remove_redundant(net: &ComparatorNetwork) -> ComparatorNetwork {
    let n = net.n;
    assert!(n <= MAX_EXHAUSTIVE_CHANNELS, "exhaustive enumeration limited to small n");
    let mut active: Vec<Vec<bool>> = net.layers.iter().map(|l| vec![false; l.len()]).collect();
    let mut state = [0u64; MAX_CHANNELS];
    for chunk in 0..chunk_count(n) {
        sliced_chunk(n, chunk, &mut state);
        for (k, layer) in net.layers.iter().enumerate() {
            for (idx, c) in layer.comparators.iter().enumerate() {
                let (a, b) = (state[c.i - 1], state[c.j - 1]);
                if a & !b != 0 {
                    active[k][idx] = true;
                }
                state[c.i - 1] = a & b;
                state[c.j - 1] = a | b;
            }
        }
    }
    let layers = net
        .layers
        .iter()
        .zip(&active)
        .map(|(l, act)| {
            Layer::new(
                l.comparators
                    .iter()
                    .zip(act)
                    .filter(|(_, &a)| a)
                    .map(|(c, _)| *c)
                    .collect(),
            )
        })
        .collect();
    ComparatorNetwork { n, layers }
}
