//! Two-layer networks up to channel permutation.
//!
//! Each connected component of a two-layer network is a path or a cycle in
//! which first-layer and second-layer comparators alternate. Reading the
//! channel roles along a maximal path (`0` free in layer 1, `1` min-channel,
//! `2` max-channel) gives a word; the sorted multiset of words of all
//! components is the sentence of the network. Two networks are equivalent
//! under permutation exactly when their sentences agree, so complete prefix
//! sets are produced by enumerating sentences rather than networks.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netcore::{reflect, ComparatorNetwork, Layer, MAX_CHANNELS};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrefixError {
    #[error("malformed word {0:?}")]
    BadWord(String),
    #[error("malformed sentence {0:?}")]
    BadSentence(String),
    #[error("network has {0} layers, at most 2 are allowed")]
    TooDeep(usize),
    #[error("two-layer network is not connected")]
    Disconnected,
    #[error("sentence covers {0} channels, at most {MAX_CHANNELS} are supported")]
    TooWide(usize),
}

type Pairs = Vec<(usize, usize)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WordKind {
    /// Odd channel count, one channel free in layer 1.
    Head,
    /// Even channel count, two channels unused in layer 2.
    Stick,
    /// Even channel count, every channel used in both layers.
    Cycle,
    /// Even channel count, two channels free in layer 1.
    Tail,
}

/// The canonical word of one connected two-layer component.
///
/// `chars` holds the roles `0`, `1`, `2`; the cycle tag is carried by
/// `kind`. Ordering follows the text form with `'0' < '1' < '2' < 'c'`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    kind: WordKind,
    chars: Vec<u8>,
}

impl Word {
    /// Builds the canonical word for a raw role sequence of the given kind.
    pub fn new(kind: WordKind, chars: Vec<u8>) -> Result<Self, PrefixError> {
        if !grammar_ok(kind, &chars) {
            return Err(PrefixError::BadWord(render_chars(kind, &chars)));
        }
        Ok(Self { kind, chars: canonical_chars(kind, &chars) })
    }

    pub fn kind(&self) -> WordKind {
        self.kind
    }

    pub fn chars(&self) -> &[u8] {
        &self.chars
    }

    pub fn channels(&self) -> usize {
        self.chars.len()
    }

    /// Channels left free by the first layer.
    pub fn free_channels(&self) -> usize {
        match self.kind {
            WordKind::Head => 1,
            WordKind::Tail => 2,
            WordKind::Stick | WordKind::Cycle => 0,
        }
    }

    pub fn first_layer_size(&self) -> usize {
        (self.channels() - self.free_channels()) / 2
    }

    pub fn second_layer_size(&self) -> usize {
        let m = self.first_layer_size();
        match self.kind {
            WordKind::Head => m,
            WordKind::Stick => m - 1,
            WordKind::Cycle => m,
            WordKind::Tail => m + 1,
        }
    }

    /// The single comparator repeated in both layers.
    pub fn is_redundant_pair(&self) -> bool {
        self.kind == WordKind::Cycle && self.chars.len() == 2
    }

    /// Word of the mirrored component: min- and max-channels trade places.
    pub fn reflect(&self) -> Self {
        let swapped: Vec<u8> = self.chars.iter().map(|&c| [0, 2, 1][c as usize]).collect();
        Self { kind: self.kind, chars: canonical_chars(self.kind, &swapped) }
    }

    fn sort_key(&self) -> impl Iterator<Item = u8> + '_ {
        self.chars
            .iter()
            .map(|&c| b'0' + c)
            .chain((self.kind == WordKind::Cycle).then_some(b'c'))
    }

    /// The component network: first-layer comparators `(2k-1, 2k)` on the
    /// leading channels, free channels last.
    fn local_layers(&self) -> (Pairs, Pairs) {
        let pairs: Vec<&[u8]> = match self.kind {
            WordKind::Head => self.chars[1..].chunks(2).collect(),
            WordKind::Tail => self.chars[1..self.chars.len() - 1].chunks(2).collect(),
            WordKind::Stick | WordKind::Cycle => self.chars.chunks(2).collect(),
        };
        let m = pairs.len();
        let ends: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let (lo, hi) = (2 * k + 1, 2 * k + 2);
                if p[0] == 1 {
                    (lo, hi)
                } else {
                    (hi, lo)
                }
            })
            .collect();
        let l1: Vec<(usize, usize)> = (0..m).map(|k| (2 * k + 1, 2 * k + 2)).collect();
        let mut l2: Vec<(usize, usize)> = ends.windows(2).map(|w| ordered(w[0].1, w[1].0)).collect();
        match self.kind {
            WordKind::Stick => {}
            WordKind::Cycle => l2.push(ordered(ends[m - 1].1, ends[0].0)),
            WordKind::Head => {
                if m > 0 {
                    l2.push(ordered(ends[0].0, 2 * m + 1));
                }
            }
            WordKind::Tail => {
                l2.push(ordered(ends[0].0, 2 * m + 2));
                l2.push(ordered(ends[m - 1].1, 2 * m + 1));
            }
        }
        (l1, l2)
    }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(other.sort_key())
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn render_chars(kind: WordKind, chars: &[u8]) -> String {
    let mut s: String = chars.iter().map(|&c| char::from(b'0' + c.min(9))).collect();
    if kind == WordKind::Cycle {
        s.push('c');
    }
    s
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_chars(self.kind, &self.chars))
    }
}

fn pairs_ok(body: &[u8]) -> bool {
    body.len().is_multiple_of(2) && body.chunks(2).all(|p| p == [1, 2] || p == [2, 1])
}

fn grammar_ok(kind: WordKind, chars: &[u8]) -> bool {
    let len = chars.len();
    match kind {
        WordKind::Head => len % 2 == 1 && chars[0] == 0 && pairs_ok(&chars[1..]),
        WordKind::Stick => len >= 2 && pairs_ok(chars),
        WordKind::Tail => len >= 4 && chars[0] == 0 && chars[len - 1] == 0 && pairs_ok(&chars[1..len - 1]),
        WordKind::Cycle => len >= 2 && pairs_ok(chars),
    }
}

fn canonical_chars(kind: WordKind, chars: &[u8]) -> Vec<u8> {
    match kind {
        WordKind::Head => chars.to_vec(),
        WordKind::Stick | WordKind::Tail => {
            let rev: Vec<u8> = chars.iter().rev().copied().collect();
            rev.min(chars.to_vec())
        }
        WordKind::Cycle => {
            // Traversals starting with a first-layer pair: even rotations of
            // the word and of its reversal.
            let rev: Vec<u8> = chars.iter().rev().copied().collect();
            let len = chars.len();
            let mut best = chars.to_vec();
            for base in [chars, rev.as_slice()] {
                for start in (0..len).step_by(2) {
                    let cand: Vec<u8> = base[start..].iter().chain(&base[..start]).copied().collect();
                    if cand < best {
                        best = cand;
                    }
                }
            }
            best
        }
    }
}

impl FromStr for Word {
    type Err = PrefixError;

    fn from_str(s: &str) -> Result<Self, PrefixError> {
        let bad = || PrefixError::BadWord(s.to_string());
        let (body, cycle) = match s.strip_suffix('c') {
            Some(b) => (b, true),
            None => (s, false),
        };
        let chars: Vec<u8> = body
            .bytes()
            .map(|b| match b {
                b'0'..=b'2' => Ok(b - b'0'),
                _ => Err(bad()),
            })
            .collect::<Result<_, _>>()?;
        if chars.is_empty() {
            return Err(bad());
        }
        let kind = if cycle {
            WordKind::Cycle
        } else if chars[0] == 0 && chars.len() % 2 == 1 {
            WordKind::Head
        } else if chars[0] == 0 {
            WordKind::Tail
        } else {
            WordKind::Stick
        };
        Word::new(kind, chars).map_err(|_| bad())
    }
}

/// All canonical words of `kind` on exactly `channels` channels, sorted.
/// Parity mismatches yield an empty set.
pub fn enumerate_words(channels: usize, kind: WordKind) -> Vec<Word> {
    let (prefix, pairs, suffix): (&[u8], usize, &[u8]) = match kind {
        WordKind::Head if channels % 2 == 1 => (&[0], (channels - 1) / 2, &[]),
        WordKind::Stick if channels.is_multiple_of(2) && channels >= 2 => (&[], channels / 2, &[]),
        WordKind::Tail if channels.is_multiple_of(2) && channels >= 4 => (&[0], (channels - 2) / 2, &[0]),
        // A canonical cycle always opens with a "12" pair.
        WordKind::Cycle if channels.is_multiple_of(2) && channels >= 2 => (&[1, 2], channels / 2 - 1, &[]),
        _ => return Vec::new(),
    };
    let mut words = Vec::new();
    for mask in 0u64..(1u64 << pairs) {
        let mut chars = prefix.to_vec();
        for p in 0..pairs {
            if (mask >> (pairs - 1 - p)) & 1 == 0 {
                chars.extend([1, 2]);
            } else {
                chars.extend([2, 1]);
            }
        }
        chars.extend_from_slice(suffix);
        if canonical_chars(kind, &chars) == chars {
            words.push(Word { kind, chars });
        }
    }
    words.sort();
    words
}

/// A two-layer network up to permutation: its component words in sorted
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sentence {
    words: Vec<Word>,
}

impl Sentence {
    pub fn new(mut words: Vec<Word>) -> Self {
        words.sort();
        Self { words }
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn channels(&self) -> usize {
        self.words.iter().map(Word::channels).sum()
    }

    pub fn free_channels(&self) -> usize {
        self.words.iter().map(Word::free_channels).sum()
    }

    /// Number of comparators in `net_of(self)`.
    pub fn size(&self) -> usize {
        self.words.iter().map(|w| w.first_layer_size() + w.second_layer_size()).sum()
    }

    pub fn has_redundant_pair(&self) -> bool {
        self.words.iter().any(Word::is_redundant_pair)
    }

    /// No comparator in layer 2: only free channels and lone comparators.
    pub fn second_layer_empty(&self) -> bool {
        self.words.iter().all(|w| w.second_layer_size() == 0)
    }
}

impl fmt::Display for Sentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (idx, w) in self.words.iter().enumerate() {
            if idx > 0 {
                f.write_str(",")?;
            }
            write!(f, "{w}")?;
        }
        f.write_str(")")
    }
}

impl FromStr for Sentence {
    type Err = PrefixError;

    /// Accepts `(w1,w2,...)`; the parentheses are optional and `;` also
    /// separates words.
    fn from_str(s: &str) -> Result<Self, PrefixError> {
        let t = s.trim();
        let inner = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(t);
        if inner.trim().is_empty() {
            return Err(PrefixError::BadSentence(s.to_string()));
        }
        let words = inner
            .split([',', ';'])
            .map(|w| w.trim().parse::<Word>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| PrefixError::BadSentence(s.to_string()))?;
        Ok(Sentence::new(words))
    }
}

impl Serialize for Sentence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Sentence {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Layer-1 and layer-2 partners of every channel (0-based) of a network with
/// at most two layers.
struct TwoLayerGraph {
    first: Vec<Option<usize>>,
    second: Vec<Option<usize>>,
}

impl TwoLayerGraph {
    fn of(net: &ComparatorNetwork) -> Result<Self, PrefixError> {
        if net.depth() > 2 {
            return Err(PrefixError::TooDeep(net.depth()));
        }
        let n = net.channels();
        let mut first = vec![None; n];
        let mut second = vec![None; n];
        for (k, layer) in net.layers().iter().enumerate() {
            let side = if k == 0 { &mut first } else { &mut second };
            for c in layer.comparators() {
                side[c.i - 1] = Some(c.j - 1);
                side[c.j - 1] = Some(c.i - 1);
            }
        }
        Ok(Self { first, second })
    }

    fn role(&self, ch: usize) -> u8 {
        match self.first[ch] {
            None => 0,
            Some(p) if p > ch => 1,
            Some(_) => 2,
        }
    }

    fn components(&self) -> Vec<Vec<usize>> {
        let n = self.first.len();
        let mut seen = vec![false; n];
        let mut comps = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut idx = 0;
            while idx < comp.len() {
                let ch = comp[idx];
                for next in [self.first[ch], self.second[ch]].into_iter().flatten() {
                    if !seen[next] {
                        seen[next] = true;
                        comp.push(next);
                    }
                }
                idx += 1;
            }
            comps.push(comp);
        }
        comps
    }

    /// Walks from `start`, leaving first through layer `first_step` and then
    /// alternating, until the path ends or returns to `start`.
    fn walk(&self, start: usize, first_step_layer1: bool) -> Vec<u8> {
        let mut out = vec![self.role(start)];
        let mut cur = start;
        let mut use_first = first_step_layer1;
        loop {
            let next = if use_first { self.first[cur] } else { self.second[cur] };
            match next {
                Some(nx) if nx != start => {
                    out.push(self.role(nx));
                    cur = nx;
                    use_first = !use_first;
                }
                _ => return out,
            }
        }
    }

    fn word_of_component(&self, comp: &[usize]) -> Word {
        let is_cycle = comp.iter().all(|&c| self.first[c].is_some() && self.second[c].is_some());
        if is_cycle {
            let chars = self.walk(comp[0], true);
            return Word { kind: WordKind::Cycle, chars: canonical_chars(WordKind::Cycle, &chars) };
        }
        if comp.len() % 2 == 1 {
            let free = *comp.iter().find(|&&c| self.first[c].is_none()).expect("odd path has a free end");
            let chars = self.walk(free, false);
            return Word { kind: WordKind::Head, chars };
        }
        let ends: Vec<usize> = comp
            .iter()
            .copied()
            .filter(|&c| self.first[c].is_none() || self.second[c].is_none())
            .collect();
        let start = ends[0];
        if self.first[start].is_none() {
            if comp.len() == 2 {
                // A lone layer-2 comparator between two layer-1 free channels
                // acts like the same comparator moved into layer 1.
                return Word { kind: WordKind::Stick, chars: vec![1, 2] };
            }
            let chars = self.walk(start, false);
            Word { kind: WordKind::Tail, chars: canonical_chars(WordKind::Tail, &chars) }
        } else {
            let chars = self.walk(start, true);
            Word { kind: WordKind::Stick, chars: canonical_chars(WordKind::Stick, &chars) }
        }
    }
}

/// Canonical word of a connected network with at most two layers.
pub fn word_of(net: &ComparatorNetwork) -> Result<Word, PrefixError> {
    let graph = TwoLayerGraph::of(net)?;
    let comps = graph.components();
    if comps.len() != 1 {
        return Err(PrefixError::Disconnected);
    }
    Ok(graph.word_of_component(&comps[0]))
}

/// Sentence of a network with at most two layers.
pub fn sentence_of(net: &ComparatorNetwork) -> Result<Sentence, PrefixError> {
    let graph = TwoLayerGraph::of(net)?;
    let words = graph.components().iter().map(|c| graph.word_of_component(c)).collect();
    Ok(Sentence::new(words))
}

/// Canonical two-layer network of a sentence. Word networks are stacked from
/// the bottom up: the first word takes the highest channels, the last word
/// starts at channel 1.
pub fn net_of(sentence: &Sentence) -> Result<ComparatorNetwork, PrefixError> {
    let n = sentence.channels();
    if n > MAX_CHANNELS {
        return Err(PrefixError::TooWide(n));
    }
    let mut l1 = Vec::new();
    let mut l2 = Vec::new();
    let mut offset = 0;
    for word in sentence.words.iter().rev() {
        let (a, b) = word.local_layers();
        l1.extend(a.into_iter().map(|(i, j)| (i + offset, j + offset)));
        l2.extend(b.into_iter().map(|(i, j)| (i + offset, j + offset)));
        offset += word.channels();
    }
    let layers = vec![l1.into_iter().collect::<Layer>(), l2.into_iter().collect::<Layer>()];
    Ok(ComparatorNetwork::new(n, layers).expect("word networks are valid by construction"))
}

/// Sentence of the reflected network, computed symbolically.
pub fn reflect_sentence(s: &Sentence) -> Sentence {
    Sentence::new(s.words.iter().map(Word::reflect).collect())
}

/// Sentence of the reflected network, computed through the network itself.
pub fn reflect_sentence_via_network(s: &Sentence) -> Result<Sentence, PrefixError> {
    sentence_of(&reflect(&net_of(s)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Every two-layer network up to permutation.
    H,
    /// `H` without redundant pairs, the empty network, and networks with an
    /// empty second layer.
    T,
    /// `T` reduced under reflection.
    TPrime,
    /// `H` restricted to maximal first layers.
    G,
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "H" | "h" => Ok(Variant::H),
            "T" | "t" => Ok(Variant::T),
            "Tprime" | "tprime" | "T'" | "TPrime" => Ok(Variant::TPrime),
            "G" | "g" => Ok(Variant::G),
            _ => Err(format!("unknown prefix variant {s:?} (expected H, T, Tprime or G)")),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::H => "H",
            Variant::T => "T",
            Variant::TPrime => "Tprime",
            Variant::G => "G",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixSet {
    pub n: usize,
    pub variant: Variant,
    pub sentences: Vec<Sentence>,
}

impl PrefixSet {
    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

/// All canonical words on up to `n` channels, sorted, with the per-word data
/// the sentence filters need.
struct WordTable {
    words: Vec<Word>,
    channels: Vec<usize>,
    /// Word indices grouped by channel count, each list ascending.
    by_channels: Vec<Vec<u32>>,
    reflected: Vec<u32>,
    free: Vec<usize>,
    redundant_pair: Vec<bool>,
    second_layer_empty: Vec<bool>,
}

impl WordTable {
    fn new(n: usize) -> Self {
        let mut words: Vec<Word> = (1..=n)
            .flat_map(|c| {
                [WordKind::Head, WordKind::Stick, WordKind::Cycle, WordKind::Tail]
                    .into_iter()
                    .flat_map(move |k| enumerate_words(c, k))
            })
            .collect();
        words.sort();
        let index = |w: &Word| words.binary_search(w).expect("reflection stays in table") as u32;
        let reflected = words.iter().map(|w| index(&w.reflect())).collect();
        let mut by_channels = vec![Vec::new(); n + 1];
        for (idx, w) in words.iter().enumerate() {
            by_channels[w.channels()].push(idx as u32);
        }
        Self {
            channels: words.iter().map(Word::channels).collect(),
            free: words.iter().map(Word::free_channels).collect(),
            redundant_pair: words.iter().map(Word::is_redundant_pair).collect(),
            second_layer_empty: words.iter().map(|w| w.second_layer_size() == 0).collect(),
            reflected,
            by_channels,
            words,
        }
    }

    fn keep(&self, n: usize, variant: Variant, ids: &[u32], scratch: &mut Vec<u32>) -> bool {
        match variant {
            Variant::H => true,
            Variant::G => ids.iter().map(|&i| self.free[i as usize]).sum::<usize>() == n % 2,
            Variant::T | Variant::TPrime => {
                if ids.iter().any(|&i| self.redundant_pair[i as usize]) {
                    return false;
                }
                if ids.iter().all(|&i| self.second_layer_empty[i as usize]) {
                    return false;
                }
                if variant == Variant::T {
                    return true;
                }
                scratch.clear();
                scratch.extend(ids.iter().map(|&i| self.reflected[i as usize]));
                scratch.sort_unstable();
                ids <= scratch.as_slice()
            }
        }
    }

    /// Calls `visit` for every multiset of word ids (nondecreasing order)
    /// whose channels sum to `remaining`, extending `stack`.
    fn for_each_multiset(&self, min_id: u32, remaining: usize, stack: &mut Vec<u32>, visit: &mut impl FnMut(&[u32])) {
        if remaining == 0 {
            visit(stack);
            return;
        }
        for c in 1..=remaining {
            let list = &self.by_channels[c];
            let from = list.partition_point(|&id| id < min_id);
            for &id in &list[from..] {
                stack.push(id);
                self.for_each_multiset(id, remaining - c, stack, visit);
                stack.pop();
            }
        }
    }

    /// Top-level split: one independent job per choice of smallest word.
    fn first_words(&self, n: usize) -> Vec<u32> {
        (0..self.words.len() as u32).filter(|&id| self.channels[id as usize] <= n).collect()
    }

    fn count_from(&self, n: usize, variant: Variant, first: u32) -> u64 {
        let mut count = 0u64;
        let mut stack = vec![first];
        let mut scratch = Vec::new();
        let rest = n - self.channels[first as usize];
        self.for_each_multiset(first, rest, &mut stack, &mut |ids| {
            if self.keep(n, variant, ids, &mut scratch) {
                count += 1;
            }
        });
        count
    }

    fn sentences_from(&self, n: usize, variant: Variant, first: u32) -> Vec<Sentence> {
        let mut out = Vec::new();
        let mut stack = vec![first];
        let mut scratch = Vec::new();
        let rest = n - self.channels[first as usize];
        self.for_each_multiset(first, rest, &mut stack, &mut |ids| {
            if self.keep(n, variant, ids, &mut scratch) {
                out.push(Sentence { words: ids.iter().map(|&i| self.words[i as usize].clone()).collect() });
            }
        });
        out.sort_unstable();
        out
    }
}

/// Complete prefix set for `n` channels, sentences in ascending order.
pub fn generate_prefixes(n: usize, variant: Variant) -> PrefixSet {
    assert!(n >= 1, "prefix sets need at least one channel");
    let table = WordTable::new(n);
    let firsts = table.first_words(n);
    #[cfg(feature = "parallel")]
    let chunks: Vec<Vec<Sentence>> = {
        use rayon::prelude::*;
        firsts.par_iter().map(|&f| table.sentences_from(n, variant, f)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let chunks: Vec<Vec<Sentence>> = firsts.iter().map(|&f| table.sentences_from(n, variant, f)).collect();
    // Jobs run in ascending first-word order, so concatenation is sorted.
    let sentences = chunks.into_iter().flatten().collect();
    PrefixSet { n, variant, sentences }
}

/// `|generate_prefixes(n, variant)|` without materializing the sentences.
pub fn count_prefixes_sequential(n: usize, variant: Variant) -> u64 {
    let table = WordTable::new(n);
    table.first_words(n).iter().map(|&f| table.count_from(n, variant, f)).sum()
}

#[cfg(feature = "parallel")]
pub fn count_prefixes_parallel(n: usize, variant: Variant) -> u64 {
    use rayon::prelude::*;
    let table = WordTable::new(n);
    table.first_words(n).par_iter().map(|&f| table.count_from(n, variant, f)).sum()
}

pub fn count_prefixes(n: usize, variant: Variant) -> u64 {
    #[cfg(feature = "parallel")]
    return count_prefixes_parallel(n, variant);
    #[cfg(not(feature = "parallel"))]
    return count_prefixes_sequential(n, variant);
}
