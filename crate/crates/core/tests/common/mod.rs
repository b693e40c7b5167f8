#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use serde::Deserialize;
use sortnet::netcore::{permute_untangle, ComparatorNetwork, Layer};

/// Every set of pairwise disjoint comparators on channels `1..=n`.
pub fn matchings(n: usize) -> Vec<Vec<(usize, usize)>> {
    fn go(free: &[usize], acc: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        let Some((&first, rest)) = free.split_first() else {
            out.push(acc.clone());
            return;
        };
        // `first` stays unmatched.
        go(rest, acc, out);
        for (idx, &partner) in rest.iter().enumerate() {
            let remaining: Vec<usize> = rest.iter().enumerate().filter(|&(k, _)| k != idx).map(|(_, &c)| c).collect();
            acc.push((first, partner));
            go(&remaining, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    go(&(1..=n).collect::<Vec<_>>(), &mut Vec::new(), &mut out);
    out
}

pub fn layers(n: usize) -> Vec<Layer> {
    matchings(n).into_iter().map(|m| m.into_iter().collect()).collect()
}

/// A second-layer comparator between two channels idle in the first layer
/// is moved into the first layer.
pub fn normalize(n: usize, first: &[(usize, usize)], second: &[(usize, usize)]) -> ComparatorNetwork {
    let busy: BTreeSet<usize> = first.iter().flat_map(|&(i, j)| [i, j]).collect();
    let (moved, kept): (Vec<_>, Vec<_>) =
        second.iter().partition(|&&(i, j)| !busy.contains(&i) && !busy.contains(&j));
    let l1: Layer = first.iter().chain(&moved).copied().collect();
    let l2: Layer = kept.into_iter().collect();
    ComparatorNetwork::new(n, vec![l1, l2]).unwrap()
}

pub fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// All two-layer networks on `n` channels, split into orbits under channel
/// relabeling. Panics if an orbit leaves the enumerated universe or two
/// orbits overlap.
pub fn permutation_classes(n: usize) -> Vec<Vec<ComparatorNetwork>> {
    let ms = matchings(n);
    let universe: BTreeSet<ComparatorNetwork> =
        ms.iter().flat_map(|a| ms.iter().map(move |b| normalize(n, a, b))).collect();
    let mut visited: HashSet<ComparatorNetwork> = HashSet::new();
    let mut out = Vec::new();
    for net in &universe {
        if visited.contains(net) {
            continue;
        }
        let mut class = BTreeSet::new();
        let mut perm: Vec<usize> = (1..=n).collect();
        loop {
            let image = permute_untangle(net, &perm).unwrap();
            assert!(universe.contains(&image), "relabeling left the universe: {image}");
            class.insert(image);
            if !next_permutation(&mut perm) {
                break;
            }
        }
        for m in &class {
            assert!(visited.insert(m.clone()), "network in two classes: {m}");
        }
        out.push(class.into_iter().collect());
    }
    assert_eq!(visited.len(), universe.len());
    out
}

#[derive(Deserialize)]
pub struct Fixture {
    pub name: String,
    pub group: String,
    pub n: usize,
    pub layers: Vec<Vec<[usize; 2]>>,
    pub depth: Option<usize>,
    pub size: Option<usize>,
    pub prefix: Option<String>,
}

impl Fixture {
    pub fn network(&self) -> ComparatorNetwork {
        let layers = self.layers.iter().map(|l| l.iter().map(|c| (c[0], c[1])).collect::<Layer>()).collect();
        ComparatorNetwork::new(self.n, layers).unwrap_or_else(|e| panic!("{}: {e}", self.name))
    }
}

pub fn fixtures() -> Vec<Fixture> {
    serde_json::from_str(include_str!("../fixtures/networks.json")).unwrap()
}

/// Expected prefix-set size from the count table.
pub fn expected_count(variant: sortnet::prefixes::Variant, n: usize) -> u64 {
    let t: serde_json::Value = serde_json::from_str(include_str!("../fixtures/prefix_counts.json")).unwrap();
    let col = t["n"].as_array().unwrap().iter().position(|v| v.as_u64() == Some(n as u64)).unwrap();
    t[variant.to_string()][col].as_u64().unwrap()
}
