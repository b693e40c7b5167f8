mod common;

use std::collections::BTreeSet;

use common::{fixtures, Fixture};
use sortnet::netcore::{is_sorting_network, reflect, ComparatorNetwork};
use sortnet::prefixes::{enumerate_words, generate_prefixes, net_of, sentence_of, word_of, Sentence, Variant, WordKind};

fn named(name: &str) -> ComparatorNetwork {
    fixtures().into_iter().find(|f| f.name == name).unwrap().network()
}

fn s(text: &str) -> Sentence {
    text.parse().unwrap()
}

#[test]
fn optimal_networks_sort_with_stated_dimensions() {
    let optimal: Vec<Fixture> = fixtures().into_iter().filter(|f| f.group == "optimal").collect();
    assert_eq!(optimal.len(), 17);
    for f in &optimal {
        let net = f.network();
        assert!(is_sorting_network(&net), "{}", f.name);
        assert_eq!(Some(net.depth()), f.depth, "{}", f.name);
        assert_eq!(Some(net.size()), f.size, "{}", f.name);
    }
}

#[test]
fn eleven_channel_networks_start_with_their_prefix() {
    let mut seen = BTreeSet::new();
    for f in fixtures().into_iter().filter(|f| f.prefix.is_some()) {
        let net = f.network();
        let prefix = s(f.prefix.as_deref().unwrap());
        assert_eq!(sentence_of(&net.prefix(2)).unwrap(), prefix, "{}", f.name);
        assert_eq!(net.prefix(2), net_of(&prefix).unwrap(), "{}", f.name);
        seen.insert(prefix);
    }
    assert_eq!(seen.len(), 5);
    let reduced: BTreeSet<Sentence> = generate_prefixes(11, Variant::TPrime).sentences.into_iter().collect();
    assert!(seen.is_subset(&reduced));
}

#[test]
fn equivalent_pair_shares_a_sentence() {
    let a = named("equivalent-pair-a");
    let b = named("equivalent-pair-b");
    let expected = s("(012,0120,1221,1221c)");
    assert_eq!(sentence_of(&a).unwrap(), expected);
    assert_eq!(sentence_of(&b).unwrap(), expected);
    assert_eq!(net_of(&expected).unwrap(), a);
}

#[test]
fn reflection_and_canonical_form() {
    let original = named("reflection-original");
    let mirrored = named("reflection-mirrored");
    let canonical = named("reflection-canonical");
    assert_eq!(reflect(&original), mirrored);
    let sentence = sentence_of(&mirrored).unwrap();
    assert_eq!(sentence.to_string(), "(0120,021,1221c,2112)");
    assert_eq!(net_of(&sentence).unwrap(), canonical);
}

#[test]
fn word_tables_are_complete() {
    for (group, kind, sizes) in [
        ("head-words", WordKind::Head, vec![1, 3, 5]),
        ("stick-words", WordKind::Stick, vec![2, 4, 6]),
        ("cycle-words", WordKind::Cycle, vec![2, 4, 6, 8]),
        ("tail-words", WordKind::Tail, vec![4, 6, 8]),
    ] {
        let drawn: BTreeSet<String> = fixtures()
            .iter()
            .filter(|f| f.group == group)
            .map(|f| word_of(&f.network()).unwrap())
            .inspect(|w| assert_eq!(w.kind(), kind))
            .map(|w| w.to_string())
            .collect();
        let listed: BTreeSet<String> =
            sizes.iter().flat_map(|&c| enumerate_words(c, kind)).map(|w| w.to_string()).collect();
        assert_eq!(drawn, listed, "{group}");
    }
}

#[test]
fn five_channel_prefixes_are_complete() {
    let drawn: Vec<Sentence> = fixtures()
        .iter()
        .filter(|f| f.group == "prefixes-5")
        .map(|f| sentence_of(&f.network()).unwrap())
        .collect();
    let unique: BTreeSet<Sentence> = drawn.iter().cloned().collect();
    assert_eq!(drawn.len(), 22);
    assert_eq!(unique.len(), 22);
    let generated: BTreeSet<Sentence> = generate_prefixes(5, Variant::H).sentences.into_iter().collect();
    assert_eq!(unique, generated);
}

#[test]
fn example_network() {
    let net = named("example-0");
    assert_eq!((net.depth(), net.size()), (3, 5));
    assert!(is_sorting_network(&net));
}
