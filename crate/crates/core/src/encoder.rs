//! CNF instance `φ(n, d, s)`: a valid comparator network on `n` channels with
//! `d` layers and at most `s` comparators that sorts every 0-1 input.
//!
//! Variable order is fixed so models decode without the map: all comparator
//! variables `g(k,i,j)` (layer-major, pairs lexicographic), then the channel
//! values `v(x,k,i)` per input, then `used(k,i)`, then the
//! `oneDown`/`oneUp` chains, then cardinality auxiliaries.

use std::collections::BTreeSet;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cardinality::{build_atmost, CardinalityError, FreshVars, Lit};
use crate::netcore::{all_outputs, unsorted_outputs, BitVector, ComparatorNetwork, MAX_EXHAUSTIVE_CHANNELS};
use crate::prefixes::{net_of, PrefixError, Sentence};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodeError {
    #[error("depth and size bounds must be positive (d={d}, s={s})")]
    NonPositive { d: i64, s: i64 },
    #[error("a two-layer prefix needs depth at least 2, got {0}")]
    PrefixTooDeep(usize),
    #[error("prefix covers {got} channels, instance has {expected}")]
    PrefixWidth { expected: usize, got: usize },
    #[error("{0} channels is beyond exhaustive encoding")]
    TooManyChannels(usize),
    #[error(transparent)]
    Prefix(#[from] PrefixError),
    #[error(transparent)]
    Cardinality(#[from] CardinalityError),
}

/// Optional constraint families; everything is on by default.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodeOptions {
    pub redundant_sorts: bool,
    /// The last-layer families φ1 to φ4.
    pub last_layer: bool,
    pub sigma1: bool,
    pub sigma2: bool,
    pub sigma3: bool,
    pub only_unsorted: bool,
    pub prefix: Option<Sentence>,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self {
            redundant_sorts: true,
            last_layer: true,
            sigma1: true,
            sigma2: true,
            sigma3: true,
            only_unsorted: true,
            prefix: None,
        }
    }
}

impl EncodeOptions {
    /// Only validity, cardinality and sorting constraints.
    pub fn basic() -> Self {
        Self {
            redundant_sorts: false,
            last_layer: false,
            sigma1: false,
            sigma2: false,
            sigma3: false,
            only_unsorted: false,
            prefix: None,
        }
    }

    pub fn with_prefix(mut self, prefix: Option<Sentence>) -> Self {
        self.prefix = prefix;
        self
    }
}

/// CNF with flat clause storage.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CnfFormula {
    num_vars: usize,
    lits: Vec<Lit>,
    ends: Vec<usize>,
}

impl CnfFormula {
    pub fn new(num_vars: usize) -> Self {
        Self { num_vars, ..Self::default() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.ends.len()
    }

    pub fn add_clause(&mut self, clause: &[Lit]) {
        assert!(!clause.is_empty(), "empty clause");
        for &l in clause {
            assert!(l != 0 && l.unsigned_abs() as usize <= self.num_vars, "literal {l} out of range");
        }
        self.lits.extend_from_slice(clause);
        self.ends.push(self.lits.len());
    }

    pub fn extend<I, C>(&mut self, clauses: I)
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[Lit]>,
    {
        for c in clauses {
            self.add_clause(c.as_ref());
        }
    }

    pub fn clause(&self, idx: usize) -> &[Lit] {
        let start = if idx == 0 { 0 } else { self.ends[idx - 1] };
        &self.lits[start..self.ends[idx]]
    }

    pub fn clauses(&self) -> impl Iterator<Item = &[Lit]> + '_ {
        (0..self.ends.len()).map(|i| self.clause(i))
    }

    /// `num_vars` may grow past the largest literal seen so far.
    pub fn set_num_vars(&mut self, num_vars: usize) {
        assert!(num_vars >= self.num_vars);
        self.num_vars = num_vars;
    }
}

impl FreshVars for CnfFormula {
    fn fresh_var(&mut self) -> Lit {
        self.num_vars += 1;
        self.num_vars as Lit
    }
}

impl<C: AsRef<[Lit]>> FromIterator<C> for CnfFormula {
    /// Sizes the formula to the largest variable mentioned.
    fn from_iter<T: IntoIterator<Item = C>>(iter: T) -> Self {
        let clauses: Vec<Vec<Lit>> = iter.into_iter().map(|c| c.as_ref().to_vec()).collect();
        let max = clauses.iter().flatten().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0);
        let mut f = CnfFormula::new(max);
        f.extend(clauses);
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    G { k: usize, i: usize, j: usize },
    V { input: usize, k: usize, i: usize },
    Used { k: usize, i: usize },
    OneDown { k: usize, i: usize, j: usize },
    OneUp { k: usize, i: usize, j: usize },
}

/// Variable layout of one instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarMap {
    n: usize,
    d: usize,
    /// Layers `1..=base` are fixed by a prefix.
    base: usize,
    inputs: Vec<BitVector>,
    pairs: usize,
    v_start: usize,
    used_start: usize,
    /// Offset of each pair `(i, j)` with `j >= i + 2` among such pairs.
    wide_index: Vec<Option<usize>>,
    wide_pairs: usize,
    down_start: Option<usize>,
    up_start: usize,
    num_vars: usize,
}

impl VarMap {
    pub fn new(n: usize, d: usize, base: usize, inputs: Vec<BitVector>, chains: bool) -> Self {
        assert!(base <= d);
        let pairs = n * n.saturating_sub(1) / 2;
        let v_start = 1 + d * pairs;
        let used_start = v_start + inputs.len() * (d - base + 1) * n;
        let mut wide_index = vec![None; (n + 1) * (n + 1)];
        let mut wide_pairs = 0;
        for i in 1..=n {
            for j in i + 2..=n {
                wide_index[i * (n + 1) + j] = Some(wide_pairs);
                wide_pairs += 1;
            }
        }
        let chain_start = used_start + d * n;
        let chain_vars = if chains { (d - base) * wide_pairs } else { 0 };
        Self {
            n,
            d,
            base,
            inputs,
            pairs,
            v_start,
            used_start,
            wide_index,
            wide_pairs,
            down_start: chains.then_some(chain_start),
            up_start: chain_start + chain_vars,
            num_vars: chain_start + 2 * chain_vars - 1,
        }
    }

    pub fn channels(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.d
    }

    /// Number of leading layers fixed by a prefix.
    pub fn fixed_layers(&self) -> usize {
        self.base
    }

    pub fn inputs(&self) -> &[BitVector] {
        &self.inputs
    }

    /// Variables owned by the map; cardinality auxiliaries come after.
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    fn pair_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(1 <= i && i < j && j <= self.n);
        // Pairs before row i, then the offset within row i.
        (i - 1) * (2 * self.n - i) / 2 + (j - i - 1)
    }

    pub fn g(&self, k: usize, i: usize, j: usize) -> Lit {
        assert!((1..=self.d).contains(&k), "layer {k} out of range");
        (1 + (k - 1) * self.pairs + self.pair_index(i, j)) as Lit
    }

    /// Value on channel `i` after layer `k` for input `input`;
    /// `k` ranges over `fixed_layers()..=depth()`.
    pub fn v(&self, input: usize, k: usize, i: usize) -> Lit {
        assert!(k >= self.base && k <= self.d && input < self.inputs.len());
        (self.v_start + (input * (self.d - self.base + 1) + (k - self.base)) * self.n + (i - 1)) as Lit
    }

    pub fn used(&self, k: usize, i: usize) -> Lit {
        assert!((1..=self.d).contains(&k) && (1..=self.n).contains(&i));
        (self.used_start + (k - 1) * self.n + (i - 1)) as Lit
    }

    fn chain(&self, start: usize, k: usize, i: usize, j: usize) -> Lit {
        assert!(k > self.base && k <= self.d, "no chain variables in layer {k}");
        if j == i + 1 {
            return self.g(k, i, j);
        }
        let w = self.wide_index[i * (self.n + 1) + j].expect("i < j");
        (start + (k - self.base - 1) * self.wide_pairs + w) as Lit
    }

    /// `g(k,i,i+1) ∨ ... ∨ g(k,i,j)`; requires `i < j`.
    pub fn one_down(&self, k: usize, i: usize, j: usize) -> Lit {
        self.chain(self.down_start.expect("chains not allocated"), k, i, j)
    }

    /// `g(k,i,j) ∨ ... ∨ g(k,j-1,j)`; requires `i < j`.
    pub fn one_up(&self, k: usize, i: usize, j: usize) -> Lit {
        self.down_start.expect("chains not allocated");
        self.chain(self.up_start, k, i, j)
    }

    pub fn has_chains(&self) -> bool {
        self.down_start.is_some()
    }

    /// Every variable with its role, in id order.
    pub fn roles(&self) -> Vec<(Lit, VarRole)> {
        let mut out = Vec::with_capacity(self.num_vars);
        for k in 1..=self.d {
            for i in 1..=self.n {
                for j in i + 1..=self.n {
                    out.push((self.g(k, i, j), VarRole::G { k, i, j }));
                }
            }
        }
        for input in 0..self.inputs.len() {
            for k in self.base..=self.d {
                for i in 1..=self.n {
                    out.push((self.v(input, k, i), VarRole::V { input, k, i }));
                }
            }
        }
        for k in 1..=self.d {
            for i in 1..=self.n {
                out.push((self.used(k, i), VarRole::Used { k, i }));
            }
        }
        if self.has_chains() {
            for down in [true, false] {
                for k in self.base + 1..=self.d {
                    for i in 1..=self.n {
                        for j in i + 2..=self.n {
                            out.push(if down {
                                (self.one_down(k, i, j), VarRole::OneDown { k, i, j })
                            } else {
                                (self.one_up(k, i, j), VarRole::OneUp { k, i, j })
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Text map: one `role indices id` line per variable.
    pub fn write_map(&self, out: &mut impl Write) -> io::Result<()> {
        for (id, role) in self.roles() {
            match role {
                VarRole::G { k, i, j } => writeln!(out, "g {k} {i} {j} {id}")?,
                VarRole::V { input, k, i } => writeln!(out, "v {} {k} {i} {id}", self.inputs[input])?,
                VarRole::Used { k, i } => writeln!(out, "used {k} {i} {id}")?,
                VarRole::OneDown { k, i, j } => writeln!(out, "oneDown {k} {i} {j} {id}")?,
                VarRole::OneUp { k, i, j } => writeln!(out, "oneUp {k} {i} {j} {id}")?,
            }
        }
        Ok(())
    }

    fn comparators_at(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..=self.n).filter(move |&j| j != i).map(move |j| (i.min(j), i.max(j)))
    }
}

/// `c ⇔ a ∨ b`
fn define_or(c: Lit, a: Lit, b: Lit, out: &mut Vec<Vec<Lit>>) {
    out.push(vec![-a, c]);
    out.push(vec![-b, c]);
    out.push(vec![-c, a, b]);
}

/// Each channel is used at most once per free layer.
pub fn encode_valid(vm: &VarMap) -> Vec<Vec<Lit>> {
    let mut out = Vec::new();
    for k in vm.base + 1..=vm.d {
        for i in 1..=vm.n {
            let incident: Vec<Lit> = vm.comparators_at(i).map(|(a, b)| vm.g(k, a, b)).collect();
            for (x, &p) in incident.iter().enumerate() {
                for &q in &incident[x + 1..] {
                    out.push(vec![-p, -q]);
                }
            }
        }
    }
    out
}

/// `used(k,i) ⇔` some comparator of layer `k` touches channel `i`.
pub fn encode_used(vm: &VarMap) -> Vec<Vec<Lit>> {
    let mut out = Vec::new();
    for k in 1..=vm.d {
        for i in 1..=vm.n {
            let u = vm.used(k, i);
            let mut long = vec![-u];
            for (a, b) in vm.comparators_at(i) {
                let g = vm.g(k, a, b);
                out.push(vec![-g, u]);
                long.push(g);
            }
            out.push(long);
        }
    }
    out
}

/// Defining clauses of the `oneDown`/`oneUp` chains.
pub fn encode_chains(vm: &VarMap) -> Vec<Vec<Lit>> {
    let mut out = Vec::new();
    if !vm.has_chains() {
        return out;
    }
    for k in vm.base + 1..=vm.d {
        for i in 1..=vm.n {
            for j in i + 2..=vm.n {
                define_or(vm.one_down(k, i, j), vm.one_down(k, i, j - 1), vm.g(k, i, j), &mut out);
            }
        }
        for j in 1..=vm.n {
            for i in (1..j.saturating_sub(1)).rev() {
                define_or(vm.one_up(k, i, j), vm.one_up(k, i + 1, j), vm.g(k, i, j), &mut out);
            }
        }
    }
    out
}

/// Input `input` is mapped onto its sorted version by the free layers.
pub fn encode_sorts(vm: &VarMap, input: usize) -> Vec<Vec<Lit>> {
    let x = vm.inputs[input];
    let y = x.sorted();
    let n = vm.n;
    let mut out = Vec::new();
    for i in 1..=n {
        let v0 = vm.v(input, vm.base, i);
        out.push(vec![if x.get(i) { v0 } else { -v0 }]);
        let vd = vm.v(input, vm.d, i);
        out.push(vec![if y.get(i) { vd } else { -vd }]);
    }
    for k in vm.base + 1..=vm.d {
        for i in 1..=n {
            let now = vm.v(input, k, i);
            let before = vm.v(input, k - 1, i);
            let used = vm.used(k, i);
            out.push(vec![used, -before, now]);
            out.push(vec![used, before, -now]);
            for j in (1..=n).filter(|&j| j != i) {
                let other = vm.v(input, k - 1, j);
                if j < i {
                    // Max lands on the higher channel.
                    let g = vm.g(k, j, i);
                    out.push(vec![-g, now, -before]);
                    out.push(vec![-g, now, -other]);
                    out.push(vec![-g, -now, before, other]);
                } else {
                    let g = vm.g(k, i, j);
                    out.push(vec![-g, -now, before]);
                    out.push(vec![-g, -now, other]);
                    out.push(vec![-g, now, -before, -other]);
                }
            }
        }
    }
    out
}

/// Window propagation for one input: ones that cannot move down stay,
/// zeros that cannot move up stay, and the sorted margins never change.
pub fn encode_redundant_sorts(vm: &VarMap, input: usize) -> Vec<Vec<Lit>> {
    let x = vm.inputs[input];
    let n = vm.n;
    let lz = x.leading_zeros();
    let to = x.trailing_ones();
    let mut out = Vec::new();
    if lz + to == n {
        return out;
    }
    let (t, last) = (lz + 1, n - to);
    for k in vm.base + 1..vm.d {
        for i in 1..t {
            out.push(vec![-vm.v(input, k, i)]);
        }
        for i in last + 1..=n {
            out.push(vec![vm.v(input, k, i)]);
        }
    }
    for k in vm.base + 1..=vm.d {
        for i in t..=last {
            let (before, now) = (vm.v(input, k - 1, i), vm.v(input, k, i));
            let mut keep_one = vec![-before, now];
            if i < last {
                keep_one.push(vm.one_down(k, i, last));
            }
            out.push(keep_one);
            let mut keep_zero = vec![before, -now];
            if i > t {
                keep_zero.push(vm.one_up(k, t, i));
            }
            out.push(keep_zero);
        }
    }
    out
}

/// φ1 to φ4. Only φ1 applies below depth 2.
pub fn encode_last_layers(vm: &VarMap) -> Vec<Vec<Lit>> {
    let (n, d) = (vm.n, vm.d);
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    for i in 1..=n {
        for j in i + 2..=n {
            out.push(vec![-vm.g(d, i, j)]);
        }
    }
    if d < 2 {
        return out;
    }
    let p = d - 1;
    for i in 1..=n {
        for j in i + 4..=n {
            out.push(vec![-vm.g(p, i, j)]);
        }
    }
    for i in 1..=n.saturating_sub(3) {
        out.push(vec![-vm.g(p, i, i + 3), vm.g(d, i, i + 1)]);
        out.push(vec![-vm.g(p, i, i + 3), vm.g(d, i + 2, i + 3)]);
    }
    for i in 1..=n.saturating_sub(2) {
        out.push(vec![-vm.g(p, i, i + 2), vm.g(d, i, i + 1), vm.g(d, i + 1, i + 2)]);
    }
    out
}

/// σ1 (no repeated comparator), σ2 (eager placement), σ3 (every adjacent
/// pair compared somewhere), as selected by `opts`.
pub fn encode_sigma(vm: &VarMap, opts: &EncodeOptions) -> Vec<Vec<Lit>> {
    let (n, d) = (vm.n, vm.d);
    let mut out = Vec::new();
    let pairs = || (1..=n).flat_map(move |i| (i + 1..=n).map(move |j| (i, j)));
    if opts.sigma1 {
        for k in 1..d {
            for (i, j) in pairs() {
                out.push(vec![-vm.g(k, i, j), -vm.g(k + 1, i, j)]);
            }
        }
    }
    if opts.sigma2 {
        for k in 2..=d {
            for (i, j) in pairs() {
                out.push(vec![-vm.g(k, i, j), vm.used(k - 1, i), vm.used(k - 1, j)]);
            }
        }
    }
    if opts.sigma3 && d > 0 {
        for i in 1..n {
            out.push((1..=d).map(|k| vm.g(k, i, i + 1)).collect());
        }
    }
    out
}

/// Units fixing layers 1 and 2 to `net_of(prefix)`.
pub fn encode_prefix(vm: &VarMap, prefix_net: &ComparatorNetwork) -> Vec<Vec<Lit>> {
    let mut out = Vec::new();
    for (idx, layer) in prefix_net.layers().iter().enumerate() {
        let k = idx + 1;
        for i in 1..=vm.n {
            for j in i + 1..=vm.n {
                let g = vm.g(k, i, j);
                let present = layer.comparators().iter().any(|c| c.i == i && c.j == j);
                out.push(vec![if present { g } else { -g }]);
            }
        }
    }
    out
}

/// The inputs whose sorting is encoded, in ascending order.
pub fn instance_inputs(n: usize, prefix_net: Option<&ComparatorNetwork>, only_unsorted: bool) -> Vec<BitVector> {
    let set: BTreeSet<BitVector> = match (prefix_net, only_unsorted) {
        (Some(p), true) => unsorted_outputs(p),
        (Some(p), false) => all_outputs(p),
        (None, _) => all_outputs(&ComparatorNetwork::empty(n))
            .into_iter()
            .filter(|x| !only_unsorted || !x.is_sorted())
            .collect(),
    };
    set.into_iter().collect()
}

/// Builds `φ(n, d, s)` with the families enabled in `opts`. A bound `s`
/// above `d * floor(n / 2)` leaves size unconstrained.
pub fn build_instance(n: usize, d: i64, s: i64, opts: &EncodeOptions) -> Result<(CnfFormula, VarMap), EncodeError> {
    if d <= 0 || s <= 0 {
        return Err(EncodeError::NonPositive { d, s });
    }
    if n > MAX_EXHAUSTIVE_CHANNELS {
        return Err(EncodeError::TooManyChannels(n));
    }
    let d = d as usize;
    let prefix_net = match &opts.prefix {
        Some(sentence) => {
            if d < 2 {
                return Err(EncodeError::PrefixTooDeep(d));
            }
            let net = net_of(sentence)?;
            if net.channels() != n {
                return Err(EncodeError::PrefixWidth { expected: n, got: net.channels() });
            }
            Some(net)
        }
        None => None,
    };
    let base = if prefix_net.is_some() { 2 } else { 0 };
    let inputs = instance_inputs(n, prefix_net.as_ref(), opts.only_unsorted);
    let vm = VarMap::new(n, d, base, inputs, opts.redundant_sorts);
    let mut cnf = CnfFormula::new(vm.num_vars());

    cnf.extend(encode_valid(&vm));
    if let Some(net) = &prefix_net {
        cnf.extend(encode_prefix(&vm, net));
    }
    cnf.extend(encode_used(&vm));
    cnf.extend(encode_chains(&vm));
    for input in 0..vm.inputs.len() {
        cnf.extend(encode_sorts(&vm, input));
        if opts.redundant_sorts {
            cnf.extend(encode_redundant_sorts(&vm, input));
        }
    }
    if opts.last_layer {
        cnf.extend(encode_last_layers(&vm));
    }
    cnf.extend(encode_sigma(&vm, opts));

    let all_g: Vec<Lit> = (1..=d)
        .flat_map(|k| (1..=n).flat_map(move |i| (i + 1..=n).map(move |j| (k, i, j))))
        .map(|(k, i, j)| vm.g(k, i, j))
        .collect();
    let card = build_atmost(&all_g, s, &mut cnf)?;
    cnf.extend(&card.clauses);
    if let Some(c) = card.c_target {
        cnf.add_clause(&[-c]);
    }
    Ok((cnf, vm))
}
