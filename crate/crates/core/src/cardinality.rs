//! At-most-`s` constraints through a pruned odd-even merge counting network.
//!
//! The inputs are sorted in decreasing order by a recursive odd-even merge
//! sort over Boolean gates (`max = a ∨ b`, `min = a ∧ b`). Only the first
//! `s + 1` outputs are ever needed, so every recursive level keeps just that
//! many; gates outside the cone of those outputs are never materialized.
//! Output `y_t` is true iff at least `t` inputs are true, and the caller
//! enforces the bound with the unit clause `¬y_{s+1}`.

use thiserror::Error;

/// DIMACS literal: a nonzero signed variable id.
pub type Lit = i32;

/// Source of fresh variable ids.
pub trait FreshVars {
    fn fresh_var(&mut self) -> Lit;
}

/// Standalone allocator continuing after `next - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarCounter {
    pub next: Lit,
}

impl VarCounter {
    pub fn after(last_used: Lit) -> Self {
        Self { next: last_used + 1 }
    }
}

impl FreshVars for VarCounter {
    fn fresh_var(&mut self) -> Lit {
        let v = self.next;
        self.next += 1;
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CardinalityError {
    #[error("negative bound {0}")]
    NegativeBound(i64),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CardinalityResult {
    /// `y_1, ..., y_k` with `k = min(s + 1, inputs)`, in decreasing order.
    pub output_lits: Vec<Lit>,
    pub clauses: Vec<Vec<Lit>>,
    /// `y_{s+1}`; `None` when the bound cannot be exceeded.
    pub c_target: Option<Lit>,
}

#[derive(Debug, Clone, Copy)]
enum Node {
    Input(Lit),
    Or(usize, usize),
    And(usize, usize),
}

/// Gate graph built lazily; variables are assigned only on emission.
#[derive(Default)]
struct Arena {
    nodes: Vec<Node>,
}

impl Arena {
    fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn compare(&mut self, a: usize, b: usize) -> (usize, usize) {
        (self.push(Node::Or(a, b)), self.push(Node::And(a, b)))
    }

    /// Top `k` of the decreasing merge of two decreasing sequences.
    fn merge(&mut self, a: &[usize], b: &[usize], k: usize) -> Vec<usize> {
        if k == 0 {
            return Vec::new();
        }
        let a = &a[..a.len().min(k)];
        let b = &b[..b.len().min(k)];
        if a.is_empty() {
            return b.to_vec();
        }
        if b.is_empty() {
            return a.to_vec();
        }
        if a.len() == 1 && b.len() == 1 {
            let (hi, lo) = self.compare(a[0], b[0]);
            let mut out = vec![hi, lo];
            out.truncate(k);
            return out;
        }
        let odd = |x: &[usize]| x.iter().step_by(2).copied().collect::<Vec<_>>();
        let even = |x: &[usize]| x.iter().skip(1).step_by(2).copied().collect::<Vec<_>>();
        let v = self.merge(&odd(a), &odd(b), k / 2 + 1);
        let w = self.merge(&even(a), &even(b), k / 2);
        let mut z = vec![v[0]];
        let mut i = 0;
        while z.len() < k {
            match (w.get(i), v.get(i + 1)) {
                (Some(&x), Some(&y)) => {
                    let (hi, lo) = self.compare(x, y);
                    z.push(hi);
                    z.push(lo);
                }
                (Some(&x), None) => z.push(x),
                (None, Some(&y)) => z.push(y),
                (None, None) => break,
            }
            i += 1;
        }
        z.truncate(k);
        z
    }

    fn sort(&mut self, xs: &[usize], k: usize) -> Vec<usize> {
        if xs.len() <= 1 {
            let mut out = xs.to_vec();
            out.truncate(k);
            return out;
        }
        let (left, right) = xs.split_at(xs.len() / 2);
        let l = self.sort(left, k);
        let r = self.sort(right, k);
        self.merge(&l, &r, k)
    }
}

struct Emitter<'a, A: FreshVars> {
    arena: &'a Arena,
    lits: Vec<Option<Lit>>,
    clauses: Vec<Vec<Lit>>,
    alloc: &'a mut A,
}

impl<A: FreshVars> Emitter<'_, A> {
    fn lit(&mut self, node: usize) -> Lit {
        if let Some(l) = self.lits[node] {
            return l;
        }
        let l = match self.arena.nodes[node] {
            Node::Input(l) => l,
            Node::Or(a, b) => {
                let (la, lb) = (self.lit(a), self.lit(b));
                let c = self.alloc.fresh_var();
                self.clauses.push(vec![-la, c]);
                self.clauses.push(vec![-lb, c]);
                self.clauses.push(vec![-c, la, lb]);
                c
            }
            Node::And(a, b) => {
                let (la, lb) = (self.lit(a), self.lit(b));
                let c = self.alloc.fresh_var();
                self.clauses.push(vec![-la, -lb, c]);
                self.clauses.push(vec![-c, la]);
                self.clauses.push(vec![-c, lb]);
                c
            }
        };
        self.lits[node] = Some(l);
        l
    }
}

/// Counting network for `sum(inputs) <= s`. The unit clause `¬c_target`
/// is left to the caller.
pub fn build_atmost<A: FreshVars>(inputs: &[Lit], s: i64, alloc: &mut A) -> Result<CardinalityResult, CardinalityError> {
    if s < 0 {
        return Err(CardinalityError::NegativeBound(s));
    }
    let s = s as usize;
    if s >= inputs.len() {
        return Ok(CardinalityResult::default());
    }
    let mut arena = Arena::default();
    let leaves: Vec<usize> = inputs.iter().map(|&l| arena.push(Node::Input(l))).collect();
    let outputs = arena.sort(&leaves, s + 1);
    let mut emitter = Emitter { lits: vec![None; arena.nodes.len()], arena: &arena, clauses: Vec::new(), alloc };
    let output_lits: Vec<Lit> = outputs.iter().map(|&o| emitter.lit(o)).collect();
    Ok(CardinalityResult { c_target: Some(output_lits[s]), output_lits, clauses: emitter.clauses })
}

/// Auxiliary variables and clauses `build_atmost` adds for `num_inputs`
/// inputs and bound `s` (the caller's unit clause not included).
pub fn count_aux_size(num_inputs: usize, s: usize) -> (usize, usize) {
    let inputs: Vec<Lit> = (1..=num_inputs as Lit).collect();
    let mut alloc = VarCounter::after(num_inputs as Lit);
    let result = build_atmost(&inputs, s as i64, &mut alloc).expect("nonnegative bound");
    ((alloc.next - 1) as usize - num_inputs, result.clauses.len())
}
