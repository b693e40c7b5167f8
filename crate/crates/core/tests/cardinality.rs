use sortnet::cardinality::{build_atmost, count_aux_size, Lit};
use sortnet::encoder::CnfFormula;
use sortnet::solver::{solve, unit_propagate, Backend, Propagation, SolveStatus, SolverConfig};

fn atmost(m: usize, s: usize) -> (CnfFormula, Vec<Lit>) {
    let mut cnf = CnfFormula::new(m);
    let inputs: Vec<Lit> = (1..=m as Lit).collect();
    let r = build_atmost(&inputs, s as i64, &mut cnf).unwrap();
    cnf.extend(&r.clauses);
    if let Some(c) = r.c_target {
        cnf.add_clause(&[-c]);
    }
    (cnf, r.output_lits)
}

fn assumptions(m: usize, bits: u32) -> Vec<Lit> {
    (0..m).map(|i| if bits >> i & 1 == 1 { i as Lit + 1 } else { -(i as Lit + 1) }).collect()
}

#[test]
fn truth_table_up_to_ten_inputs() {
    for m in 1..=10 {
        for s in 0..=m {
            let (cnf, outputs) = atmost(m, s);
            for bits in 0u32..(1 << m) {
                let ones = bits.count_ones() as usize;
                match unit_propagate(&cnf, &assumptions(m, bits)) {
                    Propagation::Conflict => assert!(ones > s, "m={m} s={s} bits={bits:b}"),
                    Propagation::Assigned(vals) => {
                        assert!(ones <= s, "m={m} s={s} bits={bits:b} accepted");
                        // Fixed inputs determine every auxiliary.
                        assert!(vals[1..].iter().all(Option::is_some), "m={m} s={s} bits={bits:b}");
                        for (t, &y) in outputs.iter().enumerate() {
                            assert_eq!(vals[y as usize], Some(ones > t), "m={m} s={s} t={t}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn propagation_forces_remaining_inputs_false() {
    for m in 2..=10 {
        for s in 0..m {
            let (cnf, _) = atmost(m, s);
            for bits in (0u32..(1 << m)).filter(|b| b.count_ones() as usize == s) {
                let set: Vec<Lit> = (0..m).filter(|&i| bits >> i & 1 == 1).map(|i| i as Lit + 1).collect();
                let Propagation::Assigned(vals) = unit_propagate(&cnf, &set) else {
                    panic!("m={m} s={s} bits={bits:b} conflicts");
                };
                for i in 0..m {
                    if bits >> i & 1 == 0 {
                        assert_eq!(vals[i + 1], Some(false), "m={m} s={s} bits={bits:b} input {}", i + 1);
                    }
                }
            }
        }
    }
}

#[test]
fn solver_respects_bound() {
    let cfg = SolverConfig::new(Backend::Builtin, 30.0);
    for m in 1..=8 {
        for s in 0..m {
            for k in 0..=m {
                // At least k of the inputs, namely the first k.
                let (mut cnf, _) = atmost(m, s);
                for i in 1..=k as Lit {
                    cnf.add_clause(&[i]);
                }
                let out = solve(&cnf, &cfg).unwrap();
                let expected = if k <= s { SolveStatus::Sat } else { SolveStatus::Unsat };
                assert_eq!(out.status, expected, "m={m} s={s} k={k}");
            }
        }
    }
}

#[test]
fn size_grows_slowly() {
    // O(m log^2 s) gates; a generous check against m * (log2 m + 1)^2.
    for m in [16usize, 64, 256, 1024] {
        let lg = (usize::BITS - m.leading_zeros()) as usize;
        for s in [1usize, m / 8, m / 2, m - 1] {
            let (vars, clauses) = count_aux_size(m, s);
            assert!(vars <= m * lg * lg, "m={m} s={s} vars={vars}");
            assert_eq!(clauses, 3 * vars);
        }
    }
}
