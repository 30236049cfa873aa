//! Exhaustive checks of aggregate propagation against the expanded formula
//! semantics: for every function and relation, over all interpretation
//! pairs of the condition atoms, the shortcut evaluation must agree with
//! the reduct of the expansion.

mod common;

use common::{aggregate, check_exhaustive, cond_atom, constant, int, subsets};
use mground::aggregates::{propagate_check, PropagateMode, DEFAULT_SUBSET_SUM_CAP};
use mground::ground::{AtomId, AtomSet, AtomTable, GroundFormula, GroundRule};
use mground::oracle::{enumerate_stable, expand_aggregates, translate_ferraris, DEFAULT_ATOM_CAP};
use mground::syntax::{AggFunc, Atom, Rel, Term};

const FUNCS: [AggFunc; 4] = [AggFunc::Count, AggFunc::Sum, AggFunc::SumPlus, AggFunc::SumMinus];
const RELS: [Rel; 6] = [Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge, Rel::Eq, Rel::Ne];

#[test]
fn every_function_and_relation_matches_the_expansion() {
    let mut total = 0;
    for func in FUNCS {
        for rel in RELS {
            for bound in [-1, 0, 1, 2] {
                // four distinct elements with mixed weights and one shared tuple
                let mut table = AtomTable::new();
                let c: Vec<AtomId> = (0..4).map(|i| cond_atom(&mut table, i)).collect();
                let elems = vec![
                    (vec![int(1)], vec![c[0]]),
                    (vec![int(-1)], vec![c[1]]),
                    (vec![int(2), constant("x")], vec![c[2]]),
                    (vec![int(1)], vec![c[3]]), // same tuple as the first
                ];
                total += check_exhaustive(&aggregate(func, rel, bound, &elems), &c);
            }
        }
    }
    assert!(total > 0);
}

#[test]
fn five_distinct_elements_with_conditions_in_pairs() {
    for func in FUNCS {
        for rel in RELS {
            let mut table = AtomTable::new();
            let c: Vec<AtomId> = (0..3).map(|i| cond_atom(&mut table, i)).collect();
            // five elements over a three-atom condition pool, some with
            // two-atom conditions
            let elems = vec![
                (vec![int(2)], vec![c[0]]),
                (vec![int(-2)], vec![c[1]]),
                (vec![int(1), constant("y")], vec![c[0], c[1]]),
                (vec![constant("z")], vec![c[2]]), // weight 0
                (vec![int(3)], vec![c[1], c[2]]),
            ];
            check_exhaustive(&aggregate(func, rel, 1, &elems), &c);
        }
    }
}

#[test]
fn non_integer_bounds_are_constant() {
    for func in FUNCS {
        for rel in RELS {
            for bound in [Term::constant("k"), Term::Inf, Term::Sup] {
                let mut table = AtomTable::new();
                let c: Vec<AtomId> = (0..2).map(|i| cond_atom(&mut table, i)).collect();
                let mut agg = aggregate(func, rel, 0, &[
                    (vec![int(1)], vec![c[0]]),
                    (vec![int(-2)], vec![c[1]]),
                ]);
                agg.bound = bound;
                check_exhaustive(&agg, &c);
            }
        }
    }
}

#[test]
fn empty_aggregate_is_its_empty_set_value() {
    for func in FUNCS {
        for rel in RELS {
            for bound in [-1, 0, 1] {
                let agg = aggregate(func, rel, bound, &[]);
                check_exhaustive(&agg, &[]);
            }
        }
    }
}

/// The bound-shift identity: a sum aggregate with an order relation behaves
/// like the corresponding one-signed sum with the bound shifted by the
/// certain weight of the opposite sign.
#[test]
fn sum_bound_shift_identity() {
    let mut table = AtomTable::new();
    let c: Vec<AtomId> = (0..4).map(|i| cond_atom(&mut table, i)).collect();
    let elems = vec![
        (vec![int(2)], vec![c[0]]),
        (vec![int(-3)], vec![c[1]]),
        (vec![int(1)], vec![c[2]]),
        (vec![int(-1)], vec![c[3]]),
    ];
    for rel in [Rel::Ge, Rel::Gt] {
        for bound in [-2, 0, 1, 3] {
            let sum = aggregate(AggFunc::Sum, rel, bound, &elems);
            for i in subsets(&c) {
                // the certain negative weight shifts the bound
                let shift: i64 = elems
                    .iter()
                    .filter(|(_, cond)| cond.iter().all(|a| i.contains(a)))
                    .map(|(t, _)| match &t[0] {
                        Term::Integer(n) => (*n).min(0),
                        _ => 0,
                    })
                    .sum();
                let shifted = aggregate(AggFunc::SumPlus, rel, bound - shift, &elems);
                for j in subsets(&c) {
                    let lhs =
                        propagate_check(&sum, &i, &j, PropagateMode::Possible, DEFAULT_SUBSET_SUM_CAP);
                    let rhs = propagate_check(
                        &shifted,
                        &i,
                        &j,
                        PropagateMode::Possible,
                        DEFAULT_SUBSET_SUM_CAP,
                    );
                    assert_eq!(lhs, rhs, "rel {rel:?} bound {bound} I={i:?} J={j:?}");
                }
            }
        }
    }
}

/// Both expansions of an aggregate admit the same stable models when
/// plugged into the same context program.
#[test]
fn strong_equivalence_of_the_two_expansions() {
    for func in FUNCS {
        for rel in RELS {
            for bound in [0, 1, 2] {
                let mut table = AtomTable::new();
                let c: Vec<AtomId> = (0..3).map(|i| cond_atom(&mut table, i)).collect();
                let cbar: Vec<AtomId> = (0..3)
                    .map(|i| table.intern(&Atom::new(&format!("d{i}"), vec![])))
                    .collect();
                let h = table.intern(&Atom::new("h", vec![]));
                let agg = aggregate(
                    func,
                    rel,
                    bound,
                    &[
                        (vec![int(1)], vec![c[0]]),
                        (vec![int(-1)], vec![c[1]]),
                        (vec![int(2)], vec![c[2]]),
                    ],
                );
                // choice context: each condition atom can be in or out
                let mut base = Vec::new();
                for i in 0..3 {
                    base.push(GroundRule {
                        head: c[i],
                        body: vec![GroundFormula::not(GroundFormula::Atom(cbar[i]))],
                    });
                    base.push(GroundRule {
                        head: cbar[i],
                        body: vec![GroundFormula::not(GroundFormula::Atom(c[i]))],
                    });
                }

                let mut strong = base.clone();
                strong.push(GroundRule {
                    head: h,
                    body: vec![GroundFormula::Agg(agg.clone())],
                });
                let strong = expand_aggregates(&strong, usize::MAX).unwrap();

                let mut ferraris = base.clone();
                ferraris.push(GroundRule {
                    head: h,
                    body: vec![translate_ferraris(&agg, 12).unwrap()],
                });

                let m1 = enumerate_stable(&strong, DEFAULT_ATOM_CAP).unwrap();
                let m2 = enumerate_stable(&ferraris, DEFAULT_ATOM_CAP).unwrap();
                assert_eq!(m1, m2, "{func:?} {rel:?} bound {bound}");
            }
        }
    }
}

/// Spot values from the propagation examples: the accumulated shares of the
/// third company pair reach the bound, a single 35-share element does not.
#[test]
fn company_share_accumulation() {
    let mut table = AtomTable::new();
    let owns13 = table.intern(&Atom::new("o13", vec![]));
    let c12 = table.intern(&Atom::new("s12", vec![]));
    let owns23 = table.intern(&Atom::new("o23", vec![]));
    let g3 = aggregate(
        AggFunc::SumPlus,
        Rel::Gt,
        50,
        &[
            (vec![int(20)], vec![owns13]),
            (vec![int(35), constant("c2")], vec![c12, owns23]),
        ],
    );
    let all: AtomSet = [owns13, c12, owns23].into();
    assert!(propagate_check(&g3, &all, &all, PropagateMode::Possible, DEFAULT_SUBSET_SUM_CAP));
    let g4 = aggregate(AggFunc::SumPlus, Rel::Gt, 50, &[(vec![int(35)], vec![owns23])]);
    assert!(!propagate_check(&g4, &all, &all, PropagateMode::Possible, DEFAULT_SUBSET_SUM_CAP));
    let counted = check_exhaustive(&g3, &[owns13, c12, owns23]);
    assert_eq!(counted, 64);
}

/// A subset-sum witness among unknown atoms keeps an equality aggregate
/// possible; certainty requires the witness to be forced.
#[test]
fn equality_needs_a_witness() {
    let mut table = AtomTable::new();
    let p2 = cond_atom(&mut table, 2);
    let p3 = cond_atom(&mut table, 3);
    let agg = aggregate(
        AggFunc::Sum,
        Rel::Eq,
        5,
        &[(vec![int(2)], vec![p2]), (vec![int(3)], vec![p3])],
    );
    let possible: AtomSet = [p2, p3].into();
    assert!(propagate_check(&agg, &AtomSet::new(), &possible, PropagateMode::Possible, DEFAULT_SUBSET_SUM_CAP));
    check_exhaustive(&agg, &[p2, p3]);
}
