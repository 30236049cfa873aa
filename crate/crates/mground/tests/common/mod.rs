//! Shared helpers for the integration and acceptance suites: deterministic
//! random generators for programs, rules, and interpretations, plus
//! name-based comparisons between atom sets living in different tables.

#![allow(dead_code)]

use mground::ground::{AtomSet, AtomTable, GroundFormula, GroundRule};
use mground::syntax::{
    AggFunc, Aggregate, AggregateElement, Atom, BodyLiteral, Comparison, Literal, Program, Rel,
    Rule, Term,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn constant(name: &str) -> Term {
    Term::constant(name)
}

pub fn int(n: i64) -> Term {
    Term::Integer(n)
}

pub fn var(v: &str) -> Term {
    Term::Variable(v.into())
}

/// Renders an atom set as predicate strings, for comparisons across tables.
pub fn names(set: &AtomSet, table: &AtomTable) -> BTreeSet<String> {
    set.iter().map(|id| table.resolve(*id).to_string()).collect()
}

/// Renders a family of models as name sets.
pub fn model_names(
    models: &BTreeSet<AtomSet>,
    table: &AtomTable,
) -> BTreeSet<BTreeSet<String>> {
    models.iter().map(|m| names(m, table)).collect()
}

// The pools are small so that the full instantiation stays enumerable: the
// term universe of a generated program has at most five ground terms, which
// bounds the atom count of the naive grounding by twelve.
const CONSTS: [&str; 2] = ["a", "b"];
const PREDS1: [&str; 2] = ["p", "q"];
const PREDS0: [&str; 2] = ["s", "t"];

fn random_const(rng: &mut ChaCha8Rng, n_consts: usize) -> Term {
    if rng.gen_bool(0.8) {
        constant(CONSTS[rng.gen_range(0..n_consts.min(CONSTS.len()))])
    } else {
        int(1)
    }
}

fn random_term(rng: &mut ChaCha8Rng, vars: &[&str], n_consts: usize) -> Term {
    if !vars.is_empty() && rng.gen_bool(0.6) {
        var(vars[rng.gen_range(0..vars.len())])
    } else {
        random_const(rng, n_consts)
    }
}

fn random_atom(rng: &mut ChaCha8Rng, vars: &[&str], n_consts: usize) -> Atom {
    if rng.gen_bool(0.8) {
        Atom::new(PREDS1[rng.gen_range(0..PREDS1.len())], vec![random_term(rng, vars, n_consts)])
    } else {
        Atom::new(PREDS0[rng.gen_range(0..PREDS0.len())], vec![])
    }
}

fn random_aggregate(rng: &mut ChaCha8Rng, bound_vars: &[&str], n_consts: usize) -> Aggregate {
    let _ = n_consts;
    let func = *[AggFunc::Count, AggFunc::Sum, AggFunc::SumPlus, AggFunc::SumMinus]
        .choose(rng)
        .unwrap();
    let rel = *[Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge, Rel::Eq, Rel::Ne].choose(rng).unwrap();
    let n_elems = rng.gen_range(1..=2);
    let mut elements = Vec::new();
    for i in 0..n_elems {
        // one local variable per element keeps instance counts small
        let local = if i == 0 { "V" } else { "W" };
        let cond = Atom::new(PREDS1[rng.gen_range(0..PREDS1.len())], vec![var(local)]);
        let tuple = match rng.gen_range(0..3) {
            0 => vec![var(local)],
            1 => vec![int(*[-1, 1].choose(rng).unwrap()), var(local)],
            _ => {
                if bound_vars.is_empty() {
                    vec![int(1)]
                } else {
                    vec![var(bound_vars[rng.gen_range(0..bound_vars.len())])]
                }
            }
        };
        elements.push(AggregateElement { tuple, condition: vec![cond] });
    }
    Aggregate { func, elements, rel, bound: int(rng.gen_range(0..=1)) }
}

/// A random safe aggregate program: at most `max_rules` rules over three
/// unary and two nullary predicates, at most `n_consts` constants, and at
/// most one aggregate. Safety holds by construction: head, negative, and
/// comparison variables are drawn from the positively bound ones.
pub fn random_program(rng: &mut ChaCha8Rng, max_rules: usize, with_aggregate: bool) -> Program {
    let n_consts = rng.gen_range(2..=3);
    let n_rules = rng.gen_range(1..=max_rules);
    let agg_rule = if with_aggregate { Some(rng.gen_range(0..n_rules)) } else { None };
    let mut rules = Vec::new();
    for ri in 0..n_rules {
        let mut body = Vec::new();
        let mut bound: Vec<&str> = Vec::new();
        // positive part binds the variables
        for v in ["X", "Y"] {
            if rng.gen_bool(0.45) {
                let mut atom = random_atom(rng, &[], n_consts);
                if !atom.args.is_empty() {
                    atom.args[0] = var(v);
                    bound.push(v);
                }
                body.push(BodyLiteral::Literal(Literal { atom, negated: false }));
            }
        }
        if rng.gen_bool(0.5) {
            let atom = random_atom(rng, &bound, n_consts);
            body.push(BodyLiteral::Literal(Literal { atom, negated: false }));
        }
        if rng.gen_bool(0.5) {
            let atom = random_atom(rng, &bound, n_consts);
            body.push(BodyLiteral::Literal(Literal { atom, negated: true }));
        }
        if rng.gen_bool(0.25) {
            let rel = *[Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge, Rel::Eq, Rel::Ne]
                .choose(rng)
                .unwrap();
            body.push(BodyLiteral::Comparison(Comparison {
                left: random_term(rng, &bound, n_consts),
                rel,
                right: random_term(rng, &bound, n_consts),
            }));
        }
        if agg_rule == Some(ri) {
            body.push(BodyLiteral::Aggregate(random_aggregate(rng, &bound, n_consts)));
        }
        let head = random_atom(rng, &bound, n_consts);
        rules.push(Rule { head, body });
    }
    // a few facts so that something is derivable
    for _ in 0..rng.gen_range(1..=3) {
        let mut atom = random_atom(rng, &[], n_consts);
        for a in &mut atom.args {
            *a = random_const(rng, n_consts);
        }
        rules.push(Rule { head: atom, body: vec![] });
    }
    Program { rules }
}

/// The shared random corpus used by the equivalence and precision-chain
/// acceptance criteria: safe function-free programs, half of them carrying
/// an aggregate.
pub fn corpus(seed: u64, size: usize) -> Vec<Program> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(size);
    let mut round = 0usize;
    while out.len() < size {
        round += 1;
        let program = random_program(&mut r, 6, round % 2 == 0);
        if mground::analysis::check_program(&program).is_ok() {
            out.push(program);
        }
    }
    out
}

/// A random ground rule set over `n_atoms` propositional atoms, with
/// negation and implication bodies; every program is in the class where
/// implications never nest into antecedents.
pub fn random_ground_program(
    rng: &mut ChaCha8Rng,
    table: &mut AtomTable,
    n_atoms: usize,
    n_rules: usize,
) -> Vec<GroundRule> {
    let ids: Vec<_> =
        (0..n_atoms).map(|i| table.intern(&Atom::new(&format!("a{i}"), vec![]))).collect();
    let mut rules = Vec::new();
    for _ in 0..n_rules {
        let head = ids[rng.gen_range(0..ids.len())];
        let mut body = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            let a = GroundFormula::Atom(ids[rng.gen_range(0..ids.len())]);
            body.push(match rng.gen_range(0..4) {
                0 => GroundFormula::not(a),
                1 => {
                    let b = GroundFormula::Atom(ids[rng.gen_range(0..ids.len())]);
                    GroundFormula::implies(a, b)
                }
                _ => a,
            });
        }
        rules.push(GroundRule { head, body });
    }
    rules
}

/// A random subset of the interned atoms.
pub fn random_atom_set(rng: &mut ChaCha8Rng, table: &AtomTable) -> AtomSet {
    table.ids().filter(|_| rng.gen_bool(0.5)).collect()
}

// Aggregate propagation checking shared by the oracle and acceptance suites.

use mground::aggregates::{
    classify, propagate_check, translate_bounded, Monotonicity, PropagateMode,
    DEFAULT_SUBSET_SUM_CAP,
};
use mground::ground::{AtomId, GroundAggregate, GroundElement};
use mground::ops::holds_reduct;

pub fn cond_atom(table: &mut AtomTable, i: usize) -> AtomId {
    table.intern(&Atom::new(&format!("c{i}"), vec![]))
}

pub fn aggregate(
    func: AggFunc,
    rel: Rel,
    bound: i64,
    elems: &[(Vec<Term>, Vec<AtomId>)],
) -> GroundAggregate {
    GroundAggregate {
        func,
        elements: elems
            .iter()
            .map(|(tuple, condition)| GroundElement {
                tuple: tuple.clone(),
                condition: condition.clone(),
            })
            .collect(),
        rel,
        bound: Term::Integer(bound),
    }
}

pub fn subsets(atoms: &[AtomId]) -> Vec<AtomSet> {
    (0..(1u32 << atoms.len()))
        .map(|mask| {
            atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, id)| *id)
                .collect()
        })
        .collect()
}

/// Compares the shortcut propagation of one aggregate against the reduct of
/// its expansion over every pair of interpretations of `atoms`, also
/// checking the monotone and antimonotone invariants. Panics on the first
/// mismatch; returns the number of pairs checked.
pub fn check_exhaustive(agg: &GroundAggregate, atoms: &[AtomId]) -> usize {
    let formula = translate_bounded(agg, 12).expect("within expansion limit");
    let mut checked = 0;
    for i in subsets(atoms) {
        for j in subsets(atoms) {
            let fast =
                propagate_check(agg, &i, &j, PropagateMode::Possible, DEFAULT_SUBSET_SUM_CAP);
            let reference = holds_reduct(&formula, &i, &j);
            assert_eq!(
                fast, reference,
                "{:?} {:?} bound {} elems {:?}: I={i:?} J={j:?}",
                agg.func, agg.rel, agg.bound, agg.elements
            );
            match classify(agg.func, agg.rel) {
                Monotonicity::Monotone => {
                    let independent = propagate_check(
                        agg,
                        &AtomSet::new(),
                        &j,
                        PropagateMode::Possible,
                        DEFAULT_SUBSET_SUM_CAP,
                    );
                    assert_eq!(fast, independent, "monotone check depends on I");
                }
                Monotonicity::Antimonotone => {
                    let classical = propagate_check(
                        agg,
                        &i,
                        &i,
                        PropagateMode::Classical,
                        DEFAULT_SUBSET_SUM_CAP,
                    );
                    assert_eq!(fast, classical, "antimonotone check must equal truth under I");
                }
                Monotonicity::Neither => {}
            }
            checked += 1;
        }
    }
    checked
}

// Rule-instantiation checking shared by the oracle and acceptance suites.

use mground::analysis::PredSig;
use mground::instantiate::{ground_rule, ApplySubst, AtomIndex, Substitution};
use mground::syntax::eval_comparison;

/// Every substitution of the rule's variables over the universe.
pub fn all_groundings(rule: &Rule, universe: &[Term]) -> Vec<Rule> {
    let vars = rule.global_vars();
    let mut subs = vec![Substitution::new()];
    for v in &vars {
        let mut next = Vec::new();
        for s in &subs {
            for t in universe {
                let mut s2 = s.clone();
                s2.insert(v.clone(), t.clone());
                next.push(s2);
            }
        }
        subs = next;
    }
    subs.iter().map(|s| rule.apply(s)).collect()
}

/// The brute-force instance set of one rule: reduct body satisfaction
/// checked literal by literal on the syntax tree, plus the duplicate
/// filter. Independent of the instantiation algorithm and the formula
/// machinery.
pub fn rule_instances_brute_force(
    rule: &Rule,
    certain: &BTreeSet<Atom>,
    possible: &BTreeSet<Atom>,
    previous: &BTreeSet<Atom>,
    first: bool,
    universe: &[Term],
) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for g in all_groundings(rule, universe) {
        let applies = g.body.iter().all(|b| match b {
            BodyLiteral::Literal(l) if !l.negated => possible.contains(&l.atom),
            BodyLiteral::Literal(l) => !certain.contains(&l.atom),
            BodyLiteral::Comparison(c) => eval_comparison(c),
            BodyLiteral::Aggregate(_) => unreachable!(),
        });
        let fresh = first
            || g.body.iter().any(|b| match b {
                BodyLiteral::Literal(l) if !l.negated => !previous.contains(&l.atom),
                _ => false,
            });
        if applies && fresh {
            out.insert(g.to_string());
        }
    }
    out
}

/// Runs the instantiation algorithm on the same inputs, rendering the
/// instances for comparison.
pub fn rule_instances_algorithm(
    rule: &Rule,
    certain: &BTreeSet<Atom>,
    possible: &BTreeSet<Atom>,
    previous: &BTreeSet<Atom>,
    first: bool,
    recursive: &BTreeSet<PredSig>,
) -> BTreeSet<String> {
    let mut table = AtomTable::new();
    let mut index = AtomIndex::new();
    let mut certain_ids = AtomSet::new();
    let mut previous_ids = AtomSet::new();
    for a in possible {
        let id = table.intern(a);
        index.insert(id, &table);
    }
    for a in certain {
        certain_ids.insert(table.intern(a));
    }
    for a in previous {
        previous_ids.insert(table.intern(a));
    }
    let body: Vec<usize> = (0..rule.body.len()).collect();
    ground_rule(
        rule,
        &certain_ids,
        &index,
        &previous_ids,
        Substitution::new(),
        body,
        first,
        recursive,
        &table,
    )
    .into_iter()
    .map(|r| r.to_string())
    .collect()
}

/// A random safe normal rule over unary and binary predicates.
pub fn random_normal_rule(r: &mut ChaCha8Rng) -> Rule {
    let preds = ["p", "q", "u", "v"];
    let vars = ["X", "Y"];
    let n_pos = r.gen_range(1..=2);
    let mut body = Vec::new();
    let mut bound: Vec<&str> = Vec::new();
    for _ in 0..n_pos {
        let v = vars[r.gen_range(0..vars.len())];
        bound.push(v);
        let args = if r.gen_bool(0.3) { vec![var(v), var(vars[0])] } else { vec![var(v)] };
        if args.len() == 2 {
            bound.push(vars[0]);
        }
        body.push(BodyLiteral::Literal(Literal {
            atom: Atom::new(preds[r.gen_range(0..preds.len())], args),
            negated: false,
        }));
    }
    let term_over = |r: &mut ChaCha8Rng, bound: &[&str]| -> Term {
        match r.gen_range(0..3) {
            0 => var(bound[r.gen_range(0..bound.len())]),
            1 => int(r.gen_range(1..=3)),
            _ => constant("a"),
        }
    };
    if r.gen_bool(0.6) {
        body.push(BodyLiteral::Literal(Literal {
            atom: Atom::new(preds[r.gen_range(0..preds.len())], vec![term_over(r, &bound)]),
            negated: true,
        }));
    }
    if r.gen_bool(0.5) {
        body.push(BodyLiteral::Comparison(Comparison {
            left: term_over(r, &bound),
            rel: *[Rel::Lt, Rel::Le, Rel::Gt, Rel::Ge, Rel::Eq, Rel::Ne].choose(r).unwrap(),
            right: term_over(r, &bound),
        }));
    }
    let head = Atom::new("h", vec![term_over(r, &bound)]);
    Rule { head, body }
}

/// Random ground atoms over the universe at the given density.
pub fn random_ground_atoms(
    r: &mut ChaCha8Rng,
    universe: &[Term],
    density: f64,
) -> BTreeSet<Atom> {
    let mut out = BTreeSet::new();
    for p in ["p", "q", "u", "v"] {
        for t in universe {
            if r.gen_bool(density) {
                out.insert(Atom::new(p, vec![t.clone()]));
            }
            for t2 in universe {
                if r.gen_bool(density / 4.0) {
                    out.insert(Atom::new(p, vec![t.clone(), t2.clone()]));
                }
            }
        }
    }
    out
}
