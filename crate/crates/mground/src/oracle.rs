//! Brute-force reference semantics on desk-scale instances: full naive
//! instantiation over a finite universe, formula expansion of aggregates,
//! and stable-model enumeration by subset search. This module is the ground
//! truth that the grounding pipeline is tested against; nothing here is
//! meant to be fast.

use crate::aggregates::translate_bounded;
use crate::ground::{rule_atoms, AtomSet, AtomTable, GroundAggregate, GroundElement, GroundFormula,
    GroundRule, Interp4};
use crate::instantiate::{ApplySubst, Substitution};
use crate::ops::{holds, stable_relative, well_founded_model};
use crate::syntax::{BodyLiteral, Program, Rule, Term};
use std::collections::BTreeSet;
use thiserror::Error;

pub const DEFAULT_ATOM_CAP: usize = 20;
pub const DEFAULT_RULE_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("naive grounding exceeds {cap} rules")]
    RuleCap { cap: usize },
    #[error("enumeration over {atoms} atoms exceeds the cap of {cap}")]
    AtomCap { atoms: usize, cap: usize },
    #[error("aggregate expansion failed: {0}")]
    Expansion(#[from] crate::aggregates::ExpansionLimit),
}

/// The ground terms appearing in a program: integers and constants, plus
/// ground function terms. For function-free programs this is the constant
/// universe used by the naive grounding.
pub fn term_universe(p: &Program) -> Vec<Term> {
    let mut terms = BTreeSet::new();
    fn walk(t: &Term, out: &mut BTreeSet<Term>) {
        if t.is_ground() {
            out.insert(t.clone());
        }
        if let Term::Function(_, args) = t {
            for a in args {
                walk(a, out);
            }
        }
    }
    let walk_atom = |a: &crate::syntax::Atom, out: &mut BTreeSet<Term>| {
        for t in &a.args {
            walk(t, out);
        }
    };
    for r in &p.rules {
        let mut out = BTreeSet::new();
        walk_atom(&r.head, &mut out);
        for b in &r.body {
            match b {
                BodyLiteral::Literal(l) => walk_atom(&l.atom, &mut out),
                BodyLiteral::Comparison(c) => {
                    walk(&c.left, &mut out);
                    walk(&c.right, &mut out);
                }
                BodyLiteral::Aggregate(a) => {
                    walk(&a.bound, &mut out);
                    for e in &a.elements {
                        for t in &e.tuple {
                            walk(t, &mut out);
                        }
                        for c in &e.condition {
                            walk_atom(c, &mut out);
                        }
                    }
                }
            }
        }
        terms.extend(out);
    }
    terms.into_iter().collect()
}

fn all_substitutions(vars: &[String], universe: &[Term]) -> Vec<Substitution> {
    let mut subs = vec![Substitution::new()];
    for v in vars {
        let mut next = Vec::with_capacity(subs.len() * universe.len());
        for s in &subs {
            for t in universe {
                let mut s2 = s.clone();
                s2.insert(v.clone(), t.clone());
                next.push(s2);
            }
        }
        subs = next;
    }
    subs
}

fn vars_of_rule(r: &Rule) -> Vec<String> {
    r.global_vars()
}

fn ground_body_literal(
    b: &BodyLiteral,
    universe: &[Term],
    table: &mut AtomTable,
) -> GroundFormula {
    match b {
        BodyLiteral::Literal(l) => {
            let id = table.intern(&l.atom);
            if l.negated {
                GroundFormula::not(GroundFormula::Atom(id))
            } else {
                GroundFormula::Atom(id)
            }
        }
        BodyLiteral::Comparison(c) => GroundFormula::Cmp(c.clone()),
        BodyLiteral::Aggregate(a) => {
            // instantiate every element over the full universe
            let mut elements: BTreeSet<GroundElement> = BTreeSet::new();
            for e in &a.elements {
                let mut vars = Vec::new();
                for t in &e.tuple {
                    t.collect_vars(&mut vars);
                }
                for c in &e.condition {
                    c.collect_vars(&mut vars);
                }
                for sub in all_substitutions(&vars, universe) {
                    let inst = e.apply(&sub);
                    if !inst.is_ground() {
                        continue;
                    }
                    elements.insert(GroundElement {
                        tuple: inst.tuple,
                        condition: inst.condition.iter().map(|c| table.intern(c)).collect(),
                    });
                }
            }
            GroundFormula::Agg(GroundAggregate {
                func: a.func,
                elements,
                rel: a.rel,
                bound: a.bound.clone(),
            })
        }
    }
}

/// The set of all instances of the program's rules over the universe, with
/// aggregate elements fully instantiated. Instances whose global variables
/// cannot be grounded over the universe are skipped (an empty universe
/// leaves only ground rules).
pub fn naive_ground(
    p: &Program,
    universe: &[Term],
    table: &mut AtomTable,
    rule_cap: usize,
) -> Result<Vec<GroundRule>, OracleError> {
    let mut out = Vec::new();
    for r in &p.rules {
        for sub in all_substitutions(&vars_of_rule(r), universe) {
            let inst = r.apply(&sub);
            if !inst.head.is_ground() {
                continue;
            }
            let head = table.intern(&inst.head);
            let body: Vec<GroundFormula> = inst
                .body
                .iter()
                .map(|b| ground_body_literal(b, universe, table))
                .collect();
            out.push(GroundRule { head, body });
            if out.len() > rule_cap {
                return Err(OracleError::RuleCap { cap: rule_cap });
            }
        }
    }
    Ok(out)
}

/// Replaces every aggregate value in the rules by its formula expansion.
pub fn expand_aggregates(
    rules: &[GroundRule],
    limit: usize,
) -> Result<Vec<GroundRule>, OracleError> {
    fn expand(f: &GroundFormula, limit: usize) -> Result<GroundFormula, OracleError> {
        Ok(match f {
            GroundFormula::Agg(a) => translate_bounded(a, limit)?,
            GroundFormula::Not(g) => GroundFormula::not(expand(g, limit)?),
            GroundFormula::And(fs) => {
                GroundFormula::And(fs.iter().map(|g| expand(g, limit)).collect::<Result<_, _>>()?)
            }
            GroundFormula::Or(fs) => {
                GroundFormula::Or(fs.iter().map(|g| expand(g, limit)).collect::<Result<_, _>>()?)
            }
            GroundFormula::Implies(a, b) => {
                GroundFormula::implies(expand(a, limit)?, expand(b, limit)?)
            }
            other => other.clone(),
        })
    }
    rules
        .iter()
        .map(|r| {
            Ok(GroundRule {
                head: r.head,
                body: r.body.iter().map(|f| expand(f, limit)).collect::<Result<_, _>>()?,
            })
        })
        .collect()
}

/// The unrefined expansion of a ground aggregate: one implication per
/// non-justifying subset of the element instances, whose consequent
/// disjoins the remaining elements one at a time. Strongly equivalent to
/// [`translate_bounded`] but propagates more weakly; used only to check
/// that both expansions induce the same stable models.
pub fn translate_ferraris(
    agg: &GroundAggregate,
    limit: usize,
) -> Result<GroundFormula, crate::aggregates::ExpansionLimit> {
    use crate::aggregates::justifies;
    let elements: Vec<&GroundElement> = agg.elements.iter().collect();
    let n = elements.len();
    if n > limit {
        return Err(crate::aggregates::ExpansionLimit { size: n, limit });
    }
    let conds = |sel: &[&GroundElement]| -> GroundFormula {
        let atoms: BTreeSet<_> = sel.iter().flat_map(|e| e.condition.iter().copied()).collect();
        let mut fs: Vec<GroundFormula> = atoms.into_iter().map(GroundFormula::Atom).collect();
        match fs.len() {
            0 => GroundFormula::True,
            1 => fs.pop().unwrap(),
            _ => GroundFormula::And(fs),
        }
    };
    let mut conjuncts = Vec::new();
    for d in 0..(1u32 << n) {
        let d_sel: Vec<&GroundElement> =
            (0..n).filter(|i| d & (1 << i) != 0).map(|i| elements[i]).collect();
        if justifies(d_sel.iter().copied(), agg) {
            continue;
        }
        let rest: Vec<&GroundElement> =
            (0..n).filter(|i| d & (1 << i) == 0).map(|i| elements[i]).collect();
        let disjuncts: Vec<GroundFormula> = rest.iter().map(|e| conds(&[e])).collect();
        let consequent = match disjuncts.len() {
            0 => GroundFormula::False,
            _ => GroundFormula::Or(disjuncts),
        };
        conjuncts.push(GroundFormula::implies(conds(&d_sel), consequent));
    }
    Ok(match conjuncts.len() {
        0 => GroundFormula::True,
        _ => GroundFormula::And(conjuncts),
    })
}

/// The reduct of a formula w.r.t. an interpretation: unsatisfied formulas
/// collapse to falsity, satisfied ones are reduced structurally.
pub fn ferraris_reduct(f: &GroundFormula, x: &AtomSet) -> GroundFormula {
    if !holds(f, x) {
        return GroundFormula::False;
    }
    match f {
        GroundFormula::Not(g) => GroundFormula::not(ferraris_reduct(g, x)),
        GroundFormula::And(fs) => {
            GroundFormula::And(fs.iter().map(|g| ferraris_reduct(g, x)).collect())
        }
        GroundFormula::Or(fs) => {
            GroundFormula::Or(fs.iter().map(|g| ferraris_reduct(g, x)).collect())
        }
        GroundFormula::Implies(a, b) => {
            GroundFormula::implies(ferraris_reduct(a, x), ferraris_reduct(b, x))
        }
        other => other.clone(),
    }
}

fn subsets_of(atoms: &[crate::ground::AtomId]) -> impl Iterator<Item = AtomSet> + '_ {
    (0..(1u64 << atoms.len())).map(move |mask| {
        atoms
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, id)| *id)
            .collect()
    })
}

/// Interpretations as bitmasks over the atoms of a fixed program, for the
/// enumeration loops.
struct MaskEval {
    bit: std::collections::HashMap<crate::ground::AtomId, u64>,
}

impl MaskEval {
    fn new(atoms: &[crate::ground::AtomId]) -> Self {
        MaskEval { bit: atoms.iter().enumerate().map(|(i, id)| (*id, 1u64 << i)).collect() }
    }

    fn holds(&self, f: &GroundFormula, x: u64) -> bool {
        match f {
            GroundFormula::Atom(id) => x & self.bit[id] != 0,
            GroundFormula::True => true,
            GroundFormula::False => false,
            GroundFormula::Cmp(c) => crate::syntax::eval_comparison(c),
            GroundFormula::Not(g) => !self.holds(g, x),
            GroundFormula::And(fs) => fs.iter().all(|g| self.holds(g, x)),
            GroundFormula::Or(fs) => fs.iter().any(|g| self.holds(g, x)),
            GroundFormula::Implies(a, b) => !self.holds(a, x) || self.holds(b, x),
            GroundFormula::Agg(_) => unreachable!("aggregates are expanded before enumeration"),
        }
    }

    /// `Y ⊨ Fˣ` for the structural reduct, evaluated without materializing:
    /// subformulas not satisfied by `x` collapse to falsity, satisfied
    /// atoms are read off `y`.
    fn reduct_holds(&self, f: &GroundFormula, y: u64, x: u64) -> bool {
        match f {
            GroundFormula::Atom(id) => x & self.bit[id] != 0 && y & self.bit[id] != 0,
            GroundFormula::True => true,
            GroundFormula::False => false,
            GroundFormula::Cmp(c) => crate::syntax::eval_comparison(c),
            GroundFormula::Not(g) => !self.holds(g, x),
            GroundFormula::And(fs) => fs.iter().all(|g| self.reduct_holds(g, y, x)),
            GroundFormula::Or(fs) => {
                fs.iter().any(|g| self.reduct_holds(g, y, x)) && self.holds(f, x)
            }
            GroundFormula::Implies(a, b) => {
                if !self.holds(f, x) {
                    return false;
                }
                !self.reduct_holds(a, y, x) || self.reduct_holds(b, y, x)
            }
            GroundFormula::Agg(_) => unreachable!("aggregates are expanded before enumeration"),
        }
    }
}

/// Enumerates all stable models by subset search: a candidate is stable if
/// it is a model of the program and no proper subset satisfies the reduct
/// of every rule body while containing the corresponding heads. Aggregate
/// values are expanded first.
pub fn enumerate_stable(
    rules: &[GroundRule],
    atom_cap: usize,
) -> Result<BTreeSet<AtomSet>, OracleError> {
    let rules = expand_aggregates(rules, usize::MAX)?;
    let atoms: Vec<_> = rule_atoms(&rules).into_iter().collect();
    if atoms.len() > atom_cap {
        return Err(OracleError::AtomCap { atoms: atoms.len(), cap: atom_cap });
    }
    let eval = MaskEval::new(&atoms);
    let heads: Vec<u64> = rules.iter().map(|r| eval.bit[&r.head]).collect();
    let mut models = BTreeSet::new();
    for x in 0..(1u64 << atoms.len()) {
        let is_model = rules
            .iter()
            .zip(&heads)
            .all(|(r, h)| x & h != 0 || !r.body.iter().all(|f| eval.holds(f, x)));
        if !is_model {
            continue;
        }
        // minimal models of the reduct are subsets of the candidate
        let satisfies_reduct = |y: u64| {
            rules.iter().zip(&heads).all(|(r, h)| {
                y & h != 0 || !r.body.iter().all(|f| eval.reduct_holds(f, y, x))
            })
        };
        let mut minimal = true;
        let mut y = x;
        while y > 0 {
            y = (y - 1) & x;
            if satisfies_reduct(y) {
                minimal = false;
                break;
            }
        }
        if minimal {
            let model: AtomSet = atoms
                .iter()
                .enumerate()
                .filter(|(i, _)| x & (1 << i) != 0)
                .map(|(_, id)| *id)
                .collect();
            models.insert(model);
        }
    }
    Ok(models)
}

/// Enumerates the fixed points of the stable operator.
pub fn enumerate_foid_stable(
    rules: &[GroundRule],
    atom_cap: usize,
) -> Result<BTreeSet<AtomSet>, OracleError> {
    let atoms: Vec<_> = rule_atoms(rules).into_iter().collect();
    if atoms.len() > atom_cap {
        return Err(OracleError::AtomCap { atoms: atoms.len(), cap: atom_cap });
    }
    let mut models = BTreeSet::new();
    for candidate in subsets_of(&atoms) {
        if stable_relative(rules, &AtomSet::new(), &candidate) == candidate {
            models.insert(candidate);
        }
    }
    Ok(models)
}

/// The well-founded model of a ground program without context.
pub fn wf_oracle(rules: &[GroundRule]) -> Interp4 {
    well_founded_model(rules, &Interp4::default())
}
