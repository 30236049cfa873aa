//! One-sided matching, the match-set function for body literals, selection
//! heuristics, and rule instantiation with semi-naive duplicate avoidance.

use crate::analysis::PredSig;
use crate::ground::{AtomId, AtomSet, AtomTable};
use crate::syntax::{
    eval_comparison, Aggregate, AggregateElement, Atom, BodyLiteral, Comparison, Literal, Rule,
    Term,
};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// A finite map from variables to ground terms; the identity substitution
/// is the empty map. Unmapped variables stand for themselves.
pub type Substitution = BTreeMap<String, Term>;

/// Applying a substitution to an expression.
pub trait ApplySubst {
    fn apply(&self, sub: &Substitution) -> Self;
}

impl ApplySubst for Term {
    fn apply(&self, sub: &Substitution) -> Term {
        match self {
            Term::Variable(v) => sub.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Function(f, args) => {
                Term::Function(f.clone(), args.iter().map(|a| a.apply(sub)).collect())
            }
            _ => self.clone(),
        }
    }
}

impl ApplySubst for Atom {
    fn apply(&self, sub: &Substitution) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self.args.iter().map(|a| a.apply(sub)).collect(),
        }
    }
}

impl ApplySubst for Literal {
    fn apply(&self, sub: &Substitution) -> Literal {
        Literal { atom: self.atom.apply(sub), negated: self.negated }
    }
}

impl ApplySubst for Comparison {
    fn apply(&self, sub: &Substitution) -> Comparison {
        Comparison { left: self.left.apply(sub), rel: self.rel, right: self.right.apply(sub) }
    }
}

impl ApplySubst for AggregateElement {
    fn apply(&self, sub: &Substitution) -> AggregateElement {
        AggregateElement {
            tuple: self.tuple.iter().map(|t| t.apply(sub)).collect(),
            condition: self.condition.iter().map(|a| a.apply(sub)).collect(),
        }
    }
}

impl ApplySubst for Aggregate {
    fn apply(&self, sub: &Substitution) -> Aggregate {
        Aggregate {
            func: self.func,
            elements: self.elements.iter().map(|e| e.apply(sub)).collect(),
            rel: self.rel,
            bound: self.bound.apply(sub),
        }
    }
}

impl ApplySubst for BodyLiteral {
    fn apply(&self, sub: &Substitution) -> BodyLiteral {
        match self {
            BodyLiteral::Literal(l) => BodyLiteral::Literal(l.apply(sub)),
            BodyLiteral::Comparison(c) => BodyLiteral::Comparison(c.apply(sub)),
            BodyLiteral::Aggregate(a) => BodyLiteral::Aggregate(a.apply(sub)),
        }
    }
}

impl ApplySubst for Rule {
    fn apply(&self, sub: &Substitution) -> Rule {
        Rule {
            head: self.head.apply(sub),
            body: self.body.iter().map(|b| b.apply(sub)).collect(),
        }
    }
}

fn match_term(e: &Term, g: &Term, sub: &mut Substitution) -> bool {
    match (e, g) {
        (Term::Variable(v), _) => match sub.get(v) {
            Some(t) => t == g,
            None => {
                sub.insert(v.clone(), g.clone());
                true
            }
        },
        (Term::Integer(x), Term::Integer(y)) => x == y,
        (Term::Inf, Term::Inf) | (Term::Sup, Term::Sup) => true,
        (Term::Function(f, xs), Term::Function(h, ys)) => {
            f == h && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_term(x, y, sub))
        }
        _ => false,
    }
}

/// The matcher of `e` to the ground atom `g`, if one exists. The matcher is
/// the unique substitution over the variables of `e` with `eσ = g`.
pub fn match_atom(e: &Atom, g: &Atom) -> Option<Substitution> {
    if e.predicate != g.predicate || e.args.len() != g.args.len() {
        return None;
    }
    let mut sub = Substitution::new();
    for (x, y) in e.args.iter().zip(&g.args) {
        if !match_term(x, y, &mut sub) {
            return None;
        }
    }
    Some(sub)
}

/// Per-predicate store of the ground atoms currently considered possible,
/// used to enumerate candidates when matching positive body literals.
#[derive(Debug, Default, Clone)]
pub struct AtomIndex {
    members: AtomSet,
    by_pred: HashMap<PredSig, Vec<AtomId>>,
}

impl AtomIndex {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an atom id; returns true if it was new.
    pub fn insert(&mut self, id: AtomId, table: &AtomTable) -> bool {
        if !self.members.insert(id) {
            return false;
        }
        self.by_pred.entry(table.resolve(id).sig()).or_default().push(id);
        true
    }

    pub fn contains(&self, id: AtomId) -> bool {
        self.members.contains(&id)
    }

    pub fn atoms(&self, sig: &PredSig) -> &[AtomId] {
        self.by_pred.get(sig).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn set(&self) -> &AtomSet {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// The set of matches for a body literal under a substitution: positive
/// atoms enumerate the index and refine the substitution, ground negative
/// literals test absence from the certain atoms, and ground comparisons
/// test their relation. Negative literals and comparisons must be ground
/// under the substitution.
pub fn matches(
    l: &BodyLiteral,
    certain: &AtomSet,
    index: &AtomIndex,
    sub: &Substitution,
    table: &AtomTable,
) -> Vec<Substitution> {
    matches_excluding(l, certain, index, sub, table, None)
}

fn matches_excluding(
    l: &BodyLiteral,
    certain: &AtomSet,
    index: &AtomIndex,
    sub: &Substitution,
    table: &AtomTable,
    exclude: Option<&AtomSet>,
) -> Vec<Substitution> {
    match l {
        BodyLiteral::Literal(lit) if !lit.negated => {
            let pattern = lit.atom.apply(sub);
            let mut out = Vec::new();
            for &id in index.atoms(&pattern.sig()) {
                if exclude.is_some_and(|old| old.contains(&id)) {
                    continue;
                }
                if let Some(ext) = match_atom(&pattern, table.resolve(id)) {
                    let mut combined = sub.clone();
                    combined.extend(ext);
                    out.push(combined);
                }
            }
            out
        }
        BodyLiteral::Literal(lit) => {
            let ground = lit.atom.apply(sub);
            assert!(ground.is_ground(), "negative literal must be ground when matched: {ground}");
            let holds = match table.lookup(&ground) {
                Some(id) => !certain.contains(&id),
                None => true,
            };
            if holds {
                vec![sub.clone()]
            } else {
                Vec::new()
            }
        }
        BodyLiteral::Comparison(c) => {
            let ground = c.apply(sub);
            assert!(ground.is_ground(), "comparison must be ground when matched: {ground}");
            if eval_comparison(&ground) {
                vec![sub.clone()]
            } else {
                Vec::new()
            }
        }
        BodyLiteral::Aggregate(_) => {
            unreachable!("aggregates are rewritten to placeholder atoms before grounding")
        }
    }
}

fn unbound_vars(atom: &Atom, sub: &Substitution) -> usize {
    let mut vars = Vec::new();
    atom.collect_vars(&mut vars);
    vars.iter().filter(|v| !sub.contains_key(*v)).count()
}

fn is_ground_under(l: &BodyLiteral, sub: &Substitution) -> bool {
    match l {
        BodyLiteral::Literal(lit) => lit.atom.apply(sub).is_ground(),
        BodyLiteral::Comparison(c) => c.apply(sub).is_ground(),
        BodyLiteral::Aggregate(_) => false,
    }
}

/// Picks the next body literal to match: first any comparison or negative
/// literal that is ground under the substitution (these only filter), then
/// a positive literal over a recursive predicate, then the positive literal
/// binding the most unbound variables. Ties go to textual order. `remaining`
/// holds indices into the rule body.
pub fn select(
    rule: &Rule,
    remaining: &[usize],
    sub: &Substitution,
    recursive: &BTreeSet<PredSig>,
) -> usize {
    debug_assert!(!remaining.is_empty());
    for &i in remaining {
        match &rule.body[i] {
            BodyLiteral::Literal(l) if l.negated => {
                if is_ground_under(&rule.body[i], sub) {
                    return i;
                }
            }
            BodyLiteral::Comparison(_) => {
                if is_ground_under(&rule.body[i], sub) {
                    return i;
                }
            }
            _ => {}
        }
    }
    for &i in remaining {
        if let BodyLiteral::Literal(l) = &rule.body[i] {
            if !l.negated && recursive.contains(&l.atom.sig()) {
                return i;
            }
        }
    }
    let mut best: Option<(usize, usize)> = None; // (unbound count, index)
    for &i in remaining {
        if let BodyLiteral::Literal(l) = &rule.body[i] {
            if !l.negated {
                let n = unbound_vars(&l.atom, sub);
                if best.is_none_or(|(bn, _)| n > bn) {
                    best = Some((n, i));
                }
            }
        }
    }
    best.expect("safety guarantees a selectable literal").1
}

/// Grounds a safe normal rule against the possible atoms of the index,
/// checking negative literals against `certain`.
///
/// Produces exactly the instances whose reduct body is satisfiable, minus
/// instances whose positive body is contained in `previous` unless `first`
/// is set.
#[allow(clippy::too_many_arguments)]
pub fn ground_rule(
    rule: &Rule,
    certain: &AtomSet,
    index: &AtomIndex,
    previous: &AtomSet,
    sub: Substitution,
    literals: Vec<usize>,
    first: bool,
    recursive: &BTreeSet<PredSig>,
    table: &AtomTable,
) -> Vec<Rule> {
    ground_rule_semi_naive(
        rule, certain, index, previous, sub, literals, first, recursive, table, false,
    )
}

/// [`ground_rule`] with the semi-naive delta restriction: when exactly one
/// positive body literal ranges over a predicate that can still grow
/// (`recursive`), candidates for it are restricted to atoms not yet in
/// `previous`, and rules without any growing literal are skipped entirely
/// on repeat passes.
///
/// This is lossless only under the component-loop invariant that every atom
/// over a non-growing predicate is already in `previous` when `first` is
/// off; plain [`ground_rule`] implements the unrestricted contract.
#[allow(clippy::too_many_arguments)]
pub fn ground_rule_semi_naive(
    rule: &Rule,
    certain: &AtomSet,
    index: &AtomIndex,
    previous: &AtomSet,
    sub: Substitution,
    literals: Vec<usize>,
    first: bool,
    recursive: &BTreeSet<PredSig>,
    table: &AtomTable,
    use_delta: bool,
) -> Vec<Rule> {
    debug_assert!(rule.is_normal(), "aggregates must be rewritten before grounding");

    // the single recursive positive literal eligible for delta restriction
    let delta_literal = if first || !use_delta {
        None
    } else {
        let growing: Vec<usize> = literals
            .iter()
            .copied()
            .filter(|&i| match &rule.body[i] {
                BodyLiteral::Literal(l) => !l.negated && recursive.contains(&l.atom.sig()),
                _ => false,
            })
            .collect();
        match growing.len() {
            0 => return Vec::new(), // all instances were produced before
            1 => Some(growing[0]),
            _ => None,
        }
    };

    struct Frame {
        sub: Substitution,
        remaining: Vec<usize>,
    }

    let mut out = Vec::new();
    let mut stack = vec![Frame { sub, remaining: literals }];
    while let Some(Frame { sub, remaining }) = stack.pop() {
        if remaining.is_empty() {
            let instance = rule.apply(&sub);
            if first || !positive_body_in(&instance, previous, table) {
                out.push(instance);
            }
            continue;
        }
        let chosen = select(rule, &remaining, &sub, recursive);
        let rest: Vec<usize> = remaining.iter().copied().filter(|&i| i != chosen).collect();
        let exclude = (delta_literal == Some(chosen)).then_some(previous);
        let subs = matches_excluding(&rule.body[chosen], certain, index, &sub, table, exclude);
        // preserve candidate order under the LIFO stack
        for s in subs.into_iter().rev() {
            stack.push(Frame { sub: s, remaining: rest.clone() });
        }
    }
    out
}

/// True if every positive body atom of the ground rule is in `atoms`.
pub fn positive_body_in(instance: &Rule, atoms: &AtomSet, table: &AtomTable) -> bool {
    instance.body.iter().all(|b| match b {
        BodyLiteral::Literal(l) if !l.negated => {
            table.lookup(&l.atom).is_some_and(|id| atoms.contains(&id))
        }
        _ => true,
    })
}
