//! The grounding pipeline: aggregate rewriting into placeholder rules,
//! aggregate propagation and reassembly, component grounding, and the
//! program driver that walks the refined instantiation sequence with a
//! certain and a possible pass per component.

use crate::analysis::{check_program, flatten_units, instantiation_sequence, refine_sequence, PredSig, SafetyError};
use crate::ground::{AtomSet, AtomTable, GroundAggregate, GroundElement, GroundFormula, GroundRule,
    Interp4};
use crate::instantiate::{ground_rule_semi_naive, match_atom, AtomIndex, ApplySubst, Substitution};
use crate::ops::strip_certain;
use crate::parser::ParseError;
use crate::syntax::{Aggregate, Atom, BodyLiteral, Comparison, Literal, Program, Rule, Term,
    RESERVED_PREFIX};
use crate::aggregates::{propagate_check, PropagateMode, DEFAULT_SUBSET_SUM_CAP};
use std::collections::BTreeSet;
use thiserror::Error;

/// Options controlling a grounding run.
#[derive(Debug, Clone)]
pub struct GroundOptions {
    /// Walk the refined instantiation sequence instead of the plain one.
    pub refined: bool,
    /// Remove body literals that are certainly true at the time their
    /// component is emitted.
    pub strip: bool,
    /// Propagate `=`/`!=` aggregates exactly regardless of size.
    pub exact_agg: bool,
    /// Abort after this many rule-grounding calls.
    pub max_steps: Option<u64>,
}

impl Default for GroundOptions {
    fn default() -> Self {
        GroundOptions { refined: true, strip: false, exact_agg: false, max_steps: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroundError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Safety(#[from] SafetyError),
    #[error("step budget exhausted after {steps} rule groundings")]
    Budget { steps: u64 },
}

/// Per-component interpretations recorded during grounding.
#[derive(Debug, Clone)]
pub struct ComponentTrace {
    pub outer: usize,
    pub sub: usize,
    pub stratified: bool,
    pub externals: BTreeSet<PredSig>,
    /// Atoms that became certain while grounding this component.
    pub new_certain: AtomSet,
    /// Atoms that became possible while grounding this component.
    pub new_possible: AtomSet,
}

/// The result of grounding a program.
#[derive(Debug, Clone)]
pub struct GroundProgramOut {
    pub rules: Vec<GroundRule>,
    pub table: AtomTable,
    /// Final certain and possible atoms.
    pub interp: Interp4,
    pub trace: Vec<ComponentTrace>,
}

impl GroundProgramOut {
    /// The textual ground program, one rule per line.
    pub fn text(&self) -> String {
        crate::ground::render_rules(&self.rules, &self.table)
    }
}

/// One aggregate occurrence with its fresh predicate names and the
/// information needed to reconstruct ground aggregates from placeholder
/// atoms.
#[derive(Debug, Clone)]
pub struct AggregateOccurrence {
    pub rule_index: usize,
    pub aggregate: Aggregate,
    /// Global variables of the aggregate in textual order.
    pub global_vars: Vec<String>,
    pub alpha_pred: String,
    pub eta_pred: String,
    pub eps_preds: Vec<String>,
}

/// A component after aggregate rewriting: rules with aggregates replaced by
/// placeholder atoms, the auxiliary rules describing when an aggregate holds
/// over the empty set and which element instances exist, and the back-map
/// from placeholder predicates to their occurrences.
#[derive(Debug, Clone)]
pub struct RewrittenComponent {
    /// `(source rule index, rewritten rule)`.
    pub alpha_rules: Vec<(usize, Rule)>,
    /// `(occurrence index, rule)`.
    pub eta_rules: Vec<(usize, Rule)>,
    /// `(occurrence index, element index, rule)`.
    pub eps_rules: Vec<(usize, usize, Rule)>,
    pub occurrences: Vec<AggregateOccurrence>,
}

impl RewrittenComponent {
    fn occurrence_of_alpha(&self, pred: &str) -> Option<usize> {
        self.occurrences.iter().position(|o| o.alpha_pred == pred)
    }

    /// Predicates whose extension can grow while the component is ground.
    fn growing_preds(&self) -> BTreeSet<PredSig> {
        let mut set: BTreeSet<PredSig> = self
            .alpha_rules
            .iter()
            .map(|(_, r)| r.head.sig())
            .collect();
        for o in &self.occurrences {
            set.insert((o.alpha_pred.clone(), o.global_vars.len()));
        }
        set
    }
}

/// Variables occurring in an aggregate, in textual order.
fn aggregate_vars(a: &Aggregate) -> Vec<String> {
    let mut vars = Vec::new();
    for e in &a.elements {
        for t in &e.tuple {
            t.collect_vars(&mut vars);
        }
        for c in &e.condition {
            c.collect_vars(&mut vars);
        }
    }
    a.bound.collect_vars(&mut vars);
    vars
}

/// Replaces each aggregate occurrence in the component by a fresh
/// placeholder atom over the aggregate's global variables and generates the
/// auxiliary rules that track empty-set applicability and element
/// instances. Normal rules pass through untouched.
pub fn rewrite_aggregates(rules: &[(usize, Rule)]) -> RewrittenComponent {
    let mut out = RewrittenComponent {
        alpha_rules: Vec::new(),
        eta_rules: Vec::new(),
        eps_rules: Vec::new(),
        occurrences: Vec::new(),
    };
    for (rule_index, rule) in rules {
        if rule.is_normal() {
            out.alpha_rules.push((*rule_index, rule.clone()));
            continue;
        }
        let rule_globals = rule.global_vars();
        let plain_body: Vec<BodyLiteral> = rule
            .body
            .iter()
            .filter(|b| !matches!(b, BodyLiteral::Aggregate(_)))
            .cloned()
            .collect();
        let mut body = Vec::new();
        let mut agg_counter = 0usize;
        for b in &rule.body {
            let BodyLiteral::Aggregate(a) = b else {
                body.push(b.clone());
                continue;
            };
            let occ_index = out.occurrences.len();
            let tag = format!("{rule_index}_{agg_counter}");
            agg_counter += 1;
            let globals: Vec<String> = aggregate_vars(a)
                .into_iter()
                .filter(|v| rule_globals.contains(v))
                .collect();
            let global_args: Vec<Term> =
                globals.iter().map(|v| Term::Variable(v.clone())).collect();

            let alpha_pred = format!("{RESERVED_PREFIX}alpha_{tag}");
            body.push(BodyLiteral::Literal(Literal {
                atom: Atom { predicate: alpha_pred.clone(), args: global_args.clone() },
                negated: false,
            }));

            // the value of the aggregate function on the empty set is 0 for
            // all supported functions
            let eta_pred = format!("{RESERVED_PREFIX}eta_{tag}");
            let mut eta_body = vec![BodyLiteral::Comparison(Comparison {
                left: Term::Integer(0),
                rel: a.rel,
                right: a.bound.clone(),
            })];
            eta_body.extend(plain_body.iter().cloned());
            out.eta_rules.push((
                occ_index,
                Rule {
                    head: Atom { predicate: eta_pred.clone(), args: global_args.clone() },
                    body: eta_body,
                },
            ));

            let mut eps_preds = Vec::new();
            for (elem_index, e) in a.elements.iter().enumerate() {
                let eps_pred = format!("{RESERVED_PREFIX}eps_{tag}_{elem_index}");
                let mut head_args = e.tuple.clone();
                head_args.extend(global_args.iter().cloned());
                let mut eps_body: Vec<BodyLiteral> = e
                    .condition
                    .iter()
                    .map(|c| BodyLiteral::Literal(Literal { atom: c.clone(), negated: false }))
                    .collect();
                eps_body.extend(plain_body.iter().cloned());
                out.eps_rules.push((
                    occ_index,
                    elem_index,
                    Rule { head: Atom { predicate: eps_pred.clone(), args: head_args }, body: eps_body },
                ));
                eps_preds.push(eps_pred);
            }

            out.occurrences.push(AggregateOccurrence {
                rule_index: *rule_index,
                aggregate: a.clone(),
                global_vars: globals,
                alpha_pred,
                eta_pred,
                eps_preds,
            });
        }
        out.alpha_rules.push((*rule_index, Rule { head: rule.head.clone(), body }));
    }
    out
}

/// Matches a (possibly non-ground) rule against a ground instance of it,
/// returning the matcher if one exists.
fn match_rule(pattern: &Rule, ground: &Rule) -> Option<Substitution> {
    if pattern.body.len() != ground.body.len() {
        return None;
    }
    let mut sub = match_atom(&pattern.head, &ground.head)?;
    for (p, g) in pattern.body.iter().zip(&ground.body) {
        match (p.apply(&sub), g) {
            (BodyLiteral::Literal(lp), BodyLiteral::Literal(lg)) => {
                if lp.negated != lg.negated {
                    return None;
                }
                let ext = match_atom(&lp.atom, &lg.atom)?;
                for (v, t) in ext {
                    match sub.get(&v) {
                        Some(existing) if *existing != t => return None,
                        _ => {
                            sub.insert(v, t);
                        }
                    }
                }
            }
            (BodyLiteral::Comparison(cp), BodyLiteral::Comparison(cg)) => {
                if cp != *cg {
                    return None;
                }
            }
            _ => return None,
        }
    }
    Some(sub)
}

/// True if some ground instance in `g_eta` witnesses that the aggregate of
/// the occurrence applies to the empty element set under `sub`.
pub fn aggr_empty(
    rw: &RewrittenComponent,
    occ: usize,
    g_eta: &[(usize, Rule)],
    sub: &Substitution,
) -> bool {
    let Some((_, pattern)) = rw.eta_rules.iter().find(|(o, _)| *o == occ) else {
        return false;
    };
    let pattern = pattern.apply(sub);
    g_eta.iter().any(|(o, g)| *o == occ && match_rule(&pattern, g).is_some())
}

/// The ground element instances of the occurrence's aggregate recovered
/// from the ground element rules, for a substitution grounding the
/// aggregate's global variables.
pub fn aggr_elem(
    rw: &RewrittenComponent,
    occ: usize,
    g_eps: &[(usize, usize, Rule)],
    sub: &Substitution,
) -> BTreeSet<crate::syntax::AggregateElement> {
    let o = &rw.occurrences[occ];
    let mut out = BTreeSet::new();
    for (eo, elem_index, g) in g_eps {
        if *eo != occ {
            continue;
        }
        let (_, _, pattern) = rw
            .eps_rules
            .iter()
            .find(|(po, pe, _)| po == eo && pe == elem_index)
            .expect("element rule exists for its own instances");
        let pattern = pattern.apply(sub);
        if let Some(theta) = match_rule(&pattern, g) {
            let elem = o.aggregate.elements[*elem_index].apply(sub).apply(&theta);
            out.insert(elem);
        }
    }
    out
}

fn intern_element(
    e: &crate::syntax::AggregateElement,
    table: &mut AtomTable,
) -> GroundElement {
    GroundElement {
        tuple: e.tuple.clone(),
        condition: e.condition.iter().map(|c| table.intern(c)).collect(),
    }
}

fn ground_aggregate_for(
    occ: &AggregateOccurrence,
    elements: &BTreeSet<crate::syntax::AggregateElement>,
    sub: &Substitution,
    table: &mut AtomTable,
) -> GroundAggregate {
    GroundAggregate {
        func: occ.aggregate.func,
        elements: elements.iter().map(|e| intern_element(e, table)).collect(),
        rel: occ.aggregate.rel,
        bound: occ.aggregate.bound.apply(sub),
    }
}

/// Derives the ground placeholder atoms whose aggregates can hold: for each
/// substitution of an aggregate's global variables witnessed by the ground
/// auxiliary rules, the placeholder atom is produced if the reduct of the
/// aggregate's expansion w.r.t. `certain` is satisfied by `possible`.
pub fn propagate(
    rw: &RewrittenComponent,
    g_eta: &[(usize, Rule)],
    g_eps: &[(usize, usize, Rule)],
    certain: &AtomSet,
    possible: &AtomSet,
    table: &mut AtomTable,
    cap: usize,
) -> AtomSet {
    let mut result = AtomSet::new();
    for (occ_index, occ) in rw.occurrences.iter().enumerate() {
        let arity = occ.global_vars.len();
        let mut candidates: BTreeSet<Vec<Term>> = BTreeSet::new();
        for (o, g) in g_eta {
            if *o == occ_index {
                candidates.insert(g.head.args.clone());
            }
        }
        for (o, _, g) in g_eps {
            if *o == occ_index {
                candidates.insert(g.head.args[g.head.args.len() - arity..].to_vec());
            }
        }
        for args in candidates {
            let sub: Substitution =
                occ.global_vars.iter().cloned().zip(args.iter().cloned()).collect();
            let empty_ok = aggr_empty(rw, occ_index, g_eta, &sub);
            let elements = aggr_elem(rw, occ_index, g_eps, &sub);
            if !empty_ok && elements.is_empty() {
                continue;
            }
            let ga = ground_aggregate_for(occ, &elements, &sub, table);
            if propagate_check(&ga, certain, possible, PropagateMode::Possible, cap) {
                let alpha = Atom { predicate: occ.alpha_pred.clone(), args };
                result.insert(table.intern(&alpha));
            }
        }
    }
    result
}

/// Replaces placeholder atoms in the ground rules by the ground aggregates
/// they stand for, recovering each aggregate's element instances from the
/// ground element rules. Comparisons were evaluated during grounding and
/// are kept as the truth constants they denote.
pub fn assemble(
    rw: &RewrittenComponent,
    g_alpha: &[(usize, Rule)],
    g_eps: &[(usize, usize, Rule)],
    table: &mut AtomTable,
) -> Vec<GroundRule> {
    let mut out = Vec::new();
    for (_, rule) in g_alpha {
        let head = table.intern(&rule.head);
        let mut body = Vec::new();
        for b in &rule.body {
            match b {
                BodyLiteral::Literal(l) if !l.negated => {
                    if l.atom.predicate.starts_with(RESERVED_PREFIX) {
                        let occ_index = rw
                            .occurrence_of_alpha(&l.atom.predicate)
                            .expect("placeholder atom lacks a rewrite entry");
                        let occ = &rw.occurrences[occ_index];
                        let sub: Substitution = occ
                            .global_vars
                            .iter()
                            .cloned()
                            .zip(l.atom.args.iter().cloned())
                            .collect();
                        let elements = aggr_elem(rw, occ_index, g_eps, &sub);
                        let ga = ground_aggregate_for(occ, &elements, &sub, table);
                        body.push(GroundFormula::Agg(ga));
                    } else {
                        body.push(GroundFormula::Atom(table.intern(&l.atom)));
                    }
                }
                BodyLiteral::Literal(l) => {
                    body.push(GroundFormula::not(GroundFormula::Atom(table.intern(&l.atom))));
                }
                BodyLiteral::Comparison(c) => body.push(GroundFormula::Cmp(c.clone())),
                BodyLiteral::Aggregate(_) => {
                    unreachable!("aggregates are rewritten before grounding")
                }
            }
        }
        out.push(GroundRule { head, body });
    }
    out
}

struct Budget {
    steps: u64,
    limit: Option<u64>,
}

impl Budget {
    fn spend(&mut self) -> Result<(), GroundError> {
        self.steps += 1;
        match self.limit {
            Some(limit) if self.steps > limit => Err(GroundError::Budget { steps: limit }),
            _ => Ok(()),
        }
    }
}

/// Grounds one component against the atoms derived so far. Negative
/// literals are checked against `certain`; `possible` seeds the matchable
/// atoms and is extended with every head derived here. Returns the
/// assembled rules; the iteration stops when no new head atoms appear.
fn ground_component_impl(
    rules: &[(usize, Rule)],
    certain: &AtomSet,
    possible: &AtomSet,
    table: &mut AtomTable,
    budget: &mut Budget,
    cap: usize,
) -> Result<(Vec<GroundRule>, AtomSet), GroundError> {
    let rw = rewrite_aggregates(rules);
    let growing = rw.growing_preds();

    let mut index = AtomIndex::new();
    for &id in possible {
        index.insert(id, table);
    }

    let mut g_eta: Vec<(usize, Rule)> = Vec::new();
    let mut g_eps: Vec<(usize, usize, Rule)> = Vec::new();
    let mut g_alpha: Vec<(usize, Rule)> = Vec::new();
    let mut first = true;
    let mut j_alpha_prev = AtomSet::new();
    let mut j_prev = AtomSet::new();
    let mut j_real: AtomSet = possible.clone();

    loop {
        for (occ, rule) in &rw.eta_rules {
            budget.spend()?;
            let body: Vec<usize> = (0..rule.body.len()).collect();
            for inst in ground_rule_semi_naive(
                rule, certain, &index, &j_prev, Substitution::new(), body, first, &growing,
                table, true,
            ) {
                g_eta.push((*occ, inst));
            }
        }
        for (occ, elem, rule) in &rw.eps_rules {
            budget.spend()?;
            let body: Vec<usize> = (0..rule.body.len()).collect();
            for inst in ground_rule_semi_naive(
                rule, certain, &index, &j_prev, Substitution::new(), body, first, &growing,
                table, true,
            ) {
                g_eps.push((*occ, *elem, inst));
            }
        }
        let j_alpha = propagate(&rw, &g_eta, &g_eps, certain, &j_real, table, cap);
        for &id in &j_alpha {
            index.insert(id, table);
        }
        let prev_with_alpha: AtomSet = j_prev.union(&j_alpha_prev).copied().collect();
        let mut new_heads = Vec::new();
        for (src, rule) in &rw.alpha_rules {
            budget.spend()?;
            let body: Vec<usize> = (0..rule.body.len()).collect();
            for inst in ground_rule_semi_naive(
                rule,
                certain,
                &index,
                &prev_with_alpha,
                Substitution::new(),
                body,
                first,
                &growing,
                table,
                true,
            ) {
                new_heads.push(inst.head.clone());
                g_alpha.push((*src, inst));
            }
        }
        first = false;
        j_alpha_prev = j_alpha;
        j_prev = j_real.clone();
        for head in new_heads {
            let id = table.intern(&head);
            index.insert(id, table);
            j_real.insert(id);
        }
        if j_prev == j_real {
            break;
        }
    }

    let derived: AtomSet = j_real.difference(possible).copied().collect();
    Ok((assemble(&rw, &g_alpha, &g_eps, table), derived))
}

/// Grounds a component of safe rules relative to context atoms, as used by
/// the per-component passes of [`ground_program`].
pub fn ground_component(
    rules: &[(usize, Rule)],
    certain: &AtomSet,
    possible: &AtomSet,
    table: &mut AtomTable,
    options: &GroundOptions,
) -> Result<(Vec<GroundRule>, AtomSet), GroundError> {
    let mut budget = Budget { steps: 0, limit: options.max_steps };
    let cap = if options.exact_agg { usize::MAX } else { DEFAULT_SUBSET_SUM_CAP };
    ground_component_impl(rules, certain, possible, table, &mut budget, cap)
}

/// Grounds a program along its (refined) instantiation sequence. For each
/// component, a certain pass over the rules without externally blocked
/// negation derives facts, then a possible pass over the full component
/// derives the rules of the output.
pub fn ground_program(
    program: &Program,
    options: &GroundOptions,
) -> Result<GroundProgramOut, GroundError> {
    check_program(program)?;
    let seq = instantiation_sequence(program);
    let seq = if options.refined { refine_sequence(&seq, program) } else { seq };
    let units = flatten_units(&seq, program);

    let mut table = AtomTable::new();
    let mut budget = Budget { steps: 0, limit: options.max_steps };
    let cap = if options.exact_agg { usize::MAX } else { DEFAULT_SUBSET_SUM_CAP };

    let mut certain = AtomSet::new(); // Head(F)
    let mut possible = AtomSet::new(); // Head(G)
    let mut output = Vec::new();
    let mut seen: std::collections::HashSet<GroundRule> = std::collections::HashSet::new();
    let mut trace = Vec::new();

    for unit in &units {
        let rules: Vec<(usize, Rule)> =
            unit.rules.iter().map(|&i| (i, program.rules[i].clone())).collect();
        let pruned: Vec<(usize, Rule)> = rules
            .iter()
            .filter(|(i, _)| {
                let (_, neg) = rule_occurrence_preds(&program.rules[*i]);
                neg.intersection(&unit.externals).next().is_none()
            })
            .cloned()
            .collect();

        // certain pass: negation reads the possible atoms, derivation is
        // seeded by the certain ones
        let (_, new_certain) =
            ground_component_impl(&pruned, &possible, &certain, &mut table, &mut budget, cap)?;
        certain.extend(new_certain.iter().copied());

        // possible pass over the full component with roles reversed
        let (mut component_rules, new_possible) =
            ground_component_impl(&rules, &certain, &possible, &mut table, &mut budget, cap)?;
        possible.extend(new_possible.iter().copied());

        if options.strip {
            let interp = Interp4::new(certain.clone(), possible.clone());
            component_rules = strip_certain(&component_rules, &interp, &unit.externals, &table);
        }
        // duplicate input rules produce the same instances; the output is a set
        for rule in component_rules {
            if seen.insert(rule.clone()) {
                output.push(rule);
            }
        }
        trace.push(ComponentTrace {
            outer: unit.outer,
            sub: unit.sub,
            stratified: unit.stratified,
            externals: unit.externals.clone(),
            new_certain,
            new_possible,
        });
    }

    Ok(GroundProgramOut {
        rules: output,
        table,
        interp: Interp4::new(certain, possible),
        trace,
    })
}

fn rule_occurrence_preds(rule: &Rule) -> (BTreeSet<PredSig>, BTreeSet<PredSig>) {
    let mut pos = BTreeSet::new();
    let mut neg = BTreeSet::new();
    for b in &rule.body {
        let (p, n) = crate::analysis::body_occurrences(b);
        pos.extend(p.iter().map(Atom::sig));
        neg.extend(n.iter().map(Atom::sig));
    }
    (pos, neg)
}

/// The approximate model of the run: the join of all per-component
/// interpretations, which is also the final interpretation.
pub fn approximate_model(out: &GroundProgramOut) -> Interp4 {
    out.interp.clone()
}
