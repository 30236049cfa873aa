//! Consequence, stable, and well-founded operators over ground rules,
//! together with program simplification.
//!
//! The reduct of a formula w.r.t. a set of certain atoms is never
//! materialized: negative atom occurrences are read off one set and
//! positive occurrences off another during a single traversal.

use crate::aggregates::{propagate_check, translate_bounded, PropagateMode, DEFAULT_SUBSET_SUM_CAP};
use crate::ground::{rule_atoms, AtomSet, GroundFormula, GroundRule, Interp4};
use crate::syntax::eval_comparison;

/// Classical satisfaction `X ⊨ F`. Aggregate values are evaluated by
/// justification over the elements whose conditions hold in `X`.
pub fn holds(f: &GroundFormula, x: &AtomSet) -> bool {
    eval(f, x, x, true)
}

/// Reduct satisfaction `J ⊨ Fᴵ`: positive atom occurrences are looked up
/// in `possible`, negatively occurring atoms are replaced by their truth
/// value in `certain`.
pub fn holds_reduct(f: &GroundFormula, certain: &AtomSet, possible: &AtomSet) -> bool {
    eval(f, certain, possible, true)
}

fn eval(f: &GroundFormula, i: &AtomSet, j: &AtomSet, positive: bool) -> bool {
    match f {
        GroundFormula::Atom(id) => {
            if positive {
                j.contains(id)
            } else {
                i.contains(id)
            }
        }
        GroundFormula::True => true,
        GroundFormula::False => false,
        GroundFormula::Cmp(c) => eval_comparison(c),
        GroundFormula::Not(g) => !eval(g, i, j, !positive),
        GroundFormula::And(fs) => fs.iter().all(|g| eval(g, i, j, positive)),
        GroundFormula::Or(fs) => fs.iter().any(|g| eval(g, i, j, positive)),
        GroundFormula::Implies(a, b) => !eval(a, i, j, !positive) || eval(b, i, j, positive),
        GroundFormula::Agg(agg) => {
            if positive {
                propagate_check(agg, i, j, PropagateMode::Possible, DEFAULT_SUBSET_SUM_CAP)
            } else {
                // aggregates occur only positively in rule bodies; a negative
                // occurrence can only come from a hand-built formula
                let expanded = translate_bounded(agg, agg.elements.len())
                    .expect("expansion below its own size cannot fail");
                eval(&expanded, i, j, positive)
            }
        }
    }
}

fn body_holds_reduct(r: &GroundRule, certain: &AtomSet, possible: &AtomSet) -> bool {
    r.body.iter().all(|f| holds_reduct(f, certain, possible))
}

/// One-step provability: the heads of all rules whose bodies hold in `x`.
pub fn immediate_consequence(rules: &[GroundRule], x: &AtomSet) -> AtomSet {
    rules.iter().filter(|r| r.body.iter().all(|f| holds(f, x))).map(|r| r.head).collect()
}

/// The stable operator relative to a context: the least fixed point of the
/// one-step operator of the reduct w.r.t. `j`, where each step derives from
/// the context atoms plus what was derived so far. The result contains only
/// derived heads; context atoms appear only if re-derived.
pub fn stable_relative(rules: &[GroundRule], context: &AtomSet, j: &AtomSet) -> AtomSet {
    let mut derived = AtomSet::new();
    loop {
        let eval_set: AtomSet = context.union(&derived).copied().collect();
        let step: AtomSet = rules
            .iter()
            .filter(|r| body_holds_reduct(r, j, &eval_set))
            .map(|r| r.head)
            .collect();
        if step.is_subset(&derived) {
            return derived;
        }
        derived.extend(step);
    }
}

/// One application of the well-founded operator relative to a context.
#[derive(Debug, Clone)]
pub struct WfStep {
    pub certain_arg: AtomSet,
    pub certain: AtomSet,
    pub possible_arg: AtomSet,
    pub possible: AtomSet,
}

/// The well-founded model relative to a context: the least fixed point of
/// `(I,J) ↦ (S(J ∪ Jr), S(I ∪ Ir))` starting from the least precise
/// interpretation over the rules' atoms. Returns the model and the trace of
/// operator applications; the final application confirms the fixed point.
pub fn well_founded_model_traced(
    rules: &[GroundRule],
    context: &Interp4,
) -> (Interp4, Vec<WfStep>) {
    let mut universe = rule_atoms(rules);
    universe.extend(context.certain.iter().copied());
    universe.extend(context.possible.iter().copied());

    let mut certain = AtomSet::new();
    let mut possible = universe;
    let mut steps = Vec::new();
    loop {
        let certain_arg: AtomSet = possible.union(&context.possible).copied().collect();
        let possible_arg: AtomSet = certain.union(&context.certain).copied().collect();
        let new_certain = stable_relative(rules, &context.certain, &certain_arg);
        let new_possible = stable_relative(rules, &context.possible, &possible_arg);
        steps.push(WfStep {
            certain_arg,
            certain: new_certain.clone(),
            possible_arg,
            possible: new_possible.clone(),
        });
        let fixed = new_certain == certain && new_possible == possible;
        certain = new_certain;
        possible = new_possible;
        if fixed {
            break;
        }
    }
    let model = Interp4::new(certain, possible);
    assert!(model.is_consistent(), "well-founded model must be consistent");
    (model, steps)
}

/// The well-founded model relative to a context.
pub fn well_founded_model(rules: &[GroundRule], context: &Interp4) -> Interp4 {
    well_founded_model_traced(rules, context).0
}

/// Keeps exactly the rules whose reduct bodies are satisfiable under the
/// interpretation; the kept rules are left untouched.
pub fn simplify(rules: &[GroundRule], interp: &Interp4) -> Vec<GroundRule> {
    rules
        .iter()
        .filter(|r| body_holds_reduct(r, &interp.certain, &interp.possible))
        .cloned()
        .collect()
}

/// Removes body conjuncts that are certainly true: positive literals among
/// the certain atoms, negative literals over atoms that are not possible,
/// comparisons that hold, and aggregate values certain to hold. Predicates
/// in `external` are not yet fully defined, so conjuncts reading them are
/// kept.
pub fn strip_certain(
    rules: &[GroundRule],
    interp: &Interp4,
    external: &std::collections::BTreeSet<(String, usize)>,
    table: &crate::ground::AtomTable,
) -> Vec<GroundRule> {
    let is_external = |id: &crate::ground::AtomId| {
        let atom = table.resolve(*id);
        external.contains(&atom.sig())
    };
    rules
        .iter()
        .map(|r| {
            let body = r
                .body
                .iter()
                .filter(|f| {
                    let certainly_true = match f {
                        GroundFormula::Atom(id) => interp.certain.contains(id),
                        GroundFormula::Not(inner) => match inner.as_ref() {
                            GroundFormula::Atom(id) => {
                                !is_external(id) && !interp.possible.contains(id)
                            }
                            _ => false,
                        },
                        GroundFormula::Cmp(c) => eval_comparison(c),
                        GroundFormula::True => true,
                        GroundFormula::Agg(agg) => {
                            let cond_external = agg
                                .elements
                                .iter()
                                .any(|e| e.condition.iter().any(|id| is_external(id)));
                            !cond_external
                                && propagate_check(
                                    agg,
                                    &interp.possible,
                                    &interp.certain,
                                    PropagateMode::Possible,
                                    DEFAULT_SUBSET_SUM_CAP,
                                )
                        }
                        _ => false,
                    };
                    !certainly_true
                })
                .cloned()
                .collect();
            GroundRule { head: r.head, body }
        })
        .collect()
}
