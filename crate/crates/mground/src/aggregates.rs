//! Aggregate semantics: weight functions, aggregate application,
//! justification, the bounded translation of aggregates into ground
//! formulas, monotonicity classification, and the propagation procedures
//! used when evaluating aggregate values under a four-valued interpretation.

use crate::ground::{AtomSet, GroundAggregate, GroundElement, GroundFormula};
use crate::syntax::{AggFunc, Rel, Term};
use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use thiserror::Error;

/// Default cap on the number of tuples searched exactly when propagating
/// `=` and `!=` aggregates; beyond it the sound approximations are used.
pub const DEFAULT_SUBSET_SUM_CAP: usize = 20;

/// Default cap on the number of element instances expanded by
/// [`translate_bounded`].
pub const DEFAULT_EXPANSION_LIMIT: usize = 12;

/// The value of an aggregate function. Sums are computed in 128-bit
/// arithmetic, so applying a function to any runtime-sized set of 64-bit
/// weights is exact; the infinite values arise only for infinite sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggValue {
    Finite(i128),
    PlusInf,
    MinusInf,
}

impl AggValue {
    /// Compares an aggregate value with a ground bound term. `PlusInf`
    /// behaves like `#sup` and `MinusInf` like `#inf`; finite values sit in
    /// the integer segment of the term order.
    pub fn compare_to(self, bound: &Term) -> Ordering {
        match (self, bound) {
            (AggValue::Finite(v), Term::Integer(b)) => v.cmp(&(*b as i128)),
            (AggValue::Finite(_), Term::Inf) => Ordering::Greater,
            (AggValue::Finite(_), Term::Sup) => Ordering::Less,
            (AggValue::Finite(_), Term::Function(..)) => Ordering::Less,
            (AggValue::PlusInf, Term::Sup) => Ordering::Equal,
            (AggValue::PlusInf, _) => Ordering::Greater,
            (AggValue::MinusInf, Term::Inf) => Ordering::Equal,
            (AggValue::MinusInf, _) => Ordering::Less,
            (_, Term::Variable(_)) => unreachable!("bound must be ground"),
        }
    }
}

/// The weight of a ground tuple: its first element if that is an integer,
/// and 0 otherwise.
pub fn weight(tuple: &[Term]) -> i64 {
    match tuple.first() {
        Some(Term::Integer(n)) => *n,
        _ => 0,
    }
}

pub fn weight_pos(tuple: &[Term]) -> i64 {
    weight(tuple).max(0)
}

pub fn weight_neg(tuple: &[Term]) -> i64 {
    weight(tuple).min(0)
}

/// Applies an aggregate function to a set of ground tuples.
pub fn apply_aggregate(func: AggFunc, tuples: &BTreeSet<Vec<Term>>) -> AggValue {
    let v = match func {
        AggFunc::Count => tuples.len() as i128,
        AggFunc::Sum => tuples.iter().map(|t| weight(t) as i128).sum(),
        AggFunc::SumPlus => tuples.iter().map(|t| weight_pos(t) as i128).sum(),
        AggFunc::SumMinus => tuples.iter().map(|t| weight_neg(t) as i128).sum(),
    };
    AggValue::Finite(v)
}

/// The distinct tuples of a set of element instances.
pub fn tuples_of<'a>(elements: impl IntoIterator<Item = &'a GroundElement>) -> BTreeSet<Vec<Term>> {
    elements.into_iter().map(|e| e.tuple.clone()).collect()
}

/// True if the given element instances justify the aggregate, i.e. the
/// aggregate function applied to their tuples stands in the aggregate's
/// relation to the bound.
pub fn justifies<'a>(
    elements: impl IntoIterator<Item = &'a GroundElement>,
    agg: &GroundAggregate,
) -> bool {
    let tuples = tuples_of(elements);
    let value = apply_aggregate(agg.func, &tuples);
    agg.rel.holds(value.compare_to(&agg.bound))
}

/// Monotonicity classification of aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Monotone,
    Antimonotone,
    Neither,
}

/// Classifies an aggregate by function and relation: `#sum+` and `#count`
/// are monotone with `>`/`>=` and antimonotone with `<`/`<=`; `#sum-`
/// mirrors `#sum+` under the complementary relation; `#sum` and the
/// relations `=`/`!=` are neither.
pub fn classify(func: AggFunc, rel: Rel) -> Monotonicity {
    let rel = match func {
        AggFunc::SumMinus => rel.mirror(),
        _ => rel,
    };
    match (func, rel) {
        (AggFunc::Sum, _) => Monotonicity::Neither,
        (_, Rel::Gt | Rel::Ge) => Monotonicity::Monotone,
        (_, Rel::Lt | Rel::Le) => Monotonicity::Antimonotone,
        _ => Monotonicity::Neither,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("aggregate with {size} element instances exceeds the expansion limit {limit}")]
pub struct ExpansionLimit {
    pub size: usize,
    pub limit: usize,
}

/// Conjunction of the distinct condition atoms of a set of elements.
fn conds_formula(elements: &[&GroundElement]) -> GroundFormula {
    let mut atoms = BTreeSet::new();
    for e in elements {
        atoms.extend(e.condition.iter().copied());
    }
    let mut fs: Vec<GroundFormula> = atoms.into_iter().map(GroundFormula::Atom).collect();
    match fs.len() {
        0 => GroundFormula::True,
        1 => fs.pop().unwrap(),
        _ => GroundFormula::And(fs),
    }
}

/// Expands a ground aggregate into the equivalent ground formula over its
/// restricted element-instance set.
///
/// For each subset `D` of the instances that does not justify the
/// aggregate, the formula contains an implication from the conditions of
/// `D` to the disjunction over all extensions `C` disjoint from `D` with
/// `C ∪ D` justifying the aggregate. Monotone aggregates reduce to the
/// single conjunct with the trivially true antecedent, which is classically
/// equivalent and propagates more strongly.
///
/// This expansion is exponential in the number of instances and serves the
/// reference semantics in tests and the oracle, not the grounding path.
pub fn translate_bounded(
    agg: &GroundAggregate,
    limit: usize,
) -> Result<GroundFormula, ExpansionLimit> {
    let elements: Vec<&GroundElement> = agg.elements.iter().collect();
    let n = elements.len();
    if n > limit {
        return Err(ExpansionLimit { size: n, limit });
    }

    let subsets = SubsetValues::new(agg, &elements);

    if classify(agg.func, agg.rel) == Monotonicity::Monotone {
        // only the conjunct with the trivially true antecedent
        let mut disjuncts = Vec::new();
        for c in 0..(1u32 << n) {
            if subsets.justifies(c) {
                let sel: Vec<&GroundElement> =
                    (0..n).filter(|i| c & (1 << i) != 0).map(|i| elements[i]).collect();
                disjuncts.push(conds_formula(&sel));
            }
        }
        return Ok(match disjuncts.len() {
            0 => GroundFormula::False,
            1 => disjuncts.pop().unwrap(),
            _ => GroundFormula::Or(disjuncts),
        });
    }

    let mut conjuncts = Vec::new();
    for d in 0..(1u32 << n) {
        if subsets.justifies(d) {
            continue;
        }
        let d_sel: Vec<&GroundElement> =
            (0..n).filter(|i| d & (1 << i) != 0).map(|i| elements[i]).collect();
        let antecedent = conds_formula(&d_sel);
        let rest: Vec<usize> = (0..n).filter(|i| d & (1 << i) == 0).collect();
        let mut disjuncts = Vec::new();
        for bits in 0..(1u32 << rest.len()) {
            let mut c = 0u32;
            for (k, i) in rest.iter().enumerate() {
                if bits & (1 << k) != 0 {
                    c |= 1 << i;
                }
            }
            if subsets.justifies(c | d) {
                let c_sel: Vec<&GroundElement> =
                    rest.iter().enumerate().filter(|(k, _)| bits & (1 << *k) != 0)
                        .map(|(_, i)| elements[*i])
                        .collect();
                disjuncts.push(conds_formula(&c_sel));
            }
        }
        let consequent = match disjuncts.len() {
            0 => GroundFormula::False,
            1 => disjuncts.pop().unwrap(),
            _ => GroundFormula::Or(disjuncts),
        };
        conjuncts.push(GroundFormula::implies(antecedent, consequent));
    }
    Ok(match conjuncts.len() {
        0 => GroundFormula::True,
        _ => GroundFormula::And(conjuncts),
    })
}

/// Justification tests over element subsets encoded as bitmasks. Distinct
/// elements sharing a tuple collapse onto the same tuple bit, so values are
/// additive over tuple bits rather than element bits.
struct SubsetValues {
    rel: Rel,
    bound: Term,
    elem_tuple_bit: Vec<u64>,
    tuple_weights: Vec<i128>,
}

impl SubsetValues {
    fn new(agg: &GroundAggregate, elements: &[&GroundElement]) -> Self {
        let mut tuples: Vec<&Vec<Term>> = Vec::new();
        let mut elem_tuple_bit = Vec::with_capacity(elements.len());
        for e in elements {
            let idx = match tuples.iter().position(|t| *t == &e.tuple) {
                Some(i) => i,
                None => {
                    tuples.push(&e.tuple);
                    tuples.len() - 1
                }
            };
            elem_tuple_bit.push(1u64 << idx);
        }
        let tuple_weights = tuples
            .iter()
            .map(|t| match agg.func {
                AggFunc::Count => 1i128,
                AggFunc::Sum => weight(t) as i128,
                AggFunc::SumPlus => weight_pos(t) as i128,
                AggFunc::SumMinus => weight_neg(t) as i128,
            })
            .collect();
        SubsetValues { rel: agg.rel, bound: agg.bound.clone(), elem_tuple_bit, tuple_weights }
    }

    fn justifies(&self, subset: u32) -> bool {
        let mut tmask = 0u64;
        for (i, bit) in self.elem_tuple_bit.iter().enumerate() {
            if subset & (1 << i) != 0 {
                tmask |= bit;
            }
        }
        let mut v = 0i128;
        for (i, w) in self.tuple_weights.iter().enumerate() {
            if tmask & (1 << i) != 0 {
                v += w;
            }
        }
        self.rel.holds(AggValue::Finite(v).compare_to(&self.bound))
    }
}

/// Evaluation mode for [`propagate_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropagateMode {
    /// Whether the aggregate can hold: the reduct of the expanded formula
    /// w.r.t. `I`, evaluated under `J`.
    Possible,
    /// Classical satisfaction under a single interpretation passed as both
    /// `I` and `J`.
    Classical,
}

/// Decides `J ⊨ (π(a))ᴵ` for the bounded expansion of a ground aggregate
/// without materializing the formula.
///
/// Monotone aggregates reduce to justification by the `J`-satisfied
/// instances and antimonotone ones to the `I`-satisfied instances. `#sum`
/// with an order relation reduces to `#sum+`/`#sum-` with a shifted bound.
/// For `=` and `!=` the check is exact via subset-sum search while the
/// number of searched tuples stays within `cap`; beyond the cap a sound
/// over- or under-approximation is used.
pub fn propagate_check(
    agg: &GroundAggregate,
    certain: &AtomSet,
    possible: &AtomSet,
    mode: PropagateMode,
    cap: usize,
) -> bool {
    let sat_in = |set: &AtomSet| -> Vec<&GroundElement> {
        agg.elements.iter().filter(|e| e.condition.iter().all(|a| set.contains(a))).collect()
    };
    let (gi, gj) = match mode {
        PropagateMode::Classical => {
            let gx = sat_in(certain);
            return justifies(gx.iter().copied(), agg);
        }
        PropagateMode::Possible => (sat_in(certain), sat_in(possible)),
    };

    match classify(agg.func, agg.rel) {
        Monotonicity::Monotone => justifies(gj.iter().copied(), agg),
        Monotonicity::Antimonotone => justifies(gi.iter().copied(), agg),
        Monotonicity::Neither => {
            let bound = match &agg.bound {
                Term::Integer(b) => *b as i128,
                // any other ground bound makes the aggregate constant
                _ => return justifies([], agg),
            };
            let t_i = tuples_of(gi.iter().copied());
            let t_j = tuples_of(gj.iter().copied());
            match (agg.func, agg.rel) {
                (AggFunc::Sum, Rel::Gt | Rel::Ge) => {
                    let shifted = bound - sum_with(&t_i, weight_neg);
                    agg.rel.holds(sum_with(&t_j, weight_pos).cmp(&shifted))
                }
                (AggFunc::Sum, Rel::Lt | Rel::Le) => {
                    let shifted = bound - sum_with(&t_i, weight_pos);
                    agg.rel.holds(sum_with(&t_j, weight_neg).cmp(&shifted))
                }
                (_, Rel::Eq | Rel::Ne) => check_eq_neq(agg, &t_i, &t_j, bound, cap),
                _ => unreachable!("ordered #count/#sum+/#sum- are (anti)monotone"),
            }
        }
    }
}

fn sum_with(tuples: &BTreeSet<Vec<Term>>, w: fn(&[Term]) -> i64) -> i128 {
    tuples.iter().map(|t| w(t) as i128).sum()
}

fn func_value(func: AggFunc, tuples: &BTreeSet<Vec<Term>>) -> i128 {
    match apply_aggregate(func, tuples) {
        AggValue::Finite(v) => v,
        _ => unreachable!("finite tuple sets have finite values"),
    }
}

fn contribution(func: AggFunc, tuple: &[Term]) -> i128 {
    match func {
        AggFunc::Count => 1,
        AggFunc::Sum => weight(tuple) as i128,
        AggFunc::SumPlus => weight_pos(tuple) as i128,
        AggFunc::SumMinus => weight_neg(tuple) as i128,
    }
}

/// The set of values `f(X ∪ base)` for `X` ranging over subsets of `extra`,
/// assuming `extra` is disjoint from `base`.
fn achievable(func: AggFunc, base: &BTreeSet<Vec<Term>>, extra: &[&Vec<Term>]) -> HashSet<i128> {
    let mut sums = HashSet::new();
    sums.insert(func_value(func, base));
    for t in extra {
        let c = contribution(func, t);
        let with: Vec<i128> = sums.iter().map(|v| v + c).collect();
        sums.extend(with);
    }
    sums
}

fn check_eq_neq(
    agg: &GroundAggregate,
    t_i: &BTreeSet<Vec<Term>>,
    t_j: &BTreeSet<Vec<Term>>,
    bound: i128,
    cap: usize,
) -> bool {
    let order = |rel: Rel| check_order(agg, t_i, t_j, rel, bound);

    if t_i.is_subset(t_j) {
        match agg.rel {
            Rel::Eq => {
                // witness search: some subset of the J-only tuples added to
                // the I-satisfied ones hits the bound exactly
                let extra: Vec<&Vec<Term>> = t_j.difference(t_i).collect();
                if agg.func == AggFunc::Count || extra.len() <= cap {
                    achievable(agg.func, t_i, &extra).contains(&bound)
                } else {
                    order(Rel::Le) && order(Rel::Ge)
                }
            }
            Rel::Ne => order(Rel::Lt) || order(Rel::Gt),
            _ => unreachable!(),
        }
    } else if t_j.is_subset(t_i) {
        match agg.rel {
            Rel::Eq => order(Rel::Le) && order(Rel::Ge),
            Rel::Ne => {
                // refutation search: no subset of the I-only tuples added to
                // the J-satisfied ones may hit the bound
                let extra: Vec<&Vec<Term>> = t_i.difference(t_j).collect();
                if agg.func == AggFunc::Count || extra.len() <= cap {
                    !achievable(agg.func, t_j, &extra).contains(&bound)
                } else {
                    order(Rel::Lt) || order(Rel::Gt)
                }
            }
            _ => unreachable!(),
        }
    } else {
        // incomparable interpretations: evaluate the expansion semantics
        // directly when small enough
        general_eq_neq(agg, t_i, t_j, bound, cap)
    }
}

/// Direct evaluation of `∀D ⊆ Gᴵ with D not justifying: ∃C ⊆ Gᴶ \ D with
/// C ∪ D justifying` specialized to `=` and `!=`.
fn general_eq_neq(
    agg: &GroundAggregate,
    t_i: &BTreeSet<Vec<Term>>,
    t_j: &BTreeSet<Vec<Term>>,
    bound: i128,
    cap: usize,
) -> bool {
    let ti: Vec<&Vec<Term>> = t_i.iter().collect();
    if ti.len() > cap || ti.len() >= 24 {
        // sound fallbacks as in the comparable cases
        return match agg.rel {
            Rel::Eq => {
                check_order(agg, t_i, t_j, Rel::Le, bound) && check_order(agg, t_i, t_j, Rel::Ge, bound)
            }
            Rel::Ne => {
                check_order(agg, t_i, t_j, Rel::Lt, bound) || check_order(agg, t_i, t_j, Rel::Gt, bound)
            }
            _ => unreachable!(),
        };
    }
    for mask in 0..(1u32 << ti.len()) {
        let d: BTreeSet<Vec<Term>> = ti
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, t)| (*t).clone())
            .collect();
        let dv = func_value(agg.func, &d);
        if agg.rel.holds(AggValue::Finite(dv).compare_to(&agg.bound)) {
            continue; // D itself justifies
        }
        let extra: Vec<&Vec<Term>> = t_j.iter().filter(|t| !d.contains(*t)).collect();
        let values = achievable(agg.func, &d, &extra);
        let found = match agg.rel {
            Rel::Eq => values.contains(&bound),
            Rel::Ne => values.iter().any(|v| *v != bound),
            _ => unreachable!(),
        };
        if !found {
            return false;
        }
    }
    true
}

fn check_order(
    agg: &GroundAggregate,
    t_i: &BTreeSet<Vec<Term>>,
    t_j: &BTreeSet<Vec<Term>>,
    rel: Rel,
    bound: i128,
) -> bool {
    match classify(agg.func, rel) {
        Monotonicity::Monotone => {
            rel.holds(AggValue::Finite(func_value(agg.func, t_j)).compare_to(&agg.bound))
        }
        Monotonicity::Antimonotone => {
            rel.holds(AggValue::Finite(func_value(agg.func, t_i)).compare_to(&agg.bound))
        }
        Monotonicity::Neither => match rel {
            Rel::Gt | Rel::Ge => {
                rel.holds(sum_with(t_j, weight_pos).cmp(&(bound - sum_with(t_i, weight_neg))))
            }
            Rel::Lt | Rel::Le => {
                rel.holds(sum_with(t_j, weight_neg).cmp(&(bound - sum_with(t_i, weight_pos))))
            }
            _ => unreachable!(),
        },
    }
}
