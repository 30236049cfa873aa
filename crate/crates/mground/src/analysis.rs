//! Safety checking, rule dependencies, strongly connected components, and
//! (refined) instantiation sequences with per-component external predicates.

use crate::aggregates::{classify, Monotonicity};
use crate::syntax::{Atom, BodyLiteral, Program, Rule};
use std::collections::BTreeSet;
use thiserror::Error;

/// Predicate identity: name and arity.
pub type PredSig = (String, usize);

/// The positive and negative atom occurrences of a body literal. Comparisons
/// contribute nothing; a monotone aggregate contributes its condition atoms
/// positively only, any other aggregate contributes them with both signs.
pub fn body_occurrences(b: &BodyLiteral) -> (Vec<Atom>, Vec<Atom>) {
    match b {
        BodyLiteral::Literal(l) => {
            if l.negated {
                (Vec::new(), vec![l.atom.clone()])
            } else {
                (vec![l.atom.clone()], Vec::new())
            }
        }
        BodyLiteral::Comparison(_) => (Vec::new(), Vec::new()),
        BodyLiteral::Aggregate(a) => {
            let conds: Vec<Atom> =
                a.elements.iter().flat_map(|e| e.condition.iter().cloned()).collect();
            if classify(a.func, a.rel) == Monotonicity::Monotone {
                (conds, Vec::new())
            } else {
                (conds.clone(), conds)
            }
        }
    }
}

fn rule_occurrences(r: &Rule) -> (Vec<Atom>, Vec<Atom>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for b in &r.body {
        let (p, n) = body_occurrences(b);
        pos.extend(p);
        neg.extend(n);
    }
    (pos, neg)
}

fn pred_sigs(atoms: &[Atom]) -> BTreeSet<PredSig> {
    atoms.iter().map(Atom::sig).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsafe variable `{variable}` in rule {rule_index}")]
pub struct SafetyError {
    pub variable: String,
    pub rule_index: usize,
}

/// Checks that every global variable occurs in a positive body literal and
/// that every local variable of an aggregate element occurs in a condition
/// atom of that element. The first offending variable in textual order is
/// reported.
pub fn check_safety(r: &Rule, rule_index: usize) -> Result<(), SafetyError> {
    let globals = r.global_vars();
    let mut positive_vars = Vec::new();
    for b in &r.body {
        if let BodyLiteral::Literal(l) = b {
            if !l.negated {
                l.atom.collect_vars(&mut positive_vars);
            }
        }
    }
    for v in &globals {
        if !positive_vars.contains(v) {
            return Err(SafetyError { variable: v.clone(), rule_index });
        }
    }
    for b in &r.body {
        if let BodyLiteral::Aggregate(a) = b {
            for e in &a.elements {
                let mut elem_vars = Vec::new();
                for t in &e.tuple {
                    t.collect_vars(&mut elem_vars);
                }
                for c in &e.condition {
                    c.collect_vars(&mut elem_vars);
                }
                let mut cond_vars = Vec::new();
                for c in &e.condition {
                    c.collect_vars(&mut cond_vars);
                }
                for v in &elem_vars {
                    if !globals.contains(v) && !cond_vars.contains(v) {
                        return Err(SafetyError { variable: v.clone(), rule_index });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Checks safety of every rule in input order.
pub fn check_program(p: &Program) -> Result<(), SafetyError> {
    for (i, r) in p.rules.iter().enumerate() {
        check_safety(r, i)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

/// Rule-level dependencies: an edge `(from, to, sign)` states that rule
/// `from` depends on rule `to` because the head predicate of `to` occurs
/// with that sign in the body of `from`.
#[derive(Debug, Clone)]
pub struct DependencyGraph {
    pub rule_count: usize,
    pub edges: Vec<(usize, usize, Sign)>,
}

pub fn build_dependency_graph(p: &Program) -> DependencyGraph {
    let heads: Vec<PredSig> = p.rules.iter().map(|r| r.head.sig()).collect();
    let mut edges = Vec::new();
    for (i, r) in p.rules.iter().enumerate() {
        let (pos, neg) = rule_occurrences(r);
        let pos = pred_sigs(&pos);
        let neg = pred_sigs(&neg);
        for (j, head) in heads.iter().enumerate() {
            if pos.contains(head) {
                edges.push((i, j, Sign::Positive));
            }
            if neg.contains(head) {
                edges.push((i, j, Sign::Negative));
            }
        }
    }
    DependencyGraph { rule_count: p.rules.len(), edges }
}

/// One strongly connected component of the dependency graph.
#[derive(Debug, Clone)]
pub struct Component {
    /// Rule indices in ascending order.
    pub rules: Vec<usize>,
    pub stratified: bool,
    /// Negative body predicates defined in this or a later component.
    pub externals: BTreeSet<PredSig>,
    /// Partition along positive dependencies, in evaluation order. Before
    /// refinement this is the single set of all rules of the component.
    pub subcomponents: Vec<Vec<usize>>,
}

/// The ordered strongly connected components of a program.
#[derive(Debug, Clone)]
pub struct ComponentSequence {
    pub components: Vec<Component>,
}

/// Kosaraju's algorithm; groups are returned unordered.
fn sccs(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    let mut radj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        radj[v].push(u);
    }
    fn dfs(u: usize, adj: &[Vec<usize>], seen: &mut [bool], order: &mut Vec<usize>) {
        seen[u] = true;
        for &v in &adj[u] {
            if !seen[v] {
                dfs(v, adj, seen, order);
            }
        }
        order.push(u);
    }
    let mut seen = vec![false; n];
    let mut order = Vec::new();
    for u in 0..n {
        if !seen[u] {
            dfs(u, &adj, &mut seen, &mut order);
        }
    }
    let mut group = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &u in order.iter().rev() {
        if group[u] != usize::MAX {
            continue;
        }
        let mut stack = vec![u];
        let id = groups.len();
        let mut members = Vec::new();
        group[u] = id;
        while let Some(x) = stack.pop() {
            members.push(x);
            for &v in &radj[x] {
                if group[v] == usize::MAX {
                    group[v] = id;
                    stack.push(v);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }
    groups
}

/// Orders component groups topologically so that dependencies come first;
/// among simultaneously ready components the one containing the smallest
/// rule index is emitted first.
fn topo_order(groups: Vec<Vec<usize>>, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let n_groups = groups.len();
    let mut group_of = std::collections::HashMap::new();
    for (gi, g) in groups.iter().enumerate() {
        for &r in g {
            group_of.insert(r, gi);
        }
    }
    // group u depends on group v
    let mut deps: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_groups];
    let mut rdeps: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_groups];
    for &(u, v) in edges {
        let (gu, gv) = (group_of[&u], group_of[&v]);
        if gu != gv {
            deps[gu].insert(gv);
            rdeps[gv].insert(gu);
        }
    }
    let mut pending: Vec<usize> = deps.iter().map(BTreeSet::len).collect();
    // ready groups keyed by their smallest rule index
    let mut ready: BTreeSet<(usize, usize)> = (0..n_groups)
        .filter(|&g| pending[g] == 0)
        .map(|g| (groups[g][0], g))
        .collect();
    let mut out = Vec::with_capacity(n_groups);
    while let Some(&(key, g)) = ready.iter().next() {
        ready.remove(&(key, g));
        out.push(groups[g].clone());
        for &h in &rdeps[g] {
            pending[h] -= 1;
            if pending[h] == 0 {
                ready.insert((groups[h][0], h));
            }
        }
    }
    debug_assert_eq!(out.len(), n_groups);
    out
}

/// Computes the instantiation sequence: strongly connected components in a
/// deterministic topological order, with stratification flags and external
/// predicate sets. Each component starts out unrefined.
pub fn instantiation_sequence(p: &Program) -> ComponentSequence {
    let graph = build_dependency_graph(p);
    let all_edges: Vec<(usize, usize)> = graph.edges.iter().map(|&(u, v, _)| (u, v)).collect();
    let groups = topo_order(sccs(graph.rule_count, &all_edges), &all_edges);

    // a component is unstratified if it depends negatively on itself or
    // depends on an unstratified component
    let mut group_of = std::collections::HashMap::new();
    for (gi, g) in groups.iter().enumerate() {
        for &r in g {
            group_of.insert(r, gi);
        }
    }
    let mut unstratified = vec![false; groups.len()];
    for (gi, _) in groups.iter().enumerate() {
        if graph
            .edges
            .iter()
            .any(|&(u, v, s)| s == Sign::Negative && group_of[&u] == gi && group_of[&v] == gi)
        {
            unstratified[gi] = true;
        }
    }
    // groups are in topological order, so one forward pass suffices
    for gi in 0..groups.len() {
        if !unstratified[gi] {
            let members: BTreeSet<usize> = groups[gi].iter().copied().collect();
            unstratified[gi] = graph.edges.iter().any(|&(u, v, _)| {
                members.contains(&u) && !members.contains(&v) && unstratified[group_of[&v]]
            });
        }
    }

    let components = groups
        .into_iter()
        .enumerate()
        .map(|(gi, rules)| Component {
            subcomponents: vec![rules.clone()],
            rules,
            stratified: !unstratified[gi],
            externals: BTreeSet::new(),
        })
        .collect();
    let mut seq = ComponentSequence { components };
    fill_externals(&mut seq, p);
    seq
}

/// External predicates per sequence position: negative body predicates of
/// the component that are defined by the heads of this or any later
/// component.
fn fill_externals(seq: &mut ComponentSequence, p: &Program) {
    let unit_rules: Vec<Vec<usize>> =
        seq.components.iter().map(|c| c.rules.clone()).collect();
    let ext = externals_for(&unit_rules, p);
    for (c, e) in seq.components.iter_mut().zip(ext) {
        c.externals = e;
    }
}

fn externals_for(units: &[Vec<usize>], p: &Program) -> Vec<BTreeSet<PredSig>> {
    let mut suffix_heads: Vec<BTreeSet<PredSig>> = vec![BTreeSet::new(); units.len() + 1];
    for i in (0..units.len()).rev() {
        let mut heads: BTreeSet<PredSig> =
            units[i].iter().map(|&r| p.rules[r].head.sig()).collect();
        heads.extend(suffix_heads[i + 1].iter().cloned());
        suffix_heads[i] = heads;
    }
    units
        .iter()
        .enumerate()
        .map(|(i, unit)| {
            let mut neg = BTreeSet::new();
            for &r in unit {
                let (_, n) = rule_occurrences(&p.rules[r]);
                neg.extend(pred_sigs(&n));
            }
            neg.intersection(&suffix_heads[i]).cloned().collect()
        })
        .collect()
}

/// Splits every component along positive dependencies only, ordering the
/// parts topologically with the same tie-breaking as the outer sequence.
/// The outer order and the rule partition are preserved.
pub fn refine_sequence(seq: &ComponentSequence, p: &Program) -> ComponentSequence {
    let graph = build_dependency_graph(p);
    let pos_edges: Vec<(usize, usize)> = graph
        .edges
        .iter()
        .filter(|&&(_, _, s)| s == Sign::Positive)
        .map(|&(u, v, _)| (u, v))
        .collect();
    let components = seq
        .components
        .iter()
        .map(|c| {
            let members: BTreeSet<usize> = c.rules.iter().copied().collect();
            let local: Vec<usize> = c.rules.clone();
            let index_of: std::collections::HashMap<usize, usize> =
                local.iter().enumerate().map(|(i, &r)| (r, i)).collect();
            let internal: Vec<(usize, usize)> = pos_edges
                .iter()
                .filter(|&&(u, v)| members.contains(&u) && members.contains(&v))
                .map(|&(u, v)| (index_of[&u], index_of[&v]))
                .collect();
            let groups = topo_order(sccs(local.len(), &internal), &internal);
            let subcomponents: Vec<Vec<usize>> = groups
                .into_iter()
                .map(|g| g.into_iter().map(|i| local[i]).collect())
                .collect();
            Component { subcomponents, ..c.clone() }
        })
        .collect();
    ComponentSequence { components }
}

/// A flattened grounding unit of a (refined) sequence, with the external
/// predicates recomputed at its position.
#[derive(Debug, Clone)]
pub struct GroundingUnit {
    pub outer: usize,
    pub sub: usize,
    pub rules: Vec<usize>,
    pub stratified: bool,
    pub externals: BTreeSet<PredSig>,
}

/// Flattens a sequence into grounding units in evaluation order.
pub fn flatten_units(seq: &ComponentSequence, p: &Program) -> Vec<GroundingUnit> {
    let mut units = Vec::new();
    for (outer, c) in seq.components.iter().enumerate() {
        for (sub, rules) in c.subcomponents.iter().enumerate() {
            units.push(GroundingUnit {
                outer,
                sub,
                rules: rules.clone(),
                stratified: c.stratified,
                externals: BTreeSet::new(),
            });
        }
    }
    let unit_rules: Vec<Vec<usize>> = units.iter().map(|u| u.rules.clone()).collect();
    for (u, e) in units.iter_mut().zip(externals_for(&unit_rules, p)) {
        u.externals = e;
    }
    units
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;

    const COMPANY_RULE: &str = "controls(X,Y) :- #sum+ { S : owns(X,Y,S) ; S,Z : controls(X,Z), owns(Z,Y,S) } > 50, company(X), company(Y), X != Y.";

    #[test]
    fn occurrences_of_negative_literal() {
        let p = parse_program("p(X) :- not q(X), u(X).").unwrap();
        let (pos, neg) = body_occurrences(&p.rules[0].body[0]);
        assert!(pos.is_empty());
        assert_eq!(neg.len(), 1);
        assert_eq!(neg[0].predicate, "q");
    }

    #[test]
    fn occurrences_of_comparison() {
        let p = parse_program("p :- q, 1 != 2.").unwrap();
        let (pos, neg) = body_occurrences(&p.rules[0].body[1]);
        assert!(pos.is_empty() && neg.is_empty());
    }

    #[test]
    fn occurrences_of_monotone_aggregate() {
        let p = parse_program(COMPANY_RULE).unwrap();
        let (pos, neg) = body_occurrences(&p.rules[0].body[0]);
        assert_eq!(pos.len(), 3); // owns, controls, owns
        assert!(neg.is_empty());
    }

    #[test]
    fn occurrences_of_nonmonotone_aggregate() {
        let p = parse_program("h :- #sum { X : q(X) } = 0, p.").unwrap();
        let (pos, neg) = body_occurrences(&p.rules[0].body[0]);
        assert_eq!(pos.len(), 1);
        assert_eq!(neg.len(), 1);
    }

    #[test]
    fn safety_accepts_company_rule() {
        let p = parse_program(COMPANY_RULE).unwrap();
        assert!(check_safety(&p.rules[0], 0).is_ok());
    }

    #[test]
    fn safety_rejects_unbound_global() {
        let p = parse_program("p(X) :- not q(X).").unwrap();
        let err = check_safety(&p.rules[0], 0).unwrap_err();
        assert_eq!(err.variable, "X");
    }

    #[test]
    fn safety_rejects_comparison_only_variable() {
        let p = parse_program("h :- p(Y), Y < Z.").unwrap();
        let err = check_safety(&p.rules[0], 0).unwrap_err();
        assert_eq!(err.variable, "Z");
    }

    #[test]
    fn safety_rejects_unbound_element_local() {
        let p = parse_program("h :- #count { X,W : q(X) } > 0, p(X).").unwrap();
        let err = check_safety(&p.rules[0], 0).unwrap_err();
        assert_eq!(err.variable, "W");
    }

    #[test]
    fn dependencies_of_intro_rules() {
        let p = parse_program("u(1). p(X) :- not q(X), u(X). q(X) :- not p(X), v(X).").unwrap();
        let g = build_dependency_graph(&p);
        assert!(g.edges.contains(&(1, 0, Sign::Positive)));
        assert!(g.edges.contains(&(1, 2, Sign::Negative)));
        assert!(g.edges.contains(&(2, 1, Sign::Negative)));
        assert_eq!(g.edges.len(), 3);
    }

    #[test]
    fn single_fact_has_no_edges() {
        let g = build_dependency_graph(&parse_program("u(1).").unwrap());
        assert!(g.edges.is_empty());
    }

    #[test]
    fn company_rule_depends_on_itself_positively() {
        let p = parse_program(COMPANY_RULE).unwrap();
        let g = build_dependency_graph(&p);
        assert!(g.edges.contains(&(0, 0, Sign::Positive)));
        assert!(!g.edges.iter().any(|&(_, _, s)| s == Sign::Negative));
    }

    const INTRO: &str = "u(1). u(2). v(2). v(3). \
                         p(X) :- not q(X), u(X). q(X) :- not p(X), v(X). \
                         x :- not p(1). y :- not q(3).";

    #[test]
    fn intro_sequence_has_seven_components() {
        let p = parse_program(INTRO).unwrap();
        let seq = instantiation_sequence(&p);
        let rules: Vec<Vec<usize>> = seq.components.iter().map(|c| c.rules.clone()).collect();
        assert_eq!(
            rules,
            vec![vec![0], vec![1], vec![2], vec![3], vec![4, 5], vec![6], vec![7]]
        );
        let strat: Vec<bool> = seq.components.iter().map(|c| c.stratified).collect();
        assert_eq!(strat, vec![true, true, true, true, false, false, false]);
        // the mutual-negation component treats both predicates as external
        assert_eq!(
            seq.components[4].externals,
            [("p".to_string(), 1), ("q".to_string(), 1)].into()
        );
    }

    #[test]
    fn facts_only_components() {
        let p = parse_program("a. b. c.").unwrap();
        let seq = instantiation_sequence(&p);
        assert_eq!(seq.components.len(), 3);
        assert!(seq.components.iter().all(|c| c.stratified && c.externals.is_empty()));
    }

    #[test]
    fn ordered_sequence_keeps_externals_empty() {
        // d :- e.  b :- not d.  precede  c :- not b.  a :- not c.
        let p = parse_program("d :- e. b :- not d. c :- not b. a :- not c.").unwrap();
        let seq = instantiation_sequence(&p);
        // nothing is mutually recursive, so every negative dependency
        // points backwards and no head is pending when it is read
        assert!(seq.components.iter().all(|c| c.externals.is_empty()));
        let order: Vec<Vec<usize>> = seq.components.iter().map(|c| c.rules.clone()).collect();
        assert_eq!(order, vec![vec![0], vec![1], vec![2], vec![3]]);
    }

    #[test]
    fn refinement_splits_mutual_negation() {
        let p = parse_program(INTRO).unwrap();
        let refined = refine_sequence(&instantiation_sequence(&p), &p);
        let c = &refined.components[4];
        assert_eq!(c.subcomponents, vec![vec![4], vec![5]]);
        // refinement never merges rules across components and keeps order
        let flattened: Vec<usize> =
            refined.components.iter().flat_map(|c| c.subcomponents.concat()).collect();
        assert_eq!(flattened, vec![0, 1, 2, 3, 4, 5, 6, 7]);
        // per-unit externals: the p-rule still reads q/1 before it is done,
        // the q-rule no longer waits on p/1
        let units = flatten_units(&refined, &p);
        assert_eq!(units[4].rules, vec![4]);
        assert_eq!(units[4].externals, [("q".to_string(), 1)].into());
        assert_eq!(units[5].rules, vec![5]);
        assert!(units[5].externals.is_empty());
    }

    #[test]
    fn positively_recursive_component_is_not_split() {
        let text = format!(
            "company(c1). company(c2). owns(c1,c2,60). {COMPANY_RULE}"
        );
        let p = parse_program(&text).unwrap();
        let refined = refine_sequence(&instantiation_sequence(&p), &p);
        let last = refined.components.last().unwrap();
        assert_eq!(last.rules, vec![3]);
        assert_eq!(last.subcomponents, vec![vec![3]]);
        assert!(last.stratified);
    }

    #[test]
    fn single_rule_component_unchanged_by_refinement() {
        let p = parse_program("a. b :- a.").unwrap();
        let refined = refine_sequence(&instantiation_sequence(&p), &p);
        assert!(refined.components.iter().all(|c| c.subcomponents.len() == 1));
    }
}
