//! Ground representations: interned atoms, ground rules whose bodies are
//! conjunctions of ground formulas, and four-valued interpretations.

use crate::syntax::{AggFunc, Atom, Comparison, Rel, Term};
use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// A dense identifier for an interned ground atom. Ids are assigned in
/// first-seen order and are stable for the lifetime of the [`AtomTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub u32);

/// Interning table mapping ground atoms to dense ids. Append-only.
#[derive(Debug, Default, Clone)]
pub struct AtomTable {
    map: HashMap<Atom, AtomId>,
    atoms: Vec<Atom>,
}

impl AtomTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, atom: &Atom) -> AtomId {
        debug_assert!(atom.is_ground(), "interned atoms must be ground: {atom}");
        if let Some(&id) = self.map.get(atom) {
            return id;
        }
        let id = AtomId(self.atoms.len() as u32);
        self.atoms.push(atom.clone());
        self.map.insert(atom.clone(), id);
        id
    }

    pub fn lookup(&self, atom: &Atom) -> Option<AtomId> {
        self.map.get(atom).copied()
    }

    pub fn resolve(&self, id: AtomId) -> &Atom {
        &self.atoms[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// All currently interned ids in id order.
    pub fn ids(&self) -> impl Iterator<Item = AtomId> + '_ {
        (0..self.atoms.len() as u32).map(AtomId)
    }
}

/// A set of ground atoms; iterates in id order, i.e. first-interned first.
pub type AtomSet = BTreeSet<AtomId>;

/// A ground aggregate value as it appears in grounder output: the function,
/// relation, ground bound, and the restricted set of ground element
/// instances gathered while grounding. Duplicate instances collapse.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAggregate {
    pub func: AggFunc,
    pub elements: BTreeSet<GroundElement>,
    pub rel: Rel,
    pub bound: Term,
}

/// A ground aggregate element instance: a tuple of ground terms plus the
/// interned condition atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundElement {
    pub tuple: Vec<Term>,
    pub condition: Vec<AtomId>,
}

/// Ground formulas. Rule bodies produced by the grounder only contain
/// literals, evaluated comparisons, and aggregate values; the richer
/// connectives arise from aggregate translations inside tests and the
/// oracle. Implications never nest into antecedents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GroundFormula {
    Atom(AtomId),
    True,
    False,
    Not(Box<GroundFormula>),
    And(Vec<GroundFormula>),
    Or(Vec<GroundFormula>),
    Implies(Box<GroundFormula>, Box<GroundFormula>),
    /// A ground comparison; a truth constant that remembers its source text.
    Cmp(Comparison),
    Agg(GroundAggregate),
}

impl GroundFormula {
    pub fn not(f: GroundFormula) -> Self {
        GroundFormula::Not(Box::new(f))
    }

    pub fn implies(a: GroundFormula, b: GroundFormula) -> Self {
        GroundFormula::Implies(Box::new(a), Box::new(b))
    }

    /// Atoms occurring anywhere in the formula.
    pub fn collect_atoms(&self, out: &mut AtomSet) {
        match self {
            GroundFormula::Atom(id) => {
                out.insert(*id);
            }
            GroundFormula::Not(f) => f.collect_atoms(out),
            GroundFormula::And(fs) | GroundFormula::Or(fs) => {
                for f in fs {
                    f.collect_atoms(out);
                }
            }
            GroundFormula::Implies(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            GroundFormula::Agg(agg) => {
                for e in &agg.elements {
                    out.extend(e.condition.iter().copied());
                }
            }
            _ => {}
        }
    }
}

/// A ground rule `head :- f1, ..., fn` with the body read conjunctively.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroundRule {
    pub head: AtomId,
    pub body: Vec<GroundFormula>,
}

impl GroundRule {
    pub fn fact(head: AtomId) -> Self {
        GroundRule { head, body: Vec::new() }
    }

    pub fn atoms(&self) -> AtomSet {
        let mut set = AtomSet::new();
        set.insert(self.head);
        for f in &self.body {
            f.collect_atoms(&mut set);
        }
        set
    }
}

/// All atoms occurring in a set of ground rules.
pub fn rule_atoms(rules: &[GroundRule]) -> AtomSet {
    let mut set = AtomSet::new();
    for r in rules {
        set.append(&mut r.atoms());
    }
    set
}

/// Head atoms of a set of ground rules.
pub fn head_atoms(rules: &[GroundRule]) -> AtomSet {
    rules.iter().map(|r| r.head).collect()
}

/// A four-valued interpretation: a pair of certain and possible atom sets.
/// Atoms in both are true, in neither false, in `possible` only unknown.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Interp4 {
    pub certain: AtomSet,
    pub possible: AtomSet,
}

impl Interp4 {
    pub fn new(certain: AtomSet, possible: AtomSet) -> Self {
        Interp4 { certain, possible }
    }

    pub fn is_consistent(&self) -> bool {
        self.certain.is_subset(&self.possible)
    }

    /// True if every atom of `universe` is either true or false here.
    pub fn is_total(&self, universe: &AtomSet) -> bool {
        universe.iter().all(|a| self.certain.contains(a) || !self.possible.contains(a))
    }

    /// Pointwise union of both components.
    pub fn join(&self, other: &Interp4) -> Interp4 {
        Interp4 {
            certain: self.certain.union(&other.certain).copied().collect(),
            possible: self.possible.union(&other.possible).copied().collect(),
        }
    }

    /// The precision order: more certain atoms and fewer possible ones.
    pub fn leq_p(&self, other: &Interp4) -> bool {
        self.certain.is_subset(&other.certain) && other.possible.is_subset(&self.possible)
    }
}

// Display helpers; ground structures need the table to print atom names.

pub struct DisplayAtomSet<'a> {
    pub set: &'a AtomSet,
    pub table: &'a AtomTable,
}

impl fmt::Display for DisplayAtomSet<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, id) in self.set.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", self.table.resolve(*id))?;
        }
        write!(f, "}}")
    }
}

pub struct DisplayFormula<'a> {
    pub formula: &'a GroundFormula,
    pub table: &'a AtomTable,
}

impl fmt::Display for DisplayFormula<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.table;
        match self.formula {
            GroundFormula::Atom(id) => write!(f, "{}", t.resolve(*id)),
            GroundFormula::True => write!(f, "#true"),
            GroundFormula::False => write!(f, "#false"),
            GroundFormula::Not(g) => match g.as_ref() {
                GroundFormula::Atom(id) => write!(f, "not {}", t.resolve(*id)),
                other => write!(f, "not ({})", DisplayFormula { formula: other, table: t }),
            },
            GroundFormula::And(fs) => {
                write!(f, "(")?;
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    write!(f, "{}", DisplayFormula { formula: g, table: t })?;
                }
                write!(f, ")")
            }
            GroundFormula::Or(fs) => {
                write!(f, "(")?;
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    write!(f, "{}", DisplayFormula { formula: g, table: t })?;
                }
                write!(f, ")")
            }
            GroundFormula::Implies(a, b) => write!(
                f,
                "({} -> {})",
                DisplayFormula { formula: a, table: t },
                DisplayFormula { formula: b, table: t }
            ),
            GroundFormula::Cmp(c) => write!(f, "{c}"),
            GroundFormula::Agg(agg) => {
                write!(f, "{} {{ ", agg.func)?;
                for (i, e) in agg.elements.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ; ")?;
                    }
                    for (j, term) in e.tuple.iter().enumerate() {
                        if j > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{term}")?;
                    }
                    if !e.condition.is_empty() || e.tuple.is_empty() {
                        if !e.tuple.is_empty() {
                            write!(f, " ")?;
                        }
                        write!(f, ":")?;
                        for (j, id) in e.condition.iter().enumerate() {
                            if j > 0 {
                                write!(f, ",")?;
                            }
                            write!(f, " {}", t.resolve(*id))?;
                        }
                    }
                }
                if agg.elements.is_empty() {
                    write!(f, "}} {} {}", agg.rel, agg.bound)
                } else {
                    write!(f, " }} {} {}", agg.rel, agg.bound)
                }
            }
        }
    }
}

pub struct DisplayRule<'a> {
    pub rule: &'a GroundRule,
    pub table: &'a AtomTable,
}

impl fmt::Display for DisplayRule<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.table.resolve(self.rule.head))?;
        if !self.rule.body.is_empty() {
            write!(f, " :- ")?;
            for (i, g) in self.rule.body.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", DisplayFormula { formula: g, table: self.table })?;
            }
        }
        write!(f, ".")
    }
}

/// Renders a ground program, one rule per line.
pub fn render_rules(rules: &[GroundRule], table: &AtomTable) -> String {
    let mut out = String::new();
    for r in rules {
        out.push_str(&DisplayRule { rule: r, table }.to_string());
        out.push('\n');
    }
    out
}
