//! Abstract syntax for aggregate programs.
//!
//! A program is a finite list of rules `h :- b1, ..., bn.` where each body
//! literal is a (possibly negated) atom, a comparison between terms, or an
//! aggregate atom such as `#sum+ { S : owns(X,Y,S) } > 50`.

use std::cmp::Ordering;
use std::fmt;

/// Prefix reserved for internal predicates introduced during rewriting.
pub const RESERVED_PREFIX: &str = "__";

/// A term: variable, integer, function term (arity 0 is a constant), or one
/// of the two extremal constants `#sup` and `#inf`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    /// `#inf`, smaller than every other term.
    Inf,
    Integer(i64),
    Function(String, Vec<Term>),
    /// `#sup`, greater than every other term.
    Sup,
    Variable(String),
}

impl Term {
    pub fn constant(name: &str) -> Self {
        Term::Function(name.to_string(), Vec::new())
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Variable(_) => false,
            Term::Function(_, args) => args.iter().all(Term::is_ground),
            _ => true,
        }
    }

    /// Collects the variable names occurring in this term, in textual order.
    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Variable(v) => {
                if !out.iter().any(|x| x == v) {
                    out.push(v.clone());
                }
            }
            Term::Function(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
            _ => {}
        }
    }
}

/// Total order on ground terms: `#inf` is least, then integers by value,
/// then function terms by (arity, name, arguments), and `#sup` is greatest.
/// Variables sort after `#sup` so that the order is total on all terms, but
/// only the ground fragment carries meaning.
pub fn term_compare(a: &Term, b: &Term) -> Ordering {
    fn rank(t: &Term) -> u8 {
        match t {
            Term::Inf => 0,
            Term::Integer(_) => 1,
            Term::Function(..) => 2,
            Term::Sup => 3,
            Term::Variable(_) => 4,
        }
    }
    match (a, b) {
        (Term::Integer(x), Term::Integer(y)) => x.cmp(y),
        (Term::Function(f, xs), Term::Function(g, ys)) => xs
            .len()
            .cmp(&ys.len())
            .then_with(|| f.cmp(g))
            .then_with(|| {
                for (x, y) in xs.iter().zip(ys) {
                    let o = term_compare(x, y);
                    if o != Ordering::Equal {
                        return o;
                    }
                }
                Ordering::Equal
            }),
        (Term::Variable(x), Term::Variable(y)) => x.cmp(y),
        _ => rank(a).cmp(&rank(b)),
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(term_compare(self, other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        term_compare(self, other)
    }
}

/// Comparison relations between terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rel {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Rel {
    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            Rel::Lt => ord == Ordering::Less,
            Rel::Le => ord != Ordering::Greater,
            Rel::Gt => ord == Ordering::Greater,
            Rel::Ge => ord != Ordering::Less,
            Rel::Eq => ord == Ordering::Equal,
            Rel::Ne => ord != Ordering::Equal,
        }
    }

    /// The relation with `<` and `>` (resp. `<=` and `>=`) swapped.
    pub fn mirror(self) -> Rel {
        match self {
            Rel::Lt => Rel::Gt,
            Rel::Le => Rel::Ge,
            Rel::Gt => Rel::Lt,
            Rel::Ge => Rel::Le,
            r => r,
        }
    }
}

/// An atom `p(t1, ..., tn)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        Atom { predicate: predicate.to_string(), args }
    }

    /// Predicate identity is the pair (name, arity).
    pub fn sig(&self) -> (String, usize) {
        (self.predicate.clone(), self.args.len())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        for t in &self.args {
            t.collect_vars(out);
        }
    }
}

/// A literal: an atom or its negation.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub negated: bool,
}

/// A comparison `t1 rel t2`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Comparison {
    pub left: Term,
    pub rel: Rel,
    pub right: Term,
}

impl Comparison {
    pub fn is_ground(&self) -> bool {
        self.left.is_ground() && self.right.is_ground()
    }
}

/// Evaluates a ground comparison under the total term order.
pub fn eval_comparison(c: &Comparison) -> bool {
    debug_assert!(c.is_ground());
    c.rel.holds(term_compare(&c.left, &c.right))
}

/// An aggregate element `t1,...,tm : a1,...,ak`; the tuple may be empty and
/// so may the condition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AggregateElement {
    pub tuple: Vec<Term>,
    pub condition: Vec<Atom>,
}

impl AggregateElement {
    pub fn is_ground(&self) -> bool {
        self.tuple.iter().all(Term::is_ground) && self.condition.iter().all(Atom::is_ground)
    }
}

/// Aggregate functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggFunc {
    Count,
    Sum,
    SumPlus,
    SumMinus,
}

/// An aggregate atom `f { e1; ...; en } rel bound`. Aggregates occur only
/// positively in rule bodies.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Aggregate {
    pub func: AggFunc,
    pub elements: Vec<AggregateElement>,
    pub rel: Rel,
    pub bound: Term,
}

/// A body literal of an aggregate rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BodyLiteral {
    Literal(Literal),
    Comparison(Comparison),
    Aggregate(Aggregate),
}

/// A rule `head :- body`. A fact is a rule with an empty body.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub head: Atom,
    pub body: Vec<BodyLiteral>,
}

impl Rule {
    /// A rule is normal if its body contains no aggregates.
    pub fn is_normal(&self) -> bool {
        !self.body.iter().any(|b| matches!(b, BodyLiteral::Aggregate(_)))
    }

    /// The global variables of the rule in textual order: variables in the
    /// head, in literals and comparisons, and in aggregate bounds.
    pub fn global_vars(&self) -> Vec<String> {
        let mut vars = Vec::new();
        self.head.collect_vars(&mut vars);
        for b in &self.body {
            match b {
                BodyLiteral::Literal(l) => l.atom.collect_vars(&mut vars),
                BodyLiteral::Comparison(c) => {
                    c.left.collect_vars(&mut vars);
                    c.right.collect_vars(&mut vars);
                }
                BodyLiteral::Aggregate(a) => a.bound.collect_vars(&mut vars),
            }
        }
        vars
    }
}

/// A finite aggregate program; input rule order is preserved.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Program {
    pub rules: Vec<Rule>,
}

// Rendering. The output of `Display` re-parses to a structurally equal AST.

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Inf => write!(f, "#inf"),
            Term::Sup => write!(f, "#sup"),
            Term::Integer(n) => write!(f, "{n}"),
            Term::Variable(v) => write!(f, "{v}"),
            Term::Function(name, args) => {
                write!(f, "{name}")?;
                if !args.is_empty() {
                    write!(f, "(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, ",")?;
                        }
                        write!(f, "{a}")?;
                    }
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Rel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Gt => ">",
            Rel::Ge => ">=",
            Rel::Eq => "=",
            Rel::Ne => "!=",
        };
        write!(f, "{s}")
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.args.is_empty() {
            write!(f, "(")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{a}")?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "not ")?;
        }
        write!(f, "{}", self.atom)
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.left, self.rel, self.right)
    }
}

impl fmt::Display for AggFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AggFunc::Count => "#count",
            AggFunc::Sum => "#sum",
            AggFunc::SumPlus => "#sum+",
            AggFunc::SumMinus => "#sum-",
        };
        write!(f, "{s}")
    }
}

impl fmt::Display for AggregateElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tuple.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        if !self.condition.is_empty() || self.tuple.is_empty() {
            if !self.tuple.is_empty() {
                write!(f, " ")?;
            }
            write!(f, ":")?;
            for (i, a) in self.condition.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, " {a}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Aggregate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {{ ", self.func)?;
        for (i, e) in self.elements.iter().enumerate() {
            if i > 0 {
                write!(f, " ; ")?;
            }
            write!(f, "{e}")?;
        }
        if self.elements.is_empty() {
            write!(f, "}} {} {}", self.rel, self.bound)
        } else {
            write!(f, " }} {} {}", self.rel, self.bound)
        }
    }
}

impl fmt::Display for BodyLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyLiteral::Literal(l) => write!(f, "{l}"),
            BodyLiteral::Comparison(c) => write!(f, "{c}"),
            BodyLiteral::Aggregate(a) => write!(f, "{a}"),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            write!(f, " :- ")?;
            for (i, b) in self.body.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{b}")?;
            }
        }
        write!(f, ".")
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
