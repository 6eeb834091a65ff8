//! Timed automata, timed games and their exact concrete semantics.
//!
//! Clock values and delays are exact rationals. The global-time accumulator
//! is kept next to the user clocks inside [`ClockValuation`]; models can
//! neither constrain nor reset it.

use std::collections::HashSet;
use std::fmt;

use num::rational::Ratio;
use num::Zero;

use crate::error::{ModelError, SpecError};

/// Exact rational used for clock values and delays.
pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClockId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Lt,
    Le,
    Ge,
    Gt,
}

impl Relation {
    pub fn holds<T: PartialOrd>(self, lhs: &T, rhs: &T) -> bool {
        match self {
            Relation::Lt => lhs < rhs,
            Relation::Le => lhs <= rhs,
            Relation::Ge => lhs >= rhs,
            Relation::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

/// A single comparison `clock ~ bound`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Atom {
    pub clock: ClockId,
    pub rel: Relation,
    pub bound: u32,
}

impl Atom {
    pub fn new(clock: ClockId, rel: Relation, bound: u32) -> Self {
        Atom { clock, rel, bound }
    }
}

/// Conjunction of atoms; the empty conjunction is `true`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct ClockConstraint {
    pub atoms: Vec<Atom>,
}

impl ClockConstraint {
    pub fn tt() -> Self {
        ClockConstraint { atoms: Vec::new() }
    }

    pub fn from_atoms(atoms: Vec<Atom>) -> Self {
        ClockConstraint { atoms }
    }

    /// `x == c`, stored as `x >= c && x <= c`.
    pub fn equals(clock: ClockId, bound: u32) -> Self {
        ClockConstraint {
            atoms: vec![
                Atom::new(clock, Relation::Ge, bound),
                Atom::new(clock, Relation::Le, bound),
            ],
        }
    }

    pub fn is_true(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn and(mut self, other: &ClockConstraint) -> Self {
        self.atoms.extend_from_slice(&other.atoms);
        self
    }

    pub fn push(&mut self, atom: Atom) {
        self.atoms.push(atom);
    }

    pub fn clocks(&self) -> impl Iterator<Item = ClockId> + '_ {
        self.atoms.iter().map(|a| a.clock)
    }

    /// Satisfiability of a conjunction, decided per clock on its interval.
    pub fn satisfiable(&self) -> bool {
        let mut clocks: Vec<ClockId> = self.clocks().collect();
        clocks.sort();
        clocks.dedup();
        clocks.into_iter().all(|c| {
            // lower bound (value, strict), upper bound (value, strict)
            let mut lo: (i64, bool) = (0, false);
            let mut hi: Option<(i64, bool)> = None;
            for a in self.atoms.iter().filter(|a| a.clock == c) {
                let b = a.bound as i64;
                match a.rel {
                    Relation::Gt => {
                        if b > lo.0 || (b == lo.0 && !lo.1) {
                            lo = (b, true);
                        }
                    }
                    Relation::Ge => {
                        if b > lo.0 {
                            lo = (b, false);
                        }
                    }
                    Relation::Lt => {
                        if hi.map_or(true, |(h, s)| b < h || (b == h && !s)) {
                            hi = Some((b, true));
                        }
                    }
                    Relation::Le => {
                        if hi.map_or(true, |(h, _)| b < h) {
                            hi = Some((b, false));
                        }
                    }
                }
            }
            match hi {
                None => true,
                Some((h, hs)) => lo.0 < h || (lo.0 == h && !lo.1 && !hs),
            }
        })
    }
}

/// Valuation of the user clocks plus the global-time accumulator.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ClockValuation {
    pub values: Vec<Rational>,
    pub global: Rational,
}

impl ClockValuation {
    pub fn zero(clocks: usize) -> Self {
        ClockValuation {
            values: vec![Rational::zero(); clocks],
            global: Rational::zero(),
        }
    }

    pub fn get(&self, c: ClockId) -> Rational {
        self.values[c.0]
    }

    pub fn delayed(&self, d: Rational) -> Self {
        ClockValuation {
            values: self.values.iter().map(|v| v + d).collect(),
            global: self.global + d,
        }
    }

    pub fn reset(&self, clocks: &[ClockId]) -> Self {
        let mut out = self.clone();
        for c in clocks {
            out.values[c.0] = Rational::zero();
        }
        out
    }

    pub fn satisfies(&self, g: &ClockConstraint) -> bool {
        g.atoms.iter().all(|a| {
            let bound = Rational::from_integer(a.bound as i64);
            a.rel.holds(&self.values[a.clock.0], &bound)
        })
    }
}

impl fmt::Display for ClockValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "; t={}}}", self.global)
    }
}

/// Evaluates `v ⊨ g`, failing if `g` mentions a clock `v` does not have.
pub fn eval_constraint(v: &ClockValuation, g: &ClockConstraint) -> Result<bool, ModelError> {
    if let Some(a) = g.atoms.iter().find(|a| a.clock.0 >= v.values.len()) {
        return Err(ModelError::UnknownClockIndex(a.clock.0));
    }
    Ok(v.satisfies(g))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    pub invariant: ClockConstraint,
    pub priority: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub source: LocId,
    pub guard: ClockConstraint,
    pub action: ActionId,
    pub resets: Vec<ClockId>,
    pub target: LocId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedAutomaton {
    pub name: String,
    pub clocks: Vec<String>,
    pub actions: Vec<String>,
    pub locations: Vec<Location>,
    pub initial: LocId,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    One,
    Two,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }
}

/// A timed automaton whose actions are partitioned between two players.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimedGame {
    pub automaton: TimedAutomaton,
    /// Owner of each action, indexed by [`ActionId`].
    pub owners: Vec<Player>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Model {
    Automaton(TimedAutomaton),
    Game(TimedGame),
}

impl Model {
    pub fn automaton(&self) -> &TimedAutomaton {
        match self {
            Model::Automaton(ta) => ta,
            Model::Game(g) => &g.automaton,
        }
    }
}

/// Priority vectors of every location plus the window bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrioritySpec {
    pub priorities: Vec<Vec<u32>>,
    pub lambda: Vec<u32>,
}

impl PrioritySpec {
    /// Takes the priorities stored on the locations of `ta`.
    pub fn new(ta: &TimedAutomaton, lambda: Vec<u32>) -> Result<Self, SpecError> {
        let k = ta.dimension();
        if lambda.len() != k {
            return Err(SpecError::DimensionMismatch {
                expected: k,
                found: lambda.len(),
            });
        }
        if let Some(i) = lambda.iter().position(|&l| l == 0) {
            return Err(SpecError::ZeroLambda(i));
        }
        if let Some(l) = ta.locations.iter().find(|l| l.priority.len() != k) {
            return Err(SpecError::PriorityLength(l.name.clone()));
        }
        Ok(PrioritySpec {
            priorities: ta.locations.iter().map(|l| l.priority.clone()).collect(),
            lambda,
        })
    }

    pub fn dimension(&self) -> usize {
        self.lambda.len()
    }

    pub fn of(&self, l: LocId) -> &[u32] {
        &self.priorities[l.0]
    }

    /// Number of priority values, `max + 1`.
    pub fn d(&self) -> u32 {
        self.priorities
            .iter()
            .flat_map(|p| p.iter().copied())
            .max()
            .map_or(1, |m| m + 1)
    }

    pub fn lambda_max(&self) -> u32 {
        self.lambda.iter().copied().max().unwrap_or(1)
    }

    /// The single-dimension spec for component `i`.
    pub fn component(&self, i: usize) -> PrioritySpec {
        PrioritySpec {
            priorities: self.priorities.iter().map(|p| vec![p[i]]).collect(),
            lambda: vec![self.lambda[i]],
        }
    }

    pub fn with_lambda(&self, lambda: Vec<u32>) -> PrioritySpec {
        PrioritySpec {
            priorities: self.priorities.clone(),
            lambda,
        }
    }
}

/// Copy of `ta` whose location priorities are replaced by `spec`.
pub fn with_priorities(ta: &TimedAutomaton, spec: &PrioritySpec) -> TimedAutomaton {
    let mut out = ta.clone();
    for (l, p) in out.locations.iter_mut().zip(&spec.priorities) {
        l.priority = p.clone();
    }
    out
}

/// A move `(delay, action)`; `action == None` is the delay move `⊥`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    pub delay: Rational,
    pub action: Option<ActionId>,
}

impl Move {
    pub fn delay(d: Rational) -> Self {
        Move {
            delay: d,
            action: None,
        }
    }

    pub fn act(d: Rational, a: ActionId) -> Self {
        Move {
            delay: d,
            action: Some(a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    pub location: LocId,
    pub valuation: ClockValuation,
}

impl State {
    /// Equality up to the global-time accumulator and up to clocks that lie
    /// strictly above their maximal constant in both states.
    pub fn equivalent(&self, other: &State, maxc: &[u32]) -> bool {
        self.location == other.location
            && self
                .valuation
                .values
                .iter()
                .zip(&other.valuation.values)
                .zip(maxc)
                .all(|((a, b), c)| {
                    let c = Rational::from_integer(*c as i64);
                    a == b || (*a > c && *b > c)
                })
    }
}

impl TimedAutomaton {
    pub fn clock_count(&self) -> usize {
        self.clocks.len()
    }

    pub fn dimension(&self) -> usize {
        self.locations.first().map_or(0, |l| l.priority.len())
    }

    pub fn loc(&self, l: LocId) -> &Location {
        &self.locations[l.0]
    }

    pub fn loc_by_name(&self, name: &str) -> Option<LocId> {
        self.locations.iter().position(|l| l.name == name).map(LocId)
    }

    pub fn action_by_name(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a == name).map(ActionId)
    }

    pub fn clock_by_name(&self, name: &str) -> Option<ClockId> {
        self.clocks.iter().position(|c| c == name).map(ClockId)
    }

    pub fn initial_state(&self) -> State {
        State {
            location: self.initial,
            valuation: ClockValuation::zero(self.clocks.len()),
        }
    }

    pub fn outgoing(&self, l: LocId) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.source == l)
    }

    /// Unique edge for `a` from `l` enabled under `v`.
    pub fn enabled_edge(&self, l: LocId, a: ActionId, v: &ClockValuation) -> Option<&Edge> {
        self.outgoing(l)
            .find(|e| e.action == a && v.satisfies(&e.guard))
    }

    /// Largest priority plus one, over all dimensions.
    pub fn priority_range(&self) -> u32 {
        self.locations
            .iter()
            .flat_map(|l| l.priority.iter().copied())
            .max()
            .map_or(1, |m| m + 1)
    }

    /// Maximal constant each clock is compared to (0 if never mentioned).
    pub fn max_constants(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.clocks.len()];
        let constraints = self
            .locations
            .iter()
            .map(|l| &l.invariant)
            .chain(self.edges.iter().map(|e| &e.guard));
        for g in constraints {
            for a in &g.atoms {
                out[a.clock.0] = out[a.clock.0].max(a.bound);
            }
        }
        out
    }
}

/// Why a move is not enabled in a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Disabled {
    InvariantViolated,
    NoMatchingEdge,
    TargetInvariantViolated,
}

impl fmt::Display for Disabled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Disabled::InvariantViolated => write!(f, "source invariant violated after the delay"),
            Disabled::NoMatchingEdge => write!(f, "no edge with this action is enabled"),
            Disabled::TargetInvariantViolated => write!(f, "target invariant violated"),
        }
    }
}

/// Successor of `s` under move `m`.
pub fn step(ta: &TimedAutomaton, s: &State, m: &Move) -> Result<State, ModelError> {
    if m.delay < Rational::zero() {
        return Err(ModelError::NegativeDelay);
    }
    let delayed = s.valuation.delayed(m.delay);
    if !delayed.satisfies(&ta.loc(s.location).invariant) {
        return Err(ModelError::NotEnabled(Disabled::InvariantViolated));
    }
    match m.action {
        None => Ok(State {
            location: s.location,
            valuation: delayed,
        }),
        Some(a) => {
            if a.0 >= ta.actions.len() {
                return Err(ModelError::UnknownActionIndex(a.0));
            }
            let edge = ta
                .enabled_edge(s.location, a, &delayed)
                .ok_or(ModelError::NotEnabled(Disabled::NoMatchingEdge))?;
            let next = delayed.reset(&edge.resets);
            if !next.satisfies(&ta.loc(edge.target).invariant) {
                return Err(ModelError::NotEnabled(Disabled::TargetInvariantViolated));
            }
            Ok(State {
                location: edge.target,
                valuation: next,
            })
        }
    }
}

pub fn enabled(ta: &TimedAutomaton, s: &State, m: &Move) -> bool {
    step(ta, s, m).is_ok()
}

/// Joint destination function of a timed game: the faster move wins, ties
/// yield both successors.
pub fn joint_step(
    g: &TimedGame,
    s: &State,
    m1: &Move,
    m2: &Move,
) -> Result<Vec<State>, ModelError> {
    for (m, p) in [(m1, Player::One), (m2, Player::Two)] {
        if let Some(a) = m.action {
            if g.owners.get(a.0) != Some(&p) {
                return Err(ModelError::WrongOwner {
                    action: g.automaton.actions.get(a.0).cloned().unwrap_or_default(),
                    player: p,
                });
            }
        }
    }
    let s1 = step(&g.automaton, s, m1)?;
    let s2 = step(&g.automaton, s, m2)?;
    Ok(if m1.delay < m2.delay {
        vec![s1]
    } else if m1.delay > m2.delay {
        vec![s2]
    } else if s1 == s2 {
        vec![s1]
    } else {
        vec![s1, s2]
    })
}

/// `min(d1, d2)`.
pub fn joint_delay(m1: &Move, m2: &Move) -> Rational {
    m1.delay.min(m2.delay)
}

/// Whether player 1 is responsible for the transition `s -(m1,m2)-> next`.
pub fn p1_responsible(ta: &TimedAutomaton, s: &State, m1: &Move, m2: &Move, next: &State) -> bool {
    if m2.delay < m1.delay {
        return false;
    }
    if m1.delay == m2.delay {
        return matches!(step(ta, s, m1), Ok(ref t) if t == next);
    }
    true
}

/// Structural diagnostics; empty iff the model is well formed.
pub fn validate_model(m: &Model) -> Vec<String> {
    let ta = m.automaton();
    let mut diags = validate_automaton(ta);
    if let Model::Game(g) = m {
        if g.owners.len() != ta.actions.len() {
            for a in ta.actions.iter().skip(g.owners.len()) {
                diags.push(format!("action `{a}` has no owner"));
            }
        }
    }
    diags
}

pub fn validate_automaton(ta: &TimedAutomaton) -> Vec<String> {
    let mut diags = Vec::new();
    let nclocks = ta.clocks.len();
    let mut seen = HashSet::new();
    for c in &ta.clocks {
        if !seen.insert(c) {
            diags.push(format!("clock `{c}` declared twice"));
        }
        if is_global_time_name(c) {
            diags.push(format!("clock `{c}` names the global-time accumulator"));
        }
    }
    if ta.locations.is_empty() {
        diags.push("automaton has no locations".to_string());
        return diags;
    }
    if ta.initial.0 >= ta.locations.len() {
        diags.push("initial location out of range".to_string());
    }
    let k = ta.locations[0].priority.len();
    if k == 0 {
        diags.push("priority vectors must have at least one component".to_string());
    }
    let mut names = HashSet::new();
    for l in &ta.locations {
        if !names.insert(&l.name) {
            diags.push(format!("location `{}` declared twice", l.name));
        }
        if l.priority.len() != k {
            diags.push(format!(
                "location `{}` has a priority vector of length {} (expected {k})",
                l.name,
                l.priority.len()
            ));
        }
        check_clocks(&l.invariant, nclocks, &format!("invariant of `{}`", l.name), &mut diags);
    }
    if ta.initial.0 < ta.locations.len() {
        let init = ta.initial_state();
        if !init.valuation.satisfies(&ta.loc(ta.initial).invariant) {
            diags.push("zero valuation violates the initial invariant".to_string());
        }
    }
    for (i, e) in ta.edges.iter().enumerate() {
        if e.source.0 >= ta.locations.len() || e.target.0 >= ta.locations.len() {
            diags.push(format!("edge {i} references an unknown location"));
            continue;
        }
        if e.action.0 >= ta.actions.len() {
            diags.push(format!("edge {i} references an unknown action"));
            continue;
        }
        check_clocks(&e.guard, nclocks, &format!("guard of edge {i}"), &mut diags);
        for r in &e.resets {
            if r.0 >= nclocks {
                diags.push(format!(
                    "edge {i} resets the global-time accumulator or an unknown clock"
                ));
            }
        }
    }
    for (i, e1) in ta.edges.iter().enumerate() {
        for e2 in ta.edges.iter().skip(i + 1) {
            if e1.source == e2.source
                && e1.action == e2.action
                && e1.guard.clone().and(&e2.guard).satisfiable()
            {
                diags.push(format!(
                    "nondeterminism: two `{}` edges leave `{}` with overlapping guards",
                    ta.actions.get(e1.action.0).map_or("?", |s| s.as_str()),
                    ta.locations.get(e1.source.0).map_or("?", |l| l.name.as_str())
                ));
            }
        }
    }
    diags
}

fn check_clocks(g: &ClockConstraint, nclocks: usize, what: &str, diags: &mut Vec<String>) {
    if g.atoms.iter().any(|a| a.clock.0 >= nclocks) {
        diags.push(format!("{what} mentions the global-time accumulator or an unknown clock"));
    }
}

/// Reserved spelling of the global-time accumulator.
pub fn is_global_time_name(name: &str) -> bool {
    name == "gamma" || name == "__gamma"
}

/// Sum of the delays of a sequence of moves.
pub fn total_delay<'a>(moves: impl IntoIterator<Item = &'a Move>) -> Rational {
    moves.into_iter().fold(Rational::zero(), |acc, m| acc + m.delay)
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_model;

    pub(crate) const RING: &str = "\
automaton A
clock x
action a
loc l0 init prio [1] inv x <= 2
loc l1 prio [2]
loc l2 prio [0] inv x <= 2
edge l0 -> l1 on a when true reset {}
edge l1 -> l2 on a when true reset {x}
edge l2 -> l0 on a when true reset {x}
";

    fn ring() -> TimedAutomaton {
        match parse_model(RING).unwrap() {
            Model::Automaton(ta) => ta,
            _ => unreachable!(),
        }
    }

    fn val(x: Rational) -> ClockValuation {
        ClockValuation {
            values: vec![x],
            global: Rational::zero(),
        }
    }

    #[test]
    fn constraint_examples() {
        let x = ClockId(0);
        let le2 = ClockConstraint::from_atoms(vec![Atom::new(x, Relation::Le, 2)]);
        let lt2 = ClockConstraint::from_atoms(vec![Atom::new(x, Relation::Lt, 2)]);
        let band = ClockConstraint::from_atoms(vec![
            Atom::new(x, Relation::Le, 2),
            Atom::new(x, Relation::Ge, 1),
        ]);
        assert!(eval_constraint(&val(rat(3, 2)), &le2).unwrap());
        assert!(!eval_constraint(&val(int(2)), &lt2).unwrap());
        assert!(!eval_constraint(&val(rat(5, 2)), &band).unwrap());
        let y = ClockConstraint::from_atoms(vec![Atom::new(ClockId(3), Relation::Le, 1)]);
        assert!(eval_constraint(&val(int(0)), &y).is_err());
    }

    #[test]
    fn satisfiability() {
        let x = ClockId(0);
        let g = |atoms: Vec<Atom>| ClockConstraint::from_atoms(atoms).satisfiable();
        assert!(g(vec![Atom::new(x, Relation::Le, 1), Atom::new(x, Relation::Ge, 1)]));
        assert!(!g(vec![Atom::new(x, Relation::Lt, 1), Atom::new(x, Relation::Ge, 1)]));
        assert!(!g(vec![Atom::new(x, Relation::Le, 1), Atom::new(x, Relation::Gt, 1)]));
        assert!(g(vec![Atom::new(x, Relation::Lt, 2), Atom::new(x, Relation::Gt, 1)]));
        assert!(!g(vec![Atom::new(x, Relation::Lt, 0)]));
        assert!(g(vec![]));
    }

    #[test]
    fn step_examples() {
        let ta = ring();
        let a = ta.action_by_name("a").unwrap();
        let s0 = ta.initial_state();
        let s1 = step(&ta, &s0, &Move::act(int(0), a)).unwrap();
        assert_eq!(s1.location, LocId(1));
        assert_eq!(s1.valuation.values, vec![int(0)]);

        let s = State {
            location: LocId(1),
            valuation: val(int(7)),
        };
        let t = step(&ta, &s, &Move::delay(int(5))).unwrap();
        assert_eq!(t.valuation.values, vec![int(12)]);
        assert_eq!(t.valuation.global, int(5));

        let err = step(&ta, &s0, &Move::delay(int(3))).unwrap_err();
        assert_eq!(err, ModelError::NotEnabled(Disabled::InvariantViolated));
    }

    #[test]
    fn step_distinguishes_failures() {
        let src = "\
automaton M
clock x
action a
action b
loc l0 init prio [0]
loc l1 prio [0] inv x <= 1
edge l0 -> l1 on a when x >= 1 reset {}
";
        let ta = match parse_model(src).unwrap() {
            Model::Automaton(ta) => ta,
            _ => unreachable!(),
        };
        let a = ta.action_by_name("a").unwrap();
        let b = ta.action_by_name("b").unwrap();
        let s0 = ta.initial_state();
        assert_eq!(
            step(&ta, &s0, &Move::act(int(0), a)).unwrap_err(),
            ModelError::NotEnabled(Disabled::NoMatchingEdge)
        );
        assert_eq!(
            step(&ta, &s0, &Move::act(int(2), a)).unwrap_err(),
            ModelError::NotEnabled(Disabled::TargetInvariantViolated)
        );
        assert_eq!(
            step(&ta, &s0, &Move::act(int(1), b)).unwrap_err(),
            ModelError::NotEnabled(Disabled::NoMatchingEdge)
        );
        assert!(step(&ta, &s0, &Move::act(int(1), a)).is_ok());
    }

    fn two_edge_game() -> TimedGame {
        let src = "\
automaton G
clock x
action a owner 1
action b owner 2
loc l0 init prio [0]
loc l1 prio [1]
loc l2 prio [0]
edge l0 -> l1 on a when true reset {}
edge l0 -> l2 on b when true reset {x}
";
        match parse_model(src).unwrap() {
            Model::Game(g) => g,
            _ => unreachable!(),
        }
    }

    #[test]
    fn joint_step_cases() {
        let g = two_edge_game();
        let a = g.automaton.action_by_name("a").unwrap();
        let b = g.automaton.action_by_name("b").unwrap();
        let s = g.automaton.initial_state();
        let fast = joint_step(&g, &s, &Move::act(int(1), a), &Move::act(int(2), b)).unwrap();
        assert_eq!(fast.len(), 1);
        assert_eq!(fast[0].location, LocId(1));
        let idle = joint_step(&g, &s, &Move::delay(int(0)), &Move::delay(int(0))).unwrap();
        assert_eq!(idle, vec![s.clone()]);
        // Branches enumerated by hand: a leads to l1 keeping x=1, b to l2 with x reset.
        let tie = joint_step(&g, &s, &Move::act(int(1), a), &Move::act(int(1), b)).unwrap();
        assert_eq!(tie.len(), 2);
        assert_eq!(tie[0].location, LocId(1));
        assert_eq!(tie[0].valuation.values, vec![int(1)]);
        assert_eq!(tie[1].location, LocId(2));
        assert_eq!(tie[1].valuation.values, vec![int(0)]);
        assert!(joint_step(&g, &s, &Move::act(int(1), b), &Move::delay(int(1))).is_err());
    }

    #[test]
    fn blame_rule() {
        let g = two_edge_game();
        let ta = &g.automaton;
        let a = ta.action_by_name("a").unwrap();
        let b = ta.action_by_name("b").unwrap();
        let s = ta.initial_state();
        let m1 = Move::act(int(1), a);
        let m2 = Move::act(int(1), b);
        let via_a = step(ta, &s, &m1).unwrap();
        let via_b = step(ta, &s, &m2).unwrap();
        assert!(p1_responsible(ta, &s, &m1, &m2, &via_a));
        assert!(!p1_responsible(ta, &s, &m1, &m2, &via_b));
        let slow = Move::act(int(3), a);
        assert!(!p1_responsible(ta, &s, &slow, &m2, &via_b));
    }

    #[test]
    fn validation_diagnostics() {
        let ta = ring();
        assert!(validate_model(&Model::Automaton(ta.clone())).is_empty());
        let mut bad = ta.clone();
        bad.edges[0].resets.push(ClockId(1));
        assert_eq!(validate_model(&Model::Automaton(bad)).len(), 1);
        let game = TimedGame {
            automaton: ta,
            owners: vec![],
        };
        assert_eq!(validate_model(&Model::Game(game)).len(), 1);
    }

    #[test]
    fn equivalence_ignores_clocks_above_max() {
        let s = State {
            location: LocId(0),
            valuation: val(int(5)),
        };
        let t = State {
            location: LocId(0),
            valuation: val(int(9)),
        };
        assert!(s.equivalent(&t, &[2]));
        assert!(!s.equivalent(&t, &[6]));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small_rat() -> impl Strategy<Value = Rational> {
            (0i64..12, 1i64..5).prop_map(|(n, d)| Rational::new(n, d))
        }

        proptest! {
            #[test]
            fn delays_are_additive(x0 in small_rat(), d1 in small_rat(), d2 in small_rat()) {
                let ta = ring();
                let s = State { location: LocId(1), valuation: val(x0) };
                let two = step(&ta, &s, &Move::delay(d1))
                    .and_then(|m| step(&ta, &m, &Move::delay(d2)));
                let one = step(&ta, &s, &Move::delay(d1 + d2));
                prop_assert_eq!(two.ok(), one.ok());
            }

            #[test]
            fn global_time_is_monotone(x0 in small_rat(), d in small_rat()) {
                let ta = ring();
                let a = ta.action_by_name("a").unwrap();
                let s = State { location: LocId(1), valuation: val(x0) };
                for m in [Move::delay(d), Move::act(d, a)] {
                    if let Ok(t) = step(&ta, &s, &m) {
                        prop_assert_eq!(t.valuation.global, s.valuation.global + d);
                    }
                }
            }

            #[test]
            fn joint_step_is_small_and_nonempty(d1 in small_rat(), d2 in small_rat()) {
                let g = two_edge_game();
                let a = g.automaton.action_by_name("a").unwrap();
                let b = g.automaton.action_by_name("b").unwrap();
                let s = g.automaton.initial_state();
                for (m1, m2) in [
                    (Move::act(d1, a), Move::act(d2, b)),
                    (Move::delay(d1), Move::act(d2, b)),
                    (Move::act(d1, a), Move::delay(d2)),
                ] {
                    let out = joint_step(&g, &s, &m1, &m2).unwrap();
                    prop_assert!(!out.is_empty() && out.len() <= 2);
                }
            }
        }
    }
}
