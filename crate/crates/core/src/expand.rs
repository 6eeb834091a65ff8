//! The expanded automaton that tracks the current window of every dimension.
//!
//! A location `(l, q)` remembers, per dimension, the smallest priority seen
//! since the window opened; a fresh clock `__zi` measures its age. Windows
//! that stay odd for `lambda_i` time units are routed through `(l, bad)`.

use std::collections::VecDeque;

use crate::error::ExpandError;
use crate::parse::format_constraint;
use crate::model::{
    ActionId, Atom, ClockConstraint, ClockId, Edge, LocId, Location, Player, PrioritySpec,
    Relation, TimedAutomaton, TimedGame,
};

pub const BETA1: &str = "__beta1";
pub const BETA2: &str = "__beta2";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Tag {
    Window(Vec<u32>),
    Bad,
}

impl Tag {
    pub fn is_bad(&self) -> bool {
        matches!(self, Tag::Bad)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExpandedLocation {
    pub base: LocId,
    pub tag: Tag,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpandedAutomaton {
    pub ta: TimedAutomaton,
    pub locations: Vec<ExpandedLocation>,
    /// `__z1..__zk`, in dimension order.
    pub z: Vec<ClockId>,
    pub beta: [ActionId; 2],
    pub spec: PrioritySpec,
    /// Number of clocks of the source automaton; they keep their indices.
    pub base_clocks: usize,
    pub d: u32,
}

impl ExpandedAutomaton {
    pub fn is_bad(&self, l: LocId) -> bool {
        self.locations[l.0].tag.is_bad()
    }

    pub fn base(&self, l: LocId) -> LocId {
        self.locations[l.0].base
    }

    pub fn tags_per_location(&self) -> usize {
        (self.d as usize).pow(self.spec.dimension() as u32) + 1
    }

    pub fn index_of(&self, base: LocId, tag: &Tag) -> LocId {
        let per = self.tags_per_location();
        let off = match tag {
            Tag::Bad => per - 1,
            Tag::Window(q) => q.iter().fold(0usize, |acc, &qi| acc * self.d as usize + qi as usize),
        };
        LocId(base.0 * per + off)
    }

    pub fn is_beta(&self, a: ActionId) -> bool {
        self.beta.contains(&a)
    }

    /// Locations reachable in the location graph from the initial one.
    pub fn reachable_locations(&self) -> Vec<bool> {
        location_graph_reachable(&self.ta)
    }

    /// Location graph in DOT. Unreachable locations are drawn dotted and
    /// grey, bad ones as double octagons.
    pub fn to_dot(&self) -> String {
        let ta = &self.ta;
        let reach = self.reachable_locations();
        let mut out = format!("digraph \"{}\" {{\n", ta.name);
        for (i, l) in ta.locations.iter().enumerate() {
            let mut label = l.name.clone();
            if !l.invariant.is_true() {
                label.push_str(&format!("\\n{}", format_constraint(ta, &l.invariant)));
            }
            let mut attrs = format!("label=\"{label}\"");
            if self.is_bad(LocId(i)) {
                attrs.push_str(", shape=doubleoctagon");
            }
            if LocId(i) == ta.initial {
                attrs.push_str(", penwidth=2");
            }
            if !reach[i] {
                attrs.push_str(", style=dotted, color=grey");
            }
            out.push_str(&format!("  n{i} [{attrs}];\n"));
        }
        for e in &ta.edges {
            let resets: Vec<&str> = e.resets.iter().map(|c| ta.clocks[c.0].as_str()).collect();
            let style = if reach[e.source.0] { "" } else { ", style=dotted, color=grey" };
            out.push_str(&format!(
                "  n{} -> n{} [label=\"{}, {}, {{{}}}\"{style}];\n",
                e.source.0,
                e.target.0,
                format_constraint(ta, &e.guard),
                ta.actions[e.action.0],
                resets.join(",")
            ));
        }
        out.push_str("}\n");
        out
    }
}

pub fn location_graph_reachable(ta: &TimedAutomaton) -> Vec<bool> {
    let mut seen = vec![false; ta.locations.len()];
    let mut queue = VecDeque::from([ta.initial]);
    seen[ta.initial.0] = true;
    while let Some(l) = queue.pop_front() {
        for e in ta.outgoing(l) {
            if !seen[e.target.0] {
                seen[e.target.0] = true;
                queue.push_back(e.target);
            }
        }
    }
    seen
}

/// `O_q`: dimensions whose window is currently open.
pub fn open_dims(q: &[u32]) -> Vec<usize> {
    (0..q.len()).filter(|&i| q[i] % 2 == 1).collect()
}

/// Window update when entering a location with priority vector `p`.
pub fn up_vector(q: &[u32], p: &[u32]) -> Result<Vec<u32>, ExpandError> {
    if q.len() != p.len() {
        return Err(ExpandError::DimensionMismatch {
            expected: q.len(),
            found: p.len(),
        });
    }
    Ok(q.iter()
        .zip(p)
        .map(|(&qi, &pi)| if qi % 2 == 1 { qi.min(pi) } else { pi })
        .collect())
}

/// Guard of the `i`-th bad-entry edge: all earlier open windows are still
/// short, and window `i` has just reached its bound.
pub fn bad_entry_guard(
    i: usize,
    q: &[u32],
    lambda: &[u32],
    z: &[ClockId],
) -> Result<ClockConstraint, ExpandError> {
    if q.len() != lambda.len() || z.len() != lambda.len() {
        return Err(ExpandError::DimensionMismatch {
            expected: lambda.len(),
            found: q.len(),
        });
    }
    if i >= q.len() || q[i] % 2 == 0 {
        return Err(ExpandError::EvenDimension(i));
    }
    let mut g = ClockConstraint::tt();
    for j in open_dims(q).into_iter().filter(|&j| j < i) {
        g.push(Atom::new(z[j], Relation::Lt, lambda[j]));
    }
    g.push(Atom::new(z[i], Relation::Ge, lambda[i]));
    g.push(Atom::new(z[i], Relation::Le, lambda[i]));
    Ok(g)
}

fn check_names(ta: &TimedAutomaton) -> Result<(), ExpandError> {
    let names = ta
        .clocks
        .iter()
        .chain(ta.actions.iter())
        .chain(ta.locations.iter().map(|l| &l.name));
    for n in names {
        if n.contains("__") {
            return Err(ExpandError::ReservedName(n.clone()));
        }
    }
    Ok(())
}

fn tag_name(base: &str, tag: &Tag) -> String {
    match tag {
        Tag::Bad => format!("{base}__bad"),
        Tag::Window(q) => {
            let parts: Vec<String> = q.iter().map(|n| n.to_string()).collect();
            format!("{base}__q{}", parts.join("_"))
        }
    }
}

fn all_vectors(d: u32, k: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v| {
                (0..d).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

/// Builds the expanded automaton for `spec`.
pub fn expand(ta: &TimedAutomaton, spec: &PrioritySpec) -> Result<ExpandedAutomaton, ExpandError> {
    check_names(ta)?;
    let k = spec.dimension();
    if spec.priorities.len() != ta.locations.len() {
        return Err(ExpandError::DimensionMismatch {
            expected: ta.locations.len(),
            found: spec.priorities.len(),
        });
    }
    if let Some(p) = spec.priorities.iter().find(|p| p.len() != k) {
        return Err(ExpandError::DimensionMismatch {
            expected: k,
            found: p.len(),
        });
    }
    if let Some(i) = spec.lambda.iter().position(|&l| l == 0) {
        return Err(crate::error::SpecError::ZeroLambda(i).into());
    }
    let d = spec.d();
    let lambda = &spec.lambda;
    let nbase = ta.clocks.len();
    let mut clocks = ta.clocks.clone();
    let z: Vec<ClockId> = (0..k)
        .map(|i| {
            clocks.push(format!("__z{}", i + 1));
            ClockId(nbase + i)
        })
        .collect();
    let mut actions = ta.actions.clone();
    let beta = [ActionId(actions.len()), ActionId(actions.len() + 1)];
    actions.push(BETA1.to_string());
    actions.push(BETA2.to_string());

    let vectors = all_vectors(d, k);
    let mut xlocs = Vec::new();
    let mut locations = Vec::new();
    for (li, l) in ta.locations.iter().enumerate() {
        for q in &vectors {
            let mut inv = l.invariant.clone();
            for i in open_dims(q) {
                inv.push(Atom::new(z[i], Relation::Le, lambda[i]));
            }
            let tag = Tag::Window(q.clone());
            locations.push(Location {
                name: tag_name(&l.name, &tag),
                invariant: inv,
                priority: spec.priorities[li].clone(),
            });
            xlocs.push(ExpandedLocation {
                base: LocId(li),
                tag,
            });
        }
        locations.push(Location {
            name: tag_name(&l.name, &Tag::Bad),
            invariant: ClockConstraint::equals(z[0], 0),
            priority: spec.priorities[li].clone(),
        });
        xlocs.push(ExpandedLocation {
            base: LocId(li),
            tag: Tag::Bad,
        });
    }

    let mut out = ExpandedAutomaton {
        ta: TimedAutomaton {
            name: format!("{}__expanded", ta.name),
            clocks,
            actions,
            locations,
            initial: LocId(0),
            edges: Vec::new(),
        },
        locations: xlocs,
        z: z.clone(),
        beta,
        spec: spec.clone(),
        base_clocks: nbase,
        d,
    };
    out.ta.initial = out.index_of(
        ta.initial,
        &Tag::Window(spec.priorities[ta.initial.0].clone()),
    );

    let mut edges = Vec::new();
    for li in 0..ta.locations.len() {
        let l = LocId(li);
        for q in &vectors {
            let src = out.index_of(l, &Tag::Window(q.clone()));
            let open = open_dims(q);
            for e in ta.outgoing(l) {
                let mut guard = e.guard.clone();
                for &i in &open {
                    guard.push(Atom::new(z[i], Relation::Lt, lambda[i]));
                }
                let mut resets = e.resets.clone();
                resets.extend((0..k).filter(|i| !open.contains(i)).map(|i| z[i]));
                let tq = up_vector(q, &spec.priorities[e.target.0])?;
                edges.push(Edge {
                    source: src,
                    guard,
                    action: e.action,
                    resets,
                    target: out.index_of(e.target, &Tag::Window(tq)),
                });
            }
            for &i in &open {
                let guard = bad_entry_guard(i, q, lambda, &z)?;
                for &b in &beta {
                    edges.push(Edge {
                        source: src,
                        guard: guard.clone(),
                        action: b,
                        resets: z.clone(),
                        target: out.index_of(l, &Tag::Bad),
                    });
                }
            }
        }
        let reopen = out.index_of(l, &Tag::Window(spec.priorities[li].clone()));
        for &b in &beta {
            edges.push(Edge {
                source: out.index_of(l, &Tag::Bad),
                guard: ClockConstraint::tt(),
                action: b,
                resets: Vec::new(),
                target: reopen,
            });
        }
    }
    out.ta.edges = edges;
    Ok(out)
}

/// Expanded game: `__beta1` belongs to player 1, `__beta2` to player 2.
pub fn expand_game(
    g: &TimedGame,
    spec: &PrioritySpec,
) -> Result<(ExpandedAutomaton, TimedGame), ExpandError> {
    let x = expand(&g.automaton, spec)?;
    let mut owners = g.owners.clone();
    owners.push(Player::One);
    owners.push(Player::Two);
    let game = TimedGame {
        automaton: x.ta.clone(),
        owners,
    };
    Ok((x, game))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_automaton, Model};
    use crate::parse::parse_model;

    const RING: &str = "\
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

    #[test]
    fn up_vector_examples() {
        assert_eq!(up_vector(&[1], &[0]).unwrap(), vec![0]);
        assert_eq!(up_vector(&[2], &[1]).unwrap(), vec![1]);
        assert_eq!(up_vector(&[1], &[2]).unwrap(), vec![1]);
        assert!(up_vector(&[1, 2], &[0]).is_err());
    }

    #[test]
    fn bad_entry_guard_examples() {
        let z = [ClockId(0), ClockId(1)];
        assert_eq!(
            bad_entry_guard(0, &[1], &[2], &z[..1]).unwrap(),
            ClockConstraint::equals(ClockId(0), 2)
        );
        let g = bad_entry_guard(1, &[1, 3], &[2, 5], &z).unwrap();
        assert_eq!(
            g.atoms,
            vec![
                Atom::new(z[0], Relation::Lt, 2),
                Atom::new(z[1], Relation::Ge, 5),
                Atom::new(z[1], Relation::Le, 5),
            ]
        );
        assert_eq!(
            bad_entry_guard(0, &[0, 1], &[2, 5], &z).unwrap_err(),
            ExpandError::EvenDimension(0)
        );
    }

    #[test]
    fn ring_sizes() {
        let ta = ring();
        let spec = PrioritySpec::new(&ta, vec![2]).unwrap();
        let x = expand(&ta, &spec).unwrap();
        assert_eq!(x.ta.locations.len(), 12);
        assert!(validate_automaton(&x.ta).is_empty());
        assert_eq!(x.ta.max_constants(), vec![2, 2]);
        let init = &x.locations[x.ta.initial.0];
        assert_eq!(init.base, LocId(0));
        assert_eq!(init.tag, Tag::Window(vec![1]));
    }

    #[test]
    fn reserved_names_rejected() {
        let mut ta = ring();
        ta.clocks[0] = "__z1".into();
        let spec = PrioritySpec::new(&ta, vec![1]).unwrap();
        assert!(matches!(expand(&ta, &spec), Err(ExpandError::ReservedName(_))));
    }

    #[test]
    fn game_owners_extend() {
        let src = RING.replace("action a", "action a owner 2");
        let g = match parse_model(&src).unwrap() {
            Model::Game(g) => g,
            _ => unreachable!(),
        };
        let spec = PrioritySpec::new(&g.automaton, vec![1]).unwrap();
        let (x, eg) = expand_game(&g, &spec).unwrap();
        assert_eq!(eg.owners, vec![Player::Two, Player::One, Player::Two]);
        assert_eq!(eg.automaton.actions[x.beta[0].0], BETA1);
        assert!(crate::model::validate_model(&Model::Game(eg)).is_empty());
    }
}
