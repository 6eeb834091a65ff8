//! Turn-based parity arena over regions of a timed game.
//!
//! Player 1 commits to a region of the current time successor chain and an
//! own action (or to waiting until the end of the chain). Player 2 then
//! lets the move happen, preempts it with an earlier move of its own, or
//! resolves a tie in its favour. A unit clock `__theta` ticks whenever it
//! has reached one at the moment of a transition, which makes a play
//! time-divergent iff it ticks infinitely often.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use crate::model::{ActionId, ClockId, Edge, LocId, Player, TimedGame};
use crate::regions::{delay_chain, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WinObjective {
    /// Never visit a bad location (on divergent plays).
    Safety,
    /// Visit bad locations finitely often (on divergent plays).
    CoBuchi,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct P1Node {
    pub loc: LocId,
    pub region: Region,
    /// Safety: a bad location was seen. Co-Büchi: one was seen since the
    /// last tick.
    pub mem: bool,
}

/// Player 1's symbolic move: act (or wait, if `action` is `None`) once the
/// `index`-th region of the time successor chain is reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Choice {
    pub index: usize,
    pub action: Option<ActionId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resolution {
    /// Player 1's move takes place.
    Happen,
    /// Player 2 moves first, in an earlier region of the chain.
    Preempt { index: usize, action: Option<ActionId> },
    /// Player 2 moves first inside the same open region.
    SameRegion { action: Option<ActionId> },
    /// Both move at the same time and player 2's successor is taken.
    Tie { action: Option<ActionId> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    P1(P1Node),
    Move { from: usize, choice: Choice },
    Event { target: usize, tick: bool, blame: bool },
}

#[derive(Debug, Clone)]
pub struct Arena {
    pub kinds: Vec<NodeKind>,
    pub owner: Vec<Player>,
    pub priority: Vec<u8>,
    pub succ: Vec<Vec<usize>>,
    /// For move nodes, the resolution leading to each successor.
    pub resolutions: HashMap<usize, Vec<Resolution>>,
    pub initial: usize,
    pub objective: WinObjective,
    /// Maximal constants of the game clocks followed by `__theta`.
    pub maxc: Vec<u32>,
    pub theta: usize,
}

/// Priority of a transition and the memory bit after it.
pub fn transition_priority(
    objective: WinObjective,
    mem: bool,
    bad_target: bool,
    tick: bool,
    blame: bool,
) -> (u8, bool) {
    let seen = mem || bad_target;
    let p = if tick {
        if seen {
            1
        } else {
            2
        }
    } else if blame {
        3
    } else {
        4
    };
    let next = match objective {
        WinObjective::Safety => seen,
        WinObjective::CoBuchi => seen && !tick,
    };
    (p, next)
}

/// Least priority seen infinitely often along `prefix cycle^omega`, where
/// each transition is `(bad target, tick, blame)`.
pub fn lasso_priority(
    objective: WinObjective,
    initial_bad: bool,
    prefix: &[(bool, bool, bool)],
    cycle: &[(bool, bool, bool)],
) -> u8 {
    let mut mem = initial_bad;
    for &(bad, tick, blame) in prefix {
        mem = transition_priority(objective, mem, bad, tick, blame).1;
    }
    // the memory at lap boundaries repeats after at most two laps
    let mut seen = Vec::new();
    while !seen.contains(&mem) {
        seen.push(mem);
        for &(bad, tick, blame) in cycle {
            mem = transition_priority(objective, mem, bad, tick, blame).1;
        }
    }
    let mut min = u8::MAX;
    for _ in 0..2 {
        for &(bad, tick, blame) in cycle {
            let (p, next) = transition_priority(objective, mem, bad, tick, blame);
            min = min.min(p);
            mem = next;
        }
    }
    min
}

struct Builder<'a> {
    bad: &'a [bool],
    objective: WinObjective,
    maxc: Vec<u32>,
    kinds: Vec<NodeKind>,
    succ: Vec<Vec<usize>>,
    priority: Vec<u8>,
    p1_index: HashMap<P1Node, usize>,
    event_index: HashMap<(usize, bool, bool, u8), usize>,
    resolutions: HashMap<usize, Vec<Resolution>>,
    queue: VecDeque<usize>,
}

impl Builder<'_> {
    fn node(&mut self, kind: NodeKind, prio: u8) -> usize {
        self.kinds.push(kind);
        self.succ.push(Vec::new());
        self.priority.push(prio);
        self.kinds.len() - 1
    }

    fn p1(&mut self, n: P1Node) -> usize {
        if let Some(&i) = self.p1_index.get(&n) {
            return i;
        }
        let i = self.node(NodeKind::P1(n.clone()), 4);
        self.p1_index.insert(n, i);
        self.queue.push_back(i);
        i
    }

    fn event(&mut self, from: &P1Node, out: Outcome, blame: bool) -> usize {
        let bad = self.bad[out.loc.0];
        let (prio, mem) = transition_priority(self.objective, from.mem, bad, out.tick, blame);
        let target = self.p1(P1Node {
            loc: out.loc,
            region: out.region,
            mem,
        });
        let key = (target, out.tick, blame, prio);
        if let Some(&i) = self.event_index.get(&key) {
            return i;
        }
        let i = self.node(
            NodeKind::Event {
                target,
                tick: out.tick,
                blame,
            },
            prio,
        );
        self.succ[i].push(target);
        self.event_index.insert(key, i);
        i
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Outcome {
    pub loc: LocId,
    pub region: Region,
    pub tick: bool,
}

pub(crate) fn ticks(r: &Region, theta: usize) -> bool {
    r.int(theta).map_or(true, |v| v >= 1)
}

/// Successor of taking `edge` (or only delaying) in region `r`.
pub(crate) fn outcome(
    g: &TimedGame,
    theta: usize,
    loc: LocId,
    r: &Region,
    edge: Option<&Edge>,
) -> Option<Outcome> {
    let tick = ticks(r, theta);
    let mut resets: Vec<ClockId> = edge.map_or(Vec::new(), |e| e.resets.clone());
    if tick {
        resets.push(ClockId(theta));
    }
    let target = edge.map_or(loc, |e| e.target);
    let region = r.reset(&resets);
    region
        .satisfies(&g.automaton.loc(target).invariant)
        .then_some(Outcome {
            loc: target,
            region,
            tick,
        })
}

/// Edges of `player` enabled in region `r` whose target invariant holds.
pub(crate) fn enabled_edges<'a>(
    g: &'a TimedGame,
    theta: usize,
    loc: LocId,
    r: &'a Region,
    player: Player,
) -> impl Iterator<Item = &'a Edge> + 'a {
    g.automaton.outgoing(loc).filter(move |e| {
        g.owners[e.action.0] == player
            && r.satisfies(&e.guard)
            && outcome(g, theta, loc, r, Some(e)).is_some()
    })
}

/// The two moves lead to the same state: same target and every clock reset
/// by only one of them is already zero.
pub(crate) fn same_target(r: &Region, e1: Option<&Edge>, e2: Option<&Edge>, loc: LocId) -> bool {
    let t1 = e1.map_or(loc, |e| e.target);
    let t2 = e2.map_or(loc, |e| e.target);
    if t1 != t2 {
        return false;
    }
    let r1: &[ClockId] = e1.map_or(&[], |e| &e.resets);
    let r2: &[ClockId] = e2.map_or(&[], |e| &e.resets);
    r1.iter()
        .filter(|c| !r2.contains(c))
        .chain(r2.iter().filter(|c| !r1.contains(c)))
        .all(|c| r.is_zero(c.0))
}

pub(crate) fn edge_for<'a>(
    g: &'a TimedGame,
    theta: usize,
    loc: LocId,
    r: &'a Region,
    action: Option<ActionId>,
) -> Option<&'a Edge> {
    let a = action?;
    g.automaton
        .outgoing(loc)
        .find(|e| e.action == a && r.satisfies(&e.guard))
        .filter(|e| outcome(g, theta, loc, r, Some(e)).is_some())
}

fn p2_moves<'a>(g: &'a TimedGame, theta: usize, loc: LocId, r: &'a Region) -> Vec<Option<&'a Edge>> {
    let mut out: Vec<Option<&Edge>> = enabled_edges(g, theta, loc, r, Player::Two).map(Some).collect();
    out.push(None);
    out
}

/// Regions player 1 can wait for from `n`.
pub fn chain_of(g: &TimedGame, maxc: &[u32], n: &P1Node) -> Vec<Region> {
    delay_chain(&n.region, &g.automaton.loc(n.loc).invariant, maxc)
}

/// Builds the reachable arena of `g` for avoiding (or eventually avoiding)
/// the locations flagged in `bad`.
pub fn build_arena(g: &TimedGame, bad: &[bool], objective: WinObjective) -> Arena {
    let ta = &g.automaton;
    let theta = ta.clocks.len();
    let mut maxc = ta.max_constants();
    maxc.push(1);
    let mut b = Builder {
        bad,
        objective,
        maxc,
        kinds: Vec::new(),
        succ: Vec::new(),
        priority: Vec::new(),
        p1_index: HashMap::new(),
        event_index: HashMap::new(),
        resolutions: HashMap::new(),
        queue: VecDeque::new(),
    };
    let init = b.p1(P1Node {
        loc: ta.initial,
        region: Region::zero(theta + 1),
        mem: bad[ta.initial.0],
    });
    while let Some(v) = b.queue.pop_front() {
        let NodeKind::P1(n) = b.kinds[v].clone() else {
            unreachable!()
        };
        let chain = chain_of(g, &b.maxc, &n);
        let mut choices = Vec::new();
        for (i, r) in chain.iter().enumerate() {
            for e in enabled_edges(g, theta, n.loc, r, Player::One) {
                choices.push(Choice {
                    index: i,
                    action: Some(e.action),
                });
            }
        }
        choices.push(Choice {
            index: chain.len() - 1,
            action: None,
        });
        for choice in choices {
            let m = b.node(NodeKind::Move { from: v, choice }, 4);
            b.succ[v].push(m);
            let mut res = Vec::new();
            let ri = &chain[choice.index];
            let e1 = edge_for(g, theta, n.loc, ri, choice.action);
            let mine = outcome(g, theta, n.loc, ri, e1).expect("choice is enabled");
            res.push((Resolution::Happen, b.event(&n, mine, true)));
            let p2_moves = |r| p2_moves(g, theta, n.loc, r);
            for (j, rj) in chain.iter().enumerate().take(choice.index) {
                for e2 in p2_moves(rj) {
                    let o = outcome(g, theta, n.loc, rj, e2).expect("enabled");
                    let r = Resolution::Preempt {
                        index: j,
                        action: e2.map(|e| e.action),
                    };
                    res.push((r, b.event(&n, o, false)));
                }
            }
            if choice.index > 0 && !ri.is_point() {
                for e2 in p2_moves(ri) {
                    let o = outcome(g, theta, n.loc, ri, e2).expect("enabled");
                    let r = Resolution::SameRegion {
                        action: e2.map(|e| e.action),
                    };
                    res.push((r, b.event(&n, o, false)));
                }
            }
            for e2 in p2_moves(ri) {
                let blame = same_target(ri, e1, e2, n.loc);
                let o = outcome(g, theta, n.loc, ri, e2).expect("enabled");
                let r = Resolution::Tie {
                    action: e2.map(|e| e.action),
                };
                res.push((r, b.event(&n, o, blame)));
            }
            let mut seen = HashMap::new();
            let mut kept = Vec::new();
            for (r, t) in res {
                if seen.insert(t, ()).is_none() {
                    b.succ[m].push(t);
                    kept.push(r);
                }
            }
            b.resolutions.insert(m, kept);
        }
    }
    let owner = b
        .kinds
        .iter()
        .map(|k| match k {
            NodeKind::Move { .. } => Player::Two,
            _ => Player::One,
        })
        .collect();
    Arena {
        kinds: b.kinds,
        owner,
        priority: b.priority,
        succ: b.succ,
        resolutions: b.resolutions,
        initial: init,
        objective,
        maxc: b.maxc,
        theta,
    }
}

impl Arena {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn p1_nodes(&self) -> usize {
        self.kinds
            .iter()
            .filter(|k| matches!(k, NodeKind::P1(_)))
            .count()
    }

    pub fn p1_node(&self, v: usize) -> Option<&P1Node> {
        match &self.kinds[v] {
            NodeKind::P1(n) => Some(n),
            _ => None,
        }
    }

    /// Copy in which every player-1 node keeps only the successor given by
    /// `strategy` (if any).
    pub fn restrict(&self, strategy: &HashMap<usize, usize>) -> Arena {
        let mut out = self.clone();
        for (&v, &m) in strategy {
            out.succ[v] = vec![m];
        }
        out
    }

    pub fn to_dot(&self, g: &TimedGame, winning: &[bool]) -> String {
        let ta = &g.automaton;
        let mut names = ta.clocks.clone();
        names.push("__theta".into());
        let mut out = String::from("digraph arena {\n");
        for (v, k) in self.kinds.iter().enumerate() {
            let color = if winning[v] { "palegreen" } else { "lightpink" };
            let (shape, label) = match k {
                NodeKind::P1(n) => (
                    "box",
                    format!(
                        "{} {}{}",
                        ta.locations[n.loc.0].name,
                        n.region.display(&names, &self.maxc),
                        if n.mem { " *" } else { "" }
                    ),
                ),
                NodeKind::Move { choice, .. } => (
                    "diamond",
                    format!(
                        "{} {}",
                        choice.index,
                        choice.action.map_or("_", |a| ta.actions[a.0].as_str())
                    ),
                ),
                NodeKind::Event { .. } => ("circle", format!("{}", self.priority[v])),
            };
            writeln!(
                out,
                "  n{v} [shape={shape}, style=filled, fillcolor={color}, label=\"{}\"];",
                label.replace('"', "'")
            )
            .unwrap();
        }
        for (v, ws) in self.succ.iter().enumerate() {
            for w in ws {
                writeln!(out, "  n{v} -> n{w};").unwrap();
            }
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    type Ev = (bool, bool, bool);

    fn expected(objective: WinObjective, init_bad: bool, prefix: &[Ev], cycle: &[Ev]) -> bool {
        let divergent = cycle.iter().any(|e| e.1);
        if divergent {
            match objective {
                WinObjective::Safety => !init_bad && !prefix.iter().chain(cycle).any(|e| e.0),
                WinObjective::CoBuchi => !cycle.iter().any(|e| e.0),
            }
        } else {
            !cycle.iter().any(|e| e.2)
        }
    }

    #[test]
    fn table_rows() {
        use WinObjective::*;
        // divergent and safe, divergent and unsafe
        assert_eq!(lasso_priority(Safety, false, &[], &[(false, true, true)]), 2);
        assert_eq!(lasso_priority(Safety, false, &[(true, false, false)], &[(false, true, false)]), 1);
        assert_eq!(lasso_priority(CoBuchi, false, &[(true, false, false)], &[(false, true, true)]), 2);
        assert_eq!(lasso_priority(CoBuchi, false, &[], &[(true, false, false), (false, true, false)]), 1);
        // convergent, blamed or not, even inside bad locations
        assert_eq!(lasso_priority(Safety, true, &[], &[(true, false, false)]), 4);
        assert_eq!(lasso_priority(CoBuchi, true, &[], &[(true, false, false)]), 4);
        assert_eq!(lasso_priority(Safety, false, &[], &[(false, false, true)]), 3);
        assert_eq!(lasso_priority(CoBuchi, false, &[], &[(true, false, true)]), 3);
    }

    fn ev(rng: &mut impl Rng, p: f64) -> Ev {
        (rng.gen_bool(0.2), rng.gen_bool(p), rng.gen_bool(0.3))
    }

    #[test]
    fn table_matches_winning_condition() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mut classes = std::collections::HashSet::new();
        for _ in 0..5000 {
            let tick_p = [0.0, 0.4][rng.gen_range(0..2)];
            let plen = rng.gen_range(0..4);
            let clen = rng.gen_range(1..5);
            let prefix: Vec<Ev> = (0..plen).map(|_| ev(&mut rng, 0.4)).collect();
            let cycle: Vec<Ev> = (0..clen).map(|_| ev(&mut rng, tick_p)).collect();
            let init_bad = rng.gen_bool(0.1);
            for objective in [WinObjective::Safety, WinObjective::CoBuchi] {
                let p = lasso_priority(objective, init_bad, &prefix, &cycle);
                let win = expected(objective, init_bad, &prefix, &cycle);
                assert_eq!(p % 2 == 0, win, "{objective:?} {prefix:?} {cycle:?}");
                classes.insert((objective, cycle.iter().any(|e| e.1), win));
            }
        }
        assert_eq!(classes.len(), 8);
    }
}
