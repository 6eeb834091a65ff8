//! Realizability of window objectives on timed games.

pub mod arena;
pub mod sim;
pub mod solve;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use crate::error::GameError;
use crate::expand::{expand_game, ExpandedAutomaton};
use crate::model::{Edge, LocId, Location, Player, PrioritySpec, TimedAutomaton, TimedGame};

pub use arena::{build_arena, Arena, Choice, NodeKind, P1Node, Resolution, WinObjective};
pub use solve::{fixpoint_1to4, zielonka, Solution};

/// Two-state deterministic parity automaton over location sequences.
/// State 0 is the initial state, state 1 the bad one.
#[derive(Debug, Clone)]
pub struct TwoStateDPA {
    pub bad: Vec<bool>,
    pub objective: WinObjective,
}

impl TwoStateDPA {
    pub fn safety(bad: Vec<bool>) -> Self {
        TwoStateDPA {
            bad,
            objective: WinObjective::Safety,
        }
    }

    pub fn cobuchi(bad: Vec<bool>) -> Self {
        TwoStateDPA {
            bad,
            objective: WinObjective::CoBuchi,
        }
    }

    pub fn initial(&self) -> u8 {
        0
    }

    pub fn step(&self, q: u8, loc: usize) -> u8 {
        match self.objective {
            WinObjective::Safety => u8::from(q == 1 || self.bad[loc]),
            WinObjective::CoBuchi => u8::from(self.bad[loc]),
        }
    }

    pub fn priority(&self, q: u8) -> u8 {
        match (self.objective, q) {
            (WinObjective::Safety, 0) => 0,
            (WinObjective::CoBuchi, 0) => 2,
            _ => 1,
        }
    }

    /// Runs on `prefix cycle^omega`; accepts iff the least priority seen
    /// infinitely often is even.
    pub fn accepts(&self, prefix: &[usize], cycle: &[usize]) -> bool {
        assert!(!cycle.is_empty());
        let mut q = self.initial();
        for &l in prefix {
            q = self.step(q, l);
        }
        // the state at lap boundaries is eventually periodic; two states
        // means a third lap repeats one of the first two
        let mut seen: Vec<u8> = Vec::new();
        loop {
            if let Some(pos) = seen.iter().position(|&s| s == q) {
                let mut min = u8::MAX;
                let mut r = seen[pos];
                for _ in pos..seen.len() {
                    for &l in cycle {
                        r = self.step(r, l);
                        min = min.min(self.priority(r));
                    }
                }
                return min % 2 == 0;
            }
            seen.push(q);
            for &l in cycle {
                q = self.step(q, l);
            }
        }
    }
}

/// Player 1's choices on the reachable part of its winning region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionStrategy {
    /// Player-1 node to the chosen move node and its symbolic move.
    pub moves: BTreeMap<usize, (usize, Choice)>,
}

impl RegionStrategy {
    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn as_map(&self) -> HashMap<usize, usize> {
        self.moves.iter().map(|(&v, &(m, _))| (v, m)).collect()
    }

    /// One line per node: location, region, memory bit, then either the
    /// region to wait for and the action (`_` for none) or `beta1-now`.
    pub fn dump(&self, arena: &Arena, g: &TimedGame) -> String {
        let ta = &g.automaton;
        let mut names = ta.clocks.clone();
        names.push("__theta".into());
        let mut out = String::new();
        for (&v, &(_, choice)) in &self.moves {
            let n = arena.p1_node(v).expect("player-1 node");
            write!(
                out,
                "{} {} mem={} -> ",
                ta.locations[n.loc.0].name,
                n.region.display(&names, &arena.maxc),
                u8::from(n.mem)
            )
            .unwrap();
            let action = choice.action.map(|a| ta.actions[a.0].as_str());
            if choice.index == 0 && action == Some(crate::expand::BETA1) {
                out.push_str("beta1-now\n");
                continue;
            }
            let chain = arena::chain_of(g, &arena.maxc, n);
            writeln!(
                out,
                "delay-to {} {}",
                chain[choice.index].display(&names, &arena.maxc),
                action.unwrap_or("_")
            )
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, Default)]
pub struct GameStats {
    pub expanded_locations: usize,
    pub arena_nodes: usize,
    pub p1_nodes: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct Realization {
    pub wins: bool,
    pub strategy: Option<RegionStrategy>,
    pub expanded: ExpandedAutomaton,
    pub game: TimedGame,
    pub arena: Arena,
    pub solution: Solution,
    pub stats: GameStats,
}

/// Player-1 nodes reachable from the initial node when player 1 follows
/// `strategy`, restricted to nodes where the strategy is defined.
fn reachable_under(arena: &Arena, strategy: &HashMap<usize, usize>) -> Vec<bool> {
    let mut seen = vec![false; arena.len()];
    let mut stack = vec![arena.initial];
    seen[arena.initial] = true;
    while let Some(v) = stack.pop() {
        let next: Vec<usize> = match arena.kinds[v] {
            NodeKind::P1(_) => strategy.get(&v).copied().into_iter().collect(),
            _ => arena.succ[v].clone(),
        };
        for w in next {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Both positional strategies stay inside their winning regions, so the
/// two regions partition the arena.
pub fn certify(arena: &Arena, sol: &Solution) -> bool {
    use solve::Game;
    (0..arena.len()).all(|v| {
        let mine = sol.win1[v];
        let strategy = match arena.owner(v) {
            Player::One if mine => Some(&sol.strategy1),
            Player::Two if !mine => Some(&sol.strategy2),
            _ => None,
        };
        match strategy {
            Some(s) => s
                .get(&v)
                .is_some_and(|w| arena.succ(v).contains(w) && sol.win1[*w] == mine),
            None => arena.succ(v).iter().all(|&w| sol.win1[w] == mine),
        }
    })
}

/// Decides whether player 1 wins the (direct) window objective of `spec`
/// on `g`, returning a region strategy when it does. Several dimensions are
/// handled on the product expansion.
pub fn realize(g: &TimedGame, spec: &PrioritySpec, direct: bool) -> Result<Realization, GameError> {
    let start = Instant::now();
    if g.owners.len() != g.automaton.actions.len() {
        return Err(GameError::NotAGame);
    }
    let (x, gx) = expand_game(g, spec)?;
    let bad: Vec<bool> = (0..x.ta.locations.len()).map(|l| x.is_bad(LocId(l))).collect();
    let objective = if direct {
        WinObjective::Safety
    } else {
        WinObjective::CoBuchi
    };
    let arena = build_arena(&gx, &bad, objective);
    let solution = zielonka(&arena);
    debug_assert!(certify(&arena, &solution));
    let wins = solution.win1[arena.initial];
    let strategy = wins.then(|| {
        let reach = reachable_under(&arena, &solution.strategy1);
        let moves = solution
            .strategy1
            .iter()
            .filter(|(v, _)| reach[**v] && arena.p1_node(**v).is_some())
            .map(|(&v, &m)| {
                let NodeKind::Move { choice, .. } = arena.kinds[m] else {
                    unreachable!("player 1 moves to move nodes")
                };
                (v, (m, choice))
            })
            .collect();
        RegionStrategy { moves }
    });
    let stats = GameStats {
        expanded_locations: x.ta.locations.len(),
        arena_nodes: arena.len(),
        p1_nodes: arena.p1_nodes(),
        elapsed: start.elapsed(),
    };
    Ok(Realization {
        wins,
        strategy,
        expanded: x,
        game: gx,
        arena,
        solution,
        stats,
    })
}

/// Checks a strategy independently: with player 1 restricted to it, the
/// fixpoint solver must still declare every reachable node winning.
pub fn strategy_wins(arena: &Arena, strategy: &RegionStrategy) -> bool {
    let map = strategy.as_map();
    let restricted = arena.restrict(&map);
    let win = fixpoint_1to4(&restricted);
    let reach = reachable_under(arena, &map);
    (0..arena.len()).all(|v| !reach[v] || win[v])
}

/// Encodes the safety objective "avoid `unsafe_locs`" as a window objective
/// with bound 1: every location is paired with a bit recording whether an
/// unsafe location was visited, and its priority is that bit.
pub fn safety_reduction(g: &TimedGame, unsafe_locs: &[bool]) -> (TimedGame, PrioritySpec) {
    let ta = &g.automaton;
    let n = ta.locations.len();
    let idx = |l: LocId, b: bool| LocId(2 * l.0 + usize::from(b));
    let mut locations = Vec::with_capacity(2 * n);
    for l in &ta.locations {
        for b in [false, true] {
            locations.push(Location {
                name: format!("{}_{}", l.name, u8::from(b)),
                invariant: l.invariant.clone(),
                priority: vec![u32::from(b)],
            });
        }
    }
    let mut edges = Vec::new();
    for e in &ta.edges {
        for b in [false, true] {
            edges.push(Edge {
                source: idx(e.source, b),
                guard: e.guard.clone(),
                action: e.action,
                resets: e.resets.clone(),
                target: idx(e.target, b || unsafe_locs[e.target.0]),
            });
        }
    }
    let automaton = TimedAutomaton {
        name: format!("{}_safe", ta.name),
        clocks: ta.clocks.clone(),
        actions: ta.actions.clone(),
        locations,
        initial: idx(ta.initial, unsafe_locs[ta.initial.0]),
        edges,
    };
    let spec = PrioritySpec::new(&automaton, vec![1]).expect("one dimension");
    (
        TimedGame {
            automaton,
            owners: g.owners.clone(),
        },
        spec,
    )
}

/// Whether player 1 can keep divergent plays out of `unsafe_locs` (or win
/// by never being blamed on convergent plays), from the safety arena of `g`
/// solved with the fixpoint solver.
pub fn safety_winner(g: &TimedGame, unsafe_locs: &[bool]) -> bool {
    let arena = build_arena(g, unsafe_locs, WinObjective::Safety);
    fixpoint_1to4(&arena)[arena.initial]
}
