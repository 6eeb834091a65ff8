//! Random timed automata, games and priority specifications for tests and
//! benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{
    Atom, ClockConstraint, ClockId, Edge, LocId, Location, Player, PrioritySpec, Relation,
    TimedAutomaton, TimedGame,
};
use crate::regions::build_region_graph;

#[derive(Debug, Clone)]
pub struct GenParams {
    /// Inclusive ranges.
    pub locations: (usize, usize),
    pub clocks: (usize, usize),
    pub dims: (usize, usize),
    pub edges_per_location: (usize, usize),
    pub actions: usize,
    pub max_const: u32,
    pub max_priority: u32,
    pub invariant_p: f64,
    pub guard_p: f64,
    pub reset_p: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            locations: (2, 4),
            clocks: (1, 2),
            dims: (1, 1),
            edges_per_location: (1, 2),
            actions: 2,
            max_const: 2,
            max_priority: 2,
            invariant_p: 0.4,
            guard_p: 0.5,
            reset_p: 0.4,
        }
    }
}

fn range<R: Rng>(rng: &mut R, (lo, hi): (usize, usize)) -> usize {
    rng.gen_range(lo..=hi)
}

fn atom<R: Rng>(rng: &mut R, clocks: usize, max_const: u32) -> Atom {
    let rel = *[Relation::Lt, Relation::Le, Relation::Gt, Relation::Ge]
        .choose(rng)
        .unwrap();
    let lo = u32::from(matches!(rel, Relation::Lt));
    Atom::new(
        ClockId(rng.gen_range(0..clocks)),
        rel,
        rng.gen_range(lo..=max_const),
    )
}

/// A deterministic automaton: every location uses each action at most once.
pub fn random_automaton<R: Rng>(rng: &mut R, p: &GenParams) -> TimedAutomaton {
    let nl = range(rng, p.locations);
    let nc = range(rng, p.clocks);
    let k = range(rng, p.dims);
    let clocks: Vec<String> = ["x", "y", "z", "w"].iter().take(nc).map(|s| s.to_string()).collect();
    let actions: Vec<String> = (0..p.actions).map(|i| format!("a{i}")).collect();
    let locations = (0..nl)
        .map(|i| {
            let mut invariant = ClockConstraint::tt();
            if rng.gen_bool(p.invariant_p) {
                invariant.push(Atom::new(
                    ClockId(rng.gen_range(0..nc)),
                    Relation::Le,
                    rng.gen_range(1..=p.max_const.max(1)),
                ));
            }
            Location {
                name: format!("l{i}"),
                invariant,
                priority: (0..k).map(|_| rng.gen_range(0..=p.max_priority)).collect(),
            }
        })
        .collect();
    let mut edges = Vec::new();
    for src in 0..nl {
        let n = range(rng, p.edges_per_location).min(p.actions);
        let mut acts: Vec<usize> = (0..p.actions).collect();
        acts.shuffle(rng);
        for &a in &acts[..n] {
            let mut guard = ClockConstraint::tt();
            if rng.gen_bool(p.guard_p) {
                guard.push(atom(rng, nc, p.max_const));
            }
            let resets = (0..nc)
                .filter(|_| rng.gen_bool(p.reset_p))
                .map(ClockId)
                .collect();
            edges.push(Edge {
                source: LocId(src),
                guard,
                action: crate::model::ActionId(a),
                resets,
                target: LocId(rng.gen_range(0..nl)),
            });
        }
    }
    TimedAutomaton {
        name: "R".into(),
        clocks,
        actions,
        locations,
        initial: LocId(0),
        edges,
    }
}

pub fn random_game<R: Rng>(rng: &mut R, p: &GenParams) -> TimedGame {
    let automaton = random_automaton(rng, p);
    let owners = (0..automaton.actions.len())
        .map(|_| if rng.gen_bool(0.5) { Player::One } else { Player::Two })
        .collect();
    TimedGame { automaton, owners }
}

/// Location priorities of `ta` with bounds drawn from `1..=max_lambda`.
pub fn random_spec<R: Rng>(rng: &mut R, ta: &TimedAutomaton, max_lambda: u32) -> PrioritySpec {
    let lambda = (0..ta.dimension()).map(|_| rng.gen_range(1..=max_lambda)).collect();
    PrioritySpec::new(ta, lambda).expect("generated priorities are consistent")
}

/// Draws games until the region graph of the automaton has at most
/// `limit` vertices.
pub fn random_game_within<R: Rng>(rng: &mut R, p: &GenParams, limit: usize) -> TimedGame {
    loop {
        let g = random_game(rng, p);
        if build_region_graph(&g.automaton).len() <= limit {
            return g;
        }
    }
}
