//! Verification of window objectives on all time-divergent paths.
//!
//! The direct objective fails iff some divergent path of the expansion
//! reaches a bad location; the non-direct one fails iff some divergent
//! path visits bad locations infinitely often. Both are decided on the
//! region graph of the strongly non-Zeno product.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use num::Zero;

use crate::error::ExpandError;
use crate::expand::{expand, ExpandedAutomaton};
use crate::model::{Move, PrioritySpec, Rational, TimedAutomaton};
use crate::oracle::{check_dtw, check_tw, compress, LassoPlay};
use crate::par::{self, Exec};
use crate::regions::{
    can_reach, chain_delays, on_marked_cycle, region_of, scc, shortest_path, snz_transform,
    GraphEdge, Label, RegionGraph,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    /// Direct timed window: every window is good.
    Direct,
    /// Timed window: from some point on every window is good.
    Eventual,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub expanded_locations: usize,
    pub region_vertices: usize,
    pub region_edges: usize,
    pub elapsed: Duration,
}

impl Stats {
    fn add(&mut self, o: &Stats) {
        self.expanded_locations += o.expanded_locations;
        self.region_vertices += o.region_vertices;
        self.region_edges += o.region_edges;
        self.elapsed = self.elapsed.max(o.elapsed);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub holds: bool,
    /// A violating lasso of the input automaton, re-checked by the oracle.
    /// `None` when the objective holds, or if no witness could be confirmed.
    pub counterexample: Option<LassoPlay>,
    /// Dimension whose check failed, for per-dimension runs.
    pub dimension: Option<usize>,
    pub stats: Stats,
}

/// Every divergent path satisfies the direct objective, using the
/// expansion over all dimensions at once.
pub fn verify_direct(ta: &TimedAutomaton, spec: &PrioritySpec) -> Result<Verdict, ExpandError> {
    verify_product(ta, spec, Objective::Direct)
}

/// Every divergent path satisfies the non-direct objective.
pub fn verify_tw(ta: &TimedAutomaton, spec: &PrioritySpec) -> Result<Verdict, ExpandError> {
    verify_product(ta, spec, Objective::Eventual)
}

pub fn verify_product(
    ta: &TimedAutomaton,
    spec: &PrioritySpec,
    objective: Objective,
) -> Result<Verdict, ExpandError> {
    let start = Instant::now();
    let x = expand(ta, spec)?;
    let (g, witness) = search(&x, objective);
    let holds = witness.is_none();
    let counterexample = witness.and_then(|(p, c)| concretize(ta, &x, &g, &p, &c, spec, objective));
    Ok(Verdict {
        holds,
        counterexample,
        dimension: None,
        stats: Stats {
            expanded_locations: x.ta.locations.len(),
            region_vertices: g.len(),
            region_edges: g.edge_count(),
            elapsed: start.elapsed(),
        },
    })
}

/// Conjunction of single-dimension checks, run through `exec`. The first
/// failing dimension (by index) supplies the counterexample.
pub fn verify_per_dimension(
    ta: &TimedAutomaton,
    spec: &PrioritySpec,
    objective: Objective,
    exec: Exec,
) -> Result<Verdict, ExpandError> {
    let start = Instant::now();
    let dims: Vec<usize> = (0..spec.dimension()).collect();
    let results = par::map(exec, dims, |i| verify_product(ta, &spec.component(i), objective));
    let mut out = Verdict {
        holds: true,
        counterexample: None,
        dimension: None,
        stats: Stats::default(),
    };
    for (i, r) in results.into_iter().enumerate() {
        let v = r?;
        out.stats.add(&v.stats);
        if !v.holds && out.holds {
            out.holds = false;
            out.dimension = Some(i);
            out.counterexample = v.counterexample;
        }
    }
    out.stats.elapsed = start.elapsed();
    Ok(out)
}

fn accepting(x: &ExpandedAutomaton, objective: Objective) -> Vec<bool> {
    match objective {
        Objective::Direct => vec![true; x.ta.locations.len()],
        Objective::Eventual => (0..x.ta.locations.len())
            .map(|l| x.locations[l].tag.is_bad())
            .collect(),
    }
}

fn targets(g: &RegionGraph, x: &ExpandedAutomaton, objective: Objective) -> Vec<bool> {
    let marked = on_marked_cycle(g);
    match objective {
        Objective::Direct => {
            let live = can_reach(g, &marked);
            (0..g.len())
                .map(|v| live[v] && x.is_bad(g.vertices[v].loc))
                .collect()
        }
        Objective::Eventual => marked,
    }
}

type Path = Vec<(usize, GraphEdge)>;

/// Region graph of the product and, if the objective is violated, a
/// region lasso: a path from the initial vertex and a cycle containing a
/// marked edge.
pub fn search(x: &ExpandedAutomaton, objective: Objective) -> (RegionGraph, Option<(Path, Path)>) {
    let g = snz_transform(&x.ta, &accepting(x, objective));
    let t = targets(&g, x, objective);
    let Some(mut prefix) = shortest_path(&g, g.initial, |v| t[v], |_| true) else {
        return (g, None);
    };
    let reached = prefix.last().map_or(g.initial, |(_, e)| e.target);
    let marked = on_marked_cycle(&g);
    let to_cycle = shortest_path(&g, reached, |v| marked[v], |_| true).expect("target is live");
    prefix.extend(to_cycle);
    let c = prefix.last().map_or(g.initial, |(_, e)| e.target);
    let comp = scc(g.len(), |v| g.succ[v].iter().map(|e| e.target).collect());
    let (a, e) = (0..g.len())
        .filter(|&v| comp[v] == comp[c])
        .find_map(|v| {
            g.succ[v]
                .iter()
                .find(|e| e.marked && comp[e.target] == comp[c])
                .map(|e| (v, *e))
        })
        .expect("component has a marked edge");
    prefix.extend(shortest_path(&g, c, |v| v == a, |v| comp[v] == comp[c]).expect("same component"));
    let mut cycle = vec![(a, e)];
    cycle.extend(shortest_path(&g, e.target, |v| v == a, |v| comp[v] == comp[c]).expect("same component"));
    (g, Some((prefix, cycle)))
}

/// Concrete runs of the region lasso with grid delays, projected to `ta`
/// and confirmed by the oracle. Tries finer grids when the region path
/// cannot be followed on the current one.
fn concretize(
    ta: &TimedAutomaton,
    x: &ExpandedAutomaton,
    g: &RegionGraph,
    prefix: &Path,
    cycle: &Path,
    spec: &PrioritySpec,
    objective: Objective,
) -> Option<LassoPlay> {
    let mut n = 2 * (g.clock_names.len() as i64 + 1);
    for _ in 0..8 {
        if let Some((p, c)) = follow(x, g, prefix, cycle, n) {
            let project = |ms: Vec<Move>| -> Vec<Move> {
                ms.into_iter()
                    .map(|m| Move {
                        delay: m.delay,
                        action: m.action.filter(|a| !x.is_beta(*a)),
                    })
                    .collect()
            };
            let lasso = LassoPlay::from_moves(ta, &project(p), &project(c)).ok()?;
            let lasso = compress(ta, &lasso).ok()?;
            let violated = match objective {
                Objective::Direct => check_dtw(&lasso, spec),
                Objective::Eventual => check_tw(&lasso, spec),
            };
            return (violated == Ok(false)).then_some(lasso);
        }
        n *= 2;
    }
    None
}

/// Moves of the expanded automaton following the region lasso, with the
/// cycle repeated until the concrete state (clocks above their maximal
/// constant identified) recurs at a lap boundary.
fn follow(
    x: &ExpandedAutomaton,
    g: &RegionGraph,
    prefix: &Path,
    cycle: &Path,
    n: i64,
) -> Option<(Vec<Move>, Vec<Move>)> {
    let theta = g.theta.expect("product graph");
    let mut values = vec![Rational::zero(); g.clock_names.len()];
    let mut pending = Rational::zero();
    let mut delays = 0usize;
    let mut cur = g.initial;
    let mut run = |path: &Path,
                   values: &mut Vec<Rational>,
                   cur: &mut usize,
                   out: &mut Vec<Move>|
     -> Option<()> {
        for (v, e) in path {
            debug_assert_eq!(*v, *cur);
            let here = &g.vertices[*v];
            match e.label {
                Label::Delay => {
                    if g.vertices[e.target].region != here.region {
                        delays += 1;
                    }
                    *cur = e.target;
                    continue;
                }
                Label::Action(_) | Label::Tick => {}
            }
            settle(g, values, &mut delays, &mut pending, *cur, n)?;
            match e.label {
                Label::Action(k) => {
                    let edge = &x.ta.edges[k];
                    for c in &edge.resets {
                        values[c.0] = Rational::zero();
                    }
                    out.push(Move {
                        delay: std::mem::replace(&mut pending, Rational::zero()),
                        action: Some(edge.action),
                    });
                }
                Label::Tick => values[theta] = Rational::zero(),
                Label::Delay => unreachable!(),
            }
            *cur = e.target;
            if region_of(values, &g.maxc) != g.vertices[*cur].region {
                return None;
            }
        }
        settle(g, values, &mut delays, &mut pending, *cur, n)?;
        if !pending.is_zero() {
            out.push(Move::delay(std::mem::replace(&mut pending, Rational::zero())));
        }
        Some(())
    };
    let mut pre = Vec::new();
    run(prefix, &mut values, &mut cur, &mut pre)?;
    let key = |values: &[Rational], cur: usize| -> (usize, Vec<Rational>) {
        let vals = values
            .iter()
            .zip(&g.maxc)
            .map(|(v, &c)| {
                let c = Rational::from_integer(c as i64);
                if *v > c {
                    c + 1
                } else {
                    *v
                }
            })
            .collect();
        (cur, vals)
    };
    let mut seen: HashMap<(usize, Vec<Rational>), usize> = HashMap::new();
    let mut laps: Vec<Vec<Move>> = Vec::new();
    for lap in 0..4096 {
        let k = key(&values, cur);
        if let Some(&first) = seen.get(&k) {
            for l in &laps[..first] {
                pre.extend(l.iter().copied());
            }
            let cyc: Vec<Move> = laps[first..].iter().flatten().copied().collect();
            return Some((pre, cyc));
        }
        seen.insert(k, lap);
        let mut out = Vec::new();
        run(cycle, &mut values, &mut cur, &mut out)?;
        laps.push(out);
    }
    None
}

/// Applies the delay reaching the `delays`-th region of the time successor
/// chain, as a grid point of step `1/n`.
fn settle(
    g: &RegionGraph,
    values: &mut [Rational],
    delays: &mut usize,
    pending: &mut Rational,
    target: usize,
    n: i64,
) -> Option<()> {
    if *delays == 0 {
        return Some(());
    }
    let d = chain_delays(values, &g.maxc, *delays).pick(n)?;
    for v in values.iter_mut() {
        *v += d;
    }
    *pending += d;
    *delays = 0;
    (region_of(values, &g.maxc) == g.vertices[target].region).then_some(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Model;
    use crate::parse::parse_model;

    fn ta(src: &str) -> TimedAutomaton {
        match parse_model(src).unwrap() {
            Model::Automaton(t) => t,
            Model::Game(g) => g.automaton,
        }
    }

    #[test]
    fn ring_violates_both() {
        let t = ta(crate::oracle::tests::RING);
        for l in 1..=3 {
            let spec = PrioritySpec::new(&t, vec![l]).unwrap();
            for obj in [Objective::Direct, Objective::Eventual] {
                let v = verify_product(&t, &spec, obj).unwrap();
                assert!(!v.holds);
                assert!(v.counterexample.is_some(), "lambda {l} {obj:?}");
            }
        }
    }

    #[test]
    fn trivial_models() {
        let even = ta("automaton M\nclock x\nloc l0 init prio [0]\n");
        let odd = ta("automaton M\nclock x\nloc l0 init prio [1]\n");
        for l in 1..=3 {
            let spec = PrioritySpec::new(&even, vec![l]).unwrap();
            assert!(verify_direct(&even, &spec).unwrap().holds);
            let spec = PrioritySpec::new(&odd, vec![l]).unwrap();
            let v = verify_direct(&odd, &spec).unwrap();
            assert!(!v.holds && v.counterexample.is_some());
        }
    }

    #[test]
    fn transient_violation_only_direct() {
        let t = ta("automaton M\nclock x\naction a\nloc l0 init prio [1] inv x <= 2\nloc l1 prio [0]\n\
                    edge l0 -> l1 on a when x >= 2 reset {}\n");
        let spec = PrioritySpec::new(&t, vec![1]).unwrap();
        assert!(!verify_direct(&t, &spec).unwrap().holds);
        assert!(verify_tw(&t, &spec).unwrap().holds);
    }

    #[test]
    fn per_dimension_matches_product() {
        let t = ta("automaton M\nclock x\naction a\nloc l0 init prio [1,0] inv x <= 2\nloc l1 prio [0,1]\n\
                    edge l0 -> l1 on a when x >= 1 reset {x}\nedge l1 -> l0 on a when x >= 1 reset {x}\n");
        for l in 1..=3 {
            let spec = PrioritySpec::new(&t, vec![l, l]).unwrap();
            for obj in [Objective::Direct, Objective::Eventual] {
                let a = verify_product(&t, &spec, obj).unwrap().holds;
                let b = verify_per_dimension(&t, &spec, obj, Exec::Sequential).unwrap().holds;
                assert_eq!(a, b);
            }
        }
    }
}
