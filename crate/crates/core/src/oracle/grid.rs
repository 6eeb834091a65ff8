//! Discretized runs: every delay is a multiple of `1/n`. Clock values are
//! stored in units of `1/n` and clamped one unit above `c * n`, since all
//! values above the maximal constant `c` satisfy the same constraints.
//!
//! Lassos found here are genuine runs of the automaton, so a window
//! violation found on the grid is a real one. The searches below are exact
//! on the grid; the grid is fine enough for the models we test against the
//! region-based algorithms.

use std::collections::{HashMap, VecDeque};

use rand::Rng;

use crate::error::OracleError;
use crate::model::{ActionId, Move, PrioritySpec, Rational, State, TimedAutomaton};
use crate::regions::scc;

use super::LassoPlay;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key {
    pub loc: usize,
    pub vals: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridLabel {
    /// A delay of `1/n`.
    Unit,
    Action(ActionId),
}

#[derive(Debug, Clone)]
pub struct GridGraph {
    pub n: i64,
    pub keys: Vec<Key>,
    pub succ: Vec<Vec<(usize, GridLabel)>>,
    pub maxc: Vec<u32>,
}

/// Grid resolution used when none is given: twice the number of clocks
/// plus one window clock plus one.
pub fn default_denominator(ta: &TimedAutomaton) -> i64 {
    2 * (ta.clocks.len() as i64 + 2)
}

fn satisfies(g: &crate::model::ClockConstraint, vals: &[u32], n: i64) -> bool {
    g.atoms.iter().all(|a| a.rel.holds(&(vals[a.clock.0] as i64), &(a.bound as i64 * n)))
}

impl GridGraph {
    pub fn build(ta: &TimedAutomaton, n: i64) -> GridGraph {
        Self::build_limited(ta, n, usize::MAX).expect("unbounded build")
    }

    /// Reachable grid graph, or `None` if it has more than `limit` keys.
    pub fn build_limited(ta: &TimedAutomaton, n: i64, limit: usize) -> Option<GridGraph> {
        let maxc = ta.max_constants();
        let caps: Vec<u32> = maxc.iter().map(|&c| c * n as u32 + 1).collect();
        let init = Key {
            loc: ta.initial.0,
            vals: vec![0; ta.clocks.len()],
        };
        let mut index = HashMap::from([(init.clone(), 0usize)]);
        let mut keys = vec![init];
        let mut succ: Vec<Vec<(usize, GridLabel)>> = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let k = keys[i].clone();
            let loc = &ta.locations[k.loc];
            let mut out = Vec::new();
            let mut push = |key: Key, label: GridLabel, keys: &mut Vec<Key>, queue: &mut VecDeque<usize>| {
                let j = *index.entry(key.clone()).or_insert_with(|| {
                    keys.push(key);
                    queue.push_back(keys.len() - 1);
                    keys.len() - 1
                });
                out.push((j, label));
            };
            let delayed: Vec<u32> = k.vals.iter().zip(&caps).map(|(&v, &c)| (v + 1).min(c)).collect();
            if satisfies(&loc.invariant, &delayed, n) {
                push(
                    Key {
                        loc: k.loc,
                        vals: delayed,
                    },
                    GridLabel::Unit,
                    &mut keys,
                    &mut queue,
                );
            }
            for e in ta.edges.iter().filter(|e| e.source.0 == k.loc) {
                if !satisfies(&e.guard, &k.vals, n) {
                    continue;
                }
                let mut vals = k.vals.clone();
                for c in &e.resets {
                    vals[c.0] = 0;
                }
                if !satisfies(&ta.loc(e.target).invariant, &vals, n) {
                    continue;
                }
                push(
                    Key {
                        loc: e.target.0,
                        vals,
                    },
                    GridLabel::Action(e.action),
                    &mut keys,
                    &mut queue,
                );
            }
            if succ.len() <= i {
                succ.resize(i + 1, Vec::new());
            }
            succ[i] = out;
            if keys.len() > limit {
                return None;
            }
        }
        succ.resize(keys.len(), Vec::new());
        Some(GridGraph { n, keys, succ, maxc })
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    fn components(&self) -> Vec<usize> {
        scc(self.len(), |v| self.succ[v].iter().map(|e| e.0).collect())
    }

    /// Keys lying in a component with an internal delay edge, i.e. on a
    /// cycle of positive duration.
    pub fn on_positive_cycle(&self) -> Vec<bool> {
        let comp = self.components();
        let mut good = vec![false; comp.iter().copied().max().map_or(0, |m| m + 1)];
        for (v, es) in self.succ.iter().enumerate() {
            for &(w, l) in es {
                if l == GridLabel::Unit && comp[w] == comp[v] {
                    good[comp[v]] = true;
                }
            }
        }
        comp.iter().map(|&c| good[c]).collect()
    }

    /// Keys that can reach a positive cycle.
    pub fn divergent(&self) -> Vec<bool> {
        let target = self.on_positive_cycle();
        let mut pred = vec![Vec::new(); self.len()];
        for (v, es) in self.succ.iter().enumerate() {
            for &(w, _) in es {
                pred[w].push(v);
            }
        }
        let mut seen = target.clone();
        let mut queue: VecDeque<usize> = (0..self.len()).filter(|&v| target[v]).collect();
        while let Some(v) = queue.pop_front() {
            for &u in &pred[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen
    }

    /// Edge path from `from` to the first key satisfying `goal`.
    fn path(
        &self,
        from: usize,
        goal: impl Fn(usize) -> bool,
        allowed: impl Fn(usize) -> bool,
    ) -> Option<Vec<GridLabel>> {
        let mut parent: HashMap<usize, (usize, GridLabel)> = HashMap::new();
        let mut queue = VecDeque::from([from]);
        let mut seen = vec![false; self.len()];
        seen[from] = true;
        let mut found = goal(from).then_some(from);
        while found.is_none() {
            let v = queue.pop_front()?;
            for &(w, l) in &self.succ[v] {
                if seen[w] || !allowed(w) {
                    continue;
                }
                seen[w] = true;
                parent.insert(w, (v, l));
                if goal(w) {
                    found = Some(w);
                    break;
                }
                queue.push_back(w);
            }
        }
        let mut cur = found?;
        let mut out = Vec::new();
        while cur != from {
            let (p, l) = parent[&cur];
            out.push(l);
            cur = p;
        }
        out.reverse();
        Some(out)
    }

    /// Positive-duration cycle through a key of `target` component, as a
    /// path from `from` into the cycle plus the cycle itself.
    fn divergent_tail(&self, from: usize) -> Option<(Vec<GridLabel>, Vec<GridLabel>)> {
        let comp = self.components();
        let pos = self.on_positive_cycle();
        // find an internal delay edge reachable from `from`
        let reach = self.reachable_from(from);
        let (a, b) = self.succ.iter().enumerate().find_map(|(v, es)| {
            if !reach[v] || !pos[v] {
                return None;
            }
            es.iter()
                .find(|&&(w, l)| l == GridLabel::Unit && comp[w] == comp[v])
                .map(|&(w, _)| (v, w))
        })?;
        let to_a = self.path(from, |v| v == a, |_| true)?;
        let c = comp[a];
        let back = self.path(b, |v| v == a, |v| comp[v] == c)?;
        let mut cycle = vec![GridLabel::Unit];
        cycle.extend(back);
        Some((to_a, cycle))
    }

    fn reachable_from(&self, from: usize) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.succ[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    fn moves(&self, labels: &[GridLabel]) -> Vec<Move> {
        let unit = Rational::new(1, self.n);
        labels
            .iter()
            .map(|l| match l {
                GridLabel::Unit => Move::delay(unit),
                GridLabel::Action(a) => Move::act(Rational::from_integer(0), *a),
            })
            .collect()
    }

    fn lasso(
        &self,
        ta: &TimedAutomaton,
        prefix: &[GridLabel],
        cycle: &[GridLabel],
    ) -> Result<LassoPlay, OracleError> {
        LassoPlay::from_moves(ta, &self.moves(prefix), &self.moves(cycle))
    }

    /// Concrete state of a key whose clocks are below their caps.
    pub fn state(&self, k: usize) -> State {
        let key = &self.keys[k];
        State {
            location: crate::model::LocId(key.loc),
            valuation: crate::model::ClockValuation {
                values: key.vals.iter().map(|&v| Rational::new(v as i64, self.n)).collect(),
                global: Rational::from_integer(0),
            },
        }
    }
}

struct WindowHit {
    start: usize,
    labels: Vec<GridLabel>,
    end: usize,
}

/// Breadth-first search over `(key, running odd minimum, elapsed units)`
/// from every key with odd priority in `starts`, following only edges for
/// which `allowed(source, target)`. Returns the first window that stays
/// odd for `lambda` time units and ends in a key accepted by `accept`.
fn bad_window(
    g: &GridGraph,
    prio: &[u32],
    lambda_units: u32,
    starts: &[bool],
    allowed: impl Fn(usize, usize) -> bool,
    accept: impl Fn(usize) -> bool,
) -> Option<WindowHit> {
    type Node = (usize, u32, u32);
    let mut parent: HashMap<Node, Option<(Node, GridLabel)>> = HashMap::new();
    let mut queue = VecDeque::new();
    for k in 0..g.len() {
        let p = prio[g.keys[k].loc];
        if starts[k] && p % 2 == 1 {
            let node = (k, p, 0);
            parent.insert(node, None);
            queue.push_back(node);
        }
    }
    let rebuild = |parent: &HashMap<Node, Option<(Node, GridLabel)>>, mut node: Node, last: GridLabel| {
        let mut labels = vec![last];
        while let Some(Some((p, l))) = parent.get(&node) {
            labels.push(*l);
            node = *p;
        }
        labels.reverse();
        (node.0, labels)
    };
    while let Some(node @ (k, m, e)) = queue.pop_front() {
        for &(w, l) in &g.succ[k] {
            if !allowed(k, w) {
                continue;
            }
            let next = match l {
                GridLabel::Unit => {
                    if e + 1 >= lambda_units {
                        if accept(w) {
                            let (start, labels) = rebuild(&parent, node, l);
                            return Some(WindowHit {
                                start,
                                labels,
                                end: w,
                            });
                        }
                        continue;
                    }
                    (w, m, e + 1)
                }
                GridLabel::Action(_) => {
                    let m2 = m.min(prio[g.keys[w].loc]);
                    if m2 % 2 == 0 {
                        continue;
                    }
                    (w, m2, e)
                }
            };
            if let std::collections::hash_map::Entry::Vacant(v) = parent.entry(next) {
                v.insert(Some((node, l)));
                queue.push_back(next);
            }
        }
    }
    None
}

fn dim_priorities(spec: &PrioritySpec, dim: usize) -> Vec<u32> {
    spec.priorities.iter().map(|p| p[dim]).collect()
}

/// A divergent lasso violating the direct objective in dimension `dim`, if
/// the grid has one.
pub fn dtw_violation(
    ta: &TimedAutomaton,
    g: &GridGraph,
    spec: &PrioritySpec,
    dim: usize,
) -> Result<Option<LassoPlay>, OracleError> {
    let prio = dim_priorities(spec, dim);
    let div = g.divergent();
    let all = vec![true; g.len()];
    let units = spec.lambda[dim] * g.n as u32;
    let Some(hit) = bad_window(g, &prio, units, &all, |_, _| true, |w| div[w]) else {
        return Ok(None);
    };
    let mut prefix = g.path(0, |v| v == hit.start, |_| true).expect("start is reachable");
    prefix.extend(hit.labels);
    let (to_cycle, cycle) = g.divergent_tail(hit.end).expect("end is divergent");
    prefix.extend(to_cycle);
    g.lasso(ta, &prefix, &cycle).map(Some)
}

/// A divergent lasso violating the non-direct objective in dimension
/// `dim`: a bad window inside one strongly connected component, closed
/// into a cycle within that component.
pub fn tw_violation(
    ta: &TimedAutomaton,
    g: &GridGraph,
    spec: &PrioritySpec,
    dim: usize,
) -> Result<Option<LassoPlay>, OracleError> {
    let prio = dim_priorities(spec, dim);
    let comp = scc(g.len(), |v| g.succ[v].iter().map(|e| e.0).collect());
    let all = vec![true; g.len()];
    let units = spec.lambda[dim] * g.n as u32;
    let Some(hit) = bad_window(g, &prio, units, &all, |a, b| comp[a] == comp[b], |_| true) else {
        return Ok(None);
    };
    let prefix = g.path(0, |v| v == hit.start, |_| true).expect("start is reachable");
    let c = comp[hit.start];
    let mut cycle = hit.labels;
    cycle.extend(g.path(hit.end, |v| v == hit.start, |v| comp[v] == c).expect("same component"));
    g.lasso(ta, &prefix, &cycle).map(Some)
}

/// Grid verdicts for both objectives over all dimensions, with witnesses.
pub struct GridVerdict {
    pub dtw: Option<LassoPlay>,
    pub tw: Option<LassoPlay>,
}

pub fn grid_verdict(ta: &TimedAutomaton, g: &GridGraph, spec: &PrioritySpec) -> Result<GridVerdict, OracleError> {
    let mut out = GridVerdict { dtw: None, tw: None };
    for dim in 0..spec.dimension() {
        if out.tw.is_none() {
            out.tw = tw_violation(ta, g, spec, dim)?;
        }
        if out.dtw.is_none() {
            out.dtw = dtw_violation(ta, g, spec, dim)?;
        }
    }
    // a non-direct violation is also a direct one
    if out.dtw.is_none() {
        out.dtw = out.tw.clone();
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    /// Maximal number of grid edges in prefix plus cycle.
    pub max_len: usize,
    pub max_count: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_len: 24,
            max_count: 2000,
        }
    }
}

/// Simple lassos of the grid graph in depth-first order: a simple path
/// from the initial key closed by an edge back onto the path, keeping only
/// cycles of positive duration. Deterministic for a given graph.
pub fn enumerate_lassos(
    ta: &TimedAutomaton,
    g: &GridGraph,
    limits: Limits,
) -> Result<Vec<LassoPlay>, OracleError> {
    let mut out = Vec::new();
    let mut path_keys = vec![0usize];
    let mut path_labels: Vec<GridLabel> = Vec::new();
    let mut on_path = vec![usize::MAX; g.len()];
    on_path[0] = 0;
    let mut stack: Vec<usize> = vec![0];
    while let Some(pos) = stack.last_mut() {
        let v = *path_keys.last().unwrap();
        if *pos >= g.succ[v].len() || out.len() >= limits.max_count {
            stack.pop();
            on_path[v] = usize::MAX;
            path_keys.pop();
            path_labels.pop();
            continue;
        }
        let (w, l) = g.succ[v][*pos];
        *pos += 1;
        if on_path[w] != usize::MAX {
            let at = on_path[w];
            let mut cycle = path_labels[at..].to_vec();
            cycle.push(l);
            if cycle.contains(&GridLabel::Unit) {
                out.push(g.lasso(ta, &path_labels[..at], &cycle)?);
            }
        } else if path_labels.len() + 1 < limits.max_len {
            on_path[w] = path_keys.len();
            path_keys.push(w);
            path_labels.push(l);
            stack.push(0);
        }
    }
    Ok(out)
}

/// A random divergent lasso: a random walk until a key repeats, retried
/// until the closing cycle has positive duration.
pub fn random_lasso<R: Rng>(
    ta: &TimedAutomaton,
    g: &GridGraph,
    rng: &mut R,
    max_len: usize,
) -> Result<Option<LassoPlay>, OracleError> {
    let div = g.divergent();
    if !div[0] {
        return Ok(None);
    }
    for _ in 0..200 {
        let mut seen = HashMap::from([(0usize, 0usize)]);
        let mut labels = Vec::new();
        let mut v = 0;
        while labels.len() < max_len {
            let opts: Vec<(usize, GridLabel)> =
                g.succ[v].iter().copied().filter(|&(w, _)| div[w]).collect();
            let (w, l) = opts[rng.gen_range(0..opts.len())];
            labels.push(l);
            if let Some(&at) = seen.get(&w) {
                if labels[at..].contains(&GridLabel::Unit) {
                    return g.lasso(ta, &labels[..at], &labels[at..]).map(Some);
                }
                break;
            }
            seen.insert(w, labels.len());
            v = w;
        }
    }
    Ok(None)
}
