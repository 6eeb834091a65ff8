//! Clock regions, region graphs and the strongly non-Zeno product.

use std::collections::{HashMap, VecDeque};
use std::fmt::{self, Write as _};

use num::{Integer, Zero};

use crate::model::{ClockConstraint, ClockId, LocId, Rational, Relation, TimedAutomaton};

const ABOVE: u16 = u16::MAX;

/// A clock region: per clock an integer part (or "above its maximal
/// constant") and the rank of its fractional part among all clocks that are
/// not above. Rank 0 means a zero fractional part; nonzero fractions get
/// dense ranks `1..`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Region {
    ints: Vec<u16>,
    ranks: Vec<u8>,
}

impl Region {
    pub fn zero(clocks: usize) -> Self {
        Region {
            ints: vec![0; clocks],
            ranks: vec![0; clocks],
        }
    }

    pub fn clocks(&self) -> usize {
        self.ints.len()
    }

    pub fn is_above(&self, c: usize) -> bool {
        self.ints[c] == ABOVE
    }

    /// Integer part, `None` when above the maximal constant.
    pub fn int(&self, c: usize) -> Option<u32> {
        (!self.is_above(c)).then_some(self.ints[c] as u32)
    }

    pub fn frac_is_zero(&self, c: usize) -> bool {
        !self.is_above(c) && self.ranks[c] == 0
    }

    pub fn rank(&self, c: usize) -> u8 {
        self.ranks[c]
    }

    /// Some clock sits exactly on an integer, so any positive delay leaves.
    pub fn is_point(&self) -> bool {
        (0..self.clocks()).any(|c| self.frac_is_zero(c))
    }

    pub fn is_time_closed(&self) -> bool {
        self.ints.iter().all(|&i| i == ABOVE)
    }

    fn normalized(mut ints: Vec<u16>, mut ranks: Vec<u8>) -> Self {
        let mut used: Vec<u8> = ints
            .iter()
            .zip(&ranks)
            .filter(|(&i, &r)| i != ABOVE && r != 0)
            .map(|(_, &r)| r)
            .collect();
        used.sort_unstable();
        used.dedup();
        for (i, r) in ints.iter_mut().zip(ranks.iter_mut()) {
            if *i == ABOVE {
                *r = 0;
            } else if *r != 0 {
                *r = used.binary_search(r).unwrap() as u8 + 1;
            }
        }
        ints.shrink_to_fit();
        Region { ints, ranks }
    }

    /// Immediate time successor, `None` if time cannot leave this region.
    pub fn time_successor(&self, maxc: &[u32]) -> Option<Region> {
        if self.is_time_closed() {
            return None;
        }
        let n = self.clocks();
        let mut ints = self.ints.clone();
        let mut ranks = self.ranks.clone();
        if self.is_point() {
            for c in 0..n {
                if ints[c] == ABOVE {
                    continue;
                }
                if ranks[c] == 0 {
                    if ints[c] as u32 >= maxc[c] {
                        ints[c] = ABOVE;
                    } else {
                        ranks[c] = 1;
                    }
                } else {
                    ranks[c] += 1;
                }
            }
        } else {
            let top = (0..n)
                .filter(|&c| ints[c] != ABOVE)
                .map(|c| ranks[c])
                .max()
                .unwrap_or(0);
            for c in 0..n {
                if ints[c] != ABOVE && ranks[c] == top {
                    ints[c] += 1;
                    ranks[c] = 0;
                }
            }
        }
        Some(Region::normalized(ints, ranks))
    }

    pub fn reset(&self, clocks: &[ClockId]) -> Region {
        if clocks.is_empty() {
            return self.clone();
        }
        let mut ints = self.ints.clone();
        let mut ranks = self.ranks.clone();
        for c in clocks {
            ints[c.0] = 0;
            ranks[c.0] = 0;
        }
        Region::normalized(ints, ranks)
    }

    pub fn satisfies(&self, g: &ClockConstraint) -> bool {
        g.atoms.iter().all(|a| {
            let c = a.clock.0;
            let b = a.bound as i64;
            if self.is_above(c) {
                // strictly above a constant that is at least `b`
                return matches!(a.rel, Relation::Gt | Relation::Ge);
            }
            let i = self.ints[c] as i64;
            if self.ranks[c] == 0 {
                a.rel.holds(&i, &b)
            } else {
                match a.rel {
                    Relation::Lt | Relation::Le => i < b,
                    Relation::Gt | Relation::Ge => i >= b,
                }
            }
        })
    }

    /// Whether the valuations of the region all map clock `c` to zero.
    pub fn is_zero(&self, c: usize) -> bool {
        self.ints[c] == 0 && self.ranks[c] == 0
    }

    pub fn display<'a>(&'a self, names: &'a [String], maxc: &'a [u32]) -> RegionDisplay<'a> {
        RegionDisplay {
            region: self,
            names,
            maxc,
        }
    }

    /// Copy without the clocks at positions `>= n`.
    pub fn truncated(&self, n: usize) -> Region {
        Region::normalized(self.ints[..n].to_vec(), self.ranks[..n].to_vec())
    }
}

pub struct RegionDisplay<'a> {
    region: &'a Region,
    names: &'a [String],
    maxc: &'a [u32],
}

impl fmt::Display for RegionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.region;
        let mut parts = Vec::new();
        for c in 0..r.clocks() {
            let n = &self.names[c];
            parts.push(match r.int(c) {
                None => format!("{n}>{}", self.maxc[c]),
                Some(i) if r.ranks[c] == 0 => format!("{n}={i}"),
                Some(i) => format!("{i}<{n}<{}", i + 1),
            });
        }
        write!(f, "{}", parts.join(" "))?;
        let max_rank = r.ranks.iter().copied().max().unwrap_or(0);
        if max_rank > 1 || (max_rank == 1 && r.ranks.iter().filter(|&&x| x == 1).count() > 1) {
            let mut groups = Vec::new();
            for k in 1..=max_rank {
                let names: Vec<&str> = (0..r.clocks())
                    .filter(|&c| !r.is_above(c) && r.ranks[c] == k)
                    .map(|c| self.names[c].as_str())
                    .collect();
                groups.push(names.join("="));
            }
            write!(f, " | {}", groups.join("<"))?;
        }
        Ok(())
    }
}

/// Region of a valuation.
pub fn region_of(values: &[Rational], maxc: &[u32]) -> Region {
    let n = values.len();
    let mut ints = vec![0u16; n];
    let mut fracs: Vec<Option<Rational>> = vec![None; n];
    for c in 0..n {
        let v = values[c];
        if v > Rational::from_integer(maxc[c] as i64) {
            ints[c] = ABOVE;
        } else {
            let fl = v.floor();
            ints[c] = *fl.numer() as u16;
            fracs[c] = Some(v - fl);
        }
    }
    let mut distinct: Vec<Rational> = fracs
        .iter()
        .flatten()
        .filter(|f| !f.is_zero())
        .copied()
        .collect();
    distinct.sort();
    distinct.dedup();
    let ranks = fracs
        .iter()
        .map(|f| match f {
            Some(f) if !f.is_zero() => distinct.binary_search(f).unwrap() as u8 + 1,
            _ => 0,
        })
        .collect();
    Region { ints, ranks }
}

/// Regions visited by letting time pass from `r` while `inv` holds,
/// starting with `r` itself.
pub fn delay_chain(r: &Region, inv: &ClockConstraint, maxc: &[u32]) -> Vec<Region> {
    let mut out = vec![r.clone()];
    let mut cur = r.clone();
    while let Some(next) = cur.time_successor(maxc) {
        if !next.satisfies(inv) {
            break;
        }
        out.push(next.clone());
        cur = next;
    }
    out
}

/// Times at which some clock that is not above its constant hits an integer
/// no larger than that constant, sorted and without duplicates.
pub fn event_times(values: &[Rational], maxc: &[u32]) -> Vec<Rational> {
    let mut out = Vec::new();
    for (v, &c) in values.iter().zip(maxc) {
        let c = Rational::from_integer(c as i64);
        if *v > c {
            continue;
        }
        let mut k = v.floor() + Rational::from_integer(1);
        while k <= c {
            out.push(k - v);
            k += Rational::from_integer(1);
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Set of delays leading from a valuation into one region of its chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DelaySet {
    Point(Rational),
    /// `lo` (inclusive iff `lo_closed`) up to `hi` exclusive, unbounded if `None`.
    Range {
        lo: Rational,
        lo_closed: bool,
        hi: Option<Rational>,
    },
}

impl DelaySet {
    pub fn contains(&self, d: &Rational) -> bool {
        match self {
            DelaySet::Point(p) => p == d,
            DelaySet::Range { lo, lo_closed, hi } => {
                (if *lo_closed { d >= lo } else { d > lo }) && hi.map_or(true, |h| *d < h)
            }
        }
    }

    /// The smallest delay of the set on the grid of step `1/n`.
    pub fn pick_first(&self, n: i64) -> Option<Rational> {
        match self {
            DelaySet::Point(p) => ((p * n).is_integer()).then_some(*p),
            DelaySet::Range { lo, .. } => {
                let c = (lo * n).floor() / n;
                let c = if self.contains(&c) { c } else { c + Rational::new(1, n) };
                self.contains(&c).then_some(c)
            }
        }
    }

    /// A delay on the grid of step `1/n`, preferring the middle of bounded
    /// ranges and the smallest candidate of unbounded ones.
    pub fn pick(&self, n: i64) -> Option<Rational> {
        match self {
            DelaySet::Point(p) => Some(*p),
            DelaySet::Range { lo, hi, .. } => {
                let step = Rational::new(1, n);
                let first = {
                    let k = (lo * n).floor();
                    let c = k / n;
                    if self.contains(&c) {
                        c
                    } else {
                        c + step
                    }
                };
                match hi {
                    None => Some(first),
                    Some(h) => {
                        if !self.contains(&first) {
                            return None;
                        }
                        let last = {
                            let k = (h * n).ceil() - Rational::from_integer(1);
                            k / n
                        };
                        let mid = (lo + h) / Rational::from_integer(2);
                        let k = (mid * n).round() / n;
                        let k = k.max(first).min(last);
                        self.contains(&k).then_some(k)
                    }
                }
            }
        }
    }

    /// Some delay in the set, exactly in the middle when bounded.
    pub fn midpoint(&self) -> Rational {
        match self {
            DelaySet::Point(p) => *p,
            DelaySet::Range { lo, hi: Some(h), .. } => (lo + h) / Rational::from_integer(2),
            DelaySet::Range { lo, hi: None, .. } => lo + Rational::from_integer(1),
        }
    }
}

/// Delays from `values` that land in the `i`-th region of its time
/// successor chain (position 0 is the region of `values`).
pub fn chain_delays(values: &[Rational], maxc: &[u32], i: usize) -> DelaySet {
    let events = event_times(values, maxc);
    let start = region_of(values, maxc);
    let zero = Rational::zero();
    let ev = |m: usize| if m == 0 { zero } else { events[m - 1] };
    let open = |m: usize| DelaySet::Range {
        lo: ev(m),
        lo_closed: false,
        hi: events.get(m).copied(),
    };
    if start.is_point() {
        if i % 2 == 0 {
            DelaySet::Point(ev(i / 2))
        } else {
            open(i / 2)
        }
    } else if i == 0 {
        DelaySet::Range {
            lo: zero,
            lo_closed: true,
            hi: events.first().copied(),
        }
    } else if i % 2 == 1 {
        DelaySet::Point(ev(i.div_ceil(2)))
    } else {
        open(i / 2)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Vertex {
    pub loc: LocId,
    pub region: Region,
    /// Monitor bit of the strongly non-Zeno product, always false otherwise.
    pub monitor: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Delay,
    /// Index into the automaton's edge list.
    Action(usize),
    Tick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphEdge {
    pub target: usize,
    pub label: Label,
    pub marked: bool,
}

#[derive(Debug, Clone)]
pub struct RegionGraph {
    pub vertices: Vec<Vertex>,
    pub succ: Vec<Vec<GraphEdge>>,
    pub initial: usize,
    pub clock_names: Vec<String>,
    pub maxc: Vec<u32>,
    /// The extra unit clock of the product, if any.
    pub theta: Option<usize>,
}

impl RegionGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn predecessors(&self) -> Vec<Vec<usize>> {
        let mut pred = vec![Vec::new(); self.len()];
        for (v, es) in self.succ.iter().enumerate() {
            for e in es {
                pred[e.target].push(v);
            }
        }
        pred
    }

    pub fn to_dot(&self, ta: &TimedAutomaton) -> String {
        let mut out = String::from("digraph regions {\n  node [shape=box];\n");
        for (i, v) in self.vertices.iter().enumerate() {
            let mut label = format!(
                "{} {}",
                ta.locations[v.loc.0].name,
                v.region.display(&self.clock_names, &self.maxc)
            );
            if v.monitor {
                label.push_str(" m");
            }
            let style = if i == self.initial { ", penwidth=2" } else { "" };
            writeln!(out, "  v{i} [label=\"{}\"{style}];", label.replace('"', "'")).unwrap();
        }
        for (i, es) in self.succ.iter().enumerate() {
            for e in es {
                let label = match e.label {
                    Label::Delay => "delay".to_string(),
                    Label::Action(k) => ta.actions[ta.edges[k].action.0].clone(),
                    Label::Tick => "tick".to_string(),
                };
                let style = if e.marked { ", style=dashed" } else { "" };
                writeln!(out, "  v{i} -> v{} [label=\"{label}\"{style}];", e.target).unwrap();
            }
        }
        out.push_str("}\n");
        out
    }

    /// Upper bound on the number of regions of a location set.
    pub fn region_bound(locations: usize, maxc: &[u32]) -> f64 {
        let n = maxc.len();
        let fact: f64 = (1..=n).map(|i| i as f64).product();
        let prod: f64 = maxc.iter().map(|&c| (2 * c + 1) as f64).product();
        locations as f64 * fact * 2f64.powi(n as i32) * prod
    }
}

struct Builder<'a> {
    ta: &'a TimedAutomaton,
    maxc: Vec<u32>,
    index: HashMap<Vertex, usize>,
    vertices: Vec<Vertex>,
    queue: VecDeque<usize>,
}

impl Builder<'_> {
    fn intern(&mut self, v: Vertex) -> usize {
        if let Some(&i) = self.index.get(&v) {
            return i;
        }
        let i = self.vertices.len();
        self.index.insert(v.clone(), i);
        self.vertices.push(v);
        self.queue.push_back(i);
        i
    }
}

/// Reachable region graph with immediate-successor delay edges.
pub fn build_region_graph(ta: &TimedAutomaton) -> RegionGraph {
    explore(ta, None)
}

/// Region graph of the product with a unit clock and a monitor bit. A
/// marked `Tick` edge fires when the monitor is set and at least one time
/// unit has passed since the previous tick; the monitor is set by every
/// transition leaving an accepting location. The marked graph has a
/// reachable marked cycle iff `ta` has a time-divergent run visiting
/// `accepting` infinitely often.
pub fn snz_transform(ta: &TimedAutomaton, accepting: &[bool]) -> RegionGraph {
    explore(ta, Some(accepting))
}

fn explore(ta: &TimedAutomaton, accepting: Option<&[bool]>) -> RegionGraph {
    let n = ta.clocks.len();
    let mut maxc = ta.max_constants();
    let mut names = ta.clocks.clone();
    let theta = accepting.map(|_| {
        maxc.push(1);
        names.push("__theta".to_string());
        n
    });
    let mut b = Builder {
        ta,
        maxc: maxc.clone(),
        index: HashMap::new(),
        vertices: Vec::new(),
        queue: VecDeque::new(),
    };
    let total = n + theta.map_or(0, |_| 1);
    let init = b.intern(Vertex {
        loc: ta.initial,
        region: Region::zero(total),
        monitor: false,
    });
    let mut succ: Vec<Vec<GraphEdge>> = Vec::new();
    while let Some(i) = b.queue.pop_front() {
        let v = b.vertices[i].clone();
        let loc = b.ta.loc(v.loc);
        let acc = accepting.is_some_and(|a| a[v.loc.0]);
        let m = v.monitor || acc;
        let mut out = Vec::new();
        // delay
        match v.region.time_successor(&b.maxc) {
            Some(r) if r.satisfies(&loc.invariant) => {
                let t = b.intern(Vertex {
                    loc: v.loc,
                    region: r,
                    monitor: m,
                });
                out.push(GraphEdge {
                    target: t,
                    label: Label::Delay,
                    marked: false,
                });
            }
            Some(_) => {}
            None => {
                let t = b.intern(Vertex {
                    loc: v.loc,
                    region: v.region.clone(),
                    monitor: m,
                });
                out.push(GraphEdge {
                    target: t,
                    label: Label::Delay,
                    marked: false,
                });
            }
        }
        for (k, e) in b.ta.edges.iter().enumerate() {
            if e.source != v.loc || !v.region.satisfies(&e.guard) {
                continue;
            }
            let r = v.region.reset(&e.resets);
            if !r.satisfies(&b.ta.loc(e.target).invariant) {
                continue;
            }
            let t = b.intern(Vertex {
                loc: e.target,
                region: r,
                monitor: m,
            });
            out.push(GraphEdge {
                target: t,
                label: Label::Action(k),
                marked: false,
            });
        }
        if let Some(th) = theta {
            let ge1 = v.region.is_above(th) || v.region.int(th).is_some_and(|x| x >= 1);
            if v.monitor && ge1 {
                let t = b.intern(Vertex {
                    loc: v.loc,
                    region: v.region.reset(&[ClockId(th)]),
                    monitor: false,
                });
                out.push(GraphEdge {
                    target: t,
                    label: Label::Tick,
                    marked: true,
                });
            }
        }
        if succ.len() <= i {
            succ.resize(i + 1, Vec::new());
        }
        succ[i] = out;
    }
    succ.resize(b.vertices.len(), Vec::new());
    RegionGraph {
        vertices: b.vertices,
        succ,
        initial: init,
        clock_names: names,
        maxc,
        theta,
    }
}

/// Strongly connected components (iterative Tarjan); returns the component
/// index of every vertex.
pub fn scc(n: usize, succ: impl Fn(usize) -> Vec<usize>) -> Vec<usize> {
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![usize::MAX; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut ncomp = 0;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, Vec<usize>, usize)> = vec![(root, succ(root), 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some((v, ws, pos)) = call.last_mut() {
            let v = *v;
            if *pos < ws.len() {
                let w = ws[*pos];
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    let next = succ(w);
                    call.push((w, next, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some((u, _, _)) = call.last() {
                    low[*u] = low[*u].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = ncomp;
                        if w == v {
                            break;
                        }
                    }
                    ncomp += 1;
                }
            }
        }
    }
    comp
}

/// Vertices lying on a cycle that uses a marked edge.
pub fn on_marked_cycle(g: &RegionGraph) -> Vec<bool> {
    let comp = scc(g.len(), |v| g.succ[v].iter().map(|e| e.target).collect());
    let mut good = vec![false; g.len()];
    let mut marked_comp = HashMap::new();
    for (v, es) in g.succ.iter().enumerate() {
        for e in es {
            if e.marked && comp[e.target] == comp[v] {
                marked_comp.insert(comp[v], true);
            }
        }
    }
    for v in 0..g.len() {
        good[v] = marked_comp.contains_key(&comp[v]);
    }
    good
}

/// Vertices from which some vertex in `targets` is reachable.
pub fn can_reach(g: &RegionGraph, targets: &[bool]) -> Vec<bool> {
    let pred = g.predecessors();
    let mut seen = targets.to_vec();
    let mut queue: VecDeque<usize> = (0..g.len()).filter(|&v| targets[v]).collect();
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

/// Breadth-first path of edges from `from` to the first vertex satisfying
/// `goal`, using only vertices allowed by `allowed`.
pub fn shortest_path(
    g: &RegionGraph,
    from: usize,
    goal: impl Fn(usize) -> bool,
    allowed: impl Fn(usize) -> bool,
) -> Option<Vec<(usize, GraphEdge)>> {
    if goal(from) {
        return Some(Vec::new());
    }
    let mut parent: HashMap<usize, (usize, GraphEdge)> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = vec![false; g.len()];
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        for e in &g.succ[v] {
            if seen[e.target] || !allowed(e.target) {
                continue;
            }
            seen[e.target] = true;
            parent.insert(e.target, (v, *e));
            if goal(e.target) {
                let mut path = Vec::new();
                let mut cur = e.target;
                while cur != from {
                    let (p, pe) = parent[&cur];
                    path.push((p, pe));
                    cur = p;
                }
                path.reverse();
                return Some(path);
            }
            queue.push_back(e.target);
        }
    }
    None
}

/// Greatest common grid step of a set of rationals, as a denominator.
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> i64 {
    values.into_iter().fold(1i64, |acc, v| acc.lcm(v.denom()))
}
