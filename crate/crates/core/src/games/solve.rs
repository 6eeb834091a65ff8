//! Parity game solving. A play is won by player 1 iff the least priority
//! seen infinitely often is even.

use std::collections::HashMap;

use crate::model::Player;

/// A game graph: owner and priority per node, successor lists.
pub trait Game {
    fn len(&self) -> usize;
    fn owner(&self, v: usize) -> Player;
    fn priority(&self, v: usize) -> u8;
    fn succ(&self, v: usize) -> &[usize];
}

impl Game for super::arena::Arena {
    fn len(&self) -> usize {
        self.kinds.len()
    }
    fn owner(&self, v: usize) -> Player {
        self.owner[v]
    }
    fn priority(&self, v: usize) -> u8 {
        self.priority[v]
    }
    fn succ(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }
}

/// Plain explicit game, used for tests.
#[derive(Debug, Clone)]
pub struct Explicit {
    pub owner: Vec<Player>,
    pub priority: Vec<u8>,
    pub succ: Vec<Vec<usize>>,
}

impl Game for Explicit {
    fn len(&self) -> usize {
        self.owner.len()
    }
    fn owner(&self, v: usize) -> Player {
        self.owner[v]
    }
    fn priority(&self, v: usize) -> u8 {
        self.priority[v]
    }
    fn succ(&self, v: usize) -> &[usize] {
        &self.succ[v]
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// `true` for nodes won by player 1.
    pub win1: Vec<bool>,
    /// Positional strategy of player 1 on its winning nodes.
    pub strategy1: HashMap<usize, usize>,
    /// Positional strategy of player 2 on its winning nodes.
    pub strategy2: HashMap<usize, usize>,
}

fn parity_player(p: u8) -> Player {
    if p % 2 == 0 {
        Player::One
    } else {
        Player::Two
    }
}

struct Ctx<'a, G: Game> {
    g: &'a G,
    pred: Vec<Vec<usize>>,
}

impl<G: Game> Ctx<'_, G> {
    /// Attractor of `target` for `p` inside `sub`, with the attracting moves.
    fn attractor(&self, sub: &[bool], target: &[usize], p: Player) -> (Vec<bool>, HashMap<usize, usize>) {
        let n = self.g.len();
        let mut inside = vec![false; n];
        let mut strat = HashMap::new();
        let mut count: Vec<usize> = (0..n)
            .map(|v| {
                if sub[v] {
                    self.g.succ(v).iter().filter(|&&w| sub[w]).count()
                } else {
                    0
                }
            })
            .collect();
        let mut stack: Vec<usize> = Vec::new();
        for &t in target {
            if !inside[t] {
                inside[t] = true;
                stack.push(t);
            }
        }
        while let Some(w) = stack.pop() {
            for &v in &self.pred[w] {
                if !sub[v] || inside[v] {
                    continue;
                }
                if self.g.owner(v) == p {
                    inside[v] = true;
                    strat.insert(v, w);
                    stack.push(v);
                } else {
                    count[v] -= 1;
                    if count[v] == 0 {
                        inside[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        (inside, strat)
    }

    /// Returns (nodes won by player 1, strategies of both players).
    fn zielonka(&self, sub: &[bool]) -> (Vec<bool>, [HashMap<usize, usize>; 2]) {
        let n = self.g.len();
        let nodes: Vec<usize> = (0..n).filter(|&v| sub[v]).collect();
        if nodes.is_empty() {
            return (vec![false; n], [HashMap::new(), HashMap::new()]);
        }
        let p = nodes.iter().map(|&v| self.g.priority(v)).min().unwrap();
        let alpha = parity_player(p);
        let ai = idx(alpha);
        let top: Vec<usize> = nodes.iter().copied().filter(|&v| self.g.priority(v) == p).collect();
        let (a, astrat) = self.attractor(sub, &top, alpha);
        let rest: Vec<bool> = (0..n).map(|v| sub[v] && !a[v]).collect();
        let (w1, mut s) = self.zielonka(&rest);
        let opp_won = |v: usize, w1: &[bool]| rest[v] && (w1[v] != (alpha == Player::One));
        if !nodes.iter().any(|&v| opp_won(v, &w1)) {
            // alpha wins everything
            let mut strat = std::mem::take(&mut s[ai]);
            strat.extend(astrat);
            for &v in &top {
                if self.g.owner(v) == alpha {
                    let w = *self.g.succ(v).iter().find(|&&w| sub[w]).expect("subgame is total");
                    strat.insert(v, w);
                }
            }
            let win1 = (0..n).map(|v| sub[v] && alpha == Player::One).collect();
            let mut out = [HashMap::new(), HashMap::new()];
            out[ai] = strat;
            return (win1, out);
        }
        let opp = alpha.opponent();
        let oi = idx(opp);
        let w_opp: Vec<usize> = nodes.iter().copied().filter(|&v| opp_won(v, &w1)).collect();
        let (b, bstrat) = self.attractor(sub, &w_opp, opp);
        let rest2: Vec<bool> = (0..n).map(|v| sub[v] && !b[v]).collect();
        let (w1b, mut s2) = self.zielonka(&rest2);
        let mut opp_strat = std::mem::take(&mut s2[oi]);
        for &v in &w_opp {
            if let Some(&w) = s[oi].get(&v) {
                opp_strat.insert(v, w);
            }
        }
        for (v, w) in bstrat {
            opp_strat.entry(v).or_insert(w);
        }
        let win1: Vec<bool> = (0..n)
            .map(|v| {
                if rest2[v] {
                    w1b[v]
                } else {
                    b[v] && opp == Player::One
                }
            })
            .collect();
        let mut out = [HashMap::new(), HashMap::new()];
        out[ai] = std::mem::take(&mut s2[ai]);
        out[oi] = opp_strat;
        (win1, out)
    }
}

fn idx(p: Player) -> usize {
    match p {
        Player::One => 0,
        Player::Two => 1,
    }
}

fn predecessors<G: Game>(g: &G) -> Vec<Vec<usize>> {
    let mut pred = vec![Vec::new(); g.len()];
    for v in 0..g.len() {
        for &w in g.succ(v) {
            pred[w].push(v);
        }
    }
    pred
}

/// Recursive attractor-based solver with positional strategies.
pub fn zielonka<G: Game>(g: &G) -> Solution {
    let ctx = Ctx {
        g,
        pred: predecessors(g),
    };
    let all = vec![true; g.len()];
    let (win1, [s1, s2]) = ctx.zielonka(&all);
    let strategy1 = s1.into_iter().filter(|(v, _)| win1[*v] && g.owner(*v) == Player::One).collect();
    let strategy2 = s2.into_iter().filter(|(v, _)| !win1[*v] && g.owner(*v) == Player::Two).collect();
    Solution {
        win1,
        strategy1,
        strategy2,
    }
}

/// Winning set of player 1 for priorities `1..=4` by the nested fixpoint
/// `mu Z1. nu Z2. mu Z3. nu Z4.` over the controllable predecessor.
pub fn fixpoint_1to4<G: Game>(g: &G) -> Vec<bool> {
    let n = g.len();
    assert!((0..n).all(|v| (1..=4).contains(&g.priority(v))));
    let cpre = |z: &[bool], v: usize| -> bool {
        let mut it = g.succ(v).iter();
        match g.owner(v) {
            Player::One => it.any(|&w| z[w]),
            Player::Two => it.all(|&w| z[w]),
        }
    };
    let step = |zs: &[Vec<bool>; 4]| -> Vec<bool> {
        (0..n)
            .map(|v| cpre(&zs[g.priority(v) as usize - 1], v))
            .collect()
    };
    let mut zs: [Vec<bool>; 4] = [vec![false; n], vec![true; n], vec![false; n], vec![true; n]];
    fn level(l: usize, zs: &mut [Vec<bool>; 4], n: usize, step: &dyn Fn(&[Vec<bool>; 4]) -> Vec<bool>) -> Vec<bool> {
        zs[l] = vec![l % 2 == 1; n];
        loop {
            let next = if l == 3 {
                step(zs)
            } else {
                level(l + 1, zs, n, step)
            };
            if next == zs[l] {
                return next;
            }
            zs[l] = next;
        }
    }
    level(0, &mut zs, n, &step)
}

/// Checks that following `strategy` from its domain never leaves `win`
/// and that every reachable node has a successor.
pub fn strategy_is_closed<G: Game>(g: &G, win: &[bool], strategy: &HashMap<usize, usize>) -> bool {
    (0..g.len()).filter(|&v| win[v]).all(|v| match g.owner(v) {
        Player::One => strategy.get(&v).is_some_and(|w| win[*w] && g.succ(v).contains(w)),
        Player::Two => g.succ(v).iter().all(|&w| win[w]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_game(seed: u64, n: usize) -> Explicit {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let owner = (0..n)
            .map(|_| if rng.gen_bool(0.5) { Player::One } else { Player::Two })
            .collect();
        let priority = (0..n).map(|_| rng.gen_range(1..=4)).collect();
        let succ = (0..n)
            .map(|_| {
                let k = rng.gen_range(1..=3);
                let mut s: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        Explicit { owner, priority, succ }
    }

    #[test]
    fn all_even_wins() {
        let g = Explicit {
            owner: vec![Player::Two, Player::One],
            priority: vec![2, 4],
            succ: vec![vec![1], vec![0]],
        };
        assert!(zielonka(&g).win1.iter().all(|&b| b));
    }

    #[test]
    fn odd_cycle_loses() {
        let g = Explicit {
            owner: vec![Player::Two, Player::One],
            priority: vec![1, 2],
            succ: vec![vec![0, 1], vec![1]],
        };
        let s = zielonka(&g);
        assert!(!s.win1[0]);
        assert!(s.win1[1]);
    }

    #[test]
    fn random_games_agree_with_fixpoint() {
        for seed in 0..60 {
            let g = random_game(seed, 200);
            let s = zielonka(&g);
            assert_eq!(s.win1, fixpoint_1to4(&g), "seed {seed}");
            assert!(strategy_is_closed(&g, &s.win1, &s.strategy1));
            // restricting player 1 to its strategy keeps the winning set
            let mut r = g.clone();
            for (&v, &w) in &s.strategy1 {
                r.succ[v] = vec![w];
            }
            let fw = fixpoint_1to4(&r);
            assert!((0..g.len()).all(|v| !s.win1[v] || fw[v]), "seed {seed}");
        }
    }
}
