//! Concrete plays of a region strategy against a pseudo-random opponent.
//!
//! Player 1 follows the strategy with a delay on a grid inside the chosen
//! region; player 2 picks one of the arena's resolutions of that move and a
//! grid delay realizing it. Choices depend only on the arena node and the
//! clock values (clamped above their maximal constants), so the play is
//! ultimately periodic and is returned as a lasso of the source game.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use num::Zero;

use super::arena::{NodeKind, Resolution};
use super::Realization;
use crate::error::OracleError;
use crate::model::{joint_step, p1_responsible, step, Move, Rational, State, TimedGame};
use crate::oracle::mapping::{project_move, project_state};
use crate::oracle::{check_dtw, check_tw, LassoPlay, Step, StepMove};
use crate::regions::{chain_delays, region_of, DelaySet};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// Time-divergent play and whether it satisfies the objective.
    Divergent { satisfied: bool },
    /// Time-convergent play and whether player 1 is blamed on its cycle.
    Convergent { blamed: bool },
}

impl Outcome {
    pub fn is_win(&self) -> bool {
        matches!(
            self,
            Outcome::Divergent { satisfied: true } | Outcome::Convergent { blamed: false }
        )
    }
}

#[derive(Debug, Clone)]
pub struct SimRun {
    /// The play projected onto the source game.
    pub play: LassoPlay,
    /// The same play in the expanded game.
    pub expanded: LassoPlay,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("no strategy to simulate")]
    NoStrategy,
    #[error("strategy undefined at arena node {0}")]
    Undefined(usize),
    #[error("concrete step left the arena at node {0}")]
    OffArena(usize),
    #[error("play did not close within {0} steps")]
    TooLong(usize),
    #[error("no grid delay realizes a move")]
    Grid,
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

const MAX_STEPS: usize = 20_000;

fn hash_of(seed: u64, v: usize, key: &[Rational], salt: u8) -> u64 {
    let mut h = DefaultHasher::new();
    (seed, v, key, salt).hash(&mut h);
    h.finish()
}

/// Grid delays of `set` (step `1/n`), at most `cap` of them.
fn grid_points(set: &DelaySet, n: i64, cap: usize) -> Vec<Rational> {
    let Some(first) = set.pick_first(n) else {
        return Vec::new();
    };
    let step = Rational::new(1, n);
    let mut out = Vec::new();
    let mut d = first;
    while out.len() < cap && set.contains(&d) {
        out.push(d);
        d += step;
    }
    out
}

struct Sim<'a> {
    r: &'a Realization,
    strategy: HashMap<usize, usize>,
    seed: u64,
}

/// Grid delays of `set`, refining the grid until one exists.
fn refine(set: &DelaySet, n: &mut i64, cap: usize) -> Result<Vec<Rational>, SimError> {
    loop {
        let pts = grid_points(set, *n, cap);
        if !pts.is_empty() {
            return Ok(pts);
        }
        if *n > MAX_GRID {
            return Err(SimError::Grid);
        }
        *n *= 2;
    }
}

const MAX_GRID: i64 = 1 << 40;

impl Sim<'_> {
    fn key(&self, s: &State, theta: Rational) -> Vec<Rational> {
        let maxc = &self.r.arena.maxc;
        s.valuation
            .values
            .iter()
            .chain(std::iter::once(&theta))
            .zip(maxc)
            .map(|(v, &c)| {
                let cap = Rational::from_integer(c as i64 + 1);
                if *v > cap {
                    cap
                } else {
                    *v
                }
            })
            .collect()
    }

    /// Plays until the (node, clamped values) pair repeats. Returns the
    /// steps of the expanded game and the index where the cycle starts.
    fn run(&self, mut n: i64) -> Result<(Vec<Step>, usize), SimError> {
        let arena = &self.r.arena;
        let gx = &self.r.game;
        let mut v = arena.initial;
        let mut s = gx.automaton.initial_state();
        let mut theta = Rational::zero();
        let mut seen: HashMap<(usize, Vec<Rational>), usize> = HashMap::new();
        let mut steps = Vec::new();
        loop {
            let key = self.key(&s, theta);
            if let Some(&start) = seen.get(&(v, key.clone())) {
                return Ok((steps, start));
            }
            if steps.len() >= MAX_STEPS {
                return Err(SimError::TooLong(MAX_STEPS));
            }
            seen.insert((v, key.clone()), steps.len());
            let &m = self.strategy.get(&v).ok_or(SimError::Undefined(v))?;
            let NodeKind::Move { choice, .. } = arena.kinds[m] else {
                unreachable!()
            };
            let mut values = s.valuation.values.clone();
            values.push(theta);
            let d1 = if choice.index == 0 {
                Rational::zero()
            } else {
                let set = chain_delays(&values, &arena.maxc, choice.index);
                loop {
                    if let Some(d) = set.pick(n) {
                        break d;
                    }
                    if n > MAX_GRID {
                        return Err(SimError::Grid);
                    }
                    n *= 2;
                }
            };
            let m1 = Move {
                delay: d1,
                action: choice.action,
            };
            let res = &arena.resolutions[&m];
            let pick = hash_of(self.seed, v, &key, 0) as usize % res.len();
            let resolution = res[pick];
            let target = arena.succ[m][pick];
            let (m2, p1_wins) = match resolution {
                Resolution::Happen => (Move::delay(d1), true),
                Resolution::Tie { action } => (Move { delay: d1, action }, false),
                Resolution::Preempt { index, action } => {
                    let set = chain_delays(&values, &arena.maxc, index);
                    let pts = refine(&set, &mut n, 4)?;
                    let d = pts[hash_of(self.seed, v, &key, 1) as usize % pts.len()];
                    (Move { delay: d, action }, false)
                }
                Resolution::SameRegion { action } => {
                    let DelaySet::Range { lo, .. } = chain_delays(&values, &arena.maxc, choice.index) else {
                        unreachable!("same-region preemption needs an open region")
                    };
                    let set = DelaySet::Range {
                        lo,
                        lo_closed: false,
                        hi: Some(d1),
                    };
                    let pts = refine(&set, &mut n, 4)?;
                    let d = pts[hash_of(self.seed, v, &key, 2) as usize % pts.len()];
                    (Move { delay: d, action }, false)
                }
            };
            let outs = joint_step(gx, &s, &m1, &m2).map_err(|_| SimError::OffArena(v))?;
            let chosen = if p1_wins { &m1 } else { &m2 };
            let next = step(&gx.automaton, &s, chosen).map_err(|_| SimError::OffArena(v))?;
            if !outs.contains(&next) {
                return Err(SimError::OffArena(v));
            }
            let NodeKind::Event { target: w, tick, .. } = arena.kinds[target] else {
                unreachable!()
            };
            let mut t = theta + chosen.delay;
            if (t >= Rational::from_integer(1)) != tick {
                return Err(SimError::OffArena(v));
            }
            if tick {
                t = Rational::zero();
            }
            let mut vals = next.valuation.values.clone();
            vals.push(t);
            let NodeKind::P1(wn) = &arena.kinds[w] else {
                unreachable!()
            };
            if wn.loc != next.location || wn.region != region_of(&vals, &arena.maxc) {
                return Err(SimError::OffArena(v));
            }
            steps.push(Step {
                state: s,
                mv: StepMove::Pair(m1, m2),
            });
            s = next;
            theta = t;
            v = w;
        }
    }
}

/// Simulates the strategy of `r` against the opponent numbered `seed` and
/// judges the outcome with the lasso oracle on the source game `base`.
pub fn simulate(r: &Realization, base: &TimedGame, direct: bool, seed: u64) -> Result<SimRun, SimError> {
    let strategy = r.strategy.as_ref().ok_or(SimError::NoStrategy)?.as_map();
    let sim = Sim { r, strategy, seed };
    let (steps, start) = sim.run(2 * (r.arena.maxc.len() as i64 + 1))?;
    judge(r, base, direct, steps, start)
}

fn judge(
    r: &Realization,
    base: &TimedGame,
    direct: bool,
    steps: Vec<Step>,
    start: usize,
) -> Result<SimRun, SimError> {
    let x = &r.expanded;
    let project = |s: &Step| Step {
        state: project_state(x, &s.state),
        mv: match &s.mv {
            StepMove::Pair(a, b) => StepMove::Pair(project_move(x, a), project_move(x, b)),
            StepMove::Single(m) => StepMove::Single(project_move(x, m)),
        },
    };
    let mut projected: Vec<Step> = steps.iter().map(project).collect();
    let mut steps = steps;
    let expanded = LassoPlay {
        cycle: steps.split_off(start),
        prefix: steps,
    };
    let cycle = projected.split_off(start);
    let play = LassoPlay {
        prefix: projected,
        cycle,
    };
    play.validate_game(base)?;
    let outcome = if play.is_divergent() {
        let satisfied = if direct {
            check_dtw(&play, &x.spec)?
        } else {
            check_tw(&play, &x.spec)?
        };
        Outcome::Divergent { satisfied }
    } else {
        // responsibility is judged in the game the strategy plays: a
        // `__beta1` move has no counterpart in the source game
        expanded.validate_game(&r.game)?;
        let gx = &r.game;
        let maxc = gx.automaton.max_constants();
        let c = expanded.cycle.len();
        let blamed = (0..c).any(|i| {
            let s = &expanded.cycle[i];
            let StepMove::Pair(m1, m2) = s.mv else {
                return false;
            };
            let recorded = &expanded.cycle[(i + 1) % c].state;
            let outs = joint_step(gx, &s.state, &m1, &m2).unwrap_or_default();
            let next = outs
                .into_iter()
                .find(|t| if i + 1 < c { t == recorded } else { t.equivalent(recorded, &maxc) });
            next.is_some_and(|n| p1_responsible(&gx.automaton, &s.state, &m1, &m2, &n))
        });
        Outcome::Convergent { blamed }
    };
    Ok(SimRun {
        play,
        expanded,
        outcome,
    })
}
