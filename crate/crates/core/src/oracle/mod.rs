//! Concrete semantics of window objectives on lasso plays, the play
//! mappings to and from the expanded automaton, and brute-force searches
//! over discretized runs. Everything here works on exact states and is used
//! as ground truth for the symbolic algorithms.

pub mod grid;
pub mod mapping;
pub mod trace;

use num::Zero;

use crate::error::{ModelError, OracleError};
use crate::model::{
    joint_delay, joint_step, step, Move, PrioritySpec, Rational, State, TimedAutomaton, TimedGame,
};

/// The move(s) taken in one step of a play.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepMove {
    Single(Move),
    Pair(Move, Move),
}

impl StepMove {
    pub fn delay(&self) -> Rational {
        match self {
            StepMove::Single(m) => m.delay,
            StepMove::Pair(a, b) => joint_delay(a, b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub state: State,
    pub mv: StepMove,
}

/// An ultimately periodic play: `prefix` then `cycle` repeated forever.
/// Each step is a state together with the move played from it; the move of
/// the last cycle step leads back to the first cycle state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LassoPlay {
    pub prefix: Vec<Step>,
    pub cycle: Vec<Step>,
}

impl LassoPlay {
    /// Builds a lasso of an automaton from its initial state and a move list.
    pub fn from_moves(
        ta: &TimedAutomaton,
        prefix: &[Move],
        cycle: &[Move],
    ) -> Result<LassoPlay, OracleError> {
        let mut s = ta.initial_state();
        let mut run = |moves: &[Move]| -> Result<Vec<Step>, ModelError> {
            let mut out = Vec::new();
            for m in moves {
                let next = step(ta, &s, m)?;
                out.push(Step {
                    state: std::mem::replace(&mut s, next),
                    mv: StepMove::Single(*m),
                });
            }
            Ok(out)
        };
        let prefix = run(prefix)?;
        let cycle = run(cycle)?;
        let lasso = LassoPlay { prefix, cycle };
        lasso.validate(ta)?;
        Ok(lasso)
    }

    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycle.is_empty()
    }

    pub fn cycle_duration(&self) -> Rational {
        self.cycle.iter().map(|s| s.mv.delay()).sum()
    }

    pub fn prefix_duration(&self) -> Rational {
        self.prefix.iter().map(|s| s.mv.delay()).sum()
    }

    pub fn is_divergent(&self) -> bool {
        self.cycle_duration() > Rational::zero()
    }

    /// Step `i` of the infinite unrolling.
    pub fn step_at(&self, i: usize) -> &Step {
        if i < self.prefix.len() {
            &self.prefix[i]
        } else {
            &self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// Time elapsed before step `i` of the unrolling.
    pub fn time_at(&self, i: usize) -> Rational {
        let p = self.prefix.len();
        if i <= p {
            return self.prefix[..i].iter().map(|s| s.mv.delay()).sum();
        }
        let c = self.cycle.len();
        let laps = ((i - p) / c) as i64;
        let rest = (i - p) % c;
        self.prefix_duration()
            + self.cycle_duration() * Rational::from_integer(laps)
            + self.cycle[..rest].iter().map(|s| s.mv.delay()).sum::<Rational>()
    }

    /// Every step must be a transition of the automaton and the cycle must
    /// close up to clocks above their maximal constant.
    pub fn validate(&self, ta: &TimedAutomaton) -> Result<(), OracleError> {
        self.validate_with(ta, |s, m| match m {
            StepMove::Single(m) => step(ta, s, m).map(|t| vec![t]),
            StepMove::Pair(..) => Err(ModelError::NegativeDelay),
        })
    }

    pub fn validate_game(&self, g: &TimedGame) -> Result<(), OracleError> {
        self.validate_with(&g.automaton, |s, m| match m {
            StepMove::Pair(a, b) => joint_step(g, s, a, b),
            StepMove::Single(m) => step(&g.automaton, s, m).map(|t| vec![t]),
        })
    }

    fn validate_with(
        &self,
        ta: &TimedAutomaton,
        succ: impl Fn(&State, &StepMove) -> Result<Vec<State>, ModelError>,
    ) -> Result<(), OracleError> {
        if self.cycle.is_empty() {
            return Err(OracleError::Expansion("empty cycle".into()));
        }
        let maxc = ta.max_constants();
        let first = &self.step_at(0).state;
        if first.location != ta.initial || first.valuation.values.iter().any(|v| !v.is_zero()) {
            return Err(OracleError::Expansion("play does not start in the initial state".into()));
        }
        let n = self.len();
        for i in 0..n {
            let s = self.step_at(i);
            let next = if i + 1 < n {
                &self.step_at(i + 1).state
            } else {
                &self.cycle[0].state
            };
            let outs = succ(&s.state, &s.mv)?;
            let ok = if i + 1 < n {
                outs.iter().any(|t| t == next)
            } else {
                outs.iter().any(|t| t.equivalent(next, &maxc))
            };
            if !ok {
                return Err(OracleError::Expansion(format!(
                    "step {i} does not lead to the recorded successor"
                )));
            }
        }
        Ok(())
    }

    /// Location sequence of the first `n` positions of the unrolling.
    pub fn locations(&self, n: usize) -> Vec<usize> {
        (0..n).map(|i| self.step_at(i).state.location.0).collect()
    }
}

fn priority(spec: &PrioritySpec, pi: &LassoPlay, i: usize, dim: usize) -> u32 {
    spec.priorities[pi.step_at(i).state.location.0][dim]
}

/// Position at which the window opened at `start` closes in dimension
/// `dim`, if it closes within the bound.
pub fn window_close(pi: &LassoPlay, dim: usize, spec: &PrioritySpec, start: usize) -> Option<usize> {
    let lambda = Rational::from_integer(spec.lambda[dim] as i64);
    let t0 = pi.time_at(start);
    let mut min = u32::MAX;
    // a time-convergent cycle never reaches the bound; one lap past the
    // prefix shows every priority that will ever be seen
    let limit = if pi.is_divergent() {
        usize::MAX
    } else {
        start.max(pi.prefix.len()) + pi.cycle.len() + 1
    };
    let mut j = start;
    let mut t = t0;
    while j < limit && t - t0 < lambda {
        min = min.min(priority(spec, pi, j, dim));
        if min % 2 == 0 {
            return Some(j);
        }
        t += pi.step_at(j).mv.delay();
        j += 1;
    }
    None
}

/// Timed good window at position `start`.
pub fn check_tgw(pi: &LassoPlay, dim: usize, spec: &PrioritySpec, start: usize) -> bool {
    window_close(pi, dim, spec, start).is_some()
}

fn require_divergent(pi: &LassoPlay) -> Result<(), OracleError> {
    if pi.cycle.is_empty() || !pi.is_divergent() {
        Err(OracleError::Convergent)
    } else {
        Ok(())
    }
}

/// Direct timed window objective in every dimension. Positions beyond one
/// lap repeat an earlier position up to a time shift, so checking the
/// prefix and one lap is exact.
pub fn check_dtw(pi: &LassoPlay, spec: &PrioritySpec) -> Result<bool, OracleError> {
    require_divergent(pi)?;
    Ok((0..spec.dimension()).all(|d| check_dtw_dim(pi, spec, d)))
}

pub fn check_dtw_dim(pi: &LassoPlay, spec: &PrioritySpec, dim: usize) -> bool {
    (0..pi.len()).all(|n| check_tgw(pi, dim, spec, n))
}

/// Timed window objective in every dimension: from some point on every
/// window is good. On a lasso that is the case iff every cycle position is
/// good, because each cycle position recurs infinitely often.
pub fn check_tw(pi: &LassoPlay, spec: &PrioritySpec) -> Result<bool, OracleError> {
    require_divergent(pi)?;
    Ok((0..spec.dimension()).all(|d| check_tw_dim(pi, spec, d)))
}

pub fn check_tw_dim(pi: &LassoPlay, spec: &PrioritySpec, dim: usize) -> bool {
    (pi.prefix.len()..pi.len()).all(|n| check_tgw(pi, dim, spec, n))
}

/// Parity in dimension `dim`: the least priority on the cycle is even.
pub fn check_parity(pi: &LassoPlay, spec: &PrioritySpec, dim: usize) -> bool {
    let min = pi
        .cycle
        .iter()
        .map(|s| spec.priorities[s.state.location.0][dim])
        .min()
        .unwrap_or(1);
    min % 2 == 0
}

/// Pairs `(n, j, i)` violating the inductive property: the window opened
/// at `n` closes at `j` but the window opened at `i` in `[n, j]` is not
/// good. Empty on every play.
pub fn inductive_violations(
    pi: &LassoPlay,
    spec: &PrioritySpec,
) -> Vec<(usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for dim in 0..spec.dimension() {
        for n in 0..pi.len() {
            if let Some(j) = window_close(pi, dim, spec, n) {
                for i in n..=j {
                    match window_close(pi, dim, spec, i) {
                        Some(j2) if j2 <= j => {}
                        _ => out.push((dim, n, j, i)),
                    }
                }
            }
        }
    }
    out
}

/// Merges each delay move into the following move of the same segment.
/// Invariants are convex, so the merged move is enabled whenever the pair
/// was. Prefix and cycle are compressed separately to keep the cycle start.
pub fn compress(ta: &TimedAutomaton, pi: &LassoPlay) -> Result<LassoPlay, OracleError> {
    fn moves(steps: &[Step]) -> Vec<Move> {
        let mut out: Vec<Move> = Vec::new();
        let mut pending = Rational::zero();
        for s in steps {
            let StepMove::Single(m) = s.mv else {
                unreachable!("compress works on automaton paths")
            };
            pending += m.delay;
            if m.action.is_some() {
                out.push(Move {
                    delay: pending,
                    action: m.action,
                });
                pending = Rational::zero();
            }
        }
        if !pending.is_zero() || out.is_empty() && !steps.is_empty() {
            out.push(Move::delay(pending));
        }
        out
    }
    LassoPlay::from_moves(ta, &moves(&pi.prefix), &moves(&pi.cycle))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::model::{int, Model};
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
            Model::Automaton(t) => t,
            _ => unreachable!(),
        }
    }

    fn violating(ta: &TimedAutomaton, lambda: i64) -> LassoPlay {
        let a = ta.action_by_name("a").unwrap();
        LassoPlay::from_moves(
            ta,
            &[],
            &[Move::act(int(0), a), Move::act(int(lambda), a), Move::act(int(0), a)],
        )
        .unwrap()
    }

    #[test]
    fn ring_lasso() {
        let ta = ring();
        for l in 1..=5 {
            let spec = PrioritySpec::new(&ta, vec![l as u32]).unwrap();
            let pi = violating(&ta, l);
            assert!(!check_tgw(&pi, 0, &spec, 0));
            assert!(check_tgw(&pi, 0, &spec, 2));
            assert!(!check_dtw(&pi, &spec).unwrap());
            assert!(!check_tw(&pi, &spec).unwrap());
            assert!(check_parity(&pi, &spec, 0));
            assert!(inductive_violations(&pi, &spec).is_empty());
        }
    }

    #[test]
    fn fast_cycle_is_good() {
        let ta = ring();
        let a = ta.action_by_name("a").unwrap();
        let spec = PrioritySpec::new(&ta, vec![2]).unwrap();
        let pi = LassoPlay::from_moves(
            &ta,
            &[],
            &[Move::act(int(0), a), Move::act(int(1), a), Move::act(int(1), a)],
        )
        .unwrap();
        assert!(check_dtw(&pi, &spec).unwrap());
        assert!(check_tw(&pi, &spec).unwrap());
    }

    #[test]
    fn convergent_rejected() {
        let ta = ring();
        let a = ta.action_by_name("a").unwrap();
        let spec = PrioritySpec::new(&ta, vec![1]).unwrap();
        let pi = LassoPlay::from_moves(
            &ta,
            &[],
            &[Move::act(int(0), a), Move::act(int(0), a), Move::act(int(0), a)],
        )
        .unwrap();
        assert_eq!(check_dtw(&pi, &spec), Err(OracleError::Convergent));
        assert!(check_tgw(&pi, 0, &spec, 0));
    }

    #[test]
    fn invalid_cycle_detected() {
        let ta = ring();
        let a = ta.action_by_name("a").unwrap();
        assert!(LassoPlay::from_moves(&ta, &[], &[Move::act(int(1), a)]).is_err());
    }

    #[test]
    fn compress_keeps_semantics() {
        let ta = ring();
        let a = ta.action_by_name("a").unwrap();
        let spec = PrioritySpec::new(&ta, vec![2]).unwrap();
        let pi = LassoPlay::from_moves(
            &ta,
            &[],
            &[
                Move::act(int(0), a),
                Move::delay(int(1)),
                Move::delay(int(1)),
                Move::act(int(0), a),
                Move::act(int(0), a),
            ],
        )
        .unwrap();
        let c = compress(&ta, &pi).unwrap();
        assert_eq!(c.cycle.len(), 3);
        assert_eq!(check_dtw(&pi, &spec), check_dtw(&c, &spec));
    }
}
