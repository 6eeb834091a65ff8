//! Play mappings between a timed automaton (or game) and its expansion.

use num::Zero;

use crate::error::OracleError;
use crate::expand::ExpandedAutomaton;
use crate::model::{
    joint_step, p1_responsible, step, ClockValuation, Move, Player, Rational, State,
    TimedAutomaton, TimedGame,
};

use super::{LassoPlay, Step, StepMove};

/// A finite play: steps plus the state reached after the last one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinitePlay {
    pub steps: Vec<Step>,
    pub last: State,
}

impl FinitePlay {
    pub fn states(&self) -> impl Iterator<Item = &State> + '_ {
        self.steps.iter().map(|s| &s.state).chain(std::iter::once(&self.last))
    }

    pub fn duration(&self) -> Rational {
        self.steps.iter().map(|s| s.mv.delay()).sum()
    }
}

/// First steps of the unrolling of `pi`, replayed from its initial state,
/// up to the first position whose time is at least `until` (and at least
/// one full lap). Replaying keeps clocks above their maximal constants
/// exact in later laps.
pub fn unroll(ta: &TimedAutomaton, pi: &LassoPlay, until: Rational) -> Result<FinitePlay, OracleError> {
    let mut steps = Vec::new();
    let mut cur = pi.step_at(0).state.clone();
    let mut i = 0;
    while cur.valuation.global < until || i < pi.len() {
        let StepMove::Single(m) = pi.step_at(i).mv else {
            return Err(OracleError::Expansion("game step in an automaton path".into()));
        };
        let next = step(ta, &cur, &m)?;
        steps.push(Step {
            state: std::mem::replace(&mut cur, next),
            mv: StepMove::Single(m),
        });
        i += 1;
        if !pi.is_divergent() && i >= 2 * pi.len() {
            break;
        }
    }
    Ok(FinitePlay { steps, last: cur })
}

fn lift(x: &ExpandedAutomaton, s: &State) -> State {
    let mut values = s.valuation.values.clone();
    values.extend(std::iter::repeat(Rational::zero()).take(x.z.len()));
    State {
        location: x.ta.initial,
        valuation: ClockValuation {
            values,
            global: s.valuation.global,
        },
    }
}

pub fn project_state(x: &ExpandedAutomaton, s: &State) -> State {
    State {
        location: x.base(s.location),
        valuation: ClockValuation {
            values: s.valuation.values[..x.base_clocks].to_vec(),
            global: s.valuation.global,
        },
    }
}

pub fn project_move(x: &ExpandedAutomaton, m: &Move) -> Move {
    Move {
        delay: m.delay,
        action: m.action.filter(|a| !x.is_beta(*a)),
    }
}

/// Time until the first open window reaches its bound, if any is open.
fn time_to_bad(x: &ExpandedAutomaton, s: &State) -> Option<Rational> {
    let q = match &x.locations[s.location.0].tag {
        crate::expand::Tag::Window(q) => q,
        crate::expand::Tag::Bad => return None,
    };
    crate::expand::open_dims(q)
        .into_iter()
        .map(|i| {
            Rational::from_integer(x.spec.lambda[i] as i64) - s.valuation.values[x.z[i].0]
        })
        .min()
}

/// Expansion of a finite path of the source automaton. Whenever an open
/// window reaches its bound during a delay, the path detours through the
/// bad copy of the current location using `__beta1` and continues with the
/// rest of the delay.
pub fn expand_path(x: &ExpandedAutomaton, path: &FinitePlay) -> Result<FinitePlay, OracleError> {
    let b1 = x.beta[0];
    let mut cur = lift(x, path.steps.first().map_or(&path.last, |s| &s.state));
    let mut out = Vec::new();
    let states: Vec<&State> = path.states().collect();
    for (k, s) in path.steps.iter().enumerate() {
        check_coherent(x, &cur, states[k], k)?;
        let StepMove::Single(m) = s.mv else {
            return Err(OracleError::Expansion("game step in an automaton path".into()));
        };
        let mut remaining = m.delay;
        while let Some(t) = time_to_bad(x, &cur).filter(|t| *t <= remaining) {
            for mv in [Move::act(t, b1), Move::act(Rational::zero(), b1)] {
                let next = step(&x.ta, &cur, &mv)?;
                out.push(Step {
                    state: std::mem::replace(&mut cur, next),
                    mv: StepMove::Single(mv),
                });
            }
            remaining -= t;
        }
        let mv = Move {
            delay: remaining,
            action: m.action,
        };
        let next = step(&x.ta, &cur, &mv)?;
        out.push(Step {
            state: std::mem::replace(&mut cur, next),
            mv: StepMove::Single(mv),
        });
    }
    check_coherent(x, &cur, &path.last, path.steps.len())?;
    Ok(FinitePlay {
        steps: out,
        last: cur,
    })
}

/// Expansion of a finite play of a game. `gx` is the expanded game. Bad
/// detours are played as a tie of `__beta1` and `__beta2`; a move of the
/// player that did not realize the step is rewritten to its `__beta` move
/// when the window bound makes the original move unavailable.
pub fn expand_game_play(
    x: &ExpandedAutomaton,
    g: &TimedGame,
    gx: &TimedGame,
    play: &FinitePlay,
) -> Result<FinitePlay, OracleError> {
    let [b1, b2] = x.beta;
    let mut cur = lift(x, play.steps.first().map_or(&play.last, |s| &s.state));
    let mut out = Vec::new();
    let states: Vec<&State> = play.states().collect();
    for (k, s) in play.steps.iter().enumerate() {
        check_coherent(x, &cur, states[k], k)?;
        let StepMove::Pair(m1, m2) = s.mv else {
            return Err(OracleError::Expansion("automaton step in a game play".into()));
        };
        let next_base = states[k + 1];
        let responsible = if p1_responsible(&g.automaton, states[k], &m1, &m2, next_base) {
            Player::One
        } else {
            Player::Two
        };
        let d = match responsible {
            Player::One => m1.delay,
            Player::Two => m2.delay,
        };
        let mut elapsed = Rational::zero();
        while let Some(t) = time_to_bad(x, &cur).filter(|t| elapsed + t <= d) {
            for delay in [t, Rational::zero()] {
                let (a, b) = (Move::act(delay, b1), Move::act(delay, b2));
                let next = joint_step(gx, &cur, &a, &b)?.remove(0);
                out.push(Step {
                    state: std::mem::replace(&mut cur, next),
                    mv: StepMove::Pair(a, b),
                });
            }
            elapsed += t;
        }
        let shift = |m: &Move| Move {
            delay: m.delay - elapsed,
            action: m.action,
        };
        let (mut n1, mut n2) = (shift(&m1), shift(&m2));
        let bound = time_to_bad(x, &cur);
        for (m, beta, p) in [(&mut n1, b1, Player::One), (&mut n2, b2, Player::Two)] {
            if p != responsible && step(&x.ta, &cur, m).is_err() {
                if let Some(t) = bound {
                    *m = Move::act(t, beta);
                }
            }
        }
        let outs = joint_step(gx, &cur, &n1, &n2)?;
        let next = outs
            .into_iter()
            .find(|t| project_state(x, t) == *next_base)
            .ok_or_else(|| {
                OracleError::Expansion(format!("step {k} has no matching expanded successor"))
            })?;
        out.push(Step {
            state: std::mem::replace(&mut cur, next),
            mv: StepMove::Pair(n1, n2),
        });
    }
    check_coherent(x, &cur, &play.last, play.steps.len())?;
    Ok(FinitePlay {
        steps: out,
        last: cur,
    })
}

fn check_coherent(x: &ExpandedAutomaton, cur: &State, base: &State, k: usize) -> Result<(), OracleError> {
    if project_state(x, cur) != *base {
        return Err(OracleError::Expansion(format!(
            "expanded play diverges from the source at step {k}"
        )));
    }
    Ok(())
}

/// Removes window information: drops the `__z` clocks and turns `__beta`
/// moves into delay moves.
pub fn project_play(x: &ExpandedAutomaton, play: &FinitePlay) -> FinitePlay {
    FinitePlay {
        steps: play
            .steps
            .iter()
            .map(|s| Step {
                state: project_state(x, &s.state),
                mv: match &s.mv {
                    StepMove::Single(m) => StepMove::Single(project_move(x, m)),
                    StepMove::Pair(a, b) => StepMove::Pair(project_move(x, a), project_move(x, b)),
                },
            })
            .collect(),
        last: project_state(x, &play.last),
    }
}

/// Checks a finite path of `ta` step by step.
pub fn validate_path(ta: &TimedAutomaton, play: &FinitePlay) -> Result<(), OracleError> {
    let states: Vec<&State> = play.states().collect();
    for (k, s) in play.steps.iter().enumerate() {
        let StepMove::Single(m) = s.mv else {
            return Err(OracleError::Expansion("game step in an automaton path".into()));
        };
        if step(ta, &s.state, &m)? != *states[k + 1] {
            return Err(OracleError::Expansion(format!("step {k} has the wrong successor")));
        }
    }
    Ok(())
}

/// Bad entries of the expansion of a divergent lasso, evaluated over a
/// finite unrolling.
///
/// A bad window opened at any position of the prefix or first lap is
/// detected within `lambda_max` after the first lap, so the first value is
/// exactly "the direct objective fails". If the non-direct objective holds,
/// every window opened after the prefix is good and the expansion can enter
/// a bad location only while a window opened before the end of the prefix
/// is still pending, that is before `T_P + lambda_max`. If it fails, some
/// cycle position with a bad window recurs in every lap, and the window the
/// expansion tracks at that point is forced into a bad location at most
/// `lambda_max` later. Unrolling to `T_P + 4 lambda_max + 4 D` therefore
/// sees a bad entry after `T_P + 2 lambda_max + 2 D` exactly when the
/// non-direct objective fails.
pub struct MappingVerdict {
    pub bad_anywhere: bool,
    pub bad_late: bool,
    pub expanded: FinitePlay,
}

pub fn mapping_verdict(
    ta: &TimedAutomaton,
    x: &ExpandedAutomaton,
    pi: &LassoPlay,
) -> Result<MappingVerdict, OracleError> {
    if !pi.is_divergent() {
        return Err(OracleError::Convergent);
    }
    let lmax = Rational::from_integer(x.spec.lambda_max() as i64);
    let d = pi.cycle_duration();
    let tp = pi.prefix_duration();
    let four = Rational::from_integer(4);
    let two = Rational::from_integer(2);
    let horizon = tp + four * lmax + four * d;
    let late = tp + two * lmax + two * d;
    let path = unroll(ta, pi, horizon)?;
    let ex = expand_path(x, &path)?;
    let bads: Vec<&State> = ex.states().filter(|s| x.is_bad(s.location)).collect();
    Ok(MappingVerdict {
        bad_anywhere: !bads.is_empty(),
        bad_late: bads.iter().any(|s| s.valuation.global >= late),
        expanded: ex,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expand::{expand, expand_game};
    use crate::model::{int, rat, Model, PrioritySpec};
    use crate::oracle::{check_dtw, check_tw};
    use crate::parse::parse_model;

    fn model(src: &str) -> Model {
        parse_model(src).unwrap()
    }

    #[test]
    fn ring_mapping() {
        let Model::Automaton(ta) = model(crate::oracle::tests::RING) else { unreachable!() };
        let a = ta.action_by_name("a").unwrap();
        for lambda in 1..=3 {
            let spec = PrioritySpec::new(&ta, vec![lambda]).unwrap();
            let x = expand(&ta, &spec).unwrap();
            for d in [rat(1, 2), int(1), int(2), int(3)] {
                let pi = LassoPlay::from_moves(
                    &ta,
                    &[],
                    &[Move::act(int(0), a), Move::act(d, a), Move::act(int(0), a)],
                )
                .unwrap();
                let v = mapping_verdict(&ta, &x, &pi).unwrap();
                assert_eq!(v.bad_anywhere, !check_dtw(&pi, &spec).unwrap());
                assert_eq!(v.bad_late, !check_tw(&pi, &spec).unwrap());
                validate_path(&x.ta, &v.expanded).unwrap();
            }
        }
    }

    #[test]
    fn long_odd_delay_visits_bad_repeatedly() {
        let Model::Automaton(ta) = model("automaton M\nclock x\nloc l0 init prio [1]\n") else {
            unreachable!()
        };
        let spec = PrioritySpec::new(&ta, vec![2]).unwrap();
        let x = expand(&ta, &spec).unwrap();
        let s0 = ta.initial_state();
        let m = Move::delay(int(5));
        let path = FinitePlay {
            last: step(&ta, &s0, &m).unwrap(),
            steps: vec![Step {
                state: s0,
                mv: StepMove::Single(m),
            }],
        };
        let ex = expand_path(&x, &path).unwrap();
        // two bound crossings at times 2 and 4
        assert_eq!(ex.steps.len(), 2 * 2 + 1);
        assert_eq!(ex.last.valuation.values[x.z[0].0], int(1));
        let pr = project_play(&x, &ex);
        validate_path(&ta, &pr).unwrap();
        assert_eq!(pr.duration(), path.duration());
        assert_eq!(pr.last, path.last);
    }

    #[test]
    fn coherent_projection_is_identity() {
        let Model::Automaton(ta) = model(crate::oracle::tests::RING) else { unreachable!() };
        let a = ta.action_by_name("a").unwrap();
        let spec = PrioritySpec::new(&ta, vec![3]).unwrap();
        let x = expand(&ta, &spec).unwrap();
        let pi = LassoPlay::from_moves(
            &ta,
            &[],
            &[Move::act(int(0), a), Move::act(int(1), a), Move::act(int(1), a)],
        )
        .unwrap();
        let path = unroll(&ta, &pi, int(10)).unwrap();
        let ex = expand_path(&x, &path).unwrap();
        assert!(ex.states().all(|s| !x.is_bad(s.location)));
        assert_eq!(project_play(&x, &ex), path);
    }

    #[test]
    fn game_play_mapping() {
        let Model::Game(g) = model(
            "automaton G\nclock x\naction a owner 1\naction b owner 2\n\
             loc l0 init prio [1]\nloc l1 prio [0]\n\
             edge l0 -> l1 on a when true reset {x}\nedge l0 -> l0 on b when true reset {}\n\
             edge l1 -> l0 on a when true reset {x}\n",
        ) else {
            unreachable!()
        };
        let spec = PrioritySpec::new(&g.automaton, vec![1]).unwrap();
        let (x, gx) = expand_game(&g, &spec).unwrap();
        let a = g.automaton.action_by_name("a").unwrap();
        let b = g.automaton.action_by_name("b").unwrap();
        let s0 = g.automaton.initial_state();
        // player 2 is faster and keeps the window open past its bound
        let pairs = [
            (Move::act(int(3), a), Move::act(rat(5, 2), b)),
            (Move::act(rat(1, 2), a), Move::act(int(2), b)),
        ];
        let mut steps = Vec::new();
        let mut s = s0;
        for (m1, m2) in pairs {
            let next = joint_step(&g, &s, &m1, &m2).unwrap().remove(0);
            steps.push(Step {
                state: std::mem::replace(&mut s, next),
                mv: StepMove::Pair(m1, m2),
            });
        }
        let play = FinitePlay { steps, last: s };
        let ex = expand_game_play(&x, &g, &gx, &play).unwrap();
        // crossings at 1, 2 and 3
        assert_eq!(ex.steps.len(), 3 * 2 + 2);
        assert_eq!(project_play(&x, &ex).last, play.last);
        assert_eq!(project_play(&x, &ex).duration(), play.duration());
    }
}
