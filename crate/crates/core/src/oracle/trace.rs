//! Text format for lasso paths.
//!
//! ```text
//! prefix:
//! l0 0 a
//! cycle:
//! l1 3/2 a
//! l2 0 _
//! ```
//!
//! Each line names the location the step starts in, the delay and the
//! action (`_` for a pure delay).

use num::Zero;

use crate::error::TraceError;
use crate::model::{step, Move, Rational, State, TimedAutomaton};

use super::{LassoPlay, Step, StepMove};

pub fn parse_trace(ta: &TimedAutomaton, text: &str) -> Result<LassoPlay, TraceError> {
    let mut section: Option<bool> = None;
    let mut prefix = Vec::new();
    let mut cycle = Vec::new();
    let mut cur = ta.initial_state();
    let mut cycle_start: Option<State> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        match body {
            "prefix:" => {
                if section.is_some() {
                    return Err(syntax(line, "`prefix:` must come first"));
                }
                section = Some(false);
                continue;
            }
            "cycle:" => {
                if section == Some(true) {
                    return Err(syntax(line, "duplicate `cycle:`"));
                }
                section = Some(true);
                cycle_start = Some(cur.clone());
                continue;
            }
            _ => {}
        }
        let Some(in_cycle) = section else {
            return Err(syntax(line, "step outside of a `prefix:` or `cycle:` section"));
        };
        let fields: Vec<&str> = body.split_whitespace().collect();
        let [loc, delay, action] = fields[..] else {
            return Err(syntax(line, "expected `LOCATION DELAY ACTION`"));
        };
        let l = ta
            .loc_by_name(loc)
            .ok_or_else(|| syntax(line, format!("unknown location `{loc}`")))?;
        let delay: Rational = delay
            .parse()
            .map_err(|_| syntax(line, format!("bad delay `{delay}`")))?;
        if delay < Rational::zero() {
            return Err(syntax(line, "negative delay"));
        }
        let action = match action {
            "_" => None,
            a => Some(
                ta.action_by_name(a)
                    .ok_or_else(|| syntax(line, format!("unknown action `{a}`")))?,
            ),
        };
        if l != cur.location {
            return Err(TraceError::Mismatch {
                line,
                message: format!(
                    "the play is in `{}`, not `{loc}`",
                    ta.locations[cur.location.0].name
                ),
            });
        }
        let m = Move { delay, action };
        let next = step(ta, &cur, &m).map_err(|source| TraceError::Invalid { line, source })?;
        let s = Step {
            state: std::mem::replace(&mut cur, next),
            mv: StepMove::Single(m),
        };
        if in_cycle {
            cycle.push(s);
        } else {
            prefix.push(s);
        }
    }
    let start = cycle_start.ok_or(TraceError::EmptyCycle)?;
    if cycle.is_empty() {
        return Err(TraceError::EmptyCycle);
    }
    if !cur.equivalent(&start, &ta.max_constants()) {
        return Err(TraceError::OpenCycle);
    }
    Ok(LassoPlay { prefix, cycle })
}

fn syntax(line: usize, message: impl Into<String>) -> TraceError {
    TraceError::Syntax {
        line,
        message: message.into(),
    }
}

fn move_line(ta: &TimedAutomaton, s: &Step, m: &Move) -> String {
    format!(
        "{} {} {}",
        ta.locations[s.state.location.0].name,
        m.delay,
        m.action.map_or("_", |a| ta.actions[a.0].as_str())
    )
}

pub fn format_trace(ta: &TimedAutomaton, pi: &LassoPlay) -> String {
    let mut out = String::new();
    for (name, steps) in [("prefix:", &pi.prefix), ("cycle:", &pi.cycle)] {
        out.push_str(name);
        out.push('\n');
        for s in steps {
            let line = match &s.mv {
                StepMove::Single(m) => move_line(ta, s, m),
                StepMove::Pair(a, b) => format!("{}  | {}", move_line(ta, s, a), move_line(ta, s, b)),
            };
            out.push_str(&line);
            out.push('\n');
        }
    }
    out
}
