//! Line-oriented model format.
//!
//! ```text
//! automaton NAME
//! clock x
//! action a [owner 1|2]
//! loc NAME [init] prio [n1,...,nk] [inv GUARD]
//! edge SRC -> DST on ACT when GUARD reset {x,y}
//! ```
//!
//! `#` starts a comment. A model with any `owner` clause is a game and then
//! every action needs one.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::ParseError;
use crate::model::{
    validate_model, ActionId, Atom, ClockConstraint, ClockId, Edge, LocId, Location, Model, Player,
    Relation, TimedAutomaton, TimedGame,
};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(u32),
    Arrow,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Comma,
    And,
    Rel(Relation),
    Eq,
}

fn lex(line: &str, lineno: usize) -> Result<Vec<Tok>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('&', Some('&')) => (Tok::And, 2),
            ('<', Some('=')) => (Tok::Rel(Relation::Le), 2),
            ('>', Some('=')) => (Tok::Rel(Relation::Ge), 2),
            ('=', Some('=')) => (Tok::Eq, 2),
            ('<', _) => (Tok::Rel(Relation::Lt), 1),
            ('>', _) => (Tok::Rel(Relation::Gt), 1),
            ('[', _) => (Tok::LBrack, 1),
            (']', _) => (Tok::RBrack, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            (',', _) => (Tok::Comma, 1),
            _ if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let n = text
                    .parse::<u32>()
                    .map_err(|_| ParseError::new(lineno, format!("number `{text}` is too large")))?;
                toks.push(Tok::Num(n));
                continue;
            }
            _ if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || matches!(chars[i], '_' | '\'' | '.'))
                {
                    i += 1;
                }
                toks.push(Tok::Ident(chars[start..i].iter().collect()));
                continue;
            }
            _ => return Err(ParseError::new(lineno, format!("unexpected character `{c}`"))),
        };
        toks.push(tok);
        i += len;
    }
    Ok(toks)
}

struct Cursor<'a> {
    toks: &'a [Tok],
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.line, msg)
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.next() {
            Some(Tok::Ident(s)) => Ok(s.clone()),
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(Tok::Ident(s)) if s == kw => Ok(()),
            _ => Err(self.err(format!("expected `{kw}`"))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        match self.next() {
            Some(x) if *x == t => Ok(()),
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn num(&mut self) -> Result<u32, ParseError> {
        match self.next() {
            Some(Tok::Num(n)) => Ok(*n),
            _ => Err(self.err("expected a non-negative integer")),
        }
    }

    fn done(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err(format!("unexpected trailing token {t:?}"))),
        }
    }
}

type RawAtom = (String, Relation, u32);

fn guard(c: &mut Cursor) -> Result<Vec<RawAtom>, ParseError> {
    if c.at_keyword("true") {
        c.next();
        return Ok(Vec::new());
    }
    let mut atoms = Vec::new();
    loop {
        let clock = c.ident("a clock name")?;
        match c.next().cloned() {
            Some(Tok::Rel(r)) => atoms.push((clock, r, c.num()?)),
            Some(Tok::Eq) => {
                let n = c.num()?;
                atoms.push((clock.clone(), Relation::Ge, n));
                atoms.push((clock, Relation::Le, n));
            }
            _ => return Err(c.err("expected one of <, <=, ==, >=, >")),
        }
        if matches!(c.peek(), Some(Tok::And)) {
            c.next();
        } else {
            return Ok(atoms);
        }
    }
}

struct RawLoc {
    line: usize,
    name: String,
    init: bool,
    prio: Vec<u32>,
    inv: Vec<RawAtom>,
}

struct RawEdge {
    line: usize,
    src: String,
    dst: String,
    action: String,
    guard: Vec<RawAtom>,
    resets: Vec<String>,
}

/// Parses and validates a model.
pub fn parse_model(text: &str) -> Result<Model, ParseError> {
    let mut name: Option<String> = None;
    let mut clocks: Vec<(usize, String)> = Vec::new();
    let mut actions: Vec<(usize, String, Option<Player>)> = Vec::new();
    let mut locs: Vec<RawLoc> = Vec::new();
    let mut edges: Vec<RawEdge> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = lex(raw, line)?;
        if toks.is_empty() {
            continue;
        }
        let mut c = Cursor {
            toks: &toks,
            pos: 0,
            line,
        };
        let head = c.ident("a declaration keyword")?;
        match head.as_str() {
            "automaton" => {
                if name.is_some() {
                    return Err(c.err("duplicate `automaton` declaration"));
                }
                name = Some(c.ident("the automaton name")?);
            }
            "clock" => loop {
                clocks.push((line, c.ident("a clock name")?));
                if matches!(c.peek(), Some(Tok::Comma)) {
                    c.next();
                } else {
                    break;
                }
            },
            "action" => {
                let a = c.ident("an action name")?;
                let owner = if c.at_keyword("owner") {
                    c.next();
                    match c.num()? {
                        1 => Some(Player::One),
                        2 => Some(Player::Two),
                        n => return Err(c.err(format!("owner must be 1 or 2, got {n}"))),
                    }
                } else {
                    None
                };
                actions.push((line, a, owner));
            }
            "loc" => {
                let lname = c.ident("a location name")?;
                let mut init = false;
                if c.at_keyword("init") {
                    c.next();
                    init = true;
                }
                c.keyword("prio")?;
                c.expect(Tok::LBrack, "`[`")?;
                let mut prio = vec![c.num()?];
                while matches!(c.peek(), Some(Tok::Comma)) {
                    c.next();
                    prio.push(c.num()?);
                }
                c.expect(Tok::RBrack, "`]`")?;
                let inv = if c.at_keyword("inv") {
                    c.next();
                    guard(&mut c)?
                } else {
                    Vec::new()
                };
                locs.push(RawLoc {
                    line,
                    name: lname,
                    init,
                    prio,
                    inv,
                });
            }
            "edge" => {
                let src = c.ident("a source location")?;
                c.expect(Tok::Arrow, "`->`")?;
                let dst = c.ident("a target location")?;
                c.keyword("on")?;
                let action = c.ident("an action name")?;
                let g = if c.at_keyword("when") {
                    c.next();
                    guard(&mut c)?
                } else {
                    Vec::new()
                };
                let mut resets = Vec::new();
                if c.at_keyword("reset") {
                    c.next();
                    c.expect(Tok::LBrace, "`{`")?;
                    if !matches!(c.peek(), Some(Tok::RBrace)) {
                        resets.push(c.ident("a clock name")?);
                        while matches!(c.peek(), Some(Tok::Comma)) {
                            c.next();
                            resets.push(c.ident("a clock name")?);
                        }
                    }
                    c.expect(Tok::RBrace, "`}`")?;
                }
                edges.push(RawEdge {
                    line,
                    src,
                    dst,
                    action,
                    guard: g,
                    resets,
                });
            }
            other => return Err(c.err(format!("unknown declaration `{other}`"))),
        }
        c.done()?;
    }

    let name = name.ok_or_else(|| ParseError::new(1, "missing `automaton NAME` declaration"))?;

    let mut clock_ix: HashMap<&str, usize> = HashMap::new();
    for (line, cname) in &clocks {
        if clock_ix.insert(cname.as_str(), clock_ix.len()).is_some() {
            return Err(ParseError::new(*line, format!("clock `{cname}` declared twice")));
        }
        if crate::model::is_global_time_name(cname) {
            return Err(ParseError::new(
                *line,
                format!("`{cname}` is reserved for global time"),
            ));
        }
    }
    let mut action_ix: HashMap<&str, usize> = HashMap::new();
    for (line, aname, _) in &actions {
        if action_ix.insert(aname.as_str(), action_ix.len()).is_some() {
            return Err(ParseError::new(*line, format!("action `{aname}` declared twice")));
        }
    }
    let is_game = actions.iter().any(|(_, _, o)| o.is_some());
    if is_game {
        if let Some((line, a, _)) = actions.iter().find(|(_, _, o)| o.is_none()) {
            return Err(ParseError::new(*line, format!("action `{a}` has no owner")));
        }
    }
    let mut loc_ix: HashMap<&str, usize> = HashMap::new();
    for l in &locs {
        if loc_ix.insert(l.name.as_str(), loc_ix.len()).is_some() {
            return Err(ParseError::new(l.line, format!("location `{}` declared twice", l.name)));
        }
    }
    let first = locs
        .first()
        .ok_or_else(|| ParseError::new(text.lines().count().max(1), "model has no locations"))?;
    let k = first.prio.len();
    if let Some(l) = locs.iter().find(|l| l.prio.len() != k) {
        return Err(ParseError::new(
            l.line,
            format!(
                "priority vector of `{}` has length {}, expected {k}",
                l.name,
                l.prio.len()
            ),
        ));
    }
    let inits: Vec<&RawLoc> = locs.iter().filter(|l| l.init).collect();
    let initial = match inits.as_slice() {
        [one] => LocId(loc_ix[one.name.as_str()]),
        [] => return Err(ParseError::new(first.line, "no location is marked `init`")),
        [_, second, ..] => {
            return Err(ParseError::new(second.line, "more than one initial location"))
        }
    };

    let resolve = |atoms: &[RawAtom], line: usize| -> Result<ClockConstraint, ParseError> {
        let mut out = Vec::with_capacity(atoms.len());
        for (cname, rel, n) in atoms {
            let ix = clock_ix
                .get(cname.as_str())
                .ok_or_else(|| ParseError::new(line, format!("unknown clock `{cname}`")))?;
            out.push(Atom::new(ClockId(*ix), *rel, *n));
        }
        Ok(ClockConstraint::from_atoms(out))
    };

    let mut locations = Vec::with_capacity(locs.len());
    for l in &locs {
        locations.push(Location {
            name: l.name.clone(),
            invariant: resolve(&l.inv, l.line)?,
            priority: l.prio.clone(),
        });
    }
    let mut out_edges = Vec::with_capacity(edges.len());
    for e in &edges {
        let find_loc = |n: &str| {
            loc_ix
                .get(n)
                .map(|&i| LocId(i))
                .ok_or_else(|| ParseError::new(e.line, format!("unknown location `{n}`")))
        };
        let source = find_loc(&e.src)?;
        let target = find_loc(&e.dst)?;
        let action = action_ix
            .get(e.action.as_str())
            .map(|&i| ActionId(i))
            .ok_or_else(|| ParseError::new(e.line, format!("unknown action `{}`", e.action)))?;
        let mut resets = Vec::new();
        for r in &e.resets {
            let ix = clock_ix
                .get(r.as_str())
                .ok_or_else(|| ParseError::new(e.line, format!("unknown clock `{r}`")))?;
            if !resets.contains(&ClockId(*ix)) {
                resets.push(ClockId(*ix));
            }
        }
        out_edges.push(Edge {
            source,
            guard: resolve(&e.guard, e.line)?,
            action,
            resets,
            target,
        });
    }
    for (j, e2) in out_edges.iter().enumerate() {
        for e1 in &out_edges[..j] {
            if e1.source == e2.source
                && e1.action == e2.action
                && e1.guard.clone().and(&e2.guard).satisfiable()
            {
                return Err(ParseError::new(
                    edges[j].line,
                    format!(
                        "nondeterministic: guards of two `{}` edges leaving `{}` overlap",
                        edges[j].action, edges[j].src
                    ),
                ));
            }
        }
    }

    let ta = TimedAutomaton {
        name,
        clocks: clocks.into_iter().map(|(_, c)| c).collect(),
        actions: actions.iter().map(|(_, a, _)| a.clone()).collect(),
        locations,
        initial,
        edges: out_edges,
    };
    let model = if is_game {
        Model::Game(TimedGame {
            automaton: ta,
            owners: actions.iter().map(|(_, _, o)| o.unwrap()).collect(),
        })
    } else {
        Model::Automaton(ta)
    };
    let diags = validate_model(&model);
    if let Some(d) = diags.first() {
        return Err(ParseError::new(inits[0].line, d.clone()));
    }
    Ok(model)
}

pub fn format_constraint(ta: &TimedAutomaton, g: &ClockConstraint) -> String {
    if g.is_true() {
        return "true".to_string();
    }
    g.atoms
        .iter()
        .map(|a| format!("{} {} {}", ta.clocks[a.clock.0], a.rel.symbol(), a.bound))
        .collect::<Vec<_>>()
        .join(" && ")
}

fn format_prio(p: &[u32]) -> String {
    let parts: Vec<String> = p.iter().map(|n| n.to_string()).collect();
    format!("[{}]", parts.join(","))
}

/// Prints a model so that [`parse_model`] gives it back unchanged.
pub fn emit_model(m: &Model) -> String {
    let ta = m.automaton();
    let mut out = String::new();
    writeln!(out, "automaton {}", ta.name).unwrap();
    for c in &ta.clocks {
        writeln!(out, "clock {c}").unwrap();
    }
    for (i, a) in ta.actions.iter().enumerate() {
        match m {
            Model::Game(g) => {
                let o = match g.owners[i] {
                    Player::One => 1,
                    Player::Two => 2,
                };
                writeln!(out, "action {a} owner {o}").unwrap();
            }
            Model::Automaton(_) => writeln!(out, "action {a}").unwrap(),
        }
    }
    for (i, l) in ta.locations.iter().enumerate() {
        write!(out, "loc {}", l.name).unwrap();
        if LocId(i) == ta.initial {
            write!(out, " init").unwrap();
        }
        write!(out, " prio {}", format_prio(&l.priority)).unwrap();
        if !l.invariant.is_true() {
            write!(out, " inv {}", format_constraint(ta, &l.invariant)).unwrap();
        }
        out.push('\n');
    }
    for e in &ta.edges {
        let resets: Vec<&str> = e.resets.iter().map(|c| ta.clocks[c.0].as_str()).collect();
        writeln!(
            out,
            "edge {} -> {} on {} when {} reset {{{}}}",
            ta.locations[e.source.0].name,
            ta.locations[e.target.0].name,
            ta.actions[e.action.0],
            format_constraint(ta, &e.guard),
            resets.join(",")
        )
        .unwrap();
    }
    out
}
