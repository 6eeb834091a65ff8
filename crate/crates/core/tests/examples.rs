use num::Rational64;

use twp_core::expand::expand;
use twp_core::games::realize;
use twp_core::model::{step, validate_automaton, ActionId, LocId, Model, Move, PrioritySpec, TimedAutomaton};
use twp_core::oracle::{check_dtw, check_dtw_dim, check_parity, check_tgw, check_tw, LassoPlay};
use twp_core::parse::{emit_model, parse_model};
use twp_core::regions::build_region_graph;
use twp_core::verify::{verify_direct, verify_tw};

const RING: &str = "\
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
        Model::Automaton(ta) => ta,
        Model::Game(_) => unreachable!(),
    }
}

fn spec(ta: &TimedAutomaton, lambda: u32) -> PrioritySpec {
    PrioritySpec::new(ta, vec![lambda]).unwrap()
}

/// l0 -(0,a)-> l1 -(lambda,a)-> l2 -(0,a)-> l0 ...
fn violating_lasso(ta: &TimedAutomaton, lambda: u32) -> LassoPlay {
    let a = ActionId(0);
    let mv = |d: i64| Move {
        delay: Rational64::from_integer(d),
        action: Some(a),
    };
    LassoPlay::from_moves(ta, &[], &[mv(0), mv(lambda as i64), mv(0)]).unwrap()
}

#[test]
fn model_shape_and_semantics() {
    let ta = ring();
    assert_eq!((ta.locations.len(), ta.edges.len()), (3, 3));
    assert!(validate_automaton(&ta).is_empty());
    assert_eq!(ta.max_constants(), vec![2]);
    let s = step(
        &ta,
        &ta.initial_state(),
        &Move {
            delay: Rational64::from_integer(0),
            action: Some(ActionId(0)),
        },
    )
    .unwrap();
    assert_eq!(s.location, LocId(1));
}

#[test]
fn expansion_constants_and_round_trip() {
    let ta = ring();
    let x = expand(&ta, &spec(&ta, 3)).unwrap();
    assert_eq!(x.ta.max_constants(), vec![2, 3]);
    let text = emit_model(&Model::Automaton(x.ta.clone()));
    assert_eq!(parse_model(&text).unwrap(), Model::Automaton(x.ta));
}

#[test]
fn bad_location_is_reachable_in_regions() {
    let ta = ring();
    let x = expand(&ta, &spec(&ta, 1)).unwrap();
    let g = build_region_graph(&x.ta);
    assert!(g.vertices.iter().any(|v| x.is_bad(v.loc)));
}

#[test]
fn separation_lasso() {
    let ta = ring();
    for lambda in 1..=4 {
        let s = spec(&ta, lambda);
        let pi = violating_lasso(&ta, lambda);
        assert!(!check_tgw(&pi, 0, &s, 0));
        assert!(!check_dtw(&pi, &s).unwrap());
        assert!(!check_dtw_dim(&pi, &s, 0));
        assert!(!check_tw(&pi, &s).unwrap());
        assert!(check_parity(&pi, &s, 0));
    }
}

#[test]
fn ring_verdicts() {
    let ta = ring();
    for lambda in [1, 2] {
        let s = spec(&ta, lambda);
        assert!(!verify_direct(&ta, &s).unwrap().holds);
        assert!(!verify_tw(&ta, &s).unwrap().holds);
    }
}

#[test]
fn hand_games() {
    let text = "\
automaton G
clock x
action a owner 1
loc l0 init prio [1]
loc l1 prio [0]
edge l0 -> l1 on a when true reset {}
edge l1 -> l1 on a when true reset {}
";
    for (owner, wins) in [("owner 1", true), ("owner 2", false)] {
        let Model::Game(g) = parse_model(&text.replace("owner 1", owner)).unwrap() else {
            unreachable!()
        };
        let s = spec(&g.automaton, 1);
        for direct in [true, false] {
            assert_eq!(realize(&g, &s, direct).unwrap().wins, wins, "{owner} direct={direct}");
        }
    }
}
