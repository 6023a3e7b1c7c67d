//! Formula rendering.  `parse(render(f)) == f` for every arena term: the
//! printer inserts parentheses exactly where the grammar would otherwise
//! regroup, including around binder bodies that would swallow a following
//! operator.

use super::{Arena, FormulaId, Node};

const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_UNARY: u8 = 3;

fn prec(node: &Node) -> u8 {
    match node {
        Node::Or { .. } => PREC_OR,
        Node::And { .. } => PREC_AND,
        _ => PREC_UNARY,
    }
}

// A term whose rightmost spine ends in a binder absorbs any operator printed
// after it, so it must be parenthesized unless it is the last thing printed.
fn right_open(arena: &Arena, f: FormulaId) -> bool {
    match arena.node(f) {
        Node::Mu { .. } | Node::Nu { .. } => true,
        Node::And { rhs, .. } | Node::Or { rhs, .. } => right_open(arena, rhs),
        Node::Box { body, .. } | Node::Diamond { body, .. } => right_open(arena, body),
        _ => false,
    }
}

fn go(arena: &Arena, f: FormulaId, min_prec: u8, rightmost: bool, out: &mut String) {
    let node = arena.node(f);
    let wrap = prec(&node) < min_prec || (!rightmost && right_open(arena, f));
    if wrap {
        out.push('(');
    }
    let inner_rightmost = rightmost || wrap;
    match node {
        Node::Top => out.push_str("tt"),
        Node::Bottom => out.push_str("ff"),
        Node::Lit { prop, positive } => {
            if !positive {
                out.push('!');
            }
            out.push_str(arena.name_str(prop));
        }
        Node::Var { name } => out.push_str(arena.name_str(name)),
        Node::And { lhs, rhs } => {
            go(arena, lhs, PREC_AND, false, out);
            out.push_str(" & ");
            go(arena, rhs, PREC_AND + 1, inner_rightmost, out);
        }
        Node::Or { lhs, rhs } => {
            go(arena, lhs, PREC_OR, false, out);
            out.push_str(" | ");
            go(arena, rhs, PREC_OR + 1, inner_rightmost, out);
        }
        Node::Box { agent, body } => {
            out.push('[');
            out.push_str(arena.name_str(agent));
            out.push(']');
            go(arena, body, PREC_UNARY, inner_rightmost, out);
        }
        Node::Diamond { agent, body } => {
            out.push('<');
            out.push_str(arena.name_str(agent));
            out.push('>');
            go(arena, body, PREC_UNARY, inner_rightmost, out);
        }
        Node::Mu { var, body } => {
            out.push_str("mu ");
            out.push_str(arena.name_str(var));
            out.push('.');
            go(arena, body, 0, inner_rightmost, out);
        }
        Node::Nu { var, body } => {
            out.push_str("nu ");
            out.push_str(arena.name_str(var));
            out.push('.');
            go(arena, body, 0, inner_rightmost, out);
        }
    }
    if wrap {
        out.push(')');
    }
}

/// Render `f` to concrete syntax.
pub fn render(arena: &Arena, f: FormulaId) -> String {
    let mut out = String::new();
    go(arena, f, 0, true, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse, AgentSet};
    use super::*;

    fn roundtrip(text: &str) -> String {
        let mut ar = Arena::new();
        let ag = AgentSet::new(&mut ar, &["a", "b"]).unwrap();
        let f = parse(&mut ar, &ag, text).unwrap();
        let printed = render(&ar, f);
        let again = parse(&mut ar, &ag, &printed).unwrap();
        assert_eq!(f, again, "render broke round-trip for `{text}` -> `{printed}`");
        printed
    }

    #[test]
    fn associativity_and_precedence_round_trip() {
        assert_eq!(roundtrip("p & q & r"), "p & q & r");
        assert_eq!(roundtrip("p & (q & r)"), "p & (q & r)");
        assert_eq!(roundtrip("(p | q) & r"), "(p | q) & r");
        assert_eq!(roundtrip("p | q & r"), "p | q & r");
        assert_eq!(roundtrip("[a](p & q)"), "[a](p & q)");
        assert_eq!(roundtrip("<b>[a]p | q"), "<b>[a]p | q");
    }

    #[test]
    fn binder_bodies_are_parenthesized_when_followed() {
        assert_eq!(roundtrip("(mu X.p | <a>X) & q"), "(mu X.p | <a>X) & q");
        assert_eq!(roundtrip("([a]mu X.X) & q"), "([a]mu X.X) & q");
        assert_eq!(roundtrip("p & mu X.q & <a>X"), "p & mu X.q & <a>X");
    }

    #[test]
    fn redundant_parentheses_are_dropped() {
        // Left-associated chains need no grouping, and a binder body keeps
        // its shape because the binder already extends maximally right.
        assert_eq!(
            roundtrip("(p & <a>p) & mu X.(!p | [a]X)"),
            "p & <a>p & mu X.!p | [a]X"
        );
        assert_eq!(
            roundtrip("<b>p & mu X.([b]!p | [b]X)"),
            "<b>p & mu X.[b]!p | [b]X"
        );
    }
}
