//! Random graph and query generators for property tests and the
//! acceptance suite.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::Value;

use crate::graph::{Edge, Node, Properties, PropertyGraph};
use crate::qengine::{
    BoolExpr, CmpOp, Comparison, Direction, EdgeAtom, Literal, NodeAtom, PathPattern, QueryAst, ReturnClause, VarKind,
};

const LEMMAS: [&str; 6] = ["a", "b", "c", "Rama", "C++", "x\"y"];
const LABELS: [&str; 3] = ["A", "B", "C"];
const EDGE_TYPES: [&str; 2] = ["R", "S"];
const DETAILS: [&str; 3] = ["d", "é", "x y"];

/// Random graph with `n` nodes and `m` edges (self-loops and parallel
/// edges allowed). Labels come from {A, B, C}, edge types from {R, S}.
/// Node properties: `lemma` always, `k` (0..3) and `flag` sometimes; edge
/// properties: `detail` and `line_ids` sometimes.
pub fn random_graph(rng: &mut impl Rng, n: usize, m: usize) -> PropertyGraph {
    let nodes: Vec<Node> = (0..n)
        .map(|i| {
            let mut labels: BTreeSet<String> =
                LABELS.iter().filter(|_| rng.gen_bool(0.4)).map(|l| l.to_string()).collect();
            if labels.is_empty() {
                labels.insert(LABELS[rng.gen_range(0..LABELS.len())].into());
            }
            let mut properties = Properties::new();
            let lemma = format!("{}{}", LEMMAS[rng.gen_range(0..LEMMAS.len())], rng.gen_range(0..3));
            properties.insert("lemma".into(), Value::String(lemma));
            if rng.gen_bool(0.5) {
                properties.insert("k".into(), Value::from(rng.gen_range(0..3)));
            }
            if rng.gen_bool(0.3) {
                properties.insert("flag".into(), Value::Bool(rng.gen()));
            }
            Node {
                id: format!("v{i}"),
                labels,
                properties,
            }
        })
        .collect();
    let edges: Vec<Edge> = if n == 0 {
        Vec::new()
    } else {
        (0..m)
            .map(|i| {
                let mut properties = Properties::new();
                if rng.gen_bool(0.5) {
                    properties.insert("detail".into(), Value::String(DETAILS[rng.gen_range(0..3)].into()));
                }
                if rng.gen_bool(0.3) {
                    properties.insert("line_ids".into(), Value::from(vec![rng.gen_range(0..5)]));
                }
                Edge {
                    id: format!("e{i}"),
                    edge_type: EDGE_TYPES[rng.gen_range(0..EDGE_TYPES.len())].into(),
                    source: format!("v{}", rng.gen_range(0..n)),
                    target: format!("v{}", rng.gen_range(0..n)),
                    properties,
                }
            })
            .collect()
    };
    PropertyGraph::new(nodes, edges).expect("generated graph is valid")
}

/// Random query from the supported grammar with at most `max_nodes` node
/// slots and `max_edges` edge atoms. Labels and types include ones absent
/// from [`random_graph`] output; regexes are always valid.
pub fn random_query(rng: &mut impl Rng, max_nodes: usize, max_edges: usize) -> QueryAst {
    loop {
        if let Some(q) = try_query(rng, max_nodes.max(1), max_edges) {
            return q;
        }
    }
}

/// Node and edge slot counts of a query, as enumerated by a brute-force
/// search.
pub fn slot_counts(ast: &QueryAst) -> (usize, usize) {
    let mut named = BTreeSet::new();
    let mut anonymous = 0;
    let mut edges = 0;
    let mut node = |a: &NodeAtom| match &a.var {
        Some(v) => {
            named.insert(v.clone());
        }
        None => anonymous += 1,
    };
    for p in &ast.patterns {
        node(&p.start);
        for (_, n) in &p.steps {
            edges += 1;
            node(n);
        }
    }
    (named.len() + anonymous, edges)
}

fn try_query(rng: &mut impl Rng, max_nodes: usize, max_edges: usize) -> Option<QueryAst> {
    let node_names = ["a", "b", "c"];
    let mut edge_counter = 0;
    let node_atom = |rng: &mut dyn rand::RngCore| NodeAtom {
        var: (!rng.gen_bool(0.2)).then(|| node_names[rng.gen_range(0..node_names.len())].to_string()),
        label: rng
            .gen_bool(0.4)
            .then(|| ["A", "B", "C", "Z"][rng.gen_range(0..4)].to_string()),
    };
    let mut patterns = Vec::new();
    for _ in 0..rng.gen_range(1..=2) {
        let start = node_atom(rng);
        let mut steps = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            let var = rng.gen_bool(0.7).then(|| {
                edge_counter += 1;
                format!("r{edge_counter}")
            });
            let edge = EdgeAtom {
                var,
                edge_type: rng.gen_bool(0.5).then(|| ["R", "S", "T"][rng.gen_range(0..3)].to_string()),
                direction: [Direction::Right, Direction::Left, Direction::Undirected][rng.gen_range(0..3)],
            };
            steps.push((edge, node_atom(rng)));
        }
        patterns.push(PathPattern { start, steps });
    }
    let mut ast = QueryAst {
        patterns,
        filter: None,
        returns: ReturnClause::Star,
        limit: None,
    };
    let (nodes, edges) = slot_counts(&ast);
    if nodes > max_nodes || edges > max_edges {
        return None;
    }
    let vars = ast.variables();
    if vars.is_empty() {
        return None;
    }
    if rng.gen_bool(0.6) {
        ast.filter = Some(random_expr(rng, &vars, 2));
    }
    if rng.gen_bool(0.5) {
        let mut chosen: Vec<String> = vars
            .iter()
            .filter(|_| rng.gen_bool(0.5))
            .map(|(v, _)| v.clone())
            .collect();
        if chosen.is_empty() {
            chosen.push(vars[0].0.clone());
        }
        chosen.shuffle(rng);
        ast.returns = ReturnClause::Vars(chosen);
    }
    if rng.gen_bool(0.3) {
        ast.limit = Some(rng.gen_range(0..6));
    }
    Some(ast)
}

fn random_expr(rng: &mut impl Rng, vars: &[(String, VarKind)], depth: u32) -> BoolExpr {
    if depth > 0 && rng.gen_bool(0.4) {
        return match rng.gen_range(0..3) {
            0 => BoolExpr::And(
                Box::new(random_expr(rng, vars, depth - 1)),
                Box::new(random_expr(rng, vars, depth - 1)),
            ),
            1 => BoolExpr::Or(
                Box::new(random_expr(rng, vars, depth - 1)),
                Box::new(random_expr(rng, vars, depth - 1)),
            ),
            _ => BoolExpr::Not(Box::new(random_expr(rng, vars, depth - 1))),
        };
    }
    let (var, kind) = &vars[rng.gen_range(0..vars.len())];
    let keys: &[&str] = match kind {
        VarKind::Node => &["lemma", "k", "flag", "missing"],
        VarKind::Edge => &["detail", "line_ids", "missing"],
    };
    let key = keys[rng.gen_range(0..keys.len())].to_string();
    let op = [CmpOp::Eq, CmpOp::Ne, CmpOp::Matches][rng.gen_range(0..3)];
    let value = if op == CmpOp::Matches {
        let patterns = [".*", "a.*", "Rama\\d", "C\\+\\+.*", "[abc]1", "x\"y0", "d|é", ".", "x y"];
        Literal::String(patterns[rng.gen_range(0..patterns.len())].into())
    } else {
        match rng.gen_range(0..3) {
            0 => {
                let strings = ["a0", "b1", "Rama2", "C++0", "d", "é", "x\"y1"];
                Literal::String(strings[rng.gen_range(0..strings.len())].into())
            }
            1 => Literal::Integer(rng.gen_range(-1..3)),
            _ => Literal::Boolean(rng.gen()),
        }
    };
    BoolExpr::Cmp(Comparison { var: var.clone(), key, op, value })
}

/// Largest graph size within (30 nodes, 60 edges) whose brute-force
/// enumeration over the given slot counts stays under `budget`
/// assignments.
pub fn bounded_size(nodes: usize, edges: usize, budget: f64) -> (usize, usize) {
    let mut n = 30usize;
    let mut m = 60usize;
    while n > 1 && (n as f64).powi(nodes as i32) * (m as f64).powi(edges as i32) > budget {
        n -= 1;
        m = (2 * n).min(60);
    }
    (n, m)
}
