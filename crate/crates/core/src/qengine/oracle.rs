//! Reference semantics by exhaustive enumeration. Every node variable and
//! anonymous node atom ranges over all nodes, every edge atom over all
//! edges; each complete assignment is checked against the whole query.
//! Shares nothing with the evaluator beyond the AST and regex compilation.

use std::collections::BTreeMap;

use super::*;
use crate::graph::{Edge, Node};

/// An edge atom with the node variables written to its left and right.
struct EdgeRef<'a> {
    atom: &'a EdgeAtom,
    left: usize,
    right: usize,
}

pub fn brute_force_oracle(graph: &PropertyGraph, ast: &QueryAst) -> Result<ResultSet, QueryError> {
    let mut regexes: BTreeMap<String, regex::Regex> = BTreeMap::new();
    if let Some(f) = &ast.filter {
        collect_regexes(f, &mut regexes)?;
    }

    let mut label_checks: Vec<(usize, &str)> = Vec::new();
    let mut edge_atoms: Vec<EdgeRef> = Vec::new();

    // Resolve atoms to variable indices (named variables share one index).
    let mut names: Vec<Option<String>> = Vec::new();
    let mut slot_of = |atom: &NodeAtom| -> usize {
        if let Some(v) = &atom.var {
            if let Some(i) = names.iter().position(|n| n.as_ref() == Some(v)) {
                return i;
            }
        }
        names.push(atom.var.clone());
        names.len() - 1
    };
    let mut pattern_edges: Vec<(usize, &EdgeAtom, usize)> = Vec::new();
    let mut atoms: Vec<(usize, &NodeAtom)> = Vec::new();
    for p in &ast.patterns {
        let mut prev = slot_of(&p.start);
        atoms.push((prev, &p.start));
        for (e, n) in &p.steps {
            let next = slot_of(n);
            atoms.push((next, n));
            pattern_edges.push((prev, e, next));
            prev = next;
        }
    }
    for (slot, atom) in &atoms {
        if let Some(l) = &atom.label {
            label_checks.push((*slot, l));
        }
    }
    for (l, e, r) in &pattern_edges {
        edge_atoms.push(EdgeRef {
            atom: e,
            left: *l,
            right: *r,
        });
    }

    let all_nodes: Vec<&Node> = graph.nodes().collect();
    let all_edges: Vec<&Edge> = graph.edges().collect();
    let k = names.len();
    let j = edge_atoms.len();
    let columns = columns_of(ast);

    let mut rows: Vec<Vec<String>> = Vec::new();
    let feasible = (k == 0 || !all_nodes.is_empty()) && (j == 0 || !all_edges.is_empty());
    if feasible {
        let mut idx = vec![0usize; k + j];
        let radix: Vec<usize> = (0..k).map(|_| all_nodes.len()).chain((0..j).map(|_| all_edges.len())).collect();
        loop {
            let nodes: Vec<&Node> = idx[..k].iter().map(|&i| all_nodes[i]).collect();
            let edges: Vec<&Edge> = idx[k..].iter().map(|&i| all_edges[i]).collect();
            let labels_ok = label_checks.iter().all(|(i, l)| nodes[*i].labels.contains(*l));
            let edges_ok = edge_atoms.iter().zip(&edges).all(|(ea, e)| {
                let (l, r) = (&nodes[ea.left].id, &nodes[ea.right].id);
                let type_ok = ea.atom.edge_type.as_ref().is_none_or(|t| *t == e.edge_type);
                let forward = e.source == *l && e.target == *r;
                let backward = e.source == *r && e.target == *l;
                type_ok
                    && match ea.atom.direction {
                        Direction::Right => forward,
                        Direction::Left => backward,
                        Direction::Undirected => forward || backward,
                    }
            });
            let distinct = (0..j).all(|a| (a + 1..j).all(|b| edges[a].id != edges[b].id));
            if labels_ok && edges_ok && distinct {
                let lookup = |var: &str| -> Option<&BTreeMap<String, Value>> {
                    if let Some(i) = names.iter().position(|n| n.as_deref() == Some(var)) {
                        return Some(&nodes[i].properties);
                    }
                    edge_atoms
                        .iter()
                        .position(|ea| ea.atom.var.as_deref() == Some(var))
                        .map(|i| &edges[i].properties)
                };
                let pass = ast.filter.as_ref().is_none_or(|f| truth(f, &lookup, &regexes));
                if pass {
                    let row = columns
                        .iter()
                        .map(|c| match c.kind {
                            VarKind::Node => {
                                let i = names.iter().position(|n| n.as_deref() == Some(&c.name)).unwrap();
                                nodes[i].id.clone()
                            }
                            VarKind::Edge => {
                                let i = edge_atoms
                                    .iter()
                                    .position(|ea| ea.atom.var.as_deref() == Some(&c.name))
                                    .unwrap();
                                edges[i].id.clone()
                            }
                        })
                        .collect();
                    rows.push(row);
                }
            }
            // odometer increment
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < radix[pos] {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
    }
    rows.sort();
    rows.dedup();
    if let Some(limit) = ast.limit {
        rows.truncate(limit as usize);
    }

    let mut subgraph = Subgraph::default();
    for row in &rows {
        for (c, id) in columns.iter().zip(row) {
            match c.kind {
                VarKind::Node => {
                    subgraph.nodes.insert(id.clone());
                }
                VarKind::Edge => {
                    subgraph.edges.insert(id.clone());
                }
            }
        }
    }
    for e in graph.edges().filter(|e| subgraph.edges.contains(&e.id)) {
        subgraph.nodes.insert(e.source.clone());
        subgraph.nodes.insert(e.target.clone());
    }
    Ok(ResultSet { columns, rows, subgraph })
}

fn collect_regexes(e: &BoolExpr, out: &mut BTreeMap<String, regex::Regex>) -> Result<(), QueryError> {
    match e {
        BoolExpr::Or(a, b) | BoolExpr::And(a, b) => {
            collect_regexes(a, out)?;
            collect_regexes(b, out)
        }
        BoolExpr::Not(a) => collect_regexes(a, out),
        BoolExpr::Cmp(Comparison {
            op: CmpOp::Matches,
            value: Literal::String(p),
            ..
        }) => {
            if !out.contains_key(p) {
                out.insert(p.clone(), compile_regex(p)?);
            }
            Ok(())
        }
        BoolExpr::Cmp(_) => Ok(()),
    }
}

fn truth<'a>(
    e: &BoolExpr,
    lookup: &dyn Fn(&str) -> Option<&'a BTreeMap<String, Value>>,
    regexes: &BTreeMap<String, regex::Regex>,
) -> bool {
    match e {
        BoolExpr::Or(a, b) => truth(a, lookup, regexes) || truth(b, lookup, regexes),
        BoolExpr::And(a, b) => truth(a, lookup, regexes) && truth(b, lookup, regexes),
        BoolExpr::Not(a) => !truth(a, lookup, regexes),
        BoolExpr::Cmp(c) => {
            let Some(v) = lookup(&c.var).and_then(|props| props.get(&c.key)) else {
                return false;
            };
            let same = match (&c.value, v) {
                (Literal::String(s), Value::String(t)) => s == t,
                (Literal::Integer(i), Value::Number(n)) => n.as_i64() == Some(*i),
                (Literal::Boolean(b), Value::Bool(x)) => b == x,
                _ => false,
            };
            match c.op {
                CmpOp::Eq => same,
                CmpOp::Ne => !same,
                CmpOp::Matches => match (&c.value, v) {
                    (Literal::String(p), Value::String(t)) => regexes[p].is_match(t),
                    _ => false,
                },
            }
        }
    }
}
