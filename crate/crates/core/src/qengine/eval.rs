//! Backtracking join over node and edge slots.
//!
//! Each distinct node variable (and each anonymous node atom) is a node
//! slot; each edge atom is an edge slot. Slots are bound in a greedy order
//! that expands along edges from already bound nodes and falls back to a
//! label-partitioned scan. Top-level AND conjuncts of the filter run as soon
//! as their variables are bound.

use std::collections::{BTreeSet, HashMap};

use regex::Regex;

use super::*;
use crate::graph::{Edge, Node};

#[derive(Debug)]
struct NodeSlot {
    labels: Vec<String>,
}

#[derive(Debug)]
struct EdgeSlot {
    edge_type: Option<String>,
    /// For directed slots `from` is the source side.
    from: usize,
    to: usize,
    directed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Node(usize),
    Edge(usize),
}

enum Cond {
    Or(Box<Cond>, Box<Cond>),
    And(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
    Eq(Slot, String, Literal),
    Ne(Slot, String, Literal),
    Matches(Slot, String, Regex),
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Scan(usize),
    /// Bind edge slot `edge` from the bound node slot `anchor`.
    Expand { edge: usize, anchor: usize },
}

struct Plan {
    nodes: Vec<NodeSlot>,
    edges: Vec<EdgeSlot>,
    steps: Vec<Step>,
    /// Conditions to test once step `i` has bound its slots.
    checks: Vec<Vec<Cond>>,
    output: Vec<Slot>,
    columns: Vec<Column>,
}

pub(super) fn evaluate(graph: &PropertyGraph, ast: &QueryAst) -> Result<ResultSet, QueryError> {
    let plan = compile(graph, ast)?;
    let mut state = State {
        graph,
        plan: &plan,
        nodes: vec![None; plan.nodes.len()],
        edges: vec![None; plan.edges.len()],
        out: BTreeSet::new(),
    };
    state.search(0);
    let mut rows: Vec<Vec<String>> = state.out.into_iter().collect();
    if let Some(limit) = ast.limit {
        rows.truncate(usize::try_from(limit).unwrap_or(usize::MAX));
    }
    let subgraph = subgraph_of(graph, &plan.columns, &rows);
    Ok(ResultSet {
        columns: plan.columns,
        rows,
        subgraph,
    })
}

fn compile<'q>(graph: &PropertyGraph, ast: &'q QueryAst) -> Result<Plan, QueryError> {
    let mut nodes: Vec<NodeSlot> = Vec::new();
    let mut edges: Vec<EdgeSlot> = Vec::new();
    let mut names: HashMap<&str, Slot> = HashMap::new();

    let node_slot = |atom: &'q NodeAtom, nodes: &mut Vec<NodeSlot>, names: &mut HashMap<&'q str, Slot>| {
        let idx = match atom.var.as_deref().and_then(|v| names.get(v)) {
            Some(Slot::Node(i)) => *i,
            _ => {
                nodes.push(NodeSlot { labels: Vec::new() });
                let i = nodes.len() - 1;
                if let Some(v) = &atom.var {
                    names.insert(v, Slot::Node(i));
                }
                i
            }
        };
        if let Some(l) = &atom.label {
            if !nodes[idx].labels.contains(l) {
                nodes[idx].labels.push(l.clone());
            }
        }
        idx
    };

    for pattern in &ast.patterns {
        let mut prev = node_slot(&pattern.start, &mut nodes, &mut names);
        for (edge, node) in &pattern.steps {
            let next = node_slot(node, &mut nodes, &mut names);
            let (from, to) = match edge.direction {
                Direction::Left => (next, prev),
                _ => (prev, next),
            };
            edges.push(EdgeSlot {
                edge_type: edge.edge_type.clone(),
                from,
                to,
                directed: edge.direction != Direction::Undirected,
            });
            if let Some(v) = &edge.var {
                names.insert(v, Slot::Edge(edges.len() - 1));
            }
            prev = next;
        }
    }

    let steps = order(graph, &nodes, &edges);

    // slot -> index of the step that binds it
    let mut bound_at: HashMap<(bool, usize), usize> = HashMap::new();
    for (i, step) in steps.iter().enumerate() {
        match *step {
            Step::Scan(n) => {
                bound_at.insert((true, n), i);
            }
            Step::Expand { edge, .. } => {
                bound_at.insert((false, edge), i);
                let e = &edges[edge];
                for n in [e.from, e.to] {
                    bound_at.entry((true, n)).or_insert(i);
                }
            }
        }
    }
    let mut checks: Vec<Vec<Cond>> = (0..steps.len()).map(|_| Vec::new()).collect();
    if let Some(filter) = &ast.filter {
        let mut conjuncts = Vec::new();
        split_and(filter, &mut conjuncts);
        for c in conjuncts {
            let mut slots = Vec::new();
            let cond = compile_cond(c, &names, &mut slots)?;
            let at = slots
                .iter()
                .map(|s| match *s {
                    Slot::Node(n) => bound_at[&(true, n)],
                    Slot::Edge(e) => bound_at[&(false, e)],
                })
                .max()
                .unwrap_or(0);
            checks[at].push(cond);
        }
    }

    let columns = columns_of(ast);
    let output = columns.iter().map(|c| names[c.name.as_str()]).collect();
    Ok(Plan {
        nodes,
        edges,
        steps,
        checks,
        output,
        columns,
    })
}

fn split_and<'a>(e: &'a BoolExpr, out: &mut Vec<&'a BoolExpr>) {
    match e {
        BoolExpr::And(a, b) => {
            split_and(a, out);
            split_and(b, out);
        }
        other => out.push(other),
    }
}

fn compile_cond(e: &BoolExpr, names: &HashMap<&str, Slot>, slots: &mut Vec<Slot>) -> Result<Cond, QueryError> {
    Ok(match e {
        BoolExpr::Or(a, b) => Cond::Or(
            Box::new(compile_cond(a, names, slots)?),
            Box::new(compile_cond(b, names, slots)?),
        ),
        BoolExpr::And(a, b) => Cond::And(
            Box::new(compile_cond(a, names, slots)?),
            Box::new(compile_cond(b, names, slots)?),
        ),
        BoolExpr::Not(a) => Cond::Not(Box::new(compile_cond(a, names, slots)?)),
        BoolExpr::Cmp(c) => {
            let slot = names[c.var.as_str()];
            slots.push(slot);
            match (c.op, &c.value) {
                (CmpOp::Eq, v) => Cond::Eq(slot, c.key.clone(), v.clone()),
                (CmpOp::Ne, v) => Cond::Ne(slot, c.key.clone(), v.clone()),
                (CmpOp::Matches, Literal::String(p)) => Cond::Matches(slot, c.key.clone(), compile_regex(p)?),
                (CmpOp::Matches, other) => {
                    return Err(QueryError::Regex {
                        pattern: other.to_string(),
                        message: "pattern must be a string".into(),
                    })
                }
            }
        }
    })
}

/// Greedy join order: edges touching a bound node first (both ends bound
/// before one end), otherwise scan the unbound node with the smallest
/// candidate set.
fn order(graph: &PropertyGraph, nodes: &[NodeSlot], edges: &[EdgeSlot]) -> Vec<Step> {
    let mut bound = vec![false; nodes.len()];
    let mut placed = vec![false; edges.len()];
    let mut steps = Vec::new();
    let candidates = |slot: &NodeSlot| -> usize {
        slot.labels
            .iter()
            .map(|l| graph.nodes_with_label(l).len())
            .min()
            .unwrap_or(graph.node_count())
    };
    loop {
        let closing = (0..edges.len()).find(|&e| !placed[e] && bound[edges[e].from] && bound[edges[e].to]);
        let opening = || (0..edges.len()).find(|&e| !placed[e] && (bound[edges[e].from] || bound[edges[e].to]));
        if let Some(e) = closing.or_else(opening) {
            let anchor = if bound[edges[e].from] { edges[e].from } else { edges[e].to };
            steps.push(Step::Expand { edge: e, anchor });
            placed[e] = true;
            bound[edges[e].from] = true;
            bound[edges[e].to] = true;
            continue;
        }
        match (0..nodes.len()).filter(|&n| !bound[n]).min_by_key(|&n| candidates(&nodes[n])) {
            Some(n) => {
                steps.push(Step::Scan(n));
                bound[n] = true;
            }
            None => break,
        }
    }
    steps
}

struct State<'g, 'p> {
    graph: &'g PropertyGraph,
    plan: &'p Plan,
    nodes: Vec<Option<&'g Node>>,
    edges: Vec<Option<&'g Edge>>,
    out: BTreeSet<Vec<String>>,
}

impl<'g> State<'g, '_> {
    fn search(&mut self, step: usize) {
        let Some(&current) = self.plan.steps.get(step) else {
            let row = self
                .plan
                .output
                .iter()
                .map(|s| match *s {
                    Slot::Node(n) => self.nodes[n].expect("bound").id.clone(),
                    Slot::Edge(e) => self.edges[e].expect("bound").id.clone(),
                })
                .collect();
            self.out.insert(row);
            return;
        };
        match current {
            Step::Scan(slot) => {
                let graph = self.graph;
                let labels = &self.plan.nodes[slot].labels;
                let try_node = |state: &mut Self, node: &'g Node| {
                    if labels.iter().all(|l| node.labels.contains(l)) {
                        state.nodes[slot] = Some(node);
                        if state.checks_pass(step) {
                            state.search(step + 1);
                        }
                        state.nodes[slot] = None;
                    }
                };
                match labels.iter().min_by_key(|l| graph.nodes_with_label(l).len()) {
                    Some(l) => {
                        for id in graph.nodes_with_label(l) {
                            try_node(self, graph.node(id).expect("indexed node"));
                        }
                    }
                    None => {
                        for node in graph.nodes() {
                            try_node(self, node);
                        }
                    }
                }
            }
            Step::Expand { edge, anchor } => {
                let graph = self.graph;
                let slot = &self.plan.edges[edge];
                let at = self.nodes[anchor].expect("anchor bound");
                // (edge id, endpoint on the anchor side is source?)
                let forward = anchor == slot.from;
                let mut candidates: Vec<(&'g str, bool)> = Vec::new();
                if forward || !slot.directed {
                    candidates.extend(graph.outgoing(&at.id).iter().map(|id| (id.as_str(), true)));
                }
                if !forward || !slot.directed {
                    candidates.extend(graph.incoming(&at.id).iter().map(|id| (id.as_str(), false)));
                }
                let other_slot = if forward { slot.to } else { slot.from };
                for (id, anchor_is_source) in candidates {
                    let e = graph.edge(id).expect("indexed edge");
                    if slot.edge_type.as_ref().is_some_and(|t| *t != e.edge_type) {
                        continue;
                    }
                    if self.edges.iter().flatten().any(|b| b.id == e.id) {
                        continue;
                    }
                    let other_id = if anchor_is_source { &e.target } else { &e.source };
                    let other = graph.node(other_id).expect("endpoint exists");
                    let fresh = match self.nodes[other_slot] {
                        Some(n) if n.id != other.id => continue,
                        Some(_) => false,
                        None => {
                            if !self.plan.nodes[other_slot].labels.iter().all(|l| other.labels.contains(l)) {
                                continue;
                            }
                            self.nodes[other_slot] = Some(other);
                            true
                        }
                    };
                    self.edges[edge] = Some(e);
                    if self.checks_pass(step) {
                        self.search(step + 1);
                    }
                    self.edges[edge] = None;
                    if fresh {
                        self.nodes[other_slot] = None;
                    }
                }
            }
        }
    }

    fn checks_pass(&self, step: usize) -> bool {
        self.plan.checks[step].iter().all(|c| self.holds(c))
    }

    fn property(&self, slot: Slot, key: &str) -> Option<&'g Value> {
        match slot {
            Slot::Node(n) => self.nodes[n].and_then(|n| n.properties.get(key)),
            Slot::Edge(e) => self.edges[e].and_then(|e| e.properties.get(key)),
        }
    }

    fn holds(&self, c: &Cond) -> bool {
        match c {
            Cond::Or(a, b) => self.holds(a) || self.holds(b),
            Cond::And(a, b) => self.holds(a) && self.holds(b),
            Cond::Not(a) => !self.holds(a),
            Cond::Eq(s, k, lit) => self.property(*s, k).is_some_and(|v| literal_equals(v, lit)),
            Cond::Ne(s, k, lit) => self.property(*s, k).is_some_and(|v| !literal_equals(v, lit)),
            Cond::Matches(s, k, re) => self
                .property(*s, k)
                .and_then(Value::as_str)
                .is_some_and(|v| re.is_match(v)),
        }
    }
}
