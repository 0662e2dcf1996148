use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;
use serde_json::json;

use super::*;
use crate::graph::{Edge, Node, Properties};
use crate::testkit::{bounded_size, random_graph, random_query, slot_counts};

const FATHER_OF: &str = r#"MATCH (p1)-[r:IS_FATHER_OF]->(p2) WHERE p2.lemma =~ "X" RETURN *"#;

fn node(id: &str, labels: &[&str], lemma: &str) -> Node {
    let mut properties = Properties::new();
    properties.insert("lemma".into(), json!(lemma));
    Node {
        id: id.into(),
        labels: labels.iter().map(|l| l.to_string()).collect(),
        properties,
    }
}

fn edge(id: &str, ty: &str, source: &str, target: &str) -> Edge {
    Edge {
        id: id.into(),
        edge_type: ty.into(),
        source: source.into(),
        target: target.into(),
        properties: Properties::new(),
    }
}

fn father_graph() -> PropertyGraph {
    PropertyGraph::new(
        vec![node("nA", &["PERSON"], "A"), node("nB", &["PERSON"], "B")],
        vec![edge("e0", "IS_FATHER_OF", "nA", "nB")],
    )
    .unwrap()
}

fn ids(rows: &[Vec<String>]) -> Vec<Vec<&str>> {
    rows.iter().map(|r| r.iter().map(String::as_str).collect()).collect()
}

fn syntax(text: &str) -> SyntaxError {
    match parse_query(text) {
        Err(QueryError::Syntax(e)) => e,
        other => panic!("{text}: expected a syntax error, got {other:?}"),
    }
}

fn semantic_message(text: &str) -> String {
    match parse_query(text) {
        Err(QueryError::Semantic { message, .. }) => message,
        other => panic!("{text}: expected a semantic error, got {other:?}"),
    }
}

#[test]
fn parses_template_query() {
    let ast = parse_query(FATHER_OF).unwrap();
    assert_eq!(ast.patterns.len(), 1);
    let p = &ast.patterns[0];
    assert_eq!(p.start.var.as_deref(), Some("p1"));
    assert_eq!(p.steps.len(), 1);
    let (e, n) = &p.steps[0];
    assert_eq!(e.var.as_deref(), Some("r"));
    assert_eq!(e.edge_type.as_deref(), Some("IS_FATHER_OF"));
    assert_eq!(e.direction, Direction::Right);
    assert_eq!(n.var.as_deref(), Some("p2"));
    assert_eq!(
        ast.filter,
        Some(BoolExpr::Cmp(Comparison {
            var: "p2".into(),
            key: "lemma".into(),
            op: CmpOp::Matches,
            value: Literal::String("X".into()),
        }))
    );
    assert_eq!(ast.returns, ReturnClause::Star);
    assert_eq!(ast.limit, None);
}

#[test]
fn parses_minimal_query() {
    let ast = parse_query("MATCH (n) RETURN n").unwrap();
    assert_eq!(ast.patterns[0].steps.len(), 0);
    assert_eq!(ast.returns, ReturnClause::Vars(vec!["n".into()]));
}

#[test]
fn keywords_case_insensitive_labels_not() {
    let a = parse_query("match (n:Person) where n.k = 1 and not n.x = TRUE return n limit 3").unwrap();
    let b = parse_query("MATCH (n:Person) WHERE n.k = 1 AND NOT n.x = true RETURN n LIMIT 3").unwrap();
    assert_eq!(a, b);
    let c = parse_query("MATCH (n:PERSON) RETURN n").unwrap();
    assert_ne!(a.patterns, c.patterns);
}

#[test]
fn edge_forms() {
    let dirs = |q: &str| -> Vec<(Option<String>, Direction)> {
        parse_query(q).unwrap().patterns[0]
            .steps
            .iter()
            .map(|(e, _)| (e.edge_type.clone(), e.direction))
            .collect()
    };
    assert_eq!(
        dirs("MATCH (a)-->(b)<--(c)--(d) RETURN a"),
        [(None, Direction::Right), (None, Direction::Left), (None, Direction::Undirected)]
    );
    assert_eq!(
        dirs("MATCH (a)<-[:R]-(b)-[]-(c)-[x]->(d) RETURN x"),
        [
            (Some("R".into()), Direction::Left),
            (None, Direction::Undirected),
            (None, Direction::Right)
        ]
    );
    let e = syntax("MATCH (a)<-[r]->(b) RETURN a");
    assert_eq!(e.pos.column, 16);
}

#[test]
fn strings_and_quoted_identifiers() {
    let ast = parse_query(r#"MATCH (`my var`:`IS SON`) WHERE `my var`.`the key` = 'it\'s \"q\" \\ é' RETURN `my var`"#)
        .unwrap();
    assert_eq!(ast.patterns[0].start.label.as_deref(), Some("IS SON"));
    let Some(BoolExpr::Cmp(c)) = &ast.filter else { panic!() };
    assert_eq!(c.key, "the key");
    assert_eq!(c.value, Literal::String("it's \"q\" \\ é".into()));
    let ast = parse_query("MATCH (`match`) RETURN `match`").unwrap();
    assert_eq!(ast.returns, ReturnClause::Vars(vec!["match".into()]));
    assert_eq!(parse_query("MATCH (n) WHERE n.k = -5 RETURN n").unwrap().filter.unwrap().to_string(), "n.k = -5");
}

#[test]
fn syntax_errors_report_position_and_expectations() {
    let e = syntax("MATCH (a RETURN a");
    assert_eq!((e.pos.line, e.pos.column, e.pos.offset), (1, 10, 9));
    assert_eq!(e.expected, ["':'", "')'"]);
    assert_eq!(e.found, "'RETURN'");

    let e = syntax("MATCH (a)\n  WHERE a.lemma ~ \"x\" RETURN a");
    assert_eq!((e.pos.line, e.pos.column), (2, 17));
    assert_eq!(e.expected, ["token"]);

    let e = syntax("MATCH (a) WHERE a.lemma =~ 3 RETURN a");
    assert_eq!(e.expected, ["string literal"]);
    let e = syntax("MATCH (a) RETURN");
    assert_eq!(e.found, "end of input");
    assert_eq!(e.expected, ["'*'", "identifier"]);
    let e = syntax("MATCH (a) RETURN a a");
    assert_eq!(e.expected, ["','", "LIMIT", "end of input"]);
    let e = syntax(r#"MATCH (a) WHERE a.x = "\d" RETURN a"#);
    assert!(e.found.contains("unknown escape"), "{e}");
    let e = syntax(r#"MATCH (a) WHERE a.x = "open RETURN a"#);
    assert_eq!(e.pos.column, 23);
    let e = syntax("MATCH (a) RETURN a LIMIT 99999999999999999999");
    assert!(e.expected[0].contains("2^64"));
    let e = syntax("CREATE (a)");
    assert_eq!(e.expected, ["MATCH"]);
    assert!(e.to_string().starts_with("syntax error at 1:1: found 'CREATE', expected MATCH"));
    syntax("MATCH (a)-[*1..3]->(b) RETURN a");
    syntax("MATCH (a) RETURN count(a)");
}

#[test]
fn semantic_errors() {
    assert!(semantic_message("MATCH (a)-[]->(b) RETURN c").contains("c is not bound"));
    assert!(semantic_message("MATCH (a) WHERE z.k = 1 RETURN a").contains("z is not bound"));
    assert!(semantic_message("MATCH (a)-[a]->(b) RETURN a").contains("both as a node and as an edge"));
    assert!(semantic_message("MATCH (a)-[r]->(b), (b)-[r]->(c) RETURN r").contains("more than once"));
    assert!(semantic_message("MATCH (a) RETURN a, a").contains("returned twice"));
    assert!(semantic_message("MATCH ()-->() RETURN *").contains("named variable"));
    match parse_query("MATCH (a) RETURN\n  c") {
        Err(QueryError::Semantic { pos, .. }) => assert_eq!((pos.line, pos.column), (2, 3)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn father_of_example() {
    let g = father_graph();
    let ast = parse_query(&FATHER_OF.replace('X', "B")).unwrap();
    let rs = evaluate(&g, &ast).unwrap();
    let names: Vec<&str> = rs.columns.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["p1", "r", "p2"]);
    assert_eq!(ids(&rs.rows), [["nA", "e0", "nB"]]);
    assert_eq!(rs.subgraph.nodes, BTreeSet::from(["nA".into(), "nB".into()]));
    assert_eq!(rs.subgraph.edges, BTreeSet::from(["e0".into()]));
    assert_eq!(brute_force_oracle(&g, &ast).unwrap(), rs);

    let none = evaluate(&PropertyGraph::default(), &ast).unwrap();
    assert!(none.rows.is_empty());
    assert_eq!(none.subgraph, Subgraph::default());
}

#[test]
fn limit_truncates_after_sorting() {
    let nodes = (0..5).map(|i| node(&format!("n{i}"), &["PERSON"], "x")).collect();
    let g = PropertyGraph::new(nodes, vec![]).unwrap();
    let rs = run(&g, "MATCH (n:PERSON) RETURN n LIMIT 2").unwrap();
    assert_eq!(ids(&rs.rows), [["n0"], ["n1"]]);
    assert_eq!(run(&g, "MATCH (n:PERSON) RETURN n LIMIT 0").unwrap().rows.len(), 0);
    assert_eq!(run(&g, "MATCH (n) RETURN n").unwrap().rows.len(), 5);
}

#[test]
fn regex_is_anchored_and_validated() {
    let g = PropertyGraph::new(vec![node("n1", &["P"], "Rama"), node("n2", &["P"], "C++")], vec![]).unwrap();
    assert!(run(&g, r#"MATCH (n) WHERE n.lemma =~ "Ram" RETURN n"#).unwrap().rows.is_empty());
    assert_eq!(run(&g, r#"MATCH (n) WHERE n.lemma =~ "Ram.*" RETURN n"#).unwrap().rows.len(), 1);
    assert_eq!(run(&g, r#"MATCH (n) WHERE n.lemma =~ "a|C\\+\\+" RETURN n"#).unwrap().rows, [["n2"]]);
    match run(&g, r#"MATCH (n) WHERE n.lemma =~ "Ram(a" RETURN n"#) {
        Err(QueryError::Regex { pattern, .. }) => assert_eq!(pattern, "Ram(a"),
        other => panic!("{other:?}"),
    }
    // the pattern is validated even when no row reaches it
    let empty = PropertyGraph::default();
    assert!(matches!(
        run(&empty, r#"MATCH (n) WHERE n.lemma =~ "(" RETURN n"#),
        Err(QueryError::Regex { .. })
    ));
}

#[test]
fn missing_properties_compare_false() {
    let mut a = node("n1", &["P"], "a");
    a.properties.insert("k".into(), json!(1));
    let g = PropertyGraph::new(vec![a, node("n2", &["P"], "b")], vec![]).unwrap();
    assert_eq!(run(&g, "MATCH (n) WHERE n.k = 1 RETURN n").unwrap().rows, [["n1"]]);
    assert!(run(&g, "MATCH (n) WHERE n.k <> 1 RETURN n").unwrap().rows.is_empty());
    assert_eq!(run(&g, "MATCH (n) WHERE NOT n.k = 1 RETURN n").unwrap().rows, [["n2"]]);
    assert_eq!(run(&g, r#"MATCH (n) WHERE n.k <> "1" RETURN n"#).unwrap().rows, [["n1"]]);
    assert!(run(&g, r#"MATCH (n) WHERE n.k = "1" RETURN n"#).unwrap().rows.is_empty());
    assert!(run(&g, r#"MATCH (n) WHERE n.k =~ "1" RETURN n"#).unwrap().rows.is_empty());
}

#[test]
fn direction_and_edge_uniqueness() {
    let g = father_graph();
    assert_eq!(run(&g, "MATCH (a)<-[r]-(b) RETURN a, b").unwrap().rows, [["nB", "nA"]]);
    assert_eq!(run(&g, "MATCH (a)-[r]-(b) RETURN a, b").unwrap().rows.len(), 2);
    assert!(run(&g, "MATCH (a)-[:OTHER]-(b) RETURN a").unwrap().rows.is_empty());
    // one edge cannot satisfy two edge atoms
    assert!(run(&g, "MATCH (a)-[r]-(b)-[s]-(c) RETURN a").unwrap().rows.is_empty());
    assert!(run(&g, "MATCH (a)-->(b), (c)-->(d) RETURN a").unwrap().rows.is_empty());
    // but one node can fill several node atoms
    assert_eq!(run(&g, "MATCH (a), (b) RETURN a, b").unwrap().rows.len(), 4);
    let loop_graph =
        PropertyGraph::new(vec![node("n", &["P"], "x")], vec![edge("e", "R", "n", "n")]).unwrap();
    assert_eq!(run(&loop_graph, "MATCH (a)-[r]-(b) RETURN *").unwrap().rows, [["n", "e", "n"]]);
    assert_eq!(run(&loop_graph, "MATCH (a)-->(a) RETURN a").unwrap().rows, [["n"]]);
}

#[test]
fn projection_is_a_set() {
    let g = PropertyGraph::new(
        vec![node("a", &["P"], "x"), node("b", &["P"], "y"), node("c", &["P"], "z")],
        vec![edge("e1", "R", "a", "b"), edge("e2", "R", "a", "c")],
    )
    .unwrap();
    let rs = run(&g, "MATCH (x)-[r]->(y) RETURN x").unwrap();
    assert_eq!(rs.rows, [["a"]]);
    assert_eq!(rs.subgraph.nodes, BTreeSet::from(["a".to_string()]));
    assert!(rs.subgraph.edges.is_empty());
    let rs = run(&g, "MATCH (x)-[r]->(y) RETURN r").unwrap();
    assert_eq!(rs.subgraph.nodes.len(), 3);
}

#[test]
fn single_node_pattern_counts_every_node() {
    for n in [0, 1, 7, 30] {
        let g = random_graph(&mut StdRng::seed_from_u64(n as u64), n, n);
        let ast = parse_query("MATCH (v) RETURN v").unwrap();
        assert_eq!(brute_force_oracle(&g, &ast).unwrap().rows.len(), n);
        assert_eq!(evaluate(&g, &ast).unwrap().rows.len(), n);
    }
}

fn random_case(seed: u64) -> (PropertyGraph, QueryAst) {
    let mut rng = StdRng::seed_from_u64(seed);
    let ast = random_query(&mut rng, 3, 2);
    let (k, j) = slot_counts(&ast);
    let (n_max, m_max) = bounded_size(k, j, 60_000.0);
    let n = rand::Rng::gen_range(&mut rng, 0..=n_max);
    let m = rand::Rng::gen_range(&mut rng, 0..=m_max);
    (random_graph(&mut rng, n, m), ast)
}

#[test]
fn evaluator_matches_oracle() {
    let mut nonempty = 0;
    for seed in 0..150u64 {
        let (g, ast) = random_case(seed);
        let text = ast.to_string();
        let reparsed = parse_query(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert_eq!(reparsed, ast, "{text}");
        let fast = evaluate(&g, &ast).unwrap();
        let slow = brute_force_oracle(&g, &ast).unwrap();
        assert_eq!(fast, slow, "seed {seed}: {text}");
        nonempty += usize::from(!fast.rows.is_empty());
    }
    // the generator must not only produce empty results
    assert!(nonempty > 30, "{nonempty}");
}

fn ident_strategy() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z][a-z0-9_]{0,3}",
        Just("match".to_string()),
        Just("Return".to_string()),
        "[a-zé `-]{1,4}",
    ]
}

fn literal_strategy() -> impl Strategy<Value = Literal> {
    prop_oneof![
        any::<i64>().prop_map(Literal::Integer),
        any::<bool>().prop_map(Literal::Boolean),
        "(?s).{0,6}".prop_map(Literal::String),
    ]
}

fn expr_strategy(vars: Vec<String>) -> impl Strategy<Value = BoolExpr> {
    let leaf = (prop::sample::select(vars), ident_strategy(), 0..3usize, literal_strategy()).prop_map(
        |(var, key, op, value)| {
            let (op, value) = match op {
                0 => (CmpOp::Eq, value),
                1 => (CmpOp::Ne, value),
                _ => (CmpOp::Matches, Literal::String(value.to_string())),
            };
            BoolExpr::Cmp(Comparison { var, key, op, value })
        },
    );
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| BoolExpr::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| BoolExpr::Or(Box::new(a), Box::new(b))),
            inner.prop_map(|a| BoolExpr::Not(Box::new(a))),
        ]
    })
}

fn ast_strategy() -> impl Strategy<Value = QueryAst> {
    let node = || {
        (prop::option::of(ident_strategy()), prop::option::of(ident_strategy()))
            .prop_map(|(var, label)| NodeAtom { var, label })
    };
    let edge = (prop::option::of(ident_strategy()), prop::option::of(ident_strategy()), 0..3usize).prop_map(
        |(var, edge_type, d)| EdgeAtom {
            var,
            edge_type,
            direction: [Direction::Right, Direction::Left, Direction::Undirected][d],
        },
    );
    let pattern = (node(), prop::collection::vec((edge, node()), 0..3))
        .prop_map(|(start, steps)| PathPattern { start, steps });
    (prop::collection::vec(pattern, 1..3), any::<bool>(), prop::option::of(0u64..1000))
        .prop_filter_map("needs a valid variable layout", |(mut patterns, star, limit)| {
            // make edge variables unique and disjoint from node variables
            let mut n = 0;
            for p in &mut patterns {
                for (e, _) in &mut p.steps {
                    if e.var.is_some() {
                        n += 1;
                        e.var = Some(format!("edge{n}"));
                    }
                }
            }
            let ast = QueryAst {
                patterns,
                filter: None,
                returns: ReturnClause::Star,
                limit,
            };
            let vars: Vec<String> = ast.variables().into_iter().map(|(v, _)| v).collect();
            if vars.is_empty() {
                return None;
            }
            let returns = if star { ReturnClause::Star } else { ReturnClause::Vars(vars.clone()) };
            Some((QueryAst { returns, ..ast }, vars))
        })
        .prop_flat_map(|(ast, vars)| {
            (Just(ast), prop::option::of(expr_strategy(vars))).prop_map(|(ast, filter)| QueryAst { filter, ..ast })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn pretty_print_round_trips(ast in ast_strategy()) {
        let text = ast.to_string();
        let parsed = parse_query(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
        prop_assert_eq!(&parsed, &ast);
        prop_assert_eq!(parsed.to_string(), text);
    }

    #[test]
    fn parser_never_panics(text in "(?s).{0,40}") {
        let _ = parse_query(&text);
    }

    #[test]
    fn limit_is_monotone(seed in any::<u64>(), k in 0u64..6) {
        let (g, mut ast) = random_case(seed);
        ast.limit = Some(k);
        let short = evaluate(&g, &ast).unwrap();
        ast.limit = Some(k + 1);
        let long = evaluate(&g, &ast).unwrap();
        prop_assert!(long.rows.starts_with(&short.rows));
        prop_assert!(short.rows.len() as u64 <= k);
    }

    #[test]
    fn subgraph_is_closed(seed in any::<u64>()) {
        let (g, ast) = random_case(seed);
        let rs = evaluate(&g, &ast).unwrap();
        for id in &rs.subgraph.edges {
            let e = g.edge(id).unwrap();
            prop_assert!(rs.subgraph.nodes.contains(&e.source));
            prop_assert!(rs.subgraph.nodes.contains(&e.target));
        }
        for row in &rs.rows {
            prop_assert_eq!(row.len(), rs.columns.len());
        }
    }
}
