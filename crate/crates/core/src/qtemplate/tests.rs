use std::collections::BTreeMap;

use proptest::prelude::*;
use serde_json::json;

use super::*;
use crate::graph::Properties;
use crate::ingest::{parse_templates, InputKind, TemplateInput};

const APPENDIX_TEMPLATE: &str = r#"[{
    "gid": "1",
    "cypher": "MATCH (p1)-[r:IS_FATHER_OF]->(p2) WHERE p2.lemma =~ \"{0}\" RETURN *",
    "input": [{"id": "p", "type": "entity"}],
    "output": ["p1", "r", "p2"],
    "texts": {"english": "Who is the father of {0}?"},
    "groups": {"english": "Kinship"}
}]"#;

fn father_of() -> QueryTemplate {
    parse_templates(APPENDIX_TEMPLATE.as_bytes()).unwrap().remove(0)
}

fn template(cypher: &str, inputs: usize) -> QueryTemplate {
    QueryTemplate {
        gid: "t".into(),
        cypher: cypher.into(),
        inputs: (0..inputs)
            .map(|i| TemplateInput {
                id: format!("i{i}"),
                kind: InputKind::Entity,
                raw: false,
            })
            .collect(),
        outputs: vec![],
        texts: BTreeMap::from([("english".into(), "Q {0}?".into())]),
        groups: BTreeMap::from([("english".into(), "G".into())]),
    }
}

fn args(values: &[&str]) -> Vec<String> {
    values.iter().map(|s| s.to_string()).collect()
}

fn lemma_graph(lemmas: &[&str]) -> PropertyGraph {
    let nodes = lemmas
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let mut properties = Properties::new();
            properties.insert("lemma".into(), json!(l));
            Node {
                id: format!("n{i}"),
                labels: ["PERSON".to_string()].into(),
                properties,
            }
        })
        .collect();
    PropertyGraph::new(nodes, vec![]).unwrap()
}

fn father_graph() -> PropertyGraph {
    let props = |lemma: &str| {
        let mut p = Properties::new();
        p.insert("lemma".into(), json!(lemma));
        p
    };
    PropertyGraph::new(
        vec![
            Node {
                id: "n1".into(),
                labels: ["PERSON".to_string()].into(),
                properties: props("Dasharatha"),
            },
            Node {
                id: "n2".into(),
                labels: ["PERSON".to_string(), "KING".to_string()].into(),
                properties: props("Rama"),
            },
        ],
        vec![Edge {
            id: "e0".into(),
            edge_type: "IS_FATHER_OF".into(),
            source: "n1".into(),
            target: "n2".into(),
            properties: Properties::new(),
        }],
    )
    .unwrap()
}

#[test]
fn appendix_template_instantiates() {
    let inst = instantiate(&father_of(), "english", &args(&["Rama"])).unwrap();
    assert_eq!(inst.question, "Who is the father of Rama?");
    assert_eq!(
        inst.query,
        r#"MATCH (p1)-[r:IS_FATHER_OF]->(p2) WHERE p2.lemma =~ "Rama" RETURN *"#
    );
    assert_eq!(inst.gid, "1");
    // same inputs, same strings
    assert_eq!(instantiate(&father_of(), "english", &args(&["Rama"])).unwrap(), inst);
}

#[test]
fn quotes_are_rejected() {
    for bad in ["a\"b", "it's", "`x`"] {
        assert!(
            matches!(
                instantiate(&father_of(), "english", &args(&[bad])),
                Err(TemplateError::RejectedInput { index: 0, .. })
            ),
            "{bad}"
        );
    }
    assert!(matches!(
        instantiate(&father_of(), "english", &args(&[""])),
        Err(TemplateError::RejectedInput { .. })
    ));
}

#[test]
fn regex_metacharacters_match_literally() {
    let inst = instantiate(&template(r#"MATCH (n) WHERE n.lemma =~ "{0}" RETURN n"#, 1), "english", &args(&["C++"])).unwrap();
    assert_eq!(inst.query, r#"MATCH (n) WHERE n.lemma =~ "C\\+\\+" RETURN n"#);
    let g = lemma_graph(&["C++", "CC+", "C"]);
    let rs = qengine::run(&g, &inst.query).unwrap();
    assert_eq!(rs.rows, [["n0"]]);

    let wild = instantiate(&father_of(), "english", &args(&[".*"])).unwrap();
    assert!(qengine::run(&father_graph(), &wild.query).unwrap().rows.is_empty());
}

#[test]
fn raw_inputs_keep_regex_power() {
    let mut t = template(r#"MATCH (n) WHERE n.lemma =~ '{0}' RETURN n"#, 1);
    t.inputs[0].raw = true;
    let inst = instantiate(&t, "english", &args(&["Ra\\w+"])).unwrap();
    assert_eq!(inst.query, r#"MATCH (n) WHERE n.lemma =~ 'Ra\\w+' RETURN n"#);
    let g = lemma_graph(&["Rama", "Ravana", "Sita"]);
    assert_eq!(qengine::run(&g, &inst.query).unwrap().rows.len(), 2);
    let bad = instantiate(&t, "english", &args(&["(("])).unwrap();
    assert!(matches!(qengine::run(&g, &bad.query), Err(QueryError::Regex { .. })));
}

#[test]
fn placeholder_contexts() {
    let t = template(r#"MATCH (n:{0}) WHERE n.lemma = "{1}" AND n.`{1}` = 1 RETURN n"#, 2);
    let inst = instantiate(&t, "english", &args(&["PERSON", "a\\b {x}"])).unwrap();
    assert_eq!(inst.query, r#"MATCH (n:PERSON) WHERE n.lemma = "a\\b {x}" AND n.`a\b {x}` = 1 RETURN n"#);
    let g = lemma_graph(&["a\\b {x}"]);
    assert_eq!(qengine::run(&g, &inst.query).unwrap().rows.len(), 0);
    let t = template(r#"MATCH (n:{0}) WHERE n.lemma = "{1}" RETURN n"#, 2);
    let inst = instantiate(&t, "english", &args(&["PERSON", "a\\b {x}"])).unwrap();
    assert_eq!(qengine::run(&g, &inst.query).unwrap().rows.len(), 1);

    for bad in ["PER SON", "RETURN", "a)-->(b", "x.y"] {
        assert!(
            matches!(
                instantiate(&t, "english", &args(&[bad, "x"])),
                Err(TemplateError::RejectedInput { index: 0, .. })
            ),
            "{bad}"
        );
    }
    // `=~` followed by a non-literal does not make the next literal a regex
    let t = template(r#"MATCH (n) WHERE n.lemma =~ "x" OR n.lemma = "{0}" RETURN n"#, 1);
    let inst = instantiate(&t, "english", &args(&["C++"])).unwrap();
    assert!(inst.query.ends_with(r#"n.lemma = "C++" RETURN n"#), "{}", inst.query);
}

#[test]
fn arity_language_and_definition_errors() {
    let t = father_of();
    assert!(matches!(
        instantiate(&t, "english", &[]),
        Err(TemplateError::Arity { expected: 1, got: 0, .. })
    ));
    assert!(matches!(
        instantiate(&t, "klingon", &args(&["x"])),
        Err(TemplateError::UnknownLanguage { .. })
    ));
    let broken = template("MATCH (n RETURN n WHERE {0}", 1);
    let err = instantiate(&broken, "english", &args(&["x"])).unwrap_err();
    assert!(matches!(&err, TemplateError::Definition { gid, .. } if gid == "t"), "{err}");
    assert!(lint(&broken).is_err());
    assert!(lint(&t).is_ok());
    assert!(lint(&template(r#"MATCH (n:{0}) WHERE n.x = "{0}" RETURN n"#, 1)).is_ok());
}

#[test]
fn run_father_of() {
    let g = father_graph();
    let out = run(&g, &father_of(), "english", &args(&["Rama"])).unwrap();
    assert_eq!(out.output.columns, ["p1", "r", "p2"]);
    assert_eq!(out.output.rows, [["Dasharatha (PERSON)", "IS_FATHER_OF", "Rama (KING, PERSON)"]]);
    assert_eq!(out.output.subgraph.nodes.len(), 2);
    assert_eq!(out.output.subgraph.edges.len(), 1);

    let none = run(&g, &father_of(), "english", &args(&["Sita"])).unwrap();
    assert!(none.output.rows.is_empty());
    assert!(none.output.subgraph.nodes.is_empty() && none.output.subgraph.edges.is_empty());
}

#[test]
fn outputs_project_columns() {
    let g = father_graph();
    let mut t = father_of();
    t.outputs = vec!["p1".into(), "missing".into()];
    let out = run(&g, &t, "english", &args(&["Rama"])).unwrap();
    assert_eq!(out.output.columns, ["p1"]);
    assert_eq!(out.output.rows, [["Dasharatha (PERSON)"]]);
    // the graph view still shows the whole match
    assert_eq!(out.output.subgraph.nodes.len(), 2);
    t.outputs.clear();
    assert_eq!(run(&g, &t, "english", &args(&["Rama"])).unwrap().output.columns.len(), 3);
}

#[test]
fn projection_drops_duplicate_rows() {
    let mut t = template(r#"MATCH (a)-[r]->(b) WHERE a.lemma = "{0}" RETURN *"#, 1);
    t.outputs = vec!["a".into()];
    let mut nodes = Vec::new();
    for (id, lemma) in [("x", "X"), ("y", "Y"), ("z", "Z")] {
        let mut properties = Properties::new();
        properties.insert("lemma".into(), json!(lemma));
        nodes.push(Node {
            id: id.into(),
            labels: ["P".to_string()].into(),
            properties,
        });
    }
    let edge = |id: &str, t: &str| Edge {
        id: id.into(),
        edge_type: "R".into(),
        source: "x".into(),
        target: t.into(),
        properties: Properties::new(),
    };
    let g = PropertyGraph::new(nodes, vec![edge("e1", "y"), edge("e2", "z")]).unwrap();
    let out = run(&g, &t, "english", &args(&["X"])).unwrap();
    assert_eq!(out.output.rows, [["X (P)"]]);
}

fn sample_output() -> QueryOutput {
    run(&father_graph(), &father_of(), "english", &args(&["Rama"])).unwrap().output
}

#[test]
fn csv_export() {
    let out = sample_output();
    let csv = String::from_utf8(export_result(&out, ExportFormat::Csv)).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert_eq!(csv, "p1,r,p2\r\nDasharatha (PERSON),IS_FATHER_OF,\"Rama (KING, PERSON)\"\r\n");
    let empty = QueryOutput {
        rows: vec![],
        ..out.clone()
    };
    let csv = String::from_utf8(export_result(&empty, ExportFormat::Csv)).unwrap();
    assert_eq!(csv.lines().collect::<Vec<_>>(), ["p1,r,p2"]);
}

#[test]
fn exports_are_deterministic() {
    for format in [ExportFormat::Csv, ExportFormat::Json, ExportFormat::Text] {
        let a = export_result(&sample_output(), format);
        let b = export_result(&sample_output(), format);
        assert_eq!(a, b, "{format:?}");
    }
}

#[test]
fn json_and_text_exports() {
    let out = sample_output();
    let v: serde_json::Value = serde_json::from_slice(&export_result(&out, ExportFormat::Json)).unwrap();
    assert_eq!(v["columns"], json!(["p1", "r", "p2"]));
    assert_eq!(v["rows"][0][1], "IS_FATHER_OF");
    assert_eq!(v["subgraph"]["nodes"][1]["properties"]["lemma"], "Rama");
    assert_eq!(v["subgraph"]["edges"][0]["type"], "IS_FATHER_OF");
    assert_eq!(v["subgraph"]["edges"][0]["source"], "n1");

    let text = String::from_utf8(export_result(&out, ExportFormat::Text)).unwrap();
    assert_eq!(
        text,
        "p1                   r             p2\n\
         -------------------  ------------  -------------------\n\
         Dasharatha (PERSON)  IS_FATHER_OF  Rama (KING, PERSON)\n"
    );
    assert_eq!("TXT".parse::<ExportFormat>().unwrap(), ExportFormat::Text);
    assert!("xml".parse::<ExportFormat>().is_err());
}

proptest! {
    #[test]
    fn csv_round_trips(rows in prop::collection::vec(prop::collection::vec("(?s).{0,8}", 2), 0..6)) {
        let out = QueryOutput {
            columns: vec!["a".into(), "b,\"c\"".into()],
            rows: rows.clone(),
            subgraph: SubgraphOutput { nodes: vec![], edges: vec![] },
        };
        let bytes = export_result(&out, ExportFormat::Csv);
        let mut reader = csv::ReaderBuilder::new().from_reader(bytes.as_slice());
        let header: Vec<String> = reader.headers().unwrap().iter().map(str::to_string).collect();
        prop_assert_eq!(header, out.columns);
        let back: Vec<Vec<String>> = reader
            .records()
            .map(|r| r.unwrap().iter().map(str::to_string).collect())
            .collect();
        prop_assert_eq!(back, rows);
    }

    /// Any accepted input yields a parseable query whose `=~` literal
    /// matches exactly the input string.
    #[test]
    fn escaped_input_matches_itself(input in "(?s).{1,12}", other in "(?s).{1,12}") {
        let t = template(r#"MATCH (n) WHERE n.lemma =~ "{0}" RETURN n"#, 1);
        match instantiate(&t, "english", std::slice::from_ref(&input)) {
            Ok(inst) => {
                let g = lemma_graph(&[&input, &other]);
                let rows = qengine::run(&g, &inst.query).unwrap().rows;
                let mut expected = vec![vec!["n0".to_string()]];
                if other == input {
                    expected.push(vec!["n1".to_string()]);
                }
                prop_assert_eq!(rows, expected);
            }
            Err(TemplateError::RejectedInput { .. }) => {
                prop_assert!(input.contains(['"', '\'', '`']));
            }
            Err(e) => prop_assert!(false, "{}", e),
        }
    }
}
