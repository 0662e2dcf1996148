//! Property graph built from annotations, plus its JSONL interchange format.
//!
//! Nodes are lemmas (`n{lexicon_id}`), labelled with every node type the
//! lemma was annotated with; relation endpoints that never received an entity
//! annotation carry [`UNTYPED`]. Edges are distinct
//! `(source, target, type, detail)` tuples.
//!
//! JSONL layout, one object per line, nodes first:
//!
//! ```text
//! {"kind":"node","id":"n1","labels":["PERSON"],"properties":{"lemma":"Ugrasrava",...}}
//! {"kind":"edge","id":"e0","type":"IS_SON_OF","source":"n1","target":"n2","properties":{...}}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write as _;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::store::{queries, Annotation, CurationState, Id, OntologyKind, Store, StoreError};

/// Label given to relation endpoints without any entity annotation.
pub const UNTYPED: &str = "UNTYPED";

/// File name of the exported graph inside the store directory.
pub const SNAPSHOT_FILE: &str = "graph.jsonl";

pub type Properties = BTreeMap<String, Value>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub labels: BTreeSet<String>,
    pub properties: Properties,
}

impl Node {
    pub fn lemma(&self) -> &str {
        self.properties.get("lemma").and_then(Value::as_str).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    #[serde(rename = "type")]
    pub edge_type: String,
    pub source: String,
    pub target: String,
    pub properties: Properties,
}

impl Edge {
    pub fn detail(&self) -> Option<&str> {
        self.properties.get("detail").and_then(Value::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildPolicy {
    pub include_states: BTreeSet<CurationState>,
    /// `None` selects every corpus.
    pub corpus_ids: Option<BTreeSet<Id>>,
}

impl Default for BuildPolicy {
    fn default() -> Self {
        BuildPolicy {
            include_states: [CurationState::Proposed, CurationState::Kept].into(),
            corpus_ids: None,
        }
    }
}

impl BuildPolicy {
    pub fn curated_only() -> Self {
        BuildPolicy {
            include_states: [CurationState::Kept].into(),
            corpus_ids: None,
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.include_states.is_empty() {
            return Err(GraphError::Policy("include_states must not be empty".into()));
        }
        if self.include_states.contains(&CurationState::Discarded) {
            return Err(GraphError::Policy("discarded annotations cannot be included".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid build policy: {0}")]
    Policy(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("line {line}: edge {edge} references missing node {node}")]
    DanglingEdge { line: usize, edge: String, node: String },
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Immutable property graph with label and adjacency indexes.
#[derive(Debug, Clone)]
pub struct PropertyGraph {
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<String, Edge>,
    built_at: DateTime<Utc>,
    policy: Option<BuildPolicy>,
    by_label: BTreeMap<String, Vec<String>>,
    outgoing: HashMap<String, Vec<String>>,
    incoming: HashMap<String, Vec<String>>,
}

impl Default for PropertyGraph {
    fn default() -> Self {
        PropertyGraph::new(Vec::new(), Vec::new()).expect("empty graph is valid")
    }
}

impl PropertyGraph {
    /// Assemble a graph, checking id uniqueness, non-empty labels and lemmas,
    /// and edge endpoint closure.
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let mut g = PropertyGraph {
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            built_at: Utc::now(),
            policy: None,
            by_label: BTreeMap::new(),
            outgoing: HashMap::new(),
            incoming: HashMap::new(),
        };
        for node in nodes {
            check_node(&node).map_err(GraphError::Invalid)?;
            if g.nodes.contains_key(&node.id) {
                return Err(GraphError::Invalid(format!("duplicate node id {}", node.id)));
            }
            g.nodes.insert(node.id.clone(), node);
        }
        for edge in edges {
            if let Some(missing) = g.missing_endpoint(&edge) {
                return Err(GraphError::Invalid(format!(
                    "edge {} references missing node {missing}",
                    edge.id
                )));
            }
            if g.edges.contains_key(&edge.id) || g.nodes.contains_key(&edge.id) {
                return Err(GraphError::Invalid(format!("duplicate id {}", edge.id)));
            }
            g.edges.insert(edge.id.clone(), edge);
        }
        g.index();
        Ok(g)
    }

    fn missing_endpoint(&self, edge: &Edge) -> Option<String> {
        [&edge.source, &edge.target]
            .into_iter()
            .find(|id| !self.nodes.contains_key(*id))
            .cloned()
    }

    fn index(&mut self) {
        for node in self.nodes.values() {
            for label in &node.labels {
                self.by_label.entry(label.clone()).or_default().push(node.id.clone());
            }
        }
        for edge in self.edges.values() {
            self.outgoing.entry(edge.source.clone()).or_default().push(edge.id.clone());
            self.incoming.entry(edge.target.clone()).or_default().push(edge.id.clone());
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.values()
    }

    pub fn node(&self, id: &str) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edges.get(id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Ids of nodes carrying `label`, in id order.
    pub fn nodes_with_label(&self, label: &str) -> &[String] {
        self.by_label.get(label).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn outgoing(&self, node: &str) -> &[String] {
        self.outgoing.get(node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn incoming(&self, node: &str) -> &[String] {
        self.incoming.get(node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn built_at(&self) -> DateTime<Utc> {
        self.built_at
    }

    /// Policy used by [`build_graph`]; `None` for imported graphs.
    pub fn policy(&self) -> Option<&BuildPolicy> {
        self.policy.as_ref()
    }

    /// Equality of nodes and edges, ignoring build metadata.
    pub fn same_content(&self, other: &PropertyGraph) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

fn check_node(node: &Node) -> Result<(), String> {
    if node.labels.is_empty() {
        return Err(format!("node {} has no labels", node.id));
    }
    match node.properties.get("lemma") {
        Some(Value::String(s)) if !s.is_empty() => Ok(()),
        _ => Err(format!("node {} needs a non-empty string lemma", node.id)),
    }
}

#[derive(Default)]
struct NodeAcc {
    labels: BTreeSet<String>,
    lines: BTreeSet<Id>,
    annotators: BTreeSet<Id>,
}

#[derive(Default)]
struct EdgeAcc {
    lines: BTreeSet<Id>,
}

/// Fold the annotations selected by `policy` into a graph. Reads one
/// consistent snapshot of the store.
pub fn build_graph(store: &Store, policy: &BuildPolicy) -> Result<PropertyGraph, GraphError> {
    policy.validate()?;
    let (annotations, lemmas, node_types, relation_types) = store.read(|c| -> Result<_, StoreError> {
        let annotations = queries::annotations_for_build(c, &policy.include_states, policy.corpus_ids.as_ref())?;
        let lemmas: HashMap<Id, String> = queries::lexicon_usage(c)?
            .into_iter()
            .map(|(e, _)| (e.id, e.lemma))
            .collect();
        let labels = |kind| -> Result<HashMap<Id, String>, StoreError> {
            Ok(queries::types(c, kind)?.into_iter().map(|t| (t.id, t.label)).collect())
        };
        Ok((annotations, lemmas, labels(OntologyKind::Node)?, labels(OntologyKind::Relation)?))
    })?;

    let lookup = |map: &HashMap<Id, String>, id: Id, what: &str| {
        map.get(&id)
            .cloned()
            .ok_or_else(|| GraphError::Invalid(format!("dangling {what} reference {id}")))
    };

    let mut nodes: BTreeMap<Id, NodeAcc> = BTreeMap::new();
    let mut edges: BTreeMap<(String, String, String, Option<String>), (Id, Id, EdgeAcc)> = BTreeMap::new();
    for ann in &annotations {
        match ann {
            Annotation::Entity(e) => {
                let acc = nodes.entry(e.lexicon_id).or_default();
                acc.labels.insert(lookup(&node_types, e.node_type_id, "node type")?);
                acc.lines.insert(e.line_id);
                acc.annotators.insert(e.annotator_id);
            }
            Annotation::Relation(r) => {
                for lex in [r.source_lexicon_id, r.target_lexicon_id] {
                    let acc = nodes.entry(lex).or_default();
                    acc.lines.insert(r.line_id);
                    acc.annotators.insert(r.annotator_id);
                }
                let key = (
                    lookup(&lemmas, r.source_lexicon_id, "lexicon")?,
                    lookup(&lemmas, r.target_lexicon_id, "lexicon")?,
                    lookup(&relation_types, r.relation_type_id, "relation type")?,
                    r.detail.clone(),
                );
                edges
                    .entry(key)
                    .or_insert_with(|| (r.source_lexicon_id, r.target_lexicon_id, EdgeAcc::default()))
                    .2
                    .lines
                    .insert(r.line_id);
            }
        }
    }

    let node_list = nodes
        .into_iter()
        .map(|(lex, acc)| {
            let mut labels = acc.labels;
            if labels.is_empty() {
                labels.insert(UNTYPED.to_string());
            }
            let mut properties = Properties::new();
            properties.insert("lemma".into(), Value::String(lookup(&lemmas, lex, "lexicon")?));
            properties.insert("line_ids".into(), ids_value(&acc.lines));
            properties.insert("annotator_count".into(), Value::from(acc.annotators.len()));
            Ok(Node {
                id: node_id(lex),
                labels,
                properties,
            })
        })
        .collect::<Result<Vec<_>, GraphError>>()?;
    let edge_list = edges
        .into_iter()
        .enumerate()
        .map(|(i, ((_, _, ty, detail), (src, tgt, acc)))| {
            let mut properties = Properties::new();
            if let Some(detail) = detail {
                properties.insert("detail".into(), Value::String(detail));
            }
            properties.insert("line_ids".into(), ids_value(&acc.lines));
            Edge {
                id: format!("e{i}"),
                edge_type: ty,
                source: node_id(src),
                target: node_id(tgt),
                properties,
            }
        })
        .collect();

    let mut graph = PropertyGraph::new(node_list, edge_list)?;
    graph.policy = Some(policy.clone());
    Ok(graph)
}

fn node_id(lexicon_id: Id) -> String {
    format!("n{lexicon_id}")
}

fn ids_value(ids: &BTreeSet<Id>) -> Value {
    Value::Array(ids.iter().map(|&i| Value::from(i)).collect())
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum Record {
    Node {
        id: String,
        labels: BTreeSet<String>,
        properties: Properties,
    },
    Edge {
        id: String,
        #[serde(rename = "type")]
        edge_type: String,
        source: String,
        target: String,
        properties: Properties,
    },
}

/// Serialize to JSONL: nodes in id order, then edges in id order.
pub fn export_jsonl(graph: &PropertyGraph) -> Vec<u8> {
    let mut out = Vec::new();
    for n in graph.nodes() {
        let rec = Record::Node {
            id: n.id.clone(),
            labels: n.labels.clone(),
            properties: n.properties.clone(),
        };
        serde_json::to_writer(&mut out, &rec).expect("in-memory write");
        out.push(b'\n');
    }
    for e in graph.edges() {
        let rec = Record::Edge {
            id: e.id.clone(),
            edge_type: e.edge_type.clone(),
            source: e.source.clone(),
            target: e.target.clone(),
            properties: e.properties.clone(),
        };
        serde_json::to_writer(&mut out, &rec).expect("in-memory write");
        out.push(b'\n');
    }
    out
}

/// Parse JSONL produced by [`export_jsonl`] (or any file following the same
/// layout). Blank lines are ignored; line numbers in errors are 1-based.
pub fn import_jsonl(bytes: &[u8]) -> Result<PropertyGraph, GraphError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        GraphError::Format {
            line,
            message: format!("invalid UTF-8 at byte {}", e.valid_up_to()),
        }
    })?;
    let mut nodes: BTreeMap<String, Node> = BTreeMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut ids: BTreeSet<String> = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let format_err = |message: String| GraphError::Format { line, message };
        let record: Record = serde_json::from_str(raw).map_err(|e| format_err(e.to_string()))?;
        match record {
            Record::Node { id, labels, properties } => {
                if !edges.is_empty() {
                    return Err(format_err(format!("node {id} after the first edge")));
                }
                let node = Node { id, labels, properties };
                check_node(&node).map_err(format_err)?;
                if !ids.insert(node.id.clone()) {
                    return Err(format_err(format!("duplicate id {}", node.id)));
                }
                nodes.insert(node.id.clone(), node);
            }
            Record::Edge {
                id,
                edge_type,
                source,
                target,
                properties,
            } => {
                for endpoint in [&source, &target] {
                    if !nodes.contains_key(endpoint) {
                        return Err(GraphError::DanglingEdge {
                            line,
                            edge: id,
                            node: endpoint.clone(),
                        });
                    }
                }
                if !ids.insert(id.clone()) {
                    return Err(format_err(format!("duplicate id {id}")));
                }
                edges.push(Edge {
                    id,
                    edge_type,
                    source,
                    target,
                    properties,
                });
            }
        }
    }
    PropertyGraph::new(nodes.into_values().collect(), edges)
}

/// Write the graph to `<dir>/graph.jsonl` via a temporary file and rename.
pub fn save_snapshot(graph: &PropertyGraph, dir: &Path) -> Result<(), GraphError> {
    let tmp = dir.join(format!("{SNAPSHOT_FILE}.tmp"));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&export_jsonl(graph))?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, dir.join(SNAPSHOT_FILE))?;
    Ok(())
}

/// Load `<dir>/graph.jsonl` if present.
pub fn load_snapshot(dir: &Path) -> Result<Option<PropertyGraph>, GraphError> {
    match std::fs::read(dir.join(SNAPSHOT_FILE)) {
        Ok(bytes) => import_jsonl(&bytes).map(Some),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}
