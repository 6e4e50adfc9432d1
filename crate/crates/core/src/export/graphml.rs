//! GraphML 1.0 documents for graphs and cluster views.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use quick_xml::escape::{escape, resolve_predefined_entity};
use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};

use super::{check_cluster_view, ClusterEdge, ClusterNode, ClusterView, ImportError, SCHEMA_VERSION};
use crate::align::AlignmentStrategy;
use crate::graph::{GraphConfig, GraphEdge, GraphNode, Relation, WordGraph};
use crate::lemma::{Lemma, SliceId};

const HEADER: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns" xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" xsi:schemaLocation="http://graphml.graphdrawing.org/xmlns http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd">
"#;

struct Key {
    name: &'static str,
    domain: &'static str,
    ty: &'static str,
}

const fn key(name: &'static str, domain: &'static str, ty: &'static str) -> Key {
    Key { name, domain, ty }
}

const GRAPH_KEYS: &[Key] = &[
    key("schema_version", "graph", "int"),
    key("kind", "graph", "string"),
    key("target", "graph", "string"),
    key("slice_label", "graph", "string"),
    key("slice_ordinal", "graph", "int"),
    key("empty", "graph", "boolean"),
    key("depth", "graph", "int"),
    key("k_dist", "graph", "string"),
    key("k_sub", "graph", "string"),
    key("layer", "node", "int"),
    key("provenance", "node", "string"),
    key("relation", "edge", "string"),
    key("weight", "edge", "double"),
];

const CLUSTER_KEYS: &[Key] = &[
    key("schema_version", "graph", "int"),
    key("kind", "graph", "string"),
    key("target", "graph", "string"),
    key("slice_label", "graph", "string"),
    key("slice_ordinal", "graph", "int"),
    key("strategy", "graph", "string"),
    key("layer", "node", "int"),
    key("lineage", "node", "string"),
    key("color", "node", "int"),
    key("relation", "edge", "string"),
    key("weight", "edge", "double"),
    key("removed", "edge", "boolean"),
];

type Data = Vec<(&'static str, String)>;

struct Document {
    graph_id: String,
    graph: Data,
    nodes: Vec<(String, Data)>,
    edges: Vec<(String, String, Data)>,
}

fn write_data(out: &mut String, indent: &str, data: &Data) {
    for (k, v) in data {
        let _ = writeln!(out, r#"{indent}<data key="{k}">{}</data>"#, escape(v.as_str()));
    }
}

fn write_document(keys: &[Key], doc: &Document) -> String {
    let mut out = String::from(HEADER);
    for k in keys {
        let _ = writeln!(
            out,
            r#"  <key id="{0}" for="{1}" attr.name="{0}" attr.type="{2}"/>"#,
            k.name, k.domain, k.ty
        );
    }
    let _ = writeln!(out, r#"  <graph id="{}" edgedefault="undirected">"#, escape(doc.graph_id.as_str()));
    write_data(&mut out, "    ", &doc.graph);
    for (id, data) in &doc.nodes {
        let _ = writeln!(out, r#"    <node id="{}">"#, escape(id.as_str()));
        write_data(&mut out, "      ", data);
        out.push_str("    </node>\n");
    }
    for (i, (s, t, data)) in doc.edges.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"    <edge id="e{i}" source="{}" target="{}">"#,
            escape(s.as_str()),
            escape(t.as_str())
        );
        write_data(&mut out, "      ", data);
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

fn relations_text(relations: &BTreeSet<Relation>) -> String {
    relations.iter().map(|r| r.as_str()).collect::<Vec<_>>().join(" ")
}

fn join_ks(ks: &[usize]) -> String {
    ks.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn graph_header(kind: &str, target: &Lemma, slice: &SliceId) -> Data {
    vec![
        ("schema_version", SCHEMA_VERSION.to_string()),
        ("kind", kind.to_string()),
        ("target", target.to_string()),
        ("slice_label", slice.label.clone()),
        ("slice_ordinal", slice.ordinal.to_string()),
    ]
}

pub fn graph_to_graphml(graph: &WordGraph) -> String {
    let mut header = graph_header("word_graph", &graph.target, &graph.slice);
    header.extend([
        ("empty", graph.empty.to_string()),
        ("depth", graph.config.depth.to_string()),
        ("k_dist", join_ks(&graph.config.k_dist)),
        ("k_sub", join_ks(&graph.config.k_sub)),
    ]);
    let doc = Document {
        graph_id: format!("{}@{}", graph.target, graph.slice.label),
        graph: header,
        nodes: graph
            .nodes()
            .map(|n| {
                let provenance = n
                    .provenance
                    .iter()
                    .map(|(r, p)| format!("{r}={p}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                let mut data: Data = vec![("layer", n.layer.to_string())];
                if !provenance.is_empty() {
                    data.push(("provenance", provenance));
                }
                (n.lemma.to_string(), data)
            })
            .collect(),
        edges: graph
            .edges()
            .map(|e| {
                let mut data: Data = vec![("relation", relations_text(&e.relations))];
                if let Some(w) = e.weight {
                    data.push(("weight", w.to_string()));
                }
                (e.a.to_string(), e.b.to_string(), data)
            })
            .collect(),
    };
    write_document(GRAPH_KEYS, &doc)
}

pub fn clusters_to_graphml(view: &ClusterView) -> String {
    let mut header = graph_header("cluster_view", &view.target, &view.slice);
    header.push(("strategy", view.strategy.to_string()));
    let doc = Document {
        graph_id: format!("{}@{}", view.target, view.slice.label),
        graph: header,
        nodes: view
            .nodes
            .iter()
            .map(|n| {
                let mut data: Data = vec![("layer", n.layer.to_string())];
                if let Some(l) = n.lineage {
                    data.push(("lineage", l.to_string()));
                }
                if let Some(c) = n.color {
                    data.push(("color", c.to_string()));
                }
                (n.lemma.to_string(), data)
            })
            .collect(),
        edges: view
            .edges
            .iter()
            .map(|e| {
                let mut data: Data = vec![("relation", relations_text(&e.relations))];
                if let Some(w) = e.weight {
                    data.push(("weight", w.to_string()));
                }
                data.push(("removed", e.removed.to_string()));
                (e.a.to_string(), e.b.to_string(), data)
            })
            .collect(),
    };
    write_document(CLUSTER_KEYS, &doc)
}

/// Data values keyed by attribute name, with the element path for errors.
struct Element {
    path: String,
    data: BTreeMap<String, String>,
}

impl Element {
    fn get(&self, name: &str) -> Option<&str> {
        self.data.get(name).map(String::as_str)
    }

    fn require(&self, name: &str) -> Result<&str, ImportError> {
        self.get(name)
            .ok_or_else(|| ImportError::schema(format!("{}/data[{name}]", self.path), "missing"))
    }

    fn parse<T: std::str::FromStr>(&self, name: &str) -> Result<T, ImportError>
    where
        T::Err: std::fmt::Display,
    {
        self.require(name)?
            .parse()
            .map_err(|e| ImportError::schema(format!("{}/data[{name}]", self.path), e))
    }

    fn parse_opt<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>, ImportError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(name).map(|_| self.parse(name)).transpose()
    }

    fn lemma(&self, name: &str) -> Result<Lemma, ImportError> {
        self.parse(name)
    }
}

struct Parsed {
    graph: Element,
    nodes: Vec<(String, Element)>,
    edges: Vec<(String, String, Element)>,
}

fn xml_error(reader: &Reader<&[u8]>, e: impl std::fmt::Display) -> ImportError {
    ImportError::Xml {
        position: reader.buffer_position(),
        message: e.to_string(),
    }
}

fn attribute(reader: &Reader<&[u8]>, e: &BytesStart<'_>, name: &str) -> Result<Option<String>, ImportError> {
    for attr in e.attributes() {
        let attr = attr.map_err(|e| xml_error(reader, e))?;
        if attr.key.local_name().as_ref() == name {
            let value = attr.normalized_value(XmlVersion::Implicit1_0).map_err(|e| xml_error(reader, e))?;
            return Ok(Some(value.into_owned()));
        }
    }
    Ok(None)
}

enum Open {
    Graph,
    Node(String),
    Edge(String, String),
}

fn parse_document(bytes: &[u8]) -> Result<Parsed, ImportError> {
    let text = std::str::from_utf8(bytes).map_err(|e| ImportError::Xml {
        position: e.valid_up_to() as u64,
        message: e.to_string(),
    })?;
    let mut reader = Reader::from_str(text);
    // key id -> attr.name
    let mut keys: BTreeMap<String, String> = BTreeMap::new();
    let mut graph = Element {
        path: "graphml/graph".into(),
        data: BTreeMap::new(),
    };
    let mut nodes: Vec<(String, Element)> = Vec::new();
    let mut edges: Vec<(String, String, Element)> = Vec::new();
    let mut open: Option<Open> = None;
    let mut current = BTreeMap::new();
    let mut data_key: Option<String> = None;
    let mut text_buf = String::new();
    let mut saw_graph = false;

    loop {
        let event = reader.read_event().map_err(|e| xml_error(&reader, e))?;
        let empty = matches!(event, Event::Empty(_));
        match event {
            Event::Start(e) | Event::Empty(e) => {
                let name = e.local_name();
                match name.as_ref() {
                    "key" => {
                        let id = attribute(&reader, &e, "id")?
                            .ok_or_else(|| ImportError::schema("graphml/key", "missing id"))?;
                        let attr_name = attribute(&reader, &e, "attr.name")?.unwrap_or_else(|| id.clone());
                        keys.insert(id, attr_name);
                    }
                    "graph" => {
                        if saw_graph {
                            return Err(ImportError::schema("graphml/graph", "more than one graph"));
                        }
                        saw_graph = true;
                        if let Some(d) = attribute(&reader, &e, "edgedefault")? {
                            if d != "undirected" {
                                return Err(ImportError::schema("graphml/graph", format!("edgedefault must be undirected, found {d:?}")));
                            }
                        }
                        open = Some(Open::Graph);
                    }
                    "node" => {
                        let path = format!("graphml/graph/node[{}]", nodes.len());
                        let id = attribute(&reader, &e, "id")?.ok_or_else(|| ImportError::schema(&path, "missing id"))?;
                        if empty {
                            nodes.push((id, Element { path, data: BTreeMap::new() }));
                        } else {
                            current.clear();
                            open = Some(Open::Node(id));
                        }
                    }
                    "edge" => {
                        let path = format!("graphml/graph/edge[{}]", edges.len());
                        let source = attribute(&reader, &e, "source")?.ok_or_else(|| ImportError::schema(&path, "missing source"))?;
                        let target = attribute(&reader, &e, "target")?.ok_or_else(|| ImportError::schema(&path, "missing target"))?;
                        if empty {
                            edges.push((source, target, Element { path, data: BTreeMap::new() }));
                        } else {
                            current.clear();
                            open = Some(Open::Edge(source, target));
                        }
                    }
                    "data" => {
                        let key = attribute(&reader, &e, "key")?.ok_or_else(|| ImportError::schema("data", "missing key"))?;
                        let name = keys
                            .get(&key)
                            .cloned()
                            .ok_or_else(|| ImportError::schema("data", format!("undeclared key {key:?}")))?;
                        text_buf.clear();
                        if empty {
                            store_data(&open, &mut graph, &mut current, name, String::new());
                        } else {
                            data_key = Some(name);
                        }
                    }
                    _ => {}
                }
            }
            Event::Text(t) if data_key.is_some() => {
                text_buf.push_str(&t.xml_content(XmlVersion::Implicit1_0));
            }
            Event::CData(t) if data_key.is_some() => {
                text_buf.push_str(&t.xml_content(XmlVersion::Implicit1_0));
            }
            Event::GeneralRef(r) if data_key.is_some() => {
                match r.resolve_char_ref().map_err(|e| xml_error(&reader, e))? {
                    Some(c) => text_buf.push(c),
                    None => {
                        let name = r.into_inner();
                        let value = resolve_predefined_entity(&name)
                            .ok_or_else(|| xml_error(&reader, format!("unknown entity &{name};")))?;
                        text_buf.push_str(value);
                    }
                }
            }
            Event::End(e) => match e.local_name().as_ref() {
                "data" => {
                    if let Some(name) = data_key.take() {
                        store_data(&open, &mut graph, &mut current, name, std::mem::take(&mut text_buf));
                    }
                }
                "node" => {
                    if let Some(Open::Node(id)) = open.take() {
                        let path = format!("graphml/graph/node[{}]", nodes.len());
                        nodes.push((id, Element { path, data: std::mem::take(&mut current) }));
                        open = Some(Open::Graph);
                    }
                }
                "edge" => {
                    if let Some(Open::Edge(s, t)) = open.take() {
                        let path = format!("graphml/graph/edge[{}]", edges.len());
                        edges.push((s, t, Element { path, data: std::mem::take(&mut current) }));
                        open = Some(Open::Graph);
                    }
                }
                "graph" => open = None,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    if !saw_graph {
        return Err(ImportError::schema("graphml", "no graph element"));
    }
    let mut ids = BTreeSet::new();
    for (id, el) in &nodes {
        if !ids.insert(id.as_str()) {
            return Err(ImportError::schema(&el.path, format!("duplicate node id {id:?}")));
        }
    }
    for (s, t, el) in &edges {
        for end in [s, t] {
            if !ids.contains(end.as_str()) {
                return Err(ImportError::schema(
                    &el.path,
                    format!("edge {s:?}-{t:?} references undeclared node {end:?}"),
                ));
            }
        }
    }
    Ok(Parsed { graph, nodes, edges })
}

fn store_data(
    open: &Option<Open>,
    graph: &mut Element,
    current: &mut BTreeMap<String, String>,
    name: String,
    value: String,
) {
    match open {
        Some(Open::Node(_)) | Some(Open::Edge(..)) => {
            current.insert(name, value);
        }
        _ => {
            graph.data.insert(name, value);
        }
    }
}

fn parse_ks(el: &Element, name: &str) -> Result<Vec<usize>, ImportError> {
    el.require(name)?
        .split_whitespace()
        .map(|k| k.parse::<usize>().map_err(|e| ImportError::schema(format!("{}/data[{name}]", el.path), e)))
        .collect()
}

fn parse_relations(el: &Element) -> Result<BTreeSet<Relation>, ImportError> {
    el.require("relation")?
        .split_whitespace()
        .map(|r| {
            Relation::parse(r)
                .ok_or_else(|| ImportError::schema(format!("{}/data[relation]", el.path), format!("unknown relation {r:?}")))
        })
        .collect()
}

fn lemma_id(el: &Element, id: &str) -> Result<Lemma, ImportError> {
    Lemma::new(id).map_err(|e| ImportError::schema(&el.path, e))
}

fn check_kind(graph: &Element, expected: &str) -> Result<SliceId, ImportError> {
    let version: u32 = graph.parse("schema_version")?;
    if version != SCHEMA_VERSION {
        return Err(ImportError::Version(version));
    }
    let kind = graph.require("kind")?;
    if kind != expected {
        return Err(ImportError::schema(format!("{}/data[kind]", graph.path), format!("expected {expected}, found {kind}")));
    }
    Ok(SliceId::new(graph.parse("slice_ordinal")?, graph.require("slice_label")?))
}

pub fn graph_from_graphml(bytes: &[u8]) -> Result<WordGraph, ImportError> {
    let doc = parse_document(bytes)?;
    let g = &doc.graph;
    let slice = check_kind(g, "word_graph")?;
    let config = GraphConfig {
        depth: g.parse("depth")?,
        k_dist: parse_ks(g, "k_dist")?,
        k_sub: parse_ks(g, "k_sub")?,
    };
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for (id, el) in &doc.nodes {
        let mut provenance = BTreeMap::new();
        for token in el.get("provenance").unwrap_or("").split_whitespace() {
            let bad = || ImportError::schema(format!("{}/data[provenance]", el.path), format!("bad entry {token:?}"));
            let (r, parent) = token.split_once('=').ok_or_else(bad)?;
            let r = Relation::parse(r).ok_or_else(bad)?;
            provenance.insert(r, Lemma::new(parent).map_err(|_| bad())?);
        }
        nodes.push(GraphNode {
            lemma: lemma_id(el, id)?,
            layer: el.parse("layer")?,
            provenance,
        });
    }
    let mut edges = Vec::with_capacity(doc.edges.len());
    for (s, t, el) in &doc.edges {
        edges.push(GraphEdge {
            a: lemma_id(el, s)?,
            b: lemma_id(el, t)?,
            relations: parse_relations(el)?,
            weight: el.parse_opt("weight")?,
        });
    }
    WordGraph::from_parts(g.lemma("target")?, slice, config, g.parse("empty")?, nodes, edges).map_err(|source| {
        ImportError::Graph {
            path: "graphml/graph".into(),
            source,
        }
    })
}

pub fn clusters_from_graphml(bytes: &[u8]) -> Result<ClusterView, ImportError> {
    let doc = parse_document(bytes)?;
    let g = &doc.graph;
    let slice = check_kind(g, "cluster_view")?;
    let strategy: AlignmentStrategy = g.parse("strategy")?;
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for (id, el) in &doc.nodes {
        nodes.push(ClusterNode {
            lemma: lemma_id(el, id)?,
            layer: el.parse("layer")?,
            lineage: el.parse_opt("lineage")?,
            color: el.parse_opt("color")?,
        });
    }
    let mut edges = Vec::with_capacity(doc.edges.len());
    for (s, t, el) in &doc.edges {
        edges.push(ClusterEdge {
            a: lemma_id(el, s)?,
            b: lemma_id(el, t)?,
            relations: parse_relations(el)?,
            weight: el.parse_opt("weight")?,
            removed: el.parse("removed")?,
        });
    }
    let view = ClusterView {
        target: g.lemma("target")?,
        slice,
        strategy,
        nodes,
        edges,
    };
    check_cluster_view(&view)?;
    Ok(view)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<graphml xmlns="http://graphml.graphdrawing.org/xmlns">
  <key id="d0" for="graph" attr.name="schema_version" attr.type="int"/>
  <key id="d1" for="graph" attr.name="kind" attr.type="string"/>
  <key id="d2" for="graph" attr.name="target" attr.type="string"/>
  <key id="d3" for="graph" attr.name="slice_label" attr.type="string"/>
  <key id="d4" for="graph" attr.name="slice_ordinal" attr.type="int"/>
  <key id="d5" for="graph" attr.name="empty" attr.type="boolean"/>
  <key id="d6" for="graph" attr.name="depth" attr.type="int"/>
  <key id="d7" for="graph" attr.name="k_dist" attr.type="string"/>
  <key id="d8" for="graph" attr.name="k_sub" attr.type="string"/>
  <key id="n0" for="node" attr.name="layer" attr.type="int"/>
  <key id="n1" for="node" attr.name="provenance" attr.type="string"/>
  <key id="e0" for="edge" attr.name="relation" attr.type="string"/>
  <graph id="G" edgedefault="undirected">
    <data key="d0">1</data><data key="d1">word_graph</data><data key="d2">god</data>
    <data key="d3">1980</data><data key="d4">0</data><data key="d5">false</data>
    <data key="d6">1</data><data key="d7">3</data><data key="d8">6</data>
    <node id="god"><data key="n0">0</data></node>
    <node id="faith"><data key="n0">1</data><data key="n1">distributional=god</data></node>
    <edge source="god" target="faith"><data key="e0">distributional</data></edge>
    <edge source="god" target="heaven"><data key="e0">substitution</data></edge>
  </graph>
</graphml>"#;

    #[test]
    fn undeclared_edge_endpoint_is_named() {
        let err = graph_from_graphml(DOC.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("edge[1]") && msg.contains("heaven"), "{msg}");
    }

    #[test]
    fn foreign_key_ids_are_resolved_by_name() {
        let doc = DOC.replace(
            r#"    <edge source="god" target="heaven"><data key="e0">substitution</data></edge>
"#,
            "",
        );
        let g = graph_from_graphml(doc.as_bytes()).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.target.as_str(), "god");
    }

    #[test]
    fn escaped_text_survives() {
        let doc = DOC
            .replace(r#"<data key="d3">1980</data>"#, r#"<data key="d3">19&amp;80&#33;</data>"#)
            .replace(
                r#"    <edge source="god" target="heaven"><data key="e0">substitution</data></edge>
"#,
                "",
            );
        let g = graph_from_graphml(doc.as_bytes()).unwrap();
        assert_eq!(g.slice.label, "19&80!");
    }

    #[test]
    fn malformed_xml() {
        assert!(matches!(
            graph_from_graphml(b"<graphml><graph></graphml>"),
            Err(ImportError::Xml { .. })
        ));
    }
}
