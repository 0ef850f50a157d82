//! Plain-text formats for graph instances and path collections.
//!
//! Both formats are line-oriented and sectioned. A section starts with a
//! header `# graph <id>`; unknown trailing header tokens are ignored, and
//! `key=value` tokens are kept as annotations. A graph section body is a
//! node count followed by `tail head flow` edge lines. A paths section body
//! (ground truth or solver output) is one `weight v0 v1 ... vk` line per
//! path. Blank lines and other `#` comments are skipped; CRLF is accepted.

use std::collections::HashSet;

use crate::graph::{build_dag, FlowGraph, GraphError, PseudoFlow};

#[derive(thiserror::Error, Debug)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate section id {id:?}")]
    DuplicateSection { line: usize, id: String },
    #[error("section {id:?}: {source}")]
    Graph { id: String, source: GraphError },
}

pub type Result<T> = std::result::Result<T, IoError>;

/// One named instance: a DAG together with edge values.
#[derive(Debug, Clone)]
pub struct GraphSection {
    pub id: String,
    pub graph: FlowGraph,
    pub flow: PseudoFlow,
}

/// One named collection of weighted paths, as node sequences. Solver output
/// and ground truth share this shape.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSection {
    pub id: String,
    pub annotations: Vec<(String, String)>,
    pub entries: Vec<(f64, Vec<usize>)>,
}

impl PathSection {
    pub fn new(id: impl Into<String>, entries: Vec<(f64, Vec<usize>)>) -> Self {
        PathSection {
            id: id.into(),
            annotations: Vec::new(),
            entries,
        }
    }

    pub fn annotation(&self, key: &str) -> Option<&str> {
        self.annotations
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// The `time=<seconds>` annotation, when present and numeric.
    pub fn time_annotation(&self) -> Option<f64> {
        self.annotation("time").and_then(|v| v.parse().ok())
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

/// Header line → (id, annotations), or None if the line is not a header.
fn parse_header(line: &str) -> Option<(String, Vec<(String, String)>)> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("#") || tokens.next() != Some("graph") {
        return None;
    }
    let id = tokens.next()?.to_string();
    let annotations = tokens
        .filter_map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
        })
        .collect();
    Some((id, annotations))
}

/// Numbered, CRLF-normalized, non-blank lines.
fn meaningful_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, raw)| (i + 1, raw.trim_end_matches('\r').trim()))
        .filter(|(_, line)| !line.is_empty())
}

/// Parses a sectioned graph file into instances, in file order.
pub fn parse_graphs(text: &str) -> Result<Vec<GraphSection>> {
    struct Pending {
        id: String,
        header_line: usize,
        node_count: Option<usize>,
        edges: Vec<(usize, usize)>,
        flows: Vec<f64>,
    }

    fn finish(p: Pending) -> Result<GraphSection> {
        let node_count = p
            .node_count
            .ok_or_else(|| parse_err(p.header_line, "section has no node-count line"))?;
        let wrap = |source: GraphError| IoError::Graph {
            id: p.id.clone(),
            source,
        };
        let graph = build_dag(node_count, p.edges).map_err(wrap)?;
        let flow = PseudoFlow::new(p.flows).map_err(wrap)?;
        Ok(GraphSection {
            id: p.id,
            graph,
            flow,
        })
    }

    let mut seen: HashSet<String> = HashSet::new();
    let mut sections = Vec::new();
    let mut current: Option<Pending> = None;
    for (line_no, line) in meaningful_lines(text) {
        if let Some((id, _)) = parse_header(line) {
            if let Some(p) = current.take() {
                sections.push(finish(p)?);
            }
            if !seen.insert(id.clone()) {
                return Err(IoError::DuplicateSection { line: line_no, id });
            }
            current = Some(Pending {
                id,
                header_line: line_no,
                node_count: None,
                edges: Vec::new(),
                flows: Vec::new(),
            });
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let p = current
            .as_mut()
            .ok_or_else(|| parse_err(line_no, "data before the first section header"))?;
        if p.node_count.is_none() {
            let n = line
                .parse::<usize>()
                .map_err(|_| parse_err(line_no, format!("expected a node count, got {line:?}")))?;
            p.node_count = Some(n);
            continue;
        }
        let mut tokens = line.split_whitespace();
        let mut next = |what: &str| {
            tokens
                .next()
                .ok_or_else(|| parse_err(line_no, format!("edge line missing {what}")))
        };
        let tail = next("tail")?
            .parse::<usize>()
            .map_err(|_| parse_err(line_no, "edge tail is not a node id"))?;
        let head = next("head")?
            .parse::<usize>()
            .map_err(|_| parse_err(line_no, "edge head is not a node id"))?;
        let flow = next("flow")?
            .parse::<f64>()
            .map_err(|_| parse_err(line_no, "edge flow is not a number"))?;
        if tokens.next().is_some() {
            return Err(parse_err(line_no, "trailing tokens after edge flow"));
        }
        p.edges.push((tail, head));
        p.flows.push(flow);
    }
    if let Some(p) = current.take() {
        sections.push(finish(p)?);
    }
    Ok(sections)
}

/// Parses a sectioned paths file (ground truth or solver output), in file
/// order. Sections may be empty; weights must be positive and finite.
pub fn parse_paths(text: &str) -> Result<Vec<PathSection>> {
    let mut seen: HashSet<String> = HashSet::new();
    let mut sections: Vec<PathSection> = Vec::new();
    for (line_no, line) in meaningful_lines(text) {
        if let Some((id, annotations)) = parse_header(line) {
            if !seen.insert(id.clone()) {
                return Err(IoError::DuplicateSection { line: line_no, id });
            }
            sections.push(PathSection {
                id,
                annotations,
                entries: Vec::new(),
            });
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| parse_err(line_no, "data before the first section header"))?;
        let mut tokens = line.split_whitespace();
        let weight = tokens
            .next()
            .expect("non-blank line has a token")
            .parse::<f64>()
            .map_err(|_| parse_err(line_no, "path weight is not a number"))?;
        if !weight.is_finite() || weight <= 0.0 {
            return Err(parse_err(
                line_no,
                format!("path weight must be positive and finite, got {weight}"),
            ));
        }
        let nodes = tokens
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| parse_err(line_no, format!("bad node id {tok:?} in path")))
            })
            .collect::<Result<Vec<usize>>>()?;
        if nodes.len() < 2 {
            return Err(parse_err(line_no, "a path needs at least two nodes"));
        }
        section.entries.push((weight, nodes));
    }
    Ok(sections)
}

fn render_header(out: &mut String, id: &str, annotations: &[(String, String)]) {
    out.push_str("# graph ");
    out.push_str(id);
    for (k, v) in annotations {
        out.push_str(&format!(" {k}={v}"));
    }
    out.push('\n');
}

/// Renders graph sections in the format `parse_graphs` reads.
pub fn render_graphs(sections: &[GraphSection]) -> String {
    let mut out = String::new();
    for s in sections {
        render_header(&mut out, &s.id, &[]);
        out.push_str(&format!("{}\n", s.graph.node_count()));
        for (e, &(tail, head)) in s.graph.edges().iter().enumerate() {
            out.push_str(&format!("{tail} {head} {}\n", s.flow.values()[e]));
        }
    }
    out
}

/// Renders path sections in the format `parse_paths` reads.
pub fn render_paths(sections: &[PathSection]) -> String {
    let mut out = String::new();
    for s in sections {
        render_header(&mut out, &s.id, &s.annotations);
        for (weight, nodes) in &s.entries {
            out.push_str(&format!("{weight}"));
            for v in nodes {
                out.push_str(&format!(" {v}"));
            }
            out.push('\n');
        }
    }
    out
}
