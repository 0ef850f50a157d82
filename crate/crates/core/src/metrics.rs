//! Scoring decompositions against ground truth, plus batch reporting.
//!
//! `path_error` counts wrong paths (weight mismatches and misses on both
//! sides by default), `flow_error` is the Euclidean distance between the
//! reconstructed and true flows, and batch summaries aggregate with an
//! arithmetic mean and a shifted geometric mean so zero errors stay
//! representable.

use std::collections::HashMap;

use crate::decompose::Decomposition;
use crate::graph::FlowGraph;
use crate::lmo::{PathError, PathVertex};
use crate::vecmath::dist;

/// Two weights count as equal when both are integers and identical, or
/// within this tolerance otherwise.
const WEIGHT_TOL: f64 = 1e-6;

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum MetricsError {
    #[error("solution and truth are over different graphs: {left} vs {right} edges")]
    GraphMismatch { left: usize, right: usize },
    #[error("empty value list")]
    EmptyList,
    #[error("shift must be positive, got {0}")]
    InvalidShift(f64),
    #[error("ground-truth weights must be positive, got {0}")]
    NonPositiveWeight(f64),
    #[error(transparent)]
    Path(#[from] PathError),
}

pub type Result<T> = std::result::Result<T, MetricsError>;

/// The true decomposition of an instance: paths, positive weights, and the
/// exact flow they carry.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    paths: Vec<PathVertex>,
    weights: Vec<f64>,
    true_flow: Vec<f64>,
}

impl GroundTruth {
    /// Builds ground truth from weighted node sequences, validating each
    /// path against the graph. Duplicate paths merge by summing weights.
    pub fn from_entries(g: &FlowGraph, entries: &[(f64, Vec<usize>)]) -> Result<Self> {
        let mut paths: Vec<PathVertex> = Vec::with_capacity(entries.len());
        let mut weights: Vec<f64> = Vec::with_capacity(entries.len());
        for (weight, nodes) in entries {
            if weight.is_nan() || *weight <= 0.0 {
                return Err(MetricsError::NonPositiveWeight(*weight));
            }
            let path = PathVertex::from_nodes(g, nodes.clone())?;
            match paths.iter().position(|p| *p == path) {
                Some(i) => weights[i] += weight,
                None => {
                    paths.push(path);
                    weights.push(*weight);
                }
            }
        }
        let mut true_flow = vec![0.0; g.edge_count()];
        for (path, &weight) in paths.iter().zip(&weights) {
            path.add_scaled_into(weight, &mut true_flow);
        }
        Ok(GroundTruth {
            paths,
            weights,
            true_flow,
        })
    }

    /// Treats a decomposition as ground truth (its reconstruction is always
    /// a balanced flow).
    pub fn from_decomposition(d: &Decomposition) -> Self {
        GroundTruth {
            paths: d.paths().to_vec(),
            weights: d.weights().to_vec(),
            true_flow: d.reconstruction().to_vec(),
        }
    }

    pub fn paths(&self) -> &[PathVertex] {
        &self.paths
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn true_flow(&self) -> &[f64] {
        &self.true_flow
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    fn weight_of(&self, path: &PathVertex) -> Option<f64> {
        self.paths
            .iter()
            .position(|p| p == path)
            .map(|i| self.weights[i])
    }
}

fn weights_equal(a: f64, b: f64) -> bool {
    if a.fract() == 0.0 && b.fract() == 0.0 {
        a == b
    } else {
        (a - b).abs() <= WEIGHT_TOL
    }
}

/// Symmetric path error: solution paths whose weight differs from the truth
/// (missing counts as different) plus truth paths absent from the solution.
/// Path identity is the exact node sequence.
pub fn path_error(solution: &Decomposition, truth: &GroundTruth) -> Result<usize> {
    check_edges(solution, truth)?;
    let mut errors = 0;
    for (path, &weight) in solution.paths().iter().zip(solution.weights()) {
        match truth.weight_of(path) {
            Some(tw) if weights_equal(weight, tw) => {}
            _ => errors += 1,
        }
    }
    for path in truth.paths() {
        if solution.weight_of(path).is_none() {
            errors += 1;
        }
    }
    Ok(errors)
}

/// One-sided variant: counts only solution paths whose weight differs from
/// the truth (missing counts as different).
pub fn path_error_one_sided(solution: &Decomposition, truth: &GroundTruth) -> Result<usize> {
    check_edges(solution, truth)?;
    let mut errors = 0;
    for (path, &weight) in solution.paths().iter().zip(solution.weights()) {
        match truth.weight_of(path) {
            Some(tw) if weights_equal(weight, tw) => {}
            _ => errors += 1,
        }
    }
    Ok(errors)
}

fn check_edges(solution: &Decomposition, truth: &GroundTruth) -> Result<()> {
    if solution.reconstruction().len() != truth.true_flow().len() {
        return Err(MetricsError::GraphMismatch {
            left: solution.reconstruction().len(),
            right: truth.true_flow().len(),
        });
    }
    Ok(())
}

/// Euclidean distance between the solution's reconstruction and the true flow.
pub fn flow_error(solution: &Decomposition, truth: &GroundTruth) -> Result<f64> {
    check_edges(solution, truth)?;
    Ok(dist(solution.reconstruction(), truth.true_flow()))
}

/// Flow error divided by the number of edges.
pub fn relative_flow_error(solution: &Decomposition, truth: &GroundTruth) -> Result<f64> {
    let e = flow_error(solution, truth)?;
    Ok(e / solution.reconstruction().len() as f64)
}

/// exp(mean(log(vᵢ + shift))) − shift. Defined for nonnegative values and a
/// positive shift, so zero entries are representable.
pub fn shifted_geomean(values: &[f64], shift: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(MetricsError::EmptyList);
    }
    if shift.is_nan() || shift <= 0.0 {
        return Err(MetricsError::InvalidShift(shift));
    }
    let mean_log =
        values.iter().map(|v| (v + shift).ln()).sum::<f64>() / values.len() as f64;
    Ok(mean_log.exp() - shift)
}

/// One scored instance-method pair in a batch report. Missing values (for
/// example no ground truth, or no recorded solve time) render as "-".
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub id: String,
    pub method: String,
    pub path_error: Option<usize>,
    pub flow_error: Option<f64>,
    pub rel_flow_error: Option<f64>,
    pub n_paths: usize,
    pub wall_time: Option<f64>,
}

const REPORT_HEADER: &str = "id\tmethod\tpath_error\tflow_error\trel_flow_error\tn_paths\twall_time";

fn fmt_opt_f64(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "-".into(),
    }
}

/// Renders a tab-separated report: one row per instance and method, sorted
/// by (id, method), then `#`-prefixed aggregate lines per method and metric
/// with the arithmetic mean, the shifted geometric mean (shift 1), and the
/// count of instances where the method was strictly-or-jointly best. The
/// best column is "-" unless at least two methods are present.
pub fn render_report(rows: &[ReportRow]) -> String {
    let mut sorted: Vec<&ReportRow> = rows.iter().collect();
    sorted.sort_by(|a, b| id_key(&a.id).cmp(&id_key(&b.id)).then(a.method.cmp(&b.method)));

    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for row in &sorted {
        let path_error = match row.path_error {
            Some(p) => p.to_string(),
            None => "-".into(),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            row.id,
            row.method,
            path_error,
            fmt_opt_f64(row.flow_error),
            fmt_opt_f64(row.rel_flow_error),
            row.n_paths,
            fmt_opt_f64(row.wall_time),
        ));
    }

    let mut methods: Vec<String> = Vec::new();
    for row in &sorted {
        if !methods.contains(&row.method) {
            methods.push(row.method.clone());
        }
    }
    methods.sort();
    let multi = methods.len() > 1;

    type Column = (&'static str, fn(&ReportRow) -> Option<f64>);
    let metrics: [Column; 5] = [
        ("path_error", |r| r.path_error.map(|p| p as f64)),
        ("flow_error", |r| r.flow_error),
        ("rel_flow_error", |r| r.rel_flow_error),
        ("n_paths", |r| Some(r.n_paths as f64)),
        ("wall_time", |r| r.wall_time),
    ];
    for method in &methods {
        for (name, extract) in &metrics {
            let values: Vec<f64> = sorted
                .iter()
                .filter(|r| &r.method == method)
                .filter_map(|r| extract(r))
                .collect();
            if values.is_empty() {
                continue;
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let geomean = shifted_geomean(&values, 1.0).expect("non-empty");
            let best = if multi {
                best_count(&sorted, method, *extract).to_string()
            } else {
                "-".into()
            };
            out.push_str(&format!(
                "# aggregate\t{method}\t{name}\tmean={mean}\tgeomean={geomean}\tbest={best}\n"
            ));
        }
    }
    out
}

/// Instances where `method`'s value is minimal among the methods that
/// reported a value for that instance.
fn best_count(rows: &[&ReportRow], method: &str, extract: fn(&ReportRow) -> Option<f64>) -> usize {
    let mut by_id: HashMap<&str, Vec<(&str, f64)>> = HashMap::new();
    for row in rows {
        if let Some(v) = extract(row) {
            by_id.entry(&row.id).or_default().push((&row.method, v));
        }
    }
    let mut count = 0;
    for entries in by_id.values() {
        let min = entries.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
        if entries.iter().any(|(m, v)| *m == method && *v <= min) {
            count += 1;
        }
    }
    count
}

fn id_key(id: &str) -> (u8, u64, String) {
    match id.parse::<u64>() {
        Ok(n) => (0, n, String::new()),
        Err(_) => (1, 0, id.to_string()),
    }
}
