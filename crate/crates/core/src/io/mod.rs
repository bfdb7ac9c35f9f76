//! JSON documents for databases, queries and patterns, plus the synthetic
//! generator and the evaluation harness.

pub mod eval;
pub mod generator;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::database::Database;
use crate::error::{Error, Result};
use crate::graph::{DetGraph, Label};
use crate::prob::{JointTable, ProbGraph, MAX_TABLE_EDGES};

/// Version written into every document; readers accept this or older.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexDoc {
    pub id: u32,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub id: u32,
    pub u: u32,
    pub v: u32,
    pub label: String,
}

/// One table row: `assign[i]` is the presence bit of the set's `i`-th edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowDoc {
    pub assign: Vec<u8>,
    pub p: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborSetDoc {
    pub edges: Vec<u32>,
    pub table: Vec<RowDoc>,
}

/// A labeled graph without probabilities (queries and features).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternDoc {
    pub vertices: Vec<VertexDoc>,
    pub edges: Vec<EdgeDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    pub id: String,
    pub vertices: Vec<VertexDoc>,
    pub edges: Vec<EdgeDoc>,
    pub neighbor_sets: Vec<NeighborSetDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatabaseDocument {
    pub format_version: u32,
    pub graphs: Vec<GraphDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryDocument {
    pub format_version: u32,
    pub query: PatternDoc,
    pub delta: usize,
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl PatternDoc {
    pub fn to_graph(&self) -> Result<DetGraph> {
        DetGraph::new(
            self.vertices.iter().map(|v| (v.id, Label::new(&v.label))),
            self.edges
                .iter()
                .map(|e| (e.id, e.u, e.v, Label::new(&e.label))),
        )
    }

    pub fn from_graph(g: &DetGraph) -> Self {
        PatternDoc {
            vertices: (0..g.vertex_count())
                .map(|v| VertexDoc {
                    id: g.vertex_id(v),
                    label: g.vertex_label(v).to_string(),
                })
                .collect(),
            edges: g
                .edges()
                .iter()
                .map(|e| EdgeDoc {
                    id: e.id,
                    u: g.vertex_id(e.a),
                    v: g.vertex_id(e.b),
                    label: e.label.to_string(),
                })
                .collect(),
        }
    }
}

impl GraphDoc {
    pub fn to_prob_graph(&self) -> Result<ProbGraph> {
        let pattern = PatternDoc {
            vertices: self.vertices.clone(),
            edges: self.edges.clone(),
        };
        let skeleton = pattern.to_graph().map_err(|e| match e {
            Error::InvalidGraph(msg) => Error::prob_graph(&self.id, msg),
            other => other,
        })?;
        let mut tables = Vec::with_capacity(self.neighbor_sets.len());
        for (s, set) in self.neighbor_sets.iter().enumerate() {
            tables.push(self.table(&skeleton, s, set)?);
        }
        ProbGraph::new(self.id.clone(), skeleton, tables)
    }

    fn table(&self, skeleton: &DetGraph, s: usize, set: &NeighborSetDoc) -> Result<JointTable> {
        let fail = |msg: String| Error::prob_graph(&self.id, format!("neighbor_sets[{s}]: {msg}"));
        let k = set.edges.len();
        if k == 0 || k > MAX_TABLE_EDGES {
            return Err(fail(format!("`edges` must list 1 to {MAX_TABLE_EDGES} edges")));
        }
        let edges = set
            .edges
            .iter()
            .map(|&id| {
                skeleton
                    .edge_index(id)
                    .ok_or_else(|| fail(format!("`edges` names unknown edge id {id}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        let mut probs = vec![0.0; 1 << k];
        let mut seen = vec![false; 1 << k];
        for (r, row) in set.table.iter().enumerate() {
            if row.assign.len() != k {
                return Err(fail(format!(
                    "table[{r}].assign has {} entries for {k} edges",
                    row.assign.len()
                )));
            }
            let mut idx = 0usize;
            for (i, &bit) in row.assign.iter().enumerate() {
                match bit {
                    0 => {}
                    1 => idx |= 1 << i,
                    other => return Err(fail(format!("table[{r}].assign holds {other}, expected 0 or 1"))),
                }
            }
            if std::mem::replace(&mut seen[idx], true) {
                return Err(fail(format!("table[{r}] repeats an assignment")));
            }
            probs[idx] = row.p;
        }
        JointTable::new(edges, probs).map_err(|e| fail(e.to_string()))
    }

    pub fn from_prob_graph(g: &ProbGraph) -> Self {
        let sk = g.skeleton();
        let pattern = PatternDoc::from_graph(sk);
        let neighbor_sets = g
            .tables()
            .iter()
            .map(|t| {
                let k = t.edges().len();
                NeighborSetDoc {
                    edges: t.edges().iter().map(|&e| sk.edge(e).id).collect(),
                    table: t
                        .probs()
                        .iter()
                        .enumerate()
                        .map(|(row, &p)| RowDoc {
                            assign: (0..k).map(|i| (row >> i & 1) as u8).collect(),
                            p,
                        })
                        .collect(),
                }
            })
            .collect();
        GraphDoc {
            id: g.id().to_string(),
            vertices: pattern.vertices,
            edges: pattern.edges,
            neighbor_sets,
        }
    }
}

impl DatabaseDocument {
    pub fn from_database(db: &Database) -> Self {
        DatabaseDocument {
            format_version: FORMAT_VERSION,
            graphs: db.graphs().iter().map(GraphDoc::from_prob_graph).collect(),
        }
    }

    pub fn to_database(&self) -> Result<Database> {
        let graphs = self
            .graphs
            .iter()
            .map(GraphDoc::to_prob_graph)
            .collect::<Result<Vec<_>>>()?;
        Database::new(graphs)
    }
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

/// Parses a versioned JSON document, checking the version before the body.
pub fn parse_versioned<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    let json = |source| Error::Json {
        context: format!("{what} document"),
        source,
    };
    let probe: VersionProbe = serde_json::from_str(text).map_err(json)?;
    if probe.format_version > FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: probe.format_version,
            supported: FORMAT_VERSION,
        });
    }
    serde_json::from_str(text).map_err(json)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

pub fn parse_database(text: &str) -> Result<Database> {
    parse_versioned::<DatabaseDocument>(text, "database")?.to_database()
}

pub fn read_database(path: &Path) -> Result<Database> {
    parse_database(&fs::read_to_string(path)?)
}

pub fn write_database(db: &Database, path: &Path) -> Result<()> {
    fs::write(path, to_json(&DatabaseDocument::from_database(db)))?;
    Ok(())
}

pub fn parse_query(text: &str) -> Result<QueryDocument> {
    let doc: QueryDocument = parse_versioned(text, "query")?;
    let q = doc.query.to_graph()?;
    if !q.is_connected() || q.is_empty() {
        return Err(Error::InvalidParameter("query: graph must be connected and non-empty".into()));
    }
    if doc.delta > q.edge_count() {
        return Err(Error::InvalidParameter(format!(
            "delta: {} exceeds the query's {} edges",
            doc.delta,
            q.edge_count()
        )));
    }
    if !(doc.epsilon > 0.0 && doc.epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon: {} is outside (0, 1]",
            doc.epsilon
        )));
    }
    Ok(doc)
}

pub fn read_query(path: &Path) -> Result<QueryDocument> {
    parse_query(&fs::read_to_string(path)?)
}
