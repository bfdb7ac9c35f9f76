//! The probabilistic matrix index: one row per selected feature, one column
//! per database graph, each cell holding the feature's SIP bound pair in
//! that graph or marking the feature absent from its skeleton.

mod mining;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::database::Database;
use crate::error::{Error, Result};
use crate::io::{parse_versioned, to_json, FORMAT_VERSION};
use crate::seed::derive_seed;
use crate::sip::{bound_pair, BoundPair, SipParams};

pub use mining::{
    dis, feature_stats, frq, max_disjoint_embeddings, max_disjoint_images, select_features, Feature,
    FeatureStats, MiningOutcome, MiningParams,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PmiEntry {
    /// The feature does not occur in the graph's skeleton (SIP = 0).
    Absent,
    Bounds(BoundPair),
    /// The feature occurs but its bounds could not be computed.
    Failed(String),
}

impl PmiEntry {
    /// `(lower, upper)` usable for pruning: the stored pair, `(0, 0)` when
    /// absent, and the trivial `(0, 1)` after a failure.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            PmiEntry::Absent => (0.0, 0.0),
            PmiEntry::Bounds(b) => (b.lower, b.upper),
            PmiEntry::Failed(_) => (0.0, 1.0),
        }
    }

    pub fn is_absent(&self) -> bool {
        matches!(self, PmiEntry::Absent)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IndexParams {
    pub mining: MiningParams,
    pub sip: SipParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pmi {
    pub format_version: u32,
    pub database_checksum: String,
    pub params: IndexParams,
    pub features: Vec<Feature>,
    /// Graph ids, in database order.
    pub columns: Vec<String>,
    /// `entries[feature][column]`.
    pub entries: Vec<Vec<PmiEntry>>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Bound pairs for every (feature, graph) cell. Graphs are processed in
/// parallel; each cell's sampling seed derives from the root seed, the
/// graph id and the feature's canonical code.
pub fn build_pmi(db: &Database, features: Vec<Feature>, params: &IndexParams) -> Pmi {
    let columns: Vec<Vec<PmiEntry>> = db
        .graphs()
        .par_iter()
        .map(|g| {
            let graph_seed = derive_seed(params.sip.seed, g.id().as_bytes());
            features
                .iter()
                .map(|f| {
                    let sip = SipParams {
                        seed: derive_seed(graph_seed, f.code.as_bytes()),
                        ..params.sip.clone()
                    };
                    match bound_pair(&f.pattern, g, &sip) {
                        Ok(Some(pair)) => PmiEntry::Bounds(pair),
                        Ok(None) => PmiEntry::Absent,
                        Err(e) => PmiEntry::Failed(e.to_string()),
                    }
                })
                .collect()
        })
        .collect();
    let entries = (0..features.len())
        .map(|fi| columns.iter().map(|col| col[fi].clone()).collect())
        .collect();
    Pmi {
        format_version: FORMAT_VERSION,
        database_checksum: db.checksum(),
        params: params.clone(),
        features,
        columns: db.ids().map(str::to_string).collect(),
        entries,
        warnings: Vec::new(),
    }
}

/// Mines features and builds the matrix.
pub fn build_index(db: &Database, params: &IndexParams) -> Result<Pmi> {
    let mined = select_features(db, &params.mining)?;
    let mut pmi = build_pmi(db, mined.features, params);
    pmi.warnings = mined.warnings;
    Ok(pmi)
}

impl Pmi {
    pub fn column_index(&self, graph_id: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == graph_id)
    }

    /// Features with a non-absent entry for the graph, with their entries.
    pub fn column(&self, graph_id: &str) -> Option<Vec<(usize, &PmiEntry)>> {
        let c = self.column_index(graph_id)?;
        Some(
            self.entries
                .iter()
                .enumerate()
                .filter(|(_, row)| !row[c].is_absent())
                .map(|(f, row)| (f, &row[c]))
                .collect(),
        )
    }

    pub fn entry(&self, feature: usize, column: usize) -> &PmiEntry {
        &self.entries[feature][column]
    }

    /// Fails unless the index was built over exactly this database.
    pub fn check_database(&self, db: &Database) -> Result<()> {
        let sum = db.checksum();
        if sum != self.database_checksum {
            return Err(Error::IndexMismatch(format!(
                "index was built for database checksum {}, this database has {}",
                self.database_checksum, sum
            )));
        }
        Ok(())
    }

    fn validate_shape(&self) -> Result<()> {
        if self.entries.len() != self.features.len()
            || self.entries.iter().any(|row| row.len() != self.columns.len())
        {
            return Err(Error::Corrupt(format!(
                "entry matrix does not match {} features x {} graphs",
                self.features.len(),
                self.columns.len()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        to_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let pmi: Pmi = parse_versioned(text, "index").map_err(|e| match e {
            Error::Json { source, .. } => Error::Corrupt(format!("index document: {source}")),
            other => other,
        })?;
        pmi.validate_shape()?;
        Ok(pmi)
    }
}

pub fn save_pmi(pmi: &Pmi, path: &Path) -> Result<()> {
    fs::write(path, pmi.to_json())?;
    Ok(())
}

pub fn load_pmi(path: &Path) -> Result<Pmi> {
    Pmi::from_json(&fs::read_to_string(path)?)
}
