//! The record collection shared by mining, pair generation, analysis and
//! ranking, plus its on-disk JSON schema (one array file per source file).

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::parser::{parse_file, Diagnostic, SourceFile, TheoremRecord};
use crate::tree::{mine_corpus, GoalOracle, MiningMode, MiningStats};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate record id {0}")]
    DuplicateId(String),
    #[error("duplicate source file {0}")]
    DuplicateFile(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed corpus file: {message}")]
    Malformed { path: PathBuf, message: String },
}

/// Ordered theorem records with an id index. Record order is ingestion
/// order (files in the order given, theorems in source order, mined records
/// appended).
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    records: Vec<TheoremRecord>,
    index: HashMap<String, usize>,
    diagnostics: Vec<Diagnostic>,
}

impl Corpus {
    pub fn new(records: Vec<TheoremRecord>) -> Result<Self, CorpusError> {
        let mut corpus = Self::default();
        corpus.extend(records)?;
        Ok(corpus)
    }

    /// Parse every file. Diagnostics are kept on the corpus.
    pub fn from_sources(files: &[SourceFile]) -> Result<Self, CorpusError> {
        let mut seen = std::collections::HashSet::new();
        let mut corpus = Self::default();
        for file in files {
            if !seen.insert(file.path.as_str()) {
                return Err(CorpusError::DuplicateFile(file.path.clone()));
            }
            let (records, diags) = parse_file(file);
            corpus.extend(records)?;
            corpus.diagnostics.extend(diags);
        }
        Ok(corpus)
    }

    pub fn extend(
        &mut self,
        records: impl IntoIterator<Item = TheoremRecord>,
    ) -> Result<(), CorpusError> {
        for record in records {
            if self.index.contains_key(&record.id) {
                return Err(CorpusError::DuplicateId(record.id));
            }
            self.index.insert(record.id.clone(), self.records.len());
            self.records.push(record);
        }
        Ok(())
    }

    /// Mine every original record and append the results.
    pub fn mine(
        &mut self,
        mode: MiningMode,
        goals: Option<&GoalOracle>,
    ) -> Result<MiningStats, CorpusError> {
        let originals: Vec<TheoremRecord> = self
            .records
            .iter()
            .filter(|r| r.origin == crate::parser::Origin::Original)
            .cloned()
            .collect();
        let (mined, stats) = mine_corpus(&originals, mode, goals);
        self.extend(mined)?;
        Ok(stats)
    }

    pub fn records(&self) -> &[TheoremRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&TheoremRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn diagnostics(&self) -> &[Diagnostic] {
        &self.diagnostics
    }

    pub fn push_diagnostics(&mut self, diags: impl IntoIterator<Item = Diagnostic>) {
        self.diagnostics.extend(diags);
    }

    /// Record indices grouped by file, files sorted by path.
    pub fn pools_by_file(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut pools: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            pools.entry(r.file.as_str()).or_default().push(i);
        }
        pools
    }

    pub fn files(&self) -> Vec<&str> {
        self.pools_by_file().into_keys().collect()
    }

    /// Schema file name for a source path: `a/b.v` becomes `a__b.v.json`.
    pub fn schema_file_name(path: &str) -> String {
        format!("{}.json", path.replace(['/', '\\'], "__"))
    }

    /// The schema files as (file name, pretty JSON) pairs, sorted by name.
    pub fn schema_files(&self) -> BTreeMap<String, String> {
        self.pools_by_file()
            .into_iter()
            .map(|(file, idx)| {
                let records: Vec<&TheoremRecord> = idx.iter().map(|&i| &self.records[i]).collect();
                let json = serde_json::to_string_pretty(&records).expect("records serialize");
                (Self::schema_file_name(file), json + "\n")
            })
            .collect()
    }

    /// Write the schema files into `dir`, creating it.
    pub fn write_dir(&self, dir: &Path) -> Result<(), CorpusError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CorpusError::Io { path, source }
        };
        fs::create_dir_all(dir).map_err(io(dir))?;
        for (name, json) in self.schema_files() {
            let path = dir.join(name);
            fs::write(&path, json).map_err(io(&path))?;
        }
        Ok(())
    }

    /// Load every `*.json` schema file of `dir`, in file-name order.
    pub fn load_dir(dir: &Path) -> Result<Self, CorpusError> {
        let entries = fs::read_dir(dir).map_err(|source| CorpusError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        paths.sort();
        let mut corpus = Self::default();
        for path in paths {
            let text = fs::read_to_string(&path).map_err(|source| CorpusError::Io {
                path: path.clone(),
                source,
            })?;
            let records: Vec<TheoremRecord> =
                serde_json::from_str(&text).map_err(|e| CorpusError::Malformed {
                    path: path.clone(),
                    message: e.to_string(),
                })?;
            corpus.extend(records)?;
        }
        Ok(corpus)
    }
}
