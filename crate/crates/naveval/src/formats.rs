//! On-disk formats: taxonomy and synonym JSON, verb lexicons, instruction
//! JSONL, feature JSON, knowledge-base TSV, detections and score CSVs.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use naveval_core::{
    DirectionClass, DirectionSequence, DirectionTaxonomy, KnowledgeBase, MetricTable, ScoredText,
    SemanticTuple, SemanticTupleSet, SynonymGroups, TupleSource, VerbLexicon,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes through a temp file in the destination directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TaxonomyFile {
    pub name: String,
    pub classes: Vec<ClassEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClassEntry {
    pub label: String,
    pub phrases: Vec<String>,
}

impl TaxonomyFile {
    pub fn from_taxonomy(tax: &DirectionTaxonomy) -> Self {
        TaxonomyFile {
            name: tax.name().to_string(),
            classes: tax
                .classes()
                .iter()
                .map(|c| ClassEntry {
                    label: c.label.clone(),
                    phrases: c.phrases.clone(),
                })
                .collect(),
        }
    }
}

pub fn parse_taxonomy(text: &str, origin: &Path) -> Result<DirectionTaxonomy> {
    let file: TaxonomyFile = serde_json::from_str(text).map_err(|e| CliError::schema(origin, e))?;
    let classes = file
        .classes
        .into_iter()
        .map(|c| DirectionClass::new(c.label, c.phrases))
        .collect();
    DirectionTaxonomy::new(file.name, classes).map_err(|e| CliError::schema(origin, e))
}

pub fn load_taxonomy_file(path: &Path) -> Result<DirectionTaxonomy> {
    parse_taxonomy(&read_text(path)?, path)
}

/// JSON list of synonym groups, each a list of words.
pub fn load_synonyms(path: &Path) -> Result<SynonymGroups> {
    let groups: Vec<Vec<String>> =
        serde_json::from_str(&read_text(path)?).map_err(|e| CliError::schema(path, e))?;
    SynonymGroups::new(groups).map_err(|e| CliError::schema(path, e))
}

pub fn load_verbs(path: &Path) -> Result<VerbLexicon> {
    VerbLexicon::parse(&read_text(path)?).map_err(|e| CliError::schema(path, e))
}

pub fn load_kb(path: &Path) -> Result<KnowledgeBase> {
    KnowledgeBase::parse_tsv(&read_text(path)?).map_err(|e| CliError::schema(path, e))
}

/// One instruction in a candidates or references file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuples: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<String>>,
}

/// A reference record: either a single `text` or a `references` list.
#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceRecord {
    pub id: String,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub tuples: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub directions: Option<Vec<String>>,
    #[serde(default)]
    pub references: Option<Vec<ReferenceText>>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceText {
    pub text: String,
    #[serde(default)]
    pub tuples: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub directions: Option<Vec<String>>,
}

/// Reads a JSON-lines file. Blank lines are skipped; ids must be unique.
pub fn read_jsonl<T, F>(path: &Path, id_of: F) -> Result<Vec<T>>
where
    T: for<'de> Deserialize<'de>,
    F: Fn(&T) -> &str,
{
    let text = read_text(path)?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(line)
            .map_err(|e| CliError::schema(path, format!("line {}: {e}", i + 1)))?;
        if !seen.insert(id_of(&record).to_string()) {
            return Err(CliError::schema(
                path,
                format!("line {}: duplicate id `{}`", i + 1, id_of(&record)),
            ));
        }
        out.push(record);
    }
    Ok(out)
}

fn tuple_set(raw: &[Vec<String>], source: TupleSource) -> Result<SemanticTupleSet, String> {
    let mut set = SemanticTupleSet::new(source);
    for t in raw {
        set.insert(SemanticTuple::new(t).map_err(|e| e.to_string())?);
    }
    Ok(set)
}

/// Builds a scorable text, checking tuples and direction overrides.
pub fn scored_text(
    text: &str,
    tuples: Option<&[Vec<String>]>,
    directions: Option<&[String]>,
    source: TupleSource,
    taxonomy: &DirectionTaxonomy,
) -> Result<ScoredText, String> {
    if text.trim().is_empty() {
        return Err("text is empty".into());
    }
    let mut scored = ScoredText::new(naveval_core::tokenize(text));
    if let Some(raw) = tuples {
        scored = scored.with_tuples(tuple_set(raw, source)?);
    }
    if let Some(labels) = directions {
        let seq = DirectionSequence::validated(labels.iter().cloned(), taxonomy)
            .map_err(|e| e.to_string())?;
        scored = scored.with_directions(seq);
    }
    Ok(scored)
}

impl ReferenceRecord {
    pub fn scored_texts(&self, taxonomy: &DirectionTaxonomy) -> Result<Vec<ScoredText>, String> {
        match (&self.text, &self.references) {
            (Some(text), None) => Ok(vec![scored_text(
                text,
                self.tuples.as_deref(),
                self.directions.as_deref(),
                TupleSource::Reference,
                taxonomy,
            )?]),
            (None, Some(refs)) if !refs.is_empty() => refs
                .iter()
                .map(|r| {
                    scored_text(
                        &r.text,
                        r.tuples.as_deref(),
                        r.directions.as_deref(),
                        TupleSource::Reference,
                        taxonomy,
                    )
                })
                .collect(),
            (None, Some(_)) => Err("`references` is empty".into()),
            (None, None) => Err("record needs `text` or `references`".into()),
            (Some(_), Some(_)) => Err("record has both `text` and `references`".into()),
        }
    }
}

/// Alignment inputs for one instruction/trajectory pair.
#[derive(Debug, Clone, Deserialize)]
pub struct FeatureFile {
    #[serde(default)]
    pub sub_instructions: Option<Vec<Vec<f64>>>,
    pub panoramas: Vec<Vec<f64>>,
    pub words: Vec<Vec<f64>>,
    pub word_to_sub: Vec<usize>,
    /// Decoder attention, one row per word.
    #[serde(default)]
    pub attention: Option<Vec<Vec<f64>>>,
}

pub fn load_features(path: &Path) -> Result<FeatureFile> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::schema(path, e))
}

#[derive(Debug, Clone, Deserialize)]
pub struct DetectionRecord {
    pub label: String,
    pub confidence: f64,
    pub step: usize,
}

pub fn load_detections(path: &Path) -> Result<Vec<naveval_core::Detection>> {
    let raw: Vec<DetectionRecord> =
        serde_json::from_str(&read_text(path)?).map_err(|e| CliError::schema(path, e))?;
    raw.into_iter()
        .enumerate()
        .map(|(i, d)| {
            naveval_core::Detection::new(d.label, d.confidence, d.step)
                .map_err(|e| CliError::schema(path, format!("detection {i}: {e}")))
        })
        .collect()
}

fn parse_cell(cell: &str) -> std::result::Result<Option<f64>, ()> {
    let cell = cell.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    cell.parse::<f64>().map(Some).map_err(|_| ())
}

/// CSV with header `id, <metric>..., human`. Empty, `NA` and `NaN` cells
/// are missing values.
pub fn load_metric_table(path: &Path) -> Result<MetricTable> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::schema(path, e))?
        .clone();
    let n = headers.len();
    if n < 3 || &headers[0] != "id" || &headers[n - 1] != "human" {
        return Err(CliError::schema(
            path,
            "header must be `id`, one or more metric columns, then `human`",
        ));
    }
    let names = headers
        .iter()
        .skip(1)
        .take(n - 2)
        .map(String::from)
        .collect();
    let mut table = MetricTable::new(names);
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| CliError::schema(path, format!("line {line}: {e}")))?;
        let cell = |j: usize| {
            parse_cell(&row[j]).map_err(|_| {
                CliError::schema(path, format!("line {line}: `{}` is not a number", &row[j]))
            })
        };
        let metrics = (1..n - 1).map(cell).collect::<Result<Vec<_>>>()?;
        let human = cell(n - 1)?;
        table
            .push_row(&row[0], metrics, human)
            .map_err(|e| CliError::schema(path, e))?;
    }
    Ok(table)
}
