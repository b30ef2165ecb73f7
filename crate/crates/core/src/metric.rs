//! SPICE and the direction-aware SPICE-D score.
//!
//! Tuple matching canonicalizes every element through user-supplied synonym
//! groups and then takes an exact set intersection. Direction matching takes
//! the longest common subsequence of direction class labels, so each phrase
//! is matched at most once and in order.
//!
//! Every ratio with a zero denominator is 0, and the F-score of (0, 0) is 0.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::text::{parse_directions, DirectionPhrase, DirectionTaxonomy, Instruction};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetricError {
    /// Tuples hold 1 to 3 elements.
    BadArity(usize),
    EmptyElement,
    /// A word is listed in two different synonym groups.
    SynonymConflict(String),
    UnknownLabel(String),
    NoReferences,
}

impl fmt::Display for MetricError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricError::BadArity(n) => write!(f, "tuple has {n} elements, expected 1 to 3"),
            MetricError::EmptyElement => write!(f, "tuple element is empty"),
            MetricError::SynonymConflict(w) => {
                write!(f, "`{w}` belongs to more than one synonym group")
            }
            MetricError::UnknownLabel(l) => {
                write!(f, "direction label `{l}` is not in the taxonomy")
            }
            MetricError::NoReferences => write!(f, "at least one reference is required"),
        }
    }
}

impl core::error::Error for MetricError {}

/// An object, (object, attribute) or (object, relation, object) proposition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SemanticTuple {
    elements: Vec<String>,
}

impl SemanticTuple {
    /// Lowercases and trims every element.
    pub fn new<I, S>(elements: I) -> Result<Self, MetricError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let elements: Vec<String> = elements
            .into_iter()
            .map(|e| e.as_ref().trim().to_lowercase())
            .collect();
        if !(1..=3).contains(&elements.len()) {
            return Err(MetricError::BadArity(elements.len()));
        }
        if elements.iter().any(String::is_empty) {
            return Err(MetricError::EmptyElement);
        }
        Ok(SemanticTuple { elements })
    }

    pub fn arity(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    fn canonical(&self, synonyms: &SynonymGroups) -> SemanticTuple {
        SemanticTuple {
            elements: self
                .elements
                .iter()
                .map(|e| synonyms.canonical(e).to_string())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TupleSource {
    #[default]
    Candidate,
    Reference,
}

/// A set of tuples; duplicates collapse on insert.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SemanticTupleSet {
    tuples: BTreeSet<SemanticTuple>,
    source: TupleSource,
}

impl SemanticTupleSet {
    pub fn new(source: TupleSource) -> Self {
        SemanticTupleSet {
            tuples: BTreeSet::new(),
            source,
        }
    }

    pub fn from_tuples<I: IntoIterator<Item = SemanticTuple>>(
        source: TupleSource,
        tuples: I,
    ) -> Self {
        SemanticTupleSet {
            tuples: tuples.into_iter().collect(),
            source,
        }
    }

    pub fn insert(&mut self, tuple: SemanticTuple) -> bool {
        self.tuples.insert(tuple)
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn source(&self) -> TupleSource {
        self.source
    }

    pub fn with_source(mut self, source: TupleSource) -> Self {
        self.source = source;
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = &SemanticTuple> {
        self.tuples.iter()
    }
}

/// Word-level synonym groups. Each word maps to the first member of its group.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SynonymGroups {
    representative: BTreeMap<String, String>,
}

impl SynonymGroups {
    pub fn new<G, W, S>(groups: G) -> Result<Self, MetricError>
    where
        G: IntoIterator<Item = W>,
        W: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut representative = BTreeMap::new();
        for group in groups {
            let words: Vec<String> = group
                .into_iter()
                .map(|w| w.as_ref().trim().to_lowercase())
                .filter(|w| !w.is_empty())
                .collect();
            let Some(head) = words.first().cloned() else {
                continue;
            };
            for word in words {
                match representative.get(&word) {
                    Some(rep) if *rep != head => return Err(MetricError::SynonymConflict(word)),
                    _ => {
                        representative.insert(word, head.clone());
                    }
                }
            }
        }
        Ok(SynonymGroups { representative })
    }

    pub fn canonical<'a>(&'a self, word: &'a str) -> &'a str {
        self.representative.get(word).map_or(word, String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.representative.is_empty()
    }
}

/// Size of the intersection after synonym canonicalization.
pub fn match_tuples(
    cand: &SemanticTupleSet,
    reference: &SemanticTupleSet,
    synonyms: &SynonymGroups,
) -> usize {
    let canon_ref: BTreeSet<SemanticTuple> =
        reference.iter().map(|t| t.canonical(synonyms)).collect();
    let canon_cand: BTreeSet<SemanticTuple> = cand.iter().map(|t| t.canonical(synonyms)).collect();
    canon_cand.intersection(&canon_ref).count()
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiceScore {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

pub fn spice_score(
    cand: &SemanticTupleSet,
    reference: &SemanticTupleSet,
    synonyms: &SynonymGroups,
) -> SpiceScore {
    let matched = match_tuples(cand, reference, synonyms);
    let precision = ratio(matched, cand.len());
    let recall = ratio(matched, reference.len());
    SpiceScore {
        precision,
        recall,
        f: f_score(precision, recall),
    }
}

/// Length of the longest common subsequence.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut prev = vec![0usize; short.len() + 1];
    let mut cur = vec![0usize; short.len() + 1];
    for x in long {
        for (j, y) in short.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// Ordered direction class labels of one instruction.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DirectionSequence {
    labels: Vec<String>,
}

impl DirectionSequence {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        DirectionSequence {
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    /// Like [`DirectionSequence::new`] but every label must exist in `taxonomy`.
    pub fn validated<I, S>(labels: I, taxonomy: &DirectionTaxonomy) -> Result<Self, MetricError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let seq = Self::new(labels);
        if let Some(bad) = seq.labels.iter().find(|l| !taxonomy.contains_label(l)) {
            return Err(MetricError::UnknownLabel(bad.clone()));
        }
        Ok(seq)
    }

    pub fn from_phrases(phrases: &[DirectionPhrase]) -> Self {
        Self::new(phrases.iter().map(|p| p.class_label.clone()))
    }

    pub fn parse(instr: &Instruction, taxonomy: &DirectionTaxonomy) -> Self {
        Self::from_phrases(&parse_directions(instr, taxonomy))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ScoreCounts {
    pub cand_tuples: usize,
    pub ref_tuples: usize,
    pub matched_tuples: usize,
    pub cand_dirs: usize,
    pub ref_dirs: usize,
    pub lcs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreReport {
    pub spice: f64,
    pub spice_d: f64,
    pub pr_s: f64,
    pub re_s: f64,
    pub pr_sd: f64,
    pub re_sd: f64,
    pub counts: ScoreCounts,
    /// Tuples were missing on at least one side, so only directions scored.
    pub direction_only: bool,
    /// Number of references this report was aggregated over.
    pub references: usize,
}

pub fn spice_d_score(
    cand: &SemanticTupleSet,
    reference: &SemanticTupleSet,
    cand_dirs: &DirectionSequence,
    ref_dirs: &DirectionSequence,
    synonyms: &SynonymGroups,
) -> ScoreReport {
    let matched = match_tuples(cand, reference, synonyms);
    let lcs = lcs_length(cand_dirs.labels(), ref_dirs.labels());
    let pr_s = ratio(matched, cand.len());
    let re_s = ratio(matched, reference.len());
    let pr_sd = ratio(matched + lcs, cand.len() + cand_dirs.len());
    let re_sd = ratio(matched + lcs, reference.len() + ref_dirs.len());
    ScoreReport {
        spice: f_score(pr_s, re_s),
        spice_d: f_score(pr_sd, re_sd),
        pr_s,
        re_s,
        pr_sd,
        re_sd,
        counts: ScoreCounts {
            cand_tuples: cand.len(),
            ref_tuples: reference.len(),
            matched_tuples: matched,
            cand_dirs: cand_dirs.len(),
            ref_dirs: ref_dirs.len(),
            lcs,
        },
        direction_only: false,
        references: 1,
    }
}

/// How per-reference reports combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Keep the report of the best reference (highest SPICE-D, then SPICE,
    /// then earliest).
    #[default]
    Max,
    /// Average every score field. Counts become totals over references.
    Mean,
}

/// An instruction with optional tuples and an optional explicit direction
/// sequence that replaces parsing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoredText {
    pub instruction: Instruction,
    pub tuples: Option<SemanticTupleSet>,
    pub directions: Option<DirectionSequence>,
}

impl ScoredText {
    pub fn new(instruction: Instruction) -> Self {
        ScoredText {
            instruction,
            tuples: None,
            directions: None,
        }
    }

    pub fn with_tuples(mut self, tuples: SemanticTupleSet) -> Self {
        self.tuples = Some(tuples);
        self
    }

    pub fn with_directions(mut self, directions: DirectionSequence) -> Self {
        self.directions = Some(directions);
        self
    }

    pub fn direction_sequence(&self, taxonomy: &DirectionTaxonomy) -> DirectionSequence {
        match &self.directions {
            Some(d) => d.clone(),
            None => DirectionSequence::parse(&self.instruction, taxonomy),
        }
    }
}

/// Scores a candidate against one or more references.
pub fn score_pair(
    candidate: &ScoredText,
    references: &[ScoredText],
    taxonomy: &DirectionTaxonomy,
    synonyms: &SynonymGroups,
    aggregation: Aggregation,
) -> Result<ScoreReport, MetricError> {
    if references.is_empty() {
        return Err(MetricError::NoReferences);
    }
    let cand_dirs = candidate.direction_sequence(taxonomy);
    let empty = SemanticTupleSet::default();
    let reports = references.iter().map(|r| {
        let ref_dirs = r.direction_sequence(taxonomy);
        match (&candidate.tuples, &r.tuples) {
            (Some(ct), Some(rt)) => spice_d_score(ct, rt, &cand_dirs, &ref_dirs, synonyms),
            _ => ScoreReport {
                direction_only: true,
                ..spice_d_score(&empty, &empty, &cand_dirs, &ref_dirs, synonyms)
            },
        }
    });

    Ok(match aggregation {
        Aggregation::Max => {
            let mut best: Option<ScoreReport> = None;
            for report in reports {
                let better = best.is_none_or(|b| {
                    report.spice_d > b.spice_d
                        || (report.spice_d == b.spice_d && report.spice > b.spice)
                });
                if better {
                    best = Some(report);
                }
            }
            ScoreReport {
                references: references.len(),
                ..best.expect("references is nonempty")
            }
        }
        Aggregation::Mean => {
            let n = references.len() as f64;
            let mut acc = ScoreReport {
                spice: 0.0,
                spice_d: 0.0,
                pr_s: 0.0,
                re_s: 0.0,
                pr_sd: 0.0,
                re_sd: 0.0,
                counts: ScoreCounts::default(),
                direction_only: false,
                references: references.len(),
            };
            for r in reports {
                acc.spice += r.spice;
                acc.spice_d += r.spice_d;
                acc.pr_s += r.pr_s;
                acc.re_s += r.re_s;
                acc.pr_sd += r.pr_sd;
                acc.re_sd += r.re_sd;
                acc.counts.cand_tuples += r.counts.cand_tuples;
                acc.counts.ref_tuples += r.counts.ref_tuples;
                acc.counts.matched_tuples += r.counts.matched_tuples;
                acc.counts.cand_dirs += r.counts.cand_dirs;
                acc.counts.ref_dirs += r.counts.ref_dirs;
                acc.counts.lcs += r.counts.lcs;
                acc.direction_only |= r.direction_only;
            }
            acc.spice /= n;
            acc.spice_d /= n;
            acc.pr_s /= n;
            acc.re_s /= n;
            acc.pr_sd /= n;
            acc.re_sd /= n;
            acc
        }
    })
}
