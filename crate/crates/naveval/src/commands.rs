//! Subcommand implementations. Each returns the text to emit; the binary
//! decides whether it goes to stdout or an output file.

use std::collections::BTreeMap;
use std::path::Path;

use naveval_core::{
    attention_coverage_loss, build_cost, chunk_instruction, contrastive_loss, correlate_metrics,
    dtw_align, expand_alignment, gather_entities, score_pair, tokenize, Aggregation,
    AttentionMatrix, DirectionSequence, DirectionTaxonomy, HiddenSequence, KnowledgeBase,
    KnowledgeFact, LossWeights, ScoreReport, ScoredText, SequenceRole, SubInstruction,
    SynonymGroups, TupleSource, VerbLexicon,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::formats::{self, EvalRecord, FeatureFile, ReferenceRecord};

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}

pub fn aggregation_name(a: Aggregation) -> &'static str {
    match a {
        Aggregation::Max => "max",
        Aggregation::Mean => "mean",
    }
}

#[derive(Debug, Clone)]
pub struct ScoreOptions<'a> {
    pub taxonomy: &'a DirectionTaxonomy,
    pub synonyms: &'a SynonymGroups,
    pub aggregation: Aggregation,
    /// Drop records whose best reference has fewer directional phrases.
    pub min_directions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountsOut {
    pub cand_tuples: usize,
    pub ref_tuples: usize,
    pub matched_tuples: usize,
    pub cand_dirs: usize,
    pub ref_dirs: usize,
    pub lcs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordScore {
    pub id: String,
    pub spice: f64,
    pub spice_d: f64,
    pub pr_s: f64,
    pub re_s: f64,
    pub pr_sd: f64,
    pub re_sd: f64,
    pub direction_only: bool,
    pub references: usize,
    pub counts: CountsOut,
}

impl RecordScore {
    fn new(id: &str, r: &ScoreReport) -> Self {
        RecordScore {
            id: id.to_string(),
            spice: r.spice,
            spice_d: r.spice_d,
            pr_s: r.pr_s,
            re_s: r.re_s,
            pr_sd: r.pr_sd,
            re_sd: r.re_sd,
            direction_only: r.direction_only,
            references: r.references,
            counts: CountsOut {
                cand_tuples: r.counts.cand_tuples,
                ref_tuples: r.counts.ref_tuples,
                matched_tuples: r.counts.matched_tuples,
                cand_dirs: r.counts.cand_dirs,
                ref_dirs: r.counts.ref_dirs,
                lcs: r.counts.lcs,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusSummary {
    pub n: usize,
    pub mean_spice: Option<f64>,
    pub mean_spice_d: Option<f64>,
    pub direction_only: usize,
    pub dropped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusReport {
    pub taxonomy: String,
    pub aggregation: &'static str,
    pub records: Vec<RecordScore>,
    pub corpus: CorpusSummary,
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> Option<f64> {
    let n = values.len();
    (n > 0).then(|| values.sum::<f64>() / n as f64)
}

/// Scores every candidate against the reference record with the same id.
pub fn score(
    candidates: &Path,
    references: &Path,
    opts: &ScoreOptions<'_>,
) -> Result<CorpusReport> {
    let cands: Vec<EvalRecord> = formats::read_jsonl(candidates, |r: &EvalRecord| &r.id)?;
    let refs: Vec<ReferenceRecord> = formats::read_jsonl(references, |r: &ReferenceRecord| &r.id)?;
    let refs_by_id: BTreeMap<&str, &ReferenceRecord> =
        refs.iter().map(|r| (r.id.as_str(), r)).collect();

    let missing: Vec<&str> = cands
        .iter()
        .map(|c| c.id.as_str())
        .filter(|id| !refs_by_id.contains_key(id))
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Input(format!(
            "no reference for candidate ids: {}",
            missing.join(", ")
        )));
    }

    let mut jobs: Vec<(&str, ScoredText, Vec<ScoredText>)> = Vec::with_capacity(cands.len());
    for c in &cands {
        let cand = formats::scored_text(
            &c.text,
            c.tuples.as_deref(),
            c.directions.as_deref(),
            TupleSource::Candidate,
            opts.taxonomy,
        )
        .map_err(|e| CliError::schema(candidates, format!("record `{}`: {e}", c.id)))?;
        let r = refs_by_id[c.id.as_str()];
        let ref_texts = r
            .scored_texts(opts.taxonomy)
            .map_err(|e| CliError::schema(references, format!("record `{}`: {e}", r.id)))?;
        jobs.push((&c.id, cand, ref_texts));
    }

    let scored: Vec<Option<RecordScore>> = jobs
        .par_iter()
        .map(|(id, cand, ref_texts)| {
            let most_dirs = ref_texts
                .iter()
                .map(|r| r.direction_sequence(opts.taxonomy).len())
                .max()
                .unwrap_or(0);
            if most_dirs < opts.min_directions {
                return None;
            }
            let report = score_pair(
                cand,
                ref_texts,
                opts.taxonomy,
                opts.synonyms,
                opts.aggregation,
            )
            .expect("every job has at least one reference");
            Some(RecordScore::new(id, &report))
        })
        .collect();

    let mut records = Vec::new();
    let mut dropped = Vec::new();
    for ((id, _, _), s) in jobs.iter().zip(scored) {
        match s {
            Some(s) => records.push(s),
            None => dropped.push(id.to_string()),
        }
    }
    let corpus = CorpusSummary {
        n: records.len(),
        mean_spice: mean(records.iter().map(|r| r.spice)),
        mean_spice_d: mean(records.iter().map(|r| r.spice_d)),
        direction_only: records.iter().filter(|r| r.direction_only).count(),
        dropped,
    };
    Ok(CorpusReport {
        taxonomy: opts.taxonomy.name().to_string(),
        aggregation: aggregation_name(opts.aggregation),
        records,
        corpus,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct AlignOptions {
    pub weights: LossWeights,
    pub eps: f64,
    pub ce: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignReport {
    #[serde(rename = "A")]
    pub a: Vec<Vec<u8>>,
    #[serde(rename = "A_prime")]
    pub a_prime: Vec<Vec<u8>>,
    pub path_cost: f64,
    pub l_att: f64,
    pub l_nce: f64,
    pub ce: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub total: f64,
}

/// Turns a per-word sub-instruction index into contiguous spans.
pub fn spans_from_word_to_sub(word_to_sub: &[usize]) -> Result<Vec<SubInstruction>, String> {
    let mut spans: Vec<SubInstruction> = Vec::new();
    for (o, &m) in word_to_sub.iter().enumerate() {
        match spans.last_mut() {
            Some(last) if m == last.index - 1 => last.end = o + 1,
            Some(last) if m == last.index => spans.push(SubInstruction {
                index: m + 1,
                start: o,
                end: o + 1,
            }),
            None if m == 0 => spans.push(SubInstruction {
                index: 1,
                start: 0,
                end: 1,
            }),
            _ => {
                return Err(format!(
                    "word_to_sub must count up from 0 in steps of 0 or 1 (word {o} maps to {m})"
                ))
            }
        }
    }
    Ok(spans)
}

pub fn align(features: &FeatureFile, opts: &AlignOptions) -> Result<AlignReport> {
    let input = |e: naveval_core::AlignError| CliError::Input(e.to_string());
    if features.word_to_sub.len() != features.words.len() {
        return Err(CliError::Input(format!(
            "word_to_sub has {} entries for {} words",
            features.word_to_sub.len(),
            features.words.len()
        )));
    }
    let subs = spans_from_word_to_sub(&features.word_to_sub).map_err(CliError::Input)?;
    let words = HiddenSequence::new(SequenceRole::Word, &features.words).map_err(input)?;
    let panos = HiddenSequence::new(SequenceRole::Panorama, &features.panoramas).map_err(input)?;
    let sub_states = match &features.sub_instructions {
        Some(v) => HiddenSequence::new(SequenceRole::SubInstruction, v).map_err(input)?,
        None => words.mean_pool(&subs).map_err(input)?,
    };

    let cost = build_cost(&sub_states, &panos).map_err(input)?;
    let a = dtw_align(&cost);
    let a_prime = expand_alignment(&a, &subs, words.len()).map_err(input)?;
    let beta = match &features.attention {
        Some(rows) => AttentionMatrix::from_rows(rows).map_err(input)?,
        None => AttentionMatrix::softmax_of_dots(&words, &panos).map_err(input)?,
    };
    let l_att = attention_coverage_loss(&beta, &a_prime, opts.eps).map_err(input)?;
    let l_nce = contrastive_loss(&panos, &words, &a_prime).map_err(input)?;
    Ok(AlignReport {
        a: a.to_rows(),
        a_prime: a_prime.to_rows(),
        path_cost: a.path_cost(&cost),
        l_att,
        l_nce,
        ce: opts.ce,
        lambda1: opts.weights.lambda1,
        lambda2: opts.weights.lambda2,
        total: opts.weights.total(opts.ce, l_att, l_nce),
    })
}

/// Space-separated direction labels of `text`.
pub fn directions(text: &str, taxonomy: &DirectionTaxonomy) -> String {
    DirectionSequence::parse(&tokenize(text), taxonomy)
        .labels()
        .join(" ")
}

#[derive(Debug, Serialize)]
struct DirectionLine<'a> {
    id: &'a str,
    directions: Vec<String>,
}

/// One JSON object per input record: `{"id": ..., "directions": [...]}`.
pub fn directions_jsonl(input: &Path, taxonomy: &DirectionTaxonomy) -> Result<String> {
    let records: Vec<EvalRecord> = formats::read_jsonl(input, |r: &EvalRecord| &r.id)?;
    let mut out = String::new();
    for r in &records {
        let line = DirectionLine {
            id: &r.id,
            directions: DirectionSequence::parse(&tokenize(&r.text), taxonomy)
                .labels()
                .to_vec(),
        };
        out.push_str(&serde_json::to_string(&line).expect("serializable"));
        out.push('\n');
    }
    Ok(out)
}

/// One chunk per line.
pub fn chunk(text: &str, verbs: &VerbLexicon) -> Result<String> {
    let instr = tokenize(text);
    let chunks = chunk_instruction(&instr, verbs).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(chunks.iter().map(|c| instr.join(c.span()) + "\n").collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationOut {
    pub metric: String,
    pub pearson: f64,
    pub n: usize,
}

/// Returns the JSON report and the number of rows dropped for missing values.
pub fn correlate(csv: &Path) -> Result<(Vec<CorrelationOut>, usize)> {
    let table = formats::load_metric_table(csv)?;
    let report = correlate_metrics(&table).map_err(|e| CliError::Input(e.to_string()))?;
    let entries = report
        .entries
        .into_iter()
        .map(|e| CorrelationOut {
            metric: e.metric,
            pearson: e.pearson,
            n: e.n,
        })
        .collect();
    Ok((entries, report.dropped))
}

fn fact_line(f: &KnowledgeFact) -> String {
    format!("{}\t{}\t{}\t{:?}\n", f.head, f.relation, f.tail, f.weight)
}

pub fn kb_query(kb: &KnowledgeBase, entity: &str, k: usize) -> Result<String> {
    if k == 0 {
        return Err(CliError::Input("--k must be at least 1".into()));
    }
    Ok(kb.retrieve(entity, k).iter().map(fact_line).collect())
}

#[derive(Debug, Serialize)]
pub struct FactOut {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub weight: f64,
}

#[derive(Debug, Serialize)]
pub struct EntityFacts {
    pub entity: String,
    pub facts: Vec<FactOut>,
}

#[derive(Debug, Serialize)]
pub struct StepFacts {
    pub step: usize,
    pub entities: Vec<EntityFacts>,
}

/// Filters detections per step and retrieves top-`k` facts for each entity.
pub fn kb_gather(
    kb: &KnowledgeBase,
    detections: &Path,
    threshold: f64,
    k: usize,
) -> Result<Vec<StepFacts>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::Input("--threshold must lie in [0, 1]".into()));
    }
    if k == 0 {
        return Err(CliError::Input("--k must be at least 1".into()));
    }
    let dets = formats::load_detections(detections)?;
    Ok(gather_entities(&dets, threshold)
        .into_iter()
        .map(|set| StepFacts {
            step: set.step,
            entities: set
                .entities
                .iter()
                .map(|e| EntityFacts {
                    entity: e.clone(),
                    facts: kb
                        .retrieve(e, k)
                        .iter()
                        .map(|f| FactOut {
                            head: f.head.clone(),
                            relation: f.relation.clone(),
                            tail: f.tail.clone(),
                            weight: f.weight,
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_to_sub_spans() {
        let spans = spans_from_word_to_sub(&[0, 0, 1, 1, 1, 2]).unwrap();
        assert_eq!(
            spans
                .iter()
                .map(|s| (s.index, s.start, s.end))
                .collect::<Vec<_>>(),
            [(1, 0, 2), (2, 2, 5), (3, 5, 6)]
        );
        assert!(spans_from_word_to_sub(&[1]).is_err());
        assert!(spans_from_word_to_sub(&[0, 2]).is_err());
        assert!(spans_from_word_to_sub(&[0, 1, 0]).is_err());
        assert!(spans_from_word_to_sub(&[]).unwrap().is_empty());
    }

    #[test]
    fn directions_text() {
        assert_eq!(
            directions("turn left then veer right", &DirectionTaxonomy::r2r()),
            "left right"
        );
    }

    #[test]
    fn chunk_text() {
        assert_eq!(
            chunk("turn left", &VerbLexicon::navigation()).unwrap(),
            "turn left\n"
        );
    }

    #[test]
    fn align_two_by_three() {
        // unit vectors at 0, 45 and 90 degrees; subs at 0 and 90 degrees
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let features = FeatureFile {
            sub_instructions: Some(vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            panoramas: vec![vec![1.0, 0.0], vec![h, h], vec![0.0, 1.0]],
            words: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            word_to_sub: vec![0, 1],
            attention: None,
        };
        let opts = AlignOptions {
            weights: LossWeights::default(),
            eps: naveval_core::DEFAULT_EPS,
            ce: 0.5,
        };
        let r = align(&features, &opts).unwrap();
        // two equal-cost paths; the diagonal predecessor wins on backtrack
        assert_eq!(r.a, [[1, 1, 0], [0, 0, 1]]);
        assert_eq!(r.a_prime, r.a);
        assert!((r.total - (0.5 + r.l_att + r.l_nce)).abs() < 1e-12);
    }
}
