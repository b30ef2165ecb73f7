//! Detected entities and ranked knowledge facts.
//!
//! Detections above a confidence threshold become per-viewpoint entity sets.
//! Each entity is then looked up in a flat knowledge base of weighted
//! `(head, relation, tail)` facts and the top-K facts by weight are returned.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// Detections must be strictly more confident than this to count.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.5;

/// Facts retrieved per entity.
pub const DEFAULT_TOP_K: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum KbError {
    EmptyLabel,
    InvalidConfidence(f64),
    /// A TSV row does not have exactly four columns.
    ColumnCount {
        line: usize,
        found: usize,
    },
    InvalidWeight {
        line: usize,
        value: String,
    },
    EmptyField {
        line: usize,
    },
}

impl fmt::Display for KbError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KbError::EmptyLabel => write!(f, "detection label is empty"),
            KbError::InvalidConfidence(c) => write!(f, "confidence {c} is outside [0, 1]"),
            KbError::ColumnCount { line, found } => {
                write!(
                    f,
                    "line {line}: expected 4 tab-separated columns, found {found}"
                )
            }
            KbError::InvalidWeight { line, value } => {
                write!(f, "line {line}: weight `{value}` is not a finite number")
            }
            KbError::EmptyField { line } => write!(f, "line {line}: empty field"),
        }
    }
}

impl core::error::Error for KbError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    label: String,
    confidence: f64,
    step: usize,
}

impl Detection {
    pub fn new(label: impl Into<String>, confidence: f64, step: usize) -> Result<Self, KbError> {
        let label = label.into();
        if label.trim().is_empty() {
            return Err(KbError::EmptyLabel);
        }
        if !(0.0..=1.0).contains(&confidence) {
            return Err(KbError::InvalidConfidence(confidence));
        }
        Ok(Detection {
            label,
            confidence,
            step,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn confidence(&self) -> f64 {
        self.confidence
    }

    pub fn step(&self) -> usize {
        self.step
    }
}

/// Entities seen at one viewpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntitySet {
    pub step: usize,
    pub entities: BTreeSet<String>,
}

/// Groups detections by step, keeping labels with confidence strictly above
/// `threshold`. Every step that has any detection gets a set, possibly empty.
/// Output is sorted by step.
pub fn gather_entities(detections: &[Detection], threshold: f64) -> Vec<EntitySet> {
    let mut by_step: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for d in detections {
        let set = by_step.entry(d.step).or_default();
        if d.confidence > threshold {
            set.insert(d.label.clone());
        }
    }
    by_step
        .into_iter()
        .map(|(step, entities)| EntitySet { step, entities })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeFact {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub weight: f64,
}

impl KnowledgeFact {
    fn rank(&self, other: &Self) -> Ordering {
        other
            .weight
            .total_cmp(&self.weight)
            .then_with(|| self.relation.cmp(&other.relation))
            .then_with(|| self.tail.cmp(&other.tail))
    }
}

fn entity_key(entity: &str) -> String {
    entity.trim().to_lowercase()
}

/// Facts indexed by (lowercased) head entity, each list kept in rank order:
/// weight descending, then relation, then tail.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KnowledgeBase {
    facts: BTreeMap<String, Vec<KnowledgeFact>>,
}

impl KnowledgeBase {
    pub fn from_facts<I: IntoIterator<Item = KnowledgeFact>>(facts: I) -> Self {
        let mut index: BTreeMap<String, Vec<KnowledgeFact>> = BTreeMap::new();
        for fact in facts {
            index.entry(entity_key(&fact.head)).or_default().push(fact);
        }
        for list in index.values_mut() {
            list.sort_by(KnowledgeFact::rank);
        }
        KnowledgeBase { facts: index }
    }

    /// Parses `head<TAB>relation<TAB>tail<TAB>weight` rows. Blank lines and
    /// lines starting with `#` are skipped. Line numbers in errors are 1-based.
    pub fn parse_tsv(text: &str) -> Result<Self, KbError> {
        let mut facts = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(KbError::ColumnCount {
                    line: line_no,
                    found: cols.len(),
                });
            }
            if cols.iter().any(|c| c.trim().is_empty()) {
                return Err(KbError::EmptyField { line: line_no });
            }
            let raw_weight = cols[3].trim();
            let weight = raw_weight
                .parse::<f64>()
                .ok()
                .filter(|w| w.is_finite())
                .ok_or_else(|| KbError::InvalidWeight {
                    line: line_no,
                    value: raw_weight.to_string(),
                })?;
            facts.push(KnowledgeFact {
                head: cols[0].trim().to_string(),
                relation: cols[1].trim().to_string(),
                tail: cols[2].trim().to_string(),
                weight,
            });
        }
        Ok(Self::from_facts(facts))
    }

    /// Number of distinct head entities.
    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn fact_count(&self) -> usize {
        self.facts.values().map(Vec::len).sum()
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.facts.keys().map(String::as_str)
    }

    /// The `k` best facts for `entity`; empty when the entity is unknown.
    pub fn retrieve(&self, entity: &str, k: usize) -> &[KnowledgeFact] {
        match self.facts.get(&entity_key(entity)) {
            Some(list) => &list[..k.min(list.len())],
            None => &[],
        }
    }
}

/// Top-`k` facts for `entity`, see [`KnowledgeBase::retrieve`].
pub fn retrieve_facts<'a>(kb: &'a KnowledgeBase, entity: &str, k: usize) -> &'a [KnowledgeFact] {
    kb.retrieve(entity, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn det(label: &str, confidence: f64, step: usize) -> Detection {
        Detection::new(label, confidence, step).unwrap()
    }

    fn labels(set: &EntitySet) -> Vec<&str> {
        set.entities.iter().map(String::as_str).collect()
    }

    #[test]
    fn gather_examples() {
        let out = gather_entities(
            &[
                det("chair", 0.9, 1),
                det("table", 0.4, 1),
                det("sink", 0.55, 1),
            ],
            DEFAULT_CONFIDENCE_THRESHOLD,
        );
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].step, 1);
        assert_eq!(labels(&out[0]), ["chair", "sink"]);

        let out = gather_entities(&[det("lamp", 0.2, 0), det("rug", 0.5, 0)], 0.5);
        assert!(out[0].entities.is_empty());

        let out = gather_entities(&[det("chair", 0.9, 2), det("chair", 0.8, 2)], 0.5);
        assert_eq!(labels(&out[0]), ["chair"]);
    }

    #[test]
    fn gather_groups_steps() {
        let out = gather_entities(&[det("b", 0.9, 3), det("a", 0.9, 0), det("c", 0.1, 1)], 0.5);
        assert_eq!(out.iter().map(|s| s.step).collect::<Vec<_>>(), [0, 1, 3]);
    }

    #[test]
    fn detection_validation() {
        assert_eq!(Detection::new(" ", 0.5, 0), Err(KbError::EmptyLabel));
        assert!(Detection::new("x", 1.5, 0).is_err());
        assert!(Detection::new("x", f64::NAN, 0).is_err());
    }

    const MICROWAVE: &str = "# head\trelation\ttail\tweight\n\
        microwave\tAtLocation\tgarage\t0.5\n\
        microwave\tRelatedTo\toven\t4.1\n\
        microwave\tAtLocation\tkitchen\t6.2\n\
        microwave\tUsedFor\theating\t3.3\n";

    #[test]
    fn load_and_retrieve() {
        let kb = KnowledgeBase::parse_tsv(MICROWAVE).unwrap();
        assert_eq!(kb.len(), 1);
        assert_eq!(kb.fact_count(), 4);
        let top: Vec<(&str, &str)> = kb
            .retrieve("Microwave", DEFAULT_TOP_K)
            .iter()
            .map(|f| (f.relation.as_str(), f.tail.as_str()))
            .collect();
        assert_eq!(
            top,
            [
                ("AtLocation", "kitchen"),
                ("RelatedTo", "oven"),
                ("UsedFor", "heating")
            ]
        );
        assert_eq!(kb.retrieve("microwave", 10).len(), 4);
        assert!(kb.retrieve("toaster", 3).is_empty());
    }

    #[test]
    fn ties_break_on_relation_then_tail() {
        let kb = KnowledgeBase::from_facts(vec![
            KnowledgeFact {
                head: "sofa".into(),
                relation: "UsedFor".into(),
                tail: "sitting".into(),
                weight: 2.0,
            },
            KnowledgeFact {
                head: "sofa".into(),
                relation: "AtLocation".into(),
                tail: "living_room".into(),
                weight: 2.0,
            },
            KnowledgeFact {
                head: "sofa".into(),
                relation: "AtLocation".into(),
                tail: "den".into(),
                weight: 2.0,
            },
        ]);
        let tails: Vec<&str> = kb
            .retrieve("sofa", 3)
            .iter()
            .map(|f| f.tail.as_str())
            .collect();
        assert_eq!(tails, ["den", "living_room", "sitting"]);
    }

    #[test]
    fn parse_errors() {
        assert!(KnowledgeBase::parse_tsv("").unwrap().is_empty());
        assert_eq!(
            KnowledgeBase::parse_tsv("# c\na\tb\tc\tx\n"),
            Err(KbError::InvalidWeight {
                line: 2,
                value: "x".into()
            })
        );
        assert_eq!(
            KnowledgeBase::parse_tsv("a\tb\tc\n"),
            Err(KbError::ColumnCount { line: 1, found: 3 })
        );
        assert_eq!(
            KnowledgeBase::parse_tsv("a\t\tc\t1\n"),
            Err(KbError::EmptyField { line: 1 })
        );
        assert!(matches!(
            KnowledgeBase::parse_tsv("a\tb\tc\tinf\n"),
            Err(KbError::InvalidWeight { .. })
        ));
    }
}
