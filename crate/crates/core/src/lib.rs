//! Evaluation primitives for navigation instructions.
//!
//! * [`text`]: tokenization, direction taxonomies, directional-phrase parsing
//!   and rule-based sub-instruction chunking.
//! * [`metric`]: semantic-tuple matching, LCS direction matching, SPICE and
//!   the direction-aware SPICE-D score.
//! * [`align`]: DTW alignment between sub-instruction and viewpoint hidden
//!   states, the word-level target matrix, and the attention-coverage and
//!   contrastive losses.
//! * [`knowledge`]: detection filtering and top-K knowledge-fact retrieval.
//! * [`stats`]: Pearson correlation between metric and human scores.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! anything touching the filesystem live in the `naveval` crate.
//!
//! ```
//! use naveval_core::*;
//!
//! let tax = DirectionTaxonomy::r2r();
//! let cand = DirectionSequence::parse(&tokenize("turn left then veer right"), &tax);
//! assert_eq!(cand.labels(), ["left", "right"]);
//!
//! let cost = CostMatrix::from_rows(&[vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]).unwrap();
//! assert_eq!(dtw_align(&cost).to_rows(), [[1, 1, 0], [0, 0, 1]]);
//! ```

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod align;
pub mod knowledge;
pub mod metric;
pub mod stats;
pub mod text;

pub use align::{
    attention_coverage_loss, build_cost, contrastive_loss, dtw_align, expand_alignment, total_loss,
    AlignError, AlignmentMatrix, AttentionMatrix, CostMatrix, HiddenSequence, LossWeights,
    SequenceRole, TargetMatrix, DEFAULT_EPS,
};
pub use knowledge::{
    gather_entities, retrieve_facts, Detection, EntitySet, KbError, KnowledgeBase, KnowledgeFact,
    DEFAULT_CONFIDENCE_THRESHOLD, DEFAULT_TOP_K,
};
pub use metric::{
    f_score, lcs_length, match_tuples, score_pair, spice_d_score, spice_score, Aggregation,
    DirectionSequence, MetricError, ScoreCounts, ScoreReport, ScoredText, SemanticTuple,
    SemanticTupleSet, SpiceScore, SynonymGroups, TupleSource,
};
pub use stats::{
    correlate_metrics, pearson, CorrelationReport, MetricCorrelation, MetricTable, StatsError,
};
pub use text::{
    chunk_instruction, parse_directions, tokenize, DirectionClass, DirectionPhrase,
    DirectionTaxonomy, Instruction, SubInstruction, TextError, VerbLexicon,
};
