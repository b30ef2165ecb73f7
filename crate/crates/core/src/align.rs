//! Temporal alignment between sub-instructions and trajectory viewpoints.
//!
//! [`dtw_align`] finds the cheapest monotone path through a cosine cost
//! matrix, [`expand_alignment`] lifts it to word level, and the two losses
//! score decoder attention and hidden states against that target.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::text::SubInstruction;

/// Log clamp used by [`attention_coverage_loss`] by default.
pub const DEFAULT_EPS: f64 = 1e-8;

/// Row-sum tolerance for attention matrices.
const ATTENTION_ROW_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceRole {
    SubInstruction,
    Panorama,
    Word,
}

impl fmt::Display for SequenceRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SequenceRole::SubInstruction => "sub-instruction",
            SequenceRole::Panorama => "panorama",
            SequenceRole::Word => "word",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlignError {
    EmptySequence(SequenceRole),
    RaggedVector {
        role: SequenceRole,
        index: usize,
        expected: usize,
        found: usize,
    },
    NonFinite {
        role: SequenceRole,
        index: usize,
    },
    DimensionMismatch {
        expected: usize,
        found: usize,
    },
    ZeroNorm {
        role: SequenceRole,
        index: usize,
    },
    EmptyMatrix,
    RaggedMatrix {
        row: usize,
    },
    NonFiniteCost {
        row: usize,
        col: usize,
    },
    InvalidAlignment(&'static str),
    SubInstructionCount {
        subs: usize,
        rows: usize,
    },
    UncoveredWord(usize),
    OverlappingWord(usize),
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    InvalidAttention {
        row: usize,
    },
    InvalidTarget {
        row: usize,
    },
    EmptyTargetRow(usize),
    InvalidEps,
    InvalidWeight,
}

impl fmt::Display for AlignError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use AlignError::*;
        match self {
            EmptySequence(role) => write!(f, "{role} sequence is empty"),
            RaggedVector {
                role,
                index,
                expected,
                found,
            } => write!(
                f,
                "{role} vector {index} has dimension {found}, expected {expected}"
            ),
            NonFinite { role, index } => write!(f, "{role} vector {index} has a non-finite entry"),
            DimensionMismatch { expected, found } => {
                write!(f, "vector dimension {found} does not match {expected}")
            }
            ZeroNorm { role, index } => write!(f, "{role} vector {index} has zero norm"),
            EmptyMatrix => write!(f, "matrix must have at least one row and one column"),
            RaggedMatrix { row } => write!(f, "matrix row {row} has the wrong length"),
            NonFiniteCost { row, col } => write!(f, "cost ({row}, {col}) is not finite"),
            InvalidAlignment(why) => write!(f, "invalid alignment matrix: {why}"),
            SubInstructionCount { subs, rows } => write!(
                f,
                "{subs} sub-instructions given for an alignment with {rows} rows"
            ),
            UncoveredWord(o) => write!(f, "word {o} is not covered by any sub-instruction"),
            OverlappingWord(o) => write!(f, "word {o} is covered by two sub-instructions"),
            ShapeMismatch { expected, found } => write!(
                f,
                "shape {}x{} does not match {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            InvalidAttention { row } => write!(
                f,
                "attention row {row} must hold values in [0, 1] summing to 1"
            ),
            InvalidTarget { row } => write!(f, "target row {row} must hold only 0 or 1"),
            EmptyTargetRow(o) => write!(f, "target row {o} has no aligned viewpoint"),
            InvalidEps => write!(f, "eps must be positive and finite"),
            InvalidWeight => write!(f, "loss weights must be finite and non-negative"),
        }
    }
}

impl core::error::Error for AlignError {}

/// A nonempty sequence of equal-length finite vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenSequence {
    role: SequenceRole,
    dim: usize,
    data: Vec<f64>,
}

impl HiddenSequence {
    pub fn new(role: SequenceRole, vectors: &[Vec<f64>]) -> Result<Self, AlignError> {
        let dim = vectors
            .first()
            .ok_or(AlignError::EmptySequence(role))?
            .len();
        if dim == 0 {
            return Err(AlignError::EmptySequence(role));
        }
        let mut data = Vec::with_capacity(dim * vectors.len());
        for (index, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(AlignError::RaggedVector {
                    role,
                    index,
                    expected: dim,
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(AlignError::NonFinite { role, index });
            }
            data.extend_from_slice(v);
        }
        Ok(HiddenSequence { role, dim, data })
    }

    pub fn role(&self) -> SequenceRole {
        self.role
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    /// Mean vector of each sub-instruction's words, as sub-instruction states.
    pub fn mean_pool(&self, subs: &[SubInstruction]) -> Result<HiddenSequence, AlignError> {
        if subs.is_empty() {
            return Err(AlignError::EmptySequence(SequenceRole::SubInstruction));
        }
        let mut pooled = Vec::with_capacity(subs.len() * self.dim);
        for sub in subs {
            if sub.is_empty() || sub.end > self.len() {
                return Err(AlignError::UncoveredWord(sub.end.min(self.len())));
            }
            let mut mean = vec![0.0; self.dim];
            for o in sub.span() {
                for (m, x) in mean.iter_mut().zip(self.get(o)) {
                    *m += x;
                }
            }
            let n = sub.len() as f64;
            pooled.extend(mean.into_iter().map(|m| m / n));
        }
        Ok(HiddenSequence {
            role: SequenceRole::SubInstruction,
            dim: self.dim,
            data: pooled,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Dense row-major real matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

fn flatten_rows(rows: &[Vec<f64>]) -> Result<(usize, usize, Vec<f64>), AlignError> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || cols == 0 {
        return Err(AlignError::EmptyMatrix);
    }
    let mut values = Vec::with_capacity(rows.len() * cols);
    for (row, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(AlignError::RaggedMatrix { row });
        }
        values.extend_from_slice(r);
    }
    Ok((rows.len(), cols, values))
}

impl CostMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AlignError> {
        let (m, n, values) = flatten_rows(rows)?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(AlignError::NonFiniteCost {
                row: i / n,
                col: i % n,
            });
        }
        Ok(CostMatrix {
            rows: m,
            cols: n,
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, m: usize, t: usize) -> f64 {
        self.values[m * self.cols + t]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }
}

/// `cost(m, t) = 1 - cos(sub_m, pano_t)`, in `[0, 2]`.
pub fn build_cost(subs: &HiddenSequence, panos: &HiddenSequence) -> Result<CostMatrix, AlignError> {
    if subs.dim() != panos.dim() {
        return Err(AlignError::DimensionMismatch {
            expected: subs.dim(),
            found: panos.dim(),
        });
    }
    let norms = |seq: &HiddenSequence| -> Result<Vec<f64>, AlignError> {
        seq.iter()
            .enumerate()
            .map(|(index, v)| {
                let n = norm(v);
                if n > 0.0 {
                    Ok(n)
                } else {
                    Err(AlignError::ZeroNorm {
                        role: seq.role(),
                        index,
                    })
                }
            })
            .collect()
    };
    let sub_norms = norms(subs)?;
    let pano_norms = norms(panos)?;

    let mut values = Vec::with_capacity(subs.len() * panos.len());
    for (s, sn) in subs.iter().zip(&sub_norms) {
        for (p, pn) in panos.iter().zip(&pano_norms) {
            let cos = (dot(s, p) / (sn * pn)).clamp(-1.0, 1.0);
            values.push(1.0 - cos);
        }
    }
    Ok(CostMatrix {
        rows: subs.len(),
        cols: panos.len(),
        values,
    })
}

/// Binary M×N matrix whose ones form a monotone staircase path from the
/// top-left to the bottom-right cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignmentMatrix {
    rows: usize,
    cols: usize,
    path: Vec<(usize, usize)>,
}

impl AlignmentMatrix {
    /// Validates a path given in order.
    pub fn from_path(
        rows: usize,
        cols: usize,
        path: Vec<(usize, usize)>,
    ) -> Result<Self, AlignError> {
        if rows == 0 || cols == 0 {
            return Err(AlignError::EmptyMatrix);
        }
        if path.first() != Some(&(0, 0)) {
            return Err(AlignError::InvalidAlignment(
                "path must start at the first cell",
            ));
        }
        if path.last() != Some(&(rows - 1, cols - 1)) {
            return Err(AlignError::InvalidAlignment(
                "path must end at the last cell",
            ));
        }
        for w in path.windows(2) {
            let (dm, dt) = (w[1].0.wrapping_sub(w[0].0), w[1].1.wrapping_sub(w[0].1));
            if !matches!((dm, dt), (0, 1) | (1, 0) | (1, 1)) {
                return Err(AlignError::InvalidAlignment("path takes an illegal step"));
            }
        }
        Ok(AlignmentMatrix { rows, cols, path })
    }

    /// Validates a 0/1 matrix.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self, AlignError> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut path = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(AlignError::RaggedMatrix { row: i });
            }
            for (t, &v) in r.iter().enumerate() {
                match v {
                    0 => {}
                    1 => path.push((i, t)),
                    _ => return Err(AlignError::InvalidAlignment("entries must be 0 or 1")),
                }
            }
        }
        Self::from_path(m, n, path)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Aligned cells in path order.
    pub fn path(&self) -> &[(usize, usize)] {
        &self.path
    }

    pub fn get(&self, m: usize, t: usize) -> bool {
        self.path.binary_search(&(m, t)).is_ok()
    }

    pub fn row(&self, m: usize) -> Vec<bool> {
        let mut row = vec![false; self.cols];
        for &(_, t) in self.path.iter().filter(|(pm, _)| *pm == m) {
            row[t] = true;
        }
        row
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        let mut out = vec![vec![0u8; self.cols]; self.rows];
        for &(m, t) in &self.path {
            out[m][t] = 1;
        }
        out
    }

    /// Sum of `cost` over the aligned cells.
    pub fn path_cost(&self, cost: &CostMatrix) -> f64 {
        self.path.iter().map(|&(m, t)| cost.get(m, t)).sum()
    }
}

/// Minimum-cost monotone alignment with steps (0,1), (1,0), (1,1).
///
/// Backtracking prefers the diagonal predecessor, then the vertical one
/// (previous sub-instruction), then the horizontal one.
pub fn dtw_align(cost: &CostMatrix) -> AlignmentMatrix {
    let (rows, cols) = (cost.rows, cost.cols);
    let mut acc = vec![0.0f64; rows * cols];
    let at = |m: usize, t: usize| m * cols + t;
    for m in 0..rows {
        for t in 0..cols {
            let best_prev = match (m, t) {
                (0, 0) => 0.0,
                (0, _) => acc[at(0, t - 1)],
                (_, 0) => acc[at(m - 1, 0)],
                _ => acc[at(m - 1, t - 1)]
                    .min(acc[at(m - 1, t)])
                    .min(acc[at(m, t - 1)]),
            };
            acc[at(m, t)] = cost.get(m, t) + best_prev;
        }
    }

    let (mut m, mut t) = (rows - 1, cols - 1);
    let mut path = vec![(m, t)];
    while (m, t) != (0, 0) {
        (m, t) = match (m, t) {
            (0, _) => (0, t - 1),
            (_, 0) => (m - 1, 0),
            _ => {
                let diag = acc[at(m - 1, t - 1)];
                let up = acc[at(m - 1, t)];
                let left = acc[at(m, t - 1)];
                if diag <= up && diag <= left {
                    (m - 1, t - 1)
                } else if up <= left {
                    (m - 1, t)
                } else {
                    (m, t - 1)
                }
            }
        };
        path.push((m, t));
    }
    path.reverse();
    AlignmentMatrix { rows, cols, path }
}

/// Word-level binary target. Row `o` is the alignment row of the
/// sub-instruction containing word `o`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
    word_to_sub: Option<Vec<usize>>,
}

impl TargetMatrix {
    /// Builds a target directly from 0/1 rows, with no sub-instruction map.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self, AlignError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || cols == 0 {
            return Err(AlignError::EmptyMatrix);
        }
        let mut cells = Vec::with_capacity(rows.len() * cols);
        for (row, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(AlignError::RaggedMatrix { row });
            }
            for &v in r {
                match v {
                    0 => cells.push(false),
                    1 => cells.push(true),
                    _ => return Err(AlignError::InvalidTarget { row }),
                }
            }
        }
        Ok(TargetMatrix {
            rows: rows.len(),
            cols,
            cells,
            word_to_sub: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, o: usize, t: usize) -> bool {
        self.cells[o * self.cols + t]
    }

    pub fn row(&self, o: usize) -> &[bool] {
        &self.cells[o * self.cols..(o + 1) * self.cols]
    }

    /// Zero-based sub-instruction position of each word, when known.
    pub fn word_to_sub(&self) -> Option<&[usize]> {
        self.word_to_sub.as_deref()
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.cells
            .chunks(self.cols)
            .map(|r| r.iter().map(|&b| u8::from(b)).collect())
            .collect()
    }
}

/// Expands a sub-instruction alignment to one row per word.
///
/// `subs[i]` corresponds to row `i` of `a`; their spans must partition
/// `0..n_words`.
pub fn expand_alignment(
    a: &AlignmentMatrix,
    subs: &[SubInstruction],
    n_words: usize,
) -> Result<TargetMatrix, AlignError> {
    if subs.len() != a.rows() {
        return Err(AlignError::SubInstructionCount {
            subs: subs.len(),
            rows: a.rows(),
        });
    }
    let mut owner: Vec<Option<usize>> = vec![None; n_words];
    for (m, sub) in subs.iter().enumerate() {
        for o in sub.span() {
            match owner.get_mut(o) {
                None => return Err(AlignError::UncoveredWord(o)),
                Some(Some(_)) => return Err(AlignError::OverlappingWord(o)),
                Some(slot) => *slot = Some(m),
            }
        }
    }
    let word_to_sub = owner
        .into_iter()
        .enumerate()
        .map(|(o, m)| m.ok_or(AlignError::UncoveredWord(o)))
        .collect::<Result<Vec<_>, _>>()?;
    if n_words == 0 {
        return Err(AlignError::EmptyMatrix);
    }

    let sub_rows: Vec<Vec<bool>> = (0..a.rows()).map(|m| a.row(m)).collect();
    let mut cells = Vec::with_capacity(n_words * a.cols());
    for &m in &word_to_sub {
        cells.extend_from_slice(&sub_rows[m]);
    }
    Ok(TargetMatrix {
        rows: n_words,
        cols: a.cols(),
        cells,
        word_to_sub: Some(word_to_sub),
    })
}

/// Decoder attention weights, one row per word. Rows lie in `[0, 1]` and sum
/// to 1 within 1e-6.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl AttentionMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, AlignError> {
        let (m, n, values) = flatten_rows(rows)?;
        for (row, r) in values.chunks(n).enumerate() {
            let in_range = r.iter().all(|v| (0.0..=1.0).contains(v));
            let sum: f64 = r.iter().sum();
            if !in_range || (sum - 1.0).abs() > ATTENTION_ROW_TOL {
                return Err(AlignError::InvalidAttention { row });
            }
        }
        Ok(AttentionMatrix {
            rows: m,
            cols: n,
            values,
        })
    }

    /// Row-wise softmax of `word · panorama` dot products.
    pub fn softmax_of_dots(
        words: &HiddenSequence,
        panos: &HiddenSequence,
    ) -> Result<Self, AlignError> {
        if words.dim() != panos.dim() {
            return Err(AlignError::DimensionMismatch {
                expected: words.dim(),
                found: panos.dim(),
            });
        }
        let mut values = Vec::with_capacity(words.len() * panos.len());
        for w in words.iter() {
            let logits: Vec<f64> = panos.iter().map(|p| dot(w, p)).collect();
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| libm::exp(l - max)).collect();
            let z: f64 = exps.iter().sum();
            values.extend(exps.into_iter().map(|e| e / z));
        }
        Ok(AttentionMatrix {
            rows: words.len(),
            cols: panos.len(),
            values,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, o: usize, t: usize) -> f64 {
        self.values[o * self.cols + t]
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.values[o * self.cols..(o + 1) * self.cols]
    }
}

/// Attention coverage loss.
///
/// For each word, the attention mass on aligned viewpoints and the
/// complement mass `Σ (1 - A') (1 - β)` on unaligned ones both enter a log,
/// clamped from below at `eps`. The result is averaged over words and negated.
pub fn attention_coverage_loss(
    beta: &AttentionMatrix,
    a_prime: &TargetMatrix,
    eps: f64,
) -> Result<f64, AlignError> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(AlignError::InvalidEps);
    }
    if (beta.rows, beta.cols) != (a_prime.rows, a_prime.cols) {
        return Err(AlignError::ShapeMismatch {
            expected: (a_prime.rows, a_prime.cols),
            found: (beta.rows, beta.cols),
        });
    }
    let mut total = 0.0;
    for o in 0..beta.rows {
        let mut aligned = 0.0;
        let mut unaligned = 0.0;
        for (&b, &target) in beta.row(o).iter().zip(a_prime.row(o)) {
            if target {
                aligned += b;
            } else {
                unaligned += 1.0 - b;
            }
        }
        total += libm::log(aligned.max(eps)) + libm::log(unaligned.max(eps));
    }
    Ok(-total / beta.rows as f64)
}

/// Contrastive loss between word and panorama hidden states.
///
/// Per word, the softmax over `panorama · word` logits is summed over the
/// aligned viewpoints; the loss is the mean negative log of that mass.
pub fn contrastive_loss(
    panos: &HiddenSequence,
    words: &HiddenSequence,
    a_prime: &TargetMatrix,
) -> Result<f64, AlignError> {
    if panos.dim() != words.dim() {
        return Err(AlignError::DimensionMismatch {
            expected: words.dim(),
            found: panos.dim(),
        });
    }
    if (words.len(), panos.len()) != (a_prime.rows, a_prime.cols) {
        return Err(AlignError::ShapeMismatch {
            expected: (a_prime.rows, a_prime.cols),
            found: (words.len(), panos.len()),
        });
    }
    let mut total = 0.0;
    let mut logits = vec![0.0; panos.len()];
    for (o, w) in words.iter().enumerate() {
        let target = a_prime.row(o);
        if !target.contains(&true) {
            return Err(AlignError::EmptyTargetRow(o));
        }
        for (l, p) in logits.iter_mut().zip(panos.iter()) {
            *l = dot(p, w);
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut all = 0.0;
        let mut aligned = 0.0;
        for (&l, &hit) in logits.iter().zip(target) {
            let e = libm::exp(l - max);
            all += e;
            if hit {
                aligned += e;
            }
        }
        total += libm::log(all) - libm::log(aligned);
    }
    Ok(total / words.len() as f64)
}

/// Balancing factors for the two alignment losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda1: 1.0,
            lambda2: 1.0,
        }
    }
}

impl LossWeights {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self, AlignError> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if ok(lambda1) && ok(lambda2) {
            Ok(LossWeights { lambda1, lambda2 })
        } else {
            Err(AlignError::InvalidWeight)
        }
    }

    pub fn total(&self, ce: f64, l_att: f64, l_nce: f64) -> f64 {
        total_loss(ce, l_att, l_nce, self.lambda1, self.lambda2)
    }
}

/// `ce + lambda1 * l_att + lambda2 * l_nce`.
pub fn total_loss(ce: f64, l_att: f64, l_nce: f64, lambda1: f64, lambda2: f64) -> f64 {
    ce + lambda1 * l_att + lambda2 * l_nce
}
