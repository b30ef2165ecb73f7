//! Tokenization, direction taxonomies, directional-phrase parsing and
//! sub-instruction chunking.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

/// Characters that separate tokens in addition to whitespace.
const PUNCTUATION: &[char] = &['.', ',', ';', ':', '!', '?', '"'];

/// Tokens that open a new sub-instruction.
const BOUNDARY_WORDS: &[&str] = &["and", "then"];

/// Punctuation that marks a clause break for chunking.
const CLAUSE_BREAKS: &[char] = &[',', '.'];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TextError {
    /// Chunking needs at least one token.
    EmptyInstruction,
    EmptyLabel,
    DuplicateClass(String),
    /// A phrase tokenizes to nothing.
    EmptyPhrase {
        class: String,
    },
    /// The same (tokenized) phrase is listed under two classes.
    PhraseConflict {
        phrase: String,
        first: String,
        second: String,
    },
    InvalidVerb {
        line: usize,
    },
}

impl fmt::Display for TextError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextError::EmptyInstruction => write!(f, "instruction has no chunkable content"),
            TextError::EmptyLabel => write!(f, "direction class label is empty"),
            TextError::DuplicateClass(label) => {
                write!(f, "direction class `{label}` is defined twice")
            }
            TextError::EmptyPhrase { class } => {
                write!(f, "class `{class}` contains a phrase with no tokens")
            }
            TextError::PhraseConflict {
                phrase,
                first,
                second,
            } => write!(
                f,
                "phrase `{phrase}` appears under both `{first}` and `{second}`"
            ),
            TextError::InvalidVerb { line } => {
                write!(f, "verb lexicon line {line} holds more than one word")
            }
        }
    }
}

impl core::error::Error for TextError {}

/// A tokenized instruction.
///
/// `spans[i]` is the byte range of token `i` in `raw`. Tokens are the
/// lowercased text of their span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    raw: String,
    tokens: Vec<String>,
    spans: Vec<Range<usize>>,
}

impl Instruction {
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn spans(&self) -> &[Range<usize>] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Whether a comma or period sits between token `index - 1` and token
    /// `index` in the raw text. Always false for the first token.
    pub fn follows_clause_break(&self, index: usize) -> bool {
        if index == 0 || index >= self.spans.len() {
            return false;
        }
        let gap = &self.raw[self.spans[index - 1].end..self.spans[index].start];
        gap.contains(CLAUSE_BREAKS)
    }

    /// Space-joined tokens in `range`.
    pub fn join(&self, range: Range<usize>) -> String {
        self.tokens[range].join(" ")
    }
}

fn is_separator(c: char) -> bool {
    c.is_whitespace() || PUNCTUATION.contains(&c)
}

/// Lowercases `raw` and splits it on whitespace and `. , ; : ! ? "`.
pub fn tokenize(raw: &str) -> Instruction {
    let mut tokens = Vec::new();
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in raw.char_indices() {
        match (is_separator(c), start) {
            (true, Some(s)) => {
                spans.push(s..i);
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push(s..raw.len());
    }
    for span in &spans {
        tokens.push(raw[span.clone()].to_lowercase());
    }
    Instruction {
        raw: raw.to_string(),
        tokens,
        spans,
    }
}

/// One direction class and its synonym phrases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionClass {
    pub label: String,
    pub phrases: Vec<String>,
}

impl DirectionClass {
    pub fn new<L, I, P>(label: L, phrases: I) -> Self
    where
        L: Into<String>,
        I: IntoIterator<Item = P>,
        P: Into<String>,
    {
        DirectionClass {
            label: label.into(),
            phrases: phrases.into_iter().map(Into::into).collect(),
        }
    }
}

/// A named set of direction classes with a longest-match phrase index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionTaxonomy {
    name: String,
    classes: Vec<DirectionClass>,
    // first token -> (phrase tokens, class index), longest phrase first
    index: BTreeMap<String, Vec<(Vec<String>, usize)>>,
}

impl DirectionTaxonomy {
    pub fn new(name: impl Into<String>, classes: Vec<DirectionClass>) -> Result<Self, TextError> {
        let mut labels = BTreeSet::new();
        let mut owner: BTreeMap<Vec<String>, usize> = BTreeMap::new();
        for (ci, class) in classes.iter().enumerate() {
            if class.label.trim().is_empty() {
                return Err(TextError::EmptyLabel);
            }
            if !labels.insert(class.label.as_str()) {
                return Err(TextError::DuplicateClass(class.label.clone()));
            }
            for phrase in &class.phrases {
                let tokens = tokenize(phrase).tokens;
                if tokens.is_empty() {
                    return Err(TextError::EmptyPhrase {
                        class: class.label.clone(),
                    });
                }
                match owner.get(&tokens) {
                    Some(&prev) if prev != ci => {
                        return Err(TextError::PhraseConflict {
                            phrase: tokens.join(" "),
                            first: classes[prev].label.clone(),
                            second: class.label.clone(),
                        });
                    }
                    Some(_) => {}
                    None => {
                        owner.insert(tokens, ci);
                    }
                }
            }
        }

        let mut index: BTreeMap<String, Vec<(Vec<String>, usize)>> = BTreeMap::new();
        for (tokens, ci) in owner {
            index
                .entry(tokens[0].clone())
                .or_default()
                .push((tokens, ci));
        }
        for entries in index.values_mut() {
            // Stable sort keeps the BTreeMap (lexicographic) order among
            // equal lengths, which cannot collide since phrases are unique.
            entries.sort_by_key(|e| core::cmp::Reverse(e.0.len()));
        }

        Ok(DirectionTaxonomy {
            name: name.into(),
            classes,
            index,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn classes(&self) -> &[DirectionClass] {
        &self.classes
    }

    pub fn contains_label(&self, label: &str) -> bool {
        self.classes.iter().any(|c| c.label == label)
    }

    /// Indoor taxonomy with `right`, `left` and `around`.
    pub fn r2r() -> Self {
        Self::from_table("r2r", R2R_CLASSES)
    }

    /// Outdoor taxonomy with `right`, `left` and the clock directions from
    /// nine to three o'clock.
    pub fn urban() -> Self {
        Self::from_table("urban", URBAN_CLASSES)
    }

    /// Looks up a bundled taxonomy by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "r2r" => Some(Self::r2r()),
            "urban" => Some(Self::urban()),
            _ => None,
        }
    }

    fn from_table(name: &str, table: &[(&str, &[&str])]) -> Self {
        let classes = table
            .iter()
            .map(|(label, phrases)| DirectionClass::new(*label, phrases.iter().copied()))
            .collect();
        Self::new(name, classes).expect("bundled taxonomy is valid")
    }

    fn longest_match(&self, tokens: &[String], at: usize) -> Option<(usize, usize)> {
        let candidates = self.index.get(&tokens[at])?;
        candidates.iter().find_map(|(phrase, ci)| {
            let end = at + phrase.len();
            (end <= tokens.len() && tokens[at..end] == phrase[..]).then_some((end, *ci))
        })
    }
}

const RIGHT_PHRASES: &[&str] = &[
    "turn right",
    "make a right",
    "veer right",
    "right",
    "take a right",
    "hang a right",
    "bear right",
    "go right",
    "turn to the right",
    "turn to your right",
    "slight right",
    "sharp right",
];

const LEFT_PHRASES: &[&str] = &[
    "turn left",
    "make a left",
    "veer left",
    "left",
    "take a left",
    "hang a left",
    "bear left",
    "go left",
    "turn to the left",
    "turn to your left",
    "slight left",
    "sharp left",
];

const R2R_CLASSES: &[(&str, &[&str])] = &[
    ("right", RIGHT_PHRASES),
    ("left", LEFT_PHRASES),
    (
        "around",
        &[
            "turn around",
            "turn back around",
            "spin around",
            "turn back",
            "make a u-turn",
            "u-turn",
            "turn 180 degrees",
        ],
    ),
];

const URBAN_CLASSES: &[(&str, &[&str])] = &[
    ("right", RIGHT_PHRASES),
    ("left", LEFT_PHRASES),
    (
        "nine_oclock",
        &["nine o'clock", "9 o'clock", "nine oclock", "9 oclock"],
    ),
    (
        "ten_oclock",
        &["ten o'clock", "10 o'clock", "ten oclock", "10 oclock"],
    ),
    (
        "eleven_oclock",
        &["eleven o'clock", "11 o'clock", "eleven oclock", "11 oclock"],
    ),
    (
        "twelve_oclock",
        &["twelve o'clock", "12 o'clock", "twelve oclock", "12 oclock"],
    ),
    (
        "one_oclock",
        &["one o'clock", "1 o'clock", "one oclock", "1 oclock"],
    ),
    (
        "two_oclock",
        &["two o'clock", "2 o'clock", "two oclock", "2 oclock"],
    ),
    (
        "three_oclock",
        &["three o'clock", "3 o'clock", "three oclock", "3 oclock"],
    ),
];

/// A matched directional phrase. `start..end` indexes instruction tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionPhrase {
    pub class_label: String,
    pub start: usize,
    pub end: usize,
}

impl DirectionPhrase {
    pub fn span(&self) -> Range<usize> {
        self.start..self.end
    }
}

/// Greedy longest-match scan, left to right. Unmatched tokens are skipped.
pub fn parse_directions(instr: &Instruction, taxonomy: &DirectionTaxonomy) -> Vec<DirectionPhrase> {
    let tokens = instr.tokens();
    let mut found = Vec::new();
    let mut at = 0;
    while at < tokens.len() {
        match taxonomy.longest_match(tokens, at) {
            Some((end, ci)) => {
                found.push(DirectionPhrase {
                    class_label: taxonomy.classes[ci].label.clone(),
                    start: at,
                    end,
                });
                at = end;
            }
            None => at += 1,
        }
    }
    found
}

/// Set of action verbs used to decide whether a chunk stands on its own.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VerbLexicon {
    verbs: BTreeSet<String>,
}

const NAVIGATION_VERBS: &[&str] = &[
    "walk", "go", "turn", "stop", "exit", "enter", "continue", "head", "proceed", "move", "take",
    "make", "veer", "bear", "climb", "descend", "ascend", "pass", "follow", "cross", "wait",
    "stand", "keep", "leave", "approach", "step", "travel", "return", "reach", "face", "pause",
    "come", "get", "hang", "navigate", "run", "start", "stay", "circle", "jog", "finish",
];

impl VerbLexicon {
    /// The bundled lexicon of navigation verbs.
    pub fn navigation() -> Self {
        NAVIGATION_VERBS.iter().copied().collect()
    }

    /// One verb per line; `#` starts a comment; blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self, TextError> {
        let mut verbs = BTreeSet::new();
        for (i, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if content.split_whitespace().count() != 1 {
                return Err(TextError::InvalidVerb { line: i + 1 });
            }
            verbs.insert(content.to_lowercase());
        }
        Ok(VerbLexicon { verbs })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.verbs.contains(word)
    }

    pub fn len(&self) -> usize {
        self.verbs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.verbs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.verbs.iter().map(String::as_str)
    }
}

impl<'a> FromIterator<&'a str> for VerbLexicon {
    fn from_iter<I: IntoIterator<Item = &'a str>>(iter: I) -> Self {
        VerbLexicon {
            verbs: iter.into_iter().map(str::to_lowercase).collect(),
        }
    }
}

/// One chunk of an instruction. `index` counts from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubInstruction {
    pub index: usize,
    pub start: usize,
    pub end: usize,
}

impl SubInstruction {
    pub fn span(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

/// Splits an instruction into action chunks.
///
/// A new chunk opens before `and`, `then`, and any token preceded by a comma
/// or period. Chunks without a lexicon verb are folded into the chunk before
/// them; the first chunk is always kept.
pub fn chunk_instruction(
    instr: &Instruction,
    verbs: &VerbLexicon,
) -> Result<Vec<SubInstruction>, TextError> {
    if instr.is_empty() {
        return Err(TextError::EmptyInstruction);
    }
    let tokens = instr.tokens();
    let mut starts = Vec::new();
    starts.push(0);
    for (i, token) in tokens.iter().enumerate().skip(1) {
        if BOUNDARY_WORDS.contains(&token.as_str()) || instr.follows_clause_break(i) {
            starts.push(i);
        }
    }

    let mut chunks: Vec<(usize, usize)> = Vec::with_capacity(starts.len());
    for (k, &start) in starts.iter().enumerate() {
        let end = starts.get(k + 1).copied().unwrap_or(tokens.len());
        let has_verb = tokens[start..end].iter().any(|t| verbs.contains(t));
        match chunks.last_mut() {
            Some(prev) if !has_verb => prev.1 = end,
            _ => chunks.push((start, end)),
        }
    }

    Ok(chunks
        .into_iter()
        .enumerate()
        .map(|(i, (start, end))| SubInstruction {
            index: i + 1,
            start,
            end,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn labels(text: &str, taxonomy: &DirectionTaxonomy) -> Vec<String> {
        parse_directions(&tokenize(text), taxonomy)
            .into_iter()
            .map(|p| p.class_label)
            .collect()
    }

    fn chunk_texts(text: &str) -> Vec<String> {
        let instr = tokenize(text);
        chunk_instruction(&instr, &VerbLexicon::navigation())
            .unwrap()
            .iter()
            .map(|c| instr.join(c.span()))
            .collect()
    }

    #[test]
    fn tokenize_strips_punctuation_and_case() {
        let instr = tokenize("Turn Left, then stop.");
        assert_eq!(instr.tokens(), ["turn", "left", "then", "stop"]);
        assert_eq!(instr.spans()[1], 5..9);
        assert!(instr.follows_clause_break(2));
        assert!(!instr.follows_clause_break(1));
    }

    #[test]
    fn tokenize_empty_and_whitespace() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  \t ,. ").is_empty());
        assert_eq!(tokenize("make   a right").tokens(), ["make", "a", "right"]);
    }

    #[test]
    fn tokenize_keeps_apostrophes_and_hyphens() {
        assert_eq!(
            tokenize("Head to 9 o'clock, make a u-turn").tokens(),
            ["head", "to", "9", "o'clock", "make", "a", "u-turn"]
        );
    }

    #[test]
    fn directions_r2r_examples() {
        let r2r = DirectionTaxonomy::r2r();
        assert_eq!(
            labels(
                "walk straight then turn left and make a right at the sofa",
                &r2r
            ),
            ["left", "right"]
        );
        assert!(labels("go to the kitchen", &r2r).is_empty());
        assert_eq!(
            labels("turn around and veer right", &r2r),
            ["around", "right"]
        );
    }

    #[test]
    fn directions_urban_clock() {
        let urban = DirectionTaxonomy::urban();
        assert_eq!(
            labels(
                "Walk toward 2 o'clock, then turn left at ten o'clock.",
                &urban
            ),
            ["two_oclock", "left", "ten_oclock"]
        );
    }

    #[test]
    fn longest_match_wins() {
        let tax = DirectionTaxonomy::new(
            "t",
            vec![DirectionClass::new("right", ["right", "make a right"])],
        )
        .unwrap();
        let found = parse_directions(&tokenize("make a right"), &tax);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].span(), 0..3);
    }

    #[test]
    fn taxonomy_rejects_conflicts() {
        let err = DirectionTaxonomy::new(
            "t",
            vec![
                DirectionClass::new("right", ["Right"]),
                DirectionClass::new("left", ["right."]),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, TextError::PhraseConflict { .. }));

        let err = DirectionTaxonomy::new(
            "t",
            vec![
                DirectionClass::new("right", ["right"]),
                DirectionClass::new("right", ["rt"]),
            ],
        )
        .unwrap_err();
        assert_eq!(err, TextError::DuplicateClass("right".into()));

        let err =
            DirectionTaxonomy::new("t", vec![DirectionClass::new("x", [" ,, "])]).unwrap_err();
        assert!(matches!(err, TextError::EmptyPhrase { .. }));
    }

    #[test]
    fn chunk_examples() {
        assert_eq!(
            chunk_texts("walk out of the bathroom and go into the living room"),
            ["walk out of the bathroom", "and go into the living room"]
        );
        assert_eq!(chunk_texts("turn left"), ["turn left"]);
        assert_eq!(
            chunk_texts("go down the stairs, then stop at the door"),
            ["go down the stairs", "then stop at the door"]
        );
    }

    #[test]
    fn chunk_merges_verbless_tails() {
        assert_eq!(
            chunk_texts("walk past the table and chairs, and the rug. Stop"),
            ["walk past the table and chairs and the rug", "stop"]
        );
        // first chunk survives without a verb
        assert_eq!(
            chunk_texts("the hallway, then turn right"),
            ["the hallway", "then turn right"]
        );
    }

    #[test]
    fn chunk_indices_and_empty_input() {
        let instr = tokenize("walk ahead then turn left and stop");
        let chunks = chunk_instruction(&instr, &VerbLexicon::navigation()).unwrap();
        assert_eq!(
            chunks.iter().map(|c| c.index).collect::<Vec<_>>(),
            [1, 2, 3]
        );
        assert_eq!(
            chunk_instruction(&tokenize(" . "), &VerbLexicon::navigation()),
            Err(TextError::EmptyInstruction)
        );
    }

    #[test]
    fn verb_lexicon_parsing() {
        let lex = VerbLexicon::parse("# verbs\nWalk\n\n go # inline\n").unwrap();
        assert_eq!(lex.iter().collect::<Vec<_>>(), ["go", "walk"]);
        assert_eq!(
            VerbLexicon::parse("walk\ngo left\n"),
            Err(TextError::InvalidVerb { line: 2 })
        );
        assert!(VerbLexicon::navigation().len() >= 35);
    }
}
