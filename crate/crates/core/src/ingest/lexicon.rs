//! Style-marker lexicons: one lowercase word set per marker category.
//!
//! Lexicons ship with compact defaults and can be replaced from a config
//! file with one `<category> <word>` entry per line (`#` comments). Word
//! sets must be disjoint across categories; duplicates are rejected.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::ingest::tokenize;
use crate::record::{MarkerCategory, MarkerCounts};

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: expected `<category> <word>`")]
    Malformed { line: usize },
    #[error("line {line}: unknown marker category `{category}`")]
    UnknownCategory { line: usize, category: String },
    #[error("duplicate word `{word}` (in {first} and {second})")]
    DuplicateWord {
        word: String,
        first: MarkerCategory,
        second: MarkerCategory,
    },
    #[error("category {0} has no words")]
    EmptyCategory(MarkerCategory),
}

#[derive(Debug, Clone)]
pub struct MarkerLexicon {
    pub category: MarkerCategory,
    pub words: HashSet<String>,
}

/// The validated set of all six lexicons.
#[derive(Debug, Clone)]
pub struct LexiconSet {
    by_word: HashMap<String, MarkerCategory>,
    sizes: [usize; 6],
}

const DEFAULT_WORDS: &[(MarkerCategory, &[&str])] = &[
    (MarkerCategory::Articles, &["a", "an", "the"]),
    (
        MarkerCategory::AuxiliaryVerbs,
        &[
            "am", "are", "be", "been", "being", "can", "could", "did", "do", "does", "doing",
            "had", "has", "have", "having", "is", "may", "might", "must", "shall", "should",
            "was", "were", "will", "would",
        ],
    ),
    (
        MarkerCategory::Conjunctions,
        &["although", "and", "because", "but", "nor", "or", "so", "unless", "whereas", "while", "yet"],
    ),
    (
        MarkerCategory::PersonalPronouns,
        &[
            "he", "her", "hers", "him", "his", "i", "it", "its", "me", "mine", "my", "our",
            "ours", "she", "their", "theirs", "them", "they", "us", "we", "you", "your", "yours",
        ],
    ),
    (
        MarkerCategory::Prepositions,
        &[
            "about", "above", "across", "after", "against", "at", "before", "behind", "below",
            "beneath", "beside", "between", "by", "down", "during", "for", "from", "in",
            "inside", "into", "near", "of", "off", "on", "onto", "out", "outside", "over",
            "through", "to", "under", "until", "up", "upon", "with", "without",
        ],
    ),
    (
        MarkerCategory::Quantifiers,
        &[
            "all", "any", "both", "each", "enough", "every", "few", "fewer", "less", "little",
            "many", "more", "most", "much", "none", "several", "some",
        ],
    ),
];

impl Default for LexiconSet {
    fn default() -> Self {
        let mut builder = Builder::new();
        for (cat, words) in DEFAULT_WORDS {
            for w in *words {
                builder.insert(*cat, w).expect("default lexicons are disjoint");
            }
        }
        builder.finish().expect("default lexicons are complete")
    }
}

impl LexiconSet {
    /// Parses a lexicon config file; words are case-folded.
    pub fn parse(text: &str) -> Result<LexiconSet, LexiconError> {
        let mut builder = Builder::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(at) => &raw[..at],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (cat_tok, word) = line
                .split_once(char::is_whitespace)
                .ok_or(LexiconError::Malformed { line: line_no })?;
            let category = MarkerCategory::from_name(cat_tok).ok_or_else(|| {
                LexiconError::UnknownCategory {
                    line: line_no,
                    category: cat_tok.to_string(),
                }
            })?;
            builder.insert(category, word.trim())?;
        }
        builder.finish()
    }

    /// Per-category counts of tokens of `body` (case-folded) present in
    /// each category's word set.
    pub fn count_markers(&self, body: &str) -> MarkerCounts {
        let mut counts = MarkerCounts::default();
        for tok in tokenize::tokens(body) {
            let folded = tok.to_lowercase();
            if let Some(cat) = self.by_word.get(&folded) {
                counts.0[cat.index()] += 1;
            }
        }
        counts
    }

    pub fn category_of(&self, word: &str) -> Option<MarkerCategory> {
        self.by_word.get(word).copied()
    }

    pub fn lexicons(&self) -> Vec<MarkerLexicon> {
        let mut out: Vec<MarkerLexicon> = MarkerCategory::ALL
            .iter()
            .map(|&category| MarkerLexicon {
                category,
                words: HashSet::new(),
            })
            .collect();
        for (word, cat) in &self.by_word {
            out[cat.index()].words.insert(word.clone());
        }
        out
    }

    pub fn len(&self, cat: MarkerCategory) -> usize {
        self.sizes[cat.index()]
    }
}

struct Builder {
    by_word: HashMap<String, MarkerCategory>,
    sizes: [usize; 6],
}

impl Builder {
    fn new() -> Builder {
        Builder {
            by_word: HashMap::new(),
            sizes: [0; 6],
        }
    }

    fn insert(&mut self, category: MarkerCategory, word: &str) -> Result<(), LexiconError> {
        let folded = word.to_lowercase();
        if let Some(&first) = self.by_word.get(&folded) {
            return Err(LexiconError::DuplicateWord {
                word: folded,
                first,
                second: category,
            });
        }
        self.by_word.insert(folded, category);
        self.sizes[category.index()] += 1;
        Ok(())
    }

    fn finish(self) -> Result<LexiconSet, LexiconError> {
        for cat in MarkerCategory::ALL {
            if self.sizes[cat.index()] == 0 {
                return Err(LexiconError::EmptyCategory(cat));
            }
        }
        Ok(LexiconSet {
            by_word: self.by_word,
            sizes: self.sizes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_disjoint_and_complete() {
        let set = LexiconSet::default();
        for cat in MarkerCategory::ALL {
            assert!(set.len(cat) > 0, "{cat} empty");
        }
        // Disjointness is enforced by construction; also verify the raw
        // default table has no duplicate across categories.
        let mut seen = HashSet::new();
        for (_, words) in DEFAULT_WORDS {
            for w in *words {
                assert!(seen.insert(*w), "duplicate default word {w}");
            }
        }
    }

    #[test]
    fn counts_case_folded_tokens() {
        let set = LexiconSet::default();
        let counts = set.count_markers("The cat sat on the mat");
        assert_eq!(counts.get(MarkerCategory::Articles), 2);
        assert_eq!(counts.get(MarkerCategory::Prepositions), 1); // "on"
        assert_eq!(counts.get(MarkerCategory::Quantifiers), 0);
    }

    #[test]
    fn empty_body_counts_zero() {
        let set = LexiconSet::default();
        assert_eq!(set.count_markers(""), MarkerCounts::default());
    }

    #[test]
    fn every_word_counted_at_upper_bound() {
        let set = LexiconSet::default();
        let body = vec!["the"; 100].join(" ");
        let counts = set.count_markers(&body);
        assert_eq!(counts.get(MarkerCategory::Articles), 100);
        assert_eq!(tokenize::word_count(&body), 100);
    }

    #[test]
    fn parse_rejects_duplicates() {
        let err = LexiconSet::parse("articles the\nquantifiers the").unwrap_err();
        assert!(matches!(err, LexiconError::DuplicateWord { .. }));
    }

    #[test]
    fn parse_requires_all_categories() {
        let err = LexiconSet::parse("articles the").unwrap_err();
        assert!(matches!(err, LexiconError::EmptyCategory(_)));
    }

    #[test]
    fn parse_full_custom_set() {
        let text = "\
articles the
auxiliary_verbs is
conjunctions and
personal_pronouns you
prepositions of
quantifiers some # trailing comment
";
        let set = LexiconSet::parse(text).unwrap();
        assert_eq!(set.category_of("some"), Some(MarkerCategory::Quantifiers));
        assert_eq!(set.category_of("the"), Some(MarkerCategory::Articles));
    }
}
