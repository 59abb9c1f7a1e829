//! Word tokenizer used for word counts, marker counts, and vocabularies.
//!
//! A word is a maximal run of alphanumeric characters or apostrophes;
//! everything else splits. Consumers that need case folding lowercase
//! the yielded slices themselves.

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '\''
}

/// Iterator over word slices of `text`.
pub struct Tokens<'a> {
    rest: &'a str,
}

impl<'a> Iterator for Tokens<'a> {
    type Item = &'a str;

    fn next(&mut self) -> Option<&'a str> {
        let start = self.rest.find(is_word_char)?;
        let tail = &self.rest[start..];
        let end = tail.find(|c| !is_word_char(c)).unwrap_or(tail.len());
        let (tok, rest) = tail.split_at(end);
        self.rest = rest;
        Some(tok)
    }
}

pub fn tokens(text: &str) -> Tokens<'_> {
    Tokens { rest: text }
}

/// Number of words in `text` under the crate tokenizer.
pub fn word_count(text: &str) -> u32 {
    tokens(text).count() as u32
}

/// Lowercased owned tokens, for vocabulary construction.
pub fn lowercase_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    tokens(text).map(|t| t.to_lowercase())
}
