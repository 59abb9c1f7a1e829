//! Quote-header and device-signature templates.
//!
//! Mail clients quote the original message below a header line ("On
//! Thursday May 1, 2014 a@yahoo.com wrote:") and mobile devices append
//! signature lines ("Sent from my iPhone"). Both are modeled as regex
//! templates; a message body is cut at the earliest match of any
//! template. Templates are configurable from a plain-text file, one
//! entry per line:
//!
//! ```text
//! # kind <regex>
//! quote  (?m)^On .{0,200} wrote:
//! phone  (?mi)^Sent from my iPhone
//! tablet (?mi)^Sent from my iPad
//! ```

use regex::Regex;
use thiserror::Error;

use crate::record::Device;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerKind {
    QuoteHeader,
    Signature(Device),
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("line {line}: expected `quote|phone|tablet <regex>`")]
    Malformed { line: usize },
    #[error("line {line}: unknown template kind `{kind}`")]
    UnknownKind { line: usize, kind: String },
    #[error("line {line}: invalid regex: {source}")]
    BadPattern {
        line: usize,
        #[source]
        source: regex::Error,
    },
}

/// Compiled template set. Ties at the same byte offset resolve in favor
/// of the template listed first.
#[derive(Debug, Clone)]
pub struct StripTemplates {
    patterns: Vec<(Regex, MarkerKind)>,
}

const DEFAULT_TEMPLATES: &[(&str, MarkerKind)] = &[
    (r"(?m)^On .{0,200} wrote:", MarkerKind::QuoteHeader),
    (r"(?mi)^-{2,}\s*Original Message\s*-{2,}", MarkerKind::QuoteHeader),
    (r"(?mi)^-{2,}\s*Forwarded message\s*-{2,}", MarkerKind::QuoteHeader),
    (r"(?m)^>", MarkerKind::QuoteHeader),
    (
        r"(?mi)^Sent from my (iPhone|Android phone|Windows Phone|BlackBerry)",
        MarkerKind::Signature(Device::Phone),
    ),
    (
        r"(?mi)^Sent from my (iPad|Galaxy Tab|Android tablet)",
        MarkerKind::Signature(Device::Tablet),
    ),
];

impl Default for StripTemplates {
    fn default() -> Self {
        let patterns = DEFAULT_TEMPLATES
            .iter()
            .map(|(p, k)| (Regex::new(p).expect("built-in template"), *k))
            .collect();
        StripTemplates { patterns }
    }
}

impl StripTemplates {
    /// Parses a template config file. `#` starts a comment; blank lines
    /// are ignored.
    pub fn parse(text: &str) -> Result<StripTemplates, TemplateError> {
        let mut patterns = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let (kind_tok, pattern) = line
                .split_once(char::is_whitespace)
                .ok_or(TemplateError::Malformed { line: line_no })?;
            let kind = match kind_tok {
                "quote" => MarkerKind::QuoteHeader,
                "phone" => MarkerKind::Signature(Device::Phone),
                "tablet" => MarkerKind::Signature(Device::Tablet),
                other => {
                    return Err(TemplateError::UnknownKind {
                        line: line_no,
                        kind: other.to_string(),
                    })
                }
            };
            let re = Regex::new(pattern.trim()).map_err(|source| TemplateError::BadPattern {
                line: line_no,
                source,
            })?;
            patterns.push((re, kind));
        }
        Ok(StripTemplates { patterns })
    }

    /// Byte offsets of the earliest match per kind class:
    /// `(earliest any marker, earliest quote header, earliest signature)`.
    fn scan(&self, body: &str) -> Scan {
        let mut scan = Scan::default();
        for (re, kind) in &self.patterns {
            if let Some(m) = re.find(body) {
                let at = m.start();
                if at < scan.any {
                    scan.any = at;
                }
                match kind {
                    MarkerKind::QuoteHeader => {
                        if at < scan.quote {
                            scan.quote = at;
                        }
                    }
                    MarkerKind::Signature(dev) => {
                        if at < scan.signature {
                            scan.signature = at;
                            scan.device = Some(*dev);
                        }
                    }
                }
            }
        }
        scan
    }

    /// Prefix of `body` before the earliest quote-header or signature
    /// marker, with trailing whitespace trimmed; unchanged (modulo the
    /// trim) when nothing matches. Idempotent.
    pub fn strip_quotes<'a>(&self, body: &'a str) -> &'a str {
        let cut = self.scan(body).any.min(body.len());
        body[..cut].trim_end()
    }

    /// Device classification of a body whose quoted text has already been
    /// removed: the class of the earliest signature match, `Desktop` when
    /// none matches.
    pub fn detect_device(&self, body: &str) -> Device {
        self.scan(body).device.unwrap_or(Device::Desktop)
    }

    /// Combined stripping + classification for one raw body, used by the
    /// record parser: the device is read from the text before the first
    /// quote header, so signatures inside quoted text never count, and
    /// the stripped body additionally drops the signature itself.
    pub fn strip_and_classify<'a>(&self, body_raw: &'a str) -> (&'a str, Device) {
        let scan = self.scan(body_raw);
        let device = match scan.device {
            Some(dev) if scan.signature < scan.quote => dev,
            _ => Device::Desktop,
        };
        let cut = scan.any.min(body_raw.len());
        (body_raw[..cut].trim_end(), device)
    }
}

#[derive(Debug)]
struct Scan {
    any: usize,
    quote: usize,
    signature: usize,
    device: Option<Device>,
}

impl Default for Scan {
    fn default() -> Self {
        Scan {
            any: usize::MAX,
            quote: usize::MAX,
            signature: usize::MAX,
            device: None,
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(at) => &line[..at],
        None => line,
    }
}
