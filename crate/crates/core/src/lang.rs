//! Per-language conversational delimiters.
//!
//! This is the only language-specific part of the pipeline. Profiles live
//! in a JSON registry; the default one is compiled in and can be replaced
//! at run time.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::Paragraph;

const BUILTIN_REGISTRY: &str = include_str!("../data/languages.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DelimiterStyle {
    /// Speech sits between an opening and a closing mark.
    PairedQuotes,
    /// A paragraph that starts with a dash is speech up to its end.
    ParagraphDash,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageProfile {
    pub lang: String,
    pub style: DelimiterStyle,
    pub open_marks: Vec<String>,
    #[serde(default)]
    pub close_marks: Vec<String>,
    #[serde(default)]
    pub notes: String,
}

impl LanguageProfile {
    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidRegistry(format!("{}: {msg}", self.lang)));
        if self.open_marks.is_empty() {
            return bad("no open marks");
        }
        if self.style == DelimiterStyle::PairedQuotes && self.close_marks.is_empty() {
            return bad("paired quotes need close marks");
        }
        if self.open_marks.iter().chain(&self.close_marks).any(|m| m.is_empty()) {
            return bad("empty mark");
        }
        Ok(())
    }

    pub fn find_spans(&self, paragraph: &Paragraph, paragraph_index: usize) -> Vec<DelimitedSpan> {
        find_spans(paragraph, paragraph_index, self)
    }
}

/// Text between delimiters inside one paragraph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelimitedSpan {
    /// Inner text, delimiters excluded.
    pub text: String,
    /// Inner range in characters of the paragraph text.
    pub char_range: (usize, usize),
    /// Range including the delimiters; for dash paragraphs it ends at the
    /// end of the paragraph.
    pub outer_range: (usize, usize),
    pub paragraph_index: usize,
}

#[derive(Debug, Clone)]
pub struct LanguageRegistry {
    profiles: BTreeMap<String, LanguageProfile>,
}

impl LanguageRegistry {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_REGISTRY).expect("bundled language registry is valid")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let list: Vec<LanguageProfile> =
            serde_json::from_str(json).map_err(|e| Error::InvalidRegistry(e.to_string()))?;
        let mut profiles = BTreeMap::new();
        for profile in list {
            profile.validate()?;
            let lang = profile.lang.clone();
            if profiles.insert(lang.clone(), profile).is_some() {
                return Err(Error::InvalidRegistry(format!("duplicate language {lang}")));
            }
        }
        Ok(LanguageRegistry { profiles })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }

    pub fn get(&self, lang: &str) -> Result<&LanguageProfile> {
        self.profiles
            .get(lang)
            .ok_or_else(|| Error::UnsupportedLanguage(lang.to_string()))
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.profiles.keys().map(String::as_str)
    }
}

/// Look `lang` up in the built-in registry.
pub fn profile_for(lang: &str) -> Result<LanguageProfile> {
    LanguageRegistry::builtin().get(lang).cloned()
}

/// Marks sorted longest first so multi-character marks win.
fn sorted_marks(marks: &[String]) -> Vec<Vec<char>> {
    let mut out: Vec<Vec<char>> = marks.iter().map(|m| m.chars().collect()).collect();
    out.sort_by_key(|m| std::cmp::Reverse(m.len()));
    out
}

fn match_at(chars: &[char], i: usize, marks: &[Vec<char>]) -> Option<usize> {
    marks
        .iter()
        .find(|m| chars[i..].starts_with(m))
        .map(Vec::len)
}

/// Scan a paragraph for speech. Paired marks are matched left to right
/// without nesting; an opening mark never closed is discarded.
pub fn find_spans(
    paragraph: &Paragraph,
    paragraph_index: usize,
    profile: &LanguageProfile,
) -> Vec<DelimitedSpan> {
    let chars: Vec<char> = paragraph.text.chars().collect();
    let open = sorted_marks(&profile.open_marks);
    let mut spans = Vec::new();

    match profile.style {
        DelimiterStyle::ParagraphDash => {
            let Some(first) = chars.iter().position(|c| !c.is_whitespace()) else {
                return spans;
            };
            if let Some(len) = match_at(&chars, first, &open) {
                let mut start = first + len;
                while start < chars.len() && chars[start].is_whitespace() {
                    start += 1;
                }
                let mut end = chars.len();
                while end > start && chars[end - 1].is_whitespace() {
                    end -= 1;
                }
                if end > start {
                    spans.push(DelimitedSpan {
                        text: chars[start..end].iter().collect(),
                        char_range: (start, end),
                        outer_range: (first, chars.len()),
                        paragraph_index,
                    });
                }
            }
        }
        DelimiterStyle::PairedQuotes => {
            let close = sorted_marks(&profile.close_marks);
            let mut opened: Option<(usize, usize)> = None;
            let mut i = 0;
            while i < chars.len() {
                match opened {
                    Some((outer_start, inner_start)) => {
                        if let Some(len) = match_at(&chars, i, &close) {
                            spans.push(DelimitedSpan {
                                text: chars[inner_start..i].iter().collect(),
                                char_range: (inner_start, i),
                                outer_range: (outer_start, i + len),
                                paragraph_index,
                            });
                            opened = None;
                            i += len;
                            continue;
                        }
                    }
                    None => {
                        if let Some(len) = match_at(&chars, i, &open) {
                            opened = Some((i, i + len));
                            i += len;
                            continue;
                        }
                    }
                }
                i += 1;
            }
        }
    }
    spans
}

/// Number of speech openings in a paragraph, counting each intended span
/// once, including openings that are never closed.
pub fn count_open_marks(text: &str, profile: &LanguageProfile) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let open = sorted_marks(&profile.open_marks);
    match profile.style {
        DelimiterStyle::ParagraphDash => chars
            .iter()
            .position(|c| !c.is_whitespace())
            .and_then(|first| match_at(&chars, first, &open))
            .map_or(0, |_| 1),
        DelimiterStyle::PairedQuotes => {
            let close = sorted_marks(&profile.close_marks);
            let mut inside = false;
            let mut count = 0;
            let mut i = 0;
            while i < chars.len() {
                let marks = if inside { &close } else { &open };
                if let Some(len) = match_at(&chars, i, marks) {
                    if !inside {
                        count += 1;
                    }
                    inside = !inside;
                    i += len;
                } else {
                    i += 1;
                }
            }
            count
        }
    }
}
