//! Loading a local mirror of plain-text books.
//!
//! A mirror is a directory of `<book_id>.txt` files plus a JSON-lines
//! metadata file with one `{book_id, language, rights, author}` object per
//! line. Only public-domain books in the requested language are returned;
//! unknown rights count as copyrighted.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::text::tokenize;

pub const HEADER_MARKER: &str = "*** START OF";
pub const FOOTER_MARKER: &str = "*** END OF";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rights {
    PublicDomain,
    Copyrighted,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BookMeta {
    pub book_id: String,
    pub language: String,
    pub rights: Rights,
    #[serde(default)]
    pub author: Option<String>,
}

impl BookMeta {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.book_id.trim().is_empty() {
            return Err("empty book_id".into());
        }
        if self.book_id.contains(['/', '\\']) {
            return Err(format!("book_id `{}` contains a path separator", self.book_id));
        }
        if !is_language_code(&self.language) {
            return Err(format!("`{}` is not an ISO-639-1 code or `und`", self.language));
        }
        Ok(())
    }
}

/// Two lowercase ASCII letters, or `und`.
pub fn is_language_code(code: &str) -> bool {
    code == "und" || (code.len() == 2 && code.bytes().all(|b| b.is_ascii_lowercase()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Book {
    pub meta: BookMeta,
    /// NFC-normalized text with the mirror boilerplate removed.
    pub body: String,
    pub word_count: usize,
}

impl Book {
    pub fn new(meta: BookMeta, body: String) -> Self {
        let word_count = tokenize(&body).len();
        Book {
            meta,
            body,
            word_count,
        }
    }

    pub fn id(&self) -> &str {
        &self.meta.book_id
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stripped {
    pub text: String,
    /// Set when a header or footer marker was not found.
    pub missing_markers: bool,
}

/// Return the text between the last header marker line and the first
/// footer marker line after it, trimmed.
pub fn strip_boilerplate(raw: &str) -> Result<Stripped> {
    if raw.is_empty() {
        return Err(Error::InvalidBook("empty input".into()));
    }
    let mut header_end = None;
    let mut offset = 0;
    for line in raw.split_inclusive('\n') {
        if line.contains(HEADER_MARKER) {
            header_end = Some(offset + line.len());
        }
        offset += line.len();
    }
    let start = header_end.unwrap_or(0);

    let mut footer_start = None;
    let mut offset = start;
    for line in raw[start..].split_inclusive('\n') {
        if line.contains(FOOTER_MARKER) {
            footer_start = Some(offset);
            break;
        }
        offset += line.len();
    }

    let missing_markers = header_end.is_none() || footer_start.is_none();
    if header_end.is_none() && footer_start.is_none() {
        return Ok(Stripped {
            text: raw.to_string(),
            missing_markers,
        });
    }
    let end = footer_start.unwrap_or(raw.len());
    Ok(Stripped {
        text: raw[start..end].trim().to_string(),
        missing_markers,
    })
}

/// Parse a JSON-lines metadata file. Blank lines are ignored.
pub fn read_metadata(path: &Path) -> Result<Vec<BookMeta>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_metadata(&text)
}

pub fn parse_metadata(text: &str) -> Result<Vec<BookMeta>> {
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let meta: BookMeta = serde_json::from_str(line).map_err(|e| Error::InvalidMetadata {
            line: i + 1,
            message: e.to_string(),
        })?;
        meta.validate()
            .map_err(|message| Error::InvalidMetadata { line: i + 1, message })?;
        if !seen.insert(meta.book_id.clone()) {
            return Err(Error::DuplicateId(meta.book_id));
        }
        rows.push(meta);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedBook {
    pub book_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct MirrorLoad {
    /// Sorted by `book_id`.
    pub books: Vec<Book>,
    /// Books present in the mirror or metadata that were not loaded,
    /// sorted by `book_id`.
    pub skipped: Vec<SkippedBook>,
}

/// Load every eligible book of `lang` from the mirror.
pub fn load_books(mirror_dir: &Path, metadata: &Path, lang: &str) -> Result<Vec<Book>> {
    Ok(load_mirror(mirror_dir, metadata, lang)?.books)
}

/// Like [`load_books`], also reporting why books were left out.
pub fn load_mirror(mirror_dir: &Path, metadata: &Path, lang: &str) -> Result<MirrorLoad> {
    let meta: BTreeMap<String, BookMeta> = read_metadata(metadata)?
        .into_iter()
        .map(|m| (m.book_id.clone(), m))
        .collect();

    let mut files = BTreeMap::new();
    let entries = fs::read_dir(mirror_dir).map_err(|e| Error::io(mirror_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(mirror_dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            files.insert(stem.to_string(), path);
        }
    }

    let mut skipped = Vec::new();
    let mut candidates = Vec::new();
    for (id, path) in &files {
        match meta.get(id) {
            None => skipped.push(skip(id, "no metadata row")),
            Some(m) if m.rights != Rights::PublicDomain => {
                skipped.push(skip(id, &format!("rights: {:?}", m.rights)))
            }
            Some(m) if m.language != lang => {
                skipped.push(skip(id, &format!("language {} != {lang}", m.language)))
            }
            Some(m) => candidates.push((m.clone(), path.clone())),
        }
    }
    for id in meta.keys().filter(|id| !files.contains_key(*id)) {
        if meta[id].language == lang && meta[id].rights == Rights::PublicDomain {
            skipped.push(skip(id, "missing from mirror"));
        }
    }

    let loaded: Vec<std::result::Result<Book, SkippedBook>> = candidates
        .into_par_iter()
        .map(|(m, path)| read_book(m, &path))
        .collect();

    let mut books = Vec::new();
    for result in loaded {
        match result {
            Ok(book) => books.push(book),
            Err(s) => skipped.push(s),
        }
    }
    for s in &skipped {
        warn!("skipping book {}: {}", s.book_id, s.reason);
    }
    skipped.sort_by(|a, b| a.book_id.cmp(&b.book_id));
    info!("loaded {} {lang} books, skipped {}", books.len(), skipped.len());
    Ok(MirrorLoad { books, skipped })
}

fn skip(id: &str, reason: &str) -> SkippedBook {
    SkippedBook {
        book_id: id.to_string(),
        reason: reason.to_string(),
    }
}

fn read_book(meta: BookMeta, path: &Path) -> std::result::Result<Book, SkippedBook> {
    let bytes = fs::read(path).map_err(|e| skip(&meta.book_id, &format!("unreadable: {e}")))?;
    let raw = String::from_utf8(bytes).map_err(|_| skip(&meta.book_id, "not valid UTF-8"))?;
    let raw = raw.strip_prefix('\u{feff}').unwrap_or(&raw);
    let stripped = strip_boilerplate(raw).map_err(|e| skip(&meta.book_id, &e.to_string()))?;
    if stripped.missing_markers {
        warn!("book {}: boilerplate markers not found", meta.book_id);
    }
    let body: String = stripped.text.nfc().collect();
    if body.trim().is_empty() {
        return Err(skip(&meta.book_id, "empty body after stripping"));
    }
    Ok(Book::new(meta, body))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "The Project Gutenberg eBook\n*** START OF THE PROJECT GUTENBERG EBOOK X ***\n";
    const FOOTER: &str = "\n*** END OF THE PROJECT GUTENBERG EBOOK X ***\nlicense text\n";

    #[test]
    fn strips_between_markers() {
        let raw = format!("{HEADER}\nHello.\n{FOOTER}");
        let s = strip_boilerplate(&raw).unwrap();
        assert_eq!(s.text, "Hello.");
        assert!(!s.missing_markers);
    }

    #[test]
    fn uses_last_header_and_first_footer() {
        let raw = format!("{HEADER}junk\n{HEADER}Body\n{FOOTER}more\n{FOOTER}");
        assert_eq!(strip_boilerplate(&raw).unwrap().text, "Body");
    }

    #[test]
    fn no_markers_is_passthrough_with_warning() {
        let s = strip_boilerplate("Just text.\n").unwrap();
        assert_eq!(s.text, "Just text.\n");
        assert!(s.missing_markers);
    }

    #[test]
    fn empty_is_invalid() {
        assert!(matches!(strip_boilerplate(""), Err(Error::InvalidBook(_))));
    }

    #[test]
    fn metadata_rejects_duplicates_and_bad_codes() {
        let dup = r#"{"book_id":"1","language":"en","rights":"public_domain"}
{"book_id":"1","language":"de","rights":"public_domain"}"#;
        assert!(matches!(parse_metadata(dup), Err(Error::DuplicateId(id)) if id == "1"));

        let bad = r#"{"book_id":"1","language":"english","rights":"public_domain"}"#;
        assert!(matches!(parse_metadata(bad), Err(Error::InvalidMetadata { line: 1, .. })));

        let und = r#"{"book_id":"1","language":"und","rights":"unknown","author":null}"#;
        assert_eq!(parse_metadata(und).unwrap()[0].rights, Rights::Unknown);
    }
}
