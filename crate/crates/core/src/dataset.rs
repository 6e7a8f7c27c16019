//! On-disk dialogue files.
//!
//! A dialogue file has one utterance per line (lowercase tokens separated
//! by single spaces) and one blank line between dialogues. The provenance
//! sidecar is JSON lines, one `{book_id, paragraph_index, char_range}`
//! object per utterance in the same order.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{Dialogue, Utterance};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub book_id: String,
    pub paragraph_index: usize,
    pub char_range: (usize, usize),
}

impl From<&Utterance> for Provenance {
    fn from(u: &Utterance) -> Self {
        Provenance {
            book_id: u.book_id.clone(),
            paragraph_index: u.paragraph_index,
            char_range: u.char_range,
        }
    }
}

/// Path of the provenance sidecar belonging to a dialogue file:
/// `train.txt` → `train.provenance.jsonl`.
pub fn provenance_path(dialogue_file: &Path) -> std::path::PathBuf {
    let stem = dialogue_file
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dialogues");
    dialogue_file.with_file_name(format!("{stem}.provenance.jsonl"))
}

pub fn format_dialogues(dialogues: &[Dialogue]) -> String {
    let mut out = String::new();
    for (i, d) in dialogues.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for u in &d.utterances {
            out.push_str(&u.tokens.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn format_provenance(dialogues: &[Dialogue]) -> Result<String> {
    let mut out = String::new();
    for u in dialogues.iter().flat_map(|d| &d.utterances) {
        out.push_str(&serde_json::to_string(&Provenance::from(u))?);
        out.push('\n');
    }
    Ok(out)
}

/// Write a dialogue file and its provenance sidecar.
pub fn write_dialogues(path: &Path, dialogues: &[Dialogue]) -> Result<()> {
    write_file(path, format_dialogues(dialogues).as_bytes())?;
    write_file(&provenance_path(path), format_provenance(dialogues)?.as_bytes())
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Write records as JSON lines.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

/// Read JSON-lines records, skipping blank lines.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::MalformedDataset {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", i + 1),
            })
        })
        .collect()
}

/// Streams dialogues (as their utterance lines) out of a dialogue file.
pub struct DialogueLines<R> {
    lines: std::io::Lines<R>,
    path: std::path::PathBuf,
    done: bool,
}

impl DialogueLines<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(DialogueLines {
            lines: BufReader::new(file).lines(),
            path: path.to_path_buf(),
            done: false,
        })
    }
}

impl<R: BufRead> Iterator for DialogueLines<R> {
    type Item = Result<Vec<String>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut current = Vec::new();
        loop {
            match self.lines.next() {
                None => {
                    self.done = true;
                    return (!current.is_empty()).then_some(Ok(current));
                }
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(Error::io(&self.path, e)));
                }
                Some(Ok(line)) => {
                    let line = line.trim_end_matches('\r');
                    if line.trim().is_empty() {
                        if !current.is_empty() {
                            return Some(Ok(current));
                        }
                    } else {
                        current.push(line.to_string());
                    }
                }
            }
        }
    }
}

/// Read a dialogue file back together with its provenance sidecar.
pub fn read_dialogues(path: &Path) -> Result<Vec<Dialogue>> {
    let sidecar = provenance_path(path);
    let prov_text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let mut provenance = prov_text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str::<Provenance>);

    let malformed = |message: String| Error::MalformedDataset {
        path: path.to_path_buf(),
        message,
    };
    let mut dialogues = Vec::new();
    for lines in DialogueLines::open(path)? {
        let mut utterances = Vec::new();
        for line in lines? {
            let prov = provenance
                .next()
                .ok_or_else(|| malformed("provenance sidecar has fewer lines".into()))??;
            utterances.push(Utterance {
                tokens: line.split_whitespace().map(String::from).collect(),
                text: line,
                book_id: prov.book_id,
                paragraph_index: prov.paragraph_index,
                char_range: prov.char_range,
                spans: vec![prov.char_range],
            });
        }
        let book_id = utterances[0].book_id.clone();
        if utterances.iter().any(|u| u.book_id != book_id) {
            return Err(malformed(format!("dialogue {} mixes books", dialogues.len())));
        }
        dialogues.push(Dialogue { book_id, utterances });
    }
    if provenance.next().is_some() {
        return Err(malformed("provenance sidecar has more lines".into()));
    }
    Ok(dialogues)
}
