use serde::{Deserialize, Serialize};

/// A maximal run of non-blank lines.
///
/// `char_range` covers exactly `text`, i.e. the run with its surrounding
/// whitespace trimmed, in characters of the body it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub text: String,
    pub char_range: (usize, usize),
}

pub fn split_paragraphs(body: &str) -> Vec<Paragraph> {
    let mut paragraphs = Vec::new();
    // (char, byte) of the first and one-past-last non-whitespace character
    // of the paragraph being accumulated.
    let mut open: Option<((usize, usize), (usize, usize))> = None;

    let mut char_pos = 0usize;
    let mut byte_pos = 0usize;
    for line in body.split_inclusive('\n') {
        let mut first = None;
        let mut last = None;
        for (offset, (b, c)) in line.char_indices().enumerate() {
            if !c.is_whitespace() {
                if first.is_none() {
                    first = Some((char_pos + offset, byte_pos + b));
                }
                last = Some((char_pos + offset + 1, byte_pos + b + c.len_utf8()));
            }
        }
        match (first, last, open.as_mut()) {
            (Some(_), Some(l), Some((_, end))) => *end = l,
            (Some(f), Some(l), None) => open = Some((f, l)),
            _ => {
                if let Some((start, end)) = open.take() {
                    paragraphs.push(make(body, start, end));
                }
            }
        }
        char_pos += line.chars().count();
        byte_pos += line.len();
    }
    if let Some((start, end)) = open {
        paragraphs.push(make(body, start, end));
    }
    paragraphs
}

fn make(body: &str, start: (usize, usize), end: (usize, usize)) -> Paragraph {
    Paragraph {
        text: body[start.1..end.1].to_string(),
        char_range: (start.0, end.0),
    }
}
