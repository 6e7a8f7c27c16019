//! Treebank-style word tokenizer.
//!
//! Rules, applied left to right over the input characters:
//!
//! | input                                   | tokens                  |
//! |-----------------------------------------|-------------------------|
//! | whitespace                              | separator, dropped      |
//! | letters/digits/combining marks          | one word token          |
//! | `'` or `’` between two word chars       | stays inside the word   |
//! | `-` between two word chars              | stays inside the word   |
//! | `.` or `,` between two digits           | stays inside the number |
//! | word ending in `n't`                    | `ca` `n't`, `do` `n't`  |
//! | word ending in `'s 'm 'd 're 've 'll`   | `i` `'m`, `he` `'s`     |
//! | `'` + clitic letters at a word boundary | one token (`'m`)        |
//! | run of `.` or of `-` (length ≥ 2)       | one token (`...`, `--`) |
//! | any other character                     | single-character token  |
//!
//! Tokens are lowercased; offsets always point at the original characters.

use unicode_normalization::char::is_combining_mark;

use super::TokenStream;

const CLITICS: [&str; 6] = ["s", "m", "d", "re", "ve", "ll"];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || is_combining_mark(c)
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Tokenize `text` into lowercase word and punctuation tokens with
/// character offsets into `text`.
pub fn tokenize(text: &str) -> TokenStream {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut out = TokenStream::default();
    let mut i = 0;

    while i < n {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }

        if is_word_char(c) {
            let start = i;
            i += 1;
            while i < n {
                let here = chars[i];
                if is_word_char(here) {
                    i += 1;
                } else if i + 1 < n && is_word_char(chars[i + 1]) {
                    let joins = is_apostrophe(here)
                        || here == '-'
                        || ((here == '.' || here == ',')
                            && chars[i - 1].is_ascii_digit()
                            && chars[i + 1].is_ascii_digit());
                    if joins {
                        i += 2;
                    } else {
                        break;
                    }
                } else {
                    break;
                }
            }
            push_word(&chars, start, i, &mut out);
            continue;
        }

        if is_apostrophe(c) {
            let mut j = i + 1;
            while j < n && chars[j].is_alphabetic() {
                j += 1;
            }
            let at_boundary = j == n || !is_word_char(chars[j]);
            let joins_next = j + 1 < n && is_apostrophe(chars[j]) && is_word_char(chars[j + 1]);
            if j > i + 1 && at_boundary && !joins_next {
                let letters: String = chars[i + 1..j].iter().collect::<String>().to_lowercase();
                if CLITICS.contains(&letters.as_str()) {
                    out.push(&chars, i, j);
                    i = j;
                    continue;
                }
            }
            out.push(&chars, i, i + 1);
            i += 1;
            continue;
        }

        if c == '.' || c == '-' {
            let mut j = i + 1;
            while j < n && chars[j] == c {
                j += 1;
            }
            out.push(&chars, i, j);
            i = j;
            continue;
        }

        out.push(&chars, i, i + 1);
        i += 1;
    }
    out
}

/// Peel Treebank contractions off the end of a word span.
fn push_word(chars: &[char], start: usize, end: usize, out: &mut TokenStream) {
    let mut suffixes = Vec::new();
    let mut stem_end = end;
    while let Some(split) = contraction_split(&chars[start..stem_end]) {
        suffixes.push((start + split, stem_end));
        stem_end = start + split;
    }
    out.push(chars, start, stem_end);
    for (s, e) in suffixes.into_iter().rev() {
        out.push(chars, s, e);
    }
}

/// Position where a trailing contraction starts, if the word has a
/// non-empty stem in front of it.
fn contraction_split(word: &[char]) -> Option<usize> {
    let len = word.len();
    let lower = |c: char| c.to_lowercase().next().unwrap_or(c);
    if len > 3
        && lower(word[len - 3]) == 'n'
        && is_apostrophe(word[len - 2])
        && lower(word[len - 1]) == 't'
    {
        return Some(len - 3);
    }
    for clitic in CLITICS {
        let k = clitic.len();
        if len > k + 1 && is_apostrophe(word[len - k - 1]) {
            let tail: String = word[len - k..].iter().map(|&c| lower(c)).collect();
            if tail == clitic {
                return Some(len - k - 1);
            }
        }
    }
    None
}
