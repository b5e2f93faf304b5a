//! Word-level tokenizer used for prefix construction, token counting, and
//! vocabulary statistics.
//!
//! The segmentation is frozen: any change to these rules changes prefix
//! boundaries and vocabulary counts, so the reference behaviour is pinned by
//! the fixture table in the tests below. Rules:
//!
//! - whitespace separates tokens and is never part of one;
//! - a word token is a maximal run of alphanumeric characters, allowing an
//!   internal `-` or `'` when it is immediately followed by another
//!   alphanumeric character (`left-leaning`, `O'Brien`);
//! - trailing contraction suffixes (`'s`, `'t`, `'d`, `'m`, `'ll`, `'ve`,
//!   `'re`) are split off recursively, so `Trump's` becomes `Trump` + `'s`;
//! - every other non-alphanumeric character is a single-character token.
//!
//! No lowercasing happens here; callers that need case folding apply it
//! themselves.

/// Contraction suffixes split off the end of a word run (case-insensitive).
const CONTRACTION_SUFFIXES: [&str; 7] = ["s", "t", "d", "m", "ll", "ve", "re"];

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

fn is_contraction_suffix(s: &str) -> bool {
    CONTRACTION_SUFFIXES
        .iter()
        .any(|suffix| s.eq_ignore_ascii_case(suffix))
}

/// True for tokens made purely of punctuation (no alphanumerics, no
/// whitespace). These attach to the preceding token on detokenization.
pub fn is_punctuation_token(token: &str) -> bool {
    !token.is_empty() && token.chars().all(|c| !c.is_alphanumeric() && !c.is_whitespace())
}

/// Splits `text` into word-level tokens. Empty input yields an empty list.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let starts_word =
            is_word_char(c) || (c == '\'' && i + 1 < chars.len() && is_word_char(chars[i + 1]));
        if starts_word {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let connector = (d == '\'' || d == '-')
                    && i + 1 < chars.len()
                    && is_word_char(chars[i + 1]);
                if is_word_char(d) || connector {
                    i += 1;
                } else {
                    break;
                }
            }
            let run: String = chars[start..i].iter().collect();
            split_word_run(&run, &mut tokens);
        } else {
            tokens.push(c.to_string());
            i += 1;
        }
    }
    tokens
}

fn split_word_run(run: &str, out: &mut Vec<String>) {
    if let Some(rest) = run.strip_prefix('\'') {
        // A bare contraction such as `'s` stays whole so detokenized slices
        // re-tokenize to themselves; any other leading apostrophe is a quote.
        if is_contraction_suffix(rest) {
            out.push(run.to_string());
            return;
        }
        out.push("'".to_string());
        split_word_run(rest, out);
        return;
    }
    if let Some(idx) = run.rfind('\'') {
        let (stem, tail) = run.split_at(idx);
        if !stem.is_empty() && is_contraction_suffix(&tail[1..]) {
            split_word_run(stem, out);
            out.push(tail.to_string());
            return;
        }
    }
    out.push(run.to_string());
}

/// Joins tokens with single spaces, omitting the space before
/// punctuation-only tokens. The inverse direction is not exact on raw
/// strings, but `tokenize(detokenize(ts)) == ts` holds for every slice of a
/// `tokenize` result, which is what prefix construction relies on.
pub fn detokenize<S: AsRef<str>>(tokens: &[S]) -> String {
    let mut out = String::new();
    for (i, token) in tokens.iter().enumerate() {
        let token = token.as_ref();
        if i > 0 && !is_punctuation_token(token) {
            out.push(' ');
        }
        out.push_str(token);
    }
    out
}

/// Number of tokens in `text`.
pub fn token_count(text: &str) -> usize {
    tokenize(text).len()
}
