//! Line-oriented text formats. `#` starts a comment; blank lines are
//! ignored; errors carry 1-based line numbers.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::sadic::{DirectiveSequence, Morphism};
use crate::words::{Alphabet, Word};

fn strip(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Splits `keyword <args>: <rest>` into (args, rest).
fn split_directive<'a>(line: &'a str, keyword: &str, lineno: usize) -> Result<(Vec<&'a str>, &'a str)> {
    let body = line[keyword.len()..].trim_start();
    let (head, rest) = body.split_once(':').ok_or_else(|| parse_err(lineno, format!("missing ':' after {keyword}")))?;
    Ok((head.split_whitespace().collect(), rest.trim()))
}

fn parse_index(tok: &str, what: &str, lineno: usize) -> Result<usize> {
    tok.parse().map_err(|_| parse_err(lineno, format!("invalid {what} {tok:?}")))
}

/// Parses the directive-sequence format:
/// `alphabet <level>: <names>` and `map <level> <letter>: <letters>`.
pub fn parse_directive(text: &str) -> Result<DirectiveSequence> {
    let mut alphabets: BTreeMap<usize, (Alphabet, usize)> = BTreeMap::new();
    let mut maps: BTreeMap<(usize, String), (Vec<String>, usize)> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = strip(raw);
        if line.is_empty() {
            continue;
        }
        if line.starts_with("alphabet") {
            let (args, rest) = split_directive(line, "alphabet", lineno)?;
            let [lv] = args[..] else { return Err(parse_err(lineno, "expected `alphabet <level>:`")) };
            let level = parse_index(lv, "level", lineno)?;
            let alpha = Alphabet::new(rest.split_whitespace()).map_err(|e| parse_err(lineno, e.to_string()))?;
            if alphabets.insert(level, (alpha, lineno)).is_some() {
                return Err(parse_err(lineno, format!("alphabet {level} defined twice")));
            }
        } else if line.starts_with("map") {
            let (args, rest) = split_directive(line, "map", lineno)?;
            let [lv, letter] = args[..] else { return Err(parse_err(lineno, "expected `map <level> <letter>:`")) };
            let level = parse_index(lv, "level", lineno)?;
            let image: Vec<String> = rest.split_whitespace().map(String::from).collect();
            if image.is_empty() {
                return Err(parse_err(lineno, "empty image"));
            }
            if maps.insert((level, letter.to_string()), (image, lineno)).is_some() {
                return Err(parse_err(lineno, format!("map {level} {letter} defined twice")));
            }
        } else {
            return Err(parse_err(lineno, format!("unrecognized line {line:?}")));
        }
    }
    let depth = alphabets.keys().next_back().copied().ok_or_else(|| parse_err(0, "no alphabets"))?;
    if depth == 0 {
        return Err(parse_err(0, "need alphabets for levels 0 and 1 at least"));
    }
    let mut levels = Vec::new();
    for n in 0..depth {
        let (target, _) = alphabets.get(&n).ok_or_else(|| parse_err(0, format!("alphabet {n} missing")))?;
        let (source, src_line) = alphabets.get(&(n + 1)).ok_or_else(|| parse_err(0, format!("alphabet {} missing", n + 1)))?;
        let mut images = Vec::new();
        for name in source.names() {
            let (img, lineno) = maps
                .remove(&(n, name.clone()))
                .ok_or_else(|| parse_err(*src_line, format!("no map for letter {name} at level {n}")))?;
            let w = target.parse_word(&img.join(" ")).map_err(|e| parse_err(lineno, e.to_string()))?;
            images.push(w);
        }
        levels.push(Morphism::new(source.clone(), target.clone(), images)?);
    }
    if let Some(((level, letter), (_, lineno))) = maps.into_iter().next() {
        return Err(parse_err(lineno, format!("map {level} {letter} has no source alphabet")));
    }
    DirectiveSequence::new(levels)
}

/// Canonical serialization of the explicit levels.
pub fn write_directive(d: &DirectiveSequence) -> String {
    let mut out = String::new();
    let depth = d.explicit_depth();
    let alpha0 = d.alphabet(0).expect("level 0");
    out.push_str(&format!("alphabet 0: {}\n", alpha0.names().join(" ")));
    for n in 0..depth {
        let m = d.level(n).expect("explicit level");
        out.push_str(&format!("alphabet {}: {}\n", n + 1, m.source().names().join(" ")));
        for (a, img) in m.images().iter().enumerate() {
            out.push_str(&format!(
                "map {n} {}: {}\n",
                m.source().names()[a],
                m.target().render(img)
            ));
        }
    }
    out
}

/// Parses `alphabet: <names>` followed by a word line.
pub fn parse_word_line(alphabet: &Alphabet, text: &str) -> Result<Word> {
    alphabet.parse_word(text)
}

pub fn parse_alphabet_line(line: &str) -> Result<Alphabet> {
    let line = strip(line);
    let rest = line.strip_prefix("alphabet:").ok_or_else(|| parse_err(1, "expected `alphabet:`"))?;
    Alphabet::new(rest.split_whitespace())
}

pub fn write_alphabet_line(a: &Alphabet) -> String {
    format!("alphabet: {}", a.names().join(" "))
}
