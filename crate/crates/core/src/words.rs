//! Finite words over indexed alphabets: periodicity, Euclidean pairs,
//! distinguished affixes, and buildings over a finite code.

use std::collections::HashMap;
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sadic::{CertLevel, PointWindow};

pub type Letter = u32;

/// Ordered list of distinct letter names; letter `i` is `names[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    names: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::Alphabet("alphabet must be non-empty".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if n.is_empty() || n.chars().any(|c| c.is_whitespace() || c == ':' || c == '#') {
                return Err(Error::Alphabet(format!("invalid letter name {n:?}")));
            }
            if names[..i].contains(n) {
                return Err(Error::Alphabet(format!("duplicate letter name {n:?}")));
            }
        }
        Ok(Alphabet { names })
    }

    /// Alphabet `{0, 1, ..., size-1}` named by decimal indices.
    pub fn numeric(size: usize) -> Self {
        assert!(size > 0, "alphabet must be non-empty");
        Alphabet { names: (0..size).map(|i| i.to_string()).collect() }
    }

    /// Alphabet `{0, ..., size-1}` with decimal names starting at `first`.
    pub fn numeric_from(size: usize, first: usize) -> Self {
        assert!(size > 0, "alphabet must be non-empty");
        Alphabet { names: (first..first + size).map(|i| i.to_string()).collect() }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, a: Letter) -> &str {
        &self.names[a as usize]
    }

    pub fn letter(&self, name: &str) -> Option<Letter> {
        self.names.iter().position(|n| n == name).map(|i| i as Letter)
    }

    pub fn check(&self, w: &[Letter]) -> Result<()> {
        match w.iter().find(|&&a| a as usize >= self.names.len()) {
            Some(&a) => Err(Error::InvalidLetter { letter: a, size: self.names.len() }),
            None => Ok(()),
        }
    }

    /// Space-separated letter names.
    pub fn render(&self, w: &[Letter]) -> String {
        w.iter().map(|&a| self.name(a)).collect::<Vec<_>>().join(" ")
    }

    /// Letter names concatenated without separators; readable when all
    /// names are single characters.
    pub fn render_compact(&self, w: &[Letter]) -> String {
        w.iter().map(|&a| self.name(a)).collect()
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        text.split_whitespace()
            .map(|tok| {
                self.letter(tok).ok_or_else(|| Error::Alphabet(format!("unknown letter {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Word)
    }
}

/// A finite word, stored as letter indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// Parses a string of decimal digits, one letter per character.
    pub fn from_digits(s: &str) -> Self {
        Word(
            s.chars()
                .map(|c| c.to_digit(10).unwrap_or_else(|| panic!("not a digit: {c:?}")))
                .collect(),
        )
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.0
    }

    pub fn concat(&self, other: &[Letter]) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(other);
        Word(v)
    }

    pub fn pow(&self, k: usize) -> Word {
        Word(self.0.repeat(k))
    }

    pub fn subword(&self, i: usize, j: usize) -> Word {
        Word(self.0[i..j].to_vec())
    }

    pub fn push(&mut self, a: Letter) {
        self.0.push(a);
    }

    pub fn extend_from_slice(&mut self, w: &[Letter]) {
        self.0.extend_from_slice(w);
    }
}

impl Deref for Word {
    type Target = [Letter];
    fn deref(&self) -> &[Letter] {
        &self.0
    }
}

impl From<Vec<Letter>> for Word {
    fn from(v: Vec<Letter>) -> Self {
        Word(v)
    }
}

impl From<&[Letter]> for Word {
    fn from(v: &[Letter]) -> Self {
        Word(v.to_vec())
    }
}

impl FromIterator<Letter> for Word {
    fn from_iter<I: IntoIterator<Item = Letter>>(iter: I) -> Self {
        Word(iter.into_iter().collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&a| a < 10) {
            for a in &self.0 {
                write!(f, "{a}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
            f.write_str(&parts.join(" "))
        }
    }
}

/// All positions `i` with `u[i, i+|w|) = w`, ascending.
pub fn occurrences(w: &[Letter], u: &[Letter]) -> Vec<usize> {
    if w.len() > u.len() {
        return Vec::new();
    }
    if w.is_empty() {
        return (0..=u.len()).collect();
    }
    // Knuth-Morris-Pratt
    let fail = failure_function(w);
    let mut out = Vec::new();
    let mut k = 0;
    for (i, &c) in u.iter().enumerate() {
        while k > 0 && w[k] != c {
            k = fail[k - 1];
        }
        if w[k] == c {
            k += 1;
        }
        if k == w.len() {
            out.push(i + 1 - k);
            k = fail[k - 1];
        }
    }
    out
}

fn failure_function(w: &[Letter]) -> Vec<usize> {
    let mut fail = vec![0; w.len()];
    let mut k = 0;
    for i in 1..w.len() {
        while k > 0 && w[k] != w[i] {
            k = fail[k - 1];
        }
        if w[k] == w[i] {
            k += 1;
        }
        fail[i] = k;
    }
    fail
}

pub fn reverse(u: &[Letter]) -> Word {
    u.iter().rev().copied().collect()
}

/// Shortest `w` with `u = w^k`, together with `k`.
pub fn primitive_root(u: &[Letter]) -> Result<(Word, usize)> {
    if u.is_empty() {
        return Err(Error::EmptyWord("primitive_root"));
    }
    let n = u.len();
    let period = n - failure_function(u)[n - 1];
    let root_len = if n % period == 0 { period } else { n };
    Ok((Word::from(&u[..root_len]), n / root_len))
}

/// Whether `u` and `v` are powers of a common word.
pub fn is_euclidean_pair(u: &[Letter], v: &[Letter]) -> Result<bool> {
    if u.is_empty() || v.is_empty() {
        return Err(Error::EmptyWord("is_euclidean_pair"));
    }
    Ok(primitive_root(u)?.0 == primitive_root(v)?.0)
}

/// A forced common affix `word` of length `length` of two non-Euclidean
/// words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistinguishedAffix {
    pub word: Word,
    pub length: usize,
}

/// Every long enough element of u{u,v}* and of v{u,v}* starts with the
/// returned word, and the two families differ right after it.
pub fn distinguished_prefix(u: &[Letter], v: &[Letter]) -> Result<DistinguishedAffix> {
    if is_euclidean_pair(u, v)? {
        return Err(Error::EuclideanPair);
    }
    // uv != vu, and both families extend uv resp. vu far enough that their
    // longest common prefix is forced.
    let uv: Vec<Letter> = u.iter().chain(v).copied().collect();
    let vu: Vec<Letter> = v.iter().chain(u).copied().collect();
    let n = uv.iter().zip(&vu).take_while(|(a, b)| a == b).count();
    Ok(DistinguishedAffix { word: Word::from(&uv[..n]), length: n })
}

pub fn distinguished_suffix(u: &[Letter], v: &[Letter]) -> Result<DistinguishedAffix> {
    let p = distinguished_prefix(&reverse(u), &reverse(v))?;
    Ok(DistinguishedAffix { word: reverse(&p.word), length: p.length })
}

/// A parse `w = β₀ α₁ ⋯ α_k β₁` with `β₀` a proper suffix and `β₁` a proper
/// prefix of code words. Sources are indices into the code; `None` for an
/// empty fragment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Building {
    pub prefix: Word,
    pub prefix_source: Option<usize>,
    pub blocks: Vec<Word>,
    pub block_sources: Vec<usize>,
    pub suffix: Word,
    pub suffix_source: Option<usize>,
}

impl Building {
    pub fn concatenation(&self) -> Word {
        let mut out = self.prefix.clone();
        for b in &self.blocks {
            out.extend_from_slice(b);
        }
        out.extend_from_slice(&self.suffix);
        out
    }

    /// Start positions of the full blocks inside the parsed word.
    pub fn block_starts(&self) -> Vec<usize> {
        let mut pos = self.prefix.len();
        self.blocks
            .iter()
            .map(|b| {
                let s = pos;
                pos += b.len();
                s
            })
            .collect()
    }
}

fn proper_suffix_source(frag: &[Letter], code: &[Word]) -> Option<usize> {
    code.iter().position(|s| frag.len() < s.len() && s.ends_with(frag))
}

fn proper_prefix_source(frag: &[Letter], code: &[Word]) -> Option<usize> {
    code.iter().position(|s| frag.len() < s.len() && s.starts_with(frag))
}

fn check_code(code: &[Word]) {
    assert!(code.iter().all(|s| !s.is_empty()), "code words must be non-empty");
}

/// Distinct code words matching at each position of `w`, as (code index, end).
fn block_matches(w: &[Letter], code: &[Word]) -> Vec<Vec<(usize, usize)>> {
    let mut seen: Vec<&Word> = Vec::new();
    let mut distinct = Vec::new();
    for (i, s) in code.iter().enumerate() {
        if !seen.contains(&s) {
            seen.push(s);
            distinct.push(i);
        }
    }
    let mut m = vec![Vec::new(); w.len() + 1];
    for &ci in &distinct {
        for pos in occurrences(&code[ci], w) {
            m[pos].push((ci, pos + code[ci].len()));
        }
    }
    m
}

/// All buildings of `w` from `code`, in order of (β₀ length, block sequence).
pub fn buildings(w: &[Letter], code: &[Word]) -> Vec<Building> {
    check_code(code);
    let n = w.len();
    let matches = block_matches(w, code);
    let tail_ok = tail_completion(w, code, &matches);
    let mut out = Vec::new();
    for i in 0..=n {
        let prefix_source = if i == 0 { None } else { proper_suffix_source(&w[..i], code) };
        if i > 0 && prefix_source.is_none() {
            continue;
        }
        if !tail_ok[i] {
            continue;
        }
        let mut stack = vec![];
        extend_buildings(w, code, &matches, &tail_ok, i, &mut stack, &mut |blocks, j| {
            let suffix_source = if j == n { None } else { proper_prefix_source(&w[j..], code) };
            out.push(Building {
                prefix: Word::from(&w[..i]),
                prefix_source,
                blocks: blocks.iter().map(|&ci| code[ci].clone()).collect(),
                block_sources: blocks.to_vec(),
                suffix: Word::from(&w[j..]),
                suffix_source,
            });
        });
    }
    out
}

fn extend_buildings(
    w: &[Letter],
    code: &[Word],
    matches: &[Vec<(usize, usize)>],
    tail_ok: &[bool],
    pos: usize,
    stack: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize], usize),
) {
    let n = w.len();
    if pos == n || proper_prefix_source(&w[pos..], code).is_some() {
        emit(stack, pos);
    }
    for &(ci, end) in &matches[pos] {
        if tail_ok[end] {
            stack.push(ci);
            extend_buildings(w, code, matches, tail_ok, end, stack, emit);
            stack.pop();
        }
    }
}

/// `tail[j]`: whether `w[j..]` is a sequence of code words then a proper prefix.
fn tail_completion(w: &[Letter], code: &[Word], matches: &[Vec<(usize, usize)>]) -> Vec<bool> {
    let n = w.len();
    let mut tail = vec![false; n + 1];
    for j in (0..=n).rev() {
        tail[j] = j == n
            || proper_prefix_source(&w[j..], code).is_some()
            || matches[j].iter().any(|&(_, end)| tail[end]);
    }
    tail
}

/// Number of buildings, saturating at `cap`.
pub fn count_buildings(w: &[Letter], code: &[Word], cap: u64) -> u64 {
    check_code(code);
    let n = w.len();
    let matches = block_matches(w, code);
    let mut ways = vec![0u64; n + 1];
    ways[0] = 1;
    for i in 1..=n {
        if proper_suffix_source(&w[..i], code).is_some() {
            ways[i] = 1;
        }
    }
    let mut total = 0u64;
    for j in 0..=n {
        let here = ways[j].min(cap);
        if here == 0 {
            continue;
        }
        if j == n || proper_prefix_source(&w[j..], code).is_some() {
            total = (total + here).min(cap);
        }
        for &(_, end) in &matches[j] {
            ways[end] = (ways[end] + here).min(cap);
        }
    }
    total
}

pub fn is_uniquely_built(w: &[Letter], code: &[Word]) -> bool {
    count_buildings(w, code, 2) == 1
}

/// One block of some building covering a given index: the block's start
/// (negative when a prefix fragment is cut from a longer code word) and the
/// code word index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Placement {
    pub start: i64,
    pub source: usize,
}

/// Every placement of a code word that covers index `r` in at least one
/// building of `w`, counting every admissible source of a fragment.
pub fn covering_placements(w: &[Letter], code: &[Word], r: usize) -> Vec<Placement> {
    check_code(code);
    let n = w.len();
    assert!(r < n, "index out of range");
    let matches = block_matches(w, code);
    let tail_ok = tail_completion(w, code, &matches);
    let mut head_ok = vec![false; n + 1];
    head_ok[0] = true;
    for i in 1..=n {
        if proper_suffix_source(&w[..i], code).is_some() {
            head_ok[i] = true;
        }
    }
    for j in 0..=n {
        if head_ok[j] {
            for &(_, end) in &matches[j] {
                head_ok[end] = true;
            }
        }
    }
    let mut out = Vec::new();
    // full blocks; every code index carrying the same word counts
    for (j, ms) in matches.iter().enumerate() {
        if !head_ok[j] {
            continue;
        }
        for &(ci, end) in ms {
            if tail_ok[end] && j <= r && r < end {
                for (k, s) in code.iter().enumerate() {
                    if *s == code[ci] {
                        out.push(Placement { start: j as i64, source: k });
                    }
                }
            }
        }
    }
    // prefix fragments w[0, i), i > r
    for i in r + 1..=n {
        if !tail_ok[i] {
            continue;
        }
        for (k, s) in code.iter().enumerate() {
            if i < s.len() && s.ends_with(&w[..i]) {
                out.push(Placement { start: i as i64 - s.len() as i64, source: k });
            }
        }
    }
    // suffix fragments w[j, n), j <= r
    for j in 0..=r {
        if !head_ok[j] {
            continue;
        }
        for (k, s) in code.iter().enumerate() {
            if n - j < s.len() && s.starts_with(&w[j..]) {
                out.push(Placement { start: j as i64, source: k });
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// A sliding block code of radius `n`: `y(i) = C(x[i-n, i+n+1))`.
#[derive(Clone)]
pub struct BlockCode {
    radius: usize,
    rule: Arc<dyn Fn(&[Letter]) -> Option<Letter> + Send + Sync>,
}

impl fmt::Debug for BlockCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlockCode").field("radius", &self.radius).finish_non_exhaustive()
    }
}

impl BlockCode {
    pub fn from_fn(radius: usize, rule: impl Fn(&[Letter]) -> Letter + Send + Sync + 'static) -> Self {
        BlockCode { radius, rule: Arc::new(move |w| Some(rule(w))) }
    }

    /// Code given by an explicit table on words of length `2*radius+1`.
    pub fn from_table(radius: usize, table: HashMap<Vec<Letter>, Letter>) -> Result<Self> {
        if table.keys().any(|k| k.len() != 2 * radius + 1) {
            return Err(Error::Params(format!("code table keys must have length {}", 2 * radius + 1)));
        }
        Ok(BlockCode { radius, rule: Arc::new(move |w| table.get(w).copied()) })
    }

    /// Letterwise code.
    pub fn letter_map(map: Vec<Letter>) -> Self {
        BlockCode::from_fn(0, move |w| map[w[0] as usize])
    }

    /// `y(i) = perm[x(i)]` when `x(i)` sits between two copies of
    /// `marker`, else `x(i)`. With marker `01` or `10` and the binary flip
    /// two toggled positions never see each other, so the code is an
    /// involution.
    pub fn marker_toggle(marker: Word, perm: Vec<Letter>) -> Self {
        let m = marker.len();
        BlockCode::from_fn(m, move |w| {
            let c = w[m];
            if w[..m] == marker[..] && w[m + 1..] == marker[..] {
                perm[c as usize]
            } else {
                c
            }
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn width(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn eval(&self, neighborhood: &[Letter]) -> Option<Letter> {
        (self.rule)(neighborhood)
    }
}

/// Applies a block code to a window, transporting period certificates.
pub fn apply_block_code(x: &PointWindow, code: &BlockCode) -> Result<PointWindow> {
    let n = code.radius as i64;
    let (a, b) = (x.start(), x.end());
    if b - a < 2 * n + 1 || a + n > 0 || b - n <= 0 {
        return Err(Error::WindowTooNarrow { needed: (2 * n + 1) as u64, available: (b - a) as u64 });
    }
    let src = x.letters();
    let width = code.width();
    let mut out = Vec::with_capacity(src.len() + 1 - width);
    for nb in src.windows(width) {
        out.push(code.eval(nb).ok_or_else(|| {
            Error::Params(format!("code table has no entry for {:?}", nb))
        })?);
    }
    let certs = x
        .cert_levels()
        .iter()
        .map(|c| {
            let p = c.period as usize;
            let table: Vec<Option<Letter>> = (0..p)
                .map(|rho| {
                    let nb: Option<Vec<Letter>> = (-n..=n)
                        .map(|e| c.table[(rho as i64 + e).rem_euclid(p as i64) as usize])
                        .collect();
                    nb.and_then(|nb| code.eval(&nb))
                })
                .collect();
            CertLevel::new(c.period, c.cut, table)
        })
        .collect();
    PointWindow::from_parts(a + n, Word::new(out), certs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Letters a, b, c, ... mapped to 0, 1, 2, ...
    fn w(s: &str) -> Word {
        s.bytes().map(|c| (c - b'a') as Letter).collect()
    }

    fn code(ws: &[&str]) -> Vec<Word> {
        ws.iter().map(|s| w(s)).collect()
    }

    fn naive_occurrences(w: &[Letter], u: &[Letter]) -> Vec<usize> {
        if w.len() > u.len() {
            return vec![];
        }
        (0..=u.len() - w.len()).filter(|&i| &u[i..i + w.len()] == w).collect()
    }

    #[test]
    fn occurrences_examples() {
        assert_eq!(occurrences(&w("ab"), &w("abab")), vec![0, 2]);
        assert_eq!(occurrences(&w("aa"), &w("ab")), Vec::<usize>::new());
        assert_eq!(occurrences(&w("aba"), &w("ababa")), vec![0, 2]);
        assert_eq!(occurrences(&w("abc"), &w("ab")), Vec::<usize>::new());
    }

    #[test]
    fn reverse_examples() {
        assert_eq!(reverse(&w("abb")), w("bba"));
        assert_eq!(reverse(&[]), Word::empty());
    }

    #[test]
    fn primitive_root_examples() {
        assert_eq!(primitive_root(&w("abab")).unwrap(), (w("ab"), 2));
        assert_eq!(primitive_root(&w("aba")).unwrap(), (w("aba"), 1));
        assert_eq!(primitive_root(&w("aaaaaa")).unwrap(), (w("a"), 6));
        assert_eq!(primitive_root(&[]), Err(Error::EmptyWord("primitive_root")));
    }

    #[test]
    fn euclidean_examples() {
        assert!(is_euclidean_pair(&w("abab"), &w("ab")).unwrap());
        assert!(!is_euclidean_pair(&w("ab"), &w("ba")).unwrap());
        assert!(is_euclidean_pair(&w("a"), &w("aaa")).unwrap());
        assert!(is_euclidean_pair(&w(""), &w("a")).is_err());
    }

    #[test]
    fn distinguished_affix_examples() {
        let p = distinguished_prefix(&w("aab"), &w("ab")).unwrap();
        assert_eq!((p.word, p.length), (w("a"), 1));
        let p = distinguished_prefix(&w("ab"), &w("aab")).unwrap();
        assert_eq!((p.word, p.length), (w("a"), 1));
        let s = distinguished_suffix(&w("baa"), &w("ba")).unwrap();
        assert_eq!((s.word, s.length), (w("a"), 1));
        assert_eq!(distinguished_prefix(&w("ab"), &w("abab")), Err(Error::EuclideanPair));
    }

    #[test]
    fn building_examples() {
        let b = buildings(&w("abab"), &code(&["ab"]));
        assert_eq!(b.len(), 1);
        assert_eq!((b[0].prefix.clone(), b[0].blocks.clone(), b[0].suffix.clone()), (w(""), vec![w("ab"), w("ab")], w("")));

        let b = buildings(&w("aa"), &code(&["ab", "ba"]));
        assert_eq!(b.len(), 1);
        assert_eq!((b[0].prefix.clone(), b[0].blocks.len(), b[0].suffix.clone()), (w("a"), 0, w("a")));

        let b = buildings(&w("a"), &code(&["aa"]));
        assert_eq!(b.len(), 2);
        assert_eq!((b[0].prefix.clone(), b[0].suffix.clone()), (w(""), w("a")));
        assert_eq!((b[1].prefix.clone(), b[1].suffix.clone()), (w("a"), w("")));

        assert!(is_uniquely_built(&w("abab"), &code(&["ab"])));
        assert!(!is_uniquely_built(&w("a"), &code(&["aa"])));
        assert_eq!(buildings(&[], &code(&["ab"])).len(), 1);
        // interior subwords of a single code word have no building
        assert!(buildings(&w("b"), &code(&["abc"])).is_empty());
    }

    #[test]
    fn block_starts_follow_prefix() {
        let b = &buildings(&w("babab"), &code(&["ab"]))[0];
        assert_eq!(b.block_starts(), vec![1, 3]);
    }

    #[test]
    fn covering_placements_cover_all_sources() {
        // "a" from {"aa"}: either the tail of a block starting at -1 or the
        // head of a block starting at 0
        let p = covering_placements(&w("a"), &code(&["aa"]), 0);
        assert_eq!(p, vec![Placement { start: -1, source: 0 }, Placement { start: 0, source: 0 }]);
        let p = covering_placements(&w("abab"), &code(&["ab"]), 2);
        assert_eq!(p, vec![Placement { start: 2, source: 0 }]);
    }

    #[test]
    fn identity_and_flip_codes() {
        let x = PointWindow::from_parts(0, Word::from_digits("0101"), vec![]).unwrap();
        let id = apply_block_code(&x, &BlockCode::letter_map(vec![0, 1])).unwrap();
        assert_eq!(id.letters(), x.letters());
        let flip = apply_block_code(&x, &BlockCode::letter_map(vec![1, 0])).unwrap();
        assert_eq!(flip.letters(), &Word::from_digits("1010"));
    }

    #[test]
    fn majority_code_matches_direct_evaluation() {
        let letters = Word::from_digits("0110100110010110");
        let x = PointWindow::from_parts(-8, letters.clone(), vec![]).unwrap();
        let maj = BlockCode::from_fn(1, |nb| (nb.iter().sum::<u32>() >= 2) as Letter);
        let y = apply_block_code(&x, &maj).unwrap();
        assert_eq!(y.start(), -7);
        for i in y.start()..y.end() {
            let j = (i + 8) as usize;
            let expect = (letters[j - 1] + letters[j] + letters[j + 1] >= 2) as Letter;
            assert_eq!(y.get(i), Some(expect));
        }
        let narrow = PointWindow::from_parts(0, Word::from_digits("01"), vec![]).unwrap();
        assert!(apply_block_code(&narrow, &maj).is_err());
    }

    #[test]
    fn marker_toggle_is_an_involution() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for marker in ["01", "10"] {
            let code = BlockCode::marker_toggle(Word::from_digits(marker), vec![1, 0]);
            for _ in 0..200 {
                let x: Vec<Letter> = (0..40).map(|_| rng.gen_range(0..2)).collect();
                let y: Vec<Letter> = x.windows(5).map(|nb| code.eval(nb).unwrap()).collect();
                let z: Vec<Letter> = y.windows(5).map(|nb| code.eval(nb).unwrap()).collect();
                assert_eq!(&z[..], &x[4..36]);
            }
        }
        let code = BlockCode::marker_toggle(Word::from_digits("01"), vec![1, 0]);
        assert_eq!(code.eval(&[0, 1, 0, 0, 1]), Some(1));
        assert_eq!(code.eval(&[0, 1, 1, 0, 1]), Some(0));
        assert_eq!(code.eval(&[1, 1, 0, 0, 1]), Some(0));
    }

    #[test]
    fn block_code_transports_certificates() {
        // x = (01)^∞ on [-4,4), fully 2-periodic
        let cert = CertLevel::new(2, 0, vec![Some(0), Some(1)]);
        let x = PointWindow::from_parts(-4, Word::from_digits("01010101"), vec![cert]).unwrap();
        let xor = BlockCode::from_fn(1, |nb| nb[0] ^ nb[2] ^ 1);
        let y = apply_block_code(&x, &xor).unwrap();
        for i in y.start()..y.end() {
            assert!(y.per_confirmed(i, 2));
            assert_eq!(y.get(i), Some(1));
        }
    }

    fn all_binary_words(max_len: usize) -> Vec<Word> {
        let mut out = vec![];
        for len in 1..=max_len {
            for bits in 0..(1u32 << len) {
                out.push((0..len).map(|i| (bits >> i) & 1).collect());
            }
        }
        out
    }

    /// Index of the first forced disagreement between the u-family and the
    /// v-family, by enumerating concatenations up to length |u|+|v|+1.
    fn enumerate_distinguished(u: &[Letter], v: &[Letter]) -> Option<usize> {
        let target = u.len() + v.len() + 1;
        let grow = |seed: &[Letter]| {
            let mut done: Vec<Vec<Letter>> = vec![];
            let mut frontier = vec![seed.to_vec()];
            while let Some(c) = frontier.pop() {
                if c.len() >= target {
                    done.push(c[..target].to_vec());
                } else {
                    for piece in [u, v] {
                        let mut e = c.clone();
                        e.extend_from_slice(piece);
                        frontier.push(e);
                    }
                }
            }
            done
        };
        let fu = grow(u);
        let fv = grow(v);
        for i in 0..target {
            let au: std::collections::BTreeSet<_> = fu.iter().map(|c| c[i]).collect();
            let av: std::collections::BTreeSet<_> = fv.iter().map(|c| c[i]).collect();
            if au.len() > 1 || av.len() > 1 {
                return None;
            }
            if au != av {
                return Some(i);
            }
        }
        None
    }

    #[test]
    fn distinguished_prefix_matches_enumeration_exhaustively() {
        let words = all_binary_words(6);
        let mut checked = 0;
        for u in &words {
            for v in &words {
                if is_euclidean_pair(u, v).unwrap() {
                    continue;
                }
                let p = distinguished_prefix(u, v).unwrap();
                assert!(p.length < u.len() + v.len());
                assert_eq!(Some(p.length), enumerate_distinguished(u, v), "u={u} v={v}");
                checked += 1;
            }
        }
        assert!(checked > 10_000);
    }

    fn word_strategy(alpha: u32, max: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec(0..alpha, 0..=max).prop_map(Word::new)
    }

    fn nonempty_word(alpha: u32, max: usize) -> impl Strategy<Value = Word> {
        prop::collection::vec(0..alpha, 1..=max).prop_map(Word::new)
    }

    proptest! {
        #[test]
        fn occurrences_match_naive(wd in word_strategy(2, 4), u in word_strategy(2, 40)) {
            prop_assume!(!wd.is_empty());
            prop_assert_eq!(occurrences(&wd, &u), naive_occurrences(&wd, &u));
        }

        #[test]
        fn reverse_is_involution(u in word_strategy(3, 64)) {
            prop_assert_eq!(reverse(&reverse(&u)), u.clone());
            prop_assert_eq!(reverse(&u).len(), u.len());
        }

        #[test]
        fn primitive_root_by_divisors(u in word_strategy(2, 24)) {
            prop_assume!(!u.is_empty());
            let (root, k) = primitive_root(&u).unwrap();
            prop_assert_eq!(root.pow(k), u.clone());
            let shortest = (1..=u.len())
                .find(|&l| u.len() % l == 0 && u[..l].repeat(u.len() / l) == *u.letters())
                .unwrap();
            prop_assert_eq!(root.len(), shortest);
        }

        #[test]
        fn euclidean_iff_commute(u in word_strategy(2, 10), v in word_strategy(2, 10)) {
            prop_assume!(!u.is_empty() && !v.is_empty());
            let uv = u.concat(&v);
            let vu = v.concat(&u);
            prop_assert_eq!(is_euclidean_pair(&u, &v).unwrap(), uv == vu);
        }

        #[test]
        fn distinguished_prefix_bound(u in word_strategy(3, 8), v in word_strategy(3, 8)) {
            prop_assume!(!u.is_empty() && !v.is_empty());
            prop_assume!(!is_euclidean_pair(&u, &v).unwrap());
            let p = distinguished_prefix(&u, &v).unwrap();
            prop_assert!(p.length < u.len() + v.len());
            prop_assert_eq!(Some(p.length), enumerate_distinguished(&u, &v));
        }

        #[test]
        fn distinguished_suffix_mirrors_prefix(u in word_strategy(2, 8), v in word_strategy(2, 8)) {
            prop_assume!(!u.is_empty() && !v.is_empty());
            prop_assume!(!is_euclidean_pair(&u, &v).unwrap());
            let s = distinguished_suffix(&u, &v).unwrap();
            let p = distinguished_prefix(&reverse(&u), &reverse(&v)).unwrap();
            prop_assert_eq!(s.word, reverse(&p.word));
            prop_assert!(s.length < u.len() + v.len());
        }

        #[test]
        fn buildings_complete_and_sound(
            c0 in nonempty_word(2, 4), c1 in nonempty_word(2, 4),
            picks in prop::collection::vec(0usize..2, 1..6),
            raw_l in 0usize..4, raw_r in 0usize..4,
        ) {
            let code = vec![c0, c1];
            let full: Vec<Letter> = picks.iter().flat_map(|&i| code[i].iter().copied()).collect();
            let first = code[picks[0]].len();
            let last = code[*picks.last().unwrap()].len();
            let cut_l = raw_l % first;
            // an interior subword of one code word has no building
            let cut_r = if picks.len() == 1 && cut_l > 0 { 0 } else { raw_r % last };
            let wd = &full[cut_l..full.len() - cut_r];
            let bs = buildings(wd, &code);
            prop_assert!(!bs.is_empty());
            for b in &bs {
                let cat = b.concatenation();
                prop_assert_eq!(cat.letters(), wd);
            }
            prop_assert_eq!(bs.len() as u64, count_buildings(wd, &code, u64::MAX));
        }
    }

    #[test]
    fn glue_property_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        let mut instances = 0;
        let mut attempts = 0;
        while instances < 100 {
            attempts += 1;
            assert!(attempts < 200_000, "too few glue instances generated");
            let code: Vec<Word> = (0..2)
                .map(|_| (0..rng.gen_range(2..=4)).map(|_| rng.gen_range(0..2)).collect())
                .collect();
            if code[0] == code[1] {
                continue;
            }
            let maxw = code.iter().map(|c| c.len()).max().unwrap();
            // random element of W* to draw subwords from
            let src: Vec<Letter> =
                (0..40).flat_map(|_| code[rng.gen_range(0..2)].iter().copied()).collect();
            let len = |rng: &mut rand_chacha::ChaCha8Rng| rng.gen_range(2 * maxw + 1..=2 * maxw + 4);
            let (l1, l2, l3) = (len(&mut rng), len(&mut rng), len(&mut rng));
            let start = rng.gen_range(0..src.len() - l1 - l2 - l3);
            let w1 = &src[start..start + l1];
            let w2 = &src[start + l1..start + l1 + l2];
            let w3 = &src[start + l1 + l2..start + l1 + l2 + l3];
            let cat = |parts: &[&[Letter]]| parts.concat();
            if is_uniquely_built(&cat(&[w1, w2]), &code)
                && is_uniquely_built(w2, &code)
                && is_uniquely_built(&cat(&[w2, w3]), &code)
            {
                assert_eq!(buildings(&cat(&[w1, w2, w3]), &code).len(), 1);
                instances += 1;
            }
        }
    }
}
