//! Morphisms, directive sequences and the points they generate.
//!
//! Level `n` of a directive sequence consists of the words
//! `τ_[0,n+1)(a)` for `a ∈ A_{n+1}`. Their lengths are tracked as `u64`, and
//! single letters or ranges of deep level words can be read without
//! materializing the words.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use parking_lot::RwLock;

use crate::error::{Error, Result};
use crate::words::{covering_placements, Alphabet, Letter, Word};

/// A non-erasing morphism `A_{n+1}* → A_n*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Morphism {
    source: Alphabet,
    target: Alphabet,
    images: Vec<Word>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralFlags {
    pub constant_length: Option<usize>,
    pub proper: bool,
    /// Positions where all images agree; empty unless constant-length.
    pub coincidences: Vec<usize>,
}

impl Morphism {
    pub fn new(source: Alphabet, target: Alphabet, images: Vec<Word>) -> Result<Self> {
        if images.len() != source.len() {
            return Err(Error::Morphism(format!(
                "{} images for a source alphabet of {} letters",
                images.len(),
                source.len()
            )));
        }
        for (a, img) in images.iter().enumerate() {
            if img.is_empty() {
                return Err(Error::Morphism(format!("image of letter {} is empty", source.name(a as Letter))));
            }
            target.check(img)?;
        }
        Ok(Morphism { source, target, images })
    }

    /// Morphism over numeric alphabets given as digit strings.
    pub fn from_digit_images(images: &[&str]) -> Result<Self> {
        let images: Vec<Word> = images.iter().map(|s| Word::from_digits(s)).collect();
        let target_size = images.iter().flat_map(|w| w.iter()).copied().max().unwrap_or(0) as usize + 1;
        Morphism::new(Alphabet::numeric(images.len()), Alphabet::numeric(target_size), images)
    }

    pub fn source(&self) -> &Alphabet {
        &self.source
    }

    pub fn target(&self) -> &Alphabet {
        &self.target
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn image(&self, a: Letter) -> &Word {
        &self.images[a as usize]
    }

    pub fn apply(&self, w: &[Letter]) -> Result<Word> {
        self.source.check(w)?;
        let mut out = Vec::new();
        for &a in w {
            out.extend_from_slice(&self.images[a as usize]);
        }
        Ok(Word::new(out))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Morphism) -> Result<Morphism> {
        if inner.target != self.source {
            return Err(Error::Morphism("alphabets do not chain".into()));
        }
        let images = inner.images.iter().map(|w| self.apply(w)).collect::<Result<Vec<_>>>()?;
        Ok(Morphism { source: inner.source.clone(), target: self.target.clone(), images })
    }

    /// Letterwise reversal of every image.
    pub fn reversed(&self) -> Morphism {
        Morphism {
            source: self.source.clone(),
            target: self.target.clone(),
            images: self.images.iter().map(|w| crate::words::reverse(w)).collect(),
        }
    }

    pub fn flags(&self) -> StructuralFlags {
        let len0 = self.images[0].len();
        let constant_length = self.images.iter().all(|w| w.len() == len0).then_some(len0);
        let first = self.images[0][0];
        let last = self.images[0][len0 - 1];
        let proper = self.images.iter().all(|w| w[0] == first && w[w.len() - 1] == last);
        let coincidences = match constant_length {
            Some(l) => (0..l).filter(|&i| self.images.iter().all(|w| w[i] == self.images[0][i])).collect(),
            None => Vec::new(),
        };
        StructuralFlags { constant_length, proper, coincidences }
    }
}

pub fn apply(m: &Morphism, w: &[Letter]) -> Result<Word> {
    m.apply(w)
}

pub fn structural_flags(m: &Morphism) -> StructuralFlags {
    m.flags()
}

/// Deterministic generator of levels beyond the explicit ones.
pub type TailRule = Arc<dyn Fn(usize) -> Morphism + Send + Sync>;

#[derive(Default)]
struct Memo {
    tail_levels: RwLock<HashMap<usize, Arc<Morphism>>>,
    bottom: RwLock<HashMap<usize, Arc<Morphism>>>,
    ranges: RwLock<HashMap<(usize, usize), Arc<Morphism>>>,
    lengths: RwLock<Vec<Arc<Vec<u64>>>>,
    coincidences: RwLock<HashMap<usize, Option<Arc<[Option<Letter>]>>>>,
}

/// Morphisms `τ_0, τ_1, ...` with chained alphabets, optionally continued
/// by a tail rule. Clones share the composite-morphism cache.
#[derive(Clone)]
pub struct DirectiveSequence {
    levels: Vec<Arc<Morphism>>,
    tail: Option<TailRule>,
    memo: Arc<Memo>,
}

impl fmt::Debug for DirectiveSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DirectiveSequence")
            .field("levels", &self.levels)
            .field("tail", &self.tail.is_some())
            .finish()
    }
}

/// Materialization limit for level words and certificate tables.
pub const MATERIALIZE_LIMIT: u64 = 1 << 23;

impl DirectiveSequence {
    pub fn new(levels: Vec<Morphism>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Morphism("a directive sequence needs at least one level".into()));
        }
        for n in 1..levels.len() {
            if levels[n].target != levels[n - 1].source {
                return Err(Error::Morphism(format!("level {n} target does not match level {} source", n - 1)));
            }
        }
        Ok(DirectiveSequence { levels: levels.into_iter().map(Arc::new).collect(), tail: None, memo: Arc::default() })
    }

    /// Explicit levels followed by `tail(n)` for every `n` past them.
    pub fn with_tail(levels: Vec<Morphism>, tail: TailRule) -> Result<Self> {
        let mut d = DirectiveSequence::new(levels)?;
        d.tail = Some(tail);
        Ok(d)
    }

    /// Number of explicit levels.
    pub fn explicit_depth(&self) -> usize {
        self.levels.len()
    }

    pub fn has_tail(&self) -> bool {
        self.tail.is_some()
    }

    /// Whether levels `0..n` are available.
    pub fn has_levels(&self, n: usize) -> bool {
        n <= self.levels.len() || self.tail.is_some()
    }

    fn check_levels(&self, n: usize) -> Result<()> {
        if self.has_levels(n) {
            Ok(())
        } else {
            Err(Error::DepthOutOfRange { requested: n, available: self.levels.len() })
        }
    }

    pub fn level(&self, n: usize) -> Result<Arc<Morphism>> {
        if n < self.levels.len() {
            return Ok(self.levels[n].clone());
        }
        let tail = self.tail.as_ref().ok_or(Error::DepthOutOfRange { requested: n + 1, available: self.levels.len() })?;
        if let Some(m) = self.memo.tail_levels.read().get(&n) {
            return Ok(m.clone());
        }
        let below = self.level(n - 1)?;
        let m = tail(n);
        if m.target != below.source {
            return Err(Error::Morphism(format!("tail level {n} does not chain onto level {}", n - 1)));
        }
        let m = Arc::new(m);
        self.memo.tail_levels.write().insert(n, m.clone());
        Ok(m)
    }

    /// `A_n`.
    pub fn alphabet(&self, n: usize) -> Result<Alphabet> {
        if n == 0 {
            Ok(self.levels[0].target.clone())
        } else {
            Ok(self.level(n - 1)?.source.clone())
        }
    }

    /// `τ_[n,N) = τ_n ∘ ⋯ ∘ τ_{N-1}`.
    pub fn compose_range(&self, n: usize, big_n: usize) -> Result<Arc<Morphism>> {
        if n >= big_n {
            return Err(Error::Params(format!("empty range [{n},{big_n})")));
        }
        self.check_levels(big_n)?;
        if big_n == n + 1 {
            return self.level(n);
        }
        if n == 0 {
            return self.bottom(big_n);
        }
        if let Some(m) = self.memo.ranges.read().get(&(n, big_n)) {
            return Ok(m.clone());
        }
        self.check_size(n, big_n)?;
        let m = Arc::new(self.compose_range(n, big_n - 1)?.compose(&*self.level(big_n - 1)?)?);
        self.memo.ranges.write().insert((n, big_n), m.clone());
        Ok(m)
    }

    fn bottom(&self, big_n: usize) -> Result<Arc<Morphism>> {
        if big_n == 1 {
            return self.level(0);
        }
        if let Some(m) = self.memo.bottom.read().get(&big_n) {
            return Ok(m.clone());
        }
        self.check_size(0, big_n)?;
        let m = Arc::new(self.bottom(big_n - 1)?.compose(&*self.level(big_n - 1)?)?);
        self.memo.bottom.write().insert(big_n, m.clone());
        Ok(m)
    }

    fn check_size(&self, n: usize, big_n: usize) -> Result<()> {
        // total letters of τ_[n,N) images
        let mut lens: Vec<u64> = vec![1; self.alphabet(n)?.len()];
        for k in n..big_n {
            let m = self.level(k)?;
            lens = m
                .images
                .iter()
                .map(|w| w.iter().try_fold(0u64, |s, &b| s.checked_add(lens[b as usize])))
                .collect::<Option<Vec<_>>>()
                .ok_or(Error::Overflow("composite length"))?;
        }
        let total: u64 = lens.iter().sum();
        if total > MATERIALIZE_LIMIT * 4 {
            return Err(Error::Params(format!(
                "composite τ_[{n},{big_n}) has {total} letters in total; too large to materialize"
            )));
        }
        Ok(())
    }

    /// The level-`n` words `τ_[0,n+1)(a)`, `a ∈ A_{n+1}`.
    pub fn level_words(&self, n: usize) -> Result<Vec<Word>> {
        Ok(self.compose_range(0, n + 1)?.images.clone())
    }

    pub fn level_word(&self, n: usize, a: Letter) -> Result<Word> {
        Ok(self.compose_range(0, n + 1)?.images[a as usize].clone())
    }

    /// `|τ_[0,n+1)(a)|` for each `a ∈ A_{n+1}`.
    pub fn level_lengths(&self, n: usize) -> Result<Arc<Vec<u64>>> {
        if let Some(l) = self.memo.lengths.read().get(n) {
            return Ok(l.clone());
        }
        let below: Option<Arc<Vec<u64>>> = if n == 0 { None } else { Some(self.level_lengths(n - 1)?) };
        let m = self.level(n)?;
        let lens = m
            .images
            .iter()
            .map(|w| {
                w.iter().try_fold(0u64, |s, &b| s.checked_add(below.as_ref().map_or(1, |l| l[b as usize])))
            })
            .collect::<Option<Vec<_>>>()
            .ok_or(Error::Overflow("level-word length"))?;
        let lens = Arc::new(lens);
        let mut cache = self.memo.lengths.write();
        if cache.len() == n {
            cache.push(lens.clone());
        }
        Ok(lens)
    }

    /// Letter at `pos` of `τ_[0,n+1)(a)`, by descent through the levels.
    pub fn letter_at(&self, n: usize, a: Letter, pos: u64) -> Result<Letter> {
        let (mut level, mut cur, mut p) = (n, a, pos);
        if p >= self.level_lengths(n)?[a as usize] {
            return Err(Error::Params(format!("position {pos} beyond level-{n} word")));
        }
        while level > 0 {
            let lens = self.level_lengths(level - 1)?;
            let m = self.level(level)?;
            let mut next = None;
            for &b in m.image(cur).iter() {
                let l = lens[b as usize];
                if p < l {
                    next = Some(b);
                    break;
                }
                p -= l;
            }
            cur = next.expect("position within image");
            level -= 1;
        }
        Ok(self.level(0)?.image(cur)[p as usize])
    }

    /// `τ_[0,n+1)(a)[start, end)` without materializing the whole word.
    pub fn extract(&self, n: usize, a: Letter, start: u64, end: u64) -> Result<Word> {
        let len = self.level_lengths(n)?[a as usize];
        if start > end || end > len {
            return Err(Error::Params(format!("range [{start},{end}) outside level-{n} word of length {len}")));
        }
        let mut out = Vec::with_capacity((end - start) as usize);
        self.extract_into(n, a, start, end, &mut out)?;
        Ok(Word::new(out))
    }

    fn extract_into(&self, n: usize, a: Letter, start: u64, end: u64, out: &mut Vec<Letter>) -> Result<()> {
        let m = self.level(n)?;
        if n == 0 {
            out.extend_from_slice(&m.image(a)[start as usize..end as usize]);
            return Ok(());
        }
        let lens = self.level_lengths(n - 1)?;
        let mut pos = 0u64;
        for &b in m.image(a).iter() {
            let l = lens[b as usize];
            let (s, e) = (start.max(pos), end.min(pos + l));
            if s < e {
                self.extract_into(n - 1, b, s - pos, e - pos, out)?;
            }
            pos += l;
            if pos >= end {
                break;
            }
        }
        Ok(())
    }

    /// `d_n` for `n < depth`.
    pub fn scale_divisors(&self, depth: usize) -> Result<Vec<u64>> {
        (0..depth).map(|n| Ok(self.level_lengths(n)?.iter().fold(0, |g, &l| gcd(g, l)))).collect()
    }

    /// Residue table mod `d_n` of letters shared by every level-`n` word, or
    /// `None` when the level is too large to tabulate.
    pub fn coincidence_table(&self, n: usize) -> Result<Option<Arc<[Option<Letter>]>>> {
        if let Some(t) = self.memo.coincidences.read().get(&n) {
            return Ok(t.clone());
        }
        let lens = self.level_lengths(n)?;
        let dn = lens.iter().fold(0, |g, &l| gcd(g, l));
        let total: u64 = lens.iter().sum();
        let table = if dn > MATERIALIZE_LIMIT || total > MATERIALIZE_LIMIT {
            None
        } else {
            let mut t: Vec<Option<Option<Letter>>> = vec![None; dn as usize];
            for (a, &l) in lens.iter().enumerate() {
                let w = self.extract(n, a as Letter, 0, l)?;
                for (i, &c) in w.iter().enumerate() {
                    let slot = &mut t[i % dn as usize];
                    *slot = match *slot {
                        None => Some(Some(c)),
                        Some(Some(x)) if x == c => Some(Some(x)),
                        _ => Some(None),
                    };
                }
            }
            Some(t.into_iter().map(|s| s.flatten()).collect::<Vec<_>>().into())
        };
        self.memo.coincidences.write().insert(n, table.clone());
        Ok(table)
    }

    /// Explicit levels `τ_0..τ_{depth-1}`, with the tail dropped.
    pub fn truncated(&self, depth: usize) -> Result<DirectiveSequence> {
        self.check_levels(depth)?;
        if depth == 0 {
            return Err(Error::Params("depth must be at least 1".into()));
        }
        let levels = (0..depth).map(|n| Ok((*self.level(n)?).clone())).collect::<Result<Vec<_>>>()?;
        DirectiveSequence::new(levels)
    }

    /// Applies `f` to every level, keeping the tail (mapped likewise).
    pub fn map_levels(&self, f: impl Fn(usize, &Morphism) -> Morphism + Send + Sync + 'static) -> Result<DirectiveSequence> {
        let levels: Vec<Morphism> = self.levels.iter().enumerate().map(|(n, m)| f(n, m)).collect();
        let f = Arc::new(f);
        match &self.tail {
            None => DirectiveSequence::new(levels),
            Some(_) => {
                let src = self.clone();
                let g = f.clone();
                DirectiveSequence::with_tail(
                    levels,
                    Arc::new(move |n| g(n, &src.level(n).expect("tail level"))),
                )
            }
        }
    }

    /// `bottom` followed by all levels of `self`, shifted up by one.
    pub fn prepend(&self, bottom: Morphism) -> Result<DirectiveSequence> {
        let mut levels = vec![bottom];
        levels.extend(self.levels.iter().map(|m| (**m).clone()));
        match &self.tail {
            None => DirectiveSequence::new(levels),
            Some(_) => {
                let src = self.clone();
                DirectiveSequence::with_tail(levels, Arc::new(move |k| (*src.level(k - 1).expect("tail level")).clone()))
            }
        }
    }

    /// Levels `n, n+1, ...` as a new sequence (bottom levels dropped).
    pub fn shifted_from(&self, n: usize) -> Result<DirectiveSequence> {
        if n == 0 {
            return Ok(self.clone());
        }
        self.check_levels(n + 1)?;
        let levels: Vec<Morphism> = self.levels.iter().skip(n).map(|m| (**m).clone()).collect();
        match &self.tail {
            None => DirectiveSequence::new(levels),
            Some(_) => {
                let src = self.clone();
                let levels = if levels.is_empty() { vec![(*self.level(n)?).clone()] } else { levels };
                DirectiveSequence::with_tail(levels, Arc::new(move |k| (*src.level(k + n).expect("tail level")).clone()))
            }
        }
    }
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        0
    } else {
        a / gcd(a, b) * b
    }
}

pub fn compose_range(d: &DirectiveSequence, n: usize, big_n: usize) -> Result<Arc<Morphism>> {
    d.compose_range(n, big_n)
}

pub fn scale_divisors(d: &DirectiveSequence, depth: usize) -> Result<Vec<u64>> {
    d.scale_divisors(depth)
}

/// `τ′_k = τ_[n_k, n_{k+1})`.
pub fn contract(d: &DirectiveSequence, cut_levels: &[usize]) -> Result<DirectiveSequence> {
    if cut_levels.len() < 2 || cut_levels[0] != 0 || cut_levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidCuts(format!("{cut_levels:?} must be strictly increasing from 0 with two or more entries")));
    }
    let last = *cut_levels.last().unwrap();
    if !d.has_levels(last) {
        return Err(Error::InvalidCuts(format!("cut level {last} beyond depth {}", d.explicit_depth())));
    }
    let levels = cut_levels
        .windows(2)
        .map(|w| Ok((*d.compose_range(w[0], w[1])?).clone()))
        .collect::<Result<Vec<_>>>()?;
    DirectiveSequence::new(levels)
}

/// Least `N ≤ max_n` such that every letter of `A_n` occurs in every
/// `τ_[n,N)(a)`.
pub fn is_primitive_window(d: &DirectiveSequence, n: usize, max_n: usize) -> Result<Option<usize>> {
    let size = d.alphabet(n)?.len();
    // occ[a] = letters of A_n occurring in τ_[n,N)(a)
    let mut occ: Vec<Vec<bool>> = (0..size).map(|a| (0..size).map(|b| a == b).collect()).collect();
    for big_n in n + 1..=max_n {
        if !d.has_levels(big_n) {
            break;
        }
        let m = d.level(big_n - 1)?;
        occ = m
            .images
            .iter()
            .map(|w| {
                let mut s = vec![false; size];
                for &b in w.iter() {
                    for (x, &o) in s.iter_mut().zip(&occ[b as usize]) {
                        *x |= o;
                    }
                }
                s
            })
            .collect();
        if occ.iter().all(|s| s.iter().all(|&o| o)) {
            return Ok(Some(big_n));
        }
    }
    Ok(None)
}

/// Levels above `n` used to collect adjacent letter pairs.
const PAIR_LEVELS: usize = 6;

fn internal_pairs(m: &Morphism) -> BTreeSet<(Letter, Letter)> {
    m.images.iter().flat_map(|w| w.windows(2).map(|p| (p[0], p[1])).collect::<Vec<_>>()).collect()
}

fn boundary_pairs(m: &Morphism, pairs: &BTreeSet<(Letter, Letter)>) -> BTreeSet<(Letter, Letter)> {
    pairs
        .iter()
        .map(|&(a, b)| (*m.images[a as usize].last().expect("nonempty"), m.images[b as usize][0]))
        .collect()
}

/// Adjacent letter pairs of `A_n` in the generated sequence, collected
/// from at most `PAIR_LEVELS` levels above `n` (a lower bound when the
/// sequence has fewer explicit levels).
pub fn adjacent_pairs(d: &DirectiveSequence, n: usize) -> Result<BTreeSet<(Letter, Letter)>> {
    let mut top = n;
    while top < n + PAIR_LEVELS && d.has_levels(top + 2) {
        top += 1;
    }
    if !d.has_levels(top + 1) {
        return Ok(BTreeSet::new());
    }
    let mut pairs = internal_pairs(&*d.level(top)?);
    for k in (n..top).rev() {
        let m = d.level(k)?;
        let mut next = internal_pairs(&m);
        next.extend(boundary_pairs(&m, &pairs));
        pairs = next;
    }
    Ok(pairs)
}

/// Largest `ℓ` for which the length-`ℓ` factors of the level-`n` words are
/// all the length-`ℓ` words of the subshift. A factor of length at most
/// `1 + |shortest level-(j-1) word|` meets at most two level-`(j-1)`
/// words, so it is found once every adjacent pair of `A_j` occurs inside
/// some `τ_[j,n+1)(a)`; the deepest such `j` gives the bound. Zero when
/// the letters of `A_{n+1}` do not all recur by level `n`.
pub fn exact_factor_length(d: &DirectiveSequence, n: usize) -> Result<usize> {
    if is_primitive_window(d, 0, n + 1)?.is_none() {
        return Ok(0);
    }
    for j in (0..=n).rev() {
        let inside = internal_pairs(&*d.compose_range(j, n + 1)?);
        if adjacent_pairs(d, j)?.is_subset(&inside) {
            let below = if j == 0 { 1 } else { d.level_lengths(j - 1)?.iter().copied().min().unwrap_or(0) };
            return Ok(below as usize + 1);
        }
    }
    Ok(1)
}

/// Length-ℓ subwords of the words `τ_[0,depth)(a)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Language {
    pub length: usize,
    pub depth: usize,
    /// True when `ℓ ≤ exact_factor_length(d, depth - 1)`; otherwise a
    /// lower approximation.
    pub exact: bool,
    pub words: Vec<Word>,
}

impl Language {
    pub fn contains(&self, w: &[Letter]) -> bool {
        self.words.binary_search_by(|x| x.letters().cmp(w)).is_ok()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

pub fn language(d: &DirectiveSequence, length: usize, depth: usize) -> Result<Language> {
    if depth == 0 {
        return Err(Error::Params("language depth must be at least 1".into()));
    }
    let words = d.level_words(depth - 1)?;
    let max = words.iter().map(|w| w.len()).max().unwrap_or(0);
    if length > max {
        return Err(Error::LanguageTooLong { length, available: max as u64, depth });
    }
    let mut seen: HashSet<&[Letter]> = HashSet::new();
    for w in &words {
        if w.len() >= length {
            for s in w.windows(length.max(1)) {
                seen.insert(&s[..length]);
            }
        }
    }
    let mut out: Vec<Word> = seen.into_iter().map(Word::from).collect();
    out.sort();
    let exact = length <= exact_factor_length(d, depth - 1)?;
    Ok(Language { length, depth, exact, words: out })
}

/// The least radius `r` at which every word of length `2r` of the language
/// fixes the level-`n` block covering its centre.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecognizabilityCertificate {
    pub level: usize,
    pub radius: usize,
    pub verified_word_length: usize,
    pub depth: usize,
}

/// `bound` defaults to four times the longest level-`n` word. Returns `None`
/// when no radius up to the bound (or up to what `depth` supports) works.
pub fn recognizability_radius(
    d: &DirectiveSequence,
    n: usize,
    depth: usize,
    bound: Option<usize>,
) -> Result<Option<RecognizabilityCertificate>> {
    let code = d.level_words(n)?;
    let bound = bound.unwrap_or(4 * code.iter().map(|w| w.len()).max().unwrap_or(1));
    for r in 1..=bound {
        let lang = match language(d, 2 * r, depth) {
            Ok(l) => l,
            Err(Error::LanguageTooLong { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let ok = lang.words.iter().all(|w| covering_placements(w, &code, r).len() == 1);
        if ok {
            return Ok(Some(RecognizabilityCertificate { level: n, radius: r, verified_word_length: 2 * r, depth }));
        }
    }
    Ok(None)
}

/// One certificate level of a point: every position `i` with
/// `(i - cut) mod period = ρ` carries `table[ρ]` when it is `Some`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertLevel {
    pub period: u64,
    pub cut: i64,
    pub table: Arc<[Option<Letter>]>,
}

impl CertLevel {
    pub fn new(period: u64, cut: i64, table: Vec<Option<Letter>>) -> Self {
        CertLevel { period, cut, table: table.into() }
    }
}

/// Membership status of a position in `Per_q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerStatus {
    Confirmed,
    /// Two positions in the residue class with different letters.
    Hole { witness: (i64, i64) },
    Unknown,
}

type FoldCache = RwLock<HashMap<(usize, u64), Arc<Vec<Option<Letter>>>>>;

/// A window `x[a, b)` with `a ≤ 0 < b` and period certificates.
#[derive(Clone)]
pub struct PointWindow {
    start: i64,
    letters: Word,
    certs: Vec<CertLevel>,
    folds: Arc<FoldCache>,
}

impl fmt::Debug for PointWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointWindow")
            .field("start", &self.start)
            .field("letters", &self.letters)
            .field("cert_periods", &self.certs.iter().map(|c| c.period).collect::<Vec<_>>())
            .finish()
    }
}

impl PartialEq for PointWindow {
    fn eq(&self, other: &Self) -> bool {
        self.start == other.start && self.letters == other.letters && self.certs == other.certs
    }
}

impl PointWindow {
    pub fn from_parts(start: i64, letters: Word, certs: Vec<CertLevel>) -> Result<Self> {
        if start > 0 || start + letters.len() as i64 <= 0 {
            return Err(Error::Params(format!(
                "window [{start},{}) does not contain position 0",
                start + letters.len() as i64
            )));
        }
        if let Some(c) = certs.iter().find(|c| c.period == 0 || c.table.len() as u64 != c.period) {
            return Err(Error::Params(format!("certificate table of length {} for period {}", c.table.len(), c.period)));
        }
        Ok(PointWindow { start, letters, certs, folds: Arc::default() })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.start + self.letters.len() as i64
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &Word {
        &self.letters
    }

    pub fn cert_levels(&self) -> &[CertLevel] {
        &self.certs
    }

    pub fn contains(&self, i: i64) -> bool {
        self.start <= i && i < self.end()
    }

    pub fn get(&self, i: i64) -> Option<Letter> {
        self.contains(i).then(|| self.letters[(i - self.start) as usize])
    }

    /// `x[i, j)`, if inside the window.
    pub fn slice(&self, i: i64, j: i64) -> Option<&[Letter]> {
        (self.start <= i && i <= j && j <= self.end())
            .then(|| &self.letters[(i - self.start) as usize..(j - self.start) as usize])
    }

    fn fold(&self, level: usize, q: u64) -> Arc<Vec<Option<Letter>>> {
        if let Some(f) = self.folds.read().get(&(level, q)) {
            return f.clone();
        }
        let c = &self.certs[level];
        let mut f: Vec<Option<Option<Letter>>> = vec![None; q as usize];
        for (rho, &entry) in c.table.iter().enumerate() {
            let slot = &mut f[rho % q as usize];
            *slot = match (*slot, entry) {
                (_, None) => Some(None),
                (None, Some(a)) => Some(Some(a)),
                (Some(Some(x)), Some(a)) if x == a => Some(Some(a)),
                _ => Some(None),
            };
        }
        let f = Arc::new(f.into_iter().map(|s| s.flatten()).collect::<Vec<_>>());
        self.folds.write().insert((level, q), f.clone());
        f
    }

    /// The letter forced on the residue class of `i` mod `q`, if some
    /// certificate level with `q | period` confirms it.
    pub fn per_letter(&self, i: i64, q: u64) -> Option<Letter> {
        if q == 0 {
            return None;
        }
        (0..self.certs.len()).rev().filter(|&l| self.certs[l].period % q == 0).find_map(|l| {
            let c = &self.certs[l];
            self.fold(l, q)[(i - c.cut).rem_euclid(q as i64) as usize]
        })
    }

    pub fn per_confirmed(&self, i: i64, q: u64) -> bool {
        self.per_letter(i, q).is_some()
    }

    /// Two window positions `≡ i (mod q)` with different letters.
    pub fn hole_witness(&self, i: i64, q: u64) -> Option<(i64, i64)> {
        let q = q as i64;
        let first = self.start + (i - self.start).rem_euclid(q);
        let anchor = if self.contains(i) { i } else { first };
        let a0 = self.get(anchor)?;
        let mut j = first;
        while j < self.end() {
            if self.letters[(j - self.start) as usize] != a0 {
                return Some((anchor.min(j), anchor.max(j)));
            }
            j += q;
        }
        None
    }

    pub fn per_status(&self, i: i64, q: u64) -> PerStatus {
        if self.per_confirmed(i, q) {
            PerStatus::Confirmed
        } else if let Some(w) = self.hole_witness(i, q) {
            PerStatus::Hole { witness: w }
        } else {
            PerStatus::Unknown
        }
    }

    /// Least `q` (a divisor of some certificate period) with `i` confirmed
    /// `q`-periodic.
    pub fn least_confirmed_period(&self, i: i64) -> Option<u64> {
        let mut cands: BTreeSet<u64> = BTreeSet::new();
        for c in &self.certs {
            cands.extend(divisors(c.period));
        }
        cands.into_iter().find(|&q| self.per_confirmed(i, q))
    }

    /// `S^k x`: the window of the shifted point.
    pub fn shifted(&self, k: i64) -> Result<PointWindow> {
        let certs = self.certs.iter().map(|c| CertLevel { period: c.period, cut: c.cut - k, table: c.table.clone() }).collect();
        PointWindow::from_parts(self.start - k, self.letters.clone(), certs)
    }

    /// The sub-window `[a, b)`.
    pub fn restrict(&self, a: i64, b: i64) -> Result<PointWindow> {
        let w = self.slice(a, b).ok_or(Error::Params(format!("[{a},{b}) not inside the window")))?;
        PointWindow::from_parts(a, Word::from(w), self.certs.clone())
    }

    /// Whether every certified letter agrees with the window's letters.
    pub fn certificates_consistent(&self) -> bool {
        self.certs.iter().all(|c| {
            (self.start..self.end()).all(|i| match c.table[(i - c.cut).rem_euclid(c.period as i64) as usize] {
                Some(a) => self.get(i) == Some(a),
                None => true,
            })
        })
    }
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut small = vec![];
    let mut large = vec![];
    let mut k = 1;
    while k * k <= n {
        if n % k == 0 {
            small.push(k);
            if k * k != n {
                large.push(n / k);
            }
        }
        k += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

/// Position 0 of the point sits at `offset` inside `τ_[0,level+1)(letter)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Anchor {
    pub level: usize,
    pub letter: Letter,
    pub offset: u64,
}

impl Anchor {
    pub fn from_top(level: usize, letter: Letter, offset: u64) -> Self {
        Anchor { level, letter, offset }
    }

    /// Per-level `(letter, offset)` from level 0 up to the anchor level.
    pub fn tower(&self, d: &DirectiveSequence) -> Result<Vec<(Letter, u64)>> {
        let lens = d.level_lengths(self.level)?;
        if self.letter as usize >= lens.len() {
            return Err(Error::Anchor(format!("letter {} not in A_{}", self.letter, self.level + 1)));
        }
        if self.offset >= lens[self.letter as usize] {
            return Err(Error::Anchor(format!("offset {} beyond the level word", self.offset)));
        }
        let mut out = vec![(self.letter, self.offset)];
        let (mut cur, mut p) = (self.letter, self.offset);
        for level in (1..=self.level).rev() {
            let below = d.level_lengths(level - 1)?;
            let m = d.level(level)?;
            let mut acc = 0;
            for &b in m.image(cur).iter() {
                if p < acc + below[b as usize] {
                    cur = b;
                    p -= acc;
                    break;
                }
                acc += below[b as usize];
            }
            out.push((cur, p));
        }
        out.reverse();
        Ok(out)
    }

    /// Checks a per-level `(letter, offset)` list (index = level) for
    /// consistency and returns the top anchor.
    pub fn from_levels(d: &DirectiveSequence, levels: &[(Letter, u64)]) -> Result<Self> {
        let top = levels.len().checked_sub(1).ok_or(Error::Anchor("empty anchor tower".into()))?;
        let a = Anchor { level: top, letter: levels[top].0, offset: levels[top].1 };
        if a.tower(d)? != levels {
            return Err(Error::Anchor("levels do not nest".into()));
        }
        Ok(a)
    }

    /// An anchor whose position 0 lies at least `margin` from both ends of
    /// the top word.
    pub fn random(d: &DirectiveSequence, level: usize, margin: u64, rng: &mut impl rand::Rng) -> Result<Self> {
        let lens = d.level_lengths(level)?;
        let letter = rng.gen_range(0..lens.len()) as Letter;
        let len = lens[letter as usize];
        if len < 2 * margin + 1 {
            return Err(Error::Anchor(format!("level word of length {len} too short for margin {margin}")));
        }
        Ok(Anchor { level, letter, offset: rng.gen_range(margin..=len - margin - 1) })
    }
}

/// The window `[-min(k, h), min(|w|-k, h))` of the point anchored at offset
/// `k` in the top word `w`, with certificates from every level up to the
/// anchor's.
pub fn point_window(d: &DirectiveSequence, anchor: &Anchor, half_width: u64) -> Result<PointWindow> {
    let tower = anchor.tower(d)?;
    let len = d.level_lengths(anchor.level)?[anchor.letter as usize];
    if half_width > len {
        return Err(Error::WindowTooNarrow { needed: half_width, available: len });
    }
    let k = anchor.offset;
    let a = k.min(half_width);
    let b = (len - k).min(half_width);
    let letters = d.extract(anchor.level, anchor.letter, k - a, k + b)?;
    let scale = d.scale_divisors(anchor.level + 1)?;
    let mut certs = Vec::new();
    for (n, &(_, off)) in tower.iter().enumerate() {
        if let Some(table) = d.coincidence_table(n)? {
            certs.push(CertLevel { period: scale[n], cut: -(off as i64), table });
        }
    }
    PointWindow::from_parts(-(a as i64), letters, certs)
}

/// Lengths of the longest common prefix of the two level-`n` words, for
/// `n < depth`, on two-letter constant-length levels.
pub fn common_prefix_lengths(d: &DirectiveSequence, depth: usize) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    let mut prev = 0u64;
    for n in 0..depth {
        let m = d.level(n)?;
        let (x, y) = (m.image(0), m.image(1));
        let j = x.iter().zip(y.iter()).position(|(a, b)| a != b).ok_or(Error::Flags(format!("level {n} images coincide")))?;
        let k = if n == 0 { j as u64 } else { j as u64 * d.level_lengths(n - 1)?[0] + prev };
        out.push(k);
        prev = k;
    }
    Ok(out)
}

fn check_pair_flags(d: &DirectiveSequence, depth: usize) -> Result<()> {
    for n in 0..depth {
        let m = d.level(n)?;
        if m.source.len() != 2 {
            return Err(Error::Flags(format!("A_{} has {} letters, expected 2", n + 1, m.source.len())));
        }
        let f = m.flags();
        if f.constant_length.is_none() {
            return Err(Error::Flags(format!("level {n} is not constant-length")));
        }
        if n > 0 && !f.proper {
            return Err(Error::Flags(format!("level {n} is not proper")));
        }
    }
    Ok(())
}

/// The pair anchored at the common-prefix offset `k_N` of the two top level
/// words (`N = depth - 1`). The windows agree on `[-k_N, 0)`. At lower levels
/// the block under position 0 is whichever level word τ_{n+1} places at the
/// first disagreement, so it may be `w_{n,2}` for the first point.
pub fn centered_asymptotic_pair(d: &DirectiveSequence, depth: usize) -> Result<(PointWindow, PointWindow)> {
    if depth == 0 {
        return Err(Error::Params("depth must be at least 1".into()));
    }
    check_pair_flags(d, depth)?;
    let top = depth - 1;
    let k = *common_prefix_lengths(d, depth)?.last().unwrap();
    let len = d.level_lengths(top)?[0];
    let x = point_window(d, &Anchor::from_top(top, 0, k), len)?;
    let y = point_window(d, &Anchor::from_top(top, 1, k), len)?;
    Ok((x, y))
}
