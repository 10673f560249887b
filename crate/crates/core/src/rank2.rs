//! Strong rank-2 cuts, the strong-rank-2 certificate search, part classes
//! and χ, blockwise equivalences and the conjugacy tests.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::sadic::{
    exact_factor_length, language, lcm, point_window, Anchor, CertLevel, DirectiveSequence, Morphism,
    PointWindow,
};
use crate::skeletons::SkeletonWindow;
use crate::verdict::{Status, Verdict};
use crate::words::{is_uniquely_built, Letter, Word};

// ---------------------------------------------------------------------------
// Cuts

/// A phase `offset` for period `period` at which the window shows exactly
/// two distinct blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut {
    pub period: u64,
    pub offset: u64,
    /// Distinct blocks observed, sorted.
    pub blocks: Vec<Word>,
    /// Certificate level whose period equals `period` and whose cut agrees
    /// with `offset`. For a constant-length level with two words this makes
    /// the cut strong on the whole point, not only on the window.
    pub aligned_level: Option<usize>,
}

impl Cut {
    pub fn is_certified(&self) -> bool {
        self.aligned_level.is_some()
    }
}

fn blocks_at(x: &PointWindow, p: u64, t: u64) -> BTreeSet<Word> {
    let p = p as i64;
    let mut k = (x.start() - t as i64).div_euclid(p);
    let mut out = BTreeSet::new();
    loop {
        let a = t as i64 + k * p;
        if a + p > x.end() {
            break;
        }
        if a >= x.start() {
            out.insert(Word::from(x.slice(a, a + p).expect("inside window")));
        }
        k += 1;
    }
    out
}

/// Every phase with exactly two distinct `p`-blocks inside the window.
pub fn find_strong_rank2_cuts(x: &PointWindow, p: u64) -> Result<Vec<Cut>> {
    if p == 0 {
        return Err(Error::Params("period must be positive".into()));
    }
    if (x.len() as u64) < 4 * p {
        return Err(Error::WindowTooNarrow { needed: 4 * p, available: x.len() as u64 });
    }
    let mut out = Vec::new();
    for t in 0..p {
        let blocks = blocks_at(x, p, t);
        if blocks.len() != 2 {
            continue;
        }
        let aligned_level = x
            .cert_levels()
            .iter()
            .position(|c| c.period == p && (t as i64 - c.cut).rem_euclid(p as i64) == 0);
        out.push(Cut { period: p, offset: t, blocks: blocks.into_iter().collect(), aligned_level });
    }
    Ok(out)
}

/// Which interval of the coincidence definition was confirmed periodic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoincidenceWitness {
    pub k: i64,
    pub interval: (i64, i64),
}

fn intervals(c1: &Cut, c2: &Cut) -> Result<(i64, (i64, i64), (i64, i64))> {
    let (p, q) = (c1.period, c2.period);
    if p == 0 || q % p != 0 {
        return Err(Error::Params(format!("cut periods {p} and {q}: the first must divide the second")));
    }
    let (t, s, p) = (c1.offset as i64, c2.offset as i64, p as i64);
    let k = (s - t).div_euclid(p);
    Ok((k, (t + k * p, s), (s, t + (k + 1) * p)))
}

/// Witnessed when `[t+kp, s)` or `[s, t+(k+1)p)` is confirmed
/// `q`-periodic by the certificates; unknown otherwise.
pub fn cuts_coincide(x: &PointWindow, c1: &Cut, c2: &Cut) -> Result<Verdict<CoincidenceWitness>> {
    let (k, left, right) = intervals(c1, c2)?;
    let q = c2.period;
    for iv in [left, right] {
        if (iv.0..iv.1).all(|i| x.per_confirmed(i, q)) {
            return Ok(Verdict::witnessed(
                CoincidenceWitness { k, interval: iv },
                x.cert_levels().len(),
                format!("[{}, {}) is confirmed {q}-periodic", iv.0, iv.1),
            ));
        }
    }
    Ok(Verdict::unknown(x.cert_levels().len(), "neither interval is confirmed periodic by the certificates"))
}

/// True when both intervals contain a position with an explicit
/// `q`-hole witness, which two strong cuts cannot produce.
pub fn coincidence_violation(x: &PointWindow, c1: &Cut, c2: &Cut) -> Result<bool> {
    let (_, left, right) = intervals(c1, c2)?;
    let q = c2.period;
    let holed = |iv: (i64, i64)| (iv.0..iv.1).any(|i| x.hole_witness(i, q).is_some());
    Ok(holed(left) && holed(right))
}

// ---------------------------------------------------------------------------
// Strong rank-2 certificates

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sts2Witness {
    pub q: u64,
    pub r: u64,
    pub u: Word,
    pub v: Word,
    /// Level whose two words are `u` and `v`.
    pub level: usize,
}

fn common_prefix(u: &[Letter], v: &[Letter]) -> usize {
    u.iter().zip(v).take_while(|(a, b)| a == b).count()
}

fn common_suffix(u: &[Letter], v: &[Letter]) -> usize {
    u.iter().rev().zip(v.iter().rev()).take_while(|(a, b)| a == b).count()
}

/// Searches level-word pairs `u, v` of equal length `q` with `p | q`,
/// common prefix and suffix longer than `m`, and some `r > q` such that
/// every word of the exact languages of lengths `2r` and `4r` is uniquely
/// built from `{u, v}`. `None` when nothing is found within `depth`.
pub fn sts2_witness(d: &DirectiveSequence, p: u64, m: u64, depth: usize) -> Result<Option<Sts2Witness>> {
    if p == 0 {
        return Err(Error::Params("p must be positive".into()));
    }
    for n in 0..depth {
        if !d.has_levels(n + 1) {
            break;
        }
        let words = match d.level_words(n) {
            Ok(w) => w,
            Err(Error::Params(_)) | Err(Error::Overflow(_)) => break,
            Err(e) => return Err(e),
        };
        for i in 0..words.len() {
            for j in i + 1..words.len() {
                let (u, v) = (&words[i], &words[j]);
                let q = u.len() as u64;
                if v.len() as u64 != q || q % p != 0 || u == v {
                    continue;
                }
                if common_prefix(u, v) as u64 <= m || common_suffix(u, v) as u64 <= m {
                    continue;
                }
                let code = [u.clone(), v.clone()];
                for r in q + 1..=4 * q {
                    let ok = |len: u64| -> Result<Option<bool>> {
                        match language(d, len as usize, depth) {
                            Ok(l) if l.exact => Ok(Some(l.words.iter().all(|w| is_uniquely_built(w, &code)))),
                            Ok(_) | Err(Error::LanguageTooLong { .. }) => Ok(None),
                            Err(e) => Err(e),
                        }
                    };
                    match (ok(2 * r)?, ok(4 * r)?) {
                        (Some(true), Some(true)) => {
                            return Ok(Some(Sts2Witness { q, r, u: u.clone(), v: v.clone(), level: n }))
                        }
                        (None, _) | (_, None) => break,
                        _ => {}
                    }
                }
            }
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Part classes

/// Default number of consecutive blocks in a class's block-word language.
pub const DEFAULT_BLOCK_LEN: usize = 3;

/// Half-width of the representative windows.
const CLASS_WINDOW: u64 = 1 << 12;
/// Largest period for which all `p` shift classes are built.
const MAX_CLASS_PERIOD: u64 = CLASS_WINDOW;

/// Largest total length of level words used for block languages.
const BLOCK_SOURCE_LIMIT: u64 = 1 << 21;

/// `W = closure of {S^{shift + jp} x}` for the canonical point `x`.
#[derive(Debug, Clone)]
pub struct PartClass {
    pub period: u64,
    pub shift: u64,
    /// `(shift - c) mod p` with `c` a start of level words containing the
    /// blocks.
    pub residue: u64,
    /// `Skel(W, p)` read from position 0.
    pub skeleton: SkeletonWindow,
    /// Distinct aligned `p`-blocks, sorted.
    pub blocks: Vec<Word>,
    /// Aligned words of `block_len` consecutive blocks, as indices into
    /// `blocks`, sorted.
    pub block_words: Vec<Vec<u32>>,
    pub block_len: usize,
    /// Whether the block language is complete (same criterion as
    /// `language`).
    pub exact: bool,
}

impl PartClass {
    /// Least `i ≥ 0` with a hole at `i`.
    pub fn length(&self) -> Option<u64> {
        (0..self.period as i64).find(|&i| self.skeleton.at(i).is_none()).map(|i| i as u64)
    }

    /// Hole at −1 and a letter at 0.
    pub fn is_starred(&self) -> bool {
        self.skeleton.at(-1).is_none() && self.skeleton.at(0).is_some()
    }

    /// Largest `r` with the skeleton defined on `(-r, r)`.
    pub fn defined_radius(&self) -> u64 {
        let p = self.period as i64;
        (0..=p).find(|&r| self.skeleton.at(r).is_none() || self.skeleton.at(-r).is_none()).unwrap_or(p) as u64
    }

    fn block_word_set(&self) -> HashSet<Vec<Word>> {
        self.block_words.iter().map(|w| w.iter().map(|&i| self.blocks[i as usize].clone()).collect()).collect()
    }
}

impl fmt::Display for PartClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "shift {} skeleton {} blocks {} block-words {}{}",
            self.shift,
            self.skeleton,
            self.blocks.len(),
            self.block_words.len(),
            if self.exact { "" } else { " (partial)" }
        )
    }
}

/// The canonical point of the parts machinery at `depth`: anchored in the
/// top level word at a level boundary near its middle.
pub fn canonical_point(d: &DirectiveSequence, depth: usize, half_width: u64) -> Result<(Anchor, PointWindow)> {
    if depth == 0 || !d.has_levels(depth) {
        return Err(Error::DepthOutOfRange { requested: depth, available: d.explicit_depth() });
    }
    let top = depth - 1;
    let len = d.level_lengths(top)?[0];
    let unit = if top == 0 { 1 } else { d.scale_divisors(top)?[top - 1].max(1) };
    let mut offset = (len / 2) / unit * unit;
    if offset == 0 {
        offset = len / 2;
    }
    let anchor = Anchor::from_top(top, 0, offset);
    let x = point_window(d, &anchor, half_width.min(len))?;
    Ok((anchor, x))
}

fn skeleton_from_certs(x: &PointWindow, p: u64) -> SkeletonWindow {
    let pattern = (0..p as i64).map(|r| x.per_letter(r, p)).collect();
    SkeletonWindow::new(pattern, 0).expect("positive period")
}

/// Deepest level `≤ top` whose words fit the block-source limit.
fn block_source_level(d: &DirectiveSequence, p: u64, top: usize) -> Result<usize> {
    let scale = d.scale_divisors(top + 1)?;
    let first = scale.iter().position(|&s| s % p == 0).ok_or_else(|| {
        Error::Params(format!("period {p} divides no scale divisor {scale:?} within depth {}", top + 1))
    })?;
    let mut best = first;
    for n in first..=top {
        let total: u64 = d.level_lengths(n)?.iter().sum();
        if total <= BLOCK_SOURCE_LIMIT {
            best = n;
        }
    }
    Ok(best)
}

struct BlockSource {
    words: Vec<Word>,
    level: usize,
    /// Longest span whose block words are complete.
    exact_span: usize,
}

fn block_source(d: &DirectiveSequence, p: u64, depth: usize) -> Result<BlockSource> {
    let level = block_source_level(d, p, depth - 1)?;
    let words = d.level_words(level)?;
    let exact_span = exact_factor_length(d, level)?;
    Ok(BlockSource { words, level, exact_span })
}

fn class_language(src: &BlockSource, p: usize, residue: usize, block_len: usize) -> (Vec<Word>, Vec<Vec<u32>>, bool) {
    let span = block_len * p;
    let mut raw: BTreeSet<Vec<&[Letter]>> = BTreeSet::new();
    for w in &src.words {
        let mut o = residue;
        while o + span <= w.len() {
            raw.insert((0..block_len).map(|j| &w[o + j * p..o + (j + 1) * p]).collect());
            o += p;
        }
    }
    let blocks: BTreeSet<&[Letter]> = raw.iter().flatten().copied().collect();
    let blocks: Vec<Word> = blocks.into_iter().map(Word::from).collect();
    let index: HashMap<&[Letter], u32> = blocks.iter().enumerate().map(|(i, b)| (b.letters(), i as u32)).collect();
    let words = raw.into_iter().map(|bw| bw.into_iter().map(|b| index[b]).collect()).collect();
    let exact = span <= src.exact_span;
    (blocks, words, exact)
}

/// `Parts(X, p)` with block words of `DEFAULT_BLOCK_LEN` blocks.
pub fn parts(d: &DirectiveSequence, p: u64, depth: usize) -> Result<Vec<PartClass>> {
    parts_with(d, p, depth, DEFAULT_BLOCK_LEN)
}

/// The distinct shifts `S^k x`, `0 ≤ k < p`, of the canonical point's
/// `p`-skeleton, one class per skeleton.
pub fn parts_with(d: &DirectiveSequence, p: u64, depth: usize, block_len: usize) -> Result<Vec<PartClass>> {
    shift_classes(d, p, depth, block_len, true)
}

/// The classes `closure{S^{k+jp} x}` for every `0 ≤ k < p`; with `dedup`
/// only the first shift of each skeleton is kept.
pub fn shift_classes(d: &DirectiveSequence, p: u64, depth: usize, block_len: usize, dedup: bool) -> Result<Vec<PartClass>> {
    if p == 0 || block_len == 0 {
        return Err(Error::Params("period and block length must be positive".into()));
    }
    if p > MAX_CLASS_PERIOD {
        return Err(Error::Params(format!("period {p} exceeds the class limit {MAX_CLASS_PERIOD}")));
    }
    let (anchor, x) = canonical_point(d, depth, CLASS_WINDOW)?;
    let src = block_source(d, p, depth)?;
    let tower = anchor.tower(d)?;
    let cut = -(tower[src.level].1 as i64);
    let skel = skeleton_from_certs(&x, p);
    let mut seen: HashSet<Vec<Option<Letter>>> = HashSet::new();
    let mut out = Vec::new();
    for k in 0..p {
        let s = skel.shifted(k as i64).normalized();
        if !seen.insert(s.pattern().to_vec()) && dedup {
            continue;
        }
        let residue = (k as i64 - cut).rem_euclid(p as i64) as u64;
        let (blocks, block_words, exact) = class_language(&src, p as usize, residue as usize, block_len);
        out.push(PartClass {
            period: p,
            shift: k,
            residue,
            skeleton: s,
            blocks,
            block_words,
            block_len,
            exact,
        });
    }
    Ok(out)
}

/// `χ(X, p)` together with `ℓ(X, p)`.
#[derive(Debug, Clone)]
pub struct Chi {
    pub period: u64,
    pub ell: u64,
    pub classes: Vec<PartClass>,
}

pub fn chi(d: &DirectiveSequence, p: u64, depth: usize) -> Result<Chi> {
    chi_with(d, p, depth, DEFAULT_BLOCK_LEN)
}

pub fn chi_with(d: &DirectiveSequence, p: u64, depth: usize, block_len: usize) -> Result<Chi> {
    let all = parts_with(d, p, depth, block_len)?;
    chi_of_parts(&all)
}

/// Parts_*, their maximal length ℓ, and the maximizers shifted by ⌊ℓ/2⌋.
pub fn chi_of_parts(all: &[PartClass]) -> Result<Chi> {
    let starred: Vec<&PartClass> = all.iter().filter(|w| w.is_starred()).collect();
    let ell = starred.iter().filter_map(|w| w.length()).max().ok_or(Error::NoQualifyingClass)?;
    let period = all[0].period;
    let half = ell / 2;
    let classes = starred
        .into_iter()
        .filter(|w| w.length() == Some(ell))
        .map(|w| {
            let target = w.skeleton.shifted(half as i64).normalized();
            all.iter().find(|c| c.skeleton == target).cloned().expect("shifted class is a part")
        })
        .collect();
    Ok(Chi { period, ell, classes })
}

// ---------------------------------------------------------------------------
// Block permutations and E_p

/// A bijection between finite sets of `p`-blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPermutation {
    period: u64,
    map: BTreeMap<Word, Word>,
}

impl BlockPermutation {
    pub fn new(period: u64, pairs: impl IntoIterator<Item = (Word, Word)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        let mut images = HashSet::new();
        for (a, b) in pairs {
            if a.len() as u64 != period || b.len() as u64 != period {
                return Err(Error::Params(format!("blocks must have length {period}")));
            }
            if !images.insert(b.clone()) {
                return Err(Error::Params(format!("block {b} is hit twice")));
            }
            if map.insert(a.clone(), b).is_some() {
                return Err(Error::Params(format!("block {a} mapped twice")));
            }
        }
        Ok(BlockPermutation { period, map })
    }

    pub fn identity(period: u64, blocks: &[Word]) -> Result<Self> {
        BlockPermutation::new(period, blocks.iter().map(|b| (b.clone(), b.clone())))
    }

    /// A uniformly random injection of `blocks` into `A^p`, `|A| = k`.
    pub fn random(rng: &mut impl Rng, period: u64, blocks: &[Word], k: u32) -> Result<Self> {
        let total = (k as u64).checked_pow(period as u32).filter(|&t| t <= 1 << 16).ok_or(Error::Params(
            "alphabet too large for random block permutations".into(),
        ))?;
        let mut all: Vec<Word> = (0..total)
            .map(|mut c| {
                let mut w = vec![0; period as usize];
                for x in w.iter_mut().rev() {
                    *x = (c % k as u64) as Letter;
                    c /= k as u64;
                }
                Word::new(w)
            })
            .collect();
        if blocks.len() > all.len() {
            return Err(Error::Params("more blocks than words of length p".into()));
        }
        all.shuffle(rng);
        BlockPermutation::new(period, blocks.iter().cloned().zip(all))
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&Word, &Word)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, b: &[Letter]) -> Option<&Word> {
        self.map.get(&Word::from(b))
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().all(|(a, b)| a == b)
    }

    pub fn inverse(&self) -> BlockPermutation {
        BlockPermutation { period: self.period, map: self.map.iter().map(|(a, b)| (b.clone(), a.clone())).collect() }
    }

    /// `φ̂` on a word made of whole blocks.
    pub fn apply_word(&self, w: &[Letter]) -> Result<Word> {
        let p = self.period as usize;
        if w.len() % p != 0 {
            return Err(Error::Params(format!("word length {} is not a multiple of {p}", w.len())));
        }
        let mut out = Vec::with_capacity(w.len());
        for b in w.chunks(p) {
            out.extend_from_slice(self.get(b).ok_or_else(|| Error::Params(format!("block {} not in domain", Word::from(b))))?);
        }
        Ok(Word::new(out))
    }
}

impl fmt::Display for BlockPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.map.iter().map(|(a, b)| format!("{a}->{b}")).collect();
        write!(f, "p={} {{{}}}", self.period, parts.join(", "))
    }
}

/// `φ̂(x)` with blocks at `phase + jp`, restricted to whole blocks, with
/// certificates transported where a whole block is certified.
pub fn apply_block_permutation(x: &PointWindow, phase: i64, phi: &BlockPermutation) -> Result<PointWindow> {
    let p = phi.period as i64;
    let first = phase + (x.start() - phase).div_euclid(p) * p;
    let a = if first < x.start() { first + p } else { first };
    let nblocks = (x.end() - a) / p;
    if a > 0 || a + nblocks * p <= 0 {
        return Err(Error::WindowTooNarrow { needed: 2 * p as u64, available: x.len() as u64 });
    }
    let b = a + nblocks * p;
    let out = phi.apply_word(x.slice(a, b).expect("inside window"))?;
    let mut certs = Vec::new();
    for c in x.cert_levels() {
        if c.period as i64 % p != 0 {
            continue;
        }
        let per = c.period as usize;
        let sigma = (phase - c.cut).rem_euclid(p) as usize;
        let mut table = vec![None; per];
        for j in 0..per / p as usize {
            let r0 = sigma + j * p as usize;
            let blk: Option<Vec<Letter>> = (0..p as usize).map(|e| c.table[(r0 + e) % per]).collect();
            if let Some(img) = blk.and_then(|blk| phi.get(&blk).cloned()) {
                for (e, &l) in img.iter().enumerate() {
                    table[(r0 + e) % per] = Some(l);
                }
            }
        }
        certs.push(CertLevel::new(c.period, c.cut, table));
    }
    PointWindow::from_parts(a, out, certs)
}

/// Smallest level `n` whose word lengths are all divisible by `p`.
fn divisible_level(d: &DirectiveSequence, p: u64) -> Result<usize> {
    for n in 0..64 {
        if !d.has_levels(n + 2) {
            break;
        }
        if d.level_lengths(n)?.iter().all(|&l| l % p == 0) {
            return Ok(n);
        }
    }
    Err(Error::Params(format!("no level has all word lengths divisible by {p}")))
}

/// The distinct `p`-blocks of the level words of the least level whose
/// lengths are multiples of `p`.
pub fn level_blocks(d: &DirectiveSequence, p: u64) -> Result<Vec<Word>> {
    let n0 = divisible_level(d, p)?;
    let blocks: BTreeSet<Word> =
        d.level_words(n0)?.iter().flat_map(|w| w.chunks(p as usize).map(Word::from).collect::<Vec<_>>()).collect();
    Ok(blocks.into_iter().collect())
}

/// `φ̂(X)`: the sequence whose level-`k` words are `φ̂` of the level
/// `(n0 + k)` words, `n0` the least level with lengths divisible by `p`.
pub fn recode_blockwise(d: &DirectiveSequence, phi: &BlockPermutation) -> Result<DirectiveSequence> {
    let p = phi.period();
    let n0 = divisible_level(d, p)?;
    let images = d.level_words(n0)?.iter().map(|w| phi.apply_word(w)).collect::<Result<Vec<_>>>()?;
    let bottom = Morphism::new(d.alphabet(n0 + 1)?, d.alphabet(0)?, images)?;
    d.shifted_from(n0 + 1)?.prepend(bottom)
}

const SEARCH_NODE_LIMIT: u64 = 2_000_000;
const VERIFY_SPAN: usize = 512;

fn block_signatures(c: &PartClass) -> Vec<Vec<usize>> {
    let mut sig = vec![vec![0usize; c.block_len]; c.blocks.len()];
    for w in &c.block_words {
        for (j, &b) in w.iter().enumerate() {
            sig[b as usize][j] += 1;
        }
    }
    sig
}

enum Search {
    Found(Vec<u32>),
    Exhausted,
    Aborted,
}

struct Searcher<'a> {
    cands: Vec<Vec<u32>>,
    by_max: Vec<Vec<&'a Vec<u32>>>,
    zset: HashSet<&'a [u32]>,
    assign: Vec<Option<u32>>,
    used: Vec<bool>,
    nodes: u64,
}

impl Searcher<'_> {
    /// `Some(true)` once `accept` takes a complete bijection, `None` when
    /// the node budget runs out.
    fn rec(&mut self, i: usize, accept: &mut dyn FnMut(&[u32]) -> bool) -> Option<bool> {
        if i == self.cands.len() {
            let full: Vec<u32> = self.assign.iter().map(|a| a.expect("complete")).collect();
            return Some(accept(&full));
        }
        for c in 0..self.cands[i].len() {
            let j = self.cands[i][c];
            if self.used[j as usize] {
                continue;
            }
            self.nodes += 1;
            if self.nodes > SEARCH_NODE_LIMIT {
                return None;
            }
            self.assign[i] = Some(j);
            let ok = self.by_max[i].iter().all(|bw| {
                let img: Vec<u32> = bw.iter().map(|&b| self.assign[b as usize].expect("assigned")).collect();
                self.zset.contains(img.as_slice())
            });
            if ok {
                self.used[j as usize] = true;
                let r = self.rec(i + 1, accept);
                self.used[j as usize] = false;
                if r != Some(false) {
                    return r;
                }
            }
            self.assign[i] = None;
        }
        Some(false)
    }
}

/// Backtracking over bijections `blocks(W) → blocks(Z)` that carry the
/// block-word set of `W` onto that of `Z`, until `accept` takes one.
fn search_bijection(w: &PartClass, z: &PartClass, accept: &mut dyn FnMut(&[u32]) -> bool) -> Search {
    let n = w.blocks.len();
    let (sw, sz) = (block_signatures(w), block_signatures(z));
    let cands = (0..n)
        .map(|i| {
            let mut c: Vec<u32> = (0..z.blocks.len() as u32).filter(|&j| sz[j as usize] == sw[i]).collect();
            // try the same block first so that W vs W yields the identity
            c.sort_by_key(|&j| z.blocks[j as usize] != w.blocks[i]);
            c
        })
        .collect();
    // words of W grouped by the largest block index they use
    let mut by_max: Vec<Vec<&Vec<u32>>> = vec![Vec::new(); n];
    for bw in &w.block_words {
        by_max[*bw.iter().max().expect("nonempty") as usize].push(bw);
    }
    let mut s = Searcher {
        cands,
        by_max,
        zset: z.block_words.iter().map(|v| v.as_slice()).collect(),
        assign: vec![None; n],
        used: vec![false; z.blocks.len()],
        nodes: 0,
    };
    let mut found = None;
    let r = s.rec(0, &mut |a| {
        if accept(a) {
            found = Some(a.to_vec());
            true
        } else {
            false
        }
    });
    match (r, found) {
        (Some(true), Some(a)) => Search::Found(a),
        (Some(_), _) => Search::Exhausted,
        (None, _) => Search::Aborted,
    }
}

fn to_permutation(w: &PartClass, z: &PartClass, assign: &[u32]) -> BlockPermutation {
    BlockPermutation::new(
        w.period,
        assign.iter().enumerate().map(|(i, &j)| (w.blocks[i].clone(), z.blocks[j as usize].clone())),
    )
    .expect("bijection between blocks of length p")
}

/// Whether some block bijection `φ` carries `W`'s aligned block language
/// onto `Z`'s. Refuted only when both languages are exact.
pub fn ep_equivalent(w: &PartClass, z: &PartClass) -> Result<Verdict<BlockPermutation>> {
    if w.period != z.period || w.block_len != z.block_len {
        return Err(Error::Params("classes must share period and block length".into()));
    }
    let exact = w.exact && z.exact;
    let depth = w.block_len;
    let mismatch = |what: &str, a: usize, b: usize| {
        let msg = format!("{what}: {a} vs {b}");
        if exact {
            Verdict::refuted(depth, msg)
        } else {
            Verdict::unknown(depth, format!("{msg} on partial languages"))
        }
    };
    if w.blocks.len() != z.blocks.len() {
        return Ok(mismatch("distinct blocks", w.blocks.len(), z.blocks.len()));
    }
    if w.block_words.len() != z.block_words.len() {
        return Ok(mismatch("distinct block words", w.block_words.len(), z.block_words.len()));
    }
    match search_bijection(w, z, &mut |_| true) {
        Search::Found(assign) => {
            let phi = to_permutation(w, z, &assign);
            let ev = format!("block words of {} blocks correspond", w.block_len);
            Ok(Verdict::witnessed(phi, depth, ev))
        }
        Search::Exhausted if exact => {
            Ok(Verdict::refuted(depth, "no block bijection carries the exact block language across"))
        }
        Search::Exhausted => Ok(Verdict::unknown(depth, "no bijection on partial languages")),
        Search::Aborted => Ok(Verdict::unknown(depth, "bijection search limit reached")),
    }
}

/// Pairs `(i, j)` of equivalent classes with their block maps.
pub type ClassMatching = Vec<(usize, usize, BlockPermutation)>;

/// Equality of the sets of `E_p`-classes, through pairwise tests.
pub fn ep_fin_equivalent(cx: &[PartClass], cy: &[PartClass]) -> Result<Verdict<ClassMatching>> {
    let depth = cx.first().or(cy.first()).map_or(0, |c| c.block_len);
    if cx.is_empty() || cy.is_empty() {
        return Ok(if cx.len() == cy.len() {
            Verdict::witnessed(Vec::new(), depth, "both empty")
        } else {
            Verdict::refuted(depth, "one side is empty")
        });
    }
    let mut table: Vec<Vec<Verdict<BlockPermutation>>> = Vec::new();
    for w in cx {
        table.push(cy.iter().map(|z| ep_equivalent(w, z)).collect::<Result<_>>()?);
    }
    for (i, row) in table.iter().enumerate() {
        if row.iter().all(|v| v.is_refuted()) {
            return Ok(Verdict::refuted(depth, format!("left class {i} matches no right class")));
        }
    }
    for j in 0..cy.len() {
        if table.iter().all(|row| row[j].is_refuted()) {
            return Ok(Verdict::refuted(depth, format!("right class {j} matches no left class")));
        }
    }
    let left_ok = table.iter().all(|row| row.iter().any(|v| v.is_witnessed()));
    let right_ok = (0..cy.len()).all(|j| table.iter().any(|row| row[j].is_witnessed()));
    if left_ok && right_ok {
        let mut matching = Vec::new();
        for (i, row) in table.into_iter().enumerate() {
            for (j, v) in row.into_iter().enumerate() {
                if let Some(phi) = v.witness {
                    matching.push((i, j, phi));
                }
            }
        }
        Ok(Verdict::witnessed(matching, depth, "every class has an equivalent on the other side"))
    } else {
        Ok(Verdict::unknown(depth, "some class has only undetermined matches"))
    }
}

// ---------------------------------------------------------------------------
// Conjugacy

fn prime_factors(mut n: u64) -> BTreeSet<u64> {
    let mut out = BTreeSet::new();
    let mut f = 2;
    while f * f <= n {
        while n % f == 0 {
            out.insert(f);
            n /= f;
        }
        f += 1;
    }
    if n > 1 {
        out.insert(n);
    }
    out
}

fn scale_primes(s: &[u64]) -> BTreeSet<u64> {
    s.iter().flat_map(|&d| prime_factors(d)).collect()
}

/// Scale-invariant obstruction: a prime dividing some `d_n` of one side and
/// none of the other's within depth.
fn scale_obstruction(sx: &[u64], sy: &[u64]) -> Option<String> {
    let (px, py) = (scale_primes(sx), scale_primes(sy));
    if let Some(q) = px.difference(&py).next() {
        return Some(format!("prime {q} divides a scale divisor of the left system {sx:?} but none of the right {sy:?}"));
    }
    if let Some(q) = py.difference(&px).next() {
        return Some(format!("prime {q} divides a scale divisor of the right system {sy:?} but none of the left {sx:?}"));
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DklWitness {
    pub p: u64,
    pub x_shift: u64,
    pub y_shift: u64,
    /// Phases of the two classes relative to level boundaries.
    pub x_residue: u64,
    pub y_residue: u64,
    pub phi: BlockPermutation,
}

impl fmt::Display for DklWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p={} x-shift={} y-shift={} phi={}", self.p, self.x_shift, self.y_shift, self.phi)
    }
}

/// Block words used in the search; witnesses are re-verified with four
/// times as many.
const DKL_BLOCK_LEN: usize = 2;

fn maps_onto(phi: &BlockPermutation, cw: &PartClass, cz: &PartClass) -> bool {
    let zset = cz.block_word_set();
    let mut mapped = HashSet::new();
    for bw in cw.block_word_set() {
        match bw.iter().map(|b| phi.get(b).cloned()).collect::<Option<Vec<Word>>>() {
            Some(img) if zset.contains(&img) => {
                mapped.insert(img);
            }
            _ => return false,
        }
    }
    mapped.len() == zset.len()
}

/// Checks a witness with block words of `block_len` blocks, matching
/// classes by residue so that `depth` may differ from the search depth.
pub fn verify_dkl(
    dx: &DirectiveSequence,
    dy: &DirectiveSequence,
    w: &DklWitness,
    block_len: usize,
    depth: usize,
) -> Result<bool> {
    let px = shift_classes(dx, w.p, depth, block_len, false)?;
    let py = shift_classes(dy, w.p, depth, block_len, false)?;
    let find = |cs: &[PartClass], r: u64| cs.iter().find(|c| c.residue == r).cloned();
    match (find(&px, w.x_residue), find(&py, w.y_residue)) {
        (Some(cw), Some(cz)) => Ok(maps_onto(&w.phi, &cw, &cz)),
        _ => Ok(false),
    }
}

/// Depth for re-verification: two levels deeper when both systems have
/// them, which lengthens the complete block languages.
fn verification_depth(dx: &DirectiveSequence, dy: &DirectiveSequence, depth: usize) -> usize {
    let extra = depth + 2;
    if dx.has_levels(extra + 1) && dy.has_levels(extra + 1) {
        extra
    } else {
        depth
    }
}

/// Block-word length for re-verifying a DKL candidate: the longest with
/// complete class languages on both sides, up to `VERIFY_SPAN` letters.
/// `None` when that is under four times the search length.
fn verification_block_len(dx: &DirectiveSequence, dy: &DirectiveSequence, p: u64, depth: usize) -> Result<Option<usize>> {
    let exact_len = |d| -> Result<usize> {
        let src = block_source(d, p, depth)?;
        Ok(src.exact_span / p as usize)
    };
    let cap = (VERIFY_SPAN / p as usize).max(4 * DKL_BLOCK_LEN);
    let len = exact_len(dx)?.min(exact_len(dy)?).min(cap);
    Ok((len >= 4 * DKL_BLOCK_LEN).then_some(len))
}

/// Searches `p ≤ max_p` (default: lcm of the first three scale divisors of
/// the left system) and a block bijection carrying an aligned class of the
/// left canonical point onto a class of the right system. Candidates found
/// with short block words are kept only if they survive the much longer
/// complete block words of `verification_block_len`; periods where those are
/// unavailable are skipped.
pub fn dkl_conjugacy_test(
    dx: &DirectiveSequence,
    dy: &DirectiveSequence,
    max_p: Option<u64>,
    depth: usize,
) -> Result<Verdict<DklWitness>> {
    let sx = dx.scale_divisors(depth)?;
    let sy = dy.scale_divisors(depth)?;
    if let Some(ev) = scale_obstruction(&sx, &sy) {
        return Ok(Verdict::refuted(depth, ev));
    }
    let max_p = max_p.unwrap_or_else(|| sx.iter().take(3).fold(1, |a, &b| lcm(a, b.max(1))));
    let reachable = |s: &[u64], p: u64| s.iter().any(|&d| d % p == 0);
    let vdepth = verification_depth(dx, dy, depth);
    let mut skipped = Vec::new();
    for p in (1..=max_p).filter(|&p| reachable(&sx, p) && reachable(&sy, p)) {
        let vlen = match verification_block_len(dx, dy, p, vdepth) {
            Ok(Some(v)) => v,
            _ => {
                skipped.push(p);
                continue;
            }
        };
        let (px, py, lx, ly) = match (
            shift_classes(dx, p, depth, DKL_BLOCK_LEN, false),
            shift_classes(dy, p, depth, DKL_BLOCK_LEN, false),
            shift_classes(dx, p, vdepth, vlen, false),
            shift_classes(dy, p, vdepth, vlen, false),
        ) {
            (Ok(a), Ok(b), Ok(c), Ok(d)) => (a, b, c, d),
            _ => continue,
        };
        let by_residue = |cs: &[PartClass]| -> HashMap<u64, usize> {
            cs.iter().enumerate().map(|(i, c)| (c.residue, i)).collect()
        };
        let (rx, ry) = (by_residue(&lx), by_residue(&ly));
        let mut order: Vec<&PartClass> = px.iter().collect();
        order.sort_by_key(|c| (std::cmp::Reverse(c.defined_radius()), c.shift));
        for w in order {
            let Some(&iw) = rx.get(&w.residue) else { continue };
            for z in &py {
                if w.blocks.len() != z.blocks.len() || w.block_words.len() != z.block_words.len() {
                    continue;
                }
                let Some(&iz) = ry.get(&z.residue) else { continue };
                let (lw, lz) = (&lx[iw], &ly[iz]);
                let mut accept = |a: &[u32]| maps_onto(&to_permutation(w, z, a), lw, lz);
                if let Search::Found(a) = search_bijection(w, z, &mut accept) {
                    let phi = to_permutation(w, z, &a);
                    let cand = DklWitness {
                        p,
                        x_shift: w.shift,
                        y_shift: z.shift,
                        x_residue: w.residue,
                        y_residue: z.residue,
                        phi,
                    };
                    let ev = format!(
                        "re-verified with block words of {vlen} blocks ({} letters) at depth {vdepth}",
                        vlen as u64 * p
                    );
                    return Ok(Verdict::witnessed(cand, depth, ev));
                }
            }
        }
    }
    let mut ev = format!("no block bijection found for p ≤ {max_p}");
    if !skipped.is_empty() {
        ev.push_str(&format!("; periods {skipped:?} lack long enough complete block words"));
    }
    Ok(Verdict::unknown(depth, ev))
}

/// Smallest `2R+1` such that `x[i-R, i+R]` determines `y(i)` and
/// `y[i-R, i+R]` determines `x(i)` on the common window.
pub fn conjugacy_width(x: &PointWindow, y: &PointWindow, max_radius: usize) -> Option<usize> {
    let (a, b) = (x.start().max(y.start()), x.end().min(y.end()));
    let functional = |src: &PointWindow, dst: &PointWindow, r: i64| {
        let mut seen: HashMap<&[Letter], Letter> = HashMap::new();
        (a + r..b - r).all(|i| {
            let key = src.slice(i - r, i + r + 1).expect("inside");
            let val = dst.get(i).expect("inside");
            *seen.entry(key).or_insert(val) == val
        })
    };
    (0..=max_radius as i64)
        .take_while(|&r| b - a > 2 * r + 1)
        .find(|&r| functional(x, y, r) && functional(y, x, r))
        .map(|r| 2 * r as usize + 1)
}

/// One checked level of the χ criterion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChiLevel {
    pub p: u64,
    pub ell_x: u64,
    pub ell_y: u64,
    pub status: Status,
    pub evidence: String,
    /// Both sides had exact block languages; only such levels decide.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChiReport {
    pub levels: Vec<ChiLevel>,
    /// Index into `levels` from which every exact level passes.
    pub stable_from: Option<usize>,
}

impl fmt::Display for ChiReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, l) in self.levels.iter().enumerate() {
            let tag = if l.exact { "" } else { " [partial data]" };
            writeln!(f, "level {n}: p={} ell=({}, {}) {} ({}){tag}", l.p, l.ell_x, l.ell_y, l.status, l.evidence)?;
        }
        match self.stable_from {
            Some(n) => writeln!(f, "stable from level {n}"),
            None => writeln!(f, "not stable at the checked levels"),
        }
    }
}

/// The periods `lcm(d^X_n, d^Y_n)` (deduplicated) that divide a scale
/// divisor of both systems within depth.
pub fn common_periods(dx: &DirectiveSequence, dy: &DirectiveSequence, depth: usize) -> Result<Vec<u64>> {
    let sx = dx.scale_divisors(depth)?;
    let sy = dy.scale_divisors(depth)?;
    let mut out: Vec<u64> = Vec::new();
    for (a, b) in sx.iter().zip(&sy) {
        let p = lcm(*a, *b);
        if p > 1 && !out.contains(&p) && sx.iter().any(|d| d % p == 0) && sy.iter().any(|d| d % p == 0) {
            out.push(p);
        }
    }
    Ok(out)
}

/// `χ(X, p_n) E^fin χ(Y, p_n)` over the checkable common periods.
pub fn chi_conjugacy_criterion(dx: &DirectiveSequence, dy: &DirectiveSequence, depth: usize) -> Result<Verdict<ChiReport>> {
    if let Some(ev) = scale_obstruction(&dx.scale_divisors(depth)?, &dy.scale_divisors(depth)?) {
        return Ok(Verdict::refuted(depth, ev));
    }
    let mut levels = Vec::new();
    for p in common_periods(dx, dy, depth)? {
        let (cx, cy) = match (chi(dx, p, depth), chi(dy, p, depth)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => continue,
        };
        let v = ep_fin_equivalent(&cx.classes, &cy.classes)?;
        let exact = cx.classes.iter().chain(&cy.classes).all(|c| c.exact);
        levels.push(ChiLevel { p, ell_x: cx.ell, ell_y: cy.ell, status: v.status, evidence: v.evidence, exact });
    }
    let stable_from =
        (0..levels.len()).find(|&n| levels[n..].iter().all(|l| !l.exact || l.status == Status::Witnessed));
    let last = levels.iter().rev().find(|l| l.exact).map(|l| l.status);
    let report = ChiReport { levels, stable_from };
    Ok(match (last, stable_from) {
        (None, _) => Verdict::unknown(depth, format!("no common period with exact data\n{report}")),
        (Some(Status::Refuted), _) => Verdict::refuted(depth, format!("deepest exact level fails\n{report}")),
        (_, Some(n)) => Verdict::witnessed(report, depth, format!("all exact levels from {n} pass")),
        _ => Verdict::unknown(depth, format!("deepest exact level is undetermined\n{report}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{p4, period_doubling, three_adic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(s: &str) -> Word {
        Word::new(s.bytes().map(|b| (b - b'0') as Letter).collect())
    }

    fn pd_point() -> PointWindow {
        canonical_point(&period_doubling(), 6, 512).unwrap().1
    }

    fn recoded_p4(p: u64, seed: u64) -> (DirectiveSequence, BlockPermutation) {
        let d = p4();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = BlockPermutation::random(&mut rng, p, &level_blocks(&d, p).unwrap(), 2).unwrap();
        (recode_blockwise(&d, &phi).unwrap(), phi)
    }

    #[test]
    fn period_doubling_cuts() {
        let x = pd_point();
        let cuts = find_strong_rank2_cuts(&x, 2).unwrap();
        assert_eq!(cuts.len(), 2);
        assert_eq!(cuts[0].blocks, vec![w("00"), w("01")]);
        assert!(cuts[0].is_certified());
        assert_eq!(cuts[1].offset, 1);
        assert_eq!(cuts[1].blocks, vec![w("00"), w("10")]);
        assert!(!cuts[1].is_certified());
    }

    #[test]
    fn p4_level_cut() {
        let (_, x) = canonical_point(&p4(), 5, 512).unwrap();
        let cuts = find_strong_rank2_cuts(&x, 4).unwrap();
        let c = cuts.iter().find(|c| c.offset == 0).expect("cut at 0");
        assert_eq!(c.blocks, vec![w("0010"), w("0110")]);
        assert!(c.is_certified());
    }

    #[test]
    fn periodic_window_has_no_cut() {
        let x = PointWindow::from_parts(-8, w("0110011001100110"), Vec::new()).unwrap();
        assert!(find_strong_rank2_cuts(&x, 2).unwrap().len() == 2);
        assert!(find_strong_rank2_cuts(&x, 4).unwrap().is_empty());
        assert!(find_strong_rank2_cuts(&x, 8).is_err());
    }

    // Brute force: two blocks at a phase means exactly two distinct slices.
    #[test]
    fn cuts_agree_with_direct_count() {
        let x = pd_point();
        for p in [2u64, 3, 4, 8] {
            let cuts = find_strong_rank2_cuts(&x, p).unwrap();
            for t in 0..p as i64 {
                let mut set = BTreeSet::new();
                let mut a = t;
                while a - p as i64 >= x.start() {
                    a -= p as i64;
                }
                while a + p as i64 <= x.end() {
                    set.insert(x.slice(a, a + p as i64).unwrap().to_vec());
                    a += p as i64;
                }
                assert_eq!(set.len() == 2, cuts.iter().any(|c| c.offset == t as u64), "p={p} t={t}");
            }
        }
    }

    #[test]
    fn coincidence() {
        let x = pd_point();
        let c2 = find_strong_rank2_cuts(&x, 2).unwrap();
        let c4 = find_strong_rank2_cuts(&x, 4).unwrap();
        let top = c4.iter().find(|c| c.offset == 0).unwrap();
        let v = cuts_coincide(&x, &c2[0], top).unwrap();
        assert!(v.is_witnessed());
        let v = cuts_coincide(&x, &c2[1], top).unwrap();
        assert_eq!(v.witness, Some(CoincidenceWitness { k: -1, interval: (0, 1) }));
        assert!(!coincidence_violation(&x, &c2[1], top).unwrap());
        assert!(cuts_coincide(&x, top, &c2[0]).is_err());
    }

    #[test]
    fn p4_strong_rank2_certificates() {
        let d = p4();
        let s = sts2_witness(&d, 1, 0, 5).unwrap().unwrap();
        assert_eq!((s.q, s.level), (4, 1));
        assert_eq!((s.u.clone(), s.v.clone()), (w("0010"), w("0110")));
        // independent check of unique decomposition at length 2r and 4r
        for len in [2 * s.r, 4 * s.r] {
            let lang = language(&d, len as usize, 6).unwrap();
            assert!(lang.exact);
            assert!(lang.words.iter().all(|x| is_uniquely_built(x, &[s.u.clone(), s.v.clone()])));
        }
        let s = sts2_witness(&d, 4, 4, 6).unwrap().unwrap();
        assert_eq!(s.q, 16);
        assert!(sts2_witness(&d, 3, 0, 5).unwrap().is_none());
    }

    #[test]
    fn period_doubling_parts() {
        let d = period_doubling();
        let ps = parts(&d, 2, 6).unwrap();
        let skel: Vec<String> = ps.iter().map(|c| c.skeleton.render()).collect();
        assert_eq!(skel, vec!["0_", "_0"]);
        assert_eq!(parts(&d, 1, 6).unwrap().len(), 1);
        assert_eq!(parts(&d, 8, 8).unwrap().len(), 8);
        let c = chi(&d, 2, 6).unwrap();
        assert_eq!(c.ell, 1);
        assert_eq!(c.classes.len(), 1);
    }

    #[test]
    fn p4_chi_lengths() {
        let d = p4();
        assert_eq!(parts(&d, 4, 6).unwrap().len(), 4);
        assert_eq!(chi(&d, 4, 6).unwrap().ell, 3);
        assert_eq!(chi(&d, 16, 6).unwrap().ell, 15);
        assert!(matches!(chi(&d, 2, 6), Err(Error::NoQualifyingClass)));
    }

    #[test]
    fn ep_identity_and_recoding() {
        let d = p4();
        let ps = shift_classes(&d, 4, 6, 3, false).unwrap();
        for c in &ps {
            let v = ep_equivalent(c, c).unwrap();
            assert!(v.witness.unwrap().is_identity());
        }
        let (y, phi) = recoded_p4(4, 3);
        let qs = shift_classes(&y, 4, 6, 3, false).unwrap();
        let v = ep_equivalent(&ps[0], &qs[0]).unwrap();
        assert!(v.is_witnessed());
        let found = v.witness.unwrap();
        for (a, b) in found.pairs() {
            assert_eq!(phi.get(a), Some(b));
        }
    }

    #[test]
    fn ep_refutes_different_languages() {
        let a = shift_classes(&p4(), 4, 6, 3, false).unwrap();
        let b = shift_classes(&period_doubling(), 4, 8, 3, false).unwrap();
        assert!(a[0].exact && b[0].exact);
        assert!(ep_equivalent(&a[0], &b[0]).unwrap().is_refuted());
        assert!(ep_fin_equivalent(&a, &b).unwrap().is_refuted());
        assert!(ep_fin_equivalent(&a, &a).unwrap().is_witnessed());
        assert!(ep_equivalent(&a[0], &shift_classes(&p4(), 16, 6, 3, false).unwrap()[0]).is_err());
    }

    #[test]
    fn block_permutation_basics() {
        let phi = BlockPermutation::new(2, [(w("00"), w("10")), (w("01"), w("01")), (w("10"), w("11"))]).unwrap();
        assert_eq!(phi.apply_word(&w("0100")).unwrap(), w("0110"));
        assert_eq!(phi.inverse().apply_word(&w("0110")).unwrap(), w("0100"));
        assert!(phi.apply_word(&w("011")).is_err());
        assert!(BlockPermutation::new(2, [(w("00"), w("10")), (w("01"), w("10"))]).is_err());
        assert_eq!(phi.to_string(), "p=2 {00->10, 01->01, 10->11}");
    }

    #[test]
    fn recoding_matches_pointwise_application() {
        let d = p4();
        for (p, seed) in [(2u64, 1u64), (4, 2)] {
            let (y, phi) = recoded_p4(p, seed);
            let n0 = divisible_level(&d, p).unwrap();
            for k in 0..3 {
                let lhs = y.level_words(k).unwrap();
                let rhs: Vec<Word> =
                    d.level_words(n0 + k).unwrap().iter().map(|x| phi.apply_word(x).unwrap()).collect();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn conjugacy_width_of_block_maps() {
        let (_, x) = canonical_point(&p4(), 5, 512).unwrap();
        let (_, phi) = recoded_p4(2, 1);
        let y = apply_block_permutation(&x, 0, &phi).unwrap();
        let width = conjugacy_width(&x, &y, 8).unwrap();
        assert!(width <= 2 * 2 + 1, "width {width}");
        assert_eq!(conjugacy_width(&x, &x, 3), Some(1));
    }

    #[test]
    fn dkl_self_and_recoded() {
        let d = p4();
        assert!(dkl_conjugacy_test(&d, &d, None, 5).unwrap().is_witnessed());
        let (y, _) = recoded_p4(2, 1);
        let v = dkl_conjugacy_test(&d, &y, None, 5).unwrap();
        let wit = v.witness.expect("witnessed");
        assert!(verify_dkl(&d, &y, &wit, 8, 5).unwrap());
        assert!(dkl_conjugacy_test(&d, &three_adic(), None, 5).unwrap().is_refuted());
    }

    #[test]
    fn chi_criterion() {
        let d = p4();
        let (y, _) = recoded_p4(2, 1);
        let v = chi_conjugacy_criterion(&d, &y, 7).unwrap();
        let report = v.witness.expect("witnessed");
        assert!(report.levels.iter().filter(|l| l.exact).count() >= 4);
        assert_eq!(report.stable_from, Some(0));
        for l in &report.levels {
            assert!(l.ell_x.abs_diff(l.ell_y) < 2 * 2, "{l:?}");
        }
        assert!(chi_conjugacy_criterion(&d, &three_adic(), 5).unwrap().is_refuted());
        assert_eq!(common_periods(&d, &d, 4).unwrap(), vec![4, 16, 64]);
    }
}
