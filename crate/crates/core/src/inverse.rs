//! Reversal, nice symmetries and the inverse-conjugacy test.
//!
//! Positions of the point window are absolute (`x(0)` is position 0).
//! For the finite form, `w = u[r-q, r+q+1)` is indexed from 0, so `w[j]`
//! stands for `x(j - q)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};
use crate::rank2::{canonical_point, BlockPermutation};
use crate::sadic::{language, DirectiveSequence, PerStatus, PointWindow};
use crate::skeletons::SkeletonTower;
use crate::verdict::Verdict;
use crate::words::{buildings, reverse, Letter, Word};

pub use crate::skeletons::filling;

/// Positions where every word of `w` carries the same letter.
pub fn coincidence_set(w: &[Word]) -> Result<BTreeSet<usize>> {
    let Some(first) = w.first() else { return Ok(BTreeSet::new()) };
    if w.iter().any(|x| x.len() != first.len()) {
        return Err(Error::UnequalLengths);
    }
    Ok((0..first.len()).filter(|&i| w.iter().all(|x| x[i] == first[i])).collect())
}

/// `coinc(W^k)` by enumerating all `|W|^k` concatenations.
pub fn coincidence_set_power(w: &[Word], k: u32) -> Result<BTreeSet<usize>> {
    let total = w.len().checked_pow(k).filter(|&t| t <= 1 << 16).ok_or(Error::Overflow("W^k"))?;
    let words: Vec<Word> = (0..total)
        .map(|mut c| {
            let mut out = Word::empty();
            for _ in 0..k {
                out.extend_from_slice(&w[c % w.len()]);
                c /= w.len();
            }
            out
        })
        .collect();
    coincidence_set(&words)
}

/// `θ(w) = w^⊥` with `θ` given as a letter table.
pub fn theta_palindrome(w: &[Letter], theta: &[Letter]) -> bool {
    let n = w.len();
    (0..n).all(|i| theta.get(w[i] as usize) == Some(&w[n - 1 - i]))
}

/// The sequence with every image reversed; generates the reverse subshift.
pub fn reverse_system(d: &DirectiveSequence) -> Result<DirectiveSequence> {
    d.map_levels(|_, m| m.reversed())
}

// ---------------------------------------------------------------------------
// Nice symmetries on a point window

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetryWitness {
    pub p: u64,
    pub q: u64,
    pub m: u64,
}

impl fmt::Display for SymmetryWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p={}, q={}) m={}", self.p, self.q, self.m)
    }
}

/// Three-valued truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tri {
    T,
    F,
    U,
}

impl Tri {
    fn and(self, o: Tri) -> Tri {
        match (self, o) {
            (Tri::F, _) | (_, Tri::F) => Tri::F,
            (Tri::T, Tri::T) => Tri::T,
            _ => Tri::U,
        }
    }

    fn iff(self, o: Tri) -> Tri {
        match (self, o) {
            (Tri::U, _) | (_, Tri::U) => Tri::U,
            (a, b) if a == b => Tri::T,
            _ => Tri::F,
        }
    }

    fn all(it: impl IntoIterator<Item = Tri>) -> Tri {
        let mut acc = Tri::T;
        for t in it {
            acc = acc.and(t);
            if acc == Tri::F {
                break;
            }
        }
        acc
    }
}

/// The data both forms of the definition share, on indices `[0, 2q+1)`
/// where index `j` stands for position `j - q`. The mirror of block `k`
/// under `m` is `[q + m - (k+1)p, q + m - kp)`.
struct SymmetryData<'a> {
    p: i64,
    q: i64,
    /// index of block 0: `q` on a window (block `k` at `x[kp, (k+1)p)`),
    /// `0` in the finite form (block `k` at `w[kp, (k+1)p)`)
    own_base: i64,
    /// periodic-part status of index `j`, `j` in `[0, 2q+1)`
    status: Vec<Tri>,
    letters: &'a [Letter],
}

impl SymmetryData<'_> {
    fn inside(&self, a: i64, b: i64) -> Tri {
        Tri::all((a..b).map(|j| self.status[j as usize]))
    }

    fn block(&self, a: i64) -> &[Letter] {
        &self.letters[a as usize..(a + self.p) as usize]
    }

    fn fully_determined(&self) -> bool {
        self.status.iter().all(|&t| t != Tri::U)
    }

    /// Conditions (a) and (b) for one `m`.
    fn check(&self, m: i64) -> Tri {
        let (p, q) = (self.p, self.q);
        let blocks = q / p;
        let own = |k: i64| (self.own_base + k * p, self.own_base + (k + 1) * p);
        let mirror = |k: i64| (q + m - (k + 1) * p, q + m - k * p);
        let mut acc = Tri::T;
        let mut inside_own = Vec::with_capacity(blocks as usize);
        let mut inside_mirror = Vec::with_capacity(blocks as usize);
        for k in 0..blocks {
            let (a, b) = own(k);
            let (c, e) = mirror(k);
            let (s, t) = (self.inside(a, b), self.inside(c, e));
            inside_own.push(s);
            inside_mirror.push(t);
            acc = acc.and(s.iff(t));
            if acc == Tri::F {
                return Tri::F;
            }
        }
        for k in 0..blocks {
            for k2 in k + 1..blocks {
                let premise = inside_own[k as usize].and(inside_own[k2 as usize]);
                if premise == Tri::F {
                    continue;
                }
                let lhs = self.block(own(k).0) == self.block(own(k2).0);
                let rhs = self.block(mirror(k).0) == self.block(mirror(k2).0);
                if lhs != rhs {
                    acc = acc.and(if premise == Tri::T { Tri::F } else { Tri::U });
                    if acc == Tri::F {
                        return Tri::F;
                    }
                }
            }
        }
        acc
    }

    /// Every `1 < m ≤ q+1` for which the conditions hold.
    fn scan(&self) -> Vec<u64> {
        (2..=self.q + 1).filter(|&m| self.check(m) == Tri::T).map(|m| m as u64).collect()
    }
}

fn check_periods(p: u64, q: u64) -> Result<()> {
    if p == 0 || q <= p || q % p != 0 {
        return Err(Error::Params(format!("need p | q and p < q, got p={p}, q={q}")));
    }
    Ok(())
}

fn window_data(x: &PointWindow, p: u64, q: u64) -> Result<SymmetryData<'_>> {
    check_periods(p, q)?;
    let qi = q as i64;
    if x.start() > -qi || x.end() < qi + 1 {
        return Err(Error::WindowTooNarrow { needed: 2 * q + 1, available: x.len() as u64 });
    }
    if !x.cert_levels().iter().any(|c| c.period % q == 0) {
        return Err(Error::Params(format!("no certificate level has a period divisible by {q}")));
    }
    let status = (-qi..=qi)
        .map(|i| match x.per_status(i, q) {
            PerStatus::Confirmed => Tri::T,
            PerStatus::Hole { .. } => Tri::F,
            PerStatus::Unknown => Tri::U,
        })
        .collect();
    let letters = x.slice(-qi, qi + 1).expect("window covers [-q, q]");
    Ok(SymmetryData { p: p as i64, q: qi, own_base: qi, status, letters })
}

/// Least `1 < m ≤ q+1` satisfying both reflection conditions on `[-q, q]`.
/// Refuted only when every status in `[-q, q]` is settled by certificates
/// or explicit hole witnesses and no `m` works.
pub fn has_nice_symmetries(x: &PointWindow, p: u64, q: u64) -> Result<Verdict<SymmetryWitness>> {
    let data = window_data(x, p, q)?;
    let good = data.scan();
    let depth = x.cert_levels().len();
    Ok(match good.first() {
        Some(&m) => Verdict::witnessed(SymmetryWitness { p, q, m }, depth, format!("m={m} satisfies (a) and (b)")),
        None if data.fully_determined() => Verdict::refuted(depth, format!("no 1 < m ≤ {} works", q + 1)),
        None => Verdict::unknown(depth, "some positions of [-q, q] have undetermined periodic status"),
    })
}

/// Whether `m` satisfies both conditions; `None` when undetermined.
pub fn nice_symmetry_at(x: &PointWindow, p: u64, q: u64, m: u64) -> Result<Option<bool>> {
    let data = window_data(x, p, q)?;
    if m < 2 || m > q + 1 {
        return Err(Error::Params(format!("need 1 < m ≤ {}, got {m}", q + 1)));
    }
    Ok(match data.check(m as i64) {
        Tri::T => Some(true),
        Tri::F => Some(false),
        Tri::U => None,
    })
}

/// Every `m` passing on the window, with whether the window settles every
/// status.
fn valid_ms(x: &PointWindow, p: u64, q: u64) -> Result<(Vec<u64>, bool)> {
    let data = window_data(x, p, q)?;
    let good = data.scan();
    Ok((good, data.fully_determined()))
}

// ---------------------------------------------------------------------------
// Finite form

/// `u` of length `2r` uniquely built from a two-block set `W` of length
/// `q`, with `a` the start of a block in `(r - q, r]` and
/// `Q = [coinc(W³) ∩ [r-a, r-a+2q+1)] - (r-a)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteSymmetryInstance {
    pub u: Word,
    pub w_set: Vec<Word>,
    pub a: usize,
    pub q_set: BTreeSet<usize>,
}

impl FiniteSymmetryInstance {
    /// Builds the instance from `u` and `W`, reading `a` off the unique
    /// building.
    pub fn new(u: Word, w_set: Vec<Word>) -> Result<Self> {
        let q = w_set.first().map(|w| w.len()).ok_or(Error::Params("empty block set".into()))?;
        if u.len() % 2 != 0 {
            return Err(Error::Params("u must have even length".into()));
        }
        let r = u.len() / 2;
        if r <= 3 * q {
            return Err(Error::Params(format!("need r > 3q, got r={r}, q={q}")));
        }
        let bs = buildings(&u, &w_set);
        let [b] = &bs[..] else {
            return Err(Error::Params(format!("u has {} buildings from W, expected one", bs.len())));
        };
        let a = b
            .block_starts()
            .into_iter()
            .find(|&s| s + q > r && s <= r)
            .ok_or(Error::Params("no block starts in (r-q, r]".into()))?;
        let triple = coincidence_set_power(&w_set, 3)?;
        let off = r - a;
        let q_set = (0..2 * q + 1).filter(|j| triple.contains(&(j + off))).collect();
        let inst = FiniteSymmetryInstance { u, w_set, a, q_set };
        inst.validate()?;
        Ok(inst)
    }

    pub fn r(&self) -> usize {
        self.u.len() / 2
    }

    pub fn q(&self) -> usize {
        self.w_set.first().map_or(0, |w| w.len())
    }

    /// `w = u[r-q, r+q+1)`.
    pub fn w(&self) -> &[Letter] {
        let (r, q) = (self.r(), self.q());
        &self.u[r - q..r + q + 1]
    }

    fn validate(&self) -> Result<()> {
        let (r, q) = (self.r(), self.q());
        if self.w_set.len() != 2 || self.w_set[0] == self.w_set[1] {
            return Err(Error::Params("W must have exactly two distinct words".into()));
        }
        if self.w_set[1].len() != q {
            return Err(Error::UnequalLengths);
        }
        if r <= 3 * q || self.a + q <= r || self.a > r {
            return Err(Error::Params(format!("need r > 3q and r-q < a ≤ r, got r={r}, q={q}, a={}", self.a)));
        }
        if self.q_set.iter().any(|&j| j > 2 * q) {
            return Err(Error::Params("Q must lie in [0, 2q]".into()));
        }
        Ok(())
    }
}

/// The finite reflection conditions on `w` with `Q`; fully two-sided.
pub fn finite_nice_symmetries(inst: &FiniteSymmetryInstance, p: u64) -> Result<Verdict<SymmetryWitness>> {
    inst.validate()?;
    let q = inst.q() as u64;
    check_periods(p, q)?;
    let status = (0..2 * q as usize + 1).map(|j| if inst.q_set.contains(&j) { Tri::T } else { Tri::F }).collect();
    let data = SymmetryData { p: p as i64, q: q as i64, own_base: 0, status, letters: inst.w() };
    let good = data.scan();
    Ok(match good.first() {
        Some(&m) => Verdict::witnessed(SymmetryWitness { p, q, m }, 1, format!("m={m} satisfies (a) and (b)")),
        None => Verdict::refuted(1, format!("no 1 < m ≤ {} works", q + 1)),
    })
}

/// The instance read off a point window: `u = x[-r, r)` with the level
/// words of length `q` as `W`.
pub fn instance_from_window(x: &PointWindow, w_set: Vec<Word>, r: usize) -> Result<FiniteSymmetryInstance> {
    let r = r as i64;
    let u = x.slice(-r, r).ok_or(Error::WindowTooNarrow { needed: 2 * r as u64, available: x.len() as u64 })?;
    FiniteSymmetryInstance::new(Word::from(u), w_set)
}

// ---------------------------------------------------------------------------
// The inverse test

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InverseWitness {
    pub p: u64,
    /// One witness per checked `q`, coherent: `q_j | m_{j+1} - m_j`.
    pub chain: Vec<SymmetryWitness>,
    /// The induced block map into the reverse system.
    pub phi: BlockPermutation,
    /// Length of the central window of `φ̂(x)` found in the reverse
    /// system's language.
    pub verified_length: usize,
}

impl fmt::Display for InverseWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p={}", self.p)?;
        for w in &self.chain {
            writeln!(f, "  q={} m={}", w.q, w.m)?;
        }
        writeln!(f, "  phi: {}", self.phi)?;
        write!(f, "  verified on a central window of length {}", self.verified_length)
    }
}

const INVERSE_WINDOW: u64 = 1 << 14;
const VERIFY_LENGTH: i64 = 256;

/// The first three scale divisors and their quotients, ascending.
pub fn inverse_candidates(scale: &[u64]) -> Vec<u64> {
    let first: Vec<u64> = scale.iter().copied().take(3).collect();
    let mut out: BTreeSet<u64> = first.iter().copied().filter(|&d| d > 0).collect();
    for i in 0..first.len() {
        for j in i + 1..first.len() {
            if first[i] > 0 && first[j] % first[i] == 0 {
                out.insert(first[j] / first[i]);
            }
        }
    }
    out.into_iter().collect()
}

/// A coherent chain through the per-level valid `m` sets, least first.
fn coherent_chain(levels: &[(u64, Vec<u64>)]) -> Option<Vec<u64>> {
    let n = levels.len();
    let mut good: Vec<Vec<u64>> = vec![Vec::new(); n];
    good[n - 1] = levels[n - 1].1.clone();
    for j in (0..n - 1).rev() {
        let q = levels[j].0 as i64;
        good[j] = levels[j]
            .1
            .iter()
            .copied()
            .filter(|&m| good[j + 1].iter().any(|&m2| (m2 as i64 - m as i64).rem_euclid(q) == 0))
            .collect();
    }
    let mut chain = vec![*good[0].first()?];
    for j in 1..n {
        let q = levels[j - 1].0 as i64;
        let prev = chain[j - 1] as i64;
        chain.push(*good[j].iter().find(|&&m| (m as i64 - prev).rem_euclid(q) == 0)?);
    }
    Some(chain)
}

enum Candidate {
    Witnessed(InverseWitness),
    Refuted(String),
    Unknown(String),
}

fn build_phi(x: &PointWindow, p: u64, chain: &[SymmetryWitness]) -> std::result::Result<BlockPermutation, String> {
    let pi = p as i64;
    let top = chain.last().expect("nonempty chain").q as i64;
    let mut map: BTreeMap<Word, Word> = BTreeMap::new();
    for i in (-top / pi)..(top / pi) {
        let (a, b) = (i * pi, (i + 1) * pi);
        let Some(level) = chain.iter().find(|w| (a..b).all(|j| x.per_confirmed(j, w.q))) else { continue };
        let m = level.m as i64;
        let (Some(src), Some(img)) = (x.slice(a, b), x.slice(m - b, m - a)) else { continue };
        let img = reverse(img);
        match map.get(&Word::from(src)) {
            Some(prev) if *prev != img => {
                return Err(format!("block {} has two images {} and {}", Word::from(src), prev, img))
            }
            _ => {
                map.insert(Word::from(src), img);
            }
        }
    }
    BlockPermutation::new(p, map).map_err(|e| e.to_string())
}

fn verify_phi(
    x: &PointWindow,
    rev: &DirectiveSequence,
    phi: &BlockPermutation,
    depth: usize,
) -> std::result::Result<usize, String> {
    let p = phi.period() as i64;
    let mut c = 0;
    while 2 * (c + 1) * p <= VERIFY_LENGTH.max(2 * p) {
        let ok = [-(c + 1), c].iter().all(|&i| x.slice(i * p, (i + 1) * p).and_then(|b| phi.get(b)).is_some());
        if !ok {
            break;
        }
        c += 1;
    }
    // the longest central window with an exact reverse language
    while c > 0 {
        let y = phi.apply_word(x.slice(-c * p, c * p).expect("inside")).map_err(|e| e.to_string())?;
        match language(rev, y.len(), depth + 1) {
            Ok(l) if l.exact => {
                return if l.contains(&y) {
                    Ok(y.len())
                } else {
                    Err(format!("φ̂(x)[-{0}, {0}) is not in the reverse language", c * p))
                };
            }
            Ok(_) | Err(Error::LanguageTooLong { .. }) => c -= 1,
            Err(e) => return Err(e.to_string()),
        }
    }
    Err("no central window of whole blocks with an exact reverse language".into())
}

fn try_candidate(x: &PointWindow, rev: &DirectiveSequence, scale: &[u64], p: u64, depth: usize) -> Result<Candidate> {
    let mut qs: Vec<u64> = scale.iter().copied().filter(|&q| q > p && q % p == 0).collect();
    qs.dedup();
    let mut levels = Vec::new();
    for q in qs {
        let (good, full) = match valid_ms(x, p, q) {
            Ok(v) => v,
            Err(Error::WindowTooNarrow { .. }) | Err(Error::Params(_)) => continue,
            Err(e) => return Err(e),
        };
        if good.is_empty() && full {
            return Ok(Candidate::Refuted(format!("p={p}: no m works at q={q} on fully determined data")));
        }
        levels.push((q, good));
    }
    if levels.is_empty() {
        return Ok(Candidate::Unknown(format!("p={p}: no checkable q")));
    }
    if let Some((q, _)) = levels.iter().find(|(_, g)| g.is_empty()) {
        return Ok(Candidate::Unknown(format!("p={p}: q={q} undetermined")));
    }
    let Some(ms) = coherent_chain(&levels) else {
        return Ok(Candidate::Unknown(format!("p={p}: no coherent chain of m's")));
    };
    let chain: Vec<SymmetryWitness> = levels.iter().zip(ms).map(|(&(q, _), m)| SymmetryWitness { p, q, m }).collect();
    let phi = match build_phi(x, p, &chain) {
        Ok(phi) => phi,
        Err(e) => return Ok(Candidate::Unknown(format!("p={p}: {e}"))),
    };
    match verify_phi(x, rev, &phi, depth) {
        Ok(len) => Ok(Candidate::Witnessed(InverseWitness { p, chain, phi, verified_length: len })),
        Err(e) => Ok(Candidate::Unknown(format!("p={p}: {e}"))),
    }
}

/// Searches a candidate `p` with nice symmetries at every checkable `q`
/// and a coherent chain of `m`'s; the induced block map is checked against
/// the reverse system's language. The periods `q` range over
/// `d_0, ..., d_{depth-1}`; the point is anchored one level higher, so
/// `depth + 1` levels are needed. Witnessed verdicts hold up to depth.
pub fn inverse_conjugacy_test(d: &DirectiveSequence, depth: usize) -> Result<Verdict<InverseWitness>> {
    if depth == 0 || !d.has_levels(depth + 1) {
        return Err(Error::DepthOutOfRange { requested: depth + 1, available: d.explicit_depth() });
    }
    let scale = d.scale_divisors(depth)?;
    let top = d.level_lengths(depth)?[0];
    let (_, x) = canonical_point(d, depth + 1, INVERSE_WINDOW.min(top))?;
    let rev = reverse_system(d)?;
    let mut notes = Vec::new();
    let mut all_refuted = true;
    for p in inverse_candidates(&scale) {
        match try_candidate(&x, &rev, &scale, p, depth)? {
            Candidate::Witnessed(w) => {
                notes.push(format!("p={p}: coherent chain found"));
                return Ok(Verdict::witnessed(w, depth, notes.join("; ")));
            }
            Candidate::Refuted(n) => notes.push(n),
            Candidate::Unknown(n) => {
                all_refuted = false;
                notes.push(n);
            }
        }
    }
    let ev = notes.join("; ");
    Ok(if all_refuted && !notes.is_empty() {
        Verdict::refuted(depth, format!("{ev} (candidates: first three scale divisors and quotients)"))
    } else {
        Verdict::unknown(depth, ev)
    })
}

// ---------------------------------------------------------------------------
// Single-hole towers

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaWitness {
    pub n: usize,
    pub theta: Vec<Letter>,
}

fn permutations(k: usize) -> Vec<Vec<Letter>> {
    let mut out = Vec::new();
    let mut cur: Vec<Letter> = (0..k as Letter).collect();
    fn rec(i: usize, cur: &mut Vec<Letter>, out: &mut Vec<Vec<Letter>>) {
        if i == cur.len() {
            out.push(cur.clone());
            return;
        }
        for j in i..cur.len() {
            cur.swap(i, j);
            rec(i + 1, cur, out);
            cur.swap(i, j);
        }
    }
    rec(0, &mut cur, &mut out);
    out.sort();
    out
}

/// Letter permutations making `(n, m)`-fillings θ-palindromes for every
/// `m` in `n+1..=top`.
pub fn palindromic_thetas(t: &SkeletonTower, n: usize, top: usize) -> Result<Vec<Vec<Letter>>> {
    let alpha = (0..t.depth()).flat_map(|l| t.pattern(l).iter().flatten().copied()).max().unwrap_or(0) as usize + 1;
    if alpha > 8 {
        return Err(Error::Params(format!("alphabet of {alpha} letters is too large for the θ search")));
    }
    let fills = (n + 1..=top).map(|m| t.filling(n, m)).collect::<Result<Vec<_>>>()?;
    Ok(permutations(alpha).into_iter().filter(|th| fills.iter().all(|f| theta_palindrome(f, th))).collect())
}

/// Some `n ≤ max_n` and `θ` with every `(n, m)`-filling, `n < m ≤ top`,
/// a θ-palindrome; refuted when no such `n` exists.
pub fn theta_criterion(t: &SkeletonTower, max_n: usize, top: usize) -> Result<Verdict<ThetaWitness>> {
    if top == 0 || top >= t.depth() {
        return Err(Error::DepthOutOfRange { requested: top, available: t.depth().saturating_sub(1) });
    }
    for n in 0..top.min(max_n + 1) {
        if let Some(theta) = palindromic_thetas(t, n, top)?.into_iter().next() {
            return Ok(Verdict::witnessed(ThetaWitness { n, theta }, top, format!("fillings ({n}, m) for m ≤ {top}")));
        }
    }
    let bound = top.min(max_n + 1);
    Ok(Verdict::refuted(top, format!("no n < {bound} and θ make the fillings up to level {top} θ-palindromes")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{p4, period_doubling};
    use crate::rank2::dkl_conjugacy_test;
    use crate::sadic::CertLevel;
    use crate::skeletons::{random_single_hole_tower, single_hole_to_rank2, single_hole_tower};
    use crate::verdict::Status;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn words(ws: &[&str]) -> Vec<Word> {
        ws.iter().map(|w| Word::from_digits(w)).collect()
    }

    fn fill(s: &str) -> Vec<Option<Letter>> {
        s.chars().map(|c| c.to_digit(10)).collect()
    }

    fn palindromic_tower() -> SkeletonTower {
        let fills: Vec<_> = ["01_0", "_010", "1_10", "_101", "_010", "1_10"].iter().map(|s| fill(s)).collect();
        single_hole_tower(&[4, 16, 64, 256, 1024, 4096], &fills).unwrap()
    }

    fn mutated_tower() -> SkeletonTower {
        let fills: Vec<_> = ["01_0", "_010", "1_10", "_100", "_010", "1_10"].iter().map(|s| fill(s)).collect();
        single_hole_tower(&[4, 16, 64, 256, 1024, 4096], &fills).unwrap()
    }

    /// A window on `[-q, q]` whose letters and certificate are given by a
    /// residue pattern mod `q`; unconfirmed residues get distinct letters on
    /// the two sides of 0 so each carries a hole witness.
    fn synthetic(q: u64, confirmed: &[u64]) -> PointWindow {
        let qi = q as i64;
        let table: Vec<Option<Letter>> = (0..q).map(|r| confirmed.contains(&r).then_some(0)).collect();
        let letters = (-qi..=qi)
            .map(|i| match table[i.rem_euclid(qi) as usize] {
                Some(a) => a,
                None if i < 0 => 1,
                None => 2,
            })
            .collect();
        PointWindow::from_parts(-qi, Word::new(letters), vec![CertLevel::new(q, 0, table)]).unwrap()
    }

    #[test]
    fn coincidences() {
        assert_eq!(coincidence_set(&words(&["0010", "0110"])).unwrap(), BTreeSet::from([0, 2, 3]));
        assert_eq!(coincidence_set(&words(&["0110"])).unwrap(), BTreeSet::from([0, 1, 2, 3]));
        assert!(coincidence_set(&words(&["01", "011"])).is_err());
        let w = words(&["0010", "0110"]);
        let triples: Vec<Word> = (0..8)
            .map(|c: usize| {
                let mut out = Word::empty();
                for k in 0..3 {
                    out.extend_from_slice(&w[(c >> k) & 1]);
                }
                out
            })
            .collect();
        let brute: BTreeSet<usize> = (0..12).filter(|&i| triples.iter().all(|t| t[i] == triples[0][i])).collect();
        assert_eq!(coincidence_set_power(&w, 3).unwrap(), brute);
        assert_eq!(brute, BTreeSet::from([0, 2, 3, 4, 6, 7, 8, 10, 11]));
    }

    #[test]
    fn theta_palindromes() {
        assert!(theta_palindrome(&Word::from_digits("010"), &[0, 1]));
        assert!(theta_palindrome(&Word::from_digits("01"), &[1, 0]));
        assert!(!theta_palindrome(&Word::from_digits("00"), &[1, 0]));
        assert!(theta_palindrome(&[], &[1, 0]));
    }

    #[test]
    fn even_positions_window() {
        // x(-2..=2) = 0 1 0 2 0, even positions confirmed 2-periodic
        let table = vec![Some(0), None];
        let x = PointWindow::from_parts(-2, Word::from_digits("01020"), vec![CertLevel::new(2, 0, table)]).unwrap();
        let v = has_nice_symmetries(&x, 1, 2).unwrap();
        assert_eq!(v.witness, Some(SymmetryWitness { p: 1, q: 2, m: 3 }));
        assert_eq!(nice_symmetry_at(&x, 1, 2, 2).unwrap(), Some(false));
    }

    #[test]
    fn constant_window() {
        let x = synthetic(2, &[0, 1]);
        assert_eq!(has_nice_symmetries(&x, 1, 2).unwrap().witness.map(|w| w.m), Some(2));
    }

    #[test]
    fn asymmetric_window_is_refuted() {
        // {0, 1, 3} is mapped onto itself by no reflection of Z/6
        let x = synthetic(6, &[0, 1, 3]);
        for m in 2..=7 {
            assert_eq!(nice_symmetry_at(&x, 1, 6, m).unwrap(), Some(false), "m={m}");
        }
        assert_eq!(has_nice_symmetries(&x, 1, 6).unwrap().status, Status::Refuted);
        // the symmetric set {0, 1} passes
        assert!(has_nice_symmetries(&synthetic(6, &[0, 1]), 1, 6).unwrap().witness.is_some());
    }

    #[test]
    fn undetermined_window_is_unknown() {
        // residue 5 carries no second occurrence, hence no hole witness
        let x = synthetic(6, &[0, 1, 3]).restrict(-6, 6).unwrap();
        let v = has_nice_symmetries(&x, 1, 6);
        assert!(matches!(v, Err(Error::WindowTooNarrow { .. })));
        let full = synthetic(6, &[0, 1, 3]);
        let mut letters = full.letters().to_vec();
        letters[11] = letters[5];
        let x = PointWindow::from_parts(-6, Word::new(letters), full.cert_levels().to_vec()).unwrap();
        assert_eq!(x.per_status(5, 6), PerStatus::Unknown);
        assert_ne!(has_nice_symmetries(&x, 1, 6).unwrap().status, Status::Refuted);
    }

    #[test]
    fn invalid_periods() {
        let x = synthetic(6, &[0]);
        assert!(has_nice_symmetries(&x, 4, 6).is_err());
        assert!(has_nice_symmetries(&x, 6, 6).is_err());
        assert!(has_nice_symmetries(&x, 0, 6).is_err());
    }

    fn p4_instance() -> (PointWindow, FiniteSymmetryInstance) {
        let d = p4();
        let (_, x) = canonical_point(&d, 5, 256).unwrap();
        let inst = instance_from_window(&x, d.level_words(2).unwrap(), 64).unwrap();
        (x, inst)
    }

    #[test]
    fn finite_form_matches_window() {
        let (x, inst) = p4_instance();
        assert_eq!(inst.q(), 16);
        // Q agrees with the certified 16-periodic part of [-16, 16]
        let from_certs: BTreeSet<usize> = (0..33).filter(|&j| x.per_confirmed(j as i64 - 16, 16)).collect();
        assert_eq!(inst.q_set, from_certs);
        for p in [1, 2, 4, 8] {
            let a = finite_nice_symmetries(&inst, p).unwrap();
            let b = has_nice_symmetries(&x, p, 16).unwrap();
            assert_eq!(a.status, b.status, "p={p}");
            assert_eq!(a.witness, b.witness, "p={p}");
        }
    }

    #[test]
    fn finite_form_singleton_padding() {
        // W = {0000, 0001} with Q padded to every position
        let w_set = words(&["0000", "0001"]);
        let u = Word::from_digits(&"0000".repeat(8));
        let inst = FiniteSymmetryInstance { u, w_set, a: 16, q_set: (0..9).collect() };
        assert_eq!(finite_nice_symmetries(&inst, 1).unwrap().witness.map(|w| w.m), Some(2));
        assert_eq!(finite_nice_symmetries(&inst, 2).unwrap().witness.map(|w| w.m), Some(2));
    }

    #[test]
    fn finite_form_mutation_flips() {
        let d = single_hole_to_rank2(&palindromic_tower(), 5).unwrap();
        let (_, x) = canonical_point(&d, 5, 256).unwrap();
        let w_set = d.level_words(1).unwrap();
        assert_eq!(w_set.iter().map(|w| w.len()).collect::<Vec<_>>(), vec![16, 16]);
        let inst = instance_from_window(&x, w_set, 64).unwrap();
        assert_eq!(finite_nice_symmetries(&inst, 4).unwrap().status, has_nice_symmetries(&x, 4, 16).unwrap().status);
        let base = finite_nice_symmetries(&inst, 4).unwrap().status;
        assert_eq!(base, Status::Witnessed);
        let flipped = inst.q_set.iter().any(|&j| {
            let mut q_set = inst.q_set.clone();
            q_set.remove(&j);
            let m = FiniteSymmetryInstance { q_set, ..inst.clone() };
            finite_nice_symmetries(&m, 4).unwrap().status == Status::Refuted
        });
        assert!(flipped);
    }

    #[test]
    fn malformed_instances() {
        let w_set = words(&["0010", "0110"]);
        assert!(FiniteSymmetryInstance::new(Word::from_digits("00100110"), w_set.clone()).is_err());
        assert!(FiniteSymmetryInstance::new(Word::from_digits(&"0010".repeat(8))[..31].into(), w_set.clone()).is_err());
        let (_, inst) = p4_instance();
        let bad = FiniteSymmetryInstance { q_set: BTreeSet::from([40]), ..inst.clone() };
        assert!(finite_nice_symmetries(&bad, 4).is_err());
        let bad = FiniteSymmetryInstance { a: 0, ..inst };
        assert!(finite_nice_symmetries(&bad, 4).is_err());
    }

    #[test]
    fn filling_lengths() {
        let t = palindromic_tower();
        for n in 0..5 {
            for m in n + 1..6 {
                let len = (t.periods()[m] / t.periods()[n] - 1) as usize;
                assert_eq!(filling(&t, n, m).unwrap().len(), len);
            }
        }
    }

    #[test]
    fn reversal() {
        let d = p4();
        let r = reverse_system(&d).unwrap();
        let rr = reverse_system(&r).unwrap();
        for n in 0..4 {
            assert_eq!(*rr.level(n).unwrap(), *d.level(n).unwrap());
        }
        for len in [1, 5, 17] {
            let mut rev: Vec<Word> = language(&d, len, 4).unwrap().words.iter().map(|w| reverse(w)).collect();
            rev.sort();
            assert_eq!(language(&r, len, 4).unwrap().words, rev);
        }
        // P4 images 0010, 0110: proper on the right only
        let (f, g) = (d.level(0).unwrap().flags(), r.level(0).unwrap().flags());
        assert_eq!(f.constant_length, g.constant_length);
        assert_eq!(f.coincidences.iter().map(|&i| 3 - i).rev().collect::<Vec<_>>(), g.coincidences);
        let pd = period_doubling();
        assert!(!pd.level(0).unwrap().flags().proper);
    }

    #[test]
    fn double_reversal_is_identity_conjugate() {
        let d = p4();
        let rr = reverse_system(&reverse_system(&d).unwrap()).unwrap();
        let v = dkl_conjugacy_test(&d, &rr, Some(1), 5).unwrap();
        let w = v.witness.expect("identity");
        assert!(w.phi.is_identity());
    }

    #[test]
    fn candidates() {
        assert_eq!(inverse_candidates(&[4, 16, 64, 256]), vec![4, 16, 64]);
        assert_eq!(inverse_candidates(&[2, 12, 60]), vec![2, 5, 6, 12, 30, 60]);
        assert_eq!(inverse_candidates(&[1, 4]), vec![1, 4]);
    }

    #[test]
    fn chains_are_coherent() {
        let levels = vec![(4, vec![2, 3]), (16, vec![7, 11]), (64, vec![27])];
        assert_eq!(coherent_chain(&levels), Some(vec![3, 11, 27]));
        assert_eq!(coherent_chain(&[(4, vec![2]), (16, vec![5])]), None);
    }

    #[test]
    fn palindromic_tower_is_witnessed() {
        let t = palindromic_tower();
        let start = std::time::Instant::now();
        let d = single_hole_to_rank2(&t, 5).unwrap();
        let v = inverse_conjugacy_test(&d, 4).unwrap();
        assert!(start.elapsed().as_secs_f64() < 5.0);
        let w = v.witness.expect("witnessed");
        assert_eq!(w.p, 4);
        assert_eq!(w.chain.iter().map(|c| c.q).collect::<Vec<_>>(), vec![16, 64, 256]);
        for pair in w.chain.windows(2) {
            assert_eq!((pair[1].m as i64 - pair[0].m as i64).rem_euclid(pair[0].q as i64), 0);
        }
        assert!(w.verified_length >= 64);
        let th = theta_criterion(&t, 2, 4).unwrap();
        assert_eq!(th.witness, Some(ThetaWitness { n: 0, theta: vec![0, 1] }));
    }

    #[test]
    fn mutated_tower_is_refuted() {
        let t = mutated_tower();
        let start = std::time::Instant::now();
        let d = single_hole_to_rank2(&t, 5).unwrap();
        let v = inverse_conjugacy_test(&d, 4).unwrap();
        assert!(start.elapsed().as_secs_f64() < 5.0);
        assert_eq!(v.status, Status::Refuted, "{}", v.evidence);
        assert_eq!(theta_criterion(&t, 2, 4).unwrap().status, Status::Refuted);
        for th in permutations(2) {
            assert!(!theta_palindrome(&filling(&t, 0, 4).unwrap(), &th));
        }
    }

    #[test]
    fn inverse_implies_dkl_against_reverse() {
        let t = palindromic_tower();
        for (d, depth) in [(single_hole_to_rank2(&t, 5).unwrap(), 4), (period_doubling(), 5)] {
            let v = inverse_conjugacy_test(&d, depth).unwrap();
            assert_eq!(v.status, Status::Witnessed);
            let k = dkl_conjugacy_test(&d, &reverse_system(&d).unwrap(), None, depth).unwrap();
            assert_eq!(k.status, Status::Witnessed, "{}", k.evidence);
        }
        // P4 is refuted, and the DKL search against its reverse finds nothing
        let d = p4();
        assert_eq!(inverse_conjugacy_test(&d, 5).unwrap().status, Status::Refuted);
        assert_ne!(dkl_conjugacy_test(&d, &reverse_system(&d).unwrap(), None, 5).unwrap().status, Status::Witnessed);
    }

    #[test]
    fn theta_and_inverse_agree_on_random_towers() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut seen, mut witnessed) = (0, 0);
        for _ in 0..200 {
            let t = random_single_hole_tower(&mut rng, 7, 3, 3, 5).unwrap();
            let th = theta_criterion(&t, 2, 4).unwrap();
            let is_w = th.witness.is_some();
            if (is_w && witnessed == 5) || (!is_w && seen - witnessed == 5) {
                continue;
            }
            let d = single_hole_to_rank2(&t, 6).unwrap();
            let v = inverse_conjugacy_test(&d, 5).unwrap();
            assert_eq!(v.witness.is_some(), is_w, "{:?}: {}", t.periods(), v.evidence);
            if !is_w {
                assert_eq!(v.status, Status::Refuted);
            }
            seen += 1;
            witnessed += is_w as usize;
            if seen == 10 {
                break;
            }
        }
        assert_eq!((seen, witnessed), (10, 5));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn monotone_transfer(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_single_hole_tower(&mut rng, 5, 2, 2, 4).unwrap();
            let d = single_hole_to_rank2(&t, 4).unwrap();
            let (_, x) = canonical_point(&d, 4, 1 << 12).unwrap();
            let scale = d.scale_divisors(3).unwrap();
            for &p in &scale[..1] {
                for (i, &q0) in scale.iter().enumerate().filter(|&(_, &q)| q > p) {
                    for &q1 in &scale[i + 1..] {
                        let Ok(v) = has_nice_symmetries(&x, p, q1) else { continue };
                        let Some(w) = v.witness else { continue };
                        let m0 = (w.m as i64 - 2).rem_euclid(q0 as i64) as u64 + 2;
                        prop_assert_eq!(nice_symmetry_at(&x, p, q0, m0).unwrap(), Some(true));
                    }
                }
            }
        }
    }
}
