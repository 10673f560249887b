//! Generators for explicit directive sequences and checkers for the finite
//! claims attached to them.
//!
//! Indexing: level-`n` words are `τ_[0,n+1)(a)`. For the counterexample and
//! for P4, `τ_0` is the letter coding `1 ↦ 0, 2 ↦ 1`, so the level-`n` words
//! are the words `w_{n,1}, w_{n,2}` of the recursion.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sadic::{language, DirectiveSequence, Morphism};
use crate::skeletons::AperiodicityWitness;
use crate::words::{occurrences, Alphabet, Letter, Word};

fn alpha12() -> Alphabet {
    Alphabet::new(["1", "2"]).expect("static alphabet")
}

fn coding12() -> Morphism {
    Morphism::new(alpha12(), Alphabet::numeric(2), vec![Word::new(vec![0]), Word::new(vec![1])]).expect("static morphism")
}

fn stationary(levels: Vec<Morphism>, tail: Morphism) -> DirectiveSequence {
    DirectiveSequence::with_tail(levels, Arc::new(move |_| tail.clone())).expect("stationary sequence chains")
}

/// `τ_0: 1 ↦ 0, 2 ↦ 1`, then `σ(1) = 1121, σ(2) = 1221` at every level.
pub fn p4() -> DirectiveSequence {
    let sigma = Morphism::new(alpha12(), alpha12(), vec![Word::new(vec![0, 0, 1, 0]), Word::new(vec![0, 1, 1, 0])])
        .expect("static morphism");
    stationary(vec![coding12(), sigma.clone()], sigma)
}

/// `0 ↦ 01, 1 ↦ 00` at every level.
pub fn period_doubling() -> DirectiveSequence {
    let t = Morphism::from_digit_images(&["01", "00"]).expect("static morphism");
    stationary(vec![t.clone()], t)
}

/// `0 ↦ 010, 1 ↦ 011` at every level; scale divisors `3^{n+1}`.
pub fn three_adic() -> DirectiveSequence {
    let t = Morphism::from_digit_images(&["010", "011"]).expect("static morphism");
    stationary(vec![t.clone()], t)
}

// ---------------------------------------------------------------------------
// The rank-2 counterexample.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterexampleParams {
    /// `m_n` for `n = 0, 1, ...`; levels past the schedule use the default.
    pub m_schedule: Vec<u64>,
    /// Claims are checked for `n ≤ depth`; the sequence carries explicit
    /// levels up to `τ_{depth+1}`.
    pub depth: usize,
}

impl CounterexampleParams {
    pub fn with_default_schedule(depth: usize) -> Self {
        CounterexampleParams { m_schedule: (0..=depth).map(default_m).collect(), depth }
    }
}

/// Lengths of `w_{n,1}, w_{n,2}` in units of `d_n`.
fn unit_lengths(n: usize) -> (u64, u64) {
    if n == 0 {
        (1, 1)
    } else {
        (1, 2)
    }
}

/// Filler lengths (α, β, γ, δ, η, λ) in units of `d_n`, if all nonnegative.
fn filler_lengths(m: u64, (a1, a2): (u64, u64)) -> Option<[u64; 6]> {
    let t = 2 * m;
    Some([
        t.checked_sub(6 * a1 + 4 * a2)?,
        t.checked_sub(4 * a1)?,
        t.checked_sub(2 * a1 + 2 * a2)?,
        t.checked_sub(2 * a1)?,
        t.checked_sub(2 * a2)?,
        t.checked_sub(4 * a1)?,
    ])
}

/// Greedy packing `len = 2a·a1 + 2b·a2` with maximal `a`, as the level
/// word `1^{2a} 2^{2b}`.
fn pack(len: u64, (a1, a2): (u64, u64)) -> Option<Vec<Letter>> {
    let mut a = len / (2 * a1);
    loop {
        let rest = len - 2 * a * a1;
        if rest % (2 * a2) == 0 {
            let b = rest / (2 * a2);
            let mut w = vec![0; 2 * a as usize];
            w.extend(std::iter::repeat(1).take(2 * b as usize));
            return Some(w);
        }
        if a == 0 {
            return None;
        }
        a -= 1;
    }
}

/// Least `m_n` for which all six fillers exist.
pub fn admissibility_floor(n: usize) -> u64 {
    let units = unit_lengths(n);
    (1..)
        .find(|&m| filler_lengths(m, units).is_some_and(|ls| ls.iter().all(|&l| pack(l, units).is_some())))
        .expect("some m is admissible")
}

pub fn default_m(n: usize) -> u64 {
    2 * admissibility_floor(n)
}

/// The morphism building `w_{n+1,·}` from `w_{n,·}`.
fn counterexample_level(n: usize, m: u64) -> Result<Morphism> {
    let units = unit_lengths(n);
    let floor = admissibility_floor(n);
    if m < floor {
        return Err(Error::BelowFloor { level: n, m, floor });
    }
    let ls = filler_lengths(m, units).expect("above floor");
    let f: Vec<Vec<Letter>> = ls.iter().map(|&l| pack(l, units).expect("above floor")).collect();
    let (one, two, onetwo) = (vec![0, 0], vec![1, 1], vec![0, 1]);
    let mut w1 = one.clone();
    for _ in 0..4 {
        w1.extend(&onetwo);
    }
    for part in [&f[0], &one, &f[1], &one] {
        w1.extend(part);
    }
    let mut w2 = [onetwo.clone(), onetwo].concat();
    for part in [&f[2], &one, &f[3], &two, &f[4], &one, &f[5], &one] {
        w2.extend(part);
    }
    Morphism::new(alpha12(), alpha12(), vec![Word::new(w1), Word::new(w2)])
}

pub fn gen_counterexample(params: &CounterexampleParams) -> Result<DirectiveSequence> {
    let m_at = {
        let s = params.m_schedule.clone();
        move |n: usize| s.get(n).copied().unwrap_or_else(|| default_m(n))
    };
    let mut levels = vec![coding12()];
    for n in 0..=params.depth {
        levels.push(counterexample_level(n, m_at(n))?);
    }
    for (n, &m) in params.m_schedule.iter().enumerate().skip(params.depth + 1) {
        counterexample_level(n, m)?;
    }
    // explicit levels were validated; the tail only sees admissible m
    DirectiveSequence::with_tail(
        levels,
        Arc::new(move |k| counterexample_level(k - 1, m_at(k - 1)).expect("admissible tail level")),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CounterexampleReport {
    pub depth: usize,
    pub d: Vec<u64>,
    pub m: Vec<u64>,
    pub q: Vec<u64>,
    /// `(n, w_{n,1}(q_n−1), w_{n,2}(d_n+q_n−1))` for `n = 1..=depth`.
    pub inequality: Vec<(usize, Letter, Letter)>,
    pub witnesses_y: Vec<AperiodicityWitness>,
    pub witnesses_y_tilde: Vec<AperiodicityWitness>,
    /// Levels `n` at which the Toeplitz anchor block is certified
    /// `4m_n d_n`-periodic.
    pub toeplitz_levels: Vec<usize>,
}

impl fmt::Display for CounterexampleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "depth {}", self.depth)?;
        for (n, dn) in self.d.iter().enumerate() {
            writeln!(f, "d_{n} = {dn}")?;
        }
        for (n, m) in self.m.iter().enumerate() {
            writeln!(f, "m_{n} = {m}")?;
        }
        for (n, q) in self.q.iter().enumerate() {
            writeln!(f, "q_{n} = {q} (common prefix length of w_{n},1 and w_{n},2)")?;
        }
        for (n, a, b) in &self.inequality {
            writeln!(f, "level {n}: w_{n},1(q_{n}-1) = {a} != {b} = w_{n},2(d_{n}+q_{n}-1)")?;
        }
        for (name, ws) in [("y", &self.witnesses_y), ("y~", &self.witnesses_y_tilde)] {
            for w in ws {
                writeln!(
                    f,
                    "{name}: position {} not {}-periodic; {name}({}) != {name}({})",
                    w.position, w.period, w.conflict.0, w.conflict.1
                )?;
            }
        }
        for n in &self.toeplitz_levels {
            writeln!(f, "level {n}: anchor block w_{n},1 certified periodic with period 4 m_{n} d_{n}")?;
        }
        Ok(())
    }
}

fn claim(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Claim(msg()))
    }
}

/// Searches `k = ±1..±max_k` for `y(pos + k·p) != y(pos)`.
fn aperiodicity_witness(
    d: &DirectiveSequence,
    top: usize,
    letter: Letter,
    offset: u64,
    pos: i64,
    p: u64,
    max_k: i64,
) -> Result<Option<AperiodicityWitness>> {
    let len = d.level_lengths(top)?[letter as usize] as i64;
    let at = |i: i64| -> Result<Option<Letter>> {
        let o = i + offset as i64;
        if o < 0 || o >= len {
            Ok(None)
        } else {
            d.letter_at(top, letter, o as u64).map(Some)
        }
    };
    let base = at(pos)?.ok_or(Error::Claim(format!("position {pos} outside the evaluable point")))?;
    for k in (1..=max_k).flat_map(|k| [k, -k]) {
        let j = pos + k * p as i64;
        if let Some(c) = at(j)? {
            if c != base {
                return Ok(Some(AperiodicityWitness { position: pos, period: p, conflict: (pos.min(j), pos.max(j)) }));
            }
        }
    }
    Ok(None)
}

/// Verifies the finite claims of the counterexample for `n ≤ depth`.
/// Needs levels up to `τ_{depth+1}` (explicit or from a tail).
pub fn check_counterexample_claims(d: &DirectiveSequence, depth: usize) -> Result<CounterexampleReport> {
    if depth == 0 {
        return Err(Error::Params("claims need depth at least 1".into()));
    }
    if !d.has_levels(depth + 2) {
        return Err(Error::DepthOutOfRange { requested: depth + 2, available: d.explicit_depth() });
    }
    let scale = d.scale_divisors(depth + 2)?;
    let mut report = CounterexampleReport {
        depth,
        d: scale[..=depth].to_vec(),
        m: vec![],
        q: vec![],
        inequality: vec![],
        witnesses_y: vec![],
        witnesses_y_tilde: vec![],
        toeplitz_levels: vec![],
    };
    for n in 0..=depth + 1 {
        let l = d.level_lengths(n)?;
        claim(l.len() == 2, || format!("level {n} has {} words", l.len()))?;
        claim(scale[n] == l[0], || format!("d_{n} = {} but |w_{n},1| = {}", scale[n], l[0]))?;
        if n >= 1 {
            claim(l[1] == 2 * l[0], || format!("|w_{n},2| != 2|w_{n},1|"))?;
            let dn1 = scale[n - 1];
            claim(l[0] % (4 * dn1) == 0, || format!("|w_{n},1| is not a multiple of 4 d_{}", n - 1))?;
            let m = l[0] / (4 * dn1);
            claim(l[1] == 8 * m * dn1, || format!("|w_{n},2| != 8 m d"))?;
            report.m.push(m);
        }
    }
    report.m.truncate(depth + 1);
    // q_n = Σ_{k<n} d_k is the common prefix length
    let mut q = 0u64;
    for n in 0..=depth {
        report.q.push(q);
        let a = d.extract(n, 0, 0, q + 1)?;
        let b = d.extract(n, 1, 0, q + 1)?;
        claim(a[..q as usize] == b[..q as usize] && a[q as usize] != b[q as usize], || {
            format!("q_{n} = {q} is not the common prefix length at level {n}")
        })?;
        q += scale[n];
    }
    for n in 1..=depth {
        let (qn, dn) = (report.q[n], scale[n]);
        let a = d.letter_at(n, 0, qn - 1)?;
        let b = d.letter_at(n, 1, dn + qn - 1)?;
        claim(a != b, || format!("inequality fails at level {n}"))?;
        report.inequality.push((n, a, b));
    }
    // the centred pair: y anchored in w_{N,1}, ỹ in w_{N,2}, both at offset q_N
    let top = depth + 1;
    let q_top: u64 = scale[..top].iter().sum();
    for n in 1..=depth {
        for (letter, out) in [(0, &mut report.witnesses_y), (1, &mut report.witnesses_y_tilde)] {
            let w = aperiodicity_witness(d, top, letter, q_top, -1, scale[n], 8)?
                .ok_or_else(|| Error::Claim(format!("no aperiodicity witness for -1 against d_{n}")))?;
            out.push(w);
        }
    }
    // w_{n,1} at 2m d in w_{n+1,1} and at 2m d, 6m d in w_{n+1,2}
    for n in 0..=depth {
        let (dn, m) = (scale[n], report_m(d, n, &scale)?);
        let block = d.extract(n, 0, 0, dn)?;
        let spots = [(0, 2 * m * dn), (1, 2 * m * dn), (1, 6 * m * dn)];
        for (letter, at) in spots {
            let got = d.extract(n + 1, letter, at, at + dn)?;
            claim(got == block, || format!("w_{n},1 missing at position {at} of w_{},{}", n + 1, letter + 1))?;
        }
        report.toeplitz_levels.push(n);
    }
    Ok(report)
}

fn report_m(d: &DirectiveSequence, n: usize, scale: &[u64]) -> Result<u64> {
    Ok(d.level_lengths(n + 1)?[0] / (4 * scale[n]))
}

// ---------------------------------------------------------------------------
// The flip example.

#[derive(Debug, Clone)]
pub struct FlipExample {
    pub system: DirectiveSequence,
    /// Letter map on `A_0 = {0, 1}`.
    pub flip: Vec<Letter>,
}

/// Items of the recursion: `u, ũ, v, ṽ`.
const U: u8 = 0;
const UT: u8 = 1;
const V: u8 = 2;
const VT: u8 = 3;

fn tilde(items: &[u8]) -> Vec<u8> {
    items.iter().map(|&i| i ^ 1).collect()
}

/// Letter of `A_{i+1}` for a (plain, tilde) item pair.
fn pair_letter(plain: u8, tilded: u8) -> Letter {
    match (plain, tilded) {
        (U, UT) => 0,
        (U, VT) => 1,
        (V, UT) => 2,
        (V, VT) => 3,
        _ => unreachable!("items alternate plain and tilde"),
    }
}

fn flip_level() -> Morphism {
    let u1 = [U, UT, U, VT, V, UT, V, VT, U, UT, U];
    let v1 = [U, UT, U, VT, V, UT, V, VT, V, UT, U];
    let words = [[&u1[..], &tilde(&u1)].concat(), [&u1[..], &tilde(&v1)].concat(), [&v1[..], &tilde(&u1)].concat(), [&v1[..], &tilde(&v1)].concat()];
    let images = words.iter().map(|w| w.chunks(2).map(|c| pair_letter(c[0], c[1])).collect()).collect();
    let a = Alphabet::new(["1", "2", "3", "4"]).expect("static alphabet");
    Morphism::new(a.clone(), a, images).expect("static morphism")
}

pub fn gen_flip_example(depth: usize) -> Result<FlipExample> {
    if depth == 0 {
        return Err(Error::Params("depth must be at least 1".into()));
    }
    let u0 = Word::from_digits("0001");
    let v0 = Word::from_digits("0111");
    let fl = |w: &Word| -> Word { w.iter().map(|&c| 1 - c).collect() };
    let base: Vec<Word> = vec![u0.concat(&fl(&u0)), u0.concat(&fl(&v0)), v0.concat(&fl(&u0)), v0.concat(&fl(&v0))];
    let tau0 = Morphism::new(Alphabet::new(["1", "2", "3", "4"]).expect("static"), Alphabet::numeric(2), base)?;
    let mut levels = vec![tau0];
    levels.extend(std::iter::repeat_with(flip_level).take(depth - 1));
    let t = flip_level();
    let system = DirectiveSequence::with_tail(levels, Arc::new(move |_| t.clone()))?;
    Ok(FlipExample { system, flip: vec![1, 0] })
}

/// Checks that the letter map sends the length-`ℓ` language onto itself
/// for every `ℓ ≤ max_len`.
pub fn language_closed_under(d: &DirectiveSequence, map: &[Letter], max_len: usize, depth: usize) -> Result<bool> {
    for l in 1..=max_len {
        let lang = language(d, l, depth)?;
        let mut image: Vec<Word> = lang.words.iter().map(|w| w.iter().map(|&c| map[c as usize]).collect()).collect();
        image.sort();
        if image != lang.words {
            return Ok(false);
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// The cyclic-automorphism example.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutExampleParams {
    pub n: usize,
    pub m: u64,
    pub depth: usize,
}

impl AutExampleParams {
    pub fn with_default_m(n: usize, depth: usize) -> Result<Self> {
        Ok(AutExampleParams { n, m: cyclic_m_floor(n)?, depth })
    }
}

/// Least `m` with `|α₀ γ₀ η_t α₀| = mn+1` when `γ₀ = α₀ P α₀` and `P` is
/// the concatenation of all `n^{2n}` pairs: `m = 10 + 2n^{2n}`.
pub fn cyclic_m_floor(n: usize) -> Result<u64> {
    if n < 2 {
        return Err(Error::Params(format!("cyclic order {n} must be at least 2")));
    }
    let pairs = (n as u64).checked_pow(2 * n as u32).ok_or(Error::Overflow("pair count"))?;
    Ok(10 + 2 * pairs)
}

#[derive(Debug, Clone)]
pub struct CyclicAutExample {
    pub params: AutExampleParams,
    pub system: DirectiveSequence,
    /// `φ*` on `A_0`: `f(r,s) ↦ f(r,(s+1) mod n)`.
    pub phi: Vec<Letter>,
    /// `u_0, ..., u_{n-1}` over `{0, ..., n-1}`.
    pub u: Vec<Word>,
    pub alpha0: Word,
}

/// `f(r,s) = r·n + s`.
pub fn f_index(n: usize, r: Letter, s: Letter) -> Letter {
    r * n as Letter + s
}

/// Digits of `α ∈ B^n` from its index, most significant first.
fn digits(n: usize, mut idx: usize) -> Vec<Letter> {
    let mut out = vec![0; n];
    for k in (0..n).rev() {
        out[k] = (idx % n) as Letter;
        idx /= n;
    }
    out
}

fn build_u(n: usize, m: u64) -> (Vec<Word>, Word) {
    let alpha0: Vec<Letter> = std::iter::once(0).chain(std::iter::repeat(1).take(n - 1)).collect();
    let count = n.pow(n as u32);
    let mut pairs = Vec::new();
    for a in 0..count {
        for b in 0..count {
            pairs.extend(digits(n, a));
            pairs.extend(digits(n, b));
        }
    }
    let floor = cyclic_m_floor(n).expect("n >= 2");
    let mut gamma0 = alpha0.repeat(1 + (m - floor) as usize);
    gamma0.extend(&pairs);
    gamma0.extend(&alpha0);
    let u = (0..n as Letter)
        .map(|t| {
            let mut w = alpha0.clone();
            w.extend(&gamma0);
            w.extend(std::iter::repeat(t).take(6 * n + 1));
            w.extend(&alpha0);
            Word::new(w)
        })
        .collect();
    (u, Word::new(alpha0))
}

fn upper_alphabet(n: usize) -> Alphabet {
    let count = n.pow(n as u32);
    let sep = if n <= 10 { "" } else { "_" };
    Alphabet::new((0..count).map(|i| digits(n, i).iter().map(|d| d.to_string()).collect::<Vec<_>>().join(sep)))
        .expect("distinct names")
}

pub fn gen_cyclic_aut_example(params: &AutExampleParams) -> Result<CyclicAutExample> {
    let n = params.n;
    let floor = cyclic_m_floor(n)?;
    if params.m < floor {
        return Err(Error::BelowFloor { level: 0, m: params.m, floor });
    }
    if params.depth == 0 {
        return Err(Error::Params("depth must be at least 1".into()));
    }
    let (u, alpha0) = build_u(n, params.m);
    let upper = upper_alphabet(n);
    let base = Alphabet::new((0..n).flat_map(|r| (0..n).map(move |s| format!("{r}.{s}")))).expect("distinct names");
    let count = n.pow(n as u32);
    let tau0 = Morphism::new(
        upper.clone(),
        base,
        (0..count)
            .map(|a| digits(n, a).iter().enumerate().map(|(s, &r)| f_index(n, r, s as Letter)).collect())
            .collect(),
    )?;
    let v_len = params.m as usize * n + 1;
    let images: Vec<Word> = (0..count)
        .map(|a| {
            let alpha = digits(n, a);
            (0..v_len)
                .map(|j| {
                    let mut idx = 0usize;
                    for t in 0..n {
                        let g = j * n + t;
                        let (s, k) = (g / v_len, g % v_len);
                        idx = idx * n + u[alpha[s] as usize][k] as usize;
                    }
                    idx as Letter
                })
                .collect()
        })
        .collect();
    let step = Morphism::new(upper.clone(), upper, images)?;
    let mut levels = vec![tau0];
    levels.extend(std::iter::repeat(step.clone()).take(params.depth - 1));
    let system = DirectiveSequence::with_tail(levels, Arc::new(move |_| step.clone()))?;
    let phi = (0..n as Letter)
        .flat_map(|r| (0..n as Letter).map(move |s| f_index(n, r, (s + 1) % n as Letter)))
        .collect();
    Ok(CyclicAutExample { params: params.clone(), system, phi, u, alpha0 })
}

/// Exhaustive check of properties (1)-(4) of `U`.
pub fn check_u_properties(u: &[Word], n: usize, m: u64) -> Result<()> {
    let len = m as usize * n + 1;
    claim(u.len() == n, || format!("|U| = {} != {n}", u.len()))?;
    claim(u.iter().all(|w| w.len() == len), || format!("some word of U has length != {len}"))?;
    for (i, w) in u.iter().enumerate() {
        claim(!u[..i].contains(w), || "U has repeated words".into())?;
    }
    // (2) common prefix and suffix of length n
    for w in u {
        claim(w[..n] == u[0][..n], || "prefixes of length n differ".into())?;
        claim(w[len - n..] == u[0][len - n..], || "suffixes of length n differ".into())?;
    }
    // (3) every αβ at an aligned position kn with k < m
    let count = n.pow(n as u32);
    for w in u {
        let mut seen = vec![false; count * count];
        for k in 0..m as usize {
            if (k + 2) * n <= len {
                let block = &w[k * n..(k + 2) * n];
                let idx = block.iter().fold(0usize, |acc, &c| acc * n + c as usize);
                seen[idx] = true;
            }
        }
        claim(seen.iter().all(|&s| s), || "some pair αβ has no aligned occurrence".into())?;
    }
    // (4) occurrences of u in u'u'' only at 0 or mn+1
    for a in u {
        for b in u {
            for c in u {
                let bc = b.concat(c);
                for pos in occurrences(a, &bc) {
                    claim((pos == 0 && a == b) || (pos == len && a == c), || {
                        format!("u occurs in u'u'' at position {pos}")
                    })?;
                }
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutReport {
    pub order: usize,
    pub scale: Vec<u64>,
    /// Levels `i` at which `φ^s(w_{i,α})` was found in `w_{i,β} w_{i,γ}`.
    pub shift_levels: Vec<usize>,
    /// Longest `ℓ` for which language closure under `φ*` is established.
    pub closed_up_to: usize,
}

impl fmt::Display for AutReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "order of phi* on the alphabet: {}", self.order)?;
        for (i, d) in self.scale.iter().enumerate() {
            writeln!(f, "d_{i} = {d}")?;
        }
        for i in &self.shift_levels {
            writeln!(f, "level {i}: phi^s(w_i,a) occurs in w_i,b w_i,c at position s(mn+1)^i for all a, s")?;
        }
        writeln!(f, "language closed under phi* for all lengths <= {}", self.closed_up_to)
    }
}

fn permutation_order(p: &[Letter]) -> usize {
    let mut cur: Vec<Letter> = p.to_vec();
    let mut k = 1;
    while cur.iter().enumerate().any(|(i, &c)| c as usize != i) {
        cur = cur.iter().map(|&c| p[c as usize]).collect();
        k += 1;
    }
    k
}

/// Verifies the automorphism claims up to `depth`.
///
/// Language closure for `ℓ ≤ |w_1|` is derived from three finite facts:
/// `φ^s(w_{i,α})` equals the shifted window of `w_{i,β} w_{i,γ}` for all
/// `α, s` (i ≤ 1), every pair of level-1 letters occurs in a level-2 image,
/// and `φ*` is a bijection. When the level words at `depth` are small the
/// closure is also checked directly on the language.
pub fn check_cyclic_aut_claims(ex: &CyclicAutExample, depth: usize) -> Result<AutReport> {
    let (n, m) = (ex.params.n, ex.params.m);
    let d = &ex.system;
    check_u_properties(&ex.u, n, m)?;
    let order = permutation_order(&ex.phi);
    claim(order == n, || format!("phi* has order {order}, expected {n}"))?;
    let v = m * n as u64 + 1;
    let scale = d.scale_divisors(depth + 1)?;
    for (i, &di) in scale.iter().enumerate() {
        let expect = (n as u64).checked_mul(v.checked_pow(i as u32).ok_or(Error::Overflow("scale"))?).ok_or(Error::Overflow("scale"))?;
        claim(di == expect, || format!("d_{i} = {di}, expected {expect}"))?;
    }
    let count = n.pow(n as u32);
    let mut shift_levels = vec![];
    for i in 0..depth.min(2) {
        let words = d.level_words(i)?;
        let vi = v.pow(i as u32) as usize;
        let mut phis = words.clone();
        for s in 1..n {
            phis = phis.iter().map(|w| w.iter().map(|&c| ex.phi[c as usize]).collect()).collect();
            for a in 0..count {
                let alpha = digits(n, a);
                // β γ with (βγ)[s, s+n) = α, free letters 0
                let mut bg = vec![0; 2 * n];
                bg[s..s + n].copy_from_slice(&alpha);
                let idx = |ds: &[Letter]| ds.iter().fold(0usize, |acc, &c| acc * n + c as usize);
                let cat = words[idx(&bg[..n])].concat(&words[idx(&bg[n..])]);
                let win = &cat[s * vi..s * vi + words[a].len()];
                claim(win == &phis[a][..], || format!("phi^{s}(w_{i},a) not at position s(mn+1)^{i}"))?;
            }
        }
        shift_levels.push(i);
    }
    // all pairs of level-1 letters occur inside level-2 images
    let step = d.level(1)?;
    let mut seen = vec![false; count * count];
    for img in step.images() {
        for p in img.windows(2) {
            seen[p[0] as usize * count + p[1] as usize] = true;
        }
    }
    claim(seen.iter().all(|&s| s), || "some pair of level-1 letters never occurs".into())?;
    let w1 = d.level_lengths(1)?[0] as usize;
    let lens = d.level_lengths(depth)?;
    let total: u64 = lens.iter().sum();
    if total <= 1 << 20 && lens[0] as usize >= 2 * w1 {
        claim(language_closed_under(d, &ex.phi, w1, depth + 1)?, || "language not closed under phi*".into())?;
    }
    Ok(AutReport { order, scale, shift_levels, closed_up_to: w1 })
}
