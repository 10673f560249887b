//! Period skeletons of Toeplitz points, period-structure towers and
//! single-hole systems.
//!
//! A skeleton entry of `None` means the position is not confirmed periodic
//! at the available depth. It is never a proof of aperiodicity; that is
//! what [`AperiodicityWitness`] records.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::sadic::{divisors, DirectiveSequence, Morphism, PointWindow};
use crate::words::{Alphabet, Letter, Word};

/// Explicit evidence that `position` is not `period`-periodic: the two
/// positions in `conflict` are congruent to it and carry different letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AperiodicityWitness {
    pub position: i64,
    pub period: u64,
    pub conflict: (i64, i64),
}

fn render_pattern(pattern: &[Option<Letter>]) -> String {
    let compact = pattern.iter().all(|c| c.map_or(true, |a| a < 10));
    let tok = |c: &Option<Letter>| c.map_or("_".to_string(), |a| a.to_string());
    if compact {
        pattern.iter().map(tok).collect()
    } else {
        pattern.iter().map(tok).collect::<Vec<_>>().join(" ")
    }
}

fn parse_pattern(s: &str) -> Result<Vec<Option<Letter>>> {
    let toks: Vec<String> = if s.contains(char::is_whitespace) {
        s.split_whitespace().map(String::from).collect()
    } else {
        s.chars().map(String::from).collect()
    };
    toks.iter()
        .map(|t| match t.as_str() {
            "_" => Ok(None),
            t => t.parse().map(Some).map_err(|_| Error::Tower(format!("bad pattern token {t:?}"))),
        })
        .collect()
}

fn rotation_invariant(pattern: &[Option<Letter>], q: usize) -> bool {
    let p = pattern.len();
    (0..p).all(|i| pattern[i] == pattern[(i + q) % p])
}

/// The `p`-skeleton of a point: `at(i) = pattern[(i + phase) mod p]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SkeletonWindow {
    period: u64,
    pattern: Vec<Option<Letter>>,
    phase: u64,
}

impl SkeletonWindow {
    pub fn new(pattern: Vec<Option<Letter>>, phase: u64) -> Result<Self> {
        if pattern.is_empty() {
            return Err(Error::Params("skeleton period must be positive".into()));
        }
        let period = pattern.len() as u64;
        Ok(SkeletonWindow { period, pattern, phase: phase % period })
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn pattern(&self) -> &[Option<Letter>] {
        &self.pattern
    }

    pub fn phase(&self) -> u64 {
        self.phase
    }

    pub fn at(&self, i: i64) -> Option<Letter> {
        self.pattern[(i + self.phase as i64).rem_euclid(self.period as i64) as usize]
    }

    /// Skeleton of `S^k x`.
    pub fn shifted(&self, k: i64) -> SkeletonWindow {
        let phase = (self.phase as i64 + k).rem_euclid(self.period as i64) as u64;
        SkeletonWindow { period: self.period, pattern: self.pattern.clone(), phase }
    }

    /// The pattern read from position 0, i.e. with phase folded in.
    pub fn normalized(&self) -> SkeletonWindow {
        let pattern = (0..self.period as i64).map(|i| self.at(i)).collect();
        SkeletonWindow { period: self.period, pattern, phase: 0 }
    }

    pub fn is_empty_skeleton(&self) -> bool {
        self.pattern.iter().all(Option::is_none)
    }

    pub fn is_complete(&self) -> bool {
        self.pattern.iter().all(Option::is_some)
    }

    pub fn hole_count(&self) -> usize {
        self.pattern.iter().filter(|c| c.is_none()).count()
    }

    /// True iff no proper divisor of the period leaves the pattern invariant
    /// under rotation.
    pub fn is_essential(&self) -> bool {
        is_essential(self)
    }

    /// Positions in `[a, b)` whose residue is a hole.
    pub fn holes(&self, a: i64, b: i64) -> Vec<i64> {
        holes(self, a, b)
    }

    /// Pattern from position 0 with `_` for holes.
    pub fn render(&self) -> String {
        render_pattern(&self.normalized().pattern)
    }
}

impl fmt::Display for SkeletonWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// The `p`-skeleton confirmed by the window's certificates. Residue `r`
/// carries a letter iff some certificate level confirms it `p`-periodic and
/// every window letter in the class agrees.
pub fn skeleton_of_window(x: &PointWindow, p: u64) -> Result<SkeletonWindow> {
    if p == 0 {
        return Err(Error::Params("period must be positive".into()));
    }
    let needed = 3 * p;
    if (x.len() as u64) < needed {
        return Err(Error::WindowTooNarrow { needed, available: x.len() as u64 });
    }
    let pattern = (0..p as i64)
        .map(|r| {
            let a = x.per_letter(r, p)?;
            let first = x.start() + (r - x.start()).rem_euclid(p as i64);
            let agrees = (first..x.end()).step_by(p as usize).all(|j| x.get(j) == Some(a));
            agrees.then_some(a)
        })
        .collect();
    SkeletonWindow::new(pattern, 0)
}

pub fn is_essential(s: &SkeletonWindow) -> bool {
    let p = s.period;
    !divisors(p).into_iter().filter(|&q| q < p).any(|q| rotation_invariant(&s.pattern, q as usize))
}

pub fn holes(s: &SkeletonWindow, a: i64, b: i64) -> Vec<i64> {
    (a..b).filter(|&i| s.at(i).is_none()).collect()
}

/// Result of evaluating a tower at a position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TowerValue {
    /// Defined first by the pattern of `level`.
    Defined { letter: Letter, level: usize },
    /// Still a hole after all `depth` levels.
    Hole { depth: usize },
}

impl TowerValue {
    pub fn letter(self) -> Option<Letter> {
        match self {
            TowerValue::Defined { letter, .. } => Some(letter),
            TowerValue::Hole { .. } => None,
        }
    }
}

/// A period structure `p_0 | p_1 | ...` with refining partial patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonTower {
    periods: Vec<u64>,
    patterns: Vec<Vec<Option<Letter>>>,
}

impl SkeletonTower {
    pub fn new(periods: Vec<u64>, patterns: Vec<Vec<Option<Letter>>>) -> Result<Self> {
        if periods.is_empty() || periods.len() != patterns.len() {
            return Err(Error::Tower(format!("{} periods for {} patterns", periods.len(), patterns.len())));
        }
        for (n, (&p, pat)) in periods.iter().zip(&patterns).enumerate() {
            if p == 0 || pat.len() as u64 != p {
                return Err(Error::Tower(format!("pattern {n} has length {} for period {p}", pat.len())));
            }
        }
        for n in 1..periods.len() {
            let (p, q) = (periods[n - 1], periods[n]);
            if q <= p || q % p != 0 {
                return Err(Error::Tower(format!("period {q} at level {n} is not a proper multiple of {p}")));
            }
            let (lo, hi) = (&patterns[n - 1], &patterns[n]);
            if let Some(i) = (0..q as usize).find(|&i| lo[i % p as usize].is_some() && hi[i] != lo[i % p as usize]) {
                return Err(Error::Tower(format!("level {n} changes the letter at residue {i}")));
            }
        }
        Ok(SkeletonTower { periods, patterns })
    }

    pub fn depth(&self) -> usize {
        self.periods.len()
    }

    pub fn periods(&self) -> &[u64] {
        &self.periods
    }

    pub fn pattern(&self, n: usize) -> &[Option<Letter>] {
        &self.patterns[n]
    }

    pub fn skeleton(&self, n: usize) -> SkeletonWindow {
        SkeletonWindow { period: self.periods[n], pattern: self.patterns[n].clone(), phase: 0 }
    }

    pub fn hole_density(&self, n: usize) -> f64 {
        let holes = self.patterns[n].iter().filter(|c| c.is_none()).count();
        holes as f64 / self.periods[n] as f64
    }

    pub fn is_single_hole(&self) -> bool {
        self.patterns.iter().all(|p| p.iter().filter(|c| c.is_none()).count() == 1)
    }

    /// Residue of the unique hole at level `n`, for single-hole levels.
    pub fn hole(&self, n: usize) -> Option<u64> {
        let pat = &self.patterns[n];
        let mut it = pat.iter().enumerate().filter(|(_, c)| c.is_none()).map(|(i, _)| i as u64);
        match (it.next(), it.next()) {
            (Some(h), None) => Some(h),
            _ => None,
        }
    }

    fn require_single_hole(&self) -> Result<()> {
        if self.is_single_hole() {
            Ok(())
        } else {
            Err(Error::Tower("not a single-hole tower".into()))
        }
    }

    /// The letters inserted between consecutive `p_m`-holes at the
    /// `p_n`-hole positions; length `p_m / p_n - 1`.
    pub fn filling(&self, n: usize, m: usize) -> Result<Word> {
        filling(self, n, m)
    }

    /// Letters that fill the level-`n` hole somewhere deeper in the tower.
    pub fn hole_letters(&self, n: usize) -> Result<Vec<Letter>> {
        self.require_single_hole()?;
        let h = self.hole(n).expect("single hole");
        let p = self.periods[n];
        let mut seen = std::collections::BTreeSet::new();
        for m in n + 1..self.depth() {
            let r = self.periods[m] / p;
            for j in 0..r {
                if let Some(a) = self.patterns[m][(h + j * p) as usize] {
                    seen.insert(a);
                }
            }
        }
        Ok(seen.into_iter().collect())
    }

    /// The `p_n`-blocks of a point generated by the tower: the level-`n`
    /// pattern with its hole filled by each letter from deeper levels.
    pub fn blocks(&self, n: usize) -> Result<Vec<Word>> {
        let h = self.hole(n).ok_or_else(|| Error::Tower(format!("level {n} is not single-hole")))? as usize;
        let letters = self.hole_letters(n)?;
        Ok(letters
            .into_iter()
            .map(|a| {
                let mut w: Vec<Letter> = self.patterns[n].iter().map(|c| c.unwrap_or(0)).collect();
                w[h] = a;
                Word::new(w)
            })
            .collect())
    }

    /// Drops levels at and beyond `depth`.
    pub fn truncated(&self, depth: usize) -> Result<SkeletonTower> {
        if depth == 0 || depth > self.depth() {
            return Err(Error::DepthOutOfRange { requested: depth, available: self.depth() });
        }
        Ok(SkeletonTower { periods: self.periods[..depth].to_vec(), patterns: self.patterns[..depth].to_vec() })
    }
}

/// Letter from the shallowest pattern defining residue `i`.
pub fn tower_eval(t: &SkeletonTower, i: i64) -> TowerValue {
    for (n, (&p, pat)) in t.periods.iter().zip(&t.patterns).enumerate() {
        if let Some(a) = pat[i.rem_euclid(p as i64) as usize] {
            return TowerValue::Defined { letter: a, level: n };
        }
    }
    TowerValue::Hole { depth: t.depth() }
}

pub fn filling(t: &SkeletonTower, n: usize, m: usize) -> Result<Word> {
    t.require_single_hole()?;
    if n >= m || m >= t.depth() {
        return Err(Error::Params(format!("filling needs n < m < {}, got ({n}, {m})", t.depth())));
    }
    let (p, q) = (t.periods[n], t.periods[m]);
    let h = t.hole(m).expect("single hole");
    (1..q / p)
        .map(|j| {
            t.patterns[m][((h + j * p) % q) as usize]
                .ok_or_else(|| Error::Tower(format!("level {m} has a hole inside the ({n},{m}) filling")))
        })
        .collect::<Result<Vec<_>>>()
        .map(Word::new)
}

/// Builds a single-hole tower. `fillings[n]` has length `p_n / p_{n-1}`
/// (with `p_{-1} = 1`) and exactly one `None`; its letters fill the
/// level-`(n-1)` holes of one `p_n`-period in position order and the `None`
/// marks the surviving hole.
pub fn single_hole_tower(periods: &[u64], fillings: &[Vec<Option<Letter>>]) -> Result<SkeletonTower> {
    if periods.is_empty() || periods.len() != fillings.len() {
        return Err(Error::Tower(format!("{} periods for {} fillings", periods.len(), fillings.len())));
    }
    let mut patterns: Vec<Vec<Option<Letter>>> = Vec::new();
    let mut prev = 1u64;
    for (n, (&p, fill)) in periods.iter().zip(fillings).enumerate() {
        if p % prev != 0 || p / prev < 2 {
            return Err(Error::Tower(format!("period {p} at level {n} is not at least twice a multiple of {prev}")));
        }
        let r = p / prev;
        if fill.len() as u64 != r {
            return Err(Error::Tower(format!("filling {n} has length {}, expected {r}", fill.len())));
        }
        if fill.iter().filter(|c| c.is_none()).count() != 1 {
            return Err(Error::Tower(format!("filling {n} must contain exactly one hole")));
        }
        let pat = match patterns.last() {
            None => fill.clone(),
            Some(lo) => {
                let h = lo.iter().position(Option::is_none).expect("single hole") as u64;
                let mut pat: Vec<Option<Letter>> = (0..p).map(|i| lo[(i % prev) as usize]).collect();
                for (j, &c) in fill.iter().enumerate() {
                    pat[(h + j as u64 * prev) as usize] = c;
                }
                pat
            }
        };
        patterns.push(pat);
        prev = p;
    }
    SkeletonTower::new(periods.to_vec(), patterns)
}

/// The constant-length directive sequence whose level-`n` words are the
/// `p_n`-blocks of the tower. Letters of `A_{n+1}` are the letters that fill
/// the level-`n` hole, `A_0` is `{0, ..., max letter}`. Produces `depth`
/// levels; needs `depth < t.depth()`.
pub fn single_hole_to_rank2(t: &SkeletonTower, depth: usize) -> Result<DirectiveSequence> {
    t.require_single_hole()?;
    if depth == 0 || depth >= t.depth() {
        return Err(Error::DepthOutOfRange { requested: depth, available: t.depth().saturating_sub(1) });
    }
    let letters: Vec<Vec<Letter>> = (0..depth).map(|n| t.hole_letters(n)).collect::<Result<_>>()?;
    if let Some(n) = letters.iter().position(|l| l.len() < 2) {
        return Err(Error::Periodic(n));
    }
    let max = t.patterns.iter().flatten().flatten().copied().max().unwrap_or(0);
    let base = Alphabet::numeric(max as usize + 1);
    let named = |ls: &[Letter]| Alphabet::new(ls.iter().map(|a| a.to_string())).expect("distinct letters");
    let index = |ls: &[Letter], a: Letter| ls.binary_search(&a).map(|i| i as Letter);
    let mut levels = Vec::new();
    let h0 = t.hole(0).expect("single hole") as usize;
    let images0 = letters[0]
        .iter()
        .map(|&a| {
            let mut w: Vec<Letter> = t.patterns[0].iter().map(|c| c.unwrap_or(0)).collect();
            w[h0] = a;
            Word::new(w)
        })
        .collect();
    levels.push(Morphism::new(named(&letters[0]), base, images0)?);
    for n in 1..depth {
        let (src, tgt) = (&letters[n], &letters[n - 1]);
        let r = t.periods[n] / t.periods[n - 1];
        let h_lo = t.hole(n - 1).expect("single hole");
        let h_hi = t.hole(n).expect("single hole");
        let slots: Vec<Option<Letter>> =
            (0..r).map(|j| t.patterns[n][(h_lo + j * t.periods[n - 1]) as usize]).collect();
        let images = src
            .iter()
            .map(|&b| {
                slots
                    .iter()
                    .enumerate()
                    .map(|(j, c)| {
                        let a = match c {
                            Some(a) => *a,
                            None => {
                                debug_assert_eq!(h_lo + j as u64 * t.periods[n - 1], h_hi);
                                b
                            }
                        };
                        index(tgt, a).map_err(|_| Error::Tower(format!("letter {a} missing from level {}", n - 1)))
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(Word::new)
            })
            .collect::<Result<Vec<_>>>()?;
        levels.push(Morphism::new(named(src), named(tgt), images)?);
    }
    DirectiveSequence::new(levels)
}

/// A random single-hole tower over `{0, ..., k-1}` with `levels` levels.
/// Level ratios lie in `[min_ratio, max_ratio]` (at least 3 past level 0)
/// and every filling past level 0 uses at least two letters, so the
/// conversion to a directive sequence succeeds.
pub fn random_single_hole_tower(
    rng: &mut impl Rng,
    levels: usize,
    k: u32,
    min_ratio: u64,
    max_ratio: u64,
) -> Result<SkeletonTower> {
    if levels == 0 || k < 2 || min_ratio < 2 || max_ratio < min_ratio.max(3) {
        return Err(Error::Params("need levels ≥ 1, k ≥ 2, 2 ≤ min_ratio, max_ratio ≥ 3".into()));
    }
    let mut periods = Vec::new();
    let mut fillings = Vec::new();
    let mut prev = 1u64;
    for n in 0..levels {
        let lo = if n == 0 { min_ratio } else { min_ratio.max(3) };
        let r = rng.gen_range(lo..=max_ratio);
        let hole = rng.gen_range(0..r) as usize;
        let mut fill: Vec<Option<Letter>> = (0..r).map(|_| Some(rng.gen_range(0..k))).collect();
        fill[hole] = None;
        if n > 0 {
            let present: Vec<usize> = (0..r as usize).filter(|&j| j != hole).collect();
            let (i, j) = (present[0], present[1]);
            let a = rng.gen_range(0..k);
            fill[i] = Some(a);
            fill[j] = Some((a + rng.gen_range(1..k)) % k);
        }
        prev = prev.checked_mul(r).ok_or(Error::Overflow("tower period"))?;
        periods.push(prev);
        fillings.push(fill);
    }
    single_hole_tower(&periods, &fillings)
}

/// Tower text format: `period <n>: <p_n>` and `pattern <n>: <tokens>`.
pub fn write_tower(t: &SkeletonTower) -> String {
    let mut out = String::new();
    for n in 0..t.depth() {
        out.push_str(&format!("period {n}: {}\npattern {n}: {}\n", t.periods[n], render_pattern(&t.patterns[n])));
    }
    out
}

pub fn parse_tower(text: &str) -> Result<SkeletonTower> {
    let mut periods: Vec<Option<u64>> = Vec::new();
    let mut patterns: Vec<Option<Vec<Option<Letter>>>> = Vec::new();
    let perr = |line: usize, m: String| Error::Parse { line, message: m };
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = line.split_once(':').ok_or_else(|| perr(lineno, "missing ':'".into()))?;
        let mut hw = head.split_whitespace();
        let (kw, idx) = (hw.next(), hw.next());
        let n: usize = idx
            .and_then(|s| s.parse().ok())
            .filter(|_| hw.next().is_none())
            .ok_or_else(|| perr(lineno, format!("bad header {head:?}")))?;
        if periods.len() <= n {
            periods.resize(n + 1, None);
            patterns.resize(n + 1, None);
        }
        match kw {
            Some("period") => {
                let p = rest.trim().parse().map_err(|_| perr(lineno, format!("bad period {:?}", rest.trim())))?;
                if periods[n].replace(p).is_some() {
                    return Err(perr(lineno, format!("period {n} given twice")));
                }
            }
            Some("pattern") => {
                let pat = parse_pattern(rest.trim()).map_err(|e| perr(lineno, e.to_string()))?;
                if patterns[n].replace(pat).is_some() {
                    return Err(perr(lineno, format!("pattern {n} given twice")));
                }
            }
            _ => return Err(perr(lineno, format!("unrecognized line {line:?}"))),
        }
    }
    let periods: Vec<u64> = periods
        .into_iter()
        .enumerate()
        .map(|(n, p)| p.ok_or_else(|| perr(0, format!("period {n} missing"))))
        .collect::<Result<_>>()?;
    let patterns = patterns
        .into_iter()
        .enumerate()
        .map(|(n, p)| p.ok_or_else(|| perr(0, format!("pattern {n} missing"))))
        .collect::<Result<_>>()?;
    SkeletonTower::new(periods, patterns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::period_doubling;
    use crate::sadic::{point_window, Anchor, CertLevel};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pat(s: &str) -> Vec<Option<Letter>> {
        parse_pattern(s).unwrap()
    }

    #[test]
    fn period_doubling_skeleton() {
        let d = period_doubling();
        let x = point_window(&d, &Anchor::from_top(5, 0, 20), 20).unwrap();
        let s = skeleton_of_window(&x, 2).unwrap();
        assert_eq!(s.render(), "0_");
        assert_eq!(s.phase(), 0);
        assert!(s.is_essential());
        assert_eq!(skeleton_of_window(&x, 1).unwrap().render(), "_");
        assert_eq!(skeleton_of_window(&x, 4).unwrap().render(), "010_");
        assert!(matches!(skeleton_of_window(&x.restrict(-2, 3).unwrap(), 2), Err(Error::WindowTooNarrow { .. })));
    }

    #[test]
    fn periodic_window_has_no_holes() {
        let x = PointWindow::from_parts(0, Word::from_digits("010101"), vec![CertLevel::new(2, 0, vec![Some(0), Some(1)])])
            .unwrap();
        let s = skeleton_of_window(&x, 2).unwrap();
        assert_eq!(s.render(), "01");
        assert!(s.holes(0, 10).is_empty());
    }

    #[test]
    fn essential_and_holes() {
        let s = SkeletonWindow::new(pat("0_"), 0).unwrap();
        assert!(s.is_essential());
        assert_eq!(s.holes(0, 4), vec![1, 3]);
        assert_eq!(s.shifted(1).holes(0, 4), vec![0, 2]);
        assert!(!SkeletonWindow::new(pat("0_0_"), 0).unwrap().is_essential());
        assert!(SkeletonWindow::new(pat("0_00"), 0).unwrap().is_essential());
    }

    #[test]
    fn tower_example() {
        let t = single_hole_tower(&[2, 4, 12], &[pat("0_"), pat("_1"), pat("1_0")]).unwrap();
        assert_eq!(render_pattern(t.pattern(1)), "0_01");
        assert_eq!(render_pattern(t.pattern(2)), "01010_010001");
        assert_eq!(tower_eval(&t, 0), TowerValue::Defined { letter: 0, level: 0 });
        assert_eq!(tower_eval(&t, 3), TowerValue::Defined { letter: 1, level: 1 });
        assert!(t.is_single_hole());
        assert_eq!(t.filling(0, 1).unwrap().len(), 1);
        assert_eq!(t.filling(0, 2).unwrap().len(), 5);
        assert_eq!(t.filling(1, 2).unwrap().len(), 2);
    }
    #[test]
    fn filling_reads_between_holes() {
        let t = single_hole_tower(&[2, 4, 12], &[pat("0_"), pat("_1"), pat("1_0")]).unwrap();
        // level-2 hole at 5; level-0 holes at 7, 9, 11, 1, 3 after it
        assert_eq!(t.filling(0, 2).unwrap(), Word::from_digits("10111"));
        assert_eq!(t.filling(1, 2).unwrap(), Word::from_digits("01"));
        assert_eq!(t.filling(0, 1).unwrap(), Word::from_digits("1"));
        let t8 = single_hole_tower(&[2, 8], &[pat("0_"), pat("1_02")]).unwrap();
        assert_eq!(t8.filling(0, 1).unwrap().len(), 3);
        assert!(single_hole_tower(&[2, 4], &[pat("0_"), pat("11")]).is_err());
        assert!(single_hole_tower(&[2, 4], &[pat("0_"), pat("1_1")]).is_err());
        assert!(single_hole_tower(&[2, 3], &[pat("0_"), pat("1_1")]).is_err());
    }

    #[test]
    fn blocks_and_conversion() {
        let t = single_hole_tower(&[2, 4, 8, 16, 32], &[pat("0_"), pat("_1"), pat("0_"), pat("_1"), pat("0_")]).unwrap();
        // the tower of the period-doubling point
        assert_eq!(render_pattern(t.pattern(1)), "0_01");
        let w0 = t.blocks(0).unwrap();
        assert_eq!(w0, vec![Word::from_digits("00"), Word::from_digits("01")]);
        let d = single_hole_to_rank2(&t, 3).unwrap();
        for n in 0..3 {
            let mut lw = d.level_words(n).unwrap();
            lw.sort();
            assert_eq!(lw, t.blocks(n).unwrap(), "level {n}");
            assert_eq!(d.level(n).unwrap().flags().constant_length, Some(2));
        }
        assert!(matches!(single_hole_to_rank2(&t, 5), Err(Error::DepthOutOfRange { .. })));
        let flat = single_hole_tower(&[2, 6, 18], &[pat("0_"), pat("_01"), pat("1_1")]).unwrap();
        assert!(matches!(single_hole_to_rank2(&flat, 2), Err(Error::Periodic(1))));
    }

    #[test]
    fn refinement_rejected() {
        assert!(SkeletonTower::new(vec![2, 4], vec![pat("0_"), pat("1_01")]).is_err());
        assert!(SkeletonTower::new(vec![2, 6, 4], vec![pat("0_"), pat("0_0101"), pat("0101")]).is_err());
        assert!(SkeletonTower::new(vec![2, 4], vec![pat("0_"), pat("0_0")]).is_err());
    }

    #[test]
    fn text_roundtrip() {
        let t = single_hole_tower(&[2, 4, 12], &[pat("0_"), pat("_1"), pat("1_0")]).unwrap();
        let text = write_tower(&t);
        assert_eq!(text, "period 0: 2\npattern 0: 0_\nperiod 1: 4\npattern 1: 0_01\nperiod 2: 12\npattern 2: 01010_010001\n");
        assert_eq!(parse_tower(&text).unwrap(), t);
        let spaced = "period 0: 2 # p\npattern 0: 10 _\n";
        let t2 = parse_tower(spaced).unwrap();
        assert_eq!(write_tower(&t2), "period 0: 2\npattern 0: 10 _\n");
        assert!(matches!(parse_tower("period 0: 2\nfoo 0: x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_tower("period 0: 2\n"), Err(Error::Parse { .. })));
    }

    fn divisor_oracle(s: &SkeletonWindow) -> bool {
        let p = s.period() as usize;
        !(1..p).filter(|q| p % q == 0).any(|q| (0..p).all(|i| s.pattern()[i] == s.pattern()[(i + q) % p]))
    }

    proptest! {
        #[test]
        fn random_towers_are_refining_and_essential(seed in any::<u64>(), levels in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_single_hole_tower(&mut rng, levels, 2, 2, 4).unwrap();
            prop_assert!(t.is_single_hole());
            for n in 0..t.depth() {
                let s = t.skeleton(n);
                prop_assert!(s.is_essential());
                prop_assert_eq!(s.is_essential(), divisor_oracle(&s));
                prop_assert_eq!(s.hole_count(), 1);
                if n + 1 < t.depth() {
                    let (p, q) = (t.periods()[n] as usize, t.periods()[n + 1] as usize);
                    prop_assert!(t.hole_density(n + 1) < t.hole_density(n));
                    for i in 0..q {
                        if let Some(a) = t.pattern(n)[i % p] {
                            prop_assert_eq!(t.pattern(n + 1)[i], Some(a));
                        }
                    }
                }
                for m in n + 1..t.depth() {
                    let f = t.filling(n, m).unwrap();
                    prop_assert_eq!(f.len() as u64, t.periods()[m] / t.periods()[n] - 1);
                }
            }
            for i in -50i64..50 {
                if let TowerValue::Defined { letter, level } = tower_eval(&t, i) {
                    for n in level..t.depth() {
                        prop_assert_eq!(t.pattern(n)[i.rem_euclid(t.periods()[n] as i64) as usize], Some(letter));
                    }
                }
            }
        }

        #[test]
        fn window_skeletons_match_tower(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let t = random_single_hole_tower(&mut rng, 4, 2, 2, 3).unwrap();
            let d = single_hole_to_rank2(&t, 3).unwrap();
            for n in 0..3 {
                let mut lw = d.level_words(n).unwrap();
                lw.sort();
                prop_assert_eq!(lw, t.blocks(n).unwrap());
            }
            let len = d.level_lengths(2).unwrap()[0];
            let anchor = Anchor::from_top(2, 0, len / 2);
            let x = point_window(&d, &anchor, len).unwrap();
            // the anchored point is the tower's point shifted by its level-2 cut
            let tower = anchor.tower(&d).unwrap();
            let off = tower[2].1 as i64;
            for n in 0..3 {
                let p = t.periods()[n];
                if (x.len() as u64) < 3 * p { continue; }
                let s = skeleton_of_window(&x, p).unwrap();
                for i in x.start()..x.end() {
                    if let Some(a) = s.at(i) {
                        prop_assert_eq!(tower_eval(&t, i + off).letter(), Some(a));
                    }
                    if let TowerValue::Defined { letter, level } = tower_eval(&t, i + off) {
                        if level <= n {
                            prop_assert_eq!(s.at(i), Some(letter));
                        }
                    }
                }
            }
        }
    }
}
