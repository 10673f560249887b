//! Ordered Bratteli diagrams truncated at a finite depth, telescoping, and
//! the passage to and from directive sequences.
//!
//! Level `n` edges (`n ≥ 1`) go from `V_{n-1}` to `V_n`. Edges of a level
//! are stored grouped by range vertex and sorted by order index, so the
//! fiber of `v` is a contiguous slice. Level-1 edges may carry labels in a
//! level-0 alphabet; the directive read from a labelled diagram uses them
//! as the letters of `τ_0`.

use std::fmt::Write as _;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::sadic::{DirectiveSequence, Morphism};
use crate::words::{Alphabet, Letter, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Edge {
    pub source: usize,
    pub range: usize,
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderedBratteliDiagram {
    vertices: Vec<Alphabet>,
    /// `edges[n - 1]` is `E_n`.
    edges: Vec<Vec<Edge>>,
    /// `fibers[n - 1][v]` indexes the fiber of `v ∈ V_n` in `edges[n - 1]`.
    fibers: Vec<Vec<Range<usize>>>,
    /// Labels of `E_1`, parallel to `edges[0]`.
    labels: Option<(Alphabet, Vec<Letter>)>,
}

fn err(msg: impl Into<String>) -> Error {
    Error::Bratteli(msg.into())
}

impl OrderedBratteliDiagram {
    /// Checks the invariants and sorts each level into fibers. `labels`, if
    /// given, are parallel to `edges[0]` as passed in.
    pub fn new(vertices: Vec<Alphabet>, edges: Vec<Vec<Edge>>, labels: Option<(Alphabet, Vec<Letter>)>) -> Result<Self> {
        if vertices.is_empty() || vertices[0].len() != 1 {
            return Err(err("level 0 must hold exactly one vertex"));
        }
        if edges.len() + 1 != vertices.len() {
            return Err(err(format!("{} vertex levels for {} edge levels", vertices.len(), edges.len())));
        }
        let mut labels = labels;
        if let Some((alpha, ls)) = &labels {
            if edges.is_empty() || ls.len() != edges[0].len() {
                return Err(err("one label per level-1 edge is required"));
            }
            alpha.check(ls)?;
        }
        let mut sorted = Vec::with_capacity(edges.len());
        let mut fibers = Vec::with_capacity(edges.len());
        for (i, level) in edges.into_iter().enumerate() {
            let n = i + 1;
            let (below, here) = (vertices[n - 1].len(), vertices[n].len());
            let mut idx: Vec<usize> = (0..level.len()).collect();
            idx.sort_by_key(|&j| (level[j].range, level[j].order));
            let level_sorted: Vec<Edge> = idx.iter().map(|&j| level[j]).collect();
            if n == 1 {
                if let Some((_, ls)) = &mut labels {
                    *ls = idx.iter().map(|&j| ls[j]).collect();
                }
            }
            let mut fiber = vec![0..0; here];
            let mut used = vec![false; below];
            let mut start = 0;
            for v in 0..here {
                let mut end = start;
                while end < level_sorted.len() && level_sorted[end].range == v {
                    end += 1;
                }
                if end == start {
                    return Err(err(format!("vertex {} at level {n} has no incoming edge", vertices[n].name(v as Letter))));
                }
                for (k, e) in level_sorted[start..end].iter().enumerate() {
                    if e.order != k {
                        return Err(err(format!("order indices at level {n} are not 0..{}", end - start)));
                    }
                    if e.source >= below {
                        return Err(err(format!("edge source {} out of range at level {n}", e.source)));
                    }
                    used[e.source] = true;
                }
                fiber[v] = start..end;
                start = end;
            }
            if start != level_sorted.len() {
                return Err(err(format!("edge range out of range at level {n}")));
            }
            if let Some(v) = used.iter().position(|&u| !u) {
                return Err(err(format!("vertex {} at level {} has no outgoing edge", vertices[n - 1].name(v as Letter), n - 1)));
            }
            sorted.push(level_sorted);
            fibers.push(fiber);
        }
        Ok(OrderedBratteliDiagram { vertices, edges: sorted, fibers, labels })
    }

    /// `N`, the deepest vertex level.
    pub fn depth(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self, n: usize) -> &Alphabet {
        &self.vertices[n]
    }

    /// `E_n`, grouped by range and ordered within each fiber.
    pub fn edges(&self, n: usize) -> &[Edge] {
        &self.edges[n - 1]
    }

    /// The incoming fiber of `v ∈ V_n`, in order.
    pub fn fiber(&self, n: usize, v: usize) -> &[Edge] {
        &self.edges[n - 1][self.fibers[n - 1][v].clone()]
    }

    fn fiber_start(&self, n: usize, v: usize) -> usize {
        self.fibers[n - 1][v].start
    }

    pub fn labels(&self) -> Option<(&Alphabet, &[Letter])> {
        self.labels.as_ref().map(|(a, l)| (a, &l[..]))
    }

    /// Sizes of the fibers at `V_n`.
    pub fn fiber_sizes(&self, n: usize) -> Vec<usize> {
        self.fibers[n - 1].iter().map(|r| r.len()).collect()
    }

    /// `|E_{0,n}|` into each vertex of `V_n`.
    pub fn path_counts(&self, n: usize) -> Result<Vec<u64>> {
        let mut counts = vec![1u64];
        for m in 1..=n {
            counts = (0..self.vertices[m].len())
                .map(|v| self.fiber(m, v).iter().try_fold(0u64, |s, e| s.checked_add(counts[e.source])))
                .collect::<Option<Vec<_>>>()
                .ok_or(Error::Overflow("path count"))?;
        }
        Ok(counts)
    }
}

/// The diagram of a directive sequence: `V_n = A_n` for `n ≥ 1`, an edge `(w, v, k)`
/// for each letter `w` at position `k` of `τ_{n-1}(v)`, and level-1 edges
/// `(v_0, v, k)` labelled by `τ_0(v)[k]`.
pub fn from_directive(d: &DirectiveSequence, depth: usize) -> Result<OrderedBratteliDiagram> {
    if depth == 0 || !d.has_levels(depth) {
        return Err(Error::DepthOutOfRange { requested: depth, available: d.explicit_depth() });
    }
    let mut vertices = vec![Alphabet::new(["v0"])?];
    let mut edges = Vec::with_capacity(depth);
    let mut labels = Vec::new();
    for n in 0..depth {
        let m = d.level(n)?;
        vertices.push(m.source().clone());
        let mut level = Vec::new();
        for (v, img) in m.images().iter().enumerate() {
            for (k, &w) in img.iter().enumerate() {
                let source = if n == 0 { 0 } else { w as usize };
                level.push(Edge { source, range: v, order: k });
                if n == 0 {
                    labels.push(w);
                }
            }
        }
        edges.push(level);
    }
    OrderedBratteliDiagram::new(vertices, edges, Some((d.alphabet(0)?, labels)))
}

/// The directive sequence read on the diagram: `τ_n(v)`, `n ≥ 1`, lists the
/// sources of the fiber of `v ∈ V_{n+1}` in order. `τ_0(v)` lists the labels
/// of the fiber of `v ∈ V_1`, or the level-1 edges themselves (named `e<i>`)
/// when the diagram is unlabelled.
pub fn read_directive(b: &OrderedBratteliDiagram, depth: usize) -> Result<DirectiveSequence> {
    if depth == 0 || depth > b.depth() {
        return Err(Error::DepthOutOfRange { requested: depth, available: b.depth() });
    }
    let mut levels = Vec::with_capacity(depth);
    let v1 = b.vertices(1).clone();
    let (target0, images0) = match b.labels() {
        Some((alpha, ls)) => {
            let imgs = b.fibers[0].iter().map(|r| Word::new(ls[r.clone()].to_vec())).collect();
            (alpha.clone(), imgs)
        }
        None => {
            let alpha = Alphabet::new((0..b.edges(1).len()).map(|i| format!("e{i}")))?;
            let imgs = b.fibers[0].iter().map(|r| Word::new(r.clone().map(|i| i as Letter).collect())).collect();
            (alpha, imgs)
        }
    };
    levels.push(Morphism::new(v1, target0, images0)?);
    for n in 2..=depth {
        let imgs = (0..b.vertices(n).len())
            .map(|v| Word::new(b.fiber(n, v).iter().map(|e| e.source as Letter).collect()))
            .collect();
        levels.push(Morphism::new(b.vertices(n).clone(), b.vertices(n - 1).clone(), imgs)?);
    }
    DirectiveSequence::new(levels)
}

/// Whether every fiber at `V_{n+1}` has the same size.
pub fn has_equal_path_numbers(b: &OrderedBratteliDiagram, n: usize) -> Result<bool> {
    if n + 1 > b.depth() {
        return Err(Error::DepthOutOfRange { requested: n + 1, available: b.depth() });
    }
    let sizes = b.fiber_sizes(n + 1);
    Ok(sizes.iter().all(|&s| s == sizes[0]))
}

/// A finite path `e_{n+1} ⋯ e_m`, as edge indices per level, bottom first.
pub type Path = Vec<usize>;

/// All paths from `V_n` to `v ∈ V_m`, in the order compared highest edge
/// first.
fn paths_into(b: &OrderedBratteliDiagram, n: usize, m: usize, v: usize) -> Vec<Path> {
    if m == n {
        return vec![Vec::new()];
    }
    let base = b.fiber_start(m, v);
    let mut out = Vec::new();
    for (k, e) in b.fiber(m, v).iter().enumerate() {
        for mut p in paths_into(b, n, m - 1, e.source) {
            p.push(base + k);
            out.push(p);
        }
    }
    out
}

/// Contraction at `0 = n_0 < n_1 < ⋯ < n_k ≤ N`: `V′_j = V_{n_j}` and
/// `E′_j = E_{n_{j-1}, n_j}`, ordered highest edge first. A labelled diagram
/// keeps, on each level-1 path, the label of its bottom edge.
pub fn telescope(b: &OrderedBratteliDiagram, cuts: &[usize]) -> Result<OrderedBratteliDiagram> {
    if cuts.len() < 2 || cuts[0] != 0 || cuts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidCuts(format!("{cuts:?} must be strictly increasing from 0 with two or more entries")));
    }
    if *cuts.last().unwrap() > b.depth() {
        return Err(Error::InvalidCuts(format!("cut level {} beyond depth {}", cuts.last().unwrap(), b.depth())));
    }
    let vertices: Vec<Alphabet> = cuts.iter().map(|&n| b.vertices(n).clone()).collect();
    let mut edges = Vec::with_capacity(cuts.len() - 1);
    let mut labels = Vec::new();
    for (j, w) in cuts.windows(2).enumerate() {
        let (n, m) = (w[0], w[1]);
        let mut level = Vec::new();
        for v in 0..b.vertices(m).len() {
            for (k, p) in paths_into(b, n, m, v).into_iter().enumerate() {
                let source = b.edges(n + 1)[p[0]].source;
                level.push(Edge { source, range: v, order: k });
                if j == 0 {
                    if let Some((_, ls)) = b.labels() {
                        labels.push(ls[p[0]]);
                    }
                }
            }
        }
        edges.push(level);
    }
    let labels = b.labels().map(|(a, _)| (a.clone(), labels));
    OrderedBratteliDiagram::new(vertices, edges, labels)
}

/// The `⪯`-successor of a path in `E_{0,n}`: the lowest non-maximal edge
/// moves to its successor in the fiber and everything below becomes
/// minimal. `None` on the maximal path into its top vertex.
pub fn vershik_successor(b: &OrderedBratteliDiagram, path: &[usize]) -> Result<Option<Path>> {
    check_path(b, path)?;
    let Some(i) = (0..path.len()).find(|&i| {
        let e = b.edges(i + 1)[path[i]];
        e.order + 1 < b.fiber(i + 1, e.range).len()
    }) else {
        return Ok(None);
    };
    let mut out = path.to_vec();
    out[i] += 1;
    let mut v = b.edges(i + 1)[out[i]].source;
    for j in (0..i).rev() {
        out[j] = b.fiber_start(j + 1, v);
        v = b.edges(j + 1)[out[j]].source;
    }
    Ok(Some(out))
}

/// The minimal path in `E_{0,n}` into `v ∈ V_n`.
pub fn min_path(b: &OrderedBratteliDiagram, n: usize, v: usize) -> Path {
    let mut out = vec![0; n];
    let mut v = v;
    for j in (0..n).rev() {
        out[j] = b.fiber_start(j + 1, v);
        v = b.edges(j + 1)[out[j]].source;
    }
    out
}

fn check_path(b: &OrderedBratteliDiagram, path: &[usize]) -> Result<()> {
    if path.len() > b.depth() {
        return Err(Error::DepthOutOfRange { requested: path.len(), available: b.depth() });
    }
    for (i, &e) in path.iter().enumerate() {
        let edge = b.edges.get(i).and_then(|l| l.get(e)).ok_or_else(|| err(format!("edge {e} missing at level {}", i + 1)))?;
        if i + 1 < path.len() && b.edges(i + 2)[path[i + 1]].source != edge.range {
            return Err(err(format!("edges at levels {} and {} do not meet", i + 1, i + 2)));
        }
    }
    Ok(())
}

/// Whether the maximal (resp. minimal) edges select a single path in
/// `E_{0,N}` regardless of the top vertex, i.e. the composite of the
/// max-source (min-source) maps `V_N → V_1` is constant. Both must hold for
/// the window to be properly ordered at depth `N`.
pub fn properly_ordered_window(b: &OrderedBratteliDiagram) -> (bool, bool) {
    let unique = |pick_max: bool| {
        let mut current: Vec<usize> = (0..b.vertices(b.depth()).len()).collect();
        for n in (2..=b.depth()).rev() {
            current = current
                .iter()
                .map(|&v| {
                    let f = b.fiber(n, v);
                    if pick_max { f[f.len() - 1].source } else { f[0].source }
                })
                .collect();
            current.sort_unstable();
            current.dedup();
        }
        current.len() == 1
    };
    (unique(true), unique(false))
}

/// For each `n < N`, the least `m ≤ N` such that every vertex of `V_n` is
/// joined by a path to every vertex of `V_m`.
pub fn simplicity_window(b: &OrderedBratteliDiagram) -> Vec<Option<usize>> {
    (0..b.depth())
        .map(|n| {
            let mut reach: Vec<Vec<bool>> = (0..b.vertices(n).len())
                .map(|u| (0..b.vertices(n).len()).map(|w| w == u).collect())
                .collect();
            for m in n + 1..=b.depth() {
                reach = reach
                    .iter()
                    .map(|r| (0..b.vertices(m).len()).map(|v| b.fiber(m, v).iter().any(|e| r[e.source])).collect())
                    .collect();
                if reach.iter().all(|r| r.iter().all(|&x| x)) {
                    return Some(m);
                }
            }
            None
        })
        .collect()
}

/// Text format: `vertices <level>: <names>`, optional `labels: <names>`,
/// and `edge <level>: <source> -> <range> @<order>` with an optional
/// `= <label>` on level-1 edges.
pub fn write_diagram(b: &OrderedBratteliDiagram) -> String {
    let mut out = String::new();
    for (n, vs) in b.vertices.iter().enumerate() {
        writeln!(out, "vertices {n}: {}", vs.names().join(" ")).expect("string write");
    }
    if let Some((alpha, _)) = b.labels() {
        writeln!(out, "labels: {}", alpha.names().join(" ")).expect("string write");
    }
    for n in 1..=b.depth() {
        for (i, e) in b.edges(n).iter().enumerate() {
            let (s, r) = (b.vertices(n - 1).name(e.source as Letter), b.vertices(n).name(e.range as Letter));
            write!(out, "edge {n}: {s} -> {r} @{}", e.order).expect("string write");
            if let (1, Some((alpha, ls))) = (n, b.labels()) {
                write!(out, " = {}", alpha.name(ls[i])).expect("string write");
            }
            out.push('\n');
        }
    }
    out
}

pub fn parse_diagram(text: &str) -> Result<OrderedBratteliDiagram> {
    let perr = |line: usize, message: String| Error::Parse { line, message };
    let mut vertices: Vec<Option<Alphabet>> = Vec::new();
    let mut label_alpha: Option<Alphabet> = None;
    let mut raw_edges: Vec<(usize, usize, String, String, usize, Option<String>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = line.split_once(':').ok_or_else(|| perr(lineno, "missing ':'".into()))?;
        let mut head = head.split_whitespace();
        let kw = head.next().unwrap_or("");
        let level = head.next().map(|t| t.parse::<usize>().map_err(|_| perr(lineno, format!("invalid level {t:?}"))));
        if head.next().is_some() {
            return Err(perr(lineno, "unexpected tokens before ':'".into()));
        }
        match (kw, level) {
            ("vertices", Some(n)) => {
                let n = n?;
                if vertices.len() <= n {
                    vertices.resize(n + 1, None);
                }
                if vertices[n].is_some() {
                    return Err(perr(lineno, format!("vertices {n} defined twice")));
                }
                vertices[n] = Some(Alphabet::new(rest.split_whitespace()).map_err(|e| perr(lineno, e.to_string()))?);
            }
            ("labels", None) => {
                if label_alpha.is_some() {
                    return Err(perr(lineno, "labels defined twice".into()));
                }
                label_alpha = Some(Alphabet::new(rest.split_whitespace()).map_err(|e| perr(lineno, e.to_string()))?);
            }
            ("edge", Some(n)) => {
                let n = n?;
                let (body, label) = match rest.split_once('=') {
                    Some((b, l)) => (b.trim(), Some(l.trim().to_string())),
                    None => (rest, None),
                };
                let toks: Vec<&str> = body.split_whitespace().collect();
                let [s, "->", r, ord] = toks[..] else {
                    return Err(perr(lineno, "expected `<source> -> <range> @<order>`".into()));
                };
                let ord = ord
                    .strip_prefix('@')
                    .and_then(|o| o.parse().ok())
                    .ok_or_else(|| perr(lineno, format!("invalid order index {ord:?}")))?;
                raw_edges.push((lineno, n, s.to_string(), r.to_string(), ord, label));
            }
            _ => return Err(perr(lineno, format!("unrecognized line {line:?}"))),
        }
    }
    let vertices: Vec<Alphabet> = vertices
        .into_iter()
        .enumerate()
        .map(|(n, v)| v.ok_or_else(|| perr(0, format!("vertices {n} missing"))))
        .collect::<Result<_>>()?;
    if vertices.len() < 2 {
        return Err(perr(0, "need vertex levels 0 and 1 at least".into()));
    }
    let mut edges = vec![Vec::new(); vertices.len() - 1];
    let mut labels = Vec::new();
    for (lineno, n, s, r, order, label) in raw_edges {
        if n == 0 || n >= vertices.len() {
            return Err(perr(lineno, format!("edge level {n} out of range")));
        }
        let find = |level: usize, name: &str| {
            vertices[level].letter(name).map(|l| l as usize).ok_or_else(|| perr(lineno, format!("unknown vertex {name:?} at level {level}")))
        };
        edges[n - 1].push(Edge { source: find(n - 1, &s)?, range: find(n, &r)?, order });
        match (n, label, &label_alpha) {
            (1, Some(l), Some(a)) => labels.push(a.letter(&l).ok_or_else(|| perr(lineno, format!("unknown label {l:?}")))?),
            (1, None, None) => {}
            (1, _, _) => return Err(perr(lineno, "level-1 edges need labels exactly when `labels:` is given".into())),
            (_, Some(_), _) => return Err(perr(lineno, "only level-1 edges carry labels".into())),
            _ => {}
        }
    }
    let labels = label_alpha.map(|a| (a, labels));
    OrderedBratteliDiagram::new(vertices, edges, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::{p4, period_doubling, three_adic};
    use crate::sadic::contract;
    use proptest::prelude::*;

    fn level_words_agree(a: &DirectiveSequence, b: &DirectiveSequence, depth: usize) {
        for n in 0..depth {
            assert_eq!(a.level_words(n).unwrap(), b.level_words(n).unwrap(), "level {n}");
        }
    }

    /// Two vertices per level; fibers of sizes 2 and 3 at level 2.
    fn small() -> OrderedBratteliDiagram {
        parse_diagram(
            "vertices 0: v0\nvertices 1: a b\nvertices 2: c d\n\
             edge 1: v0 -> a @0\nedge 1: v0 -> b @0\nedge 1: v0 -> b @1\n\
             edge 2: a -> c @0\nedge 2: b -> c @1\n\
             edge 2: b -> d @0\nedge 2: a -> d @1\nedge 2: b -> d @2\n",
        )
        .unwrap()
    }

    #[test]
    fn p4_diagram() {
        let b = from_directive(&p4(), 5).unwrap();
        for n in 1..=5 {
            assert_eq!(b.vertices(n).len(), 2);
        }
        assert_eq!(b.fiber_sizes(1), vec![1, 1]);
        for n in 2..=5 {
            assert_eq!(b.fiber_sizes(n), vec![4, 4]);
            assert!(has_equal_path_numbers(&b, n - 1).unwrap());
        }
        assert_eq!(b.path_counts(3).unwrap(), vec![16, 16]);
        assert_eq!(properly_ordered_window(&b), (true, true));
        assert_eq!(simplicity_window(&b)[1], Some(2));
    }

    #[test]
    fn directive_round_trip() {
        for d in [p4(), period_doubling(), three_adic()] {
            let b = from_directive(&d, 5).unwrap();
            let r = read_directive(&b, 5).unwrap();
            level_words_agree(&d, &r, 5);
            for n in 1..5 {
                assert_eq!(*r.level(n).unwrap(), *d.level(n).unwrap());
            }
            assert_eq!(from_directive(&r, 5).unwrap(), b);
        }
    }

    #[test]
    fn unlabelled_reading_uses_edges() {
        let b = small();
        let d = read_directive(&b, 2).unwrap();
        assert_eq!(d.alphabet(0).unwrap().names(), ["e0", "e1", "e2"]);
        assert_eq!(d.level(0).unwrap().images(), &[Word::new(vec![0]), Word::new(vec![1, 2])]);
        assert_eq!(d.level(1).unwrap().images(), &[Word::new(vec![0, 1]), Word::new(vec![1, 0, 1])]);
        let back = from_directive(&d, 2).unwrap();
        assert_eq!(back.path_counts(2).unwrap(), b.path_counts(2).unwrap());
    }

    #[test]
    fn equal_path_numbers() {
        let b = small();
        assert!(!has_equal_path_numbers(&b, 1).unwrap());
        assert!(!has_equal_path_numbers(&b, 0).unwrap());
        assert!(has_equal_path_numbers(&b, 2).is_err());
        let t = telescope(&from_directive(&p4(), 5).unwrap(), &[0, 2, 5]).unwrap();
        assert_eq!(t.fiber_sizes(2), vec![64, 64]);
        assert!(has_equal_path_numbers(&t, 1).unwrap());
    }

    #[test]
    fn identity_telescope() {
        let b = from_directive(&p4(), 4).unwrap();
        assert_eq!(telescope(&b, &[0, 1, 2, 3, 4]).unwrap(), b);
        assert!(telescope(&b, &[0, 2, 2]).is_err());
        assert!(telescope(&b, &[1, 2]).is_err());
        assert!(telescope(&b, &[0, 5]).is_err());
    }

    #[test]
    fn telescope_order_by_hand() {
        let b = small();
        let t = telescope(&b, &[0, 2]).unwrap();
        // paths into d, highest edge first: (b->d @0) over the two b-edges,
        // then (a->d @1) over the a-edge, then (b->d @2) over the b-edges
        let d_fiber: Vec<usize> = paths_into(&b, 0, 2, 1).iter().map(|p| p[0]).collect();
        assert_eq!(d_fiber, vec![1, 2, 0, 1, 2]);
        assert_eq!(t.fiber_sizes(1), vec![3, 5]);
        // unlabelled: the new level-1 edges are the paths themselves
        let r = read_directive(&t, 1).unwrap();
        assert_eq!(r.level(0).unwrap().images()[1], Word::new(vec![3, 4, 5, 6, 7]));
        // with labels, the telescoped word is the contracted one
        let text = write_diagram(&b).replace("vertices 1:", "labels: x y z\nvertices 1:");
        let text = text.replace("v0 -> a @0", "v0 -> a @0 = x").replace("v0 -> b @0", "v0 -> b @0 = y").replace("v0 -> b @1", "v0 -> b @1 = z");
        let lb = parse_diagram(&text).unwrap();
        let r = read_directive(&telescope(&lb, &[0, 2]).unwrap(), 1).unwrap();
        assert_eq!(r.level(0).unwrap().images()[1], Word::new(vec![1, 2, 0, 1, 2]));
        level_words_agree(&r, &contract(&read_directive(&lb, 2).unwrap(), &[0, 2]).unwrap(), 1);
    }

    #[test]
    fn telescope_matches_contract() {
        for d in [p4(), period_doubling()] {
            let b = from_directive(&d, 6).unwrap();
            for cuts in [vec![0, 2, 4, 6], vec![0, 1, 3], vec![0, 3, 5]] {
                let t = telescope(&b, &cuts).unwrap();
                let c = from_directive(&contract(&d, &cuts).unwrap(), cuts.len() - 1).unwrap();
                for k in 1..cuts.len() {
                    assert_eq!(t.path_counts(k).unwrap(), c.path_counts(k).unwrap());
                }
                assert_eq!(t, c);
            }
        }
    }

    #[test]
    fn single_vertex_levels() {
        let text = "vertices 0: v0\nvertices 1: a\nvertices 2: b\nvertices 3: c\n\
                    edge 1: v0 -> a @0\nedge 1: v0 -> a @1\n\
                    edge 2: a -> b @0\nedge 2: a -> b @1\nedge 2: a -> b @2\n\
                    edge 3: b -> c @0\nedge 3: b -> c @1\n";
        let b = parse_diagram(text).unwrap();
        let d = read_directive(&b, 3).unwrap();
        for n in 1..3 {
            assert_eq!(d.alphabet(n).unwrap().len(), 1);
        }
        assert_eq!(d.level_lengths(2).unwrap()[0], 12);
        assert_eq!(d.scale_divisors(3).unwrap(), vec![2, 6, 12]);
    }

    #[test]
    fn vershik_walks_level_words() {
        let d = p4();
        let b = from_directive(&d, 3).unwrap();
        let (alpha, ls) = b.labels().unwrap();
        assert_eq!(alpha.len(), 2);
        for v in 0..2 {
            let mut path = min_path(&b, 3, v);
            let mut spelled = vec![ls[path[0]]];
            while let Some(next) = vershik_successor(&b, &path).unwrap() {
                spelled.push(ls[next[0]]);
                path = next;
            }
            assert_eq!(Word::new(spelled), d.level_word(2, v as Letter).unwrap());
        }
        assert!(vershik_successor(&b, &[0, 5]).is_err());
    }

    #[test]
    fn text_round_trip_and_errors() {
        let b = from_directive(&p4(), 3).unwrap();
        let text = write_diagram(&b);
        assert!(text.contains("labels: 0 1"));
        assert!(text.contains("edge 1: v0 -> 1 @0 = 0"));
        assert_eq!(parse_diagram(&text).unwrap(), b);
        let s = small();
        assert_eq!(parse_diagram(&write_diagram(&s)).unwrap(), s);
        let bad = [
            "vertices 0: v0\nvertices 1: a\n",
            "vertices 0: v0\nvertices 1: a\nedge 1: v0 -> a @1\n",
            "vertices 0: v0 w0\nvertices 1: a\nedge 1: v0 -> a @0\n",
            "vertices 0: v0\nvertices 1: a\nedge 1: v0 -> z @0\n",
            "vertices 0: v0\nvertices 1: a\nedge 1: v0 a @0\n",
            "vertices 0: v0\nvertices 1: a b\nedge 1: v0 -> a @0\n",
            "vertices 0: v0\nvertices 2: a\n",
            "vertices 0: v0\nlabels: x\nvertices 1: a\nedge 1: v0 -> a @0\n",
        ];
        for text in bad {
            assert!(parse_diagram(text).is_err(), "{text}");
        }
    }

    fn random_diagram(seed: u64, depth: usize, equal: bool) -> OrderedBratteliDiagram {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut vertices = vec![Alphabet::new(["v0"]).unwrap()];
        let mut edges = Vec::new();
        for n in 1..=depth {
            let here = rng.gen_range(1..=3usize);
            let below = vertices[n - 1].len();
            vertices.push(Alphabet::numeric(here));
            let common = rng.gen_range(below..=below + 2);
            let mut level = Vec::new();
            for v in 0..here {
                let size = if equal { common } else { rng.gen_range(below..=below + 2) };
                // the first `below` edges hit every source, so every vertex has an outgoing edge
                let mut srcs: Vec<usize> = (0..below).chain((below..size).map(|_| rng.gen_range(0..below))).collect();
                srcs.rotate_left(rng.gen_range(0..size));
                level.extend(srcs.into_iter().enumerate().map(|(k, source)| Edge { source, range: v, order: k }));
            }
            edges.push(level);
        }
        OrderedBratteliDiagram::new(vertices, edges, None).unwrap()
    }

    proptest! {
        #[test]
        fn equal_path_numbers_iff_constant_length(seed in any::<u64>(), equal in any::<bool>()) {
            let b = random_diagram(seed, 4, equal);
            let d = read_directive(&b, 4).unwrap();
            for n in 0..4 {
                let constant = d.level(n).unwrap().flags().constant_length.is_some();
                prop_assert_eq!(has_equal_path_numbers(&b, n).unwrap(), constant);
            }
            let back = from_directive(&d, 4).unwrap();
            for n in 1..=4 {
                prop_assert_eq!(back.path_counts(n).unwrap(), b.path_counts(n).unwrap());
                prop_assert_eq!(back.fiber_sizes(n), b.fiber_sizes(n));
            }
            let t = telescope(&b, &[0, 2, 4]).unwrap();
            prop_assert_eq!(t.path_counts(2).unwrap(), b.path_counts(4).unwrap());
            if equal {
                prop_assert!(has_equal_path_numbers(&t, 1).unwrap());
            }
        }
    }
}
