use std::fs;
use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use toeplitz_core::constructions::{
    check_counterexample_claims, check_cyclic_aut_claims, gen_counterexample, gen_cyclic_aut_example,
    gen_flip_example, language_closed_under, AutExampleParams, CounterexampleParams,
};
use toeplitz_core::format::write_directive;
use toeplitz_core::inverse::{inverse_conjugacy_test, theta_criterion};
use toeplitz_core::rank2::{
    canonical_point, chi, chi_conjugacy_criterion, dkl_conjugacy_test, find_strong_rank2_cuts, parts, sts2_witness,
};
use toeplitz_core::sadic::{exact_factor_length, language, point_window, recognizability_radius};
use toeplitz_core::skeletons::{random_single_hole_tower, single_hole_to_rank2, skeleton_of_window, write_tower};
use toeplitz_core::{bratteli, Anchor, DirectiveSequence, Error, PointWindow, Status, Word};

use crate::input::{self, builtin, Input};
use crate::report::{Report, Section};
use crate::{AnalyzeArgs, AnalyzeKind, ClaimKind, Cli, CliError, Cmd, ExportArgs, ExportKind, Format, GenCmd, TestCmd};

type Result<T> = std::result::Result<T, CliError>;

/// Longest block or word printed in full.
const SHOW_LIMIT: usize = 96;
/// Longest language listed word by word.
const LIST_LIMIT: usize = 256;
/// Cap on lengths checked for closure under the flip.
const FLIP_CLOSURE_LEN: usize = 24;

pub fn run(cli: &Cli) -> Result<u8> {
    match &cli.cmd {
        Cmd::Gen(g) => gen(cli, g),
        Cmd::Analyze(a) => analyze(cli, a),
        Cmd::Test(t) => test(cli, t),
        Cmd::Export(e) => export(cli, e),
    }
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn render(cli: &Cli, r: &Report, overall: Status) -> String {
    match cli.format {
        Format::Text => r.render_text(overall),
        Format::Structured => r.render_json(overall),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn print_out(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::Io(format!("stdout: {e}")))
}

/// Reports of analyses and tests go to `-o` when given, else stdout.
fn emit(cli: &Cli, r: &Report, overall: Status) -> Result<u8> {
    let text = render(cli, r, overall);
    match &cli.output {
        Some(p) => write_file(p, &text)?,
        None => print_out(&text)?,
    }
    Ok(overall.exit_code() as u8)
}

/// Generators write the artifact to `-o` and the report to stdout, or the
/// artifact to stdout and the report to stderr.
fn emit_generated(cli: &Cli, artifact: &str, r: &Report, overall: Status) -> Result<u8> {
    let text = render(cli, r, overall);
    match &cli.output {
        Some(p) => {
            write_file(p, artifact)?;
            print_out(&text)?;
        }
        None => {
            print_out(artifact)?;
            eprint!("{text}");
        }
    }
    Ok(overall.exit_code() as u8)
}

fn with_header(header: &str, body: &str) -> String {
    format!("# construction: {header}\n{body}")
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn show(w: &Word) -> String {
    if w.len() <= SHOW_LIMIT {
        w.to_string()
    } else {
        format!("<{} letters>", w.len())
    }
}

/// Claim failures are findings, not errors.
fn claim_section<T>(name: &str, depth: usize, r: std::result::Result<T, Error>, body: impl Fn(&T) -> String) -> Result<Section> {
    match r {
        Ok(v) => Ok(Section::new(name, Status::Witnessed).depth(depth).evidence("all claims hold").text(&body(&v))),
        Err(Error::Claim(msg)) => Ok(Section::new(name, Status::Refuted).depth(depth).evidence(msg)),
        Err(e) => Err(e.into()),
    }
}

// ---------------------------------------------------------------------------
// gen

fn counterexample_header(d: &DirectiveSequence, depth: usize) -> Result<String> {
    // m_n is the ratio d_{n+1} / (4 d_n)
    let s = d.scale_divisors(depth + 2)?;
    let m: Vec<u64> = s.windows(2).map(|w| w[1] / (4 * w[0])).collect();
    Ok(format!("counterexample depth={depth} m={}", join(&m)))
}

fn flip_claims(d: &DirectiveSequence, flip: &[u32], depth: usize) -> Result<Section> {
    let len = exact_factor_length(d, depth - 1)?.min(FLIP_CLOSURE_LEN);
    let closed = language_closed_under(d, flip, len, depth)?;
    let involution = flip.iter().enumerate().all(|(i, &c)| flip[c as usize] as usize == i);
    let mut s = Section::new("flip-claims", if closed && involution { Status::Witnessed } else { Status::Refuted })
        .depth(depth)
        .line(format!("flip: {}", join(flip)))
        .line(format!("flip is an involution: {involution}"));
    s = s.line(format!("language closed under the flip for all lengths <= {len}: {closed}"));
    Ok(match (closed, involution) {
        (true, true) => s.evidence("the flip maps the checked languages onto themselves"),
        (false, _) => s.evidence("the flip image of some checked language word is not in the language"),
        _ => s.evidence("the flip is not an involution"),
    })
}

fn gen(cli: &Cli, g: &GenCmd) -> Result<u8> {
    match g {
        GenCmd::Counterexample { depth, m_schedule } => {
            let depth = depth.get();
            let mut params = CounterexampleParams::with_default_schedule(depth);
            for (n, &m) in m_schedule.iter().enumerate() {
                match params.m_schedule.get_mut(n) {
                    Some(slot) => *slot = m,
                    None => params.m_schedule.push(m),
                }
            }
            let d = gen_counterexample(&params)?.truncated(depth + 2)?;
            let header = counterexample_header(&d, depth)?;
            let mut r = Report::new("gen counterexample", vec![kv("depth", depth), kv("m-schedule", join(&params.m_schedule))], cli.seed);
            r.push(claim_section("counterexample-claims", depth, check_counterexample_claims(&d, depth), |c| c.to_string())?);
            let o = r.overall();
            emit_generated(cli, &with_header(&header, &write_directive(&d)), &r, o)
        }
        GenCmd::FlipAut { depth } => {
            let depth = depth.get();
            let ex = gen_flip_example(depth)?;
            let d = ex.system.truncated(depth + 1)?;
            let mut r = Report::new("gen flip-aut", vec![kv("depth", depth)], cli.seed);
            r.push(flip_claims(&d, &ex.flip, depth)?);
            let o = r.overall();
            emit_generated(cli, &with_header(&format!("flip-aut depth={depth}"), &write_directive(&d)), &r, o)
        }
        GenCmd::CyclicAut { n, m, depth } => {
            let depth = depth.get();
            let params = match m {
                Some(m) => AutExampleParams { n: *n, m: *m, depth },
                None => AutExampleParams::with_default_m(*n, depth)?,
            };
            let ex = gen_cyclic_aut_example(&params)?;
            let d = ex.system.truncated(depth + 1)?;
            let mut r = Report::new("gen cyclic-aut", vec![kv("n", params.n), kv("m", params.m), kv("depth", depth)], cli.seed);
            r.push(claim_section("cyclic-aut-claims", depth, check_cyclic_aut_claims(&ex, depth), |c| c.to_string())?);
            let o = r.overall();
            let header = format!("cyclic-aut n={} m={} depth={depth}", params.n, params.m);
            emit_generated(cli, &with_header(&header, &write_directive(&d)), &r, o)
        }
        GenCmd::System { name, depth } => {
            let depth = depth.get();
            let d = builtin(name).expect("clap checks the name").truncated(depth)?;
            let mut r = Report::new("gen system", vec![kv("name", name), kv("depth", depth)], cli.seed);
            r.push(
                Section::new("system", Status::Witnessed)
                    .evidence(format!("{depth} levels"))
                    .line(format!("scale: {}", join(&d.scale_divisors(depth)?))),
            );
            emit_generated(cli, &write_directive(&d), &r, Status::Witnessed)
        }
        GenCmd::Tower { levels, letters, min_ratio, max_ratio } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let t = random_single_hole_tower(&mut rng, *levels, *letters, *min_ratio, *max_ratio)?;
            let cfg = vec![kv("levels", levels), kv("letters", letters), kv("min-ratio", min_ratio), kv("max-ratio", max_ratio)];
            let mut r = Report::new("gen tower", cfg, cli.seed);
            r.push(Section::new("tower", Status::Witnessed).line(format!("periods: {}", join(t.periods()))));
            emit_generated(cli, &write_tower(&t), &r, Status::Witnessed)
        }
        GenCmd::Bratteli { system, depth } => {
            let depth = depth.get();
            let d = input::load_system(system)?;
            let b = bratteli::from_directive(&d, depth)?;
            let equal = (0..b.depth()).map(|n| bratteli::has_equal_path_numbers(&b, n)).collect::<std::result::Result<Vec<bool>, _>>()?;
            let mut r = Report::new("gen bratteli", vec![kv("system", system), kv("depth", depth)], cli.seed);
            r.push(
                Section::new("diagram", Status::Witnessed)
                    .line(format!("vertices per level: {}", join(&(0..=b.depth()).map(|n| b.vertices(n).len()).collect::<Vec<_>>())))
                    .line(format!("equal path numbers at every level: {}", equal.iter().all(|&e| e))),
            );
            emit_generated(cli, &bratteli::write_diagram(&b), &r, Status::Witnessed)
        }
    }
}

// ---------------------------------------------------------------------------
// analyze

fn periods_for(d: &DirectiveSequence, p: Option<u64>, depth: usize) -> Result<Vec<u64>> {
    Ok(match p {
        Some(0) => return Err(CliError::Usage("--p must be positive".into())),
        Some(p) => vec![p],
        None => {
            let mut v: Vec<u64> = d.scale_divisors(depth)?.into_iter().filter(|&q| q > 1).collect();
            v.dedup();
            v
        }
    })
}

fn point(cli: &Cli, d: &DirectiveSequence, a: &AnalyzeArgs) -> Result<(Anchor, PointWindow)> {
    let depth = a.depth.get();
    if !a.random_anchor {
        return Ok(canonical_point(d, depth, a.half_width)?);
    }
    if !d.has_levels(depth) {
        return Err(Error::DepthOutOfRange { requested: depth, available: d.explicit_depth() }.into());
    }
    let shortest = d.level_lengths(depth - 1)?.iter().copied().min().unwrap_or(1);
    let margin = a.half_width.min(shortest.saturating_sub(1) / 2);
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let anchor = Anchor::random(d, depth - 1, margin, &mut rng)?;
    let x = point_window(d, &anchor, a.half_width.min(shortest))?;
    Ok((anchor, x))
}

fn window_line(anchor: &Anchor, x: &PointWindow) -> String {
    format!(
        "point anchored at level {} letter {} offset {}; window [{}, {})",
        anchor.level, anchor.letter, anchor.offset, x.start(), x.end()
    )
}

fn analyze(cli: &Cli, a: &AnalyzeArgs) -> Result<u8> {
    let depth = a.depth.get();
    let d = input::load_system(&a.system)?;
    let kind = format!("{:?}", a.what).to_lowercase();
    let mut cfg = vec![kv("system", &a.system), kv("depth", depth)];
    let mut r;
    match a.what {
        AnalyzeKind::Scale => {
            r = Report::new("analyze scale", cfg, cli.seed);
            let mut s = Section::new("scale", Status::Witnessed).depth(depth);
            for (n, dn) in d.scale_divisors(depth)?.iter().enumerate() {
                s = s.line(format!("d_{n}={dn}"));
            }
            r.push(s);
        }
        AnalyzeKind::Language => {
            cfg.push(kv("length", a.length));
            r = Report::new("analyze language", cfg, cli.seed);
            let lang = language(&d, a.length, depth)?;
            let status = if lang.exact { Status::Witnessed } else { Status::Unknown };
            let ev = if lang.exact {
                format!("{} words of length {}; complete", lang.len(), a.length)
            } else {
                format!("{} words of length {} found; the level words at this depth may miss some", lang.len(), a.length)
            };
            let mut s = Section::new("language", status).depth(depth).evidence(ev);
            if lang.len() <= LIST_LIMIT {
                for w in &lang.words {
                    s = s.line(show(w));
                }
            }
            r.push(s);
        }
        AnalyzeKind::Recognizability => {
            cfg.push(kv("level", a.level));
            r = Report::new("analyze recognizability", cfg, cli.seed);
            let s = match recognizability_radius(&d, a.level, depth, None)? {
                Some(c) => Section::new("recognizability", Status::Witnessed)
                    .depth(depth)
                    .evidence(format!("radius {} at level {}", c.radius, c.level))
                    .line(format!("every word of length {} fixes the covering level-{} block", c.verified_word_length, c.level)),
                None => Section::new("recognizability", Status::Unknown)
                    .depth(depth)
                    .evidence(format!("no radius found for level {} within the languages available", a.level)),
            };
            r.push(s);
        }
        AnalyzeKind::Cuts | AnalyzeKind::Skeleton => {
            cfg.push(kv("half-width", a.half_width));
            cfg.push(kv("anchor", if a.random_anchor { "random" } else { "canonical" }));
            if let Some(p) = a.p {
                cfg.push(kv("p", p));
            }
            r = Report::new(&format!("analyze {kind}"), cfg, cli.seed);
            let (anchor, x) = point(cli, &d, a)?;
            for p in periods_for(&d, a.p, depth)? {
                let mut s = Section::new(&format!("{kind} p={p}"), Status::Witnessed).depth(depth).line(window_line(&anchor, &x));
                if a.what == AnalyzeKind::Cuts {
                    let cuts = find_strong_rank2_cuts(&x, p)?;
                    s = s.evidence(format!("{} phases with exactly two blocks", cuts.len()));
                    for c in cuts {
                        let blocks: Vec<String> = c.blocks.iter().map(show).collect();
                        let cert = match c.aligned_level {
                            Some(n) => format!("certified by level {n}"),
                            None => "window only".to_string(),
                        };
                        s = s.line(format!("offset {}: {} ({cert})", c.offset, blocks.join(" | ")));
                    }
                } else {
                    let sk = skeleton_of_window(&x, p)?;
                    s = s
                        .evidence(format!("{} holes; essential: {}", sk.hole_count(), sk.is_essential()))
                        .line(if p as usize <= SHOW_LIMIT * 4 { sk.render() } else { format!("<period {p}>") });
                }
                r.push(s);
            }
        }
        AnalyzeKind::Parts | AnalyzeKind::Chi => {
            if let Some(p) = a.p {
                cfg.push(kv("p", p));
            }
            r = Report::new(&format!("analyze {kind}"), cfg, cli.seed);
            for p in periods_for(&d, a.p, depth)? {
                let name = format!("{kind} p={p}");
                if a.what == AnalyzeKind::Parts {
                    let classes = parts(&d, p, depth)?;
                    let exact = classes.iter().all(|c| c.exact);
                    let mut s = Section::new(&name, if exact { Status::Witnessed } else { Status::Unknown })
                        .depth(depth)
                        .evidence(format!("{} classes{}", classes.len(), if exact { "" } else { "; some block languages are partial" }));
                    for c in &classes {
                        s = s.line(c.to_string());
                    }
                    r.push(s);
                } else {
                    let c = chi(&d, p, depth)?;
                    let exact = c.classes.iter().all(|c| c.exact);
                    let mut s = Section::new(&name, if exact { Status::Witnessed } else { Status::Unknown })
                        .depth(depth)
                        .evidence(format!("ell={} with {} starred classes", c.ell, c.classes.len()));
                    for k in &c.classes {
                        s = s.line(k.to_string());
                    }
                    r.push(s);
                }
            }
        }
    }
    let o = r.overall();
    emit(cli, &r, o)
}

// ---------------------------------------------------------------------------
// test

fn test(cli: &Cli, t: &TestCmd) -> Result<u8> {
    match t {
        TestCmd::Conjugacy { left, right, depth, max_p } => {
            let depth = depth.get();
            let dx = input::load_system(left)?;
            let dy = input::load_system(right)?;
            let mut cfg = vec![kv("left", left), kv("right", right), kv("depth", depth)];
            if let Some(p) = max_p {
                cfg.push(kv("max-p", p));
            }
            let mut r = Report::new("test conjugacy", cfg, cli.seed);
            let dkl = dkl_conjugacy_test(&dx, &dy, *max_p, depth)?;
            let mut s = Section::from_verdict("block-bijection", &dkl, |w| w.to_string());
            if let Some(w) = &dkl.witness {
                s = s.line(if w.phi.is_identity() { "phi is the identity" } else { "phi permutes blocks" }.to_string());
            }
            r.push(s);
            let crit = chi_conjugacy_criterion(&dx, &dy, depth)?;
            r.push(Section::from_verdict("part-class-criterion", &crit, |w| w.to_string()));
            let overall = if dkl.is_witnessed() { Status::Witnessed } else { r.overall() };
            emit(cli, &r, overall)
        }
        TestCmd::Inverse { system, depth } => {
            let depth = depth.get();
            let loaded = input::load(system)?;
            let mut r = Report::new("test inverse", vec![kv("system", system), kv("depth", depth)], cli.seed);
            let (d, tower) = match loaded.input {
                Input::Tower(t) => (single_hole_to_rank2(&t, depth + 1)?, Some(t)),
                other => (input::to_system(other)?, None),
            };
            let v = inverse_conjugacy_test(&d, depth)?;
            let mut overall = v.status;
            r.push(Section::from_verdict("inverse-symmetry", &v, |w| w.to_string()));
            if let (Some(t), true) = (tower, depth >= 2) {
                let th = theta_criterion(&t, 2.min(depth - 1), depth - 1)?;
                if overall == Status::Unknown {
                    overall = th.status;
                }
                r.push(Section::from_verdict("theta-palindrome", &th, |w| format!("n={} theta={}", w.n, join(&w.theta))));
            }
            emit(cli, &r, overall)
        }
        TestCmd::Sts2 { system, p, m, depth } => {
            let depth = depth.get();
            let d = input::load_system(system)?;
            let cfg = vec![kv("system", system), kv("p", p), kv("m", m), kv("depth", depth)];
            let mut r = Report::new("test sts2", cfg, cli.seed);
            let s = match sts2_witness(&d, *p, *m, depth)? {
                Some(w) => Section::new("strong-rank-2", Status::Witnessed)
                    .depth(depth)
                    .evidence(format!("q={} r={} from level {}", w.q, w.r, w.level))
                    .line(format!("u = {}", show(&w.u)))
                    .line(format!("v = {}", show(&w.v))),
                None => Section::new("strong-rank-2", Status::Unknown)
                    .depth(depth)
                    .evidence("no pair of equal-length level words qualifies within depth"),
            };
            r.push(s);
            let o = r.overall();
            emit(cli, &r, o)
        }
        TestCmd::Claims { system, kind, depth } => claims(cli, system, *kind, *depth),
    }
}

fn header_field<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    header.split_whitespace().find_map(|t| t.strip_prefix(key)?.strip_prefix('='))
}

fn header_num<T: std::str::FromStr>(header: &str, key: &str) -> Result<T> {
    header_field(header, key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| CliError::Input(format!("construction header lacks a valid {key}=")))
}

fn claims(cli: &Cli, source: &str, kind: Option<ClaimKind>, depth: Option<usize>) -> Result<u8> {
    let loaded = input::load(source)?;
    let header = loaded.construction.clone().unwrap_or_default();
    let from_header = match header.split_whitespace().next() {
        Some("counterexample") => Some(ClaimKind::Counterexample),
        Some("flip-aut") => Some(ClaimKind::FlipAut),
        Some("cyclic-aut") => Some(ClaimKind::CyclicAut),
        _ => None,
    };
    let kind = kind
        .or(from_header)
        .ok_or_else(|| CliError::Usage(format!("{source}: no construction header; pass --kind")))?;
    let Input::System(d) = loaded.input else {
        return Err(CliError::Input(format!("{source}: claims need a directive-sequence file")));
    };
    let explicit = d.explicit_depth();
    let mut cfg = vec![kv("system", source), kv("kind", format!("{kind:?}").to_lowercase())];
    let mut r;
    match kind {
        ClaimKind::Counterexample => {
            let depth = depth.unwrap_or(explicit.saturating_sub(2)).max(1);
            cfg.push(kv("depth", depth));
            r = Report::new("test claims", cfg, cli.seed);
            r.push(claim_section("counterexample-claims", depth, check_counterexample_claims(&d, depth), |c| c.to_string())?);
        }
        ClaimKind::FlipAut => {
            let depth = depth.unwrap_or(explicit.saturating_sub(1)).max(1);
            cfg.push(kv("depth", depth));
            r = Report::new("test claims", cfg, cli.seed);
            if !d.has_levels(depth) {
                return Err(Error::DepthOutOfRange { requested: depth, available: explicit }.into());
            }
            r.push(flip_claims(&d, &[1, 0], depth)?);
        }
        ClaimKind::CyclicAut => {
            let n: usize = header_num(&header, "n")?;
            let m: u64 = header_num(&header, "m")?;
            let built: usize = header_num(&header, "depth")?;
            let depth = depth.unwrap_or(built);
            cfg.push(kv("depth", depth));
            r = Report::new("test claims", cfg, cli.seed);
            let ex = gen_cyclic_aut_example(&AutExampleParams { n, m, depth: built.max(depth) })?;
            let same = write_directive(&ex.system.truncated(explicit)?) == write_directive(&d);
            let regen = Section::new("matches-construction", if same { Status::Witnessed } else { Status::Refuted })
                .evidence(if same {
                    format!("file equals the regenerated construction on {explicit} levels")
                } else {
                    "file differs from the construction named in its header".to_string()
                });
            r.push(regen);
            if same {
                r.push(claim_section("cyclic-aut-claims", depth, check_cyclic_aut_claims(&ex, depth), |c| c.to_string())?);
            }
        }
    }
    let o = r.overall();
    emit(cli, &r, o)
}

// ---------------------------------------------------------------------------
// export

fn export(cli: &Cli, e: &ExportArgs) -> Result<u8> {
    let loaded = input::load(&e.input)?;
    let own = match loaded.input {
        Input::System(_) => ExportKind::Directive,
        Input::Tower(_) => ExportKind::Tower,
        Input::Diagram(_) => ExportKind::Bratteli,
    };
    let to = e.to.unwrap_or(own);
    let body = match (loaded.input, to) {
        (Input::Tower(t), ExportKind::Tower) => write_tower(&t),
        (_, ExportKind::Tower) => return Err(CliError::Usage("only towers export as towers".into())),
        (input, ExportKind::Directive) => write_directive(&input::to_system(input)?),
        (Input::Diagram(b), ExportKind::Bratteli) => bratteli::write_diagram(&b),
        (input, ExportKind::Bratteli) => {
            let d = input::to_system(input)?;
            bratteli::write_diagram(&bratteli::from_directive(&d, d.explicit_depth())?)
        }
    };
    let text = match (&loaded.construction, to == own) {
        (Some(h), true) => with_header(h, &body),
        _ => body,
    };
    match &cli.output {
        Some(p) => write_file(p, &text)?,
        None => print_out(&text)?,
    }
    Ok(0)
}
