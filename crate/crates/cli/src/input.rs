//! Loading systems, towers and diagrams from files or built-in names.

use std::fs;
use std::path::Path;

use toeplitz_core::bratteli::{self, OrderedBratteliDiagram};
use toeplitz_core::constructions::{p4, period_doubling, three_adic};
use toeplitz_core::format::parse_directive;
use toeplitz_core::skeletons::{parse_tower, SkeletonTower};
use toeplitz_core::DirectiveSequence;

use crate::CliError;

pub const BUILTINS: [&str; 3] = ["p4", "period-doubling", "three-adic"];

pub fn builtin(name: &str) -> Option<DirectiveSequence> {
    match name {
        "p4" => Some(p4()),
        "period-doubling" => Some(period_doubling()),
        "three-adic" => Some(three_adic()),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Directive,
    Tower,
    Diagram,
}

pub enum Input {
    System(DirectiveSequence),
    Tower(SkeletonTower),
    Diagram(OrderedBratteliDiagram),
}

pub struct Loaded {
    pub input: Input,
    /// `# construction:` header of generated files, if any.
    pub construction: Option<String>,
}

pub fn kind_of(text: &str) -> Option<FileKind> {
    let first = text.lines().map(|l| l.split('#').next().unwrap_or("").trim()).find(|l| !l.is_empty())?;
    let kw = first.split(|c: char| c.is_whitespace() || c == ':').next()?;
    match kw {
        "alphabet" | "map" => Some(FileKind::Directive),
        "period" | "pattern" => Some(FileKind::Tower),
        "vertices" | "edge" | "labels" => Some(FileKind::Diagram),
        _ => None,
    }
}

pub fn construction_header(text: &str) -> Option<String> {
    text.lines().find_map(|l| l.trim().strip_prefix("# construction:").map(|s| s.trim().to_string()))
}

/// A path, or `builtin:<name>` for the stationary examples.
pub fn load(source: &str) -> Result<Loaded, CliError> {
    if let Some(name) = source.strip_prefix("builtin:") {
        let d = builtin(name)
            .ok_or_else(|| CliError::Usage(format!("unknown builtin {name:?}; known: {}", BUILTINS.join(", "))))?;
        return Ok(Loaded { input: Input::System(d), construction: None });
    }
    let text = fs::read_to_string(Path::new(source)).map_err(|e| CliError::Io(format!("{source}: {e}")))?;
    let ctx = |e: toeplitz_core::Error| CliError::Input(format!("{source}: {e}"));
    let input = match kind_of(&text) {
        Some(FileKind::Directive) => Input::System(parse_directive(&text).map_err(ctx)?),
        Some(FileKind::Tower) => Input::Tower(parse_tower(&text).map_err(ctx)?),
        Some(FileKind::Diagram) => Input::Diagram(bratteli::parse_diagram(&text).map_err(ctx)?),
        None => return Err(CliError::Input(format!("{source}: unrecognized file format"))),
    };
    Ok(Loaded { input, construction: construction_header(&text) })
}

/// A directive sequence from any input kind. Towers are converted with
/// all the levels they support, diagrams are read at full depth.
pub fn load_system(source: &str) -> Result<DirectiveSequence, CliError> {
    to_system(load(source)?.input)
}

pub fn to_system(input: Input) -> Result<DirectiveSequence, CliError> {
    match input {
        Input::System(d) => Ok(d),
        Input::Tower(t) => Ok(toeplitz_core::skeletons::single_hole_to_rank2(&t, t.depth().saturating_sub(1))?),
        Input::Diagram(b) => Ok(bratteli::read_directive(&b, b.depth())?),
    }
}
