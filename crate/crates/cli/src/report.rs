//! Deterministic reports: a header echoing the configuration and seed,
//! then one section per check. Text and JSON renderings carry the same
//! content.

use serde_json::{json, Value};
use toeplitz_core::{Status, Verdict};

pub struct Section {
    pub name: String,
    pub status: Status,
    pub depth: Option<usize>,
    pub evidence: String,
    pub certificate: Vec<String>,
}

impl Section {
    pub fn new(name: &str, status: Status) -> Self {
        Section { name: name.to_string(), status, depth: None, evidence: String::new(), certificate: Vec::new() }
    }

    pub fn from_verdict<W>(name: &str, v: &Verdict<W>, render: impl Fn(&W) -> String) -> Self {
        Section {
            name: name.to_string(),
            status: v.status,
            depth: Some(v.depth),
            evidence: v.evidence.clone(),
            certificate: v.witness.as_ref().map(|w| lines(&render(w))).unwrap_or_default(),
        }
    }

    pub fn evidence(mut self, e: impl Into<String>) -> Self {
        self.evidence = e.into();
        self
    }

    pub fn depth(mut self, d: usize) -> Self {
        self.depth = Some(d);
        self
    }

    pub fn line(mut self, l: impl Into<String>) -> Self {
        self.certificate.push(l.into());
        self
    }

    pub fn text(mut self, t: &str) -> Self {
        self.certificate.extend(lines(t));
        self
    }
}

fn lines(t: &str) -> Vec<String> {
    t.lines().map(|l| l.trim_end().to_string()).filter(|l| !l.is_empty()).collect()
}

pub struct Report {
    pub command: String,
    pub config: Vec<(String, String)>,
    pub seed: u64,
    pub sections: Vec<Section>,
}

impl Report {
    pub fn new(command: &str, config: Vec<(String, String)>, seed: u64) -> Self {
        Report { command: command.to_string(), config, seed, sections: Vec::new() }
    }

    pub fn push(&mut self, s: Section) {
        self.sections.push(s);
    }

    /// Witnessed only if every section is; refuted if any is.
    pub fn overall(&self) -> Status {
        if self.sections.iter().any(|s| s.status == Status::Refuted) {
            Status::Refuted
        } else if self.sections.iter().all(|s| s.status == Status::Witnessed) {
            Status::Witnessed
        } else {
            Status::Unknown
        }
    }

    pub fn render_text(&self, overall: Status) -> String {
        let mut out = format!("toeplitz {}\n", env!("CARGO_PKG_VERSION"));
        out.push_str(&format!("command: {}\n", self.command));
        for (k, v) in &self.config {
            out.push_str(&format!("config: {k} = {v}\n"));
        }
        out.push_str(&format!("seed: {}\n", self.seed));
        for s in &self.sections {
            out.push_str(&format!("\n[{}]\n", s.name));
            match s.depth {
                Some(d) => out.push_str(&format!("verdict: {} at depth {d}\n", s.status)),
                None => out.push_str(&format!("verdict: {}\n", s.status)),
            }
            if !s.evidence.is_empty() {
                out.push_str(&format!("evidence: {}\n", s.evidence.trim_end().replace('\n', "\n    ")));
            }
            if s.status == Status::Unknown {
                out.push_str(&format!("note: undecided{}; increase --depth to look further\n", depth_note(s.depth)));
            }
            for l in &s.certificate {
                out.push_str(&format!("  {l}\n"));
            }
        }
        out.push_str(&format!("\nresult: {overall}\n"));
        out
    }

    pub fn render_json(&self, overall: Status) -> String {
        let config: serde_json::Map<String, Value> =
            self.config.iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
        let sections: Vec<Value> = self
            .sections
            .iter()
            .map(|s| {
                json!({
                    "name": s.name,
                    "status": s.status.to_string(),
                    "depth": s.depth,
                    "evidence": s.evidence,
                    "certificate": s.certificate,
                })
            })
            .collect();
        let doc = json!({
            "tool": "toeplitz",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": config,
            "seed": self.seed,
            "sections": sections,
            "result": overall.to_string(),
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
        s.push('\n');
        s
    }
}

fn depth_note(d: Option<usize>) -> String {
    d.map(|d| format!(" at depth {d}")).unwrap_or_default()
}
