//! Command-line front end: argument parsing, running checks and rendering
//! reports.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use relviews::linearizability::{
    abstract_histories, check_linearizable, concrete_histories, obligations::with_monoid,
    obligations::ObligationTask, render_event, shortlex, BoundKind, LinOptions, LinVerdict,
};
use relviews::logic::ProofOutline;
use relviews::model_file::{load_model_file, load_outlines_file, ModelFile};

pub const DEFAULT_CAP: u128 = 50_000_000;

#[derive(Debug, Parser)]
#[command(name = "relviews", version, about = "Bounded linearizability checking and proof outline checking")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Cap on enumerated worlds, explored states and generated histories.
    #[arg(long, global = true, env = "RELVIEWS_CAP", default_value_t = DEFAULT_CAP)]
    pub cap: u128,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Include wall-clock time in the report.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Check that every bounded concrete history is an abstract history.
    CheckLin {
        model: PathBuf,
        #[arg(long, default_value_t = 8)]
        bound: usize,
        #[arg(long, value_enum, default_value_t = BoundArg::Events)]
        bound_kind: BoundArg,
    },
    /// Check the proof outlines and the per-method obligations.
    CheckProof { model: PathBuf, outline: PathBuf },
    /// Print the bounded history set of one side.
    Histories {
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Side::Concrete)]
        side: Side,
        #[arg(long, default_value_t = 4)]
        bound: usize,
        #[arg(long, value_enum, default_value_t = BoundArg::Events)]
        bound_kind: BoundArg,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Machine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoundArg {
    /// Count call and return events.
    Events,
    /// Count every transition, internal steps included.
    Steps,
}

impl From<BoundArg> for BoundKind {
    fn from(b: BoundArg) -> Self {
        match b {
            BoundArg::Events => BoundKind::Events,
            BoundArg::Steps => BoundKind::Steps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Concrete,
    Abstract,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Ok,
    Violation,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub model: String,
    pub verdict: Verdict,
    pub counterexample: Option<Value>,
    pub stats: BTreeMap<String, Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub histories: Option<Vec<Vec<String>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u128>,
}

impl RunReport {
    fn new(command: &str, model: &str, verdict: Verdict) -> Self {
        RunReport {
            command: command.into(),
            model: model.into(),
            verdict,
            counterexample: None,
            stats: BTreeMap::new(),
            warnings: vec![],
            error: None,
            histories: None,
            elapsed_ms: None,
        }
    }

    fn error(command: &str, model: &str, msg: String) -> Self {
        RunReport { error: Some(msg), ..RunReport::new(command, model, Verdict::Error) }
    }

    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Ok => 0,
            Verdict::Violation => 1,
            Verdict::Error => 2,
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Machine => serde_json::to_string_pretty(self).expect("report encodes"),
            Format::Text => self.render_text(),
        }
    }

    fn render_text(&self) -> String {
        let verdict = match self.verdict {
            Verdict::Ok => "ok",
            Verdict::Violation => "violation",
            Verdict::Error => "error",
        };
        let mut out = vec![format!("{} {}: {verdict}", self.command, self.model)];
        if let Some(e) = &self.error {
            out.push(format!("error: {e}"));
        }
        if let Some(hs) = &self.histories {
            for h in hs {
                out.push(String::new());
                if h.is_empty() {
                    out.push("ε".into());
                }
                out.extend(h.iter().cloned());
            }
            out.push(String::new());
        }
        match &self.counterexample {
            Some(Value::Object(o)) if o.contains_key("history") => {
                out.push("counterexample:".into());
                let evs = o["history"].as_array().cloned().unwrap_or_default();
                if evs.is_empty() {
                    out.push("  ε".into());
                }
                out.extend(evs.iter().map(|e| format!("  {}", e.as_str().unwrap_or_default())));
            }
            Some(Value::Object(o)) => {
                out.push("first failure:".into());
                for (k, v) in o {
                    let v = v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string());
                    out.push(format!("  {k}: {v}"));
                }
            }
            _ => {}
        }
        for (k, v) in &self.stats {
            let v = v.as_str().map(str::to_string).unwrap_or_else(|| v.to_string());
            out.push(format!("{k}: {v}"));
        }
        out.extend(self.warnings.iter().map(|w| format!("warning: {w}")));
        if let Some(ms) = self.elapsed_ms {
            out.push(format!("time: {ms} ms"));
        }
        out.join("\n")
    }
}

/// Runs the bounded linearizability check.
pub fn check_lin(file: &ModelFile, bound: usize, kind: BoundKind, cap: u128) -> RunReport {
    let model = &file.model;
    let opts = LinOptions { bound, kind, cap };
    let r = match check_linearizable(model, &opts) {
        Ok(r) => r,
        Err(e) => return RunReport::error("check-lin", &model.name, e.to_string()),
    };
    let mut rep = RunReport::new("check-lin", &model.name, Verdict::Ok);
    match &r.verdict {
        LinVerdict::NoViolation { complete } => {
            if !complete {
                rep.warnings.push(format!(
                    "bound_too_small: histories longer than {bound} exist; the result holds up to the bound only"
                ));
            }
        }
        LinVerdict::Counterexample(h) => {
            rep.verdict = Verdict::Violation;
            let evs: Vec<String> = h.iter().map(|e| render_event(model.domains(), e)).collect();
            rep.counterexample = Some(json!({ "history": evs }));
        }
    }
    rep.stats.insert("bound".into(), json!(r.bound));
    rep.stats.insert("bound_kind".into(), json!(kind_name(r.kind)));
    rep.stats.insert("abstract_bound".into(), json!(r.abstract_bound));
    rep.stats.insert("states".into(), json!(r.stats.states));
    rep.stats.insert("concrete_configs".into(), json!(r.stats.conc_configs));
    if r.kind == BoundKind::Steps {
        rep.stats.insert("histories".into(), json!(r.stats.histories));
    }
    rep
}

fn kind_name(k: BoundKind) -> &'static str {
    match k {
        BoundKind::Events => "events",
        BoundKind::Steps => "steps",
    }
}

/// Checks the outlines and the per-method obligations.
pub fn check_proof(file: &ModelFile, outlines: &[ProofOutline], cap: u128) -> RunReport {
    let model = &file.model;
    let report = match with_monoid(model, cap, ObligationTask { model, outlines }) {
        Ok(r) => r,
        Err(e) => return RunReport::error("check-proof", &model.name, e.to_string()),
    };
    let mut rep = RunReport::new("check-proof", &model.name, Verdict::Ok);
    if let Some(f) = report.first_failure() {
        rep.verdict = Verdict::Violation;
        rep.counterexample = Some(json!({ "obligation": f.obligation, "method": f.method, "detail": f.detail }));
    }
    let passed = report.items.iter().filter(|i| i.passed).count();
    rep.stats.insert("obligations".into(), json!(report.items.len()));
    rep.stats.insert("obligations_passed".into(), json!(passed));
    rep.stats.insert("outlines".into(), json!(outlines.len()));
    rep
}

/// Lists the bounded histories of one side in shortlex order.
pub fn histories(file: &ModelFile, side: Side, bound: usize, kind: BoundKind, cap: u128) -> RunReport {
    let model = &file.model;
    let opts = LinOptions { bound, kind, cap };
    let hs = match side {
        Side::Concrete => concrete_histories(model, &opts),
        Side::Abstract => abstract_histories(model, &opts),
    };
    let hs = match hs {
        Ok(hs) => hs,
        Err(e) => return RunReport::error("histories", &model.name, e.to_string()),
    };
    let mut sorted: Vec<_> = hs.into_iter().collect();
    sorted.sort_by(shortlex);
    let mut rep = RunReport::new("histories", &model.name, Verdict::Ok);
    rep.stats.insert("count".into(), json!(sorted.len()));
    rep.stats.insert("side".into(), json!(if side == Side::Concrete { "concrete" } else { "abstract" }));
    rep.stats.insert("bound".into(), json!(bound));
    rep.histories = Some(
        sorted.iter().map(|h| h.iter().map(|e| render_event(model.domains(), e)).collect()).collect(),
    );
    rep
}

fn load(path: &PathBuf, command: &str) -> Result<ModelFile, RunReport> {
    load_model_file(path).map_err(|e| RunReport::error(command, &path.display().to_string(), e.to_string()))
}

fn execute(cli: &Cli) -> RunReport {
    match &cli.command {
        Cmd::CheckLin { model, bound, bound_kind } => match load(model, "check-lin") {
            Ok(f) => check_lin(&f, *bound, (*bound_kind).into(), cli.cap),
            Err(r) => r,
        },
        Cmd::CheckProof { model, outline } => {
            let f = match load(model, "check-proof") {
                Ok(f) => f,
                Err(r) => return r,
            };
            match load_outlines_file(outline, &f) {
                Ok(os) => check_proof(&f, &os, cli.cap),
                Err(e) => RunReport::error("check-proof", &outline.display().to_string(), e.to_string()),
            }
        }
        Cmd::Histories { model, side, bound, bound_kind } => match load(model, "histories") {
            Ok(f) => histories(&f, *side, *bound, (*bound_kind).into(), cli.cap),
            Err(r) => r,
        },
    }
}

/// Runs a parsed command line on a pool of `--jobs` workers.
pub fn run(cli: &Cli) -> RunReport {
    let start = Instant::now();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if cli.jobs > 0 {
        pool = pool.num_threads(cli.jobs);
    }
    let mut rep = match pool.build() {
        Ok(p) => p.install(|| execute(cli)),
        Err(e) => RunReport::error("relviews", "", format!("cannot start worker pool: {e}")),
    };
    if cli.timing {
        rep.elapsed_ms = Some(start.elapsed().as_millis());
    }
    rep
}
