use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use spanlab_core::critical::{cr_search, verify_theorem_a, CrResult, CrSearchOptions, SearchStatus};
use spanlab_core::extremal::{
    check_conjecture, check_complete_subgroups, classify, enumerate_extremal, verify_theorem_main, ExtremalOptions,
    RunStatus, SearchCheckpoint, Tag, Verdict,
};
use spanlab_core::fuzz::{run_campaign, FuzzConfig};
use spanlab_core::group::Group;
use spanlab_core::search::SearchBudget;
use tempfile::NamedTempFile;

use crate::render;
use crate::store::{ensure_writable, write_atomic, Artifact, CampaignRecord, Status, Store};
use crate::{BudgetArgs, Cli, Command};

/// What a finished command hands back for the campaign record.
struct Outcome {
    status: Status,
    artifacts: Vec<Artifact>,
    lines: Vec<String>,
}

struct Ctx<'a> {
    store: &'a Store,
    id: String,
}

impl Ctx<'_> {
    fn artifact_json<T: Serialize>(&self, name: &str, value: &T, out: Option<&Path>) -> Result<Artifact> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        if let Some(p) = out {
            write_atomic(p, &bytes)?;
        }
        self.store.write_artifact(&self.id, name, &bytes)
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Cr { .. } => "cr",
        Command::VerifyTheoremA { .. } => "verify-theorem-a",
        Command::EnumerateExtremal { .. } => "enumerate-extremal",
        Command::Classify { .. } => "classify",
        Command::Conjecture { .. } => "conjecture",
        Command::VerifyMain { .. } => "verify-main",
        Command::FuzzBounds { .. } => "fuzz-bounds",
        Command::Report { .. } => "report",
    }
}

fn group_of(c: &Command) -> Option<String> {
    match c {
        Command::Cr { group, .. }
        | Command::EnumerateExtremal { group, .. }
        | Command::Classify { group, .. }
        | Command::VerifyMain { group, .. } => Some(group.to_string()),
        Command::Conjecture { p, q, .. } => Some(format!("Z{}", p * q)),
        _ => None,
    }
}

fn budget_of(b: &BudgetArgs) -> Result<SearchBudget> {
    let mut budget = if b.extended { SearchBudget::extended() } else { SearchBudget::default() };
    if let Some(n) = b.max_nodes {
        budget = budget.with_max_nodes(n);
    }
    if let Some(h) = b.budget_hours {
        if !(h.is_finite() && h > 0.0) {
            bail!("--budget-hours must be positive, got {h}");
        }
        budget = budget.with_time_limit(Duration::from_secs_f64(h * 3600.0));
    }
    Ok(budget)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run_argv<S: AsRef<str>>(argv: &[S], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let argv: Vec<String> = argv.iter().map(|a| a.as_ref().to_string()).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return 1;
            }
            let _ = write!(out, "{text}");
            return 0;
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global() {
            let _ = writeln!(err, "error: cannot size the thread pool: {e}");
            return 1;
        }
    }
    run(&cli, &argv, out, err)
}

fn run(cli: &Cli, argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    if let Command::Report { campaign, list, format } = &cli.command {
        return match report(cli, campaign.as_deref(), *list, *format) {
            Ok(text) => {
                let _ = write!(out, "{text}");
                0
            }
            Err(e) => {
                let _ = writeln!(err, "error: {e:#}");
                1
            }
        };
    }
    let store = match Store::open(&cli.store) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            return 1;
        }
    };
    let sub = subcommand_name(&cli.command);
    let id = match store.next_id(sub) {
        Ok(id) => id,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            return 1;
        }
    };
    let started = now();
    let ctx = Ctx { store: &store, id: id.clone() };
    let result = dispatch(&ctx, &cli.command);
    let (status, artifacts, error) = match result {
        Ok(o) => {
            for l in &o.lines {
                let _ = writeln!(out, "{l}");
            }
            (o.status, o.artifacts, None)
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            (Status::Failed, Vec::new(), Some(format!("{e:#}")))
        }
    };
    let mut config = serde_json::to_value(cli).unwrap_or(Value::Null);
    if let Value::Object(m) = &mut config {
        m.insert("effective_threads".into(), json!(rayon::current_num_threads()));
    }
    let mut command = String::from("spanlab");
    for a in argv.iter().skip(1) {
        command.push(' ');
        command.push_str(a);
    }
    let rec = CampaignRecord {
        campaign_id: id.clone(),
        command,
        subcommand: sub.to_string(),
        config,
        group: group_of(&cli.command),
        status,
        started,
        finished: now(),
        artifacts,
        error,
    };
    if let Err(e) = store.append(&rec) {
        let _ = writeln!(err, "error: cannot append campaign record: {e:#}");
        return 1;
    }
    let _ = writeln!(out, "campaign {id}: {}", serde_json::to_value(status).unwrap().as_str().unwrap_or("?"));
    status.exit_code()
}

fn dispatch(ctx: &Ctx, cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Cr { group, search, formula, both: _, no_orbit_reduction, no_prune, budget, out } => {
            if let Some(p) = out {
                ensure_writable(p)?;
            }
            let res = if *formula {
                CrResult::formula_only(group)?
            } else {
                let opts = CrSearchOptions { orbit_reduction: !no_orbit_reduction, prune: !no_prune };
                cr_search(group, &budget_of(budget)?, opts)?
            };
            let compare = !*search && !*formula;
            let mut lines = Vec::new();
            if !*search {
                lines.push(format!("{group}: formula {} ({})", res.formula_value, res.formula_case));
            }
            let status = match res.status {
                SearchStatus::NotRun => Status::Complete,
                SearchStatus::Complete => {
                    let w = res.witness_max_nonspanning.as_ref().unwrap();
                    lines.push(format!("{group}: searched {} (witness {:?})", res.searched_value.unwrap(), w.to_vec()));
                    if compare && res.agrees() == Some(false) {
                        lines.push(format!("{group}: MISMATCH between formula and search"));
                        Status::Failed
                    } else {
                        Status::Complete
                    }
                }
                SearchStatus::BudgetExceeded => {
                    lines.push(format!("{group}: search stopped by budget after {} nodes", res.nodes));
                    Status::Partial
                }
                SearchStatus::OutOfRange => {
                    lines.push(format!("{group}: order {} above the exact-search cap; pass --extended", group.order()));
                    Status::Failed
                }
            };
            let a = ctx.artifact_json("cr.json", &res, out.as_deref())?;
            Ok(Outcome { status, artifacts: vec![a], lines })
        }

        Command::VerifyTheoremA { max_order, budget, out } => {
            if let Some(p) = out {
                ensure_writable(p)?;
            }
            let t = verify_theorem_a(*max_order, &budget_of(budget)?)?;
            let a = ctx.artifact_json("table.json", &t, out.as_deref())?;
            let mut lines: Vec<String> = t
                .rows
                .iter()
                .map(|r| {
                    format!(
                        "{:<12} formula {:>3} ({:<13}) searched {:>3}  {}",
                        r.group.to_string(),
                        r.formula_value,
                        r.formula_case.to_string(),
                        r.searched_value.map_or("-".to_string(), |v| v.to_string()),
                        if r.pass { "ok" } else { "FAIL" }
                    )
                })
                .collect();
            let mismatched = t.rows.iter().filter(|r| r.status == SearchStatus::Complete && !r.pass).count();
            let unfinished = t.rows.iter().filter(|r| r.status != SearchStatus::Complete).count();
            lines.push(format!("{} groups, {mismatched} mismatches, {unfinished} unfinished", t.rows.len()));
            let status = if mismatched > 0 {
                Status::Failed
            } else if unfinished > 0 {
                Status::Partial
            } else {
                Status::Complete
            };
            Ok(Outcome { status, artifacts: vec![a], lines })
        }

        Command::EnumerateExtremal { group, out, resume, checkpoint, orbit_dedup, sequential, budget } => {
            let ck_path = checkpoint.clone().unwrap_or_else(|| sibling(out, ".checkpoint.json"));
            ensure_writable(out)?;
            ensure_writable(&ck_path)?;
            let prior = match resume {
                Some(p) => Some(read_checkpoint(p)?),
                None => None,
            };
            let opts = ExtremalOptions { orbit_dedup: *orbit_dedup, parallel: !*sequential, ..ExtremalOptions::default() };
            if let Some(ck) = &prior {
                if ck.complete {
                    return Ok(Outcome {
                        status: Status::Complete,
                        artifacts: Vec::new(),
                        lines: vec![format!("checkpoint is already complete ({} records); nothing to do", ck.records_emitted)],
                    });
                }
            }
            let mut tmp = NamedTempFile::new_in(parent(out))?;
            if let Some(ck) = &prior {
                let previous = fs::read(out)
                    .with_context(|| format!("resume needs the records already written to {}", out.display()))?;
                let lines = previous.iter().filter(|&&b| b == b'\n').count() as u64;
                if lines != ck.records_emitted {
                    bail!(
                        "{} holds {lines} records but the checkpoint expects {}",
                        out.display(),
                        ck.records_emitted
                    );
                }
                tmp.write_all(&previous)?;
            }
            let summary = {
                let mut w = BufWriter::new(tmp.as_file_mut());
                let s = enumerate_extremal(group, &budget_of(budget)?, &opts, prior.as_ref(), |r| {
                    serde_json::to_writer(&mut w, r).map_err(|e| spanlab_core::error::Error::Precondition(e.to_string()))?;
                    w.write_all(b"\n").map_err(|e| spanlab_core::error::Error::Precondition(e.to_string()))?;
                    Ok(())
                })?;
                w.flush()?;
                s
            };
            tmp.as_file().sync_all()?;
            tmp.persist(out).map_err(|e| anyhow!("cannot write {}: {}", out.display(), e.error))?;
            let records = fs::read(out)?;
            let mut ck_bytes = serde_json::to_vec_pretty(&summary.checkpoint)?;
            ck_bytes.push(b'\n');
            write_atomic(&ck_path, &ck_bytes)?;
            let artifacts = vec![
                ctx.store.write_artifact(&ctx.id, "records.jsonl", &records)?,
                ctx.store.write_artifact(&ctx.id, "checkpoint.json", &ck_bytes)?,
                ctx.artifact_json("summary.json", &summary, None)?,
            ];
            let status = if summary.status == RunStatus::Complete { Status::Complete } else { Status::Partial };
            let mut lines = vec![format!(
                "{group}: {} new records, {} in total, {} nodes ({})",
                summary.emitted,
                summary.records_emitted,
                summary.nodes,
                if *orbit_dedup { "one per unit orbit" } else { "every set" }
            )];
            if status == Status::Partial {
                lines.push(format!("budget exhausted; resume with --resume {}", ck_path.display()));
            }
            Ok(Outcome { status, artifacts, lines })
        }

        Command::Classify { group, set, out } => {
            if let Some(p) = out {
                ensure_writable(p)?;
            }
            let a = group.set_of(set.iter().copied())?;
            let rec = classify(&a)?;
            let obs = check_complete_subgroups(&a)?;
            let body = json!({ "record": rec, "complete_subgroups": obs });
            let art = ctx.artifact_json("classification.json", &body, out.as_deref())?;
            let tags: Vec<&str> = rec.tags.iter().map(|t| t.label()).collect();
            let lines = vec![
                format!("{group} {:?}: {}", a.to_vec(), tags.join(", ")),
                format!("complete subgroups inside A: {}", obs.complete_subgroups.len()),
            ];
            Ok(Outcome { status: Status::Complete, artifacts: vec![art], lines })
        }

        Command::Conjecture { which, p, q, budget, out } => {
            if let Some(path) = out {
                ensure_writable(path)?;
            }
            let rep = check_conjecture(*which, *p, *q, &budget_of(budget)?)?;
            let art = ctx.artifact_json("certificate.json", &rep, out.as_deref())?;
            let verdict = serde_json::to_value(rep.verdict)?.as_str().unwrap_or("?").to_string();
            let mut lines = vec![
                format!("conjecture {which} at (p, q) = ({p}, {q}) on {}: {verdict}", rep.group),
                format!(
                    "{} extremal sets of size {}, {} satisfy the conjectured property, {} unit orbits",
                    rep.extremal_count, rep.extremal_size, rep.satisfying, rep.orbit_structure.orbits
                ),
            ];
            if let Some(c) = rep.counterexamples.first() {
                lines.push(format!("first counterexample: {:?}", c.to_vec()));
            }
            let status = if rep.verdict == Verdict::Partial { Status::Partial } else { Status::Complete };
            Ok(Outcome { status, artifacts: vec![art], lines })
        }

        Command::VerifyMain { group, no_orbit_dedup, resume, checkpoint, budget, out } => {
            if let Some(p) = out {
                ensure_writable(p)?;
            }
            if let Some(p) = checkpoint {
                ensure_writable(p)?;
            }
            let prior: Option<MainProgress> = match resume {
                Some(p) => Some(
                    serde_json::from_slice(&fs::read(p).with_context(|| format!("cannot read {}", p.display()))?)
                        .with_context(|| format!("corrupt checkpoint {}", p.display()))?,
                ),
                None => None,
            };
            let mut b = budget_of(budget)?;
            b.extended = true;
            let opts = ExtremalOptions { orbit_dedup: !no_orbit_dedup && group.is_single_cyclic(), ..ExtremalOptions::default() };
            if let Some(pr) = &prior {
                if pr.checkpoint.complete {
                    return Ok(Outcome {
                        status: Status::Complete,
                        artifacts: Vec::new(),
                        lines: vec!["checkpoint is already complete; nothing to do".into()],
                    });
                }
            }
            let rep = verify_theorem_main(group, &b, &opts, prior.as_ref().map(|p| &p.checkpoint))?;
            let mut progress = prior.unwrap_or_else(|| fresh_progress(group));
            progress.representatives += rep.representatives;
            progress.extremal_count += rep.extremal_count;
            for (t, c) in &rep.shape_counts {
                *progress.shape_counts.entry(*t).or_insert(0) += c;
            }
            progress.violations.extend(rep.violations.iter().map(|v| serde_json::to_value(v).unwrap()));
            progress.checkpoint = rep.checkpoint.clone();
            let body = json!({
                "group": group,
                "branch": rep.branch,
                "status": rep.status,
                "orbit_dedup": rep.orbit_dedup,
                "extremal_size": rep.extremal_size,
                "representatives": progress.representatives,
                "extremal_count": progress.extremal_count,
                "shape_counts": progress.shape_counts,
                "violations": progress.violations,
                "holds": progress.violations.is_empty(),
            });
            let mut artifacts = vec![ctx.artifact_json("verify_main.json", &body, out.as_deref())?];
            let mut ck_bytes = serde_json::to_vec_pretty(&progress)?;
            ck_bytes.push(b'\n');
            if let Some(p) = checkpoint {
                write_atomic(p, &ck_bytes)?;
            }
            artifacts.push(ctx.store.write_artifact(&ctx.id, "checkpoint.json", &ck_bytes)?);
            let status = if !progress.violations.is_empty() {
                Status::Failed
            } else if rep.status == RunStatus::Complete {
                Status::Complete
            } else {
                Status::Partial
            };
            let shapes: Vec<String> = progress.shape_counts.iter().map(|(t, c)| format!("{t}={c}")).collect();
            let lines = vec![
                format!(
                    "{group}: {} extremal sets ({} inspected), {} off-shape; {}",
                    progress.extremal_count,
                    progress.representatives,
                    progress.violations.len(),
                    shapes.join(" ")
                ),
                format!("orbit reduction: {}", if opts.orbit_dedup { "on" } else { "off" }),
            ];
            Ok(Outcome { status, artifacts, lines })
        }

        Command::FuzzBounds { lemma, trials, seed, max_p, no_exhaustive, out } => {
            if let Some(p) = out {
                ensure_writable(p)?;
            }
            let cfg = FuzzConfig { lemma: *lemma, trials: *trials, seed: *seed, max_p: *max_p, exhaustive: !no_exhaustive };
            let rep = run_campaign(&cfg)?;
            let art = ctx.artifact_json("fuzz.json", &rep, out.as_deref())?;
            let mut lines = vec![format!(
                "lemma {lemma}: {} trials (seed {seed}), {} applicable, {} violations",
                rep.trials, rep.applicable, rep.violation_count
            )];
            for s in &rep.sub_suites {
                lines.push(format!(
                    "  {:<44} {:>7} cases {:>6} violations{}",
                    s.name,
                    s.cases,
                    s.violation_count,
                    if s.gating { "" } else { "  (informational)" }
                ));
            }
            let status = if rep.passed { Status::Complete } else { Status::Failed };
            Ok(Outcome { status, artifacts: vec![art], lines })
        }

        Command::Report { .. } => unreachable!("handled before the store is opened for writing"),
    }
}

/// Progress of a resumable structure-theorem run.
#[derive(Debug, Serialize, Deserialize)]
struct MainProgress {
    checkpoint: SearchCheckpoint,
    representatives: u64,
    extremal_count: u64,
    shape_counts: BTreeMap<Tag, u64>,
    violations: Vec<Value>,
}

fn fresh_progress(g: &Group) -> MainProgress {
    MainProgress {
        checkpoint: SearchCheckpoint {
            engine_version: spanlab_core::ENGINE_VERSION.into(),
            group: g.clone(),
            size: 0,
            orbit_dedup: false,
            frontier: spanlab_core::search::Cursor::start(),
            records_emitted: 0,
            complete: false,
        },
        representatives: 0,
        extremal_count: 0,
        shape_counts: BTreeMap::new(),
        violations: Vec::new(),
    }
}

fn read_checkpoint(p: &Path) -> Result<SearchCheckpoint> {
    let bytes = fs::read(p).with_context(|| format!("cannot read checkpoint {}", p.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("corrupt checkpoint {}", p.display()))
}

fn sibling(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn parent(p: &Path) -> &Path {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    }
}

fn report(cli: &Cli, campaign: Option<&str>, list: bool, format: crate::Format) -> Result<String> {
    let store = Store::open(&cli.store)?;
    if list {
        return Ok(render::campaign_list(&store.campaigns()?, format));
    }
    let id = campaign.ok_or_else(|| anyhow!("--campaign is required"))?;
    let rec = store.find(id)?;
    let mut files = BTreeMap::new();
    for a in &rec.artifacts {
        files.insert(a.name.clone(), store.read_verified(a)?);
    }
    render::campaign(&rec, &files, format)
}
