//! Text and markdown rendering of stored campaigns.

use std::collections::BTreeMap;

use anyhow::{Context, Result};
use serde_json::Value;

use crate::store::CampaignRecord;
use crate::Format;

fn table(headers: &[&str], rows: &[Vec<String>], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Markdown => {
            out.push_str(&format!("| {} |\n", headers.join(" | ")));
            out.push_str(&format!("|{}\n", "---|".repeat(headers.len())));
            for r in rows {
                out.push_str(&format!("| {} |\n", r.join(" | ")));
            }
        }
        Format::Text => {
            let mut w: Vec<usize> = headers.iter().map(|h| h.len()).collect();
            for r in rows {
                for (i, c) in r.iter().enumerate() {
                    w[i] = w[i].max(c.len());
                }
            }
            let line = |cells: Vec<&str>| -> String {
                let padded: Vec<String> = cells.iter().enumerate().map(|(i, c)| format!("{c:<width$}", width = w[i])).collect();
                format!("{}\n", padded.join("  ").trim_end())
            };
            out.push_str(&line(headers.to_vec()));
            out.push_str(&line(w.iter().map(|&n| "-".repeat(n)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
            for r in rows {
                out.push_str(&line(r.iter().map(String::as_str).collect()));
            }
        }
    }
    out
}

fn heading(title: &str, format: Format) -> String {
    match format {
        Format::Markdown => format!("## {title}\n\n"),
        Format::Text => format!("{title}\n{}\n", "=".repeat(title.len())),
    }
}

fn s(v: &Value) -> String {
    match v {
        Value::String(x) => x.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn json(files: &BTreeMap<String, Vec<u8>>, name: &str) -> Result<Value> {
    let bytes = files.get(name).with_context(|| format!("campaign has no {name} artifact"))?;
    serde_json::from_slice(bytes).with_context(|| format!("{name} is not valid JSON"))
}

pub fn campaign_list(recs: &[CampaignRecord], format: Format) -> String {
    let rows: Vec<Vec<String>> = recs
        .iter()
        .map(|r| {
            vec![
                r.campaign_id.clone(),
                s(&serde_json::to_value(r.status).unwrap()),
                r.group.clone().unwrap_or_else(|| "-".into()),
                r.finished.clone(),
                r.command.clone(),
            ]
        })
        .collect();
    table(&["campaign", "status", "group", "finished", "command"], &rows, format)
}

fn record_rows(lines: &[Value]) -> Vec<Vec<String>> {
    lines
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let tags: Vec<String> = r["tags"].as_array().map(|a| a.iter().map(s).collect()).unwrap_or_default();
            vec![
                (i + 1).to_string(),
                s(&r["set"]),
                tags.join(" "),
                s(&r["profile"]["lengths"]),
                s(&r["orbit_size"]),
            ]
        })
        .collect()
}

fn tag_counts(lines: &[Value]) -> Vec<Vec<String>> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for r in lines {
        let w = r["orbit_size"].as_u64().unwrap_or(1);
        for t in r["tags"].as_array().into_iter().flatten() {
            *counts.entry(s(t)).or_insert(0) += w;
        }
    }
    counts.into_iter().map(|(t, c)| vec![t, c.to_string()]).collect()
}

pub fn campaign(rec: &CampaignRecord, files: &BTreeMap<String, Vec<u8>>, format: Format) -> Result<String> {
    let mut out = heading(&format!("{} ({})", rec.campaign_id, s(&serde_json::to_value(rec.status)?)), format);
    out.push_str(&format!("command: {}\nstarted: {}\nfinished: {}\n", rec.command, rec.started, rec.finished));
    if let Some(e) = &rec.error {
        out.push_str(&format!("error: {e}\n"));
    }
    for a in &rec.artifacts {
        out.push_str(&format!("artifact {} ({} bytes, sha256 {})\n", a.path, a.bytes, a.sha256));
    }
    out.push('\n');
    if rec.artifacts.is_empty() {
        return Ok(out);
    }
    match rec.subcommand.as_str() {
        "cr" => {
            let v = json(files, "cr.json")?;
            let rows = vec![vec![
                s(&v["group"]),
                s(&v["formula_value"]),
                s(&v["formula_case"]),
                s(&v["searched_value"]),
                s(&v["witness_max_nonspanning"]),
                s(&v["status"]),
            ]];
            out.push_str(&table(&["group", "formula", "case", "searched", "witness", "status"], &rows, format));
        }
        "verify-theorem-a" => {
            let v = json(files, "table.json")?;
            let rows: Vec<Vec<String>> = v["rows"]
                .as_array()
                .into_iter()
                .flatten()
                .map(|r| {
                    vec![
                        s(&r["group"]),
                        s(&r["p"]),
                        s(&r["formula_value"]),
                        s(&r["formula_case"]),
                        s(&r["searched_value"]),
                        if r["pass"].as_bool() == Some(true) { "ok".into() } else { "FAIL".into() },
                    ]
                })
                .collect();
            out.push_str(&table(&["group", "p", "formula", "case", "searched", "result"], &rows, format));
        }
        "enumerate-extremal" => {
            let text = String::from_utf8_lossy(files.get("records.jsonl").map(Vec::as_slice).unwrap_or_default()).into_owned();
            let lines: Vec<Value> = text
                .lines()
                .enumerate()
                .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("records.jsonl line {}", i + 1)))
                .collect::<Result<_>>()?;
            let summary = json(files, "summary.json")?;
            out.push_str(&format!(
                "{} records, status {}, orbit dedup {}\n\n",
                lines.len(),
                s(&summary["status"]),
                s(&summary["orbit_dedup"])
            ));
            out.push_str(&table(&["tag", "sets"], &tag_counts(&lines), format));
            out.push('\n');
            out.push_str(&table(&["#", "set", "tags", "coset lengths", "orbit"], &record_rows(&lines), format));
        }
        "classify" => {
            let v = json(files, "classification.json")?;
            out.push_str(&table(&["#", "set", "tags", "coset lengths", "orbit"], &record_rows(&[v["record"].clone()]), format));
            out.push_str(&format!("\nwitnesses: {}\n", v["record"]["witnesses"]));
        }
        "conjecture" => {
            let v = json(files, "certificate.json")?;
            out.push_str(&format!(
                "conjecture {} at (p, q) = ({}, {}): {}\n{} extremal sets of size {}, {} satisfy the property\n\n",
                s(&v["which"]),
                s(&v["p"]),
                s(&v["q"]),
                s(&v["verdict"]),
                s(&v["extremal_count"]),
                s(&v["extremal_size"]),
                s(&v["satisfying"])
            ));
            let recs: Vec<Value> = v["records"].as_array().cloned().unwrap_or_default();
            out.push_str(&table(&["tag", "sets"], &tag_counts(&recs), format));
            out.push('\n');
            out.push_str(&table(&["#", "set", "tags", "coset lengths", "orbit"], &record_rows(&recs), format));
        }
        "verify-main" => {
            let v = json(files, "verify_main.json")?;
            out.push_str(&format!(
                "{}: {} extremal sets ({} inspected, orbit dedup {}), holds {}\n\n",
                s(&v["group"]),
                s(&v["extremal_count"]),
                s(&v["representatives"]),
                s(&v["orbit_dedup"]),
                s(&v["holds"])
            ));
            let rows: Vec<Vec<String>> = v["shape_counts"]
                .as_object()
                .into_iter()
                .flatten()
                .map(|(k, c)| vec![k.clone(), s(c)])
                .collect();
            out.push_str(&table(&["tag", "sets"], &rows, format));
        }
        "fuzz-bounds" => {
            let v = json(files, "fuzz.json")?;
            out.push_str(&format!(
                "lemma {}: {} trials, seed {}, {} violations\n\n",
                s(&v["lemma"]),
                s(&v["trials"]),
                s(&v["seed"]),
                s(&v["violation_count"])
            ));
            let rows: Vec<Vec<String>> = v["sub_suites"]
                .as_array()
                .into_iter()
                .flatten()
                .map(|x| {
                    vec![
                        s(&x["name"]),
                        s(&x["cases"]),
                        s(&x["violation_count"]),
                        if x["gating"].as_bool() == Some(true) { "gating".into() } else { "informational".into() },
                    ]
                })
                .collect();
            out.push_str(&table(&["sub-suite", "cases", "violations", "kind"], &rows, format));
        }
        _ => {
            for (name, bytes) in files {
                out.push_str(&format!("{name}:\n{}\n", String::from_utf8_lossy(bytes)));
            }
        }
    }
    Ok(out)
}
