//! Per-figure CSV tables assembled from cached stage artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use keynode::evaluation::{BinningComparison, EvalReport};

use crate::error::{CliError, CliResult};
use crate::stages::{Cell, ImportanceArtifact, LabelEntry, Pipeline};

const REQUESTER: &str = "emit-plots";

fn table(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the plot tables under `<output_dir>/plots` and returns their paths.
pub fn emit_plots(p: &Pipeline) -> CliResult<Vec<PathBuf>> {
    let cfg = p.cfg;
    let dir = cfg.output_dir.join("plots");
    fs::create_dir_all(&dir).map_err(|e| CliError::stage(REQUESTER, e))?;

    let mut shares = Vec::new();
    let mut within = Vec::new();
    let mut binning = Vec::new();
    for net in &cfg.networks {
        let name = &net.name;
        let run = p.label(name, Some(REQUESTER))?;
        let entries: Vec<LabelEntry> = run.read_json("labels.json").map_err(|e| CliError::stage(REQUESTER, e))?;
        for e in entries.iter().filter(|e| e.skipped.is_none()) {
            for g in &e.groups {
                let total: usize = g.class_counts.iter().sum();
                for (c, &count) in g.class_counts.iter().enumerate() {
                    shares.push(vec![
                        name.clone(),
                        e.task.name().into(),
                        e.spec.method.name().into(),
                        e.spec.k.to_string(),
                        g.threshold.map(|t| t.to_string()).unwrap_or_default(),
                        c.to_string(),
                        count.to_string(),
                        (count as f64 / total.max(1) as f64).to_string(),
                    ]);
                }
            }
        }

        let run = p.evaluate(name, Some(REQUESTER))?;
        let cells: Vec<Cell<EvalReport>> = run.read_json("reports.json").map_err(|e| CliError::stage(REQUESTER, e))?;
        for c in &cells {
            if let Some(r) = &c.result {
                within.push(vec![
                    name.clone(),
                    c.task.name().into(),
                    c.k.to_string(),
                    r.model.kind().to_string(),
                    r.f1_macro_mean.to_string(),
                    r.f1_macro_std.to_string(),
                ]);
            }
        }

        let run = p.compare_bins(name, Some(REQUESTER))?;
        let cells: Vec<Cell<BinningComparison>> =
            run.read_json("comparisons.json").map_err(|e| CliError::stage(REQUESTER, e))?;
        for c in cells.iter().filter_map(|c| c.result.as_ref()) {
            for (t, (a, b)) in c.smart.trial_f1.iter().zip(&c.fixed.trial_f1).enumerate() {
                binning.push(vec![name.clone(), c.task.name().into(), t.to_string(), a.to_string(), b.to_string()]);
            }
        }
    }

    let mut general = Vec::new();
    for (a, b) in cfg.pairs() {
        let run = p.generalize(&a, &b, Some(REQUESTER))?;
        let cells: Vec<Cell<EvalReport>> = run.read_json("reports.json").map_err(|e| CliError::stage(REQUESTER, e))?;
        for c in &cells {
            if let Some(r) = &c.result {
                general.push(vec![
                    a.clone(),
                    b.clone(),
                    c.task.name().into(),
                    c.k.to_string(),
                    r.model.kind().to_string(),
                    r.f1_macro_mean.to_string(),
                    r.f1_macro_std.to_string(),
                ]);
            }
        }
    }

    let run = p.importance(Some(REQUESTER))?;
    let art: ImportanceArtifact = run.read_json("importance.json").map_err(|e| CliError::stage(REQUESTER, e))?;
    let importance = art
        .report
        .ranking()
        .into_iter()
        .enumerate()
        .map(|(i, (f, v))| {
            vec![
                art.network.clone(),
                art.task.name().into(),
                art.k.to_string(),
                (i + 1).to_string(),
                f,
                v.to_string(),
            ]
        })
        .collect();

    let outputs: [(&str, &[&str], Vec<Vec<String>>); 5] = [
        (
            "label_shares.csv",
            &["network", "task", "method", "k", "threshold", "class", "count", "share"],
            shares,
        ),
        ("within_network.csv", &["network", "task", "k", "model", "f1_mean", "f1_std"], within),
        ("binning.csv", &["network", "task", "trial", "smart_f1", "fixed_f1"], binning),
        ("generalization.csv", &["train", "test", "task", "k", "model", "f1_mean", "f1_std"], general),
        ("importance.csv", &["network", "task", "k", "rank", "feature", "mean_abs_shapley"], importance),
    ];
    let mut written = Vec::new();
    for (file, header, rows) in outputs {
        let path = dir.join(file);
        table(&path, header, rows).map_err(|e| CliError::stage(REQUESTER, e))?;
        written.push(path);
    }
    Ok(written)
}
