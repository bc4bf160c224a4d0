use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{ExperimentReport, FoldStatus, Result, RunnerError};
use crate::dataset::Granularity;
use crate::metrics::ClassAp;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";

pub(crate) fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| RunnerError::io(dir, e))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| RunnerError::Config(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| RunnerError::io(path, e))
}

/// Writes `report.json` and `report.txt` into `dir`.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    write_json(&dir.join(REPORT_JSON), report)?;
    let text = render_report(report);
    std::fs::write(dir.join(REPORT_TEXT), text).map_err(|e| RunnerError::io(&dir.join(REPORT_TEXT), e))
}

/// Reads a `report.json`, or the one inside a directory.
pub fn load_report(path: &Path) -> Result<ExperimentReport> {
    let path = if path.is_dir() {
        path.join(REPORT_JSON)
    } else {
        path.to_path_buf()
    };
    let text = std::fs::read_to_string(&path).map_err(|e| RunnerError::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| RunnerError::Config(format!("{}: {e}", path.display())))
}

/// Per-class AP across folds: the mean of the folds where the class is
/// defined, supports summed.
pub fn combine_classes<'a>(folds: impl IntoIterator<Item = &'a [ClassAp]>) -> Vec<ClassAp> {
    let mut out: Vec<ClassAp> = Vec::new();
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for classes in folds {
        if out.is_empty() {
            out = classes
                .iter()
                .map(|c| ClassAp {
                    label: c.label.clone(),
                    ap: None,
                    support: 0,
                    frame_support: 0,
                })
                .collect();
            sums = vec![(0.0, 0); classes.len()];
        }
        for (i, c) in classes.iter().enumerate().take(out.len()) {
            out[i].support += c.support;
            out[i].frame_support += c.frame_support;
            if let Some(ap) = c.ap {
                sums[i].0 += ap;
                sums[i].1 += 1;
            }
        }
    }
    for (c, (sum, n)) in out.iter_mut().zip(sums) {
        c.ap = (n > 0).then(|| sum / n as f64);
    }
    out
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "N/A".to_string(), |x| format!("{x:.1}"))
}

/// Plain-text table with a header rule; the first column is left-aligned,
/// the rest right-aligned.
pub fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (i, cell) in r.iter().enumerate().take(cols) {
            width[i] = width[i].max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    format!("{c:<w$}", w = width[i])
                } else {
                    format!("{c:>w$}", w = width[i])
                }
            })
            .collect();
        parts.join("  ").trim_end().to_string()
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * (cols.saturating_sub(1))));
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

/// Rows of experiments, one Acc/Edit column pair per granularity present.
pub fn render_summary(reports: &[ExperimentReport]) -> String {
    let grans: Vec<Granularity> = Granularity::ALL
        .into_iter()
        .filter(|g| reports.iter().any(|r| r.config.granularity == *g))
        .collect();
    let mut labels: Vec<&str> = Vec::new();
    for r in reports {
        if !labels.contains(&r.label.as_str()) {
            labels.push(&r.label);
        }
    }
    let mut header = vec!["Tasks".to_string()];
    for g in &grans {
        header.push(format!("{} Acc", g.title()));
        header.push(format!("{} Edit", g.title()));
    }
    let rows: Vec<Vec<String>> = labels
        .iter()
        .map(|l| {
            let mut row = vec![l.to_string()];
            for g in &grans {
                let r = reports.iter().find(|r| r.label == *l && r.config.granularity == *g);
                row.push(num(r.and_then(|r| r.mean_accuracy)));
                row.push(num(r.and_then(|r| r.mean_edit)));
            }
            row
        })
        .collect();
    render_table(&header, &rows)
}

/// Class, support (segments), and AP, followed by macro and micro mAP.
pub fn render_map_table(classes: &[ClassAp], macro_map: Option<f64>, micro_map: Option<f64>) -> String {
    let header = vec!["Class".to_string(), "#".to_string(), "AP".to_string()];
    let mut rows: Vec<Vec<String>> = classes
        .iter()
        .map(|c| vec![c.label.clone(), c.support.to_string(), num(c.ap)])
        .collect();
    rows.push(vec!["Macro mAP".into(), String::new(), num(macro_map)]);
    rows.push(vec!["Micro mAP".into(), String::new(), num(micro_map)]);
    render_table(&header, &rows)
}

/// One row per fold with its train/test tasks and scores.
pub fn render_fold_table(report: &ExperimentReport) -> String {
    let header: Vec<String> = ["Fold", "Test", "Train", "Acc", "Edit", "mAP"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = report
        .folds
        .iter()
        .map(|f| {
            let m = f.metrics.as_ref();
            let status = match &f.status {
                FoldStatus::Completed => String::new(),
                FoldStatus::Diverged { .. } => " (diverged)".into(),
            };
            vec![
                format!("{}{status}", f.name),
                f.test_tasks.join("+"),
                f.train_tasks.join("+"),
                num(m.map(|m| m.mean_accuracy)),
                num(m.map(|m| m.mean_edit)),
                num(m.and_then(|m| m.macro_map)),
            ]
        })
        .collect();
    render_table(&header, &rows)
}

pub fn render_report(report: &ExperimentReport) -> String {
    let cfg = &report.config;
    let done = report.completed_folds().count();
    let mut out = String::new();
    writeln!(
        out,
        "{} {} on {} ({} fold(s), {} completed, seed {})\n",
        cfg.cv.as_str(),
        cfg.granularity,
        report.label,
        report.folds.len(),
        done,
        cfg.seed
    )
    .ok();
    out.push_str(&render_summary(std::slice::from_ref(report)));
    out.push('\n');
    out.push_str(&render_fold_table(report));
    out.push('\n');
    out.push_str(&render_map_table(&report.classes, report.macro_map, report.micro_map));
    out
}

/// Summary and per-class tables over several reports; classes are merged
/// by label across reports of the same granularity.
pub fn render_aggregate(reports: &[ExperimentReport]) -> String {
    let mut out = render_summary(reports);
    let mut by_gran: BTreeMap<Granularity, Vec<&ExperimentReport>> = BTreeMap::new();
    for r in reports {
        by_gran.entry(r.config.granularity).or_default().push(r);
    }
    for (g, rs) in by_gran {
        let mut merged: Vec<ClassAp> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for r in &rs {
            for c in &r.classes {
                let i = match merged.iter().position(|m| m.label == c.label) {
                    Some(i) => i,
                    None => {
                        merged.push(ClassAp {
                            label: c.label.clone(),
                            ap: None,
                            support: 0,
                            frame_support: 0,
                        });
                        counts.push(0);
                        merged.len() - 1
                    }
                };
                merged[i].support += c.support;
                merged[i].frame_support += c.frame_support;
                if let Some(ap) = c.ap {
                    merged[i].ap = Some(merged[i].ap.unwrap_or(0.0) + ap);
                    counts[i] += 1;
                }
            }
        }
        for (m, n) in merged.iter_mut().zip(&counts) {
            m.ap = m.ap.map(|s| s / *n as f64);
        }
        let (macro_map, micro_map) = crate::metrics::summarize(&merged);
        writeln!(out, "\n{} ({} report(s))", g.title(), rs.len()).ok();
        out.push_str(&render_map_table(&merged, macro_map, micro_map));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class(label: &str, ap: Option<f64>, support: usize) -> ClassAp {
        ClassAp {
            label: label.into(),
            ap,
            support,
            frame_support: support * 10,
        }
    }

    #[test]
    fn classes_average_where_defined() {
        let a = vec![class("A", Some(50.0), 1), class("B", None, 0)];
        let b = vec![class("A", Some(100.0), 2), class("B", Some(40.0), 3)];
        let c = combine_classes([a.as_slice(), b.as_slice()]);
        assert_eq!(c[0].ap, Some(75.0));
        assert_eq!(c[0].support, 3);
        assert_eq!(c[1].ap, Some(40.0));
        assert_eq!(c[1].frame_support, 30);
    }

    #[test]
    fn table_alignment() {
        let t = render_table(
            &["Tasks".into(), "Acc".into()],
            &[vec!["S".into(), "84.6".into()], vec!["JIGSAWS".into(), "9.0".into()]],
        );
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "Tasks     Acc");
        assert_eq!(lines[2], "S        84.6");
        assert_eq!(lines[3], "JIGSAWS   9.0");
    }

    #[test]
    fn map_table_has_supports() {
        let t = render_map_table(
            &[class("Grasp", Some(88.0), 12), class("Idle", None, 0)],
            Some(88.0),
            Some(88.0),
        );
        let grasp: Vec<&str> = t.lines().nth(2).unwrap().split_whitespace().collect();
        assert_eq!(grasp, ["Grasp", "12", "88.0"]);
        assert!(t.contains("N/A"));
        assert!(t.contains("Micro mAP"));
    }
}
