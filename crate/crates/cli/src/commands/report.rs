//! `report`: render metric JSONs as an aligned text or CSV table, with
//! optional biased/unbiased split columns, model deltas and FID values.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use warpeval_core::bias::BiasSplit;
use warpeval_core::metrics::{ClassMetricTable, MetricsReport};

use crate::config::ToolConfig;

#[derive(Debug, clap::Args)]
pub struct ReportArgs {
    /// Metrics JSONs as name=path (repeatable). With exactly two models a
    /// delta row (second minus first) is added; list the baseline first.
    #[arg(long = "metrics", value_name = "NAME=PATH", required = true)]
    pub metrics: Vec<String>,
    /// Bias-split JSON; adds split columns recomputed for every model.
    #[arg(long)]
    pub split: Option<PathBuf>,
    /// Externally computed FID values as name=value (repeatable).
    #[arg(long = "fid", value_name = "NAME=VALUE")]
    pub fid: Vec<String>,
    /// Table format.
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    pub format: ReportFormat,
    /// Output directory; the table goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Text,
    Csv,
}

#[derive(Debug, Clone)]
struct Row {
    name: String,
    cells: Vec<Option<f64>>,
}

pub fn run(args: &ReportArgs, cfg: ToolConfig) -> Result<usize> {
    let mut models: Vec<(String, MetricsReport)> = Vec::new();
    for raw in &args.metrics {
        let (name, path) = super::key_value(raw, "--metrics")?;
        if models.iter().any(|(n, _)| *n == name) {
            bail!("model {name:?} given twice");
        }
        let report = MetricsReport::from_path(&path)
            .with_context(|| format!("loading metrics for {name:?}"))?;
        models.push((name, report));
    }

    let mut fids: BTreeMap<String, f64> = BTreeMap::new();
    for raw in &args.fid {
        let (name, value) = super::key_value(raw, "--fid")?;
        if !models.iter().any(|(n, _)| *n == name) {
            bail!("--fid names unknown model {name:?}");
        }
        if fids.contains_key(&name) {
            bail!("FID for {name:?} given twice");
        }
        let value: f64 = value
            .parse()
            .with_context(|| format!("FID value for {name:?}"))?;
        fids.insert(name, value);
    }

    let explicit_split = args.split.as_ref().map(BiasSplit::from_path).transpose()?;
    let use_embedded = explicit_split.is_none() && models.iter().all(|(_, r)| r.splits.is_some());
    if explicit_split.is_none() && !use_embedded && models.iter().any(|(_, r)| r.splits.is_some()) {
        eprintln!(
            "note: split columns omitted; not every metrics file carries a split block \
             (pass --split to recompute one uniformly)"
        );
    }
    let with_split = explicit_split.is_some() || use_embedded;
    let with_fid = !fids.is_empty();

    let mut headers: Vec<&str> = vec!["model", "PA", "MA", "mIoU"];
    if with_split {
        headers.extend(["MA-BC", "MA-UC", "mIoU-BC", "mIoU-UC"]);
    }
    if with_fid {
        headers.push("FID");
    }

    let mut rows: Vec<Row> = Vec::new();
    for (name, report) in &models {
        let mut cells = vec![
            Some(report.aggregate.pa_overall),
            Some(report.aggregate.ma),
            Some(report.aggregate.miou),
        ];
        if let Some(split) = &explicit_split {
            let (ma_bc, miou_bc) = table_means(&report.per_class, &split.biased_set())?;
            let (ma_uc, miou_uc) = table_means(&report.per_class, &split.unbiased_set())?;
            cells.extend([ma_bc, ma_uc, miou_bc, miou_uc]);
        } else if use_embedded {
            let block = report.splits.as_ref().expect("checked above");
            cells.extend([
                block.biased.ma,
                block.unbiased.ma,
                block.biased.miou,
                block.unbiased.miou,
            ]);
        }
        if with_fid {
            cells.push(fids.get(name).copied());
        }
        rows.push(Row {
            name: name.clone(),
            cells,
        });
    }
    if models.len() == 2 {
        let cells = rows[0]
            .cells
            .iter()
            .zip(&rows[1].cells)
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => Some(b - a),
                _ => None,
            })
            .collect();
        rows.push(Row {
            name: "delta".into(),
            cells,
        });
    }

    let table = match args.format {
        ReportFormat::Text => render_text(&headers, &rows),
        ReportFormat::Csv => render_csv(&headers, &rows),
    };
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let file = match args.format {
                ReportFormat::Text => "report.txt",
                ReportFormat::Csv => "report.csv",
            };
            std::fs::write(dir.join(file), &table)
                .with_context(|| format!("writing {}", dir.join(file).display()))?;
            cfg.write_effective(dir)?;
        }
        None => print!("{table}"),
    }
    Ok(0)
}

/// Unweighted means of per-class PA and IoU over the present classes in
/// `ids`; `(None, None)` when the split selects no present class.
fn table_means(
    table: &ClassMetricTable,
    ids: &BTreeSet<usize>,
) -> Result<(Option<f64>, Option<f64>)> {
    if let Some(&bad) = ids.iter().find(|&&id| id >= table.n_classes()) {
        bail!(
            "split names class {bad} but the metrics cover only {} classes",
            table.n_classes()
        );
    }
    let (mut pa, mut iou) = (Vec::new(), Vec::new());
    for row in &table.classes {
        if row.present && ids.contains(&row.class_id) {
            pa.extend(row.pa);
            iou.extend(row.iou);
        }
    }
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    Ok((mean(&pa), mean(&iou)))
}

fn format_cell(value: Option<f64>, fixed: bool) -> String {
    match value {
        Some(v) if fixed => format!("{v:.4}"),
        Some(v) => format!("{v}"),
        None => String::new(),
    }
}

fn render_text(headers: &[&str], rows: &[Row]) -> String {
    let mut grid: Vec<Vec<String>> = vec![headers.iter().map(|h| h.to_string()).collect()];
    for row in rows {
        let mut line = vec![row.name.clone()];
        line.extend(row.cells.iter().map(|&c| {
            let s = format_cell(c, true);
            if s.is_empty() {
                "-".to_string()
            } else {
                s
            }
        }));
        grid.push(line);
    }
    let widths: Vec<usize> = (0..headers.len())
        .map(|c| grid.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &grid {
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                out.push_str("  ");
            }
            if c == 0 {
                out.push_str(&format!("{cell:<width$}", width = widths[c]));
            } else {
                out.push_str(&format!("{cell:>width$}", width = widths[c]));
            }
        }
        out.push('\n');
    }
    out
}

fn render_csv(headers: &[&str], rows: &[Row]) -> String {
    let mut out = headers
        .iter()
        .map(|h| h.to_lowercase().replace('-', "_"))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for row in rows {
        let mut line = vec![row.name.clone()];
        line.extend(row.cells.iter().map(|&c| format_cell(c, false)));
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
