//! Table rendering for offset and correlation analyses and boxplot data.
//!
//! Every number is printed with three decimals. Rendering is a pure function
//! of its inputs.

use std::fmt::Write as _;

use crate::corpus::{Corpus, ResultTable};
use crate::metrics::MetricId;
use crate::stats::{
    correlate, describe, offsets, partition_by_sc, CorrelationRow, DescriptiveStats, OffsetTable,
    PartitionKind,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocFormat {
    Text,
    Csv,
    Markdown,
}

impl DocFormat {
    pub const ALL: [DocFormat; 3] = [DocFormat::Text, DocFormat::Csv, DocFormat::Markdown];

    pub fn extension(self) -> &'static str {
        match self {
            DocFormat::Text => "txt",
            DocFormat::Csv => "csv",
            DocFormat::Markdown => "md",
        }
    }
}

pub fn fmt3(v: f64) -> String {
    format!("{v:.3}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Flag {
    None,
    Best,
    Worst,
}

impl Flag {
    fn label(self) -> &'static str {
        match self {
            Flag::None => "",
            Flag::Best => "best",
            Flag::Worst => "worst",
        }
    }
}

/// Flags the best and worst values at display precision; ties are flagged
/// together. A column where every value is equal is flagged best only.
fn flags(values: &[Option<f64>], lower_is_better: bool) -> Vec<Flag> {
    let shown: Vec<Option<i64>> = values
        .iter()
        .map(|v| v.map(|x| (x * 1000.0).round() as i64))
        .collect();
    let defined = shown.iter().flatten();
    let (Some(lo), Some(hi)) = (defined.clone().min(), defined.max()) else {
        return vec![Flag::None; values.len()];
    };
    let (best, worst) = if lower_is_better {
        (*lo, *hi)
    } else {
        (*hi, *lo)
    };
    shown
        .iter()
        .map(|v| match v {
            Some(x) if *x == best => Flag::Best,
            Some(x) if *x == worst => Flag::Worst,
            _ => Flag::None,
        })
        .collect()
}

/// A rectangular table rendered to one of the document formats.
struct Grid {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    notes: Vec<String>,
}

impl Grid {
    fn render(&self, format: DocFormat) -> String {
        let mut out = String::new();
        match format {
            DocFormat::Csv => {
                let line = |cells: &[String]| {
                    cells
                        .iter()
                        .map(|c| {
                            if c.contains([',', '"', '\n']) {
                                format!("\"{}\"", c.replace('"', "\"\""))
                            } else {
                                c.clone()
                            }
                        })
                        .collect::<Vec<_>>()
                        .join(",")
                };
                writeln!(out, "{}", line(&self.header)).unwrap();
                for r in &self.rows {
                    writeln!(out, "{}", line(r)).unwrap();
                }
            }
            DocFormat::Markdown => {
                writeln!(out, "| {} |", self.header.join(" | ")).unwrap();
                let sep: Vec<&str> = self
                    .header
                    .iter()
                    .enumerate()
                    .map(|(i, _)| if i == 0 { ":---" } else { "---:" })
                    .collect();
                writeln!(out, "| {} |", sep.join(" | ")).unwrap();
                for r in &self.rows {
                    writeln!(out, "| {} |", r.join(" | ")).unwrap();
                }
                for n in &self.notes {
                    writeln!(out, "\n{n}").unwrap();
                }
            }
            DocFormat::Text => {
                let widths: Vec<usize> = (0..self.header.len())
                    .map(|c| {
                        std::iter::once(&self.header)
                            .chain(&self.rows)
                            .map(|r| r[c].chars().count())
                            .max()
                            .unwrap_or(0)
                    })
                    .collect();
                let line = |cells: &[String]| {
                    cells
                        .iter()
                        .zip(&widths)
                        .enumerate()
                        .map(|(i, (c, w))| {
                            if i == 0 {
                                format!("{c:<w$}")
                            } else {
                                format!("{c:>w$}")
                            }
                        })
                        .collect::<Vec<_>>()
                        .join("  ")
                        .trim_end()
                        .to_string()
                };
                writeln!(out, "{}", line(&self.header)).unwrap();
                let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
                writeln!(out, "{}", "-".repeat(total)).unwrap();
                for r in &self.rows {
                    writeln!(out, "{}", line(r)).unwrap();
                }
                for n in &self.notes {
                    writeln!(out, "{n}").unwrap();
                }
            }
        }
        out
    }
}

fn with_flag(cell: String, flag: Flag, format: DocFormat) -> String {
    match (flag, format) {
        (Flag::None, _) | (_, DocFormat::Csv) => cell,
        (f, DocFormat::Markdown) => format!("**{cell}** ({})", f.label()),
        (f, DocFormat::Text) => format!("{cell} ({})", f.label()),
    }
}

/// Offset tables in column order; `None` marks an empty partition.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetReport {
    pub columns: Vec<(PartitionKind, Option<OffsetTable>)>,
}

impl OffsetReport {
    pub fn table(&self, kind: PartitionKind) -> Option<&OffsetTable> {
        self.columns
            .iter()
            .find(|(k, _)| *k == kind)
            .and_then(|(_, t)| t.as_ref())
    }
}

pub fn render_offset_table(report: &OffsetReport, format: DocFormat) -> Result<String> {
    let csv = format == DocFormat::Csv;
    let mut tables = report.columns.iter().filter_map(|(_, t)| t.as_ref());
    let first = tables.next().ok_or(Error::EmptyInput)?;
    let metrics: Vec<MetricId> = first.rows.iter().map(|r| r.metric).collect();
    for (kind, t) in &report.columns {
        if let Some(t) = t {
            if !t.rows.iter().map(|r| r.metric).eq(metrics.iter().copied()) {
                return Err(Error::Config(format!(
                    "partition {kind} has a different metric set"
                )));
            }
        }
    }

    let mut header = vec!["Metric".to_string()];
    for (kind, _) in &report.columns {
        header.push(format!("{kind} value"));
        header.push(format!("{kind} offset"));
        if csv {
            header.push(format!("{kind} flag"));
        }
    }

    let column_flags: Vec<Vec<Flag>> = report
        .columns
        .iter()
        .map(|(_, t)| match t {
            Some(t) => flags(
                &t.rows.iter().map(|r| Some(r.offset)).collect::<Vec<_>>(),
                true,
            ),
            None => vec![Flag::None; metrics.len()],
        })
        .collect();

    let na = || "n/a".to_string();
    let mut rows = Vec::new();

    let mut sc_row = vec!["SC".to_string()];
    for (_, t) in &report.columns {
        match t {
            Some(t) => sc_row.extend([fmt3(t.sc_mean), "-".to_string()]),
            None => sc_row.extend([na(), na()]),
        }
        if csv {
            sc_row.push(String::new());
        }
    }
    rows.push(sc_row);

    for (i, m) in metrics.iter().enumerate() {
        let mut row = vec![m.name().to_string()];
        for (c, (_, t)) in report.columns.iter().enumerate() {
            let flag = column_flags[c][i];
            match t {
                Some(t) => {
                    let r = &t.rows[i];
                    row.push(fmt3(r.mean_value));
                    row.push(with_flag(fmt3(r.offset), flag, format));
                }
                None => row.extend([na(), na()]),
            }
            if csv {
                row.push(flag.label().to_string());
            }
        }
        rows.push(row);
    }

    let mut avg = vec!["Average".to_string()];
    for (_, t) in &report.columns {
        match t {
            Some(t) => {
                let n = t.rows.len().max(1) as f64;
                avg.push(fmt3(t.rows.iter().map(|r| r.mean_value).sum::<f64>() / n));
                avg.push(fmt3(t.rows.iter().map(|r| r.offset).sum::<f64>() / n));
            }
            None => avg.extend([na(), na()]),
        }
        if csv {
            avg.push(String::new());
        }
    }
    rows.push(avg);

    let mut notes = Vec::new();
    if !csv {
        let counts: Vec<String> = report
            .columns
            .iter()
            .map(|(k, t)| format!("{k}={}", t.as_ref().map_or(0, |t| t.n)))
            .collect();
        notes.push(format!("n: {}", counts.join(", ")));
    }
    Ok(Grid {
        header,
        rows,
        notes,
    }
    .render(format))
}

fn mean_defined(values: &[Option<f64>]) -> (Option<f64>, usize) {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    let excluded = values.len() - defined.len();
    if defined.is_empty() {
        (None, excluded)
    } else {
        (
            Some(defined.iter().sum::<f64>() / defined.len() as f64),
            excluded,
        )
    }
}

pub fn render_correlation_table(rows: &[CorrelationRow], format: DocFormat) -> String {
    let cell = |v: Option<f64>| v.map_or_else(|| "undef".to_string(), fmt3);
    let r_vals: Vec<Option<f64>> = rows.iter().map(|r| r.pearson_r).collect();
    let t_vals: Vec<Option<f64>> = rows.iter().map(|r| r.kendall_tau).collect();
    let r_flags = flags(&r_vals, false);
    let t_flags = flags(&t_vals, false);

    let mut header: Vec<String> = ["Metric", "Pearson r", "Kendall tau", "n"]
        .map(String::from)
        .to_vec();
    if format == DocFormat::Csv {
        header.extend(["r flag", "tau flag"].map(String::from));
    }
    let mut out_rows = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let mut cells = vec![
            row.metric.name().to_string(),
            with_flag(cell(row.pearson_r), r_flags[i], format),
            with_flag(cell(row.kendall_tau), t_flags[i], format),
            row.n.to_string(),
        ];
        if format == DocFormat::Csv {
            cells.push(r_flags[i].label().to_string());
            cells.push(t_flags[i].label().to_string());
        }
        out_rows.push(cells);
    }
    let (r_avg, r_ex) = mean_defined(&r_vals);
    let (t_avg, t_ex) = mean_defined(&t_vals);
    let mut avg = vec![
        "Average".to_string(),
        cell(r_avg),
        cell(t_avg),
        String::new(),
    ];
    if format == DocFormat::Csv {
        avg.extend([String::new(), String::new()]);
    }
    out_rows.push(avg);

    let mut notes = Vec::new();
    if r_ex + t_ex > 0 && format != DocFormat::Csv {
        notes.push(format!(
            "Average excludes undefined cells: {r_ex} in Pearson r, {t_ex} in Kendall tau."
        ));
    }
    Grid {
        header,
        rows: out_rows,
        notes,
    }
    .render(format)
}

/// Plot-ready summary of per-metric means plus the SC marker.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxplotData {
    pub stats: DescriptiveStats,
    pub sc_mean: f64,
    /// `metric,min,q1,median,q3,max,mean,std`
    pub data_csv: String,
    /// `marker,value`
    pub marker_csv: String,
}

pub fn render_boxplot_data(means: &[(MetricId, f64)], sc_mean: f64) -> Result<BoxplotData> {
    let values: Vec<f64> = means.iter().map(|(_, v)| *v).collect();
    let stats = describe(&values)?;
    let mut data_csv = String::from("metric,min,q1,median,q3,max,mean,std\n");
    writeln!(
        data_csv,
        "all-metrics,{},{},{},{},{},{},{}",
        fmt3(stats.min),
        fmt3(stats.q1),
        fmt3(stats.median),
        fmt3(stats.q3),
        fmt3(stats.max),
        fmt3(stats.mean),
        fmt3(stats.std)
    )
    .unwrap();
    let marker_csv = format!("marker,value\nSC,{}\n", fmt3(sc_mean));
    Ok(BoxplotData {
        stats,
        sc_mean,
        data_csv,
        marker_csv,
    })
}

/// Everything `analyze` produces for one labeled corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub samples: usize,
    pub unlabeled: usize,
    pub offsets: OffsetReport,
    pub correlations: Vec<CorrelationRow>,
    pub boxplot: BoxplotData,
}

impl AnalysisReport {
    /// Runs the offset, correlation and boxplot analyses. Offsets are
    /// computed for `kinds` in the given order; boxplot data always uses the
    /// whole labeled set.
    pub fn build(corpus: &Corpus, scores: &ResultTable, kinds: &[PartitionKind]) -> Result<Self> {
        let parts = partition_by_sc(corpus)?;
        let whole = offsets(corpus, scores, &parts.whole)?;
        let mut columns = Vec::with_capacity(kinds.len());
        for &kind in kinds {
            let p = parts.get(kind);
            let table = match kind {
                PartitionKind::Whole => Some(whole.clone()),
                _ if p.is_empty() => None,
                _ => Some(offsets(corpus, scores, p)?),
            };
            columns.push((kind, table));
        }
        let correlations = if parts.whole.len() >= 2 {
            correlate(corpus, scores)?
        } else {
            Vec::new()
        };
        let means: Vec<(MetricId, f64)> = whole
            .rows
            .iter()
            .map(|r| (r.metric, r.mean_value))
            .collect();
        let boxplot = render_boxplot_data(&means, whole.sc_mean)?;
        Ok(AnalysisReport {
            samples: corpus.len(),
            unlabeled: parts.unlabeled,
            offsets: OffsetReport { columns },
            correlations,
            boxplot,
        })
    }
}
