//! CSV ingestion, report persistence, and the end-to-end analysis workflow.
//!
//! Data at this scale (up to ~10^4 genes) stays in human-inspectable CSV.
//! Reports carry a `#`-prefixed header block (run metadata, mixture summary,
//! decision summary) above the per-gene table. Floats are written with
//! Rust's shortest round-trip formatting, so write-then-read reproduces
//! every value exactly. Repeated runs with the same inputs differ only in
//! the timestamp header line.

use crate::empnull::{self, MixtureFit};
use crate::error::{Error, Result};
use crate::geometry::{self, PVector, PVector2, PVector3, TessellationOptions};
use crate::highdim;
use crate::mtp;
use crate::ordering::{self, OrderingScheme};
use crate::periodicity::{GStatistic, TimeCourse};
use crate::pipeline::{self, CombinedRecord};
use crate::simulate::{Method, PVectors, StudyResult};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// Read 2- or 3-column p-vectors from a CSV with header `id,p1,p2[,p3]`.
pub fn read_pvectors(path: &Path, dims: usize) -> Result<PVectors> {
    match dims {
        2 => Ok(PVectors::Two(read_pvectors2(path)?)),
        3 => Ok(PVectors::Three(read_pvectors3(path)?)),
        other => Err(Error::Config(format!("dims must be 2 or 3, got {other}"))),
    }
}

pub fn read_pvectors2(path: &Path) -> Result<Vec<PVector2>> {
    let rows = read_rows(path, 2)?;
    rows.into_iter()
        .map(|(id, v, line)| {
            PVector::new(id, [v[0], v[1]]).map_err(|e| with_line(e, line))
        })
        .collect()
}

pub fn read_pvectors3(path: &Path) -> Result<Vec<PVector3>> {
    let rows = read_rows(path, 3)?;
    rows.into_iter()
        .map(|(id, v, line)| {
            PVector::new(id, [v[0], v[1], v[2]]).map_err(|e| with_line(e, line))
        })
        .collect()
}

fn with_line(e: Error, line: usize) -> Error {
    match e {
        Error::OutOfDomain { what, value, .. } => Error::OutOfDomain {
            what,
            value,
            line: Some(line),
        },
        other => other,
    }
}

fn read_rows(path: &Path, dims: usize) -> Result<Vec<(String, Vec<f64>, usize)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut expected = vec!["id".to_string()];
    for d in 1..=dims {
        expected.push(format!("p{d}"));
    }
    let got: Vec<&str> = headers.iter().collect();
    if got != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "expected header `{}`, found `{}`",
                expected.join(","),
                got.join(",")
            ),
        });
    }

    let mut seen = std::collections::HashSet::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or(rows.len() + 2);
        if record.len() != dims + 1 {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, found {}", dims + 1, record.len()),
            });
        }
        let id = record[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId { id, line });
        }
        let mut values = Vec::with_capacity(dims);
        for k in 1..=dims {
            let v: f64 = record[k].trim().parse().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse `{}` as a number", &record[k]),
            })?;
            values.push(v);
        }
        rows.push((id, values, line));
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(rows)
}

/// Read gene time courses: one id column, then one column per time point.
pub fn read_timecourses(path: &Path) -> Result<Vec<TimeCourse>> {
    let mut reader = csv::Reader::from_path(path)?;
    let n_cols = reader.headers()?.len();
    if n_cols < 2 {
        return Err(Error::Parse {
            line: 1,
            msg: "expected an id column followed by time point columns".into(),
        });
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: 0,
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let id = record[0].to_string();
        let mut values = Vec::with_capacity(n_cols - 1);
        for k in 1..record.len() {
            let field = record[k].trim();
            if field.is_empty() {
                return Err(Error::Parse {
                    line,
                    msg: format!("gene `{id}` has a missing measurement"),
                });
            }
            values.push(field.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse `{field}` as a number"),
            })?);
        }
        out.push(TimeCourse {
            id,
            values,
            spacing_minutes: None,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(out)
}

/// All knobs of the `analyze` workflow.
#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub dims: usize,
    pub scheme: OrderingScheme,
    pub method: Method,
    pub alpha: f64,
    pub fdr_cutoff: f64,
    pub null_j: usize,
    pub null_p: f64,
    pub seed: u64,
    pub jitter_duplicates: bool,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            dims: 2,
            scheme: OrderingScheme::Summation,
            method: Method::Bh,
            alpha: 0.05,
            fdr_cutoff: 0.05,
            null_j: 2,
            null_p: 800.0,
            seed: 0,
            jitter_duplicates: false,
        }
    }
}

impl AnalyzeOptions {
    fn flags_line(&self) -> String {
        format!(
            "dims={} scheme={} method={} alpha={} fdr-cutoff={} null-J={} null-P={} jitter-duplicates={}",
            self.dims,
            self.scheme,
            self.method,
            self.alpha,
            self.fdr_cutoff,
            self.null_j,
            self.null_p,
            self.jitter_duplicates
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionSummary {
    pub rule: String,
    pub level: f64,
    pub rejections: usize,
}

/// Everything `analyze` produces: run metadata, the optional mixture fit,
/// the per-gene table in rank order, and the decision summary.
#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub version: String,
    pub seed: u64,
    pub flags: String,
    pub jitter_applied: bool,
    pub mixture: Option<MixtureFit>,
    pub records: Vec<CombinedRecord>,
    pub decision: DecisionSummary,
}

/// Run the full analysis workflow on a p-vector CSV.
pub fn analyze(path: &Path, opts: &AnalyzeOptions) -> Result<AnalysisReport> {
    let tess_opts = TessellationOptions {
        jitter_duplicates: opts.jitter_duplicates,
        jitter_seed: opts.seed,
    };
    let (mut records, jitter_applied) = match read_pvectors(path, opts.dims)? {
        PVectors::Two(ps) => {
            if ps.len() < 2 {
                return Err(Error::TooFewPoints {
                    need: 2,
                    got: ps.len(),
                });
            }
            let ranking = ordering::rank_pvectors(opts.scheme, &ps)?;
            let tess = geometry::voronoi_tessellate_with(&ps, tess_opts)?;
            let areas = geometry::cell_areas(&tess);
            (
                pipeline::assemble_records(&ps, &ranking.order, &areas)?,
                tess.jitter_applied(),
            )
        }
        PVectors::Three(ps) => {
            if opts.scheme == OrderingScheme::DeLichtenberg {
                return Err(Error::UnsupportedScheme {
                    scheme: opts.scheme.name().into(),
                    dims: 3,
                });
            }
            let ranking = ordering::rank_pvectors(opts.scheme, &ps)?;
            let areas = highdim::pairwise_average_areas_with(&ps, tess_opts)?;
            (
                pipeline::assemble_records(&ps, &ranking.order, &areas.mean)?,
                areas.jitter_applied,
            )
        }
    };

    let mut mixture = None;
    let decision = match opts.method {
        Method::Bh | Method::SpacingsBh => {
            let t: Vec<f64> = records.iter().map(|r| r.t.min(1.0)).collect();
            let d = if opts.method == Method::Bh {
                mtp::bh_reject(&t, opts.alpha)?
            } else {
                mtp::spacings_bh(&t, opts.alpha)?
            };
            for &pos in &d.rejected {
                records[pos].reject = true;
            }
            DecisionSummary {
                rule: opts.method.name().into(),
                level: opts.alpha,
                rejections: d.k,
            }
        }
        Method::EmpiricalNull => {
            let z: Vec<f64> = records.iter().map(|r| r.z).collect();
            let fit = empnull::fit_mixture(&z, opts.null_j, opts.null_p, opts.seed)?;
            empnull::fill_fdr(&mut records, &fit);
            let d = mtp::leftfdr_reject(&records, opts.fdr_cutoff)?;
            for &pos in &d.rejected {
                records[pos].reject = true;
            }
            mixture = Some(fit);
            DecisionSummary {
                rule: opts.method.name().into(),
                level: opts.fdr_cutoff,
                rejections: d.k,
            }
        }
        Method::MaxBh => {
            return Err(Error::Config(
                "analyze applies Voronoi combination; use `--method bh|spacings-bh|empirical-null`"
                    .into(),
            ))
        }
    };

    Ok(AnalysisReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: opts.seed,
        flags: opts.flags_line(),
        jitter_applied,
        mixture,
        records,
        decision,
    })
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Write a report: `#` header block followed by the per-gene CSV table.
pub fn write_report<W: Write>(report: &AnalysisReport, mut w: W) -> Result<()> {
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    writeln!(w, "# voronoi-fdr {}", report.version)?;
    writeln!(w, "# timestamp: {timestamp}")?;
    writeln!(w, "# seed: {}", report.seed)?;
    writeln!(w, "# flags: {}", report.flags)?;
    writeln!(w, "# jitter-applied: {}", report.jitter_applied)?;
    if let Some(fit) = &report.mixture {
        writeln!(
            w,
            "# mixture: J={} P={} null={} weights={} means={} scales={} loglik={} iterations={}",
            fit.components(),
            fit.penalty,
            fit.null_index,
            join_floats(&fit.weights),
            join_floats(&fit.means),
            join_floats(&fit.scales),
            fit.log_likelihood,
            fit.iterations
        )?;
    }
    writeln!(
        w,
        "# decision: rule={} level={} rejections={}",
        report.decision.rule, report.decision.level, report.decision.rejections
    )?;

    let dims = report.records.first().map(|r| r.coords.len()).unwrap_or(2);
    let p_cols: Vec<String> = (1..=dims).map(|d| format!("p{d}")).collect();
    writeln!(w, "id,{},rank,area,T,Z,fdr,leftFDR,reject", p_cols.join(","))?;
    for r in &report.records {
        let coords = join_floats(&r.coords);
        let fdr = r.fdr.map(|v| v.to_string()).unwrap_or_default();
        let left = r.left_fdr.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.id, coords, r.rank, r.area, r.t, r.z, fdr, left, r.reject
        )?;
    }
    Ok(())
}

pub fn write_report_path(report: &AnalysisReport, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_report(report, BufWriter::new(file))
}

/// A report read back from disk: raw header lines plus the per-gene table.
#[derive(Debug, Clone)]
pub struct ReportFile {
    pub header: Vec<String>,
    pub records: Vec<CombinedRecord>,
}

/// Re-read a per-gene report table.
pub fn read_report(path: &Path) -> Result<ReportFile> {
    let file = std::fs::File::open(path)?;
    let mut header = Vec::new();
    let mut body = String::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if line.starts_with('#') {
            header.push(line);
        } else {
            body.push_str(&line);
            body.push('\n');
        }
    }
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let headers = reader.headers()?.clone();
    let cols: Vec<&str> = headers.iter().collect();
    let dims = cols.iter().filter(|c| c.starts_with('p')).count();
    if cols.first() != Some(&"id") || !(2..=3).contains(&dims) {
        return Err(Error::Parse {
            line: header.len() + 1,
            msg: format!("unexpected report table header `{}`", cols.join(",")),
        });
    }
    let parse_f64 = |s: &str, line: usize| -> Result<f64> {
        s.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("cannot parse `{s}` as a number"),
        })
    };
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0) + header.len();
        let mut coords = Vec::with_capacity(dims);
        for k in 1..=dims {
            coords.push(parse_f64(&record[k], line)?);
        }
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f64(s, line).map(Some)
            }
        };
        records.push(CombinedRecord {
            id: record[0].to_string(),
            coords,
            rank: record[dims + 1].parse().map_err(|_| Error::Parse {
                line,
                msg: "bad rank".into(),
            })?,
            area: parse_f64(&record[dims + 2], line)?,
            t: parse_f64(&record[dims + 3], line)?,
            z: parse_f64(&record[dims + 4], line)?,
            fdr: opt(&record[dims + 5])?,
            left_fdr: opt(&record[dims + 6])?,
            reject: record[dims + 7].trim() == "true",
        });
    }
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(ReportFile { header, records })
}

/// Summary text for the `report` subcommand.
pub fn summarize_report(report: &ReportFile) -> String {
    let mut out = String::new();
    for line in &report.header {
        if !line.starts_with("# timestamp") {
            out.push_str(line);
            out.push('\n');
        }
    }
    let rejected: Vec<&CombinedRecord> = report.records.iter().filter(|r| r.reject).collect();
    out.push_str(&format!(
        "genes: {}\nrejections: {}\n",
        report.records.len(),
        rejected.len()
    ));
    for r in rejected.iter().take(20) {
        out.push_str(&format!("  rank {:>4}  T={:.6}  {}\n", r.rank, r.t, r.id));
    }
    if rejected.len() > 20 {
        out.push_str(&format!("  ... and {} more\n", rejected.len() - 20));
    }
    out
}

/// Study results as plot-ready CSV.
pub fn write_study_csv<W: Write>(result: &StudyResult, mut w: W) -> Result<()> {
    writeln!(w, "scheme,method,rho,muA,fdr,fdr_se,power,power_se,reps")?;
    for r in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.scheme, r.method, r.rho, r.mu_a, r.fdr, r.fdr_se, r.power, r.power_se, r.reps
        )?;
    }
    Ok(())
}

/// Per-gene G statistics as CSV.
pub fn write_gtest_csv<W: Write>(
    series: &[TimeCourse],
    stats: &[GStatistic],
    mut w: W,
) -> Result<()> {
    writeln!(w, "id,g,pvalue")?;
    for (s, g) in series.iter().zip(stats) {
        writeln!(w, "{},{},{}", s.id, g.g, g.pvalue)?;
    }
    Ok(())
}

/// Tessellation dump: one row per cell with its polygon.
pub fn write_tessellation_csv<W: Write>(
    ps: &[PVector2],
    tess: &geometry::Tessellation,
    mut w: W,
) -> Result<()> {
    writeln!(w, "id,area,vertices")?;
    for cell in tess.cells() {
        let verts = cell
            .vertices
            .iter()
            .map(|v| format!("{} {}", v[0], v[1]))
            .collect::<Vec<_>>()
            .join(";");
        writeln!(w, "{},{},{}", ps[cell.site].id, cell.area, verts)?;
    }
    Ok(())
}
