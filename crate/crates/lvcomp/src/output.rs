//! File formats.
//!
//! Every CSV starts with a `# lvcomp <kind> v1` comment line followed by a
//! header row. Floats are written in the shortest form that parses back to the
//! same value.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lvcomp_core::{
    FactorLabel, FactorReport, FeatureMatrix, Grid, SimulationResult, StepsMap, SurvivalCode,
    SurvivalSummary, SweepRecord,
};
use serde::Serialize;

use crate::config::{fmt_f64, Echo};

pub const FORMAT_VERSION: u32 = 1;

fn header_line(kind: &str) -> String {
    format!("# lvcomp {kind} v{FORMAT_VERSION}")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// CSV writer behind a versioned comment line.
struct CsvFile {
    path: PathBuf,
    inner: csv::Writer<BufWriter<File>>,
}

impl CsvFile {
    fn create(path: PathBuf, kind: &str, comment: Option<&str>) -> Result<Self> {
        let mut out = create(&path)?;
        let mut first = header_line(kind);
        if let Some(c) = comment {
            first.push(' ');
            first.push_str(c);
        }
        writeln!(out, "{first}").with_context(|| format!("cannot write {}", path.display()))?;
        let inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        Ok(CsvFile { path, inner })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner
            .write_record(fields)
            .with_context(|| format!("cannot write {}", self.path.display()))
    }

    fn finish(mut self) -> Result<PathBuf> {
        self.inner
            .flush()
            .with_context(|| format!("cannot write {}", self.path.display()))?;
        Ok(self.path)
    }
}

fn write_text(path: PathBuf, text: &str) -> Result<PathBuf> {
    fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create directory {}", dir.display()))
}

fn species_columns(prefix: &str, m: usize) -> impl Iterator<Item = String> + '_ {
    (1..=m).map(move |k| format!("{prefix}{k}"))
}

#[derive(Debug, Serialize)]
struct RunSummary<'a> {
    format: String,
    survival_code: String,
    steps_to_equilibrium: usize,
    converged: bool,
    final_averages: &'a [f64],
    config: BTreeMap<&'static str, &'a str>,
}

/// Writes `averages.csv`, `final_field.csv`, `summary.json`, `config.txt` and,
/// for 2D grids, `final_field.svg`.
pub fn write_run_outputs(
    dir: &Path,
    grid: &Grid,
    result: &SimulationResult,
    echo: &Echo,
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let m = result.final_state.species_count();
    let tau = result.final_state.tau();
    let mut written = Vec::new();

    let mut avg = CsvFile::create(dir.join("averages.csv"), "averages", None)?;
    avg.row(
        ["step".to_string(), "t".to_string()]
            .into_iter()
            .chain(species_columns("u", m)),
    )?;
    for (n, a) in result.average_trajectory.iter().enumerate() {
        avg.row(
            [n.to_string(), fmt_f64(n as f64 * tau)]
                .into_iter()
                .chain(a.iter().map(|v| fmt_f64(*v))),
        )?;
    }
    written.push(avg.finish()?);

    written.push(write_field(&dir.join("final_field.csv"), grid, result)?);

    let summary = RunSummary {
        format: format!("lvcomp-run-summary/{FORMAT_VERSION}"),
        survival_code: result.survival_code.to_string(),
        steps_to_equilibrium: result.steps_to_equilibrium,
        converged: result.converged,
        final_averages: result.final_averages(),
        config: echo.entries().collect(),
    };
    let json = serde_json::to_string_pretty(&summary)? + "\n";
    written.push(write_text(dir.join("summary.json"), &json)?);
    written.push(write_text(dir.join("config.txt"), &echo.to_text())?);

    if grid.dim() == 2 {
        written.push(write_text(
            dir.join("final_field.svg"),
            &heatmap_svg(grid, result),
        )?);
    }
    Ok(written)
}

fn write_field(path: &Path, grid: &Grid, result: &SimulationResult) -> Result<PathBuf> {
    let state = &result.final_state;
    let m = state.species_count();
    let mut f = CsvFile::create(path.to_path_buf(), "final_field", None)?;
    let coords: &[&str] = if grid.dim() == 1 { &["x"] } else { &["x", "y"] };
    f.row(
        std::iter::once("cell".to_string())
            .chain(coords.iter().map(|c| c.to_string()))
            .chain(species_columns("u", m)),
    )?;
    for i in 0..state.cell_count() {
        let (x, y) = grid.cell_center(i);
        let mut row = vec![i.to_string(), fmt_f64(x)];
        if grid.dim() == 2 {
            row.push(fmt_f64(y));
        }
        row.extend((0..m).map(|k| fmt_f64(state.species(k)[i])));
        f.row(row)?;
    }
    f.finish()
}

/// Cell values of `final_field.csv`, species-major like `FieldState`.
pub fn read_field(path: &Path) -> Result<(usize, Vec<f64>)> {
    let mut rdr = csv_reader(path)?;
    let headers = rdr.headers()?.clone();
    let first_u = headers
        .iter()
        .position(|h| h == "u1")
        .with_context(|| format!("{}: no u1 column", path.display()))?;
    let m = headers.len() - first_u;
    let mut cols = vec![Vec::new(); m];
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("cannot read {}", path.display()))?;
        for (k, col) in cols.iter_mut().enumerate() {
            col.push(parse_field(path, &rec, first_u + k)?);
        }
    }
    Ok((m, cols.concat()))
}

/// Grayscale map of each species' final field, black at 0 and white at 1.
pub fn heatmap_svg(grid: &Grid, result: &SimulationResult) -> String {
    let state = &result.final_state;
    let n = grid.cells_per_axis();
    let m = state.species_count();
    let px = (240 / n).max(1);
    let side = px * n;
    let gap = 20;
    let width = m * side + (m + 1) * gap;
    let height = side + 2 * gap;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         shape-rendering=\"crispEdges\">\n"
    );
    for k in 0..m {
        let x0 = gap + k * (side + gap);
        s += &format!(
            "<text x=\"{x0}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">u{}</text>\n",
            gap - 6,
            k + 1
        );
        for (i, &u) in state.species(k).iter().enumerate() {
            let (ix, iy) = grid.cell_coords(i);
            let g = (255.0 * u.clamp(0.0, 1.0)).round() as u8;
            // y grows upwards in the domain, downwards in SVG
            s += &format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{px}\" height=\"{px}\" fill=\"rgb({g},{g},{g})\"/>\n",
                x0 + ix * px,
                gap + (n - 1 - iy) * px,
            );
        }
    }
    s += "</svg>\n";
    s
}

fn record_header(m: usize) -> Vec<String> {
    let mut h: Vec<String> = ["run", "converged", "steps", "code"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let probe = SweepRecord {
        run_index: 0,
        growth: vec![0.0; m],
        raw_diffusion: vec![0.0; m],
        diffusion: vec![0.0; m],
        competition: vec![0.0; m * (m - 1)],
        initial: vec![0.0; m],
        final_averages: vec![0.0; m],
        survival_code: SurvivalCode::new(vec![false; m]),
        steps_to_equilibrium: 0,
        converged: true,
    };
    h.extend(probe.flat_params().into_iter().map(|(n, _)| n));
    h.extend(species_columns("fin", m));
    h
}

/// Writes `records.csv`, one row per run in run-index order.
pub fn write_records(path: &Path, records: &[SweepRecord]) -> Result<PathBuf> {
    let m = records.first().map_or(0, SweepRecord::species_count);
    let mut f = CsvFile::create(path.to_path_buf(), "records", Some(&format!("species={m}")))?;
    f.row(record_header(m))?;
    for r in records {
        let mut row = vec![
            r.run_index.to_string(),
            u8::from(r.converged).to_string(),
            r.steps_to_equilibrium.to_string(),
            r.survival_code.to_string(),
        ];
        row.extend(r.flat_params().into_iter().map(|(_, v)| fmt_f64(v)));
        row.extend(r.final_averages.iter().map(|v| fmt_f64(*v)));
        f.row(row)?;
    }
    f.finish()
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(f))
}

fn parse_field(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<f64> {
    let text = rec
        .get(i)
        .with_context(|| format!("{}: short row", path.display()))?;
    text.parse()
        .with_context(|| format!("{}: `{text}` is not a number", path.display()))
}

/// Reads a `records.csv` written by [`write_records`].
pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut rdr = csv_reader(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let m = headers.iter().filter(|h| h.starts_with("fin")).count();
    if m == 0 || headers != record_header(m) {
        bail!("{}: unexpected header {:?}", path.display(), headers);
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.with_context(|| format!("cannot read {}", path.display()))?;
        let num = |i: usize| parse_field(path, &rec, i);
        let int = |i: usize| -> Result<usize> {
            rec.get(i)
                .and_then(|t| t.parse().ok())
                .with_context(|| format!("{}: bad integer in column {i}", path.display()))
        };
        let block = |start: usize, len: usize| -> Result<Vec<f64>> {
            (start..start + len).map(num).collect()
        };
        let mut at = 4;
        let growth = block(at, m)?;
        at += m;
        let raw_diffusion = block(at, m)?;
        at += m;
        let diffusion = block(at, m)?;
        at += m;
        let competition = block(at, m * (m - 1))?;
        at += m * (m - 1);
        let initial = block(at, m)?;
        at += m;
        let final_averages = block(at, m)?;
        let code: SurvivalCode = rec
            .get(3)
            .unwrap_or("")
            .parse()
            .with_context(|| format!("{}: bad survival code", path.display()))?;
        out.push(SweepRecord {
            run_index: int(0)?,
            converged: int(1)? == 1,
            steps_to_equilibrium: int(2)?,
            survival_code: code,
            growth,
            raw_diffusion,
            diffusion,
            competition,
            initial,
            final_averages,
        });
    }
    Ok(out)
}

/// Writes `survival_summary.csv`; the comment line carries the run totals and
/// the non-converged count, which is excluded from the percentages.
pub fn write_survival_summary(path: &Path, summary: &SurvivalSummary) -> Result<PathBuf> {
    let comment = format!(
        "runs={} converged={} nc={}",
        summary.total,
        summary.converged(),
        summary.non_converged
    );
    let mut f = CsvFile::create(path.to_path_buf(), "survival_summary", Some(&comment))?;
    f.row(["code", "count", "percent"])?;
    for (code, count, pct) in summary.rounded_percentages() {
        f.row([code.to_string(), count.to_string(), format!("{pct:.2}")])?;
    }
    f.finish()
}

pub fn write_steps_map(path: &Path, map: &StepsMap) -> Result<PathBuf> {
    let mut f = CsvFile::create(path.to_path_buf(), "steps_map", None)?;
    f.row(
        std::iter::once("run".to_string())
            .chain(map.columns.iter().cloned())
            .chain(["steps", "code", "converged"].iter().map(|s| s.to_string())),
    )?;
    for r in &map.rows {
        f.row(
            std::iter::once(r.run_index.to_string())
                .chain(r.coords.iter().map(|v| fmt_f64(*v)))
                .chain([
                    r.steps.to_string(),
                    r.survival_code.to_string(),
                    u8::from(r.converged).to_string(),
                ]),
        )?;
    }
    f.finish()
}

/// `correlation.csv`, `loadings.csv` and `factors.txt`.
pub fn write_analysis(
    dir: &Path,
    features: &FeatureMatrix,
    report: &FactorReport,
    labels: &[FactorLabel],
) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    let p = features.cols();

    let mut c = CsvFile::create(dir.join("correlation.csv"), "correlation", None)?;
    c.row(std::iter::once("feature".to_string()).chain(features.names.iter().cloned()))?;
    for i in 0..p {
        c.row(
            std::iter::once(features.names[i].clone())
                .chain(report.correlation.row(i).iter().map(|v| fmt_f64(*v))),
        )?;
    }
    written.push(c.finish()?);

    let f = report.factor_count();
    let mut l = CsvFile::create(dir.join("loadings.csv"), "loadings", None)?;
    l.row(
        ["feature".to_string(), "group".to_string()]
            .into_iter()
            .chain((1..=f).map(|j| format!("F{j}"))),
    )?;
    for i in 0..p {
        l.row(
            [features.names[i].clone(), features.groups[i].to_string()]
                .into_iter()
                .chain(report.loadings.row(i).iter().map(|v| fmt_f64(*v))),
        )?;
    }
    written.push(l.finish()?);

    written.push(write_text(
        dir.join("factors.txt"),
        &factors_text(report, labels),
    )?);
    Ok(written)
}

pub fn factors_text(report: &FactorReport, labels: &[FactorLabel]) -> String {
    let mut s = header_line("factors") + "\n";
    for l in labels {
        s += &format!("{l}\n");
    }
    s += &format!("Cum. Var. {:.2}%\n", 100.0 * report.cumulative_variance);
    s
}
