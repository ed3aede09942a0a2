//! File formats: signal and graph CSVs, the fit report, change profiles and
//! the correlation heatmap.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::analysis::ConsensusGraph;
use crate::error::{Error, Result};
use crate::graph::{edge_pairs, n_edges, EdgeVector, GraphSequence, SignalMatrix, WindowedSignals};
use crate::solver::{FitReport, SolverConfig};
use crate::synth::ScenarioSpec;

/// Format like C's `%.{digits}g`.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Weight formatting used in every graph-valued output.
pub fn fmt9(v: f64) -> String {
    format_sig(v, 9)
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Read a numeric CSV with one node per row. A first row containing any
/// token that does not parse as a number is treated as a header and skipped.
pub fn ingest_csv(path: impl AsRef<Path>) -> Result<SignalMatrix> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Vec<Option<f64>> = tokens.iter().map(|t| t.parse::<f64>().ok()).collect();
        if rows.is_empty() && width.is_none() && parsed.iter().any(Option::is_none) {
            // header
            width = Some(tokens.len());
            continue;
        }
        let mut row = Vec::with_capacity(tokens.len());
        for (col, (tok, val)) in tokens.iter().zip(parsed).enumerate() {
            match val {
                Some(v) if v.is_finite() => row.push(v),
                Some(_) => {
                    return Err(parse_error(
                        path,
                        line_no,
                        format!("non-finite value {tok:?} in column {}", col + 1),
                    ))
                }
                None => {
                    return Err(parse_error(
                        path,
                        line_no,
                        format!("non-numeric value {tok:?} in column {}", col + 1),
                    ))
                }
            }
        }
        match width {
            Some(w) if w != row.len() => {
                return Err(parse_error(
                    path,
                    line_no,
                    format!("row has {} columns, expected {w}", row.len()),
                ))
            }
            _ => width = Some(row.len()),
        }
        rows.push(row);
    }
    if rows.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "{}: need at least 2 node rows, found {}",
            path.display(),
            rows.len()
        )));
    }
    let (n, t) = (rows.len(), rows[0].len());
    SignalMatrix::new(DMatrix::from_fn(n, t, |i, j| rows[i][j]))
}

/// Write a signal matrix as CSV with shortest round-trip number formatting.
pub fn write_signals_csv(path: impl AsRef<Path>, signals: &SignalMatrix) -> Result<()> {
    let m = signals.as_matrix();
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_file(path.as_ref(), out.as_bytes())
}

/// `i,j,w` rows for every edge in canonical order, 1-based node ids.
pub fn graph_csv(edges: &EdgeVector) -> String {
    let mut out = String::from("i,j,w\n");
    for ((i, j), &w) in edge_pairs(edges.n_nodes()).zip(edges.weights()) {
        out.push_str(&format!("{},{},{}\n", i + 1, j + 1, fmt9(w)));
    }
    out
}

pub fn write_graph_csv(path: impl AsRef<Path>, edges: &EdgeVector) -> Result<()> {
    write_file(path.as_ref(), graph_csv(edges).as_bytes())
}

/// Parse a graph CSV written by [`write_graph_csv`].
pub fn read_graph_csv(path: impl AsRef<Path>) -> Result<EdgeVector> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == "i,j,w" => {}
        _ => return Err(parse_error(path, 1, "expected header \"i,j,w\"")),
    }
    let mut entries = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(parse_error(path, line_no, "expected 3 fields"));
        }
        let i: usize = fields[0]
            .parse()
            .map_err(|_| parse_error(path, line_no, "bad node index"))?;
        let j: usize = fields[1]
            .parse()
            .map_err(|_| parse_error(path, line_no, "bad node index"))?;
        let w: f64 = fields[2]
            .parse()
            .map_err(|_| parse_error(path, line_no, "bad weight"))?;
        if !w.is_finite() {
            return Err(parse_error(path, line_no, "non-finite weight"));
        }
        entries.push((line_no, i, j, w));
    }
    let m = entries.len();
    let n = (2..=m + 1)
        .find(|&n| n_edges(n) == m)
        .ok_or_else(|| parse_error(path, 1, format!("{m} edge rows is not N(N-1)/2 for any N")))?;
    for ((line_no, i, j, _), (ei, ej)) in entries.iter().zip(edge_pairs(n)) {
        if (*i, *j) != (ei + 1, ej + 1) {
            return Err(parse_error(
                path,
                *line_no,
                format!(
                    "edge ({i},{j}) out of canonical order, expected ({},{})",
                    ei + 1,
                    ej + 1
                ),
            ));
        }
    }
    EdgeVector::new(n, entries.into_iter().map(|e| e.3).collect())
}

/// Read `graph_1.csv, graph_2.csv, …` from `dir` until the first gap.
pub fn read_graph_sequence(dir: impl AsRef<Path>) -> Result<GraphSequence> {
    let dir = dir.as_ref();
    let mut graphs = Vec::new();
    loop {
        let path = dir.join(format!("graph_{}.csv", graphs.len() + 1));
        if !path.exists() {
            break;
        }
        graphs.push(read_graph_csv(&path)?);
    }
    if graphs.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{}: no graph_1.csv found",
            dir.display()
        )));
    }
    GraphSequence::new(graphs, 0)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    write_file(path.as_ref(), text.as_bytes())
}

/// Contents of `scenario.json` written by the synth mode.
#[derive(Serialize)]
pub struct ScenarioFile<'a> {
    #[serde(flatten)]
    pub spec: &'a ScenarioSpec,
    /// 0-based first window of each segment after the first.
    pub boundaries: &'a [usize],
    pub zero_nodes: &'a [usize],
}

pub fn write_scenario(path: impl AsRef<Path>, scenario: &ScenarioFile<'_>) -> Result<()> {
    let mut json = serde_json::to_string_pretty(scenario)
        .map_err(|e| Error::InvalidInput(format!("scenario serialization: {e}")))?;
    json.push('\n');
    write_file(path.as_ref(), json.as_bytes())
}

pub fn change_profile_csv(profile: &[f64]) -> String {
    let mut out = String::from("t,l1_change\n");
    for (t, v) in profile.iter().enumerate() {
        out.push_str(&format!("{},{}\n", t + 1, fmt9(*v)));
    }
    out
}

pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|&v| fmt9(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// 8-bit binary PGM (P5) of a correlation matrix; `c ∈ [−1, 1]` maps to
/// `round(255 (c + 1) / 2)`.
pub fn correlation_pgm(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", m.ncols(), m.nrows()).into_bytes();
    for row in m.row_iter() {
        for &c in row.iter() {
            out.push((255.0 * (c.clamp(-1.0, 1.0) + 1.0) / 2.0).round() as u8);
        }
    }
    out
}

pub fn consensus_csv(c: &ConsensusGraph) -> String {
    let mut out = String::from("i,j,count,kept\n");
    let n = c.kept.n_nodes();
    for (((i, j), count), kept) in edge_pairs(n).zip(&c.counts).zip(c.kept.weights()) {
        out.push_str(&format!("{},{},{},{}\n", i + 1, j + 1, count, *kept as u8));
    }
    out
}

#[derive(Serialize)]
struct ReportFile<'a> {
    mode: &'a str,
    seed: u64,
    n_nodes: usize,
    n_windows: usize,
    window_len: usize,
    #[serde(flatten)]
    report: &'a FitReport,
    config: &'a SolverConfig,
}

/// Everything a fit run writes.
pub struct FitOutputs<'a> {
    pub mode: &'a str,
    pub seed: u64,
    pub graphs: &'a GraphSequence,
    pub signals: &'a WindowedSignals,
    pub report: &'a FitReport,
    pub config: &'a SolverConfig,
}

/// Write `graph_<t>.csv`, `report.json`, `change_profile.csv` and
/// `denoised.csv` into `dir`. Returns the paths written.
pub fn emit_results(out: &FitOutputs<'_>, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (t, g) in out.graphs.graphs.iter().enumerate() {
        let path = dir.join(format!("graph_{}.csv", t + 1));
        write_graph_csv(&path, g)?;
        written.push(path);
    }

    let file = ReportFile {
        mode: out.mode,
        seed: out.seed,
        n_nodes: out.graphs.n_nodes(),
        n_windows: out.graphs.len(),
        window_len: out.signals.window_len,
        report: out.report,
        config: out.config,
    };
    let path = dir.join("report.json");
    let mut json = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::InvalidInput(format!("report serialization: {e}")))?;
    json.push('\n');
    write_file(&path, json.as_bytes())?;
    written.push(path);

    let profile: Vec<f64> = out
        .graphs
        .graphs
        .windows(2)
        .map(|p| p[0].l1_distance(&p[1]))
        .collect();
    let path = dir.join("change_profile.csv");
    write_file(&path, change_profile_csv(&profile).as_bytes())?;
    written.push(path);

    let path = dir.join("denoised.csv");
    write_signals_csv(&path, &out.signals.concat())?;
    written.push(path);
    Ok(written)
}

/// Write `graph_corr.csv` and, if requested, `graph_corr.pgm`.
pub fn emit_correlation(m: &DMatrix<f64>, dir: impl AsRef<Path>, heatmap: bool) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("graph_corr.csv"), matrix_csv(m).as_bytes())?;
    if heatmap {
        let path = dir.join("graph_corr.pgm");
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(&correlation_pgm(m))
            .map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
