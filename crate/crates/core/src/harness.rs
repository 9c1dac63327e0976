//! Ensembles and parameter sweeps with CSV persistence.
//!
//! A sweep directory holds:
//!
//! ```text
//! config               verbatim sweep configuration
//! manifest             config hash, code version, file digests
//! cells.csv            per-cell means and standard errors
//! raw/cell_NNNN.csv    per-realization observables
//! raw/cell_NNNN_betweenness.csv   (value, count), when requested
//! theory.csv           overlay tables, when requested
//! ```
//!
//! Every realization seed is fixed before anything runs, so results do not
//! depend on execution order or thread count. Cells whose raw file already
//! exists under a matching manifest are loaded instead of recomputed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{MqeError, Result};
use crate::geometry::UserSet;
use crate::metrics::{modified_betweenness, observables, NetworkObservables};
use crate::optimizer::build_mqe;
use crate::theory;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// 60 points on `[0, 1]`, 40 of them on `[0.25, 0.55]`.
pub fn default_alpha_grid() -> Vec<f64> {
    let mut g: Vec<f64> = (0..10).map(|i| i as f64 * 0.025).collect();
    g.extend((0..40).map(|i| 0.25 + 0.3 * i as f64 / 39.0));
    g.extend((1..=10).map(|i| 0.55 + 0.045 * i as f64));
    g
}

fn default_true() -> bool {
    true
}

/// Default realization count for a given size.
pub fn default_realizations(n: usize) -> usize {
    if n <= 512 {
        100
    } else {
        10
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_alpha_grid")]
    pub alpha: Vec<f64>,
    pub n: Vec<usize>,
    pub l_over_lambda: Vec<f64>,
    pub p: Vec<f64>,
    /// Same count for every cell; defaults to [`default_realizations`].
    #[serde(default)]
    pub realizations: Option<usize>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub betweenness: bool,
    #[serde(default = "default_true")]
    pub theory: bool,
}

/// One `(alpha, N, L / lambda0, p)` grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellSpec {
    pub index: usize,
    pub alpha: f64,
    pub n: usize,
    pub l_over_lambda: f64,
    pub p: f64,
    pub realizations: usize,
}

impl CellSpec {
    pub fn file_stem(&self) -> String {
        format!("cell_{:04}", self.index)
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| MqeError::Parse { line: 0, msg: e.to_string() })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, empty) in [
            ("alpha", self.alpha.is_empty()),
            ("n", self.n.is_empty()),
            ("l_over_lambda", self.l_over_lambda.is_empty()),
            ("p", self.p.is_empty()),
        ] {
            if empty {
                return Err(MqeError::invalid(format!("sweep grid '{name}' is empty")));
            }
        }
        if let Some(a) = self.alpha.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(MqeError::invalid(format!("alpha {a} outside [0, 1]")));
        }
        if let Some(p) = self.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(MqeError::invalid(format!("p {p} outside [0, 1]")));
        }
        if let Some(n) = self.n.iter().find(|&&n| n < 2) {
            return Err(MqeError::invalid(format!("N = {n} is below 2")));
        }
        if let Some(l) = self.l_over_lambda.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(MqeError::invalid(format!("L / lambda0 = {l} must be positive")));
        }
        if self.realizations == Some(0) {
            return Err(MqeError::invalid("realizations must be at least 1"));
        }
        Ok(())
    }

    pub fn realizations_for(&self, n: usize) -> usize {
        self.realizations.unwrap_or_else(|| default_realizations(n))
    }

    /// Cells in `L`, `p`, `N`, `alpha` nesting order.
    pub fn cells(&self) -> Vec<CellSpec> {
        let mut out = Vec::new();
        for &l_over_lambda in &self.l_over_lambda {
            for &p in &self.p {
                for &n in &self.n {
                    for &alpha in &self.alpha {
                        out.push(CellSpec {
                            index: out.len(),
                            alpha,
                            n,
                            l_over_lambda,
                            p,
                            realizations: self.realizations_for(n),
                        });
                    }
                }
            }
        }
        out
    }

    /// Digest of everything that affects results; the output location is
    /// excluded and realization counts are hashed after defaults resolve.
    pub fn hash(&self) -> String {
        #[derive(Serialize)]
        struct Semantic<'a> {
            alpha: &'a [f64],
            n: &'a [usize],
            l_over_lambda: &'a [f64],
            p: &'a [f64],
            realizations: Vec<usize>,
            base_seed: u64,
            betweenness: bool,
            theory: bool,
        }
        let s = Semantic {
            alpha: &self.alpha,
            n: &self.n,
            l_over_lambda: &self.l_over_lambda,
            p: &self.p,
            realizations: self.n.iter().map(|&n| self.realizations_for(n)).collect(),
            base_seed: self.base_seed,
            betweenness: self.betweenness,
            theory: self.theory,
        };
        hex(&Sha256::digest(serde_json::to_vec(&s).expect("serializable")))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed of realization `r` of a cell, derived from the base seed and the
/// cell's grid coordinates.
pub fn realization_seed(base_seed: u64, cell: &CellSpec, realization: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(b"mqe-realization");
    h.update(base_seed.to_le_bytes());
    h.update((cell.index as u64).to_le_bytes());
    h.update(cell.alpha.to_bits().to_le_bytes());
    h.update((cell.n as u64).to_le_bytes());
    h.update(cell.l_over_lambda.to_bits().to_le_bytes());
    h.update(cell.p.to_bits().to_le_bytes());
    h.update((realization as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealizationRow {
    pub realization: usize,
    pub seed: u64,
    /// `Ok` or the failure message of this realization.
    pub outcome: std::result::Result<NetworkObservables, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellOutput {
    pub cell: CellSpec,
    pub rows: Vec<RealizationRow>,
    /// Betweenness histogram pooled over realizations.
    pub betweenness: Option<Vec<(u64, usize)>>,
}

/// Runs every realization of one cell. Failures are recorded per row.
pub fn run_cell(cell: &CellSpec, base_seed: u64, betweenness: bool) -> CellOutput {
    let results: Vec<(RealizationRow, Option<Vec<u64>>)> = (0..cell.realizations)
        .into_par_iter()
        .map(|r| {
            let seed = realization_seed(base_seed, cell, r);
            let net = UserSet::sample(cell.n, cell.l_over_lambda, 1.0, seed).and_then(|u| build_mqe(&u, cell.alpha, cell.p));
            match net {
                Ok(net) => {
                    let b = betweenness.then(|| modified_betweenness(&net).counts);
                    (RealizationRow { realization: r, seed, outcome: Ok(observables(&net)) }, b)
                }
                Err(e) => (RealizationRow { realization: r, seed, outcome: Err(e.to_string()) }, None),
            }
        })
        .collect();
    let hist = betweenness.then(|| {
        let mut all: Vec<u64> = results.iter().filter_map(|r| r.1.as_ref()).flatten().copied().collect();
        all.sort_unstable();
        crate::metrics::BetweennessTable { counts: all }.histogram()
    });
    CellOutput { cell: *cell, rows: results.into_iter().map(|r| r.0).collect(), betweenness: hist }
}

/// Mean and standard error of one observable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    /// Standard error uses the `k - 1` sample variance; NaN for `k < 2`.
    pub fn from_samples(xs: &[f64]) -> Self {
        let k = xs.len() as f64;
        if xs.is_empty() {
            return Estimate { mean: f64::NAN, std_error: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / k;
        let std_error = if xs.len() < 2 {
            f64::NAN
        } else {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
        };
        Estimate { mean, std_error }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub cell: CellSpec,
    pub completed: usize,
    pub q_star: Estimate,
    pub l_star: Estimate,
    pub l_star_budget: Estimate,
    pub q_min: Estimate,
    pub rho: Estimate,
    pub efficiency: Estimate,
}

pub fn summarize(out: &CellOutput) -> CellSummary {
    let ok: Vec<&NetworkObservables> = out.rows.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let est = |f: fn(&NetworkObservables) -> f64| Estimate::from_samples(&ok.iter().map(|o| f(o)).collect::<Vec<_>>());
    CellSummary {
        cell: out.cell,
        completed: ok.len(),
        q_star: est(|o| o.q_star),
        l_star: est(|o| o.l_star),
        l_star_budget: est(|o| o.l_star_budget),
        q_min: est(|o| o.q_min),
        rho: est(|o| o.rho),
        efficiency: est(|o| o.efficiency),
    }
}

pub const RAW_COLUMNS: [&str; 14] = [
    "realization",
    "seed",
    "alpha",
    "n",
    "l_over_lambda",
    "p",
    "status",
    "q_star",
    "l_star",
    "l_star_budget",
    "q_min",
    "rho",
    "efficiency",
    "length_mismatches",
];

pub const CELL_COLUMNS: [&str; 19] = [
    "cell",
    "alpha",
    "n",
    "l_over_lambda",
    "p",
    "realizations",
    "completed",
    "q_star_mean",
    "q_star_se",
    "l_star_mean",
    "l_star_se",
    "l_star_budget_mean",
    "l_star_budget_se",
    "q_min_mean",
    "q_min_se",
    "rho_mean",
    "rho_se",
    "efficiency_mean",
    "efficiency_se",
];

pub const THEORY_COLUMNS: [&str; 7] = ["quantity", "n", "l_over_lambda", "d_over_lambda", "m", "p", "value"];

pub fn write_raw_csv<W: Write>(out: &CellOutput, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(RAW_COLUMNS)?;
    let c = &out.cell;
    for row in &out.rows {
        let mut rec = vec![
            row.realization.to_string(),
            row.seed.to_string(),
            c.alpha.to_string(),
            c.n.to_string(),
            c.l_over_lambda.to_string(),
            c.p.to_string(),
        ];
        match &row.outcome {
            Ok(o) => {
                rec.push("ok".into());
                for v in [o.q_star, o.l_star, o.l_star_budget, o.q_min, o.rho, o.efficiency] {
                    rec.push(v.to_string());
                }
                rec.push(o.length_mismatches.to_string());
            }
            Err(msg) => {
                rec.push(format!("error: {msg}"));
                rec.extend(std::iter::repeat_n(String::new(), 7));
            }
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    rec.get(i)
        .ok_or(MqeError::Parse { line, msg: format!("missing column {}", RAW_COLUMNS[i]) })?
        .parse()
        .map_err(|e| MqeError::Parse { line, msg: format!("column {}: {e}", RAW_COLUMNS[i]) })
}

/// Reads back rows written by [`write_raw_csv`].
pub fn read_raw_csv<R: std::io::Read>(r: R) -> Result<Vec<RealizationRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let status = rec.get(6).unwrap_or_default();
        let outcome = if status == "ok" {
            Ok(NetworkObservables {
                q_star: parse_field(&rec, 7, line)?,
                l_star: parse_field(&rec, 8, line)?,
                l_star_budget: parse_field(&rec, 9, line)?,
                q_min: parse_field(&rec, 10, line)?,
                rho: parse_field(&rec, 11, line)?,
                efficiency: parse_field(&rec, 12, line)?,
                length_mismatches: parse_field(&rec, 13, line)?,
            })
        } else {
            Err(status.strip_prefix("error: ").unwrap_or(status).to_string())
        };
        rows.push(RealizationRow { realization: parse_field(&rec, 0, line)?, seed: parse_field(&rec, 1, line)?, outcome });
    }
    Ok(rows)
}

pub fn write_cells_csv<W: Write>(cells: &[CellSummary], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CELL_COLUMNS)?;
    for s in cells {
        let c = &s.cell;
        let mut rec = vec![
            c.index.to_string(),
            c.alpha.to_string(),
            c.n.to_string(),
            c.l_over_lambda.to_string(),
            c.p.to_string(),
            c.realizations.to_string(),
            s.completed.to_string(),
        ];
        for e in [s.q_star, s.l_star, s.l_star_budget, s.q_min, s.rho, s.efficiency] {
            rec.push(e.mean.to_string());
            rec.push(e.std_error.to_string());
        }
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// One overlay value; unused coordinates are empty in CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryRow {
    pub quantity: &'static str,
    pub n: Option<usize>,
    pub l_over_lambda: Option<f64>,
    pub d_over_lambda: Option<f64>,
    pub m: Option<usize>,
    pub p: Option<f64>,
    pub value: f64,
}

/// Which overlays to tabulate.
#[derive(Debug, Clone, Default)]
pub struct TheoryRequest {
    pub p: Vec<f64>,
    pub l_over_lambda: Vec<f64>,
    pub n: Vec<usize>,
    /// Distances for the single-pair boundary curves.
    pub d_over_lambda: Vec<f64>,
    /// Number of `alpha_c^{m-1 -> m}` thresholds / boundaries per point.
    pub steps: usize,
}

/// Quantities: `alpha_c_step` (m, p), `alpha_first` (d, m = m_bar, p),
/// `alpha_step` (d, m, p), `alpha_bar` (L, p), `q_fc`, `q_fc_small`,
/// `q_fc_large` (L) and `q_mst` (n, L).
pub fn theory_table(req: &TheoryRequest) -> Result<Vec<TheoryRow>> {
    let row = |quantity, n, l, d, m, p, value| TheoryRow { quantity, n, l_over_lambda: l, d_over_lambda: d, m, p, value };
    let mut out = Vec::new();
    for &p in req.p.iter().filter(|&&p| p < 1.0) {
        for m in 1..=req.steps {
            out.push(row("alpha_c_step", None, None, None, Some(m), Some(p), theory::alpha_c_step(m, p)?));
        }
    }
    for &l in &req.l_over_lambda {
        out.push(row("q_fc", None, Some(l), None, None, None, theory::q_fc(l)?));
        out.push(row("q_fc_small", None, Some(l), None, None, None, theory::q_fc_small(l)?));
        out.push(row("q_fc_large", None, Some(l), None, None, None, theory::q_fc_large(l)?));
        for &p in req.p.iter().filter(|&&p| p < 1.0) {
            out.push(row("alpha_bar", None, Some(l), None, None, Some(p), theory::alpha_bar(l, p)?));
        }
        for &n in &req.n {
            out.push(row("q_mst", Some(n), Some(l), None, None, None, theory::q_mst(n, l)?));
        }
    }
    for &p in req.p.iter().filter(|&&p| p < 1.0) {
        for &d in &req.d_over_lambda {
            let (m_bar, a) = theory::first_transition(d, p)?;
            out.push(row("alpha_first", None, None, Some(d), Some(m_bar), Some(p), a));
            for m in m_bar + 1..=m_bar + req.steps {
                out.push(row("alpha_step", None, None, Some(d), Some(m), Some(p), theory::crossing_alpha(d, m - 1, m, p)?));
            }
        }
    }
    Ok(out)
}

pub fn write_theory_csv<W: Write>(rows: &[TheoryRow], w: W) -> Result<()> {
    fn opt<T: ToString>(v: Option<T>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(THEORY_COLUMNS)?;
    for r in rows {
        wtr.write_record([
            r.quantity.to_string(),
            opt(r.n),
            opt(r.l_over_lambda),
            opt(r.d_over_lambda),
            opt(r.m),
            opt(r.p),
            r.value.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Log-spaced grid of `points` values on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config_hash: String,
    pub code_version: String,
    pub cells: Vec<CellSummary>,
    pub theory: Vec<TheoryRow>,
    /// Cells loaded from an earlier run rather than recomputed.
    pub resumed: usize,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_manifest_hash(path: &Path) -> Option<String> {
    let text = fs::read_to_string(path).ok()?;
    text.lines().find_map(|l| l.strip_prefix("config_hash = ").map(|s| s.trim().trim_matches('"').to_string()))
}

/// Runs (or resumes) a sweep into `out_dir`. `verbatim` is stored as the
/// `config` file; when absent the config is re-serialized.
pub fn run_sweep(config: &SweepConfig, out_dir: &Path, verbatim: Option<&str>) -> Result<SweepResult> {
    config.validate()?;
    let hash = config.hash();
    let raw_dir = out_dir.join("raw");
    fs::create_dir_all(&raw_dir)?;
    let manifest_path = out_dir.join("manifest");
    let resuming = match read_manifest_hash(&manifest_path) {
        Some(h) if h == hash => true,
        Some(h) => {
            return Err(MqeError::invalid(format!(
                "{} holds results of a different sweep (config hash {h})",
                out_dir.display()
            )))
        }
        None => false,
    };
    let config_text = match verbatim {
        Some(t) => t.to_string(),
        None => toml::to_string(config).map_err(|e| MqeError::invalid(e.to_string()))?,
    };
    fs::write(out_dir.join("config"), &config_text)?;
    // Written first so an interrupted run can be resumed.
    write_manifest(&manifest_path, config, &hash, &[])?;

    let cells = config.cells();
    let outputs: Vec<(CellOutput, bool)> = cells
        .par_iter()
        .map(|cell| -> Result<(CellOutput, bool)> {
            let raw_path = raw_dir.join(format!("{}.csv", cell.file_stem()));
            let bet_path = raw_dir.join(format!("{}_betweenness.csv", cell.file_stem()));
            if resuming && raw_path.exists() && (!config.betweenness || bet_path.exists()) {
                let rows = read_raw_csv(fs::File::open(&raw_path)?)?;
                if rows.len() == cell.realizations {
                    let betweenness = if config.betweenness { Some(read_histogram(&bet_path)?) } else { None };
                    return Ok((CellOutput { cell: *cell, rows, betweenness }, true));
                }
            }
            let out = run_cell(cell, config.base_seed, config.betweenness);
            if let Some(h) = &out.betweenness {
                let mut buf = Vec::new();
                write_histogram(h, &mut buf)?;
                write_atomic(&bet_path, &buf)?;
            }
            let mut buf = Vec::new();
            write_raw_csv(&out, &mut buf)?;
            write_atomic(&raw_path, &buf)?;
            Ok((out, false))
        })
        .collect::<Result<_>>()?;

    let resumed = outputs.iter().filter(|o| o.1).count();
    let summaries: Vec<CellSummary> = outputs.iter().map(|o| summarize(&o.0)).collect();
    let mut buf = Vec::new();
    write_cells_csv(&summaries, &mut buf)?;
    write_atomic(&out_dir.join("cells.csv"), &buf)?;

    let theory_rows = if config.theory {
        let rows = theory_table(&TheoryRequest {
            p: config.p.clone(),
            l_over_lambda: config.l_over_lambda.clone(),
            n: config.n.clone(),
            d_over_lambda: Vec::new(),
            steps: 3,
        })?;
        let mut buf = Vec::new();
        write_theory_csv(&rows, &mut buf)?;
        write_atomic(&out_dir.join("theory.csv"), &buf)?;
        rows
    } else {
        Vec::new()
    };

    let mut files = vec!["cells.csv".to_string()];
    if config.theory {
        files.push("theory.csv".into());
    }
    for c in &cells {
        files.push(format!("raw/{}.csv", c.file_stem()));
        if config.betweenness {
            files.push(format!("raw/{}_betweenness.csv", c.file_stem()));
        }
    }
    let digests = files
        .iter()
        .map(|f| Ok((f.clone(), hex(&Sha256::digest(fs::read(out_dir.join(f))?)))))
        .collect::<Result<Vec<_>>>()?;
    write_manifest(&manifest_path, config, &hash, &digests)?;

    Ok(SweepResult {
        config_hash: hash,
        code_version: CODE_VERSION.to_string(),
        cells: summaries,
        theory: theory_rows,
        resumed,
    })
}

fn write_manifest(path: &Path, config: &SweepConfig, hash: &str, files: &[(String, String)]) -> Result<()> {
    let mut s = String::new();
    s.push_str(&format!("config_hash = \"{hash}\"\n"));
    s.push_str(&format!("code_version = \"{CODE_VERSION}\"\n"));
    s.push_str(&format!("cells = {}\n", config.cells().len()));
    s.push_str(&format!("alpha = {:?}\n", config.alpha));
    s.push_str(&format!(
        "realizations = {:?}\n",
        config.n.iter().map(|&n| (n, config.realizations_for(n))).collect::<Vec<_>>()
    ));
    s.push_str(&format!("base_seed = {}\n", config.base_seed));
    s.push_str("\n[files]\n");
    for (f, d) in files {
        s.push_str(&format!("\"{f}\" = \"{d}\"\n"));
    }
    write_atomic(path, s.as_bytes())
}

pub fn write_histogram<W: Write>(hist: &[(u64, usize)], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["value", "count"])?;
    for (v, c) in hist {
        wtr.write_record([v.to_string(), c.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

fn read_histogram(path: &Path) -> Result<Vec<(u64, usize)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SweepConfig {
        SweepConfig {
            alpha: vec![0.3, 1.0],
            n: vec![12],
            l_over_lambda: vec![0.5],
            p: vec![0.2],
            realizations: Some(3),
            base_seed: 9,
            output: None,
            betweenness: true,
            theory: true,
        }
    }

    #[test]
    fn default_grid_shape() {
        let g = default_alpha_grid();
        assert_eq!(g.len(), 60);
        assert_eq!(g[0], 0.0);
        assert!((g[59] - 1.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.iter().filter(|&&a| (0.25..=0.55 + 1e-12).contains(&a)).count(), 40);
    }

    #[test]
    fn default_realization_rule() {
        assert_eq!(default_realizations(256), 100);
        assert_eq!(default_realizations(512), 100);
        assert_eq!(default_realizations(1024), 10);
    }

    #[test]
    fn empty_grid_is_an_error() {
        let mut c = small_config();
        c.p.clear();
        assert!(matches!(c.validate(), Err(MqeError::InvalidArgument(_))));
    }

    #[test]
    fn hash_tracks_semantics_only() {
        let a = small_config();
        let mut b = a.clone();
        b.output = Some("/elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.base_seed += 1;
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.alpha[0] = 0.31;
        assert_ne!(a.hash(), c.hash());
        let mut d = a.clone();
        d.realizations = None;
        let mut e = d.clone();
        e.realizations = Some(100);
        assert_eq!(d.hash(), e.hash());
    }

    #[test]
    fn seeds_are_distinct() {
        let c = small_config();
        let mut seeds: Vec<u64> =
            c.cells().iter().flat_map(|cell| (0..cell.realizations).map(|r| realization_seed(9, cell, r))).collect();
        let total = seeds.len();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), total);
    }

    #[test]
    fn raw_csv_round_trip() {
        let cell = small_config().cells()[0];
        let out = run_cell(&cell, 9, false);
        let mut buf = Vec::new();
        write_raw_csv(&out, &mut buf).unwrap();
        assert_eq!(read_raw_csv(buf.as_slice()).unwrap(), out.rows);
    }

    #[test]
    fn standard_error_scaling() {
        // Alternating +-1 samples have unit variance for any even k.
        let se = |k: usize| Estimate::from_samples(&(0..k).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect::<Vec<_>>());
        let (a, b) = (se(100), se(400));
        assert!((a.std_error / b.std_error - 2.0).abs() < 0.01);
        assert!(Estimate::from_samples(&[1.0]).std_error.is_nan());
    }

    #[test]
    fn theory_rows_cover_requested_quantities() {
        let rows = theory_table(&TheoryRequest {
            p: vec![crate::P_INV_E],
            l_over_lambda: vec![0.1],
            n: vec![1024],
            d_over_lambda: vec![0.5],
            steps: 3,
        })
        .unwrap();
        let q: Vec<&str> = rows.iter().map(|r| r.quantity).collect();
        for name in ["alpha_c_step", "q_fc", "q_fc_small", "q_fc_large", "alpha_bar", "q_mst", "alpha_first", "alpha_step"] {
            assert!(q.contains(&name), "{name}");
        }
        assert_eq!(rows.iter().filter(|r| r.quantity == "alpha_c_step").count(), 3);
    }
}
