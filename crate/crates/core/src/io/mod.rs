//! File formats: channels, matrices and games as JSON (complex entries as
//! `[re, im]`), experiment counts, and CSV reports with 12 significant digits.

pub mod tables;

use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::channels::{family, Family, QuantumChannel};
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::games::{Game, SettingCoefficients};
use crate::linalg::{c, CMatrix};
use crate::robustness::{robustness, Method};
use crate::sdp::{IterationRecord, SdpOptions};

/// A matrix entry: `[re, im]`, or a bare real number on input.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Complex([f64; 2]),
    Real(f64),
}

type MatrixJson = Vec<Vec<Entry>>;

fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.rows()).map(|i| m.row(i).iter().map(|z| Entry::Complex([z.re, z.im])).collect()).collect()
}

fn matrix_from_json(rows: &MatrixJson, field: &str) -> Result<CMatrix> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if n == 0 || cols == 0 {
        return Err(Error::Parse(format!("{field}: empty matrix")));
    }
    let mut data = Vec::with_capacity(n * cols);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(Error::Parse(format!("{field}: row {i} has {} entries, expected {cols}", r.len())));
        }
        data.extend(r.iter().map(|e| match *e {
            Entry::Complex([a, b]) => c(a, b),
            Entry::Real(a) => c(a, 0.0),
        }));
    }
    CMatrix::from_vec(n, cols, data)
}

fn parse_json<T: DeserializeOwned>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("{what}: line {}, column {}: {e}", e.line(), e.column())))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn with_path<T>(r: Result<T>, path: &Path) -> Result<T> {
    r.map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelJson {
    d_in: usize,
    d_out: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kraus: Option<Vec<MatrixJson>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    choi: Option<MatrixJson>,
}

/// Parses `{"d_in", "d_out", "kraus": [...]}` or `{"d_in", "d_out", "choi": ...}`.
pub fn channel_from_json(text: &str) -> Result<QuantumChannel> {
    let f: ChannelJson = parse_json(text, "channel")?;
    match (&f.kraus, &f.choi) {
        (Some(ks), None) => {
            let mut kraus = Vec::with_capacity(ks.len());
            for (k, m) in ks.iter().enumerate() {
                let m = matrix_from_json(m, &format!("kraus[{k}]"))?;
                if m.shape() != (f.d_out, f.d_in) {
                    return Err(Error::Parse(format!("kraus[{k}]: shape {:?}, expected ({}, {})", m.shape(), f.d_out, f.d_in)));
                }
                kraus.push(m);
            }
            QuantumChannel::from_kraus(kraus)
        }
        (None, Some(m)) => QuantumChannel::from_choi_matrix(f.d_in, f.d_out, matrix_from_json(m, "choi")?),
        _ => Err(Error::Parse("channel: exactly one of 'kraus' or 'choi' must be present".into())),
    }
}

/// Serializes in the representation the channel was built from.
pub fn channel_to_json(n: &QuantumChannel) -> String {
    let f = match n.kraus() {
        Some(ks) => ChannelJson { d_in: n.d_in(), d_out: n.d_out(), kraus: Some(ks.iter().map(matrix_to_json).collect()), choi: None },
        None => ChannelJson { d_in: n.d_in(), d_out: n.d_out(), kraus: None, choi: Some(matrix_to_json(n.choi().matrix())) },
    };
    serde_json::to_string_pretty(&f).expect("channel serializes")
}

pub fn load_channel(path: &Path) -> Result<QuantumChannel> {
    with_path(channel_from_json(&read_file(path)?), path)
}

pub fn save_channel(path: &Path, n: &QuantumChannel) -> Result<()> {
    Ok(fs::write(path, channel_to_json(n))?)
}

pub fn matrix_from_json_text(text: &str) -> Result<CMatrix> {
    let m: MatrixJson = parse_json(text, "matrix")?;
    matrix_from_json(&m, "matrix")
}

pub fn matrix_to_json_text(m: &CMatrix) -> String {
    serde_json::to_string(&matrix_to_json(m)).expect("matrix serializes")
}

pub fn load_matrix(path: &Path) -> Result<CMatrix> {
    with_path(matrix_from_json_text(&read_file(path)?), path)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameJson {
    label: String,
    inputs: Vec<MatrixJson>,
    observables: Vec<MatrixJson>,
    alpha: Vec<Vec<f64>>,
    #[serde(default)]
    eb_normalized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    setting_coefficients: Option<SettingCoefficients>,
}

pub fn game_from_json(text: &str) -> Result<Game> {
    let f: GameJson = parse_json(text, "game")?;
    let inputs = f.inputs.iter().enumerate().map(|(k, m)| matrix_from_json(m, &format!("inputs[{k}]"))).collect::<Result<_>>()?;
    let observables = f.observables.iter().enumerate().map(|(k, m)| matrix_from_json(m, &format!("observables[{k}]"))).collect::<Result<_>>()?;
    let g = Game::new(f.label, inputs, observables, f.alpha, f.eb_normalized)?;
    match f.setting_coefficients {
        Some(s) => g.with_setting_coefficients(s),
        None => Ok(g),
    }
}

pub fn game_to_json(g: &Game) -> String {
    let f = GameJson {
        label: g.label().to_string(),
        inputs: g.inputs().iter().map(matrix_to_json).collect(),
        observables: g.observables().iter().map(matrix_to_json).collect(),
        alpha: g.alpha().to_vec(),
        eb_normalized: g.eb_normalized(),
        setting_coefficients: g.setting_coefficients().cloned(),
    };
    serde_json::to_string_pretty(&f).expect("game serializes")
}

pub fn load_game(path: &Path) -> Result<Game> {
    with_path(game_from_json(&read_file(path)?), path)
}

/// One measured setting: the prepared input and the measured effect, by
/// label, with its shot and success counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsSetting {
    pub input: String,
    pub observable: String,
    pub shots: u64,
    pub successes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsRecord {
    pub game_label: String,
    pub settings: Vec<CountsSetting>,
    pub coefficient_vector: Vec<f64>,
    #[serde(default)]
    pub offset: f64,
}

impl CountsRecord {
    pub fn validate(&self) -> Result<()> {
        if self.coefficient_vector.len() != self.settings.len() {
            return Err(Error::Parse(format!(
                "coefficient_vector: {} entries for {} settings",
                self.coefficient_vector.len(),
                self.settings.len()
            )));
        }
        for (k, s) in self.settings.iter().enumerate() {
            if s.shots == 0 {
                return Err(Error::Parse(format!("settings[{k}].shots: must be at least 1")));
            }
            if s.successes > s.shots {
                return Err(Error::Parse(format!("settings[{k}].successes: {} exceeds shots {}", s.successes, s.shots)));
            }
        }
        if let Some(k) = self.coefficient_vector.iter().position(|c| !c.is_finite()) {
            return Err(Error::Parse(format!("coefficient_vector[{k}]: not a finite number")));
        }
        if !self.offset.is_finite() {
            return Err(Error::Parse("offset: not a finite number".into()));
        }
        Ok(())
    }
}

/// Score with its 1σ binomial error. Published error bars are 3σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IngestResult {
    pub score: f64,
    pub std: f64,
    pub robustness_lower_bound: f64,
}

/// `score = offset + Σ c_k p̂_k`, `std = √(Σ c_k² p̂_k(1−p̂_k)/shots_k)`.
pub fn ingest_counts(record: &CountsRecord) -> Result<IngestResult> {
    record.validate()?;
    let (mut score, mut var) = (record.offset, 0.0);
    for (s, ck) in record.settings.iter().zip(&record.coefficient_vector) {
        let p = s.successes as f64 / s.shots as f64;
        score += ck * p;
        var += ck * ck * p * (1.0 - p) / s.shots as f64;
    }
    Ok(IngestResult { score, std: var.sqrt(), robustness_lower_bound: score - 1.0 })
}

pub fn counts_from_json(text: &str) -> Result<CountsRecord> {
    let r: CountsRecord = parse_json(text, "counts")?;
    r.validate()?;
    Ok(r)
}

pub fn counts_to_json(r: &CountsRecord) -> String {
    serde_json::to_string_pretty(r).expect("counts serialize")
}

pub fn load_counts(path: &Path) -> Result<CountsRecord> {
    with_path(counts_from_json(&read_file(path)?), path)
}

/// Fixed 12-significant-digit decimal rendering.
pub fn fmt12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.00000000000".into();
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (11 - exp).clamp(0, 300) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new leading digit, e.g. 9.99…→10.0…
    let carried = s.parse::<f64>().map_or(false, |y| y.abs() >= 10f64.powi(exp + 1));
    if carried && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

/// `steps + 1` evenly spaced points from `from` to `to`.
pub fn linspace(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Ok(vec![from]);
    }
    if !from.is_finite() || !to.is_finite() {
        return Err(Error::invalid("grid endpoints must be finite"));
    }
    Ok((0..=steps).map(|k| from + (to - from) * k as f64 / steps as f64).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub method: String,
    pub value: f64,
    pub is_exact: bool,
    pub wall_time_s: f64,
}

/// Robustness of a channel family over a parameter grid, one row per
/// `(p, method)` in grid-then-method order regardless of completion order.
pub fn sweep(family_name: &str, grid: &[f64], methods: &[Method], options: &SdpOptions) -> Result<Vec<SweepRow>> {
    let channels = grid.iter().map(|&p| family(Family::from_name(family_name, p)?)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, Method)> = (0..grid.len()).flat_map(|i| methods.iter().map(move |&m| (i, m))).collect();
    jobs.par_iter()
        .map(|&(i, m)| {
            let t0 = Instant::now();
            let r = robustness(&channels[i], m, options)?;
            Ok(SweepRow { p: grid[i], method: m.label(), value: r.value, is_exact: r.is_exact, wall_time_s: t0.elapsed().as_secs_f64() })
        })
        .collect()
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Io(std::io::Error::other(e.to_string()));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &["p", "method", "value", "is_exact", "wall_time_s"],
        rows.iter().map(|r| vec![fmt12(r.p), r.method.clone(), fmt12(r.value), r.is_exact.to_string(), fmt12(r.wall_time_s)]),
    )
}

pub fn trajectory_csv(t: &Trajectory) -> Result<Vec<u8>> {
    csv_bytes(
        &["t", "robustness", "non_markovianity", "label"],
        (0..t.times.len()).map(|k| vec![fmt12(t.times[k]), fmt12(t.robustness[k]), fmt12(t.non_markovianity[k]), t.label.clone()]),
    )
}

pub fn sdp_trace_csv(history: &[IterationRecord]) -> Result<Vec<u8>> {
    csv_bytes(
        &["iteration", "primal_objective", "dual_objective", "complementarity", "primal_residual", "dual_residual", "step_primal", "step_dual"],
        history.iter().map(|h| {
            vec![
                h.iteration.to_string(),
                fmt12(h.primal_objective),
                fmt12(h.dual_objective),
                fmt12(h.complementarity),
                fmt12(h.primal_residual),
                fmt12(h.dual_residual),
                fmt12(h.step_primal),
                fmt12(h.step_dual),
            ]
        }),
    )
}
