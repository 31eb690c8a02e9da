//! Verification experiments: datasets, comparison protocols, score tables
//! and error-rate curves.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::alignment::{match_minutiae_with, MatchResult};
use crate::config::{MatchConfig, DIFF_UNLIMITED};
use crate::error::{Error, Result};
use crate::imgproc::{minutiae_file, pgm, MinutiaSet};
use crate::scoring::{score_match, Fingerprint, ScoreBreakdown, CSV_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FingerId {
    pub finger: u32,
    pub impression: u32,
}

impl FingerId {
    pub fn new(finger: u32, impression: u32) -> Self {
        Self { finger, impression }
    }
}

impl fmt::Display for FingerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:03}_{}", self.finger, self.impression)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub id: FingerId,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    entries: Vec<Entry>,
}

/// `FFF_I` file stem, e.g. `101_3`.
fn parse_stem(stem: &str) -> Option<FingerId> {
    let (f, i) = stem.split_once('_')?;
    let all_digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(f) || !all_digits(i) {
        return None;
    }
    Some(FingerId::new(f.parse().ok()?, i.parse().ok()?))
}

impl Dataset {
    /// Sorts by id; duplicate ids are an error.
    pub fn new(mut entries: Vec<Entry>) -> Result<Self> {
        entries.sort_by_key(|e| e.id);
        if let Some(w) = entries.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::InvalidInput(format!(
                "duplicate entry {} ({} and {})",
                w[0].id,
                w[0].path.display(),
                w[1].path.display()
            )));
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn ids(&self) -> Vec<FingerId> {
        self.entries.iter().map(|e| e.id).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every `FFF_I.pgm` or `FFF_I.min` file of `dir`; other files are
    /// ignored.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for item in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let path = item.map_err(|e| Error::io(dir, e))?.path();
            let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
            if !matches!(ext, "pgm" | "min") || !path.is_file() {
                continue;
            }
            if let Some(id) = path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(parse_stem)
            {
                entries.push(Entry { id, path });
            }
        }
        Self::new(entries)
    }

    /// Manifest rows `finger_id,impression_id,path`; an optional header row
    /// is skipped and relative paths resolve against the manifest's folder.
    pub fn from_manifest(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = i + 1;
            let fields: Vec<&str> = line.splitn(3, ',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::format(
                    "manifest",
                    format!("row {row}: expected `finger_id,impression_id,path`"),
                ));
            }
            let (Ok(f), Ok(imp)) = (fields[0].parse::<u32>(), fields[1].parse::<u32>()) else {
                if entries.is_empty() && fields[0].parse::<f64>().is_err() {
                    continue; // header
                }
                return Err(Error::format(
                    "manifest",
                    format!("row {row}: invalid ids in `{line}`"),
                ));
            };
            let p = base.join(fields[2]);
            if !p.is_file() {
                return Err(Error::InvalidInput(format!(
                    "manifest row {row}: file `{}` not found",
                    p.display()
                )));
            }
            entries.push(Entry {
                id: FingerId::new(f, imp),
                path: p,
            });
        }
        Self::new(entries)
    }

    /// A directory or a manifest file.
    pub fn load(path: &Path) -> Result<Self> {
        if path.is_dir() {
            Self::from_dir(path)
        } else {
            Self::from_manifest(path)
        }
    }
}

/// Reads an image or minutiae file, deciding by content.
pub fn load_fingerprint(path: &Path) -> Result<Fingerprint> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if pgm::looks_like_pgm(&bytes) {
        return Ok(Fingerprint::Image(
            pgm::decode(&bytes).map_err(|e| e.in_file(path))?,
        ));
    }
    if minutiae_file::looks_like_minutiae(&bytes) {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::format("minutiae", format!("{}: not UTF-8", path.display())))?;
        let set = minutiae_file::parse(&text).map_err(|e| e.in_file(path))?;
        return Ok(Fingerprint::Minutiae(
            set.with_source(path.display().to_string()),
        ));
    }
    Err(Error::format(
        "input",
        format!(
            "{}: neither a PGM image nor a minutiae file",
            path.display()
        ),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Protocol {
    /// Impostor comparisons only between the first impressions.
    Fvc,
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Genuine,
    Impostor,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Genuine => "genuine",
            Label::Impostor => "impostor",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabeledPair {
    /// Indices into the id list, `a < b`.
    pub a: usize,
    pub b: usize,
    pub label: Label,
}

/// Comparison pairs over `ids` (sorted, unique): all same-finger pairs as
/// genuine, and cross-finger pairs as impostors. Under [`Protocol::Fvc`] the
/// impostor pairs use only the lowest impression of each finger. Pairs come
/// in index order.
pub fn pair_protocol(ids: &[FingerId], mode: Protocol) -> Result<Vec<LabeledPair>> {
    if ids.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "a dataset needs at least 2 entries, got {}",
            ids.len()
        )));
    }
    let mut first: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, id) in ids.iter().enumerate() {
        first.entry(id.finger).or_insert(i);
    }
    let mut out = Vec::new();
    for a in 0..ids.len() {
        for b in (a + 1)..ids.len() {
            let label = if ids[a].finger == ids[b].finger {
                Label::Genuine
            } else {
                Label::Impostor
            };
            let keep = match (label, mode) {
                (Label::Genuine, _) | (Label::Impostor, Protocol::AllPairs) => true,
                (Label::Impostor, Protocol::Fvc) => {
                    first[&ids[a].finger] == a && first[&ids[b].finger] == b
                }
            };
            if keep {
                out.push(LabeledPair { a, b, label });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub id_a: FingerId,
    pub id_b: FingerId,
    pub label: Label,
    pub breakdown: ScoreBreakdown,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER},label\n");
        for r in &self.rows {
            out.push_str(
                &r.breakdown
                    .csv_row(&r.id_a.to_string(), &r.id_b.to_string()),
            );
            out.push(',');
            out.push_str(&r.label.to_string());
            out.push('\n');
        }
        out
    }
}

/// Minutiae per entry. Image entries are extracted with `cfg`.
pub fn load_minutiae(ds: &Dataset, cfg: &MatchConfig) -> Result<Vec<MinutiaSet>> {
    ds.entries()
        .par_iter()
        .map(|e| {
            let fp = load_fingerprint(&e.path)?;
            fp.minutiae(cfg)
                .map(|s| s.with_source(e.path.display().to_string()))
        })
        .collect()
}

fn match_all(sets: &[MinutiaSet], pairs: &[LabeledPair], cfg: &MatchConfig) -> Vec<MatchResult> {
    let tol = cfg.tolerance();
    pairs
        .par_iter()
        .map(|p| match_minutiae_with(&sets[p.a], &sets[p.b], &tol))
        .collect()
}

fn score_all(
    ids: &[FingerId],
    sets: &[MinutiaSet],
    pairs: &[LabeledPair],
    matches: &[MatchResult],
    cfg: &MatchConfig,
) -> Result<ScoreTable> {
    let rows = pairs
        .par_iter()
        .zip(matches)
        .map(|(p, mr)| {
            Ok(ScoreRow {
                id_a: ids[p.a],
                id_b: ids[p.b],
                label: p.label,
                breakdown: score_match(&sets[p.a], &sets[p.b], mr, cfg)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreTable { rows })
}

/// Scores every protocol pair. Rows follow pair order whatever the number of
/// threads.
pub fn score_table(
    ids: &[FingerId],
    sets: &[MinutiaSet],
    mode: Protocol,
    cfg: &MatchConfig,
) -> Result<ScoreTable> {
    cfg.validate()?;
    if ids.len() != sets.len() {
        return Err(Error::InvalidInput(format!(
            "{} ids for {} minutia sets",
            ids.len(),
            sets.len()
        )));
    }
    let pairs = pair_protocol(ids, mode)?;
    let matches = match_all(sets, &pairs, cfg);
    score_all(ids, sets, &pairs, &matches, cfg)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Confusion {
    pub fn fmr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }

    pub fn fnmr(&self) -> f64 {
        ratio(self.fn_, self.tp + self.fn_)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn_)
    }

    pub fn f_measure(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

/// Pairs scoring at least `t` are accepted as matches.
pub fn confusion_at(rows: &[ScoreRow], t: f64) -> Confusion {
    let mut c = Confusion::default();
    for r in rows {
        let accept = r.breakdown.final_score >= t;
        match (r.label, accept) {
            (Label::Genuine, true) => c.tp += 1,
            (Label::Genuine, false) => c.fn_ += 1,
            (Label::Impostor, true) => c.fp += 1,
            (Label::Impostor, false) => c.tn += 1,
        }
    }
    c
}

/// `0.00, 0.01, …, 1.00`.
pub fn default_thresholds() -> Vec<f64> {
    (0..=100).map(|i| i as f64 / 100.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub threshold: f64,
    pub confusion: Confusion,
    pub fmr: f64,
    pub fnmr: f64,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f_measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub genuine: usize,
    pub impostor: usize,
    /// Gated rows left out of the rates (only with `exclude_gated`).
    pub excluded: usize,
    pub curve: Vec<CurvePoint>,
    pub eer: f64,
    /// Interpolated threshold where FMR meets FNMR.
    pub eer_threshold: f64,
    /// Grid threshold nearest to [`EvalReport::eer_threshold`].
    pub eer_grid_threshold: f64,
    pub best_f_threshold: f64,
    pub best_f: f64,
    pub accuracy_at_best_f: f64,
}

impl EvalReport {
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("threshold,fmr,fnmr,pr,rc,acc,f\n");
        for p in &self.curve {
            out.push_str(&format!(
                "{:.4},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                p.threshold, p.fmr, p.fnmr, p.precision, p.recall, p.accuracy, p.f_measure
            ));
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "genuine_pairs = {}\nimpostor_pairs = {}\nexcluded_gated = {}\neer = {:.6}\neer_threshold = {:.6}\neer_grid_threshold = {:.4}\nbest_f_threshold = {:.4}\nbest_f = {:.6}\naccuracy_at_best_f = {:.6}\n",
            self.genuine,
            self.impostor,
            self.excluded,
            self.eer,
            self.eer_threshold,
            self.eer_grid_threshold,
            self.best_f_threshold,
            self.best_f,
            self.accuracy_at_best_f
        )
    }
}

/// Error-rate curve over ascending `thresholds`, with the EER taken where
/// FMR − FNMR first changes sign, interpolated linearly between the two
/// neighboring thresholds. Without a sign change the closest approach is
/// used and the EER is the mean of the two rates there.
pub fn rates_and_metrics(
    table: &ScoreTable,
    thresholds: &[f64],
    exclude_gated: bool,
) -> Result<EvalReport> {
    if thresholds.is_empty() || thresholds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput(
            "thresholds must be nonempty and strictly ascending".into(),
        ));
    }
    let rows: Vec<ScoreRow> = table
        .rows
        .iter()
        .filter(|r| !(exclude_gated && r.breakdown.gated.is_some()))
        .cloned()
        .collect();
    let genuine = rows.iter().filter(|r| r.label == Label::Genuine).count();
    let impostor = rows.len() - genuine;
    if genuine == 0 || impostor == 0 {
        return Err(Error::Protocol(format!(
            "rates need genuine and impostor pairs, got {genuine} genuine and {impostor} impostor"
        )));
    }

    let curve: Vec<CurvePoint> = thresholds
        .iter()
        .map(|&t| {
            let c = confusion_at(&rows, t);
            CurvePoint {
                threshold: t,
                confusion: c,
                fmr: c.fmr(),
                fnmr: c.fnmr(),
                precision: c.precision(),
                recall: c.recall(),
                accuracy: c.accuracy(),
                f_measure: c.f_measure(),
            }
        })
        .collect();

    let diff: Vec<f64> = curve.iter().map(|p| p.fmr - p.fnmr).collect();
    let (eer, eer_threshold) = match (0..curve.len()).find(|&i| diff[i] <= 0.0) {
        Some(0) => (curve[0].fmr, curve[0].threshold),
        Some(i) => {
            let (a, b) = (&curve[i - 1], &curve[i]);
            let w = diff[i - 1] / (diff[i - 1] - diff[i]);
            (
                a.fmr + w * (b.fmr - a.fmr),
                a.threshold + w * (b.threshold - a.threshold),
            )
        }
        None => {
            let i = (0..curve.len())
                .min_by(|&a, &b| diff[a].abs().total_cmp(&diff[b].abs()))
                .unwrap_or(0);
            ((curve[i].fmr + curve[i].fnmr) / 2.0, curve[i].threshold)
        }
    };
    let eer_grid_threshold = curve
        .iter()
        .map(|p| p.threshold)
        .min_by(|a, b| {
            (a - eer_threshold)
                .abs()
                .total_cmp(&(b - eer_threshold).abs())
        })
        .unwrap_or(eer_threshold);
    let best = curve
        .iter()
        .reduce(|best, p| {
            if p.f_measure > best.f_measure {
                p
            } else {
                best
            }
        })
        .expect("nonempty thresholds");

    Ok(EvalReport {
        genuine,
        impostor,
        excluded: table.rows.len() - rows.len(),
        eer,
        eer_threshold,
        eer_grid_threshold,
        best_f_threshold: best.threshold,
        best_f: best.f_measure,
        accuracy_at_best_f: best.accuracy,
        curve,
    })
}

/// Writes `scores.csv`, `curves.csv` and `summary.txt` into `dir`.
pub fn write_reports(
    dir: &Path,
    table: &ScoreTable,
    report: &EvalReport,
    cfg: &MatchConfig,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(p, e))
    };
    write("scores.csv", table.to_csv())?;
    write("curves.csv", report.curves_csv())?;
    let mut summary = report.summary();
    summary.push_str("\n# configuration\n");
    summary.push_str(&cfg.to_text());
    write("summary.txt", summary)
}

/// Parameter grid; configurations are enumerated with `rm` outermost and
/// `theta0` innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub rm: Vec<f64>,
    pub sim: Vec<f64>,
    pub diff: Vec<usize>,
    pub r0: Vec<f64>,
    pub theta0: Vec<f64>,
}

impl SweepGrid {
    /// The single configuration `cfg`.
    pub fn single(cfg: &MatchConfig) -> Self {
        Self {
            rm: vec![cfg.rm],
            sim: vec![cfg.sim],
            diff: vec![cfg.diff],
            r0: vec![cfg.r0],
            theta0: vec![cfg.theta0],
        }
    }

    pub fn configs(&self, base: &MatchConfig) -> Vec<MatchConfig> {
        let mut out = Vec::new();
        for &rm in &self.rm {
            for &sim in &self.sim {
                for &diff in &self.diff {
                    for &r0 in &self.r0 {
                        for &theta0 in &self.theta0 {
                            out.push(MatchConfig {
                                rm,
                                sim,
                                diff,
                                r0,
                                theta0,
                                ..*base
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub config: MatchConfig,
    pub table: ScoreTable,
    pub report: EvalReport,
}

/// Runs the protocol for every grid configuration. Extraction is shared by
/// configurations with equal `rm`, and alignment by those that also agree
/// on `r0` and `theta0`.
pub fn sweep(
    ds: &Dataset,
    grid: &SweepGrid,
    base: &MatchConfig,
    mode: Protocol,
    thresholds: &[f64],
    exclude_gated: bool,
) -> Result<Vec<SweepResult>> {
    let configs = grid.configs(base);
    if configs.is_empty() {
        return Err(Error::InvalidInput("empty sweep grid".into()));
    }
    for c in &configs {
        c.validate()?;
    }
    let ids = ds.ids();
    let pairs = pair_protocol(&ids, mode)?;
    let mut sets_by_rm: Vec<(f64, Vec<MinutiaSet>)> = Vec::new();
    let mut matches_by_key: Vec<((f64, f64, f64), Vec<MatchResult>)> = Vec::new();
    let mut out = Vec::with_capacity(configs.len());
    for cfg in configs {
        if !sets_by_rm.iter().any(|(rm, _)| *rm == cfg.rm) {
            sets_by_rm.push((cfg.rm, load_minutiae(ds, &cfg)?));
        }
        let sets = &sets_by_rm
            .iter()
            .find(|(rm, _)| *rm == cfg.rm)
            .expect("cached")
            .1;
        let key = (cfg.rm, cfg.r0, cfg.theta0);
        if !matches_by_key.iter().any(|(k, _)| *k == key) {
            matches_by_key.push((key, match_all(sets, &pairs, &cfg)));
        }
        let matches = &matches_by_key
            .iter()
            .find(|(k, _)| *k == key)
            .expect("cached")
            .1;
        let table = score_all(&ids, sets, &pairs, matches, &cfg)?;
        let report = rates_and_metrics(&table, thresholds, exclude_gated)?;
        out.push(SweepResult {
            config: cfg,
            table,
            report,
        });
    }
    Ok(out)
}

/// Index of a sweep, one row per configuration.
pub fn sweep_csv(results: &[SweepResult]) -> String {
    let mut out =
        String::from("index,rm,sim,diff,r0,theta0,eer,eer_threshold,best_f_threshold,best_f\n");
    for (i, r) in results.iter().enumerate() {
        let c = &r.config;
        let diff = if c.diff == DIFF_UNLIMITED {
            "inf".to_string()
        } else {
            c.diff.to_string()
        };
        out.push_str(&format!(
            "{i},{},{},{diff},{},{},{:.6},{:.6},{:.4},{:.6}\n",
            c.rm,
            c.sim,
            c.r0,
            c.theta0,
            r.report.eer,
            r.report.eer_threshold,
            r.report.best_f_threshold,
            r.report.best_f
        ));
    }
    out
}
