//! From a minutia match to a similarity score.
//!
//! The matched minutiae of each print are peeled into convex layers, peer
//! layers are compared innermost first with the turning distance, and the
//! mean layer distance `avg` is combined with the minutiae score `ms` as
//! `α = ms / avg`, `score = 1 − 2^(−α)`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::alignment::{match_minutiae_with, MatchResult};
use crate::config::{MatchConfig, DIFF_UNLIMITED};
use crate::error::Result;
use crate::geometry::{convex_layers, ConvexLayers, Point2};
use crate::imgproc::{extract, GrayImage, Minutia, MinutiaSet};
use crate::turning::polygon_distance;

/// Average used when no layer pair can be compared: maximal dissimilarity.
pub const NO_LAYERS_AVERAGE: f64 = PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GateReason {
    LowSim,
    LayerDiff,
}

impl fmt::Display for GateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateReason::LowSim => "low_sim",
            GateReason::LayerDiff => "layer_diff",
        })
    }
}

fn finite_or_inf<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(x) if x.is_infinite() => s.serialize_str("inf"),
        Some(x) => s.serialize_f64(*x),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreBreakdown {
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub minutiae_score: f64,
    /// All rings of the matched input minutiae, degenerate ones included.
    pub layers_input: usize,
    pub layers_template: usize,
    /// Innermost pair first.
    pub layer_distances: Vec<f64>,
    /// `None` when gated.
    pub average: Option<f64>,
    #[serde(serialize_with = "finite_or_inf")]
    pub alpha: Option<f64>,
    pub final_score: f64,
    pub gated: Option<GateReason>,
}

pub const CSV_HEADER: &str =
    "idA,idB,k,m,n,minutiae_score,layersA,layersB,l,average,alpha,final,gate_reason";

impl ScoreBreakdown {
    /// One CSV row (without newline) in [`CSV_HEADER`] order. Fields that a
    /// gated comparison never computed are left empty.
    pub fn csv_row(&self, id_a: &str, id_b: &str) -> String {
        let opt = |v: Option<f64>| match v {
            Some(x) if x.is_infinite() => "inf".to_string(),
            Some(x) => format!("{x:.6}"),
            None => String::new(),
        };
        format!(
            "{id_a},{id_b},{},{},{},{:.6},{},{},{},{},{},{:.6},{}",
            self.k,
            self.m,
            self.n,
            self.minutiae_score,
            self.layers_input,
            self.layers_template,
            self.layer_distances.len(),
            opt(self.average),
            opt(self.alpha),
            self.final_score,
            self.gated.map(|g| g.to_string()).unwrap_or_default(),
        )
    }
}

fn points(ms: impl Iterator<Item = impl std::borrow::Borrow<Minutia>>) -> Vec<Point2> {
    ms.map(|m| {
        let m = m.borrow();
        Point2::new(m.x, m.y)
    })
    .collect()
}

/// Turning distances between peer proper layers, innermost first; as many
/// as the smaller number of proper layers.
pub fn compare_layers(a: &ConvexLayers, b: &ConvexLayers, p: u32) -> Result<Vec<f64>> {
    a.proper()
        .rev()
        .zip(b.proper().rev())
        .map(|(la, lb)| Ok(polygon_distance(&la.polygon(), &lb.polygon(), p)?.distance))
        .collect()
}

/// Layer distances of two matched point sets.
pub fn layer_distances(ik: &[Point2], tk: &[Point2], p: u32) -> Result<Vec<f64>> {
    compare_layers(&convex_layers(ik)?, &convex_layers(tk)?, p)
}

pub fn average_distance(a: &[f64]) -> f64 {
    if a.is_empty() {
        NO_LAYERS_AVERAGE
    } else {
        a.iter().sum::<f64>() / a.len() as f64
    }
}

/// `(α, final)`. A zero minutiae score gives `(0, 0)`; a zero average with a
/// positive minutiae score gives `(∞, 1)`.
pub fn final_score(minutiae_score: f64, average: f64) -> (f64, f64) {
    if minutiae_score <= 0.0 {
        return (0.0, 0.0);
    }
    if average <= 0.0 {
        return (f64::INFINITY, 1.0);
    }
    let alpha = minutiae_score / average;
    (alpha, 1.0 - (-alpha).exp2())
}

/// Scores an already computed minutia match.
pub fn score_match(
    input: &MinutiaSet,
    template: &MinutiaSet,
    mr: &MatchResult,
    cfg: &MatchConfig,
) -> Result<ScoreBreakdown> {
    let la = convex_layers(&points(mr.input_points(input)))?;
    let lb = convex_layers(&points(mr.template_points(template)))?;
    let mut out = ScoreBreakdown {
        k: mr.k,
        m: mr.m,
        n: mr.n,
        minutiae_score: mr.score,
        layers_input: la.len(),
        layers_template: lb.len(),
        layer_distances: Vec::new(),
        average: None,
        alpha: None,
        final_score: 0.0,
        gated: None,
    };
    if mr.score < cfg.sim {
        out.gated = Some(GateReason::LowSim);
        return Ok(out);
    }
    if cfg.diff != DIFF_UNLIMITED && la.len().abs_diff(lb.len()) > cfg.diff {
        out.gated = Some(GateReason::LayerDiff);
        return Ok(out);
    }
    out.layer_distances = compare_layers(&la, &lb, cfg.p)?;
    let avg = average_distance(&out.layer_distances);
    let (alpha, fin) = final_score(mr.score, avg);
    out.average = Some(avg);
    out.alpha = Some(alpha);
    out.final_score = fin;
    Ok(out)
}

pub fn match_sets(
    input: &MinutiaSet,
    template: &MinutiaSet,
    cfg: &MatchConfig,
) -> Result<ScoreBreakdown> {
    cfg.validate()?;
    let mr = match_minutiae_with(input, template, &cfg.tolerance());
    score_match(input, template, &mr, cfg)
}

/// A fingerprint given either as an image or as extracted minutiae.
#[derive(Debug, Clone)]
pub enum Fingerprint {
    Image(GrayImage),
    Minutiae(MinutiaSet),
}

impl Fingerprint {
    pub fn minutiae(&self, cfg: &MatchConfig) -> Result<MinutiaSet> {
        match self {
            Fingerprint::Image(img) => extract(img, &cfg.extract_config()),
            Fingerprint::Minutiae(set) => Ok(set.clone()),
        }
    }
}

pub fn match_pair(a: &Fingerprint, b: &Fingerprint, cfg: &MatchConfig) -> Result<ScoreBreakdown> {
    match_sets(&a.minutiae(cfg)?, &b.minutiae(cfg)?, cfg)
}
