//! Matching parameters and their plain-text file format.
//!
//! ```text
//! # one `key = value` per line
//! rm = 5
//! r0 = 15
//! theta0 = 10
//! sim = 0.15
//! diff = 2        # or `inf` to disable the layer gate
//! binarize = otsu # or an integer threshold 0..=255
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::alignment::Tolerance;
use crate::error::{Error, Result};
use crate::imgproc::ExtractConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinarizeMethod {
    Otsu,
    /// Foreground iff intensity `<` threshold.
    Fixed(u8),
}

impl FromStr for BinarizeMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("otsu") {
            return Ok(BinarizeMethod::Otsu);
        }
        s.parse::<u8>().map(BinarizeMethod::Fixed).map_err(|_| {
            Error::InvalidInput(format!("binarize must be `otsu` or 0..=255, got `{s}`"))
        })
    }
}

impl fmt::Display for BinarizeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BinarizeMethod::Otsu => f.write_str("otsu"),
            BinarizeMethod::Fixed(t) => write!(f, "{t}"),
        }
    }
}

/// `diff` value that disables the layer-count gate.
pub const DIFF_UNLIMITED: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatchConfig {
    /// Merge radius for nearby minutiae, pixels.
    pub rm: f64,
    /// Spatial pairing tolerance, pixels.
    pub r0: f64,
    /// Angular pairing tolerance, degrees.
    pub theta0: f64,
    /// Pairs with a lower minutiae score are gated.
    pub sim: f64,
    /// Pairs whose layer counts differ by more are gated.
    pub diff: usize,
    /// Norm order of the turning distance. Only 2 is supported.
    pub p: u32,
    pub border_margin: f64,
    pub binarize: BinarizeMethod,
    /// Only pair minutiae of the same kind.
    pub strict_type: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            rm: 5.0,
            r0: 15.0,
            theta0: 10.0,
            sim: 0.15,
            diff: 2,
            p: 2,
            border_margin: 12.0,
            binarize: BinarizeMethod::Otsu,
            strict_type: false,
        }
    }
}

fn parse_real(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::InvalidInput(format!("{key}: expected a number, got `{value}`")))
}

impl MatchConfig {
    /// Config with both gates disabled.
    pub fn ungated(self) -> Self {
        Self {
            sim: 0.0,
            diff: DIFF_UNLIMITED,
            ..self
        }
    }

    pub fn extract_config(&self) -> ExtractConfig {
        ExtractConfig {
            binarize: self.binarize,
            border_margin: self.border_margin,
            rm: self.rm,
        }
    }

    pub fn tolerance(&self) -> Tolerance {
        Tolerance {
            r0: self.r0,
            theta0: self.theta0,
            strict_type: self.strict_type,
        }
    }

    /// Sets one parameter from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "rm" => self.rm = parse_real(key, value)?,
            "r0" | "d" => self.r0 = parse_real(key, value)?,
            "theta0" | "th" => self.theta0 = parse_real(key, value)?,
            "sim" => self.sim = parse_real(key, value)?,
            "border_margin" => self.border_margin = parse_real(key, value)?,
            "diff" => {
                self.diff = if value.eq_ignore_ascii_case("inf") {
                    DIFF_UNLIMITED
                } else {
                    value.parse().map_err(|_| {
                        Error::InvalidInput(format!(
                            "diff: expected a count or `inf`, got `{value}`"
                        ))
                    })?
                }
            }
            "p" => {
                self.p = value.parse().map_err(|_| {
                    Error::InvalidInput(format!("p: expected an integer, got `{value}`"))
                })?
            }
            "binarize" => self.binarize = value.parse()?,
            "strict_type" => {
                self.strict_type = value.parse().map_err(|_| {
                    Error::InvalidInput(format!(
                        "strict_type: expected true or false, got `{value}`"
                    ))
                })?
            }
            _ => return Err(Error::InvalidInput(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("rm", self.rm),
            ("r0", self.r0),
            ("theta0", self.theta0),
            ("border_margin", self.border_margin),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        if self.theta0 > 180.0 {
            return Err(Error::InvalidInput(format!(
                "theta0 must be at most 180, got {}",
                self.theta0
            )));
        }
        if !(0.0..=1.0).contains(&self.sim) {
            return Err(Error::InvalidInput(format!(
                "sim must lie in [0, 1], got {}",
                self.sim
            )));
        }
        if self.p != 2 {
            return Err(Error::InvalidInput(format!(
                "only p = 2 is supported, got {}",
                self.p
            )));
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`.
    pub fn merge_text(mut self, text: &str) -> Result<Self> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format("config", format!("line {}: expected `key = value`", i + 1))
            })?;
            self.set(key.trim(), value)
                .map_err(|e| Error::format("config", format!("line {}: {e}", i + 1)))?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::default().merge_text(text)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// The file form of this config; parses back to an equal value.
    pub fn to_text(&self) -> String {
        let diff = if self.diff == DIFF_UNLIMITED {
            "inf".to_string()
        } else {
            self.diff.to_string()
        };
        format!(
            "rm = {}\nr0 = {}\ntheta0 = {}\nsim = {}\ndiff = {diff}\np = {}\nborder_margin = {}\nbinarize = {}\nstrict_type = {}\n",
            self.rm, self.r0, self.theta0, self.sim, self.p, self.border_margin, self.binarize, self.strict_type
        )
    }
}
