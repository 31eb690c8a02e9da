//! Plain-text minutiae format.
//!
//! ```text
//! # onionprint-minutiae v1
//! 103.000 87.500 271.250 E
//! ```
//!
//! One minutia per line as `x y theta kind` with three-decimal fixed-point
//! reals and kind `E` (ending) or `B` (bifurcation), sorted by `(y, x, kind)`.
//! Further lines starting with `#` are comments.

use std::path::Path;

use crate::error::{Error, Result};

use super::{Minutia, MinutiaKind, MinutiaSet};

pub const HEADER: &str = "# onionprint-minutiae v1";

pub fn looks_like_minutiae(bytes: &[u8]) -> bool {
    bytes.starts_with(HEADER.as_bytes())
}

pub fn to_string(set: &MinutiaSet) -> String {
    let mut out = String::with_capacity(32 * (set.len() + 1));
    out.push_str(HEADER);
    out.push('\n');
    for m in set.iter() {
        out.push_str(&format!(
            "{:.3} {:.3} {:.3} {}\n",
            m.x,
            m.y,
            m.theta,
            m.kind.code()
        ));
    }
    out
}

pub fn parse(text: &str) -> Result<MinutiaSet> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim_end() == HEADER => {}
        _ => {
            return Err(Error::format(
                "minutiae",
                format!("missing header `{HEADER}`"),
            ))
        }
    }
    let mut ms = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |why: &str| Error::format("minutiae", format!("line {}: {why}: `{line}`", i + 1));
        if fields.len() != 4 {
            return Err(bad("expected `x y theta kind`"));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad("invalid number"))
        };
        let kind = MinutiaKind::from_code(fields[3]).ok_or_else(|| bad("kind must be E or B"))?;
        ms.push(Minutia::new(
            num(fields[0])?,
            num(fields[1])?,
            num(fields[2])?,
            kind,
        ));
    }
    Ok(MinutiaSet::new(ms))
}

pub fn read(path: &Path) -> Result<MinutiaSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse(&text)
        .map_err(|e| e.in_file(path))?
        .with_source(path.display().to_string()))
}

pub fn write(path: &Path, set: &MinutiaSet) -> Result<()> {
    std::fs::write(path, to_string(set)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_set_is_header_only() {
        assert_eq!(to_string(&MinutiaSet::default()), format!("{HEADER}\n"));
        assert!(parse(&format!("{HEADER}\n")).unwrap().is_empty());
    }

    #[test]
    fn format_is_fixed_point() {
        let set = MinutiaSet::new(vec![
            Minutia::new(3.0, 7.25, 90.0, MinutiaKind::Bifurcation),
            Minutia::new(10.5, 1.0, 359.9999, MinutiaKind::Ending),
        ]);
        assert_eq!(
            to_string(&set),
            format!("{HEADER}\n10.500 1.000 360.000 E\n3.000 7.250 90.000 B\n")
        );
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(parse("1 2 3 E\n").is_err());
        assert!(parse(&format!("{HEADER}\n1 2 3\n")).is_err());
        assert!(parse(&format!("{HEADER}\n1 2 3 X\n")).is_err());
        assert!(parse(&format!("{HEADER}\n1 nan 3 E\n")).is_err());
        assert!(
            parse(&format!("{HEADER}\n# note\n\n1 2 3 E\n"))
                .unwrap()
                .len()
                == 1
        );
    }

    proptest! {
        #[test]
        fn quantized_sets_survive_a_round_trip(raw in proptest::collection::vec((0u32..600_000, 0u32..600_000, 0u32..360_000, any::<bool>()), 0..30)) {
            let set = MinutiaSet::new(raw.iter().map(|&(x, y, t, b)| {
                let kind = if b { MinutiaKind::Bifurcation } else { MinutiaKind::Ending };
                Minutia::new(x as f64 / 1000.0, y as f64 / 1000.0, t as f64 / 1000.0, kind)
            }).collect());
            prop_assert_eq!(parse(&to_string(&set)).unwrap(), set);
        }
    }
}
