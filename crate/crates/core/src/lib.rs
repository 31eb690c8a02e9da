//! Minutiae-based fingerprint verification.
//!
//! Two fingerprints are aligned by an exhaustive search over minutia-pair
//! hypotheses, the matched minutiae of each print are peeled into nested
//! convex layers, and peer layers are compared with the turning-function
//! distance. The minutiae score and the mean layer distance are combined
//! into a similarity in `[0, 1]`.
//!
//! Module map:
//!
//! - [`imgproc`]: PGM input, binarization, thinning, minutia detection and
//!   merging.
//! - [`geometry`]: strict monotone-chain hull and convex layers.
//! - [`turning`]: turning functions and their rotation/shift-minimized L2
//!   distance.
//! - [`alignment`]: rigid hypotheses and greedy tolerance matching.
//! - [`scoring`]: layer comparison, gates and the final score.
//! - [`evaluation`]: datasets, comparison protocols and FMR/FNMR/EER.
//! - [`synth`]: synthetic fingers and impressions for testing.

pub mod alignment;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod imgproc;
pub mod scoring;
pub mod synth;
pub mod turning;

pub use alignment::{MatchResult, Transform};
pub use config::{BinarizeMethod, MatchConfig};
pub use error::{Error, Result};
pub use geometry::{ConvexLayers, Point2, Polygon};
pub use imgproc::{GrayImage, Minutia, MinutiaKind, MinutiaSet};
pub use scoring::{GateReason, ScoreBreakdown};
pub use turning::{TurningDistanceResult, TurningFunction};
