//! Shared domain types: exact ratios, stream symbols, media segments and
//! manifests, prefix counters.
//!
//! Durations are carried as integer milliseconds everywhere inside the
//! library; seconds appear only at I/O boundaries so that 160 ms framing
//! stays exact.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Exact non-negative ratio, stored in lowest terms.
///
/// Comparisons cross-multiply in 128-bit integers; no floating point is
/// involved anywhere, so prefix feasibility checks are deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RationalRepr", into = "RationalRepr")]
pub struct Rational {
    num: u64,
    den: u64,
}

/// Wire shape for [`Rational`]: the string `"num/den"`.
#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct RationalRepr(String);

impl TryFrom<RationalRepr> for Rational {
    type Error = String;
    fn try_from(repr: RationalRepr) -> Result<Self, Self::Error> {
        repr.0.parse().map_err(|e: RationalParseError| e.to_string())
    }
}

impl From<Rational> for RationalRepr {
    fn from(r: Rational) -> Self {
        RationalRepr(r.to_string())
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rational {
    /// Builds `num/den` reduced to lowest terms. `den` must be positive.
    pub fn new(num: u64, den: u64) -> Result<Self, ZeroDenominator> {
        if den == 0 {
            return Err(ZeroDenominator);
        }
        let g = gcd(num, den);
        Ok(Rational {
            num: num / g.max(1),
            den: den / g.max(1),
        })
    }

    pub fn zero() -> Self {
        Rational { num: 0, den: 1 }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    /// `self <= other`, exactly: `a.num * b.den <= b.num * a.den`.
    pub fn le(&self, other: &Rational) -> bool {
        (self.num as u128) * (other.den as u128) <= (other.num as u128) * (self.den as u128)
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let lhs = (self.num as u128) * (other.den as u128);
        let rhs = (other.num as u128) * (self.den as u128);
        lhs.cmp(&rhs)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("denominator must be positive")]
pub struct ZeroDenominator;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RationalParseError {
    #[error("malformed ratio {0:?}: expected \"num/den\" or a bare integer")]
    Malformed(String),
    #[error(transparent)]
    ZeroDenominator(#[from] ZeroDenominator),
}

impl FromStr for Rational {
    type Err = RationalParseError;

    /// Accepts `"3/4"` or a bare integer `"3"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || RationalParseError::Malformed(s.to_string());
        match s.split_once('/') {
            Some((n, d)) => {
                let num: u64 = n.trim().parse().map_err(|_| bad())?;
                let den: u64 = d.trim().parse().map_err(|_| bad())?;
                Ok(Rational::new(num, den)?)
            }
            None => {
                let num: u64 = s.trim().parse().map_err(|_| bad())?;
                Ok(Rational::new(num, 1).expect("den 1"))
            }
        }
    }
}

/// Exact comparison `a <= b` via cross-multiplication.
pub fn rational_le(a: &Rational, b: &Rational) -> bool {
    a.le(b)
}

/// One slot of the interleaved output stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StreamSymbol {
    Text,
    Speech,
}

impl StreamSymbol {
    /// Single-letter form used by the compact plan serialization.
    pub fn letter(&self) -> char {
        match self {
            StreamSymbol::Text => 'T',
            StreamSymbol::Speech => 'S',
        }
    }
}

/// Running (text, speech) emission counts over a stream prefix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixCount {
    pub text_emitted: u64,
    pub speech_emitted: u64,
}

impl PrefixCount {
    pub fn new(text_emitted: u64, speech_emitted: u64) -> Self {
        PrefixCount {
            text_emitted,
            speech_emitted,
        }
    }
}

/// Spatial grid of an image or of each video frame, in merged patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub rows: u32,
    pub cols: u32,
}

impl Grid {
    pub fn cells(&self) -> u64 {
        self.rows as u64 * self.cols as u64
    }
}

/// One item of a multimodal input, with exactly the fields its kind needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum MediaSegment {
    Text { token_count: u64 },
    Image { grid: Grid },
    Video { grid: Grid, frame_timestamps_ms: Vec<u64> },
    Audio { duration_ms: u64 },
}

impl MediaSegment {
    pub fn kind_name(&self) -> &'static str {
        match self {
            MediaSegment::Text { .. } => "TEXT",
            MediaSegment::Image { .. } => "IMAGE",
            MediaSegment::Video { .. } => "VIDEO",
            MediaSegment::Audio { .. } => "AUDIO",
        }
    }

    /// Wall-clock extent of the segment's media, zero for text and images.
    /// A video ends when its last frame arrives.
    pub fn media_ms(&self) -> u64 {
        match self {
            MediaSegment::Text { .. } | MediaSegment::Image { .. } => 0,
            MediaSegment::Video { frame_timestamps_ms, .. } => {
                frame_timestamps_ms.last().copied().unwrap_or(0)
            }
            MediaSegment::Audio { duration_ms } => *duration_ms,
        }
    }
}

/// Milliseconds per audio frame when one frame covers 160 ms of signal.
pub const DEFAULT_AUDIO_FRAME_MS: u64 = 160;

/// Default context window, in tokens.
pub const DEFAULT_CONTEXT_LIMIT: u64 = 262_144;

/// Ordered multimodal input description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaManifest {
    pub segments: Vec<MediaSegment>,
    #[serde(default = "default_audio_frame_ms")]
    pub audio_frame_ms: u64,
    #[serde(default = "default_context_limit")]
    pub context_limit: u64,
}

fn default_audio_frame_ms() -> u64 {
    DEFAULT_AUDIO_FRAME_MS
}

fn default_context_limit() -> u64 {
    DEFAULT_CONTEXT_LIMIT
}

impl Default for MediaManifest {
    fn default() -> Self {
        MediaManifest {
            segments: Vec::new(),
            audio_frame_ms: DEFAULT_AUDIO_FRAME_MS,
            context_limit: DEFAULT_CONTEXT_LIMIT,
        }
    }
}

impl MediaManifest {
    pub fn new(segments: Vec<MediaSegment>) -> Self {
        MediaManifest {
            segments,
            ..Default::default()
        }
    }

    /// Collects every invariant violation; empty means valid. Never mutates.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.audio_frame_ms == 0 {
            out.push(Violation::new(
                "audio_frame_ms".into(),
                "audio frame length must be positive".into(),
            ));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            let path = |field: &str| format!("segments[{i}].{field}");
            match seg {
                MediaSegment::Text { token_count } => {
                    if *token_count == 0 {
                        out.push(Violation::new(
                            path("token_count"),
                            "token count must be positive".into(),
                        ));
                    }
                }
                MediaSegment::Image { grid } | MediaSegment::Video { grid, .. } => {
                    if grid.rows == 0 || grid.cols == 0 {
                        out.push(Violation::new(
                            path("grid"),
                            "grid dimensions must be positive".into(),
                        ));
                    }
                    if let MediaSegment::Video { frame_timestamps_ms, .. } = seg {
                        if !frame_timestamps_ms.windows(2).all(|w| w[0] < w[1]) {
                            out.push(Violation::new(
                                path("frame_timestamps"),
                                "timestamps not strictly increasing".into(),
                            ));
                        }
                    }
                }
                MediaSegment::Audio { duration_ms } => {
                    if *duration_ms == 0 {
                        out.push(Violation::new(
                            path("duration"),
                            "duration must be positive".into(),
                        ));
                    }
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

/// One manifest invariant breach, addressed by field path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: String, message: String) -> Self {
        Violation { path, message }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Seconds → integer milliseconds, the only place the boundary conversion
/// lives. Rounds to the nearest millisecond.
pub fn seconds_to_ms(seconds: f64) -> u64 {
    (seconds * 1000.0).round().max(0.0) as u64
}

/// Integer milliseconds → seconds, for rendering at I/O boundaries.
pub fn ms_to_seconds(ms: u64) -> f64 {
    ms as f64 / 1000.0
}
