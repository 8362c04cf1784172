//! Multi-codebook speech-frame assembly and causal chunking.
//!
//! Each frame carries one base code plus Q-1 residual codes; a chunker
//! groups frames into fixed-size chunks for the streaming waveform renderer.
//! Frames and chunks are immutable; a chunker is single-owner streaming
//! state.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// Codebook geometry and streaming granularity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodecLayout {
    /// Base codebook plus residuals.
    pub num_codebooks: u32,
    pub codebook_size: u32,
    pub frame_rate_hz: f64,
    /// Frames per chunk handed to the renderer; 1 means single-frame,
    /// immediate synthesis.
    pub chunk_frames: u32,
}

impl Default for CodecLayout {
    fn default() -> Self {
        CodecLayout {
            num_codebooks: 8,
            codebook_size: 1024,
            frame_rate_hz: 12.5,
            chunk_frames: 1,
        }
    }
}

impl CodecLayout {
    pub fn validate(&self) -> Result<(), CodecError> {
        if self.num_codebooks < 1 {
            return Err(CodecError::InvalidLayout("num_codebooks must be >= 1".into()));
        }
        if self.codebook_size < 2 {
            return Err(CodecError::InvalidLayout("codebook_size must be >= 2".into()));
        }
        if !(self.frame_rate_hz > 0.0) || !self.frame_rate_hz.is_finite() {
            return Err(CodecError::InvalidLayout("frame_rate_hz must be positive".into()));
        }
        if self.chunk_frames < 1 {
            return Err(CodecError::InvalidLayout("chunk_frames must be >= 1".into()));
        }
        Ok(())
    }
}

/// One synthesis step: base code plus residual codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecFrame {
    pub index: u64,
    pub base: u32,
    pub residuals: Vec<u32>,
}

/// A renderer work unit: `chunk_frames` frames, or fewer on the final flush.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecChunk {
    pub first_frame_index: u64,
    pub frames: Vec<CodecFrame>,
    pub is_final: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("expected {expected} residual codes, got {got}")]
    ResidualArity { expected: u32, got: usize },
    #[error("code {code} out of range for codebook size {size}")]
    CodeOutOfRange { code: u32, size: u32 },
    #[error("frame index {got} pushed after {prev}; expected {expected}")]
    OutOfOrderFrame { prev: u64, expected: u64, got: u64 },
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
}

/// Validates codes against a layout and assigns consecutive frame indices.
#[derive(Debug, Clone)]
pub struct FrameBuilder {
    layout: CodecLayout,
    next_index: u64,
}

impl FrameBuilder {
    pub fn new(layout: CodecLayout) -> Result<Self, CodecError> {
        layout.validate()?;
        Ok(FrameBuilder {
            layout,
            next_index: 0,
        })
    }

    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    /// Builds the next frame in sequence.
    pub fn make_frame(&mut self, base: u32, residuals: Vec<u32>) -> Result<CodecFrame, CodecError> {
        let expected = self.layout.num_codebooks - 1;
        if residuals.len() != expected as usize {
            return Err(CodecError::ResidualArity {
                expected,
                got: residuals.len(),
            });
        }
        for &code in std::iter::once(&base).chain(residuals.iter()) {
            if code >= self.layout.codebook_size {
                return Err(CodecError::CodeOutOfRange {
                    code,
                    size: self.layout.codebook_size,
                });
            }
        }
        let frame = CodecFrame {
            index: self.next_index,
            base,
            residuals,
        };
        self.next_index += 1;
        Ok(frame)
    }
}

/// Groups an in-order frame stream into chunks of `chunk_frames`.
///
/// The first pushed frame may carry any index (mid-stream resumption); every
/// later frame must follow its predecessor exactly.
#[derive(Debug, Clone)]
pub struct Chunker {
    chunk_frames: u32,
    buffer: Vec<CodecFrame>,
    last_index: Option<u64>,
}

impl Chunker {
    pub fn new(layout: &CodecLayout) -> Result<Self, CodecError> {
        layout.validate()?;
        Ok(Chunker {
            chunk_frames: layout.chunk_frames,
            buffer: Vec::with_capacity(layout.chunk_frames as usize),
            last_index: None,
        })
    }

    /// Accepts the next frame; returns a full chunk when one completes.
    pub fn push(&mut self, frame: CodecFrame) -> Result<Option<CodecChunk>, CodecError> {
        if let Some(prev) = self.last_index {
            let expected = prev + 1;
            if frame.index != expected {
                return Err(CodecError::OutOfOrderFrame {
                    prev,
                    expected,
                    got: frame.index,
                });
            }
        }
        self.last_index = Some(frame.index);
        self.buffer.push(frame);
        if self.buffer.len() == self.chunk_frames as usize {
            let frames = std::mem::take(&mut self.buffer);
            return Ok(Some(CodecChunk {
                first_frame_index: frames[0].index,
                frames,
                is_final: false,
            }));
        }
        Ok(None)
    }

    /// Emits the trailing partial chunk, if any, marked final.
    pub fn flush(&mut self) -> Option<CodecChunk> {
        if self.buffer.is_empty() {
            return None;
        }
        let frames = std::mem::take(&mut self.buffer);
        Some(CodecChunk {
            first_frame_index: frames[0].index,
            frames,
            is_final: true,
        })
    }

    pub fn pending(&self) -> usize {
        self.buffer.len()
    }
}

/// Audio seconds covered by `frame_count` frames.
pub fn audio_seconds(frame_count: u64, layout: &CodecLayout) -> f64 {
    frame_count as f64 / layout.frame_rate_hz
}

/// Renders chunks as line-oriented records "index base r1 ... r(Q-1)", with
/// a blank line between chunks. Bit-exact for golden comparisons.
pub fn render_stream(chunks: &[CodecChunk]) -> String {
    let mut out = String::new();
    for (i, chunk) in chunks.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for frame in &chunk.frames {
            write!(out, "{} {}", frame.index, frame.base).expect("string write");
            for r in &frame.residuals {
                write!(out, " {r}").expect("string write");
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StreamParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: CodecError,
    },
    #[error("chunk starting at line {line} has {got} frames; only the last chunk may have fewer than {expected}")]
    ShortChunk { line: usize, expected: u32, got: usize },
}

/// Parses [`render_stream`] output back into chunks; the inverse is exact.
pub fn parse_stream(input: &str, layout: &CodecLayout) -> Result<Vec<CodecChunk>, StreamParseError> {
    layout
        .validate()
        .map_err(|e| StreamParseError::Invalid { line: 0, source: e })?;
    let mut chunks: Vec<(usize, Vec<CodecFrame>)> = Vec::new();
    let mut current: Vec<CodecFrame> = Vec::new();
    let mut current_start = 1usize;
    let mut last_index: Option<u64> = None;

    for (lineno, raw) in input.lines().enumerate() {
        let line = lineno + 1;
        if raw.trim().is_empty() {
            if !current.is_empty() {
                chunks.push((current_start, std::mem::take(&mut current)));
            }
            current_start = line + 1;
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        if fields.len() < 2 {
            return Err(StreamParseError::Malformed {
                line,
                message: "expected at least index and base code".into(),
            });
        }
        let parse_index = |s: &str| -> Result<u64, StreamParseError> {
            s.parse().map_err(|_| StreamParseError::Malformed {
                line,
                message: format!("frame index {s:?} is not a non-negative integer"),
            })
        };
        let parse_code = |s: &str, what: &str| -> Result<u32, StreamParseError> {
            s.parse().map_err(|_| StreamParseError::Malformed {
                line,
                message: format!("{what} {s:?} is not a valid code"),
            })
        };
        let index = parse_index(fields[0])?;
        let base = parse_code(fields[1], "base code")?;
        let residuals = fields[2..]
            .iter()
            .map(|s| parse_code(s, "residual code"))
            .collect::<Result<Vec<u32>, _>>()?;

        let expected = layout.num_codebooks - 1;
        if residuals.len() != expected as usize {
            return Err(StreamParseError::Invalid {
                line,
                source: CodecError::ResidualArity {
                    expected,
                    got: residuals.len(),
                },
            });
        }
        for &code in std::iter::once(&base).chain(residuals.iter()) {
            if code >= layout.codebook_size {
                return Err(StreamParseError::Invalid {
                    line,
                    source: CodecError::CodeOutOfRange {
                        code,
                        size: layout.codebook_size,
                    },
                });
            }
        }
        if let Some(prev) = last_index {
            if index != prev + 1 {
                return Err(StreamParseError::Invalid {
                    line,
                    source: CodecError::OutOfOrderFrame {
                        prev,
                        expected: prev + 1,
                        got: index,
                    },
                });
            }
        }
        last_index = Some(index);
        current.push(CodecFrame {
            index,
            base,
            residuals,
        });
    }
    if !current.is_empty() {
        chunks.push((current_start, current));
    }

    let count = chunks.len();
    let expected = layout.chunk_frames;
    chunks
        .into_iter()
        .enumerate()
        .map(|(i, (start_line, frames))| {
            if frames.len() != expected as usize && i + 1 != count {
                return Err(StreamParseError::ShortChunk {
                    line: start_line,
                    expected,
                    got: frames.len(),
                });
            }
            Ok(CodecChunk {
                first_frame_index: frames[0].index,
                is_final: frames.len() != expected as usize,
                frames,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(q: u32, c: u32) -> CodecLayout {
        CodecLayout {
            num_codebooks: q,
            codebook_size: 1024,
            frame_rate_hz: 12.5,
            chunk_frames: c,
        }
    }

    #[test]
    fn builder_validates_arity_and_range() {
        let mut b = FrameBuilder::new(layout(4, 1)).unwrap();
        let f = b.make_frame(7, vec![1, 2, 3]).unwrap();
        assert_eq!(f.index, 0);
        assert!(matches!(
            b.make_frame(7, vec![1, 2]),
            Err(CodecError::ResidualArity { expected: 3, got: 2 })
        ));
        assert!(matches!(
            b.make_frame(2000, vec![1, 2, 3]),
            Err(CodecError::CodeOutOfRange { code: 2000, .. })
        ));
        // Errors do not consume an index.
        assert_eq!(b.make_frame(0, vec![0, 0, 0]).unwrap().index, 1);
    }

    #[test]
    fn single_codebook_frame_has_no_residuals() {
        let mut b = FrameBuilder::new(layout(1, 1)).unwrap();
        assert!(b.make_frame(3, vec![]).is_ok());
    }

    #[test]
    fn chunker_groups_by_four() {
        let lay = layout(2, 4);
        let mut b = FrameBuilder::new(lay).unwrap();
        let mut ch = Chunker::new(&lay).unwrap();
        let mut sizes = Vec::new();
        for i in 0..10u32 {
            if let Some(chunk) = ch.push(b.make_frame(i, vec![i]).unwrap()).unwrap() {
                assert!(!chunk.is_final);
                sizes.push(chunk.frames.len());
            }
        }
        let tail = ch.flush().unwrap();
        assert!(tail.is_final);
        sizes.push(tail.frames.len());
        assert_eq!(sizes, vec![4, 4, 2]);
        assert_eq!(tail.first_frame_index, 8);
        assert!(ch.flush().is_none());
    }

    #[test]
    fn chunker_single_frame_streaming() {
        let lay = layout(2, 1);
        let mut b = FrameBuilder::new(lay).unwrap();
        let mut ch = Chunker::new(&lay).unwrap();
        for _ in 0..3 {
            let out = ch.push(b.make_frame(0, vec![0]).unwrap()).unwrap();
            assert_eq!(out.unwrap().frames.len(), 1);
        }
        assert!(ch.flush().is_none());
    }

    #[test]
    fn chunker_rejects_gaps() {
        let lay = layout(1, 4);
        let mut ch = Chunker::new(&lay).unwrap();
        let frame = |index| CodecFrame {
            index,
            base: 0,
            residuals: vec![],
        };
        ch.push(frame(7)).unwrap();
        assert!(matches!(
            ch.push(frame(5)),
            Err(CodecError::OutOfOrderFrame {
                prev: 7,
                expected: 8,
                got: 5
            })
        ));
    }

    #[test]
    fn seconds_from_frames() {
        let lay = layout(1, 1);
        assert_eq!(audio_seconds(25, &lay), 2.0);
        assert_eq!(audio_seconds(0, &lay), 0.0);
        assert_eq!(audio_seconds(70, &lay), 5.6);
    }

    #[test]
    fn stream_round_trip() {
        let lay = layout(3, 2);
        let mut b = FrameBuilder::new(lay).unwrap();
        let mut ch = Chunker::new(&lay).unwrap();
        let mut chunks = Vec::new();
        for i in 0..5u32 {
            if let Some(c) = ch.push(b.make_frame(i, vec![i + 1, i + 2]).unwrap()).unwrap() {
                chunks.push(c);
            }
        }
        chunks.extend(ch.flush());
        let text = render_stream(&chunks);
        assert_eq!(text, "0 0 1 2\n1 1 2 3\n\n2 2 3 4\n3 3 4 5\n\n4 4 5 6\n");
        let parsed = parse_stream(&text, &lay).unwrap();
        assert_eq!(parsed, chunks);
    }

    #[test]
    fn parse_rejects_short_middle_chunk() {
        let lay = layout(1, 2);
        let text = "0 1\n\n1 2\n2 3\n";
        assert!(matches!(
            parse_stream(text, &lay),
            Err(StreamParseError::ShortChunk { .. })
        ));
    }

    #[test]
    fn parse_rejects_garbage() {
        let lay = layout(1, 1);
        assert!(parse_stream("0 x\n", &lay).is_err());
        assert!(parse_stream("0\n", &lay).is_err());
    }
}
