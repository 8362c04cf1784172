//! Multimodal (temporal, height, width) position-ID assignment.
//!
//! Temporal IDs advance one step per 160 ms of media time (configurable via
//! the manifest's frame length). Every modality block starts at one plus the
//! maximum position ID of the preceding block; within a block, video frame
//! IDs follow the frame timestamps so temporal resolution stays constant.
//!
//! Timestamp pseudo-tokens are inserted before temporal patches: before
//! every frame of a standalone video, before every chunk of a paired
//! audio-video segment, and at seeded random intervals inside standalone
//! audio. A stamp costs a fixed configurable token count; no tokenizer runs
//! here.

use std::ops::Range;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{MediaManifest, MediaSegment, Violation};

/// How a partial trailing audio frame is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameRounding {
    Floor,
    /// Default: the trailing partial frame is represented.
    Ceil,
    /// Round half up.
    Round,
}

/// Frame accounting and audio-video interleaving parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramingConfig {
    pub rounding: FrameRounding,
    /// Window length for interleaving a video with its audio track.
    pub av_chunk_ms: u64,
}

impl Default for FramingConfig {
    fn default() -> Self {
        FramingConfig {
            rounding: FrameRounding::Ceil,
            av_chunk_ms: 2000,
        }
    }
}

/// Timestamp pseudo-token insertion parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimestampConfig {
    pub enabled: bool,
    /// Template rendering seconds; the first "%.Nf" (N a digit) is replaced.
    pub format: String,
    pub tokens_per_stamp: u32,
    /// (min, max) gap between stamps inside standalone audio, inclusive.
    pub audio_interval_ms: (u64, u64),
    pub seed: u64,
}

impl Default for TimestampConfig {
    fn default() -> Self {
        TimestampConfig {
            enabled: true,
            format: "[%.2fs]".to_string(),
            tokens_per_stamp: 5,
            audio_interval_ms: (4000, 12000),
            seed: 0,
        }
    }
}

impl TimestampConfig {
    pub fn disabled() -> Self {
        TimestampConfig {
            enabled: false,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), MropeError> {
        let (min, max) = self.audio_interval_ms;
        if self.tokens_per_stamp == 0 {
            return Err(MropeError::InvalidConfig(
                "tokens_per_stamp must be at least 1".into(),
            ));
        }
        if min == 0 || min > max {
            return Err(MropeError::InvalidConfig(format!(
                "audio_interval_ms ({min}, {max}) must satisfy 0 < min <= max"
            )));
        }
        Ok(())
    }
}

/// Vision tokens charged per video frame in budget accounting. The real
/// per-frame cost depends on the vision encoder; this default stands in for
/// a 720p frame and is always echoed in reports.
pub const DEFAULT_TOKENS_PER_VIDEO_FRAME: u64 = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PositionTriple {
    pub tid: u64,
    pub hid: u64,
    pub wid: u64,
}

impl PositionTriple {
    pub fn uniform(id: u64) -> Self {
        PositionTriple {
            tid: id,
            hid: id,
            wid: id,
        }
    }

    pub fn max_id(&self) -> u64 {
        self.tid.max(self.hid).max(self.wid)
    }

    pub fn min_id(&self) -> u64 {
        self.tid.min(self.hid).min(self.wid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EntryKind {
    Text,
    Image,
    Video,
    Audio,
    Timestamp,
}

impl EntryKind {
    pub fn name(&self) -> &'static str {
        match self {
            EntryKind::Text => "TEXT",
            EntryKind::Image => "IMAGE",
            EntryKind::Video => "VIDEO",
            EntryKind::Audio => "AUDIO",
            EntryKind::Timestamp => "TIMESTAMP",
        }
    }
}

/// One token's position assignment. `token` numbers entries within their
/// segment in input order; timestamp entries count toward the segment whose
/// patch they precede.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionEntry {
    pub segment: usize,
    pub token: usize,
    pub kind: EntryKind,
    pub pos: PositionTriple,
}

/// One inserted timestamp: where it sits and what it renders as.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StampRecord {
    pub segment: usize,
    pub time_ms: u64,
    pub rendered: String,
}

/// Contiguous run of entries sharing one ID base. A paired audio-video
/// segment forms a single block spanning both segment indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpan {
    /// Inclusive segment index range.
    pub segments: (usize, usize),
    pub base_id: u64,
    pub max_id: u64,
    pub first_entry: usize,
    pub entry_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PositionTable {
    pub entries: Vec<PositionEntry>,
    pub stamps: Vec<StampRecord>,
    pub blocks: Vec<BlockSpan>,
}

impl PositionTable {
    pub fn max_position_id(&self) -> Option<u64> {
        self.entries.iter().map(|e| e.pos.max_id()).max()
    }

    /// One line per entry: "KIND tid hid wid".
    pub fn render_lines(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(e.kind.name());
            out.push_str(&format!(" {} {} {}\n", e.pos.tid, e.pos.hid, e.pos.wid));
        }
        out
    }
}

/// Context-budget audit for one manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub per_segment_tokens: Vec<u64>,
    pub timestamp_tokens: u64,
    pub total: u64,
    pub limit: u64,
    pub fits: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MropeError {
    #[error("invalid manifest: {}", render_violations(.0))]
    InvalidManifest(Vec<Violation>),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

fn render_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// Frames covering `duration_ms` of audio at `frame_ms` per frame.
pub fn audio_frame_count(duration_ms: u64, frame_ms: u64, rounding: FrameRounding) -> u64 {
    debug_assert!(frame_ms > 0);
    match rounding {
        FrameRounding::Floor => duration_ms / frame_ms,
        FrameRounding::Ceil => duration_ms.div_ceil(frame_ms),
        FrameRounding::Round => (2 * duration_ms + frame_ms) / (2 * frame_ms),
    }
}

/// Temporal-ID offset of a video frame: its timestamp in frame units,
/// rounded half up. The block base is added by the caller.
pub fn video_frame_tid(timestamp_ms: u64, frame_ms: u64) -> u64 {
    debug_assert!(frame_ms > 0);
    (2 * timestamp_ms + frame_ms) / (2 * frame_ms)
}

fn render_stamp(format: &str, time_ms: u64) -> String {
    let seconds = time_ms as f64 / 1000.0;
    if let Some(pos) = format.find("%.") {
        let tail = &format[pos + 2..];
        let mut chars = tail.chars();
        if let (Some(d), Some('f')) = (chars.next(), chars.next()) {
            if d.is_ascii_digit() {
                let prec = (d as u8 - b'0') as usize;
                return format!("{}{:.prec$}{}", &format[..pos], seconds, &format[pos + 4..]);
            }
        }
    }
    // No placeholder: the template renders literally.
    format.to_string()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stamp times are keyed by content, not by segment position, so removing an
/// unrelated segment never perturbs another segment's stamps.
fn stamp_stream_seed(seed: u64, duration_ms: u64, min: u64, max: u64) -> u64 {
    let mut h = splitmix64(seed);
    for part in [duration_ms, min, max] {
        h = splitmix64(h ^ part);
    }
    h
}

/// Stamp times inside one standalone audio segment: an anchor at 0, then
/// seeded uniform gaps in [min, max] while they land inside the segment.
fn audio_stamp_times(duration_ms: u64, cfg: &TimestampConfig) -> Vec<u64> {
    if !cfg.enabled {
        return Vec::new();
    }
    let (min, max) = cfg.audio_interval_ms;
    let mut rng = ChaCha8Rng::seed_from_u64(stamp_stream_seed(cfg.seed, duration_ms, min, max));
    let mut times = vec![0u64];
    let mut t = 0u64;
    loop {
        t += rng.gen_range(min..=max);
        if t >= duration_ms {
            break;
        }
        times.push(t);
    }
    times
}

/// Pair detection: a VIDEO segment immediately followed by an AUDIO segment
/// forms one block (the audio is the video's soundtrack).
enum BlockRef<'a> {
    Single(usize, &'a MediaSegment),
    Pair {
        video_index: usize,
        grid: crate::model::Grid,
        frame_timestamps_ms: &'a [u64],
        audio_index: usize,
        duration_ms: u64,
    },
}

fn split_blocks(segments: &[MediaSegment]) -> Vec<BlockRef<'_>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < segments.len() {
        if let MediaSegment::Video {
            grid,
            frame_timestamps_ms,
        } = &segments[i]
        {
            if let Some(MediaSegment::Audio { duration_ms }) = segments.get(i + 1) {
                out.push(BlockRef::Pair {
                    video_index: i,
                    grid: *grid,
                    frame_timestamps_ms,
                    audio_index: i + 1,
                    duration_ms: *duration_ms,
                });
                i += 2;
                continue;
            }
        }
        out.push(BlockRef::Single(i, &segments[i]));
        i += 1;
    }
    out
}

/// Per-block media extent on the shared wall-clock timeline: a pair plays
/// its video and audio concurrently.
pub(crate) fn block_media_extents_ms(segments: &[MediaSegment]) -> Vec<u64> {
    split_blocks(segments)
        .iter()
        .map(|b| match b {
            BlockRef::Single(_, seg) => seg.media_ms(),
            BlockRef::Pair {
                frame_timestamps_ms,
                duration_ms,
                ..
            } => frame_timestamps_ms.last().copied().unwrap_or(0).max(*duration_ms),
        })
        .collect()
}

/// One interleave window of a paired segment: the video frames and audio
/// frames whose start times fall in [start_ms, start_ms + chunk_ms).
struct PairChunk {
    start_ms: u64,
    video: Range<usize>,
    audio: Range<u64>,
}

fn pair_chunks(
    video_ts_ms: &[u64],
    audio_frames: u64,
    frame_ms: u64,
    chunk_ms: u64,
) -> Vec<PairChunk> {
    let mut chunks = Vec::new();
    let mut vi = 0usize;
    let mut ai = 0u64;
    while vi < video_ts_ms.len() || ai < audio_frames {
        let next_video = video_ts_ms.get(vi).map(|ts| ts / chunk_ms);
        let next_audio = (ai < audio_frames).then(|| ai * frame_ms / chunk_ms);
        let c = match (next_video, next_audio) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => unreachable!("loop condition"),
        };
        let v_start = vi;
        while vi < video_ts_ms.len() && video_ts_ms[vi] / chunk_ms == c {
            vi += 1;
        }
        let a_start = ai;
        while ai < audio_frames && ai * frame_ms / chunk_ms == c {
            ai += 1;
        }
        chunks.push(PairChunk {
            start_ms: c * chunk_ms,
            video: v_start..vi,
            audio: a_start..ai,
        });
    }
    chunks
}

fn validated(m: &MediaManifest) -> Result<(), MropeError> {
    let violations = m.validate();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(MropeError::InvalidManifest(violations))
    }
}

struct TableBuilder<'a> {
    table: PositionTable,
    next_base: u64,
    seg_token: Vec<usize>,
    ts: &'a TimestampConfig,
}

impl<'a> TableBuilder<'a> {
    fn new(segment_count: usize, ts: &'a TimestampConfig) -> Self {
        TableBuilder {
            table: PositionTable::default(),
            next_base: 0,
            seg_token: vec![0; segment_count],
            ts,
        }
    }

    fn push_entry(&mut self, segment: usize, kind: EntryKind, pos: PositionTriple) {
        let token = self.seg_token[segment];
        self.seg_token[segment] += 1;
        self.table.entries.push(PositionEntry {
            segment,
            token,
            kind,
            pos,
        });
    }

    fn push_stamp(&mut self, segment: usize, time_ms: u64, tid: u64) {
        for _ in 0..self.ts.tokens_per_stamp {
            self.push_entry(segment, EntryKind::Timestamp, PositionTriple::uniform(tid));
        }
        self.table.stamps.push(StampRecord {
            segment,
            time_ms,
            rendered: render_stamp(&self.ts.format, time_ms),
        });
    }

    /// Closes the block spanning entries [first_entry..], advancing the base
    /// past its maximum ID. A block that produced no entries is dropped.
    fn close_block(&mut self, segments: (usize, usize), first_entry: usize) {
        let entries = &self.table.entries[first_entry..];
        if entries.is_empty() {
            return;
        }
        let max_id = entries.iter().map(|e| e.pos.max_id()).max().expect("non-empty");
        self.table.blocks.push(BlockSpan {
            segments,
            base_id: self.next_base,
            max_id,
            first_entry,
            entry_count: entries.len(),
        });
        self.next_base = max_id + 1;
    }
}

/// Assigns position triples over the whole manifest.
pub fn assign_positions(
    m: &MediaManifest,
    ts: &TimestampConfig,
    framing: &FramingConfig,
) -> Result<PositionTable, MropeError> {
    validated(m)?;
    ts.validate()?;
    if framing.av_chunk_ms == 0 {
        return Err(MropeError::InvalidConfig(
            "av_chunk_ms must be positive".into(),
        ));
    }

    let frame_ms = m.audio_frame_ms;
    let mut b = TableBuilder::new(m.segments.len(), ts);

    for block in split_blocks(&m.segments) {
        let first_entry = b.table.entries.len();
        let base = b.next_base;
        match block {
            BlockRef::Single(i, MediaSegment::Text { token_count }) => {
                for k in 0..*token_count {
                    b.push_entry(i, EntryKind::Text, PositionTriple::uniform(base + k));
                }
                b.close_block((i, i), first_entry);
            }
            BlockRef::Single(i, MediaSegment::Image { grid }) => {
                for r in 0..grid.rows as u64 {
                    for c in 0..grid.cols as u64 {
                        b.push_entry(
                            i,
                            EntryKind::Image,
                            PositionTriple {
                                tid: base,
                                hid: base + r,
                                wid: base + c,
                            },
                        );
                    }
                }
                b.close_block((i, i), first_entry);
            }
            BlockRef::Single(
                i,
                MediaSegment::Video {
                    grid,
                    frame_timestamps_ms,
                },
            ) => {
                for &ts_ms in frame_timestamps_ms {
                    let tid = base + video_frame_tid(ts_ms, frame_ms);
                    if ts.enabled {
                        b.push_stamp(i, ts_ms, tid);
                    }
                    for r in 0..grid.rows as u64 {
                        for c in 0..grid.cols as u64 {
                            b.push_entry(
                                i,
                                EntryKind::Video,
                                PositionTriple {
                                    tid,
                                    hid: base + r,
                                    wid: base + c,
                                },
                            );
                        }
                    }
                }
                b.close_block((i, i), first_entry);
            }
            BlockRef::Single(i, MediaSegment::Audio { duration_ms }) => {
                let frames = audio_frame_count(*duration_ms, frame_ms, framing.rounding);
                let stamp_times = audio_stamp_times(*duration_ms, ts);
                let mut next_stamp = 0usize;
                for k in 0..frames {
                    // Frame k covers [k*frame_ms, (k+1)*frame_ms); stamps
                    // landing there precede it.
                    while next_stamp < stamp_times.len()
                        && stamp_times[next_stamp] < (k + 1) * frame_ms
                    {
                        b.push_stamp(i, stamp_times[next_stamp], base + k);
                        next_stamp += 1;
                    }
                    b.push_entry(i, EntryKind::Audio, PositionTriple::uniform(base + k));
                }
                // Stamps past the last frame boundary attach to the final
                // frame rather than dangling.
                if frames > 0 {
                    while next_stamp < stamp_times.len() {
                        // Insertion after the last frame entry keeps entry
                        // order by time; tid clamps to the last frame.
                        b.push_stamp(i, stamp_times[next_stamp], base + frames - 1);
                        next_stamp += 1;
                    }
                }
                b.close_block((i, i), first_entry);
            }
            BlockRef::Pair {
                video_index,
                grid,
                frame_timestamps_ms,
                audio_index,
                duration_ms,
            } => {
                let frames = audio_frame_count(duration_ms, frame_ms, framing.rounding);
                for chunk in pair_chunks(frame_timestamps_ms, frames, frame_ms, framing.av_chunk_ms)
                {
                    let first_tid = if chunk.video.is_empty() {
                        base + chunk.audio.start
                    } else {
                        base + video_frame_tid(frame_timestamps_ms[chunk.video.start], frame_ms)
                    };
                    if ts.enabled {
                        b.push_stamp(video_index, chunk.start_ms, first_tid);
                    }
                    for &ts_ms in &frame_timestamps_ms[chunk.video.clone()] {
                        let tid = base + video_frame_tid(ts_ms, frame_ms);
                        for r in 0..grid.rows as u64 {
                            for c in 0..grid.cols as u64 {
                                b.push_entry(
                                    video_index,
                                    EntryKind::Video,
                                    PositionTriple {
                                        tid,
                                        hid: base + r,
                                        wid: base + c,
                                    },
                                );
                            }
                        }
                    }
                    for k in chunk.audio {
                        b.push_entry(audio_index, EntryKind::Audio, PositionTriple::uniform(base + k));
                    }
                }
                b.close_block((video_index, audio_index), first_entry);
            }
        }
    }
    Ok(b.table)
}

/// Token-count audit against the manifest's context limit.
///
/// Text counts as given; an image as its grid cells; audio as its frame
/// count; video as frames x `tokens_per_video_frame` (grid cells describe
/// position layout, not vision-encoder token cost). Timestamp overhead uses
/// the same placement rules as [`assign_positions`].
pub fn context_budget(
    m: &MediaManifest,
    ts: &TimestampConfig,
    framing: &FramingConfig,
    tokens_per_video_frame: u64,
) -> Result<BudgetReport, MropeError> {
    validated(m)?;
    ts.validate()?;
    if framing.av_chunk_ms == 0 {
        return Err(MropeError::InvalidConfig(
            "av_chunk_ms must be positive".into(),
        ));
    }

    let frame_ms = m.audio_frame_ms;
    let mut per_segment = vec![0u64; m.segments.len()];
    for (i, seg) in m.segments.iter().enumerate() {
        per_segment[i] = match seg {
            MediaSegment::Text { token_count } => *token_count,
            MediaSegment::Image { grid } => grid.cells(),
            MediaSegment::Video {
                frame_timestamps_ms, ..
            } => frame_timestamps_ms.len() as u64 * tokens_per_video_frame,
            MediaSegment::Audio { duration_ms } => {
                audio_frame_count(*duration_ms, frame_ms, framing.rounding)
            }
        };
    }

    let mut stamp_count = 0u64;
    if ts.enabled {
        for block in split_blocks(&m.segments) {
            stamp_count += match block {
                BlockRef::Single(_, MediaSegment::Video { frame_timestamps_ms, .. }) => {
                    frame_timestamps_ms.len() as u64
                }
                BlockRef::Single(_, MediaSegment::Audio { duration_ms }) => {
                    let frames = audio_frame_count(*duration_ms, frame_ms, framing.rounding);
                    if frames == 0 {
                        0
                    } else {
                        audio_stamp_times(*duration_ms, ts).len() as u64
                    }
                }
                BlockRef::Single(..) => 0,
                BlockRef::Pair {
                    frame_timestamps_ms,
                    duration_ms,
                    ..
                } => {
                    let frames = audio_frame_count(duration_ms, frame_ms, framing.rounding);
                    pair_chunks(frame_timestamps_ms, frames, frame_ms, framing.av_chunk_ms).len()
                        as u64
                }
            };
        }
    }

    let timestamp_tokens = stamp_count * ts.tokens_per_stamp as u64;
    let total = per_segment.iter().sum::<u64>() + timestamp_tokens;
    Ok(BudgetReport {
        per_segment_tokens: per_segment,
        timestamp_tokens,
        total,
        limit: m.context_limit,
        fits: total <= m.context_limit,
    })
}
