//! Position-assignment invariants over fuzzed manifests: block contiguity,
//! audio temporal resolution, timestamp placement, determinism, and budget
//! additivity.

use omnistream_core::model::{Grid, MediaManifest, MediaSegment};
use omnistream_core::mrope::{
    assign_positions, context_budget, EntryKind, FramingConfig, PositionTable, TimestampConfig,
    DEFAULT_TOKENS_PER_VIDEO_FRAME,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_segment(rng: &mut StdRng) -> MediaSegment {
    match rng.gen_range(0..4) {
        0 => MediaSegment::Text {
            token_count: rng.gen_range(1..50),
        },
        1 => MediaSegment::Image {
            grid: Grid {
                rows: rng.gen_range(1..8),
                cols: rng.gen_range(1..8),
            },
        },
        2 => {
            let n = rng.gen_range(1..20);
            let mut ts = Vec::with_capacity(n);
            let mut t = rng.gen_range(0..500u64);
            for _ in 0..n {
                ts.push(t);
                t += rng.gen_range(40..2500);
            }
            MediaSegment::Video {
                grid: Grid {
                    rows: rng.gen_range(1..6),
                    cols: rng.gen_range(1..6),
                },
                frame_timestamps_ms: ts,
            }
        }
        _ => MediaSegment::Audio {
            duration_ms: rng.gen_range(1..60_000),
        },
    }
}

fn random_manifest(rng: &mut StdRng) -> MediaManifest {
    let n = rng.gen_range(0..8);
    MediaManifest::new((0..n).map(|_| random_segment(rng)).collect())
}

fn random_ts_config(rng: &mut StdRng) -> TimestampConfig {
    let min = rng.gen_range(500..6000);
    TimestampConfig {
        enabled: rng.gen_bool(0.8),
        format: "[%.2fs]".to_string(),
        tokens_per_stamp: rng.gen_range(1..8),
        audio_interval_ms: (min, min + rng.gen_range(0..8000)),
        seed: rng.gen(),
    }
}

/// Blocks must tile the ID space: each starts at one plus the previous
/// block's maximum ID and actually contains its base.
fn assert_contiguity(table: &PositionTable) {
    let mut expected_base = 0u64;
    for block in &table.blocks {
        assert_eq!(block.base_id, expected_base, "block base breaks contiguity");
        let entries =
            &table.entries[block.first_entry..block.first_entry + block.entry_count];
        let min = entries.iter().map(|e| e.pos.min_id()).min().unwrap();
        let max = entries.iter().map(|e| e.pos.max_id()).max().unwrap();
        assert_eq!(min, block.base_id, "block minimum is not its base");
        assert_eq!(max, block.max_id, "recorded block maximum is wrong");
        expected_base = max + 1;
    }
    // Blocks cover every entry.
    let covered: usize = table.blocks.iter().map(|b| b.entry_count).sum();
    assert_eq!(covered, table.entries.len());
}

fn assert_audio_resolution(table: &PositionTable) {
    let mut per_segment: std::collections::BTreeMap<usize, Vec<u64>> = Default::default();
    for e in &table.entries {
        if e.kind == EntryKind::Audio {
            per_segment.entry(e.segment).or_default().push(e.pos.tid);
        }
    }
    for tids in per_segment.values() {
        for w in tids.windows(2) {
            assert_eq!(w[1] - w[0], 1, "audio temporal IDs must advance by one");
        }
    }
}

fn assert_stamp_monotonicity(table: &PositionTable, ts: &TimestampConfig, m: &MediaManifest) {
    let mut per_segment: std::collections::BTreeMap<usize, Vec<u64>> = Default::default();
    for s in &table.stamps {
        per_segment.entry(s.segment).or_default().push(s.time_ms);
    }
    let (min, max) = ts.audio_interval_ms;
    for (segment, times) in per_segment {
        for w in times.windows(2) {
            assert!(w[0] < w[1], "stamp times must strictly increase");
            // Random-interval gaps apply only to standalone audio stamps.
            let standalone_audio = matches!(m.segments[segment], MediaSegment::Audio { .. })
                && !matches!(
                    segment.checked_sub(1).map(|p| &m.segments[p]),
                    Some(MediaSegment::Video { .. })
                );
            if standalone_audio {
                let gap = w[1] - w[0];
                assert!(
                    (min..=max).contains(&gap),
                    "audio stamp gap {gap} outside [{min}, {max}]"
                );
            }
        }
    }
}

#[test]
fn fuzzed_manifests_hold_position_invariants() {
    let mut rng = StdRng::seed_from_u64(0x4D524F50);
    let framing = FramingConfig::default();
    for round in 0..1000 {
        let m = random_manifest(&mut rng);
        let ts = random_ts_config(&mut rng);
        let table = assign_positions(&m, &ts, &framing)
            .unwrap_or_else(|e| panic!("round {round}: {e}"));
        assert_contiguity(&table);
        assert_audio_resolution(&table);
        assert_stamp_monotonicity(&table, &ts, &m);

        // Determinism: identical inputs give byte-identical tables.
        let again = assign_positions(&m, &ts, &framing).unwrap();
        assert_eq!(
            serde_json::to_string(&table).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
        let budget_a = context_budget(&m, &ts, &framing, DEFAULT_TOKENS_PER_VIDEO_FRAME).unwrap();
        let budget_b = context_budget(&m, &ts, &framing, DEFAULT_TOKENS_PER_VIDEO_FRAME).unwrap();
        assert_eq!(budget_a, budget_b);
        assert_eq!(
            budget_a.total,
            budget_a.per_segment_tokens.iter().sum::<u64>() + budget_a.timestamp_tokens
        );
    }
}

/// Removing a segment is structure-preserving when it neither splits an
/// audio-video pair nor forms a new one; the interleave windows of a pair
/// stamp differently from standalone segments.
fn removal_is_structure_preserving(segments: &[MediaSegment], i: usize) -> bool {
    let is_video = |s: &MediaSegment| matches!(s, MediaSegment::Video { .. });
    let is_audio = |s: &MediaSegment| matches!(s, MediaSegment::Audio { .. });
    if is_video(&segments[i]) && segments.get(i + 1).is_some_and(is_audio) {
        return false;
    }
    if is_audio(&segments[i]) && i > 0 && is_video(&segments[i - 1]) {
        return false;
    }
    if i > 0
        && is_video(&segments[i - 1])
        && segments.get(i + 1).is_some_and(is_audio)
    {
        return false;
    }
    true
}

#[test]
fn budget_is_additive_under_segment_removal() {
    let mut rng = StdRng::seed_from_u64(0xADD17177);
    let framing = FramingConfig::default();
    let mut checked = 0;
    while checked < 300 {
        let m = random_manifest(&mut rng);
        if m.segments.is_empty() {
            continue;
        }
        let ts = random_ts_config(&mut rng);
        let i = rng.gen_range(0..m.segments.len());
        if !removal_is_structure_preserving(&m.segments, i) {
            continue;
        }
        let full = context_budget(&m, &ts, &framing, DEFAULT_TOKENS_PER_VIDEO_FRAME).unwrap();
        let mut without = m.clone();
        without.segments.remove(i);
        let rest = context_budget(&without, &ts, &framing, DEFAULT_TOKENS_PER_VIDEO_FRAME).unwrap();

        // Other segments' token counts and stamp overheads are untouched.
        let mut expected = full.per_segment_tokens.clone();
        let removed_tokens = expected.remove(i);
        assert_eq!(rest.per_segment_tokens, expected);
        assert!(rest.timestamp_tokens <= full.timestamp_tokens);
        let removed_stamps = full.timestamp_tokens - rest.timestamp_tokens;
        assert_eq!(full.total - rest.total, removed_tokens + removed_stamps);
        checked += 1;
    }
}

#[test]
fn default_timestamps_fit_ten_hour_audio() {
    let m = MediaManifest::new(vec![MediaSegment::Audio {
        duration_ms: 36_000_000,
    }]);
    let framing = FramingConfig::default();
    let bare = context_budget(
        &m,
        &TimestampConfig::disabled(),
        &framing,
        DEFAULT_TOKENS_PER_VIDEO_FRAME,
    )
    .unwrap();
    assert_eq!(bare.total, 225_000);
    assert!(bare.fits);

    let stamped = context_budget(
        &m,
        &TimestampConfig::default(),
        &framing,
        DEFAULT_TOKENS_PER_VIDEO_FRAME,
    )
    .unwrap();
    assert!(stamped.total > bare.total);
    assert!(stamped.fits, "default stamp config must stay under the limit");
}
