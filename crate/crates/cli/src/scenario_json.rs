//! Scenario, stage-model, and sweep schemas.
//!
//! A simulate input:
//!
//! ```json
//! {
//!   "scenario": {
//!     "label": "flash-1",
//!     "manifest": { "segments": [ {"kind": "AUDIO", "duration": 2.0} ] },
//!     "input_mode": "PRELOADED",
//!     "ratio": "2/1",
//!     "text_len": 24,
//!     "layout": {"num_codebooks": 8, "codebook_size": 1024, "frame_rate_hz": 12.5, "chunk_frames": 1},
//!     "concurrency": 1,
//!     "seed": 0
//!   },
//!   "stages": {
//!     "levels": {"1": {"thinker_ttft_ms": 80.0, "thinker_tpop_ms": 5.6, "talker_tpop_ms": 14.2}},
//!     "codec_decode_ms": [3.0, 5.0],
//!     "codec_sample": false,
//!     "encoder_chunk_ms": 0.0,
//!     "prefill_chunk_seconds": 2.0
//!   }
//! }
//! ```
//!
//! `manifest_file` and `stages_file` substitute a path (relative to the
//! containing file) for the inline object. A sweep input replaces
//! "scenario" with a "scenarios" array sharing one stage model.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde_json::Value;

use omnistream_core::codec::CodecLayout;
use omnistream_core::model::Rational;
use omnistream_core::sim::{InputMode, Scenario, StageLatencies, StageModel};

use crate::manifest_json::{
    array_of, bool_of, f64_of, manifest_at, parse_json, string_of, u32_of, u64_of, Obj,
};
use crate::output::{CliError, ErrorKind};

#[derive(Debug)]
pub struct LoadedScenario {
    pub label: Option<String>,
    pub scenario: Scenario,
}

#[derive(Debug)]
pub struct SimulateInput {
    pub scenario: LoadedScenario,
    pub stages: StageModel,
}

#[derive(Debug)]
pub struct SweepInput {
    pub scenarios: Vec<LoadedScenario>,
    pub stages: StageModel,
}

pub fn read_input_file(path: &Path) -> Result<String, CliError> {
    if !path.exists() {
        return Err(CliError::usage(format!(
            "input file {} does not exist",
            path.display()
        )));
    }
    std::fs::read_to_string(path)
        .map_err(|e| CliError::new(ErrorKind::Io, format!("cannot read {}: {e}", path.display())))
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

pub fn rational_of(value: &Value, path: &str) -> Result<Rational, CliError> {
    let s = string_of(value, path)?;
    s.parse()
        .map_err(|_| CliError::schema(path, format!("{s:?} is not a ratio like \"2/1\"")))
}

pub fn input_mode_of(value: &Value, path: &str) -> Result<InputMode, CliError> {
    parse_input_mode(string_of(value, path)?)
        .ok_or_else(|| CliError::schema(path, "expected PRELOADED or REAL_TIME_STREAM"))
}

pub fn parse_input_mode(s: &str) -> Option<InputMode> {
    match s {
        "PRELOADED" => Some(InputMode::Preloaded),
        "REAL_TIME_STREAM" => Some(InputMode::RealTimeStream),
        _ => None,
    }
}

fn layout_at(value: &Value, path: &str) -> Result<CodecLayout, CliError> {
    let mut obj = Obj::at(value, path)?;
    let mut layout = CodecLayout::default();
    if let Some(v) = obj.take("num_codebooks") {
        layout.num_codebooks = u32_of(v, &obj.child_path("num_codebooks"))?;
    }
    if let Some(v) = obj.take("codebook_size") {
        layout.codebook_size = u32_of(v, &obj.child_path("codebook_size"))?;
    }
    if let Some(v) = obj.take("frame_rate_hz") {
        layout.frame_rate_hz = f64_of(v, &obj.child_path("frame_rate_hz"))?;
    }
    if let Some(v) = obj.take("chunk_frames") {
        layout.chunk_frames = u32_of(v, &obj.child_path("chunk_frames"))?;
    }
    obj.finish()?;
    Ok(layout)
}

fn scenario_at(value: &Value, path: &str, dir: &Path) -> Result<LoadedScenario, CliError> {
    let mut obj = Obj::at(value, path)?;

    let label = match obj.take("label") {
        Some(v) => Some(string_of(v, &obj.child_path("label"))?.to_string()),
        None => None,
    };

    let manifest = match (obj.take("manifest"), obj.take("manifest_file")) {
        (Some(inline), None) => manifest_at(inline, &obj.child_path("manifest"))?,
        (None, Some(file)) => {
            let rel = string_of(file, &obj.child_path("manifest_file"))?;
            let full = dir.join(rel);
            manifest_at(&parse_json(&read_input_file(&full)?)?, "manifest")?
        }
        (Some(_), Some(_)) => {
            return Err(CliError::schema(
                path,
                "give either manifest or manifest_file, not both",
            ))
        }
        (None, None) => {
            return Err(CliError::schema(
                &obj.child_path("manifest"),
                "missing required field (or manifest_file)",
            ))
        }
    };

    let input_mode = match obj.take("input_mode") {
        Some(v) => input_mode_of(v, &obj.child_path("input_mode"))?,
        None => InputMode::Preloaded,
    };
    let aria_ratio = rational_of(obj.require("ratio")?, &obj.child_path("ratio"))?;
    let text_len = u64_of(obj.require("text_len")?, &obj.child_path("text_len"))?;
    let layout = match obj.take("layout") {
        Some(v) => layout_at(v, &obj.child_path("layout"))?,
        None => CodecLayout::default(),
    };
    let concurrency = match obj.take("concurrency") {
        Some(v) => u32_of(v, &obj.child_path("concurrency"))?,
        None => 1,
    };
    let seed = match obj.take("seed") {
        Some(v) => u64_of(v, &obj.child_path("seed"))?,
        None => 0,
    };
    obj.finish()?;

    Ok(LoadedScenario {
        label,
        scenario: Scenario {
            manifest,
            input_mode,
            aria_ratio,
            text_len,
            layout,
            concurrency,
            seed,
        },
    })
}

fn stages_at(value: &Value, path: &str) -> Result<StageModel, CliError> {
    let mut obj = Obj::at(value, path)?;

    let levels_path = obj.child_path("levels");
    let levels_map = obj
        .require("levels")?
        .as_object()
        .ok_or_else(|| CliError::schema(&levels_path, "expected an object"))?;
    let mut levels = BTreeMap::new();
    for (key, entry) in levels_map {
        let level: u32 = key.parse().map_err(|_| {
            CliError::schema(&levels_path, format!("{key:?} is not a concurrency level"))
        })?;
        let lat_path = format!("{levels_path}.{key}");
        let mut lat = Obj::at(entry, &lat_path)?;
        let latencies = StageLatencies {
            thinker_ttft_ms: f64_of(lat.require("thinker_ttft_ms")?, &lat.child_path("thinker_ttft_ms"))?,
            thinker_tpop_ms: f64_of(lat.require("thinker_tpop_ms")?, &lat.child_path("thinker_tpop_ms"))?,
            talker_tpop_ms: f64_of(lat.require("talker_tpop_ms")?, &lat.child_path("talker_tpop_ms"))?,
        };
        lat.finish()?;
        levels.insert(level, latencies);
    }
    if levels.is_empty() {
        return Err(CliError::schema(&levels_path, "at least one level required"));
    }

    let mut stages = StageModel {
        levels,
        ..Default::default()
    };
    if let Some(v) = obj.take("codec_decode_ms") {
        let p = obj.child_path("codec_decode_ms");
        let pair = array_of(v, &p)?;
        if pair.len() != 2 {
            return Err(CliError::schema(&p, "expected [lo, hi]"));
        }
        stages.codec_decode_ms = (f64_of(&pair[0], &p)?, f64_of(&pair[1], &p)?);
    }
    if let Some(v) = obj.take("codec_sample") {
        stages.codec_sample = bool_of(v, &obj.child_path("codec_sample"))?;
    }
    if let Some(v) = obj.take("encoder_chunk_ms") {
        stages.encoder_chunk_ms = f64_of(v, &obj.child_path("encoder_chunk_ms"))?;
    }
    if let Some(v) = obj.take("prefill_chunk_seconds") {
        stages.prefill_chunk_seconds = f64_of(v, &obj.child_path("prefill_chunk_seconds"))?;
    }
    obj.finish()?;
    Ok(stages)
}

fn stages_from(obj: &mut Obj<'_>, dir: &Path) -> Result<StageModel, CliError> {
    match (obj.take("stages"), obj.take("stages_file")) {
        (Some(inline), None) => stages_at(inline, &obj.child_path("stages")),
        (None, Some(file)) => {
            let rel = string_of(file, &obj.child_path("stages_file"))?;
            let full = dir.join(rel);
            stages_at(&parse_json(&read_input_file(&full)?)?, "stages")
        }
        (Some(_), Some(_)) => Err(CliError::schema(
            "input",
            "give either stages or stages_file, not both",
        )),
        (None, None) => Err(CliError::schema(
            &obj.child_path("stages"),
            "missing required field (or stages_file)",
        )),
    }
}

pub fn load_simulate_input(path: &Path) -> Result<SimulateInput, CliError> {
    let dir = base_dir(path);
    let root = parse_json(&read_input_file(path)?)?;
    let mut obj = Obj::at(&root, "input")?;
    let scenario = scenario_at(obj.require("scenario")?, "input.scenario", &dir)?;
    let stages = stages_from(&mut obj, &dir)?;
    obj.finish()?;
    Ok(SimulateInput { scenario, stages })
}

pub fn load_sweep_input(path: &Path) -> Result<SweepInput, CliError> {
    let dir = base_dir(path);
    let root = parse_json(&read_input_file(path)?)?;
    let mut obj = Obj::at(&root, "input")?;
    let list_path = obj.child_path("scenarios");
    let raw = array_of(obj.require("scenarios")?, &list_path)?;
    let mut scenarios = Vec::with_capacity(raw.len());
    for (i, v) in raw.iter().enumerate() {
        scenarios.push(scenario_at(v, &format!("{list_path}[{i}]"), &dir)?);
    }
    let stages = stages_from(&mut obj, &dir)?;
    obj.finish()?;
    Ok(SweepInput { scenarios, stages })
}
