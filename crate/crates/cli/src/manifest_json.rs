//! Manifest schema: hand-walked JSON so every error carries the exact
//! field path.
//!
//! Wire format:
//!
//! ```json
//! {
//!   "segments": [
//!     {"kind": "TEXT",  "token_count": 3},
//!     {"kind": "IMAGE", "grid": {"rows": 2, "cols": 2}},
//!     {"kind": "VIDEO", "grid": {"rows": 2, "cols": 2}, "frame_timestamps": [0.0, 1.0]},
//!     {"kind": "AUDIO", "duration": 1.0}
//!   ],
//!   "audio_frame_ms": 160,
//!   "context_limit": 262144
//! }
//! ```
//!
//! Durations and timestamps are seconds on the wire and milliseconds
//! internally; unknown keys anywhere are schema errors.

use serde_json::Value;

use omnistream_core::model::{seconds_to_ms, Grid, MediaManifest, MediaSegment};

use crate::output::{CliError, ErrorKind};

/// One JSON object being consumed key by key; leftover keys are errors.
pub struct Obj<'a> {
    map: &'a serde_json::Map<String, Value>,
    path: String,
    taken: Vec<&'a str>,
}

impl<'a> Obj<'a> {
    pub fn at(value: &'a Value, path: &str) -> Result<Self, CliError> {
        let map = value
            .as_object()
            .ok_or_else(|| CliError::schema(path, "expected an object"))?;
        Ok(Obj {
            map,
            path: path.to_string(),
            taken: Vec::new(),
        })
    }

    pub fn child_path(&self, key: &str) -> String {
        format!("{}.{key}", self.path)
    }

    pub fn take(&mut self, key: &'a str) -> Option<&'a Value> {
        let found = self.map.get(key);
        if found.is_some() {
            self.taken.push(key);
        }
        found
    }

    pub fn require(&mut self, key: &'a str) -> Result<&'a Value, CliError> {
        self.take(key)
            .ok_or_else(|| CliError::schema(&self.child_path(key), "missing required field"))
    }

    pub fn finish(self) -> Result<(), CliError> {
        let unknown: Vec<&str> = self
            .map
            .keys()
            .map(String::as_str)
            .filter(|k| !self.taken.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::schema(
                &self.path,
                format!("unknown field(s): {}", unknown.join(", ")),
            ))
        }
    }
}

pub fn u64_of(value: &Value, path: &str) -> Result<u64, CliError> {
    value
        .as_u64()
        .ok_or_else(|| CliError::schema(path, "expected a non-negative integer"))
}

pub fn u32_of(value: &Value, path: &str) -> Result<u32, CliError> {
    u64_of(value, path)?
        .try_into()
        .map_err(|_| CliError::schema(path, "value out of range"))
}

pub fn f64_of(value: &Value, path: &str) -> Result<f64, CliError> {
    let v = value
        .as_f64()
        .ok_or_else(|| CliError::schema(path, "expected a number"))?;
    if !v.is_finite() {
        return Err(CliError::schema(path, "expected a finite number"));
    }
    Ok(v)
}

pub fn string_of<'a>(value: &'a Value, path: &str) -> Result<&'a str, CliError> {
    value
        .as_str()
        .ok_or_else(|| CliError::schema(path, "expected a string"))
}

pub fn bool_of(value: &Value, path: &str) -> Result<bool, CliError> {
    value
        .as_bool()
        .ok_or_else(|| CliError::schema(path, "expected a boolean"))
}

pub fn array_of<'a>(value: &'a Value, path: &str) -> Result<&'a [Value], CliError> {
    value
        .as_array()
        .map(Vec::as_slice)
        .ok_or_else(|| CliError::schema(path, "expected an array"))
}

/// Seconds on the wire become integer milliseconds.
pub fn seconds_of(value: &Value, path: &str) -> Result<u64, CliError> {
    let v = f64_of(value, path)?;
    if v < 0.0 {
        return Err(CliError::schema(path, "seconds must be non-negative"));
    }
    Ok(seconds_to_ms(v))
}

pub fn parse_json(bytes: &str) -> Result<Value, CliError> {
    serde_json::from_str(bytes)
        .map_err(|e| CliError::new(ErrorKind::Parse, format!("malformed JSON: {e}")))
}

fn grid_at(value: &Value, path: &str) -> Result<Grid, CliError> {
    let mut obj = Obj::at(value, path)?;
    let rows = u32_of(obj.require("rows")?, &obj.child_path("rows"))?;
    let cols = u32_of(obj.require("cols")?, &obj.child_path("cols"))?;
    obj.finish()?;
    Ok(Grid { rows, cols })
}

fn segment_at(value: &Value, path: &str) -> Result<MediaSegment, CliError> {
    let mut obj = Obj::at(value, path)?;
    let kind = string_of(obj.require("kind")?, &obj.child_path("kind"))?;
    let segment = match kind {
        "TEXT" => MediaSegment::Text {
            token_count: u64_of(obj.require("token_count")?, &obj.child_path("token_count"))?,
        },
        "IMAGE" => MediaSegment::Image {
            grid: grid_at(obj.require("grid")?, &obj.child_path("grid"))?,
        },
        "VIDEO" => {
            let grid = grid_at(obj.require("grid")?, &obj.child_path("grid"))?;
            let stamps_path = obj.child_path("frame_timestamps");
            let raw = array_of(obj.require("frame_timestamps")?, &stamps_path)?;
            let mut frame_timestamps_ms = Vec::with_capacity(raw.len());
            for (i, v) in raw.iter().enumerate() {
                frame_timestamps_ms.push(seconds_of(v, &format!("{stamps_path}[{i}]"))?);
            }
            MediaSegment::Video {
                grid,
                frame_timestamps_ms,
            }
        }
        "AUDIO" => MediaSegment::Audio {
            duration_ms: seconds_of(obj.require("duration")?, &obj.child_path("duration"))?,
        },
        other => {
            return Err(CliError::schema(
                &obj.child_path("kind"),
                format!("unknown kind {other:?}; expected TEXT, IMAGE, VIDEO, or AUDIO"),
            ))
        }
    };
    obj.finish()?;
    Ok(segment)
}

/// Walks an already-parsed JSON value rooted at `path` into a validated
/// manifest.
pub fn manifest_at(value: &Value, path: &str) -> Result<MediaManifest, CliError> {
    let mut obj = Obj::at(value, path)?;
    let segments_path = obj.child_path("segments");
    let raw = array_of(obj.require("segments")?, &segments_path)?;
    let mut segments = Vec::with_capacity(raw.len());
    for (i, v) in raw.iter().enumerate() {
        segments.push(segment_at(v, &format!("{segments_path}[{i}]"))?);
    }
    let mut manifest = MediaManifest::new(segments);
    if let Some(v) = obj.take("audio_frame_ms") {
        manifest.audio_frame_ms = u64_of(v, &obj.child_path("audio_frame_ms"))?;
    }
    if let Some(v) = obj.take("context_limit") {
        manifest.context_limit = u64_of(v, &obj.child_path("context_limit"))?;
    }
    obj.finish()?;

    let violations = manifest.validate();
    if violations.is_empty() {
        Ok(manifest)
    } else {
        Err(CliError::from_violations(violations))
    }
}

pub fn parse_manifest(bytes: &str) -> Result<MediaManifest, CliError> {
    manifest_at(&parse_json(bytes)?, "manifest")
}
