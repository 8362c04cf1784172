//! omnistream: plan text/speech interleavings, assign multimodal position
//! IDs, count context budgets, and simulate pipeline latency.
//!
//! All subcommands are deterministic: identical inputs and the same
//! `--seed` produce byte-identical reports. Exit codes: 0 success, 1
//! domain error (a structured error report goes to stdout), 2 usage error.

mod manifest_json;
mod output;
mod overrides;
mod scenario_json;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use omnistream_core::aria::{self, AriaError};
use omnistream_core::model::{PrefixCount, Rational};
use omnistream_core::mrope::{
    self, FrameRounding, FramingConfig, MropeError, TimestampConfig, DEFAULT_TOKENS_PER_VIDEO_FRAME,
};
use omnistream_core::sim::{
    simulate, InputMode, Scenario, ScenarioReport, SimError, StageLatencies, StageModel,
};

use manifest_json::parse_manifest;
use output::{fmt_ms, fmt_rtf, json_bytes, write_report, CliError, ErrorKind, OutputFormat};
use overrides::OverrideSet;
use scenario_json::{load_simulate_input, load_sweep_input, read_input_file, LoadedScenario};

const TTFC_NOTE: &str =
    "TTFC is measured from stream start; subtract ttft_ms for a first-token-relative reading.";

#[derive(Parser)]
#[command(
    name = "omnistream",
    version,
    about = "Streaming interleave planner, position assigner, and latency simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan the earliest admissible text/speech interleaving.
    Schedule(ScheduleArgs),
    /// Assign position ID triples over a media manifest.
    Positions(InputArgs),
    /// Count context tokens for a media manifest.
    Budget(InputArgs),
    /// Simulate one scenario and report latency metrics.
    Simulate(InputArgs),
    /// Simulate a batch of scenarios against one stage model.
    Sweep(InputArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Schedule(a) => &a.common,
            Command::Positions(a) | Command::Budget(a) | Command::Simulate(a) | Command::Sweep(a) => {
                &a.common
            }
        }
    }
}

#[derive(Args)]
struct CommonArgs {
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,

    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,

    /// Seed for every random choice. Omitted means 0, so default runs
    /// are reproducible.
    #[arg(long)]
    seed: Option<u64>,

    /// Override a configuration default, e.g. --set ts.tokens_per_stamp=3.
    /// Unknown keys are errors.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct ScheduleArgs {
    /// Total text tokens.
    #[arg(long)]
    text: u64,

    /// Total speech tokens.
    #[arg(long)]
    speech: u64,

    /// Ratio bound as "num/den"; defaults to speech/text.
    #[arg(long)]
    ratio: Option<String>,

    /// Text tokens already emitted; the plan covers the remainder.
    #[arg(long, default_value_t = 0)]
    resume_text: u64,

    /// Speech tokens already emitted.
    #[arg(long, default_value_t = 0)]
    resume_speech: u64,

    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct InputArgs {
    /// Input JSON file.
    #[arg(long)]
    input: PathBuf,

    #[command(flatten)]
    common: CommonArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.command.common().format;
    let output = cli.command.common().output.clone();

    match dispatch(cli.command) {
        Ok(bytes) => match write_report(&bytes, output.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {}", e.message);
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Err(e) if e.kind == ErrorKind::Usage => {
            eprintln!("error: {}", e.message);
            ExitCode::from(2)
        }
        Err(e) => {
            // Domain failures still produce a parseable report; it goes to
            // stdout even when --output was given, so a bad run never
            // leaves a report file behind.
            let _ = write_report(&e.render(format), None);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<Vec<u8>, CliError> {
    match command {
        Command::Schedule(args) => run_schedule(args),
        Command::Positions(args) => run_positions(args),
        Command::Budget(args) => run_budget(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Sweep(args) => run_sweep(args),
    }
}

fn aria_to_cli(e: AriaError) -> CliError {
    CliError::new(ErrorKind::Domain, e.to_string())
}

fn mrope_to_cli(e: MropeError) -> CliError {
    match e {
        MropeError::InvalidManifest(v) => CliError::from_violations(v),
        MropeError::InvalidConfig(msg) => CliError::new(ErrorKind::Domain, msg),
    }
}

fn sim_to_cli(e: SimError) -> CliError {
    match e {
        SimError::InvalidManifest(v) => CliError::from_violations(v),
        other => CliError::new(ErrorKind::Domain, other.to_string()),
    }
}

fn input_mode_name(mode: InputMode) -> &'static str {
    match mode {
        InputMode::Preloaded => "PRELOADED",
        InputMode::RealTimeStream => "REAL_TIME_STREAM",
    }
}

fn rounding_name(rounding: FrameRounding) -> &'static str {
    match rounding {
        FrameRounding::Floor => "floor",
        FrameRounding::Ceil => "ceil",
        FrameRounding::Round => "round",
    }
}

fn csv_table(rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row).expect("csv row");
    }
    w.into_inner().expect("csv buffer")
}

// ---------------------------------------------------------------- schedule

fn run_schedule(args: ScheduleArgs) -> Result<Vec<u8>, CliError> {
    let set = OverrideSet::parse(&args.common.set)?;
    set.finish()?;

    let budget = match &args.ratio {
        Some(raw) => {
            let ratio: Rational = raw
                .parse()
                .map_err(|_| CliError::usage(format!("--ratio {raw:?}: expected \"num/den\"")))?;
            aria::AriaBudget::with_ratio(args.text, args.speech, ratio)
        }
        None => aria::AriaBudget::from_totals(args.text, args.speech),
    }
    .map_err(aria_to_cli)?;

    let prefix = PrefixCount::new(args.resume_text, args.resume_speech);
    let plan = aria::resume(&budget, prefix).map_err(aria_to_cli)?;

    Ok(match args.common.format {
        OutputFormat::Text => format!("{plan}\n").into_bytes(),
        OutputFormat::Json => json_bytes(&json!({
            "command": "schedule",
            "config_echo": {
                "ratio": budget.ratio().to_string(),
                "resume_speech": args.resume_speech,
                "resume_text": args.resume_text,
                "speech_total": budget.speech_total(),
                "text_total": budget.text_total(),
            },
            "plan": plan.to_string(),
        })),
        OutputFormat::Csv => csv_table(&[
            vec!["field".into(), "value".into()],
            vec!["text_total".into(), budget.text_total().to_string()],
            vec!["speech_total".into(), budget.speech_total().to_string()],
            vec!["ratio".into(), budget.ratio().to_string()],
            vec!["resume_text".into(), args.resume_text.to_string()],
            vec!["resume_speech".into(), args.resume_speech.to_string()],
            vec!["plan".into(), plan.to_string()],
        ]),
    })
}

// ------------------------------------------------------ positions / budget

fn mrope_config(
    set: &mut OverrideSet,
    seed: Option<u64>,
) -> Result<(TimestampConfig, FramingConfig), CliError> {
    let mut ts = TimestampConfig {
        seed: seed.unwrap_or(0),
        ..Default::default()
    };
    if let Some(v) = set.take_bool("ts.enabled")? {
        ts.enabled = v;
    }
    if let Some(v) = set.take_string("ts.format") {
        ts.format = v;
    }
    if let Some(v) = set.take_u32("ts.tokens_per_stamp")? {
        ts.tokens_per_stamp = v;
    }
    if let Some(v) = set.take_u64("ts.min_ms")? {
        ts.audio_interval_ms.0 = v;
    }
    if let Some(v) = set.take_u64("ts.max_ms")? {
        ts.audio_interval_ms.1 = v;
    }

    let mut framing = FramingConfig::default();
    if let Some(v) = set.take_string("framing.rounding") {
        framing.rounding = match v.as_str() {
            "floor" => FrameRounding::Floor,
            "ceil" => FrameRounding::Ceil,
            "round" => FrameRounding::Round,
            _ => {
                return Err(CliError::usage(format!(
                    "--set framing.rounding={v}: expected floor, ceil, or round"
                )))
            }
        };
    }
    if let Some(v) = set.take_u64("framing.av_chunk_ms")? {
        framing.av_chunk_ms = v;
    }
    Ok((ts, framing))
}

fn mrope_echo(
    manifest: &omnistream_core::model::MediaManifest,
    ts: &TimestampConfig,
    framing: &FramingConfig,
) -> serde_json::Value {
    json!({
        "audio_frame_ms": manifest.audio_frame_ms,
        "audio_interval_ms": [ts.audio_interval_ms.0, ts.audio_interval_ms.1],
        "av_chunk_ms": framing.av_chunk_ms,
        "rounding": rounding_name(framing.rounding),
        "seed": ts.seed,
        "timestamp_format": ts.format,
        "timestamps_enabled": ts.enabled,
        "tokens_per_stamp": ts.tokens_per_stamp,
    })
}

fn run_positions(args: InputArgs) -> Result<Vec<u8>, CliError> {
    let mut set = OverrideSet::parse(&args.common.set)?;
    let (ts, framing) = mrope_config(&mut set, args.common.seed)?;
    set.finish()?;

    let manifest = parse_manifest(&read_input_file(&args.input)?)?;
    let table = mrope::assign_positions(&manifest, &ts, &framing).map_err(mrope_to_cli)?;

    Ok(match args.common.format {
        OutputFormat::Text => table.render_lines().into_bytes(),
        OutputFormat::Json => {
            let entries: Vec<serde_json::Value> = table
                .entries
                .iter()
                .map(|e| {
                    json!({
                        "hid": e.pos.hid,
                        "kind": e.kind.name(),
                        "segment": e.segment,
                        "tid": e.pos.tid,
                        "token": e.token,
                        "wid": e.pos.wid,
                    })
                })
                .collect();
            let stamps: Vec<serde_json::Value> = table
                .stamps
                .iter()
                .map(|s| {
                    json!({
                        "rendered": s.rendered,
                        "segment": s.segment,
                        "time_ms": s.time_ms,
                    })
                })
                .collect();
            let blocks: Vec<serde_json::Value> = table
                .blocks
                .iter()
                .map(|b| {
                    json!({
                        "base_id": b.base_id,
                        "entry_count": b.entry_count,
                        "first_entry": b.first_entry,
                        "max_id": b.max_id,
                        "segments": [b.segments.0, b.segments.1],
                    })
                })
                .collect();
            json_bytes(&json!({
                "blocks": blocks,
                "command": "positions",
                "config_echo": mrope_echo(&manifest, &ts, &framing),
                "entries": entries,
                "entry_count": table.entries.len(),
                "next_position_id": table.max_position_id().map_or(0, |m| m + 1),
                "stamps": stamps,
            }))
        }
        OutputFormat::Csv => {
            let mut rows = vec![vec![
                "kind".to_string(),
                "segment".to_string(),
                "token".to_string(),
                "tid".to_string(),
                "hid".to_string(),
                "wid".to_string(),
            ]];
            for e in &table.entries {
                rows.push(vec![
                    e.kind.name().to_string(),
                    e.segment.to_string(),
                    e.token.to_string(),
                    e.pos.tid.to_string(),
                    e.pos.hid.to_string(),
                    e.pos.wid.to_string(),
                ]);
            }
            csv_table(&rows)
        }
    })
}

fn run_budget(args: InputArgs) -> Result<Vec<u8>, CliError> {
    let mut set = OverrideSet::parse(&args.common.set)?;
    let (ts, framing) = mrope_config(&mut set, args.common.seed)?;
    let tokens_per_video_frame = set
        .take_u64("tokens_per_video_frame")?
        .unwrap_or(DEFAULT_TOKENS_PER_VIDEO_FRAME);
    set.finish()?;

    let manifest = parse_manifest(&read_input_file(&args.input)?)?;
    let report = mrope::context_budget(&manifest, &ts, &framing, tokens_per_video_frame)
        .map_err(mrope_to_cli)?;

    Ok(match args.common.format {
        OutputFormat::Text => {
            let mut out = String::new();
            for (i, tokens) in report.per_segment_tokens.iter().enumerate() {
                out.push_str(&format!(
                    "segment {i} {} {tokens}\n",
                    manifest.segments[i].kind_name()
                ));
            }
            out.push_str(&format!("timestamps {}\n", report.timestamp_tokens));
            out.push_str(&format!("total {}\n", report.total));
            out.push_str(&format!("limit {}\n", report.limit));
            out.push_str(&format!("fits {}\n", report.fits));
            out.into_bytes()
        }
        OutputFormat::Json => {
            let mut echo = mrope_echo(&manifest, &ts, &framing);
            let echo_map = echo.as_object_mut().expect("echo object");
            echo_map.insert("context_limit".into(), json!(manifest.context_limit));
            echo_map.insert(
                "tokens_per_video_frame".into(),
                json!(tokens_per_video_frame),
            );
            json_bytes(&json!({
                "command": "budget",
                "config_echo": echo,
                "report": {
                    "fits": report.fits,
                    "limit": report.limit,
                    "per_segment_tokens": report.per_segment_tokens,
                    "timestamp_tokens": report.timestamp_tokens,
                    "total": report.total,
                },
            }))
        }
        OutputFormat::Csv => {
            let mut rows = vec![vec!["field".to_string(), "value".to_string()]];
            for (i, tokens) in report.per_segment_tokens.iter().enumerate() {
                rows.push(vec![format!("segment[{i}]"), tokens.to_string()]);
            }
            rows.push(vec!["timestamp_tokens".into(), report.timestamp_tokens.to_string()]);
            rows.push(vec!["total".into(), report.total.to_string()]);
            rows.push(vec!["limit".into(), report.limit.to_string()]);
            rows.push(vec!["fits".into(), report.fits.to_string()]);
            csv_table(&rows)
        }
    })
}

// ------------------------------------------------------- simulate / sweep

fn apply_stage_overrides(set: &mut OverrideSet, stages: &mut StageModel) -> Result<(), CliError> {
    if let Some(v) = set.take_f64("stages.encoder_chunk_ms")? {
        stages.encoder_chunk_ms = v;
    }
    if let Some(v) = set.take_f64("stages.prefill_chunk_seconds")? {
        stages.prefill_chunk_seconds = v;
    }
    if let Some(v) = set.take_f64("stages.codec_lo_ms")? {
        stages.codec_decode_ms.0 = v;
    }
    if let Some(v) = set.take_f64("stages.codec_hi_ms")? {
        stages.codec_decode_ms.1 = v;
    }
    if let Some(v) = set.take_bool("stages.codec_sample")? {
        stages.codec_sample = v;
    }
    Ok(())
}

fn apply_scenario_overrides(set: &mut OverrideSet, scenario: &mut Scenario) -> Result<(), CliError> {
    if let Some(v) = set.take_u64("scenario.text_len")? {
        scenario.text_len = v;
    }
    if let Some(raw) = set.take_string("scenario.ratio") {
        scenario.aria_ratio = raw.parse().map_err(|_| {
            CliError::usage(format!("--set scenario.ratio={raw}: expected \"num/den\""))
        })?;
    }
    if let Some(v) = set.take_u32("scenario.concurrency")? {
        scenario.concurrency = v;
    }
    if let Some(v) = set.take_u32("scenario.chunk_frames")? {
        scenario.layout.chunk_frames = v;
    }
    if let Some(raw) = set.take_string("scenario.input_mode") {
        scenario.input_mode = scenario_json::parse_input_mode(&raw).ok_or_else(|| {
            CliError::usage(format!(
                "--set scenario.input_mode={raw}: expected PRELOADED or REAL_TIME_STREAM"
            ))
        })?;
    }
    Ok(())
}

fn stage_echo(stages: &StageModel) -> serde_json::Value {
    json!({
        "codec_decode_ms": [stages.codec_decode_ms.0, stages.codec_decode_ms.1],
        "codec_sample": stages.codec_sample,
        "encoder_chunk_ms": stages.encoder_chunk_ms,
        "prefill_chunk_seconds": stages.prefill_chunk_seconds,
    })
}

fn sim_echo(scenario: &Scenario, stages: &StageModel) -> serde_json::Value {
    let mut echo = stage_echo(stages);
    let map = echo.as_object_mut().expect("echo object");
    let zero = StageLatencies {
        thinker_ttft_ms: 0.0,
        thinker_tpop_ms: 0.0,
        talker_tpop_ms: 0.0,
    };
    let lat = stages.levels.get(&scenario.concurrency).unwrap_or(&zero);
    map.insert("chunk_frames".into(), json!(scenario.layout.chunk_frames));
    map.insert("codebook_size".into(), json!(scenario.layout.codebook_size));
    map.insert("concurrency".into(), json!(scenario.concurrency));
    map.insert("frame_rate_hz".into(), json!(scenario.layout.frame_rate_hz));
    map.insert("input_mode".into(), json!(input_mode_name(scenario.input_mode)));
    map.insert("num_codebooks".into(), json!(scenario.layout.num_codebooks));
    map.insert("ratio".into(), json!(scenario.aria_ratio.to_string()));
    map.insert("seed".into(), json!(scenario.seed));
    map.insert("text_len".into(), json!(scenario.text_len));
    map.insert("thinker_ttft_ms".into(), json!(lat.thinker_ttft_ms));
    map.insert("thinker_tpop_ms".into(), json!(lat.thinker_tpop_ms));
    map.insert("talker_tpop_ms".into(), json!(lat.talker_tpop_ms));
    echo
}

const METRIC_NAMES: [&str; 8] = [
    "ttft_ms",
    "ttfc_ms",
    "first_packet_ms",
    "thinker_tpop_ms",
    "talker_tpop_ms",
    "thinker_tps",
    "talker_tps",
    "generation_rtf",
];

fn metric_values(report: &ScenarioReport) -> [String; 8] {
    [
        fmt_ms(report.ttft_ms),
        fmt_ms(report.ttfc_ms),
        fmt_ms(report.first_packet_ms),
        fmt_ms(report.thinker_tpop_ms),
        fmt_ms(report.talker_tpop_ms),
        fmt_ms(report.thinker_tps),
        fmt_ms(report.talker_tps),
        fmt_rtf(report.generation_rtf),
    ]
}

fn run_simulate(args: InputArgs) -> Result<Vec<u8>, CliError> {
    let mut set = OverrideSet::parse(&args.common.set)?;
    let trace_path = set.take_string("trace");

    let input = load_simulate_input(&args.input)?;
    let label = input.scenario.label;
    let mut scenario = input.scenario.scenario;
    let mut stages = input.stages;
    if let Some(seed) = args.common.seed {
        scenario.seed = seed;
    }
    apply_scenario_overrides(&mut set, &mut scenario)?;
    apply_stage_overrides(&mut set, &mut stages)?;
    set.finish()?;

    let (trace, report) = simulate(&scenario, &stages).map_err(sim_to_cli)?;
    if let Some(path) = trace_path {
        std::fs::write(&path, trace.render_lines())
            .map_err(|e| CliError::new(ErrorKind::Io, format!("cannot write {path}: {e}")))?;
    }

    Ok(match args.common.format {
        OutputFormat::Text => {
            let mut out = String::new();
            for (name, value) in METRIC_NAMES.iter().zip(metric_values(&report)) {
                out.push_str(&format!("{name} {value}\n"));
            }
            out.push_str(&format!("note {TTFC_NOTE}\n"));
            out.into_bytes()
        }
        OutputFormat::Json => json_bytes(&json!({
            "command": "simulate",
            "config_echo": sim_echo(&scenario, &stages),
            "label": label,
            "notes": [TTFC_NOTE],
            "report": serde_json::to_value(report).expect("report value"),
        })),
        OutputFormat::Csv => {
            let mut header = vec![
                "label".to_string(),
                "concurrency".to_string(),
                "input_mode".to_string(),
                "ratio".to_string(),
                "text_len".to_string(),
                "seed".to_string(),
            ];
            header.extend(METRIC_NAMES.iter().map(|s| s.to_string()));
            let mut row = vec![
                label.unwrap_or_default(),
                scenario.concurrency.to_string(),
                input_mode_name(scenario.input_mode).to_string(),
                scenario.aria_ratio.to_string(),
                scenario.text_len.to_string(),
                scenario.seed.to_string(),
            ];
            row.extend(metric_values(&report));
            csv_table(&[header, row])
        }
    })
}

/// Rows land in index order regardless of worker scheduling.
fn run_rows(
    scenarios: &[LoadedScenario],
    stages: &StageModel,
    workers: usize,
) -> Vec<Result<ScenarioReport, SimError>> {
    if workers <= 1 || scenarios.len() <= 1 {
        return scenarios
            .iter()
            .map(|s| simulate(&s.scenario, stages).map(|(_, r)| r))
            .collect();
    }
    let mut results: Vec<Option<Result<ScenarioReport, SimError>>> = vec![None; scenarios.len()];
    let chunk = scenarios.len().div_ceil(workers);
    std::thread::scope(|scope| {
        for (slots, rows) in results.chunks_mut(chunk).zip(scenarios.chunks(chunk)) {
            scope.spawn(move || {
                for (slot, row) in slots.iter_mut().zip(rows) {
                    *slot = Some(simulate(&row.scenario, stages).map(|(_, r)| r));
                }
            });
        }
    });
    results.into_iter().map(|r| r.expect("row filled")).collect()
}

fn run_sweep(args: InputArgs) -> Result<Vec<u8>, CliError> {
    let mut set = OverrideSet::parse(&args.common.set)?;
    let workers = set.take_usize("workers")?.unwrap_or(1).max(1);

    let mut input = load_sweep_input(&args.input)?;
    if let Some(seed) = args.common.seed {
        for row in &mut input.scenarios {
            row.scenario.seed = seed;
        }
    }
    apply_stage_overrides(&mut set, &mut input.stages)?;
    set.finish()?;

    let results = run_rows(&input.scenarios, &input.stages, workers);

    // All-or-nothing: a failed row turns the whole sweep into a domain
    // error listing every failure by row.
    let failures: Vec<(String, String)> = results
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().err().map(|e| (i, e)))
        .map(|(i, e)| {
            let label = input.scenarios[i]
                .label
                .as_deref()
                .map(|l| format!(" ({l})"))
                .unwrap_or_default();
            (format!("scenarios[{i}]{label}"), e.to_string())
        })
        .collect();
    if !failures.is_empty() {
        let mut err = CliError::new(
            ErrorKind::Domain,
            format!("{} of {} scenarios failed", failures.len(), results.len()),
        );
        err.violations = failures;
        return Err(err);
    }
    let reports: Vec<ScenarioReport> = results.into_iter().map(|r| r.expect("no failures")).collect();

    Ok(match args.common.format {
        OutputFormat::Text => {
            let mut out = String::from(
                "label concurrency input_mode ratio text_len seed \
                 ttft_ms ttfc_ms first_packet_ms thinker_tpop_ms talker_tpop_ms \
                 thinker_tps talker_tps generation_rtf\n",
            );
            for (row, report) in input.scenarios.iter().zip(&reports) {
                let s = &row.scenario;
                out.push_str(&format!(
                    "{} {} {} {} {} {} {}\n",
                    row.label.as_deref().unwrap_or("-"),
                    s.concurrency,
                    input_mode_name(s.input_mode),
                    s.aria_ratio,
                    s.text_len,
                    s.seed,
                    metric_values(report).join(" "),
                ));
            }
            out.into_bytes()
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = input
                .scenarios
                .iter()
                .zip(&reports)
                .map(|(row, report)| {
                    let s = &row.scenario;
                    json!({
                        "label": row.label,
                        "report": serde_json::to_value(report).expect("report value"),
                        "scenario": {
                            "concurrency": s.concurrency,
                            "input_mode": input_mode_name(s.input_mode),
                            "ratio": s.aria_ratio.to_string(),
                            "seed": s.seed,
                            "text_len": s.text_len,
                        },
                    })
                })
                .collect();
            let mut echo = stage_echo(&input.stages);
            let map = echo.as_object_mut().expect("echo object");
            map.insert(
                "levels".into(),
                serde_json::to_value(&input.stages.levels).expect("levels value"),
            );
            map.insert("workers".into(), json!(workers));
            json_bytes(&json!({
                "command": "sweep",
                "config_echo": echo,
                "rows": rows,
            }))
        }
        OutputFormat::Csv => {
            let mut header = vec![
                "label".to_string(),
                "concurrency".to_string(),
                "input_mode".to_string(),
                "ratio".to_string(),
                "text_len".to_string(),
                "seed".to_string(),
            ];
            header.extend(METRIC_NAMES.iter().map(|s| s.to_string()));
            let mut rows = vec![header];
            for (row, report) in input.scenarios.iter().zip(&reports) {
                let s = &row.scenario;
                let mut r = vec![
                    row.label.clone().unwrap_or_default(),
                    s.concurrency.to_string(),
                    input_mode_name(s.input_mode).to_string(),
                    s.aria_ratio.to_string(),
                    s.text_len.to_string(),
                    s.seed.to_string(),
                ];
                r.extend(metric_values(report));
                rows.push(r);
            }
            csv_table(&rows)
        }
    })
}
