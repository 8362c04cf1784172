//! Streaming text/speech pipeline toolkit.
//!
//! Four subsystems share the domain types in [`model`]:
//!
//! - [`aria`] plans and validates interleaved text/speech emission schedules
//!   under a prefix ratio constraint.
//! - [`mrope`] assigns (temporal, height, width) position IDs over multimodal
//!   inputs, inserts timestamp pseudo-tokens, and audits context budgets.
//! - [`codec`] assembles multi-codebook speech frames and groups them into
//!   causal chunks for a streaming waveform renderer.
//! - [`sim`] is a deterministic discrete-event latency simulator for the
//!   encoder → text decoder → gated speech decoder → codec pipeline, with
//!   [`dag`] providing an independent critical-path computation over the
//!   same event structure.
//!
//! Everything is deterministic: ratios are exact rationals, time is integer
//! microseconds, and all randomness flows from explicit seeds.

pub mod aria;
pub mod codec;
pub mod dag;
pub mod model;
pub mod mrope;
pub mod sim;
