//! Adaptive-rate interleave planning.
//!
//! An interleaved text/speech stream is admissible when every prefix with
//! counts (t, s) satisfies `s * R.den <= R.num * t` for the item-level ratio
//! R. The multiplicative form makes t = 0 well defined: no speech may lead.
//!
//! The planner here is eager: each speech slot is placed at the earliest
//! index the constraint admits, which minimizes speech latency. The checker
//! accepts any compliant schedule, so other policies stay pluggable.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{PrefixCount, Rational, StreamSymbol};

/// Emission totals plus the governing ratio for one request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AriaBudget {
    text_total: u64,
    speech_total: u64,
    ratio: Rational,
}

impl AriaBudget {
    /// Budget whose ratio is exactly `speech_total / text_total`.
    ///
    /// The resulting plans are terminally tight: the final prefix satisfies
    /// the constraint with equality.
    pub fn from_totals(text_total: u64, speech_total: u64) -> Result<Self, AriaError> {
        if speech_total >= 1 && text_total == 0 {
            return Err(AriaError::InfeasibleRatio {
                text_total,
                speech_total,
                ratio: None,
            });
        }
        let ratio = if speech_total == 0 {
            Rational::zero()
        } else {
            Rational::new(speech_total, text_total).expect("text_total checked nonzero")
        };
        Ok(AriaBudget {
            text_total,
            speech_total,
            ratio,
        })
    }

    /// Budget with an externally supplied ratio.
    ///
    /// Completing the plan requires the terminal prefix (T, S) itself to be
    /// admissible, so `speech_total * den <= num * text_total` is enforced
    /// here rather than surfacing as a stuck planner later.
    pub fn with_ratio(
        text_total: u64,
        speech_total: u64,
        ratio: Rational,
    ) -> Result<Self, AriaError> {
        let lhs = speech_total as u128 * ratio.den() as u128;
        let rhs = ratio.num() as u128 * text_total as u128;
        if lhs > rhs {
            return Err(AriaError::InfeasibleRatio {
                text_total,
                speech_total,
                ratio: Some(ratio),
            });
        }
        Ok(AriaBudget {
            text_total,
            speech_total,
            ratio,
        })
    }

    pub fn text_total(&self) -> u64 {
        self.text_total
    }

    pub fn speech_total(&self) -> u64 {
        self.speech_total
    }

    pub fn ratio(&self) -> Rational {
        self.ratio
    }

    /// Whether the prefix (t, s) satisfies `s * den <= num * t`.
    pub fn admits(&self, prefix: PrefixCount) -> bool {
        prefix_admissible(prefix, self.ratio)
    }
}

/// `s * den <= num * t`, evaluated exactly.
pub fn prefix_admissible(prefix: PrefixCount, ratio: Rational) -> bool {
    (prefix.speech_emitted as u128) * (ratio.den() as u128)
        <= (ratio.num() as u128) * (prefix.text_emitted as u128)
}

/// An ordered emission schedule. `slots` may be a full plan or the remainder
/// returned by [`resume`]; `budget` is always the request-level budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterleavePlan {
    pub slots: Vec<StreamSymbol>,
    pub budget: AriaBudget,
}

impl InterleavePlan {
    pub fn text_count(&self) -> u64 {
        self.slots
            .iter()
            .filter(|s| matches!(s, StreamSymbol::Text))
            .count() as u64
    }

    pub fn speech_count(&self) -> u64 {
        self.slots
            .iter()
            .filter(|s| matches!(s, StreamSymbol::Speech))
            .count() as u64
    }
}

impl fmt::Display for InterleavePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.slots {
            write!(f, "{}", s.letter())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("plan symbol {found:?} at offset {offset} is not 'T' or 'S'")]
pub struct PlanParseError {
    pub offset: usize,
    pub found: char,
}

/// Parses the compact form, e.g. "TSSTSS".
pub fn parse_slots(s: &str) -> Result<Vec<StreamSymbol>, PlanParseError> {
    s.chars()
        .enumerate()
        .map(|(offset, c)| match c {
            'T' => Ok(StreamSymbol::Text),
            'S' => Ok(StreamSymbol::Speech),
            found => Err(PlanParseError { offset, found }),
        })
        .collect()
}

impl FromStr for InterleavePlan {
    type Err = PlanParseError;

    /// Parses slots and derives the budget from their totals.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let slots = parse_slots(s)?;
        let text = slots.iter().filter(|x| matches!(x, StreamSymbol::Text)).count() as u64;
        let speech = slots.len() as u64 - text;
        // A parsed plan with speech but no text is representable; give it the
        // all-admitting ratio so the budget constructor cannot reject it. The
        // checker still reports the violation.
        let budget = AriaBudget::from_totals(text, speech).unwrap_or(AriaBudget {
            text_total: text,
            speech_total: speech,
            ratio: Rational::new(u64::MAX, 1).expect("den 1"),
        });
        Ok(InterleavePlan { slots, budget })
    }
}

/// First prefix at which a plan breaks the ratio constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintViolation {
    /// Index of the violating slot.
    pub index: usize,
    /// Counts including the violating slot.
    pub prefix: PrefixCount,
}

/// Outcome of [`check_plan`]. Count mismatch is distinct from a ratio
/// violation: the prefix constraint can hold throughout an incomplete plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanCheck {
    Ok,
    PrefixViolation(ConstraintViolation),
    CountMismatch {
        text_found: u64,
        speech_found: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AriaError {
    #[error("ratio {} cannot license {speech_total} speech slots against {text_total} text slots",
            .ratio.map(|r| r.to_string()).unwrap_or_else(|| "S/T".into()))]
    InfeasibleRatio {
        text_total: u64,
        speech_total: u64,
        /// None when the ratio itself was underivable (speech with zero text).
        ratio: Option<Rational>,
    },
    #[error("prefix (t={}, s={}) violates the constraint or exceeds the budget",
            .prefix.text_emitted, .prefix.speech_emitted)]
    InvalidPrefix { prefix: PrefixCount },
    #[error("ratio numerator is zero; no text prefix ever licenses speech")]
    ZeroRatio,
}

/// Complete eager plan for the budget: every speech slot at its earliest
/// admissible index.
///
/// Infeasible totals are rejected by the [`AriaBudget`] constructors, so the
/// loop below always terminates with both totals exhausted.
pub fn plan_eager(budget: &AriaBudget) -> InterleavePlan {
    let remainder = eager_slots(budget, PrefixCount::default());
    InterleavePlan {
        slots: remainder,
        budget: *budget,
    }
}

/// Eager continuation after an already-emitted prefix. Returns the remaining
/// slots only; prefix + remainder is a complete valid plan.
pub fn resume(budget: &AriaBudget, prefix: PrefixCount) -> Result<InterleavePlan, AriaError> {
    let exceeds =
        prefix.text_emitted > budget.text_total || prefix.speech_emitted > budget.speech_total;
    if exceeds || !budget.admits(prefix) {
        return Err(AriaError::InvalidPrefix { prefix });
    }
    Ok(InterleavePlan {
        slots: eager_slots(budget, prefix),
        budget: *budget,
    })
}

fn eager_slots(budget: &AriaBudget, start: PrefixCount) -> Vec<StreamSymbol> {
    let (mut t, mut s) = (start.text_emitted, start.speech_emitted);
    let ratio = budget.ratio;
    let mut slots =
        Vec::with_capacity(((budget.text_total - t) + (budget.speech_total - s)) as usize);
    while t < budget.text_total || s < budget.speech_total {
        let speech_ok = s < budget.speech_total
            && prefix_admissible(PrefixCount::new(t, s + 1), ratio);
        if speech_ok {
            slots.push(StreamSymbol::Speech);
            s += 1;
        } else {
            // Text must remain: were it exhausted, the pending speech would
            // contradict the budget feasibility check.
            debug_assert!(t < budget.text_total);
            slots.push(StreamSymbol::Text);
            t += 1;
        }
    }
    slots
}

/// Scans left to right; reports the first ratio violation, then any
/// total-count mismatch.
pub fn check_plan(slots: &[StreamSymbol], budget: &AriaBudget) -> PlanCheck {
    let mut counts = PrefixCount::default();
    for (index, slot) in slots.iter().enumerate() {
        match slot {
            StreamSymbol::Text => counts.text_emitted += 1,
            StreamSymbol::Speech => counts.speech_emitted += 1,
        }
        if !budget.admits(counts) {
            return PlanCheck::PrefixViolation(ConstraintViolation {
                index,
                prefix: counts,
            });
        }
    }
    if counts.text_emitted != budget.text_total || counts.speech_emitted != budget.speech_total {
        return PlanCheck::CountMismatch {
            text_found: counts.text_emitted,
            speech_found: counts.speech_emitted,
        };
    }
    PlanCheck::Ok
}

/// Minimal text count t licensing the first speech slot: smallest t with
/// `1 * den <= num * t`, i.e. ceil(den / num).
pub fn first_speech_text_need(ratio: Rational) -> Result<u64, AriaError> {
    if ratio.num() == 0 {
        return Err(AriaError::ZeroRatio);
    }
    Ok(ratio.den().div_ceil(ratio.num()))
}

/// Slot-by-slot eager planner for open-ended streams where totals are
/// unknown and only the ratio is fixed. Single-owner state.
#[derive(Debug, Clone)]
pub struct IncrementalPlanner {
    ratio: Rational,
    emitted: PrefixCount,
}

impl IncrementalPlanner {
    pub fn new(ratio: Rational) -> Self {
        IncrementalPlanner {
            ratio,
            emitted: PrefixCount::default(),
        }
    }

    pub fn counts(&self) -> PrefixCount {
        self.emitted
    }

    /// Whether one more speech slot would keep the prefix admissible.
    pub fn speech_feasible(&self) -> bool {
        let next = PrefixCount::new(self.emitted.text_emitted, self.emitted.speech_emitted + 1);
        prefix_admissible(next, self.ratio)
    }

    /// Emits the next symbol under the eager policy: speech whenever it is
    /// admissible, text otherwise.
    pub fn next_symbol(&mut self) -> StreamSymbol {
        if self.speech_feasible() {
            self.emitted.speech_emitted += 1;
            StreamSymbol::Speech
        } else {
            self.emitted.text_emitted += 1;
            StreamSymbol::Text
        }
    }

    /// Records an externally chosen symbol, rejecting inadmissible speech.
    pub fn record(&mut self, symbol: StreamSymbol) -> Result<(), AriaError> {
        match symbol {
            StreamSymbol::Text => {
                self.emitted.text_emitted += 1;
                Ok(())
            }
            StreamSymbol::Speech => {
                if !self.speech_feasible() {
                    return Err(AriaError::InvalidPrefix {
                        prefix: PrefixCount::new(
                            self.emitted.text_emitted,
                            self.emitted.speech_emitted + 1,
                        ),
                    });
                }
                self.emitted.speech_emitted += 1;
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan_str(t: u64, s: u64) -> String {
        plan_eager(&AriaBudget::from_totals(t, s).unwrap()).to_string()
    }

    #[test]
    fn eager_no_speech() {
        assert_eq!(plan_str(1, 0), "T");
    }

    #[test]
    fn eager_two_text_four_speech() {
        // R = 4/2 = 2/1.
        assert_eq!(plan_str(2, 4), "TSSTSS");
    }

    #[test]
    fn eager_ratio_below_one() {
        let budget =
            AriaBudget::with_ratio(3, 2, Rational::new(2, 3).unwrap()).unwrap();
        assert_eq!(plan_eager(&budget).to_string(), "TTSTS");
    }

    #[test]
    fn totals_reject_speech_without_text() {
        assert!(matches!(
            AriaBudget::from_totals(0, 3),
            Err(AriaError::InfeasibleRatio { .. })
        ));
    }

    #[test]
    fn with_ratio_rejects_overfull_budget() {
        // 5 speech against 2 text can never satisfy R = 2/1 terminally.
        let r = Rational::new(2, 1).unwrap();
        assert!(matches!(
            AriaBudget::with_ratio(2, 5, r),
            Err(AriaError::InfeasibleRatio { .. })
        ));
    }

    #[test]
    fn resume_after_all_text() {
        let budget = AriaBudget::from_totals(2, 4).unwrap();
        let rest = resume(&budget, PrefixCount::new(2, 0)).unwrap();
        assert_eq!(rest.to_string(), "SSSS");
    }

    #[test]
    fn resume_empty_prefix_matches_plan_eager() {
        let budget =
            AriaBudget::with_ratio(3, 2, Rational::new(2, 3).unwrap()).unwrap();
        let rest = resume(&budget, PrefixCount::default()).unwrap();
        assert_eq!(rest.slots, plan_eager(&budget).slots);
    }

    #[test]
    fn resume_rejects_leading_speech() {
        let budget = AriaBudget::from_totals(2, 4).unwrap();
        assert!(matches!(
            resume(&budget, PrefixCount::new(0, 1)),
            Err(AriaError::InvalidPrefix { .. })
        ));
    }

    #[test]
    fn resume_rejects_overrun() {
        let budget = AriaBudget::from_totals(2, 4).unwrap();
        assert!(matches!(
            resume(&budget, PrefixCount::new(3, 0)),
            Err(AriaError::InvalidPrefix { .. })
        ));
    }

    #[test]
    fn check_accepts_eager_output() {
        let budget = AriaBudget::from_totals(2, 4).unwrap();
        assert_eq!(check_plan(&plan_eager(&budget).slots, &budget), PlanCheck::Ok);
    }

    #[test]
    fn check_flags_leading_speech() {
        let budget = AriaBudget::from_totals(1, 1).unwrap();
        let slots = parse_slots("ST").unwrap();
        assert_eq!(
            check_plan(&slots, &budget),
            PlanCheck::PrefixViolation(ConstraintViolation {
                index: 0,
                prefix: PrefixCount::new(0, 1),
            })
        );
    }

    #[test]
    fn check_accepts_text_block_then_speech_block() {
        for (t, s) in [(1u64, 0u64), (3, 3), (5, 2), (2, 4)] {
            let budget = AriaBudget::from_totals(t, s).unwrap();
            let mut slots = vec![StreamSymbol::Text; t as usize];
            slots.extend(vec![StreamSymbol::Speech; s as usize]);
            assert_eq!(check_plan(&slots, &budget), PlanCheck::Ok);
        }
    }

    #[test]
    fn check_flags_count_mismatch() {
        let budget = AriaBudget::from_totals(2, 4).unwrap();
        let slots = parse_slots("TS").unwrap();
        assert_eq!(
            check_plan(&slots, &budget),
            PlanCheck::CountMismatch {
                text_found: 1,
                speech_found: 1,
            }
        );
    }

    #[test]
    fn terminal_tightness_from_totals() {
        for (t, s) in [(2u64, 4u64), (3, 2), (7, 7), (5, 1)] {
            let budget = AriaBudget::from_totals(t, s).unwrap();
            let r = budget.ratio();
            assert_eq!(s as u128 * r.den() as u128, r.num() as u128 * t as u128);
        }
    }

    #[test]
    fn first_need_examples() {
        assert_eq!(first_speech_text_need(Rational::new(2, 1).unwrap()).unwrap(), 1);
        assert_eq!(first_speech_text_need(Rational::new(2, 3).unwrap()).unwrap(), 2);
        assert_eq!(first_speech_text_need(Rational::new(1, 1).unwrap()).unwrap(), 1);
        assert!(matches!(
            first_speech_text_need(Rational::zero()),
            Err(AriaError::ZeroRatio)
        ));
    }

    #[test]
    fn incremental_matches_ratio_long_run() {
        let mut p = IncrementalPlanner::new(Rational::new(2, 1).unwrap());
        let emitted: String = (0..12).map(|_| p.next_symbol().letter()).collect();
        assert_eq!(emitted, "TSSTSSTSSTSS");
    }

    #[test]
    fn incremental_record_rejects_bad_speech() {
        let mut p = IncrementalPlanner::new(Rational::new(1, 1).unwrap());
        assert!(p.record(StreamSymbol::Speech).is_err());
        p.record(StreamSymbol::Text).unwrap();
        assert!(p.record(StreamSymbol::Speech).is_ok());
    }

    #[test]
    fn plan_round_trips_through_compact_form() {
        let budget = AriaBudget::from_totals(2, 4).unwrap();
        let plan = plan_eager(&budget);
        let parsed: InterleavePlan = plan.to_string().parse().unwrap();
        assert_eq!(parsed.slots, plan.slots);
    }
}
