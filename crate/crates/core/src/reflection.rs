//! Generate, score, refine; accept on threshold or hand over at the horizon.
//!
//! The loop is shared by layout repair, camera servoing and the commit
//! gatekeeper. A policy supplies the four operators; the engine owns the
//! control flow and the trace.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Score that a passing binary engine verdict maps to.
pub const VERDICT_PASS_SCORE: f64 = 10.0;
/// Score that a failing binary engine verdict maps to.
pub const VERDICT_FAIL_SCORE: f64 = 0.0;

pub fn verdict_score(passed: bool) -> f64 {
    if passed {
        VERDICT_PASS_SCORE
    } else {
        VERDICT_FAIL_SCORE
    }
}

/// What happens when the horizon is reached without acceptance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExhaustionMode {
    /// Delegate to the policy's fallback operator.
    Handover,
    /// Return the best-scoring output seen so far without calling the fallback.
    BestSoFar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionConfig {
    pub threshold: f64,
    pub horizon: usize,
    pub on_exhaustion: ExhaustionMode,
}

impl Default for ReflectionConfig {
    fn default() -> Self {
        Self { threshold: 8.0, horizon: 5, on_exhaustion: ExhaustionMode::Handover }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feedback<C> {
    pub score: f64,
    pub critique: C,
}

impl<C> Feedback<C> {
    pub fn new(score: f64, critique: C) -> Self {
        Self { score, critique }
    }
}

/// Operators for one agent. The engine calls `generate` once, `score` once per
/// candidate, `refine` once per turn and `fallback` at most once.
pub trait ReflectionPolicy {
    type Context: ?Sized;
    type Output: Clone;
    type Critique: Clone;
    type Error: std::fmt::Display;

    fn generate(&mut self, ctx: &Self::Context) -> Result<Self::Output, Self::Error>;

    fn score(
        &mut self,
        output: &Self::Output,
        ctx: &Self::Context,
    ) -> Result<Feedback<Self::Critique>, Self::Error>;

    fn refine(
        &mut self,
        output: &Self::Output,
        feedback: &Feedback<Self::Critique>,
        ctx: &Self::Context,
    ) -> Result<Self::Output, Self::Error>;

    fn fallback(&mut self, ctx: &Self::Context) -> Result<Self::Output, Self::Error>;

    /// Short stable fingerprint of an output for the trace.
    fn digest(&self, output: &Self::Output) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectionStatus {
    Accepted,
    Handover,
    BudgetExhaustedBest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry<C> {
    pub turn: usize,
    pub digest: String,
    pub score: f64,
    pub critique: C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionOutcome<O, C> {
    pub result: O,
    pub status: ReflectionStatus,
    pub turns_used: usize,
    pub trace: Vec<TraceEntry<C>>,
}

impl<O, C> ReflectionOutcome<O, C> {
    pub fn final_score(&self) -> Option<f64> {
        self.trace.last().map(|t| t.score)
    }

    pub fn scores(&self) -> Vec<f64> {
        self.trace.iter().map(|t| t.score).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyStage {
    Generate,
    Score,
    Refine,
    Fallback,
}

#[derive(Debug, Error)]
#[error("policy failed during {stage:?} at turn {turn}: {message}")]
pub struct PolicyError<C> {
    pub stage: PolicyStage,
    pub turn: usize,
    pub message: String,
    /// Entries recorded before the failure.
    pub trace: Vec<TraceEntry<C>>,
}

/// Runs the reflection loop to completion.
pub fn run_reflection<P: ReflectionPolicy>(
    policy: &mut P,
    ctx: &P::Context,
    config: &ReflectionConfig,
) -> Result<ReflectionOutcome<P::Output, P::Critique>, PolicyError<P::Critique>> {
    let mut trace: Vec<TraceEntry<P::Critique>> = Vec::new();
    let fail = |stage, turn, e: P::Error, trace: &Vec<TraceEntry<P::Critique>>| PolicyError {
        stage,
        turn,
        message: e.to_string(),
        trace: trace.clone(),
    };

    let mut current = policy.generate(ctx).map_err(|e| fail(PolicyStage::Generate, 0, e, &trace))?;
    let mut best: Option<(f64, P::Output)> = None;
    let mut turn = 0usize;
    loop {
        let feedback = policy
            .score(&current, ctx)
            .map_err(|e| fail(PolicyStage::Score, turn, e, &trace))?;
        trace.push(TraceEntry {
            turn,
            digest: policy.digest(&current),
            score: feedback.score,
            critique: feedback.critique.clone(),
        });
        if best.as_ref().is_none_or(|(s, _)| feedback.score > *s) {
            best = Some((feedback.score, current.clone()));
        }

        if feedback.score >= config.threshold {
            return Ok(ReflectionOutcome {
                result: current,
                status: ReflectionStatus::Accepted,
                turns_used: turn,
                trace,
            });
        }
        if turn < config.horizon {
            current = policy
                .refine(&current, &feedback, ctx)
                .map_err(|e| fail(PolicyStage::Refine, turn, e, &trace))?;
            turn += 1;
            continue;
        }

        return match config.on_exhaustion {
            ExhaustionMode::Handover => {
                let result =
                    policy.fallback(ctx).map_err(|e| fail(PolicyStage::Fallback, turn, e, &trace))?;
                Ok(ReflectionOutcome { result, status: ReflectionStatus::Handover, turns_used: turn, trace })
            }
            ExhaustionMode::BestSoFar => {
                let (_, result) = best.expect("at least one candidate was scored");
                Ok(ReflectionOutcome {
                    result,
                    status: ReflectionStatus::BudgetExhaustedBest,
                    turns_used: turn,
                    trace,
                })
            }
        };
    }
}

/// SHA-256 of a value's canonical JSON, truncated to 16 hex chars.
pub fn json_digest<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).unwrap_or_default();
    let full = hex::encode(Sha256::digest(&bytes));
    full[..16].to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Outputs are turn numbers; scores come from a script.
    struct Scripted {
        scores: Vec<f64>,
        calls: Calls,
        fail_refine_at: Option<usize>,
    }

    #[derive(Default, Debug, PartialEq)]
    struct Calls {
        generate: usize,
        score: usize,
        refine: usize,
        fallback: usize,
    }

    impl Scripted {
        fn new(scores: &[f64]) -> Self {
            Self { scores: scores.to_vec(), calls: Calls::default(), fail_refine_at: None }
        }
    }

    impl ReflectionPolicy for Scripted {
        type Context = ();
        type Output = i64;
        type Critique = String;
        type Error = String;

        fn generate(&mut self, _: &()) -> Result<i64, String> {
            self.calls.generate += 1;
            Ok(0)
        }
        fn score(&mut self, o: &i64, _: &()) -> Result<Feedback<String>, String> {
            self.calls.score += 1;
            let i = (*o as usize).min(self.scores.len() - 1);
            Ok(Feedback::new(self.scores[i], format!("turn {o}")))
        }
        fn refine(&mut self, o: &i64, _: &Feedback<String>, _: &()) -> Result<i64, String> {
            self.calls.refine += 1;
            if self.fail_refine_at == Some(*o as usize) {
                return Err("refiner crashed".into());
            }
            Ok(o + 1)
        }
        fn fallback(&mut self, _: &()) -> Result<i64, String> {
            self.calls.fallback += 1;
            Ok(-1)
        }
        fn digest(&self, o: &i64) -> String {
            format!("o{o}")
        }
    }

    #[test]
    fn accepts_first_output() {
        let mut p = Scripted::new(&[9.0]);
        let out = run_reflection(&mut p, &(), &ReflectionConfig::default()).unwrap();
        assert_eq!(out.status, ReflectionStatus::Accepted);
        assert_eq!(out.turns_used, 0);
        assert_eq!(out.result, 0);
        assert_eq!(out.trace.len(), 1);
        assert_eq!(p.calls, Calls { generate: 1, score: 1, refine: 0, fallback: 0 });
    }

    #[test]
    fn refines_until_threshold() {
        let mut p = Scripted::new(&[5.0, 6.0, 8.0]);
        let out = run_reflection(&mut p, &(), &ReflectionConfig::default()).unwrap();
        assert_eq!(out.status, ReflectionStatus::Accepted);
        assert_eq!(out.turns_used, 2);
        assert_eq!(out.result, 2);
        assert_eq!(out.scores(), vec![5.0, 6.0, 8.0]);
        assert_eq!(p.calls.refine, 2);
    }

    #[test]
    fn hands_over_once_at_horizon() {
        let mut p = Scripted::new(&[3.0]);
        let out = run_reflection(&mut p, &(), &ReflectionConfig::default()).unwrap();
        assert_eq!(out.status, ReflectionStatus::Handover);
        assert_eq!(out.turns_used, 5);
        assert_eq!(out.trace.len(), 6);
        assert_eq!(out.result, -1);
        assert_eq!(p.calls, Calls { generate: 1, score: 6, refine: 5, fallback: 1 });
    }

    #[test]
    fn best_so_far_skips_fallback() {
        let mut p = Scripted::new(&[3.0, 7.0, 4.0]);
        let cfg = ReflectionConfig { horizon: 2, on_exhaustion: ExhaustionMode::BestSoFar, ..Default::default() };
        let out = run_reflection(&mut p, &(), &cfg).unwrap();
        assert_eq!(out.status, ReflectionStatus::BudgetExhaustedBest);
        assert_eq!(out.result, 1);
        assert_eq!(p.calls.fallback, 0);
    }

    #[test]
    fn zero_horizon_hands_over_immediately() {
        let mut p = Scripted::new(&[1.0]);
        let cfg = ReflectionConfig { horizon: 0, ..Default::default() };
        let out = run_reflection(&mut p, &(), &cfg).unwrap();
        assert_eq!(out.turns_used, 0);
        assert_eq!(out.status, ReflectionStatus::Handover);
        assert_eq!(p.calls.refine, 0);
    }

    #[test]
    fn policy_error_keeps_trace() {
        let mut p = Scripted::new(&[1.0, 2.0, 3.0]);
        p.fail_refine_at = Some(1);
        let err = run_reflection(&mut p, &(), &ReflectionConfig::default()).unwrap_err();
        assert_eq!(err.stage, PolicyStage::Refine);
        assert_eq!(err.trace.len(), 2);
    }
}
