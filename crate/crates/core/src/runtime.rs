//! Running options inside a walk.

use crate::error::{PodError, Result};
use crate::features::FeatureCodec;
use crate::planner::DiscoveredOption;
use crate::ring::{PrimitiveAction, RingState};
use crate::transitions::DiffDataset;

/// Per-execution step cap, as a multiple of the ring length, for callers
/// that do not bound executions themselves.
pub const SAFETY_CAP_FACTOR: usize = 16;

/// One decision available to the walker. Options are referred to by their
/// position in the option slice passed to [`available_choices`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Primitive(PrimitiveAction),
    Option(usize),
}

/// Both primitives, then every option whose initiation set contains `s`, in
/// option order.
pub fn available_choices(s: RingState, options: &[DiscoveredOption]) -> Vec<Choice> {
    let mut out: Vec<Choice> = PrimitiveAction::ALL.iter().map(|&a| Choice::Primitive(a)).collect();
    out.extend(
        options
            .iter()
            .enumerate()
            .filter(|(_, o)| o.can_initiate(s))
            .map(|(i, _)| Choice::Option(i)),
    );
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Reached the termination set.
    Terminated,
    /// Used up the step budget first.
    BudgetExhausted,
    /// Hit the safety cap before the budget.
    SafetyCap,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OptionRun {
    pub final_state: RingState,
    pub steps_taken: usize,
    pub stop: StopReason,
    /// State after each primitive step.
    pub path: Vec<RingState>,
}

/// Follows the option's policy from `start` until the termination set is
/// reached or `budget` primitive steps have been taken, logging one
/// difference per step.
pub fn execute_option(
    codec: &FeatureCodec,
    option: &DiscoveredOption,
    start: RingState,
    budget: usize,
    log: &mut DiffDataset,
) -> Result<OptionRun> {
    run_bounded(codec, option, start, budget, usize::MAX, log)
}

/// [`execute_option`] with the `16 L` safety cap applied on top of `budget`.
pub fn execute_option_capped(
    codec: &FeatureCodec,
    option: &DiscoveredOption,
    start: RingState,
    budget: usize,
    log: &mut DiffDataset,
) -> Result<OptionRun> {
    let cap = SAFETY_CAP_FACTOR * codec.ring().len();
    run_bounded(codec, option, start, budget, cap, log)
}

fn run_bounded(
    codec: &FeatureCodec,
    option: &DiscoveredOption,
    start: RingState,
    budget: usize,
    cap: usize,
    log: &mut DiffDataset,
) -> Result<OptionRun> {
    let ring = codec.ring();
    ring.check(start)?;
    if option.ring() != ring {
        return Err(PodError::contract("option planned on a different ring"));
    }
    if option.terminates_in(start) {
        return Err(PodError::contract(format!(
            "option {} initiated at {start}, which is in its termination set",
            option.id
        )));
    }

    let limit = budget.min(cap);
    let mut s = start;
    let mut prev_features = codec.encode(s);
    let mut path = Vec::new();
    while !option.terminates_in(s) && path.len() < limit {
        let next = ring.step(s, option.action(s));
        let next_features = codec.encode(next);
        log.record(crate::features::diff(&next_features, &prev_features)?)?;
        path.push(next);
        s = next;
        prev_features = next_features;
    }

    let stop = if option.terminates_in(s) {
        StopReason::Terminated
    } else if path.len() >= budget {
        StopReason::BudgetExhausted
    } else {
        StopReason::SafetyCap
    };
    Ok(OptionRun {
        final_state: s,
        steps_taken: path.len(),
        stop,
        path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ObservabilityMode;
    use crate::planner::{build_option, value_iteration, DEFAULT_EPS_Q};
    use crate::purpose::{Eigenpurpose, Sign};
    use crate::ring::Ring;

    fn codec() -> FeatureCodec {
        FeatureCodec::new(Ring::new(12).unwrap(), ObservabilityMode::Full).unwrap()
    }

    fn bit_option(codec: &FeatureCodec, bit_from_msb: usize, gamma: f64, id: usize) -> DiscoveredOption {
        let dim = codec.dim();
        let e: Vec<f64> = (0..dim).map(|i| if i == bit_from_msb { 1.0 } else { 0.0 }).collect();
        let q = value_iteration(codec, &e, gamma, 100).unwrap();
        let p = Eigenpurpose {
            direction: e,
            singular_value: 1.5,
            sign: Sign::Plus,
            source_phase: 0,
        };
        build_option(q, p, DEFAULT_EPS_Q, id)
    }

    #[test]
    fn choices() {
        let c = codec();
        assert_eq!(
            available_choices(RingState(3), &[]),
            vec![
                Choice::Primitive(PrimitiveAction::Left),
                Choice::Primitive(PrimitiveAction::Right)
            ]
        );
        let lsb = bit_option(&c, 11, 0.0, 0);
        let opts = vec![lsb];
        assert_eq!(available_choices(RingState(4), &opts).len(), 3);
        assert_eq!(available_choices(RingState(4), &opts)[2], Choice::Option(0));
        // odd positions are terminal for the lowest-bit option
        assert_eq!(available_choices(RingState(5), &opts).len(), 2);
    }

    #[test]
    fn zero_budget_takes_no_steps() {
        let c = codec();
        let opt = bit_option(&c, 11, 0.0, 0);
        let mut log = DiffDataset::new(0);
        let run = execute_option(&c, &opt, RingState(10), 0, &mut log).unwrap();
        assert_eq!(run.steps_taken, 0);
        assert_eq!(run.final_state, RingState(10));
        assert_eq!(run.stop, StopReason::BudgetExhausted);
        assert!(log.is_empty());
    }

    #[test]
    fn lowest_bit_option_takes_one_step() {
        let c = codec();
        let opt = bit_option(&c, 11, 0.0, 0);
        for start in [-2048, -6, 0, 2, 1000, 2046] {
            let mut log = DiffDataset::new(0);
            let run = execute_option(&c, &opt, RingState(start), 50, &mut log).unwrap();
            assert_eq!(run.steps_taken, 1);
            assert_eq!(run.stop, StopReason::Terminated);
            assert!(opt.terminates_in(run.final_state));
            assert_eq!(log.len(), 1);
        }
    }

    #[test]
    fn refuses_to_start_in_termination_set() {
        let c = codec();
        let opt = bit_option(&c, 11, 0.0, 0);
        let mut log = DiffDataset::new(0);
        assert!(matches!(
            execute_option(&c, &opt, RingState(1), 10, &mut log),
            Err(PodError::ContractViolation(_))
        ));
    }

    #[test]
    fn longer_option_respects_budget_and_logs_every_step() {
        let c = codec();
        // set bit 5: from 8 the nearest such states are -1 (9 steps) and 32
        let opt = bit_option(&c, 6, 0.99, 0);
        let start = RingState(8);
        assert!(opt.can_initiate(start));
        let mut log = DiffDataset::new(0);
        let full = execute_option_capped(&c, &opt, start, 10_000, &mut log).unwrap();
        assert_eq!(full.stop, StopReason::Terminated);
        assert_eq!(full.steps_taken, 9);
        assert_eq!(full.final_state, RingState(-1));
        assert_eq!(log.len(), full.steps_taken);
        assert_eq!(full.path.last().copied(), Some(full.final_state));

        let budget = full.steps_taken - 1;
        let mut log = DiffDataset::new(0);
        let cut = execute_option(&c, &opt, start, budget, &mut log).unwrap();
        assert_eq!(cut.steps_taken, budget);
        assert_eq!(cut.stop, StopReason::BudgetExhausted);
        assert_eq!(log.len(), budget);
    }
}
