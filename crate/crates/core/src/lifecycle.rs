//! Task lifecycle state machine.
//!
//! Legal transition graph:
//! `submitted -> working -> {input_required -> working}* -> {completed | failed | canceled}`.
//! Terminal states have no outgoing transitions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifecycleState {
    Submitted,
    Working,
    InputRequired,
    Completed,
    Failed,
    Canceled,
}

impl LifecycleState {
    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            LifecycleState::Completed | LifecycleState::Failed | LifecycleState::Canceled
        )
    }

    pub fn label(self) -> &'static str {
        match self {
            LifecycleState::Submitted => "submitted",
            LifecycleState::Working => "working",
            LifecycleState::InputRequired => "input_required",
            LifecycleState::Completed => "completed",
            LifecycleState::Failed => "failed",
            LifecycleState::Canceled => "canceled",
        }
    }
}

/// True iff `from -> to` is a legal transition.
pub fn transition_allowed(from: LifecycleState, to: LifecycleState) -> bool {
    use LifecycleState::*;
    matches!(
        (from, to),
        (Submitted, Working)
            | (Working, InputRequired)
            | (Working, Completed)
            | (Working, Failed)
            | (Working, Canceled)
            | (InputRequired, Working)
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("illegal lifecycle transition {from:?} -> {to:?}")]
pub struct IllegalTransition {
    pub from: LifecycleState,
    pub to: LifecycleState,
}

/// A task's lifecycle with one timestamp (simulation hours) per transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskLifecycle {
    state: LifecycleState,
    transitions: Vec<(LifecycleState, f64)>,
}

impl TaskLifecycle {
    /// Starts a lifecycle in `submitted` at the given time.
    pub fn submitted(now_hours: f64) -> Self {
        Self {
            state: LifecycleState::Submitted,
            transitions: vec![(LifecycleState::Submitted, now_hours)],
        }
    }

    pub fn state(&self) -> LifecycleState {
        self.state
    }

    pub fn transitions(&self) -> &[(LifecycleState, f64)] {
        &self.transitions
    }

    /// Advances to `to` at `now_hours`, rejecting illegal transitions.
    pub fn advance(&mut self, to: LifecycleState, now_hours: f64) -> Result<(), IllegalTransition> {
        if !transition_allowed(self.state, to) {
            return Err(IllegalTransition {
                from: self.state,
                to,
            });
        }
        self.state = to;
        self.transitions.push((to, now_hours));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ALL: [LifecycleState; 6] = [
        LifecycleState::Submitted,
        LifecycleState::Working,
        LifecycleState::InputRequired,
        LifecycleState::Completed,
        LifecycleState::Failed,
        LifecycleState::Canceled,
    ];

    #[test]
    fn happy_path_with_input_loop() {
        let mut lc = TaskLifecycle::submitted(0.0);
        lc.advance(LifecycleState::Working, 0.1).unwrap();
        lc.advance(LifecycleState::InputRequired, 0.2).unwrap();
        lc.advance(LifecycleState::Working, 0.3).unwrap();
        lc.advance(LifecycleState::Completed, 0.4).unwrap();
        assert!(lc.state().is_terminal());
        assert_eq!(lc.transitions().len(), 5);
    }

    #[test]
    fn terminal_states_reject_everything() {
        for terminal in [
            LifecycleState::Completed,
            LifecycleState::Failed,
            LifecycleState::Canceled,
        ] {
            for to in ALL {
                assert!(!transition_allowed(terminal, to));
            }
        }
    }

    #[test]
    fn submitted_cannot_jump_to_terminal() {
        let mut lc = TaskLifecycle::submitted(0.0);
        assert!(lc.advance(LifecycleState::Completed, 0.1).is_err());
        assert_eq!(lc.state(), LifecycleState::Submitted);
    }

    #[test]
    fn random_transition_fuzzer_never_reaches_illegal_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let mut lc = TaskLifecycle::submitted(0.0);
            let mut now = 0.0;
            for _ in 0..50 {
                let to = ALL[rng.gen_range(0..ALL.len())];
                now += 0.1;
                let before = lc.state();
                match lc.advance(to, now) {
                    Ok(()) => assert!(transition_allowed(before, to)),
                    Err(_) => assert_eq!(lc.state(), before),
                }
            }
            // Every recorded edge must be legal.
            for pair in lc.transitions().windows(2) {
                assert!(transition_allowed(pair[0].0, pair[1].0));
            }
        }
    }
}
