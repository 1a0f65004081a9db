use rand::Rng;

use super::{EnvError, Environment, GroundTruth, Observation, StepInfo, StepOutcome, Symbols, Task};
use crate::seeding::rng_from_seed;

const MAX: u8 = 5;
const HORIZON: usize = 10;
const REWARDS: &[f64] = &[-1.0, 0.0, 1.0];

/// Move `current` onto `target` with "+" and "-" on the integers 0..=5.
#[derive(Debug, Clone)]
pub struct NumberlineEnv {
    target: u8,
    current: u8,
    steps: usize,
    done: bool,
}

impl Default for NumberlineEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl NumberlineEnv {
    pub fn new() -> Self {
        Self {
            target: 0,
            current: 0,
            steps: 0,
            done: true,
        }
    }

    pub fn reset_with(&mut self, target: u8, current: u8) -> Observation {
        assert!(target <= MAX && current <= MAX);
        self.target = target;
        self.current = current;
        self.steps = 0;
        self.done = target == current;
        self.observation()
    }

    pub fn current(&self) -> u8 {
        self.current
    }

    pub fn target(&self) -> u8 {
        self.target
    }
}

impl Environment for NumberlineEnv {
    fn task(&self) -> Task {
        Task::Numberline
    }

    fn reset(&mut self, seed: u64) -> Observation {
        let mut rng = rng_from_seed(seed);
        let target = rng.random_range(0..=MAX);
        let current = loop {
            let c = rng.random_range(0..=MAX);
            if c != target {
                break c;
            }
        };
        self.reset_with(target, current)
    }

    fn step(&mut self, action: &str) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        let next = match action.trim() {
            "+" => self.current.saturating_add(1).min(MAX),
            "-" => self.current.saturating_sub(1),
            other => return Err(EnvError::UnknownToken(other.to_string())),
        };
        self.steps += 1;
        let before = self.current.abs_diff(self.target);
        let after = next.abs_diff(self.target);
        self.current = next;
        let mut info = StepInfo {
            legal: true,
            ..StepInfo::default()
        };
        let reward = if after == 0 {
            self.done = true;
            info.success = true;
            1.0
        } else if after >= before {
            -1.0
        } else {
            0.0
        };
        if !self.done && self.steps >= HORIZON {
            self.done = true;
            info.timeout = true;
        }
        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            done: self.done,
            truncated: false,
            info,
        })
    }

    fn observation(&self) -> Observation {
        let symbols = Symbols::Numberline {
            target: self.target,
            current: self.current,
        };
        Observation::new(Task::Numberline, symbols, Vec::new())
    }

    fn legal_actions(&self) -> Vec<String> {
        vec!["+".into(), "-".into()]
    }

    fn parse_action(&self, tokens: &[&str]) -> Option<String> {
        match tokens {
            [t @ ("+" | "-")] => Some(t.to_string()),
            _ => None,
        }
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn is_truncated(&self) -> bool {
        false
    }

    fn step_count(&self) -> usize {
        self.steps
    }

    fn horizon(&self) -> usize {
        HORIZON
    }

    fn ground_truth(&self) -> GroundTruth {
        GroundTruth::Numberline {
            target: self.target,
            current: self.current,
        }
    }

    fn reward_set(&self) -> &'static [f64] {
        REWARDS
    }
}
