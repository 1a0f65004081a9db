use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{EnvError, Environment, GroundTruth, Observation, StepInfo, StepOutcome, Symbols, Task};
use crate::seeding::rng_from_seed;

const REWARDS: &[f64] = &[-1.0, 0.0, 1.0];
// A hand busts after at most 11 cards, so this never binds.
const HORIZON: usize = 12;

fn card_points(rank: u8) -> u8 {
    rank.min(10)
}

/// Best total of a hand and whether an ace is currently counted as 11.
pub fn hand_total(ranks: &[u8]) -> (u8, bool) {
    let hard: u8 = ranks.iter().map(|&r| card_points(r)).sum();
    if ranks.contains(&1) && hard + 10 <= 21 {
        (hard + 10, true)
    } else {
        (hard, false)
    }
}

/// Textbook basic strategy without doubles or splits.
pub fn basic_strategy(player_total: u8, soft: bool, dealer_up: u8) -> &'static str {
    let up = card_points(dealer_up);
    let up = if up == 1 { 11 } else { up };
    let hit = if soft {
        match player_total {
            t if t >= 19 => false,
            18 => up >= 9,
            _ => true,
        }
    } else {
        match player_total {
            t if t >= 17 => false,
            13..=16 => up >= 7,
            12 => !(4..=6).contains(&up),
            _ => true,
        }
    };
    if hit {
        "hit"
    } else {
        "stand"
    }
}

/// Infinite-deck blackjack: hit or stand against a dealer who draws below 17.
#[derive(Debug, Clone)]
pub struct BlackjackEnv {
    rng: ChaCha8Rng,
    player: Vec<u8>,
    dealer: Vec<u8>,
    steps: usize,
    done: bool,
}

impl Default for BlackjackEnv {
    fn default() -> Self {
        Self::new()
    }
}

impl BlackjackEnv {
    pub fn new() -> Self {
        Self {
            rng: rng_from_seed(0),
            player: Vec::new(),
            dealer: Vec::new(),
            steps: 0,
            done: true,
        }
    }

    fn draw(&mut self) -> u8 {
        self.rng.random_range(1..=13)
    }

    pub fn player(&self) -> &[u8] {
        &self.player
    }

    pub fn dealer(&self) -> &[u8] {
        &self.dealer
    }

    /// Fixed hands for tests; later draws still come from the seeded stream.
    pub fn reset_with(&mut self, seed: u64, player: &[u8], dealer: &[u8]) -> Observation {
        self.rng = rng_from_seed(seed);
        self.player = player.to_vec();
        self.dealer = dealer.to_vec();
        self.steps = 0;
        self.done = false;
        self.observation()
    }

    fn settle(&mut self) -> f64 {
        while hand_total(&self.dealer).0 < 17 {
            let c = self.draw();
            self.dealer.push(c);
        }
        let me = hand_total(&self.player).0;
        let house = hand_total(&self.dealer).0;
        if house > 21 || me > house {
            1.0
        } else if me == house {
            0.0
        } else {
            -1.0
        }
    }
}

impl Environment for BlackjackEnv {
    fn task(&self) -> Task {
        Task::Blackjack
    }

    fn reset(&mut self, seed: u64) -> Observation {
        self.rng = rng_from_seed(seed);
        self.player = vec![self.draw(), self.draw()];
        self.dealer = vec![self.draw(), self.draw()];
        self.steps = 0;
        self.done = false;
        self.observation()
    }

    fn step(&mut self, action: &str) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        let hit = match action.trim() {
            "hit" => true,
            "stand" => false,
            other => return Err(EnvError::UnknownToken(other.to_string())),
        };
        self.steps += 1;
        let reward = if hit {
            let c = self.draw();
            self.player.push(c);
            if hand_total(&self.player).0 > 21 {
                self.done = true;
                -1.0
            } else {
                0.0
            }
        } else {
            self.done = true;
            self.settle()
        };
        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            done: self.done,
            truncated: false,
            info: StepInfo {
                legal: true,
                success: reward > 0.0,
                ..StepInfo::default()
            },
        })
    }

    fn observation(&self) -> Observation {
        let (player_total, soft) = hand_total(&self.player);
        let symbols = Symbols::Blackjack {
            player: self.player.clone(),
            dealer_up: self.dealer.first().copied().unwrap_or(0),
            player_total,
            soft,
        };
        Observation::new(Task::Blackjack, symbols, Vec::new())
    }

    fn legal_actions(&self) -> Vec<String> {
        vec!["stand".into(), "hit".into()]
    }

    fn parse_action(&self, tokens: &[&str]) -> Option<String> {
        match tokens {
            [t @ ("hit" | "stand")] => Some(t.to_string()),
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
        GroundTruth::Blackjack {
            player: self.player.clone(),
            dealer_up: self.dealer.first().copied().unwrap_or(0),
        }
    }

    fn reward_set(&self) -> &'static [f64] {
        REWARDS
    }
}
