use rand::Rng;

use super::{
    CardSymbols, EnvConfig, EnvError, Environment, GroundTruth, Observation, StepInfo,
    StepOutcome, Symbols, Task,
};
use crate::seeding::rng_from_seed;
use crate::solver24::{
    completable_values, evaluate_formula, values_solvable, CardValue, Formula, FormulaRules,
    Token,
};

const REWARDS: &[f64] = &[-1.0, 0.0, 10.0];
const SUCCESS: f64 = 10.0;
const FAILURE: f64 = -1.0;

/// The MDP state proper; the step counter lives beside it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardGameState {
    pub cards: Vec<CardValue>,
    pub used: Vec<bool>,
    pub formula: Formula,
}

impl CardGameState {
    pub fn values(&self) -> Vec<u8> {
        self.cards.iter().map(|c| c.effective()).collect()
    }

    fn unused_values(&self) -> Vec<u8> {
        let mut v: Vec<u8> = self
            .cards
            .iter()
            .zip(&self.used)
            .filter(|(_, &u)| !u)
            .map(|(c, _)| c.effective())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    fn all_used(&self) -> bool {
        self.used.iter().all(|&u| u)
    }
}

/// Points24 and EZPoints: build a formula over the dealt cards one token
/// at a time, then press "=".
#[derive(Debug, Clone)]
pub struct CardFormulaEnv {
    task: Task,
    rules: FormulaRules,
    horizon: usize,
    truncation: bool,
    misread_prob: f64,
    state: CardGameState,
    perceived: Vec<u8>,
    steps: usize,
    done: bool,
    truncated: bool,
}

impl CardFormulaEnv {
    pub fn points24(config: &EnvConfig) -> Self {
        Self::with_rules(Task::Points24, FormulaRules::POINTS24, 20, config)
    }

    pub fn ezpoints(config: &EnvConfig) -> Self {
        Self::with_rules(Task::Ezpoints, FormulaRules::EZPOINTS, 5, config)
    }

    fn with_rules(task: Task, rules: FormulaRules, horizon: usize, config: &EnvConfig) -> Self {
        Self {
            task,
            rules,
            horizon,
            truncation: config.truncation,
            misread_prob: config.misread_prob,
            state: CardGameState {
                cards: Vec::new(),
                used: Vec::new(),
                formula: Formula::default(),
            },
            perceived: Vec::new(),
            steps: 0,
            done: true,
            truncated: false,
        }
    }

    pub fn rules(&self) -> &FormulaRules {
        &self.rules
    }

    pub fn state(&self) -> &CardGameState {
        &self.state
    }

    /// Starts an episode from a fixed deal instead of a seeded one.
    pub fn reset_with_cards(&mut self, cards: &[CardValue]) -> Observation {
        assert_eq!(cards.len(), self.rules.cards, "wrong number of cards");
        self.state = CardGameState {
            cards: cards.to_vec(),
            used: vec![false; cards.len()],
            formula: Formula::default(),
        };
        self.perceived = self.state.values();
        self.steps = 0;
        self.done = false;
        self.truncated = false;
        self.check_truncation();
        self.observation()
    }

    fn deal(&self, rng: &mut impl Rng) -> Vec<CardValue> {
        let draw = |rng: &mut dyn rand::RngCore| {
            CardValue::new(rng.random_range(1..=13)).expect("rank in range")
        };
        match self.task {
            Task::Ezpoints => loop {
                let cards = vec![draw(rng), draw(rng)];
                let values: Vec<u8> = cards.iter().map(|c| c.effective()).collect();
                if values_solvable(&values, &self.rules) {
                    break cards;
                }
            },
            _ => (0..self.rules.cards).map(|_| draw(rng)).collect(),
        }
    }

    fn check_truncation(&mut self) {
        if !self.truncation || self.done {
            return;
        }
        let alive = completable_values(&self.state.values(), &self.state.formula, &self.rules)
            .unwrap_or(false);
        if !alive {
            self.done = true;
            self.truncated = true;
        }
    }

    fn parse_token(&self, action: &str) -> Option<Token> {
        let token: Token = action.trim().parse().ok()?;
        self.rules.allows(token).then_some(token)
    }

    fn finish(&self) -> (f64, bool, Option<String>) {
        let body = self.state.formula.without_equals();
        match evaluate_formula(&body) {
            Ok(v) => {
                let ok = v == self.rules.target_value() && self.state.all_used();
                (if ok { SUCCESS } else { FAILURE }, ok, Some(v.to_string()))
            }
            Err(_) => (FAILURE, false, None),
        }
    }
}

impl Environment for CardFormulaEnv {
    fn task(&self) -> Task {
        self.task
    }

    fn reset(&mut self, seed: u64) -> Observation {
        let mut rng = rng_from_seed(seed);
        let cards = self.deal(&mut rng);
        self.reset_with_cards(&cards);
        if self.misread_prob > 0.0 {
            for p in &mut self.perceived {
                if rng.random_bool(self.misread_prob.min(1.0)) {
                    // Any other value, uniformly.
                    let other = rng.random_range(1..=9u8);
                    *p = if other >= *p { other + 1 } else { other };
                }
            }
        }
        self.observation()
    }

    fn step(&mut self, action: &str) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        let token = self
            .parse_token(action)
            .ok_or_else(|| EnvError::UnknownToken(action.to_string()))?;
        self.steps += 1;
        let mut info = StepInfo {
            legal: true,
            ..StepInfo::default()
        };
        let mut reward = 0.0;
        match token {
            Token::Num(n) => {
                let slot = self
                    .state
                    .cards
                    .iter()
                    .zip(&self.state.used)
                    .position(|(c, &u)| !u && c.effective() == n);
                match slot {
                    Some(i) => {
                        self.state.used[i] = true;
                        self.state.formula.push(token);
                    }
                    None => {
                        info.legal = false;
                        reward = FAILURE;
                    }
                }
            }
            Token::Equals => {
                self.state.formula.push(token);
                let (r, ok, value) = self.finish();
                reward = r;
                info.success = ok;
                info.formula_value = value;
                self.done = true;
            }
            _ => self.state.formula.push(token),
        }
        if !self.done && self.steps >= self.horizon {
            self.done = true;
            reward = FAILURE;
            info.timeout = true;
        }
        self.check_truncation();
        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            done: self.done,
            truncated: self.truncated,
            info,
        })
    }

    fn observation(&self) -> Observation {
        let symbols = Symbols::Cards(CardSymbols {
            ranks: self.state.cards.iter().map(|c| c.rank()).collect(),
            perceived: self.perceived.clone(),
            formula: self.state.formula.token_strings(),
            target: self.rules.target,
        });
        Observation::new(self.task, symbols, Vec::new())
    }

    fn legal_actions(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .state
            .unused_values()
            .into_iter()
            .map(|v| v.to_string())
            .collect();
        out.extend(self.rules.ops.iter().map(|op| op.symbol().to_string()));
        if self.rules.parens {
            out.push("(".into());
            out.push(")".into());
        }
        out.push("=".into());
        out
    }

    fn parse_action(&self, tokens: &[&str]) -> Option<String> {
        match tokens {
            [one] => self.parse_token(one).map(|t| t.as_str().to_string()),
            _ => None,
        }
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn is_truncated(&self) -> bool {
        self.truncated
    }

    fn step_count(&self) -> usize {
        self.steps
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn ground_truth(&self) -> GroundTruth {
        GroundTruth::Cards {
            values: self.state.values(),
            formula: self.state.formula.clone(),
            rules: self.rules,
        }
    }

    fn reward_set(&self) -> &'static [f64] {
        REWARDS
    }
}
