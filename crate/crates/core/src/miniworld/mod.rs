//! A tiny text household: receptacles, portable objects, six task kinds,
//! sub-goal bonuses and a scripted expert.

mod expert;
mod scene;
mod world;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::{
    EnvConfig, EnvError, Environment, GroundTruth, Observation, StepInfo, StepOutcome, Symbols,
    Task,
};

pub use expert::{expert_rollout, plan_length, scripted_expert};
pub use scene::{
    generate_scene, object_type, scene_vocabulary, Capability, Receptacle, SceneConfig,
    SceneObject, TaskKind, TaskSpec,
};
pub use world::{subgoal_ladder, ObjectFlags, Place, Subgoal, Transition, WorldState};

pub const STEP_CAP: usize = 50;
const REWARDS: &[f64] = &[-1.0, 0.0, 1.0, 50.0, 51.0];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MiniworldError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("unsolvable scene: {0}")]
    UnsolvableScene(String),
    #[error("goal already reached")]
    GoalReached,
}

/// What the agent sees: its location, what lies there, what it holds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiniworldSymbols {
    pub goal_text: String,
    pub location: Option<String>,
    /// `Some` when the current receptacle can be opened.
    pub location_open: Option<bool>,
    pub visible: Vec<String>,
    pub holding: Option<String>,
    /// Full receptacle list, only when text descriptions are switched on.
    pub description: Option<Vec<String>>,
}

/// Privileged copy of scene and state for the corrector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiniworldSnapshot {
    pub scene: SceneConfig,
    pub state: WorldState,
    pub history: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct MiniworldEnv {
    config: EnvConfig,
    fixed: Option<SceneConfig>,
    scene: SceneConfig,
    state: WorldState,
    history: Vec<String>,
    done: bool,
    truncated: bool,
    noop_run: usize,
}

impl MiniworldEnv {
    /// A fresh generated scene on every reset.
    pub fn random(config: &EnvConfig) -> Self {
        let scene = generate_scene(0);
        let state = scene.initial_state();
        Self {
            config: config.clone(),
            fixed: None,
            scene,
            state,
            history: Vec::new(),
            done: true,
            truncated: false,
            noop_run: 0,
        }
    }

    /// Always the same scene; the reset seed is ignored.
    pub fn with_scene(scene: SceneConfig, config: &EnvConfig) -> Result<Self, MiniworldError> {
        scene.validate()?;
        let mut env = Self::random(config);
        env.fixed = Some(scene.clone());
        env.scene = scene;
        env.state = env.scene.initial_state();
        Ok(env)
    }

    pub fn scene(&self) -> &SceneConfig {
        &self.scene
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn history(&self) -> &[String] {
        &self.history
    }

    pub fn expert_action(&self) -> Result<String, MiniworldError> {
        scripted_expert(&self.scene, &self.state)
    }

    fn symbols(&self) -> MiniworldSymbols {
        let here = self.state.agent_at.clone();
        MiniworldSymbols {
            goal_text: self.scene.goal_text(),
            location_open: here.as_ref().and_then(|r| self.state.open.get(r).copied()),
            location: here,
            visible: self.scene.visible(&self.state).into_iter().map(String::from).collect(),
            holding: self.state.holding.clone(),
            description: self.config.text_description.then(|| {
                self.scene.receptacles.iter().map(|r| r.name.clone()).collect()
            }),
        }
    }
}

impl Environment for MiniworldEnv {
    fn task(&self) -> Task {
        Task::Miniworld
    }

    fn reset(&mut self, seed: u64) -> Observation {
        self.scene = match &self.fixed {
            Some(s) => s.clone(),
            None => generate_scene(seed),
        };
        self.state = self.scene.initial_state();
        self.history.clear();
        self.done = false;
        self.truncated = false;
        self.noop_run = 0;
        self.observation()
    }

    fn step(&mut self, action: &str) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        let action = action.trim();
        let (next, t) = self.scene.transition(&self.state, action);
        let repeated = self.history.last().is_some_and(|a| a == action);
        self.history.push(action.to_string());
        self.noop_run = match (t.admissible, repeated) {
            (true, _) => 0,
            (false, true) => self.noop_run + 1,
            (false, false) => 1,
        };
        self.state = next;
        if t.goal || self.history.len() >= STEP_CAP {
            self.done = true;
        } else if self.config.truncation
            && (self.history.len() > self.config.max_history
                || self.noop_run >= self.config.repeat_cap)
        {
            self.done = true;
            self.truncated = true;
        }
        Ok(StepOutcome {
            observation: self.observation(),
            reward: t.reward(),
            done: self.done,
            truncated: self.truncated,
            info: StepInfo {
                legal: t.admissible,
                success: t.goal,
                subgoal_hit: t.subgoal,
                timeout: self.done && !t.goal && !self.truncated,
                ..StepInfo::default()
            },
        })
    }

    fn observation(&self) -> Observation {
        Observation::new(
            Task::Miniworld,
            Symbols::Miniworld(self.symbols()),
            self.history.clone(),
        )
    }

    fn legal_actions(&self) -> Vec<String> {
        self.scene.admissible_actions(&self.state)
    }

    fn parse_action(&self, tokens: &[&str]) -> Option<String> {
        let text = tokens.join(" ");
        let ok = matches!(
            tokens,
            ["go", "to", _, _]
                | ["take", _, _, "from", _, _]
                | ["put", _, _, "in/on", _, _]
                | ["open" | "close", _, _]
                | ["clean" | "heat" | "cool", _, _, "with", _, _]
                | ["toggle", _, _, _, _]
        );
        ok.then_some(text)
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn is_truncated(&self) -> bool {
        self.truncated
    }

    fn step_count(&self) -> usize {
        self.history.len()
    }

    fn horizon(&self) -> usize {
        STEP_CAP
    }

    fn ground_truth(&self) -> GroundTruth {
        GroundTruth::Miniworld(Box::new(MiniworldSnapshot {
            scene: self.scene.clone(),
            state: self.state.clone(),
            history: self.history.clone(),
        }))
    }

    fn reward_set(&self) -> &'static [f64] {
        REWARDS
    }
}
