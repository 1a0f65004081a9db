use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scene::{object_type, Capability, SceneConfig, TaskKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Place {
    In(String),
    Held,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectFlags {
    pub clean: bool,
    pub hot: bool,
    pub cold: bool,
    pub examined: bool,
}

/// Physical state of the room plus goal bookkeeping.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldState {
    /// `None` is the middle of the room.
    pub agent_at: Option<String>,
    pub holding: Option<String>,
    pub object_at: BTreeMap<String, Place>,
    pub flags: BTreeMap<String, ObjectFlags>,
    pub open: BTreeMap<String, bool>,
    /// Sub-goals already paid, counted from the start of the ladder.
    pub subgoals_hit: usize,
    pub goal_reached: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subgoal {
    Take,
    Apply,
    Toggle,
    PlaceFirst,
    TakeSecond,
}

impl Subgoal {
    pub fn verb(self) -> &'static str {
        match self {
            Subgoal::Take | Subgoal::TakeSecond => "take",
            Subgoal::Apply => "apply",
            Subgoal::Toggle => "toggle",
            Subgoal::PlaceFirst => "put",
        }
    }
}

pub fn subgoal_ladder(kind: TaskKind) -> &'static [Subgoal] {
    match kind {
        TaskKind::PickPlace => &[Subgoal::Take],
        TaskKind::CleanPlace | TaskKind::HeatPlace | TaskKind::CoolPlace => {
            &[Subgoal::Take, Subgoal::Apply]
        }
        TaskKind::LookLight => &[Subgoal::Take, Subgoal::Toggle],
        TaskKind::PickTwo => &[Subgoal::Take, Subgoal::PlaceFirst, Subgoal::TakeSecond],
    }
}

/// Reward terms produced by one transition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Transition {
    pub admissible: bool,
    pub subgoal: bool,
    pub goal: bool,
}

impl Transition {
    pub fn reward(&self) -> f64 {
        let mut r = 0.0;
        if !self.admissible {
            r -= 1.0;
        }
        if self.subgoal {
            r += 1.0;
        }
        if self.goal {
            r += 50.0;
        }
        r
    }
}

impl SceneConfig {
    pub fn initial_state(&self) -> WorldState {
        WorldState {
            agent_at: None,
            holding: None,
            object_at: self
                .objects
                .iter()
                .map(|o| (o.name.clone(), Place::In(o.receptacle.clone())))
                .collect(),
            flags: self
                .objects
                .iter()
                .map(|o| (o.name.clone(), ObjectFlags::default()))
                .collect(),
            open: self
                .receptacles
                .iter()
                .filter(|r| r.openable)
                .map(|r| (r.name.clone(), false))
                .collect(),
            subgoals_hit: 0,
            goal_reached: false,
        }
    }

    pub fn is_target(&self, object: &str) -> bool {
        object_type(object) == self.task.target_object
    }

    /// Whether objects inside `recep` can be seen and reached.
    pub fn accessible(&self, state: &WorldState, recep: &str) -> bool {
        state.open.get(recep).copied().unwrap_or(true)
    }

    /// Objects lying in `recep`, whether or not it is open.
    pub fn contents<'a>(&self, state: &'a WorldState, recep: &str) -> Vec<&'a str> {
        state
            .object_at
            .iter()
            .filter(|(_, p)| matches!(p, Place::In(r) if r == recep))
            .map(|(o, _)| o.as_str())
            .collect()
    }

    pub fn visible<'a>(&self, state: &'a WorldState) -> Vec<&'a str> {
        match &state.agent_at {
            Some(r) if self.accessible(state, r) => self.contents(state, r),
            _ => Vec::new(),
        }
    }

    fn flag_done(&self, flags: &ObjectFlags) -> bool {
        match self.task.kind {
            TaskKind::CleanPlace => flags.clean,
            TaskKind::HeatPlace => flags.hot,
            TaskKind::CoolPlace => flags.cold,
            TaskKind::LookLight => flags.examined,
            TaskKind::PickPlace | TaskKind::PickTwo => true,
        }
    }

    fn targets_in_goal_receptacle<'a>(&self, state: &'a WorldState) -> Vec<&'a str> {
        self.contents(state, &self.task.target_receptacle)
            .into_iter()
            .filter(|o| self.is_target(o))
            .collect()
    }

    fn held_target<'a>(&self, state: &'a WorldState) -> Option<&'a str> {
        state.holding.as_deref().filter(|o| self.is_target(o))
    }

    pub fn subgoal_met(&self, state: &WorldState, sub: Subgoal) -> bool {
        match sub {
            Subgoal::Take => self.held_target(state).is_some(),
            Subgoal::Apply | Subgoal::Toggle => self
                .held_target(state)
                .is_some_and(|o| self.flag_done(&state.flags[o])),
            Subgoal::PlaceFirst => !self.targets_in_goal_receptacle(state).is_empty(),
            Subgoal::TakeSecond => {
                self.held_target(state).is_some()
                    && !self.targets_in_goal_receptacle(state).is_empty()
            }
        }
    }

    pub fn goal_met(&self, state: &WorldState) -> bool {
        let placed = self.targets_in_goal_receptacle(state);
        match self.task.kind {
            TaskKind::PickPlace => !placed.is_empty(),
            TaskKind::CleanPlace | TaskKind::HeatPlace | TaskKind::CoolPlace => placed
                .iter()
                .any(|o| self.flag_done(&state.flags[*o])),
            TaskKind::LookLight => self
                .held_target(state)
                .is_some_and(|o| state.flags[o].examined),
            TaskKind::PickTwo => placed.len() >= 2,
        }
    }

    /// Every admissible action string, sorted.
    pub fn admissible_actions(&self, state: &WorldState) -> Vec<String> {
        let mut out = Vec::new();
        for r in &self.receptacles {
            if state.agent_at.as_deref() != Some(&r.name) {
                out.push(format!("go to {}", r.name));
            }
        }
        if let Some(here) = state.agent_at.as_deref() {
            let rec = self.receptacle(here).expect("agent at known receptacle");
            let reachable = self.accessible(state, here);
            match &state.holding {
                None => {
                    for o in self.visible(state) {
                        out.push(format!("take {o} from {here}"));
                    }
                }
                Some(o) => {
                    if reachable && rec.holds_objects() {
                        out.push(format!("put {o} in/on {here}"));
                    }
                    for (cap, verb) in [
                        (Capability::Clean, "clean"),
                        (Capability::Heat, "heat"),
                        (Capability::Cool, "cool"),
                    ] {
                        if rec.has(cap) {
                            out.push(format!("{verb} {o} with {here}"));
                        }
                    }
                    if rec.has(Capability::Light) {
                        out.push(format!("toggle {o} {here}"));
                    }
                }
            }
            if let Some(&open) = state.open.get(here) {
                out.push(format!("{} {here}", if open { "close" } else { "open" }));
            }
        }
        out.sort();
        out
    }

    /// Successor state, or `None` when the action is inadmissible.
    pub fn apply(&self, state: &WorldState, action: &str) -> Option<WorldState> {
        if !self.admissible_actions(state).iter().any(|a| a == action) {
            return None;
        }
        let mut next = state.clone();
        let words: Vec<&str> = action.split(' ').collect();
        let held = state.holding.clone();
        match words.as_slice() {
            ["go", "to", r @ ..] => next.agent_at = Some(r.join(" ")),
            ["take", t, n, "from", ..] => {
                let o = format!("{t} {n}");
                next.object_at.insert(o.clone(), Place::Held);
                next.holding = Some(o);
            }
            ["put", ..] => {
                let o = held.expect("put requires a held object");
                let here = state.agent_at.clone().expect("put requires a location");
                next.object_at.insert(o, Place::In(here));
                next.holding = None;
            }
            ["open", ..] | ["close", ..] => {
                let here = state.agent_at.clone().unwrap();
                next.open.insert(here, words[0] == "open");
            }
            [verb @ ("clean" | "heat" | "cool" | "toggle"), ..] => {
                let o = held.expect("interaction requires a held object");
                let f = next.flags.get_mut(&o).unwrap();
                match *verb {
                    "clean" => f.clean = true,
                    "heat" => {
                        f.hot = true;
                        f.cold = false;
                    }
                    "cool" => {
                        f.cold = true;
                        f.hot = false;
                    }
                    _ => f.examined = true,
                }
            }
            _ => unreachable!("admissible action {action:?} has no effect rule"),
        }
        Some(next)
    }

    /// Applies `action` and settles goal bookkeeping. Inadmissible actions
    /// leave the state untouched.
    pub fn transition(&self, state: &WorldState, action: &str) -> (WorldState, Transition) {
        let Some(mut next) = self.apply(state, action) else {
            return (state.clone(), Transition::default());
        };
        let mut t = Transition {
            admissible: true,
            ..Transition::default()
        };
        let ladder = subgoal_ladder(self.task.kind);
        while next.subgoals_hit < ladder.len() && self.subgoal_met(&next, ladder[next.subgoals_hit]) {
            next.subgoals_hit += 1;
            t.subgoal = true;
        }
        if !next.goal_reached && self.goal_met(&next) {
            next.goal_reached = true;
            t.goal = true;
        }
        (next, t)
    }
}
