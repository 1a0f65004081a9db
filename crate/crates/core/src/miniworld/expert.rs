use super::scene::{Capability, SceneConfig, TaskKind};
use super::world::{Place, WorldState};
use super::MiniworldError;

const PLAN_LIMIT: usize = 200;

impl SceneConfig {
    fn station_for(&self, cap: Capability) -> Option<&str> {
        if cap == Capability::Light {
            let lamp = self.receptacle(&self.task.target_receptacle)?;
            return lamp.has(cap).then_some(lamp.name.as_str());
        }
        self.receptacles
            .iter()
            .find(|r| r.has(cap))
            .map(|r| r.name.as_str())
    }

    fn reach(&self, state: &WorldState, recep: &str, then: String) -> String {
        if state.agent_at.as_deref() != Some(recep) {
            format!("go to {recep}")
        } else if !self.accessible(state, recep) {
            format!("open {recep}")
        } else {
            then
        }
    }

    fn needs_work(&self, state: &WorldState, object: &str) -> bool {
        let in_goal = matches!(&state.object_at[object], Place::In(r) if *r == self.task.target_receptacle);
        let f = &state.flags[object];
        match self.task.kind {
            TaskKind::PickPlace | TaskKind::PickTwo => !in_goal,
            TaskKind::CleanPlace => !(in_goal && f.clean),
            TaskKind::HeatPlace => !(in_goal && f.hot),
            TaskKind::CoolPlace => !(in_goal && f.cold),
            TaskKind::LookLight => true,
        }
    }
}

/// Next action of the scripted expert from any state: drop whatever is in
/// hand if it is useless, fetch a target, use the required station, then
/// place it. Never emits an inadmissible action.
pub fn scripted_expert(scene: &SceneConfig, state: &WorldState) -> Result<String, MiniworldError> {
    if let Some(cap) = scene.task.kind.capability() {
        if scene.station_for(cap).is_none() {
            return Err(MiniworldError::UnsolvableScene(format!(
                "no receptacle can {cap:?}"
            )));
        }
    }
    if scene.target_instances().is_empty() {
        return Err(MiniworldError::UnsolvableScene(format!(
            "no {} in the scene",
            scene.task.target_object
        )));
    }
    if state.goal_reached || scene.goal_met(state) {
        return Err(MiniworldError::GoalReached);
    }
    let goal_rec = scene.task.target_receptacle.as_str();
    if let Some(held) = state.holding.as_deref() {
        if scene.is_target(held) {
            let flags = &state.flags[held];
            let pending = match scene.task.kind {
                TaskKind::CleanPlace if !flags.clean => Some((Capability::Clean, "clean")),
                TaskKind::HeatPlace if !flags.hot => Some((Capability::Heat, "heat")),
                TaskKind::CoolPlace if !flags.cold => Some((Capability::Cool, "cool")),
                TaskKind::LookLight => Some((Capability::Light, "toggle")),
                _ => None,
            };
            return Ok(match pending {
                Some((cap, verb)) => {
                    let station = scene.station_for(cap).unwrap();
                    let act = if verb == "toggle" {
                        format!("toggle {held} {station}")
                    } else {
                        format!("{verb} {held} with {station}")
                    };
                    if state.agent_at.as_deref() == Some(station) {
                        act
                    } else {
                        format!("go to {station}")
                    }
                }
                None => scene.reach(state, goal_rec, format!("put {held} in/on {goal_rec}")),
            });
        }
        // Put the wrong object down where we stand, or at the first place
        // that can take it.
        let here = state
            .agent_at
            .as_deref()
            .filter(|r| scene.receptacle(r).is_some_and(|r| r.holds_objects()));
        let spot = here.unwrap_or_else(|| {
            scene
                .receptacles
                .iter()
                .find(|r| r.holds_objects())
                .map(|r| r.name.as_str())
                .expect("scene has a receptacle that holds objects")
        });
        return Ok(scene.reach(state, spot, format!("put {held} in/on {spot}")));
    }
    let candidate = scene
        .target_instances()
        .into_iter()
        .find(|o| scene.needs_work(state, o))
        .ok_or_else(|| MiniworldError::UnsolvableScene("no target left to move".into()))?;
    let Place::In(at) = &state.object_at[candidate] else {
        unreachable!("hand is empty");
    };
    Ok(scene.reach(state, at, format!("take {candidate} from {at}")))
}

/// Number of expert steps from `state` to the goal.
pub fn plan_length(scene: &SceneConfig, state: &WorldState) -> Option<usize> {
    let mut s = state.clone();
    for n in 0..PLAN_LIMIT {
        if s.goal_reached || scene.goal_met(&s) {
            return Some(n);
        }
        let a = scripted_expert(scene, &s).ok()?;
        s = scene.apply(&s, &a)?;
    }
    None
}

/// Expert trajectory from the initial state until the goal.
pub fn expert_rollout(scene: &SceneConfig) -> Result<Vec<String>, MiniworldError> {
    let mut s = scene.initial_state();
    let mut actions = Vec::new();
    while !s.goal_reached {
        if actions.len() >= PLAN_LIMIT {
            return Err(MiniworldError::UnsolvableScene("expert plan too long".into()));
        }
        let a = scripted_expert(scene, &s)?;
        s = scene.transition(&s, &a).0;
        actions.push(a);
    }
    Ok(actions)
}
